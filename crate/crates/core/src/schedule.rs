//! Parameters, actions and the TCSCHED text format.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetworkParams {
    pub tc: usize,
    pub tm: usize,
}

impl NetworkParams {
    pub fn new(tc: usize, tm: usize) -> Result<Self> {
        if tc == 0 || tm == 0 {
            return Err(Error::Params(format!("t_c and t_m must be positive, got ({tc},{tm})")));
        }
        Ok(NetworkParams { tc, tm })
    }

    pub fn min(&self) -> usize {
        self.tc.min(self.tm)
    }

    /// True when neither cost divides the other.
    pub fn indivisible(&self) -> bool {
        !self.tc.is_multiple_of(self.tm) && !self.tm.is_multiple_of(self.tc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    /// `token` names the token by its lowest singleton id; `None` sends the oldest.
    Send { to: NodeId, token: Option<NodeId> },
    Compute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub start: usize,
    pub node: NodeId,
    pub kind: ActionKind,
}

impl Action {
    pub fn send(start: usize, node: NodeId, to: NodeId) -> Self {
        Action { start, node, kind: ActionKind::Send { to, token: None } }
    }

    pub fn send_token(start: usize, node: NodeId, to: NodeId, token: NodeId) -> Self {
        Action { start, node, kind: ActionKind::Send { to, token: Some(token) } }
    }

    pub fn compute(start: usize, node: NodeId) -> Self {
        Action { start, node, kind: ActionKind::Compute }
    }

    pub fn duration(&self, p: NetworkParams) -> usize {
        match self.kind {
            ActionKind::Send { .. } => p.tm,
            ActionKind::Compute => p.tc,
        }
    }

    /// Last occupied round.
    pub fn end(&self, p: NetworkParams) -> usize {
        self.start + self.duration(p) - 1
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ActionKind::Send { to, token: None } => write!(f, "{} {} SEND {}", self.start, self.node, to),
            ActionKind::Send { to, token: Some(k) } => {
                write!(f, "{} {} SEND {} token={}", self.start, self.node, to, k)
            }
            ActionKind::Compute => write!(f, "{} {} COMPUTE", self.start, self.node),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub actions: Vec<Action>,
    pub length: usize,
}

impl Schedule {
    pub fn new(actions: Vec<Action>, length: usize) -> Self {
        let mut s = Schedule { actions, length };
        s.sort();
        s
    }

    pub fn empty() -> Self {
        Schedule::default()
    }

    pub fn sort(&mut self) {
        self.actions.sort_by_key(|a| (a.start, a.node));
    }

    /// Last round occupied by any action, 0 when empty.
    pub fn last_occupied(&self, p: NetworkParams) -> usize {
        self.actions.iter().map(|a| a.end(p)).max().unwrap_or(0)
    }

    /// Appends `frag` so that its round 1 lands on round `self.length + 1`.
    pub fn append(&mut self, frag: &Schedule) {
        let off = self.length;
        self.actions.extend(frag.actions.iter().map(|a| Action { start: a.start + off, ..*a }));
        self.length += frag.length;
    }

    pub fn parse(text: &str) -> Result<Schedule> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let bad = |line: usize, msg: String| Error::Parse { line, msg };
        match lines.next() {
            Some((_, "TCSCHED 1")) => {}
            Some((line, l)) => return Err(bad(line, format!("expected header 'TCSCHED 1', got {l:?}"))),
            None => return Err(bad(0, "empty schedule file".into())),
        }
        let (line, l) = lines.next().ok_or_else(|| bad(0, "missing length line".into()))?;
        let length = match l.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["length", v] => v.parse::<usize>().map_err(|e| bad(line, e.to_string()))?,
            _ => return Err(bad(line, format!("expected 'length L', got {l:?}"))),
        };
        let num = |line: usize, s: &str| s.parse::<usize>().map_err(|e| bad(line, format!("{s:?}: {e}")));
        let mut actions = Vec::new();
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            let a = match f.as_slice() {
                [r, v, "COMPUTE"] => Action::compute(num(line, r)?, num(line, v)?),
                [r, v, "SEND", u] => Action::send(num(line, r)?, num(line, v)?, num(line, u)?),
                [r, v, "SEND", u, tok] => {
                    let k = tok
                        .strip_prefix("token=")
                        .ok_or_else(|| bad(line, format!("unknown field {tok:?}")))?;
                    Action::send_token(num(line, r)?, num(line, v)?, num(line, u)?, num(line, k)?)
                }
                _ => return Err(bad(line, format!("malformed action {l:?}"))),
            };
            actions.push(a);
        }
        Ok(Schedule::new(actions, length))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("TCSCHED 1\nlength {}\n", self.length);
        for a in &self.actions {
            writeln!(s, "{a}").unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let s = Schedule::new(
            vec![Action::compute(2, 0), Action::send(1, 1, 0), Action::send_token(1, 2, 0, 2)],
            2,
        );
        let t = s.to_text();
        assert_eq!(t, "TCSCHED 1\nlength 2\n1 1 SEND 0\n1 2 SEND 0 token=2\n2 0 COMPUTE\n");
        assert_eq!(Schedule::parse(&t).unwrap(), s);
    }

    #[test]
    fn rejects_trailing_fields() {
        assert!(Schedule::parse("TCSCHED 1\nlength 2\n1 1 SEND 0 extra\n").is_err());
        assert!(Schedule::parse("TCSCHED 1\nlength 2\n1 1 COMPUTE 3\n").is_err());
        assert!(Schedule::parse("TCSCHED 2\nlength 2\n").is_err());
    }

    #[test]
    fn params_positive() {
        assert!(NetworkParams::new(0, 1).is_err());
        assert!(NetworkParams::new(2, 3).unwrap().indivisible());
        assert!(!NetworkParams::new(2, 4).unwrap().indivisible());
    }
}
