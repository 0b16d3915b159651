//! Walk trajectories and their line-oriented text format.
//!
//! ```text
//! #rwre-traj v1 dim=1
//! [1]
//! [-1]
//! ```
//!
//! Extra `key=value` pairs may follow `dim` in the header (replica files carry
//! `replica=<i> truncated=<bool>`); they are preserved on read.

use std::io::{BufRead, Write};

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::lattice::{GroupElement, JumpSet};

const MAGIC: &str = "#rwre-traj";
const VERSION: &str = "v1";

/// A walk started at the origin, stored as its sequence of jumps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    dim: usize,
    jumps: Vec<GroupElement>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Self { dim, jumps: Vec::new() }
    }

    pub fn from_jumps(dim: usize, jumps: Vec<GroupElement>) -> Result<Self> {
        if let Some(bad) = jumps.iter().find(|j| j.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        Ok(Self { dim, jumps })
    }

    /// One-dimensional trajectory from integer steps.
    pub fn scalars(xs: impl IntoIterator<Item = i64>) -> Self {
        Self { dim: 1, jumps: xs.into_iter().map(GroupElement::scalar).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn jumps(&self) -> &[GroupElement] {
        &self.jumps
    }

    pub fn push(&mut self, jump: GroupElement) {
        debug_assert_eq!(jump.dim(), self.dim);
        self.jumps.push(jump);
    }

    /// Prefix of the first `n` jumps.
    pub fn prefix(&self, n: usize) -> Trajectory {
        Self { dim: self.dim, jumps: self.jumps[..n.min(self.len())].to_vec() }
    }

    /// `X_0 = 0, X_1, ..., X_L`.
    pub fn positions(&self) -> Vec<GroupElement> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut x = GroupElement::zero(self.dim);
        out.push(x.clone());
        for j in &self.jumps {
            x.shift(j).expect("dimension checked on construction");
            out.push(x.clone());
        }
        out
    }

    /// The distinct jumps that occur.
    pub fn alphabet(&self) -> JumpSet {
        let distinct: FxHashSet<&GroupElement> = self.jumps.iter().collect();
        JumpSet::new(distinct.into_iter().cloned()).expect("uniform dimension")
    }

    /// Errors with the 1-based file line (header is line 1) of the first jump outside `allowed`.
    pub fn check_alphabet(&self, allowed: &JumpSet) -> Result<()> {
        match self.jumps.iter().position(|j| !allowed.contains(j)) {
            None => Ok(()),
            Some(i) => Err(Error::Format {
                line: i + 2,
                message: format!("jump {} is not in the declared jump set", self.jumps[i]),
            }),
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W, extra_header: &[(&str, String)]) -> std::io::Result<()> {
        write!(w, "{MAGIC} {VERSION} dim={}", self.dim)?;
        for (k, v) in extra_header {
            write!(w, " {k}={v}")?;
        }
        writeln!(w)?;
        for j in &self.jumps {
            writeln!(w, "{j}")?;
        }
        Ok(())
    }

    pub fn to_text(&self, extra_header: &[(&str, String)]) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf, extra_header).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    /// Parses a trajectory file, returning the extra header fields alongside.
    pub fn read_from<R: BufRead>(r: R) -> Result<(Self, Vec<(String, String)>)> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, Ok(h))) => h,
            Some((_, Err(e))) => return Err(Error::Format { line: 1, message: e.to_string() }),
            None => return Err(Error::Format { line: 1, message: "missing header".into() }),
        };
        let (dim, extra) = parse_header(&header)?;
        let mut traj = Trajectory::new(dim);
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Format { line: lineno, message: e.to_string() })?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            let jump: GroupElement =
                text.parse().map_err(|message| Error::Format { line: lineno, message })?;
            if jump.dim() != dim {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("jump {jump} has dimension {}, header says {dim}", jump.dim()),
                });
            }
            traj.jumps.push(jump);
        }
        Ok((traj, extra))
    }

    pub fn from_text(s: &str) -> Result<(Self, Vec<(String, String)>)> {
        Self::read_from(s.as_bytes())
    }
}

fn parse_header(header: &str) -> Result<(usize, Vec<(String, String)>)> {
    let bad = |message: String| Error::Format { line: 1, message };
    let mut fields = header.split_whitespace();
    if fields.next() != Some(MAGIC) {
        return Err(bad(format!("expected `{MAGIC} {VERSION} dim=<d>` header")));
    }
    match fields.next() {
        Some(VERSION) => {}
        other => return Err(bad(format!("unsupported version {other:?}"))),
    }
    let mut dim = None;
    let mut extra = Vec::new();
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| bad(format!("malformed header field `{f}`")))?;
        if k == "dim" {
            let d: usize = v.parse().map_err(|_| bad(format!("bad dimension `{v}`")))?;
            if d == 0 {
                return Err(bad("dimension must be positive".into()));
            }
            dim = Some(d);
        } else {
            extra.push((k.to_string(), v.to_string()));
        }
    }
    let dim = dim.ok_or_else(|| bad("header lacks dim=<d>".into()))?;
    Ok((dim, extra))
}
