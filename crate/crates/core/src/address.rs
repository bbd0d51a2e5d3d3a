//! Binary child addresses for vertices of the α–β tree and the cylinder
//! sets they index on its boundary.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Which child edge was taken: the α-scaled one or the β-scaled one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Alpha,
    Beta,
}

impl Branch {
    pub fn symbol(self) -> char {
        match self {
            Branch::Alpha => 'a',
            Branch::Beta => 'b',
        }
    }

    pub fn from_symbol(c: char) -> Result<Self, Error> {
        match c {
            'a' | 'α' => Ok(Branch::Alpha),
            'b' | 'β' => Ok(Branch::Beta),
            other => Err(Error::InvalidSymbol(other)),
        }
    }

    pub fn sibling(self) -> Self {
        match self {
            Branch::Alpha => Branch::Beta,
            Branch::Beta => Branch::Alpha,
        }
    }
}

/// Finite child sequence starting at `v₁`. The empty address is `v₁`
/// itself, and as a prefix it names the whole Cantor part of the boundary.
///
/// Written as a string over `{a, b}`; the empty address prints as `-`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SigmaAddress(Vec<Branch>);

impl SigmaAddress {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn from_branches(branches: Vec<Branch>) -> Self {
        Self(branches)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, b: Branch) -> Self {
        let mut v = self.0.clone();
        v.push(b);
        Self(v)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(Self(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last(&self) -> Option<Branch> {
        self.0.last().copied()
    }

    pub fn starts_with(&self, prefix: &SigmaAddress) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// All addresses of exactly `len` symbols, in lexicographic order (`a < b`).
    pub fn all_of_length(len: usize) -> Vec<SigmaAddress> {
        let mut out = vec![SigmaAddress::root()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|p| [p.child(Branch::Alpha), p.child(Branch::Beta)])
                .collect();
        }
        out
    }
}

impl fmt::Display for SigmaAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for b in &self.0 {
            write!(f, "{}", b.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for SigmaAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "-" || s.is_empty() {
            return Ok(Self::root());
        }
        s.chars().map(Branch::from_symbol).collect::<Result<Vec<_>, _>>().map(Self)
    }
}
