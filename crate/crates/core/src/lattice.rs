//! Open-boundary square lattice and the bond coloring used by the Trotter
//! schedule.
//!
//! Sites are numbered row-major, `site = row * cols + col`, and site `i`
//! is stored in bit `i` of a computational basis index. Bonds are split
//! into color groups of mutually disjoint pairs. Within a Trotter step the
//! groups are applied in the fixed order horizontal-even, horizontal-odd,
//! vertical-even, vertical-odd, where the parity of a bond is the parity of
//! `row + col` of its lower-indexed site. The Floquet unitary depends on
//! this order, so anything comparing against it (Magnus terms, dense
//! propagators) must iterate groups in the same order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on lattice size for statevector simulation.
pub const DEFAULT_QUBIT_CAP: usize = 26;

/// Nearest-neighbour pair with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
}

impl Bond {
    pub fn new(i: usize, j: usize) -> Self {
        Bond {
            a: i.min(j),
            b: i.max(j),
        }
    }

    pub fn touches(&self, site: usize) -> bool {
        self.a == site || self.b == site
    }

    pub fn mask(&self) -> usize {
        (1 << self.a) | (1 << self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondGroupKind {
    HorizontalEven,
    HorizontalOdd,
    VerticalEven,
    VerticalOdd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondGroup {
    pub kind: BondGroupKind,
    pub bonds: Vec<Bond>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sublattice {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDims {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "LatticeDims", try_from = "LatticeDims")]
pub struct Lattice {
    rows: usize,
    cols: usize,
    bonds: Vec<Bond>,
    groups: Vec<BondGroup>,
}

impl Lattice {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Self::with_qubit_cap(rows, cols, DEFAULT_QUBIT_CAP)
    }

    pub fn with_qubit_cap(rows: usize, cols: usize, cap: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidLattice(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let n = rows * cols;
        if n < 2 {
            return Err(Error::InvalidLattice("a lattice needs at least two sites".into()));
        }
        if n > cap {
            return Err(Error::QubitCapExceeded { requested: n, cap });
        }

        let site = |r: usize, c: usize| r * cols + c;
        let mut horizontal = [Vec::new(), Vec::new()];
        let mut vertical = [Vec::new(), Vec::new()];
        for r in 0..rows {
            for c in 0..cols {
                let parity = (r + c) % 2;
                if c + 1 < cols {
                    horizontal[parity].push(Bond::new(site(r, c), site(r, c + 1)));
                }
                if r + 1 < rows {
                    vertical[parity].push(Bond::new(site(r, c), site(r + 1, c)));
                }
            }
        }

        let [h_even, h_odd] = horizontal;
        let [v_even, v_odd] = vertical;
        let mut groups = Vec::with_capacity(4);
        if cols > 1 {
            groups.push(BondGroup {
                kind: BondGroupKind::HorizontalEven,
                bonds: h_even,
            });
            groups.push(BondGroup {
                kind: BondGroupKind::HorizontalOdd,
                bonds: h_odd,
            });
        }
        if rows > 1 {
            groups.push(BondGroup {
                kind: BondGroupKind::VerticalEven,
                bonds: v_even,
            });
            groups.push(BondGroup {
                kind: BondGroupKind::VerticalOdd,
                bonds: v_odd,
            });
        }

        let bonds = groups.iter().flat_map(|g| g.bonds.iter().copied()).collect();
        Ok(Lattice {
            rows,
            cols,
            bonds,
            groups,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.cols, site % self.cols)
    }

    /// All bonds, grouped in Trotter order.
    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Color groups in the order they are applied within a Trotter step.
    pub fn groups(&self) -> &[BondGroup] {
        &self.groups
    }

    pub fn sublattice(&self, site: usize) -> Sublattice {
        let (r, c) = self.coords(site);
        if (r + c) % 2 == 0 {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }

    /// The horizontal bond closest to the lattice centre, used as the
    /// default two-site correlator.
    pub fn central_bond(&self) -> Bond {
        if self.cols > 1 {
            let r = (self.rows - 1) / 2;
            let c = (self.cols - 2) / 2;
            Bond::new(self.site(r, c), self.site(r, c + 1))
        } else {
            let r = (self.rows - 2) / 2;
            Bond::new(self.site(r, 0), self.site(r + 1, 0))
        }
    }
}

impl From<Lattice> for LatticeDims {
    fn from(l: Lattice) -> Self {
        LatticeDims {
            rows: l.rows,
            cols: l.cols,
        }
    }
}

impl TryFrom<LatticeDims> for Lattice {
    type Error = Error;

    fn try_from(d: LatticeDims) -> Result<Self> {
        Lattice::new(d.rows, d.cols)
    }
}
