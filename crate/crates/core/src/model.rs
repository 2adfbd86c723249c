//! The XY Hamiltonian, sublattice product states and the observables used
//! throughout the toolkit.
//!
//! Spin operators are `S^a = sigma^a / 2`; `|0>` is spin up (`sigma^z = +1`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Bond, Lattice, Sublattice};
use crate::state::{PureState, C64};

/// One `coefficient * (S^x_a S^x_b + S^y_a S^y_b)` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XyTerm {
    pub bond: Bond,
    pub coefficient: f64,
}

/// `H = -J sum_<ij> (S^x_i S^x_j + S^y_i S^y_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinHamiltonian {
    lattice: Lattice,
    coupling: f64,
    terms: Vec<XyTerm>,
}

impl SpinHamiltonian {
    pub fn xy(lattice: &Lattice, coupling: f64) -> Result<Self> {
        if coupling == 0.0 || !coupling.is_finite() {
            return Err(Error::param("J", format!("must be finite and nonzero, got {coupling}")));
        }
        let terms = lattice
            .bonds()
            .iter()
            .map(|&bond| XyTerm {
                bond,
                coefficient: -coupling,
            })
            .collect();
        Ok(SpinHamiltonian {
            lattice: lattice.clone(),
            coupling,
            terms,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn terms(&self) -> &[XyTerm] {
        &self.terms
    }

    pub fn num_qubits(&self) -> usize {
        self.lattice.num_sites()
    }

    /// Terms belonging to color group `g`.
    pub fn group_terms(&self, g: usize) -> Vec<XyTerm> {
        self.lattice.groups()[g]
            .bonds
            .iter()
            .map(|&bond| XyTerm {
                bond,
                coefficient: -self.coupling,
            })
            .collect()
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        apply_xy_terms(&self.terms, psi)
    }

    pub fn expectation(&self, state: &PureState) -> f64 {
        let psi = state.amplitudes();
        self.terms
            .iter()
            .map(|t| t.coefficient * 0.5 * flip_flop_expectation(psi, t.bond))
            .sum()
    }
}

/// `<psi| (sigma^+_a sigma^-_b + h.c.) |psi>`, i.e. twice `<S^x S^x + S^y S^y>`.
fn flip_flop_expectation(psi: &[C64], bond: Bond) -> f64 {
    let mask = bond.mask();
    let bit_a = 1usize << bond.a;
    let mut acc = 0.0;
    for (b, amp) in psi.iter().enumerate() {
        let pair = b & mask;
        if pair == bit_a {
            // b has (a=1, b=0); the partner has (a=0, b=1).
            acc += 2.0 * (psi[b ^ mask].conj() * amp).re;
        }
    }
    acc
}

pub(crate) fn apply_xy_terms(terms: &[XyTerm], psi: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for t in terms {
        let mask = t.bond.mask();
        let c = 0.5 * t.coefficient;
        for (b, amp) in psi.iter().enumerate() {
            let pair = b & mask;
            if pair != 0 && pair != mask {
                out[b ^ mask] += *amp * c;
            }
        }
    }
    out
}

/// Sublattice product state: sites with even `row + col` hold `|theta, 0>`,
/// the others `|pi - theta, phi>`, where
/// `|theta, phi> = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductStateSpec {
    pub theta: f64,
    pub phi: f64,
}

impl ProductStateSpec {
    pub fn new(theta: f64, phi: f64) -> Self {
        ProductStateSpec { theta, phi }
    }

    /// `|X+>`, all spins along +x.
    pub fn x_plus() -> Self {
        ProductStateSpec::new(PI / 2.0, 0.0)
    }

    fn site_angles(&self, sub: Sublattice) -> (f64, f64) {
        match sub {
            Sublattice::A => (self.theta, 0.0),
            Sublattice::B => (PI - self.theta, self.phi),
        }
    }

    fn bloch(&self, sub: Sublattice) -> [f64; 3] {
        let (t, p) = self.site_angles(sub);
        [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
    }

    pub fn state(&self, lattice: &Lattice) -> PureState {
        let factors: Vec<_> = (0..lattice.num_sites())
            .map(|i| {
                let (t, p) = self.site_angles(lattice.sublattice(i));
                (C64::new((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), p))
            })
            .collect();
        PureState::product(&factors)
    }

    /// Mean energy from single-site spin expectations; exact for product states.
    pub fn energy(&self, h: &SpinHamiltonian) -> f64 {
        let lat = h.lattice();
        h.terms()
            .iter()
            .map(|t| {
                let sa = self.bloch(lat.sublattice(t.bond.a));
                let sb = self.bloch(lat.sublattice(t.bond.b));
                t.coefficient * 0.25 * (sa[0] * sb[0] + sa[1] * sb[1])
            })
            .sum()
    }
}

/// Builds the product state described by `spec` on `lattice`.
pub fn product_state(spec: &ProductStateSpec, lattice: &Lattice) -> PureState {
    spec.state(lattice)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::X => [[o, one], [one, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[one, o], [o, -one]],
        }
    }
}

/// `prefactor * P_1 P_2 ...` for single-site Paulis on distinct sites.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliObservable {
    support: Vec<(usize, Pauli)>,
    prefactor: f64,
}

impl PauliObservable {
    pub fn new(ops: &[(usize, Pauli)], prefactor: f64) -> Result<Self> {
        let mut support = ops.to_vec();
        support.sort_by_key(|&(s, _)| s);
        if support.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::param("observable", "repeated site in Pauli string"));
        }
        if !prefactor.is_finite() {
            return Err(Error::param("observable", "prefactor must be finite"));
        }
        Ok(PauliObservable { support, prefactor })
    }

    pub fn identity() -> Self {
        PauliObservable {
            support: Vec::new(),
            prefactor: 1.0,
        }
    }

    /// `P_a P_b` on the two sites of `bond`.
    pub fn two_site(p: Pauli, bond: Bond) -> Self {
        PauliObservable {
            support: vec![(bond.a, p), (bond.b, p)],
            prefactor: 1.0,
        }
    }

    pub fn support(&self) -> &[(usize, Pauli)] {
        &self.support
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn is_identity(&self) -> bool {
        self.support.is_empty() && self.prefactor == 1.0
    }

    /// Hermitian Pauli strings are unitary exactly when `|prefactor| = 1`.
    pub fn is_unitary(&self) -> bool {
        self.prefactor.abs() == 1.0
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        if self.is_unitary() {
            Ok(())
        } else {
            Err(Error::NonUnitaryObservable(self.prefactor))
        }
    }

    pub fn max_site(&self) -> Option<usize> {
        self.support.last().map(|&(s, _)| s)
    }

    fn masks(&self) -> (usize, usize, u32) {
        let mut x = 0;
        let mut z = 0;
        let mut ny = 0;
        for &(s, p) in &self.support {
            match p {
                Pauli::X => x |= 1 << s,
                Pauli::Y => {
                    x |= 1 << s;
                    z |= 1 << s;
                    ny += 1;
                }
                Pauli::Z => z |= 1 << s,
            }
        }
        (x, z, ny)
    }

    /// Applies the string in place, including the prefactor.
    pub fn apply_in_place(&self, psi: &mut [C64]) {
        let (x, z, ny) = self.masks();
        let global = C64::new(0.0, 1.0).powu(ny) * self.prefactor;
        let phase = |b: usize| {
            if (b & z).count_ones().is_multiple_of(2) {
                global
            } else {
                -global
            }
        };
        if x == 0 {
            for (b, a) in psi.iter_mut().enumerate() {
                *a *= phase(b);
            }
            return;
        }
        for b in 0..psi.len() {
            let c = b ^ x;
            if b < c {
                let (vb, vc) = (psi[b], psi[c]);
                psi[c] = vb * phase(b);
                psi[b] = vc * phase(c);
            }
        }
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = psi.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    /// `<phi| A |psi>`.
    pub fn matrix_element(&self, phi: &[C64], psi: &[C64]) -> C64 {
        let (x, z, ny) = self.masks();
        let global = C64::new(0.0, 1.0).powu(ny) * self.prefactor;
        let mut acc = C64::new(0.0, 0.0);
        for (b, amp) in psi.iter().enumerate() {
            let term = phi[b ^ x].conj() * amp;
            if (b & z).count_ones() % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc * global
    }

    pub fn expectation(&self, state: &PureState) -> f64 {
        let psi = state.amplitudes();
        self.matrix_element(psi, psi).re
    }

    /// Whether the string commutes with total `sigma^z`.
    pub fn conserves_mz(&self) -> bool {
        self.masks().0 == 0
    }
}

impl fmt::Display for PauliObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prefactor != 1.0 {
            if self.prefactor == -1.0 {
                write!(f, "-")?;
            } else {
                write!(f, "{}*", self.prefactor)?;
            }
        }
        if self.support.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self.support.iter().map(|(s, p)| format!("{p:?}{s}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for PauliObservable {
    type Err = Error;

    /// Parses strings like `"X5 X6"`, `"-Z0 Z1"`, `"0.5*Y3"` or `"I"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: String| Error::param("observable", why);
        let mut text = s.trim();
        let mut prefactor = 1.0;
        if let Some((pre, rest)) = text.split_once('*') {
            prefactor = pre
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("bad prefactor in `{s}`")))?;
            text = rest.trim();
        } else if let Some(rest) = text.strip_prefix('-') {
            prefactor = -1.0;
            text = rest.trim();
        }
        if text == "I" || text.is_empty() {
            return PauliObservable::new(&[], prefactor);
        }
        let mut ops = Vec::new();
        for tok in text.split_whitespace() {
            let mut chars = tok.chars();
            let p = match chars.next() {
                Some('X') => Pauli::X,
                Some('Y') => Pauli::Y,
                Some('Z') => Pauli::Z,
                _ => return Err(bad(format!("bad Pauli factor `{tok}`"))),
            };
            let site = chars
                .as_str()
                .parse::<usize>()
                .map_err(|_| bad(format!("bad site in `{tok}`")))?;
            ops.push((site, p));
        }
        PauliObservable::new(&ops, prefactor)
    }
}

impl Serialize for PauliObservable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliObservable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// `4 [<(sum S^x)^2> + <(sum S^y)^2>] / N^2`.
pub fn mean_squared_inplane_magnetization(state: &PureState) -> f64 {
    let n = state.num_qubits();
    let psi = state.amplitudes();
    // (S^x)^2 + (S^y)^2 = S^- S^+ + S^z, so the expectation is |S^+ psi|^2 + <S^z>.
    let raised = raise_all(psi, n);
    let raised_norm: f64 = raised.iter().map(|a| a.norm_sqr()).sum();
    let sz = 0.5 * state.total_z();
    4.0 * (raised_norm + sz) / (n * n) as f64
}

/// `sum_i |0><1|_i` applied to `psi`.
fn raise_all(psi: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for (b, amp) in psi.iter().enumerate() {
        for i in 0..n {
            let bit = 1usize << i;
            if b & bit != 0 {
                out[b ^ bit] += amp;
            }
        }
    }
    out
}

fn lower_all(psi: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for (b, amp) in psi.iter().enumerate() {
        for i in 0..n {
            let bit = 1usize << i;
            if b & bit == 0 {
                out[b | bit] += amp;
            }
        }
    }
    out
}

pub fn observable_expectation(state: &PureState, obs: &PauliObservable) -> f64 {
    obs.expectation(state)
}

/// Observables the analysis layers can time-average and evaluate in
/// eigenbases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `m_x^2 + m_y^2`.
    InplaneMagnetization,
    Pauli(PauliObservable),
}

impl Observable {
    pub fn expectation(&self, state: &PureState) -> f64 {
        match self {
            Observable::InplaneMagnetization => mean_squared_inplane_magnetization(state),
            Observable::Pauli(p) => p.expectation(state),
        }
    }

    /// Operator norm on `n` qubits.
    pub fn norm(&self, n: usize) -> f64 {
        match self {
            Observable::InplaneMagnetization => 1.0 + 1.0 / n as f64,
            Observable::Pauli(p) => p.prefactor().abs(),
        }
    }

    /// Value in the infinite-temperature state on `n` qubits.
    pub fn infinite_temperature_value(&self, n: usize) -> f64 {
        match self {
            Observable::InplaneMagnetization => 2.0 / n as f64,
            Observable::Pauli(p) if p.support().is_empty() => p.prefactor(),
            Observable::Pauli(_) => 0.0,
        }
    }

    pub fn conserves_mz(&self) -> bool {
        match self {
            Observable::InplaneMagnetization => true,
            Observable::Pauli(p) => p.conserves_mz(),
        }
    }

    pub fn apply(&self, psi: &[C64], n: usize) -> Vec<C64> {
        match self {
            Observable::InplaneMagnetization => {
                let raised = raise_all(psi, n);
                let mut out = lower_all(&raised, n);
                for (b, (o, a)) in out.iter_mut().zip(psi).enumerate() {
                    let sz = 0.5 * (n as f64 - 2.0 * b.count_ones() as f64);
                    *o += a * sz;
                }
                let scale = 4.0 / (n * n) as f64;
                out.iter_mut().for_each(|o| *o *= scale);
                out
            }
            Observable::Pauli(p) => p.apply(psi),
        }
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        if let Observable::Pauli(p) = self {
            if let Some(s) = p.max_site() {
                if s >= n {
                    return Err(Error::param(
                        "observable",
                        format!("site {s} outside a {n}-site lattice"),
                    ));
                }
            }
        }
        Ok(())
    }
}
