//! Mixed-field Ising chain, agent operators and ground state.
//!
//! Sites are numbered `1..=N`. The chain Hamiltonian is
//!
//! ```text
//! H = -J sum_{n<N} Z_n Z_{n+1} - h sum_n Z_n - g sum_n X_n
//! ```
//!
//! with open boundaries. Bob's local Hamiltonian is
//! `H_B = -J Z_B (Z_{B-1} + Z_{B+1}) - h Z_B - g X_B` and Alice's is
//! `H_A = -g X_A`.

use std::fmt;
use std::str::FromStr;

use faer::c64;

use crate::error::{Error, Result};
use crate::kernel::{eigh, CMatrix, CVector, Spectrum, MAX_SITES, ONE, ZERO};

/// Gap below which the ground state is flagged as degenerate.
pub const GROUND_DEGENERACY_GAP: f64 = 1e-10;

/// Single-site Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// Action on a single qubit basis state: `P|bit> = phase |bit ^ flip>`.
    #[inline]
    pub fn act(self, bit: usize) -> (usize, c64) {
        match self {
            Pauli::I => (0, ONE),
            Pauli::X => (1, ONE),
            Pauli::Y => (1, if bit == 0 { c64::new(0.0, 1.0) } else { c64::new(0.0, -1.0) }),
            Pauli::Z => (0, if bit == 0 { ONE } else { -ONE }),
        }
    }

    /// The 2x2 matrix.
    pub fn matrix(self) -> CMatrix {
        CMatrix::from_fn(2, |r, c| {
            let (flip, phase) = self.act(c);
            if r == c ^ flip {
                phase
            } else {
                ZERO
            }
        })
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for Pauli {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "I" | "i" => Ok(Pauli::I),
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(format!("unknown Pauli label {other:?} (expected I, X, Y or Z)")),
        }
    }
}

/// Bit position of a 1-based site in the basis index (site 1 is most significant).
#[inline]
fn bit_of(n_sites: usize, site: usize) -> usize {
    n_sites - site
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites == 0 {
        return Err(Error::invalid("n_sites", "must be at least 1"));
    }
    if n_sites > MAX_SITES {
        return Err(Error::Capacity {
            n_sites,
            max: MAX_SITES,
        });
    }
    Ok(())
}

/// Adds `coef * P` to `m` for the Pauli string `P`, one entry per column.
fn accumulate(m: &mut CMatrix, n_sites: usize, coef: c64, ops: &[(usize, Pauli)]) {
    let dim = 1usize << n_sites;
    for col in 0..dim {
        let mut row = col;
        let mut phase = coef;
        for &(site, p) in ops {
            let pos = bit_of(n_sites, site);
            let (flip, ph) = p.act((row >> pos) & 1);
            row ^= flip << pos;
            phase *= ph;
        }
        m.add_at(row, col, phase);
    }
}

/// Pauli string on `n_sites` qubits; unassigned sites carry the identity.
///
/// Repeated sites are multiplied in the order given.
pub fn pauli_string(n_sites: usize, assignment: &[(usize, Pauli)]) -> Result<CMatrix> {
    check_sites(n_sites)?;
    for &(site, _) in assignment {
        if site == 0 || site > n_sites {
            return Err(Error::SiteOutOfRange { site, n_sites });
        }
    }
    let mut m = CMatrix::zeros(1 << n_sites);
    // operators act right-to-left on kets
    let ops: Vec<_> = assignment.iter().rev().copied().collect();
    accumulate(&mut m, n_sites, ONE, &ops);
    Ok(m)
}

/// Applies a single-site Pauli to a state vector in `O(2^N)`.
pub fn apply_site_pauli(v: &CVector, n_sites: usize, site: usize, p: Pauli) -> CVector {
    let pos = bit_of(n_sites, site);
    let mut out = CVector::zeros(v.dim());
    let src = v.as_slice();
    let dst = out.as_mut_slice();
    for (col, &amp) in src.iter().enumerate() {
        let (flip, ph) = p.act((col >> pos) & 1);
        dst[col ^ (flip << pos)] += ph * amp;
    }
    out
}

/// Full experiment configuration for one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub n_sites: usize,
    /// Ising coupling (the energy unit).
    pub j: f64,
    /// Longitudinal field.
    pub h: f64,
    /// Transverse field.
    pub g: f64,
    /// Alice's site.
    pub site_a: usize,
    /// Bob's site; both neighbours must exist.
    pub site_b: usize,
    pub sigma_a: Pauli,
    pub sigma_b: Pauli,
    pub t_max: f64,
    pub dt: f64,
}

impl ChainSpec {
    pub const DEFAULT_J: f64 = 1.0;
    pub const DEFAULT_H: f64 = 0.0;
    pub const DEFAULT_G: f64 = -1.05;
    pub const DEFAULT_SITE_A: usize = 2;
    pub const DEFAULT_T_MAX: f64 = 10.0;
    pub const DEFAULT_DT: f64 = 0.02;

    /// Default experiment on `n_sites` sites: Alice at 2, Bob at `N-1`,
    /// `sigma_A = Z`, `sigma_B = Y`, `h = 0`, `g = -1.05`.
    pub fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            j: Self::DEFAULT_J,
            h: Self::DEFAULT_H,
            g: Self::DEFAULT_G,
            site_a: Self::DEFAULT_SITE_A,
            site_b: n_sites.saturating_sub(1),
            sigma_a: Pauli::Z,
            sigma_b: Pauli::Y,
            t_max: Self::DEFAULT_T_MAX,
            dt: Self::DEFAULT_DT,
        }
    }

    pub fn with_fields(mut self, h: f64, g: f64) -> Self {
        self.h = h;
        self.g = g;
        self
    }

    pub fn with_sites(mut self, site_a: usize, site_b: usize) -> Self {
        self.site_a = site_a;
        self.site_b = site_b;
        self
    }

    pub fn with_time_grid(mut self, t_max: f64, dt: f64) -> Self {
        self.t_max = t_max;
        self.dt = dt;
        self
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        if n < 4 {
            return Err(Error::invalid("n_sites", format!("{n} < 4")));
        }
        if n > MAX_SITES {
            return Err(Error::Capacity {
                n_sites: n,
                max: MAX_SITES,
            });
        }
        for (field, value) in [("j", self.j), ("h", self.h), ("g", self.g)] {
            if !value.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        if self.site_a == 0 || self.site_a > n {
            return Err(Error::invalid(
                "site_a",
                format!("{} outside [1, {n}]", self.site_a),
            ));
        }
        if self.site_b < 2 || self.site_b > n - 1 {
            return Err(Error::invalid(
                "site_b",
                format!("{} outside [2, {}]: Bob needs both neighbours", self.site_b, n - 1),
            ));
        }
        if self.site_a.abs_diff(self.site_b) < 2 {
            return Err(Error::invalid(
                "site_a",
                format!(
                    "|site_a - site_b| = {} < 2",
                    self.site_a.abs_diff(self.site_b)
                ),
            ));
        }
        if self.sigma_a == Pauli::I {
            return Err(Error::invalid("sigma_a", "must be X, Y or Z"));
        }
        if self.sigma_b == Pauli::I {
            return Err(Error::invalid("sigma_b", "must be X, Y or Z"));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::invalid("t_max", "must be finite and >= 0"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Number of grid intervals; the grid is `k * dt` for `k = 0..=steps`.
    pub fn steps(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| k as f64 * self.dt).collect()
    }
}

/// `-J sum Z_n Z_{n+1} - h sum Z_n - g sum X_n` on an open chain.
pub fn ising_hamiltonian(n_sites: usize, j: f64, h: f64, g: f64) -> Result<CMatrix> {
    check_sites(n_sites)?;
    let dim = 1usize << n_sites;
    let mut m = CMatrix::zeros(dim);
    for state in 0..dim {
        let z = |site: usize| -> f64 {
            if (state >> bit_of(n_sites, site)) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let mut diag = 0.0;
        for n in 1..n_sites {
            diag -= j * z(n) * z(n + 1);
        }
        for n in 1..=n_sites {
            diag -= h * z(n);
        }
        m.set(state, state, c64::new(diag, 0.0));
        for n in 1..=n_sites {
            let flipped = state ^ (1 << bit_of(n_sites, n));
            m.add_at(flipped, state, c64::new(-g, 0.0));
        }
    }
    Ok(m)
}

pub fn build_h(spec: &ChainSpec) -> Result<CMatrix> {
    ising_hamiltonian(spec.n_sites, spec.j, spec.h, spec.g)
}

/// Bob's local Hamiltonian, supported on `{n_B - 1, n_B, n_B + 1}`.
pub fn build_hb(spec: &ChainSpec) -> Result<CMatrix> {
    let (n, b) = (spec.n_sites, spec.site_b);
    check_sites(n)?;
    if b < 2 || b + 1 > n {
        return Err(Error::invalid(
            "site_b",
            format!("{b} is at the chain edge or outside it"),
        ));
    }
    let mut m = CMatrix::zeros(1 << n);
    let re = |x: f64| c64::new(x, 0.0);
    accumulate(&mut m, n, re(-spec.j), &[(b, Pauli::Z), (b - 1, Pauli::Z)]);
    accumulate(&mut m, n, re(-spec.j), &[(b, Pauli::Z), (b + 1, Pauli::Z)]);
    accumulate(&mut m, n, re(-spec.h), &[(b, Pauli::Z)]);
    accumulate(&mut m, n, re(-spec.g), &[(b, Pauli::X)]);
    Ok(m)
}

/// Alice's local Hamiltonian `-g X_A`.
pub fn build_ha(spec: &ChainSpec) -> Result<CMatrix> {
    Ok(pauli_string(spec.n_sites, &[(spec.site_a, Pauli::X)])?.scale_real(-spec.g))
}

/// Alice's measurement projector `(1 + (-1)^b sigma_A) / 2`.
pub fn projector_a(spec: &ChainSpec, outcome: u8) -> Result<CMatrix> {
    if spec.sigma_a == Pauli::I {
        return Err(Error::invalid("sigma_a", "must be X, Y or Z"));
    }
    let sign = if outcome == 0 { 1.0 } else { -1.0 };
    let sigma = pauli_string(spec.n_sites, &[(spec.site_a, spec.sigma_a)])?;
    Ok((&CMatrix::identity(spec.dim()) + &sigma.scale_real(sign)).scale_real(0.5))
}

/// Bob's conditional unitary `exp(-i (-1)^b theta sigma_B) = cos(theta) - i (-1)^b sin(theta) sigma_B`.
pub fn bob_unitary(spec: &ChainSpec, outcome: u8, theta: f64) -> Result<CMatrix> {
    let sign = if outcome == 0 { 1.0 } else { -1.0 };
    let sigma = pauli_string(spec.n_sites, &[(spec.site_b, spec.sigma_b)])?;
    Ok(&CMatrix::identity(spec.dim()).scale_real(theta.cos())
        + &sigma.scale(c64::new(0.0, -sign * theta.sin())))
}

/// Lowest eigenpair of the chain Hamiltonian.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub vector: CVector,
    /// `lambda_1 - lambda_0`.
    pub degeneracy_gap: f64,
    pub degenerate: bool,
}

impl GroundState {
    pub fn from_spectrum(s: &Spectrum) -> Self {
        let ev = s.eigenvalues();
        let gap = if ev.len() > 1 { (ev[1] - ev[0]).max(0.0) } else { f64::INFINITY };
        Self {
            energy: ev[0],
            vector: s.eigenvector(0),
            degeneracy_gap: gap,
            degenerate: gap < GROUND_DEGENERACY_GAP,
        }
    }
}

pub fn ground_state(h: &CMatrix) -> Result<GroundState> {
    Ok(GroundState::from_spectrum(&eigh(h)?))
}
