//! The TQET protocol: branch preparation, natural-time-evolution baseline,
//! closed-form energy balance, optimal feedback angle and efficiency.
//!
//! For Bob's rotation `U_B(b) = exp(-i (-1)^b theta sigma_B)` the feedback
//! contribution on top of natural time evolution is
//!
//! ```text
//! dE(t, theta) = (cos 2theta - 1) M(t) / 2 + sin 2theta N(t) / 2
//! M(t) = Tr(rho_A(t) [sigma_B, [sigma_B, H_B]]) / 2
//! N(t) = (i/2) Tr(U(t) {sigma_A, rho_0} U^dagger(t) [sigma_B, H_B])
//! ```
//!
//! minimized in closed form by `dE_min = (-M - sqrt(M^2 + N^2)) / 2 <= 0`.
//!
//! Every state here is pure: `rho_0 = |g><g|` and the post-measurement
//! ensemble is a pair of unnormalized branch vectors. Per time step the work
//! is a handful of `O(dim^2)` products in the eigenbasis of `H`.

use std::f64::consts::{FRAC_PI_2, PI};

use faer::c64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{eigh, evolve_state, CMatrix, CVector, Spectrum};
use crate::model::{
    apply_site_pauli, build_h, build_ha, build_hb, pauli_string, projector_a, ChainSpec,
    GroundState,
};

/// Largest imaginary residue tolerated in quantities that must be real.
pub const REALITY_TOL: f64 = 1e-10;
/// Branch weights below this mark a measurement with a (near) certain outcome.
pub const DEGENERATE_WEIGHT: f64 = 1e-14;
/// `M^2 + N^2` below this selects the do-nothing angle.
pub const DEGENERATE_MN: f64 = 1e-24;
/// Smallest injected energy for which an efficiency is defined.
pub const MIN_INPUT_ENERGY: f64 = 1e-12;

/// Alice's two post-measurement branches `v_b = P_A(b)|g>`.
#[derive(Clone, Debug)]
pub struct BranchEnsemble {
    pub vectors: [CVector; 2],
    /// `p_b = ||v_b||^2`.
    pub weights: [f64; 2],
    /// One outcome has probability below [`DEGENERATE_WEIGHT`].
    pub degenerate_measurement: bool,
}

pub fn prepare_branches(gs: &GroundState, spec: &ChainSpec) -> Result<BranchEnsemble> {
    let v0 = projector_a(spec, 0)?.apply(&gs.vector);
    let v1 = projector_a(spec, 1)?.apply(&gs.vector);
    let weights = [v0.norm_sqr(), v1.norm_sqr()];
    Ok(BranchEnsemble {
        degenerate_measurement: weights.iter().any(|&p| p < DEGENERATE_WEIGHT),
        vectors: [v0, v1],
        weights,
    })
}

/// `Tr[(rho_A - rho_0) H_A]`: energy Alice's measurement injects.
pub fn e_input(ensemble: &BranchEnsemble, h_a: &CMatrix, gs: &GroundState) -> f64 {
    let after: f64 = ensemble
        .vectors
        .iter()
        .map(|v| h_a.expectation(v).re)
        .sum();
    after - h_a.expectation(&gs.vector).re
}

/// `Tr[(rho_A(t) - rho_0) H_B]`: Bob's energy change without feedback.
pub fn e_nte(
    ensemble: &BranchEnsemble,
    s: &Spectrum,
    h_b: &CMatrix,
    gs: &GroundState,
    t: f64,
) -> f64 {
    let evolved: f64 = ensemble
        .vectors
        .iter()
        .map(|v| h_b.expectation(&evolve_state(s, v, t)).re)
        .sum();
    evolved - h_b.expectation(&gs.vector).re
}

/// Optimal angle and the minimized feedback energy for given `(M, N)`.
///
/// Returns `theta*` in `(-pi/2, pi/2]`; `(0, 0)` when `M^2 + N^2` vanishes.
pub fn optimal_theta(m: f64, n_corr: f64) -> (f64, f64) {
    let r2 = m * m + n_corr * n_corr;
    if r2 < DEGENERATE_MN {
        return (0.0, 0.0);
    }
    let mut theta = 0.5 * (-n_corr).atan2(-m);
    if theta <= -FRAC_PI_2 {
        theta += PI;
    }
    (theta, 0.5 * (-m - r2.sqrt()))
}

/// Closed-form feedback energy `((cos 2theta - 1) M + sin 2theta N) / 2`.
pub fn delta_e_analytic(m: f64, n_corr: f64, theta: f64) -> f64 {
    let two = 2.0 * theta;
    0.5 * ((two.cos() - 1.0) * m + two.sin() * n_corr)
}

/// One time step of the optimized protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolPoint {
    pub t: f64,
    pub m: f64,
    pub n_corr: f64,
    pub theta_star: f64,
    /// Optimized feedback contribution, `<= 0`.
    pub de_min: f64,
    pub e_nte: f64,
    /// `E_TQET(t, theta*) = e_nte + de_min`.
    pub e_tqet_opt: f64,
}

/// Precomputed operators and states for one chain configuration.
///
/// Immutable after construction and shareable across threads.
#[derive(Clone, Debug)]
pub struct ProtocolContext {
    spec: ChainSpec,
    spectrum: Spectrum,
    ground: GroundState,
    branches: BranchEnsemble,
    h_a: CMatrix,
    h_b: CMatrix,
    ground_bob_energy: f64,
    // eigenbasis data
    branch_coeffs: [CVector; 2],
    ground_coeffs: CVector,
    sigma_ground_coeffs: CVector,
    h_b_eig: CMatrix,
    double_comm_eig: CMatrix,
    comm_eig: CMatrix,
}

impl ProtocolContext {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        spec.validate()?;
        let spectrum = eigh(&build_h(spec)?)?;
        let ground = GroundState::from_spectrum(&spectrum);
        let branches = prepare_branches(&ground, spec)?;
        let h_a = build_ha(spec)?;
        let h_b = build_hb(spec)?;
        let sigma_b = pauli_string(spec.n_sites, &[(spec.site_b, spec.sigma_b)])?;
        let comm = sigma_b.commutator(&h_b);
        let double_comm = sigma_b.commutator(&comm).scale_real(0.5);

        let sigma_ground =
            apply_site_pauli(&ground.vector, spec.n_sites, spec.site_a, spec.sigma_a);
        Ok(Self {
            ground_bob_energy: h_b.expectation(&ground.vector).re,
            branch_coeffs: [
                spectrum.to_eigenbasis(&branches.vectors[0]),
                spectrum.to_eigenbasis(&branches.vectors[1]),
            ],
            ground_coeffs: spectrum.to_eigenbasis(&ground.vector),
            sigma_ground_coeffs: spectrum.to_eigenbasis(&sigma_ground),
            h_b_eig: spectrum.operator_to_eigenbasis(&h_b),
            double_comm_eig: spectrum.operator_to_eigenbasis(&double_comm),
            comm_eig: spectrum.operator_to_eigenbasis(&comm),
            spec: spec.clone(),
            spectrum,
            ground,
            branches,
            h_a,
            h_b,
        })
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn ground(&self) -> &GroundState {
        &self.ground
    }

    pub fn branches(&self) -> &BranchEnsemble {
        &self.branches
    }

    pub fn h_a(&self) -> &CMatrix {
        &self.h_a
    }

    pub fn h_b(&self) -> &CMatrix {
        &self.h_b
    }

    pub fn e_input(&self) -> f64 {
        e_input(&self.branches, &self.h_a, &self.ground)
    }

    fn evolved_branches(&self, t: f64) -> [CVector; 2] {
        [
            self.spectrum.evolve_coefficients(&self.branch_coeffs[0], t),
            self.spectrum.evolve_coefficients(&self.branch_coeffs[1], t),
        ]
    }

    fn nte_from(&self, evolved: &[CVector; 2]) -> f64 {
        evolved
            .iter()
            .map(|c| self.h_b_eig.expectation(c).re)
            .sum::<f64>()
            - self.ground_bob_energy
    }

    fn mn_from(&self, evolved: &[CVector; 2], t: f64) -> Result<(f64, f64)> {
        let m: c64 = evolved
            .iter()
            .map(|c| self.double_comm_eig.expectation(c))
            .sum();
        let g_t = self.spectrum.evolve_coefficients(&self.ground_coeffs, t);
        let s_t = self.spectrum.evolve_coefficients(&self.sigma_ground_coeffs, t);
        // Tr(U {sigma_A, rho_0} U^dagger C) = <g(t)|C|s(t)> + <s(t)|C|g(t)>
        let tr = g_t.inner(&self.comm_eig.apply(&s_t)) + s_t.inner(&self.comm_eig.apply(&g_t));
        let n = c64::new(0.0, 0.5) * tr;
        check_real("M(t)", m)?;
        check_real("N(t)", n)?;
        Ok((m.re, n.re))
    }

    /// Bob's energy change under natural time evolution.
    pub fn e_nte(&self, t: f64) -> f64 {
        self.nte_from(&self.evolved_branches(t))
    }

    /// `(M(t), N(t))`, checked to be real within [`REALITY_TOL`].
    pub fn compute_mn(&self, t: f64) -> Result<(f64, f64)> {
        self.mn_from(&self.evolved_branches(t), t)
    }

    /// Imaginary residues of `M(t)` and `N(t)` before they are reduced to reals.
    pub fn mn_residues(&self, t: f64) -> (f64, f64) {
        let evolved = self.evolved_branches(t);
        let m: c64 = evolved
            .iter()
            .map(|c| self.double_comm_eig.expectation(c))
            .sum();
        let g_t = self.spectrum.evolve_coefficients(&self.ground_coeffs, t);
        let s_t = self.spectrum.evolve_coefficients(&self.sigma_ground_coeffs, t);
        let tr = g_t.inner(&self.comm_eig.apply(&s_t)) + s_t.inner(&self.comm_eig.apply(&g_t));
        (m.im.abs(), (0.5 * tr.re).abs())
    }

    fn branch_in_site_basis(&self, b: usize, t: f64) -> CVector {
        evolve_state(&self.spectrum, &self.branches.vectors[b], t)
    }

    fn bob_rotate(&self, v: &CVector, b: usize, theta: f64) -> CVector {
        let sign = if b == 0 { 1.0 } else { -1.0 };
        let sv = apply_site_pauli(v, self.spec.n_sites, self.spec.site_b, self.spec.sigma_b);
        let (c, s) = (theta.cos(), theta.sin());
        CVector::from_vec(
            v.as_slice()
                .iter()
                .zip(sv.as_slice())
                .map(|(a, x)| c * a + c64::new(0.0, -sign * s) * x)
                .collect(),
        )
    }

    /// Feedback energy by explicit branch evolution and conjugation:
    /// `sum_b <v_b(t)| U_B^dagger(b) H_B U_B(b) - H_B |v_b(t)>`.
    pub fn delta_e_direct(&self, t: f64, theta: f64) -> f64 {
        (0..2)
            .map(|b| {
                let v = self.branch_in_site_basis(b, t);
                let w = self.bob_rotate(&v, b, theta);
                self.h_b.expectation(&w).re - self.h_b.expectation(&v).re
            })
            .sum()
    }

    /// `Tr[(rho_TQET(t) - rho_0) H_B]` evaluated from the rotated branches.
    pub fn e_tqet(&self, t: f64, theta: f64) -> f64 {
        (0..2)
            .map(|b| {
                let w = self.bob_rotate(&self.branch_in_site_basis(b, t), b, theta);
                self.h_b.expectation(&w).re
            })
            .sum::<f64>()
            - self.ground_bob_energy
    }

    pub fn point(&self, t: f64) -> Result<ProtocolPoint> {
        let evolved = self.evolved_branches(t);
        let e_nte = self.nte_from(&evolved);
        let (m, n_corr) = self.mn_from(&evolved, t)?;
        let (theta_star, de_min) = optimal_theta(m, n_corr);
        Ok(ProtocolPoint {
            t,
            m,
            n_corr,
            theta_star,
            de_min,
            e_nte,
            e_tqet_opt: e_nte + de_min,
        })
    }

    /// Evaluates the optimized protocol on the spec's time grid.
    pub fn run(&self) -> Result<ProtocolTrace> {
        let points = self
            .spec
            .times()
            .into_par_iter()
            .map(|t| self.point(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProtocolTrace {
            spec: self.spec.clone(),
            e_qet: points[0].de_min,
            e_input: self.e_input(),
            ground_energy: self.ground.energy,
            degenerate_ground: self.ground.degenerate,
            degenerate_measurement: self.branches.degenerate_measurement,
            points,
        })
    }
}

fn check_real(quantity: &'static str, z: c64) -> Result<()> {
    if z.im.abs() > REALITY_TOL {
        return Err(Error::NumericalConsistency {
            quantity,
            residue: z.im.abs(),
            tolerance: REALITY_TOL,
        });
    }
    Ok(())
}

/// The optimized protocol over a time grid.
#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    pub spec: ChainSpec,
    pub points: Vec<ProtocolPoint>,
    /// Conventional QET energy, `dE_min(0)`.
    pub e_qet: f64,
    pub e_input: f64,
    pub ground_energy: f64,
    pub degenerate_ground: bool,
    pub degenerate_measurement: bool,
}

impl ProtocolTrace {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn de_min_series(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.de_min).collect()
    }

    /// `min_t E_TQET(t, theta*(t))`.
    pub fn min_e_tqet(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.e_tqet_opt)
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_t dE_min(t)`.
    pub fn min_de(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.de_min)
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_t dE_min(t)` over times where `E_TQET(t) < 0`.
    pub fn restricted_min_de(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.e_tqet_opt < 0.0)
            .map(|p| p.de_min)
            .reduce(f64::min)
    }

    /// `min_t E_TQET(t) / E_QET`; `None` unless `E_QET < -1e-12`.
    pub fn tqet_qet_ratio(&self) -> Option<f64> {
        (self.e_qet < -1e-12).then(|| self.min_e_tqet() / self.e_qet)
    }
}

/// Operational energy conversion efficiencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Efficiency {
    /// `max_t[-dE_min(t)] / E_input`.
    pub eta_tqet: f64,
    /// `-E_QET / E_input`.
    pub eta_qet: f64,
}

pub fn ece(trace: &ProtocolTrace) -> Result<Efficiency> {
    if trace.e_input <= MIN_INPUT_ENERGY {
        return Err(Error::UndefinedEfficiency {
            e_input: trace.e_input,
        });
    }
    Ok(Efficiency {
        eta_tqet: -trace.min_de() / trace.e_input,
        eta_qet: -trace.e_qet / trace.e_input,
    })
}

pub fn run_trace(spec: &ChainSpec) -> Result<ProtocolTrace> {
    ProtocolContext::new(spec)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ground_state, Pauli};

    fn classical() -> ChainSpec {
        ChainSpec::new(6).with_fields(0.0, 0.0)
    }

    #[test]
    fn optimal_theta_examples() {
        let (t, d) = optimal_theta(1.0, 0.0);
        assert!((t - FRAC_PI_2).abs() < 1e-15);
        assert!((d + 1.0).abs() < 1e-15);
        let (t, d) = optimal_theta(0.0, 1.0);
        assert!((t + PI / 4.0).abs() < 1e-15);
        assert!((d + 0.5).abs() < 1e-15);
        assert_eq!(optimal_theta(0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn analytic_formula_basic_identities() {
        for &(m, n) in &[(1.0, 0.0), (-3.7, 0.2), (0.4, -1.1)] {
            assert_eq!(delta_e_analytic(m, n, 0.0), 0.0);
            for &th in &[0.3, -1.2, 2.0] {
                let a = delta_e_analytic(m, n, th);
                let b = delta_e_analytic(m, n, th + PI);
                assert!((a - b).abs() < 1e-14);
            }
            let (th, d) = optimal_theta(m, n);
            assert!((delta_e_analytic(m, n, th) - d).abs() < 1e-14);
        }
    }

    #[test]
    fn branches_sum_to_unit_weight() {
        let spec = ChainSpec::new(6);
        let gs = ground_state(&build_h(&spec).unwrap()).unwrap();
        let ens = prepare_branches(&gs, &spec).unwrap();
        assert!((ens.weights[0] + ens.weights[1] - 1.0).abs() < 1e-12);
        assert!(ens.vectors[0].inner(&ens.vectors[1]).norm() < 1e-12);
        assert!(!ens.degenerate_measurement);
    }

    #[test]
    fn classical_measurement_is_certain() {
        let spec = classical();
        let gs = ground_state(&build_h(&spec).unwrap()).unwrap();
        let ens = prepare_branches(&gs, &spec).unwrap();
        assert!((ens.weights[0] - 1.0).abs() < 1e-14);
        assert!(ens.weights[1] < 1e-14);
        assert!(ens.degenerate_measurement);
    }

    #[test]
    fn input_energy_vanishes_without_transverse_field() {
        let spec = ChainSpec::new(5).with_sites(2, 4).with_fields(0.3, 0.0);
        let gs = ground_state(&build_h(&spec).unwrap()).unwrap();
        let ens = prepare_branches(&gs, &spec).unwrap();
        assert_eq!(e_input(&ens, &build_ha(&spec).unwrap(), &gs), 0.0);
    }

    #[test]
    fn input_energy_equals_erased_transverse_energy() {
        // Z_A measurement erases <X_A>, so E_input = g <X_A>_ground.
        let spec = ChainSpec::new(6);
        let gs = ground_state(&build_h(&spec).unwrap()).unwrap();
        let ens = prepare_branches(&gs, &spec).unwrap();
        let x_a = pauli_string(6, &[(spec.site_a, Pauli::X)]).unwrap();
        let expect = spec.g * x_a.expectation(&gs.vector).re;
        let got = e_input(&ens, &build_ha(&spec).unwrap(), &gs);
        assert!((got - expect).abs() < 1e-12);
        assert!(got > 0.0);
    }

    #[test]
    fn nte_baseline_starts_at_zero() {
        let ctx = ProtocolContext::new(&ChainSpec::new(6)).unwrap();
        assert!(ctx.e_nte(0.0).abs() < 1e-12);
        let free = e_nte(ctx.branches(), ctx.spectrum(), ctx.h_b(), ctx.ground(), 0.0);
        assert!(free.abs() < 1e-12);
    }

    #[test]
    fn fast_and_free_nte_agree() {
        let ctx = ProtocolContext::new(&ChainSpec::new(6)).unwrap();
        for t in [0.5, 1.0, 3.3] {
            let free = e_nte(ctx.branches(), ctx.spectrum(), ctx.h_b(), ctx.ground(), t);
            assert!((ctx.e_nte(t) - free).abs() < 1e-12);
        }
    }

    #[test]
    fn classical_chain_has_no_advantage() {
        let ctx = ProtocolContext::new(&classical()).unwrap();
        for t in [0.0, 0.7, 4.0] {
            assert!(ctx.e_nte(t).abs() < 1e-12);
            let (m, n) = ctx.compute_mn(t).unwrap();
            assert!(n.abs() < 1e-12);
            // both neighbours of Bob aligned in |000000>: <H_B> = -2, M = -4
            assert!((m + 4.0).abs() < 1e-12);
            // no feedback advantage: any rotation only costs 2 (1 - cos 2 theta)
            for th in [0.2_f64, -0.9] {
                let cost = 2.0 * (1.0 - (2.0 * th).cos());
                assert!((ctx.delta_e_direct(t, th) - cost).abs() < 1e-12);
                assert!((ctx.e_tqet(t, th) - cost).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn do_nothing_angle_gives_baseline() {
        let ctx = ProtocolContext::new(&ChainSpec::new(6)).unwrap();
        for t in [0.0, 1.5] {
            assert!(ctx.delta_e_direct(t, 0.0).abs() < 1e-12);
            assert!((ctx.e_tqet(t, 0.0) - ctx.e_nte(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn efficiency_undefined_without_input() {
        let trace = run_trace(&classical().with_time_grid(1.0, 0.1)).unwrap();
        assert!(matches!(ece(&trace), Err(Error::UndefinedEfficiency { .. })));
    }

    #[test]
    fn trace_bookkeeping() {
        let trace = run_trace(&ChainSpec::new(6).with_time_grid(2.0, 0.1)).unwrap();
        assert_eq!(trace.points.len(), 21);
        assert_eq!(trace.points[0].de_min, trace.e_qet);
        assert!(trace.e_qet < 0.0);
        let eff = ece(&trace).unwrap();
        assert!(eff.eta_tqet >= eff.eta_qet);
        for p in &trace.points {
            let d = 0.5 * (-p.m - (p.m * p.m + p.n_corr * p.n_corr).sqrt());
            assert!((p.de_min - d).abs() < 1e-12);
            assert!(p.de_min <= 1e-12);
            assert!((p.e_tqet_opt - p.e_nte - p.de_min).abs() < 1e-10);
            assert!(p.theta_star > -FRAC_PI_2 && p.theta_star <= FRAC_PI_2);
        }
    }
}
