//! Parameter sweeps over field strengths and chain lengths.
//!
//! Every cell builds its own Hamiltonian and spectrum, so cells are
//! independent and run on a bounded worker pool. A cell that cannot be
//! evaluated is kept in the result with a flag rather than aborting the sweep.
//! Cells are returned in grid order regardless of completion order.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ChainSpec;
use crate::protocol::{ProtocolContext, MIN_INPUT_ENERGY};

/// Cells with `|g|` below this carry no injected energy.
pub const ZERO_FIELD: f64 = 1e-9;
/// `E_QET` must be below `-QET_FLOOR` for ratios to be defined.
pub const QET_FLOOR: f64 = 1e-12;

/// Default `(g, h)` axis: 41 points on `[-2, 2]`.
pub fn default_field_axis() -> Vec<f64> {
    linspace(-2.0, 2.0, 41)
}

/// Default chain lengths for N-dependent sweeps.
pub fn default_n_values() -> Vec<usize> {
    (4..=10).collect()
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|k| if k + 1 == count { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepKind {
    /// Heatmap over transverse and longitudinal fields.
    FieldGrid,
    /// Efficiencies versus N with Bob at `N-1`.
    Efficiency,
    /// `min_t E_TQET / E_QET` versus N with Bob at `N-1`.
    Ratio,
    /// Net advantage versus N at Alice-Bob distance 2.
    FixedDistance,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::FieldGrid => "gh",
            SweepKind::Efficiency => "ece",
            SweepKind::Ratio => "ratio",
            SweepKind::FixedDistance => "fixed",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellFlag {
    /// Alice injects no energy (`|g| < 1e-9` or `E_input <= 1e-12`).
    DegenerateInput,
    /// The ground state is degenerate; the canonical eigenvector was used.
    DegenerateGround,
    /// One of Alice's outcomes has vanishing probability.
    DegenerateMeasurement,
    /// `E_QET >= -1e-12`, so ratios to it are undefined.
    UndefinedRatio,
    /// No grid time has `E_TQET(t) < 0`.
    NoTeleportation,
    /// The cell could not be evaluated at all.
    Failed,
}

impl CellFlag {
    pub fn name(self) -> &'static str {
        match self {
            CellFlag::DegenerateInput => "degenerate_input",
            CellFlag::DegenerateGround => "degenerate_ground",
            CellFlag::DegenerateMeasurement => "degenerate_measurement",
            CellFlag::UndefinedRatio => "undefined_ratio",
            CellFlag::NoTeleportation => "no_teleportation",
            CellFlag::Failed => "failed",
        }
    }
}

/// Summary of one protocol run inside a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRecord {
    pub n_sites: usize,
    pub site_a: usize,
    pub site_b: usize,
    pub g: f64,
    pub h: f64,
    pub e_qet: Option<f64>,
    pub e_input: Option<f64>,
    /// `min_t E_TQET(t, theta*)`.
    pub min_e_tqet: Option<f64>,
    /// `min_t dE_min(t)`.
    pub min_de: Option<f64>,
    /// `min_t dE_min(t)` over times with `E_TQET(t) < 0`.
    pub restricted_min_de: Option<f64>,
    pub eta_tqet: Option<f64>,
    pub eta_qet: Option<f64>,
    /// `min_t E_TQET / E_QET`.
    pub ratio: Option<f64>,
    /// `restricted_min_de / E_QET`.
    pub net_ratio: Option<f64>,
    pub flags: Vec<CellFlag>,
    pub failure: Option<String>,
}

impl CellRecord {
    fn empty(spec: &ChainSpec) -> Self {
        Self {
            n_sites: spec.n_sites,
            site_a: spec.site_a,
            site_b: spec.site_b,
            g: spec.g,
            h: spec.h,
            e_qet: None,
            e_input: None,
            min_e_tqet: None,
            min_de: None,
            restricted_min_de: None,
            eta_tqet: None,
            eta_qet: None,
            ratio: None,
            net_ratio: None,
            flags: Vec::new(),
            failure: None,
        }
    }

    pub fn has(&self, flag: CellFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn is_degenerate(&self) -> bool {
        self.has(CellFlag::DegenerateInput) || self.has(CellFlag::Failed)
    }

    /// `ok` for clean cells, otherwise flag names joined by `+`.
    pub fn flag_label(&self) -> String {
        if self.flags.is_empty() {
            "ok".to_string()
        } else {
            self.flags.iter().map(|f| f.name()).collect::<Vec<_>>().join("+")
        }
    }
}

/// Runs the optimized protocol for `spec` and summarizes it.
///
/// Never fails; errors are recorded in the cell.
pub fn evaluate_cell(spec: &ChainSpec) -> CellRecord {
    let mut cell = CellRecord::empty(spec);
    if spec.g.abs() < ZERO_FIELD {
        cell.flags.push(CellFlag::DegenerateInput);
    }
    let trace = match ProtocolContext::new(spec).and_then(|ctx| ctx.run()) {
        Ok(trace) => trace,
        Err(e) => {
            cell.flags.push(CellFlag::Failed);
            cell.failure = Some(e.to_string());
            cell.flags.sort();
            cell.flags.dedup();
            return cell;
        }
    };
    let e_qet = trace.e_qet;
    let min_e_tqet = trace.min_e_tqet();
    let min_de = trace.min_de();
    let restricted = trace.restricted_min_de();
    cell.e_qet = Some(e_qet);
    cell.e_input = Some(trace.e_input);
    cell.min_e_tqet = Some(min_e_tqet);
    cell.min_de = Some(min_de);
    cell.restricted_min_de = restricted;

    if trace.degenerate_ground {
        cell.flags.push(CellFlag::DegenerateGround);
    }
    if trace.degenerate_measurement {
        cell.flags.push(CellFlag::DegenerateMeasurement);
    }
    if trace.e_input > MIN_INPUT_ENERGY {
        cell.eta_tqet = Some(-min_de / trace.e_input);
        cell.eta_qet = Some(-e_qet / trace.e_input);
    } else {
        cell.flags.push(CellFlag::DegenerateInput);
    }
    if e_qet < -QET_FLOOR {
        cell.ratio = Some(min_e_tqet / e_qet);
        cell.net_ratio = restricted.map(|d| d / e_qet);
    } else {
        cell.flags.push(CellFlag::UndefinedRatio);
    }
    if restricted.is_none() {
        cell.flags.push(CellFlag::NoTeleportation);
    }
    cell.flags.sort();
    cell.flags.dedup();
    cell
}

/// Result of one sweep, cells in grid order.
///
/// For the field grid the cell for `(g_axis[i], h_axis[j])` sits at index
/// `i * h_axis.len() + j`; N sweeps follow `n_axis`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub base: ChainSpec,
    pub g_axis: Vec<f64>,
    pub h_axis: Vec<f64>,
    pub n_axis: Vec<usize>,
    pub cells: Vec<CellRecord>,
}

impl SweepResult {
    /// The cell specs in grid order.
    pub fn cell_specs(&self) -> Vec<ChainSpec> {
        cell_specs(self.kind, &self.base, &self.g_axis, &self.h_axis, &self.n_axis)
    }

    /// Largest `min_t dE / E_QET` (restricted to teleporting times) over all cells.
    pub fn best_net_ratio(&self) -> Option<(usize, f64)> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c.net_ratio.map(|r| (k, r)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Recomputes cell `index` from scratch and returns the largest absolute
    /// difference over its numeric fields. Definedness must agree.
    pub fn recompute_residual(&self, index: usize) -> Result<f64> {
        let specs = self.cell_specs();
        let spec = specs.get(index).ok_or(Error::DimensionMismatch {
            expected: specs.len(),
            found: index,
        })?;
        let fresh = evaluate_cell(spec);
        let stored = &self.cells[index];
        if fresh.flags != stored.flags {
            return Ok(f64::INFINITY);
        }
        let fields = |c: &CellRecord| {
            [
                c.e_qet,
                c.e_input,
                c.min_e_tqet,
                c.min_de,
                c.restricted_min_de,
                c.eta_tqet,
                c.eta_qet,
                c.ratio,
                c.net_ratio,
            ]
        };
        let mut worst = 0.0_f64;
        for (a, b) in fields(&fresh).into_iter().zip(fields(stored)) {
            match (a, b) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                _ => return Ok(f64::INFINITY),
            }
        }
        Ok(worst)
    }
}

fn cell_specs(
    kind: SweepKind,
    base: &ChainSpec,
    g_axis: &[f64],
    h_axis: &[f64],
    n_axis: &[usize],
) -> Vec<ChainSpec> {
    match kind {
        SweepKind::FieldGrid => g_axis
            .iter()
            .flat_map(|&g| h_axis.iter().map(move |&h| base.clone().with_fields(h, g)))
            .collect(),
        SweepKind::Efficiency | SweepKind::Ratio => n_axis
            .iter()
            .map(|&n| ChainSpec {
                n_sites: n,
                site_a: ChainSpec::DEFAULT_SITE_A,
                site_b: n.saturating_sub(1),
                ..base.clone()
            })
            .collect(),
        SweepKind::FixedDistance => n_axis
            .iter()
            .map(|&n| ChainSpec {
                n_sites: n,
                site_a: ChainSpec::DEFAULT_SITE_A,
                site_b: ChainSpec::DEFAULT_SITE_A + 2,
                ..base.clone()
            })
            .collect(),
    }
}

fn run(
    kind: SweepKind,
    base: &ChainSpec,
    g_axis: Vec<f64>,
    h_axis: Vec<f64>,
    n_axis: Vec<usize>,
    workers: usize,
) -> Result<SweepResult> {
    let specs = cell_specs(kind, base, &g_axis, &h_axis, &n_axis);
    if specs.is_empty() {
        return Err(Error::invalid("grid", "sweep grid is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::WorkerPool(e.to_string()))?;
    let cells = pool.install(|| specs.par_iter().map(evaluate_cell).collect());
    Ok(SweepResult {
        kind,
        base: base.clone(),
        g_axis,
        h_axis,
        n_axis,
        cells,
    })
}

/// Heatmap of `E_QET` and `min_t E_TQET` over `(g, h)`.
pub fn sweep_gh(base: &ChainSpec, g_grid: &[f64], h_grid: &[f64], workers: usize) -> Result<SweepResult> {
    base.validate()?;
    run(SweepKind::FieldGrid, base, g_grid.to_vec(), h_grid.to_vec(), Vec::new(), workers)
}

/// Efficiencies versus N; Alice at 2, Bob at `N-1`.
pub fn scale_ece(base: &ChainSpec, n_values: &[usize], workers: usize) -> Result<SweepResult> {
    run(SweepKind::Efficiency, base, Vec::new(), Vec::new(), n_values.to_vec(), workers)
}

/// `min_t E_TQET / E_QET` versus N; Alice at 2, Bob at `N-1`.
pub fn scale_ratio(base: &ChainSpec, n_values: &[usize], workers: usize) -> Result<SweepResult> {
    run(SweepKind::Ratio, base, Vec::new(), Vec::new(), n_values.to_vec(), workers)
}

/// `E_QET` and the restricted net advantage versus N; Alice at 2, Bob at 4.
pub fn fixed_distance(base: &ChainSpec, n_values: &[usize], workers: usize) -> Result<SweepResult> {
    run(SweepKind::FixedDistance, base, Vec::new(), Vec::new(), n_values.to_vec(), workers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let v = default_field_axis();
        assert_eq!(v.len(), 41);
        assert_eq!(v[0], -2.0);
        assert_eq!(v[40], 2.0);
        assert!((v[20]).abs() < 1e-15);
        assert!((v[1] - v[0] - 0.1).abs() < 1e-15);
        assert!(linspace(0.0, 1.0, 0).is_empty());
        assert_eq!(linspace(3.0, 5.0, 1), vec![3.0]);
    }

    #[test]
    fn classical_cell_is_flagged_and_null() {
        let spec = ChainSpec::new(5).with_sites(2, 4).with_fields(0.0, 0.0);
        let c = evaluate_cell(&spec);
        assert!(c.has(CellFlag::DegenerateInput));
        assert!(c.has(CellFlag::UndefinedRatio));
        assert!(c.e_qet.unwrap().abs() < 1e-12);
        assert!(c.min_e_tqet.unwrap().abs() < 1e-12);
        assert_eq!(c.eta_tqet, None);
        assert_eq!(c.ratio, None);
        assert!(c.flag_label().contains("degenerate_input"));
    }

    #[test]
    fn invalid_cell_is_recorded_not_thrown() {
        // N = 4 with Bob at N-1 = 3 is adjacent to Alice.
        let c = evaluate_cell(&ChainSpec::new(4));
        assert!(c.has(CellFlag::Failed));
        assert!(c.failure.as_deref().unwrap().contains("site"));
        assert_eq!(c.e_qet, None);
    }

    #[test]
    fn clean_cell_has_ok_label() {
        let c = evaluate_cell(&ChainSpec::new(5).with_time_grid(4.0, 0.05));
        assert_eq!(c.flag_label(), "ok");
        assert!(c.ratio.unwrap() >= 1.0);
        assert!(c.eta_tqet.unwrap() >= c.eta_qet.unwrap());
    }

    #[test]
    fn small_gh_sweep_in_grid_order() {
        let base = ChainSpec::new(5).with_time_grid(2.0, 0.1);
        let r = sweep_gh(&base, &[-1.0, 0.0], &[0.0, 0.5, 1.0], 2).unwrap();
        assert_eq!(r.cells.len(), 6);
        assert_eq!((r.cells[1].g, r.cells[1].h), (-1.0, 0.5));
        assert_eq!((r.cells[3].g, r.cells[3].h), (0.0, 0.0));
        assert!(r.cells[3].has(CellFlag::DegenerateInput));
        assert_eq!(r.recompute_residual(4).unwrap(), 0.0);
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(sweep_gh(&ChainSpec::new(5), &[], &[0.0], 1).is_err());
    }

    #[test]
    fn fixed_distance_places_bob_two_sites_away() {
        let base = ChainSpec::new(6).with_time_grid(1.0, 0.1);
        let r = fixed_distance(&base, &[5, 6], 1).unwrap();
        assert!(r.cells.iter().all(|c| c.site_a == 2 && c.site_b == 4));
        let r = scale_ratio(&base, &[5, 6], 1).unwrap();
        assert_eq!(r.cells[1].site_b, 5);
    }
}
