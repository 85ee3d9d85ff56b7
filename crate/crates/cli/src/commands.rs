use std::io;
use std::path::PathBuf;

use tqet_core::experiments::{
    fixed_distance, linspace, scale_ece, scale_ratio, sweep_gh, CellRecord, SweepResult,
};
use tqet_core::protocol::{ece, ProtocolContext};
use tqet_core::timelike::{run_series, sync_analysis};
use tqet_core::validation::{run_suite, SuiteOptions};

use crate::config::{ConfigError, RunConfig};
use crate::output::{Cell, Table, Writer};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("invalid configuration: {0}")]
    Spec(tqet_core::Error),
    #[error("numerical error: {0}")]
    Numerical(tqet_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0} validation check(s) failed")]
    ValidationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Spec(_) => 1,
            CliError::Numerical(_) | CliError::ValidationFailed(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<tqet_core::Error> for CliError {
    fn from(e: tqet_core::Error) -> Self {
        use tqet_core::Error as E;
        match e {
            E::InvalidSpec { .. } | E::Capacity { .. } | E::SiteOutOfRange { .. } => CliError::Spec(e),
            other => CliError::Numerical(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepWhich {
    Gh,
    Ece,
    Ratio,
    Fixed,
}

pub struct Session {
    pub config: RunConfig,
    writer: Writer,
}

impl Session {
    pub fn new(config: RunConfig) -> Self {
        let writer = Writer::new(&config.out, &config.hash(), config.format);
        Self { config, writer }
    }

    fn emit(&self, stem: &str, table: &Table) -> Result<(), CliError> {
        let paths = self.writer.write(stem, table).map_err(|source| CliError::Io {
            path: self.config.out.clone(),
            source,
        })?;
        for p in paths {
            println!("wrote {}", p.display());
        }
        Ok(())
    }

    pub fn ground(&self) -> Result<(), CliError> {
        let spec = self.config.require_spec()?;
        let ctx = ProtocolContext::new(spec)?;
        let g = ctx.ground();
        let mut t = Table::new(&[
            "n_sites", "E0", "gap", "degenerate", "E_B_ground", "E_input", "p0", "p1",
        ]);
        t.push(vec![
            spec.n_sites.into(),
            g.energy.into(),
            g.degeneracy_gap.into(),
            g.degenerate.into(),
            ctx.h_b().expectation(&g.vector).re.into(),
            ctx.e_input().into(),
            ctx.branches().weights[0].into(),
            ctx.branches().weights[1].into(),
        ]);
        self.emit("ground", &t)
    }

    pub fn trace(&self) -> Result<(), CliError> {
        let spec = self.config.require_spec()?;
        let trace = ProtocolContext::new(spec)?.run()?;
        let mut t = Table::new(&["t", "M", "N", "theta_star", "dE_min", "E_NTE", "E_TQET_opt"]);
        for p in &trace.points {
            t.push(vec![
                p.t.into(),
                p.m.into(),
                p.n_corr.into(),
                p.theta_star.into(),
                p.de_min.into(),
                p.e_nte.into(),
                p.e_tqet_opt.into(),
            ]);
        }
        let eff = match ece(&trace) {
            Ok(e) => Some(e),
            Err(tqet_core::Error::UndefinedEfficiency { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let mut s = Table::new(&["E_QET", "E_input", "eta_tqet", "eta_qet"]);
        s.push(vec![
            trace.e_qet.into(),
            trace.e_input.into(),
            eff.map(|e| e.eta_tqet).into(),
            eff.map(|e| e.eta_qet).into(),
        ]);
        self.emit("trace", &t)?;
        self.emit("summary", &s)
    }

    pub fn timelike(&self) -> Result<(), CliError> {
        let spec = self.config.require_spec()?;
        let ctx = ProtocolContext::new(spec)?;
        let series = run_series(spec, ctx.ground(), ctx.branches(), ctx.spectrum())?;
        let mut t = Table::new(&[
            "t",
            "re_trT2_rhoA",
            "im_trT2_rhoA",
            "re_trT2_rho0",
            "im_trT2_rho0",
            "trTTdag_rhoA",
            "trTTdag_rho0",
            "re_dtrT2",
            "im_dtrT2",
        ]);
        for k in 0..series.times.len() {
            let (a, z, d) = (series.tr_t2_rho_a[k], series.tr_t2_rho_0[k], series.delta_tr_t2[k]);
            t.push(vec![
                series.times[k].into(),
                a.re.into(),
                a.im.into(),
                z.re.into(),
                z.im.into(),
                series.tr_ttdag_rho_a[k].into(),
                series.tr_ttdag_rho_0[k].into(),
                d.re.into(),
                d.im.into(),
            ]);
        }
        self.emit("timelike", &t)?;
        if self.config.write_sync {
            let trace = ctx.run()?;
            let report = sync_analysis(&trace, &series, self.config.scalarization)?;
            let mut s = Table::new(&["t_min", "t_critical", "gap"]);
            for p in &report.pairs {
                s.push(vec![p.t_min.into(), p.t_critical.into(), p.gap.into()]);
            }
            self.emit("sync", &s)?;
            match report.median_gap {
                Some(m) => println!(
                    "sync: {} minima, median gap {m:.4}, max gap {:.4}",
                    report.pairs.len(),
                    report.max_gap.unwrap_or(f64::NAN)
                ),
                None => println!("sync: no local minima of dE_min"),
            }
        }
        Ok(())
    }

    pub fn sweep(&self, which: SweepWhich) -> Result<(), CliError> {
        let cfg = &self.config;
        let workers = cfg.workers;
        let result = match which {
            SweepWhich::Gh => {
                let base = cfg.require_spec()?;
                let g = linspace(cfg.g_axis.0, cfg.g_axis.1, cfg.g_axis.2);
                let h = linspace(cfg.h_axis.0, cfg.h_axis.1, cfg.h_axis.2);
                sweep_gh(base, &g, &h, workers)?
            }
            SweepWhich::Ece => scale_ece(&cfg.template, &cfg.n_values(), workers)?,
            SweepWhich::Ratio => scale_ratio(&cfg.template, &cfg.n_values(), workers)?,
            SweepWhich::Fixed => fixed_distance(&cfg.template, &cfg.n_values(), workers)?,
        };
        let table = sweep_table(which, &result);
        self.emit(&format!("sweep_{}", result.kind), &table)?;
        let flagged = result.cells.iter().filter(|c| !c.flags.is_empty()).count();
        println!("{} cells, {flagged} flagged", result.cells.len());
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let options = SuiteOptions {
            corrupt_check: self.config.corrupt_check.clone(),
        };
        let report = run_suite(&self.config.template, &options)?;
        let mut t = Table::new(&["check", "n_sites", "residual", "tolerance", "pass"]);
        for c in &report.checks {
            println!("{c}");
            t.push(vec![
                c.name.into(),
                c.n_sites.into(),
                c.residual.into(),
                c.tolerance.into(),
                c.passed().into(),
            ]);
        }
        self.emit("validate", &t)?;
        let failed = report.failures().count();
        if failed > 0 {
            return Err(CliError::ValidationFailed(failed));
        }
        Ok(())
    }
}

fn agents(c: &CellRecord) -> Vec<Cell> {
    vec![c.n_sites.into(), c.site_a.into(), c.site_b.into()]
}

fn sweep_table(which: SweepWhich, r: &SweepResult) -> Table {
    let mut t = match which {
        SweepWhich::Gh => Table::new(&[
            "g", "h", "E_QET", "min_E_TQET", "min_dE", "E_input", "eta_tqet", "eta_qet", "ratio", "flag",
        ]),
        SweepWhich::Ece => Table::new(&[
            "N", "n_A", "n_B", "E_input", "E_QET", "min_dE", "eta_tqet", "eta_qet", "flag",
        ]),
        SweepWhich::Ratio => Table::new(&["N", "n_A", "n_B", "E_QET", "min_E_TQET", "ratio", "flag"]),
        SweepWhich::Fixed => Table::new(&[
            "N", "n_A", "n_B", "E_QET", "min_dE_restricted", "gap", "net_ratio", "flag",
        ]),
    };
    for c in &r.cells {
        let row: Vec<Cell> = match which {
            SweepWhich::Gh => vec![
                c.g.into(),
                c.h.into(),
                c.e_qet.into(),
                c.min_e_tqet.into(),
                c.min_de.into(),
                c.e_input.into(),
                c.eta_tqet.into(),
                c.eta_qet.into(),
                c.ratio.into(),
                c.flag_label().into(),
            ],
            SweepWhich::Ece => {
                let mut row = agents(c);
                row.extend([
                    c.e_input.into(),
                    c.e_qet.into(),
                    c.min_de.into(),
                    c.eta_tqet.into(),
                    c.eta_qet.into(),
                    c.flag_label().into(),
                ]);
                row
            }
            SweepWhich::Ratio => {
                let mut row = agents(c);
                row.extend([
                    c.e_qet.into(),
                    c.min_e_tqet.into(),
                    c.ratio.into(),
                    c.flag_label().into(),
                ]);
                row
            }
            SweepWhich::Fixed => {
                let gap = c.e_qet.zip(c.restricted_min_de).map(|(q, d)| q - d);
                let mut row = agents(c);
                row.extend([
                    c.e_qet.into(),
                    c.restricted_min_de.into(),
                    gap.into(),
                    c.net_ratio.into(),
                    c.flag_label().into(),
                ]);
                row
            }
        };
        t.push(row);
    }
    t
}
