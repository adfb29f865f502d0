//! Subcommand bodies: each takes a validated config and writes its outputs
//! under `config.out`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use num_complex::Complex64;

use crate::cocycle::{
    check_cocycle_with, check_flow_equivalence_with, check_shift_commutation_with, check_vanishing_identity,
    check_zero_curvature_with, master_residuals, pq_report, zero_curvature_order_with,
};
use crate::config::{CheckKind, RunConfig};
use crate::error::{Error, Result};
use crate::hierarchy::{evolve_with, lax_rhs, FlowOptions, FlowState, HierarchyPolynomial};
use crate::lattice::{Boundary, JacobiWindow, NormRegime, SpectrumReport};
use crate::report::{CheckReport, Manifest};
use crate::weyl::{check_m_evolution_grid, m_sweep, write_sweep, HalfPlanePoint, Sweep};

pub const TOL_IDENTITY: f64 = 1e-9;
pub const TOL_ONE_INTEGRATION: f64 = 1e-6;
pub const TOL_TWO_INTEGRATIONS: f64 = 1e-5;
pub const TOL_DET: f64 = 1e-9;
pub const TOL_ISOSPECTRAL: f64 = 1e-8;
pub const TOL_M_EVOLUTION: f64 = 1e-4;
pub const TOL_ORDER: f64 = 0.2;
pub const CURVATURE_DT: f64 = 1e-4;
pub const CURVATURE_ORDER_DTS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];
/// Below this every curvature residual is rounding and no order is defined.
pub const CURVATURE_EXACT: f64 = 1e-12;

struct Setup {
    window: JacobiWindow,
    regime: NormRegime,
    lax: HierarchyPolynomial,
    cocycle: HierarchyPolynomial,
    zs: Vec<HalfPlanePoint>,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let window = cfg.window()?;
        Ok(Setup {
            regime: window.norm_regime(),
            window,
            lax: cfg.lax_poly()?,
            cocycle: cfg.cocycle_poly().clone(),
            zs: cfg.zgrid.points()?,
        })
    }

    fn sites(&self) -> impl Iterator<Item = isize> {
        0..self.window.sites() as isize
    }

    fn raw_zs(&self) -> Vec<Complex64> {
        self.zs.iter().map(|z| z.z()).collect()
    }
}

fn base_report(name: &str, cfg: &RunConfig, setup: &Setup, residual: f64, tol: f64) -> CheckReport {
    CheckReport::new(name, residual, tol)
        .param("d", setup.cocycle.degree())
        .param("coeffs", format!("{:?}", setup.cocycle.coeffs()))
        .param("lax_alignment", format!("{:?}", cfg.lax_alignment).to_lowercase())
        .param("sites", setup.window.sites())
        .param("boundary", setup.window.boundary())
        .param("norm_regime", format!("{:?}", setup.regime).to_lowercase())
}

fn run_check(kind: CheckKind, cfg: &RunConfig, s: &Setup) -> Result<Vec<CheckReport>> {
    let j = &s.window;
    let out = match kind {
        CheckKind::Master => {
            let rhs = lax_rhs(j, &s.lax)?;
            let mut worst: f64 = 0.0;
            for n in s.sites() {
                worst = worst.max(master_residuals(j, n, &s.cocycle, &rhs)?.max());
            }
            vec![base_report("master", cfg, s, worst, TOL_IDENTITY)]
        }
        CheckKind::Curvature => {
            let mut worst: f64 = 0.0;
            for n in s.sites() {
                for z in s.raw_zs() {
                    worst = worst.max(check_zero_curvature_with(j, n, &s.lax, &s.cocycle, z, CURVATURE_DT)?);
                }
            }
            let z = s.raw_zs()[0];
            let (res, orders) =
                zero_curvature_order_with(j, cfg.site, &s.lax, &s.cocycle, z, &CURVATURE_ORDER_DTS)?;
            let exact = res.iter().all(|&r| r < CURVATURE_EXACT);
            let order_err = if exact {
                0.0
            } else {
                orders.iter().map(|o| (o - 2.0).abs()).fold(0.0, f64::max)
            };
            vec![
                base_report("curvature", cfg, s, worst, TOL_ONE_INTEGRATION).param("dt", CURVATURE_DT),
                base_report("curvature_order", cfg, s, order_err, TOL_ORDER)
                    .param("orders", format!("{orders:?}"))
                    .param("exact", exact)
                    .param("site", cfg.site),
            ]
        }
        CheckKind::Cocycle => {
            let half = cfg.t / 2.0;
            let (mut worst, mut drift): (f64, f64) = (0.0, 0.0);
            for z in s.raw_zs() {
                let c = check_cocycle_with(j, &s.lax, &s.cocycle, cfg.site, z, half, half, cfg.dt)?;
                worst = worst.max(c.residual);
                drift = drift.max(c.det_drift);
            }
            vec![base_report("cocycle", cfg, s, worst, TOL_ONE_INTEGRATION)
                .param("s", half)
                .param("t", half)
                .param("det_drift", drift)
                .require(drift < TOL_DET, "det_within_tolerance")]
        }
        CheckKind::Shiftcomm => {
            let mut worst: f64 = 0.0;
            for z in s.raw_zs() {
                worst = worst.max(check_shift_commutation_with(j, cfg.site, &s.lax, &s.cocycle, z, cfg.t, cfg.dt)?);
            }
            vec![base_report("shiftcomm", cfg, s, worst, TOL_TWO_INTEGRATIONS).param("t", cfg.t)]
        }
        CheckKind::Pq => {
            let r = pq_report(j, &s.cocycle)?;
            let worst = r.max_pq_diff.max(r.p_site_variation).max(r.q_site_variation);
            vec![base_report("pq", cfg, s, worst, TOL_IDENTITY)
                .param("max_pq_diff", r.max_pq_diff)
                .param("p_site_variation", r.p_site_variation)
                .param("q_site_variation", r.q_site_variation)]
        }
        CheckKind::Vanishing => {
            let mut worst: f64 = 0.0;
            for n in s.sites() {
                worst = worst.max(check_vanishing_identity(j, n, &s.cocycle)?);
            }
            vec![base_report("vanishing", cfg, s, worst, TOL_IDENTITY)]
        }
        CheckKind::Equivalence => {
            let r = check_flow_equivalence_with(j, &s.lax, &s.cocycle, cfg.t, cfg.dt, &s.raw_zs())?;
            vec![base_report("equivalence", cfg, s, r.max(), TOL_TWO_INTEGRATIONS)
                .param("t", cfg.t)
                .param("master", r.master)
                .param("curvature", r.curvature)
                .param("cocycle", r.cocycle)
                .param("shift", r.shift)
                .param("det_drift", r.det_drift)]
        }
        CheckKind::Spectrum => {
            let drift = spectral_drift(j, &s.lax, cfg.t, cfg.dt, |_, _, _| {})?;
            vec![base_report("spectrum", cfg, s, drift, TOL_ISOSPECTRAL).param("t", cfg.t)]
        }
        CheckKind::Mfunc => {
            let evs = check_m_evolution_grid(
                j,
                &s.lax,
                &s.cocycle,
                cfg.site,
                cfg.t,
                &s.zs,
                cfg.dt,
                &FlowOptions::default(),
            )?;
            let worst = evs.iter().map(|e| e.max()).fold(0.0, f64::max);
            let herglotz = evs.iter().all(|e| e.initial.is_herglotz() && e.evolved.is_herglotz());
            let tail = evs.iter().map(|e| e.tail_deviation).fold(0.0, f64::max);
            vec![base_report("mfunc", cfg, s, worst, TOL_M_EVOLUTION)
                .param("t", cfg.t)
                .param("site", cfg.site)
                .param("tail_deviation", tail)
                .require(herglotz, "herglotz")]
        }
    };
    Ok(out)
}

/// Runs every configured check. Inapplicable checks (wrong boundary, too
/// small a buffer) are errors rather than failures.
pub fn verify(cfg: &RunConfig) -> Result<Manifest> {
    let setup = Setup::new(cfg)?;
    let mut reports = Vec::new();
    for &kind in &cfg.checks {
        reports.extend(run_check(kind, cfg, &setup)?);
    }
    Ok(Manifest::new(reports))
}

/// Largest eigenvalue drift from the initial spectrum along the flow;
/// `observe(step, t, drifts)` sees every step.
pub fn spectral_drift(
    j0: &JacobiWindow,
    poly: &HierarchyPolynomial,
    t: f64,
    dt: f64,
    mut observe: impl FnMut(usize, f64, &[f64]),
) -> Result<f64> {
    let reference = j0.spectrum()?.eigenvalues;
    let mut worst: f64 = 0.0;
    let mut failure = None;
    evolve_with(j0, poly, t, dt, &FlowOptions::default(), |state: &FlowState| {
        if failure.is_some() {
            return;
        }
        match state.window.spectrum() {
            Ok(s) => {
                let d: Vec<f64> = s.eigenvalues.iter().zip(&reference).map(|(x, y)| (x - y).abs()).collect();
                worst = d.iter().copied().fold(worst, f64::max);
                observe(state.steps, state.t, &d);
            }
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

fn out_file(cfg: &RunConfig, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

/// Writes `manifest.toml` and returns the manifest.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Manifest> {
    let manifest = verify(cfg)?;
    let (_, mut w) = out_file(cfg, "manifest.toml")?;
    w.write_all(manifest.to_toml().as_bytes())?;
    w.flush()?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSummary {
    pub state: FlowState,
    /// `None` for eventually free windows, which have no finite spectrum.
    pub max_drift: Option<f64>,
}

/// Writes `flow.toml` and, for periodic windows, `drift.csv`.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<EvolveSummary> {
    let setup = Setup::new(cfg)?;
    let j0 = &setup.window;
    let max_drift = if j0.boundary() == Boundary::Periodic {
        let (_, mut w) = out_file(cfg, "drift.csv")?;
        let header: Vec<String> = (0..j0.sites()).map(|k| format!("drift_{k}")).collect();
        writeln!(w, "step,t,max_drift,{}", header.join(","))?;
        let mut io_err = None;
        let drift = spectral_drift(j0, &setup.lax, cfg.t, cfg.dt, |step, t, d| {
            let max = d.iter().copied().fold(0.0, f64::max);
            let cols: Vec<String> = d.iter().map(|x| format!("{x:.16e}")).collect();
            if let Err(e) = writeln!(w, "{step},{t:.16e},{max:.16e},{}", cols.join(",")) {
                io_err.get_or_insert(e);
            }
        })?;
        if let Some(e) = io_err {
            return Err(e.into());
        }
        w.flush()?;
        Some(drift)
    } else {
        log::info!("eventually free window: no spectral drift recorded");
        None
    };
    let state = crate::hierarchy::evolve(j0, &setup.lax, cfg.t, cfg.dt)?;
    let (_, mut w) = out_file(cfg, "flow.toml")?;
    w.write_all(state.to_toml().as_bytes())?;
    w.flush()?;
    Ok(EvolveSummary { state, max_drift })
}

/// Writes `m_plus.csv` and `m_minus.csv` for every grid point and sample
/// time.
pub fn cmd_mfunc(cfg: &RunConfig) -> Result<Sweep> {
    let setup = Setup::new(cfg)?;
    if setup.window.boundary() != Boundary::EventuallyFree {
        return Err(Error::UnsupportedBoundary {
            op: "m-function sweep",
            boundary: setup.window.boundary(),
        });
    }
    let sweep = m_sweep(&setup.window, &setup.lax, cfg.site, &setup.zs, &cfg.sample_times(), cfg.dt)?;
    write_sweep(&cfg.out, &sweep)?;
    Ok(sweep)
}

/// Writes `spectrum.csv` with the eigenvalues of the initial window.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<SpectrumReport> {
    let window = cfg.window()?;
    let report = window.spectrum()?;
    let (_, mut w) = out_file(cfg, "spectrum.csv")?;
    writeln!(w, "index,eigenvalue")?;
    for (k, x) in report.eigenvalues.iter().enumerate() {
        writeln!(w, "{k},{x:.16e}")?;
    }
    w.flush()?;
    Ok(report)
}
