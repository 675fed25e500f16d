//! Executes an experiment config into report rows.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{ExperimentConfig, KernelSection, MethodChoice, Mode, RegionSpec, Sampler};
use super::report::{Report, Row};
use crate::edge::{
    edge_kernel_modulus_prediction, f_delta, fit_szego_constant, gauss_erfc_identity, probe_grid, szego_ratio,
    EdgeFrame,
};
use crate::error::{Error, Result};
use crate::geometry::{dilated_droplet, disc_grids};
use crate::kernel::KernelEvaluator;
use crate::mc::{sample_dpp_hkpv, sample_ginibre, sample_radial_moduli, variance_estimate};
use crate::potential::{droplet_of, Potential};
use crate::variance::{bulk_prediction, edge_prediction, variance_quadrature, variance_radial_exact, VarianceResult};

/// Overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<std::path::PathBuf>,
}

fn row_from_result(mode: Mode, r: &VarianceResult, provenance: &str) -> Row {
    Row {
        n: r.n,
        mode: mode.as_str().into(),
        region: r.region.clone(),
        method: r.method.to_string(),
        value: r.value,
        normalized: r.normalized,
        prediction_normalized: r.prediction_normalized(),
        gap: r.rel_gap,
        runtime_s: r.runtime_s,
        provenance: provenance.into(),
        stderr: r.stderr,
    }
}

fn rel_gap(value: f64, prediction: f64) -> f64 {
    let g = (value - prediction).abs();
    if prediction != 0.0 {
        g / prediction.abs()
    } else {
        g
    }
}

#[allow(clippy::too_many_arguments)]
fn plain_row(
    n: usize,
    mode: Mode,
    region: String,
    method: &str,
    value: f64,
    prediction: Option<f64>,
    runtime: f64,
    provenance: &str,
) -> Row {
    Row {
        n,
        mode: mode.as_str().into(),
        region,
        method: method.into(),
        value,
        normalized: value,
        prediction_normalized: prediction,
        gap: prediction.map(|p| rel_gap(value, p)),
        runtime_s: runtime,
        provenance: provenance.into(),
        stderr: None,
    }
}

fn use_exact(cfg: &ExperimentConfig, p: &Potential) -> bool {
    let exact_ok = p.is_radial() && cfg.region.as_ref().and_then(RegionSpec::centered_disc_radius).is_some();
    match cfg.method {
        MethodChoice::Auto => exact_ok,
        MethodChoice::RadialExact => true,
        MethodChoice::Quad => false,
    }
}

fn bulk_row(cfg: &ExperimentConfig, p: &Potential, n: usize) -> Result<Row> {
    let spec = cfg
        .region
        .as_ref()
        .ok_or_else(|| Error::Config("region: required".into()))?;
    let region = spec.build()?;
    let prediction = bulk_prediction(p, &region, n)?;
    let result = if use_exact(cfg, p) {
        let a = spec
            .centered_disc_radius()
            .ok_or_else(|| Error::Config("method: radial_exact needs a centred disc".into()))?;
        variance_radial_exact(p, n, a)?
    } else {
        variance_quadrature(&KernelEvaluator::for_potential(p, n)?, &region, cfg.budget)?
    };
    Ok(row_from_result(
        Mode::Bulk,
        &result.with_prediction(prediction),
        "bulk law",
    ))
}

fn edge_row(cfg: &ExperimentConfig, p: &Potential, n: usize, delta: f64) -> Result<Row> {
    let d = droplet_of(p)?;
    let prediction = edge_prediction(p, &d, delta, n)?;
    let region = dilated_droplet(&d, p, delta, n)?;
    let exact = match cfg.method {
        MethodChoice::Quad => false,
        _ => p.is_radial(),
    };
    let mut result = if exact {
        let radius = d.circumradius();
        let dq = p.laplacian_quarter(Complex64::new(radius, 0.0));
        variance_radial_exact(p, n, radius + delta / (2.0 * n as f64 * dq).sqrt())?
    } else {
        variance_quadrature(&KernelEvaluator::for_potential(p, n)?, &region, cfg.budget)?
    };
    result.region = region.describe();
    Ok(row_from_result(
        Mode::Edge,
        &result.with_prediction(prediction),
        "edge law",
    ))
}

fn kernel_rows(p: &Potential, n: usize, k_cfg: &KernelSection) -> Result<Vec<Row>> {
    let d = droplet_of(p)?;
    let k = KernelEvaluator::for_potential(p, n)?;
    let mut rows = Vec::new();
    let scale = ((n as f64).ln() / n as f64).sqrt();
    for &sep in &k_cfg.separations {
        let s = sep * scale;
        let frame = EdgeFrame::at_parameters(&d, p, 0.0, s)?;
        for off in &k_cfg.offsets {
            let xi = Complex64::new(off[0], off[1]);
            let start = Instant::now();
            if !frame.in_window(xi, xi, n, k_cfg.window) {
                return Err(Error::Hypothesis(format!(
                    "offset {xi} or separation {s} lies outside the window M = {}",
                    k_cfg.window
                )));
            }
            let (z, w) = (frame.point_z(xi, n), frame.point_w(xi, n));
            let exact = k.eval(z, w).norm() / (n as f64 * (frame.laplacian_z * frame.laplacian_w).sqrt());
            let pred = edge_kernel_modulus_prediction(&frame, xi, xi, n);
            rows.push(plain_row(
                n,
                Mode::KernelAsymptotics,
                format!("edge-kernel(s={s:.6},xi={xi})"),
                "KERNEL",
                exact,
                Some(pred),
                start.elapsed().as_secs_f64(),
                "edge kernel asymptotics",
            ));
        }
    }
    if k_cfg.probes > 0 {
        let start = Instant::now();
        let zero = Complex64::new(0.0, 0.0);
        let calibration = probe_grid(2 * k_cfg.probes, 0.25, 0.75, &[(zero, zero)]);
        let c_q = fit_szego_constant(&k, &d, &calibration)?;
        let mut worst: f64 = 0.0;
        for probe in probe_grid(k_cfg.probes, 0.0, 0.5, &[(zero, zero)]) {
            worst = worst.max(szego_ratio(&k, &d, &probe)? / c_q);
        }
        let elapsed = start.elapsed().as_secs_f64();
        let label = format!("szego-envelope({0}x{0})", k_cfg.probes);
        rows.push(plain_row(
            n,
            Mode::KernelAsymptotics,
            label.clone(),
            "FIT",
            c_q,
            None,
            elapsed,
            "fitted envelope constant",
        ));
        rows.push(plain_row(
            n,
            Mode::KernelAsymptotics,
            label,
            "ENVELOPE",
            worst,
            Some(1.0),
            elapsed,
            "Szego envelope: largest kernel/bound ratio, at most 1",
        ));
    }
    Ok(rows)
}

fn identity_rows(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let sec = cfg.identities.clone().unwrap_or_default();
    let mut rows = Vec::new();
    for &delta in &sec.deltas {
        let start = Instant::now();
        let v = f_delta(delta)?;
        let known = if delta == 0.0 {
            Some(0.5)
        } else if delta <= -8.0 {
            Some(1.0)
        } else if delta >= 8.0 {
            Some(0.0)
        } else {
            None
        };
        rows.push(plain_row(
            0,
            Mode::Identities,
            format!("f(delta={delta})"),
            "QUAD",
            v,
            known,
            start.elapsed().as_secs_f64(),
            "edge profile limits",
        ));
    }
    for &s in &sec.sums {
        let start = Instant::now();
        let (numeric, closed) = gauss_erfc_identity(0.5 * s, 0.5 * s)?;
        rows.push(plain_row(
            0,
            Mode::Identities,
            format!("gauss-erfc(xi+eta={s})"),
            "QUAD",
            numeric,
            Some(closed),
            start.elapsed().as_secs_f64(),
            "Gaussian-erfc integral closed form",
        ));
    }
    Ok(rows)
}

fn mc_row(cfg: &ExperimentConfig, p: &Potential, n: usize, seed: u64) -> Result<Row> {
    let mc = cfg
        .mc
        .as_ref()
        .ok_or_else(|| Error::Config("mc: section required".into()))?;
    let Some(RegionSpec::Disc { center, radius }) = cfg.region.clone() else {
        return Err(Error::Config("region: mc-crosscheck needs a disc".into()));
    };
    let center = Complex64::new(center[0], center[1]);
    let start = Instant::now();
    let batch = match mc.sampler {
        Sampler::Ginibre => sample_ginibre(n, mc.m, seed)?,
        Sampler::RadialModuli => sample_radial_moduli(p, n, mc.m, seed)?,
        Sampler::Hkpv => {
            let d = droplet_of(p)?;
            let k = KernelEvaluator::for_potential(p, n)?;
            let (mut grid, outside) = disc_grids(Complex64::new(0.0, 0.0), d.circumradius(), &d, p, n, 4);
            grid.extend(&outside);
            sample_dpp_hkpv(&k, &grid, mc.m, seed)?
        }
    };
    let counts: Vec<f64> = batch.counts_in_disc(center, radius).iter().map(|&c| c as f64).collect();
    let est = variance_estimate(&counts);
    let runtime = start.elapsed().as_secs_f64();
    let region = cfg.region.as_ref().expect("checked above").build()?;
    let (exact, how) = if use_exact(cfg, p) && center == Complex64::new(0.0, 0.0) {
        (variance_radial_exact(p, n, radius)?.value, "exact Bernoulli sum")
    } else {
        (
            variance_quadrature(&KernelEvaluator::for_potential(p, n)?, &region, cfg.budget)?.value,
            "kernel quadrature",
        )
    };
    let mut result = VarianceResult::new(n, region.describe(), crate::variance::Method::Mc, est.value, runtime)
        .with_prediction(exact);
    result.stderr = Some(est.stderr);
    Ok(row_from_result(Mode::McCrosscheck, &result, how))
}

enum Task {
    Bulk(usize),
    Edge(usize, f64),
    Kernel(usize),
    Identities,
    Mc(usize),
}

/// Runs every row of the experiment on a pool of `jobs` workers; rows come
/// back in config order.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    cfg.validate()?;
    let p = cfg.potential.build()?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    let tasks: Vec<Task> = match cfg.mode {
        Mode::Bulk => cfg.n.iter().map(|&n| Task::Bulk(n)).collect(),
        Mode::Edge => {
            let deltas = cfg.edge.as_ref().map(|e| e.deltas.clone()).unwrap_or_default();
            cfg.n
                .iter()
                .flat_map(|&n| deltas.iter().map(move |&d| Task::Edge(n, d)))
                .collect()
        }
        Mode::KernelAsymptotics => cfg.n.iter().map(|&n| Task::Kernel(n)).collect(),
        Mode::Identities => vec![Task::Identities],
        Mode::McCrosscheck => cfg.n.iter().map(|&n| Task::Mc(n)).collect(),
    };
    let jobs = opts.jobs.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {jobs} workers: {e}")))?;
    let k_cfg = cfg.kernel.clone().unwrap_or_default();
    let batches: Vec<Vec<Row>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| match *t {
                Task::Bulk(n) => bulk_row(&cfg, &p, n).map(|r| vec![r]),
                Task::Edge(n, d) => edge_row(&cfg, &p, n, d).map(|r| vec![r]),
                Task::Kernel(n) => kernel_rows(&p, n, &k_cfg),
                Task::Identities => identity_rows(&cfg),
                Task::Mc(n) => mc_row(&cfg, &p, n, seed).map(|r| vec![r]),
            })
            .collect::<Result<_>>()
    })?;
    if let Some(out) = &opts.out {
        cfg.output.dir = out.clone();
    }
    Ok(Report::new(cfg, jobs, batches.concat()))
}
