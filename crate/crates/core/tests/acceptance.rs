//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rnmvar::edge::{
    edge_kernel_modulus_prediction, f_delta, fit_szego_constant, gauss_erfc_identity, probe_grid, szego_ratio,
    EdgeFrame, DEFAULT_WINDOW,
};
use rnmvar::geometry::{disc_grids, plane_grid, Region};
use rnmvar::kernel::{BergmanFirstOrder, KernelEvaluator};
use rnmvar::mc::{
    pair_correlation_average, pair_correlation_estimate, sample_dpp_hkpv, sample_ginibre, variance_estimate,
};
use rnmvar::potential::{droplet_of, Potential};
use rnmvar::variance::{bulk_prediction, variance_quadrature, variance_radial_exact, DEFAULT_BUDGET};
use rnmvar::Result;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn origin() -> Complex64 {
    c(0.0, 0.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn bulk_ginibre() -> Result<Outcome> {
    let start = Instant::now();
    let target = 0.5 / PI.sqrt();
    let mut gaps = Vec::new();
    for n in [100, 400, 1600] {
        let r = variance_radial_exact(&Potential::ginibre(), n, 0.5)?;
        gaps.push(rel(r.value / (n as f64).sqrt(), target));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        strictly_decreasing(&gaps) && gaps[2] <= 0.05 && secs <= 10.0,
        format!("gaps [{}], {secs:.2}s", fmt_list(&gaps)),
    )
}

fn oracle_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let g = Potential::ginibre();
    let k = KernelEvaluator::for_potential(&g, 50)?;
    let quad = variance_quadrature(&k, &Region::disc(origin(), 0.5)?, DEFAULT_BUDGET)?.value;
    let exact = variance_radial_exact(&g, 50, 0.5)?.value;
    let d = rel(quad, exact);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        d <= 1e-6 && secs <= 120.0,
        format!("quad {quad:.12}, exact {exact:.12}, rel {d:.2e}, {secs:.2}s"),
    )
}

fn weighted_bulk() -> Result<Outcome> {
    let p = Potential::radial_power(2.0, 1.0)?;
    let region = Region::disc(origin(), 0.4)?;
    let target = 0.32 / PI.sqrt();
    let predicted = bulk_prediction(&p, &region, 1600)? / 40.0;
    let mut gaps = Vec::new();
    for n in [100, 400, 1600] {
        let r = variance_radial_exact(&p, n, 0.4)?;
        gaps.push(rel(r.value / (n as f64).sqrt(), target));
    }
    outcome(
        gaps[2] <= 0.07 && rel(predicted, target) <= 1e-9,
        format!("gaps [{}], prediction {predicted:.7}", fmt_list(&gaps)),
    )
}

fn edge_law() -> Result<Outcome> {
    let g = Potential::ginibre();
    let mut pass = true;
    let mut detail = Vec::new();
    let mut gap0 = f64::NAN;
    for delta in [-1.0, 0.0, 1.0] {
        let target = f_delta(delta)? / PI.sqrt();
        let mut gaps = Vec::new();
        for n in [400, 1600, 6400] {
            let radius = 1.0 + delta / (2.0 * n as f64).sqrt();
            let r = variance_radial_exact(&g, n, radius)?;
            gaps.push(rel(r.value / (n as f64).sqrt(), target));
        }
        pass &= strictly_decreasing(&gaps);
        if delta == 0.0 {
            pass &= rel(target, 0.5 / PI.sqrt()) <= 1e-10;
            gap0 = gaps[2];
        }
        detail.push(format!("delta={delta}: [{}]", fmt_list(&gaps)));
    }
    pass &= gap0 <= 0.05;
    outcome(pass, detail.join("; "))
}

fn edge_kernel() -> Result<Outcome> {
    let start = Instant::now();
    let g = Potential::ginibre();
    let d = droplet_of(&g)?;
    let offsets = [
        c(0.0, 0.0),
        c(0.5, 0.0),
        c(-0.5, 0.0),
        c(1.0, 0.0),
        c(-1.0, 0.0),
        c(0.0, 1.0),
        c(0.0, -1.0),
    ];
    let mut worst = Vec::new();
    let mut in_band = true;
    for n in [200, 800] {
        let k = KernelEvaluator::for_potential(&g, n)?;
        let scale = n as f64 * g.laplacian_quarter(c(1.0, 0.0));
        let mut w: f64 = 0.0;
        for s in [0.0, 0.5 * ((n as f64).ln() / n as f64).sqrt()] {
            let frame = EdgeFrame::at_parameters(&d, &g, 0.0, s)?;
            for xi in offsets {
                for eta in offsets {
                    if !frame.in_window(xi, eta, n, DEFAULT_WINDOW) {
                        return outcome(false, format!("({xi}, {eta}) outside the window at n={n}"));
                    }
                    let exact = k.eval(frame.point_z(xi, n), frame.point_w(eta, n)).norm() / scale;
                    let ratio = exact / edge_kernel_modulus_prediction(&frame, xi, eta, n);
                    if n == 200 {
                        in_band &= (0.7..=1.3).contains(&ratio);
                    }
                    w = w.max((ratio - 1.0).abs());
                }
            }
        }
        worst.push(w);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        in_band && worst[1] < worst[0] && secs <= 30.0,
        format!(
            "worst |ratio-1| n=200 {:.4}, n=800 {:.4}, {secs:.2}s",
            worst[0], worst[1]
        ),
    )
}

fn szego_envelope() -> Result<Outcome> {
    let n = 400;
    let zero = (origin(), origin());
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, p) in [
        ("ginibre", Potential::ginibre()),
        ("elliptic(0.5)", Potential::elliptic_ginibre(0.5)?),
    ] {
        let d = droplet_of(&p)?;
        let k = KernelEvaluator::for_potential(&p, n)?;
        let c_q = fit_szego_constant(&k, &d, &probe_grid(40, 0.25, 0.75, &[zero]))?;
        let mut violations = 0;
        let mut worst: f64 = 0.0;
        for probe in probe_grid(20, 0.0, 0.5, &[zero]) {
            let r = szego_ratio(&k, &d, &probe)? / c_q;
            worst = worst.max(r);
            if r > 1.0 {
                violations += 1;
            }
        }
        pass &= violations == 0;
        detail.push(format!(
            "{name}: C_Q {c_q:.4}, max ratio {worst:.4}, {violations} violations"
        ));
    }
    outcome(pass, detail.join("; "))
}

fn identities() -> Result<Outcome> {
    let start = Instant::now();
    let f0 = (f_delta(0.0)? - 0.5).abs();
    let fm = (f_delta(-8.0)? - 1.0).abs();
    let fp = f_delta(8.0)?.abs();
    let mut worst: f64 = 0.0;
    for s in [-4.0, -2.0, 0.0, 2.0, 4.0] {
        let (numeric, closed) = gauss_erfc_identity(0.5 * s, 0.5 * s)?;
        worst = worst.max((numeric - closed).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        f0 <= 1e-10 && fm <= 1e-9 && fp <= 1e-9 && worst <= 1e-8 && secs <= 5.0,
        format!("|f(0)-1/2| {f0:.1e}, |f(-8)-1| {fm:.1e}, |f(8)| {fp:.1e}, gauss-erfc vs 2 sqrt(pi) erfc(xi+eta) {worst:.1e}, {secs:.2}s"),
    )
}

fn kernel_invariants() -> Result<Outcome> {
    let n = 50;
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, p) in [
        ("ginibre", Potential::ginibre()),
        ("elliptic(0.5)", Potential::elliptic_ginibre(0.5)?),
    ] {
        let k = KernelEvaluator::for_potential(&p, n)?;
        let d = droplet_of(&p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut herm, mut cs_fail): (f64, usize) = (0.0, 0);
        for _ in 0..10_000 {
            let z = c(rng.gen_range(-1.6..1.6), rng.gen_range(-1.6..1.6));
            let w = c(rng.gen_range(-1.6..1.6), rng.gen_range(-1.6..1.6));
            let kzw = k.eval(z, w);
            let (kz, kw) = (k.density(z) * n as f64, k.density(w) * n as f64);
            herm = herm.max((kzw - k.eval(w, z).conj()).norm() / (kz * kw).sqrt().max(1.0));
            if kzw.norm_sqr() > kz * kw * (1.0 + 1e-12) {
                cs_fail += 1;
            }
        }
        let grid = plane_grid(&d, &p, n, DEFAULT_BUDGET)?;
        let trace = k.trace(&grid);
        let mut berezin: f64 = 0.0;
        for w in [origin(), c(0.5, 0.2), c(-0.3, 0.6), d.boundary(0.7).z] {
            let mass = grid.integrate(|z| k.berezin(w, z).unwrap_or(f64::NAN));
            berezin = berezin.max((mass - 1.0).abs());
        }
        let trace_gap = (trace - n as f64).abs();
        pass &= herm <= 1e-12 && cs_fail == 0 && trace_gap <= 1e-6 * n as f64 && berezin <= 1e-6;
        detail.push(format!(
            "{name}: hermitian {herm:.1e}, CS failures {cs_fail}, |trace-n| {trace_gap:.1e}, berezin {berezin:.1e}"
        ));
    }
    outcome(pass, detail.join("; "))
}

fn bergman_first_order() -> Result<Outcome> {
    let g = Potential::ginibre();
    let mut sups = Vec::new();
    for n in [20, 40, 80] {
        let k = KernelEvaluator::for_potential(&g, n)?;
        let b = BergmanFirstOrder::new(&g, n)?;
        let mut sup: f64 = 0.0;
        for r in [0.0, 0.2, 0.4] {
            for a in 0..8 {
                let z = Complex64::from_polar(r, PI * a as f64 / 4.0);
                for h in [0.0, 0.1, 0.2, 0.3] {
                    for t in 0..8 {
                        let w = z + Complex64::from_polar(h, PI * (t as f64 + 0.5) / 4.0);
                        sup = sup.max((k.eval(z, w) - b.eval(z, w)?).norm());
                    }
                }
            }
        }
        sups.push(sup);
    }
    outcome(
        sups.windows(2).all(|w| w[1] <= 1.2 * w[0]),
        format!("sup |K - K1| at n=20,40,80: [{}]", fmt_list(&sups)),
    )
}

fn monte_carlo() -> Result<Outcome> {
    let start = Instant::now();
    let g = Potential::ginibre();
    let batch = sample_ginibre(100, 4000, 20240101)?;
    let counts: Vec<f64> = batch.counts_in_disc(origin(), 0.5).iter().map(|&k| k as f64).collect();
    let est = variance_estimate(&counts);
    let exact = variance_radial_exact(&g, 100, 0.5)?.value;
    let mut pass = est.within(exact, 3.0);
    let mut detail = vec![format!(
        "ginibre var {:.4} +- {:.4} vs {exact:.4} ({:.2} SE)",
        est.value,
        est.stderr,
        (est.value - exact).abs() / est.stderr
    )];

    let n = 10;
    let k = KernelEvaluator::for_potential(&g, n)?;
    let d = droplet_of(&g)?;
    let (mut grid, outside) = disc_grids(origin(), d.circumradius(), &d, &g, n, 8);
    grid.extend(&outside);
    let hkpv = sample_dpp_hkpv(&k, &grid, 2000, 77)?;
    let h = 0.2;
    for (z, w) in [
        (origin(), c(0.15, 0.0)),
        (c(0.2, 0.1), c(-0.4, 0.3)),
        (c(0.5, 0.0), c(0.0, 0.5)),
    ] {
        let e = pair_correlation_estimate(&hkpv, z, w, h);
        let exact = pair_correlation_average(&k, z, w, h);
        pass &= e.within(exact, 3.0);
        detail.push(format!("rho2({z},{w}) {:.3} +- {:.3} vs {exact:.3}", e.value, e.stderr));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 600.0;
    detail.push(format!("{secs:.1}s"));
    outcome(pass, detail.join("; "))
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("bulk law, Ginibre disc, exact sums", bulk_ginibre),
        ("quadrature vs exact sums, n=50", oracle_equivalence),
        ("weighted bulk law, radial power p=2", weighted_bulk),
        ("edge law, Ginibre dilations", edge_law),
        ("edge kernel asymptotics", edge_kernel),
        ("Szego envelope at n=400", szego_envelope),
        ("identity suite", identities),
        ("kernel invariants, n=50", kernel_invariants),
        ("first-order Bergman approximation", bergman_first_order),
        ("Monte Carlo cross-check", monte_carlo),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
