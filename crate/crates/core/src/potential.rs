//! Potential families, quarter Laplacians, droplets and exterior conformal maps.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{composite, QuadratureGrid};

/// Natural cubic spline of a radial profile `q(r)`, clamped to zero slope
/// when the table starts at the origin, extended linearly past both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    r: Vec<f64>,
    q: Vec<f64>,
    m: Vec<f64>,
}

impl RadialTable {
    pub fn new(r: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if r.len() != q.len() || r.len() < 3 {
            return Err(Error::InvalidParameter(
                "radial table needs at least 3 (r, q) samples of equal length".into(),
            ));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "radial table radii must be non-negative and strictly increasing".into(),
            ));
        }
        if q.iter().chain(&r).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("radial table has non-finite entries".into()));
        }
        let m = spline_second_derivatives(&r, &q, r[0] == 0.0);
        Ok(RadialTable { r, q, m })
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    fn segment(&self, x: f64) -> usize {
        match self.r.partition_point(|&ri| ri <= x) {
            0 => 0,
            i => (i - 1).min(self.r.len() - 2),
        }
    }

    fn end_slope(&self, last: bool) -> f64 {
        let k = if last { self.r.len() - 2 } else { 0 };
        let x = if last { self.r[k + 1] } else { self.r[k] };
        self.eval_in(k, x).1
    }

    fn eval_in(&self, k: usize, x: f64) -> (f64, f64, f64) {
        let h = self.r[k + 1] - self.r[k];
        let a = (self.r[k + 1] - x) / h;
        let b = (x - self.r[k]) / h;
        let (m0, m1) = (self.m[k], self.m[k + 1]);
        let v = a * self.q[k] + b * self.q[k + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d =
            (self.q[k + 1] - self.q[k]) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let dd = a * m0 + b * m1;
        (v, d, dd)
    }

    /// Value, first and second derivative at radius `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let last = self.r.len() - 1;
        if x > self.r[last] {
            let s = self.end_slope(true);
            return (self.q[last] + s * (x - self.r[last]), s, 0.0);
        }
        if x < self.r[0] {
            let s = self.end_slope(false);
            return (self.q[0] + s * (x - self.r[0]), s, 0.0);
        }
        self.eval_in(self.segment(x), x)
    }
}

fn spline_second_derivatives(x: &[f64], y: &[f64], clamp_start: bool) -> Vec<f64> {
    let n = x.len();
    let mut sub = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    if clamp_start {
        let h = x[1] - x[0];
        diag[0] = h / 3.0;
        sup[0] = h / 6.0;
        rhs[0] = (y[1] - y[0]) / h;
    }
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        sub[i] = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        sup[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    // Thomas algorithm
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
    }
    m
}

/// Supported potential families.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `Q = |z|^2`.
    Ginibre,
    /// `Q = |z|^2 - tau Re z^2`, `|tau| < 1`.
    EllipticGinibre { tau: f64 },
    /// `Q = c |z|^(2p)`.
    RadialPower { p: f64, c: f64 },
    /// Tabulated radial profile `Q(z) = q(|z|)`.
    RadialTable(RadialTable),
}

/// A confining potential `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Ginibre => write!(f, "ginibre"),
            PotentialKind::EllipticGinibre { tau } => write!(f, "elliptic_ginibre(tau={tau})"),
            PotentialKind::RadialPower { p, c } => write!(f, "radial_power(p={p},c={c})"),
            PotentialKind::RadialTable(t) => write!(f, "radial_table({} knots)", t.r.len()),
        }
    }
}

/// Slack required in the logarithmic growth test.
pub const GROWTH_MARGIN: f64 = 0.01;

impl Potential {
    pub fn ginibre() -> Self {
        Potential {
            kind: PotentialKind::Ginibre,
        }
    }

    pub fn elliptic_ginibre(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must satisfy |tau| < 1, got {tau}"
            )));
        }
        Ok(Potential {
            kind: PotentialKind::EllipticGinibre { tau },
        })
    }

    pub fn radial_power(p: f64, c: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!("power p must be >= 1, got {p}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("coefficient c must be > 0, got {c}")));
        }
        Ok(Potential {
            kind: PotentialKind::RadialPower { p, c },
        })
    }

    pub fn radial_table(table: RadialTable) -> Result<Self> {
        let pot = Potential {
            kind: PotentialKind::RadialTable(table),
        };
        pot.check_growth()?;
        Ok(pot)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// True when `Q(z)` depends on `|z|` only.
    pub fn is_radial(&self) -> bool {
        match self.kind {
            PotentialKind::EllipticGinibre { tau } => tau == 0.0,
            _ => true,
        }
    }

    /// Radial profile `q(r)` with its first two derivatives.
    pub fn radial_profile(&self, r: f64) -> Result<(f64, f64, f64)> {
        match &self.kind {
            PotentialKind::Ginibre => Ok((r * r, 2.0 * r, 2.0)),
            PotentialKind::EllipticGinibre { tau } if *tau == 0.0 => Ok((r * r, 2.0 * r, 2.0)),
            PotentialKind::EllipticGinibre { .. } => Err(Error::UnsupportedPotential(
                "elliptic Ginibre with tau != 0 is not radial".into(),
            )),
            PotentialKind::RadialPower { p, c } => {
                let q = c * r.powf(2.0 * p);
                let d = 2.0 * p * c * r.powf(2.0 * p - 1.0);
                let dd = 2.0 * p * (2.0 * p - 1.0) * c * r.powf(2.0 * p - 2.0);
                Ok((q, d, dd))
            }
            PotentialKind::RadialTable(t) => Ok(t.eval(r)),
        }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        match &self.kind {
            PotentialKind::Ginibre => z.norm_sqr(),
            PotentialKind::EllipticGinibre { tau } => z.norm_sqr() - tau * (z.re * z.re - z.im * z.im),
            PotentialKind::RadialPower { p, c } => c * z.norm_sqr().powf(*p),
            PotentialKind::RadialTable(t) => t.eval(z.norm()).0,
        }
    }

    /// `(Q_xx + Q_yy) / 4`.
    pub fn laplacian_quarter(&self, z: Complex64) -> f64 {
        match &self.kind {
            PotentialKind::Ginibre | PotentialKind::EllipticGinibre { .. } => 1.0,
            PotentialKind::RadialPower { p, c } => p * p * c * z.norm_sqr().powf(p - 1.0),
            PotentialKind::RadialTable(t) => {
                let r = z.norm();
                let (_, d, dd) = t.eval(r);
                if r < 1e-12 {
                    0.5 * dd
                } else {
                    0.25 * (dd + d / r)
                }
            }
        }
    }

    pub fn has_polarization(&self) -> bool {
        !matches!(self.kind, PotentialKind::RadialTable(_))
    }

    /// Polarization `Q(z, w)`, holomorphic in both slots with `Q(z, conj z) = Q(z)`.
    pub fn polarization(&self, z: Complex64, w: Complex64) -> Option<Complex64> {
        match &self.kind {
            PotentialKind::Ginibre => Some(z * w),
            PotentialKind::EllipticGinibre { tau } => Some(z * w - 0.5 * tau * (z * z + w * w)),
            PotentialKind::RadialPower { p, c } => Some(c * (z * w).powf(*p)),
            PotentialKind::RadialTable(_) => None,
        }
    }

    /// `B0 = d_z d_w Q(z, w)`.
    pub fn bergman_b0(&self, z: Complex64, w: Complex64) -> Option<Complex64> {
        match &self.kind {
            PotentialKind::Ginibre | PotentialKind::EllipticGinibre { .. } => Some(Complex64::new(1.0, 0.0)),
            PotentialKind::RadialPower { p, c } => Some(c * p * p * (z * w).powf(p - 1.0)),
            PotentialKind::RadialTable(_) => None,
        }
    }

    /// `B1 = (1/2) d_z d_w log B0(z, w)`.
    pub fn bergman_b1(&self, _z: Complex64, _w: Complex64) -> Option<Complex64> {
        // log B0 is constant or a function of z*w alone with vanishing mixed derivative.
        self.has_polarization().then_some(Complex64::new(0.0, 0.0))
    }

    /// Checks `Q(z) / log|z|^2 > 1 + margin` on circles of radius 1e3 and 1e6.
    pub fn check_growth(&self) -> Result<()> {
        for r in [1e3_f64, 1e6] {
            for k in 0..16 {
                let z = Complex64::from_polar(r, 2.0 * PI * k as f64 / 16.0);
                let ratio = self.eval(z) / (r * r).ln();
                if !(ratio > 1.0 + GROWTH_MARGIN) {
                    return Err(Error::UnsupportedPotential(format!(
                        "growth condition fails at |z| = {r:e}: Q/log|z|^2 = {ratio}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks `|Q(z, conj z) - Q(z)| <= 1e-12` (relative to `max(1, |Q|)`) on a grid.
    pub fn check_polarization(&self) -> Result<()> {
        for i in -5..=5 {
            for j in -5..=5 {
                let z = Complex64::new(0.3 * i as f64, 0.3 * j as f64);
                let Some(pz) = self.polarization(z, z.conj()) else {
                    return Err(Error::Unsupported("potential has no polarization".into()));
                };
                let q = self.eval(z);
                if (pz - q).norm() > 1e-12 * q.abs().max(1.0) {
                    return Err(Error::Domain(format!("polarization mismatch at {z}")));
                }
            }
        }
        Ok(())
    }
}

/// Five-point finite-difference estimate of `(Q_xx + Q_yy) / 4`.
pub fn quarter_laplacian_check(p: &Potential, z: Complex64, h: f64) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::InvalidParameter(format!("step h = {h} outside [1e-6, 1e-3]")));
    }
    let c = p.eval(z);
    let samples = [
        p.eval(z + h),
        p.eval(z - h),
        p.eval(z + Complex64::new(0.0, h)),
        p.eval(z - Complex64::new(0.0, h)),
    ];
    if !c.is_finite() || samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite potential value near {z}")));
    }
    Ok((samples.iter().sum::<f64>() - 4.0 * c) / (4.0 * h * h))
}

/// Exterior map `psi(zeta) = c (zeta + tau / zeta)` from `|zeta| > 1` onto the
/// droplet exterior, and its inverse `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoukowskiMap {
    pub c: f64,
    pub tau: f64,
}

/// A boundary sample with its local geometry.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub z: Complex64,
    pub normal: Complex64,
    pub curvature: f64,
    /// `|d z / d t|` for the angle parameter `t`.
    pub speed: f64,
}

impl JoukowskiMap {
    pub fn psi(&self, zeta: Complex64) -> Complex64 {
        self.c * (zeta + self.tau / zeta)
    }

    pub fn dpsi(&self, zeta: Complex64) -> Complex64 {
        self.c * (1.0 - self.tau / (zeta * zeta))
    }

    /// Root of `c zeta^2 - z zeta + c tau = 0` of larger modulus.
    pub fn phi(&self, z: Complex64) -> Complex64 {
        if self.tau == 0.0 {
            return z / self.c;
        }
        let disc = (z * z - 4.0 * self.c * self.c * self.tau).sqrt();
        let s = if (z.conj() * disc).re >= 0.0 { disc } else { -disc };
        (z + s) / (2.0 * self.c)
    }

    pub fn dphi(&self, z: Complex64) -> Complex64 {
        1.0 / self.dpsi(self.phi(z))
    }

    pub fn dphi_at_infinity(&self) -> f64 {
        1.0 / self.c
    }

    pub fn boundary(&self, t: f64) -> BoundaryPoint {
        let zeta = Complex64::from_polar(1.0, t);
        let d = self.dpsi(zeta);
        let speed = d.norm();
        let curvature = (1.0 + (2.0 * self.tau / (zeta * zeta - self.tau)).re) / speed;
        BoundaryPoint {
            z: self.psi(zeta),
            normal: zeta * d / speed,
            curvature,
            speed,
        }
    }

    /// Inner radius in the `zeta` plane below which `psi` folds onto the focal segment.
    pub fn inner_radius(&self) -> f64 {
        self.tau.abs().sqrt()
    }

    /// Grid on the image of the annulus `rho0 <= |zeta| <= rho1`, weighted for `dA`.
    pub fn annulus_grid(&self, radial: &[(f64, f64)], n_theta: usize) -> QuadratureGrid {
        let dtheta = 2.0 * PI / n_theta as f64;
        let mut grid = QuadratureGrid {
            center: Complex64::new(0.0, 0.0),
            radius: radial
                .iter()
                .map(|&(rho, _)| self.c * (rho + self.tau.abs() / rho.max(1e-300)))
                .fold(0.0, f64::max),
            ..Default::default()
        };
        for &(rho, w) in radial {
            for k in 0..n_theta {
                let zeta = Complex64::from_polar(rho, dtheta * (k as f64 + 0.5));
                let jac = self.dpsi(zeta).norm_sqr();
                grid.push(self.psi(zeta), w * rho * jac * dtheta / PI);
            }
        }
        grid
    }
}

/// Droplet shapes with closed-form exterior maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DropletShape {
    Disc { radius: f64 },
    Ellipse { semi_x: f64, semi_y: f64 },
}

/// The support of the equilibrium measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Droplet {
    pub shape: DropletShape,
    pub map: JoukowskiMap,
}

impl Droplet {
    pub fn disc(radius: f64) -> Self {
        Droplet {
            shape: DropletShape::Disc { radius },
            map: JoukowskiMap { c: radius, tau: 0.0 },
        }
    }

    pub fn ellipse_from_map(c: f64, tau: f64) -> Self {
        Droplet {
            shape: DropletShape::Ellipse {
                semi_x: c * (1.0 + tau),
                semi_y: c * (1.0 - tau),
            },
            map: JoukowskiMap { c, tau },
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match self.shape {
            DropletShape::Disc { radius } => z.norm() <= radius,
            DropletShape::Ellipse { semi_x, semi_y } => (z.re / semi_x).powi(2) + (z.im / semi_y).powi(2) <= 1.0,
        }
    }

    /// Radius of the largest centred disc inside the droplet.
    pub fn inradius(&self) -> f64 {
        match self.shape {
            DropletShape::Disc { radius } => radius,
            DropletShape::Ellipse { semi_x, semi_y } => semi_x.min(semi_y),
        }
    }

    pub fn circumradius(&self) -> f64 {
        match self.shape {
            DropletShape::Disc { radius } => radius,
            DropletShape::Ellipse { semi_x, semi_y } => semi_x.max(semi_y),
        }
    }

    pub fn boundary(&self, t: f64) -> BoundaryPoint {
        self.map.boundary(t)
    }

    pub fn phi(&self, z: Complex64) -> Complex64 {
        self.map.phi(z)
    }

    pub fn dphi(&self, z: Complex64) -> Complex64 {
        self.map.dphi(z)
    }

    pub fn phi_inverse(&self, zeta: Complex64) -> Complex64 {
        self.map.psi(zeta)
    }

    /// Distance from `z` to the boundary, approximated by minimizing over
    /// boundary samples (positive inside).
    pub fn signed_distance(&self, z: Complex64) -> f64 {
        let m = 2048;
        let d = (0..m)
            .map(|k| (self.boundary(2.0 * PI * k as f64 / m as f64).z - z).norm())
            .fold(f64::INFINITY, f64::min);
        if self.contains(z) {
            d
        } else {
            -d
        }
    }

    /// Quadrature grid covering the droplet.
    pub fn interior_grid(&self, panels: usize, order: usize, n_theta: usize) -> QuadratureGrid {
        let radial = composite(self.map.inner_radius(), 1.0, panels, order);
        self.map.annulus_grid(&radial, n_theta)
    }
}

const BISECTION_LO: f64 = 1e-6;
const BISECTION_HI: f64 = 1e6;

/// Droplet of a supported potential.
pub fn droplet_of(p: &Potential) -> Result<Droplet> {
    match p.kind() {
        PotentialKind::Ginibre => Ok(Droplet::disc(1.0)),
        PotentialKind::EllipticGinibre { tau } => {
            let c = 1.0 / (1.0 - tau * tau).sqrt();
            if *tau == 0.0 {
                Ok(Droplet::disc(1.0))
            } else {
                Ok(Droplet::ellipse_from_map(c, *tau))
            }
        }
        PotentialKind::RadialPower { .. } | PotentialKind::RadialTable(_) => radial_droplet(p),
    }
}

fn radial_droplet(p: &Potential) -> Result<Droplet> {
    let g = |r: f64| -> Result<f64> {
        let (_, d, _) = p.radial_profile(r)?;
        Ok(r * d - 2.0)
    };
    // r q'(r) must increase on the probe range.
    let mut prev = f64::NEG_INFINITY;
    for k in 0..=240 {
        let r = BISECTION_LO * (BISECTION_HI / BISECTION_LO).powf(k as f64 / 240.0);
        let v = g(r)?;
        if v < prev - 1e-12 * prev.abs().max(1.0) {
            return Err(Error::UnsupportedPotential(
                "r Q'(r) is not increasing; droplet is not a centred disc".into(),
            ));
        }
        prev = v;
    }
    let (mut lo, mut hi) = (BISECTION_LO, BISECTION_HI);
    if g(lo)? > 0.0 || g(hi)? < 0.0 {
        return Err(Error::UnsupportedPotential(
            "no root of r Q'(r) = 2 in the bisection bracket".into(),
        ));
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Droplet::disc(0.5 * (lo + hi)))
}

/// Quadrature of `int_{S_Q} Delta Q dA`.
pub fn equilibrium_mass(p: &Potential, d: &Droplet) -> Result<f64> {
    let grid = d.interior_grid(4, 16, 256);
    let v = grid.integrate(|z| p.laplacian_quarter(z));
    if !v.is_finite() {
        return Err(Error::Quadrature("non-finite Laplacian on droplet grid".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn finite_difference_laplacians() {
        let g = Potential::ginibre();
        assert!((quarter_laplacian_check(&g, c(0.3, 0.1), 1e-4).unwrap() - 1.0).abs() < 1e-6);
        let e = Potential::elliptic_ginibre(0.5).unwrap();
        assert!((quarter_laplacian_check(&e, c(-0.7, 0.2), 1e-4).unwrap() - 1.0).abs() < 1e-6);
        let p = Potential::radial_power(2.0, 1.0).unwrap();
        let fd = quarter_laplacian_check(&p, c(0.5, 0.0), 1e-4).unwrap();
        assert!((fd - 1.0).abs() < 1e-6);
        assert!((p.laplacian_quarter(c(0.5, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_outside_range_rejected() {
        let g = Potential::ginibre();
        assert!(quarter_laplacian_check(&g, c(0.0, 0.0), 1e-2).is_err());
    }

    #[test]
    fn droplets_of_radial_families() {
        let d = droplet_of(&Potential::ginibre()).unwrap();
        assert_eq!(d.shape, DropletShape::Disc { radius: 1.0 });
        assert_eq!(d.phi(c(0.3, 2.0)), c(0.3, 2.0));
        assert_eq!(d.map.dphi_at_infinity(), 1.0);
        let p = droplet_of(&Potential::radial_power(2.0, 1.0).unwrap()).unwrap();
        let DropletShape::Disc { radius } = p.shape else {
            panic!("expected disc")
        };
        assert!((radius - 0.5f64.powf(0.25)).abs() < 1e-10);
    }

    #[test]
    fn equilibrium_masses() {
        for pot in [
            Potential::ginibre(),
            Potential::elliptic_ginibre(0.5).unwrap(),
            Potential::elliptic_ginibre(-0.3).unwrap(),
            Potential::radial_power(2.0, 1.0).unwrap(),
            Potential::radial_power(1.5, 3.0).unwrap(),
        ] {
            let d = droplet_of(&pot).unwrap();
            let m = equilibrium_mass(&pot, &d).unwrap();
            assert!((m - 1.0).abs() < 1e-8, "{pot}: {m}");
        }
    }

    #[test]
    fn elliptic_droplet_semi_axes() {
        let d = droplet_of(&Potential::elliptic_ginibre(0.5).unwrap()).unwrap();
        let DropletShape::Ellipse { semi_x, semi_y } = d.shape else {
            panic!("expected ellipse")
        };
        assert!((semi_x - 3f64.sqrt()).abs() < 1e-14);
        assert!((semi_y - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn disc_boundary_geometry() {
        let d = Droplet::disc(0.7);
        let m = 4096;
        let len: f64 = (0..m)
            .map(|k| d.boundary(2.0 * PI * k as f64 / m as f64).speed)
            .sum::<f64>()
            * 2.0
            * PI
            / m as f64;
        assert!((len - 2.0 * PI * 0.7).abs() < 1e-8);
        for k in 0..16 {
            let b = d.boundary(k as f64 * 0.4);
            assert!((b.curvature - 1.0 / 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn polarizations_are_consistent() {
        Potential::ginibre().check_polarization().unwrap();
        Potential::elliptic_ginibre(0.5).unwrap().check_polarization().unwrap();
        Potential::radial_power(2.0, 1.0).unwrap().check_polarization().unwrap();
    }

    #[test]
    fn growth_condition() {
        Potential::ginibre().check_growth().unwrap();
        Potential::elliptic_ginibre(0.9).unwrap().check_growth().unwrap();
        let flat = RadialTable::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 0.0]).unwrap();
        assert!(Potential::radial_table(flat).is_err());
    }

    #[test]
    fn table_reproduces_quadratic() {
        let r: Vec<f64> = (0..=200).map(|k| k as f64 * 0.02).collect();
        let q: Vec<f64> = r.iter().map(|x| x * x).collect();
        let pot = Potential::radial_table(RadialTable::new(r, q).unwrap()).unwrap();
        assert!((pot.eval(c(0.5, 0.3)) - 0.34).abs() < 1e-6);
        assert!((pot.laplacian_quarter(c(0.6, 0.0)) - 1.0).abs() < 1e-3);
        let d = droplet_of(&pot).unwrap();
        let DropletShape::Disc { radius } = d.shape else {
            panic!("expected disc")
        };
        assert!((radius - 1.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn joukowski_round_trip(tau in -0.9f64..0.9, rho in 1.0f64..3.0, t in 0.0f64..6.3) {
            let map = JoukowskiMap { c: 1.0 / (1.0 - tau * tau).sqrt(), tau };
            let zeta = Complex64::from_polar(rho, t);
            prop_assert!((map.phi(map.psi(zeta)) - zeta).norm() <= 1e-10);
        }

        #[test]
        fn boundary_lies_on_unit_circle(tau in -0.9f64..0.9, t in 0.0f64..6.3) {
            let d = Droplet::ellipse_from_map(1.0 / (1.0 - tau * tau).sqrt(), tau);
            let b = d.boundary(t);
            let zeta = d.phi(b.z);
            prop_assert!((zeta.norm() - 1.0).abs() <= 1e-10);
            let dphi = d.dphi(b.z);
            let normal = zeta * dphi.conj() / dphi.norm();
            prop_assert!((normal - b.normal).norm() <= 1e-10);
            prop_assert!(dphi.norm() > 0.0);
        }
    }
}
