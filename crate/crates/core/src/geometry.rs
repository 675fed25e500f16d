//! Regions, perimeters, boundary integrals, droplet dilations and the planar
//! grids used to integrate kernels over them.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::{Droplet, Potential};
use crate::quadrature::{composite, composite_breaks, gauss_legendre, QuadratureGrid};

/// Samples per closed curve before adaptive doubling.
pub const MIN_BOUNDARY_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum RegionKind {
    Disc {
        center: Complex64,
        radius: f64,
    },
    /// Simple polygon, vertices counterclockwise.
    Polygon {
        vertices: Vec<Complex64>,
    },
    /// `A_n(delta)`: the droplet pushed out (or in) by `delta / sqrt(2 n Delta Q)` along the normal.
    DropletDilation {
        delta: f64,
        n: usize,
        droplet: Droplet,
    },
}

/// A measurable set `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub kind: RegionKind,
    potential: Option<Potential>,
}

/// A boundary quadrature node.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySample {
    pub point: Complex64,
    pub normal: Complex64,
    /// Arc-length weight.
    pub weight: f64,
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn signed_area(v: &[Complex64]) -> f64 {
    let m = v.len();
    0.5 * (0..m).map(|i| cross(v[i], v[(i + 1) % m])).sum::<f64>()
}

fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

impl Region {
    pub fn disc(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "disc radius must be positive, got {radius}"
            )));
        }
        Ok(Region {
            kind: RegionKind::Disc { center, radius },
            potential: None,
        })
    }

    /// Simple polygon; clockwise input is reversed.
    pub fn polygon(mut vertices: Vec<Complex64>) -> Result<Self> {
        let m = vertices.len();
        if m < 3 {
            return Err(Error::InvalidParameter("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("polygon has non-finite vertices".into()));
        }
        for i in 0..m {
            for j in i + 1..m {
                if (j + 1) % m == i || j == i + 1 {
                    continue;
                }
                if segments_intersect(vertices[i], vertices[(i + 1) % m], vertices[j], vertices[(j + 1) % m]) {
                    return Err(Error::InvalidParameter(format!("polygon edges {i} and {j} intersect")));
                }
            }
            if vertices[i] == vertices[(i + 1) % m] {
                return Err(Error::InvalidParameter("polygon has repeated vertices".into()));
            }
        }
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(Error::InvalidParameter("polygon has zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Region {
            kind: RegionKind::Polygon { vertices },
            potential: None,
        })
    }

    /// Axis-aligned square with the given centre and side.
    pub fn square(center: Complex64, side: f64) -> Result<Self> {
        let h = 0.5 * side;
        Region::polygon(vec![
            center + Complex64::new(-h, -h),
            center + Complex64::new(h, -h),
            center + Complex64::new(h, h),
            center + Complex64::new(-h, h),
        ])
    }

    /// Regular polygon inscribed in a circle.
    pub fn regular_polygon(center: Complex64, radius: f64, sides: usize) -> Result<Self> {
        Region::polygon(
            (0..sides)
                .map(|k| center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / sides as f64))
                .collect(),
        )
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            RegionKind::Disc { center, radius } => {
                format!("disc(center={}{:+}i,radius={})", center.re, center.im, radius)
            }
            RegionKind::Polygon { vertices } => format!("polygon({} vertices)", vertices.len()),
            RegionKind::DropletDilation { delta, n, .. } => format!("dilation(delta={delta},n={n})"),
        }
    }

    pub fn area(&self) -> f64 {
        match &self.kind {
            RegionKind::Disc { radius, .. } => PI * radius * radius,
            RegionKind::Polygon { vertices } => signed_area(vertices),
            RegionKind::DropletDilation { .. } => {
                let s = self.boundary_samples(MIN_BOUNDARY_SAMPLES);
                0.5 * s.iter().map(|b| (b.point.conj() * b.normal).re * b.weight).sum::<f64>()
            }
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match &self.kind {
            RegionKind::Disc { center, radius } => (z - center).norm() <= *radius,
            RegionKind::Polygon { vertices } => {
                let m = vertices.len();
                let mut inside = false;
                for i in 0..m {
                    let (a, b) = (vertices[i], vertices[(i + 1) % m]);
                    if (a.im > z.im) != (b.im > z.im) {
                        let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
                        if z.re < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
            RegionKind::DropletDilation { delta, n, droplet } => {
                let p = self.potential.as_ref().expect("dilation carries its potential");
                let (t, d) = project_to_boundary(droplet, z);
                let z0 = droplet.boundary(t).z;
                d * (2.0 * *n as f64 * p.laplacian_quarter(z0)).sqrt() <= *delta
            }
        }
    }

    /// Boundary nodes with outward normals and arc-length weights.
    pub fn boundary_samples(&self, m: usize) -> Vec<BoundarySample> {
        match &self.kind {
            RegionKind::Disc { center, radius } => (0..m)
                .map(|k| {
                    let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
                    BoundarySample {
                        point: center + e * radius,
                        normal: e,
                        weight: 2.0 * PI * radius / m as f64,
                    }
                })
                .collect(),
            RegionKind::Polygon { vertices } => {
                let per_edge = (m / vertices.len()).max(1);
                let panels = per_edge.div_ceil(16);
                let nodes = composite(0.0, 1.0, panels, 16);
                let mut out = Vec::with_capacity(nodes.len() * vertices.len());
                for i in 0..vertices.len() {
                    let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
                    let edge = b - a;
                    let len = edge.norm();
                    let normal = Complex64::new(edge.im, -edge.re) / len;
                    for &(s, w) in &nodes {
                        out.push(BoundarySample {
                            point: a + edge * s,
                            normal,
                            weight: w * len,
                        });
                    }
                }
                out
            }
            RegionKind::DropletDilation { delta, n, droplet } => {
                let p = self.potential.as_ref().expect("dilation carries its potential");
                (0..m)
                    .map(|k| {
                        let b = droplet.boundary(2.0 * PI * k as f64 / m as f64);
                        let s = delta / (2.0 * *n as f64 * p.laplacian_quarter(b.z)).sqrt();
                        BoundarySample {
                            point: b.z + b.normal * s,
                            normal: b.normal,
                            weight: b.speed * (1.0 + b.curvature * s) * 2.0 * PI / m as f64,
                        }
                    })
                    .collect()
            }
        }
    }

    /// Smallest signed distance from the region boundary to the droplet
    /// boundary (positive when the region sits inside the droplet interior).
    pub fn clearance(&self, droplet: &Droplet) -> f64 {
        self.boundary_samples(1024)
            .iter()
            .map(|b| -project_to_boundary(droplet, b.point).1)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Nearest boundary parameter and signed distance (positive outside).
pub fn project_to_boundary(droplet: &Droplet, z: Complex64) -> (f64, f64) {
    let coarse = 512;
    let dist = |t: f64| (droplet.boundary(t).z - z).norm_sqr();
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for k in 0..coarse {
        let t = 2.0 * PI * k as f64 / coarse as f64;
        let d = dist(t);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    // golden-section refinement on the bracketing cell
    let h = 2.0 * PI / coarse as f64;
    let (mut a, mut b) = (best_t - h, best_t + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (dist(c), dist(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = dist(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = dist(d);
        }
    }
    let t = (0.5 * (a + b)).rem_euclid(2.0 * PI);
    let r = dist(t).sqrt();
    let signed = if droplet.contains(z) { -r } else { r };
    (t, signed)
}

/// `H^1(dA)` for discs and polygons.
pub fn perimeter(a: &Region) -> Result<f64> {
    match &a.kind {
        RegionKind::Disc { radius, .. } => Ok(2.0 * PI * radius),
        RegionKind::Polygon { vertices } => Ok((0..vertices.len())
            .map(|i| (vertices[(i + 1) % vertices.len()] - vertices[i]).norm())
            .sum()),
        RegionKind::DropletDilation { .. } => Err(Error::Unsupported(
            "perimeter of a droplet dilation; use the harmonic-measure integral".into(),
        )),
    }
}

/// Boundary integral of `omega`, doubling the sample count until the relative
/// change drops below `1e-9`.
pub fn boundary_integral<F: Fn(Complex64) -> Result<f64>>(a: &Region, omega: F) -> Result<f64> {
    if matches!(a.kind, RegionKind::DropletDilation { .. }) {
        return Err(Error::Unsupported("boundary integral over a droplet dilation".into()));
    }
    let integrate = |m: usize| -> Result<f64> {
        let mut s = 0.0;
        for b in a.boundary_samples(m) {
            s += b.weight * omega(b.point)?;
        }
        Ok(s)
    };
    let mut m = MIN_BOUNDARY_SAMPLES;
    let mut prev = integrate(m)?;
    loop {
        m *= 2;
        let cur = integrate(m)?;
        if (cur - prev).abs() <= 1e-9 * cur.abs() {
            return Ok(cur);
        }
        if m > 1 << 22 {
            return Err(Error::Quadrature("boundary integral did not converge".into()));
        }
        prev = cur;
    }
}

/// `int_{dA} sqrt(Delta Q) dH^1`.
pub fn weighted_perimeter(a: &Region, p: &Potential) -> Result<f64> {
    boundary_integral(a, |z| {
        let l = p.laplacian_quarter(z);
        if !(l > 0.0) {
            return Err(Error::Hypothesis(format!("Delta Q = {l} <= 0 at boundary point {z}")));
        }
        Ok(l.sqrt())
    })
}

/// `A_n(delta)`; fails if the normal offsets cross.
pub fn dilated_droplet(d: &Droplet, p: &Potential, delta: f64, n: usize) -> Result<Region> {
    if n == 0 || !delta.is_finite() {
        return Err(Error::InvalidParameter("dilation needs n > 0 and finite delta".into()));
    }
    let m = 1024;
    let worst = (0..m)
        .map(|k| {
            let b = d.boundary(2.0 * PI * k as f64 / m as f64);
            b.curvature.abs() * delta.abs() / (2.0 * n as f64 * p.laplacian_quarter(b.z)).sqrt()
        })
        .fold(0.0, f64::max);
    if worst >= 1.0 {
        return Err(Error::NTooSmall(format!(
            "normal map not injective: max |kappa| |delta| / sqrt(2 n Delta Q) = {worst}"
        )));
    }
    Ok(Region {
        kind: RegionKind::DropletDilation { delta, n, droplet: *d },
        potential: Some(p.clone()),
    })
}

/// `(|phi'(z0)| / sqrt(2 n Delta Q)) (1 - kappa xi / sqrt(2 n Delta Q))`.
pub fn jacobian_h(d: &Droplet, p: &Potential, z0: Complex64, xi: f64, n: usize) -> f64 {
    let t = d.phi(z0).arg();
    let kappa = d.boundary(t).curvature;
    let s = (2.0 * n as f64 * p.laplacian_quarter(z0)).sqrt();
    d.dphi(z0).norm() / s * (1.0 - kappa * xi / s)
}

/// Largest `Delta Q` over a sample of the droplet and its boundary.
fn max_laplacian(d: &Droplet, p: &Potential) -> f64 {
    let mut m: f64 = 0.0;
    for k in 0..64 {
        let b = d.boundary(2.0 * PI * k as f64 / 64.0);
        for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
            m = m.max(p.laplacian_quarter(b.z * f));
        }
    }
    m
}

/// Microscopic length `1 / sqrt(n max Delta Q)`.
pub fn kernel_scale(d: &Droplet, p: &Potential, n: usize) -> f64 {
    1.0 / (n as f64 * max_laplacian(d, p)).sqrt()
}

/// Exterior cutoff beyond which the one-point density is below `1e-14`.
pub fn exterior_margin(d: &Droplet, p: &Potential, n: usize) -> f64 {
    8.0 * kernel_scale(d, p, n) * max_laplacian(d, p).sqrt()
        / (0..64)
            .map(|k| p.laplacian_quarter(d.boundary(2.0 * PI * k as f64 / 64.0).z))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
}

fn angular_count(n: usize, budget: usize, outer: f64, sigma: f64) -> usize {
    let base = (4 * n + 64).max((8.0 * PI * outer / sigma).ceil() as usize);
    (base * budget).div_ceil(16).max(8)
}

/// Grid over the whole plane (droplet plus exterior collar) in the
/// coordinates `z = psi(rho e^{i theta})` of the exterior map.
pub fn plane_grid(d: &Droplet, p: &Potential, n: usize, budget: usize) -> Result<QuadratureGrid> {
    if budget < 2 {
        return Err(Error::InvalidParameter("quadrature budget must be at least 2".into()));
    }
    let map = d.map;
    let sigma = kernel_scale(d, p, n);
    let stretch_max = map.c * (1.0 + map.tau.abs());
    let stretch_min = map.c * (1.0 - map.tau.abs());
    let rho0 = map.inner_radius();
    let rho_max = 1.0 + exterior_margin(d, p, n) / stretch_min;
    let dr = sigma / stretch_max;
    let radial = composite_breaks(&[rho0, 1.0, rho_max], dr, budget);
    let n_theta = angular_count(n, budget, stretch_max * rho_max, sigma);
    Ok(map.annulus_grid(&radial, n_theta))
}

/// Interior and exterior grids for a disc region, split along its boundary.
pub fn disc_grids(
    center: Complex64,
    radius: f64,
    d: &Droplet,
    p: &Potential,
    n: usize,
    budget: usize,
) -> (QuadratureGrid, QuadratureGrid) {
    let sigma = kernel_scale(d, p, n);
    let far = center.norm() + d.circumradius() + exterior_margin(d, p, n);
    let inner = composite_breaks(&[0.0, radius], sigma, budget);
    let outer = composite_breaks(&[radius, far.max(radius + sigma)], sigma, budget);
    let n_theta = angular_count(n, budget, far, sigma);
    (
        QuadratureGrid::polar(center, &inner, n_theta, 0.0),
        QuadratureGrid::polar(center, &outer, n_theta, 0.0),
    )
}

/// Ear-clipping triangulation of a counterclockwise simple polygon.
pub fn triangulate(vertices: &[Complex64]) -> Vec<[Complex64; 3]> {
    let mut idx: Vec<usize> = (0..vertices.len()).collect();
    let mut tris = Vec::with_capacity(vertices.len().saturating_sub(2));
    let mut guard = 0;
    while idx.len() > 3 && guard < 10 * vertices.len() * vertices.len() {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for i in 0..m {
            let (ia, ib, ic) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (a, b, c) = (vertices[ia], vertices[ib], vertices[ic]);
            if cross(b - a, c - b) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&k| {
                if k == ia || k == ib || k == ic {
                    return false;
                }
                let q = vertices[k];
                cross(b - a, q - a) >= 0.0 && cross(c - b, q - b) >= 0.0 && cross(a - c, q - c) >= 0.0
            });
            if blocked {
                continue;
            }
            tris.push([a, b, c]);
            idx.remove(i);
            clipped = true;
            break;
        }
        if !clipped {
            break;
        }
    }
    if idx.len() == 3 {
        tris.push([vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]]);
    }
    tris
}

/// Collapsed Gauss rule over a polygon, subdivided to the kernel scale.
pub fn polygon_grid(vertices: &[Complex64], sigma: f64, budget: usize) -> QuadratureGrid {
    let mut grid = QuadratureGrid::default();
    for tri in triangulate(vertices) {
        let edge = (0..3).map(|i| (tri[(i + 1) % 3] - tri[i]).norm()).fold(0.0, f64::max);
        let levels = (edge / (2.0 * sigma)).log2().ceil().max(0.0) as u32;
        grid.extend(&QuadratureGrid::triangle(tri, budget, levels));
    }
    grid
}

/// Signed grid for `A_n(delta)`: droplet interior plus (or minus) the normal
/// collar between the boundary and the dilated curve.
pub fn dilation_grid(
    d: &Droplet,
    p: &Potential,
    delta: f64,
    dilation_n: usize,
    n: usize,
    budget: usize,
) -> QuadratureGrid {
    let sigma = kernel_scale(d, p, n);
    let map = d.map;
    let stretch_max = map.c * (1.0 + map.tau.abs());
    let radial = composite_breaks(&[map.inner_radius(), 1.0], sigma / stretch_max, budget);
    let n_theta = angular_count(n, budget, d.circumradius() + sigma, sigma);
    let mut grid = map.annulus_grid(&radial, n_theta);
    if delta != 0.0 {
        let (t0, t1) = if delta > 0.0 { (0.0, delta) } else { (delta, 0.0) };
        let sign = delta.signum();
        let tn = composite(t0, t1, (delta.abs() / 0.5).ceil() as usize, budget);
        let du = 2.0 * PI / n_theta as f64;
        for k in 0..n_theta {
            let b = d.boundary(du * (k as f64 + 0.5));
            let scale = (2.0 * dilation_n as f64 * p.laplacian_quarter(b.z)).sqrt();
            for &(t, w) in &tn {
                let s = t / scale;
                let jac = b.speed * (1.0 + b.curvature * s) / scale;
                grid.push(b.z + b.normal * s, sign * w * jac * du / PI);
            }
        }
    }
    grid
}

/// Gauss rule on a segment, used for boundary line integrals.
pub fn segment_rule(a: Complex64, b: Complex64, order: usize) -> Vec<(Complex64, f64)> {
    let rule = gauss_legendre(order);
    let len = (b - a).norm();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| (a + (b - a) * (0.5 * (x + 1.0)), 0.5 * w * len))
        .collect()
}
