//! Binomial point process in a `d`-ball centred at the origin.
//!
//! Only origin-referenced (isotropic) distance laws are provided. For a reference
//! point away from the centre the ball around it is clipped by the window and the
//! laws below no longer hold; the simulator is what measures that gap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::NetworkConfig;
use crate::error::{Error, Result};
use crate::special_fn::{ln_binomial_pmf, NeumaierSum};

/// Observation window: the `d`-ball of radius `R` around the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskWindow {
    radius: f64,
    dims: u32,
}

impl DiskWindow {
    pub fn new(radius: f64, dims: u32) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!("window radius must be positive, got {radius}")));
        }
        if !(1..=3).contains(&dims) {
            return Err(Error::domain(format!("window dims must be 1, 2 or 3, got {dims}")));
        }
        Ok(Self { radius, dims })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dims(&self) -> u32 {
        self.dims
    }

    /// Fraction of the window's measure inside the concentric ball of radius `r`.
    pub fn ball_fraction(&self, r: f64) -> f64 {
        (r / self.radius).powi(self.dims as i32).clamp(0.0, 1.0)
    }

    /// Radial coordinate of a uniform point, by inversion: `R u^(1/d)`.
    pub fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self.dims {
            1 => self.radius * u,
            2 => self.radius * u.sqrt(),
            _ => self.radius * u.cbrt(),
        }
    }

    /// Writes a uniform point of the window into `out` (length `dims`).
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dims as usize);
        let r = self.sample_radius(rng);
        match self.dims {
            1 => {
                out[0] = if rng.random::<bool>() { r } else { -r };
            }
            2 => {
                let phi = std::f64::consts::TAU * rng.random::<f64>();
                out[0] = r * phi.cos();
                out[1] = r * phi.sin();
            }
            _ => {
                let z = 2.0 * rng.random::<f64>() - 1.0;
                let phi = std::f64::consts::TAU * rng.random::<f64>();
                let rho = (1.0 - z * z).max(0.0).sqrt();
                out[0] = r * rho * phi.cos();
                out[1] = r * rho * phi.sin();
                out[2] = r * z;
            }
        }
    }
}

/// A realisation of node positions, stored as a flat coordinate buffer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    dims: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dims: u32) -> Self {
        Self {
            dims: dims as usize,
            coords: Vec::new(),
        }
    }

    pub fn from_points(dims: u32, points: &[&[f64]]) -> Result<Self> {
        let mut set = Self::new(dims);
        for p in points {
            if p.len() != dims as usize {
                return Err(Error::domain(format!(
                    "point has {} coordinates, expected {dims}",
                    p.len()
                )));
            }
            set.coords.extend_from_slice(p);
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        if self.dims == 0 {
            0
        } else {
            self.coords.len() / self.dims
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dims.max(1))
    }

    pub fn clear(&mut self) {
        self.coords.clear();
    }
}

/// `n` i.i.d. uniform points in the window.
pub fn sample_bpp<R: Rng + ?Sized>(n: usize, window: &DiskWindow, rng: &mut R) -> PointSet {
    let mut set = PointSet::new(window.dims);
    sample_bpp_into(&mut set, n, window, rng);
    set
}

/// Refills `set` in place with `n` uniform points; reuses its allocation.
pub fn sample_bpp_into<R: Rng + ?Sized>(set: &mut PointSet, n: usize, window: &DiskWindow, rng: &mut R) {
    let d = window.dims as usize;
    set.dims = d;
    set.coords.clear();
    set.coords.resize(n * d, 0.0);
    for chunk in set.coords.chunks_exact_mut(d) {
        window.sample_point(rng, chunk);
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and distance of the transmitter closest to `receiver`; ties go to the lower index.
pub fn nearest(receiver: &[f64], transmitters: &PointSet) -> Result<(usize, f64)> {
    if transmitters.is_empty() {
        return Err(Error::domain("nearest distance needs at least one transmitter"));
    }
    if receiver.len() != transmitters.dims() {
        return Err(Error::domain("receiver and transmitters differ in dimension"));
    }
    let mut best = (0, f64::INFINITY);
    for (i, p) in transmitters.iter().enumerate() {
        let d2 = squared_distance(receiver, p);
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    Ok((best.0, best.1.sqrt()))
}

pub fn nearest_distance(receiver: &[f64], transmitters: &PointSet) -> Result<f64> {
    nearest(receiver, transmitters).map(|(_, d)| d)
}

/// CCDF of the distance from the origin to the `n_th` nearest of `t` uniform points:
/// `sum_{i < n_th} C(t, i) p^i (1 - p)^(t - i)` with `p = (r / R)^d`.
pub fn nn_ccdf(r: f64, n_th: u32, t: u32, window: &DiskWindow) -> Result<f64> {
    if !(0.0..=window.radius).contains(&r) {
        return Err(Error::domain(format!(
            "distance {r} outside [0, {}]",
            window.radius
        )));
    }
    if n_th < 1 || n_th > t {
        return Err(Error::domain(format!("neighbour order {n_th} not in [1, {t}]")));
    }
    let p = window.ball_fraction(r);
    let q = 1.0 - p;
    let total: NeumaierSum = (0..n_th)
        .map(|i| ln_binomial_pmf(u64::from(t), u64::from(i), p, q).exp())
        .collect();
    Ok(total.total().clamp(0.0, 1.0))
}

/// Density of `r_1^alpha`, the alpha-th power of the nearest of `t` points to the origin:
/// `(delta T / R^(dT)) (R^d - y^delta)^(T-1) y^(delta-1)` on `[0, R^alpha]`.
///
/// Evaluated in the normalised form `(delta T / R^d) (1 - y^delta / R^d)^(T-1) y^(delta-1)`.
/// Returns `+inf` at `y = 0` when `delta < 1`.
pub fn nn_alpha_pdf(y: f64, t: u32, cfg: &NetworkConfig) -> Result<f64> {
    if t < 1 {
        return Err(Error::domain("nearest-neighbour density needs at least one point"));
    }
    let upper = cfg.radius_pow_alpha();
    if !(0.0..=upper).contains(&y) {
        return Err(Error::domain(format!("y = {y} outside [0, R^alpha = {upper}]")));
    }
    let delta = cfg.delta();
    let rd = cfg.radius_pow_dims();
    let frac = (1.0 - y.powf(delta) / rd).max(0.0);
    Ok(delta * f64::from(t) / rd * frac.powi(t as i32 - 1) * y.powf(delta - 1.0))
}
