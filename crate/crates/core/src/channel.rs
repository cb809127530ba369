//! Compound fading/path-loss channel: `Z = |h|^2 / (1 + r^alpha)` with `|h|^2 ~ Exp(1)`
//! and `r` the distance of a uniform point in the `d`-ball.

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::latency::StageDistribution;
use crate::point_process::DiskWindow;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::special_fn::{lower_incomplete_gamma, NeumaierSum};

/// Largest transmitter count for which the alternating closed form is tried.
pub const CLOSED_FORM_MAX_TRANSMITTERS: u32 = 20;

/// Closed-form results whose term-magnitude/result ratio exceeds this are discarded
/// in favour of quadrature. Double-double keeps ~31 digits, so this still leaves
/// ~15 correct digits.
pub const CLOSED_FORM_MAX_CONDITION: f64 = 1e16;

/// Physical and geometric parameters of one broadcast scenario.
///
/// Immutable once built; use the `with_*` methods to derive variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    n_nodes: u32,
    radius: f64,
    dims: u32,
    path_loss_exponent: f64,
    data_rate: f64,
    tx_snr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold_override: Option<f64>,
}

/// `10^(db / 10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl NetworkConfig {
    /// `tx_snr` is the linear ratio `P_tx / sigma_w^2`.
    pub fn new(
        n_nodes: u32,
        radius: f64,
        dims: u32,
        path_loss_exponent: f64,
        data_rate: f64,
        tx_snr: f64,
    ) -> Result<Self> {
        let cfg = Self {
            n_nodes,
            radius,
            dims,
            path_loss_exponent,
            data_rate,
            tx_snr,
            threshold_override: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same as [`NetworkConfig::new`] with the transmit SNR given in dB.
    pub fn with_snr_db(
        n_nodes: u32,
        radius: f64,
        dims: u32,
        path_loss_exponent: f64,
        data_rate: f64,
        snr_db: f64,
    ) -> Result<Self> {
        Self::new(n_nodes, radius, dims, path_loss_exponent, data_rate, db_to_linear(snr_db))
    }

    fn validate(&self) -> Result<()> {
        if self.n_nodes < 1 {
            return Err(Error::domain("n_nodes must be at least 1"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::domain(format!("radius must be positive, got {}", self.radius)));
        }
        if !(1..=3).contains(&self.dims) {
            return Err(Error::domain(format!("dims must be 1, 2 or 3, got {}", self.dims)));
        }
        if !(self.path_loss_exponent > 0.0 && self.path_loss_exponent.is_finite()) {
            return Err(Error::domain(format!(
                "path-loss exponent must be positive, got {}",
                self.path_loss_exponent
            )));
        }
        if !(self.data_rate >= 0.0 && self.data_rate.is_finite()) {
            return Err(Error::domain(format!("data rate must be non-negative, got {}", self.data_rate)));
        }
        if !(self.tx_snr > 0.0 && self.tx_snr.is_finite()) {
            return Err(Error::domain(format!("transmit SNR must be positive, got {}", self.tx_snr)));
        }
        if let Some(t) = self.threshold_override {
            if !(t >= 0.0) {
                return Err(Error::domain(format!("threshold must be non-negative, got {t}")));
            }
        }
        Ok(())
    }

    /// Pins the decoding threshold directly, bypassing `(2^rate - 1) / snr`.
    pub fn with_threshold(mut self, theta: f64) -> Result<Self> {
        self.threshold_override = Some(theta);
        self.validate()?;
        Ok(self)
    }

    pub fn with_nodes(mut self, n_nodes: u32) -> Result<Self> {
        self.n_nodes = n_nodes;
        self.validate()?;
        Ok(self)
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        self.radius = radius;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tx_snr(mut self, tx_snr: f64) -> Result<Self> {
        self.tx_snr = tx_snr;
        self.validate()?;
        Ok(self)
    }

    pub fn n_nodes(&self) -> u32 {
        self.n_nodes
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dims(&self) -> u32 {
        self.dims
    }

    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }

    pub fn data_rate(&self) -> f64 {
        self.data_rate
    }

    pub fn tx_snr(&self) -> f64 {
        self.tx_snr
    }

    pub fn tx_snr_db(&self) -> f64 {
        10.0 * self.tx_snr.log10()
    }

    /// `delta = d / alpha`.
    pub fn delta(&self) -> f64 {
        f64::from(self.dims) / self.path_loss_exponent
    }

    pub fn threshold(&self) -> f64 {
        threshold(self)
    }

    pub fn window(&self) -> DiskWindow {
        DiskWindow::new(self.radius, self.dims).expect("validated config")
    }

    /// `R^d`
    pub(crate) fn radius_pow_dims(&self) -> f64 {
        self.radius.powi(self.dims as i32)
    }

    /// `R^alpha`
    pub(crate) fn radius_pow_alpha(&self) -> f64 {
        self.radius.powf(self.path_loss_exponent)
    }

    fn delta_is_one(&self) -> bool {
        self.path_loss_exponent == f64::from(self.dims)
    }
}

/// Decoding threshold `theta = (2^rate - 1) / tx_snr`, unless overridden.
pub fn threshold(cfg: &NetworkConfig) -> f64 {
    cfg.threshold_override
        .unwrap_or_else(|| (cfg.data_rate.exp2() - 1.0) / cfg.tx_snr)
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("threshold must be in [0, inf], got {theta}")))
    }
}

/// `1 - F_Z(theta)`: the probability that a single source-to-node link succeeds.
///
/// Computed directly as `delta e^(-theta) gamma(delta, R^alpha theta) / (R^d theta^delta)`
/// so that it keeps full relative precision when it is small.
pub fn ccdf_z(theta: f64, cfg: &NetworkConfig) -> Result<f64> {
    check_theta(theta)?;
    if theta == 0.0 {
        return Ok(1.0);
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    let delta = cfg.delta();
    let g = lower_incomplete_gamma(delta, cfg.radius_pow_alpha() * theta)?;
    let v = delta * (-theta).exp() * g / (cfg.radius_pow_dims() * theta.powf(delta));
    Ok(v.clamp(0.0, 1.0))
}

/// CDF of the compound variable `Z`, `F_Z(theta) = 1 - delta e^(-theta) gamma(delta, R^alpha theta) / (R^d theta^delta)`.
///
/// The incomplete gamma is evaluated at `R^alpha theta`, which is what the integral over
/// the radial density produces. `F_Z(0) = 0` and `F_Z(inf) = 1`.
pub fn cdf_z(theta: f64, cfg: &NetworkConfig) -> Result<f64> {
    Ok(1.0 - ccdf_z(theta, cfg)?)
}

/// Distribution of the number of successes when the source transmits to
/// `n_receivers` unreached nodes: `Binomial(n_receivers, 1 - F_Z(theta))`.
pub fn stage_success_pmf_noncoop(n_receivers: u32, cfg: &NetworkConfig) -> Result<StageDistribution> {
    if n_receivers < 1 {
        return Err(Error::domain("stage distribution needs at least one receiver"));
    }
    let theta = cfg.threshold();
    let success = ccdf_z(theta, cfg)?;
    let failure = cdf_z(theta, cfg)?;
    Ok(StageDistribution::binomial(n_receivers, success, failure))
}

/// Distribution of the number of successes in a cooperative slot with
/// `n_transmitters` reached nodes and `n_receivers` unreached ones. With no
/// transmitters yet the source is the only sender.
pub fn stage_success_pmf_coop(
    n_receivers: u32,
    n_transmitters: u32,
    cfg: &NetworkConfig,
) -> Result<StageDistribution> {
    if n_transmitters == 0 {
        return stage_success_pmf_noncoop(n_receivers, cfg);
    }
    if n_receivers < 1 {
        return Err(Error::domain("stage distribution needs at least one receiver"));
    }
    let ps = coop_success_prob(n_transmitters, cfg)?;
    Ok(StageDistribution::binomial(n_receivers, ps, 1.0 - ps))
}

/// Probability that a receiver at the cell centre decodes the signal of the nearest of
/// `n_transmitters` uniformly placed transmitters.
///
/// Uses the closed form when `delta = 1`, `T <= 20` and the alternating sum is well
/// conditioned; otherwise adaptive quadrature.
pub fn coop_success_prob(n_transmitters: u32, cfg: &NetworkConfig) -> Result<f64> {
    if n_transmitters < 1 {
        return Err(Error::domain("cooperative success needs at least one transmitter"));
    }
    let theta = cfg.threshold();
    if theta == 0.0 {
        return Ok(1.0);
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    if cfg.delta_is_one() && n_transmitters <= CLOSED_FORM_MAX_TRANSMITTERS {
        return Ok(closed_form(n_transmitters, theta, cfg.radius_pow_dims()).clamp(0.0, 1.0));
    }
    coop_success_prob_quadrature(n_transmitters, cfg)
}

/// The `delta = 1` closed form
/// `e^(-theta) T! ( sum_{i<T} (-1)^i / ((theta R^d)^(i+1) (T-1-i)!) - (-1)^(T-1) e^(-theta R^d) / (theta R^d)^T )`,
/// evaluated in double-double arithmetic.
///
/// When the alternating sum is too ill-conditioned even for double-double (small
/// `theta R^d`), the same quantity is summed in its Kummer-transformed form
/// `e^(-theta) sum_m Pois(m; theta R^d) T / (T + m)`, whose terms are all positive.
pub fn coop_success_prob_closed_form(n_transmitters: u32, cfg: &NetworkConfig) -> Result<f64> {
    if n_transmitters < 1 {
        return Err(Error::domain("cooperative success needs at least one transmitter"));
    }
    if !cfg.delta_is_one() {
        return Err(Error::domain(format!(
            "closed form needs d / alpha = 1, got {}",
            cfg.delta()
        )));
    }
    let theta = cfg.threshold();
    if theta == 0.0 {
        return Ok(1.0);
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    Ok(closed_form(n_transmitters, theta, cfg.radius_pow_dims()))
}

fn closed_form(t: u32, theta: f64, r_pow_d: f64) -> f64 {
    let (value, condition) = closed_form_dd(t, theta, r_pow_d);
    // large x keeps the alternating sum well conditioned, and e^(-x) would underflow below
    if (condition <= CLOSED_FORM_MAX_CONDITION && value.is_finite()) || theta * r_pow_d > 600.0 {
        value
    } else {
        closed_form_poisson_series(t, theta, theta * r_pow_d)
    }
}

/// `e^(-theta) sum_{m>=0} e^(-x) x^m / m! * T / (T + m)`.
fn closed_form_poisson_series(t: u32, theta: f64, x: f64) -> f64 {
    let t = f64::from(t);
    let mut pois = (-x).exp();
    let mut sum = NeumaierSum::default();
    let mut m = 0.0;
    loop {
        let term = pois * t / (t + m);
        sum.add(term);
        m += 1.0;
        if m > x && term < 1e-18 * sum.total() {
            break;
        }
        pois *= x / m;
    }
    (-theta).exp() * sum.total()
}

/// Returns `(value, condition)` where `condition` is the ratio of the summed term
/// magnitudes to the magnitude of the bracket.
fn closed_form_dd(t: u32, theta: f64, r_pow_d: f64) -> (f64, f64) {
    let x = theta * r_pow_d;
    let inv_x = Dd::ONE / Dd::from_f64(x);

    // factorials 0!..=T! are exact in double-double for T <= 30
    let mut fact = Vec::with_capacity(t as usize + 1);
    fact.push(Dd::ONE);
    for k in 1..=t {
        let prev = *fact.last().expect("non-empty");
        fact.push(prev * Dd::from_f64(f64::from(k)));
    }

    let mut bracket = Dd::ZERO;
    let mut magnitude = Dd::ZERO;
    let mut pow = Dd::ONE;
    for i in 0..t {
        pow = pow * inv_x;
        let term = pow / fact[(t - 1 - i) as usize];
        magnitude = magnitude + term;
        bracket = if i % 2 == 0 { bracket + term } else { bracket - term };
    }
    // pow == x^(-T) here
    let tail = if x > 700.0 { Dd::ZERO } else { pow / Dd::exp(x) };
    magnitude = magnitude + tail;
    bracket = if (t - 1) % 2 == 0 { bracket - tail } else { bracket + tail };

    let condition = (magnitude / bracket.abs()).to_f64();
    let value = (-theta).exp() * (fact[t as usize] * bracket).to_f64();
    (value, condition)
}

/// Numerical route for any `delta`:
/// `T e^(-theta) ∫₀¹ (1 - v)^(T-1) exp(-theta R^alpha v^(1/delta)) dv`,
/// which is the nearest-transmitter integral after `u = y^delta` and `u = R^d v`.
pub fn coop_success_prob_quadrature(n_transmitters: u32, cfg: &NetworkConfig) -> Result<f64> {
    if n_transmitters < 1 {
        return Err(Error::domain("cooperative success needs at least one transmitter"));
    }
    let theta = cfg.threshold();
    if theta == 0.0 {
        return Ok(1.0);
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    let inv_delta = 1.0 / cfg.delta();
    let scale = theta * cfg.radius_pow_alpha();
    let t = n_transmitters as i32;
    let opts = QuadratureOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let q = integrate(
        |v| (1.0 - v).powi(t - 1) * (-scale * v.powf(inv_delta)).exp(),
        0.0,
        1.0,
        opts,
    )?;
    Ok((f64::from(n_transmitters) * (-theta).exp() * q.value).clamp(0.0, 1.0))
}
