//! Renyi-DP accounting for the class-wise mixing mechanism.
//!
//! One released record mixes `l` same-class samples (features clipped to
//! norm `c`, labels one-hot) and adds `N(0, tau_g^2)` noise to both parts, so
//! its per-record RDP cost is the two-mechanism composition
//! `eps(alpha) = alpha (2c^2 + 1) / (l^2 tau_g^2)` (Mironov 2017). Random
//! selection of the `l` samples amplifies this by subsampling with
//! probability `p = lK/N`; the amplified bound and its moment terms `B`/`G`
//! follow the analytical moments expansion of Wang, Balle and
//! Kasiviswanathan (2019). Composition over `T` releases and conversion to
//! `(eps, delta)`-DP happen inside a minimization over integer orders
//! `alpha in {3, ..., alpha_max}`.
//!
//! All functions here are pure; the inverse direction (target epsilon to
//! noise scale) is a bisection on the forward accountant, which is monotone
//! in `tau_g`.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Largest exponent fed to `exp` before an order is declared out of range.
const LN_OVERFLOW: f64 = 709.0;

/// Relative width at which the calibration bisection stops.
const CALIBRATION_REL_TOL: f64 = 1e-5;

/// Budget and mechanism parameters for one generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyParams {
    /// Target privacy budget; `f64::INFINITY` disables noise.
    pub epsilon_target: f64,
    /// DP failure probability, in (0, 1).
    pub delta: f64,
    /// Order of mixture `l`: samples averaged per synthetic record.
    pub mixture_order: usize,
    /// l2 clipping threshold `c` applied during preprocessing.
    pub clip: f64,
    /// Number of released synthetic records `T`.
    pub releases: usize,
    /// Total dataset size `N` across all clients.
    pub dataset_size: usize,
    /// Number of classes `K`.
    pub num_classes: usize,
    /// Number of participating clients `S`.
    pub num_clients: usize,
    /// Upper end of the integer order grid (inclusive).
    pub alpha_max: usize,
}

impl PrivacyParams {
    /// Subsampling probability `p = lK/N`.
    pub fn sampling_probability(&self) -> f64 {
        self.mixture_order as f64 * self.num_classes as f64 / self.dataset_size as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_target > 0.0) {
            return Err(Error::Config(format!(
                "epsilon target must be positive, got {}",
                self.epsilon_target
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.mixture_order == 0 {
            return Err(Error::Config("mixture order must be positive".into()));
        }
        if !(self.clip > 0.0 && self.clip.is_finite()) {
            return Err(Error::Config(format!("clip threshold must be positive, got {}", self.clip)));
        }
        if self.releases == 0 || self.dataset_size == 0 || self.num_classes == 0 || self.num_clients == 0
        {
            return Err(Error::Config("counts must be positive".into()));
        }
        if self.alpha_max < 3 {
            return Err(Error::Config(format!("alpha_max must be at least 3, got {}", self.alpha_max)));
        }
        let p = self.sampling_probability();
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!(
                "sampling probability p = l*K/N = {p} must lie in (0, 1]"
            )));
        }
        if self.releases % self.num_classes != 0 {
            return Err(Error::Config(format!(
                "class count {} must divide release count {}",
                self.num_classes, self.releases
            )));
        }
        if self.dataset_size % self.num_clients != 0 {
            return Err(Error::Config(format!(
                "client count {} must divide dataset size {}",
                self.num_clients, self.dataset_size
            )));
        }
        Ok(())
    }
}

/// Standard deviations of the two per-client noise components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScales {
    /// Independent local noise.
    pub tau_g: f64,
    /// Correlated (zero-sum across clients) noise.
    pub tau_e: f64,
}

impl NoiseScales {
    pub const ZERO: NoiseScales = NoiseScales { tau_g: 0.0, tau_e: 0.0 };
}

/// Outcome of the order minimization, with the full RDP curve retained.
#[derive(Debug, Clone, PartialEq)]
pub struct AccountingReport {
    /// Achieved `(epsilon, delta)`-DP epsilon.
    pub epsilon_achieved: f64,
    /// Order attaining the minimum; 0 when accounting was skipped (no noise).
    pub alpha_star: usize,
    /// Per-record amplified RDP at every non-overflowing order.
    pub rdp_curve: BTreeMap<usize, f64>,
    /// Noise scale the accounting was evaluated at.
    pub tau_g: f64,
    /// Correlated component associated with the run (informational).
    pub tau_e: f64,
    pub delta: f64,
    pub releases: usize,
}

impl AccountingReport {
    /// Marker report for runs without noise (infinite budget).
    pub fn non_private(delta: f64, releases: usize) -> Self {
        AccountingReport {
            epsilon_achieved: f64::INFINITY,
            alpha_star: 0,
            rdp_curve: BTreeMap::new(),
            tau_g: 0.0,
            tau_e: 0.0,
            delta,
            releases,
        }
    }

    /// Flat `key=value` text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "epsilon_achieved={}", self.epsilon_achieved);
        let _ = writeln!(out, "alpha_star={}", self.alpha_star);
        let _ = writeln!(out, "tau_g={}", self.tau_g);
        let _ = writeln!(out, "tau_e={}", self.tau_e);
        let _ = writeln!(out, "delta={}", self.delta);
        let _ = writeln!(out, "releases={}", self.releases);
        out
    }

    /// The RDP curve as `alpha,eps_prime` CSV.
    pub fn rdp_curve_csv(&self) -> String {
        let mut out = String::from("alpha,eps_prime\n");
        for (alpha, eps) in &self.rdp_curve {
            let _ = writeln!(out, "{alpha},{eps}");
        }
        out
    }
}

/// RDP of the Gaussian mechanism: `alpha * sensitivity^2 / (2 sigma^2)`.
/// Zero noise with positive sensitivity costs infinite privacy.
pub fn gaussian_rdp(alpha: f64, sigma: f64, sensitivity: f64) -> f64 {
    if sensitivity == 0.0 {
        return 0.0;
    }
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    alpha * sensitivity * sensitivity / (2.0 * sigma * sigma)
}

/// Per-record RDP of one noisy mixed release: the composition of the feature
/// mechanism (sensitivity `2c/l`) and the label mechanism (sensitivity
/// `sqrt(2)/l`), i.e. `alpha (2c^2 + 1) / (l^2 tau_g^2)`.
pub fn per_sample_rdp(alpha: f64, mixture_order: usize, clip: f64, tau_g: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    if tau_g == 0.0 {
        return f64::INFINITY;
    }
    let l2 = (mixture_order * mixture_order) as f64;
    alpha * (2.0 * clip * clip + 1.0) / (l2 * tau_g * tau_g)
}

fn alpha_overflow() -> Error {
    Error::Accounting("alpha too large for this noise".into())
}

/// `n choose k` as f64 via the multiplicative formula; exact while the value
/// fits an integer-representable f64 and correctly signed/finite far beyond.
fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0_f64;
    for j in 1..=k {
        acc = acc * (n - k + j) as f64 / j as f64;
    }
    acc
}

struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn new() -> Self {
        Kahan { sum: 0.0, carry: 0.0 }
    }

    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Alternating moment term
/// `B(m) = sum_{i=0}^{m} (-1)^i C(m,i) e^{(i-1) eps(i)}`
/// of the subsampling expansion, with compensated summation. Tiny negative
/// results produced by cancellation are clamped to zero; structurally
/// negative values (odd `m >= 3`) pass through and are neutralized by the
/// square-root clamping in [`g_term`].
pub fn b_term(m: usize, mixture_order: usize, clip: f64, tau_g: f64) -> Result<f64> {
    let mut acc = Kahan::new();
    let mut max_abs = 0.0_f64;
    for i in 0..=m {
        let eps_i = per_sample_rdp(i as f64, mixture_order, clip, tau_g);
        let exponent = (i as f64 - 1.0) * eps_i;
        let coeff = binomial(m, i);
        if !exponent.is_finite() || coeff.ln() + exponent > LN_OVERFLOW {
            return Err(alpha_overflow());
        }
        let magnitude = coeff * exponent.exp();
        max_abs = max_abs.max(magnitude);
        acc.add(if i % 2 == 0 { magnitude } else { -magnitude });
    }
    let mut sum = acc.sum;
    if sum < 0.0 && sum.abs() < 1e-12 * max_abs {
        sum = 0.0;
    }
    Ok(sum)
}

fn b_table(m_max: usize, mixture_order: usize, clip: f64, tau_g: f64) -> Vec<Option<f64>> {
    (0..=m_max).map(|m| b_term(m, mixture_order, clip, tau_g).ok()).collect()
}

fn g_from_table(alpha: usize, p: f64, table: &[Option<f64>]) -> Result<f64> {
    let mut acc = Kahan::new();
    for j in 3..=alpha {
        let weight = p.powi(j as i32) * binomial(alpha, j);
        if weight == 0.0 {
            // Nothing sampled at this order; the moment terms are irrelevant
            // even when they overflow.
            continue;
        }
        let b_even = table[2 * (j / 2)].ok_or_else(alpha_overflow)?;
        let b_half = table[j.div_ceil(2)].ok_or_else(alpha_overflow)?;
        // Products with a structurally negative odd-order factor contribute
        // nothing; the true moment they bound is non-negative.
        let arg = (b_even * b_half).max(0.0);
        let term = weight * arg.sqrt();
        if !term.is_finite() {
            return Err(alpha_overflow());
        }
        acc.add(term);
    }
    Ok(acc.sum)
}

/// Higher-order tail of the subsampling expansion:
/// `G(alpha) = sum_{j=3}^{alpha} p^j C(alpha,j) sqrt(B(2 floor(j/2)) B(ceil(j/2)))`.
pub fn g_term(alpha: usize, p: f64, mixture_order: usize, clip: f64, tau_g: f64) -> Result<f64> {
    if alpha < 3 {
        return Err(Error::Config(format!("g_term needs alpha >= 3, got {alpha}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("sampling probability {p} outside [0, 1]")));
    }
    let table = b_table(2 * (alpha / 2), mixture_order, clip, tau_g);
    g_from_table(alpha, p, &table)
}

fn subsampled_from_table(
    alpha: usize,
    p: f64,
    mixture_order: usize,
    clip: f64,
    tau_g: f64,
    table: &[Option<f64>],
) -> Result<f64> {
    if p == 0.0 {
        // Empty sampling: the log argument collapses to 1 at every order.
        return Ok(0.0);
    }
    let eps2 = per_sample_rdp(2.0, mixture_order, clip, tau_g);
    if !eps2.is_finite() || eps2 > LN_OVERFLOW {
        return Err(alpha_overflow());
    }
    let e2 = eps2.exp();
    let linear = p * p * binomial(alpha, 2) * (4.0 * (e2 - 1.0)).min(2.0 * e2);
    let tail = 4.0 * g_from_table(alpha, p, table)?;
    let arg = 1.0 + linear + tail;
    if !arg.is_finite() {
        return Err(alpha_overflow());
    }
    if arg <= 0.0 {
        return Err(Error::Contract(format!(
            "subsampled RDP log argument {arg} at alpha {alpha} is not positive"
        )));
    }
    Ok(arg.ln() / (alpha as f64 - 1.0))
}

/// Amplified per-record RDP at integer order `alpha >= 3`:
/// `eps'(alpha) = ln(1 + p^2 C(alpha,2) min{4(e^{eps(2)} - 1), 2 e^{eps(2)}} + 4 G(alpha)) / (alpha - 1)`.
pub fn subsampled_rdp(alpha: usize, params: &PrivacyParams, tau_g: f64) -> Result<f64> {
    subsampled_rdp_with_p(alpha, params.sampling_probability(), params.mixture_order, params.clip, tau_g)
}

/// As [`subsampled_rdp`] with an explicit sampling probability; used for the
/// local-sampling diagnostic and by tests constructing specific regimes.
pub fn subsampled_rdp_with_p(
    alpha: usize,
    p: f64,
    mixture_order: usize,
    clip: f64,
    tau_g: f64,
) -> Result<f64> {
    if alpha < 3 {
        return Err(Error::Config(format!("subsampled RDP needs alpha >= 3, got {alpha}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("sampling probability {p} outside [0, 1]")));
    }
    let table = b_table(2 * (alpha / 2), mixture_order, clip, tau_g);
    subsampled_from_table(alpha, p, mixture_order, clip, tau_g, &table)
}

fn total_epsilon_with_p(params: &PrivacyParams, tau_g: f64, p: f64) -> Result<AccountingReport> {
    if !(tau_g > 0.0) {
        return Err(Error::Accounting(format!(
            "non-private: accounting needs tau_g > 0, got {tau_g}"
        )));
    }
    let table = b_table(2 * (params.alpha_max / 2), params.mixture_order, params.clip, tau_g);
    let ln_inv_delta = (1.0 / params.delta).ln();
    let releases = params.releases as f64;

    let mut curve = BTreeMap::new();
    let mut best: Option<(usize, f64)> = None;
    for alpha in 3..=params.alpha_max {
        let eps_prime =
            match subsampled_from_table(alpha, p, params.mixture_order, params.clip, tau_g, &table) {
                Ok(v) => v,
                // Orders whose moment terms overflow are outside the useful
                // range for this noise level; exclude them from the min.
                Err(Error::Accounting(_)) => continue,
                Err(other) => return Err(other),
            };
        curve.insert(alpha, eps_prime);
        let total = releases * eps_prime + ln_inv_delta / (alpha as f64 - 1.0);
        if best.map_or(true, |(_, cur)| total < cur) {
            best = Some((alpha, total));
        }
    }

    let (alpha_star, epsilon_achieved) = best.ok_or_else(|| {
        Error::Accounting(format!(
            "noise too small for the accounting range: every order in 3..={} overflowed",
            params.alpha_max
        ))
    })?;
    Ok(AccountingReport {
        epsilon_achieved,
        alpha_star,
        rdp_curve: curve,
        tau_g,
        tau_e: 0.0,
        delta: params.delta,
        releases: params.releases,
    })
}

/// Composes `T` releases and converts to `(epsilon, delta)`-DP, minimizing
/// `T eps'(alpha) + ln(1/delta)/(alpha - 1)` over the integer order grid.
pub fn total_epsilon(params: &PrivacyParams, tau_g: f64) -> Result<AccountingReport> {
    total_epsilon_with_p(params, tau_g, params.sampling_probability())
}

/// Diagnostic re-accounting with the client-local sampling probability
/// `p = lK/(N/S)` instead of the global one. The reported guarantee always
/// uses the global `p`; this exists to expose the gap between the two views.
pub fn total_epsilon_local_p(params: &PrivacyParams, tau_g: f64) -> Result<AccountingReport> {
    let p_local = params.sampling_probability() * params.num_clients as f64;
    if p_local > 1.0 {
        return Err(Error::Config(format!(
            "local sampling probability l*K/(N/S) = {p_local} exceeds 1"
        )));
    }
    total_epsilon_with_p(params, tau_g, p_local)
}

/// Gaussian-mechanism scale for a sensitivity-`1/N` mean query:
/// `tau_pool = sqrt(2 ln(1.25/delta)) / N`.
pub fn pooled_tau(n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((2.0 * (1.25 / delta).ln()).sqrt() / n as f64)
}

/// Per-client noise scale a client must use without correlated assistance:
/// `sqrt(S)` times the centralized scale.
pub fn conventional_local_tau(tau_central: f64, num_clients: usize) -> f64 {
    (num_clients as f64).sqrt() * tau_central
}

/// Splits a local noise requirement of `S * tau_g_central^2` into the CAPE
/// pair: independent part `tau_g_central`, correlated part filling the rest,
/// so `tau_e^2 + tau_g^2 = S * tau_g^2`.
pub fn cape_split(tau_g_central: f64, num_clients: usize) -> NoiseScales {
    NoiseScales {
        tau_g: tau_g_central,
        tau_e: tau_g_central * ((num_clients as f64) - 1.0).sqrt(),
    }
}

/// Finds the smallest noise scale whose forward accounting meets
/// `params.epsilon_target`, by bisection over `tau_g` (the forward map is
/// monotone non-increasing in `tau_g`). Returns the per-client CAPE scales
/// for the calibrated central value together with the accounting report.
///
/// An infinite target short-circuits to zero noise.
pub fn calibrate_tau(params: &PrivacyParams) -> Result<(NoiseScales, AccountingReport)> {
    if params.epsilon_target.is_infinite() {
        return Ok((NoiseScales::ZERO, AccountingReport::non_private(params.delta, params.releases)));
    }
    params.validate()?;
    let target = params.epsilon_target;

    // Err("all orders overflowed") means tau is far too small, i.e. eps is
    // effectively infinite; that keeps the low end of the bracket valid.
    let achieved = |tau: f64| -> Result<f64> {
        match total_epsilon(params, tau) {
            Ok(report) => Ok(report.epsilon_achieved),
            Err(Error::Accounting(_)) => Ok(f64::INFINITY),
            Err(other) => Err(other),
        }
    };

    let mut lo = 1e-4_f64;
    let mut hi = 1e4_f64;
    if achieved(lo)? <= target {
        return Err(Error::Calibration(format!(
            "target epsilon {target} needs less noise than the bracket floor: \
             eps({lo}) = {} already satisfies it",
            achieved(lo)?
        )));
    }
    let mut expansions = 0;
    while achieved(hi)? > target {
        hi *= 2.0;
        expansions += 1;
        if expansions > 10 {
            return Err(Error::Calibration(format!(
                "target epsilon {target} unreachable: bracket grew to [{lo}, {hi}] \
                 and achieved epsilon is still {}",
                achieved(hi)?
            )));
        }
    }

    // Invariant: eps(lo) > target >= eps(hi). Geometric bisection.
    while hi / lo > 1.0 + CALIBRATION_REL_TOL {
        let mid = (lo * hi).sqrt();
        if achieved(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let report = total_epsilon(params, hi)?;
    let scales = cape_split(hi, params.num_clients);
    let report = AccountingReport { tau_e: scales.tau_e, ..report };
    Ok((scales, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Parameters that make the per-record RDP slope exactly 0.05 per order
    /// (eps(i) = 0.05 i) with sampling probability p = 0.1: l = 1, c = 1
    /// gives (2c^2+1)/(l^2 tau^2) = 3/60 = 0.05 and p = lK/N = 10/100.
    fn slope_params() -> (PrivacyParams, f64) {
        let params = PrivacyParams {
            epsilon_target: 1.0,
            delta: 1e-5,
            mixture_order: 1,
            clip: 1.0,
            releases: 10,
            dataset_size: 100,
            num_classes: 10,
            num_clients: 1,
            alpha_max: 200,
        };
        (params, 60f64.sqrt())
    }

    fn mnist_scale(epsilon_target: f64) -> PrivacyParams {
        PrivacyParams {
            epsilon_target,
            delta: 1e-5,
            mixture_order: 4,
            clip: 1.0,
            releases: 60_000,
            dataset_size: 60_000,
            num_classes: 10,
            num_clients: 10,
            alpha_max: 200,
        }
    }

    #[test]
    fn gaussian_rdp_direct_values() {
        assert_eq!(gaussian_rdp(2.0, 1.0, 1.0), 1.0);
        assert_eq!(gaussian_rdp(4.0, 2.0, 1.0), 0.5);
        assert_eq!(gaussian_rdp(3.0, 1.0, 2.0), 6.0);
        assert_eq!(gaussian_rdp(3.0, 0.0, 2.0), f64::INFINITY);
        assert_eq!(gaussian_rdp(3.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn per_sample_rdp_direct_values() {
        assert_eq!(per_sample_rdp(2.0, 1, 1.0, 1.0), 6.0);
        assert_eq!(per_sample_rdp(2.0, 2, 1.0, 1.0), 1.5);
        assert_eq!(per_sample_rdp(0.0, 3, 2.0, 0.5), 0.0);
        assert_eq!(per_sample_rdp(0.0, 3, 2.0, 0.0), 0.0);
        assert_eq!(per_sample_rdp(2.0, 3, 2.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn per_sample_is_the_two_mechanism_composition() {
        for (l, c, tau) in [(1usize, 1.0, 1.0), (4, 1.0, 0.35), (16, 2.5, 3.0), (512, 0.1, 0.02)] {
            for alpha in [1.0, 2.0, 3.0, 7.5, 64.0] {
                let features = gaussian_rdp(alpha, tau, 2.0 * c / l as f64);
                let labels = gaussian_rdp(alpha, tau, 2f64.sqrt() / l as f64);
                let combined = per_sample_rdp(alpha, l, c, tau);
                assert!(
                    (combined - (features + labels)).abs() <= 1e-12 * combined.max(1.0),
                    "decomposition failed at l={l} c={c} tau={tau} alpha={alpha}"
                );
            }
        }
    }

    #[test]
    fn b_term_base_cases() {
        assert_eq!(b_term(0, 4, 1.0, 0.5).unwrap(), 1.0);
        assert_eq!(b_term(1, 4, 1.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn b_term_two_is_exp_eps2_minus_one() {
        // Symbolic reduction: B(2) = 1 - 2 + e^{eps(2)} = e^{eps(2)} - 1.
        for (l, c, tau) in [(1usize, 1.0, 3.0), (4, 1.0, 0.4), (8, 2.0, 1.3)] {
            let eps2 = per_sample_rdp(2.0, l, c, tau);
            let expected = eps2.exp() - 1.0;
            let got = b_term(2, l, c, tau).unwrap();
            assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn b_term_overflows_into_alpha_too_large() {
        let err = b_term(64, 1, 1.0, 0.05).unwrap_err();
        assert_eq!(err.category(), "accounting");
        assert!(err.to_string().contains("alpha too large"));
    }

    #[test]
    fn g_term_alpha_three_reduces_to_p_cubed_b2() {
        let (params, tau) = slope_params();
        let p = params.sampling_probability();
        let g = g_term(3, p, params.mixture_order, params.clip, tau).unwrap();
        let b2 = b_term(2, params.mixture_order, params.clip, tau).unwrap();
        assert!((g - p.powi(3) * b2).abs() <= 1e-15);
        // Independent closed form: p^3 (e^{0.1} - 1).
        let expected = 0.001 * (0.1f64.exp() - 1.0);
        assert!((g - expected).abs() <= 1e-12);
        assert!((g - 1.0517092e-4).abs() <= 1e-11);
    }

    #[test]
    fn g_term_vanishes_without_sampling() {
        assert_eq!(g_term(7, 0.0, 4, 1.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn subsampled_rdp_matches_the_independent_oracle() {
        // Oracle evaluated from the closed form before the accountant was
        // written: eps'(3) = ln(1 + 3 p^2 * 4(e^{0.1}-1) + 4 p^3 (e^{0.1}-1)) / 2
        // at p = 0.1, eps(i) = 0.05 i.
        let oracle = {
            let e2 = 0.1f64.exp();
            let linear = 0.01 * 3.0 * (4.0 * (e2 - 1.0)).min(2.0 * e2);
            let tail = 4.0 * 0.001 * (e2 - 1.0);
            (1.0 + linear + tail).ln() / 2.0
        };
        let (params, tau) = slope_params();
        let got = subsampled_rdp(3, &params, tau).unwrap();
        assert!((got - oracle).abs() <= 1e-15, "got {got}, oracle {oracle}");
        assert!((got - 0.0064785).abs() <= 1e-6, "got {got}");
    }

    #[test]
    fn subsampled_rdp_is_zero_without_sampling_or_noise_cost() {
        for alpha in [3usize, 5, 20] {
            assert_eq!(subsampled_rdp_with_p(alpha, 0.0, 4, 1.0, 0.7).unwrap(), 0.0);
        }
        // Empty sampling beats moment-term overflow: at alpha = 50 and this
        // noise the B table overflows, but nothing is sampled.
        assert_eq!(subsampled_rdp_with_p(50, 0.0, 4, 1.0, 0.7).unwrap(), 0.0);
        // Enormous noise: every eps(i) is ~0, so B terms vanish.
        let huge = subsampled_rdp_with_p(5, 0.3, 4, 1.0, 1e9).unwrap();
        assert!(huge.abs() < 1e-12, "got {huge}");
    }

    #[test]
    fn min_branch_switches_at_ln_two() {
        // 4(e^x - 1) < 2e^x iff e^x < 2.
        for x in [0.01f64, 0.3, 0.69] {
            assert!(4.0 * (x.exp() - 1.0) < 2.0 * x.exp());
        }
        for x in [0.70f64, 1.0, 5.0] {
            assert!(4.0 * (x.exp() - 1.0) >= 2.0 * x.exp());
        }
    }

    #[test]
    fn total_epsilon_with_huge_noise_leaves_only_the_delta_term() {
        let mut params = mnist_scale(10.0);
        params.delta = 0.01;
        params.alpha_max = 101;
        let report = total_epsilon(&params, 1e9).unwrap();
        // ln(100)/100, minimized at the top of the order grid.
        assert!((report.epsilon_achieved - 0.046_051_701_859_880_914).abs() <= 1e-12);
        assert_eq!(report.alpha_star, 101);
    }

    #[test]
    fn doubling_releases_strictly_increases_epsilon() {
        let params = mnist_scale(10.0);
        let base = total_epsilon(&params, 0.5).unwrap().epsilon_achieved;
        let mut doubled = params.clone();
        doubled.releases *= 2;
        let more = total_epsilon(&doubled, 0.5).unwrap().epsilon_achieved;
        assert!(more > base, "{more} vs {base}");
    }

    #[test]
    fn epsilon_is_monotone_in_tau_and_p() {
        let params = mnist_scale(10.0);
        let mut last = f64::INFINITY;
        for i in 0..30 {
            // log grid over two decades around the interesting region
            let tau = 0.05 * 10f64.powf(2.0 * i as f64 / 29.0);
            let eps = match total_epsilon(&params, tau) {
                Ok(r) => r.epsilon_achieved,
                Err(_) => continue,
            };
            assert!(eps <= last * (1.0 + 1e-12), "eps grew at tau={tau}: {eps} > {last}");
            last = eps;
        }
        // p grows as the dataset shrinks (everything else fixed); epsilon
        // must not drop.
        let eps_all = total_epsilon(&params, 0.5).unwrap().epsilon_achieved;
        let mut smaller = params.clone();
        smaller.dataset_size = 30_000;
        let eps_half = total_epsilon(&smaller, 0.5).unwrap().epsilon_achieved;
        assert!(eps_half >= eps_all * (1.0 - 1e-12), "{eps_half} vs {eps_all}");
    }

    #[test]
    fn report_identity_holds() {
        let params = mnist_scale(10.0);
        let report = total_epsilon(&params, 0.5).unwrap();
        let recomputed = params.releases as f64 * report.rdp_curve[&report.alpha_star]
            + (1.0 / params.delta).ln() / (report.alpha_star as f64 - 1.0);
        assert!((report.epsilon_achieved - recomputed).abs() <= 1e-9);
    }

    #[test]
    fn zero_tau_is_rejected_as_non_private() {
        let params = mnist_scale(10.0);
        let err = total_epsilon(&params, 0.0).unwrap_err();
        assert_eq!(err.category(), "accounting");
        assert!(err.to_string().contains("non-private"));
    }

    #[test]
    fn pooled_tau_reference_value() {
        // Independent route: (1/100) sqrt(2 ln 125).
        let expected = (2.0 * 125f64.ln()).sqrt() / 100.0;
        let got = pooled_tau(100, 0.01).unwrap();
        assert!((got - expected).abs() <= 1e-15);
        assert!((got - 0.0310751).abs() <= 1e-7);
        // 1/N scaling.
        let doubled = pooled_tau(200, 0.01).unwrap();
        assert!((doubled - got / 2.0).abs() <= 1e-15);
        assert!(pooled_tau(100, 1.25).is_err());
    }

    #[test]
    fn conventional_scaling_and_cape_split() {
        assert_eq!(conventional_local_tau(0.7, 1), 0.7);
        assert_eq!(conventional_local_tau(1.0, 4), 2.0);
        let split = cape_split(1.0, 4);
        assert_eq!(split.tau_g, 1.0);
        assert!((split.tau_e - 3f64.sqrt()).abs() <= 1e-15);
        let single = cape_split(0.9, 1);
        assert_eq!(single.tau_e, 0.0);
    }

    #[test]
    fn calibration_round_trip_hits_the_target_band() {
        for target in [1.0, 10.0, 20.0] {
            let params = mnist_scale(target);
            let (scales, report) = calibrate_tau(&params).unwrap();
            assert!(report.tau_g > 0.0);
            assert_eq!(scales.tau_g, report.tau_g);
            let forward = total_epsilon(&params, report.tau_g).unwrap().epsilon_achieved;
            assert!(
                forward <= target && forward >= 0.99 * target,
                "target {target}: achieved {forward} at tau {}",
                report.tau_g
            );
        }
    }

    #[test]
    fn infinite_target_disables_noise() {
        let params = mnist_scale(f64::INFINITY);
        let (scales, report) = calibrate_tau(&params).unwrap();
        assert_eq!(scales, NoiseScales::ZERO);
        assert!(report.epsilon_achieved.is_infinite());
    }

    #[test]
    fn local_p_diagnostic_is_never_cheaper() {
        let params = mnist_scale(10.0);
        let global = total_epsilon(&params, 0.5).unwrap().epsilon_achieved;
        let local = total_epsilon_local_p(&params, 0.5).unwrap().epsilon_achieved;
        assert!(local >= global, "local-p eps {local} below global {global}");
    }

    #[test]
    fn params_validation_catches_bad_combinations() {
        let mut params = mnist_scale(10.0);
        params.releases = 60_001; // K does not divide T
        assert!(params.validate().is_err());
        let mut params = mnist_scale(10.0);
        params.num_clients = 7; // S does not divide N
        assert!(params.validate().is_err());
        let mut params = mnist_scale(10.0);
        params.mixture_order = 60_001 * 10; // p > 1
        assert!(params.validate().is_err());
        let mut params = mnist_scale(10.0);
        params.delta = 0.0;
        assert!(params.validate().is_err());
    }

    #[test]
    fn report_text_and_curve_render() {
        let params = mnist_scale(10.0);
        let report = total_epsilon(&params, 0.5).unwrap();
        let text = report.to_text();
        assert!(text.contains("epsilon_achieved="));
        assert!(text.contains(&format!("alpha_star={}", report.alpha_star)));
        let csv = report.rdp_curve_csv();
        assert!(csv.starts_with("alpha,eps_prime\n3,"));
    }

    proptest! {
        #[test]
        fn b_base_cases_hold_everywhere(
            l in 1usize..64,
            c in 0.01f64..10.0,
            tau in 0.01f64..100.0,
        ) {
            prop_assert_eq!(b_term(0, l, c, tau).unwrap(), 1.0);
            prop_assert_eq!(b_term(1, l, c, tau).unwrap(), 0.0);
        }

        #[test]
        fn cape_split_preserves_the_local_requirement(
            tau in 0.0f64..50.0,
            s in 1usize..64,
        ) {
            let split = cape_split(tau, s);
            let total = split.tau_g * split.tau_g + split.tau_e * split.tau_e;
            let requirement = s as f64 * tau * tau;
            prop_assert!((total - requirement).abs() <= 1e-9 * requirement.max(1.0));
        }

        #[test]
        fn per_sample_decomposes_for_random_parameters(
            l in 1usize..512,
            c in 0.01f64..5.0,
            tau in 0.01f64..10.0,
            alpha in 0.0f64..128.0,
        ) {
            let whole = per_sample_rdp(alpha, l, c, tau);
            let parts = gaussian_rdp(alpha, tau, 2.0 * c / l as f64)
                + gaussian_rdp(alpha, tau, 2f64.sqrt() / l as f64);
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0));
        }
    }
}
