//! Closed-form random-matrix quantities for i.i.d. Rayleigh channels.
//!
//! `m(-α)` is the Stieltjes transform of the Marchenko-Pastur law for an
//! `M × K` channel with `β = M/K`, evaluated on the negative real axis. The
//! remaining functions build the deterministic equivalents that enter the
//! large-system SINR of a regularized zero-forcing precoder.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, frobenius_norm_sqr, gram, trace, Hpd};
use crate::rng::complex_normal_matrix;

/// Regularization of the precoder Gram inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// Finite regularization `α > 0`.
    Alpha(f64),
    /// `α → 0`, the zero-forcing limit.
    ZeroLimit,
    /// `α → ∞`, the matched-filter limit.
    InfiniteLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticParams {
    pub regularization: Regularization,
    /// `M / K`, always derived from the two counts.
    pub beta: f64,
    pub antennas: usize,
    pub powers: Vec<f64>,
}

impl AsymptoticParams {
    /// `powers` has one entry per user, so `K = powers.len()`.
    pub fn new(regularization: Regularization, antennas: usize, powers: Vec<f64>) -> Result<Self> {
        let users = powers.len();
        if users == 0 {
            return Err(Error::Domain("at least one user is required".into()));
        }
        if antennas < users {
            return Err(Error::Domain(format!(
                "beta = M/K must be at least 1 (M = {antennas}, K = {users})"
            )));
        }
        if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain("powers must be finite and nonnegative".into()));
        }
        if powers.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Domain("sum of powers must be positive".into()));
        }
        if let Regularization::Alpha(a) = regularization {
            check_alpha(a)?;
        }
        Ok(Self {
            regularization,
            beta: antennas as f64 / users as f64,
            antennas,
            powers,
        })
    }

    pub fn users(&self) -> usize {
        self.powers.len()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// `Σ_{k1 ≠ k} p_{k1}`.
    pub fn others_power(&self, k: usize) -> Result<f64> {
        if k >= self.users() {
            return Err(Error::Domain(format!("user index {k} out of range 0..{}", self.users())));
        }
        Ok(self
            .powers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, p)| p)
            .sum())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must be positive and finite, got {alpha}")))
    }
}

fn check_domain(alpha: f64, beta: f64) -> Result<()> {
    check_alpha(alpha)?;
    if beta >= 1.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must be at least 1, got {beta}")))
    }
}

/// `β²α² + 2(β+1)αβ + (β−1)²`, summed from nonnegative terms.
fn discriminant(alpha: f64, beta: f64) -> f64 {
    let ab = alpha * beta;
    ab * ab + 2.0 * (beta + 1.0) * ab + (beta - 1.0) * (beta - 1.0)
}

/// `m(-α)`, the positive root of `αβ m² + (αβ + 1 − β) m − β = 0`.
pub fn stieltjes_mp(alpha: f64, beta: f64) -> Result<f64> {
    check_domain(alpha, beta)?;
    let b = alpha * beta + 1.0 - beta;
    let sd = discriminant(alpha, beta).sqrt();
    Ok(if b >= 0.0 {
        2.0 * beta / (b + sd)
    } else {
        (sd - b) / (2.0 * alpha * beta)
    })
}

/// `m'(z)` at `z = −α`, equal to `β m (1 + m) / sqrt(D)`.
pub fn stieltjes_mp_derivative(alpha: f64, beta: f64) -> Result<f64> {
    let m = stieltjes_mp(alpha, beta)?;
    Ok(beta * m * (1.0 + m) / discriminant(alpha, beta).sqrt())
}

/// Channel hardening factor `m / (1 + m)`. An infinite `m` maps to 1.
pub fn hardening_t(m: f64) -> f64 {
    if m.is_infinite() {
        1.0
    } else {
        m / (1.0 + m)
    }
}

fn zf_beta_check(beta: f64) -> Result<()> {
    if beta > 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("the zero-forcing limit requires beta > 1, got {beta}")))
    }
}

/// `ξ²`, the squared asymptotic precoder normalization.
pub fn normalization_xi2(params: &AsymptoticParams) -> Result<f64> {
    let m_ant = params.antennas as f64;
    let sum_p = params.total_power();
    match params.regularization {
        Regularization::Alpha(alpha) => {
            let m = stieltjes_mp(alpha, params.beta)?;
            let mp = stieltjes_mp_derivative(alpha, params.beta)?;
            Ok(m_ant * (1.0 + m) * (1.0 + m) / (mp * sum_p))
        }
        Regularization::ZeroLimit => {
            zf_beta_check(params.beta)?;
            Ok(m_ant * (params.beta - 1.0) / (params.beta * sum_p))
        }
        Regularization::InfiniteLimit => Err(Error::Domain(
            "the normalization diverges in the matched-filter limit".into(),
        )),
    }
}

/// `ξ = sqrt(M (1+m)² / (m' Σ p))`.
pub fn normalization_xi(params: &AsymptoticParams) -> Result<f64> {
    normalization_xi2(params).map(f64::sqrt)
}

/// `t₂ = Σ_{k1≠k} p_{k1} · m' / (1+m)²`.
pub fn interference_t2(params: &AsymptoticParams, k: usize) -> Result<f64> {
    let others = params.others_power(k)?;
    match params.regularization {
        Regularization::Alpha(alpha) => {
            let m = stieltjes_mp(alpha, params.beta)?;
            let mp = stieltjes_mp_derivative(alpha, params.beta)?;
            Ok(others * mp / ((1.0 + m) * (1.0 + m)))
        }
        Regularization::ZeroLimit => {
            zf_beta_check(params.beta)?;
            Ok(others * params.beta / (params.beta - 1.0))
        }
        Regularization::InfiniteLimit => Err(Error::Domain(
            "the interference factor vanishes in the matched-filter limit".into(),
        )),
    }
}

/// Regularization maximizing the large-system RZF SINR,
/// `α̃ = (σ² + 1 − q0·E|T_PN|²) / (q0·E|T_PN|²·β)`.
///
/// The SINR depends on `q0` and `E|T_PN|²` only through their product, and
/// this is the stationary point of that function.
pub fn optimal_alpha(q0: f64, e_tpn2: f64, sigma_w2: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q0) {
        return Err(Error::Domain(format!("q0 must lie in [0, 1], got {q0}")));
    }
    if !(0.0..=1.0).contains(&e_tpn2) {
        return Err(Error::Domain(format!("E|T_PN|^2 must lie in [0, 1], got {e_tpn2}")));
    }
    if !(sigma_w2 >= 0.0 && sigma_w2.is_finite()) {
        return Err(Error::Domain(format!("noise variance must be finite and >= 0, got {sigma_w2}")));
    }
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("beta must be at least 1, got {beta}")));
    }
    let q_eff = q0 * e_tpn2;
    if q_eff == 0.0 {
        return Err(Error::Degenerate(
            "effective CSI quality is zero; the matched filter is optimal".into(),
        ));
    }
    Ok((sigma_w2 + 1.0 - q_eff) / (q_eff * beta))
}

/// Equal-power RZF SINR with `K → ∞` at fixed `β`:
/// `β m² q_eff / (m' (1 − q_eff t (2 − t) + σ²))`.
pub fn large_system_sinr_rzf(beta: f64, q_eff: f64, sigma_w2: f64, alpha: f64) -> Result<f64> {
    let m = stieltjes_mp(alpha, beta)?;
    let mp = stieltjes_mp_derivative(alpha, beta)?;
    let t = hardening_t(m);
    Ok(beta * m * m * q_eff / (mp * (1.0 - q_eff * t * (2.0 - t) + sigma_w2)))
}

/// Snapshot of the large-system quantities used by one SINR prediction.
///
/// In the zero-forcing limit `m` and `m_prime` are reported as infinite and
/// `t` as one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterministicEquivalents {
    pub m: f64,
    pub m_prime: f64,
    pub t: f64,
    pub t2: f64,
    pub xi: f64,
    pub e_tpn2: f64,
}

impl DeterministicEquivalents {
    pub fn new(params: &AsymptoticParams, k: usize, e_tpn2: f64) -> Result<Self> {
        if !(e_tpn2 > 0.0 && e_tpn2 <= 1.0) {
            return Err(Error::Domain(format!("E|T_PN|^2 must lie in (0, 1], got {e_tpn2}")));
        }
        let (m, m_prime) = match params.regularization {
            Regularization::Alpha(alpha) => (
                stieltjes_mp(alpha, params.beta)?,
                stieltjes_mp_derivative(alpha, params.beta)?,
            ),
            Regularization::ZeroLimit => (f64::INFINITY, f64::INFINITY),
            Regularization::InfiniteLimit => {
                return Err(Error::Domain(
                    "no finite equivalents exist in the matched-filter limit".into(),
                ))
            }
        };
        Ok(Self {
            m,
            m_prime,
            t: hardening_t(m),
            t2: interference_t2(params, k)?,
            xi: normalization_xi(params)?,
            e_tpn2,
        })
    }
}

/// Probe regularization used to cross-check the zero-forcing limits.
pub const ZF_PROBE_ALPHA: f64 = 1e-8;

/// Largest relative disagreement between the closed-form zero-forcing limits
/// of `(ξ², t₂)` and their RZF values at `α = ZF_PROBE_ALPHA`.
pub fn zf_limit_discrepancy(params: &AsymptoticParams, k: usize) -> Result<f64> {
    let limit = AsymptoticParams {
        regularization: Regularization::ZeroLimit,
        ..params.clone()
    };
    let probe = AsymptoticParams {
        regularization: Regularization::Alpha(ZF_PROBE_ALPHA),
        ..params.clone()
    };
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let xi = rel(normalization_xi2(&limit)?, normalization_xi2(&probe)?);
    let t2 = rel(interference_t2(&limit, k)?, interference_t2(&probe, k)?);
    Ok(xi.max(t2))
}

/// Normalized resolvent traces `(1/M) tr A⁻¹` and `(1/M) tr A⁻²` of
/// `A = HᴴH/M + αI_M` for one channel draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventTraces {
    pub trace_inv: f64,
    pub trace_inv_sq: f64,
}

fn check_sizes(antennas: usize, users: usize, alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    if users == 0 || antennas < users {
        return Err(Error::Domain(format!(
            "need 1 <= K <= M, got M = {antennas}, K = {users}"
        )));
    }
    Ok(())
}

/// Traces from a dense `K × M` Gaussian channel, computed through the
/// `K × K` Gram matrix. The `M − K` zero eigenvalues of `HᴴH` contribute
/// `1/α` each.
pub fn resolvent_traces_dense<R: Rng + ?Sized>(
    antennas: usize,
    users: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<ResolventTraces> {
    check_sizes(antennas, users, alpha)?;
    let m = antennas as f64;
    let h = complex_normal_matrix(users, antennas, 1.0 / m, rng);
    let mut b = gram(h.as_ref());
    add_diagonal(b.as_mut(), alpha);
    let inv = Hpd::factor(b.as_ref())?.inverse();
    let zeros = (antennas - users) as f64;
    Ok(ResolventTraces {
        trace_inv: (zeros / alpha + trace(inv.as_ref()).re) / m,
        trace_inv_sq: (zeros / (alpha * alpha) + frobenius_norm_sqr(inv.as_ref())) / m,
    })
}

/// Same statistic as [`resolvent_traces_dense`] at `O(K)` cost.
///
/// The eigenvalues of a complex Wishart matrix `HHᴴ` with `M` degrees of
/// freedom have the law of those of `BBᵀ`, where `B` is a real lower
/// bidiagonal matrix with `B_ii² ~ Gamma(M − i)` and `B_{i+1,i}² ~ Gamma(K − 1 − i)`
/// (Dumitriu-Edelman). The trace of the inverse of the resulting
/// tridiagonal matrix follows from two Cholesky-type sweeps.
pub fn resolvent_traces_bidiagonal<R: Rng + ?Sized>(
    antennas: usize,
    users: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<ResolventTraces> {
    check_sizes(antennas, users, alpha)?;
    let k = users;
    let m = antennas as f64;
    let chi = |shape: usize, rng: &mut R| -> f64 {
        Gamma::new(shape as f64, 1.0)
            .expect("positive shape")
            .sample(rng)
            .sqrt()
    };
    let diag: Vec<f64> = (0..k).map(|i| chi(antennas - i, rng)).collect();
    let sub: Vec<f64> = (0..k.saturating_sub(1)).map(|i| chi(k - 1 - i, rng)).collect();

    let a: Vec<f64> = (0..k)
        .map(|i| {
            let below = if i > 0 { sub[i - 1] * sub[i - 1] } else { 0.0 };
            (diag[i] * diag[i] + below) / m + alpha
        })
        .collect();
    let e2: Vec<f64> = (0..k.saturating_sub(1))
        .map(|i| {
            let e = diag[i] * sub[i] / m;
            e * e
        })
        .collect();

    // Forward pivots d_i, backward pivots u_i and their α-derivatives.
    let mut d = vec![0.0; k];
    let mut dd = vec![0.0; k];
    d[0] = a[0];
    dd[0] = 1.0;
    for i in 1..k {
        d[i] = a[i] - e2[i - 1] / d[i - 1];
        dd[i] = 1.0 + e2[i - 1] * dd[i - 1] / (d[i - 1] * d[i - 1]);
    }
    let mut u = vec![0.0; k];
    let mut du = vec![0.0; k];
    u[k - 1] = a[k - 1];
    du[k - 1] = 1.0;
    for i in (0..k - 1).rev() {
        u[i] = a[i] - e2[i] / u[i + 1];
        du[i] = 1.0 + e2[i] * du[i + 1] / (u[i + 1] * u[i + 1]);
    }
    let mut tr_inv = 0.0;
    let mut tr_inv_sq = 0.0;
    for i in 0..k {
        let s = d[i] + u[i] - a[i];
        if !(s > 0.0) {
            return Err(Error::Numerical("tridiagonal pivot is not positive".into()));
        }
        tr_inv += 1.0 / s;
        tr_inv_sq += (dd[i] + du[i] - 1.0) / (s * s);
    }
    let zeros = (antennas - users) as f64;
    Ok(ResolventTraces {
        trace_inv: (zeros / alpha + tr_inv) / m,
        trace_inv_sq: (zeros / (alpha * alpha) + tr_inv_sq) / m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn stieltjes_reference_values() {
        assert!((stieltjes_mp(1.0, 1.0).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        let expected = (1.0 - 20.0 + 521f64.sqrt()) / 40.0;
        assert!((stieltjes_mp(10.0, 2.0).unwrap() - expected).abs() < 1e-15);
        assert!((stieltjes_mp(10.0, 2.0).unwrap() - 0.0956356).abs() < 1e-7);
    }

    #[test]
    fn stieltjes_domain_errors() {
        assert!(matches!(stieltjes_mp(0.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(stieltjes_mp(-1.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(stieltjes_mp(1.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(stieltjes_mp_derivative(1.0, 0.99), Err(Error::Domain(_))));
    }

    #[test]
    fn stieltjes_large_alpha_limit() {
        for beta in [1.0, 2.0, 5.0] {
            for alpha in [1e3, 1e5, 1e8] {
                let m = stieltjes_mp(alpha, beta).unwrap();
                assert!((alpha * m - 1.0).abs() < 2.0 / alpha, "beta={beta} alpha={alpha}");
                let mp = stieltjes_mp_derivative(alpha, beta).unwrap();
                let approx = 2.0 * m / alpha - 1.0 / (alpha * alpha);
                assert!(rel(mp, approx) <= 1e-3);
            }
        }
    }

    #[test]
    fn small_alpha_limits() {
        let beta = 5.0;
        let alpha = 1e-8;
        let m = stieltjes_mp(alpha, beta).unwrap();
        let mp = stieltjes_mp_derivative(alpha, beta).unwrap();
        assert!(rel(m, (beta - 1.0) / (alpha * beta)) < 1e-6);
        assert!(rel(mp, (beta - 1.0) / (beta * alpha * alpha)) < 1e-6);
    }

    #[test]
    fn hardening_values() {
        assert_eq!(hardening_t(1.0), 0.5);
        assert!((hardening_t(0.618034) - 0.381966).abs() < 1e-6);
        assert!((hardening_t(1e12) - 1.0).abs() < 1e-11);
        assert_eq!(hardening_t(f64::INFINITY), 1.0);
    }

    #[test]
    fn xi_and_t2_closed_forms() {
        let k = 10;
        let powers = vec![1.0 / k as f64; k];
        let p = AsymptoticParams::new(Regularization::Alpha(0.3), 50, powers.clone()).unwrap();
        let m = stieltjes_mp(0.3, 5.0).unwrap();
        let mp = stieltjes_mp_derivative(0.3, 5.0).unwrap();
        assert!(rel(normalization_xi2(&p).unwrap(), 50.0 * (1.0 + m).powi(2) / mp) < 1e-14);
        assert!(rel(interference_t2(&p, 3).unwrap(), 0.9 * mp / (1.0 + m).powi(2)) < 1e-14);

        let zf = AsymptoticParams::new(Regularization::ZeroLimit, 50, powers.clone()).unwrap();
        assert!(rel(normalization_xi2(&zf).unwrap(), 40.0) < 1e-14);
        assert!(rel(interference_t2(&zf, 0).unwrap(), 1.125) < 1e-14);

        let single = AsymptoticParams::new(Regularization::Alpha(0.3), 8, vec![1.0]).unwrap();
        assert_eq!(interference_t2(&single, 0).unwrap(), 0.0);
        assert!(interference_t2(&single, 1).is_err());
    }

    #[test]
    fn zf_limit_requires_beta_above_one() {
        let p = AsymptoticParams::new(Regularization::ZeroLimit, 10, vec![0.1; 10]).unwrap();
        assert!(matches!(normalization_xi(&p), Err(Error::Domain(_))));
        assert!(matches!(interference_t2(&p, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn params_validation() {
        assert!(AsymptoticParams::new(Regularization::Alpha(1.0), 4, vec![0.0; 4]).is_err());
        assert!(AsymptoticParams::new(Regularization::Alpha(1.0), 3, vec![0.25; 4]).is_err());
        assert!(AsymptoticParams::new(Regularization::Alpha(-1.0), 8, vec![0.25; 4]).is_err());
        let p = AsymptoticParams::new(Regularization::Alpha(1.0), 10, vec![0.25; 4]).unwrap();
        assert_eq!(p.beta, 2.5);
    }

    #[test]
    fn zf_limit_cross_check() {
        for (m, k) in [(50, 10), (64, 16), (200, 40), (30, 20), (250, 25)] {
            let p = AsymptoticParams::new(Regularization::Alpha(1.0), m, vec![1.0 / k as f64; k])
                .unwrap();
            assert!(zf_limit_discrepancy(&p, 0).unwrap() < 1e-6, "M={m} K={k}");
        }
    }

    #[test]
    fn optimal_alpha_values() {
        assert!((optimal_alpha(1.0, 1.0, 0.1, 5.0).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(optimal_alpha(1.0, 1.0, 0.0, 5.0).unwrap(), 0.0);
        assert!(matches!(optimal_alpha(0.0, 1.0, 0.1, 5.0), Err(Error::Degenerate(_))));
        assert!(matches!(optimal_alpha(0.5, 0.0, 0.1, 5.0), Err(Error::Degenerate(_))));
        assert!(optimal_alpha(1.5, 1.0, 0.1, 5.0).is_err());
    }

    #[test]
    fn large_system_sinr_matches_finite_formula_at_large_k() {
        let (m_ant, k) = (200_000, 40_000);
        let beta = 5.0;
        let (q_eff, s2, alpha) = (0.8, 0.3, 0.2);
        let p = AsymptoticParams::new(Regularization::Alpha(alpha), m_ant, vec![1.0 / k as f64; k])
            .unwrap();
        let eq = DeterministicEquivalents::new(&p, 0, 1.0).unwrap();
        let finite = (1.0 / k as f64) * eq.t * eq.t * q_eff
            / ((eq.t2 / m_ant as f64) * (1.0 - eq.t * q_eff - eq.t * q_eff / (1.0 + eq.m))
                + s2 / (eq.xi * eq.xi));
        let ls = large_system_sinr_rzf(beta, q_eff, s2, alpha).unwrap();
        assert!(rel(finite, ls) < 1e-4);
    }

    #[test]
    fn bidiagonal_sampler_matches_dense_law() {
        let (m, k, alpha) = (48, 24, 0.5);
        let trials = 400;
        let stats = |dense: bool| {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            let mut q = 0.0;
            for t in 0..trials {
                let mut rng = stream_rng(11, &[dense as u64, t]);
                let r = if dense {
                    resolvent_traces_dense(m, k, alpha, &mut rng).unwrap()
                } else {
                    resolvent_traces_bidiagonal(m, k, alpha, &mut rng).unwrap()
                };
                s1 += r.trace_inv;
                s2 += r.trace_inv * r.trace_inv;
                q += r.trace_inv_sq;
            }
            let n = trials as f64;
            let mean = s1 / n;
            (mean, (s2 / n - mean * mean).sqrt(), q / n)
        };
        let (md, sd, qd) = stats(true);
        let (mb, sb, qb) = stats(false);
        let se = (sd * sd / trials as f64 + sb * sb / trials as f64).sqrt();
        assert!((md - mb).abs() < 4.0 * se, "dense {md} bidiagonal {mb} se {se}");
        assert!((sd / sb - 1.0).abs() < 0.2, "spread dense {sd} bidiagonal {sb}");
        assert!(rel(qb, qd) < 0.01);
    }

    #[test]
    fn bidiagonal_derivative_matches_finite_difference() {
        let (m, k) = (40, 20);
        let alpha = 0.7;
        let h = 1e-6;
        let at = |a: f64| resolvent_traces_bidiagonal(m, k, a, &mut stream_rng(5, &[])).unwrap();
        let fd = (at(alpha - h).trace_inv - at(alpha + h).trace_inv) / (2.0 * h);
        assert!(rel(at(alpha).trace_inv_sq, fd) < 1e-6);
    }

    #[test]
    fn empirical_traces_at_4096() {
        // M = K = 4096 via the bidiagonal model; M = 4096, K = 2048 densely
        // would cost minutes on one core, so it runs at M = 1024 below.
        let mut rng = stream_rng(21, &[]);
        let r = resolvent_traces_bidiagonal(4096, 4096, 1.0, &mut rng).unwrap();
        assert!((r.trace_inv - stieltjes_mp(1.0, 1.0).unwrap()).abs() < 2e-3);
        assert!(rel(r.trace_inv_sq, stieltjes_mp_derivative(1.0, 1.0).unwrap()) < 5e-3);
        let r = resolvent_traces_bidiagonal(4096, 2048, 10.0, &mut rng).unwrap();
        assert!(rel(r.trace_inv, stieltjes_mp(10.0, 2.0).unwrap()) < 1e-3);
        let r = resolvent_traces_dense(1024, 512, 10.0, &mut rng).unwrap();
        assert!(rel(r.trace_inv, stieltjes_mp(10.0, 2.0).unwrap()) < 2e-3);
    }

    #[test]
    fn concentration_error_halves_when_m_doubles() {
        let trials = 400;
        for (alpha, beta) in [(1.0, 2.0), (0.1, 4.0)] {
            let rms = |m: usize| {
                let k = (m as f64 / beta) as usize;
                let exact = stieltjes_mp(alpha, beta).unwrap();
                let s: f64 = (0..trials)
                    .map(|t| {
                        let mut rng = stream_rng(9, &[m as u64, t]);
                        let r = resolvent_traces_bidiagonal(m, k, alpha, &mut rng).unwrap();
                        (r.trace_inv - exact).powi(2)
                    })
                    .sum();
                (s / trials as f64).sqrt()
            };
            let e = [rms(512), rms(1024), rms(2048)];
            for w in e.windows(2) {
                let ratio = w[0] / w[1];
                assert!((1.5..=3.0).contains(&ratio), "alpha={alpha} beta={beta} errors={e:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(alpha in 1e-3f64..1e3, beta in 1.0f64..20.0) {
            let h = 1e-6 * alpha;
            let fd = (stieltjes_mp(alpha - h, beta).unwrap() - stieltjes_mp(alpha + h, beta).unwrap())
                / (2.0 * h);
            let an = stieltjes_mp_derivative(alpha, beta).unwrap();
            prop_assert!(rel(an, fd) < 1e-6);
        }

        #[test]
        fn stieltjes_solves_its_quadratic(alpha in 1e-6f64..1e6, beta in 1.0f64..50.0) {
            let m = stieltjes_mp(alpha, beta).unwrap();
            prop_assert!(m > 0.0 && m.is_finite());
            let b = alpha * beta + 1.0 - beta;
            let resid = alpha * beta * m * m + b * m - beta;
            let scale = (alpha * beta * m * m).abs() + (b * m).abs() + beta;
            prop_assert!(resid.abs() <= 1e-12 * scale);
        }

        #[test]
        fn stieltjes_strictly_decreasing(alpha in 1e-4f64..1e4, step in 1e-3f64..1.0, beta in 1.0f64..20.0) {
            let a2 = alpha * (1.0 + step);
            prop_assert!(stieltjes_mp(a2, beta).unwrap() < stieltjes_mp(alpha, beta).unwrap());
        }

        #[test]
        fn equivalents_respect_invariants(alpha in 1e-4f64..1e4, m_ant in 2usize..400, k_frac in 0.05f64..1.0, e in 0.01f64..=1.0) {
            let k = ((m_ant as f64 * k_frac) as usize).max(1);
            let p = AsymptoticParams::new(Regularization::Alpha(alpha), m_ant, vec![1.0 / k as f64; k]).unwrap();
            let eq = DeterministicEquivalents::new(&p, 0, e).unwrap();
            prop_assert!(eq.m > 0.0 && eq.m_prime > 0.0);
            prop_assert!(eq.t > 0.0 && eq.t < 1.0);
            prop_assert!(eq.xi > 0.0);
            prop_assert!(eq.t2 >= 0.0);
        }

        #[test]
        fn optimal_alpha_is_grid_argmax(q0 in 0.05f64..=1.0, e in 0.05f64..=1.0, s2 in 1e-3f64..10.0, beta in 1.0f64..10.0) {
            let a_opt = optimal_alpha(q0, e, s2, beta).unwrap();
            let q_eff = q0 * e;
            let best = large_system_sinr_rzf(beta, q_eff, s2, a_opt).unwrap();
            for i in 0..1000 {
                let a = 10f64.powf(-4.0 + 6.0 * i as f64 / 999.0);
                let v = large_system_sinr_rzf(beta, q_eff, s2, a).unwrap();
                prop_assert!(best >= v * (1.0 - 1e-12), "alpha {a} beats optimum {a_opt}");
            }
        }
    }
}
