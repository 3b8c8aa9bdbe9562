//! RZF, ZF and MF precoders with exact unit-power normalization.
//!
//! Every builder returns `G = ξ G₀` with `tr(GᴴG) = 1`, where `G₀` already
//! carries the power loading `P^{1/2}`. The regularized inverse is taken in
//! its `K × K` form `Ĥᴴ(ĤĤᴴ + MαI_K)⁻¹`.

use std::fmt;

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, frobenius_norm_sqr, gram, hpd_condition_number, mul, mul_adj, Hpd};

/// Default cap on the condition number of `ĤĤᴴ` for zero-forcing.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecoderKind {
    Rzf { alpha: f64 },
    Zf,
    Mf,
}

impl PrecoderKind {
    pub fn label(&self) -> &'static str {
        match self {
            PrecoderKind::Rzf { .. } => "rzf",
            PrecoderKind::Zf => "zf",
            PrecoderKind::Mf => "mf",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            PrecoderKind::Rzf { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecoderKind::Rzf { alpha } => write!(f, "rzf(alpha={alpha})"),
            other => f.write_str(other.label()),
        }
    }
}

/// `M × K` precoder; column `k` is the beam of user `k`.
#[derive(Debug, Clone)]
pub struct PrecoderMatrix {
    pub g: Mat<c64>,
    pub xi_empirical: f64,
    pub kind: PrecoderKind,
    /// Condition number of `ĤĤᴴ`, reported by the zero-forcing builder.
    pub gram_condition: Option<f64>,
}

impl PrecoderMatrix {
    pub fn power(&self) -> f64 {
        frobenius_norm_sqr(self.g.as_ref())
    }
}

fn check_powers(h_hat: MatRef<'_, c64>, powers: &[f64]) -> Result<()> {
    if powers.len() != h_hat.nrows() {
        return Err(Error::Shape(format!(
            "{} powers for {} users",
            powers.len(),
            h_hat.nrows()
        )));
    }
    if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || powers.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Domain("powers must be nonnegative with a positive sum".into()));
    }
    Ok(())
}

fn sqrt_power_diag(powers: &[f64]) -> Mat<c64> {
    let k = powers.len();
    Mat::from_fn(k, k, |i, j| {
        if i == j {
            c64::new(powers[i].sqrt(), 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

fn scale_columns(mut g: Mat<c64>, powers: &[f64]) -> Mat<c64> {
    for (j, p) in powers.iter().enumerate() {
        let s = p.sqrt();
        for i in 0..g.nrows() {
            g[(i, j)] *= s;
        }
    }
    g
}

fn normalize(g0: Mat<c64>, kind: PrecoderKind, gram_condition: Option<f64>) -> Result<PrecoderMatrix> {
    let norm2 = frobenius_norm_sqr(g0.as_ref());
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return Err(Error::Numerical(format!("{kind} precoder has power {norm2}")));
    }
    let xi = norm2.sqrt().recip();
    let mut g = g0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            g[(i, j)] *= xi;
        }
    }
    Ok(PrecoderMatrix {
        g,
        xi_empirical: xi,
        kind,
        gram_condition,
    })
}

/// `G = ξ Ĥᴴ(ĤĤᴴ + MαI)⁻¹ P^{1/2}`.
pub fn build_rzf(h_hat: MatRef<'_, c64>, alpha: f64, powers: &[f64]) -> Result<PrecoderMatrix> {
    check_powers(h_hat, powers)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    let mut b = gram(h_hat);
    add_diagonal(b.as_mut(), h_hat.ncols() as f64 * alpha);
    let x = Hpd::factor(b.as_ref())?.solve(sqrt_power_diag(powers).as_ref());
    normalize(mul_adj(h_hat, x.as_ref()), PrecoderKind::Rzf { alpha }, None)
}

/// RZF through the `M × M` inverse `(ĤᴴĤ + MαI)⁻¹Ĥᴴ`; a reference for the dual form.
pub fn build_rzf_primal(h_hat: MatRef<'_, c64>, alpha: f64, powers: &[f64]) -> Result<PrecoderMatrix> {
    check_powers(h_hat, powers)?;
    let hh = h_hat.adjoint().to_owned();
    let mut a = gram(hh.as_ref());
    add_diagonal(a.as_mut(), h_hat.ncols() as f64 * alpha);
    let x = Hpd::factor(a.as_ref())?.solve(hh.as_ref());
    normalize(scale_columns(x, powers), PrecoderKind::Rzf { alpha }, None)
}

/// `G = ξ Ĥᴴ(ĤĤᴴ)⁻¹ P^{1/2}`; rejects Gram matrices whose condition number exceeds `condition_cap`.
pub fn build_zf(h_hat: MatRef<'_, c64>, powers: &[f64], condition_cap: f64) -> Result<PrecoderMatrix> {
    check_powers(h_hat, powers)?;
    if h_hat.nrows() > h_hat.ncols() {
        return Err(Error::Domain(format!(
            "zero-forcing needs K <= M, got K = {}, M = {}",
            h_hat.nrows(),
            h_hat.ncols()
        )));
    }
    let b = gram(h_hat);
    let condition = hpd_condition_number(b.as_ref())?;
    if !(condition <= condition_cap) {
        return Err(Error::SingularChannel {
            condition,
            cap: condition_cap,
        });
    }
    let x = Hpd::factor(b.as_ref())?.solve(sqrt_power_diag(powers).as_ref());
    normalize(mul_adj(h_hat, x.as_ref()), PrecoderKind::Zf, Some(condition))
}

/// `G = ξ Ĥᴴ P^{1/2}`.
pub fn build_mf(h_hat: MatRef<'_, c64>, powers: &[f64]) -> Result<PrecoderMatrix> {
    check_powers(h_hat, powers)?;
    let g0 = scale_columns(h_hat.adjoint().to_owned(), powers);
    normalize(g0, PrecoderKind::Mf, None)
}

pub fn build(
    kind: PrecoderKind,
    h_hat: MatRef<'_, c64>,
    powers: &[f64],
    condition_cap: f64,
) -> Result<PrecoderMatrix> {
    match kind {
        PrecoderKind::Rzf { alpha } => build_rzf(h_hat, alpha, powers),
        PrecoderKind::Zf => build_zf(h_hat, powers, condition_cap),
        PrecoderKind::Mf => build_mf(h_hat, powers),
    }
}

/// `Ĥ G`, the precoded estimated channel (`K × K`).
pub fn effective_estimated_channel(h_hat: MatRef<'_, c64>, g: &PrecoderMatrix) -> Mat<c64> {
    mul(h_hat, g.g.as_ref())
}
