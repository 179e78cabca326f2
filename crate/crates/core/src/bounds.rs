//! Sample-complexity and deviation bounds for representation learning.
//!
//! These are formula evaluators. Capacities enter as natural logarithms,
//! either supplied directly or from [`nn_log_capacity`]; nothing here
//! computes covering numbers of arbitrary classes.

use crate::{Error, Result};

/// Inputs shared by the bound formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    /// Upper bound of the loss range `[0, M]`.
    pub loss_bound: f64,
    pub alpha: f64,
    pub nu: f64,
    pub delta: f64,
    /// Tasks per sample.
    pub n: usize,
    /// Examples per task.
    pub m: usize,
    /// `ln C(ε₁, l_G)`.
    pub ln_c_g: f64,
    /// `ln C*(ε₂, F)`.
    pub ln_cstar_f: f64,
    /// Total parameter count for [`nn_log_capacity`].
    pub w: f64,
    pub w_f: f64,
    pub w_g: f64,
    /// Network depth.
    pub depth: usize,
    /// Product of the per-layer Lipschitz bounds.
    pub lipschitz_product: f64,
    pub epsilon: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        BoundInputs {
            loss_bound: 1.0,
            alpha: 0.1,
            nu: 0.1,
            delta: 0.01,
            n: 10,
            m: 100,
            ln_c_g: 10.0,
            ln_cstar_f: 100.0,
            w: 100.0,
            w_f: 80.0,
            w_g: 20.0,
            depth: 2,
            lipschitz_product: 1.0,
            epsilon: 0.1,
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidInput(msg)
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.loss_bound > 0.0 && self.loss_bound.is_finite()) {
            return Err(invalid(format!("loss bound must be positive, got {}", self.loss_bound)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(invalid(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.n == 0 || self.m == 0 {
            return Err(invalid("n and m must be positive".into()));
        }
        for (name, v) in [("ln_c_g", self.ln_c_g), ("ln_cstar_f", self.ln_cstar_f)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.loss_bound / (self.alpha * self.alpha * self.nu)
    }
}

/// `d_ν(x, y) = |x − y| / (ν + x + y)`.
pub fn d_nu(x: f64, y: f64, nu: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= 0.0) {
        return Err(invalid(format!("d_nu needs nonnegative arguments, got {x}, {y}")));
    }
    if !(nu > 0.0) {
        return Err(invalid(format!("nu must be positive, got {nu}")));
    }
    Ok((x - y).abs() / (nu + x + y))
}

/// Examples per task for the empirical and true losses of every
/// multi-task hypothesis to be `α`-close in `d_ν` with probability
/// `1 − δ`: `(8M/α²ν)[ln C_G + (1/n) ln(4 C*_F / δ)]`.
pub fn multitask_m(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let ln_term = (4.0f64).ln() + b.ln_cstar_f - b.delta.ln();
    Ok(8.0 * b.scale() * (b.ln_c_g + ln_term / b.n as f64))
}

/// Required `(n, m)` for representation learning to generalise:
/// `n ≥ (32M/α²ν) ln(8 C*_F/δ)` and
/// `m ≥ (32M/α²ν)[ln C_G + (1/n) ln(8 C*_F/δ)]`.
///
/// The same `ln C*_F` is used in both, as supplied.
pub fn transfer_nm(b: &BoundInputs) -> Result<(f64, f64)> {
    b.validate()?;
    let ln_term = (8.0f64).ln() + b.ln_cstar_f - b.delta.ln();
    let n_req = 32.0 * b.scale() * ln_term;
    let m_req = 32.0 * b.scale() * (b.ln_c_g + ln_term / b.n as f64);
    Ok((n_req, m_req))
}

/// [`transfer_nm`] with capacities of neural-network families: the
/// accuracy `αν/16` is split as `ε₁ = split·αν/16` for the output networks
/// (`W_G` parameters) and `ε₂` for the representation (`W_F`); `n` uses the
/// representation capacity at the full `αν/16`.
pub fn transfer_nm_nn(b: &BoundInputs, split: f64) -> Result<(f64, f64)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(invalid(format!("split must lie in (0, 1), got {split}")));
    }
    b.validate()?;
    let total = b.alpha * b.nu / 16.0;
    let cap = |w: f64, eps: f64| {
        nn_log_capacity(&BoundInputs {
            w,
            epsilon: eps,
            ..b.clone()
        })
    };
    let ln_g = cap(b.w_g, split * total)?;
    let ln_f2 = cap(b.w_f, (1.0 - split) * total)?;
    let ln_f = cap(b.w_f, total)?;
    let n_req = transfer_nm(&BoundInputs {
        ln_c_g: ln_g,
        ln_cstar_f: ln_f,
        ..b.clone()
    })?
    .0;
    let m_req = transfer_nm(&BoundInputs {
        ln_c_g: ln_g,
        ln_cstar_f: ln_f2,
        ..b.clone()
    })?
    .1;
    Ok((n_req, m_req))
}

/// Learning impedance `(1/n) ln C_joint / ln C_σ`, clamped to its
/// theoretical range `[1/n, 1]`.
pub fn impedance_ratio(ln_c_joint: f64, ln_c_sigma: f64, n: usize) -> Result<f64> {
    if !(ln_c_sigma > 0.0) {
        return Err(invalid(format!("ln C_sigma must be positive, got {ln_c_sigma}")));
    }
    if n == 0 {
        return Err(invalid("n must be positive".into()));
    }
    let lo = 1.0 / n as f64;
    let raw = lo * ln_c_joint / ln_c_sigma;
    if !(lo..=1.0).contains(&raw) {
        log::warn!("impedance {raw} outside [{lo}, 1]; clamped");
    }
    Ok(raw.clamp(lo, 1.0))
}

/// Impedance of a representation-learning space in terms of the capacity
/// ratio `r = ln C_G / ln C*_F`: `(1/n + r) / (1 + r)`.
pub fn representation_impedance(r: f64, n: usize) -> Result<f64> {
    if !(r >= 0.0) || n == 0 {
        return Err(invalid(format!("need r ≥ 0 and n ≥ 1, got r = {r}, n = {n}")));
    }
    Ok((1.0 / n as f64 + r) / (1.0 + r))
}

/// `2W ln(2eMd·Πb/ε)`, the log-capacity bound for a depth-`d` network with
/// `W` parameters; 0 once `ε ≥ 2eMd·Πb`.
pub fn nn_log_capacity(b: &BoundInputs) -> Result<f64> {
    if !(b.epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {}", b.epsilon)));
    }
    if !(b.loss_bound > 0.0) || b.depth == 0 || !(b.w >= 1.0) || !(b.lipschitz_product >= 1.0) {
        return Err(invalid("need M > 0, d ≥ 1, W ≥ 1 and a Lipschitz product ≥ 1".into()));
    }
    let top = 2.0 * std::f64::consts::E * b.loss_bound * b.depth as f64 * b.lipschitz_product;
    if b.epsilon >= top {
        return Ok(0.0);
    }
    Ok(2.0 * b.w * (top / b.epsilon).ln())
}

/// `min(1, 4 C e^{−α²ν n m / 8M})` with `ln C = ln_c_at`; `n = 1` gives the
/// single-task bound.
pub fn deviation_bound(b: &BoundInputs, ln_c_at: f64) -> Result<f64> {
    b.validate()?;
    if !(ln_c_at >= 0.0 && ln_c_at.is_finite()) {
        return Err(invalid(format!("log capacity must be finite and nonnegative, got {ln_c_at}")));
    }
    let exponent = (4.0f64).ln() + ln_c_at - (b.n * b.m) as f64 / (8.0 * b.scale());
    Ok(exponent.exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden() -> BoundInputs {
        BoundInputs {
            loss_bound: 1.0,
            alpha: 0.1,
            nu: 0.1,
            delta: 0.01,
            ln_c_g: 10.0,
            ln_cstar_f: 100.0,
            n: 10,
            ..BoundInputs::default()
        }
    }

    #[test]
    fn d_nu_examples() {
        assert_eq!(d_nu(0.3, 0.3, 0.5).unwrap(), 0.0);
        assert_eq!(d_nu(0.0, 1.0, 1.0).unwrap(), 0.5);
        assert!(d_nu(-0.1, 1.0, 1.0).is_err());
        assert!(d_nu(0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn multitask_m_golden() {
        // 8000·[10 + (ln 4 + 100 − ln 0.01)/10] = 8000·[20 + ln 400 / 10]
        let want = 8000.0 * (20.0 + 400f64.ln() / 10.0);
        assert!((multitask_m(&golden()).unwrap() - want).abs() / want < 1e-12);
        let bad = BoundInputs { delta: 4.0, ..golden() };
        assert!(multitask_m(&bad).is_err());
    }

    #[test]
    fn multitask_m_decreases_with_n() {
        let a = multitask_m(&golden()).unwrap();
        let b = multitask_m(&BoundInputs { n: 20, ..golden() }).unwrap();
        assert!(b < a);
    }

    #[test]
    fn transfer_golden() {
        let (n, m) = transfer_nm(&golden()).unwrap();
        let ln_term = 100.0 + 800f64.ln();
        assert!((n - 32000.0 * ln_term).abs() / n < 1e-12);
        assert!((m - 32000.0 * (10.0 + ln_term / 10.0)).abs() / m < 1e-12);
        let (n2, _) = transfer_nm(&BoundInputs { alpha: 0.05, ..golden() }).unwrap();
        assert!(n2 > 4.0 * n - 1e-6);
    }

    #[test]
    fn transfer_nn_split() {
        let b = BoundInputs {
            w_f: 50.0,
            w_g: 10.0,
            ..golden()
        };
        let (n, m) = transfer_nm_nn(&b, 0.5).unwrap();
        assert!(n > 0.0 && m > 0.0);
        assert!(transfer_nm_nn(&b, 1.0).is_err());
    }

    #[test]
    fn capacity_golden() {
        let b = BoundInputs {
            loss_bound: 1.0,
            depth: 2,
            lipschitz_product: 1.0,
            epsilon: 2.0 * std::f64::consts::E,
            w: 7.0,
            ..BoundInputs::default()
        };
        assert!((nn_log_capacity(&b).unwrap() - 14.0 * 2f64.ln()).abs() < 1e-12);
        let past = BoundInputs { epsilon: 100.0, ..b.clone() };
        assert_eq!(nn_log_capacity(&past).unwrap(), 0.0);
        let twice = BoundInputs { w: 14.0, ..b.clone() };
        assert!((nn_log_capacity(&twice).unwrap() - 2.0 * nn_log_capacity(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn deviation_golden_and_clamp() {
        let b = BoundInputs {
            n: 2,
            m: 50_000,
            ..golden()
        };
        // exponent 1e-3·100000/8 = 12.5
        let want = 4.0 * (5.0f64).exp() * (-12.5f64).exp();
        assert!((deviation_bound(&b, 5.0).unwrap() - want).abs() / want < 1e-12);
        assert_eq!(deviation_bound(&golden(), 50.0).unwrap(), 1.0);
    }

    #[test]
    fn deviation_squares_when_m_doubles() {
        let b = BoundInputs { m: 80_000, n: 1, ..golden() };
        let b2 = BoundInputs { m: 160_000, ..b.clone() };
        let f1 = deviation_bound(&b, 0.0).unwrap() / 4.0;
        let f2 = deviation_bound(&b2, 0.0).unwrap() / 4.0;
        assert!((f2 - f1 * f1).abs() / f2 < 1e-9);
    }

    #[test]
    fn impedance_examples() {
        assert!((impedance_ratio(5.0, 5.0, 4).unwrap() - 0.25).abs() < 1e-15);
        assert!((impedance_ratio(20.0, 5.0, 4).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(impedance_ratio(100.0, 5.0, 4).unwrap(), 1.0);
        assert_eq!(impedance_ratio(1.0, 5.0, 4).unwrap(), 0.25);
        assert!(impedance_ratio(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn representation_impedance_identity() {
        // with ln C_σ = ln C_G + ln C*_F and ln C_joint = n ln C_G + ln C*_F
        for (r, n) in [(0.3, 5usize), (2.0, 1), (0.0, 9), (7.5, 3)] {
            let ln_f = 10.0;
            let ln_g = r * ln_f;
            let direct = impedance_ratio(n as f64 * ln_g + ln_f, ln_g + ln_f, n).unwrap();
            assert!((representation_impedance(r, n).unwrap() - direct).abs() < 1e-12);
        }
    }

    fn inputs() -> impl Strategy<Value = BoundInputs> {
        (0.5f64..5.0, 0.01f64..0.99, 0.01f64..2.0, 0.001f64..0.99, 1usize..50, 1usize..1000, 0.0f64..200.0, 0.0f64..2000.0)
            .prop_map(|(mb, alpha, nu, delta, n, m, g, f)| BoundInputs {
                loss_bound: mb,
                alpha,
                nu,
                delta,
                n,
                m,
                ln_c_g: g,
                ln_cstar_f: f,
                ..BoundInputs::default()
            })
    }

    proptest! {
        #[test]
        fn bounds_monotone(b in inputs()) {
            let m0 = multitask_m(&b).unwrap();
            let (n0, r0) = transfer_nm(&b).unwrap();
            prop_assert!(m0.is_finite() && m0 > 0.0);
            let up_f = BoundInputs { ln_cstar_f: b.ln_cstar_f + 1.0, ..b.clone() };
            prop_assert!(multitask_m(&up_f).unwrap() > m0);
            prop_assert!(transfer_nm(&up_f).unwrap().0 > n0);
            let up_g = BoundInputs { ln_c_g: b.ln_c_g + 1.0, ..b.clone() };
            prop_assert!(transfer_nm(&up_g).unwrap().1 > r0);
            let less_delta = BoundInputs { delta: b.delta / 2.0, ..b.clone() };
            prop_assert!(transfer_nm(&less_delta).unwrap().0 > n0);
            let more_n = BoundInputs { n: b.n + 1, ..b.clone() };
            prop_assert!(multitask_m(&more_n).unwrap() < m0);
            let big_m = BoundInputs { loss_bound: b.loss_bound * 2.0, ..b.clone() };
            prop_assert!(multitask_m(&big_m).unwrap() > m0);
        }

        #[test]
        fn d_nu_metric(x in 0.0f64..10.0, y in 0.0f64..10.0, z in 0.0f64..10.0, nu in 0.01f64..5.0) {
            let d = |a, b| d_nu(a, b, nu).unwrap();
            prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12);
            prop_assert!((0.0..1.0).contains(&d(x, y)));
            prop_assert!((d(x, y) - d(y, x)).abs() < 1e-15);
        }
    }
}
