//! Single-mode propagators of `H(p) = σ_z p + m σ_x`.
//!
//! A plane wave `e^{ipx}` turns the momentum operator into the number `p`, so
//! every propagator here is a 2x2 unitary acting on the chirality.
//! The quantum-walk step is a coin `e^{-i m σ_x ε}` followed by a shift
//! `e^{-i σ_z p ε}`; its Trotter product converges to `e^{-iHt}` at first
//! order in `ε`.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spinor::{pauli_matrix, ChiralityState, Mat2, PauliAxis};
use crate::weakvalue::weak_value;

/// Nodes per nesting level for the series coefficients.
pub const SERIES_NODES: usize = 64;
pub const MAX_SERIES_ORDER: usize = 3;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator2x2 {
    pub entries: Mat2,
    pub t: f64,
    pub p: f64,
}

impl Propagator2x2 {
    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        max_entry_distance(&(self.entries.adjoint() * self.entries), &Mat2::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn max_entry_error(&self, other: &Propagator2x2) -> f64 {
        max_entry_distance(&self.entries, &other.entries)
    }
}

pub fn max_entry_distance(a: &Mat2, b: &Mat2) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `cos(ωt) I - i sin(ωt) (σ_z p + σ_x m)/ω`, `ω = sqrt(p^2 + m^2)`.
pub fn exact_propagator(p: f64, mass: f64, t: f64) -> Propagator2x2 {
    let omega = p.hypot(mass);
    let (s, c) = (omega * t).sin_cos();
    // sin(ωt)/ω → t as ω → 0
    let sinc = if omega == 0.0 { t } else { s / omega };
    let h = pauli_matrix(PauliAxis::Z) * Complex64::new(p, 0.0)
        + pauli_matrix(PauliAxis::X) * Complex64::new(mass, 0.0);
    Propagator2x2 {
        entries: Mat2::identity() * Complex64::new(c, 0.0) - h * (I * sinc),
        t,
        p,
    }
}

/// Coin `e^{-i m σ_x τ}`.
pub fn coin(mass: f64, tau: f64) -> Mat2 {
    let (s, c) = (mass * tau).sin_cos();
    Mat2::identity() * Complex64::new(c, 0.0) - pauli_matrix(PauliAxis::X) * (I * s)
}

/// Shift `e^{-i σ_z p τ}` in momentum space.
pub fn shift(p: f64, tau: f64) -> Mat2 {
    let phase = Complex64::from_polar(1.0, -p * tau);
    Mat2::new(
        phase,
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        phase.conj(),
    )
}

/// `[shift(ε) coin(ε)]^steps` with `ε = t/steps`.
///
/// The power is taken by repeated squaring. A plain loop of `steps`
/// products accumulates one rounding per factor in the phase, which reaches
/// a few 1e-14 at 512 steps even when the two factors commute.
pub fn trotter_propagator(p: f64, mass: f64, t: f64, steps: usize) -> Result<Propagator2x2> {
    if steps == 0 {
        return Err(invalid("steps", "at least one Trotter step is required"));
    }
    let eps = t / steps as f64;
    let mut base = unit_determinant_step(shift(p, eps) * coin(mass, eps));
    let mut u = Mat2::identity();
    let mut k = steps;
    while k > 0 {
        if k & 1 == 1 {
            u = unit_determinant_step(base * u);
        }
        base = unit_determinant_step(base * base);
        k >>= 1;
    }
    Ok(Propagator2x2 { entries: u, t, p })
}

/// Rescales an SU(2) matrix `[[a, -b*], [b, a*]]` so that `|a|^2 + |b|^2 = 1`
/// to the last bit.
fn unit_determinant_step(u: Mat2) -> Mat2 {
    let norm = (u[(0, 0)].norm_sqr() + u[(1, 0)].norm_sqr()).sqrt();
    u / Complex64::new(norm, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoefficients {
    pub order: usize,
    pub f_c: f64,
    pub f_s: f64,
    pub t: f64,
}

fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(SERIES_NODES).expect("rule degree is at least 2"))
        .as_node_weight_pairs()
}

/// `∫_0^{upper} dt_k ...` of `exp(i m (phase + 2 Σ_{j≥k} (-1)^j t_j))` over the
/// remaining `depth` ordered times.
fn nested(
    rule: &[(f64, f64)],
    depth: usize,
    upper: f64,
    phase: f64,
    sign: f64,
    mass: f64,
) -> Complex64 {
    let half = 0.5 * upper;
    rule.iter()
        .map(|&(x, w)| {
            let tk = half * (1.0 + x);
            let phase = phase + 2.0 * sign * tk;
            let inner = if depth == 1 {
                Complex64::from_polar(1.0, mass * phase)
            } else {
                nested(rule, depth - 1, tk, phase, -sign, mass)
            };
            inner * (w * half)
        })
        .sum()
}

/// `f_c^(n)(t)` and `f_s^(n)(t)`: the ordered `n`-fold integrals of
/// `cos` and `sin` of `m (t + 2 Σ (-1)^k t_k)`, with `f^(0) = (cos mt, sin mt)`.
pub fn series_coefficient(order: usize, t: f64, mass: f64) -> Result<SeriesCoefficients> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let z = if order == 0 {
        Complex64::from_polar(1.0, mass * t)
    } else {
        nested(gauss_legendre(), order, t, t, -1.0, mass)
    };
    Ok(SeriesCoefficients {
        order,
        f_c: z.re,
        f_s: z.im,
        t,
    })
}

/// `F^(n)(t)`: `f_c <σ_z> - f_s <σ_y>` for odd `n`, `f_c <1> - i f_s <σ_x>`
/// for even `n`, all sandwiched between `post` and `pre`.
pub fn series_matrix_element(
    coeff: &SeriesCoefficients,
    pre: &ChiralityState,
    post: &ChiralityState,
) -> Complex64 {
    let (a, b) = (post.spinor(), pre.spinor());
    let el = |axis| a.sandwich(&pauli_matrix(axis), b);
    if coeff.order % 2 == 1 {
        el(PauliAxis::Z) * coeff.f_c - el(PauliAxis::Y) * coeff.f_s
    } else {
        a.inner(b) * coeff.f_c - I * el(PauliAxis::X) * coeff.f_s
    }
}

/// Truncated expansion of `<post|U(t)|pre>` in powers of `p`:
/// `Σ_{n ≤ order} (-i p)^n F^(n)(t)`.
///
/// The ordered integrals in `F^(n)` already carry the `1/n!` of a
/// time-ordered exponential, so no further factorial appears here.
pub fn postselected_element(
    pre: &ChiralityState,
    post: &ChiralityState,
    p: f64,
    mass: f64,
    t: f64,
    order: usize,
) -> Result<Complex64> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut factor = Complex64::new(1.0, 0.0);
    for n in 0..=order {
        let coeff = series_coefficient(n, t, mass)?;
        sum += factor * series_matrix_element(&coeff, pre, post);
        factor *= -I * p;
    }
    Ok(sum)
}

/// `<post|pre> exp(-i m <σ_x>_w t) exp(-i p <σ_z>_w t)`, the short-time form
/// of the post-selected propagator in terms of weak values.
pub fn shorttime_weakvalue_propagator(
    pre: &ChiralityState,
    post: &ChiralityState,
    p: f64,
    mass: f64,
    t: f64,
) -> Result<Complex64> {
    let wx = weak_value(pre, post, PauliAxis::X)?;
    let wz = weak_value(pre, post, PauliAxis::Z)?;
    let mass_phase = (-I * mass * t * wx.value).exp();
    let drift_phase = (-I * p * t * wz.value).exp();
    Ok(wz.overlap * mass_phase * drift_phase)
}

/// `<post|exact_propagator(p, m, t)|pre>`.
pub fn exact_element(
    pre: &ChiralityState,
    post: &ChiralityState,
    p: f64,
    mass: f64,
    t: f64,
) -> Complex64 {
    post.spinor()
        .sandwich(&exact_propagator(p, mass, t).entries, pre.spinor())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinor::{chirality_state, Branch};
    use std::f64::consts::PI;

    const ROOT3: f64 = 1.7320508075688772;
    const ROOT8: f64 = 2.8284271247461903;

    fn pair() -> (ChiralityState, ChiralityState) {
        (
            chirality_state(-3.0, ROOT8, 1.0, Branch::Plus).unwrap(),
            chirality_state(2.0, ROOT3, 1.0, Branch::Minus).unwrap(),
        )
    }

    #[test]
    fn exact_examples() {
        assert!(
            max_entry_distance(&exact_propagator(0.7, 1.3, 0.0).entries, &Mat2::identity()) < 1e-15
        );
        let u = exact_propagator(1.0, 1.0, PI / 2f64.sqrt());
        assert!(max_entry_distance(&u.entries, &-Mat2::identity()) < 1e-15);
        let t = 0.37;
        assert!(max_entry_distance(&exact_propagator(0.0, 1.0, t).entries, &coin(1.0, t)) < 1e-15);
        assert!(exact_propagator(2.0, 0.5, 3.0).is_unitary(1e-14));
        assert_eq!(exact_propagator(0.0, 0.0, 2.0).entries, Mat2::identity());
    }

    #[test]
    fn trotter_commuting_limits() {
        for (p, m) in [(0.0, 1.0), (1.0, 0.0)] {
            let u = trotter_propagator(p, m, 1.0, 1).unwrap();
            assert!(u.max_entry_error(&exact_propagator(p, m, 1.0)) < 1e-15);
        }
        assert!(trotter_propagator(1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn trotter_first_order() {
        let exact = exact_propagator(1.0, 1.0, 1.0);
        let errs: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| {
                trotter_propagator(1.0, 1.0, 1.0, n)
                    .unwrap()
                    .max_entry_error(&exact)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn squaring_matches_sequential_product() {
        for steps in [1, 7, 64, 300] {
            let eps = 0.9 / steps as f64;
            let step = shift(1.7, eps) * coin(0.6, eps);
            let mut direct = Mat2::identity();
            for _ in 0..steps {
                direct = step * direct;
            }
            let u = trotter_propagator(1.7, 0.6, 0.9, steps).unwrap();
            assert!(max_entry_distance(&u.entries, &direct) < 1e-13);
        }
    }

    #[test]
    fn trotter_stays_unitary() {
        let u = trotter_propagator(1.3, 0.8, 5.0, 10_000).unwrap();
        assert!(u.is_unitary(1e-12), "defect {}", u.unitarity_defect());
    }

    #[test]
    fn first_order_coefficients() {
        for &t in &[0.0, 0.1, 0.5, 1.0] {
            for &m in &[0.5, 1.0, 2.0] {
                let c = series_coefficient(1, t, m).unwrap();
                assert!((c.f_c - (m * t).sin() / m).abs() < 1e-12);
                assert!(c.f_s.abs() < 1e-12);
            }
        }
        let c0 = series_coefficient(0, 0.0, 1.0).unwrap();
        assert_eq!((c0.f_c, c0.f_s), (1.0, 0.0));
        assert!(matches!(
            series_coefficient(4, 0.1, 1.0),
            Err(Error::UnsupportedOrder(4))
        ));
    }

    #[test]
    fn volume_bound() {
        let t: f64 = 0.1;
        let c = series_coefficient(2, t, 1.0).unwrap();
        assert!(c.f_c.abs() <= t * t / 2.0);
        assert!(c.f_s.abs() <= t * t / 2.0);
        let c = series_coefficient(3, t, 1.0).unwrap();
        assert!(c.f_c.abs() <= t.powi(3) / 6.0);
    }

    #[test]
    fn series_examples() {
        let (pre, post) = pair();
        let at_zero = postselected_element(&pre, &post, ROOT8, 1.0, 0.0, 3).unwrap();
        assert!((at_zero - post.spinor().inner(pre.spinor())).norm() < 1e-15);

        let t = 0.4;
        let coin_only = postselected_element(&pre, &post, 0.0, 1.0, t, 0).unwrap();
        assert!((coin_only - exact_element(&pre, &post, 0.0, 1.0, t)).norm() < 1e-15);

        let t = 0.01;
        let approx = postselected_element(&pre, &post, ROOT8, 1.0, t, 3).unwrap();
        let exact = exact_element(&pre, &post, ROOT8, 1.0, t);
        assert!((approx - exact).norm() <= (ROOT8 * t).powi(4));
        assert!(matches!(
            postselected_element(&pre, &post, ROOT8, 1.0, t, 4),
            Err(Error::UnsupportedOrder(4))
        ));
    }

    #[test]
    fn shorttime_examples() {
        let (pre, post) = pair();
        let z = shorttime_weakvalue_propagator(&pre, &post, ROOT8, 1.0, 0.0).unwrap();
        assert!((z - post.spinor().inner(pre.spinor())).norm() < 1e-15);

        // pre = post: phases are expectation values
        for &t in &[1e-3, 2e-3] {
            let approx = shorttime_weakvalue_propagator(&pre, &pre, ROOT8, 1.0, t).unwrap();
            let exact = exact_element(&pre, &pre, ROOT8, 1.0, t);
            assert!((approx - exact).norm() < 10.0 * t * t);
        }
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
