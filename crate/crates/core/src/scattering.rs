//! Plane-wave scattering off the sharp step `V(x) = V0 θ(x)` with incidence
//! from `x = +∞`: matching at `x = 0`, probability currents, and the
//! transmission coefficient obtained three ways (closed form, explicit
//! matching, and the velocity weak value).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinor::{Spinor, IDENTITY_TOL};
use crate::weakvalue::{classify_regime, Regime, StepKinematics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSolution {
    pub e_f: f64,
    pub e_i: f64,
    pub p_i: f64,
    pub p_f: f64,
    pub regime: Regime,
    pub r: f64,
    pub transmission: f64,
    pub reflection: f64,
    pub amp_ratio_b_over_a: Complex64,
    pub amp_ratio_d_over_a: Complex64,
    /// Current magnitudes per unit incident amplitude. The incident and
    /// transmitted currents point towards `-x`, the reflected one towards `+x`.
    pub j_inc: f64,
    pub j_ref: f64,
    pub j_tra: f64,
    /// Set for forbidden or channel-less inputs, where `T = 0` and `R = 1`.
    pub degenerate: bool,
}

impl ScatteringSolution {
    fn degenerate(e_f: f64, v0: f64, mass: f64, regime: Regime) -> Self {
        let e_i = e_f - v0;
        let p = |e: f64| crate::spinor::dispersion_momentum(e, mass).unwrap_or(0.0);
        Self {
            e_f,
            e_i,
            p_i: p(e_i),
            p_f: p(e_f),
            regime,
            r: 0.0,
            transmission: 0.0,
            reflection: 1.0,
            amp_ratio_b_over_a: Complex64::new(0.0, 0.0),
            amp_ratio_d_over_a: Complex64::new(0.0, 0.0),
            j_inc: 0.0,
            j_ref: 0.0,
            j_tra: 0.0,
            degenerate: true,
        }
    }

    /// `j_tra / j_inc` from the matched amplitudes.
    pub fn flux_transmission(&self) -> f64 {
        self.j_tra / self.j_inc
    }
}

fn ratio_from(kin: &StepKinematics) -> f64 {
    let m = kin.mass;
    -(kin.incident_momentum() / kin.p_f) * (kin.e_f + m) / (kin.e_i + m)
}

/// `r = -(p_i/p_f)(E_f + m)/(E_i + m)`, with the incident momentum carried
/// with its sign so that `r > 0` in both transmission regimes.
pub fn ratio_r(e_f: f64, v0: f64, mass: f64, regime: Regime) -> Result<f64> {
    let kin = StepKinematics::new(e_f, v0, mass, regime)?;
    Ok(ratio_from(&kin))
}

fn coefficients(r: f64) -> (f64, f64) {
    let d = (1.0 + r) * (1.0 + r);
    (4.0 * r / d, (1.0 - r) * (1.0 - r) / d)
}

/// Transmission and reflection coefficients `4r/(1+r)^2` and
/// `(1-r)^2/(1+r)^2`, with currents and amplitude ratios from
/// [`boundary_match`]. Non-transmission regimes give `T = 0, R = 1` with the
/// `degenerate` flag set.
pub fn transmission(e_f: f64, v0: f64, mass: f64, regime: Regime) -> Result<ScatteringSolution> {
    if !regime.is_transmission() {
        let actual = classify_regime(e_f, v0, mass);
        if actual != regime {
            return Err(Error::RegimeMismatch {
                e_f,
                v0,
                mass,
                requested: regime,
                actual,
            });
        }
        return Ok(ScatteringSolution::degenerate(e_f, v0, mass, regime));
    }
    let kin = StepKinematics::new(e_f, v0, mass, regime)?;
    let mut sol = match_amplitudes(&kin);
    let (t, r) = coefficients(sol.r);
    sol.transmission = t;
    sol.reflection = r;
    Ok(sol)
}

/// Transmission for any `(e_f, v0, mass)`, classifying the regime first.
pub fn transmission_auto(e_f: f64, v0: f64, mass: f64) -> Result<ScatteringSolution> {
    transmission(e_f, v0, mass, classify_regime(e_f, v0, mass))
}

/// Solves `A u_inc + B u_ref = D u_tra` at `x = 0` using the unnormalized
/// spinors `[m, E - k]` and evaluates `j = Ψ† σ_z Ψ` for each wave. Here
/// `transmission` and `reflection` are the current ratios.
pub fn boundary_match(e_f: f64, v0: f64, mass: f64, regime: Regime) -> Result<ScatteringSolution> {
    let kin = StepKinematics::new(e_f, v0, mass, regime)?;
    let mut sol = match_amplitudes(&kin);
    sol.transmission = sol.j_tra / sol.j_inc;
    sol.reflection = sol.j_ref / sol.j_inc;
    Ok(sol)
}

fn match_amplitudes(kin: &StepKinematics) -> ScatteringSolution {
    let m = kin.mass;
    let k = kin.incident_momentum();
    let u_inc = Spinor::real(m, kin.e_i - k);
    let u_ref = Spinor::real(m, kin.e_i + k);
    let u_tra = Spinor::real(m, kin.e_f + kin.p_f);

    // [u_ref, -u_tra] (B, D)^T = -u_inc, by Cramer's rule.
    let (a11, a12) = (u_ref.upper, -u_tra.upper);
    let (a21, a22) = (u_ref.lower, -u_tra.lower);
    let (b1, b2) = (-u_inc.upper, -u_inc.lower);
    let det = a11 * a22 - a12 * a21;
    assert!(det.norm() > 0.0, "singular matching system");
    let b = (b1 * a22 - a12 * b2) / det;
    let d = (a11 * b2 - b1 * a21) / det;

    let current =
        |amp: Complex64, u: &Spinor| amp.norm_sqr() * (u.upper.norm_sqr() - u.lower.norm_sqr());
    let one = Complex64::new(1.0, 0.0);
    ScatteringSolution {
        e_f: kin.e_f,
        e_i: kin.e_i,
        p_i: kin.p_i,
        p_f: kin.p_f,
        regime: kin.regime,
        r: ratio_from(kin),
        transmission: f64::NAN,
        reflection: f64::NAN,
        amp_ratio_b_over_a: b,
        amp_ratio_d_over_a: d,
        j_inc: current(one, &u_inc).abs(),
        j_ref: current(b, &u_ref).abs(),
        j_tra: current(d, &u_tra).abs(),
        degenerate: false,
    }
}

/// `T` recovered from `T w = 2 (1/v_i + 1/v_f)^{-1}`, where `w` is the
/// velocity weak value and `v_i`, `v_f` the incident and transmitted group
/// velocities.
pub fn weakvalue_transmission(e_f: f64, v0: f64, mass: f64, regime: Regime) -> Result<f64> {
    let kin = StepKinematics::new(e_f, v0, mass, regime)?;
    let w = kin.velocity_weak_value();
    let v_i = kin.incident_state().velocity();
    let v_f = kin.transmitted_state().velocity();
    assert!(
        w != 0.0 && v_i != 0.0 && v_f != 0.0,
        "zero velocity in a transmission regime"
    );
    Ok(harmonic_velocity(v_i, v_f) / w)
}

/// `2 (1/v_i + 1/v_f)^{-1}`.
pub fn harmonic_velocity(v_i: f64, v_f: f64) -> f64 {
    2.0 * v_i * v_f / (v_i + v_f)
}

/// True when `T + R = 1` holds to the identity tolerance.
pub fn is_unitary(sol: &ScatteringSolution) -> bool {
    (sol.transmission + sol.reflection - 1.0).abs() <= IDENTITY_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUPER: Regime = Regime::SupercriticalTransmission;
    const SAME: Regime = Regime::SameContinuumTransmission;

    #[test]
    fn ratio_examples() {
        assert!((ratio_r(2.0, 5.0, 1.0, SUPER).unwrap() - 2.449490).abs() < 1e-6);
        assert!(
            (ratio_r(2.0, 5.0, 1.0, SUPER).unwrap() - 1.5 * (8.0f64 / 3.0).sqrt()).abs() < 1e-14
        );
        assert!((ratio_r(2.5, 5.0, 1.0, SUPER).unwrap() - 7.0 / 3.0).abs() < 1e-14);
        assert!((ratio_r(3.0, 0.0, 1.0, SAME).unwrap() - 1.0).abs() < 1e-15);
        assert!(ratio_r(1.5, 2.0, 1.0, SUPER).is_err());
    }

    #[test]
    fn transmission_examples() {
        let s = transmission(2.0, 5.0, 1.0, SUPER).unwrap();
        assert!((s.transmission - 0.823429).abs() < 1e-6);
        assert!((s.reflection - 0.176571).abs() < 1e-6);
        assert!(is_unitary(&s));

        let s = transmission(2.5, 5.0, 1.0, SUPER).unwrap();
        assert!((s.transmission - 0.84).abs() < 1e-14);
        assert!((s.reflection - 0.16).abs() < 1e-14);

        let s = transmission(3.0, 0.0, 1.0, SAME).unwrap();
        assert_eq!(s.transmission, 1.0);
        assert_eq!(s.reflection, 0.0);
    }

    #[test]
    fn forbidden_is_degenerate() {
        let s = transmission(1.5, 2.0, 1.0, Regime::Forbidden).unwrap();
        assert!(s.degenerate);
        assert_eq!((s.transmission, s.reflection), (0.0, 1.0));
        assert!(transmission(1.5, 2.0, 1.0, SUPER).is_err());
        assert!(transmission(2.0, 5.0, 1.0, Regime::Forbidden).is_err());
        assert!(transmission_auto(0.5, 0.0, 1.0).unwrap().degenerate);
    }

    #[test]
    fn matching_examples() {
        let s = boundary_match(2.0, 5.0, 1.0, SUPER).unwrap();
        assert!((s.flux_transmission() - 0.823429).abs() < 1e-6);
        assert!((s.j_inc - s.j_ref - s.j_tra).abs() < 1e-12 * s.j_inc);
        assert!(s.amp_ratio_b_over_a.im.abs() < 1e-12);

        let s = boundary_match(3.0, 0.0, 1.0, SAME).unwrap();
        assert!(s.amp_ratio_b_over_a.norm() < 1e-15);
        assert!((s.amp_ratio_d_over_a - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn weakvalue_route_examples() {
        let kin = StepKinematics::new(2.0, 5.0, 1.0, SUPER).unwrap();
        let v_i = kin.incident_state().velocity();
        let v_f = kin.transmitted_state().velocity();
        assert!((v_i + 0.942809).abs() < 1e-6);
        assert!((v_f + 0.866025).abs() < 1e-6);
        assert!((harmonic_velocity(v_i, v_f) + 0.902787).abs() < 1e-6);
        let t = weakvalue_transmission(2.0, 5.0, 1.0, SUPER).unwrap();
        assert!((t - 0.823429).abs() < 1e-6);

        assert!((weakvalue_transmission(3.0, 0.0, 1.0, SAME).unwrap() - 1.0).abs() < 1e-15);
        assert!((weakvalue_transmission(2.5, 5.0, 1.0, SUPER).unwrap() - 0.84).abs() < 1e-14);
    }

    #[test]
    fn three_routes_agree_on_grid() {
        for &(e_f, v0) in &[
            (1.3, 6.0),
            (2.0, 5.0),
            (3.9, 5.0),
            (3.0, 1.0),
            (2.5, -3.0),
            (10.0, 8.5),
        ] {
            let regime = classify_regime(e_f, v0, 1.0);
            let t = transmission(e_f, v0, 1.0, regime).unwrap().transmission;
            let t_flux = boundary_match(e_f, v0, 1.0, regime).unwrap().transmission;
            let t_wv = weakvalue_transmission(e_f, v0, 1.0, regime).unwrap();
            assert!((t - t_flux).abs() < 1e-12, "{e_f} {v0}: {t} vs {t_flux}");
            assert!((t - t_wv).abs() < 1e-10, "{e_f} {v0}: {t} vs {t_wv}");
        }
    }

    #[test]
    fn endpoint_decay() {
        let t = |e: f64| transmission_auto(e, 5.0, 1.0).unwrap().transmission;
        let low: Vec<f64> = [1e-3, 1e-4, 1e-6].iter().map(|d| t(1.0 + d)).collect();
        let high: Vec<f64> = [1e-3, 1e-4, 1e-6].iter().map(|d| t(4.0 - d)).collect();
        assert!(low.windows(2).all(|w| w[1] < w[0]));
        assert!(high.windows(2).all(|w| w[1] < w[0]));
        assert!(low[2] < 1e-2 && high[2] < 1e-2);
    }
}
