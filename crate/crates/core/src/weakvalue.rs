//! Weak values of Pauli observables under pre- and post-selection, and the
//! velocity weak value for transmission through a sharp step `V(x) = V0 θ(x)`.
//!
//! The incident wave comes from `x = +∞`, so its kinetic energy on the step
//! is `E_i = E_f - V0` while the transmitted wave at `x < 0` has `E_f`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spinor::{dispersion_momentum, pauli_matrix, Branch, ChiralityState, PauliAxis, Spinor};

/// Post-selection overlaps below this magnitude are treated as orthogonal.
pub const OVERLAP_THRESHOLD: f64 = 1e-12;
/// Largest imaginary part tolerated before a weak value can be called strange.
pub const STRANGE_IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValueResult {
    pub value: Complex64,
    pub real_part: f64,
    pub imag_part: f64,
    /// `<post|pre>`.
    pub overlap: Complex64,
    /// Real part outside the spectrum `[-1, 1]` of a Pauli matrix.
    pub strange: bool,
}

impl WeakValueResult {
    fn from_parts(value: Complex64, overlap: Complex64) -> Self {
        Self {
            value,
            real_part: value.re,
            imag_part: value.im,
            overlap,
            strange: value.re.abs() > 1.0 && value.im.abs() < STRANGE_IMAG_TOL,
        }
    }
}

/// `<post|sigma|pre> / <post|pre>` for arbitrary (not necessarily
/// normalized) spinors.
pub fn weak_value_spinors(pre: &Spinor, post: &Spinor, axis: PauliAxis) -> Result<WeakValueResult> {
    let norms = pre.norm() * post.norm();
    if norms == 0.0 {
        return Err(Error::OrthogonalPostSelection { overlap: 0.0 });
    }
    let overlap = post.inner(pre);
    if overlap.norm() / norms < OVERLAP_THRESHOLD {
        return Err(Error::OrthogonalPostSelection {
            overlap: overlap.norm() / norms,
        });
    }
    let numerator = post.sandwich(&pauli_matrix(axis), pre);
    Ok(WeakValueResult::from_parts(numerator / overlap, overlap))
}

pub fn weak_value(
    pre: &ChiralityState,
    post: &ChiralityState,
    axis: PauliAxis,
) -> Result<WeakValueResult> {
    weak_value_spinors(pre.spinor(), post.spinor(), axis)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `E_f > m` and `V0 - m > E_f`: the level sinks into the Dirac sea on
    /// the step side and transmission produces pairs.
    SupercriticalTransmission,
    /// `E_f > m` and `E_f > V0 + m`: both sides in the upper continuum.
    SameContinuumTransmission,
    /// A side has `|E| <= m`; no propagating mode.
    Forbidden,
    /// `E_f < -m`: the level lies in the Dirac sea at `x < 0`; no
    /// particle-transmission channel in this model.
    SubcriticalNoChannel,
}

impl Regime {
    pub fn is_transmission(self) -> bool {
        matches!(
            self,
            Regime::SupercriticalTransmission | Regime::SameContinuumTransmission
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::SupercriticalTransmission => "supercritical_transmission",
            Regime::SameContinuumTransmission => "same_continuum_transmission",
            Regime::Forbidden => "forbidden",
            Regime::SubcriticalNoChannel => "subcritical_no_channel",
        }
    }
}

/// Classifies the transmitted energy level `e_f` against a step of height
/// `v0`. Band-edge equalities count as forbidden.
pub fn classify_regime(e_f: f64, v0: f64, mass: f64) -> Regime {
    let e_i = e_f - v0;
    if !(e_f.is_finite() && e_i.is_finite()) || e_f.abs() <= mass || e_i.abs() <= mass {
        return Regime::Forbidden;
    }
    if e_f < -mass {
        Regime::SubcriticalNoChannel
    } else if e_i < -mass {
        Regime::SupercriticalTransmission
    } else {
        Regime::SameContinuumTransmission
    }
}

/// Energies and momentum magnitudes of the incident, reflected and
/// transmitted waves for one transmission problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepKinematics {
    pub e_f: f64,
    pub v0: f64,
    pub mass: f64,
    /// Kinetic energy on the step side, `e_f - v0`.
    pub e_i: f64,
    pub p_i: f64,
    pub p_f: f64,
    pub regime: Regime,
}

impl StepKinematics {
    /// Validates that `(e_f, v0, mass)` lies in `regime`, which must be a
    /// transmission regime.
    pub fn new(e_f: f64, v0: f64, mass: f64, regime: Regime) -> Result<Self> {
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
        Self::resolve(e_f, v0, mass)
    }

    /// Classifies and builds the kinematics; errors outside transmission regimes.
    pub fn resolve(e_f: f64, v0: f64, mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("m", format!("mass must be positive, got {mass}")));
        }
        let regime = classify_regime(e_f, v0, mass);
        if !regime.is_transmission() {
            return Err(Error::NoTransmission(regime));
        }
        let e_i = e_f - v0;
        Ok(Self {
            e_f,
            v0,
            mass,
            e_i,
            p_i: dispersion_momentum(e_i, mass)?,
            p_f: dispersion_momentum(e_f, mass)?,
            regime,
        })
    }

    /// Signed momentum of the incident wave: `+p_i` when `E_i < 0`
    /// (supercritical), `-p_i` in the same-continuum case. Either way it moves
    /// towards `-x`.
    pub fn incident_momentum(&self) -> f64 {
        match self.regime {
            Regime::SupercriticalTransmission => self.p_i,
            _ => -self.p_i,
        }
    }

    pub fn incident_state(&self) -> ChiralityState {
        self.state(self.e_i, self.incident_momentum())
    }

    pub fn reflected_state(&self) -> ChiralityState {
        self.state(self.e_i, -self.incident_momentum())
    }

    /// `|E_f^->`, momentum `-p_f`.
    pub fn transmitted_state(&self) -> ChiralityState {
        self.state(self.e_f, -self.p_f)
    }

    fn state(&self, energy: f64, k: f64) -> ChiralityState {
        let branch = if k >= 0.0 {
            Branch::Plus
        } else {
            Branch::Minus
        };
        // The momenta come from dispersion_momentum, so the triple is consistent.
        ChiralityState::new(energy, k.abs(), self.mass, branch)
            .expect("kinematics produce on-shell states")
    }

    /// Closed-form velocity weak value `<E_f^-|sigma_z|E_i>/<E_f^-|E_i>`.
    pub fn velocity_weak_value(&self) -> f64 {
        match self.regime {
            // (E_i - E_f) / (p_i + p_f)
            Regime::SupercriticalTransmission => -self.v0 / (self.p_i + self.p_f),
            // (E_i - E_f) / (p_f - p_i), rationalized so V0 = 0 gives -p_f/E_f.
            _ => -(self.p_i + self.p_f) / (self.e_f + self.e_i),
        }
    }
}

/// Velocity weak value for transmission in `regime`, with the overlap taken
/// from the explicit incident and transmitted chirality states.
pub fn step_weak_value(e_f: f64, v0: f64, mass: f64, regime: Regime) -> Result<WeakValueResult> {
    let kin = StepKinematics::new(e_f, v0, mass, regime)?;
    let overlap = kin
        .transmitted_state()
        .spinor()
        .inner(kin.incident_state().spinor());
    Ok(WeakValueResult::from_parts(
        Complex64::new(kin.velocity_weak_value(), 0.0),
        overlap,
    ))
}
