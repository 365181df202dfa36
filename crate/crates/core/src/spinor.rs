//! Two-component spinors, Pauli operators, the free dispersion relation and
//! the chirality states carried by plane waves.
//!
//! Everything here is in natural units (hbar = c = 1): energies, momenta and
//! masses share one dimensionless scale.

use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// 2x2 complex matrix used for chirality-space operators.
pub type Mat2 = Matrix2<Complex64>;

/// Relative tolerance for algebraic identities such as E^2 = p^2 + m^2.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Absolute tolerance on |norm - 1| before a spinor counts as unnormalized.
pub const NORM_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rest mass and step height of one scattering problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub mass: f64,
    pub v0: f64,
}

impl PhysParams {
    pub fn new(mass: f64, v0: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid(
                "m",
                format!("mass must be positive and finite, got {mass}"),
            ));
        }
        if !v0.is_finite() {
            return Err(invalid(
                "V0",
                format!("step height must be finite, got {v0}"),
            ));
        }
        Ok(Self { mass, v0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliAxis::X => "x",
            PauliAxis::Y => "y",
            PauliAxis::Z => "z",
        };
        f.write_str(s)
    }
}

/// The standard Pauli matrix for `axis`.
pub fn pauli_matrix(axis: PauliAxis) -> Mat2 {
    match axis {
        PauliAxis::X => Mat2::new(ZERO, ONE, ONE, ZERO),
        PauliAxis::Y => Mat2::new(ZERO, -I, I, ZERO),
        PauliAxis::Z => Mat2::new(ONE, ZERO, ZERO, -ONE),
    }
}

/// A column vector `[upper, lower]` in chirality space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Spinor {
    pub upper: Complex64,
    pub lower: Complex64,
}

impl Spinor {
    pub const fn new(upper: Complex64, lower: Complex64) -> Self {
        Self { upper, lower }
    }

    pub const fn real(upper: f64, lower: f64) -> Self {
        Self {
            upper: Complex64::new(upper, 0.0),
            lower: Complex64::new(lower, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.upper.norm_sqr() + self.lower.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit Euclidean norm. The zero spinor is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            *self
        } else {
            self.scale(Complex64::new(1.0 / n, 0.0))
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.upper * c, self.lower * c)
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.upper.conj() * other.upper + self.lower.conj() * other.lower
    }

    pub fn apply(&self, op: &Mat2) -> Spinor {
        Spinor::new(
            op[(0, 0)] * self.upper + op[(0, 1)] * self.lower,
            op[(1, 0)] * self.upper + op[(1, 1)] * self.lower,
        )
    }

    /// `<self|op|other>`.
    pub fn sandwich(&self, op: &Mat2, other: &Spinor) -> Complex64 {
        self.inner(&other.apply(op))
    }

    pub fn is_finite(&self) -> bool {
        self.upper.is_finite() && self.lower.is_finite()
    }
}

impl std::ops::Add for Spinor {
    type Output = Spinor;
    fn add(self, rhs: Spinor) -> Spinor {
        Spinor::new(self.upper + rhs.upper, self.lower + rhs.lower)
    }
}

impl std::ops::Sub for Spinor {
    type Output = Spinor;
    fn sub(self, rhs: Spinor) -> Spinor {
        Spinor::new(self.upper - rhs.upper, self.lower - rhs.lower)
    }
}

/// `<state|sigma_axis|state>` for a unit-norm spinor.
pub fn expectation_value(state: &Spinor, axis: PauliAxis) -> Result<f64> {
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(state.sandwich(&pauli_matrix(axis), state).re)
}

/// Momentum magnitude `sqrt(E^2 - m^2)` of a propagating mode.
pub fn dispersion_momentum(energy: f64, mass: f64) -> Result<f64> {
    if energy.abs() < mass {
        return Err(Error::ForbiddenBand { energy, mass });
    }
    // (E - m)(E + m) avoids cancellation next to the band edge.
    let p2 = (energy.abs() - mass) * (energy.abs() + mass);
    Ok(p2.max(0.0).sqrt())
}

/// Which of the two plane-wave spinors `[m, E - p]` (plus) or `[m, E + p]`
/// (minus) a chirality state uses. Plus carries momentum `+p`, minus `-p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// Unit-norm chirality part of a plane-wave solution of the free Dirac
/// Hamiltonian `sigma_z p + m sigma_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralityState {
    spinor: Spinor,
    energy: f64,
    momentum: f64,
    branch: Branch,
}

impl ChiralityState {
    /// Builds `|E^plus>` or `|E^minus>` for kinetic energy `energy` and momentum
    /// label `p`. The stored momentum is the wave's signed momentum: `+p` for
    /// the plus branch, `-p` for the minus branch.
    pub fn new(energy: f64, p: f64, mass: f64, branch: Branch) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("m", format!("mass must be positive, got {mass}")));
        }
        let scale = energy * energy + mass * mass;
        let residual = energy * energy - p * p - mass * mass;
        if !(energy.is_finite() && p.is_finite()) || residual.abs() > IDENTITY_TOL * scale {
            return Err(Error::InconsistentDispersion {
                energy,
                momentum: p,
                mass,
            });
        }
        let (lower, momentum) = match branch {
            Branch::Plus => (energy - p, p),
            Branch::Minus => (energy + p, -p),
        };
        Ok(Self {
            spinor: Spinor::real(mass, lower).normalized(),
            energy,
            momentum,
            branch,
        })
    }

    /// Chirality state of the plane wave `e^{i k x}` with kinetic energy
    /// `energy`; the branch follows the sign of `k`.
    pub fn plane_wave(energy: f64, k: f64, mass: f64) -> Result<Self> {
        if k >= 0.0 {
            Self::new(energy, k, mass, Branch::Plus)
        } else {
            Self::new(energy, -k, mass, Branch::Minus)
        }
    }

    pub fn spinor(&self) -> &Spinor {
        &self.spinor
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Signed momentum of the plane wave carrying this chirality.
    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Group velocity `<sigma_z>` in units of c.
    pub fn velocity(&self) -> f64 {
        self.spinor
            .sandwich(&pauli_matrix(PauliAxis::Z), &self.spinor)
            .re
    }
}

/// Free-function form of [`ChiralityState::new`].
pub fn chirality_state(energy: f64, p: f64, mass: f64, branch: Branch) -> Result<ChiralityState> {
    ChiralityState::new(energy, p, mass, branch)
}
