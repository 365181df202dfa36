use num_complex::Complex64;
use proptest::prelude::*;

use diracwv::evolution::{exact_propagator, trotter_propagator};
use diracwv::lattice::{Boundary, LatticeConfig, LatticeState, Potential};
use diracwv::pairprod::rate_integrand;
use diracwv::scattering::{boundary_match, transmission};
use diracwv::spinor::{chirality_state, Branch};
use diracwv::weakvalue::{step_weak_value, weak_value, Regime};
use diracwv::{PauliAxis, Spinor};

/// `(E_f, V0, m)` with `V0 - m > E_f > m`.
fn supercritical() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..3.0, 1e-3f64..4.0, 1e-3f64..4.0).prop_map(|(m, a, b)| {
        let e_f = m * (1.0 + a);
        (e_f, e_f + m * (1.0 + b), m)
    })
}

/// `(E_f, V0, m)` with `E_f > m` and `E_f - V0 > m`.
fn same_continuum() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..3.0, 1e-3f64..4.0, 1e-3f64..4.0).prop_map(|(m, a, b)| {
        let e_f = m * (1.0 + a);
        (e_f, e_f - m * (1.0 + b), m)
    })
}

fn momentum(e: f64, m: f64) -> f64 {
    (e * e - m * m).sqrt()
}

proptest! {
    #[test]
    fn supercritical_weak_values_are_strange((e_f, v0, m) in supercritical()) {
        let w = step_weak_value(e_f, v0, m, Regime::SupercriticalTransmission).unwrap();
        prop_assert!(w.real_part < -1.0);
        prop_assert!(w.strange);
        prop_assert!(w.imag_part.abs() < 1e-9);
    }

    #[test]
    fn same_continuum_weak_values_are_bounded((e_f, v0, m) in same_continuum()) {
        let w = step_weak_value(e_f, v0, m, Regime::SameContinuumTransmission).unwrap();
        prop_assert!(w.real_part.abs() < 1.0);
        prop_assert!(!w.strange);
    }

    #[test]
    fn transmission_times_weak_value_is_harmonic_velocity((e_f, v0, m) in supercritical()) {
        let regime = Regime::SupercriticalTransmission;
        let t = transmission(e_f, v0, m, regime).unwrap().transmission;
        let w = step_weak_value(e_f, v0, m, regime).unwrap().real_part;
        let v_i = momentum(e_f - v0, m) / (v0 - e_f);
        let v_f = momentum(e_f, m) / e_f;
        let harmonic = 2.0 * v_i * v_f / (v_i + v_f);
        prop_assert!((t * w.abs() - harmonic).abs() < 1e-12 * (1.0 + harmonic));
    }

    #[test]
    fn scattering_is_unitary((e_f, v0, m) in prop_oneof![supercritical(), same_continuum()]) {
        let regime = if e_f - v0 < 0.0 {
            Regime::SupercriticalTransmission
        } else {
            Regime::SameContinuumTransmission
        };
        let a = transmission(e_f, v0, m, regime).unwrap();
        let b = boundary_match(e_f, v0, m, regime).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.transmission));
        prop_assert!((a.transmission + a.reflection - 1.0).abs() < 1e-12);
        prop_assert!((b.transmission + b.reflection - 1.0).abs() < 1e-12);
        prop_assert!((a.transmission - b.transmission).abs() < 1e-12);
    }

    #[test]
    fn rate_integrand_is_symmetric(m in 0.1f64..2.0, excess in 0.01f64..6.0, u in 0.0f64..1.0) {
        let v0 = 2.0 * m + excess;
        let e = m + u * (v0 - 2.0 * m);
        prop_assert!((rate_integrand(e, v0, m) - rate_integrand(v0 - e, v0, m)).abs() < 1e-12);
    }

    #[test]
    fn chirality_states_are_hamiltonian_eigenvectors(m in 0.05f64..3.0, p in -5.0f64..5.0, negative in any::<bool>()) {
        let e = p.hypot(m) * if negative { -1.0 } else { 1.0 };
        let (branch, k) = if p >= 0.0 { (Branch::Plus, p) } else { (Branch::Minus, -p) };
        let state = chirality_state(e, k, m, branch).unwrap();
        let s = state.spinor();
        // H = σ_z k + m σ_x acting on [u, l]
        let hu = s.upper * p + s.lower * m;
        let hl = s.upper * m - s.lower * p;
        prop_assert!((hu - s.upper * e).norm() < 1e-12 * (1.0 + e.abs()));
        prop_assert!((hl - s.lower * e).norm() < 1e-12 * (1.0 + e.abs()));
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn self_post_selection_gives_expectation_values(re_u in -1.0f64..1.0, im_u in -1.0f64..1.0, re_l in -1.0f64..1.0, im_l in -1.0f64..1.0) {
        let s = Spinor::new(Complex64::new(re_u, im_u), Complex64::new(re_l, im_l));
        prop_assume!(s.norm() > 0.1);
        let s = s.normalized();
        let wz = diracwv::weakvalue::weak_value_spinors(&s, &s, PauliAxis::Z).unwrap();
        let expected = s.upper.norm_sqr() - s.lower.norm_sqr();
        prop_assert!((wz.value - Complex64::new(expected, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn trotter_products_are_unitary(p in -3.0f64..3.0, m in 0.0f64..3.0, steps in 1usize..2000) {
        let u = trotter_propagator(p, m, 1.0, steps).unwrap();
        prop_assert!(u.is_unitary(1e-12));
        prop_assert!(exact_propagator(p, m, 1.0).is_unitary(1e-13));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lattice_walk_conserves_norm(m in 0.0f64..2.0, v0 in -6.0f64..6.0, seed in 0u64..1000) {
        let cfg = LatticeConfig::new(256, 0.1, m, Potential::Step { v0, x0: 0.0 }, Boundary::Periodic).unwrap();
        let mut state = LatticeState::from_fn(&cfg, |x| {
            let phase = (seed as f64 + 1.0) * x;
            Spinor::new(Complex64::from_polar((-x * x / 4.0).exp(), phase), Complex64::new(0.3 * (-x * x).exp(), 0.0))
        })
        .unwrap();
        let before = state.norm();
        state.advance(500);
        prop_assert!((state.norm() - before).abs() < 1e-12 * before);
    }
}

#[test]
fn orthogonal_post_selection_is_rejected() {
    let up = Spinor::real(1.0, 0.0);
    let down = Spinor::real(0.0, 1.0);
    assert!(diracwv::weakvalue::weak_value_spinors(&up, &down, PauliAxis::X).is_err());
    let pre = chirality_state(2.0, 3f64.sqrt(), 1.0, Branch::Plus).unwrap();
    assert!(weak_value(&pre, &pre, PauliAxis::Z).is_ok());
}
