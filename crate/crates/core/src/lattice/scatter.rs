use serde::{Deserialize, Serialize};

use super::{make_packet, measure_flux, LatticeConfig, LatticeState, PacketSpec, Potential};
use crate::error::{invalid, Error, Result};
use crate::weakvalue::{classify_regime, StepKinematics};

/// Largest norm allowed near the potential when a run is declared finished.
pub const INTERACTION_RESIDUAL_LIMIT: f64 = 1e-3;

const HISTORY_ROWS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub time: f64,
    pub centroid: f64,
    pub norm: f64,
    /// `Ψ† σ_z Ψ` at the transmitted-side reference plane.
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterOutcome {
    /// Norm that ended up left of the potential, including absorbed norm.
    pub t_num: f64,
    /// Norm that ended up right of the potential, including absorbed norm.
    pub r_num: f64,
    /// Norm that crossed the transmitted-side plane towards `-x`, summed over
    /// every step. Equals `t_num` when the packet starts right of the plane.
    pub transmitted_flux: f64,
    pub interaction_residual: f64,
    pub absorbed_left: f64,
    pub absorbed_right: f64,
    pub final_norm: f64,
    pub steps: usize,
    pub time: f64,
    pub history: Vec<HistoryRow>,
}

/// Left and right edges of the region where the potential varies. Free
/// configurations use the origin.
pub fn reference_planes(potential: &Potential) -> (f64, f64) {
    match *potential {
        Potential::None => (0.0, 0.0),
        Potential::Step { x0, .. } => (x0, x0),
        Potential::Ramp { x_left, width, .. } => (x_left, x_left + width),
    }
}

/// Group speeds of the incoming packet and of its transmitted part (the
/// latter is `None` when no transmission channel exists).
fn carrier_speeds(config: &LatticeConfig, spec: &PacketSpec) -> (f64, Option<f64>) {
    let m = config.m;
    let e_kin = spec.kinetic_energy(m);
    let v_in = (spec.p0 / e_kin).abs();
    let v0 = config.potential.height();
    if v0 == 0.0 {
        return (v_in, Some(v_in));
    }
    let e_f = e_kin + v0;
    if m > 0.0 && classify_regime(e_f, v0, m).is_transmission() {
        let p_f = crate::spinor::dispersion_momentum(e_f, m).unwrap_or(0.0);
        (v_in, Some(p_f / e_f.abs()))
    } else {
        (v_in, None)
    }
}

/// Time for the centre of the incoming packet to reach `x_right`.
fn arrival_time(spec: &PacketSpec, x_right: f64, v_in: f64) -> f64 {
    (spec.x0 - x_right) / v_in
}

/// Time for a packet launched at `spec.x0` towards `-x` to cross the
/// potential and leave both outgoing parts at least six widths away.
pub fn clearance_time(config: &LatticeConfig, spec: &PacketSpec) -> Result<f64> {
    let (x_left, x_right) = reference_planes(&config.potential);
    if spec.x0 <= x_right {
        return Err(invalid(
            "packet.x0",
            "packet must start right of the potential",
        ));
    }
    let (v_in, v_out) = carrier_speeds(config, spec);
    if v_in.is_nan() || v_in <= 0.0 || spec.p0 * spec.kinetic_energy(config.m) >= 0.0 {
        return Err(invalid("packet.p0", "carrier must move towards -x"));
    }
    let sigma = spec.sigma;
    let approach = arrival_time(spec, x_right, v_in) + 6.0 * sigma / v_in;
    let reflected = 8.0 * sigma / v_in;
    let transmitted = v_out.map_or(0.0, |v| {
        let sigma_out = sigma * (v / v_in).max(1.0);
        (x_right - x_left + 8.0 * sigma_out) / v
    });
    Ok(1.2 * (approach + reflected.max(transmitted)))
}

/// Sends the packet described by `spec` at the potential and partitions the
/// final norm into transmitted (`x` left of the potential) and reflected
/// parts.
pub fn run_scattering(
    config: &LatticeConfig,
    spec: &PacketSpec,
    t_max: f64,
) -> Result<ScatterOutcome> {
    run_scattering_observed(config, spec, t_max, |_| {})
}

/// [`run_scattering`] with `observe` called on the initial state and after
/// every step.
pub fn run_scattering_observed(
    config: &LatticeConfig,
    spec: &PacketSpec,
    t_max: f64,
    mut observe: impl FnMut(&LatticeState),
) -> Result<ScatterOutcome> {
    let mut state = make_packet(spec, config)?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(invalid("t_max", format!("must be positive, got {t_max}")));
    }
    let (x_left, x_right) = reference_planes(&config.potential);
    if spec.x0 - 10.0 * spec.sigma < x_right {
        return Err(invalid(
            "packet.x0",
            "packet must start at least 10 sigma right of the potential",
        ));
    }
    if spec.x0 + 10.0 * spec.sigma > config.x_max() || x_left - config.x_min() < 10.0 * spec.sigma {
        return Err(Error::PacketOutOfGrid(
            "need 10 sigma between the packet, the potential and the grid edges".into(),
        ));
    }
    let (v_in, _) = carrier_speeds(config, spec);
    let arrival = arrival_time(spec, x_right, v_in);
    if t_max < arrival {
        return Err(Error::NotArrived { t_max, arrival });
    }
    let split = config
        .site_of(x_left)
        .map(|j| if config.x(j) < x_left { j + 1 } else { j })
        .filter(|&j| j > 0 && j < config.n_sites)
        .ok_or(Error::PlaneOutOfGrid(x_left))?;
    let link = split - 1;
    let plane = config.x(split);

    let steps = (t_max / config.eps).ceil() as usize;
    let stride = (steps / HISTORY_ROWS).max(1);
    let mut history = Vec::with_capacity(steps / stride + 2);
    let record = |st: &LatticeState, history: &mut Vec<HistoryRow>| {
        history.push(HistoryRow {
            time: st.time,
            centroid: st.centroid(),
            norm: st.norm(),
            flux: measure_flux(st, plane).unwrap_or(0.0),
        });
    };
    record(&state, &mut history);
    observe(&state);
    let mut crossed_left = 0.0;
    for n in 1..=steps {
        crossed_left -= state.step_tracking(Some(link));
        observe(&state);
        if n % stride == 0 || n == steps {
            record(&state, &mut history);
        }
    }

    let buffer = 2.0 * spec.sigma;
    let residual = state.norm_between(x_left - buffer, x_right + buffer);
    if residual > INTERACTION_RESIDUAL_LIMIT {
        return Err(Error::StillInteracting { residual });
    }
    Ok(ScatterOutcome {
        t_num: state.norm_between(f64::NEG_INFINITY, plane) + state.absorbed_left,
        r_num: state.norm_between(x_right, f64::INFINITY) + state.absorbed_right,
        transmitted_flux: crossed_left,
        interaction_residual: residual,
        absorbed_left: state.absorbed_left,
        absorbed_right: state.absorbed_right,
        final_norm: state.norm(),
        steps,
        time: state.time,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickCheck {
    pub dp_measured: f64,
    /// `-V0/|w|`: the impulse of the ramp force `-V0/l` acting for the time
    /// `l/|w|` a particle moving at the velocity weak value `w` spends on it.
    pub dp_predicted: f64,
    pub p_before: f64,
    pub p_after: f64,
    pub transmitted_norm: f64,
    pub weak_value: f64,
}

/// Momentum change of the transmitted part of a packet crossing a linear
/// ramp, measured by Fourier analysis, against the weak-value impulse.
pub fn ramp_momentum_kick_check(config: &LatticeConfig, spec: &PacketSpec) -> Result<KickCheck> {
    let Potential::Ramp { v0, x_left, .. } = config.potential else {
        return Err(invalid(
            "potential",
            "momentum-kick check needs a ramp profile",
        ));
    };
    let t_max = clearance_time(config, spec)?;
    let mut state = make_packet(spec, config)?;
    let p_before = state.mean_momentum();
    state.advance((t_max / config.eps).ceil() as usize);

    let transmitted_norm = state.norm_between(f64::NEG_INFINITY, x_left) + state.absorbed_left;
    if transmitted_norm < 1e-6 {
        return Err(Error::NoTraversal {
            transmitted: transmitted_norm,
        });
    }
    let p_after = state.mean_momentum_between(f64::NEG_INFINITY, x_left);

    let (dp_predicted, weak_value) = if v0 == 0.0 {
        (0.0, spec.p0 / spec.kinetic_energy(config.m))
    } else {
        let e_f = spec.kinetic_energy(config.m) + v0;
        let kin = StepKinematics::resolve(e_f, v0, config.m)?;
        let w = kin.velocity_weak_value();
        (-v0 / w.abs(), w)
    };
    Ok(KickCheck {
        dp_measured: p_after - p_before,
        dp_predicted,
        p_before,
        p_after,
        transmitted_norm,
        weak_value,
    })
}
