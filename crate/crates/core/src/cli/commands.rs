use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::table::{Cell, Table};
use super::CliError;
use crate::error::Error;
use crate::evolution::{
    exact_element, exact_propagator, loglog_slope, postselected_element, series_coefficient,
    shorttime_weakvalue_propagator, trotter_propagator, MAX_SERIES_ORDER,
};
use crate::lattice::{
    clearance_time, run_scattering_observed, HistoryRow, LatticeConfig, LatticeState, PacketSpec,
    Potential,
};
use crate::pairprod::pair_rate_with_budget;
use crate::quadrature::DEFAULT_MAX_EVALUATIONS;
use crate::scattering::{transmission, weakvalue_transmission};
use crate::spinor::{PauliAxis, PhysParams};
use crate::weakvalue::{classify_regime, step_weak_value, weak_value, Regime, StepKinematics};

/// What a command produced: the CSV table, the JSON document and an optional
/// line for stderr.
pub struct Report {
    pub table: Table,
    pub json: String,
    pub note: Option<String>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn check(cond: bool, what: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Validation(what.to_string()))
    }
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub e_min: f64,
    pub e_max: f64,
    pub v0: f64,
    pub m: f64,
    pub n_points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            e_min: 1.01,
            e_max: 3.99,
            v0: 5.0,
            m: 1.0,
            n_points: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub e_f: f64,
    pub regime: Regime,
    pub r: f64,
    pub transmission: f64,
    pub reflection: f64,
    pub weak_value: f64,
    pub strange: bool,
    pub transmission_from_weak_value: f64,
    pub identity_residual: f64,
}

fn sweep_row(e_f: f64, v0: f64, m: f64) -> Result<SweepRow, Error> {
    let regime = classify_regime(e_f, v0, m);
    if !regime.is_transmission() {
        return Ok(SweepRow {
            e_f,
            regime,
            r: f64::NAN,
            transmission: 0.0,
            reflection: 1.0,
            weak_value: f64::NAN,
            strange: false,
            transmission_from_weak_value: f64::NAN,
            identity_residual: f64::NAN,
        });
    }
    let sol = transmission(e_f, v0, m, regime)?;
    let w = step_weak_value(e_f, v0, m, regime)?;
    let t_w = weakvalue_transmission(e_f, v0, m, regime)?;
    Ok(SweepRow {
        e_f,
        regime,
        r: sol.r,
        transmission: sol.transmission,
        reflection: sol.reflection,
        weak_value: w.real_part,
        strange: w.strange,
        transmission_from_weak_value: t_w,
        identity_residual: (sol.transmission - t_w).abs(),
    })
}

pub fn sweep_transmission(cfg: &SweepConfig) -> Result<Report, CliError> {
    PhysParams::new(cfg.m, cfg.v0)?;
    check(cfg.n_points > 0, "n_points: energy range is empty")?;
    check(
        cfg.e_min.is_finite() && cfg.e_max.is_finite() && cfg.e_min <= cfg.e_max,
        "e_min/e_max: need finite e_min <= e_max",
    )?;
    let step = if cfg.n_points > 1 {
        (cfg.e_max - cfg.e_min) / (cfg.n_points - 1) as f64
    } else {
        0.0
    };
    let rows = (0..cfg.n_points)
        .into_par_iter()
        .map(|i| sweep_row(cfg.e_min + step * i as f64, cfg.v0, cfg.m))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&[
        "E_f",
        "regime",
        "r",
        "T",
        "R",
        "weak_value",
        "strange",
        "T_from_weakvalue",
        "identity_residual",
    ]);
    for row in &rows {
        table.push(vec![
            row.e_f.into(),
            row.regime.as_str().into(),
            row.r.into(),
            row.transmission.into(),
            row.reflection.into(),
            row.weak_value.into(),
            row.strange.into(),
            row.transmission_from_weak_value.into(),
            row.identity_residual.into(),
        ]);
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a SweepConfig,
        rows: &'a [SweepRow],
    }
    Ok(Report {
        table,
        json: to_json(&Doc {
            config: cfg,
            rows: &rows,
        }),
        note: None,
    })
}

// ------------------------------------------------------------ pair rate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRateConfig {
    pub v0: Vec<f64>,
    pub m: f64,
    pub tol: f64,
    #[serde(default = "default_budget")]
    pub max_evaluations: usize,
}

fn default_budget() -> usize {
    DEFAULT_MAX_EVALUATIONS
}

impl Default for PairRateConfig {
    fn default() -> Self {
        Self {
            v0: vec![2.0, 3.0, 5.0],
            m: 1.0,
            tol: 1e-10,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRateRow {
    pub v0: f64,
    pub rate: f64,
    pub estimated_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

pub fn pair_rate(cfg: &PairRateConfig) -> Result<Report, CliError> {
    check(!cfg.v0.is_empty(), "v0: need at least one step height")?;
    check(
        cfg.tol.is_finite() && cfg.tol > 0.0,
        "tol: must be positive",
    )?;
    for &v0 in &cfg.v0 {
        PhysParams::new(cfg.m, v0)?;
    }
    let rows = cfg
        .v0
        .par_iter()
        .map(
            |&v0| match pair_rate_with_budget(v0, cfg.m, cfg.tol, cfg.max_evaluations) {
                Ok(r) => Ok(PairRateRow {
                    v0,
                    rate: r.rate,
                    estimated_error: r.estimated_error,
                    evaluations: r.evaluations,
                    converged: true,
                }),
                Err(Error::NonConvergence {
                    evaluations,
                    error_estimate,
                }) => Ok(PairRateRow {
                    v0,
                    rate: f64::NAN,
                    estimated_error: error_estimate,
                    evaluations,
                    converged: false,
                }),
                Err(e) => Err(e),
            },
        )
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&["V0", "rate", "estimated_error", "evaluations", "converged"]);
    for row in &rows {
        table.push(vec![
            row.v0.into(),
            row.rate.into(),
            row.estimated_error.into(),
            row.evaluations.into(),
            row.converged.into(),
        ]);
    }
    let failed = rows.iter().filter(|r| !r.converged).count();
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a PairRateConfig,
        rows: &'a [PairRateRow],
    }
    Ok(Report {
        table,
        json: to_json(&Doc {
            config: cfg,
            rows: &rows,
        }),
        note: (failed > 0).then(|| format!("{failed} row(s) did not converge")),
    })
}

// --------------------------------------------------- trotter convergence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterConfig {
    pub p: f64,
    pub m: f64,
    pub t: f64,
    pub steps: Vec<usize>,
}

impl Default for TrotterConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            m: 1.0,
            t: 1.0,
            steps: vec![64, 128, 256, 512],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrotterRow {
    pub steps: usize,
    pub max_entry_error: f64,
    pub ratio_to_prev: Option<f64>,
}

pub fn trotter_convergence(cfg: &TrotterConfig) -> Result<Report, CliError> {
    check(!cfg.steps.is_empty(), "steps: need at least one step count")?;
    check(cfg.steps[0] > 0, "steps: step counts must be positive")?;
    check(
        cfg.steps.windows(2).all(|w| w[0] < w[1]),
        "steps: must be strictly ascending",
    )?;
    check(
        cfg.p.is_finite() && cfg.m.is_finite() && cfg.t.is_finite(),
        "p/m/t: must be finite",
    )?;
    let exact = exact_propagator(cfg.p, cfg.m, cfg.t);
    let errors = cfg
        .steps
        .par_iter()
        .map(|&n| trotter_propagator(cfg.p, cfg.m, cfg.t, n).map(|u| u.max_entry_error(&exact)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<TrotterRow> = cfg
        .steps
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(i, (&steps, &err))| TrotterRow {
            steps,
            max_entry_error: err,
            ratio_to_prev: (i > 0).then(|| errors[i - 1] / err),
        })
        .collect();
    let counts: Vec<f64> = cfg.steps.iter().map(|&n| n as f64).collect();
    let fitted_order = if rows.len() > 1 && errors.iter().all(|&e| e > 0.0) {
        -loglog_slope(&counts, &errors)
    } else {
        f64::NAN
    };

    let mut table = Table::new(&["steps", "max_entry_error", "ratio_to_prev"]);
    for row in &rows {
        table.push(vec![
            row.steps.into(),
            row.max_entry_error.into(),
            row.ratio_to_prev.unwrap_or(f64::NAN).into(),
        ]);
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a TrotterConfig,
        rows: &'a [TrotterRow],
        fitted_order: f64,
    }
    Ok(Report {
        table,
        json: to_json(&Doc {
            config: cfg,
            rows: &rows,
            fitted_order,
        }),
        note: Some(format!("fitted order {fitted_order:.6}")),
    })
}

// --------------------------------------------------------- series check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    /// Energy level and step height fixing the pre- (incident) and
    /// post-selected (transmitted) chirality states.
    pub e_f: f64,
    pub v0: f64,
    pub m: f64,
    pub p: f64,
    pub order: usize,
    pub t: Vec<f64>,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            e_f: 2.0,
            v0: 5.0,
            m: 1.0,
            p: 1.0,
            order: 3,
            t: (0..6).map(|k| 0.01 * f64::powi(2.0, k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub f_c1: f64,
    pub f_c1_closed_form: f64,
    pub f_s1: f64,
    pub series_residual: f64,
    pub shorttime_residual: f64,
}

pub fn series_check(cfg: &SeriesConfig) -> Result<Report, CliError> {
    check(cfg.order <= MAX_SERIES_ORDER, "order: at most 3")?;
    check(!cfg.t.is_empty(), "t: need at least one time")?;
    check(
        cfg.t.iter().all(|t| t.is_finite() && *t > 0.0),
        "t: times must be positive",
    )?;
    check(cfg.p.is_finite(), "p: must be finite")?;
    let kin = StepKinematics::resolve(cfg.e_f, cfg.v0, cfg.m)?;
    let (pre, post) = (kin.incident_state(), kin.transmitted_state());
    let m = cfg.m;
    let rows = cfg
        .t
        .par_iter()
        .map(|&t| -> Result<SeriesRow, Error> {
            let c1 = series_coefficient(1, t, m)?;
            let exact = exact_element(&pre, &post, cfg.p, m, t);
            let series = postselected_element(&pre, &post, cfg.p, m, t, cfg.order)?;
            let short = shorttime_weakvalue_propagator(&pre, &post, cfg.p, m, t)?;
            Ok(SeriesRow {
                t,
                f_c1: c1.f_c,
                f_c1_closed_form: if m == 0.0 { t } else { (m * t).sin() / m },
                f_s1: c1.f_s,
                series_residual: (series - exact).norm(),
                shorttime_residual: (short - exact).norm(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let slope = |ys: Vec<f64>| {
        if ys.len() > 1 && ys.iter().all(|&y| y > 0.0) {
            loglog_slope(&ts, &ys)
        } else {
            f64::NAN
        }
    };
    let series_slope = slope(rows.iter().map(|r| r.series_residual).collect());
    let shorttime_slope = slope(rows.iter().map(|r| r.shorttime_residual).collect());

    let mut table = Table::new(&[
        "t",
        "f_c1",
        "f_c1_closed_form",
        "f_s1",
        "series_residual",
        "shorttime_residual",
    ]);
    for row in &rows {
        table.push(vec![
            row.t.into(),
            row.f_c1.into(),
            row.f_c1_closed_form.into(),
            row.f_s1.into(),
            row.series_residual.into(),
            row.shorttime_residual.into(),
        ]);
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a SeriesConfig,
        regime: Regime,
        rows: &'a [SeriesRow],
        series_slope: f64,
        shorttime_slope: f64,
    }
    Ok(Report {
        table,
        json: to_json(&Doc {
            config: cfg,
            regime: kin.regime,
            rows: &rows,
            series_slope,
            shorttime_slope,
        }),
        note: Some(format!(
            "series residual slope {series_slope:.6}, short-time residual slope {shorttime_slope:.6}"
        )),
    })
}

// ----------------------------------------------------------- weak value

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakValueConfig {
    pub e_f: f64,
    pub v0: f64,
    pub m: f64,
    /// Expected regime; the run fails if the parameters fall elsewhere.
    #[serde(default)]
    pub regime: Option<Regime>,
}

impl Default for WeakValueConfig {
    fn default() -> Self {
        Self {
            e_f: 2.0,
            v0: 5.0,
            m: 1.0,
            regime: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakValueRow {
    pub e_f: f64,
    pub e_i: f64,
    pub p_i: f64,
    pub p_f: f64,
    pub regime: Regime,
    pub sigma_x_re: f64,
    pub sigma_x_im: f64,
    pub sigma_y_re: f64,
    pub sigma_y_im: f64,
    pub sigma_z_re: f64,
    pub sigma_z_im: f64,
    pub strange: bool,
    pub overlap_re: f64,
    pub overlap_im: f64,
    pub transmission: f64,
}

pub fn weak_value_report(cfg: &WeakValueConfig) -> Result<Report, CliError> {
    PhysParams::new(cfg.m, cfg.v0)?;
    let kin = match cfg.regime {
        Some(regime) => StepKinematics::new(cfg.e_f, cfg.v0, cfg.m, regime)?,
        None => StepKinematics::resolve(cfg.e_f, cfg.v0, cfg.m)?,
    };
    let (pre, post) = (kin.incident_state(), kin.transmitted_state());
    let wx = weak_value(&pre, &post, PauliAxis::X)?;
    let wy = weak_value(&pre, &post, PauliAxis::Y)?;
    let wz = weak_value(&pre, &post, PauliAxis::Z)?;
    let row = WeakValueRow {
        e_f: kin.e_f,
        e_i: kin.e_i,
        p_i: kin.p_i,
        p_f: kin.p_f,
        regime: kin.regime,
        sigma_x_re: wx.real_part,
        sigma_x_im: wx.imag_part,
        sigma_y_re: wy.real_part,
        sigma_y_im: wy.imag_part,
        sigma_z_re: wz.real_part,
        sigma_z_im: wz.imag_part,
        strange: wz.strange,
        overlap_re: wz.overlap.re,
        overlap_im: wz.overlap.im,
        transmission: transmission(kin.e_f, kin.v0, kin.mass, kin.regime)?.transmission,
    };
    let mut table = Table::new(&[
        "E_f",
        "E_i",
        "p_i",
        "p_f",
        "regime",
        "sigma_x_re",
        "sigma_x_im",
        "sigma_y_re",
        "sigma_y_im",
        "sigma_z_re",
        "sigma_z_im",
        "strange",
        "overlap_re",
        "overlap_im",
        "T",
    ]);
    table.push(vec![
        row.e_f.into(),
        row.e_i.into(),
        row.p_i.into(),
        row.p_f.into(),
        row.regime.as_str().into(),
        row.sigma_x_re.into(),
        row.sigma_x_im.into(),
        row.sigma_y_re.into(),
        row.sigma_y_im.into(),
        row.sigma_z_re.into(),
        row.sigma_z_im.into(),
        row.strange.into(),
        row.overlap_re.into(),
        row.overlap_im.into(),
        row.transmission.into(),
    ]);
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a WeakValueConfig,
        result: &'a WeakValueRow,
    }
    Ok(Report {
        table,
        json: to_json(&Doc {
            config: cfg,
            result: &row,
        }),
        note: None,
    })
}

// ------------------------------------------------------ lattice scatter

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub lattice: LatticeConfig,
    pub packet: PacketSpec,
    /// Run length; defaults to the estimated clearance time.
    #[serde(default)]
    pub t_max: Option<f64>,
}

pub const SUPERCRITICAL_CONFIG: &str = include_str!("../../configs/supercritical_Ef2_V05.json");
pub const FREE_CONFIG: &str = include_str!("../../configs/free.json");

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotOptions {
    pub every: Option<usize>,
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterSummary {
    pub config: ScatterConfig,
    pub t_max: f64,
    pub t_num: f64,
    pub r_num: f64,
    pub transmitted_flux: f64,
    pub regime: Option<Regime>,
    pub t_analytic: f64,
    pub t_deviation: f64,
    pub interaction_residual: f64,
    pub final_norm: f64,
    pub absorbed_left: f64,
    pub absorbed_right: f64,
    pub steps: usize,
    pub time: f64,
    pub history: Vec<HistoryRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

/// Sharp-step transmission for the packet's carrier, `1` without a potential.
fn analytic_transmission(cfg: &ScatterConfig) -> Result<(Option<Regime>, f64), Error> {
    let v0 = match cfg.lattice.potential {
        Potential::None => return Ok((None, 1.0)),
        p => p.height(),
    };
    let e_f = cfg.packet.kinetic_energy(cfg.lattice.m) + v0;
    let regime = classify_regime(e_f, v0, cfg.lattice.m);
    let t = if regime.is_transmission() {
        transmission(e_f, v0, cfg.lattice.m, regime)?.transmission
    } else {
        0.0
    };
    Ok((Some(regime), t))
}

pub fn lattice_scatter(
    cfg: &ScatterConfig,
    snapshots: &SnapshotOptions,
    timings: bool,
) -> Result<Report, CliError> {
    cfg.lattice.validate()?;
    let t_max = match cfg.t_max {
        Some(t) => t,
        None => clearance_time(&cfg.lattice, &cfg.packet)?,
    };
    let every = match (snapshots.every, &snapshots.dir) {
        (Some(0), _) => {
            return Err(CliError::Validation(
                "--snapshot-every: must be positive".into(),
            ))
        }
        (Some(n), Some(dir)) => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            Some((n, dir.clone()))
        }
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::Validation(
                "--snapshot-every and --snapshot-dir must be given together".into(),
            ))
        }
        (None, None) => None,
    };

    let started = Instant::now();
    let mut snapshot_error = None;
    let observe = |state: &LatticeState| {
        let Some((n, dir)) = &every else { return };
        if !state.steps.is_multiple_of(*n) || snapshot_error.is_some() {
            return;
        }
        let path = dir.join(format!("frame_{:08}.csv", state.steps));
        let written = fs::File::create(&path)
            .and_then(|f| state.write_snapshot_csv(std::io::BufWriter::new(f)));
        if let Err(e) = written {
            snapshot_error = Some(CliError::io(&path, e));
        }
    };
    let out = run_scattering_observed(&cfg.lattice, &cfg.packet, t_max, observe)?;
    if let Some(e) = snapshot_error {
        return Err(e);
    }
    let wall = started.elapsed().as_secs_f64();
    let (regime, t_analytic) = analytic_transmission(cfg)?;

    let summary = ScatterSummary {
        config: cfg.clone(),
        t_max,
        t_num: out.t_num,
        r_num: out.r_num,
        transmitted_flux: out.transmitted_flux,
        regime,
        t_analytic,
        t_deviation: out.t_num - t_analytic,
        interaction_residual: out.interaction_residual,
        final_norm: out.final_norm,
        absorbed_left: out.absorbed_left,
        absorbed_right: out.absorbed_right,
        steps: out.steps,
        time: out.time,
        history: out.history,
        wall_seconds: timings.then_some(wall),
    };
    let mut header = vec![
        "T_num",
        "R_num",
        "transmitted_flux",
        "T_analytic",
        "T_deviation",
        "interaction_residual",
        "final_norm",
        "absorbed_left",
        "absorbed_right",
        "steps",
        "time",
    ];
    let mut row: Vec<Cell> = vec![
        summary.t_num.into(),
        summary.r_num.into(),
        summary.transmitted_flux.into(),
        summary.t_analytic.into(),
        summary.t_deviation.into(),
        summary.interaction_residual.into(),
        summary.final_norm.into(),
        summary.absorbed_left.into(),
        summary.absorbed_right.into(),
        summary.steps.into(),
        summary.time.into(),
    ];
    if let Some(w) = summary.wall_seconds {
        header.push("wall_seconds");
        row.push(w.into());
    }
    let mut table = Table::new(&header);
    table.push(row);
    Ok(Report {
        table,
        json: to_json(&summary),
        note: None,
    })
}
