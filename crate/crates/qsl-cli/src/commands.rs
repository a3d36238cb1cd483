//! One function per subcommand. Each returns the CSV document, a one-line
//! summary, and the process exit code, leaving I/O to the caller.

use std::f64::consts::FRAC_PI_2;

use qsl_core::bounds::{
    kraus_bound, ml_unitary, mt_open_bound, mt_unitary, non_hermitian_bound,
    passage_time_of_rhs, passage_time_with_scan, BoundReport, PassageOutcome, TrajectorySource,
};
use qsl_core::linalg::{expm, C64, CMatrix};
use qsl_core::metrology::{resolution_ratio, scaling_verdict};
use qsl_core::models::{
    gain_loss_rhs, isotropic_tau_b, isotropic_tau_exact, LoadedModel, ModelKind,
};
use qsl_core::quantum::{relative_purity, DensityMatrix};
use qsl_core::{Error, Result};

use crate::csv_out::{CsvDoc, Field};

/// Dense evolution guard for the local-dephasing register: the
/// superoperator has dimension 4^n, so cap the exponential route.
const MAX_DENSE_EVOLVE_DIM: usize = 32;
/// Bound evaluation touches only d x d matrices; a larger register is fine.
const MAX_DENSE_BOUND_DIM: usize = 256;

pub struct CmdResult {
    pub doc: CsvDoc,
    pub summary: String,
    pub exit: i32,
}

/// Target angle from either `--theta` or `--target-f` (f = cos theta);
/// defaults to the orthogonalization angle pi/2.
pub fn resolve_theta(theta: Option<f64>, target_f: Option<f64>) -> Result<f64> {
    match (theta, target_f) {
        (Some(_), Some(_)) => Err(Error::ParameterOutOfRange {
            what: "--theta and --target-f are mutually exclusive".into(),
        }),
        (Some(t), None) => {
            if !t.is_finite() || t <= 0.0 || t > FRAC_PI_2 {
                return Err(Error::ParameterOutOfRange {
                    what: format!("theta = {t} outside (0, pi/2]"),
                });
            }
            Ok(t)
        }
        (None, Some(f)) => {
            if !f.is_finite() || !(0.0..1.0).contains(&f) {
                return Err(Error::ParameterOutOfRange {
                    what: format!("target relative purity {f} outside [0, 1)"),
                });
            }
            Ok(f.acos())
        }
        (None, None) => Ok(FRAC_PI_2),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn require_positive(value: f64, what: &str) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            what: format!("{what} = {value} must be positive"),
        });
    }
    Ok(())
}

fn bound_row(report: &BoundReport) -> Vec<Field> {
    vec![
        Field::Text(report.bound_name),
        Field::Num(report.theta),
        Field::Num(report.tau_lower),
        Field::Num(report.speed_v.unwrap_or(f64::NAN)),
        Field::Num(report.trace_purity),
    ]
}

pub fn cmd_bound(model: &LoadedModel, theta: f64, t_max: f64, grid: usize) -> Result<CmdResult> {
    require_positive(t_max, "t-max")?;
    let rho0 = &model.initial;
    if model.kind == ModelKind::DephasingLocal && rho0.dim() > MAX_DENSE_BOUND_DIM {
        return Err(Error::Model(format!(
            "register of dimension {} exceeds the dense-bound cap {MAX_DENSE_BOUND_DIM}",
            rho0.dim()
        )));
    }
    let mut doc = CsvDoc::new(&["bound", "theta", "tau_lower", "speed_v", "trace_purity"]);
    if let Some(lind) = &model.generator {
        doc.push(bound_row(&mt_open_bound(lind, rho0, theta)?));
    }
    if let Some(channel) = &model.channel {
        let grid_times = linspace(0.0, t_max, grid);
        doc.push(bound_row(&kraus_bound(channel, rho0, theta, &grid_times)?));
    }
    if let Some((h, g)) = &model.gain_loss {
        doc.push(bound_row(&non_hermitian_bound(h, g, rho0, theta)?));
    }
    if model.kind == ModelKind::Unitary {
        let h = model
            .generator
            .as_ref()
            .expect("unitary models always carry a generator")
            .hamiltonian();
        doc.push(bound_row(&mt_unitary(h, rho0)?));
        // The mean-energy bound is defined for pure states only; skip the
        // row rather than fail the command on a mixed initial state.
        if let Ok(report) = ml_unitary(h, rho0) {
            doc.push(bound_row(&report));
        }
    }
    let summary = format!(
        "bound: {} row(s) for kind '{}' at theta = {:.6}",
        doc.row_count(),
        model.kind.name(),
        theta
    );
    Ok(CmdResult { doc, summary, exit: 0 })
}

pub fn cmd_evolve(model: &LoadedModel, t_max: f64, dt: f64, grid: usize) -> Result<CmdResult> {
    require_positive(t_max, "t-max")?;
    require_positive(dt, "dt")?;
    let rho0 = &model.initial;
    let mut doc = CsvDoc::new(&["t", "relative_purity", "purity"]);

    if let Some((h, g)) = &model.gain_loss {
        let samples = qsl_core::models::gain_loss_evolve(h, g, rho0, t_max, dt)?;
        let stride = (samples.len() / grid.max(2)).max(1);
        for (k, sample) in samples.iter().enumerate() {
            if k % stride == 0 || k + 1 == samples.len() {
                doc.push(vec![
                    Field::Num(sample.t),
                    Field::Num(sample.f),
                    Field::Num(sample.rho.purity()),
                ]);
            }
        }
    } else {
        let lind = model.generator.as_ref().ok_or_else(|| {
            Error::Model(format!(
                "kind '{}' has no generator to evolve",
                model.kind.name()
            ))
        })?;
        let d = rho0.dim();
        if model.kind == ModelKind::DephasingLocal && d > MAX_DENSE_EVOLVE_DIM {
            return Err(Error::Model(format!(
                "register of dimension {d} exceeds the dense-evolution cap {MAX_DENSE_EVOLVE_DIM}"
            )));
        }
        // One exponential of the superoperator per run: step the vectorized
        // state with expm(M dt) instead of re-exponentiating at every t.
        let steps = grid.max(2);
        let delta = t_max / (steps - 1) as f64;
        let m = lind.liouvillian_matrix()?;
        let u = expm(&m.scale(C64::new(delta, 0.0)))?;
        let mut v = CMatrix::from_fn(d * d, 1, |i, _| rho0.matrix().get(i / d, i % d))?;
        for k in 0..steps {
            let rho_k = CMatrix::from_fn(d, d, |i, j| v.get(i * d + j, 0))?;
            let state = DensityMatrix::new(rho_k)?;
            doc.push(vec![
                Field::Num(k as f64 * delta),
                Field::Num(relative_purity(rho0, &state)?),
                Field::Num(state.purity()),
            ]);
            if k + 1 < steps {
                v = &u * &v;
            }
        }
    }
    let summary = format!(
        "evolve: {} row(s) over [0, {t_max}] for kind '{}'",
        doc.row_count(),
        model.kind.name()
    );
    Ok(CmdResult { doc, summary, exit: 0 })
}

pub fn cmd_passage(
    model: &LoadedModel,
    theta: f64,
    t_max: f64,
    dt: f64,
    grid: usize,
) -> Result<CmdResult> {
    require_positive(t_max, "t-max")?;
    require_positive(dt, "dt")?;
    let rho0 = &model.initial;
    let result = if let Some((h, g)) = &model.gain_loss {
        let rhs = gain_loss_rhs(h, g);
        passage_time_of_rhs(&rhs, rho0, theta, t_max, dt, grid)
    } else {
        let lind = model.generator.as_ref().ok_or_else(|| {
            Error::Model(format!(
                "kind '{}' has no generator to scan",
                model.kind.name()
            ))
        })?;
        passage_time_with_scan(&TrajectorySource::Lindblad(lind), rho0, theta, t_max, grid)
    };

    let mut doc = CsvDoc::new(&["theta", "target_f", "status", "tau", "f_infinity"]);
    let (summary, exit) = match result {
        Ok(passage) => match passage.outcome {
            PassageOutcome::Reached { tau } => {
                doc.push(vec![
                    Field::Num(passage.theta),
                    Field::Num(passage.target_f),
                    Field::Text("reached"),
                    Field::Num(tau),
                    Field::Num(f64::NAN),
                ]);
                (
                    format!(
                        "passage: relative purity {:.6} reached at tau = {:.9}",
                        passage.target_f, tau
                    ),
                    0,
                )
            }
            PassageOutcome::NotReached { f_infinity } => {
                doc.push(vec![
                    Field::Num(passage.theta),
                    Field::Num(passage.target_f),
                    Field::Text("not-reached"),
                    Field::Num(f64::NAN),
                    Field::Num(f_infinity),
                ]);
                (
                    format!(
                        "passage: trajectory settles at f = {f_infinity:.9} above the target {:.6}",
                        passage.target_f
                    ),
                    4,
                )
            }
        },
        Err(Error::TargetNotReached { target, detail, .. }) => {
            doc.push(vec![
                Field::Num(theta),
                Field::Num(target),
                Field::Text("not-reached"),
                Field::Num(f64::NAN),
                Field::Num(f64::NAN),
            ]);
            (format!("passage: target {target:.6} not reached: {detail}"), 4)
        }
        Err(e) => return Err(e),
    };
    Ok(CmdResult { doc, summary, exit })
}

pub fn cmd_metrology(gamma: f64, n_max: usize) -> Result<CmdResult> {
    if n_max == 0 {
        return Err(Error::ParameterOutOfRange {
            what: "n must be at least 1".into(),
        });
    }
    let mut doc = CsvDoc::new(&[
        "n",
        "t_product",
        "t_ghz",
        "fisher_product",
        "fisher_ghz",
        "delta_phi_product",
        "delta_phi_ghz",
        "ratio",
    ]);
    // Equal total interrogation time: the entangled protocol's shorter
    // optimum is repeated proportionally more often.
    let mut ratios = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let report = resolution_ratio(gamma, n, 100, 100 * n as u64)?;
        ratios.push(report.ratio);
        doc.push(vec![
            Field::Int(n as u64),
            Field::Num(report.t_product),
            Field::Num(report.t_ghz),
            Field::Num(report.fisher_product),
            Field::Num(report.fisher_ghz),
            Field::Num(report.delta_phi_product),
            Field::Num(report.delta_phi_ghz),
            Field::Num(report.ratio),
        ]);
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    let mut summary = format!("metrology: N = 1..{n_max}, resolution ratio in [{lo:.6}, {hi:.6}]");
    if n_max >= 3 {
        let ns: Vec<usize> = (1..=n_max).collect();
        let scaling = scaling_verdict(gamma, &ns)?;
        summary.push_str(&format!(
            ", beta_product = {:.3}, beta_ghz = {:.3}",
            scaling.beta_product, scaling.beta_ghz
        ));
        if scaling.noiseless_regime {
            summary.push_str(" (noiseless regime: fixed unit interrogation time)");
        }
    }
    Ok(CmdResult { doc, summary, exit: 0 })
}

pub fn cmd_reproduce_figure(model: &LoadedModel, grid: usize) -> Result<CmdResult> {
    let (gamma, bloch) = model.isotropic.as_ref().ok_or_else(|| {
        Error::Model(format!(
            "kind '{}' is not the isotropic model this sweep is defined for",
            model.kind.name()
        ))
    })?;
    let r2 = bloch.norm_sq();
    // The target f = cos(theta) is reachable only above the asymptote
    // 1/(1 + r^2), so the angle window closes as the state loses purity.
    let theta_lo = 1e-3;
    let theta_hi = (1.0 / (1.0 + r2)).acos() - 1e-6;
    if r2 == 0.0 || theta_hi <= theta_lo {
        return Err(Error::ParameterOutOfRange {
            what: format!("no reachable target angles for |r|^2 = {r2}"),
        });
    }
    let mut doc = CsvDoc::new(&["theta", "tau_exact", "tau_B", "ratio"]);
    let mut first = f64::NAN;
    let mut last = f64::NAN;
    for theta in linspace(theta_lo, theta_hi, grid) {
        let tau = match isotropic_tau_exact(*gamma, theta, bloch)? {
            PassageOutcome::Reached { tau } => tau,
            PassageOutcome::NotReached { .. } => {
                return Err(Error::Numerical(format!(
                    "theta = {theta} unexpectedly unreachable inside the window"
                )))
            }
        };
        let bound = isotropic_tau_b(*gamma, theta, bloch)?;
        let ratio = tau / bound;
        if ratio < 1.0 {
            return Err(Error::Numerical(format!(
                "exact passage {tau} undercuts the bound {bound} at theta = {theta}"
            )));
        }
        if first.is_nan() {
            first = ratio;
        }
        last = ratio;
        doc.push(vec![
            Field::Num(theta),
            Field::Num(tau),
            Field::Num(bound),
            Field::Num(ratio),
        ]);
    }
    let mut summary = format!(
        "figure: {} angles in [{theta_lo:.1e}, {theta_hi:.6}], ratio from {first:.4} to {last:.1}",
        doc.row_count()
    );
    if last > 5.0 * first {
        summary.push_str(" (diverging toward the reachability endpoint)");
    }
    Ok(CmdResult { doc, summary, exit: 0 })
}

pub fn cmd_certify(model: &LoadedModel, t_max: f64) -> Result<CmdResult> {
    if !t_max.is_finite() || t_max <= 1e-3 {
        return Err(Error::ParameterOutOfRange {
            what: format!("t-max = {t_max} must exceed the smallest probe time 1e-3"),
        });
    }
    let channel = model.channel.as_ref().ok_or_else(|| {
        Error::Model(format!(
            "kind '{}' has no Kraus-operator representation to certify",
            model.kind.name()
        ))
    })?;
    let mut doc = CsvDoc::new(&["t", "unitality_deviation", "choi_min_eigenvalue", "pass"]);
    let mut failures = 0usize;
    for t in logspace(1e-3, t_max, 20) {
        let report = channel.certify(t)?;
        if !report.passes {
            failures += 1;
        }
        doc.push(vec![
            Field::Num(report.t),
            Field::Num(report.unitality_deviation),
            Field::Num(report.choi_min_eigenvalue),
            Field::Int(u64::from(report.passes)),
        ]);
    }
    let (summary, exit) = if failures == 0 {
        ("certify: 20/20 probe times pass".to_string(), 0)
    } else {
        (
            format!("certify: {failures}/20 probe times FAIL complete positivity or trace preservation"),
            3,
        )
    };
    Ok(CmdResult { doc, summary, exit })
}
