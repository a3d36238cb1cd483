//! Exactly solvable reference models and the model-spec dispatch layer.
//!
//! Three families come with closed-form dynamics used to cross-check the
//! generic machinery:
//!
//! * isotropic qubit depolarization, jump operators sqrt(2 gamma) sigma_i,
//!   which shrinks the Bloch vector as e^{-8 gamma t};
//! * local dephasing on n qubits, jumps sqrt(gamma) sigma_z^(k);
//! * trace-renormalized gain/loss flow driven by a Hermitian rate operator,
//!   d rho/dt = -i[H, rho] - {Gamma, rho} + 2 tr(rho Gamma) rho.
//!
//! Each family also ships a Kraus representation with analytic derivatives
//! so channel-route bounds can be evaluated without finite differencing.

use crate::bounds::PassageOutcome;
use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{anticommutator, commutator, herm_eig, trace_product, C64, CMatrix};
use crate::lindblad::{rk4_raw, Lindbladian, TrajectorySample};
use crate::quantum::{
    basis_state, bloch_to_density, expectation, ghz, pauli, product_plus, relative_purity,
    sigma_on, Axis, BlochState, DensityMatrix, MAX_QUBITS,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_rate(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            what: format!("decay rate gamma = {gamma} must be positive"),
        });
    }
    Ok(())
}

/// Isotropic qubit depolarization: jumps sqrt(2 gamma) sigma_{x,y,z}, H = 0.
/// Equivalent to rho -> -gamma sum_i [sigma_i, [sigma_i, rho]].
pub fn isotropic_model(gamma: f64) -> Result<Lindbladian> {
    check_rate(gamma)?;
    let s = (2.0 * gamma).sqrt();
    let jumps = [Axis::X, Axis::Y, Axis::Z]
        .into_iter()
        .map(|ax| pauli(ax).scale(c(s, 0.0)))
        .collect();
    Lindbladian::new(CMatrix::zeros(2, 2), jumps)
}

/// Bloch contraction factor of the isotropic model.
fn isotropic_s(gamma: f64, t: f64) -> f64 {
    (-8.0 * gamma * t).exp()
}

/// Closed-form state at time t: the Bloch vector contracts uniformly,
/// r(t) = e^{-8 gamma t} r(0).
pub fn isotropic_closed_form(gamma: f64, t: f64, b: &BlochState) -> Result<DensityMatrix> {
    check_rate(gamma)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::ParameterOutOfRange {
            what: format!("time t = {t} must be nonnegative"),
        });
    }
    let s = isotropic_s(gamma, t);
    let shrunk = BlochState::new(s * b.r1, s * b.r2, s * b.r3)?;
    Ok(bloch_to_density(&shrunk))
}

/// Closed-form relative purity f(t) = (1 + s(t) |r|^2) / (1 + |r|^2).
pub fn isotropic_f_closed(gamma: f64, t: f64, b: &BlochState) -> f64 {
    let r2 = b.norm_sq();
    (1.0 + isotropic_s(gamma, t) * r2) / (1.0 + r2)
}

/// Exact passage time to f = cos theta under isotropic depolarization.
/// Unreachable targets (cos theta below the asymptote 1/(1 + |r|^2))
/// report the plateau instead.
pub fn isotropic_tau_exact(gamma: f64, theta: f64, b: &BlochState) -> Result<PassageOutcome> {
    check_rate(gamma)?;
    crate::bounds::check_theta(theta)?;
    let r2 = b.norm_sq();
    let f_infinity = 1.0 / (1.0 + r2);
    let numerator = theta.cos() * (1.0 + r2) - 1.0;
    // Targets at (or a rounding error away from) the asymptote are never
    // attained in finite time.
    if numerator <= 1e-14 * (1.0 + r2) || r2 == 0.0 {
        return Ok(PassageOutcome::NotReached { f_infinity });
    }
    let arg = numerator / r2;
    Ok(PassageOutcome::Reached {
        tau: -arg.ln() / (8.0 * gamma),
    })
}

/// Weak-form speed-limit bound for the isotropic model in closed form:
/// theta^2 tr[rho0^2] / (pi^2 gamma sqrt(2 |r|^2)).
pub fn isotropic_tau_b(gamma: f64, theta: f64, b: &BlochState) -> Result<f64> {
    check_rate(gamma)?;
    crate::bounds::check_theta(theta)?;
    let r2 = b.norm_sq();
    if r2 == 0.0 {
        return Err(Error::StationaryState {
            context: "isotropic_tau_b: the maximally mixed state does not move",
        });
    }
    let purity = (1.0 + r2) / 2.0;
    Ok(theta * theta * purity / (std::f64::consts::PI.powi(2) * gamma * (2.0 * r2).sqrt()))
}

/// Kraus representation of the isotropic model (a depolarizing family),
/// with analytic time derivatives. The derivative is singular at exactly
/// t = 0 where the three Pauli branches switch on.
pub fn isotropic_channel(gamma: f64) -> Result<KrausChannel> {
    check_rate(gamma)?;
    let kraus = move |t: f64| -> Result<Vec<CMatrix>> {
        let s = isotropic_s(gamma, t);
        let c0 = ((1.0 + 3.0 * s) / 4.0).sqrt();
        let ci = ((1.0 - s) / 4.0).sqrt();
        Ok(vec![
            CMatrix::identity(2).scale(c(c0, 0.0)),
            pauli(Axis::X).scale(c(ci, 0.0)),
            pauli(Axis::Y).scale(c(ci, 0.0)),
            pauli(Axis::Z).scale(c(ci, 0.0)),
        ])
    };
    let derivative = move |t: f64| -> Result<Vec<CMatrix>> {
        let s = isotropic_s(gamma, t);
        let c0 = ((1.0 + 3.0 * s) / 4.0).sqrt();
        let ci = ((1.0 - s) / 4.0).sqrt();
        let dc0 = -3.0 * gamma * s / c0;
        let dci = gamma * s / ci;
        Ok(vec![
            CMatrix::identity(2).scale(c(dc0, 0.0)),
            pauli(Axis::X).scale(c(dci, 0.0)),
            pauli(Axis::Y).scale(c(dci, 0.0)),
            pauli(Axis::Z).scale(c(dci, 0.0)),
        ])
    };
    Ok(KrausChannel::analytic_with_derivative(2, kraus, derivative))
}

/// Independent dephasing of n qubits: jumps sqrt(gamma) sigma_z^(k), H = 0.
/// Operators are dense, so superoperator work (Liouvillians, expm) is only
/// practical for small registers; closed forms cover the rest.
pub fn dephasing_model(n_qubits: usize, gamma: f64) -> Result<Lindbladian> {
    check_rate(gamma)?;
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::ParameterOutOfRange {
            what: format!("n_qubits = {n_qubits} must lie in 1..={MAX_QUBITS}"),
        });
    }
    let d = 1usize << n_qubits;
    let jumps = (0..n_qubits)
        .map(|k| Ok(sigma_on(n_qubits, k, Axis::Z)?.scale(c(gamma.sqrt(), 0.0))))
        .collect::<Result<Vec<_>>>()?;
    Lindbladian::new(CMatrix::zeros(d, d), jumps)
}

/// Single-qubit dephasing as a Kraus family with analytic derivatives,
/// K1 = sqrt((1+s)/2) I, K2 = sqrt((1-s)/2) sigma_z with s = e^{-2 gamma t}.
/// As for the isotropic family, the derivative is singular at exactly t = 0.
pub fn dephasing_channel(gamma: f64) -> Result<KrausChannel> {
    check_rate(gamma)?;
    let kraus = move |t: f64| -> Result<Vec<CMatrix>> {
        let s = (-2.0 * gamma * t).exp();
        Ok(vec![
            CMatrix::identity(2).scale(c(((1.0 + s) / 2.0).sqrt(), 0.0)),
            pauli(Axis::Z).scale(c(((1.0 - s) / 2.0).sqrt(), 0.0)),
        ])
    };
    let derivative = move |t: f64| -> Result<Vec<CMatrix>> {
        let s = (-2.0 * gamma * t).exp();
        let dc1 = -gamma * s / (2.0 * ((1.0 + s) / 2.0).sqrt());
        let dc2 = gamma * s / (2.0 * ((1.0 - s) / 2.0).sqrt());
        Ok(vec![
            CMatrix::identity(2).scale(c(dc1, 0.0)),
            pauli(Axis::Z).scale(c(dc2, 0.0)),
        ])
    };
    Ok(KrausChannel::analytic_with_derivative(2, kraus, derivative))
}

/// Jump-free generator for Hamiltonian evolution.
pub fn unitary_model(h: &CMatrix) -> Result<Lindbladian> {
    Lindbladian::new(h.clone(), vec![])
}

/// One-operator Kraus family K(t) = exp(-i (H - <H>_rho0) t) with exact
/// derivatives, built from the eigendecomposition of H. Centering on the
/// initial mean energy makes the channel-route summand equal the energy
/// spread of rho0.
pub fn unitary_channel(h: &CMatrix, rho0: &DensityMatrix) -> Result<KrausChannel> {
    h.require_hermitian("unitary_channel H")?;
    if h.rows() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            context: "unitary_channel",
            left: h.rows(),
            right: rho0.dim(),
        });
    }
    let shift = expectation(h, rho0)?.re;
    let n = h.rows();
    let shifted = h - &CMatrix::identity(n).scale(c(shift, 0.0));
    let eig = herm_eig(&shifted)?;
    let u = eig.eigenvectors;
    let udag = u.dagger();
    let evals = eig.eigenvalues;

    let phases = move |t: f64, with_rate: bool| -> Result<CMatrix> {
        let d = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let phase = c((-evals[i] * t).cos(), (-evals[i] * t).sin());
                if with_rate {
                    phase * c(0.0, -evals[i])
                } else {
                    phase
                }
            } else {
                c(0.0, 0.0)
            }
        })?;
        Ok(d)
    };
    let u_k = u.clone();
    let udag_k = udag.clone();
    let p_k = phases.clone();
    let kraus = move |t: f64| -> Result<Vec<CMatrix>> {
        Ok(vec![&(&u_k * &p_k(t, false)?) * &udag_k])
    };
    let derivative = move |t: f64| -> Result<Vec<CMatrix>> {
        Ok(vec![&(&u * &phases(t, true)?) * &udag])
    };
    Ok(KrausChannel::analytic_with_derivative(n, kraus, derivative))
}

/// Right-hand side of the trace-renormalized gain/loss flow,
/// -i[H, rho] - {Gamma, rho} + 2 tr(rho Gamma) rho. The last term keeps the
/// trace at one, at the price of making the flow nonlinear in rho.
pub fn gain_loss_rhs(
    h: &CMatrix,
    gamma_op: &CMatrix,
) -> impl Fn(f64, &CMatrix) -> CMatrix + Send + Sync {
    let h = h.clone();
    let g = gamma_op.clone();
    move |_t: f64, rho: &CMatrix| {
        let coherent = commutator(&h, rho).scale(c(0.0, -1.0));
        let contraction = anticommutator(&g, rho);
        let feed = trace_product(rho, &g).re;
        &(&coherent - &contraction) + &rho.scale(c(2.0 * feed, 0.0))
    }
}

/// Integrate the gain/loss flow with fixed-step RK4, validating every
/// sample as a density matrix.
pub fn gain_loss_evolve(
    h: &CMatrix,
    gamma_op: &CMatrix,
    rho0: &DensityMatrix,
    t_end: f64,
    dt: f64,
) -> Result<Vec<TrajectorySample>> {
    h.require_hermitian("gain_loss_evolve H")?;
    gamma_op.require_hermitian("gain_loss_evolve Gamma")?;
    if h.rows() != rho0.dim() || gamma_op.rows() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            context: "gain_loss_evolve",
            left: rho0.dim(),
            right: h.rows().max(gamma_op.rows()),
        });
    }
    let rhs = gain_loss_rhs(h, gamma_op);
    let path = rk4_raw(&rhs, rho0.matrix(), t_end, dt)?;
    path.into_iter()
        .map(|(t, raw)| {
            let rho = DensityMatrix::new(raw).map_err(|e| Error::StepRejected {
                t,
                reason: e.to_string(),
            })?;
            let f = relative_purity(rho0, &rho)?;
            Ok(TrajectorySample { t, rho, f })
        })
        .collect()
}

/// Initial speed of the gain/loss flow: ||i[H, rho0] - {Gamma - <Gamma>, rho0}||_HS.
/// Centering Gamma on its initial mean removes the trace-feeding direction,
/// which the renormalization cancels at t = 0. For pure states this equals
/// sqrt(2 (Var H + Var Gamma - i <[Gamma, H]>)).
pub fn gain_loss_speed0(h: &CMatrix, gamma_op: &CMatrix, rho0: &DensityMatrix) -> Result<f64> {
    h.require_hermitian("gain_loss_speed0 H")?;
    gamma_op.require_hermitian("gain_loss_speed0 Gamma")?;
    let mean_g = expectation(gamma_op, rho0)?.re;
    let centered = gamma_op - &CMatrix::identity(gamma_op.rows()).scale(c(mean_g, 0.0));
    let a = &commutator(h, rho0.matrix()).scale(c(0.0, 1.0))
        - &anticommutator(&centered, rho0.matrix());
    Ok(a.hs_norm())
}

/// Which reference family a model file names.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Isotropic,
    DephasingLocal,
    Unitary,
    GainLoss,
    Custom,
}

impl ModelKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "isotropic" => Ok(ModelKind::Isotropic),
            "dephasing_local" => Ok(ModelKind::DephasingLocal),
            "unitary" => Ok(ModelKind::Unitary),
            "gain_loss" => Ok(ModelKind::GainLoss),
            "custom" => Ok(ModelKind::Custom),
            other => Err(Error::Model(format!(
                "unknown model kind {other:?}; expected isotropic, dephasing_local, \
                 unitary, gain_loss, or custom"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Isotropic => "isotropic",
            ModelKind::DephasingLocal => "dephasing_local",
            ModelKind::Unitary => "unitary",
            ModelKind::GainLoss => "gain_loss",
            ModelKind::Custom => "custom",
        }
    }
}

/// Initial state, either named, defaulted per family, or explicit.
#[derive(Clone, Debug, Default)]
pub enum InitialStateSpec {
    #[default]
    Default,
    Named(String),
    Matrix(CMatrix),
}

/// Parsed model description; `load_model` turns it into operators.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub gamma: Option<f64>,
    pub n_qubits: Option<usize>,
    pub bloch: Option<BlochState>,
    pub hamiltonian: Option<CMatrix>,
    pub gamma_op: Option<CMatrix>,
    pub jumps: Vec<CMatrix>,
    pub initial_state: InitialStateSpec,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            gamma: None,
            n_qubits: None,
            bloch: None,
            hamiltonian: None,
            gamma_op: None,
            jumps: Vec::new(),
            initial_state: InitialStateSpec::Default,
        }
    }
}

/// A model ready to run: initial state plus whichever dynamical
/// representations the family supports.
pub struct LoadedModel {
    pub kind: ModelKind,
    pub initial: DensityMatrix,
    /// Lindblad generator, when the dynamics is linear.
    pub generator: Option<Lindbladian>,
    /// Kraus representation with analytic derivatives, when available.
    pub channel: Option<KrausChannel>,
    /// (H, Gamma) of the nonlinear gain/loss flow.
    pub gain_loss: Option<(CMatrix, CMatrix)>,
    /// (gamma, initial Bloch vector) handle to the isotropic closed forms.
    pub isotropic: Option<(f64, BlochState)>,
}

fn resolve_named(name: &str, dim: usize) -> Result<DensityMatrix> {
    let n_qubits = dim.trailing_zeros() as usize;
    let is_register = dim.is_power_of_two() && dim >= 2;
    match name {
        "zero" => basis_state(dim, 0),
        "one" => basis_state(dim, dim - 1),
        "mixed" => Ok(DensityMatrix::maximally_mixed(dim)),
        "plus" | "product_plus" if is_register => product_plus(n_qubits),
        "ghz" if is_register => ghz(n_qubits),
        "plus" | "product_plus" | "ghz" => Err(Error::Model(format!(
            "initial state {name:?} needs a power-of-two dimension, got {dim}"
        ))),
        other => Err(Error::Model(format!(
            "unknown initial state {other:?}; expected zero, one, mixed, plus, \
             product_plus, ghz, or an explicit matrix"
        ))),
    }
}

fn resolve_initial(spec: &InitialStateSpec, dim: usize, fallback: &str) -> Result<DensityMatrix> {
    match spec {
        InitialStateSpec::Default => resolve_named(fallback, dim),
        InitialStateSpec::Named(name) => resolve_named(name, dim),
        InitialStateSpec::Matrix(m) => {
            if m.rows() != dim {
                return Err(Error::DimensionMismatch {
                    context: "initial_state",
                    left: m.rows(),
                    right: dim,
                });
            }
            DensityMatrix::new(m.clone())
        }
    }
}

fn require_absent(cond: bool, field: &str, kind: ModelKind) -> Result<()> {
    if cond {
        return Err(Error::Model(format!(
            "field {field:?} does not apply to model kind {:?}",
            kind.name()
        )));
    }
    Ok(())
}

fn require_gamma(spec: &ModelSpec) -> Result<f64> {
    spec.gamma.ok_or_else(|| {
        Error::Model(format!(
            "model kind {:?} requires a gamma field",
            spec.kind.name()
        ))
    })
}

fn require_matrix<'a>(m: &'a Option<CMatrix>, field: &str, kind: ModelKind) -> Result<&'a CMatrix> {
    m.as_ref().ok_or_else(|| {
        Error::Model(format!(
            "model kind {:?} requires a {field} field",
            kind.name()
        ))
    })
}

/// Validate a [`ModelSpec`] and build the operators it describes.
pub fn load_model(spec: &ModelSpec) -> Result<LoadedModel> {
    match spec.kind {
        ModelKind::Isotropic => {
            require_absent(spec.hamiltonian.is_some(), "hamiltonian", spec.kind)?;
            require_absent(spec.gamma_op.is_some(), "gamma_op", spec.kind)?;
            require_absent(!spec.jumps.is_empty(), "jumps", spec.kind)?;
            require_absent(spec.n_qubits.is_some(), "n_qubits", spec.kind)?;
            let gamma = require_gamma(spec)?;
            let b = spec.bloch.ok_or_else(|| {
                Error::Model("isotropic model requires a bloch field".into())
            })?;
            if !matches!(spec.initial_state, InitialStateSpec::Default) {
                return Err(Error::Model(
                    "isotropic model takes its initial state from the bloch field".into(),
                ));
            }
            Ok(LoadedModel {
                kind: spec.kind,
                initial: bloch_to_density(&b),
                generator: Some(isotropic_model(gamma)?),
                channel: Some(isotropic_channel(gamma)?),
                gain_loss: None,
                isotropic: Some((gamma, b)),
            })
        }
        ModelKind::DephasingLocal => {
            require_absent(spec.hamiltonian.is_some(), "hamiltonian", spec.kind)?;
            require_absent(spec.gamma_op.is_some(), "gamma_op", spec.kind)?;
            require_absent(!spec.jumps.is_empty(), "jumps", spec.kind)?;
            require_absent(spec.bloch.is_some(), "bloch", spec.kind)?;
            let gamma = require_gamma(spec)?;
            let n = spec.n_qubits.unwrap_or(1);
            let generator = dephasing_model(n, gamma)?;
            let initial = resolve_initial(&spec.initial_state, 1 << n, "product_plus")?;
            let channel = if n == 1 {
                Some(dephasing_channel(gamma)?)
            } else {
                None
            };
            Ok(LoadedModel {
                kind: spec.kind,
                initial,
                generator: Some(generator),
                channel,
                gain_loss: None,
                isotropic: None,
            })
        }
        ModelKind::Unitary => {
            require_absent(spec.gamma.is_some(), "gamma", spec.kind)?;
            require_absent(spec.gamma_op.is_some(), "gamma_op", spec.kind)?;
            require_absent(!spec.jumps.is_empty(), "jumps", spec.kind)?;
            require_absent(spec.bloch.is_some(), "bloch", spec.kind)?;
            require_absent(spec.n_qubits.is_some(), "n_qubits", spec.kind)?;
            let h = require_matrix(&spec.hamiltonian, "hamiltonian", spec.kind)?;
            let initial = resolve_initial(&spec.initial_state, h.rows(), "plus")?;
            Ok(LoadedModel {
                kind: spec.kind,
                initial: initial.clone(),
                generator: Some(unitary_model(h)?),
                channel: Some(unitary_channel(h, &initial)?),
                gain_loss: None,
                isotropic: None,
            })
        }
        ModelKind::GainLoss => {
            require_absent(spec.gamma.is_some(), "gamma", spec.kind)?;
            require_absent(!spec.jumps.is_empty(), "jumps", spec.kind)?;
            require_absent(spec.bloch.is_some(), "bloch", spec.kind)?;
            require_absent(spec.n_qubits.is_some(), "n_qubits", spec.kind)?;
            let h = require_matrix(&spec.hamiltonian, "hamiltonian", spec.kind)?;
            let g = require_matrix(&spec.gamma_op, "gamma_op", spec.kind)?;
            h.require_hermitian("gain_loss hamiltonian")?;
            g.require_hermitian("gain_loss gamma_op")?;
            if h.rows() != g.rows() {
                return Err(Error::DimensionMismatch {
                    context: "gain_loss operators",
                    left: h.rows(),
                    right: g.rows(),
                });
            }
            let initial = resolve_initial(&spec.initial_state, h.rows(), "zero")?;
            Ok(LoadedModel {
                kind: spec.kind,
                initial,
                generator: None,
                channel: None,
                gain_loss: Some((h.clone(), g.clone())),
                isotropic: None,
            })
        }
        ModelKind::Custom => {
            require_absent(spec.gamma.is_some(), "gamma", spec.kind)?;
            require_absent(spec.gamma_op.is_some(), "gamma_op", spec.kind)?;
            require_absent(spec.bloch.is_some(), "bloch", spec.kind)?;
            require_absent(spec.n_qubits.is_some(), "n_qubits", spec.kind)?;
            let h = require_matrix(&spec.hamiltonian, "hamiltonian", spec.kind)?;
            let generator = Lindbladian::new(h.clone(), spec.jumps.clone())?;
            let initial = resolve_initial(&spec.initial_state, h.rows(), "mixed")?;
            Ok(LoadedModel {
                kind: spec.kind,
                initial,
                generator: Some(generator),
                channel: None,
                gain_loss: None,
                isotropic: None,
            })
        }
    }
}
