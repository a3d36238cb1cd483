//! States, observables, and the overlap functionals built on them.
//!
//! The central type is [`DensityMatrix`], which validates the physical
//! invariants (Hermitian, unit trace, positive semidefinite, sane purity)
//! once at construction so downstream code can rely on them. Quantities
//! that are analytically real (relative purity, expectation values of
//! Hermitian observables) are checked for imaginary residue before the
//! imaginary part is discarded.

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, sqrtm_psd, trace_product, C64, CMatrix, TOL_PSD_EIGENVALUE};

/// Absolute tolerance on |tr rho - 1|.
pub const TOL_TRACE: f64 = 1e-10;

/// Allowed slack on the purity window [1/d, 1].
pub const TOL_PURITY: f64 = 1e-10;

/// Imaginary parts up to this size are treated as roundoff residue on
/// analytically real scalars; larger ones are reported as errors.
pub const TOL_IM_RESIDUE: f64 = 1e-10;

/// Bloch vectors may overshoot unit norm by at most this much.
pub const TOL_BLOCH_NORM: f64 = 1e-12;

/// Register sizes are capped here; 2^12 = 4096 matches the linalg cap.
pub const MAX_QUBITS: usize = 12;

/// Above this dimension the positivity check switches from a full
/// eigendecomposition to a shifted Cholesky factorization.
const EIG_CHECK_MAX_DIM: usize = 128;

fn real_part_checked(z: C64, context: &'static str) -> Result<f64> {
    if z.im.abs() > TOL_IM_RESIDUE {
        return Err(Error::ComplexResidue {
            context,
            imag: z.im.abs(),
            tol: TOL_IM_RESIDUE,
        });
    }
    Ok(z.re)
}

/// Checks positive semidefiniteness of a Hermitian matrix by attempting a
/// Cholesky factorization of `m + shift I`. Cheap enough for large
/// registers where a Jacobi eigendecomposition would not be.
fn cholesky_psd_check(m: &CMatrix, shift: f64) -> bool {
    let n = m.rows();
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = m.get(i, j);
            if i == j {
                acc += C64::new(shift, 0.0);
            }
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                if acc.re <= 0.0 {
                    return false;
                }
                l[i * n + i] = C64::new(acc.re.sqrt(), 0.0);
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }
    true
}

/// Density matrix with invariants validated at construction.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Full validation: Hermitian within 1e-10, unit trace within 1e-10,
    /// eigenvalues >= -1e-10, purity inside [1/d - tol, 1 + tol].
    pub fn new(mat: CMatrix) -> Result<Self> {
        let d = mat.require_square("DensityMatrix::new")?;
        if d == 0 {
            return Err(Error::InvalidDensityMatrix {
                reason: "zero-dimensional state".into(),
            });
        }
        mat.require_hermitian("DensityMatrix::new")?;
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TOL_TRACE || tr.im.abs() > TOL_TRACE {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("trace {tr} differs from 1 beyond {TOL_TRACE:.1e}"),
            });
        }
        if d <= EIG_CHECK_MAX_DIM {
            let eig = herm_eig(&mat)?;
            let min = eig.eigenvalues[0];
            if min < -TOL_PSD_EIGENVALUE {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: min,
                });
            }
        } else if !cholesky_psd_check(&mat, TOL_PSD_EIGENVALUE) {
            return Err(Error::InvalidDensityMatrix {
                reason: format!(
                    "shifted Cholesky factorization failed: an eigenvalue lies below -{TOL_PSD_EIGENVALUE:.1e}"
                ),
            });
        }
        let state = DensityMatrix { mat };
        let p = state.purity();
        let floor = 1.0 / d as f64;
        if !(floor - TOL_PURITY..=1.0 + TOL_PURITY).contains(&p) {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("purity {p} outside [{floor}, 1]"),
            });
        }
        Ok(state)
    }

    /// Outer product of a normalized amplitude vector. The vector is
    /// normalized here, so the result is exactly pure up to roundoff.
    pub fn from_state_vector(amplitudes: &[C64]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !norm_sq.is_finite() || norm_sq <= 0.0 {
            return Err(Error::InvalidDensityMatrix {
                reason: "state vector has zero or non-finite norm".into(),
            });
        }
        let norm = norm_sq.sqrt();
        let d = amplitudes.len();
        let mat = CMatrix::from_fn(d, d, |i, j| {
            (amplitudes[i] / norm) * (amplitudes[j] / norm).conj()
        })?;
        Ok(DensityMatrix { mat })
    }

    /// I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            mat: CMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    /// Wraps without re-validating. For internal construction paths whose
    /// output is valid by algebra (outer products, convex mixtures).
    pub(crate) fn from_valid(mat: CMatrix) -> Self {
        DensityMatrix { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// tr rho^2; for a Hermitian matrix this is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        let h = self.mat.hs_norm();
        h * h
    }
}

/// Single-qubit Bloch vector (r1, r2, r3), norm at most 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochState {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl BlochState {
    pub fn new(r1: f64, r2: f64, r3: f64) -> Result<Self> {
        for r in [r1, r2, r3] {
            if !r.is_finite() {
                return Err(Error::ParameterOutOfRange {
                    what: "Bloch component must be finite".into(),
                });
            }
        }
        let norm_sq = r1 * r1 + r2 * r2 + r3 * r3;
        if norm_sq > 1.0 + TOL_BLOCH_NORM {
            return Err(Error::BlochNormExceeded {
                norm: norm_sq.sqrt(),
            });
        }
        Ok(BlochState { r1, r2, r3 })
    }

    pub fn norm_sq(&self) -> f64 {
        self.r1 * self.r1 + self.r2 * self.r2 + self.r3 * self.r3
    }
}

/// Pauli axis label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// The 2x2 Pauli matrix for an axis.
pub fn pauli(axis: Axis) -> CMatrix {
    let (a, b, c, d) = match axis {
        Axis::X => (
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ),
        Axis::Y => (
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ),
        Axis::Z => (
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ),
    };
    CMatrix::new(2, 2, vec![a, b, c, d]).expect("Pauli entries are finite")
}

/// Pauli operator acting on one site of an n-qubit register, identity
/// elsewhere. Site indices count from zero.
pub fn sigma_on(n_qubits: usize, site: usize, axis: Axis) -> Result<CMatrix> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::ParameterOutOfRange {
            what: format!("n_qubits = {n_qubits} outside 1..={MAX_QUBITS}"),
        });
    }
    if site >= n_qubits {
        return Err(Error::SiteOutOfRange { site, n_qubits });
    }
    let mut op = CMatrix::identity(1);
    for k in 0..n_qubits {
        let factor = if k == site {
            pauli(axis)
        } else {
            CMatrix::identity(2)
        };
        op = op.kron(&factor)?;
    }
    Ok(op)
}

/// rho = (I + r . sigma) / 2.
pub fn bloch_to_density(b: &BlochState) -> DensityMatrix {
    let mat = CMatrix::new(
        2,
        2,
        vec![
            C64::new((1.0 + b.r3) / 2.0, 0.0),
            C64::new(b.r1 / 2.0, -b.r2 / 2.0),
            C64::new(b.r1 / 2.0, b.r2 / 2.0),
            C64::new((1.0 - b.r3) / 2.0, 0.0),
        ],
    )
    .expect("finite Bloch components give finite entries");
    DensityMatrix::from_valid(mat)
}

/// Computational basis state |k><k| on a register of the given dimension.
pub fn basis_state(dim: usize, k: usize) -> Result<DensityMatrix> {
    if k >= dim || dim == 0 {
        return Err(Error::ParameterOutOfRange {
            what: format!("basis index {k} outside register of dimension {dim}"),
        });
    }
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[k] = C64::new(1.0, 0.0);
    DensityMatrix::from_state_vector(&amps)
}

/// Single-qubit |+><+|.
pub fn plus_state() -> DensityMatrix {
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DensityMatrix::from_state_vector(&[a, a]).expect("normalized by construction")
}

/// (|0...0> + |1...1>)/sqrt(2) on n qubits.
pub fn ghz(n_qubits: usize) -> Result<DensityMatrix> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::ParameterOutOfRange {
            what: format!("n_qubits = {n_qubits} outside 1..={MAX_QUBITS}"),
        });
    }
    let dim = 1usize << n_qubits;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = a;
    amps[dim - 1] = a;
    DensityMatrix::from_state_vector(&amps)
}

/// |+>^(tensor n).
pub fn product_plus(n_qubits: usize) -> Result<DensityMatrix> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::ParameterOutOfRange {
            what: format!("n_qubits = {n_qubits} outside 1..={MAX_QUBITS}"),
        });
    }
    let dim = 1usize << n_qubits;
    let a = C64::new((dim as f64).sqrt().recip(), 0.0);
    DensityMatrix::from_state_vector(&vec![a; dim])
}

/// Relative purity f = tr(rho0 rho_t) / tr(rho0^2).
///
/// The numerator is analytically real for Hermitian arguments; its
/// imaginary residue is checked against [`TOL_IM_RESIDUE`] and discarded.
pub fn relative_purity(rho0: &DensityMatrix, rho_t: &DensityMatrix) -> Result<f64> {
    if rho0.dim() != rho_t.dim() {
        return Err(Error::DimensionMismatch {
            context: "relative_purity",
            left: rho0.dim(),
            right: rho_t.dim(),
        });
    }
    let overlap = real_part_checked(
        trace_product(rho0.matrix(), rho_t.matrix()),
        "relative_purity overlap",
    )?;
    Ok(overlap / rho0.purity())
}

/// Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)). Diagnostic only;
/// the speed-limit machinery runs on relative purity.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "fidelity",
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let root = sqrtm_psd(rho.matrix())?;
    let inner = &(&root * sigma.matrix()) * &root;
    // Symmetrize before the second root: the product picks up ~1e-15
    // asymmetry from the two matrix multiplies.
    let inner = (&inner + &inner.dagger()).scale(C64::new(0.5, 0.0));
    let f = real_part_checked(sqrtm_psd(&inner)?.trace(), "fidelity trace")?;
    if f > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!("fidelity {f} exceeds 1")));
    }
    Ok(f.min(1.0))
}

/// tr(op rho). Complex in general; real for Hermitian `op`.
pub fn expectation(op: &CMatrix, rho: &DensityMatrix) -> Result<C64> {
    if op.rows() != rho.dim() || !op.is_square() {
        return Err(Error::DimensionMismatch {
            context: "expectation",
            left: op.rows(),
            right: rho.dim(),
        });
    }
    Ok(trace_product(op, rho.matrix()))
}

/// <A^2> - <A>^2 for Hermitian A. Tiny negative results (above -1e-12)
/// are clipped to zero.
pub fn variance(op: &CMatrix, rho: &DensityMatrix) -> Result<f64> {
    op.require_hermitian("variance")?;
    let mean = real_part_checked(expectation(op, rho)?, "variance mean")?;
    let sq = real_part_checked(
        expectation(&(op * op), rho)?,
        "variance second moment",
    )?;
    let var = sq - mean * mean;
    if var < -1e-12 {
        return Err(Error::Numerical(format!(
            "variance {var:.3e} is negative beyond roundoff"
        )));
    }
    Ok(var.max(0.0))
}
