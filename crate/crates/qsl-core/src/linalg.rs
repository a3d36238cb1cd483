//! Dense complex linear algebra used by the rest of the crate.
//!
//! Everything here is plain `f64`-precision dense math over
//! [`num_complex::Complex64`]. The sizes involved are small (qubit registers
//! and their superoperators, a few thousand rows at the very most), so the
//! implementations favour clarity and reproducibility over asymptotic
//! cleverness: Kronecker products are written out directly, the Hermitian
//! eigensolver is a cyclic Jacobi iteration, and the matrix exponential is
//! scaling-and-squaring with a fixed order-13 Pade approximant.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shorthand for the scalar type used everywhere.
pub type C64 = Complex64;

/// Absolute tolerance for Hermiticity checks: max |A - A^dag| entry.
pub const TOL_HERMITICITY: f64 = 1e-10;

/// Eigenvalues of a nominally positive semidefinite matrix may dip this far
/// below zero before the matrix is rejected; anything in (-TOL, 0) is
/// clipped to zero.
pub const TOL_PSD_EIGENVALUE: f64 = 1e-10;

/// Kronecker products refuse to build anything with more rows or columns
/// than this. A d-dimensional register has a d^2-row superoperator, so the
/// cap corresponds to 12 qubits directly or 6 qubits through a
/// superoperator.
pub const DIM_CAP: usize = 4096;

/// Scaling-and-squaring threshold for the order-13 Pade approximant.
const THETA_13: f64 = 5.371_920_351_148_152;

/// Squaring counts beyond this are legal but suspicious (norm > ~2^32), so
/// they are logged.
const MAX_SQUARINGS_QUIET: u32 = 32;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense complex matrix with all entries guaranteed finite.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    data: Array2<C64>,
}

impl CMatrix {
    /// Wraps an ndarray, rejecting NaN or infinite entries.
    pub fn from_array(data: Array2<C64>) -> Result<Self> {
        for ((i, j), z) in data.indexed_iter() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
        Ok(CMatrix { data })
    }

    /// Builds from a row-major entry list.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "CMatrix::new entry count",
                left: rows * cols,
                right: entries.len(),
            });
        }
        let data = Array2::from_shape_vec((rows, cols), entries)
            .expect("shape consistent with entry count");
        Self::from_array(data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            data: Array2::zeros((rows, cols)),
        }
    }

    pub fn identity(n: usize) -> Self {
        CMatrix {
            data: Array2::eye(n),
        }
    }

    /// Builds entry-by-entry from a closure. The closure must produce finite
    /// values; this is checked.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Self::from_array(Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j)))
    }

    /// Diagonal matrix from real entries.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Array2::zeros((n, n));
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        CMatrix { data: m }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length if square, error otherwise.
    pub fn require_square(&self, _context: &'static str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[(i, j)] = v;
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        CMatrix {
            data: self.data.t().mapv(|z| z.conj()),
        }
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix {
            data: self.data.t().to_owned(),
        }
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            data: self.data.mapv(|z| z.conj()),
        }
    }

    pub fn trace(&self) -> C64 {
        debug_assert!(self.is_square());
        (0..self.rows()).map(|i| self.data[(i, i)]).sum()
    }

    pub fn scale(&self, c: C64) -> CMatrix {
        CMatrix {
            data: self.data.mapv(|z| z * c),
        }
    }

    /// Hilbert-Schmidt (Frobenius) norm, sqrt(tr A^dag A).
    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum column sum of moduli; drives the expm scaling choice.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.data[(i, j)].norm()).sum())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest |A_ij - conj(A_ji)| over all entries. Zero for exactly
    /// Hermitian matrices.
    pub fn hermiticity_deviation(&self) -> f64 {
        debug_assert!(self.is_square());
        let n = self.rows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Errors unless the matrix is square and Hermitian within
    /// [`TOL_HERMITICITY`].
    pub fn require_hermitian(&self, context: &'static str) -> Result<()> {
        self.require_square(context)?;
        let dev = self.hermiticity_deviation();
        if dev > TOL_HERMITICITY {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(())
    }

    /// Kronecker product, refusing results larger than [`DIM_CAP`] on
    /// either axis.
    pub fn kron(&self, other: &CMatrix) -> Result<CMatrix> {
        let (ra, ca) = (self.rows(), self.cols());
        let (rb, cb) = (other.rows(), other.cols());
        for (prod, a, b) in [(ra.checked_mul(rb), ra, rb), (ca.checked_mul(cb), ca, cb)] {
            match prod {
                Some(p) if p <= DIM_CAP => {}
                _ => {
                    return Err(Error::DimensionCapExceeded {
                        requested: a.saturating_mul(b),
                        cap: DIM_CAP,
                    })
                }
            }
        }
        let mut out = Array2::zeros((ra * rb, ca * cb));
        for i in 0..ra {
            for j in 0..ca {
                let aij = self.data[(i, j)];
                if aij == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..rb {
                    for l in 0..cb {
                        out[(i * rb + k, j * cb + l)] = aij * other.data[(k, l)];
                    }
                }
            }
        }
        Ok(CMatrix { data: out })
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.data[idx]
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

/// Matrix product.
impl std::ops::Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols(),
            rhs.rows(),
            "matrix product dimension mismatch: {}x{} * {}x{}",
            self.rows(),
            self.cols(),
            rhs.rows(),
            rhs.cols()
        );
        CMatrix {
            data: self.data.dot(&rhs.data),
        }
    }
}

impl std::ops::Mul<C64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, c: C64) -> CMatrix {
        self.scale(c)
    }
}

impl std::ops::Mul<f64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, c: f64) -> CMatrix {
        self.scale(C64::new(c, 0.0))
    }
}

impl std::ops::Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// [a, b] = ab - ba.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &(a * b) - &(b * a)
}

/// {a, b} = ab + ba.
pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &(a * b) + &(b * a)
}

/// tr(a b) without forming the product matrix.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.cols(), b.rows());
    debug_assert_eq!(a.rows(), b.cols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            acc += a.get(i, j) * b.get(j, i);
        }
    }
    acc
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug)]
pub struct HermEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, ordered to match `eigenvalues`.
    pub eigenvectors: CMatrix,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Rotations zero one off-diagonal pair at a time; the off-diagonal mass
/// decreases monotonically, so the sweep loop always terminates in
/// practice (quadratically once it gets going). Input Hermiticity is
/// validated against [`TOL_HERMITICITY`].
pub fn herm_eig(a: &CMatrix) -> Result<HermEig> {
    a.require_hermitian("herm_eig")?;
    let n = a.rows();
    if n == 0 {
        return Ok(HermEig {
            eigenvalues: vec![],
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }

    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let scale = m.hs_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j).norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= tol / (n as f64) {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                // Smaller root of t^2 - 2 tau t - 1 = 0; keeps rotations small.
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- U^dag A U with U acting on columns p and q.
                for i in 0..n {
                    let aip = m.get(i, p);
                    let aiq = m.get(i, q);
                    m.set(i, p, aip * c + aiq * s * phase.conj());
                    m.set(i, q, aiq * c - aip * s * phase);
                }
                for j in 0..n {
                    let apj = m.get(p, j);
                    let aqj = m.get(q, j);
                    m.set(p, j, apj * c + aqj * s * phase);
                    m.set(q, j, aqj * c - apj * s * phase.conj());
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip * c + viq * s * phase.conj());
                    v.set(i, q, viq * c - vip * s * phase);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(i, i)
            .re
            .partial_cmp(&m.get(j, j).re)
            .expect("finite eigenvalues")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.get(i, i).re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| v.get(i, order[j]))?;
    Ok(HermEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Solves A X = B by LU with partial pivoting. Private helper for `expm`.
fn solve_lu(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let n = a.require_square("solve_lu")?;
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_lu right-hand side",
            left: n,
            right: b.rows(),
        });
    }
    let mut lu = a.data.clone();
    let mut x = b.data.clone();
    let m = x.ncols();
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = lu[(k, k)].norm();
        for i in (k + 1)..n {
            let mag = lu[(i, k)].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag == 0.0 {
            return Err(Error::Numerical(
                "singular matrix in linear solve".to_string(),
            ));
        }
        if pivot_row != k {
            for j in 0..n {
                lu.swap((k, j), (pivot_row, j));
            }
            for j in 0..m {
                x.swap((k, j), (pivot_row, j));
            }
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                let delta = factor * lu[(k, j)];
                lu[(i, j)] -= delta;
            }
            for j in 0..m {
                let delta = factor * x[(k, j)];
                x[(i, j)] -= delta;
            }
        }
    }
    // Back substitution.
    for j in 0..m {
        for i in (0..n).rev() {
            let mut acc = x[(i, j)];
            for k in (i + 1)..n {
                acc -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = acc / lu[(i, i)];
        }
    }
    CMatrix::from_array(x)
}

/// Matrix exponential by scaling-and-squaring with the order-13 diagonal
/// Pade approximant.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.require_square("expm")?;

    let norm = a.norm_1();
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    if squarings > MAX_SQUARINGS_QUIET {
        log::warn!(
            "expm needs {squarings} squarings (1-norm {norm:.3e}); accuracy may degrade"
        );
    }
    let scaled = a.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));

    // Pade-13 numerator/denominator coefficients.
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];

    let id = CMatrix::identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let sum3 = |x: &CMatrix, y: &CMatrix, z: &CMatrix| &(x + y) + z;

    let u_high = sum3(&a6.scale(B[13].into()), &a4.scale(B[11].into()), &a2.scale(B[9].into()));
    let u_low = sum3(&a6.scale(B[7].into()), &a4.scale(B[5].into()), &a2.scale(B[3].into()));
    let u = &scaled * &(&(&(&u_high * &a6) + &u_low) + &id.scale(B[1].into()));

    let v_high = sum3(&a6.scale(B[12].into()), &a4.scale(B[10].into()), &a2.scale(B[8].into()));
    let v_low = sum3(&a6.scale(B[6].into()), &a4.scale(B[4].into()), &a2.scale(B[2].into()));
    let v = &(&(&v_high * &a6) + &v_low) + &id.scale(B[0].into());

    let mut f = solve_lu(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        f = &f * &f;
    }
    Ok(f)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in (-[`TOL_PSD_EIGENVALUE`], 0) are treated as roundoff and
/// clipped to zero; anything lower is an error.
pub fn sqrtm_psd(a: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(a)?;
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min < -TOL_PSD_EIGENVALUE {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    let sqrt_diag = CMatrix::from_real_diag(
        &eig.eigenvalues
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .collect::<Vec<_>>(),
    );
    let v = &eig.eigenvectors;
    Ok(&(v * &sqrt_diag) * &v.dagger())
}
