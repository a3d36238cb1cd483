//! Quantum channels in Kraus form, with derivatives and certification.
//!
//! A channel is a time-indexed family of Kraus operators {K_alpha(t)} acting
//! as rho -> sum_alpha K_alpha rho K_alpha^dag. Families come either from a
//! closure (optionally with an analytic time derivative) or from a table of
//! precomputed families at fixed times. Tabulated families are never
//! interpolated: lookups off the grid fail loudly, and derivatives require an
//! analytic source.

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, C64, CMatrix};
use crate::quantum::DensityMatrix;

/// A family is accepted as trace-preserving when
/// || sum K^dag K - I ||_HS is at most this.
pub const TOL_TRACE_PRESERVING: f64 = 1e-8;

/// The Choi matrix may dip this far below zero before certification fails.
pub const TOL_CHOI_EIGENVALUE: f64 = 1e-10;

/// Relative step for finite-difference Kraus derivatives.
const FD_STEP_SCALE: f64 = 1e-6;

type KrausFn = Box<dyn Fn(f64) -> Result<Vec<CMatrix>> + Send + Sync>;

enum KrausSource {
    Analytic {
        kraus: KrausFn,
        derivative: Option<KrausFn>,
    },
    Tabulated {
        times: Vec<f64>,
        families: Vec<Vec<CMatrix>>,
    },
}

/// Certification outcome for one instant of a channel.
#[derive(Clone, Debug)]
pub struct CptReport {
    pub t: f64,
    /// || sum_alpha K_alpha^dag K_alpha - I ||_HS.
    pub unitality_deviation: f64,
    /// Smallest eigenvalue of the Choi matrix sum_alpha vec(K_alpha) vec(K_alpha)^dag.
    pub choi_min_eigenvalue: f64,
    pub passes: bool,
}

pub struct KrausChannel {
    dim: usize,
    source: KrausSource,
}

impl KrausChannel {
    /// Channel from a closure producing the Kraus family at each time.
    pub fn analytic(
        dim: usize,
        kraus: impl Fn(f64) -> Result<Vec<CMatrix>> + Send + Sync + 'static,
    ) -> Self {
        KrausChannel {
            dim,
            source: KrausSource::Analytic {
                kraus: Box::new(kraus),
                derivative: None,
            },
        }
    }

    /// Channel with a closed-form time derivative alongside the family.
    pub fn analytic_with_derivative(
        dim: usize,
        kraus: impl Fn(f64) -> Result<Vec<CMatrix>> + Send + Sync + 'static,
        derivative: impl Fn(f64) -> Result<Vec<CMatrix>> + Send + Sync + 'static,
    ) -> Self {
        KrausChannel {
            dim,
            source: KrausSource::Analytic {
                kraus: Box::new(kraus),
                derivative: Some(Box::new(derivative)),
            },
        }
    }

    /// Channel from precomputed families at fixed, strictly increasing times.
    pub fn tabulated(dim: usize, times: Vec<f64>, families: Vec<Vec<CMatrix>>) -> Result<Self> {
        if times.len() != families.len() {
            return Err(Error::DimensionMismatch {
                context: "tabulated channel times vs families",
                left: times.len(),
                right: families.len(),
            });
        }
        if times.is_empty() {
            return Err(Error::ParameterOutOfRange {
                what: "tabulated channel needs at least one time".into(),
            });
        }
        for w in times.windows(2) {
            // partial_cmp so a NaN entry is rejected, not silently accepted
            if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::ParameterOutOfRange {
                    what: format!("tabulated times must strictly increase, got {} then {}", w[0], w[1]),
                });
            }
        }
        for (&t, family) in times.iter().zip(&families) {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::ParameterOutOfRange {
                    what: format!("tabulated time {t} must be finite and nonnegative"),
                });
            }
            check_family(dim, family)?;
        }
        Ok(KrausChannel {
            dim,
            source: KrausSource::Tabulated { times, families },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The Kraus family at time t. Tabulated sources require an exact grid
    /// hit; there is no interpolation.
    pub fn kraus_at(&self, t: f64) -> Result<Vec<CMatrix>> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::ParameterOutOfRange {
                what: format!("channel time {t} must be finite and nonnegative"),
            });
        }
        match &self.source {
            KrausSource::Analytic { kraus, .. } => {
                let family = kraus(t)?;
                check_family(self.dim, &family)?;
                Ok(family)
            }
            KrausSource::Tabulated { times, families } => {
                let tol = 1e-12 * t.abs().max(1.0);
                match times.iter().position(|&u| (u - t).abs() <= tol) {
                    Some(i) => Ok(families[i].clone()),
                    None => {
                        let nearest = times
                            .iter()
                            .copied()
                            .min_by(|a, b| {
                                (a - t).abs().partial_cmp(&(b - t).abs()).unwrap()
                            })
                            .unwrap();
                        Err(Error::ParameterOutOfRange {
                            what: format!(
                                "tabulated channel has no family at t = {t} \
                                 (nearest grid time {nearest}); interpolation is not supported"
                            ),
                        })
                    }
                }
            }
        }
    }

    /// rho -> sum K rho K^dag, refusing families that are not
    /// trace-preserving and validating the output state.
    pub fn apply(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho0.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "channel apply",
                left: self.dim,
                right: rho0.dim(),
            });
        }
        let family = self.kraus_at(t)?;
        let dev = trace_preservation_deviation(self.dim, &family);
        if dev > TOL_TRACE_PRESERVING {
            return Err(Error::CptCertificationFailed {
                t,
                detail: format!(
                    "sum K^dag K deviates from identity by {dev:.3e} (tolerance {TOL_TRACE_PRESERVING:.1e})"
                ),
            });
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &family {
            out = &out + &(&(k * rho0.matrix()) * &k.dagger());
        }
        DensityMatrix::new(out).map_err(|e| Error::EvolutionInvariantViolated {
            reason: format!("channel output at t = {t}: {e}"),
        })
    }

    /// Time derivative of the Kraus family: the analytic closure when one
    /// was supplied, otherwise a central finite difference with relative
    /// step 1e-6 (one-sided at the left edge). Tabulated sources cannot be
    /// differentiated.
    pub fn derivative_at(&self, t: f64) -> Result<Vec<CMatrix>> {
        match &self.source {
            KrausSource::Analytic { derivative, .. } => {
                if let Some(dk) = derivative {
                    let family = dk(t)?;
                    check_family(self.dim, &family)?;
                    return Ok(family);
                }
                self.fd_derivative(t)
            }
            KrausSource::Tabulated { .. } => Err(Error::DerivativeUnavailable {
                reason: "tabulated channels carry no derivative information; \
                         provide an analytic Kraus source"
                    .into(),
            }),
        }
    }

    fn fd_derivative(&self, t: f64) -> Result<Vec<CMatrix>> {
        let h = FD_STEP_SCALE * t.abs().max(1.0);
        if t >= h {
            let plus = self.kraus_at(t + h)?;
            let minus = self.kraus_at(t - h)?;
            if plus.len() != minus.len() {
                return Err(Error::KrausFamilyChanged {
                    t,
                    before: minus.len(),
                    after: plus.len(),
                });
            }
            Ok(plus
                .iter()
                .zip(&minus)
                .map(|(p, m)| (p - m).scale(C64::new(1.0 / (2.0 * h), 0.0)))
                .collect())
        } else {
            // Second-order one-sided difference at the left edge.
            let f0 = self.kraus_at(t)?;
            let f1 = self.kraus_at(t + h)?;
            let f2 = self.kraus_at(t + 2.0 * h)?;
            if f1.len() != f0.len() || f2.len() != f0.len() {
                return Err(Error::KrausFamilyChanged {
                    t,
                    before: f0.len(),
                    after: if f1.len() != f0.len() { f1.len() } else { f2.len() },
                });
            }
            Ok(f0
                .iter()
                .zip(f1.iter().zip(&f2))
                .map(|(k0, (k1, k2))| {
                    let num = &(&k1.scale(C64::new(4.0, 0.0)) - &k2.scale(C64::new(1.0, 0.0)))
                        - &k0.scale(C64::new(3.0, 0.0));
                    num.scale(C64::new(1.0 / (2.0 * h), 0.0))
                })
                .collect())
        }
    }

    /// Trace preservation and complete positivity diagnostics at time t.
    pub fn certify(&self, t: f64) -> Result<CptReport> {
        let family = self.kraus_at(t)?;
        let dev = trace_preservation_deviation(self.dim, &family);
        let d = self.dim;
        let mut choi = CMatrix::zeros(d * d, d * d);
        for k in &family {
            // Row-major vec(K), outer product accumulated in place.
            let v: Vec<C64> = k.as_array().iter().copied().collect();
            let outer = CMatrix::from_fn(d * d, d * d, |i, j| v[i] * v[j].conj())?;
            choi = &choi + &outer;
        }
        let eig = herm_eig(&choi)?;
        let min_eig = eig.eigenvalues[0];
        Ok(CptReport {
            t,
            unitality_deviation: dev,
            choi_min_eigenvalue: min_eig,
            passes: dev <= TOL_TRACE_PRESERVING && min_eig >= -TOL_CHOI_EIGENVALUE,
        })
    }
}

fn check_family(dim: usize, family: &[CMatrix]) -> Result<()> {
    if family.is_empty() {
        return Err(Error::ParameterOutOfRange {
            what: "Kraus family must contain at least one operator".into(),
        });
    }
    for k in family {
        k.require_square("Kraus operator")?;
        if k.rows() != dim {
            return Err(Error::DimensionMismatch {
                context: "Kraus operator",
                left: dim,
                right: k.rows(),
            });
        }
    }
    Ok(())
}

fn trace_preservation_deviation(dim: usize, family: &[CMatrix]) -> f64 {
    let mut acc = CMatrix::zeros(dim, dim);
    for k in family {
        acc = &acc + &(&k.dagger() * k);
    }
    (&acc - &CMatrix::identity(dim)).hs_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{pauli, plus_state, Axis};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Single-qubit dephasing in Kraus form: sqrt((1+s)/2) I and
    /// sqrt((1-s)/2) sigma_z with s = exp(-2 gamma t).
    fn dephasing_channel(gamma: f64) -> KrausChannel {
        KrausChannel::analytic(2, move |t| {
            let s = (-2.0 * gamma * t).exp();
            Ok(vec![
                CMatrix::identity(2).scale(c(((1.0 + s) / 2.0).sqrt(), 0.0)),
                pauli(Axis::Z).scale(c(((1.0 - s) / 2.0).sqrt(), 0.0)),
            ])
        })
    }

    fn corrupted_dephasing_channel(gamma: f64, blowup: f64) -> KrausChannel {
        KrausChannel::analytic(2, move |t| {
            let s = (-2.0 * gamma * t).exp();
            Ok(vec![
                CMatrix::identity(2).scale(c(((1.0 + s) / 2.0).sqrt(), 0.0)),
                pauli(Axis::Z).scale(c(blowup * ((1.0 - s) / 2.0).sqrt(), 0.0)),
            ])
        })
    }

    /// Amplitude damping with p = 1 - exp(-gamma t).
    fn damping_channel(gamma: f64) -> KrausChannel {
        KrausChannel::analytic(2, move |t| {
            let p = 1.0 - (-gamma * t).exp();
            Ok(vec![
                CMatrix::new(2, 2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - p).sqrt(), 0.0)])
                    .unwrap(),
                CMatrix::new(2, 2, vec![c(0.0, 0.0), c(p.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)])
                    .unwrap(),
            ])
        })
    }

    #[test]
    fn identity_channel_certifies() {
        let ch = KrausChannel::analytic(2, |_| Ok(vec![CMatrix::identity(2)]));
        let report = ch.certify(3.0).unwrap();
        assert!(report.passes);
        assert_relative_eq!(report.unitality_deviation, 0.0, epsilon = 1e-15);
        assert!(report.choi_min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn dephasing_channel_matches_closed_form() {
        let gamma = 0.9;
        let ch = dephasing_channel(gamma);
        let rho0 = plus_state();
        for &t in &[0.0, 0.2, 1.0, 4.0] {
            let rho_t = ch.apply(&rho0, t).unwrap();
            let s = (-2.0 * gamma * t).exp();
            assert_relative_eq!(rho_t.matrix().get(0, 1).re, s / 2.0, epsilon = 1e-12);
            assert!(ch.certify(t).unwrap().passes);
        }
    }

    #[test]
    fn dephasing_choi_is_psd() {
        // The Choi matrix is rank two (eigenvalues 1 +- s and two zeros),
        // so the minimum eigenvalue sits at zero up to roundoff.
        let report = dephasing_channel(1.0).certify(0.5).unwrap();
        assert!(report.passes);
        assert!(report.choi_min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn corrupted_family_fails_certification_with_computed_deviation() {
        // Scaling the second operator by b multiplies its Gram term by b^2:
        // sum K^dag K = I + (b^2 - 1) (1 - s)/2 I, so the HS deviation is
        // (b^2 - 1) (1 - s)/2 * sqrt(2).
        let gamma = 1.0;
        let blowup = 1.01;
        let t = 1.0;
        let ch = corrupted_dephasing_channel(gamma, blowup);
        let s = (-2.0_f64 * gamma * t).exp();
        let expected = (blowup * blowup - 1.0) * (1.0 - s) / 2.0 * 2.0_f64.sqrt();
        let report = ch.certify(t).unwrap();
        assert!(!report.passes);
        assert_relative_eq!(report.unitality_deviation, expected, epsilon = 1e-12);
        // Application refuses the same family.
        let err = ch.apply(&plus_state(), t).unwrap_err();
        assert!(matches!(err, Error::CptCertificationFailed { .. }));
    }

    #[test]
    fn fd_derivative_matches_analytic() {
        let gamma = 0.7;
        let t = 0.8;
        let fd = damping_channel(gamma).derivative_at(t).unwrap();
        // dp/dt = gamma e^{-gamma t}; dK0 = diag(0, -p'/(2 sqrt(1-p)));
        // dK1 has p'/(2 sqrt(p)) in the upper right corner.
        let p = 1.0 - (-gamma * t).exp();
        let pdot = gamma * (-gamma * t).exp();
        assert_relative_eq!(fd[0].get(1, 1).re, -pdot / (2.0 * (1.0 - p).sqrt()), epsilon = 1e-8);
        assert_relative_eq!(fd[1].get(0, 1).re, pdot / (2.0 * p.sqrt()), epsilon = 1e-8);
        assert!(fd[0].get(0, 0).norm() < 1e-10);
    }

    #[test]
    fn analytic_derivative_is_used_when_supplied() {
        let gamma = 0.7;
        let ch = KrausChannel::analytic_with_derivative(
            2,
            move |t| {
                let p = 1.0 - (-gamma * t).exp();
                Ok(vec![CMatrix::from_real_diag(&[1.0, (1.0 - p).sqrt()])])
            },
            move |_| Ok(vec![CMatrix::from_real_diag(&[42.0, 42.0])]),
        );
        let dk = ch.derivative_at(0.3).unwrap();
        assert_relative_eq!(dk[0].get(0, 0).re, 42.0, epsilon = 0.0);
    }

    #[test]
    fn one_sided_derivative_near_zero() {
        // Smooth family near t = 0: the one-sided stencil stays accurate.
        let ch = KrausChannel::analytic(2, |t| {
            Ok(vec![CMatrix::identity(2).scale(c((t * t + 1.0).cos(), (t * t + 1.0).sin()))])
        });
        // d/dt e^{i(t^2+1)} = 2 i t e^{i(t^2+1)} = 0 at t = 0.
        let dk = ch.derivative_at(0.0).unwrap();
        assert!(dk[0].max_abs() < 1e-5);
    }

    #[test]
    fn family_size_change_is_detected() {
        let ch = KrausChannel::analytic(2, |t| {
            if t < 1.0 {
                Ok(vec![CMatrix::identity(2)])
            } else {
                Ok(vec![
                    CMatrix::identity(2).scale(c(0.5_f64.sqrt(), 0.0)),
                    pauli(Axis::Z).scale(c(0.5_f64.sqrt(), 0.0)),
                ])
            }
        });
        let err = ch.derivative_at(1.0).unwrap_err();
        match err {
            Error::KrausFamilyChanged { before, after, .. } => {
                assert_eq!(before, 1);
                assert_eq!(after, 2);
            }
            other => panic!("expected family-change error, got {other}"),
        }
    }

    #[test]
    fn tabulated_lookup_is_exact_only() {
        let family = vec![CMatrix::identity(2)];
        let ch = KrausChannel::tabulated(
            2,
            vec![0.0, 0.5, 1.0],
            vec![family.clone(), family.clone(), family.clone()],
        )
        .unwrap();
        assert_eq!(ch.kraus_at(0.5).unwrap().len(), 1);
        let err = ch.kraus_at(0.25).unwrap_err();
        assert!(err.to_string().contains("interpolation"));
        let derr = ch.derivative_at(0.5).unwrap_err();
        assert!(matches!(derr, Error::DerivativeUnavailable { .. }));
    }

    #[test]
    fn tabulated_requires_increasing_times() {
        let family = vec![CMatrix::identity(2)];
        assert!(KrausChannel::tabulated(
            2,
            vec![0.5, 0.5],
            vec![family.clone(), family.clone()]
        )
        .is_err());
        assert!(KrausChannel::tabulated(2, vec![], vec![]).is_err());
    }

    #[test]
    fn apply_checks_state_dimension() {
        let ch = dephasing_channel(1.0);
        let rho4 = crate::quantum::ghz(2).unwrap();
        assert!(matches!(
            ch.apply(&rho4, 0.1).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }
}
