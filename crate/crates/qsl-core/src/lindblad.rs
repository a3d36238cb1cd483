//! Lindblad generators and master-equation evolution.
//!
//! The generator convention (hbar = 1) is
//!
//! ```text
//! L rho = -i [H, rho] + sum_k ( F_k rho F_k^dag - (1/2) {F_k^dag F_k, rho} )
//! ```
//!
//! and its adjoint (the Heisenberg-picture action, used by the speed
//! machinery) flips the commutator sign and transposes the sandwich:
//!
//! ```text
//! L^dag a = +i [H, a] + sum_k ( F_k^dag a F_k - (1/2) {F_k^dag F_k, a} )
//! ```
//!
//! so that tr[(L^dag a) b] = tr[a (L b)] for all a, b.
//!
//! Time-independent evolution goes through the vectorized Liouvillian and
//! the matrix exponential, recomputed per requested time; time-dependent
//! generators are integrated with fixed-step RK4.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::{anticommutator, commutator, expm, C64, CMatrix};
use crate::quantum::{relative_purity, DensityMatrix};

/// Fixed-step integrations refuse to take more steps than this.
const MAX_RK4_STEPS: usize = 20_000_000;

/// One point of an evolved trajectory.
#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub t: f64,
    pub rho: DensityMatrix,
    /// Relative purity against the trajectory's initial state.
    pub f: f64,
}

/// Time-independent Lindblad generator: a Hamiltonian and a list of jump
/// operators, all of the same dimension.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    hamiltonian: CMatrix,
    jumps: Vec<CMatrix>,
    /// Cached F_k^dag F_k products.
    jump_grams: Vec<CMatrix>,
}

impl Lindbladian {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        hamiltonian.require_hermitian("Lindbladian Hamiltonian")?;
        let d = hamiltonian.rows();
        for j in &jumps {
            j.require_square("Lindbladian jump operator")?;
            if j.rows() != d {
                return Err(Error::DimensionMismatch {
                    context: "Lindbladian jump operator",
                    left: d,
                    right: j.rows(),
                });
            }
        }
        let jump_grams = jumps.iter().map(|f| &f.dagger() * f).collect();
        Ok(Lindbladian {
            hamiltonian,
            jumps,
            jump_grams,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[CMatrix] {
        &self.jumps
    }

    /// L applied to an arbitrary matrix (no state validation).
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let mut out = commutator(&self.hamiltonian, a).scale(C64::new(0.0, -1.0));
        for (f, gram) in self.jumps.iter().zip(&self.jump_grams) {
            let sandwich = &(f * a) * &f.dagger();
            out = &out + &(&sandwich - &anticommutator(gram, a).scale(C64::new(0.5, 0.0)));
        }
        out
    }

    /// L^dag applied to an arbitrary matrix.
    pub fn apply_adjoint_to(&self, a: &CMatrix) -> CMatrix {
        let mut out = commutator(&self.hamiltonian, a).scale(C64::new(0.0, 1.0));
        for (f, gram) in self.jumps.iter().zip(&self.jump_grams) {
            let sandwich = &(&f.dagger() * a) * f;
            out = &out + &(&sandwich - &anticommutator(gram, a).scale(C64::new(0.5, 0.0)));
        }
        out
    }

    /// L rho for a validated state. The result is traceless and Hermitian
    /// by construction.
    pub fn apply_generator(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "apply_generator",
                left: self.dim(),
                right: rho.dim(),
            });
        }
        Ok(self.apply(rho.matrix()))
    }

    /// L^dag rho for a validated state.
    pub fn apply_adjoint(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "apply_adjoint",
                left: self.dim(),
                right: rho.dim(),
            });
        }
        Ok(self.apply_adjoint_to(rho.matrix()))
    }

    /// The d^2 x d^2 matrix representing L under row-major vectorization,
    /// where vec(A rho B) = (A kron B^T) vec(rho).
    pub fn liouvillian_matrix(&self) -> Result<CMatrix> {
        let d = self.dim();
        let id = CMatrix::identity(d);
        let h = &self.hamiltonian;
        // -i (H kron I - I kron H^T)
        let mut m = (&h.kron(&id)? - &id.kron(&h.transpose())?).scale(C64::new(0.0, -1.0));
        for (f, gram) in self.jumps.iter().zip(&self.jump_grams) {
            let sandwich = f.kron(&f.conj())?;
            let left = gram.kron(&id)?;
            let right = id.kron(&gram.transpose())?;
            m = &m + &(&sandwich - &(&left + &right).scale(C64::new(0.5, 0.0)));
        }
        Ok(m)
    }

    /// Exact state at a single time via expm(t L).
    pub fn evolve_at(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        let m = self.liouvillian_matrix()?;
        self.evolve_at_with(&m, rho0, t)
    }

    /// Like [`evolve_at`](Self::evolve_at) with a precomputed Liouvillian,
    /// so scans do not rebuild it.
    pub fn evolve_at_with(
        &self,
        liouvillian: &CMatrix,
        rho0: &DensityMatrix,
        t: f64,
    ) -> Result<DensityMatrix> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::ParameterOutOfRange {
                what: format!("evolution time {t} must be finite and nonnegative"),
            });
        }
        if rho0.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "evolve",
                left: self.dim(),
                right: rho0.dim(),
            });
        }
        let d = self.dim();
        let propagator = expm(&liouvillian.scale(C64::new(t, 0.0)))?;
        let v0 = Array1::from_iter(rho0.matrix().as_array().iter().copied());
        let vt = propagator.as_array().dot(&v0);
        let mat = CMatrix::from_fn(d, d, |i, j| vt[i * d + j])?;
        DensityMatrix::new(mat).map_err(|e| Error::EvolutionInvariantViolated {
            reason: format!("at t = {t}: {e}"),
        })
    }

    /// Trajectory at the requested times. Each sample is re-validated and
    /// carries the relative purity against `rho0`.
    pub fn evolve(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<TrajectorySample>> {
        let m = self.liouvillian_matrix()?;
        times
            .iter()
            .map(|&t| {
                let rho = self.evolve_at_with(&m, rho0, t)?;
                let f = relative_purity(rho0, &rho)?;
                Ok(TrajectorySample { t, rho, f })
            })
            .collect()
    }
}

/// Fixed-step classical RK4 over matrix-valued states. Returns every step
/// including t = 0; the final step is shortened to land exactly on t_end.
pub(crate) fn rk4_raw(
    rhs: &dyn Fn(f64, &CMatrix) -> CMatrix,
    y0: &CMatrix,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, CMatrix)>> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            what: format!("dt = {dt} must be positive"),
        });
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::ParameterOutOfRange {
            what: format!("t_end = {t_end} must be finite and nonnegative"),
        });
    }
    let n_steps = (t_end / dt).ceil() as usize;
    if n_steps > MAX_RK4_STEPS {
        return Err(Error::ParameterOutOfRange {
            what: format!("{n_steps} RK4 steps exceed the cap of {MAX_RK4_STEPS}"),
        });
    }
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut y = y0.clone();
    let mut t = 0.0;
    out.push((t, y.clone()));
    for step in 0..n_steps {
        let h = if step + 1 == n_steps { t_end - t } else { dt };
        let k1 = rhs(t, &y);
        let y2 = &y + &k1.scale(C64::new(h / 2.0, 0.0));
        let k2 = rhs(t + h / 2.0, &y2);
        let y3 = &y + &k2.scale(C64::new(h / 2.0, 0.0));
        let k3 = rhs(t + h / 2.0, &y3);
        let y4 = &y + &k3.scale(C64::new(h, 0.0));
        let k4 = rhs(t + h, &y4);
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(C64::new(2.0, 0.0));
        y = &y + &incr.scale(C64::new(h / 6.0, 0.0));
        t = if step + 1 == n_steps { t_end } else { t + h };
        out.push((t, y.clone()));
    }
    Ok(out)
}

/// Generator that changes with time, presented as a closure t -> Lindbladian.
pub struct TimeDependentLindbladian {
    generator_at: Box<dyn Fn(f64) -> Lindbladian + Send + Sync>,
}

impl TimeDependentLindbladian {
    pub fn new(generator_at: impl Fn(f64) -> Lindbladian + Send + Sync + 'static) -> Self {
        TimeDependentLindbladian {
            generator_at: Box::new(generator_at),
        }
    }

    pub fn at(&self, t: f64) -> Lindbladian {
        (self.generator_at)(t)
    }

    /// Fixed-step RK4 integration of d rho/dt = L(t) rho. Every step is
    /// validated as a density matrix; a violation rejects the step size.
    pub fn evolve(
        &self,
        rho0: &DensityMatrix,
        t_end: f64,
        dt: f64,
    ) -> Result<Vec<TrajectorySample>> {
        let rhs = |t: f64, y: &CMatrix| self.at(t).apply(y);
        let raw = rk4_raw(&rhs, rho0.matrix(), t_end, dt)?;
        raw.into_iter()
            .map(|(t, mat)| {
                let rho = DensityMatrix::new(mat).map_err(|e| Error::StepRejected {
                    t,
                    reason: e.to_string(),
                })?;
                let f = relative_purity(rho0, &rho)?;
                Ok(TrajectorySample { t, rho, f })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eig, trace_product};
    use crate::quantum::{
        basis_state, bloch_to_density, ghz, pauli, plus_state, sigma_on, Axis, BlochState,
    };
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dephasing_1q(gamma: f64) -> Lindbladian {
        let jump = pauli(Axis::Z).scale(c(gamma.sqrt(), 0.0));
        Lindbladian::new(CMatrix::zeros(2, 2), vec![jump]).unwrap()
    }

    fn isotropic_1q(gamma: f64) -> Lindbladian {
        let s = (2.0 * gamma).sqrt();
        let jumps = [Axis::X, Axis::Y, Axis::Z]
            .into_iter()
            .map(|ax| pauli(ax).scale(c(s, 0.0)))
            .collect();
        Lindbladian::new(CMatrix::zeros(2, 2), jumps).unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .unwrap();
        (&m + &m.dagger()).scale(c(0.5, 0.0))
    }

    fn random_lindbladian(rng: &mut ChaCha8Rng, d: usize, n_jumps: usize) -> Lindbladian {
        let h = random_hermitian(rng, d);
        let jumps = (0..n_jumps)
            .map(|_| {
                CMatrix::from_fn(d, d, |_, _| {
                    c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
                })
                .unwrap()
            })
            .collect();
        Lindbladian::new(h, jumps).unwrap()
    }

    #[test]
    fn stationary_state_maps_to_zero() {
        // |0><0| commutes with sigma_z and is a dephasing fixed point.
        let lind = Lindbladian::new(pauli(Axis::Z), vec![pauli(Axis::Z)]).unwrap();
        let rho = basis_state(2, 0).unwrap();
        let out = lind.apply_generator(&rho).unwrap();
        assert!(out.max_abs() == 0.0);
    }

    #[test]
    fn dephasing_generator_kills_coherences() {
        let gamma = 0.7;
        let lind = dephasing_1q(gamma);
        let out = lind.apply_generator(&plus_state()).unwrap();
        // L rho = [[0, -gamma], [-gamma, 0]] on |+>.
        assert_relative_eq!(out.get(0, 0).re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(out.get(0, 1).re, -gamma, epsilon = 1e-14);
        assert_relative_eq!(out.get(1, 0).re, -gamma, epsilon = 1e-14);
    }

    #[test]
    fn isotropic_generator_shrinks_bloch_vector() {
        // L rho = -4 gamma (r . sigma) for rho = (I + r . sigma)/2.
        let gamma = 0.9;
        let b = BlochState::new(0.2, -0.5, 0.6).unwrap();
        let out = isotropic_1q(gamma)
            .apply_generator(&bloch_to_density(&b))
            .unwrap();
        let expect = &(&(&pauli(Axis::X) * (b.r1 * -4.0 * gamma))
            + &(&pauli(Axis::Y) * (b.r2 * -4.0 * gamma)))
            + &(&pauli(Axis::Z) * (b.r3 * -4.0 * gamma));
        assert!((&out - &expect).max_abs() < 1e-13);
    }

    #[test]
    fn adjoint_of_unitary_part_flips_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 3);
        let lind = Lindbladian::new(h, vec![]).unwrap();
        let a = random_hermitian(&mut rng, 3);
        let fwd = lind.apply(&a);
        let adj = lind.apply_adjoint_to(&a);
        assert!((&fwd + &adj).max_abs() < 1e-13);
    }

    #[test]
    fn adjoint_speed_of_dephased_plus() {
        // tr[(L^dag rho0)^2] = 2 gamma^2 on |+>.
        let gamma = 1.3;
        let lind = dephasing_1q(gamma);
        let a = lind.apply_adjoint(&plus_state()).unwrap();
        let tr = trace_product(&a, &a).re;
        assert_relative_eq!(tr, 2.0 * gamma * gamma, epsilon = 1e-12);
    }

    #[test]
    fn adjoint_speed_of_ghz_under_local_dephasing() {
        // Local sigma_z jumps on every site: tr[(L^dag rho0)^2] = 2 N^2 gamma^2.
        let gamma: f64 = 0.45;
        let n = 3;
        let jumps: Vec<CMatrix> = (0..n)
            .map(|k| sigma_on(n, k, Axis::Z).unwrap().scale(c(gamma.sqrt(), 0.0)))
            .collect();
        let lind = Lindbladian::new(CMatrix::zeros(8, 8), jumps).unwrap();
        let a = lind.apply_adjoint(&ghz(n).unwrap()).unwrap();
        let tr = trace_product(&a, &a).re;
        assert_relative_eq!(tr, 2.0 * (n as f64).powi(2) * gamma * gamma, epsilon = 1e-12);
    }

    #[test]
    fn adjoint_duality_on_random_generators() {
        // tr[(L^dag a) b] = tr[a (L b)].
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..8 {
            let lind = random_lindbladian(&mut rng, 3, 2);
            let a = random_hermitian(&mut rng, 3);
            let b = random_hermitian(&mut rng, 3);
            let lhs = trace_product(&lind.apply_adjoint_to(&a), &b);
            let rhs = trace_product(&a, &lind.apply(&b));
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn liouvillian_matches_direct_application() {
        // Row-major vectorization: M vec(rho) = vec(L rho).
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let lind = random_lindbladian(&mut rng, 3, 2);
        let m = lind.liouvillian_matrix().unwrap();
        let rho = random_hermitian(&mut rng, 3);
        let direct = lind.apply(&rho);
        let d = 3;
        for i in 0..d {
            for j in 0..d {
                let mut acc = c(0.0, 0.0);
                for k in 0..d {
                    for l in 0..d {
                        acc += m.get(i * d + j, k * d + l) * rho.get(k, l);
                    }
                }
                assert!((acc - direct.get(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn liouvillian_trace_positions_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let lind = random_lindbladian(&mut rng, 3, 3);
        let m = lind.liouvillian_matrix().unwrap();
        let d = 3;
        for col in 0..d * d {
            let sum: C64 = (0..d).map(|i| m.get(i * d + i, col)).sum();
            assert!(sum.norm() < 1e-10, "column {col} trace sum {sum}");
        }
    }

    #[test]
    fn dephasing_liouvillian_spectrum() {
        let gamma = 0.6;
        let m = dephasing_1q(gamma).liouvillian_matrix().unwrap();
        // This Liouvillian is diagonal; eigenvalues are {0, -2g, -2g, 0}.
        let mut diag: Vec<f64> = (0..4).map(|i| m.get(i, i).re).collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(diag[0], -2.0 * gamma, epsilon = 1e-14);
        assert_relative_eq!(diag[1], -2.0 * gamma, epsilon = 1e-14);
        assert_relative_eq!(diag[2], 0.0, epsilon = 1e-14);
        assert_relative_eq!(diag[3], 0.0, epsilon = 1e-14);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(m.get(i, j).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn isotropic_liouvillian_spectrum() {
        // Nonzero eigenvalues all equal -8 gamma; this one is Hermitian.
        let gamma = 0.31;
        let m = isotropic_1q(gamma).liouvillian_matrix().unwrap();
        let eig = herm_eig(&m).unwrap();
        assert_relative_eq!(eig.eigenvalues[3], 0.0, epsilon = 1e-12);
        for i in 0..3 {
            assert_relative_eq!(eig.eigenvalues[i], -8.0 * gamma, epsilon = 1e-12);
        }
    }

    #[test]
    fn evolve_reproduces_dephasing_closed_form() {
        let gamma = 0.8;
        let lind = dephasing_1q(gamma);
        let rho0 = plus_state();
        let times: Vec<f64> = (0..9).map(|i| 0.25 * i as f64).collect();
        let traj = lind.evolve(&rho0, &times).unwrap();
        assert_relative_eq!(traj[0].f, 1.0, epsilon = 1e-12);
        for s in &traj {
            let decay = (-2.0 * gamma * s.t).exp();
            assert_relative_eq!(s.rho.matrix().get(0, 1).re, 0.5 * decay, epsilon = 1e-10);
            assert_relative_eq!(s.f, (1.0 + decay) / 2.0, epsilon = 1e-10);
            // Unital dynamics never increases purity.
            assert!(s.rho.purity() <= rho0.purity() + 1e-10);
        }
    }

    #[test]
    fn evolve_td_matches_constant_generator() {
        let gamma = 0.8;
        let rho0 = plus_state();
        let t_end = 1.2;
        let exact = dephasing_1q(gamma).evolve(&rho0, &[t_end]).unwrap();
        let td = TimeDependentLindbladian::new(move |_| dephasing_1q(gamma));
        let traj = td.evolve(&rho0, t_end, 1e-3).unwrap();
        let last = traj.last().unwrap();
        assert_relative_eq!(last.t, t_end, epsilon = 1e-12);
        assert!((last.rho.matrix() - exact[0].rho.matrix()).max_abs() < 1e-8);
    }

    #[test]
    fn evolve_td_ramped_rate_quadrature_oracle() {
        // gamma(t) = g0 (1 + t/tau): off-diagonal decays by
        // exp(-2 g0 (t + t^2 / (2 tau))).
        let g0 = 0.8;
        let tau = 2.0;
        let td = TimeDependentLindbladian::new(move |t| dephasing_1q(g0 * (1.0 + t / tau)));
        let t_end = 1.0;
        let traj = td.evolve(&plus_state(), t_end, 1e-3).unwrap();
        let expect = 0.5 * (-2.0 * g0 * (t_end + t_end * t_end / (2.0 * tau))).exp();
        assert_relative_eq!(
            traj.last().unwrap().rho.matrix().get(0, 1).re,
            expect,
            epsilon = 1e-7
        );
    }

    #[test]
    fn rk4_is_fourth_order() {
        // Successive dt halvings shrink the endpoint difference ~16x.
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let lind = random_lindbladian(&mut rng, 2, 1);
        let rho0 = plus_state();
        let rhs = |_: f64, y: &CMatrix| lind.apply(y);
        let end = |dt: f64| {
            rk4_raw(&rhs, rho0.matrix(), 1.0, dt)
                .unwrap()
                .pop()
                .unwrap()
                .1
        };
        let (a, b, cm) = (end(0.1), end(0.05), end(0.025));
        let ratio = (&a - &b).max_abs() / (&b - &cm).max_abs();
        assert!(
            (10.0..25.0).contains(&ratio),
            "convergence ratio {ratio} not ~16"
        );
    }

    #[test]
    fn rate_bound_along_random_trajectories() {
        // |df/dt| <= sqrt(tr[(L^dag rho0)^2]) / tr rho0^2 everywhere.
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for _ in 0..6 {
            let lind = random_lindbladian(&mut rng, 3, 2);
            let g = CMatrix::from_fn(3, 3, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .unwrap();
            let gram = &g * &g.dagger();
            let rho0 = DensityMatrix::new(gram.scale((1.0 / gram.trace().re).into())).unwrap();
            let a = lind.apply_adjoint(&rho0).unwrap();
            let v = trace_product(&a, &a).re.sqrt();
            let cap = v / rho0.purity();
            let m = lind.liouvillian_matrix().unwrap();
            for &t in &[0.05, 0.3, 1.0, 2.5] {
                let h = 1e-5;
                let fp = relative_purity(&rho0, &lind.evolve_at_with(&m, &rho0, t + h).unwrap())
                    .unwrap();
                let fm = relative_purity(&rho0, &lind.evolve_at_with(&m, &rho0, t - h).unwrap())
                    .unwrap();
                let df = (fp - fm) / (2.0 * h);
                assert!(
                    df.abs() <= cap + 1e-6,
                    "rate {df} exceeds cap {cap} at t = {t}"
                );
            }
        }
    }

    #[test]
    fn evolve_rejects_negative_time() {
        let lind = dephasing_1q(1.0);
        assert!(lind.evolve(&plus_state(), &[-0.5]).is_err());
    }
}
