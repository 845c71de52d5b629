use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{ChainConfig, ControlAction, QuantumState, NUM_ACTIONS};
use crate::error::{Error, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;
/// Post-check on every exponential; anything worse than this is a solver failure.
const UNITARITY_GUARD: f64 = 1e-9;

/// Single-excitation restriction of the chain Hamiltonian for one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix(DMatrix<f64>);

impl HamiltonianMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let h = Self(entries);
        let asym = h.max_asymmetry();
        let scale = h.0.amax().max(1.0);
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(h)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.0 - self.0.transpose()).amax()
    }
}

/// Builds the reduced Hamiltonian for `action`.
///
/// Hopping between neighbours is `2·coupling`. A field B on site k contributes
/// `B·σᶻ_k`; with the excitation in |1⟩ (σᶻ = -1) this is `ΣB - 2B_k` on basis
/// state k. The constant `ΣB` is a global phase and is dropped, leaving `-2B`
/// on every driven site.
pub fn reduced_hamiltonian(config: &ChainConfig, action: &ControlAction) -> HamiltonianMatrix {
    let n = config.n_sites;
    let hop = config.hopping();
    let active = action.active_sites(n);
    let mut h = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        if active[k] {
            h[(k, k)] = -2.0 * config.field_strength;
        }
        if k + 1 < n {
            h[(k, k + 1)] = hop;
            h[(k + 1, k)] = hop;
        }
    }
    HamiltonianMatrix(h)
}

/// Unitary N×N matrix advancing the state across one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator(DMatrix<Complex64>);

impl Propagator {
    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn then_after(&self, other: &Propagator) -> Self {
        Self(&self.0 * &other.0)
    }

    /// max |U†U − I| over all entries.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        let prod = self.0.adjoint() * &self.0;
        (prod - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise distance to `other` after removing the best global phase.
    pub fn distance_up_to_phase(&self, other: &Propagator) -> f64 {
        let overlap: Complex64 = self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| b.conj() * a)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }
}

/// exp(i·h·t) through the spectral decomposition h = V Λ Vᵀ.
pub fn hermitian_expm(h: &HamiltonianMatrix, t: f64) -> Result<Propagator> {
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.entries().clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNonConvergence(n))?;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, lambda * t))
        .collect();
    let v = &eig.eigenvectors;
    let u = DMatrix::from_fn(n, n, |j, k| {
        (0..n)
            .map(|m| phases[m] * (v[(j, m)] * v[(k, m)]))
            .sum::<Complex64>()
    });
    let u = Propagator(u);
    let err = u.unitarity_error();
    if !err.is_finite() || err > UNITARITY_GUARD {
        return Err(Error::NonUnitary(err));
    }
    Ok(u)
}

/// `u · s`.
pub fn apply(u: &Propagator, s: &QuantumState) -> Result<QuantumState> {
    if u.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: s.dim(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); s.dim()];
    matvec(u.matrix().iter().copied(), u.dim(), s.amplitudes(), &mut out);
    Ok(QuantumState::from_unchecked(out))
}

// Column-major entries, as nalgebra stores them.
fn matvec(col_major: impl Iterator<Item = Complex64>, n: usize, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    for (idx, a) in col_major.enumerate() {
        let (row, col) = (idx % n, idx / n);
        y[row] += a * x[col];
    }
}

/// The 16 one-interval propagators of a chain, indexed by action id.
#[derive(Debug, Clone)]
pub struct PropagatorSet {
    config: ChainConfig,
    propagators: Vec<Propagator>,
    // Row-major copies of all propagators for the hot evolution loop.
    rows: Vec<Complex64>,
}

impl PropagatorSet {
    pub fn build(config: &ChainConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_sites;
        let propagators = (0..NUM_ACTIONS)
            .map(|id| {
                let action = ControlAction::from_id(id)?;
                hermitian_expm(&reduced_hamiltonian(config, &action), config.dt)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(NUM_ACTIONS * n * n);
        for u in &propagators {
            for i in 0..n {
                for j in 0..n {
                    rows.push(u.matrix()[(i, j)]);
                }
            }
        }
        Ok(Self {
            config: *config,
            propagators,
            rows,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn n_sites(&self) -> usize {
        self.config.n_sites
    }

    pub fn get(&self, id: usize) -> Result<&Propagator> {
        self.propagators.get(id).ok_or(Error::InvalidAction(id))
    }

    pub fn propagators(&self) -> &[Propagator] {
        &self.propagators
    }

    /// `dst = U[id] · src` without allocating. `id` must be below 16.
    pub fn apply_into(&self, id: usize, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.config.n_sites;
        let block = &self.rows[id * n * n..(id + 1) * n * n];
        for (row, out) in block.chunks_exact(n).zip(dst.iter_mut()) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, x) in row.iter().zip(src) {
                acc += a * x;
            }
            *out = acc;
        }
    }

    /// Fidelity toward the last site after each action of `seq`, written into `out`.
    ///
    /// Starts from the excitation on site 1. Ids are not validated.
    pub(crate) fn transfer_profile_into(&self, seq: &[usize], out: &mut Vec<f64>) {
        let n = self.config.n_sites;
        let mut cur = vec![Complex64::new(0.0, 0.0); n];
        let mut next = cur.clone();
        cur[0] = Complex64::new(1.0, 0.0);
        out.clear();
        for &id in seq {
            self.apply_into(id, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            out.push(cur[n - 1].norm_sqr().min(1.0));
        }
    }
}

pub(crate) fn check_ids(seq: &[usize]) -> Result<()> {
    match seq.iter().find(|&&id| id >= NUM_ACTIONS) {
        Some(&bad) => Err(Error::InvalidAction(bad)),
        None => Ok(()),
    }
}

/// Trajectory ψ₁..ψ_L, where ψ_j applies `seq[j-1]` to ψ_{j-1}.
pub fn evolve_sequence(
    set: &PropagatorSet,
    initial: &QuantumState,
    seq: &[usize],
) -> Result<Vec<QuantumState>> {
    check_ids(seq)?;
    let n = set.n_sites();
    if initial.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: initial.dim(),
        });
    }
    let mut cur = initial.amplitudes().to_vec();
    let mut trajectory = Vec::with_capacity(seq.len());
    for &id in seq {
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        set.apply_into(id, &cur, &mut next);
        trajectory.push(QuantumState::from_unchecked(next.clone()));
        cur = next;
    }
    Ok(trajectory)
}

/// Uncontrolled transfer probability from site 1 to site N, sampled at
/// `samples` uniformly spaced times on `[0, t_max]`.
pub fn natural_evolution(config: &ChainConfig, t_max: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidConfig(format!("t_max must be positive, got {t_max}")));
    }
    if samples < 2 {
        return Err(Error::InvalidConfig(format!("samples must be at least 2, got {samples}")));
    }
    let n = config.n_sites;
    let free = reduced_hamiltonian(config, &ControlAction::from_id(0)?);
    let eig = SymmetricEigen::try_new(free.entries().clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNonConvergence(n))?;
    // ⟨N| e^{iHt} |1⟩ = Σ_m V[N,m] V[1,m] e^{iλ_m t}
    let weights: Vec<f64> = (0..n)
        .map(|m| eig.eigenvectors[(n - 1, m)] * eig.eigenvectors[(0, m)])
        .collect();
    let step = t_max / (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| {
            let t = if i + 1 == samples { t_max } else { i as f64 * step };
            let amp: Complex64 = eig
                .eigenvalues
                .iter()
                .zip(&weights)
                .map(|(&lambda, &w)| Complex64::from_polar(w, lambda * t))
                .sum();
            (t, amp.norm_sqr().min(1.0))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use proptest::prelude::*;

    fn chain(n: usize) -> ChainConfig {
        ChainConfig::new(n)
    }

    #[test]
    fn free_hamiltonian_is_tridiagonal() {
        let cfg = chain(4);
        let h = reduced_hamiltonian(&cfg, &ControlAction::from_id(0).unwrap());
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[0., 2., 0., 0., 2., 0., 2., 0., 0., 2., 0., 2., 0., 0., 2., 0.],
        );
        assert_eq!(h.entries(), &expected);
    }

    #[test]
    fn every_action_gives_exactly_symmetric_matrix() {
        for n in [4, 5, 6, 9] {
            for id in 0..16 {
                let h = reduced_hamiltonian(&chain(n), &ControlAction::from_id(id).unwrap());
                assert_eq!(h.max_asymmetry(), 0.0);
            }
        }
    }

    #[test]
    fn single_left_field_only_touches_site_one() {
        let cfg = ChainConfig {
            field_strength: 10.0,
            ..chain(6)
        };
        let h = reduced_hamiltonian(&cfg, &ControlAction::from_id(1).unwrap());
        let diag: Vec<f64> = h.entries().diagonal().iter().copied().collect();
        assert_eq!(diag, vec![-20.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(HamiltonianMatrix::new(m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let h = HamiltonianMatrix::new(DMatrix::zeros(5, 5)).unwrap();
        let u = hermitian_expm(&h, 3.7).unwrap();
        assert!(u.distance_up_to_phase(&Propagator::identity(5)) < 1e-15);
        assert_eq!(u, Propagator::identity(5));
    }

    #[test]
    fn two_site_transfer_is_sin_squared() {
        let h = reduced_hamiltonian(&chain(2), &ControlAction::from_id(0).unwrap());
        for &t in &[0.0, 0.1, 0.3, PI / 4.0, 1.7] {
            let u = hermitian_expm(&h, t).unwrap();
            let p = u.matrix()[(1, 0)].norm_sqr();
            assert!((p - (2.0 * t).sin().powi(2)).abs() < 1e-12, "t={t}");
            // Positive-exponent convention: U[1,0] = i·sin(2t).
            assert!((u.matrix()[(1, 0)] - Complex64::new(0.0, (2.0 * t).sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_checks_dimensions() {
        let u = Propagator::identity(3);
        let s = QuantumState::basis(4, 0);
        assert!(matches!(apply(&u, &s), Err(Error::DimensionMismatch { .. })));
        let s3 = QuantumState::basis(3, 1);
        assert_eq!(apply(&u, &s3).unwrap(), s3);
    }

    #[test]
    fn propagator_then_adjoint_recovers_state() {
        let set = PropagatorSet::build(&chain(7)).unwrap();
        let s = QuantumState::basis(7, 2);
        for u in set.propagators() {
            let back = apply(&u.adjoint(), &apply(u, &s).unwrap()).unwrap();
            let err = back
                .amplitudes()
                .iter()
                .zip(s.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn zero_field_makes_all_actions_equal() {
        let cfg = ChainConfig {
            field_strength: 0.0,
            ..chain(6)
        };
        let set = PropagatorSet::build(&cfg).unwrap();
        for u in set.propagators() {
            assert_eq!(u, set.get(0).unwrap());
        }
    }

    #[test]
    fn set_has_sixteen_unitaries() {
        let cfg = ChainConfig { dt: 0.1, ..chain(4) };
        let set = PropagatorSet::build(&cfg).unwrap();
        assert_eq!(set.propagators().len(), 16);
        for u in set.propagators() {
            assert_eq!(u.dim(), 4);
            assert!(u.unitarity_error() <= 1e-10);
        }
    }

    #[test]
    fn repeated_free_steps_match_free_evolution() {
        let cfg = ChainConfig { dt: 0.1, ..chain(5) };
        let set = PropagatorSet::build(&cfg).unwrap();
        let steps = 13;
        let direct = hermitian_expm(
            &reduced_hamiltonian(&cfg, &ControlAction::from_id(0).unwrap()),
            steps as f64 * cfg.dt,
        )
        .unwrap();
        let mut acc = Propagator::identity(5);
        for _ in 0..steps {
            acc = set.get(0).unwrap().then_after(&acc);
        }
        assert!(acc.distance_up_to_phase(&direct) < 1e-12);
    }

    #[test]
    fn evolve_empty_and_invalid() {
        let set = PropagatorSet::build(&chain(4)).unwrap();
        let s = QuantumState::basis(4, 0);
        assert!(evolve_sequence(&set, &s, &[]).unwrap().is_empty());
        assert!(matches!(evolve_sequence(&set, &s, &[0, 16]), Err(Error::InvalidAction(16))));
    }

    #[test]
    fn two_site_chain_transfers_in_two_quarter_steps() {
        let cfg = ChainConfig { dt: PI / 8.0, ..chain(2) };
        let set = PropagatorSet::build(&cfg).unwrap();
        let traj = evolve_sequence(&set, &QuantumState::basis(2, 0), &[0, 0]).unwrap();
        assert_eq!(traj.len(), 2);
        let p = transition_probability_to_last(&traj[1]);
        assert!((p - 1.0).abs() < 1e-12);
    }

    fn transition_probability_to_last(s: &QuantumState) -> f64 {
        super::super::transition_probability(s, &QuantumState::basis(s.dim(), s.dim() - 1))
    }

    #[test]
    fn natural_evolution_starts_at_zero() {
        for n in [2, 3, 8] {
            let series = natural_evolution(&chain(n), 5.0, 11).unwrap();
            assert_eq!(series.len(), 11);
            assert_eq!(series[0].0, 0.0);
            assert!(series[0].1.abs() < 1e-15);
            assert_eq!(series[10].0, 5.0);
        }
        assert!(natural_evolution(&chain(4), 1.0, 1).is_err());
        assert!(natural_evolution(&chain(4), 0.0, 5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn expm_composes(n in 2usize..9, id in 0usize..16, t1 in 0.0f64..2.0, t2 in 0.0f64..2.0) {
            let h = reduced_hamiltonian(&chain(n), &ControlAction::from_id(id).unwrap());
            let a = hermitian_expm(&h, t1).unwrap();
            let b = hermitian_expm(&h, t2).unwrap();
            let ab = hermitian_expm(&h, t1 + t2).unwrap();
            let err = (ab.matrix() - b.matrix() * a.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-9, "err {err}");
        }

        #[test]
        fn trajectories_stay_normalized(seq in prop::collection::vec(0usize..16, 0..40)) {
            let set = PropagatorSet::build(&chain(6)).unwrap();
            let traj = evolve_sequence(&set, &QuantumState::basis(6, 0), &seq).unwrap();
            prop_assert_eq!(traj.len(), seq.len());
            for s in &traj {
                prop_assert!((s.norm() - 1.0).abs() <= 1e-9);
            }
        }
    }
}
