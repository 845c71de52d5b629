//! Full 2ᴺ-dimensional construction of the chain, used to verify the
//! single-excitation reduction.
//!
//! The Hamiltonian is assembled from Pauli tensor products and exponentiated
//! with a scaled Taylor series followed by repeated squaring, so this path
//! shares no code with the spectral route in the parent module.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ChainConfig, ControlAction, Propagator};
use crate::error::{Error, Result};

/// Largest chain the oracle will build (256×256 matrices).
pub const MAX_ORACLE_SITES: usize = 8;

type CMatrix = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

// |0⟩ is the ground state (σᶻ = +1), |1⟩ the excitation.
fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Tensor product placing `ops[k]` on site k (site 0 is the leftmost factor).
fn embed(n: usize, ops: &[(usize, &CMatrix)]) -> CMatrix {
    let id2 = CMatrix::identity(2, 2);
    let mut acc = CMatrix::identity(1, 1);
    for site in 0..n {
        let factor = ops
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, m)| *m)
            .unwrap_or(&id2);
        acc = acc.kronecker(factor);
    }
    acc
}

/// Basis index of the state with only `site` excited.
pub fn single_excitation_index(n_sites: usize, site: usize) -> usize {
    1 << (n_sites - 1 - site)
}

/// H = J Σ (σˣσˣ + σʸσʸ) + Σ B_k σᶻ_k on the full 2ᴺ space.
pub fn full_hilbert_hamiltonian(config: &ChainConfig, action: &ControlAction) -> Result<CMatrix> {
    config.validate()?;
    let n = config.n_sites;
    if n > MAX_ORACLE_SITES {
        return Err(Error::OracleTooLarge(n));
    }
    let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..n - 1 {
        h += embed(n, &[(i, &x), (i + 1, &x)]) * c(config.coupling, 0.0);
        h += embed(n, &[(i, &y), (i + 1, &y)]) * c(config.coupling, 0.0);
    }
    for (k, on) in action.active_sites(n).into_iter().enumerate() {
        if on {
            h += embed(n, &[(k, &z)]) * c(config.field_strength, 0.0);
        }
    }
    Ok(h)
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// exp(m) by scaling, a Taylor series, and squaring.
fn expm_taylor(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm = one_norm(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m * c(0.5f64.powi(squarings), 0.0);
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        sum += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// exp(i·H·t) on the full 2ᴺ space.
pub fn full_hilbert_propagator(config: &ChainConfig, action: &ControlAction, t: f64) -> Result<CMatrix> {
    let h = full_hilbert_hamiltonian(config, action)?;
    Ok(expm_taylor(&(h * c(0.0, t))))
}

/// Single-excitation block of the full propagator, with the phase
/// `exp(i·t·ΣB)` from the dropped diagonal constant removed.
pub fn full_hilbert_oracle(config: &ChainConfig, action: &ControlAction, t: f64) -> Result<Propagator> {
    let n = config.n_sites;
    let full = full_hilbert_propagator(config, action, t)?;
    let total_field: f64 = action
        .active_sites(n)
        .iter()
        .filter(|&&on| on)
        .count() as f64
        * config.field_strength;
    let phase = Complex64::from_polar(1.0, -total_field * t);
    let block = CMatrix::from_fn(n, n, |j, k| {
        full[(single_excitation_index(n, j), single_excitation_index(n, k))] * phase
    });
    Ok(Propagator::from_matrix(block))
}

/// Largest matrix element connecting the single-excitation subspace to its complement.
pub fn excitation_leakage(full: &CMatrix, n_sites: usize) -> f64 {
    let dim = full.nrows();
    let inside = |idx: usize| idx.count_ones() == 1;
    let mut worst = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            if inside(a) != inside(b) {
                worst = worst.max(full[(a, b)].norm());
            }
        }
    }
    debug_assert_eq!(dim, 1 << n_sites);
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_large_chains() {
        let cfg = ChainConfig::new(9);
        let a = ControlAction::from_id(0).unwrap();
        assert!(matches!(full_hilbert_oracle(&cfg, &a, 0.1), Err(Error::OracleTooLarge(9))));
    }

    #[test]
    fn zero_time_is_identity() {
        let cfg = ChainConfig::new(4);
        let a = ControlAction::from_id(15).unwrap();
        let u = full_hilbert_oracle(&cfg, &a, 0.0).unwrap();
        assert_eq!(u, Propagator::identity(4));
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let cfg = ChainConfig::new(4);
        let h = full_hilbert_hamiltonian(&cfg, &ControlAction::from_id(9).unwrap()).unwrap();
        let err = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn taylor_matches_scalar_exponential() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 30.0), c(-1.0, 2.0)]));
        let e = expm_taylor(&m);
        assert!((e[(0, 0)] - c(0.0, 30.0).exp()).norm() < 1e-12);
        assert!((e[(1, 1)] - c(-1.0, 2.0).exp()).norm() < 1e-12);
    }
}
