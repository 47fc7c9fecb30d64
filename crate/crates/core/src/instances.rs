//! Random instance families.
//!
//! Distributions: eigenvalue magnitudes and matrix entries are uniform,
//! `l_hat` is uniform on `[-1, 1]^n` and `c_hat = 0`. All draws come from a
//! ChaCha8 stream seeded by `GenSpec::seed`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::model::{IntDomain, IqpInstance, LinearConstraint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Random orthogonal eigenbasis; `p` percent of the eigenvalues negative.
    DenseSpectrum { p: f64 },
    /// Each entry nonzero with probability `p / 100`.
    Sparse { p: f64 },
    /// Half the eigenvalues zero; each nonzero one negative with probability
    /// `p / 100`.
    LowRank { p: f64 },
}

impl Family {
    pub fn p(&self) -> f64 {
        match *self {
            Family::DenseSpectrum { p } | Family::Sparse { p } | Family::LowRank { p } => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::DenseSpectrum { .. } => "dense",
            Family::Sparse { .. } => "sparse",
            Family::LowRank { .. } => "lowrank",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Ternary,
    IntegerBox { lo: i64, hi: i64 },
    Custom(Vec<IntDomain>),
}

impl DomainSpec {
    pub fn integer_default() -> Self {
        DomainSpec::IntegerBox { lo: -10, hi: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintSpec {
    #[default]
    None,
    /// `sum_i x_i <= 0`.
    SumNonpositive,
    /// `a^T x <= b` with `a_i` uniform on `{1..5}` and `b` uniform on
    /// `{1..sum a}`.
    Knapsack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub family: Family,
    pub domain: DomainSpec,
    pub constraints: ConstraintSpec,
    pub seed: u64,
}

/// What was drawn, for the instance file header.
#[derive(Debug, Clone, PartialEq)]
pub struct GenMetadata {
    pub family: &'static str,
    pub p: f64,
    pub seed: u64,
    /// Number of negative eigenvalues put into the spectrum (dense and
    /// low-rank families).
    pub negative_eigenvalues: Option<usize>,
    pub zero_eigenvalues: Option<usize>,
    pub distributions: String,
}

pub fn generate(spec: &GenSpec) -> Result<IqpInstance> {
    generate_with_metadata(spec).map(|(i, _)| i)
}

pub fn generate_with_metadata(spec: &GenSpec) -> Result<(IqpInstance, GenMetadata)> {
    let n = spec.n;
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let p = spec.family.p();
    if !(0.0..=100.0).contains(&p) {
        return Err(invalid("p must lie in [0, 100]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut neg = None;
    let mut zeros = None;
    let q_hat = match spec.family {
        Family::DenseSpectrum { p } => {
            let k = ((p * n as f64) / 100.0).floor() as usize;
            let mut lambda: Vec<f64> = (0..n).map(|_| magnitude(&mut rng)).collect();
            for l in lambda.iter_mut().take(k) {
                *l = -*l;
            }
            neg = Some(k);
            zeros = Some(0);
            with_spectrum(&random_orthogonal(&mut rng, n), &lambda)
        }
        Family::Sparse { p } => {
            let raw = sparse_raw(&mut rng, n, p);
            SymMatrix::from_lower_fn(n, |i, j| 0.5 * (raw.get(i, j) + raw.get(j, i)))
        }
        Family::LowRank { p } => {
            let nz = n / 2;
            let mut lambda = vec![0.0; n];
            let mut count = 0;
            for l in lambda.iter_mut().skip(nz) {
                let m = magnitude(&mut rng);
                if rng.random_bool(p / 100.0) {
                    *l = -m;
                    count += 1;
                } else {
                    *l = m;
                }
            }
            neg = Some(count);
            zeros = Some(nz);
            with_spectrum(&random_orthogonal(&mut rng, n), &lambda)
        }
    };
    let l_hat: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let domains = match &spec.domain {
        DomainSpec::Ternary => vec![IntDomain::ternary(); n],
        DomainSpec::IntegerBox { lo, hi } => vec![IntDomain::new(*lo, *hi); n],
        DomainSpec::Custom(d) => d.clone(),
    };
    let linear = match spec.constraints {
        ConstraintSpec::None => vec![],
        ConstraintSpec::SumNonpositive => vec![LinearConstraint::new(vec![1.0; n], 0.0)],
        ConstraintSpec::Knapsack => {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(1..=5) as f64).collect();
            let total = a.iter().sum::<f64>() as i64;
            let b = rng.random_range(1..=total) as f64;
            vec![LinearConstraint::new(a, b)]
        }
    };
    let inst = IqpInstance::new(q_hat, l_hat, 0.0, domains, linear)?;
    let meta = GenMetadata {
        family: spec.family.name(),
        p,
        seed: spec.seed,
        negative_eigenvalues: neg,
        zero_eigenvalues: zeros,
        distributions: String::from(
            "eigenvalue magnitudes U(0,1]; sparse entries U[-1,1]; l_hat U[-1,1]; c_hat 0; orthogonal basis from Gaussian QR",
        ),
    };
    Ok((inst, meta))
}

fn magnitude(rng: &mut ChaCha8Rng) -> f64 {
    // U(0, 1]
    1.0 - rng.random::<f64>()
}

/// Unsymmetrized sparse draw: each entry zero with probability `1 - p/100`,
/// otherwise uniform on `[-1, 1]`.
pub fn sparse_raw(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Matrix {
    let prob = p / 100.0;
    Matrix::from_fn(n, n, |_, _| if rng.random_bool(prob) { rng.random_range(-1.0..=1.0) } else { 0.0 })
}

/// Orthogonal matrix from Gram-Schmidt on Gaussian columns (two passes).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= d * ci;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        cols.push(v);
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

fn with_spectrum(p: &Matrix, lambda: &[f64]) -> SymMatrix {
    let n = lambda.len();
    SymMatrix::from_lower_fn(n, |i, j| (0..n).map(|k| p.get(i, k) * lambda[k] * p.get(j, k)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_decompose;

    fn spec(family: Family, n: usize, seed: u64) -> GenSpec {
        GenSpec { n, family, domain: DomainSpec::Ternary, constraints: ConstraintSpec::None, seed }
    }

    #[test]
    fn spectrum_signs() {
        let q = generate(&spec(Family::DenseSpectrum { p: 0.0 }, 10, 1)).unwrap().q_hat;
        assert!(spectral_decompose(&q).unwrap().eigenvalues[0] > 0.0);
        let q = generate(&spec(Family::DenseSpectrum { p: 100.0 }, 10, 2)).unwrap().q_hat;
        assert!(*spectral_decompose(&q).unwrap().eigenvalues.last().unwrap() < 0.0);
    }

    #[test]
    fn negative_count_exact() {
        for (p, seed) in [(10.0, 3), (35.0, 4), (50.0, 5), (90.0, 6)] {
            let (inst, meta) = generate_with_metadata(&spec(Family::DenseSpectrum { p }, 20, seed)).unwrap();
            let ev = spectral_decompose(&inst.q_hat).unwrap().eigenvalues;
            let neg = ev.iter().filter(|&&l| l < 0.0).count();
            assert_eq!(neg, (p * 20.0 / 100.0) as usize);
            assert_eq!(meta.negative_eigenvalues, Some(neg));
        }
    }

    #[test]
    fn low_rank_matches_metadata() {
        let (inst, meta) = generate_with_metadata(&spec(Family::LowRank { p: 40.0 }, 12, 9)).unwrap();
        let ev = spectral_decompose(&inst.q_hat).unwrap().eigenvalues;
        assert_eq!(ev.iter().filter(|&&l| l < -1e-10).count(), meta.negative_eigenvalues.unwrap());
        assert_eq!(ev.iter().filter(|l| l.abs() <= 1e-10).count(), 6);
    }

    #[test]
    fn sparse_density() {
        let mut total = 0usize;
        let mut nz = 0usize;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = sparse_raw(&mut rng, 50, 25.0);
            for i in 0..50 {
                for j in 0..50 {
                    if i != j {
                        total += 1;
                        nz += (raw.get(i, j) != 0.0) as usize;
                    }
                }
            }
        }
        let density = nz as f64 / total as f64;
        assert!((0.15..=0.35).contains(&density), "density {density}");
    }

    #[test]
    fn deterministic() {
        let s = GenSpec {
            n: 8,
            family: Family::Sparse { p: 50.0 },
            domain: DomainSpec::integer_default(),
            constraints: ConstraintSpec::Knapsack,
            seed: 77,
        };
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
    }

    #[test]
    fn knapsack_ranges() {
        for seed in 0..30 {
            let s = GenSpec {
                n: 10,
                family: Family::DenseSpectrum { p: 50.0 },
                domain: DomainSpec::Ternary,
                constraints: ConstraintSpec::Knapsack,
                seed,
            };
            let inst = generate(&s).unwrap();
            let lc = &inst.linear[0];
            assert!(lc.a.iter().all(|&a| (1.0..=5.0).contains(&a) && a.fract() == 0.0));
            let total: f64 = lc.a.iter().sum();
            assert!(lc.rhs >= 1.0 && lc.rhs <= total && lc.rhs.fract() == 0.0);
        }
    }

    #[test]
    fn rejects_bad_p() {
        assert!(generate(&spec(Family::Sparse { p: 120.0 }, 3, 0)).is_err());
    }
}
