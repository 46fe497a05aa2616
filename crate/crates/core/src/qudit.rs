//! Level-space layout, states and unitaries shared by every other module.
//!
//! A qudit of dimension `d` lives in a `2d`-level space: ground levels
//! `|1⟩..|d⟩`, excited levels `|e_1⟩..|e_{d-1}⟩` and one auxiliary level
//! `|a⟩`, stored in that order. The computational subspace is therefore the
//! leading `d × d` block of every operator.

use ndarray::s;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix, Vector, C64};

/// Default tolerance for the `U†U = I` check.
pub const UNITARY_TOL: f64 = 1e-8;

/// Index map for one qudit with its excited and auxiliary levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpace {
    d: usize,
}

/// Which block a level belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Computational,
    Excited,
    Auxiliary,
}

impl LevelSpace {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::usage(format!("qudit dimension must be >= 2, got {d}")));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Total number of levels, `2d`.
    pub fn dim(&self) -> usize {
        2 * self.d
    }

    /// Index of ground level `|k⟩`, `k` in `1..=d`.
    pub fn ground(&self, k: usize) -> usize {
        debug_assert!((1..=self.d).contains(&k));
        k - 1
    }

    /// Index of excited level `|e_l⟩`, `l` in `1..=d-1`.
    pub fn excited(&self, l: usize) -> usize {
        debug_assert!((1..self.d).contains(&l));
        self.d - 1 + l
    }

    pub fn auxiliary(&self) -> usize {
        2 * self.d - 1
    }

    pub fn block_of(&self, index: usize) -> Block {
        if index < self.d {
            Block::Computational
        } else if index < 2 * self.d - 1 {
            Block::Excited
        } else {
            Block::Auxiliary
        }
    }

    /// Human-readable label of a level, e.g. `1`, `e2`, `a`.
    pub fn label(&self, index: usize) -> String {
        match self.block_of(index) {
            Block::Computational => format!("{}", index + 1),
            Block::Excited => format!("e{}", index + 1 - self.d),
            Block::Auxiliary => "a".to_string(),
        }
    }

    /// Embed a `d`-component vector of ground amplitudes into the full space.
    pub fn embed_ground(&self, ground: &QuditState) -> Result<QuditState> {
        check_dim(self.d, ground.dim())?;
        let mut amps = Vector::zeros(self.dim());
        amps.slice_mut(s![..self.d]).assign(ground.amplitudes());
        Ok(QuditState { amps })
    }

    /// Ground-level vector `|k⟩` in the full space.
    pub fn ground_state(&self, k: usize) -> Result<QuditState> {
        if !(1..=self.d).contains(&k) {
            return Err(Error::usage(format!("ground level {k} outside 1..={}", self.d)));
        }
        Ok(QuditState::basis(self.dim(), self.ground(k)))
    }
}

/// A pure state as a dense amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    amps: Vector,
}

impl QuditState {
    /// Wrap amplitudes, rescaling to unit norm. A zero vector is rejected.
    pub fn normalized(amps: Vector) -> Result<Self> {
        let n = linalg::norm(&amps);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::usage("state vector has zero or non-finite norm"));
        }
        Ok(Self { amps: amps.mapv(|z| z / n) })
    }

    /// Wrap amplitudes as-is. Intended for outputs of unitary evolution.
    pub fn from_raw(amps: Vector) -> Self {
        Self { amps }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = Vector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn from_reals(values: &[f64]) -> Result<Self> {
        Self::normalized(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Vector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vector {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn inner(&self, other: &QuditState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(linalg::inner(&self.amps, &other.amps))
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// A square matrix that passed the unitarity check on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    m: Matrix,
}

impl Unitary {
    pub fn new(m: Matrix) -> Result<Self> {
        Self::with_tolerance(m, UNITARY_TOL)
    }

    pub fn with_tolerance(m: Matrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::usage(format!("unitary must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        let dev = linalg::unitarity_deviation(&m);
        if !(dev < tol) {
            return Err(Error::Numerical(format!("matrix is not unitary: max|U†U - I| = {dev:e}")));
        }
        Ok(Self { m })
    }

    /// Skip the unitarity check. The caller vouches for the matrix.
    pub(crate) fn unchecked(m: Matrix) -> Self {
        Self { m }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: linalg::eye(n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn dagger(&self) -> Self {
        Self { m: linalg::dagger(&self.m) }
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn then_after(&self, other: &Unitary) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { m: self.m.dot(&other.m) })
    }

    pub fn apply(&self, psi: &QuditState) -> Result<QuditState> {
        check_dim(self.dim(), psi.dim())?;
        Ok(QuditState { amps: self.m.dot(psi.amplitudes()) })
    }

    pub fn unitarity_deviation(&self) -> f64 {
        linalg::unitarity_deviation(&self.m)
    }

    /// Leading `n × n` block. For a full-space propagator with `n = d` this is
    /// its action on the computational subspace.
    pub fn leading_block(&self, n: usize) -> Result<Matrix> {
        if n > self.dim() {
            return Err(Error::usage(format!("block {n} larger than matrix {}", self.dim())));
        }
        Ok(self.m.slice(s![..n, ..n]).to_owned())
    }
}

/// `|⟨ψ|ψ̃⟩|`, clamped to `[0, 1]` against round-off.
pub fn fidelity(psi: &QuditState, psi_tilde: &QuditState) -> Result<f64> {
    Ok(psi.inner(psi_tilde)?.norm().min(1.0))
}

/// Global-phase-invariant distance `1 − |tr(U†V)|/n`.
pub fn gate_distance(u: &Unitary, v: &Unitary) -> Result<f64> {
    matrix_distance(u.matrix(), v.matrix())
}

/// [`gate_distance`] on raw matrices of the same shape.
pub fn matrix_distance(u: &Matrix, v: &Matrix) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::usage(format!("shape mismatch: {:?} vs {:?}", u.dim(), v.dim())));
    }
    let n = u.nrows() as f64;
    let overlap: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok((1.0 - overlap.norm() / n).max(0.0))
}

/// Haar-random unit vector of length `dim`, deterministic per seed.
///
/// Components are independent complex standard normals, then normalized.
pub fn random_state(dim: usize, seed: u64) -> Result<QuditState> {
    if dim < 1 {
        return Err(Error::usage("random_state needs dim >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_state_with(dim, &mut rng))
}

pub(crate) fn random_state_with<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> QuditState {
    loop {
        let amps: Vector = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im)
            })
            .collect();
        if let Ok(state) = QuditState::normalized(amps) {
            return state;
        }
    }
}

/// Haar-random `n × n` unitary: QR of a Ginibre matrix with the phases of
/// `R`'s diagonal folded back into `Q`.
pub fn random_unitary(n: usize, seed: u64) -> Unitary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<QuditState> = (0..n).map(|_| random_state_with(n, &mut rng)).collect();
    // modified Gram–Schmidt, which yields Q with positive diag(R)
    let mut q = Matrix::zeros((n, n));
    for (j, col) in cols.iter().enumerate() {
        let mut v = col.amplitudes().clone();
        for k in 0..j {
            let qk = q.column(k).to_owned();
            let proj = linalg::inner(&qk, &v);
            v = v - qk.mapv(|z| z * proj);
        }
        let nv = linalg::norm(&v);
        q.column_mut(j).assign(&v.mapv(|z| z / nv));
    }
    Unitary::unchecked(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eye, ONE};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn level_space_index_map_is_bijective() {
        for d in 2..8 {
            let sp = LevelSpace::new(d).unwrap();
            let mut seen = vec![false; sp.dim()];
            for k in 1..=d {
                seen[sp.ground(k)] = true;
            }
            for l in 1..d {
                seen[sp.excited(l)] = true;
            }
            seen[sp.auxiliary()] = true;
            assert!(seen.iter().all(|&b| b));
            assert_eq!(sp.block_of(sp.auxiliary()), Block::Auxiliary);
            assert_eq!(sp.block_of(sp.excited(1)), Block::Excited);
        }
        assert!(LevelSpace::new(1).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let psi = random_state(3, 11).unwrap();
        assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
        let one = QuditState::basis(3, 0);
        let two = QuditState::basis(3, 1);
        assert_eq!(fidelity(&one, &two).unwrap(), 0.0);
        let plus = QuditState::from_reals(&[1.0, 1.0, 0.0]).unwrap();
        assert!((fidelity(&one, &plus).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let a = QuditState::basis(3, 0);
        let b = QuditState::basis(4, 0);
        assert!(fidelity(&a, &b).unwrap_err().is_usage());
    }

    #[test]
    fn gate_distance_examples() {
        let id = Unitary::identity(3);
        assert_eq!(gate_distance(&id, &id).unwrap(), 0.0);
        let phased = Unitary::new(eye(3).mapv(|z| z * C64::from_polar(1.0, PI / 7.0))).unwrap();
        assert!(gate_distance(&id, &phased).unwrap() < 1e-15);
        let mut m = eye(3);
        m[[2, 2]] = -ONE;
        let flip = Unitary::new(m).unwrap();
        assert!((gate_distance(&id, &flip).unwrap() - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
        assert!(gate_distance(&id, &Unitary::identity(2)).unwrap_err().is_usage());
    }

    #[test]
    fn random_state_is_deterministic_and_normalized() {
        let a = random_state(3, 42).unwrap();
        let b = random_state(3, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_ne!(a, random_state(3, 43).unwrap());
        assert!(random_state(0, 1).is_err());
    }

    #[test]
    fn haar_first_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mean = (0..n).map(|_| random_state_with(3, &mut rng).amplitudes()[0].norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn unitary_rejects_non_unitary() {
        let m = eye(2).mapv(|z| z * 2.0);
        assert!(Unitary::new(m).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn fidelity_symmetric_and_bounded(s1 in any::<u64>(), s2 in any::<u64>(), dim in 1usize..7) {
            let a = random_state(dim, s1).unwrap();
            let b = random_state(dim, s2).unwrap();
            let fab = fidelity(&a, &b).unwrap();
            let fba = fidelity(&b, &a).unwrap();
            prop_assert!((0.0..=1.0).contains(&fab));
            prop_assert!((fab - fba).abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn gate_distance_ignores_global_phase(seed in any::<u64>(), alpha in 0.0..(2.0 * PI), n in 2usize..7) {
            let u = random_unitary(n, seed);
            prop_assert!(u.unitarity_deviation() < 1e-12);
            let v = Unitary::new(u.matrix().mapv(|z| z * C64::from_polar(1.0, alpha))).unwrap();
            prop_assert!(gate_distance(&u, &v).unwrap() < 1e-12);
        }
    }
}
