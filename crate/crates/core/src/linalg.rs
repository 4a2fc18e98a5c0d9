//! Dense complex linear algebra for 2x2 and 4x4 operators.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` underneath. The newtypes here
//! only add the invariants that the rest of the crate leans on: unitarity for
//! [`UnitaryMatrix`] and unit norm for [`PureState`].

use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default bound on `max |U^dag U - I|` for accepted unitaries.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Default bound on `| |psi| - 1 |` for accepted states.
pub const NORM_TOL: f64 = 1e-12;
/// Phases closer than this are treated as one degenerate eigenvalue.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Bound on the spectral reconstruction residual.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

/// Pauli index used by [`pauli`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli(p: Pauli) -> CMatrix {
    match p {
        Pauli::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Pauli::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Pauli::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// `sigma_p (x) sigma_p`.
pub fn pauli_pair(p: Pauli) -> CMatrix {
    let s = pauli(p);
    s.kronecker(&s)
}

pub fn diag(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_row_slice(entries))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus of `M^dag M - I`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    max_abs_diff(&(m.adjoint() * m), &identity(n))
}

/// Wrap an angle into `(-pi, pi]`.
///
/// Angles within `1e-12` of `-pi` are reported as `pi` so that a sign of
/// zero in an imaginary part does not decide the branch.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI + 1e-12 {
        t = PI;
    }
    t
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn check_finite<'a>(it: impl IntoIterator<Item = &'a C64>) -> Result<()> {
    if it.into_iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// A 2x2 or 4x4 complex matrix known to be unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    /// Accepts `m` if it is square of dimension 2 or 4, finite, and unitary to `tol`.
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        check_dim(m.nrows())?;
        check_finite(m.iter())?;
        let defect = unitarity_defect(&m);
        if defect > tol {
            return Err(Error::NotUnitary {
                defect,
                tolerance: tol,
            });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is unitary by construction. Only checked in debug builds.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        debug_assert!(unitarity_defect(&m) <= 1e-8, "trusted matrix not unitary");
        Self(m)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self(identity(dim)))
    }

    pub fn pauli(p: Pauli) -> Self {
        Self(pauli(p))
    }

    pub fn diagonal_phases(phases: &[f64]) -> Result<Self> {
        check_dim(phases.len())?;
        let d: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        Ok(Self(diag(&d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Entrywise complex conjugate (computational basis).
    pub fn conjugate(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self(&self.0 * &other.0))
    }

    /// Kronecker product of two single-qubit unitaries; entry `(2a+c, 2b+d)` is `A[a,b] B[c,d]`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        for m in [self, other] {
            if m.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: m.dim(),
                });
            }
        }
        Ok(Self(self.0.kronecker(&other.0)))
    }

    pub fn scale_phase(&self, phase: f64) -> Self {
        Self(self.0.map(|z| z * C64::from_polar(1.0, phase)))
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if self.dim() != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        Ok(PureState(&self.0 * &state.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.0)
    }
}

/// `{"dim": n, "entries": [[[re, im], ...], ...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let entries = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
            .collect();
        Self {
            dim: m.nrows(),
            entries,
        }
    }

    /// Shape and finiteness checks only; unitarity is left to [`UnitaryMatrix::new`].
    pub fn to_matrix(&self) -> Result<CMatrix> {
        check_dim(self.dim)?;
        if self.entries.len() != self.dim {
            return Err(Error::Malformed(format!(
                "expected {} rows, found {}",
                self.dim,
                self.entries.len()
            )));
        }
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, row) in self.entries.iter().enumerate() {
            if row.len() != self.dim {
                return Err(Error::Malformed(format!(
                    "row {r} has {} entries, expected {}",
                    row.len(),
                    self.dim
                )));
            }
            for (c, [re, im]) in row.iter().enumerate() {
                m[(r, c)] = C64::new(*re, *im);
            }
        }
        check_finite(m.iter())?;
        Ok(m)
    }

    pub fn to_unitary(&self, tol: f64) -> Result<UnitaryMatrix> {
        UnitaryMatrix::new(self.to_matrix()?, tol)
    }
}

impl Serialize for UnitaryMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        json.to_unitary(UNITARITY_TOL)
            .map_err(serde::de::Error::custom)
    }
}

/// A normalized state vector of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(CVector);

impl PureState {
    /// Accepts `v` if it has unit norm to [`NORM_TOL`].
    pub fn new(v: CVector) -> Result<Self> {
        check_dim(v.len())?;
        check_finite(v.iter())?;
        let deviation = (v.norm() - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::Unnormalized { deviation });
        }
        Ok(Self(v))
    }

    /// Rescales `v` to unit norm.
    pub fn normalized(v: CVector) -> Result<Self> {
        check_dim(v.len())?;
        check_finite(v.iter())?;
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::Unnormalized { deviation: 1.0 });
        }
        Ok(Self(v / C64::from(n)))
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(CVector::from_row_slice(amplitudes))
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(Self(v))
    }

    /// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
    pub fn qubit(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self(CVector::from_row_slice(&[
            C64::from(c),
            C64::from_polar(s, phi),
        ]))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.0[i]
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.0.dotc(&other.0))
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        for s in [self, other] {
            if s.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: s.dim(),
                });
            }
        }
        Ok(Self(self.0.kronecker(&other.0)))
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            dim: self.dim(),
            amplitudes: self.0.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// `{"dim": n, "amplitudes": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub dim: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateJson {
    pub fn to_state(&self) -> Result<PureState> {
        if self.amplitudes.len() != self.dim {
            return Err(Error::Malformed(format!(
                "expected {} amplitudes, found {}",
                self.dim,
                self.amplitudes.len()
            )));
        }
        let v: Vec<C64> = self
            .amplitudes
            .iter()
            .map(|[re, im]| C64::new(*re, *im))
            .collect();
        PureState::from_slice(&v)
    }
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        StateJson::deserialize(d)?
            .to_state()
            .map_err(serde::de::Error::custom)
    }
}

/// Eigenphases (ascending, in `(-pi, pi]`) and orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub phases: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// `sum_j e^{i theta_j} |v_j><v_j|`.
    pub fn reconstruct(&self) -> CMatrix {
        let d: Vec<C64> = self.phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        &self.eigenvectors * diag(&d) * self.eigenvectors.adjoint()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.phases.iter().map(|&t| C64::from_polar(1.0, t)).collect()
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
fn sorted_eigh<T>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>)
where
    T: ComplexField<RealField = f64>,
{
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])].clone());
    (vals, vecs)
}

/// Common eigenbasis of two commuting Hermitian (or real symmetric) matrices.
///
/// `a` is diagonalized first; inside each cluster of eigenvalues closer than
/// `cluster_tol`, `b` is diagonalized on the cluster subspace. The result is
/// not verified here.
pub fn simultaneous_eigenbasis<T>(a: &DMatrix<T>, b: &DMatrix<T>, cluster_tol: f64) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let n = a.nrows();
    let (vals, mut basis) = sorted_eigh(a);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] < cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = basis.columns(start, end - start).into_owned();
            let projected = block.adjoint() * b * &block;
            // Symmetrize against round-off before the Hermitian solver sees it.
            let projected = (&projected + projected.adjoint()).map(|z| z * T::from_f64(0.5).unwrap());
            let (_, rot) = sorted_eigh(&projected);
            let rotated = block * rot;
            basis.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }
    basis
}

/// Eigenbasis of `cos(t) a + sin(t) b`, generic in `t`.
pub fn mixed_eigenbasis<T>(a: &DMatrix<T>, b: &DMatrix<T>, t: f64) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let (s, c) = t.sin_cos();
    let m = a.map(|z| z * T::from_f64(c).unwrap()) + b.map(|z| z * T::from_f64(s).unwrap());
    sorted_eigh(&m).1
}

/// Mixing angles tried when the cluster-refinement basis fails verification.
pub(crate) const FALLBACK_MIX_ANGLES: [f64; 6] = [
    0.577_215_664_9,
    1.234_567_89,
    2.742_913_6,
    0.314_159_265,
    1.902_160_583,
    2.506_628_275,
];

fn off_diagonal_max(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst
}

/// Spectral decomposition of a unitary matrix.
///
/// Uses the commuting Hermitian pair `(U + U^dag)/2`, `(U - U^dag)/(2i)`, which
/// keeps eigenvectors orthonormal inside degenerate phase clusters.
pub fn eig_unitary(u: &UnitaryMatrix) -> Result<SpectralDecomposition> {
    let defect = u.unitarity_defect();
    if defect > UNITARITY_TOL {
        return Err(Error::NotUnitary {
            defect,
            tolerance: UNITARITY_TOL,
        });
    }
    let m = u.matrix();
    let adj = m.adjoint();
    let re_part = (m + &adj).map(|z| z * 0.5);
    let im_part = (m - &adj).map(|z| z / C64::new(0.0, 2.0));

    let candidates = std::iter::once(simultaneous_eigenbasis(&re_part, &im_part, DEGENERACY_TOL))
        .chain(
            FALLBACK_MIX_ANGLES
                .iter()
                .map(|&t| mixed_eigenbasis(&re_part, &im_part, t)),
        );

    let mut best: Option<(f64, SpectralDecomposition)> = None;
    for basis in candidates {
        let rotated = basis.adjoint() * m * &basis;
        let off = off_diagonal_max(&rotated);
        let mut phases: Vec<(f64, usize)> = (0..basis.ncols())
            .map(|j| (wrap_phase(rotated[(j, j)].arg()), j))
            .collect();
        phases.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = basis.nrows();
        let eigenvectors = CMatrix::from_fn(n, n, |r, c| basis[(r, phases[c].1)]);
        let decomposition = SpectralDecomposition {
            phases: phases.iter().map(|p| p.0).collect(),
            eigenvectors,
        };
        let residual = max_abs_diff(&decomposition.reconstruct(), m).max(off);
        if residual <= 1e-12 {
            return Ok(decomposition);
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, decomposition));
        }
    }
    match best {
        Some((residual, decomposition)) if residual <= RECONSTRUCTION_TOL => Ok(decomposition),
        Some((residual, _)) => Err(Error::Convergence(format!(
            "unitary spectral reconstruction residual {residual:.3e}"
        ))),
        None => unreachable!("candidate list is non-empty"),
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved back into `Q`.
pub fn haar_random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    check_dim(dim)?;
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases: Vec<C64> = (0..dim)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() == 0.0 {
                ONE
            } else {
                d / d.norm()
            }
        })
        .collect();
    Ok(UnitaryMatrix::from_trusted(q * diag(&phases)))
}

/// Unitarily invariant random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    check_dim(dim)?;
    let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
    PureState::normalized(v)
}

/// `|a> (x) |b>` with independently random single-qubit factors.
pub fn random_product_state<R: Rng + ?Sized>(rng: &mut R) -> PureState {
    let a = random_pure_state(2, rng).expect("dim 2 is supported");
    let b = random_pure_state(2, rng).expect("dim 2 is supported");
    a.kron(&b).expect("both factors are qubits")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_times_identity() {
        let id = UnitaryMatrix::identity(4).unwrap();
        let p = id.multiply(&id).unwrap();
        assert_eq!(p.max_abs_diff(&id), 0.0);
    }

    #[test]
    fn haar_times_adjoint_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = haar_random_unitary(4, &mut rng).unwrap();
            let p = u.multiply(&u.adjoint()).unwrap();
            assert!(max_abs_diff(p.matrix(), &identity(4)) <= 1e-12);
        }
    }

    #[test]
    fn pauli_products() {
        let xy = UnitaryMatrix::pauli(Pauli::X)
            .multiply(&UnitaryMatrix::pauli(Pauli::Y))
            .unwrap();
        let iz = pauli(Pauli::Z).map(|z| z * I);
        assert_eq!(max_abs_diff(xy.matrix(), &iz), 0.0);
    }

    #[test]
    fn multiply_rejects_mismatched_dims() {
        let a = UnitaryMatrix::identity(2).unwrap();
        let b = UnitaryMatrix::identity(4).unwrap();
        assert!(matches!(a.multiply(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kron_examples() {
        let id2 = UnitaryMatrix::identity(2).unwrap();
        let z = UnitaryMatrix::pauli(Pauli::Z);
        let y = UnitaryMatrix::pauli(Pauli::Y);
        assert_eq!(id2.kron(&id2).unwrap().max_abs_diff(&UnitaryMatrix::identity(4).unwrap()), 0.0);
        let zi = z.kron(&id2).unwrap();
        assert_eq!(max_abs_diff(zi.matrix(), &diag(&[ONE, ONE, -ONE, -ONE])), 0.0);
        let yy = y.kron(&y).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 3)] = -ONE;
        expected[(1, 2)] = ONE;
        expected[(2, 1)] = ONE;
        expected[(3, 0)] = -ONE;
        assert_eq!(max_abs_diff(yy.matrix(), &expected), 0.0);
        assert!(yy.kron(&y).is_err());
    }

    #[test]
    fn rejects_non_unitary_and_bad_dims() {
        let m = CMatrix::from_element(2, 2, ONE);
        assert!(matches!(UnitaryMatrix::new(m, UNITARITY_TOL), Err(Error::NotUnitary { .. })));
        assert!(matches!(
            UnitaryMatrix::new(identity(3), UNITARITY_TOL),
            Err(Error::UnsupportedDimension(3))
        ));
        let mut nan = identity(2);
        nan[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert_eq!(UnitaryMatrix::new(nan, UNITARITY_TOL), Err(Error::NonFinite));
    }

    #[test]
    fn eig_identity() {
        let s = eig_unitary(&UnitaryMatrix::identity(4).unwrap()).unwrap();
        assert!(s.phases.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn eig_diagonal() {
        let u = UnitaryMatrix::new(diag(&[ONE, I, -ONE, -I]), UNITARITY_TOL).unwrap();
        let s = eig_unitary(&u).unwrap();
        let expected = [-PI / 2.0, 0.0, PI / 2.0, PI];
        for (p, e) in s.phases.iter().zip(expected) {
            assert!(close(*p, e, 1e-12), "{:?}", s.phases);
        }
    }

    #[test]
    fn eig_reconstructs_haar_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in [2, 4] {
            for _ in 0..200 {
                let u = haar_random_unitary(dim, &mut rng).unwrap();
                let s = eig_unitary(&u).unwrap();
                assert!(max_abs_diff(&s.reconstruct(), u.matrix()) <= 1e-9);
                assert!(unitarity_defect(&s.eigenvectors) <= 1e-10);
                assert!(s.phases.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn eig_handles_degenerate_clusters() {
        // Haar-rotated diag(1, 1, -1, -1) keeps two 2-fold clusters.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let w = haar_random_unitary(4, &mut rng).unwrap();
        let d = diag(&[ONE, ONE, -ONE, -ONE]);
        let u = UnitaryMatrix::new(w.matrix() * d * w.matrix().adjoint(), 1e-10).unwrap();
        let s = eig_unitary(&u).unwrap();
        assert!(max_abs_diff(&s.reconstruct(), u.matrix()) <= 1e-9);
        assert!(unitarity_defect(&s.eigenvectors) <= 1e-10);
        assert!(close(s.phases[0], 0.0, 1e-9) && close(s.phases[3], PI, 1e-9));
    }

    #[test]
    fn haar_is_deterministic_per_seed() {
        let a = haar_random_unitary(4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = haar_random_unitary(4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.unitarity_defect() <= 1e-12);
    }

    #[test]
    fn wrap_phase_branch() {
        assert_eq!(wrap_phase(-PI), PI);
        assert!(close(wrap_phase(3.0 * PI / 2.0), -PI / 2.0, 1e-15));
        assert_eq!(wrap_phase(0.25), 0.25);
    }

    #[test]
    fn random_states_are_normalized_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_pure_state(4, &mut rng).unwrap();
        assert!(close(s.amplitudes().norm(), 1.0, 1e-12));
        let p1 = random_product_state(&mut ChaCha8Rng::seed_from_u64(8));
        let p2 = random_product_state(&mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(p1, p2);
        assert!(close(p1.amplitudes().norm(), 1.0, 1e-12));
    }

    #[test]
    fn json_roundtrip_and_malformed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = haar_random_unitary(4, &mut rng).unwrap();
        let text = serde_json::to_string(&u).unwrap();
        let back: UnitaryMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, u);
        let bad = MatrixJson {
            dim: 4,
            entries: vec![vec![[1.0, 0.0]; 4]; 3],
        };
        assert!(matches!(bad.to_matrix(), Err(Error::Malformed(_))));
    }
}
