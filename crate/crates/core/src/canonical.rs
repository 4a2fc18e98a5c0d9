//! Canonical (Cartan) decomposition of two-qubit unitaries.
//!
//! Every `U` in U(4) can be written as
//! `U = e^{i phi} (X_A (x) X_B) U_d (Y_A (x) Y_B)` with
//! `U_d = exp[-i(a_x XX + a_y YY + a_z ZZ)]` and
//! `0 <= |a_z| <= a_y <= a_x <= pi/4`.
//!
//! The decomposition works in the magic basis `Q`, where local unitaries
//! become real orthogonal matrices and `U_d` is diagonal.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, diag, max_abs_diff, mixed_eigenbasis, simultaneous_eigenbasis, wrap_phase, CMatrix,
    MatrixJson, Pauli, UnitaryMatrix, C64, FALLBACK_MIX_ANGLES, I, ONE, ZERO,
};

/// Slack allowed when checking the Weyl ordering constraint.
pub const WEYL_TOL: f64 = 1e-12;

/// Tolerances used by [`cartan_decompose_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeConfig {
    pub unitarity_tol: f64,
    pub reconstruction_tol: f64,
    pub degeneracy_tol: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            unitarity_tol: linalg::UNITARITY_TOL,
            reconstruction_tol: linalg::RECONSTRUCTION_TOL,
            degeneracy_tol: linalg::DEGENERACY_TOL,
        }
    }
}

/// Interaction coefficients `(a_x, a_y, a_z)` of `U_d`.
///
/// The type itself admits any finite triple; [`WeylVector::in_weyl_region`]
/// tests the ordering constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylVector {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub alpha_z: f64,
}

impl WeylVector {
    pub const fn new(alpha_x: f64, alpha_y: f64, alpha_z: f64) -> Self {
        Self {
            alpha_x,
            alpha_y,
            alpha_z,
        }
    }

    /// Constructs a vector that must already satisfy `0 <= |a_z| <= a_y <= a_x <= pi/4`.
    pub fn checked(alpha_x: f64, alpha_y: f64, alpha_z: f64) -> Result<Self> {
        let d = Self::new(alpha_x, alpha_y, alpha_z);
        if !d.as_array().iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !d.in_weyl_region(WEYL_TOL) {
            return Err(Error::Malformed(format!(
                "({alpha_x}, {alpha_y}, {alpha_z}) violates 0 <= |a_z| <= a_y <= a_x <= pi/4"
            )));
        }
        Ok(d)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha_x, self.alpha_y, self.alpha_z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn in_weyl_region(&self, tol: f64) -> bool {
        let [x, y, z] = self.as_array();
        z.abs() <= y + tol && y <= x + tol && x <= FRAC_PI_4 + tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigenphases `lambda_1 <= ... <= lambda_4` of the interaction Hamiltonian;
/// `U_d` has eigenvalues `e^{-i lambda_j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPhases {
    pub lambda: [f64; 4],
}

impl EigenPhases {
    pub fn sum(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// `max_{j,k} |sin(lambda_j - lambda_k)|`.
    pub fn max_abs_sin_difference(&self) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..4 {
            for k in 0..j {
                best = best.max((self.lambda[j] - self.lambda[k]).sin().abs());
            }
        }
        best
    }

    /// Sorted `|sin(lambda_j - lambda_k)|` over the six pairs.
    pub fn abs_sin_differences(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        let mut n = 0;
        for j in 0..4 {
            for k in 0..j {
                out[n] = (self.lambda[j] - self.lambda[k]).sin().abs();
                n += 1;
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Hamiltonian eigenvalues in magic-basis column order
/// `(Phi+, i Psi+, Psi-, i Phi-)`.
fn slot_phases(d: &WeylVector) -> [f64; 4] {
    let [x, y, z] = d.as_array();
    [x - y + z, x + y - z, -x - y - z, -x + y + z]
}

/// `lambda_1..lambda_4`, sorted ascending.
pub fn eigenphases(d: &WeylVector) -> EigenPhases {
    let [x, y, z] = d.as_array();
    let mut lambda = [
        -x - y - z, // lambda_1
        -x + y + z, // lambda_2
        x - y + z,  // lambda_3
        x + y - z,  // lambda_4
    ];
    lambda.sort_by(f64::total_cmp);
    EigenPhases { lambda }
}

/// The magic basis; columns are `(|00>+|11>)/sqrt2`, `i(|01>+|10>)/sqrt2`,
/// `(|01>-|10>)/sqrt2`, `i(|00>-|11>)/sqrt2`.
pub fn magic_basis() -> CMatrix {
    let h = C64::from(FRAC_1_SQRT_2);
    let ih = I * FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let entries = [
        h,    ZERO, ZERO, ih,
        ZERO, ih,   h,    ZERO,
        ZERO, ih,   -h,   ZERO,
        h,    ZERO, ZERO, -ih,
    ];
    CMatrix::from_row_slice(4, 4, &entries)
}

/// `U_d(d) = exp[-i(a_x XX + a_y YY + a_z ZZ)]`, assembled from its magic-basis eigendecomposition.
///
/// Any finite triple is accepted.
pub fn canonical_unitary(d: &WeylVector) -> UnitaryMatrix {
    let q = magic_basis();
    let phases: Vec<C64> = slot_phases(d)
        .iter()
        .map(|&l| C64::from_polar(1.0, -l))
        .collect();
    UnitaryMatrix::from_trusted(&q * diag(&phases) * q.adjoint())
}

/// Returns `(a_x, a_y, -a_z)` and whether a sign flip actually happened.
///
/// `(Z (x) 1) U_d (Z (x) 1)` equals the adjoint of `U_d` at the mirrored vector,
/// so capacities and minimum overlaps are shared between `d` and its mirror.
/// Calling this with `a_z >= 0` is a no-op reported by the flag.
pub fn mirror_negative_alpha_z(d: &WeylVector) -> (WeylVector, bool) {
    if d.alpha_z < 0.0 {
        (WeylVector::new(d.alpha_x, d.alpha_y, -d.alpha_z), true)
    } else {
        (*d, false)
    }
}

/// One symmetry move used to bring a coefficient triple into the Weyl region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeylMove {
    /// `a_axis -> a_axis - steps * pi/2`.
    Shift { axis: usize, steps: i64 },
    /// Exchanges two coordinates.
    Swap { i: usize, j: usize },
    /// Negates the two coordinates other than `keep`.
    PairFlip { keep: usize },
}

/// Local factors realizing a move: `U_d(before) = e^{i phase} (L_A (x) L_B) U_d(after) (R_A (x) R_B)`.
struct MoveFactors {
    phase: f64,
    left: Option<(CMatrix, CMatrix)>,
    right: Option<(CMatrix, CMatrix)>,
}

fn axis_pauli(axis: usize) -> Pauli {
    Pauli::ALL[axis]
}

/// Single-qubit Clifford `W` with `W s_i W^dag = +-s_j` and `W s_j W^dag = +-s_i`.
fn swap_clifford(i: usize, j: usize) -> CMatrix {
    let h = FRAC_1_SQRT_2;
    match (i.min(j), i.max(j)) {
        (0, 1) => diag(&[ONE, I]),
        (1, 2) => CMatrix::from_row_slice(2, 2, &[C64::from(h), -I * h, -I * h, C64::from(h)]),
        (0, 2) => CMatrix::from_row_slice(2, 2, &[C64::from(h), C64::from(h), C64::from(h), -C64::from(h)]),
        _ => unreachable!("swap requires two distinct axes"),
    }
}

impl WeylMove {
    fn apply(&self, a: &mut [f64; 3]) {
        match *self {
            WeylMove::Shift { axis, steps } => a[axis] -= steps as f64 * FRAC_PI_2,
            WeylMove::Swap { i, j } => a.swap(i, j),
            WeylMove::PairFlip { keep } => {
                for (k, v) in a.iter_mut().enumerate() {
                    if k != keep {
                        *v = -*v;
                    }
                }
            }
        }
    }

    fn factors(&self) -> MoveFactors {
        match *self {
            WeylMove::Shift { axis, steps } => {
                // exp(-i s pi/2 PP) = cos(s pi/2) - i sin(s pi/2) PP
                let s = steps.rem_euclid(4);
                let phase = [0.0, -FRAC_PI_2, PI, FRAC_PI_2][s as usize];
                let right = (s % 2 == 1).then(|| {
                    let p = linalg::pauli(axis_pauli(axis));
                    (p.clone(), p)
                });
                MoveFactors {
                    phase,
                    left: None,
                    right,
                }
            }
            WeylMove::Swap { i, j } => {
                let w = swap_clifford(i, j);
                let wd = w.adjoint();
                MoveFactors {
                    phase: 0.0,
                    left: Some((wd.clone(), wd)),
                    right: Some((w.clone(), w)),
                }
            }
            WeylMove::PairFlip { keep } => {
                let p = linalg::pauli(axis_pauli(keep));
                let id = linalg::identity(2);
                MoveFactors {
                    phase: 0.0,
                    left: Some((p.clone(), id.clone())),
                    right: Some((p, id)),
                }
            }
        }
    }
}

/// Weyl representative of a raw triple together with the moves that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylReduction {
    pub d: WeylVector,
    pub moves: Vec<WeylMove>,
}

impl WeylReduction {
    /// True if a pair sign flip was needed; the shift and swap moves alone
    /// never change the sign pattern of the coordinates.
    pub fn reflected(&self) -> bool {
        self.moves
            .iter()
            .any(|m| matches!(m, WeylMove::PairFlip { .. }))
    }
}

/// Brings `d_raw` into `0 <= |a_z| <= a_y <= a_x <= pi/4`.
///
/// Moves are applied in a fixed order: each coordinate is shifted by
/// multiples of `pi/2` into `(-pi/4, pi/4]`; coordinates are sorted by
/// decreasing magnitude with pairwise swaps; then pair sign flips make
/// `a_x` and `a_y` non-negative. Every move is a local equivalence.
pub fn reduce_with_moves(d_raw: [f64; 3]) -> WeylReduction {
    let mut a = d_raw;
    let mut moves = Vec::new();
    let mut push = |m: WeylMove, a: &mut [f64; 3]| {
        m.apply(a);
        moves.push(m);
    };

    for axis in 0..3 {
        let steps = ((a[axis] - FRAC_PI_4 - WEYL_TOL) / FRAC_PI_2).ceil() as i64;
        if steps != 0 {
            push(WeylMove::Shift { axis, steps }, &mut a);
        }
    }

    for (i, j) in [(0, 1), (1, 2), (0, 1)] {
        if a[j].abs() > a[i].abs() {
            push(WeylMove::Swap { i, j }, &mut a);
        }
    }

    if a[0] < 0.0 {
        push(WeylMove::PairFlip { keep: 1 }, &mut a);
    }
    if a[1] < 0.0 {
        push(WeylMove::PairFlip { keep: 0 }, &mut a);
    }

    WeylReduction {
        d: WeylVector::from_array(a),
        moves,
    }
}

/// Weyl representative of `d_raw`; the flag reports whether a pair sign flip was used.
pub fn reduce_to_weyl(d_raw: [f64; 3]) -> (WeylVector, bool) {
    let r = reduce_with_moves(d_raw);
    let reflected = r.reflected();
    (r.d, reflected)
}

/// Makhlin invariants `(G1, G2)`: complete invariants of local equivalence
/// (up to global phase) for two-qubit unitaries.
pub fn makhlin_invariants(u: &UnitaryMatrix) -> (C64, C64) {
    let q = magic_basis();
    let mb = q.adjoint() * u.matrix() * &q;
    let m = mb.transpose() * &mb;
    let det = u.matrix().determinant();
    let tr = m.trace();
    let tr2 = (&m * &m).trace();
    let g1 = tr * tr / (det * 16.0);
    let g2 = (tr * tr - tr2) / (det * 4.0);
    (g1, g2)
}

/// Canonical decomposition `U = e^{i phi} (X_A (x) X_B) U_d(d) (Y_A (x) Y_B)`.
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    pub xa: UnitaryMatrix,
    pub xb: UnitaryMatrix,
    pub ya: UnitaryMatrix,
    pub yb: UnitaryMatrix,
    pub d: WeylVector,
    pub global_phase: f64,
    pub residual: f64,
}

impl CanonicalForm {
    pub fn reconstruct(&self) -> CMatrix {
        let left = self.xa.matrix().kronecker(self.xb.matrix());
        let right = self.ya.matrix().kronecker(self.yb.matrix());
        let core = canonical_unitary(&self.d);
        (left * core.matrix() * right).map(|z| z * C64::from_polar(1.0, self.global_phase))
    }

    pub fn to_json(&self) -> CanonicalFormJson {
        CanonicalFormJson {
            d: self.d.as_array(),
            global_phase: self.global_phase,
            xa: self.xa.to_json(),
            xb: self.xb.to_json(),
            ya: self.ya.to_json(),
            yb: self.yb.to_json(),
            residual: self.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFormJson {
    pub d: [f64; 3],
    pub global_phase: f64,
    #[serde(rename = "XA")]
    pub xa: MatrixJson,
    #[serde(rename = "XB")]
    pub xb: MatrixJson,
    #[serde(rename = "YA")]
    pub ya: MatrixJson,
    #[serde(rename = "YB")]
    pub yb: MatrixJson,
    pub residual: f64,
}

/// Splits `k = A (x) B` for a 4x4 matrix known to be a tensor product of unitaries.
fn split_product(k: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let block = |a: usize, b: usize| k.view((2 * a, 2 * b), (2, 2)).into_owned();
    let (mut best, mut best_norm) = ((0, 0), -1.0);
    for a in 0..2 {
        for b in 0..2 {
            let n = block(a, b).norm();
            if n > best_norm {
                best = (a, b);
                best_norm = n;
            }
        }
    }
    let raw = block(best.0, best.1);
    let det = raw.determinant();
    if det.norm() < 1e-6 {
        return Err(Error::Decomposition(
            "local factor is not a tensor product".into(),
        ));
    }
    let right = raw / det.sqrt();
    let right_adj = right.adjoint();
    let left = CMatrix::from_fn(2, 2, |a, b| (&right_adj * block(a, b)).trace() * 0.5);
    Ok((left, right))
}

/// Real orthogonal `P` (det +1) with `P^T m P` diagonal, for complex symmetric unitary `m`.
fn real_orthogonal_eigenbasis(m: &CMatrix, degeneracy_tol: f64) -> Result<(DMatrix<f64>, [C64; 4])> {
    let re = m.map(|z| z.re);
    let re = (&re + re.transpose()) * 0.5;
    let im = m.map(|z| z.im);
    let im = (&im + im.transpose()) * 0.5;

    let candidates = std::iter::once(simultaneous_eigenbasis(&re, &im, degeneracy_tol)).chain(
        FALLBACK_MIX_ANGLES
            .iter()
            .map(|&t| mixed_eigenbasis(&re, &im, t)),
    );

    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for p in candidates {
        let pc = p.map(C64::from);
        let rotated = pc.transpose() * m * &pc;
        let mut off: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    off = off.max(rotated[(r, c)].norm());
                }
            }
        }
        if off <= 1e-13 {
            best = Some((off, p));
            break;
        }
        if best.as_ref().is_none_or(|(o, _)| off < *o) {
            best = Some((off, p));
        }
    }
    let (off, mut p) = best.expect("candidate list is non-empty");
    if off > 1e-9 {
        return Err(Error::Decomposition(format!(
            "could not diagonalize M^T M with a real orthogonal basis (off-diagonal {off:.3e})"
        )));
    }
    if p.determinant() < 0.0 {
        let mut col = p.column_mut(3);
        col.neg_mut();
    }
    let pc = p.map(C64::from);
    let rotated = pc.transpose() * m * &pc;
    let eig = [rotated[(0, 0)], rotated[(1, 1)], rotated[(2, 2)], rotated[(3, 3)]];
    Ok((p, eig))
}

/// Decomposes with default tolerances.
pub fn cartan_decompose(u: &UnitaryMatrix) -> Result<CanonicalForm> {
    cartan_decompose_with(u, &DecomposeConfig::default())
}

/// Canonical decomposition of a 4x4 unitary.
///
/// 1. Divide by the principal fourth root of `det U` (recorded as the global phase).
/// 2. Form `M = Q^dag U Q` and diagonalize `M^T M = P diag(e^{-2i mu}) P^T`
///    with real orthogonal `P`.
/// 3. Lift the halved phases `mu` so they sum to zero; they give a raw
///    coefficient triple and `O = M P D^{-1}` is real orthogonal.
/// 4. Map `O` and `P^T` back through `Q` to local unitaries, then walk the
///    Weyl reduction moves, folding their local factors into the locals.
pub fn cartan_decompose_with(u: &UnitaryMatrix, cfg: &DecomposeConfig) -> Result<CanonicalForm> {
    if u.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: u.dim(),
        });
    }
    let defect = u.unitarity_defect();
    if defect > cfg.unitarity_tol {
        return Err(Error::NotUnitary {
            defect,
            tolerance: cfg.unitarity_tol,
        });
    }

    let det = u.matrix().determinant();
    let mut global_phase = det.arg() / 4.0;
    let special = u.matrix().map(|z| z * C64::from_polar(1.0, -global_phase));

    let q = magic_basis();
    let qd = q.adjoint();
    let m = &qd * &special * &q;
    let mtm = m.transpose() * &m;
    let (p, eig) = real_orthogonal_eigenbasis(&mtm, cfg.degeneracy_tol)?;

    // eig_j = e^{-2 i mu_j}; start from mu_j in (-pi/2, pi/2].
    let mut mu: [f64; 4] = eig.map(|z| -z.arg() / 2.0);
    let excess = (mu.iter().sum::<f64>() / PI).round() as i64;
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]));
    if excess > 0 {
        for &j in order.iter().rev().take(excess as usize) {
            mu[j] -= PI;
        }
    } else if excess < 0 {
        for &j in order.iter().take((-excess) as usize) {
            mu[j] += PI;
        }
    }
    // Slots follow the magic-basis column order of `slot_phases`.
    let raw = [
        (mu[0] + mu[1]) / 2.0,
        (mu[1] + mu[3]) / 2.0,
        (mu[0] + mu[3]) / 2.0,
    ];
    let raw_d = WeylVector::from_array(raw);

    let d_inv: Vec<C64> = slot_phases(&raw_d)
        .iter()
        .map(|&l| C64::from_polar(1.0, l))
        .collect();
    let pc = p.map(C64::from);
    let o = &m * &pc * diag(&d_inv);
    let imag = o.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-6 {
        return Err(Error::Decomposition(format!(
            "left factor is not real in the magic basis (max imaginary part {imag:.3e})"
        )));
    }
    let k1 = &q * &o * &qd;
    let k2 = &q * pc.transpose() * &qd;
    let (mut xa, mut xb) = split_product(&k1)?;
    let (mut ya, mut yb) = split_product(&k2)?;

    let reduction = reduce_with_moves(raw);
    for mv in &reduction.moves {
        let f = mv.factors();
        global_phase += f.phase;
        if let Some((la, lb)) = f.left {
            xa = &xa * la;
            xb = &xb * lb;
        }
        if let Some((ra, rb)) = f.right {
            ya = ra * &ya;
            yb = rb * &yb;
        }
    }

    let mut form = CanonicalForm {
        xa: UnitaryMatrix::new(xa, 1e-8)?,
        xb: UnitaryMatrix::new(xb, 1e-8)?,
        ya: UnitaryMatrix::new(ya, 1e-8)?,
        yb: UnitaryMatrix::new(yb, 1e-8)?,
        d: reduction.d,
        global_phase: wrap_phase(global_phase),
        residual: 0.0,
    };
    form.residual = max_abs_diff(&form.reconstruct(), u.matrix());
    if form.residual > cfg.reconstruction_tol {
        return Err(Error::Decomposition(format!(
            "reconstruction residual {:.3e} exceeds {:.1e}",
            form.residual, cfg.reconstruction_tol
        )));
    }
    Ok(form)
}
