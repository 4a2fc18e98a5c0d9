//! Pure-state entanglement measures and closed-form entangling capacities.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::canonical::{eigenphases, mirror_negative_alpha_z, reduce_to_weyl, WeylVector, WEYL_TOL};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, PureState, C64, NORM_TOL};

/// `-x log2 x - (1-x) log2 (1-x)` with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(xlog2x(x) + xlog2x(1.0 - x))
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// `h((1 + sqrt(1 - c^2)) / 2)`: entropy of entanglement as a function of concurrence.
pub fn entropy_from_concurrence(c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::OutOfRange {
            name: "concurrence",
            value: c,
            lo: 0.0,
            hi: 1.0,
        });
    }
    binary_entropy((1.0 + (1.0 - c * c).max(0.0).sqrt()) / 2.0)
}

fn two_qubit(state: &PureState) -> Result<()> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: state.dim(),
        });
    }
    let deviation = (state.amplitudes().norm() - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::Unnormalized { deviation });
    }
    Ok(())
}

/// Reduced density matrix of qubit A (trace over B). Amplitude index is `2a + b`.
pub fn reduced_density_a(state: &PureState) -> Result<CMatrix> {
    two_qubit(state)?;
    let psi = state.amplitudes();
    Ok(CMatrix::from_fn(2, 2, |a, a2| {
        (0..2).map(|b| psi[2 * a + b] * psi[2 * a2 + b].conj()).sum::<C64>()
    }))
}

/// `2 sqrt(det rho_A)`, evaluated as `2 |psi_00 psi_11 - psi_01 psi_10|`.
///
/// The two are equal for pure states; the amplitude form avoids the square
/// root of a rounded determinant near zero.
pub fn concurrence(state: &PureState) -> Result<f64> {
    two_qubit(state)?;
    let psi = state.amplitudes();
    Ok((2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm()).min(1.0))
}

/// `|<psi| Y (x) Y |psi*>|`, conjugation in the computational basis.
pub fn concurrence_conjugate_form(state: &PureState) -> Result<f64> {
    two_qubit(state)?;
    let psi = state.amplitudes();
    // Y (x) Y is antidiag(-1, 1, 1, -1).
    let flipped = [-psi[3].conj(), psi[2].conj(), psi[1].conj(), -psi[0].conj()];
    let amp: C64 = (0..4).map(|i| psi[i].conj() * flipped[i]).sum();
    Ok(amp.norm().min(1.0))
}

/// Von Neumann entropy (base 2) of the reduced state, from its eigenvalues.
pub fn entropy_of_entanglement(state: &PureState) -> Result<f64> {
    let rho = reduced_density_a(state)?;
    let (p, q) = (rho[(0, 0)].re, rho[(1, 1)].re);
    let off = rho[(0, 1)].norm();
    let gap = ((p - q).powi(2) + 4.0 * off * off).sqrt();
    let trace = p + q;
    let q1 = ((trace + gap) / 2.0).clamp(0.0, 1.0);
    let q2 = ((trace - gap) / 2.0).clamp(0.0, 1.0);
    Ok(xlog2x(q1) + xlog2x(q2))
}

/// Concurrence and entropy of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementValue {
    pub concurrence: f64,
    pub entropy: f64,
}

pub fn entanglement(state: &PureState) -> Result<EntanglementValue> {
    Ok(EntanglementValue {
        concurrence: concurrence(state)?,
        entropy: entropy_of_entanglement(state)?,
    })
}

/// Perfect-entangler test for `d` with `a_z >= 0`: `a_x + a_y >= pi/4` and `a_y + a_z <= pi/4`.
///
/// Equality on either boundary counts as satisfied.
pub fn is_perfect_entangler(d: &WeylVector) -> Result<bool> {
    if d.alpha_z < 0.0 {
        return Err(Error::NegativeAlphaZ(d.alpha_z));
    }
    Ok(d.alpha_x + d.alpha_y >= FRAC_PI_4 - WEYL_TOL && d.alpha_y + d.alpha_z <= FRAC_PI_4 + WEYL_TOL)
}

/// Entangling capacities of a two-qubit unitary with canonical vector `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// Maximum output concurrence over product inputs.
    pub c_max_prod: f64,
    /// `sqrt(c_max_prod)`.
    pub c_max: f64,
    /// Maximum output entropy of entanglement over product inputs.
    pub e_max_prod: f64,
    pub perfect_entangler: bool,
}

/// Non-negative Weyl representative used by every closed form: reduce first
/// if needed, then mirror a negative `a_z`.
pub(crate) fn nonnegative_representative(d: &WeylVector) -> WeylVector {
    let d = if d.in_weyl_region(WEYL_TOL) {
        *d
    } else {
        reduce_to_weyl(d.as_array()).0
    };
    mirror_negative_alpha_z(&d).0
}

/// Closed-form capacities. Perfect entanglers have every capacity equal to 1;
/// otherwise `c_max_prod = max_{j,k} |sin(lambda_j - lambda_k)|`.
pub fn capacities_closed_form(d: &WeylVector) -> CapacityReport {
    let d = nonnegative_representative(d);
    let perfect = is_perfect_entangler(&d).expect("representative has a_z >= 0");
    if perfect {
        return CapacityReport {
            c_max_prod: 1.0,
            c_max: 1.0,
            e_max_prod: 1.0,
            perfect_entangler: true,
        };
    }
    let c = eigenphases(&d).max_abs_sin_difference().min(1.0);
    CapacityReport {
        c_max_prod: c,
        c_max: c.sqrt(),
        e_max_prod: entropy_from_concurrence(c).expect("c in [0, 1]"),
        perfect_entangler: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_product_state, random_pure_state, CVector};
    use std::f64::consts::PI;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn concurrence_matches_reduced_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let s = random_pure_state(4, &mut rng).unwrap();
            let det = reduced_density_a(&s).unwrap().determinant().re.max(0.0);
            assert!((concurrence(&s).unwrap() - 2.0 * det.sqrt()).abs() < 1e-7);
        }
    }

    fn state(a: &[f64]) -> PureState {
        PureState::normalized(CVector::from_iterator(4, a.iter().map(|&x| C64::from(x)))).unwrap()
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        let x = (1.0 + 0.5f64.sqrt()) / 2.0;
        assert!((binary_entropy(x).unwrap() - 0.6009).abs() < 1e-4);
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn concurrence_examples() {
        let s00 = state(&[1.0, 0.0, 0.0, 0.0]);
        let bell = state(&[1.0, 0.0, 0.0, 1.0]);
        let (s, c) = (PI / 8.0).sin_cos();
        let partial = state(&[c, 0.0, 0.0, s]);
        for f in [concurrence, concurrence_conjugate_form] {
            assert_eq!(f(&s00).unwrap(), 0.0);
            assert!((f(&bell).unwrap() - 1.0).abs() < 1e-15);
            assert!((f(&partial).unwrap() - (PI / 4.0).sin()).abs() < 1e-15);
        }
        assert_eq!(entropy_of_entanglement(&s00).unwrap(), 0.0);
        assert!((entropy_of_entanglement(&bell).unwrap() - 1.0).abs() < 1e-12);
        assert!((entropy_of_entanglement(&partial).unwrap() - 0.6009).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_states() {
        let q = PureState::qubit(0.3, 0.1);
        assert!(matches!(concurrence(&q), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn measures_agree_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = random_pure_state(4, &mut rng).unwrap();
            let c = concurrence(&s).unwrap();
            assert!((c - concurrence_conjugate_form(&s).unwrap()).abs() <= 1e-12);
            let e = entropy_of_entanglement(&s).unwrap();
            assert!((e - entropy_from_concurrence(c).unwrap()).abs() <= 1e-10);
            assert!((0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&e));
        }
    }

    #[test]
    fn product_states_are_unentangled() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let s = random_product_state(&mut rng);
            assert!(concurrence(&s).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn perfect_entangler_examples() {
        let q = FRAC_PI_4;
        assert!(is_perfect_entangler(&WeylVector::new(q, 0.0, 0.0)).unwrap());
        assert!(!is_perfect_entangler(&WeylVector::new(PI / 8.0, 0.0, 0.0)).unwrap());
        assert!(!is_perfect_entangler(&WeylVector::new(q, q, q)).unwrap());
        assert!(is_perfect_entangler(&WeylVector::new(q, q, -0.1)).is_err());
    }

    #[test]
    fn capacity_examples() {
        let r = capacities_closed_form(&WeylVector::new(0.0, 0.0, 0.0));
        assert_eq!((r.c_max_prod, r.c_max, r.e_max_prod), (0.0, 0.0, 0.0));
        let r = capacities_closed_form(&WeylVector::new(PI / 8.0, 0.0, 0.0));
        assert!((r.c_max_prod - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((r.c_max - 0.840_896_415_253_714_5).abs() < 1e-12);
        assert!((r.e_max_prod - 0.6009).abs() < 1e-4);
        let q = FRAC_PI_4;
        let r = capacities_closed_form(&WeylVector::new(q, q, q));
        assert!(r.c_max_prod < 1e-15);
        assert!(!r.perfect_entangler);
        let r = capacities_closed_form(&WeylVector::new(q, PI / 16.0, 0.0));
        assert!(r.perfect_entangler && r.c_max_prod == 1.0);
    }

    #[test]
    fn capacities_invariant_under_mirror() {
        let d = WeylVector::new(0.6, 0.4, -0.3);
        let (m, _) = mirror_negative_alpha_z(&d);
        assert_eq!(capacities_closed_form(&d), capacities_closed_form(&m));
    }
}
