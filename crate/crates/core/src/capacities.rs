//! Classical capacities of two pure signal states and their relations to the
//! product entropic entangling capacity.

use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_unitary, WeylVector};
use crate::entanglement::{binary_entropy, capacities_closed_form};
use crate::error::{Error, Result};
use crate::linalg::{PureState, NORM_TOL};
use crate::oracle::{max_concurrence_product, min_concurrence_product, min_probe_overlap, SearchConfig};

fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

/// First-order capacity `1 - h((1 + sqrt(1 - s^2)) / 2)` of two equiprobable pure
/// signals with overlap `s`.
pub fn c1_two_pure(overlap: f64) -> Result<f64> {
    let s = unit_interval("overlap", overlap)?;
    let h = binary_entropy((1.0 + (1.0 - s * s).max(0.0).sqrt()) / 2.0)?;
    Ok((1.0 - h).clamp(0.0, 1.0))
}

/// Collective-decoding capacity `h((1 + s) / 2)`.
pub fn c_inf_two_pure(overlap: f64) -> Result<f64> {
    let s = unit_interval("overlap", overlap)?;
    binary_entropy((1.0 + s) / 2.0)
}

/// Von Neumann entropy of `p1 |psi1><psi1| + (1 - p1) |psi2><psi2|` with `|<psi1|psi2>| = s`.
pub fn ensemble_entropy_two_pure(p1: f64, overlap: f64) -> Result<f64> {
    let p1 = unit_interval("p1", p1)?;
    let s = unit_interval("overlap", overlap)?;
    let p2 = 1.0 - p1;
    let root = ((p1 - p2).powi(2) + 4.0 * p1 * p2 * s * s).sqrt();
    binary_entropy(((1.0 + root) / 2.0).min(1.0))
}

/// Two signal states and the modulus of their inner product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPair {
    pub psi1: PureState,
    pub psi2: PureState,
    pub overlap: f64,
}

impl SignalPair {
    pub fn new(psi1: PureState, psi2: PureState) -> Result<Self> {
        let overlap = psi1.inner(&psi2)?.norm().min(1.0);
        Ok(Self { psi1, psi2, overlap })
    }
}

fn single_qubit(state: &PureState) -> Result<()> {
    if state.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: state.dim(),
        });
    }
    let deviation = (state.amplitudes().norm() - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::Unnormalized { deviation });
    }
    Ok(())
}

fn apply_yy(state: &PureState) -> Result<PureState> {
    let psi = state.amplitudes();
    PureState::from_slice(&[-psi[3], psi[2], psi[1], -psi[0]])
}

/// `psi1 = U_d |a>|b>` and `psi2 = (Y (x) Y) U_d^dag |a*>|b*>`.
///
/// Since `U_d^* = U_d^dag`, `psi2` is the spin flip of `psi1` and the overlap is
/// the concurrence of `psi1`.
pub fn relation1_signals(d: &WeylVector, a: &PureState, b: &PureState) -> Result<SignalPair> {
    single_qubit(a)?;
    single_qubit(b)?;
    let ud = canonical_unitary(d);
    let psi1 = ud.apply(&a.kron(b)?)?;
    let psi2 = apply_yy(&ud.adjoint().apply(&a.conjugate().kron(&b.conjugate())?)?)?;
    SignalPair::new(psi1, psi2)
}

/// Signals `U_d^dag |Phi>` and `U_d |Phi>` for a two-qubit probe.
pub fn relation2_signals(d: &WeylVector, probe: &PureState) -> Result<SignalPair> {
    let ud = canonical_unitary(d);
    SignalPair::new(ud.adjoint().apply(probe)?, ud.apply(probe)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `E + max C1 = 1`.
    FirstOrder,
    /// `E = max C_inf`.
    Collective,
}

/// Both sides of one capacity relation for a given `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRelationReport {
    pub relation: Relation,
    pub e_max_prod: f64,
    /// `C1` at the concurrence-maximizing product input, or `max C_inf` over probes.
    pub capacity_term: f64,
    pub relation_residual: f64,
    /// Overlap of the signal pair at which `capacity_term` is evaluated.
    pub overlap: f64,
    /// Product input or probe state attaining `capacity_term`.
    pub state: PureState,
    /// First-order relation only: `max C1` over all product inputs taken
    /// literally, attained at the concurrence-minimizing input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_capacity_term: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_residual: Option<f64>,
}

impl CapacityRelationReport {
    /// True when the literal reading disagrees with the substitution reading by more than `tol`.
    pub fn readings_disagree(&self, tol: f64) -> bool {
        self.literal_residual.is_some_and(|r| (r - self.relation_residual).abs() > tol)
    }
}

/// `E_max^prod + C1 = 1` with `C1` evaluated at the product input that
/// maximizes output concurrence, where the signal overlap equals `C_max^prod`.
///
/// The report also carries the literal unconstrained maximum of `C1` over
/// product inputs, which sits at the concurrence minimizer instead.
pub fn verify_relation1(d: &WeylVector, cfg: &SearchConfig) -> Result<CapacityRelationReport> {
    let e = capacities_closed_form(d).e_max_prod;
    let ud = canonical_unitary(d);

    let best = max_concurrence_product(&ud, cfg)?;
    let (a, b) = best.factors.clone().expect("product search returns factors");
    let pair = relation1_signals(d, &a, &b)?;
    let c1 = c1_two_pure(pair.overlap)?;

    let worst = min_concurrence_product(&ud, cfg)?;
    let (a, b) = worst.factors.expect("product search returns factors");
    let literal = c1_two_pure(relation1_signals(d, &a, &b)?.overlap)?;

    Ok(CapacityRelationReport {
        relation: Relation::FirstOrder,
        e_max_prod: e,
        capacity_term: c1,
        relation_residual: (e + c1 - 1.0).abs(),
        overlap: pair.overlap,
        state: best.argmax_state,
        literal_capacity_term: Some(literal),
        literal_residual: Some((e + literal - 1.0).abs()),
    })
}

/// `E_max^prod = max_Phi C_inf(U_d^dag|Phi>, U_d|Phi>)`. The overlap of the
/// pair is `|<Phi|U_d^2|Phi>|`, so the maximum sits at the probe-overlap minimum.
pub fn verify_relation2(d: &WeylVector, cfg: &SearchConfig) -> Result<CapacityRelationReport> {
    let e = capacities_closed_form(d).e_max_prod;
    let ud = canonical_unitary(d);
    let search = min_probe_overlap(&ud.multiply(&ud)?, cfg)?;
    let probe = if search.direct.value <= search.simplex.value {
        search.direct.argmax_state
    } else {
        search.simplex.argmax_state
    };
    let pair = relation2_signals(d, &probe)?;
    let c = c_inf_two_pure(pair.overlap)?;
    Ok(CapacityRelationReport {
        relation: Relation::Collective,
        e_max_prod: e,
        capacity_term: c,
        relation_residual: (e - c).abs(),
        overlap: pair.overlap,
        state: probe,
        literal_capacity_term: None,
        literal_residual: None,
    })
}

/// Spin flip `(Y (x) Y)|psi*>` of a two-qubit state.
pub fn spin_flip(state: &PureState) -> Result<PureState> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: state.dim(),
        });
    }
    apply_yy(&state.conjugate())
}
