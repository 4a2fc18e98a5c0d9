//! Distinguishing two unitaries with a single pure probe.
//!
//! For `V = S^dag T`, the smallest achievable overlap `|<Phi|V|Phi>|` is the
//! distance from the origin to the convex hull of the eigenvalues of `V`.
//! Here that distance is compared with the product entangling capacity of the
//! canonical form: `c_max_prod^2 + D_min(U_d^2)^2 = 1`.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_unitary, WeylVector};
use crate::entanglement::{capacities_closed_form, is_perfect_entangler, nonnegative_representative};
use crate::error::{Error, Result};
use crate::linalg::{eig_unitary, max_abs_diff, wrap_phase, UnitaryMatrix, C64};

/// Phases closer than this are merged before building the hull.
pub const PHASE_CLUSTER_TOL: f64 = 1e-10;
/// Slack on `gap - pi` in the origin-in-hull test.
pub const GAP_TOL: f64 = 1e-12;
/// Bound on `|U_d - U_d^dag|` (strict) or `|U_d^2 - c I|` (up to phase).
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Convex hull of unit-circle points given by their phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumHull {
    /// Distinct phases in `(-pi, pi]`, ascending.
    pub phases: Vec<f64>,
    /// Hull vertices `[re, im]`, counter-clockwise.
    pub hull_vertices: Vec<[f64; 2]>,
    pub d_min: f64,
}

fn distance_to_segment(a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    // Parameter of the projection of the origin onto the line a + t (b - a).
    let t = (-(a.re * ab.re + a.im * ab.im) / len2).clamp(0.0, 1.0);
    (a + ab * t).norm()
}

/// Minimum distance from the origin to `conv{e^{i theta_j}}`.
///
/// The origin lies in the hull exactly when no circular gap between
/// consecutive distinct phases exceeds `pi`. Otherwise the nearest hull point
/// lies on the chord joining the two extreme points, the endpoints of the
/// largest gap.
pub fn hull_min_distance(phases: &[f64]) -> Result<SpectrumHull> {
    if phases.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut sorted: Vec<f64> = phases.iter().map(|&p| wrap_phase(p)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::with_capacity(sorted.len());
    for p in sorted {
        if distinct.last().is_none_or(|&last| p - last > PHASE_CLUSTER_TOL) {
            distinct.push(p);
        }
    }
    if distinct.len() > 1 {
        let wrap = distinct[0] + 2.0 * PI - distinct[distinct.len() - 1];
        if wrap <= PHASE_CLUSTER_TOL {
            distinct.pop();
        }
    }

    let n = distinct.len();
    let point = |t: f64| C64::from_polar(1.0, t);
    if n == 1 {
        let p = point(distinct[0]);
        return Ok(SpectrumHull {
            phases: distinct,
            hull_vertices: vec![[p.re, p.im]],
            d_min: 1.0,
        });
    }

    // Gap i runs from distinct[i] to distinct[i + 1] (cyclically).
    let gap = |i: usize| {
        if i + 1 < n {
            distinct[i + 1] - distinct[i]
        } else {
            distinct[0] + 2.0 * PI - distinct[n - 1]
        }
    };
    let (widest, max_gap) = (0..n)
        .map(|i| (i, gap(i)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n > 1");

    let start = (widest + 1) % n;
    let hull_vertices: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let p = point(distinct[(start + k) % n]);
            [p.re, p.im]
        })
        .collect();

    let d_min = if max_gap - PI <= GAP_TOL {
        0.0
    } else {
        let first = point(distinct[start]);
        let last = point(distinct[widest]);
        distance_to_segment(first, last).min(1.0)
    };
    Ok(SpectrumHull {
        phases: distinct,
        hull_vertices,
        d_min,
    })
}

/// Closed-form `D_min(U_d^2)`.
///
/// Zero for perfect entanglers; `cos(2(a_x + a_y))` when `a_x + a_y < pi/4`;
/// `-cos(2(a_y + a_z))` when `a_y + a_z > pi/4`. A negative `a_z` is mirrored first.
pub fn d_min_canonical(d: &WeylVector) -> f64 {
    let d = nonnegative_representative(d);
    if is_perfect_entangler(&d).expect("representative has a_z >= 0") {
        return 0.0;
    }
    let value = if d.alpha_x + d.alpha_y < FRAC_PI_4 {
        (2.0 * (d.alpha_x + d.alpha_y)).cos()
    } else {
        -(2.0 * (d.alpha_y + d.alpha_z)).cos()
    };
    value.clamp(0.0, 1.0)
}

/// `min_{|Phi|=1} |<Phi| S^dag T |Phi>|` via the spectrum of `S^dag T`.
pub fn min_overlap(s: &UnitaryMatrix, t: &UnitaryMatrix) -> Result<f64> {
    let v = s.adjoint().multiply(t)?;
    let spectrum = eig_unitary(&v)?;
    Ok(hull_min_distance(&spectrum.phases)?.d_min)
}

/// Geometric `D_min(U_d^2)` from the numerically computed spectrum of `U_d^2`.
pub fn d_min_geometric(d: &WeylVector) -> Result<f64> {
    let ud = canonical_unitary(d);
    min_overlap(&ud.adjoint(), &ud)
}

/// Which evaluation supplied the two terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Closed,
    Geometric,
    Numeric,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Closed => "closed",
            Route::Geometric => "geometric",
            Route::Numeric => "numeric",
        }
    }
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "closed" => Ok(Route::Closed),
            "geometric" => Ok(Route::Geometric),
            "numeric" => Ok(Route::Numeric),
            other => Err(Error::Malformed(format!("unknown route {other:?}"))),
        }
    }
}

/// `|c_prod_sq + d_min_sq - 1|` for one route. In the quartic form
/// `c_prod_sq` holds `c_max^4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremResidual {
    pub c_prod_sq: f64,
    pub d_min_sq: f64,
    pub residual: f64,
    pub route: Route,
}

impl TheoremResidual {
    pub fn new(capacity_term: f64, d_min: f64, route: Route) -> Self {
        let d_min_sq = d_min * d_min;
        Self {
            c_prod_sq: capacity_term,
            d_min_sq,
            residual: (capacity_term + d_min_sq - 1.0).abs(),
            route,
        }
    }
}

/// Both forms of the identity evaluated by the closed and geometric routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerification {
    pub d: WeylVector,
    pub d_min_closed: f64,
    pub d_min_geometric: f64,
    pub quadratic: Vec<TheoremResidual>,
    pub quartic: Vec<TheoremResidual>,
}

impl TheoremVerification {
    pub fn max_residual(&self) -> f64 {
        self.quadratic
            .iter()
            .chain(&self.quartic)
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn residual(&self, route: Route) -> Option<&TheoremResidual> {
        self.quadratic.iter().find(|r| r.route == route)
    }
}

/// Evaluates `c_max_prod^2 + D_min^2 = 1` and `c_max^4 + D_min^2 = 1`.
pub fn verify_theorem(d: &WeylVector) -> Result<TheoremVerification> {
    let caps = capacities_closed_form(d);
    let closed = d_min_canonical(d);
    let geometric = d_min_geometric(d)?;
    let quadratic_term = caps.c_max_prod * caps.c_max_prod;
    let quartic_term = caps.c_max.powi(4);
    Ok(TheoremVerification {
        d: *d,
        d_min_closed: closed,
        d_min_geometric: geometric,
        quadratic: vec![
            TheoremResidual::new(quadratic_term, closed, Route::Closed),
            TheoremResidual::new(quadratic_term, geometric, Route::Geometric),
        ],
        quartic: vec![
            TheoremResidual::new(quartic_term, closed, Route::Closed),
            TheoremResidual::new(quartic_term, geometric, Route::Geometric),
        ],
    })
}

/// Hermiticity of `U_d`, strictly and modulo a global phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hermiticity {
    /// `|U_d - U_d^dag|_max <= tol`.
    pub strict: bool,
    /// `U_d^2` is a phase times the identity.
    pub up_to_phase: bool,
    pub d_min: f64,
    pub c_max_prod: f64,
}

pub fn hermiticity(d: &WeylVector) -> Hermiticity {
    let ud = canonical_unitary(d);
    let strict = max_abs_diff(ud.matrix(), ud.adjoint().matrix()) <= HERMITICITY_TOL;
    let sq = ud.matrix() * ud.matrix();
    let c = sq[(0, 0)];
    let scaled = crate::linalg::identity(4).map(|z| z * c);
    let up_to_phase = max_abs_diff(&sq, &scaled) <= HERMITICITY_TOL;
    Hermiticity {
        strict,
        up_to_phase,
        d_min: d_min_canonical(d),
        c_max_prod: capacities_closed_form(d).c_max_prod,
    }
}

/// True when `U_d` is Hermitian up to a global phase, i.e. `U_d^2` is proportional to the identity.
///
/// In that case `D_min = 1` and the product entangling capacity vanishes.
pub fn is_hermitian_canonical(d: &WeylVector) -> bool {
    let h = hermiticity(d);
    if h.up_to_phase {
        debug_assert!((h.d_min - 1.0).abs() <= 1e-9, "D_min = {}", h.d_min);
        debug_assert!(h.c_max_prod <= 1e-9, "c_max_prod = {}", h.c_max_prod);
    }
    h.up_to_phase
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, ONE};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hull_examples() {
        assert_eq!(hull_min_distance(&[0.0; 4]).unwrap().d_min, 1.0);
        assert_eq!(hull_min_distance(&[0.0, PI]).unwrap().d_min, 0.0);
        let h = hull_min_distance(&[-FRAC_PI_4, FRAC_PI_4]).unwrap();
        assert!((h.d_min - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(h.hull_vertices.len(), 2);
        assert!(matches!(hull_min_distance(&[]), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn hull_wraps_across_pi() {
        // Points at +-(pi - 0.1) straddle the negative real axis.
        let h = hull_min_distance(&[PI - 0.1, -PI + 0.1]).unwrap();
        assert!((h.d_min - 0.1f64.cos()).abs() < 1e-14);
        // -pi and pi are one point.
        let h = hull_min_distance(&[PI, -PI]).unwrap();
        assert_eq!(h.phases.len(), 1);
    }

    #[test]
    fn hull_three_points_in_half_plane() {
        let h = hull_min_distance(&[0.2, 0.5, 1.4]).unwrap();
        assert!((h.d_min - (0.6f64).cos()).abs() < 1e-14);
        let h = hull_min_distance(&[0.0, 2.0, 4.0]).unwrap();
        assert_eq!(h.d_min, 0.0);
    }

    #[test]
    fn d_min_examples() {
        assert_eq!(d_min_canonical(&WeylVector::new(FRAC_PI_4, 0.0, 0.0)), 0.0);
        let v = d_min_canonical(&WeylVector::new(PI / 8.0, 0.0, 0.0));
        assert!((v - FRAC_1_SQRT_2).abs() < 1e-15);
        let q = FRAC_PI_4;
        assert!((d_min_canonical(&WeylVector::new(q, q, q)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_overlap_examples() {
        let id = UnitaryMatrix::identity(4).unwrap();
        assert!((min_overlap(&id, &id).unwrap() - 1.0).abs() < 1e-15);
        let t = UnitaryMatrix::new(diag(&[ONE, -ONE, ONE, ONE]), 1e-12).unwrap();
        assert_eq!(min_overlap(&id, &t).unwrap(), 0.0);
        let ud = canonical_unitary(&WeylVector::new(PI / 8.0, 0.0, 0.0));
        assert!((min_overlap(&ud.adjoint(), &ud).unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(min_overlap(&UnitaryMatrix::identity(2).unwrap(), &id).is_err());
    }

    #[test]
    fn theorem_examples() {
        let v = verify_theorem(&WeylVector::new(0.0, 0.0, 0.0)).unwrap();
        assert!(v.max_residual() <= 1e-12);
        let v = verify_theorem(&WeylVector::new(PI / 8.0, 0.0, 0.0)).unwrap();
        assert!(v.max_residual() <= 1e-12);
        assert!((v.quadratic[0].c_prod_sq - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hermiticity_examples() {
        assert!(is_hermitian_canonical(&WeylVector::new(0.0, 0.0, 0.0)));
        let q = FRAC_PI_4;
        let h = hermiticity(&WeylVector::new(q, q, q));
        assert!(h.up_to_phase && !h.strict);
        assert!(is_hermitian_canonical(&WeylVector::new(q, q, q)));
        assert!(!is_hermitian_canonical(&WeylVector::new(PI / 8.0, 0.0, 0.0)));
    }

    #[test]
    fn route_json_names() {
        let r = TheoremResidual::new(0.5, FRAC_1_SQRT_2, Route::Geometric);
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(v["route"], "geometric");
        assert!(v.get("c_prod_sq").is_some() && v.get("d_min_sq").is_some());
    }
}
