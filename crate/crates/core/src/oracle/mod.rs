//! Brute-force optimizers that check the closed forms independently.
//!
//! Each search evaluates a coarse grid over an angle parametrization of the
//! relevant state manifold, then refines the best grid points together with
//! random restarts using Nelder-Mead. Restarts run in parallel; shard `k`
//! draws its start from a ChaCha stream derived from `(seed, k)`, and results
//! are reduced in shard order, so the outcome depends only on the config.

mod nelder_mead;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_unitary, WeylVector};
use crate::distinguishability::{Route, TheoremResidual};
use crate::error::{Error, Result};
use crate::linalg::{eig_unitary, CVector, PureState, UnitaryMatrix, C64};

pub use nelder_mead::{nelder_mead, refine, LocalMin};

/// Search effort and seeding shared by every oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Grid points per angle for four-parameter searches; six-parameter
    /// searches use a third of this (at least 4).
    pub coarse_grid_per_angle: usize,
    pub restarts: usize,
    /// Nelder-Mead iterations per refinement round.
    pub refine_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            coarse_grid_per_angle: 24,
            restarts: 32,
            refine_iterations: 200,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.coarse_grid_per_angle > 0
            && self.restarts > 0
            && self.refine_iterations > 0
            && self.tolerance > 0.0;
        if positive {
            Ok(())
        } else {
            Err(Error::Malformed(format!("search config must be positive: {self:?}")))
        }
    }

    fn grid_6d(&self) -> usize {
        (self.coarse_grid_per_angle / 3).max(4)
    }
}

/// Best value found and the state attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub value: f64,
    pub argmax_state: PureState,
    /// Single-qubit factors when the search ran over product states.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors: Option<(PureState, PureState)>,
    pub evaluations: u64,
    /// Best value on the coarse grid alone.
    pub grid_value: f64,
}

/// ChaCha stream `shard` of the generator seeded with `seed`.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

type Amps4 = [C64; 4];
type AmpsFn = dyn Fn(&[f64]) -> Amps4;

fn dense4(u: &UnitaryMatrix) -> [[C64; 4]; 4] {
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = u.entry(r, c);
        }
    }
    m
}

fn apply4(m: &[[C64; 4]; 4], v: &Amps4) -> Amps4 {
    let mut out = [C64::new(0.0, 0.0); 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// `2 |psi_00 psi_11 - psi_01 psi_10|`, which equals `2 sqrt(det rho_A)`.
fn concurrence4(v: &Amps4) -> f64 {
    (2.0 * (v[0] * v[3] - v[1] * v[2]).norm()).min(1.0)
}

fn qubit_amps(theta: f64, phi: f64) -> [C64; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [C64::from(c), C64::from_polar(s, phi)]
}

fn product_amps(x: &[f64]) -> Amps4 {
    let a = qubit_amps(x[0], x[1]);
    let b = qubit_amps(x[2], x[3]);
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// Unit vector from three hyperspherical angles and three relative phases.
fn state_amps(x: &[f64]) -> Amps4 {
    let (sa, ca) = x[0].sin_cos();
    let (sb, cb) = x[1].sin_cos();
    let (sc, cc) = x[2].sin_cos();
    [
        C64::from(ca),
        C64::from_polar(sa * cb, x[3]),
        C64::from_polar(sa * sb * cc, x[4]),
        C64::from_polar(sa * sb * sc, x[5]),
    ]
}

/// Inverse of [`state_amps`] up to global phase.
fn state_params(v: &Amps4) -> [f64; 6] {
    let r: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    let global = v[0].arg();
    let a = r[0].clamp(0.0, 1.0).acos();
    let b = r[1].atan2((r[2] * r[2] + r[3] * r[3]).sqrt());
    let b = PI / 2.0 - b;
    let c = r[3].atan2(r[2]);
    [
        a,
        b,
        c,
        v[1].arg() - global,
        v[2].arg() - global,
        v[3].arg() - global,
    ]
}

fn pure4(v: &Amps4) -> PureState {
    PureState::normalized(CVector::from_row_slice(v)).expect("finite non-zero amplitudes")
}

struct Axis {
    points: Vec<f64>,
    /// Range used to draw random restarts.
    span: (f64, f64),
}

fn polar_axis(n: usize, max: f64) -> Axis {
    Axis {
        points: (0..=n).map(|i| max * i as f64 / n as f64).collect(),
        span: (0.0, max),
    }
}

fn phase_axis(n: usize) -> Axis {
    Axis {
        points: (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect(),
        span: (0.0, 2.0 * PI),
    }
}

/// Minimizes `f` over the grid spanned by `axes`, then refines.
fn grid_then_refine<F>(axes: &[Axis], f: &F, cfg: &SearchConfig, iterations: usize) -> (LocalMin, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dims = axes.len();
    let sizes: Vec<usize> = axes.iter().map(|a| a.points.len()).collect();
    let total: usize = sizes.iter().product();
    let coords = |mut flat: usize, out: &mut [f64]| {
        for k in (0..dims).rev() {
            out[k] = axes[k].points[flat % sizes[k]];
            flat /= sizes[k];
        }
    };

    let mut scored: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut x = [0.0; 8];
            coords(flat, &mut x[..dims]);
            (f(&x[..dims]), flat)
        })
        .collect();
    let keep = cfg.restarts.div_ceil(2).min(total);
    scored.select_nth_unstable_by(keep.saturating_sub(1), |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(keep);
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let grid_best = scored[0].0;

    let step = axes
        .iter()
        .map(|a| (a.span.1 - a.span.0) / a.points.len().max(2) as f64)
        .fold(f64::INFINITY, f64::min);

    let starts: Vec<Vec<f64>> = (0..cfg.restarts)
        .map(|k| {
            if k < scored.len() {
                let mut x = vec![0.0; dims];
                coords(scored[k].1, &mut x);
                x
            } else {
                let mut rng = shard_rng(cfg.seed, k as u64);
                axes.iter()
                    .map(|a| rng.random_range(a.span.0..=a.span.1))
                    .collect()
            }
        })
        .collect();

    let refined: Vec<LocalMin> = starts
        .par_iter()
        .map(|x0| refine(f, x0, step, iterations, cfg.tolerance * 1e-6))
        .collect();
    let evaluations = total as u64 + refined.iter().map(|r| r.evaluations).sum::<u64>();
    let best = refined
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one restart");
    (LocalMin { evaluations, ..best }, grid_best)
}

fn product_axes(n: usize) -> Vec<Axis> {
    vec![polar_axis(n, PI), phase_axis(n), polar_axis(n, PI), phase_axis(n)]
}

fn state_axes(n: usize) -> Vec<Axis> {
    vec![
        polar_axis(n, PI / 2.0),
        polar_axis(n, PI / 2.0),
        polar_axis(n, PI / 2.0),
        phase_axis(n),
        phase_axis(n),
        phase_axis(n),
    ]
}

fn require_two_qubit(u: &UnitaryMatrix) -> Result<()> {
    if u.dim() == 4 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: 4,
            found: u.dim(),
        })
    }
}

fn product_search(u: &UnitaryMatrix, cfg: &SearchConfig, sign: f64) -> Result<SearchResult> {
    require_two_qubit(u)?;
    cfg.validate()?;
    let m = dense4(u);
    let f = |x: &[f64]| sign * concurrence4(&apply4(&m, &product_amps(x)));
    let axes = product_axes(cfg.coarse_grid_per_angle);
    let (best, grid_best) = grid_then_refine(&axes, &f, cfg, cfg.refine_iterations);
    let x = &best.x;
    let a = PureState::qubit(x[0], x[1]);
    let b = PureState::qubit(x[2], x[3]);
    Ok(SearchResult {
        value: sign * best.value,
        argmax_state: a.kron(&b)?,
        factors: Some((a, b)),
        evaluations: best.evaluations,
        grid_value: sign * grid_best,
    })
}

/// `max_{a, b} C(U |a> (x) |b>)`; each qubit is parametrized by polar and azimuthal angles.
pub fn max_concurrence_product(u: &UnitaryMatrix, cfg: &SearchConfig) -> Result<SearchResult> {
    product_search(u, cfg, -1.0)
}

/// `min_{a, b} C(U |a> (x) |b>)`.
pub fn min_concurrence_product(u: &UnitaryMatrix, cfg: &SearchConfig) -> Result<SearchResult> {
    product_search(u, cfg, 1.0)
}

/// `max_{Psi} [C(U|Psi>) - C(|Psi>)]` over all two-qubit pure states.
///
/// The product-state maximizer is included as one of the restarts, so the
/// result is never below the product-state optimum.
pub fn max_delta_concurrence(u: &UnitaryMatrix, cfg: &SearchConfig) -> Result<SearchResult> {
    require_two_qubit(u)?;
    cfg.validate()?;
    let m = dense4(u);
    let f = |x: &[f64]| {
        let psi = state_amps(x);
        concurrence4(&psi) - concurrence4(&apply4(&m, &psi))
    };
    let axes = state_axes(cfg.grid_6d());
    let iterations = cfg.refine_iterations * 3 / 2;
    let (mut best, grid_best) = grid_then_refine(&axes, &f, cfg, iterations);

    let product = max_concurrence_product(u, cfg)?;
    let mut seed_amps = [C64::new(0.0, 0.0); 4];
    for (i, a) in seed_amps.iter_mut().enumerate() {
        *a = product.argmax_state.amplitude(i);
    }
    let seeded = refine(&f, &state_params(&seed_amps), 0.05, iterations, cfg.tolerance * 1e-6);
    best.evaluations += seeded.evaluations + product.evaluations;
    if seeded.value < best.value {
        best = LocalMin {
            evaluations: best.evaluations,
            ..seeded
        };
    }
    Ok(SearchResult {
        value: -best.value,
        argmax_state: pure4(&state_amps(&best.x)),
        factors: None,
        evaluations: best.evaluations,
        grid_value: -grid_best,
    })
}

/// Both routes of the probe-overlap minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSearch {
    /// Search over probe states `|Phi>` of `|<Phi|V|Phi>|` directly.
    pub direct: SearchResult,
    /// Search over eigenbasis weights `p` of `|sum_j p_j e^{i theta_j}|`,
    /// finished by an exact scan of vertices, chords and triangles.
    pub simplex: SearchResult,
}

impl ProbeSearch {
    pub fn value(&self) -> f64 {
        self.direct.value.min(self.simplex.value)
    }

    pub fn agreement(&self) -> f64 {
        (self.direct.value - self.simplex.value).abs()
    }
}

fn expectation(m: &[[C64; 4]; 4], v: &Amps4, dim: usize) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for r in 0..dim {
        let mut row = C64::new(0.0, 0.0);
        for c in 0..dim {
            row += m[r][c] * v[c];
        }
        total += v[r].conj() * row;
    }
    total
}

fn direct_probe_search(v: &UnitaryMatrix, cfg: &SearchConfig) -> Result<SearchResult> {
    let dim = v.dim();
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for (r, row) in m.iter_mut().enumerate().take(dim) {
        for (c, e) in row.iter_mut().enumerate().take(dim) {
            *e = v.entry(r, c);
        }
    }
    let (best, grid_best, amps): (LocalMin, f64, Box<AmpsFn>) = if dim == 2 {
        let to_amps = |x: &[f64]| {
            let q = qubit_amps(x[0], x[1]);
            [q[0], q[1], C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
        };
        let f = |x: &[f64]| expectation(&m, &to_amps(x), 2).norm();
        let axes = vec![polar_axis(cfg.coarse_grid_per_angle, PI), phase_axis(cfg.coarse_grid_per_angle)];
        let (best, g) = grid_then_refine(&axes, &f, cfg, cfg.refine_iterations);
        (best, g, Box::new(to_amps))
    } else {
        let f = |x: &[f64]| expectation(&m, &state_amps(x), 4).norm();
        let axes = state_axes(cfg.grid_6d());
        let (best, g) = grid_then_refine(&axes, &f, cfg, cfg.refine_iterations * 3 / 2);
        (best, g, Box::new(state_amps))
    };
    let a = amps(&best.x);
    let state = PureState::normalized(CVector::from_row_slice(&a[..dim]))?;
    Ok(SearchResult {
        value: best.value,
        argmax_state: state,
        factors: None,
        evaluations: best.evaluations,
        grid_value: grid_best,
    })
}

/// Point of `conv{z_j}` nearest the origin, as weights over the points.
fn exact_simplex_minimum(points: &[C64]) -> (f64, Vec<f64>) {
    let n = points.len();
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for j in 0..n {
        if points[j].norm() < best.0 {
            let mut w = vec![0.0; n];
            w[j] = 1.0;
            best = (points[j].norm(), w);
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let (a, b) = (points[j], points[k]);
            let ab = b - a;
            let len2 = ab.norm_sqr();
            if len2 == 0.0 {
                continue;
            }
            let t = (-(a.re * ab.re + a.im * ab.im) / len2).clamp(0.0, 1.0);
            let dist = (a + ab * t).norm();
            if dist < best.0 {
                let mut w = vec![0.0; n];
                w[j] = 1.0 - t;
                w[k] = t;
                best = (dist, w);
            }
        }
    }
    // Barycentric test for the origin inside a triangle.
    for j in 0..n {
        for k in (j + 1)..n {
            for l in (k + 1)..n {
                let (a, b, c) = (points[j], points[k], points[l]);
                let cross = |u: C64, v: C64| u.re * v.im - u.im * v.re;
                let area = cross(b - a, c - a);
                if area.abs() < 1e-14 {
                    continue;
                }
                let wa = cross(b, c) / area;
                let wb = cross(c, a) / area;
                let wc = cross(a, b) / area;
                if wa >= 0.0 && wb >= 0.0 && wc >= 0.0 {
                    let mut w = vec![0.0; n];
                    w[j] = wa;
                    w[k] = wb;
                    w[l] = wc;
                    best = (0.0, w);
                }
            }
        }
    }
    best
}

fn simplex_probe_search(v: &UnitaryMatrix, cfg: &SearchConfig) -> Result<SearchResult> {
    let spectrum = eig_unitary(v)?;
    let points = spectrum.eigenvalues();
    let n = points.len();
    let weights = |x: &[f64]| {
        let total: f64 = x.iter().map(|t| t * t).sum();
        x.iter().map(|t| t * t / total).collect::<Vec<f64>>()
    };
    let f = |x: &[f64]| {
        let w = weights(x);
        points.iter().zip(&w).map(|(z, p)| z * p).sum::<C64>().norm()
    };
    let axes: Vec<Axis> = (0..n)
        .map(|_| Axis {
            points: (0..=cfg.coarse_grid_per_angle.min(12))
                .map(|i| i as f64 / cfg.coarse_grid_per_angle.min(12) as f64)
                .collect(),
            span: (0.0, 1.0),
        })
        .collect();
    let guarded = |x: &[f64]| {
        if x.iter().all(|t| *t == 0.0) {
            f64::INFINITY
        } else {
            f(x)
        }
    };
    let (numeric, grid_best) = grid_then_refine(&axes, &guarded, cfg, cfg.refine_iterations);
    let (exact_value, exact_weights) = exact_simplex_minimum(&points);

    let (value, w) = if exact_value <= numeric.value {
        (exact_value, exact_weights)
    } else {
        (numeric.value, weights(&numeric.x))
    };
    let mut phi = CVector::zeros(n);
    for (j, p) in w.iter().enumerate() {
        phi += spectrum.eigenvectors.column(j) * C64::from(p.max(0.0).sqrt());
    }
    Ok(SearchResult {
        value,
        argmax_state: PureState::normalized(phi)?,
        factors: None,
        evaluations: numeric.evaluations,
        grid_value: grid_best,
    })
}

/// `min_{|Phi|=1} |<Phi|V|Phi>|`, by direct state search and by search over
/// eigenbasis weights.
pub fn min_probe_overlap(v: &UnitaryMatrix, cfg: &SearchConfig) -> Result<ProbeSearch> {
    cfg.validate()?;
    Ok(ProbeSearch {
        direct: direct_probe_search(v, cfg)?,
        simplex: simplex_probe_search(v, cfg)?,
    })
}

/// Theorem residual with both terms taken from the oracles: the product
/// concurrence maximum of `U_d` and the probe-overlap minimum of `U_d^2`.
pub fn numeric_theorem_residual(d: &WeylVector, cfg: &SearchConfig) -> Result<TheoremResidual> {
    let ud = canonical_unitary(d);
    let c = max_concurrence_product(&ud, cfg)?.value;
    let v = ud.multiply(&ud)?;
    let overlap = min_probe_overlap(&v, cfg)?.value();
    Ok(TheoremResidual::new(c * c, overlap, Route::Numeric))
}
