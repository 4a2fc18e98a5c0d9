//! End-to-end analysis of one two-qubit unitary.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::canonical::{cartan_decompose_with, eigenphases, DecomposeConfig, EigenPhases, WeylVector};
use crate::capacities::{verify_relation1, verify_relation2, CapacityRelationReport};
use crate::distinguishability::{verify_theorem, Route, TheoremResidual};
use crate::entanglement::{capacities_closed_form, CapacityReport};
use crate::error::Result;
use crate::linalg::UnitaryMatrix;
use crate::oracle::{numeric_theorem_residual, SearchConfig};

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    pub decompose: DecomposeConfig,
    /// Runs the oracle route and the capacity relations when set.
    pub search: Option<SearchConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSummary {
    pub d: WeylVector,
    pub global_phase: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DMinRoutes {
    pub closed: f64,
    pub geometric: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relations {
    pub first_order: CapacityRelationReport,
    pub collective: CapacityRelationReport,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub decompose: f64,
    pub closed_forms: f64,
    pub numeric: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub input_hash: String,
    pub canonical: CanonicalSummary,
    pub eigenphases: EigenPhases,
    pub capacities: CapacityReport,
    pub d_min: DMinRoutes,
    pub quadratic: Vec<TheoremResidual>,
    pub quartic: Vec<TheoremResidual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relations: Option<Relations>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    pub timings: Timings,
}

impl AnalysisReport {
    pub fn max_theorem_residual(&self) -> f64 {
        self.quadratic
            .iter()
            .chain(&self.quartic)
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    /// Copy with every timing zeroed, for byte-level comparison of reruns.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}

/// Decomposes `u` and evaluates every derived quantity. `input_hash` is
/// recorded verbatim.
pub fn analyze(u: &UnitaryMatrix, input_hash: &str, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let start = Instant::now();
    let form = cartan_decompose_with(u, &opts.decompose)?;
    let t_decompose = start.elapsed().as_secs_f64();

    let d = form.d;
    let closed_start = Instant::now();
    let capacities = capacities_closed_form(&d);
    let theorem = verify_theorem(&d)?;
    let (closed, geometric) = (theorem.d_min_closed, theorem.d_min_geometric);
    let (mut quadratic, mut quartic) = (theorem.quadratic, theorem.quartic);
    let t_closed = closed_start.elapsed().as_secs_f64();

    let numeric_start = Instant::now();
    let (numeric, relations) = match &opts.search {
        Some(cfg) => {
            let q = numeric_theorem_residual(&d, cfg)?;
            let overlap = q.d_min_sq.sqrt();
            // With the oracle maximum c, c_max^4 = c^2 as well.
            quartic.push(TheoremResidual::new(q.c_prod_sq, overlap, Route::Numeric));
            quadratic.push(q);
            let relations = Relations {
                first_order: verify_relation1(&d, cfg)?,
                collective: verify_relation2(&d, cfg)?,
            };
            (Some(overlap), Some(relations))
        }
        None => (None, None),
    };
    let t_numeric = numeric_start.elapsed().as_secs_f64();

    Ok(AnalysisReport {
        input_hash: input_hash.to_owned(),
        canonical: CanonicalSummary {
            d,
            global_phase: form.global_phase,
            residual: form.residual,
        },
        eigenphases: eigenphases(&d),
        capacities,
        d_min: DMinRoutes {
            closed,
            geometric,
            numeric,
        },
        quadratic,
        quartic,
        relations,
        search: opts.search,
        timings: Timings {
            decompose: t_decompose,
            closed_forms: t_closed,
            numeric: t_numeric,
            total: start.elapsed().as_secs_f64(),
        },
    })
}
