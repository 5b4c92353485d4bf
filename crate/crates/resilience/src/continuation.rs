//! Global continuation: sweep a parameter curve, re-find attractors at each
//! step (seeding from the previous step's attractors), match them across
//! steps by set distance so ids stay stable, and estimate the full measure
//! set per attractor per step.

use std::collections::BTreeMap;

use crate::attractors::{map_ic_recurrence, AttractorStore, RecurrenceConfig};
use crate::dynsys::{max_lyapunov, IntegratorConfig, VectorField};
use crate::error::{ContinuationError, MapError};
use crate::grid::Grid;
use crate::local::{local_measures, LocalMeasures};
use crate::nonlocal::{accumulate, BasinAccumulator, IcSampler, NonlocalMeasures, UniformBoxSampler, WeightFunction};

/// Ordered parameter assignments, one set per continuation step. Every step
/// assigns the same parameter indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterCurve {
    steps: Vec<Vec<(usize, f64)>>,
}

impl ParameterCurve {
    pub fn new(steps: Vec<Vec<(usize, f64)>>) -> Result<Self, ContinuationError> {
        if steps.is_empty() {
            return Err(ContinuationError::InvalidCurve("curve has no steps".into()));
        }
        let first: Vec<usize> = steps[0].iter().map(|(i, _)| *i).collect();
        for (k, s) in steps.iter().enumerate() {
            let idx: Vec<usize> = s.iter().map(|(i, _)| *i).collect();
            if idx != first {
                return Err(ContinuationError::InvalidCurve(format!(
                    "step {k} assigns parameter indices {idx:?}, expected {first:?}"
                )));
            }
        }
        Ok(Self { steps })
    }

    /// A curve varying a single parameter over the given values.
    pub fn single(param_index: usize, values: &[f64]) -> Result<Self, ContinuationError> {
        Self::new(values.iter().map(|&v| vec![(param_index, v)]).collect())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn step(&self, k: usize) -> &[(usize, f64)] {
        &self.steps[k]
    }

    /// The first assigned parameter's value at step `k` (the natural x-axis
    /// of single-parameter sweeps).
    pub fn leading_value(&self, k: usize) -> f64 {
        self.steps[k][0].1
    }

    fn apply(&self, field: &VectorField, k: usize) -> VectorField {
        let mut f = field.clone();
        for &(idx, v) in &self.steps[k] {
            f.set_param(idx, v);
        }
        f
    }
}

/// Greedy matching of `next` attractors to `prev` attractors by ascending
/// set distance (minimum pairwise point distance). Pairs farther apart than
/// `threshold` stay unmatched; the result maps next-ids to prev-ids and is a
/// partial injection.
pub fn match_attractors(prev: &AttractorStore, next: &AttractorStore, threshold: f64) -> BTreeMap<u32, u32> {
    let mut pairs: Vec<(f64, u32, u32)> = Vec::new();
    for a in prev.iter() {
        for b in next.iter() {
            let d = a.set_distance(b);
            if d <= threshold {
                pairs.push((d, a.id, b.id));
            }
        }
    }
    pairs.sort_by(|x, y| x.partial_cmp(y).expect("distances are comparable"));
    let mut used_prev = std::collections::BTreeSet::new();
    let mut used_next = std::collections::BTreeSet::new();
    let mut mapping = BTreeMap::new();
    for (_, p, n) in pairs {
        if used_prev.contains(&p) || used_next.contains(&n) {
            continue;
        }
        used_prev.insert(p);
        used_next.insert(n);
        mapping.insert(n, p);
    }
    mapping
}

/// Number of seed points taken from each previous attractor's cloud before
/// random seeds are drawn.
const SEEDS_PER_ATTRACTOR: usize = 10;

/// Runs the recurrence mapper at every step of the curve and matches the
/// resulting attractors to the previous step, keeping ids stable. Matched
/// attractors keep their id, unmatched new ones get fresh ids, vanished ids
/// are absent from that step onward.
#[allow(clippy::too_many_arguments)]
pub fn global_continuation(
    field: &VectorField,
    curve: &ParameterCurve,
    grid: &Grid,
    rc: &RecurrenceConfig,
    cfg: &IntegratorConfig,
    seeds_per_step: usize,
    seed: u64,
    match_threshold: f64,
) -> Result<Vec<AttractorStore>, ContinuationError> {
    let mut stores: Vec<AttractorStore> = Vec::with_capacity(curve.len());
    let mut next_fresh_id: u32 = 1;

    for k in 0..curve.len() {
        let field_k = curve.apply(field, k);
        let mut raw = AttractorStore::new(grid);

        let mut seeds: Vec<Vec<f64>> = Vec::new();
        if let Some(prev) = stores.last() {
            for a in prev.iter() {
                let m = a.points.len();
                let take = SEEDS_PER_ATTRACTOR.min(m);
                for s in 0..take {
                    seeds.push(a.points[s * m / take].clone());
                }
            }
        }
        let sampler = UniformBoxSampler::new(grid.bounds(), seed, find_context(k));
        for i in 0..seeds_per_step as u64 {
            seeds.push(sampler.sample(i));
        }

        for ic in &seeds {
            match map_ic_recurrence(&field_k, ic, grid, rc, cfg, &mut raw) {
                Ok(_) => {}
                // seeds from a moved attractor may fall off the grid
                Err(MapError::OutsideGrid) => {}
                Err(e) => return Err(e.into()),
            }
        }
        if raw.is_empty() {
            return Err(ContinuationError::NoAttractorsFound { step: k, value: curve.leading_value(k) });
        }

        let matched = if let Some(prev) = stores.last() {
            let mapping = match_attractors(prev, &raw, match_threshold);
            let mut rename = BTreeMap::new();
            for id in raw.ids() {
                let new_id = mapping.get(&id).copied().unwrap_or_else(|| {
                    let fresh = next_fresh_id;
                    next_fresh_id += 1;
                    fresh
                });
                rename.insert(id, new_id);
            }
            raw.relabeled(&rename)
        } else {
            next_fresh_id = raw.ids().iter().max().copied().unwrap_or(0) + 1;
            raw
        };
        next_fresh_id = next_fresh_id.max(matched.ids().iter().max().copied().unwrap_or(0) + 1);
        stores.push(matched);
    }
    Ok(stores)
}

fn find_context(step: usize) -> u64 {
    step as u64
}

fn measure_context(step: usize) -> u64 {
    (1 << 20) + step as u64
}

/// The full measure set of one attractor at one parameter value.
#[derive(Debug, Clone)]
pub struct MeasureSet {
    /// `None` for non-point attractors (rendered "n.a.")
    pub local: Option<LocalMeasures>,
    /// `None` when the attractor had no resolved basin sample
    pub nonlocal: Option<NonlocalMeasures>,
    pub lyapunov_max: f64,
    /// mean norm of the attractor's constituent points
    pub summary: f64,
}

/// Measures of every attractor at one continuation step.
#[derive(Debug, Clone)]
pub struct StepMeasures {
    pub store: AttractorStore,
    pub measures: BTreeMap<u32, MeasureSet>,
    pub unresolved_fraction: f64,
    pub divergence_weight: f64,
    /// divergence weight restricted to the finite-time horizon
    pub divergence_weight_finite_time: f64,
}

/// Matched attractors plus their measure sets along a parameter curve.
#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub curve: ParameterCurve,
    pub steps: Vec<StepMeasures>,
}

/// Settings of the measure pass that runs on top of matched stores.
#[derive(Debug, Clone)]
pub struct MeasurePass {
    pub sample_box: Vec<(f64, f64)>,
    pub samples_per_step: usize,
    pub epsilon: f64,
    pub finite_time: f64,
    pub weights: WeightFunction,
    pub seed: u64,
    pub lyap_transient: f64,
    pub lyap_total: f64,
    /// clouds with diameter within this many cell diagonals count as point
    /// attractors for the local measures
    pub point_attractor_cells: f64,
}

impl MeasurePass {
    pub fn new(sample_box: Vec<(f64, f64)>, samples_per_step: usize, epsilon: f64, finite_time: f64, seed: u64) -> Self {
        Self {
            sample_box,
            samples_per_step,
            epsilon,
            finite_time,
            weights: WeightFunction::uniform(),
            seed,
            lyap_transient: 100.0,
            lyap_total: 1000.0,
            point_attractor_cells: 10.0,
        }
    }
}

/// For each step: draw fresh initial conditions, accumulate (B, τ, d) with
/// the proximity mapper, and assemble local measures, nonlocal measures, the
/// maximal Lyapunov exponent, and the state summary per attractor.
/// `on_accumulator` sees every step's raw accumulator (for offline dumps).
pub fn measures_along_continuation(
    field: &VectorField,
    stores: &[AttractorStore],
    curve: &ParameterCurve,
    pass: &MeasurePass,
    cfg: &IntegratorConfig,
    mut on_accumulator: impl FnMut(usize, &BasinAccumulator),
) -> Result<ContinuationResult, ContinuationError> {
    assert_eq!(stores.len(), curve.len(), "stores must be aligned with the curve");
    let mut steps = Vec::with_capacity(stores.len());
    for (k, store) in stores.iter().enumerate() {
        let field_k = curve.apply(field, k);
        let sampler = UniformBoxSampler::new(pass.sample_box.clone(), pass.seed, measure_context(k));
        let acc = accumulate(
            &field_k,
            store,
            &sampler,
            pass.samples_per_step,
            pass.epsilon,
            &pass.weights,
            cfg,
        )
        .map_err(ContinuationError::Map)?;
        on_accumulator(k, &acc);

        let point_threshold = pass.point_attractor_cells * store.cell_diagonal();
        let mut measures = BTreeMap::new();
        for a in store.iter() {
            let local = local_measures(&field_k, a, point_threshold)
                .map_err(|e| ContinuationError::Map(MapError::Dyn(crate::error::DynError::InvalidConfig(e.to_string()))))?;
            let nonlocal = match NonlocalMeasures::from_accumulator(&acc, a.id, pass.finite_time) {
                Ok(m) => Some(m),
                Err(MapError::EmptyBasin(_)) => None,
                Err(e) => return Err(ContinuationError::Map(e)),
            };
            let lyapunov_max = max_lyapunov(&field_k, &a.points[0], cfg, pass.lyap_transient, pass.lyap_total)
                .unwrap_or(f64::NAN);
            measures.insert(
                a.id,
                MeasureSet { local, nonlocal, lyapunov_max, summary: a.mean_norm() },
            );
        }
        steps.push(StepMeasures {
            store: store.clone(),
            measures,
            unresolved_fraction: acc.unresolved_fraction(),
            divergence_weight: acc.basin_stability(0).map_err(ContinuationError::Map)?,
            divergence_weight_finite_time: acc
                .finite_time_basin_stability(0, pass.finite_time)
                .map_err(ContinuationError::Map)?,
        });
    }
    Ok(ContinuationResult { curve: curve.clone(), steps })
}
