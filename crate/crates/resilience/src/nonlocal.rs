//! Monte Carlo estimation of the nonlocal resilience measures from the
//! three recorded quantities per sampled initial condition: basin label B,
//! convergence time τ, and the initial distances d to every attractor.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attractors::{map_ic_proximity_indexed, AttractorStore, Label, ProximityIndex};
use crate::dynsys::{IntegratorConfig, VectorField};
use crate::error::MapError;

/// Density of the initial-condition distribution ν relative to the uniform
/// sampling density on the box (uniform ν is exactly w ≡ 1).
#[derive(Clone)]
pub struct WeightFunction {
    w: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl WeightFunction {
    pub fn uniform() -> Self {
        Self { w: Arc::new(|_| 1.0) }
    }

    pub fn from_fn<F>(w: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { w: Arc::new(w) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = (self.w)(x);
        debug_assert!(v >= 0.0, "weight density must be nonnegative");
        v
    }
}

impl std::fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("WeightFunction")
    }
}

/// Deterministic source of initial conditions: sample `i` depends only on
/// (seed, context, i), so results are independent of worker scheduling.
pub trait IcSampler: Send + Sync {
    fn dim(&self) -> usize;
    fn sample(&self, index: u64) -> Vec<f64>;
}

/// Uniform sampler on a box, backed by per-index ChaCha streams.
#[derive(Debug, Clone)]
pub struct UniformBoxSampler {
    bounds: Vec<(f64, f64)>,
    seed: u64,
    stream_base: u64,
}

impl UniformBoxSampler {
    /// `context` separates independent sampling passes (e.g. continuation
    /// steps) drawing from the same seed.
    pub fn new(bounds: Vec<(f64, f64)>, seed: u64, context: u64) -> Self {
        assert!(bounds.iter().all(|(lo, hi)| lo < hi), "sampler box must have positive extent");
        assert!(context < (1 << 24), "sampler context out of range");
        Self { bounds, seed, stream_base: context << 40 }
    }
}

impl IcSampler for UniformBoxSampler {
    fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn sample(&self, index: u64) -> Vec<f64> {
        debug_assert!(index < (1 << 40));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_base | index);
        self.bounds
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
            .collect()
    }
}

/// Everything recorded while mapping N initial conditions: the points, their
/// basin labels, convergence times, the N×J matrix of initial distances to
/// the attractors, and the weight density at each point.
#[derive(Debug, Clone)]
pub struct BasinAccumulator {
    pub ics: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub taus: Vec<f64>,
    /// row-major N×J, columns ordered like `ids`
    pub dists: Vec<f64>,
    pub weights: Vec<f64>,
    pub ids: Vec<u32>,
}

impl BasinAccumulator {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_attractors(&self) -> usize {
        self.ids.len()
    }

    fn column(&self, id: u32) -> Result<usize, MapError> {
        self.ids.binary_search(&id).map_err(|_| MapError::UnknownAttractor(id))
    }

    pub fn dist(&self, i: usize, col: usize) -> f64 {
        self.dists[i * self.ids.len() + col]
    }

    fn resolved_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_resolved()).count()
    }

    pub fn unresolved_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        1.0 - self.resolved_count() as f64 / self.len() as f64
    }

    /// Basin stability: the weighted fraction of resolved samples labeled
    /// `j`. Label 0 queries the divergence weight.
    pub fn basin_stability(&self, j: u32) -> Result<f64, MapError> {
        if j != 0 {
            self.column(j)?;
        }
        let n = self.resolved_count();
        if n == 0 {
            return Ok(0.0);
        }
        let s: f64 = self
            .labels
            .iter()
            .zip(&self.weights)
            .filter(|(l, _)| l.id() == Some(j))
            .map(|(_, w)| w)
            .sum();
        Ok(s / n as f64)
    }

    /// Minimal critical shock: smallest initial distance to attractor `j`
    /// among resolved positive-weight samples not converging to `j`
    /// (divergence included); +inf when every such sample converges to `j`.
    pub fn minimal_critical_shock(&self, j: u32) -> Result<f64, MapError> {
        let col = self.column(j)?;
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            if self.labels[i].is_resolved() && self.labels[i].id() != Some(j) && self.weights[i] > 0.0 {
                best = best.min(self.dist(i, col));
            }
        }
        Ok(best)
    }

    /// Maximal non-critical shock: largest initial distance to `j` among
    /// positive-weight samples in its basin.
    pub fn maximal_noncritical_shock(&self, j: u32) -> Result<f64, MapError> {
        let col = self.column(j)?;
        let mut best: Option<f64> = None;
        for i in 0..self.len() {
            if self.labels[i] == Label::To(j) && self.weights[i] > 0.0 {
                let d = self.dist(i, col);
                best = Some(best.map_or(d, |b: f64| b.max(d)));
            }
        }
        best.ok_or(MapError::EmptyBasin(j))
    }

    fn basin_entries(&self, j: u32, value: impl Fn(usize) -> f64) -> Result<Vec<(f64, f64)>, MapError> {
        self.column(j)?;
        let entries: Vec<(f64, f64)> = (0..self.len())
            .filter(|&i| self.labels[i] == Label::To(j) && self.weights[i] > 0.0)
            .map(|i| (value(i), self.weights[i]))
            .collect();
        if entries.is_empty() {
            return Err(MapError::EmptyBasin(j));
        }
        Ok(entries)
    }

    /// Weighted median of the convergence times over basin `j`.
    pub fn median_convergence_time(&self, j: u32) -> Result<f64, MapError> {
        let entries = self.basin_entries(j, |i| self.taus[i])?;
        Ok(weighted_median(entries))
    }

    /// Weighted median of the convergence paces τ/d over basin `j`; samples
    /// starting on the attractor contribute pace 0.
    pub fn median_convergence_pace(&self, j: u32) -> Result<f64, MapError> {
        let col = self.column(j)?;
        let entries = self.basin_entries(j, |i| {
            let d = self.dist(i, col);
            if d == 0.0 {
                0.0
            } else {
                self.taus[i] / d
            }
        })?;
        Ok(weighted_median(entries))
    }

    /// Finite-time basin stability: weighted fraction of resolved samples
    /// labeled `j` with τ ≤ t_horizon. Equals basin stability for
    /// `t_horizon = +inf`.
    pub fn finite_time_basin_stability(&self, j: u32, t_horizon: f64) -> Result<f64, MapError> {
        if j != 0 {
            self.column(j)?;
        }
        let n = self.resolved_count();
        if n == 0 {
            return Ok(0.0);
        }
        let s: f64 = (0..self.len())
            .filter(|&i| self.labels[i].id() == Some(j) && self.taus[i] <= t_horizon)
            .map(|i| self.weights[i])
            .sum();
        Ok(s / n as f64)
    }
}

/// Weighted median: smallest value whose cumulative weight reaches half of
/// the total; when it lands on exactly half, the midpoint with the next
/// value is taken (so the plain median of an even count averages the two
/// middle entries).
fn weighted_median(mut entries: Vec<(f64, f64)>) -> f64 {
    entries.sort_by(|a, b| a.partial_cmp(b).expect("median entries must be comparable"));
    let total: f64 = entries.iter().map(|e| e.1).sum();
    let half = total / 2.0;
    let mut acc = 0.0;
    for (k, &(v, w)) in entries.iter().enumerate() {
        acc += w;
        if acc >= half {
            if acc == half && k + 1 < entries.len() {
                return 0.5 * (v + entries[k + 1].0);
            }
            return v;
        }
    }
    entries.last().expect("nonempty entries").0
}

/// The six nonlocal measures of one attractor under the weighting
/// distribution; the basin-shape entries are absent when no resolved sample
/// landed in the basin.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalMeasures {
    pub min_critical_shock: f64,
    pub max_noncritical_shock: Option<f64>,
    pub basin_stability: f64,
    pub median_tau: Option<f64>,
    pub median_pace: Option<f64>,
    pub finite_time_basin_stability: f64,
}

impl NonlocalMeasures {
    pub fn from_accumulator(acc: &BasinAccumulator, j: u32, t_horizon: f64) -> Result<Self, MapError> {
        Ok(Self {
            min_critical_shock: acc.minimal_critical_shock(j)?,
            max_noncritical_shock: acc.maximal_noncritical_shock(j).ok(),
            basin_stability: acc.basin_stability(j)?,
            median_tau: acc.median_convergence_time(j).ok(),
            median_pace: acc.median_convergence_pace(j).ok(),
            finite_time_basin_stability: acc.finite_time_basin_stability(j, t_horizon)?,
        })
    }
}

/// Draws N initial conditions and maps each by ε-proximity, in parallel.
/// The result is a deterministic function of (sampler, store, ε, cfg) and
/// does not depend on the number of workers.
pub fn accumulate(
    field: &VectorField,
    store: &AttractorStore,
    sampler: &dyn IcSampler,
    n: usize,
    epsilon: f64,
    weights: &WeightFunction,
    cfg: &IntegratorConfig,
) -> Result<BasinAccumulator, MapError> {
    let index = ProximityIndex::new(store, epsilon)?;
    let rows: Result<Vec<_>, MapError> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let x0 = sampler.sample(i);
            let out = map_ic_proximity_indexed(field, &x0, &index, cfg)?;
            let w = weights.eval(&x0);
            Ok((x0, out, w))
        })
        .collect();
    let rows = rows?;

    let ids = store.ids();
    let mut acc = BasinAccumulator {
        ics: Vec::with_capacity(n),
        labels: Vec::with_capacity(n),
        taus: Vec::with_capacity(n),
        dists: Vec::with_capacity(n * ids.len()),
        weights: Vec::with_capacity(n),
        ids,
    };
    for (x0, out, w) in rows {
        acc.ics.push(x0);
        acc.labels.push(out.label);
        acc.taus.push(out.tau);
        acc.dists.extend_from_slice(&out.dists);
        acc.weights.push(w);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_ic_accumulator() -> BasinAccumulator {
        // two attractors (ids 1, 2); rows: one in basin 1, one in basin 2
        BasinAccumulator {
            ics: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            labels: vec![Label::To(1), Label::To(2)],
            taus: vec![2.0, 6.0],
            dists: vec![0.5, 2.0, 0.8, 1.0],
            weights: vec![1.0, 1.0],
            ids: vec![1, 2],
        }
    }

    #[test]
    fn basin_stability_trivial_cases() {
        let mut acc = two_ic_accumulator();
        assert_relative_eq!(acc.basin_stability(1).unwrap(), 0.5);
        acc.labels = vec![Label::To(1), Label::To(1)];
        assert_relative_eq!(acc.basin_stability(1).unwrap(), 1.0);
        assert_relative_eq!(acc.basin_stability(2).unwrap(), 0.0);
        assert!(matches!(acc.basin_stability(9), Err(MapError::UnknownAttractor(9))));
    }

    #[test]
    fn minimal_critical_shock_uses_other_basins() {
        let acc = two_ic_accumulator();
        // for j=1 the only row with B != 1 is row 1, at distance 0.8
        assert_relative_eq!(acc.minimal_critical_shock(1).unwrap(), 0.8);
        let mut all_j = acc.clone();
        all_j.labels = vec![Label::To(1), Label::To(1)];
        assert!(all_j.minimal_critical_shock(1).unwrap().is_infinite());
    }

    #[test]
    fn maximal_noncritical_shock_examples() {
        let mut acc = two_ic_accumulator();
        acc.labels = vec![Label::To(1), Label::To(1)];
        acc.dists = vec![0.3, 2.0, 0.7, 1.0];
        assert_relative_eq!(acc.maximal_noncritical_shock(1).unwrap(), 0.7);
        acc.labels = vec![Label::To(2), Label::To(2)];
        assert!(matches!(acc.maximal_noncritical_shock(1), Err(MapError::EmptyBasin(1))));
    }

    #[test]
    fn median_tau_examples() {
        let mut acc = two_ic_accumulator();
        acc.labels = vec![Label::To(1), Label::To(1)];
        acc.taus = vec![3.0, 3.0];
        assert_relative_eq!(acc.median_convergence_time(1).unwrap(), 3.0);

        // median ignores the outlier
        let acc3 = BasinAccumulator {
            ics: vec![vec![0.0], vec![0.0], vec![0.0]],
            labels: vec![Label::To(1); 3],
            taus: vec![1.0, 2.0, 100.0],
            dists: vec![1.0, 1.0, 1.0],
            weights: vec![1.0; 3],
            ids: vec![1],
        };
        assert_relative_eq!(acc3.median_convergence_time(1).unwrap(), 2.0);
    }

    #[test]
    fn median_pace_averages_even_counts() {
        let mut acc = two_ic_accumulator();
        acc.labels = vec![Label::To(1), Label::To(1)];
        acc.taus = vec![2.0, 6.0];
        acc.dists = vec![1.0, 2.0, 2.0, 1.0];
        // paces {2/1, 6/2} = {2, 3}
        assert_relative_eq!(acc.median_convergence_pace(1).unwrap(), 2.5);
    }

    #[test]
    fn pace_is_zero_on_the_attractor() {
        let acc = BasinAccumulator {
            ics: vec![vec![0.0]],
            labels: vec![Label::To(1)],
            taus: vec![0.0],
            dists: vec![0.0],
            weights: vec![1.0],
            ids: vec![1],
        };
        assert_relative_eq!(acc.median_convergence_pace(1).unwrap(), 0.0);
    }

    #[test]
    fn finite_time_limits() {
        let acc = two_ic_accumulator();
        assert_relative_eq!(
            acc.finite_time_basin_stability(1, f64::INFINITY).unwrap(),
            acc.basin_stability(1).unwrap()
        );
        assert_relative_eq!(acc.finite_time_basin_stability(1, 1.0).unwrap(), 0.0);
        assert_relative_eq!(acc.finite_time_basin_stability(1, 2.0).unwrap(), 0.5);
    }

    #[test]
    fn divergence_label_gets_stability_weight() {
        let acc = BasinAccumulator {
            ics: vec![vec![0.0], vec![0.0]],
            labels: vec![Label::Diverged, Label::To(1)],
            taus: vec![f64::INFINITY, 1.0],
            dists: vec![2.0, 0.5],
            weights: vec![1.0, 1.0],
            ids: vec![1],
        };
        assert_relative_eq!(acc.basin_stability(0).unwrap(), 0.5);
        assert_relative_eq!(acc.basin_stability(1).unwrap(), 0.5);
        // diverged samples never lie in a finite-time basin
        assert_relative_eq!(acc.finite_time_basin_stability(0, 1e9).unwrap(), 0.0);
        assert_relative_eq!(acc.finite_time_basin_stability(0, f64::INFINITY).unwrap(), 0.5);
    }

    #[test]
    fn unresolved_rows_are_excluded_everywhere() {
        let acc = BasinAccumulator {
            ics: vec![vec![0.0], vec![0.0], vec![0.0], vec![0.0]],
            labels: vec![Label::To(1), Label::Unresolved, Label::Diverged, Label::To(1)],
            taus: vec![1.0, f64::NAN, f64::INFINITY, 3.0],
            dists: vec![0.1, 9.9, 0.4, 0.2],
            weights: vec![1.0; 4],
            ids: vec![1],
        };
        assert_relative_eq!(acc.unresolved_fraction(), 0.25);
        // resolved partition sums to one
        let total = acc.basin_stability(0).unwrap() + acc.basin_stability(1).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        // the unresolved row's distance 9.9 must not enter s_min
        assert_relative_eq!(acc.minimal_critical_shock(1).unwrap(), 0.4);
    }

    #[test]
    fn sampler_is_deterministic_and_in_bounds() {
        let s = UniformBoxSampler::new(vec![(-2.0, 2.0), (0.0, 1.0)], 42, 3);
        let a = s.sample(17);
        let b = s.sample(17);
        assert_eq!(a, b);
        assert!(a[0] >= -2.0 && a[0] <= 2.0 && a[1] >= 0.0 && a[1] <= 1.0);
        assert_ne!(s.sample(17), s.sample(18));
        let other_ctx = UniformBoxSampler::new(vec![(-2.0, 2.0), (0.0, 1.0)], 42, 4);
        assert_ne!(s.sample(17), other_ctx.sample(17));
    }

    #[test]
    fn weighted_median_tie_break() {
        // cumulative weight hits half exactly within one value: take it
        assert_relative_eq!(weighted_median(vec![(1.0, 1.0), (2.0, 3.0)]), 2.0);
        // exact half boundary between values: midpoint
        assert_relative_eq!(weighted_median(vec![(1.0, 2.0), (5.0, 2.0)]), 3.0);
        assert_relative_eq!(weighted_median(vec![(4.0, 1.0)]), 4.0);
    }
}
