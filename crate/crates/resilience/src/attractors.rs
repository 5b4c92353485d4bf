//! Finding attractors by grid recurrences and mapping initial conditions to
//! attractors by ε-proximity, the two-pass backbone of the estimation
//! pipeline: the recurrence pass mutates the store, the proximity pass only
//! reads it and may run on any number of workers.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::dynsys::{IntegratorConfig, ObservedFlow, VectorField};
use crate::error::{DynError, MapError};
use crate::grid::Grid;

/// Termination thresholds for the recurrence mapper.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceConfig {
    /// Revisits of the trajectory's own previously visited cells, in a row,
    /// before a new attractor is declared.
    pub consecutive_recurrences: usize,
    /// Observations recorded (and deduplicated by cell) to form the new
    /// attractor's point cloud.
    pub attractor_locate_steps: usize,
    /// Observations outside the grid box, in a row, before the trajectory
    /// counts as lost (label 0).
    pub consecutive_lost_steps: usize,
}

impl Default for RecurrenceConfig {
    fn default() -> Self {
        Self {
            consecutive_recurrences: 100,
            attractor_locate_steps: 1000,
            consecutive_lost_steps: 1000,
        }
    }
}

impl RecurrenceConfig {
    pub fn validate(&self) -> Result<(), MapError> {
        if self.consecutive_recurrences == 0 || self.attractor_locate_steps == 0 || self.consecutive_lost_steps == 0 {
            return Err(MapError::Dyn(DynError::InvalidConfig(
                "recurrence thresholds must be strictly positive".into(),
            )));
        }
        Ok(())
    }
}

/// An identified invariant set, represented as a finite point cloud. The id
/// is stable across continuation steps once attractors have been matched.
#[derive(Debug, Clone, PartialEq)]
pub struct Attractor {
    pub id: u32,
    pub points: Vec<Vec<f64>>,
}

impl Attractor {
    /// Minimum Euclidean distance from `x` to the point cloud.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| dist(p, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest pairwise distance within the cloud.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.max(dist(p, q));
            }
        }
        d
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.points[0].len();
        let mut c = vec![0.0; n];
        for p in &self.points {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let m = self.points.len() as f64;
        c.iter_mut().for_each(|ci| *ci /= m);
        c
    }

    /// Mean Euclidean norm of the constituent points (the state summary
    /// plotted along continuations).
    pub fn mean_norm(&self) -> f64 {
        self.points.iter().map(|p| norm(p)).sum::<f64>() / self.points.len() as f64
    }

    /// Set distance between two point clouds (minimum pairwise distance).
    pub fn set_distance(&self, other: &Attractor) -> f64 {
        let mut d = f64::INFINITY;
        for p in &self.points {
            for q in &other.points {
                d = d.min(dist(p, q));
            }
        }
        d
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The set of attractors found so far. Id 0 is reserved for divergence and
/// never stored; freshly created ids are contiguous from 1.
#[derive(Debug, Clone, Default)]
pub struct AttractorStore {
    attractors: BTreeMap<u32, Attractor>,
    claimed: HashMap<u64, u32>,
    cell_diagonal: f64,
}

impl AttractorStore {
    pub fn new(grid: &Grid) -> Self {
        Self {
            attractors: BTreeMap::new(),
            claimed: HashMap::new(),
            cell_diagonal: grid.cell_diagonal(),
        }
    }

    pub fn len(&self) -> usize {
        self.attractors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attractors.is_empty()
    }

    /// Ids in ascending order; the column order of all distance matrices.
    pub fn ids(&self) -> Vec<u32> {
        self.attractors.keys().copied().collect()
    }

    pub fn get(&self, id: u32) -> Option<&Attractor> {
        self.attractors.get(&id)
    }

    pub fn contains(&self, id: u32) -> bool {
        self.attractors.contains_key(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Attractor> {
        self.attractors.values()
    }

    /// Cell diagonal of the grid the store was created on; the resolution
    /// scale for point-attractor classification.
    pub fn cell_diagonal(&self) -> f64 {
        self.cell_diagonal
    }

    fn next_id(&self) -> u32 {
        self.attractors.keys().max().copied().unwrap_or(0) + 1
    }

    /// Inserts an attractor under a fresh id, claiming its grid cells, and
    /// returns the id. Cells already claimed by an earlier attractor keep
    /// their original owner.
    pub fn insert_new(&mut self, points: Vec<Vec<f64>>, grid: &Grid) -> u32 {
        let id = self.next_id();
        for p in &points {
            if let Some(cell) = grid.cell_of(p) {
                self.claimed.entry(cell).or_insert(id);
            }
        }
        self.attractors.insert(id, Attractor { id, points });
        id
    }

    /// Rebuilds a store with renamed ids (used after continuation matching).
    /// Claimed cells are preserved under the new names.
    pub fn relabeled(&self, rename: &BTreeMap<u32, u32>) -> AttractorStore {
        let mut attractors = BTreeMap::new();
        for (old, a) in &self.attractors {
            let new = *rename.get(old).unwrap_or(old);
            attractors.insert(new, Attractor { id: new, points: a.points.clone() });
        }
        let claimed = self
            .claimed
            .iter()
            .map(|(cell, old)| (*cell, *rename.get(old).unwrap_or(old)))
            .collect();
        AttractorStore { attractors, claimed, cell_diagonal: self.cell_diagonal }
    }
}

/// Maps one initial condition with the recurrence rule, possibly creating a
/// new attractor in the store. Returns the basin label: an attractor id, or
/// 0 for trajectories that diverge or stay lost outside the grid.
pub fn map_ic_recurrence(
    field: &VectorField,
    x0: &[f64],
    grid: &Grid,
    rc: &RecurrenceConfig,
    cfg: &IntegratorConfig,
    store: &mut AttractorStore,
) -> Result<u32, MapError> {
    rc.validate()?;
    if !grid.contains(x0) {
        return Err(MapError::OutsideGrid);
    }

    let mut flow = match ObservedFlow::new(field, x0, cfg) {
        Ok(f) => f,
        Err(DynError::NonFiniteState { .. }) => return Ok(0),
        Err(e) => return Err(e.into()),
    };

    let mut visited: HashSet<u64> = HashSet::new();
    let mut recurrences = 0usize;
    let mut lost = 0usize;
    let mut claim_streak: Option<(u32, usize)> = None;

    // the initial condition counts as the first observation
    let mut cell = grid.cell_of(flow.state());
    loop {
        match cell {
            None => {
                lost += 1;
                recurrences = 0;
                claim_streak = None;
                if lost >= rc.consecutive_lost_steps {
                    return Ok(0);
                }
            }
            Some(c) => {
                lost = 0;
                if let Some(&owner) = store.claimed.get(&c) {
                    let hits = match claim_streak {
                        Some((id, n)) if id == owner => n + 1,
                        _ => 1,
                    };
                    if hits >= 2 {
                        return Ok(owner);
                    }
                    claim_streak = Some((owner, hits));
                    recurrences = 0;
                } else {
                    claim_streak = None;
                    if visited.contains(&c) {
                        recurrences += 1;
                        if recurrences >= rc.consecutive_recurrences {
                            return locate_new_attractor(&mut flow, grid, rc, store);
                        }
                    } else {
                        visited.insert(c);
                        recurrences = 0;
                    }
                }
            }
        }

        if flow.t() >= cfg.max_time {
            // never settled: treated like a lost trajectory
            return Ok(0);
        }
        match flow.advance_observation() {
            Ok(_) => {}
            Err(DynError::NonFiniteState { .. }) | Err(DynError::StepSizeUnderflow { .. }) => return Ok(0),
            Err(DynError::MaxSteps { .. }) => return Ok(0),
            Err(e) => return Err(e.into()),
        }
        cell = grid.cell_of(flow.state());
    }
}

fn locate_new_attractor(
    flow: &mut ObservedFlow,
    grid: &Grid,
    rc: &RecurrenceConfig,
    store: &mut AttractorStore,
) -> Result<u32, MapError> {
    let mut cells_seen: HashSet<u64> = HashSet::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    if let Some(c) = grid.cell_of(flow.state()) {
        cells_seen.insert(c);
        points.push(flow.state().to_vec());
    }
    for _ in 0..rc.attractor_locate_steps {
        match flow.advance_observation() {
            Ok(_) => {}
            Err(DynError::NonFiniteState { .. })
            | Err(DynError::StepSizeUnderflow { .. })
            | Err(DynError::MaxSteps { .. }) => break,
            Err(e) => return Err(e.into()),
        }
        if let Some(c) = grid.cell_of(flow.state()) {
            // keep the first state observed in each cell
            if cells_seen.insert(c) {
                points.push(flow.state().to_vec());
            }
        }
    }
    if points.is_empty() {
        return Ok(0);
    }
    Ok(store.insert_new(points, grid))
}

/// Basin label of a single initial condition: an attractor id (`To`), the
/// divergence label 0 (`Diverged`), or a timeout (`Unresolved`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    To(u32),
    Diverged,
    Unresolved,
}

impl Label {
    pub fn is_resolved(&self) -> bool {
        !matches!(self, Label::Unresolved)
    }

    /// The id this label counts toward (0 for divergence), or `None`.
    pub fn id(&self) -> Option<u32> {
        match self {
            Label::To(j) => Some(*j),
            Label::Diverged => Some(0),
            Label::Unresolved => None,
        }
    }
}

/// Result of mapping one initial condition by ε-proximity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityOutcome {
    pub label: Label,
    /// First observation time within ε of the labeled attractor; +inf for
    /// divergence, NaN for unresolved.
    pub tau: f64,
    /// Distance from the initial condition to each stored attractor, in
    /// ascending id order.
    pub dists: Vec<f64>,
}

/// Spatial hash over all attractor points with cell size ε, so that the
/// per-observation proximity test touches only a handful of cells. Build it
/// once per (store, ε); queries are read-only and thread-safe.
pub struct ProximityIndex {
    epsilon: f64,
    dim: usize,
    ids: Vec<u32>,
    /// flattened clouds, aligned with `ids`
    clouds: Vec<Vec<f64>>,
    /// spatial hash: mixed cell key -> (cloud index, point offset)
    buckets: HashMap<u64, Vec<(u32, u32)>>,
}

impl ProximityIndex {
    pub fn new(store: &AttractorStore, epsilon: f64) -> Result<Self, MapError> {
        if store.is_empty() {
            return Err(MapError::EmptyStore);
        }
        assert!(epsilon > 0.0 && epsilon.is_finite(), "epsilon must be positive");
        let ids = store.ids();
        let dim = store.iter().next().expect("nonempty").points[0].len();
        let mut clouds = Vec::with_capacity(ids.len());
        let mut buckets: HashMap<u64, Vec<(u32, u32)>> = HashMap::new();
        for (ci, id) in ids.iter().enumerate() {
            let a = store.get(*id).expect("id listed");
            let mut flat = Vec::with_capacity(a.points.len() * dim);
            for (pi, p) in a.points.iter().enumerate() {
                let key = hash_cell(p, epsilon);
                buckets.entry(key).or_default().push((ci as u32, pi as u32));
                flat.extend_from_slice(p);
            }
            clouds.push(flat);
        }
        Ok(Self { epsilon, dim, ids, clouds, buckets })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Distance from `x` to every stored attractor (full scan, used once per
    /// initial condition).
    pub fn distances(&self, x: &[f64]) -> Vec<f64> {
        self.clouds
            .iter()
            .map(|flat| {
                let mut best = f64::INFINITY;
                for p in flat.chunks_exact(self.dim) {
                    best = best.min(dist(p, x));
                }
                best
            })
            .collect()
    }

    /// Smallest attractor id whose cloud comes within ε of `x`, if any.
    /// Exact: any point within ε lies in one of the 3^n neighbor cells.
    pub fn within_epsilon(&self, x: &[f64]) -> Option<u32> {
        let eps2 = self.epsilon * self.epsilon;
        let mut best: Option<u32> = None;
        let mut coords = vec![0i64; self.dim];
        for (c, &xi) in coords.iter_mut().zip(x) {
            *c = (xi / self.epsilon).floor() as i64;
        }
        let mut offsets = vec![-1i64; self.dim];
        'cells: loop {
            let mut key = FNV_OFFSET;
            for (c, o) in coords.iter().zip(&offsets) {
                key = mix(key, (c + o) as u64);
            }
            if let Some(bucket) = self.buckets.get(&key) {
                for &(ci, pi) in bucket {
                    let flat = &self.clouds[ci as usize];
                    let p = &flat[pi as usize * self.dim..(pi as usize + 1) * self.dim];
                    let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 <= eps2 {
                        let id = self.ids[ci as usize];
                        best = Some(best.map_or(id, |b| b.min(id)));
                    }
                }
            }
            // advance the odometer over {-1, 0, 1}^dim
            for k in 0..self.dim {
                offsets[k] += 1;
                if offsets[k] <= 1 {
                    continue 'cells;
                }
                offsets[k] = -1;
            }
            break;
        }
        best
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;

fn mix(state: u64, v: u64) -> u64 {
    // FNV-1a style combine with an avalanche multiply
    let mut h = state ^ v;
    h = h.wrapping_mul(0x100000001b3);
    h ^= h >> 29;
    h.wrapping_mul(0xff51afd7ed558ccd)
}

fn hash_cell(p: &[f64], epsilon: f64) -> u64 {
    let mut key = FNV_OFFSET;
    for &xi in p {
        key = mix(key, (xi / epsilon).floor() as i64 as u64);
    }
    key
}

/// Maps one initial condition by ε-proximity against a frozen store: returns
/// the first attractor the trajectory comes ε-close to at an observation
/// time (t = 0 included), the time this first happens, and the distances
/// from the initial condition to every attractor.
pub fn map_ic_proximity(
    field: &VectorField,
    x0: &[f64],
    store: &AttractorStore,
    epsilon: f64,
    cfg: &IntegratorConfig,
) -> Result<ProximityOutcome, MapError> {
    let index = ProximityIndex::new(store, epsilon)?;
    map_ic_proximity_indexed(field, x0, &index, cfg)
}

/// As [`map_ic_proximity`], but against a prebuilt [`ProximityIndex`]; this
/// is the hot path used by the parallel accumulator.
pub fn map_ic_proximity_indexed(
    field: &VectorField,
    x0: &[f64],
    index: &ProximityIndex,
    cfg: &IntegratorConfig,
) -> Result<ProximityOutcome, MapError> {
    let dists = index.distances(x0);

    if let Some(j) = index.within_epsilon(x0) {
        return Ok(ProximityOutcome { label: Label::To(j), tau: 0.0, dists });
    }
    let mut flow = match ObservedFlow::new(field, x0, cfg) {
        Ok(f) => f,
        Err(DynError::NonFiniteState { .. }) => {
            return Ok(ProximityOutcome { label: Label::Diverged, tau: f64::INFINITY, dists })
        }
        Err(e) => return Err(e.into()),
    };
    loop {
        if flow.t() >= cfg.max_time {
            return Ok(ProximityOutcome { label: Label::Unresolved, tau: f64::NAN, dists });
        }
        match flow.advance_observation() {
            Ok(_) => {}
            Err(DynError::NonFiniteState { .. }) => {
                return Ok(ProximityOutcome { label: Label::Diverged, tau: f64::INFINITY, dists })
            }
            Err(DynError::StepSizeUnderflow { .. }) | Err(DynError::MaxSteps { .. }) => {
                return Ok(ProximityOutcome { label: Label::Unresolved, tau: f64::NAN, dists })
            }
            Err(e) => return Err(e.into()),
        }
        if let Some(j) = index.within_epsilon(flow.state()) {
            return Ok(ProximityOutcome { label: Label::To(j), tau: flow.t(), dists });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use approx::assert_relative_eq;

    fn oracle_grid() -> Grid {
        Grid::new(&[(-2.0, 2.0, 201), (-2.0, 2.0, 201)])
    }

    fn quick_cfg() -> IntegratorConfig {
        IntegratorConfig { dt_observe: 0.1, max_time: 200.0, ..Default::default() }
    }

    fn find_oracle_store() -> AttractorStore {
        let (field, _) = systems::radial_oracle(1.0);
        let grid = oracle_grid();
        let mut store = AttractorStore::new(&grid);
        let rc = RecurrenceConfig { consecutive_recurrences: 100, attractor_locate_steps: 200, consecutive_lost_steps: 20 };
        let label =
            map_ic_recurrence(&field, &[0.3, 0.2], &grid, &rc, &quick_cfg(), &mut store).unwrap();
        assert_eq!(label, 1);
        store
    }

    #[test]
    fn recurrence_creates_attractor_near_origin() {
        let store = find_oracle_store();
        assert_eq!(store.len(), 1);
        let a = store.get(1).unwrap();
        assert!(a.distance_to(&[0.0, 0.0]) < 0.05, "cloud should hug the origin");
        for p in &a.points {
            assert!(oracle_grid().contains(p));
        }
    }

    #[test]
    fn recurrence_labels_divergence_zero() {
        let (field, _) = systems::radial_oracle(1.0);
        let grid = oracle_grid();
        let mut store = AttractorStore::new(&grid);
        let rc = RecurrenceConfig { consecutive_recurrences: 100, attractor_locate_steps: 200, consecutive_lost_steps: 20 };
        let label =
            map_ic_recurrence(&field, &[1.5, 1.5], &grid, &rc, &quick_cfg(), &mut store).unwrap();
        assert_eq!(label, 0);
        assert!(store.is_empty());
    }

    #[test]
    fn recurrence_rejects_ic_outside_grid() {
        let (field, _) = systems::radial_oracle(1.0);
        let grid = oracle_grid();
        let mut store = AttractorStore::new(&grid);
        let rc = RecurrenceConfig::default();
        let err = map_ic_recurrence(&field, &[3.0, 0.0], &grid, &rc, &quick_cfg(), &mut store);
        assert!(matches!(err, Err(MapError::OutsideGrid)));
    }

    #[test]
    fn second_ic_reuses_claimed_cells() {
        let (field, _) = systems::radial_oracle(1.0);
        let grid = oracle_grid();
        let mut store = find_oracle_store();
        let rc = RecurrenceConfig { consecutive_recurrences: 100, attractor_locate_steps: 200, consecutive_lost_steps: 20 };
        let label =
            map_ic_recurrence(&field, &[-0.6, 0.1], &grid, &rc, &quick_cfg(), &mut store).unwrap();
        assert_eq!(label, 1);
        assert_eq!(store.len(), 1, "no duplicate attractor may be created");
    }

    #[test]
    fn proximity_tau_matches_logarithmic_law() {
        let (field, _) = systems::radial_oracle(1.0);
        let store = find_oracle_store();
        let out = map_ic_proximity(&field, &[0.5, 0.0], &store, 0.01, &quick_cfg()).unwrap();
        assert_eq!(out.label, Label::To(1));
        // tau = ln(r0/eps) up to the observation grid and the cloud extent
        let expected = (0.5f64 / 0.01).ln();
        assert!((out.tau - expected).abs() <= 0.1 + 0.05, "tau = {} vs {}", out.tau, expected);
        assert_relative_eq!(out.dists[0], 0.5, epsilon = 0.02);
    }

    #[test]
    fn proximity_zero_tau_within_epsilon() {
        let (field, _) = systems::radial_oracle(1.0);
        let store = find_oracle_store();
        let p = store.get(1).unwrap().points[0].clone();
        let out = map_ic_proximity(&field, &p, &store, 0.01, &quick_cfg()).unwrap();
        assert_eq!(out.label, Label::To(1));
        assert_eq!(out.tau, 0.0);
    }

    #[test]
    fn proximity_divergence_is_label_zero() {
        let (field, _) = systems::radial_oracle(1.0);
        let store = find_oracle_store();
        let out = map_ic_proximity(&field, &[1.2, 0.0], &store, 0.01, &quick_cfg()).unwrap();
        assert_eq!(out.label, Label::Diverged);
        assert!(out.tau.is_infinite());
        assert_relative_eq!(out.dists[0], 1.2, epsilon = 0.02);
    }

    #[test]
    fn proximity_requires_nonempty_store() {
        let (field, _) = systems::radial_oracle(1.0);
        let store = AttractorStore::new(&oracle_grid());
        let err = map_ic_proximity(&field, &[0.5, 0.0], &store, 0.01, &quick_cfg());
        assert!(matches!(err, Err(MapError::EmptyStore)));
    }

    #[test]
    fn proximity_timeout_is_unresolved() {
        // a drift field that never approaches the stored attractor
        let field = VectorField::new(2, vec![], |x, _, out| {
            out[0] = 0.1 * (1.0 - x[0] * x[0] / 1e6);
            out[1] = 0.0;
        });
        let grid = oracle_grid();
        let mut store = AttractorStore::new(&grid);
        store.insert_new(vec![vec![0.0, 1.9]], &grid);
        let cfg = IntegratorConfig { dt_observe: 0.1, max_time: 5.0, ..Default::default() };
        let out = map_ic_proximity(&field, &[0.0, -1.0], &store, 0.01, &cfg).unwrap();
        assert_eq!(out.label, Label::Unresolved);
        assert!(out.tau.is_nan());
    }

    #[test]
    fn tau_is_nonincreasing_in_epsilon() {
        let (field, _) = systems::radial_oracle(1.0);
        let store = find_oracle_store();
        let cfg = quick_cfg();
        for x0 in [[0.9, 0.0], [0.2, 0.5], [-0.4, -0.6]] {
            let t1 = map_ic_proximity(&field, &x0, &store, 0.005, &cfg).unwrap().tau;
            let t2 = map_ic_proximity(&field, &x0, &store, 0.05, &cfg).unwrap().tau;
            assert!(t1 >= t2, "tau(0.005) = {t1} < tau(0.05) = {t2}");
        }
    }

    #[test]
    fn labels_agree_with_analytic_basin() {
        let (field, _) = systems::radial_oracle(1.0);
        let store = find_oracle_store();
        let cfg = quick_cfg();
        let mut probe = |x: [f64; 2]| map_ic_proximity(&field, &x, &store, 0.01, &cfg).unwrap().label;
        for r in [0.1, 0.5, 0.9] {
            assert_eq!(probe([r, 0.0]), Label::To(1), "r = {r}");
        }
        for r in [1.02, 1.5, 1.9] {
            assert_eq!(probe([0.0, r]), Label::Diverged, "r = {r}");
        }
    }

    #[test]
    fn every_stored_point_maps_to_its_own_id() {
        let (field, _) = systems::radial_oracle(1.0);
        let store = find_oracle_store();
        let cfg = quick_cfg();
        for p in &store.get(1).unwrap().points {
            let out = map_ic_proximity(&field, p, &store, 0.01, &cfg).unwrap();
            assert_eq!(out.label, Label::To(1));
            assert_eq!(out.tau, 0.0);
        }
    }

    #[test]
    fn proximity_index_neighbor_search_is_exact() {
        // points right at cell borders of the spatial hash must still be found
        let grid = Grid::new(&[(-1.0, 1.0, 10), (-1.0, 1.0, 10)]);
        let mut store = AttractorStore::new(&grid);
        store.insert_new(vec![vec![0.1, 0.1], vec![-0.3, 0.25]], &grid);
        let index = ProximityIndex::new(&store, 0.05).unwrap();
        assert_eq!(index.within_epsilon(&[0.1499, 0.1]), Some(1));
        assert_eq!(index.within_epsilon(&[0.1501, 0.1]), None);
        assert_eq!(index.within_epsilon(&[-0.3, 0.2999]), Some(1));
        let d = index.distances(&[0.0, 0.0]);
        assert_relative_eq!(d[0], (0.02f64).sqrt(), epsilon = 1e-12);
    }
}
