//! Autonomous ODE systems: right-hand sides, adaptive integration with a
//! fixed observation grid, finite-difference Jacobians, and the maximal
//! Lyapunov exponent.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::DynError;

/// States with norm beyond this bound are treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

type Rhs = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// An autonomous vector field `dx/dt = f(x, p)` with a mutable parameter
/// vector. Cloning is cheap (the right-hand side is shared) and a value is
/// safe to share read-only across worker threads.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    params: Vec<f64>,
    rhs: Arc<Rhs>,
}

impl VectorField {
    pub fn new<F>(dim: usize, params: Vec<f64>, rhs: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim > 0, "dimension must be positive");
        Self { dim, params, rhs: Arc::new(rhs) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        self.params[index] = value;
    }

    /// Returns a copy of this field with one parameter replaced.
    pub fn with_param(&self, index: usize, value: f64) -> Self {
        let mut f = self.clone();
        f.set_param(index, value);
        f
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.rhs)(x, &self.params, out);
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("params", &self.params)
            .finish()
    }
}

/// Tolerances and sampling grid for the adaptive integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Trajectories are observed at multiples of this interval; adaptive
    /// substeps never straddle an observation time.
    pub dt_observe: f64,
    pub max_time: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            dt_observe: 0.1,
            max_time: 1e4,
            max_steps: 100_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DynError> {
        let pos = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("dt_observe", self.dt_observe),
            ("max_time", self.max_time),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DynError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dt_observe > self.max_time {
            return Err(DynError::InvalidConfig(format!(
                "dt_observe ({}) must not exceed max_time ({})",
                self.dt_observe, self.max_time
            )));
        }
        if self.max_steps == 0 {
            return Err(DynError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// A trajectory sampled on the observation grid. `times[0] = 0` and spacing
/// equals `dt_observe` except possibly for the final point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial point")
    }
}

// Dormand-Prince 5(4) Butcher tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights coincide with the last row of A (FSAL).
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const STEP_SAFETY: f64 = 0.9;
const STEP_SHRINK_MIN: f64 = 0.2;
const STEP_GROW_MAX: f64 = 5.0;

/// Adaptive Dormand-Prince 5(4) stepper that exposes the solution on the
/// observation grid of an [`IntegratorConfig`]. The basin mappers drive this
/// directly; [`integrate`] wraps it into a [`Trajectory`].
pub struct ObservedFlow<'a> {
    field: &'a VectorField,
    cfg: &'a IntegratorConfig,
    t: f64,
    x: Vec<f64>,
    h: f64,
    k: Vec<Vec<f64>>,
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    steps_taken: usize,
    fsal: bool,
}

impl<'a> ObservedFlow<'a> {
    pub fn new(field: &'a VectorField, x0: &[f64], cfg: &'a IntegratorConfig) -> Result<Self, DynError> {
        cfg.validate()?;
        let n = field.dim();
        if x0.len() != n {
            return Err(DynError::DimensionMismatch { expected: n, got: x0.len() });
        }
        if !x0.iter().all(|v| v.is_finite()) {
            return Err(DynError::NonFiniteState { t: 0.0 });
        }
        let mut flow = Self {
            field,
            cfg,
            t: 0.0,
            x: x0.to_vec(),
            h: 0.0,
            k: vec![vec![0.0; n]; 7],
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
            steps_taken: 0,
            fsal: false,
        };
        flow.h = flow.initial_step();
        if !flow.h.is_finite() {
            return Err(DynError::NonFiniteState { t: 0.0 });
        }
        Ok(flow)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    /// Mutable access to the current state (used for tangent-vector
    /// renormalization); invalidates the cached first stage.
    pub fn state_mut(&mut self) -> &mut [f64] {
        self.fsal = false;
        &mut self.x
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    fn initial_step(&self) -> f64 {
        let n = self.field.dim();
        let mut f0 = vec![0.0; n];
        self.field.eval_into(&self.x, &mut f0);
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..n {
            let sc = self.cfg.abs_tol + self.cfg.rel_tol * self.x[i].abs();
            d0 += (self.x[i] / sc).powi(2);
            d1 += (f0[i] / sc).powi(2);
        }
        let (d0, d1) = (d0.sqrt(), d1.sqrt());
        let h = if d1 > 1e-10 { 0.01 * d0.max(1e-4) / d1 } else { self.cfg.dt_observe / 100.0 };
        h.clamp(1e-10, self.cfg.dt_observe)
    }

    /// Advances the state by exactly `dt_observe` (or to `t_stop` if that is
    /// closer), honoring the embedded error estimate for every substep.
    pub fn advance_to(&mut self, t_target: f64) -> Result<(), DynError> {
        let n = self.field.dim();
        while self.t < t_target {
            if self.steps_taken >= self.cfg.max_steps {
                return Err(DynError::MaxSteps { t: self.t });
            }
            let h = self.h.min(t_target - self.t);
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(DynError::StepSizeUnderflow { t: self.t, h });
            }

            if !self.fsal {
                self.field.eval_into(&self.x, &mut self.y_stage);
                self.k[0].copy_from_slice(&self.y_stage);
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, kj) in self.k.iter().enumerate().take(s) {
                        acc += DP_A[s][j] * kj[i];
                    }
                    self.y_stage[i] = self.x[i] + h * acc;
                }
                let _ = DP_C; // stage times unused: the field is autonomous
                if s < 6 {
                    let (head, tail) = self.k.split_at_mut(s);
                    let _ = head;
                    self.field.eval_into(&self.y_stage, &mut tail[0]);
                } else {
                    // seventh stage is f at the fifth-order solution (FSAL)
                    self.y_new.copy_from_slice(&self.y_stage);
                    self.field.eval_into(&self.y_new, &mut self.k[6]);
                }
            }

            let mut err: f64 = 0.0;
            let mut norm2: f64 = 0.0;
            let mut finite = true;
            for i in 0..n {
                let yi = self.y_new[i];
                if !yi.is_finite() {
                    finite = false;
                    break;
                }
                norm2 += yi * yi;
                let mut e = 0.0;
                for (j, kj) in self.k.iter().enumerate() {
                    e += DP_E[j] * kj[i];
                }
                e *= h;
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * self.x[i].abs().max(yi.abs());
                err += (e / sc).powi(2);
            }
            if !finite || norm2.sqrt() > DIVERGENCE_NORM {
                return Err(DynError::NonFiniteState { t: self.t });
            }
            let err = (err / n as f64).sqrt();

            self.steps_taken += 1;
            let factor = if err > 0.0 {
                (STEP_SAFETY * err.powf(-0.2)).clamp(STEP_SHRINK_MIN, STEP_GROW_MAX)
            } else {
                STEP_GROW_MAX
            };
            if err <= 1.0 {
                self.t += h;
                std::mem::swap(&mut self.x, &mut self.y_new);
                self.k.swap(0, 6);
                self.fsal = true;
                self.h = (h * factor).min(self.cfg.dt_observe);
            } else {
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }

    /// Advances by one observation interval, returning the new time.
    pub fn advance_observation(&mut self) -> Result<f64, DynError> {
        // Land on exact multiples of dt_observe to keep the grid drift-free.
        let next = ((self.t / self.cfg.dt_observe).round() + 1.0) * self.cfg.dt_observe;
        self.advance_to(next)?;
        Ok(self.t)
    }
}

/// Integrates from `x0`, sampling at multiples of `dt_observe`. Terminates
/// when `stop` first holds at an observation point (checked at t = 0 too) or
/// when `max_time` is reached.
pub fn integrate(
    field: &VectorField,
    x0: &[f64],
    cfg: &IntegratorConfig,
    mut stop: impl FnMut(f64, &[f64]) -> bool,
) -> Result<Trajectory, DynError> {
    let mut flow = ObservedFlow::new(field, x0, cfg)?;
    let mut traj = Trajectory { times: vec![0.0], states: vec![x0.to_vec()] };
    if stop(0.0, x0) {
        return Ok(traj);
    }
    while flow.t() < cfg.max_time {
        let next = (((flow.t() / cfg.dt_observe).round() + 1.0) * cfg.dt_observe).min(cfg.max_time);
        match flow.advance_to(next) {
            Ok(()) => {}
            // exhausting the substep budget truncates the trajectory
            Err(DynError::MaxSteps { .. }) => break,
            Err(e) => return Err(e),
        }
        traj.times.push(flow.t());
        traj.states.push(flow.state().to_vec());
        if stop(flow.t(), flow.state()) {
            break;
        }
    }
    Ok(traj)
}

/// Jacobian of the field at `x` by Richardson-extrapolated central
/// differences with per-component step `h_j = 1e-6 * max(1, |x_j|)`.
pub fn jacobian(field: &VectorField, x: &[f64]) -> Result<DMatrix<f64>, DynError> {
    let n = field.dim();
    assert_eq!(x.len(), n);
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut col_at = |step: f64, fp: &mut Vec<f64>, fm: &mut Vec<f64>| {
            xp[j] = x[j] + step;
            field.eval_into(&xp, fp);
            xp[j] = x[j] - step;
            field.eval_into(&xp, fm);
            xp[j] = x[j];
        };
        col_at(h, &mut fp, &mut fm);
        let coarse: Vec<f64> = (0..n).map(|i| (fp[i] - fm[i]) / (2.0 * h)).collect();
        col_at(h / 2.0, &mut fp, &mut fm);
        for i in 0..n {
            let fine = (fp[i] - fm[i]) / h;
            let v = (4.0 * fine - coarse[i]) / 3.0;
            if !v.is_finite() {
                return Err(DynError::NonFiniteState { t: 0.0 });
            }
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Maximal Lyapunov exponent by tangent-space evolution with the tangent
/// vector renormalized at every observation time. The directional derivative
/// `J(x) v` is formed by central differences along `v`, so no analytic
/// Jacobian is needed.
pub fn max_lyapunov(
    field: &VectorField,
    x0_on_attractor: &[f64],
    cfg: &IntegratorConfig,
    transient: f64,
    total_time: f64,
) -> Result<f64, DynError> {
    let n = field.dim();
    let mut cfg_run = cfg.clone();
    cfg_run.max_time = transient + total_time + cfg.dt_observe;

    // settle onto the attractor first
    let mut x = x0_on_attractor.to_vec();
    if transient > 0.0 {
        let mut flow = ObservedFlow::new(field, &x, &cfg_run)?;
        flow.advance_to(transient)?;
        x = flow.state().to_vec();
    }

    let base_rhs = Arc::clone(&field.rhs);
    let aug = VectorField::new(2 * n, field.params().to_vec(), move |u, p, out| {
        let (xs, vs) = u.split_at(n);
        let (fx, fv) = out.split_at_mut(n);
        base_rhs(xs, p, fx);
        let vnorm = norm(vs).max(1e-300);
        let delta = 1e-7 * (1.0 + norm(xs)) / vnorm;
        let mut yp = xs.to_vec();
        let mut ym = xs.to_vec();
        for i in 0..n {
            yp[i] += delta * vs[i];
            ym[i] -= delta * vs[i];
        }
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        base_rhs(&yp, p, &mut fp);
        base_rhs(&ym, p, &mut fm);
        for i in 0..n {
            fv[i] = (fp[i] - fm[i]) / (2.0 * delta);
        }
    });

    let mut u0 = vec![0.0; 2 * n];
    u0[..n].copy_from_slice(&x);
    u0[n] = 1.0;
    let mut flow = ObservedFlow::new(&aug, &u0, &cfg_run)?;
    let mut log_sum = 0.0;
    while flow.t() < total_time {
        flow.advance_observation()?;
        let t = flow.t();
        let v = &mut flow.state_mut()[n..];
        let vn = norm(v);
        if vn == 0.0 {
            return Err(DynError::NonFiniteState { t });
        }
        log_sum += vn.ln();
        for vi in v.iter_mut() {
            *vi /= vn;
        }
    }
    Ok(log_sum / flow.t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn decay_1d() -> VectorField {
        VectorField::new(1, vec![], |x, _, out| out[0] = -x[0])
    }

    fn radial(a: f64) -> VectorField {
        VectorField::new(2, vec![a], |x, p, out| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let s = if r2 > 1.0 {
                1.0
            } else if r2 < 1.0 {
                -1.0
            } else {
                0.0
            };
            out[0] = s * p[0] * x[0];
            out[1] = s * p[0] * x[1];
        })
    }

    fn cfg(dt: f64, max_time: f64) -> IntegratorConfig {
        IntegratorConfig { dt_observe: dt, max_time, ..Default::default() }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let field = decay_1d();
        let traj = integrate(&field, &[1.0], &cfg(1.0, 5.0), |_, _| false).unwrap();
        assert_eq!(traj.times.len(), 6);
        assert_relative_eq!(traj.states[1][0], (-1.0f64).exp(), epsilon = 1e-6);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert_relative_eq!(s[0], (-t).exp(), epsilon = 1e-6);
        }
    }

    #[test]
    fn radial_norm_decays_like_exp() {
        let field = radial(1.0);
        let traj = integrate(&field, &[0.5, 0.0], &cfg(0.5, 4.0), |_, _| false).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let r = (s[0] * s[0] + s[1] * s[1]).sqrt();
            assert_relative_eq!(r, 0.5 * (-t).exp(), epsilon = 1e-6);
        }
    }

    #[test]
    fn radial_outside_unit_disk_diverges() {
        let field = radial(1.0);
        let err = integrate(&field, &[1.5, 1.5], &cfg(0.5, 100.0), |_, _| false).unwrap_err();
        assert!(matches!(err, DynError::NonFiniteState { .. }));
    }

    #[test]
    fn stop_predicate_terminates_at_observation() {
        let field = decay_1d();
        let traj = integrate(&field, &[1.0], &cfg(0.25, 10.0), |_, x| x[0] < 0.5).unwrap();
        let last = traj.last_state()[0];
        assert!(last < 0.5);
        assert!(traj.states[traj.len() - 2][0] >= 0.5);
    }

    #[test]
    fn trajectory_times_are_grid_aligned() {
        let field = decay_1d();
        let traj = integrate(&field, &[1.0], &cfg(0.3, 1.0), |_, _| false).unwrap();
        assert_eq!(traj.times.first().copied(), Some(0.0));
        for w in traj.times.windows(2) {
            assert!(w[1] > w[0]);
        }
        // final point lands exactly on max_time even though 1.0 is not a
        // multiple of 0.3
        assert_relative_eq!(*traj.times.last().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn determinism_bit_identical() {
        let field = radial(1.0);
        let a = integrate(&field, &[0.4, 0.3], &cfg(0.1, 6.0), |_, _| false).unwrap();
        let b = integrate(&field, &[0.4, 0.3], &cfg(0.1, 6.0), |_, _| false).unwrap();
        assert_eq!(a.times, b.times);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn halving_dt_observe_preserves_endpoint() {
        let field = radial(1.0);
        let c1 = cfg(0.2, 3.0);
        let mut c2 = c1.clone();
        c2.dt_observe = 0.1;
        let a = integrate(&field, &[0.5, 0.1], &c1, |_, _| false).unwrap();
        let b = integrate(&field, &[0.5, 0.1], &c2, |_, _| false).unwrap();
        let (ea, eb) = (a.last_state(), b.last_state());
        let diff = ((ea[0] - eb[0]).powi(2) + (ea[1] - eb[1]).powi(2)).sqrt();
        let scale = (eb[0] * eb[0] + eb[1] * eb[1]).sqrt();
        assert!(diff / scale < 10.0 * c1.rel_tol, "relative drift {}", diff / scale);
    }

    #[test]
    fn jacobian_of_linear_field_is_exact() {
        let a = [[1.3, -2.0, 0.4], [0.0, -4.9, 2.2], [3.1, 0.7, -0.3]];
        let field = VectorField::new(3, vec![], move |x, _, out| {
            for i in 0..3 {
                out[i] = (0..3).map(|j| a[i][j] * x[j]).sum();
            }
        });
        let j = jacobian(&field, &[0.3, -1.2, 2.0]).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert_relative_eq!(j[(i, k)], a[i][k], epsilon = 1e-10, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn jacobian_of_radial_at_origin() {
        let field = radial(1.0);
        let j = jacobian(&field, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(j[(0, 0)], -1.0, epsilon = 1e-10);
        assert_relative_eq!(j[(1, 1)], -1.0, epsilon = 1e-10);
        assert_relative_eq!(j[(0, 1)], 0.0, epsilon = 1e-10);
        assert_relative_eq!(j[(1, 0)], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn lyapunov_of_linear_decay() {
        let field = decay_1d();
        let c = cfg(0.1, 1e4);
        let lam = max_lyapunov(&field, &[1.0], &c, 5.0, 200.0).unwrap();
        assert_relative_eq!(lam, -1.0, epsilon = 0.05);
    }

    #[test]
    fn lyapunov_matches_spectral_abscissa_of_linear_system() {
        // dx/dt = A x with eigenvalues -0.5 and -2.0
        let field = VectorField::new(2, vec![], |x, _, out| {
            out[0] = -0.5 * x[0] + 1.0 * x[1];
            out[1] = -2.0 * x[1];
        });
        let c = cfg(0.1, 1e4);
        let lam = max_lyapunov(&field, &[0.0, 0.0], &c, 1.0, 300.0).unwrap();
        assert_relative_eq!(lam, -0.5, epsilon = 0.05);
    }
}
