//! Built-in vector fields: the AMOC 3-box model, a Holling type III
//! predator-prey model with Allee effect, the Lorenz-84 atmospheric model,
//! and a radial two-dimensional system whose resilience measures are all
//! known in closed form.

use std::f64::consts::PI;

use thiserror::Error;

use crate::attractors::RecurrenceConfig;
use crate::dynsys::VectorField;

#[derive(Debug, Clone, Error)]
pub enum ZooError {
    #[error("prey consumption denominator A x^2 + B x + 1 vanishes on the sampling box")]
    SingularDenominator,
}

/// Holling type III predator-prey dynamics with Allee effect in the prey
/// growth term. State is `(x, y)` = (prey, predator); parameter order is
/// `[A, B, C, D, E]`.
pub fn predator_prey(a: f64, b: f64, c: f64, d: f64, e: f64) -> Result<VectorField, ZooError> {
    // the default sampling box has x in [0, 1]
    if denominator_min(a, b, 0.0, 1.0) <= 0.0 {
        return Err(ZooError::SingularDenominator);
    }
    Ok(VectorField::new(2, vec![a, b, c, d, e], |u, p, out| {
        let (x, y) = (u[0], u[1]);
        let (a, b, c, d, e) = (p[0], p[1], p[2], p[3], p[4]);
        let s = x * x / (a * x * x + b * x + 1.0);
        out[0] = x * (1.0 - x) * (x - e) - s * y;
        out[1] = y * (c * s - d);
    }))
}

fn denominator_min(a: f64, b: f64, x_lo: f64, x_hi: f64) -> f64 {
    let den = |x: f64| a * x * x + b * x + 1.0;
    let mut m = den(x_lo).min(den(x_hi));
    if a != 0.0 {
        let v = -b / (2.0 * a);
        if v > x_lo && v < x_hi {
            m = m.min(den(v));
        }
    }
    m
}

/// Fixed parameters of the AMOC 3-box model (Northern, Tropical and Southern
/// Atlantic; the bottom-box salinity follows from salt conservation).
/// Salinities are in psu, volumes in m^3, transports and fluxes in Sv, and
/// the derived time unit is years. The values reproduce the published
/// bistable regime at zero hosing with the on-state Hopf near H = 0.39.
#[derive(Debug, Clone, PartialEq)]
pub struct AmocParams {
    pub v_n: f64,
    pub v_t: f64,
    pub v_s: f64,
    pub v_ip: f64,
    pub v_b: f64,
    pub f_n: f64,
    pub f_t: f64,
    pub k_n: f64,
    pub k_s: f64,
    pub gamma: f64,
    pub s_s: f64,
    pub s_ip: f64,
    pub s_ref: f64,
    /// total salt content over all five boxes, psu * m^3
    pub total_salt: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// haline coefficient per psu
    pub beta: f64,
    pub mu: f64,
    pub t_s: f64,
    pub t_0: f64,
    /// fraction of the hosing H entering the Northern box flux
    pub hosing_n: f64,
    /// fraction of the hosing H entering the Tropical box flux
    pub hosing_t: f64,
}

impl Default for AmocParams {
    fn default() -> Self {
        Self {
            v_n: 3.683e16,
            v_t: 5.418e16,
            v_s: 6.097e16,
            v_ip: 14.860e16,
            v_b: 99.25e16,
            f_n: 0.384,
            f_t: -0.723,
            k_n: 1.762,
            k_s: 1.872,
            gamma: 0.36,
            s_s: 34.427,
            s_ip: 34.668,
            s_ref: 35.0,
            total_salt: 4.510136899e19,
            lambda: 2.79e7,
            alpha: 0.12,
            beta: 0.79,
            mu: 5.5e-8,
            t_s: 7.919,
            t_0: 3.87,
            hosing_n: 0.68,
            hosing_t: 0.0,
        }
    }
}

const SECONDS_PER_YEAR: f64 = 3.15e7;
const SV: f64 = 1e6; // m^3 / s

/// AMOC 3-box model in the dynamic salinities `(S_N, S_T)` with freshwater
/// hosing `H` as the single exposed parameter (`params = [H]`). The Heaviside
/// function in the flow-routing terms is evaluated exactly with Θ(0) = 0.
pub fn amoc_3box(hosing: f64, fixed: AmocParams) -> VectorField {
    VectorField::new(2, vec![hosing], move |u, p, out| {
        let (s_n, s_t) = (u[0], u[1]);
        let h = p[0];
        let q = fixed.lambda * (fixed.alpha * (fixed.t_s - fixed.t_0) + fixed.beta * (s_n - fixed.s_s))
            / (1.0 + fixed.lambda * fixed.alpha * fixed.mu);
        let s_b = (fixed.total_salt
            - fixed.v_n * s_n
            - fixed.v_t * s_t
            - fixed.v_s * fixed.s_s
            - fixed.v_ip * fixed.s_ip)
            / fixed.v_b;
        let theta_pos = if q > 0.0 { 1.0 } else { 0.0 };
        let theta_neg = if q < 0.0 { 1.0 } else { 0.0 };
        let d_n = fixed.k_n * SV * (s_t - s_n) + q * theta_pos * (s_t - s_n)
            - q * theta_neg * (s_b - s_n)
            - (fixed.f_n + fixed.hosing_n * h) * SV * fixed.s_ref;
        let d_t = q * theta_pos * (fixed.gamma * fixed.s_s + (1.0 - fixed.gamma) * fixed.s_ip - s_t)
            - q * theta_neg * (s_n - s_t)
            + fixed.k_n * SV * (s_n - s_t)
            + fixed.k_s * SV * (fixed.s_s - s_t)
            - (fixed.f_t + fixed.hosing_t * h) * SV * fixed.s_ref;
        out[0] = SECONDS_PER_YEAR * d_n / fixed.v_n;
        out[1] = SECONDS_PER_YEAR * d_t / fixed.v_t;
    })
}

/// AMOC flow strength q (Sv) as a function of the Northern box salinity.
pub fn amoc_flow_strength(s_n: f64, fixed: &AmocParams) -> f64 {
    fixed.lambda * (fixed.alpha * (fixed.t_s - fixed.t_0) + fixed.beta * (s_n - fixed.s_s))
        / (1.0 + fixed.lambda * fixed.alpha * fixed.mu)
        / SV
}

/// Lorenz-84 low-order atmospheric circulation model; parameter order is
/// `[F, G, a, b]`.
pub fn lorenz84(f: f64, g: f64, a: f64, b: f64) -> VectorField {
    VectorField::new(3, vec![f, g, a, b], |u, p, out| {
        let (x, y, z) = (u[0], u[1], u[2]);
        let (f, g, a, b) = (p[0], p[1], p[2], p[3]);
        out[0] = -y * y - z * z - a * x + a * f;
        out[1] = x * y - b * x * z - y + g;
        out[2] = b * x * y + x * z - z;
    })
}

/// Closed-form resilience measures of the radial system's origin attractor,
/// valid on any sampling box that contains the closed unit disk.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticAnswers {
    pub rate: f64,
}

impl AnalyticAnswers {
    pub fn return_time(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn reactivity(&self) -> f64 {
        -self.rate
    }

    pub fn max_amplification(&self) -> (f64, f64) {
        (1.0, 0.0)
    }

    pub fn lyapunov(&self) -> f64 {
        -self.rate
    }

    pub fn min_critical_shock(&self) -> f64 {
        1.0
    }

    pub fn max_noncritical_shock(&self) -> f64 {
        1.0
    }

    pub fn basin_stability(&self, box_area: f64) -> f64 {
        PI / box_area
    }

    /// Convergence time of an initial condition at radius `r`.
    pub fn tau(&self, r: f64, epsilon: f64) -> f64 {
        if r <= epsilon {
            0.0
        } else {
            (r / epsilon).ln() / self.rate
        }
    }

    /// Convergence pace at radius `r` (0 on the attractor itself).
    pub fn pace(&self, r: f64, epsilon: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            self.tau(r, epsilon) / r
        }
    }

    /// Median convergence time over the basin (radius density 2r on (0,1)):
    /// the median radius is sqrt(1/2).
    pub fn median_tau(&self, epsilon: f64) -> f64 {
        self.tau(0.5f64.sqrt(), epsilon)
    }

    /// Median convergence pace over the basin, by quadrature on the radius
    /// distribution.
    pub fn median_pace(&self, epsilon: f64) -> f64 {
        let m = 1_000_000usize;
        let mut entries: Vec<(f64, f64)> = (0..m)
            .map(|k| {
                let r = (k as f64 + 0.5) / m as f64;
                (self.pace(r, epsilon), r) // weight proportional to r
            })
            .collect();
        entries.sort_by(|a, b| a.partial_cmp(b).expect("finite paces"));
        let total: f64 = entries.iter().map(|e| e.1).sum();
        let mut acc = 0.0;
        for (beta, w) in &entries {
            acc += w;
            if acc >= total / 2.0 {
                return *beta;
            }
        }
        entries.last().expect("nonempty").0
    }

    /// Probability mass (relative to the box) converging within time `t`.
    pub fn finite_time_basin_stability(&self, t: f64, epsilon: f64, box_area: f64) -> f64 {
        let r = (epsilon * (self.rate * t).exp()).min(1.0);
        PI * r * r / box_area
    }
}

/// Radial system with a point attractor at the origin whose basin is the
/// open unit disk; everything outside diverges. The sign factor is zero on
/// the unit circle itself, making it invariant. Parameter order is `[a]`.
pub fn radial_oracle(rate: f64) -> (VectorField, AnalyticAnswers) {
    assert!(rate > 0.0, "attraction rate must be positive");
    let field = VectorField::new(2, vec![rate], |u, p, out| {
        let r2 = u[0] * u[0] + u[1] * u[1];
        let s = if r2 > 1.0 {
            1.0
        } else if r2 < 1.0 {
            -1.0
        } else {
            0.0
        };
        out[0] = s * p[0] * u[0];
        out[1] = s * p[0] * u[1];
    });
    (field, AnalyticAnswers { rate })
}

/// A sweep over one named parameter: start, step, stop (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let mut k = 0usize;
        loop {
            let x = self.start + self.step * k as f64;
            if x > self.stop + 1e-12 * self.step.abs() {
                break;
            }
            v.push(x);
            k += 1;
        }
        v
    }
}

/// A named system with the default configuration that reproduces its
/// published setup: grid, sampling box, proximity threshold, finite-time
/// horizon, sweep range, and mapper thresholds.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub name: &'static str,
    pub dim: usize,
    pub param_names: Vec<&'static str>,
    pub field: VectorField,
    pub grid: Vec<(f64, f64, usize)>,
    pub sample_box: Vec<(f64, f64)>,
    pub epsilon: f64,
    pub finite_time: f64,
    pub dt_observe: f64,
    /// timeout for the proximity (measure) pass
    pub max_time: f64,
    /// timeout for the recurrence (finding) pass
    pub find_max_time: f64,
    pub recurrence: RecurrenceConfig,
    pub sweep: SweepSpec,
    pub lyap_transient: f64,
    pub lyap_total: f64,
}

impl SystemSpec {
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|p| *p == name)
    }
}

/// Looks up a built-in system by name: `oracle`, `predator-prey`, `amoc`,
/// or `lorenz84`.
pub fn by_name(name: &str) -> Option<SystemSpec> {
    match name {
        "oracle" => {
            let (field, _) = radial_oracle(1.0);
            Some(SystemSpec {
                name: "oracle",
                dim: 2,
                param_names: vec!["a"],
                field,
                grid: vec![(-2.0, 2.0, 201), (-2.0, 2.0, 201)],
                sample_box: vec![(-2.0, 2.0), (-2.0, 2.0)],
                epsilon: 0.01,
                finite_time: 3.0,
                dt_observe: 0.02,
                max_time: 60.0,
                find_max_time: 200.0,
                recurrence: RecurrenceConfig {
                    consecutive_recurrences: 100,
                    attractor_locate_steps: 200,
                    consecutive_lost_steps: 20,
                },
                sweep: SweepSpec { param: "a".into(), start: 1.0, step: 0.5, stop: 2.0 },
                lyap_transient: 20.0,
                lyap_total: 200.0,
            })
        }
        "predator-prey" | "predprey" => {
            let field = predator_prey(2.05, -2.6, 0.4, 1.0, 0.36).expect("default parameters are regular");
            Some(SystemSpec {
                name: "predator-prey",
                dim: 2,
                param_names: vec!["A", "B", "C", "D", "E"],
                field,
                grid: vec![(0.0, 1.0, 201), (0.0, 0.05, 201)],
                sample_box: vec![(0.0, 1.0), (0.0, 0.05)],
                epsilon: 0.001,
                finite_time: 100.0,
                dt_observe: 0.1,
                max_time: 1000.0,
                find_max_time: 3000.0,
                recurrence: RecurrenceConfig {
                    consecutive_recurrences: 5000,
                    attractor_locate_steps: 1000,
                    consecutive_lost_steps: 100_000,
                },
                sweep: SweepSpec { param: "E".into(), start: 0.35, step: 0.003, stop: 0.45 },
                lyap_transient: 100.0,
                lyap_total: 1000.0,
            })
        }
        "amoc" => {
            let field = amoc_3box(0.0, AmocParams::default());
            Some(SystemSpec {
                name: "amoc",
                dim: 2,
                param_names: vec!["H"],
                field,
                grid: vec![(32.5, 36.5, 201), (33.5, 38.0, 201)],
                sample_box: vec![(32.5, 36.5), (33.5, 38.0)],
                epsilon: 0.01,
                finite_time: 1000.0,
                dt_observe: 1.0,
                max_time: 4000.0,
                find_max_time: 10_000.0,
                recurrence: RecurrenceConfig {
                    consecutive_recurrences: 100,
                    attractor_locate_steps: 200,
                    consecutive_lost_steps: 1000,
                },
                sweep: SweepSpec { param: "H".into(), start: 0.0, step: 0.02, stop: 0.44 },
                lyap_transient: 500.0,
                lyap_total: 3000.0,
            })
        }
        "lorenz84" => {
            let field = lorenz84(6.886, 1.355, 0.255, 4.0);
            Some(SystemSpec {
                name: "lorenz84",
                dim: 3,
                param_names: vec!["F", "G", "a", "b"],
                field,
                grid: vec![(-4.0, 4.0, 101), (-4.0, 4.0, 101), (-4.0, 4.0, 101)],
                sample_box: vec![(-4.0, 4.0), (-4.0, 4.0), (-4.0, 4.0)],
                epsilon: 0.01,
                finite_time: 20.0,
                dt_observe: 0.1,
                max_time: 300.0,
                find_max_time: 20_000.0,
                recurrence: RecurrenceConfig {
                    consecutive_recurrences: 100,
                    attractor_locate_steps: 4000,
                    consecutive_lost_steps: 10_000,
                },
                sweep: SweepSpec { param: "G".into(), start: 1.3, step: 0.02, stop: 1.7 },
                lyap_transient: 100.0,
                lyap_total: 1000.0,
            })
        }
        _ => None,
    }
}

/// Names of all built-in systems.
pub fn names() -> &'static [&'static str] {
    &["oracle", "predator-prey", "amoc", "lorenz84"]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn predator_prey_equilibria_at_box_corners() {
        let f = predator_prey(2.05, -2.6, 0.4, 1.0, 0.36).unwrap();
        assert_eq!(f.eval(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(f.eval(&[1.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn predator_prey_coexistence_equilibrium_exists() {
        // predator nullcline: C s(x) = D at x = 2/3 for the defaults
        let f = predator_prey(2.05, -2.6, 0.4, 1.0, 0.36).unwrap();
        let x = 2.0 / 3.0;
        let den = 2.05 * x * x - 2.6 * x + 1.0;
        let y = (1.0 - x) * (x - 0.36) * den / x;
        assert!(x > 0.0 && y > 0.0);
        let rhs = f.eval(&[x, y]);
        assert!(rhs[0].abs() < 1e-12 && rhs[1].abs() < 1e-12, "rhs = {rhs:?}");
    }

    #[test]
    fn predator_prey_rejects_singular_denominator() {
        // discriminant B^2 - 4A >= 0 with a root inside [0, 1]
        let err = predator_prey(1.0, -2.5, 0.4, 1.0, 0.36);
        assert!(matches!(err, Err(ZooError::SingularDenominator)));
    }

    #[test]
    fn lorenz84_x_subsystem_equilibrium() {
        let f = lorenz84(6.886, 1.355, 0.255, 4.0);
        let rhs = f.eval(&[6.886, 0.0, 0.0]);
        assert_relative_eq!(rhs[0], 0.0, epsilon = 1e-12);
        // y-equation is driven by G when y = z = 0
        assert_relative_eq!(rhs[1], 1.355, epsilon = 1e-12);
    }

    #[test]
    fn amoc_on_state_has_positive_flow() {
        // fixed point near the calibrated on state
        let fixed = AmocParams::default();
        let q = amoc_flow_strength(35.015, &fixed);
        assert!(q > 20.0 && q < 25.0, "q = {q} Sv");
    }

    #[test]
    fn oracle_answers_are_consistent() {
        let (_, ans) = radial_oracle(1.0);
        assert_relative_eq!(ans.return_time(), 1.0);
        assert_relative_eq!(ans.reactivity(), -1.0);
        assert_relative_eq!(ans.basin_stability(16.0), PI / 16.0);
        assert_relative_eq!(ans.tau(0.5, 0.01), (50.0f64).ln());
        assert_relative_eq!(ans.median_tau(0.01), (0.5f64.sqrt() / 0.01).ln(), epsilon = 1e-12);
        // doubling the rate halves every convergence time
        let (_, fast) = radial_oracle(2.0);
        assert_relative_eq!(fast.tau(0.5, 0.01), ans.tau(0.5, 0.01) / 2.0);
        assert_relative_eq!(
            ans.finite_time_basin_stability(3.0, 0.01, 16.0),
            PI * (0.01 * 3.0f64.exp()).powi(2) / 16.0
        );
    }

    #[test]
    fn sweep_values_include_endpoints() {
        let s = SweepSpec { param: "E".into(), start: 0.35, step: 0.003, stop: 0.45 };
        let v = s.values();
        assert_relative_eq!(v[0], 0.35);
        assert!((v.last().unwrap() - 0.449).abs() < 1e-9);
        assert_eq!(v.len(), 34);
    }
}
