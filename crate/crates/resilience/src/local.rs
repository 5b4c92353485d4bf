//! Local resilience measures of a point attractor, all functions of the
//! Jacobian there: characteristic return time, reactivity, and the maximal
//! amplification of the linearized flow together with its time.

use nalgebra::DMatrix;

use crate::attractors::Attractor;
use crate::dynsys::{jacobian, VectorField};
use crate::error::LocalError;

/// The four local measures. When the reactivity is non-positive the
/// amplification envelope never exceeds 1, so `max_amplification = 1` at
/// time 0 exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMeasures {
    /// -1 / spectral abscissa; +inf at loss of linear stability
    pub return_time: f64,
    pub reactivity: f64,
    pub max_amplification: f64,
    pub max_amplification_time: f64,
}

fn check_finite(j: &DMatrix<f64>) -> Result<(), LocalError> {
    if j.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LocalError::NonFiniteMatrix)
    }
}

/// Largest real part over all eigenvalues.
pub fn spectral_abscissa(j: &DMatrix<f64>) -> Result<f64, LocalError> {
    check_finite(j)?;
    let eig = j.clone().complex_eigenvalues();
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Characteristic return time `-1/λ_max`, or +inf when the spectral
/// abscissa is non-negative.
pub fn characteristic_return_time(j: &DMatrix<f64>) -> Result<f64, LocalError> {
    let lam = spectral_abscissa(j)?;
    Ok(if lam < 0.0 { -1.0 / lam } else { f64::INFINITY })
}

/// Reactivity: spectral abscissa of the symmetric part `(J + Jᵀ)/2`,
/// the largest instantaneous growth rate of the perturbation norm.
pub fn reactivity(j: &DMatrix<f64>) -> Result<f64, LocalError> {
    check_finite(j)?;
    let sym = (j + j.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Amplification envelope ρ(t): the operator norm (largest singular value)
/// of `exp(tJ)`.
pub fn amplification_envelope(j: &DMatrix<f64>, t: f64) -> Result<f64, LocalError> {
    check_finite(j)?;
    assert!(t >= 0.0 && t.is_finite(), "envelope time must be finite and nonnegative");
    if t == 0.0 {
        return Ok(1.0);
    }
    let m = (j * t).exp();
    Ok(m.singular_values().iter().copied().fold(0.0, f64::max))
}

const SCAN_POINTS: usize = 200;
const SCAN_SPAN_RETURN_TIMES: f64 = 50.0;

/// Global maximum of ρ(t) over t ≥ 0 and its argmax. Requires a stable
/// matrix; if the reactivity is non-positive the exact answer is (1, 0).
/// Otherwise a log-spaced scan over `(0, 50 t_R]` brackets the peak and a
/// golden-section pass refines it.
pub fn maximal_amplification(j: &DMatrix<f64>) -> Result<(f64, f64), LocalError> {
    let lam = spectral_abscissa(j)?;
    if lam >= 0.0 {
        return Err(LocalError::UnstableMatrix);
    }
    if reactivity(j)? <= 0.0 {
        return Ok((1.0, 0.0));
    }
    let t_r = -1.0 / lam;
    let t_hi = SCAN_SPAN_RETURN_TIMES * t_r;
    let t_lo = 1e-4 * t_hi;
    let ratio = (t_hi / t_lo).powf(1.0 / (SCAN_POINTS as f64 - 1.0));
    let ts: Vec<f64> = (0..SCAN_POINTS).map(|k| t_lo * ratio.powi(k as i32)).collect();
    let mut best_k = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (k, &t) in ts.iter().enumerate() {
        let rho = amplification_envelope(j, t)?;
        if rho > best {
            best = rho;
            best_k = k;
        }
    }
    let lo = if best_k == 0 { 0.0 } else { ts[best_k - 1] };
    let hi = if best_k + 1 < ts.len() { ts[best_k + 1] } else { t_hi };
    let (t_max, rho_max) = golden_section_max(|t| amplification_envelope(j, t).unwrap_or(f64::NEG_INFINITY), lo, hi);
    if rho_max <= 1.0 {
        return Ok((1.0, 0.0));
    }
    Ok((rho_max, t_max))
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..120 {
        if hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// All four local measures of an attractor, or `None` when the attractor is
/// not a point attractor. A cloud counts as a point attractor when its
/// diameter stays below `point_threshold` (ten grid-cell diagonals in the
/// pipeline). The Jacobian is evaluated at the cloud centroid.
pub fn local_measures(
    field: &VectorField,
    attractor: &Attractor,
    point_threshold: f64,
) -> Result<Option<LocalMeasures>, LocalError> {
    if attractor.diameter() > point_threshold {
        return Ok(None);
    }
    let j = jacobian(field, &attractor.centroid())?;
    let return_time = characteristic_return_time(&j)?;
    let r0 = reactivity(&j)?;
    let (rho_max, t_max) = if return_time.is_finite() {
        maximal_amplification(&j)?
    } else {
        // envelope unbounded at loss of stability
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(Some(LocalMeasures {
        return_time,
        reactivity: r0,
        max_amplification: rho_max,
        max_amplification_time: t_max,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn return_time_of_diagonal_matrix() {
        let j = dmatrix![-1.0, 0.0; 0.0, -2.0];
        assert_relative_eq!(characteristic_return_time(&j).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn return_time_of_isotropic_contraction() {
        let j = dmatrix![-1.0, 0.0; 0.0, -1.0];
        assert_relative_eq!(characteristic_return_time(&j).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn return_time_diverges_for_rotation() {
        let j = dmatrix![0.0, 1.0; -1.0, 0.0];
        assert!(characteristic_return_time(&j).unwrap().is_infinite());
    }

    #[test]
    fn reactivity_of_normal_matrix_is_abscissa() {
        let j = dmatrix![-1.0, 0.0; 0.0, -2.0];
        assert_relative_eq!(reactivity(&j).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn reactivity_of_shear() {
        // symmetric part [[-1, 5], [5, -1]] has eigenvalues -1 ± 5
        let j = dmatrix![-1.0, 10.0; 0.0, -1.0];
        assert_relative_eq!(reactivity(&j).unwrap(), 4.0, epsilon = 1e-10);
    }

    #[test]
    fn envelope_is_one_at_zero() {
        let j = dmatrix![-3.0, 7.0; 0.4, -0.2];
        assert_eq!(amplification_envelope(&j, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn envelope_of_diagonal_matrix() {
        let j = dmatrix![-1.0, 0.0; 0.0, -2.0];
        assert_relative_eq!(amplification_envelope(&j, 1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn envelope_matches_closed_form_for_jordan_like_block() {
        // exp(tJ) = e^{-t} [[1, 10t], [0, 1]]: largest singular value of
        // [[1, a], [0, 1]] is sqrt(1 + a^2/2 + a sqrt(1 + a^2/4))
        let j = dmatrix![-1.0, 10.0; 0.0, -1.0];
        for t in [0.1, 0.5, 1.0, 2.5] {
            let a: f64 = 10.0 * t;
            let sig = (1.0 + a * a / 2.0 + a * (1.0 + a * a / 4.0).sqrt()).sqrt();
            let expected = (-t as f64).exp() * sig;
            assert_relative_eq!(amplification_envelope(&j, t).unwrap(), expected, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn shear_amplifies_transiently() {
        let j = dmatrix![-1.0, 10.0; 0.0, -1.0];
        assert!(amplification_envelope(&j, 0.5).unwrap() > 1.0);
    }

    #[test]
    fn normal_stable_matrices_never_amplify() {
        let j = dmatrix![-1.0, 0.0; 0.0, -2.0];
        assert_eq!(maximal_amplification(&j).unwrap(), (1.0, 0.0));
        let j = dmatrix![-1.0, 0.0; 0.0, -1.0];
        assert_eq!(maximal_amplification(&j).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn maximal_amplification_matches_dense_scan() {
        let j = dmatrix![-1.0, 10.0; 0.0, -1.0];
        let (rho, t_max) = maximal_amplification(&j).unwrap();
        assert!(rho > 1.0);
        // brute-force envelope scan oracle on t in [0, 20], step 1e-3
        let mut best = (0.0, 0.0);
        let mut t = 0.0;
        while t <= 20.0 {
            let r = amplification_envelope(&j, t).unwrap();
            if r > best.0 {
                best = (r, t);
            }
            t += 1e-3;
        }
        assert_relative_eq!(rho, best.0, max_relative = 1e-3);
        assert_relative_eq!(t_max, best.1, max_relative = 1e-2);
    }

    #[test]
    fn unstable_matrix_is_rejected() {
        let j = dmatrix![0.5, 0.0; 0.0, -1.0];
        assert!(matches!(maximal_amplification(&j), Err(LocalError::UnstableMatrix)));
    }

    #[test]
    fn local_measures_of_radial_attractor() {
        let (field, ans) = crate::systems::radial_oracle(1.0);
        let attractor = Attractor { id: 1, points: vec![vec![0.0, 0.0]] };
        let m = local_measures(&field, &attractor, 0.1).unwrap().unwrap();
        assert_relative_eq!(m.return_time, ans.return_time(), epsilon = 1e-6);
        assert_relative_eq!(m.reactivity, ans.reactivity(), epsilon = 1e-6);
        assert_relative_eq!(m.max_amplification, 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.max_amplification_time, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn wide_clouds_are_not_point_attractors() {
        let (field, _) = crate::systems::radial_oracle(1.0);
        let attractor = Attractor { id: 1, points: vec![vec![0.0, 0.0], vec![0.5, 0.0]] };
        assert!(local_measures(&field, &attractor, 0.1).unwrap().is_none());
    }
}
