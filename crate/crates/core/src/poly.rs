//! Simultaneous polynomial root finding (Aberth-Ehrlich iteration).

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;

/// Evaluate `p(z)` and `p'(z)` by Horner's rule; `coeffs[i]` multiplies `z^i`.
fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

#[cfg(test)]
pub(crate) fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    roots_with_offset(coeffs, 0.4)
}

/// All complex roots of the polynomial `sum_i coeffs[i] z^i`.
///
/// The leading coefficient must be non-zero. Clusters of roots closer than
/// `1e-6 * (1 + max|z|)` are replaced by their centroid, which recovers
/// multiple roots that rounding has split into small complex pairs. A merged
/// cluster within that distance of the real axis is taken to be real.
///
/// Initial guesses lie on a circle, rotated by `offset` radians.
pub(crate) fn roots_with_offset(coeffs: &[f64], offset: f64) -> Result<Vec<Complex64>> {
    let degree = coeffs.len().saturating_sub(1);
    let lead = *coeffs.last().ok_or_else(|| Error::Domain("empty polynomial".into()))?;
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::Domain("leading coefficient must be finite and non-zero".into()));
    }
    if degree == 0 {
        return Ok(Vec::new());
    }

    // Cauchy bound on root moduli.
    let bound = 1.0 + coeffs[..degree].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / degree as f64 + offset;
            Complex64::from_polar(0.5 * bound, theta)
        })
        .collect();

    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let (p, dp) = eval_with_derivative(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..degree {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff.norm() > 0.0 {
                        repulsion += diff.inv();
                    }
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step <= 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        // Multiple roots converge only linearly; accept if residuals are small.
        let scale: f64 = coeffs.iter().map(|c| c.abs()).sum();
        let worst = z
            .iter()
            .map(|&zi| {
                let (p, _) = eval_with_derivative(coeffs, zi);
                p.norm() / (scale * (1.0 + zi.norm()).powi(degree as i32))
            })
            .fold(0.0, f64::max);
        if !(worst <= 1e-10) {
            return Err(Error::Convergence(format!(
                "Aberth iteration did not converge in {MAX_ITER} steps (scaled residual {worst:e})"
            )));
        }
    }
    Ok(merge_clusters(z))
}

fn merge_clusters(z: Vec<Complex64>) -> Vec<Complex64> {
    let scale = 1.0 + z.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let radius = 1e-6 * scale;
    let mut group: Vec<usize> = (0..z.len()).collect();
    // union-find by repeated relabeling; degrees are small
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            if (z[i] - z[j]).norm() <= radius {
                let (gi, gj) = (group[i], group[j]);
                for g in group.iter_mut() {
                    if *g == gj {
                        *g = gi;
                    }
                }
            }
        }
    }
    let mut out = z.clone();
    for i in 0..z.len() {
        let members: Vec<usize> = (0..z.len()).filter(|&j| group[j] == group[i]).collect();
        if members.len() > 1 {
            let sum: Complex64 = members.iter().map(|&j| z[j]).sum();
            out[i] = sum / members.len() as f64;
            // real coefficients: a cluster touching the real axis is a real multiple root
            if out[i].im.abs() <= radius {
                out[i].im = 0.0;
            }
        }
    }
    out
}
