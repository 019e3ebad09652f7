//! Coefficient estimation: linear least squares for noise-free structures
//! and iterative (extended) least squares when noise regressors are present.
//!
//! Both solvers go through an orthogonal decomposition (one-sided Jacobi
//! SVD) rather than the normal equations; rank-deficient problems get the
//! minimum-norm solution and raise `condition_warning`.

use crate::data::Dataset;
use crate::error::EstimationError;
use crate::linalg::JacobiSvd;
use crate::model::{ModelStructure, Source, Term};

pub const DEFAULT_ELS_ITERATIONS: usize = 10;
pub const DEFAULT_ELS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub coefficients: Vec<f64>,
    pub residual_variance: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub condition_warning: bool,
}

/// First row index with all lags in range and the transient discarded.
fn first_row(m: &ModelStructure, data: &Dataset) -> usize {
    m.max_lag().max(data.n_t)
}

fn term_value(t: &Term, u: &[f64], y: &[f64], noise: &[f64], k: usize) -> f64 {
    let mut prod = 1.0;
    for f in &t.factors {
        let v = match f.source {
            Source::Input => u[k - f.lag],
            Source::Output => y[k - f.lag],
            Source::Noise => noise[k - f.lag],
        };
        prod *= v.powi(f.exponent as i32);
    }
    match t.wrapper {
        crate::model::Wrapper::None => prod,
        crate::model::Wrapper::Sin => prod.sin(),
        crate::model::Wrapper::Cos => prod.cos(),
        crate::model::Wrapper::Abs => prod.abs(),
    }
}

struct SvdFit {
    coefficients: Vec<f64>,
    sse: f64,
    rank: usize,
    rows: usize,
}

/// Minimum-norm least-squares solve of terms(k) * c = y(k) for k in
/// [k0, n), with `noise` standing in for noise factors.
fn solve(
    terms: &[Term],
    data: &Dataset,
    noise: &[f64],
    k0: usize,
) -> Result<SvdFit, EstimationError> {
    let p = terms.len();
    let n = data.len();
    let rows = n.saturating_sub(k0);
    if rows < p {
        return Err(EstimationError::InsufficientData {
            rows,
            parameters: p,
        });
    }
    let columns: Vec<Vec<f64>> = terms
        .iter()
        .map(|t| {
            (k0..n)
                .map(|k| term_value(t, &data.u, &data.y, noise, k))
                .collect()
        })
        .collect();
    if columns
        .iter()
        .any(|c| c.iter().any(|v| !v.is_finite()))
    {
        return Err(EstimationError::NumericalFailure);
    }
    let target: Vec<f64> = data.y[k0..].to_vec();
    let svd = JacobiSvd::new(columns.clone());
    if !svd.is_finite() {
        return Err(EstimationError::NumericalFailure);
    }
    let eps = svd.default_eps();
    let rank = svd.rank(eps);
    let x = svd.solve_min_norm(&target, eps);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(EstimationError::NumericalFailure);
    }
    let mut sse = 0.0;
    for (r, yk) in target.iter().enumerate() {
        let pred: f64 = columns.iter().zip(&x).map(|(c, xi)| c[r] * xi).sum();
        sse += (yk - pred) * (yk - pred);
    }
    Ok(SvdFit {
        coefficients: x,
        sse,
        rank,
        rows,
    })
}

fn variance(sse: f64, rows: usize, rank: usize) -> f64 {
    if rows > rank {
        sse / (rows - rank) as f64
    } else {
        0.0
    }
}

/// Linear least squares for structures without noise factors: minimizes the
/// sum of squared one-step-ahead errors on `data`.
pub fn least_squares(
    m: &ModelStructure,
    data: &Dataset,
) -> Result<EstimationReport, EstimationError> {
    assert!(
        !m.has_noise(),
        "least_squares requires a noise-free structure; use extended_least_squares"
    );
    let zeros = vec![0.0; data.len()];
    let fit = solve(&m.terms, data, &zeros, first_row(m, data))?;
    Ok(EstimationReport {
        residual_variance: variance(fit.sse, fit.rows, fit.rank),
        condition_warning: fit.rank < m.complexity(),
        coefficients: fit.coefficients,
        iterations_used: 0,
        converged: true,
    })
}

/// Recursive one-step residuals for the full structure under coefficients
/// `c`, writing into `res` (zero before `k0`).
fn refresh_residuals(m: &ModelStructure, data: &Dataset, c: &[f64], k0: usize, res: &mut [f64]) {
    for r in res[..k0].iter_mut() {
        *r = 0.0;
    }
    for k in k0..data.len() {
        let mut acc = 0.0;
        for (ci, t) in c.iter().zip(&m.terms) {
            acc += ci * term_value(t, &data.u, &data.y, res, k);
        }
        res[k] = data.y[k] - acc;
    }
}

/// Iterative least squares for pseudo-linear structures (noise regressors
/// present). Iteration 0 fits the noise-free sub-structure and takes its
/// residuals as the noise estimate; every further iteration rebuilds the
/// full regressor matrix with the current residuals and re-solves, until the
/// relative coefficient change drops below `tol` or the budget runs out.
/// Running out of budget is not an error: the last iterate is returned with
/// `converged = false`.
pub fn extended_least_squares(
    m: &ModelStructure,
    data: &Dataset,
    max_iterations: usize,
    tol: f64,
) -> Result<EstimationReport, EstimationError> {
    assert!(
        m.has_noise(),
        "extended_least_squares requires at least one noise factor"
    );
    let n = data.len();
    let p = m.complexity();
    let k0_full = first_row(m, data);
    let (sub_terms, kept) = m.without_noise_terms();

    let mut residuals = vec![0.0; n];
    let mut coefficients = vec![0.0; p];
    let mut warning = false;
    if sub_terms.is_empty() {
        // no noise-free part: the iteration-0 model predicts zero
        let k0 = data.n_t;
        residuals[k0..].copy_from_slice(&data.y[k0..]);
    } else {
        let sub = ModelStructure::new(sub_terms.clone());
        let k0_sub = first_row(&sub, data);
        let zeros = vec![0.0; n];
        let fit = solve(&sub_terms, data, &zeros, k0_sub)?;
        warning = fit.rank < sub_terms.len();
        for (slot, c) in kept.iter().zip(&fit.coefficients) {
            coefficients[*slot] = *c;
        }
        refresh_residuals(&sub, data, &fit.coefficients, k0_sub, &mut residuals);
    }
    if max_iterations == 0 {
        let rows = n.saturating_sub(k0_full);
        if rows < p {
            return Err(EstimationError::InsufficientData {
                rows,
                parameters: p,
            });
        }
        let sse: f64 = residuals[k0_full..].iter().map(|r| r * r).sum();
        return Ok(EstimationReport {
            coefficients,
            residual_variance: variance(sse, rows, kept.len()),
            iterations_used: 0,
            converged: false,
            condition_warning: warning,
        });
    }

    let mut converged = false;
    let mut iterations_used = 0;
    let mut sse = 0.0;
    let mut rows = 0;
    let mut rank = 0;
    for _ in 1..=max_iterations {
        iterations_used += 1;
        let fit = solve(&m.terms, data, &residuals, k0_full)?;
        let delta = coefficients
            .iter()
            .zip(&fit.coefficients)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        coefficients = fit.coefficients;
        warning = fit.rank < p;
        rank = fit.rank;
        rows = fit.rows;
        refresh_residuals(m, data, &coefficients, k0_full, &mut residuals);
        sse = residuals[k0_full..].iter().map(|r| r * r).sum();
        if delta <= tol * scale.max(f64::EPSILON) {
            converged = true;
            break;
        }
    }
    Ok(EstimationReport {
        coefficients,
        residual_variance: variance(sse, rows, rank),
        iterations_used,
        converged,
        condition_warning: warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_excitation, simulate_truth, ExcitationKind, Role, SyntheticSystem};
    use crate::model::{regressor_row, Term};

    fn narx_2term() -> ModelStructure {
        ModelStructure::new(vec![
            Term::monomial(&[(Source::Output, 1, 1)]),
            Term::monomial(&[(Source::Input, 1, 1)]),
        ])
    }

    fn noise_free_data(n: usize, seed: u64) -> Dataset {
        let sys = SyntheticSystem {
            name: "t".into(),
            structure: narx_2term(),
            true_coefficients: vec![0.7, 0.5],
            noise_std: 0.0,
            excitation: ExcitationKind::FilteredUniform,
            amplitude: 1.0,
        };
        let u = generate_excitation(n, 1.0, ExcitationKind::FilteredUniform, seed, 0);
        simulate_truth(&sys, &u, seed).unwrap()
    }

    #[test]
    fn recovers_exact_coefficients_noise_free() {
        let data = noise_free_data(200, 3);
        let rep = least_squares(&narx_2term(), &data).unwrap();
        assert!((rep.coefficients[0] - 0.7).abs() < 1e-8);
        assert!((rep.coefficients[1] - 0.5).abs() < 1e-8);
        assert!(!rep.condition_warning);
        assert!(rep.residual_variance < 1e-16);
    }

    #[test]
    fn duplicate_term_gets_minimum_norm_and_same_predictions() {
        let data = noise_free_data(200, 4);
        let single = ModelStructure::new(vec![Term::monomial(&[(Source::Output, 1, 1)])]);
        let doubled = ModelStructure::new(vec![
            Term::monomial(&[(Source::Output, 1, 1)]),
            Term::monomial(&[(Source::Output, 1, 1)]),
        ]);
        let a = least_squares(&single, &data).unwrap();
        let b = least_squares(&doubled, &data).unwrap();
        assert!(!a.condition_warning);
        assert!(b.condition_warning);
        assert!((b.coefficients[0] - b.coefficients[1]).abs() < 1e-10);
        let zeros = vec![0.0; data.len()];
        for k in 1..data.len() {
            let ra = regressor_row(&single, &data, &zeros, k).unwrap();
            let rb = regressor_row(&doubled, &data, &zeros, k).unwrap();
            let pa = a.coefficients[0] * ra[0];
            let pb = b.coefficients[0] * rb[0] + b.coefficients[1] * rb[1];
            assert!((pa - pb).abs() < 1e-8);
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_regressors() {
        let sys = SyntheticSystem {
            name: "t".into(),
            structure: narx_2term(),
            true_coefficients: vec![0.7, 0.5],
            noise_std: 0.05,
            excitation: ExcitationKind::FilteredUniform,
            amplitude: 1.0,
        };
        let u = generate_excitation(500, 1.0, ExcitationKind::FilteredUniform, 7, 0);
        let data = simulate_truth(&sys, &u, 7).unwrap();
        let m = narx_2term();
        let rep = least_squares(&m, &data).unwrap();
        let zeros = vec![0.0; data.len()];
        let mut dot = [0.0f64; 2];
        let mut scale = 0.0f64;
        for k in 1..data.len() {
            let row = regressor_row(&m, &data, &zeros, k).unwrap();
            let pred: f64 = row
                .iter()
                .zip(&rep.coefficients)
                .map(|(a, b)| a * b)
                .sum();
            let r = data.y[k] - pred;
            for (d, v) in dot.iter_mut().zip(&row) {
                *d += v * r;
            }
            scale += data.y[k] * data.y[k];
        }
        for d in dot {
            assert!(d.abs() <= 1e-8 * scale.max(1.0), "dot {d}, scale {scale}");
        }
    }

    #[test]
    fn insufficient_rows_is_an_error() {
        let data = Dataset::new(vec![1.0; 3], vec![1.0; 3], 1.0, 0, Role::Estimation).unwrap();
        let m = ModelStructure::new(vec![
            Term::monomial(&[(Source::Output, 1, 1)]),
            Term::monomial(&[(Source::Input, 1, 1)]),
            Term::monomial(&[(Source::Input, 2, 1)]),
        ]);
        assert!(matches!(
            least_squares(&m, &data),
            Err(EstimationError::InsufficientData { .. })
        ));
    }

    fn narmax_structure() -> ModelStructure {
        ModelStructure::new(vec![
            Term::monomial(&[(Source::Output, 1, 1)]),
            Term::monomial(&[(Source::Input, 1, 1)]),
            Term::monomial(&[(Source::Noise, 1, 1)]),
        ])
    }

    #[test]
    fn els_with_zero_noise_coefficients_reaches_narx_fixed_point() {
        // data generated without any noise term: the true noise coefficient is 0
        let data = noise_free_data(300, 9);
        let rep = extended_least_squares(&narmax_structure(), &data, 10, 1e-8).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations_used <= 2, "used {}", rep.iterations_used);
        assert!((rep.coefficients[0] - 0.7).abs() < 1e-8);
        assert!((rep.coefficients[1] - 0.5).abs() < 1e-8);
        assert!(rep.coefficients[2].abs() < 1e-8);
    }

    #[test]
    fn els_zero_budget_returns_the_narx_seed_fit() {
        let data = noise_free_data(300, 10);
        let rep = extended_least_squares(&narmax_structure(), &data, 0, 1e-8).unwrap();
        assert_eq!(rep.iterations_used, 0);
        assert!(!rep.converged);
        assert!((rep.coefficients[0] - 0.7).abs() < 1e-8);
        assert_eq!(rep.coefficients[2], 0.0);
    }

    #[test]
    fn els_recovers_moving_average_coefficients() {
        // single long record from the S2-style system
        let sys = SyntheticSystem {
            name: "t".into(),
            structure: narmax_structure(),
            true_coefficients: vec![0.8, 1.0, 0.5],
            noise_std: 0.05,
            excitation: ExcitationKind::FilteredUniform,
            amplitude: 1.0,
        };
        let u = generate_excitation(8000, 1.0, ExcitationKind::FilteredUniform, 21, 0);
        let data = simulate_truth(&sys, &u, 99).unwrap();
        let rep = extended_least_squares(&narmax_structure(), &data, 20, 1e-10).unwrap();
        assert!((rep.coefficients[0] - 0.8).abs() < 0.05, "{:?}", rep.coefficients);
        assert!((rep.coefficients[1] - 1.0).abs() < 0.05, "{:?}", rep.coefficients);
        assert!((rep.coefficients[2] - 0.5).abs() < 0.08, "{:?}", rep.coefficients);
    }
}
