//! Numeric verification of the embedding-conditioning analysis: empirical
//! coherence and its probabilistic bound, Gram-matrix conditioning via
//! Gershgorin intervals with exact eigenvalues, Rademacher/generalization
//! bound calculators, and the orthogonal-decomposition residual.

pub mod jacobi;

use ndarray::{Array1, Array2};
use serde::Serialize;
use thiserror::Error;

pub use jacobi::symmetric_eigenvalues;

use crate::embeddings::sha_fixed_embedding;

/// Batch size cap for the Gershgorin check.
pub const MAX_BATCH: usize = 64;
/// Independent dimensions in a SHA digest row; tiling repeats them.
pub const SHA_EFFECTIVE_DIM: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TheoryError {
    #[error("matrix has fewer than two rows")]
    TooFewRows,
    #[error("row {0} has zero norm")]
    ZeroRow(usize),
    #[error("epsilon must lie in (0, 1)")]
    BadEpsilon,
    #[error("bad inputs: {0}")]
    BadInputs(String),
    #[error("batch of {0} exceeds the {MAX_BATCH}-row limit")]
    BatchTooLarge(usize),
    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Maximum absolute normalized inner product over distinct row pairs.
pub fn coherence(e: &Array2<f64>) -> Result<f64, TheoryError> {
    let n = e.nrows();
    if n < 2 {
        return Err(TheoryError::TooFewRows);
    }
    let d = e.ncols();
    // Plain left-to-right accumulation (not BLAS) keeps the value exactly
    // reproducible by a naive double loop.
    let mut norms = vec![0.0f64; n];
    for (i, norm) in norms.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in 0..d {
            s += e[(i, k)] * e[(i, k)];
        }
        if s == 0.0 {
            return Err(TheoryError::ZeroRow(i));
        }
        *norm = s.sqrt();
    }
    let mut mu: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut dot = 0.0;
            for k in 0..d {
                dot += e[(i, k)] * e[(j, k)];
            }
            mu = mu.max((dot / (norms[i] * norms[j])).abs());
        }
    }
    Ok(mu)
}

/// High-probability coherence bound for near-uniform rows on the sphere:
/// sqrt(8 ln(V^2/eps) / d_f) + 4 ln(V^2/eps) / d_f.
pub fn coherence_bound(v: usize, d_f: usize, epsilon: f64) -> Result<f64, TheoryError> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(TheoryError::BadEpsilon);
    }
    if v < 2 || d_f < 1 {
        return Err(TheoryError::BadInputs(
            "need at least 2 rows and d_f >= 1".into(),
        ));
    }
    let lg = ((v * v) as f64 / epsilon).ln();
    let d = d_f as f64;
    Ok((8.0 * lg / d).sqrt() + 4.0 * lg / d)
}

/// Coherence of the SHA fixed block with the tiling-aware evaluation:
/// when d_f exceeds one digest width the bound is also evaluated at the
/// effective dimension 32, and the first-32-column coherence is reported.
#[derive(Debug, Clone, Serialize)]
pub struct CoherenceReport {
    pub v: usize,
    pub d_f: usize,
    pub epsilon: f64,
    /// Empirical coherence over the full d_f-wide rows.
    pub mu: f64,
    /// Coherence over the first 32 columns (one digest), when tiled.
    pub mu_first_tile: Option<f64>,
    /// Bound evaluated at the nominal d_f.
    pub bound_nominal: f64,
    /// Bound at the effective dimension min(d_f, 32).
    pub bound_effective: f64,
    pub effective_dim: usize,
    /// mu against the effective-dimension bound.
    pub pass: bool,
}

pub fn sha_coherence_report(
    v: usize,
    d: usize,
    d_t: usize,
    epsilon: f64,
) -> Result<CoherenceReport, TheoryError> {
    let e = sha_fixed_embedding(v, d, d_t)
        .map_err(|err| TheoryError::BadInputs(err.to_string()))?;
    let d_f = d - d_t;
    let mu = coherence(&e)?;
    let effective_dim = d_f.min(SHA_EFFECTIVE_DIM);
    let mu_first_tile = if d_f > SHA_EFFECTIVE_DIM {
        let first = e.slice(ndarray::s![.., 0..SHA_EFFECTIVE_DIM]).to_owned();
        Some(coherence(&first)?)
    } else {
        None
    };
    let bound_nominal = coherence_bound(v, d_f, epsilon)?;
    let bound_effective = coherence_bound(v, effective_dim, epsilon)?;
    Ok(CoherenceReport {
        v,
        d_f,
        epsilon,
        mu,
        mu_first_tile,
        bound_nominal,
        bound_effective,
        effective_dim,
        pass: mu <= bound_effective,
    })
}

/// Gershgorin interval check for one batch of embedding rows.
#[derive(Debug, Clone, Serialize)]
pub struct ConditioningReport {
    pub n: usize,
    /// Batch coherence: max |G_ij| off the diagonal after row normalization.
    pub mu: f64,
    pub interval_low: f64,
    pub interval_high: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub eigenvalues: Vec<f64>,
    /// Exact condition number, when lambda_min > 0.
    pub condition_number: Option<f64>,
    /// (1 + (n-1) mu) / (1 - (n-1) mu), when (n-1) mu < 1.
    pub condition_bound: Option<f64>,
    /// All exact eigenvalues inside [interval_low, interval_high].
    pub in_interval: bool,
}

/// Build the Gram matrix of the selected (unit-normalized) rows and compare
/// its exact eigenvalues against the Gershgorin interval
/// [1 - (n-1) mu, 1 + (n-1) mu].
pub fn gershgorin_check(
    e_f: &Array2<f64>,
    batch: &[usize],
) -> Result<ConditioningReport, TheoryError> {
    let n = batch.len();
    if n > MAX_BATCH {
        return Err(TheoryError::BatchTooLarge(n));
    }
    if n < 2 {
        return Err(TheoryError::DegenerateBatch("need at least 2 rows".into()));
    }
    for &i in batch {
        if i >= e_f.nrows() {
            return Err(TheoryError::DegenerateBatch(format!(
                "row index {i} out of range"
            )));
        }
    }
    // Normalize the selected rows.
    let d = e_f.ncols();
    let mut x = Array2::zeros((n, d));
    for (r, &i) in batch.iter().enumerate() {
        let norm = e_f.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(TheoryError::ZeroRow(i));
        }
        for j in 0..d {
            x[(r, j)] = e_f[(i, j)] / norm;
        }
    }
    let gram = x.dot(&x.t());
    let mut mu: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            mu = mu.max(gram[(i, j)].abs());
        }
    }
    let eigenvalues = symmetric_eigenvalues(&gram);
    let lambda_min = eigenvalues[0];
    let lambda_max = eigenvalues[n - 1];
    let radius = (n as f64 - 1.0) * mu;
    let (interval_low, interval_high) = (1.0 - radius, 1.0 + radius);
    // The interval bound can be attained exactly (n = 2 always attains it),
    // so membership allows eigensolver rounding at machine-epsilon scale;
    // this is float representation slack, not a tolerance on the theorem.
    let slack = 16.0 * (n * n) as f64 * f64::EPSILON;
    let in_interval =
        lambda_min >= interval_low - slack && lambda_max <= interval_high + slack;
    let condition_number = (lambda_min > 0.0).then(|| lambda_max / lambda_min);
    let condition_bound = (radius < 1.0).then(|| (1.0 + radius) / (1.0 - radius));
    Ok(ConditioningReport {
        n,
        mu,
        interval_low,
        interval_high,
        lambda_min,
        lambda_max,
        eigenvalues,
        condition_number,
        condition_bound,
        in_interval,
    })
}

/// Inputs to the complexity/generalization bound calculators.
#[derive(Debug, Clone, Serialize)]
pub struct BoundInputs {
    /// Sample count.
    pub n: usize,
    /// Vocabulary size.
    pub v: usize,
    /// Trainable embedding width.
    pub d_t: usize,
    /// Number of non-embedding trainable parameters.
    pub d_param: f64,
    /// Bound on trainable embedding row norms.
    pub b_t: f64,
    /// Bound on the parameter vector norm.
    pub b_theta: f64,
    /// Network Lipschitz constant.
    pub l_f: f64,
    /// Loss Lipschitz constant.
    pub l_loss: f64,
    /// Confidence parameter for the generalization bound.
    pub delta: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<(), TheoryError> {
        if self.n == 0 || self.v == 0 {
            return Err(TheoryError::BadInputs("n and V must be positive".into()));
        }
        for (name, x) in [
            ("d_param", self.d_param),
            ("b_t", self.b_t),
            ("b_theta", self.b_theta),
            ("l_f", self.l_f),
            ("l_loss", self.l_loss),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(TheoryError::BadInputs(format!("{name} must be positive")));
            }
        }
        if !(0.0 < self.delta && self.delta < 1.0) {
            return Err(TheoryError::BadInputs("delta must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// (L_f L_loss / sqrt(n)) (sqrt(V d_t + D) + B_t sqrt(V) + B_theta).
pub fn rademacher_bound(inputs: &BoundInputs) -> Result<f64, TheoryError> {
    inputs.validate()?;
    let n = inputs.n as f64;
    let v = inputs.v as f64;
    let lead = inputs.l_f * inputs.l_loss / n.sqrt();
    Ok(lead * ((v * inputs.d_t as f64 + inputs.d_param).sqrt() + inputs.b_t * v.sqrt() + inputs.b_theta))
}

/// 2 R_n + sqrt(ln(2/delta) / (2n)).
pub fn generalization_bound(inputs: &BoundInputs) -> Result<f64, TheoryError> {
    let r = rademacher_bound(inputs)?;
    let n = inputs.n as f64;
    Ok(2.0 * r + ((2.0 / inputs.delta).ln() / (2.0 * n)).sqrt())
}

/// Residuals of the orthogonal decomposition E[i] = proj_span(E_f) + R[i].
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// Squared residual norm per token.
    pub residual_sq: Vec<f64>,
    /// B_t^2 + (1 - lambda_min), with B_t = max trainable row norm and
    /// lambda_min from the Gram of the row-normalized fixed block.
    pub bound: f64,
    pub lambda_min: f64,
    /// True when lambda_min is (numerically) zero and the bound carries no
    /// information.
    pub vacuous: bool,
    /// Rank of the fixed block found during orthogonalization.
    pub rank: usize,
}

/// Project each hybrid row onto the span of the fixed rows (lifted to the
/// full d_t + d_f space, where the span only constrains the fixed block)
/// and report squared residual norms against the bound.
pub fn residual_decomposition(
    e_t: &Array2<f64>,
    e_f: &Array2<f64>,
) -> Result<ResidualReport, TheoryError> {
    if e_t.nrows() != e_f.nrows() {
        return Err(TheoryError::DimensionMismatch(format!(
            "row counts differ: {} vs {}",
            e_t.nrows(),
            e_f.nrows()
        )));
    }
    let v = e_f.nrows();
    let d_f = e_f.ncols();
    if v == 0 || d_f == 0 {
        return Err(TheoryError::DimensionMismatch(
            "fixed block must be nonempty".into(),
        ));
    }

    // Orthonormal basis of the row span: modified Gram-Schmidt with one
    // re-orthogonalization pass.
    let mut basis: Vec<Array1<f64>> = Vec::new();
    let drop_tol = 1e-12;
    for i in 0..v {
        let mut w = e_f.row(i).to_owned();
        let norm0 = w.dot(&w).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = w.dot(q);
                w -= &(c * q);
            }
        }
        let norm = w.dot(&w).sqrt();
        if norm > drop_tol * norm0.max(1.0) {
            basis.push(w / norm);
        }
    }
    let rank = basis.len();

    // Residuals: the trainable block is orthogonal to the lifted span, so
    // ||R[i]||^2 = ||E_t[i]||^2 + ||E_f[i] - proj(E_f[i])||^2.
    let residual_sq: Vec<f64> = (0..v)
        .map(|i| {
            let t_sq: f64 = e_t.row(i).iter().map(|x| x * x).sum();
            let mut f_res = e_f.row(i).to_owned();
            for q in &basis {
                let c = f_res.dot(q);
                f_res -= &(c * q);
            }
            t_sq + f_res.dot(&f_res)
        })
        .collect();

    // Bound uses the row-normalized fixed block, matching the unit-norm
    // assumption of the statement.
    let mut normalized = e_f.clone();
    for mut row in normalized.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let gram = normalized.t().dot(&normalized); // d_f x d_f
    let eigenvalues = symmetric_eigenvalues(&gram);
    let lambda_min = eigenvalues[0].max(0.0);
    let b_t = (0..v)
        .map(|i| e_t.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let vacuous = lambda_min < 1e-10;
    Ok(ResidualReport {
        residual_sq,
        bound: b_t * b_t + (1.0 - lambda_min),
        lambda_min,
        vacuous,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::random_fixed_embedding;
    use crate::rng::SplitMix64;

    #[test]
    fn orthonormal_rows_have_zero_coherence() {
        let eye: Array2<f64> = Array2::eye(6);
        assert_eq!(coherence(&eye).unwrap(), 0.0);
    }

    #[test]
    fn duplicated_row_gives_coherence_one() {
        let mut m = Array2::eye(4);
        let first = m.row(0).to_owned();
        m.row_mut(1).assign(&first);
        assert!((coherence(&m).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherence_errors() {
        let one_row = Array2::from_elem((1, 4), 1.0);
        assert_eq!(coherence(&one_row), Err(TheoryError::TooFewRows));
        let mut zero_row = Array2::from_elem((3, 4), 1.0);
        zero_row.row_mut(2).fill(0.0);
        assert_eq!(coherence(&zero_row), Err(TheoryError::ZeroRow(2)));
    }

    #[test]
    fn coherence_matches_bruteforce_pairs() {
        let e = random_fixed_embedding(20, 16, 16, 5).unwrap();
        let fast = coherence(&e).unwrap();
        let mut slow: f64 = 0.0;
        for i in 0..20 {
            for j in 0..20 {
                if i == j {
                    continue;
                }
                let num: f64 = (0..16).map(|k| e[(i, k)] * e[(j, k)]).sum();
                let ni: f64 = (0..16).map(|k| e[(i, k)] * e[(i, k)]).sum::<f64>().sqrt();
                let nj: f64 = (0..16).map(|k| e[(j, k)] * e[(j, k)]).sum::<f64>().sqrt();
                slow = slow.max((num / (ni * nj)).abs());
            }
        }
        assert_eq!(fast, slow);
    }

    #[test]
    fn coherence_invariant_to_row_scaling_and_permutation() {
        let e = random_fixed_embedding(12, 8, 8, 2).unwrap();
        let base = coherence(&e).unwrap();
        let mut scaled = e.clone();
        for (i, mut row) in scaled.rows_mut().into_iter().enumerate() {
            row *= 1.0 + i as f64;
        }
        assert!((coherence(&scaled).unwrap() - base).abs() < 1e-12);
        let mut permuted = e.clone();
        for k in 0..12 {
            permuted.row_mut(k).assign(&e.row(11 - k).to_owned());
        }
        assert!((coherence(&permuted).unwrap() - base).abs() < 1e-15);
    }

    #[test]
    fn bound_monotone_decreasing_in_dimension() {
        let b32 = coherence_bound(100, 32, 0.01).unwrap();
        let b64 = coherence_bound(100, 64, 0.01).unwrap();
        let b128 = coherence_bound(100, 128, 0.01).unwrap();
        assert!(b32 > b64 && b64 > b128);
    }

    #[test]
    fn bound_frozen_values() {
        // Computed with 40-digit arithmetic.
        let b = coherence_bound(100, 128, 0.01).unwrap();
        assert!((b - 1.3609652521488432).abs() < 1e-12);
        let b32 = coherence_bound(100, 32, 0.01).unwrap();
        assert!((b32 - 3.5853999141704535).abs() < 1e-12);
    }

    #[test]
    fn bound_dominant_term_scaling() {
        // With the second term negligible, doubling d_f scales by 1/sqrt(2).
        let b1 = coherence_bound(10, 1_000_000, 0.5).unwrap();
        let b2 = coherence_bound(10, 2_000_000, 0.5).unwrap();
        assert!((b2 / b1 - 1.0 / 2.0f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn bound_bad_epsilon() {
        assert_eq!(coherence_bound(10, 8, 0.0), Err(TheoryError::BadEpsilon));
        assert_eq!(coherence_bound(10, 8, 1.0), Err(TheoryError::BadEpsilon));
    }

    #[test]
    fn sha_report_tiling_fields() {
        let r = sha_coherence_report(100, 128, 10, 0.01).unwrap(); // d_f = 118
        assert_eq!(r.effective_dim, 32);
        assert!(r.mu_first_tile.is_some());
        let untiled = sha_coherence_report(100, 42, 10, 0.01).unwrap(); // d_f = 32
        assert_eq!(untiled.effective_dim, 32);
        assert!(untiled.mu_first_tile.is_none());
        assert!(untiled.pass);
    }

    #[test]
    fn gershgorin_orthonormal_batch() {
        let eye: Array2<f64> = Array2::eye(8);
        let r = gershgorin_check(&eye, &[0, 1, 2, 3]).unwrap();
        assert!(r.in_interval);
        assert!((r.lambda_min - 1.0).abs() < 1e-12);
        assert!((r.lambda_max - 1.0).abs() < 1e-12);
        assert_eq!(r.condition_number, Some(1.0));
        assert_eq!(r.mu, 0.0);
    }

    #[test]
    fn gershgorin_random_batches_always_inside() {
        let e = random_fixed_embedding(200, 48, 48, 7).unwrap();
        let mut rng = SplitMix64::new(1);
        for _ in 0..100 {
            let n = 2 + rng.gen_range(63);
            let batch: Vec<usize> = (0..n).map(|_| rng.gen_range(200)).collect();
            let r = gershgorin_check(&e, &batch).unwrap();
            assert!(
                r.in_interval,
                "eigenvalues {:?} escaped [{}, {}]",
                r.eigenvalues, r.interval_low, r.interval_high
            );
        }
    }

    #[test]
    fn gershgorin_batch_limits() {
        let e = random_fixed_embedding(100, 16, 16, 3).unwrap();
        let too_big: Vec<usize> = (0..65).collect();
        assert!(matches!(
            gershgorin_check(&e, &too_big),
            Err(TheoryError::BatchTooLarge(65))
        ));
        assert!(matches!(
            gershgorin_check(&e, &[0]),
            Err(TheoryError::DegenerateBatch(_))
        ));
    }

    fn inputs() -> BoundInputs {
        BoundInputs {
            n: 303,
            v: 41,
            d_t: 10,
            d_param: 1e5,
            b_t: 1.0,
            b_theta: 10.0,
            l_f: 1.0,
            l_loss: 1.0,
            delta: 0.05,
        }
    }

    #[test]
    fn rademacher_frozen_spot_value() {
        // 40-digit arithmetic: 19.146349220093255973.
        let r = rademacher_bound(&inputs()).unwrap();
        assert!((r - 19.146349220093256).abs() < 1e-12);
    }

    #[test]
    fn rademacher_quarter_n_halves() {
        let base = rademacher_bound(&inputs()).unwrap();
        let mut quad = inputs();
        quad.n = 303 * 4;
        let quartered = rademacher_bound(&quad).unwrap();
        assert!((quartered - base / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rademacher_zero_dt_reduces_first_radical() {
        let mut zero = inputs();
        zero.d_t = 0;
        let r = rademacher_bound(&zero).unwrap();
        let expected = (1.0 / (303.0f64).sqrt())
            * ((1e5f64).sqrt() + (41.0f64).sqrt() + 10.0);
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn generalization_frozen_and_compositional() {
        let g = generalization_bound(&inputs()).unwrap();
        assert!((g - 38.370719333704021).abs() < 1e-12);
        // Compositional: sum of the two audited sub-terms.
        let r = rademacher_bound(&inputs()).unwrap();
        let tail = ((2.0 / 0.05f64).ln() / (2.0 * 303.0)).sqrt();
        assert!((g - (2.0 * r + tail)).abs() < 1e-15);
    }

    #[test]
    fn generalization_delta_one_limit() {
        // delta -> 1 sends the additive term to sqrt(ln 2 / (2n)).
        let mut d1 = inputs();
        d1.delta = 1.0 - 1e-12;
        let g = generalization_bound(&d1).unwrap();
        let r = rademacher_bound(&d1).unwrap();
        let tail = (2.0f64.ln() / (2.0 * 303.0)).sqrt();
        assert!((g - 2.0 * r - tail).abs() < 1e-9);
    }

    #[test]
    fn generalization_monotone_in_n() {
        let g1 = generalization_bound(&inputs()).unwrap();
        let mut bigger = inputs();
        bigger.n = 1000;
        assert!(generalization_bound(&bigger).unwrap() < g1);
    }

    #[test]
    fn residual_zero_when_e_t_zero_and_e_f_orthonormal() {
        let e_t = Array2::zeros((4, 3));
        let e_f: Array2<f64> = Array2::eye(4);
        let r = residual_decomposition(&e_t, &e_f).unwrap();
        for &x in &r.residual_sq {
            assert!(x < 1e-20);
        }
        assert_eq!(r.rank, 4);
        assert!(!r.vacuous);
    }

    #[test]
    fn residual_is_e_t_norm_when_f_in_span() {
        // e_f rows span the full fixed space, so the fixed part of every
        // row projects exactly; residual is the trainable norm.
        let e_f: Array2<f64> = Array2::eye(3);
        let mut e_t = Array2::zeros((3, 2));
        e_t[(0, 0)] = 2.0;
        e_t[(1, 1)] = -1.5;
        let r = residual_decomposition(&e_t, &e_f).unwrap();
        assert!((r.residual_sq[0] - 4.0).abs() < 1e-12);
        assert!((r.residual_sq[1] - 2.25).abs() < 1e-12);
        assert!(r.residual_sq[2] < 1e-20);
    }

    #[test]
    fn residual_matches_least_squares_oracle() {
        // Normal-equations solve per row as an independent projection.
        let e_f = random_fixed_embedding(6, 4, 4, 3).unwrap();
        let e_t = random_fixed_embedding(6, 3, 3, 4).unwrap();
        let report = residual_decomposition(&e_t, &e_f).unwrap();
        // The span of 6 rows in R^4 is all of R^4 (full rank generically),
        // so fixed-block residuals vanish and residual = ||e_t row||^2.
        assert_eq!(report.rank, 4);
        for i in 0..6 {
            let t_sq: f64 = e_t.row(i).iter().map(|x| x * x).sum();
            assert!(
                (report.residual_sq[i] - t_sq).abs() < 1e-10,
                "row {i}: {} vs {t_sq}",
                report.residual_sq[i]
            );
        }
    }

    #[test]
    fn residual_rank_deficient_flags_vacuous() {
        // Two identical fixed rows in R^3: rank 1, lambda_min = 0.
        let mut e_f = Array2::zeros((2, 3));
        e_f[(0, 0)] = 1.0;
        e_f[(1, 0)] = 1.0;
        let e_t = Array2::zeros((2, 2));
        let r = residual_decomposition(&e_t, &e_f).unwrap();
        assert_eq!(r.rank, 1);
        assert!(r.vacuous);
    }

    #[test]
    fn residual_dimension_mismatch() {
        let e_t = Array2::zeros((3, 2));
        let e_f = Array2::zeros((4, 3));
        assert!(matches!(
            residual_decomposition(&e_t, &e_f),
            Err(TheoryError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn sha_tiling_preserves_coherence_for_whole_tiles() {
        // d_f = 128 is four whole digest tiles: inner products scale by 4,
        // norms by 2, so normalized values are identical.
        let full = sha_fixed_embedding(50, 138, 10).unwrap(); // d_f = 128
        let tile = sha_fixed_embedding(50, 42, 10).unwrap(); // d_f = 32
        let mu_full = coherence(&full).unwrap();
        let mu_tile = coherence(&tile).unwrap();
        assert!(
            (mu_full - mu_tile).abs() < 1e-12,
            "{mu_full} vs {mu_tile}"
        );
    }
}
