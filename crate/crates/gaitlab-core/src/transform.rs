use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sample::{GaitSample, LabeledDataset, Modality};
use crate::template::{GaitTemplate, TemplateData};

/// Condition-number cap above which feature-space total scatter is
/// regularized before inversion.
const CONDITION_CAP: f64 = 1e12;
/// Relative ridge added to the diagonal when regularization triggers.
const RIDGE_EPSILON: f64 = 1e-9;
/// Eigenvalue threshold of Algorithm 1's selection rule.
const SELECTION_THRESHOLD: f64 = 0.5;

/// Which learning algorithm produced a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnedMethod {
    Mmc,
    PcaLda,
}

impl LearnedMethod {
    pub fn code(&self) -> &'static str {
        match self {
            LearnedMethod::Mmc => "mmc",
            LearnedMethod::PcaLda => "pcalda",
        }
    }

    pub fn parse(code: &str) -> Option<LearnedMethod> {
        match code.to_ascii_lowercase().as_str() {
            "mmc" => Some(LearnedMethod::Mmc),
            "pcalda" | "pca+lda" => Some(LearnedMethod::PcaLda),
            _ => None,
        }
    }
}

/// Dataset statistics a transform was learned on.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedOn {
    pub classes: usize,
    pub samples: usize,
    pub modality: Modality,
    pub frames: usize,
}

/// A learned linear feature transform: the projection, the inverse of the
/// feature-space total scatter (for Mahalanobis comparison of templates),
/// and eigenvalue diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTransform {
    projection: DMatrix<f64>,
    inverse_total: DMatrix<f64>,
    method: LearnedMethod,
    eigenvalues: Vec<f64>,
    learned_on: LearnedOn,
}

impl FeatureTransform {
    pub fn from_parts(
        projection: DMatrix<f64>,
        inverse_total: DMatrix<f64>,
        method: LearnedMethod,
        eigenvalues: Vec<f64>,
        learned_on: LearnedOn,
    ) -> Result<Self> {
        if projection.ncols() == 0 {
            return Err(Error::InvalidArgument("transform has no columns".into()));
        }
        if inverse_total.nrows() != projection.ncols()
            || inverse_total.ncols() != projection.ncols()
        {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", projection.ncols()),
                actual: format!("{}x{}", inverse_total.nrows(), inverse_total.ncols()),
                context: "feature transform inverse total scatter",
            });
        }
        Ok(FeatureTransform {
            projection,
            inverse_total,
            method,
            eigenvalues,
            learned_on,
        })
    }

    /// Projection matrix, sample-space dimension by feature dimension.
    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    /// Inverse of the feature-space total scatter.
    pub fn inverse_total(&self) -> &DMatrix<f64> {
        &self.inverse_total
    }

    pub fn input_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.projection.ncols()
    }

    pub fn method(&self) -> LearnedMethod {
        self.method
    }

    /// Eigenvalue diagnostics: the diagonal of the simultaneous
    /// diagonalization (MMC) or the generalized LDA eigenvalues, in
    /// descending order, including values that were not selected.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn learned_on(&self) -> &LearnedOn {
        &self.learned_on
    }
}

struct CenteredFactors {
    /// Columns (g_n - mu) / sqrt(N).
    samples_uniform: DMatrix<f64>,
    /// Columns (g_n - mu) / sqrt(N_c(n)).
    samples_classweighted: DMatrix<f64>,
    /// Columns (g_n - mu_c(n)) / sqrt(N_c(n)).
    within_classweighted: DMatrix<f64>,
    /// Columns (mu_c - mu).
    class_mean_deviations: DMatrix<f64>,
}

fn centered_factors(dataset: &LabeledDataset) -> CenteredFactors {
    let d = dataset.dimension();
    let n = dataset.len();
    let c = dataset.class_count();
    let data = dataset.data_matrix();

    let mut mean = DVector::zeros(d);
    for col in 0..n {
        mean += data.column(col);
    }
    mean /= n as f64;

    let mut class_mean_deviations = DMatrix::zeros(d, c);
    for (ci, class) in dataset.classes().iter().enumerate() {
        let mut m = DVector::zeros(d);
        for &s in class.indices() {
            m += data.column(s);
        }
        m /= class.len() as f64;
        class_mean_deviations.set_column(ci, &(m - &mean));
    }

    let inv_sqrt_n = 1.0 / libm::sqrt(n as f64);
    let mut samples_uniform = DMatrix::zeros(d, n);
    let mut samples_classweighted = DMatrix::zeros(d, n);
    let mut within_classweighted = DMatrix::zeros(d, n);
    for (ci, class) in dataset.classes().iter().enumerate() {
        let w = 1.0 / libm::sqrt(class.len() as f64);
        for &s in class.indices() {
            let centered = data.column(s) - &mean;
            samples_uniform.set_column(s, &(&centered * inv_sqrt_n));
            samples_classweighted.set_column(s, &(&centered * w));
            within_classweighted.set_column(
                s,
                &((&centered - class_mean_deviations.column(ci)) * w),
            );
        }
    }

    CenteredFactors {
        samples_uniform,
        samples_classweighted,
        within_classweighted,
        class_mean_deviations,
    }
}

fn default_rank_tolerance(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// One-sided Jacobi SVD of a square matrix: left singular vectors and
/// singular values in descending order. Columns are rotated until
/// mutually orthogonal; the converged columns are `u_i * sigma_i`.
fn jacobi_left_svd(mut a: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.ncols();
    const MAX_SWEEPS: usize = 60;
    const ORTHO_TOLERANCE: f64 = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let col_p = a.column(p);
                let col_q = a.column(q);
                let alpha = col_p.dot(&col_p);
                let beta = col_q.dot(&col_q);
                let gamma = col_p.dot(&col_q);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= ORTHO_TOLERANCE * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for r in 0..a.nrows() {
                    let vp = a[(r, p)];
                    let vq = a[(r, q)];
                    a[(r, p)] = c * vp - s * vq;
                    a[(r, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut norms: Vec<(usize, f64)> = (0..n).map(|j| (j, a.column(j).norm())).collect();
    norms.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut u = DMatrix::zeros(a.nrows(), n);
    let mut sigma = DVector::zeros(n);
    for (k, &(j, norm)) in norms.iter().enumerate() {
        sigma[k] = norm;
        if norm > 0.0 {
            u.set_column(k, &(a.column(j) / norm));
        }
    }
    (u, sigma)
}

/// Thin SVD returning the left singular vectors and singular values in
/// descending order.
///
/// The matrix is reduced to its square triangular factor by a Householder
/// QR and that factor is decomposed by one-sided Jacobi rotations, which
/// keep singular vectors accurate even for clustered spectra.
pub(crate) fn thin_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let (rows, cols) = m.shape();
    if rows >= cols {
        let qr = m.clone().qr();
        let q = qr.q();
        let (u_r, sigma) = jacobi_left_svd(qr.r());
        (q * u_r, sigma)
    } else {
        // Left vectors of a wide matrix are the right vectors of its
        // transpose, which survive the QR reduction unchanged.
        let qr = m.transpose().qr();
        jacobi_left_svd(qr.r().transpose())
    }
}

/// Flips each column so its largest-magnitude entry is positive.
fn normalize_signs(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for r in 0..m.nrows() {
            let a = m[(r, c)].abs();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if m[(best, c)] < 0.0 {
            m.column_mut(c).neg_mut();
        }
    }
}

/// Inverts a symmetric positive semidefinite Gram matrix, adding a small
/// ridge to the diagonal only when the condition number exceeds the cap.
fn regularized_inverse(gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    let sym = (gram + gram.transpose()) * 0.5;
    let eigen = sym.clone().symmetric_eigen();
    let max = eigen.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        return Err(Error::Singular {
            condition: f64::INFINITY,
            advice: "feature-space total scatter vanished",
        });
    }
    let condition = if min <= 0.0 { f64::INFINITY } else { max / min };
    let target = if condition > CONDITION_CAP {
        let ridge = RIDGE_EPSILON * sym.trace() / n as f64;
        &sym + DMatrix::from_diagonal_element(n, n, ridge)
    } else {
        sym
    };
    let chol = target.cholesky().ok_or(Error::Singular {
        condition,
        advice: "feature-space total scatter is not invertible",
    })?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Learns the maximum-margin transform by the two-step SVD procedure.
///
/// The centered sample factor is decomposed to whiten the total scatter,
/// the whitened class-mean factor is decomposed to diagonalize the between
/// scatter, and the directions whose diagonal entries reach 1/2 are kept.
/// Singular values below `rank_tolerance * sigma_max` (default
/// `max(D, N) * machine epsilon`) are treated as zero.
pub fn learn_mmc(
    dataset: &LabeledDataset,
    rank_tolerance: Option<f64>,
) -> Result<FeatureTransform> {
    let c = dataset.class_count();
    let n = dataset.len();
    if c < 2 {
        return Err(Error::InvalidArgument(format!(
            "MMC needs at least 2 learning classes, got {c}"
        )));
    }
    if n < c + 1 {
        return Err(Error::InvalidArgument(format!(
            "MMC needs at least C+1 = {} samples, got {n}",
            c + 1
        )));
    }

    let factors = centered_factors(dataset);
    let x_tilde = factors.samples_uniform;
    let upsilon = factors.class_mean_deviations;
    let d = x_tilde.nrows();

    let (u, singular_values) = thin_svd(&x_tilde);
    let sigma_max = singular_values.max();
    let cutoff = rank_tolerance.unwrap_or_else(|| default_rank_tolerance(d, n)) * sigma_max;
    let rank = singular_values
        .iter()
        .take_while(|&&s| s > cutoff)
        .count();
    if rank == 0 {
        return Err(Error::EmptyTransform { largest_delta: 0.0 });
    }

    // Whitened class-mean factor: diag(1/s) * Omega^T * Upsilon.
    let mut k = u.columns(0, rank).transpose() * &upsilon;
    for r in 0..rank {
        let inv_s = 1.0 / singular_values[r];
        k.row_mut(r).scale_mut(inv_s);
    }

    let (xi, k_singular_values) = thin_svd(&k);
    let deltas: Vec<f64> = k_singular_values.iter().map(|s| s * s).collect();

    let kept = deltas.iter().take_while(|&&d| d >= SELECTION_THRESHOLD).count();
    if kept == 0 {
        return Err(Error::EmptyTransform {
            largest_delta: deltas.first().copied().unwrap_or(0.0),
        });
    }

    // Psi = Omega * diag(1/s) * Xi, restricted to the kept columns.
    let mut omega_scaled = u.columns(0, rank).into_owned();
    for r in 0..rank {
        let inv_s = 1.0 / singular_values[r];
        omega_scaled.column_mut(r).scale_mut(inv_s);
    }
    let mut projection = &omega_scaled * xi.columns(0, kept);
    normalize_signs(&mut projection);

    // Feature-space total scatter (Algorithm-1 form) and its inverse.
    let projected = x_tilde.transpose() * &projection;
    let gram = projected.transpose() * &projected;
    let inverse_total = regularized_inverse(&gram)?;

    FeatureTransform::from_parts(
        projection,
        inverse_total,
        LearnedMethod::Mmc,
        deltas,
        LearnedOn {
            classes: c,
            samples: n,
            modality: dataset.modality(),
            frames: dataset.frames(),
        },
    )
}

/// Learns the two-stage PCA+LDA transform.
///
/// PCA keeps the `pca_dims` (default `C`) leading eigenvectors of the
/// total scatter; LDA solves the generalized eigenproblem of the projected
/// between and within scatter through a Cholesky factorization and keeps
/// at most `C - 1` directions with eigenvalues above the rank tolerance.
pub fn learn_pcalda(
    dataset: &LabeledDataset,
    pca_dims: Option<usize>,
) -> Result<FeatureTransform> {
    let c = dataset.class_count();
    let n = dataset.len();
    if c < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA+LDA needs at least 2 learning classes, got {c}"
        )));
    }
    let requested = pca_dims.unwrap_or(c);
    if requested < c || requested + c > n {
        return Err(Error::InvalidArgument(format!(
            "PCA dimensionality must satisfy C <= D <= N - C, got D = {requested} with C = {c}, N = {n}"
        )));
    }

    let factors = centered_factors(dataset);
    let d = dataset.dimension();
    let y = factors.samples_classweighted;
    let z = factors.within_classweighted;
    let upsilon = factors.class_mean_deviations;

    let (u, _) = thin_svd(&y);
    let dims = requested.min(d).min(n);
    let phi_pca = u.columns(0, dims).into_owned();

    // Projected within and between scatter.
    let zp = z.transpose() * &phi_pca;
    let w = zp.transpose() * &zp;
    let bp = upsilon.transpose() * &phi_pca;
    let b = bp.transpose() * &bp;

    let w_eigen = ((&w + w.transpose()) * 0.5).symmetric_eigen();
    let w_max = w_eigen.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w_min = w_eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if w_min <= 0.0 { f64::INFINITY } else { w_max / w_min };
    if w_max.is_nan() || w_max <= 0.0 || condition > CONDITION_CAP {
        return Err(Error::Singular {
            condition,
            advice: "projected within-class scatter is singular; use more learning samples or fewer PCA dimensions",
        });
    }
    let chol = ((&w + w.transpose()) * 0.5).cholesky().ok_or(Error::Singular {
        condition,
        advice: "projected within-class scatter is singular; use more learning samples or fewer PCA dimensions",
    })?;
    let l = chol.l();

    // M = L^-1 B L^-T, symmetric; its eigenvalues are the generalized ones.
    let t1 = l
        .solve_lower_triangular(&b)
        .ok_or(Error::Singular {
            condition,
            advice: "Cholesky factor is singular",
        })?;
    let m = l
        .solve_lower_triangular(&t1.transpose())
        .ok_or(Error::Singular {
            condition,
            advice: "Cholesky factor is singular",
        })?;
    let m = (&m + m.transpose()) * 0.5;
    let eigen = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..dims).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .total_cmp(&eigen.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let lambda_max = eigen.eigenvalues[order[0]].max(0.0);
    let cutoff = default_rank_tolerance(dims, dims) * lambda_max;
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let keep = order
        .iter()
        .take_while(|&&i| eigen.eigenvalues[i] > cutoff)
        .count()
        .min(c - 1);
    if keep == 0 {
        return Err(Error::EmptyTransform {
            largest_delta: lambda_max,
        });
    }

    let mut u_kept = DMatrix::zeros(dims, keep);
    for (k, &i) in order.iter().take(keep).enumerate() {
        u_kept.set_column(k, &eigen.eigenvectors.column(i));
    }
    let phi_lda = l
        .transpose()
        .solve_upper_triangular(&u_kept)
        .ok_or(Error::Singular {
            condition,
            advice: "Cholesky factor is singular",
        })?;

    let mut projection = &phi_pca * &phi_lda;
    normalize_signs(&mut projection);

    let projected = y.transpose() * &projection;
    let gram = projected.transpose() * &projected;
    let inverse_total = regularized_inverse(&gram)?;

    FeatureTransform::from_parts(
        projection,
        inverse_total,
        LearnedMethod::PcaLda,
        eigenvalues,
        LearnedOn {
            classes: c,
            samples: n,
            modality: dataset.modality(),
            frames: dataset.frames(),
        },
    )
}

/// Maximum-margin objective `tr(Phi^T (Sigma_b - Sigma_w) Phi)`.
pub fn mmc_objective(
    phi: &DMatrix<f64>,
    sigma_b: &DMatrix<f64>,
    sigma_w: &DMatrix<f64>,
) -> Result<f64> {
    let d = phi.nrows();
    if sigma_b.nrows() != d || sigma_b.ncols() != d || sigma_w.nrows() != d || sigma_w.ncols() != d
    {
        return Err(Error::ShapeMismatch {
            expected: format!("{d}x{d} scatter matrices"),
            actual: format!(
                "{}x{} and {}x{}",
                sigma_b.nrows(),
                sigma_b.ncols(),
                sigma_w.nrows(),
                sigma_w.ncols()
            ),
            context: "mmc_objective",
        });
    }
    let diff = sigma_b - sigma_w;
    let mut total = 0.0;
    for c in 0..phi.ncols() {
        let col = phi.column(c);
        total += (&diff * col).dot(&col);
    }
    Ok(total)
}

/// Projects a gait sample into the transform's feature space.
pub fn project(transform: &FeatureTransform, sample: &GaitSample) -> Result<GaitTemplate> {
    let flat = sample.flatten();
    if flat.len() != transform.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}-dimensional sample", transform.input_dim()),
            actual: format!("{}-dimensional sample", flat.len()),
            context: "project",
        });
    }
    let features = transform.projection.transpose() * flat;
    Ok(GaitTemplate {
        data: TemplateData::Vector(features),
        label: Some(String::from(sample.subject())),
        sequence: Some(String::from(sample.sequence())),
    })
}
