//! Linearization at the consensus origin and the spectral facts the lower
//! bound rests on: consensus is a fixed point, Jacobians compose, the line
//! matrix is doubly stochastic, and its subdominant eigenvalue sits within
//! `6/n^2` of one.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::rules::{Linearity, StepRule};
use crate::scalar::Real;
use crate::text::sig6;

pub const DEFAULT_PROBE_STEP: f64 = 1e-5;
pub const MAX_DENSE_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source<T> {
    Exact,
    /// Central differences with probe step `h`.
    Numerical { h: T },
}

/// The Jacobian `A = f'(0)` of a whole-vector update map.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationMatrix<T> {
    pub matrix: Matrix<T>,
    pub source: Source<T>,
}

impl<T: Real> LinearizationMatrix<T> {
    pub fn exact(matrix: Matrix<T>) -> Self {
        LinearizationMatrix {
            matrix,
            source: Source::Exact,
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    /// Largest `|a_ij|` with `|i - j| > 1`.
    pub fn off_tridiagonal(&self) -> T {
        let n = self.n();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) > 1 {
                    worst = worst.max(self.matrix[(i, j)].abs());
                }
            }
        }
        worst
    }
}

/// The exact matrix of a rule declared linear.
pub fn matrix_of<T: Real, R: StepRule<T> + ?Sized>(
    rule: &R,
    g: &Graph,
) -> Result<LinearizationMatrix<T>> {
    if rule.linearity() != Linearity::Linear {
        return Err(Error::Unsupported(format!(
            "rule `{}` is not declared linear",
            rule.name()
        )));
    }
    let m = rule.matrix(g).ok_or_else(|| {
        Error::Unsupported(format!("rule `{}` exposes no coefficients", rule.name()))
    })??;
    Ok(LinearizationMatrix::exact(m))
}

/// Central-difference Jacobian of `map` at `at`:
/// `J_ij = (f_i(at + h e_j) - f_i(at - h e_j)) / 2h`.
pub fn numerical_jacobian<T, F>(map: F, at: &[T], h: T) -> Result<LinearizationMatrix<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::arg(format!("probe step {h} must be positive")));
    }
    let n = at.len();
    let mut probe = at.to_vec();
    let two_h = h + h;
    let matrix = Matrix::from_columns(n, |j| {
        probe[j] = at[j] + h;
        let plus = map(&probe)?;
        probe[j] = at[j] - h;
        let minus = map(&probe)?;
        probe[j] = at[j];
        if plus.len() != n || minus.len() != n {
            return Err(Error::arg("map changed the state dimension"));
        }
        plus.iter()
            .zip(&minus)
            .enumerate()
            .map(|(i, (&p, &m))| {
                if p.is_finite() && m.is_finite() {
                    Ok((p - m) / two_h)
                } else {
                    Err(Error::numerical(
                        format!("non-finite output f_{} when probing coordinate {}", i + 1, j + 1),
                        Some(i + 1),
                    ))
                }
            })
            .collect()
    })?;
    Ok(LinearizationMatrix {
        matrix,
        source: Source::Numerical { h },
    })
}

/// `|| J(f^k)(0) - A^k ||_F` with `J` from central differences.
pub fn composed_jacobian_residual<T, F>(
    map: F,
    a: &LinearizationMatrix<T>,
    k: u32,
    h: T,
) -> Result<T>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    if k == 0 {
        return Err(Error::arg("composition power must be at least 1"));
    }
    let n = a.n();
    let composed = |x: &[T]| {
        let mut y = map(x)?;
        for _ in 1..k {
            y = map(&y)?;
        }
        Ok(y)
    };
    let j = numerical_jacobian(composed, &vec![T::zero(); n], h)?;
    let r = j.matrix.sub(&a.matrix.pow(k)).frobenius_norm();
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::numerical("non-finite composition residual", None))
    }
}

/// Whether `map(a 1) = a 1` to relative tolerance 1e-12 for each sample `a`.
pub fn consensus_fixed_point_check<T, F>(map: F, n: usize, samples: &[T]) -> Result<bool>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let tol = T::tol(1e-12);
    for &a in samples {
        let out = map(&vec![a; n])?;
        let scale = a.abs().max(T::one());
        let fixed = out.len() == n
            && out
                .iter()
                .all(|&v| v.is_finite() && (v - a).abs() <= tol * scale);
        if !fixed {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(|| A 1 - 1 ||_2, || 1^T A - 1^T ||_2)`.
pub fn stochasticity_check<T: Real>(a: &LinearizationMatrix<T>) -> (T, T) {
    let dev = |sums: Vec<T>| {
        sums.into_iter()
            .map(|s| (s - T::one()) * (s - T::one()))
            .sum::<T>()
            .sqrt()
    };
    (dev(a.matrix.row_sums()), dev(a.matrix.col_sums()))
}

/// Whether the off-diagonal sparsity pattern of `a` is a strongly connected
/// digraph (edge `i -> j` iff `a_ij != 0`).
pub fn is_irreducible<T: Real>(a: &LinearizationMatrix<T>) -> bool {
    let n = a.n();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let w = if forward { a.matrix[(u, v)] } else { a.matrix[(v, u)] };
                if v != u && !seen[v] && w != T::zero() {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n > 0 && reach(true) && reach(false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport<T> {
    /// Sorted by decreasing modulus, then decreasing real part.
    pub eigenvalues: Vec<Complex<T>>,
    /// Largest real eigenvalue in `(0, 1)`.
    pub lambda2: Option<T>,
    /// Unit eigenvector for `lambda2`.
    pub v: Option<Vec<T>>,
    /// `|v^T 1| / ||v||`.
    pub orthogonality_residual: Option<T>,
    /// `||A v - lambda2 v||`.
    pub eigen_residual: Option<T>,
    pub unit_row_residual: T,
    pub unit_col_residual: T,
    pub symmetric: bool,
}

impl<T: Real> SpectralReport<T> {
    pub fn spectral_radius(&self) -> T {
        self.eigenvalues.first().map_or(T::zero(), |z| z.norm())
    }

    /// Flat `key=value` lines; `interval_*` and `pass` refer to `(1 - 6/n^2, 1)`.
    pub fn to_text(&self, n: usize) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        let lo = interval_lower(n);
        kv("n", n.to_string());
        kv("spectral_radius", sig6(self.spectral_radius().as_f64()));
        kv(
            "lambda2",
            self.lambda2.map_or("none".into(), |l| sig6(l.as_f64())),
        );
        kv("interval_lo", sig6(lo));
        kv("interval_hi", "1".into());
        kv("interval", format!("({},1)", sig6(lo)));
        kv("pass", eigenvalue_interval_check(self, n).to_string());
        if let Some(r) = self.orthogonality_residual {
            kv("orthogonality_residual", format!("{:e}", r.as_f64()));
        }
        kv("row_residual", format!("{:e}", self.unit_row_residual.as_f64()));
        kv("col_residual", format!("{:e}", self.unit_col_residual.as_f64()));
        let head: Vec<String> = self
            .eigenvalues
            .iter()
            .take(8)
            .map(|z| {
                if z.im == T::zero() {
                    sig6(z.re.as_f64())
                } else {
                    format!("{}{:+}i", sig6(z.re.as_f64()), sig6(z.im.as_f64()))
                }
            })
            .collect();
        kv("eigenvalues_head", head.join(","));
        out
    }
}

fn interval_lower(n: usize) -> f64 {
    1.0 - 6.0 / (n * n) as f64
}

const IMAG_TOL: f64 = 1e-10;

/// Full spectrum of `a`, with the subdominant real eigenpair extracted.
///
/// Symmetric inputs use a symmetric eigensolver; others use a real Schur
/// decomposition followed by inverse iteration for the eigenvector.
/// Computation runs in f64.
pub fn eigen_decompose<T: Real>(a: &LinearizationMatrix<T>) -> Result<SpectralReport<T>> {
    let n = a.n();
    if n == 0 || !a.matrix.is_square() {
        return Err(Error::arg("eigen_decompose needs a non-empty square matrix"));
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::arg(format!(
            "dimension {n} exceeds dense solver budget {MAX_DENSE_DIM}"
        )));
    }
    let (unit_row_residual, unit_col_residual) = stochasticity_check(a);
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| a.matrix[(i, j)].as_f64());
    let scale = a.matrix.max_abs().max(T::one());
    let symmetric = a.matrix.asymmetry() <= T::tol(1e-12) * scale;
    let max_iter = 1000 * n;
    // the consensus eigenvalue can land a hair below one
    let top = 1.0 - T::tol(1e-10).as_f64();

    let (mut eigenvalues, lambda2, v) = if symmetric {
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, max_iter).ok_or_else(|| {
            Error::numerical(
                format!("symmetric eigensolver did not converge in {max_iter} iterations"),
                None,
            )
        })?;
        let values: Vec<Complex<f64>> =
            eig.eigenvalues.iter().map(|&l| Complex::new(l, 0.0)).collect();
        let lambda2 = eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|&l| l > 0.0 && l < top)
            .fold(None, |best: Option<f64>, l| Some(best.map_or(l, |b| b.max(l))));
        let v = lambda2.map(|l2| {
            let ones_dot = |k: usize| eig.eigenvectors.column(k).sum().abs();
            let k = (0..n)
                .filter(|&k| (eig.eigenvalues[k] - l2).abs() <= IMAG_TOL)
                .min_by(|&p, &q| ones_dot(p).total_cmp(&ones_dot(q)))
                .expect("lambda2 came from this spectrum");
            eig.eigenvectors.column(k).iter().copied().collect::<Vec<f64>>()
        });
        (values, lambda2, v)
    } else {
        let schur = m.clone().try_schur(f64::EPSILON, max_iter).ok_or_else(|| {
            Error::numerical(
                format!("Schur decomposition did not converge in {max_iter} iterations"),
                None,
            )
        })?;
        let values: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
        let lambda2 = values
            .iter()
            .filter(|z| z.im.abs() <= IMAG_TOL && z.re > 0.0 && z.re < top)
            .map(|z| z.re)
            .fold(None, |best: Option<f64>, l| Some(best.map_or(l, |b| b.max(l))));
        let v = match lambda2 {
            Some(l2) => Some(inverse_iteration(&m, l2)?),
            None => None,
        };
        (values, lambda2, v)
    };

    eigenvalues.sort_by(|p, q| {
        q.norm()
            .total_cmp(&p.norm())
            .then(q.re.total_cmp(&p.re))
            .then(q.im.total_cmp(&p.im))
    });
    let eigenvalues = eigenvalues
        .into_iter()
        .map(|z| Complex::new(T::lit(z.re), T::lit(z.im)))
        .collect();

    let mut report = SpectralReport {
        eigenvalues,
        lambda2: None,
        v: None,
        orthogonality_residual: None,
        eigen_residual: None,
        unit_row_residual,
        unit_col_residual,
        symmetric,
    };
    if let (Some(l2), Some(v)) = (lambda2, v) {
        let v = canonical_direction(v);
        let l2 = T::lit(l2);
        let v: Vec<T> = v.into_iter().map(T::lit).collect();
        let norm = v.iter().map(|&c| c * c).sum::<T>().sqrt();
        let av = a.matrix.mul_vec(&v);
        let residual = av
            .iter()
            .zip(&v)
            .map(|(&p, &q)| (p - l2 * q) * (p - l2 * q))
            .sum::<T>()
            .sqrt();
        if residual > T::tol(1e-8) * norm * scale {
            return Err(Error::numerical(
                format!("eigenpair residual {residual} above tolerance for lambda2 = {l2}"),
                None,
            ));
        }
        report.orthogonality_residual = Some(v.iter().copied().sum::<T>().abs() / norm);
        report.eigen_residual = Some(residual);
        report.lambda2 = Some(l2);
        report.v = Some(v);
    }
    Ok(report)
}

fn inverse_iteration(m: &DMatrix<f64>, lambda: f64) -> Result<Vec<f64>> {
    let n = m.nrows();
    let shift = lambda + 1e-10 * lambda.abs().max(1.0);
    let lu = (m - DMatrix::identity(n, n) * shift).lu();
    // deterministic start with no component along 1
    let mut v = DVector::from_fn(n, |i, _| (i as f64 + 1.0).sin());
    let mean = v.mean();
    v.add_scalar_mut(-mean);
    v.normalize_mut();
    for iter in 0..50 {
        let next = lu.solve(&v).ok_or_else(|| {
            Error::numerical(
                format!("inverse iteration hit a singular system at step {iter}"),
                Some(iter),
            )
        })?;
        v = next.normalize();
        if (m * &v - &v * lambda).norm() <= 1e-13 {
            break;
        }
    }
    Ok(v.iter().copied().collect())
}

/// Unit norm, first significant component positive.
fn canonical_direction(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let lead = v.iter().copied().find(|c| c.abs() > 1e-8 * norm).unwrap_or(1.0);
    let s = lead.signum() / norm;
    v.iter_mut().for_each(|c| *c *= s);
    v
}

/// `lambda2` exists, lies in `(1 - 6/n^2, 1)`, and its eigenvector is
/// orthogonal to `1` within 1e-8.
pub fn eigenvalue_interval_check<T: Real>(report: &SpectralReport<T>, n: usize) -> bool {
    if n < 3 {
        return false;
    }
    let lo = T::lit(interval_lower(n));
    match (report.lambda2, report.orthogonality_residual) {
        (Some(l), Some(orth)) => l > lo && l < T::one() && orth <= T::tol(1e-8),
        _ => false,
    }
}

/// `(n^2 / 30) ln(1/eps)`, natural log.
pub fn lower_bound_value<T: Real>(n: usize, epsilon: T) -> Result<T> {
    if n < 3 {
        return Err(Error::arg(format!(
            "lower bound holds for n >= 3, got n = {n}"
        )));
    }
    check_epsilon(epsilon)?;
    let n = T::from_usize_lossy(n);
    Ok(n * n / T::lit(30.0) * (T::one() / epsilon).ln())
}

pub(crate) fn check_epsilon<T: Real>(epsilon: T) -> Result<()> {
    if epsilon > T::zero() && epsilon < T::one() {
        Ok(())
    } else {
        Err(Error::arg(format!("epsilon {epsilon} outside (0, 1)")))
    }
}

/// First `k` with `lambda2^(2k) <= epsilon`.
pub fn spectral_predicted_time<T: Real>(lambda2: T, epsilon: T) -> Result<u64> {
    if !(lambda2 > T::zero() && lambda2 < T::one()) {
        return Err(Error::arg(format!("lambda2 {lambda2} outside (0, 1)")));
    }
    check_epsilon(epsilon)?;
    let decay = |k: u64| lambda2.powf(T::lit(2.0 * k as f64));
    let estimate = (epsilon.ln() / (T::lit(2.0) * lambda2.ln())).ceil();
    let mut k = estimate
        .to_u64()
        .ok_or_else(|| Error::numerical("predicted time overflows", None))?;
    while k > 0 && decay(k - 1) <= epsilon {
        k -= 1;
    }
    while decay(k) > epsilon {
        k += 1;
    }
    Ok(k)
}

/// Evidence that the variance never increases under a fixed linear map:
/// `A` symmetric, `A 1 = 1`, spectral radius at most one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCertificate<T> {
    pub spectral_radius: T,
    pub lambda2: Option<T>,
}

impl<T: Real> SpectralCertificate<T> {
    pub fn from_report(report: &SpectralReport<T>) -> Option<Self> {
        let tol = T::tol(1e-10);
        let radius = report.spectral_radius();
        (report.symmetric && report.unit_row_residual <= tol && radius <= T::one() + tol).then_some(
            SpectralCertificate {
                spectral_radius: radius,
                lambda2: report.lambda2,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{Metropolis, WeightPolicy};
    use approx::assert_relative_eq;

    fn metropolis_line(n: usize) -> LinearizationMatrix<f64> {
        let rule = Metropolis {
            policy: WeightPolicy::Boundary,
        };
        matrix_of(&rule, &Graph::line(n).unwrap()).unwrap()
    }

    #[test]
    fn lower_bound_arithmetic() {
        assert_relative_eq!(lower_bound_value(10, 0.01).unwrap(), 15.350567286626973, epsilon = 1e-9);
        assert_relative_eq!(lower_bound_value(3, 0.5).unwrap(), 0.20794415416798358, epsilon = 1e-12);
        assert!(lower_bound_value(3, 1.0 - 1e-12).unwrap() < 1e-11);
        assert!(lower_bound_value(2, 0.5).is_err());
        assert!(lower_bound_value(5, 1.5).is_err());
    }

    #[test]
    fn predicted_time_examples() {
        assert_eq!(spectral_predicted_time(2.0 / 3.0, 0.01).unwrap(), 6);
        assert_eq!(spectral_predicted_time(0.5, 0.25).unwrap(), 1);
        assert_eq!(spectral_predicted_time(2.0 / 3.0, 0.25).unwrap(), 2);
        assert!(spectral_predicted_time(1.0, 0.25).is_err());
        assert!(spectral_predicted_time(0.0, 0.25).is_err());
    }

    #[test]
    fn metropolis_line_three_spectrum() {
        let report = eigen_decompose(&metropolis_line(3)).unwrap();
        let values: Vec<f64> = report.eigenvalues.iter().map(|z| z.re).collect();
        assert_relative_eq!(values[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(values[1], 2.0 / 3.0, epsilon = 1e-12);
        assert!(values[2].abs() < 1e-12);
        assert_relative_eq!(report.lambda2.unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        let v = report.v.as_ref().unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (c, e) in v.iter().zip([r, 0.0, -r]) {
            assert_relative_eq!(*c, e, epsilon = 1e-12);
        }
        assert!(report.orthogonality_residual.unwrap() < 1e-12);
        assert!(eigenvalue_interval_check(&report, 3));
    }

    #[test]
    fn identity_has_no_subdominant_eigenvalue() {
        let report = eigen_decompose(&LinearizationMatrix::exact(Matrix::<f64>::identity(4))).unwrap();
        assert!(report.eigenvalues.iter().all(|z| z.re == 1.0 && z.im == 0.0));
        assert_eq!(report.lambda2, None);
        assert!(!eigenvalue_interval_check(&report, 4));
    }

    #[test]
    fn complete_graph_projection() {
        let a = Matrix::from_rows(&vec![vec![1.0 / 3.0; 3]; 3]).unwrap();
        let report = eigen_decompose(&LinearizationMatrix::exact(a)).unwrap();
        assert_relative_eq!(report.eigenvalues[0].re, 1.0, epsilon = 1e-12);
        assert!(report.eigenvalues[1].norm() < 1e-12 && report.eigenvalues[2].norm() < 1e-12);
        assert_eq!(report.lambda2, None);
    }

    #[test]
    fn nonsymmetric_path_uses_inverse_iteration() {
        // column-stochastic, not symmetric; eigenvalues 1 and 0.4
        let a = Matrix::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.6, 0.2], vec![0.4, 0.8]]).unwrap();
        let report = eigen_decompose(&LinearizationMatrix::exact(b.clone())).unwrap();
        assert!(!report.symmetric);
        assert_relative_eq!(report.lambda2.unwrap(), 0.4, epsilon = 1e-12);
        assert!(report.eigen_residual.unwrap() < 1e-12);
        assert!(report.orthogonality_residual.unwrap() < 1e-12);
        assert!(eigen_decompose(&LinearizationMatrix::exact(a)).unwrap().symmetric);
    }

    #[test]
    fn stochasticity_residuals() {
        let (r, c) = stochasticity_check(&metropolis_line(3));
        assert!(r < 1e-15 && c < 1e-15);
        assert_eq!(stochasticity_check(&LinearizationMatrix::exact(Matrix::<f64>::identity(3))), (0.0, 0.0));
        let bad = Matrix::from_rows(&[vec![0.5, 0.4], vec![0.5, 0.5]]).unwrap();
        let (r, _) = stochasticity_check(&LinearizationMatrix::exact(bad));
        assert!(r > 0.0);
    }

    #[test]
    fn fixed_point_detection() {
        let shift = |x: &[f64]| Ok(x.iter().map(|v| v + 1.0).collect());
        assert!(!consensus_fixed_point_check(shift, 3, &[0.0]).unwrap());
        let id = |x: &[f64]| Ok(x.to_vec());
        assert!(consensus_fixed_point_check(id, 3, &[-10.0, 0.0, 3.5]).unwrap());
    }

    #[test]
    fn jacobian_of_quadratic_perturbation_is_identity() {
        let quad = |x: &[f64]| Ok(x.iter().map(|v| v + v * v).collect());
        let j = numerical_jacobian(quad, &[0.0; 4], 1e-5).unwrap();
        for i in 0..4 {
            for k in 0..4 {
                if i == k {
                    assert_relative_eq!(j.matrix[(i, k)], 1.0, epsilon = 1e-10);
                } else {
                    assert_eq!(j.matrix[(i, k)], 0.0);
                }
            }
        }
        let id = LinearizationMatrix::exact(Matrix::identity(4));
        assert!(composed_jacobian_residual(quad, &id, 2, 1e-4).unwrap() <= 1e-6);
    }

    #[test]
    fn jacobian_errors() {
        let blowup = |x: &[f64]| Ok(x.iter().map(|v| 1.0 / v).collect());
        let err = numerical_jacobian(blowup, &[1.0, 1e-5], 1e-5).unwrap_err();
        assert!(matches!(err, Error::Numerical { index: Some(2), .. }));
        assert!(numerical_jacobian(|x: &[f64]| Ok(x.to_vec()), &[0.0], 0.0).is_err());
    }

    #[test]
    fn irreducibility_of_line_pattern() {
        assert!(is_irreducible(&metropolis_line(6)));
        assert!(!is_irreducible(&LinearizationMatrix::exact(Matrix::<f64>::identity(3))));
    }

    #[test]
    fn report_text_keys() {
        let text = eigen_decompose(&metropolis_line(3)).unwrap().to_text(3);
        assert!(text.contains("lambda2=0.666667\n"));
        assert!(text.contains("interval=(0.333333,1)\n"));
        assert!(text.contains("interval_lo=0.333333\n"));
        assert!(text.contains("pass=true\n"));
    }
}
