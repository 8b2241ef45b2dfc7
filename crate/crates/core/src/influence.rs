//! Influence functions for least-squares regression and softmax
//! classification, and the ratio bound comparing the two.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    condition_number_spd, kron, kron_vec, norm2, softmax, solve, sym_eigen, Matrix, Rng,
};
use crate::prob::ProbVector;

/// Largest d·K accepted by the dense solvers here.
pub const MAX_SYSTEM: usize = 2048;

/// Diagonal shift used when a caller opts into regularized solves.
pub const OPT_IN_RIDGE: f64 = 1e-10;

/// Smallest eigenvalue accepted for a positive-definite covariance.
pub const MIN_EIGEN: f64 = 1e-10;

/// Diagonal loading applied to softmax covariances by [`random_instance`].
pub const DEFAULT_P_RIDGE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Added to the diagonal before solving; `None` fails on singularity.
    pub ridge: Option<f64>,
}

impl SolveOptions {
    pub fn regularized() -> Self {
        Self {
            ridge: Some(OPT_IN_RIDGE),
        }
    }
}

fn solve_with(a: &Matrix, b: &[f64], opts: SolveOptions) -> Result<Vec<f64>> {
    match opts.ridge {
        Some(r) => solve(&a.add_identity(r)?, b),
        None => solve(a, b),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    pub x: Vec<f64>,
    pub y: f64,
    pub theta: Vec<f64>,
    pub sigma_x: Matrix,
}

impl RegressionInstance {
    pub fn new(x: Vec<f64>, y: f64, theta: Vec<f64>, sigma_x: Matrix) -> Result<Self> {
        let d = x.len();
        if d == 0 || theta.len() != d || sigma_x.shape() != (d, d) {
            return Err(Error::InvalidDimension(format!(
                "x has {d} entries, theta {}, covariance {:?}",
                theta.len(),
                sigma_x.shape()
            )));
        }
        Ok(Self {
            x,
            y,
            theta,
            sigma_x,
        })
    }

    /// `y − xᵀθ`
    pub fn residual(&self) -> f64 {
        self.y - crate::numerics::dot(&self.x, &self.theta)
    }
}

/// `(1/n) Σ xᵢxᵢᵀ`; requires more samples than features.
pub fn empirical_covariance(xs: &[Vec<f64>]) -> Result<Matrix> {
    let d = xs.first().map(Vec::len).unwrap_or(0);
    if d == 0 || xs.iter().any(|x| x.len() != d) {
        return Err(Error::InvalidDimension("ragged or empty sample set".into()));
    }
    if xs.len() <= d {
        return Err(Error::InsufficientData(format!(
            "{} samples for {d} features; need n > d",
            xs.len()
        )));
    }
    let mut s = Matrix::zeros(d, d);
    for x in xs {
        for i in 0..d {
            for j in 0..d {
                s[(i, j)] += x[i] * x[j];
            }
        }
    }
    Ok(s.scale(1.0 / xs.len() as f64))
}

/// `diag(σ) − σσᵀ`
pub fn softmax_covariance(sigma: &ProbVector) -> Matrix {
    let s = sigma.as_slice();
    let mut p = Matrix::outer(s, s).scale(-1.0);
    for (k, &sk) in s.iter().enumerate() {
        p[(k, k)] += sk;
    }
    p
}

/// `softmax(βᵀx)` for β of shape d×K.
pub fn class_probs(x: &[f64], beta: &Matrix) -> Result<ProbVector> {
    if beta.rows() != x.len() {
        return Err(Error::InvalidDimension(format!(
            "beta has {} rows for {} features",
            beta.rows(),
            x.len()
        )));
    }
    softmax(&beta.transpose().matvec(x)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationInstance {
    pub x: Vec<f64>,
    /// 0-based class label.
    pub y: usize,
    /// d×K
    pub beta: Matrix,
    pub sigma: ProbVector,
    pub p_matrix: Matrix,
    /// (dK)×(dK), indexed consistently with row-major vec(β).
    pub expected_hessian: Matrix,
}

impl ClassificationInstance {
    /// Derives σ and P from `x` and `beta`.
    pub fn new(x: Vec<f64>, y: usize, beta: Matrix, expected_hessian: Matrix) -> Result<Self> {
        let (d, k) = beta.shape();
        if x.len() != d || d == 0 || k < 2 {
            return Err(Error::InvalidDimension(format!(
                "x has {} entries for beta {d}x{k}",
                x.len()
            )));
        }
        if d * k > MAX_SYSTEM {
            return Err(Error::InvalidDimension(format!(
                "d·K = {} exceeds {MAX_SYSTEM}",
                d * k
            )));
        }
        if y >= k {
            return Err(Error::InvalidParameter(format!(
                "label {y} out of range for K={k}"
            )));
        }
        if expected_hessian.shape() != (d * k, d * k) {
            return Err(Error::InvalidDimension(format!(
                "expected Hessian {:?}, need {}x{}",
                expected_hessian.shape(),
                d * k,
                d * k
            )));
        }
        let sigma = class_probs(&x, &beta)?;
        let p_matrix = softmax_covariance(&sigma);
        Ok(Self {
            x,
            y,
            beta,
            sigma,
            p_matrix,
            expected_hessian,
        })
    }

    pub fn k(&self) -> usize {
        self.beta.cols()
    }

    /// `σ − e_y`
    pub fn prob_error(&self) -> Vec<f64> {
        let mut g = self.sigma.as_slice().to_vec();
        g[self.y] -= 1.0;
        g
    }

    /// `−log σ_y`
    pub fn loss(&self) -> f64 {
        -self.sigma[self.y].ln()
    }
}

/// `Σ_X⁻¹ x (y − xᵀθ)`, via a linear solve.
pub fn if_mse(inst: &RegressionInstance, opts: SolveOptions) -> Result<Vec<f64>> {
    let r = inst.residual();
    let rhs: Vec<f64> = inst.x.iter().map(|xi| xi * r).collect();
    solve_with(&inst.sigma_x, &rhs, opts)
}

/// `x (σ − e_y)ᵀ`, d×K.
pub fn softmax_grad(inst: &ClassificationInstance) -> Matrix {
    Matrix::outer(&inst.x, &inst.prob_error())
}

/// `xxᵀ ⊗ P`
pub fn ce_hessian_single(inst: &ClassificationInstance) -> Matrix {
    kron(&Matrix::outer(&inst.x, &inst.x), &inst.p_matrix)
}

/// `(1/n) Σ xᵢxᵢᵀ ⊗ P(xᵢ)` with P evaluated at each sample.
pub fn empirical_ce_hessian(xs: &[Vec<f64>], beta: &Matrix) -> Result<Matrix> {
    let (d, k) = beta.shape();
    if xs.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    if d * k > MAX_SYSTEM {
        return Err(Error::InvalidDimension(format!(
            "d·K = {} exceeds {MAX_SYSTEM}",
            d * k
        )));
    }
    let mut h = Matrix::zeros(d * k, d * k);
    for x in xs {
        let p = softmax_covariance(&class_probs(x, beta)?);
        let term = kron(&Matrix::outer(x, x), &p);
        for (a, b) in h.data_mut().iter_mut().zip(term.data()) {
            *a += b;
        }
    }
    Ok(h.scale(1.0 / xs.len() as f64))
}

/// `−H⁻¹ (x ⊗ (σ − e_y))` with H the instance's expected Hessian.
pub fn if_ce(inst: &ClassificationInstance, opts: SolveOptions) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = kron_vec(&inst.x, &inst.prob_error())
        .into_iter()
        .map(|v| -v)
        .collect();
    solve_with(&inst.expected_hessian, &rhs, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub if_mse: Vec<f64>,
    pub if_ce: Vec<f64>,
    pub ratio: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub kappa2: f64,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    /// `|y − xᵀθ|`
    pub residual: f64,
    /// `‖σ − e_y‖₂`
    pub prob_error_norm: f64,
}

impl InfluenceReport {
    pub fn holds(&self) -> bool {
        let slack = 1e-10 * self.ratio.abs().max(f64::MIN_POSITIVE);
        self.lower_bound <= self.ratio + slack && self.ratio <= self.upper_bound + slack
    }
}

/// Influence ratio `‖IF_CE‖/‖IF_MSE‖` and its two-sided bound, with the
/// classification Hessian factored as `Σ_X ⊗ p_expected`. Both instances
/// must share the feature vector. Returns `Invariant` if the computed ratio
/// leaves the bounds.
pub fn influence_bounds(
    reg: &RegressionInstance,
    cls: &ClassificationInstance,
    p_expected: &Matrix,
) -> Result<InfluenceReport> {
    let d = reg.x.len();
    let k = cls.k();
    if cls.x.len() != d {
        return Err(Error::InvalidDimension(format!(
            "regression has {d} features, classification {}",
            cls.x.len()
        )));
    }
    if p_expected.shape() != (k, k) {
        return Err(Error::InvalidDimension(format!(
            "P is {:?}, need {k}x{k}",
            p_expected.shape()
        )));
    }
    if reg.x.iter().zip(&cls.x).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Precondition(
            "shared feature vector: x differs between instances".into(),
        ));
    }
    let sx = sym_eigen(&reg.sigma_x)?;
    if !(sx.min() > MIN_EIGEN) {
        return Err(Error::Precondition(format!(
            "Σ_X positive definite: λ_min = {:e}",
            sx.min()
        )));
    }
    let pe = sym_eigen(p_expected)?;
    if !(pe.min() > MIN_EIGEN) {
        return Err(Error::Precondition(format!(
            "P positive definite: λ_min = {:e}",
            pe.min()
        )));
    }
    let r = reg.residual();
    if r == 0.0 {
        return Err(Error::Precondition("non-zero residual: y = xᵀθ".into()));
    }
    let g_norm = norm2(&cls.prob_error());
    if g_norm == 0.0 {
        return Err(Error::Precondition(
            "non-degenerate prediction: σ = e_y".into(),
        ));
    }
    if norm2(&reg.x) == 0.0 {
        return Err(Error::Precondition("non-zero feature vector".into()));
    }

    let imse = if_mse(reg, SolveOptions::default())?;
    let separable = ClassificationInstance {
        expected_hessian: kron(&reg.sigma_x, p_expected),
        ..cls.clone()
    };
    let ice = if_ce(&separable, SolveOptions::default())?;
    let kappa2 = condition_number_spd(&reg.sigma_x)?;
    let report = InfluenceReport {
        ratio: norm2(&ice) / norm2(&imse),
        lower_bound: g_norm / (kappa2 * pe.max() * r.abs()),
        upper_bound: SQRT_2 * kappa2 / (pe.min() * r.abs()),
        if_mse: imse,
        if_ce: ice,
        kappa2,
        lambda_min_p: pe.min(),
        lambda_max_p: pe.max(),
        residual: r.abs(),
        prob_error_norm: g_norm,
    };
    if !report.holds() {
        return Err(Error::Invariant(format!(
            "ratio {} outside [{}, {}] (κ₂={}, λ_min={}, λ_max={}, |r|={})",
            report.ratio,
            report.lower_bound,
            report.upper_bound,
            report.kappa2,
            report.lambda_min_p,
            report.lambda_max_p,
            report.residual
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    pub kappa2: f64,
    pub lambda_min_p: f64,
    pub residual: f64,
    /// Whether `κ₂ ≤ λ_min(P)|r|/√2`, which guarantees a ratio ≤ 1.
    pub holds: bool,
    pub upper_bound: f64,
}

pub fn stability_cell(kappa2: f64, lambda_min_p: f64, residual: f64) -> Result<StabilityCell> {
    if !(kappa2 > 0.0 && lambda_min_p > 0.0 && residual != 0.0) || !residual.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "stability grid needs positive values (κ₂={kappa2}, λ_min={lambda_min_p}, r={residual})"
        )));
    }
    let r = residual.abs();
    Ok(StabilityCell {
        kappa2,
        lambda_min_p,
        residual: r,
        holds: kappa2 <= lambda_min_p * r / SQRT_2,
        upper_bound: SQRT_2 * kappa2 / (lambda_min_p * r),
    })
}

/// Evaluates every combination of the three axes.
pub fn stability_region(
    kappas: &[f64],
    lambda_mins: &[f64],
    residuals: &[f64],
) -> Result<Vec<StabilityCell>> {
    let mut out = Vec::with_capacity(kappas.len() * lambda_mins.len() * residuals.len());
    for &k in kappas {
        for &l in lambda_mins {
            for &r in residuals {
                out.push(stability_cell(k, l, r)?);
            }
        }
    }
    Ok(out)
}

/// A random pair of instances sharing `x`, with `Σ_X = AᵀA + 0.1I` and a
/// loaded softmax covariance `P(σ') + p_ridge·I` from random logits.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub reg: RegressionInstance,
    pub cls: ClassificationInstance,
    pub p_expected: Matrix,
}

pub fn random_instance(rng: &mut Rng, d: usize, k: usize, p_ridge: f64) -> Result<RandomCase> {
    if d == 0 || k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need d ≥ 1 and K ≥ 2, got {d}, {k}"
        )));
    }
    fn normal(rng: &mut Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.standard_normal()).collect()
    }
    let a = Matrix::from_vec(d, d, normal(rng, d * d))?;
    let sigma_x = a.transpose().matmul(&a)?.add_identity(0.1)?;
    let x = normal(rng, d);
    let theta = normal(rng, d);
    let y = crate::numerics::dot(&x, &theta) + normal(rng, 1)[0];
    let beta = Matrix::from_vec(d, k, normal(rng, d * k))?;
    let label = (rng.next_u64() % k as u64) as usize;
    let sigma_p = softmax(&normal(rng, k))?;
    let p_expected = softmax_covariance(&sigma_p).add_identity(p_ridge)?;
    let reg = RegressionInstance::new(x.clone(), y, theta, sigma_x.clone())?;
    let cls = ClassificationInstance::new(x, label, beta, kron(&sigma_x, &p_expected))?;
    Ok(RandomCase {
        reg,
        cls,
        p_expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(n: usize) -> Matrix {
        Matrix::identity(n)
    }

    #[test]
    fn if_mse_hand_values() {
        let inst = RegressionInstance::new(vec![1.0, 0.0], 2.0, vec![0.0, 0.0], eye(2)).unwrap();
        assert_eq!(
            if_mse(&inst, SolveOptions::default()).unwrap(),
            vec![2.0, 0.0]
        );
        let zero = RegressionInstance::new(vec![1.0, 2.0], 3.0, vec![1.0, 1.0], eye(2)).unwrap();
        assert!(if_mse(&zero, SolveOptions::default())
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn singular_covariance_fails_unless_regularized() {
        let inst =
            RegressionInstance::new(vec![1.0, 1.0], 1.0, vec![0.0, 0.0], Matrix::zeros(2, 2))
                .unwrap();
        assert!(matches!(
            if_mse(&inst, SolveOptions::default()),
            Err(Error::SingularMatrix { .. })
        ));
        let shifted = SolveOptions { ridge: Some(1.0) };
        assert_eq!(if_mse(&inst, shifted).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn confident_prediction_has_zero_gradient() {
        // logits (800, 0) give σ = e_0 to machine precision
        let beta = Matrix::from_rows(&[vec![800.0, 0.0]]).unwrap();
        let inst = ClassificationInstance::new(vec![1.0], 0, beta, eye(2)).unwrap();
        assert!(softmax_grad(&inst).data().iter().all(|v| *v == 0.0));
        assert!(if_ce(&inst, SolveOptions::default())
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_columns_sum_to_zero() {
        let beta = Matrix::from_rows(&[vec![0.3, -0.2, 0.9], vec![1.1, 0.0, -0.4]]).unwrap();
        let inst = ClassificationInstance::new(vec![0.7, -1.3], 2, beta, eye(6)).unwrap();
        let g = softmax_grad(&inst);
        for i in 0..2 {
            assert!(g.row(i).iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn zero_x_gives_zero_hessian() {
        let beta = Matrix::from_rows(&[vec![0.3, -0.2], vec![1.1, 0.0]]).unwrap();
        let inst = ClassificationInstance::new(vec![0.0, 0.0], 1, beta, eye(4)).unwrap();
        assert!(ce_hessian_single(&inst).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn if_ce_two_by_two() {
        // d=1, K=2, β=0: σ=(½,½), g=(−½,½) for y=0; H = diag(2, 4)
        let beta = Matrix::zeros(1, 2);
        let h = Matrix::from_diag(&[2.0, 4.0]);
        let inst = ClassificationInstance::new(vec![1.0], 0, beta, h).unwrap();
        let v = if_ce(&inst, SolveOptions::default()).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-15 && (v[1] + 0.125).abs() < 1e-15);
    }

    #[test]
    fn softmax_covariance_is_singular() {
        let s = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let p = softmax_covariance(&s);
        let ones = p.matvec(&[1.0, 1.0, 1.0]).unwrap();
        assert!(ones.iter().all(|v| v.abs() < 1e-16));
    }

    #[test]
    fn empirical_covariance_needs_more_samples() {
        assert!(empirical_covariance(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        let s = empirical_covariance(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((s[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stability_rules() {
        assert!(stability_cell(1.0, 10.0, 1.0).unwrap().holds);
        assert!(!stability_cell(10.0, 1.0, 1.0).unwrap().holds);
        let (l, r) = (3.0, 0.7);
        assert!(stability_cell(l * r / SQRT_2, l, r).unwrap().holds);
        assert_eq!(
            stability_region(&[1.0, 2.0], &[1.0], &[1.0, 2.0, 3.0])
                .unwrap()
                .len(),
            6
        );
        assert!(stability_cell(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn bound_gates() {
        let mut rng = Rng::new(3);
        let case = random_instance(&mut rng, 3, 4, DEFAULT_P_RIDGE).unwrap();
        let rep = influence_bounds(&case.reg, &case.cls, &case.p_expected).unwrap();
        assert!(rep.lower_bound <= rep.ratio && rep.ratio <= rep.upper_bound);

        let mut flat = case.reg.clone();
        flat.theta = vec![0.0; 3];
        flat.y = 0.0;
        assert!(matches!(
            influence_bounds(&flat, &case.cls, &case.p_expected),
            Err(Error::Precondition(_))
        ));
        let singular = softmax_covariance(&case.cls.sigma);
        assert!(matches!(
            influence_bounds(&case.reg, &case.cls, &singular),
            Err(Error::Precondition(_))
        ));
    }
}
