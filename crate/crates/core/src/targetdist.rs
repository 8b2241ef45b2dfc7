//! Target-to-probability transformation: a scalar target in `[a, b]` becomes
//! a K-bin probability vector by integrating a truncated, target-centered
//! density over equal-width bins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::special::{
    laplace_cdf, laplace_sf, normal_cdf, normal_sf, student_t_cdf, student_t_pdf, student_t_sf,
};
pub use crate::prob::ProbVector;

/// Normalizers below this are treated as underflow.
pub const MIN_NORMALIZER: f64 = 1e-300;

/// Equal-width partition of `[a, b]` into K ordered bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinScheme {
    k: usize,
    a: f64,
    b: f64,
    delta: f64,
    edges: Vec<f64>,
    centers: Vec<f64>,
}

impl BinScheme {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// K+1 ascending edges; bin k is `[edges[k], edges[k+1])`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Bin midpoints, the representative values used for reconstruction.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Index of the bin containing `y` (the last bin is closed on the right).
    pub fn bin_of(&self, y: f64) -> usize {
        let idx = ((y - self.a) / self.delta).floor();
        (idx.max(0.0) as usize).min(self.k - 1)
    }
}

/// Uniform K-bin partition of `[a, b]`.
pub fn make_bins(k: usize, a: f64, b: f64) -> Result<BinScheme> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 bins, got {k}"
        )));
    }
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("empty support [{a}, {b}]")));
    }
    let delta = (b - a) / k as f64;
    let mut edges: Vec<f64> = (0..=k).map(|i| a + i as f64 * delta).collect();
    edges[k] = b;
    let centers = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    Ok(BinScheme {
        k,
        a,
        b,
        delta,
        edges,
        centers,
    })
}

/// Kernel family used to spread a target over the bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    TruncatedGaussian,
    StudentT,
    Laplace,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncated_gaussian" | "gaussian" => Ok(Family::TruncatedGaussian),
            "student_t" => Ok(Family::StudentT),
            "laplace" => Ok(Family::Laplace),
            other => Err(Error::Config(format!(
                "unknown distribution family `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::TruncatedGaussian => "truncated_gaussian",
            Family::StudentT => "student_t",
            Family::Laplace => "laplace",
        })
    }
}

/// Kernel family plus its scale. For Laplace the scale is `λ = σ/√2`, which
/// matches the Gaussian variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDistSpec {
    pub family: Family,
    pub sigma: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
}

fn default_nu() -> f64 {
    5.0
}

impl TargetDistSpec {
    pub fn new(family: Family, sigma: f64) -> Result<Self> {
        let spec = Self {
            family,
            sigma,
            nu: default_nu(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(Family::TruncatedGaussian, sigma)
    }

    pub fn student_t(sigma: f64, nu: f64) -> Result<Self> {
        let spec = Self {
            family: Family::StudentT,
            sigma,
            nu,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn laplace(sigma: f64) -> Result<Self> {
        Self::new(Family::Laplace, sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.nu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nu must be > 0, got {}",
                self.nu
            )));
        }
        Ok(())
    }

    /// Laplace scale `σ/√2`.
    pub fn lambda(&self) -> f64 {
        self.sigma / std::f64::consts::SQRT_2
    }

    /// Scale applied to `y − y_c` before the standard CDF.
    fn scale(&self) -> f64 {
        match self.family {
            Family::Laplace => self.lambda(),
            _ => self.sigma,
        }
    }

    fn cdf(&self, z: f64) -> f64 {
        match self.family {
            Family::TruncatedGaussian => normal_cdf(z),
            Family::StudentT => student_t_cdf(z, self.nu),
            Family::Laplace => laplace_cdf(z),
        }
    }

    fn sf(&self, z: f64) -> f64 {
        match self.family {
            Family::TruncatedGaussian => normal_sf(z),
            Family::StudentT => student_t_sf(z, self.nu),
            Family::Laplace => laplace_sf(z),
        }
    }

    /// Untruncated density at `y` of the kernel centered at `y_c`.
    pub fn density(&self, y: f64, y_c: f64) -> f64 {
        let s = self.scale();
        let z = (y - y_c) / s;
        let std_pdf = match self.family {
            Family::TruncatedGaussian => (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Family::StudentT => student_t_pdf(z, self.nu),
            Family::Laplace => 0.5 * (-z.abs()).exp(),
        };
        std_pdf / s
    }

    /// Untruncated mass of `[lo, hi]` for the kernel centered at `y_c`.
    /// Differences are taken on whichever tail keeps them accurate.
    fn mass(&self, lo: f64, hi: f64, y_c: f64) -> f64 {
        let s = self.scale();
        let zl = (lo - y_c) / s;
        let zu = (hi - y_c) / s;
        let m = if zl >= 0.0 {
            self.sf(zl) - self.sf(zu)
        } else {
            self.cdf(zu) - self.cdf(zl)
        };
        m.max(0.0)
    }
}

fn encode_with(y_c: f64, bins: &BinScheme, spec: &TargetDistSpec) -> Result<ProbVector> {
    let (a, b) = bins.support();
    if !(y_c >= a && y_c <= b) {
        return Err(Error::OutOfSupport { value: y_c, a, b });
    }
    let z = spec.mass(a, b, y_c);
    if !(z >= MIN_NORMALIZER) {
        return Err(Error::DegenerateDistribution { z });
    }
    let mut p: Vec<f64> = bins
        .edges()
        .windows(2)
        .map(|e| spec.mass(e[0], e[1], y_c) / z)
        .collect();
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateDistribution { z: total });
    }
    for v in &mut p {
        *v /= total;
    }
    Ok(ProbVector::from_normalized(p))
}

fn expect_family(spec: &TargetDistSpec, family: Family) -> Result<()> {
    if spec.family != family {
        return Err(Error::InvalidParameter(format!(
            "{} encoder called with family {}",
            family, spec.family
        )));
    }
    Ok(())
}

/// Truncated-Gaussian bin masses via error-function differences.
pub fn encode_gaussian(y_c: f64, bins: &BinScheme, spec: &TargetDistSpec) -> Result<ProbVector> {
    expect_family(spec, Family::TruncatedGaussian)?;
    encode_with(y_c, bins, spec)
}

/// Truncated Student-t bin masses (ν degrees of freedom, scale σ).
pub fn encode_student_t(y_c: f64, bins: &BinScheme, spec: &TargetDistSpec) -> Result<ProbVector> {
    expect_family(spec, Family::StudentT)?;
    encode_with(y_c, bins, spec)
}

/// Truncated Laplace bin masses (scale `λ = σ/√2`).
pub fn encode_laplace(y_c: f64, bins: &BinScheme, spec: &TargetDistSpec) -> Result<ProbVector> {
    expect_family(spec, Family::Laplace)?;
    encode_with(y_c, bins, spec)
}

/// Dispatches on `spec.family`.
pub fn encode(y_c: f64, bins: &BinScheme, spec: &TargetDistSpec) -> Result<ProbVector> {
    match spec.family {
        Family::TruncatedGaussian => encode_gaussian(y_c, bins, spec),
        Family::StudentT => encode_student_t(y_c, bins, spec),
        Family::Laplace => encode_laplace(y_c, bins, spec),
    }
}
