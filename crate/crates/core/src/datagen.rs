//! Synthetic data generators, nested prefix series, count-data preprocessing,
//! empirical hyperparameters and CSV matrix I/O.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    Laplace,
}

/// One univariate component. For `Normal` the scale is the standard deviation,
/// for `Laplace` it is the Laplace scale `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub family: Family,
    pub loc: f64,
    pub scale: f64,
}

impl Component {
    pub fn normal(loc: f64, scale: f64) -> Self {
        Self {
            family: Family::Normal,
            loc,
            scale,
        }
    }

    pub fn laplace(loc: f64, scale: f64) -> Self {
        Self {
            family: Family::Laplace,
            loc,
            scale,
        }
    }

    /// Normal draws use the ziggurat sampler of `rand_distr::StandardNormal`;
    /// Laplace draws invert the CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Normal => {
                let z: f64 = StandardNormal.sample(rng);
                self.loc + self.scale * z
            }
            Family::Laplace => {
                // u uniform on (-1/2, 1/2), excluding the endpoint that maps to -inf.
                let mut u: f64 = rng.random::<f64>() - 0.5;
                while u == -0.5 {
                    u = rng.random::<f64>() - 0.5;
                }
                self.loc - self.scale * u.signum() * (-2.0 * u.abs()).ln_1p()
            }
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        match self.family {
            Family::Normal => -0.5 * z * z - self.scale.ln() - 0.5 * crate::numerics::LN_2PI,
            Family::Laplace => -z.abs() - (2.0 * self.scale).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        match self.family {
            Family::Normal => 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2),
            Family::Laplace => {
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
        }
    }
}

/// A univariate finite mixture used as a ground-truth generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub components: Vec<Component>,
    pub weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(components: Vec<Component>, weights: Vec<f64>) -> Result<Self> {
        let spec = Self {
            components,
            weights,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn single(component: Component) -> Self {
        Self {
            components: vec![component],
            weights: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(MfmError::config("mixture needs at least one component"));
        }
        if self.components.len() != self.weights.len() {
            return Err(MfmError::config("mixture weights and components differ in length"));
        }
        if let Some(c) = self.components.iter().find(|c| !(c.scale > 0.0) || !c.loc.is_finite()) {
            return Err(MfmError::config(format!("invalid component {c:?}")));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(MfmError::config("mixture weights must be nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(MfmError::config(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(())
    }

    fn draw_label<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        crate::numerics::sample_categorical(&self.weights, rng).unwrap_or(0)
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, usize) {
        let label = self.draw_label(rng);
        (self.components[label].sample(rng), label)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w.ln() + c.ln_pdf(x))
            .collect();
        crate::numerics::log_sum_exp(&terms)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c.cdf(x))
            .sum()
    }
}

/// Draws `n` points and their component labels.
pub fn sample_mixture<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    n: usize,
    rng: &mut R,
) -> Result<(Matrix, Vec<usize>)> {
    spec.validate()?;
    if n == 0 {
        return Err(MfmError::input("sample size must be >= 1"));
    }
    let (values, labels) = (0..n).map(|_| spec.sample_one(rng)).unzip();
    Ok((Matrix::column_vector(values), labels))
}

/// `(1 - epsilon) * base + epsilon * contaminant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContaminationSpec {
    pub base: MixtureSpec,
    pub contaminant: MixtureSpec,
    pub epsilon: f64,
}

impl ContaminationSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.contaminant.validate()?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(MfmError::config(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let a = (1.0 - self.epsilon).ln() + self.base.ln_pdf(x);
        let b = self.epsilon.ln() + self.contaminant.ln_pdf(x);
        crate::numerics::log_add_exp(a, b)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (1.0 - self.epsilon) * self.base.cdf(x) + self.epsilon * self.contaminant.cdf(x)
    }
}

/// Draws `n` points; `flags[i]` is true when point `i` came from the contaminant.
pub fn contaminate<R: Rng + ?Sized>(
    spec: &ContaminationSpec,
    n: usize,
    rng: &mut R,
) -> Result<(Matrix, Vec<bool>)> {
    spec.validate()?;
    if n == 0 {
        return Err(MfmError::input("sample size must be >= 1"));
    }
    let mut values = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for _ in 0..n {
        let from_q = rng.random::<f64>() < spec.epsilon;
        let (x, _) = if from_q {
            spec.contaminant.sample_one(rng)
        } else {
            spec.base.sample_one(rng)
        };
        values.push(x);
        flags.push(from_q);
    }
    Ok((Matrix::column_vector(values), flags))
}

/// A dataset and the ascending sizes of its nested prefixes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSeries {
    pub full: Matrix,
    pub labels: Option<Vec<usize>>,
    pub sizes: Vec<usize>,
    pub seed: u64,
}

impl DatasetSeries {
    /// The dataset of size `n`: the first `n` rows of the full matrix.
    pub fn prefix(&self, n: usize) -> Matrix {
        self.full.prefix(n)
    }
}

/// Nested prefix series of `full`. Sizes must be strictly ascending and at most the row count.
///
/// Prefixes follow the row order, so permuting the input changes every prefix
/// except the full one.
pub fn nested_series(full: Matrix, sizes: &[usize], seed: u64) -> Result<DatasetSeries> {
    if sizes.is_empty() {
        return Err(MfmError::input("at least one size is required"));
    }
    if sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MfmError::input(format!(
            "sizes must be positive and strictly ascending, got {sizes:?}"
        )));
    }
    let max = *sizes.last().expect("nonempty");
    if max > full.rows() {
        return Err(MfmError::input(format!(
            "largest size {max} exceeds {} available rows",
            full.rows()
        )));
    }
    Ok(DatasetSeries {
        full: full.prefix(max),
        labels: None,
        sizes: sizes.to_vec(),
        seed,
    })
}

/// `log2(1 + x)` entrywise, then each column centered and scaled to unit
/// population standard deviation.
pub fn log2_standardize(counts: &Matrix) -> Result<Matrix> {
    if let Some(v) = counts.as_slice().iter().find(|v| !(**v >= 0.0)) {
        return Err(MfmError::input(format!("counts must be nonnegative, got {v}")));
    }
    let logged: Vec<f64> = counts.as_slice().iter().map(|x| x.ln_1p() / std::f64::consts::LN_2).collect();
    standardize_columns(&Matrix::new(counts.rows(), counts.cols(), logged)?)
}

/// Centers each column and divides by its population standard deviation.
pub fn standardize_columns(m: &Matrix) -> Result<Matrix> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 {
        return Err(MfmError::input("cannot standardize an empty matrix"));
    }
    let mut out = m.as_slice().to_vec();
    for j in 0..cols {
        let col = m.column(j);
        let mean = col.iter().sum::<f64>() / rows as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / rows as f64;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(MfmError::input(format!("column {j} has zero variance")));
        }
        for i in 0..rows {
            out[i * cols + j] = (m.get(i, j) - mean) / sd;
        }
    }
    Matrix::new(rows, cols, out)
}

/// Per-dimension data-dependent hyperparameters: midrange `m` and `kappa = range^-2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalHyper {
    pub mean: Vec<f64>,
    pub kappa: Vec<f64>,
}

pub fn empirical_hyperparams(data: &Matrix) -> Result<EmpiricalHyper> {
    if data.rows() < 2 {
        return Err(MfmError::input("empirical hyperparameters need at least two rows"));
    }
    let mut mean = Vec::with_capacity(data.cols());
    let mut kappa = Vec::with_capacity(data.cols());
    for j in 0..data.cols() {
        let col = data.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        if !(range > 0.0) {
            return Err(MfmError::input(format!("dimension {j} has zero range")));
        }
        mean.push(0.5 * (hi + lo));
        kappa.push(range.powi(-2));
    }
    Ok(EmpiricalHyper { mean, kappa })
}

/// Reads a comma-separated numeric matrix, skipping one header row if `header`.
pub fn load_matrix(path: &Path, header: bool) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| MfmError::io(path, e))?;
    parse_matrix(&text, header, path)
}

pub fn parse_matrix(text: &str, header: bool, path: &Path) -> Result<Matrix> {
    let err = |line: usize, column: usize, msg: String| MfmError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        msg,
    };
    let mut cols = None;
    let mut rows = 0;
    let mut data = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if header && idx == 0 {
            continue;
        }
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for (c, field) in line.split(',').enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| err(line_no, c + 1, format!("cannot parse {:?} as a number", field.trim())))?;
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(expected) if expected != count => {
                return Err(err(
                    line_no,
                    count.min(expected) + 1,
                    format!("row has {count} fields, expected {expected}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    Matrix::new(rows, cols.unwrap_or(0), data)
}

/// Writes a matrix as CSV with an optional header, using shortest round-trip formatting.
pub fn write_matrix(path: &Path, m: &Matrix, header: Option<&[&str]>) -> Result<()> {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in m.iter_rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| MfmError::io(path, e))
}
