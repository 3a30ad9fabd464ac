//! Reference simulators: Franke's function, the torus implausibility, random
//! functions drawn from a Matérn GP prior, and a tabulated run archive.

use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::emulator::{KernelFamily, KernelSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::Cholesky;
use crate::nroy::{Objective, SearchBox};
use crate::scalar::{quantile, Scalar};
use crate::seed::rng_from;
use crate::special::log_norm_interval;

/// A deterministic simulator with named outputs, evaluated in native units.
pub trait Simulator<T>: Sync {
    fn input_dim(&self) -> usize;
    fn output_ids(&self) -> Vec<String>;
    fn evaluate(&self, x: &[T]) -> Result<Vec<T>>;
}

fn domain_error<T: Scalar>(function: &'static str, x: &[T]) -> Error {
    Error::Domain {
        function,
        point: x.iter().map(|v| v.as_f64()).collect(),
    }
}

/// Franke's function on the unit square.
pub fn franke<T: Scalar>(x: &[T]) -> Result<T> {
    if x.len() != 2 || x.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
        return Err(domain_error("franke", x));
    }
    let c = T::of;
    let (a, b) = (c(9.0) * x[0], c(9.0) * x[1]);
    let sq = |v: T| v * v;
    let t1 = c(0.75) * (-sq(a - c(2.0)) / c(4.0) - sq(b - c(2.0)) / c(4.0)).exp();
    let t2 = c(0.75) * (-sq(a + c(1.0)) / c(49.0) - (b + c(1.0)) / c(10.0)).exp();
    let t3 = c(0.5) * (-sq(a - c(7.0)) / c(4.0) - sq(b - c(3.0)) / c(4.0)).exp();
    let t4 = c(0.2) * (-sq(a - c(4.0)) - sq(b - c(7.0))).exp();
    Ok(t1 + t2 + t3 - t4)
}

pub struct Franke;

impl<T: Scalar> Simulator<T> for Franke {
    fn input_dim(&self) -> usize {
        2
    }
    fn output_ids(&self) -> Vec<String> {
        vec!["f".into()]
    }
    fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(vec![franke(x)?])
    }
}

pub const TORUS_LOWER: f64 = -20.0;
pub const TORUS_UPPER: f64 = 40.0;

pub fn torus_box<T: Scalar>() -> SearchBox<T> {
    SearchBox::new(vec![T::of(TORUS_LOWER); 3], vec![T::of(TORUS_UPPER); 3]).expect("valid box")
}

/// Implausibility whose zero set at `x₃ = 0` is the four points
/// `(2 ± √3, 2 ± √3)`, with a thin band in `x₃` around it.
pub fn torus_implausibility<T: Scalar>(x: &[T]) -> Result<T> {
    let lo = T::of(TORUS_LOWER);
    let hi = T::of(TORUS_UPPER);
    if x.len() != 3 || x.iter().any(|v| !(*v >= lo && *v <= hi)) {
        return Err(domain_error("torus", x));
    }
    let two = T::of(2.0);
    let u1 = (x[0] - two) * (x[0] - two) - T::of(3.0);
    let u2 = (x[1] - two) * (x[1] - two) - T::of(3.0);
    // Σ = (1/4096)[[1, ρ], [ρ, 1]], so Σ⁻¹ = 4096/(1−ρ²)·[[1, −ρ], [−ρ, 1]].
    let rho = T::of(-0.97);
    let scale = T::of(4096.0) / (T::one() - rho * rho);
    let q = scale * (u1 * u1 - two * rho * u1 * u2 + u2 * u2);
    let w = T::of(0.04);
    Ok((q.max(T::zero()).sqrt() + x[2] * x[2] / (w * w)) / T::of(10.0))
}

/// `g(x) = Φ(k − I(x)) − Φ(−k − I(x))` for the torus implausibility,
/// evaluated in log space because it underflows over most of the box.
#[derive(Debug, Clone, Copy)]
pub struct TorusObjective<T> {
    pub k: T,
}

impl<T: Scalar> Default for TorusObjective<T> {
    fn default() -> Self {
        Self { k: T::of(3.0) }
    }
}

impl<T: Scalar> Objective<T> for TorusObjective<T> {
    fn value(&self, x: &[T]) -> T {
        self.log_value(x).exp()
    }

    fn log_value(&self, x: &[T]) -> T {
        match torus_implausibility(x) {
            Ok(i) => log_norm_interval(-self.k - i, self.k - i),
            Err(_) => T::nan(),
        }
    }
}

fn default_n_seeds() -> Option<usize> {
    None
}

/// Parameters of a random test function drawn from a Matérn-5/2 GP prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFunctionSpec {
    pub dim: usize,
    pub seed: u64,
    /// Defaults to `100·dim`.
    #[serde(default = "default_n_seeds")]
    pub n_seeds: Option<usize>,
    #[serde(default = "RandomFunctionSpec::default_lengthscale_box")]
    pub lengthscale_box: (f64, f64),
    #[serde(default = "RandomFunctionSpec::default_signal_sd")]
    pub signal_sd: f64,
    #[serde(default = "RandomFunctionSpec::default_target_quantile")]
    pub target_quantile: f64,
}

impl RandomFunctionSpec {
    fn default_lengthscale_box() -> (f64, f64) {
        (0.0, 2.0)
    }
    fn default_signal_sd() -> f64 {
        10.0
    }
    fn default_target_quantile() -> f64 {
        0.95
    }

    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            n_seeds: None,
            lengthscale_box: Self::default_lengthscale_box(),
            signal_sd: Self::default_signal_sd(),
            target_quantile: Self::default_target_quantile(),
        }
    }

    pub fn seed_count(&self) -> usize {
        self.n_seeds.unwrap_or(100 * self.dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(invalid("random function dimension must be at least 1"));
        }
        if self.seed_count() < self.dim + 1 {
            return Err(invalid("random function needs at least dim + 1 seeds"));
        }
        if !(self.signal_sd > 0.0 && self.signal_sd.is_finite()) {
            return Err(invalid("signal_sd must be positive"));
        }
        let (a, b) = self.lengthscale_box;
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(invalid("lengthscale box must satisfy 0 <= low < high"));
        }
        if !(self.target_quantile > 0.0 && self.target_quantile < 1.0) {
            return Err(invalid("target_quantile must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// `y(x) = k(x)ᵀ K⁻¹ f` for seed values `f ~ N(0, s²K)`.
#[derive(Debug, Clone)]
pub struct RandomFunction<T> {
    seeds: Vec<Vec<T>>,
    values: Vec<T>,
    alpha: Vec<T>,
    kernel: KernelSpec<T>,
    jitter: T,
    target: T,
}

impl<T: Scalar> RandomFunction<T> {
    pub fn seeds(&self) -> &[Vec<T>] {
        &self.seeds
    }

    /// Prior draws at the seeds.
    pub fn seed_values(&self) -> &[T] {
        &self.values
    }

    pub fn lengthscales(&self) -> &[T] {
        &self.kernel.lengthscales
    }

    pub fn target(&self) -> T {
        self.target
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim() || x.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(domain_error("random function", x));
        }
        let mut y = T::zero();
        for (s, a) in self.seeds.iter().zip(&self.alpha) {
            let r2 = self.kernel.scaled_sq_dist(x, s);
            let mut c = self.kernel.correlation(x, s);
            // The jitter belongs to the seed covariance, so seeds are
            // reproduced exactly.
            if r2 == T::zero() {
                c = c + self.jitter;
            }
            y = y + c * *a;
        }
        Ok(y)
    }
}

impl<T: Scalar> Simulator<T> for RandomFunction<T> {
    fn input_dim(&self) -> usize {
        self.dim()
    }
    fn output_ids(&self) -> Vec<String> {
        vec!["y".into()]
    }
    fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(vec![self.eval(x)?])
    }
}

pub fn make_random_function<T: Scalar>(spec: &RandomFunctionSpec) -> Result<RandomFunction<T>> {
    spec.validate()?;
    let d = spec.dim;
    let n = spec.seed_count();
    let mut rng = rng_from(spec.seed, &[]);
    let seeds: Vec<Vec<T>> = (0..n)
        .map(|_| (0..d).map(|_| T::of(rng.gen::<f64>())).collect())
        .collect();
    let (lo, hi) = spec.lengthscale_box;
    let lengthscales: Vec<T> = (0..d)
        .map(|_| T::of(rng.gen_range(lo..hi).max(1e-6)))
        .collect();
    let kernel = KernelSpec::new(KernelFamily::Matern52, lengthscales, T::one(), T::zero())?;
    let gram = kernel.gram(&seeds);
    let (chol, jitter) = Cholesky::factor_with_jitter(&gram, n, T::one())?;
    let z: Vec<T> = (0..n)
        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let sd = T::of(spec.signal_sd);
    let values: Vec<T> = chol.mul_lower(&z).into_iter().map(|v| v * sd).collect();
    let alpha = chol.solve(&values);
    let target = quantile(&values, T::of(spec.target_quantile));
    Ok(RandomFunction {
        seeds,
        values,
        alpha,
        kernel,
        jitter,
        target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Nearest,
    Exact,
}

/// Archive of precomputed simulator runs.
#[derive(Debug, Clone)]
pub struct TabulatedSimulator<T> {
    input_names: Vec<String>,
    output_names: Vec<String>,
    inputs: Vec<Vec<T>>,
    outputs: Vec<Vec<T>>,
    lower: Vec<T>,
    upper: Vec<T>,
    interpolation: Interpolation,
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn is_input_column(name: &str) -> bool {
    name.strip_prefix('x')
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

impl<T: Scalar> TabulatedSimulator<T> {
    /// Loads a CSV whose leading `x1..xd` columns are inputs and whose
    /// remaining columns are outputs.
    pub fn load(path: impl AsRef<Path>, interpolation: Interpolation) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let mut r = csv::Reader::from_reader(file);
        let header = r
            .headers()
            .map_err(|e| parse_error(path, e.to_string()))?
            .clone();
        let names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
        let d = names.iter().take_while(|n| is_input_column(n)).count();
        if d == 0 || d == names.len() {
            return Err(parse_error(
                path,
                "header must start with input columns x1..xd followed by at least one output column",
            ));
        }
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| parse_error(path, e.to_string()))?;
            if rec.len() != names.len() {
                return Err(parse_error(path, format!("row {} has {} fields", line + 1, rec.len())));
            }
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| parse_error(path, format!("row {}: {e}", line + 1)))?;
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(parse_error(path, format!("row {} has a non-finite value", line + 1)));
            }
            inputs.push(vals[..d].iter().map(|v| T::of(*v)).collect());
            outputs.push(vals[d..].iter().map(|v| T::of(*v)).collect());
        }
        Self::from_rows(names[..d].to_vec(), names[d..].to_vec(), inputs, outputs, interpolation)
            .map_err(|e| match e {
                Error::InvalidInput(m) => parse_error(path, m),
                other => other,
            })
    }

    pub fn from_rows(
        input_names: Vec<String>,
        output_names: Vec<String>,
        inputs: Vec<Vec<T>>,
        outputs: Vec<Vec<T>>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != outputs.len() {
            return Err(invalid("archive must have at least one row"));
        }
        let d = input_names.len();
        let q = output_names.len();
        if inputs.iter().any(|x| x.len() != d) || outputs.iter().any(|y| y.len() != q) {
            return Err(invalid("inconsistent row widths in archive"));
        }
        let mut lower = inputs[0].clone();
        let mut upper = inputs[0].clone();
        for x in &inputs {
            for k in 0..d {
                lower[k] = lower[k].min(x[k]);
                upper[k] = upper[k].max(x[k]);
            }
        }
        Ok(Self {
            input_names,
            output_names,
            inputs,
            outputs,
            lower,
            upper,
            interpolation,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        let header: Vec<&str> = self
            .input_names
            .iter()
            .chain(&self.output_names)
            .map(String::as_str)
            .collect();
        w.write_record(&header)?;
        for (x, y) in self.inputs.iter().zip(&self.outputs) {
            let row: Vec<String> = x.iter().chain(y).map(|v| v.to_string()).collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<T>] {
        &self.outputs
    }

    /// Bounding box of the stored inputs.
    pub fn input_box(&self) -> (Vec<T>, Vec<T>) {
        (self.lower.clone(), self.upper.clone())
    }

    fn normalized_sq_dist(&self, a: &[T], b: &[T]) -> T {
        let mut s = T::zero();
        for k in 0..a.len() {
            let w = self.upper[k] - self.lower[k];
            let w = if w > T::zero() { w } else { T::one() };
            let d = (a[k] - b[k]) / w;
            s = s + d * d;
        }
        s
    }

    /// Index of the stored row nearest to `x` (first on ties).
    pub fn nearest_index(&self, x: &[T]) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, row) in self.inputs.iter().enumerate() {
            let d = self.normalized_sq_dist(x, row);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_names.len() {
            return Err(Error::Arity {
                expected: self.input_names.len(),
                got: x.len(),
            });
        }
        let i = self.nearest_index(x);
        if self.interpolation == Interpolation::Exact {
            let tol = T::of(1e-12);
            if self.inputs[i].iter().zip(x).any(|(a, b)| (*a - *b).abs() > tol) {
                return Err(Error::Lookup(x.iter().map(|v| v.as_f64()).collect()));
            }
        }
        Ok(self.outputs[i].clone())
    }
}

impl<T: Scalar> Simulator<T> for TabulatedSimulator<T> {
    fn input_dim(&self) -> usize {
        self.input_names.len()
    }
    fn output_ids(&self) -> Vec<String> {
        self.output_names.clone()
    }
    fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        self.eval(x)
    }
}

/// Location of a tabulated archive together with its lookup mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedSource {
    pub path: PathBuf,
    #[serde(default)]
    pub interpolation: Interpolation,
}
