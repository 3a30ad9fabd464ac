use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Simulator input/output pairs on the normalized unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrainingSet<T>", bound = "T: Scalar")]
pub struct TrainingSet<T> {
    inputs: Vec<Vec<T>>,
    outputs: Vec<T>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawTrainingSet<T> {
    inputs: Vec<Vec<T>>,
    outputs: Vec<T>,
}

impl<T: Scalar> TryFrom<RawTrainingSet<T>> for TrainingSet<T> {
    type Error = Error;
    fn try_from(raw: RawTrainingSet<T>) -> Result<Self> {
        Self::new(raw.inputs, raw.outputs)
    }
}

fn check_point<T: Scalar>(x: &[T], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(invalid(format!("expected {dim} coordinates, got {}", x.len())));
    }
    if x.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
        return Err(invalid(format!("input {x:?} is outside the unit cube")));
    }
    Ok(())
}

impl<T: Scalar> TrainingSet<T> {
    pub fn new(inputs: Vec<Vec<T>>, outputs: Vec<T>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(invalid("training set needs at least one point"));
        }
        if inputs.len() != outputs.len() {
            return Err(invalid(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let dim = inputs[0].len();
        if dim == 0 {
            return Err(invalid("inputs must have at least one dimension"));
        }
        let mut set = Self {
            inputs: Vec::with_capacity(inputs.len()),
            outputs: Vec::with_capacity(outputs.len()),
        };
        for (x, y) in inputs.into_iter().zip(outputs) {
            check_point(&x, dim)?;
            set.check_new(&x, y)?;
            set.inputs.push(x);
            set.outputs.push(y);
        }
        Ok(set)
    }

    fn check_new(&self, x: &[T], y: T) -> Result<()> {
        if !y.is_finite() {
            return Err(invalid(format!("non-finite output {y} at {x:?}")));
        }
        if self.inputs.iter().any(|row| row.as_slice() == x) {
            return Err(invalid(format!("duplicate input row {x:?}")));
        }
        Ok(())
    }

    /// Appends one run. The set never shrinks.
    pub fn push(&mut self, x: Vec<T>, y: T) -> Result<()> {
        check_point(&x, self.dim())?;
        self.check_new(&x, y)?;
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[T] {
        &self.outputs
    }

    /// Writes `x1..xd,y` with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (x, y) in self.inputs.iter().zip(&self.outputs) {
            let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            row.push(y.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let d = header.len().saturating_sub(1);
        let expected: Vec<String> = (1..=d)
            .map(|i| format!("x{i}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        if d == 0 || header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(invalid(format!(
                "training CSV header must be {}, got {}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map(T::of))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| invalid(format!("bad number in training CSV: {e}")))?;
            let (x, y) = vals.split_at(d);
            inputs.push(x.to_vec());
            outputs.push(y[0]);
        }
        Self::new(inputs, outputs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
