//! Flat JSON records for sum experiments.

use serde::{Deserialize, Serialize};

use crate::sums::{Mode, SumResult, SumValue};

/// Exact integers stay integers in JSON; floating values are plain numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    /// Integers beyond the `i64` range fall back to a float.
    pub fn exact(v: i128) -> Self {
        i64::try_from(v)
            .map(Number::Int)
            .unwrap_or(Number::Float(v as f64))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(v) => v as f64,
            Number::Float(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumRecord {
    pub experiment: String,
    #[serde(rename = "T")]
    pub t: f64,
    pub z: f64,
    pub c: f64,
    pub delta: Option<f64>,
    pub seeds: Vec<u64>,
    pub value_re: Number,
    pub value_im: Number,
    pub terms: u64,
    pub mode: Mode,
    pub wall_time_ms: f64,
}

impl SumRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: impl Into<String>,
        t: f64,
        z: f64,
        c: f64,
        delta: Option<f64>,
        seeds: Vec<u64>,
        result: &SumResult,
        wall_time_ms: f64,
    ) -> Self {
        let (value_re, value_im) = match result.value {
            SumValue::Exact { re, im } => (Number::exact(re), Number::exact(im)),
            SumValue::Floating(z) => (Number::Float(z.re), Number::Float(z.im)),
        };
        SumRecord {
            experiment: experiment.into(),
            t,
            z,
            c,
            delta,
            seeds,
            value_re,
            value_im,
            terms: result.terms,
            mode: result.mode(),
            wall_time_ms,
        }
    }
}
