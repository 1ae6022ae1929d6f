//! JSON report assembly. Every report carries `"schema":"1"` and is
//! serialized with a deterministic key order so identical inputs produce
//! byte-identical stdout.

use serde::Serialize;

pub const SCHEMA: &str = "1";

#[derive(Serialize)]
pub struct ClassifyReport {
    pub schema: &'static str,
    pub class: String,
    pub phi: f64,
}

#[derive(Serialize)]
pub struct VolumeReport {
    pub schema: &'static str,
    pub phi: f64,
    pub class: String,
    pub homogeneity: f64,
}

#[derive(Serialize)]
pub struct DualReport {
    pub schema: &'static str,
    pub method: &'static str,
    pub dual: serde_json::Value,
}

#[derive(Serialize)]
pub struct MetricReport {
    pub schema: &'static str,
    pub phi: f64,
    pub metric: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Serialize)]
pub struct SquashedReport {
    pub schema: &'static str,
    pub lambda: f64,
    pub y: f64,
    pub y4sq: f64,
}

#[derive(Serialize)]
pub struct WeakSu3Report {
    pub schema: &'static str,
    pub c: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Serialize)]
pub struct FlowReport {
    pub schema: &'static str,
    pub steps: usize,
    pub t_end: f64,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incomplete_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_c_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_c_stddev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_drift: Option<f64>,
}

#[derive(Serialize)]
pub struct NormalFormReport {
    pub schema: &'static str,
    pub name: String,
    pub form: serde_json::Value,
}

pub fn print<T: Serialize>(report: &T) {
    println!("{}", serde_json::to_string(report).expect("plain data serializes"));
}
