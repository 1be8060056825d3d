//! Browser demo: closed-form predictions, in-browser Monte Carlo
//! verification, and the bound-envelope curves, exported through
//! wasm-bindgen. The underlying functions speak plain strings so they can be
//! exercised natively; the wasm exports wrap them.

use relu_moments::combinatorics::{gautschi_ratio, norm_growth_factor};
use relu_moments::config::{ExperimentConfig, ScheduleSpec};
use relu_moments::moments::NetworkShape;
use relu_moments::runner;

/// Keep an interactive tab responsive.
pub const MAX_DEMO_TRIALS: u32 = 2_000_000;

fn build_config(
    shape_csv: &str,
    schedule: &str,
    x_norm: f64,
    eps: f64,
) -> Result<ExperimentConfig, String> {
    let widths = relu_moments::config::parse_usize_list(shape_csv)?;
    let shape = NetworkShape::new(widths).map_err(|e| e.to_string())?;
    let mut config = ExperimentConfig::new(shape);
    config.schedule = ScheduleSpec::parse(schedule).map_err(|e| e.to_string())?;
    config
        .set_field("x_norm", &x_norm.to_string())
        .map_err(|e| e.to_string())?;
    config
        .set_field("eps", &eps.to_string())
        .map_err(|e| e.to_string())?;
    Ok(config)
}

/// Closed-form predictions and schedule characterization, as a JSON report.
pub fn predict_report(
    shape_csv: &str,
    schedule: &str,
    x_norm: f64,
    eps: f64,
) -> Result<String, String> {
    let config = build_config(shape_csv, schedule, x_norm, eps)?;
    let report = runner::run_predict(&config).map_err(|e| e.to_string())?;
    Ok(report.to_json())
}

/// Monte Carlo verification run (single worker), as a JSON report.
pub fn verify_report(
    shape_csv: &str,
    schedule: &str,
    x_norm: f64,
    trials: u32,
    seed: u32,
    eps: f64,
    z_max: f64,
) -> Result<String, String> {
    if trials > MAX_DEMO_TRIALS {
        return Err(format!("trials capped at {MAX_DEMO_TRIALS} in the demo"));
    }
    let mut config = build_config(shape_csv, schedule, x_norm, eps)?;
    config.trials = u64::from(trials);
    config.seed = u64::from(seed);
    config.z_max = z_max;
    config.workers = 1;
    config.validate().map_err(|e| e.to_string())?;
    let report = runner::run_verify(&config).map_err(|e| e.to_string())?;
    Ok(report.to_json())
}

/// Curves for the bounds explorer: the norm growth factor ratio
/// M_n / sqrt(n/2) with its envelope, and the Gamma ratio r_i / sqrt(i)
/// against the sandwich sqrt(i-1)/sqrt(i) .. sqrt(i+1)/sqrt(i), on a
/// log-spaced integer grid up to n_max.
pub fn growth_curves(n_max: u32) -> Result<String, String> {
    if n_max < 1 {
        return Err("n_max must be at least 1".into());
    }
    let mut grid: Vec<u64> = Vec::new();
    let mut v = 1f64;
    while (v as u64) <= u64::from(n_max) {
        let n = v as u64;
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        v = (v * 1.12).max(v + 1.0);
    }
    if grid.last() != Some(&u64::from(n_max)) {
        grid.push(u64::from(n_max));
    }

    let num = |x: f64| {
        if x.is_finite() {
            format!("{x:.16e}")
        } else {
            "null".into()
        }
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &n in &grid {
        let nf = n as f64;
        let m = norm_growth_factor(n).map_err(|e| e.to_string())?;
        let ratio = m / (nf / 2.0).sqrt();
        let env_lo = 1.0 - 1.5 / nf - 2.0 / (nf * nf);
        let env_hi = (1.0 + 2.0 / nf).sqrt();
        let r = gautschi_ratio(n).map_err(|e| e.to_string())?;
        rows.push(format!(
            "{{\"n\": {n}, \"growth_ratio\": {}, \"env_lo\": {}, \"env_hi\": {}, \
             \"gamma_ratio\": {}, \"gamma_lo\": {}, \"gamma_hi\": {}}}",
            num(ratio),
            num(env_lo),
            num(env_hi),
            num(r / nf.sqrt()),
            num((nf - 1.0).sqrt() / nf.sqrt()),
            num((nf + 1.0).sqrt() / nf.sqrt()),
        ));
    }
    Ok(format!("{{\"points\": [{}]}}", rows.join(",")))
}

#[cfg(target_arch = "wasm32")]
mod wasm {
    use wasm_bindgen::prelude::*;

    fn err(e: String) -> JsValue {
        JsValue::from_str(&e)
    }

    #[wasm_bindgen]
    pub fn predict_json(
        shape_csv: &str,
        schedule: &str,
        x_norm: f64,
        eps: f64,
    ) -> Result<String, JsValue> {
        super::predict_report(shape_csv, schedule, x_norm, eps).map_err(err)
    }

    #[wasm_bindgen]
    pub fn verify_json(
        shape_csv: &str,
        schedule: &str,
        x_norm: f64,
        trials: u32,
        seed: u32,
        eps: f64,
        z_max: f64,
    ) -> Result<String, JsValue> {
        super::verify_report(shape_csv, schedule, x_norm, trials, seed, eps, z_max).map_err(err)
    }

    #[wasm_bindgen]
    pub fn growth_curves_json(n_max: u32) -> Result<String, JsValue> {
        super::growth_curves(n_max).map_err(err)
    }
}
