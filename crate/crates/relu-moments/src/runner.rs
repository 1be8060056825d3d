//! Experiment execution: predictions, Monte Carlo verification, bound sweeps.
//!
//! Trials are independent by construction (each one derives its own RNG seed
//! from the master seed and the trial index), so they can run on any number
//! of workers. To keep results bitwise independent of the worker count, the
//! trial range is cut into fixed blocks of [`TRIAL_BLOCK`]; each block is
//! folded sequentially, blocks are merged in index order, and only the
//! assignment of blocks to workers varies with parallelism.

use crate::config::{ConfigError, ExperimentConfig};
use crate::moments::{self, InitSchedule, NetworkShape};
use crate::netsim::{self, forward, output_gradient_full, sample_weights};
use crate::report::{Report, Summary, VerdictRow};
use crate::rng;
use crate::stats::{self, cross_neuron_symmetry_test, StreamingStats};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Trials per scheduling block.
pub const TRIAL_BLOCK: u64 = 4096;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Combinatorics(#[from] crate::combinatorics::Error),
    #[error(transparent)]
    Moments(#[from] moments::Error),
    #[error(transparent)]
    Netsim(#[from] netsim::Error),
    #[error("trial {trial} (derived seed {seed:#018x}) failed: {source}")]
    Trial {
        trial: u64,
        seed: u64,
        source: stats::Error,
    },
    #[error(transparent)]
    Stats(#[from] stats::Error),
}

#[cfg(not(target_arch = "wasm32"))]
fn start_timer() -> Option<std::time::Instant> {
    Some(std::time::Instant::now())
}

#[cfg(target_arch = "wasm32")]
fn start_timer() -> Option<std::time::Instant> {
    None
}

fn elapsed(start: Option<std::time::Instant>) -> Option<f64> {
    start.map(|s| s.elapsed().as_secs_f64())
}

/// Closed-form predictions and schedule characterization; no simulation.
pub fn run_predict(config: &ExperimentConfig) -> Result<Report, Error> {
    let timer = start_timer();
    let (sched, x) = config.materialize()?;
    let x_norm = norm(&x);
    let predictions = moments::predictions(
        &config.shape,
        &sched,
        x_norm,
        config.eps,
        config.width_constant,
    )?;
    let schedule_checks = moments::schedule_characterization(&config.shape, &sched)?;
    Ok(Report {
        command: "predict".into(),
        config: config.echo(),
        predictions,
        schedule_checks,
        verdicts: Vec::new(),
        summary: Summary::from_verdicts(&[]),
        wall_time_seconds: elapsed(timer),
    })
}

/// Monte Carlo verification of every prediction against `trials` samples.
pub fn run_verify(config: &ExperimentConfig) -> Result<Report, Error> {
    verify_against(config, None)
}

/// Like [`run_verify`], but score the simulation against predictions from a
/// different schedule. This is the sensitivity hook: simulating the true
/// schedule against deliberately perturbed predictions must trip failures.
pub fn verify_against(
    config: &ExperimentConfig,
    prediction_schedule: Option<&InitSchedule>,
) -> Result<Report, Error> {
    let timer = start_timer();
    let (sim_sched, x) = config.materialize()?;
    let pred_sched = prediction_schedule.unwrap_or(&sim_sched);
    let x_norm = norm(&x);
    let shape = &config.shape;

    let probes = probe_list(config);
    let acc = run_trials(shape, &sim_sched, &x, config, &probes)?;

    let predictions = moments::predictions(
        shape,
        pred_sched,
        x_norm,
        config.eps,
        config.width_constant,
    )?;
    let schedule_checks = moments::schedule_characterization(shape, pred_sched)?;

    let z = config.z_max;
    let mut verdicts: Vec<VerdictRow> = Vec::new();
    for (idx, &(k, p)) in probes.iter().enumerate() {
        let pred = &predictions[k - 1];
        let [f, f2, d, d2] = &acc.per_probe[idx];
        let row = |v: stats::Verdict| VerdictRow::new(v, Some(k), Some(p));
        verdicts.push(row(f.mean_test("mean(f)", pred.first_moment_exact, z)?));
        verdicts.push(row(f.mean_interval_test(
            "mean(f) in scale bracket",
            pred.first_moment_lo,
            pred.first_moment_hi,
            z,
        )?));
        verdicts.push(row(f2.mean_test("mean(f^2)", pred.second_moment, z)?));
        verdicts.push(row(f.variance_interval_test(
            "var(f) in sandwich",
            pred.variance_lo,
            pred.variance_hi,
            z,
        )?));
        verdicts.push(row(d.mean_test("mean(delta)", 0.0, z)?));
        verdicts.push(row(d2.mean_test("mean(delta^2)", pred.backward_variance, z)?));
    }
    // Cross-neuron symmetry per probed layer, when at least two neurons fit.
    for &k in &config.probed_layers() {
        let f_group: Vec<StreamingStats> = probes
            .iter()
            .enumerate()
            .filter(|(_, &(pk, _))| pk == k)
            .map(|(i, _)| acc.per_probe[i][0])
            .collect();
        if f_group.len() < 2 {
            continue;
        }
        let d_group: Vec<StreamingStats> = probes
            .iter()
            .enumerate()
            .filter(|(_, &(pk, _))| pk == k)
            .map(|(i, _)| acc.per_probe[i][2])
            .collect();
        verdicts.push(VerdictRow::new(
            cross_neuron_symmetry_test("var(f) cross-neuron", &f_group, z)?,
            Some(k),
            None,
        ));
        verdicts.push(VerdictRow::new(
            cross_neuron_symmetry_test("var(delta) cross-neuron", &d_group, z)?,
            Some(k),
            None,
        ));
    }
    // Output layer: the scalar f_L is linear, so its mean is 0 and its
    // second moment is beta_L^2 * n_{L-1} * E[f_{L-1,j}^2].
    let depth = shape.depth();
    let out_second = pred_sched.beta(depth).powi(2)
        * shape.width(depth - 1) as f64
        * moments::second_moment(shape, pred_sched, x_norm, depth - 1)?;
    verdicts.push(VerdictRow::new(
        acc.output[0].mean_test("mean(output)", 0.0, z)?,
        Some(depth),
        Some(1),
    ));
    verdicts.push(VerdictRow::new(
        acc.output[1].mean_test("mean(output^2)", out_second, z)?,
        Some(depth),
        Some(1),
    ));

    let summary = Summary::from_verdicts(&verdicts);
    Ok(Report {
        command: "verify".into(),
        config: config.echo(),
        predictions,
        schedule_checks,
        verdicts,
        summary,
        wall_time_seconds: elapsed(timer),
    })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn probe_list(config: &ExperimentConfig) -> Vec<(usize, usize)> {
    let mut probes = Vec::new();
    for k in config.probed_layers() {
        for p in config.probed_neurons(k) {
            probes.push((k, p));
        }
    }
    probes
}

/// Accumulators for one block (and, after merging, for the whole run):
/// per probe the streams f, f^2, delta, delta^2, plus f_L and f_L^2.
struct TrialAccumulator {
    per_probe: Vec<[StreamingStats; 4]>,
    output: [StreamingStats; 2],
}

impl TrialAccumulator {
    fn new(probes: usize) -> Self {
        Self {
            per_probe: vec![[StreamingStats::new(); 4]; probes],
            output: [StreamingStats::new(); 2],
        }
    }

    fn merge(&self, other: &Self) -> Self {
        Self {
            per_probe: self
                .per_probe
                .iter()
                .zip(&other.per_probe)
                .map(|(a, b)| {
                    [
                        a[0].merge(&b[0]),
                        a[1].merge(&b[1]),
                        a[2].merge(&b[2]),
                        a[3].merge(&b[3]),
                    ]
                })
                .collect(),
            output: [
                self.output[0].merge(&other.output[0]),
                self.output[1].merge(&other.output[1]),
            ],
        }
    }
}

fn run_block(
    shape: &NetworkShape,
    sched: &InitSchedule,
    x: &[f64],
    master_seed: u64,
    range: std::ops::Range<u64>,
    probes: &[(usize, usize)],
) -> Result<TrialAccumulator, Error> {
    let mut acc = TrialAccumulator::new(probes.len());
    for trial in range {
        let seed = rng::derive_seed(master_seed, trial);
        let fail = |source: stats::Error| Error::Trial {
            trial,
            seed,
            source,
        };
        let weights = sample_weights(shape, sched, seed);
        let trace = forward(&weights, x)?;
        let deltas = output_gradient_full(&weights, &trace);
        for (slot, &(k, p)) in acc.per_probe.iter_mut().zip(probes) {
            let f = trace.activation(k)[p - 1];
            let d = deltas[k - 1][p - 1];
            slot[0].push(f).map_err(fail)?;
            slot[1].push(f * f).map_err(fail)?;
            slot[2].push(d).map_err(fail)?;
            slot[3].push(d * d).map_err(fail)?;
        }
        let out = trace.output();
        acc.output[0].push(out).map_err(fail)?;
        acc.output[1].push(out * out).map_err(fail)?;
    }
    Ok(acc)
}

fn run_trials(
    shape: &NetworkShape,
    sched: &InitSchedule,
    x: &[f64],
    config: &ExperimentConfig,
    probes: &[(usize, usize)],
) -> Result<TrialAccumulator, Error> {
    let trials = config.trials;
    let blocks = trials.div_ceil(TRIAL_BLOCK);
    let mut results: Vec<Option<Result<TrialAccumulator, Error>>> =
        (0..blocks).map(|_| None).collect();

    let block_range = |b: u64| (b * TRIAL_BLOCK)..((b + 1) * TRIAL_BLOCK).min(trials);

    if config.workers <= 1 {
        for b in 0..blocks {
            results[b as usize] = Some(run_block(
                shape,
                sched,
                x,
                config.seed,
                block_range(b),
                probes,
            ));
        }
    } else {
        let next = AtomicU64::new(0);
        let slots = Mutex::new(&mut results);
        std::thread::scope(|scope| {
            for _ in 0..config.workers {
                scope.spawn(|| loop {
                    let b = next.fetch_add(1, Ordering::Relaxed);
                    if b >= blocks {
                        break;
                    }
                    let out = run_block(shape, sched, x, config.seed, block_range(b), probes);
                    slots.lock().expect("poisoned")[b as usize] = Some(out);
                });
            }
        });
    }

    // Merge in block order: identical result for every worker count.
    let mut merged = TrialAccumulator::new(probes.len());
    for slot in results {
        let block = slot.expect("all blocks scheduled")?;
        merged = merged.merge(&block);
    }
    Ok(merged)
}

/// Configuration of the bound-sweep command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsConfig {
    pub n_max: u64,
    pub i_max: u64,
    pub t_samples: u64,
    pub seed: u64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            n_max: 10_000,
            i_max: 10_000,
            t_samples: 100_000,
            seed: 42,
        }
    }
}

/// Sweep the binomial-sum envelope, the Gamma-ratio sandwich, and the scalar
/// sqrt inequality; one verdict row per inequality family, recording the
/// violation count and the smallest observed margin.
pub fn run_bounds(bounds: &BoundsConfig) -> Result<Report, Error> {
    let timer = start_timer();
    if bounds.n_max == 0 || bounds.i_max == 0 {
        return Err(ConfigError {
            problems: vec!["bounds: n_max and i_max must be at least 1".into()],
        }
        .into());
    }

    struct Check {
        label: &'static str,
        violations: u64,
        checked: u64,
        min_margin: f64,
        worst: u64,
    }
    impl Check {
        fn new(label: &'static str) -> Self {
            Self {
                label,
                violations: 0,
                checked: 0,
                min_margin: f64::INFINITY,
                worst: 0,
            }
        }
        fn record(&mut self, index: u64, margin: f64) {
            self.checked += 1;
            if margin < 0.0 {
                self.violations += 1;
            }
            if margin < self.min_margin {
                self.min_margin = margin;
                self.worst = index;
            }
        }
        fn into_row(self) -> VerdictRow {
            VerdictRow {
                label: self.label.to_string(),
                k: None,
                p: None,
                predicted: 0.0,
                estimated: self.violations as f64,
                std_error: 0.0,
                z_score: 0.0,
                pass: self.violations == 0,
                n_trials: self.checked,
                lo: None,
                hi: None,
                min_margin: Some(self.min_margin),
                worst_index: Some(self.worst),
            }
        }
    }

    // Margins are log2 ratios (bound satisfied iff margin >= 0), so the same
    // comparison covers both the raw and the log2-scaled representations.
    let mut a_lower = Check::new("A_n above sqrt envelope");
    let mut a_le_b = Check::new("A_n <= B_n");
    let mut b_upper = Check::new("B_n below sqrt envelope");
    for n in 1..=bounds.n_max {
        let pair = crate::combinatorics::BinomialSumPair::new(n)?;
        let (la, lb) = (pair.a.log2_value(), pair.b.log2_value());
        match crate::combinatorics::sum_lower_bound_log2(n) {
            // Non-positive bound: vacuously satisfied.
            None => a_lower.record(n, f64::INFINITY),
            Some(lo) => a_lower.record(n, la - lo),
        }
        a_le_b.record(n, lb - la);
        b_upper.record(n, crate::combinatorics::sum_upper_bound_log2(n) - lb);
    }

    let mut g_lower = Check::new("gautschi ratio above sqrt(i-1)");
    let mut g_upper = Check::new("gautschi ratio below sqrt(i+1)");
    for i in 1..=bounds.i_max {
        let r = crate::combinatorics::gautschi_ratio(i)?;
        let fi = i as f64;
        let lower = if i == 1 {
            f64::INFINITY // sqrt(0) bound is vacuous
        } else {
            r.log2() - 0.5 * (fi - 1.0).log2()
        };
        g_lower.record(i, lower);
        g_upper.record(i, 0.5 * (fi + 1.0).log2() - r.log2());
    }

    // Pointwise scalar inequality behind the lower envelope, on sampled t.
    let mut sqrt_ineq = Check::new("sqrt(t) >= (3t - t^2)/2 on [0,10]");
    for idx in 0..bounds.t_samples {
        let t = 10.0 * rng::unit_uniform(bounds.seed, 0x741, idx);
        sqrt_ineq.record(idx, t.sqrt() - (3.0 * t - t * t) / 2.0);
    }

    let verdicts: Vec<VerdictRow> = [a_lower, a_le_b, b_upper, g_lower, g_upper, sqrt_ineq]
        .into_iter()
        .map(Check::into_row)
        .collect();
    let summary = Summary::from_verdicts(&verdicts);
    Ok(Report {
        command: "bounds".into(),
        config: vec![
            ("n_max".into(), bounds.n_max.to_string()),
            ("i_max".into(), bounds.i_max.to_string()),
            ("t_samples".into(), bounds.t_samples.to_string()),
            ("seed".into(), bounds.seed.to_string()),
        ],
        predictions: Vec::new(),
        schedule_checks: Vec::new(),
        verdicts,
        summary,
        wall_time_seconds: elapsed(timer),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScheduleSpec;
    use crate::moments::NetworkShape;

    fn base_config(shape: &[usize], trials: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(NetworkShape::new(shape.to_vec()).unwrap());
        c.trials = trials;
        c
    }

    #[test]
    fn predict_report_structure() {
        let mut c = base_config(&[4, 8, 8, 1], 1000);
        c.schedule = ScheduleSpec::FanIn;
        let report = run_predict(&c).unwrap();
        assert_eq!(report.predictions.len(), 2);
        assert_eq!(report.schedule_checks.len(), 1);
        assert!(report.verdicts.is_empty());
        assert!(report.summary.all_pass);
        assert!((report.predictions[0].second_moment - 0.25).abs() < 1e-13);
    }

    #[test]
    fn verify_passes_on_honest_schedule() {
        let mut c = base_config(&[4, 8, 8, 1], 4000);
        c.seed = 7;
        let report = run_verify(&c).unwrap();
        // 2 layers x 2 neurons x 6 tests + 2 layers x 2 symmetry + 2 output.
        assert_eq!(report.verdicts.len(), 2 * 2 * 6 + 2 * 2 + 2);
        assert!(
            report.summary.all_pass,
            "failed: {:?}",
            report
                .verdicts
                .iter()
                .filter(|v| !v.pass)
                .map(|v| (&v.label, v.k, v.p, v.z_score))
                .collect::<Vec<_>>()
        );
        // Every probed (k,p) appears exactly once per tested quantity.
        for label in ["mean(f)", "mean(f^2)", "mean(delta^2)"] {
            let mut seen: Vec<(usize, usize)> = report
                .verdicts
                .iter()
                .filter(|v| v.label == label)
                .map(|v| (v.k.unwrap(), v.p.unwrap()))
                .collect();
            seen.sort_unstable();
            assert_eq!(seen, vec![(1, 1), (1, 2), (2, 1), (2, 2)], "{label}");
        }
    }

    #[test]
    fn verify_detects_wrong_predictions() {
        let mut c = base_config(&[4, 8, 8, 1], 20_000);
        c.seed = 11;
        let shape = c.shape.clone();
        let mut betas = InitSchedule::fan_in(&shape).betas().to_vec();
        betas[0] *= 1.1;
        let perturbed = InitSchedule::custom(&shape, betas).unwrap();
        let report = verify_against(&c, Some(&perturbed)).unwrap();
        assert!(!report.summary.all_pass);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut c1 = base_config(&[3, 6, 5, 1], 2500);
        c1.seed = 19;
        let mut c4 = c1.clone();
        c4.workers = 4;
        let (mut r1, mut r4) = (run_verify(&c1).unwrap(), run_verify(&c4).unwrap());
        r1.wall_time_seconds = None;
        r4.wall_time_seconds = None;
        // The config echo records the worker count; blank it before comparing.
        let scrub = |r: &mut Report| {
            r.config.retain(|(k, _)| k != "workers");
        };
        scrub(&mut r1);
        scrub(&mut r4);
        assert_eq!(r1.to_json(), r4.to_json());
    }

    #[test]
    fn bounds_sweep_is_clean_at_desk_scale() {
        let report = run_bounds(&BoundsConfig {
            n_max: 400,
            i_max: 400,
            t_samples: 10_000,
            seed: 3,
        })
        .unwrap();
        assert_eq!(report.verdicts.len(), 6);
        assert!(report.summary.all_pass);
        for v in &report.verdicts {
            assert_eq!(v.estimated, 0.0, "{} had violations", v.label);
            assert!(v.min_margin.is_some());
        }
    }

    #[test]
    fn trial_failures_carry_the_seed() {
        // Force a non-finite sample by overflowing the forward pass: widths
        // are fine but the input is astronomically large.
        let mut c = base_config(&[2, 4, 1], 200);
        c.input = crate::config::InputSpec::Vector(vec![1e308, 1e308]);
        match run_verify(&c) {
            Err(Error::Trial { trial, seed, .. }) => {
                assert_eq!(seed, rng::derive_seed(c.seed, trial));
            }
            other => panic!("expected a trial failure, got {other:?}"),
        }
    }
}
