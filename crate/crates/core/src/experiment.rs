//! Experiment configuration, dispatch and result serialization for the `lab`
//! command-line tool.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::capacity::{estimate_capacity_lb, mutual_info_flat};
use crate::channel::{apply_channel, sample_awgn, ChannelRealization, PowerProfile, Signal};
use crate::clt::{
    supnorm_to_gaussian, GaussianTarget, TriangularArraySpec, Window, DEFAULT_SUPNORM_BINS,
};
use crate::delocalisation::{
    levy_concentration_grid, sharpness_check, threefold_log_singularity, verify_quadratic_bound,
    weighted_circle_sum_sampler, SearchSpec, WeightVector, ANNULUS_WIDTH_FACTOR,
};
use crate::error::{LabError, Result};
use crate::fourier_bessel::{bessel_j0, ASYMPTOTIC_AMPLITUDE};
use crate::rng::{map_trials, Streams};
use crate::stats::{mean_and_sd, Z95};

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
/// The annulus estimator needs at least this many draws.
pub const DEFAULT_CONVOLUTION_SAMPLES: usize = 10_000_000;

/// The experiments the CLI can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Capacity,
    Concentration,
    Quadratic,
    Sharpness,
    ConvolutionDensity,
    Bessel,
    Clt,
    ChannelDemo,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Capacity,
        ExperimentKind::Concentration,
        ExperimentKind::Quadratic,
        ExperimentKind::Sharpness,
        ExperimentKind::ConvolutionDensity,
        ExperimentKind::Bessel,
        ExperimentKind::Clt,
        ExperimentKind::ChannelDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::Quadratic => "quadratic",
            ExperimentKind::Sharpness => "sharpness",
            ExperimentKind::ConvolutionDensity => "convolution-density",
            ExperimentKind::Bessel => "bessel",
            ExperimentKind::Clt => "clt",
            ExperimentKind::ChannelDemo => "channel-demo",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Where the tap magnitudes come from.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSpec {
    Preset(String),
    Explicit(Vec<f64>),
}

impl ProfileSpec {
    pub fn label(&self) -> String {
        match self {
            ProfileSpec::Preset(name) => name.clone(),
            ProfileSpec::Explicit(c) => format!("custom[{}]", c.len()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Validated experiment configuration with defaults applied.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: Option<usize>,
    pub snr: Option<f64>,
    pub trials: usize,
    pub samples: usize,
    pub eps: Option<Vec<f64>>,
    pub profile: ProfileSpec,
    pub epsilon0: Option<f64>,
    pub seed: u64,
    /// True when no seed was supplied and one was generated.
    pub seed_generated: bool,
    pub n_schedule: Option<Vec<usize>>,
    pub radii: Option<Vec<f64>>,
    pub bins: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

const KNOWN_FIELDS: [&str; 15] = [
    "experiment",
    "N",
    "P",
    "trials",
    "samples",
    "eps",
    "profile",
    "epsilon0",
    "seed",
    "n_schedule",
    "radii",
    "r",
    "bins",
    "out",
    "format",
];

/// Parses a JSON configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| LabError::parse("$", e.to_string()))?;
    parse_config_value(value)
}

/// Validates a JSON object (file contents merged with CLI flags).
pub fn parse_config_value(value: Value) -> Result<ExperimentConfig> {
    let Value::Object(map) = value else {
        return Err(LabError::parse("$", "configuration must be a JSON object"));
    };
    if let Some(key) = map.keys().find(|k| !KNOWN_FIELDS.contains(&k.as_str())) {
        return Err(LabError::parse(key.as_str(), "unknown field"));
    }
    let experiment = match map.get("experiment") {
        Some(Value::String(s)) => ExperimentKind::from_name(s)
            .ok_or_else(|| LabError::parse("experiment", format!("unknown experiment `{s}`")))?,
        Some(_) => return Err(LabError::parse("experiment", "expected a string")),
        None => return Err(LabError::parse("experiment", "missing required field")),
    };

    let n = opt_usize(&map, "N")?;
    let snr = opt_f64(&map, "P")?;
    let trials = opt_usize(&map, "trials")?;
    let samples = opt_usize(&map, "samples")?;
    let eps = opt_f64_list(&map, "eps")?;
    let epsilon0 = opt_f64(&map, "epsilon0")?;
    let seed = opt_u64(&map, "seed")?;
    let n_schedule = opt_usize_list(&map, "n_schedule")?;
    let radii = match opt_f64_list(&map, "radii")? {
        Some(r) => Some(r),
        None => opt_f64_list(&map, "r")?,
    };
    let bins = opt_usize(&map, "bins")?;
    let profile = match map.get("profile") {
        None => ProfileSpec::Preset("flat".into()),
        Some(Value::String(s)) => ProfileSpec::Preset(s.clone()),
        Some(Value::Array(_)) => {
            ProfileSpec::Explicit(opt_f64_list(&map, "profile")?.expect("array present"))
        }
        Some(_) => {
            return Err(LabError::parse(
                "profile",
                "expected a preset name or an array",
            ))
        }
    };
    let out = match map.get("out") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(LabError::parse("out", "expected a path string")),
    };
    let format = match map.get("format") {
        None => OutputFormat::Csv,
        Some(Value::String(s)) if s == "csv" => OutputFormat::Csv,
        Some(Value::String(s)) if s == "json" => OutputFormat::Json,
        Some(_) => return Err(LabError::parse("format", "expected \"csv\" or \"json\"")),
    };

    // Range checks on supplied values come before presence checks so the
    // offending field is reported first.
    if let Some(p) = snr {
        if !(p > 0.0 && p.is_finite()) {
            return Err(LabError::parse("P", format!("must be positive, got {p}")));
        }
    }
    if n == Some(0) {
        return Err(LabError::parse("N", "must be at least 1"));
    }
    if trials.is_some_and(|t| t < 2) {
        return Err(LabError::parse("trials", "must be at least 2"));
    }
    if samples == Some(0) {
        return Err(LabError::parse("samples", "must be positive"));
    }
    if let Some(e) = eps
        .as_ref()
        .and_then(|v| v.iter().find(|e| !(**e > 0.0 && e.is_finite())))
    {
        return Err(LabError::parse(
            "eps",
            format!("entries must be positive, got {e}"),
        ));
    }
    if eps.as_ref().is_some_and(|v| v.is_empty()) {
        return Err(LabError::parse("eps", "must not be empty"));
    }
    if let Some(e0) = epsilon0 {
        if !(e0 > 0.0 && e0 < 1.0) {
            return Err(LabError::parse(
                "epsilon0",
                format!("must lie in (0, 1), got {e0}"),
            ));
        }
    }
    if n_schedule
        .as_ref()
        .is_some_and(|s| s.is_empty() || s.contains(&0))
    {
        return Err(LabError::parse("n_schedule", "entries must be positive"));
    }
    if bins == Some(0) {
        return Err(LabError::parse("bins", "must be positive"));
    }

    let explicit_profile = matches!(profile, ProfileSpec::Explicit(_));
    match experiment {
        ExperimentKind::Capacity | ExperimentKind::ChannelDemo => {
            if experiment == ExperimentKind::Capacity && snr.is_none() {
                return Err(LabError::parse("P", "missing required field"));
            }
            if n.is_none() && !explicit_profile {
                return Err(LabError::parse("N", "missing required field"));
            }
        }
        ExperimentKind::Concentration => {
            if n.is_none() && !explicit_profile {
                return Err(LabError::parse("N", "missing required field"));
            }
        }
        ExperimentKind::Quadratic => {
            if epsilon0.is_none() {
                return Err(LabError::parse("epsilon0", "missing required field"));
            }
            if n.is_none() && !explicit_profile {
                return Err(LabError::parse("N", "missing required field"));
            }
        }
        ExperimentKind::Sharpness
        | ExperimentKind::ConvolutionDensity
        | ExperimentKind::Bessel
        | ExperimentKind::Clt => {}
    }

    let default_samples = if experiment == ExperimentKind::ConvolutionDensity {
        DEFAULT_CONVOLUTION_SAMPLES
    } else {
        DEFAULT_SAMPLES
    };
    let (seed, seed_generated) = match seed {
        Some(s) => (s, false),
        None => (generated_seed(), true),
    };
    Ok(ExperimentConfig {
        experiment,
        n,
        snr,
        trials: trials.unwrap_or(DEFAULT_TRIALS),
        samples: samples.unwrap_or(default_samples),
        eps,
        profile,
        epsilon0,
        seed,
        seed_generated,
        n_schedule,
        radii,
        bins: bins.unwrap_or(DEFAULT_SUPNORM_BINS),
        out,
        format,
    })
}

fn generated_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    // splitmix64 finalizer
    let mut z = nanos.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn opt_f64(map: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| LabError::parse(key, format!("expected a number, got {v}"))),
    }
}

fn opt_u64(map: &Map<String, Value>, key: &str) -> Result<Option<u64>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_u64().map(Some).ok_or_else(|| {
            LabError::parse(key, format!("expected a nonnegative integer, got {v}"))
        }),
    }
}

fn opt_usize(map: &Map<String, Value>, key: &str) -> Result<Option<usize>> {
    Ok(opt_u64(map, key)?.map(|v| v as usize))
}

fn opt_f64_list(map: &Map<String, Value>, key: &str) -> Result<Option<Vec<f64>>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_f64().ok_or_else(|| {
                    LabError::parse(format!("{key}[{i}]"), format!("expected a number, got {v}"))
                })
            })
            .collect::<Result<Vec<f64>>>()
            .map(Some),
        Some(v) => Err(LabError::parse(
            key,
            format!("expected an array of numbers, got {v}"),
        )),
    }
}

fn opt_usize_list(map: &Map<String, Value>, key: &str) -> Result<Option<Vec<usize>>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_u64().map(|x| x as usize).ok_or_else(|| {
                    LabError::parse(
                        format!("{key}[{i}]"),
                        format!("expected a nonnegative integer, got {v}"),
                    )
                })
            })
            .collect::<Result<Vec<usize>>>()
            .map(Some),
        Some(v) => Err(LabError::parse(
            key,
            format!("expected an array of integers, got {v}"),
        )),
    }
}

/// One emitted metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    /// Parameter echo, in a fixed per-experiment order.
    pub params: Vec<(String, String)>,
    pub metric: String,
    pub value: f64,
    /// Half-width of the 95% interval; `None` for deterministic values.
    pub ci_radius: Option<f64>,
    pub seed: u64,
    pub wall_time_s: f64,
}

struct RecordBuilder<'a> {
    experiment: &'a str,
    seed: u64,
    started: Instant,
    records: Vec<ResultRecord>,
}

impl<'a> RecordBuilder<'a> {
    fn new(experiment: &'a str, seed: u64) -> Self {
        RecordBuilder {
            experiment,
            seed,
            started: Instant::now(),
            records: Vec::new(),
        }
    }

    fn push(&mut self, params: &[(&str, String)], metric: &str, value: f64, ci: Option<f64>) {
        self.records.push(ResultRecord {
            experiment: self.experiment.to_string(),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            metric: metric.to_string(),
            value,
            ci_radius: ci,
            seed: self.seed,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        });
    }
}

fn resolve_profile(config: &ExperimentConfig) -> Result<PowerProfile> {
    match &config.profile {
        ProfileSpec::Explicit(c) => PowerProfile::normalized(c.clone()),
        ProfileSpec::Preset(name) => {
            let n = config
                .n
                .ok_or_else(|| LabError::parse("N", "missing required field"))?;
            PowerProfile::preset(name, n)
        }
    }
}

fn default_grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| start + step * (i - 1) as f64)
        .map(|v| (v * 1e9).round() / 1e9)
        .collect()
}

/// Runs the configured experiment; output depends only on `(config, seed)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let name = config.experiment.name();
    run_inner(config).map_err(|e| LabError::Experiment {
        context: format!("experiment `{name}`"),
        source: Box::new(e),
    })
}

fn run_inner(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let name = config.experiment.name();
    let streams = Streams::new(config.seed, name);
    let mut out = RecordBuilder::new(name, config.seed);
    match config.experiment {
        ExperimentKind::Capacity => {
            let profile = resolve_profile(config)?;
            let snr = config.snr.expect("validated");
            let est = estimate_capacity_lb(&profile, snr, config.trials, &streams)?;
            out.push(
                &[
                    ("profile_name", config.profile.label()),
                    ("N", profile.len().to_string()),
                    ("P", fmt_num(snr)),
                    ("trials", config.trials.to_string()),
                ],
                "mean_rate",
                est.mean_rate,
                Some(est.ci_radius),
            );
        }
        ExperimentKind::Concentration => {
            let profile = resolve_profile(config)?;
            let weights = WeightVector::normalized(profile.coefficients().to_vec())?;
            let eps = config.eps.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2]);
            let sampler = weighted_circle_sum_sampler(&weights);
            let ests = levy_concentration_grid(
                &sampler,
                &eps,
                config.samples,
                &SearchSpec::default(),
                &streams,
            )?;
            for e in ests {
                out.push(
                    &concentration_params(weights.len(), None, &e, config.samples),
                    "concentration",
                    e.value,
                    Some(e.ci_radius),
                );
            }
        }
        ExperimentKind::Quadratic => {
            let profile = resolve_profile(config)?;
            let weights = WeightVector::normalized(profile.coefficients().to_vec())?;
            let e0 = config.epsilon0.expect("validated");
            let eps = config
                .eps
                .clone()
                .unwrap_or_else(|| default_grid(0.02, 0.02, 15));
            let bound = verify_quadratic_bound(&weights, e0, &eps, config.samples, &streams)?;
            for e in &bound.estimates {
                let e2 = e.epsilon * e.epsilon;
                out.push(
                    &concentration_params(weights.len(), Some(e0), e, config.samples),
                    "concentration_over_eps2",
                    e.value / e2,
                    Some(e.ci_radius / e2),
                );
            }
            let best = bound
                .estimates
                .iter()
                .find(|e| e.epsilon == bound.argmax_epsilon)
                .expect("argmax is on the grid");
            out.push(
                &concentration_params(weights.len(), Some(e0), best, config.samples),
                "b_hat",
                bound.max_ratio,
                Some(bound.ci_radius),
            );
        }
        ExperimentKind::Sharpness => {
            let eps = config
                .eps
                .clone()
                .unwrap_or_else(|| default_grid(0.01, 0.01, 20));
            let report = sharpness_check(&eps, config.samples, &streams)?;
            for b in &report.balls {
                let params = [
                    ("epsilon", fmt_num(b.epsilon)),
                    ("samples", config.samples.to_string()),
                ];
                out.push(
                    &params,
                    "small_ball_probability",
                    b.probability,
                    Some(Z95 * b.std_error),
                );
                out.push(
                    &params,
                    "probability_over_eps",
                    b.probability / b.epsilon,
                    Some(Z95 * b.std_error / b.epsilon),
                );
            }
            out.push(
                &[
                    ("epsilon", fmt_num(report.argmin_epsilon)),
                    ("samples", config.samples.to_string()),
                ],
                "k_hat",
                report.min_ratio,
                Some(report.ci_radius),
            );
        }
        ExperimentKind::ConvolutionDensity => {
            let radii = config
                .radii
                .clone()
                .unwrap_or_else(|| vec![0.9, 0.95, 0.99]);
            let shells =
                threefold_log_singularity(&radii, config.samples, ANNULUS_WIDTH_FACTOR, &streams)?;
            for s in shells {
                let params = [
                    ("radius", fmt_num(s.radius)),
                    ("width", fmt_num(s.width)),
                    ("samples", config.samples.to_string()),
                ];
                out.push(&params, "density", s.density, Some(Z95 * s.std_error));
                let scale = (1.0 - s.radius).abs().ln().abs();
                out.push(
                    &params,
                    "density_over_log",
                    s.log_ratio,
                    Some(Z95 * s.std_error / scale),
                );
            }
        }
        ExperimentKind::Bessel => {
            let radii = config.radii.clone().unwrap_or_else(|| {
                (0..=14)
                    .map(|i| 10f64.powf(-3.0 + 0.5 * i as f64))
                    .collect()
            });
            for r in radii {
                let j0 = bessel_j0(r)?;
                let envelope = if r > 0.0 {
                    (ASYMPTOTIC_AMPLITUDE / r.sqrt()).min(1.0)
                } else {
                    1.0
                };
                out.push(
                    &[("r", fmt_num(r)), ("envelope", fmt_num(envelope))],
                    "j0",
                    j0,
                    None,
                );
            }
        }
        ExperimentKind::Clt => {
            let schedule = config
                .n_schedule
                .clone()
                .unwrap_or_else(|| vec![8, 64, 512]);
            let target = GaussianTarget::isotropic(2, 0.5)?;
            let window = Window::standard(&target);
            for n in schedule {
                let spec = TriangularArraySpec::circle_flat(n)?;
                let res = supnorm_to_gaussian(
                    &spec,
                    &target,
                    config.samples,
                    &window,
                    config.bins,
                    &streams.child(&format!("n{n}")),
                )?;
                out.push(
                    &[
                        ("n", n.to_string()),
                        ("samples", config.samples.to_string()),
                        ("bins", config.bins.to_string()),
                    ],
                    "supnorm_distance",
                    res.distance,
                    Some(Z95 * res.std_error),
                );
            }
        }
        ExperimentKind::ChannelDemo => {
            let profile = resolve_profile(config)?;
            let snr = config.snr.unwrap_or(1.0);
            let n = profile.len();
            let per_trial = map_trials(&streams, config.trials, |rng, _| -> Result<[f64; 3]> {
                let real = ChannelRealization::sample(profile.clone(), rng)?;
                let amp = snr.sqrt();
                let input = Signal::new(
                    (0..n)
                        .map(|m| {
                            let q = (m % 4) as f64 * std::f64::consts::FRAC_PI_2
                                + std::f64::consts::FRAC_PI_4;
                            Complex64::from_polar(amp, q)
                        })
                        .collect(),
                );
                let noise = sample_awgn(n, rng)?;
                let y = apply_channel(&real, &input, &noise)?;
                let out_power = y.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
                let min_abs = real
                    .eigenvalues()
                    .iter()
                    .map(|l| l.norm())
                    .fold(f64::INFINITY, f64::min);
                Ok([
                    mutual_info_flat(real.eigenvalues(), snr) / n as f64,
                    min_abs,
                    out_power,
                ])
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let params = [
                ("profile_name", config.profile.label()),
                ("N", n.to_string()),
                ("P", fmt_num(snr)),
                ("trials", config.trials.to_string()),
            ];
            for (j, metric) in ["rate", "min_abs_eigenvalue", "output_power"]
                .iter()
                .enumerate()
            {
                let v: Vec<f64> = per_trial.iter().map(|t| t[j]).collect();
                let (m, sd) = mean_and_sd(&v);
                out.push(&params, metric, m, Some(Z95 * sd / (v.len() as f64).sqrt()));
            }
        }
    }
    Ok(out.records)
}

fn concentration_params(
    n: usize,
    epsilon0: Option<f64>,
    e: &crate::delocalisation::ConcentrationEstimate,
    samples: usize,
) -> Vec<(&'static str, String)> {
    vec![
        ("N", n.to_string()),
        ("epsilon0", epsilon0.map(fmt_num).unwrap_or_default()),
        ("epsilon", fmt_num(e.epsilon)),
        ("argmax_x", fmt_num(e.argmax_shift[0])),
        ("argmax_y", fmt_num(e.argmax_shift[1])),
        ("samples", samples.to_string()),
    ]
}

/// Rounds to 12 significant digits and prints the shortest representation
/// of the rounded value.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{}", round_sig(x))
}

fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Writes records as CSV (header plus one row each) or as a JSON array.
pub fn emit(records: &[ResultRecord], format: OutputFormat, sink: &mut dyn Write) -> Result<()> {
    let first = records
        .first()
        .ok_or_else(|| LabError::Precondition("no records to emit".into()))?;
    match format {
        OutputFormat::Csv => {
            let mut header = vec!["experiment".to_string()];
            header.extend(first.params.iter().map(|(k, _)| k.clone()));
            header
                .extend(["metric", "value", "ci_radius", "seed", "wall_time_s"].map(String::from));
            writeln!(sink, "{}", header.join(","))?;
            for r in records {
                let mut row = vec![csv_field(&r.experiment)];
                row.extend(r.params.iter().map(|(_, v)| csv_field(v)));
                row.push(csv_field(&r.metric));
                row.push(fmt_num(r.value));
                row.push(r.ci_radius.map(fmt_num).unwrap_or_default());
                row.push(r.seed.to_string());
                row.push(fmt_num(r.wall_time_s));
                writeln!(sink, "{}", row.join(","))?;
            }
        }
        OutputFormat::Json => {
            let items: Vec<Value> = records
                .iter()
                .map(|r| {
                    let mut obj = Map::new();
                    obj.insert("experiment".into(), Value::String(r.experiment.clone()));
                    let params: Map<String, Value> = r
                        .params
                        .iter()
                        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                        .collect();
                    obj.insert("params".into(), Value::Object(params));
                    obj.insert("metric".into(), Value::String(r.metric.clone()));
                    obj.insert("value".into(), json_num(r.value));
                    obj.insert(
                        "ci_radius".into(),
                        r.ci_radius.map(json_num).unwrap_or(Value::Null),
                    );
                    obj.insert("seed".into(), Value::from(r.seed));
                    obj.insert("wall_time_s".into(), json_num(r.wall_time_s));
                    Value::Object(obj)
                })
                .collect();
            serde_json::to_writer_pretty(&mut *sink, &items)
                .map_err(|e| LabError::Io(std::io::Error::other(e)))?;
            writeln!(sink)?;
        }
    }
    Ok(())
}

fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig(x))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// [`emit`] to a file, or to stdout when `target` is `None`.
pub fn emit_to(
    records: &[ResultRecord],
    format: OutputFormat,
    target: Option<&Path>,
) -> Result<()> {
    match target {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            emit(records, format, &mut file)?;
            file.flush()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit(records, format, &mut lock)
        }
    }
}
