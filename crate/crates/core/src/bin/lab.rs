use std::path::PathBuf;
use std::process::ExitCode;

use circulant_lab::experiment::{emit_to, parse_config_value, run_experiment, ExperimentConfig};
use circulant_lab::LabError;
use clap::Parser;
use serde_json::{Map, Value};

/// Numerical experiments on random circulant channels.
#[derive(Parser, Debug)]
#[command(name = "lab", version)]
struct Cli {
    /// capacity | concentration | quadratic | sharpness | convolution-density | bessel | clt | channel-demo
    experiment: String,
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Block length N.
    #[arg(long = "n")]
    n: Option<u64>,
    /// Signal-to-noise ratio P.
    #[arg(long = "snr", allow_negative_numbers = true)]
    snr: Option<String>,
    /// Preset name (delta, flat, geometric(rho), sparse(k)) or a JSON file holding an array.
    #[arg(long)]
    profile: Option<String>,
    /// Comma-separated epsilon grid.
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon0: Option<String>,
    /// Comma-separated block lengths for the clt experiment.
    #[arg(long = "n-schedule")]
    n_schedule: Option<String>,
    /// Comma-separated radii (convolution-density, bessel).
    #[arg(long)]
    radii: Option<String>,
    /// Histogram bins per axis for the clt experiment.
    #[arg(long)]
    bins: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

fn number(field: &str, text: &str) -> Result<Value, LabError> {
    let x: f64 = text.trim().parse().map_err(|_| LabError::Parse {
        field: field.into(),
        message: format!("malformed number `{text}`"),
    })?;
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| LabError::Parse {
            field: field.into(),
            message: format!("non-finite number `{text}`"),
        })
}

fn list(field: &str, text: &str, integer: bool) -> Result<Value, LabError> {
    text.split(',')
        .enumerate()
        .map(|(i, item)| {
            let path = format!("{field}[{i}]");
            if integer {
                item.trim()
                    .parse::<u64>()
                    .map(Value::from)
                    .map_err(|_| LabError::Parse {
                        field: path,
                        message: format!("malformed integer `{item}`"),
                    })
            } else {
                number(&path, item)
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Value::Array)
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut map = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            match serde_json::from_str(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => {
                    return Err(LabError::Parse {
                        field: "$".into(),
                        message: "configuration must be a JSON object".into(),
                    })
                }
                Err(e) => {
                    return Err(LabError::Parse {
                        field: "$".into(),
                        message: e.to_string(),
                    })
                }
            }
        }
        None => Map::new(),
    };
    map.insert("experiment".into(), Value::String(cli.experiment.clone()));
    let ints = [
        ("seed", cli.seed),
        ("trials", cli.trials),
        ("samples", cli.samples),
        ("N", cli.n),
        ("bins", cli.bins),
    ];
    for (key, v) in ints {
        if let Some(v) = v {
            map.insert(key.into(), Value::from(v));
        }
    }
    if let Some(p) = &cli.snr {
        map.insert("P".into(), number("P", p)?);
    }
    if let Some(e) = &cli.epsilon0 {
        map.insert("epsilon0".into(), number("epsilon0", e)?);
    }
    if let Some(e) = &cli.eps {
        map.insert("eps".into(), list("eps", e, false)?);
    }
    if let Some(r) = &cli.radii {
        map.insert("radii".into(), list("radii", r, false)?);
    }
    if let Some(s) = &cli.n_schedule {
        map.insert("n_schedule".into(), list("n_schedule", s, true)?);
    }
    if let Some(p) = &cli.profile {
        let path = std::path::Path::new(p);
        let value = if path.is_file() {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<Value>(&text).map_err(|e| LabError::Parse {
                field: "profile".into(),
                message: e.to_string(),
            })?
        } else {
            Value::String(p.clone())
        };
        map.insert("profile".into(), value);
    }
    if let Some(o) = &cli.out {
        map.insert(
            "out".into(),
            Value::String(o.to_string_lossy().into_owned()),
        );
    }
    if let Some(f) = &cli.format {
        map.insert("format".into(), Value::String(f.clone()));
    }
    parse_config_value(Value::Object(map))
}

fn run(cli: &Cli) -> Result<(), LabError> {
    let config = build_config(cli)?;
    if config.seed_generated {
        eprintln!("seed: {}", config.seed);
    }
    let records = run_experiment(&config)?;
    emit_to(&records, config.format, config.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
