//! Config-file overlay and hyperparameter resolution.
//!
//! Precedence: command-line flag, then config file, then preset, then
//! built-in default. The resolved settings are echoed once on standard
//! error for auditability.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use mwe::trainer::{LambdaMode, TrainConfig};

use crate::TrainFlags;

/// Flat `key = value` file; `#` starts a comment. Keys are normalized so
/// `local-dim` and `local_dim` both work.
fn load_overlay(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value, got `{line}`", idx + 1))?;
        map.insert(key.trim().replace('-', "_"), value.trim().to_string());
    }
    Ok(map)
}

pub fn parse_lambda(s: &str) -> Result<LambdaMode> {
    match s {
        "alt" | "alternating" => Ok(LambdaMode::Alternating),
        _ => {
            let x = s
                .strip_prefix("fixed:")
                .ok_or_else(|| anyhow!("lambda must be `alt` or `fixed:<x>`, got `{s}`"))?
                .parse::<f64>()
                .map_err(|_| anyhow!("bad fixed lambda in `{s}`"))?;
            Ok(LambdaMode::Fixed(x))
        }
    }
}

fn lambda_label(mode: LambdaMode) -> String {
    match mode {
        LambdaMode::Alternating => "alt".to_string(),
        LambdaMode::Fixed(x) => format!("fixed:{x}"),
    }
}

pub struct Resolved {
    pub train: TrainConfig,
    pub min_count: u64,
    /// `(key, value)` pairs in a stable order, for the startup echo.
    pub effective: Vec<(String, String)>,
}

pub fn resolve(flags: &TrainFlags) -> Result<Resolved> {
    let overlay = match &flags.config {
        Some(path) => load_overlay(path)?,
        None => HashMap::new(),
    };
    let get = |key: &str| overlay.get(key).map(String::as_str);
    fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| anyhow!("config key `{key}`: cannot parse `{value}`"))
    }

    let preset = flags
        .preset
        .clone()
        .or_else(|| get("preset").map(str::to_string));
    let base = match preset.as_deref() {
        None => TrainConfig::default(),
        Some("desk") => TrainConfig::desk(),
        Some(other) => bail!("unknown preset `{other}` (available: desk)"),
    };

    let mut cfg = TrainConfig {
        verbose: true,
        ..base
    };
    macro_rules! setting {
        ($field:ident, $key:literal) => {
            if let Some(v) = flags.$field {
                cfg.$field = v;
            } else if let Some(raw) = get($key) {
                cfg.$field = parse($key, raw)?;
            }
        };
    }
    setting!(dim, "dim");
    setting!(local_dim, "local_dim");
    setting!(drift, "drift");
    setting!(scale_k, "scale_k");
    setting!(epochs, "epochs");
    setting!(eta0, "eta0");
    setting!(seed, "seed");

    if let Some(s) = &flags.lambda {
        cfg.lambda = parse_lambda(s)?;
    } else if let Some(raw) = get("lambda") {
        cfg.lambda = parse_lambda(raw)?;
    }

    cfg.workers = match (flags.workers, get("workers")) {
        (Some(w), _) => w,
        (None, Some(raw)) => parse("workers", raw)?,
        (None, None) => match std::env::var("MWE_THREADS") {
            Ok(v) => v
                .parse()
                .map_err(|_| anyhow!("MWE_THREADS must be a positive integer, got `{v}`"))?,
            Err(_) => cfg.workers,
        },
    };

    cfg.negative_exponent = if flags.neg_uniform || get("neg_uniform").map(|v| parse("neg_uniform", v)).transpose()?.unwrap_or(false) {
        0.0
    } else {
        cfg.negative_exponent
    };
    cfg.project_u_only = flags.project_u_only
        || get("project_u_only").map(|v| parse("project_u_only", v)).transpose()?.unwrap_or(false);
    cfg.count_cap = match (flags.count_cap, get("count_cap")) {
        (Some(c), _) => Some(c),
        (None, Some(raw)) => Some(parse("count_cap", raw)?),
        (None, None) => cfg.count_cap,
    };

    let min_count = match (flags.min_count, get("min_count")) {
        (Some(c), _) => c,
        (None, Some(raw)) => parse("min_count", raw)?,
        (None, None) => 5,
    };

    cfg.validate().map_err(|e| anyhow!("{e}"))?;

    let effective = vec![
        ("preset".into(), preset.unwrap_or_else(|| "none".into())),
        ("dim".into(), cfg.dim.to_string()),
        ("local_dim".into(), cfg.local_dim.to_string()),
        ("drift".into(), cfg.drift.to_string()),
        ("scale_k".into(), cfg.scale_k.to_string()),
        ("epochs".into(), cfg.epochs.to_string()),
        ("eta0".into(), cfg.eta0.to_string()),
        ("lambda".into(), lambda_label(cfg.lambda)),
        ("seed".into(), cfg.seed.to_string()),
        ("workers".into(), cfg.workers.to_string()),
        ("min_count".into(), min_count.to_string()),
        ("negative_exponent".into(), cfg.negative_exponent.to_string()),
        ("project_u_only".into(), cfg.project_u_only.to_string()),
        (
            "count_cap".into(),
            cfg.count_cap.map_or("none".into(), |c| c.to_string()),
        ),
    ];

    Ok(Resolved {
        train: cfg,
        min_count,
        effective,
    })
}

/// Prints each effective setting once, on standard error.
pub fn echo(effective: &[(String, String)]) {
    for (key, value) in effective {
        eprintln!("# {key}\t{value}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_config_beats_preset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("settings.conf");
        std::fs::write(&path, "# comment\ndim = 64\nlocal-dim = 8\nlambda = fixed:0.25\n").unwrap();
        let flags = TrainFlags {
            config: Some(path),
            preset: Some("desk".into()),
            dim: Some(16),
            ..TrainFlags::default()
        };
        let resolved = resolve(&flags).unwrap();
        assert_eq!(resolved.train.dim, 16); // flag wins
        assert_eq!(resolved.train.local_dim, 8); // config wins over preset
        assert_eq!(resolved.train.lambda, LambdaMode::Fixed(0.25));
        assert_eq!(resolved.train.epochs, 5); // untouched default
        assert_eq!(resolved.min_count, 5);
    }

    #[test]
    fn desk_preset_sets_dimensions() {
        let flags = TrainFlags {
            preset: Some("desk".into()),
            ..TrainFlags::default()
        };
        let resolved = resolve(&flags).unwrap();
        assert_eq!(resolved.train.dim, 32);
        assert_eq!(resolved.train.local_dim, 4);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let flags = TrainFlags {
            lambda: Some("sometimes".into()),
            ..TrainFlags::default()
        };
        assert!(resolve(&flags).is_err());

        let flags = TrainFlags {
            preset: Some("galactic".into()),
            ..TrainFlags::default()
        };
        assert!(resolve(&flags).is_err());
    }

    #[test]
    fn uniform_negatives_zero_the_exponent() {
        let flags = TrainFlags {
            neg_uniform: true,
            ..TrainFlags::default()
        };
        assert_eq!(resolve(&flags).unwrap().train.negative_exponent, 0.0);
    }

    #[test]
    fn mwe_threads_is_the_workers_fallback() {
        // set-and-restore; the flag still wins over the variable
        unsafe { std::env::set_var("MWE_THREADS", "3") };
        let from_env = resolve(&TrainFlags::default()).unwrap().train.workers;
        let from_flag = resolve(&TrainFlags {
            workers: Some(2),
            ..TrainFlags::default()
        })
        .unwrap()
        .train
        .workers;
        unsafe { std::env::remove_var("MWE_THREADS") };
        assert_eq!(from_env, 3);
        assert_eq!(from_flag, 2);
    }
}
