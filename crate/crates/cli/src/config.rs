use std::path::Path;

use serde::Deserialize;
use tva_core::UtilityParams;

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MINUTES: u32 = 1440;
pub const DEFAULT_RUNS: usize = 50;
pub const DEFAULT_RQ1_SAMPLES: usize = 100;
pub const DEFAULT_WINDOW: usize = 60;
pub const DEFAULT_REFIT_EVERY: usize = 0;

/// Optional settings read from `--config`. Flags override these; unset
/// fields fall back to built-in defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub minutes: Option<u32>,
    pub runs: Option<usize>,
    pub train_fraction: Option<f64>,
    pub rq1_samples: Option<usize>,
    pub horizon: Option<usize>,
    pub risk_margin: Option<f64>,
    pub tick_seconds: Option<f64>,
    pub window: Option<usize>,
    pub refit_every: Option<usize>,
    pub utility: Option<UtilityParams>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

/// First of flag, config value, default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick::<u8>(None, None, 3), 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"sed": 1}"#).is_err());
        let c: FileConfig = serde_json::from_str(r#"{"seed": 7, "horizon": 3}"#).unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.horizon, Some(3));
    }
}
