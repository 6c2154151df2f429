//! Flat run configuration: TOML file, then `--set key=value`, then the
//! common flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use selcascade::model::ModelConfig;
use selcascade::synthdata::GeneratorConfig;
use selcascade::training::{
    AugmentParams, BalanceMethod, ComponentPolicy, GdbParams, PdbParams, TrainConfig,
};
use serde::{Deserialize, Serialize};

/// Every key a command may read. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,

    pub data: Option<PathBuf>,
    pub val_data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub pts_out: Option<PathBuf>,

    /// `"68"`, `"34"`, `"19"` or a comma-separated list of landmark indices.
    pub patches: String,
    pub iterations: usize,
    pub patch_size: usize,
    pub base_resolution: usize,
    pub hidden: usize,
    pub success_threshold: f64,
    pub failure_threshold: f64,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay_points: Vec<f64>,
    pub decay_factor: f64,
    pub rect_width: f64,
    pub error_weight: f64,
    pub augment: bool,
    /// `"none"`, `"gdb"` or `"pdb"`.
    pub balance: String,
    /// Shape-PCA components for GDB; 0 keeps 95% of the variance.
    pub balance_components: usize,
    pub balance_max_count: usize,
    pub pdb_bins: usize,

    pub reps: usize,

    pub gen_count: usize,
    pub gen_face_size: f64,
    pub gen_rotation_deg: f64,
    pub gen_scale_jitter: f64,
    pub gen_shift: f64,
    pub gen_yaw: f64,
    pub gen_expression: f64,
    pub gen_shape_noise: f64,
    pub gen_extreme_fraction: f64,
    pub gen_extreme_rotation_deg: f64,
    pub gen_extreme_yaw: f64,
    pub gen_image_noise: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = ModelConfig::default();
        let train = TrainConfig::default();
        let gen = GeneratorConfig::default();
        Self {
            seed: 0,
            threads: 1,
            out: PathBuf::from("out"),
            data: None,
            val_data: None,
            model: None,
            image: None,
            pts_out: None,
            patches: "68".into(),
            iterations: model.iterations,
            patch_size: model.patch_size,
            base_resolution: model.base_resolution,
            hidden: model.hidden,
            success_threshold: model.success_threshold,
            failure_threshold: model.failure_threshold,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            decay_points: train.decay_points,
            decay_factor: train.decay_factor,
            rect_width: train.rect_width,
            error_weight: train.error_weight,
            augment: true,
            balance: "none".into(),
            balance_components: 0,
            balance_max_count: train.gdb.max_count,
            pdb_bins: train.pdb.bins,
            reps: 50,
            gen_count: gen.count,
            gen_face_size: gen.face_size,
            gen_rotation_deg: gen.rotation_deg,
            gen_scale_jitter: gen.scale_jitter,
            gen_shift: gen.shift,
            gen_yaw: gen.yaw,
            gen_expression: gen.expression,
            gen_shape_noise: gen.shape_noise,
            gen_extreme_fraction: gen.extreme_fraction,
            gen_extreme_rotation_deg: gen.extreme_rotation_deg,
            gen_extreme_yaw: gen.extreme_yaw,
            gen_image_noise: gen.image_noise,
        }
    }
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a
/// bare string so `--set balance=gdb` works without quotes.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    pub fn resolve(file: Option<&Path>, sets: &[String]) -> Result<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str::<toml::Table>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => toml::Table::new(),
        };
        for set in sets {
            let Some((key, value)) = set.split_once('=') else {
                bail!("--set expects key=value, got `{set}`");
            };
            table.insert(key.trim().to_string(), parse_value(value.trim()));
        }
        // `patches = 19` is as natural as `patches = "19"`
        if let Some(toml::Value::Integer(n)) = table.get("patches") {
            let text = n.to_string();
            table.insert("patches".into(), toml::Value::String(text));
        }
        let config: RunConfig = table.try_into().context("invalid configuration")?;
        if config.threads == 0 {
            bail!("threads must be at least 1");
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Writes `config.toml` into the output directory.
    pub fn write_snapshot(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("config.toml");
        std::fs::write(&path, self.to_toml()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let indices = match self.patches.trim() {
            "68" => ModelConfig::default().patch_indices,
            "34" => ModelConfig::face68_34().patch_indices,
            "19" => ModelConfig::face68_19().patch_indices,
            list => list
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("patches must be 68, 34, 19 or an index list, got `{list}`"))?,
        };
        let config = ModelConfig {
            iterations: self.iterations,
            patch_size: self.patch_size,
            base_resolution: self.base_resolution,
            hidden: self.hidden,
            success_threshold: self.success_threshold,
            failure_threshold: self.failure_threshold,
            ..ModelConfig::face68(indices)
        };
        config.validate()?;
        Ok(config)
    }

    pub fn balance_method(&self) -> Result<Option<BalanceMethod>> {
        Ok(match self.balance.as_str() {
            "none" => None,
            "gdb" => Some(BalanceMethod::Gdb),
            "pdb" => Some(BalanceMethod::Pdb),
            other => bail!("balance must be none, gdb or pdb, got `{other}`"),
        })
    }

    pub fn gdb_params(&self) -> GdbParams {
        GdbParams {
            components: match self.balance_components {
                0 => ComponentPolicy::default(),
                k => ComponentPolicy::Fixed(k),
            },
            max_count: self.balance_max_count,
            ..GdbParams::default()
        }
    }

    pub fn pdb_params(&self) -> PdbParams {
        PdbParams {
            bins: self.pdb_bins,
            max_count: self.balance_max_count,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let config = TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            decay_points: self.decay_points.clone(),
            decay_factor: self.decay_factor,
            rect_width: self.rect_width,
            error_weight: self.error_weight,
            augment: if self.augment {
                AugmentParams::default()
            } else {
                AugmentParams::disabled()
            },
            balance: self.balance_method()?,
            gdb: self.gdb_params(),
            pdb: self.pdb_params(),
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn generator_config(&self) -> Result<GeneratorConfig> {
        let config = GeneratorConfig {
            count: self.gen_count,
            seed: self.seed,
            base_resolution: self.base_resolution,
            levels: self.iterations,
            face_size: self.gen_face_size,
            rotation_deg: self.gen_rotation_deg,
            scale_jitter: self.gen_scale_jitter,
            shift: self.gen_shift,
            yaw: self.gen_yaw,
            expression: self.gen_expression,
            shape_noise: self.gen_shape_noise,
            extreme_fraction: self.gen_extreme_fraction,
            extreme_rotation_deg: self.gen_extreme_rotation_deg,
            extreme_yaw: self.gen_extreme_yaw,
            image_noise: self.gen_image_noise,
            ..GeneratorConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_in_order() {
        let c = RunConfig::resolve(None, &["epochs=3".into(), "balance=gdb".into(), "patches=19".into()]).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.balance, "gdb");
        assert_eq!(c.model_config().unwrap().patches(), 19);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::resolve(None, &["epoch=3".into()]).is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let c = RunConfig {
            success_threshold: f64::INFINITY,
            data: Some("d".into()),
            ..RunConfig::default()
        };
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }
}
