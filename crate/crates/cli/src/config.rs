//! Run configuration: one JSON document with a section per concern. Every
//! field can be overridden from the command line with `--section.field`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use loscov_core::{
    BlockageParams, HeightProfile, LambdaConvention, PathLossParams,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Blocking,
    Assoc,
    Regular,
    Joint,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Blocking => "blocking",
            Command::Assoc => "assoc",
            Command::Regular => "regular",
            Command::Joint => "joint",
            Command::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "blocking" => Command::Blocking,
            "assoc" => Command::Assoc,
            "regular" => Command::Regular,
            "joint" => Command::Joint,
            "validate" => Command::Validate,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heights {
    pub h_ap: f64,
    pub h_ue: f64,
    pub h_max: f64,
    /// Curve family over AP heights.
    pub h_ap_values: Vec<f64>,
    /// Curve family over maximum blocker heights.
    pub h_max_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blockage {
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLoss {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub c_los: f64,
    pub c_nlos: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointMode {
    Regular,
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deployment {
    /// Average cell radius of the PPP deployment.
    pub avg_cell_radius: f64,
    pub lambda_convention: LambdaConvention,
    /// Cell radius of the hexagonal deployment.
    pub cell_radius: f64,
    /// Grid step of the hexagon search; `null` means `D / 200`.
    pub grid_step: Option<f64>,
    pub high_h_ap: f64,
    /// High-rise cell radius for the irregular joint variant.
    pub high_radius: f64,
    pub target: f64,
    pub mode: JointMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Explicit values; takes precedence over start/stop/step.
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mc {
    pub seed: u64,
    pub stream_id: u32,
    /// Samples per blocking-probability or Bernoulli check.
    pub samples: u64,
    /// PPP trials per association check.
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub heights: Heights,
    pub blockage: Blockage,
    pub pathloss: PathLoss,
    pub deployment: Deployment,
    pub sweep: Sweep,
    pub mc: Mc,
    pub output: Output,
}

pub const DEFAULT_SEED: u64 = 20_160_523;

impl Config {
    /// Reference parameters, with the sweep and curve families each command
    /// uses for its reference curves.
    pub fn defaults(cmd: Command) -> Self {
        let mut c = Config {
            heights: Heights {
                h_ap: 3.0,
                h_ue: loscov_core::model::DEFAULT_UE_HEIGHT,
                h_max: 3.0,
                h_ap_values: vec![3.0, 30.0],
                h_max_values: vec![3.0, 10.0, 15.0, 30.0],
            },
            blockage: Blockage {
                beta: loscov_core::model::DEFAULT_BETA,
            },
            pathloss: PathLoss {
                alpha_los: 4.0,
                alpha_nlos: 2.0,
                c_los: 1.0,
                c_nlos: 1.0,
            },
            deployment: Deployment {
                avg_cell_radius: 100.0,
                lambda_convention: LambdaConvention::Disk,
                cell_radius: 100.0,
                grid_step: None,
                high_h_ap: 30.0,
                high_radius: 300.0,
                target: 0.95,
                mode: JointMode::Regular,
            },
            sweep: Sweep {
                variable: "h_ap".into(),
                start: 3.0,
                stop: 40.0,
                step: 0.5,
                values: None,
            },
            mc: Mc {
                seed: DEFAULT_SEED,
                stream_id: 0,
                samples: 1_000_000,
                trials: 100_000,
            },
            output: Output {
                out_dir: PathBuf::from("out"),
            },
        };
        match cmd {
            Command::Blocking | Command::Validate => {}
            Command::Assoc => {
                c.heights.h_max = 15.0;
                c.sweep = Sweep {
                    variable: "radius".into(),
                    start: 25.0,
                    stop: 1000.0,
                    step: 25.0,
                    values: None,
                };
            }
            Command::Regular => {
                c.sweep = Sweep {
                    variable: "h_max".into(),
                    start: 1.5,
                    stop: 30.0,
                    step: 0.5,
                    values: None,
                };
            }
            Command::Joint => {
                c.heights.h_max_values = vec![3.0, 5.0, 10.0, 15.0];
                c.sweep = Sweep {
                    variable: "h_max".into(),
                    start: 0.0,
                    stop: 0.0,
                    step: 1.0,
                    values: Some(vec![3.0, 5.0, 10.0, 15.0]),
                };
            }
        }
        c
    }

    /// Defaults, then the optional JSON file, then command-line overrides.
    pub fn resolve(cmd: Command, file: Option<&Path>, overrides: &Overrides) -> anyhow::Result<Self> {
        let mut value = serde_json::to_value(Self::defaults(cmd))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let user: Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            merge(&mut value, user);
        }
        let mut cfg: Config = serde_json::from_value(value).context("invalid configuration")?;
        overrides.apply(&mut cfg);
        cfg.validate(cmd)?;
        Ok(cfg)
    }

    pub fn profile(&self) -> anyhow::Result<HeightProfile> {
        Ok(HeightProfile::new(
            self.heights.h_ap,
            self.heights.h_ue,
            self.heights.h_max,
        )?)
    }

    pub fn blockage_params(&self) -> anyhow::Result<BlockageParams> {
        Ok(BlockageParams::new(self.blockage.beta)?)
    }

    pub fn pathloss_params(&self) -> anyhow::Result<PathLossParams> {
        let p = &self.pathloss;
        Ok(PathLossParams::new(p.alpha_los, p.alpha_nlos, p.c_los, p.c_nlos)?)
    }

    /// Points of the configured sweep, in order.
    pub fn sweep_points(&self) -> anyhow::Result<Vec<f64>> {
        let s = &self.sweep;
        let pts = match &s.values {
            Some(v) => v.clone(),
            None => {
                if !(s.step > 0.0 && s.step.is_finite()) {
                    bail!("sweep step must be positive, got {}", s.step);
                }
                if s.stop < s.start {
                    Vec::new()
                } else {
                    let n = ((s.stop - s.start) / s.step + 1e-9).floor() as usize + 1;
                    (0..n).map(|i| s.start + i as f64 * s.step).collect()
                }
            }
        };
        if pts.is_empty() {
            bail!("sweep over '{}' is empty", s.variable);
        }
        if pts.iter().any(|v| !v.is_finite()) {
            bail!("sweep over '{}' contains non-finite values", s.variable);
        }
        Ok(pts)
    }

    fn validate(&self, cmd: Command) -> anyhow::Result<()> {
        self.blockage_params()?;
        self.pathloss_params()?;
        let check_heights = |h_ap: f64, h_max: f64| -> anyhow::Result<()> {
            HeightProfile::new(h_ap, self.heights.h_ue, h_max)?;
            Ok(())
        };
        check_heights(self.heights.h_ap, self.heights.h_max)?;
        for &r in [self.deployment.avg_cell_radius, self.deployment.cell_radius, self.deployment.high_radius].iter() {
            if !(r > 0.0 && r.is_finite()) {
                bail!("cell radii must be positive, got {r}");
            }
        }
        if let Some(step) = self.deployment.grid_step {
            if !(step > 0.0 && step.is_finite()) {
                bail!("grid step must be positive, got {step}");
            }
        }
        let allowed: &[&str] = match cmd {
            Command::Blocking => &["h_ap"],
            Command::Assoc => &["radius", "h_max"],
            Command::Regular | Command::Joint => &["h_max"],
            Command::Validate => &[],
        };
        let pts = if allowed.is_empty() {
            Vec::new()
        } else {
            if !allowed.contains(&self.sweep.variable.as_str()) {
                bail!(
                    "'{}' cannot sweep '{}'; expected one of {:?}",
                    cmd.name(),
                    self.sweep.variable,
                    allowed
                );
            }
            self.sweep_points()?
        };
        match cmd {
            Command::Blocking => {
                if self.heights.h_max_values.is_empty() {
                    bail!("heights.h_max_values is empty");
                }
                for &hb in &pts {
                    for &hm in &self.heights.h_max_values {
                        check_heights(hb, hm)?;
                    }
                }
            }
            Command::Assoc => {
                if self.heights.h_ap_values.is_empty() {
                    bail!("heights.h_ap_values is empty");
                }
                for &hb in &self.heights.h_ap_values {
                    if self.sweep.variable == "h_max" {
                        for &hm in &pts {
                            check_heights(hb, hm)?;
                        }
                    } else {
                        check_heights(hb, self.heights.h_max)?;
                        if pts.iter().any(|&r| !(r > 0.0)) {
                            bail!("radius sweep must be positive");
                        }
                    }
                }
            }
            Command::Regular => {
                for &hb in &self.heights.h_ap_values {
                    for &hm in &pts {
                        check_heights(hb, hm)?;
                    }
                }
            }
            Command::Joint => {
                let t = self.deployment.target;
                if !(t > 0.0 && t < 1.0) {
                    bail!("target must lie in (0, 1), got {t}");
                }
                for &hm in &pts {
                    check_heights(self.heights.h_ap, hm)?;
                    check_heights(self.deployment.high_h_ap, hm)?;
                }
            }
            Command::Validate => {
                if self.mc.samples == 0 || self.mc.trials == 0 {
                    bail!("mc.samples and mc.trials must be positive");
                }
            }
        }
        Ok(())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// `--section.field` overrides. Field names use dashes on the command line.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long = "heights.h-ap", global = true)]
    pub h_ap: Option<f64>,
    #[arg(long = "heights.h-ue", global = true)]
    pub h_ue: Option<f64>,
    #[arg(long = "heights.h-max", global = true)]
    pub h_max: Option<f64>,
    #[arg(long = "heights.h-ap-values", value_delimiter = ',', global = true)]
    pub h_ap_values: Option<Vec<f64>>,
    #[arg(long = "heights.h-max-values", value_delimiter = ',', global = true)]
    pub h_max_values: Option<Vec<f64>>,

    #[arg(long = "blockage.beta", global = true)]
    pub beta: Option<f64>,

    #[arg(long = "pathloss.alpha-los", global = true)]
    pub alpha_los: Option<f64>,
    #[arg(long = "pathloss.alpha-nlos", global = true)]
    pub alpha_nlos: Option<f64>,
    #[arg(long = "pathloss.c-los", global = true)]
    pub c_los: Option<f64>,
    #[arg(long = "pathloss.c-nlos", global = true)]
    pub c_nlos: Option<f64>,

    #[arg(long = "deployment.avg-cell-radius", global = true)]
    pub avg_cell_radius: Option<f64>,
    #[arg(long = "deployment.lambda-convention", global = true)]
    pub lambda_convention: Option<LambdaConvention>,
    #[arg(long = "deployment.cell-radius", global = true)]
    pub cell_radius: Option<f64>,
    #[arg(long = "deployment.grid-step", global = true)]
    pub grid_step: Option<f64>,
    #[arg(long = "deployment.high-h-ap", global = true)]
    pub high_h_ap: Option<f64>,
    #[arg(long = "deployment.high-radius", global = true)]
    pub high_radius: Option<f64>,
    #[arg(long = "deployment.target", global = true)]
    pub target: Option<f64>,
    #[arg(long = "deployment.mode", value_parser = parse_mode, global = true)]
    pub mode: Option<JointMode>,

    #[arg(long = "sweep.variable", global = true)]
    pub sweep_variable: Option<String>,
    #[arg(long = "sweep.start", global = true)]
    pub sweep_start: Option<f64>,
    #[arg(long = "sweep.stop", global = true)]
    pub sweep_stop: Option<f64>,
    #[arg(long = "sweep.step", global = true)]
    pub sweep_step: Option<f64>,
    /// Explicit sweep values; an empty string gives an empty sweep.
    #[arg(long = "sweep.values", value_delimiter = ',', num_args = 0.., global = true)]
    pub sweep_values: Option<Vec<f64>>,

    #[arg(long = "mc.samples", global = true)]
    pub samples: Option<u64>,
    #[arg(long = "mc.trials", global = true)]
    pub trials: Option<u64>,
    #[arg(long = "mc.stream-id", global = true)]
    pub stream_id: Option<u32>,
}

fn parse_mode(s: &str) -> Result<JointMode, String> {
    match s {
        "regular" => Ok(JointMode::Regular),
        "irregular" => Ok(JointMode::Irregular),
        other => Err(format!("unknown mode '{other}'")),
    }
}

impl Overrides {
    pub fn apply(&self, c: &mut Config) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut c.heights.h_ap, &self.h_ap);
        set(&mut c.heights.h_ue, &self.h_ue);
        set(&mut c.heights.h_max, &self.h_max);
        set(&mut c.heights.h_ap_values, &self.h_ap_values);
        set(&mut c.heights.h_max_values, &self.h_max_values);
        set(&mut c.blockage.beta, &self.beta);
        set(&mut c.pathloss.alpha_los, &self.alpha_los);
        set(&mut c.pathloss.alpha_nlos, &self.alpha_nlos);
        set(&mut c.pathloss.c_los, &self.c_los);
        set(&mut c.pathloss.c_nlos, &self.c_nlos);
        set(&mut c.deployment.avg_cell_radius, &self.avg_cell_radius);
        set(&mut c.deployment.lambda_convention, &self.lambda_convention);
        set(&mut c.deployment.cell_radius, &self.cell_radius);
        if self.grid_step.is_some() {
            c.deployment.grid_step = self.grid_step;
        }
        set(&mut c.deployment.high_h_ap, &self.high_h_ap);
        set(&mut c.deployment.high_radius, &self.high_radius);
        set(&mut c.deployment.target, &self.target);
        set(&mut c.deployment.mode, &self.mode);
        set(&mut c.sweep.variable, &self.sweep_variable);
        let range_given =
            self.sweep_start.is_some() || self.sweep_stop.is_some() || self.sweep_step.is_some();
        if range_given {
            c.sweep.values = None;
        }
        set(&mut c.sweep.start, &self.sweep_start);
        set(&mut c.sweep.stop, &self.sweep_stop);
        set(&mut c.sweep.step, &self.sweep_step);
        if self.sweep_values.is_some() {
            c.sweep.values = self.sweep_values.clone();
        }
        set(&mut c.mc.samples, &self.samples);
        set(&mut c.mc.trials, &self.trials);
        set(&mut c.mc.stream_id, &self.stream_id);
    }
}
