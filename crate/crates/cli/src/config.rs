//! Run configuration: one TOML file, every section optional.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clayer::integrator::{IntegratorConfig, Scheme};
use clayer::mms::MmsConfig;
use clayer::model::Parameters;
use clayer::presets::Preset;
use clayer::rescaling::{Frame, Regime, RescalingParams, DEFAULT_SMALL_VALUES};
use clayer::Grid64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub parameters: Parameters<f64>,
    pub grid: GridSection,
    pub integrator: IntegratorSection,
    pub initial: InitialData,
    pub lemma: LemmaSection,
    pub scaling: ScalingSection,
    pub mms: MmsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: PathBuf::from("clayer-out"),
            parameters: Parameters::unit(),
            grid: GridSection::default(),
            integrator: IntegratorSection::default(),
            initial: InitialData::Analytic {
                amplitude: 1.0,
                radius: 1.5,
                smallness_fraction: Some(0.5),
            },
            lemma: LemmaSection::default(),
            scaling: ScalingSection::default(),
            mms: MmsConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_x: usize,
    #[serde(rename = "L_x")]
    pub l_x: f64,
    pub n_y: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n_x: 64,
            l_x: 2.0 * PI,
            n_y: 129,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub monitor_every: usize,
    /// Checkpoint interval in steps; the initial and final states are always written.
    pub checkpoint_every: usize,
    pub max_norm_guard: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            dt: 0.01,
            t_end: 10.0,
            scheme: Scheme::ImexCnAb2,
            monitor_every: 5,
            checkpoint_every: 200,
            max_norm_guard: 1e6,
        }
    }
}

impl IntegratorSection {
    pub fn to_core(self) -> IntegratorConfig<f64> {
        IntegratorConfig {
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme,
            mms_forcing: false,
            max_norm_guard: self.max_norm_guard,
            snapshot_every: Some(self.checkpoint_every),
        }
    }
}

/// A preset family or a checkpoint to resume from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    Analytic {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        smallness_fraction: Option<f64>,
    },
    Random {
        amplitude: f64,
        radius: f64,
    },
    Mms,
    Checkpoint {
        path: PathBuf,
    },
}

impl InitialData {
    pub fn preset(&self) -> Option<Preset> {
        Some(match self {
            InitialData::Zero => Preset::Zero,
            InitialData::Analytic {
                amplitude,
                radius,
                smallness_fraction,
            } => Preset::Analytic {
                amplitude: *amplitude,
                radius: *radius,
                smallness_fraction: *smallness_fraction,
            },
            InitialData::Random { amplitude, radius } => Preset::Random {
                amplitude: *amplitude,
                radius: *radius,
            },
            InitialData::Mms => Preset::Mms,
            InitialData::Checkpoint { .. } => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaSection {
    pub cases: usize,
    pub n_x: usize,
    pub n_y: usize,
}

impl Default for LemmaSection {
    fn default() -> Self {
        LemmaSection {
            cases: 1000,
            n_x: 32,
            n_y: 33,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSection {
    #[serde(rename = "Re")]
    pub re: f64,
    #[serde(rename = "H_limit")]
    pub h_limit: f64,
    #[serde(rename = "Pr_m")]
    pub pr_m: f64,
    #[serde(rename = "U0_over_c")]
    pub u0_over_c: f64,
    #[serde(rename = "Jscript")]
    pub jscript: f64,
    pub small_values: Vec<f64>,
    pub frame: Frame,
    pub tolerance: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        let p = RescalingParams::default();
        ScalingSection {
            re: p.re,
            h_limit: p.h_limit,
            pr_m: p.pr_m,
            u0_over_c: p.u0_over_c,
            jscript: p.jscript,
            small_values: DEFAULT_SMALL_VALUES.to_vec(),
            frame: Frame::default(),
            tolerance: 0.2,
        }
    }
}

impl ScalingSection {
    pub fn params(&self, regime: Regime) -> RescalingParams {
        RescalingParams {
            re: self.re,
            h_limit: self.h_limit,
            pr_m: self.pr_m,
            u0_over_c: self.u0_over_c,
            jscript: self.jscript,
            regime,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> Result<std::sync::Arc<Grid64>, String> {
        Grid64::new(self.grid.n_x, self.grid.l_x, self.grid.n_y).map_err(|e| e.to_string())
    }

    /// Enforces every numeric constraint up front.
    pub fn validate(&self) -> Result<(), String> {
        let s = |e: clayer::Error| e.to_string();
        self.parameters.validate().map_err(s)?;
        self.grid()?;
        let i = &self.integrator;
        i.to_core().validate().map_err(s)?;
        if i.monitor_every == 0 {
            return Err("integrator.monitor_every must be positive".into());
        }
        match &self.initial {
            InitialData::Analytic {
                amplitude,
                radius,
                smallness_fraction,
            } => {
                if !amplitude.is_finite()
                    || !(*radius > 0.0)
                    || smallness_fraction.is_some_and(|f| !(f > 0.0))
                {
                    return Err(
                        "initial: amplitude must be finite, radius and smallness_fraction positive"
                            .into(),
                    );
                }
            }
            InitialData::Random { amplitude, radius }
                if (!amplitude.is_finite() || !(*radius > 0.0)) =>
            {
                return Err("initial: amplitude must be finite and radius positive".into());
            }
            _ => {}
        }
        let l = &self.lemma;
        if l.cases == 0 || l.n_x < 4 || l.n_y < 3 {
            return Err("lemma: cases must be positive, n_x >= 4, n_y >= 3".into());
        }
        self.scaling.params(Regime::Prandtl).validate().map_err(s)?;
        if !(self.scaling.tolerance > 0.0) {
            return Err("scaling.tolerance must be positive".into());
        }
        let m = &self.mms;
        if !(m.t_end > 0.0 && m.dt_spatial > 0.0)
            || m.dts.iter().any(|d| !(*d > 0.0))
            || m.n_ys.iter().any(|n| *n < 3)
        {
            return Err(
                "mms: t_end, dt_spatial and dts must be positive and every n_y at least 3".into(),
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        assert_eq!(RunConfig::parse("").unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("[grid]\nnx = 8").is_err());
        assert!(RunConfig::parse(
            "[initial]\npreset = \"random\"\namplitude = 1.0\nradius = 1.0\nextra = 2"
        )
        .is_err());
        assert!(RunConfig::parse(
            "[parameters]\nH = 1.0\nJ = 1.0\nkappa = 1.0\nPr_m = 1.0\ntau0 = 1.0\ns = 3.0\nq = 1"
        )
        .is_err());
    }

    #[test]
    fn enforces_constraints() {
        assert!(RunConfig::parse(
            "[parameters]\nH = 1.0\nJ = 1.0\nkappa = 1.0\nPr_m = 1.0\ntau0 = 1.0\ns = 2.0"
        )
        .is_err());
        assert!(RunConfig::parse("[integrator]\ndt = -1.0").is_err());
        assert!(RunConfig::parse("[integrator]\nmonitor_every = 0").is_err());
        assert!(RunConfig::parse("[grid]\nn_y = 1").is_err());
        assert!(
            RunConfig::parse("[initial]\npreset = \"random\"\namplitude = 1.0\nradius = -1.0")
                .is_err()
        );
        let cfg =
            RunConfig::parse("[initial]\npreset = \"checkpoint\"\npath = \"a.clayer\"").unwrap();
        assert!(cfg.initial.preset().is_none());
    }
}
