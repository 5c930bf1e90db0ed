//! Scenario configuration files (TOML).

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use tippinglab::classify::ClassifySettings;
use tippinglab::field::{ParametricFamily, SplitSide, TransitionProfile};
use tippinglab::models::{build_model, ModelCoefficients, ModelKind, PopulationModel};
use tippinglab::tipping::ParameterKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// A population model; exclusive with `family`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    /// A raw parametric family `f(t, x, γ) = base + γ · direction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ParametricFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<TransitionProfile>,
    /// Applied to `profile` in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<Transform>,
    pub analysis: Analysis,
    #[serde(default, skip_serializing_if = "NumericSettings::is_empty")]
    pub settings: NumericSettings,
    #[serde(default, skip_serializing_if = "OutputSpec::is_empty")]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub coefficients: ModelCoefficients,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Transform {
    Rate { c: f64 },
    Phase { c: f64 },
    Scale { d: f64 },
    Split { d: f64, side: SplitSide },
    ClampPast { r: f64 },
    ClampFuture { r: f64 },
}

impl Transform {
    pub fn apply(&self, p: TransitionProfile) -> TransitionProfile {
        match *self {
            Transform::Rate { c } => p.rate(c),
            Transform::Phase { c } => p.phase(c),
            Transform::Scale { d } => p.scale(d),
            Transform::Split { d, side } => p.split(d, side),
            Transform::ClampPast { r } => p.clamp_past(r),
            Transform::ClampFuture { r } => p.clamp_future(r),
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    /// Hypothesis report over `gamma_range` (default: the profile's range).
    Audit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma_range: Option<(f64, f64)>,
    },
    Classify {
        /// Forward probes `(s, x0)`.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        probes: Vec<(f64, f64)>,
    },
    /// Gap and case on a grid (log-spaced for rates, linear otherwise).
    Sweep {
        parameter: ParameterKind,
        lo: f64,
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
    },
    Tipping {
        parameter: ParameterKind,
        lo: f64,
        hi: f64,
        #[serde(default, skip_serializing_if = "is_false")]
        with_phi: bool,
    },
    Allee {
        #[serde(default)]
        gamma: f64,
    },
    /// Upper-solution tails of the model driven by `d · Γ` for each `d`.
    Collapse {
        d: Vec<f64>,
        #[serde(default = "yes", skip_serializing_if = "is_true")]
        bisect: bool,
    },
}

impl Analysis {
    pub fn command(&self) -> &'static str {
        match self {
            Analysis::Audit { .. } => "audit",
            Analysis::Classify { .. } => "classify",
            Analysis::Sweep { .. } => "sweep",
            Analysis::Tipping { .. } => "tipping",
            Analysis::Allee { .. } => "allee",
            Analysis::Collapse { .. } => "collapse",
        }
    }
}

/// Numeric overrides; unset fields keep the library defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    /// Half-length `T` of the transition span `[−T, T]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    /// Time horizon of Allee and collapse analyses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_bisect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl NumericSettings {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Fields set in `over` replace those here.
    pub fn merge(&mut self, over: &NumericSettings) {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(rtol, atol, max_step, span, horizon, tol_bisect, workers);
    }

    pub fn classify_settings(&self) -> anyhow::Result<ClassifySettings> {
        let mut s = ClassifySettings::default();
        let integ = &mut s.solver.integrator;
        if let Some(v) = self.rtol {
            integ.rtol = v;
        }
        if let Some(v) = self.atol {
            integ.atol = v;
        }
        if let Some(v) = self.max_step {
            integ.max_step = v;
        }
        integ.validate().context("invalid integrator settings")?;
        Ok(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Root of the run directories (default `runs`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Grid step of trajectory CSVs (default 0.5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_step: Option<f64>,
}

impl OutputSpec {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| anyhow::anyhow!("config error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        match (&self.model, &self.family) {
            (Some(_), Some(_)) => bail!("config sets both `model` and `family`"),
            (None, None) => bail!("config needs a `model` or a `family`"),
            _ => {}
        }
        let needs_profile = !matches!(
            self.analysis,
            Analysis::Allee { .. } | Analysis::Audit { .. }
        );
        if needs_profile && self.profile.is_none() {
            bail!("`{}` needs a `profile`", self.analysis.command());
        }
        if matches!(
            self.analysis,
            Analysis::Allee { .. } | Analysis::Collapse { .. }
        ) && self.model.is_none()
        {
            bail!("`{}` needs a population `model`", self.analysis.command());
        }
        Ok(())
    }

    pub fn population_model(&self) -> anyhow::Result<Option<PopulationModel>> {
        self.model
            .as_ref()
            .map(|m| {
                build_model(m.kind, m.coefficients.clone())
                    .map(|pm| match &self.name {
                        Some(n) => pm.with_provenance(n.clone()),
                        None => pm,
                    })
                    .context("invalid model")
            })
            .transpose()
    }

    pub fn parametric_family(&self) -> anyhow::Result<ParametricFamily> {
        match (&self.model, &self.family) {
            (_, Some(f)) => Ok(f.clone()),
            (Some(_), None) => Ok(self.population_model()?.expect("model present").family),
            (None, None) => bail!("config needs a `model` or a `family`"),
        }
    }

    /// The profile with all transforms applied.
    pub fn transition_profile(&self) -> Option<TransitionProfile> {
        self.profile
            .clone()
            .map(|p| self.transforms.iter().fold(p, |acc, t| t.apply(acc)))
    }
}

/// Names of the bundled scenarios.
pub const SCENARIOS: [&str; 4] = ["invasion", "extinction", "holling3-strong", "holling3-weak"];

pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "invasion" => Some(include_str!("../scenarios/invasion.toml")),
        "extinction" => Some(include_str!("../scenarios/extinction.toml")),
        "holling3-strong" => Some(include_str!("../scenarios/holling3-strong.toml")),
        "holling3-weak" => Some(include_str!("../scenarios/holling3-weak.toml")),
        _ => None,
    }
}
