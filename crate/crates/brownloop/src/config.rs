//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//! workers = 4
//! out_dir = "runs/heis"
//!
//! [problem]
//! vf = "heisenberg"        # or a vector-field file, relative to this file
//! f = "cos(x3)"
//! x0 = [0.0, 0.0, 0.0]
//! step = 1
//!
//! [sampler]
//! kind = "bridge"          # bridge | reject | mcmc
//! m = 256
//! eps = 0.05
//! [sampler.mcmc]
//! chains = 32
//!
//! [holonomy]
//! grid = [0.125, 0.25, 0.5, 1.0]
//! samples = 100000
//! ```
//!
//! Every field is optional here; command-line flags override the file and
//! the commands fill in what is still missing.

use std::path::{Path, PathBuf};

use brownloop_core::loops::{McmcConfig, SamplerConfig, SamplerKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub holonomy: HolonomySection,
    #[serde(default)]
    pub moments: MomentsSection,
    #[serde(default)]
    pub delta: DeltaSection,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub vf: Option<String>,
    pub f: Option<String>,
    pub x0: Option<Vec<f64>>,
    pub step: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub kind: Option<String>,
    pub m: Option<usize>,
    pub eps: Option<f64>,
    pub max_proposals: Option<u64>,
    #[serde(default)]
    pub mcmc: McmcSection,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    pub proposal_scale: Option<f64>,
    pub burn_in: Option<usize>,
    pub adapt: Option<usize>,
    pub thinning: Option<usize>,
    pub chains: Option<usize>,
    pub target_acceptance: Option<f64>,
    pub anneal_start: Option<f64>,
    pub global_draws: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HolonomySection {
    pub grid: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub substeps: Option<usize>,
    pub antithetic: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    pub d: Option<usize>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeltaSection {
    /// `exact` or `moments`.
    pub coefficients: Option<String>,
    pub samples: Option<usize>,
}

/// A parsed config file, kept with its text so later checks can cite lines.
#[derive(Debug, Clone, Default)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub file: Option<PathBuf>,
    text: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let file = path.display().to_string();
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
            let key = e
                .message()
                .split('`')
                .nth(1)
                .filter(|_| e.message().starts_with("unknown field"))
                .map(str::to_string)
                .unwrap_or_else(|| key_at_line(text, line));
            CliError::Config { file: file.clone(), line, key, msg: e.message().trim().to_string() }
        })?;
        Ok(LoadedConfig { config, file: Some(path.to_path_buf()), text: text.to_string() })
    }

    /// An error about `key` (dotted, e.g. `holonomy.samples`). The line is
    /// the key's line in the file, or 0 when the value came from a flag or
    /// a default.
    pub fn error(&self, key: &str, msg: impl Into<String>) -> CliError {
        let file = self.file.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<flags>".into());
        CliError::Config { file, line: locate_key(&self.text, key), key: key.to_string(), msg: msg.into() }
    }

    /// Resolves a file named in the config relative to the config's directory.
    pub fn resolve_path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        match (&self.file, p.is_absolute()) {
            (Some(f), false) => f.parent().map(|d| d.join(p)).unwrap_or_else(|| p.to_path_buf()),
            _ => p.to_path_buf(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn key_at_line(text: &str, line: usize) -> String {
    text.lines()
        .nth(line.saturating_sub(1))
        .and_then(|l| l.split_once('='))
        .map(|(k, _)| k.trim().to_string())
        .unwrap_or_default()
}

/// Line of `section.key = ...` in a TOML text, 0 if absent.
fn locate_key(text: &str, dotted: &str) -> usize {
    let (section, key) = dotted.rsplit_once('.').unwrap_or(("", dotted));
    let mut current = String::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
        } else if let Some((lhs, _)) = line.split_once('=') {
            if current == section && lhs.trim() == key {
                return k + 1;
            }
        }
    }
    0
}

pub fn parse_sampler_kind(s: &str) -> Option<SamplerKind> {
    match s {
        "bridge" => Some(SamplerKind::Bridge),
        "reject" | "rejection" => Some(SamplerKind::Rejection),
        "mcmc" => Some(SamplerKind::Mcmc),
        _ => None,
    }
}

pub fn sampler_kind_name(k: SamplerKind) -> &'static str {
    match k {
        SamplerKind::Bridge => "bridge",
        SamplerKind::Rejection => "reject",
        SamplerKind::Mcmc => "mcmc",
    }
}

pub const DEFAULT_M: usize = 64;
pub const DEFAULT_EPS: f64 = 0.05;

impl SamplerSection {
    /// Fills missing values: the bridge for `N = 1`, MCMC above.
    pub fn resolve(&self, step: usize, seed: u64, cfg: &LoadedConfig) -> CliResult<(SamplerKind, SamplerConfig)> {
        let kind = match &self.kind {
            Some(k) => parse_sampler_kind(k)
                .ok_or_else(|| cfg.error("sampler.kind", format!("unknown sampler `{k}`; use bridge, reject or mcmc")))?,
            None if step == 1 => SamplerKind::Bridge,
            None => SamplerKind::Mcmc,
        };
        if kind == SamplerKind::Bridge && step != 1 {
            return Err(cfg.error("sampler.kind", format!("the bridge sampler is exact only for N = 1, got N = {step}")));
        }
        let mut sc = SamplerConfig::new(self.m.unwrap_or(DEFAULT_M), self.eps.unwrap_or(DEFAULT_EPS), seed);
        if let Some(p) = self.max_proposals {
            sc.max_proposals = p;
        }
        let mc = &self.mcmc;
        let d = McmcConfig::default();
        sc.mcmc = McmcConfig {
            proposal_scale: mc.proposal_scale.unwrap_or(d.proposal_scale),
            burn_in: mc.burn_in.unwrap_or(d.burn_in),
            adapt: mc.adapt.unwrap_or(d.adapt),
            thinning: mc.thinning.unwrap_or(d.thinning),
            chains: mc.chains.unwrap_or(d.chains),
            target_acceptance: mc.target_acceptance.unwrap_or(d.target_acceptance),
            anneal_start: mc.anneal_start.unwrap_or(d.anneal_start),
            global_draws: mc.global_draws.unwrap_or(d.global_draws),
        };
        sc.validate().map_err(|e| {
            let key = if self.m.is_some_and(|m| m < 2) {
                "sampler.m"
            } else if self.eps.is_some_and(|e| !(e > 0.0)) {
                "sampler.eps"
            } else {
                "sampler"
            };
            cfg.error(key, e.to_string())
        })?;
        Ok((kind, sc))
    }

    /// The fully resolved section, for echoing.
    pub fn echo(kind: SamplerKind, sc: &SamplerConfig) -> SamplerSection {
        let m = &sc.mcmc;
        SamplerSection {
            kind: Some(sampler_kind_name(kind).into()),
            m: Some(sc.m),
            eps: Some(sc.eps),
            max_proposals: Some(sc.max_proposals),
            mcmc: McmcSection {
                proposal_scale: Some(m.proposal_scale),
                burn_in: Some(m.burn_in),
                adapt: Some(m.adapt),
                thinning: Some(m.thinning),
                chains: Some(m.chains),
                target_acceptance: Some(m.target_acceptance),
                anneal_start: Some(m.anneal_start),
                global_draws: Some(m.global_draws),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> CliResult<LoadedConfig> {
        LoadedConfig::parse(s, Path::new("exp.toml"))
    }

    #[test]
    fn full_file() {
        let c = parse(
            "seed = 3\n[problem]\nvf = \"heisenberg\"\nf = \"cos(x3)\"\nx0 = [0, 0, 0.5]\nstep = 1\n\
             [sampler]\nkind = \"mcmc\"\n[sampler.mcmc]\nchains = 4\n[holonomy]\ngrid = [0.5, 1]\nsamples = 100\n",
        )
        .unwrap();
        assert_eq!(c.config.seed, Some(3));
        assert_eq!(c.config.problem.x0, Some(vec![0.0, 0.0, 0.5]));
        assert_eq!(c.config.sampler.mcmc.chains, Some(4));
        let (k, sc) = c.config.sampler.resolve(2, 3, &c).unwrap();
        assert_eq!(k, SamplerKind::Mcmc);
        assert_eq!((sc.m, sc.mcmc.chains, sc.mcmc.thinning), (DEFAULT_M, 4, 8));
    }

    #[test]
    fn unknown_keys_cite_line_and_key() {
        let e = parse("seed = 1\n[holonomy]\nsamples = 10\nsampels = 3\n").unwrap_err().to_string();
        assert!(e.contains("line=4") && e.contains("key=\"sampels\""), "{e}");
        let e = parse("[problem]\nstep = \"two\"\n").unwrap_err().to_string();
        assert!(e.contains("line=2") && e.contains("key=\"step\""), "{e}");
        let e = parse("[nope]\n").unwrap_err().to_string();
        assert!(e.contains("line=1") && e.contains("nope"), "{e}");
    }

    #[test]
    fn semantic_errors_cite_line() {
        let c = parse("[sampler]\nm = 1\n").unwrap();
        let e = c.config.sampler.resolve(1, 0, &c).unwrap_err().to_string();
        assert!(e.contains("line=2") && e.contains("key=\"sampler.m\""), "{e}");
        let c = parse("[sampler]\n\nkind = \"bridge\"\n").unwrap();
        let e = c.config.sampler.resolve(2, 0, &c).unwrap_err().to_string();
        assert!(e.contains("line=3"), "{e}");
    }

    #[test]
    fn echo_roundtrips() {
        let c = LoadedConfig::default();
        let (k, sc) = c.config.sampler.resolve(2, 9, &c).unwrap();
        let echo = SamplerSection::echo(k, &sc);
        let text = toml::to_string(&echo).unwrap();
        let back: SamplerSection = toml::from_str(&text).unwrap();
        assert_eq!(back.resolve(2, 9, &c).unwrap(), (k, sc));
    }
}
