//! Shipped experiment configurations, embedded at build time.

use std::path::Path;

use super::config::ExperimentConfig;
use crate::error::{Result, SearchError};

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "fig2_exp", text: include_str!("../../presets/fig2_exp.toml") },
    Preset { name: "fig2_exp_text", text: include_str!("../../presets/fig2_exp_text.toml") },
    Preset { name: "fig5_geom", text: include_str!("../../presets/fig5_geom.toml") },
    Preset { name: "fig5_geom_text", text: include_str!("../../presets/fig5_geom_text.toml") },
    Preset { name: "fig7_adhmp", text: include_str!("../../presets/fig7_adhmp.toml") },
    Preset { name: "oracle_m5k2", text: include_str!("../../presets/oracle_m5k2.toml") },
];

const ALIASES: &[(&str, &str)] = &[("fig2", "fig2_exp"), ("fig5", "fig5_geom"), ("fig7", "fig7_adhmp")];

pub fn find(name: &str) -> Option<&'static Preset> {
    let name = ALIASES
        .iter()
        .find(|(alias, _)| *alias == name)
        .map_or(name, |(_, target)| target);
    PRESETS.iter().find(|p| p.name == name)
}

/// Parse a shipped preset with overrides applied.
pub fn load_preset(name: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let preset = find(name)
        .ok_or_else(|| SearchError::invalid("preset", format!("no preset named {name:?}")))?;
    ExperimentConfig::from_toml(preset.text, preset.name, overrides)
}

/// Config text for `spec`: the file itself, the file with a `.toml`
/// extension added, or the shipped preset named by the file stem.
pub fn resolve(spec: &str) -> Result<(String, String)> {
    let path = Path::new(spec);
    let with_ext = format!("{spec}.toml");
    for candidate in [path, Path::new(&with_ext)] {
        if candidate.is_file() {
            let text = std::fs::read_to_string(candidate).map_err(|source| SearchError::Io {
                context: format!("reading config {}", candidate.display()),
                source,
            })?;
            return Ok((candidate.display().to_string(), text));
        }
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    match find(stem) {
        Some(p) => Ok((format!("preset:{}", p.name), p.text.to_string())),
        None => Err(SearchError::invalid(
            "config",
            format!("file {spec} not found and no preset is named {stem:?}"),
        )),
    }
}
