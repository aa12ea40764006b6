//! Built-in scenarios.

use crate::error::CliError;
use crate::scenario::{parse_scenario, Scenario};

const PRESETS: &[(&str, &str)] = &[
    ("fig1a", include_str!("../../../presets/fig1a.toml")),
    ("fig1b", include_str!("../../../presets/fig1b.toml")),
    ("fig2a", include_str!("../../../presets/fig2a.toml")),
    ("fig2b", include_str!("../../../presets/fig2b.toml")),
    ("app1_gravimeter", include_str!("../../../presets/app1_gravimeter.toml")),
    ("app2_em", include_str!("../../../presets/app2_em.toml")),
];

const ALIASES: &[(&str, &str)] = &[("pound_rebka", "fig2b")];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).chain(ALIASES.iter().map(|(a, _)| *a)).collect()
}

pub fn text(name: &str) -> Result<&'static str, CliError> {
    let name = ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, target)| target);
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| CliError::UnknownPreset(name.to_string()))
}

pub fn load(name: &str) -> Result<Scenario, CliError> {
    parse_scenario(text(name)?)
}
