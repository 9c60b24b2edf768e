//! TOML configuration file. Every field is optional; values resolve with
//! precedence flags > config file > built-in defaults.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use daca_core::syngen::{SupportSpec, WeightDist};

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub attack: AttackSection,
    #[serde(default)]
    pub sa: SaSection,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub defense: DefenseSection,
}

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub algo: Option<String>,
    pub mode: Option<String>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub gain: Option<String>,
}

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SaSection {
    pub initial_temp: Option<f64>,
    pub cooling: Option<f64>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub n_tuples: Option<usize>,
    pub n_queries: Option<usize>,
    pub budget: Option<u64>,
    pub support: Option<SupportSpec>,
    pub weights: Option<WeightDist>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseSection {
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// Parses `"2"` or `"2..5"` into a support spec.
pub fn parse_support(text: &str) -> anyhow::Result<SupportSpec> {
    if let Some((lo, hi)) = text.split_once("..") {
        Ok(SupportSpec::Range { lo: lo.trim().parse()?, hi: hi.trim().parse()? })
    } else {
        Ok(SupportSpec::Fixed(text.trim().parse()?))
    }
}

/// Parses `"uniform:LO,HI"` or `"zipf:EXPONENT,MAX"`.
pub fn parse_weights(text: &str) -> anyhow::Result<WeightDist> {
    let (kind, args) = text
        .split_once(':')
        .ok_or_else(|| anyhow::anyhow!("expected uniform:LO,HI or zipf:EXPONENT,MAX, got {text:?}"))?;
    let (a, b) = args
        .split_once(',')
        .ok_or_else(|| anyhow::anyhow!("expected two comma-separated parameters in {text:?}"))?;
    match kind.trim() {
        "uniform" => Ok(WeightDist::Uniform { lo: a.trim().parse()?, hi: b.trim().parse()? }),
        "zipf" => Ok(WeightDist::Zipf { exponent: a.trim().parse()?, max: b.trim().parse()? }),
        other => anyhow::bail!("unknown weight distribution {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = r#"
            [attack]
            algo = "sa"
            budget = 7

            [sa]
            iterations = 5000

            [ga]
            population = 10

            [generate]
            n_tuples = 100
            n_queries = 20
            budget = 5
            support = { lo = 2, hi = 4 }
            weights = { zipf = { exponent = 1.1, max = 100 } }
            seed = 3

            [defense]
            alpha = 0.5
        "#;
        let config: FileConfig = toml::from_str(text).unwrap();
        assert_eq!(config.attack.algo.as_deref(), Some("sa"));
        assert_eq!(config.attack.budget, Some(7));
        assert_eq!(config.sa.iterations, Some(5000));
        assert_eq!(config.generate.n_tuples, Some(100));
        assert_eq!(config.defense.alpha, Some(0.5));
    }

    #[test]
    fn parses_compact_specs() {
        assert!(matches!(parse_support("3").unwrap(), SupportSpec::Fixed(3)));
        assert!(matches!(
            parse_support("2..5").unwrap(),
            SupportSpec::Range { lo: 2, hi: 5 }
        ));
        assert!(matches!(
            parse_weights("uniform:1,10").unwrap(),
            WeightDist::Uniform { lo: 1, hi: 10 }
        ));
        assert!(matches!(
            parse_weights("zipf:1.5,100").unwrap(),
            WeightDist::Zipf { .. }
        ));
        assert!(parse_weights("gauss:1,2").is_err());
    }
}
