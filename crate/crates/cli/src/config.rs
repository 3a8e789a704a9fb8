//! Experiment configuration files.
//!
//! A config file holds either one experiment or `{"batch": [...]}`.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;
use simplex_dynamics::group::{FiniteGroup, GroupRef};
use simplex_dynamics::series::ProbPoly;
use simplex_dynamics::SimplexPoint;

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupSpec {
    Cyclic { n: usize },
    Dihedral { n: usize },
    Symmetric { n: usize },
    Product { factors: Vec<GroupSpec> },
    TableFile { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    /// `label -> "p/q"`; unlisted labels are 0.
    Coefficients(BTreeMap<String, String>),
    /// `point-mass:<label>`, `interior-random` or `interior-random:<seed>`.
    Tag(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SeriesSpec {
    /// `exponent -> "p/q"`.
    Coefficients(BTreeMap<String, String>),
    /// `pure-power:<r>`.
    Tag(String),
}

/// Numerical parameters; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub horizon: Option<usize>,
    pub burn_in: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub truncation: Option<usize>,
    pub seed: Option<u64>,
}

impl Params {
    /// `self` with every field set in `other` replaced.
    pub fn overridden_by(&self, other: &Params) -> Params {
        Params {
            horizon: other.horizon.or(self.horizon),
            burn_in: other.burn_in.or(self.burn_in),
            tol: other.tol.or(self.tol),
            max_iter: other.max_iter.or(self.max_iter),
            truncation: other.truncation.or(self.truncation),
            seed: other.seed.or(self.seed),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub group: GroupSpec,
    pub element: Option<ElementSpec>,
    pub series: Option<SeriesSpec>,
    #[serde(default)]
    pub params: Params,
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub group: GroupRef,
    pub element: Option<SimplexPoint>,
    pub series: Option<ProbPoly>,
    pub params: Params,
}

impl Experiment {
    pub fn element(&self) -> Result<&SimplexPoint, CliError> {
        self.element
            .as_ref()
            .ok_or_else(|| CliError::Invalid("element: required by this command".into()))
    }

    pub fn series(&self) -> Result<&ProbPoly, CliError> {
        self.series
            .as_ref()
            .ok_or_else(|| CliError::Invalid("series: required by this command".into()))
    }
}

fn field_error(field: &str) -> impl Fn(simplex_dynamics::Error) -> CliError + '_ {
    move |e| CliError::Invalid(format!("{field}: {e}"))
}

pub fn build_group(spec: &GroupSpec, base_dir: &Path) -> Result<GroupRef, CliError> {
    let err = field_error("group");
    match spec {
        GroupSpec::Cyclic { n } => FiniteGroup::cyclic(*n).map_err(err),
        GroupSpec::Dihedral { n } => FiniteGroup::dihedral(*n).map_err(err),
        GroupSpec::Symmetric { n } => FiniteGroup::symmetric(*n).map_err(err),
        GroupSpec::Product { factors } => {
            let mut iter = factors.iter();
            let first = iter
                .next()
                .ok_or_else(|| CliError::Invalid("group.factors: at least one factor required".into()))?;
            let mut acc = build_group(first, base_dir)?;
            for f in iter {
                let next = build_group(f, base_dir)?;
                acc = FiniteGroup::direct_product(&acc, &next).map_err(&err)?;
            }
            Ok(acc)
        }
        GroupSpec::TableFile { path } => {
            let full = base_dir.join(path);
            let file = File::open(&full)
                .map_err(|e| CliError::Invalid(format!("group.path: cannot open {}: {e}", full.display())))?;
            FiniteGroup::from_csv(file).map_err(field_error("group.path"))
        }
    }
}

fn build_element(spec: &ElementSpec, group: &GroupRef, seed: Option<u64>) -> Result<SimplexPoint, CliError> {
    let err = field_error("element");
    match spec {
        ElementSpec::Coefficients(map) => SimplexPoint::from_label_map(group, map).map_err(err),
        ElementSpec::Tag(tag) => {
            if let Some(label) = tag.strip_prefix("point-mass:") {
                let g = group
                    .index_of(label)
                    .ok_or_else(|| CliError::Invalid(format!("element: unknown group label {label:?}")))?;
                Ok(SimplexPoint::point_mass(group, g))
            } else if tag == "interior-random" {
                Ok(SimplexPoint::random_interior(group, seed.unwrap_or(0)))
            } else if let Some(s) = tag.strip_prefix("interior-random:") {
                let seed = s
                    .parse()
                    .map_err(|_| CliError::Invalid(format!("element: seed {s:?} is not an unsigned integer")))?;
                Ok(SimplexPoint::random_interior(group, seed))
            } else {
                Err(CliError::Invalid(format!(
                    "element: expected a coefficient map, \"point-mass:<label>\" or \"interior-random[:<seed>]\", got {tag:?}"
                )))
            }
        }
    }
}

fn build_series(spec: &SeriesSpec) -> Result<ProbPoly, CliError> {
    match spec {
        SeriesSpec::Coefficients(map) => ProbPoly::from_map(map).map_err(field_error("series")),
        SeriesSpec::Tag(tag) => {
            let r = tag
                .strip_prefix("pure-power:")
                .and_then(|r| r.parse::<usize>().ok())
                .ok_or_else(|| {
                    CliError::Invalid(format!(
                        "series: expected an exponent map or \"pure-power:<r>\", got {tag:?}"
                    ))
                })?;
            if r < 2 {
                return Err(CliError::Invalid(format!("series: pure power needs r >= 2, got {r}")));
            }
            Ok(ProbPoly::pure_power(r))
        }
    }
}

impl ExperimentConfig {
    /// Validates the config; `overrides` are the command-line parameters.
    pub fn build(&self, base_dir: &Path, overrides: &Params) -> Result<Experiment, CliError> {
        let params = self.params.overridden_by(overrides);
        let group = build_group(&self.group, base_dir)?;
        let element = self
            .element
            .as_ref()
            .map(|e| build_element(e, &group, params.seed))
            .transpose()?;
        let series = self.series.as_ref().map(build_series).transpose()?;
        Ok(Experiment {
            group,
            element,
            series,
            params,
        })
    }
}

/// Parses a config file's text into its experiments.
pub fn parse_configs(text: &str) -> Result<(Vec<ExperimentConfig>, bool), CliError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))?;
    let parse = |v: Value, at: String| -> Result<ExperimentConfig, CliError> {
        serde_json::from_value(v).map_err(|e| CliError::Invalid(format!("{at}: {e}")))
    };
    match value {
        Value::Object(mut map) if map.contains_key("batch") => {
            if map.len() != 1 {
                return Err(CliError::Invalid("config: a batch file holds only the \"batch\" field".into()));
            }
            let Some(Value::Array(items)) = map.remove("batch") else {
                return Err(CliError::Invalid("batch: expected a list of experiments".into()));
            };
            let configs = items
                .into_iter()
                .enumerate()
                .map(|(i, v)| parse(v, format!("batch[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((configs, true))
        }
        other => Ok((vec![parse(other, "config".into())?], false)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str) -> Result<Experiment, CliError> {
        let (configs, _) = parse_configs(text)?;
        configs[0].build(Path::new("."), &Params::default())
    }

    #[test]
    fn shifted_series_config_builds() {
        let exp = build(
            r#"{"group": {"kind": "cyclic", "n": 12}, "element": "point-mass:t^1",
                "series": {"3": "1/2", "7": "1/2"}}"#,
        )
        .unwrap();
        assert_eq!(exp.group.order(), 12);
        assert_eq!(exp.series.unwrap().shift(), 3);
    }

    #[test]
    fn products_and_random_points() {
        let exp = build(
            r#"{"group": {"kind": "product", "factors": [{"kind": "cyclic", "n": 2}, {"kind": "symmetric", "n": 3}]},
                "element": "interior-random:4", "series": "pure-power:2"}"#,
        )
        .unwrap();
        assert_eq!(exp.group.order(), 12);
        assert!(exp.series.unwrap().is_pure_power());
        let again = build(
            r#"{"group": {"kind": "product", "factors": [{"kind": "cyclic", "n": 2}, {"kind": "symmetric", "n": 3}]},
                "element": "interior-random:4"}"#,
        )
        .unwrap();
        assert_eq!(exp.element, again.element);
    }

    #[test]
    fn errors_name_the_field() {
        let msg = |text: &str| match build(text) {
            Err(CliError::Invalid(m)) => m,
            other => panic!("expected invalid input, got {other:?}"),
        };
        assert!(msg(r#"{"group": {"kind": "cyclic", "n": 3}, "element": {"t^1": "1/2"}}"#).starts_with("element:"));
        assert!(msg(r#"{"group": {"kind": "cyclic", "n": 3}, "series": {"1": "2"}}"#).starts_with("series:"));
        assert!(msg(r#"{"group": {"kind": "cyclic", "n": 0}}"#).starts_with("group:"));
        assert!(msg(r#"{"group": {"kind": "cyclic", "n": 3}, "element": "point-mass:x"}"#).starts_with("element:"));
        assert!(msg(r#"{"group": {"kind": "torus"}}"#).starts_with("config:"));
    }

    #[test]
    fn batches_parse_in_order() {
        let (configs, batch) = parse_configs(
            r#"{"batch": [{"name": "a", "group": {"kind": "cyclic", "n": 2}},
                          {"name": "b", "group": {"kind": "dihedral", "n": 3}}]}"#,
        )
        .unwrap();
        assert!(batch);
        let names: Vec<_> = configs.iter().map(|c| c.name.clone().unwrap()).collect();
        assert_eq!(names, ["a", "b"]);
    }

    #[test]
    fn flags_override_config_params() {
        let base = Params {
            horizon: Some(10),
            tol: Some(1e-3),
            ..Params::default()
        };
        let flags = Params {
            horizon: Some(20),
            ..Params::default()
        };
        let merged = base.overridden_by(&flags);
        assert_eq!(merged.horizon, Some(20));
        assert_eq!(merged.tol, Some(1e-3));
    }
}
