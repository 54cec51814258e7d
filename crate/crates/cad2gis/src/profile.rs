//! Declarative conversion profile: which layers matter, what feature class
//! each becomes, tolerances, and the target CRS.
//!
//! The profile file is strict JSON; unknown keys are rejected so a typo in a
//! tolerance name fails loudly instead of silently falling back to a default.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// What happens to entities on a matched layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerAction {
    /// Discard, counted as dropped.
    Drop,
    Point,
    Line,
    Polygon,
    Annotation,
    /// Kept through georeferencing as a visual anchor, excluded from output.
    ReferenceOnly,
}

impl LayerAction {
    pub fn name(self) -> &'static str {
        match self {
            LayerAction::Drop => "drop",
            LayerAction::Point => "point",
            LayerAction::Line => "line",
            LayerAction::Polygon => "polygon",
            LayerAction::Annotation => "annotation",
            LayerAction::ReferenceOnly => "reference-only",
        }
    }
}

/// How a circle or polygon becomes a point. Only legal with action `point`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseMode {
    Centroid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRule {
    /// Glob over layer names: `*` and `?` only, case-sensitive.
    #[serde(rename = "match")]
    pub pattern: String,
    pub action: LayerAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse: Option<CollapseMode>,
    /// Static attributes copied onto every feature the rule produces.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

/// Repair tolerances. gap-bridge, lateral-offset and arc-chord are in
/// drawing units (applied before georeferencing); the rest are in target CRS
/// units (applied after).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct Tolerances {
    pub gap_bridge: f64,
    pub lateral_offset: f64,
    pub snap: f64,
    pub ring_close: f64,
    pub annotation_attach: f64,
    pub arc_chord: f64,
    pub dangle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gap_bridge: 2.0,
            lateral_offset: 0.1,
            snap: 0.05,
            ring_close: 0.05,
            annotation_attach: 2.0,
            arc_chord: 0.05,
            dangle: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Crs {
    pub epsg: i64,
    /// Passed through verbatim into the shapefile .prj sidecar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wkt: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformModel {
    #[default]
    Similarity,
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConversionProfile {
    /// First match wins.
    pub rules: Vec<LayerRule>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub crs: Crs,
    #[serde(default)]
    pub transform_model: TransformModel,
}

impl ConversionProfile {
    /// First rule whose pattern matches the layer name; `None` means the
    /// layer is unmapped (treated as drop, reported as a warning).
    pub fn matching_rule(&self, layer: &str) -> Option<&LayerRule> {
        self.rules.iter().find(|r| glob_match(&r.pattern, layer))
    }

    /// Action for a layer; unmapped layers drop.
    pub fn classify_layer(&self, layer: &str) -> LayerAction {
        self.matching_rule(layer)
            .map(|r| r.action)
            .unwrap_or(LayerAction::Drop)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.pattern.is_empty() {
                return Err(Error::ProfileValidation(format!(
                    "rules[{i}].match: empty pattern matches nothing"
                )));
            }
            if rule.collapse.is_some() && rule.action != LayerAction::Point {
                return Err(Error::ProfileValidation(format!(
                    "rules[{i}] ({:?}): collapse requires action \"point\", got \"{}\"",
                    rule.pattern,
                    rule.action.name()
                )));
            }
        }
        let t = &self.tolerances;
        for (name, value) in [
            ("gap-bridge", t.gap_bridge),
            ("lateral-offset", t.lateral_offset),
            ("snap", t.snap),
            ("ring-close", t.ring_close),
            ("annotation-attach", t.annotation_attach),
            ("dangle", t.dangle),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::ProfileValidation(format!(
                    "tolerances.{name}: must be finite and >= 0, got {value}"
                )));
            }
        }
        if !(t.arc_chord > 0.0) || !t.arc_chord.is_finite() {
            return Err(Error::ProfileValidation(format!(
                "tolerances.arc-chord: must be finite and > 0, got {}",
                t.arc_chord
            )));
        }
        if self.crs.epsg <= 0 {
            return Err(Error::ProfileValidation(format!(
                "crs.epsg: must be > 0, got {}",
                self.crs.epsg
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        // A valid profile contains only serializable data; this cannot fail.
        serde_json::to_string_pretty(self).expect("profile serialization")
    }
}

/// Parses and validates a profile document.
pub fn load_profile(text: &str) -> Result<ConversionProfile> {
    let profile: ConversionProfile =
        serde_json::from_str(text).map_err(|e| Error::ProfileValidation(e.to_string()))?;
    profile.validate()?;
    Ok(profile)
}

/// Glob match supporting `*` (any run, possibly empty) and `?` (exactly one
/// character). Case-sensitive. Iterative with single-star backtracking.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0usize, 0usize);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if let Some((sp, st)) = star {
            // Let the last star absorb one more character and retry.
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}
