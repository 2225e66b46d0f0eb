//! Declared search spaces, parameter values and optimization directions.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Optimization direction of one objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// Maps a value onto the minimization scale.
    #[inline]
    pub fn to_minimization(self, value: f64) -> f64 {
        match self {
            Direction::Minimize => value,
            Direction::Maximize => -value,
        }
    }

    /// `true` if `a` is strictly better than `b` under this direction.
    #[inline]
    pub fn is_better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Minimize => a < b,
            Direction::Maximize => a > b,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("parameter `{param}`: {reason}")]
    InvalidDistribution { param: String, reason: String },
    #[error("parameter name must be non-empty")]
    EmptyName,
    #[error("duplicate parameter `{0}`")]
    DuplicateName(String),
    #[error("parameter `{0}` is missing")]
    MissingParam(String),
    #[error("parameter `{0}` is not declared in the search space")]
    UnknownParam(String),
    #[error("parameter `{param}`: value {value} violates {distribution}")]
    OutOfDomain {
        param: String,
        value: String,
        distribution: String,
    },
}

/// Domain of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Float {
        low: f64,
        high: f64,
        #[serde(default)]
        log_scale: bool,
    },
    Int {
        low: i64,
        high: i64,
    },
    Categorical {
        choices: Vec<String>,
    },
}

impl Distribution {
    pub fn float(low: f64, high: f64) -> Self {
        Distribution::Float {
            low,
            high,
            log_scale: false,
        }
    }

    pub fn log_float(low: f64, high: f64) -> Self {
        Distribution::Float {
            low,
            high,
            log_scale: true,
        }
    }

    pub fn int(low: i64, high: i64) -> Self {
        Distribution::Int { low, high }
    }

    pub fn categorical<I, S>(choices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Distribution::Categorical {
            choices: choices.into_iter().map(Into::into).collect(),
        }
    }

    /// Checks the distribution invariants; `name` is only used for the error.
    pub fn validate(&self, name: &str) -> Result<(), SpaceError> {
        let fail = |reason: &str| SpaceError::InvalidDistribution {
            param: name.to_owned(),
            reason: reason.to_owned(),
        };
        match self {
            Distribution::Float {
                low,
                high,
                log_scale,
            } => {
                if !low.is_finite() || !high.is_finite() {
                    return Err(fail("bounds must be finite"));
                }
                if low > high {
                    return Err(fail(&format!("low {low} exceeds high {high}")));
                }
                if *log_scale && *low <= 0.0 {
                    return Err(fail("log-scale bounds must be positive"));
                }
            }
            Distribution::Int { low, high } => {
                if low > high {
                    return Err(fail(&format!("low {low} exceeds high {high}")));
                }
            }
            Distribution::Categorical { choices } => {
                if choices.is_empty() {
                    return Err(fail("categorical needs at least one choice"));
                }
                for (i, c) in choices.iter().enumerate() {
                    if choices[..i].contains(c) {
                        return Err(fail(&format!("duplicate choice `{c}`")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, Distribution::Categorical { .. })
    }

    pub fn contains(&self, value: &ParamValue) -> bool {
        match (self, value) {
            (Distribution::Float { low, high, .. }, ParamValue::Float(x)) => {
                x.is_finite() && low <= x && x <= high
            }
            (Distribution::Int { low, high }, ParamValue::Int(k)) => low <= k && k <= high,
            (Distribution::Categorical { choices }, ParamValue::Categorical(c)) => {
                choices.contains(c)
            }
            _ => false,
        }
    }

    /// Normalizes a value decoded from an untyped source (an integer literal
    /// for a float parameter becomes a float) and checks membership.
    pub fn coerce(&self, value: &ParamValue) -> Option<ParamValue> {
        let value = match (self, value) {
            (Distribution::Float { .. }, ParamValue::Int(k)) => ParamValue::Float(*k as f64),
            _ => value.clone(),
        };
        self.contains(&value).then_some(value)
    }

    /// Bounds of a numeric distribution in the sampler-internal coordinate
    /// (natural log for log-scale floats).
    pub fn internal_bounds(&self) -> Option<(f64, f64)> {
        match self {
            Distribution::Float {
                low,
                high,
                log_scale: true,
            } => Some((low.ln(), high.ln())),
            Distribution::Float { low, high, .. } => Some((*low, *high)),
            Distribution::Int { low, high } => Some((*low as f64, *high as f64)),
            Distribution::Categorical { .. } => None,
        }
    }

    /// Maps a numeric value into the internal coordinate.
    pub fn to_internal(&self, value: &ParamValue) -> Option<f64> {
        match (self, value) {
            (Distribution::Float { log_scale, .. }, ParamValue::Float(x)) => {
                Some(if *log_scale { x.ln() } else { *x })
            }
            (Distribution::Int { .. }, ParamValue::Int(k)) => Some(*k as f64),
            _ => None,
        }
    }

    /// Maps an internal coordinate back to a value inside the distribution,
    /// clamping and rounding as needed. Panics for categorical distributions.
    pub fn from_internal(&self, internal: f64) -> ParamValue {
        match self {
            Distribution::Float {
                low,
                high,
                log_scale,
            } => {
                let x = if *log_scale { internal.exp() } else { internal };
                let x = if x.is_nan() { *low } else { x };
                ParamValue::Float(x.clamp(*low, *high))
            }
            Distribution::Int { low, high } => {
                let k = if internal.is_nan() {
                    *low
                } else {
                    let r = internal.round();
                    if r <= *low as f64 {
                        *low
                    } else if r >= *high as f64 {
                        *high
                    } else {
                        r as i64
                    }
                };
                ParamValue::Int(k)
            }
            Distribution::Categorical { .. } => {
                panic!("categorical distributions have no internal coordinate")
            }
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Float {
                low,
                high,
                log_scale,
            } => write!(
                f,
                "float[{low}, {high}]{}",
                if *log_scale { " log" } else { "" }
            ),
            Distribution::Int { low, high } => write!(f, "int[{low}, {high}]"),
            Distribution::Categorical { choices } => write!(f, "categorical{choices:?}"),
        }
    }
}

/// Value assigned to one parameter of a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Categorical(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(k) => Some(*k as f64),
            ParamValue::Float(x) => Some(*x),
            ParamValue::Categorical(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Categorical(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(k) => write!(f, "{k}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Categorical(s) => write!(f, "{s:?}"),
        }
    }
}

/// Parameter assignment of a trial, keyed by name.
pub type Params = BTreeMap<String, ParamValue>;

/// Ordered map from parameter name to its domain.
///
/// Serialized as an array of `{"name": .., "kind": .., ...}` objects so that
/// declaration order survives every round trip.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchSpace {
    params: IndexMap<String, Distribution>,
}

impl SearchSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter, validating its name and distribution.
    pub fn add(
        &mut self,
        name: impl Into<String>,
        distribution: Distribution,
    ) -> Result<&mut Self, SpaceError> {
        let name = name.into();
        if name.is_empty() {
            return Err(SpaceError::EmptyName);
        }
        if self.params.contains_key(&name) {
            return Err(SpaceError::DuplicateName(name));
        }
        distribution.validate(&name)?;
        self.params.insert(name, distribution);
        Ok(self)
    }

    /// Builder-style [`SearchSpace::add`].
    pub fn with(mut self, name: impl Into<String>, distribution: Distribution) -> Result<Self, SpaceError> {
        self.add(name, distribution)?;
        Ok(self)
    }

    /// Re-validates every entry.
    pub fn validate(&self) -> Result<(), SpaceError> {
        for (name, dist) in &self.params {
            if name.is_empty() {
                return Err(SpaceError::EmptyName);
            }
            dist.validate(name)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Distribution> {
        self.params.get(name)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &Distribution)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl ExactSizeIterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn has_categorical(&self) -> bool {
        self.params.values().any(Distribution::is_categorical)
    }

    /// Checks that `params` assigns exactly the declared parameters, each
    /// inside its domain.
    pub fn check(&self, params: &Params) -> Result<(), SpaceError> {
        for (name, dist) in &self.params {
            let value = params
                .get(name)
                .ok_or_else(|| SpaceError::MissingParam(name.clone()))?;
            if !dist.contains(value) {
                return Err(SpaceError::OutOfDomain {
                    param: name.clone(),
                    value: value.to_string(),
                    distribution: dist.to_string(),
                });
            }
        }
        if let Some(extra) = params.keys().find(|k| !self.params.contains_key(*k)) {
            return Err(SpaceError::UnknownParam(extra.clone()));
        }
        Ok(())
    }

    /// Like [`SearchSpace::check`] but coerces untyped numeric values first.
    pub fn coerce(&self, params: &Params) -> Result<Params, SpaceError> {
        let mut out = Params::new();
        for (name, dist) in &self.params {
            let value = params
                .get(name)
                .ok_or_else(|| SpaceError::MissingParam(name.clone()))?;
            let coerced = dist.coerce(value).ok_or_else(|| SpaceError::OutOfDomain {
                param: name.clone(),
                value: value.to_string(),
                distribution: dist.to_string(),
            })?;
            out.insert(name.clone(), coerced);
        }
        if let Some(extra) = params.keys().find(|k| !self.params.contains_key(*k)) {
            return Err(SpaceError::UnknownParam(extra.clone()));
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct NamedRef<'a> {
    name: &'a str,
    #[serde(flatten)]
    distribution: &'a Distribution,
}

#[derive(Deserialize)]
struct Named {
    name: String,
    #[serde(flatten)]
    distribution: Distribution,
}

impl Serialize for SearchSpace {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.params.iter().map(|(name, distribution)| NamedRef {
            name,
            distribution,
        }))
    }
}

impl<'de> Deserialize<'de> for SearchSpace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<Named>::deserialize(deserializer)?;
        let mut space = SearchSpace::new();
        for Named { name, distribution } in entries {
            space.add(name, distribution).map_err(D::Error::custom)?;
        }
        Ok(space)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverted_bounds_name_the_parameter() {
        let err = SearchSpace::new()
            .with("x", Distribution::float(2.0, 1.0))
            .unwrap_err();
        match err {
            SpaceError::InvalidDistribution { param, .. } => assert_eq!(param, "x"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn log_scale_requires_positive_low() {
        assert!(Distribution::log_float(0.0, 1.0).validate("lr").is_err());
        assert!(Distribution::log_float(1e-5, 1.0).validate("lr").is_ok());
    }

    #[test]
    fn categorical_rules() {
        assert!(Distribution::categorical(Vec::<String>::new())
            .validate("c")
            .is_err());
        assert!(Distribution::categorical(["a", "a"]).validate("c").is_err());
        assert!(Distribution::categorical(["a"]).validate("c").is_ok());
    }

    #[test]
    fn duplicate_and_empty_names_rejected() {
        let mut s = SearchSpace::new();
        s.add("x", Distribution::float(0.0, 1.0)).unwrap();
        assert_eq!(
            s.add("x", Distribution::float(0.0, 1.0)).unwrap_err(),
            SpaceError::DuplicateName("x".into())
        );
        assert_eq!(
            s.add("", Distribution::float(0.0, 1.0)).unwrap_err(),
            SpaceError::EmptyName
        );
    }

    #[test]
    fn serialization_preserves_order() {
        let space = SearchSpace::new()
            .with("zeta", Distribution::float(-1.0, 1.0))
            .unwrap()
            .with("alpha", Distribution::int(1, 4))
            .unwrap()
            .with("mode", Distribution::categorical(["a", "b"]))
            .unwrap();
        let text = serde_json::to_string(&space).unwrap();
        assert_eq!(
            text,
            r#"[{"name":"zeta","kind":"float","low":-1.0,"high":1.0,"log_scale":false},{"name":"alpha","kind":"int","low":1,"high":4},{"name":"mode","kind":"categorical","choices":["a","b"]}]"#
        );
        let back: SearchSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, space);
        assert_eq!(back.names().collect::<Vec<_>>(), ["zeta", "alpha", "mode"]);
    }

    #[test]
    fn deserialization_validates() {
        let bad = r#"[{"name":"x","kind":"float","low":2,"high":1}]"#;
        assert!(serde_json::from_str::<SearchSpace>(bad).is_err());
        let dup = r#"[{"name":"x","kind":"int","low":1,"high":2},{"name":"x","kind":"int","low":1,"high":2}]"#;
        assert!(serde_json::from_str::<SearchSpace>(dup).is_err());
    }

    #[test]
    fn param_values_decode_by_shape() {
        let p: Params = serde_json::from_str(r#"{"a":1,"b":1.5,"c":"x","d":2.0}"#).unwrap();
        assert_eq!(p["a"], ParamValue::Int(1));
        assert_eq!(p["b"], ParamValue::Float(1.5));
        assert_eq!(p["c"], ParamValue::Categorical("x".into()));
        assert_eq!(p["d"], ParamValue::Float(2.0));
    }

    #[test]
    fn check_reports_missing_extra_and_out_of_domain() {
        let space = SearchSpace::new()
            .with("x", Distribution::float(0.0, 1.0))
            .unwrap();
        let mut p = Params::new();
        assert!(matches!(space.check(&p), Err(SpaceError::MissingParam(_))));
        p.insert("x".into(), ParamValue::Float(2.0));
        assert!(matches!(space.check(&p), Err(SpaceError::OutOfDomain { .. })));
        p.insert("x".into(), ParamValue::Float(0.5));
        assert!(space.check(&p).is_ok());
        p.insert("y".into(), ParamValue::Float(0.5));
        assert!(matches!(space.check(&p), Err(SpaceError::UnknownParam(_))));
    }

    #[test]
    fn coerce_accepts_integer_literal_for_float() {
        let space = SearchSpace::new()
            .with("x", Distribution::float(0.0, 3.0))
            .unwrap();
        let p: Params = [("x".to_string(), ParamValue::Int(2))].into();
        assert_eq!(space.coerce(&p).unwrap()["x"], ParamValue::Float(2.0));
    }

    #[test]
    fn internal_round_trip_stays_in_bounds() {
        let d = Distribution::log_float(1.0, 100.0);
        let (lo, hi) = d.internal_bounds().unwrap();
        assert!(d.contains(&d.from_internal(hi)));
        assert!(d.contains(&d.from_internal(lo)));
        assert_eq!(d.from_internal(1e9), ParamValue::Float(100.0));
        let i = Distribution::int(5, 5);
        assert_eq!(i.from_internal(4.2), ParamValue::Int(5));
    }
}
