//! Suite files: one `algorithm;feature,list` row per line, `#` comments.
//! The feature list may be `all`.

use crate::dataset::FeatureSet;
use crate::models::Family;

use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub family: Family,
    pub features: FeatureSet,
}

impl SuiteRow {
    pub fn label(&self) -> String {
        format!("{}:{}", self.family, self.features.channels().iter().map(|c| c.column()).collect::<Vec<_>>().join("+"))
    }
}

/// The six comparison rows: three model families on every channel, then the
/// MLP on all channels, without the DS18S20, and on the moisture sensors only.
pub const DEFAULT_SUITE: &str = "\
svr;all
rf;all
gbr;all
mlp;all
mlp;sht10_temp_c,sht10_humidity_pct,yl69_raw,sen13322_raw
mlp;yl69_raw,sen13322_raw
";

pub fn parse_feature_list(s: &str) -> Result<FeatureSet, CliError> {
    if s.trim() == "all" {
        return Ok(FeatureSet::all());
    }
    FeatureSet::parse_list(s).map_err(|e| CliError::Config(e.to_string()))
}

pub fn parse_suite(text: &str) -> Result<Vec<SuiteRow>, CliError> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let at = |e: String| CliError::Config(format!("suite line {}: {e}", i + 1));
        let (alg, feats) = body.split_once(';').ok_or_else(|| at("expected `algorithm;feature,list`".into()))?;
        let family: Family = alg.trim().parse().map_err(|e: crate::models::ModelError| at(e.to_string()))?;
        let features = parse_feature_list(feats).map_err(|e| at(e.to_string()))?;
        rows.push(SuiteRow { family, features });
    }
    if rows.is_empty() {
        return Err(CliError::Config("suite has no rows".into()));
    }
    Ok(rows)
}
