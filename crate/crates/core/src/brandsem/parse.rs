use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::client::Stage;
use super::BrandTier;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct S1Response {
    pub brands_found: Vec<String>,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedOutput {
    S1(S1Response),
    /// Raw brand string as returned by the model -> tier.
    S2(BTreeMap<String, BrandTier>),
}

fn parse_error(message: impl Into<String>, raw: &str) -> Error {
    Error::ModelParse {
        message: message.into(),
        raw: raw.to_string(),
    }
}

/// Removes surrounding whitespace and a Markdown code fence, if present.
fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    // drop the info string ("json") on the opening line
    let body = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest,
    };
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

pub fn parse_s1(text: &str) -> Result<S1Response> {
    let body = strip_fences(text);
    if body.is_empty() {
        return Err(parse_error("empty response", text));
    }
    let parsed: S1Response = serde_json::from_str(body).map_err(|e| parse_error(format!("stage-one schema: {e}"), text))?;
    if parsed.brands_found.iter().any(|b| b.trim().is_empty()) {
        return Err(parse_error("stage-one brands_found contains a blank entry", text));
    }
    Ok(parsed)
}

pub fn parse_s2(text: &str) -> Result<BTreeMap<String, BrandTier>> {
    let body = strip_fences(text);
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| parse_error(format!("stage-two output is not JSON: {e}"), text))?;
    let obj = value
        .as_object()
        .ok_or_else(|| parse_error("stage-two output must be a JSON object", text))?;
    let mut out = BTreeMap::new();
    for (brand, tier) in obj {
        let tier = tier
            .as_str()
            .ok_or_else(|| parse_error(format!("tier for `{brand}` is not a string"), text))?;
        let tier: BrandTier = tier.parse().map_err(|e: String| parse_error(e, text))?;
        out.insert(brand.clone(), tier);
    }
    Ok(out)
}

/// Strict parse of a model reply for the given stage.
pub fn parse_model_json(text: &str, stage: Stage) -> Result<ParsedOutput> {
    match stage {
        Stage::S1 => parse_s1(text).map(ParsedOutput::S1),
        Stage::S2 => parse_s2(text).map(ParsedOutput::S2),
    }
}
