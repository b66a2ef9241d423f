//! Scenario specifications: the structured contract between scenario
//! providers and the rest of the pipeline.
//!
//! Providers return free text containing one fenced ```json block; only that
//! block is machine-read. The schema is exactly the [`ScenarioSpec`] fields.
//! A seeded procedural sampler lives here as well so the pipeline can run
//! with no provider at all.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::body::part_index;
use crate::rng::{derive_seed, SplitMix64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Posture {
    Sitting,
    Standing,
    Lying,
}

impl Posture {
    pub fn as_str(&self) -> &'static str {
        match self {
            Posture::Sitting => "sitting",
            Posture::Standing => "standing",
            Posture::Lying => "lying",
        }
    }

    pub fn from_str(s: &str) -> Option<Posture> {
        match s {
            "sitting" => Some(Posture::Sitting),
            "standing" => Some(Posture::Standing),
            "lying" => Some(Posture::Lying),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub human_description: String,
    pub environment_description: String,
    pub task_description: String,
    pub posture: Posture,
    pub room_type: String,
    pub required_furniture: Vec<String>,
    pub relevant_body_parts: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("malformed response at byte {offset}: {message}")]
    MalformedResponse { offset: usize, message: String },
}

fn malformed(offset: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::MalformedResponse {
        offset,
        message: message.into(),
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.relevant_body_parts.is_empty() {
            return Err(malformed(0, "relevant_body_parts must be non-empty"));
        }
        for part in &self.relevant_body_parts {
            if part_index(part).is_none() {
                return Err(malformed(
                    0,
                    format!("relevant_body_parts contains unknown label \"{part}\""),
                ));
            }
        }
        Ok(())
    }

    /// Canonical serialized form: a single-line JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialization cannot fail")
    }
}

/// Locates the fenced structured block: byte range of the JSON text between
/// a ```json opener and the next ``` fence.
fn find_block(raw: &str) -> Result<(usize, usize), ScenarioError> {
    let open = raw
        .find("```json")
        .ok_or_else(|| malformed(0, "no ```json block in response"))?;
    let body_start = match raw[open..].find('\n') {
        Some(nl) => open + nl + 1,
        None => return Err(malformed(open, "unterminated ```json block")),
    };
    let close = raw[body_start..]
        .find("```")
        .ok_or_else(|| malformed(body_start, "unterminated ```json block"))?;
    Ok((body_start, body_start + close))
}

/// Byte offset of `"field"` within the block, for error reporting.
fn field_offset(raw: &str, block: (usize, usize), field: &str) -> usize {
    let needle = format!("\"{field}\"");
    raw[block.0..block.1]
        .find(&needle)
        .map(|i| block.0 + i)
        .unwrap_or(block.0)
}

fn take_string(
    raw: &str,
    block: (usize, usize),
    obj: &serde_json::Map<String, serde_json::Value>,
    field: &str,
) -> Result<String, ScenarioError> {
    match obj.get(field) {
        Some(serde_json::Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(malformed(
            field_offset(raw, block, field),
            format!("field \"{field}\" must be a string"),
        )),
        None => Err(malformed(block.0, format!("missing field \"{field}\""))),
    }
}

fn take_string_list(
    raw: &str,
    block: (usize, usize),
    obj: &serde_json::Map<String, serde_json::Value>,
    field: &str,
) -> Result<Vec<String>, ScenarioError> {
    let off = field_offset(raw, block, field);
    match obj.get(field) {
        Some(serde_json::Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                _ => Err(malformed(
                    off,
                    format!("field \"{field}\" must contain only strings"),
                )),
            })
            .collect(),
        Some(_) => Err(malformed(off, format!("field \"{field}\" must be a list"))),
        None => Err(malformed(block.0, format!("missing field \"{field}\""))),
    }
}

/// Parses a provider payload. Errors carry the byte offset of the failure
/// within `raw`.
pub fn parse_structured_response(raw: &str) -> Result<ScenarioSpec, ScenarioError> {
    let block = find_block(raw)?;
    let text = &raw[block.0..block.1];
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        let offset = block.0
            + text
                .split_inclusive('\n')
                .take(e.line().saturating_sub(1))
                .map(str::len)
                .sum::<usize>()
            + e.column().saturating_sub(1);
        malformed(offset, format!("invalid JSON: {e}"))
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed(block.0, "top-level value must be an object"))?;

    let posture_text = take_string(raw, block, obj, "posture")?;
    let posture = Posture::from_str(&posture_text).ok_or_else(|| {
        malformed(
            field_offset(raw, block, "posture"),
            format!("field \"posture\" has invalid value \"{posture_text}\""),
        )
    })?;
    let relevant_body_parts = take_string_list(raw, block, obj, "relevant_body_parts")?;
    let parts_off = field_offset(raw, block, "relevant_body_parts");
    if relevant_body_parts.is_empty() {
        return Err(malformed(
            parts_off,
            "field \"relevant_body_parts\" must be non-empty",
        ));
    }
    for part in &relevant_body_parts {
        if part_index(part).is_none() {
            return Err(malformed(
                parts_off,
                format!("field \"relevant_body_parts\" has unknown label \"{part}\""),
            ));
        }
    }
    let seed = match obj.get("seed") {
        Some(v) => v.as_u64().ok_or_else(|| {
            malformed(
                field_offset(raw, block, "seed"),
                "field \"seed\" must be an unsigned integer",
            )
        })?,
        None => return Err(malformed(block.0, "missing field \"seed\"")),
    };

    let spec = ScenarioSpec {
        human_description: take_string(raw, block, obj, "human_description")?,
        environment_description: take_string(raw, block, obj, "environment_description")?,
        task_description: take_string(raw, block, obj, "task_description")?,
        posture,
        room_type: take_string(raw, block, obj, "room_type")?,
        required_furniture: take_string_list(raw, block, obj, "required_furniture")?,
        relevant_body_parts,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Task family recognized from prompt keywords.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Scratch,
    Bathe,
}

pub fn task_kind_from_prompt(prompt: &str) -> TaskKind {
    let lower = prompt.to_lowercase();
    if lower.contains("bath") || lower.contains("wash") || lower.contains("clean") {
        TaskKind::Bathe
    } else {
        TaskKind::Scratch
    }
}

/// Body-part label extracted from prompt keywords; falls back to the left
/// forearm, the reference tasks' subject.
pub fn body_part_from_prompt(prompt: &str) -> &'static str {
    let lower = prompt.to_lowercase();
    let side = if lower.contains("right") { "right" } else { "left" };
    let part = if lower.contains("forearm") {
        "forearm"
    } else if lower.contains("upper arm") || lower.contains("shoulder") {
        "upper_arm"
    } else if lower.contains("thigh") {
        "thigh"
    } else if lower.contains("shin") || lower.contains("lower leg") || lower.contains("calf") {
        "lower_leg"
    } else if lower.contains("back") || lower.contains("torso") || lower.contains("chest") {
        return "torso";
    } else if lower.contains("head") || lower.contains("scalp") {
        return "head";
    } else if lower.contains("leg") {
        "thigh"
    } else if lower.contains("arm") || lower.contains("wrist") || lower.contains("elbow") {
        "forearm"
    } else {
        "forearm"
    };
    match (side, part) {
        ("left", "forearm") => "left_forearm",
        ("right", "forearm") => "right_forearm",
        ("left", "upper_arm") => "left_upper_arm",
        ("right", "upper_arm") => "right_upper_arm",
        ("left", "thigh") => "left_thigh",
        ("right", "thigh") => "right_thigh",
        ("left", "lower_leg") => "left_lower_leg",
        _ => "right_lower_leg",
    }
}

const HUMAN_TABLE: [&str; 4] = [
    "an older adult with limited shoulder mobility, seated and relaxed",
    "a middle-aged person recovering from surgery, able to sit upright",
    "an elderly person with reduced grip strength, resting in a chair",
    "an adult with a healing arm injury, seated with the arm supported",
];

const ENV_TABLE: [&str; 3] = [
    "a small tidy room with a {seat} near the center and a side table",
    "a sparsely furnished room with a {seat} facing an open area",
    "a compact room with a {seat} and enough clear floor for a mobile robot",
];

/// Seeded offline scenario sampler: a pure function of (prompt, seed).
/// Placement anchoring is defined for seated humans, so the sampler always
/// emits a sitting posture and a seat requirement.
pub fn sample_scenario(prompt: &str, seed: u64) -> ScenarioSpec {
    let mut rng = SplitMix64::new(derive_seed(seed, "scenario", 0));
    let kind = task_kind_from_prompt(prompt);
    let part = body_part_from_prompt(prompt);
    let human = HUMAN_TABLE[rng.index(HUMAN_TABLE.len())];
    let seat = ["chair", "sofa"][rng.index(2)];
    let env_template = ENV_TABLE[rng.index(ENV_TABLE.len())];
    let environment = env_template.replace("{seat}", seat);
    let room_type = match kind {
        TaskKind::Scratch => "living_room",
        TaskKind::Bathe => "bedroom",
    };
    let task_description = match kind {
        TaskKind::Scratch => format!(
            "Gently scratch a spot on the person's {}.",
            part.replace('_', " ")
        ),
        TaskKind::Bathe => format!(
            "Wipe the person's {} from one end to the other with light contact.",
            part.replace('_', " ")
        ),
    };
    ScenarioSpec {
        human_description: human.to_string(),
        environment_description: environment,
        task_description,
        posture: Posture::Sitting,
        room_type: room_type.to_string(),
        required_furniture: vec![seat.to_string(), "table".to_string()],
        relevant_body_parts: vec![part.to_string()],
        seed,
    }
}
