use serde::Serialize;
use sha2::{Digest, Sha256};

/// Wall-clock block kept outside the hashed result.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timing {
    pub wall_time_s: f64,
}

/// Result document: the deterministic `result`, its SHA-256 digest and an
/// optional timing block.
#[derive(Debug, Serialize)]
pub struct Document<'a, T: Serialize> {
    pub result: &'a T,
    pub digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl<'a, T: Serialize> Document<'a, T> {
    pub fn new(result: &'a T, timing: Option<Timing>) -> Self {
        Self {
            result,
            digest: digest(result),
            timing,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result documents serialize");
        s.push('\n');
        s
    }
}

/// Hex SHA-256 of the canonical encoding of `value`: compact JSON with
/// object keys sorted, so readers can recompute it from the parsed file.
pub fn digest<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value).expect("result documents serialize");
    let bytes = serde_json::to_vec(&canonical).expect("values serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Solver parameters, serialized as an object in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(pub Vec<(String, String)>);

impl Serialize for Params {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}
