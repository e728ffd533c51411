//! SKLW weight container.
//!
//! ```text
//! b"SKLW1"  u32 LE index length  index (UTF-8)  payload
//! ```
//!
//! Each index line reads `name dim... offset length`, where `offset` and
//! `length` are byte counts relative to the start of the payload. Tensors are
//! row-major little-endian `f32`.

use std::fmt::Write as _;

use indexmap::IndexMap;

use super::{NetworkParameters, NeuroError, Tensor};

pub const MAGIC: &[u8; 5] = b"SKLW1";

fn format_err(msg: impl Into<String>) -> NeuroError {
    NeuroError::Format(msg.into())
}

/// Parses any SKLW container without checking it against the architecture.
/// Tensor order follows the index.
pub fn parse_container(bytes: &[u8]) -> Result<IndexMap<String, Tensor>, NeuroError> {
    let rest = bytes
        .strip_prefix(MAGIC.as_slice())
        .ok_or_else(|| format_err("missing SKLW1 magic"))?;
    let len_bytes: [u8; 4] = rest
        .get(..4)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| format_err("truncated index length"))?;
    let index_len = u32::from_le_bytes(len_bytes) as usize;
    let rest = &rest[4..];
    if rest.len() < index_len {
        return Err(format_err("truncated index"));
    }
    let index = std::str::from_utf8(&rest[..index_len]).map_err(|_| format_err("index is not UTF-8"))?;
    let payload = &rest[index_len..];

    let mut tensors = IndexMap::new();
    for (lineno, line) in index.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(format_err(format!("index line {}: too few fields", lineno + 1)));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| format_err(format!("index line {}: bad number {s:?}", lineno + 1)))
        };
        let name = fields[0].to_string();
        let n = fields.len();
        let shape = fields[1..n - 2].iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
        let offset = num(fields[n - 2])?;
        let length = num(fields[n - 1])?;
        let numel: usize = shape.iter().product();
        if length != numel * 4 {
            return Err(format_err(format!("{name}: {length} bytes for shape {shape:?}")));
        }
        let raw = offset
            .checked_add(length)
            .and_then(|end| payload.get(offset..end))
            .ok_or_else(|| format_err(format!("{name}: payload range out of bounds")))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if tensors.insert(name.clone(), Tensor { shape, data }).is_some() {
            return Err(format_err(format!("duplicate tensor {name}")));
        }
    }
    Ok(tensors)
}

/// Parses a container and validates it against the canonical architecture.
pub fn load_weights(bytes: &[u8]) -> Result<NetworkParameters, NeuroError> {
    let tensors = parse_container(bytes)?;
    for (name, t) in &tensors {
        if t.data.iter().any(|v| !v.is_finite()) {
            return Err(NeuroError::NonFiniteValue(name.clone()));
        }
    }
    NetworkParameters::new(tensors)
}

/// Serializes tensors in iteration order, packed back to back.
pub fn encode_container<'a>(tensors: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<u8> {
    let mut index = String::new();
    let mut payload = Vec::new();
    for (name, t) in tensors {
        let _ = write!(index, "{name}");
        for d in &t.shape {
            let _ = write!(index, " {d}");
        }
        let _ = writeln!(index, " {} {}", payload.len(), t.numel() * 4);
        for v in &t.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + index.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(index.len() as u32).to_le_bytes());
    out.extend_from_slice(index.as_bytes());
    out.extend_from_slice(&payload);
    out
}

pub fn save_weights(params: &NetworkParameters) -> Vec<u8> {
    encode_container(params.tensors().iter().map(|(k, v)| (k.as_str(), v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_built_container() {
        let mut bytes = b"SKLW1".to_vec();
        let index = "b 2 0 8\na 1 1 8 4\n";
        bytes.extend_from_slice(&(index.len() as u32).to_le_bytes());
        bytes.extend_from_slice(index.as_bytes());
        for v in [1.5f32, -2.0, 0.25] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let t = parse_container(&bytes).unwrap();
        assert_eq!(t.keys().collect::<Vec<_>>(), vec!["b", "a"]);
        assert_eq!(t["b"].data, vec![1.5, -2.0]);
        assert_eq!(t["a"].shape, vec![1, 1]);
        assert_eq!(t["a"].data, vec![0.25]);
        // not a SkelUnet, so the validated loader refuses it
        assert!(matches!(load_weights(&bytes), Err(NeuroError::Format(_))));
    }

    #[test]
    fn round_trip() {
        let params = NetworkParameters::random(11);
        let bytes = save_weights(&params);
        assert_eq!(&bytes[..5], b"SKLW1");
        assert_eq!(load_weights(&bytes).unwrap(), params);
    }

    #[test]
    fn nan_is_rejected() {
        let mut t = NetworkParameters::zeros().tensors().clone();
        t["enc3.conv1.weight"].data[100] = f32::NAN;
        let bytes = encode_container(t.iter().map(|(k, v)| (k.as_str(), v)));
        assert_eq!(
            load_weights(&bytes).unwrap_err(),
            NeuroError::NonFiniteValue("enc3.conv1.weight".into())
        );
    }

    #[test]
    fn malformed_containers() {
        assert!(parse_container(b"SKLW2\0\0\0\0").is_err());
        assert!(parse_container(b"SKLW1\x10\0\0\0short").is_err());
        let mut bytes = b"SKLW1".to_vec();
        let index = "w 4 0 16\n";
        bytes.extend_from_slice(&(index.len() as u32).to_le_bytes());
        bytes.extend_from_slice(index.as_bytes());
        bytes.extend_from_slice(&[0u8; 12]);
        assert!(parse_container(&bytes)
            .unwrap_err()
            .to_string()
            .contains("out of bounds"));
    }

    #[test]
    fn shape_mismatch_through_loader() {
        let mut t = NetworkParameters::zeros().tensors().clone();
        t["dec1.up.weight"] = Tensor::zeros(&[32, 16, 3, 3]);
        let bytes = encode_container(t.iter().map(|(k, v)| (k.as_str(), v)));
        assert_eq!(
            load_weights(&bytes).unwrap_err(),
            NeuroError::ShapeMismatch {
                name: "dec1.up.weight".into(),
                expected: vec![32, 16, 2, 2],
                got: vec![32, 16, 3, 3],
            }
        );
    }
}
