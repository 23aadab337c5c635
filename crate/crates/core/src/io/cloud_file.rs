use super::IoError;
use crate::cloud::PointCloud;
use crate::geom::Vec3;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"LCPC";
pub const CLOUD_FORMAT_VERSION: u32 = 1;
const FLAG_RINGS: u32 = 1;
const HEADER_LEN: usize = 16;
const TEXT_HEADER: &str = "# lcpc-text";

/// Binary layout: magic, version, point count, flags (little-endian u32),
/// then packed f32 xyz, then one u16 ring per point if flagged.
pub fn encode_cloud(cloud: &PointCloud) -> Vec<u8> {
    let n = cloud.points.len();
    let mut buf = Vec::with_capacity(HEADER_LEN + n * 14);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CLOUD_FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    let flags = if cloud.rings.is_some() { FLAG_RINGS } else { 0 };
    buf.extend_from_slice(&flags.to_le_bytes());
    for p in &cloud.points {
        for v in p.iter() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    if let Some(rings) = &cloud.rings {
        for r in rings {
            buf.extend_from_slice(&r.to_le_bytes());
        }
    }
    buf
}

pub fn decode_cloud(bytes: &[u8], path: &Path) -> Result<PointCloud, IoError> {
    let parse = |offset: usize, message: &str| IoError::Parse {
        path: path.to_path_buf(),
        location: format!("byte {offset}"),
        message: message.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(parse(bytes.len(), "truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(parse(0, "bad magic"));
    }
    let word = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let version = word(4);
    if version != CLOUD_FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version as u64,
            supported: CLOUD_FORMAT_VERSION as u64,
        });
    }
    let n = word(8) as usize;
    let flags = word(12);
    if flags & !FLAG_RINGS != 0 {
        return Err(parse(12, "unknown flags"));
    }
    let has_rings = flags & FLAG_RINGS != 0;
    let expected = HEADER_LEN + n * 12 + if has_rings { n * 2 } else { 0 };
    if bytes.len() != expected {
        return Err(parse(
            bytes.len().min(expected),
            &format!(
                "expected {expected} bytes for {n} points, found {}",
                bytes.len()
            ),
        ));
    }
    let f =
        |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
    let points = (0..n)
        .map(|i| {
            let o = HEADER_LEN + 12 * i;
            Vec3::new(f(o), f(o + 4), f(o + 8))
        })
        .collect();
    let rings = has_rings.then(|| {
        let base = HEADER_LEN + 12 * n;
        (0..n)
            .map(|i| u16::from_le_bytes([bytes[base + 2 * i], bytes[base + 2 * i + 1]]))
            .collect()
    });
    Ok(PointCloud { points, rings })
}

/// One point per line, `x y z [ring]`, after a `# lcpc-text 1 [rings]` header.
pub fn encode_cloud_text(cloud: &PointCloud) -> String {
    let mut s = format!(
        "{TEXT_HEADER} {CLOUD_FORMAT_VERSION}{}\n",
        if cloud.rings.is_some() { " rings" } else { "" }
    );
    for (i, p) in cloud.points.iter().enumerate() {
        // f32 Display is the shortest string that round-trips.
        s.push_str(&format!("{} {} {}", p.x as f32, p.y as f32, p.z as f32));
        if let Some(r) = &cloud.rings {
            s.push_str(&format!(" {}", r[i]));
        }
        s.push('\n');
    }
    s
}

pub fn decode_cloud_text(text: &str, path: &Path) -> Result<PointCloud, IoError> {
    let parse = |line: usize, message: String| IoError::Parse {
        path: path.to_path_buf(),
        location: format!("line {line}"),
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse(1, "missing header".into()))?;
    let fields: Vec<&str> = header
        .strip_prefix(TEXT_HEADER)
        .ok_or_else(|| parse(1, "bad header".into()))?
        .split_whitespace()
        .collect();
    let version: u64 = fields
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse(1, "missing version".into()))?;
    if version != CLOUD_FORMAT_VERSION as u64 {
        return Err(IoError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version,
            supported: CLOUD_FORMAT_VERSION as u64,
        });
    }
    let has_rings = fields.get(1) == Some(&"rings");
    let mut points = Vec::new();
    let mut rings = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let want = if has_rings { 4 } else { 3 };
        if parts.len() != want {
            return Err(parse(
                i + 1,
                format!("expected {want} fields, found {}", parts.len()),
            ));
        }
        let mut xyz = [0.0; 3];
        for k in 0..3 {
            xyz[k] = parts[k]
                .parse::<f32>()
                .map_err(|e| parse(i + 1, format!("field {}: {e}", k + 1)))?
                as f64;
        }
        points.push(Vec3::from(xyz));
        if has_rings {
            rings.push(
                parts[3]
                    .parse::<u16>()
                    .map_err(|e| parse(i + 1, format!("ring: {e}")))?,
            );
        }
    }
    Ok(PointCloud {
        points,
        rings: has_rings.then_some(rings),
    })
}

fn is_text(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "txt")
}

/// Writes binary unless the path ends in `.txt`.
pub fn save_cloud(path: &Path, cloud: &PointCloud) -> Result<(), IoError> {
    let bytes = if is_text(path) {
        encode_cloud_text(cloud).into_bytes()
    } else {
        encode_cloud(cloud)
    };
    let mut f = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| IoError::io(path, e))
}

/// Reads either variant, recognized by content.
pub fn load_cloud(path: &Path) -> Result<PointCloud, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    if bytes.starts_with(TEXT_HEADER.as_bytes()) {
        let text = String::from_utf8(bytes).map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            location: format!("byte {}", e.utf8_error().valid_up_to()),
            message: "invalid UTF-8".into(),
        })?;
        decode_cloud_text(&text, path)
    } else {
        decode_cloud(&bytes, path)
    }
}

const LABEL_MAGIC: &[u8; 4] = b"LCLB";

/// Per-point labels: magic, version, count, then little-endian i32s.
pub fn encode_labels(labels: &[i32]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(12 + 4 * labels.len());
    buf.extend_from_slice(LABEL_MAGIC);
    buf.extend_from_slice(&CLOUD_FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(labels.len() as u32).to_le_bytes());
    for l in labels {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    buf
}

pub fn decode_labels(bytes: &[u8], path: &Path) -> Result<Vec<i32>, IoError> {
    let parse = |offset: usize, message: &str| IoError::Parse {
        path: path.to_path_buf(),
        location: format!("byte {offset}"),
        message: message.to_string(),
    };
    if bytes.len() < 12 || &bytes[0..4] != LABEL_MAGIC {
        return Err(parse(0, "bad label header"));
    }
    let word = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let version = word(4);
    if version != CLOUD_FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version as u64,
            supported: CLOUD_FORMAT_VERSION as u64,
        });
    }
    let n = word(8) as usize;
    if bytes.len() != 12 + 4 * n {
        return Err(parse(bytes.len(), "label count does not match file length"));
    }
    Ok((0..n).map(|i| word(12 + 4 * i) as i32).collect())
}
