//! Binary model file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "ALICE" | version u8 | u32 len, config text | u32 block count
//! per block: u16 len, name | u32 rows | u32 cols | rows*cols f64
//! u32 CRC-32 of every preceding byte
//! ```
//!
//! The config text is `key = value` lines and always includes the model
//! shape, the seed and the score threshold.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::autodiff::Matrix;
use crate::connet::{ConNet, ModelConfig};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"ALICE";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: ConNet,
    /// Extra settings echoed next to the model's own.
    pub extras: BTreeMap<String, String>,
}

fn config_text(model: &ConNet, extras: &BTreeMap<String, String>) -> String {
    let c = model.config();
    let mut keys: BTreeMap<String, String> = extras.clone();
    keys.insert("latent_dim".into(), c.latent_dim.to_string());
    keys.insert("layers".into(), c.layers.to_string());
    keys.insert("struct_width".into(), c.struct_width.to_string());
    keys.insert("attr_width".into(), c.attr_width.to_string());
    keys.insert("dropout".into(), format!("{:?}", c.dropout));
    keys.insert("seed".into(), c.seed.to_string());
    keys.insert("threshold".into(), format!("{:?}", model.threshold()));
    keys.insert("init".into(), "xavier_uniform".into());
    keys.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

#[cfg(test)]
const MODEL_KEYS: [&str; 8] =
    ["latent_dim", "layers", "struct_width", "attr_width", "dropout", "seed", "threshold", "init"];

impl ModelFile {
    pub fn new(model: ConNet) -> Self {
        Self { model, extras: BTreeMap::new() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        let text = config_text(&self.model, &self.extras);
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        let store = self.model.store();
        out.extend_from_slice(&(store.len() as u32).to_le_bytes());
        for id in store.ids() {
            let name = store.name(id).as_bytes();
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name);
            let m = store.value(id);
            out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
            for x in m.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 1 + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Integrity("not a model file".into()));
        }
        let (payload, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        if crc32fast::hash(payload) != stored {
            return Err(Error::Integrity("checksum mismatch".into()));
        }
        let mut r = Reader { buf: payload, pos: MAGIC.len() };
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Integrity(format!("unsupported model file version {version}")));
        }
        let len = r.u32()? as usize;
        let text =
            std::str::from_utf8(r.take(len)?).map_err(|_| Error::Integrity("config text is not UTF-8".into()))?;
        let mut keys = parse_config_text(text)?;
        let config = ModelConfig {
            latent_dim: take_parsed(&mut keys, "latent_dim")?,
            layers: take_parsed(&mut keys, "layers")?,
            struct_width: take_parsed(&mut keys, "struct_width")?,
            attr_width: take_parsed(&mut keys, "attr_width")?,
            dropout: take_parsed(&mut keys, "dropout")?,
            seed: take_parsed(&mut keys, "seed")?,
        };
        let threshold: f64 = take_parsed(&mut keys, "threshold")?;
        keys.remove("init");
        let mut model = ConNet::new(config).map_err(|e| Error::Integrity(format!("stored config: {e}")))?;
        model.set_threshold(threshold);

        let blocks = r.u32()? as usize;
        if blocks != model.store().len() {
            return Err(Error::Integrity(format!(
                "file holds {blocks} parameter blocks, model expects {}",
                model.store().len()
            )));
        }
        for _ in 0..blocks {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Integrity("parameter name is not UTF-8".into()))?
                .to_owned();
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let id =
                model.store().find(&name).ok_or_else(|| Error::Integrity(format!("unexpected parameter {name:?}")))?;
            if model.store().value(id).shape() != (rows, cols) {
                return Err(Error::Integrity(format!(
                    "parameter {name:?} is {rows}x{cols}, expected {:?}",
                    model.store().value(id).shape()
                )));
            }
            let raw = r.take(rows * cols * 8)?;
            let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            *model.store_mut().value_mut(id) = Matrix::from_vec(rows, cols, values)?;
        }
        if r.pos != payload.len() {
            return Err(Error::Integrity("trailing bytes after parameter blocks".into()));
        }
        Ok(Self { model, extras: keys })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Parses `key = value` lines; `#` lines and blanks are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key = value: {t:?}") })?;
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

fn take_parsed<T: std::str::FromStr>(keys: &mut BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = keys.remove(key).ok_or_else(|| Error::Integrity(format!("config echo lacks {key}")))?;
    raw.parse().map_err(|_| Error::Integrity(format!("bad {key} value {raw:?}")))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Integrity("model file is truncated".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ConNet {
        let mut m = ConNet::new(ModelConfig {
            latent_dim: 6,
            layers: 2,
            struct_width: 9,
            attr_width: 4,
            dropout: 0.45,
            seed: 3,
        })
        .unwrap();
        m.set_threshold(0.35);
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut file = ModelFile::new(model());
        file.extras.insert("tau".into(), "0.8".into());
        let bytes = file.to_bytes();
        let back = ModelFile::from_bytes(&bytes).unwrap();
        assert_eq!(back.model.threshold(), 0.35);
        assert_eq!(back.extras.get("tau").map(String::as_str), Some("0.8"));
        for id in file.model.store().ids() {
            let a: Vec<u64> = file.model.store().value(id).data().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = back.model.store().value(id).data().iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b, "{}", file.model.store().name(id));
        }
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn every_single_bit_flip_is_detected() {
        let bytes = ModelFile::new(model()).to_bytes();
        for i in (0..bytes.len()).step_by(7) {
            for bit in [0, 5] {
                let mut bad = bytes.clone();
                bad[i] ^= 1 << bit;
                assert!(matches!(ModelFile::from_bytes(&bad), Err(Error::Integrity(_))), "byte {i} bit {bit}");
            }
        }
        assert!(ModelFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(ModelFile::from_bytes(b"nope").is_err());
    }

    #[test]
    fn config_text_parsing() {
        let keys = parse_config_text("# run\nseed = 4\n\ntau=0.5\n").unwrap();
        assert_eq!(keys["seed"], "4");
        assert_eq!(keys["tau"], "0.5");
        assert!(matches!(parse_config_text("a = 1\nbroken"), Err(Error::Parse { line: 2, .. })));
        assert!(MODEL_KEYS.iter().all(|k| config_text(&model(), &BTreeMap::new()).contains(k)));
    }
}
