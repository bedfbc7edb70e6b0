//! Binary model archive.
//!
//! Layout (little-endian):
//!
//! ```text
//! u8      format version
//! [u8;4]  magic "EMPA"
//! u64     total archive length in bytes, checksum included
//! repeated sections: u8 tag, u64 payload length, payload
//!         1 = header, 2 = vocabulary, 3 = model
//! u32     CRC-32 of every preceding byte
//! ```
//!
//! Floats are stored as raw IEEE-754 bits, so a reloaded model predicts
//! bit-for-bit like the one that was saved.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::classifiers::{Classifier, DecisionTree, LrModel, MnbModel, Node, RfModel};
use crate::ensemble::{EnsembleSpec, Language, MetaSpec, TrainedModel};
use crate::error::{Error, Result};
use crate::features::Vocabulary;
use crate::pipeline::{TrainedPipeline, TrainingMetadata};
use crate::preprocess::AsciiPolicy;

pub const FORMAT_VERSION: u8 = 1;
const MAGIC: &[u8; 4] = b"EMPA";
const PREAMBLE_LEN: usize = 1 + 4 + 8;
const CHECKSUM_LEN: usize = 4;

const SECTION_HEADER: u8 = 1;
const SECTION_VOCABULARY: u8 = 2;
const SECTION_MODEL: u8 = 3;

const MODEL_MNB: u8 = 0;
const MODEL_LR: u8 = 1;
const MODEL_RF: u8 = 2;
const MODEL_ENSEMBLE: u8 = 3;
const MODEL_META: u8 = 4;

const NODE_SPLIT: u8 = 0;
const NODE_LEAF: u8 = 1;

#[derive(Default)]
struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn len(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn f64s(&mut self, vs: &[f64]) {
        self.len(vs.len());
        for &v in vs {
            self.f64(v);
        }
    }

    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn section(&mut self, tag: u8, body: Encoder) {
        self.u8(tag);
        self.len(body.buf.len());
        self.buf.extend_from_slice(&body.buf);
    }
}

struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Decoder { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Malformed(format!("field at byte {} overruns its section", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// A length or index; bounded by the remaining bytes when it counts
    /// items of at least `min_item` bytes.
    fn len(&mut self, min_item: usize) -> Result<usize> {
        let n = usize::try_from(self.u64()?).map_err(|_| Error::Malformed("length overflow".into()))?;
        if min_item > 0 && n > (self.buf.len() - self.pos) / min_item {
            return Err(Error::Malformed(format!("length {n} exceeds remaining data")));
        }
        Ok(n)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn str(&mut self) -> Result<String> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Malformed("invalid UTF-8 string".into()))
    }

    fn finish(&self, what: &str) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Malformed(format!("trailing bytes in {what}")));
        }
        Ok(())
    }
}

fn encode_model(enc: &mut Encoder, model: &TrainedModel) {
    match model {
        TrainedModel::Mnb(m) => {
            enc.u8(MODEL_MNB);
            enc.len(m.dimension());
            enc.f64s(m.log_priors());
            for row in m.log_likelihoods() {
                enc.f64s(row);
            }
        }
        TrainedModel::Lr(m) => {
            enc.u8(MODEL_LR);
            enc.len(m.dimension());
            enc.f64s(m.intercepts());
            for w in m.weights() {
                enc.f64s(w);
            }
        }
        TrainedModel::Rf(m) => {
            enc.u8(MODEL_RF);
            enc.len(m.dimension());
            enc.len(m.num_classes());
            enc.len(m.trees().len());
            for tree in m.trees() {
                enc.len(tree.nodes().len());
                for node in tree.nodes() {
                    match node {
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            enc.u8(NODE_SPLIT);
                            enc.len(*feature);
                            enc.f64(*threshold);
                            enc.len(*left);
                            enc.len(*right);
                        }
                        Node::Leaf { counts } => {
                            enc.u8(NODE_LEAF);
                            for &c in counts {
                                enc.u32(c);
                            }
                        }
                    }
                }
            }
        }
        TrainedModel::Ensemble(e) => {
            enc.u8(MODEL_ENSEMBLE);
            encode_ensemble(enc, e);
        }
        TrainedModel::Meta(m) => {
            enc.u8(MODEL_META);
            enc.f64(m.weights()[0]);
            enc.f64(m.weights()[1]);
            encode_ensemble(enc, m.ensemble1());
            encode_ensemble(enc, m.ensemble2());
        }
    }
}

fn encode_ensemble(enc: &mut Encoder, e: &EnsembleSpec) {
    enc.f64s(e.weights());
    for m in e.members() {
        encode_model(enc, m);
    }
}

fn decode_model(dec: &mut Decoder<'_>) -> Result<TrainedModel> {
    match dec.u8()? {
        MODEL_MNB => {
            let dimension = dec.len(0)?;
            let priors = dec.f64s()?;
            let likelihoods = (0..priors.len()).map(|_| dec.f64s()).collect::<Result<_>>()?;
            Ok(TrainedModel::Mnb(MnbModel::from_parts(priors, likelihoods, dimension)?))
        }
        MODEL_LR => {
            let dimension = dec.len(0)?;
            let intercepts = dec.f64s()?;
            let weights = (0..intercepts.len()).map(|_| dec.f64s()).collect::<Result<_>>()?;
            Ok(TrainedModel::Lr(LrModel::from_parts(weights, intercepts, dimension)?))
        }
        MODEL_RF => {
            let dimension = dec.len(0)?;
            let k = dec.len(4)?;
            let n_trees = dec.len(1)?;
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let n_nodes = dec.len(1)?;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    nodes.push(match dec.u8()? {
                        NODE_SPLIT => Node::Split {
                            feature: dec.len(0)?,
                            threshold: dec.f64()?,
                            left: dec.len(0)?,
                            right: dec.len(0)?,
                        },
                        NODE_LEAF => Node::Leaf {
                            counts: (0..k).map(|_| dec.u32()).collect::<Result<_>>()?,
                        },
                        t => return Err(Error::Malformed(format!("unknown tree node tag {t}"))),
                    });
                }
                trees.push(DecisionTree::from_nodes(nodes, k, dimension)?);
            }
            Ok(TrainedModel::Rf(RfModel::from_trees(trees, k, dimension)?))
        }
        MODEL_ENSEMBLE => Ok(TrainedModel::Ensemble(decode_ensemble(dec)?)),
        MODEL_META => {
            let weights = [dec.f64()?, dec.f64()?];
            let e1 = decode_ensemble(dec)?;
            let e2 = decode_ensemble(dec)?;
            Ok(TrainedModel::Meta(Box::new(MetaSpec::new(e1, e2, weights)?)))
        }
        t => Err(Error::Malformed(format!("unknown model tag {t}"))),
    }
}

fn decode_ensemble(dec: &mut Decoder<'_>) -> Result<EnsembleSpec> {
    let weights = dec.f64s()?;
    let members = (0..weights.len()).map(|_| decode_model(dec)).collect::<Result<_>>()?;
    EnsembleSpec::new(members, weights)
}

/// Serializes a trained pipeline.
pub fn to_bytes(p: &TrainedPipeline) -> Vec<u8> {
    let mut header = Encoder::default();
    header.str(p.language.tag());
    header.str(p.ascii_policy.as_str());
    header.u64(p.metadata.seed);
    header.u64(p.metadata.train_rows);
    header.u64(p.metadata.resampled_rows);
    header.u32(p.metadata.num_classes);
    header.u64(p.metadata.timestamp);

    let mut vocab = Encoder::default();
    vocab.len(p.vocabulary.len());
    for f in p.vocabulary.features() {
        vocab.str(f);
    }

    let mut model = Encoder::default();
    encode_model(&mut model, &TrainedModel::Meta(Box::new(p.meta.clone())));

    let mut out = Encoder::default();
    out.u8(FORMAT_VERSION);
    out.buf.extend_from_slice(MAGIC);
    out.u64(0); // patched below
    out.section(SECTION_HEADER, header);
    out.section(SECTION_VOCABULARY, vocab);
    out.section(SECTION_MODEL, model);
    let total = (out.buf.len() + CHECKSUM_LEN) as u64;
    out.buf[5..13].copy_from_slice(&total.to_le_bytes());
    let crc = crc32fast::hash(&out.buf);
    out.u32(crc);
    out.buf
}

/// Parses an archive, checking version, length and checksum before
/// touching the payload.
pub fn from_bytes(bytes: &[u8]) -> Result<TrainedPipeline> {
    let Some(&version) = bytes.first() else {
        return Err(Error::Truncated {
            expected: PREAMBLE_LEN + CHECKSUM_LEN,
            actual: 0,
        });
    };
    if version == 0 || version > FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    if bytes.len() < PREAMBLE_LEN + CHECKSUM_LEN {
        return Err(Error::Truncated {
            expected: PREAMBLE_LEN + CHECKSUM_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[1..5] != MAGIC {
        return Err(Error::Malformed("not a model archive (bad magic)".into()));
    }
    let total = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
    let total = usize::try_from(total).map_err(|_| Error::Malformed("archive length overflow".into()))?;
    if bytes.len() < total {
        return Err(Error::Truncated {
            expected: total,
            actual: bytes.len(),
        });
    }
    if bytes.len() > total {
        return Err(Error::Malformed(format!(
            "{} unexpected bytes after the archive end",
            bytes.len() - total
        )));
    }
    let (body, stored) = bytes.split_at(total - CHECKSUM_LEN);
    let stored = u32::from_le_bytes(stored.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut dec = Decoder::new(&body[PREAMBLE_LEN..]);
    let mut header = None;
    let mut vocabulary = None;
    let mut model = None;
    while dec.pos < dec.buf.len() {
        let tag = dec.u8()?;
        let len = dec.len(1)?;
        let mut section = Decoder::new(dec.take(len)?);
        match tag {
            SECTION_HEADER => {
                let language: Language = section.str()?.parse()?;
                let policy: AsciiPolicy = section.str()?.parse()?;
                let metadata = TrainingMetadata {
                    seed: section.u64()?,
                    train_rows: section.u64()?,
                    resampled_rows: section.u64()?,
                    num_classes: section.u32()?,
                    timestamp: section.u64()?,
                };
                section.finish("header")?;
                header = Some((language, policy, metadata));
            }
            SECTION_VOCABULARY => {
                let n = section.len(8)?;
                let features = (0..n).map(|_| section.str()).collect::<Result<Vec<_>>>()?;
                section.finish("vocabulary")?;
                let vocab = Vocabulary::from_features(features.clone());
                if vocab.features() != features.as_slice() {
                    return Err(Error::Malformed("vocabulary is not sorted and unique".into()));
                }
                vocabulary = Some(vocab);
            }
            SECTION_MODEL => {
                let m = decode_model(&mut section)?;
                section.finish("model")?;
                model = Some(m);
            }
            t => return Err(Error::Malformed(format!("unknown section tag {t}"))),
        }
    }
    let (language, ascii_policy, metadata) = header.ok_or_else(|| Error::Malformed("missing header".into()))?;
    let vocabulary = vocabulary.ok_or_else(|| Error::Malformed("missing vocabulary".into()))?;
    let meta = match model {
        Some(TrainedModel::Meta(m)) => *m,
        Some(_) => return Err(Error::Malformed("top-level model is not a meta ensemble".into())),
        None => return Err(Error::Malformed("missing model".into())),
    };
    if meta.dimension() != vocabulary.len() {
        return Err(Error::Malformed(format!(
            "model dimension {} does not match vocabulary size {}",
            meta.dimension(),
            vocabulary.len()
        )));
    }
    if meta.num_classes() != metadata.num_classes as usize {
        return Err(Error::Malformed("model class count disagrees with header".into()));
    }
    Ok(TrainedPipeline {
        language,
        ascii_policy,
        vocabulary,
        meta,
        metadata,
    })
}

/// Writes the archive atomically: a temporary file in the target directory
/// is renamed over `path`.
pub fn save(p: &TrainedPipeline, path: &Path) -> Result<()> {
    write_atomic(path, &to_bytes(p))
}

pub fn load(path: &Path) -> Result<TrainedPipeline> {
    from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
