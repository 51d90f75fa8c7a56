//! Deterministic stand-in for a vision-language embedding model.
//!
//! Images and concept names share the 16-dimensional descriptor space.
//! Canonical concepts point along signed descriptor axes; every other name
//! gets a pseudorandom unit direction derived from its hash.

pub mod descriptor;

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ndarray::{Array2, Axis};

pub use descriptor::{axis, foreground, image_descriptor, Component, Descriptor, Foreground, DESCRIPTOR_DIM};

use crate::image::Image;
use crate::rng::{fnv1a, Stream};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("duplicate concept {0:?}")]
    DuplicateConcept(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Canonical concept directions: (name, axis, sign).
pub const CANONICAL: [(&str, usize, f64); 16] = [
    ("red", axis::CHROMA_R, 1.0),
    ("green", axis::CHROMA_G, 1.0),
    ("loops", axis::OUTLINE, 1.0),
    ("spots", axis::FILL, 1.0),
    ("bars", axis::STRIPE, 1.0),
    ("cube", axis::SOLID, 1.0),
    ("many", axis::COUNT, 1.0),
    ("one", axis::OUTLINE, -1.0),
    ("left", axis::CENTROID_X, -1.0),
    ("right", axis::CENTROID_X, 1.0),
    ("top", axis::CENTROID_Y, -1.0),
    ("bottom", axis::CENTROID_Y, 1.0),
    ("horizontal", axis::EDGE_V, 1.0),
    ("vertical", axis::EDGE_H, 1.0),
    ("square", axis::CORNER, 1.0),
    ("circle", axis::ROUND, 1.0),
];

pub const DEFAULT_VOCAB_SIZE: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct Concept {
    pub name: String,
    pub embedding: Descriptor,
    pub canonical: bool,
}

/// Embedding for a name: the canonical axis if there is one, otherwise a
/// unit Gaussian direction seeded by the FNV-1a hash of the name.
pub fn embed_name(name: &str) -> (Descriptor, bool) {
    if let Some(&(_, ax, sign)) = CANONICAL.iter().find(|(n, _, _)| *n == name) {
        let mut e = [0.0; DESCRIPTOR_DIM];
        e[ax] = sign;
        return (e, true);
    }
    let mut rng = Stream::new(fnv1a(name.as_bytes()), 0xC0C);
    let mut e = [0.0; DESCRIPTOR_DIM];
    loop {
        for v in e.iter_mut() {
            *v = rng.normal();
        }
        let n = norm(&e);
        if n > 1e-6 {
            e.iter_mut().for_each(|v| *v /= n);
            return (e, false);
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

const ONSETS: [&str; 20] = ["b", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "ch", "sh", "th"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];

/// The `i`-th generated three-syllable pseudo-word. Distinct for
/// `i < 100^3` and never equal to a canonical name.
pub fn pseudo_word(i: usize) -> String {
    let syl = |k: usize| format!("{}{}", ONSETS[k / 5], NUCLEI[k % 5]);
    format!("{}{}{}", syl(i / 10_000 % 100), syl(i / 100 % 100), syl(i % 100))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConceptVocabulary {
    concepts: Vec<Concept>,
    index: HashMap<String, usize>,
}

impl ConceptVocabulary {
    pub fn from_names<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Result<Self, OracleError> {
        let mut concepts = Vec::new();
        let mut index = HashMap::new();
        for name in names {
            let name = name.as_ref().to_string();
            if index.contains_key(&name) {
                return Err(OracleError::DuplicateConcept(name));
            }
            let (embedding, canonical) = embed_name(&name);
            index.insert(name.clone(), concepts.len());
            concepts.push(Concept { name, embedding, canonical });
        }
        if concepts.is_empty() {
            return Err(OracleError::Empty("vocabulary"));
        }
        Ok(Self { concepts, index })
    }

    /// The 16 canonical names followed by `k - 16` pseudo-words.
    pub fn with_size(k: usize) -> Self {
        let canon = CANONICAL.iter().map(|(n, _, _)| n.to_string());
        let names: Vec<String> = canon.chain((0..k.saturating_sub(CANONICAL.len())).map(pseudo_word)).take(k).collect();
        Self::from_names(names).expect("generated names are unique")
    }

    pub fn default_vocabulary() -> Self {
        Self::with_size(DEFAULT_VOCAB_SIZE)
    }

    /// Only generated pseudo-words, for null calibration.
    pub fn distractors_only(k: usize) -> Self {
        Self::from_names((0..k).map(pseudo_word)).expect("generated names are unique")
    }

    /// Reads one name per line; blank lines and surrounding space are ignored.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let text = fs::read_to_string(path)?;
        Self::from_names(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), OracleError> {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        for c in &self.concepts {
            writeln!(f, "{}", c.name)?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn names(&self) -> Vec<String> {
        self.concepts.iter().map(|c| c.name.clone()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// K × 16 matrix of unit embeddings.
    pub fn embedding_matrix(&self) -> Array2<f64> {
        let mut t = Array2::zeros((self.len(), DESCRIPTOR_DIM));
        for (k, c) in self.concepts.iter().enumerate() {
            for (j, &v) in c.embedding.iter().enumerate() {
                t[[k, j]] = v;
            }
        }
        t
    }
}

pub fn concept_embedding(name: &str, vocab: &ConceptVocabulary) -> Result<Descriptor, OracleError> {
    vocab
        .position(name)
        .map(|k| vocab.concepts[k].embedding)
        .ok_or_else(|| OracleError::UnknownConcept(name.to_string()))
}

/// Y matrix of cosine similarities between images and concepts.
#[derive(Clone, Debug, PartialEq)]
pub struct ConceptLabelMatrix {
    pub values: Array2<f64>,
    /// Generation seeds of the rows.
    pub image_ids: Vec<u64>,
    pub concept_names: Vec<String>,
    /// Rows whose descriptor was zero; their similarities are set to 0.
    pub zero_rows: Vec<usize>,
}

impl ConceptLabelMatrix {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.column(k).to_vec()
    }

    /// CSV with a header of concept names, one row per image.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), OracleError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["image_id".to_string()];
        header.extend(self.concept_names.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.values.axis_iter(Axis(0)).enumerate() {
            let mut rec = vec![self.image_ids[i].to_string()];
            rec.extend(row.iter().map(|v| format!("{v:.17e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Row-normalized descriptors (N × 16) plus the indices of zero rows.
pub fn normalized_descriptors(descriptors: &[Descriptor]) -> (Array2<f64>, Vec<usize>) {
    let mut u = Array2::zeros((descriptors.len(), DESCRIPTOR_DIM));
    let mut zero = Vec::new();
    for (i, d) in descriptors.iter().enumerate() {
        let n = norm(d);
        if n == 0.0 {
            zero.push(i);
            continue;
        }
        for (j, &v) in d.iter().enumerate() {
            u[[i, j]] = v / n;
        }
    }
    (u, zero)
}

/// Y = U Tᵀ for precomputed descriptors; entries are clamped to [-1, 1]
/// against rounding.
pub fn label_matrix_from_descriptors(descriptors: &[Descriptor], ids: Vec<u64>, vocab: &ConceptVocabulary) -> ConceptLabelMatrix {
    let (u, zero_rows) = normalized_descriptors(descriptors);
    let mut values = u.dot(&vocab.embedding_matrix().t());
    values.mapv_inplace(|v| v.clamp(-1.0, 1.0));
    ConceptLabelMatrix {
        values,
        image_ids: ids,
        concept_names: vocab.names(),
        zero_rows,
    }
}

pub fn concept_label_matrix(images: &[Image], vocab: &ConceptVocabulary) -> Result<ConceptLabelMatrix, OracleError> {
    if images.is_empty() {
        return Err(OracleError::Empty("image list"));
    }
    let d: Vec<Descriptor> = images.iter().map(image_descriptor).collect();
    Ok(label_matrix_from_descriptors(&d, images.iter().map(|i| i.seed).collect(), vocab))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pair_geometry() {
        let v = ConceptVocabulary::default_vocabulary();
        assert_eq!(v.len(), 1000);
        let dot = |a: &str, b: &str| -> f64 {
            let ea = concept_embedding(a, &v).unwrap();
            let eb = concept_embedding(b, &v).unwrap();
            ea.iter().zip(&eb).map(|(x, y)| x * y).sum()
        };
        for (a, b) in [("left", "right"), ("top", "bottom")] {
            assert_eq!(dot(a, b), -1.0);
        }
        for (a, b) in [("red", "green"), ("one", "many"), ("horizontal", "vertical"), ("loops", "spots"), ("square", "circle"), ("bars", "cube")] {
            assert_eq!(dot(a, b), 0.0);
        }
    }

    #[test]
    fn distractors_are_unit_and_stable() {
        let (e, canonical) = embed_name("zebra");
        assert!(!canonical);
        assert!((norm(&e) - 1.0).abs() < 1e-12);
        assert_eq!(embed_name("zebra").0, e);
        assert_ne!(embed_name("zebras").0, e);
    }

    #[test]
    fn pseudo_words_are_unique() {
        let v = ConceptVocabulary::with_size(20_000);
        assert_eq!(v.len(), 20_000);
        assert_eq!(v.concepts().iter().filter(|c| c.canonical).count(), 16);
    }

    #[test]
    fn unknown_and_duplicate_names() {
        let v = ConceptVocabulary::from_names(["red", "zebra"]).unwrap();
        assert!(matches!(concept_embedding("blue", &v), Err(OracleError::UnknownConcept(_))));
        assert!(matches!(ConceptVocabulary::from_names(["a", "a"]), Err(OracleError::DuplicateConcept(_))));
    }

    #[test]
    fn zero_descriptor_rows_are_flagged() {
        let blank = Image::filled([220, 220, 220], false, false, 7);
        let v = ConceptVocabulary::with_size(20);
        let y = concept_label_matrix(&[blank], &v).unwrap();
        assert_eq!(y.zero_rows, vec![0]);
        assert!(y.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn vocabulary_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        let v = ConceptVocabulary::with_size(40);
        v.write(&p).unwrap();
        assert_eq!(ConceptVocabulary::read(&p).unwrap(), v);
    }
}
