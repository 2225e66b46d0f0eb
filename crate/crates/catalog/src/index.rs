//! Inverted index over package pages and TF-IDF search.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use bbohub_registry::normalize_tag;
use serde::{Deserialize, Serialize};

use crate::page::PageDoc;

pub const INDEX_SCHEMA: u32 = 1;

/// Term-frequency multiplier per field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldWeights {
    pub title: u32,
    pub summary: u32,
    pub tags: u32,
    pub body: u32,
}

pub const FIELD_WEIGHTS: FieldWeights = FieldWeights {
    title: 3,
    summary: 2,
    tags: 2,
    body: 1,
};

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// `(doc ordinal, weighted term frequency)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting(pub u32, pub u32);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchIndex {
    pub schema: u32,
    pub weights: FieldWeights,
    /// Refs in ordinal order.
    pub docs: Vec<String>,
    pub terms: BTreeMap<String, Vec<Posting>>,
    /// Unweighted token count per doc.
    pub doc_lengths: Vec<u32>,
    pub tag_map: BTreeMap<String, Vec<u32>>,
    #[serde(skip)]
    norms: OnceLock<Vec<f64>>,
}

impl PartialEq for SearchIndex {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.weights == other.weights
            && self.docs == other.docs
            && self.terms == other.terms
            && self.doc_lengths == other.doc_lengths
            && self.tag_map == other.tag_map
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    #[serde(rename = "ref")]
    pub package: String,
    pub score: f64,
}

/// Weighted term frequencies of one page.
pub fn weighted_terms(doc: &PageDoc, weights: FieldWeights) -> (BTreeMap<String, u32>, u32) {
    let mut tf = BTreeMap::new();
    let mut length = 0;
    let fields = [
        (doc.title.as_str(), weights.title),
        (doc.summary.as_str(), weights.summary),
        (doc.body_text.as_str(), weights.body),
    ];
    let tags = doc.tags.join(" ");
    for (text, w) in fields.into_iter().chain([(tags.as_str(), weights.tags)]) {
        for token in tokenize(text) {
            *tf.entry(token).or_insert(0) += w;
            length += 1;
        }
    }
    (tf, length)
}

/// Indexes `docs` in ref order.
pub fn build_index(docs: &[PageDoc]) -> SearchIndex {
    let mut sorted: Vec<&PageDoc> = docs.iter().collect();
    sorted.sort_by(|a, b| a.package.cmp(&b.package));
    let mut terms: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut tag_map: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(sorted.len());
    for (ordinal, doc) in sorted.iter().enumerate() {
        let ordinal = ordinal as u32;
        let (tf, length) = weighted_terms(doc, FIELD_WEIGHTS);
        for (term, f) in tf {
            terms.entry(term).or_default().push(Posting(ordinal, f));
        }
        for tag in &doc.tags {
            let list = tag_map.entry(tag.clone()).or_default();
            if list.last() != Some(&ordinal) {
                list.push(ordinal);
            }
        }
        doc_lengths.push(length);
    }
    SearchIndex {
        schema: INDEX_SCHEMA,
        weights: FIELD_WEIGHTS,
        docs: sorted.iter().map(|d| d.package.clone()).collect(),
        terms,
        doc_lengths,
        tag_map,
        norms: OnceLock::new(),
    }
}

impl SearchIndex {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// `ln(N / df) + 1`.
    pub fn idf(&self, term: &str) -> Option<f64> {
        let df = self.terms.get(term)?.len();
        Some((self.docs.len() as f64 / df as f64).ln() + 1.0)
    }

    fn norms(&self) -> &[f64] {
        self.norms.get_or_init(|| {
            let mut sq = vec![0.0; self.docs.len()];
            for (term, postings) in &self.terms {
                let idf = self.idf(term).unwrap_or(0.0);
                for &Posting(d, tf) in postings {
                    let w = tf as f64 * idf;
                    sq[d as usize] += w * w;
                }
            }
            sq.into_iter().map(f64::sqrt).collect()
        })
    }

    /// Docs containing every query token and carrying every tag, best first.
    /// Without query tokens every candidate scores 0 and the order is by ref.
    pub fn search(&self, query: &str, tags: &[String]) -> Vec<Hit> {
        let mut candidates: BTreeSet<u32> = (0..self.docs.len() as u32).collect();
        for tag in tags {
            let docs: BTreeSet<u32> = self
                .tag_map
                .get(&normalize_tag(tag))
                .map(|v| v.iter().copied().collect())
                .unwrap_or_default();
            candidates = candidates.intersection(&docs).copied().collect();
        }
        let mut query_tf: BTreeMap<String, f64> = BTreeMap::new();
        for token in tokenize(query) {
            *query_tf.entry(token).or_insert(0.0) += 1.0;
        }
        let mut dot: BTreeMap<u32, f64> = BTreeMap::new();
        let mut query_sq = 0.0;
        for (term, qtf) in &query_tf {
            let Some(postings) = self.terms.get(term) else {
                return Vec::new();
            };
            let idf = self.idf(term).unwrap_or(0.0);
            let qw = qtf * idf;
            query_sq += qw * qw;
            let containing: BTreeSet<u32> = postings.iter().map(|p| p.0).collect();
            candidates = candidates.intersection(&containing).copied().collect();
            for &Posting(d, tf) in postings {
                *dot.entry(d).or_insert(0.0) += qw * tf as f64 * idf;
            }
        }
        let norms = self.norms();
        let query_norm = query_sq.sqrt();
        let mut hits: Vec<Hit> = candidates
            .into_iter()
            .map(|d| {
                let score = if query_tf.is_empty() {
                    0.0
                } else {
                    dot[&d] / (query_norm * norms[d as usize])
                };
                Hit {
                    package: self.docs[d as usize].clone(),
                    score,
                }
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.package.cmp(&b.package))
        });
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn doc(package: &str, title: &str, summary: &str, tags: &[&str], body: &str) -> PageDoc {
        let (category, name) = package.split_once('/').unwrap();
        PageDoc {
            package: package.into(),
            category: category.into(),
            name: name.into(),
            version: "1.0.0".into(),
            title: title.into(),
            summary: summary.into(),
            authors: vec!["a".into()],
            license: "MIT".into(),
            tags: tags.iter().map(|t| t.to_string()).collect(),
            body_text: body.into(),
            body_html: String::new(),
            thumbnail: None,
            example_snippet: None,
        }
    }

    fn refs(hits: &[Hit]) -> Vec<&str> {
        hits.iter().map(|h| h.package.as_str()).collect()
    }

    #[test]
    fn tokenizer_splits_on_non_alphanumerics() {
        assert_eq!(tokenize("Nelder–Mead, multi-objective (NSGA-II) x2"), [
            "nelder", "mead", "multi", "objective", "nsga", "ii", "x2"
        ]);
        assert!(tokenize(" -- ").is_empty());
    }

    #[test]
    fn empty_index() {
        let index = build_index(&[]);
        assert!(index.is_empty());
        assert!(index.search("anything", &[]).is_empty());
        assert!(index.search("", &[]).is_empty());
    }

    #[test]
    fn postings_and_weights() {
        let docs = [
            doc("samplers/b", "Bayesian", "s", &[], "plain"),
            doc("samplers/a", "Other", "s", &[], "bayesian once"),
        ];
        let index = build_index(&docs);
        assert_eq!(index.docs, ["samplers/a", "samplers/b"]);
        let p = &index.terms["bayesian"];
        assert_eq!(p, &[Posting(0, 1), Posting(1, 3)]);
        assert_eq!(index.doc_lengths, [4, 3]);
        let hits = index.search("bayesian", &[]);
        assert_eq!(refs(&hits), ["samplers/b", "samplers/a"]);
    }

    #[test]
    fn idf_formula() {
        let docs = [
            doc("samplers/a", "x y", "", &[], ""),
            doc("samplers/b", "x", "", &[], ""),
            doc("samplers/c", "z", "", &[], ""),
            doc("samplers/d", "z", "", &[], ""),
        ];
        let index = build_index(&docs);
        assert_eq!(index.idf("y"), Some(4f64.ln() + 1.0));
        assert_eq!(index.idf("x"), Some(2f64.ln() + 1.0));
        assert_eq!(index.idf("q"), None);
    }

    #[test]
    fn cosine_scores_by_hand() {
        // a: title "x y" gives tf x=3, y=3. b: title "x" gives tf x=3.
        // idf(x)=1, idf(y)=ln 2 + 1. Query "x": q=(1,0).
        let docs = [
            doc("samplers/a", "x y", "", &[], ""),
            doc("samplers/b", "x", "", &[], ""),
        ];
        let index = build_index(&docs);
        let hits = index.search("x", &[]);
        let l = 2f64.ln() + 1.0;
        assert_eq!(refs(&hits), ["samplers/b", "samplers/a"]);
        assert!((hits[0].score - 1.0).abs() < 1e-12);
        assert!((hits[1].score - 1.0 / (1.0 + l * l).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn conjunctive_tokens_and_tags() {
        let docs = [
            doc("samplers/nelder_mead", "Nelder-Mead", "simplex", &["local"], ""),
            doc("samplers/tpe", "TPE", "bayesian", &["bayesian", "multi-objective"], ""),
            doc("samplers/nsga2", "NSGA-II", "evolutionary", &["multi-objective"], "mead"),
        ];
        let index = build_index(&docs);
        assert_eq!(refs(&index.search("nelder mead", &[])), ["samplers/nelder_mead"]);
        assert_eq!(
            refs(&index.search("", &["multi-objective".into()])),
            ["samplers/nsga2", "samplers/tpe"]
        );
        assert_eq!(refs(&index.search("", &["Multi Objective".into()])).len(), 2);
        assert!(index.search("zzzz", &[]).is_empty());
        assert!(index.search("mead", &["bayesian".into()]).is_empty());
        assert!(index.search("", &["nope".into()]).is_empty());
        assert_eq!(index.search("", &[]).len(), 3);
    }

    #[test]
    fn ties_break_by_ref() {
        let docs = [
            doc("samplers/b", "same", "", &[], ""),
            doc("samplers/a", "same", "", &[], ""),
        ];
        let hits = build_index(&docs).search("same", &[]);
        assert_eq!(refs(&hits), ["samplers/a", "samplers/b"]);
        assert_eq!(hits[0].score, hits[1].score);
    }

    #[test]
    fn json_round_trip() {
        let docs = [doc("samplers/a", "x", "y", &["t"], "z")];
        let index = build_index(&docs);
        let text = serde_json::to_string(&index).unwrap();
        assert!(text.contains(r#""terms":{"t":[[0,2]],"x":[[0,3]],"y":[[0,2]],"z":[[0,1]]}"#));
        let back: SearchIndex = serde_json::from_str(&text).unwrap();
        assert_eq!(back, index);
        assert_eq!(back.search("x", &[]), index.search("x", &[]));
    }
}
