use std::collections::BTreeSet;

use serde::Serialize;

/// Bijection between user labels and codes `0..q`, assigned in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelEncoding {
    classes: Vec<String>,
}

impl LabelEncoding {
    pub fn fit<S: AsRef<str>>(labels: &[S]) -> Self {
        let set: BTreeSet<&str> = labels.iter().map(AsRef::as_ref).collect();
        Self { classes: set.into_iter().map(str::to_owned).collect() }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn code(&self, label: &str) -> Option<u32> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(label))
            .ok()
            .map(|i| i as u32)
    }

    pub fn label(&self, code: u32) -> Option<&str> {
        self.classes.get(code as usize).map(String::as_str)
    }

    /// Codes for `labels`; panics on a label the encoding has never seen.
    pub fn transform<S: AsRef<str>>(&self, labels: &[S]) -> Vec<u32> {
        labels
            .iter()
            .map(|l| self.code(l.as_ref()).expect("label was fitted"))
            .collect()
    }
}

/// Fits an encoding and returns it with the codes of `labels`.
pub fn encode_labels<S: AsRef<str>>(labels: &[S]) -> (LabelEncoding, Vec<u32>) {
    let enc = LabelEncoding::fit(labels);
    let codes = enc.transform(labels);
    (enc, codes)
}
