use std::collections::BTreeMap;

use super::ActivityKind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown activity label {0:?}")]
pub struct UnknownActivity(pub String);

/// Maps raw date-column labels (e.g. `Fch commit`) to readable activities.
///
/// Unknown labels are an error; there is no pass-through.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityTranslator {
    labels: BTreeMap<String, ActivityKind>,
}

impl Default for ActivityTranslator {
    fn default() -> Self {
        ActivityTranslator::from_pairs([
            ("Fch apertura PR", ActivityKind::PROpening),
            ("Fch commit", ActivityKind::Commit),
            ("Fch workflow", ActivityKind::WorkflowRun),
            ("Fch merge", ActivityKind::PRMerge),
            ("Fch cierre PR", ActivityKind::PRClosure),
        ])
    }
}

impl ActivityTranslator {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, ActivityKind)>) -> Self {
        ActivityTranslator {
            labels: pairs
                .into_iter()
                .map(|(label, kind)| (label.to_string(), kind))
                .collect(),
        }
    }

    pub fn with_label(mut self, label: &str, kind: ActivityKind) -> Self {
        self.labels.insert(label.to_string(), kind);
        self
    }

    pub fn translate(&self, raw_label: &str) -> Result<ActivityKind, UnknownActivity> {
        self.labels
            .get(raw_label.trim())
            .copied()
            .ok_or_else(|| UnknownActivity(raw_label.to_string()))
    }

    /// Raw label used for `kind` (first in label order), if any.
    pub fn label_for(&self, kind: ActivityKind) -> Option<&str> {
        self.labels
            .iter()
            .find(|(_, k)| **k == kind)
            .map(|(l, _)| l.as_str())
    }
}
