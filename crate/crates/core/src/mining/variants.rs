use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Trace;
use crate::eventlog::ActivityKind;

/// Cases sharing one activity sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub sequence: Vec<ActivityKind>,
    pub case_count: usize,
    pub case_ids: Vec<u64>,
}

/// Groups traces by activity sequence. Ordered by case count (descending), then by sequence.
pub fn discover_variants(traces: &[Trace]) -> Vec<Variant> {
    let mut groups: BTreeMap<Vec<ActivityKind>, Vec<u64>> = BTreeMap::new();
    for t in traces {
        groups.entry(t.activities()).or_default().push(t.pr_id);
    }
    let mut variants: Vec<Variant> = groups
        .into_iter()
        .map(|(sequence, mut case_ids)| {
            case_ids.sort_unstable();
            Variant {
                sequence,
                case_count: case_ids.len(),
                case_ids,
            }
        })
        .collect();
    variants.sort_by(|a, b| {
        b.case_count
            .cmp(&a.case_count)
            .then_with(|| a.sequence.cmp(&b.sequence))
    });
    variants
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mining::test_support::trace;
    use ActivityKind::*;

    #[test]
    fn identical_sequences_collapse() {
        let traces = vec![
            trace(1, &[(PROpening, 0), (Commit, 1), (PRMerge, 2)]),
            trace(2, &[(PROpening, 5), (Commit, 9), (PRMerge, 20)]),
        ];
        let v = discover_variants(&traces);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].case_count, 2);
        assert_eq!(v[0].case_ids, vec![1, 2]);
    }

    #[test]
    fn ordered_by_count() {
        let traces = vec![
            trace(3, &[(PROpening, 0), (PRMerge, 1)]),
            trace(1, &[(PROpening, 0), (Commit, 1), (PRMerge, 2)]),
            trace(2, &[(PROpening, 0), (PRMerge, 1)]),
        ];
        let v = discover_variants(&traces);
        assert_eq!(
            v.iter().map(|v| v.case_count).collect::<Vec<_>>(),
            vec![2, 1]
        );
        assert_eq!(v[0].case_ids, vec![2, 3]);
        assert!(discover_variants(&[]).is_empty());
    }

    #[test]
    fn ties_break_on_sequence() {
        let traces = vec![
            trace(1, &[(PROpening, 0), (PRClosure, 1)]),
            trace(2, &[(PROpening, 0), (PRMerge, 1)]),
        ];
        let v = discover_variants(&traces);
        assert_eq!(v[0].sequence, vec![PROpening, PRMerge]);
    }
}
