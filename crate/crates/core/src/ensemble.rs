//! Majority voting over the labels produced by several feature schemes.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SchemeKind;

/// Labels one judge assigned to a shared list of chunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub scheme: SchemeKind,
    pub chunk_ids: Vec<String>,
    pub labels: Vec<Label>,
}

/// Per-chunk majority over an odd panel of judges. Every judge must cover the
/// same chunk ids in the same order.
pub fn vote(judges: &[JudgeVerdict]) -> Result<Vec<Label>> {
    if judges.is_empty() || judges.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "voting needs an odd number of judges, got {}",
            judges.len()
        )));
    }
    let first = &judges[0];
    for j in judges {
        if j.labels.len() != j.chunk_ids.len() {
            return Err(Error::Vote(format!(
                "{} judge has {} labels for {} chunks",
                j.scheme,
                j.labels.len(),
                j.chunk_ids.len()
            )));
        }
        if j.chunk_ids != first.chunk_ids {
            return Err(Error::Vote(format!(
                "{} and {} judges cover different chunks",
                first.scheme, j.scheme
            )));
        }
    }
    let half = judges.len() / 2;
    Ok((0..first.labels.len())
        .map(|i| {
            let o_votes = judges.iter().filter(|j| j.labels[i] == Label::O).count();
            if o_votes > half {
                Label::O
            } else {
                Label::T
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{O, T};

    fn judge(scheme: SchemeKind, labels: &[Label]) -> JudgeVerdict {
        JudgeVerdict {
            scheme,
            chunk_ids: (0..labels.len()).map(|i| format!("c{i}")).collect(),
            labels: labels.to_vec(),
        }
    }

    #[test]
    fn vote_examples() {
        let three = [
            judge(SchemeKind::FW, &[O]),
            judge(SchemeKind::CHAR3, &[O]),
            judge(SchemeKind::POS3, &[T]),
        ];
        assert_eq!(vote(&three).unwrap(), [O]);
        let five: Vec<_> = [O, O, T, T, O]
            .iter()
            .zip(SchemeKind::ALL)
            .map(|(&l, s)| judge(s, &[l]))
            .collect();
        assert_eq!(vote(&five).unwrap(), [O]);
        let same = judge(SchemeKind::FW, &[O, T, T]);
        assert_eq!(vote(&[same.clone(), same.clone(), same.clone()]).unwrap(), same.labels);
        assert_eq!(vote(std::slice::from_ref(&same)).unwrap(), same.labels);
    }

    #[test]
    fn rejects_bad_panels() {
        let a = judge(SchemeKind::FW, &[O, T]);
        assert!(matches!(vote(&[a.clone(), a.clone()]), Err(Error::Config(_))));
        assert!(matches!(vote(&[]), Err(Error::Config(_))));
        let mut b = a.clone();
        b.chunk_ids[1] = "other".into();
        assert!(matches!(vote(&[a.clone(), a.clone(), b]), Err(Error::Vote(_))));
    }

    proptest! {
        #[test]
        fn permutation_invariant(raw in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 5), rot in 0usize..5) {
            let judges: Vec<_> = raw
                .iter()
                .map(|r| judge(SchemeKind::FW, &r.iter().map(|&b| if b { O } else { T }).collect::<Vec<_>>()))
                .collect();
            let mut rotated = judges.clone();
            rotated.rotate_left(rot);
            rotated.reverse();
            prop_assert_eq!(vote(&judges).unwrap(), vote(&rotated).unwrap());
        }
    }
}
