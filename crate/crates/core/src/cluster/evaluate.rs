use super::kmeans::ClusteringRun;
use crate::corpus::Label;
use crate::error::{Error, Result};

/// Accuracy when every cluster takes the majority gold label of its members.
/// A tied cluster counts half of its members as correct.
pub fn evaluate_majority(run: &ClusteringRun, gold: &[Option<Label>]) -> Result<f64> {
    if gold.len() != run.assignments.len() {
        return Err(Error::Evaluation(format!(
            "{} gold labels for {} assigned rows",
            gold.len(),
            run.assignments.len()
        )));
    }
    let mut tally = vec![(0usize, 0usize); run.k];
    for (row, (&c, g)) in run.assignments.iter().zip(gold).enumerate() {
        match g {
            Some(Label::O) => tally[c].0 += 1,
            Some(Label::T) => tally[c].1 += 1,
            None => return Err(Error::Evaluation(format!("row {row} has no gold label"))),
        }
    }
    if gold.is_empty() {
        return Err(Error::Evaluation("nothing to evaluate".into()));
    }
    let correct: f64 = tally
        .iter()
        .map(|&(o, t)| if o == t { o as f64 } else { o.max(t) as f64 })
        .sum();
    Ok(correct / gold.len() as f64)
}

/// Majority gold label per cluster (`None` for ties and empty clusters).
pub fn majority_labels(run: &ClusteringRun, gold: &[Option<Label>]) -> Vec<Option<Label>> {
    let mut tally = vec![(0usize, 0usize); run.k];
    for (&c, g) in run.assignments.iter().zip(gold) {
        match g {
            Some(Label::O) => tally[c].0 += 1,
            Some(Label::T) => tally[c].1 += 1,
            None => {}
        }
    }
    tally
        .into_iter()
        .map(|(o, t)| match o.cmp(&t) {
            std::cmp::Ordering::Greater => Some(Label::O),
            std::cmp::Ordering::Less => Some(Label::T),
            std::cmp::Ordering::Equal => None,
        })
        .collect()
}
