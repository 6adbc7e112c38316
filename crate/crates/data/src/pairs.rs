use crate::error::{DataError, Result};
use rand::seq::SliceRandom;
use rand::Rng;

/// Index pairs with a same-category flag, ready for a two-branch batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub same: Vec<bool>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.same.len()
    }

    pub fn is_empty(&self) -> bool {
        self.same.is_empty()
    }
}

/// Draw `count` index pairs over `labels` with exactly
/// `round(count * positive_ratio)` same-category pairs.
///
/// Positive pairs are two *distinct* samples sharing a label, drawn
/// uniformly over eligible anchors; negative pairs are two samples of
/// different labels. The assembled list is shuffled so batches slice a
/// mixed stream. Fails up front when a pair kind cannot exist (no label
/// has two members, or only one label is present).
pub fn sample_pairs<R: Rng>(
    labels: &[u32],
    count: usize,
    positive_ratio: f64,
    rng: &mut R,
) -> Result<PairSet> {
    if count == 0 {
        return Err(DataError::InvalidArgument("zero pairs requested".into()));
    }
    if !(0.0..=1.0).contains(&positive_ratio) {
        return Err(DataError::InvalidArgument(format!(
            "positive ratio {positive_ratio} outside [0, 1]"
        )));
    }
    let n_pos = (count as f64 * positive_ratio).round() as usize;
    let n_neg = count - n_pos;

    let max_label = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); max_label + 1];
    for (i, &l) in labels.iter().enumerate() {
        members[l as usize].push(i);
    }
    let populated: Vec<usize> = (0..members.len()).filter(|&l| !members[l].is_empty()).collect();

    // anchors eligible for a positive pair: their label has a partner
    let pos_anchors: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| members[l as usize].len() >= 2)
        .map(|(i, _)| i)
        .collect();
    if n_pos > 0 && pos_anchors.is_empty() {
        return Err(DataError::PairImpossible {
            kind: "same-category".into(),
            detail: "no category has two samples".into(),
        });
    }
    if n_neg > 0 && populated.len() < 2 {
        return Err(DataError::PairImpossible {
            kind: "cross-category".into(),
            detail: format!("only {} populated category", populated.len()),
        });
    }

    let mut pairs: Vec<(usize, usize, bool)> = Vec::with_capacity(count);
    for _ in 0..n_pos {
        let a = pos_anchors[rng.gen_range(0..pos_anchors.len())];
        let peers = &members[labels[a] as usize];
        // uniform over the label's other members
        let b = loop {
            let cand = peers[rng.gen_range(0..peers.len())];
            if cand != a {
                break cand;
            }
        };
        pairs.push((a, b, true));
    }
    for _ in 0..n_neg {
        let a = rng.gen_range(0..labels.len());
        let b = loop {
            let cand = rng.gen_range(0..labels.len());
            if labels[cand] != labels[a] {
                break cand;
            }
        };
        pairs.push((a, b, false));
    }
    pairs.shuffle(rng);

    Ok(PairSet {
        left: pairs.iter().map(|p| p.0).collect(),
        right: pairs.iter().map(|p| p.1).collect(),
        same: pairs.iter().map(|p| p.2).collect(),
    })
}
