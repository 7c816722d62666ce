//! CART builder shared by the forest and boosting learners.
//!
//! Every training row carries a pair of additive statistics `(a, b)`:
//! bootstrap weight and weighted label for classification trees, gradient and
//! hessian for Newton boosting trees. Split search walks per-feature presorted
//! row orders, which are stably partitioned as the tree grows.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Split feature; `None` for leaves.
    pub feature: Option<usize>,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            match node.feature {
                None => return node.value,
                Some(f) => i = if row[f] <= node.threshold { node.left } else { node.right } as usize,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, i: usize) -> usize {
            match t.nodes[i].feature {
                None => 0,
                Some(_) => 1 + rec(t, t.nodes[i].left as usize).max(rec(t, t.nodes[i].right as usize)),
            }
        }
        rec(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature.is_none()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Impurity {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Objective {
    /// Stats are `(weight, weight·y)`.
    Classification(Impurity),
    /// Stats are `(gradient, hessian)`.
    Newton { lambda: f64, min_child_weight: f64 },
}

impl Objective {
    /// Higher is better; a split's gain is `score(L) + score(R) − score(parent)`.
    fn score(&self, a: f64, b: f64) -> f64 {
        match *self {
            Objective::Classification(imp) => {
                if a <= 0.0 {
                    return 0.0;
                }
                let (pos, neg) = (b, a - b);
                let impurity_total = match imp {
                    Impurity::Gini => a - (pos * pos + neg * neg) / a,
                    Impurity::Entropy => {
                        let term = |c: f64| if c > 0.0 { -c * (c / a).log2() } else { 0.0 };
                        term(pos) + term(neg)
                    }
                };
                -impurity_total
            }
            Objective::Newton { lambda, .. } => a * a / (b + lambda),
        }
    }

    fn leaf_value(&self, a: f64, b: f64) -> f64 {
        match *self {
            Objective::Classification(_) => {
                if a > 0.0 {
                    b / a
                } else {
                    0.0
                }
            }
            Objective::Newton { lambda, .. } => -a / (b + lambda),
        }
    }

    fn child_ok(&self, a: f64, b: f64) -> bool {
        match *self {
            Objective::Classification(_) => a > 0.0,
            Objective::Newton { min_child_weight, .. } => b >= min_child_weight,
        }
    }

    fn is_pure(&self, a: f64, b: f64) -> bool {
        match *self {
            Objective::Classification(_) => b <= 0.0 || b >= a,
            Objective::Newton { .. } => false,
        }
    }

    fn accepts(&self, gain: f64) -> bool {
        match *self {
            Objective::Classification(_) => gain >= -1e-12,
            Objective::Newton { .. } => gain > 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BuildConfig {
    pub objective: Objective,
    pub max_depth: Option<usize>,
    /// Number of non-constant features examined per split; `None` = all.
    pub max_features: Option<usize>,
}

/// Row indices sorted by each feature, ties broken by row index.
pub(crate) fn presort(x: &Matrix) -> Vec<Vec<u32>> {
    (0..x.cols())
        .map(|f| {
            let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
            idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)).then(a.cmp(&b)));
            idx
        })
        .collect()
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Grows one tree over rows with `active[r]`, using the global presorted
/// orders. `rng` is required when `max_features` is set.
pub(crate) fn build(
    x: &Matrix,
    sorted: &[Vec<u32>],
    stats: &[(f64, f64)],
    active: &[bool],
    config: &BuildConfig,
    mut rng: Option<&mut Rng>,
) -> Tree {
    let p = x.cols();
    let mut orders: Vec<Vec<u32>> =
        sorted.iter().map(|o| o.iter().copied().filter(|&r| active[r as usize]).collect()).collect();
    let m = orders.first().map_or_else(|| active.iter().filter(|&&a| a).count(), Vec::len);
    // with no features, a single leaf over the active rows
    let rows_of_root: Vec<u32> = if p == 0 {
        (0..x.rows() as u32).filter(|&r| active[r as usize]).collect()
    } else {
        orders[0].clone()
    };
    let sum_of = |rows: &[u32]| {
        rows.iter().fold((0.0, 0.0), |acc, &r| (acc.0 + stats[r as usize].0, acc.1 + stats[r as usize].1))
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut goes_left = vec![false; x.rows()];
    let mut buffer: Vec<u32> = Vec::with_capacity(m);
    let mut features: Vec<usize> = (0..p).collect();
    // (node index, start, end, depth)
    let root_sum = sum_of(&rows_of_root);
    nodes.push(Node {
        feature: None,
        threshold: 0.0,
        left: 0,
        right: 0,
        value: config.objective.leaf_value(root_sum.0, root_sum.1),
    });
    let mut stack = vec![(0usize, 0usize, m, 0usize, root_sum)];

    while let Some((node_idx, start, end, depth, (ta, tb))) = stack.pop() {
        let obj = &config.objective;
        if p == 0
            || end - start < 2
            || config.max_depth.is_some_and(|d| depth >= d)
            || obj.is_pure(ta, tb)
        {
            continue;
        }
        let parent_score = obj.score(ta, tb);
        let mut best: Option<Split> = None;

        if let (Some(k), Some(r)) = (config.max_features, rng.as_deref_mut()) {
            features.shuffle(r);
            let mut visited = 0;
            for &f in features.iter() {
                if visited >= k {
                    break;
                }
                let ord = &orders[f][start..end];
                let lo = x.get(ord[0] as usize, f);
                let hi = x.get(ord[ord.len() - 1] as usize, f);
                if lo >= hi {
                    continue;
                }
                visited += 1;
                scan_feature(x, f, ord, stats, obj, (ta, tb), parent_score, &mut best);
            }
        } else {
            for f in 0..p {
                scan_feature(x, f, &orders[f][start..end], stats, obj, (ta, tb), parent_score, &mut best);
            }
        }

        let Some(split) = best else { continue };
        if !obj.accepts(split.gain) {
            continue;
        }
        let ord = &orders[split.feature][start..end];
        let mut n_left = 0;
        let mut left_sum = (0.0, 0.0);
        let mut right_sum = (0.0, 0.0);
        for &r in ord {
            let l = x.get(r as usize, split.feature) <= split.threshold;
            goes_left[r as usize] = l;
            let s = stats[r as usize];
            let acc = if l { &mut left_sum } else { &mut right_sum };
            acc.0 += s.0;
            acc.1 += s.1;
            n_left += usize::from(l);
        }
        for order in orders.iter_mut() {
            let seg = &mut order[start..end];
            buffer.clear();
            let mut w = 0;
            for i in 0..seg.len() {
                let r = seg[i];
                if goes_left[r as usize] {
                    seg[w] = r;
                    w += 1;
                } else {
                    buffer.push(r);
                }
            }
            seg[w..].copy_from_slice(&buffer);
        }
        let left_idx = nodes.len();
        nodes.push(Node {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: obj.leaf_value(left_sum.0, left_sum.1),
        });
        nodes.push(Node {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: obj.leaf_value(right_sum.0, right_sum.1),
        });
        let node = &mut nodes[node_idx];
        node.feature = Some(split.feature);
        node.threshold = split.threshold;
        node.left = left_idx as u32;
        node.right = left_idx as u32 + 1;
        // right pushed first so the left subtree is grown first
        stack.push((left_idx + 1, start + n_left, end, depth + 1, right_sum));
        stack.push((left_idx, start, start + n_left, depth + 1, left_sum));
    }
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn scan_feature(
    x: &Matrix,
    f: usize,
    ord: &[u32],
    stats: &[(f64, f64)],
    obj: &Objective,
    total: (f64, f64),
    parent_score: f64,
    best: &mut Option<Split>,
) {
    let (mut la, mut lb) = (0.0, 0.0);
    for i in 0..ord.len() - 1 {
        let r = ord[i] as usize;
        la += stats[r].0;
        lb += stats[r].1;
        let v = x.get(r, f);
        let next = x.get(ord[i + 1] as usize, f);
        if v >= next {
            continue;
        }
        let (ra, rb) = (total.0 - la, total.1 - lb);
        if !obj.child_ok(la, lb) || !obj.child_ok(ra, rb) {
            continue;
        }
        let gain = obj.score(la, lb) + obj.score(ra, rb) - parent_score;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            let mut threshold = v + (next - v) / 2.0;
            if threshold >= next || !threshold.is_finite() {
                threshold = v;
            }
            *best = Some(Split { feature: f, threshold, gain });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(x: &Matrix, y: &[u8], depth: Option<usize>) -> Tree {
        let stats: Vec<(f64, f64)> = y.iter().map(|&l| (1.0, l as f64)).collect();
        let cfg = BuildConfig { objective: Objective::Classification(Impurity::Gini), max_depth: depth, max_features: None };
        build(x, &presort(x), &stats, &vec![true; y.len()], &cfg, None)
    }

    #[test]
    fn full_depth_fits_training_data() {
        let x = Matrix::new(6, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.5, 0.5, 0.2, 0.9]);
        let y = [0, 1, 1, 0, 1, 0];
        let t = classify(&x, &y, None);
        for i in 0..6 {
            assert_eq!(t.predict(x.row(i)), y[i] as f64);
        }
    }

    #[test]
    fn depth_limit_respected() {
        let x = Matrix::new(8, 1, (0..8).map(|v| v as f64).collect());
        let y = [0, 1, 0, 1, 0, 1, 0, 1];
        assert!(classify(&x, &y, Some(2)).depth() <= 2);
    }

    #[test]
    fn newton_leaf_values() {
        let x = Matrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]);
        let stats = vec![(-1.0, 1.0), (-1.0, 1.0), (1.0, 1.0), (1.0, 1.0)];
        let cfg = BuildConfig {
            objective: Objective::Newton { lambda: 1.0, min_child_weight: 1.0 },
            max_depth: Some(1),
            max_features: None,
        };
        let t = build(&x, &presort(&x), &stats, &[true; 4], &cfg, None);
        assert_eq!(t.nodes[0].threshold, 1.5);
        assert_eq!(t.predict(&[0.0]), 2.0 / 3.0);
        assert_eq!(t.predict(&[3.0]), -2.0 / 3.0);
    }
}
