use serde::{Deserialize, Serialize};

use super::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf { proportions: Vec<f64> },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// CART classification tree with Gini impurity. Observations with
/// `x[feature] < threshold` go left. Leaves predict their class proportions.
///
/// Split candidates are midpoints between consecutive distinct feature
/// values; a split must leave at least `min_leaf` points on each side and
/// strictly lower the weighted impurity. Equal-impurity candidates resolve
/// to the lowest feature index, then the lowest threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<Node>,
}

struct Builder<'a> {
    data: &'a Dataset,
    classes: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

struct Best {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

fn gini_mass(counts: &[usize], n: usize) -> f64 {
    // n * gini = n - sum(c^2) / n
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &i in idx {
            counts[self.data.labels()[i]] += 1;
        }
        counts
    }

    fn leaf(&mut self, counts: &[usize]) -> usize {
        let n: usize = counts.iter().sum();
        let proportions = counts.iter().map(|&c| c as f64 / n as f64).collect();
        self.nodes.push(Node::Leaf { proportions });
        self.nodes.len() - 1
    }

    fn best_split(&self, idx: &mut [usize], parent: f64) -> Option<Best> {
        let n = idx.len();
        let mut best: Option<Best> = None;
        for f in 0..self.data.dim() {
            let value = |i: usize| self.data.row(i)[f];
            idx.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
            let mut left = vec![0usize; self.classes];
            let mut right = self.counts(idx);
            for pos in 0..n - 1 {
                let y = self.data.labels()[idx[pos]];
                left[y] += 1;
                right[y] -= 1;
                let (lo, hi) = (value(idx[pos]), value(idx[pos + 1]));
                let n_left = pos + 1;
                if lo == hi || n_left < self.min_leaf || n - n_left < self.min_leaf {
                    continue;
                }
                let impurity = gini_mass(&left, n_left) + gini_mass(&right, n - n_left);
                if impurity < parent && best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold <= lo {
                        threshold = hi;
                    }
                    best = Some(Best { impurity, feature: f, threshold });
                }
            }
        }
        best
    }

    fn grow(&mut self, mut idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let n = idx.len();
        let parent = gini_mass(&counts, n);
        if depth >= self.max_depth || parent <= 0.0 || n < 2 * self.min_leaf {
            return self.leaf(&counts);
        }
        let Some(best) = self.best_split(&mut idx, parent) else {
            return self.leaf(&counts);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.data.row(i)[best.feature] < best.threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { proportions: Vec::new() });
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[slot] = Node::Split { feature: best.feature, threshold: best.threshold, left: l, right: r };
        slot
    }
}

impl TreeModel {
    pub(crate) fn fit(data: &Dataset, max_depth: usize, min_leaf: usize) -> Self {
        let mut builder = Builder {
            data,
            classes: data.n_classes(),
            max_depth,
            min_leaf: min_leaf.max(1),
            nodes: Vec::new(),
        };
        builder.grow((0..data.len()).collect(), 0);
        Self { nodes: builder.nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub(crate) fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { proportions } => return proportions.clone(),
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }
}
