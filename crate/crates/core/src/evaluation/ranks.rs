use crate::error::{Error, Result};

/// 1-based ranks in ascending order; tied values share the mean of their ranks.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = rank;
        }
        i = j;
    }
    ranks
}

/// Average rank of each method across datasets.
///
/// `table[method][dataset]` holds a score where lower is better (pass
/// negated values for higher-is-better metrics). Every cell must be finite.
pub fn average_ranks(table: &[Vec<f64>]) -> Result<Vec<f64>> {
    let methods = table.len();
    let datasets = table.first().map_or(0, Vec::len);
    if methods == 0 || datasets == 0 {
        return Err(Error::InvalidParameter("rank table is empty".into()));
    }
    for (m, row) in table.iter().enumerate() {
        if row.len() != datasets {
            return Err(Error::MissingCell { method: m, dataset: row.len().min(datasets) });
        }
        if let Some(d) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingCell { method: m, dataset: d });
        }
    }
    let mut totals = vec![0.0; methods];
    for d in 0..datasets {
        let column: Vec<f64> = table.iter().map(|row| row[d]).collect();
        for (t, r) in totals.iter_mut().zip(midranks(&column)) {
            *t += r;
        }
    }
    Ok(totals.into_iter().map(|t| t / datasets as f64).collect())
}
