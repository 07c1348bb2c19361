//! Maximum-weight bipartite assignment (Kuhn-Munkres with potentials).

use crate::scalar::Weight;

/// Result of [`max_weight_matching`]: `row_to_col[i]` is the column matched to
/// row `i`, if it is a real column.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching<W> {
    pub row_to_col: Vec<Option<usize>>,
    pub total: W,
}

impl<W> Matching<W> {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col.iter().enumerate().filter_map(|(i, c)| c.map(|c| (i, c)))
    }
}

/// Maximum total weight one-to-one assignment of rows to columns. The
/// matrix may be rectangular; it is padded to a square with zero weights, and
/// rows that land on padding are reported unmatched.
///
/// # Panics
/// If rows have different lengths.
pub fn max_weight_matching<W: Weight>(weights: &[Vec<W>]) -> Matching<W> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    assert!(weights.iter().all(|r| r.len() == cols), "ragged weight matrix");
    let n = rows.max(cols);
    if n == 0 {
        return Matching { row_to_col: Vec::new(), total: W::zero() };
    }
    // minimise the negated weights; index 0 is the usual sentinel
    let cost = |i: usize, j: usize| -> W {
        if i <= rows && j <= cols {
            -weights[i - 1][j - 1]
        } else {
            W::zero()
        }
    };
    let zero = W::zero();
    let mut u = vec![zero; n + 1];
    let mut v = vec![zero; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv: Vec<Option<W>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<W> = None;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if minv[j].is_none_or(|m| cur < m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let m = minv[j].expect("set above");
                if delta.is_none_or(|d| m < d) {
                    delta = Some(m);
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains while row i is unmatched");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else if let Some(m) = minv[j] {
                    minv[j] = Some(m - delta);
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![None; rows];
    let mut total = W::zero();
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            row_to_col[i - 1] = Some(j - 1);
            total = total + weights[i - 1][j - 1];
        }
    }
    Matching { row_to_col, total }
}
