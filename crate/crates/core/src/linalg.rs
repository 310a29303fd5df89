//! Exact sparse Gaussian elimination over Gaussian rationals.
//!
//! Vectors are sparse maps from an ordered coordinate key to coefficients.
//! [`SpanBasis`] keeps an echelon basis together with the combination of
//! inserted vectors that produced each row, so membership queries return
//! explicit coefficients.

use std::collections::BTreeMap;

use crate::coeff::Cq;

pub type SparseVec<K> = BTreeMap<K, Cq>;

fn axpy<K: Ord + Clone>(y: &mut SparseVec<K>, a: &Cq, x: &SparseVec<K>) {
    for (k, v) in x {
        let d = a * v;
        match y.get_mut(k) {
            Some(e) => {
                *e += &d;
                if e.is_zero() {
                    y.remove(k);
                }
            }
            None => {
                if !d.is_zero() {
                    y.insert(k.clone(), d);
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Row<K> {
    pivot: K,
    vec: SparseVec<K>,
    /// `vec = sum combo[j] * input_j`
    combo: BTreeMap<usize, Cq>,
}

/// Incrementally built echelon basis of a span.
#[derive(Clone, Debug)]
pub struct SpanBasis<K> {
    rows: Vec<Row<K>>,
    inserted: usize,
}

impl<K: Ord + Clone> Default for SpanBasis<K> {
    fn default() -> Self {
        SpanBasis { rows: Vec::new(), inserted: 0 }
    }
}

/// Result of reducing a vector against a basis: `v = residual + sum combo[j] * input_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction<K> {
    pub residual: SparseVec<K>,
    pub combo: BTreeMap<usize, Cq>,
}

impl<K: Ord + Clone> Reduction<K> {
    pub fn is_member(&self) -> bool {
        self.residual.is_empty()
    }
}

impl<K: Ord + Clone> SpanBasis<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Number of vectors inserted so far; the next insert gets this index.
    pub fn len_inserted(&self) -> usize {
        self.inserted
    }

    pub fn reduce(&self, v: &SparseVec<K>) -> Reduction<K> {
        let mut residual = v.clone();
        let mut combo: BTreeMap<usize, Cq> = BTreeMap::new();
        for row in &self.rows {
            let Some(c) = residual.get(&row.pivot).cloned() else { continue };
            let a = &c / &row.vec[&row.pivot];
            axpy(&mut residual, &-&a, &row.vec);
            for (j, w) in &row.combo {
                let e = combo.entry(*j).or_insert_with(Cq::zero);
                *e += &(&a * w);
            }
        }
        combo.retain(|_, c| !c.is_zero());
        Reduction { residual, combo }
    }

    /// Insert a vector; returns true when it enlarged the span.
    pub fn insert(&mut self, v: &SparseVec<K>) -> bool {
        let idx = self.inserted;
        self.inserted += 1;
        let red = self.reduce(v);
        let Some(pivot) = red.residual.keys().next().cloned() else { return false };
        let mut combo: BTreeMap<usize, Cq> = red.combo.into_iter().map(|(j, c)| (j, -c)).collect();
        combo.insert(idx, Cq::one());
        self.rows.push(Row { pivot, vec: red.residual, combo });
        true
    }
}

/// Solve `target = sum c_j columns_j`; returns one solution or the residual
/// left after elimination.
pub fn solve<K: Ord + Clone>(columns: &[SparseVec<K>], target: &SparseVec<K>) -> Result<Vec<Cq>, SparseVec<K>> {
    let mut basis = SpanBasis::new();
    for c in columns {
        basis.insert(c);
    }
    let red = basis.reduce(target);
    if !red.is_member() {
        return Err(red.residual);
    }
    let mut out = vec![Cq::zero(); columns.len()];
    for (j, c) in red.combo {
        out[j] = c;
    }
    Ok(out)
}

pub fn rank<K: Ord + Clone>(vectors: &[SparseVec<K>]) -> usize {
    let mut basis = SpanBasis::new();
    for v in vectors {
        basis.insert(v);
    }
    basis.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[(u32, i64)]) -> SparseVec<u32> {
        entries.iter().map(|(k, c)| (*k, Cq::int(*c))).filter(|(_, c)| !c.is_zero()).collect()
    }

    #[test]
    fn solves_and_reports_residual() {
        let cols = vec![v(&[(0, 1), (1, 1)]), v(&[(1, 1), (2, 1)]), v(&[(0, 1), (2, -1)])];
        assert_eq!(rank(&cols), 2);
        let target = v(&[(0, 2), (1, 3), (2, 1)]);
        let c = solve(&cols, &target).unwrap();
        let mut back = SparseVec::new();
        for (col, a) in cols.iter().zip(&c) {
            axpy(&mut back, a, col);
        }
        assert_eq!(back, target);
        assert!(solve(&cols, &v(&[(3, 1)])).is_err());
    }

    #[test]
    fn combination_tracks_inputs() {
        let mut b = SpanBasis::new();
        b.insert(&v(&[(0, 2)]));
        b.insert(&v(&[(0, 1), (1, 1)]));
        let red = b.reduce(&v(&[(1, 3)]));
        assert!(red.is_member());
        // (0,3) = 3*(1,1) - 3/2*(2,0)
        assert_eq!(red.combo[&1], Cq::int(3));
        assert_eq!(red.combo[&0], Cq::frac(-3, 2));
    }
}
