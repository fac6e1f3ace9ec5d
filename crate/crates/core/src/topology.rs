//! Metric-free operators on one tensor-product space-time slab.
//!
//! Nodes are numbered lexicographically with `i` (xi) fastest, then `j`
//! (eta), then `k` (tau). Edge families reuse the same ordering over their own
//! index ranges, so every operator is a Kronecker product of 1D difference
//! matrices and identities. Everything here is exact integer arithmetic.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparse integer matrix in triplet form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, i64)>,
}

impl IncidenceMatrix {
    pub fn new(nrows: usize, ncols: usize, entries: Vec<(usize, usize, i64)>) -> Self {
        debug_assert!(entries.iter().all(|&(r, c, _)| r < nrows && c < ncols));
        IncidenceMatrix {
            nrows,
            ncols,
            entries,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, (0..n).map(|i| (i, i, 1)).collect())
    }

    /// 1D difference operator `(N, N + 1)` with rows `[.., -1, +1, ..]`.
    pub fn difference(n: usize) -> Self {
        let mut entries = Vec::with_capacity(2 * n);
        for r in 0..n {
            entries.push((r, r, -1));
            entries.push((r, r + 1, 1));
        }
        Self::new(n, n + 1, entries)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn entries(&self) -> &[(usize, usize, i64)] {
        &self.entries
    }

    /// Kronecker product `self (x) rhs`; `rhs` indices run fastest.
    pub fn kron(&self, rhs: &IncidenceMatrix) -> IncidenceMatrix {
        let mut entries = Vec::with_capacity(self.entries.len() * rhs.entries.len());
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &rhs.entries {
                entries.push((r1 * rhs.nrows + r2, c1 * rhs.ncols + c2, v1 * v2));
            }
        }
        IncidenceMatrix::new(self.nrows * rhs.nrows, self.ncols * rhs.ncols, entries)
    }

    pub fn transpose(&self) -> IncidenceMatrix {
        IncidenceMatrix::new(
            self.ncols,
            self.nrows,
            self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        )
    }

    /// Stack row blocks with equal column counts.
    pub fn vstack(blocks: &[&IncidenceMatrix]) -> IncidenceMatrix {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut entries = Vec::new();
        let mut offset = 0;
        for b in blocks {
            assert_eq!(b.ncols, ncols, "vstack column mismatch");
            entries.extend(b.entries.iter().map(|&(r, c, v)| (r + offset, c, v)));
            offset += b.nrows;
        }
        IncidenceMatrix::new(offset, ncols, entries)
    }

    /// Place blocks side by side with equal row counts.
    pub fn hstack(blocks: &[&IncidenceMatrix]) -> IncidenceMatrix {
        let nrows = blocks.first().map_or(0, |b| b.nrows);
        let mut entries = Vec::new();
        let mut offset = 0;
        for b in blocks {
            assert_eq!(b.nrows, nrows, "hstack row mismatch");
            entries.extend(b.entries.iter().map(|&(r, c, v)| (r, c + offset, v)));
            offset += b.ncols;
        }
        IncidenceMatrix::new(nrows, offset, entries)
    }

    pub fn neg(&self) -> IncidenceMatrix {
        IncidenceMatrix::new(
            self.nrows,
            self.ncols,
            self.entries.iter().map(|&(r, c, v)| (r, c, -v)).collect(),
        )
    }

    /// Exact integer product with duplicate entries summed and zeros kept
    /// out of the triplet list.
    pub fn matmul(&self, rhs: &IncidenceMatrix) -> Result<IncidenceMatrix> {
        if self.ncols != rhs.nrows {
            return Err(Error::DimensionMismatch {
                context: "incidence product",
                expected: self.ncols,
                got: rhs.nrows,
            });
        }
        let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); rhs.nrows];
        for &(r, c, v) in &rhs.entries {
            by_row[r].push((c, v));
        }
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &by_row[k] {
                *acc.entry((r, c)).or_insert(0) += v * w;
            }
        }
        let entries = acc
            .into_iter()
            .filter(|&(_, v)| v != 0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Ok(IncidenceMatrix::new(self.nrows, rhs.ncols, entries))
    }

    pub fn is_zero(&self) -> bool {
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for &(r, c, v) in &self.entries {
            *acc.entry((r, c)).or_insert(0) += v;
        }
        acc.values().all(|&v| v == 0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v as f64;
        }
        m
    }

    pub fn to_dense_i64(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.ncols]; self.nrows];
        for &(r, c, v) in &self.entries {
            m[r][c] += v;
        }
        m
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for &(r, c, v) in &self.entries {
            y[r] += v as f64 * x[c];
        }
        y
    }

    /// `y = A^T x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for &(r, c, v) in &self.entries {
            y[c] += v as f64 * x[r];
        }
        y
    }

    pub fn mul_vec_i64(&self, x: &[i64]) -> Vec<i64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0; self.nrows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }
}

/// DOF counts and numbering of a slab with spatial order `N` and temporal order `Nt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlabTopology {
    order: usize,
    t_order: usize,
}

impl SlabTopology {
    pub fn new(order: usize, t_order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidOrder { order, min: 1 });
        }
        if t_order < 1 {
            return Err(Error::InvalidOrder {
                order: t_order,
                min: 1,
            });
        }
        Ok(SlabTopology { order, t_order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn t_order(&self) -> usize {
        self.t_order
    }

    pub fn n_node(&self) -> usize {
        (self.order + 1).pow(2) * (self.t_order + 1)
    }

    pub fn n_xedge(&self) -> usize {
        self.order * (self.order + 1) * (self.t_order + 1)
    }

    pub fn n_yedge(&self) -> usize {
        (self.order + 1) * self.order * (self.t_order + 1)
    }

    pub fn n_tedge(&self) -> usize {
        (self.order + 1).pow(2) * self.t_order
    }

    pub fn n_trace(&self) -> usize {
        (self.order + 1).pow(2)
    }

    /// Node `(i, j, k)`, `i, j in 0..=N`, `k in 0..=Nt`.
    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        let n1 = self.order + 1;
        i + n1 * (j + n1 * k)
    }

    /// xi-edge between nodes `(i-1, j, k)` and `(i, j, k)`, `i in 1..=N`.
    pub fn xedge(&self, i: usize, j: usize, k: usize) -> usize {
        (i - 1) + self.order * (j + (self.order + 1) * k)
    }

    /// eta-edge between nodes `(i, j-1, k)` and `(i, j, k)`, `j in 1..=N`.
    pub fn yedge(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.order + 1) * ((j - 1) + self.order * k)
    }

    /// tau-edge between nodes `(i, j, k-1)` and `(i, j, k)`, `k in 1..=Nt`.
    pub fn tedge(&self, i: usize, j: usize, k: usize) -> usize {
        let n1 = self.order + 1;
        i + n1 * (j + n1 * (k - 1))
    }

    /// Trace DOF `(i, j)` of a time level.
    pub fn trace(&self, i: usize, j: usize) -> usize {
        i + (self.order + 1) * j
    }

    /// Nodal DOFs of time level `k`, in trace order.
    pub fn level_nodes(&self, k: usize) -> std::ops::Range<usize> {
        let n = self.n_trace();
        k * n..(k + 1) * n
    }
}

/// Incidence and inclusion operators of one slab.
#[derive(Debug, Clone)]
pub struct IncidenceSet {
    topology: SlabTopology,
    /// `(n_xedge, n_node)`.
    pub ex: IncidenceMatrix,
    /// `(n_yedge, n_node)`.
    pub ey: IncidenceMatrix,
    /// `(n_tedge, n_node)`.
    pub et: IncidenceMatrix,
    /// `(n_node, n_trace)`, selects the first time level.
    pub n_start: IncidenceMatrix,
    /// `(n_node, n_trace)`, selects the last time level.
    pub n_end: IncidenceMatrix,
}

impl IncidenceSet {
    pub fn topology(&self) -> &SlabTopology {
        &self.topology
    }

    /// Full space-time gradient `E^{1,0}` with rows `[x-edges; y-edges; t-edges]`.
    pub fn gradient(&self) -> IncidenceMatrix {
        IncidenceMatrix::vstack(&[&self.ex, &self.ey, &self.et])
    }

    /// Space-time curl `E^{2,1}` built from the same 1D differences.
    ///
    /// Face rows are ordered `[xi-eta faces; xi-tau faces; eta-tau faces]`,
    /// columns match [`IncidenceSet::gradient`].
    pub fn curl(&self) -> IncidenceMatrix {
        let n = self.topology.order;
        let nt = self.topology.t_order;
        let d = IncidenceMatrix::difference(n);
        let dt = IncidenceMatrix::difference(nt);
        let i_n = IncidenceMatrix::identity(n);
        let i_n1 = IncidenceMatrix::identity(n + 1);
        let i_t = IncidenceMatrix::identity(nt);
        let i_t1 = IncidenceMatrix::identity(nt + 1);
        let zero = |r: usize, c: usize| IncidenceMatrix::new(r, c, Vec::new());
        let (nx, ny, ntd) = (
            self.topology.n_xedge(),
            self.topology.n_yedge(),
            self.topology.n_tedge(),
        );

        // xi-eta faces (i in 1..N, j in 1..N, k in 0..Nt): d_xi(y-edges) - d_eta(x-edges)
        let xy_x = i_t1.kron(&d).kron(&i_n).neg();
        let xy_y = i_t1.kron(&i_n).kron(&d);
        let rows_xy = xy_x.nrows();
        let xy = IncidenceMatrix::hstack(&[&xy_x, &xy_y, &zero(rows_xy, ntd)]);

        // xi-tau faces (i in 1..N, j in 0..N, k in 1..Nt): d_xi(t-edges) - d_tau(x-edges)
        let xt_x = dt.kron(&i_n1).kron(&i_n).neg();
        let xt_t = i_t.kron(&i_n1).kron(&d);
        let rows_xt = xt_x.nrows();
        let xt = IncidenceMatrix::hstack(&[&xt_x, &zero(rows_xt, ny), &xt_t]);

        // eta-tau faces (i in 0..N, j in 1..N, k in 1..Nt): d_eta(t-edges) - d_tau(y-edges)
        let yt_y = dt.kron(&i_n).kron(&i_n1).neg();
        let yt_t = i_t.kron(&d).kron(&i_n1);
        let rows_yt = yt_y.nrows();
        let yt = IncidenceMatrix::hstack(&[&zero(rows_yt, nx), &yt_y, &yt_t]);

        IncidenceMatrix::vstack(&[&xy, &xt, &yt])
    }

    /// `true` iff `E^{2,1} E^{1,0}` vanishes in exact integer arithmetic.
    pub fn verify_complex(&self) -> bool {
        self.curl()
            .matmul(&self.gradient())
            .map(|p| p.is_zero())
            .unwrap_or(false)
    }
}

/// Builds the slab numbering and its incidence/inclusion operators.
pub fn build_topology(order: usize, t_order: usize) -> Result<(SlabTopology, IncidenceSet)> {
    let topo = SlabTopology::new(order, t_order)?;
    let d = IncidenceMatrix::difference(order);
    let dt = IncidenceMatrix::difference(t_order);
    let i_n1 = IncidenceMatrix::identity(order + 1);
    let i_t1 = IncidenceMatrix::identity(t_order + 1);

    let ex = i_t1.kron(&i_n1).kron(&d);
    let ey = i_t1.kron(&d).kron(&i_n1);
    let et = dt.kron(&i_n1).kron(&i_n1);

    let n_trace = topo.n_trace();
    let start: Vec<_> = (0..n_trace).map(|a| (a, a, 1)).collect();
    let last = topo.level_nodes(t_order).start;
    let end: Vec<_> = (0..n_trace).map(|a| (last + a, a, 1)).collect();
    let n_start = IncidenceMatrix::new(topo.n_node(), n_trace, start);
    let n_end = IncidenceMatrix::new(topo.n_node(), n_trace, end);

    debug_assert_eq!(ex.shape(), (topo.n_xedge(), topo.n_node()));
    debug_assert_eq!(ey.shape(), (topo.n_yedge(), topo.n_node()));
    debug_assert_eq!(et.shape(), (topo.n_tedge(), topo.n_node()));

    let inc = IncidenceSet {
        topology: topo,
        ex,
        ey,
        et,
        n_start,
        n_end,
    };
    Ok((topo, inc))
}

/// Spatial gradient `[I (x) D; D (x) I]` on a single `(N+1)^2` time level.
pub fn spatial_gradient(order: usize) -> IncidenceMatrix {
    let d = IncidenceMatrix::difference(order);
    let i_n1 = IncidenceMatrix::identity(order + 1);
    IncidenceMatrix::vstack(&[&i_n1.kron(&d), &d.kron(&i_n1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_order_two() {
        let d = IncidenceMatrix::difference(2).to_dense_i64();
        assert_eq!(d, vec![vec![-1, 1, 0], vec![0, -1, 1]]);
    }

    #[test]
    fn spatial_gradient_order_one() {
        let g = spatial_gradient(1).to_dense_i64();
        assert_eq!(
            g,
            vec![
                vec![-1, 1, 0, 0],
                vec![0, 0, -1, 1],
                vec![-1, 0, 1, 0],
                vec![0, -1, 0, 1],
            ]
        );
    }

    #[test]
    fn counts() {
        let t = SlabTopology::new(2, 1).unwrap();
        assert_eq!(t.n_node(), 18);
        assert_eq!(t.n_tedge(), 9);
        assert_eq!(t.n_trace(), 9);
        assert_eq!(t.n_xedge(), 12);
        assert_eq!(t.n_yedge(), 12);
        assert!(SlabTopology::new(0, 1).is_err());
        assert!(SlabTopology::new(1, 0).is_err());
    }

    #[test]
    fn index_helpers_match_kron_layout() {
        let (t, inc) = build_topology(3, 2).unwrap();
        let ex = inc.ex.to_dense_i64();
        let ey = inc.ey.to_dense_i64();
        let et = inc.et.to_dense_i64();
        for k in 0..=2 {
            for j in 0..=3 {
                for i in 0..=3 {
                    if i >= 1 {
                        let r = t.xedge(i, j, k);
                        assert_eq!(ex[r][t.node(i, j, k)], 1);
                        assert_eq!(ex[r][t.node(i - 1, j, k)], -1);
                    }
                    if j >= 1 {
                        let r = t.yedge(i, j, k);
                        assert_eq!(ey[r][t.node(i, j, k)], 1);
                        assert_eq!(ey[r][t.node(i, j - 1, k)], -1);
                    }
                    if k >= 1 {
                        let r = t.tedge(i, j, k);
                        assert_eq!(et[r][t.node(i, j, k)], 1);
                        assert_eq!(et[r][t.node(i, j, k - 1)], -1);
                    }
                }
            }
        }
    }

    #[test]
    fn rows_have_one_minus_one_plus() {
        let (_, inc) = build_topology(3, 2).unwrap();
        for m in [&inc.ex, &inc.ey, &inc.et] {
            for row in m.to_dense_i64() {
                assert_eq!(row.iter().filter(|&&v| v == 1).count(), 1);
                assert_eq!(row.iter().filter(|&&v| v == -1).count(), 1);
                assert_eq!(row.iter().filter(|&&v| v != 0).count(), 2);
            }
            let ones = vec![1i64; m.ncols()];
            assert!(m.mul_vec_i64(&ones).iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn inclusion_operators() {
        for nt in 1..=3 {
            let (t, inc) = build_topology(2, nt).unwrap();
            for m in [&inc.n_start, &inc.n_end] {
                let d = m.to_dense_i64();
                for c in 0..t.n_trace() {
                    let col: Vec<i64> = d.iter().map(|r| r[c]).collect();
                    assert_eq!(col.iter().filter(|&&v| v == 1).count(), 1);
                    assert_eq!(col.iter().filter(|&&v| v != 0).count(), 1);
                }
            }
            let gram = inc.n_start.transpose().matmul(&inc.n_start).unwrap();
            assert_eq!(gram, IncidenceMatrix::identity(t.n_trace()));
            assert!(inc.n_start.transpose().matmul(&inc.n_end).unwrap().is_zero());
        }
    }

    #[test]
    fn et_transpose_telescopes() {
        let (t, inc) = build_topology(2, 1).unwrap();
        assert_eq!(inc.et.shape(), (9, 18));
        let pi = vec![1.0; t.n_tedge()];
        let out = inc.et.tr_mul_vec(&pi);
        for a in t.level_nodes(0) {
            assert_eq!(out[a], -1.0);
        }
        for a in t.level_nodes(1) {
            assert_eq!(out[a], 1.0);
        }
        // with Nt = 3 the interior levels cancel
        let (t3, inc3) = build_topology(2, 3).unwrap();
        let out = inc3.et.tr_mul_vec(&vec![1.0; t3.n_tedge()]);
        for k in 1..3 {
            for a in t3.level_nodes(k) {
                assert_eq!(out[a], 0.0);
            }
        }
    }

    #[test]
    fn complex_examples() {
        for (n, nt) in [(1, 1), (3, 1), (2, 2)] {
            let (_, inc) = build_topology(n, nt).unwrap();
            assert!(inc.verify_complex());
        }
    }

    #[test]
    fn broken_complex_detected() {
        let (_, mut inc) = build_topology(2, 1).unwrap();
        inc.ex = inc.ex.neg();
        assert!(!inc.verify_complex());
    }
}
