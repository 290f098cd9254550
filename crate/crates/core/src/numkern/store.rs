use std::collections::HashMap;

use crate::error::{Error, Result};

/// Handle to one named slot of a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// `Table` slots are lookup tables: only the rows touched in a step carry
/// gradient, get regularized, and get updated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Dense,
    Table,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub kind: SlotKind,
}

impl SlotInfo {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Default)]
struct RowMarks {
    mask: Vec<bool>,
    rows: Vec<usize>,
}

impl RowMarks {
    fn mark(&mut self, r: usize) {
        if !self.mask[r] {
            self.mask[r] = true;
            self.rows.push(r);
        }
    }

    fn clear(&mut self) {
        for &r in &self.rows {
            self.mask[r] = false;
        }
        self.rows.clear();
    }
}

/// Named parameter slots with parallel gradient and AdaGrad accumulator
/// buffers. Slot order is insertion order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    infos: Vec<SlotInfo>,
    index: HashMap<String, usize>,
    values: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
    accums: Vec<Vec<f64>>,
    marks: Vec<RowMarks>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, rows: usize, cols: usize, kind: SlotKind, values: Vec<f64>) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::usage(format!("duplicate parameter slot {name:?}")));
        }
        if values.len() != rows * cols {
            return Err(Error::usage(format!(
                "slot {name:?}: shape {rows}x{cols} but {} values",
                values.len()
            )));
        }
        let id = self.infos.len();
        let n = values.len();
        self.infos.push(SlotInfo {
            name: name.to_string(),
            rows,
            cols,
            kind,
        });
        self.index.insert(name.to_string(), id);
        self.values.push(values);
        self.grads.push(vec![0.0; n]);
        self.accums.push(vec![0.0; n]);
        self.marks.push(RowMarks {
            mask: if kind == SlotKind::Table {
                vec![false; rows]
            } else {
                Vec::new()
            },
            rows: Vec::new(),
        });
        Ok(ParamId(id))
    }

    pub fn add_zeros(&mut self, name: &str, rows: usize, cols: usize, kind: SlotKind) -> Result<ParamId> {
        self.add(name, rows, cols, kind, vec![0.0; rows * cols])
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn len(&self) -> usize {
        self.infos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.infos.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.infos.len()).map(ParamId)
    }

    pub fn info(&self, id: ParamId) -> &SlotInfo {
        &self.infos[id.0]
    }

    pub fn num_coords(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn value(&self, id: ParamId) -> &[f64] {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub fn accum(&self, id: ParamId) -> &[f64] {
        &self.accums[id.0]
    }

    /// Rows of a table slot that received gradient since the last
    /// [`zero_grads`](Self::zero_grads). Empty for dense slots.
    pub fn touched_rows(&self, id: ParamId) -> &[usize] {
        &self.marks[id.0].rows
    }

    /// Borrow parameter values immutably and gradient buffers mutably at once.
    pub fn split(&mut self) -> (Values<'_>, Grads<'_>) {
        (
            Values {
                values: &self.values,
                infos: &self.infos,
            },
            Grads {
                grads: &mut self.grads,
                marks: &mut self.marks,
                infos: &self.infos,
            },
        )
    }

    pub fn values(&self) -> Values<'_> {
        Values {
            values: &self.values,
            infos: &self.infos,
        }
    }

    pub fn zero_grads(&mut self) {
        for ((info, g), marks) in self.infos.iter().zip(&mut self.grads).zip(&mut self.marks) {
            match info.kind {
                SlotKind::Dense => g.iter_mut().for_each(|x| *x = 0.0),
                SlotKind::Table => {
                    for &r in &marks.rows {
                        g[r * info.cols..(r + 1) * info.cols].iter_mut().for_each(|x| *x = 0.0);
                    }
                    marks.clear();
                }
            }
        }
    }

    /// Visit every coordinate that is active this step: all coordinates of
    /// dense slots, and the touched rows of table slots.
    /// Callback receives `(value, grad, accumulator)`.
    pub fn for_each_active<F>(&mut self, mut f: F)
    where
        F: FnMut(&mut f64, &mut f64, &mut f64),
    {
        for s in 0..self.infos.len() {
            let info = &self.infos[s];
            let (v, g, a) = (&mut self.values[s], &mut self.grads[s], &mut self.accums[s]);
            match info.kind {
                SlotKind::Dense => {
                    for ((v, g), a) in v.iter_mut().zip(g.iter_mut()).zip(a.iter_mut()) {
                        f(v, g, a);
                    }
                }
                SlotKind::Table => {
                    let c = info.cols;
                    for &r in &self.marks[s].rows {
                        let span = r * c..(r + 1) * c;
                        for ((v, g), a) in v[span.clone()]
                            .iter_mut()
                            .zip(g[span.clone()].iter_mut())
                            .zip(a[span].iter_mut())
                        {
                            f(v, g, a);
                        }
                    }
                }
            }
        }
    }

    /// Adds `lambda * theta` to the gradient of every active coordinate and
    /// returns the matching penalty `lambda / 2 * sum(theta^2)`.
    pub fn apply_l2(&mut self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let mut penalty = 0.0;
        self.for_each_active(|v, g, _| {
            *g += lambda * *v;
            penalty += *v * *v;
        });
        0.5 * lambda * penalty
    }

    pub fn grad_norm(&mut self) -> f64 {
        let mut sq = 0.0;
        self.for_each_active(|_, g, _| sq += *g * *g);
        sq.sqrt()
    }

    pub fn scale_grads(&mut self, factor: f64) {
        self.for_each_active(|_, g, _| *g *= factor);
    }

    /// Copy of all parameter values, in slot order.
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.values.clone()
    }

    pub fn restore(&mut self, snapshot: &[Vec<f64>]) -> Result<()> {
        if snapshot.len() != self.values.len() || snapshot.iter().zip(&self.values).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::usage("snapshot does not match the parameter layout"));
        }
        for (dst, src) in self.values.iter_mut().zip(snapshot) {
            dst.copy_from_slice(src);
        }
        Ok(())
    }
}

/// Read-only view of parameter values.
#[derive(Clone, Copy)]
pub struct Values<'a> {
    values: &'a [Vec<f64>],
    infos: &'a [SlotInfo],
}

impl<'a> Values<'a> {
    pub fn slot(&self, id: ParamId) -> &'a [f64] {
        &self.values[id.0]
    }

    pub fn row(&self, id: ParamId, r: usize) -> &'a [f64] {
        let c = self.infos[id.0].cols;
        &self.values[id.0][r * c..(r + 1) * c]
    }

    pub fn info(&self, id: ParamId) -> &'a SlotInfo {
        &self.infos[id.0]
    }
}

/// Mutable view of gradient buffers. Row access on table slots records the
/// row as touched.
pub struct Grads<'a> {
    grads: &'a mut [Vec<f64>],
    marks: &'a mut [RowMarks],
    infos: &'a [SlotInfo],
}

impl Grads<'_> {
    pub fn slot(&mut self, id: ParamId) -> &mut [f64] {
        let info = &self.infos[id.0];
        if info.kind == SlotKind::Table {
            for r in 0..info.rows {
                self.marks[id.0].mark(r);
            }
        }
        &mut self.grads[id.0]
    }

    pub fn row(&mut self, id: ParamId, r: usize) -> &mut [f64] {
        let info = &self.infos[id.0];
        if info.kind == SlotKind::Table {
            self.marks[id.0].mark(r);
        }
        let c = info.cols;
        &mut self.grads[id.0][r * c..(r + 1) * c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_and_shape_errors() {
        let mut s = ParamStore::new();
        s.add_zeros("a", 2, 2, SlotKind::Dense).unwrap();
        assert!(s.add_zeros("a", 1, 1, SlotKind::Dense).is_err());
        assert!(s.add("b", 2, 2, SlotKind::Dense, vec![0.0; 3]).is_err());
    }

    #[test]
    fn table_rows_are_tracked_and_zeroed() {
        let mut s = ParamStore::new();
        let t = s.add("t", 4, 2, SlotKind::Table, vec![1.0; 8]).unwrap();
        {
            let (_, mut g) = s.split();
            g.row(t, 2)[0] = 3.0;
            g.row(t, 2)[1] = 1.0;
        }
        assert_eq!(s.touched_rows(t), &[2]);
        let mut seen = 0;
        s.for_each_active(|_, _, _| seen += 1);
        assert_eq!(seen, 2);
        let pen = s.apply_l2(0.5);
        assert!((pen - 0.5).abs() < 1e-15); // 0.25 * (1 + 1)
        assert_eq!(s.grad(t)[4], 3.5);
        s.zero_grads();
        assert!(s.grad(t).iter().all(|&g| g == 0.0));
        assert!(s.touched_rows(t).is_empty());
    }

    #[test]
    fn snapshot_restore() {
        let mut s = ParamStore::new();
        let a = s.add("a", 1, 3, SlotKind::Dense, vec![1.0, 2.0, 3.0]).unwrap();
        let snap = s.snapshot();
        s.value_mut(a)[1] = 9.0;
        s.restore(&snap).unwrap();
        assert_eq!(s.value(a), &[1.0, 2.0, 3.0]);
    }
}
