//! Dense multilinear tensors over a chart point.
//!
//! Slots are either tangent (dimension `n`) or tractor (dimension `n+2`), all
//! stored covariant; contractions always go through an explicit inverse metric
//! for the slot kind.  Implicit antisymmetrizations in the component formulas
//! are realized by [`Tensor::antisymmetrize`] with the normalized (1/m!)
//! convention.
//!
//! The element type is any [`Scalar`] ring: plain floats for algebra-only
//! work, jets when derivatives must flow through.

use num_traits::Float;

use crate::jet::Jet;

/// Ring of tensor entries.  Implemented for `f32`/`f64` and for jets.
pub trait Scalar: Clone {
    fn zero_like(&self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, c: f64) -> Self;
    /// Plain numeric value (order-zero part for jets); used for norms.
    fn value(&self) -> f64;
}

impl<T: Float> Scalar for T {
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn add(&self, o: &Self) -> Self {
        *self + *o
    }
    fn sub(&self, o: &Self) -> Self {
        *self - *o
    }
    fn mul(&self, o: &Self) -> Self {
        *self * *o
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn scale(&self, c: f64) -> Self {
        *self * T::from(c).unwrap()
    }
    fn value(&self) -> f64 {
        self.to_f64().unwrap()
    }
}

impl<T: Float> Scalar for Jet<T> {
    fn zero_like(&self) -> Self {
        Jet::constant(T::zero(), self.nvars(), self.order())
    }
    fn add(&self, o: &Self) -> Self {
        Jet::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Jet::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Jet::mul(self, o)
    }
    fn neg(&self) -> Self {
        Jet::neg(self)
    }
    fn scale(&self, c: f64) -> Self {
        Jet::scale(self, T::from(c).unwrap())
    }
    fn value(&self) -> f64 {
        self.value().to_f64().unwrap()
    }
}

/// Kind of a tensor slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Slot {
    Tangent,
    Tractor,
}

/// Dense tensor at a point; all slots covariant.
#[derive(Clone)]
pub struct Tensor<S> {
    n: usize,
    slots: Vec<Slot>,
    data: Vec<S>,
}

fn dim(n: usize, s: Slot) -> usize {
    match s {
        Slot::Tangent => n,
        Slot::Tractor => n + 2,
    }
}

/// Iterate all multi-indices for the given dimensions.
pub struct IndexIter {
    dims: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl IndexIter {
    pub fn new(dims: Vec<usize>) -> IndexIter {
        let done = dims.iter().any(|&d| d == 0);
        IndexIter {
            current: vec![0; dims.len()],
            dims,
            done,
        }
    }
}

impl Iterator for IndexIter {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // odometer increment
        let mut i = self.dims.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.current[i] += 1;
            if self.current[i] < self.dims[i] {
                break;
            }
            self.current[i] = 0;
        }
        Some(out)
    }
}

/// Signed permutations of 0..m (permutation, parity sign).
pub fn signed_permutations(m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(remaining: &mut Vec<usize>, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining.is_empty() {
            out.push(current.clone());
            return;
        }
        for i in 0..remaining.len() {
            let v = remaining.remove(i);
            current.push(v);
            rec(remaining, current, out);
            current.pop();
            remaining.insert(i, v);
        }
    }
    let mut perms = Vec::new();
    rec(&mut (0..m).collect(), &mut Vec::new(), &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let mut inversions = 0usize;
            for i in 0..m {
                for j in (i + 1)..m {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(n: usize, slots: &[Slot], proto: &S) -> Tensor<S> {
        let len: usize = slots.iter().map(|&s| dim(n, s)).product::<usize>().max(1);
        Tensor {
            n,
            slots: slots.to_vec(),
            data: vec![proto.zero_like(); len],
        }
    }

    pub fn scalar(n: usize, v: S) -> Tensor<S> {
        Tensor {
            n,
            slots: Vec::new(),
            data: vec![v],
        }
    }

    pub fn from_fn(n: usize, slots: &[Slot], mut f: impl FnMut(&[usize]) -> S) -> Tensor<S> {
        let dims: Vec<usize> = slots.iter().map(|&s| dim(n, s)).collect();
        let mut data = Vec::with_capacity(dims.iter().product::<usize>().max(1));
        if slots.is_empty() {
            data.push(f(&[]));
        } else {
            for idx in IndexIter::new(dims) {
                data.push(f(&idx));
            }
        }
        Tensor {
            n,
            slots: slots.to_vec(),
            data,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn dims(&self) -> Vec<usize> {
        self.slots.iter().map(|&s| dim(self.n, s)).collect()
    }

    pub fn proto(&self) -> &S {
        &self.data[0]
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.slots.len());
        let mut off = 0;
        for (i, &ix) in idx.iter().enumerate() {
            off = off * dim(self.n, self.slots[i]) + ix;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let off = self.offset(idx);
        self.data[off] = v;
    }

    pub fn update(&mut self, idx: &[usize], f: impl FnOnce(&S) -> S) {
        let off = self.offset(idx);
        self.data[off] = f(&self.data[off]);
    }

    pub fn iter_indices(&self) -> IndexIter {
        IndexIter::new(self.dims())
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Tensor<S> {
        Tensor {
            n: self.n,
            slots: self.slots.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn add(&self, o: &Tensor<S>) -> Tensor<S> {
        assert_eq!(self.slots, o.slots, "tensor slot mismatch in add");
        Tensor {
            n: self.n,
            slots: self.slots.clone(),
            data: self
                .data
                .iter()
                .zip(o.data.iter())
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Tensor<S>) -> Tensor<S> {
        assert_eq!(self.slots, o.slots, "tensor slot mismatch in sub");
        Tensor {
            n: self.n,
            slots: self.slots.clone(),
            data: self
                .data
                .iter()
                .zip(o.data.iter())
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Tensor<S> {
        self.map(|x| x.neg())
    }

    pub fn scale(&self, c: f64) -> Tensor<S> {
        self.map(|x| x.scale(c))
    }

    pub fn scale_by(&self, c: &S) -> Tensor<S> {
        self.map(|x| x.mul(c))
    }

    /// Largest |entry value|.
    pub fn sup_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.value().abs())
            .fold(0.0, f64::max)
    }

    /// Tensor (outer) product; result slots are self's then other's.
    pub fn outer(&self, o: &Tensor<S>) -> Tensor<S> {
        assert_eq!(self.n, o.n);
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&o.slots);
        let mut data = Vec::with_capacity(self.data.len() * o.data.len());
        for a in &self.data {
            for b in &o.data {
                data.push(a.mul(b));
            }
        }
        Tensor {
            n: self.n,
            slots,
            data,
        }
    }

    /// Reorder slots: slot `perm[i]` of `self` becomes slot `i` of the result.
    pub fn transpose(&self, perm: &[usize]) -> Tensor<S> {
        assert_eq!(perm.len(), self.slots.len());
        let slots: Vec<Slot> = perm.iter().map(|&p| self.slots[p]).collect();
        let mut out = Tensor::zeros(self.n, &slots, self.proto());
        let mut src = vec![0usize; perm.len()];
        for idx in out.iter_indices() {
            for (i, &p) in perm.iter().enumerate() {
                src[p] = idx[i];
            }
            out.set(&idx, self.get(&src).clone());
        }
        out
    }

    /// Normalized antisymmetrization over the given subset of slots.
    pub fn antisymmetrize(&self, subset: &[usize]) -> Tensor<S> {
        let m = subset.len();
        if m <= 1 {
            return self.clone();
        }
        let kind = self.slots[subset[0]];
        assert!(
            subset.iter().all(|&s| self.slots[s] == kind),
            "antisymmetrization must stay within one slot kind"
        );
        let perms = signed_permutations(m);
        let inv_fact = 1.0 / perms.len() as f64;
        let mut out = Tensor::zeros(self.n, &self.slots, self.proto());
        let mut src = vec![0usize; self.slots.len()];
        for idx in out.iter_indices() {
            let mut acc = self.proto().zero_like();
            for (perm, sign) in &perms {
                src.copy_from_slice(&idx);
                for (slot_pos, &p) in subset.iter().enumerate() {
                    src[p] = idx[subset[perm[slot_pos]]];
                }
                let term = self.get(&src);
                acc = if *sign > 0.0 {
                    acc.add(term)
                } else {
                    acc.sub(term)
                };
            }
            out.set(&idx, acc.scale(inv_fact));
        }
        out
    }

    /// Normalized symmetrization over the given subset of slots.
    pub fn symmetrize(&self, subset: &[usize]) -> Tensor<S> {
        let m = subset.len();
        if m <= 1 {
            return self.clone();
        }
        let perms = signed_permutations(m);
        let inv_fact = 1.0 / perms.len() as f64;
        let mut out = Tensor::zeros(self.n, &self.slots, self.proto());
        let mut src = vec![0usize; self.slots.len()];
        for idx in out.iter_indices() {
            let mut acc = self.proto().zero_like();
            for (perm, _) in &perms {
                src.copy_from_slice(&idx);
                for (slot_pos, &p) in subset.iter().enumerate() {
                    src[p] = idx[subset[perm[slot_pos]]];
                }
                acc = acc.add(self.get(&src));
            }
            out.set(&idx, acc.scale(inv_fact));
        }
        out
    }
}

/// Contract slot `sa` of `a` with slot `sb` of `b` through the inverse metric
/// `inv` (a rank-2 tensor of the matching slot kind).  Result slots: those of
/// `a` without `sa`, then those of `b` without `sb`.
pub fn contract<S: Scalar>(
    a: &Tensor<S>,
    sa: usize,
    b: &Tensor<S>,
    sb: usize,
    inv: &Tensor<S>,
) -> Tensor<S> {
    assert_eq!(a.n, b.n);
    assert_eq!(a.slots[sa], b.slots[sb], "contracted slots differ in kind");
    assert_eq!(inv.slots.len(), 2);
    let d = dim(a.n, a.slots[sa]);

    let mut slots: Vec<Slot> = Vec::new();
    for (i, &s) in a.slots.iter().enumerate() {
        if i != sa {
            slots.push(s);
        }
    }
    for (j, &s) in b.slots.iter().enumerate() {
        if j != sb {
            slots.push(s);
        }
    }
    let ra = a.slots.len() - 1;
    let mut out = Tensor::zeros(a.n, &slots, a.proto());
    let mut ia = vec![0usize; a.slots.len()];
    let mut ib = vec![0usize; b.slots.len()];
    for idx in out.iter_indices() {
        let mut pos = 0;
        for i in 0..a.slots.len() {
            if i != sa {
                ia[i] = idx[pos];
                pos += 1;
            }
        }
        debug_assert_eq!(pos, ra);
        for j in 0..b.slots.len() {
            if j != sb {
                ib[j] = idx[pos];
                pos += 1;
            }
        }
        let mut acc = a.proto().zero_like();
        for p in 0..d {
            ia[sa] = p;
            let av = a.get(&ia);
            for q in 0..d {
                ib[sb] = q;
                let w = inv.get(&[p, q]);
                if w.value() == 0.0 && a.slots[sa] == Slot::Tractor {
                    // tractor metric is sparse; skip exact zeros
                    continue;
                }
                acc = acc.add(&av.mul(w).mul(b.get(&ib)));
            }
        }
        out.set(&idx, acc);
    }
    out
}

/// Contract slot `sa` of `a` against slot `sb` of `b` by a plain sum, for use
/// when one side is already contravariant.  Result slots as in [`contract`].
pub fn contract_plain<S: Scalar>(
    a: &Tensor<S>,
    sa: usize,
    b: &Tensor<S>,
    sb: usize,
) -> Tensor<S> {
    assert_eq!(a.n, b.n);
    assert_eq!(a.slots[sa], b.slots[sb], "contracted slots differ in kind");
    let d = dim(a.n, a.slots[sa]);
    let mut slots: Vec<Slot> = Vec::new();
    for (i, &s) in a.slots.iter().enumerate() {
        if i != sa {
            slots.push(s);
        }
    }
    for (j, &s) in b.slots.iter().enumerate() {
        if j != sb {
            slots.push(s);
        }
    }
    let ra = a.slots.len() - 1;
    let mut out = Tensor::zeros(a.n, &slots, a.proto());
    let mut ia = vec![0usize; a.slots.len()];
    let mut ib = vec![0usize; b.slots.len()];
    for idx in out.iter_indices() {
        let mut pos = 0;
        for i in 0..a.slots.len() {
            if i != sa {
                ia[i] = idx[pos];
                pos += 1;
            }
        }
        debug_assert_eq!(pos, ra);
        for j in 0..b.slots.len() {
            if j != sb {
                ib[j] = idx[pos];
                pos += 1;
            }
        }
        let mut acc = a.proto().zero_like();
        for p in 0..d {
            ia[sa] = p;
            ib[sb] = p;
            acc = acc.add(&a.get(&ia).mul(b.get(&ib)));
        }
        out.set(&idx, acc);
    }
    out
}

/// Plain trace of two slots of one tensor (no metric; one slot is understood
/// contravariant).
pub fn trace_plain<S: Scalar>(a: &Tensor<S>, s1: usize, s2: usize) -> Tensor<S> {
    assert!(s1 != s2);
    assert_eq!(a.slots[s1], a.slots[s2]);
    let d = dim(a.n, a.slots[s1]);
    let slots: Vec<Slot> = a
        .slots
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != s1 && *i != s2)
        .map(|(_, &s)| s)
        .collect();
    let mut out = Tensor::zeros(a.n, &slots, a.proto());
    let mut ia = vec![0usize; a.slots.len()];
    for idx in out.iter_indices() {
        let mut pos = 0;
        for i in 0..a.slots.len() {
            if i != s1 && i != s2 {
                ia[i] = idx[pos];
                pos += 1;
            }
        }
        let mut acc = a.proto().zero_like();
        for p in 0..d {
            ia[s1] = p;
            ia[s2] = p;
            acc = acc.add(a.get(&ia));
        }
        out.set(&idx, acc);
    }
    out
}

/// Trace two slots of one tensor through the inverse metric.
pub fn trace<S: Scalar>(a: &Tensor<S>, s1: usize, s2: usize, inv: &Tensor<S>) -> Tensor<S> {
    assert!(s1 != s2);
    assert_eq!(a.slots[s1], a.slots[s2]);
    let d = dim(a.n, a.slots[s1]);
    let slots: Vec<Slot> = a
        .slots
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != s1 && *i != s2)
        .map(|(_, &s)| s)
        .collect();
    let mut out = Tensor::zeros(a.n, &slots, a.proto());
    let mut ia = vec![0usize; a.slots.len()];
    for idx in out.iter_indices() {
        let mut pos = 0;
        for i in 0..a.slots.len() {
            if i != s1 && i != s2 {
                ia[i] = idx[pos];
                pos += 1;
            }
        }
        let mut acc = a.proto().zero_like();
        for p in 0..d {
            for q in 0..d {
                let w = inv.get(&[p, q]);
                if w.value() == 0.0 {
                    continue;
                }
                ia[s1] = p;
                ia[s2] = q;
                acc = acc.add(&w.mul(a.get(&ia)));
            }
        }
        out.set(&idx, acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(n: usize) -> Tensor<f64> {
        Tensor::from_fn(n, &[Slot::Tangent, Slot::Tangent], |i| {
            if i[0] == i[1] {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn antisymmetrize_is_projection() {
        let n = 3;
        let t = Tensor::from_fn(n, &[Slot::Tangent, Slot::Tangent], |i| {
            (i[0] * 3 + i[1]) as f64
        });
        let a = t.antisymmetrize(&[0, 1]);
        let aa = a.antisymmetrize(&[0, 1]);
        for idx in a.iter_indices() {
            assert!((a.get(&idx) - aa.get(&idx)).abs() < 1e-15);
            assert!((a.get(&idx) + a.get(&[idx[1], idx[0]])).abs() < 1e-15);
        }
        // normalized: antisym of symmetric part is zero, of antisym is itself
        assert!((a.get(&[0, 1]) - 0.5 * (t.get(&[0, 1]) - t.get(&[1, 0]))).abs() < 1e-15);
    }

    #[test]
    fn contraction_matches_hand_sum() {
        let n = 2;
        let g = euclid(n);
        let v = Tensor::from_fn(n, &[Slot::Tangent], |i| (i[0] + 1) as f64);
        let w = Tensor::from_fn(n, &[Slot::Tangent], |i| (3 - i[0]) as f64);
        let c = contract(&v, 0, &w, 0, &g);
        assert_eq!(c.rank(), 0);
        assert_eq!(c.get(&[]), &(1.0 * 3.0 + 2.0 * 2.0));
    }

    #[test]
    fn transpose_moves_slots() {
        let n = 2;
        let t = Tensor::from_fn(n, &[Slot::Tangent, Slot::Tangent], |i| {
            (i[0] * 10 + i[1]) as f64
        });
        let tt = t.transpose(&[1, 0]);
        for idx in t.iter_indices() {
            assert_eq!(t.get(&idx), tt.get(&[idx[1], idx[0]]));
        }
    }
}
