//! Antisymmetric-form utilities: typed projections, hash actions of
//! endomorphism-valued forms, the two Weyl actions on forms, and the
//! Hodge star.
//!
//! Index conventions: grids are stored fully antisymmetrized with the
//! normalized (1/m!) antisymmetrizer, and every implicit skew of the
//! component formulas is applied explicitly.  Contractions between covariant
//! slots go through the inverse metric supplied in [`Metrics`].

use crate::tensor::{contract, trace, Scalar, Slot, Tensor};

/// Inverse metrics for contraction, one per slot kind, plus the covariant
/// metric for re-injecting traces.
pub struct Metrics<'a, S> {
    pub g: &'a Tensor<S>,
    pub ginv: &'a Tensor<S>,
    pub hinv: Option<&'a Tensor<S>>,
}

impl<'a, S: Scalar> Metrics<'a, S> {
    pub fn inv_for(&self, slot: Slot) -> &Tensor<S> {
        match slot {
            Slot::Tangent => self.ginv,
            Slot::Tractor => self.hinv.expect("tractor contraction needs hinv"),
        }
    }

    /// Raise one slot: plain sum against the inverse metric of its kind.
    pub fn raise(&self, t: &Tensor<S>, slot: usize) -> Tensor<S> {
        let inv = self.inv_for(t.slots()[slot]);
        let d = t.dims()[slot];
        Tensor::from_fn(t.n(), t.slots(), |idx| {
            let mut probe = idx.to_vec();
            let mut acc = t.proto().zero_like();
            for b in 0..d {
                probe[slot] = b;
                acc = acc.add(&inv.get(&[idx[slot], b]).mul(t.get(&probe)));
            }
            acc
        })
    }
}

/// Fully antisymmetrize all slots (normalized).
pub fn antisym_all<S: Scalar>(t: &Tensor<S>) -> Tensor<S> {
    let subset: Vec<usize> = (0..t.rank()).collect();
    t.antisymmetrize(&subset)
}

/// Projection of a (c, a1..ak, spectators..) grid onto the trace-free part
/// with the a-block skew and the totally skew component removed; the target
/// space of the conformal Killing operator.  Trailing spectator slots (e.g.
/// tractor blocks of coupled equations) ride along untouched.
pub fn project_cftf<S: Scalar>(t: &Tensor<S>, m: &Metrics<S>) -> Tensor<S> {
    let k = t
        .slots()
        .iter()
        .filter(|s| **s == Slot::Tangent)
        .count()
        - 1;
    assert!(k >= 1, "projection needs at least (c, a1)");
    assert!(
        t.slots()[..=k].iter().all(|s| *s == Slot::Tangent),
        "tangent block must come first"
    );
    let n = t.n() as f64;
    let form_slots: Vec<usize> = (1..=k).collect();
    let skew_slots: Vec<usize> = (0..=k).collect();
    let s = t.antisymmetrize(&form_slots);
    let u = s.sub(&s.antisymmetrize(&skew_slots));
    // remove the trace part g_{c a1} lambda_{a2..ak}
    let lambda = trace(&u, 0, 1, m.ginv);
    let injected = m.g.outer(&lambda).antisymmetrize(&form_slots);
    u.sub(&injected.scale(k as f64 / (n - k as f64 + 1.0)))
}

/// Trace of a (c, a1..) grid over (c, a1).
pub fn form_trace<S: Scalar>(t: &Tensor<S>, m: &Metrics<S>) -> Tensor<S> {
    trace(t, 0, 1, m.ginv)
}

/// Projection onto E(2,k)_0: c-pair and a-block skew, any skew of more than k
/// indices vanishing, totally trace-free.  Alternating orthogonal
/// projections; converges to working precision in a few dozen sweeps.
pub fn project_e2k0<S: Scalar>(t: &Tensor<S>, m: &Metrics<S>) -> Tensor<S> {
    let rank = t.rank();
    assert!(rank >= 4, "E(2,k) needs (c1, c2, a1..ak) with k >= 2");
    let a_slots: Vec<usize> = (2..rank).collect();
    let q1: Vec<usize> = (1..rank).collect(); // c2 together with all a's
    let mut q2: Vec<usize> = vec![0, 1];
    q2.extend(2..rank - 1); // everything except the last a
    let nf = t.n() as f64;

    let mut x = t.clone();
    for sweep in 0..400 {
        let before = x.clone();
        x = x.antisymmetrize(&[0, 1]);
        x = x.antisymmetrize(&a_slots);
        x = x.sub(&x.antisymmetrize(&q1));
        x = x.sub(&x.antisymmetrize(&q2));
        // orthogonal projection onto the kernel of the (c1, a1) trace
        let tr = trace(&x, 0, 2, m.ginv);
        let inj = m.g.outer(&tr); // (c1, a1, c2, a2..ak)
        let mut perm: Vec<usize> = Vec::with_capacity(rank);
        perm.push(0);
        perm.push(2);
        perm.push(1);
        perm.extend(3..rank);
        x = x.sub(&inj.transpose(&perm).scale(1.0 / nf));
        let delta = x.sub(&before).sup_norm();
        if delta < 1e-14 * (1.0 + x.sup_norm()) && sweep > 2 {
            break;
        }
    }
    x
}

/// Hash action of an endomorphism-valued tensor on `t`.
///
/// `obj` carries extra slots plus one endomorphism pair at `pair` (both
/// covariant; the first is raised internally).  Acts on every `t` slot of the
/// pair's kind with the covariant-slot sign: each slot picks up -A^p_c T_p.
/// Result slots: obj's extra slots, then t's slots.
pub fn hash<S: Scalar>(
    obj: &Tensor<S>,
    pair: (usize, usize),
    t: &Tensor<S>,
    m: &Metrics<S>,
) -> Tensor<S> {
    let kind = obj.slots()[pair.0];
    assert_eq!(kind, obj.slots()[pair.1]);
    let obj_r = m.raise(obj, pair.0);
    let extra: Vec<usize> = (0..obj.rank())
        .filter(|s| *s != pair.0 && *s != pair.1)
        .collect();
    let mut out_slots: Vec<Slot> = extra.iter().map(|&s| obj.slots()[s]).collect();
    out_slots.extend_from_slice(t.slots());
    let d = t.n() + if kind == Slot::Tractor { 2 } else { 0 };

    let mut out = Tensor::zeros(t.n(), &out_slots, t.proto());
    let mut oidx = vec![0usize; obj.rank()];
    let mut tidx = vec![0usize; t.rank()];
    for idx in out.iter_indices() {
        for (pos, &s) in extra.iter().enumerate() {
            oidx[s] = idx[pos];
        }
        tidx.copy_from_slice(&idx[extra.len()..]);
        let mut acc = t.proto().zero_like();
        for (i, &s) in t.slots().iter().enumerate() {
            if s != kind {
                continue;
            }
            oidx[pair.1] = tidx[i];
            let saved = tidx[i];
            for p in 0..d {
                oidx[pair.0] = p;
                tidx[i] = p;
                acc = acc.sub(&obj_r.get(&oidx).mul(t.get(&tidx)));
            }
            tidx[i] = saved;
        }
        out.set(&idx, acc);
    }
    out
}

/// Double hash: two endomorphism pairs of `obj` acting on ordered pairs of
/// distinct `t` slots (first pair on slot i, second on slot j); the two
/// covariant-slot signs cancel.
pub fn double_hash<S: Scalar>(
    obj: &Tensor<S>,
    pair1: (usize, usize),
    pair2: (usize, usize),
    t: &Tensor<S>,
    m: &Metrics<S>,
) -> Tensor<S> {
    let kind1 = obj.slots()[pair1.0];
    let kind2 = obj.slots()[pair2.0];
    let obj_r = m.raise(&m.raise(obj, pair1.0), pair2.0);
    let extra: Vec<usize> = (0..obj.rank())
        .filter(|s| *s != pair1.0 && *s != pair1.1 && *s != pair2.0 && *s != pair2.1)
        .collect();
    let mut out_slots: Vec<Slot> = extra.iter().map(|&s| obj.slots()[s]).collect();
    out_slots.extend_from_slice(t.slots());
    let d1 = t.n() + if kind1 == Slot::Tractor { 2 } else { 0 };
    let d2 = t.n() + if kind2 == Slot::Tractor { 2 } else { 0 };

    let mut out = Tensor::zeros(t.n(), &out_slots, t.proto());
    let mut oidx = vec![0usize; obj.rank()];
    let mut tidx = vec![0usize; t.rank()];
    for idx in out.iter_indices() {
        for (pos, &s) in extra.iter().enumerate() {
            oidx[s] = idx[pos];
        }
        tidx.copy_from_slice(&idx[extra.len()..]);
        let mut acc = t.proto().zero_like();
        for (i, &si) in t.slots().iter().enumerate() {
            if si != kind1 {
                continue;
            }
            for (j, &sj) in t.slots().iter().enumerate() {
                if sj != kind2 || i == j {
                    continue;
                }
                oidx[pair1.1] = tidx[i];
                oidx[pair2.1] = tidx[j];
                let (vi, vj) = (tidx[i], tidx[j]);
                for p in 0..d1 {
                    oidx[pair1.0] = p;
                    tidx[i] = p;
                    for q in 0..d2 {
                        oidx[pair2.0] = q;
                        tidx[j] = q;
                        acc = acc.add(&obj_r.get(&oidx).mul(t.get(&tidx)));
                    }
                }
                tidx[i] = vi;
                tidx[j] = vj;
            }
        }
        out.set(&idx, acc);
    }
    out
}

/// Both Weyl-on-form terms share the contraction
/// T_{x y z..} = C_{xy}^{pq} f_{pq z..}; compute it once.
fn weyl_double_contraction<S: Scalar>(
    weyl: &Tensor<S>,
    f: &Tensor<S>,
    m: &Metrics<S>,
) -> Tensor<S> {
    // contract C slot 2 with f slot 0, then the leftover q with f's next slot
    let step = contract(weyl, 2, f, 0, m.ginv); // (x, y, q, f2..fk)
    trace(&step, 2, 3, m.ginv) // (x, y, f3..fk)
}

/// The Weyl action landing in E(1,k-1)_0[w-2]:
/// (k-2)/k [ C_{c a2}^{pq} f_{pq a3..} + C_{a3 a2}^{pq} f_{pq c a4..} ],
/// a-block skewed.  Zero for k = 2 by the prefactor.
pub fn blacklozenge<S: Scalar>(weyl: &Tensor<S>, f: &Tensor<S>, m: &Metrics<S>) -> Tensor<S> {
    let k = f.rank();
    assert!(k >= 2, "needs a form of rank >= 2");
    let out_slots = vec![Slot::Tangent; k];
    if k == 2 {
        return Tensor::zeros(f.n(), &out_slots, f.proto());
    }
    let t = weyl_double_contraction(weyl, f, m); // (x, y, z1..z_{k-2})
    let term1 = t.clone(); // read as (c, a2, a3..ak)
    // term2 reads t as (a3, a2, c, a4..ak); rearrange to (c, a2, a3, a4..)
    let mut perm: Vec<usize> = vec![2, 1, 0];
    perm.extend(3..k);
    let term2 = t.transpose(&perm);
    let a_block: Vec<usize> = (1..k).collect();
    term1
        .add(&term2)
        .antisymmetrize(&a_block)
        .scale((k as f64 - 2.0) / k as f64)
}

/// The Weyl action landing in E(2,k)_0[w]:
/// C_{c1 c2 a1}^p f_{p a2..} + C_{a1 a2 c1}^p f_{p c2 a3..}
///   + k/(n-k) g_{c1 a1} (C bl f)_{c2 a2..},
/// with the c-pair and the a-block skewed.  Identically zero for k = n-1.
pub fn lozenge<S: Scalar>(weyl: &Tensor<S>, f: &Tensor<S>, m: &Metrics<S>) -> Tensor<S> {
    let k = f.rank();
    let n = f.n();
    assert!(k >= 2, "needs a form of rank >= 2");
    assert!(k < n, "lozenge defined for k <= n-1");
    // term1: contract C slot 3 with f slot 0: (c1, c2, a1, a2..ak)
    let term1 = contract(weyl, 3, f, 0, m.ginv);
    // term2: same contraction read as (a1, a2, c1 | c2, a3..ak)
    let raw2 = contract(weyl, 3, f, 0, m.ginv); // (x=a1, y=a2, z=c1, w=c2, a3..)
    let mut perm: Vec<usize> = vec![2, 3, 0, 1];
    perm.extend(4..(k + 2));
    let term2 = raw2.transpose(&perm);
    // term3: g_{c1 a1} (C bl f)_{c2, a2..ak}
    let bl = blacklozenge(weyl, f, m); // (c, a2..ak)
    let inj = m.g.outer(&bl); // (c1, a1, c2, a2..ak)
    let mut perm3: Vec<usize> = vec![0, 2, 1];
    perm3.extend(3..(k + 2));
    let term3 = inj
        .transpose(&perm3)
        .scale(k as f64 / (n as f64 - k as f64));

    let c_pair = [0usize, 1];
    let a_block: Vec<usize> = (2..(k + 2)).collect();
    term1
        .add(&term2)
        .add(&term3)
        .antisymmetrize(&c_pair)
        .antisymmetrize(&a_block)
}

/// Hodge star of a k-form; returns the (n-k)-form and the shifted weight
/// n - 2k + w.  Orientation is the coordinate order.
pub fn hodge_star<S: Scalar>(
    f: &Tensor<S>,
    w: f64,
    vol: &S,
    m: &Metrics<S>,
) -> (Tensor<S>, f64) {
    let n = f.n();
    let k = f.rank();
    let eps = epsilon_tensor(n, vol, f.proto());
    if k == 0 {
        return (eps.scale_by(f.get(&[])), n as f64 + w);
    }
    let mut x = contract(f, 0, &eps, 0, m.ginv); // (f2..fk, e2..en)
    for consumed in 1..k {
        x = trace(&x, 0, k - consumed, m.ginv);
    }
    let mut inv_fact = 1.0;
    for j in 2..=k {
        inv_fact /= j as f64;
    }
    (x.scale(inv_fact), n as f64 - 2.0 * k as f64 + w)
}

/// Volume form components: vol * sign(permutation).
pub fn epsilon_tensor<S: Scalar>(n: usize, vol: &S, proto: &S) -> Tensor<S> {
    Tensor::from_fn(n, &vec![Slot::Tangent; n], |idx| {
        let mut seen = vec![false; n];
        for &i in idx {
            if seen[i] {
                return proto.zero_like();
            }
            seen[i] = true;
        }
        let mut sign = 1.0;
        for i in 0..n {
            for j in (i + 1)..n {
                if idx[i] > idx[j] {
                    sign = -sign;
                }
            }
        }
        vol.scale(sign)
    })
}

/// Symmetric trace-free projection over all slots (conformal Killing tensor
/// symmetry type).  Iterative trace removal with a Rayleigh-quotient step.
pub fn sym_tracefree<S: Scalar>(t: &Tensor<S>, m: &Metrics<S>) -> Tensor<S> {
    let rank = t.rank();
    let all: Vec<usize> = (0..rank).collect();
    let mut x = t.symmetrize(&all);
    if rank < 2 {
        return x;
    }
    let scale0 = 1.0 + x.sup_norm();
    for _ in 0..200 {
        let tr = trace(&x, 0, 1, m.ginv);
        if tr.sup_norm() <= 1e-15 * scale0 {
            break;
        }
        let inj = m.g.outer(&tr).symmetrize(&all);
        // Rayleigh quotient c of the trace-of-injection operator along tr;
        // subtracting inj/c kills the trace to first order each sweep.
        let l_tr = trace(&inj, 0, 1, m.ginv);
        let num: f64 = dot_values(&l_tr, &tr);
        let den: f64 = dot_values(&tr, &tr);
        if num == 0.0 || den == 0.0 {
            break;
        }
        x = x.sub(&inj.scale(den / num));
    }
    x
}

fn dot_values<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> f64 {
    a.data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| x.value() * y.value())
        .sum()
}
