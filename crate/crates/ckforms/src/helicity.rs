//! Tractor-twisted splittings of conformal Killing forms, the curvature-
//! modified coupled connections, almost Einstein scales, and the helicity
//! raising/lowering maps with their curvature obstructions.
//!
//! Tensor-tractor fields are stored with all tangent slots first, then the
//! tractor block; coupled derivatives prepend the direction slot.

use num_traits::Float;

use crate::forms::{self, Metrics};
use crate::geometry::Geometry;
use crate::jet::Jet;
use crate::tensor::{contract, contract_plain, trace, trace_plain, IndexIter, Slot, Tensor};
use crate::tensor::Scalar as _;
use crate::tractor::{self, projector, Proj};

fn metrics<T: Float>(geo: &Geometry<T>) -> Metrics<'_, Jet<T>> {
    Metrics {
        g: &geo.g,
        ginv: &geo.ginv,
        hinv: geo.hinv.as_ref(),
    }
}

/// The splitting M-bar: (n-k+1) Z sigma - l X (divergence term), taking a
/// k-form of weight k+1 to a (k-l)-form with l tractor-form slots,
/// for 1 <= l <= k-1 (l = k is the full splitting's Z-part analogue).
pub fn mbar<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>, l: usize) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let n = geo.n;
    assert!(l >= 1 && l <= k, "mbar needs 1 <= l <= k");
    let nf = n as f64;
    let kf = k as f64;

    let z = projector(geo, Proj::Z, l); // (B.. l tractor, b.. l tangent up)
    let term1 = contract_proj_tail(&z, l, sigma, k - l).scale(nf - kf + 1.0);

    // divergence in the (k-l+1)-th slot: nabla^{b1} sigma_{a.. b1 bdot..}
    let ds = geo.covariant_derivative(sigma);
    let div = trace(&ds, 0, 1 + (k - l), &geo.ginv); // (a.., bdot..)
    let x = projector(geo, Proj::X, l - 1); // (l tractor, l-1 tangent up)
    let term2 = contract_proj_tail(&x, l - 1, &div, k - l).scale(l as f64);

    term1.sub(&term2)
}

/// The splitting M-under: (k+1) Z g sigma - l X g (gradient term), taking a
/// k-form of weight k+1 to a (k+l)-form with l tractor-form slots,
/// for 1 <= l <= n-k-1 by the adopted range convention.
pub fn munder<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>, l: usize) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let kf = k as f64;

    let z_low = tractor::lower_all(geo, &projector(geo, Proj::Z, l));
    // sigma_{a1..ak} (x) g_{a(k+1) b1} .. : tangent block (a1..ak, a(k+1)..a(k+l))
    let term1 = {
        let raw = sigma.outer(&z_low); // (a1..ak, B.., b-lows..)
        let raw = gather_tangent_first(&raw);
        raw.scale(kf + 1.0)
    };
    let term2 = {
        let ds = geo.covariant_derivative(sigma); // (a(k+1), a1..ak)
        let mut perm: Vec<usize> = (1..=k).collect();
        perm.push(0);
        let ds = ds.transpose(&perm); // (a1..ak, a(k+1))
        let x_low = tractor::lower_all(geo, &projector(geo, Proj::X, l - 1));
        let raw = ds.outer(&x_low);
        gather_tangent_first(&raw).scale(l as f64)
    };
    let out = term1.sub(&term2);
    let a_block: Vec<usize> = (0..(k + l)).collect();
    out.antisymmetrize(&a_block)
}

/// Contract the tangent (contravariant) tail of a projector grid against the
/// trailing `tail` slots of `form`; result (form-leading.., tractor-block..).
fn contract_proj_tail<T: Float>(
    proj: &Tensor<Jet<T>>,
    tail: usize,
    form: &Tensor<Jet<T>>,
    lead: usize,
) -> Tensor<Jet<T>> {
    let n = form.n();
    let m = proj.rank() - tail; // tractor slots
    assert_eq!(form.rank(), lead + tail);
    let mut slots = vec![Slot::Tangent; lead];
    slots.extend(vec![Slot::Tractor; m]);
    Tensor::from_fn(n, &slots, |idx| {
        let mut acc = form.proto().zero_like();
        let mut pidx = vec![0usize; proj.rank()];
        pidx[..m].copy_from_slice(&idx[lead..]);
        let mut fidx = vec![0usize; form.rank()];
        fidx[..lead].copy_from_slice(&idx[..lead]);
        for b in IndexIter::new(vec![n; tail]) {
            pidx[m..].copy_from_slice(&b);
            let pv = proj.get(&pidx);
            if pv.value() == T::zero() {
                continue;
            }
            fidx[lead..].copy_from_slice(&b);
            acc = acc.add(&pv.mul(form.get(&fidx)));
        }
        acc
    })
}

/// Reorder slots so all tangent slots come first (stable), tractor after.
fn gather_tangent_first<T: Float>(t: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let mut perm: Vec<usize> = Vec::with_capacity(t.rank());
    for (i, s) in t.slots().iter().enumerate() {
        if *s == Slot::Tangent {
            perm.push(i);
        }
    }
    for (i, s) in t.slots().iter().enumerate() {
        if *s == Slot::Tractor {
            perm.push(i);
        }
    }
    t.transpose(&perm)
}

/// kappa = X (x) tractor curvature: one-form in End(tractor) (x) End(tractor);
/// slots (c, E0, E1, F0, F1).
pub fn kappa<T: Float>(geo: &Geometry<T>) -> Tensor<Jet<T>> {
    let omega = tractor::tractor_curvature(geo); // (a, b, C, E)
    let x1 = projector(geo, Proj::X, 1); // (E0, E1, e-up)
    let r = contract_plain(&x1, 2, &omega, 1); // (E0, E1, c, F0, F1)
    r.transpose(&[2, 0, 1, 3, 4])
}

/// omega = X (x) Weyl: one-form in End(tractor) (x) End(tangent);
/// slots (c, E0, E1, f0, f1).
pub fn omega_coupling<T: Float>(geo: &Geometry<T>) -> Tensor<Jet<T>> {
    let x1 = projector(geo, Proj::X, 1);
    let r = contract_plain(&x1, 2, geo.weyl(), 1); // (E0, E1, c, f0, f1)
    r.transpose(&[2, 0, 1, 3, 4])
}

/// The curvature-modified coupled derivative
/// nabla^x T = nabla T + x (omega## + kappa##) T; leading slot is the
/// direction.  With x = 0 this is the coupled Levi-Civita/tractor derivative.
pub fn coupled_derivative<T: Float>(
    geo: &Geometry<T>,
    t: &Tensor<Jet<T>>,
    x: f64,
) -> Tensor<Jet<T>> {
    let mut out = geo.covariant_derivative(t);
    if x != 0.0 {
        let m = metrics(geo);
        let kap = kappa(geo);
        let om = omega_coupling(geo);
        let action = forms::double_hash(&kap, (1, 2), (3, 4), t, &m)
            .add(&forms::double_hash(&om, (1, 2), (3, 4), t, &m));
        out = out.add(&action.scale(x));
    }
    out
}

/// Almost Einstein data: the parallel standard tractor of a scale and the
/// equation residual.
pub struct EinsteinTractor<T: Float> {
    /// Dense covariant I_A.
    pub tractor: Tensor<Jet<T>>,
    /// Sup-norm of nabla I at the point.
    pub parallel_residual: f64,
    /// Sup-norm of the trace-free Hessian equation on alpha.
    pub equation_residual: f64,
}

/// I_A = Y alpha + Z grad alpha - (1/n) X (Lap + J) alpha, with residuals.
pub fn einstein_tractor<T: Float>(geo: &Geometry<T>, alpha: &Jet<T>) -> EinsteinTractor<T> {
    let n = geo.n as f64;
    let alpha_t = Tensor::scalar(geo.n, alpha.clone());
    let da = geo.covariant_derivative(&alpha_t); // (a)
    let dda = geo.covariant_derivative(&da); // (a, b)
    let lap = trace(&dda, 0, 1, &geo.ginv);
    let tau = lap
        .get(&[])
        .add(&geo.schouten_trace().mul(alpha))
        .scale(T::from(-1.0 / n).unwrap());
    let i_dense = tractor::standard_tractor(alpha, &da, &tau);
    let di = geo.covariant_derivative(&i_dense);
    let parallel_residual = di.sup_norm();

    // trace-free Hessian + Schouten: sym0(nabla nabla alpha + P alpha)
    let m = metrics(geo);
    let eq = dda.add(&geo.schouten().scale_by(alpha));
    let eq0 = forms::sym_tracefree(&eq, &m);
    EinsteinTractor {
        tractor: i_dense,
        parallel_residual,
        equation_residual: eq0.sup_norm(),
    }
}

/// Helicity lowering: alpha div sigma - (n-k+1) (grad alpha) . sigma,
/// a (k-1)-form of weight k.
pub fn lower<T: Float>(
    geo: &Geometry<T>,
    alpha: &Jet<T>,
    sigma: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let n = geo.n as f64;
    let alpha_t = Tensor::scalar(geo.n, alpha.clone());
    let da = geo.covariant_derivative(&alpha_t);
    let ds = geo.covariant_derivative(sigma);
    let div = trace(&ds, 0, k, &geo.ginv); // nabla^p sigma_{a.. p}
    let contracted = contract(&da, 0, sigma, k - 1, &geo.ginv); // (a1..a(k-1))
    div.scale_by(alpha).sub(&contracted.scale(n - k as f64 + 1.0))
}

/// Helicity raising: alpha d sigma - (k+1) (d alpha) wedge sigma,
/// a (k+1)-form of weight k+2.
pub fn raise<T: Float>(
    geo: &Geometry<T>,
    alpha: &Jet<T>,
    sigma: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let kf = k as f64;
    let alpha_t = Tensor::scalar(geo.n, alpha.clone());
    let da = geo.covariant_derivative(&alpha_t);
    let ds = geo.covariant_derivative(sigma); // (a(k+1), a1..ak)
    let mut perm: Vec<usize> = (1..=k).collect();
    perm.push(0);
    let term1 = ds.transpose(&perm).scale_by(alpha); // (a1..ak, a(k+1))
    let term2 = {
        let raw = sigma.outer(&da); // (a1..ak, a(k+1))
        raw.scale(kf + 1.0)
    };
    let all: Vec<usize> = (0..=k).collect();
    term1.sub(&term2).antisymmetrize(&all)
}

/// First curvature obstruction: projection of C_{c a1}^{pq} sigma_{a2.. pq}
/// onto the conformal Killing target type of a (k-1)-form.
pub fn lower_obstruction<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    assert!(k >= 2);
    // contract C slots (2,3) against sigma's last two slots
    let r = contract(geo.weyl(), 2, sigma, k - 2, &geo.ginv); // (c, a1, q, adot.., q')
    let e = trace(&r, 2, r.rank() - 1, &geo.ginv); // (c, a1, a2..a(k-1))
    let m = metrics(geo);
    forms::project_cftf(&e, &m)
}

/// Second curvature obstruction: projection of C_{c a(k+1) a1}^p sigma_{a2.. p}.
pub fn raise_obstruction<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    assert!(k <= geo.n - 2);
    let r = contract(geo.weyl(), 3, sigma, k - 1, &geo.ginv); // (c, a(k+1), a1, a2..ak-1+1?)
    // slots: (c, x=a(k+1), y=a1, adot-block (k-1))
    let mut perm: Vec<usize> = vec![0, 2];
    perm.extend(3..(k + 2));
    perm.push(1);
    let arranged = r.transpose(&perm); // (c, a1, a2.., a(k+1))
    let a_block: Vec<usize> = (1..=(k + 1)).collect();
    let skewed = arranged.antisymmetrize(&a_block);
    let m = metrics(geo);
    forms::project_cftf(&skewed, &m)
}

/// Pairwise lowering by a conformal Killing vector:
/// 2 sigma^p nabla^q tau_{a.. p q} + (n-k+1) (nabla^p sigma^q) tau_{a.. p q}.
pub fn ckv_pair_lower<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    tau: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = tau.rank();
    let n = geo.n as f64;
    assert!(k >= 2);
    let dtau = geo.covariant_derivative(tau); // (e, a.., p, q)
    let divt = trace(&dtau, 0, k, &geo.ginv); // (a1..a(k-2), p)
    let term1 = contract(sigma, 0, &divt, k - 2, &geo.ginv).scale(2.0);
    let dsig = geo.covariant_derivative(sigma); // (p, q)
    let r = contract(&dsig, 0, tau, k - 2, &geo.ginv); // (q, a.., q')
    let term2 = trace(&r, 0, k - 1, &geo.ginv).scale(n - k as f64 + 1.0);
    term1.add(&term2)
}

/// Pairwise raising: skew of
/// 2 sigma_{a(k+1)} nabla_{a(k+2)} tau_{a..} + (k+1)(nabla_{a(k+1)} sigma_{a(k+2)}) tau_{a..}.
pub fn ckv_pair_raise<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    tau: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = tau.rank();
    let kf = k as f64;
    let dtau = geo.covariant_derivative(tau); // (a(k+2), a1..ak)
    let mut perm: Vec<usize> = (1..=k).collect();
    perm.push(0);
    let dtau = dtau.transpose(&perm); // (a1..ak, a(k+2))
    let t1 = tau_outer_last(sigma, &dtau).scale(2.0);
    let dsig = geo.covariant_derivative(sigma); // (a(k+1), a(k+2))
    let t2 = tau.outer(&dsig).scale(kf + 1.0); // (a1..ak, a(k+1), a(k+2))
    let all: Vec<usize> = (0..(k + 2)).collect();
    t1.add(&t2).antisymmetrize(&all)
}

// sigma_{a(k+1)} placed before the gradient slot of dtau
fn tau_outer_last<T: Float>(sigma: &Tensor<Jet<T>>, dtau: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    // dtau: (a1..ak, a(k+2)); sigma: (a(k+1))
    let k = dtau.rank() - 1;
    let raw = dtau.outer(sigma); // (a1..ak, a(k+2), a(k+1))
    let mut perm: Vec<usize> = (0..k).collect();
    perm.push(k + 1); // a(k+1)
    perm.push(k); // a(k+2)
    raw.transpose(&perm)
}

/// Obstruction for ckv_pair_lower (stated for k >= 3):
/// (n-k+1) C^r_c{}^{pq} tau_{a.. pq} sigma_r + (k-2) C_{c a1}^{pq} tau_{p adot.. q r} sigma^r.
pub fn ckv_pair_lower_obstruction<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    tau: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = tau.rank();
    let n = geo.n as f64;
    let kf = k as f64;
    let m = metrics(geo);
    // A: C_{r c}^{p q} tau_{a.. p q} sigma^r
    let ct = contract(geo.weyl(), 2, tau, k - 2, &geo.ginv); // (r, c, q, a.., q')
    let ct = trace(&ct, 2, ct.rank() - 1, &geo.ginv); // (r, c, a1..a(k-2))
    let t_a = contract(sigma, 0, &ct, 0, &geo.ginv); // (c, a..)
    // B: C_{c a1}^{p q} tau_{p a2.. q r} sigma^r
    let ts = contract(tau, k - 1, sigma, 0, &geo.ginv); // (tau minus last)
    let r = contract(geo.weyl(), 2, &ts, 0, &geo.ginv); // (c, a1, q, a2.., q')
    let t_b = trace(&r, 2, r.rank() - 1, &geo.ginv); // (c, a1, a2..)
    let sum = t_a
        .scale(n - kf + 1.0)
        .add(&t_b.scale(kf - 2.0));
    forms::project_cftf(&sum, &m)
}

/// Obstruction for ckv_pair_raise (stated for 1 <= k <= n-3):
/// 2 C_{c a(k+1) a1}^p tau_{a2.. p} sigma_{a(k+2)} - C^p_{c a(k+1) a(k+2)} tau_{a..} sigma_p.
pub fn ckv_pair_raise_obstruction<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    tau: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = tau.rank();
    let m = metrics(geo);
    // first piece: like the raise obstruction, tensored with sigma
    let r = contract(geo.weyl(), 3, tau, k - 1, &geo.ginv); // (c, x, y, a2..)
    let mut perm: Vec<usize> = vec![0, 2];
    perm.extend(3..(k + 2));
    perm.push(1);
    let arranged = r.transpose(&perm); // (c, a1, a2.., a(k+1))
    let t1 = arranged.outer(sigma).scale(2.0); // (c, a1..a(k+1), a(k+2))
    // second piece: C^p_{c a(k+1) a(k+2)} tau sigma_p
    let c_sig = contract(geo.weyl(), 0, sigma, 0, &geo.ginv); // (c, a(k+1), a(k+2))
    let t2 = tau.outer(&c_sig); // (a1..ak, c, a(k+1), a(k+2))
    let mut perm2: Vec<usize> = vec![k];
    perm2.extend(0..k);
    perm2.push(k + 1);
    perm2.push(k + 2);
    let t2 = t2.transpose(&perm2); // (c, a1..ak, a(k+1), a(k+2))
    let a_block: Vec<usize> = (1..=(k + 2)).collect();
    let combined = t1.sub(&t2).antisymmetrize(&a_block);
    forms::project_cftf(&combined, &m)
}

/// Wedge power sigma ^ mu^p with mu the skew derivative of a conformal
/// Killing one-form; a (2p+1)-form of weight 2p+2.
pub fn ckv_power_form<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    p: usize,
) -> Tensor<Jet<T>> {
    assert_eq!(sigma.rank(), 1);
    let mu = forms::antisym_all(&geo.covariant_derivative(sigma));
    let mut acc = sigma.clone();
    for _ in 0..p {
        acc = acc.outer(&mu);
    }
    forms::antisym_all(&acc)
}

/// The power-form condition sigma_{a0} C_{a1 a2 c}^d sigma_d, skewed over
/// (a0, a1, a2); reported, not asserted.
pub fn ckv_power_condition<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> f64 {
    let c_sig = contract(geo.weyl(), 3, sigma, 0, &geo.ginv); // (a1, a2, c)
    let raw = sigma.outer(&c_sig); // (a0, a1, a2, c)
    raw.antisymmetrize(&[0, 1, 2]).sup_norm()
}

/// Symmetric trace-free contraction product of conformal Killing forms.
/// `plan` pairs global slot positions of the outer product; remaining slots
/// are symmetrized trace-free.
pub fn ck_tensor_product<T: Float>(
    geo: &Geometry<T>,
    factors: &[&Tensor<Jet<T>>],
    plan: &[(usize, usize)],
) -> Tensor<Jet<T>> {
    let mut big = factors[0].clone();
    for f in &factors[1..] {
        big = big.outer(f);
    }
    // contract planned pairs from the highest positions down
    let mut pairs: Vec<(usize, usize)> = plan
        .iter()
        .map(|&(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect();
    pairs.sort();
    while let Some((a, b)) = pairs.pop() {
        big = trace(&big, a, b, &geo.ginv);
        // adjust remaining pair positions for the two removed slots
        for p in pairs.iter_mut() {
            let shift = |x: usize| x - (x > a) as usize - (x > b) as usize;
            *p = (shift(p.0), shift(p.1));
        }
    }
    let m = metrics(geo);
    forms::sym_tracefree(&big, &m)
}

/// Conformal Killing tensor residual: sym0 of nabla t.
pub fn ck_tensor_residual<T: Float>(geo: &Geometry<T>, t: &Tensor<Jet<T>>) -> f64 {
    let dt = geo.covariant_derivative(t);
    let m = metrics(geo);
    forms::sym_tracefree(&dt, &m).sup_norm()
}

/// Gradient conformal Killing field from a non-homothetic CKV on an Einstein
/// scale: (grad alpha) lowered-sigma - alpha grad(lowered-sigma).
pub fn gradient_field_from_ckv<T: Float>(
    geo: &Geometry<T>,
    alpha: &Jet<T>,
    sigma: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    assert_eq!(sigma.rank(), 1);
    let n = geo.n as f64;
    let alpha_t = Tensor::scalar(geo.n, alpha.clone());
    let da = geo.covariant_derivative(&alpha_t);
    let ds = geo.covariant_derivative(sigma);
    let div = trace(&ds, 0, 1, &geo.ginv); // scalar
    let da_dot_sigma = contract(&da, 0, sigma, 0, &geo.ginv);
    // lowered scalar: alpha div sigma - n (grad alpha . sigma)
    let lowered = div.scale_by(alpha).sub(&da_dot_sigma.scale(n));
    let dl = geo.covariant_derivative(&lowered); // (a)
    da.scale_by(lowered.get(&[])).sub(&dl.scale_by(alpha))
}

/// sym0( sigma_{(a}^{edot} sigma_{b)0 edot} ): the conformal Killing 2-tensor
/// built from a conformal Killing k-form by contracting all but one slot.
pub fn sigma_square_tensor<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let raw = pair_contract_tail(sigma, sigma, k - 1, &geo.ginv, geo.n);
    let m = metrics(geo);
    forms::sym_tracefree(&raw, &m)
}

/// Same contraction through the tractor extension M-bar with l = k-1.
pub fn mbar_square_tensor<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let sbar = mbar(geo, sigma, k - 1); // (a, B-block(k-1))
    let raw = pair_contract_tail(&sbar, &sbar, k - 1, geo.hinv(), geo.n + 2);
    let m = metrics(geo);
    forms::sym_tracefree(&raw, &m)
}

/// Contract the trailing `tail` slots of two tensors pairwise through `inv`.
fn pair_contract_tail<T: Float>(
    a: &Tensor<Jet<T>>,
    b: &Tensor<Jet<T>>,
    tail: usize,
    inv: &Tensor<Jet<T>>,
    dim: usize,
) -> Tensor<Jet<T>> {
    let lead_a = a.rank() - tail;
    let lead_b = b.rank() - tail;
    let mut slots: Vec<Slot> = a.slots()[..lead_a].to_vec();
    slots.extend_from_slice(&b.slots()[..lead_b]);
    Tensor::from_fn(a.n(), &slots, |idx| {
        let mut acc = a.proto().zero_like();
        let mut ia = vec![0usize; a.rank()];
        let mut ib = vec![0usize; b.rank()];
        ia[..lead_a].copy_from_slice(&idx[..lead_a]);
        ib[..lead_b].copy_from_slice(&idx[lead_a..]);
        for e in IndexIter::new(vec![dim; tail]) {
            ia[lead_a..].copy_from_slice(&e);
            let av = a.get(&ia);
            for f in IndexIter::new(vec![dim; tail]) {
                let mut w: Option<Jet<T>> = None;
                for (ei, fi) in e.iter().zip(f.iter()) {
                    let iv = inv.get(&[*ei, *fi]);
                    w = Some(match w {
                        None => iv.clone(),
                        Some(acc) => acc.mul(iv),
                    });
                }
                let w = w.unwrap();
                if w.value().to_f64().unwrap() == 0.0 && tail > 1 {
                    continue;
                }
                ib[lead_b..].copy_from_slice(&f);
                acc = acc.add(&av.mul(&w).mul(b.get(&ib)));
            }
        }
        acc
    })
}

/// Coupled conformal Killing residual of the M-bar splitting against the
/// stated Weyl right-hand side; both sides projected, for any admissible l.
pub fn charac_bar_residual<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    l: usize,
) -> (f64, f64) {
    let k = sigma.rank();
    let n = geo.n as f64;
    let kf = k as f64;
    let lf = l as f64;
    let m = metrics(geo);

    let sbar = mbar(geo, sigma, l); // (a-block k-l, B-block l)
    let lhs = geo.covariant_derivative(&sbar); // (c, a.., B..)
    let lhs_proj = forms::project_cftf(&lhs, &m);

    // reformulated right-hand side:
    // l(n-k+1)/(n-k) X [ (k-l) C_c^p_{a1}^q s_{p adot q bdot}
    //                    + (l-1) C_c^p_{b2}^q s_{a.. q p bddot} ]
    let cr = geo.raise_slot(&geo.raise_slot(geo.weyl(), 1), 3); // C_c{}^p{}_x{}^q
    let e1 = {
        let r = contract_plain(&cr, 1, sigma, 0); // (c, a1, q, adot(k-l-1), qpos, bdot)
        let qpos = 3 + (k - l).saturating_sub(1);
        trace_plain(&r, 2, qpos) // (c, a1, adot.., bdot..)
    };
    let e2 = if l >= 2 {
        let r = contract_plain(&cr, 1, sigma, k - l + 1); // (c, b2, q, a..(k-l), qpos, bddot)
        let qpos = 3 + (k - l);
        let t = trace_plain(&r, 2, qpos); // (c, b2, a.., bddot)
        // arrange (c, a.., b2, bddot)
        let mut perm: Vec<usize> = vec![0];
        perm.extend(2..(2 + (k - l)));
        perm.push(1);
        perm.extend((2 + (k - l))..(k + 1));
        Some(t.transpose(&perm))
    } else {
        None
    };
    let mut bracket = e1.scale(kf - lf);
    if let Some(e2) = e2 {
        bracket = bracket.add(&e2.scale(lf - 1.0));
    }
    // skew the a-block and the bdot-block
    let a_block: Vec<usize> = (1..=(k - l)).collect();
    let b_block: Vec<usize> = ((k - l + 1)..(k + 1)).collect();
    let bracket = bracket.antisymmetrize(&a_block).antisymmetrize(&b_block);
    let x = projector(geo, Proj::X, l - 1); // (l tractor, l-1 tangent)
    let rhs = contract_proj_tail(&x, l - 1, &bracket, k - l + 1)
        .scale(lf * (n - kf + 1.0) / (n - kf));
    let rhs_proj = forms::project_cftf(&rhs, &m);

    let scale = lhs_proj.sup_norm().max(rhs_proj.sup_norm()).max(sbar.sup_norm());
    (lhs_proj.sub(&rhs_proj).sup_norm(), scale)
}

/// Coupled residual for the M-under splitting against its Weyl term.
pub fn charac_under_residual<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    l: usize,
) -> (f64, f64) {
    let k = sigma.rank();
    let kf = k as f64;
    let lf = l as f64;
    let m = metrics(geo);

    let sund = munder(geo, sigma, l); // (a-block k+l, B-block l)
    let lhs = geo.covariant_derivative(&sund);
    let lhs_proj = forms::project_cftf(&lhs, &m);

    // -l(k+1) X C_{c a(k+1) a1}^p sigma_{p adot} g_{adot(k,l) bdot}
    let r = contract(geo.weyl(), 3, sigma, 0, &geo.ginv); // (c, x, y, a2..ak)
    // read as (c, a(k+1), a1, a2..ak); tensor with lowered X-projector tail
    let x_low = tractor::lower_all(geo, &projector(geo, Proj::X, l - 1));
    let raw = r.outer(&x_low); // (c, a(k+1), a1, a2..ak, B.., a(k+2)..a(k+l))
    // gather tangent order: (c, a1, a2..ak, a(k+1), a(k+2).., then B-block)
    let mut perm: Vec<usize> = vec![0, 2];
    perm.extend(3..(k + 2)); // a2..ak
    perm.push(1); // a(k+1)
    let b_start = k + 2 + l; // after (c,x,y,a2..ak) come l tractor slots
    perm.extend((b_start)..(b_start + l - 1)); // a(k+2)..a(k+l)
    perm.extend((k + 2)..(k + 2 + l)); // tractor block
    let arranged = raw.transpose(&perm);
    let a_block: Vec<usize> = (1..=(k + l)).collect();
    let rhs = arranged
        .antisymmetrize(&a_block)
        .scale(-lf * (kf + 1.0));
    let rhs_proj = forms::project_cftf(&rhs, &m);

    let scale = lhs_proj.sup_norm().max(rhs_proj.sup_norm()).max(sund.sup_norm());
    (lhs_proj.sub(&rhs_proj).sup_norm(), scale)
}

/// Residual of the modified coupled connection on a splitting: the sharp
/// constants are x = 2/(n-k) for M-bar and y = 2/k for M-under.
pub fn coupled_kill_residual<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    l: usize,
    under: bool,
    coeff: f64,
) -> (f64, f64) {
    let m = metrics(geo);
    let s = if under {
        munder(geo, sigma, l)
    } else {
        mbar(geo, sigma, l)
    };
    let d = coupled_derivative(geo, &s, coeff);
    let proj = forms::project_cftf(&d, &m);
    (proj.sup_norm(), s.sup_norm().max(1.0))
}
