//! Standard and form tractors: injectors, the normal tractor connection,
//! the second-order invariant D operator, tractor curvature, and conformal
//! scale transforms.
//!
//! Dense realizations use the covariant layout [X-coefficient, Z-coefficients,
//! Y-coefficient]: a standard tractor with slots (alpha, mu_a, tau) in the
//! active scale is stored covariantly as [tau, mu_a, alpha].  Projector grids
//! carry covariant tractor slots and contravariant tangent slots, so slot
//! injections are plain sums while tractor contractions run through the
//! inverse tractor metric.

use num_traits::Float;

use crate::geometry::Geometry;
use crate::jet::Jet;
use crate::metric::RescaleData;
use crate::tensor::{contract_plain, Scalar, Slot, Tensor};

/// Covariant dense X injector: picks the top (weight +1) slot.
pub fn x_dense<T: Float>(geo: &Geometry<T>) -> Tensor<Jet<T>> {
    let n = geo.n;
    let zero = geo.g.proto().zero_like();
    let one = Jet::constant(T::one(), zero.nvars(), zero.order());
    Tensor::from_fn(n, &[Slot::Tractor], |i| {
        if i[0] == 0 {
            one.clone()
        } else {
            zero.clone()
        }
    })
}

/// Covariant dense Y injector: picks the bottom (weight -1) slot.
pub fn y_dense<T: Float>(geo: &Geometry<T>) -> Tensor<Jet<T>> {
    let n = geo.n;
    let zero = geo.g.proto().zero_like();
    let one = Jet::constant(T::one(), zero.nvars(), zero.order());
    Tensor::from_fn(n, &[Slot::Tractor], |i| {
        if i[0] == n + 1 {
            one.clone()
        } else {
            zero.clone()
        }
    })
}

/// Z injector with its tangent slot contravariant (identity middle block).
pub fn z_dense_up<T: Float>(geo: &Geometry<T>) -> Tensor<Jet<T>> {
    let n = geo.n;
    let zero = geo.g.proto().zero_like();
    let one = Jet::constant(T::one(), zero.nvars(), zero.order());
    Tensor::from_fn(n, &[Slot::Tractor, Slot::Tangent], |i| {
        if i[0] >= 1 && i[0] <= n && i[0] - 1 == i[1] {
            one.clone()
        } else {
            zero.clone()
        }
    })
}

/// Z injector with its tangent slot covariant (metric middle block).
pub fn z_dense_low<T: Float>(geo: &Geometry<T>) -> Tensor<Jet<T>> {
    let n = geo.n;
    let zero = geo.g.proto().zero_like();
    Tensor::from_fn(n, &[Slot::Tractor, Slot::Tangent], |i| {
        if i[0] >= 1 && i[0] <= n {
            geo.g.get(&[i[0] - 1, i[1]]).clone()
        } else {
            zero.clone()
        }
    })
}

/// Assemble a standard tractor dense vector from slot representatives
/// (alpha, mu_a, tau) in the active scale.
pub fn standard_tractor<T: Float>(
    alpha: &Jet<T>,
    mu: &Tensor<Jet<T>>,
    tau: &Jet<T>,
) -> Tensor<Jet<T>> {
    let n = mu.n();
    Tensor::from_fn(n, &[Slot::Tractor], |i| {
        if i[0] == 0 {
            tau.clone()
        } else if i[0] <= n {
            mu.get(&[i[0] - 1]).clone()
        } else {
            alpha.clone()
        }
    })
}

/// One of the four form-tractor projector grids.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Proj {
    /// Y Z..Z on (k+1) tractor slots, k tangent slots.
    Y,
    /// Z..Z on k tractor slots, k tangent slots.
    Z,
    /// X Y Z..Z on (k+1) tractor slots, k-1 tangent slots.
    W,
    /// X Z..Z on (k+1) tractor slots, k tangent slots.
    X,
}

/// Build a projector grid for tensor valence `k`, antisymmetrized over the
/// tractor block.  Slot order: all tractor slots, then all tangent slots.
pub fn projector<T: Float>(geo: &Geometry<T>, which: Proj, k: usize) -> Tensor<Jet<T>> {
    let z = z_dense_up(geo);
    let mut heads: Vec<Tensor<Jet<T>>> = Vec::new();
    match which {
        Proj::Y => heads.push(y_dense(geo)),
        Proj::X => heads.push(x_dense(geo)),
        Proj::W => {
            heads.push(x_dense(geo));
            heads.push(y_dense(geo));
        }
        Proj::Z => {}
    }
    let z_count = match which {
        Proj::Y | Proj::X => k,
        Proj::Z => k,
        Proj::W => k.checked_sub(1).expect("W projector needs k >= 1"),
    };
    let mut acc: Option<Tensor<Jet<T>>> = None;
    for h in heads {
        acc = Some(match acc {
            None => h,
            Some(a) => a.outer(&h),
        });
    }
    for _ in 0..z_count {
        acc = Some(match acc {
            None => z.clone(),
            Some(a) => a.outer(&z),
        });
    }
    let raw = acc.expect("projector with no factors");
    // gather: tractor slots first, then tangent slots
    let mut perm: Vec<usize> = Vec::new();
    for (i, s) in raw.slots().iter().enumerate() {
        if *s == Slot::Tractor {
            perm.push(i);
        }
    }
    let n_tractor = perm.len();
    for (i, s) in raw.slots().iter().enumerate() {
        if *s == Slot::Tangent {
            perm.push(i);
        }
    }
    let gathered = raw.transpose(&perm);
    let tractor_block: Vec<usize> = (0..n_tractor).collect();
    gathered.antisymmetrize(&tractor_block)
}

/// Plain contraction of all tangent slots of a projector grid against all
/// slots of a covariant form: the slot injection into a dense tractor form.
pub fn inject<T: Float>(proj: &Tensor<Jet<T>>, form: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let k = form.rank();
    let m = proj.rank() - k;
    let n = proj.n();
    let tractor_slots = vec![Slot::Tractor; m];
    if k == 0 {
        return proj.scale_by(form.get(&[]));
    }
    Tensor::from_fn(n, &tractor_slots, |tidx| {
        let mut acc = proj.proto().zero_like();
        let mut pidx = vec![0usize; proj.rank()];
        pidx[..m].copy_from_slice(tidx);
        for aidx in crate::tensor::IndexIter::new(vec![n; k]) {
            pidx[m..].copy_from_slice(&aidx);
            let pv = proj.get(&pidx);
            // projector grids are built from constant 0/1 injectors, so a
            // zero value really is an identically zero jet
            if pv.value() == T::zero() {
                continue;
            }
            acc = acc.add(&pv.mul(form.get(&aidx)));
        }
        acc
    })
}

/// Contract the projector's tractor block against a dense tractor form
/// through the inverse tractor metric; returns a tensor over the projector's
/// contravariant tangent slots (lower afterwards if needed).
pub fn extract<T: Float>(
    geo: &Geometry<T>,
    proj: &Tensor<Jet<T>>,
    dense: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let m = dense.rank();
    let k = proj.rank() - m;
    let n = proj.n();
    let hinv = geo.hinv();
    let mut raised = dense.clone();
    for s in 0..m {
        let prev = raised;
        raised = Tensor::from_fn(n, prev.slots(), |idx| {
            let mut probe = idx.to_vec();
            let mut acc = prev.proto().zero_like();
            for b in 0..(n + 2) {
                probe[s] = b;
                let w = hinv.get(&[idx[s], b]);
                if w.value() == T::zero() {
                    continue;
                }
                acc = acc.add(&w.mul(prev.get(&probe)));
            }
            acc
        });
    }
    let tangent_slots = vec![Slot::Tangent; k];
    if k == 0 {
        let mut acc = proj.proto().zero_like();
        let mut pidx = vec![0usize; m];
        for aidx in crate::tensor::IndexIter::new(vec![n + 2; m]) {
            pidx.copy_from_slice(&aidx);
            let pv = proj.get(&pidx);
            if pv.value() == T::zero() {
                continue;
            }
            acc = acc.add(&pv.mul(raised.get(&aidx)));
        }
        return Tensor::scalar(n, acc);
    }
    Tensor::from_fn(n, &tangent_slots, |aidx| {
        let mut acc = proj.proto().zero_like();
        let mut pidx = vec![0usize; proj.rank()];
        pidx[m..].copy_from_slice(aidx);
        for tidx in crate::tensor::IndexIter::new(vec![n + 2; m]) {
            pidx[..m].copy_from_slice(&tidx);
            let pv = proj.get(&pidx);
            if pv.value() == T::zero() {
                continue;
            }
            acc = acc.add(&pv.mul(raised.get(&tidx)));
        }
        acc
    })
}

/// Section of the (k+1)-form-tractor bundle in slot form, in the active
/// scale.  Weights: sigma in E^k[k+1], mu in E^{k+1}[k+1], phi in
/// E^{k-1}[k-1], rho in E^k[k-1]; phi is absent for k = 0.
#[derive(Clone)]
pub struct FormTractor<T: Float> {
    pub k: usize,
    pub sigma: Tensor<Jet<T>>,
    pub mu: Tensor<Jet<T>>,
    pub phi: Option<Tensor<Jet<T>>>,
    pub rho: Tensor<Jet<T>>,
}

impl<T: Float> FormTractor<T> {
    /// Dense realization: sigma into Y, mu into Z, phi into W, rho into X.
    pub fn dense(&self, geo: &Geometry<T>) -> Tensor<Jet<T>> {
        let k = self.k;
        let mut acc = inject(&projector(geo, Proj::Y, k), &self.sigma);
        acc = acc.add(&inject(&projector(geo, Proj::Z, k + 1), &self.mu));
        if let Some(phi) = &self.phi {
            acc = acc.add(&inject(&projector(geo, Proj::W, k), phi));
        }
        acc.add(&inject(&projector(geo, Proj::X, k), &self.rho))
    }

    /// Recover slots from a dense (k+1)-tractor form.
    pub fn from_dense(geo: &Geometry<T>, dense: &Tensor<Jet<T>>, k: usize) -> FormTractor<T> {
        let kf = (k + 1) as f64;
        let sigma = lower_all(
            geo,
            &extract(geo, &projector(geo, Proj::X, k), dense).scale(kf),
        );
        let mu = lower_all(geo, &extract(geo, &projector(geo, Proj::Z, k + 1), dense));
        let phi = if k >= 1 {
            Some(lower_all(
                geo,
                &extract(geo, &projector(geo, Proj::W, k), dense).scale(-(k as f64) * kf),
            ))
        } else {
            None
        };
        let rho = lower_all(
            geo,
            &extract(geo, &projector(geo, Proj::Y, k), dense).scale(kf),
        );
        FormTractor {
            k,
            sigma,
            mu,
            phi,
            rho,
        }
    }

    /// Slot-wise normal tractor connection; each returned grid has a leading
    /// derivative slot.
    pub fn normal_derivative(&self, geo: &Geometry<T>) -> FormTractorDeriv<T> {
        let k = self.k;
        let kf = k as f64;
        let n = geo.n;
        let p_tensor = geo.schouten();

        let dsigma = geo.covariant_derivative(&self.sigma);
        let dmu = geo.covariant_derivative(&self.mu);
        let drho = geo.covariant_derivative(&self.rho);

        // top slot: nabla_p sigma - (k+1) mu_{p a..} - g_{p a1} phi_{a2..}
        let mut top = dsigma.sub(&self.mu.scale(kf + 1.0));
        if let Some(phi) = &self.phi {
            let inj = geo.g.outer(phi); // (p, a1, a2..ak)
            let a_block: Vec<usize> = (1..=k).collect();
            top = top.sub(&inj.antisymmetrize(&a_block));
        }

        // mu slot: nabla_p mu_{a0 a..} + P_{p a0} sigma + g_{p a0} rho,
        // skewed over (a0, a..)
        let a0_block: Vec<usize> = (1..=k + 1).collect();
        let mu_slot = dmu
            .add(&p_tensor.outer(&self.sigma).antisymmetrize(&a0_block))
            .add(&geo.g.outer(&self.rho).antisymmetrize(&a0_block));

        // phi slot: nabla_p phi + k P_p^q sigma_{q a2..} - k rho_{p a2..}
        let phi_slot = self.phi.as_ref().map(|phi| {
            let dphi = geo.covariant_derivative(phi);
            let p_raised = geo.raise_slot(p_tensor, 1); // P_p{}^q in slot 1
            let contracted = contract_plain(&p_raised, 1, &self.sigma, 0); // (p, a2..)
            dphi.add(&contracted.scale(kf)).sub(&self.rho.scale(kf))
        });

        // rho slot: nabla_p rho - (k+1) P_p^q mu_{q a..} + P_{p a1} phi_{a2..}
        let p_raised = geo.raise_slot(p_tensor, 1);
        let mut rho_slot = drho.sub(&contract_plain(&p_raised, 1, &self.mu, 0).scale(kf + 1.0));
        if let Some(phi) = &self.phi {
            let inj = p_tensor.outer(phi); // (p, a1, a2..)
            let a_block: Vec<usize> = (1..=k).collect();
            rho_slot = rho_slot.add(&inj.antisymmetrize(&a_block));
        }
        let _ = n;

        FormTractorDeriv {
            k,
            sigma: top,
            mu: mu_slot,
            phi: phi_slot,
            rho: rho_slot,
        }
    }

    pub fn add(&self, o: &FormTractor<T>) -> FormTractor<T> {
        FormTractor {
            k: self.k,
            sigma: self.sigma.add(&o.sigma),
            mu: self.mu.add(&o.mu),
            phi: match (&self.phi, &o.phi) {
                (Some(a), Some(b)) => Some(a.add(b)),
                (Some(a), None) => Some(a.clone()),
                (None, Some(b)) => Some(b.clone()),
                (None, None) => None,
            },
            rho: self.rho.add(&o.rho),
        }
    }

    pub fn sub(&self, o: &FormTractor<T>) -> FormTractor<T> {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> FormTractor<T> {
        FormTractor {
            k: self.k,
            sigma: self.sigma.scale(c),
            mu: self.mu.scale(c),
            phi: self.phi.as_ref().map(|p| p.scale(c)),
            rho: self.rho.scale(c),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = self.sigma.sup_norm().max(self.mu.sup_norm()).max(self.rho.sup_norm());
        if let Some(phi) = &self.phi {
            m = m.max(phi.sup_norm());
        }
        m
    }
}

/// Slot-wise derivative of a form tractor (leading slot is the direction).
pub struct FormTractorDeriv<T: Float> {
    pub k: usize,
    pub sigma: Tensor<Jet<T>>,
    pub mu: Tensor<Jet<T>>,
    pub phi: Option<Tensor<Jet<T>>>,
    pub rho: Tensor<Jet<T>>,
}

impl<T: Float> FormTractorDeriv<T> {
    pub fn sub(&self, o: &FormTractorDeriv<T>) -> FormTractorDeriv<T> {
        FormTractorDeriv {
            k: self.k,
            sigma: self.sigma.sub(&o.sigma),
            mu: self.mu.sub(&o.mu),
            phi: match (&self.phi, &o.phi) {
                (Some(a), Some(b)) => Some(a.sub(b)),
                (Some(a), None) => Some(a.clone()),
                (None, Some(b)) => Some(b.neg()),
                (None, None) => None,
            },
            rho: self.rho.sub(&o.rho),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = self.sigma.sup_norm().max(self.mu.sup_norm()).max(self.rho.sup_norm());
        if let Some(phi) = &self.phi {
            m = m.max(phi.sup_norm());
        }
        m
    }

    /// Dense realization with the leading derivative slot kept in front.
    pub fn dense(&self, geo: &Geometry<T>) -> Tensor<Jet<T>> {
        let n = geo.n;
        let k = self.k;
        let mut out: Option<Tensor<Jet<T>>> = None;
        for p in 0..n {
            let ft = FormTractor {
                k,
                sigma: fix_first(&self.sigma, p),
                mu: fix_first(&self.mu, p),
                phi: self.phi.as_ref().map(|f| fix_first(f, p)),
                rho: fix_first(&self.rho, p),
            };
            let dense_p = ft.dense(geo);
            let acc = out.get_or_insert_with(|| {
                Tensor::zeros(
                    n,
                    &{
                        let mut s = vec![Slot::Tangent];
                        s.extend_from_slice(dense_p.slots());
                        s
                    },
                    dense_p.proto(),
                )
            });
            for idx in dense_p.iter_indices() {
                let mut full = Vec::with_capacity(idx.len() + 1);
                full.push(p);
                full.extend_from_slice(&idx);
                acc.set(&full, dense_p.get(&idx).clone());
            }
        }
        out.unwrap()
    }
}

/// Slice off the first slot of a tensor at a fixed index.
pub fn fix_first<T: Float>(t: &Tensor<Jet<T>>, p: usize) -> Tensor<Jet<T>> {
    let slots = t.slots()[1..].to_vec();
    Tensor::from_fn(t.n(), &slots, |idx| {
        let mut full = Vec::with_capacity(idx.len() + 1);
        full.push(p);
        full.extend_from_slice(idx);
        t.get(&full).clone()
    })
}

/// Tractor-D operator on a weighted tensor/tractor field:
/// D_A V = (n+2w-2) w Y_A V + (n+2w-2) Z_A^a nabla_a V - X_A (Delta V + w J V).
/// The result has a leading tractor slot.
pub fn tractor_d<T: Float>(
    geo: &Geometry<T>,
    v: &Tensor<Jet<T>>,
    w: f64,
) -> Tensor<Jet<T>> {
    let n = geo.n as f64;
    let c = n + 2.0 * w - 2.0;
    let dv = geo.covariant_derivative(v);
    let ddv = geo.covariant_derivative(&dv);
    let lap = crate::tensor::trace(&ddv, 0, 1, &geo.ginv);
    let jv = v.scale_by(geo.schouten_trace());
    let box_v = lap.add(&jv.scale(w));

    let y = y_dense(geo);
    let x = x_dense(geo);
    let zu = z_dense_up(geo);

    let term1 = y.outer(v).scale(c * w);
    let term2 = contract_plain(&zu, 1, &dv, 0).scale(c);
    let term3 = x.outer(&box_v);
    term1.add(&term2).sub(&term3)
}

/// Tractor curvature as a dense grid (a, b, C, E), all covariant:
/// Z_C^c Z_E^e C_{abce} - 2 X_[C Z_E]^e A_{eab}.
pub fn tractor_curvature<T: Float>(geo: &Geometry<T>) -> Tensor<Jet<T>> {
    let weyl = geo.weyl();
    let cotton = geo.cotton();
    let zu = z_dense_up(geo);
    let x = x_dense(geo);

    // term1: contract weyl slots 2,3 against the z tangent slots
    let t1a = contract_plain(&zu, 1, weyl, 2); // (C, a, b, e)
    let t1 = contract_plain(&zu, 1, &t1a, 3); // (E, C, a, b)
    let term1 = t1.transpose(&[2, 3, 1, 0]); // (a, b, C, E)

    // term2: X_C Z_E^e A_{eab}, antisymmetrized over (C, E), times -2
    let za = contract_plain(&zu, 1, cotton, 0); // (E, a, b)
    let xza = x.outer(&za); // (C, E, a, b)
    let term2 = xza
        .transpose(&[2, 3, 0, 1]) // (a, b, C, E)
        .antisymmetrize(&[2, 3])
        .scale(-2.0);
    term1.add(&term2)
}

/// Conformal transform matrix for covariant dense tractors, mapping
/// representatives in the old scale to representatives in e^{2 upsilon} g.
pub fn scale_matrix<T: Float>(
    geo: &Geometry<T>,
    resc: &RescaleData,
    order: usize,
) -> Tensor<Jet<T>> {
    let n = geo.n;
    let p: Vec<T> = geo.point.clone();
    let ups = resc.upsilon_jet(&p, order + 1).expect("upsilon jet");
    let e_plus = ups.exp();
    let e_minus = ups.neg().exp();
    let du: Vec<Jet<T>> = (0..n).map(|i| ups.partial(i)).collect();
    let du_up: Vec<Jet<T>> = (0..n)
        .map(|a| {
            let mut acc = du[0].zero_like();
            for b in 0..n {
                acc = acc.add(&geo.ginv.get(&[a, b]).truncated(order).mul(&du[b]));
            }
            acc
        })
        .collect();
    let mut usq = du[0].zero_like();
    for a in 0..n {
        usq = usq.add(&du[a].mul(&du_up[a]));
    }
    let zero = du[0].zero_like();
    Tensor::from_fn(n, &[Slot::Tractor, Slot::Tractor], |idx| {
        let (r, c) = (idx[0], idx[1]);
        if r == 0 {
            if c == 0 {
                e_minus.clone()
            } else if c <= n {
                e_minus.mul(&du_up[c - 1]).neg()
            } else {
                e_minus.mul(&usq).scale(T::from(-0.5).unwrap())
            }
        } else if r <= n {
            if c == r {
                e_plus.clone()
            } else if c == n + 1 {
                e_plus.mul(&du[r - 1])
            } else {
                zero.clone()
            }
        } else {
            if c == n + 1 {
                e_plus.clone()
            } else {
                zero.clone()
            }
        }
    })
}

/// Transform a weighted tensor with tractor slots to the rescaled scale:
/// every covariant tractor slot gets the scale matrix, and the whole tensor
/// the factor e^{w upsilon}.
pub fn transform_scale<T: Float>(
    geo: &Geometry<T>,
    resc: &RescaleData,
    t: &Tensor<Jet<T>>,
    weight: f64,
) -> Tensor<Jet<T>> {
    let order = t.proto().order();
    let tmat = scale_matrix(geo, resc, order);
    let mut out = t.clone();
    for s in 0..t.rank() {
        if t.slots()[s] != Slot::Tractor {
            continue;
        }
        let prev = out;
        out = Tensor::from_fn(prev.n(), prev.slots(), |idx| {
            let mut probe = idx.to_vec();
            let mut acc = prev.proto().zero_like();
            for d in 0..(prev.n() + 2) {
                probe[s] = d;
                acc = acc.add(&tmat.get(&[idx[s], d]).mul(prev.get(&probe)));
            }
            acc
        });
    }
    if weight != 0.0 {
        let p: Vec<T> = geo.point.clone();
        let wf = resc
            .weight_factor(weight, &p, order)
            .expect("weight factor");
        out = out.scale_by(&wf);
    }
    out
}

/// Lower all tangent slots of a tensor with the metric.
pub fn lower_all<T: Float>(geo: &Geometry<T>, t: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let n = geo.n;
    let mut out = t.clone();
    for s in 0..t.rank() {
        if t.slots()[s] != Slot::Tangent {
            continue;
        }
        let prev = out.clone();
        out = Tensor::from_fn(n, prev.slots(), |idx| {
            let mut probe = idx.to_vec();
            let mut acc = prev.proto().zero_like();
            for b in 0..n {
                probe[s] = b;
                acc = acc.add(&geo.g.get(&[idx[s], b]).mul(prev.get(&probe)));
            }
            acc
        });
    }
    out
}
