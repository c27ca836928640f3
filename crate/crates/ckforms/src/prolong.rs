//! Prolongation of the conformal Killing equation on forms.
//!
//! Implements the residual operator, the closed first-order system and its
//! map from solutions, the invariant splitting into form-tractors, the
//! operators Phi / Psi / Psi-tilde (the last by two independent routes), and
//! the invariant connection whose parallel sections correspond to solutions.
//! Flat parallel tractors generate the solution families used as fixtures.

use num_traits::Float;

use crate::forms::{self, Metrics};
use crate::geometry::Geometry;
use crate::jet::Jet;
use crate::metric::RescaleData;
use crate::tensor::{contract, contract_plain, trace, Slot, Tensor};
use crate::tractor::{self, FormTractor, FormTractorDeriv};
use crate::tensor::Scalar as _;

fn metrics<T: Float>(geo: &Geometry<T>) -> Metrics<'_, Jet<T>> {
    Metrics {
        g: &geo.g,
        ginv: &geo.ginv,
        hinv: geo.hinv.as_ref(),
    }
}

/// Conformal Killing residual: the trace-free, non-skew part of nabla sigma.
/// Zero exactly when sigma solves the conformal Killing equation at the point.
pub fn cke_residual<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let ds = geo.covariant_derivative(sigma);
    forms::project_cftf(&ds, &metrics(geo))
}

/// Prolongation variables of a k-form sigma of weight k+1:
/// mu is the skew part of nabla sigma, nu the weighted divergence, rho the
/// third closed-system variable.
pub struct Prolonged<T: Float> {
    pub k: usize,
    pub sigma: Tensor<Jet<T>>,
    pub mu: Tensor<Jet<T>>,
    pub nu: Tensor<Jet<T>>,
    pub rho: Tensor<Jet<T>>,
}

pub fn prolong<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> Prolonged<T> {
    let n = geo.n as f64;
    let k = sigma.rank();
    let kf = k as f64;
    let m = metrics(geo);

    let ds = geo.covariant_derivative(sigma); // (c, a1..ak)
    let mu = forms::antisym_all(&ds);
    let nu0 = trace(&ds, 0, 1, &geo.ginv); // nabla^p sigma_{p a2..}
    let nu = nu0.scale(kf / (n - kf + 1.0));

    // rho = 1/(nk) nabla^p K_{p a..} - 1/(n-k+1) skew(nabla_{a1} nu0)
    //       - skew(P_{a1}^p sigma_{p a2..})
    let kproj = forms::project_cftf(&ds, &m);
    let dk = geo.covariant_derivative(&kproj);
    let term1 = trace(&dk, 0, 1, &geo.ginv).scale(1.0 / (n * kf));

    let dnu0 = geo.covariant_derivative(&nu0); // (a1, a2..)
    let all: Vec<usize> = (0..k).collect();
    let term2 = dnu0.antisymmetrize(&all).scale(1.0 / (n - kf + 1.0));

    let p_raised = geo.raise_slot(geo.schouten(), 1);
    let term3 = contract_plain(&p_raised, 1, sigma, 0).antisymmetrize(&all);

    let rho = term1.sub(&term2).sub(&term3);
    Prolonged {
        k,
        sigma: sigma.clone(),
        mu,
        nu,
        rho,
    }
}

/// The invariant differential splitting into (k+1)-form-tractors:
/// slots (sigma, mu/(k+1), nu, -rho).
pub fn splitting_d<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> FormTractor<T> {
    let p = prolong(geo, sigma);
    let k = p.k;
    FormTractor {
        k,
        sigma: p.sigma,
        mu: p.mu.scale(1.0 / (k as f64 + 1.0)),
        phi: Some(p.nu),
        rho: p.rho.neg(),
    }
}

/// Prolongation variables read back from a form-tractor section.
pub fn prolongation_vars<T: Float>(
    f: &FormTractor<T>,
) -> (Tensor<Jet<T>>, Tensor<Jet<T>>, Option<Tensor<Jet<T>>>, Tensor<Jet<T>>) {
    let kf = f.k as f64 + 1.0;
    (
        f.sigma.clone(),
        f.mu.scale(kf),
        f.phi.clone(),
        f.rho.neg(),
    )
}

/// Move the leading derivative index of a contraction result to the front and
/// reorder the named slots; small helper for the slot formulas below.
fn rearrange<T: Float>(t: &Tensor<Jet<T>>, perm: &[usize]) -> Tensor<Jet<T>> {
    t.transpose(perm)
}

/// Shared contraction C_{xy}^{pq} f_{pq z..}.
fn weyl_cf<T: Float>(
    geo: &Geometry<T>,
    f: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let step = contract(geo.weyl(), 2, f, 0, &geo.ginv);
    trace(&step, 2, 3, &geo.ginv)
}

/// The first-order operator Phi on form-tractors (k >= 2): the failure of the
/// normal connection to preserve the splitting of a solution.
pub fn phi_op<T: Float>(geo: &Geometry<T>, f: &FormTractor<T>) -> FormTractorDeriv<T> {
    let k = f.k;
    assert!(k >= 2, "phi is defined for k >= 2");
    let n = geo.n as f64;
    let kf = k as f64;
    let m = metrics(geo);
    let (sigma, _mu, nu, _rho) = prolongation_vars(f);
    let nu = nu.expect("k >= 2 has a nu slot");

    let z_term = z_slot_weyl_sigma(geo, &sigma);
    let bl = forms::blacklozenge(geo.weyl(), &sigma, &m);
    let w_term = bl.scale(kf * (kf - 1.0) / (2.0 * (n - kf)));

    // X slot: A^p_{c a1} sigma_{p a2..} - 1/2 A^p_{a1 a2} sigma_{p c a3..}
    //         - 1/2 C_{a1 a2 c}^p nu_{p a3..}
    //         + k/(2(n-k)) nabla_{a1} (C bl sigma)_{c a2..}
    let a_up0 = geo.raise_slot(geo.cotton(), 0);
    let t1 = contract_plain(&a_up0, 0, &sigma, 0); // (c, a1, a2..ak)
    let t2 = {
        let r = contract_plain(&a_up0, 0, &sigma, 0); // (a1, a2, c, a4..)
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).scale(-0.5)
    };
    let t3 = {
        let r = contract(geo.weyl(), 3, &nu, 0, &geo.ginv); // (a1, a2, c, a4..)
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).scale(-0.5)
    };
    let t4 = {
        let dbl = geo.covariant_derivative(&bl); // (a1, c, a2..)
        let mut perm = vec![1usize, 0];
        perm.extend(2..(k + 1));
        rearrange(&dbl, &perm).scale(kf / (2.0 * (n - kf)))
    };
    let a_block: Vec<usize> = (1..=k).collect();
    let x_term = t1.add(&t2).add(&t3).add(&t4).antisymmetrize(&a_block);

    FormTractorDeriv {
        k,
        sigma: Tensor::zeros(geo.n, &vec![Slot::Tangent; k + 1], sigma.proto()),
        mu: z_term,
        phi: Some(w_term),
        rho: x_term,
    }
}

/// Z-slot term shared by Phi and Psi-tilde: -1/2 C_{a0 a1 c}^p sigma_{p a2..},
/// arranged (c, a0, a1, a2..) and skewed over the a-block.
fn z_slot_weyl_sigma<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let r = contract(geo.weyl(), 3, sigma, 0, &geo.ginv); // (a0, a1, c, a2..)
    let mut perm = vec![2usize, 0, 1];
    perm.extend(3..(k + 2));
    let arranged = rearrange(&r, &perm);
    let a_block: Vec<usize> = (1..=k + 1).collect();
    arranged.antisymmetrize(&a_block).scale(-0.5)
}

/// Psi: Phi corrected by the divergence of the lozenge action; conformally
/// invariant on arbitrary sections (k >= 2).
pub fn psi_op<T: Float>(geo: &Geometry<T>, f: &FormTractor<T>) -> FormTractorDeriv<T> {
    let k = f.k;
    let n = geo.n as f64;
    let mut out = phi_op(geo, f);
    let (sigma, ..) = prolongation_vars(f);
    let loz = forms::lozenge(geo.weyl(), &sigma, &metrics(geo)); // (c1, c2, a..)
    let dloz = geo.covariant_derivative(&loz); // (q, c1, c2, a..)
    let div = trace(&dloz, 0, 1, &geo.ginv); // (c, a..)
    out.rho = out.rho.add(&div.scale(1.0 / (n - 2.0)));
    let _ = k;
    out
}

/// The conformally invariant algebraic operator Psi-tilde, printed form.
/// For k = 1 the curvature terms reduce to the tractor-curvature action.
/// `z_coeff_scale` perturbs the Z-slot coefficient (mutation self-tests).
pub fn psi_tilde<T: Float>(
    geo: &Geometry<T>,
    f: &FormTractor<T>,
    z_coeff_scale: f64,
) -> FormTractorDeriv<T> {
    let k = f.k;
    assert!(k >= 1);
    let n = geo.n as f64;
    let kf = k as f64;
    let m = metrics(geo);
    let (sigma, mu, nu, _rho) = prolongation_vars(f);

    let z_term = z_slot_weyl_sigma(geo, &sigma).scale(z_coeff_scale);

    let (w_term, t_term) = if k >= 2 {
        let nu = nu.as_ref().expect("k >= 2 has a nu slot");
        let bl = forms::blacklozenge(geo.weyl(), &sigma, &m);
        let w = bl.scale(kf * (kf - 1.0) / (2.0 * (n - kf)));
        let t = t_of_sigma(geo, &sigma, &mu, nu).scale((kf - 1.0) / (2.0 * (n - kf)));
        (Some(w), Some(t))
    } else {
        (None, None)
    };

    // X slot: A_{a1 c}^p sigma_{p a2..} + (k-1)/(2(n-k)) T(sigma)
    let a_up2 = geo.raise_slot(geo.cotton(), 2);
    let a_term = {
        let r = contract_plain(&a_up2, 2, &sigma, 0); // (a1, c, a2..)
        let mut perm = vec![1usize, 0];
        perm.extend(2..(k + 1));
        rearrange(&r, &perm)
    };
    let a_block: Vec<usize> = (1..=k).collect();
    let mut x_term = a_term;
    if let Some(t) = t_term {
        x_term = x_term.add(&t);
    }
    let x_term = x_term.antisymmetrize(&a_block);

    let w_slot = match (&f.phi, w_term) {
        (Some(_), Some(w)) => Some(w),
        (Some(phi), None) => Some(Tensor::zeros(
            geo.n,
            &vec![Slot::Tangent; phi.rank() + 1],
            sigma.proto(),
        )),
        _ => None,
    };

    FormTractorDeriv {
        k,
        sigma: Tensor::zeros(geo.n, &vec![Slot::Tangent; k + 1], sigma.proto()),
        mu: z_term,
        phi: w_slot,
        rho: x_term,
    }
}

/// T(sigma): the algebraic curvature polynomial in the X slot of Psi-tilde.
fn t_of_sigma<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    mu: &Tensor<Jet<T>>,
    nu: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let kf = k as f64;
    let n = geo.n as f64;
    let cotton = geo.cotton();

    // 1/2 (nabla_c C_{a1 a2}^{pq}) sigma_{pq a3..}
    let dc = geo.covariant_derivative(geo.weyl()); // (c, a1, a2, p, q)
    let t1 = {
        let r = contract(&dc, 3, sigma, 0, &geo.ginv); // (c, a1, a2, q, a3..)
        trace(&r, 3, 4, &geo.ginv).scale(0.5) // (c, a1, a2, a3..)
    };
    // + 2 A^p_{c a1} sigma_{p a2..}
    let a_up0 = geo.raise_slot(cotton, 0);
    let t2 = contract_plain(&a_up0, 0, sigma, 0).scale(2.0); // (c, a1, a2..)
    // - A^p_{a1 a2} sigma_{p c a3..}
    let t3 = {
        let r = contract_plain(&a_up0, 0, sigma, 0); // (a1, a2, c, a4..)
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).neg()
    };
    // - g_{c a1} A_{a2}^{pq} sigma_{pq a3..}
    let t4 = {
        let r = contract(cotton, 1, sigma, 0, &geo.ginv); // (a2, q, a3..)
        let r = trace(&r, 1, 2, &geo.ginv); // (a2, a3..)
        geo.g.outer(&r).neg() // (c, a1, a2, a3..)
    };
    // - ( C_{c a1}^{pq} mu_{pq a2..} + C_{a2 a1}^{pq} mu_{pq c a4..} )
    let tmu = weyl_cf(geo, mu); // (x, y, z1..z_{k-1})
    let t5a = tmu.neg(); // (c, a1, a2..)
    let t5b = {
        let mut perm = vec![2usize, 1, 0];
        perm.extend(3..(k + 1));
        rearrange(&tmu, &perm).neg()
    };
    // - (n-k-1)/k C_{a1 a2 c}^p nu_{p a3..}
    let t6 = {
        let r = contract(geo.weyl(), 3, nu, 0, &geo.ginv); // (a1, a2, c, a4..)
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).scale(-(n - kf - 1.0) / kf)
    };
    t1.add(&t2).add(&t3).add(&t4).add(&t5a).add(&t5b).add(&t6)
}

/// Printed right-hand side of the Leibniz expansion of
/// nabla_{a1} (C bl sigma)_{c a2..} after replacing nabla sigma by mu + g nu;
/// shape (c, a1, a2..), skewed over the a-block by the caller's comparison.
pub fn grad_blacklozenge_rhs<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    mu: &Tensor<Jet<T>>,
    nu: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let kf = k as f64;
    if k == 2 {
        return Tensor::zeros(geo.n, &vec![Slot::Tangent; k + 1], sigma.proto());
    }
    let cotton = geo.cotton();
    let a_up0 = geo.raise_slot(cotton, 0);

    let dc = geo.covariant_derivative(geo.weyl());
    let t1 = {
        let r = contract(&dc, 3, sigma, 0, &geo.ginv);
        trace(&r, 3, 4, &geo.ginv).scale(0.5)
    };
    let t2 = {
        let r = contract_plain(&a_up0, 0, sigma, 0); // (a1, a2, c, ..)
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).neg()
    };
    let t3 = contract_plain(&a_up0, 0, sigma, 0).scale(2.0); // (c, a1, a2..)
    let tmu = weyl_cf(geo, mu);
    let t4a = tmu.neg();
    let t4b = {
        let mut perm = vec![2usize, 1, 0];
        perm.extend(3..(k + 1));
        rearrange(&tmu, &perm).neg()
    };
    let t5 = {
        let r = contract(geo.weyl(), 3, nu, 0, &geo.ginv);
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).scale(1.0 / kf)
    };
    let t6 = {
        let tnu = weyl_cf(geo, nu); // (a2, a3, a5..)
        geo.g.outer(&tnu).scale(-1.0 / kf) // (c, a1, a2, a3, ..)
    };
    t1.add(&t2)
        .add(&t3)
        .add(&t4a)
        .add(&t4b)
        .add(&t5)
        .add(&t6)
        .scale((kf - 2.0) / kf)
}

/// Printed closed form for nabla^q (C loz sigma)_{q c a..} after the same
/// replacement; shape (c, a1, a2..).
pub fn grad_lozenge_div_rhs<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    mu: &Tensor<Jet<T>>,
    nu: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let kf = k as f64;
    let n = geo.n as f64;
    let cotton = geo.cotton();
    let pref = (n - 2.0) / (2.0 * (n - kf));

    let dc = geo.covariant_derivative(geo.weyl());
    let t1 = {
        let r = contract(&dc, 3, sigma, 0, &geo.ginv);
        trace(&r, 3, 4, &geo.ginv).scale(0.5)
    };
    let tmu = weyl_cf(geo, mu);
    let t2a = tmu.neg();
    let t2b = {
        let mut perm = vec![2usize, 1, 0];
        perm.extend(3..(k + 1));
        rearrange(&tmu, &perm).neg()
    };
    let a_up0 = geo.raise_slot(cotton, 0);
    let t3 = {
        let r = contract_plain(&a_up0, 0, sigma, 0); // (a1, a2, c, ..)
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).scale(n - kf - 1.0)
    };
    // 2 A^p_{a1 c} sigma_{p a2..}: note the (a1, c) index order
    let t4 = {
        let r = contract_plain(&a_up0, 0, sigma, 0); // hash layout (x, y, rest)
        // A^p_{a1 c}: first free slot a1, second c; rearrange (a1, c, a2..)
        let mut perm = vec![1usize, 0];
        perm.extend(2..(k + 1));
        rearrange(&r, &perm).scale(2.0 * (n - kf - 1.0))
    };
    let t5 = {
        let r = contract(geo.weyl(), 3, nu, 0, &geo.ginv);
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).scale((n - kf + 1.0) / kf)
    };
    let t6 = if k >= 3 {
        let tnu = weyl_cf(geo, nu);
        geo.g.outer(&tnu).scale((kf - 2.0) / kf)
    } else {
        Tensor::zeros(geo.n, &vec![Slot::Tangent; k + 1], sigma.proto())
    };
    let t7 = {
        let r = contract(cotton, 1, sigma, 0, &geo.ginv);
        let r = trace(&r, 1, 2, &geo.ginv); // (a2, a3..)
        geo.g.outer(&r).scale(-(kf - 1.0))
    };
    let bracket = t1
        .add(&t2a)
        .add(&t2b)
        .add(&t3)
        .add(&t4)
        .add(&t5)
        .add(&t6)
        .add(&t7)
        .scale(pref);
    // + (n-2) A_{a1 c}^p sigma_{p a2..}
    let a_up2 = geo.raise_slot(cotton, 2);
    let tail = {
        let r = contract_plain(&a_up2, 2, sigma, 0); // (a1, c, a2..)
        let mut perm = vec![1usize, 0];
        perm.extend(2..(k + 1));
        rearrange(&r, &perm).scale(n - 2.0)
    };
    bracket.add(&tail)
}

/// Replacement rule: nabla_e sigma_{a..} |-> mu_{e a..} + g_{e a1} nu_{a2..},
/// as an (e, a1..ak) tensor built from the slot variables.
pub fn replaced_grad_sigma<T: Float>(
    geo: &Geometry<T>,
    mu: &Tensor<Jet<T>>,
    nu: Option<&Tensor<Jet<T>>>,
    k: usize,
) -> Tensor<Jet<T>> {
    let mut out = mu.clone(); // (e, a1..ak), already fully antisymmetric
    if let Some(nu) = nu {
        let inj = geo.g.outer(nu); // (e, a1, a2..)
        let a_block: Vec<usize> = (1..=k).collect();
        out = out.add(&inj.antisymmetrize(&a_block));
    }
    out
}

/// Constructive route to Psi-tilde: expand the two non-algebraic terms of
/// Psi by the Leibniz rule, replacing every occurrence of nabla sigma by
/// mu + g nu.  Independent of the printed collected formula.
pub fn psi_tilde_replacement<T: Float>(
    geo: &Geometry<T>,
    f: &FormTractor<T>,
) -> FormTractorDeriv<T> {
    let k = f.k;
    assert!(k >= 2, "the replacement route needs the k >= 2 branch");
    let n = geo.n as f64;
    let kf = k as f64;
    let m = metrics(geo);
    let (sigma, mu, nu, _rho) = prolongation_vars(f);
    let nu = nu.expect("k >= 2 has a nu slot");
    let repl = replaced_grad_sigma(geo, &mu, Some(&nu), k);

    let z_term = z_slot_weyl_sigma(geo, &sigma);
    let bl = forms::blacklozenge(geo.weyl(), &sigma, &m);
    let w_term = bl.scale(kf * (kf - 1.0) / (2.0 * (n - kf)));

    // X slot: the algebraic Cotton/Weyl terms of Phi plus the two replaced
    // derivative terms.
    let a_up0 = geo.raise_slot(geo.cotton(), 0);
    let t1 = contract_plain(&a_up0, 0, &sigma, 0);
    let t2 = {
        let r = contract_plain(&a_up0, 0, &sigma, 0);
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).scale(-0.5)
    };
    let t3 = {
        let r = contract(geo.weyl(), 3, &nu, 0, &geo.ginv);
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm).scale(-0.5)
    };
    let grad_bl = replaced_grad_blacklozenge(geo, &sigma, &repl); // (e, c, a2..)
    let t4 = {
        let mut perm = vec![1usize, 0];
        perm.extend(2..(k + 1));
        rearrange(&grad_bl, &perm).scale(kf / (2.0 * (n - kf)))
    };
    let div_loz = replaced_div_lozenge(geo, &sigma, &repl, &grad_bl); // (c, a..)
    let t5 = div_loz.scale(1.0 / (n - 2.0));

    let a_block: Vec<usize> = (1..=k).collect();
    let x_term = t1
        .add(&t2)
        .add(&t3)
        .add(&t4)
        .add(&t5)
        .antisymmetrize(&a_block);

    FormTractorDeriv {
        k,
        sigma: Tensor::zeros(geo.n, &vec![Slot::Tangent; k + 1], sigma.proto()),
        mu: z_term,
        phi: Some(w_term),
        rho: x_term,
    }
}

/// Leibniz expansion of nabla_e (C bl sigma)_{c a2..} with nabla sigma
/// replaced; shape (e, c, a2..ak), a-block skewed.
fn replaced_grad_blacklozenge<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    repl: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let n = geo.n;
    if k == 2 {
        return Tensor::zeros(n, &vec![Slot::Tangent; 3], sigma.proto());
    }
    let dc = geo.covariant_derivative(geo.weyl()); // (e, x, y, p, q)

    // d(T)_{e,x,y,z..} with T = C_{xy}^{pq} sigma_{pq z..}
    let dterm = {
        let r = contract(&dc, 3, sigma, 0, &geo.ginv); // (e, x, y, q, z..)
        trace(&r, 3, 4, &geo.ginv) // (e, x, y, z..)
    };
    let cterm = {
        // C_{xy}^{pq} repl_{e p q z..}
        let r = contract(geo.weyl(), 2, repl, 1, &geo.ginv); // (x, y, q, e, z..)
        let r = trace(&r, 2, 4, &geo.ginv); // (x, y, e, z..)
        let mut perm = vec![2usize, 0, 1];
        perm.extend(3..(k + 1));
        rearrange(&r, &perm) // (e, x, y, z..)
    };
    let t = dterm.add(&cterm); // (e, x, y, z1..z_{k-2})

    // term 1 reads (e, c, a2, a3..); term 2 reads (e, a3, a2, c, a4..)
    let term1 = t.clone();
    let mut perm = vec![0usize, 3, 2, 1];
    perm.extend(4..(k + 1));
    let term2 = rearrange(&t, &perm);
    let a_block: Vec<usize> = (2..(k + 1)).collect();
    term1
        .add(&term2)
        .antisymmetrize(&a_block)
        .scale((k as f64 - 2.0) / k as f64)
}

/// Divergence of the lozenge action with nabla sigma replaced:
/// nabla^q (C loz sigma)_{q c a..} built by the Leibniz rule; shape (c, a..).
fn replaced_div_lozenge<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
    repl: &Tensor<Jet<T>>,
    grad_bl: &Tensor<Jet<T>>,
) -> Tensor<Jet<T>> {
    let k = sigma.rank();
    let n = geo.n as f64;
    let kf = k as f64;
    let dc = geo.covariant_derivative(geo.weyl()); // (e, c1, c2, a1, p)

    // term1 = C_{c1 c2 a1}^p sigma_{p a2..}
    let d_t1 = {
        let da = contract(&dc, 4, sigma, 0, &geo.ginv); // (e, c1, c2, a1, a2..)
        let ca = {
            let r = contract(geo.weyl(), 3, repl, 1, &geo.ginv); // (c1,c2,a1,e,a2..)
            let mut perm = vec![3usize, 0, 1, 2];
            perm.extend(4..(k + 3));
            rearrange(&r, &perm)
        };
        da.add(&ca) // (e, c1, c2, a1, a2..)
    };
    // term2 = C_{a1 a2 c1}^p sigma_{p c2 a3..}: same contraction re-read
    let d_t2 = {
        // d_t1 as (e, x=a1, y=a2, z=c1 | w=c2, a4..) -> (e, c1, c2, a1, a2, ..)
        let mut perm = vec![0usize, 3, 4, 1, 2];
        perm.extend(5..(k + 3));
        rearrange(&d_t1, &perm)
    };
    // term3 = k/(n-k) g_{c1 a1} (C bl sigma)_{c2 a2..}; its gradient uses the
    // replaced gradient of the blacklozenge (grad_bl has shape (e, c2, a2..)).
    let d_t3 = {
        let inj = geo.g.outer(grad_bl); // (c1, a1, e, c2, a2..)
        let mut perm = vec![2usize, 0, 3, 1];
        perm.extend(4..(k + 3));
        rearrange(&inj, &perm).scale(kf / (n - kf)) // (e, c1, c2, a1, a2..)
    };
    let full = d_t1.add(&d_t2).add(&d_t3);
    let c_pair = [1usize, 2];
    let a_block: Vec<usize> = (3..(k + 3)).collect();
    let skewed = full.antisymmetrize(&c_pair).antisymmetrize(&a_block);
    trace(&skewed, 0, 1, &geo.ginv) // (c2 -> c, a..)
}

/// The invariant connection: normal derivative minus Psi-tilde.  Sections of
/// the splitting of a solution are exactly its parallel sections.
pub fn ck_connection<T: Float>(
    geo: &Geometry<T>,
    f: &FormTractor<T>,
    z_coeff_scale: f64,
) -> FormTractorDeriv<T> {
    let nd = f.normal_derivative(geo);
    nd.sub(&psi_tilde(geo, f, z_coeff_scale))
}

/// Parallel standard-tractor frame on flat space, as covariant dense columns
/// [tau, mu_a, alpha] with polynomial entries.
pub fn flat_parallel_frame<T: Float>(p: &[T], order: usize) -> Vec<Tensor<Jet<T>>> {
    let n = p.len();
    let zero = Jet::constant(T::zero(), n, order);
    let one = Jet::constant(T::one(), n, order);
    let xs: Vec<Jet<T>> = (0..n).map(|i| Jet::variable(p[i], i, n, order)).collect();
    let mut frame = Vec::with_capacity(n + 2);
    // alpha = 1 branch
    frame.push(Tensor::from_fn(n, &[Slot::Tractor], |i| {
        if i[0] == n + 1 {
            one.clone()
        } else {
            zero.clone()
        }
    }));
    // mu = e_b branches: alpha = x_b
    for b in 0..n {
        let xb = xs[b].clone();
        frame.push(Tensor::from_fn(n, &[Slot::Tractor], |i| {
            if i[0] == 0 {
                zero.clone()
            } else if i[0] <= n {
                if i[0] - 1 == b {
                    one.clone()
                } else {
                    zero.clone()
                }
            } else {
                xb.clone()
            }
        }));
    }
    // tau = 1 branch: mu = -x, alpha = -|x|^2/2
    let mut norm2 = zero.clone();
    for x in &xs {
        norm2 = norm2.add(&x.mul(x));
    }
    let half_norm = norm2.scale(T::from(-0.5).unwrap());
    frame.push(Tensor::from_fn(n, &[Slot::Tractor], |i| {
        if i[0] == 0 {
            one.clone()
        } else if i[0] <= n {
            xs[i[0] - 1].neg()
        } else {
            half_norm.clone()
        }
    }));
    frame
}

/// A constant-coefficient parallel (k+1)-form tractor on flat space and the
/// solution it generates.  Coefficients index the wedge of frame columns.
pub struct FlatSolution {
    pub n: usize,
    pub k: usize,
    /// Antisymmetric coefficient grid over (n+2)^{k+1} frame indices.
    pub coeffs: Tensor<f64>,
}

impl FlatSolution {
    /// Basis element: the wedge of the frame columns listed in `idx`.
    pub fn basis(n: usize, k: usize, idx: &[usize]) -> FlatSolution {
        assert_eq!(idx.len(), k + 1);
        let mut coeffs = Tensor::zeros(n, &vec![Slot::Tractor; k + 1], &0.0f64);
        coeffs.set(idx, 1.0);
        let all: Vec<usize> = (0..=k).collect();
        FlatSolution {
            n,
            k,
            coeffs: coeffs.antisymmetrize(&all).scale(((k + 1) as f64) * fact(k)),
        }
    }

    /// Dense parallel tractor form at a point (flat scale).
    pub fn dense_at<T: Float>(&self, p: &[T], order: usize) -> Tensor<Jet<T>> {
        let n = self.n;
        let frame = flat_parallel_frame(p, order);
        let proto = frame[0].proto();
        let mut out = Tensor::zeros(n, &vec![Slot::Tractor; self.k + 1], proto);
        for cidx in self.coeffs.iter_indices() {
            let c = *self.coeffs.get(&cidx);
            if c == 0.0 {
                continue;
            }
            // rank-1 update: c * frame[c0] x frame[c1] x ...
            for oidx in crate::tensor::IndexIter::new(out.dims()) {
                let mut term = Jet::constant(T::from(c).unwrap(), proto.nvars(), order);
                for (slot, &fi) in cidx.iter().enumerate() {
                    term = term.mul(frame[fi].get(&[oidx[slot]]));
                }
                out.update(&oidx, |v| v.add(&term));
            }
        }
        out
    }

    /// The generated solution representative in the scale e^{2 upsilon} dflat:
    /// sigma_hat = e^{(k+1) upsilon} (k+1) X . F  evaluated flat-side.
    pub fn sigma_at<T: Float>(
        &self,
        geo_flat: &Geometry<T>,
        resc: Option<&RescaleData>,
        order: usize,
    ) -> Tensor<Jet<T>> {
        let dense = self.dense_at(&geo_flat.point, order);
        let ft = FormTractor::from_dense(geo_flat, &dense, self.k);
        let mut sigma = ft.sigma;
        if let Some(r) = resc {
            let wf = r
                .weight_factor((self.k + 1) as f64, &geo_flat.point, order)
                .expect("weight factor");
            sigma = sigma.scale_by(&wf);
        }
        sigma
    }
}

fn fact(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product::<f64>().max(1.0)
}

/// Normality: size of Psi-tilde on the splitting of a solution; zero exactly
/// when the splitting is parallel for the normal tractor connection.
pub fn normality_residual<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> f64 {
    let f = splitting_d(geo, sigma);
    psi_tilde(geo, &f, 1.0).sup_norm()
}

/// Size of the lozenge action on a form; vanishes for solutions (k >= 2).
pub fn whitelozenge_residual<T: Float>(geo: &Geometry<T>, sigma: &Tensor<Jet<T>>) -> f64 {
    forms::lozenge(geo.weyl(), sigma, &metrics(geo)).sup_norm()
}

/// The tractor-curvature action on the splitting of a k = 1 solution:
/// Omega_{p c A0 A1} sigma^p as slot grids with leading c.
pub fn omega_sigma_slots<T: Float>(
    geo: &Geometry<T>,
    sigma: &Tensor<Jet<T>>,
) -> FormTractorDeriv<T> {
    assert_eq!(sigma.rank(), 1);
    let omega = tractor::tractor_curvature(geo); // (a, b, C, E)
    let sig_up = geo.raise_slot(sigma, 0);
    let contracted = contract_plain(&sig_up, 0, &omega, 0); // (c, C, E)
    let n = geo.n;
    // decompose (C, E) per direction c
    let mut slots_sigma = Tensor::zeros(n, &[Slot::Tangent, Slot::Tangent], sigma.proto());
    let mut slots_mu = Tensor::zeros(n, &[Slot::Tangent; 3], sigma.proto());
    let mut slots_phi = Tensor::zeros(n, &[Slot::Tangent], sigma.proto());
    let mut slots_rho = Tensor::zeros(n, &[Slot::Tangent, Slot::Tangent], sigma.proto());
    for c in 0..n {
        let dense_c = tractor::fix_first(&contracted, c);
        let ft = FormTractor::from_dense(geo, &dense_c, 1);
        for a in 0..n {
            slots_sigma.set(&[c, a], ft.sigma.get(&[a]).clone());
            slots_rho.set(&[c, a], ft.rho.get(&[a]).clone());
            for b in 0..n {
                slots_mu.set(&[c, a, b], ft.mu.get(&[a, b]).clone());
            }
        }
        slots_phi.set(&[c], ft.phi.as_ref().unwrap().get(&[]).clone());
    }
    FormTractorDeriv {
        k: 1,
        sigma: slots_sigma,
        mu: slots_mu,
        phi: Some(slots_phi),
        rho: slots_rho,
    }
}
