//! The verification checks, grouped by suite.
//!
//! Every check compares residuals against |r| <= atol + rtol * scale and
//! produces one outcome per logical claim.  Negative controls invert the
//! predicate: they pass only when the residual exceeds a floor, guarding the
//! suites against vacuously green tests.

use num_traits::Float;
use rand::Rng;

use crate::expr::Expr;
use crate::forms::{self, Metrics};
use crate::geometry::Geometry;
use crate::harness::fixtures::{self, FlatCkv, SigmaFixture};
use crate::harness::{CheckCtx, CheckDef, CheckOutcome, Suite};
use crate::helicity;
use crate::jet::Jet;
use crate::metric::{ExprField, MetricSpec, RescaleData};
use crate::prolong::{self, FlatSolution};
use crate::tensor::{contract, contract_plain, trace, Slot, Tensor};
use crate::tensor::Scalar as _;
use crate::tractor::{self, projector, FormTractor, Proj};

type J = Jet<f64>;
type T64 = Tensor<J>;

pub const MUTABLE_CHECKS: &[&str] = &["prolong.parallel_iff_cke", "coupled.kill_constants"];

/// Which family a metric belongs to, for fixture gating.
#[derive(PartialEq, Eq, Clone, Copy)]
pub enum MetricClass {
    Flat,
    ConfFlat,
    Sphere,
    Schwarzschild,
    Other,
}

pub fn classify(metric: &MetricSpec) -> MetricClass {
    let n = &metric.name;
    if n.starts_with("flat") {
        MetricClass::Flat
    } else if n.starts_with("conf_flat") {
        MetricClass::ConfFlat
    } else if n.starts_with("sphere") {
        MetricClass::Sphere
    } else if n.starts_with("schwarzschild") {
        MetricClass::Schwarzschild
    } else {
        MetricClass::Other
    }
}

fn conformally_flat(class: MetricClass) -> bool {
    matches!(
        class,
        MetricClass::Flat | MetricClass::ConfFlat | MetricClass::Sphere
    )
}

fn geo(ctx: &CheckCtx, p: &[f64], order: usize) -> Geometry<f64> {
    Geometry::new(&ctx.metric, p, order).expect("geometry at sampled point")
}

fn mets(geo: &Geometry<f64>) -> Metrics<'_, J> {
    Metrics {
        g: &geo.g,
        ginv: &geo.ginv,
        hinv: geo.hinv.as_ref(),
    }
}

fn admissible_k(ctx: &CheckCtx) -> Vec<usize> {
    ctx.cfg
        .k_values
        .iter()
        .copied()
        .filter(|&k| k >= 1 && k <= ctx.metric.n - 1)
        .collect()
}

/// Worst residual of `f` over the sampled points.
fn max_over_points(
    ctx: &CheckCtx,
    order: usize,
    mut f: impl FnMut(&Geometry<f64>) -> (f64, f64),
) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for p in &ctx.points {
        let g = geo(ctx, p, order);
        let (r, s) = f(&g);
        if r > worst.0 {
            worst.0 = r;
        }
        if s > worst.1 {
            worst.1 = s;
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// curvature suite
// ---------------------------------------------------------------------------

fn check_riemann_symmetries(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let (res, scale) = max_over_points(ctx, 2, |g| {
        let r = g.riemann();
        let scale = r.sup_norm();
        let swap_ab = r.transpose(&[1, 0, 2, 3]).add(r).sup_norm();
        let swap_cd = r.transpose(&[0, 1, 3, 2]).add(r).sup_norm();
        let pair = r.transpose(&[2, 3, 0, 1]).sub(r).sup_norm();
        let first_bianchi = r.antisymmetrize(&[0, 1, 2]).sup_norm();
        (
            swap_ab.max(swap_cd).max(pair).max(first_bianchi),
            scale,
        )
    });
    vec![CheckOutcome::from_residual(
        "curvature.riemann_symmetries",
        "index symmetries and the algebraic Bianchi identity of the curvature tensor",
        res,
        scale,
        ctx.tol,
    )]
}

fn check_curvature_split(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n as f64;
    let (res, scale) = max_over_points(ctx, 2, |g| {
        let riem = g.riemann();
        let p = g.schouten();
        let weyl = g.weyl();
        let gt = &g.g;
        // rebuild R = C + g_{ca} P_{bd} - g_{cb} P_{ad} + g_{db} P_{ac} - g_{da} P_{bc}
        let rebuilt = Tensor::from_fn(g.n, &[Slot::Tangent; 4], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let gp = |x: usize, y: usize, u: usize, v: usize| {
                gt.get(&[x, y]).mul(p.get(&[u, v]))
            };
            weyl.get(&[a, b, c, d])
                .add(&gp(c, a, b, d))
                .sub(&gp(c, b, a, d))
                .add(&gp(d, b, a, c))
                .sub(&gp(d, a, b, c))
        });
        let split = rebuilt.sub(riem).sup_norm();
        // Ricci is the stated trace modification of Schouten
        let ric = g.ricci();
        let j = g.schouten_trace();
        let rebuilt_ric = p.scale(n - 2.0).add(&gt.scale_by(j));
        let tracemod = rebuilt_ric.sub(ric).sup_norm();
        (split.max(tracemod), riem.sup_norm().max(ric.sup_norm()))
    });
    vec![CheckOutcome::from_residual(
        "curvature.split_reconstruction",
        "curvature splits into trace-free Weyl plus Schouten terms; Ric = (n-2)P + Jg",
        res,
        scale,
        ctx.tol,
    )]
}

fn check_weyl_tracefree(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let (res, scale) = max_over_points(ctx, 2, |g| {
        let weyl = g.weyl();
        let mut worst: f64 = 0.0;
        for s1 in 0..4usize {
            for s2 in (s1 + 1)..4 {
                worst = worst.max(trace(weyl, s1, s2, &g.ginv).sup_norm());
            }
        }
        (worst, weyl.sup_norm())
    });
    vec![CheckOutcome::from_residual(
        "curvature.weyl_tracefree",
        "the Weyl tensor is totally trace-free",
        res,
        scale,
        ctx.tol,
    )]
}

fn check_weyl_divergence(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n as f64;
    let (res, scale) = max_over_points(ctx, 3, |g| {
        let dc = g.covariant_derivative(g.weyl());
        let div = trace(&dc, 0, 1, &g.ginv); // nabla^d C_{d a b c}
        let rhs = g.cotton().scale(n - 3.0);
        (
            div.sub(&rhs).sup_norm(),
            div.sup_norm().max(rhs.sup_norm()).max(1e-3),
        )
    });
    vec![CheckOutcome::from_residual(
        "curvature.weyl_divergence",
        "divergence of the Weyl tensor equals (n-3) times the Cotton tensor",
        res,
        scale,
        ctx.tol,
    )]
}

fn check_second_bianchi(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let (res, scale) = max_over_points(ctx, 3, |g| {
        let dc = g.covariant_derivative(g.weyl()); // (e, x, y, b1, b2)
        let cotton = g.cotton();
        let gt = &g.g;
        // identity 1: skew[(a1 a2),(b1 b2)] of
        //   nabla_{a1} C_{c a2 b1 b2} - 1/2 nabla_c C_{a1 a2 b1 b2}
        //   + g_{c b1} A_{b2 a1 a2} - 2 g_{a1 b1} A_{b2 c a2}
        let t1 = dc.transpose(&[1, 0, 2, 3, 4]); // (c, a1, a2, b1, b2)
        let t2 = dc.scale(0.5);
        let t3 = gt.outer(cotton).transpose(&[0, 3, 4, 1, 2]);
        let t4 = gt.outer(cotton).transpose(&[3, 0, 4, 1, 2]).scale(2.0);
        let combined = t1.sub(&t2).add(&t3).sub(&t4);
        let r1 = combined
            .antisymmetrize(&[1, 2])
            .antisymmetrize(&[3, 4])
            .sup_norm();
        // identity 2: skew[(a1 a2 a3),(b1 b2)] of
        //   nabla_{a1} C_{a2 a3 b1 b2} - 2 g_{a1 b1} A_{b2 a2 a3}
        let s1 = dc.clone();
        let s2 = gt.outer(cotton).transpose(&[0, 3, 4, 1, 2]).scale(2.0);
        let r2 = s1
            .sub(&s2)
            .antisymmetrize(&[0, 1, 2])
            .antisymmetrize(&[3, 4])
            .sup_norm();
        (r1.max(r2), dc.sup_norm().max(1e-3))
    });
    vec![CheckOutcome::from_residual(
        "curvature.second_bianchi",
        "contracted second Bianchi identities for the Weyl and Cotton tensors",
        res,
        scale,
        ctx.tol,
    )]
}

fn check_commutator(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let mut rng = ctx.rng(11);
    let n = ctx.metric.n;
    let field = ExprField::new(
        n,
        2,
        0.0,
        (0..n * n).map(|_| crate::metric::random_poly2(n, &mut rng)).collect(),
    );
    let (res, scale) = max_over_points(ctx, 2, |g| {
        let w = field.eval_jets(&g.point, 2).expect("field eval");
        let comm = g.commutator(&w);
        let m = mets(g);
        let action = forms::hash(g.riemann(), (2, 3), &w, &m);
        (
            comm.sub(&action).sup_norm(),
            comm.sup_norm().max(action.sup_norm()).max(w.sup_norm()),
        )
    });
    vec![CheckOutcome::from_residual(
        "curvature.commutator_hash",
        "the derivative commutator acts as the curvature hash action",
        res,
        scale,
        ctx.tol,
    )]
}

fn check_cotton_conformally_flat(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    if !conformally_flat(classify(&ctx.metric)) {
        return vec![];
    }
    let (res, scale) = max_over_points(ctx, 3, |g| {
        (
            g.cotton().sup_norm().max(if ctx.metric.n > 3 {
                g.weyl().sup_norm()
            } else {
                0.0
            }),
            1.0 + g.riemann().sup_norm(),
        )
    });
    vec![CheckOutcome::from_residual(
        "curvature.conformally_flat",
        "Weyl and Cotton tensors vanish for conformally flat metrics",
        res,
        scale,
        ctx.tol,
    )]
}

fn check_schouten_transform(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let mut rng = ctx.rng(13);
    let resc = fixtures::rescaling(ctx.metric.n, &mut rng);
    let hatted = resc.rescale_metric(&ctx.metric);
    let mut worst = (0.0f64, 0.0f64);
    for p in &ctx.points {
        let g = geo(ctx, p, 3);
        let gh = Geometry::new(&hatted, p, 3).expect("rescaled geometry");
        // P_hat = P - nabla Upsilon + Upsilon Upsilon - 1/2 |Upsilon|^2 g
        let du_field = ExprField::new(
            ctx.metric.n,
            1,
            0.0,
            (0..ctx.metric.n).map(|i| resc.upsilon.diff(i)).collect(),
        );
        let du = du_field.eval_jets(p, 2).expect("upsilon gradient");
        let hess = g.covariant_derivative(&du);
        let uu = du.outer(&du);
        let usq = contract(&du, 0, &du, 0, &g.ginv);
        let rhs = g
            .schouten()
            .sub(&hess)
            .add(&uu)
            .sub(&g.g.scale_by(usq.get(&[])).scale(0.5));
        let lhs = gh.schouten();
        let r = lhs.sub(&rhs).sup_norm();
        let s = lhs.sup_norm().max(rhs.sup_norm()).max(1.0);
        worst.0 = worst.0.max(r);
        worst.1 = worst.1.max(s);
    }
    vec![CheckOutcome::from_residual(
        "curvature.schouten_transform",
        "conformal transformation law of the Schouten tensor",
        worst.0,
        worst.1,
        ctx.tol,
    )]
}

fn check_weyl_invariance(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let mut rng = ctx.rng(17);
    let resc = fixtures::rescaling(ctx.metric.n, &mut rng);
    let hatted = resc.rescale_metric(&ctx.metric);
    let mut worst = (0.0f64, 0.0f64);
    for p in &ctx.points {
        let g = geo(ctx, p, 2);
        let gh = Geometry::new(&hatted, p, 2).expect("rescaled geometry");
        let wf = resc.weight_factor(2.0, p, 2).expect("weight factor");
        let transported = g.weyl().scale_by(&wf);
        let r = gh.weyl().sub(&transported).sup_norm();
        let s = transported.sup_norm().max(1.0);
        worst.0 = worst.0.max(r);
        worst.1 = worst.1.max(s);
    }
    vec![CheckOutcome::from_residual(
        "curvature.weyl_invariance",
        "the Weyl tensor is a weight-2 conformal invariant",
        worst.0,
        worst.1,
        ctx.tol,
    )]
}

fn check_grad_transform(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let mut rng = ctx.rng(19);
    let resc = fixtures::rescaling(n, &mut rng);
    let hatted = resc.rescale_metric(&ctx.metric);
    let w = 1.5f64;
    let field = ExprField::new(
        n,
        2,
        w,
        (0..n * n).map(|_| crate::metric::random_poly2(n, &mut rng)).collect(),
    );
    let kform = fixtures::random_form(n, 2.min(n - 1), &mut rng);
    let mut out: Vec<CheckOutcome> = Vec::new();
    let mut worst_gen = (0.0f64, 0.0f64);
    let mut worst_form = (0.0f64, 0.0f64);
    let mut worst_jk = (0.0f64, 0.0f64);
    for p in &ctx.points {
        let g = geo(ctx, p, 2);
        let gh = Geometry::new(&hatted, p, 2).expect("rescaled geometry");
        let du_field = ExprField::new(
            n,
            1,
            0.0,
            (0..n).map(|i| resc.upsilon.diff(i)).collect(),
        );
        let du = du_field.eval_jets(p, 2).expect("upsilon gradient");
        let du_up = g.raise_slot(&du, 0);

        // general valence-2 law
        {
            let f = field.eval_jets(p, 2).expect("field");
            let s = 2.0;
            let df = g.covariant_derivative(&f); // (abar, b, c)
            let mut rhs = df.clone();
            rhs = rhs.add(&du.outer(&f).scale(w - s));
            // -Upsilon_b f_{abar c} - Upsilon_c f_{b abar}
            rhs = rhs.sub(&du.outer(&f).transpose(&[1, 0, 2]));
            rhs = rhs.sub(&du.outer(&f).transpose(&[2, 1, 0]));
            // +Upsilon^p f_{p c} g_{b abar} + Upsilon^p f_{b p} g_{c abar}
            let upf1 = contract_plain(&du_up, 0, &f, 0); // (c)
            rhs = rhs.add(&g.g.outer(&upf1));
            let upf2 = contract_plain(&du_up, 0, &f, 1); // (b)
            rhs = rhs.add(&g.g.outer(&upf2).transpose(&[0, 2, 1]));

            let f_hat = {
                let wf = resc.weight_factor(w, p, 2).expect("wf");
                f.scale_by(&wf)
            };
            let lhs = gh.covariant_derivative(&f_hat);
            let wf = resc.weight_factor(w, p, 1).expect("wf");
            let diff = lhs.sub(&rhs.scale_by(&wf)).sup_norm();
            let scale = lhs.sup_norm().max(1.0);
            worst_gen.0 = worst_gen.0.max(diff);
            worst_gen.1 = worst_gen.1.max(scale);
        }

        // weighted-form law: skew part and divergence part
        {
            let k = kform.rank;
            let wk = kform.weight;
            let f = kform.eval_jets(p, 2).expect("form");
            let wf2 = resc.weight_factor(wk, p, 2).expect("wf");
            let f_hat = f.scale_by(&wf2);
            let df = g.covariant_derivative(&f);
            let dfh = gh.covariant_derivative(&f_hat);
            let wf1 = resc.weight_factor(wk, p, 1).expect("wf");

            // exterior part
            let lhs_skew = forms::antisym_all(&dfh);
            let rhs_skew = forms::antisym_all(&df.add(&du.outer(&f).scale(wk)))
                .scale_by(&wf1);
            let r1 = lhs_skew.sub(&rhs_skew).sup_norm();

            // divergence part: weight drops by 2 on raising
            let lhs_div = trace(&dfh, 0, 1, &gh.ginv);
            let wfd = resc.weight_factor(wk - 2.0, p, 1).expect("wf");
            let rhs_div = trace(&df, 0, 1, &g.ginv)
                .add(&contract_plain(&du_up, 0, &f, 0).scale(n as f64 + wk - 2.0 * k as f64))
                .scale_by(&wfd);
            let r2 = lhs_div.sub(&rhs_div).sup_norm();
            worst_form.0 = worst_form.0.max(r1.max(r2));
            worst_form.1 = worst_form.1.max(lhs_skew.sup_norm().max(lhs_div.sup_norm()).max(1.0));
        }

        // trace-free (1,k) divergence law
        {
            let k = 2.min(n - 1);
            let wjk = 0.7f64;
            let mut lrng = ctx.rng(23);
            let raw = Tensor::from_fn(n, &vec![Slot::Tangent; k + 1], |_| {
                Jet::constant(lrng.gen_range(-1.0..1.0), n, 2)
            });
            let m = mets(&g);
            let f = forms::project_cftf(&raw, &m);
            let wfa = resc.weight_factor(wjk, p, 2).expect("wf");
            let f_hat = f.scale_by(&wfa);
            let lhs = trace(&gh.covariant_derivative(&f_hat), 0, 1, &gh.ginv);
            let wfd = resc.weight_factor(wjk - 2.0, p, 1).expect("wf");
            let rhs = trace(&g.covariant_derivative(&f), 0, 1, &g.ginv)
                .add(&contract_plain(&du_up, 0, &f, 0).scale(n as f64 + wjk - k as f64 - 1.0))
                .scale_by(&wfd);
            let r = lhs.sub(&rhs).sup_norm();
            worst_jk.0 = worst_jk.0.max(r);
            worst_jk.1 = worst_jk.1.max(lhs.sup_norm().max(1.0));
        }
    }
    out.push(CheckOutcome::from_residual(
        "curvature.gradient_transform_general",
        "Leibniz transformation of the connection on weighted tensors",
        worst_gen.0,
        worst_gen.1,
        ctx.tol,
    ));
    out.push(CheckOutcome::from_residual(
        "curvature.gradient_transform_forms",
        "transformation of exterior and divergence parts on weighted forms",
        worst_form.0,
        worst_form.1,
        ctx.tol,
    ));
    out.push(CheckOutcome::from_residual(
        "curvature.gradient_transform_tracefree",
        "divergence transformation on trace-free mixed-symmetry fields",
        worst_jk.0,
        worst_jk.1,
        ctx.tol,
    ));
    out
}

fn check_christoffel(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let (res, scale) = max_over_points(ctx, 1, |g| {
        // symmetry in the lower pair and metric compatibility
        let gam = &g.gamma;
        let sym = gam.sub(&gam.transpose(&[0, 2, 1])).sup_norm();
        let dg = g.covariant_derivative(&g.g);
        (sym.max(dg.sup_norm()), 1.0 + gam.sup_norm())
    });
    vec![CheckOutcome::from_residual(
        "curvature.christoffel",
        "Levi-Civita symbols are symmetric and metric-compatible",
        res,
        scale,
        ctx.tol,
    )]
}

// ---------------------------------------------------------------------------
// forms algebra (runs under the curvature suite)
// ---------------------------------------------------------------------------

fn check_form_projections(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let mut rng = ctx.rng(29);
    let mut worst = (0.0f64, 0.0f64);
    let mut worst_skew = (0.0f64, 0.0f64);
    for p in ctx.points.iter().take(3) {
        let g = geo(ctx, p, 0);
        let m = mets(&g);
        for k in admissible_k(ctx) {
            let raw = Tensor::from_fn(n, &vec![Slot::Tangent; k + 1], |_| {
                Jet::constant(rng.gen_range(-1.0..1.0f64), n, 0)
            });
            let proj = forms::project_cftf(&raw, &m);
            let twice = forms::project_cftf(&proj, &m);
            let idem = twice.sub(&proj).sup_norm();
            let tr = trace(&proj, 0, 1, &g.ginv).sup_norm();
            let skew = forms::antisym_all(&proj).sup_norm();
            worst.0 = worst.0.max(idem).max(tr).max(skew);
            worst.1 = worst.1.max(proj.sup_norm()).max(1.0);

            // the (1,k) slot identity: putting the first slot into the form
            // block and skewing, f_{a1 p adot} = (1/k) f_{p a..}
            let u = raw.antisymmetrize(&(1..=k).collect::<Vec<_>>());
            let e1k = u.sub(&forms::antisym_all(&u));
            let mut skew_a: Vec<usize> = vec![0];
            skew_a.extend(2..=k);
            let lhs = e1k.antisymmetrize(&skew_a); // slots read as (a1, p, adot)
            let mut perm: Vec<usize> = vec![1, 0];
            perm.extend(2..=k);
            let rhs = e1k.transpose(&perm).scale(1.0 / k as f64);
            worst_skew.0 = worst_skew.0.max(lhs.sub(&rhs).sup_norm());
            worst_skew.1 = worst_skew.1.max(rhs.sup_norm()).max(1.0);

            // pure-trace input is annihilated
            if k >= 1 {
                let lam = Tensor::from_fn(n, &vec![Slot::Tangent; k - 1], |_| {
                    Jet::constant(rng.gen_range(-1.0..1.0f64), n, 0)
                });
                let pure = g
                    .g
                    .outer(&lam)
                    .antisymmetrize(&(1..=k).collect::<Vec<_>>());
                worst.0 = worst.0.max(forms::project_cftf(&pure, &m).sup_norm());
            }
            // totally skew input is annihilated
            let skew_in = forms::antisym_all(&raw);
            worst.0 = worst.0.max(forms::project_cftf(&skew_in, &m).sup_norm());
        }
    }
    vec![
        CheckOutcome::from_residual(
            "forms.projection_idempotent",
            "the conformal Killing target projection is idempotent, trace-free, and kills skew and trace parts",
            worst.0,
            worst.1,
            ctx.tol,
        ),
        CheckOutcome::from_residual(
            "forms.skew_identity",
            "slot-exchange identity for mixed form symmetries",
            worst_skew.0,
            worst_skew.1,
            ctx.tol,
        ),
    ]
}

fn check_weyl_actions(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let class = classify(&ctx.metric);
    let mut rng = ctx.rng(31);
    let mut out = Vec::new();

    let mut worst_type = (0.0f64, 0.0f64);
    let mut worst_consistency = (0.0f64, 0.0f64);
    let mut multiples: Vec<(f64, f64)> = Vec::new();
    for p in ctx.points.iter().take(4) {
        let g = geo(ctx, p, 2);
        let m = mets(&g);
        for k in admissible_k(ctx) {
            if k < 2 {
                continue;
            }
            let f = fixtures::random_form(n, k, &mut rng)
                .eval_jets(p, 0)
                .expect("form");
            let weyl = g.weyl();
            let weyl0 = weyl.map(|x| Jet::constant(x.value(), n, 0));
            let g0 = g.g.map(|x| Jet::constant(x.value(), n, 0));
            let ginv0 = g.ginv.map(|x| Jet::constant(x.value(), n, 0));
            let m0 = Metrics {
                g: &g0,
                ginv: &ginv0,
                hinv: None,
            };
            let bl = forms::blacklozenge(&weyl0, &f, &m0);
            let loz = forms::lozenge(&weyl0, &f, &m0);
            let scale = weyl0.sup_norm() * f.sup_norm() + 1e-12;

            // blacklozenge lands in E(1,k-1)_0
            if k >= 2 {
                let tr = trace(&bl, 0, 1, &ginv0).sup_norm();
                let skew = forms::antisym_all(&bl).sup_norm();
                worst_type.0 = worst_type.0.max(tr).max(skew);
            }
            // lozenge satisfies the three E(2,k) skew conditions and is trace-free
            {
                let rank = loz.rank();
                let q1: Vec<usize> = (1..rank).collect();
                let mut q2: Vec<usize> = vec![0, 1];
                q2.extend(2..rank - 1);
                let c1 = loz.antisymmetrize(&q1).sup_norm();
                let c2 = loz.antisymmetrize(&q2).sup_norm();
                let c3 = forms::antisym_all(&loz).sup_norm();
                let tr = trace(&loz, 0, 2, &ginv0).sup_norm();
                worst_type.0 = worst_type.0.max(c1).max(c2).max(c3).max(tr);
                if k == n - 1 {
                    worst_type.0 = worst_type.0.max(loz.sup_norm());
                }
            }
            worst_type.1 = worst_type.1.max(scale);

            if conformally_flat(class) {
                worst_type.0 = worst_type.0.max(bl.sup_norm()).max(loz.sup_norm());
            }

            // consistency with the projections of the hash action
            if class == MetricClass::Schwarzschild || class == MetricClass::Other {
                let csharp = forms::hash(&weyl0, (2, 3), &f, &m0); // (x, y, f-slots)
                // blacklozenge against project of C# f with one trace
                let projected = forms::project_cftf(
                    &trace(&csharp, 0, 2, &ginv0),
                    &m0,
                );
                // least-squares multiple between bl and projected
                let num: f64 = bl
                    .data()
                    .iter()
                    .zip(projected.data().iter())
                    .map(|(a, b)| a.value() * b.value())
                    .sum();
                let den: f64 = bl.data().iter().map(|a| a.value() * a.value()).sum();
                if den > 1e-20 {
                    let mult = num / den;
                    let resid = projected.sub(&bl.scale(mult)).sup_norm();
                    worst_consistency.0 = worst_consistency.0.max(resid);
                    worst_consistency.1 = worst_consistency.1.max(projected.sup_norm()).max(1e-6);
                    multiples.push((k as f64, mult));
                }
            }
        }
    }
    out.push(CheckOutcome::from_residual(
        "forms.weyl_action_types",
        "the two Weyl actions land in their stated symmetry types and vanish where required",
        worst_type.0,
        worst_type.1,
        ctx.tol,
    ));
    if !multiples.is_empty() {
        // the multiple must be k-dependent only: check point-independence per k
        let mut spread: f64 = 0.0;
        for k in admissible_k(ctx) {
            let vals: Vec<f64> = multiples
                .iter()
                .filter(|(kk, _)| *kk == k as f64)
                .map(|(_, m)| *m)
                .collect();
            if vals.len() >= 2 {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var =
                    vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
                spread = spread.max(var.sqrt());
            }
        }
        out.push(
            CheckOutcome::from_residual(
                "forms.hash_consistency",
                "the Weyl actions are fixed multiples of projected hash actions, with point-independent multiples",
                worst_consistency.0.max(spread),
                worst_consistency.1,
                crate::harness::Tolerance {
                    atol: 1e-8,
                    rtol: ctx.tol.rtol,
                },
            )
            .with_note(format!("fitted multiples (k, m): {:?}", multiples)),
        );
    }
    out
}

fn check_hodge(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let mut rng = ctx.rng(37);
    let mut worst = (0.0f64, 0.0f64);
    for p in ctx.points.iter().take(4) {
        let g = geo(ctx, p, 0);
        let m = mets(&g);
        for k in admissible_k(ctx) {
            let f = fixtures::random_form(n, k, &mut rng)
                .eval_jets(p, 0)
                .expect("form");
            let (star, w1) = forms::hodge_star(&f, k as f64 + 1.0, &g.vol, &m);
            let (star2, _w2) = forms::hodge_star(&star, w1, &g.vol, &m);
            let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
            let sign = sign * g.det_sign;
            let r = star2.sub(&f.scale(sign)).sup_norm();
            worst.0 = worst.0.max(r);
            worst.1 = worst.1.max(f.sup_norm());
        }
    }
    vec![CheckOutcome::from_residual(
        "forms.hodge_involution",
        "the Hodge star squares to the signature sign",
        worst.0,
        worst.1,
        ctx.tol,
    )]
}

// ---------------------------------------------------------------------------
// tractor suite
// ---------------------------------------------------------------------------

fn check_tractor_metric(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let (res, scale) = max_over_points(ctx, 2, |g| {
        let dh = g.covariant_derivative(g.h());
        (dh.sup_norm(), 1.0 + g.h().sup_norm())
    });
    let mut out = vec![CheckOutcome::from_residual(
        "tractor.metric_parallel",
        "the tractor connection preserves the tractor metric",
        res,
        scale,
        ctx.tol,
    )];

    let (res2, scale2) = max_over_points(ctx, 0, |g| {
        let x = tractor::x_dense(g);
        let y = tractor::y_dense(g);
        let z = tractor::z_dense_low(g);
        let hinv = g.hinv();
        let yx = contract(&y, 0, &x, 0, hinv);
        let one = Jet::constant(1.0, g.n, 0);
        let mut worst = yx.get(&[]).sub(&one).value().abs();
        worst = worst.max(contract(&x, 0, &x, 0, hinv).sup_norm());
        worst = worst.max(contract(&y, 0, &y, 0, hinv).sup_norm());
        worst = worst.max(contract(&x, 0, &z, 0, hinv).sup_norm());
        worst = worst.max(contract(&y, 0, &z, 0, hinv).sup_norm());
        let zz = contract(&z, 0, &z, 0, hinv); // (b, c) should equal g_{bc}
        worst = worst.max(zz.sub(&g.g).sup_norm());
        (worst, 1.0)
    });
    out.push(CheckOutcome::from_residual(
        "tractor.quadratic_identities",
        "injector contractions: Y.X = 1, Z.Z = g, all other pairings vanish",
        res2,
        scale2,
        ctx.tol,
    ));
    out
}

fn check_tractor_curvature(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let mut rng = ctx.rng(41);
    let alpha = crate::metric::random_poly2(n, &mut rng);
    let mu = ExprField::new(
        n,
        1,
        0.0,
        (0..n).map(|_| crate::metric::random_poly2(n, &mut rng)).collect(),
    );
    let tau = crate::metric::random_poly2(n, &mut rng);
    let mut worst_comm = (0.0f64, 0.0f64);
    let mut worst_x = (0.0f64, 0.0f64);
    for p in &ctx.points {
        let g = geo(ctx, p, 3);
        let omega = tractor::tractor_curvature(&g);
        let v = tractor::standard_tractor(
            &alpha.eval_jet(p, 2).unwrap(),
            &mu.eval_jets(p, 2).unwrap(),
            &tau.eval_jet(p, 2).unwrap(),
        );
        let comm = g.commutator(&v);
        let m = mets(&g);
        let action = forms::hash(&omega, (2, 3), &v, &m);
        worst_comm.0 = worst_comm.0.max(comm.sub(&action).sup_norm());
        worst_comm.1 = worst_comm
            .1
            .max(comm.sup_norm())
            .max(action.sup_norm())
            .max(v.sup_norm());

        let x = tractor::x_dense(&g);
        let killed = contract(&omega, 3, &x, 0, g.hinv());
        worst_x.0 = worst_x.0.max(killed.sup_norm());
        worst_x.1 = worst_x.1.max(omega.sup_norm()).max(1e-6);
    }
    vec![
        CheckOutcome::from_residual(
            "tractor.curvature_vs_commutator",
            "the stated tractor curvature matches the connection commutator",
            worst_comm.0,
            worst_comm.1,
            ctx.tol,
        ),
        CheckOutcome::from_residual(
            "tractor.curvature_kills_x",
            "the tractor curvature annihilates the canonical X injector",
            worst_x.0,
            worst_x.1,
            ctx.tol,
        ),
    ]
}

fn check_tractor_d(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let mut rng = ctx.rng(43);
    let resc = fixtures::rescaling(n, &mut rng);
    let hatted = resc.rescale_metric(&ctx.metric);
    let w = 1.3f64;
    let v = crate::metric::random_poly2(n, &mut rng);
    let mut worst = (0.0f64, 0.0f64);
    for p in &ctx.points {
        let g = geo(ctx, p, 3);
        let gh = Geometry::new(&hatted, p, 3).expect("rescaled geometry");
        let vj = Tensor::scalar(n, v.eval_jet(p, 3).unwrap());
        let dv = tractor::tractor_d(&g, &vj, w);
        let transported = tractor::transform_scale(&g, &resc, &dv, w - 1.0);
        let wf = resc.weight_factor(w, p, 3).unwrap();
        let vh = vj.scale_by(&wf);
        let dvh = tractor::tractor_d(&gh, &vh, w);
        worst.0 = worst.0.max(dvh.sub(&transported).sup_norm());
        worst.1 = worst.1.max(dvh.sup_norm()).max(1.0);
    }
    vec![CheckOutcome::from_residual(
        "tractor.d_operator_invariance",
        "the second-order splitting operator is conformally invariant",
        worst.0,
        worst.1,
        ctx.tol,
    )]
}

fn check_form_tractor_roundtrip(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let mut rng = ctx.rng(47);
    let mut worst = (0.0f64, 0.0f64);
    for p in ctx.points.iter().take(3) {
        let g = geo(ctx, p, 1);
        for k in admissible_k(ctx) {
            let ft = random_form_tractor(&g, k, &mut rng, 1);
            let dense = ft.dense(&g);
            let back = FormTractor::from_dense(&g, &dense, k);
            let r = back.sub(&ft).sup_norm();
            let dense2 = back.dense(&g);
            let r2 = dense2.sub(&dense).sup_norm();
            worst.0 = worst.0.max(r).max(r2);
            worst.1 = worst.1.max(ft.sup_norm()).max(1.0);
        }
    }
    vec![CheckOutcome::from_residual(
        "tractor.form_roundtrip",
        "slot and dense realizations of form tractors convert exactly both ways",
        worst.0,
        worst.1,
        crate::harness::Tolerance {
            atol: 1e-10,
            rtol: 1e-10,
        },
    )]
}

pub fn random_form_tractor(
    g: &Geometry<f64>,
    k: usize,
    rng: &mut impl Rng,
    order: usize,
) -> FormTractor<f64> {
    let n = g.n;
    let mk = |rank: usize, rng: &mut dyn FnMut() -> f64| -> T64 {
        let raw = Tensor::from_fn(n, &vec![Slot::Tangent; rank], |_| {
            Jet::constant(rng(), n, order)
        });
        forms::antisym_all(&raw)
    };
    let mut r = {
        let rng = std::cell::RefCell::new(rng);
        move || rng.borrow_mut().gen_range(-1.0..1.0f64)
    };
    FormTractor {
        k,
        sigma: mk(k, &mut r),
        mu: mk(k + 1, &mut r),
        phi: if k >= 1 { Some(mk(k - 1, &mut r)) } else { None },
        rho: mk(k, &mut r),
    }
}

/// Random form tractor with polynomial (jet-order-rich) slots.
pub fn random_form_tractor_field(
    n: usize,
    k: usize,
    rng: &mut impl Rng,
) -> (ExprField, ExprField, ExprField, ExprField) {
    (
        ExprField::random_form(n, k, k as f64 + 1.0, rng),
        ExprField::random_form(n, k + 1, k as f64 + 1.0, rng),
        ExprField::random_form(n, k.saturating_sub(1), k as f64 - 1.0, rng),
        ExprField::random_form(n, k, k as f64 - 1.0, rng),
    )
}

fn eval_form_tractor(
    fields: &(ExprField, ExprField, ExprField, ExprField),
    k: usize,
    p: &[f64],
    order: usize,
) -> FormTractor<f64> {
    FormTractor {
        k,
        sigma: fields.0.eval_jets(p, order).unwrap(),
        mu: fields.1.eval_jets(p, order).unwrap(),
        phi: Some(fields.2.eval_jets(p, order).unwrap()),
        rho: fields.3.eval_jets(p, order).unwrap(),
    }
}

fn check_normal_connection(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let mut rng = ctx.rng(53);
    let mut worst = (0.0f64, 0.0f64);
    for k in admissible_k(ctx) {
        let fields = random_form_tractor_field(n, k, &mut rng);
        for p in ctx.points.iter().take(4) {
            let g = geo(ctx, p, 2);
            let ft = eval_form_tractor(&fields, k, p, 2);
            let slotwise = ft.normal_derivative(&g).dense(&g);
            let densewise = g.covariant_derivative(&ft.dense(&g));
            worst.0 = worst.0.max(slotwise.sub(&densewise).sup_norm());
            worst.1 = worst.1.max(densewise.sup_norm()).max(1.0);
        }
    }
    vec![CheckOutcome::from_residual(
        "tractor.normal_connection_slots",
        "slot formulas of the normal connection agree with the dense tractor derivative",
        worst.0,
        worst.1,
        ctx.tol,
    )]
}

fn check_projector_derivatives(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let mut worst = (0.0f64, 0.0f64);
    for p in ctx.points.iter().take(3) {
        let g = geo(ctx, p, 2);
        for k in admissible_k(ctx) {
            // nabla_p X^k = g_{p a0} Z^{a0 a..} - k delta_p^{a1} W^{a2..}
            let px = projector(&g, Proj::X, k);
            let up: Vec<usize> = ((k + 1)..(2 * k + 1)).collect();
            let dx = g.covariant_derivative_up(&px, &up);
            let pz = projector(&g, Proj::Z, k + 1);
            let t1 = contract_plain(&g.g, 1, &pz, k + 1); // (p, tract.., a..)
            let pw = projector(&g, Proj::W, k);
            let t2 = {
                let delta = delta_mixed(&g);
                let raw = delta.outer(&pw); // (p, a1, tract.., a2..)
                // arrange to (p, tract (k+1), a1, a2..)
                let mut perm: Vec<usize> = vec![0];
                perm.extend(2..(k + 3));
                perm.push(1);
                perm.extend((k + 3)..(2 * k + 2));
                let arranged = raw.transpose(&perm);
                let a_block: Vec<usize> = ((k + 2)..(2 * k + 2)).collect();
                arranged.antisymmetrize(&a_block).scale(k as f64)
            };
            let rhs = t1.sub(&t2);
            worst.0 = worst.0.max(dx.sub(&rhs).sup_norm());
            worst.1 = worst.1.max(rhs.sup_norm()).max(1.0);
        }
    }
    vec![CheckOutcome::from_residual(
        "tractor.projector_derivative",
        "derivative rule for the X-type form projector",
        worst.0,
        worst.1,
        ctx.tol,
    )]
}

fn delta_mixed(g: &Geometry<f64>) -> T64 {
    let n = g.n;
    let order = g.g.proto().order();
    Tensor::from_fn(n, &[Slot::Tangent, Slot::Tangent], |i| {
        Jet::constant(if i[0] == i[1] { 1.0 } else { 0.0 }, n, order)
    })
}

fn check_scale_transform(ctx: &CheckCtx) -> Vec<CheckOutcome> {
    let n = ctx.metric.n;
    let mut rng = ctx.rng(59);
    let resc = fixtures::rescaling(n, &mut rng);
    let hatted = resc.rescale_metric(&ctx.metric);
    let mut worst = (0.0f64, 0.0f64);
    let mut worst_x = (0.0f64, 0.0f64);
    for p in ctx.points.iter().take(4) {
        let g = geo(ctx, p, 2);
        let gh = Geometry::new(&hatted, p, 2).expect("rescaled geometry");
        for k in admissible_k(ctx).into_iter().take(2) {
            let ft = random_form_tractor(&g, k, &mut rng, 1);
            let dense = ft.dense(&g);
            let transported = tractor::transform_scale(&g, &resc, &dense, 0.0);
            let hat_slots = FormTractor::from_dense(&gh, &transported, k);

            // slot transformation laws with weight factors
            let kf = k as f64;
            let wtop = resc.weight_factor(kf + 1.0, p, 1).unwrap();
            let wbot = resc.weight_factor(kf - 1.0, p, 1).unwrap();
            let du_field = ExprField::new(
                n,
                1,
                0.0,
                (0..n).map(|i| resc.upsilon.diff(i)).collect(),
            );
            let du = du_field.eval_jets(p, 1).unwrap();
            let du_up = g.raise_slot(&du, 0);
            let (sigma, mu, nu, rho) = prolong::prolongation_vars(&ft);
            let nu = nu.unwrap_or_else(|| Tensor::scalar(n, du.proto().zero_like()));

            let sigma_hat = sigma.scale_by(&wtop);
            let r_sigma = hat_slots.sigma.sub(&sigma_hat).sup_norm();

            let a_block: Vec<usize> = (0..=k).collect();
            let mu_hat = mu
                .add(
                    &du.outer(&sigma)
                        .antisymmetrize(&a_block)
                        .scale(kf + 1.0),
                )
                .scale_by(&wtop);
            let r_mu = hat_slots.mu.scale(kf + 1.0).sub(&mu_hat).sup_norm();

            let nu_hat = nu
                .add(&contract_plain(&du_up, 0, &sigma, 0).scale(kf))
                .scale_by(&wbot);
            let r_nu = match &hat_slots.phi {
                Some(phi) => phi.sub(&nu_hat).sup_norm(),
                None => 0.0,
            };

            // rho_hat = rho + Up^p mu_{p a..} - Up_{a1} nu_{a2..}
            //           + 1/2 |Up|^2 sigma - k Up_{a1} Up^p sigma_{p a2..}
            let upmu = contract_plain(&du_up, 0, &mu, 0);
            let upnu = if k >= 1 {
                let block: Vec<usize> = (0..k).collect();
                du.outer(&nu).antisymmetrize(&block)
            } else {
                Tensor::zeros(n, &[], du.proto())
            };
            let usq = contract(&du, 0, &du, 0, &g.ginv);
            let upsig = contract_plain(&du_up, 0, &sigma, 0); // (a2..)
            let upupsig = {
                let block: Vec<usize> = (0..k).collect();
                du.outer(&upsig).antisymmetrize(&block)
            };
            let rho_hat = rho
                .add(&upmu)
                .sub(&upnu)
                .add(&sigma.scale_by(usq.get(&[])).scale(0.5))
                .sub(&upupsig.scale(kf))
                .scale_by(&wbot);
            let r_rho = hat_slots.rho.neg().sub(&rho_hat).sup_norm();

            worst.0 = worst.0.max(r_sigma).max(r_mu).max(r_nu).max(r_rho);
            worst.1 = worst.1.max(ft.sup_norm()).max(1.0);
        }

        // X is conformally invariant: its dense vector transforms to itself
        let x = tractor::x_dense(&g);
        let tx = tractor::transform_scale(&g, &resc, &x, 1.0);
        worst_x.0 = worst_x.0.max(tx.sub(&tractor::x_dense(&gh)).sup_norm());
        worst_x.1 = 1.0;
    }
    vec![
        CheckOutcome::from_residual(
            "tractor.projector_transform",
            "scale transformation of form-tractor slots follows the stated projector laws",
            worst.0,
            worst.1,
            ctx.tol,
        ),
        CheckOutcome::from_residual(
            "tractor.x_invariance",
            "the X injector is exactly conformally invariant",
            worst_x.0,
            worst_x.1,
            ctx.tol,
        ),
    ]
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

pub fn registry() -> &'static [CheckDef] {
    &[
        CheckDef {
            id: "curvature.christoffel",
            anchor: "Levi-Civita connection from the metric",
            suite: Suite::Curvature,
            run: check_christoffel,
        },
        CheckDef {
            id: "curvature.riemann_symmetries",
            anchor: "curvature tensor symmetries",
            suite: Suite::Curvature,
            run: check_riemann_symmetries,
        },
        CheckDef {
            id: "curvature.split_reconstruction",
            anchor: "trace-free Weyl / Schouten split of the curvature",
            suite: Suite::Curvature,
            run: check_curvature_split,
        },
        CheckDef {
            id: "curvature.weyl_tracefree",
            anchor: "totally trace-free Weyl curvature",
            suite: Suite::Curvature,
            run: check_weyl_tracefree,
        },
        CheckDef {
            id: "curvature.weyl_divergence",
            anchor: "divergence of the Weyl tensor against the Cotton tensor",
            suite: Suite::Curvature,
            run: check_weyl_divergence,
        },
        CheckDef {
            id: "curvature.second_bianchi",
            anchor: "second Bianchi identity in Weyl/Cotton form",
            suite: Suite::Curvature,
            run: check_second_bianchi,
        },
        CheckDef {
            id: "curvature.commutator_hash",
            anchor: "curvature acts on tensors through the hash action",
            suite: Suite::Curvature,
            run: check_commutator,
        },
        CheckDef {
            id: "curvature.conformally_flat",
            anchor: "conformally flat metrics have vanishing Weyl and Cotton tensors",
            suite: Suite::Curvature,
            run: check_cotton_conformally_flat,
        },
        CheckDef {
            id: "curvature.schouten_transform",
            anchor: "Schouten tensor transformation under rescaling",
            suite: Suite::Curvature,
            run: check_schouten_transform,
        },
        CheckDef {
            id: "curvature.weyl_invariance",
            anchor: "Weyl tensor as a weight-2 invariant",
            suite: Suite::Curvature,
            run: check_weyl_invariance,
        },
        CheckDef {
            id: "curvature.gradient_transform",
            anchor: "transformation laws of the connection on weighted fields",
            suite: Suite::Curvature,
            run: check_grad_transform,
        },
        CheckDef {
            id: "forms.projections",
            anchor: "projections onto conformal Killing target types",
            suite: Suite::Curvature,
            run: check_form_projections,
        },
        CheckDef {
            id: "forms.weyl_actions",
            anchor: "Weyl curvature actions on forms: types, vanishing, consistency",
            suite: Suite::Curvature,
            run: check_weyl_actions,
        },
        CheckDef {
            id: "forms.hodge",
            anchor: "Hodge star involution",
            suite: Suite::Curvature,
            run: check_hodge,
        },
        CheckDef {
            id: "tractor.metric",
            anchor: "tractor metric preservation and injector identities",
            suite: Suite::Tractor,
            run: check_tractor_metric,
        },
        CheckDef {
            id: "tractor.curvature",
            anchor: "tractor curvature formula against the commutator",
            suite: Suite::Tractor,
            run: check_tractor_curvature,
        },
        CheckDef {
            id: "tractor.d_operator",
            anchor: "invariance of the second-order splitting operator",
            suite: Suite::Tractor,
            run: check_tractor_d,
        },
        CheckDef {
            id: "tractor.form_roundtrip",
            anchor: "form tractor slot/dense conversion",
            suite: Suite::Tractor,
            run: check_form_tractor_roundtrip,
        },
        CheckDef {
            id: "tractor.normal_connection",
            anchor: "normal tractor connection on form tractors",
            suite: Suite::Tractor,
            run: check_normal_connection,
        },
        CheckDef {
            id: "tractor.projector_derivative",
            anchor: "derivative rules of the form projectors",
            suite: Suite::Tractor,
            run: check_projector_derivatives,
        },
        CheckDef {
            id: "tractor.scale_transform",
            anchor: "projector transformation under conformal rescaling",
            suite: Suite::Tractor,
            run: check_scale_transform,
        },
    ]
}
