//! Curvature-stack verification against independent oracles: hand-coded
//! Schwarzschild Christoffels with finite differences, the Kretschmann
//! scalar, unit-sphere curvature, and conformal transformation laws.

use ckforms::expr;
use ckforms::geometry::Geometry;
use ckforms::metric::{ExprField, MetricSpec, RescaleData};
use ckforms::tensor::{contract, trace, Slot, Tensor};
use ckforms::tensor::Scalar as _;

fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())),
        "{}: {} vs {} (tol {})",
        what,
        a,
        b,
        tol
    );
}

#[test]
fn flat_metric_is_flat() {
    let m = MetricSpec::flat(4, false);
    let g = Geometry::new(&m, &[0.3, -0.2, 0.7, 0.1], 3).unwrap();
    assert!(g.gamma.sup_norm() < 1e-14);
    assert!(g.riemann().sup_norm() < 1e-14);
    assert!(g.weyl().sup_norm() < 1e-14);
    assert!(g.cotton().sup_norm() < 1e-14);
    assert!(g.schouten().sup_norm() < 1e-14);
}

#[test]
fn conformal_christoffel_oracle() {
    // g = e^{2 x1} delta in n = 3: Gamma^a_bc = d^a_b U_c + d^a_c U_b - g_bc U^a
    let ups = expr::parse("x1", &ckforms::harness::coord_names(3)).unwrap();
    let m = MetricSpec::conf_flat(3, &ups);
    let p = [0.4, -0.3, 0.2];
    let g = Geometry::new(&m, &p, 2).unwrap();
    // U_a = (1, 0, 0); at any point Gamma^1_11 = 1
    assert_close(g.gamma.get(&[0, 0, 0]).value(), 1.0, 1e-12, "Gamma^1_11");
    // full oracle
    let e2u = (2.0f64 * p[0]).exp();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let du = |i: usize| if i == 0 { 1.0 } else { 0.0 };
                let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
                let expected = delta(a, b) * du(c) + delta(a, c) * du(b)
                    - e2u * delta(b, c) * (du(a) / e2u);
                assert_close(
                    g.gamma.get(&[a, b, c]).value(),
                    expected,
                    1e-12,
                    "conformal Christoffel",
                );
            }
        }
    }
}

#[test]
fn sphere_slice_christoffel() {
    // round 3-sphere in polar coordinates: g = diag(1, sin^2 th, sin^2 th sin^2 ph)
    let coords: Vec<String> = vec!["th".into(), "ph".into(), "ps".into()];
    let g11 = expr::parse("sin(th)^2", &coords).unwrap();
    let g22 = expr::parse("sin(th)^2*sin(ph)^2", &coords).unwrap();
    let mut grid = vec![vec![expr::parse("0", &coords).unwrap(); 3]; 3];
    grid[0][0] = expr::parse("1", &coords).unwrap();
    grid[1][1] = g11;
    grid[2][2] = g22;
    let m = MetricSpec {
        name: "sphere_polar".into(),
        n: 3,
        coords,
        signature: (3, 0),
        g: grid,
        sample_box: vec![(0.3, 2.8), (0.3, 2.8), (0.0, 6.0)],
        oriented: true,
    };
    let th = 0.9f64;
    let geo = Geometry::new(&m, &[th, 1.1, 0.5], 2).unwrap();
    // Gamma^th_{ph ph} = -sin th cos th
    assert_close(
        geo.gamma.get(&[0, 1, 1]).value(),
        -th.sin() * th.cos(),
        1e-12,
        "sphere Christoffel",
    );
    // unit sphere scalar curvature: J = n/2
    assert_close(geo.schouten_trace().value(), 1.5, 1e-10, "unit sphere J");
}

fn schwarzschild_hand_gamma(p: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let (r, th) = (p[1], p[2]);
    let mass = 1.0;
    let f = 1.0 - 2.0 * mass / r;
    let fp = 2.0 * mass / (r * r);
    let mut g = vec![vec![vec![0.0; 4]; 4]; 4];
    g[0][0][1] = fp / (2.0 * f); // Gamma^t_{tr}
    g[0][1][0] = g[0][0][1];
    g[1][0][0] = f * fp / 2.0; // Gamma^r_{tt}
    g[1][1][1] = -fp / (2.0 * f);
    g[1][2][2] = -r * f;
    g[1][3][3] = -r * f * th.sin() * th.sin();
    g[2][1][2] = 1.0 / r;
    g[2][2][1] = 1.0 / r;
    g[2][3][3] = -th.sin() * th.cos();
    g[3][1][3] = 1.0 / r;
    g[3][3][1] = 1.0 / r;
    g[3][2][3] = th.cos() / th.sin();
    g[3][3][2] = g[3][2][3];
    g
}

#[test]
fn schwarzschild_against_hand_oracle() {
    let m = MetricSpec::schwarzschild(1.0);
    let p = [0.3, 4.0, 1.1, 2.0];
    let geo = Geometry::new(&m, &p, 3).unwrap();

    // engine Christoffels vs the textbook closed forms
    let hand = schwarzschild_hand_gamma(&p);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                assert_close(
                    geo.gamma.get(&[a, b, c]).value(),
                    hand[a][b][c],
                    1e-10,
                    "Schwarzschild Christoffel",
                );
            }
        }
    }

    // Riemann via central finite differences of the hand-coded Christoffels
    let h = 1e-5;
    let dgamma = |dir: usize, a: usize, b: usize, c: usize| -> f64 {
        let mut pp = p;
        pp[dir] += h;
        let plus = schwarzschild_hand_gamma(&pp)[a][b][c];
        pp[dir] -= 2.0 * h;
        let minus = schwarzschild_hand_gamma(&pp)[a][b][c];
        (plus - minus) / (2.0 * h)
    };
    let hand_riemann_mixed = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        let mut acc = dgamma(a, c, b, d) - dgamma(b, c, a, d);
        for e in 0..4 {
            acc += hand[c][a][e] * hand[e][b][d] - hand[c][b][e] * hand[e][a][d];
        }
        acc
    };
    // lower the third index with the metric at p
    let f = 1.0 - 2.0 / p[1];
    let gdiag = [
        -f,
        1.0 / f,
        p[1] * p[1],
        p[1] * p[1] * p[2].sin() * p[2].sin(),
    ];
    let mut max_err: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let hand_low = gdiag[c] * hand_riemann_mixed(a, b, c, d);
                    let engine = geo.riemann().get(&[a, b, c, d]).value();
                    max_err = max_err.max((hand_low - engine).abs());
                }
            }
        }
    }
    assert!(max_err < 1e-6, "Riemann FD mismatch: {}", max_err);

    // Ricci flatness and a nonzero Weyl tensor
    assert!(geo.ricci().sup_norm() < 1e-9, "Schwarzschild is Ricci flat");
    assert!(geo.weyl().sup_norm() > 0.01, "Weyl is sizable at r = 4");

    // Kretschmann scalar 48 m^2 / r^6
    let riem = geo.riemann();
    let mut k = 0.0;
    for idx in riem.iter_indices() {
        let mut raised = 0.0;
        for jdx in riem.iter_indices() {
            let mut w = 1.0;
            for s in 0..4 {
                w *= geo.ginv.get(&[idx[s], jdx[s]]).value();
            }
            if w != 0.0 {
                raised += w * riem.get(&jdx).value();
            }
        }
        k += riem.get(&idx).value() * raised;
    }
    assert_close(k, 48.0 / p[1].powi(6), 1e-8, "Kretschmann scalar");
}

#[test]
fn conformally_flat_weyl_vanishes() {
    let ups = expr::parse(
        "x1/4 + sin(x2)/5 + x3*x1/8",
        &ckforms::harness::coord_names(4),
    )
    .unwrap();
    let m = MetricSpec::conf_flat(4, &ups);
    let geo = Geometry::new(&m, &[0.2, -0.4, 0.5, 0.1], 3).unwrap();
    let scale = geo.riemann().sup_norm().max(1.0);
    assert!(geo.weyl().sup_norm() < 1e-8 * scale);
    assert!(geo.cotton().sup_norm() < 1e-7 * scale);
}

#[test]
fn schouten_of_exponential_scale_at_origin() {
    // P-hat of e^{2 x1} delta at the origin equals d_a^1 d_b^1 - 1/2 d_ab
    let n = 4;
    let ups = expr::parse("x1", &ckforms::harness::coord_names(n)).unwrap();
    let m = MetricSpec::conf_flat(n, &ups);
    let geo = Geometry::new(&m, &[0.0; 4], 2).unwrap();
    for a in 0..n {
        for b in 0..n {
            let expected = if a == 0 && b == 0 { 1.0 - 0.5 } else if a == b { -0.5 } else { 0.0 };
            assert_close(
                geo.schouten().get(&[a, b]).value(),
                expected,
                1e-12,
                "rescaled Schouten",
            );
        }
    }
}

#[test]
fn weyl_divergence_identity_on_random_metrics() {
    use rand::SeedableRng;
    for n in [4usize, 5] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13 + n as u64);
        let m = MetricSpec::random_perturbed(n, 0.05, &mut rng);
        for trial in 0..3 {
            let p: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64) - 0.2 + 0.1 * trial as f64).collect();
            let geo = Geometry::new(&m, &p, 3).unwrap();
            let dc = geo.covariant_derivative(geo.weyl());
            let div = trace(&dc, 0, 1, &geo.ginv);
            let rhs = geo.cotton().scale(n as f64 - 3.0);
            let scale = dc.sup_norm().max(1e-3);
            assert!(
                div.sub(&rhs).sup_norm() <= 1e-6 * scale,
                "weyl divergence at n={}",
                n
            );
        }
    }
}

#[test]
fn covariant_derivative_commutator_equals_curvature() {
    use rand::SeedableRng;
    let n = 4;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let m = MetricSpec::random_perturbed(n, 0.05, &mut rng);
    let field = ExprField::new(
        n,
        1,
        0.0,
        (0..n).map(|_| ckforms::metric::random_poly2(n, &mut rng)).collect(),
    );
    let p = [0.1, -0.3, 0.2, 0.4];
    let geo = Geometry::new(&m, &p, 2).unwrap();
    let w = field.eval_jets(&p, 2).unwrap();
    let comm = geo.commutator(&w); // (a, b, e) = [na, nb] w_e
    // minus R_{ab}{}^d{}_e w_d: from the lowered tensor raise slot 2
    let riem = geo.riemann();
    let mut max_err: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for e in 0..n {
                let mut expected = 0.0f64;
                for d in 0..n {
                    for c in 0..n {
                        expected -= geo.ginv.get(&[d, c]).value()
                            * riem.get(&[a, b, c, e]).value()
                            * w.get(&[d]).value();
                    }
                }
                max_err = max_err.max((comm.get(&[a, b, e]).value() - expected).abs());
            }
        }
    }
    assert!(max_err < 1e-9, "commutator mismatch: {}", max_err);
}

#[test]
fn weighted_rescale_roundtrip() {
    // the representative of a weight-w field rescales by e^{w U}; check that
    // covariant derivatives in both scales match the general transformation
    let n = 4;
    let resc = RescaleData::new(
        expr::parse("x1/5 + x2*x2/10", &ckforms::harness::coord_names(n)).unwrap(),
    );
    let base = MetricSpec::flat(n, false);
    let hatted = resc.rescale_metric(&base);
    let p = [0.3, 0.1, -0.2, 0.5];
    let geo = Geometry::new(&base, &p, 2).unwrap();
    let geoh = Geometry::new(&hatted, &p, 2).unwrap();
    // scalar of weight 1: f-hat = e^U f
    let f = expr::parse("x1*x2 + 2", &ckforms::harness::coord_names(n)).unwrap();
    let fj = Tensor::scalar(n, f.eval_jet(&p, 2).unwrap());
    let wf = resc.weight_factor(1.0, &p, 2).unwrap();
    let fhat = fj.scale_by(&wf);
    let du: Vec<f64> = (0..n)
        .map(|i| resc.upsilon.diff(i).eval::<f64>(&p).unwrap())
        .collect();
    let dfh = geoh.covariant_derivative(&fhat);
    let df = geo.covariant_derivative(&fj);
    // law: (nabla-hat f)_a = e^{w U} (nabla_a f + w U_a f)
    let wf1 = resc.weight_factor(1.0, &p, 1).unwrap();
    for a in 0..n {
        let rhs = (df.get(&[a]).value() + du[a] * fj.get(&[]).value()) * wf1.value();
        assert_close(dfh.get(&[a]).value(), rhs, 1e-12, "weighted scalar law");
    }
}

#[test]
fn hodge_star_flat_examples() {
    let n = 4;
    let m = MetricSpec::flat(n, false);
    let geo = Geometry::new(&m, &[0.0; 4], 1).unwrap();
    let mets = ckforms::forms::Metrics {
        g: &geo.g,
        ginv: &geo.ginv,
        hinv: geo.hinv.as_ref(),
    };
    // star(dx1 ^ dx2) = dx3 ^ dx4
    let mut f = Tensor::zeros(n, &[Slot::Tangent, Slot::Tangent], geo.g.proto());
    let one = ckforms::jet::Jet::constant(1.0f64, n, 1);
    f.set(&[0, 1], one.clone());
    f.set(&[1, 0], one.neg());
    let (star, w) = ckforms::forms::hodge_star(&f, 3.0, &geo.vol, &mets);
    assert_close(star.get(&[2, 3]).value(), 1.0, 1e-13, "star components");
    assert_close(star.get(&[3, 2]).value(), -1.0, 1e-13, "star components");
    assert_close(star.get(&[0, 1]).value(), 0.0, 1e-13, "star components");
    assert_close(w, 4.0 - 4.0 + 3.0, 1e-13, "star weight shift");

    // star of 1 in n = 3 is the volume form
    let m3 = MetricSpec::flat(3, false);
    let geo3 = Geometry::new(&m3, &[0.0; 3], 1).unwrap();
    let mets3 = ckforms::forms::Metrics {
        g: &geo3.g,
        ginv: &geo3.ginv,
        hinv: geo3.hinv.as_ref(),
    };
    let one3 = Tensor::scalar(3, ckforms::jet::Jet::constant(1.0f64, 3, 1));
    let (vol3, _) = ckforms::forms::hodge_star(&one3, 0.0, &geo3.vol, &mets3);
    assert_close(vol3.get(&[0, 1, 2]).value(), 1.0, 1e-13, "volume form");
    assert_close(vol3.get(&[1, 0, 2]).value(), -1.0, 1e-13, "volume form");
}

#[test]
fn metric_validation_rejects_asymmetry() {
    let coords = ckforms::harness::coord_names(3);
    let mut g = vec![vec![expr::parse("0", &coords).unwrap(); 3]; 3];
    for i in 0..3 {
        g[i][i] = expr::parse("1", &coords).unwrap();
    }
    g[0][1] = expr::parse("x1", &coords).unwrap();
    g[1][0] = expr::parse("x2", &coords).unwrap();
    let m = MetricSpec {
        name: "bad".into(),
        n: 3,
        coords,
        signature: (3, 0),
        g,
        sample_box: vec![(-1.0, 1.0); 3],
        oriented: true,
    };
    assert!(m.validate().is_err());
}

#[test]
fn singular_metric_detected() {
    let coords = ckforms::harness::coord_names(3);
    let mut g = vec![vec![expr::parse("0", &coords).unwrap(); 3]; 3];
    g[0][0] = expr::parse("x1", &coords).unwrap(); // degenerate at x1 = 0
    g[1][1] = expr::parse("1", &coords).unwrap();
    g[2][2] = expr::parse("1", &coords).unwrap();
    let m = MetricSpec {
        name: "singular".into(),
        n: 3,
        coords,
        signature: (3, 0),
        g,
        sample_box: vec![(-1.0, 1.0); 3],
        oriented: true,
    };
    assert!(Geometry::new(&m, &[0.0, 0.5, 0.5], 1).is_err());
}

#[test]
fn lorentzian_flat_signature() {
    let m = MetricSpec::flat(4, true);
    let geo = Geometry::new(&m, &[0.1; 4], 2).unwrap();
    assert_eq!(geo.det_sign, -1.0);
    assert!(geo.riemann().sup_norm() < 1e-13);
    // contraction bookkeeping stays consistent with the inverse metric
    let z = contract(&geo.g, 0, &geo.g, 0, &geo.ginv);
    assert!(z.sub(&geo.g).sup_norm() < 1e-13);
}
