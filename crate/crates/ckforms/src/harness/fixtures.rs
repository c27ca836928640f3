//! Shared test fixtures: candidate solution forms, rescalings, and scales.

use num_traits::Float;
use rand::Rng;

use crate::expr::{self, Expr};
use crate::geometry::Geometry;
use crate::jet::Jet;
use crate::metric::{ExprField, MetricSpec, RescaleData};
use crate::prolong::FlatSolution;
use crate::tensor::Tensor;

/// A k-form field fixture evaluable to jets at a point, weight k+1 unless
/// stated otherwise.
pub enum SigmaFixture {
    /// Components given by expressions in the active chart.
    Expr(ExprField),
    /// Hodge dual of the base form, computed in-engine per point.
    HodgeOf(ExprField),
    /// Solution generated from a parallel flat tractor (optionally read in a
    /// conformally rescaled scale).
    Flat(FlatSolution, Option<RescaleData>),
}

impl SigmaFixture {
    pub fn rank(&self, n: usize) -> usize {
        match self {
            SigmaFixture::Expr(f) => f.rank,
            SigmaFixture::HodgeOf(f) => n - f.rank,
            SigmaFixture::Flat(s, _) => s.k,
        }
    }

    pub fn eval<T: Float>(
        &self,
        metric: &MetricSpec,
        p: &[T],
        order: usize,
    ) -> Tensor<Jet<T>> {
        match self {
            SigmaFixture::Expr(f) => f.eval_jets(p, order).expect("fixture eval"),
            SigmaFixture::HodgeOf(f) => {
                let geo = Geometry::new(metric, p, order).expect("fixture geometry");
                let base = f.eval_jets(p, order).expect("fixture eval");
                let m = crate::forms::Metrics {
                    g: &geo.g,
                    ginv: &geo.ginv,
                    hinv: geo.hinv.as_ref(),
                };
                let (dual, _w) = crate::forms::hodge_star(&base, f.weight, &geo.vol, &m);
                dual
            }
            SigmaFixture::Flat(sol, resc) => {
                let flat = MetricSpec::flat(sol.n, false);
                let geo = Geometry::new(&flat, p, order).expect("flat geometry");
                sol.sigma_at(&geo, resc.as_ref(), order)
            }
        }
    }
}

/// Killing-Yano 2-form of the Schwarzschild chart: f_{th ph} = r^3 sin(th).
pub fn schwarzschild_ky() -> ExprField {
    let coords: Vec<String> = vec!["t".into(), "r".into(), "th".into(), "ph".into()];
    let mut f = ExprField::zero(4, 2, 3.0);
    f.antisym = true;
    let comp = expr::parse("r^3*sin(th)", &coords).expect("KY component");
    f.set_form_component(&[2, 3], comp);
    f
}

/// Flat conformal Killing one-forms (weight-2 representatives).
pub fn flat_ckv(n: usize, which: FlatCkv) -> ExprField {
    let mut f = ExprField::zero(n, 1, 2.0);
    match which {
        FlatCkv::Translation(b) => {
            f.comps[b] = Expr::one();
        }
        FlatCkv::Rotation(i, j) => {
            // sigma_a = L_ab x^b with L = e_i ^ e_j
            f.comps[i] = Expr::coord(j);
            f.comps[j] = Expr::neg(&Expr::coord(i));
        }
        FlatCkv::Dilation => {
            for a in 0..n {
                f.comps[a] = Expr::coord(a);
            }
        }
        FlatCkv::SpecialConformal(b) => {
            // sigma_a = 2 x_a x_b - |x|^2 delta_ab
            let mut norm2 = Expr::zero();
            for i in 0..n {
                norm2 = Expr::add(&norm2, &Expr::mul(&Expr::coord(i), &Expr::coord(i)));
            }
            for a in 0..n {
                let two_xa_xb = Expr::mul(
                    &Expr::int(2),
                    &Expr::mul(&Expr::coord(a), &Expr::coord(b)),
                );
                f.comps[a] = if a == b {
                    Expr::sub(&two_xa_xb, &norm2)
                } else {
                    two_xa_xb
                };
            }
        }
    }
    f
}

#[derive(Clone, Copy)]
pub enum FlatCkv {
    Translation(usize),
    Rotation(usize, usize),
    Dilation,
    SpecialConformal(usize),
}

/// A smooth rescaling fixture with bounded derivatives on the sample boxes.
pub fn rescaling(n: usize, rng: &mut impl Rng) -> RescaleData {
    let coords = crate::harness::coord_names(n);
    let c1 = 0.05 + 0.1 * rng.gen::<f64>();
    let c2 = 0.05 + 0.1 * rng.gen::<f64>();
    let i = rng.gen_range(0..n) + 1;
    let j = rng.gen_range(0..n) + 1;
    let src = format!("{:.6}*x{} + {:.6}*sin(x{})", c1, i, c2, j);
    RescaleData::new(expr::parse(&src, &coords).expect("rescaling fixture"))
}

/// Constant-coefficient rescaling for exactness checks.
pub fn linear_rescaling(n: usize, slope: f64, axis: usize) -> RescaleData {
    let coords = crate::harness::coord_names(n);
    let src = format!("{:.6}*x{}", slope, axis + 1);
    RescaleData::new(expr::parse(&src, &coords).expect("rescaling fixture"))
}

/// Random antisymmetric polynomial form, weight k+1.
pub fn random_form(n: usize, k: usize, rng: &mut impl Rng) -> ExprField {
    ExprField::random_form(n, k, k as f64 + 1.0, rng)
}

/// Quadratic almost-Einstein scales of the flat metric: a + b.x + c|x|^2.
pub fn flat_einstein_scale(n: usize, a: f64, b: &[f64], c: f64) -> Expr {
    let mut acc = Expr::constant(a);
    for i in 0..n {
        acc = Expr::add(&acc, &Expr::mul(&Expr::constant(b[i]), &Expr::coord(i)));
        acc = Expr::add(
            &acc,
            &Expr::mul(
                &Expr::constant(c),
                &Expr::mul(&Expr::coord(i), &Expr::coord(i)),
            ),
        );
    }
    acc
}

/// All basis index sets for flat parallel (k+1)-form tractors.
pub fn flat_basis_sets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..=k).collect();
    loop {
        out.push(idx.clone());
        // next strictly increasing (k+1)-subset of 0..n+2
        let mut i = k + 1;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] + 1 <= n + 1 - (k - i) {
                idx[i] += 1;
                for j in (i + 1)..=k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Binomial coefficient, used for solution-space dimension counts.
pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}
