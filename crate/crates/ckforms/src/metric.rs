//! Metric specifications and symbolic tensor fields.
//!
//! A [`MetricSpec`] is a symmetric grid of expressions over named chart
//! coordinates, with signature metadata and a sampling box.  Built-in metrics
//! cover the flat, conformally flat, stereographic-sphere and Schwarzschild
//! charts used by the verification suites; arbitrary metrics load from
//! TOML/JSON files (see the harness).

use num_traits::Float;
use rand::Rng;

use crate::expr::{self, Expr, ExprError, ExprResult};
use crate::jet::Jet;
use crate::tensor::{IndexIter, Slot, Tensor};

/// Symmetric metric grid with chart metadata.
#[derive(Clone)]
pub struct MetricSpec {
    pub name: String,
    pub n: usize,
    pub coords: Vec<String>,
    /// (number of +1 directions, number of -1 directions); negatives first on
    /// the diagonal of the flat model.
    pub signature: (usize, usize),
    pub g: Vec<Vec<Expr>>,
    /// Per-coordinate sampling interval for random points.
    pub sample_box: Vec<(f64, f64)>,
    pub oriented: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("metric component ({i},{j}): {source}")]
    Component {
        i: usize,
        j: usize,
        source: ExprError,
    },
    #[error("metric grid is not symmetric: g[{i}][{j}] != g[{j}][{i}]")]
    NotSymmetric { i: usize, j: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("signature ({p},{q}) does not match dimension {n}")]
    Signature { p: usize, q: usize, n: usize },
}

fn default_coords(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{}", i)).collect()
}

impl MetricSpec {
    /// Validate symmetry by sampling; expression grids rarely match textually.
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.g.len() != self.n || self.g.iter().any(|row| row.len() != self.n) {
            return Err(MetricError::Dimension {
                expected: self.n,
                found: self.g.len(),
            });
        }
        let (p, q) = self.signature;
        if p + q != self.n {
            return Err(MetricError::Signature { p, q, n: self.n });
        }
        let probes: Vec<Vec<f64>> = (0..4)
            .map(|t| {
                self.sample_box
                    .iter()
                    .enumerate()
                    .map(|(i, (lo, hi))| {
                        let frac = (0.13 + 0.19 * t as f64 + 0.07 * i as f64) % 0.9;
                        lo + (hi - lo) * (0.05 + frac)
                    })
                    .collect()
            })
            .collect();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                for pt in &probes {
                    let a = self.g[i][j]
                        .eval::<f64>(pt)
                        .map_err(|source| MetricError::Component { i, j, source })?;
                    let b = self.g[j][i]
                        .eval::<f64>(pt)
                        .map_err(|source| MetricError::Component { i: j, j: i, source })?;
                    if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                        return Err(MetricError::NotSymmetric { i, j });
                    }
                }
            }
        }
        Ok(())
    }

    /// Metric component jets at a point.
    pub fn eval_jets<T: Float>(&self, p: &[T], order: usize) -> ExprResult<Tensor<Jet<T>>> {
        let mut comps = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                comps.push(self.g[i][j].eval_jet(p, order)?);
            }
        }
        let n = self.n;
        Ok(Tensor::from_fn(n, &[Slot::Tangent, Slot::Tangent], |idx| {
            comps[idx[0] * n + idx[1]].clone()
        }))
    }

    /// Flat metric; `lorentzian` puts one -1 first on the diagonal.
    pub fn flat(n: usize, lorentzian: bool) -> MetricSpec {
        let g = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i != j {
                            Expr::zero()
                        } else if lorentzian && i == 0 {
                            Expr::int(-1)
                        } else {
                            Expr::one()
                        }
                    })
                    .collect()
            })
            .collect();
        MetricSpec {
            name: if lorentzian {
                format!("flat_lorentzian({})", n)
            } else {
                format!("flat({})", n)
            },
            n,
            coords: default_coords(n),
            signature: if lorentzian { (n - 1, 1) } else { (n, 0) },
            g,
            sample_box: vec![(-1.0, 1.0); n],
            oriented: true,
        }
    }

    /// Conformally flat metric e^{2 upsilon} * delta.
    pub fn conf_flat(n: usize, upsilon: &Expr) -> MetricSpec {
        let factor = Expr::exp(&Expr::mul(&Expr::int(2), upsilon));
        let g = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { factor.clone() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        MetricSpec {
            name: format!("conf_flat({})", n),
            n,
            coords: default_coords(n),
            signature: (n, 0),
            g,
            sample_box: vec![(-1.0, 1.0); n],
            oriented: true,
        }
    }

    /// Round sphere in the stereographic chart: 4/(1+|x|^2)^2 * delta.
    pub fn sphere_stereographic(n: usize) -> MetricSpec {
        let coords = default_coords(n);
        let mut norm2 = Expr::zero();
        for i in 0..n {
            let xi = Expr::coord(i);
            norm2 = Expr::add(&norm2, &Expr::mul(&xi, &xi));
        }
        let denom = Expr::add(&Expr::one(), &norm2);
        let factor = Expr::mul(&Expr::int(4), &Expr::pow(&denom, -2.0));
        let g = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { factor.clone() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        MetricSpec {
            name: format!("sphere_stereographic({})", n),
            n,
            coords,
            signature: (n, 0),
            g,
            sample_box: vec![(-1.0, 1.0); n],
            oriented: true,
        }
    }

    /// Schwarzschild in the static chart (t, r, theta, phi), n = 4.
    pub fn schwarzschild(mass: f64) -> MetricSpec {
        let coords = vec!["t".into(), "r".into(), "th".into(), "ph".into()];
        let src_f = format!("1 - {}/r", 2.0 * mass);
        let f = expr::parse(&src_f, &coords).unwrap();
        let r = Expr::coord(1);
        let th = Expr::coord(2);
        let mut g = vec![vec![Expr::zero(); 4]; 4];
        g[0][0] = Expr::neg(&f);
        g[1][1] = Expr::pow(&f, -1.0);
        g[2][2] = Expr::mul(&r, &r);
        let sth = Expr::sin(&th);
        g[3][3] = Expr::mul(&Expr::mul(&r, &r), &Expr::mul(&sth, &sth));
        MetricSpec {
            name: format!("schwarzschild({})", mass),
            n: 4,
            coords,
            signature: (3, 1),
            g,
            sample_box: vec![
                (-1.0, 1.0),
                (3.0, 8.0),
                (0.4, std::f64::consts::PI - 0.4),
                (0.3, 2.0 * std::f64::consts::PI - 0.3),
            ],
            oriented: true,
        }
    }

    /// delta + eps * S(x) with S symmetric, random polynomial entries of
    /// degree <= 2; nondegenerate on the unit box for small eps.
    pub fn random_perturbed(n: usize, eps: f64, rng: &mut impl Rng) -> MetricSpec {
        let mut g = vec![vec![Expr::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let poly = random_poly2(n, rng);
                let entry = Expr::mul(&Expr::constant(eps), &poly);
                let entry = if i == j {
                    Expr::add(&Expr::one(), &entry)
                } else {
                    entry
                };
                g[i][j] = entry.clone();
                g[j][i] = entry;
            }
        }
        MetricSpec {
            name: format!("random_perturbed({})", n),
            n,
            coords: default_coords(n),
            signature: (n, 0),
            g,
            sample_box: vec![(-1.0, 1.0); n],
            oriented: true,
        }
    }
}

/// Random polynomial of total degree <= 2 with coefficients in [-1, 1].
pub fn random_poly2(n: usize, rng: &mut impl Rng) -> Expr {
    let mut acc = Expr::constant(rng.gen_range(-1.0..1.0));
    for i in 0..n {
        let xi = Expr::coord(i);
        acc = Expr::add(
            &acc,
            &Expr::mul(&Expr::constant(rng.gen_range(-1.0..1.0)), &xi),
        );
        for j in i..n {
            let xij = Expr::mul(&xi, &Expr::coord(j));
            acc = Expr::add(
                &acc,
                &Expr::mul(&Expr::constant(rng.gen_range(-1.0..1.0)), &xij),
            );
        }
    }
    acc
}

/// Conformal rescaling data: the scale function and its exact derivatives.
#[derive(Clone)]
pub struct RescaleData {
    pub upsilon: Expr,
}

impl RescaleData {
    pub fn new(upsilon: Expr) -> RescaleData {
        RescaleData { upsilon }
    }

    pub fn zero() -> RescaleData {
        RescaleData {
            upsilon: Expr::zero(),
        }
    }

    /// ghat = e^{2 upsilon} g, applied symbolically.
    pub fn rescale_metric(&self, m: &MetricSpec) -> MetricSpec {
        let factor = Expr::exp(&Expr::mul(&Expr::int(2), &self.upsilon));
        let g = m
            .g
            .iter()
            .map(|row| row.iter().map(|e| Expr::mul(&factor, e)).collect())
            .collect();
        MetricSpec {
            name: format!("{}^rescaled", m.name),
            g,
            ..m.clone()
        }
    }

    /// e^{w upsilon} as a jet at `p`.
    pub fn weight_factor<T: Float>(&self, w: f64, p: &[T], order: usize) -> ExprResult<Jet<T>> {
        Expr::exp(&Expr::mul(&Expr::constant(w), &self.upsilon)).eval_jet(p, order)
    }

    /// Jet of upsilon itself.
    pub fn upsilon_jet<T: Float>(&self, p: &[T], order: usize) -> ExprResult<Jet<T>> {
        self.upsilon.eval_jet(p, order)
    }
}

/// A covariant tensor field given by a grid of expressions, with a conformal
/// weight carried as metadata.  Components are representatives in the scale
/// the caller is working in.
#[derive(Clone)]
pub struct ExprField {
    pub n: usize,
    pub rank: usize,
    pub weight: f64,
    pub comps: Vec<Expr>,
    /// Antisymmetrize on evaluation (form fields are stored this way).
    pub antisym: bool,
}

impl ExprField {
    pub fn new(n: usize, rank: usize, weight: f64, comps: Vec<Expr>) -> ExprField {
        assert_eq!(comps.len(), n.pow(rank as u32));
        ExprField {
            n,
            rank,
            weight,
            comps,
            antisym: false,
        }
    }

    pub fn form(n: usize, rank: usize, weight: f64, comps: Vec<Expr>) -> ExprField {
        let mut f = ExprField::new(n, rank, weight, comps);
        f.antisym = true;
        f
    }

    pub fn zero(n: usize, rank: usize, weight: f64) -> ExprField {
        ExprField::new(n, rank, weight, vec![Expr::zero(); n.pow(rank as u32)])
    }

    pub fn scalar(n: usize, weight: f64, e: Expr) -> ExprField {
        ExprField {
            n,
            rank: 0,
            weight,
            comps: vec![e],
            antisym: false,
        }
    }

    /// Set a component and, for forms, all images under index permutations.
    pub fn set_form_component(&mut self, idx: &[usize], e: Expr) {
        assert!(self.antisym);
        for (perm, sign) in crate::tensor::signed_permutations(self.rank) {
            let permuted: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
            let off = self.offset(&permuted);
            self.comps[off] = if sign > 0.0 { e.clone() } else { Expr::neg(&e) };
        }
    }

    fn offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        for &i in idx {
            off = off * self.n + i;
        }
        off
    }

    pub fn eval_jets<T: Float>(&self, p: &[T], order: usize) -> ExprResult<Tensor<Jet<T>>> {
        let slots = vec![Slot::Tangent; self.rank];
        let mut vals = Vec::with_capacity(self.comps.len());
        for e in &self.comps {
            vals.push(e.eval_jet(p, order)?);
        }
        let t = if self.rank == 0 {
            Tensor::scalar(self.n, vals[0].clone())
        } else {
            let n = self.n;
            let rank = self.rank;
            Tensor::from_fn(n, &slots, |idx| {
                let mut off = 0;
                for &i in &idx[..rank] {
                    off = off * n + i;
                }
                vals[off].clone()
            })
        };
        Ok(if self.antisym && self.rank >= 2 {
            let subset: Vec<usize> = (0..self.rank).collect();
            t.antisymmetrize(&subset)
        } else {
            t
        })
    }

    /// Random form with polynomial components of degree <= 2.
    pub fn random_form(n: usize, rank: usize, weight: f64, rng: &mut impl Rng) -> ExprField {
        let mut f = ExprField::zero(n, rank, weight);
        f.antisym = true;
        if rank == 0 {
            f.comps[0] = random_poly2(n, rng);
            return f;
        }
        for idx in IndexIter::new(vec![n; rank]) {
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            let strictly_increasing = sorted.windows(2).all(|w| w[0] < w[1]);
            if strictly_increasing && idx == sorted {
                f.set_form_component(&idx, random_poly2(n, rng));
            }
        }
        f
    }
}
