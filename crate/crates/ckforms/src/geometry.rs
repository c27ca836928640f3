//! Per-point curvature stack and covariant differentiation.
//!
//! [`Geometry`] evaluates a [`MetricSpec`] at a point into jets and assembles
//! the Levi-Civita connection, Riemann, Ricci, Schouten, Weyl and Cotton
//! tensors, together with the tractor metric and tractor connection
//! coefficients.  Jet orders decrease as derivatives are taken: with metric
//! jets of order `m`, Christoffels have order `m-1`, curvature `m-2`, Cotton
//! `m-3`.  Weighted fields are represented in the active scale, so their
//! covariant derivative is the plain Levi-Civita derivative of components.

use num_traits::Float;

use crate::jet::Jet;
use crate::metric::MetricSpec;
use crate::tensor::{Scalar, Slot, Tensor};

#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    #[error("singular metric at sample point (|det g| = {det})")]
    SingularMetric { det: f64 },
    #[error("metric jet order {have} is too low: {context} needs {needed}")]
    JetOrder {
        have: usize,
        needed: usize,
        context: &'static str,
    },
    #[error("expression evaluation failed: {0}")]
    Expr(#[from] crate::expr::ExprError),
}

pub type GeomResult<T> = Result<T, GeomError>;

/// Curvature data and connection coefficients of a metric at one point.
pub struct Geometry<T: Float> {
    pub n: usize,
    pub order: usize,
    pub point: Vec<T>,
    pub g: Tensor<Jet<T>>,
    pub ginv: Tensor<Jet<T>>,
    /// sqrt |det g| with jets, and the sign of det g.
    pub vol: Jet<T>,
    pub det_sign: f64,
    /// Christoffel symbols, mixed: slot layout (c up, a, b).
    pub gamma: Tensor<Jet<T>>,
    /// Riemann with all indices down, slot layout (a, b, c, d) from
    /// [nabla_a, nabla_b] v^c = R_ab^c_d v^d lowered in the third slot.
    pub riemann: Option<Tensor<Jet<T>>>,
    pub ricci: Option<Tensor<Jet<T>>>,
    pub schouten: Option<Tensor<Jet<T>>>,
    pub schouten_trace: Option<Jet<T>>,
    pub weyl: Option<Tensor<Jet<T>>>,
    pub cotton: Option<Tensor<Jet<T>>>,
    /// Tractor metric (covariant) and its inverse.
    pub h: Option<Tensor<Jet<T>>>,
    pub hinv: Option<Tensor<Jet<T>>>,
    /// Tractor connection coefficients, slot layout (p, D up, C down).
    pub lam: Option<Tensor<Jet<T>>>,
}

fn jet_matrix_inverse_det<T: Float>(
    g: &Tensor<Jet<T>>,
) -> GeomResult<(Tensor<Jet<T>>, Jet<T>, f64)> {
    let n = g.n();
    let proto = g.proto();
    // Gauss-Jordan with partial pivoting on jet values.
    let mut a: Vec<Vec<Jet<T>>> = (0..n)
        .map(|i| (0..n).map(|j| g.get(&[i, j]).clone()).collect())
        .collect();
    let mut inv: Vec<Vec<Jet<T>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Jet::constant(T::one(), proto.nvars(), proto.order())
                    } else {
                        proto.zero_like()
                    }
                })
                .collect()
        })
        .collect();
    let mut det = Jet::constant(T::one(), proto.nvars(), proto.order());
    let mut det_sign = 1.0;
    for col in 0..n {
        let (pivot_row, pivot_val) = (col..n)
            .map(|r| (r, a[r][col].value().to_f64().unwrap().abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_val < 1e-300 {
            return Err(GeomError::SingularMetric { det: 0.0 });
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            inv.swap(pivot_row, col);
            det_sign = -det_sign;
        }
        let pivot = a[col][col].clone();
        det = det.mul(&pivot);
        let pinv = pivot.recip();
        for j in 0..n {
            a[col][j] = a[col][j].mul(&pinv);
            inv[col][j] = inv[col][j].mul(&pinv);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].sub(&f.mul(&a[col][j]));
                inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    let dv = det.value().to_f64().unwrap() * det_sign;
    if dv.abs() < 1e-12 {
        return Err(GeomError::SingularMetric { det: dv });
    }
    let out = Tensor::from_fn(n, &[Slot::Tangent, Slot::Tangent], |i| {
        inv[i[0]][i[1]].clone()
    });
    let sign = if dv < 0.0 { -1.0 } else { 1.0 };
    Ok((out, det.scale(T::from(det_sign).unwrap()), sign))
}

impl<T: Float> Geometry<T> {
    /// Build the stack at `p` with metric jets of the given order.
    pub fn new(metric: &MetricSpec, p: &[T], order: usize) -> GeomResult<Geometry<T>> {
        let n = metric.n;
        let g = metric.eval_jets(p, order)?;
        let (ginv, det, det_sign) = jet_matrix_inverse_det(&g)?;
        let vol = det.scale(T::from(det_sign).unwrap()).sqrt();

        // Christoffel of the first kind, then raise: Gamma^c_ab.
        let gamma = if order >= 1 {
            let half = T::from(0.5).unwrap();
            let dg = partial_tensor(&g); // (p, a, b) = d_p g_ab
            let first = Tensor::from_fn(n, &[Slot::Tangent; 3], |i| {
                // Gamma_{c,ab} = 1/2 (d_a g_cb + d_b g_ca - d_c g_ab)
                let (c, a, b) = (i[0], i[1], i[2]);
                dg.get(&[a, c, b])
                    .add(dg.get(&[b, c, a]))
                    .sub(dg.get(&[c, a, b]))
                    .scale(half)
            });
            Tensor::from_fn(n, &[Slot::Tangent; 3], |i| {
                let (c, a, b) = (i[0], i[1], i[2]);
                let mut acc = first.get(&[0, a, b]).zero_like();
                for e in 0..n {
                    acc = acc.add(&ginv.get(&[c, e]).mul(first.get(&[e, a, b])));
                }
                acc
            })
        } else {
            Tensor::zeros(n, &[Slot::Tangent; 3], g.proto())
        };

        let mut geo = Geometry {
            n,
            order,
            point: p.to_vec(),
            g,
            ginv,
            vol,
            det_sign,
            gamma,
            riemann: None,
            ricci: None,
            schouten: None,
            schouten_trace: None,
            weyl: None,
            cotton: None,
            h: None,
            hinv: None,
            lam: None,
        };
        if order >= 2 {
            geo.build_curvature();
            geo.build_tractor_data();
        }
        if order >= 3 {
            geo.build_cotton();
        }
        Ok(geo)
    }

    fn build_curvature(&mut self) {
        let n = self.n;
        let dgamma = partial_tensor(&self.gamma); // (p, c, a, b)
        let gamma = &self.gamma;
        // R_ab^c_d = d_a Gamma^c_bd - d_b Gamma^c_ad
        //           + Gamma^c_ae Gamma^e_bd - Gamma^c_be Gamma^e_ad
        let riemann_mixed = Tensor::from_fn(n, &[Slot::Tangent; 4], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut acc = dgamma
                .get(&[a, c, b, d])
                .sub(dgamma.get(&[b, c, a, d]));
            for e in 0..n {
                acc = acc.add(&gamma.get(&[c, a, e]).mul(gamma.get(&[e, b, d])));
                acc = acc.sub(&gamma.get(&[c, b, e]).mul(gamma.get(&[e, a, d])));
            }
            acc
        });
        let g = &self.g;
        let riemann = Tensor::from_fn(n, &[Slot::Tangent; 4], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut acc = g.proto().zero_like();
            for e in 0..n {
                acc = acc.add(&g.get(&[c, e]).mul(riemann_mixed.get(&[a, b, e, d])));
            }
            acc
        });
        // Ric_bd = R_cb^c_d
        let ricci = Tensor::from_fn(n, &[Slot::Tangent; 2], |i| {
            let (b, d) = (i[0], i[1]);
            let mut acc = g.proto().zero_like();
            for c in 0..n {
                acc = acc.add(riemann_mixed.get(&[c, b, c, d]));
            }
            acc
        });
        let mut scal = g.proto().zero_like();
        for b in 0..n {
            for d in 0..n {
                scal = scal.add(&self.ginv.get(&[b, d]).mul(ricci.get(&[b, d])));
            }
        }
        let nf = n as f64;
        let j = scal.scale(T::from(1.0 / (2.0 * (nf - 1.0))).unwrap());
        let schouten = Tensor::from_fn(n, &[Slot::Tangent; 2], |i| {
            ricci
                .get(&[i[0], i[1]])
                .sub(&j.mul(g.get(&[i[0], i[1]])))
                .scale(T::from(1.0 / (nf - 2.0)).unwrap())
        });
        // Weyl by subtracting the Schouten terms of the curvature split.
        let weyl = Tensor::from_fn(n, &[Slot::Tangent; 4], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let gp = |x: usize, y: usize, u: usize, v: usize| {
                g.get(&[x, y]).mul(schouten.get(&[u, v]))
            };
            riemann
                .get(&[a, b, c, d])
                .sub(&gp(c, a, b, d))
                .add(&gp(c, b, a, d))
                .sub(&gp(d, b, a, c))
                .add(&gp(d, a, b, c))
        });
        self.riemann = Some(riemann);
        self.ricci = Some(ricci);
        self.schouten = Some(schouten);
        self.schouten_trace = Some(j);
        self.weyl = Some(weyl);
    }

    fn build_cotton(&mut self) {
        let n = self.n;
        let dp = self.covariant_derivative(self.schouten.as_ref().unwrap());
        // A_abc = nabla_b P_ca - nabla_c P_ba
        let cotton = Tensor::from_fn(n, &[Slot::Tangent; 3], |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            dp.get(&[b, c, a]).sub(dp.get(&[c, b, a]))
        });
        self.cotton = Some(cotton);
    }

    fn build_tractor_data(&mut self) {
        let n = self.n;
        let g = &self.g;
        let zero = g.proto().zero_like();
        let one = Jet::constant(T::one(), zero.nvars(), zero.order());
        let h = Tensor::from_fn(n, &[Slot::Tractor, Slot::Tractor], |i| {
            let (a, b) = (i[0], i[1]);
            if a == 0 && b == n + 1 || a == n + 1 && b == 0 {
                one.clone()
            } else if a >= 1 && a <= n && b >= 1 && b <= n {
                g.get(&[a - 1, b - 1]).clone()
            } else {
                zero.clone()
            }
        });
        let ginv = &self.ginv;
        let hinv = Tensor::from_fn(n, &[Slot::Tractor, Slot::Tractor], |i| {
            let (a, b) = (i[0], i[1]);
            if a == 0 && b == n + 1 || a == n + 1 && b == 0 {
                one.clone()
            } else if a >= 1 && a <= n && b >= 1 && b <= n {
                ginv.get(&[a - 1, b - 1]).clone()
            } else {
                zero.clone()
            }
        });
        // Connection action on covariant dense tractors [tau, mu_c, alpha]:
        //   (nabla_p V)_C = d_p V_C - Lam_p^D_C V_D
        let schouten = self.schouten.as_ref().unwrap();
        let p_raised = Tensor::from_fn(n, &[Slot::Tangent; 2], |i| {
            let mut acc = zero.zero_like();
            for e in 0..n {
                acc = acc.add(&ginv.get(&[i[0], e]).mul(schouten.get(&[e, i[1]])));
            }
            acc
        });
        let gamma = &self.gamma;
        let lam = Tensor::from_fn(n, &[Slot::Tangent, Slot::Tractor, Slot::Tractor], |i| {
            let (p, dd, cc) = (i[0], i[1], i[2]);
            if cc == 0 {
                // tau row: - P_p^c mu_c
                if (1..=n).contains(&dd) {
                    p_raised.get(&[dd - 1, p]).clone()
                } else {
                    zero.clone()
                }
            } else if cc <= n {
                let c = cc - 1;
                if dd == 0 {
                    g.get(&[p, c]).neg()
                } else if dd <= n {
                    gamma.get(&[dd - 1, p, c]).clone()
                } else {
                    schouten.get(&[p, c]).neg()
                }
            } else {
                // alpha row: - mu_p
                if dd == p + 1 {
                    one.clone()
                } else {
                    zero.clone()
                }
            }
        });
        self.h = Some(h);
        self.hinv = Some(hinv);
        self.lam = Some(lam);
    }

    /// Weyl tensor, or an exact zero grid when n = 3 (where it vanishes).
    pub fn weyl(&self) -> &Tensor<Jet<T>> {
        self.weyl.as_ref().expect("curvature needs metric jets >= 2")
    }

    pub fn schouten(&self) -> &Tensor<Jet<T>> {
        self.schouten
            .as_ref()
            .expect("curvature needs metric jets >= 2")
    }

    pub fn schouten_trace(&self) -> &Jet<T> {
        self.schouten_trace
            .as_ref()
            .expect("curvature needs metric jets >= 2")
    }

    pub fn riemann(&self) -> &Tensor<Jet<T>> {
        self.riemann
            .as_ref()
            .expect("curvature needs metric jets >= 2")
    }

    pub fn ricci(&self) -> &Tensor<Jet<T>> {
        self.ricci
            .as_ref()
            .expect("curvature needs metric jets >= 2")
    }

    pub fn cotton(&self) -> &Tensor<Jet<T>> {
        self.cotton
            .as_ref()
            .expect("Cotton tensor needs metric jets >= 3")
    }

    pub fn h(&self) -> &Tensor<Jet<T>> {
        self.h.as_ref().expect("tractor data needs metric jets >= 2")
    }

    pub fn hinv(&self) -> &Tensor<Jet<T>> {
        self.hinv
            .as_ref()
            .expect("tractor data needs metric jets >= 2")
    }

    pub fn lam(&self) -> &Tensor<Jet<T>> {
        self.lam
            .as_ref()
            .expect("tractor data needs metric jets >= 2")
    }

    /// Inverse-metric pair for a slot kind.
    pub fn inv_for(&self, slot: Slot) -> &Tensor<Jet<T>> {
        match slot {
            Slot::Tangent => &self.ginv,
            Slot::Tractor => self.hinv(),
        }
    }

    /// Covariant derivative; result slot 0 is the derivative direction.
    /// Tangent slots get Christoffel terms, tractor slots the tractor
    /// connection.  Consumes one jet order.
    pub fn covariant_derivative(&self, t: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
        let n = self.n;
        let dt = partial_tensor(t);
        let mut slots = vec![Slot::Tangent];
        slots.extend_from_slice(t.slots());
        let lam = self.lam.as_ref();
        Tensor::from_fn(n, &slots, |idx| {
            let p = idx[0];
            let inner = &idx[1..];
            let mut acc = dt.get(idx).clone();
            let mut probe = inner.to_vec();
            for (i, &slot) in t.slots().iter().enumerate() {
                match slot {
                    Slot::Tangent => {
                        let b = inner[i];
                        for d in 0..n {
                            probe[i] = d;
                            acc = acc.sub(&self.gamma.get(&[d, p, b]).mul(t.get(&probe)));
                        }
                    }
                    Slot::Tractor => {
                        let c = inner[i];
                        let lam = lam.expect("tractor slots need metric jets >= 2");
                        for d in 0..(n + 2) {
                            probe[i] = d;
                            acc = acc.sub(&lam.get(&[p, d, c]).mul(t.get(&probe)));
                        }
                    }
                }
                probe[i] = inner[i];
            }
            acc
        })
    }

    /// Covariant derivative treating the listed tangent slots as
    /// contravariant (their Christoffel term flips sign and orientation).
    pub fn covariant_derivative_up(
        &self,
        t: &Tensor<Jet<T>>,
        up_slots: &[usize],
    ) -> Tensor<Jet<T>> {
        let n = self.n;
        let dt = partial_tensor(t);
        let mut slots = vec![Slot::Tangent];
        slots.extend_from_slice(t.slots());
        let lam = self.lam.as_ref();
        Tensor::from_fn(n, &slots, |idx| {
            let p = idx[0];
            let inner = &idx[1..];
            let mut acc = dt.get(idx).clone();
            let mut probe = inner.to_vec();
            for (i, &slot) in t.slots().iter().enumerate() {
                match slot {
                    Slot::Tangent => {
                        let b = inner[i];
                        if up_slots.contains(&i) {
                            for d in 0..n {
                                probe[i] = d;
                                acc = acc.add(&self.gamma.get(&[b, p, d]).mul(t.get(&probe)));
                            }
                        } else {
                            for d in 0..n {
                                probe[i] = d;
                                acc = acc.sub(&self.gamma.get(&[d, p, b]).mul(t.get(&probe)));
                            }
                        }
                    }
                    Slot::Tractor => {
                        let c = inner[i];
                        let lam = lam.expect("tractor slots need metric jets >= 2");
                        for d in 0..(n + 2) {
                            probe[i] = d;
                            acc = acc.sub(&lam.get(&[p, d, c]).mul(t.get(&probe)));
                        }
                    }
                }
                probe[i] = inner[i];
            }
            acc
        })
    }

    /// Second covariant derivative antisymmetrized: result (a, b, ...) is
    /// [nabla_a, nabla_b] applied to `t` (divided by... no normalization).
    pub fn commutator(&self, t: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
        let ddt = self.covariant_derivative(&self.covariant_derivative(t));
        let ranks = ddt.rank();
        let mut perm: Vec<usize> = (0..ranks).collect();
        perm.swap(0, 1);
        ddt.sub(&ddt.transpose(&perm))
    }

    /// Plain sum of ginv against the given slot: returns the tensor with that
    /// slot raised (storage stays covariant-shaped; callers track variance).
    pub fn raise_slot(&self, t: &Tensor<Jet<T>>, slot: usize) -> Tensor<Jet<T>> {
        let n = self.n;
        Tensor::from_fn(n, t.slots(), |idx| {
            let mut probe = idx.to_vec();
            let mut acc = t.proto().zero_like();
            for b in 0..n {
                probe[slot] = b;
                acc = acc.add(&self.ginv.get(&[idx[slot], b]).mul(t.get(&probe)));
            }
            acc
        })
    }
}

/// Partial-derivative tensor: slot 0 is the coordinate direction; entries are
/// jets one order lower.
pub fn partial_tensor<T: Float>(t: &Tensor<Jet<T>>) -> Tensor<Jet<T>> {
    let n = t.n();
    let mut slots = vec![Slot::Tangent];
    slots.extend_from_slice(t.slots());
    Tensor::from_fn(n, &slots, |idx| t.get(&idx[1..]).partial(idx[0]))
}

/// Norm helper: max |value| over entries, as the residual scale for checks.
pub fn sup<T: Float>(t: &Tensor<Jet<T>>) -> f64 {
    t.sup_norm()
}
