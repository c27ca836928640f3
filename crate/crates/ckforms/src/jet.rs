//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] holds the Taylor coefficients (normalized by multi-factorials) of
//! a smooth function at a point, up to a chosen total order, in `nvars`
//! coordinates.  Arithmetic on jets propagates derivatives exactly, so any
//! tensor built from metric jets carries exact partial derivatives of itself:
//! one covariant derivative consumes one order.
//!
//! Coefficients are indexed by graded-lexicographic rank of the monomial
//! multi-index; the enumeration for order `m` is a prefix of the one for
//! `m+1`, which keeps truncation and differentiation index-stable.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::Float;

/// Precomputed index tables for one (nvars, order) jet space.
pub struct JetTables {
    pub nvars: usize,
    pub order: usize,
    /// Monomial exponent vectors in graded-lex order.
    pub monos: Vec<Vec<u8>>,
    /// For each result index, the (i, j) coefficient pairs whose monomials sum to it.
    prod: Vec<Vec<(u32, u32)>>,
    /// deriv[v][k] = (index of mono_k + e_v, multiplier alpha_v + 1)
    deriv: Vec<Vec<(u32, u32)>>,
    /// Number of monomials of total degree <= d, for each d <= order.
    pub len_at_order: Vec<usize>,
}

fn enumerate_monos(nvars: usize, order: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = vec![0u8; nvars];
    for deg in 0..=order {
        // lexicographic enumeration of compositions of `deg` into nvars parts
        fn rec(current: &mut Vec<u8>, pos: usize, remaining: u8, out: &mut Vec<Vec<u8>>) {
            if pos + 1 == current.len() {
                current[pos] = remaining;
                out.push(current.clone());
                return;
            }
            for v in (0..=remaining).rev() {
                current[pos] = v;
                rec(current, pos + 1, remaining - v, out);
            }
        }
        rec(&mut current, 0, deg as u8, &mut out);
    }
    out
}

impl JetTables {
    fn build(nvars: usize, order: usize) -> JetTables {
        let monos = enumerate_monos(nvars, order);
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        for (i, m) in monos.iter().enumerate() {
            index.insert(m.clone(), i);
        }
        let deg = |m: &[u8]| m.iter().map(|&x| x as usize).sum::<usize>();

        let mut prod = vec![Vec::new(); monos.len()];
        for i in 0..monos.len() {
            for j in 0..monos.len() {
                if deg(&monos[i]) + deg(&monos[j]) > order {
                    continue;
                }
                let sum: Vec<u8> = monos[i]
                    .iter()
                    .zip(monos[j].iter())
                    .map(|(a, b)| a + b)
                    .collect();
                let k = index[&sum];
                prod[k].push((i as u32, j as u32));
            }
        }

        let mut deriv = vec![Vec::new(); nvars];
        for v in 0..nvars {
            let small: Vec<(u32, u32)> = monos
                .iter()
                .filter(|m| deg(m) < order || order == 0)
                .filter(|m| deg(m) + 1 <= order)
                .map(|m| {
                    let mut up = m.clone();
                    up[v] += 1;
                    (index[&up] as u32, (m[v] + 1) as u32)
                })
                .collect();
            deriv[v] = small;
        }

        let mut len_at_order = Vec::with_capacity(order + 1);
        for d in 0..=order {
            len_at_order.push(monos.iter().filter(|m| deg(m) <= d).count());
        }

        JetTables {
            nvars,
            order,
            monos,
            prod,
            deriv,
            len_at_order,
        }
    }
}

fn tables(nvars: usize, order: usize) -> Arc<JetTables> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((nvars, order))
        .or_insert_with(|| Arc::new(JetTables::build(nvars, order)))
        .clone()
}

/// Taylor jet of a scalar function at a point.
#[derive(Clone)]
pub struct Jet<T> {
    tables: Arc<JetTables>,
    coeffs: Vec<T>,
}

impl<T: Float> Jet<T> {
    pub fn constant(v: T, nvars: usize, order: usize) -> Jet<T> {
        let tables = tables(nvars, order);
        let mut coeffs = vec![T::zero(); tables.monos.len()];
        coeffs[0] = v;
        Jet { tables, coeffs }
    }

    /// The coordinate function `x_i` with value `v` at the expansion point.
    pub fn variable(v: T, i: usize, nvars: usize, order: usize) -> Jet<T> {
        let mut j = Jet::constant(v, nvars, order);
        if order >= 1 {
            // the linear monomial e_i: graded-lex rank within degree-1 block
            let idx = j
                .tables
                .monos
                .iter()
                .position(|m| {
                    m.iter().map(|&x| x as usize).sum::<usize>() == 1 && m[i] == 1
                })
                .unwrap();
            j.coeffs[idx] = T::one();
        }
        j
    }

    pub fn order(&self) -> usize {
        self.tables.order
    }

    pub fn nvars(&self) -> usize {
        self.tables.nvars
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    pub fn truncated(&self, order: usize) -> Jet<T> {
        if order >= self.order() {
            return self.clone();
        }
        let t = tables(self.nvars(), order);
        let len = t.monos.len();
        Jet {
            tables: t,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    fn harmonized(&self, other: &Jet<T>) -> (Jet<T>, Jet<T>) {
        assert_eq!(self.nvars(), other.nvars(), "jet nvars mismatch");
        let o = self.order().min(other.order());
        (self.truncated(o), other.truncated(o))
    }

    pub fn add(&self, other: &Jet<T>) -> Jet<T> {
        let (mut a, b) = self.harmonized(other);
        for (x, y) in a.coeffs.iter_mut().zip(b.coeffs.iter()) {
            *x = *x + *y;
        }
        a
    }

    pub fn sub(&self, other: &Jet<T>) -> Jet<T> {
        let (mut a, b) = self.harmonized(other);
        for (x, y) in a.coeffs.iter_mut().zip(b.coeffs.iter()) {
            *x = *x - *y;
        }
        a
    }

    pub fn neg(&self) -> Jet<T> {
        let mut a = self.clone();
        for x in a.coeffs.iter_mut() {
            *x = -*x;
        }
        a
    }

    pub fn scale(&self, c: T) -> Jet<T> {
        let mut a = self.clone();
        for x in a.coeffs.iter_mut() {
            *x = *x * c;
        }
        a
    }

    pub fn mul(&self, other: &Jet<T>) -> Jet<T> {
        let (a, b) = self.harmonized(other);
        let t = a.tables.clone();
        let mut coeffs = vec![T::zero(); a.coeffs.len()];
        for (k, pairs) in t.prod.iter().enumerate() {
            let mut acc = T::zero();
            for &(i, j) in pairs {
                acc = acc + a.coeffs[i as usize] * b.coeffs[j as usize];
            }
            coeffs[k] = acc;
        }
        Jet { tables: t, coeffs }
    }

    /// Partial derivative in direction `v`; the result has one order less.
    pub fn partial(&self, v: usize) -> Jet<T> {
        assert!(self.order() >= 1, "jet order exhausted: cannot differentiate");
        let t = tables(self.nvars(), self.order() - 1);
        let mut coeffs = vec![T::zero(); t.monos.len()];
        for (k, &(src, mult)) in self.tables.deriv[v].iter().enumerate() {
            coeffs[k] = self.coeffs[src as usize] * T::from(mult).unwrap();
        }
        Jet { tables: t, coeffs }
    }

    /// Univariate Taylor composition: outer coefficients in powers of (f - f0).
    fn compose(&self, outer: &[T]) -> Jet<T> {
        let mut u = self.clone();
        u.coeffs[0] = T::zero();
        let mut acc = Jet::constant(outer[0], self.nvars(), self.order());
        let mut upow = Jet::constant(T::one(), self.nvars(), self.order());
        for c in outer.iter().skip(1) {
            upow = upow.mul(&u);
            acc = acc.add(&upow.scale(*c));
        }
        acc
    }

    pub fn exp(&self) -> Jet<T> {
        let f0 = self.value();
        let e = f0.exp();
        let mut outer = vec![e];
        let mut fact = T::one();
        for j in 1..=self.order() {
            fact = fact * T::from(j).unwrap();
            outer.push(e / fact);
        }
        self.compose(&outer)
    }

    pub fn ln(&self) -> Jet<T> {
        let f0 = self.value();
        let mut outer = vec![f0.ln()];
        // d^j/du^j ln(u) = (-1)^(j+1) (j-1)! / u^j
        let mut sign = T::one();
        for j in 1..=self.order() {
            let jf = T::from(j).unwrap();
            outer.push(sign / (jf * f0.powi(j as i32)));
            sign = -sign;
        }
        self.compose(&outer)
    }

    pub fn sin(&self) -> Jet<T> {
        self.trig(true)
    }

    pub fn cos(&self) -> Jet<T> {
        self.trig(false)
    }

    fn trig(&self, is_sin: bool) -> Jet<T> {
        let f0 = self.value();
        let (s, c) = (f0.sin(), f0.cos());
        let cycle = if is_sin {
            [s, c, -s, -c]
        } else {
            [c, -s, -c, s]
        };
        let mut outer = Vec::with_capacity(self.order() + 1);
        let mut fact = T::one();
        for j in 0..=self.order() {
            if j > 0 {
                fact = fact * T::from(j).unwrap();
            }
            outer.push(cycle[j % 4] / fact);
        }
        self.compose(&outer)
    }

    pub fn sqrt(&self) -> Jet<T> {
        self.powf(T::from(0.5).unwrap())
    }

    pub fn recip(&self) -> Jet<T> {
        self.powf(-T::one())
    }

    pub fn powf(&self, e: T) -> Jet<T> {
        let f0 = self.value();
        // c_j = e (e-1) ... (e-j+1) f0^(e-j) / j!
        let mut outer = vec![f0.powf(e)];
        let mut coef = T::one();
        let mut fact = T::one();
        for j in 1..=self.order() {
            coef = coef * (e - T::from(j - 1).unwrap());
            fact = fact * T::from(j).unwrap();
            outer.push(coef / fact * f0.powf(e - T::from(j).unwrap()));
        }
        self.compose(&outer)
    }

    /// The exact partial derivative described by the exponent vector `alpha`.
    pub fn derivative(&self, alpha: &[u8]) -> T {
        let rank = self
            .tables
            .monos
            .iter()
            .position(|m| m.as_slice() == alpha)
            .expect("derivative order exceeds jet order");
        let mut factorial = T::one();
        for &a in alpha {
            for j in 2..=a as usize {
                factorial = factorial * T::from(j).unwrap();
            }
        }
        self.coeffs[rank] * factorial
    }
}

impl<T: Float + std::fmt::Debug> std::fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Jet(order {}, value {:?})",
            self.order(),
            self.value()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_jets_are_exact() {
        // f(x, y) = x^2 y + 3y at (2, -1), order 3
        let x = Jet::variable(2.0f64, 0, 2, 3);
        let y = Jet::variable(-1.0f64, 1, 2, 3);
        let f = x.mul(&x).mul(&y).add(&y.scale(3.0));
        assert_eq!(f.value(), -7.0);
        assert_eq!(f.derivative(&[1, 0]), -4.0); // 2xy
        assert_eq!(f.derivative(&[0, 1]), 7.0); // x^2 + 3
        assert_eq!(f.derivative(&[2, 0]), -2.0); // 2y
        assert_eq!(f.derivative(&[1, 1]), 4.0); // 2x
        assert_eq!(f.derivative(&[2, 1]), 2.0);
    }

    #[test]
    fn transcendental_jets_match_closed_forms() {
        // f(x) = exp(2x) sin(x) at x0 = 0.4, order 4
        let x = Jet::variable(0.4f64, 0, 1, 4);
        let f = x.scale(2.0).exp().mul(&x.sin());
        let x0: f64 = 0.4;
        let e = (2.0 * x0).exp();
        let f1 = e * (2.0 * x0.sin() + x0.cos());
        let f2 = e * (3.0 * x0.sin() + 4.0 * x0.cos());
        let f3 = e * (2.0 * x0.sin() + 11.0 * x0.cos());
        let f4 = e * (-7.0 * x0.sin() + 24.0 * x0.cos());
        assert!((f.derivative(&[1]) - f1).abs() < 1e-12);
        assert!((f.derivative(&[2]) - f2).abs() < 1e-11);
        assert!((f.derivative(&[3]) - f3).abs() < 1e-11);
        assert!((f.derivative(&[4]) - f4).abs() < 1e-10);
    }

    #[test]
    fn division_and_sqrt() {
        let x = Jet::variable(1.5f64, 0, 1, 4);
        let one_over = x.recip();
        let check = one_over.mul(&x);
        assert!((check.value() - 1.0).abs() < 1e-14);
        for alpha in [[1u8], [2], [3], [4]] {
            assert!(check.derivative(&alpha).abs() < 1e-12);
        }
        let s = x.sqrt();
        let sq = s.mul(&s);
        assert!((sq.value() - 1.5).abs() < 1e-14);
        assert!((sq.derivative(&[1]) - 1.0).abs() < 1e-12);
        assert!(sq.derivative(&[2]).abs() < 1e-12);
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::variable(0.7f64, 0, 2, 3);
        let y = Jet::variable(-0.2f64, 1, 2, 3);
        let f = x.mul(&y).mul(&y); // x y^2
        let fx = f.partial(0); // y^2, order 2
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 0.04).abs() < 1e-14);
        assert!((fx.derivative(&[0, 1]) - (-0.4)).abs() < 1e-14);
        let fxy = fx.partial(1); // 2y
        assert!((fxy.value() + 0.4).abs() < 1e-14);
    }
}
