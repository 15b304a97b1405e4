//! Sparse multivariate polynomials with Gaussian-rational coefficients in up
//! to sixteen variables.
//!
//! The same type carries the Reshetikhin system (variables `A_ab` in row-major
//! order) and the symbolic catalog Hamiltonians (variables are the family's
//! parameters in declaration order).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::exact::{self, GaussRat};
use crate::linalg::C64;
use crate::pauli::Ring;

pub const MAX_VARS: usize = 16;

pub type Exponents = [u8; MAX_VARS];

#[derive(Clone, Default, PartialEq, Eq)]
pub struct SymPoly {
    terms: BTreeMap<Exponents, GaussRat>,
}

impl SymPoly {
    pub fn var(i: usize) -> Self {
        assert!(i < MAX_VARS);
        let mut e = [0u8; MAX_VARS];
        e[i] = 1;
        Self::monomial(e, exact::gone())
    }

    pub fn constant(c: GaussRat) -> Self {
        Self::monomial([0; MAX_VARS], c)
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(exact::gint(n))
    }

    pub fn monomial(exps: Exponents, c: GaussRat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &GaussRat)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&x| x as usize).sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, e: Exponents, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, k: &GaussRat) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(e, c)| (*e, c * k)).collect() }
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = exact::to_c64(c);
                for (i, &p) in e.iter().enumerate() {
                    if p > 0 {
                        v *= x[i].powu(p as u32);
                    }
                }
                v
            })
            .sum()
    }

    /// Replaces every variable `i` by `values[i]` (which may be polynomials in
    /// a different set of variables).
    pub fn substitute(&self, values: &[SymPoly]) -> SymPoly {
        let mut powers: Vec<Vec<SymPoly>> = values.iter().map(|v| vec![SymPoly::one(), v.clone()]).collect();
        let mut out = SymPoly::zero();
        for (e, c) in &self.terms {
            let mut t = SymPoly::constant(c.clone());
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                while powers[i].len() <= p as usize {
                    let next = powers[i].last().unwrap() * &values[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][p as usize];
            }
            out += t;
        }
        out
    }

    /// Normal form modulo the binomial `x_a x_b - x_c x_d`, obtained by
    /// rewriting `x_a x_b → x_c x_d` until no monomial is divisible by `x_a x_b`.
    ///
    /// When the binomial generates a prime ideal this is zero exactly for the
    /// members of the ideal.
    pub fn reduce_binomial(&self, lead: (usize, usize), tail: (usize, usize)) -> SymPoly {
        let mut out = SymPoly::zero();
        for (e, c) in &self.terms {
            let mut e = *e;
            let k = e[lead.0].min(e[lead.1]);
            e[lead.0] -= k;
            e[lead.1] -= k;
            e[tail.0] += k;
            e[tail.1] += k;
            out.add_term(e, c.clone());
        }
        out
    }

    pub fn derivative(&self, i: usize) -> SymPoly {
        let mut out = SymPoly::zero();
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = *e;
            e2[i] -= 1;
            out.add_term(e2, c * exact::gint(e[i] as i64));
        }
        out
    }

    /// Renders the polynomial with the given variable names, e.g. `a1-c1-c2`.
    pub fn display_with(&self, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        // Higher total degree first, then variable order.
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by_key(|(e, _)| {
            let deg: usize = e.iter().map(|&x| x as usize).sum();
            (std::cmp::Reverse(deg), std::cmp::Reverse(**e))
        });
        for (e, c) in ts {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { names[i].to_string() } else { format!("{}^{}", names[i], p) })
                .collect();
            let (negative, body) = coefficient_text(c);
            let text = match (mono.is_empty(), body.as_str()) {
                (true, _) => body,
                (false, "1") => mono.join("*"),
                (false, _) => format!("{}*{}", body, mono.join("*")),
            };
            if out.is_empty() {
                if negative {
                    out.push('-');
                }
            } else {
                out.push(if negative { '-' } else { '+' });
            }
            out.push_str(&text);
        }
        out
    }
}

/// Sign and magnitude text of a Gaussian-rational coefficient.
fn coefficient_text(c: &GaussRat) -> (bool, String) {
    use num_traits::Signed;
    if c.im.is_zero() {
        return (c.re.is_negative(), exact::rat_string(&c.re.abs()));
    }
    if c.re.is_zero() {
        let body = if c.im.abs().is_one() { "I".to_string() } else { format!("{}*I", exact::rat_string(&c.im.abs())) };
        return (c.im.is_negative(), body);
    }
    (false, format!("({}{}{}*I)", exact::rat_string(&c.re), if c.im.is_negative() { "-" } else { "+" }, exact::rat_string(&c.im.abs())))
}

impl fmt::Debug for SymPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..MAX_VARS).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        f.write_str(&self.display_with(&refs))
    }
}

impl Zero for SymPoly {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for SymPoly {
    fn one() -> Self {
        Self::constant(exact::gone())
    }
}

impl AddAssign for SymPoly {
    fn add_assign(&mut self, rhs: Self) {
        for (e, c) in rhs.terms {
            self.add_term(e, c);
        }
    }
}

impl<'a> AddAssign<&'a SymPoly> for SymPoly {
    fn add_assign(&mut self, rhs: &'a SymPoly) {
        for (e, c) in &rhs.terms {
            self.add_term(*e, c.clone());
        }
    }
}

impl Add for SymPoly {
    type Output = SymPoly;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl Neg for SymPoly {
    type Output = SymPoly;
    fn neg(self) -> Self {
        Self { terms: self.terms.into_iter().map(|(e, c)| (e, -c)).collect() }
    }
}

impl Sub for SymPoly {
    type Output = SymPoly;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<'a> Mul<&'a SymPoly> for &'a SymPoly {
    type Output = SymPoly;
    fn mul(self, rhs: &'a SymPoly) -> SymPoly {
        let mut out = SymPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let mut e = *ea;
                for (x, y) in e.iter_mut().zip(eb) {
                    *x += y;
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Mul for SymPoly {
    type Output = SymPoly;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Ring for SymPoly {
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::constant(exact::gauss(num, den, 0, 1))
    }
}

/// A polynomial prepared for fast repeated floating-point evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(C64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    pub fn new(p: &SymPoly) -> Self {
        let terms = p
            .terms()
            .map(|(e, c)| {
                let factors = e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i, k as u32)).collect();
                (exact::to_c64(c), factors)
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(c, fs)| fs.iter().fold(*c, |acc, &(i, k)| acc * if k == 1 { x[i] } else { x[i].powu(k) }))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}
