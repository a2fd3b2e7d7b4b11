use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::{rat_string, Rat};

/// Univariate polynomial over `Q`, coefficients in ascending order of degree.
/// The highest stored coefficient is nonzero; the zero polynomial has no
/// coefficients and degree `None`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Poly::from_coeffs(vec![Rat::zero(), Rat::one()])
    }

    /// `x - root`.
    pub fn linear(root: &Rat) -> Self {
        Poly::from_coeffs(vec![-root.clone(), Rat::one()])
    }

    pub fn from_coeffs(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Scalar multiple with leading coefficient one; zero stays zero.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some(lc) if !lc.is_one() => self.scale(&lc.recip()),
            _ => self.clone(),
        }
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(One::is_one)
    }

    /// Euclidean division. Panics if `divisor` is zero.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("polynomial division by zero");
        let Some(nd) = self.degree() else {
            return (Poly::zero(), Poly::zero());
        };
        if nd < dd {
            return (Poly::zero(), self.clone());
        }
        let lc_inv = divisor.leading().unwrap().recip();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rat::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let c = &rem[k + dd] * &lc_inv;
            if c.is_zero() {
                continue;
            }
            for (j, d) in divisor.coeffs.iter().enumerate() {
                if !d.is_zero() {
                    rem[k + j] -= &c * d;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    /// Exact quotient; panics in debug builds if the division leaves a remainder.
    pub fn div_exact(&self, divisor: &Poly) -> Poly {
        let (q, r) = self.div_rem(divisor);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Rational roots, each listed once, by the rational root test on the
    /// integer-cleared polynomial. Irrational and complex roots are skipped.
    pub fn rational_roots(&self) -> Vec<Rat> {
        use num_bigint::BigInt;
        use num_integer::Integer;
        use num_traits::Signed;

        let mut roots = Vec::new();
        let mut p = self.clone();
        if p.degree().unwrap_or(0) == 0 {
            return roots;
        }
        // Factor out x^k.
        let lowest = p.coeffs.iter().position(|c| !c.is_zero()).unwrap();
        if lowest > 0 {
            roots.push(Rat::zero());
            p = Poly::from_coeffs(p.coeffs[lowest..].to_vec());
        }
        if p.degree().unwrap_or(0) == 0 {
            return roots;
        }
        let den_lcm = p
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = p
            .coeffs
            .iter()
            .map(|c| (c * Rat::from_integer(den_lcm.clone())).to_integer())
            .collect();
        let a0 = ints[0].abs();
        let an = ints.last().unwrap().abs();
        // Divisor enumeration is only attempted for moderately sized constants.
        if a0.bits() > 40 || an.bits() > 40 {
            return roots;
        }
        let divisors = |n: &BigInt| -> Vec<BigInt> {
            let mut out = Vec::new();
            let mut d = BigInt::one();
            while &d * &d <= *n {
                if (n % &d).is_zero() {
                    out.push(d.clone());
                    let other = n / &d;
                    if other != d {
                        out.push(other);
                    }
                }
                d += 1;
            }
            out
        };
        let mut candidates: Vec<Rat> = Vec::new();
        for num in divisors(&a0) {
            for den in divisors(&an) {
                let r = Rat::new(num.clone(), den.clone());
                for cand in [r.clone(), -r] {
                    if !candidates.contains(&cand) {
                        candidates.push(cand);
                    }
                }
            }
        }
        candidates.sort();
        for c in candidates {
            if p.eval(&c).is_zero() {
                roots.push(c);
            }
        }
        roots.sort();
        roots
    }
}

/// Monic greatest common divisor; `gcd(0, 0) = 0`.
pub fn poly_gcd(p: &Poly, q: &Poly) -> Poly {
    let (mut a, mut b) = (p.clone(), q.clone());
    while !b.is_zero() {
        let (_, r) = a.div_rem(&b);
        a = b;
        // Keep remainders monic to limit coefficient growth.
        b = r.monic();
    }
    a.monic()
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let c = if c.is_integer() {
                c.numer().to_string()
            } else {
                format!("({})", rat_string(c))
            };
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*x")?,
                _ => write!(f, "{c}*x^{k}")?,
            }
        }
        Ok(())
    }
}

fn add_coeffs(a: &[Rat], b: &[Rat], negate_b: bool) -> Poly {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let x = a.get(k).cloned().unwrap_or_else(Rat::zero);
        let y = b.get(k).cloned().unwrap_or_else(Rat::zero);
        out.push(if negate_b { x - y } else { x + y });
    }
    Poly::from_coeffs(out)
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        add_coeffs(&self.coeffs, &rhs.coeffs, false)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        add_coeffs(&self.coeffs, &rhs.coeffs, true)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Poly::from_coeffs(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}
