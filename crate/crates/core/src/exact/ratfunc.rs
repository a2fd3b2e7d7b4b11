use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::{poly_gcd, Field, FieldError, Poly, Rat};

/// Element of `Q(x)` in canonical form: `gcd(num, den) = 1` and `den` monic.
/// Structural equality is field equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

/// Canonical form of `num / den`.
pub fn ratfunc_normalize(num: Poly, den: Poly) -> Result<RatFunc, FieldError> {
    if den.is_zero() {
        return Err(FieldError::ZeroDenominator);
    }
    Ok(RatFunc::normalized(num, den))
}

/// Exact value at `x0`; a pole of the reduced form is an error.
pub fn eval_ratfunc(f: &RatFunc, x0: &Rat) -> Result<Rat, FieldError> {
    f.eval(x0)
}

impl RatFunc {
    fn normalized(num: Poly, den: Poly) -> RatFunc {
        if num.is_zero() {
            return RatFunc::zero();
        }
        if den.is_constant() {
            let inv = den.leading().unwrap().recip();
            return RatFunc {
                num: num.scale(&inv),
                den: Poly::one(),
            };
        }
        let g = poly_gcd(&num, &den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.div_exact(&g), den.div_exact(&g))
        };
        let lc = den.leading().unwrap().clone();
        if lc.is_one() {
            RatFunc { num, den }
        } else {
            let inv = lc.recip();
            RatFunc {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: Rat) -> Self {
        RatFunc::from_poly(Poly::constant(c))
    }

    /// The indeterminate `x`.
    pub fn x() -> Self {
        RatFunc::from_poly(Poly::x())
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    /// Constant value if this is a constant function.
    pub fn as_constant(&self) -> Option<Rat> {
        if self.num.is_zero() {
            return Some(Rat::zero());
        }
        (self.num.is_constant() && self.den.is_constant()).then(|| self.num.coeffs()[0].clone())
    }

    pub fn eval(&self, x0: &Rat) -> Result<Rat, FieldError> {
        let d = self.den.eval(x0);
        if d.is_zero() {
            return Err(FieldError::Pole { at: x0.clone() });
        }
        Ok(self.num.eval(x0) / d)
    }

    pub fn inv(&self) -> Option<RatFunc> {
        if self.num.is_zero() {
            return None;
        }
        Some(RatFunc::normalized(self.den.clone(), self.num.clone()))
    }

    /// Coefficient of `x^{-1}` in the expansion at infinity, for functions
    /// vanishing at infinity. Returns `None` if the function does not vanish
    /// there.
    pub fn residue_at_infinity(&self) -> Option<Rat> {
        let Some(dn) = self.num.degree() else {
            return Some(Rat::zero());
        };
        let dd = self.den.degree().unwrap();
        if dn >= dd {
            None
        } else if dn + 1 == dd {
            Some(self.num.leading().unwrap().clone())
        } else {
            Some(Rat::zero())
        }
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl Zero for RatFunc {
    fn zero() -> Self {
        RatFunc {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RatFunc {
    fn one() -> Self {
        RatFunc::from_poly(Poly::one())
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RatFunc::normalized(&self.num + &rhs.num, self.den.clone());
        }
        RatFunc::normalized(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self + &(-rhs)
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() || rhs.is_zero() {
            return RatFunc::zero();
        }
        if self.is_polynomial() && rhs.is_polynomial() {
            return RatFunc::from_poly(&self.num * &rhs.num);
        }
        // Cross-cancel before multiplying to keep degrees down.
        let g1 = poly_gcd(&self.num, &rhs.den);
        let g2 = poly_gcd(&rhs.num, &self.den);
        let n = &self.num.div_exact(&g1) * &rhs.num.div_exact(&g2);
        let d = &self.den.div_exact(&g2) * &rhs.den.div_exact(&g1);
        RatFunc::normalized(n, d)
    }
}

impl Div for &RatFunc {
    type Output = RatFunc;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &RatFunc) -> RatFunc {
        self * &rhs.inv().expect("division by zero rational function")
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RatFunc {
            type Output = RatFunc;
            fn $m(self, rhs: RatFunc) -> RatFunc {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        -&self
    }
}

impl Field for RatFunc {
    fn from_rat(r: &Rat) -> Self {
        RatFunc::constant(r.clone())
    }

    fn make_row_primitive(row: &mut [Self]) {
        let mut den_lcm = Poly::one();
        for v in row.iter().filter(|v| !v.is_zero()) {
            if !v.den.is_constant() {
                let g = poly_gcd(&den_lcm, &v.den);
                den_lcm = &den_lcm * &v.den.div_exact(&g);
            }
        }
        let mut nums: Vec<Option<Poly>> = row
            .iter()
            .map(|v| {
                (!v.is_zero()).then(|| {
                    if v.den.is_constant() {
                        &v.num * &den_lcm
                    } else {
                        &v.num * &den_lcm.div_exact(&v.den)
                    }
                })
            })
            .collect();
        let mut content = Poly::zero();
        for n in nums.iter().flatten() {
            content = poly_gcd(&content, n);
            if content.is_constant() {
                break;
            }
        }
        // Also normalize the rational scale so the first nonzero entry's
        // leading coefficient is one.
        let lead = nums
            .iter()
            .flatten()
            .next()
            .and_then(|n| n.leading().cloned());
        let Some(lead) = lead else { return };
        let scale = lead.recip();
        for (slot, n) in row.iter_mut().zip(nums.iter_mut()) {
            if let Some(n) = n.take() {
                let n = if content.is_constant() {
                    n
                } else {
                    n.div_exact(&content)
                };
                *slot = RatFunc::from_poly(n.scale(&scale));
            }
        }
    }

    fn complexity(&self) -> usize {
        let size = |p: &Poly| -> usize {
            p.coeffs()
                .iter()
                .map(|c| (c.numer().bits() + c.denom().bits()) as usize)
                .sum()
        };
        64 * self.degree() + size(&self.num) + size(&self.den)
    }

    fn degree(&self) -> usize {
        self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0))
    }
}
