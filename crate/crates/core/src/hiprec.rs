//! Fixed-point decimal arithmetic for coefficient generation.
//!
//! Collocation coefficients are produced in high precision and only then
//! rounded to working precision, so the generator needs arithmetic with a
//! controllable number of decimal digits plus a *correctly rounded*
//! conversion to `f64`. [`Fx`] stores `mant * 10^-scale` with a `BigInt`
//! mantissa; addition and subtraction are exact, multiplication and division
//! round half-to-even at the fixed scale, and [`Fx::to_f64`] /
//! [`ratio_to_f64`] round an exact integer ratio to the nearest double.

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Fixed-point decimal: `mant * 10^-scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fx {
    mant: BigInt,
    scale: u32,
}

fn pow10(scale: u32) -> BigInt {
    BigInt::from(10u32).pow(scale)
}

/// `n / d` rounded half-to-even, `d > 0`.
fn div_round_half_even(n: &BigInt, d: &BigInt) -> BigInt {
    debug_assert!(d.is_positive());
    let neg = n.is_negative();
    let n_abs = n.abs();
    let (q, r) = (&n_abs / d, &n_abs % d);
    let twice: BigInt = &r * 2;
    let q = match twice.cmp(d) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if (&q % 2) == BigInt::zero() {
                q
            } else {
                q + 1
            }
        }
    };
    if neg {
        -q
    } else {
        q
    }
}

impl Fx {
    pub fn zero(scale: u32) -> Self {
        Self {
            mant: BigInt::zero(),
            scale,
        }
    }

    pub fn from_int(n: i64, scale: u32) -> Self {
        Self {
            mant: BigInt::from(n) * pow10(scale),
            scale,
        }
    }

    /// `n / d` at the given scale.
    pub fn from_ratio(n: i64, d: i64, scale: u32) -> Self {
        Self::from_int(n, scale).div(&Self::from_int(d, scale))
    }

    /// Exact decomposition of a double, then rounding to the scale (only the
    /// sub-scale bits of subnormal-exponent values are rounded away).
    pub fn from_f64(x: f64, scale: u32) -> Self {
        assert!(x.is_finite(), "cannot convert non-finite value");
        if x == 0.0 {
            return Self::zero(scale);
        }
        let bits = x.to_bits();
        let sign_neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let mut mant = BigInt::from(m) * pow10(scale);
        if e >= 0 {
            mant <<= e as u32;
        } else {
            mant = div_round_half_even(&mant, &(BigInt::from(1u8) << (-e) as u32));
        }
        if sign_neg {
            mant = -mant;
        }
        Self { mant, scale }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Raw mantissa; the value is `mant * 10^-scale`.
    pub fn mant(&self) -> &BigInt {
        &self.mant
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn neg(&self) -> Self {
        Self {
            mant: -&self.mant,
            scale: self.scale,
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            mant: self.mant.abs(),
            scale: self.scale,
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.scale, rhs.scale, "scale mismatch");
        Self {
            mant: &self.mant + &rhs.mant,
            scale: self.scale,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.scale, rhs.scale, "scale mismatch");
        Self {
            mant: &self.mant - &rhs.mant,
            scale: self.scale,
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.scale, rhs.scale, "scale mismatch");
        Self {
            mant: div_round_half_even(&(&self.mant * &rhs.mant), &pow10(self.scale)),
            scale: self.scale,
        }
    }

    pub fn div(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.scale, rhs.scale, "scale mismatch");
        assert!(!rhs.mant.is_zero(), "division by zero");
        let num = &self.mant * pow10(self.scale);
        let mant = if rhs.mant.is_negative() {
            -div_round_half_even(&num, &rhs.mant.abs())
        } else {
            div_round_half_even(&num, &rhs.mant)
        };
        Self {
            mant,
            scale: self.scale,
        }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        Self {
            mant: &self.mant * BigInt::from(k),
            scale: self.scale,
        }
    }

    pub fn div_int(&self, k: i64) -> Self {
        assert!(k != 0);
        let mant = if k < 0 {
            -div_round_half_even(&self.mant, &BigInt::from(-k))
        } else {
            div_round_half_even(&self.mant, &BigInt::from(k))
        };
        Self {
            mant,
            scale: self.scale,
        }
    }

    pub fn powi(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::from_int(1, self.scale);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    /// `10^-digits` at this scale (positive threshold for convergence tests).
    pub fn pow10_neg(digits: u32, scale: u32) -> Self {
        assert!(digits <= scale);
        Self {
            mant: pow10(scale - digits),
            scale,
        }
    }

    pub fn cmp_value(&self, rhs: &Self) -> Ordering {
        debug_assert_eq!(self.scale, rhs.scale);
        self.mant.cmp(&rhs.mant)
    }

    pub fn lt(&self, rhs: &Self) -> bool {
        self.cmp_value(rhs) == Ordering::Less
    }

    /// Newton square root; `self >= 0`.
    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "sqrt of negative value");
        if self.is_zero() {
            return Self::zero(self.scale);
        }
        let approx = self.to_f64().sqrt();
        let mut x = Self::from_f64(if approx > 0.0 { approx } else { 1.0 }, self.scale);
        for _ in 0..40 {
            let next = x.add(&self.div(&x)).div_int(2);
            if next == x {
                break;
            }
            x = next;
        }
        x
    }

    /// Correctly rounded conversion to double.
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.mant, &pow10(self.scale))
    }

    /// Scientific notation with `digits` significant digits (half-even).
    pub fn to_sci(&self, digits: usize) -> String {
        assert!(digits >= 1);
        if self.mant.is_zero() {
            return format!("0.{}e+00", "0".repeat(digits - 1));
        }
        let neg = self.mant.is_negative();
        let mut abs = self.mant.abs();
        let mut ndigits = abs.to_string().len();
        let mut exp10 = ndigits as i64 - 1 - self.scale as i64;
        if ndigits > digits {
            abs = div_round_half_even(&abs, &pow10((ndigits - digits) as u32));
            let rounded = abs.to_string();
            if rounded.len() > digits {
                // rounding carried into a new leading digit (… 999 -> 1000)
                abs = &abs / BigInt::from(10u8);
                exp10 += 1;
            }
            ndigits = digits;
        }
        let mut s = abs.to_string();
        if ndigits < digits {
            s.push_str(&"0".repeat(digits - ndigits));
        }
        let (head, tail) = s.split_at(1);
        format!(
            "{}{}.{}e{}{:02}",
            if neg { "-" } else { "" },
            head,
            tail,
            if exp10 < 0 { "-" } else { "+" },
            exp10.abs()
        )
    }
}

impl fmt::Display for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci(30))
    }
}

/// Correctly rounded double of the exact ratio `num / den`.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    assert!(!den.is_zero(), "zero denominator");
    if num.is_zero() {
        return 0.0;
    }
    let neg = (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus);
    let p0 = num.abs();
    let q0 = den.abs();

    // shift so that floor(p/q) has exactly 53 bits
    let mut k: i64 = 53 - (p0.bits() as i64 - q0.bits() as i64);
    let (mut n, mut r);
    loop {
        let (p, q) = if k >= 0 {
            (&p0 << k as u32, q0.clone())
        } else {
            (p0.clone(), &q0 << (-k) as u32)
        };
        n = &p / &q;
        r = &p - &n * &q;
        match n.bits() {
            53 => break,
            b if b > 53 => k -= b as i64 - 53,
            b => k += 53 - b as i64,
        }
        // q is recomputed from q0 each pass, so r stays consistent with n
    }
    // round to nearest, ties to even
    let q = if k >= 0 { q0 } else { &q0 << (-k) as u32 };
    let twice: BigInt = &r * 2;
    match twice.cmp(&q) {
        Ordering::Greater => n += 1,
        Ordering::Equal => {
            if (&n % 2) != BigInt::zero() {
                n += 1;
            }
        }
        Ordering::Less => {}
    }
    let mantissa = n.to_u64().expect("53/54-bit mantissa fits u64") as f64;
    let value = mantissa * 2f64.powi(-k as i32);
    if neg {
        -value
    } else {
        value
    }
}
