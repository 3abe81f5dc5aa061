//! Exact arithmetic in ℚ(√5) and the golden-ratio constants used throughout.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Golden ratio σ = (1+√5)/2.
pub const SIGMA: f64 = 1.618_033_988_749_895;
/// 1/σ = σ − 1.
pub const INV_SIGMA: f64 = 0.618_033_988_749_894_8;
/// √5.
pub const SQRT5: f64 = 2.236_067_977_499_79;
/// 1/(2√2), the common scale of all 120-cell vertex coordinates.
pub const INV_2SQRT2: f64 = 0.353_553_390_593_273_8;

/// A number (a + b√5)/c with integer a, b and c > 0, kept in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Qr5 {
    a: i64,
    b: i64,
    c: i64,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Qr5 {
    pub const ZERO: Qr5 = Qr5 { a: 0, b: 0, c: 1 };
    pub const ONE: Qr5 = Qr5 { a: 1, b: 0, c: 1 };
    pub const HALF: Qr5 = Qr5 { a: 1, b: 0, c: 2 };

    /// Builds (a + b√5)/c. Panics if `c == 0` or the reduced value overflows `i64`.
    pub fn new(a: i64, b: i64, c: i64) -> Qr5 {
        assert!(c != 0, "zero denominator");
        Self::reduce(a as i128, b as i128, c as i128)
    }

    fn reduce(mut a: i128, mut b: i128, mut c: i128) -> Qr5 {
        if c < 0 {
            a = -a;
            b = -b;
            c = -c;
        }
        let g = gcd(gcd(a, b), c);
        let g = if g == 0 { 1 } else { g };
        let (a, b, c) = (a / g, b / g, c / g);
        let fit = |v: i128| i64::try_from(v).expect("Qr5 coefficient overflow");
        Qr5 {
            a: fit(a),
            b: fit(b),
            c: fit(c),
        }
    }

    pub fn int(a: i64) -> Qr5 {
        Qr5::new(a, 0, 1)
    }

    /// σ = (1+√5)/2.
    pub fn sigma() -> Qr5 {
        Qr5::new(1, 1, 2)
    }

    /// 1/σ = (√5−1)/2.
    pub fn inv_sigma() -> Qr5 {
        Qr5::new(-1, 1, 2)
    }

    pub fn parts(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// Galois conjugate (a − b√5)/c.
    pub fn conjugate(&self) -> Qr5 {
        Qr5::new(self.a, -self.b, self.c)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Qr5> {
        if self.is_zero() {
            return None;
        }
        // 1/(a+b√5) = (a−b√5)/(a²−5b²)
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        let n = a * a - 5 * b * b;
        Some(Qr5::reduce(a * c, -b * c, n))
    }

    pub fn to_f64(&self) -> f64 {
        (self.a as f64 + self.b as f64 * SQRT5) / self.c as f64
    }

    /// Exact sign of the value.
    pub fn signum(&self) -> i32 {
        // sign of a + b√5 (c > 0)
        let (a, b) = (self.a as i128, self.b as i128);
        let sa = a.signum();
        let sb = b.signum();
        if sa == 0 {
            return sb as i32;
        }
        if sb == 0 || sa == sb {
            return sa as i32;
        }
        // opposite signs: compare a² with 5b²
        match (a * a).cmp(&(5 * b * b)) {
            Ordering::Greater => sa as i32,
            Ordering::Less => sb as i32,
            Ordering::Equal => 0,
        }
    }
}

impl PartialOrd for Qr5 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Qr5 {
    fn cmp(&self, other: &Self) -> Ordering {
        (*self - *other).signum().cmp(&0)
    }
}

impl Add for Qr5 {
    type Output = Qr5;
    fn add(self, o: Qr5) -> Qr5 {
        let (a1, b1, c1) = (self.a as i128, self.b as i128, self.c as i128);
        let (a2, b2, c2) = (o.a as i128, o.b as i128, o.c as i128);
        Qr5::reduce(a1 * c2 + a2 * c1, b1 * c2 + b2 * c1, c1 * c2)
    }
}

impl Sub for Qr5 {
    type Output = Qr5;
    fn sub(self, o: Qr5) -> Qr5 {
        self + (-o)
    }
}

impl Neg for Qr5 {
    type Output = Qr5;
    fn neg(self) -> Qr5 {
        Qr5 {
            a: -self.a,
            b: -self.b,
            c: self.c,
        }
    }
}

impl Mul for Qr5 {
    type Output = Qr5;
    fn mul(self, o: Qr5) -> Qr5 {
        let (a1, b1, c1) = (self.a as i128, self.b as i128, self.c as i128);
        let (a2, b2, c2) = (o.a as i128, o.b as i128, o.c as i128);
        Qr5::reduce(a1 * a2 + 5 * b1 * b2, a1 * b2 + a2 * b1, c1 * c2)
    }
}

impl fmt::Display for Qr5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.b, self.c) {
            (0, 1) => write!(f, "{}", self.a),
            (0, c) => write!(f, "{}/{}", self.a, c),
            (b, 1) => write!(f, "{}{:+}√5", self.a, b),
            (b, c) => write!(f, "({}{:+}√5)/{}", self.a, b, c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_identities() {
        let s = Qr5::sigma();
        assert_eq!(s * s, s + Qr5::ONE);
        assert_eq!(s.recip().unwrap(), s - Qr5::ONE);
        assert_eq!(s.recip().unwrap(), Qr5::inv_sigma());
        assert!((s.to_f64() - SIGMA).abs() < 1e-15);
        assert!((Qr5::inv_sigma().to_f64() - INV_SIGMA).abs() < 1e-15);
        assert!((SQRT5 - 5f64.sqrt()).abs() < 1e-15);
        assert!((INV_2SQRT2 - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-16);
    }

    #[test]
    fn reduction_and_sign() {
        assert_eq!(Qr5::new(2, 4, -6), Qr5::new(-1, -2, 3));
        assert_eq!(Qr5::new(-2, 1, 1).signum(), 1);
        assert_eq!(Qr5::new(3, -1, 1).signum(), 1);
        assert_eq!(Qr5::new(2, -1, 1).signum(), -1);
        assert_eq!(Qr5::ZERO.signum(), 0);
        assert!(Qr5::inv_sigma() < Qr5::sigma());
    }

    #[test]
    fn display() {
        assert_eq!(Qr5::sigma().to_string(), "(1+1√5)/2");
        assert_eq!(Qr5::HALF.to_string(), "1/2");
    }
}
