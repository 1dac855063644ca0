//! Exact rational arithmetic over `i128`.
//!
//! Used by the coefficient-identity checks, where the recurrence weights must
//! reproduce published closed forms *exactly*, not just to rounding. The
//! magnitudes involved (n up to a few hundred, small parameter fractions)
//! stay far below the i128 range once every result is reduced.

/// Reduced fraction, denominator always positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Ratio {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den);
        let sign = if den < 0 { -1 } else { 1 };
        if g == 0 {
            return Ratio { num: 0, den: 1 };
        }
        Ratio { num: sign * num / g, den: sign * den / g }
    }

    pub fn from_int(n: i128) -> Ratio {
        Ratio { num: n, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn add(&self, other: &Ratio) -> Ratio {
        Ratio::new(self.num * other.den + other.num * self.den, self.den * other.den)
    }

    pub fn sub(&self, other: &Ratio) -> Ratio {
        Ratio::new(self.num * other.den - other.num * self.den, self.den * other.den)
    }

    pub fn mul(&self, other: &Ratio) -> Ratio {
        Ratio::new(self.num * other.num, self.den * other.den)
    }

    pub fn div(&self, other: &Ratio) -> Ratio {
        assert!(other.num != 0, "division by zero");
        Ratio::new(self.num * other.den, self.den * other.num)
    }

    pub fn neg(&self) -> Ratio {
        Ratio { num: -self.num, den: self.den }
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}
