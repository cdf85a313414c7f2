//! Exact arithmetic in `Q(zeta_p)`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// `sum_k c_k zeta^k` with `zeta = exp(2 pi i / p)`, exponents taken mod `p`.
#[derive(Clone, Debug)]
pub struct Cyclotomic {
    p: u32,
    coeffs: Vec<BigRational>,
}

impl Cyclotomic {
    pub fn zero(p: u32) -> Self {
        Cyclotomic { p, coeffs: vec![BigRational::zero(); p as usize] }
    }

    pub fn rational(p: u32, r: BigRational) -> Self {
        let mut z = Self::zero(p);
        z.coeffs[0] = r;
        z
    }

    /// `r zeta^k`.
    pub fn monomial(p: u32, k: i64, r: BigRational) -> Self {
        let mut z = Self::zero(p);
        z.coeffs[k.rem_euclid(p as i64) as usize] = r;
        z
    }

    pub fn add(&self, o: &Cyclotomic) -> Cyclotomic {
        Cyclotomic { p: self.p, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn mul(&self, o: &Cyclotomic) -> Cyclotomic {
        let p = self.p as usize;
        let mut out = Self::zero(self.p);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out.coeffs[(i + j) % p] += a * b;
            }
        }
        out
    }

    /// Complex conjugation `zeta -> zeta^-1`.
    pub fn conj(&self) -> Cyclotomic {
        let p = self.p as usize;
        let mut out = Self::zero(self.p);
        for (k, c) in self.coeffs.iter().enumerate() {
            out.coeffs[(p - k) % p] = c.clone();
        }
        out
    }

    /// The rational value, if the element is rational.
    ///
    /// Uses `1 + zeta + ... + zeta^(p-1) = 0` to reduce onto the basis `1, ..., zeta^(p-2)`.
    pub fn to_rational(&self) -> Option<BigRational> {
        let top = self.coeffs[self.p as usize - 1].clone();
        let reduced: Vec<BigRational> = self.coeffs.iter().map(|c| c - &top).collect();
        reduced[1..self.p as usize - 1].iter().all(Zero::is_zero).then(|| reduced[0].clone())
    }

    pub fn is_rational(&self, r: &BigRational) -> bool {
        self.to_rational().as_ref() == Some(r)
    }

    pub fn to_complex(&self) -> Complex64 {
        self.coeffs.iter().enumerate().fold(Complex64::zero(), |acc, (k, c)| {
            acc + root_of_unity(k as i64, self.p) * c.to_f64().unwrap_or(f64::NAN)
        })
    }
}

/// `exp(2 pi i k / n)`, exact at quarter turns.
pub fn root_of_unity(k: i64, n: u32) -> Complex64 {
    let k = k.rem_euclid(n as i64);
    if (4 * k) % n as i64 == 0 {
        return match 4 * k / n as i64 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_have_unit_modulus() {
        for p in [2u32, 3, 5, 7] {
            for k in 0..p as i64 {
                let z = Cyclotomic::monomial(p, k, int(1));
                assert!(z.mul(&z.conj()).is_rational(&int(1)));
            }
        }
    }

    #[test]
    fn sum_of_roots_is_zero() {
        for p in [2u32, 3, 5] {
            let s = (0..p as i64).fold(Cyclotomic::zero(p), |acc, k| acc.add(&Cyclotomic::monomial(p, k, int(1))));
            assert!(s.is_rational(&int(0)));
        }
    }

    #[test]
    fn one_plus_zeta_is_not_rational_for_odd_p() {
        let z = Cyclotomic::rational(3, int(1)).add(&Cyclotomic::monomial(3, 1, int(1)));
        assert!(z.to_rational().is_none());
        // |1 + w|^2 = 1 for a primitive cube root
        assert!(z.mul(&z.conj()).is_rational(&int(1)));
        assert!((z.to_complex().norm() - 1.0).abs() < 1e-15);
    }
}
