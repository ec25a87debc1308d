//! Clebsch–Gordan coefficients (Condon–Shortley phase) from the Racah formula.
//!
//! Angular momenta are carried internally as doubled integers so that
//! half-integers are exact. The Racah sum is accumulated as an exact fraction
//! in `i128` and only the final square root is taken in floating point; when
//! the factorials overflow the fraction the sum falls back to `f64`.

use crate::{Error, Result};

/// A non-negative or signed half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(pub i32);

impl HalfInt {
    pub fn from_f64(x: f64) -> Result<Self> {
        let twice = 2.0 * x;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 || twice.abs() > 1e6 {
            return Err(Error::param(format!("{x} is not a half-integer")));
        }
        Ok(HalfInt(twice.round() as i32))
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | J M⟩ for real-valued arguments.
///
/// Returns zero when `M ≠ m1 + m2` or `J` is outside the triangle; errors when an
/// argument is not a half-integer or a projection exceeds its angular momentum.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> Result<f64> {
    let [j1, m1, j2, m2, j, m] = [j1, m1, j2, m2, j, m].map(HalfInt::from_f64);
    let (j1, m1, j2, m2, j, m) = (j1?, m1?, j2?, m2?, j?, m?);
    for (jj, mm) in [(j1, m1), (j2, m2), (j, m)] {
        if jj.0 < 0 {
            return Err(Error::param("angular momentum must be non-negative"));
        }
        if mm.0.abs() > jj.0 || (jj.0 - mm.0) % 2 != 0 {
            return Err(Error::param(format!(
                "projection {} invalid for angular momentum {}",
                mm.value(),
                jj.value()
            )));
        }
    }
    Ok(cg_twice(j1.0, m1.0, j2.0, m2.0, j.0, m.0))
}

/// Clebsch–Gordan coefficient with all arguments doubled. Invalid combinations give 0.
pub fn cg_twice(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
    racah(tj1, tm1, tj2, tm2, tj, tm, true)
}

fn racah(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32, allow_exact: bool) -> f64 {
    if tm != tm1 + tm2 {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj {
        return 0.0;
    }
    if (tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tj + tm) % 2 != 0 {
        return 0.0;
    }
    if tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 + tj) % 2 != 0 {
        return 0.0;
    }
    // Integer arguments of the factorials.
    let a = (tj + tj1 - tj2) / 2;
    let b = (tj - tj1 + tj2) / 2;
    let c = (tj1 + tj2 - tj) / 2;
    let d = (tj1 + tj2 + tj) / 2 + 1;
    let jpm = (tj + tm) / 2;
    let jmm = (tj - tm) / 2;
    let j1mm1 = (tj1 - tm1) / 2;
    let j1pm1 = (tj1 + tm1) / 2;
    let j2mm2 = (tj2 - tm2) / 2;
    let j2pm2 = (tj2 + tm2) / 2;
    // Lower and upper bound of the Racah summation index.
    let e = (tj - tj2 + tm1) / 2;
    let f = (tj - tj1 - tm2) / 2;
    let kmin = 0.max(-e).max(-f);
    let kmax = c.min(j1mm1).min(j2pm2);
    if kmin > kmax {
        return 0.0;
    }

    let pref_num = [a, b, c, jpm, jmm, j1mm1, j1pm1, j2mm2, j2pm2];
    let pref_den = [d];
    let weight = (tj + 1) as f64;

    if !allow_exact {
        return float_path(&pref_num, &pref_den, weight, kmin, kmax, [c, j1mm1, j2pm2, e, f]);
    }
    if let Some(value) = exact_path(&pref_num, &pref_den, weight, kmin, kmax, [c, j1mm1, j2pm2, e, f]) {
        return value;
    }
    float_path(&pref_num, &pref_den, weight, kmin, kmax, [c, j1mm1, j2pm2, e, f])
}

fn factorial_i128(n: i32) -> Option<i128> {
    let mut acc: i128 = 1;
    for i in 2..=n as i128 {
        acc = acc.checked_mul(i)?;
    }
    Some(acc)
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

struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn add(self, other: Frac) -> Option<Frac> {
        let g = gcd(self.den, other.den);
        let lhs = self.num.checked_mul(other.den / g)?;
        let rhs = other.num.checked_mul(self.den / g)?;
        let num = lhs.checked_add(rhs)?;
        let den = (self.den / g).checked_mul(other.den)?;
        let g = gcd(num, den).max(1);
        Some(Frac {
            num: num / g,
            den: den / g,
        })
    }
}

fn exact_path(
    pref_num: &[i32],
    pref_den: &[i32],
    weight: f64,
    kmin: i32,
    kmax: i32,
    [c, j1mm1, j2pm2, e, f]: [i32; 5],
) -> Option<f64> {
    let mut sum = Frac { num: 0, den: 1 };
    for k in kmin..=kmax {
        let mut den: i128 = 1;
        for n in [k, c - k, j1mm1 - k, j2pm2 - k, e + k, f + k] {
            den = den.checked_mul(factorial_i128(n)?)?;
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        sum = sum.add(Frac { num: sign, den })?;
    }
    if sum.num == 0 {
        return Some(0.0);
    }
    // C² = weight · Πpref_num! / Πpref_den! · S².
    let mut num: i128 = sum.num.checked_mul(sum.num)?;
    let mut den: i128 = sum.den.checked_mul(sum.den)?;
    for &n in pref_num {
        num = num.checked_mul(factorial_i128(n)?)?;
        let g = gcd(num, den).max(1);
        num /= g;
        den /= g;
    }
    for &n in pref_den {
        den = den.checked_mul(factorial_i128(n)?)?;
        let g = gcd(num, den).max(1);
        num /= g;
        den /= g;
    }
    let sign = sum.num.signum() as f64;
    Some(sign * (weight * num as f64 / den as f64).sqrt())
}

fn ln_factorial(n: i32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn float_path(
    pref_num: &[i32],
    pref_den: &[i32],
    weight: f64,
    kmin: i32,
    kmax: i32,
    [c, j1mm1, j2pm2, e, f]: [i32; 5],
) -> f64 {
    let ln_pref = 0.5
        * (weight.ln() + pref_num.iter().map(|&n| ln_factorial(n)).sum::<f64>()
            - pref_den.iter().map(|&n| ln_factorial(n)).sum::<f64>());
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let ln_den: f64 = [k, c - k, j1mm1 - k, j2pm2 - k, e + k, f + k]
            .iter()
            .map(|&n| ln_factorial(n))
            .sum();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (ln_pref - ln_den).exp();
    }
    sum
}
