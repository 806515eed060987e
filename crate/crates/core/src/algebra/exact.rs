//! Exact linear algebra and univariate arithmetic over the Gaussian rationals.

use num_traits::{One, Zero};

use super::poly::{coeff_int, Coeff};

/// Determinant by Gaussian elimination in exact arithmetic.
pub fn determinant(mut m: Vec<Vec<Coeff>>) -> Coeff {
    let n = m.len();
    let mut det = Coeff::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Coeff::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        let inv = Coeff::one() / &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] * &inv;
            for k in col..n {
                let delta = &factor * &m[col][k];
                m[r][k] = &m[r][k] - delta;
            }
        }
    }
    det
}

/// Solution of `A z = b` with free variables set to zero, or `None` if inconsistent.
///
/// Pivots are taken leftmost-first, so earlier columns are preferred as basic variables.
pub fn solve(a: &[Vec<Coeff>], b: &[Coeff]) -> Option<Vec<Coeff>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Coeff>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&k| !m[k][col].is_zero()) else {
            continue;
        };
        m.swap(p, r);
        let inv = Coeff::one() / &m[r][col];
        for k in col..=cols {
            m[r][k] = &m[r][k] * &inv;
        }
        for other in 0..rows {
            if other == r || m[other][col].is_zero() {
                continue;
            }
            let factor = m[other][col].clone();
            for k in col..=cols {
                let delta = &factor * &m[r][k];
                m[other][k] = &m[other][k] - delta;
            }
        }
        pivots.push(col);
        r += 1;
    }
    if m[r..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    let mut z = vec![Coeff::zero(); cols];
    for (k, &col) in pivots.iter().enumerate() {
        z[col] = m[k][cols].clone();
    }
    Some(z)
}

fn trim(mut p: Vec<Coeff>) -> Vec<Coeff> {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    if p.is_empty() {
        p.push(Coeff::zero());
    }
    p
}

pub fn uni_is_zero(p: &[Coeff]) -> bool {
    p.iter().all(Zero::is_zero)
}

pub fn uni_degree(p: &[Coeff]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub fn uni_derivative(p: &[Coeff]) -> Vec<Coeff> {
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * coeff_int(k as i64))
            .collect(),
    )
}

/// Remainder of `a` modulo `b` (b nonzero).
fn uni_rem(a: &[Coeff], b: &[Coeff]) -> Vec<Coeff> {
    let db = uni_degree(b).expect("division by zero polynomial");
    let lead_inv = Coeff::one() / &b[db];
    let mut r = trim(a.to_vec());
    while let Some(dr) = uni_degree(&r) {
        if dr < db {
            break;
        }
        let q = &r[dr] * &lead_inv;
        for k in 0..=db {
            let delta = &q * &b[k];
            r[dr - db + k] = &r[dr - db + k] - delta;
        }
        r = trim(r);
        if uni_is_zero(&r) {
            break;
        }
    }
    r
}

/// Monic greatest common divisor; the zero polynomial if both inputs vanish.
pub fn uni_gcd(a: &[Coeff], b: &[Coeff]) -> Vec<Coeff> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !uni_is_zero(&b) {
        let r = uni_rem(&a, &b);
        a = b;
        b = r;
    }
    match uni_degree(&a) {
        Some(d) => {
            let inv = Coeff::one() / &a[d];
            a.iter().map(|c| c * &inv).collect()
        }
        None => a,
    }
}

/// Coefficients of the polynomial of degree < n through the points (x_k, v_k).
pub fn interpolate(xs: &[Coeff], vs: &[Coeff]) -> Vec<Coeff> {
    let n = xs.len();
    // Newton divided differences
    let mut dd = vs.to_vec();
    for level in 1..n {
        for k in (level..n).rev() {
            let num = &dd[k] - &dd[k - 1];
            let den = &xs[k] - &xs[k - level];
            dd[k] = num / den;
        }
    }
    let mut coeffs = vec![Coeff::zero(); n.max(1)];
    for k in (0..n).rev() {
        // coeffs = coeffs * (x - xs[k]) + dd[k]
        let mut next = vec![Coeff::zero(); n.max(1)];
        for j in 0..n {
            if coeffs[j].is_zero() {
                continue;
            }
            if j + 1 < n {
                next[j + 1] = &next[j + 1] + &coeffs[j];
            }
            let delta = &coeffs[j] * &xs[k];
            next[j] = &next[j] - delta;
        }
        next[0] = &next[0] + &dd[k];
        coeffs = next;
    }
    trim(coeffs)
}
