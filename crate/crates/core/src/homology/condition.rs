use serde::{Deserialize, Serialize};

use super::{CycleClass, HomologyError, IntersectionForm};

/// Default cap on `(2r+1)^μ` lattice points for the enumeration.
pub const BRUTE_FORCE_BUDGET: u128 = 2_000_000;

/// Which part of the criterion decided the verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionBranch {
    /// `⟨d1, ·⟩ ≡ 0`.
    FirstPairingZero,
    /// `⟨d2, ·⟩ ≡ 0`.
    SecondPairingZero,
    /// The two pairing rows are linearly independent; the witnesses are basis
    /// indices where the 2×2 minor is nonzero.
    Independent { minor: (usize, usize) },
    /// The rows are proportional and nonzero; `delta` pairs nontrivially with both.
    Violated { delta: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub holds: bool,
    pub certificate: ConditionBranch,
}

/// The quantified condition on `d1, d2` decided through the pairing rows
/// `L_k = ⟨d_k, ·⟩`: it holds iff `L₁ ≡ 0`, `L₂ ≡ 0`, or `L₁, L₂` are independent.
pub fn condition_faca(d1: &CycleClass, d2: &CycleClass, form: &IntersectionForm) -> ConditionVerdict {
    let l1 = form.pairing_row(d1);
    let l2 = form.pairing_row(d2);
    if l1.iter().all(|&a| a == 0) {
        return ConditionVerdict { holds: true, certificate: ConditionBranch::FirstPairingZero };
    }
    if l2.iter().all(|&a| a == 0) {
        return ConditionVerdict { holds: true, certificate: ConditionBranch::SecondPairingZero };
    }
    let n = l1.len();
    for i in 0..n {
        for j in i + 1..n {
            if l1[i] as i128 * l2[j] as i128 - l1[j] as i128 * l2[i] as i128 != 0 {
                return ConditionVerdict { holds: true, certificate: ConditionBranch::Independent { minor: (i, j) } };
            }
        }
    }
    let k = l1.iter().position(|&a| a != 0).unwrap();
    let mut delta = vec![0; n];
    delta[k] = 1;
    ConditionVerdict { holds: false, certificate: ConditionBranch::Violated { delta } }
}

/// Literal evaluation of the quantified condition over the box `[−r, r]^μ`.
///
/// Returns the verdict and, when it fails, the first violating `δ`.
pub fn condition_faca_bruteforce(
    d1: &CycleClass,
    d2: &CycleClass,
    form: &IntersectionForm,
    box_radius: i64,
    budget: u128,
) -> Result<(bool, Option<Vec<i64>>), HomologyError> {
    let mu = form.mu();
    let side = (2 * box_radius.max(1) + 1) as u128;
    let size = side.checked_pow(mu as u32).unwrap_or(u128::MAX);
    if size > budget {
        return Err(HomologyError::SizeLimit { size, budget });
    }
    let r = box_radius.max(1);
    // ⟨d, δ⟩ = Σ_j L_d[j] δ_j
    let l1 = form.pairing_row(d1);
    let l2 = form.pairing_row(d2);
    let mut delta = vec![-r; mu];
    loop {
        // ⟨δ, d_k⟩ = −⟨d_k, δ⟩, so the zero tests can use either order
        let (u, v) = (dot(&l1, &delta), dot(&l2, &delta));
        if u != 0 && v != 0 {
            let mut found = false;
            let mut dp = vec![-r; mu];
            loop {
                if u * dot(&l2, &dp) - v * dot(&l1, &dp) != 0 {
                    found = true;
                    break;
                }
                if !advance(&mut dp, r) {
                    break;
                }
            }
            if !found {
                return Ok((false, Some(delta)));
            }
        }
        if !advance(&mut delta, r) {
            return Ok((true, None));
        }
    }
}

fn dot(l: &[i64], d: &[i64]) -> i64 {
    l.iter().zip(d).map(|(a, b)| a * b).sum()
}

fn advance(v: &mut [i64], r: i64) -> bool {
    for x in v.iter_mut() {
        if *x < r {
            *x += 1;
            return true;
        }
        *x = -r;
    }
    false
}
