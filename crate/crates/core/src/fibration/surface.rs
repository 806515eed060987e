use crate::algebra::poly::{coeff_to_c64, BivarPoly, NumPolyJet};
use crate::algebra::hyperelliptic_part;
use crate::numeric::{all_roots, sqrt_near, UniPoly, C64};

use super::FibrationError;

/// The polynomial `f` together with whatever structure its fibers carry.
#[derive(Debug, Clone)]
pub enum Surface {
    /// `f = y² − g(x)`: fibers are double covers of the x-line branched at the roots of `g + t`.
    Hyperelliptic(Hyperelliptic),
    /// Any other `f`: fibers are followed by Newton continuation in `y`.
    General(NumPolyJet),
}

#[derive(Debug, Clone)]
pub struct Hyperelliptic {
    pub g: UniPoly,
    pub dg: UniPoly,
    pub d2g: UniPoly,
}

impl Hyperelliptic {
    pub fn new(g: UniPoly) -> Self {
        let dg = g.derivative();
        let d2g = dg.derivative();
        Hyperelliptic { g, dg, d2g }
    }
}

impl Surface {
    pub fn new(f: &BivarPoly) -> Self {
        match hyperelliptic_part(f) {
            Some(g) if g.len() >= 3 => {
                Surface::Hyperelliptic(Hyperelliptic::new(UniPoly::new(g.iter().map(coeff_to_c64).collect())))
            }
            _ => Surface::General(NumPolyJet::from(f)),
        }
    }

    pub fn hyperelliptic(&self) -> Option<&Hyperelliptic> {
        match self {
            Surface::Hyperelliptic(h) => Some(h),
            Surface::General(_) => None,
        }
    }

    pub fn value(&self, x: C64, y: C64) -> C64 {
        match self {
            Surface::Hyperelliptic(h) => y * y - h.g.eval(x),
            Surface::General(j) => j.f.eval(x, y),
        }
    }

    pub fn gradient(&self, x: C64, y: C64) -> (C64, C64) {
        match self {
            Surface::Hyperelliptic(h) => (-h.dg.eval(x), y * 2.0),
            Surface::General(j) => j.gradient(x, y),
        }
    }

    /// Point of the fiber `t` over `x` closest to the sheet of `guess`.
    pub fn project_y(&self, x: C64, guess: C64, t: C64) -> C64 {
        match self {
            Surface::Hyperelliptic(h) => sqrt_near(h.g.eval(x) + t, guess),
            Surface::General(j) => {
                let mut y = guess;
                for _ in 0..30 {
                    let r = j.f.eval(x, y) - t;
                    let d = j.fy.eval(x, y);
                    if d.norm() == 0.0 {
                        break;
                    }
                    let step = r / d;
                    y -= step;
                    if step.norm() <= 1e-16 * (1.0 + y.norm()) {
                        break;
                    }
                }
                y
            }
        }
    }

    /// The fiber over `t` with its branch points when available.
    pub fn fiber(&self, t: C64, warm: Option<&[C64]>) -> Result<FiberAt<'_>, FibrationError> {
        let branch = match self {
            Surface::Hyperelliptic(h) => all_roots(&h.g.shifted(t), warm, 1e-8)
                .map_err(|e| FibrationError::RootSolveFailure(e.to_string()))?
                .roots,
            Surface::General(_) => Vec::new(),
        };
        Ok(FiberAt { surface: self, t, branch })
    }
}

/// A single fiber `f = t`.
#[derive(Debug, Clone)]
pub struct FiberAt<'a> {
    pub surface: &'a Surface,
    pub t: C64,
    /// Branch points of the x-projection (hyperelliptic fibers only).
    pub branch: Vec<C64>,
}

impl FiberAt<'_> {
    pub fn branch_distance(&self, x: C64) -> f64 {
        self.branch.iter().map(|e| (x - e).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Values of `y` along the straight segment `x0 → x1` at the increasing
    /// fractions `us`, continuing the sheet of `y0` at `x0`.
    pub fn lift(&self, x0: C64, y0: C64, x1: C64, us: &[f64]) -> Result<Vec<C64>, FibrationError> {
        match self.surface {
            Surface::Hyperelliptic(_) => Ok(self.lift_hyperelliptic(x0, y0, x1, us)),
            Surface::General(jet) => lift_newton(jet, self.t, x0, y0, x1, us),
        }
    }

    pub fn lift_to(&self, x0: C64, y0: C64, x1: C64) -> Result<C64, FibrationError> {
        Ok(self.lift(x0, y0, x1, &[1.0])?[0])
    }

    // y(x) = y_a ∏ sqrt((x − e_k)/(x_a − e_k)), exact while |x − x_a| < |x_a − e_k|
    fn lift_hyperelliptic(&self, x0: C64, y0: C64, x1: C64, us: &[f64]) -> Vec<C64> {
        let dx = x1 - x0;
        let length = dx.norm();
        let ratio_lift = |xa: C64, ya: C64, x: C64| -> C64 {
            self.branch.iter().fold(ya, |acc, e| acc * ((x - e) / (xa - e)).sqrt())
        };
        let mut anchor_u = 0.0;
        let (mut xa, mut ya) = (x0, y0);
        let mut out = Vec::with_capacity(us.len());
        for &u in us {
            loop {
                let reach = 0.5 * self.branch_distance(xa);
                if (u - anchor_u) * length <= reach || reach == 0.0 {
                    break;
                }
                let next_u = anchor_u + reach / length;
                let xn = x0 + dx * next_u;
                ya = ratio_lift(xa, ya, xn);
                xa = xn;
                anchor_u = next_u;
            }
            out.push(ratio_lift(xa, ya, x0 + dx * u));
        }
        out
    }
}

fn lift_newton(
    jet: &NumPolyJet,
    t: C64,
    x0: C64,
    y0: C64,
    x1: C64,
    us: &[f64],
) -> Result<Vec<C64>, FibrationError> {
    let dx = x1 - x0;
    let (mut u, mut y) = (0.0f64, y0);
    let mut h = 0.05f64;
    let mut out = Vec::with_capacity(us.len());
    let newton = |x: C64, mut yy: C64| -> Option<C64> {
        for _ in 0..12 {
            let d = jet.fy.eval(x, yy);
            if d.norm() == 0.0 {
                return None;
            }
            let step = (jet.f.eval(x, yy) - t) / d;
            yy -= step;
            if step.norm() <= 1e-15 * (1.0 + yy.norm()) {
                return Some(yy);
            }
        }
        let r = (jet.f.eval(x, yy) - t).norm();
        (r <= 1e-10 * (1.0 + yy.norm())).then_some(yy)
    };
    for &target in us {
        while u < target {
            let step = h.min(target - u);
            let x = x0 + dx * u;
            let slope = -jet.fx.eval(x, y) / jet.fy.eval(x, y);
            let guess = y + slope * dx * step;
            match newton(x0 + dx * (u + step), guess) {
                Some(yn) if (yn - guess).norm() <= 0.1 * (1.0 + y.norm()) * step.sqrt() => {
                    u += step;
                    y = yn;
                    h = (h * 1.5).min(0.1);
                }
                _ => {
                    h *= 0.5;
                    if h < 1e-12 {
                        return Err(FibrationError::LiftFailure { x: x0 + dx * u });
                    }
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}
