//! Closed forms and fixed-point machinery for the freezing analysis.
//!
//! The central objects are the one-dimensional freezing map
//! `phi_d(a) = 1 - exp(-d exp(-d(1-a)))`, the nullity functional
//! `Phi_d(a) = exp(-d exp(-d(1-a))) + (1 + d(1-a)) exp(-d(1-a)) - 1`,
//! their fixed points, and the induced message-distribution update.
//! Below the critical density `e` the map has a unique fixed point; above
//! it there are two stable ones and an unstable one in between, found at
//! the root of `1 - a - exp(-d(1-a))`.

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::wp::Mark;

#[derive(Debug)]
pub enum AnalyticsError {
    Domain(String),
    NoConvergence(String),
}

impl fmt::Display for AnalyticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticsError::Domain(msg) => write!(f, "domain error: {msg}"),
            AnalyticsError::NoConvergence(msg) => write!(f, "no convergence: {msg}"),
        }
    }
}

impl std::error::Error for AnalyticsError {}

/// `exp(-d (1 - a))`, the decay factor every closed form is built from.
pub fn decay(d: f64, a: f64) -> f64 {
    (-d * (1.0 - a)).exp()
}

/// The freezing map.
pub fn phi(d: f64, a: f64) -> f64 {
    1.0 - (-d * decay(d, a)).exp()
}

/// The nullity functional.
pub fn cap_phi(d: f64, a: f64) -> f64 {
    (-d * decay(d, a)).exp() + (1.0 + d * (1.0 - a)) * decay(d, a) - 1.0
}

/// All point values: decay, map, functional and first two derivatives.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PointEval {
    pub decay: f64,
    pub phi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub cap_phi: f64,
    pub cap_phi1: f64,
    pub cap_phi2: f64,
}

/// Evaluates every closed form at one point.
pub fn eval(d: f64, a: f64) -> Result<PointEval, AnalyticsError> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(AnalyticsError::Domain(format!(
            "d={d} must be finite and >= 0"
        )));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(AnalyticsError::Domain(format!("alpha={a} outside [0,1]")));
    }
    let dd = decay(d, a);
    let outer = (-d * dd).exp(); // exp(-d exp(-d(1-a)))
    let phi = 1.0 - outer;
    let phi1 = d * d * outer * dd;
    let phi2 = d * d * d * outer * dd * (1.0 - d * dd);
    let cap_phi = outer + (1.0 + d * (1.0 - a)) * dd - 1.0;
    let cap_phi1 = d * d * dd * (phi - a);
    let cap_phi2 = d * d * d * dd * (phi - a) + d * d * dd * (phi1 - 1.0);
    Ok(PointEval {
        decay: dd,
        phi,
        phi1,
        phi2,
        cap_phi,
        cap_phi1,
        cap_phi2,
    })
}

/// Fixed points and derived constants for one density.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AnalyticProfile {
    pub d: f64,
    /// Least fixed point (limit of iteration from 0).
    pub alpha_star: f64,
    /// Unstable fixed point; equals `alpha_star` for d <= e.
    pub alpha_zero: f64,
    /// Largest fixed point (limit of iteration from 1).
    pub alpha_upper: f64,
    /// Zero of the convexity switch, `1 - ln(d)/d`.
    pub alpha_bar: f64,
    /// Slush branching rate `d (alpha_upper - alpha_star)`.
    pub lambda: f64,
    /// Limiting slush fraction.
    pub nu: f64,
    /// Functional values at the three fixed points.
    pub cap_phi_at: [f64; 3],
    pub tol: f64,
}

const NEAR_CRITICAL_WINDOW: f64 = 1e-3;

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, steps: usize) -> f64 {
    // invariant: f(lo) > 0 >= f(hi) in exact arithmetic
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn polish_fixed_point(d: f64, mut x: f64, lo: f64, hi: f64) -> f64 {
    // Newton on h(a) = phi(a) - a; the slope is bounded away from zero at
    // the stable fixed points
    for _ in 0..30 {
        let ev = eval(d, x.clamp(0.0, 1.0)).expect("domain");
        let h = ev.phi - x;
        let h1 = ev.phi1 - 1.0;
        if h1 == 0.0 {
            break;
        }
        let next = x - h / h1;
        if !next.is_finite() || next < lo || next > hi {
            break;
        }
        if (next - x).abs() <= f64::EPSILON * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

fn iterate_phi(d: f64, start: f64) -> f64 {
    let mut x = start;
    for _ in 0..1_000_000usize {
        let next = phi(d, x);
        if (next - x).abs() < 4.0 * f64::EPSILON {
            return next;
        }
        x = next;
    }
    x
}

/// `ln(sinh(x)/x)` by series; accurate for `|x| < 0.1`.
fn ln_sinhc(x: f64) -> f64 {
    let x2 = x * x;
    x2 / 6.0 - x2 * x2 / 180.0 + x2 * x2 * x2 / 2835.0
}

/// `x coth(x)` by series; accurate for `|x| < 0.1`.
fn x_coth(x: f64) -> f64 {
    let x2 = x * x;
    1.0 + x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2 * x2 * x2 / 945.0
}

/// The stable fixed points just above the critical density.
///
/// Writing the two points as `m +- delta`, the pair of decay relations
/// that swap them reduces to `ln(sinh(d delta)/delta) = d delta
/// coth(d delta)`, a one-dimensional equation with a simple root in the
/// half-gap; the midpoint follows from `1 - m = delta coth(d delta)`.
/// Direct sign bisection of the map would lose six digits here because
/// it degenerates cubically at the critical point.
fn near_critical_pair(d: f64) -> (f64, f64) {
    // g(delta) = ln(d) + ln_sinhc(x) - x coth(x) with x = d delta;
    // positive at zero (ln d > 1), strictly decreasing
    let g = |delta: f64| {
        let x = d * delta;
        d.ln() + ln_sinhc(x) - x_coth(x)
    };
    let delta = bisect(g, 0.0, 0.03, 120);
    let m = 1.0 - x_coth(d * delta) / d;
    (m - delta, m + delta)
}

/// Solves for the fixed points of the freezing map.
///
/// The least and largest fixed points come from iterating the map from 0
/// and 1 with a Newton polish; inside the near-critical window around
/// `d = e`, where the iteration converges only polynomially and the map
/// degenerates, they come from the reduced gap equation instead. The
/// unstable point is the root of `1 - a - exp(-d(1-a))`, located by
/// bisection.
pub fn fixed_points(d: f64, tol: f64) -> Result<AnalyticProfile, AnalyticsError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(AnalyticsError::Domain(format!(
            "d={d} must be finite and > 0"
        )));
    }
    if !(tol > 1e-15 && tol < 1e-6) {
        return Err(AnalyticsError::Domain(format!(
            "tol={tol} outside (1e-15, 1e-6)"
        )));
    }
    // the root of 1 - a - exp(-d(1-a)); strictly decreasing, one root,
    // slope below -1 everywhere, so it is pinned to machine precision
    let g = |a: f64| 1.0 - a - decay(d, a);
    let g_root = bisect(g, 0.0, 1.0, 120);

    let near_critical = (d - E).abs() < NEAR_CRITICAL_WINDOW;
    let (alpha_star, alpha_zero, alpha_upper) = if d <= E {
        // the unique fixed point of the map also solves g: the decay map
        // permutes fixed points and here there is only one
        let a = if near_critical {
            g_root
        } else {
            polish_fixed_point(d, iterate_phi(d, 0.0), 0.0, 1.0)
        };
        (a, a, a)
    } else if near_critical {
        let (lo, hi) = near_critical_pair(d);
        (lo, g_root, hi)
    } else {
        let lo = polish_fixed_point(d, iterate_phi(d, 0.0), 0.0, g_root);
        let hi = polish_fixed_point(d, iterate_phi(d, 1.0), g_root, 1.0);
        (lo, g_root, hi)
    };

    for (name, a) in [("alpha_star", alpha_star), ("alpha_upper", alpha_upper)] {
        let resid = (phi(d, a) - a).abs();
        if resid > tol {
            return Err(AnalyticsError::NoConvergence(format!(
                "{name} residual {resid} exceeds tol {tol} at d={d}"
            )));
        }
    }
    let lambda = (d * (alpha_upper - alpha_star)).max(0.0);
    // P[no frozen message] * P[at least two slush messages] at a node
    // whose incoming messages follow the stationary law
    let mut nu = decay(d, alpha_upper) * (1.0 - (1.0 + lambda) * (-lambda).exp());
    if nu.abs() < tol {
        nu = 0.0; // exact zero at and below the critical density
    }
    debug_assert!(nu >= 0.0, "negative slush fraction {nu} at d={d}");
    Ok(AnalyticProfile {
        d,
        alpha_star,
        alpha_zero,
        alpha_upper,
        alpha_bar: 1.0 - d.ln() / d,
        lambda,
        nu,
        cap_phi_at: [
            cap_phi(d, alpha_star),
            cap_phi(d, alpha_zero),
            cap_phi(d, alpha_upper),
        ],
        tol,
    })
}

/// A degenerate profile for the edgeless case `d = 0`: everything is
/// unfrozen and the kernel is full.
pub fn zero_density_profile() -> AnalyticProfile {
    AnalyticProfile {
        d: 0.0,
        alpha_star: 0.0,
        alpha_zero: 0.0,
        alpha_upper: 0.0,
        alpha_bar: f64::INFINITY,
        lambda: 0.0,
        nu: 0.0,
        cap_phi_at: [1.0, 1.0, 1.0],
        tol: 0.0,
    }
}

/// A pair of message laws: incoming at a variable and at a check, each a
/// probability triple over (f, s, u).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageDistribution {
    pub at_var: [f64; 3],
    pub at_check: [f64; 3],
}

impl MessageDistribution {
    /// The all-slush start.
    pub fn all_slush() -> Self {
        Self {
            at_var: [0.0, 1.0, 0.0],
            at_check: [0.0, 1.0, 0.0],
        }
    }

    /// The stationary law built from a fixed-point profile.
    pub fn stationary(profile: &AnalyticProfile) -> Self {
        let (a, b) = (profile.alpha_star, profile.alpha_upper);
        Self {
            at_var: [1.0 - b, b - a, a],
            at_check: [a, b - a, 1.0 - b],
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        for triple in [self.at_var, self.at_check] {
            if triple.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
                return Err(AnalyticsError::Domain(format!(
                    "bad probability in {triple:?}"
                )));
            }
            if (triple.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(AnalyticsError::Domain(format!(
                    "{triple:?} does not sum to 1"
                )));
            }
        }
        Ok(())
    }

    /// Sum of the total-variation distances of the two triples.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        let tv = |x: [f64; 3], y: [f64; 3]| -> f64 {
            x.iter()
                .zip(y.iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 2.0
        };
        tv(self.at_var, other.at_var) + tv(self.at_check, other.at_check)
    }
}

/// One application of the distributional update: each outgoing message is
/// recomputed from Poisson-many incoming ones.
pub fn dist_update(q: &MessageDistribution, d: f64) -> MessageDistribution {
    let [cf, cs, cu] = q.at_check;
    let [vf, vs, _vu] = q.at_var;
    let _ = cf;
    MessageDistribution {
        at_var: [
            // a check emits f when no other neighbour reports s or u
            (-d * (cu + cs)).exp(),
            // s: no unfrozen neighbour but at least one slush
            (-d * cu).exp() * (1.0 - (-d * cs).exp()),
            // u: some neighbour reports unfrozen
            1.0 - (-d * cu).exp(),
        ],
        at_check: [
            // a variable emits f when some check froze it
            1.0 - (-d * vf).exp(),
            (-d * vf).exp() * (1.0 - (-d * vs).exp()),
            (-d * (vf + vs)).exp(),
        ],
    }
}

/// Iterates the update until the step is below `tol` in total variation.
pub fn dist_limit(
    q0: &MessageDistribution,
    d: f64,
    tol: f64,
) -> Result<MessageDistribution, AnalyticsError> {
    q0.validate()?;
    let mut q = *q0;
    for _ in 0..1_000_000usize {
        let next = dist_update(&q, d);
        if next.tv_distance(&q) < tol {
            return Ok(next);
        }
        q = next;
    }
    Err(AnalyticsError::NoConvergence(format!(
        "distribution update did not settle at d={d}"
    )))
}

/// Poisson point mass, computed by running the product up from zero.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let mut p = (-lambda).exp();
    for i in 1..=k {
        p *= lambda / i as f64;
    }
    p
}

/// Point mass of a Poisson conditioned on being at least two.
pub fn po_ge2(lambda: f64, ell: u64) -> Result<f64, AnalyticsError> {
    if ell < 2 {
        return Err(AnalyticsError::Domain(format!(
            "po_ge2 needs ell >= 2, got {ell}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(AnalyticsError::Domain(format!(
            "po_ge2 needs lambda > 0, got {lambda}"
        )));
    }
    let tail = 1.0 - (-lambda).exp() * (1.0 + lambda);
    Ok(poisson_pmf(lambda, ell) / tail)
}

/// Generalised degree law of a variable with mark `z` and per-direction
/// edge counts `l = (l_uu, l_uf, l_fu, l_ff)`; `alpha_hat` is the
/// probability that an incoming message is frozen.
pub fn gen_deg_d(d: f64, alpha_hat: f64, z: Mark, l: [u64; 4]) -> f64 {
    let [l_uu, l_uf, l_fu, l_ff] = l;
    match z {
        Mark::U => {
            if l_fu != 0 || l_uf != 0 || l_ff != 0 {
                return 0.0;
            }
            poisson_pmf(d * alpha_hat, 0) * poisson_pmf(d * (1.0 - alpha_hat), l_uu)
        }
        Mark::Star => {
            if l_fu != 1 || l_uu != 0 || l_ff != 0 {
                return 0.0;
            }
            poisson_pmf(d * alpha_hat, 1) * poisson_pmf(d * (1.0 - alpha_hat), l_uf)
        }
        Mark::F => {
            if l_fu != 0 || l_uu != 0 || l_ff < 2 {
                return 0.0;
            }
            poisson_pmf(d * alpha_hat, l_ff) * poisson_pmf(d * (1.0 - alpha_hat), l_uf)
        }
    }
}

/// Generalised degree law of a check with mark `z`; `alpha` is the
/// probability that an incoming message is frozen.
pub fn gen_deg_g(d: f64, alpha: f64, z: Mark, l: [u64; 4]) -> f64 {
    let [l_uu, l_uf, l_fu, l_ff] = l;
    match z {
        Mark::U => {
            if l_uf != 0 || l_ff != 0 || l_uu < 2 {
                return 0.0;
            }
            poisson_pmf(d * (1.0 - alpha), l_uu) * poisson_pmf(d * alpha, l_fu)
        }
        Mark::Star => {
            if l_uf != 1 || l_uu != 0 || l_ff != 0 {
                return 0.0;
            }
            poisson_pmf(d * (1.0 - alpha), 1) * poisson_pmf(d * alpha, l_fu)
        }
        Mark::F => {
            if l_fu != 0 || l_uf != 0 || l_uu != 0 {
                return 0.0;
            }
            poisson_pmf(d * (1.0 - alpha), 0) * poisson_pmf(d * alpha, l_ff)
        }
    }
}

/// Limiting densities of three structural node sets: degree-two all-slush
/// checks, isolated variables, and degree-two variables whose both
/// neighbours are degree-three all-slush checks.
pub fn slush_constants(d: f64, profile: &AnalyticProfile) -> (f64, f64, f64) {
    let lambda = profile.lambda;
    let s_bar = (-d).exp();
    if lambda <= 0.0 {
        return (0.0, s_bar, 0.0);
    }
    let r_bar = (-d).exp() * lambda * lambda / 2.0;
    let inner = (-d * profile.alpha_upper).exp() * lambda * lambda / 2.0 / (1.0 - (-lambda).exp());
    let u_bar = r_bar * inner * inner;
    (r_bar, s_bar, u_bar)
}

/// Residuals of the algebraic identities the fixed points must satisfy.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityReport {
    pub d: f64,
    /// Functional values agree at the two stable fixed points.
    pub residual_cap_phi_equal: f64,
    /// The decay map swaps the two stable fixed points.
    pub residual_mutual: f64,
    /// Closed form of the functional at the unstable point.
    pub residual_cap_phi_alpha0: f64,
    /// Stationarity of the limiting message law.
    pub residual_q_stationary: f64,
    /// Subcriticality statistic of the contracted slush; below one for
    /// densities above the critical point.
    pub subcritical_value: Option<f64>,
    pub max_residual: f64,
    pub all_pass: bool,
}

pub const IDENTITY_RESIDUAL_LIMIT: f64 = 1e-9;

/// Evaluates the identity suite at one density.
pub fn identity_suite(d: f64, tol: f64) -> Result<IdentityReport, AnalyticsError> {
    let profile = fixed_points(d, tol)?;
    let (a, a0, b) = (profile.alpha_star, profile.alpha_zero, profile.alpha_upper);
    let residual_cap_phi_equal = (cap_phi(d, a) - cap_phi(d, b)).abs();
    let residual_mutual = ((1.0 - b) - decay(d, a))
        .abs()
        .max(((1.0 - a) - decay(d, b)).abs());
    let residual_cap_phi_alpha0 =
        (cap_phi(d, a0) - (1.0 - 2.0 * a0 + d * (1.0 - a0) * (1.0 - a0))).abs();
    let q_star = MessageDistribution::stationary(&profile);
    let residual_q_stationary = dist_update(&q_star, d).tv_distance(&q_star);
    let subcritical_value = if d > E {
        let l = profile.lambda;
        // exp_m1 keeps the margin 1 - v ~ l^2/12 representable near the
        // critical density
        Some(l * l * l.exp() / l.exp_m1().powi(2))
    } else {
        None
    };
    let max_residual = residual_cap_phi_equal
        .max(residual_mutual)
        .max(residual_cap_phi_alpha0)
        .max(residual_q_stationary);
    // a sub-resolution subcritical margin counts as satisfied
    let all_pass = max_residual <= IDENTITY_RESIDUAL_LIMIT
        && subcritical_value.is_none_or(|v| v - 1.0 < IDENTITY_RESIDUAL_LIMIT);
    Ok(IdentityReport {
        d,
        residual_cap_phi_equal,
        residual_mutual,
        residual_cap_phi_alpha0,
        residual_q_stationary,
        subcritical_value,
        max_residual,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent root finder used as the test oracle: plain bisection
    /// on an explicitly bracketed sign change.
    fn bisect_oracle<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
        assert!(f(lo) > 0.0 && f(hi) < 0.0, "oracle bracket invalid");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eval_critical_point() {
        // at d = e the convexity switch is a fixed point with unit slope
        let ev = eval(E, 1.0 - 1.0 / E).unwrap();
        assert!((ev.phi - (1.0 - 1.0 / E)).abs() < 1e-14);
        assert!((ev.phi1 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn eval_boundary_alpha_one() {
        for d in [0.3, 1.0, 2.5, 3.0, 7.0] {
            let ev = eval(d, 1.0).unwrap();
            assert!((ev.phi - (1.0 - (-d).exp())).abs() < 1e-15);
        }
        assert!(eval(3.0, 1.5).is_err());
        assert!(eval(-1.0, 0.5).is_err());
    }

    /// Five-point central difference for the first derivative.
    fn fd1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    /// Five-point central difference for the second derivative.
    fn fd2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
            / (12.0 * h * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // relative agreement with a floor of one
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-6 * (1.0 + y.abs());
        let h = 5e-4;
        for d in [0.5, 1.0, 2.5, 3.0, 5.0, 10.0] {
            for k in 1..10 {
                let a = k as f64 / 10.0;
                let ev = eval(d, a).unwrap();
                assert!(close(fd1(|x| phi(d, x), a, h), ev.phi1), "phi1 d={d} a={a}");
                assert!(
                    close(fd1(|x| cap_phi(d, x), a, h), ev.cap_phi1),
                    "cap_phi1 d={d} a={a}"
                );
                assert!(close(fd2(|x| phi(d, x), a, h), ev.phi2), "phi2 d={d} a={a}");
                assert!(
                    close(fd2(|x| cap_phi(d, x), a, h), ev.cap_phi2),
                    "cap_phi2 d={d} a={a}"
                );
            }
        }
    }

    #[test]
    fn cap_phi1_formula_consistent() {
        // d=3, a=0.5: the closed form against a central difference
        let ev = eval(3.0, 0.5).unwrap();
        let h = 1e-6;
        let fd = (cap_phi(3.0, 0.5 + h) - cap_phi(3.0, 0.5 - h)) / (2.0 * h);
        assert!((fd - ev.cap_phi1).abs() < 1e-6);
    }

    #[test]
    fn fixed_points_critical_density() {
        let p = fixed_points(E, 1e-12).unwrap();
        let expect = 1.0 - 1.0 / E;
        assert!((p.alpha_star - expect).abs() < 1e-6);
        assert!((p.alpha_upper - expect).abs() < 1e-6);
        assert!((p.alpha_zero - expect).abs() < 1e-6);
        assert_eq!(p.nu, 0.0);
    }

    #[test]
    fn fixed_points_d1_matches_bisection_oracle() {
        let p = fixed_points(1.0, 1e-12).unwrap();
        let oracle = bisect_oracle(|a| phi(1.0, a) - a, 0.0, 1.0);
        assert!((p.alpha_star - oracle).abs() < 1e-10);
        assert!((p.alpha_upper - oracle).abs() < 1e-10);
    }

    #[test]
    fn fixed_points_d3_match_oracles() {
        let p = fixed_points(3.0, 1e-12).unwrap();
        // unstable point: root of 1 - a = exp(-3(1-a))
        let a0 = bisect_oracle(|a| 1.0 - a - decay(3.0, a), 0.0, 1.0);
        assert!((p.alpha_zero - a0).abs() < 1e-10);
        assert!((p.alpha_zero - 0.6500).abs() < 5e-4);
        // stable points by independent bisection inside each bracket
        let lo = bisect_oracle(|a| phi(3.0, a) - a, 0.0, a0 - 1e-6);
        assert!((p.alpha_star - lo).abs() < 1e-10);
        assert!((p.alpha_star - 0.335).abs() < 5e-4);
        let hi = bisect_oracle(|a| phi(3.0, a) - a, a0 + 1e-6, 1.0);
        assert!((p.alpha_upper - hi).abs() < 1e-10);
        assert!((p.alpha_upper - 0.864).abs() < 5e-4);
        assert!(p.nu > 0.0 && p.lambda > 0.0);
    }

    #[test]
    fn fixed_points_rejects_bad_input() {
        assert!(fixed_points(0.0, 1e-12).is_err());
        assert!(fixed_points(3.0, 1e-3).is_err());
        assert!(fixed_points(3.0, 1e-16).is_err());
    }

    #[test]
    fn iteration_is_monotone() {
        for d in [1.0, 2.5, 3.0, 4.0] {
            let mut x = 0.0;
            for _ in 0..200 {
                let next = phi(d, x);
                assert!(next >= x, "iteration from 0 must be nondecreasing");
                x = next;
            }
            let mut y: f64 = 1.0;
            for _ in 0..200 {
                let next = phi(d, y);
                assert!(next <= y, "iteration from 1 must be nonincreasing");
                y = next;
            }
            let p = fixed_points(d, 1e-12).unwrap();
            assert!(x <= p.alpha_star + 1e-9);
            assert!(y >= p.alpha_upper - 1e-9);
        }
    }

    #[test]
    fn phi_strictly_increasing_on_grid() {
        for d in [0.5, 1.0, E, 3.0, 6.0] {
            for k in 0..1000 {
                let a = k as f64 / 1000.0;
                assert!(eval(d, a).unwrap().phi1 > 0.0);
            }
        }
    }

    #[test]
    fn convexity_structure() {
        // the second derivative is positive at zero, changes sign exactly
        // at the convexity switch for d >= 1, and the map is a strict
        // contraction below the critical density
        for d in [0.5, 1.0, 2.0, E, 3.0, 6.0] {
            assert!(eval(d, 0.0).unwrap().phi2 > 0.0, "d={d}");
            let bar = 1.0 - d.ln() / d;
            if (0.0..=1.0).contains(&bar) {
                assert!(d >= 1.0);
                assert!(eval(d, bar).unwrap().phi2.abs() < 1e-12, "d={d}");
                assert!(eval(d, (bar - 0.05).max(0.0)).unwrap().phi2 > 0.0);
                if bar + 0.05 <= 1.0 {
                    assert!(eval(d, bar + 0.05).unwrap().phi2 < 0.0);
                }
            }
        }
        for d in [0.5, 1.5, 2.5] {
            for k in 0..=100 {
                assert!(eval(d, k as f64 / 100.0).unwrap().phi1 < 1.0, "d={d}");
            }
        }
    }

    #[test]
    fn slush_fraction_matches_product_form() {
        // nu is the product of the no-frozen-message and the two-plus
        // slush-message probabilities under the stationary law
        for d in [2.8, 3.0, 4.0, 7.0] {
            let p = fixed_points(d, 1e-12).unwrap();
            let no_f = decay(d, p.alpha_upper);
            let ge2_s = 1.0 - (1.0 + p.lambda) * (-p.lambda).exp();
            assert!((p.nu - no_f * ge2_s).abs() < 1e-14);
            // equivalent closed form through the mutual relation
            let alt = (1.0 - p.alpha_star) - (1.0 - p.alpha_upper) * (1.0 + p.lambda);
            assert!((p.nu - alt).abs() < 1e-10, "d={d}: {} vs {alt}", p.nu);
        }
        let p = fixed_points(3.0, 1e-12).unwrap();
        assert!((p.nu - 0.31273).abs() < 5e-5);
    }

    #[test]
    fn cap_phi_slope_signs_at_endpoints() {
        for d in [0.5, 1.0, 2.5, 3.0, 8.0] {
            assert!(eval(d, 0.0).unwrap().cap_phi1 > 0.0);
            assert!(eval(d, 1.0).unwrap().cap_phi1 < 0.0);
        }
    }

    #[test]
    fn cap_phi_max_is_at_alpha_star() {
        for d in [1.5, 3.0, 5.0] {
            let p = fixed_points(d, 1e-12).unwrap();
            let grid_max = (0..=10_000)
                .map(|k| cap_phi(d, k as f64 / 10_000.0))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((cap_phi(d, p.alpha_star) - grid_max).abs() <= 1e-6, "d={d}");
        }
    }

    #[test]
    fn dist_update_from_all_slush() {
        // one step: the frozen share at a variable is exp(-d)
        let q1 = dist_update(&MessageDistribution::all_slush(), 3.0);
        assert!((q1.at_var[0] - (-3.0f64).exp()).abs() < 1e-15);
        q1.validate().unwrap();
    }

    #[test]
    fn stationary_law_is_fixed() {
        let p = fixed_points(3.0, 1e-12).unwrap();
        let q = MessageDistribution::stationary(&p);
        assert!(dist_update(&q, 3.0).tv_distance(&q) <= 1e-8);
    }

    #[test]
    fn dist_limit_reaches_stationary_law() {
        let p = fixed_points(3.0, 1e-12).unwrap();
        let q = MessageDistribution::stationary(&p);
        let lim = dist_limit(&MessageDistribution::all_slush(), 3.0, 1e-13).unwrap();
        assert!(lim.tv_distance(&q) <= 1e-8, "tv={}", lim.tv_distance(&q));
    }

    #[test]
    fn po_ge2_normalises() {
        for lambda in [0.4, 1.5882, 3.0] {
            let total: f64 = (2..=200).map(|l| po_ge2(lambda, l).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-10, "lambda={lambda}");
        }
        assert!(po_ge2(1.0, 1).is_err());
    }

    #[test]
    fn gen_deg_sums() {
        let d = 3.0;
        let p = fixed_points(d, 1e-12).unwrap();
        // checks: the unfrozen-mark mass is the two-plus Poisson tail
        let alpha = p.alpha_star;
        let mut total_u = 0.0;
        for l_uu in 0..60 {
            for l_fu in 0..60 {
                total_u += gen_deg_g(d, alpha, Mark::U, [l_uu, 0, l_fu, 0]);
            }
        }
        let expect = 1.0 - (1.0 + d * (1.0 - alpha)) * (-d * (1.0 - alpha)).exp();
        assert!((total_u - expect).abs() < 1e-8);

        // variables: the whole law sums to one
        let alpha_hat = decay(d, alpha);
        let mut total = 0.0;
        for l_free in 0..60 {
            total += gen_deg_d(d, alpha_hat, Mark::U, [l_free, 0, 0, 0]);
            total += gen_deg_d(d, alpha_hat, Mark::Star, [0, l_free, 1, 0]);
            for l_ff in 2..60 {
                total += gen_deg_d(d, alpha_hat, Mark::F, [0, l_free, 0, l_ff]);
            }
        }
        assert!((total - 1.0).abs() < 1e-8, "total={total}");

        // checks: the whole law sums to one as well
        let mut total = 0.0;
        for l_free in 0..60 {
            total += gen_deg_g(d, alpha, Mark::Star, [0, 1, l_free, 0]);
            total += gen_deg_g(d, alpha, Mark::F, [0, 0, 0, l_free]);
            for l_uu in 2..60 {
                total += gen_deg_g(d, alpha, Mark::U, [l_uu, 0, l_free, 0]);
            }
        }
        assert!((total - 1.0).abs() < 1e-8, "total={total}");
    }

    #[test]
    fn slush_constants_agree_with_direct_derivation() {
        // the published display and the direct tree computation
        // (e^-d d^2/2) (e^-d lambda^2/2)^2 coincide through the mutual
        // relation between the stable fixed points
        for d in [2.8, 3.0, 4.0, 6.0] {
            let p = fixed_points(d, 1e-12).unwrap();
            let (r, s, u) = slush_constants(d, &p);
            let l2 = p.lambda * p.lambda;
            assert!((r - (-d).exp() * l2 / 2.0).abs() < 1e-15);
            assert!((s - (-d).exp()).abs() < 1e-15);
            let direct = ((-d).exp() * d * d / 2.0) * ((-d).exp() * l2 / 2.0).powi(2);
            assert!(
                (u - direct).abs() <= 1e-12 * direct.max(1e-300),
                "d={d}: display {u} vs direct {direct}"
            );
        }
    }

    #[test]
    fn identities_hold_inside_the_critical_window() {
        // the reduced gap equation keeps full precision where direct sign
        // bisection of the map degenerates
        for offset in [1e-4, 1e-5, 1e-6, 1e-8, 1e-10, 6e-7, 9.9e-4] {
            let d = E + offset;
            let rep = identity_suite(d, 1e-12).unwrap();
            assert!(
                rep.all_pass && rep.max_residual <= 1e-10,
                "d=e+{offset}: {rep:?}"
            );
            let p = fixed_points(d, 1e-12).unwrap();
            assert!(p.alpha_star < p.alpha_zero && p.alpha_zero < p.alpha_upper);
            // the gap scales like sqrt(6 (ln d - 1)) / d
            let predicted = (6.0 * (d.ln() - 1.0)).sqrt() / d;
            let gap = p.alpha_upper - p.alpha_star;
            assert!(
                (gap - 2.0 * predicted).abs() <= 0.05 * gap + 1e-12,
                "gap {gap} vs asymptotic {}",
                2.0 * predicted
            );
        }
        for offset in [1e-4, 1e-6, 1e-10] {
            let rep = identity_suite(E - offset, 1e-12).unwrap();
            assert!(rep.all_pass, "d=e-{offset}: {rep:?}");
        }
    }

    #[test]
    fn identity_suite_examples() {
        let rep = identity_suite(3.0, 1e-12).unwrap();
        assert!(rep.all_pass, "residuals: {rep:?}");
        assert!(rep.max_residual <= 1e-9);

        // degenerate collapse just above the critical density
        let rep = identity_suite(E + 1e-6, 1e-12).unwrap();
        assert!(rep.all_pass, "residuals: {rep:?}");

        // strict subcriticality far above
        let rep = identity_suite(10.0, 1e-12).unwrap();
        assert!(rep.subcritical_value.unwrap() < 1.0);
    }
}
