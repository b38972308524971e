//! Floating-point evaluation of the McShane-identity kernels
//!
//! ```text
//! h(x)       = 2 / (1 + e^(x/2))
//! R(x, y, z) = 1/(4x) int_0^x [h(z+t+y) + h(z-t-y) + h(z+t-y) + h(z-t+y)] dt
//! D(x, y, z) = 1/(2x) int_0^x [h(t+y+z) + h(-t+y+z)] dt
//! ```
//!
//! together with numerical checks of the exact kernel coefficients in
//! [`crate::coefficients`]: powers of `P f(x) = int_x^inf t f(t) dt` applied to
//! exponentials (nested quadrature), and `P_x^n P_y^m h^(2k)(x+y)` at the
//! origin (alternating series with Euler acceleration).
//!
//! Everything here is deterministic: fixed node counts, no adaptivity.

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::coefficients::{a_coeff, f_kernel_value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("argument outside the kernel's domain: {0}")]
    InvalidDomain(String),
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("did not converge: remainder estimate {remainder:e} exceeds tolerance {tolerance:e}")]
    NonConvergence { remainder: f64, tolerance: f64 },
}

/// Node and term counts for the numerical routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEvalConfig {
    /// Gauss-Legendre nodes per panel.
    pub quadrature_points: usize,
    /// Terms handed to the series accelerator.
    pub series_terms: usize,
    pub tolerance: f64,
}

impl Default for KernelEvalConfig {
    fn default() -> Self {
        KernelEvalConfig {
            quadrature_points: 20,
            series_terms: 64,
            tolerance: 1e-9,
        }
    }
}

impl KernelEvalConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        KernelEvalConfig {
            tolerance,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(KernelError::InvalidConfig(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        if self.quadrature_points < 16 {
            return Err(KernelError::InvalidConfig(format!(
                "quadrature_points {} < 16",
                self.quadrature_points
            )));
        }
        if self.series_terms < 8 {
            return Err(KernelError::InvalidConfig(format!(
                "series_terms {} < 8",
                self.series_terms
            )));
        }
        Ok(())
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like initial
    /// guesses `cos(pi (i - 1/4) / (n + 1/2))`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_a^b f` with this rule mapped onto `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn integrate_composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + width * p as f64;
                let hi = if p + 1 == panels { b } else { lo + width };
                self.integrate(lo, hi, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `h(x) = 2 / (1 + e^(x/2))`.
pub fn eval_h(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-0.5 * x).exp();
        2.0 * e / (1.0 + e)
    } else {
        2.0 / (1.0 + (0.5 * x).exp())
    }
}

fn check_width(x: f64) -> Result<(), KernelError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(KernelError::InvalidDomain(format!(
            "x = {x} must be positive and finite"
        )));
    }
    Ok(())
}

// h changes on a length scale of order 1; two units per panel is ample for
// the node counts allowed by `KernelEvalConfig`.
fn kernel_panels(x: f64) -> usize {
    (x / 2.0).ceil().max(1.0) as usize
}

pub fn eval_r(x: f64, y: f64, z: f64, cfg: &KernelEvalConfig) -> Result<f64, KernelError> {
    check_width(x)?;
    cfg.validate()?;
    let rule = GaussLegendre::new(cfg.quadrature_points);
    let integral = rule.integrate_composite(0.0, x, kernel_panels(x), |t| {
        eval_h(z + t + y) + eval_h(z - t - y) + eval_h(z + t - y) + eval_h(z - t + y)
    });
    Ok(integral / (4.0 * x))
}

/// Depends on `y` and `z` only through `y + z`.
pub fn eval_d(x: f64, y: f64, z: f64, cfg: &KernelEvalConfig) -> Result<f64, KernelError> {
    check_width(x)?;
    cfg.validate()?;
    let s = y + z;
    let rule = GaussLegendre::new(cfg.quadrature_points);
    let integral = rule.integrate_composite(0.0, x, kernel_panels(x), |t| eval_h(t + s) + eval_h(-t + s));
    Ok(integral / (2.0 * x))
}

/// `P^n e^(-alpha x) = sum_j A_j^(n) x^j / alpha^(2n-j) e^(-alpha x)`.
pub fn p_exponential_closed_form(n: u32, alpha: f64, x: f64) -> f64 {
    let poly: f64 = (0..=n)
        .map(|j| {
            let a = a_coeff(n, i64::from(j)).to_f64().expect("finite");
            a * x.powi(j as i32) / alpha.powi((2 * n - j) as i32)
        })
        .sum();
    poly * (-alpha * x).exp()
}

/// Deepest nesting accepted by [`verify_p_exponential`].
pub const MAX_P_DEPTH: u32 = 6;

const TAIL_CUTOFF: f64 = 1e-18;

/// `S[p][q] = int_(xi_p)^1 l_q(xi) dxi` for the Lagrange basis `l_q` on the
/// rule's nodes: applied to samples of a function on one panel it yields the
/// integral from each node to the panel's right edge.
fn integration_matrix(rule: &GaussLegendre) -> Vec<Vec<f64>> {
    let xs = &rule.nodes;
    let n = xs.len();
    let basis = |q: usize, x: f64| -> f64 {
        (0..n)
            .filter(|&r| r != q)
            .map(|r| (x - xs[r]) / (xs[q] - xs[r]))
            .product()
    };
    (0..n)
        .map(|p| (0..n).map(|q| rule.integrate(xs[p], 1.0, |x| basis(q, x))).collect())
        .collect()
}

/// Nested quadrature for `P^depth e^(-alpha t)` on `[from, upper]`.
///
/// `g_0 = e^(-alpha t)` is sampled at the nodes of every panel; each level
/// `g_k(t) = int_t^upper s g_(k-1)(s) ds` is then tabulated at the same nodes
/// from the previous level's samples. `from` is the left edge of the first
/// panel, so `g_depth(from)` is the full integral of the last level.
fn nested_p(rule: &GaussLegendre, alpha: f64, from: f64, upper: f64, depth: u32) -> f64 {
    let panels = (alpha * (upper - from)).ceil().max(1.0) as usize;
    let step = (upper - from) / panels as f64;
    let half = 0.5 * step;
    let matrix = integration_matrix(rule);
    let nodes: Vec<Vec<f64>> = (0..panels)
        .map(|i| {
            let mid = from + step * (i as f64 + 0.5);
            rule.nodes.iter().map(|x| mid + half * x).collect()
        })
        .collect();
    let mut vals: Vec<Vec<f64>> = nodes
        .iter()
        .map(|ts| ts.iter().map(|t| (-alpha * t).exp()).collect())
        .collect();
    let mut total = 0.0;
    for _ in 0..depth {
        let weighted: Vec<Vec<f64>> = nodes
            .iter()
            .zip(&vals)
            .map(|(ts, vs)| ts.iter().zip(vs).map(|(t, v)| t * v).collect())
            .collect();
        // tail[i] = integral over panels i.. of s g(s)
        let mut tail = vec![0.0; panels + 1];
        for i in (0..panels).rev() {
            let panel: f64 = rule.weights.iter().zip(&weighted[i]).map(|(w, f)| w * f).sum();
            tail[i] = tail[i + 1] + half * panel;
        }
        total = tail[0];
        vals = (0..panels)
            .map(|i| {
                matrix
                    .iter()
                    .map(|row| half * row.iter().zip(&weighted[i]).map(|(s, f)| s * f).sum::<f64>() + tail[i + 1])
                    .collect()
            })
            .collect();
    }
    total
}

/// Computes `P^n e^(-alpha x)` in closed form and by nested quadrature,
/// returning `(closed_form, numeric)`.
pub fn verify_p_exponential(n: u32, alpha: f64, x: f64, cfg: &KernelEvalConfig) -> Result<(f64, f64), KernelError> {
    cfg.validate()?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(KernelError::InvalidDomain(format!("alpha = {alpha} must be positive")));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(KernelError::InvalidDomain(format!("x = {x} must be nonnegative")));
    }
    if n > MAX_P_DEPTH {
        return Err(KernelError::InvalidDomain(format!(
            "nesting depth {n} exceeds {MAX_P_DEPTH}"
        )));
    }
    let closed = p_exponential_closed_form(n, alpha, x);
    if n == 0 {
        return Ok((closed, (-alpha * x).exp()));
    }

    // The outermost integrand is bounded by env(t) = t^(2n-1) e^(-alpha t) / alpha^(n-1).
    // Truncate past its peak once it falls below the cutoff; beyond that point it
    // decays at least like e^(-(alpha - (2n-1)/t) t), which gives the tail bound.
    let p = f64::from(2 * n - 1);
    let env = |t: f64| (p * t.ln() - alpha * t).exp() / alpha.powi(n as i32 - 1);
    let peak = p / alpha;
    let mut upper = x.max(peak) + 1.0 / alpha;
    while env(upper) > TAIL_CUTOFF || upper < 2.0 * peak {
        upper += 1.0 / alpha;
    }
    let decay = alpha - p / upper;
    let tail = env(upper) / decay;
    if tail > cfg.tolerance {
        return Err(KernelError::NonConvergence {
            remainder: tail,
            tolerance: cfg.tolerance,
        });
    }

    let rule = GaussLegendre::new(cfg.quadrature_points);
    Ok((closed, nested_p(&rule, alpha, x, upper, n)))
}

/// Sum of `sum_(j >= 1) (-1)^(j+1) a_j`: the first `head` terms directly, the
/// rest by the Euler transform `sum_k (-1)^k (Delta^k b)_0 / 2^(k+1)` over
/// `terms` further values. Returns `(sum, remainder_bound)` where the bound
/// is the first omitted transform term.
pub fn alternating_sum(a: impl Fn(u64) -> f64, head: usize, terms: usize) -> (f64, f64) {
    let mut direct = 0.0;
    // summed smallest-first
    for j in (1..=head as u64).rev() {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        direct += sign * a(j);
    }
    let mut diffs: Vec<f64> = (0..=terms as u64).map(|i| a(head as u64 + 1 + i)).collect();
    let mut tail = 0.0;
    let mut scale = 0.5;
    let mut sign = 1.0;
    for _ in 0..terms {
        tail += sign * scale * diffs[0];
        for i in 0..diffs.len() - 1 {
            diffs[i] = diffs[i + 1] - diffs[i];
        }
        diffs.pop();
        scale *= 0.5;
        sign = -sign;
    }
    let remainder = (scale * diffs[0]).abs();
    // the tail starts at j = head + 1, whose sign is (-1)^head
    let tail_sign = if head.is_multiple_of(2) { 1.0 } else { -1.0 };
    (direct + tail_sign * tail, remainder)
}

/// Evaluates `P_x^n P_y^m h^(2k)(x+y)` at the origin two ways, returning
/// `(closed_form, series_value)`.
///
/// The series expands `h(x) = 2 sum_(j>=1) (-1)^(j+1) e^(-jx/2)` and applies
/// the operators termwise through [`p_exponential_closed_form`] with
/// `alpha = j/2`; for `k >= n + m` the resulting series diverges and is
/// given its Euler (Abel) value.
pub fn verify_corollary(n: u32, m: u32, k: u32, cfg: &KernelEvalConfig) -> Result<(f64, f64), KernelError> {
    cfg.validate()?;
    if n > 3 || m > 3 || k > n + m + 1 {
        return Err(KernelError::InvalidDomain(format!(
            "(n, m, k) = ({n}, {m}, {k}) outside n, m <= 3, k <= n + m + 1"
        )));
    }
    let closed = f_kernel_value(n, m, k).to_f64();
    let term = |j: u64| {
        let alpha = j as f64 / 2.0;
        2.0 * alpha.powi(2 * k as i32)
            * p_exponential_closed_form(n, alpha, 0.0)
            * p_exponential_closed_form(m, alpha, 0.0)
    };
    let head = cfg.series_terms / 4;
    let (series, remainder) = alternating_sum(term, head, cfg.series_terms - head);
    if remainder > cfg.tolerance {
        return Err(KernelError::NonConvergence {
            remainder,
            tolerance: cfg.tolerance,
        });
    }
    Ok((closed, series))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> KernelEvalConfig {
        KernelEvalConfig::default()
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let rule = GaussLegendre::new(20);
        let weights: f64 = rule.weights.iter().sum();
        assert!((weights - 2.0).abs() < 1e-14);
        // degree 39 is integrated exactly
        let v = rule.integrate(0.0, 1.0, |x| x.powi(39));
        assert!((v - 1.0 / 40.0).abs() < 1e-15);
        let v = rule.integrate_composite(0.0, std::f64::consts::PI, 4, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn h_examples() {
        assert_eq!(eval_h(0.0), 1.0);
        assert!((eval_h(2.0 * 3f64.ln()) - 0.5).abs() < 1e-15);
        assert!((eval_h(3.7) + eval_h(-3.7) - 2.0).abs() < 4.0 * f64::EPSILON);
        assert_eq!(eval_h(2000.0), 0.0);
        assert_eq!(eval_h(-2000.0), 2.0);
    }

    #[test]
    fn r_and_d_at_unit_width() {
        // h(t) + h(-t) = 2, so both averages are exactly 1
        assert!((eval_d(1.0, 0.0, 0.0, &cfg()).unwrap() - 1.0).abs() < 1e-12);
        assert!((eval_r(1.0, 0.0, 0.0, &cfg()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_width_limit() {
        let (y, z) = (0.7, 1.9);
        let d = eval_d(1e-9, y, z, &cfg()).unwrap();
        let r = eval_r(1e-9, y, z, &cfg()).unwrap();
        assert!((d - eval_h(y + z)).abs() < 1e-8);
        // R's average also tends to (h(z+y) + h(z-y)) / 2
        assert!((r - 0.5 * (eval_h(z + y) + eval_h(z - y))).abs() < 1e-8);
    }

    #[test]
    fn d_symmetry_and_domain() {
        let a = eval_d(2.5, 0.3, 4.1, &cfg()).unwrap();
        let b = eval_d(2.5, 4.1, 0.3, &cfg()).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            eval_d(0.0, 1.0, 1.0, &cfg()),
            Err(KernelError::InvalidDomain(_))
        ));
        assert!(matches!(
            eval_r(-1.0, 1.0, 1.0, &cfg()),
            Err(KernelError::InvalidDomain(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = KernelEvalConfig {
            quadrature_points: 8,
            ..cfg()
        };
        assert!(matches!(bad.validate(), Err(KernelError::InvalidConfig(_))));
        let bad = KernelEvalConfig {
            series_terms: 4,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        let bad = KernelEvalConfig {
            tolerance: 0.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn p_exponential_examples() {
        let (c, v) = verify_p_exponential(0, 1.0, 0.0, &cfg()).unwrap();
        assert_eq!((c, v), (1.0, 1.0));
        let (c, v) = verify_p_exponential(1, 1.0, 0.0, &cfg()).unwrap();
        assert_eq!(c, 1.0);
        assert!((v - 1.0).abs() < 1e-9);
        let (c, v) = verify_p_exponential(2, 2.0, 0.0, &cfg()).unwrap();
        assert_eq!(c, 3.0 / 16.0);
        assert!((v - 0.1875).abs() < 1e-9);
        assert!(verify_p_exponential(7, 1.0, 0.0, &cfg()).is_err());
        assert!(verify_p_exponential(1, 0.0, 0.0, &cfg()).is_err());
    }

    #[test]
    fn alternating_sum_known_series() {
        // 1 - 1/4 + 1/9 - ... = pi^2 / 12
        let (s, r) = alternating_sum(|j| 1.0 / (j * j) as f64, 16, 48);
        assert!((s - std::f64::consts::PI.powi(2) / 12.0).abs() < 1e-14);
        assert!(r < 1e-14);
        // Abel value of 1 - 1 + 1 - ... is 1/2, of 1 - 4 + 9 - ... is 0
        assert_eq!(alternating_sum(|_| 1.0, 16, 48).0, 0.5);
        assert_eq!(alternating_sum(|j| (j * j) as f64, 16, 48).0, 0.0);
    }

    #[test]
    fn kernel_series_examples() {
        let (c, s) = verify_corollary(1, 1, 3, &cfg()).unwrap();
        assert_eq!(c, 0.0);
        assert!(s.abs() < 1e-8);
        // k = n + m
        let (c, s) = verify_corollary(1, 1, 2, &cfg()).unwrap();
        assert_eq!(c, 1.0);
        assert!((s - 1.0).abs() < 1e-8);
        let (c, s) = verify_corollary(1, 0, 1, &cfg()).unwrap();
        assert_eq!(c, 1.0);
        assert!((s - 1.0).abs() < 1e-8);
        let (c, s) = verify_corollary(1, 1, 0, &cfg()).unwrap();
        assert!((c - 28.0 * std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((c - s).abs() < 1e-8);
        assert!(verify_corollary(4, 0, 0, &cfg()).is_err());
    }
}
