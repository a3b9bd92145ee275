//! Exact and high-accuracy solutions of the free wave equation
//! v_tt - Lap(v) = 0 with Cauchy data (phi, 0) — the inner building block of
//! every integral-transform formula — in one dimension, for radial data in
//! three dimensions, and (for cross-checks) the full Kirchhoff spherical-mean
//! solution.

use alloc::vec::Vec;

use crate::math;

/// Regularity tag carried by a sampler; the oracles are exact, so accuracy
/// of downstream finite differences is limited by this.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    C0,
    C2,
    CInf,
}

/// A pure position -> value mapping with support metadata.  For `Line`
/// problems the argument is the signed coordinate; for radial ones it is the
/// radius (samplers are evaluated at non-negative arguments only and are
/// even-extended by the oracles where needed).
#[derive(Clone, Copy)]
pub struct FieldSampler<'a> {
    eval: &'a dyn Fn(f64) -> f64,
    /// Radius beyond which the sampler vanishes; INFINITY when unbounded.
    pub support_radius: f64,
    pub smoothness: Smoothness,
}

impl<'a> FieldSampler<'a> {
    pub fn new(eval: &'a dyn Fn(f64) -> f64, support_radius: f64, smoothness: Smoothness) -> Self {
        FieldSampler {
            eval,
            support_radius,
            smoothness,
        }
    }

    /// Unbounded smooth sampler.
    pub fn smooth(eval: &'a dyn Fn(f64) -> f64) -> Self {
        FieldSampler {
            eval,
            support_radius: f64::INFINITY,
            smoothness: Smoothness::CInf,
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(x)
    }
}

impl core::fmt::Debug for FieldSampler<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FieldSampler")
            .field("support_radius", &self.support_radius)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

/// Below this radius the 3-D radial solution switches to its origin limit.
const R_MIN: f64 = 1e-6;

/// Step used for sampler derivatives where no derivative contract exists.
fn fd_step(t: f64) -> f64 {
    1e-5 * if t > 1.0 { t } else { 1.0 }
}

/// d'Alembert solution in one dimension: v(x,t) = (phi(x+t) + phi(x-t)) / 2.
pub fn dalembert_1d(phi: &FieldSampler, x: f64, t: f64) -> f64 {
    0.5 * (phi.value(x + t) + phi.value(x - t))
}

/// Radial 3-D solution with data (phi(r), 0):
/// v(r,t) = [w(r+t) + w(r-t)] / (2r) with w(s) = s phi(|s|), and the origin
/// limit v(0,t) = phi(t) + t phi'(t) below R_MIN (phi' by central difference).
pub fn radial_wave_3d(phi: &FieldSampler, r: f64, t: f64) -> f64 {
    let w = |s: f64| s * phi.value(math::abs(s));
    if r > R_MIN {
        (w(r + t) + w(r - t)) / (2.0 * r)
    } else {
        let h = fd_step(t);
        let dphi = (phi.value(t + h) - phi.value(math::abs(t - h))) / (2.0 * h);
        phi.value(t) + t * dphi
    }
}

/// Quadrature rule over the unit sphere: product Gauss-Legendre in cos(theta)
/// times uniform trapezoid in azimuth.  Weights sum to 1 (mean-value form).
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl SphereRule {
    /// `order` Gauss-Legendre nodes in the polar direction and 2*order
    /// azimuthal angles; exact for spherical harmonics up to degree ~order.
    pub fn product_gauss(order: usize) -> SphereRule {
        let (xs, ws) = gauss_legendre(order);
        let n_az = 2 * order;
        let mut nodes = Vec::with_capacity(order * n_az);
        let mut weights = Vec::with_capacity(order * n_az);
        for (ct, wp) in xs.iter().zip(ws.iter()) {
            let st = math::sqrt((1.0 - ct * ct).max(0.0));
            for j in 0..n_az {
                let az = 2.0 * core::f64::consts::PI * j as f64 / n_az as f64;
                nodes.push([st * math::cos(az), st * math::sin(az), *ct]);
                // GL weights sum to 2 over cos(theta); the sphere mean needs
                // (1/4pi) * (2pi/n_az) * w = w / (2 n_az).
                weights.push(wp / (2.0 * n_az as f64));
            }
        }
        SphereRule {
            nodes,
            weights,
            order,
        }
    }

    /// Mean of f over the sphere of radius t about x.
    pub fn mean<F: Fn([f64; 3]) -> f64>(&self, f: &F, x: [f64; 3], t: f64) -> f64 {
        let mut acc = math::Accum::default();
        for (n, w) in self.nodes.iter().zip(self.weights.iter()) {
            let p = [x[0] + t * n[0], x[1] + t * n[1], x[2] + t * n[2]];
            acc.add(w * f(p));
        }
        acc.value()
    }
}

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = math::cos(core::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5));
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if math::abs(dx) < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        xs.push(x);
        ws.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Kirchhoff solution with data (0, phi): u(x,t) = t * mean_{|n|=1} phi(x+tn).
/// Returns the value and a quadrature error estimate (difference against a
/// larger rule); a large estimate is reported for the caller to judge, not
/// treated as fatal.
pub fn kirchhoff_3d<F: Fn([f64; 3]) -> f64>(
    phi: &F,
    x: [f64; 3],
    t: f64,
    rule: &SphereRule,
) -> (f64, f64) {
    let value = t * rule.mean(phi, x, t);
    let check = SphereRule::product_gauss(rule.order + rule.order / 2 + 1);
    let refined = t * check.mean(phi, x, t);
    (value, math::abs(value - refined))
}

/// Kirchhoff solution with data (phi, 0), i.e. d/dt of the (0,phi) solution,
/// carried out analytically on the quadrature: mean + t * radial-derivative
/// mean, the radial derivative taken by central differences on the sampler.
pub fn kirchhoff_3d_data_phi0<F: Fn([f64; 3]) -> f64>(
    phi: &F,
    x: [f64; 3],
    t: f64,
    rule: &SphereRule,
) -> f64 {
    let h = fd_step(t);
    let mut acc = math::Accum::default();
    for (n, w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let at = |s: f64| phi([x[0] + s * n[0], x[1] + s * n[1], x[2] + s * n[2]]);
        let radial = (at(t + h) - at(t - h)) / (2.0 * h);
        acc.add(w * (at(t) + t * radial));
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{abs, exp};

    fn bump(radius: f64) -> impl Fn(f64) -> f64 {
        move |r: f64| {
            let d2 = r * r;
            let r2 = radius * radius;
            if d2 < r2 {
                exp(1.0 / r2 - 1.0 / (r2 - d2))
            } else {
                0.0
            }
        }
    }

    #[test]
    fn dalembert_constants_and_polynomials() {
        let c = |_: f64| 3.25;
        let s = FieldSampler::smooth(&c);
        assert_eq!(dalembert_1d(&s, 0.4, 1.7), 3.25);
        let sq = |x: f64| x * x;
        let s = FieldSampler::smooth(&sq);
        // (9 + 1)/2 = 5 = x^2 + t^2 at (1,2)
        assert_eq!(dalembert_1d(&s, 1.0, 2.0), 5.0);
    }

    #[test]
    fn radial_constants_and_polynomials() {
        let c = |_: f64| -0.7;
        let s = FieldSampler::smooth(&c);
        assert!(abs(radial_wave_3d(&s, 0.3, 0.9) + 0.7) < 1e-15);
        assert!(abs(radial_wave_3d(&s, 0.0, 0.9) + 0.7) < 1e-9);
        // phi = r^2 evolves to r^2 + 3t^2 (Lap r^2 = 6)
        let sq = |r: f64| r * r;
        let s = FieldSampler::smooth(&sq);
        for &(r, t) in &[(0.5, 0.25), (1.0, 2.0), (2e-7, 0.8)] {
            let got = radial_wave_3d(&s, r, t);
            let want = r * r + 3.0 * t * t;
            assert!(abs(got - want) < 1e-8 * (1.0 + want), "r={r} t={t}");
        }
    }

    #[test]
    fn sphere_rule_weights_and_harmonics() {
        let rule = SphereRule::product_gauss(32);
        let total: f64 = rule.weights.iter().sum();
        assert!(abs(total - 1.0) < 1e-14);
        // Mean of a degree-1 harmonic over any sphere = center value.
        let lin = |p: [f64; 3]| 2.0 * p[0] - p[1] + 0.5 * p[2] + 4.0;
        let m = rule.mean(&lin, [0.3, -0.2, 0.1], 0.77);
        assert!(abs(m - lin([0.3, -0.2, 0.1])) < 1e-13);
        // Mean of |y|^2 over sphere of radius t about 0 is t^2.
        let sq = |p: [f64; 3]| p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let m = rule.mean(&sq, [0.0; 3], 1.3);
        assert!(abs(m - 1.69) < 1e-13);
    }

    #[test]
    fn kirchhoff_trivial_values() {
        let rule = SphereRule::product_gauss(32);
        let c = |_: [f64; 3]| 2.0;
        let (v, err) = kirchhoff_3d(&c, [0.1, 0.2, 0.3], 0.6, &rule);
        assert!(abs(v - 1.2) < 1e-14 && err < 1e-14);
        // harmonic (linear) phi: u = t * phi(x)
        let lin = |p: [f64; 3]| p[0] + 2.0 * p[1];
        let (v, _) = kirchhoff_3d(&lin, [0.5, 0.25, 0.0], 0.4, &rule);
        assert!(abs(v - 0.4 * 1.0) < 1e-13);
        // phi = |y|^2 at x = 0: u = t * t^2
        let sq = |p: [f64; 3]| p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let (v, _) = kirchhoff_3d(&sq, [0.0; 3], 0.9, &rule);
        assert!(abs(v - 0.9f64.powi(3)) < 1e-13);
    }

    #[test]
    fn kirchhoff_small_t_recovers_data() {
        // u(x,0) = 0 and du/dt(x,0) = phi(x) for the (0,phi) solution.
        let rule = SphereRule::product_gauss(24);
        let phi = |p: [f64; 3]| exp(-(p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]));
        let x = [0.2, -0.1, 0.3];
        let t = 1e-4;
        let (v, _) = kirchhoff_3d(&phi, x, t, &rule);
        assert!(abs(v / t - phi(x)) < 1e-6);
        let (v0, _) = kirchhoff_3d(&phi, x, 0.0, &rule);
        assert_eq!(v0, 0.0);
    }

    #[test]
    fn kirchhoff_matches_radial_at_origin() {
        let b = bump(0.2);
        let s = FieldSampler::new(&b, 0.2, Smoothness::CInf);
        let b3 = |p: [f64; 3]| b(math::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
        let rule = SphereRule::product_gauss(32);
        for &t in &[0.05, 0.15, 0.5] {
            let radial = radial_wave_3d(&s, 0.0, t);
            let kirch = kirchhoff_3d_data_phi0(&b3, [0.0; 3], t, &rule);
            assert!(abs(radial - kirch) < 1e-7, "t={t}: {radial} vs {kirch}");
        }
    }

    #[test]
    fn positivity_transport() {
        // phi <= 0 transports through the positive-kernel spherical mean
        // (data (0,phi)) and through the 1-D solution.  The (phi,0) radial
        // solution is d/dt of the mean and does NOT preserve sign for
        // general nonpositive data (see the focusing counterexample below);
        // on the superharmonic class it does, which is checked separately.
        let neg = |r: f64| -(1.0 + r * r).recip();
        let s = FieldSampler::smooth(&neg);
        let neg3 = |p: [f64; 3]| neg(math::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
        let rule = SphereRule::product_gauss(16);
        let mut state = 123456789u64;
        let mut rnd = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let x = 4.0 * rnd() - 2.0;
            let t = 2.0 * rnd();
            assert!(dalembert_1d(&s, x, t) <= 0.0);
            let (v, _) = kirchhoff_3d(&neg3, [x, 0.0, 0.0], t, &rule);
            assert!(v <= 1e-12);
        }
        // Focusing counterexample: after the ingoing wave passes the origin,
        // the (phi,0) radial solution overshoots to positive values.
        let v = radial_wave_3d(&s, 0.1, 2.0);
        assert!(v > 0.0, "expected focusing overshoot, got {v}");
    }

    #[test]
    fn superharmonic_comparison() {
        // For C2 data with Lap(phi) <= 0 the solution stays below phi(x):
        // the mean-value inequality transported by the oracles.
        let phi = |r: f64| -(r * r) - 1.0;
        let s = FieldSampler::smooth(&phi);
        let mut state = 42u64;
        let mut rnd = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10_000 {
            let r = 3.0 * rnd();
            let t = 2.0 * rnd();
            let v = radial_wave_3d(&s, r, t);
            assert!(v <= phi(r) + 1e-11, "r={r} t={t}: {v} > {}", phi(r));
            let x = r - 1.5;
            let v = dalembert_1d(&s, x, t);
            assert!(v <= phi(x) + 1e-11);
        }
    }

    #[test]
    fn fd_wave_oracle_cross_check_1d() {
        // Gaussian data against a fine leapfrog solver, O(h^2) agreement.
        let phi = |x: f64| exp(-8.0 * x * x);
        let s = FieldSampler::smooth(&phi);
        let n = 2001usize;
        let l = 8.0;
        let h = l / (n - 1) as f64;
        let dt = 0.5 * h;
        let xs: Vec<f64> = (0..n).map(|i| -l / 2.0 + i as f64 * h).collect();
        let mut prev: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
        // first step with u_t = 0: u^1 = u^0 + (dt^2/2) u_xx
        let mut cur = prev.clone();
        for i in 1..n - 1 {
            cur[i] =
                prev[i] + 0.5 * dt * dt * (prev[i + 1] - 2.0 * prev[i] + prev[i - 1]) / (h * h);
        }
        let t_end = 1.0;
        let steps = (t_end / dt).round() as usize;
        for _ in 1..steps {
            let mut next = vec![0.0; n];
            for i in 1..n - 1 {
                next[i] = 2.0 * cur[i] - prev[i]
                    + dt * dt * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (h * h);
            }
            prev = cur;
            cur = next;
        }
        for &x in &[-0.9, -0.3, 0.0, 0.4, 1.1] {
            let i = ((x + l / 2.0) / h).round() as usize;
            let exact = dalembert_1d(&s, xs[i], t_end);
            assert!(abs(cur[i] - exact) < 5e-4, "x={x}: {} vs {exact}", cur[i]);
        }
    }
}
