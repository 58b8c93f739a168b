//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// Hand-expanded three-class model on `r_j = c j`.
pub struct ThreeClass {
    pub c: f64,
    pub s: f64,
    pub tau: [f64; 3],
    pub gamma: f64,
}

pub struct ThreeClassOut {
    pub rhs: [f64; 3],
    pub tax_revenue: f64,
    pub ind_exchange: f64,
    pub ind_welfare: f64,
    pub class_exchange: f64,
    pub class_welfare: f64,
}

impl ThreeClass {
    pub fn weights(&self) -> [f64; 3] {
        let c = self.c;
        let g = self.gamma;
        [2.5 * c - 2.0 * g * c, 1.5 * c, 0.5 * c + 2.0 * g * c]
    }

    pub fn eval(&self, x: [f64; 3]) -> ThreeClassOut {
        let [a, b, d] = x;
        let [t1, t2, t3] = self.tau;
        let _ = t3; // receivers of class 3 never meet (p[h][3] = 0)
        let (q1, q2) = (1.0 - t1, 1.0 - t2);
        let s2 = 2.0 * self.s;
        // r~ = c/2, 3c/2, 5c/2 so the encounter rates do not depend on c
        let (p21, p22, p31, p32) = (0.1, 0.3, 0.1, 0.3);
        let dd = 2.0 * self.c; // every r_{i+1} - r_{i-1}
        let [w1, w2, w3] = self.weights();
        let wall = w1 * a + w2 * b + w3 * d;
        let wlow = w1 * a + w2 * b;
        let total = a + b + d;

        let direct1 = a * total - a * s2 * q1 / dd * (p21 * b + p31 * d) + b * s2 / dd * (p21 * q1 * a + p22 * q2 * b);
        let direct2 = d * s2 / dd * (p31 * q1 * a + p32 * q2 * b) + b * total
            - b * s2 * q2 / dd * (p22 * b + p32 * d)
            - b * s2 / dd * (p21 * q1 * a + p22 * q2 * b)
            + a * s2 * q1 / dd * (p21 * b + p31 * d);
        let direct3 = d * total - d * s2 / dd * (p31 * q1 * a + p32 * q2 * b) + b * s2 * q2 / dd * (p22 * b + p32 * d);

        let f2 = b * (p21 * t1 * a + p22 * t2 * b);
        let f3 = d * (p31 * t1 * a + p32 * t2 * b);
        let flow = s2 * (f2 + f3);
        let u = [-w1 * a / dd, (w1 * a - w2 * b) / dd, w2 * b / dd].map(|v| flow / wall * v);
        let vs = s2 * wlow / wall;
        let v = [vs * f2 / dd, vs * (f3 - f2) / dd, -vs * f3 / dd];

        let rhs = [
            direct1 + u[0] + v[0] - a * total,
            direct2 + u[1] + v[1] - b * total,
            direct3 + u[2] + v[2] - d * total,
        ];
        let tax_revenue = self.s * (f2 + f3) * wlow / wall;
        let step = self.s / self.c;
        let ind_exchange = step * q2 * (p22 * b + p32 * d);
        let ind_welfare = step * w2 / wall * (f2 + f3);
        let interior = 1.0 - a - d;
        ThreeClassOut {
            rhs,
            tax_revenue,
            ind_exchange,
            ind_welfare,
            class_exchange: ind_exchange * b / interior,
            class_welfare: ind_welfare * b / interior,
        }
    }
}

/// Density of the κ-generalized distribution written without `asinh`.
fn kgen_density(x: f64, alpha: f64, kappa: f64) -> f64 {
    let z = x.powf(alpha);
    let root = (1.0 + kappa * kappa * z * z).sqrt();
    let s = if kappa == 0.0 {
        (-z).exp()
    } else {
        (root + kappa * z).powf(-1.0 / kappa)
    };
    s / root * alpha * x.powf(alpha - 1.0)
}

fn exp_sinh_nodes(h: f64, span: f64) -> Vec<(f64, f64)> {
    // x = exp(π/2 sinh u) on (0, ∞)
    let half_pi = std::f64::consts::FRAC_PI_2;
    let m = (span / h) as i64;
    (-m..=m)
        .map(|j| {
            let u = j as f64 * h;
            let x = (half_pi * u.sinh()).exp();
            (x, h * x * half_pi * u.cosh())
        })
        .filter(|&(x, w)| x.is_finite() && w.is_finite() && x > 0.0)
        .collect()
}

fn tanh_sinh_nodes(h: f64, span: f64) -> Vec<(f64, f64)> {
    // v = (1 + tanh(π/2 sinh u))/2 on (0, 1)
    let half_pi = std::f64::consts::FRAC_PI_2;
    let m = (span / h) as i64;
    (-m..=m)
        .map(|j| {
            let u = j as f64 * h;
            let t = half_pi * u.sinh();
            let v = 0.5 * (1.0 + t.tanh());
            let w = h * 0.5 * half_pi * u.cosh() / t.cosh().powi(2);
            (v, w)
        })
        .filter(|&(v, w)| v > 0.0 && v < 1.0 && w > 0.0)
        .collect()
}

/// Gini index as half the relative mean difference,
/// `G = ∫∫ |x - y| f(x) f(y) dx dy / (2m)`, by nested double-exponential quadrature.
pub fn mean_difference_gini(alpha: f64, kappa: f64) -> f64 {
    let outer = exp_sinh_nodes(1.0 / 64.0, 4.0);
    let inner = tanh_sinh_nodes(1.0 / 64.0, 3.5);
    let mut mean = 0.0;
    let mut diff = 0.0;
    for &(x, wx) in &outer {
        let fx = kgen_density(x, alpha, kappa);
        if fx == 0.0 {
            continue;
        }
        mean += wx * x * fx;
        // ∫_0^x (x - y) f(y) dy with y = x v
        let mut below = 0.0;
        for &(v, wv) in &inner {
            below += wv * x * (x - x * v) * kgen_density(x * v, alpha, kappa);
        }
        // the region y > x mirrors y < x
        diff += 2.0 * wx * fx * below;
    }
    diff / (2.0 * mean)
}

/// Uniformly distributed point of the probability simplex.
pub fn random_simplex(rng: &mut StdRng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
