//! Scalar toolkit behind the Mellet-Vasseur estimate: the weight `F`, its
//! approximations `F_n`, density cutoffs, velocity truncation, convex
//! conjugates and a discrete weak Gronwall check.

use crate::error::{Error, Result};
use crate::grid::{Field, VecField};
use serde::Serialize;

/// `F(z) = (1 + z^2)/2 ln(1 + z^2)`.
pub fn mv_weight(z: f64) -> f64 {
    0.5 * (1.0 + z * z) * (z * z).ln_1p()
}

/// `F'(z) / z = 1 + ln(1 + z^2)`, equal to 1 at the origin.
pub fn psi(z: f64) -> f64 {
    1.0 + (z * z).ln_1p()
}

pub fn mv_weight_derivative(z: f64) -> f64 {
    z * psi(z)
}

/// `F_n`: equal to `F` up to the knee `z = n`, then only `z ln z` growth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MvApprox {
    n: u32,
}

impl MvApprox {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("n must be at least 1"));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn knee(&self) -> f64 {
        self.n as f64
    }

    fn outer_factor(&self, z: f64) -> f64 {
        let n = self.knee();
        n * z + 0.5 * (1.0 - n * n)
    }

    pub fn value(&self, z: f64) -> f64 {
        if z <= self.knee() {
            mv_weight(z)
        } else {
            self.outer_factor(z) * (z * z).ln_1p()
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        if z <= self.knee() {
            mv_weight_derivative(z)
        } else {
            let n = self.knee();
            n * (z * z).ln_1p() + self.outer_factor(z) * 2.0 * z / (1.0 + z * z)
        }
    }

    /// `F_n'(z) / z`, with value 1 at the origin.
    pub fn psi(&self, z: f64) -> f64 {
        if z <= self.knee() {
            psi(z)
        } else {
            self.derivative(z) / z
        }
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        let z2 = z * z;
        if z <= self.knee() {
            1.0 + z2.ln_1p() + 2.0 * z2 / (1.0 + z2)
        } else {
            let n = self.knee();
            let m = n * n - 1.0;
            2.0 * n * z / (1.0 + z2) + (m * z2 + 4.0 * n * z - m) / (1.0 + z2).powi(2)
        }
    }

    /// `sup_z (b z - F_n(z))` over `z >= 0`: coarse bracketing on a doubling
    /// grid, then golden-section refinement (the objective is concave).
    pub fn numeric_conjugate(&self, b: f64) -> f64 {
        let g = |z: f64| b * z - self.value(z);
        if b <= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.derivative(hi) < b && hi < 1e300 {
            hi *= 2.0;
        }
        // grid scan for a bracket
        let steps: usize = 256;
        let mut best: usize = 0;
        let mut best_val = g(0.0);
        for i in 1..=steps {
            let v = g(hi * i as f64 / steps as f64);
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        let mut lo = hi * (best.saturating_sub(1)) as f64 / steps as f64;
        let mut up = hi * (best + 1).min(steps) as f64 / steps as f64;
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = up - ratio * (up - lo);
        let mut d = lo + ratio * (up - lo);
        for _ in 0..200 {
            if g(c) > g(d) {
                up = d;
            } else {
                lo = c;
            }
            c = up - ratio * (up - lo);
            d = lo + ratio * (up - lo);
            if (up - lo).abs() <= 1e-15 * up.abs().max(1e-300) {
                break;
            }
        }
        g(0.5 * (lo + up)).max(best_val)
    }
}

/// Log-spaced sample points on `(0, z_max]`, with the knee included.
pub fn log_grid(z_min: f64, z_max: f64, count: usize) -> Vec<f64> {
    let (a, b) = (z_min.ln(), z_max.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn sample_grid(n: f64) -> Vec<f64> {
    let mut z = log_grid(1e-6, 1e6, 20_001);
    z.extend([n, n * (1.0 - 1e-12), n * (1.0 + 1e-12), 0.1, 1.0]);
    z.sort_by(f64::total_cmp);
    z
}

/// Certified growth constants of `F_n` on the sample grid.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub n: u32,
    pub exponent: f64,
    /// smallest `C` with `F_n(z) <= C z^(1+delta)` on the grid
    pub value_constant: f64,
    /// smallest `C` with `F_n'(z) <= C z^delta` on the grid
    pub slope_constant: f64,
    /// `z F_n'(z) <= 4 F_n(z)` at every sample
    pub factor_four_holds: bool,
    pub worst_factor: f64,
    pub second_derivative_min: f64,
    pub second_derivative_max: f64,
    /// smallest `n` in `1..=64` for which the factor-4 bound holds on the grid
    pub smallest_n_factor_four: Option<u32>,
}

fn factor_four(f: &MvApprox, z: &[f64]) -> (bool, f64) {
    let mut worst = 0.0f64;
    for &x in z {
        let v = f.value(x);
        if v > 0.0 {
            worst = worst.max(x * f.derivative(x) / v);
        }
    }
    (worst <= 4.0 * (1.0 + 1e-12), worst)
}

pub fn growth_bounds_check(n: u32, delta: f64) -> Result<GrowthReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::validation("delta must lie in (0,1)"));
    }
    let f = MvApprox::new(n)?;
    let z = sample_grid(n as f64);
    let mut cv = 0.0f64;
    let mut cs = 0.0f64;
    let mut smin = f64::INFINITY;
    let mut smax = 0.0f64;
    for &x in &z {
        cv = cv.max(f.value(x) / x.powf(1.0 + delta));
        cs = cs.max(f.derivative(x) / x.powf(delta));
        let s = f.second_derivative(x);
        smin = smin.min(s);
        smax = smax.max(s);
    }
    let (holds, worst) = factor_four(&f, &z);
    let smallest = (1..=64).find(|&m| {
        let g = MvApprox { n: m };
        factor_four(&g, &sample_grid(m as f64)).0
    });
    Ok(GrowthReport {
        n,
        exponent: delta,
        value_constant: cv,
        slope_constant: cs,
        factor_four_holds: holds,
        worst_factor: worst,
        second_derivative_min: smin,
        second_derivative_max: smax,
        smallest_n_factor_four: smallest,
    })
}

/// `C` with `F_n(z) <= C + C z^(2+delta)` and `psi_n(z) z <= C + C z^(1+delta)`
/// for every `n` in `ns`, on a shared grid.
pub fn uniform_growth_constants(ns: &[u32], delta: f64) -> (f64, f64) {
    let z = log_grid(1e-6, 1e6, 20_001);
    let mut cv = 0.0f64;
    let mut cs = 0.0f64;
    for &n in ns {
        let f = MvApprox { n: n.max(1) };
        for &x in &z {
            cv = cv.max(f.value(x) / (1.0 + x.powf(2.0 + delta)));
            cs = cs.max(f.psi(x) * x / (1.0 + x.powf(1.0 + delta)));
        }
    }
    (cv, cs)
}

/// `F*(F'(z)) = z F'(z) - F(z)` and the bound `(a - 1) F(z)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConjugateCheck {
    pub conjugate_at_slope: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn convex_conjugate_identity(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, z: f64, a: f64) -> ConjugateCheck {
    let value = z * df(z) - f(z);
    let bound = (a - 1.0) * f(z);
    ConjugateCheck {
        conjugate_at_slope: value,
        bound,
        holds: value <= bound + 1e-10 * bound.abs().max(1.0),
    }
}

/// `T_M(u)`: radial clamp of the velocity magnitude at `M`.
pub fn truncate_velocity(u: &VecField, limit: f64) -> Result<VecField> {
    if !(limit > 0.0) {
        return Err(Error::validation("truncation level M must be positive"));
    }
    let grid = *u.grid();
    let mut comps = u.components().to_vec();
    for i in 0..grid.len() {
        let norm = u.norm_sq_at(i).sqrt();
        if norm > limit {
            let s = limit / norm;
            for c in comps.iter_mut() {
                c[i] *= s;
            }
        }
    }
    VecField::new(grid, comps)
}

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn smoothstep_slope(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// Cutoffs in the density variable: `phi_m^0` removes `rho < 1/(2m)`,
/// `phi_k^inf` removes `rho > 2k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityCutoffs {
    pub m: f64,
    pub k: f64,
}

impl DensityCutoffs {
    pub fn new(m: f64, k: f64) -> Result<Self> {
        if !(m > 0.0 && k > 0.0) {
            return Err(Error::validation("cutoff levels m and k must be positive"));
        }
        if 1.0 / m >= k {
            return Err(Error::validation("cutoff levels need 1/m < k"));
        }
        Ok(Self { m, k })
    }

    pub fn zero_cutoff(&self, rho: f64) -> f64 {
        let lo = 0.5 / self.m;
        smoothstep((rho - lo) / lo)
    }

    pub fn zero_cutoff_slope(&self, rho: f64) -> f64 {
        let lo = 0.5 / self.m;
        smoothstep_slope((rho - lo) / lo) / lo
    }

    pub fn infinity_cutoff(&self, rho: f64) -> f64 {
        1.0 - smoothstep((rho - self.k) / self.k)
    }

    pub fn infinity_cutoff_slope(&self, rho: f64) -> f64 {
        -smoothstep_slope((rho - self.k) / self.k) / self.k
    }

    pub fn combined(&self, rho: f64) -> f64 {
        self.zero_cutoff(rho) * self.infinity_cutoff(rho)
    }

    pub fn combined_slope(&self, rho: f64) -> f64 {
        self.zero_cutoff_slope(rho) * self.infinity_cutoff(rho)
            + self.zero_cutoff(rho) * self.infinity_cutoff_slope(rho)
    }

    /// Dense samples covering both transition layers.
    fn samples(&self) -> Vec<f64> {
        let count = 100_000;
        let mut out = Vec::with_capacity(2 * count + 2);
        let lo = 0.5 / self.m;
        for i in 0..=count {
            out.push(lo + lo * i as f64 / count as f64);
            out.push(self.k + self.k * i as f64 / count as f64);
        }
        out
    }
}

/// Measured constants of the cutoffs and of the weighted velocity.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffReport {
    pub zero_slope_max: f64,
    /// target `2m`
    pub zero_slope_target: f64,
    pub infinity_slope_max: f64,
    /// target `2/k`
    pub infinity_slope_target: f64,
    /// `max phi(rho)/sqrt(rho)`, bounded by `sqrt(2m)`
    pub phi_over_sqrt_rho_max: f64,
    pub phi_over_sqrt_rho_bound: f64,
    /// `max |phi'(rho)| sqrt(rho)`
    pub slope_times_sqrt_rho_max: f64,
}

pub fn cutoff_report(c: &DensityCutoffs, rho: Option<&Field>) -> CutoffReport {
    let samples = c.samples();
    let mut zs = 0.0f64;
    let mut is = 0.0f64;
    let mut ratio = 0.0f64;
    let mut slope_root = 0.0f64;
    let mut visit = |r: f64| {
        if r > 0.0 {
            ratio = ratio.max(c.combined(r) / r.sqrt());
            slope_root = slope_root.max(c.combined_slope(r).abs() * r.sqrt());
        }
    };
    for &r in &samples {
        zs = zs.max(c.zero_cutoff_slope(r).abs());
        is = is.max(c.infinity_cutoff_slope(r).abs());
        visit(r);
    }
    if let Some(f) = rho {
        for &r in f.values() {
            visit(r);
        }
    }
    CutoffReport {
        zero_slope_max: zs,
        zero_slope_target: 2.0 * c.m,
        infinity_slope_max: is,
        infinity_slope_target: 2.0 / c.k,
        phi_over_sqrt_rho_max: ratio,
        phi_over_sqrt_rho_bound: (2.0 * c.m).sqrt(),
        slope_times_sqrt_rho_max: slope_root,
    }
}

/// `v = phi_m^0(rho) phi_k^inf(rho) u` and the measured constants.
pub fn apply_cutoffs(rho: &Field, u: &VecField, c: &DensityCutoffs) -> Result<(VecField, CutoffReport)> {
    rho.grid().same_as(u.grid())?;
    let w: Vec<f64> = rho.values().iter().map(|r| c.combined(*r)).collect();
    let comps = u
        .components()
        .iter()
        .map(|comp| comp.iter().zip(&w).map(|(a, b)| a * b).collect())
        .collect();
    Ok((VecField::new(*u.grid(), comps)?, cutoff_report(c, Some(rho))))
}

/// Outcome of the weak Gronwall check over all sample pairs.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GronwallReport {
    pub pass: bool,
    /// smallest `rhs - f(t)` over pairs, scaled by `max(1, |rhs|)`
    pub worst_margin: f64,
    pub worst_pair: (usize, usize),
}

/// Check `f(t) <= f(s) e^{a(t-s)} + int_s^t e^{a(t-tau)} b(tau) dtau` for all
/// sample pairs `s < t` at spacing `dt` (trapezoid rule for the integral).
pub fn weak_gronwall(f: &[f64], dt: f64, a: f64, b: &[f64], tolerance: f64) -> Result<GronwallReport> {
    if f.len() != b.len() {
        return Err(Error::validation("f and b must have the same number of samples"));
    }
    if !(a >= 0.0) || !(dt > 0.0) {
        return Err(Error::validation("need a >= 0 and dt > 0"));
    }
    if let Some((i, v)) = b.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::validation(format!("b must be non-negative (b[{i}] = {v})")));
    }
    let n = f.len();
    // cumulative integral of e^{-a tau} b(tau)
    let mut cum = vec![0.0; n];
    for i in 1..n {
        let t0 = (i - 1) as f64 * dt;
        let t1 = i as f64 * dt;
        cum[i] = cum[i - 1] + 0.5 * dt * ((-a * t0).exp() * b[i - 1] + (-a * t1).exp() * b[i]);
    }
    let mut worst = f64::INFINITY;
    let mut pair = (0, 0);
    for s in 0..n {
        for t in s + 1..n {
            let ts = s as f64 * dt;
            let tt = t as f64 * dt;
            let rhs = f[s] * (a * (tt - ts)).exp() + (a * tt).exp() * (cum[t] - cum[s]);
            let margin = (rhs - f[t]) / rhs.abs().max(f[t].abs()).max(1.0);
            if margin < worst {
                worst = margin;
                pair = (s, t);
            }
        }
    }
    if n < 2 {
        worst = 0.0;
    }
    Ok(GronwallReport {
        pass: worst >= -tolerance,
        worst_margin: worst,
        worst_pair: pair,
    })
}

/// Non-negative source dominating the discrete growth of `f`:
/// `b_i = max(0, forward slope, backward slope)`.
pub fn gronwall_source(f: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let fwd = if i + 1 < n { (f[i + 1] - f[i]) / dt } else { 0.0 };
            let bwd = if i > 0 { (f[i] - f[i - 1]) / dt } else { 0.0 };
            fwd.max(bwd).max(0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(mv_weight(0.0), 0.0);
        assert!((mv_weight(1.0) - std::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(psi(0.0), 1.0);
        for z in [0.5, 1.0, 3.0, 10.0] {
            let h = 1e-5 * z;
            let fd = (mv_weight(z + h) - mv_weight(z - h)) / (2.0 * h);
            assert!((fd - z * psi(z)).abs() <= 1e-8 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn knee_continuity() {
        let f = MvApprox::new(3).unwrap();
        let at = 0.5 * 10.0 * 10f64.ln();
        assert!((f.value(3.0) - at).abs() < 1e-12);
        let above = f.outer_factor(3.0) * 10f64.ln();
        assert!((above - at).abs() < 1e-12);
        assert!((f.derivative(3.0) - (f.derivative(3.0 + 1e-9))).abs() < 1e-6);
        assert_eq!(MvApprox::new(5).unwrap().value(1.0), std::f64::consts::LN_2);
    }

    #[test]
    fn second_derivative_matches_fd() {
        let f = MvApprox::new(4).unwrap();
        for z in [0.5, 2.0, 6.0, 50.0] {
            let h = 1e-4 * z;
            let fd = (f.derivative(z + h) - f.derivative(z - h)) / (2.0 * h);
            assert!((fd - f.second_derivative(z)).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn truncation_examples() {
        let g = crate::grid::TorusGrid::new(2, 1.0, 2).unwrap();
        let u = VecField::from_fn(g, |_| vec![3.0, 4.0]);
        let t = truncate_velocity(&u, 2.5).unwrap();
        assert!((t.component(0)[0] - 1.5).abs() < 1e-15);
        assert!((t.component(1)[0] - 2.0).abs() < 1e-15);
        assert_eq!(truncate_velocity(&u, 10.0).unwrap(), u);
    }

    #[test]
    fn gronwall_saturating_solution() {
        let a = 0.7;
        let dt = 0.01;
        let f: Vec<f64> = (0..200).map(|i| (a * i as f64 * dt).exp()).collect();
        let r = weak_gronwall(&f, dt, a, &vec![0.0; 200], 1e-9).unwrap();
        assert!(r.pass);
        let c = weak_gronwall(&[2.0; 10], 0.1, 0.0, &[0.0; 10], 0.0).unwrap();
        assert!(c.pass && c.worst_margin == 0.0);
        assert!(weak_gronwall(&[1.0; 3], 0.1, 0.0, &[0.0, -1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn cutoff_levels() {
        let c = DensityCutoffs::new(4.0, 3.0).unwrap();
        assert_eq!(c.combined(1.0), 1.0);
        assert_eq!(c.combined(0.1), 0.0);
        assert_eq!(c.combined(7.0), 0.0);
        let r = cutoff_report(&c, None);
        assert!((r.zero_slope_max - 3.75 * 4.0).abs() < 1e-6);
        assert!(r.infinity_slope_max <= r.infinity_slope_target);
    }
}
