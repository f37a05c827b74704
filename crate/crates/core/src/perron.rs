//! Truncated Perron integral
//!
//! ```text
//!   (1/π) ∫_{-R}^{R} (nm)^{it} sin(t log τ)/t dt  ≈  1(nm ≤ τ)
//! ```
//!
//! The real part is `(2/π) ∫_0^R cos(t log nm) sin(t log τ)/t dt`. It is
//! evaluated panel by panel between consecutive zeros of `sin(t log τ)`, each
//! panel subdivided so that `cos(t log nm)` also completes at most about one
//! half-period per piece. Panel integrals are added pairwise.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{par, Error, Result};

/// Factor applied to the predicted error before a sample is flagged.
pub const ERROR_GUARD: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    AdaptiveSimpson,
    /// Fixed-order Gauss–Legendre on every panel.
    GaussLegendre {
        nodes: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronConfig {
    pub tau: f64,
    pub r: f64,
    pub quadrature: Quadrature,
    pub tolerance: f64,
}

impl PerronConfig {
    pub fn new(tau: f64, r: f64) -> Self {
        PerronConfig {
            tau,
            r,
            quadrature: Quadrature::GaussLegendre { nodes: 16 },
            tolerance: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 1.0) || !self.tau.is_finite() {
            return Err(Error::invalid("perron: tau must be a finite value > 1"));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::invalid("perron: R must be positive and finite"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("perron: tolerance must be positive"));
        }
        if let Quadrature::GaussLegendre { nodes } = self.quadrature {
            if !(2..=64).contains(&nodes) {
                return Err(Error::invalid(
                    "perron: Gauss–Legendre order must be in 2..=64",
                ));
            }
        }
        Ok(())
    }
}

/// `(τ, θ)` with `τ = T + θ ∈ ℤ + 1/2` and `θ ∈ (−1/2, 1/2]`.
pub fn half_integer_shift(t: f64) -> Result<(f64, f64)> {
    if !(t >= 2.0) || !t.is_finite() {
        return Err(Error::invalid("half_integer_shift: T must be ≥ 2"));
    }
    let tau = t.floor() + 0.5;
    Ok((tau, tau - t))
}

/// `sin(t log τ)/t`, equal to `log τ` at `t = 0`.
pub fn f_tau(t: f64, tau: f64) -> f64 {
    let b = tau.ln();
    let x = t * b;
    if x.abs() < 1e-4 {
        // sin x / x = 1 − x²/6 + x⁴/120
        let x2 = x * x;
        b * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0))
    } else {
        x.sin() / t
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] via Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Panel endpoints on [0, R].
fn panels(a: f64, b: f64, r: f64) -> Vec<f64> {
    let step = PI / b;
    let sub = ((a + b) / b).ceil().max(1.0) as usize;
    let h = step / sub as f64;
    let count = (r / h).ceil() as usize;
    let mut pts: Vec<f64> = (0..count).map(|i| i as f64 * h).collect();
    pts.push(r);
    pts
}

struct Integrand {
    a: f64,
    tau: f64,
}

impl Integrand {
    /// (even part, odd part) at `t`, so the real integrand is the even part.
    #[inline]
    fn eval(&self, t: f64) -> (f64, f64) {
        let f = f_tau(t, self.tau);
        let (s, c) = (t * self.a).sin_cos();
        (c * f, s * f)
    }
}

fn gl_panel(g: &Integrand, lo: f64, hi: f64, x: &[f64], w: &[f64]) -> (f64, f64) {
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let mut re = 0.0;
    let mut im = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let t = mid + half * xi;
        let (e, o) = g.eval(t);
        re += wi * e;
        // the odd part at t and −t, which cancel analytically
        im += wi * (o + g.eval(-t).1);
    }
    (re * half, im * half)
}

fn simpson(g: &Integrand, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    fn rec(
        g: &Integrand,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = (a + b) / 2.0;
        let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
        let (flm, frm) = (g.eval(lm).0, g.eval(rm).0);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Numeric {
                message: "adaptive Simpson hit its depth limit".into(),
                location: format!("t ∈ [{a}, {b}]"),
                estimate: delta.abs(),
            });
        }
        Ok(rec(g, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + rec(g, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    let (fa, fm, fb) = (g.eval(lo).0, g.eval((lo + hi) / 2.0).0, g.eval(hi).0);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    rec(g, lo, hi, fa, fm, fb, whole, tol, 40)
}

/// `(1/π) ∫_{-R}^{R} cos(t log nm) sin(t log τ)/t dt`.
///
/// The imaginary part is integrated too (Gauss–Legendre only) and must
/// vanish to within the tolerance.
pub fn perron_indicator(nm: u64, cfg: &PerronConfig) -> Result<f64> {
    cfg.validate()?;
    if nm == 0 {
        return Err(Error::invalid("perron_indicator: nm must be positive"));
    }
    let g = Integrand {
        a: (nm as f64).ln(),
        tau: cfg.tau,
    };
    let pts = panels(g.a, cfg.tau.ln(), cfg.r);
    let n_panels = pts.len() - 1;
    let mut parts = Vec::with_capacity(n_panels);
    match cfg.quadrature {
        Quadrature::GaussLegendre { nodes } => {
            let (x, w) = gauss_legendre(nodes);
            let (xh, wh) = gauss_legendre((nodes / 2).max(1));
            let mut im = Vec::with_capacity(n_panels);
            let mut err = 0.0;
            for p in pts.windows(2) {
                let (re, odd) = gl_panel(&g, p[0], p[1], &x, &w);
                let (lower, _) = gl_panel(&g, p[0], p[1], &xh, &wh);
                err += (re - lower).abs();
                parts.push(re);
                im.push(odd);
            }
            // the low-order rule is far less accurate, so this overstates the error
            if err * 2.0 / PI > cfg.tolerance {
                return Err(Error::Numeric {
                    message: "Gauss–Legendre panels did not converge".into(),
                    location: format!("nm = {nm}, τ = {}, R = {}", cfg.tau, cfg.r),
                    estimate: err * 2.0 / PI,
                });
            }
            let imag = pairwise_sum(&im) / PI;
            if imag.abs() > cfg.tolerance {
                return Err(Error::Numeric {
                    message: "imaginary part does not vanish".into(),
                    location: format!("nm = {nm}, τ = {}, R = {}", cfg.tau, cfg.r),
                    estimate: imag.abs(),
                });
            }
        }
        Quadrature::AdaptiveSimpson => {
            let tol = cfg.tolerance * PI / 2.0 / n_panels as f64;
            for p in pts.windows(2) {
                parts.push(simpson(&g, p[0], p[1], tol)?);
            }
        }
    }
    Ok(2.0 / PI * pairwise_sum(&parts))
}

/// `R⁻¹ |log nm − log τ|⁻¹`
pub fn predicted_bound(nm: u64, tau: f64, r: f64) -> f64 {
    1.0 / (r * ((nm as f64).ln() - tau.ln()).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronRow {
    pub nm: u64,
    #[serde(rename = "R")]
    pub r: f64,
    pub value: f64,
    pub observed_error: f64,
    pub predicted_bound: f64,
    pub ratio: f64,
}

impl PerronRow {
    pub fn flagged(&self) -> bool {
        self.ratio > ERROR_GUARD
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronScan {
    pub tau: f64,
    pub theta: f64,
    pub rows: Vec<PerronRow>,
}

impl PerronScan {
    pub fn max_error(&self, r: f64) -> f64 {
        self.rows
            .iter()
            .filter(|row| row.r == r)
            .map(|row| row.observed_error)
            .fold(0.0, f64::max)
    }

    pub fn mean_error(&self, r: f64) -> f64 {
        let errs: Vec<f64> = self
            .rows
            .iter()
            .filter(|row| row.r == r)
            .map(|row| row.observed_error)
            .collect();
        errs.iter().sum::<f64>() / errs.len().max(1) as f64
    }

    pub fn flagged(&self) -> impl Iterator<Item = &PerronRow> {
        self.rows.iter().filter(|row| row.flagged())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["nm", "R", "observed_error", "predicted_bound", "ratio"])?;
        for row in &self.rows {
            w.write_record([
                row.nm.to_string(),
                row.r.to_string(),
                format!("{:e}", row.observed_error),
                format!("{:e}", row.predicted_bound),
                format!("{:e}", row.ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `n` evenly spaced integers from `lo` to `hi` inclusive.
pub fn even_sample(lo: u64, hi: u64, n: usize) -> Vec<u64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + ((hi - lo) as f64 * k as f64 / (n - 1) as f64).round() as u64)
        .collect()
}

/// Indicator errors at `τ = half_integer_shift(T)` for every `(nm, R)`.
///
/// `cfg.tau` and `cfg.r` are overridden; the quadrature settings are kept.
pub fn perron_error_scan(
    t: f64,
    r_list: &[f64],
    sample: &[u64],
    cfg: &PerronConfig,
) -> Result<PerronScan> {
    let (tau, theta) = half_integer_shift(t)?;
    if let Some(&bad) = sample.iter().find(|&&nm| nm == 0 || nm as f64 > 2.0 * t) {
        return Err(Error::invalid(format!(
            "perron_error_scan: sample value {bad} outside [1, 2T]"
        )));
    }
    let jobs: Vec<(u64, f64)> = r_list
        .iter()
        .flat_map(|&r| sample.iter().map(move |&nm| (nm, r)))
        .collect();
    let rows = par::map_ordered(&jobs, |&(nm, r)| -> Result<PerronRow> {
        let value = perron_indicator(nm, &PerronConfig { tau, r, ..*cfg })?;
        let exact = if nm as f64 <= tau { 1.0 } else { 0.0 };
        let observed_error = (value - exact).abs();
        let predicted_bound = predicted_bound(nm, tau, r);
        Ok(PerronRow {
            nm,
            r,
            value,
            observed_error,
            predicted_bound,
            ratio: observed_error / predicted_bound,
        })
    });
    Ok(PerronScan {
        tau,
        theta,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `Si(x)` by power series for small `|x|` and the continued fraction
    /// for `E₁(ix)` otherwise.
    fn si(x: f64) -> f64 {
        let t = x.abs();
        let v = if t <= 2.0 {
            let mut sum = 0.0;
            let mut term = t; // t^{2k+1}/(2k+1)!
            let mut k = 0;
            while term.abs() > 1e-18 {
                sum += term / (2 * k + 1) as f64;
                term *= -t * t / ((2 * k + 2) * (2 * k + 3)) as f64;
                k += 1;
            }
            sum
        } else {
            use num_complex::Complex64 as C;
            let mut b = C::new(1.0, t);
            let mut c = C::new(1e300, 0.0);
            let mut d = C::new(1.0, 0.0) / b;
            let mut h = d;
            for i in 2..100_000 {
                let a = -((i - 1) as f64).powi(2);
                b += 2.0;
                d = C::new(1.0, 0.0) / (d * a + b);
                c = b + C::new(a, 0.0) / c;
                let del = c * d;
                h *= del;
                if (del - 1.0).norm() < 1e-16 {
                    break;
                }
            }
            h *= C::new(t.cos(), -t.sin());
            PI / 2.0 + h.im
        };
        v.copysign(x)
    }

    /// Closed form of the truncated integral in terms of the sine integral.
    fn oracle(nm: u64, tau: f64, r: f64) -> f64 {
        let (a, b) = ((nm as f64).ln(), tau.ln());
        (si(r * (b + a)) + si(r * (b - a))) / PI
    }

    #[test]
    fn sine_integral_oracle() {
        assert!((si(1.0) - 0.946_083_070_367_183_1).abs() < 1e-14);
        assert!((si(10.0) - 1.658_347_594_218_874).abs() < 1e-13);
        assert!((si(-3.0) + 1.848_652_527_999_468).abs() < 1e-13);
    }

    #[test]
    fn shift_examples() {
        assert_eq!(half_integer_shift(10.0).unwrap(), (10.5, 0.5));
        assert_eq!(half_integer_shift(10.25).unwrap(), (10.5, 0.25));
        assert_eq!(half_integer_shift(10.75).unwrap(), (10.5, -0.25));
        assert!(half_integer_shift(1.5).is_err());
        for t in [2.0, 3.3, 1e3, 12345.678] {
            let (tau, theta) = half_integer_shift(t).unwrap();
            assert!(theta.abs() <= 0.5);
            assert_eq!(tau.fract(), 0.5);
            assert!((t + theta - tau).abs() < 1e-9);
        }
    }

    #[test]
    fn removable_singularity() {
        let tau = 10.5f64;
        for t in [0.0, 1e-14, 1e-10, 1e-7] {
            assert!((f_tau(t, tau) - tau.ln()).abs() < 1e-12);
        }
        assert!((f_tau(1e-3, tau) - (1e-3 * tau.ln()).sin() / 1e-3).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫ x^14 = 2/15
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((q - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn indicator_examples() {
        let cfg = PerronConfig::new(10.5, 1e3);
        let v6 = perron_indicator(6, &cfg).unwrap();
        let v12 = perron_indicator(12, &cfg).unwrap();
        assert!((v6 - 1.0).abs() < 1e-2);
        assert!(v12.abs() < 1e-2);
        assert!((v6 - oracle(6, 10.5, 1e3)).abs() < 1e-8);
        assert!((v12 - oracle(12, 10.5, 1e3)).abs() < 1e-8);

        let errs: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&r| (perron_indicator(1, &PerronConfig::new(10.5, r)).unwrap() - 1.0).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn matches_sine_integral_closed_form() {
        for (nm, tau, r) in [
            (1, 2.5, 50.0),
            (2, 2.5, 300.0),
            (1000, 1000.5, 1e3),
            (1001, 1000.5, 1e3),
            (1999, 1000.5, 2e3),
        ] {
            let got = perron_indicator(nm, &PerronConfig::new(tau, r)).unwrap();
            let want = oracle(nm, tau, r);
            assert!(
                (got - want).abs() < 1e-8,
                "nm={nm} τ={tau} R={r}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn simpson_agrees() {
        let mut cfg = PerronConfig::new(10.5, 200.0);
        cfg.quadrature = Quadrature::AdaptiveSimpson;
        cfg.tolerance = 1e-9;
        for nm in [1, 6, 10, 11, 20] {
            let got = perron_indicator(nm, &cfg).unwrap();
            assert!((got - oracle(nm, 10.5, 200.0)).abs() < 1e-7, "nm={nm}");
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(perron_indicator(3, &PerronConfig::new(1.0, 10.0)).is_err());
        assert!(perron_indicator(3, &PerronConfig::new(10.5, 0.0)).is_err());
        assert!(perron_indicator(0, &PerronConfig::new(10.5, 10.0)).is_err());
        let cfg = PerronConfig {
            quadrature: Quadrature::GaussLegendre { nodes: 2 },
            tolerance: 1e-14,
            ..PerronConfig::new(10.5, 100.0)
        };
        assert!(matches!(
            perron_indicator(7, &cfg),
            Err(Error::Numeric { .. })
        ));
    }

    #[test]
    fn scan_behaviour() {
        let t = 100.0;
        let sample = even_sample(2, 200, 40);
        let scan =
            perron_error_scan(t, &[1e2, 1e3], &sample, &PerronConfig::new(0.0, 0.0)).unwrap();
        assert_eq!(scan.tau, 100.5);
        assert_eq!(scan.rows.len(), 80);
        assert!(scan.mean_error(1e3) <= scan.mean_error(1e2) * 1.05);
        let row = scan.rows.iter().find(|r| r.nm == 2 && r.r == 1e3).unwrap();
        assert!(row.observed_error < 1e-3);
        // nm next to τ: the predicted bound is about 2T/R
        assert!((predicted_bound(100, 100.5, 1e3) - 2.0 * 100.5 / 1e3).abs() < 1e-3);
        assert!(perron_error_scan(t, &[1e2], &[201], &PerronConfig::new(0.0, 0.0)).is_err());

        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("nm,R,observed_error,predicted_bound,ratio\n"));
        assert_eq!(text.lines().count(), 81);
    }
}
