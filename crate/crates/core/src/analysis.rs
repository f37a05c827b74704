//! Constants, mean-value checks, lower-bound experiments and exponent fits.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arith::{jacobi_unchecked, next_prime_after};
use crate::regions::{HyperbolicRegion, Interval, Restriction};
use crate::sequences::BoundedSequence;
use crate::sieve::{build_sieve, SieveTable};
use crate::sums::{full_odd_sum, hyperbolic_sum, SumResult};
use crate::{par, Error, Result};

/// Guard on `|observed − predicted| / √(T/p)` in the lower-bound experiment.
pub const LOWER_BOUND_GUARD: f64 = 20.0;
/// Guard on `|S| z^{1/4} / (T log T)` in cancellation scans.
pub const CANCELLATION_GUARD: f64 = 5.0;
/// Guard on the Elliot ratio.
pub const ELLIOT_GUARD: f64 = 2.0;
/// Exponent ε used for the HB1 normalisation.
pub const HB1_EPSILON: f64 = 0.1;

pub fn zeta2() -> f64 {
    PI * PI / 6.0
}

/// `ζ(3)`: the first 99 terms summed smallest first, plus an Euler–Maclaurin
/// tail for `Σ_{k ≥ 100}`. Truncation error is below 1e-17.
pub fn zeta3() -> f64 {
    const N: u32 = 100;
    let n = N as f64;
    let tail = 1.0 / (2.0 * n * n) + 1.0 / (2.0 * n.powi(3)) + 1.0 / (4.0 * n.powi(4))
        - 1.0 / (12.0 * n.powi(6));
    (1..N)
        .rev()
        .fold(tail, |acc, k| acc + 1.0 / (k as f64).powi(3))
}

/// `6 ζ(2) / (7 ζ(3))`
pub fn asymptotic_constant() -> f64 {
    6.0 * zeta2() / (7.0 * zeta3())
}

/// `∏_{3 ≤ p ≤ limit} (1 − p⁻³)/(1 − p⁻²)`, the odd part of `ζ(2)/ζ(3)`.
pub fn odd_euler_product(limit: u64) -> f64 {
    crate::sieve::small_primes(limit)
        .into_iter()
        .filter(|&p| p > 2)
        .map(|p| {
            let p = p as f64;
            (1.0 - p.powi(-3)) / (1.0 - p.powi(-2))
        })
        .product()
}

/// `2 / (3 (1 + 1/p) ζ(2))`
pub fn lower_bound_constant(p: u64) -> f64 {
    2.0 / (3.0 * (1.0 + 1.0 / p as f64) * zeta2())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub zeta2: f64,
    pub zeta3: f64,
    pub euler_product_value: f64,
    /// `(K, Σ_{odd k ≤ K} φ(k²)/k⁴)`
    pub series_partial: Vec<(u64, f64)>,
}

impl ConstantReport {
    pub fn lower_bound_constant(&self, p: u64) -> f64 {
        2.0 / (3.0 * (1.0 + 1.0 / p as f64) * self.zeta2)
    }
}

/// `Σ_{odd k ≤ K} φ(k²)/k⁴` for every `K` in `ks` (ascending), in one pass.
pub fn series_partials(ks: &[u64], table: &SieveTable) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::with_capacity(ks.len());
    let mut acc = 0.0;
    let mut k = 1u64;
    for &limit in ks {
        while k <= limit {
            let kf = k as f64;
            acc += table.phi(k)? as f64 / (kf * kf * kf);
            k += 2;
        }
        out.push((limit, acc));
    }
    Ok(out)
}

/// Constants plus partial sums on the grid `1, 3, 10, 30, …` up to `precision_terms`.
pub fn euler_product_constant(precision_terms: u64) -> Result<ConstantReport> {
    if precision_terms == 0 {
        return Err(Error::invalid(
            "euler_product_constant: need at least one term",
        ));
    }
    let mut ks = Vec::new();
    let mut base = 1u64;
    'grid: loop {
        for mult in [1, 3] {
            let k = base * mult;
            if k >= precision_terms {
                break 'grid;
            }
            ks.push(k);
        }
        base *= 10;
    }
    ks.push(precision_terms);
    let table = build_sieve(precision_terms, 1 << 16)?;
    Ok(ConstantReport {
        zeta2: zeta2(),
        zeta3: zeta3(),
        euler_product_value: asymptotic_constant(),
        series_partial: series_partials(&ks, &table)?,
    })
}

/// The full odd-pair sum `Σ_{odd n, m; nm ≤ T} (n/m)`.
pub fn first_example_sum(t: f64, table: &SieveTable) -> Result<SumResult> {
    full_odd_sum(t, table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    #[serde(rename = "T")]
    pub t: f64,
    pub z: f64,
    pub p: u64,
    pub observed: i128,
    pub terms: u64,
    /// Independent count of odd square-free `n ∈ (z, T/p]` with `p ∤ n`.
    pub counted: u64,
    pub constant: f64,
    pub predicted: f64,
    /// `|observed − predicted| / √(T/p)`
    pub deviation_ratio: f64,
    pub guard: f64,
}

impl LowerBoundReport {
    pub fn passes(&self) -> bool {
        self.observed == self.counted as i128 && self.deviation_ratio <= self.guard
    }
}

/// `a_n = (n/p)`, `b_m = 1{m = p}` with `p` the least prime above `z`.
pub fn lower_bound_experiment(t: f64, z: f64, table: &SieveTable) -> Result<LowerBoundReport> {
    if !(z >= 2.0) {
        return Err(Error::invalid("lower_bound_experiment: z must be ≥ 2"));
    }
    if z > t.powf(0.25) * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "lower_bound_experiment: z = {z} exceeds T^(1/4)"
        )));
    }
    let p = next_prime_after(z);
    let region = HyperbolicRegion::new(t, z, Restriction::OddSquarefree)?;
    let a = BoundedSequence::jacobi_character(p)?;
    let b = BoundedSequence::point_mass(p);
    let s = hyperbolic_sum(&region, &a, &b, 0.0, table)?;
    let observed = s
        .exact()
        .ok_or_else(|| Error::invalid("lower_bound_experiment: sum not exact"))?;

    let n_hi = region.t_floor() / p;
    let counted = (region.z_floor() + 1..=n_hi)
        .filter(|&n| n % 2 == 1 && n % p != 0 && table.is_odd_squarefree(n).unwrap_or(false))
        .count() as u64;

    let constant = lower_bound_constant(p);
    let predicted = constant * (t / p as f64 - z);
    Ok(LowerBoundReport {
        t,
        z,
        p,
        observed,
        terms: s.terms,
        counted,
        constant,
        predicted,
        deviation_ratio: (observed as f64 - predicted).abs() / (t / p as f64).sqrt(),
        guard: LOWER_BOUND_GUARD,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanValueVariant {
    Elliot,
    Hb1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanValueReport {
    pub variant: MeanValueVariant,
    #[serde(rename = "M")]
    pub m: u64,
    pub interval: Interval,
    /// `Σ*_{m ≤ M} |Σ*_{n ∈ I} a_n (n/m)|²`
    pub l: f64,
    /// `L` as an exact integer when `a` is integral.
    pub l_exact: Option<i128>,
    pub normaliser: f64,
    pub ratio: f64,
}

impl MeanValueReport {
    pub fn passes(&self, guard: f64) -> bool {
        self.ratio <= guard
    }
}

/// `L = Σ*_{m ≤ M} |Σ*_{n ∈ I} a_n (n/m)|²` and its ratio to the chosen
/// normaliser, with `N = I.hi`.
pub fn meanvalue_check(
    m_max: u64,
    interval: Interval,
    a: &BoundedSequence,
    table: &SieveTable,
    variant: MeanValueVariant,
) -> Result<MeanValueReport> {
    if m_max == 0 || interval.is_empty() {
        return Err(Error::invalid(
            "meanvalue_check: need M ≥ 1 and a nonempty interval",
        ));
    }
    let n_big = interval.hi;
    if !table.covers(m_max.max(n_big)) {
        return Err(Error::invalid(
            "meanvalue_check: table does not cover M and N",
        ));
    }
    let ns: Vec<u64> = (interval.lo + 1..=interval.hi)
        .filter(|&n| table.is_odd_squarefree(n).unwrap_or(false))
        .collect();
    let ms: Vec<u64> = (1..=m_max)
        .step_by(2)
        .filter(|&m| table.is_odd_squarefree(m).unwrap_or(false))
        .collect();
    let chunks: Vec<&[u64]> = ms.chunks(256).collect();

    let (l, l_exact) = if let Some(av) = a.integral_range(interval.lo + 1, interval.hi) {
        let coeffs: Vec<(u64, i64)> = ns
            .iter()
            .map(|&n| (n, av[(n - interval.lo - 1) as usize] as i64))
            .filter(|&(_, v)| v != 0)
            .collect();
        let parts = par::map_ordered(&chunks, |chunk| {
            chunk
                .iter()
                .map(|&m| {
                    let inner: i64 = coeffs
                        .iter()
                        .map(|&(n, v)| v * jacobi_unchecked(n, m) as i64)
                        .sum();
                    (inner as i128) * (inner as i128)
                })
                .sum::<i128>()
        });
        let total: i128 = parts.into_iter().sum();
        (total as f64, Some(total))
    } else {
        let av = a.complex_range(interval.lo + 1, interval.hi);
        let coeffs: Vec<_> = ns
            .iter()
            .map(|&n| (n, av[(n - interval.lo - 1) as usize]))
            .collect();
        let parts = par::map_ordered(&chunks, |chunk| {
            chunk
                .iter()
                .map(|&m| {
                    let inner: num_complex::Complex64 = coeffs
                        .iter()
                        .map(|&(n, v)| v * jacobi_unchecked(n, m) as f64)
                        .sum();
                    inner.norm_sqr()
                })
                .sum::<f64>()
        });
        (parts.into_iter().sum(), None)
    };

    let (mf, nf, len) = (m_max as f64, n_big as f64, interval.len() as f64);
    let normaliser = match variant {
        MeanValueVariant::Elliot => (mf + nf * nf * nf.ln()) * len,
        MeanValueVariant::Hb1 => (mf * nf).powf(HB1_EPSILON) * mf.max(nf) * len,
    };
    Ok(MeanValueReport {
        variant,
        m: m_max,
        interval,
        l,
        l_exact,
        normaliser,
        ratio: l / normaliser,
    })
}

/// How `z` is chosen for each `T` in a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZRule {
    /// `z = T^e`
    Power(f64),
    /// One point per exponent, `z = T^e`.
    Powers(Vec<f64>),
    /// `z = (log T)^A`
    LogPower(f64),
}

impl ZRule {
    pub fn zs(&self, t: f64) -> Vec<f64> {
        match self {
            ZRule::Power(e) => vec![t.powf(*e)],
            ZRule::Powers(es) => es.iter().map(|e| t.powf(*e)).collect(),
            ZRule::LogPower(a) => vec![t.ln().powf(*a)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqKind {
    ConstantOne,
    /// Independent Rademacher signs for `a` (seed `s`) and `b` (seed `s + 2⁶³`).
    Rademacher,
    /// `a_n = (n/p)`, `b_m = 1{m = p}`, `p` the least prime above `z`.
    Adversarial,
}

impl SeqKind {
    fn sequences(self, seed: u64, z: f64) -> Result<(BoundedSequence, BoundedSequence)> {
        Ok(match self {
            SeqKind::ConstantOne => (BoundedSequence::ConstantOne, BoundedSequence::ConstantOne),
            SeqKind::Rademacher => (
                BoundedSequence::rademacher(seed),
                BoundedSequence::rademacher(seed ^ (1 << 63)),
            ),
            SeqKind::Adversarial => {
                let p = next_prime_after(z);
                (
                    BoundedSequence::jacobi_character(p)?,
                    BoundedSequence::point_mass(p),
                )
            }
        })
    }
}

impl std::str::FromStr for SeqKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "constant_one" => Ok(SeqKind::ConstantOne),
            "rademacher" => Ok(SeqKind::Rademacher),
            "adversarial" => Ok(SeqKind::Adversarial),
            _ => Err(Error::invalid(format!("unknown sequence kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    #[serde(rename = "T")]
    pub t: f64,
    pub z: f64,
    pub seed: u64,
    pub value: i128,
    pub terms: u64,
    /// `|S| z^{1/4} / (T log T)`
    pub guard_ratio: f64,
}

/// Least-squares fit `log|S| ≈ c₀ + β log T + α log z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Fitted exponent of `z`; `None` when `log z` is collinear with `log T`
    /// on the grid, in which case only `β` is fitted.
    pub alpha_hat: Option<f64>,
    pub beta_hat: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// Points with `S = 0` cannot enter a log fit.
    pub skipped_zero: usize,
    pub config: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CancellationScan {
    pub kind: SeqKind,
    pub points: Vec<ScanPoint>,
    pub fit: ExponentFit,
    pub guard: f64,
}

impl CancellationScan {
    pub fn max_guard_ratio(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.guard_ratio)
            .fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.max_guard_ratio() <= self.guard
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T", "z", "seed", "value", "terms", "guard_ratio"])?;
        for p in &self.points {
            w.write_record([
                p.t.to_string(),
                p.z.to_string(),
                p.seed.to_string(),
                p.value.to_string(),
                p.terms.to_string(),
                p.guard_ratio.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Log-log plot of `|S|` against `T` with the fitted values.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (640.0, 420.0, 50.0);
        let pts: Vec<(f64, f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.value != 0)
            .map(|p| {
                (
                    p.t.log10(),
                    (p.value.unsigned_abs() as f64).log10(),
                    p.z.log10(),
                )
            })
            .collect();
        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
        );
        svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
        if pts.is_empty() {
            svg.push_str("</svg>\n");
            return svg;
        }
        let fitted = |lt: f64, lz: f64| {
            let ln10 = std::f64::consts::LN_10;
            (self.fit.intercept
                + self.fit.beta_hat * lt * ln10
                + self.fit.alpha_hat.unwrap_or(0.0) * lz * ln10)
                / ln10
        };
        let (x0, x1) = pts
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (y0, y1) = pts
            .iter()
            .flat_map(|p| [p.1, fitted(p.0, p.2)])
            .fold((f64::MAX, f64::MIN), |(a, b), y| (a.min(y), b.max(y)));
        let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
        let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

        let _ = write!(
            svg,
            r#"<line x1="{pad}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{b}" stroke="black"/>"#,
            b = h - pad,
            r = w - pad
        );
        for d in x0 as i32..=x1 as i32 {
            let _ = write!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#,
                sx(d as f64),
                h - pad + 18.0
            );
        }
        for d in y0 as i32..=y1 as i32 {
            let _ = write!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
                pad - 6.0,
                sy(d as f64) + 4.0
            );
        }
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">T</text>"#,
            w / 2.0,
            h - 10.0
        );
        let _ = write!(
            svg,
            r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">|S|</text>"#,
            h / 2.0,
            h / 2.0
        );

        let mut line: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, fitted(p.0, p.2))).collect();
        line.sort_by(|a, b| a.partial_cmp(b).unwrap());
        line.dedup();
        let path: Vec<String> = line
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = write!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="crimson" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for p in &pts {
            let _ = write!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#,
                sx(p.0),
                sy(p.1)
            );
        }
        let label = match self.fit.alpha_hat {
            Some(a) => format!("beta = {:.3}, alpha = {:.3}", self.fit.beta_hat, a),
            None => format!("beta = {:.3}", self.fit.beta_hat),
        };
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}">{label}</text>"#,
            pad + 10.0,
            pad - 10.0
        );
        svg.push_str("</svg>\n");
        svg
    }
}

/// Ordinary least squares via SVD. Returns `None` if the design is rank deficient.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-9 * smax) {
        return None;
    }
    svd.solve(y, 1e-12 * smax).ok()
}

pub fn fit_exponents(points: &[ScanPoint], config: String) -> Result<ExponentFit> {
    let used: Vec<&ScanPoint> = points.iter().filter(|p| p.value != 0).collect();
    let skipped_zero = points.len() - used.len();
    if used.len() < 3 {
        return Err(Error::invalid("fit_exponents: fewer than 3 nonzero points"));
    }
    let y = DVector::from_iterator(
        used.len(),
        used.iter().map(|p| (p.value.unsigned_abs() as f64).ln()),
    );
    let full = DMatrix::from_fn(used.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => used[i].t.ln(),
        _ => used[i].z.ln(),
    });
    let (coef, x) = match least_squares(&full, &y) {
        Some(c) => (c, full),
        None => {
            let x = full.columns(0, 2).into_owned();
            let c = least_squares(&x, &y)
                .ok_or_else(|| Error::invalid("fit_exponents: degenerate T grid"))?;
            (c, x)
        }
    };
    let residuals = (&y - &x * &coef).iter().copied().collect();
    Ok(ExponentFit {
        alpha_hat: (coef.len() == 3).then(|| coef[2]),
        beta_hat: coef[1],
        intercept: coef[0],
        residuals,
        skipped_zero,
        config,
    })
}

/// Exact sums over `T ∈ t_grid`, every `z` the rule gives and every seed,
/// then a log-log fit. The adversarial kind ignores all but the first seed.
pub fn cancellation_scan(
    t_grid: &[f64],
    z_rule: &ZRule,
    kind: SeqKind,
    seeds: &[u64],
    table: &SieveTable,
) -> Result<CancellationScan> {
    let mut distinct: Vec<f64> = t_grid.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid(
            "cancellation_scan: the T grid needs at least 3 distinct points",
        ));
    }
    if seeds.is_empty() {
        return Err(Error::invalid(
            "cancellation_scan: at least one seed is required",
        ));
    }
    let seeds = if kind == SeqKind::Adversarial {
        &seeds[..1]
    } else {
        seeds
    };
    let mut points = Vec::new();
    for &t in t_grid {
        for z in z_rule.zs(t) {
            for &seed in seeds {
                let region = HyperbolicRegion::new(t, z, Restriction::OddSquarefree)?;
                let (a, b) = kind.sequences(seed, z)?;
                let s = hyperbolic_sum(&region, &a, &b, 0.0, table)?;
                let value = s
                    .exact()
                    .ok_or_else(|| Error::invalid("cancellation_scan: sum not exact"))?;
                points.push(ScanPoint {
                    t,
                    z,
                    seed,
                    value,
                    terms: s.terms,
                    guard_ratio: value.unsigned_abs() as f64 * z.powf(0.25) / (t * t.ln()),
                });
            }
        }
    }
    let config = format!("T = {t_grid:?}, z rule = {z_rule:?}, kind = {kind:?}, seeds = {seeds:?}");
    let fit = fit_exponents(&points, config)?;
    Ok(CancellationScan {
        kind,
        points,
        fit,
        guard: CANCELLATION_GUARD,
    })
}
