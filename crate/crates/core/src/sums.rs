//! Bilinear sums `Σ (nm)^c (nm)^{it} a_n b_m (n/m)` over blocks of lattice points.
//!
//! When both sequences take values in {-1, 0, 1} and the weight is trivial the
//! sum is accumulated in `i128` and is exact. Otherwise each chunk of `n`
//! values is summed with Neumaier compensation. Chunks have a fixed size and
//! are merged in order, so results do not depend on the number of threads.

use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{iroot, isqrt, jacobi_unchecked};
use crate::regions::{Block, EqualWidthCover, HyperbolicRegion, Interval, Restriction, Splitting};
use crate::sequences::BoundedSequence;
use crate::sieve::SieveTable;
use crate::{par, Error, Result};

/// Number of admissible `n` values per work chunk.
const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ExactInteger,
    Floating,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SumValue {
    Exact { re: i128, im: i128 },
    Floating(Complex64),
}

/// A sum together with the number of lattice points it ran over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumResult {
    pub value: SumValue,
    pub terms: u64,
    /// Set when an exact accumulation overflowed and fell back to floating point.
    pub escalated: bool,
}

impl SumResult {
    pub fn zero_exact() -> Self {
        SumResult {
            value: SumValue::Exact { re: 0, im: 0 },
            terms: 0,
            escalated: false,
        }
    }

    pub fn mode(&self) -> Mode {
        match self.value {
            SumValue::Exact { .. } => Mode::ExactInteger,
            SumValue::Floating(_) => Mode::Floating,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        match self.value {
            SumValue::Exact { re, im } => Complex64::new(re as f64, im as f64),
            SumValue::Floating(z) => z,
        }
    }

    /// Real part when the value is an exact integer.
    pub fn exact(&self) -> Option<i128> {
        match self.value {
            SumValue::Exact { re, im: 0 } => Some(re),
            _ => None,
        }
    }

    pub fn abs(&self) -> f64 {
        self.to_complex().norm()
    }

    fn combine(self, rhs: Self, sign: i128) -> Self {
        let terms = self.terms + rhs.terms;
        let escalated = self.escalated || rhs.escalated;
        let value = match (self.value, rhs.value) {
            (SumValue::Exact { re: a, im: b }, SumValue::Exact { re: c, im: d }) => {
                match (a.checked_add(sign * c), b.checked_add(sign * d)) {
                    (Some(re), Some(im)) => SumValue::Exact { re, im },
                    _ => {
                        let z = self.to_complex() + rhs.to_complex() * sign as f64;
                        return SumResult {
                            value: SumValue::Floating(z),
                            terms,
                            escalated: true,
                        };
                    }
                }
            }
            _ => SumValue::Floating(self.to_complex() + rhs.to_complex() * sign as f64),
        };
        SumResult {
            value,
            terms,
            escalated,
        }
    }
}

impl Add for SumResult {
    type Output = SumResult;

    fn add(self, rhs: Self) -> Self {
        self.combine(rhs, 1)
    }
}

/// Values subtract; term counts still add (the subtracted piece was summed too).
impl Sub for SumResult {
    type Output = SumResult;

    fn sub(self, rhs: Self) -> Self {
        self.combine(rhs, -1)
    }
}

impl Neg for SumResult {
    type Output = SumResult;

    fn neg(self) -> Self {
        let value = match self.value {
            SumValue::Exact { re, im } => SumValue::Exact { re: -re, im: -im },
            SumValue::Floating(z) => SumValue::Floating(-z),
        };
        SumResult { value, ..self }
    }
}

/// Per-term weight `(nm / scale)^c · (nm)^{i t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub c: f64,
    pub t_phase: f64,
    /// Normalising denominator for `nm`; `None` means raw `(nm)^c`.
    pub scale: Option<f64>,
}

impl Default for TermWeight {
    fn default() -> Self {
        TermWeight {
            c: 0.0,
            t_phase: 0.0,
            scale: None,
        }
    }
}

impl TermWeight {
    pub fn power(c: f64) -> Self {
        TermWeight {
            c,
            ..Default::default()
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.c == 0.0 && self.t_phase == 0.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0) || !self.t_phase.is_finite() {
            return Err(Error::invalid("weight: need c ≥ 0 and finite t"));
        }
        if let Some(s) = self.scale {
            if !(s > 0.0) {
                return Err(Error::invalid("weight: scale must be positive"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, n: u64, m: u64) -> Complex64 {
        let nm = n as f64 * m as f64;
        let mag = if self.c == 0.0 {
            1.0
        } else {
            (nm / self.scale.unwrap_or(1.0)).powf(self.c)
        };
        if self.t_phase == 0.0 {
            Complex64::new(mag, 0.0)
        } else {
            Complex64::from_polar(mag, self.t_phase * nm.ln())
        }
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Default)]
struct Compensated {
    re: (f64, f64),
    im: (f64, f64),
}

#[inline]
fn neumaier(acc: &mut (f64, f64), x: f64) {
    let t = acc.0 + x;
    if acc.0.abs() >= x.abs() {
        acc.1 += (acc.0 - t) + x;
    } else {
        acc.1 += (x - t) + acc.0;
    }
    acc.0 = t;
}

impl Compensated {
    #[inline]
    fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

enum Coeffs {
    Int(Vec<i8>),
    Cplx(Vec<Complex64>),
}

enum Partial {
    Exact(i128),
    Float(Complex64),
}

struct Prepared {
    ns: Vec<u64>,
    a: Coeffs,
    /// every admissible m, for term counting
    ms_all: Vec<u64>,
    /// admissible m with b_m ≠ 0
    ms: Vec<u64>,
    b: Coeffs,
}

fn prepare(
    block: &Block,
    restriction: Restriction,
    a: &BoundedSequence,
    b: &BoundedSequence,
    exact: bool,
    table: &SieveTable,
) -> Prepared {
    let n_hi = block.effective_n_hi();
    let m_hi = block.effective_m_hi();
    let ns: Vec<u64> = (block.n.lo + 1..=n_hi)
        .filter(|&n| restriction.admits_n(table, n))
        .collect();
    let ms_all: Vec<u64> = (block.m.lo + 1..=m_hi)
        .filter(|&m| restriction.admits_m(table, m))
        .collect();

    let (a_lo, a_hi) = (block.n.lo + 1, n_hi);
    let (b_lo, b_hi) = (block.m.lo + 1, m_hi);
    if exact {
        let av = a.integral_range(a_lo, a_hi).expect("integral sequence");
        let bv = b.integral_range(b_lo, b_hi).expect("integral sequence");
        let a = ns.iter().map(|&n| av[(n - a_lo) as usize]).collect();
        let (ms, b): (Vec<u64>, Vec<i8>) = ms_all
            .iter()
            .map(|&m| (m, bv[(m - b_lo) as usize]))
            .filter(|&(_, v)| v != 0)
            .unzip();
        Prepared {
            ns,
            a: Coeffs::Int(a),
            ms_all,
            ms,
            b: Coeffs::Int(b),
        }
    } else {
        let av = a.complex_range(a_lo, a_hi);
        let bv = b.complex_range(b_lo, b_hi);
        let a = ns.iter().map(|&n| av[(n - a_lo) as usize]).collect();
        let (ms, b): (Vec<u64>, Vec<Complex64>) = ms_all
            .iter()
            .map(|&m| (m, bv[(m - b_lo) as usize]))
            .filter(|&(_, v)| v != Complex64::new(0.0, 0.0))
            .unzip();
        Prepared {
            ns,
            a: Coeffs::Cplx(a),
            ms_all,
            ms,
            b: Coeffs::Cplx(b),
        }
    }
}

/// Sum over an arbitrary block (rectangle, optionally clipped by `nm ≤ cap`).
pub fn rect_sum(
    block: &Block,
    restriction: Restriction,
    a: &BoundedSequence,
    b: &BoundedSequence,
    weight: &TermWeight,
    table: &SieveTable,
) -> Result<SumResult> {
    weight.validate()?;
    if block.is_empty() {
        return Ok(SumResult::zero_exact());
    }
    block.check_table(table)?;
    let exact = weight.is_trivial() && a.is_integral() && b.is_integral();
    let prep = prepare(block, restriction, a, b, exact, table);

    let chunks: Vec<(usize, usize)> = (0..prep.ns.len())
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(prep.ns.len())))
        .collect();

    let partials = par::map_ordered(&chunks, |&(s, e)| chunk_sum(&prep, block, weight, s, e));

    let mut terms = 0u64;
    let mut escalated = false;
    let mut exact_acc: Option<i128> = exact.then_some(0);
    let mut float_acc = Compensated::default();
    for (p, t) in partials {
        terms += t;
        match p {
            Partial::Exact(v) => match exact_acc.and_then(|acc| acc.checked_add(v)) {
                Some(next) => exact_acc = Some(next),
                None => {
                    if let Some(acc) = exact_acc.take() {
                        float_acc.add(Complex64::new(acc as f64, 0.0));
                        escalated = true;
                    }
                    float_acc.add(Complex64::new(v as f64, 0.0));
                }
            },
            Partial::Float(z) => float_acc.add(z),
        }
    }
    let value = match exact_acc {
        Some(re) => SumValue::Exact { re, im: 0 },
        None => SumValue::Floating(float_acc.value()),
    };
    Ok(SumResult {
        value,
        terms,
        escalated,
    })
}

fn chunk_sum(p: &Prepared, block: &Block, w: &TermWeight, s: usize, e: usize) -> (Partial, u64) {
    let mut terms = 0u64;
    match (&p.a, &p.b) {
        (Coeffs::Int(a), Coeffs::Int(b)) => {
            let mut acc: i128 = 0;
            for i in s..e {
                let n = p.ns[i];
                let mu = block.m_upper(n);
                terms += p.ms_all.partition_point(|&m| m <= mu) as u64;
                let an = a[i];
                if an == 0 {
                    continue;
                }
                let mut inner: i64 = 0;
                for (&m, &bm) in p.ms.iter().zip(b) {
                    if m > mu {
                        break;
                    }
                    inner += (bm * jacobi_unchecked(n, m)) as i64;
                }
                acc += an as i128 * inner as i128;
            }
            (Partial::Exact(acc), terms)
        }
        (Coeffs::Cplx(a), Coeffs::Cplx(b)) => {
            let mut acc = Compensated::default();
            for i in s..e {
                let n = p.ns[i];
                let mu = block.m_upper(n);
                terms += p.ms_all.partition_point(|&m| m <= mu) as u64;
                let an = a[i];
                if an == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (&m, &bm) in p.ms.iter().zip(b) {
                    if m > mu {
                        break;
                    }
                    let chi = jacobi_unchecked(n, m);
                    if chi != 0 {
                        acc.add(an * bm * w.eval(n, m) * chi as f64);
                    }
                }
            }
            (Partial::Float(acc.value()), terms)
        }
        _ => unreachable!("coefficient kinds are prepared together"),
    }
}

/// `Σ (nm)^c a_n b_m (n/m)` over a hyperbolic region.
pub fn hyperbolic_sum(
    region: &HyperbolicRegion,
    a: &BoundedSequence,
    b: &BoundedSequence,
    c: f64,
    table: &SieveTable,
) -> Result<SumResult> {
    rect_sum(
        &region.block(),
        region.restriction,
        a,
        b,
        &TermWeight::power(c),
        table,
    )
}

/// The four piece sums of a splitting and their signed recombination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSums {
    pub pieces: [SumResult; 4],
}

impl SplitSums {
    /// `P₁ + P₂ + P₃ − P₄`
    pub fn recombined(&self) -> SumResult {
        let [p1, p2, p3, p4] = self.pieces;
        p1 + p2 + p3 - p4
    }
}

pub fn splitting_sums(
    split: &Splitting,
    restriction: Restriction,
    a: &BoundedSequence,
    b: &BoundedSequence,
    c: f64,
    table: &SieveTable,
) -> Result<SplitSums> {
    let w = TermWeight::power(c);
    let mut pieces = [SumResult::zero_exact(); 4];
    for (dst, block) in pieces.iter_mut().zip(&split.pieces) {
        *dst = rect_sum(block, restriction, a, b, &w, table)?;
    }
    Ok(SplitSums { pieces })
}

/// Sums over the three parts of an [`EqualWidthCover`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverSums {
    /// `Σ_k Σ_{I_k × J_k}`
    pub rectangles: SumResult,
    /// `Σ_k Σ_{L_k}`
    pub slivers: SumResult,
    /// `Σ_L`
    pub leftover: SumResult,
}

impl CoverSums {
    pub fn total(&self) -> SumResult {
        self.rectangles + self.slivers + self.leftover
    }
}

pub fn cover_recomposition_sum(
    cover: &EqualWidthCover,
    restriction: Restriction,
    a: &BoundedSequence,
    b: &BoundedSequence,
    c: f64,
    table: &SieveTable,
) -> Result<CoverSums> {
    cover.region_block().check_table(table)?;
    let w = TermWeight::power(c);
    let mut rectangles = SumResult::zero_exact();
    let mut slivers = SumResult::zero_exact();
    for strip in &cover.strips {
        rectangles =
            rectangles + rect_sum(&cover.rectangle_block(strip), restriction, a, b, &w, table)?;
        slivers = slivers + rect_sum(&cover.sliver_block(strip), restriction, a, b, &w, table)?;
    }
    let mut leftover = SumResult::zero_exact();
    for block in cover.leftover_blocks() {
        leftover = leftover + rect_sum(&block, restriction, a, b, &w, table)?;
    }
    Ok(CoverSums {
        rectangles,
        slivers,
        leftover,
    })
}

/// Direct sum over the region the cover decomposes.
pub fn cover_direct_sum(
    cover: &EqualWidthCover,
    restriction: Restriction,
    a: &BoundedSequence,
    b: &BoundedSequence,
    c: f64,
    table: &SieveTable,
) -> Result<SumResult> {
    rect_sum(
        &cover.region_block(),
        restriction,
        a,
        b,
        &TermWeight::power(c),
        table,
    )
}

/// `N₁ + N₂ − N₃` for `Σ_{odd nm ≤ T} (n/m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperbolaSums {
    /// odd `n ≤ √T`, odd `m ≤ T/n`
    pub n1: SumResult,
    /// odd `m ≤ √T`, odd `n ≤ T/m`
    pub n2: SumResult,
    /// odd `n, m ≤ √T`
    pub n3: SumResult,
    pub total: SumResult,
}

pub fn hyperbola_method_sum(t: f64, table: &SieveTable) -> Result<HyperbolaSums> {
    if !(t >= 1.0) {
        return Err(Error::invalid("hyperbola_method_sum: T must be ≥ 1"));
    }
    let tf = t.floor() as u64;
    let root = isqrt(tf);
    let one = BoundedSequence::ConstantOne;
    let w = TermWeight::default();
    let small = Interval::new(0, root);
    let all = Interval::new(0, tf);
    let n1 = rect_sum(
        &Block::hyperbolic(small, all, tf),
        Restriction::Odd,
        &one,
        &one,
        &w,
        table,
    )?;
    let n2 = rect_sum(
        &Block::hyperbolic(all, small, tf),
        Restriction::Odd,
        &one,
        &one,
        &w,
        table,
    )?;
    let n3 = rect_sum(
        &Block::rect(small, small),
        Restriction::Odd,
        &one,
        &one,
        &w,
        table,
    )?;
    let total = n1 + n2 - n3;
    Ok(HyperbolaSums { n1, n2, n3, total })
}

/// Direct `Σ_{odd n, m; nm ≤ T} (n/m)`, no splitting.
pub fn full_odd_sum(t: f64, table: &SieveTable) -> Result<SumResult> {
    let region = HyperbolicRegion::new(t, 0.0, Restriction::Odd)?;
    let one = BoundedSequence::ConstantOne;
    hyperbolic_sum(&region, &one, &one, 0.0, table)
}

/// `(T/2) Σ_{odd k ≤ T^{1/4}} φ(k²)/k⁴`, using `φ(k²) = k φ(k)`.
pub fn square_n_main_term(t: f64, table: &SieveTable) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::invalid("square_n_main_term: T must be ≥ 1"));
    }
    let k_max = iroot(t.floor() as u64, 4);
    let mut bracket = 0.0;
    for k in (1..=k_max).step_by(2) {
        let phi_k2 = k as f64 * table.phi(k)? as f64;
        bracket += phi_k2 / (k as f64).powi(4);
    }
    Ok(t / 2.0 * bracket)
}
