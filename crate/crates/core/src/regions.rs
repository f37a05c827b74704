//! Hyperbolic summation regions and their decompositions.
//!
//! All intervals are half-open on the left, `(lo, hi]`, and every boundary is
//! reduced to an integer once so that membership is decided in exact integer
//! arithmetic. Real parameters only enter through `floor(T)`, `floor(z)` and
//! the integer boundaries derived from them here.

use serde::{Deserialize, Serialize};

use crate::arith::{iroot, isqrt};
use crate::sieve::SieveTable;
use crate::{Error, Result};

/// The integers in `(lo, hi]`. Constructors clamp `hi ≥ lo`, so an empty
/// interval is always `lo == hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    pub fn new(lo: u64, hi: u64) -> Self {
        Interval { lo, hi: hi.max(lo) }
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn len(&self) -> u64 {
        self.hi.saturating_sub(self.lo)
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        self.lo < x && x <= self.hi
    }
}

/// Which lattice points are summed. `m` is odd in every mode since the
/// Jacobi symbol needs an odd modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    /// Both variables odd and square-free (the starred sums).
    #[default]
    OddSquarefree,
    /// Both variables odd.
    Odd,
    /// Any `n`, odd `m`.
    All,
}

impl Restriction {
    #[inline]
    pub fn admits_n(self, table: &SieveTable, n: u64) -> bool {
        match self {
            Restriction::OddSquarefree => n & 1 == 1 && table.squarefree_unchecked(n),
            Restriction::Odd => n & 1 == 1,
            Restriction::All => true,
        }
    }

    #[inline]
    pub fn admits_m(self, table: &SieveTable, m: u64) -> bool {
        match self {
            Restriction::OddSquarefree => m & 1 == 1 && table.squarefree_unchecked(m),
            Restriction::Odd | Restriction::All => m & 1 == 1,
        }
    }
}

impl std::str::FromStr for Restriction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "odd_squarefree" | "odd-squarefree" => Ok(Restriction::OddSquarefree),
            "odd" => Ok(Restriction::Odd),
            "all" => Ok(Restriction::All),
            _ => Err(Error::invalid(format!("unknown restriction `{s}`"))),
        }
    }
}

/// A product of two intervals, optionally clipped by `nm ≤ cap`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub n: Interval,
    pub m: Interval,
    pub cap: Option<u64>,
}

impl Block {
    pub fn rect(n: Interval, m: Interval) -> Self {
        Block { n, m, cap: None }
    }

    pub fn hyperbolic(n: Interval, m: Interval, cap: u64) -> Self {
        Block {
            n,
            m,
            cap: Some(cap),
        }
    }

    /// Swap the roles of `n` and `m`.
    pub fn mirrored(&self) -> Self {
        Block {
            n: self.m,
            m: self.n,
            cap: self.cap,
        }
    }

    #[inline]
    pub fn contains(&self, n: u64, m: u64) -> bool {
        self.n.contains(n)
            && self.m.contains(m)
            && self
                .cap
                .map_or(true, |c| (n as u128) * (m as u128) <= c as u128)
    }

    /// Largest admissible `m` for a given `n` (may be `≤ m.lo`).
    #[inline]
    pub fn m_upper(&self, n: u64) -> u64 {
        match self.cap {
            Some(c) => self.m.hi.min(c / n.max(1)),
            None => self.m.hi,
        }
    }

    /// Largest `n` that has at least one point.
    pub fn effective_n_hi(&self) -> u64 {
        match self.cap {
            Some(c) => self.n.hi.min(c / (self.m.lo + 1)),
            None => self.n.hi,
        }
    }

    pub fn effective_m_hi(&self) -> u64 {
        match self.cap {
            Some(c) => self.m.hi.min(c / (self.n.lo + 1)),
            None => self.m.hi,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.effective_n_hi() <= self.n.lo || self.effective_m_hi() <= self.m.lo
    }

    /// Largest index a sieve table must cover to enumerate this block.
    pub fn max_index(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            self.effective_n_hi().max(self.effective_m_hi())
        }
    }

    pub(crate) fn check_table(&self, table: &SieveTable) -> Result<()> {
        let need = self.max_index();
        if need > table.range_end() {
            return Err(Error::invalid(format!(
                "sieve table covers [1, {}] but the region needs indices up to {need}",
                table.range_end()
            )));
        }
        Ok(())
    }

    /// Lattice points in `n`-major ascending order.
    pub fn points<'a>(
        &self,
        restriction: Restriction,
        table: &'a SieveTable,
    ) -> impl Iterator<Item = (u64, u64)> + 'a {
        let block = *self;
        let n_hi = if block.is_empty() {
            block.n.lo
        } else {
            block.effective_n_hi()
        };
        (block.n.lo + 1..=n_hi)
            .filter(move |&n| restriction.admits_n(table, n))
            .flat_map(move |n| {
                (block.m.lo + 1..=block.m_upper(n))
                    .filter(move |&m| restriction.admits_m(table, m))
                    .map(move |m| (n, m))
            })
    }
}

/// `{(n, m) : z < n, m ≤ T, nm ≤ T}` under a [`Restriction`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicRegion {
    pub t: f64,
    pub z: f64,
    pub restriction: Restriction,
}

impl HyperbolicRegion {
    /// `z = 0` is accepted for the full region out to the axes.
    pub fn new(t: f64, z: f64, restriction: Restriction) -> Result<Self> {
        if !(t >= 1.0) || !t.is_finite() {
            return Err(Error::invalid(format!("region: T = {t} must be ≥ 1")));
        }
        if !(z >= 0.0) || !z.is_finite() {
            return Err(Error::invalid(format!("region: z = {z} must be ≥ 0")));
        }
        Ok(HyperbolicRegion { t, z, restriction })
    }

    pub fn t_floor(&self) -> u64 {
        self.t.floor() as u64
    }

    pub fn z_floor(&self) -> u64 {
        self.z.floor() as u64
    }

    pub fn block(&self) -> Block {
        let (tf, zf) = (self.t_floor(), self.z_floor());
        Block::hyperbolic(Interval::new(zf, tf), Interval::new(zf, tf), tf)
    }
}

/// Lattice points of the region, `n`-major ascending.
pub fn enumerate_region<'a>(
    region: &HyperbolicRegion,
    table: &'a SieveTable,
) -> Result<impl Iterator<Item = (u64, u64)> + 'a> {
    let block = region.block();
    block.check_table(table)?;
    Ok(block.points(region.restriction, table))
}

/// Four pieces with `region = P₁ + P₂ + P₃ − P₄` as a signed identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Splitting {
    /// The real cut point (`z₁` or `T^{1/4}`).
    pub boundary: f64,
    /// `floor(boundary)`; `n ≤ boundary` iff `n ≤ boundary_floor`.
    pub boundary_floor: u64,
    pub pieces: [Block; 4],
}

impl Splitting {
    pub const SIGNS: [i32; 4] = [1, 1, 1, -1];

    pub fn signed_indicator(&self, n: u64, m: u64) -> i32 {
        self.pieces
            .iter()
            .zip(Self::SIGNS)
            .map(|(p, s)| if p.contains(n, m) { s } else { 0 })
            .sum()
    }
}

fn split_at(region: &HyperbolicRegion, boundary: f64, boundary_floor: u64) -> Splitting {
    let (tf, zf) = (region.t_floor(), region.z_floor());
    let b = boundary_floor.max(zf);
    let outer = Interval::new(b, tf);
    let inner = Interval::new(zf, b);
    let all = Interval::new(zf, tf);
    Splitting {
        boundary,
        boundary_floor: b,
        pieces: [
            Block::hyperbolic(outer, outer, tf),
            Block::hyperbolic(inner, all, tf),
            Block::hyperbolic(all, inner, tf),
            Block::hyperbolic(inner, inner, tf),
        ],
    }
}

fn require_t_two(region: &HyperbolicRegion) -> Result<()> {
    if region.t < 2.0 {
        return Err(Error::invalid("splitting needs T ≥ 2"));
    }
    Ok(())
}

/// `z₁ = max(z, T^{1/3} / ln T)`.
pub fn z1(t: f64, z: f64) -> f64 {
    z.max(t.cbrt() / t.ln())
}

/// Split at `z₁ = max(z, T^{1/3}/ln T)` into S₁ (both variables above `z₁`),
/// S₂ (`n ≤ z₁`), S₃ (`m ≤ z₁`) and S₄ (both `≤ z₁`).
pub fn split_s(region: &HyperbolicRegion) -> Result<Splitting> {
    require_t_two(region)?;
    let b = z1(region.t, region.z);
    Ok(split_at(region, b, b.floor() as u64))
}

/// As [`split_s`] with the cut at `T^{1/4}`.
pub fn split_r(region: &HyperbolicRegion) -> Result<Splitting> {
    require_t_two(region)?;
    let b = region.t.powf(0.25);
    Ok(split_at(region, b, iroot(region.t_floor(), 4)))
}

/// `(lo, 2lo], (2lo, 4lo], …` with the last interval clipped at `hi`.
pub fn dyadic_intervals(range: Interval) -> Result<Vec<Interval>> {
    if range.lo == 0 {
        return Err(Error::invalid("dyadic intervals need a lower bound ≥ 1"));
    }
    if range.is_empty() {
        return Err(Error::invalid("dyadic intervals need a nonempty range"));
    }
    let mut out = Vec::new();
    let mut lo = range.lo;
    while lo < range.hi {
        let hi = lo.saturating_mul(2).min(range.hi);
        out.push(Interval::new(lo, hi));
        lo = hi;
    }
    Ok(out)
}

/// Rectangles `(N, 2N] × (M, 2M]` tiling a product of ranges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DyadicCover {
    pub rectangles: Vec<Block>,
}

pub fn dyadic_cover(n_range: Interval, m_range: Interval) -> Result<DyadicCover> {
    let ns = dyadic_intervals(n_range)?;
    let ms = dyadic_intervals(m_range)?;
    let rectangles = ns
        .iter()
        .flat_map(|&n| ms.iter().map(move |&m| Block::rect(n, m)))
        .collect();
    Ok(DyadicCover { rectangles })
}

impl DyadicCover {
    /// Clip every rectangle by `nm ≤ cap`, dropping those with no lattice point.
    pub fn clip_hyperbolic(self, cap: u64) -> Self {
        let rectangles = self
            .rectangles
            .into_iter()
            .map(|r| Block {
                cap: Some(cap),
                ..r
            })
            .filter(|r| !r.is_empty())
            .collect();
        DyadicCover { rectangles }
    }

    pub fn len(&self) -> usize {
        self.rectangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rectangles.is_empty()
    }
}

/// One strip `k ∈ H` of the equal-width cover: `I_k × J_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub k: u64,
    /// `I_k = (k√z, (k+1)√z]`
    pub n: Interval,
    /// `J_k = (z, T/((k+1)√z)]`
    pub m: Interval,
}

/// Equal-width cover of `{z < n ≤ T^δ, z < m, nm ≤ T}`:
/// rectangles `I_k × J_k`, the slivers `L_k` above them up to the
/// hyperbola, and the leftover columns `L` over `n ∈ L′`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualWidthCover {
    pub t: f64,
    pub z: f64,
    pub delta: f64,
    pub t_floor: u64,
    pub z_floor: u64,
    /// `floor(T^δ)`
    pub n_max: u64,
    pub strips: Vec<Strip>,
    /// `L′`, at most two intervals of `n`.
    pub leftover: Vec<Interval>,
}

/// Which part of an [`EqualWidthCover`] a lattice point lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverPart {
    Rectangle(u64),
    Sliver(u64),
    Leftover,
}

/// `floor(t^delta)` using an exact integer root when `1/delta` is an integer.
fn floor_power(t: f64, delta: f64) -> u64 {
    let inv = 1.0 / delta;
    if (inv - inv.round()).abs() < 1e-12 && inv.round() <= 64.0 {
        iroot(t.floor() as u64, inv.round() as u32)
    } else {
        t.powf(delta).floor() as u64
    }
}

/// `floor(k² z)`, then the integer square root: `floor(k √z)`.
fn floor_k_sqrt_z(k: u64, z: f64) -> u64 {
    isqrt(((k * k) as f64 * z).floor() as u64)
}

/// Largest integer `m` with `m · k1 · √z ≤ t`, i.e. `m² k1² z ≤ t²`.
fn floor_t_over(t: f64, k1: u64, z: f64) -> u64 {
    let k1 = k1 as f64;
    let le = |m: f64| m * m * k1 * k1 * z <= t * t;
    let mut m = (t / (k1 * z.sqrt())).floor();
    while m > 0.0 && !le(m) {
        m -= 1.0;
    }
    while le(m + 1.0) {
        m += 1.0;
    }
    m as u64
}

impl EqualWidthCover {
    /// Requires `0 < δ ≤ 1/2` and `2 ≤ z < T^δ`.
    pub fn new(t: f64, z: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::invalid(format!(
                "cover: δ = {delta} outside (0, 1/2]"
            )));
        }
        if !(t >= 2.0) || !t.is_finite() {
            return Err(Error::invalid(format!("cover: T = {t} must be ≥ 2")));
        }
        if !(z >= 2.0) {
            return Err(Error::invalid(format!("cover: z = {z} must be ≥ 2")));
        }
        if !(z < t.powf(delta)) {
            return Err(Error::invalid(format!(
                "cover: z = {z} must be below T^δ = {}",
                t.powf(delta)
            )));
        }
        let t_floor = t.floor() as u64;
        let z_floor = z.floor() as u64;
        let n_max = floor_power(t, delta);
        let sqrt_z = z.sqrt();

        // k ∈ H  iff  k² ≥ z  and  (k+1)√z ≤ T^δ
        let mut k_min = sqrt_z.ceil() as u64;
        while k_min > 1 && ((k_min - 1) * (k_min - 1)) as f64 >= z {
            k_min -= 1;
        }
        while ((k_min * k_min) as f64) < z {
            k_min += 1;
        }
        let q = 1.0 / (2.0 * delta);
        let in_h = |k: u64| -> bool {
            let k1 = (k + 1) as f64;
            if (q - q.round()).abs() < 1e-12 {
                (k1 * k1 * z).powi(q.round() as i32) <= t
            } else {
                k1 * sqrt_z <= t.powf(delta)
            }
        };

        let mut strips = Vec::new();
        let mut k = k_min;
        while in_h(k) {
            let n = Interval::new(floor_k_sqrt_z(k, z), floor_k_sqrt_z(k + 1, z));
            let j_hi = floor_t_over(t, k + 1, z).min(t_floor / n.hi.max(1));
            strips.push(Strip {
                k,
                n,
                m: Interval::new(z_floor, j_hi),
            });
            k += 1;
        }

        let leftover: Vec<Interval> = match (strips.first(), strips.last()) {
            (Some(first), Some(last)) => vec![
                Interval::new(z_floor, first.n.lo),
                Interval::new(last.n.hi, n_max),
            ],
            _ => vec![Interval::new(z_floor, n_max)],
        }
        .into_iter()
        .filter(|i| !i.is_empty())
        .collect();

        Ok(EqualWidthCover {
            t,
            z,
            delta,
            t_floor,
            z_floor,
            n_max,
            strips,
            leftover,
        })
    }

    /// `H` as a list of `k`.
    pub fn h(&self) -> Vec<u64> {
        self.strips.iter().map(|s| s.k).collect()
    }

    /// The covered region `{z < n ≤ T^δ, z < m ≤ T/n}`.
    pub fn region_block(&self) -> Block {
        Block::hyperbolic(
            Interval::new(self.z_floor, self.n_max),
            Interval::new(self.z_floor, self.t_floor),
            self.t_floor,
        )
    }

    pub fn rectangle_block(&self, strip: &Strip) -> Block {
        Block::rect(strip.n, strip.m)
    }

    /// `L_k = {n ∈ I_k, T/((k+1)√z) < m ≤ T/n}`.
    pub fn sliver_block(&self, strip: &Strip) -> Block {
        Block::hyperbolic(
            strip.n,
            Interval::new(strip.m.hi, self.t_floor),
            self.t_floor,
        )
    }

    /// `L = {n ∈ L′, z < m ≤ T/n}`, one block per interval of `L′`.
    pub fn leftover_blocks(&self) -> Vec<Block> {
        self.leftover
            .iter()
            .map(|&n| Block::hyperbolic(n, Interval::new(self.z_floor, self.t_floor), self.t_floor))
            .collect()
    }

    /// `J′_k = (T/((k+1)√z), T/(k√z)]`, the `m`-range of the box around `L_k`.
    pub fn j_prime(&self, strip: &Strip) -> Interval {
        Interval::new(
            floor_t_over(self.t, strip.k + 1, self.z),
            floor_t_over(self.t, strip.k, self.z),
        )
    }

    pub fn classify(&self, n: u64, m: u64) -> Option<CoverPart> {
        if !self.region_block().contains(n, m) {
            return None;
        }
        if self.leftover.iter().any(|i| i.contains(n)) {
            return Some(CoverPart::Leftover);
        }
        let strip = self.strips.iter().find(|s| s.n.contains(n))?;
        if strip.m.contains(m) {
            Some(CoverPart::Rectangle(strip.k))
        } else {
            Some(CoverPart::Sliver(strip.k))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cover serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::build_sieve;

    fn brute(t: u64, z: u64, r: Restriction, table: &SieveTable) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for n in 1..=t {
            for m in 1..=t {
                if n > z && m > z && n * m <= t && r.admits_n(table, n) && r.admits_m(table, m) {
                    out.push((n, m));
                }
            }
        }
        out
    }

    #[test]
    fn small_regions() {
        let table = build_sieve(100, 64).unwrap();
        let r = HyperbolicRegion::new(10.0, 2.0, Restriction::OddSquarefree).unwrap();
        assert_eq!(
            enumerate_region(&r, &table).unwrap().collect::<Vec<_>>(),
            [(3, 3)]
        );

        let r = HyperbolicRegion::new(10.0, 4.0, Restriction::All).unwrap();
        assert_eq!(enumerate_region(&r, &table).unwrap().count(), 0);

        let r = HyperbolicRegion::new(16.0, 2.0, Restriction::OddSquarefree).unwrap();
        assert_eq!(
            enumerate_region(&r, &table).unwrap().collect::<Vec<_>>(),
            [(3, 3), (3, 5), (5, 3)]
        );
        assert_eq!(
            brute(16, 2, Restriction::OddSquarefree, &table),
            [(3, 3), (3, 5), (5, 3)]
        );
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let table = build_sieve(2000, 128).unwrap();
        for r in [
            Restriction::OddSquarefree,
            Restriction::Odd,
            Restriction::All,
        ] {
            for (t, z) in [(2000.0, 0.0), (1999.5, 3.5), (1000.0, 10.0), (500.0, 22.0)] {
                let reg = HyperbolicRegion::new(t, z, r).unwrap();
                let got: Vec<_> = enumerate_region(&reg, &table).unwrap().collect();
                assert_eq!(
                    got,
                    brute(t as u64, z as u64, r, &table),
                    "{r:?} T={t} z={z}"
                );
            }
        }
    }

    #[test]
    fn odd_count_double_loop() {
        let table = build_sieve(5000, 128).unwrap();
        let reg = HyperbolicRegion::new(5000.0, 0.0, Restriction::Odd).unwrap();
        let got = enumerate_region(&reg, &table).unwrap().count() as u64;
        let direct: u64 = (1..=5000u64)
            .step_by(2)
            .map(|n| (5000 / n).div_ceil(2))
            .sum();
        assert_eq!(got, direct);
    }

    #[test]
    fn table_too_small() {
        let table = build_sieve(50, 64).unwrap();
        // needs n up to 1000/3
        let reg = HyperbolicRegion::new(1000.0, 2.0, Restriction::OddSquarefree).unwrap();
        assert!(enumerate_region(&reg, &table).is_err());
        assert!(HyperbolicRegion::new(0.5, 2.0, Restriction::Odd).is_err());
        assert!(HyperbolicRegion::new(10.0, -1.0, Restriction::Odd).is_err());
    }

    fn check_signed_identity(split: &Splitting, reg: &HyperbolicRegion) {
        let block = reg.block();
        let tf = reg.t_floor();
        for n in 1..=tf {
            for m in 1..=tf / n {
                let want = block.contains(n, m) as i32;
                assert_eq!(split.signed_indicator(n, m), want, "({n}, {m})");
            }
        }
    }

    #[test]
    fn split_s_identity() {
        let reg = HyperbolicRegion::new(1e4, 2.0, Restriction::All).unwrap();
        let s = split_s(&reg).unwrap();
        assert!(s.boundary > 2.0);
        check_signed_identity(&s, &reg);
    }

    #[test]
    fn split_s_large_z_collapses() {
        // z above T^{1/3}/ln T: only S₁ survives
        let reg = HyperbolicRegion::new(1e4, 5.0, Restriction::All).unwrap();
        assert!(5.0 > 1e4f64.cbrt() / 1e4f64.ln());
        let s = split_s(&reg).unwrap();
        for p in &s.pieces[1..] {
            assert!(p.is_empty());
        }
        assert_eq!(s.pieces[0], reg.block());

        let reg = HyperbolicRegion::new(100.0, 10.0, Restriction::All).unwrap();
        let s = split_s(&reg).unwrap();
        assert!(s.pieces[0].is_empty());
    }

    #[test]
    fn split_r_identity() {
        let reg = HyperbolicRegion::new(1e4, 2.0, Restriction::All).unwrap();
        let s = split_r(&reg).unwrap();
        assert_eq!(s.boundary_floor, 10);
        check_signed_identity(&s, &reg);

        let reg = HyperbolicRegion::new(1e4, 10.0, Restriction::All).unwrap();
        let s = split_r(&reg).unwrap();
        assert!(s.pieces[1..].iter().all(Block::is_empty));

        // T = 16: T^{1/4} = 2 = z, so R₄ = (2, 2] × (2, 2]
        let reg = HyperbolicRegion::new(16.0, 2.0, Restriction::All).unwrap();
        let s = split_r(&reg).unwrap();
        assert!(s.pieces[3].is_empty());
        check_signed_identity(&s, &reg);
    }

    #[test]
    fn dyadic_intervals_clip() {
        assert_eq!(
            dyadic_intervals(Interval::new(2, 8)).unwrap(),
            [Interval::new(2, 4), Interval::new(4, 8)]
        );
        assert_eq!(
            dyadic_intervals(Interval::new(2, 10)).unwrap(),
            [
                Interval::new(2, 4),
                Interval::new(4, 8),
                Interval::new(8, 10)
            ]
        );
        assert!(dyadic_intervals(Interval::new(0, 10)).is_err());
        assert!(dyadic_intervals(Interval::new(5, 5)).is_err());
    }

    #[test]
    fn dyadic_cover_count_and_tiling() {
        let r = Interval::new(10, 1_000_000);
        let cover = dyadic_cover(r, r).unwrap();
        let bound = (100_000f64).log2().ceil() as usize;
        assert!(cover.len() <= bound * bound);

        let n = Interval::new(3, 200);
        let m = Interval::new(7, 150);
        let cover = dyadic_cover(n, m).unwrap();
        for a in n.lo + 1..=n.hi {
            for b in m.lo + 1..=m.hi {
                let hits = cover.rectangles.iter().filter(|r| r.contains(a, b)).count();
                assert_eq!(hits, 1);
            }
        }
        let clipped = cover.clip_hyperbolic(2000);
        for a in n.lo + 1..=n.hi {
            for b in m.lo + 1..=m.hi {
                let hits = clipped
                    .rectangles
                    .iter()
                    .filter(|r| r.contains(a, b))
                    .count();
                assert_eq!(hits, (a * b <= 2000) as usize);
            }
        }
    }

    #[test]
    fn equal_width_cover_example() {
        let c = EqualWidthCover::new(1e4, 9.0, 0.5).unwrap();
        assert_eq!(c.h(), (3..=32).collect::<Vec<_>>());
        for s in &c.strips {
            assert_eq!(s.n, Interval::new(3 * s.k, 3 * s.k + 3));
            assert_eq!(s.m.hi, 10_000 / (3 * (s.k + 1)));
        }
        assert_eq!(c.n_max, 100);
        assert_eq!(c.leftover, [Interval::new(99, 100)]);
    }

    #[test]
    fn equal_width_cover_errors() {
        assert!(EqualWidthCover::new(1e4, 100.0, 0.5).is_err());
        assert!(EqualWidthCover::new(1e4, 9.0, 0.6).is_err());
        assert!(EqualWidthCover::new(1e4, 9.0, 0.0).is_err());
        assert!(EqualWidthCover::new(1e4, 1.0, 0.5).is_err());
    }

    #[test]
    fn equal_width_cover_partitions() {
        for t in [1e3, 1e4, 12_345.6] {
            for z in [4.0, 9.0, 25.0, 7.3] {
                for delta in [0.25, 0.5, 0.4] {
                    let Ok(c) = EqualWidthCover::new(t, z, delta) else {
                        assert!(z >= f64::powf(t, delta));
                        continue;
                    };
                    let region = c.region_block();
                    for n in 1..=c.t_floor {
                        for m in 1..=c.t_floor / n {
                            let rect = c
                                .strips
                                .iter()
                                .filter(|s| c.rectangle_block(s).contains(n, m))
                                .count();
                            let sliver = c
                                .strips
                                .iter()
                                .filter(|s| c.sliver_block(s).contains(n, m))
                                .count();
                            let left = c
                                .leftover_blocks()
                                .iter()
                                .filter(|b| b.contains(n, m))
                                .count();
                            let want = region.contains(n, m) as usize;
                            assert_eq!(
                                rect + sliver + left,
                                want,
                                "T={t} z={z} δ={delta} ({n},{m})"
                            );
                            assert_eq!(c.classify(n, m).is_some(), want == 1);
                        }
                    }
                    // L′ sits at the two ends of (z, T^δ]
                    let sz = z.sqrt();
                    let td = t.powf(delta);
                    for i in &c.leftover {
                        for n in i.lo + 1..=i.hi {
                            let nf = n as f64;
                            assert!((nf > z && nf <= z + sz) || (nf > td - sz && nf <= td));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sliver_boxes() {
        let c = EqualWidthCover::new(1e4, 9.0, 0.5).unwrap();
        let mut total = 0u64;
        for s in &c.strips {
            let jp = c.j_prime(s);
            assert_eq!(jp.lo, s.m.hi);
            // every sliver point sits in I_k × J′_k
            let sliver = c.sliver_block(s);
            for n in s.n.lo + 1..=s.n.hi {
                for m in sliver.m.lo + 1..=sliver.m_upper(n) {
                    assert!(jp.contains(m));
                }
            }
            let k = s.k as f64;
            // exact when √z is an integer
            assert!((s.n.len() * jp.len()) as f64 <= 1e4 / (k * (k + 1.0)) + s.n.len() as f64);
            total += s.n.len() * jp.len();
        }
        // telescoping: Σ_k T/(k(k+1)) ≤ T/⌈√z⌉ (plus lattice rounding)
        assert!(total as f64 <= 1e4 / 3.0 + 3.0 * c.strips.len() as f64);
    }

    #[test]
    fn cover_json() {
        let c = EqualWidthCover::new(1e3, 4.0, 0.5).unwrap();
        let v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(v["strips"][0]["k"], 2);
        assert_eq!(v["strips"][0]["n"]["lo"], 4);
        let back: EqualWidthCover = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
