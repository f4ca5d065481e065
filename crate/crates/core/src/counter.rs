//! Counting non-negative integer solutions of `Σ λᵢ·nᵢ ≤ T`.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::json;

use crate::caps::Caps;
use crate::eqgraph::{require_cover, EquivalentGraph, GraphEdge};
use crate::error::{Error, Result};
use crate::export::{big_str, ln_big, num17};
use crate::scalar::Scalar;
use crate::spectra::Pair;
use crate::sums::{enumerate_sums, Generator, Role, SumsConfig, SumsError};
use crate::surd::{floor_sqrt, sign_of_sum, sqrt_is_integer, Radical};

/// Which spectrum families are concatenated into a part list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Families {
    /// Loops at `A`, loops at `B` and connecting lengths, each as its own part.
    All,
    /// Loop times shared by both vertices counted once, plus connecting lengths.
    Merged,
}

impl Families {
    pub fn as_str(self) -> &'static str {
        match self {
            Families::All => "all",
            Families::Merged => "merged",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub value: f64,
    /// Exact square of the part; parts without one are taken as their binary value.
    pub square: Option<BigRational>,
    pub family: Option<Pair>,
}

impl Part {
    pub fn float(value: f64) -> Part {
        Part {
            value,
            square: None,
            family: None,
        }
    }

    pub fn from_scalar(s: &Scalar) -> Part {
        Part {
            value: s.value(),
            square: s.square().cloned(),
            family: None,
        }
    }

    fn from_edge(e: &GraphEdge) -> Part {
        Part {
            value: e.time,
            square: e.sq_time.clone(),
            family: Some(e.pair),
        }
    }

    /// `coef·√radicand` form; float parts are exact binary rationals.
    fn radical(&self) -> Radical {
        match &self.square {
            Some(sq) => Radical::sqrt_of(sq),
            None => Radical::from_rational(BigRational::from_float(self.value).expect("finite part")),
        }
    }

    fn exact_square(&self) -> BigRational {
        match &self.square {
            Some(sq) => sq.clone(),
            None => {
                let r = BigRational::from_float(self.value).expect("finite part");
                &r * &r
            }
        }
    }

    fn le(&self, t: f64) -> bool {
        match &self.square {
            Some(sq) => t >= 0.0 && *sq <= square_of(t),
            None => self.value <= t,
        }
    }
}

fn square_of(t: f64) -> BigRational {
    let r = BigRational::from_float(t).expect("finite value");
    &r * &r
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartList {
    parts: Vec<Part>,
    source: String,
}

impl PartList {
    pub fn new(mut parts: Vec<Part>, source: impl Into<String>) -> Result<Self> {
        for p in &parts {
            if !(p.value > 0.0) || !p.value.is_finite() {
                return Err(Error::Domain(format!("parts must be positive and finite, got {}", p.value)));
            }
        }
        parts.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.family.cmp(&b.family)));
        Ok(PartList {
            parts,
            source: source.into(),
        })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        PartList::new(values.iter().map(|v| Part::float(*v)).collect(), "values")
    }

    pub fn from_scalars(values: &[Scalar]) -> Result<Self> {
        PartList::new(values.iter().map(Part::from_scalar).collect(), "values")
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn values(&self) -> Vec<f64> {
        self.parts.iter().map(|p| p.value).collect()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Parts whose value does not exceed `t`.
    pub fn truncated(&self, t: f64) -> PartList {
        PartList {
            parts: self.parts.iter().filter(|p| p.le(t)).cloned().collect(),
            source: self.source.clone(),
        }
    }

    fn all_rational(&self) -> Option<Vec<BigRational>> {
        self.parts
            .iter()
            .map(|p| {
                let r = p.radical();
                r.radicand.is_one().then_some(r.coef)
            })
            .collect()
    }
}

pub fn truncate_parts(graph: &EquivalentGraph, t: f64, families: Families) -> Result<PartList> {
    require_cover(graph, t)?;
    let edges: Vec<&GraphEdge> = match families {
        Families::All => graph.loops_a().iter().chain(graph.loops_b()).chain(graph.cross()).collect(),
        Families::Merged => {
            let split = graph.loop_split();
            let mut v = split.shared;
            v.extend(split.a_only);
            v.extend(split.b_only);
            v.extend(graph.cross());
            v
        }
    };
    let parts = edges.into_iter().map(Part::from_edge).filter(|p| p.le(t)).collect();
    PartList::new(parts, format!("{}:{}", graph.spec().name(), families.as_str()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum CountKind {
    Exact { count: BigUint },
    Bounds { lower: BigUint, upper: BigUint, delta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountResult {
    pub t: f64,
    pub kind: CountKind,
}

impl CountResult {
    pub fn exact(t: f64, count: BigUint) -> Self {
        CountResult {
            t,
            kind: CountKind::Exact { count },
        }
    }

    pub fn lower(&self) -> &BigUint {
        match &self.kind {
            CountKind::Exact { count } => count,
            CountKind::Bounds { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> &BigUint {
        match &self.kind {
            CountKind::Exact { count } => count,
            CountKind::Bounds { upper, .. } => upper,
        }
    }

    pub fn ln_lower(&self) -> f64 {
        ln_big(self.lower())
    }

    pub fn ln_upper(&self) -> f64 {
        ln_big(self.upper())
    }

    /// Relative gap of the log bounds.
    pub fn gap(&self) -> f64 {
        log_gap(self.lower(), self.upper())
    }

    pub fn to_json(&self) -> serde_json::Value {
        match &self.kind {
            CountKind::Exact { count } => json!({
                "T": num17(self.t),
                "kind": "exact",
                "count": big_str(count),
                "ln_count": num17(ln_big(count)),
                "delta": null,
            }),
            CountKind::Bounds { lower, upper, delta } => json!({
                "T": num17(self.t),
                "kind": "bounds",
                "lower": big_str(lower),
                "upper": big_str(upper),
                "ln_lower": num17(ln_big(lower)),
                "ln_upper": num17(ln_big(upper)),
                "delta": num17(*delta),
            }),
        }
    }
}

fn log_gap(lower: &BigUint, upper: &BigUint) -> f64 {
    if lower == upper {
        return 0.0;
    }
    let ll = ln_big(lower);
    if ll == 0.0 {
        return f64::INFINITY;
    }
    (ln_big(upper) - ll) / ll
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("T must be finite and non-negative, got {t}")));
    }
    Ok(())
}

const PROBE_CELLS: usize = 2048;

/// Rough solution count from a coarse grid with parts rounded to the nearest cell.
pub fn estimate_count(parts: &PartList, t: f64) -> f64 {
    if t <= 0.0 || parts.is_empty() {
        return 1.0;
    }
    let h = t / PROBE_CELLS as f64;
    let mut row = vec![0f64; PROBE_CELLS + 1];
    row[0] = 1.0;
    for p in parts.parts.iter().filter(|p| p.value <= t) {
        let w = ((p.value / h).round() as usize).max(1);
        for s in w..=PROBE_CELLS {
            row[s] += row[s - w];
        }
    }
    row.iter().sum()
}

pub fn count_exact(parts: &PartList, t: f64) -> Result<CountResult> {
    count_exact_with(parts, t, &Caps::default())
}

pub fn count_exact_with(parts: &PartList, t: f64, caps: &Caps) -> Result<CountResult> {
    check_horizon(t)?;
    let parts = parts.truncated(t);
    let estimate = estimate_count(&parts, t);
    if estimate > caps.exact_count as f64 {
        return Err(Error::CountCap {
            estimate,
            cap: caps.exact_count,
        });
    }
    let count = match parts.all_rational().and_then(|values| count_rational(&values, t, caps)) {
        Some(c) => c,
        None => BigUint::from(SurdDfs::new(&parts, t, caps.refine_bits).count()),
    };
    Ok(CountResult::exact(t, count))
}

/// Rational parts: scale to integers and count on the integer budget.
/// `None` when the scaled budget leaves 64-bit range.
fn count_rational(values: &[BigRational], t: f64, caps: &Caps) -> Option<BigUint> {
    let scale = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let budget = (BigRational::from_float(t).expect("finite T") * BigRational::from_integer(scale.clone()))
        .floor()
        .to_integer();
    let weights: Vec<BigInt> = values.iter().map(|v| (v * BigRational::from_integer(scale.clone())).to_integer()).collect();
    if let (Some(b), Some(w)) = (budget.to_u64(), weights.iter().map(|w| w.to_u64()).collect::<Option<Vec<u64>>>()) {
        if (b as usize) < caps.grid.saturating_mul(8) {
            return Some(count_grid(&w, b));
        }
        let mut desc = w;
        desc.sort_unstable_by(|a, b| b.cmp(a));
        return Some(BigUint::from(count_integer_dfs(&desc, b)));
    }
    None
}

fn count_integer_dfs(desc: &[u64], budget: u64) -> u128 {
    match desc {
        [] => 1,
        [last] => (budget / last) as u128 + 1,
        [first, rest @ ..] => {
            let mut total = 0u128;
            let mut used = 0u64;
            loop {
                total += count_integer_dfs(rest, budget - used);
                match used.checked_add(*first) {
                    Some(u) if u <= budget => used = u,
                    _ => break,
                }
            }
            total
        }
    }
}

/// Tuples of a descending list of parts with exact decisions near the boundary.
struct SurdDfs {
    values: Vec<f64>,
    radicals: Vec<Radical>,
    counts: Vec<u64>,
    t: f64,
    t_exact: BigRational,
    guard: f64,
    bits: u32,
}

impl SurdDfs {
    fn new(parts: &PartList, t: f64, bits: u32) -> Self {
        let mut ps: Vec<&Part> = parts.parts.iter().collect();
        ps.sort_by(|a, b| b.value.total_cmp(&a.value));
        SurdDfs {
            values: ps.iter().map(|p| p.value).collect(),
            radicals: ps.iter().map(|p| p.radical()).collect(),
            counts: vec![0; ps.len()],
            t,
            t_exact: BigRational::from_float(t).expect("finite T"),
            guard: 1e-9 * t.max(1.0),
            bits,
        }
    }

    fn count(&mut self) -> u128 {
        if self.values.is_empty() {
            return 1;
        }
        self.go(0, 0.0)
    }

    /// Exact `Σ counts·parts ≤ T`; undecidable ties count as inside.
    fn fits(&self) -> bool {
        let mut by_radicand: Vec<(BigRational, BigUint)> = Vec::new();
        for (n, r) in self.counts.iter().zip(&self.radicals) {
            if *n == 0 {
                continue;
            }
            let c = &r.coef * BigRational::from_integer(BigInt::from(*n));
            match by_radicand.iter_mut().find(|(_, s)| *s == r.radicand) {
                Some((acc, _)) => *acc += c,
                None => by_radicand.push((c, r.radicand.clone())),
            }
        }
        sign_of_sum(&by_radicand, &-&self.t_exact, self.bits) != Some(Ordering::Greater)
    }

    fn admits(&mut self, level: usize, n: u64, acc: f64) -> bool {
        let s = acc + n as f64 * self.values[level];
        if s <= self.t - self.guard {
            return true;
        }
        if s > self.t + self.guard {
            return false;
        }
        self.counts[level] = n;
        let ok = self.fits();
        self.counts[level] = 0;
        ok
    }

    fn go(&mut self, level: usize, acc: f64) -> u128 {
        let p = self.values[level];
        if level + 1 == self.values.len() {
            let mut m = ((self.t - acc) / p).floor().max(0.0) as u64;
            while m > 0 && !self.admits(level, m, acc) {
                m -= 1;
            }
            while self.admits(level, m + 1, acc) {
                m += 1;
            }
            return m as u128 + 1;
        }
        let mut total = 0;
        let mut n = 0u64;
        loop {
            if n > 0 && !self.admits(level, n, acc) {
                break;
            }
            self.counts[level] = n;
            total += self.go(level + 1, acc + n as f64 * p);
            n += 1;
        }
        self.counts[level] = 0;
        total
    }
}

/// Number of tuples with `Σ wᵢ·nᵢ ≤ budget`, by an in-place unbounded DP row.
pub(crate) fn count_grid(weights: &[u64], budget: u64) -> BigUint {
    let len = budget as usize + 1;
    let usable: Vec<usize> = weights.iter().filter(|w| **w <= budget).map(|w| *w as usize).collect();
    let mut row = vec![0u128; len];
    row[0] = 1;
    let mut overflow = false;
    'parts: for &w in &usable {
        for s in w..len {
            match row[s].checked_add(row[s - w]) {
                Some(v) => row[s] = v,
                None => {
                    overflow = true;
                    break 'parts;
                }
            }
        }
    }
    if !overflow {
        if let Some(total) = row.iter().try_fold(0u128, |acc, v| acc.checked_add(*v)) {
            return BigUint::from(total);
        }
        return row.iter().map(|v| BigUint::from(*v)).sum();
    }
    let mut row = vec![BigUint::zero(); len];
    row[0] = BigUint::one();
    for &w in &usable {
        for s in w..len {
            let add = row[s - w].clone();
            row[s] += add;
        }
    }
    row.into_iter().sum()
}

/// Number of distinct values `Σ λᵢ·nᵢ ≤ T`, with the same merge policy as the birth schedule.
pub fn count_distinct_sums(parts: &PartList, t: f64, eta: f64) -> Result<u64> {
    count_distinct_sums_with(parts, t, eta, &Caps::default())
}

pub fn count_distinct_sums_with(parts: &PartList, t: f64, eta: f64, caps: &Caps) -> Result<u64> {
    check_horizon(t)?;
    let parts = parts.truncated(t);
    let gens: Vec<Generator> = parts
        .parts
        .iter()
        .map(|p| Generator {
            value: p.value,
            square: p.square.clone(),
            role: Role::Free,
        })
        .collect();
    let cfg = SumsConfig {
        budget: t,
        eta,
        frontier_cap: caps.frontier,
        level_cap: Some(caps.distinct),
        refine_bits: caps.refine_bits,
    };
    match enumerate_sums(&gens, &cfg) {
        Ok(out) => Ok(out.levels.len() as u64),
        Err(SumsError::Levels { cap }) => Err(Error::DistinctCap { cap }),
        Err(SumsError::Frontier { cap, .. }) => Err(Error::DistinctCap { cap }),
        Err(SumsError::Other(e)) => Err(e),
    }
}

/// Grid widths of a part: `(⌊λ/δ⌋, ⌈λ/δ⌉)`, decided exactly.
fn grid_widths(part: &Part, delta_sq: &BigRational) -> (BigUint, BigUint) {
    let r = part.exact_square() / delta_sq;
    let lo = floor_sqrt(&r);
    let hi = if sqrt_is_integer(&r) { lo.clone() } else { &lo + 1u32 };
    (lo, hi)
}

pub fn count_bounds_dp(parts: &PartList, t: f64, delta: f64) -> Result<CountResult> {
    count_bounds_dp_with(parts, t, delta, &Caps::default())
}

pub fn count_bounds_dp_with(parts: &PartList, t: f64, delta: f64, caps: &Caps) -> Result<CountResult> {
    check_horizon(t)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("grid step must be positive, got {delta}")));
    }
    let d = BigRational::from_float(delta).expect("finite delta");
    let cells = (BigRational::from_float(t).expect("finite T") / &d).floor().to_integer();
    let budget = match cells.to_u64() {
        Some(b) if (b as u128) < caps.grid as u128 => b,
        _ => {
            return Err(Error::GridCap {
                cells: t / delta,
                cap: caps.grid,
            })
        }
    };
    let parts = parts.truncated(t);
    let d_sq = &d * &d;
    let mut lower_w = Vec::with_capacity(parts.len());
    let mut fine = 1u64;
    for p in &parts.parts {
        let (lo, hi) = grid_widths(p, &d_sq);
        if lo.is_zero() {
            // ⌈δ/λ⌉ subdivisions make the part at least one cell wide.
            let r = &d_sq / p.exact_square();
            let m = if sqrt_is_integer(&r) { floor_sqrt(&r) } else { floor_sqrt(&r) + 1u32 };
            fine = fine.max(m.to_u64().unwrap_or(u64::MAX));
        }
        lower_w.push(hi.to_u64().unwrap_or(u64::MAX));
    }
    let lower = count_grid(&lower_w, budget);
    let upper = if fine == 1 {
        let upper_w: Vec<u64> = parts
            .parts
            .iter()
            .map(|p| grid_widths(p, &d_sq).0.to_u64().unwrap_or(u64::MAX))
            .collect();
        count_grid(&upper_w, budget)
    } else {
        upper_on_subgrid(&parts, t, delta, &d, fine, caps)?
    };
    Ok(CountResult {
        t,
        kind: CountKind::Bounds { lower, upper, delta },
    })
}

/// Upper bound on the grid `δ/m` for parts narrower than `δ`.
fn upper_on_subgrid(parts: &PartList, t: f64, delta: f64, d: &BigRational, m: u64, caps: &Caps) -> Result<BigUint> {
    let below = || Error::PartBelowDelta {
        part: parts.parts[0].value,
        delta,
    };
    let step = d / BigRational::from_integer(m.into());
    let cells = (BigRational::from_float(t).expect("finite T") / &step).floor().to_integer();
    let budget = match cells.to_u64() {
        Some(b) if (b as u128) < caps.grid as u128 => b,
        _ => return Err(below()),
    };
    let step_sq = &step * &step;
    let widths: Vec<u64> = parts
        .parts
        .iter()
        .map(|p| grid_widths(p, &step_sq).0.to_u64().unwrap_or(u64::MAX))
        .collect();
    if widths.contains(&0) {
        return Err(below());
    }
    Ok(count_grid(&widths, budget))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinedBounds {
    pub bounds: CountResult,
    pub gap: f64,
    pub converged: bool,
    pub iterations: u32,
}

impl RefinedBounds {
    /// The best bounds, or an error when the target gap was not reached.
    pub fn require_converged(self, target: f64) -> Result<CountResult> {
        if self.converged {
            Ok(self.bounds)
        } else {
            Err(Error::Unconverged {
                achieved: self.gap,
                target,
            })
        }
    }
}

/// Halves the grid step, starting from the smallest part, until the log gap
/// drops to `target_gap` or the next step would exceed the grid cap.
pub fn refine_bounds(parts: &PartList, t: f64, target_gap: f64) -> Result<RefinedBounds> {
    refine_bounds_with(parts, t, target_gap, &Caps::default())
}

pub fn refine_bounds_with(parts: &PartList, t: f64, target_gap: f64, caps: &Caps) -> Result<RefinedBounds> {
    check_horizon(t)?;
    if !(target_gap >= 0.0) {
        return Err(Error::Domain(format!("target gap must be non-negative, got {target_gap}")));
    }
    let parts = parts.truncated(t);
    let Some(first) = parts.parts.first() else {
        return Ok(RefinedBounds {
            bounds: CountResult {
                t,
                kind: CountKind::Bounds {
                    lower: BigUint::one(),
                    upper: BigUint::one(),
                    delta: 0.0,
                },
            },
            gap: 0.0,
            converged: true,
            iterations: 0,
        });
    };
    let mut delta = first.value;
    let mut best = count_bounds_dp_with(&parts, t, delta, caps)?;
    let mut iterations = 1;
    loop {
        let gap = best.gap();
        if gap <= target_gap {
            return Ok(RefinedBounds {
                bounds: best,
                gap,
                converged: true,
                iterations,
            });
        }
        delta /= 2.0;
        match count_bounds_dp_with(&parts, t, delta, caps) {
            Ok(next) => {
                best = next;
                iterations += 1;
            }
            Err(Error::GridCap { .. }) => {
                return Ok(RefinedBounds {
                    bounds: best,
                    gap,
                    converged: false,
                    iterations,
                })
            }
            Err(e) => return Err(e),
        }
    }
}

/// `ln` of a count result's midpoint in log space.
pub fn ln_midpoint(result: &CountResult) -> f64 {
    0.5 * (result.ln_lower() + result.ln_upper())
}
