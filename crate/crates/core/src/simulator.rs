//! Packet birth times on the segment.
//!
//! A birth happens whenever a surface path from `A` returns to a gluing
//! point: at `A` after an even number of crossings, at `B` after an odd one.
//! The schedule lists each distinct time once together with the number of
//! edge-count tuples that realise it.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::json;

use crate::caps::Caps;
use crate::eqgraph::{require_cover, EquivalentGraph, GraphEdge};
use crate::error::{Error, Result};
use crate::export::{big_str, fmt17, num17};
use crate::spectra::Pair;
use crate::sums::{enumerate_sums, Generator, KeyBasis, Level, Role, SumsConfig, SumsError, SumsOutput};

pub use crate::sums::KeyMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    A,
    B,
    /// Reached at both gluing points by different tuples.
    Both,
}

impl Site {
    pub fn as_str(self) -> &'static str {
        match self {
            Site::A => "A",
            Site::B => "B",
            Site::Both => "AB",
        }
    }

    pub fn at_a(self) -> bool {
        matches!(self, Site::A | Site::Both)
    }

    pub fn at_b(self) -> bool {
        matches!(self, Site::B | Site::Both)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRef {
    pub pair: Pair,
    pub index: Vec<i64>,
    pub time: f64,
}

impl From<&GraphEdge> for EdgeRef {
    fn from(e: &GraphEdge) -> Self {
        EdgeRef {
            pair: e.pair,
            index: e.index.clone(),
            time: e.time,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirthEvent {
    pub time: f64,
    pub site: Site,
    /// Edges of one path realising this time, in traversal-independent order.
    pub witness: Vec<EdgeRef>,
    pub multiplicity: BigUint,
    /// Exact coefficient vector over the schedule's radicand basis.
    pub key: Option<Vec<i128>>,
    /// Spread of float times merged into this event (tolerance mode only).
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    /// Merge tolerance for inexact lengths; defaults to `1e-9·T`.
    pub eta: Option<f64>,
    /// Launch time of the first packet at `A`.
    pub offset: f64,
    pub caps: Caps,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            eta: None,
            offset: 0.0,
            caps: Caps::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirthSchedule {
    pub events: Vec<BirthEvent>,
    pub horizon: f64,
    pub eta: f64,
    pub offset: f64,
    pub mode: KeyMode,
    pub basis: Option<KeyBasis>,
    /// False for a partial schedule cut short by the frontier cap.
    pub valid: bool,
    /// Combination values below the horizon that no path realises.
    pub constraint_gaps: Vec<f64>,
    /// Pairs of times whose exact order could not be decided.
    pub unresolved: Vec<(f64, f64)>,
}

pub fn default_eta(horizon: f64) -> f64 {
    1e-9 * horizon
}

/// Generators in ascending time, each with the edge it stands for.
fn generators(graph: &EquivalentGraph) -> Vec<(Generator, &GraphEdge)> {
    let split = graph.loop_split();
    let roles = split
        .shared
        .iter()
        .chain(&split.a_only)
        .map(|e| (*e, Role::Free))
        .chain(split.b_only.iter().map(|e| (*e, Role::Far)))
        .chain(graph.cross().iter().map(|e| (e, Role::Cross)));
    let mut gens: Vec<(Generator, &GraphEdge)> = roles
        .map(|(e, role)| {
            let g = Generator {
                value: e.time,
                square: e.sq_time.clone(),
                role,
            };
            (g, e)
        })
        .collect();
    gens.sort_by(|(g, e), (h, f)| {
        g.value
            .total_cmp(&h.value)
            .then_with(|| e.pair.cmp(&f.pair))
            .then_with(|| e.index.cmp(&f.index))
    });
    gens
}

pub fn simulate_births(graph: &EquivalentGraph, horizon: f64) -> Result<BirthSchedule> {
    simulate_births_with(graph, horizon, &SimOptions::default())
}

pub fn simulate_births_with(graph: &EquivalentGraph, horizon: f64, opts: &SimOptions) -> Result<BirthSchedule> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    if !(opts.offset >= 0.0) || !opts.offset.is_finite() {
        return Err(Error::Domain(format!("offset must be finite and non-negative, got {}", opts.offset)));
    }
    let eta = opts.eta.unwrap_or_else(|| default_eta(horizon));
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::Domain(format!("tolerance must be finite and non-negative, got {eta}")));
    }
    let budget = horizon - opts.offset;
    require_cover(graph, budget.max(0.0))?;
    let gens = generators(graph);
    let edges: Vec<&GraphEdge> = gens.iter().map(|(_, e)| *e).collect();
    let plain: Vec<Generator> = gens.into_iter().map(|(g, _)| g).collect();
    let cfg = SumsConfig {
        budget,
        eta,
        frontier_cap: opts.caps.frontier,
        level_cap: Some(opts.caps.distinct),
        refine_bits: opts.caps.refine_bits,
    };
    let assemble = |out: SumsOutput, valid: bool, horizon: f64| BirthSchedule::assemble(out, &edges, horizon, eta, opts.offset, valid);
    match enumerate_sums(&plain, &cfg) {
        Ok(out) => Ok(assemble(out, true, horizon)),
        Err(SumsError::Frontier { cap, reached, partial }) => Err(Error::FrontierOverflow {
            cap,
            reached: reached + opts.offset,
            partial: Box::new(assemble(*partial, false, reached + opts.offset)),
        }),
        Err(SumsError::Levels { cap }) => Err(Error::DistinctCap { cap }),
        Err(SumsError::Other(e)) => Err(e),
    }
}

impl BirthSchedule {
    fn assemble(out: SumsOutput, edges: &[&GraphEdge], horizon: f64, eta: f64, offset: f64, valid: bool) -> Self {
        let mut events = Vec::new();
        let mut gaps = Vec::new();
        for level in out.levels {
            if !level.is_valid() {
                gaps.push(level.time + offset);
                continue;
            }
            events.push(event_from(level, edges, offset));
        }
        BirthSchedule {
            events,
            horizon,
            eta,
            offset,
            mode: out.mode,
            basis: out.basis,
            valid,
            constraint_gaps: gaps,
            unresolved: out
                .unresolved
                .into_iter()
                .map(|(a, b)| (a + offset, b + offset))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn total_multiplicity(&self) -> BigUint {
        self.events.iter().map(|e| &e.multiplicity).sum()
    }

    /// Exact value of an event time as `(coefficient, radicand)` terms, offset excluded.
    pub fn exact_terms(&self, event: &BirthEvent) -> Option<Vec<(BigRational, BigUint)>> {
        Some(self.basis.as_ref()?.terms(event.key.as_deref()?))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,vertex,tuple_multiplicity\n");
        for e in &self.events {
            out.push_str(&format!("{},{},{}\n", fmt17(e.time), e.site, big_str(&e.multiplicity)));
        }
        out
    }

    /// Step function `N(T)` sampled at every birth time.
    pub fn n_curve_csv(&self) -> String {
        let mut out = String::from("T,N\n");
        for (i, e) in self.events.iter().enumerate() {
            out.push_str(&format!("{},{}\n", fmt17(e.time), i + 1));
        }
        out
    }
}

fn event_from(level: Level, edges: &[&GraphEdge], offset: f64) -> BirthEvent {
    let site = match (level.even.is_zero(), level.odd.is_zero()) {
        (false, true) => Site::A,
        (true, false) => Site::B,
        _ => Site::Both,
    };
    BirthEvent {
        time: level.time + offset,
        site,
        witness: level.witness.iter().map(|g| EdgeRef::from(edges[*g as usize])).collect(),
        multiplicity: level.even + level.odd,
        key: level.key,
        spread: level.span,
    }
}

/// Number of distinct birth times `≤ t`.
pub fn n_of_t(schedule: &BirthSchedule, t: f64) -> Result<usize> {
    if t > schedule.horizon {
        return Err(Error::Domain(format!(
            "T = {t} lies beyond the schedule horizon {}",
            schedule.horizon
        )));
    }
    Ok(schedule.events.partition_point(|e| e.time <= t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FindingKind {
    /// Distinct tuples with identical exact time.
    ExactMerge,
    /// Float times merged by the tolerance.
    ToleranceMerge,
    /// Two provably distinct times closer than the tolerance.
    Violation,
    /// Distinct times within ten tolerances of each other.
    NearMiss,
    /// Exact order could not be decided within the refinement budget.
    Unresolved,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::ExactMerge => "exact_merge",
            FindingKind::ToleranceMerge => "tolerance_merge",
            FindingKind::Violation => "violation",
            FindingKind::NearMiss => "near_miss",
            FindingKind::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Finding {
    pub kind: FindingKind,
    pub first: f64,
    pub second: f64,
    pub gap: f64,
    /// Tuples folded into one time, for merge findings.
    pub tuples: Option<BigUint>,
}

impl Finding {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": self.kind.as_str(),
            "first": num17(self.first),
            "second": num17(self.second),
            "gap": num17(self.gap),
            "tuples": self.tuples.as_ref().map(big_str),
        })
    }
}

pub fn collision_audit(schedule: &BirthSchedule, eta: f64) -> Result<Vec<Finding>> {
    if !(eta > 0.0) {
        return Err(Error::Precondition(format!("audit tolerance must be positive, got {eta}")));
    }
    let mut findings = Vec::new();
    for e in &schedule.events {
        if e.multiplicity > BigUint::from(1u32) {
            let kind = if e.key.is_some() {
                FindingKind::ExactMerge
            } else {
                FindingKind::ToleranceMerge
            };
            findings.push(Finding {
                kind,
                first: e.time,
                second: e.time + e.spread,
                gap: e.spread,
                tuples: Some(e.multiplicity.clone()),
            });
        } else if e.spread > 0.0 {
            findings.push(Finding {
                kind: FindingKind::ToleranceMerge,
                first: e.time,
                second: e.time + e.spread,
                gap: e.spread,
                tuples: Some(e.multiplicity.clone()),
            });
        }
    }
    for w in schedule.events.windows(2) {
        let gap = w[1].time - w[0].time;
        if gap >= 10.0 * eta {
            continue;
        }
        let provably_distinct = w[0].key.is_some() && w[1].key.is_some() && w[0].key != w[1].key;
        let kind = if gap < eta && provably_distinct {
            FindingKind::Violation
        } else {
            FindingKind::NearMiss
        };
        findings.push(Finding {
            kind,
            first: w[0].time,
            second: w[1].time,
            gap,
            tuples: None,
        });
    }
    for (a, b) in &schedule.unresolved {
        findings.push(Finding {
            kind: FindingKind::Unresolved,
            first: *a,
            second: *b,
            gap: b - a,
            tuples: None,
        });
    }
    Ok(findings)
}

pub fn violations(findings: &[Finding]) -> impl Iterator<Item = &Finding> {
    findings.iter().filter(|f| f.kind == FindingKind::Violation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqgraph::build_equivalent_graph;
    use crate::scalar::Scalar;
    use crate::spectra::{AbstractLengths, ManifoldSpec};
    use num_bigint::BigInt;
    use num_traits::One;
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn cylinder_schedule(t: f64) -> BirthSchedule {
        let g = build_equivalent_graph(&ManifoldSpec::cylinder(3, 4, 1).unwrap(), t.max(8.0)).unwrap();
        simulate_births(&g, t).unwrap()
    }

    fn times(s: &BirthSchedule) -> Vec<f64> {
        s.events.iter().map(|e| e.time).collect()
    }

    /// All values of `4n + 3n₀ + 5n₁ ≤ t` with parity of `n₀ + n₁`, by nested loops.
    fn cylinder_oracle(t: i64) -> (BTreeMap<i64, BTreeSet<bool>>, u64) {
        let mut seen: BTreeMap<i64, BTreeSet<bool>> = BTreeMap::new();
        let mut tuples = 0;
        for n in 0..=t / 4 {
            for n0 in 0..=t / 3 {
                for n1 in 0..=t / 5 {
                    let s = 4 * n + 3 * n0 + 5 * n1;
                    if s <= t {
                        tuples += 1;
                        seen.entry(s).or_default().insert((n0 + n1) % 2 == 1);
                    }
                }
            }
        }
        (seen, tuples)
    }

    #[test]
    fn cylinder_birth_times() {
        let s = cylinder_schedule(8.0);
        let (oracle, tuples) = cylinder_oracle(8);
        assert_eq!(times(&s), oracle.keys().map(|k| *k as f64).collect::<Vec<_>>());
        assert_eq!(times(&s), vec![0.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(s.len(), 7);
        assert_eq!(s.total_multiplicity(), BigUint::from(8u32));
        assert_eq!(tuples, 8);
        for e in &s.events {
            let parities = &oracle[&(e.time as i64)];
            assert_eq!(e.site.at_b(), parities.contains(&true));
            assert_eq!(e.site.at_a(), parities.contains(&false));
        }
        assert!(s.valid);
        assert!(s.constraint_gaps.is_empty());
        assert_eq!(s.mode, KeyMode::Exact);
    }

    #[test]
    fn fixed_lengths_larger_horizon_match_oracle() {
        let lists = AbstractLengths {
            aa: vec![4.into()],
            ab: vec![3.into(), 5.into()],
            bb: vec![4.into()],
        };
        let g = build_equivalent_graph(&ManifoldSpec::abstract_lengths(lists, 1).unwrap(), 40.0).unwrap();
        let s = simulate_births(&g, 40.0).unwrap();
        let (oracle, tuples) = cylinder_oracle(40);
        assert_eq!(times(&s), oracle.keys().map(|k| *k as f64).collect::<Vec<_>>());
        assert_eq!(s.total_multiplicity(), BigUint::from(tuples));
    }

    #[test]
    fn witness_parity_matches_site() {
        let s = cylinder_schedule(30.0);
        for e in &s.events {
            let crossings = e.witness.iter().filter(|w| w.pair == Pair::AB).count();
            let sum: f64 = e.witness.iter().map(|w| w.time).sum();
            assert!((sum - e.time).abs() <= 1e-12 * e.time.max(1.0));
            if crossings % 2 == 1 {
                assert!(e.site.at_b());
            } else {
                assert!(e.site.at_a());
            }
        }
    }

    #[test]
    fn step_function_queries() {
        let s = cylinder_schedule(8.0);
        assert_eq!(n_of_t(&s, 4.5).unwrap(), 3);
        assert_eq!(n_of_t(&s, 2.9).unwrap(), 1);
        assert_eq!(n_of_t(&s, 0.0).unwrap(), 1);
        assert_eq!(n_of_t(&s, 8.0).unwrap(), 7);
        assert!(n_of_t(&s, 8.5).is_err());
    }

    #[test]
    fn zero_horizon_single_event() {
        let s = cylinder_schedule(0.0);
        assert_eq!(s.len(), 1);
        assert_eq!(s.events[0].site, Site::A);
        assert_eq!(s.events[0].time, 0.0);
        assert!(s.events[0].witness.is_empty());
    }

    #[test]
    fn horizon_beyond_cutoff_rejected() {
        let g = build_equivalent_graph(&ManifoldSpec::cylinder(3, 4, 1).unwrap(), 8.0).unwrap();
        assert!(matches!(simulate_births(&g, 9.0), Err(Error::InsufficientSpectrum { .. })));
    }

    #[test]
    fn audit_reports_exact_merge_only() {
        let s = cylinder_schedule(8.0);
        let findings = collision_audit(&s, 1e-9).unwrap();
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.kind, FindingKind::ExactMerge);
        assert_eq!((f.first, f.gap), (8.0, 0.0));
        assert_eq!(f.tuples, Some(BigUint::from(2u32)));
        assert_eq!(violations(&findings).count(), 0);
    }

    fn one_root_two(t: f64) -> BirthSchedule {
        let lists = AbstractLengths {
            aa: vec![1.into()],
            ab: vec![Scalar::sqrt_of(BigRational::from_integer(BigInt::from(2))).unwrap()],
            bb: vec![1.into()],
        };
        let g = build_equivalent_graph(&ManifoldSpec::abstract_lengths(lists, 1).unwrap(), t).unwrap();
        simulate_births(&g, t).unwrap()
    }

    #[test]
    fn independent_lengths_audit_clean() {
        let s = one_root_two(20.0);
        let findings = collision_audit(&s, 1e-9).unwrap();
        assert!(findings.is_empty(), "{findings:?}");
        // Every p + q√2 ≤ 20 is realised exactly once.
        let mut count = 0;
        for q in 0..=14 {
            let rest = 20.0 - q as f64 * 2f64.sqrt();
            if rest >= 0.0 {
                count += rest.floor() as usize + 1;
            }
        }
        assert_eq!(s.len(), count);
        assert!(s.events.iter().all(|e| e.multiplicity == BigUint::one()));
    }

    #[test]
    fn audit_rejects_zero_tolerance() {
        let s = cylinder_schedule(8.0);
        assert!(matches!(collision_audit(&s, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn audit_flags_close_distinct_times() {
        let s = one_root_two(20.0);
        // 17 − 12√2 ≈ 0.0294; a tolerance above that gap must flag it.
        let findings = collision_audit(&s, 0.05).unwrap();
        assert!(violations(&findings).any(|f| (f.gap - (17.0 - 12.0 * 2f64.sqrt())).abs() < 1e-9));
    }

    #[test]
    fn far_only_loops_report_gaps() {
        let lists = AbstractLengths {
            aa: vec![5.into()],
            ab: vec![7.into()],
            bb: vec![1.into()],
        };
        let g = build_equivalent_graph(&ManifoldSpec::abstract_lengths(lists, 1).unwrap(), 10.0).unwrap();
        let s = simulate_births(&g, 10.0).unwrap();
        assert_eq!(times(&s), vec![0.0, 5.0, 7.0, 8.0, 9.0, 10.0]);
        assert_eq!(s.constraint_gaps, vec![1.0, 2.0, 3.0, 4.0, 6.0]);
    }

    #[test]
    fn offset_shifts_births() {
        let g = build_equivalent_graph(&ManifoldSpec::cylinder(3, 4, 1).unwrap(), 8.0).unwrap();
        let opts = SimOptions {
            offset: 0.5,
            ..SimOptions::default()
        };
        let s = simulate_births_with(&g, 8.0, &opts).unwrap();
        assert_eq!(times(&s), vec![0.5, 3.5, 4.5, 5.5, 6.5, 7.5]);
    }

    #[test]
    fn frontier_overflow_carries_partial() {
        let g = build_equivalent_graph(&ManifoldSpec::cylinder(3, 4, 1).unwrap(), 60.0).unwrap();
        let opts = SimOptions {
            caps: Caps {
                frontier: 4,
                ..Caps::default()
            },
            ..SimOptions::default()
        };
        match simulate_births_with(&g, 60.0, &opts) {
            Err(Error::FrontierOverflow { partial, reached, .. }) => {
                assert!(!partial.valid);
                assert_eq!(partial.horizon, reached);
                assert!(!partial.events.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn float_torus_uses_tolerance() {
        let spec = ManifoldSpec::torus2(1, 1, 0.3, 0.45, 1).unwrap();
        let g = build_equivalent_graph(&spec, 3.0).unwrap();
        let s = simulate_births(&g, 3.0).unwrap();
        assert_eq!(s.mode, KeyMode::Tolerance);
        assert!(s.events.windows(2).all(|w| w[1].time - w[0].time > s.eta));
    }

    #[test]
    fn csv_exports() {
        let s = cylinder_schedule(8.0);
        let csv = s.to_csv();
        assert!(csv.starts_with("time,vertex,tuple_multiplicity\n0,A,1\n3,B,1\n4,A,1\n"));
        assert!(csv.ends_with("8,A,2\n"));
        assert!(s.n_curve_csv().ends_with("8,7\n"));
    }

    #[test]
    fn deterministic_export() {
        let spec = ManifoldSpec::torus2(1, 1, 0.3, 0.45, 1).unwrap();
        let g = build_equivalent_graph(&spec, 3.5).unwrap();
        let a = simulate_births(&g, 3.5).unwrap().to_csv();
        let b = simulate_births(&g, 3.5).unwrap().to_csv();
        assert_eq!(a, b);
    }

    fn closure_holds(s: &BirthSchedule, loops: &[f64], at_a: bool) {
        let set: Vec<f64> = times(s);
        for e in &s.events {
            if (at_a && e.site.at_a()) || (!at_a && e.site.at_b()) {
                for t in loops {
                    let target = e.time + t;
                    if target <= s.horizon {
                        let hit = set.iter().any(|x| (x - target).abs() <= 1e-9 * target.max(1.0));
                        assert!(hit, "missing {target} from {}", e.time);
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn closed_under_loops(a in 1i64..6, b in 1i64..6, t in 0u32..25) {
            let spec = ManifoldSpec::cylinder(a, b, 1).unwrap();
            let t = t as f64;
            let g = build_equivalent_graph(&spec, t.max(1.0)).unwrap();
            let s = simulate_births(&g, t).unwrap();
            let loops: Vec<f64> = g.loops_a().iter().map(|e| e.time).collect();
            closure_holds(&s, &loops, true);
            let loops_b: Vec<f64> = g.loops_b().iter().map(|e| e.time).collect();
            closure_holds(&s, &loops_b, false);
            prop_assert!(s.events.windows(2).all(|w| w[0].time < w[1].time));
            prop_assert_eq!(s.events[0].time, 0.0);
        }
    }
}
