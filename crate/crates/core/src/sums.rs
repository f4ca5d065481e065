//! Best-first enumeration of the distinct values of `Σ nᵢ·gᵢ` below a budget.
//!
//! Generators are expanded monotonically (a state only adds generators at or
//! after the last one it used), so every tuple is produced once. States that
//! reach the same value with the same flags and resume index are merged when
//! popped, which keeps the frontier proportional to the number of distinct
//! values rather than the number of tuples.
//!
//! Values are keyed exactly when every generator carries a rational square:
//! each generator is written as `c·√s` with `s` squarefree and a key is the
//! vector of coefficients over the radicand basis. Otherwise values are
//! floats and anything within `η` of the first value of a cluster is merged.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::surd::{sign_of_sum, Radical};

/// How a generator affects reachability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Role {
    /// Usable anywhere.
    Free,
    /// Flips the endpoint between the two vertices.
    Cross,
    /// Usable only once the far vertex has been visited.
    Far,
}

#[derive(Clone, Debug)]
pub(crate) struct Generator {
    pub value: f64,
    pub square: Option<BigRational>,
    pub role: Role,
}

const ODD: u8 = 1;
const CROSSED: u8 = 2;
const FAR: u8 = 4;

fn flags_valid(flags: u8) -> bool {
    flags & FAR == 0 || flags & CROSSED != 0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyMode {
    Exact,
    Tolerance,
}

impl KeyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyMode::Exact => "exact",
            KeyMode::Tolerance => "tolerance",
        }
    }
}

/// Radicand basis for exact keys: coordinate `r` of a key is the numerator
/// of the coefficient of `√radicands[r]` over `denoms[r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyBasis {
    radicands: Vec<BigUint>,
    denoms: Vec<BigInt>,
    roots: Vec<f64>,
    scales: Vec<f64>,
    certified: bool,
}

impl KeyBasis {
    fn build(gens: &[Generator]) -> Result<Option<(KeyBasis, Vec<Vec<i128>>)>> {
        let mut radicals = Vec::with_capacity(gens.len());
        for g in gens {
            match &g.square {
                Some(sq) => radicals.push(Radical::sqrt_of(sq)),
                None => return Ok(None),
            }
        }
        let mut radicands: Vec<BigUint> = radicals.iter().map(|r| r.radicand.clone()).collect();
        radicands.sort();
        radicands.dedup();
        let mut denoms = vec![BigInt::one(); radicands.len()];
        for r in &radicals {
            let at = radicands.binary_search(&r.radicand).expect("radicand in basis");
            denoms[at] = denoms[at].lcm(r.coef.denom());
        }
        let mut keys = Vec::with_capacity(gens.len());
        for r in &radicals {
            let at = radicands.binary_search(&r.radicand).expect("radicand in basis");
            let mut key = vec![0i128; radicands.len()];
            let numer = r.coef.numer() * (&denoms[at] / r.coef.denom());
            key[at] = numer.to_i128().ok_or(Error::KeyOverflow)?;
            keys.push(key);
        }
        let roots = radicands.iter().map(|s| s.to_f64().unwrap_or(f64::INFINITY).sqrt()).collect();
        let scales = denoms.iter().map(|d| d.to_f64().unwrap_or(f64::INFINITY)).collect();
        let certified = radicals.iter().all(|r| r.certified);
        Ok(Some((
            KeyBasis {
                radicands,
                denoms,
                roots,
                scales,
                certified,
            },
            keys,
        )))
    }

    /// Float value of a key, a pure function of the key.
    pub fn approx(&self, key: &[i128]) -> f64 {
        key.iter()
            .zip(self.roots.iter().zip(&self.scales))
            .filter(|(k, _)| **k != 0)
            .map(|(k, (root, scale))| *k as f64 / scale * root)
            .sum()
    }

    /// The key as `(coefficient, radicand)` terms with zero terms dropped.
    pub fn terms(&self, key: &[i128]) -> Vec<(BigRational, BigUint)> {
        key.iter()
            .enumerate()
            .filter(|(_, k)| **k != 0)
            .map(|(r, k)| {
                (
                    BigRational::new(BigInt::from(*k), self.denoms[r].clone()),
                    self.radicands[r].clone(),
                )
            })
            .collect()
    }

    /// Whether every radicand is known to be squarefree; only then do distinct
    /// keys certify distinct values.
    pub fn certified(&self) -> bool {
        self.certified
    }

    fn diff_terms(&self, a: &[i128], b: &[i128]) -> Vec<(BigRational, BigUint)> {
        a.iter()
            .zip(b)
            .enumerate()
            .filter(|(_, (x, y))| x != y)
            .map(|(r, (x, y))| {
                (
                    BigRational::new(BigInt::from(*x) - BigInt::from(*y), self.denoms[r].clone()),
                    self.radicands[r].clone(),
                )
            })
            .collect()
    }

    /// Exact comparison of two key values; `None` when refinement ran out of bits.
    pub fn compare(&self, a: &[i128], b: &[i128], max_bits: u32) -> Option<Ordering> {
        if a == b {
            return Some(Ordering::Equal);
        }
        sign_of_sum(&self.diff_terms(a, b), &BigRational::zero(), max_bits)
    }

    /// Exact comparison of a key value against a rational bound.
    pub fn compare_to(&self, key: &[i128], bound: &BigRational, max_bits: u32) -> Option<Ordering> {
        sign_of_sum(&self.terms(key), &-bound, max_bits)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SumsConfig {
    pub budget: f64,
    /// Merge tolerance used when keys are not exact.
    pub eta: f64,
    pub frontier_cap: usize,
    pub level_cap: Option<usize>,
    pub refine_bits: u32,
}

/// One distinct value together with the tuple counts reaching it.
#[derive(Clone, Debug)]
pub(crate) struct Level {
    pub time: f64,
    pub key: Option<Vec<i128>>,
    /// Valid tuples ending at the start vertex.
    pub even: BigUint,
    /// Valid tuples ending at the far vertex.
    pub odd: BigUint,
    /// Tuples that use a far-only generator without crossing.
    pub stranded: BigUint,
    /// Spread of float values merged into this level.
    pub span: f64,
    /// Generator indices of one valid tuple, or of any tuple when none is valid.
    pub witness: Vec<u32>,
}

impl Level {
    pub fn is_valid(&self) -> bool {
        !self.even.is_zero() || !self.odd.is_zero()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SumsOutput {
    pub mode: KeyMode,
    pub basis: Option<KeyBasis>,
    pub levels: Vec<Level>,
    /// Pairs of level values whose order or boundary status stayed undecided.
    pub unresolved: Vec<(f64, f64)>,
}

pub(crate) enum SumsError {
    Frontier { cap: usize, reached: f64, partial: Box<SumsOutput> },
    Levels { cap: usize },
    Other(Error),
}

impl From<Error> for SumsError {
    fn from(e: Error) -> Self {
        SumsError::Other(e)
    }
}

struct Entry {
    time: f64,
    key: Option<Box<[i128]>>,
    flags: u8,
    next: u32,
    mult: BigUint,
    parent: u32,
    gen: u32,
}

impl Entry {
    fn state_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.key.cmp(&other.key))
            .then_with(|| self.flags.cmp(&other.flags))
            .then_with(|| self.next.cmp(&other.next))
    }

    fn same_state(&self, other: &Self) -> bool {
        self.flags == other.flags && self.next == other.next
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.state_cmp(other) == Ordering::Equal && self.parent == other.parent
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so the max-heap pops the smallest state first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .state_cmp(self)
            .then_with(|| other.parent.cmp(&self.parent))
            .then_with(|| other.gen.cmp(&self.gen))
    }
}

const ROOT: u32 = u32::MAX;

struct Engine<'a> {
    gens: &'a [Generator],
    cfg: &'a SumsConfig,
    basis: Option<KeyBasis>,
    gen_keys: Vec<Vec<i128>>,
    budget_exact: Option<BigRational>,
    guard: f64,
    arena: Vec<(u32, u32)>,
    heap: BinaryHeap<Entry>,
    levels: Vec<Level>,
    unresolved: Vec<(f64, f64)>,
}

pub(crate) fn enumerate_sums(gens: &[Generator], cfg: &SumsConfig) -> Result<SumsOutput, SumsError> {
    if !(cfg.budget >= 0.0) {
        return Ok(SumsOutput {
            mode: KeyMode::Exact,
            basis: None,
            levels: Vec::new(),
            unresolved: Vec::new(),
        });
    }
    if gens.windows(2).any(|w| w[0].value > w[1].value) {
        return Err(Error::Precondition("generators must be sorted by value".into()).into());
    }
    let (basis, gen_keys) = match KeyBasis::build(gens)? {
        Some((b, k)) => (Some(b), k),
        None => (None, Vec::new()),
    };
    let budget_exact = basis
        .as_ref()
        .map(|_| BigRational::from_float(cfg.budget).expect("finite budget"));
    let mut engine = Engine {
        gens,
        cfg,
        guard: 1e-9 * cfg.budget.max(1.0),
        basis,
        gen_keys,
        budget_exact,
        arena: Vec::new(),
        heap: BinaryHeap::new(),
        levels: Vec::new(),
        unresolved: Vec::new(),
    };
    engine.run()?;
    engine.order_levels();
    Ok(engine.finish())
}

impl Engine<'_> {
    fn mode(&self) -> KeyMode {
        if self.basis.is_some() {
            KeyMode::Exact
        } else {
            KeyMode::Tolerance
        }
    }

    fn finish(self) -> SumsOutput {
        SumsOutput {
            mode: self.mode(),
            basis: self.basis,
            levels: self.levels,
            unresolved: self.unresolved,
        }
    }

    fn run(&mut self) -> Result<(), SumsError> {
        let dims = self.basis.as_ref().map(|b| b.radicands.len());
        self.heap.push(Entry {
            time: 0.0,
            key: dims.map(|d| vec![0i128; d].into_boxed_slice()),
            flags: 0,
            next: 0,
            mult: BigUint::one(),
            parent: ROOT,
            gen: 0,
        });
        while let Some(first) = self.heap.pop() {
            let mut group = vec![first];
            while let Some(top) = self.heap.peek() {
                let joins = match self.basis {
                    Some(_) => top.key == group[0].key,
                    None => top.time - group[0].time <= self.cfg.eta,
                };
                if !joins {
                    break;
                }
                group.push(self.heap.pop().expect("peeked"));
            }
            self.settle(group)?;
            if let Some(cap) = self.cfg.level_cap {
                if self.levels.len() > cap {
                    return Err(SumsError::Levels { cap });
                }
            }
            if self.heap.len() > self.cfg.frontier_cap {
                let reached = self.levels.last().map_or(0.0, |l| l.time);
                self.order_levels();
                let partial = SumsOutput {
                    mode: self.mode(),
                    basis: self.basis.clone(),
                    levels: std::mem::take(&mut self.levels),
                    unresolved: std::mem::take(&mut self.unresolved),
                };
                return Err(SumsError::Frontier {
                    cap: self.cfg.frontier_cap,
                    reached,
                    partial: Box::new(partial),
                });
            }
        }
        Ok(())
    }

    /// Records one level from a popped group and expands its merged states.
    fn settle(&mut self, mut group: Vec<Entry>) -> Result<(), SumsError> {
        let time = group[0].time;
        let span = group.iter().map(|e| e.time).fold(time, f64::max) - time;
        let key = group[0].key.clone();
        group.sort_by(|a, b| a.flags.cmp(&b.flags).then(a.next.cmp(&b.next)));
        let mut merged: Vec<Entry> = Vec::new();
        for e in group {
            match merged.last_mut() {
                Some(m) if m.same_state(&e) => m.mult += e.mult,
                _ => merged.push(e),
            }
        }
        let mut level = Level {
            time,
            key: key.as_ref().map(|k| k.to_vec()),
            even: BigUint::zero(),
            odd: BigUint::zero(),
            stranded: BigUint::zero(),
            span,
            witness: Vec::new(),
        };
        let base = self.arena.len() as u32;
        for m in &merged {
            self.arena.push((m.parent, m.gen));
            if !flags_valid(m.flags) {
                level.stranded += &m.mult;
            } else if m.flags & ODD != 0 {
                level.odd += &m.mult;
            } else {
                level.even += &m.mult;
            }
        }
        // Prefer a valid tuple for the witness.
        let pick = merged.iter().position(|m| flags_valid(m.flags)).unwrap_or(0);
        level.witness = self.path(base + pick as u32);
        for (offset, m) in merged.into_iter().enumerate() {
            self.expand(base + offset as u32, &m, time, key.as_deref())?;
        }
        self.levels.push(level);
        Ok(())
    }

    fn path(&self, mut node: u32) -> Vec<u32> {
        let mut gens = Vec::new();
        while node != ROOT {
            let (parent, gen) = self.arena[node as usize];
            if parent == ROOT {
                break;
            }
            gens.push(gen);
            node = parent;
        }
        gens.reverse();
        gens
    }

    fn expand(&mut self, node: u32, m: &Entry, time: f64, key: Option<&[i128]>) -> Result<(), SumsError> {
        for j in m.next as usize..self.gens.len() {
            let g = &self.gens[j];
            let (child_time, child_key) = match (&self.basis, key) {
                (Some(basis), Some(k)) => {
                    let mut ck = k.to_vec();
                    for (c, d) in ck.iter_mut().zip(&self.gen_keys[j]) {
                        *c = c.checked_add(*d).ok_or(Error::KeyOverflow)?;
                    }
                    (basis.approx(&ck), Some(ck))
                }
                _ => (time + g.value, None),
            };
            if !self.within_budget(child_time, child_key.as_deref()) {
                // Generators are sorted, so later ones overshoot as well.
                break;
            }
            let flags = match g.role {
                Role::Free => m.flags,
                Role::Cross => (m.flags ^ ODD) | CROSSED,
                Role::Far => m.flags | FAR,
            };
            self.heap.push(Entry {
                time: child_time,
                key: child_key.map(Vec::into_boxed_slice),
                flags,
                next: j as u32,
                mult: m.mult.clone(),
                parent: node,
                gen: j as u32,
            });
        }
        Ok(())
    }

    fn within_budget(&mut self, time: f64, key: Option<&[i128]>) -> bool {
        let budget = self.cfg.budget;
        match (&self.basis, key, &self.budget_exact) {
            (Some(basis), Some(k), Some(bound)) => {
                if time <= budget - self.guard {
                    true
                } else if time > budget + self.guard {
                    false
                } else {
                    match basis.compare_to(k, bound, self.cfg.refine_bits) {
                        Some(ord) => ord != Ordering::Greater,
                        None => {
                            self.unresolved.push((time, budget));
                            true
                        }
                    }
                }
            }
            _ => time <= budget + 1e-12 * budget.max(1.0),
        }
    }

    /// Puts near-equal exact levels in exact order; undecided pairs are recorded.
    fn order_levels(&mut self) {
        let Some(basis) = &self.basis else { return };
        let n = self.levels.len();
        for i in 1..n {
            let mut j = i;
            while j > 0 {
                let (a, b) = (&self.levels[j - 1], &self.levels[j]);
                let band = 1e-10 * a.time.abs().max(b.time.abs()).max(1.0);
                if b.time - a.time > band {
                    break;
                }
                let ka = a.key.as_deref().expect("exact level");
                let kb = b.key.as_deref().expect("exact level");
                match basis.compare(ka, kb, self.cfg.refine_bits) {
                    Some(Ordering::Greater) => {
                        self.levels.swap(j - 1, j);
                        j -= 1;
                    }
                    Some(Ordering::Less) => break,
                    _ => {
                        self.unresolved.push((a.time, b.time));
                        break;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn int_gen(v: i64, role: Role) -> Generator {
        Generator {
            value: v as f64,
            square: Some(BigRational::from_integer(BigInt::from(v * v))),
            role,
        }
    }

    fn sqrt_gen(sq: i64, role: Role) -> Generator {
        Generator {
            value: (sq as f64).sqrt(),
            square: Some(BigRational::from_integer(BigInt::from(sq))),
            role,
        }
    }

    fn cfg(budget: f64) -> SumsConfig {
        SumsConfig {
            budget,
            eta: 1e-9 * budget.max(1.0),
            frontier_cap: 1_000_000,
            level_cap: None,
            refine_bits: 512,
        }
    }

    fn run(gens: &[Generator], budget: f64) -> SumsOutput {
        match enumerate_sums(gens, &cfg(budget)) {
            Ok(out) => out,
            Err(_) => panic!("enumeration failed"),
        }
    }

    /// Distinct integer sums with tuple counts, by nested loops.
    fn brute_int(parts: &[i64], budget: i64) -> BTreeMap<i64, u64> {
        let mut out = BTreeMap::new();
        fn go(parts: &[i64], budget: i64, acc: i64, out: &mut BTreeMap<i64, u64>) {
            match parts.split_first() {
                None => *out.entry(acc).or_insert(0) += 1,
                Some((p, rest)) => {
                    let mut s = acc;
                    while s <= budget {
                        go(rest, budget, s, out);
                        s += p;
                    }
                }
            }
        }
        go(parts, budget, 0, &mut out);
        out
    }

    #[test]
    fn integer_sums_match_brute_force() {
        let parts = [3, 4, 5];
        let gens: Vec<_> = parts.iter().map(|p| int_gen(*p, Role::Free)).collect();
        let out = run(&gens, 20.0);
        assert_eq!(out.mode, KeyMode::Exact);
        let oracle = brute_int(&parts, 20);
        let got: Vec<(f64, u64)> = out.levels.iter().map(|l| (l.time, l.even.to_u64().unwrap())).collect();
        let want: Vec<(f64, u64)> = oracle.iter().map(|(k, v)| (*k as f64, *v)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn cross_parity_and_far_loops() {
        // Loop 4 usable anywhere, cross edges 3 and 5.
        let gens = vec![int_gen(3, Role::Cross), int_gen(4, Role::Free), int_gen(5, Role::Cross)];
        let out = run(&gens, 8.0);
        let times: Vec<f64> = out.levels.iter().map(|l| l.time).collect();
        assert_eq!(times, vec![0.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let odd: Vec<bool> = out.levels.iter().map(|l| !l.odd.is_zero()).collect();
        assert_eq!(odd, vec![false, true, false, true, false, true, false]);
        let eight = out.levels.last().unwrap();
        assert_eq!(eight.even, BigUint::from(2u32));
    }

    #[test]
    fn far_only_loop_needs_a_crossing() {
        let gens = vec![int_gen(1, Role::Far), int_gen(10, Role::Cross)];
        let out = run(&gens, 12.0);
        let valid: Vec<f64> = out.levels.iter().filter(|l| l.is_valid()).map(|l| l.time).collect();
        assert_eq!(valid, vec![0.0, 10.0, 11.0, 12.0]);
        assert_eq!(out.levels.iter().filter(|l| !l.is_valid()).count(), 9);
    }

    #[test]
    fn surd_keys_are_exact() {
        // √8 = 2√2 collides with twice √2.
        let gens = vec![sqrt_gen(2, Role::Free), sqrt_gen(8, Role::Free)];
        let out = run(&gens, 3.0);
        let mults: Vec<u64> = out.levels.iter().map(|l| l.even.to_u64().unwrap()).collect();
        assert_eq!(mults, vec![1, 1, 2]);
        assert!(out.basis.unwrap().certified());
    }

    #[test]
    fn exact_boundary_inclusion() {
        let gens = vec![Generator {
            value: 0.1,
            square: Some(BigRational::new(1.into(), 100.into())),
            role: Role::Free,
        }];
        // 3·(1/10) exceeds the binary double nearest 0.3, which is below 3/10.
        let out = run(&gens, 0.3);
        assert_eq!(out.levels.len(), 3);
        let out = run(&gens, 0.30000000000000004);
        assert_eq!(out.levels.len(), 4);
    }

    #[test]
    fn tolerance_mode_merges_within_eta() {
        let gens = vec![
            Generator { value: 1.0, square: None, role: Role::Free },
            Generator { value: 2.0 + 1e-12, square: None, role: Role::Free },
        ];
        let out = run(&gens, 4.0);
        assert_eq!(out.mode, KeyMode::Tolerance);
        assert_eq!(out.levels.len(), 5);
        assert!(out.levels[2].span > 0.0);
        assert_eq!(out.levels[2].even, BigUint::from(2u32));
    }

    #[test]
    fn frontier_cap_yields_partial() {
        let gens: Vec<_> = (1..=6).map(|p| int_gen(p, Role::Free)).collect();
        let mut c = cfg(50.0);
        c.frontier_cap = 10;
        match enumerate_sums(&gens, &c) {
            Err(SumsError::Frontier { cap, partial, .. }) => {
                assert_eq!(cap, 10);
                assert!(!partial.levels.is_empty());
            }
            _ => panic!("expected overflow"),
        }
    }

    #[test]
    fn witness_reproduces_level() {
        let gens = vec![int_gen(1, Role::Far), sqrt_gen(2, Role::Free), sqrt_gen(3, Role::Cross)];
        let out = run(&gens, 6.0);
        let basis = out.basis.as_ref().unwrap();
        for l in &out.levels {
            let mut key = vec![0i128; basis.radicands.len()];
            for g in &l.witness {
                let (rad, k) = match *g {
                    0 => (1u32, 1),
                    1 => (2, 1),
                    _ => (3, 1),
                };
                let at = basis.radicands.binary_search(&BigUint::from(rad)).unwrap();
                key[at] += k;
            }
            assert_eq!(Some(key), l.key);
        }
    }
}
