//! Searches for integer relations `Σ qᵢ·xᵢ = 0` among geodesic lengths.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::surd::Radical;

/// Relation tolerance `1e-9 · max length · max_coef · max_subset`.
pub fn dependence_tolerance(lengths: &[f64], max_coef: i64, max_subset: usize) -> f64 {
    let max = lengths.iter().copied().fold(0.0, f64::max);
    1e-9 * max * max_coef as f64 * max_subset as f64
}

/// Every integer vector with entries in `[-max_coef, max_coef]` and support of
/// at most `max_subset` indices whose combination of `lengths` vanishes to
/// within [`dependence_tolerance`]. Both signs and all multiples are listed.
/// An empty result only means nothing was found at this depth.
pub fn detect_rational_dependence(lengths: &[f64], max_coef: i64, max_subset: usize) -> Result<Vec<Vec<i64>>> {
    if max_subset > 4 {
        return Err(Error::Precondition(format!("max_subset {max_subset} > 4")));
    }
    if !(1..=32).contains(&max_coef) {
        return Err(Error::Precondition(format!("max_coef {max_coef} outside 1..=32")));
    }
    if lengths.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Precondition("lengths must be positive and finite".into()));
    }
    if lengths.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("lengths must be sorted ascending".into()));
    }
    let eta = dependence_tolerance(lengths, max_coef, max_subset);
    let n = lengths.len();
    let mut found = Vec::new();
    let coefs: Vec<i64> = (-max_coef..=max_coef).filter(|&q| q != 0).collect();
    for size in 1..=max_subset.min(n) {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            search_subset(lengths, &subset, &coefs, max_coef, eta, &mut found);
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }
    Ok(found)
}

fn search_subset(lengths: &[f64], subset: &[usize], coefs: &[i64], max_coef: i64, eta: f64, found: &mut Vec<Vec<i64>>) {
    let (head, last) = subset.split_at(subset.len() - 1);
    let last = last[0];
    let x_last = lengths[last];
    let mut choice = vec![0usize; head.len()];
    loop {
        let partial: f64 = head
            .iter()
            .zip(&choice)
            .map(|(&i, &c)| coefs[c] as f64 * lengths[i])
            .sum();
        let q = (-partial / x_last).round();
        if q != 0.0 && q.abs() <= max_coef as f64 && (partial + q * x_last).abs() < eta {
            let mut v = vec![0i64; lengths.len()];
            for (&i, &c) in head.iter().zip(&choice) {
                v[i] = coefs[c];
            }
            v[last] = q as i64;
            found.push(v);
        }
        // odometer over the head coefficients
        let mut k = 0;
        loop {
            if k == choice.len() {
                return;
            }
            choice[k] += 1;
            if choice[k] < coefs.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact ℚ-dependence of lengths known through their rational squares.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDependence {
    /// Index groups sharing a squarefree radicand; each group of two or more is dependent.
    pub groups: Vec<Vec<usize>>,
    /// One primitive relation per consecutive pair inside each group.
    pub relations: Vec<Vec<i64>>,
    /// All radicands were proven squarefree, so an empty `groups` proves independence.
    pub certified: bool,
}

impl ExactDependence {
    pub fn is_dependent(&self) -> bool {
        !self.groups.is_empty()
    }
}

/// Groups lengths `√sqᵢ` by squarefree radicand: lengths over the same radicand
/// are rational multiples of each other, and distinct squarefree radicands are
/// linearly independent over ℚ.
pub fn exact_dependence(sq_lengths: &[BigRational]) -> ExactDependence {
    let radicals: Vec<Radical> = sq_lengths.iter().map(Radical::sqrt_of).collect();
    let certified = radicals.iter().all(|r| r.certified);
    let mut order: Vec<usize> = (0..radicals.len()).collect();
    order.sort_by(|&i, &j| radicals[i].radicand.cmp(&radicals[j].radicand).then(i.cmp(&j)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut current_rad: Option<&BigUint> = None;
    for &i in &order {
        if current_rad != Some(&radicals[i].radicand) {
            if current.len() >= 2 {
                groups.push(std::mem::take(&mut current));
            }
            current.clear();
            current_rad = Some(&radicals[i].radicand);
        }
        current.push(i);
    }
    if current.len() >= 2 {
        groups.push(current);
    }
    groups.sort();
    let mut relations = Vec::new();
    for g in &groups {
        for w in g.windows(2) {
            let (ci, cj) = (&radicals[w[0]].coef, &radicals[w[1]].coef);
            // cj·x_i − ci·x_j = 0, cleared of denominators.
            let qi = ci.denom() * cj.numer();
            let qj = cj.denom() * ci.numer();
            let g = qi.gcd(&qj);
            let (qi, qj): (BigInt, BigInt) = (&qi / &g, -(&qj / &g));
            let mut v = vec![0i64; sq_lengths.len()];
            v[w[0]] = i64::try_from(&qi).unwrap_or(i64::MAX);
            v[w[1]] = i64::try_from(&qj).unwrap_or(if qj.is_negative() { i64::MIN } else { i64::MAX });
            relations.push(v);
        }
    }
    ExactDependence {
        groups,
        relations,
        certified,
    }
}
