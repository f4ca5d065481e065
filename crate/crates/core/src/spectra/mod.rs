//! Geodesic length spectra between the two gluing points `A` and `B`.
//!
//! Travel speed is normalized to one, so a geodesic's length is its travel
//! time. Every class carries its exact squared length whenever the geometry
//! was given exactly (rationals, or `sqrt(r)` for the cylinder parameters).

mod dependence;
mod fit;
mod lattice;
mod manifold;

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::scalar::{fmt_ratio, ratio_to_f64, Scalar};

pub use dependence::{dependence_tolerance, detect_rational_dependence, exact_dependence, ExactDependence};
pub use fit::{fit_counting_params, CountingFit, FIT_SAMPLES};
pub use manifold::{AbstractLengths, Geometry, ManifoldSpec};

use lattice::{Axis, Shell};

/// Endpoint pair of a geodesic class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Pair {
    AA,
    AB,
    BB,
}

impl Pair {
    pub fn as_str(self) -> &'static str {
        match self {
            Pair::AA => "AA",
            Pair::AB => "AB",
            Pair::BB => "BB",
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Pair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AA" => Ok(Pair::AA),
            "AB" => Ok(Pair::AB),
            "BB" => Ok(Pair::BB),
            _ => Err(Error::Parse(format!("unknown pair `{s}`"))),
        }
    }
}

/// Which endpoint pairs a counting query includes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSet {
    pub aa: bool,
    pub ab: bool,
    pub bb: bool,
}

impl PairSet {
    pub const ALL: PairSet = PairSet { aa: true, ab: true, bb: true };
    /// Loops counted once (the `A` loops stand for the equal `B` loops) plus connecting geodesics.
    pub const AA_AB: PairSet = PairSet { aa: true, ab: true, bb: false };

    pub fn only(pair: Pair) -> PairSet {
        PairSet {
            aa: pair == Pair::AA,
            ab: pair == Pair::AB,
            bb: pair == Pair::BB,
        }
    }

    pub fn contains(&self, pair: Pair) -> bool {
        match pair {
            Pair::AA => self.aa,
            Pair::AB => self.ab,
            Pair::BB => self.bb,
        }
    }
}

/// One geodesic class from `A` or `B` to `A` or `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicClass {
    pub pair: Pair,
    /// Lattice index: `(k)` for the cylinder, `(n,m)` / `(n,m,l)` for tori,
    /// list position for abstract spectra, empty for the cylinder loop.
    pub index: Vec<i64>,
    pub length: f64,
    pub sq_length: Option<BigRational>,
}

impl GeodesicClass {
    pub fn index_label(&self) -> String {
        self.index.iter().map(i64::to_string).collect::<Vec<_>>().join(";")
    }

    /// Canonical order: length, then exact square, then pair, then index.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.length
            .total_cmp(&other.length)
            .then_with(|| self.sq_length.cmp(&other.sq_length))
            .then_with(|| self.pair.cmp(&other.pair))
            .then_with(|| self.index.cmp(&other.index))
    }

    /// `length ≤ bound`, exactly when the squared length is known.
    pub fn length_le(&self, bound: f64) -> bool {
        match &self.sq_length {
            Some(sq) => match BigRational::from_float(bound) {
                Some(b) => b >= BigRational::from_integer(0.into()) && *sq <= &b * &b,
                None => bound == f64::INFINITY,
            },
            None => self.length <= bound,
        }
    }
}

/// All geodesic classes with length up to `cutoff`, canonically sorted.
#[derive(Clone, Debug)]
pub struct LengthSpectrum {
    spec: ManifoldSpec,
    cutoff: f64,
    classes: Vec<GeodesicClass>,
}

impl LengthSpectrum {
    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn classes(&self) -> &[GeodesicClass] {
        &self.classes
    }

    pub fn by_pair(&self, pair: Pair) -> impl Iterator<Item = &GeodesicClass> + '_ {
        self.classes.iter().filter(move |c| c.pair == pair)
    }

    pub fn is_exact(&self) -> bool {
        self.classes.iter().all(|c| c.sq_length.is_some())
    }

    /// Number of classes in `pairs` with length `≤ lambda`.
    pub fn counting_function(&self, lambda: f64, pairs: PairSet) -> Result<u64> {
        if lambda > self.cutoff {
            return Err(Error::InsufficientSpectrum {
                requested: lambda,
                cutoff: self.cutoff,
            });
        }
        let end = self.classes.partition_point(|c| c.length_le(lambda));
        Ok(self.classes[..end].iter().filter(|c| pairs.contains(c.pair)).count() as u64)
    }

    /// Raise the cutoff, enumerating only the new shell.
    pub fn extend(&mut self, cutoff: f64, caps: &Caps) -> Result<&[GeodesicClass]> {
        if cutoff <= self.cutoff {
            return Ok(&[]);
        }
        let mut shell = enumerate_shell(&self.spec, Some(self.cutoff), cutoff, caps, self.classes.len())?;
        let start = self.classes.len();
        self.classes.append(&mut shell);
        self.cutoff = cutoff;
        Ok(&self.classes[start..])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair,index,length,sq_num,sq_den\n");
        for c in &self.classes {
            let (num, den) = match &c.sq_length {
                Some(q) => (q.numer().to_string(), q.denom().to_string()),
                None => (String::new(), String::new()),
            };
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                c.pair,
                c.index_label(),
                crate::export::fmt17(c.length),
                num,
                den
            ));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        use crate::export::num17;
        let rows: Vec<serde_json::Value> = self
            .classes
            .iter()
            .map(|c| {
                serde_json::json!({
                    "pair": c.pair.as_str(),
                    "index": c.index,
                    "length": num17(c.length),
                    "sq_num": c.sq_length.as_ref().map(|q| q.numer().to_string()),
                    "sq_den": c.sq_length.as_ref().map(|q| q.denom().to_string()),
                })
            })
            .collect();
        serde_json::json!({
            "manifold": self.spec.name(),
            "cutoff": num17(self.cutoff),
            "classes": rows,
        })
    }
}

/// Every geodesic class of each pair type with length `≤ cutoff`, canonically sorted.
pub fn enumerate_lengths(spec: &ManifoldSpec, cutoff: f64) -> Result<LengthSpectrum> {
    enumerate_lengths_with(spec, cutoff, &Caps::default())
}

pub fn enumerate_lengths_with(spec: &ManifoldSpec, cutoff: f64, caps: &Caps) -> Result<LengthSpectrum> {
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::Precondition(format!("cutoff {cutoff} must be finite and >= 0")));
    }
    let classes = enumerate_shell(spec, None, cutoff, caps, 0)?;
    Ok(LengthSpectrum {
        spec: spec.clone(),
        cutoff,
        classes,
    })
}

/// Classes with `lo < length ≤ hi`, canonically sorted. `already` counts
/// classes held elsewhere against the class cap.
pub(crate) fn enumerate_shell(
    spec: &ManifoldSpec,
    lo: Option<f64>,
    hi: f64,
    caps: &Caps,
    already: usize,
) -> Result<Vec<GeodesicClass>> {
    let shell = Shell { lo, hi };
    let mut out = Vec::new();
    match spec.geometry() {
        Geometry::Cylinder { a, b } => cylinder(a, b, shell, caps.classes, already, &mut out)?,
        Geometry::Torus2 { a, b, c, d } => {
            let zero = Scalar::integer(0);
            for pair in [Pair::AA, Pair::BB] {
                let axes = [
                    Axis { offset: &zero, period: a, signed: false },
                    Axis { offset: &zero, period: b, signed: false },
                ];
                lattice::enumerate(pair, &axes, shell, caps.classes, already + out.len(), &mut out)?;
            }
            let axes = [
                Axis { offset: c, period: a, signed: true },
                Axis { offset: d, period: b, signed: true },
            ];
            lattice::enumerate(Pair::AB, &axes, shell, caps.classes, already + out.len(), &mut out)?;
        }
        Geometry::Torus3 { a, b, c, d, e, f } => {
            let zero = Scalar::integer(0);
            for pair in [Pair::AA, Pair::BB] {
                let axes = [
                    Axis { offset: &zero, period: a, signed: false },
                    Axis { offset: &zero, period: b, signed: false },
                    Axis { offset: &zero, period: c, signed: false },
                ];
                lattice::enumerate(pair, &axes, shell, caps.classes, already + out.len(), &mut out)?;
            }
            let axes = [
                Axis { offset: d, period: a, signed: true },
                Axis { offset: e, period: b, signed: true },
                Axis { offset: f, period: c, signed: true },
            ];
            lattice::enumerate(Pair::AB, &axes, shell, caps.classes, already + out.len(), &mut out)?;
        }
        Geometry::Abstract(lists) => {
            for (pair, list) in [(Pair::AA, &lists.aa), (Pair::AB, &lists.ab), (Pair::BB, &lists.bb)] {
                for (i, s) in list.iter().enumerate() {
                    let class = GeodesicClass {
                        pair,
                        index: vec![i as i64],
                        length: s.value(),
                        sq_length: s.square().cloned(),
                    };
                    if class.length_le(hi) && lo.is_none_or(|lo| !class.length_le(lo)) {
                        if already + out.len() >= caps.classes {
                            return Err(Error::ClassCap { cap: caps.classes });
                        }
                        out.push(class);
                    }
                }
            }
        }
        Geometry::Parametric { .. } => {
            return Err(Error::Unsupported(
                "a parametric manifold has no explicit length spectrum".into(),
            ))
        }
    }
    out.sort_by(GeodesicClass::canonical_cmp);
    Ok(out)
}

fn cylinder(a: &Scalar, b: &Scalar, shell: Shell, cap: usize, already: usize, out: &mut Vec<GeodesicClass>) -> Result<()> {
    let exact = a.square().zip(b.square());
    let hi_sq = BigRational::from_float(shell.hi).map(|h| &h * &h);
    let lo_sq = shell.lo.and_then(BigRational::from_float).map(|l| &l * &l);
    let in_shell = |len: f64, sq: Option<&BigRational>| match (sq, &hi_sq) {
        (Some(s), Some(h)) => s <= h && lo_sq.as_ref().is_none_or(|l| s > l),
        _ => len <= shell.hi && shell.lo.is_none_or(|l| len > l),
    };
    let mut push = |class: GeodesicClass| -> Result<()> {
        if already + out.len() >= cap {
            return Err(Error::ClassCap { cap });
        }
        out.push(class);
        Ok(())
    };
    // One loop of time b at each gluing point.
    if in_shell(b.value(), b.square()) {
        for pair in [Pair::AA, Pair::BB] {
            push(GeodesicClass {
                pair,
                index: Vec::new(),
                length: b.value(),
                sq_length: b.square().cloned(),
            })?;
        }
    }
    let (av, bv) = (a.value(), b.value());
    let k_start = match shell.lo {
        Some(lo) if lo > av => ((lo * lo - av * av).max(0.0).sqrt() / bv).floor() as i64 - 1,
        _ => 0,
    }
    .max(0);
    let mut k = k_start;
    loop {
        let kf = k as f64;
        let len = ((kf * bv).powi(2) + av * av).sqrt();
        if len > shell.hi * (1.0 + 1e-9) + 1e-12 {
            break;
        }
        let sq = exact.map(|(a2, b2)| a2 + b2 * BigRational::from_integer((k * k).into()));
        if in_shell(len, sq.as_ref()) {
            let length = sq.as_ref().map_or(len, |s| ratio_to_f64(s).sqrt());
            push(GeodesicClass {
                pair: Pair::AB,
                index: vec![k],
                length,
                sq_length: sq,
            })?;
        }
        k += 1;
    }
    Ok(())
}

/// `(c0, gamma)` of the counting-function asymptotics `ρ(λ) ~ c0 λ^(1+gamma)`
/// for the families entering the closed-form constants (connecting geodesics plus one family of loops).
pub fn closed_form_params(spec: &ManifoldSpec) -> Result<(f64, f64)> {
    use std::f64::consts::PI;
    match spec.geometry() {
        Geometry::Cylinder { b, .. } => Ok((1.0 / b.value(), 0.0)),
        Geometry::Torus2 { a, b, .. } => Ok((5.0 * PI / (4.0 * a.value() * b.value()), 1.0)),
        Geometry::Torus3 { a, b, c, .. } => Ok((3.0 * PI / (2.0 * a.value() * b.value() * c.value()), 2.0)),
        Geometry::Parametric { c0, gamma } => Ok((*c0, *gamma)),
        Geometry::Abstract(_) => Err(Error::Unsupported(
            "explicit abstract spectra have no closed-form counting parameters; fit them instead".into(),
        )),
    }
}

impl fmt::Display for GeodesicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}] {}", self.pair, self.index_label(), self.length)?;
        if let Some(sq) = &self.sq_length {
            write!(f, " (sq {})", fmt_ratio(sq))?;
        }
        Ok(())
    }
}
