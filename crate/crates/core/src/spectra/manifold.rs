use num_traits::Signed;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which flat manifold the segment is glued to, with its geometry.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Geometry {
    /// Circular cylinder of circumference `b`; `A` and `B` lie on one ruling at distance `a`.
    Cylinder { a: Scalar, b: Scalar },
    /// Flat 2-torus with periods `a`, `b`; `A = (0,0)`, `B = (c,d)`.
    Torus2 {
        a: Scalar,
        b: Scalar,
        c: Scalar,
        d: Scalar,
    },
    /// Flat 3-torus with periods `a`, `b`, `c`; `A = 0`, `B = (d,e,f)`.
    Torus3 {
        a: Scalar,
        b: Scalar,
        c: Scalar,
        d: Scalar,
        e: Scalar,
        f: Scalar,
    },
    /// Explicit finite length lists for the three endpoint pairs.
    Abstract(AbstractLengths),
    /// Only the counting-function asymptotics `c0 · λ^(1+gamma)` are known.
    Parametric { c0: f64, gamma: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AbstractLengths {
    pub aa: Vec<Scalar>,
    pub ab: Vec<Scalar>,
    pub bb: Vec<Scalar>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSpec {
    geometry: Geometry,
    segment_time: Scalar,
}

fn positive(name: &str, s: &Scalar) -> Result<()> {
    if s.is_positive() && s.value().is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive(format!("{name} = {s}")))
    }
}

fn offset(name: &'static str, s: &Scalar, period: &Scalar) -> Result<()> {
    let inside = match (s.exact(), period.exact()) {
        (Some(x), Some(p)) => !x.is_negative() && x < p,
        _ => s.value() >= 0.0 && s.value() < period.value(),
    };
    if inside && s.value().is_finite() {
        Ok(())
    } else {
        Err(Error::OffsetOutOfDomain {
            name,
            value: s.value(),
            period: period.value(),
        })
    }
}

fn sorted_positive(name: &str, list: &[Scalar]) -> Result<()> {
    for (i, s) in list.iter().enumerate() {
        positive(&format!("{name}[{i}]"), s)?;
    }
    if list.windows(2).any(|w| w[0].value() > w[1].value()) {
        return Err(Error::InvalidSpec(format!("{name} lengths must be sorted ascending")));
    }
    Ok(())
}

impl ManifoldSpec {
    pub fn new(geometry: Geometry, segment_time: Scalar) -> Result<Self> {
        positive("L", &segment_time)?;
        match &geometry {
            Geometry::Cylinder { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
            }
            Geometry::Torus2 { a, b, c, d } => {
                positive("a", a)?;
                positive("b", b)?;
                offset("c", c, a)?;
                offset("d", d, b)?;
                if c.is_zero() && d.is_zero() {
                    return Err(Error::InvalidSpec("B = (c,d) coincides with A = (0,0)".into()));
                }
            }
            Geometry::Torus3 { a, b, c, d, e, f } => {
                positive("a", a)?;
                positive("b", b)?;
                positive("c", c)?;
                offset("d", d, a)?;
                offset("e", e, b)?;
                offset("f", f, c)?;
                if d.is_zero() && e.is_zero() && f.is_zero() {
                    return Err(Error::InvalidSpec("B = (d,e,f) coincides with A = (0,0,0)".into()));
                }
            }
            Geometry::Abstract(lists) => {
                sorted_positive("AA", &lists.aa)?;
                sorted_positive("AB", &lists.ab)?;
                sorted_positive("BB", &lists.bb)?;
            }
            Geometry::Parametric { c0, gamma } => {
                if !(c0.is_finite() && *c0 > 0.0) {
                    return Err(Error::NonPositive(format!("c0 = {c0}")));
                }
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(Error::Domain(format!("gamma = {gamma} must be >= 0")));
                }
            }
        }
        Ok(ManifoldSpec { geometry, segment_time })
    }

    pub fn cylinder(a: impl Into<Scalar>, b: impl Into<Scalar>, l: impl Into<Scalar>) -> Result<Self> {
        ManifoldSpec::new(
            Geometry::Cylinder { a: a.into(), b: b.into() },
            l.into(),
        )
    }

    pub fn torus2(
        a: impl Into<Scalar>,
        b: impl Into<Scalar>,
        c: impl Into<Scalar>,
        d: impl Into<Scalar>,
        l: impl Into<Scalar>,
    ) -> Result<Self> {
        ManifoldSpec::new(
            Geometry::Torus2 {
                a: a.into(),
                b: b.into(),
                c: c.into(),
                d: d.into(),
            },
            l.into(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn torus3(
        a: impl Into<Scalar>,
        b: impl Into<Scalar>,
        c: impl Into<Scalar>,
        d: impl Into<Scalar>,
        e: impl Into<Scalar>,
        f: impl Into<Scalar>,
        l: impl Into<Scalar>,
    ) -> Result<Self> {
        ManifoldSpec::new(
            Geometry::Torus3 {
                a: a.into(),
                b: b.into(),
                c: c.into(),
                d: d.into(),
                e: e.into(),
                f: f.into(),
            },
            l.into(),
        )
    }

    pub fn abstract_lengths(lists: AbstractLengths, l: impl Into<Scalar>) -> Result<Self> {
        ManifoldSpec::new(Geometry::Abstract(lists), l.into())
    }

    pub fn parametric(c0: f64, gamma: f64, l: impl Into<Scalar>) -> Result<Self> {
        ManifoldSpec::new(Geometry::Parametric { c0, gamma }, l.into())
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn segment_time(&self) -> &Scalar {
        &self.segment_time
    }

    pub fn name(&self) -> &'static str {
        match self.geometry {
            Geometry::Cylinder { .. } => "cylinder",
            Geometry::Torus2 { .. } => "torus2",
            Geometry::Torus3 { .. } => "torus3",
            Geometry::Abstract(_) => "abstract",
            Geometry::Parametric { .. } => "parametric",
        }
    }
}
