//! Leading-order asymptotics of `ln N(T)` and the special functions they need.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectra::{closed_form_params, Geometry, ManifoldSpec};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `Γ(x)` on `[0.5, 50]`. Integers are products of exact factors.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(0.5..=50.0).contains(&x) {
        return Err(Error::Domain(format!("gamma argument {x} outside [0.5, 50]")));
    }
    if x.fract() == 0.0 {
        return Ok((1..x as u32).map(f64::from).product());
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    let ln = 0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln();
    Ok(ln.exp())
}

// B₂ₖ/(2k)! for k = 1..=7.
const EM_COEFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
];

const EM_TERMS: u32 = 24;

/// `ζ(s)` for `s ≥ 1.5`: a direct sum of the first terms plus an Euler–Maclaurin tail.
pub fn zeta_fn(s: f64) -> Result<f64> {
    if !(s >= 1.5) || !s.is_finite() {
        return Err(Error::Domain(format!("zeta argument {s} below 1.5")));
    }
    let n = EM_TERMS as f64;
    let head: f64 = (1..EM_TERMS).rev().map(|k| (k as f64).powf(-s)).sum();
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // Rising factorial s(s+1)…(s+2k−2) times N^(−s−2k+1).
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, c) in EM_COEFS.iter().enumerate() {
        tail += c * rising * power;
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        power /= n * n;
    }
    Ok(head + tail)
}

/// Parameters of a counting function `ρ(λ) ≈ c₀·λ^(1+γ)`.
///
/// `family_factor` multiplies `c₀` when several spectrum families with the
/// same growth are summed; `1` for a single list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticParams {
    pub c0: f64,
    pub gamma: f64,
    pub family_factor: u32,
}

impl AsymptoticParams {
    pub fn new(c0: f64, gamma: f64, family_factor: u32) -> Result<Self> {
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::Domain(format!("c0 must be positive, got {c0}")));
        }
        if !(0.0..=48.0).contains(&gamma) {
            return Err(Error::Domain(format!("gamma must lie in [0, 48], got {gamma}")));
        }
        if family_factor == 0 {
            return Err(Error::Domain("family factor must be at least 1".into()));
        }
        Ok(AsymptoticParams {
            c0,
            gamma,
            family_factor,
        })
    }

    /// Parameters of a built-in manifold's counting function.
    pub fn for_spec(spec: &ManifoldSpec, family_factor: u32) -> Result<Self> {
        let (c0, gamma) = closed_form_params(spec)?;
        AsymptoticParams::new(c0, gamma, family_factor)
    }

    /// `(γ+1)/(γ+2)`.
    pub fn exponent(&self) -> f64 {
        (self.gamma + 1.0) / (self.gamma + 2.0)
    }

    /// Coefficient of `T^((γ+1)/(γ+2))`.
    pub fn coefficient(&self) -> Result<f64> {
        power_law_coefficient(self.family_factor as f64 * self.c0, self.gamma)
    }
}

/// `(g+2)·(k·Γ(g+2)·ζ(g+2)/(g+1)^(g+1))^(1/(g+2))`.
fn power_law_coefficient(k: f64, g: f64) -> Result<f64> {
    let inner = k * gamma_fn(g + 2.0)? * zeta_fn(g + 2.0)? / (g + 1.0).powf(g + 1.0);
    Ok((g + 2.0) * inner.powf(1.0 / (g + 2.0)))
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("T must be finite and non-negative, got {t}")));
    }
    Ok(())
}

/// Leading term of `ln N(T)`.
pub fn ln_n_asymptote(p: &AsymptoticParams, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(p.coefficient()? * t.powf(p.exponent()))
}

/// Closed-form coefficient of `ln N(T)` for a cylinder, 2-torus or 3-torus.
pub fn theorem_constant(spec: &ManifoldSpec) -> Result<f64> {
    match spec.geometry() {
        Geometry::Cylinder { b, .. } => Ok((2.0 / (3.0 * b.value())).sqrt() * PI),
        Geometry::Torus2 { a, b, .. } => {
            let inner = 5.0 * PI / (8.0 * a.value() * b.value()) * zeta_fn(3.0)?;
            Ok(3.0 * inner.cbrt())
        }
        Geometry::Torus3 { a, b, c, .. } => {
            let inner = PI / (3.0 * a.value() * b.value() * c.value()) * zeta_fn(4.0)?;
            Ok(4.0 * inner.powf(0.25))
        }
        _ => Err(Error::Unsupported(format!(
            "no closed-form constant for {} manifolds",
            spec.name()
        ))),
    }
}

/// Bound for a segment glued to a uniformly secure manifold whose connecting
/// geodesics grow like `C_g·T^q`, with all three families counted.
pub fn secure_manifold_bound(c_g: f64, q: f64, t: f64) -> Result<f64> {
    if !(c_g > 0.0) || !c_g.is_finite() {
        return Err(Error::Domain(format!("C_g must be positive, got {c_g}")));
    }
    if !(1.0..=48.0).contains(&q) {
        return Err(Error::Domain(format!("q must lie in [1, 48], got {q}")));
    }
    check_t(t)?;
    Ok(power_law_coefficient(3.0 * c_g, q)? * t.powf((q + 1.0) / (q + 2.0)))
}

/// Asymptote curve as CSV `T,ln_n_hat`.
pub fn asymptote_csv(p: &AsymptoticParams, grid: &[f64]) -> Result<String> {
    let mut out = String::from("T,ln_n_hat\n");
    for t in grid {
        let v = ln_n_asymptote(p, *t)?;
        out.push_str(&format!("{},{}\n", crate::export::fmt17(*t), crate::export::fmt17(v)));
    }
    Ok(out)
}
