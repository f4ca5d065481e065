//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use packets::asymptotics::{gamma_fn, ln_n_asymptote, theorem_constant, zeta_fn, AsymptoticParams};
use packets::caps::Caps;
use packets::cli::{execute, Mode, RunConfig};
use packets::counter::{
    count_bounds_dp, count_distinct_sums, count_exact, refine_bounds, truncate_parts, Families, PartList,
};
use packets::eqgraph::build_equivalent_graph;
use packets::simulator::simulate_births;
use packets::spectra::{
    closed_form_params, detect_rational_dependence, enumerate_lengths, exact_dependence, AbstractLengths, ManifoldSpec,
    Pair, PairSet,
};
use packets::Scalar;

// Pinned tolerances.
const CONSTANT_TOL: f64 = 1e-10;
const SPECIAL_TOL: f64 = 1e-12;
const ZETA3_TOL: f64 = 1e-11;
const RHO_BAND: (f64, f64) = (0.97, 1.03);
const TREND_BAND: (f64, f64) = (0.6, 1.1);
const TARGET_GAP: f64 = 0.05;
const AUDIT_MAX_COEF: i64 = 16;
const AUDIT_MAX_SUBSET: usize = 3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Constant reproduction at three random parameter sets per manifold.
fn closed_form_constants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0f64;
    let mut failures = Vec::new();
    for _ in 0..3 {
        let (a, b, c) = (rng.gen_range(0.3..4.0), rng.gen_range(0.3..4.0), rng.gen_range(0.3..4.0));
        let specs = [
            ManifoldSpec::cylinder(a, b, 1.0).unwrap(),
            ManifoldSpec::torus2(a, b, 0.25 * a, 0.5 * b, 1.0).unwrap(),
            ManifoldSpec::torus3(a, b, c, 0.5 * a, 0.0, 0.25 * c, 1.0).unwrap(),
        ];
        // Closed forms written out independently of the library.
        let literal = [
            PI * (2.0 / (3.0 * b)).sqrt(),
            3.0 * (5.0 * PI * 1.202_056_903_159_594_3 / (8.0 * a * b)).cbrt(),
            4.0 * (PI * PI.powi(4) / 90.0 / (3.0 * a * b * c)).powf(0.25),
        ];
        for (spec, lit) in specs.iter().zip(literal) {
            let (c0, g) = closed_form_params(spec).unwrap();
            let general = ln_n_asymptote(&AsymptoticParams::new(c0, g, 1).unwrap(), 1.0).unwrap();
            let k = theorem_constant(spec).unwrap();
            let err = rel(k, general).max(rel(k, lit));
            worst = worst.max(err);
            if err > CONSTANT_TOL {
                failures.push(format!("{} a={a:.4} b={b:.4}: {k} vs {general} vs {lit}", spec.name()));
            }
        }
    }
    let unit = theorem_constant(&ManifoldSpec::torus2(1, 1, Scalar::rational(1, 2), Scalar::rational(1, 2), 1).unwrap()).unwrap();
    if rel(unit, 3.994_289_699_344_747_8) > CONSTANT_TOL {
        failures.push(format!("torus2(1,1) constant {unit}"));
    }
    outcome(failures.is_empty(), format!("worst rel err {worst:.2e}; {}", failures.join("; ")))
}

fn sqrt2_cylinder_parts() -> ManifoldSpec {
    // {1} ∪ {√(k²+2)}: one loop of time 1 at each end, connecting times √(k²+2).
    let ab: Vec<Scalar> = (0..=14i64)
        .map(|k| format!("sqrt({})", k * k + 2).parse().unwrap())
        .collect();
    let lists = AbstractLengths {
        aa: vec![Scalar::integer(1)],
        ab,
        bb: vec![Scalar::integer(1)],
    };
    ManifoldSpec::abstract_lengths(lists, 1).unwrap()
}

/// Brute-force tuple count in `f64`; sums landing on the horizon are kept.
fn brute_tuples(parts: &[f64], t: f64) -> u64 {
    fn go(parts: &[f64], left: f64) -> u64 {
        match parts.split_first() {
            None => 1,
            Some((&p, rest)) => {
                let mut n = 0;
                let mut used = 0.0;
                while used <= left + 1e-9 {
                    n += go(rest, left - used);
                    used += p;
                }
                n
            }
        }
    }
    go(parts, t)
}

/// Simulated distinct birth times equal tuple counts once no relation is found.
fn oracle_equivalence() -> Outcome {
    let spec = sqrt2_cylinder_parts();
    let graph = build_equivalent_graph(&spec, 12.0).unwrap();
    let parts = truncate_parts(&graph, 12.0, Families::Merged).unwrap();
    let values = parts.values();
    let relations = detect_rational_dependence(&values, AUDIT_MAX_COEF, AUDIT_MAX_SUBSET).unwrap();
    let squares: Vec<_> = parts.parts().iter().map(|p| p.square.clone().unwrap()).collect();
    let exact = exact_dependence(&squares);
    let audit_clean = relations.is_empty() && !exact.is_dependent();
    let mut rows = Vec::new();
    let mut all_equal = true;
    for t in [2.0, 4.0, 6.0, 8.0, 10.0, 12.0] {
        let births = simulate_births(&graph, t).unwrap().len() as u64;
        let tuples = count_exact(&parts, t).unwrap().lower().clone();
        let brute = brute_tuples(&parts.truncated(t).values(), t);
        all_equal &= BigUint::from(births) == tuples && tuples == BigUint::from(brute);
        rows.push(format!("T={t}: births {births} tuples {tuples}"));
    }
    let first = relations.first().map(|r| format!("{r:?}")).unwrap_or_else(|| "none".into());
    outcome(
        audit_clean && all_equal,
        format!(
            "audit relations {} (first {first}), exact groups {:?}; {}",
            relations.len(),
            exact.groups,
            rows.join(", ")
        ),
    )
}

/// Distinct times fall below the tuple count for the 3-4-5 cylinder.
fn dependence_gap() -> Outcome {
    let spec = ManifoldSpec::cylinder(3, 4, 1).unwrap();
    let graph = build_equivalent_graph(&spec, 8.0).unwrap();
    let parts = truncate_parts(&graph, 8.0, Families::Merged).unwrap();
    let distinct = count_distinct_sums(&parts, 8.0, 1e-9).unwrap();
    let merged = PartList::from_scalars(&[3.into(), 4.into(), 5.into()]).unwrap();
    let tuples = count_exact(&merged, 8.0).unwrap().lower().clone();
    let births = simulate_births(&graph, 8.0).unwrap().len() as u64;
    // Oracle: every (x, y, z) with 3x + 4y + 5z ≤ 8.
    let mut sums = std::collections::BTreeSet::new();
    let mut n = 0u64;
    for x in 0..=2 {
        for y in 0..=2 {
            for z in 0..=1 {
                let s = 3 * x + 4 * y + 5 * z;
                if s <= 8 {
                    n += 1;
                    sums.insert(s);
                }
            }
        }
    }
    let pass = parts.values() == vec![3.0, 4.0, 5.0]
        && distinct == 7
        && distinct == sums.len() as u64
        && tuples == BigUint::from(8u32)
        && tuples == BigUint::from(n)
        && births == distinct;
    outcome(pass, format!("distinct {distinct}, tuples {tuples}, births {births}"))
}

/// Exact count of parts `k/1000` by a plain lattice DP.
fn lattice_count(parts: &[u32], t_milli: u32) -> u128 {
    let mut row = vec![0u128; t_milli as usize + 1];
    row[0] = 1;
    for &w in parts {
        for s in w as usize..row.len() {
            row[s] += row[s - w as usize];
        }
    }
    row.iter().sum()
}

/// Grid-rounding bounds bracket the exact count and collapse on the grid.
fn sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut failures = Vec::new();
    for trial in 0..100 {
        let n = rng.gen_range(1..=8);
        let milli: Vec<u32> = (0..n).map(|_| rng.gen_range(500..=5000)).collect();
        let t_milli = rng.gen_range(0..=30_000u32);
        let t = t_milli as f64 / 1000.0;
        let scalars: Vec<Scalar> = milli.iter().map(|&m| Scalar::rational(m as i64, 1000)).collect();
        let parts = PartList::from_scalars(&scalars).unwrap();
        // Sums s/1000 with s/1000 ≤ T, comparing against T's exact binary value.
        let limit = (BigRational::from_float(t).unwrap() * BigRational::from_integer(1000.into())).floor();
        let limit: u32 = limit.to_integer().try_into().unwrap();
        let oracle = BigUint::from(lattice_count(&milli, limit));
        let exact = count_exact(&parts, t).unwrap().lower().clone();
        if exact != oracle {
            failures.push(format!("trial {trial}: exact {exact} vs lattice {oracle} for {milli:?}/1000 at T={t}"));
        }
        for delta in [1.0, 0.1, 0.01] {
            match count_bounds_dp(&parts, t, delta) {
                Ok(b) if b.lower() <= &oracle && &oracle <= b.upper() => {}
                Ok(b) => failures.push(format!(
                    "trial {trial} δ={delta}: [{}, {}] misses {oracle}",
                    b.lower(),
                    b.upper()
                )),
                Err(e) => failures.push(format!("trial {trial} δ={delta}: {e}")),
            }
        }
    }
    // On-grid parts: bounds collapse to the exact count.
    for trial in 0..20 {
        let delta = [1.0, 0.5, 0.25][trial % 3];
        let steps: Vec<u32> = (0..rng.gen_range(1..=6)).map(|_| rng.gen_range(1..=8)).collect();
        let values: Vec<f64> = steps.iter().map(|&s| s as f64 * delta).collect();
        let t = rng.gen_range(0..=40) as f64 * delta;
        let parts = PartList::from_values(&values).unwrap();
        let exact = count_exact(&parts, t).unwrap().lower().clone();
        let b = count_bounds_dp(&parts, t, delta).unwrap();
        if b.lower() != &exact || b.upper() != &exact {
            failures.push(format!("on-grid {values:?} T={t}: [{}, {}] vs {exact}", b.lower(), b.upper()));
        }
    }
    outcome(failures.is_empty(), format!("{} failures {}", failures.len(), failures.first().cloned().unwrap_or_default()))
}

/// Counting-function growth on the torus and the cylinder floor identity.
fn counting_function_asymptotics() -> Outcome {
    let spec = ManifoldSpec::torus2(1, 1, 0.3, 0.45, 1).unwrap();
    let spectrum = enumerate_lengths(&spec, 200.0).unwrap();
    let rho = spectrum.counting_function(200.0, PairSet::AA_AB).unwrap();
    let ratio = rho as f64 * 4.0 / (5.0 * PI * 200f64.powi(2));
    let torus_ok = (RHO_BAND.0..=RHO_BAND.1).contains(&ratio);

    let mut mismatches = 0;
    for (a, b) in [(3.0, 4.0), (2f64.sqrt(), 1.0)] {
        let spec = ManifoldSpec::cylinder(a, b, 1.0).unwrap();
        let spectrum = enumerate_lengths(&spec, 120.0).unwrap();
        for i in 0..1000 {
            let lambda = 0.0173 + i as f64 * 0.11987;
            let got = spectrum.counting_function(lambda, PairSet::only(Pair::AB)).unwrap();
            let want = if lambda < a { 0 } else { ((lambda * lambda - a * a).sqrt() / b).floor() as u64 + 1 };
            if got != want {
                mismatches += 1;
            }
        }
    }
    outcome(
        torus_ok && mismatches == 0,
        format!("torus ratio {ratio:.5} (rho {rho}); cylinder mismatches {mismatches}/2000"),
    )
}

/// ln-count bounds track the leading asymptote at desk scale.
fn asymptotic_trend() -> Outcome {
    let spec = ManifoldSpec::cylinder("sqrt(2)".parse::<Scalar>().unwrap(), 1, 1).unwrap();
    let graph = build_equivalent_graph(&spec, 400.0).unwrap();
    let mut mids = BTreeMap::new();
    let mut in_band = true;
    let mut rows = Vec::new();
    for t in [100.0, 200.0, 400.0] {
        let parts = truncate_parts(&graph, t, Families::Merged).unwrap();
        let refined = match refine_bounds(&parts, t, TARGET_GAP).and_then(|r| r.require_converged(TARGET_GAP)) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("T={t}: {e}")),
        };
        let asym = PI * (2.0 * t / 3.0).sqrt();
        let (lo, hi) = (refined.ln_lower() / asym, refined.ln_upper() / asym);
        in_band &= (TREND_BAND.0..=TREND_BAND.1).contains(&lo) && (TREND_BAND.0..=TREND_BAND.1).contains(&hi);
        mids.insert(t as u32, 0.5 * (lo + hi));
        rows.push(format!("T={t}: [{lo:.4}, {hi:.4}] gap {:.4}", refined.gap()));
    }
    let closer = (mids[&400] - 1.0).abs() < (mids[&100] - 1.0).abs();
    outcome(in_band && closer, rows.join(", "))
}

/// ζ(3) from the central binomial series, independent of the library's method.
fn zeta3_series() -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    for n in 1..=40u32 {
        let n_f = n as f64;
        binom *= (2.0 * n_f - 1.0) * 2.0 / n_f;
        let term = 1.0 / (n_f.powi(3) * binom);
        sum += if n % 2 == 1 { term } else { -term };
    }
    2.5 * sum
}

fn special_functions() -> Outcome {
    let checks = [
        ("Γ(2)", gamma_fn(2.0).unwrap(), 1.0, SPECIAL_TOL),
        ("Γ(4)", gamma_fn(4.0).unwrap(), 6.0, SPECIAL_TOL),
        ("ζ(2)", zeta_fn(2.0).unwrap(), PI * PI / 6.0, SPECIAL_TOL),
        ("ζ(4)", zeta_fn(4.0).unwrap(), PI.powi(4) / 90.0, SPECIAL_TOL),
        ("ζ(3)", zeta_fn(3.0).unwrap(), zeta3_series(), ZETA3_TOL),
    ];
    let bad: Vec<String> = checks
        .iter()
        .filter(|(_, got, want, tol)| rel(*got, *want) > *tol)
        .map(|(name, got, want, _)| format!("{name} {got} vs {want}"))
        .collect();
    let worst = checks.iter().map(|(_, g, w, _)| rel(*g, *w)).fold(0.0, f64::max);
    outcome(bad.is_empty(), format!("worst rel err {worst:.2e} {}", bad.join("; ")))
}

fn compare_args() -> Vec<&'static str> {
    vec!["--manifold", "cylinder", "--a", "sqrt(2)", "--b", "1", "--grid", "0,8,25,100"]
}

/// Repeated compare runs write identical bytes.
fn determinism() -> Outcome {
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_packets"))
            .arg("compare")
            .args(compare_args())
            .arg("--out")
            .arg(d.path())
            .env_remove("PACKETS_CAPS")
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("compare exited with {status}"));
        }
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("compare.csv")).unwrap();
    let same_cli = read(&dirs[0]) == read(&dirs[1]);
    let settings: BTreeMap<String, String> = compare_args()
        .chunks(2)
        .map(|kv| (kv[0].trim_start_matches("--").to_string(), kv[1].to_string()))
        .collect();
    let cfg = RunConfig::from_settings(Mode::Compare, settings, Caps::default()).unwrap();
    let a = execute(&cfg).unwrap();
    let b = execute(&cfg).unwrap();
    let same_lib = a.files == b.files && a.files[0].1 == read(&dirs[0]);
    outcome(same_cli && same_lib, format!("cli identical {same_cli}, in-process identical {same_lib}"))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("constant reproduction", Duration::from_secs(1), closed_form_constants),
        ("oracle equivalence", Duration::from_secs(60), oracle_equivalence),
        ("dependence gap", Duration::from_secs(5), dependence_gap),
        ("sandwich property", Duration::from_secs(120), sandwich),
        ("counting-function asymptotics", Duration::from_secs(60), counting_function_asymptotics),
        ("asymptotic trend", Duration::from_secs(600), asymptotic_trend),
        ("special functions", Duration::from_secs(1), special_functions),
        ("determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *limit;
        if !pass {
            failed += 1;
        }
        println!(
            "acceptance {}: {} {name} ({:.2}s, limit {}s) {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            out.detail
        );
    }
    println!("acceptance summary: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
