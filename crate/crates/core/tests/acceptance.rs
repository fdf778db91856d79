//! One line per acceptance criterion; exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use circeq::circlemath::conjugate_function;
use circeq::density::{full_circle_density, Formula, general_density, polynomial_density, trig_density};
use circeq::field::WeightZero;
use circeq::oracle::{extract_support, minimize_energy, EnergyMatrix, OracleOptions, OracleStart, SUPPORT_THRESHOLD};
use circeq::support::{detect_full_circle, EndpointSystem, SolveOptions};
use circeq::verify::{full_report, residual_report, solve_with_retries, PipelineOptions, Tolerances};
use circeq::{ArcSet, Complex64, ExternalField, PolynomialWeight, TrigExponentialWeight, TAU};

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn poly(r: f64) -> ExternalField {
    ExternalField::Polynomial(PolynomialWeight::single(Complex64::new(r, 0.0), 1.0).unwrap())
}

fn sup<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn classical() -> Outcome {
    let (s, r) = full_report(&ExternalField::uniform(), &PipelineOptions::default()).unwrap();
    let f = sup(s.profile.samples().into_iter().map(|(_, f)| (f - 1.0 / TAU).abs()));
    let worst = f.max(s.robin.abs()).max(s.energy.abs()).max((s.capacity - 1.0).abs());
    outcome(s.support.is_full_circle() && r.pass && worst < 1e-10, format!("max deviation {worst:.2e}"))
}

fn full_circle_formula() -> Outcome {
    let field = poly(3.0);
    let n = 4096;
    let p = full_circle_density(&field, n).unwrap();
    let at_pi = (p.eval(PI) - 3.0 / (4.0 * PI)).abs();
    let at_zero = p.eval(0.0).abs();
    let run = minimize_energy(&field, n, &OracleOptions::default()).unwrap();
    let density = run.measure.density();
    let err = sup((0..n).map(|j| (density[j] - p.eval(run.measure.theta(j))).abs()));
    outcome(
        at_pi < 1e-10 && at_zero < 1e-10 && err < 5e-3,
        format!("|f(π) - 3/4π| {at_pi:.2e}, |f(0)| {at_zero:.2e}, oracle sup error {err:.2e}"),
    )
}

fn transitions() -> Outcome {
    let full = |f: &ExternalField| detect_full_circle(f, 4096).unwrap().is_full_circle();
    let poly_flip = !full(&poly(2.99)) && full(&poly(3.01));
    let trig_flip = full(&ExternalField::cosine(0.49)) && !full(&ExternalField::cosine(0.51));
    outcome(poly_flip && trig_flip, format!("r in (2.99, 3.01): {poly_flip}, c in (0.49, 0.51): {trig_flip}"))
}

struct ArcCase {
    field: ExternalField,
    support: ArcSet,
}

fn solve_arc_case(field: ExternalField) -> (ArcCase, Vec<String>, bool) {
    let n = 4096;
    let run = minimize_energy(&field, n, &OracleOptions::default()).unwrap();
    let guess = extract_support(&run.measure, SUPPORT_THRESHOLD).unwrap();
    let report = solve_with_retries(&field, guess.clone(), &SolveOptions::default()).unwrap();
    let support = report.support();
    let res = EndpointSystem::new(&field, Formula::preferred(&field)).residuals(&support.flat_endpoints()).unwrap().norms();
    let step = TAU / n as f64;
    let oracle_dist = guess.endpoint_distance(&support).unwrap_or(f64::INFINITY);
    let profile = circeq::density::density_for(&field, &support, n).unwrap();
    let samples = profile.resampled(n);
    let adjacent = samples[1].1.max(samples[samples.len() - 2].1);
    let mass = (profile.mass() - 1.0).abs();
    let mut notes = vec![
        format!("residuals moment {:.1e} gap {:.1e} mass {:.1e}", res.moment, res.gap, res.mass),
        format!("oracle endpoints within {:.2} grid steps", oracle_dist / step),
        format!("endpoint-adjacent density {adjacent:.1e}"),
        format!("mass error {mass:.1e}"),
    ];
    let mut ok = res.max() < 1e-8 && oracle_dist <= 2.0 * step && adjacent < 1e-3 && mass < 1e-8;
    if support.len() == 1 {
        let a = support.arcs()[0];
        let sym = (a.alpha + a.beta - TAU).abs();
        notes.insert(1, format!("symmetry {sym:.1e}"));
        ok &= sym < 1e-9;
    }
    (ArcCase { field, support }, notes, ok)
}

fn proper_arc() -> Outcome {
    let (case, notes, ok) = solve_arc_case(poly(2.0));
    outcome(ok && case.support.len() == 1, notes.join(", "))
}

fn cross_validation() -> Outcome {
    let (a, _, _) = solve_arc_case(poly(2.0));
    let (b, _, _) = solve_arc_case(ExternalField::cosine(1.0));
    let compare = |c: &ArcCase, closed: circeq::DensityProfile| {
        let general = general_density(&c.field, &c.support).unwrap();
        sup(closed.interior_angles().into_iter().map(|t| (closed.eval(t) - general.eval(t)).abs()))
    };
    let ExternalField::Polynomial(pw) = &a.field else { unreachable!() };
    let ExternalField::Trig(tw) = &b.field else { unreachable!() };
    let e1 = compare(&a, polynomial_density(pw, &a.support).unwrap());
    let e2 = compare(&b, trig_density(tw, &b.support).unwrap());
    outcome(e1 < 1e-7 && e2 < 1e-7, format!("polynomial vs general {e1:.2e}, trig vs general {e2:.2e}"))
}

fn shipped_fields() -> Vec<(String, ExternalField)> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let field = circeq::io::parse_field(&v["field"].to_string()).unwrap();
        out.push((path.file_stem().unwrap().to_string_lossy().into_owned(), field));
    }
    out
}

fn identity_suite() -> Outcome {
    let tol = Tolerances::default();
    let mut worst = [0.0f64; 5];
    let mut checked = 0;
    let mut ok = true;
    for (_, field) in shipped_fields() {
        let (s, _) = full_report(&field, &PipelineOptions::default()).unwrap();
        let r = residual_report(&s, &tol, 4096).unwrap();
        if !r.pass {
            continue;
        }
        checked += 1;
        let vals = [
            r.density_square_identity_sup.unwrap_or(0.0),
            r.conjugate_identity_sup,
            r.frostman_equality_sup,
            r.frostman_inequality_violation,
            r.imag_part_sup,
        ];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
        ok &= vals[0] < 1e-5 && vals[1] < 1e-5 && vals[2] < 1e-4 && vals[3] < 1e-6 && vals[4] < 1e-8;
    }
    outcome(
        ok && checked > 0,
        format!(
            "{checked} solutions: p = f² {:.1e}, conjugate {:.1e}, equality {:.1e}, inequality {:.1e}, imag {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn random_poly(rng: &mut ChaCha8Rng) -> ExternalField {
    let j = rng.gen_range(1..=3);
    let terms = (0..j)
        .map(|_| {
            let r = if rng.gen_bool(0.7) { rng.gen_range(1.4..3.5) } else { rng.gen_range(0.2..0.7) };
            WeightZero { zero: Complex64::from_polar(r, rng.gen_range(0.0..TAU)), lambda: rng.gen_range(0.3..1.5) }
        })
        .collect();
    ExternalField::Polynomial(PolynomialWeight::new(terms).unwrap())
}

fn random_trig(rng: &mut ChaCha8Rng) -> ExternalField {
    let m = rng.gen_range(1..=3);
    let mut c = vec![Complex64::new(rng.gen_range(-1.0..1.0), 0.0)];
    for _ in 0..m {
        c.push(Complex64::from_polar(rng.gen_range(0.05..0.8), rng.gen_range(0.0..TAU)));
    }
    ExternalField::Trig(TrigExponentialWeight::new(c).unwrap())
}

fn structural_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let options = PipelineOptions::default();
    let (mut converged, mut total, mut ok, mut rot) = (0, 0, true, 0.0f64);
    let mut failures = Vec::new();
    let mut histogram = [0usize; 5];
    for k in 0..40 {
        let field = if k < 20 { random_poly(&mut rng) } else { random_trig(&mut rng) };
        let theta0 = rng.gen_range(0.0..TAU);
        total += 1;
        let Ok((s, r)) = full_report(&field, &options) else {
            failures.push(k);
            continue;
        };
        if !r.pass {
            failures.push(k);
            continue;
        }
        converged += 1;
        histogram[if s.support.is_full_circle() { 0 } else { s.support.len().min(4) }] += 1;
        let bound = field.arc_bound().unwrap();
        if !s.support.is_full_circle() && s.support.len() > bound {
            ok = false;
        }
        match full_report(&field.rotated(theta0), &options) {
            Ok((t, _)) => match s.support.rotated(theta0).endpoint_distance(&t.support) {
                Some(d) => {
                    rot = rot.max(d);
                    ok &= d < 1e-9;
                }
                None => ok = false,
            },
            Err(_) => ok = false,
        }
    }
    outcome(
        ok && converged == total,
        format!(
            "{converged}/{total} converged, full circle {} and K = 1, 2, 3: {:?}, rotation error {rot:.1e}, unconverged {failures:?}",
            histogram[0],
            &histogram[1..4]
        ),
    )
}

fn oracle_consistency() -> Outcome {
    let field = poly(2.0);
    let n = 2048;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let a = minimize_energy(&field, n, &OracleOptions::default()).unwrap();
    let b = minimize_energy(&field, n, &OracleOptions { start: OracleStart::Weights(w), ..OracleOptions::default() }).unwrap();
    let tv = a.measure.total_variation(&b.measure);
    let monotone = [&a, &b].iter().all(|r| r.energy_trace.windows(2).all(|p| p[1] <= p[0]));

    let m = EnergyMatrix::new(256).unwrap();
    let x: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let kernel = sup(m.apply(&x).iter().zip(m.apply_dense(&x)).map(|(u, v)| (u - v).abs()));

    let mut hilbert: f64 = 0.0;
    for _ in 0..5 {
        let coeffs: Vec<(f64, f64)> = (0..=20).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f: Vec<f64> = (0..256)
            .map(|j| {
                let t = TAU * j as f64 / 256.0;
                coeffs.iter().enumerate().map(|(k, (a, b))| a * (k as f64 * t).cos() + b * (k as f64 * t).sin()).sum()
            })
            .collect();
        let mean = f.iter().sum::<f64>() / 256.0;
        let twice = conjugate_function(&conjugate_function(&f).unwrap()).unwrap();
        hilbert = hilbert.max(sup(twice.iter().zip(&f).map(|(g, f)| (g + f - mean).abs())));
    }
    outcome(
        tv < 1e-4 && monotone && kernel < 1e-10 && hilbert < 1e-10,
        format!("two-start TV {tv:.1e}, monotone {monotone}, circulant vs dense {kernel:.1e}, conjugate twice {hilbert:.1e}"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("classical case", classical, Duration::from_secs(1)),
        ("full-circle polynomial formula", full_circle_formula, Duration::from_secs(30)),
        ("support transition detection", transitions, Duration::from_secs(10)),
        ("proper-arc end to end", proper_arc, Duration::from_secs(120)),
        ("formula cross-validation", cross_validation, Duration::MAX),
        ("identity suite", identity_suite, Duration::MAX),
        ("structural bounds", structural_bounds, Duration::MAX),
        ("oracle self-consistency", oracle_consistency, Duration::MAX),
    ];
    let mut all = true;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed < *limit;
        all &= pass;
        println!(
            "criterion {}: {} {name}: {} [{:.2} s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if !all {
        eprintln!("at least one acceptance criterion failed");
        std::process::exit(1);
    }
}
