//! Acceptance criteria, one line each. Run with
//! `cargo test -p qtraj-cli --test acceptance`.

use std::f64::consts::PI;
use std::process::Command;

use qtraj_core::{
    bd_velocity, convert_params, find_singularities, group_velocity, group_velocity_by_difference,
    legendre_dual_check, quantum_transform, reciprocal_group_velocity, time_of_position, trace_bd,
    BdOptions, Error, Interval, Microstate, PhysicalConstants, Potential, ReducedAction, Velocity,
};

/// `(E, a, b, x0)` drawn once, uniformly, with `a` in [0.5, 3] and `b` in [-2, 2].
const MICROSTATES: [(f64, f64, f64, f64); 5] = [
    (0.5, 2.0, 0.5, 0.0),
    (0.8, 0.62, -1.37, 0.4),
    (1.3, 2.71, 1.08, -1.1),
    (0.35, 1.44, -0.23, 2.0),
    (2.0, 0.93, 1.86, 0.0),
];

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn free(e: f64, a: f64, b: f64, x0: f64) -> ReducedAction {
    ReducedAction::free(
        PhysicalConstants::natural(),
        Microstate::new(e, a, b, x0).unwrap(),
    )
    .unwrap()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    Interval::new(lo, hi).unwrap().linspace(n)
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn within(label: &str, value: f64, tol: f64) -> Verdict {
    let text = format!("{label} = {value:.3e} (tol {tol:.0e})");
    if value <= tol {
        Ok(text)
    } else {
        Err(text)
    }
}

fn all(parts: Vec<Verdict>) -> Verdict {
    let pass = parts.iter().all(|p| p.is_ok());
    let text = parts
        .into_iter()
        .map(|p| p.unwrap_or_else(|e| e))
        .collect::<Vec<_>>()
        .join("; ");
    if pass {
        Ok(text)
    } else {
        Err(text)
    }
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

fn classical_reduction() -> Verdict {
    let mut worst_group = 0.0f64;
    let mut worst_bd = 0.0f64;
    for e in [0.25, 0.5, 2.0] {
        let ra = free(e, 1.0, 0.0, 0.0);
        let v = (2.0 * e).sqrt();
        for x in grid(-50.0, 50.0, 1000) {
            worst_group = worst_group.max((group_velocity(&ra, x).unwrap().value() - v).abs());
            worst_bd = worst_bd.max((bd_velocity(&ra, x).unwrap() - v).abs());
        }
    }
    all(vec![
        within("max|v_group - v|", worst_group, 1e-10),
        within("max|v_bd - v|", worst_bd, 1e-10),
    ])
}

fn jacobi() -> Verdict {
    let mut worst = 0.0f64;
    for (e, a, b, x0) in MICROSTATES {
        let ra = free(e, a, b, x0);
        for x in grid(x0 - 7.0, x0 + 9.0, 20) {
            let t = time_of_position(&ra, x).unwrap() - ra.microstate().t0;
            worst = worst.max(rel(t, ra.s0_energy_derivative(x).unwrap().value));
        }
    }
    within("max relative |t - t0 - dS0/dE|, 5 x 20", worst, 1e-6)
}

fn group_velocity_routes() -> Verdict {
    let mut worst_route = 0.0f64;
    let mut worst_product = 0.0f64;
    for (e, a, b, x0) in MICROSTATES {
        let ra = free(e, a, b, x0);
        let span = Interval::new(x0 - 10.0, x0 + 10.0).unwrap();
        let singular = find_singularities(&ra, span).unwrap();
        for x in span.linspace(400) {
            if singular.is_near(x) {
                continue;
            }
            let closed = group_velocity(&ra, x).unwrap().value();
            let fd = group_velocity_by_difference(&ra, x).unwrap().value();
            worst_route = worst_route.max(rel(closed, fd));
            let h = 1e-4;
            let dtdx = (time_of_position(&ra, x + h).unwrap()
                - time_of_position(&ra, x - h).unwrap())
                / (2.0 * h);
            worst_product = worst_product.max((dtdx * closed - 1.0).abs());
        }
    }
    all(vec![
        within("max relative closed vs mixed partial", worst_route, 1e-6),
        within("max|dt/dx * v - 1|", worst_product, 1e-5),
    ])
}

fn qshje() -> Verdict {
    let mut worst_free = 0.0f64;
    let mut worst_numeric = 0.0f64;
    for (e, a, b, x0) in MICROSTATES {
        let ra = free(e, a, b, x0);
        for x in grid(x0 - 20.0, x0 + 20.0, 401) {
            worst_free = worst_free.max(ra.qshje_residual(x).unwrap().abs());
        }
        let ra = ReducedAction::numeric(
            PhysicalConstants::natural(),
            Potential::harmonic(1.0, 0.0).unwrap(),
            Microstate::new(0.5, a, b, 0.0).unwrap(),
            Interval::new(-4.0, 4.0).unwrap(),
            1e-3,
        )
        .unwrap();
        for x in grid(-3.5, 3.5, 281) {
            worst_numeric = worst_numeric.max(ra.qshje_residual(x).unwrap().abs());
        }
    }
    all(vec![
        within("free max residual", worst_free, 1e-9),
        within("harmonic numeric max residual", worst_numeric, 1e-6),
    ])
}

fn action_rate() -> Verdict {
    let mut worst = 0.0f64;
    for (e, a, b, x0) in MICROSTATES {
        let ra = free(e, a, b, x0);
        let tr = trace_bd(
            &ra,
            Interval::new(0.0, 10.0).unwrap(),
            0.05,
            BdOptions::default(),
        )
        .unwrap();
        let s_start = ra.s0(x0).unwrap();
        for s in &tr.samples {
            worst = worst.max((ra.s0(s.x).unwrap() - s_start - 2.0 * e * s.t).abs());
        }
    }
    within("max|S0(x(t)) - S0(x0) - 2Et|, t in [0,10]", worst, 1e-6)
}

fn round_trip() -> Verdict {
    let mut worst = 0.0f64;
    for (e, a, b, x0) in MICROSTATES {
        let p = convert_params(a, b).unwrap();
        let ra35 = free(e, p.a35, p.b35, x0);
        let t_start = (-b / a).atan() / (2.0 * e);
        let tr = trace_bd(
            &ra35,
            Interval::new(t_start, t_start + 10.0).unwrap(),
            0.1,
            BdOptions::default(),
        )
        .unwrap();
        let anchor = ra35.s0(x0).unwrap();
        for s in &tr.samples {
            let recovered = t_start + (ra35.s0(s.x).unwrap() - anchor) / (2.0 * e);
            worst = worst.max((recovered - s.t).abs());
        }
    }
    within("max|t recovered - t traced|", worst, 1e-6)
}

fn nonlocality() -> Verdict {
    let ra = free(0.5, 2.0, 0.0, 0.0);
    let set = find_singularities(&ra, Interval::new(10.0 * PI, 12.0 * PI).unwrap()).unwrap();
    let mut worst = 0.0f64;
    let mut finite = true;
    for r in &set.roots {
        finite &= r.transit_time.is_finite();
        let recip = |x: f64| reciprocal_group_velocity(&ra, x).unwrap();
        let bracket = simpson(recip, r.bracket.lo(), r.bracket.hi(), 2);
        worst = worst.max((r.transit_time - bracket).abs());
        let (lo, hi) = (r.scan_bracket.lo(), r.scan_bracket.hi());
        let window = time_of_position(&ra, hi).unwrap() - time_of_position(&ra, lo).unwrap();
        worst = worst.max((window - simpson(recip, lo, hi, 2000)).abs());
        finite &= window.is_finite();
        finite &= group_velocity(&ra, r.x_star).unwrap() == Velocity::Infinite;
    }
    let count = set.roots.len();
    let base = within("max|transit - quadrature of 1/v_group|", worst, 1e-4);
    let extra = format!("{count} roots on [10pi, 12pi], transit finite: {finite}");
    match (base, count >= 1 && finite) {
        (Ok(t), true) => Ok(format!("{extra}; {t}")),
        (Ok(t), false) | (Err(t), _) => Err(format!("{extra}; {t}")),
    }
}

fn transform() -> Verdict {
    let ra = free(0.5, 1.0, 0.0, 0.0);
    let mut worst = 0.0f64;
    for x_ref in [-3.0, 0.0, 2.5] {
        for x in grid(-20.0, 20.0, 41) {
            worst = worst
                .max((quantum_transform(&ra, x_ref, x, 1e-12, 1e-10).unwrap() - (x - x_ref)).abs());
        }
    }
    let harmonic = ReducedAction::numeric(
        PhysicalConstants::natural(),
        Potential::harmonic(1.0, 0.0).unwrap(),
        Microstate::new(0.5, 1.0, 0.0, 0.0).unwrap(),
        Interval::new(-3.0, 3.0).unwrap(),
        1e-3,
    )
    .unwrap();
    let paths = [(0.0, 2.0), (0.0, -1.5), (1.5, 2.5), (-0.5, 1.0), (2.0, 0.0)];
    let refused = paths
        .iter()
        .filter(|(a, b)| {
            matches!(
                quantum_transform(&harmonic, *a, *b, 1e-10, 1e-10),
                Err(Error::ForbiddenRegion { .. })
            )
        })
        .count();
    let base = within("classical max|x_hat - (x - x_ref)|", worst, 1e-10);
    let text = format!("{refused}/{} forbidden paths refused", paths.len());
    match base {
        Ok(t) if refused == paths.len() => Ok(format!("{t}; {text}")),
        Ok(t) | Err(t) => Err(format!("{t}; {text}")),
    }
}

fn legendre() -> Verdict {
    let mut worst = 0.0f64;
    for (e, a, b, x0) in MICROSTATES {
        let ra = free(e, a, b, x0);
        for x in grid(x0 - 4.0, x0 + 5.0, 10) {
            for entry in legendre_dual_check(&ra, x, 1e-6).unwrap().entries {
                worst = worst.max(entry.residual);
            }
        }
    }
    within("max Legendre residual, 5 x 10", worst, 1e-6)
}

fn involution_and_anchor() -> Verdict {
    // Exactness holds when 1/(1/a) rounds back to a; these values do.
    let exact_set = [
        (1.0, 0.0),
        (2.0, 0.5),
        (1.5, -1.0),
        (0.7, 1.2),
        (3.0, 0.25),
        (0.5, -2.0),
    ];
    let exact = exact_set.iter().all(|&(a, b)| {
        let once = convert_params(a, b).unwrap();
        let twice = convert_params(once.a35, once.b35).unwrap();
        twice.a35 == a && twice.b35 == b
    });
    let mut worst = 0.0f64;
    for (e, a, b, x0) in MICROSTATES {
        let ra = free(e, a, b, x0);
        worst = worst
            .max((group_velocity(&ra, x0).unwrap().value() - bd_velocity(&ra, x0).unwrap()).abs());
    }
    // For context: worst deviation over random draws, in units in the last place.
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut ulps = 0u64;
    for _ in 0..10_000 {
        let (a, b) = (0.5 + 2.5 * next(), -2.0 + 4.0 * next());
        let once = convert_params(a, b).unwrap();
        let twice = convert_params(once.a35, once.b35).unwrap();
        ulps = ulps
            .max(twice.a35.to_bits().abs_diff(a.to_bits()))
            .max(twice.b35.to_bits().abs_diff(b.to_bits()));
    }
    let anchor = within("max|v_group - v_bd| at x0", worst, 1e-9);
    let text = format!(
        "involution exact on {} listed pairs: {exact} (random draws: <= {ulps} ulp)",
        exact_set.len()
    );
    match anchor {
        Ok(t) if exact => Ok(format!("{text}; {t}")),
        Ok(t) | Err(t) => Err(format!("{text}; {t}")),
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "E = 0.5\na = 2\nb = 0.5\nx0 = 0\n[potential]\nkind = \"free\"\n\
         [grid]\nx_min = -5\nx_max = 15\nsamples = 201\nt_min = 0\nt_max = 10\nstep = 0.05\n",
    )
    .map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().unwrap();
    let runs: [&[&str]; 6] = [
        &["trace", "--engine", "floyd"],
        &["trace", "--engine", "bd"],
        &["compare"],
        &["singularities"],
        &["transform"],
        &["check"],
    ];
    let mut identical = 0;
    let mut total = 0;
    for args in runs {
        for format in ["csv", "json"] {
            let once = || {
                Command::new(env!("CARGO_BIN_EXE_qtraj"))
                    .args(args)
                    .args(["--config", cfg, "--format", format])
                    .output()
                    .map(|o| (o.status.code(), o.stdout))
            };
            let (a, b) = (
                once().map_err(|e| e.to_string())?,
                once().map_err(|e| e.to_string())?,
            );
            total += 1;
            if a == b && a.0 == Some(0) && !a.1.is_empty() {
                identical += 1;
            }
        }
    }
    let text = format!("{identical}/{total} subcommand x format runs byte-identical");
    if identical == total {
        Ok(text)
    } else {
        Err(text)
    }
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("classical reduction", classical_reduction),
        ("Jacobi time parameterization", jacobi),
        ("group-velocity oracle equivalence", group_velocity_routes),
        ("QSHJE residual", qshje),
        ("conjugate-momentum action-rate law", action_rate),
        ("round trip through converted action", round_trip),
        (
            "nonlocality: finite transit across singularities",
            nonlocality,
        ),
        ("quantum transform", transform),
        ("Legendre duality", legendre),
        (
            "conversion involution and anchor coincidence",
            involution_and_anchor,
        ),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict =
            std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
