//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kondolab::bath::thermal_kernel;
use kondolab::bath::BathSpec;
use kondolab::lifetimes::{critical_coupling, preset_report, threshold_exists, Preset};
use kondolab::rg::{constants_of_motion, integrate_flow, CouplingVector, FlowOptions, Terminal};
use kondolab::surface_code::{failure_census, TieBreak};
use kondolab::sweep::{parse_config, run, RunOverrides};
use kondolab::wick::{
    matching_scaling_probe, matching_sum, stirling_ratio, MatchingProblem, TrendClass,
};
use num_bigint::BigUint;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn neutral_atom_preset() -> Outcome {
    let r = preset_report(Preset::NeutralAtom, &[]).map_err(|e| e.to_string())?;
    let sites = r.check("c_tau_over_a").ok_or("missing c_tau_over_a")?;
    let g_c = r.check("g_c").ok_or("missing g_c")?;
    ensure(sites == 1e11, format!("c tau / a = {sites:e}"))?;
    ensure(g_c == 2.5e-12, format!("g_c = {g_c:e}"))?;
    let exact = &r.exact;
    ensure(
        exact
            .iter()
            .any(|(k, v)| k == "g_c" && v == "1/400000000000"),
        "exact g_c is not 1/400000000000",
    )?;
    Ok(format!("c tau/a = {sites:e}, g_c = {g_c:e} (exact)"))
}

fn stirling_path_count() -> Outcome {
    let ratio = stirling_ratio(100).map_err(|e| e.to_string())?;
    ensure((0.997..=1.005).contains(&ratio), format!("ratio {ratio}"))?;
    Ok(format!("stirling/exact at L=100 = {ratio:.6}"))
}

fn isotropic_flow_matches_pole() -> Outcome {
    let j0 = 0.05;
    let trace = integrate_flow(CouplingVector::isotropic(j0), &FlowOptions::default())
        .map_err(|e| e.to_string())?;
    let mut max_err: f64 = 0.0;
    let mut checked = 0;
    for s in trace.samples.iter().filter(|s| s.l <= 18.0) {
        let exact = j0 / (1.0 - j0 * s.l);
        for v in [s.j.jx, s.j.jy, s.j.jz] {
            max_err = max_err.max((v - exact).abs());
        }
        checked += 1;
    }
    ensure(
        trace.samples.last().map_or(0.0, |s| s.l) >= 18.0,
        "trace ends before l = 18",
    )?;
    ensure(max_err < 1e-6, format!("max error {max_err:e}"))?;
    let Terminal::StrongCoupling { l_star, .. } = trace.terminal else {
        return Err(format!("terminal {}", trace.terminal));
    };
    ensure(
        (l_star - 20.0).abs() / 20.0 < 0.05,
        format!("l_star {l_star}"),
    )?;
    Ok(format!(
        "max |j - j0/(1-j0 l)| = {max_err:.2e} over {checked} samples, l_star = {l_star:.6}"
    ))
}

fn constants_of_motion_drift() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_015);
    let opts = FlowOptions::default();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let j0 = CouplingVector::new(
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
        );
        let trace = integrate_flow(j0, &opts).map_err(|e| format!("trace {i}: {e}"))?;
        let (c1, c2) = constants_of_motion(j0);
        // independent recheck over the stored samples
        for s in &trace.samples {
            let (d1, d2) = constants_of_motion(s.j);
            worst = worst.max((d1 - c1).abs()).max((d2 - c2).abs());
        }
        worst = worst.max(trace.invariant_drift);
    }
    ensure(worst < 1e-8, format!("worst drift {worst:e}"))?;
    Ok(format!("worst drift over 100 traces = {worst:.2e}"))
}

fn fm_terminal_coupling() -> Outcome {
    let trace = integrate_flow(
        CouplingVector::symmetric(0.05, -0.2),
        &FlowOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let Terminal::Localized { j_star, .. } = trace.terminal else {
        return Err(format!("terminal {}", trace.terminal));
    };
    let predicted = -(0.2f64 * 0.2 - 0.05 * 0.05).sqrt();
    ensure(
        (j_star.jz - (-0.193649)).abs() <= 1e-4,
        format!("jz* = {}", j_star.jz),
    )?;
    Ok(format!(
        "Localized, jz* = {:.6} (invariant predicts {predicted:.6})",
        j_star.jz
    ))
}

fn double_factorial(n: u64) -> u64 {
    (1..=n).rev().step_by(2).product()
}

fn matching_oracle() -> Outcome {
    let sum = |z: f64| -> Result<f64, String> {
        let p = MatchingProblem::new(vec![0, 1, 2, 3], z).map_err(|e| e.to_string())?;
        matching_sum(&p).map_err(|e| e.to_string())
    };
    let s1 = sum(1.0)?;
    let s_half = sum(0.5)?;
    ensure((s1 - 1.173611).abs() < 1e-6, format!("z=1 sum {s1}"))?;
    ensure(
        (s_half - 1.583333).abs() < 1e-6,
        format!("z=0.5 sum {s_half}"),
    )?;
    for n in (2..=12).step_by(2) {
        let p = MatchingProblem::unit_string(n, 0.0).map_err(|e| e.to_string())?;
        let got = matching_sum(&p).map_err(|e| e.to_string())?;
        let want = double_factorial(n as u64 - 1) as f64;
        ensure(got == want, format!("z=0, n={n}: {got} != {want}"))?;
    }
    Ok(format!(
        "S(z=1) = {s1:.6}, S(z=1/2) = {s_half:.6}, z=0 gives (n-1)!! for n = 2..12"
    ))
}

fn regime_trend_probe() -> Outcome {
    let ns: Vec<usize> = (4..=16).step_by(2).collect();
    let probe = |z| matching_scaling_probe(&ns, z, false).map_err(|e| e.to_string());
    let short = probe(1.0)?;
    let inc = short.increments();
    ensure(inc.iter().all(|&d| d > 0.0), "z=1 weights not increasing")?;
    ensure(
        inc.windows(2).all(|w| w[1] < w[0]),
        "z=1 increments do not shrink",
    )?;
    ensure(
        short.trend == TrendClass::Bounded,
        format!("z=1 trend {}", short.trend.label()),
    )?;

    let long = probe(0.25)?;
    ensure(
        long.increments().iter().all(|&d| d > 0.0),
        "z=1/4 weights not increasing",
    )?;
    let slope = long.loglog_slope();
    ensure(slope > 0.0, format!("z=1/4 slope {slope}"))?;
    ensure(
        matches!(long.trend, TrendClass::PowerLaw { .. }),
        format!("z=1/4 trend {}", long.trend.label()),
    )?;

    let crit = probe(0.5)?;
    ensure(
        crit.increments().iter().all(|&d| d > 0.0),
        "z=1/2 weights not increasing",
    )?;
    ensure(
        crit.trend == TrendClass::Logarithmic,
        format!("z=1/2 trend {}", crit.trend.label()),
    )?;
    let ratio = |p: &kondolab::wick::ScalingProbe| {
        p.local_slopes.last().copied().unwrap_or(f64::NAN) / p.local_slopes[0]
    };
    Ok(format!(
        "slope ratios z=1: {:.3}, z=1/2: {:.3}, z=1/4: {:.3}; z=1/4 log-log slope {slope:.3}",
        ratio(&short),
        ratio(&crit),
        ratio(&long)
    ))
}

fn binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::from(1u32), |acc, i| acc * (n - i) / (i + 1))
}

fn decoder_census() -> Outcome {
    let mut parts = Vec::new();
    for l in [4usize, 6, 8] {
        let r = failure_census(l, l / 2, TieBreak::Report).map_err(|e| e.to_string())?;
        let want = binomial(l as u64, l as u64 / 2);
        ensure(
            BigUint::from(r.n_tie) == want,
            format!("L={l}: {} ties, want {want}", r.n_tie),
        )?;
        ensure(
            r.n_success == 0 && r.n_logical == 0,
            format!("L={l}: unambiguous outcomes"),
        )?;
        parts.push(format!("L={l}: {} ties", r.n_tie));
    }
    Ok(parts.join(", "))
}

fn thermal_limits() -> Outcome {
    let mut worst_low: f64 = 0.0;
    for &(w, t) in &[
        (1e-3, 1.0),
        (1e-4, 2.0),
        (5e-4, 2.0),
        (1e-6, 1e3),
        (1.0, 1e-3),
    ] {
        let got = thermal_kernel(w, t);
        worst_low = worst_low.max((got * t * t - 1.0).abs());
    }
    ensure(worst_low < 1e-6, format!("low-T deviation {worst_low:e}"))?;
    let mut worst_high: f64 = 0.0;
    let w = 2.0;
    let mut u = 5.0;
    while u <= 20.0 {
        let t = u / w;
        let h = 1e-6 * t;
        let deriv = (thermal_kernel(w, t + h).ln() - thermal_kernel(w, t - h).ln()) / (2.0 * h);
        worst_high = worst_high.max((deriv / (-2.0 * w) - 1.0).abs());
        u += 0.5;
    }
    ensure(
        worst_high < 1e-3,
        format!("high-T deviation {worst_high:e}"),
    )?;
    Ok(format!(
        "T->0 relative deviation {worst_low:.1e}, large-u log-derivative deviation {worst_high:.1e}"
    ))
}

fn threshold_table() -> Outcome {
    let zs = [
        Rational64::new(1, 4),
        Rational64::new(1, 2),
        Rational64::from_integer(1),
    ];
    let ss = [Rational64::new(1, 2), Rational64::from_integer(1)];
    let mut rows = Vec::new();
    for z in zs {
        for s in ss {
            // z > 1/(s+1)  <=>  z (s+1) > 1
            let oracle = z * (s + Rational64::from_integer(1)) > Rational64::from_integer(1);
            let got = threshold_exists(
                *z.numer() as f64 / *z.denom() as f64,
                *s.numer() as f64 / *s.denom() as f64,
            );
            ensure(got == oracle, format!("z={z}, s={s}: got {got}"))?;
            rows.push(format!("({z},{s})={}", if got { "yes" } else { "no" }));
        }
    }
    for z in [
        Rational64::new(3, 10),
        Rational64::new(1, 2),
        Rational64::new(3, 4),
        Rational64::from_integer(1),
    ] {
        let spec = BathSpec {
            z,
            ..BathSpec::default()
        };
        let at = |l| critical_coupling(&spec, l).map_err(|e| e.to_string());
        let (c10, c100) = (at(10)?, at(100)?);
        let flat = c10.lambda_c == c100.lambda_c;
        let short = z > Rational64::new(1, 2);
        ensure(flat == short, format!("z={z}: L-independent = {flat}"))?;
        ensure(
            c10.l_independent == short,
            format!("z={z}: flag {}", c10.l_independent),
        )?;
    }
    Ok(rows.join(" "))
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    if root.is_file() {
        return vec![(String::new(), fs::read(root).unwrap())];
    }
    let mut files: Vec<_> = fs::read_dir(root)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn sweep_determinism() -> Outcome {
    let configs = [
        r#"{"task": "lifetime", "output_path": "x",
            "axes": {"L": [4, 8, 12], "z": [1, "1/2", 0.3], "lambda": [0.01, 0.05], "T": [0, 0.1]}}"#,
        r#"{"task": "phase_diagram", "output_path": "x",
            "axes": {"j_perp": [0.0, 0.05, 0.1, 0.2], "j_z": [-0.3, -0.1, 0.1, 0.3]}}"#,
        r#"{"task": "flow", "output_path": "x",
            "axes": {"j_perp": [0.05, 0.1, 0.2], "j_z": [-0.2, 0.0, 0.2]}}"#,
        r#"{"task": "matching_probe", "output_path": "x",
            "axes": {"z": [0.25, 0.5, 1], "n": [4, 6, 8, 10, 12]}}"#,
        r#"{"task": "census", "output_path": "x",
            "axes": {"L": [4, 6, 8], "weight": [1, 2, 3, 4], "rule": ["report", "benign", "adversarial"]}}"#,
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (i, text) in configs.iter().enumerate() {
        let cfg = parse_config(text).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for (k, workers) in [1usize, 8, 1, 8].into_iter().enumerate() {
            let path = dir.path().join(format!("out_{i}_{k}"));
            let overrides = RunOverrides {
                output_path: Some(path.clone()),
                workers: Some(workers),
                force: false,
            };
            run(&cfg, &overrides).map_err(|e| format!("config {i}: {e}"))?;
            outputs.push(read_tree(&path));
        }
        ensure(
            outputs.windows(2).all(|w| w[0] == w[1]),
            format!("task {} differs across runs or worker counts", cfg.task),
        )?;
        compared += outputs[0].len();
    }
    Ok(format!(
        "5 tasks x 4 runs (workers 1, 8, 1, 8), {compared} files byte-identical"
    ))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (
            1,
            "neutral-atom preset",
            Duration::from_secs(1),
            neutral_atom_preset,
        ),
        (
            2,
            "Stirling path count",
            Duration::from_secs(1),
            stirling_path_count,
        ),
        (
            3,
            "RG analytic equivalence",
            Duration::from_secs(5),
            isotropic_flow_matches_pole,
        ),
        (
            4,
            "constants of motion",
            Duration::from_secs(30),
            constants_of_motion_drift,
        ),
        (
            5,
            "FM terminal coupling",
            Duration::from_secs(5),
            fm_terminal_coupling,
        ),
        (
            6,
            "matching-sum oracle",
            Duration::from_secs(10),
            matching_oracle,
        ),
        (
            7,
            "regime trend probe",
            Duration::from_secs(60),
            regime_trend_probe,
        ),
        (
            8,
            "decoder ambiguity census",
            Duration::from_secs(10),
            decoder_census,
        ),
        (
            9,
            "thermal correlator limits",
            Duration::from_secs(1),
            thermal_limits,
        ),
        (
            10,
            "threshold criterion table",
            Duration::from_secs(1),
            threshold_table,
        ),
        (
            11,
            "sweep determinism",
            Duration::from_secs(30),
            sweep_determinism,
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= budget {
                Ok(detail)
            } else {
                Err(format!(
                    "{detail}; runtime {elapsed:.2?} over budget {budget:?}"
                ))
            }
        });
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
