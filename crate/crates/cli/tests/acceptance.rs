//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs every criterion even after a failure, then exits nonzero if any
//! failed. Reference values come from the dense oracles shared with the core
//! integration tests; the solver under test never feeds its own oracle.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dbvp_cli::{run_solve, RunReport, SolveOptions, SolveRun};
use dbvp_core::greens::{impulse_residual, symmetry_defect};
use dbvp_core::monotone::{IterationTrace, Outcome};
use dbvp_core::{
    build_kernel, builtin, check_maximum_principle, eigenvalues, first_eigenvalue, homogeneous_factor,
    solve_linear, solve_via_green, verify_negativity, LinearProblem, MeshFunction, ProblemDocument,
};

const SPECTRUM_CLOSED_FORM_TOL: f64 = 1e-12;
const SPECTRUM_DENSE_TOL: f64 = 1e-9;
const GREEN_VS_DIRECT_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-11;
const IMPULSE_TOL: f64 = 1e-10;
const MAX_PRINCIPLE_FLOOR: f64 = -1e-12;
const MAX_PRINCIPLE_TRIALS: usize = 500;
const LIMIT_GAP_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-8;
const NEWTON_MATCH_TOL: f64 = 1e-7;
const CHAIN_TOL: f64 = 1e-12;
const SANDWICH_TOL: f64 = 1e-8;
const PSI_RESIDUAL_TOL: f64 = 1e-10;

const SWEEP_T: [usize; 5] = [1, 2, 3, 10, 50];
const EXAMPLE_T: [usize; 3] = [3, 10, 25];
/// Example 2 contracts by ≈ 1 − e^{1−T} per step; T = 10 needs ~1.1e5 steps.
const EXAMPLE_MAX_ITER: usize = 200_000;

/// The λ sweep for grid size `T`.
fn sweep_lambdas(t: usize) -> [f64; 6] {
    let l1 = first_eigenvalue(t).unwrap();
    [-5.0, -1.0, -1e-6, 0.0, 0.3 * l1, 0.9 * l1]
}

/// Accumulates named sub-checks for one criterion and prints its line.
struct Criterion {
    name: &'static str,
    start: Instant,
    budget: Option<Duration>,
    failures: Vec<String>,
    notes: Vec<String>,
    checks: usize,
}

impl Criterion {
    fn new(name: &'static str, budget_secs: Option<f64>) -> Self {
        Self {
            name,
            start: Instant::now(),
            budget: budget_secs.map(Duration::from_secs_f64),
            failures: Vec::new(),
            notes: Vec::new(),
            checks: 0,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Adds time spent elsewhere (shared runs) to this criterion's clock.
    fn charge(&mut self, d: Duration) {
        self.start -= d;
    }

    fn finish(mut self) -> bool {
        let elapsed = self.start.elapsed();
        if let Some(budget) = self.budget {
            self.check(elapsed <= budget, || format!("runtime {elapsed:.2?} exceeds {budget:.0?}"));
        }
        let ok = self.failures.is_empty();
        let mut line = format!(
            "{} {:<28} {:>4} checks {:>9.2?}",
            if ok { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            elapsed
        );
        if !self.notes.is_empty() {
            line.push_str(&format!("  [{}]", self.notes.join("; ")));
        }
        println!("{line}");
        for f in self.failures.iter().take(8) {
            println!("     - {f}");
        }
        if self.failures.len() > 8 {
            println!("     - ... {} more", self.failures.len() - 8);
        }
        ok
    }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn spectrum_exactness() -> bool {
    let mut c = Criterion::new("spectrum_exactness", Some(1.0));
    let (mut worst_closed, mut worst_dense) = (0.0_f64, 0.0_f64);
    for t in 1..=30 {
        let spectrum = eigenvalues(t).unwrap();
        let closed: Vec<f64> = (1..=t)
            .map(|n| 2.0 - 2.0 * (n as f64 * std::f64::consts::PI / (t + 1) as f64).cos())
            .collect();
        let dense = oracle::dense_laplacian_eigenvalues(t);
        let (e1, e2) = (sup(spectrum.eigenvalues(), &closed), sup(spectrum.eigenvalues(), &dense));
        worst_closed = worst_closed.max(e1);
        worst_dense = worst_dense.max(e2);
        c.check(e1 < SPECTRUM_CLOSED_FORM_TOL, || format!("T={t}: closed-form error {e1:e}"));
        c.check(e2 < SPECTRUM_DENSE_TOL, || format!("T={t}: dense-eigensolver error {e2:e}"));
    }
    c.note(format!("closed form {worst_closed:.1e}, dense {worst_dense:.1e}"));
    c.finish()
}

fn oracle_equivalence() -> bool {
    let mut c = Criterion::new("green_vs_direct", Some(5.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for t in SWEEP_T {
        for lambda in sweep_lambdas(t) {
            let kernel = build_kernel(lambda, t).unwrap();
            for trial in 0..20 {
                let h: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let b = rng.gen_range(-1.0..1.0);
                let h = MeshFunction::from_interior(&h, 0.0, 0.0).unwrap();
                let by_green = solve_via_green(&kernel, &h, b).unwrap();
                let direct = solve_linear(&LinearProblem::new(lambda, h, b)).unwrap().y;
                let d = by_green.sup_distance(&direct).unwrap();
                worst = worst.max(d);
                c.check(d < GREEN_VS_DIRECT_TOL, || format!("T={t} λ={lambda:e} trial {trial}: {d:e}"));
            }
        }
    }
    c.note(format!("worst {worst:.1e}"));
    c.finish()
}

fn kernel_structure() -> bool {
    let mut c = Criterion::new("kernel_sign_symmetry_impulse", Some(5.0));
    let (mut max_entry, mut worst_sym, mut worst_imp) = (f64::NEG_INFINITY, 0.0_f64, 0.0_f64);
    for t in SWEEP_T {
        for lambda in sweep_lambdas(t) {
            let kernel = build_kernel(lambda, t).unwrap();
            let neg = verify_negativity(&kernel);
            let (sym, imp) = (symmetry_defect(&kernel), impulse_residual(&kernel));
            max_entry = max_entry.max(neg.max_interior);
            worst_sym = worst_sym.max(sym);
            worst_imp = worst_imp.max(imp);
            c.check(neg.passed, || {
                format!("T={t} λ={lambda:e}: {} nonnegative entries", neg.violations.len())
            });
            c.check(sym < SYMMETRY_TOL, || format!("T={t} λ={lambda:e}: symmetry {sym:e}"));
            c.check(imp < IMPULSE_TOL, || format!("T={t} λ={lambda:e}: impulse {imp:e}"));
        }
    }
    c.note(format!(
        "max entry {max_entry:.2e}, symmetry {worst_sym:.1e}, impulse {worst_imp:.1e}"
    ));
    c.finish()
}

fn maximum_principle() -> bool {
    let mut c = Criterion::new("maximum_principle", Some(10.0));
    let mut min_value = f64::INFINITY;
    let mut cells = 0;
    for t in SWEEP_T {
        for (i, lambda) in sweep_lambdas(t).into_iter().enumerate() {
            let seed = 1000 * t as u64 + i as u64;
            let report = check_maximum_principle(lambda, t, MAX_PRINCIPLE_TRIALS, seed).unwrap();
            cells += 1;
            min_value = min_value.min(report.min_value);
            c.check(report.trials == MAX_PRINCIPLE_TRIALS, || format!("T={t}: {} trials", report.trials));
            c.check(report.min_value >= MAX_PRINCIPLE_FLOOR, || {
                format!("T={t} λ={lambda:e}: min y = {:e}", report.min_value)
            });
        }
    }
    c.note(format!("{cells} cells x {MAX_PRINCIPLE_TRIALS} trials, min y {min_value:.1e}"));
    c.finish()
}

/// Largest violation of `α_n ≤ α_{n+1} ≤ β_{n+1} ≤ β_n` over a trace.
fn chain_violation(trace: &IterationTrace) -> f64 {
    let mut worst = 0.0_f64;
    for pair in trace.iterates.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        for t in 0..prev.alpha.values().len() {
            worst = worst
                .max(prev.alpha[t] - next.alpha[t])
                .max(next.alpha[t] - next.beta[t])
                .max(next.beta[t] - prev.beta[t]);
        }
    }
    worst
}

struct ExampleRun {
    grid_size: usize,
    run: SolveRun,
    elapsed: Duration,
}

fn run_example(name: &str, t: usize) -> ExampleRun {
    let mut doc: ProblemDocument = builtin(name, t).unwrap();
    doc.max_iter = Some(EXAMPLE_MAX_ITER);
    let start = Instant::now();
    let run = run_solve(doc, name, &SolveOptions::default());
    ExampleRun {
        grid_size: t,
        run,
        elapsed: start.elapsed(),
    }
}

fn end_to_end(
    name: &'static str,
    runs: &[ExampleRun],
    newton: impl Fn(usize) -> (Vec<f64>, f64),
    expect_negative_m: bool,
) -> bool {
    let mut c = Criterion::new(name, Some(5.0));
    for ex in runs {
        c.charge(ex.elapsed);
        let t = ex.grid_size;
        let r: &RunReport = &ex.run.report;
        let bracket_ok = r.bracket.as_ref().is_some_and(|b| b.lower.passed && b.upper.passed);
        c.check(bracket_ok, || format!("T={t}: bracket does not validate"));
        if expect_negative_m {
            let m = r.lipschitz.as_ref().map_or(f64::NAN, |l| l.m_hat);
            c.check(m < 0.0, || format!("T={t}: M̂ = {m:e} is not negative"));
        }
        let Some(result) = &ex.run.result else {
            c.check(false, || format!("T={t}: no iteration ({:?})", r.error));
            continue;
        };
        let trace = &result.trace;
        let converged = matches!(trace.outcome, Outcome::Converged);
        c.check(converged, || format!("T={t}: {:?} after {} steps", trace.outcome, trace.steps()));
        let violation = chain_violation(trace);
        c.check(
            violation <= CHAIN_TOL && !matches!(trace.outcome, Outcome::MonotonicityViolated { .. }),
            || format!("T={t}: monotonicity violated by {violation:e}"),
        );
        let gap = result.alpha_limit.sup_distance(&result.beta_limit).unwrap();
        c.check(gap < LIMIT_GAP_TOL, || format!("T={t}: |α̃ − β̃| = {gap:e}"));
        let last = trace.last();
        let residual = last.residual_alpha.max(last.residual_beta);
        c.check(residual < RESIDUAL_TOL, || format!("T={t}: residual {residual:e}"));
        let (z, newton_residual) = newton(t);
        let mismatch = sup(result.alpha_limit.values(), &z).max(sup(result.beta_limit.values(), &z));
        c.check(mismatch < NEWTON_MATCH_TOL, || {
            format!("T={t}: limits differ from Newton by {mismatch:e} (Newton residual {newton_residual:e})")
        });
        c.note(format!("T={t}: {} steps, gap {gap:.1e}, res {residual:.1e}", trace.steps()));
    }
    c.finish()
}

fn example1(runs: &[ExampleRun]) -> bool {
    end_to_end(
        "example1_end_to_end",
        runs,
        |n| {
            let scale = ((n + 1) * (n + 1)) as f64;
            oracle::newton_solve(n, |_, y| (y - scale).exp(), |_, y| (y - scale).exp(), &vec![0.0; n])
        },
        false,
    )
}

fn example2(runs: &[ExampleRun]) -> bool {
    end_to_end(
        "example2_end_to_end",
        runs,
        |n| {
            let start: Vec<f64> = (1..=n).map(|t| t as f64).collect();
            oracle::newton_solve(n, |t, y| t.exp() - y.exp(), |_, y| -y.exp(), &start)
        },
        true,
    )
}

/// `f(t,y) = a + c t/T + b sin(y) − r y` with bracket `0 ≤ y ≤ K t(T+1−t)/2`, `K = a + b + c`.
struct RandomProblem {
    doc: ProblemDocument,
    coeffs: [f64; 4],
}

fn random_problems() -> Vec<RandomProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    (0..10)
        .map(|_| {
            let t = rng.gen_range(2..=20);
            let a = rng.gen_range(0.5..1.0);
            let b = rng.gen_range(0.0..0.5);
            let c = rng.gen_range(0.0..1.0);
            let r = rng.gen_range(0.0..2.0);
            let k = a + b + c;
            RandomProblem {
                doc: ProblemDocument {
                    grid_size: t,
                    f: format!("{a} + {c}*t/T + {b}*sin(y) - {r}*y"),
                    lower: "0".into(),
                    upper: format!("{k}*t*(T+1-t)/2"),
                    lambda: None,
                    m: None,
                    tol: None,
                    max_iter: None,
                },
                coeffs: [a, b, c, r],
            }
        })
        .collect()
}

fn bracket_chain(traces: &[(String, &IterationTrace)]) -> bool {
    let mut c = Criterion::new("bracket_chain", None);
    let mut worst = 0.0_f64;
    let mut steps = 0;
    for (label, trace) in traces {
        if !matches!(trace.outcome, Outcome::Converged) {
            continue;
        }
        let v = chain_violation(trace);
        worst = worst.max(v);
        steps += trace.steps();
        c.check(v <= CHAIN_TOL, || format!("{label}: chain violated by {v:e}"));
    }
    c.note(format!("{} converged traces, {steps} steps, worst {worst:.1e}", c.checks));
    c.finish()
}

fn sandwich(problems: &[RandomProblem], runs: &[SolveRun]) -> bool {
    let mut c = Criterion::new("sandwich", None);
    for (i, (prob, run)) in problems.iter().zip(runs).enumerate() {
        let n = prob.doc.grid_size;
        let [a, b, cc, r] = prob.coeffs;
        let validated = run.report.bracket.as_ref().is_some_and(|x| x.lower.passed && x.upper.passed);
        c.check(validated, || format!("problem {i}: bracket does not validate"));
        let Some(result) = run.result.as_ref().filter(|r| r.converged()) else {
            c.check(false, || format!("problem {i}: did not converge ({:?})", run.report.error));
            continue;
        };
        let nf = n as f64;
        let k = a + b + cc;
        // damped Newton can stall on the sin term; retry from points inside D₀
        let (z, res) = [0.0, 0.25, 0.5, 1.0]
            .iter()
            .map(|&w| {
                let start: Vec<f64> = (1..=n).map(|t| w * k * t as f64 * (nf + 1.0 - t as f64) / 2.0).collect();
                oracle::newton_solve(
                    n,
                    |t, y| a + cc * t / nf + b * y.sin() - r * y,
                    |_, y| b * y.cos() - r,
                    &start,
                )
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        c.check(res < 1e-12, || format!("problem {i}: Newton residual {res:e}"));
        let in_d0 = (0..n + 2).all(|t| {
            let tf = t as f64;
            z[t] >= -1e-12 && z[t] <= k * tf * (nf + 1.0 - tf) / 2.0 + 1e-12
        });
        c.check(in_d0, || format!("problem {i}: Newton solution leaves the initial bracket"));
        let outside = (0..n + 2)
            .map(|t| (result.alpha_limit[t] - SANDWICH_TOL - z[t]).max(z[t] - result.beta_limit[t] - SANDWICH_TOL))
            .fold(f64::NEG_INFINITY, f64::max);
        c.check(outside <= 0.0, || format!("problem {i}: solution outside [α̃, β̃] by {outside:e}"));
    }
    c.finish()
}

fn psi_check() -> bool {
    let mut c = Criterion::new("psi_boundary_and_residual", None);
    let mut worst = 0.0_f64;
    for t in 1..=25 {
        let l1 = first_eigenvalue(t).unwrap();
        // exponential, polynomial, oscillatory
        for lambda in [-1.0, 0.0, 0.5 * l1] {
            let psi = homogeneous_factor(lambda, t).unwrap().psi;
            c.check(psi[0] == 0.0, || format!("T={t} λ={lambda:e}: ψ(0) = {:e}", psi[0]));
            c.check(psi[t + 1] == 1.0, || format!("T={t} λ={lambda:e}: ψ(T+1) = {}", psi[t + 1]));
            let res = (1..=t)
                .map(|s| (-psi[s - 1] + (2.0 - lambda) * psi[s] - psi[s + 1]).abs())
                .fold(0.0, f64::max);
            worst = worst.max(res);
            c.check(res < PSI_RESIDUAL_TOL, || format!("T={t} λ={lambda:e}: residual {res:e}"));
        }
    }
    c.note(format!("worst residual {worst:.1e}"));
    c.finish()
}

fn determinism() -> bool {
    let mut c = Criterion::new("determinism", None);
    let opts = SolveOptions {
        seed: 7,
        ..SolveOptions::default()
    };
    for (name, t) in [("example1", 10), ("example2", 3)] {
        let a = run_solve(builtin(name, t).unwrap(), name, &opts).report.to_json_untimed();
        let b = run_solve(builtin(name, t).unwrap(), name, &opts).report.to_json_untimed();
        c.check(a == b, || format!("{name} T={t}: library reports differ"));
    }

    let binary = |args: &[&str]| -> (i32, String) {
        let out = Command::new(env!("CARGO_BIN_EXE_dbvp")).args(args).output().unwrap();
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing_ms");
        }
        (out.status.code().unwrap_or(-1), v.to_string())
    };
    let args = ["solve", "--builtin", "example1", "--T", "10", "--seed", "7"];
    let (code1, first) = binary(&args);
    let (code2, second) = binary(&args);
    c.check(code1 == 0 && code2 == 0, || format!("exit codes {code1}, {code2}"));
    c.check(first == second && first != "null", || "CLI reports differ".into());
    c.finish()
}

fn main() {
    println!("acceptance suite");
    let mut results = vec![spectrum_exactness(), oracle_equivalence(), kernel_structure(), maximum_principle()];

    let ex1: Vec<ExampleRun> = EXAMPLE_T.iter().map(|&t| run_example("example1", t)).collect();
    let ex2: Vec<ExampleRun> = EXAMPLE_T.iter().map(|&t| run_example("example2", t)).collect();
    results.push(example1(&ex1));
    results.push(example2(&ex2));

    let problems = random_problems();
    let random_runs: Vec<SolveRun> = problems
        .iter()
        .map(|p| run_solve(p.doc.clone(), "random", &SolveOptions::default()))
        .collect();

    let mut traces: Vec<(String, &IterationTrace)> = Vec::new();
    for (name, runs) in [("example1", &ex1), ("example2", &ex2)] {
        for ex in runs {
            if let Some(r) = &ex.run.result {
                traces.push((format!("{name} T={}", ex.grid_size), &r.trace));
            }
        }
    }
    for (i, run) in random_runs.iter().enumerate() {
        if let Some(r) = &run.result {
            traces.push((format!("random problem {i}"), &r.trace));
        }
    }
    results.push(bracket_chain(&traces));
    results.push(sandwich(&problems, &random_runs));
    results.push(psi_check());
    results.push(determinism());

    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
