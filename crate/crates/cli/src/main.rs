use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dbvp_cli::plot::envelope_svg;
use dbvp_cli::{exit, load_problem, run_solve, run_sweep, run_verify, Failure, SolveOptions, Sweep};
use dbvp_core::greens::{build_kernel, certify_kernel, KernelCertificate, KernelCase};
use dbvp_core::{eigenvalues, solve_linear, LinearProblem, MeshFunction};

/// Solver and verifier for −Δ²y(t−1) = f(t, y(t)), y(0) = y(T+1) = 0.
#[derive(Parser)]
#[command(name = "dbvp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the discrete Dirichlet Laplacian on 1..=T.
    Spectrum {
        #[arg(long = "T")]
        grid_size: usize,
        #[command(flatten)]
        format: Format,
        #[command(flatten)]
        out: Out,
    },
    /// Green's kernel of y ↦ −Δ²y(t−1) − λy(t) with zero boundary values.
    Green {
        #[arg(long = "T")]
        grid_size: usize,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        /// Check negativity, symmetry, impulse identity and ψ; exit 2 on failure.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        format: Format,
        #[command(flatten)]
        out: Out,
    },
    /// Solves −Δ²y(t−1) − λy(t) = h(t), y(0) = 0, y(T+1) = B.
    SolveLinear {
        /// JSON document {"T", "lambda", "h", "B"}.
        #[arg(long, conflicts_with_all = ["grid_size", "lambda", "h", "b"])]
        problem: Option<PathBuf>,
        #[arg(long = "T")]
        grid_size: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Comma-separated interior forcing h(1..=T); zero if omitted.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        h: Option<Vec<f64>>,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: Option<f64>,
        #[command(flatten)]
        format: Format,
        #[command(flatten)]
        out: Out,
    },
    /// Validates the bracket and estimates M̂ without iterating.
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        out: Out,
    },
    /// Runs the monotone iteration and writes a JSON report.
    Solve {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
        /// Write the full iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write an SVG of the iterate envelopes.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Run independent cases concurrently: `T=3,10,25` or `lambda=-1,0`.
        #[arg(long, allow_hyphen_values = true)]
        sweep: Option<Sweep>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Args)]
struct Format {
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct Out {
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Source {
    /// Built-in problem: example1 or example2.
    #[arg(long)]
    builtin: Option<String>,
    /// JSON problem document.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Grid size (required with --builtin, overrides the document otherwise).
    #[arg(long = "T")]
    grid_size: Option<usize>,
}

#[derive(Args)]
struct Params {
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Declared one-sided Lipschitz constant; overrides the sampled M̂.
    #[arg(long = "M", allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Params {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            lambda: self.lambda,
            m: self.m,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }
}

fn emit(out: &Out, text: &str) -> Result<(), Failure> {
    match &out.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::bad_input(format!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn cmd_spectrum(grid_size: usize, format: &Format, out: &Out) -> Result<u8, Failure> {
    let spectrum = eigenvalues(grid_size)?;
    let text = if format.csv {
        let mut s = String::from("n,lambda\n");
        for (i, l) in spectrum.eigenvalues().iter().enumerate() {
            s.push_str(&format!("{},{l:?}\n", i + 1));
        }
        s
    } else {
        json(&spectrum.eigenvalues())
    };
    emit(out, &text)?;
    Ok(exit::OK)
}

#[derive(Serialize)]
struct GreenOutput<'a> {
    #[serde(rename = "T")]
    grid_size: usize,
    lambda: f64,
    case: KernelCase,
    /// Rows t = 0..=T+1, columns s = 1..=T.
    #[serde(rename = "G")]
    g: Vec<&'a [f64]>,
    psi: &'a MeshFunction,
    certificate: Option<KernelCertificate>,
}

fn cmd_green(grid_size: usize, lambda: f64, verify: bool, format: &Format, out: &Out) -> Result<u8, Failure> {
    let kernel = build_kernel(lambda, grid_size)?;
    let certificate = verify.then(|| certify_kernel(&kernel));
    let text = if format.csv {
        let mut s = String::from("t,s,G\n");
        for (t, row) in kernel.rows().enumerate() {
            for (j, g) in row.iter().enumerate() {
                s.push_str(&format!("{t},{},{g:?}\n", j + 1));
            }
        }
        if let Some(c) = &certificate {
            eprintln!("{}", serde_json::to_string(c).expect("certificate serializes"));
        }
        s
    } else {
        json(&GreenOutput {
            grid_size,
            lambda,
            case: kernel.case(),
            g: kernel.rows().collect(),
            psi: kernel.psi(),
            certificate: certificate.clone(),
        })
    };
    emit(out, &text)?;
    match certificate {
        Some(c) if !c.passed => {
            eprintln!("error: kernel certificate failed");
            Ok(exit::HYPOTHESIS)
        }
        _ => Ok(exit::OK),
    }
}

fn cmd_solve_linear(
    problem: Option<&Path>,
    grid_size: Option<usize>,
    lambda: Option<f64>,
    h: Option<Vec<f64>>,
    b: Option<f64>,
    format: &Format,
    out: &Out,
) -> Result<u8, Failure> {
    let lp: LinearProblem = match problem {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::bad_input(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::bad_input(format!("malformed linear problem: {e}")))?
        }
        None => {
            let t = grid_size.ok_or_else(|| Failure::bad_input("--T is required without --problem"))?;
            let lambda = lambda.ok_or_else(|| Failure::bad_input("--lambda is required without --problem"))?;
            let h = h.unwrap_or_else(|| vec![0.0; t]);
            if h.len() != t {
                return Err(Failure::bad_input(format!("--h has {} values, expected T = {t}", h.len())));
            }
            LinearProblem::new(lambda, MeshFunction::from_interior(&h, 0.0, 0.0)?, b.unwrap_or(0.0))
        }
    };
    let solution = solve_linear(&lp)?;
    let text = if format.csv { solution.y.to_csv() } else { json(&solution) };
    emit(out, &text)?;
    Ok(exit::OK)
}

fn cmd_verify(source: &Source, params: &Params, out: &Out) -> Result<u8, Failure> {
    let (doc, label) = load_problem(source.builtin.as_deref(), source.problem.as_deref(), source.grid_size)?;
    let report = run_verify(doc, &label, &params.options());
    emit(out, &json(&report))?;
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    Ok(report.exit_code())
}

fn cmd_solve(
    source: &Source,
    params: &Params,
    trace: Option<&Path>,
    plot: Option<&Path>,
    sweep: Option<&Sweep>,
    out: &Out,
) -> Result<u8, Failure> {
    let (doc, label) = load_problem(source.builtin.as_deref(), source.problem.as_deref(), source.grid_size)?;
    let opts = params.options();
    if let Some(sweep) = sweep {
        if trace.is_some() || plot.is_some() {
            return Err(Failure::bad_input("--trace and --plot apply to single runs, not --sweep"));
        }
        let reports = run_sweep(&doc, source.builtin.as_deref(), &label, sweep, &opts)?;
        emit(out, &json(&reports))?;
        for r in &reports {
            if let Some(e) = &r.error {
                eprintln!("error (T={}): {e}", r.problem.grid_size);
            }
        }
        return Ok(reports.iter().map(|r| r.exit_code()).max().unwrap_or(exit::OK));
    }

    let run = run_solve(doc, &label, &opts);
    if let Some(result) = &run.result {
        if let Some(path) = trace {
            write_file(path, &result.trace.to_csv())?;
        }
        if let Some(path) = plot {
            let title = format!("{label}, T = {}, λ = {:e}", run.report.problem.grid_size, result.trace.lambda_used);
            write_file(path, &envelope_svg(&result.trace, &title))?;
        }
    }
    emit(out, &json(&run.report))?;
    if let Some(e) = &run.report.error {
        eprintln!("error: {e}");
    }
    Ok(run.report.exit_code())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Spectrum { grid_size, format, out } => cmd_spectrum(grid_size, &format, &out),
        Command::Green {
            grid_size,
            lambda,
            verify,
            format,
            out,
        } => cmd_green(grid_size, lambda, verify, &format, &out),
        Command::SolveLinear {
            problem,
            grid_size,
            lambda,
            h,
            b,
            format,
            out,
        } => cmd_solve_linear(problem.as_deref(), grid_size, lambda, h, b, &format, &out),
        Command::Verify { source, params, out } => cmd_verify(&source, &params, &out),
        Command::Solve {
            source,
            params,
            trace,
            plot,
            sweep,
            out,
        } => cmd_solve(&source, &params, trace.as_deref(), plot.as_deref(), sweep.as_ref(), &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are not failures
            return if e.use_stderr() {
                ExitCode::from(exit::BAD_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}
