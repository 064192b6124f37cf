use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use radon_weights_cli::spec::parse_tolerances_str;
use radon_weights_cli::{parse_spec, run, Command, SpecErrors};

/// Exit status: 0 when every check passes, 1 when a check fails, 2 for
/// spec or usage errors.
#[derive(Parser, Debug)]
#[command(name = "radon-weights", version, about = "Run polytope, weight, flow and estimator checks from a problem spec")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Problem spec (TOML); may also be given positionally.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(conflicts_with = "spec")]
    spec_path: Option<PathBuf>,
    /// Directory for `<command>.json` and `<command>.csv`; JSON goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the spec seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the numerical subcommands.
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML table of tolerances replacing the spec's.
    #[arg(long)]
    tolerances: Option<PathBuf>,
}

fn spec_errors(e: &SpecErrors) -> String {
    let list: Vec<_> = e.0.iter().map(|x| serde_json::json!({"path": x.path, "message": x.message})).collect();
    serde_json::to_string_pretty(&serde_json::json!({"errors": list})).expect("plain JSON")
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Some(path) = args.spec.or(args.spec_path) else {
        eprintln!("error: a spec path is required");
        return ExitCode::from(2);
    };
    let mut spec = match parse_spec(&path) {
        Ok(s) => s,
        Err(e) => {
            println!("{}", spec_errors(&e));
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(t) = &args.tolerances {
        let parsed = std::fs::read_to_string(t)
            .map_err(|e| SpecErrors(vec![radon_weights_cli::spec::SchemaError { path: String::new(), message: format!("cannot read {}: {e}", t.display()) }]))
            .and_then(|text| parse_tolerances_str(&text));
        match parsed {
            Ok(tol) => spec.tolerances = tol,
            Err(e) => {
                println!("{}", spec_errors(&e));
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        }
    }
    if let Some(j) = args.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        // the global pool is built once, before any parallel work
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let report = match run(args.command, &spec) {
        Ok(r) => r,
        Err(e) => {
            println!("{}", serde_json::json!({"errors": [{"path": "", "message": e.0}]}));
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    // timing stays out of the report so reruns are byte-identical
    eprintln!("{}: {:.2}s", args.command.name(), start.elapsed().as_secs_f64());
    match &args.out {
        Some(dir) => match report.write(dir) {
            Ok((j, c)) => eprintln!("wrote {} and {}", j.display(), c.display()),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => print!("{}", report.to_json()),
    }
    for c in report.failures() {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
