use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gradlab::output::{output_dir, read_report, write_artifacts, RunInputs};
use gradlab::{run_experiment, ExperimentKind, ExperimentSpec, RunError};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "gradlab", version, about = "Gradient-bound verification experiments")]
struct Cli {
    /// Worker threads for sweeps and scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment spec and write its artifacts.
    Run {
        spec: PathBuf,
        /// Replace the mesh width of the spec.
        #[arg(long)]
        h_override: Option<f64>,
        /// Replace the base seed of the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $GRADLAB_OUTPUT_ROOT/<name>, root defaults to ./runs).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the experiment kinds a spec may name.
    ListExperiments,
    /// Summarize a run directory and verify its MANIFEST hashes.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match cli.cmd {
        Cmd::Run { spec, h_override, seed, out } => run(&spec, h_override, seed, out.as_deref()),
        Cmd::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<18} {}", k.name(), k.summary());
            }
            ExitCode::SUCCESS
        }
        Cmd::Report { dir } => report(&dir),
    }
}

fn run(path: &Path, h_override: Option<f64>, seed: Option<u64>, out: Option<&Path>) -> ExitCode {
    let (mut spec, text) = match ExperimentSpec::load(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut overrides = Vec::new();
    if let Some(h) = h_override {
        if let Err(e) = spec.override_h(h) {
            eprintln!("config error: --h-override: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        overrides.push(format!("h={h:e}"));
    }
    if let Some(s) = seed {
        spec.seed = s;
        overrides.push(format!("seed={s}"));
    }
    let outcome = match run_experiment(&spec) {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e @ RunError::Setup(_)) => {
            eprintln!("config error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let dir = output_dir(&spec, out);
    let spec_file = path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
    let inputs = RunInputs { spec: &spec, spec_file: &spec_file, spec_text: &text, overrides: &overrides };
    if let Err(e) = write_artifacts(&dir, &inputs, &outcome) {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::from(EXIT_FAIL);
    }
    let verdict = if outcome.pass() { "PASS" } else { "FAIL" };
    println!(
        "{} [{}]: {verdict} ({} entries, {} checks) -> {}",
        spec.name,
        spec.experiment,
        outcome.runs.len(),
        outcome.check_count(),
        dir.display()
    );
    let failures = outcome.failures();
    for (run, c) in &failures {
        match run {
            Some(i) => eprintln!("FAIL {} run {i}: {}: {}", outcome.kind.report_file(), c.name, c.detail),
            None => eprintln!("FAIL {}: {}: {}", outcome.kind.report_file(), c.name, c.detail),
        }
    }
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn report(dir: &Path) -> ExitCode {
    let rep = match read_report(dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let j = &rep.json;
    let runs = j["runs"].as_array().map_or(0, Vec::len);
    let passed = j["runs"].as_array().map_or(0, |r| r.iter().filter(|x| x["pass"] == true).count());
    println!("report     {}", rep.report_file.display());
    println!("experiment {}", j["experiment"].as_str().unwrap_or("?"));
    println!("name       {}", j["name"].as_str().unwrap_or("?"));
    println!("seed       {}", j["seed"]);
    println!("entries    {passed}/{runs} passing");
    let checks = j["checks"].as_array().into_iter().flatten().map(|c| (None, c));
    let run_checks = j["runs"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|r| r["checks"].as_array().into_iter().flatten().map(move |c| (r["index"].as_u64(), c)));
    for (run, c) in checks.chain(run_checks).filter(|(_, c)| c["pass"] != true) {
        let at = run.map_or(String::new(), |i| format!(" run {i}"));
        println!("FAIL{at}: {}: {}", c["name"].as_str().unwrap_or("?"), c["detail"].as_str().unwrap_or(""));
    }
    for f in &rep.modified {
        println!("MODIFIED {f} (hash differs from MANIFEST)");
    }
    println!("overall    {}", if rep.pass() { "PASS" } else { "FAIL" });
    if rep.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
