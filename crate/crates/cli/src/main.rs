use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use strymgen::commands::{
    check_sets, describe_mismatch, gen, input_sets, parse_inputs, show_inputs,
};
use strymgen::suite::{compile_spec, run_suite, DEFAULT_SCALE, TSV_HEADER};
use strymgen::CliError;

#[derive(Parser)]
#[command(
    name = "strymgen",
    version,
    about = "Fused stream pipelines compiled to loop IR"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a pipeline spec to IR and run the static checkers on it.
    Gen {
        file: PathBuf,
        /// Write the IR here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reject pipelines that may not terminate.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate the generated IR and compare it with the reference interpreter.
    Check {
        file: PathBuf,
        /// JSON object of named inputs; random input sets are used otherwise.
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
        /// Corrupt the generated program first; the check should then fail.
        #[arg(long, hide = true)]
        mutate: bool,
    },
    /// Run the benchmark suite against the hand-written loops.
    Bench {
        /// Benchmark names to run; all when omitted.
        names: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SCALE)]
        scale: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random small input sets checked per benchmark.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(p: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

fn write(p: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(p, text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Gen { file, out, strict } => {
            let g = gen(&read(&file)?, strict)?;
            for w in &g.warnings {
                eprintln!("{w}");
            }
            match out {
                Some(p) => {
                    write(&p, &g.ir)?;
                    print!("{}", g.report);
                }
                None => {
                    print!("{}", g.ir);
                    eprint!("{}", g.report);
                }
            }
        }
        Cmd::Check {
            file,
            inputs,
            trials,
            seed,
            strict,
            json,
            mutate,
        } => {
            let text = read(&file)?;
            let g = gen(&text, strict)?;
            for w in &g.warnings {
                eprintln!("{w}");
            }
            let c = compile_spec(&text)?;
            let given = inputs
                .map(|p| read(&p).and_then(|t| parse_inputs(&t)))
                .transpose()?;
            let trials_run = check_sets(&c, input_sets(&c, given, seed, trials), mutate)?;
            let mut rows = Vec::new();
            for (i, t) in trials_run.iter().enumerate() {
                let value = t
                    .value
                    .as_ref()
                    .map(|d| d.to_string())
                    .unwrap_or_else(|e| format!("error: {e}"));
                let k = &t.counters;
                if json {
                    rows.push(serde_json::json!({
                        "set": i, "inputs": show_inputs(&t.inputs), "value": value, "agrees": t.agrees(),
                        "steps": k.steps, "result_updates": k.result_updates,
                        "loop_iterations": k.loop_iterations, "allocations": k.allocations,
                        "steady_allocs_nonuser": k.steady_allocs_nonuser,
                    }));
                } else {
                    println!(
                        "set {i}: value {value} steps {} result_updates {} loop_iterations {} allocations {} steady_allocs_nonuser {}",
                        k.steps, k.result_updates, k.loop_iterations, k.allocations, k.steady_allocs_nonuser
                    );
                }
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&rows).unwrap());
            }
            if let Some(t) = trials_run.iter().find(|t| !t.agrees()) {
                return Err(CliError::Mismatch(describe_mismatch(t)));
            }
            eprintln!(
                "pass: {} input set(s) agree with the oracle",
                trials_run.len()
            );
        }
        Cmd::Bench {
            names,
            scale,
            seed,
            trials,
            json,
            out,
        } => {
            let results = run_suite(&names, scale, seed, trials)?;
            let text = if json {
                serde_json::to_string_pretty(&results).unwrap() + "\n"
            } else {
                let mut s = format!("{TSV_HEADER}\n");
                for r in &results {
                    s.push_str(&r.tsv());
                    s.push('\n');
                }
                s
            };
            match out {
                Some(p) => write(&p, &text)?,
                None => print!("{text}"),
            }
            let bad: Vec<_> = results
                .iter()
                .filter(|r| !r.values_agree())
                .map(|r| r.name.as_str())
                .collect();
            if !bad.is_empty() {
                return Err(CliError::Mismatch(format!(
                    "values disagree: {}",
                    bad.join(", ")
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
