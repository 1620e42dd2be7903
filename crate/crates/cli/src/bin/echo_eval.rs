//! mfnas-eval/1 evaluator that answers with the in-process surrogate formula.
//!
//! Used to exercise the external-evaluator path without a trainer. Fault
//! options make it misbehave on purpose.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use mfnas_core::evaluators::{surrogate_accuracy, PROTOCOL};
use mfnas_core::{Genotype, SurrogateSpec};

#[derive(Parser, Debug)]
#[command(name = "mfnas-echo-eval", version)]
struct Args {
    /// Surrogate target genotype
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    base: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    noise_amplitude: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Exit without answering once this many requests have been answered
    #[arg(long)]
    die_after: Option<u64>,
    /// Answer requests for this genotype with an error
    #[arg(long)]
    error_on: Option<String>,
}

fn spec_from(args: &Args) -> Result<SurrogateSpec, String> {
    let mut spec = SurrogateSpec::default();
    if let Some(t) = &args.target {
        spec.target = t.parse().map_err(|e| format!("--target: {e}"))?;
    }
    spec.base = args.base.unwrap_or(spec.base);
    spec.step = args.step.unwrap_or(spec.step);
    spec.noise_amplitude = args.noise_amplitude.unwrap_or(spec.noise_amplitude);
    spec.noise_seed = args.noise_seed.unwrap_or(spec.noise_seed);
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Answer for one request line. Unparsable requests get id -1.
fn answer(line: &str, spec: &SurrogateSpec, error_on: Option<&Genotype>) -> Value {
    let req: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return json!({"id": -1, "error": format!("unparsable request: {e}")}),
    };
    let Some(id) = req.get("id").and_then(Value::as_i64) else {
        return json!({"id": -1, "error": "request without integer id"});
    };
    let slots: Option<Vec<u8>> = req.get("genotype").and_then(Value::as_array).and_then(|a| {
        a.iter()
            .map(|v| v.as_u64().and_then(|x| u8::try_from(x).ok()))
            .collect()
    });
    let Some(slots) = slots else {
        return json!({"id": id, "error": "genotype must be an array of small integers"});
    };
    let g = Genotype::new(slots);
    if g.len() != spec.target.len() {
        return json!({"id": id, "error": format!("expected {} slots, got {}", spec.target.len(), g.len())});
    }
    if error_on == Some(&g) {
        return json!({"id": id, "error": format!("refusing {g}")});
    }
    json!({"id": id, "accuracy": surrogate_accuracy(&g, spec)})
}

fn main() -> ExitCode {
    let args = Args::parse();
    let spec = match spec_from(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("mfnas-echo-eval: {e}");
            return ExitCode::from(2);
        }
    };
    let error_on = match args.error_on.as_deref().map(str::parse::<Genotype>).transpose() {
        Ok(g) => g,
        Err(e) => {
            eprintln!("mfnas-echo-eval: --error-on: {e}");
            return ExitCode::from(2);
        }
    };

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut emit = |v: &Value| -> io::Result<()> {
        writeln!(out, "{v}")?;
        out.flush()
    };
    if emit(&json!({"protocol": PROTOCOL})).is_err() {
        return ExitCode::FAILURE;
    }
    let mut answered = 0u64;
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        if args.die_after.is_some_and(|n| answered >= n) {
            eprintln!("mfnas-echo-eval: exiting after {answered} answers");
            return ExitCode::from(3);
        }
        if emit(&answer(&line, &spec, error_on.as_ref())).is_err() {
            break;
        }
        answered += 1;
    }
    ExitCode::SUCCESS
}
