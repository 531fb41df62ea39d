use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use incidence_core::compile::{compile_system, CompileError, CompileOptions};
use incidence_core::config::{deserialize, serialize, Configuration};
use incidence_core::field::{make_field, FieldSpec};
use incidence_core::gadgets::TraceKind;
use incidence_core::render::{render_summary, render_svg, Viewport};
use incidence_core::slp::{decompose, find_witness, num_vars, parse_system, parse_witness, Poly};
use incidence_core::verify::{check_realization, freedom_audit, gadget_oracle, oracle_sweep, soundness_suite};
use serde_json::json;

const OK: u8 = 0;
const FAILED: u8 = 1;
const USAGE: u8 = 2;
const COMPILE: u8 = 3;

/// Witness search budget for --find-witness and the soundness sweep.
const SEARCH_BUDGET: u128 = 1_000_000;

#[derive(Parser)]
#[command(name = "incidence", version, about = "Compile polynomial systems into point-line configurations")]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct FieldArgs {
    /// Characteristic; 0 selects the rationals.
    #[arg(long = "char", default_value_t = 0)]
    p: u64,
    /// Extension degree of the base field.
    #[arg(long = "ext", default_value_t = 1)]
    k: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the straight-line program of a system.
    Decompose {
        #[arg(long)]
        input: PathBuf,
    },
    /// Build a configuration realizing the system at a witness.
    Compile {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
        /// Assignment such as "x1=3, x2=1/2".
        #[arg(long, conflicts_with = "find_witness")]
        witness: Option<String>,
        /// Search the base field for a solution.
        #[arg(long)]
        find_witness: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_retries: usize,
        /// Force the working extension degree.
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Re-check a saved configuration.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a gadget on every choice of its free draws.
    Oracle {
        #[arg(long)]
        gadget: String,
        #[command(flatten)]
        field: FieldArgs,
        /// Comma separated inputs; without them all admissible inputs are swept.
        #[arg(long)]
        inputs: Option<String>,
        /// Sweep all admissible inputs (the default when no inputs are given).
        #[arg(long)]
        exhaustive: bool,
    },
    /// Compile at every assignment of a small field and compare with the solutions.
    Soundness {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Draw a saved configuration as SVG.
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 600)]
        height: u32,
    },
}

struct Fail(u8, String);

impl Fail {
    fn usage(e: impl ToString) -> Self {
        Fail(USAGE, e.to_string())
    }
}

type Outcome = Result<u8, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            if cli.json {
                println!("{}", json!({ "error": msg, "exit": code }));
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Fail> {
    fs::read(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Fail> {
    fs::write(path, bytes).map_err(|e| Fail(FAILED, format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<Vec<Poly>, Fail> {
    let text = String::from_utf8(read(path)?).map_err(Fail::usage)?;
    parse_system(&text).map_err(Fail::usage)
}

fn load_config(path: &Path) -> Result<Configuration, Fail> {
    deserialize(&read(path)?).map_err(Fail::usage)
}

fn field(f: &FieldArgs) -> Result<FieldSpec, Fail> {
    make_field(f.p, f.k).map_err(Fail::usage)
}

fn emit(json_mode: bool, value: serde_json::Value, text: impl FnOnce() -> String) {
    if json_mode {
        println!("{}", serde_json::to_string_pretty(&value).unwrap());
    } else {
        print!("{}", text());
    }
}

fn verdict(pass: bool) -> u8 {
    if pass {
        OK
    } else {
        FAILED
    }
}

fn run(cli: &Cli) -> Outcome {
    let js = cli.json;
    match &cli.cmd {
        Cmd::Decompose { input } => {
            let polys = load_system(input)?;
            let prog = decompose(&polys, num_vars(&polys));
            let eqs: Vec<String> = prog.equations.iter().map(|e| e.to_string()).collect();
            emit(js, json!({ "n": prog.n, "m": prog.m, "equations": eqs, "notes": prog.notes }), || prog.to_string());
            Ok(OK)
        }
        Cmd::Compile { input, field: fa, witness, find_witness: search, seed, max_retries, degree, out, svg } => {
            let polys = load_system(input)?;
            let base = field(fa)?;
            let n = num_vars(&polys);
            let w = match (witness, search) {
                (Some(text), _) => parse_witness(text, &base, n).map_err(Fail::usage)?,
                (None, true) => match find_witness(&polys, &base, SEARCH_BUDGET).map_err(Fail::usage)? {
                    Some(w) => w,
                    None => return Err(Fail(COMPILE, format!("no solution over {base}"))),
                },
                (None, false) if n == 0 => Vec::new(),
                (None, false) => return Err(Fail::usage("give --witness or --find-witness")),
            };
            let opts = CompileOptions { seed: *seed, max_retries: *max_retries, require_solution: true, degree: *degree };
            let compiled = compile_system(&polys, &base, &w, &opts).map_err(compile_fail)?;
            if let Some(path) = out {
                write(path, &serialize(&compiled.config))?;
            }
            if let Some(path) = svg {
                match render_svg(&compiled.config, Viewport::default()) {
                    Ok(bytes) => write(path, &bytes)?,
                    Err(e) => {
                        eprintln!("note: {e}; writing a summary instead");
                        write(path, &render_summary(&compiled.config, Viewport::default()))?
                    }
                }
            }
            let r = &compiled.report;
            emit(js, serde_json::to_value(r).unwrap(), || {
                format!(
                    "compiled over {} (base {})\n{} points, {} lines, {} bystanders, s = {}\nseed {} after {} attempt(s), {} ms\n",
                    r.working_field, r.base_field, r.points, r.lines, r.bystanders, r.free_count, r.seed, r.attempts, r.elapsed_ms
                )
            });
            Ok(OK)
        }
        Cmd::Verify { config } => {
            let cfg = load_config(config)?;
            let real = check_realization(&cfg);
            let audit = freedom_audit(&cfg);
            let pass = real.pass && audit.pass;
            emit(js, json!({ "pass": pass, "realization": real, "audit": audit }), || {
                let mut s = format!(
                    "{} points, {} lines\nincidences: {}\nframings: {}\nconditions: {}\n",
                    real.points,
                    real.lines,
                    ok_or_count(&real.incidence_diffs),
                    ok_or_count(&real.framing_diffs),
                    ok_or_count(&real.conditions.violations.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>())
                );
                if let Some(w) = &real.witness {
                    s += &format!("witness: {} ({})\n", ok_or_count(&w.failing), w.values.join(", "));
                }
                s += &format!("freedom: recomputed {} vs recorded {}\n", audit.recomputed, audit.ledger);
                for d in real.incidence_diffs.iter().chain(&real.framing_diffs).chain(&audit.mismatches) {
                    s += &format!("  {d}\n");
                }
                s + if pass { "PASS\n" } else { "FAIL\n" }
            });
            Ok(verdict(pass))
        }
        Cmd::Oracle { gadget, field: fa, inputs, exhaustive } => {
            let kind = TraceKind::from_name(gadget)
                .filter(|k| TraceKind::GADGETS.contains(k))
                .ok_or_else(|| Fail::usage(format!("unknown gadget {gadget}")))?;
            let spec = field(fa)?;
            if spec.is_rational() {
                return Err(Fail::usage("the oracle needs a finite field"));
            }
            let results = match inputs {
                Some(text) if !exhaustive => {
                    let vals = text
                        .split(',')
                        .map(|s| spec.parse_scalar(s.trim()).ok_or_else(|| Fail::usage(format!("cannot read {s}"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    vec![gadget_oracle(kind, &spec, &vals).map_err(Fail::usage)?]
                }
                _ => oracle_sweep(kind, &spec).map_err(Fail::usage)?,
            };
            let pass = results.iter().all(|r| r.pass);
            emit(js, json!({ "pass": pass, "results": results }), || {
                let mut s = String::new();
                for r in &results {
                    s += &format!(
                        "{} ({}) expected {} achieved {{{}}} over {} choices: {}\n",
                        r.kind,
                        r.inputs.join(", "),
                        r.expected.as_deref().unwrap_or("nothing"),
                        r.achieved.iter().cloned().collect::<Vec<_>>().join(", "),
                        r.choices,
                        if r.pass { "ok" } else { "FAIL" }
                    );
                }
                s
            });
            Ok(verdict(pass))
        }
        Cmd::Soundness { input, field: fa, seed } => {
            let polys = load_system(input)?;
            let spec = field(fa)?;
            let rep = soundness_suite(&polys, &spec, *seed, SEARCH_BUDGET).map_err(Fail::usage)?;
            emit(js, serde_json::to_value(&rep).unwrap(), || {
                format!(
                    "{} assignments over {}: {} solutions, {} realized, {} discrepancies\n{}\n",
                    rep.entries.len(),
                    rep.field,
                    rep.solutions,
                    rep.realized,
                    rep.discrepancies.len(),
                    if rep.pass { "PASS" } else { "FAIL" }
                )
            });
            Ok(verdict(rep.pass))
        }
        Cmd::Render { config, out, width, height } => {
            let cfg = load_config(config)?;
            let vp = Viewport { width: *width, height: *height };
            let bytes = render_svg(&cfg, vp).unwrap_or_else(|e| {
                eprintln!("note: {e}; writing a summary instead");
                render_summary(&cfg, vp)
            });
            write(out, &bytes)?;
            emit(js, json!({ "written": out.display().to_string(), "bytes": bytes.len() }), String::new);
            Ok(OK)
        }
    }
}

fn ok_or_count(diffs: &[String]) -> String {
    if diffs.is_empty() {
        "ok".into()
    } else {
        format!("{} differences", diffs.len())
    }
}

fn compile_fail(e: CompileError) -> Fail {
    match e {
        CompileError::WitnessLength { .. } | CompileError::Slp(_) | CompileError::Field(_) => Fail::usage(e),
        _ => Fail(COMPILE, e.to_string()),
    }
}
