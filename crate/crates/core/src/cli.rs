//! Command-line front end. [`run`] is the whole program minus process
//! exit, so it can be driven from tests.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::egraph::{saturate, EGraph, SaturationLimits};
use crate::extract::{extract, CostModel};
use crate::interp::{all_close, evaluate, io, max_abs_diff, random_env, shape_env_of, ABS_TOL, REL_TOL};
use crate::ir::{infer_shape, parse, parse_shape_env, Expr, ShapeEnv};
use crate::rewrites::{parse_rule_sets, select_rules, RuleParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_SHAPE: i32 = 2;
pub const EXIT_ENV: i32 = 3;
/// `verify` ran but some trial disagreed.
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "apir", version, about = "Access-pattern tensor IR: check, evaluate, rewrite and verify programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the access-pattern shape of a program.
    Check {
        program: PathBuf,
        #[arg(short, long)]
        shapes: PathBuf,
    },
    /// Evaluate a program and print the result tensor.
    Eval {
        program: PathBuf,
        #[arg(short, long)]
        shapes: PathBuf,
        /// File of `name = path` lines naming the input tensors.
        #[arg(short, long)]
        tensors: PathBuf,
    },
    /// Saturate with the selected rule sets and print the cheapest program.
    Rewrite(RewriteArgs),
    /// Compare two programs on seeded random inputs.
    Verify {
        program_a: PathBuf,
        program_b: PathBuf,
        #[arg(short, long)]
        shapes: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
    },
}

#[derive(Debug, Args)]
pub struct RewriteArgs {
    pub program: PathBuf,
    #[arg(short, long)]
    pub shapes: PathBuf,
    /// Comma-separated rule sets: systolic, im2col, blocking, cleanup.
    #[arg(long, default_value = "systolic,cleanup")]
    pub rules: String,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub array_rows: u64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub array_cols: u64,
    /// Largest activation batch per systolic invocation. Defaults to the
    /// block size when blocking is selected, unbounded otherwise.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub array_batch: Option<u64>,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub block_size: u64,
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iterations: u64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_nodes: u64,
    /// Seconds.
    #[arg(long, default_value_t = 120.0)]
    pub timeout: f64,
    #[arg(long, default_value = "default")]
    pub cost_model: String,
    /// Cost override `head=value`; `dotProd` sets the per-element factor.
    #[arg(long = "cost")]
    pub costs: Vec<String>,
    /// Write the saturated e-graph, one class per line, to this file.
    #[arg(long)]
    pub dump_graph: Option<PathBuf>,
}

struct Failure {
    code: i32,
    msg: String,
}

fn fail(code: i32, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

type Res<T> = Result<T, Failure>;

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Res<Expr> {
    parse(&read(path)?).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_shapes(path: &Path) -> Res<ShapeEnv> {
    parse_shape_env(&read(path)?).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn check_shape(e: &Expr, env: &ShapeEnv, path: &Path) -> Res<crate::ir::AccessPatternShape> {
    infer_shape(e, env).map_err(|err| fail(EXIT_SHAPE, format!("{}: shape error: {err}", path.display())))
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Res<i32> {
    match cmd {
        Command::Check { program, shapes } => {
            let e = load_program(&program)?;
            let env = load_shapes(&shapes)?;
            let s = check_shape(&e, &env, &program)?;
            let _ = writeln!(out, "{s}");
            Ok(EXIT_OK)
        }
        Command::Eval { program, shapes, tensors } => cmd_eval(&program, &shapes, &tensors, out),
        Command::Rewrite(args) => cmd_rewrite(&args, out, err),
        Command::Verify {
            program_a,
            program_b,
            shapes,
            seed,
            trials,
        } => cmd_verify(&program_a, &program_b, &shapes, seed, trials, out),
    }
}

fn cmd_eval(program: &Path, shapes: &Path, tensors: &Path, out: &mut dyn Write) -> Res<i32> {
    let e = load_program(program)?;
    let env = load_shapes(shapes)?;
    check_shape(&e, &env, program)?;
    let tenv = io::read_tensor_env(tensors).map_err(|e| fail(EXIT_ENV, e.to_string()))?;
    for name in e.tensor_names() {
        let t = tenv
            .get(name)
            .ok_or_else(|| fail(EXIT_ENV, format!("tensor `{name}` missing from {}", tensors.display())))?;
        let want = env.get(name).expect("shape-checked program has all names bound");
        if t.shape() != want {
            return Err(fail(
                EXIT_ENV,
                format!("tensor `{name}` has shape {:?}, shape environment says {:?}", t.shape(), want),
            ));
        }
    }
    let result = evaluate(&e, &tenv).map_err(|e| fail(EXIT_SHAPE, e.to_string()))?;
    let _ = out.write_all(io::write_tensor(&result).as_bytes());
    Ok(EXIT_OK)
}

fn cmd_rewrite(args: &RewriteArgs, out: &mut dyn Write, err: &mut dyn Write) -> Res<i32> {
    let e = load_program(&args.program)?;
    let env = load_shapes(&args.shapes)?;
    check_shape(&e, &env, &args.program)?;
    let sets = parse_rule_sets(&args.rules).map_err(|m| fail(EXIT_PARSE, m))?;
    let mut cm: CostModel = args.cost_model.parse().map_err(|e| fail(EXIT_PARSE, format!("{e}")))?;
    for c in &args.costs {
        cm.set(c).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    }
    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        return Err(fail(EXIT_PARSE, "--timeout must be a positive number of seconds"));
    }
    let params = RuleParams {
        array_rows: args.array_rows as usize,
        array_cols: args.array_cols as usize,
        array_batch: args.array_batch.map(|b| b as usize),
        block_size: args.block_size as usize,
    };
    let limits = SaturationLimits {
        max_iterations: args.max_iterations as usize,
        max_nodes: args.max_nodes as usize,
        timeout: Duration::from_secs_f64(args.timeout),
    };
    let rules = select_rules(&sets, &params);
    let mut g = EGraph::new(env);
    let root = g.add_expr(&e).map_err(|e| fail(EXIT_SHAPE, e.to_string()))?;
    let report = saturate(&mut g, &rules, &limits).map_err(|e| fail(EXIT_SHAPE, format!("internal: {e}")))?;
    if let Some(path) = &args.dump_graph {
        fs::write(path, g.dump()).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    }
    let best = extract(&g, root, &cm).map_err(|e| fail(EXIT_SHAPE, format!("internal: {e}")))?;
    let _ = writeln!(out, "{}", best.expr);
    let _ = writeln!(err, "{report}");
    let _ = writeln!(err, "cost: {}", best.total_cost);
    Ok(EXIT_OK)
}

fn cmd_verify(a: &Path, b: &Path, shapes: &Path, seed: u64, trials: u64, out: &mut dyn Write) -> Res<i32> {
    let ea = load_program(a)?;
    let eb = load_program(b)?;
    let env = load_shapes(shapes)?;
    let sa = check_shape(&ea, &env, a)?;
    let sb = check_shape(&eb, &env, b)?;
    if sa != sb {
        return Err(fail(EXIT_SHAPE, format!("programs have different shapes: {sa} vs {sb}")));
    }
    let mut worst = 0.0f64;
    let mut failed = 0;
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
        let tenv = random_env(&env, &mut rng);
        debug_assert_eq!(shape_env_of(&tenv), env);
        let ra = evaluate(&ea, &tenv).map_err(|e| fail(EXIT_SHAPE, e.to_string()))?;
        let rb = evaluate(&eb, &tenv).map_err(|e| fail(EXIT_SHAPE, e.to_string()))?;
        worst = worst.max(max_abs_diff(&ra, &rb));
        if !all_close(&ra, &rb, REL_TOL, ABS_TOL) {
            failed += 1;
        }
    }
    let verdict = if failed == 0 { "pass" } else { "FAIL" };
    let _ = writeln!(
        out,
        "{verdict}: {}/{trials} trials agree, max discrepancy {worst:e}",
        trials - failed
    );
    Ok(if failed == 0 { EXIT_OK } else { EXIT_MISMATCH })
}
