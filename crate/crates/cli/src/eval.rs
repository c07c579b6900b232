use clap::{Args, ValueEnum};
use serde_json::json;

use regiospec::pointwise::{eval_dk, eval_ds, eval_kappa, eval_llog, eval_regional_fraclap, series_partial};
use regiospec::{Evaluation64, QuadratureSpec64, TestFunction};

use crate::{parse_domain, parse_list, render, CliError, CliResult};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Op {
    Ds,
    Dk,
    Llog,
    Kappa,
    Fraclap,
    Series,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Ds => "ds",
            Op::Dk => "dk",
            Op::Llog => "llog",
            Op::Kappa => "kappa",
            Op::Fraclap => "fraclap",
            Op::Series => "series",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Func {
    Identity,
    Bump,
    Cospi,
    Poly2,
}

impl From<Func> for TestFunction {
    fn from(f: Func) -> Self {
        match f {
            Func::Identity => TestFunction::Identity,
            Func::Bump => TestFunction::Bump,
            Func::Cospi => TestFunction::CosPi,
            Func::Poly2 => TestFunction::Poly2,
        }
    }
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    op: Op,
    /// Built-in test function.
    #[arg(long, value_enum, default_value = "identity")]
    func: Func,
    /// "a,b" for an interval or "a1,b1,a2,b2" for a rectangle.
    #[arg(long, default_value = "0,1")]
    domain: String,
    /// Evaluation point, comma-separated coordinates.
    #[arg(long)]
    x: String,
    #[arg(long)]
    s: Option<f64>,
    /// Coefficient index for `dk`.
    #[arg(long)]
    k: Option<usize>,
    /// Number of series terms for `series`.
    #[arg(long)]
    j: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
}

fn need<T: Copy>(v: Option<T>, flag: &str, op: Op) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --op {}", op.name())))
}

pub fn run(a: EvalArgs) -> CliResult<()> {
    let d = parse_domain(&a.domain)?;
    let x = parse_list(&a.x, "--x")?;
    if x.len() != d.dim() {
        return Err(CliError::Usage(format!("--x has {} coordinates, domain is {}D", x.len(), d.dim())));
    }
    let q = QuadratureSpec64 { abs_tol: a.abs_tol, rel_tol: a.rel_tol, ..Default::default() };
    q.validate()?;
    let u = TestFunction::from(a.func).field(&d);
    let ev: Evaluation64 = match a.op {
        Op::Ds => eval_ds(&u, &d, &x, need(a.s, "s", a.op)?, &q)?,
        Op::Dk => eval_dk(&u, &d, &x, need(a.k, "k", a.op)?, &q)?,
        Op::Llog => eval_llog(&u, &d, &x, &q)?,
        Op::Kappa => Evaluation64 { value: eval_kappa(&d, &x, need(a.s, "s", a.op)?)?, err_estimate: 0.0 },
        Op::Fraclap => eval_regional_fraclap(&u, &d, &x, need(a.s, "s", a.op)?, &q)?,
        Op::Series => series_partial(&u, &d, &x, need(a.s, "s", a.op)?, need(a.j, "j", a.op)?, &q)?,
    };
    let func = if matches!(a.op, Op::Kappa) { None } else { Some(TestFunction::from(a.func).name()) };
    let out = json!({
        "value": ev.value,
        "errEstimate": ev.err_estimate,
        "op": a.op.name(),
        "inputs": {
            "func": func,
            "domain": d,
            "x": x,
            "s": a.s,
            "k": a.k,
            "j": a.j,
        },
    });
    print!("{}", render(&out));
    Ok(())
}
