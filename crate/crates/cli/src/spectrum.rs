use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde_json::json;

use regiospec::galerkin::{assemble_es, assemble_mass, build_mesh};
use regiospec::scalar::format_num;
use regiospec::spectrum::solve_eigs;

use crate::{parse_domain, render, write_file, CliError, CliResult};

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[arg(long, default_value = "0,1")]
    domain: String,
    /// Cells per dimension.
    #[arg(long, default_value_t = 64)]
    cells: usize,
    #[arg(long)]
    s: f64,
    /// Number of eigenpairs, starting from the zero eigenvalue.
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Include eigenvectors in JSON output.
    #[arg(long)]
    vectors: bool,
    /// Omit timing so repeated runs are byte-identical.
    #[arg(long)]
    deterministic: bool,
    /// Accepted for interface uniformity; the computation draws no random numbers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn run(a: SpectrumArgs) -> CliResult<()> {
    let d = parse_domain(&a.domain)?;
    if a.cells < 2 {
        return Err(CliError::Usage("--cells must be at least 2".into()));
    }
    let start = Instant::now();
    let mesh = build_mesh(&d, a.cells)?;
    let stiff = assemble_es(&mesh, a.s)?;
    let mass = assemble_mass(&mesh);
    if a.count == 0 || a.count > mesh.node_count() {
        return Err(CliError::Usage(format!("--count must be in 1..={}", mesh.node_count())));
    }
    let result = solve_eigs(&stiff, &mass, a.count)?.with_mesh(mesh.info());
    let checks = result.checks(&stiff, &mass);
    let text = match a.format {
        Format::Json => {
            let mut v = if a.vectors { result.to_json_with_vectors() } else { serde_json::to_value(&result).unwrap() };
            v["checks"] = serde_json::to_value(&checks).unwrap();
            v["seed"] = json!(a.seed);
            if !a.deterministic {
                v["elapsedSeconds"] = json!(start.elapsed().as_secs_f64());
            }
            render(&v)
        }
        Format::Csv => {
            let mut out = String::from("index,lambda,residual\n");
            for (i, (l, r)) in result.eigenvalues.iter().zip(&result.residuals).enumerate() {
                out.push_str(&format!("{i},{},{}\n", format_num(*l), format_num(*r)));
            }
            out
        }
    };
    match &a.output {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    if checks.passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!("spectral invariants failed: {}", serde_json::to_string(&checks).unwrap())))
    }
}
