//! Persistence: trace CSVs, summary CSVs, and the versioned instance file.
//!
//! Float formatting is pinned so that seeded commands rewrite byte-identical
//! files: matrix entries and trace values use 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly. Wall-clock timings are not
//! reproducible, so trace/summary files leave their timing columns empty
//! unless explicitly asked; measured times always go to a sidecar metadata
//! file instead.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bench::{build_problem, gen_box, InstanceSpec, SummaryRow};
use crate::domain::{Problem, Trace};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::scalar::Scalar;

/// 17-significant-digit scientific form; exact round-trip for `f64`.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

pub const TRACE_HEADER: &str = "k,step_norm,f_value,dist_to_oracle,elapsed_ms";
pub const SUMMARY_HEADER: &str = "method,n,epsilon,runs,avg_iterations,avg_cpu_ms";

/// Renders a trace as CSV. `with_timing` fills the elapsed column (the file
/// then varies run to run); the distance column is populated only when the
/// run carried a reference point, never zero-filled.
pub fn trace_to_csv<S: Scalar>(trace: &Trace<S>, with_timing: bool) -> String {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let dist = r
            .dist_to_oracle
            .map(|d| fmt_g17(d.to_f64().unwrap()))
            .unwrap_or_default();
        let elapsed = if with_timing {
            fmt_g17(r.elapsed_ms)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.k,
            fmt_g17(r.step_norm.to_f64().unwrap()),
            fmt_g17(r.f_value.to_f64().unwrap()),
            dist,
            elapsed
        );
    }
    out
}

/// Renders summary rows as CSV in plan order.
pub fn summary_to_csv(rows: &[SummaryRow], with_timing: bool) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let cpu = if with_timing {
            fmt_g17(r.avg_cpu_ms)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            r.n,
            fmt_g17(r.epsilon),
            r.runs,
            fmt_g17(r.avg_iterations),
            cpu
        );
    }
    out
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

const INSTANCE_MAGIC: &str = "proxsplit instance v1";
const MATRIX_NAMES: [&str; 5] = ["A", "B", "C", "P", "Q"];

/// Serializes a generated instance: dimension, seed, eigenvalue shifts and
/// the five matrices at 17 significant digits — enough to reload the problem
/// without rerunning the generator.
pub fn instance_to_string<S: Scalar>(spec: &InstanceSpec, problem: &Problem<S>) -> String {
    use crate::domain::PieceKind;
    let mut out = String::new();
    let _ = writeln!(out, "{INSTANCE_MAGIC}");
    let _ = writeln!(out, "n {}", spec.n);
    let _ = writeln!(out, "seed {}", spec.seed);
    let _ = writeln!(out, "eigenshift_a {}", fmt_g17(0.0));
    let _ = writeln!(out, "eigenshift_rest {}", fmt_g17(spec.eigen_shift));
    let mut matrices: Vec<&SymMatrix<S>> = Vec::new();
    for comp in problem.components() {
        for piece in comp.pieces() {
            if let PieceKind::QuadForm(m) = piece.kind() {
                matrices.push(m);
            }
        }
    }
    for (name, m) in MATRIX_NAMES.iter().zip(matrices) {
        let _ = writeln!(out, "matrix {name} {}", m.dim());
        for row in m.rows() {
            let line: Vec<String> = row
                .iter()
                .map(|v| fmt_g17(v.to_f64().unwrap()))
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    out
}

/// Parses an instance file back into its spec and problem. The feasible box
/// is regenerated from the dimension (the family's box is a formula of `n`).
pub fn instance_from_string<S: Scalar>(
    text: &str,
    path: &str,
) -> Result<(InstanceSpec, Problem<S>)> {
    let bad = |reason: &str| Error::Parse {
        path: path.to_string(),
        reason: reason.to_string(),
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(INSTANCE_MAGIC) {
        return Err(bad("missing or unsupported header"));
    }
    let mut n: Option<usize> = None;
    let mut seed: Option<u64> = None;
    let mut eigen_shift: Option<f64> = None;
    let mut matrices: Vec<SymMatrix<S>> = Vec::new();
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("n") => {
                n = Some(
                    parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("bad n line"))?,
                )
            }
            Some("seed") => {
                seed = Some(
                    parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("bad seed line"))?,
                )
            }
            Some("eigenshift_a") => {}
            Some("eigenshift_rest") => {
                eigen_shift = Some(
                    parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("bad eigenshift line"))?,
                )
            }
            Some("matrix") => {
                let _name = parts.next().ok_or_else(|| bad("matrix line missing name"))?;
                let dim: usize = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("matrix line missing dimension"))?;
                let mut data = Vec::with_capacity(dim * dim);
                for _ in 0..dim {
                    let row = lines.next().ok_or_else(|| bad("truncated matrix block"))?;
                    for tok in row.split_whitespace() {
                        let v: f64 = tok.parse().map_err(|_| bad("bad matrix entry"))?;
                        data.push(crate::scalar::s::<S>(v));
                    }
                }
                if data.len() != dim * dim {
                    return Err(bad("matrix block has wrong entry count"));
                }
                matrices.push(SymMatrix::from_rows(dim, data).map_err(|e| bad(&e.to_string()))?);
            }
            _ => return Err(bad("unrecognized line")),
        }
    }
    let n = n.ok_or_else(|| bad("missing n"))?;
    let seed = seed.ok_or_else(|| bad("missing seed"))?;
    let eigen_shift = eigen_shift.ok_or_else(|| bad("missing eigenshift"))?;
    if matrices.len() != 5 {
        return Err(bad("expected five matrices"));
    }
    let mut spec = InstanceSpec::new(n, seed)?;
    spec.eigen_shift = eigen_shift;
    let a = matrices.remove(0);
    let problem = build_problem(gen_box::<S>(n)?, a, matrices)?;
    Ok((spec, problem))
}

pub fn save_instance<S: Scalar>(
    path: &Path,
    spec: &InstanceSpec,
    problem: &Problem<S>,
) -> Result<()> {
    write_text(path, &instance_to_string(spec, problem))
}

pub fn load_instance<S: Scalar>(path: &Path) -> Result<(InstanceSpec, Problem<S>)> {
    let text = read_text(path)?;
    instance_from_string(&text, &path.display().to_string())
}
