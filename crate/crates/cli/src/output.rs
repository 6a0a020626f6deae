use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use ghostfd::analysis::{ErrorReport, StencilDiagnostics, NORM_NAMES};
use ghostfd::assembly::Assembly;
use ghostfd::geometry::Classification;
use ghostfd::pipeline::SweepOutcome;
use serde::Serialize;
use tempfile::NamedTempFile;

/// 17 significant digits.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut buf = io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

pub fn ghosts_csv(diag: &StencilDiagnostics) -> String {
    let mut out = String::from(
        "k,unknown,i,j,layer,size,diameter,chi,ratio,collar_mode,collar_x,collar_y,swaps,aperture_deg\n",
    );
    for (k, r) in diag.records.iter().enumerate() {
        writeln!(
            out,
            "{k},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.unknown,
            r.i,
            r.j,
            r.layer,
            r.size,
            float(r.diameter),
            float(r.chi),
            float(r.ratio),
            r.collar_mode.as_str(),
            float(r.collar_x),
            float(r.collar_y),
            r.swaps,
            opt_float(r.aperture_deg)
        )
        .expect("string write");
    }
    out
}

/// One line per stencil member with its boundary-operator coefficient.
pub fn stencils_csv(assembly: &Assembly, classification: &Classification) -> String {
    let mut out = String::from("k,ghost_i,ghost_j,member_i,member_j,member_kind,coefficient\n");
    for (k, (stencil, row)) in assembly.stencils.iter().zip(&assembly.boundary_rows).enumerate() {
        for (m, c) in stencil.members.iter().zip(&row.coefficients) {
            let kind = if classification.is_ghost(*m) { "ghost" } else { "interior" };
            writeln!(
                out,
                "{k},{},{},{},{},{kind},{}",
                stencil.ghost.i,
                stencil.ghost.j,
                m.i,
                m.j,
                float(*c)
            )
            .expect("string write");
        }
    }
    out
}

pub fn convergence_csv(outcome: &SweepOutcome) -> String {
    let mut out = String::from("N,h,L1,Linf,gradL1,gradLinf\n");
    for r in outcome.levels.iter().filter_map(|l| l.errors) {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            float(r.h),
            float(r.l1),
            float(r.linf),
            float(r.grad_l1),
            float(r.grad_linf)
        )
        .expect("string write");
    }
    out
}

/// Two columns `log10(h) log10(error)` per norm, keyed by norm name.
pub fn plot_files(reports: &[ErrorReport]) -> Vec<(String, String)> {
    NORM_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mut text = format!("# log10_h log10_{name}\n");
            for r in reports {
                writeln!(text, "{} {}", float(r.h.log10()), float(r.norms()[k].log10())).expect("string write");
            }
            (format!("plot_{name}.dat"), text)
        })
        .collect()
}
