//! CSV tables. Numbers use Rust's shortest round-trip formatting, so files are
//! locale-independent and identical inputs give byte-identical output.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use twoscale::experiments::{AsymptoticsReport, HysteresisReport};
use twoscale::linearization::DissipationReport;
use twoscale::{Grid3, RunRecord, VectorField};

use crate::svg;

pub const RECORD_HEADER: [&str; 8] = ["t", "lambda", "mx", "my", "mz", "energy", "residual", "dist_h2"];

/// Shortest decimal that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn to_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn write_table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(&row).map_err(to_io)?;
    }
    w.flush()
}

pub fn write_record<W: Write>(out: W, record: &RunRecord) -> io::Result<()> {
    let rows = (0..record.len()).map(|i| {
        let m = record.mean[i];
        vec![
            num(record.times[i]),
            num(record.lambda[i]),
            num(m.x),
            num(m.y),
            num(m.z),
            num(record.energy[i]),
            num(record.residual[i]),
            num(record.dist_h2[i]),
        ]
    });
    write_table(out, &RECORD_HEADER, rows)
}

pub fn record_csv(record: &RunRecord) -> String {
    let mut buf = Vec::new();
    write_record(&mut buf, record).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Reads a table written by [`write_record`].
pub fn read_record(text: &str) -> io::Result<RunRecord> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(to_io)?.iter().map(str::to_string).collect();
    if header != RECORD_HEADER {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("unexpected header {header:?}")));
    }
    let mut rec = RunRecord::default();
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(to_io)?;
        let v: Vec<f64> = row
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("row {}: {e}", line + 1)))?;
        if v.len() != RECORD_HEADER.len() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("row {}: wrong width", line + 1)));
        }
        rec.times.push(v[0]);
        rec.lambda.push(v[1]);
        rec.mean.push(twoscale::Vec3::new(v[2], v[3], v[4]));
        rec.energy.push(v[5]);
        rec.residual.push(v[6]);
        rec.dist_h2.push(v[7]);
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

/// Writes one record as a CSV table, or as an SVG chart of `dist_h2(t)`.
pub fn emit_report(record: &RunRecord, format: Format, path: &Path) -> io::Result<()> {
    if record.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty record"));
    }
    match format {
        Format::Csv => write_record(io::BufWriter::new(fs::File::create(path)?), record),
        Format::Svg => {
            let series = svg::Series::new("run", record.times.iter().copied().zip(record.dist_h2.iter().copied()));
            fs::write(path, svg::distance_chart(&[series]))
        }
    }
}

pub fn write_field<W: Write>(out: W, grid: &Grid3, mask: &twoscale::DomainMask, m: &VectorField) -> io::Result<()> {
    let rows = mask.cells().map(|i| {
        let [a, b, c] = grid.coords(i);
        let x = grid.cell_center(i);
        let v = m[i];
        vec![
            a.to_string(),
            b.to_string(),
            c.to_string(),
            num(x.x),
            num(x.y),
            num(x.z),
            num(v.x),
            num(v.y),
            num(v.z),
        ]
    });
    write_table(out, &["i", "j", "k", "x", "y", "z", "mx", "my", "mz"], rows)
}

pub fn write_asymptotics_summary<W: Write>(out: W, rep: &AsymptoticsReport) -> io::Result<()> {
    let rows = rep.runs.iter().map(|r| {
        vec![
            num(r.epsilon),
            num(r.tau),
            num(r.layer_scale()),
            num(r.sup_after),
            r.error.as_ref().map_or(String::new(), |e| e.to_string()),
        ]
    });
    write_table(out, &["epsilon", "tau", "tau_over_eps_ln", "sup_after_tau", "error"], rows)
}

pub fn write_loop<W: Write>(out: W, rep: &HysteresisReport) -> io::Result<()> {
    let rows = rep.table.iter().enumerate().map(|(i, p)| {
        vec![
            num(p.t),
            num(p.lambda),
            num(p.m_u),
            (rep.measured.contains(&i) as u8).to_string(),
        ]
    });
    write_table(out, &["t", "lambda", "m_u", "measured"], rows)
}

pub fn write_scan<W: Write>(out: W, rep: &DissipationReport) -> io::Result<()> {
    let rows = rep.rows.iter().map(|r| {
        vec![
            num(r.lambda),
            r.branch.label().to_string(),
            num(r.worst_ratio),
            num(r.best_ratio),
            num(r.worst_form),
            num(r.c_lin),
        ]
    });
    write_table(out, &["lambda", "branch", "worst_ratio", "best_ratio", "worst_form", "c_lin"], rows)
}
