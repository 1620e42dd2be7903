//! Trial-log persistence and report files.
//!
//! The log is JSONL, one [`TrialRecord`] per line with a fixed key order.
//! Floats are written in shortest round-trip form so every CSV value parses
//! back to the exact logged `f64`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{best_so_far_curve, top_quintile_analysis, RunSummary, TrialRecord};

pub fn to_jsonl(log: &[TrialRecord]) -> Result<String> {
    let mut out = String::new();
    for r in log {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_log(path: impl AsRef<Path>, log: &[TrialRecord]) -> Result<()> {
    fs::write(path, to_jsonl(log)?)?;
    Ok(())
}

pub fn write_summary(path: impl AsRef<Path>, summary: &RunSummary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads a JSONL trial log; blank lines are skipped. Errors carry the
/// 1-based line number.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path)?;
    let mut log = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrialRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLog {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        log.push(rec);
    }
    Ok(log)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn best_so_far_csv(log: &[TrialRecord]) -> Result<String> {
    let mut out = String::from("trial,best_m\n");
    for (t, m) in best_so_far_curve(log)? {
        writeln!(out, "{t},{m}").unwrap();
    }
    Ok(out)
}

pub fn trials_csv(log: &[TrialRecord]) -> String {
    let mut out = String::from("trial,accuracy,params,m_value\n");
    for r in log {
        writeln!(out, "{},{},{},{}", r.trial, opt(r.accuracy), r.params, r.m_value).unwrap();
    }
    out
}

pub fn top20_csv(log: &[TrialRecord]) -> Result<String> {
    let q = top_quintile_analysis(log)?;
    let mut out = String::from("trial,arch_id,genotype,accuracy,params,m_value\n");
    for r in &q.records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.trial,
            r.arch_id,
            r.genotype,
            opt(r.accuracy),
            r.params,
            r.m_value
        )
        .unwrap();
    }
    Ok(out)
}

/// Line chart of the best-so-far curve on a fixed 640x360 canvas.
pub fn best_so_far_svg(log: &[TrialRecord]) -> Result<String> {
    let curve = best_so_far_curve(log)?;
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let n = curve.len().max(2) as f64 - 1.0;
    let x = |i: usize| pad + (w - 2.0 * pad) * (i as f64) / n;
    let y = |m: f64| h - pad - (h - 2.0 * pad) * m.clamp(0.0, 1.0);
    let points: Vec<String> = curve
        .iter()
        .enumerate()
        .map(|(i, &(_, m))| format!("{:.2},{:.2}", x(i), y(m)))
        .collect();
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<path d="M{pad},{pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    )
    .unwrap();
    for tick in [0.0, 0.5, 1.0] {
        writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{tick}</text>"#,
            pad - 4.0,
            y(tick) + 4.0
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">trial (1..{})</text>"#,
        w / 2.0,
        h - 10.0,
        curve.len()
    )
    .unwrap();
    writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        points.join(" ")
    )
    .unwrap();
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `best_so_far.csv`, `trials.csv`, `top20.csv` and optionally
/// `best_so_far.svg` into `out_dir`. Returns the written paths.
pub fn write_report(log: &[TrialRecord], out_dir: impl AsRef<Path>, svg: bool) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = vec![
        ("best_so_far.csv", best_so_far_csv(log)?),
        ("trials.csv", trials_csv(log)),
        ("top20.csv", top20_csv(log)?),
    ];
    if svg {
        files.push(("best_so_far.svg", best_so_far_svg(log)?));
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::File::create(&p)?.write_all(body.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}
