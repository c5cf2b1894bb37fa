//! Summary tables and learning-curve exports of a study directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rta_core::agents::Algorithm;
use rta_core::env::EnvKind;
use rta_core::harness::{aggregate_seeds, CurveMetric, EvalSummary, RtaMode, RunResult, Stat};
use rta_core::rta::FilterKind;
use rta_core::trainconfig::ConfigKind;

use crate::results::{self, write_atomic, ResultFile};

pub type GroupKey = (EnvKind, Algorithm, FilterKind);

/// Results grouped by table, then by configuration.
pub fn group(files: &[ResultFile]) -> BTreeMap<GroupKey, BTreeMap<ConfigKind, Vec<RunResult>>> {
    let mut g: BTreeMap<GroupKey, BTreeMap<ConfigKind, Vec<RunResult>>> = BTreeMap::new();
    for f in files {
        let r = &f.result;
        g.entry((r.env, r.algorithm, r.filter))
            .or_default()
            .entry(r.config)
            .or_default()
            .push(r.clone());
    }
    g
}

/// Mean and population spread over the union of all episodes.
pub fn pooled(stats: &[(usize, Stat)]) -> Stat {
    let n: usize = stats.iter().map(|(n, _)| n).sum();
    if n == 0 {
        return Stat::default();
    }
    let nf = n as f64;
    let mean = stats.iter().map(|(k, s)| *k as f64 * s.mean).sum::<f64>() / nf;
    let second = stats.iter().map(|(k, s)| *k as f64 * (s.std * s.std + s.mean * s.mean)).sum::<f64>() / nf;
    Stat {
        mean,
        std: (second - mean * mean).max(0.0).sqrt(),
    }
}

pub const TABLE_COLUMNS: [&str; 7] = [
    "configuration",
    "rta",
    "return",
    "length",
    "success",
    "interventions/violations",
    "correction",
];

fn header() -> String {
    let mut s = format!("| {} |\n", TABLE_COLUMNS.join(" | "));
    s.push('|');
    for _ in TABLE_COLUMNS {
        s.push_str("---|");
    }
    s.push('\n');
    s
}

fn cell(s: Stat) -> String {
    format!("{:.2} ± {:.2}", s.mean, s.std)
}

pub fn render_tables_from(files: &[ResultFile]) -> String {
    let groups = group(files);
    if groups.is_empty() {
        return header();
    }
    let mut out = String::new();
    for ((env, algo, filter), configs) in &groups {
        let _ = writeln!(out, "## {env} / {algo} / {filter}\n");
        out.push_str(&header());
        for (config, runs) in configs {
            for mode in [RtaMode::On, RtaMode::Off] {
                let finals: Vec<EvalSummary> = runs
                    .iter()
                    .filter_map(|r| match mode {
                        RtaMode::On => r.final_on,
                        RtaMode::Off => r.final_off,
                    })
                    .collect();
                let col = |f: fn(&EvalSummary) -> Stat| cell(pooled(&finals.iter().map(|s| (s.episodes, f(s))).collect::<Vec<_>>()));
                let _ = writeln!(
                    out,
                    "| {config} | {} | {} | {} | {} | {} | {} |",
                    mode.name(),
                    col(|s| s.ret),
                    col(|s| s.length),
                    col(|s| s.success),
                    col(|s| s.interventions_or_violations),
                    col(|s| s.correction),
                );
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_tables(dir: &Path) -> io::Result<String> {
    Ok(render_tables_from(&results::load_results(dir)?))
}

pub fn curve_file_name(key: &GroupKey, metric: CurveMetric, mode: RtaMode) -> String {
    format!("{}_{}_{}_{}_{}.csv", key.0, key.1, key.2, metric.name(), mode.name())
}

/// One CSV per (env, algorithm, filter, metric, mode) with columns
/// `epoch, <config>_mean, <config>_ci95` per configuration present.
pub fn curve_tables(files: &[ResultFile]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (key, configs) in group(files) {
        let summaries: Vec<_> = configs.iter().map(|(c, runs)| (*c, aggregate_seeds(runs))).collect();
        let mut epochs: Vec<usize> = summaries.iter().flat_map(|(_, s)| s.epochs.iter().map(|e| e.epoch)).collect();
        epochs.sort_unstable();
        epochs.dedup();
        for metric in CurveMetric::ALL {
            for mode in [RtaMode::On, RtaMode::Off] {
                let mut csv = String::from("epoch");
                for (c, _) in &summaries {
                    let _ = write!(csv, ",{c}_mean,{c}_ci95");
                }
                csv.push('\n');
                for &epoch in &epochs {
                    // Epochs are reported one-based.
                    let _ = write!(csv, "{}", epoch + 1);
                    for (_, s) in &summaries {
                        match s.epochs.iter().find(|e| e.epoch == epoch) {
                            Some(row) => {
                                let b = row.get(metric, mode);
                                let _ = write!(csv, ",{},{}", b.mean, b.half_width);
                            }
                            None => csv.push_str(",,"),
                        }
                    }
                    csv.push('\n');
                }
                out.push((curve_file_name(&key, metric, mode), csv));
            }
        }
    }
    out
}

pub fn export_curves(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let files = results::load_results(dir)?;
    let mut written = Vec::new();
    for (name, csv) in curve_tables(&files) {
        let path = dir.join("curves").join(name);
        write_atomic(&path, csv.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pooled_matches_direct_computation() {
        let a = [1.0, 2.0, 4.0];
        let b = [10.0, 11.0];
        let st = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            Stat {
                mean: m,
                std: (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt(),
            }
        };
        let all: Vec<f64> = a.iter().chain(&b).copied().collect();
        let p = pooled(&[(3, st(&a)), (2, st(&b))]);
        let d = st(&all);
        assert!((p.mean - d.mean).abs() < 1e-12 && (p.std - d.std).abs() < 1e-12);
    }

    #[test]
    fn empty_is_header_only() {
        let t = render_tables_from(&[]);
        assert_eq!(t.lines().count(), 2);
        assert!(t.starts_with("| configuration |"));
    }
}
