use std::fs;

use rta_core::harness::{aggregate_seeds, CurveMetric, RtaMode};
use rta_lab::config::parse_config_str;
use rta_lab::report::{curve_tables, export_curves, render_tables, render_tables_from};
use rta_lab::results::{self, decode_checkpoint};
use rta_lab::study::{run_study, RunOptions};

mod common;

fn opts(out: &std::path::Path, resume: bool) -> RunOptions {
    RunOptions {
        out: out.to_path_buf(),
        parallel: 2,
        resume,
        verbose: false,
    }
}

#[test]
fn two_specs_two_seeds_then_resume() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let c = parse_config_str(common::TINY).unwrap();
    let r = run_study(&c, &opts(out, false)).unwrap();
    assert_eq!((r.total, r.completed, r.skipped, r.failed), (4, 4, 0, 0));
    assert_eq!(r.training_steps, 4 * 400);
    let runs: Vec<_> = fs::read_dir(results::runs_dir(out)).unwrap().collect();
    assert_eq!(runs.len(), 4);
    let index = results::write_index(out).unwrap();
    assert_eq!(index.runs.len(), 4);
    assert!(out.join("index.json").exists());

    // Every file carries the hash of its spec.
    for f in results::load_results(out).unwrap() {
        let spec = c.specs.iter().find(|s| s.config == f.result.config).unwrap();
        assert_eq!(f.config_hash, results::config_hash(spec));
        let ck = fs::read(results::checkpoint_path(out, &f.config_hash, f.seed)).unwrap();
        assert_eq!(decode_checkpoint(&ck[..]).unwrap().len(), 3);
    }

    // Refuses to touch existing results without --resume.
    assert!(run_study(&c, &opts(out, false)).is_err());
    let before: Vec<_> = results::load_results(out).unwrap();
    let r = run_study(&c, &opts(out, true)).unwrap();
    assert_eq!((r.completed, r.skipped, r.training_steps), (0, 4, 0));
    assert_eq!(results::load_results(out).unwrap(), before);
}

#[test]
fn interrupted_study_completes_only_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let full = parse_config_str(common::TINY).unwrap();
    let mut partial = full.clone();
    partial.specs.truncate(1);
    partial.specs[0].seeds = vec![2];
    run_study(&partial, &opts(out, false)).unwrap();
    let r = run_study(&full, &opts(out, true)).unwrap();
    assert_eq!((r.completed, r.skipped), (3, 1));
}

#[test]
fn tables_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(render_tables(out).unwrap().lines().count(), 2);
    let c = parse_config_str(common::TINY).unwrap();
    run_study(&c, &opts(out, false)).unwrap();
    let files = results::load_results(out).unwrap();

    let t = render_tables_from(&files);
    assert!(t.contains("## pendulum / ppo / implicit_simplex"));
    // two configurations x two modes
    assert_eq!(t.lines().filter(|l| l.starts_with("| baseline |") || l.starts_with("| rta_punishment |")).count(), 4);
    let row = t.lines().find(|l| l.starts_with("| baseline | on |")).unwrap();
    assert!(row.contains(" ± "), "{row}");

    let single = render_tables_from(&files[..1]);
    let f = &files[0];
    let on = f.result.final_on.unwrap();
    let expected = format!("{:.2} ± {:.2}", on.ret.mean, on.ret.std);
    assert!(single.contains(&expected), "{single}\n{expected}");

    let written = export_curves(out).unwrap();
    assert_eq!(written.len(), 4);
    for (name, csv) in curve_tables(&files) {
        let header = csv.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 1 + 2 * 2, "{name}");
        let epochs: Vec<usize> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(epochs, vec![1, 2]);
    }
    // Pass-through of the aggregation.
    let baseline: Vec<_> = files.iter().filter(|f| f.result.config.name() == "baseline").map(|f| f.result.clone()).collect();
    let agg = aggregate_seeds(&baseline);
    let (_, csv) = curve_tables(&files).into_iter().find(|(n, _)| n.ends_with("_return_on.csv")).unwrap();
    for (line, row) in csv.lines().skip(1).zip(&agg.epochs) {
        let cells: Vec<f64> = line.split(',').skip(1).take(2).map(|x| x.parse().unwrap()).collect();
        let b = row.get(CurveMetric::Return, RtaMode::On);
        assert_eq!(cells, vec![b.mean, b.half_width]);
    }
}
