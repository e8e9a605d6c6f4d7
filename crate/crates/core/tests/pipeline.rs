use actcluster::data::{generate_synthetic, make_windows, SynthConfig};
use actcluster::metrics::{Granularity, SubjectSetting};
use actcluster::pipeline::{
    evaluate, record_json_without_timing, run_baseline, run_inner_loop, run_outer_loop, FinalTable, PipelineConfig,
};
use actcluster::seed::SeedStream;

fn small_config() -> PipelineConfig {
    PipelineConfig {
        inner_iterations: 2,
        max_outer: 2,
        epochs: 1,
        umap_epochs: 30,
        umap_neighbors: 10,
        seed: 3,
        ..PipelineConfig::default()
    }
}

fn small_data(subjects: usize) -> actcluster::data::Dataset {
    generate_synthetic(&SynthConfig {
        subjects,
        bout_len: 700,
        bouts_per_class: 1,
        seed: 9,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn baseline_equals_flag_composition() {
    let data = small_data(1);
    let ws = make_windows(&data.recordings, 512, 100).unwrap();
    let cfg = small_config();
    let a = run_baseline(&cfg, &ws, 3).unwrap();
    let flags = PipelineConfig {
        no_umap: true,
        no_filter: true,
        step: 100,
        ..cfg
    };
    let b = run_outer_loop(&flags, &ws, 3).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.final_table, b.final_table);
}

#[test]
fn baseline_rejects_small_steps() {
    let data = small_data(1);
    let ws = make_windows(&data.recordings, 512, 50).unwrap();
    assert!(run_baseline(&small_config(), &ws, 3).is_err());
}

#[test]
fn one_subject_settings_coincide() {
    let data = small_data(1);
    let dep = evaluate(
        &PipelineConfig {
            step: 50,
            ..small_config()
        },
        &data,
    )
    .unwrap();
    let ind = evaluate(
        &PipelineConfig {
            step: 50,
            setting: SubjectSetting::Independent,
            ..small_config()
        },
        &data,
    )
    .unwrap();
    for g in [Granularity::Window, Granularity::Point] {
        assert_eq!(
            dep.record.report(g).unwrap().metrics,
            ind.record.report(g).unwrap().metrics
        );
    }
}

#[test]
fn runs_are_reproducible_and_timed() {
    let data = small_data(2);
    let cfg = PipelineConfig {
        step: 50,
        ..small_config()
    };
    let a = evaluate(&cfg, &data).unwrap();
    let b = evaluate(&cfg, &data).unwrap();
    assert_eq!(
        record_json_without_timing(&a.record).unwrap(),
        record_json_without_timing(&b.record).unwrap()
    );
    let t = a.record.timing;
    assert!(t.train > 0.0 && t.umap > 0.0 && t.cluster > 0.0);
    assert!(t.total + 1e-9 >= t.train + t.umap + t.cluster - 0.05 * t.total);
    assert!(t.per_point > 0.0);
}

#[test]
fn final_table_sizes_never_shrink() {
    let mut f = FinalTable::new(4);
    f.record(&[0, 1, 1, 0], &[true, false, true, false]);
    f.record(&[1, 1, 0, 0], &[false, true, false, false]);
    f.record(&[1, 1, 0, 0], &[false, false, false, false]);
    assert_eq!(f.sizes, vec![2, 3, 3]);
    assert_eq!(f.get(0), Some(0));
    assert_eq!(f.get(1), Some(1));
    assert_eq!(f.get(3), None);
}

#[test]
fn no_filter_trains_on_everything() {
    let data = small_data(1);
    let cfg = PipelineConfig {
        step: 50,
        no_filter: true,
        ..small_config()
    };
    let eval = evaluate(&cfg, &data).unwrap();
    assert!(eval.record.warnings.iter().all(|w| !w.contains("confident window")));
}

#[test]
fn too_few_windows_skips_subject() {
    let mut data = small_data(2);
    data.recordings[1].channels.iter_mut().for_each(|c| c.truncate(600));
    data.recordings[1].labels.truncate(600);
    data.recordings[1].timestamps.truncate(600);
    data.recordings[1].span_starts = vec![0];
    let eval = evaluate(
        &PipelineConfig {
            step: 50,
            ..small_config()
        },
        &data,
    )
    .unwrap();
    assert!(eval.record.warnings.iter().any(|w| w.contains("skipped")));
    assert_eq!(eval.record.units.len(), 1);
}

#[test]
fn inner_loop_reports_every_iteration() {
    let data = small_data(1);
    let ws = make_windows(&data.recordings, 512, 50).unwrap();
    let cfg = small_config();
    let a = run_inner_loop(&cfg, &ws, 3, SeedStream::new(4)).unwrap();
    let b = run_inner_loop(&cfg, &ws, 3, SeedStream::new(4)).unwrap();
    assert_eq!(a.iterations.len(), cfg.inner_iterations);
    assert_eq!(a.mask.len(), ws.len());
    assert_eq!(a.assignment.labels, b.assignment.labels);
    assert!(a.assignment.labels.iter().all(|&l| l < 3));
}
