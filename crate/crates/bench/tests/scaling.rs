use simguard_bench::{run_scaling, CorpusParams, ScalingConfig};

#[test]
fn median_time_grows_with_file_count() {
    let cfg = ScalingConfig {
        warmup: 2,
        reps: 5,
        ..ScalingConfig::new(CorpusParams { complexity: 5, ..Default::default() }, "files=1,10,40".parse().unwrap())
    };
    let r = run_scaling(&cfg).unwrap();
    for w in r.points.windows(2) {
        assert!(w[1].median_ms >= w[0].median_ms * 0.9, "{}", r.to_table());
    }
    assert!(r.points.iter().all(|p| p.rows_per_sec > 0.0));
}
