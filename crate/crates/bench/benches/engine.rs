use criterion::{black_box, criterion_group, criterion_main, Criterion};
use floodwarn_bench::{busy_bt_frame, inputs, nrcs_field, replay};
use floodwarn_core::convection::{convective_mask, detect, label_components};
use floodwarn_core::floodmap::{flood_mask, log_ratio_db};
use floodwarn_core::fusion::Pipeline;
use floodwarn_core::geogrid::{central_vietnam_regions, resample_nn};
use floodwarn_core::scenario::{generate, paper_replay_spec};
use floodwarn_core::wind::{gmf_invert, GmfGeometry, GmfRegistry, Synth1, V_MAX};
use floodwarn_core::{Config, Geometry};

fn convection(c: &mut Criterion) {
    let s = replay();
    let frame = busy_bt_frame(&s);
    let mask = convective_mask(&frame, 220.0).unwrap();
    c.bench_function("label_components 120x140", |b| b.iter(|| label_components(black_box(&mask), 4)));
    c.bench_function("detect 120x140", |b| b.iter(|| detect(black_box(&frame), 220.0, 4).unwrap()));
}

fn resample(c: &mut Criterion) {
    let s = replay();
    let frame = busy_bt_frame(&s);
    let target = Geometry::new(14.01, 103.01, 0.02, 0.02, 300, 350).unwrap();
    c.bench_function("resample_nn to 300x350", |b| b.iter(|| resample_nn(black_box(&frame), &target).unwrap()));
}

fn wind(c: &mut Criterion) {
    let geom = GmfGeometry::default();
    c.bench_function("gmf_invert", |b| b.iter(|| gmf_invert(&Synth1, black_box(0.021), &geom, V_MAX).unwrap()));
}

fn floodmap(c: &mut Criterion) {
    let g = Geometry::new(15.0, 107.0, 0.01, 0.01, 256, 256).unwrap();
    let reference = nrcs_field(g, 1.0, 0);
    let flood = nrcs_field(g, 0.3, 5);
    c.bench_function("log_ratio + flood_mask 256x256", |b| {
        b.iter(|| {
            let r = log_ratio_db(black_box(&flood), &reference).unwrap();
            flood_mask(&r, -3.0, 8).unwrap()
        })
    });
}

fn scenario_and_pipeline(c: &mut Criterion) {
    let spec = paper_replay_spec();
    let mut group = c.benchmark_group("replay");
    group.sample_size(10);
    group.bench_function("generate", |b| b.iter(|| generate(black_box(&spec), 0).unwrap()));
    let s = replay();
    let inputs = inputs(&s);
    let regions = central_vietnam_regions();
    let config = Config::default();
    let registry = GmfRegistry::default();
    group.bench_function("pipeline run", |b| {
        b.iter(|| Pipeline::new(&inputs, &regions, &config, &registry).unwrap().run().unwrap())
    });
    group.finish();
}

criterion_group!(benches, convection, resample, wind, floodmap, scenario_and_pipeline);
criterion_main!(benches);
