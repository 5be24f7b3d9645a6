use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kickcast_core::dataset::build_dataset;
use kickcast_core::features::extract_row;
use kickcast_core::neuralnet::{init_network, train, Task, TrainConfig, TrainTargets};
use kickcast_core::ordering::{order_players, OrderingReference};
use kickcast_core::synthgen::generate_events;
use kickcast_core::{EpisodeConfig, Flavor, OrderingMethod};

fn events(n: usize) -> Vec<kickcast_core::KickEvent> {
    generate_events(&EpisodeConfig { n_events: n, seed: 5, ..EpisodeConfig::default() }).unwrap()
}

fn ordering(c: &mut Criterion) {
    let ev = events(64);
    let mut group = c.benchmark_group("order_players");
    for method in OrderingMethod::ALL {
        group.bench_function(method.name(), |b| {
            b.iter(|| {
                for e in &ev {
                    let ws = &e.ws;
                    let reference = OrderingReference::with_kicker(ws.kicker().unwrap().pos);
                    black_box(order_players(&ws.teammates, method, ws.kicker_unum, &reference).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn features(c: &mut Criterion) {
    let ev = events(64);
    c.bench_function("extract_row/unum_fk", |b| {
        b.iter(|| {
            for e in &ev {
                black_box(extract_row(&e.ws, OrderingMethod::UnumFk, e.event_id).unwrap());
            }
        })
    });
    c.bench_function("generate_events/256", |b| b.iter(|| black_box(events(256))));
}

fn network(c: &mut Criterion) {
    let ds = build_dataset(&events(256), OrderingMethod::UnumFk, Flavor::Noisy).unwrap();
    let xs: Vec<Vec<f64>> = ds.features().map(|f| f.to_vec()).collect();
    let ys: Vec<usize> = ds.labels().map(|l| l.category.code() as usize).collect();
    let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
    let net = init_network(xs[0].len(), Task::Classification(3), &cfg).unwrap();
    c.bench_function("forward/794-128-128-3", |b| b.iter(|| black_box(net.forward(&xs[0]).unwrap())));
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("epoch/256_rows", |b| {
        b.iter(|| black_box(train(&xs, TrainTargets::Classes { labels: &ys, n_classes: 3 }, &cfg).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, ordering, features, network);
criterion_main!(benches);
