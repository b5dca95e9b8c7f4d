// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, Criterion};
use coverif_core::benchmarks;
use coverif_core::enumerate::{enumerate, Exec};
use coverif_core::pipeline::{build, verify, Engine, VerifyConfig};
use std::hint::black_box;

fn enumeration(c: &mut Criterion) {
    // 16 nondet input bits: 65536 concrete runs.
    let b = benchmarks::by_name("uart4").unwrap();
    let p = build(&b.verilog, &b.top, Some(&b.firmware), 4, true).unwrap().checked;
    let mut g = c.benchmark_group("enumerate_uart4_k4");
    g.sample_size(10);
    g.bench_function("sequential", |bch| bch.iter(|| enumerate(black_box(&p), 16, Exec::Sequential).unwrap()));
    #[cfg(feature = "parallel")]
    g.bench_function("parallel", |bch| bch.iter(|| enumerate(black_box(&p), 16, Exec::Parallel).unwrap()));
    g.finish();
}

fn engines(c: &mut Criterion) {
    let mut g = c.benchmark_group("engines");
    g.sample_size(10);
    for name in ["uart4", "uart4_bug_decode", "top_ab_msg_ne_7"] {
        let b = benchmarks::by_name(name).unwrap();
        let built = build(&b.verilog, &b.top, Some(&b.firmware), 4, true).unwrap();
        for engine in [Engine::Symex(Default::default()), Engine::Symex(coverif_core::symex::Mode::Full), Engine::Mono] {
            let cfg = VerifyConfig {
                engine,
                ..Default::default()
            };
            g.bench_function(format!("{name}/{}", engine.name()), |bch| {
                bch.iter(|| verify(black_box(&built), &cfg).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, enumeration, engines);
criterion_main!(benches);
