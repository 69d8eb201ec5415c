use cch_core::cch::{CCHConfig, CchSystem};
use cch_core::mesh::build_rect_mesh;
use cch_core::upwind::{assemble_upwind_generalized, velocity_edge_flux};
use cch_core::Exec;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn assembly(c: &mut Criterion) {
    let m = build_rect_mesh(64, 64, [0.0, 0.0], [1.0, 1.0]).unwrap();
    let flux = velocity_edge_flux(&m, |p| [p[1] - 0.5, 0.5 - p[0]]);
    let (nc, nv) = (m.n_cells(), m.n_vertices());
    let u: Vec<f64> = (0..nc).map(|k| 0.5 + 0.4 * ((k as f64) * 0.37).sin()).collect();
    let mu: Vec<f64> = m.vertices().iter().map(|p| (6.0 * p[0]).sin() * (5.0 * p[1]).cos()).collect();
    let mut x = u.clone();
    x.extend_from_slice(&mu);
    x.extend((0..nv).map(|i| 0.5 + 0.3 * ((i as f64) * 0.11).cos()));

    let mut group = c.benchmark_group("assembly");
    group.bench_function("upwind_generalized", |b| {
        b.iter(|| assemble_upwind_generalized(&m, black_box(&mu), black_box(&u), -1.0).unwrap())
    });
    for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        let mut sys = CchSystem::new(&m, &flux, CCHConfig::default(), exec).unwrap();
        group.bench_function(BenchmarkId::new("residual", name), |b| {
            b.iter(|| sys.residual(black_box(&x), &u).unwrap())
        });
        group.bench_function(BenchmarkId::new("jacobian", name), |b| {
            b.iter(|| {
                sys.jacobian(black_box(&x), &u, false).unwrap();
            })
        });
    }
    group.finish();
}

criterion_group!(benches, assembly);
criterion_main!(benches);
