use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cmmom::cm::HarmonicGrid;
use cmmom::efie::assemble_z;
use cmmom::exec::{self, Policy};
use cmmom::mesh::{build_basis, gen_bowtie, BowtieParams};
use cmmom::solver::{build_compressed, random_system, seeded_rng, solve_compressed, solve_full};

fn policies() -> [(&'static str, Policy); 2] {
    [
        ("sequential", Policy::Sequential),
        ("parallel", Policy::Parallel),
    ]
}

fn impedance(c: &mut Criterion) {
    let g = gen_bowtie(&BowtieParams {
        length: 0.036,
        flare_angle_deg: 155.0,
        edges_per_wavelength: 60.0,
        ref_freq_hz: 3e9,
        feed_width: None,
    })
    .unwrap();
    let basis = build_basis(g.mesh);
    let grid = HarmonicGrid::from_hz(3e9, 5e8, 2).unwrap();
    let mut group = c.benchmark_group("efie_comb");
    group.sample_size(10);
    for (name, p) in policies() {
        group.bench_function(BenchmarkId::new(name, basis.len()), |b| {
            exec::set_policy(p);
            b.iter(|| {
                grid.omegas()
                    .iter()
                    .map(|&w| assemble_z(&basis, w).unwrap().z.nrows())
                    .sum::<usize>()
            })
        });
    }
    group.finish();
    exec::set_policy(Policy::Parallel);
}

fn solves(c: &mut Criterion) {
    let spec = random_system(64, 8, 21, &mut seeded_rng(3)).unwrap();
    let mut group = c.benchmark_group("harmonic_solve");
    group.sample_size(10);
    for (name, p) in policies() {
        group.bench_function(BenchmarkId::new(format!("full/{name}"), "64x21"), |b| {
            exec::set_policy(p);
            b.iter(|| solve_full(&spec).unwrap().residual)
        });
        group.bench_function(
            BenchmarkId::new(format!("compressed/{name}"), "64x21"),
            |b| {
                exec::set_policy(p);
                b.iter(|| {
                    let cs = build_compressed(&spec, &spec.loads().loaded_ports()).unwrap();
                    solve_compressed(&cs, spec.loads()).unwrap().residual
                })
            },
        );
    }
    group.finish();
    exec::set_policy(Policy::Parallel);
}

criterion_group!(benches, impedance, solves);
criterion_main!(benches);
