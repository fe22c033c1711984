use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use kakeya_lab::exec;
use kakeya_lab::grid::ConstantField;
use kakeya_lab::maximal::{ambient_box, kakeya_maximal, MaximalConfig};
use kakeya_lab::oscillatory::{apply_extension, AmplitudeSpec, Kernel, YGrid, SPATIAL_SPACING};
use kakeya_lab::phase::PhaseSpec;
use kakeya_lab::tubes::{build_family, rasterize_multiplicity, CentreRule, Separation};

fn run<R>(parallel: bool, f: impl FnOnce() -> R) -> R {
    if parallel {
        f()
    } else {
        exec::sequential(f)
    }
}

fn modes(c: &mut Criterion) {
    let phase = PhaseSpec::const_coeff(3);
    let delta = 0.0625;
    let cfg = MaximalConfig::standard(delta);
    let one = ConstantField { value: 1.0, support: ambient_box(&phase).unwrap() };

    let bourgain = PhaseSpec::bourgain_star(3).unwrap();
    let grid = YGrid::for_lambda(2, bourgain.rho(), 8.0, 1.0);
    let f = grid.values(|y| Complex64::new(1.0 + y[0], 0.0));

    let family = build_family(&phase, delta, Separation::Direction, CentreRule::FixedZero).unwrap();

    let mut group = c.benchmark_group("parallel_vs_sequential");
    group.sample_size(10);
    for parallel in [false, true] {
        let mode = if parallel { "parallel" } else { "sequential" };
        group.bench_with_input(BenchmarkId::new("kakeya_maximal", mode), &parallel, |b, &p| {
            b.iter(|| run(p, || kakeya_maximal(&phase, delta, &one, &cfg).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("extension_lambda8", mode), &parallel, |b, &p| {
            b.iter(|| {
                run(p, || {
                    apply_extension(
                        Kernel::Phase(&bourgain),
                        &AmplitudeSpec::TensorBump,
                        bourgain.rho(),
                        8.0,
                        &grid,
                        &f,
                        SPATIAL_SPACING,
                    )
                    .unwrap()
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("rasterize_family", mode), &parallel, |b, &p| {
            b.iter(|| run(p, || rasterize_multiplicity(&family, delta / 2.0, None).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, modes);
criterion_main!(benches);
