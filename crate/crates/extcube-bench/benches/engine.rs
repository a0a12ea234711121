use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use extcube::koszul::{ext_chart, run_trace, KoszulElement, WeightComplex};
use extcube::milnor::Context;
use extcube::resolution::{minimal_resolution, module_from_weight};
use extcube::{FpMatrix, Prime};

fn random_matrix(p: Prime, rows: usize, cols: usize, seed: u64) -> FpMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<Vec<u32>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(0..p.get())).collect())
        .collect();
    FpMatrix::from_rows(p, &data)
}

fn bench_rref(c: &mut Criterion) {
    let mut group = c.benchmark_group("rref_200x200");
    for p in [2u32, 3] {
        let prime = Prime::new(p).unwrap();
        let m = random_matrix(prime, 200, 200, 1);
        group.bench_with_input(BenchmarkId::from_parameter(p), &m, |b, m| {
            b.iter(|| m.rref().1.len())
        });
    }
    group.finish();
}

fn bench_q_action_sweep(c: &mut Criterion) {
    let ctx = Context::new(3, 2).unwrap();
    c.bench_function("q_action_weight_162", |b| {
        let basis = ctx.enumerate_basis(162);
        b.iter(|| {
            let mut terms = 0usize;
            for m in &basis {
                for i in 0..=2 {
                    terms += ctx.q_action_dual(i, m).unwrap().len();
                }
            }
            terms
        })
    });
}

fn bench_weight_complex(c: &mut Criterion) {
    let ctx = Context::new(3, 2).unwrap();
    c.bench_function("build_weight_162_s8", |b| {
        b.iter(|| {
            WeightComplex::build(&ctx, 162, 8)
                .unwrap()
                .multicomplex()
                .cell_count()
        })
    });
    c.bench_function("chart_p3_n2_w162_s8", |b| {
        b.iter(|| ext_chart(&ctx, 162, 8).unwrap().entries.len())
    });
}

fn bench_trace(c: &mut Criterion) {
    let ctx = Context::new(3, 2).unwrap();
    let y = KoszulElement::parse(&ctx, "v0^4 v1^2 * xi1^18 tau3").unwrap();
    c.bench_function("trace_y_weight_162", |b| {
        b.iter(|| run_trace(&ctx, &y, None).unwrap().result.is_zero())
    });
}

fn bench_resolution(c: &mut Criterion) {
    let ctx = Context::new(3, 2).unwrap();
    let module = module_from_weight(&ctx, 162).unwrap();
    c.bench_function("minimal_resolution_w162_s8", |b| {
        b.iter(|| minimal_resolution(&module, 8).unwrap().stages.len())
    });
}

criterion_group!(
    benches,
    bench_rref,
    bench_q_action_sweep,
    bench_weight_complex,
    bench_trace,
    bench_resolution
);
criterion_main!(benches);
