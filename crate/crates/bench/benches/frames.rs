use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rellich::{frame_solutions, FrameMethod, Tolerance};
use rellich_bench::low_rank;

fn frames(c: &mut Criterion) {
    let mut group = c.benchmark_group("frame");
    for n in [4, 8, 12, 20] {
        let m = low_rank(n, n - 3);
        let tol = Tolerance::Auto.resolve(&m).unwrap();
        for (name, method) in [("cofactor", FrameMethod::Cofactor), ("orthogonal", FrameMethod::Orthogonal)] {
            if method == FrameMethod::Cofactor && n > 12 {
                continue; // cofactor expansion is refused above order 12
            }
            group.bench_with_input(BenchmarkId::new(name, n), &m, |b, m| {
                b.iter(|| frame_solutions(m, tol, method).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, frames);
criterion_main!(benches);
