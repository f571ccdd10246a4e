use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lampi_core::driver::load;
use lampi_core::srcheck::{check_all, check_all_sequential};
use lampi_core::CheckOptions;

/// Vectors and the simply-typed β-rule, with `copies` fresh heads for each
/// rule so the checker has that many independent jobs.
fn workload(copies: usize) -> String {
    let mut text = String::from(
        "constant symbol N : TYPE
constant symbol 0 : N
constant symbol s : N -> N
constant symbol R : TYPE
constant symbol V : N -> TYPE
constant symbol cons : R -> Pi n : N, V n -> V (s n)
constant symbol T : TYPE
constant symbol arr : T -> T -> T
injective symbol τ : T -> TYPE
rule τ (arr $x $y) --> τ $x -> τ $y
constant symbol lam : Pi a : T, Pi b : T, (τ a -> τ b) -> τ (arr a b)
",
    );
    for i in 0..copies {
        text.push_str(&format!(
            "symbol tail{i} : Pi n : N, V (s n) -> V n
rule tail{i} $n (cons $x $p $v) --> $v
symbol app{i} : Pi a : T, Pi b : T, τ (arr a b) -> τ a -> τ b
rule app{i} $a $b (lam $a' $b' $f) $x --> $f $x
"
        ));
    }
    text
}

fn bench_check_all(c: &mut Criterion) {
    let mut group = c.benchmark_group("check_all");
    let opts = CheckOptions::default();
    for copies in [8, 32] {
        let sig = load(&workload(copies), opts.fuel).expect("workload loads").sig;
        group.bench_with_input(BenchmarkId::new("parallel", 2 * copies), &sig, |b, sig| {
            b.iter(|| check_all(sig, &opts))
        });
        group.bench_with_input(BenchmarkId::new("sequential", 2 * copies), &sig, |b, sig| {
            b.iter(|| check_all_sequential(sig, &opts))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_check_all);
criterion_main!(benches);
