use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use surfbraid::finite::{todd_coxeter, TwoQuotient};
use surfbraid::klein;
use surfbraid::nilpotent::nilpotent_quotient;
use surfbraid::presentations::abelianization;
use surfbraid::words::{colchete_rhs, w};
use surfbraid_bench::{bnk, long_klein_word, p2k};

fn words(c: &mut Criterion) {
    let (x, y) = (w("a*b^-1*a"), w("b*a"));
    c.bench_function("colchete_rhs_n4", |b| b.iter(|| colchete_rhs(black_box(&x), black_box(&y), 4)));
}

fn solver(c: &mut Criterion) {
    let word = long_klein_word();
    klein::solver();
    c.bench_function("klein_normal_form_n3", |b| b.iter(|| klein::normal_form(3, black_box(&word)).unwrap()));
}

fn oracles(c: &mut Criterion) {
    let p = p2k();
    let k3 = bnk(3);
    let quotient = k3.with_relators("q", &[w("a"), w("b"), w("s[1]^2"), w("s[2]^2")]).unwrap();
    c.bench_function("abelianize_b4k", |b| {
        let p = bnk(4);
        b.iter(|| abelianization(black_box(&p)))
    });
    c.bench_function("nq_b3k_class3", |b| b.iter(|| nilpotent_quotient(black_box(&k3), 3).unwrap()));
    c.bench_function("tower_p2k_stage4", |b| b.iter(|| TwoQuotient::new(black_box(&p), 4).unwrap()));
    c.bench_function("todd_coxeter_b3k_quotient", |b| b.iter(|| todd_coxeter(black_box(&quotient), &[], 1 << 12).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = words, solver, oracles
}
criterion_main!(kernels);
