use std::hint::black_box;

use brix::planner::DEFAULT_CHUNK_ROWS;
use brix::scan_search::{bm_find, chunked_scan, field_scan, line_scan, LineScanMode, Matcher};
use brix::{normalize_email, normalize_integer, normalize_phone};
use brix_bench::Fixture;
use criterion::{criterion_group, criterion_main, Criterion, Throughput};

fn boyer_moore(c: &mut Criterion) {
    let mut text = Vec::new();
    for i in 0..20_000u32 {
        text.extend_from_slice(format!("user{i}.name@mail{}.example,", i % 97).as_bytes());
    }
    let matcher = Matcher::new(b"user19999.name@mail15.example").unwrap();
    let mut group = c.benchmark_group("boyer_moore");
    group.throughput(Throughput::Bytes(text.len() as u64));
    group.bench_function("bm_find", |b| {
        b.iter(|| bm_find(&matcher, black_box(&text)))
    });
    group.bench_function("memmem", |b| {
        b.iter(|| memchr::memmem::find(black_box(&text), b"user19999.name@mail15.example"))
    });
    group.finish();
}

fn scans(c: &mut Criterion) {
    let fx = Fixture::new(20_000);
    let (path, dialect) = (&fx.dataset.path, &fx.dataset.dialect);
    let email = normalize_email(&fx.manifest.planted[3].email);
    let phone = normalize_phone(&fx.manifest.planted[3].phone);
    let integer = normalize_integer(&fx.manifest.planted[3].phone).unwrap();
    let (ec, pc) = (fx.manifest.email_column, fx.manifest.phone_column);

    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.throughput(Throughput::Bytes(fx.dataset.size_bytes));
    group.bench_function("line_scan_all", |b| {
        b.iter(|| line_scan(path, dialect, email.value.as_bytes(), LineScanMode::All).unwrap())
    });
    group.bench_function("field_scan_email", |b| {
        b.iter(|| field_scan(path, dialect, ec, &email, false).unwrap())
    });
    group.bench_function("field_scan_phone", |b| {
        b.iter(|| field_scan(path, dialect, pc, &phone, false).unwrap())
    });
    group.bench_function("field_scan_integer", |b| {
        b.iter(|| field_scan(path, dialect, pc, &integer, false).unwrap())
    });
    group.bench_function("chunked_scan_email", |b| {
        b.iter(|| chunked_scan(path, dialect, ec, &email, DEFAULT_CHUNK_ROWS).unwrap())
    });
    group.finish();
}

criterion_group!(benches, boyer_moore, scans);
criterion_main!(benches);
