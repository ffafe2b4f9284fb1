use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use esa_core::stash::{derive_params, stash_shuffle, ChunkCap, ParamRequest, PlainCodec, ShuffleOptions};
use esa_core::RecordBatch;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const ITEM_LEN: usize = 64;

fn shuffle(c: &mut Criterion) {
    let mut g = c.benchmark_group("stash_shuffle");
    g.sample_size(10);
    for n in [10_000usize, 100_000] {
        let b = ((n as f64).sqrt() / 2.0) as usize;
        let p = derive_params(&ParamRequest::new(n, b, ChunkCap::Alpha(4.0), 4 * b, 4).item_len(ITEM_LEN)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let input = RecordBatch::from_records(
            ITEM_LEN,
            (0..n).map(|_| {
                let mut r = [0u8; ITEM_LEN];
                rng.fill(&mut r[..]);
                r
            }),
        )
        .unwrap();
        let codec = PlainCodec { len: ITEM_LEN };
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &input, |bench, input| {
            bench.iter(|| stash_shuffle(input, &p, &codec, &ShuffleOptions::default(), &mut rng).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, shuffle);
criterion_main!(benches);
