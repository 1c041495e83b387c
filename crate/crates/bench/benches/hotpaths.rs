//! Benchmarks for the paths that dominate pipeline runtime: SMILES
//! parsing/canonicalization, fingerprints, a forward/backward training
//! step of the generator, and a predictor forward pass.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use hemgen_core::embeddings::Vocabulary;
use hemgen_core::gnn;
use hemgen_core::seqmodel::{self, GeneratorConfig};
use hemgen_core::smiles::{canonicalize, morgan_fingerprint, parse, tanimoto, tokenize};

const MOLECULES: [&str; 6] = [
    "Cc1c([N+](=O)[O-])cc([N+](=O)[O-])cc1[N+](=O)[O-]",
    "O=[N+]([O-])N1CN([N+](=O)[O-])CN([N+](=O)[O-])C1",
    "C(CO[N+](=O)[O-])(CO[N+](=O)[O-])(CO[N+](=O)[O-])CO[N+](=O)[O-]",
    "Nc1c([N+](=O)[O-])c(N)c([N+](=O)[O-])c(N)c1[N+](=O)[O-]",
    "NC1=NN=NN1",
    "O=[N+]([O-])OCC(O[N+](=O)[O-])CO[N+](=O)[O-]",
];

fn bench_parse_canonicalize(c: &mut Criterion) {
    c.bench_function("parse_canonicalize_6_molecules", |b| {
        b.iter(|| {
            for s in MOLECULES {
                let g = parse(black_box(s)).unwrap();
                black_box(canonicalize(&g));
            }
        })
    });
}

fn bench_fingerprint_tanimoto(c: &mut Criterion) {
    let fps: Vec<_> = MOLECULES
        .iter()
        .map(|s| morgan_fingerprint(&parse(s).unwrap(), 2, 2048))
        .collect();
    c.bench_function("fingerprint_6_molecules", |b| {
        b.iter(|| {
            for s in MOLECULES {
                black_box(morgan_fingerprint(&parse(s).unwrap(), 2, 2048));
            }
        })
    });
    c.bench_function("tanimoto_all_pairs", |b| {
        b.iter(|| {
            let mut total = 0.0;
            for i in 0..fps.len() {
                for j in 0..fps.len() {
                    total += tanimoto(&fps[i], &fps[j]).unwrap();
                }
            }
            black_box(total)
        })
    });
}

fn bench_generator_step(c: &mut Criterion) {
    let config = GeneratorConfig {
        epochs: 1,
        ..GeneratorConfig::default()
    };
    let seqs: Vec<_> = MOLECULES.iter().map(|s| tokenize(s).unwrap()).collect();
    let vocab = Vocabulary::build(&seqs).unwrap();
    let encoded: Vec<Vec<u32>> = seqs.iter().map(|s| vocab.encode(s).unwrap()).collect();
    let params = seqmodel::LstmParameters::init(&config, vocab.size()).unwrap();
    let batch = seqmodel::Batch::from_sequences(&encoded);
    c.bench_function("lstm_forward_backward_batch6", |b| {
        b.iter(|| {
            let fwd = seqmodel::forward(&params, &batch, 0.3, true, 1).unwrap();
            let (_, dlogits) =
                seqmodel::loss_and_dlogits(&fwd.logits, &batch.target, &batch.mask).unwrap();
            black_box(seqmodel::backward(&params, &fwd, &dlogits));
        })
    });
}

fn bench_predictor_forward(c: &mut Criterion) {
    let graphs: Vec<_> = MOLECULES
        .iter()
        .map(|s| gnn::featurize(&parse(s).unwrap()).unwrap())
        .collect();
    let batch = gnn::GraphTensors::batch(&graphs);
    let params = gnn::PredictorParams::init(118, 3, 9, 7);
    c.bench_function("gnn_forward_batch6", |b| {
        b.iter(|| black_box(gnn::predictor_forward_steps(&params, &batch, 3)))
    });
}

criterion_group!(
    benches,
    bench_parse_canonicalize,
    bench_fingerprint_tanimoto,
    bench_generator_step,
    bench_predictor_forward
);
criterion_main!(benches);
