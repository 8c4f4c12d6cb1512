use proptest::prelude::*;

use spatial_attn::engine::trace::{AttentionTrace, TraceLayout};
use spatial_attn::engine::{decode_greedy, seeded_weights, DecoderModel, HookContext, ImageSpan, ModelConfig, NoHook, TokenSequence, Transformer, WeightSet};
use spatial_attn::intervention::ScalingHook;
use spatial_attn::tensor::{matmul, softmax, Matrix};
use spatial_attn::Error;

fn config() -> ModelConfig {
    ModelConfig {
        layers: 2,
        heads: 2,
        model_dim: 8,
        head_dim: 4,
        vocab_size: 64,
        patch_side: 3,
        max_seq: 32,
    }
}

fn prompt() -> TokenSequence {
    let mut ids = vec![0, 12];
    ids.extend([2; 9]);
    ids.extend([14, 15, 16, 13]);
    TokenSequence::new(ids, ImageSpan::new(2, 9), None).unwrap()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(v in prop::collection::vec(-50.0..50.0f64, 1..64)) {
        let p = softmax(&v);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_shift_invariant(v in prop::collection::vec(-50.0..50.0f64, 1..64), c in -100.0..100.0f64) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        for (a, b) in softmax(&v).iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_associates(a in matrix(3, 4), b in matrix(4, 2), c in matrix(2, 5)) {
        let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
        let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
        for (x, y) in left.data().iter().zip(right.data()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())));
        }
    }

    #[test]
    fn trace_rows_causal_and_normalised(seed in any::<u64>()) {
        let m = Transformer::new(seeded_weights(&config(), seed).unwrap()).unwrap();
        let t = m.forward(&prompt(), &ScalingHook { alpha: 1.7 }, 0).unwrap().trace;
        for l in 0..2 {
            for h in 0..2 {
                for i in 0..t.seq_len() {
                    let p = t.row_probs(l, h, i).unwrap();
                    prop_assert_eq!(p[i + 1..].iter().sum::<f64>(), 0.0);
                    prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn hook_is_local(seed in any::<u64>(), alpha in 0.1..4.0f64) {
        let m = Transformer::new(seeded_weights(&config(), seed).unwrap()).unwrap();
        let seq = prompt();
        let plain = m.forward(&seq, &NoHook, 0).unwrap().trace;
        let hooked = m.forward(&seq, &ScalingHook { alpha }, 0).unwrap().trace;
        let last = seq.len() - 1;
        for l in 0..2 {
            for h in 0..2 {
                // earlier rows never see the hook
                for i in 0..last {
                    let (a, b) = (plain.logits_row(l, h, i).unwrap(), hooked.logits_row(l, h, i).unwrap());
                    prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
                }
                // within one pass, the hook changed only the image columns of the final row
                let pre = hooked.pre_hook_row(l, h).unwrap();
                let post = hooked.logits_row(l, h, last).unwrap();
                for j in 0..seq.len() {
                    if seq.image_span.contains(j) {
                        prop_assert_eq!(post[j], alpha * pre[j]);
                    } else {
                        prop_assert_eq!(post[j].to_bits(), pre[j].to_bits());
                    }
                }
            }
        }
        // in the first layer nothing upstream differs, so text columns match the identity run exactly
        for h in 0..2 {
            let (a, b) = (plain.logits_row(0, h, last).unwrap(), hooked.logits_row(0, h, last).unwrap());
            for j in (0..seq.len()).filter(|j| !seq.image_span.contains(*j)) {
                prop_assert_eq!(a[j].to_bits(), b[j].to_bits());
            }
        }
    }
}

#[test]
fn identity_hooks_are_bit_identical() {
    let m = Transformer::new(seeded_weights(&config(), 3).unwrap()).unwrap();
    let base = decode_greedy(&m, &prompt(), &NoHook, 4).unwrap();
    let unit = decode_greedy(&m, &prompt(), &ScalingHook { alpha: 1.0 }, 4).unwrap();
    let closure = decode_greedy(&m, &prompt(), &|_: HookContext, _: &mut [f64]| {}, 4).unwrap();
    assert!(base.bit_identical(&unit));
    assert!(base.bit_identical(&closure));
    let again = decode_greedy(&Transformer::new(seeded_weights(&config(), 3).unwrap()).unwrap(), &prompt(), &NoHook, 4).unwrap();
    assert!(base.bit_identical(&again));
}

#[test]
fn hook_runs_at_every_step() {
    let m = Transformer::new(seeded_weights(&config(), 9).unwrap()).unwrap();
    let steps = std::sync::Mutex::new(std::collections::BTreeSet::new());
    let spy = |ctx: HookContext, _: &mut [f64]| {
        steps.lock().unwrap().insert(ctx.step);
    };
    let d = decode_greedy(&m, &prompt(), &spy, 3).unwrap();
    assert_eq!(steps.lock().unwrap().len(), d.generated_ids.len());
}

#[test]
fn weight_file_round_trip_and_truncation() {
    let w = seeded_weights(&config(), 17).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.aiw");
    w.save(&path).unwrap();
    let back = spatial_attn::engine::load_weights(&path).unwrap();
    assert_eq!(back.to_bytes(), w.to_bytes());
    let bytes = w.to_bytes();
    let err = WeightSet::from_bytes(&bytes[..bytes.len() / 2]).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }), "{err}");
    assert!(err.to_string().contains("section") || err.to_string().contains("layer"), "{err}");
}

#[test]
fn trace_header_round_trips() {
    let m = Transformer::new(seeded_weights(&config(), 1).unwrap()).unwrap();
    let t = m.forward(&prompt(), &NoHook, 0).unwrap().trace;
    let bytes = t.to_bytes();
    assert_eq!(&bytes[..4], b"AIT1");
    let header: Vec<u32> = bytes[4..44]
        .chunks(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert_eq!(header, vec![2, 2, 8, 4, 64, 3, 32, 15, 2, 9]);
    let back = AttentionTrace::from_bytes(&bytes).unwrap();
    assert_eq!(back.config(), t.config());
    assert_eq!(back.image_span(), t.image_span());
    assert_eq!(back.raw_logits().len(), 2 * 2 * 15 * 15);
    assert!(back.raw_logits().iter().zip(t.raw_logits()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn tiny_three_token_trace_has_masked_upper_triangle() {
    let c = ModelConfig {
        layers: 1,
        heads: 1,
        model_dim: 4,
        head_dim: 4,
        vocab_size: 64,
        patch_side: 1,
        max_seq: 8,
    };
    let m = Transformer::new(seeded_weights(&c, 0).unwrap()).unwrap();
    let seq = TokenSequence::new(vec![0, 2, 13], ImageSpan::new(1, 1), None).unwrap();
    let t = AttentionTrace::from_bytes(&m.forward(&seq, &NoHook, 0).unwrap().trace.to_bytes()).unwrap();
    for i in 0..3 {
        let row = t.logits_row(0, 0, i).unwrap();
        assert!(row[..=i].iter().all(|v| v.is_finite()));
        assert!(row[i + 1..].iter().all(|v| *v == f64::NEG_INFINITY));
    }
}

#[test]
fn corrupted_trace_byte_names_offset() {
    let m = Transformer::new(seeded_weights(&config(), 1).unwrap()).unwrap();
    let mut bytes = m.forward(&prompt(), &NoHook, 0).unwrap().trace.to_bytes();
    // row 0, column 1 must be -inf; overwrite it with a finite value
    let off = 44 + 8;
    bytes[off..off + 8].copy_from_slice(&1.5f64.to_le_bytes());
    match AttentionTrace::from_bytes(&bytes) {
        Err(Error::Parse { offset, .. }) => assert_eq!(offset, off),
        other => panic!("{other:?}"),
    }
    bytes[0] = b'X';
    assert!(matches!(AttentionTrace::from_bytes(&bytes), Err(Error::Parse { offset: 0, .. })));
}

#[test]
fn row_only_trace_round_trips() {
    let m = Transformer::new(seeded_weights(&config(), 1).unwrap()).unwrap();
    let full = m.forward(&prompt(), &NoHook, 0).unwrap().trace;
    let row = full.to_last_row().unwrap();
    let back = AttentionTrace::from_bytes(&row.to_bytes()).unwrap();
    assert_eq!(back.layout(), TraceLayout::LastRow);
    let last = full.last_row();
    assert_eq!(back.row_probs(1, 1, last).unwrap(), full.row_probs(1, 1, last).unwrap());
}
