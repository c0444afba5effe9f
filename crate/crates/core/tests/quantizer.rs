mod oracle;

use proptest::prelude::*;
use tvq_core::pack::{pack, packed_len, unpack};
use tvq_core::quant::{compute_qparams, dequantize, quant_error, quantize, Bits};

fn bits() -> impl Strategy<Value = Bits> {
    prop::sample::select(Bits::ALL.to_vec())
}

fn data() -> impl Strategy<Value = Vec<f32>> {
    (0.001f32..100.0, -50.0f32..50.0).prop_flat_map(|(spread, center)| {
        prop::collection::vec(center - spread..center + spread, 1..200)
    })
}

/// Float slack for the final `f32` rounding of a reconstruction.
fn slack(x: f32, y: f32) -> f64 {
    f32::EPSILON as f64 * x.abs().max(y.abs()) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn codes_match_scalar_reference(data in data(), bits in bits()) {
        let qp = compute_qparams(&data, bits).unwrap();
        let codes = quantize(&data, &qp);
        match oracle::qparams(&data, bits.get()) {
            None => prop_assert!(qp.is_sentinel()),
            Some((scale, zp)) => {
                prop_assert_eq!(qp.scale, scale);
                prop_assert_eq!(qp.zero_point as i64, zp);
                let expected: Vec<u8> =
                    data.iter().map(|&x| oracle::code(x, scale, zp, bits.get())).collect();
                prop_assert_eq!(codes, expected);
            }
        }
    }

    #[test]
    fn rounding_error_bound(data in data(), bits in bits()) {
        let qp = compute_qparams(&data, bits).unwrap();
        let codes = quantize(&data, &qp);
        let rec = dequantize(&codes, &qp).unwrap();
        let max = bits.max_code() as i64;
        let delta = qp.scale as f64;
        for ((&x, &y), &c) in data.iter().zip(&rec).zip(&codes) {
            prop_assert!(c as u32 <= bits.max_code());
            let err = (x as f64 - y as f64).abs();
            let raw = qp.raw_code(x);
            let bound = if (0..=max).contains(&raw) { delta / 2.0 } else { delta };
            prop_assert!(err <= bound + slack(x, y), "x={x} y={y} err={err} bound={bound}");
        }
    }

    #[test]
    fn requantization_is_idempotent(data in data(), bits in bits()) {
        let qp = compute_qparams(&data, bits).unwrap();
        let codes = quantize(&data, &qp);
        let again = quantize(&dequantize(&codes, &qp).unwrap(), &qp);
        prop_assert_eq!(codes, again);
    }

    #[test]
    fn grid_points_are_fixed(data in data(), bits in bits()) {
        let qp = compute_qparams(&data, bits).unwrap();
        let grid = dequantize(&quantize(&data, &qp), &qp).unwrap();
        let back = dequantize(&quantize(&grid, &qp), &qp).unwrap();
        prop_assert_eq!(grid, back);
    }

    #[test]
    fn step_shrinks_with_more_bits(data in data()) {
        prop_assume!(data.iter().any(|&v| v != data[0]));
        let steps: Vec<f32> = Bits::ALL.iter().map(|&b| compute_qparams(&data, b).unwrap().scale).collect();
        prop_assert!(steps.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn error_report_matches_naive_loop(a in prop::collection::vec(-10.0f32..10.0, 1..300), seed in any::<u64>()) {
        let mut rng = oracle::Lcg(seed);
        let b: Vec<f32> = a.iter().map(|&x| x + rng.range(-0.5, 0.5) as f32).collect();
        let r = quant_error(&a, &b).unwrap();
        let l2 = oracle::l2(&a, &b);
        prop_assert!((r.l2 - l2).abs() <= 1e-6 * l2.max(1e-30));
        prop_assert!((r.normalized_l2 * a.len() as f64 - r.l2).abs() <= 1e-12 * r.l2.max(1.0));
        let max_abs = a.iter().zip(&b).map(|(&x, &y)| (x as f64 - y as f64).abs()).fold(0.0, f64::max);
        prop_assert_eq!(r.max_abs, max_abs);
    }

    #[test]
    fn packing_roundtrip_random(codes in prop::collection::vec(any::<u8>(), 0..=64), bits in bits()) {
        let codes: Vec<u8> = codes.into_iter().map(|c| (c as u32 & bits.max_code()) as u8).collect();
        let packed = pack(&codes, bits).unwrap();
        prop_assert_eq!(packed.len(), packed_len(codes.len(), bits));
        prop_assert_eq!(&packed, &oracle::pack_bits(&codes, bits.get()));
        prop_assert_eq!(unpack(&packed, codes.len(), bits).unwrap(), codes);
    }
}

#[test]
fn packing_exhaustive_short_sequences() {
    for bits in [Bits::B2, Bits::B3] {
        let base = bits.max_code() + 1;
        for len in 0..=4u32 {
            for idx in 0..base.pow(len) {
                let codes: Vec<u8> = (0..len)
                    .map(|k| ((idx / base.pow(k)) % base) as u8)
                    .collect();
                let packed = pack(&codes, bits).unwrap();
                assert_eq!(packed, oracle::pack_bits(&codes, bits.get()), "{codes:?}");
                assert_eq!(unpack(&packed, codes.len(), bits).unwrap(), codes);
            }
        }
    }
}

#[test]
fn three_bit_triples_against_bit_oracle() {
    for a in 0..8u8 {
        for b in 0..8u8 {
            for c in 0..8u8 {
                let packed = pack(&[a, b, c], Bits::B3).unwrap();
                assert_eq!(packed, oracle::pack_bits(&[a, b, c], 3));
                assert_eq!(packed[0], a | (b << 3) | (c << 6));
                assert_eq!(packed[1], c >> 2);
            }
        }
    }
}

#[test]
fn quantization_is_deterministic_across_threads() {
    let data: Vec<f32> = (0..4096)
        .map(|i| ((i * 7919) % 1000) as f32 / 997.0 - 0.5)
        .collect();
    let reference = quantize(&data, &compute_qparams(&data, Bits::B3).unwrap());
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let d = data.clone();
            std::thread::spawn(move || quantize(&d, &compute_qparams(&d, Bits::B3).unwrap()))
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), reference);
    }
}
