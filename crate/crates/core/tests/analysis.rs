#![allow(clippy::needless_range_loop)]

mod oracle;

use proptest::prelude::*;
use tvq_core::analysis::{cosine_matrix, sparsity};
use tvq_core::pack::packed_len;
use tvq_core::quant::{compute_qparams, Bits};
use tvq_core::taskvec::quantize_tvq;
use tvq_core::{TaskVector, Tensor, TensorMap};

fn single(v: &[f32]) -> TensorMap {
    let mut m = TensorMap::new();
    m.insert("w", Tensor::new(vec![v.len()], v.to_vec()).unwrap())
        .unwrap();
    m
}

fn gaussian(seed: u64, n: usize, sd: f64) -> Vec<f32> {
    let mut rng = oracle::Lcg(seed);
    (0..n).map(|_| (rng.normal() * sd) as f32).collect()
}

#[test]
fn sparsity_matches_central_cell_mass() {
    for seed in 0..10 {
        let sd = 0.01;
        let tau = gaussian(seed, 20_000, sd);
        let pre = vec![0.0f32; tau.len()];
        let art = quantize_tvq("t", &single(&tau), &single(&pre), Bits::B3).unwrap();
        let step = compute_qparams(&tau, Bits::B3).unwrap().scale as f64;
        // P(|x| < step/2) for x ~ N(0, sd^2)
        let analytic = oracle::erf(step / 2.0 / (sd * std::f64::consts::SQRT_2));
        let measured = sparsity(&art).unwrap();
        assert!(
            (measured - analytic).abs() <= 0.05,
            "seed {seed}: {measured} vs {analytic}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sparsity_invariant_under_power_of_two_scaling(seed in any::<u64>(), exp in -4i32..=4) {
        let tau = gaussian(seed, 500, 0.01);
        let factor = 2f32.powi(exp);
        let scaled: Vec<f32> = tau.iter().map(|v| v * factor).collect();
        let pre = vec![0.0f32; tau.len()];
        let s1 = sparsity(&quantize_tvq("t", &single(&tau), &single(&pre), Bits::B3).unwrap()).unwrap();
        let s2 = sparsity(&quantize_tvq("t", &single(&scaled), &single(&pre), Bits::B3).unwrap()).unwrap();
        prop_assert_eq!(s1, s2);
    }

    #[test]
    fn cosine_matches_naive(seed in any::<u64>(), k in 2usize..5, n in 1usize..100) {
        let vs: Vec<Vec<f32>> = (0..k).map(|i| gaussian(seed.wrapping_add(i as u64), n, 1.0)).collect();
        let tvs: Vec<TaskVector> = vs.iter().map(|v| TaskVector::new("t", single(v))).collect();
        let m = cosine_matrix(&tvs).unwrap();
        for i in 0..k {
            prop_assert_eq!(m[i][i], 1.0);
            for j in 0..k {
                prop_assert_eq!(m[i][j], m[j][i]);
                if i != j {
                    let (mut d, mut a, mut b) = (0.0f64, 0.0f64, 0.0f64);
                    for t in 0..n {
                        d += vs[i][t] as f64 * vs[j][t] as f64;
                        a += (vs[i][t] as f64).powi(2);
                        b += (vs[j][t] as f64).powi(2);
                    }
                    prop_assert!((m[i][j] - d / (a.sqrt() * b.sqrt())).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn cosine_invariant_to_positive_scaling(seed in any::<u64>(), exp in -3i32..=3) {
        let a = gaussian(seed, 64, 1.0);
        let b = gaussian(seed ^ 0xABCD, 64, 1.0);
        let scaled: Vec<f32> = a.iter().map(|v| v * 2f32.powi(exp)).collect();
        let m1 = cosine_matrix(&[TaskVector::new("a", single(&a)), TaskVector::new("b", single(&b))]).unwrap();
        let m2 = cosine_matrix(&[TaskVector::new("a", single(&scaled)), TaskVector::new("b", single(&b))]).unwrap();
        prop_assert_eq!(m1, m2);
    }

    #[test]
    fn payload_bytes_follow_shapes(sizes in prop::collection::vec(0usize..100, 1..5), bits in prop::sample::select(Bits::ALL.to_vec())) {
        let mut pre = TensorMap::new();
        let mut ft = TensorMap::new();
        for (i, &n) in sizes.iter().enumerate() {
            pre.insert(format!("t{i}"), Tensor::zeros(vec![n])).unwrap();
            ft.insert(format!("t{i}"), Tensor::new(vec![n], gaussian(i as u64, n, 1.0)).unwrap()).unwrap();
        }
        let art = quantize_tvq("t", &ft, &pre, bits).unwrap();
        let expected: usize = sizes.iter().map(|&n| (n * bits.get() as usize).div_ceil(8)).sum();
        prop_assert_eq!(art.payload_bytes(), expected);
        prop_assert_eq!(sizes.iter().map(|&n| packed_len(n, bits)).sum::<usize>(), expected);
    }
}
