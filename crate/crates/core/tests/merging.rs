mod oracle;

use proptest::prelude::*;
use tvq_core::merge::{
    breadcrumbs_merge, magmax_merge, merge, task_arithmetic, ties_merge, LinesScaling, MergeConfig,
    MergeMethod,
};
use tvq_core::{TaskVector, Tensor, TensorMap};

/// Values drawn from a coarse grid half the time so magnitude ties occur.
fn value() -> impl Strategy<Value = f32> {
    prop_oneof![-1.0f32..1.0, (-4i32..=4).prop_map(|k| k as f32 * 0.25),]
}

#[derive(Debug, Clone)]
struct Instance {
    sizes: Vec<usize>,
    pre: Vec<f32>,
    tvs: Vec<Vec<f32>>,
}

fn instance() -> impl Strategy<Value = Instance> {
    (prop::collection::vec(1usize..=16, 1..=2), 1usize..=4).prop_flat_map(|(sizes, n_tasks)| {
        let total: usize = sizes.iter().sum();
        (
            Just(sizes),
            prop::collection::vec(-1.0f32..1.0, total),
            prop::collection::vec(prop::collection::vec(value(), total), n_tasks),
        )
            .prop_map(|(sizes, pre, tvs)| Instance { sizes, pre, tvs })
    })
}

fn to_map(sizes: &[usize], flat: &[f32]) -> TensorMap {
    let mut m = TensorMap::new();
    let mut at = 0;
    for (i, &n) in sizes.iter().enumerate() {
        m.insert(
            format!("t{i}"),
            Tensor::new(vec![n], flat[at..at + n].to_vec()).unwrap(),
        )
        .unwrap();
        at += n;
    }
    m
}

impl Instance {
    fn pre_map(&self) -> TensorMap {
        to_map(&self.sizes, &self.pre)
    }

    fn task_vectors(&self) -> Vec<TaskVector> {
        self.tvs
            .iter()
            .enumerate()
            .map(|(i, v)| TaskVector::new(format!("task{i}"), to_map(&self.sizes, v)))
            .collect()
    }

    /// Applies a per-tensor oracle to each tensor slice and concatenates.
    fn oracle(&self, f: impl Fn(&[f32], &[Vec<f32>]) -> Vec<f32>) -> Vec<f32> {
        let mut out = Vec::new();
        let mut at = 0;
        for &n in &self.sizes {
            let tvs: Vec<Vec<f32>> = self.tvs.iter().map(|v| v[at..at + n].to_vec()).collect();
            out.extend(f(&self.pre[at..at + n], &tvs));
            at += n;
        }
        out
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn ties_matches_brute_force(inst in instance(), lambda in -1.0f64..2.0, density in 0.05f64..=1.0) {
        let got = ties_merge(&inst.pre_map(), &inst.task_vectors(), lambda, density).unwrap();
        prop_assert_eq!(got.flatten(), inst.oracle(|p, t| oracle::ties(p, t, lambda, density)));
    }

    #[test]
    fn magmax_matches_brute_force(inst in instance(), lambda in -1.0f64..2.0) {
        let got = magmax_merge(&inst.pre_map(), &inst.task_vectors(), lambda).unwrap();
        prop_assert_eq!(got.flatten(), inst.oracle(|p, t| oracle::magmax(p, t, lambda)));
    }

    #[test]
    fn breadcrumbs_matches_brute_force(inst in instance(), lambda in -1.0f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assume!(a != b);
        let (low, high) = if a < b { (a, b) } else { (b, a) };
        let got = breadcrumbs_merge(&inst.pre_map(), &inst.task_vectors(), lambda, low, high).unwrap();
        prop_assert_eq!(got.flatten(), inst.oracle(|p, t| oracle::breadcrumbs(p, t, lambda, low, high)));
    }

    #[test]
    fn task_arithmetic_matches_brute_force(inst in instance(), lambda in -1.0f64..2.0) {
        let got = task_arithmetic(&inst.pre_map(), &inst.task_vectors(), lambda).unwrap();
        prop_assert_eq!(got.flatten(), inst.oracle(|p, t| oracle::task_arithmetic(p, t, lambda)));
    }

    #[test]
    fn degenerate_configs_reduce_to_task_arithmetic(inst in instance(), lambda in -1.0f64..2.0) {
        let pre = inst.pre_map();
        let tvs = inst.task_vectors();
        let ta = task_arithmetic(&pre, &tvs, lambda).unwrap();
        prop_assert_eq!(&breadcrumbs_merge(&pre, &tvs, lambda, 0.0, 1.0).unwrap(), &ta);
        let single = &tvs[..1];
        let ta1 = task_arithmetic(&pre, single, lambda).unwrap();
        prop_assert_eq!(&ties_merge(&pre, single, lambda, 1.0).unwrap(), &ta1);
        prop_assert_eq!(&magmax_merge(&pre, single, lambda).unwrap(), &ta1);
    }

    #[test]
    fn order_invariance(inst in instance(), lambda in -1.0f64..2.0, density in 0.05f64..=1.0) {
        let pre = inst.pre_map();
        let tvs = inst.task_vectors();
        let mut rev = tvs.clone();
        rev.reverse();
        prop_assert_eq!(task_arithmetic(&pre, &tvs, lambda).unwrap(), task_arithmetic(&pre, &rev, lambda).unwrap());
        prop_assert_eq!(ties_merge(&pre, &tvs, lambda, density).unwrap(), ties_merge(&pre, &rev, lambda, density).unwrap());
        prop_assert_eq!(
            breadcrumbs_merge(&pre, &tvs, lambda, 0.1, 0.9).unwrap(),
            breadcrumbs_merge(&pre, &rev, lambda, 0.1, 0.9).unwrap()
        );
    }

    #[test]
    fn single_task_unit_lambda_recovers_checkpoint(pre in prop::collection::vec(-1.0f32..1.0, 1..64), seed in any::<u64>()) {
        let mut rng = oracle::Lcg(seed);
        let ft: Vec<f32> = pre.iter().map(|&p| p + rng.range(-0.1, 0.1) as f32).collect();
        let pre_m = to_map(&[pre.len()], &pre);
        let ft_m = to_map(&[ft.len()], &ft);
        let tv = tvq_core::taskvec::task_vector("t", &ft_m, &pre_m).unwrap();
        let merged = task_arithmetic(&pre_m, &[tv], 1.0).unwrap();
        for (a, b) in merged.flatten().iter().zip(&ft) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn lines_scaling_then_merge(inst in instance(), alpha in 0.0f64..1.0, beta in 0.0f64..1.0) {
        let cfg = MergeConfig {
            method: MergeMethod::TaskArithmetic,
            lambda: 1.0,
            lines: Some(LinesScaling { alpha, beta, layers: None }),
        };
        let got = merge(&inst.pre_map(), &inst.task_vectors(), &cfg).unwrap().flatten();
        // tensor i is layer i
        let n_layers = inst.sizes.len();
        let denom = (n_layers.max(2) - 1) as f64;
        let mut at = 0;
        let mut scaled = inst.tvs.clone();
        for (layer, &n) in inst.sizes.iter().enumerate() {
            let c = alpha + beta * (layer as f64 / denom);
            for tv in scaled.iter_mut() {
                for v in &mut tv[at..at + n] {
                    *v = (*v as f64 * c) as f32;
                }
            }
            at += n;
        }
        let expected = oracle::task_arithmetic(&inst.pre, &scaled, 1.0);
        prop_assert_eq!(got, expected);
    }
}
