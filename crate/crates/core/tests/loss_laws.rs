use proptest::prelude::*;
use verdict_loss_core::loss::is_saturated;
use verdict_loss_core::{
    aux_loss, loss_gradient, softmax, total_loss, ClassWeights, Logits, LossKind, LossSpec,
    ProbDist, VerdictLabel,
};

fn label() -> impl Strategy<Value = VerdictLabel> {
    (0usize..3).prop_map(|i| VerdictLabel::from_index(i).unwrap())
}

fn kind() -> impl Strategy<Value = LossKind> {
    (0usize..4).prop_map(|i| LossKind::ALL[i])
}

fn logits() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-8.0f64..8.0)
}

fn probs() -> impl Strategy<Value = ProbDist> {
    logits().prop_map(|z| softmax(&Logits::new(z).unwrap()))
}

/// Central differences of the probability-path objective; independent of
/// the analytic gradient code.
fn finite_difference(spec: &LossSpec, gold: VerdictLabel, z: [f64; 3]) -> [f64; 3] {
    let h = 1e-6;
    let f = |z: [f64; 3]| total_loss(spec, gold.one_hot(), &softmax(&Logits::new(z).unwrap()));
    std::array::from_fn(|j| {
        let (mut a, mut b) = (z, z);
        a[j] += h;
        b[j] -= h;
        (f(a) - f(b)) / (2.0 * h)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn zero_lambda_reduces_to_ce(k in kind(), y in label(), z in logits()) {
        let spec = LossSpec::new(k, 0.0).unwrap();
        let ce = LossSpec::cross_entropy();
        let z = Logits::new(z).unwrap();
        let p = softmax(&z);
        prop_assert_eq!(total_loss(&spec, y.one_hot(), &p), total_loss(&ce, y.one_hot(), &p));
        prop_assert_eq!(loss_gradient(&spec, y.one_hot(), &z), loss_gradient(&ce, y.one_hot(), &z));
    }

    #[test]
    fn unit_weights_are_bitwise_unweighted(k in kind(), lambda in 0.0f64..2.0, y in label(), z in logits()) {
        let plain = LossSpec::new(k, lambda).unwrap();
        let unit = plain.with_weights(Some(ClassWeights::UNIFORM));
        let z = Logits::new(z).unwrap();
        let p = softmax(&z);
        prop_assert_eq!(total_loss(&plain, y.one_hot(), &p).to_bits(), total_loss(&unit, y.one_hot(), &p).to_bits());
        let (a, b) = (loss_gradient(&plain, y.one_hot(), &z), loss_gradient(&unit, y.one_hot(), &z));
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        for j in 0..3 {
            prop_assert_eq!(a.grad_z[j].to_bits(), b.grad_z[j].to_bits());
        }
    }

    #[test]
    fn ova_minus_srn_is_nei_term(y in label(), p in probs()) {
        let ova = aux_loss(LossKind::OneVsAll, y.one_hot(), &p);
        let srn = aux_loss(LossKind::Srn, y.one_hot(), &p);
        if y == VerdictLabel::NotEnoughInfo {
            prop_assert_eq!(ova, srn);
        } else {
            let extra = -(1.0 - p.get(2)).ln();
            prop_assert!(ova - srn >= 0.0);
            prop_assert!((ova - srn - extra).abs() <= 1e-12 * (1.0 + ova.abs()));
        }
    }

    #[test]
    fn sr_matches_srn_except_nei(y in label(), p in probs()) {
        let sr = aux_loss(LossKind::Sr, y.one_hot(), &p);
        if y == VerdictLabel::NotEnoughInfo {
            prop_assert_eq!(sr, 0.0);
        } else {
            prop_assert_eq!(sr, aux_loss(LossKind::Srn, y.one_hot(), &p));
        }
    }

    #[test]
    fn ova_is_permutation_symmetric(y in label(), p in probs(), perm in Just([0usize, 1, 2]).prop_shuffle()) {
        let pp = ProbDist::new(std::array::from_fn(|i| p.get(perm[i]))).unwrap();
        // y permuted the same way: new index i holds old class perm[i]
        let new_gold = VerdictLabel::from_index(perm.iter().position(|&o| o == y.index()).unwrap()).unwrap();
        let a = aux_loss(LossKind::OneVsAll, y.one_hot(), &p);
        let b = aux_loss(LossKind::OneVsAll, new_gold.one_hot(), &pp);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn srn_and_sr_symmetric_under_s_r_swap(y in label(), p in probs()) {
        let swapped = ProbDist::new([p.get(1), p.get(0), p.get(2)]).unwrap();
        let y2 = match y {
            VerdictLabel::Supported => VerdictLabel::Refuted,
            VerdictLabel::Refuted => VerdictLabel::Supported,
            n => n,
        };
        for k in [LossKind::Srn, LossKind::Sr] {
            let a = aux_loss(k, y.one_hot(), &p);
            let b = aux_loss(k, y2.one_hot(), &swapped);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn losses_are_non_negative(k in kind(), lambda in 0.0f64..5.0, y in label(), z in logits(), w in prop::array::uniform3(0.1f64..10.0)) {
        let spec = LossSpec::new(k, lambda).unwrap().with_weights(Some(ClassWeights::new(w).unwrap()));
        let z = Logits::new(z).unwrap();
        let r = loss_gradient(&spec, y.one_hot(), &z);
        prop_assert!(r.value >= 0.0);
        prop_assert!(total_loss(&spec, y.one_hot(), &softmax(&z)) >= 0.0);
        prop_assert!(r.grad_z.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn ce_gradient_sums_to_zero(y in label(), z in logits()) {
        let r = loss_gradient(&LossSpec::cross_entropy(), y.one_hot(), &Logits::new(z).unwrap());
        prop_assert!(r.grad_z.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn every_kind_gradient_is_shift_invariant_in_sum(k in kind(), lambda in 0.0f64..1.0, y in label(), z in logits()) {
        // the objective depends on z only through softmax, so gradients sum to 0
        let spec = LossSpec::new(k, lambda).unwrap();
        let r = loss_gradient(&spec, y.one_hot(), &Logits::new(z).unwrap());
        let scale = r.grad_z.iter().map(|g| g.abs()).fold(1.0, f64::max);
        prop_assert!(r.grad_z.iter().sum::<f64>().abs() < 1e-12 * scale);
    }

    #[test]
    fn softmax_exact_shift(k in prop::array::uniform3(-4096i32..4096), c in -64i32..64) {
        // dyadic logits and integer shifts keep every addition exact
        let z: [f64; 3] = k.map(|v| v as f64 / 1024.0);
        let shifted = z.map(|v| v + c as f64);
        prop_assert_eq!(softmax(&Logits::new(z).unwrap()), softmax(&Logits::new(shifted).unwrap()));
    }

    #[test]
    fn analytic_matches_finite_differences(
        k in kind(), lambda in 0.0f64..1.0, y in label(),
        z in prop::array::uniform3(-5.0f64..5.0),
        w in prop::array::uniform3(0.1f64..10.0),
    ) {
        let spec = LossSpec::new(k, lambda).unwrap().with_weights(Some(ClassWeights::new(w).unwrap()));
        let analytic = loss_gradient(&spec, y.one_hot(), &Logits::new(z).unwrap()).grad_z;
        let numeric = finite_difference(&spec, y, z);
        for j in 0..3 {
            let err = (analytic[j] - numeric[j]).abs();
            if analytic[j].abs() < 1e-3 {
                prop_assert!(err <= 1e-8, "component {j}: {} vs {}", analytic[j], numeric[j]);
            } else {
                prop_assert!(err / analytic[j].abs() <= 1e-5, "component {j}: {} vs {}", analytic[j], numeric[j]);
            }
        }
    }
}

#[test]
fn saturated_probabilities_stay_finite() {
    for k in LossKind::ALL {
        let spec = LossSpec::new(k, 1.0).unwrap();
        for gold in VerdictLabel::ALL {
            for hot in 0..3 {
                let mut v = [0.0; 3];
                v[hot] = 1.0;
                let p = ProbDist::new(v).unwrap();
                let value = total_loss(&spec, gold.one_hot(), &p);
                assert!(value.is_finite() && value >= 0.0);
                if hot != gold.index() {
                    assert!(is_saturated(&spec, gold.one_hot(), &p));
                }
            }
        }
    }
}
