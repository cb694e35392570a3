//! Finite-difference checks of the analytic gradients over random small networks.

use proptest::prelude::*;

use text2vis::nn::{backward_text, backward_visual, init_model, Branch, Model, ParamId, Target};
use text2vis::textvec::BowVector;

const H: f64 = 1e-5;

/// Largest relative error between analytic and central-difference gradients, or `None`
/// when some pre-activation sits within 1e-3 of the ReLU kink.
fn max_relative_error(model: &Model<f64>, t_in: &BowVector, t_out: &BowVector, v: &[f32]) -> Option<f64> {
    let x = t_in.to_dense();
    let p = |id| model.param(id).unwrap();
    let hidden: Vec<f64> = p(ParamId::W1)
        .chunks(x.len())
        .zip(p(ParamId::B1))
        .map(|(row, b)| row.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() + b)
        .collect();
    let z: Vec<f64> = hidden.iter().map(|h| h.max(0.0)).collect();
    let head = |w: ParamId, b: ParamId| -> Vec<f64> {
        p(w).chunks(z.len())
            .zip(p(b))
            .map(|(row, b)| row.iter().zip(&z).map(|(w, z)| w * z).sum::<f64>() + b)
            .collect()
    };
    let mut pre = hidden.clone();
    pre.extend(head(ParamId::W2, ParamId::B2));
    pre.extend(head(ParamId::W3, ParamId::B3));
    if pre.iter().any(|v| v.abs() <= 1e-3) {
        return None;
    }

    let mut worst = 0.0f64;
    let cases = [
        (Branch::Text, backward_text(model, t_in, t_out).unwrap().1, Target::Bow(t_out)),
        (Branch::Visual, backward_visual(model, t_in, v).unwrap().1, Target::Dense(v)),
    ];
    for (branch, grads, target) in cases {
        for id in branch.params() {
            let analytic = grads.get(id).unwrap();
            for (k, &a) in analytic.iter().enumerate() {
                let mut m = model.clone();
                let orig = model.param(id).unwrap()[k];
                m.param_mut(id).unwrap()[k] = orig + H;
                let up = m.branch_loss(t_in, target, branch).unwrap();
                m.param_mut(id).unwrap()[k] = orig - H;
                let down = m.branch_loss(t_in, target, branch).unwrap();
                let numeric = (up - down) / (2.0 * H);
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
            }
        }
    }
    Some(worst)
}

fn bow(dim: usize, mask: &[bool]) -> BowVector {
    let on: Vec<u32> = (0..dim as u32).filter(|&i| mask[i as usize]).collect();
    BowVector::new(dim, on).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_matches_central_differences(
        vocab in 2usize..=20,
        hidden in 1usize..=8,
        visual in 1usize..=8,
        seed in any::<u64>(),
        in_mask in prop::collection::vec(any::<bool>(), 20),
        out_mask in prop::collection::vec(any::<bool>(), 20),
        target in prop::collection::vec(0.0f32..1.0, 8),
        biases in prop::collection::vec(-0.3f64..0.3, 3),
    ) {
        let mut model = init_model::<f64>(vocab, hidden, visual, true, seed).unwrap();
        for (id, b) in [ParamId::B1, ParamId::B2, ParamId::B3].into_iter().zip(&biases) {
            model.param_mut(id).unwrap().iter_mut().for_each(|x| *x = *b);
        }
        let t_in = bow(vocab, &in_mask);
        let t_out = bow(vocab, &out_mask);
        let worst = max_relative_error(&model, &t_in, &t_out, &target[..visual]);
        prop_assume!(worst.is_some());
        let worst = worst.unwrap();
        prop_assert!(worst < 1e-4, "max relative error {worst:e}");
    }
}

#[test]
fn dead_hidden_units_get_zero_encoder_gradient() {
    let mut model = init_model::<f64>(4, 3, 2, true, 5).unwrap();
    // Unit 0 is pushed far below zero for every input.
    model.param_mut(ParamId::B1).unwrap()[0] = -100.0;
    let t_in = BowVector::new(4, vec![0, 2]).unwrap();
    let (_, g) = backward_visual(&model, &t_in, &[0.5, 0.5]).unwrap();
    assert!(g.w1[..4].iter().all(|&x| x == 0.0));
    assert_eq!(g.b1[0], 0.0);
    let (_, g) = backward_text(&model, &t_in, &t_in).unwrap();
    assert!(g.w1[..4].iter().all(|&x| x == 0.0));
}
