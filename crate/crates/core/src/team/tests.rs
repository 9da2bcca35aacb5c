use proptest::prelude::*;
use rand::{Rng as _, SeedableRng};

use super::*;
use crate::nn::{Matrix, MlpDims, MlpParams, Parameters};
use crate::rng::Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Random small team with non-zero biases and a matching random batch.
fn random_instance(rng: &mut Rng) -> (TeamModel, TeamBatch) {
    let n = rng.random_range(1..=8);
    let d = rng.random_range(1..=10);
    let k = rng.random_range(2..=5);
    let m = rng.random_range(0..=3);
    let hidden = rng.random_range(2..=6);
    let mut model = TeamModel::new(d, k, m, hidden, rng.random()).unwrap();
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let h: Vec<Vec<usize>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0..k)).collect())
        .collect();
    let batch = TeamBatch::new(random_matrix(n, d, rng), y, h, k).unwrap();
    (model, batch)
}

fn loss_of(model: &TeamModel, batch: &TeamBatch) -> f64 {
    team_loss(&team_forward(model, batch).unwrap(), &batch.y)
}

/// Team whose networks ignore the input: logits are the output biases.
fn constant_team(m: usize, alloc: Vec<f64>, clf: Vec<f64>) -> TeamModel {
    let k = clf.len();
    let mut c = MlpParams::zeros(MlpDims::new(1, 1, k));
    c.b2 = clf;
    let mut a = MlpParams::zeros(MlpDims::new(1, 1, m + 1));
    a.b2 = alloc;
    TeamModel::from_parts(m, k, vec![c], a).unwrap()
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = Rng::seed_from_u64(2024);
    let h = 1e-5;
    for _ in 0..25 {
        let (mut model, batch) = random_instance(&mut rng);
        let (_, grads) = team_loss_gradients(&model, &batch).unwrap();
        let analytic: Vec<f64> = grads.tensors().concat();
        let mut idx = 0;
        for t in 0..model.tensors().len() {
            for e in 0..model.tensors()[t].len() {
                let orig = model.tensors()[t][e];
                model.tensors_mut()[t][e] = orig + h;
                let up = loss_of(&model, &batch);
                model.tensors_mut()[t][e] = orig - h;
                let down = loss_of(&model, &batch);
                model.tensors_mut()[t][e] = orig;
                let numeric = (up - down) / (2.0 * h);
                let a = analytic[idx];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                assert!(rel <= 1e-4, "tensor {t} elem {e}: {a} vs {numeric}");
                idx += 1;
            }
        }
    }
}

#[test]
fn hand_fixture() {
    let model = constant_team(1, vec![0.0, 0.0], vec![0.0, 0.0]);
    let batch = TeamBatch::new(Matrix::zeros(1, 1), vec![0], vec![vec![0]], 2).unwrap();
    let fwd = team_forward(&model, &batch).unwrap();
    assert_eq!(fwd.w.row(0), &[0.5, 0.5]);
    assert!((fwd.p_team.get(0, 0) - 0.75).abs() < 1e-12);
    assert!((team_loss(&fwd, &batch.y) + 0.75f64.ln()).abs() < 1e-10);
    let t = fwd.team_matrix(0);
    assert_eq!(t.data(), &[1.0, 0.5, 0.0, 0.5]);
    let (_, g) = team_loss_gradients(&model, &batch).unwrap();
    let da = &g.allocator().b2;
    assert!((da[0] + 1.0 / 6.0).abs() < 1e-12 && (da[1] - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn zero_experts_is_plain_classifier() {
    let mut rng = Rng::seed_from_u64(5);
    let model = TeamModel::new(3, 4, 0, 5, 1).unwrap();
    let x = random_matrix(6, 3, &mut rng);
    let y = vec![0, 1, 2, 3, 1, 0];
    let batch = TeamBatch::new(x.clone(), y.clone(), vec![], 4).unwrap();
    let fwd = team_forward(&model, &batch).unwrap();
    assert_eq!(fwd.p_team, fwd.c[0]);

    let z = model.classifier().unwrap().logits(&x).unwrap();
    let ce: f64 = y
        .iter()
        .enumerate()
        .map(|(i, &yi)| -crate::nn::softmax(z.row(i))[yi].ln())
        .sum::<f64>()
        / 6.0;
    assert_eq!(team_loss(&fwd, &y), ce);

    let (_, g) = team_loss_gradients(&model, &batch).unwrap();
    assert!(g.allocator().tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
}

#[test]
fn dominant_correct_expert() {
    let model = constant_team(2, vec![40.0, 0.0, 0.0], vec![0.3, -0.2, 0.1]);
    let batch = TeamBatch::new(Matrix::zeros(1, 1), vec![2], vec![vec![2], vec![0]], 3).unwrap();
    let fwd = team_forward(&model, &batch).unwrap();
    for (p, e) in fwd.p_team.row(0).iter().zip([0.0, 0.0, 1.0]) {
        assert!((p - e).abs() <= 1e-12);
    }
    let (_, g) = team_loss_gradients(&model, &batch).unwrap();
    assert!(g.tensors().iter().all(|t| t.iter().all(|v| v.abs() < 1e-10)));
}

#[test]
fn wrong_expert_with_all_mass_hits_floor() {
    let model = constant_team(1, vec![800.0, 0.0], vec![0.0, 0.0]);
    let batch = TeamBatch::new(Matrix::zeros(1, 1), vec![0], vec![vec![1]], 2).unwrap();
    let (loss, g) = team_loss_gradients(&model, &batch).unwrap();
    assert_eq!(loss, -PROB_FLOOR.ln());
    assert!(g.all_finite());
}

#[test]
fn routing_examples() {
    let model = constant_team(1, vec![2.0, -1.0], vec![0.0, 0.0, 0.0, 5.0]);
    let table = crate::experts::ExpertPredictionTable::new(vec![vec![3]], "").unwrap();
    let a = team_predict(&model, &Matrix::zeros(1, 1), Some(&table)).unwrap();
    assert_eq!((a.assigned[0], a.predicted[0]), (0, 3));
    let shifted = constant_team(1, vec![12.0, 9.0], vec![0.0, 0.0, 0.0, 5.0]);
    let b = team_predict(&shifted, &Matrix::zeros(1, 1), Some(&table)).unwrap();
    assert_eq!(a.assigned, b.assigned);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_team_on_simplex_and_allocator_grad_sums_to_zero(seed in any::<u64>()) {
        let mut rng = Rng::seed_from_u64(seed);
        let (model, batch) = random_instance(&mut rng);
        let fwd = team_forward(&model, &batch).unwrap();
        for i in 0..batch.len() {
            let row = fwd.p_team.row(i);
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
        // single-instance batches expose the per-instance logit gradient in b2
        let one = TeamBatch::new(
            batch.x.select_rows(&[0]),
            vec![batch.y[0]],
            batch.h.iter().map(|p| vec![p[0]]).collect(),
            batch.k,
        ).unwrap();
        let (_, g) = team_loss_gradients(&model, &one).unwrap();
        prop_assert!(g.allocator().b2.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn loss_shift_invariant(seed in any::<u64>(), shift in -20.0f64..20.0) {
        let mut rng = Rng::seed_from_u64(seed);
        let (model, batch) = random_instance(&mut rng);
        let base = loss_of(&model, &batch);
        let mut a = model.clone();
        a.allocator_mut().b2.iter_mut().for_each(|v| *v += shift);
        prop_assert!((loss_of(&a, &batch) - base).abs() <= 1e-10);
        let mut c = model.clone();
        c.classifiers_mut()[0].b2.iter_mut().for_each(|v| *v += shift);
        prop_assert!((loss_of(&c, &batch) - base).abs() <= 1e-10);
    }

    #[test]
    fn raising_a_correct_member_never_hurts(seed in any::<u64>(), bump in 0.0f64..10.0) {
        let mut rng = Rng::seed_from_u64(seed);
        let (model, batch) = random_instance(&mut rng);
        let i = 0;
        let one = TeamBatch::new(
            batch.x.select_rows(&[i]),
            vec![batch.y[i]],
            batch.h.iter().map(|p| vec![p[i]]).collect(),
            batch.k,
        ).unwrap();
        let base = loss_of(&model, &one);
        for j in 0..model.num_experts() {
            if one.h[j][0] == one.y[0] {
                let mut up = model.clone();
                up.allocator_mut().b2[j] += bump;
                prop_assert!(loss_of(&up, &one) <= base + 1e-12);
            }
        }
    }
}
