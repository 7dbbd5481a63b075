use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use skilleval::kinematics::{default_channel_layout, N_CHANNELS};
use skilleval::nn::{expected_param_count, gap, softmax, Conv1dParams};
use skilleval::{gradcheck, FcnModel, HeadKind, Matrix, SkillLevel, Target};

fn model(head: HeadKind, seed: u64) -> FcnModel {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut m = FcnModel::glorot(head, default_channel_layout(), &mut r).unwrap();
    let n = m.n_tensors();
    for (i, t) in m.tensors_mut().into_iter().enumerate() {
        if i % 2 == 1 && i != n - 2 {
            t.iter_mut().for_each(|b| *b = r.random_range(-0.3..0.3));
        }
    }
    m
}

fn series(len: usize, seed: u64) -> Matrix {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(len, N_CHANNELS, |_, _| StandardNormal.sample(&mut r))
}

// Independent reimplementation working on Vec<Vec<f64>> (channel-major).
fn oracle_conv(x: &[Vec<f64>], p: &Conv1dParams) -> Vec<Vec<f64>> {
    let l = x[0].len();
    (0..p.out_channels)
        .map(|o| {
            (0..l)
                .map(|t| {
                    let mut s = p.biases[o];
                    for (c, row) in x.iter().enumerate() {
                        let k = p.kernel(o, c);
                        if t > 0 {
                            s += k[0] * row[t - 1];
                        }
                        s += k[1] * row[t];
                        if t + 1 < l {
                            s += k[2] * row[t + 1];
                        }
                    }
                    s.max(0.0)
                })
                .collect()
        })
        .collect()
}

fn oracle_forward(m: &FcnModel, x: &Matrix) -> Vec<f64> {
    let mut merged = Vec::new();
    let mut layer = 0;
    for g in &m.layout.groups {
        let mut group_in = Vec::new();
        for sub in &g.sub_clusters {
            let input: Vec<Vec<f64>> = sub
                .iter()
                .map(|&c| (0..x.rows()).map(|t| x.get(t, c)).collect())
                .collect();
            group_in.extend(oracle_conv(&input, &m.layer1[layer]));
            layer += 1;
        }
        merged.extend(oracle_conv(&group_in, &m.layer2[merged.len() / 16]));
    }
    let a = oracle_conv(&merged, &m.layer3);
    let pooled: Vec<f64> = a
        .iter()
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .collect();
    (0..m.n_outputs())
        .map(|c| {
            m.head_b[c]
                + (0..32)
                    .map(|k| m.head_w[c * 32 + k] * pooled[k])
                    .sum::<f64>()
        })
        .collect()
}

#[test]
fn forward_matches_composed_oracle() {
    for (i, head) in [HeadKind::Classification, HeadKind::Regression]
        .into_iter()
        .enumerate()
    {
        for len in [3, 4, 17, 64] {
            let m = model(head, 100 + i as u64);
            let x = series(len, len as u64);
            let z = m.forward(&x).unwrap().z;
            let want = oracle_forward(&m, &x);
            for (a, b) in z.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn forward_is_deterministic() {
    let m = model(HeadKind::Classification, 5);
    let x = series(30, 6);
    assert_eq!(m.forward(&x).unwrap(), m.forward(&x).unwrap());
    assert_eq!(
        model(HeadKind::Regression, 7),
        model(HeadKind::Regression, 7)
    );
}

#[test]
fn trace_is_internally_consistent() {
    let m = model(HeadKind::Classification, 8);
    let tr = m.forward(&series(25, 9)).unwrap();
    assert_eq!(tr.len(), 25);
    assert_eq!(tr.pooled, gap(&tr.activations));
    assert_eq!(tr.stage1.len(), 20);
    assert_eq!(tr.stage2.len(), 4);
    assert_eq!((tr.merged.rows(), tr.activations.rows()), (64, 32));
    assert!(tr.group_inputs.iter().all(|g| g.rows() == 40));
    let p = tr.probabilities.as_ref().unwrap();
    assert_eq!(p, &softmax(&tr.z));
    assert!(tr.activations.as_slice().iter().all(|v| *v >= 0.0));
}

#[test]
fn softmax_properties() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let z: Vec<f64> = (0..3).map(|_| r.random_range(-50.0..50.0)).collect();
        let p = softmax(&z);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        let argmax = |v: &[f64]| (0..3).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        assert_eq!(argmax(&p), argmax(&z));
    }
    let huge = softmax(&[1000.0, 999.0, -1000.0]);
    assert!(huge.iter().all(|v| v.is_finite()));
}

#[test]
fn param_counts_agree() {
    for head in [HeadKind::Classification, HeadKind::Regression] {
        let m = model(head, 3);
        assert_eq!(m.n_params(), expected_param_count(head));
        assert_eq!(m.tensors().len(), m.tensor_names().len());
    }
}

#[test]
fn gradients_pass_check_on_other_seeds() {
    for seed in [3, 4] {
        for head in [HeadKind::Classification, HeadKind::Regression] {
            let report = gradcheck::run(head, seed, 12).unwrap();
            assert!(
                report.first_failure(1e-4).is_none(),
                "{head} seed {seed}: {}",
                report.max_rel_error()
            );
        }
    }
}

#[test]
fn loss_decreases_along_negative_gradient() {
    let m = model(HeadKind::Classification, 21);
    let x = series(20, 22);
    let target = Target::Skill(SkillLevel::Intermediate);
    let tr = m.forward(&x).unwrap();
    let l0 = m.loss(&tr, &target).unwrap();
    let g = m.backward(&tr, &target).unwrap();
    let mut stepped = m.clone();
    for (p, d) in stepped.tensors_mut().into_iter().zip(&g.tensors) {
        p.iter_mut().zip(d).for_each(|(p, d)| *p -= 1e-3 * d);
    }
    let l1 = stepped
        .loss(&stepped.forward(&x).unwrap(), &target)
        .unwrap();
    assert!(l1 < l0);
}
