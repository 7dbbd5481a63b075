use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use skilleval::cam::{cam_csv, cam_json, compute_cam, normalize, NamedCam};
use skilleval::kinematics::{default_channel_layout, Task, N_CHANNELS};
use skilleval::{FcnModel, HeadKind, KinematicTrial, Matrix};

fn setup(head: HeadKind, seed: u64, len: usize) -> (FcnModel, KinematicTrial) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut m = FcnModel::glorot(head, default_channel_layout(), &mut r).unwrap();
    m.head_b
        .iter_mut()
        .for_each(|b| *b = r.random_range(-1.0..1.0));
    let samples = Matrix::from_fn(len, N_CHANNELS, |_, _| StandardNormal.sample(&mut r));
    let trial = KinematicTrial {
        trial_id: "Suturing_C003".into(),
        subject_id: "C".into(),
        task: Task::Suturing,
        super_trial_index: 3,
        samples,
        sample_rate_hz: 30.0,
        skill: None,
        osats: None,
    };
    (m, trial)
}

#[test]
fn cam_mean_plus_bias_reproduces_output() {
    for head in [HeadKind::Classification, HeadKind::Regression] {
        let (m, t) = setup(head, 1, 50);
        let tr = m.forward(&t.samples).unwrap();
        for c in 0..m.n_outputs() {
            let cam = compute_cam(&m, &tr, c).unwrap();
            assert!((cam.z_check - tr.z[c]).abs() < 1e-10);
        }
    }
}

#[test]
fn cam_is_linear_in_head_weights() {
    let (mut m, t) = setup(HeadKind::Classification, 2, 40);
    let tr = m.forward(&t.samples).unwrap();
    let base = compute_cam(&m, &tr, 1).unwrap();
    m.head_w.iter_mut().for_each(|w| *w *= -2.5);
    let scaled = compute_cam(&m, &tr, 1).unwrap();
    for (a, b) in base.values.iter().zip(&scaled.values) {
        assert!((a * -2.5 - b).abs() < 1e-12);
    }
}

#[test]
fn class_difference_ignores_shared_weight_shift() {
    let (m, t) = setup(HeadKind::Classification, 3, 33);
    let tr = m.forward(&t.samples).unwrap();
    let mut shifted = m.clone();
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let common: Vec<f64> = (0..32).map(|_| r.random_range(-1.0..1.0)).collect();
    for row in shifted.head_w.chunks_mut(32) {
        row.iter_mut().zip(&common).for_each(|(w, s)| *w += s);
    }
    let diff = |m: &FcnModel| {
        let a = compute_cam(m, &tr, 0).unwrap().values;
        let b = compute_cam(m, &tr, 2).unwrap().values;
        a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<f64>>()
    };
    for (a, b) in diff(&m).iter().zip(&diff(&shifted)) {
        assert!((a - b).abs() < 1e-12);
    }
    // every logit moves by the same amount, so probabilities stay put
    let p0 = tr.probabilities.clone().unwrap();
    let p1 = shifted.forward(&t.samples).unwrap().probabilities.unwrap();
    assert!(p0.iter().zip(&p1).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn normalization_is_affine_invariant() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let v: Vec<f64> = (0..20).map(|_| r.random_range(-3.0..3.0)).collect();
        let (a, b) = (r.random_range(0.1..10.0), r.random_range(-5.0..5.0));
        let w: Vec<f64> = v.iter().map(|x| a * x + b).collect();
        for (x, y) in normalize(&v).iter().zip(&normalize(&w)) {
            assert!((x - y).abs() < 1e-12);
        }
        let n = normalize(&v);
        assert!(n.contains(&0.0) && n.contains(&1.0));
    }
}

#[test]
fn csv_roundtrips_exactly() {
    let (m, t) = setup(HeadKind::Regression, 6, 12);
    let tr = m.forward(&t.samples).unwrap();
    let cams: Vec<_> = (0..6).map(|c| compute_cam(&m, &tr, c).unwrap()).collect();
    let names = HeadKind::Regression.output_names();
    let named: Vec<NamedCam> = cams
        .iter()
        .zip(&names)
        .map(|(cam, name)| NamedCam { name, cam })
        .collect();
    let text = cam_csv(&t, &named, &m).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 2 + 2 * 6 + 3 * 4);
    assert_eq!(header[2], format!("{}_raw", names[0]));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    for (ti, row) in rows.iter().enumerate() {
        assert_eq!(row[0], ti as f64);
        assert_eq!(row[1], ti as f64 / 30.0);
        for (k, cam) in cams.iter().enumerate() {
            assert_eq!(row[2 + 2 * k], cam.values[ti]);
            assert_eq!(row[3 + 2 * k], cam.normalized[ti]);
        }
        let (_, xyz) = &m.layout.cartesian_channels()[0];
        assert_eq!(row[14], t.samples.get(ti, xyz[0]));
    }

    let json: serde_json::Value = serde_json::from_str(&cam_json(&t, &named, &m).unwrap()).unwrap();
    assert_eq!(json["outputs"].as_array().unwrap().len(), 6);
    assert_eq!(json["trajectories"].as_array().unwrap().len(), 4);
    assert_eq!(
        json["outputs"][3]["raw"][5].as_f64().unwrap(),
        cams[3].values[5]
    );
}
