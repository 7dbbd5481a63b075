use skilleval::kinematics::{apply_standardization, synth_dataset, SynthConfig};
use skilleval::training::{
    adam_step, load_model, mean_loss, model_from_json, model_to_json, predict, save_model,
    target_for, train, AdamState,
};
use skilleval::{FcnModel, Gradients, HeadKind, KinematicTrial, TrainConfig};

fn small_data() -> Vec<KinematicTrial> {
    synth_dataset(
        2,
        &SynthConfig {
            n_per_class: 4,
            length_range: (40, 60),
            ..SynthConfig::default()
        },
    )
    .unwrap()
    .trials
}

fn cfg(epochs: usize) -> TrainConfig {
    TrainConfig {
        max_epochs: epochs,
        seed: 11,
        ..TrainConfig::default()
    }
}

#[test]
fn model_file_roundtrips_bit_exact() {
    let t = train(&small_data(), HeadKind::Regression, &cfg(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&t.model, &t.stats, &path).unwrap();
    let (m, s) = load_model(&path).unwrap();
    assert_eq!(m, t.model);
    assert_eq!(s, t.stats);
    assert_eq!(
        model_to_json(&m, &s),
        std::fs::read_to_string(&path).unwrap()
    );
    assert!(model_from_json("{\"format_version\": 1").is_err());
}

#[test]
fn l2_alone_shrinks_weights() {
    let data = small_data();
    let t = train(&data, HeadKind::Classification, &cfg(1)).unwrap();
    let mut model = t.model.clone();
    let config = TrainConfig {
        l2_lambda: 0.1,
        ..TrainConfig::default()
    };
    let zero = Gradients::zeros_like(&model);
    let mut state = AdamState::new(&model);
    adam_step(&mut model, &zero, &mut state, &config).unwrap();
    for (before, after) in t.model.tensors().iter().zip(model.tensors()) {
        for (b, a) in before.iter().zip(after) {
            if b.abs() > config.learning_rate {
                assert!(a.abs() < b.abs());
            } else if *b == 0.0 {
                assert_eq!(*a, 0.0);
            }
        }
    }
}

#[test]
fn one_epoch_history() {
    let t = train(&small_data(), HeadKind::Classification, &cfg(1)).unwrap();
    let h = &t.history;
    assert_eq!(h.epochs.len(), 1);
    assert_eq!(h.best_epoch, 1);
    assert_eq!(h.best_validation_loss, h.epochs[0].validation_loss);
    assert_eq!(h.train_ids.len() + h.validation_ids.len(), 12);
    assert!(!h.validation_on_train);
}

#[test]
fn training_is_deterministic() {
    let data = small_data();
    let a = train(&data, HeadKind::Regression, &cfg(3)).unwrap();
    let b = train(&data, HeadKind::Regression, &cfg(3)).unwrap();
    assert_eq!(a, b);
    let c = train(
        &data,
        HeadKind::Regression,
        &TrainConfig { seed: 12, ..cfg(3) },
    )
    .unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn checkpoint_is_the_best_epoch_and_reproducible() {
    let data = small_data();
    for head in [HeadKind::Classification, HeadKind::Regression] {
        let t = train(&data, head, &cfg(15)).unwrap();
        let h = &t.history;
        let min = h
            .epochs
            .iter()
            .map(|e| e.validation_loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(h.best_validation_loss, min);
        assert_eq!(h.epochs[h.best_epoch - 1].validation_loss, min);

        let val: Vec<KinematicTrial> = h
            .validation_ids
            .iter()
            .map(|id| {
                apply_standardization(data.iter().find(|t| &t.trial_id == id).unwrap(), &t.stats)
            })
            .collect();
        let targets: Vec<_> = val.iter().map(|v| target_for(v, head).unwrap()).collect();
        let again = mean_loss(&t.model, &val, &targets).unwrap();
        assert!((again - h.best_validation_loss).abs() <= 1e-12);
    }
}

#[test]
fn zero_validation_fraction_uses_train_split() {
    let t = train(
        &small_data(),
        HeadKind::Classification,
        &TrainConfig {
            validation_fraction: 0.0,
            ..cfg(2)
        },
    )
    .unwrap();
    assert!(t.history.validation_on_train);
    assert_eq!(t.history.train_ids, t.history.validation_ids);
}

#[test]
fn synthetic_classes_are_learned() {
    let data = synth_dataset(
        5,
        &SynthConfig {
            n_per_class: 5,
            ..SynthConfig::default()
        },
    )
    .unwrap()
    .trials;
    let t = train(&data, HeadKind::Classification, &cfg(60)).unwrap();
    let h = &t.history;
    assert!(h.epochs.last().unwrap().train_loss < h.epochs[0].train_loss);
    let correct = data
        .iter()
        .filter(|tr| h.train_ids.contains(&tr.trial_id))
        .filter(|tr| {
            Some(FcnModel::predict_class(
                &predict(&t.model, &t.stats, tr).unwrap(),
            )) == tr.skill
        })
        .count();
    assert_eq!(correct, h.train_ids.len());
}
