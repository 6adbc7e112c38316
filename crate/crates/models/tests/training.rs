//! End-to-end training behavior for the five model families: convergence
//! on separable data, determinism, freezing contracts, weight sharing,
//! prototype semantics, and divergence reporting.

use fsem_core::{Layer, Network, Tensor};
use fsem_data::{ImageSample, LabeledDataset, SplitDataset, SplitIndices, SplitRatios};
use fsem_models::architecture::build_siamese;
use fsem_models::{
    embed, evaluate, pretrain_backbone, prototype_classify, train_cnn,
    train_logistic_regression, train_siamese, transfer_train, InputShape, ModelKind,
    ModelRecipe, ModelsError, CONV_STACK_LEN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Square grayscale images whose pixels are `base[c] + noise·U[0,1)`:
/// linearly separable whenever the bases differ by more than the noise.
fn toy_dataset(side: usize, bases: &[f32], per_cat: usize, noise: f32, seed: u64) -> LabeledDataset {
    let names = (0..bases.len()).map(|c| format!("cat{c}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for (c, &base) in bases.iter().enumerate() {
        for k in 0..per_cat {
            let pixels: Vec<f32> =
                (0..side * side).map(|_| base + noise * rng.gen::<f32>()).collect();
            samples.push(ImageSample {
                pixels: Tensor::from_vec(vec![side, side, 1], pixels).unwrap(),
                label: c as u32,
                source_id: format!("{c}-{k}"),
            });
        }
    }
    LabeledDataset::new(names, samples).unwrap()
}

fn split_60_20_20(ds: LabeledDataset, seed: u64) -> SplitDataset {
    SplitDataset::split(ds, &SplitRatios::default(), seed).unwrap()
}

fn split_all_train(ds: LabeledDataset) -> SplitDataset {
    let indices = SplitIndices {
        train: (0..ds.len()).collect(),
        val: Vec::new(),
        test: Vec::new(),
    };
    SplitDataset::new(ds, indices).unwrap()
}

fn accuracy(predicted: &[usize], labels: &[u32]) -> f64 {
    let hits = predicted.iter().zip(labels).filter(|&(&p, &l)| p == l as usize).count();
    hits as f64 / predicted.len() as f64
}

fn params_of(net: &Network<f32>) -> Vec<f32> {
    net.layers()
        .iter()
        .flat_map(|l| l.params().into_iter().flat_map(|p| p.data().iter().copied()))
        .collect()
}

fn stack_params(net: &Network<f32>) -> Vec<f32> {
    net.layers()
        .iter()
        .take(CONV_STACK_LEN)
        .flat_map(|l| l.params().into_iter().flat_map(|p| p.data().iter().copied()))
        .collect()
}

/// Small-but-real CNN hyperparameters so convolutional tests stay quick.
fn small_conv_recipe(kind: ModelKind) -> ModelRecipe {
    let mut recipe = ModelRecipe::new(kind);
    recipe.conv_channels = vec![2, 3, 4, 4, 4];
    recipe.linear_widths = vec![8, 8, 8, 8];
    recipe.embedding_dim = 8;
    recipe.batch_size = 8;
    recipe.pairs_per_epoch_factor = 2.0;
    recipe
}

#[test]
fn separable_categories_reach_perfect_test_accuracy() {
    let ds = toy_dataset(8, &[0.0, 1.0], 30, 0.01, 11);
    let split = split_60_20_20(ds, 1);
    let recipe = ModelRecipe::new(ModelKind::LogisticRegression)
        .with_epochs(200)
        .with_seed(5);
    let model = train_logistic_regression(&split, &recipe).unwrap();

    let test_ds = split.parent().subset(split.test()).unwrap();
    let predicted = evaluate(&model, &test_ds).unwrap();
    assert_eq!(accuracy(&predicted, &test_ds.labels()), 1.0);

    assert_eq!(model.trace.len(), 200);
    let first = model.trace.first().unwrap().train_loss;
    let last = model.trace.last().unwrap().train_loss;
    assert!(last < first, "loss should fall on separable data: {first} -> {last}");
    assert!(model.trace.iter().all(|s| s.val_accuracy.is_some()));
}

#[test]
fn zero_epochs_returns_an_untrained_chance_level_model() {
    let ds = toy_dataset(8, &[0.0, 1.0], 30, 0.01, 12);
    let split = split_60_20_20(ds, 2);
    let test_ds = split.parent().subset(split.test()).unwrap();
    let mut total = 0.0;
    let seeds = [0u64, 1, 2, 3, 4];
    for &seed in &seeds {
        let recipe = ModelRecipe::new(ModelKind::LogisticRegression)
            .with_epochs(0)
            .with_seed(seed);
        let model = train_logistic_regression(&split, &recipe).unwrap();
        assert!(model.trace.is_empty());
        let predicted = evaluate(&model, &test_ds).unwrap();
        total += accuracy(&predicted, &test_ds.labels());
    }
    let mean = total / seeds.len() as f64;
    assert!(
        (0.2..=0.8).contains(&mean),
        "untrained two-category accuracy should sit near chance, got {mean}"
    );
}

#[test]
fn fixed_seed_cnn_training_is_bit_identical() {
    let ds = toy_dataset(32, &[0.0, 1.0], 6, 0.01, 13);
    let recipe = small_conv_recipe(ModelKind::Cnn).with_epochs(2).with_seed(9);

    let a = train_cnn(&split_all_train(ds.clone()), &recipe).unwrap();
    let b = train_cnn(&split_all_train(ds.clone()), &recipe).unwrap();
    assert_eq!(params_of(&a.network), params_of(&b.network));

    let other = train_cnn(&split_all_train(ds), &recipe.clone().with_seed(10)).unwrap();
    assert_ne!(params_of(&a.network), params_of(&other.network));
}

#[test]
fn pretraining_returns_a_conv_stack_with_falling_loss() {
    let aux = toy_dataset(32, &[0.2, 0.9], 8, 0.05, 14);
    let recipe = small_conv_recipe(ModelKind::Cnn).with_epochs(4).with_seed(3);
    let backbone = pretrain_backbone(&aux, &recipe).unwrap();

    assert_eq!(backbone.network.len(), CONV_STACK_LEN);
    assert!(!backbone.network.layers().iter().any(|l| matches!(l, Layer::Linear(_))));
    assert_eq!(backbone.trace.len(), 4);
    assert!(backbone.trace.iter().all(|s| s.val_accuracy.is_none()));
    let first = backbone.trace.first().unwrap().train_loss;
    let last = backbone.trace.last().unwrap().train_loss;
    assert!(last < first, "pretraining loss should fall: {first} -> {last}");

    let single_category = toy_dataset(32, &[0.5], 4, 0.01, 15);
    assert!(pretrain_backbone(&single_category, &recipe).is_err());
}

#[test]
fn transfer_training_freezes_the_backbone_and_moves_the_head() {
    let aux = toy_dataset(32, &[0.2, 0.9], 8, 0.05, 16);
    let pretrain_recipe = small_conv_recipe(ModelKind::Cnn).with_epochs(2).with_seed(4);
    let backbone = pretrain_backbone(&aux, &pretrain_recipe).unwrap();

    let target = toy_dataset(32, &[0.0, 1.0], 10, 0.01, 17);
    let split = split_60_20_20(target, 3);
    let base = small_conv_recipe(ModelKind::Transfer).with_seed(6);

    let untrained = transfer_train(&split, &backbone.network, &base.clone().with_epochs(0)).unwrap();
    let trained = transfer_train(&split, &backbone.network, &base.clone().with_epochs(1)).unwrap();

    // the cloned stack never moves, with any number of epochs
    assert_eq!(stack_params(&untrained.network), params_of(&backbone.network));
    assert_eq!(stack_params(&trained.network), params_of(&backbone.network));

    // the head moved after one epoch of nonzero-lr training
    let head = |net: &Network<f32>| -> Vec<f32> {
        net.layers()
            .iter()
            .skip(CONV_STACK_LEN)
            .flat_map(|l| l.params().into_iter().flat_map(|p| p.data().iter().copied()))
            .collect::<Vec<f32>>()
    };
    assert_ne!(head(&untrained.network), head(&trained.network));
}

#[test]
fn siamese_shares_one_parameter_set_and_separates_categories() {
    let ds = toy_dataset(32, &[0.0, 1.0], 10, 0.05, 18);
    let split = split_60_20_20(ds, 4);
    let recipe = small_conv_recipe(ModelKind::Siamese).with_epochs(3).with_seed(8);
    let model = train_siamese(&split, &recipe, None).unwrap();

    // a single tower's worth of parameters, not two branches' worth
    let (h, w, c) = split.parent().uniform_dims().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let single_tower = build_siamese(InputShape::new(h, w, c), &recipe, &mut rng).unwrap();
    assert_eq!(model.network.param_count(), single_tower.param_count());

    // determinism holds for the pair engine too
    let again = train_siamese(&split, &recipe, None).unwrap();
    assert_eq!(params_of(&model.network), params_of(&again.network));

    // held-out embeddings separate: mean intra-category distance is
    // smaller than mean inter-category distance
    let test_ds = split.parent().subset(split.test()).unwrap();
    let (emb, labels) = embed(&model, &test_ds).unwrap();
    assert_eq!(emb.shape(), &[test_ds.len(), recipe.embedding_dim]);
    let (n, d) = (emb.shape()[0], emb.shape()[1]);
    let (mut intra, mut inter) = ((0.0f64, 0usize), (0.0f64, 0usize));
    for i in 0..n {
        for j in i + 1..n {
            let dist: f64 = (0..d)
                .map(|k| {
                    let diff = f64::from(emb.data()[i * d + k] - emb.data()[j * d + k]);
                    diff * diff
                })
                .sum::<f64>()
                .sqrt();
            if labels[i] == labels[j] {
                intra = (intra.0 + dist, intra.1 + 1);
            } else {
                inter = (inter.0 + dist, inter.1 + 1);
            }
        }
    }
    let mean_intra = intra.0 / intra.1 as f64;
    let mean_inter = inter.0 / inter.1 as f64;
    assert!(
        mean_intra < mean_inter,
        "expected intra {mean_intra} < inter {mean_inter}"
    );
}

#[test]
fn prototypes_are_training_set_embedding_means() {
    let ds = toy_dataset(32, &[0.1, 0.8], 6, 0.05, 19);
    let split = split_60_20_20(ds, 5);
    let recipe = small_conv_recipe(ModelKind::Siamese).with_epochs(1).with_seed(2);
    let model = train_siamese(&split, &recipe, None).unwrap();

    let train_ds = split.parent().subset(split.train()).unwrap();
    let (emb, labels) = embed(&model, &train_ds).unwrap();
    let d = emb.shape()[1];
    let protos = model.prototypes.as_ref().unwrap();
    assert_eq!(protos.shape(), &[2, d]);
    for c in 0..2u32 {
        let rows: Vec<usize> =
            (0..labels.len()).filter(|&i| labels[i] == c).collect();
        for k in 0..d {
            let mean: f64 = rows.iter().map(|&i| f64::from(emb.data()[i * d + k])).sum::<f64>()
                / rows.len() as f64;
            let stored = f64::from(protos.data()[c as usize * d + k]);
            assert!(
                (mean - stored).abs() < 1e-6,
                "prototype[{c},{k}] = {stored}, train mean = {mean}"
            );
        }
    }
}

#[test]
fn siamese_transfer_keeps_the_backbone_frozen() {
    let aux = toy_dataset(32, &[0.2, 0.9], 8, 0.05, 20);
    let pretrain_recipe = small_conv_recipe(ModelKind::Cnn).with_epochs(2).with_seed(1);
    let backbone = pretrain_backbone(&aux, &pretrain_recipe).unwrap();

    let target = toy_dataset(32, &[0.0, 1.0], 10, 0.05, 21);
    let split = split_60_20_20(target, 6);
    let recipe = small_conv_recipe(ModelKind::SiameseTransfer).with_epochs(2).with_seed(7);

    let model = train_siamese(&split, &recipe, Some(&backbone.network)).unwrap();
    assert_eq!(stack_params(&model.network), params_of(&backbone.network));
    assert!(model.prototypes.is_some());

    let missing = train_siamese(&split, &recipe, None);
    assert!(matches!(missing, Err(ModelsError::InvalidRecipe(_))));
}

#[test]
fn tiny_cnn_memorizes_four_samples() {
    let ds = toy_dataset(32, &[0.0, 1.0], 2, 0.01, 22);
    let split = split_all_train(ds.clone());
    let mut recipe = small_conv_recipe(ModelKind::Cnn).with_epochs(400).with_seed(0);
    recipe.batch_size = 4;
    let model = train_cnn(&split, &recipe).unwrap();

    let predicted = evaluate(&model, &ds).unwrap();
    assert_eq!(accuracy(&predicted, &ds.labels()), 1.0);
    assert!(predicted.iter().all(|&p| p < 2));
    assert_eq!(evaluate(&model, &ds).unwrap(), predicted);
}

#[test]
fn huge_learning_rate_reports_the_epoch_of_divergence() {
    let ds = toy_dataset(8, &[0.0, 100.0], 6, 0.01, 23);
    let split = split_all_train(ds);
    let mut recipe = ModelRecipe::new(ModelKind::LogisticRegression)
        .with_epochs(50)
        .with_seed(0);
    recipe.learning_rate = 1e38;
    match train_logistic_regression(&split, &recipe) {
        Err(ModelsError::TrainingDiverged { epoch, .. }) => {
            assert!((1..=50).contains(&epoch));
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn embeddings_use_the_pre_softmax_tap() {
    // three categories so the logit dimension differs from the pixel count
    let ds = toy_dataset(8, &[0.0, 0.5, 1.0], 4, 0.01, 24);
    let split = split_all_train(ds.clone());
    let recipe = ModelRecipe::new(ModelKind::LogisticRegression)
        .with_epochs(0)
        .with_seed(0);
    let model = train_logistic_regression(&split, &recipe).unwrap();

    let (emb, labels) = embed(&model, &ds).unwrap();
    assert_eq!(emb.shape(), &[ds.len(), 3]);
    assert_eq!(labels, ds.labels());

    // duplicated input rows embed identically
    let twice = ds.subset(&[0, 0]).unwrap();
    let (pair, _) = embed(&model, &twice).unwrap();
    assert_eq!(pair.data()[..3], pair.data()[3..]);

    // classifier kinds have no prototypes to classify against
    assert!(matches!(
        prototype_classify(&model, &ds),
        Err(ModelsError::MissingPrototypes)
    ));
}
