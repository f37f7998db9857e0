mod support;

use std::sync::OnceLock;

use offlang_core::cascade::{
    evaluate_end_to_end, evaluate_level, predict_cascade, train_cascade, CascadeSpec, LevelSpec, ABSENT,
};
use offlang_core::corpus::{parse_olid_str, Corpus, LabelA, Level};
use offlang_core::features::FeatureConfig;
use offlang_core::models::{Hyperparameters, ModelKind};
use offlang_core::preprocess::PreprocessConfig;
use offlang_core::{Cascade, Pipeline};
use proptest::prelude::*;

fn spec(kind: ModelKind) -> CascadeSpec {
    CascadeSpec::uniform(
        PreprocessConfig::default(),
        LevelSpec {
            features: FeatureConfig { min_frequency: 1, ..Default::default() },
            hyperparameters: Hyperparameters::default_for(kind),
        },
    )
}

fn data() -> &'static (Corpus, Corpus, Cascade) {
    static DATA: OnceLock<(Corpus, Corpus, Cascade)> = OnceLock::new();
    DATA.get_or_init(|| {
        let corpus = parse_olid_str(&support::synthetic_olid(400, 3)).unwrap();
        let split = corpus.split_stratified(0.75, 42).unwrap();
        let model = train_cascade(&split.train, &spec(ModelKind::Nb)).unwrap();
        (split.train, split.test, model)
    })
}

#[test]
fn gold_conditioned_levels_ignore_a_broken_upstream_model() {
    let (train, test, model) = data();
    // an A model trained on inverted labels is as wrong as it can be
    let texts: Vec<&str> = train.posts().iter().map(|p| p.text.as_str()).collect();
    let inverted: Vec<&str> = train
        .posts()
        .iter()
        .map(|p| if p.label_a == Some(LabelA::Off) { "NOT" } else { "OFF" })
        .collect();
    let level = spec(ModelKind::Nb).a;
    let broken_a = Pipeline::fit(&texts, &inverted, &PreprocessConfig::default(), &level.features, &level.hyperparameters).unwrap();
    let broken = Cascade::from_levels(broken_a, model.level(Level::B).clone(), model.level(Level::C).clone());

    let good_a = evaluate_level(model, test, Level::A).unwrap();
    let bad_a = evaluate_level(&broken, test, Level::A).unwrap();
    assert!(bad_a.accuracy < good_a.accuracy);
    for level in [Level::B, Level::C] {
        assert_eq!(
            evaluate_level(&broken, test, level).unwrap().to_text(),
            evaluate_level(model, test, level).unwrap().to_text()
        );
    }
    // the end-to-end mode does see the damage
    let e2e_good = evaluate_end_to_end(model, test).unwrap();
    let e2e_bad = evaluate_end_to_end(&broken, test).unwrap();
    assert_ne!(e2e_good.b.to_text(), e2e_bad.b.to_text());
    assert!(e2e_good.b.confusion.classes().iter().any(|c| c == ABSENT));
}

#[test]
fn level_c_report_lists_all_three_targets() {
    let (_, test, model) = data();
    let report = evaluate_level(model, test, Level::C).unwrap();
    let labels: Vec<&str> = report.per_class.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, vec!["GRP", "IND", "OTH"]);
}

#[test]
fn persisted_cascade_predicts_identically() {
    let (_, test, model) = data();
    let dir = tempfile::tempdir().unwrap();
    model.save_dir(dir.path()).unwrap();
    let back = Cascade::load_dir(dir.path()).unwrap();
    for p in test.posts() {
        assert_eq!(predict_cascade(&back, &p.text).unwrap(), predict_cascade(model, &p.text).unwrap());
    }
}

#[test]
fn every_model_kind_trains_a_cascade() {
    let (train, test, _) = data();
    for kind in ModelKind::ALL {
        let mut s = spec(kind);
        if let Hyperparameters::Forest(p) = &mut s.a.hyperparameters {
            p.n_trees = 5;
        }
        let m: Cascade = train_cascade(train, &s).unwrap();
        for p in test.posts().iter().take(20) {
            assert!(predict_cascade(&m, &p.text).unwrap().satisfies_hierarchy());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn predictions_respect_the_hierarchy(text in "[a-z@#' ]{0,40}|(idiot|moron|@USER|media|liberals|pal|sunny|[a-z]{1,6}| ){0,12}") {
        let (_, _, model) = data();
        let h = predict_cascade(model, &text).unwrap();
        prop_assert!(h.satisfies_hierarchy());
        let row = h.to_string();
        prop_assert_eq!(row.split(',').count(), 3);
        if h.label_a == LabelA::Not {
            prop_assert_eq!(row, "NOT,,");
        }
    }
}
