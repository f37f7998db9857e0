use offlang_core::preprocess::{
    demojize_counted, run_pipeline, run_until, PreprocessConfig, Stage,
};
use proptest::prelude::*;

const GOLDEN: &str = include_str!("fixtures/preprocess_golden.tsv");

struct Case<'a> {
    input: &'a str,
    normalized: &'a str,
    tokens: &'a str,
}

fn golden() -> Vec<Case<'static>> {
    GOLDEN
        .lines()
        .skip(1)
        .map(|line| {
            let mut cols = line.split('\t');
            let case = Case {
                input: cols.next().unwrap(),
                normalized: cols.next().unwrap(),
                tokens: cols.next().unwrap(),
            };
            assert!(cols.next().is_none(), "extra column in {line:?}");
            case
        })
        .collect()
}

#[test]
fn golden_fixture_is_byte_exact() {
    let config = PreprocessConfig::default();
    let cases = golden();
    assert_eq!(cases.len(), 25);
    for c in &cases {
        assert_eq!(run_until(c.input, &config, Stage::Punctuation), c.normalized, "{:?}", c.input);
        assert_eq!(run_pipeline(c.input, &config).join(), c.tokens, "{:?}", c.input);
    }
}

#[test]
fn golden_fixture_covers_the_headline_rewrites() {
    let config = PreprocessConfig::default();
    let find = |input: &str| golden().into_iter().find(|c| c.input == input).unwrap();
    assert!(find("Python is 👍").normalized.contains("thumbs up"));
    assert!(find("I can't believe it").normalized.contains("can not"));
    assert!(find("#LunaticLeft strikes again").normalized.starts_with("lunatic left"));
    assert_eq!(find("he went home").tokens, "go home");
    assert_eq!(run_until("Python is 👍", &config, Stage::Demojize), "Python is thumbs up");
}

#[test]
fn golden_fixture_is_idempotent() {
    let config = PreprocessConfig::default();
    for c in golden() {
        let once = run_pipeline(c.input, &config);
        let twice = run_pipeline(&once.join(), &config);
        assert_eq!(once.tokens, twice.tokens, "{:?}", c.input);
    }
}

fn tweet() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[A-Za-z]{1,8}",
        Just("@USER".to_string()),
        Just("URL".to_string()),
        "#[A-Z][a-z]{1,5}[A-Z][a-z]{1,5}[0-9]?",
        Just("can't".to_string()),
        Just("it's".to_string()),
        Just("&amp;".to_string()),
        Just("&#39;".to_string()),
        Just("👍".to_string()),
        Just("❤".to_string()),
        Just("😂".to_string()),
        Just("ＡＢ".to_string()),
        Just("naïve".to_string()),
        "[!?.,;:\"()-]{1,3}",
        "[0-9]{1,3}",
    ];
    proptest::collection::vec(piece, 0..20).prop_map(|p| p.join(" "))
}

proptest! {
    #[test]
    fn pipeline_is_idempotent(text in tweet()) {
        let config = PreprocessConfig::default();
        let once = run_pipeline(&text, &config);
        let twice = run_pipeline(&once.join(), &config);
        prop_assert_eq!(once.tokens, twice.tokens);
    }

    #[test]
    fn tokens_are_lowercase_alphanumeric(text in tweet()) {
        for t in run_pipeline(&text, &PreprocessConfig::default()).tokens {
            prop_assert!(!t.is_empty());
            prop_assert!(t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()), "{:?}", t);
        }
    }

    #[test]
    fn mention_runs_are_capped(text in tweet(), cap in 0usize..5) {
        let config = PreprocessConfig::default().with_max_mentions(cap);
        let out = run_until(&text, &config, Stage::Mentions);
        let mut run = 0;
        for w in out.split_whitespace() {
            run = if w == "@USER" { run + 1 } else { 0 };
            prop_assert!(run <= cap);
        }
    }

    #[test]
    fn every_known_emoji_becomes_one_phrase(n_thumbs in 0usize..5, n_hearts in 0usize..5) {
        let config = PreprocessConfig::default();
        let text = format!("{} x {}", "👍".repeat(n_thumbs), "❤".repeat(n_hearts));
        let (out, replaced) = demojize_counted(&text, &config.emoji_table);
        prop_assert_eq!(replaced, n_thumbs + n_hearts);
        prop_assert_eq!(out.matches("thumbs up").count(), n_thumbs);
        prop_assert_eq!(out.matches("red heart").count(), n_hearts);
    }
}
