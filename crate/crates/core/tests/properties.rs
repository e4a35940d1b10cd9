//! Property tests for the invariants of each module.

mod common;

use std::collections::BTreeMap;

use common::brute_force_lcs;
use proptest::prelude::*;
use serde_json::{Map, Value};
use sqlfix_core::dmsft::{
    align_tokens, build_samples, compute_line_diff, masked_loss, nll_sum, sample_mask,
    token_classes, BuildMode, MaskRatio,
};
use sqlfix_core::eval::{judge, EvalCase, Verdict};
use sqlfix_core::executor::SyntaxExecutor;
use sqlfix_core::filter::{filter_pairs, FilterConfig};
use sqlfix_core::generate::{validate_generated, GenCandidate, GenResult, Suitable};
use sqlfix_core::io::{parse_record, to_record_line};
use sqlfix_core::mining::{mine_pairs, MiningConfig};
use sqlfix_core::model::{
    BugFixPair, CategoryPath, EventKind, LineClass, PairSource, SqlEvent, TrainingSample,
};
use sqlfix_core::sql::Dialect;
use sqlfix_core::taxonomy::Taxonomy;
use sqlfix_core::tokenizer::{ByteTokenizer, TokenizerAdapter, WhitespaceTokenizer};

fn line_text() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "d", "", "  x = 1", "-- note"]).prop_map(String::from)
}

fn script() -> impl Strategy<Value = String> {
    prop::collection::vec(line_text(), 0..10).prop_map(|v| v.join("\n"))
}

fn category() -> impl Strategy<Value = CategoryPath> {
    (
        prop::sample::select(vec!["Syntax", "Semantic"]),
        prop::sample::select(vec!["Token", "Reference"]),
        "[A-Z][a-z]{1,6}",
    )
        .prop_map(|(a, b, c)| CategoryPath::new(a, b, c).unwrap())
}

fn pair() -> impl Strategy<Value = BugFixPair> {
    (
        prop::collection::vec(".{0,20}", 0..3),
        script(),
        ".{1,30}",
        script(),
        prop::option::of(category()),
        prop::collection::btree_map("[a-z]{1,5}", any::<i64>(), 0..3),
    )
        .prop_map(
            |(schema_ddl, bug_sql, error_message, correct_sql, category, prov)| BugFixPair {
                schema_ddl,
                bug_sql,
                error_message,
                correct_sql,
                source: PairSource::DiverseCollected,
                category,
                provenance: prov
                    .into_iter()
                    .map(|(k, v)| (k, Value::from(v)))
                    .collect::<Map<_, _>>(),
            },
        )
}

/// Small valid SELECT statements spread over several lines.
fn select_sql() -> impl Strategy<Value = String> {
    let col = prop::sample::select(vec!["a", "b", "price", "qty", "region"]);
    let pred = (
        col.clone(),
        prop::sample::select(vec!["=", "<>", ">", "<="]),
        0u32..1000,
    )
        .prop_map(|(c, op, n)| format!("{c} {op} {n}"));
    (
        prop::collection::vec(col.clone(), 1..4),
        prop::sample::select(vec!["t", "orders", "users"]),
        prop::collection::vec(pred, 0..4),
        prop::sample::select(vec![" AND ", " OR "]),
        prop::option::of(col),
    )
        .prop_map(|(cols, table, preds, joiner, group)| {
            let mut s = format!("SELECT {}\nFROM {table}", cols.join(", "));
            if !preds.is_empty() {
                s.push_str(&format!("\nWHERE {}", preds.join(joiner)));
            }
            if let Some(g) = group {
                s.push_str(&format!("\nGROUP BY {g}"));
            }
            s
        })
}

/// Breaks a statement in a way the parser rejects, or leaves it runnable.
fn bug_of(sql: &str, how: u8) -> String {
    match how % 4 {
        0 => sql.replacen("FROM", "FRM", 1),
        1 => sql.replacen("SELECT", "SELECT ,", 1),
        2 => format!("{sql}\nWHERE"),
        _ => sql.replacen("SELECT", "SELECT 1 AS one,", 1),
    }
}

fn roundtrip<T>(value: &T) -> T
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    parse_record(&to_record_line(value)).unwrap()
}

proptest! {
    #[test]
    fn pair_record_roundtrip(p in pair()) {
        prop_assert_eq!(roundtrip(&p), p);
    }

    #[test]
    fn event_record_roundtrip(
        kind in prop::sample::select(vec![EventKind::ExecuteError, EventKind::ExecuteSuccess, EventKind::SaveCode]),
        sql in ".{1,40}",
        error in prop::option::of(".{1,20}"),
        ts in any::<i64>(),
    ) {
        let e = SqlEvent { session_id: "s".into(), script_id: "q".into(), timestamp_ms: ts, kind, sql_text: sql, error_message: error };
        prop_assert_eq!(roundtrip(&e), e);
    }

    #[test]
    fn diff_plan_and_sample_roundtrip(bug in script(), correct in script(), seed in any::<u64>(), p in 0.0f64..=1.0) {
        let diff = compute_line_diff(&bug, &correct);
        prop_assert_eq!(roundtrip(&diff), diff.clone());
        let plan = sample_mask(&diff, MaskRatio::new(p).unwrap(), seed);
        prop_assert_eq!(roundtrip(&plan), plan);
        let pair = BugFixPair {
            schema_ddl: vec![], bug_sql: bug, error_message: "e".into(), correct_sql: correct,
            source: PairSource::DiverseCollected, category: None, provenance: Map::new(),
        };
        let tok = WhitespaceTokenizer;
        let out = build_samples(&[pair], &BuildMode::Baked { p: MaskRatio::new(p).unwrap(), seed, tokenizer: &tok });
        for s in &out.samples {
            prop_assert_eq!(&roundtrip::<TrainingSample>(s), s);
            prop_assert!(s.spans_partition_target());
        }
    }

    #[test]
    fn lcs_matches_exhaustive_search(
        bug in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..=8),
        correct in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..=8),
    ) {
        let kept = brute_force_lcs(&bug, &correct);
        let diff = compute_line_diff(&bug.join("\n"), &correct.join("\n"));
        let consistent: Vec<usize> = diff.lines().iter().filter(|l| l.class == LineClass::Consistent).map(|l| l.index).collect();
        prop_assert_eq!(consistent, kept);
    }

    #[test]
    fn mask_never_hits_diff_lines_and_grows_with_p(
        bug in script(), correct in script(), seed in any::<u64>(), p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let diff = compute_line_diff(&bug, &correct);
        let a = sample_mask(&diff, MaskRatio::new(lo).unwrap(), seed);
        let b = sample_mask(&diff, MaskRatio::new(hi).unwrap(), seed);
        for ((line, wa), wb) in diff.lines().iter().zip(&a.line_mask).zip(&b.line_mask) {
            if line.class == LineClass::Diff {
                prop_assert_eq!(wa.weight, 1);
                prop_assert_eq!(wb.weight, 1);
            }
            prop_assert!(wa.weight >= wb.weight, "line {} masked at p={} but not at p={}", line.index, lo, hi);
        }
    }

    #[test]
    fn alignment_gives_each_token_one_weight(bug in script(), correct in script(), seed in any::<u64>(), bytes in any::<bool>()) {
        let diff = compute_line_diff(&bug, &correct);
        let tokens = if bytes { ByteTokenizer.tokenize(&correct) } else { WhitespaceTokenizer.tokenize(&correct) }.unwrap();
        let plan = align_tokens(&diff, &sample_mask(&diff, MaskRatio::new(0.5).unwrap(), seed), &correct, &tokens).unwrap();
        let classes = token_classes(&diff, &correct, &tokens).unwrap();
        let weights = plan.token_weights.unwrap();
        prop_assert_eq!(weights.len(), tokens.len());
        prop_assert_eq!(classes.len(), tokens.len());
        for (w, c) in weights.iter().zip(&classes) {
            prop_assert!(*c == LineClass::Consistent || *w == 1);
        }
    }

    #[test]
    fn loss_identity_and_p_zero(terms in prop::collection::vec((-50.0f64..=0.0, any::<bool>(), any::<bool>()), 1..100)) {
        let lps: Vec<f64> = terms.iter().map(|t| t.0).collect();
        let cls: Vec<LineClass> = terms.iter().map(|t| if t.1 { LineClass::Diff } else { LineClass::Consistent }).collect();
        let ones = vec![1u8; lps.len()];
        let b = masked_loss(&lps, &ones, &cls).unwrap();
        prop_assert_eq!(b.total.to_bits(), nll_sum(&lps).to_bits());
        let mut ws: Vec<u8> = terms.iter().map(|t| u8::from(t.1 || t.2)).collect();
        ws[0] = 1;
        let b = masked_loss(&lps, &ws, &cls).unwrap();
        let tol = common::ulp(b.l1) + common::ulp(b.l2) + common::ulp(b.total);
        prop_assert!((b.total - (b.l1 + b.l2)).abs() <= tol);
    }
}

#[derive(Debug, Clone)]
struct EventSpec {
    group: usize,
    gap_ms: i64,
    kind: EventKind,
    text: usize,
}

fn event_specs() -> impl Strategy<Value = Vec<EventSpec>> {
    prop::collection::vec(
        (
            0usize..4,
            prop::sample::select(vec![0i64, 1_000, 60_000, 3_600_000]),
            prop::sample::select(vec![
                EventKind::ExecuteError,
                EventKind::ExecuteSuccess,
                EventKind::SaveCode,
            ]),
            0usize..4,
        )
            .prop_map(|(group, gap_ms, kind, text)| EventSpec {
                group,
                gap_ms,
                kind,
                text,
            }),
        0..40,
    )
}

fn events_from(specs: &[EventSpec]) -> Vec<SqlEvent> {
    let mut clock: BTreeMap<usize, i64> = BTreeMap::new();
    let mut events: Vec<SqlEvent> = specs
        .iter()
        .map(|s| {
            let t = clock.entry(s.group).or_insert(0);
            *t += s.gap_ms;
            SqlEvent {
                session_id: format!("s{}", s.group / 2),
                script_id: format!("q{}", s.group % 2),
                timestamp_ms: *t,
                kind: s.kind,
                sql_text: format!("SELECT {} -- g{}", s.text, s.group),
                error_message: (s.kind == EventKind::ExecuteError).then(|| "boom".to_string()),
            }
        })
        .collect();
    events.sort_by(|a, b| {
        (&a.session_id, &a.script_id, a.timestamp_ms).cmp(&(
            &b.session_id,
            &b.script_id,
            b.timestamp_ms,
        ))
    });
    events
}

proptest! {
    #[test]
    fn mined_pairs_stay_in_their_group(specs in event_specs()) {
        let events = events_from(&specs);
        let cfg = MiningConfig::default();
        let out = mine_pairs(&events, &cfg).unwrap();
        prop_assert_eq!(&mine_pairs(&events, &cfg).unwrap().pairs, &out.pairs);
        for p in &out.pairs {
            prop_assert!(p.validate().is_ok());
            let session = p.provenance["session_id"].as_str().unwrap();
            let script = p.provenance["script_id"].as_str().unwrap();
            let in_group = |sql: &str, kinds: &[EventKind]| events.iter().any(|e| {
                e.session_id == session && e.script_id == script && e.sql_text == sql && kinds.contains(&e.kind)
            });
            prop_assert!(in_group(&p.bug_sql, &[EventKind::ExecuteError]));
            prop_assert!(in_group(&p.correct_sql, &[EventKind::ExecuteSuccess, EventKind::SaveCode]));
            let t0 = p.provenance["error_ts_ms"].as_i64().unwrap();
            let t1 = p.provenance["fix_ts_ms"].as_i64().unwrap();
            prop_assert!(t0 <= t1);
            prop_assert!(t1 - t0 <= cfg.max_pair_window_ms);
        }
    }
}

fn filter_input() -> impl Strategy<Value = Vec<BugFixPair>> {
    prop::collection::vec((select_sql(), any::<u8>(), any::<bool>()), 0..12).prop_map(|v| {
        let mut pairs: Vec<BugFixPair> = v
            .iter()
            .map(|(sql, how, _)| BugFixPair {
                schema_ddl: vec![],
                bug_sql: bug_of(sql, *how),
                error_message: "e".into(),
                correct_sql: sql.clone(),
                source: PairSource::DiverseCollected,
                category: None,
                provenance: Map::new(),
            })
            .collect();
        let dups: Vec<BugFixPair> = v
            .iter()
            .zip(&pairs)
            .filter(|(t, _)| t.2)
            .map(|(_, p)| p.clone())
            .collect();
        pairs.extend(dups);
        pairs
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_partitions_and_is_idempotent(pairs in filter_input(), ratio in 0.05f64..=1.0) {
        let cfg = FilterConfig { max_diff_ratio: ratio, require_executor: true };
        let exec = SyntaxExecutor::new(Dialect::Spark);
        let out = filter_pairs(pairs.clone(), &cfg, &exec);
        prop_assert_eq!(out.kept.len() + out.rejected.len(), pairs.len());
        let mut rest = pairs.clone();
        for p in out.kept.iter().chain(out.rejected.iter().map(|r| &r.pair)) {
            let at = rest.iter().position(|q| q == p);
            prop_assert!(at.is_some());
            rest.remove(at.unwrap());
        }
        let again = filter_pairs(out.kept.clone(), &cfg, &exec);
        prop_assert_eq!(again.kept, out.kept);
        prop_assert!(again.rejected.is_empty());
    }

    #[test]
    fn generated_pairs_pass_the_filter(target in select_sql(), how in any::<u8>(), edit in any::<bool>(), ratio in 0.05f64..=1.0) {
        let error_sql = bug_of(&target, how);
        let correct_sql = if edit { target.replacen("SELECT", "SELECT DISTINCT", 1) } else { target.clone() };
        let result = GenResult { error_sql, correct_sql, reason: "r".into(), suitable: Suitable::Yes };
        let candidate = GenCandidate {
            target_sql: target,
            schema_ddl: vec![],
            category: CategoryPath::new("Syntax", "Token", "X").unwrap(),
            error_info: "x".into(),
            example: None,
        };
        let cfg = FilterConfig { max_diff_ratio: ratio, require_executor: true };
        let exec = SyntaxExecutor::new(Dialect::Spark);
        if let Ok(pair) = validate_generated(&result, &candidate, &exec, &cfg, "m") {
            let out = filter_pairs(vec![pair.clone()], &cfg, &exec);
            prop_assert_eq!(out.kept, vec![pair]);
        }
    }

    #[test]
    fn classify_is_total_and_pure(error in ".{0,60}", sql in ".{0,60}") {
        let text = std::fs::read_to_string(common::config("taxonomy.sample.toml")).unwrap();
        let t = Taxonomy::from_toml_str(&text).unwrap();
        let c = t.classify(&error, &sql);
        prop_assert_eq!(&t.classify(&error, &sql), &c);
        prop_assert!(c.is_unclassified() || t.contains(&c));
    }

    #[test]
    fn judge_is_reflexive_and_symmetric(a in select_sql(), b in select_sql()) {
        let case = |g: &str| EvalCase {
            id: "x".into(),
            schema_ddl: vec![],
            bug_sql: "SELEC 1".into(),
            error_message: "e".into(),
            ground_truths: vec![g.to_string()],
            category: CategoryPath::unclassified(),
        };
        prop_assert_eq!(judge(&a, &case(&a), Dialect::Spark).unwrap(), Verdict::Equivalent);
        let ab = judge(&a, &case(&b), Dialect::Spark).unwrap().is_equivalent();
        let ba = judge(&b, &case(&a), Dialect::Spark).unwrap().is_equivalent();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn judge_ignores_layout_case_and_comments(a in select_sql(), upper in any::<bool>(), sep in prop::sample::select(vec!["  ", "\n\t", " /* c */ ", " -- c\n"])) {
        let case = EvalCase {
            id: "x".into(),
            schema_ddl: vec![],
            bug_sql: "SELEC 1".into(),
            error_message: "e".into(),
            ground_truths: vec![a.clone()],
            category: CategoryPath::unclassified(),
        };
        let cased = if upper { a.to_uppercase() } else { a.to_lowercase() };
        let variant = cased.split_whitespace().collect::<Vec<_>>().join(sep);
        prop_assert_eq!(judge(&variant, &case, Dialect::Spark).unwrap(), Verdict::Equivalent);
    }
}
