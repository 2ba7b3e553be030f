mod common;

use proptest::prelude::*;

use retriage::frontend::ast::{Block, Expr, SourceUnit, Stmt};
use retriage::frontend::lexer::token_texts;
use retriage::frontend::render::{expr_text, stmt_text};
use retriage::frontend::{parse_bytes, parse_source, ParseError, ParseOptions};

fn tokens(text: &str) -> Vec<String> {
    token_texts(text).into_iter().map(|(_, t)| t).collect()
}

fn bodies(unit: &SourceUnit) -> Vec<&Block> {
    let mut out = Vec::new();
    for c in &unit.contracts {
        out.extend(c.functions.iter().filter_map(|f| f.body.as_ref()));
        out.extend(c.modifiers.iter().map(|m| &m.body));
    }
    out
}

/// Every statement and expression whose span text lexes differently from
/// its reconstruction.
fn span_mismatches(src: &str, unit: &SourceUnit) -> Vec<String> {
    let slice = |start: u32, end: u32| &src[start as usize..end as usize];
    let mut bad = Vec::new();
    for body in bodies(unit) {
        body.walk(&mut |s: &Stmt| {
            let (orig, rebuilt) = (tokens(slice(s.span.start, s.span.end)), tokens(&stmt_text(s)));
            if orig != rebuilt {
                bad.push(format!("stmt at line {}: {orig:?} vs {rebuilt:?}", s.span.line));
            }
        });
        body.walk_exprs(&mut |e: &Expr| {
            let (orig, rebuilt) = (tokens(slice(e.span.start, e.span.end)), tokens(&expr_text(e)));
            if orig != rebuilt {
                bad.push(format!("expr at line {}: {orig:?} vs {rebuilt:?}", e.span.line));
            }
        });
    }
    bad
}

fn all_corpus_sources() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for f in common::canonical_files().into_iter().chain(common::derived_files()) {
        if let Ok(text) = String::from_utf8(f.bytes) {
            out.push((f.name, text));
        }
    }
    out
}

#[test]
fn corpus_spans_round_trip() {
    for (name, src) in all_corpus_sources() {
        let Ok(unit) = parse_source(&src, &name) else { continue };
        let bad = span_mismatches(&src, &unit);
        assert!(bad.is_empty(), "{name}: {bad:?}");
    }
}

#[test]
fn reference_files_parse_without_fatal_errors() {
    for f in common::canonical_files() {
        let unit = parse_bytes(&f.bytes, &f.name, &ParseOptions::default()).unwrap_or_else(|e| panic!("{}: {e}", f.name));
        assert!(!unit.contracts.is_empty(), "{}", f.name);
    }
}

#[test]
fn parsing_is_deterministic() {
    for (name, src) in all_corpus_sources() {
        let (a, b) = (parse_source(&src, &name), parse_source(&src, &name));
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn broken_corpus_file_is_fatal() {
    let src = std::fs::read_to_string(common::corpus_dir("derived").join("broken.sol")).unwrap();
    assert!(matches!(parse_source(&src, "broken.sol"), Err(ParseError::FatalSyntax { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_spans_round_trip(seed in any::<u64>()) {
        let src = common::oracle::random_contract(seed);
        let unit = parse_source(&src, "r.sol").expect("generated source parses");
        let bad = span_mismatches(&src, &unit);
        prop_assert!(bad.is_empty(), "{:?}\n{}", bad, src);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,400}") {
        let _ = parse_source(&text, "fuzz.sol");
    }

    #[test]
    fn token_soup_never_panics(
        toks in prop::collection::vec(
            prop::sample::select(vec![
                "contract", "C", "{", "}", "(", ")", "function", "f", "public", "if", "else", "while",
                "a", ".", "call", "value", ";", "=", "require", "msg", "sender", "modifier", "_", ",",
                "returns", "uint", "mapping", "=>", "[", "]", "1", "\"x\"", "assembly", "try", "catch",
            ]),
            0..120,
        )
    ) {
        let text = toks.join(" ");
        let _ = parse_source(&text, "soup.sol");
    }
}
