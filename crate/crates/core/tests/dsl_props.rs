mod common;

use proptest::prelude::*;
use refform_core::dsl::{emit, parse, ParseError};

fn span_inside(err: &ParseError, text: &str) -> bool {
    err.span.start <= err.span.end
        && err.span.end <= text.len()
        && text.is_char_boundary(err.span.start)
        && text.is_char_boundary(err.span.end)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn emit_then_parse_is_identity(c in common::circuit(common::WIDE)) {
        let text = emit(&c);
        let back = parse(&text).map_err(|e| TestCaseError::fail(e.render(&text)))?;
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(emit(&back), text);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let text = String::from_utf8_lossy(&bytes);
        if let Err(e) = parse(&text) {
            prop_assert!(span_inside(&e, &text), "{:?}", e);
            prop_assert!(!e.message.is_empty());
        }
    }

    #[test]
    fn mangled_circuits_report_spans(
        c in common::circuit(common::WIDE),
        cut in any::<prop::sample::Index>(),
        len in 0usize..12,
        junk in "[{}\\[\\];,a-z0-9 #@]{0,4}",
    ) {
        let text = emit(&c);
        let mut start = cut.index(text.len() + 1);
        while !text.is_char_boundary(start) {
            start -= 1;
        }
        let mut end = (start + len).min(text.len());
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        let mangled = format!("{}{}{}", &text[..start], junk, &text[end..]);
        match parse(&mangled) {
            Ok(parsed) => prop_assert!(parsed.validate().is_ok()),
            Err(e) => {
                prop_assert!(span_inside(&e, &mangled), "{:?}", e);
                let rendered = e.render(&mangled);
                prop_assert!(rendered.contains(':'));
            }
        }
    }
}

#[test]
fn malformed_fixtures() {
    let cases = [
        ("circuit a { input I; output from {G}; }", "unknown identifier G"),
        ("circuit a { input I; input I; output from {I}; }", "I"),
        ("circuit a { input I; clock c free; clock c free; output from {I}; }", "c"),
        ("circuit a { input I; control s; output select s { {I} }; ff F clock c from {I}; }", ""),
        ("circuit a { input I; $ }", ""),
        ("circuit a { input I; output from {I} }", ""),
        ("circuit a { input I; clock c period 0 offset 0; output from {I}; }", ""),
        ("circuit a { input I; clock c period 2 offset 5; output from {I}; }", ""),
        ("circuit a { output from {}; }", ""),
        ("circuit { }", ""),
        ("", ""),
        ("circuit a { input I; output from {I}; } trailing", ""),
        ("circuit a { input ff; output from {ff}; }", ""),
        ("circuit a { input I; output from {I}; output from {I}; }", ""),
        ("circuit a { input I; clock c period 99999999999999999999999 offset 0; output from {I}; }", ""),
    ];
    for (text, needle) in cases {
        let err = parse(text).expect_err(text);
        assert!(span_inside(&err, text), "{text}: {err:?}");
        assert!(err.message.contains(needle), "{text}: {}", err.message);
    }
}
