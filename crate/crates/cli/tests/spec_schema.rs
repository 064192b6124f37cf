use std::path::PathBuf;

use radon_weights::systems::{flat_quartic, loomis_whitney, moment_translation, moment_xray, parabola, repeated_curve};
use radon_weights_cli::spec::{parse_tolerances_str, Input};
use radon_weights_cli::{emit_spec, parse_spec, parse_spec_str};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

const FIXTURES: &[&str] =
    &["parabola.spec", "twisted_cubic.spec", "xray.spec", "loomis_whitney.spec", "remark.spec", "t4.spec"];

#[test]
fn fixtures_build_the_library_systems() {
    let cases = [
        ("parabola.spec", parabola().unwrap()),
        ("twisted_cubic.spec", moment_translation(3).unwrap()),
        ("xray.spec", moment_xray(3).unwrap()),
        ("loomis_whitney.spec", loomis_whitney(3).unwrap()),
        ("remark.spec", repeated_curve(3).unwrap()),
        ("t4.spec", flat_quartic().unwrap()),
    ];
    for (file, expected) in cases {
        let sys = parse_spec(&fixture(file)).unwrap().system().unwrap();
        assert_eq!(sys.fields(), expected.fields(), "{file}");
        assert_eq!(sys.closed_form_extremes, expected.closed_form_extremes, "{file}");
    }
}

#[test]
fn emitted_specs_parse_back() {
    for file in FIXTURES {
        let spec = parse_spec(&fixture(file)).unwrap();
        let text = emit_spec(&spec);
        assert_eq!(parse_spec_str(&text).unwrap(), spec, "{file}");
        assert_eq!(emit_spec(&parse_spec_str(&text).unwrap()), text);
    }
}

const MINIMAL: &str = r#"
dimension = 2
mode = "fields"
[[fields]]
components = [[{ exp = [0, 0], coef = "1" }], []]
[[fields]]
components = [[], [{ exp = [1, 0], coef = "1/2" }]]
"#;

#[test]
fn minimal_spec_fills_defaults() {
    let spec = parse_spec_str(MINIMAL).unwrap();
    assert_eq!(spec.k, 2);
    assert_eq!(spec.seed, 0);
    assert!(matches!(spec.input, Input::Fields(ref f) if f.len() == 2));
    assert_eq!(spec.system().unwrap().dim(), 2);
}

fn errors(text: &str) -> Vec<(String, String)> {
    parse_spec_str(text).unwrap_err().0.into_iter().map(|e| (e.path, e.message)).collect()
}

#[test]
fn single_map_is_rejected() {
    let text = r#"
dimension = 2
mode = "submersions"
[[submersions]]
components = [[{ exp = [1, 0], coef = "1" }]]
"#;
    let errs = errors(text);
    assert!(errs.iter().any(|(p, m)| p == "k" && m.contains("at least two")), "{errs:?}");
}

#[test]
fn float_literal_names_the_field() {
    let text = MINIMAL.replace("coef = \"1/2\"", "coef = 0.5");
    let errs = errors(&text);
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert_eq!(errs[0].0, "fields[1].components[1][0].coef");
    assert!(errs[0].1.contains("float"));
}

#[test]
fn unknown_keys_and_mismatches_are_located() {
    let text = format!("base_point = [\"1\"]\nfoo = 1\n{MINIMAL}\n[sweep]\ndeltas = [\"1/2\"]\nball = [[1], [3]]\nbar = 2\n");
    let errs = errors(&text);
    let paths: Vec<&str> = errs.iter().map(|e| e.0.as_str()).collect();
    assert!(paths.contains(&"foo"), "{errs:?}");
    assert!(paths.contains(&"sweep.bar"), "{errs:?}");
    assert!(paths.contains(&"base_point"), "{errs:?}");
    assert!(paths.contains(&"sweep.ball[1][0]"), "{errs:?}");
}

#[test]
fn component_counts_are_checked() {
    let text = MINIMAL.replacen("components = [[{ exp = [0, 0], coef = \"1\" }], []]", "components = [[]]", 1);
    let errs = errors(&text);
    assert!(errs.iter().any(|(p, m)| p == "fields[0].components" && m.contains("2 components")), "{errs:?}");
    let text = MINIMAL.replace("exp = [1, 0]", "exp = [1]");
    assert!(errors(&text).iter().any(|(p, _)| p == "fields[1].components[1][0].exp"));
}

#[test]
fn decimal_strings_are_not_rationals() {
    let text = MINIMAL.replace("\"1/2\"", "\"0.5\"");
    assert_eq!(errors(&text)[0].0, "fields[1].components[1][0].coef");
}

#[test]
fn tolerance_files() {
    let tol = parse_tolerances_str("band_factor = 3.0\nbounded_slope = 0.05\n").unwrap();
    assert_eq!(tol.band_factor, 3.0);
    assert_eq!(tol.trend_slope, 0.1);
    assert!(parse_tolerances_str("band = 3.0").is_err());
    assert!(parse_tolerances_str("band_factor = \"3\"").is_err());
}

mod roundtrip {
    use proptest::prelude::*;
    use radon_weights::poly::Polynomial;
    use radon_weights::Rational;
    use radon_weights_cli::spec::Input;
    use radon_weights_cli::{emit_spec, parse_spec_str, ProblemSpec};

    fn rational() -> impl Strategy<Value = Rational> {
        (-50i64..50, 1i64..20).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
    }

    fn poly(d: usize) -> impl Strategy<Value = Polynomial<Rational>> {
        prop::collection::vec((prop::collection::vec(0u32..4, d), rational()), 0..4)
            .prop_map(move |terms| Polynomial::from_terms(d, terms).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn parse_inverts_emit(
            fields in prop::collection::vec(prop::collection::vec(poly(2), 2), 2..4),
            base in prop::collection::vec(rational(), 2),
            seed in any::<u32>(),
            band in 1.0f64..10.0,
        ) {
            let k = fields.len();
            let mut spec = parse_spec_str("dimension = 2\nmode = \"fields\"\n[[fields]]\ncomponents = [[], []]\n[[fields]]\ncomponents = [[], []]\n").unwrap();
            spec.k = k;
            spec.input = Input::Fields(fields);
            spec.base_point = Some(base);
            spec.seed = seed as u64;
            spec.b0 = Some(vec![1; k]);
            spec.tolerances.band_factor = band;
            let back: ProblemSpec = parse_spec_str(&emit_spec(&spec)).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
