use bergman_dpp::statistics::TestFunctionSpec;
use bergman_dpp_cli::{parse_config, render, ExperimentConfig, ExperimentKind, ModelChoice};
use proptest::prelude::*;

fn spec() -> impl Strategy<Value = TestFunctionSpec> {
    prop_oneof![
        (0.01..1.0f64, 0.01..1.0f64).prop_map(|(a, d)| TestFunctionSpec::RadialBump { a, b: a + d }),
        (1u32..5, 0.05..2.0f64).prop_map(|(k, cutoff)| TestFunctionSpec::AngularMode { k, cutoff }),
        (-1.0..1.0f64, -1.0..1.0f64, 0.01..0.5f64)
            .prop_map(|(cx, cy, width)| TestFunctionSpec::GaussianBump { cx, cy, width }),
        (0.01..10.0f64).prop_map(|r| TestFunctionSpec::ConstantCapped { r }),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    let kind = prop::sample::select(ExperimentKind::ALL.to_vec());
    let model = prop::sample::select(vec![ModelChoice::Plane, ModelChoice::Sphere]);
    let p_set = prop::collection::btree_set(1u32..5000, 1..6);
    (
        (kind, model, p_set, any::<u64>(), spec()),
        (2usize..100_000, any::<bool>(), 4usize..512, 0.1..20.0f64, 2usize..1000, "[a-z0-9_./-]{1,24}"),
    )
        .prop_map(|((kind, model, ps, seed, f), (n, half, ang, panels, points, dir))| {
            let scale = if model == ModelChoice::Sphere { 2 } else { 1 };
            let mut cfg = ExperimentConfig::new(kind, model, ps.into_iter().map(|p| p * scale).collect(), seed);
            cfg.test_function = f;
            cfg.n_samples = n;
            cfg.boundary_factor = if half { 0.5 } else { 1.0 };
            cfg.n_angular = 2 * ang;
            cfg.panels_per_scale = panels;
            cfg.profile_points = points;
            cfg.output_dir = dir;
            cfg
        })
}

const KEYS: [&str; 12] = [
    "kind",
    "model",
    "p_list",
    "seed",
    "test_function",
    "n_samples",
    "boundary_factor",
    "n_angular",
    "panels_per_scale",
    "profile_points",
    "output_dir",
    "bogus",
];

const VALUES: [&str; 22] = [
    "",
    "lln",
    "plane",
    "sphere",
    "100,200",
    "200,100",
    "3",
    "-1",
    "1e400",
    "NaN",
    "0.5",
    "radial_bump(0.1,0.45)",
    "radial_bump(0.5,0.1)",
    "angular_mode(0,1)",
    "gaussian_bump(1,2",
    "constant_capped()",
    "18446744073709551616",
    "out#dir",
    "=",
    "1,,2",
    "clt_variance",
    "\u{1F600}",
];

/// Every diagnostic must point at an existing line or the whole file.
fn check_diagnostics(text: &str) -> Result<(), TestCaseError> {
    if let Err(errs) = parse_config(text) {
        prop_assert!(!errs.is_empty());
        let n_lines = text.lines().count();
        for e in &errs {
            prop_assert!(e.line <= n_lines, "{e} beyond {n_lines} lines");
            prop_assert!(!e.message.is_empty());
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn render_then_parse_is_identity(cfg in config()) {
        let text = render(&cfg);
        prop_assert_eq!(parse_config(&text), Ok(cfg));
    }

    #[test]
    fn arbitrary_text_never_panics(text in "(?s).{0,400}") {
        check_diagnostics(&text)?;
    }

    #[test]
    fn key_value_soup_never_panics(
        lines in prop::collection::vec((prop::sample::select(KEYS.to_vec()), prop::sample::select(VALUES.to_vec()), 0u8..4), 0..16)
    ) {
        let text: String = lines
            .iter()
            .map(|(k, v, form)| match form {
                0 => format!("{k} = {v}\n"),
                1 => format!("{k}={v} # note\n"),
                2 => format!("# {k} = {v}\n"),
                _ => format!("{k} {v}\n"),
            })
            .collect();
        check_diagnostics(&text)?;
    }
}

#[test]
fn fuzz_corpus_yields_diagnostics() {
    let corpus = [
        "",
        "\n\n# only comments\n",
        "=",
        "= =",
        "kind",
        "kind =",
        "kind = = lln",
        "kind = lln\nkind = lln\n",
        "kind = lln\nmodel = plane\np_list =\nseed = 1\n",
        "kind = lln\nmodel = plane\np_list = ,\nseed = 1\n",
        "kind = lln\nmodel = plane\np_list = 4294967296\nseed = 1\n",
        "kind = lln\nmodel = plane\np_list = 0\nseed = 1\n",
        "kind = lln\nmodel = plane\np_list = 5\nseed = 1\nn_samples = 0\n",
        "kind = lln\nmodel = plane\np_list = 5\nseed = 1\nn_angular = 7\n",
        "kind = lln\nmodel = plane\np_list = 5\nseed = 1\npanels_per_scale = inf\n",
        "kind = lln\nmodel = plane\np_list = 5\nseed = 1\ntest_function = radial_bump(1)\n",
        "kind = lln\nmodel = plane\np_list = 5\nseed = 1\ntest_function = nope(1)\n",
        "kind = lln\nmodel = plane\np_list = 5\nseed = 1\ntest_function = radial_bump(1,2,3)\n",
        "kind = lln\nmodel = plane\np_list = 5\nseed = 1\ntest_function = radial_bump(\n",
        "kind = lln\nmodel = plane\np_list = 5\nseed = 1\noutput_dir = \n",
        "\u{feff}kind = lln\n",
        "kind\u{0} = lln\n",
        "kind = lln\r\nmodel = plane\r\np_list = 5\r\nseed = x\r\n",
        "seed = 99999999999999999999999999\n",
    ];
    for text in corpus {
        let errs = parse_config(text).expect_err(text);
        assert!(!errs.is_empty(), "{text:?}");
        for e in &errs {
            assert!(e.line <= text.lines().count(), "{text:?}: {e}");
        }
    }
}

#[test]
fn windows_line_endings_are_accepted() {
    let cfg = parse_config("kind = lln\r\nmodel = plane\r\np_list = 5\r\nseed = 3\r\n").unwrap();
    assert_eq!(cfg.seed, 3);
}
