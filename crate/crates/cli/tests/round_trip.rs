use std::path::Path;

use invfilter_cli::scenario::{
    BoxSpec, ControllerKind, NominalSpec, PolySpec, SystemParams, SystemSpec, TableEntry, TermSpec,
};
use invfilter_cli::ScenarioFile;
use invfilter_core::sim::benchmarks::cbf_1d;
use invfilter_core::sim::simulate;
use proptest::prelude::*;

fn examples() -> Vec<std::path::PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
}

fn csv_of(file: &ScenarioFile) -> String {
    simulate(&file.build().unwrap().scenario).unwrap().log.to_csv_string()
}

#[test]
fn bundled_examples_round_trip() {
    let files = examples();
    assert!(files.len() >= 8);
    for path in files {
        let parsed = ScenarioFile::load(&path).unwrap();
        let again = ScenarioFile::from_json(&parsed.to_json()).unwrap();
        assert_eq!(parsed, again, "{}", path.display());
    }
}

#[test]
fn reserialized_scenario_gives_identical_csv() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/cbf_1d.json");
    let parsed = ScenarioFile::load(&path).unwrap();
    let again = ScenarioFile::from_json(&parsed.to_json()).unwrap();
    assert_eq!(csv_of(&parsed), csv_of(&again));
}

#[test]
fn cbf_1d_file_matches_library_benchmark() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/cbf_1d.json");
    let parsed = ScenarioFile::load(&path).unwrap();
    let reference = simulate(&cbf_1d(1.0, 1e-3)).unwrap().log.to_csv_string();
    assert_eq!(csv_of(&parsed), reference);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/table1_mission.json");
    let parsed = ScenarioFile::load(&path).unwrap();
    assert_eq!(csv_of(&parsed), csv_of(&parsed));
}

#[test]
fn wrong_direction_infinity_is_rejected() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/saturating_1d.json");
    let mut parsed = ScenarioFile::load(&path).unwrap();
    parsed.table[0][0] = TableEntry::NegInf;
    let err = parsed.build().unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("table[0][0]"), "{err}");
}

#[test]
fn table_shape_must_match_objectives() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/saturating_1d.json");
    let mut parsed = ScenarioFile::load(&path).unwrap();
    parsed.table.push(vec![TableEntry::Open, TableEntry::Finite(1.0)]);
    assert!(parsed
        .build()
        .unwrap_err()
        .to_string()
        .contains("2 rows for 1 objectives"));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, any::<f64>().prop_filter("finite", |v| v.is_finite())]
}

fn entry() -> impl Strategy<Value = TableEntry> {
    prop_oneof![
        finite().prop_map(TableEntry::Finite),
        Just(TableEntry::PosInf),
        Just(TableEntry::NegInf),
        Just(TableEntry::Open),
    ]
}

proptest! {
    #[test]
    fn numeric_fields_survive_round_trip(
        coeffs in prop::collection::vec(finite(), 1..4),
        k in finite(),
        x0 in prop::collection::vec(finite(), 1..3),
        dt in finite(),
        lower in finite(),
        table in prop::collection::vec(entry(), 1..5),
        seed in any::<u64>(),
        wind in prop::option::of((finite(), finite())),
    ) {
        let file = ScenarioFile {
            system: SystemSpec {
                name: "unicycle_linearized".into(),
                params: SystemParams { wind: wind.map(|(a, b)| [a, b]) },
            },
            controller: ControllerKind::Bclf,
            barrier: Some(PolySpec {
                terms: coeffs.iter().map(|&c| TermSpec { coeff: c, powers: vec![1, 2] }).collect(),
            }),
            objectives: Vec::new(),
            table: vec![table],
            k,
            epsilon: dt.abs(),
            x0: x0.clone(),
            dt,
            horizon: dt * 7.0,
            control_box: BoxSpec { lower: vec![lower], upper: vec![lower.abs()] },
            domain: BoxSpec { lower: x0.clone(), upper: x0 },
            nominal: NominalSpec::Constant(coeffs),
            seed,
            equivalence: None,
        };
        let text = file.to_json();
        let again = ScenarioFile::from_json(&text).unwrap();
        prop_assert_eq!(&again, &file);
        prop_assert_eq!(again.to_json(), text);
    }
}
