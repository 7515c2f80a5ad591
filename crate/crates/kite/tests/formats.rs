use std::path::Path;

use kite::format::{decode, decode_csv, encode, encode_csv, read_features, write_features, FeatureFile, FormatError};
use kite::manifest::{load_manifest, load_targets, parse_score_table, score_table_csv, ManifestEntry, ModelManifest};
use kite::Error;
use kite_core::evaluation::AccuracyUnit;
use kite_core::{FeatureMatrix, LabelVector, Provenance};
use proptest::prelude::*;

const MINIMAL_HEX: &str = "4b4645410101000001000000000000000100000000000000000020400103000000";

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn minimal() -> FeatureFile {
    let f = FeatureMatrix::new(1, 1, vec![2.5], Provenance::Raw).unwrap();
    FeatureFile::new(f, Some(LabelVector::new(vec![3], 4).unwrap())).unwrap()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn finite_f32() -> impl Strategy<Value = f32> {
    prop_oneof![
        Just(0.0f32),
        Just(-0.0f32),
        Just(f32::MIN_POSITIVE),
        Just(-f32::MAX),
        Just(1e-45f32),
        any::<f32>().prop_filter("finite", |v| v.is_finite()),
    ]
}

fn feature_file() -> impl Strategy<Value = (usize, usize, Vec<f32>, Option<Vec<u32>>)> {
    (1usize..20, 1usize..8).prop_flat_map(|(n, d)| {
        (
            Just(n),
            Just(d),
            proptest::collection::vec(finite_f32(), n * d),
            proptest::option::of(proptest::collection::vec(0u32..50, n)),
        )
    })
}

fn build(n: usize, d: usize, v: &[f32], labels: &Option<Vec<u32>>) -> FeatureFile {
    let f = FeatureMatrix::new(n, d, v.iter().map(|&x| f64::from(x)).collect(), Provenance::Raw).unwrap();
    FeatureFile::new(f, labels.clone().map(|l| LabelVector::from_labels(l).unwrap())).unwrap()
}

fn bits(file: &FeatureFile) -> Vec<u32> {
    file.features.as_slice().iter().map(|&v| (v as f32).to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn binary_round_trip_is_bit_exact((n, d, v, l) in feature_file()) {
        let file = build(n, d, &v, &l);
        let back = decode(&encode(&file).unwrap()).unwrap();
        prop_assert_eq!(bits(&back), v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back, file);
    }

    #[test]
    fn csv_round_trip_is_bit_exact((n, d, v, l) in feature_file()) {
        let file = build(n, d, &v, &l);
        let back = decode_csv(&encode_csv(&file).unwrap()).unwrap();
        prop_assert_eq!(bits(&back), bits(&file));
        prop_assert_eq!(back.labels, file.labels);
    }

    #[test]
    fn truncation_is_detected((n, d, v, l) in feature_file(), cut in 0.0..1.0f64) {
        let bytes = encode(&build(n, d, &v, &l)).unwrap();
        let at = (cut * bytes.len() as f64) as usize;
        let is_truncated = matches!(decode(&bytes[..at]), Err(FormatError::TruncatedPayload { .. }));
        prop_assert!(is_truncated);
    }
}

#[test]
fn minimal_file_matches_golden_bytes() {
    let bytes = encode(&minimal()).unwrap();
    assert_eq!(hex(&bytes), MINIMAL_HEX);
    assert_eq!(bytes, std::fs::read(fixture("minimal.kfea")).unwrap());
    let read = read_features(&fixture("minimal.kfea")).unwrap();
    assert_eq!(read.features.as_slice(), &[2.5]);
    assert_eq!(read.labels.unwrap().as_slice(), &[3]);
}

#[test]
fn unlabelled_file_has_zero_flag() {
    let f = FeatureMatrix::new(1, 2, vec![1.0, -0.0], Provenance::Raw).unwrap();
    let bytes = encode(&FeatureFile::new(f, None).unwrap()).unwrap();
    assert_eq!(bytes.len(), 24 + 8 + 1);
    assert_eq!(*bytes.last().unwrap(), 0);
    assert_eq!(decode(&bytes).unwrap().features.as_slice()[1].to_bits(), (-0.0f64).to_bits());
}

#[test]
fn truncated_payload() {
    let bytes = encode(&minimal()).unwrap();
    assert_eq!(decode(&bytes[..26]), Err(FormatError::TruncatedPayload { expected: 28, found: 26 }));
}

#[test]
fn corrupt_sizes_do_not_allocate() {
    let mut bytes = encode(&minimal()).unwrap();
    bytes[8..16].copy_from_slice(&(1u64 << 40).to_le_bytes());
    bytes[16..24].copy_from_slice(&(1u64 << 20).to_le_bytes());
    assert!(matches!(decode(&bytes), Err(FormatError::TruncatedPayload { .. })));
    bytes[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(matches!(decode(&bytes), Err(FormatError::Malformed(_))));
}

#[test]
fn non_finite_values_are_rejected() {
    let mut bytes = encode(&minimal()).unwrap();
    bytes[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
    assert_eq!(decode(&bytes), Err(FormatError::NonFiniteValue { row: 0, col: 0 }));
    let f = FeatureMatrix::new(1, 1, vec![1e300], Provenance::Raw).unwrap();
    assert!(matches!(encode(&FeatureFile::new(f, None).unwrap()), Err(FormatError::NonFiniteValue { .. })));
}

#[test]
fn bad_header_fields() {
    let mut b = encode(&minimal()).unwrap();
    b[0..4].copy_from_slice(b"NOPE");
    assert!(matches!(decode(&b), Err(FormatError::BadMagic(_))));
    let mut b = encode(&minimal()).unwrap();
    b[5] = 2;
    assert_eq!(decode(&b), Err(FormatError::UnsupportedDtype(2)));
    let mut b = encode(&minimal()).unwrap();
    b[28] = 7;
    assert!(matches!(decode(&b), Err(FormatError::Malformed(_))));
}

#[test]
fn files_on_disk_pick_layout_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.kfea", "a.csv"] {
        let p = dir.path().join(name);
        write_features(&p, &minimal()).unwrap();
        assert_eq!(read_features(&p).unwrap(), minimal());
    }
    let text = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(text, "label,f0\n3,2.5\n");
    let err = read_features(&dir.path().join("missing.kfea")).unwrap_err();
    assert_eq!(err.exit_code(), kite::exit::CONFIG);
}

#[test]
fn golden_manifest_fixture() {
    let m = load_manifest(&fixture("manifest3.json")).unwrap();
    let expected = vec![
        ManifestEntry {
            architecture: Some("resnet".into()),
            layers: Some(50),
            source_name: Some("imagenet".into()),
            source_size: Some(1_281_167),
            ..ManifestEntry::new("resnet50", "features/resnet50/{target}.kfea")
        },
        ManifestEntry {
            architecture: Some("densenet".into()),
            layers: Some(121),
            source_name: Some("imagenet".into()),
            source_size: Some(1_281_167),
            ..ManifestEntry::new("densenet121", "features/densenet121/{target}.kfea")
        },
        ManifestEntry {
            architecture: Some("mobilenet".into()),
            layers: Some(53),
            ..ManifestEntry::new("mobilenet_v2", "features/mobilenet_v2/{target}.kfea")
        },
    ];
    assert_eq!(m.models, expected);
    assert_eq!(m.base_dir, fixture(""));
    assert_eq!(m.to_json(), std::fs::read_to_string(fixture("manifest3.json")).unwrap());
    assert_eq!(m.feature_path(&m.models[0], "cifar10"), fixture("features/resnet50/cifar10.kfea"));
    assert_eq!(m.models[0].meta(500).unwrap().source_size, 1_281_167);
    assert!(m.models[2].meta(500).is_none());
}

#[test]
fn manifest_errors() {
    let e = ManifestEntry::new("a", "a/{target}.kfea");
    assert!(matches!(ModelManifest::new(vec![e.clone(), e], "."), Err(Error::DuplicateModelId(id)) if id == "a"));
    assert!(matches!(ModelManifest::new(vec![], "."), Err(Error::Schema(_))));

    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let p = write("dup.json", r#"{"models": [{"model_id": "a", "feature_file": "x/{target}"}, {"model_id": "a", "feature_file": "y/{target}"}]}"#);
    assert!(matches!(load_manifest(&p), Err(Error::DuplicateModelId(_))));
    let p = write("empty.json", r#"{"models": []}"#);
    assert!(matches!(load_manifest(&p), Err(Error::Schema(_))));
    let p = write("missing.json", r#"{"models": [{"model_id": "a", "feature_file": "nope.kfea"}]}"#);
    assert!(matches!(load_manifest(&p), Err(Error::MissingFile(_))));
    let p = write("typo.json", r#"{"models": [{"model_id": "a", "featurefile": "x/{target}"}]}"#);
    assert!(matches!(load_manifest(&p), Err(Error::Schema(_))));
    assert!(matches!(load_manifest(&dir.path().join("absent.json")), Err(Error::MissingFile(_))));
    let p = write("targets.json", r#"{"targets": [{"target_id": "t", "feature_file": "t.kfea"}]}"#);
    assert!(matches!(load_targets(&p), Err(Error::MissingFile(_))));
}

#[test]
fn ground_truth_tables() {
    let t = parse_score_table("model_id,target_id,accuracy\na,t,0.5\nb,t,0.75\n").unwrap();
    assert_eq!(t.unit(), AccuracyUnit::Fraction);
    assert_eq!(t.rows().len(), 2);
    assert_eq!(score_table_csv(&t), "model_id,target_id,accuracy\na,t,0.5\nb,t,0.75\n");
    let t = parse_score_table("model_id,target_id,accuracy_percent\na,t,87.5\n").unwrap();
    assert_eq!(t.unit(), AccuracyUnit::Percent);
    for bad in [
        "model,target,acc\na,t,0.5\n",
        "model_id,target_id,accuracy\na,t,87.5\n",
        "model_id,target_id,accuracy\na,t,x\n",
        "model_id,target_id,accuracy\na,t,0.5\na,t,0.6\n",
    ] {
        assert!(matches!(parse_score_table(bad), Err(Error::Schema(_))), "{bad}");
    }
}
