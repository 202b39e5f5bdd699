use std::fs;

use qc50_core::builder::{train, BuildConfig};
use qc50_core::dataset::{load_csv, AttributeSchema};
use qc50_core::error::Error;
use qc50_core::model::{from_json, to_json};

const SCHEMA: &str = "# toy\nx,real\nk,discrete,3\n";
const CSV: &str = "x,k,class\n0.5,1,no\n1.5,2,yes\n2.5,3,yes\n0.25,1,no\n";

#[test]
fn train_from_files_and_reload_model() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.schema"), SCHEMA).unwrap();
    fs::write(dir.path().join("d.csv"), CSV).unwrap();
    let schema = AttributeSchema::load(dir.path().join("d.schema")).unwrap();
    let data = load_csv(dir.path().join("d.csv"), &schema).unwrap();
    assert_eq!(data.schema().class_labels(), ["no", "yes"]);

    let tree = train(&data, &BuildConfig::default()).unwrap();
    let path = dir.path().join("m.json");
    fs::write(&path, to_json(&tree)).unwrap();
    let back = from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.root, tree.root);
    for i in 0..data.len() {
        assert_eq!(back.classify(&data.row(i)).unwrap(), data.label(i));
    }
}

#[test]
fn missing_file_names_the_path() {
    let schema = AttributeSchema::parse(SCHEMA).unwrap();
    let err = load_csv("/nonexistent/data.csv", &schema).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/data.csv"));
}

#[test]
fn out_of_domain_value_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x,k,class\n0.5,4,no\n").unwrap();
    let schema = AttributeSchema::parse(SCHEMA).unwrap();
    assert!(load_csv(&path, &schema).is_err());
}
