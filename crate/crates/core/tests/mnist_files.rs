mod common;

use rotguard::mnist::{load_train_file, split_train_validation, MnistFiles, TRAIN_LEN, VALIDATION_LEN};

#[test]
fn test_file_shape_and_labels() {
    let Some(test) = common::test_set() else { return };
    assert_eq!(test.len(), 10_000);
    assert_eq!(test.labels()[0], 7);
    let mut seen = [false; 10];
    for &l in test.labels() {
        seen[l as usize] = true;
    }
    assert!(seen.iter().all(|&s| s));
    assert!(test
        .images()
        .iter()
        .all(|img| img.pixels().iter().all(|p| (0.0..=1.0).contains(p))));
}

#[test]
fn train_split_sizes_are_seeded() {
    if !common::have_data() {
        return;
    }
    let full = load_train_file(&common::data_dir(), &MnistFiles::default()).unwrap();
    let (train, val) = split_train_validation(full.clone(), 42).unwrap();
    assert_eq!((train.len(), val.len()), (TRAIN_LEN, VALIDATION_LEN));
    let (train2, _) = split_train_validation(full, 42).unwrap();
    assert_eq!(train.labels(), train2.labels());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = rotguard::mnist::load_test(std::path::Path::new("/nonexistent"), &MnistFiles::default()).unwrap_err();
    assert!(matches!(err, rotguard::Error::Io { .. }), "{err}");
}
