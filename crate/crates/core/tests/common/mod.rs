#![allow(dead_code)]

use std::path::PathBuf;

use rotguard::mnist::{load_test, LabeledDataset, MnistFiles};

/// `MNIST_DIR`, or `data/mnist` at the workspace root.
pub fn data_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

pub fn have_data() -> bool {
    let files = MnistFiles::default();
    let dir = data_dir();
    [
        files.train_images,
        files.train_labels,
        files.test_images,
        files.test_labels,
    ]
    .iter()
    .all(|f| dir.join(f).is_file())
}

/// Test set, or `None` (with a note on stderr) when the files are absent.
pub fn test_set() -> Option<LabeledDataset> {
    if !have_data() {
        eprintln!("MNIST files not found under {}; skipping", data_dir().display());
        return None;
    }
    Some(load_test(&data_dir(), &MnistFiles::default()).expect("test set loads"))
}
