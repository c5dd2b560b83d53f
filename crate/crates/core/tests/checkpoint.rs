mod common;

use rotguard::model::{load_checkpoint, save_checkpoint, Model, CHECKPOINT_MAGIC};
use rotguard::Error;

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ckpt");
    let b = dir.path().join("b.ckpt");
    let model = Model::new(77);
    save_checkpoint(&model, &a).unwrap();
    let loaded = load_checkpoint(&a).unwrap();
    save_checkpoint(&loaded, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(loaded, model);
}

#[test]
fn loaded_model_predicts_identically() {
    let Some(test) = common::test_set() else { return };
    let model = Model::new(78);
    let loaded = Model::from_checkpoint_bytes(&model.to_checkpoint_bytes()).unwrap();
    for img in test.images().iter().step_by(100) {
        assert_eq!(model.predict_proba(img).unwrap(), loaded.predict_proba(img).unwrap());
    }
}

#[test]
fn corrupt_checkpoints_are_classified() {
    let bytes = Model::new(1).to_checkpoint_bytes();
    let mut version = bytes.clone();
    version[CHECKPOINT_MAGIC.len() + 3] ^= 1;
    assert!(matches!(Model::from_checkpoint_bytes(&version), Err(Error::Format(_))));
    let mut fingerprint = bytes.clone();
    fingerprint[CHECKPOINT_MAGIC.len() + 4] ^= 1;
    assert!(matches!(
        Model::from_checkpoint_bytes(&fingerprint),
        Err(Error::Architecture)
    ));
    assert!(matches!(
        Model::from_checkpoint_bytes(&bytes[..bytes.len() - 3]),
        Err(Error::Truncated { .. })
    ));
}
