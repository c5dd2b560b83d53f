mod common;

use rotguard::rotation::rotate;

#[test]
fn quarter_turns_round_trip_exactly_on_digits() {
    let Some(test) = common::test_set() else { return };
    for img in test.images().iter().take(20) {
        assert_eq!(&rotate(&rotate(img, 90.0), -90.0), img);
    }
}

#[test]
fn rotation_preserves_rough_mass() {
    let Some(test) = common::test_set() else { return };
    for img in test.images().iter().take(20) {
        let before: f64 = img.pixels().iter().sum();
        let after: f64 = rotate(img, 45.0).pixels().iter().sum();
        assert!((before - after).abs() / before < 0.1, "{before} vs {after}");
    }
}
