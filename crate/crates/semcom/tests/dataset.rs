use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use semcom::dataset::{load_dataset, LoadOptions};
use semcom::synth::{generate_corpus, SynthSpec};
use semcom::HarnessError;
use semcom_core::data::{ClassLabel, SplitKind};

fn small() -> LoadOptions {
    LoadOptions {
        size: (8, 8),
        resize: false,
        per_class_limit: None,
    }
}

/// Pixel `(x, y)` of fixture `k` has channel values `(k*20 + x, y*30, 255 - x*y)`.
fn fixture_pixel(k: u32, x: u32, y: u32) -> [u8; 3] {
    [(k * 20 + x) as u8, (y * 30) as u8, (255 - x * y) as u8]
}

fn write_fixture(root: &Path, n: u32) {
    for k in 0..n {
        let label = ClassLabel::ALL[(k % 5) as usize];
        let dir = root.join("train").join(label.dir_name());
        fs::create_dir_all(&dir).unwrap();
        let img = RgbImage::from_fn(8, 8, |x, y| Rgb(fixture_pixel(k, x, y)));
        img.save(dir.join(format!("img{k:02}.png"))).unwrap();
    }
}

#[test]
fn ten_image_fixture_decodes_to_known_values() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixture(tmp.path(), 10);
    let split = load_dataset(tmp.path(), SplitKind::Train, &small()).unwrap();
    assert_eq!(split.len(), 10);
    for s in &split.samples {
        let k: u32 = s.source_id.rsplit("img").next().unwrap().parse().unwrap();
        assert!(s.image.in_unit_range());
        for y in 0..8 {
            for x in 0..8 {
                let want = fixture_pixel(k, x as u32, y as u32);
                for c in 0..3 {
                    assert_eq!(s.image.get(c, y, x), f64::from(want[c]) / 255.0);
                }
            }
        }
    }
}

#[test]
fn samples_are_sorted_and_ids_carry_the_split() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixture(tmp.path(), 10);
    let split = load_dataset(tmp.path(), SplitKind::Train, &small()).unwrap();
    let ids: Vec<&str> = split.samples.iter().map(|s| s.source_id.as_str()).collect();
    assert_eq!(ids[0], "train/berry/img00");
    assert_eq!(ids[1], "train/berry/img05");
    assert_eq!(ids[2], "train/bird/img01");
    let again = load_dataset(tmp.path(), SplitKind::Train, &small()).unwrap();
    assert_eq!(split, again);
}

#[test]
fn missing_and_empty_directories() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_dataset(tmp.path(), SplitKind::Test, &small()),
        Err(HarnessError::MissingDirectory(_))
    ));
    fs::create_dir_all(tmp.path().join("test/dog")).unwrap();
    let err = load_dataset(tmp.path(), SplitKind::Test, &small()).unwrap_err();
    assert!(err.to_string().contains("no samples found"), "{err}");
}

#[test]
fn bad_files_are_named_in_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("train/flower");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("broken.png"), b"not an image").unwrap();
    let err = load_dataset(tmp.path(), SplitKind::Train, &small()).unwrap_err();
    assert!(err.to_string().contains("broken.png"), "{err}");

    fs::remove_file(dir.join("broken.png")).unwrap();
    RgbImage::new(5, 7).save(dir.join("odd.png")).unwrap();
    let err = load_dataset(tmp.path(), SplitKind::Train, &small()).unwrap_err();
    assert!(err.to_string().contains("odd.png"), "{err}");

    let resized = load_dataset(tmp.path(), SplitKind::Train, &LoadOptions { resize: true, ..small() }).unwrap();
    assert_eq!(resized.samples[0].image.dims(), (3, 8, 8));
}

#[test]
fn synthetic_corpus_layout_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let spec = SynthSpec {
        size: 16,
        train_per_class: 3,
        test_per_class: 2,
        seed: 4,
    };
    assert_eq!(generate_corpus(a.path(), &spec).unwrap(), 25);
    generate_corpus(b.path(), &spec).unwrap();
    let opts = LoadOptions {
        size: (16, 16),
        ..small()
    };
    let train = load_dataset(a.path(), SplitKind::Train, &opts).unwrap();
    let test = load_dataset(a.path(), SplitKind::Test, &opts).unwrap();
    assert_eq!(train.len(), 15);
    assert_eq!(test.len(), 10);
    assert!(ClassLabel::ALL.iter().all(|&c| train.count(c) == 3 && test.count(c) == 2));
    assert!(train.samples.iter().all(|s| test.find(&s.source_id).is_none()));
    assert_eq!(train, load_dataset(b.path(), SplitKind::Train, &opts).unwrap());
    let limited = load_dataset(a.path(), SplitKind::Train, &LoadOptions { per_class_limit: Some(1), ..opts }).unwrap();
    assert_eq!(limited.len(), 5);
}

#[test]
fn full_corpus_counts_when_present() {
    // only meaningful with the real corpus available
    let Some(root) = std::env::var_os(semcom::dataset::DATA_ROOT_ENV) else {
        return;
    };
    let opts = LoadOptions::default();
    let train = load_dataset(Path::new(&root), SplitKind::Train, &opts).unwrap();
    if train.len() == 6000 {
        assert!(ClassLabel::ALL.iter().all(|&c| train.count(c) == 1200));
        let test = load_dataset(Path::new(&root), SplitKind::Test, &opts).unwrap();
        assert!(ClassLabel::ALL.iter().all(|&c| test.count(c) == 400));
    }
}
