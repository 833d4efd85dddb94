//! Linnaeus-style corpus on disk: `<root>/{train,test}/<class>/<file>`.

use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use semcom_core::data::{ClassLabel, DatasetSplit, ImageSample, SplitKind};
use semcom_core::Image;

use crate::error::{HarnessError, Result};

pub const DATA_ROOT_ENV: &str = "SECSEMCOM_DATA_ROOT";

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    /// Required `(height, width)`; files of other sizes are rejected unless `resize` is set.
    pub size: (u32, u32),
    /// Downscale mismatched files instead of rejecting them.
    pub resize: bool,
    /// Keep at most this many files per class (after sorting).
    pub per_class_limit: Option<usize>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            size: (128, 128),
            resize: false,
            per_class_limit: None,
        }
    }
}

/// Explicit flag first, then the environment variable.
pub fn resolve_data_root(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from))
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
        let path = entry.map_err(|e| HarnessError::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Decodes one file to a `[0, 1]` CHW RGB image.
pub fn load_image(path: &Path, options: &LoadOptions) -> Result<Image> {
    let decoded = image::open(path).map_err(|e| HarnessError::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (h, w) = options.size;
    let mut rgb = decoded.to_rgb8();
    if (rgb.height(), rgb.width()) != (h, w) {
        if !options.resize {
            return Err(HarnessError::Dimensions {
                path: path.to_path_buf(),
                expected: (h, w),
                actual: (rgb.height(), rgb.width()),
            });
        }
        rgb = image::imageops::resize(&rgb, w, h, FilterType::Triangle);
    }
    let (h, w) = (h as usize, w as usize);
    let mut data = vec![0.0; 3 * h * w];
    for (x, y, px) in rgb.enumerate_pixels() {
        for c in 0..3 {
            data[(c * h + y as usize) * w + x as usize] = f64::from(px[c]) / 255.0;
        }
    }
    Ok(Image::new(3, h, w, data)?)
}

/// Loads one split, ordered by class then file name. The source id is
/// `<split>/<class>/<file stem>`, so ids never collide across splits.
pub fn load_dataset(root: &Path, kind: SplitKind, options: &LoadOptions) -> Result<DatasetSplit> {
    let split_dir = root.join(kind.dir_name());
    if !split_dir.is_dir() {
        return Err(HarnessError::MissingDirectory(split_dir));
    }
    let mut samples = Vec::new();
    for label in ClassLabel::ALL {
        let class_dir = split_dir.join(label.dir_name());
        if !class_dir.is_dir() {
            continue;
        }
        let mut files = image_files(&class_dir)?;
        if let Some(n) = options.per_class_limit {
            files.truncate(n);
        }
        for path in files {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            samples.push(ImageSample {
                image: load_image(&path, options)?,
                class_label: label,
                source_id: format!("{}/{}/{}", kind.dir_name(), label.dir_name(), stem),
            });
        }
    }
    if samples.is_empty() {
        return Err(HarnessError::NoSamples(split_dir));
    }
    log::info!("loaded {} {} images from {}", samples.len(), kind.dir_name(), split_dir.display());
    Ok(DatasetSplit { kind, samples })
}
