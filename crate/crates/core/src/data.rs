//! In-memory dataset types and deterministic batching. Reading the corpus
//! from disk lives in the `semcom` crate.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::rng::stream;
use crate::tensor::{Image, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Berry,
    Bird,
    Dog,
    Flower,
    Other,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Berry,
        ClassLabel::Bird,
        ClassLabel::Dog,
        ClassLabel::Flower,
        ClassLabel::Other,
    ];

    /// Directory name in the published corpus layout.
    pub fn dir_name(self) -> &'static str {
        match self {
            ClassLabel::Berry => "berry",
            ClassLabel::Bird => "bird",
            ClassLabel::Dog => "dog",
            ClassLabel::Flower => "flower",
            ClassLabel::Other => "other",
        }
    }

    pub fn from_dir_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.dir_name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    Train,
    Test,
}

impl SplitKind {
    pub fn dir_name(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    pub image: Image,
    pub class_label: ClassLabel,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub kind: SplitKind,
    pub samples: Vec<ImageSample>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.samples.iter().filter(|s| s.class_label == label).count()
    }

    pub fn find(&self, source_id: &str) -> Option<&ImageSample> {
        self.samples.iter().find(|s| s.source_id == source_id)
    }

    /// Keeps the first `n` samples of every class (in stored order).
    pub fn take_per_class(&self, n: usize) -> DatasetSplit {
        let mut seen = [0usize; 5];
        let samples = self
            .samples
            .iter()
            .filter(|s| {
                let k = s.class_label as usize;
                seen[k] += 1;
                seen[k] <= n
            })
            .cloned()
            .collect();
        DatasetSplit {
            kind: self.kind,
            samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub drop_last: bool,
}

/// Index batches for one pass over `len` samples. The permutation depends
/// only on `plan.shuffle_seed` and `len`.
pub fn batch_indices(len: usize, plan: &BatchPlan) -> Result<Vec<Vec<usize>>> {
    if plan.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut stream(plan.shuffle_seed, "batch-order", len as u64));
    Ok(order
        .chunks(plan.batch_size)
        .filter(|c| !plan.drop_last || c.len() == plan.batch_size)
        .map(|c| c.to_vec())
        .collect())
}

/// Materializes shuffled `[B, C, H, W]` batches of `split`.
pub fn make_batches(split: &DatasetSplit, plan: &BatchPlan) -> Result<Vec<Tensor>> {
    batch_indices(split.len(), plan)?
        .iter()
        .map(|idx| gather(split, idx))
        .collect()
}

/// Stacks the samples at `indices` into one batch.
pub fn gather(split: &DatasetSplit, indices: &[usize]) -> Result<Tensor> {
    let images: Vec<&Image> = indices.iter().map(|&i| &split.samples[i].image).collect();
    Tensor::from_images(&images)
}

/// The all-zeros image of the given shape.
pub fn black_image(channels: usize, height: usize, width: usize) -> Image {
    Image::filled(channels, height, width, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn split(n: usize) -> DatasetSplit {
        DatasetSplit {
            kind: SplitKind::Train,
            samples: (0..n)
                .map(|i| ImageSample {
                    image: Image::filled(3, 2, 2, i as f64 / n as f64),
                    class_label: ClassLabel::ALL[i % 5],
                    source_id: format!("s{i:03}"),
                })
                .collect(),
        }
    }

    #[test]
    fn batch_counts() {
        let s = split(10);
        let plan = BatchPlan { batch_size: 4, shuffle_seed: 1, drop_last: true };
        let b = make_batches(&s, &plan).unwrap();
        assert_eq!(b.iter().map(|t| t.batch()).collect::<Vec<_>>(), [4, 4]);
        let plan = BatchPlan { drop_last: false, ..plan };
        let b = make_batches(&s, &plan).unwrap();
        assert_eq!(b.iter().map(|t| t.batch()).collect::<Vec<_>>(), [4, 4, 2]);
        assert_eq!(b[0].shape(), [4, 3, 2, 2]);
    }

    #[test]
    fn oversized_batches() {
        let s = split(3);
        let keep = BatchPlan { batch_size: 8, shuffle_seed: 0, drop_last: false };
        assert_eq!(make_batches(&s, &keep).unwrap().len(), 1);
        let drop = BatchPlan { drop_last: true, ..keep };
        assert!(make_batches(&s, &drop).unwrap().is_empty());
        let zero = BatchPlan { batch_size: 0, ..keep };
        assert!(make_batches(&s, &zero).is_err());
    }

    #[test]
    fn order_depends_only_on_seed() {
        let plan = BatchPlan { batch_size: 3, shuffle_seed: 17, drop_last: false };
        let a = batch_indices(20, &plan).unwrap();
        assert_eq!(a, batch_indices(20, &plan).unwrap());
        let other = BatchPlan { shuffle_seed: 18, ..plan };
        assert_ne!(a, batch_indices(20, &other).unwrap());
        let mut all: Vec<usize> = a.concat();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn black_image_is_zero() {
        let b = black_image(3, 128, 128);
        assert_eq!(b.dims(), (3, 128, 128));
        assert_eq!(b.mean_intensity(), 0.0);
        let t = Tensor::from_images(&[&b]).unwrap();
        assert_eq!(crate::objectives::distortion(&t, &t).unwrap(), [0.0]);
    }

    #[test]
    fn per_class_subset() {
        let s = split(20).take_per_class(2);
        assert_eq!(s.len(), 10);
        assert!(ClassLabel::ALL.iter().all(|&c| s.count(c) == 2));
    }
}
