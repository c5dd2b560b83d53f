//! MNIST IDX parsing and the normalized image/dataset types.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, NUM_CLASSES};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

pub const TRAIN_FILE_LEN: usize = 60_000;
pub const TRAIN_LEN: usize = 50_000;
pub const VALIDATION_LEN: usize = 10_000;

/// One undecoded grid of pixel bytes, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawGrid {
    pub rows: usize,
    pub cols: usize,
    pub bytes: Vec<u8>,
}

/// A 28x28 grayscale image with every pixel in `[0, 1]`.
#[derive(Clone, PartialEq)]
pub struct Image {
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != IMAGE_PIXELS {
            return Err(Error::dim(format!(
                "image must have {IMAGE_PIXELS} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::validation(format!(
                "pixel {i} is {} which is outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Image { pixels })
    }

    /// Builds an image from arbitrary finite values by clamping into `[0, 1]`.
    pub fn clamped(pixels: Vec<f64>) -> Result<Self> {
        Image::new(pixels.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }

    pub fn blank() -> Self {
        Image {
            pixels: vec![0.0; IMAGE_PIXELS],
        }
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * IMAGE_SIDE + col]
    }

    /// Quantizes to bytes (rounding), e.g. for writing a PGM.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|p| (p * 255.0).round() as u8).collect()
    }
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lit = self.pixels.iter().filter(|&&p| p > 0.0).count();
        write!(f, "Image(28x28, {lit} non-zero pixels)")
    }
}

/// `byte / 255`.
pub fn normalize(grid: &RawGrid) -> Result<Image> {
    if grid.rows != IMAGE_SIDE || grid.cols != IMAGE_SIDE {
        return Err(Error::dim(format!(
            "expected a {IMAGE_SIDE}x{IMAGE_SIDE} grid, got {}x{}",
            grid.rows, grid.cols
        )));
    }
    Ok(Image {
        pixels: grid.bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
    })
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let chunk = bytes.get(offset..offset + 4).ok_or(Error::Truncated {
        expected: offset + 4,
        actual: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(chunk.try_into().expect("4-byte slice")))
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::Format(format!(
            "{what}: bad magic 0x{magic:08x}, expected 0x{expected:08x}"
        )));
    }
    Ok(())
}

/// Parses an IDX3 image file into `count` grids in file order.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<RawGrid>> {
    check_magic(bytes, IMAGES_MAGIC, "IDX image file")?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let per_image = rows * cols;
    let expected = 16 + count * per_image;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if per_image == 0 {
        return Ok(vec![
            RawGrid {
                rows,
                cols,
                bytes: Vec::new()
            };
            count
        ]);
    }
    Ok(bytes[16..expected]
        .chunks_exact(per_image)
        .map(|chunk| RawGrid {
            rows,
            cols,
            bytes: chunk.to_vec(),
        })
        .collect())
}

/// Parses an IDX1 label file; every label must be a digit.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC, "IDX label file")?;
    let count = read_u32(bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let labels = &bytes[8..expected];
    if let Some(index) = labels.iter().position(|&l| l as usize >= NUM_CLASSES) {
        return Err(Error::InvalidValue {
            index,
            value: labels[index],
        });
    }
    Ok(labels.to_vec())
}

pub fn encode_idx_images(grids: &[RawGrid]) -> Result<Vec<u8>> {
    let (rows, cols) = grids.first().map_or((IMAGE_SIDE, IMAGE_SIDE), |g| (g.rows, g.cols));
    let mut out = Vec::with_capacity(16 + grids.len() * rows * cols);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(grids.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for (i, g) in grids.iter().enumerate() {
        if g.rows != rows || g.cols != cols || g.bytes.len() != rows * cols {
            return Err(Error::dim(format!(
                "grid {i} is {}x{} with {} bytes, expected {rows}x{cols}",
                g.rows,
                g.cols,
                g.bytes.len()
            )));
        }
        out.extend_from_slice(&g.bytes);
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

/// Images paired with digit labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    images: Vec<Image>,
    labels: Vec<u8>,
    split: Split,
}

impl LabeledDataset {
    pub fn new(images: Vec<Image>, labels: Vec<u8>, split: Split) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::validation(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(index) = labels.iter().position(|&l| l as usize >= NUM_CLASSES) {
            return Err(Error::InvalidValue {
                index,
                value: labels[index],
            });
        }
        Ok(LabeledDataset { images, labels, split })
    }

    pub fn from_idx(image_bytes: &[u8], label_bytes: &[u8], split: Split) -> Result<Self> {
        let images = parse_idx_images(image_bytes)?
            .iter()
            .map(normalize)
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(images, parse_idx_labels(label_bytes)?, split)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, index: usize) -> Option<(&Image, u8)> {
        Some((self.images.get(index)?, self.labels[index]))
    }

    /// A new dataset holding the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut images = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let (img, label) = self
                .get(i)
                .ok_or_else(|| Error::validation(format!("index {i} out of range for {} samples", self.len())))?;
            images.push(img.clone());
            labels.push(label);
        }
        Ok(LabeledDataset {
            images,
            labels,
            split: self.split,
        })
    }
}

/// Seeded shuffle of `0..len` split into the first `head` indices and the rest.
pub fn shuffled_partition(len: usize, head: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut indices: Vec<usize> = (0..len).collect();
    indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let tail = indices.split_off(head.min(len));
    (indices, tail)
}

/// Splits the 60 000-image training file into 50 000 train and 10 000 validation samples.
pub fn split_train_validation(full: LabeledDataset, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if full.len() != TRAIN_FILE_LEN {
        return Err(Error::validation(format!(
            "training file must hold {TRAIN_FILE_LEN} samples, got {}",
            full.len()
        )));
    }
    let (train_idx, val_idx) = shuffled_partition(full.len(), TRAIN_LEN, seed);
    let mut slots: Vec<Option<(Image, u8)>> = full.images.into_iter().zip(full.labels).map(Some).collect();
    let mut take = |idx: &[usize], split| {
        let (images, labels) = idx
            .iter()
            .map(|&i| slots[i].take().expect("partition indices are disjoint"))
            .unzip();
        LabeledDataset { images, labels, split }
    };
    let train = take(&train_idx, Split::Train);
    let validation = take(&val_idx, Split::Validation);
    Ok((train, validation))
}

/// File names inside an MNIST directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnistFiles {
    pub train_images: String,
    pub train_labels: String,
    pub test_images: String,
    pub test_labels: String,
}

impl Default for MnistFiles {
    fn default() -> Self {
        MnistFiles {
            train_images: "train-images-idx3-ubyte".into(),
            train_labels: "train-labels-idx1-ubyte".into(),
            test_images: "t10k-images-idx3-ubyte".into(),
            test_labels: "t10k-labels-idx1-ubyte".into(),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn load_pair(dir: &Path, images: &str, labels: &str, split: Split) -> Result<LabeledDataset> {
    LabeledDataset::from_idx(&read_file(&dir.join(images))?, &read_file(&dir.join(labels))?, split)
}

/// Loads the full 60 000-sample training file.
pub fn load_train_file(dir: &Path, files: &MnistFiles) -> Result<LabeledDataset> {
    load_pair(dir, &files.train_images, &files.train_labels, Split::Train)
}

pub fn load_test(dir: &Path, files: &MnistFiles) -> Result<LabeledDataset> {
    load_pair(dir, &files.test_images, &files.test_labels, Split::Test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic_grids(n: usize) -> Vec<RawGrid> {
        (0..n)
            .map(|i| RawGrid {
                rows: 28,
                cols: 28,
                bytes: (0..784).map(|p| ((p * 7 + i * 13) % 256) as u8).collect(),
            })
            .collect()
    }

    #[test]
    fn parse_header_and_order() {
        let grids = synthetic_grids(3);
        let parsed = parse_idx_images(&encode_idx_images(&grids).unwrap()).unwrap();
        assert_eq!(parsed, grids);
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let images = encode_idx_images(&synthetic_grids(1)).unwrap();
        let labels = encode_idx_labels(&[1, 2]);
        assert!(matches!(parse_idx_images(&labels), Err(Error::Format(_))));
        assert!(matches!(parse_idx_labels(&images), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_reports_byte_counts() {
        let bytes = encode_idx_images(&synthetic_grids(2)).unwrap();
        let cut = &bytes[..bytes.len() - 100];
        match parse_idx_images(cut) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, 16 + 2 * 784);
                assert_eq!(actual, 16 + 2 * 784 - 100);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
        assert!(matches!(parse_idx_images(&bytes[..10]), Err(Error::Truncated { .. })));
        let labels = encode_idx_labels(&[1, 2, 3]);
        assert!(matches!(
            parse_idx_labels(&labels[..9]),
            Err(Error::Truncated {
                expected: 11,
                actual: 9
            })
        ));
    }

    #[test]
    fn label_out_of_range() {
        let bytes = encode_idx_labels(&[3, 9, 12, 0]);
        match parse_idx_labels(&bytes) {
            Err(Error::InvalidValue { index, value }) => assert_eq!((index, value), (2, 12)),
            other => panic!("expected value error, got {other:?}"),
        }
    }

    #[test]
    fn normalize_endpoints() {
        let mut bytes = vec![0u8; 784];
        bytes[1] = 255;
        bytes[2] = 128;
        let img = normalize(&RawGrid {
            rows: 28,
            cols: 28,
            bytes,
        })
        .unwrap();
        assert_eq!(img.pixels()[0], 0.0);
        assert_eq!(img.pixels()[1], 1.0);
        assert!((img.pixels()[2] - 0.50196).abs() < 1e-5);
        assert_eq!(img.pixels()[2], 128.0 / 255.0);
        let bad = RawGrid {
            rows: 2,
            cols: 2,
            bytes: vec![0; 4],
        };
        assert!(matches!(normalize(&bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn image_rejects_out_of_range() {
        let mut p = vec![0.0; 784];
        p[5] = 1.5;
        assert!(Image::new(p.clone()).is_err());
        assert_eq!(Image::clamped(p).unwrap().pixels()[5], 1.0);
        assert!(Image::new(vec![0.0; 10]).is_err());
    }

    #[test]
    fn partition_is_deterministic_and_exhaustive() {
        let (a, b) = shuffled_partition(TRAIN_FILE_LEN, TRAIN_LEN, 42);
        let (a2, b2) = shuffled_partition(TRAIN_FILE_LEN, TRAIN_LEN, 42);
        assert_eq!((a.len(), b.len()), (TRAIN_LEN, VALIDATION_LEN));
        assert_eq!((&a, &b), (&a2, &b2));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..TRAIN_FILE_LEN).collect::<Vec<_>>());
        let (c, _) = shuffled_partition(TRAIN_FILE_LEN, TRAIN_LEN, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn split_rejects_wrong_size() {
        let ds = LabeledDataset::new(vec![Image::blank(); 3], vec![0, 1, 2], Split::Train).unwrap();
        assert!(matches!(split_train_validation(ds, 1), Err(Error::Validation(_))));
    }

    #[test]
    fn dataset_length_mismatch() {
        assert!(LabeledDataset::new(vec![Image::blank(); 2], vec![0], Split::Test).is_err());
    }

    proptest! {
        #[test]
        fn idx_round_trip(
            dims in (1usize..6, 1usize..6),
            seed_bytes in prop::collection::vec(any::<u8>(), 0..200),
            labels in prop::collection::vec(0u8..10, 0..50),
        ) {
            let (rows, cols) = dims;
            let per = rows * cols;
            let grids: Vec<RawGrid> = seed_bytes
                .chunks_exact(per)
                .map(|c| RawGrid { rows, cols, bytes: c.to_vec() })
                .collect();
            let encoded = encode_idx_images(&grids).unwrap();
            let parsed = parse_idx_images(&encoded).unwrap();
            prop_assert_eq!(encode_idx_images(&parsed).unwrap(), encoded);

            let lab = encode_idx_labels(&labels);
            prop_assert_eq!(encode_idx_labels(&parse_idx_labels(&lab).unwrap()), lab);
        }
    }
}
