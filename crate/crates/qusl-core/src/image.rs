//! Image ingestion: fixed-size RGB patches, CIFAR/PPM loaders, bilinear
//! resizing, color histograms and the classical Euclidean reference metrics.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Number of color channels in every patch (R, G, B).
pub const CHANNELS: usize = 3;

const CIFAR_RECORD_LEN: usize = 3073; // 1 label byte + 32*32*3 pixel bytes
const CIFAR_SIDE: usize = 32;

/// RGB pixel grid with real intensities in `[0, 255]`.
///
/// Pixels are stored channel-major: all of R row by row, then G, then B.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePatch {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImagePatch {
    /// Build a patch from channel-major intensities, validating the invariants.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "patch dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != CHANNELS * width * height {
            return Err(Error::ShapeMismatch(format!(
                "expected {} intensities for a {width}x{height} patch, got {}",
                CHANNELS * width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::InvalidArgument(format!(
                "intensity {bad} outside [0, 255]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Patch with every intensity set to `value`.
    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; CHANNELS * width * height])
    }

    /// Decode from raw channel-major bytes (one byte per intensity).
    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    fn index(&self, channel: usize, row: usize, col: usize) -> usize {
        channel * self.width * self.height + row * self.width + col
    }

    /// Intensity at `(channel, row, col)`.
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.pixels[self.index(channel, row, col)]
    }

    /// Channel-major flattened view (channel, then row, then column).
    pub fn flat(&self) -> &[f64] {
        &self.pixels
    }

    pub fn same_shape(&self, other: &ImagePatch) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Per-channel normalized color frequency histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorHistogram {
    bins_per_channel: usize,
    values: Vec<f64>,
}

impl ColorHistogram {
    pub fn bins_per_channel(&self) -> usize {
        self.bins_per_channel
    }

    /// All `3 * bins_per_channel` values, channel-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Load 3073-byte CIFAR-10 records; the leading label byte is discarded.
pub fn load_cifar_binary(path: impl AsRef<Path>) -> Result<Vec<ImagePatch>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % CIFAR_RECORD_LEN != 0 {
        let offset = (bytes.len() / CIFAR_RECORD_LEN * CIFAR_RECORD_LEN) as u64;
        return Err(Error::Format {
            offset,
            msg: format!(
                "truncated CIFAR record: file length {} is not a multiple of {CIFAR_RECORD_LEN}",
                bytes.len()
            ),
        });
    }
    bytes
        .chunks_exact(CIFAR_RECORD_LEN)
        .map(|record| ImagePatch::from_bytes(CIFAR_SIDE, CIFAR_SIDE, &record[1..]))
        .collect()
}

/// Load every file of a directory as binary PPM (P6, maxval 255), resized to
/// `patch_w` x `patch_h`. Files are processed in lexicographic order so
/// dataset indices are reproducible.
pub fn load_ppm_dir(
    path: impl AsRef<Path>,
    patch_w: usize,
    patch_h: usize,
) -> Result<Vec<ImagePatch>> {
    let dir = path.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();

    let mut patches = Vec::with_capacity(files.len());
    for file in files {
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        let patch = decode_ppm_p6(&file, &bytes)?;
        patches.push(resize(&patch, patch_w, patch_h)?);
    }
    Ok(patches)
}

fn decode_ppm_p6(path: &Path, bytes: &[u8]) -> Result<ImagePatch> {
    let unsupported = |msg: String| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        msg,
    };

    let mut pos = 0usize;
    // Header tokens are separated by whitespace; `#` comments run to newline.
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format {
                offset: start as u64,
                msg: "unexpected end of PPM header".into(),
            });
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(bytes)?;
    if magic != "P6" {
        return Err(unsupported(format!("expected P6 magic, found {magic:?}")));
    }
    let width: usize = next_token(bytes)?
        .parse()
        .map_err(|_| unsupported("invalid width".into()))?;
    let height: usize = next_token(bytes)?
        .parse()
        .map_err(|_| unsupported("invalid height".into()))?;
    let maxval: usize = next_token(bytes)?
        .parse()
        .map_err(|_| unsupported("invalid maxval".into()))?;
    if maxval != 255 {
        return Err(unsupported(format!("maxval {maxval} unsupported, need 255")));
    }
    pos += 1; // single whitespace byte after maxval

    let expected = width * height * CHANNELS;
    let data = bytes.get(pos..pos + expected).ok_or(Error::Format {
        offset: bytes.len() as u64,
        msg: format!("PPM pixel data truncated, need {expected} bytes"),
    })?;

    // PPM interleaves RGB per pixel; patches store channel-major.
    let mut pixels = vec![0.0; expected];
    for (i, rgb) in data.chunks_exact(CHANNELS).enumerate() {
        for (c, &value) in rgb.iter().enumerate() {
            pixels[c * width * height + i] = f64::from(value);
        }
    }
    ImagePatch::new(width, height, pixels)
}

/// Bilinear resize with half-pixel centers and edge clamping.
pub fn resize(patch: &ImagePatch, new_w: usize, new_h: usize) -> Result<ImagePatch> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::InvalidArgument(
            "resize target must be at least 1x1".into(),
        ));
    }
    let (src_w, src_h) = (patch.width, patch.height);
    let scale_x = src_w as f64 / new_w as f64;
    let scale_y = src_h as f64 / new_h as f64;

    let mut pixels = vec![0.0; CHANNELS * new_w * new_h];
    for c in 0..CHANNELS {
        for y in 0..new_h {
            let sy = (y as f64 + 0.5) * scale_y - 0.5;
            let y0 = sy.floor();
            let fy = sy - y0;
            let y0c = (y0 as isize).clamp(0, src_h as isize - 1) as usize;
            let y1c = ((y0 as isize) + 1).clamp(0, src_h as isize - 1) as usize;
            for x in 0..new_w {
                let sx = (x as f64 + 0.5) * scale_x - 0.5;
                let x0 = sx.floor();
                let fx = sx - x0;
                let x0c = (x0 as isize).clamp(0, src_w as isize - 1) as usize;
                let x1c = ((x0 as isize) + 1).clamp(0, src_w as isize - 1) as usize;

                let top = patch.get(c, y0c, x0c) * (1.0 - fx) + patch.get(c, y0c, x1c) * fx;
                let bottom = patch.get(c, y1c, x0c) * (1.0 - fx) + patch.get(c, y1c, x1c) * fx;
                let value = top * (1.0 - fy) + bottom * fy;
                pixels[c * new_w * new_h + y * new_w + x] = value.clamp(0.0, 255.0);
            }
        }
    }
    ImagePatch::new(new_w, new_h, pixels)
}

/// Per-channel color histogram; bin for intensity `v` is
/// `floor(v * bins / 256)`, with 255 landing in the last bin.
pub fn histogram(patch: &ImagePatch, bins_per_channel: usize) -> Result<ColorHistogram> {
    if bins_per_channel == 0 {
        return Err(Error::InvalidArgument(
            "bins_per_channel must be at least 1".into(),
        ));
    }
    let pixels_per_channel = patch.width * patch.height;
    let mut values = vec![0.0; CHANNELS * bins_per_channel];
    for c in 0..CHANNELS {
        let channel = &patch.pixels[c * pixels_per_channel..(c + 1) * pixels_per_channel];
        for &v in channel {
            let bin = ((v * bins_per_channel as f64) / 256.0) as usize;
            let bin = bin.min(bins_per_channel - 1);
            values[c * bins_per_channel + bin] += 1.0;
        }
        for bin in 0..bins_per_channel {
            values[c * bins_per_channel + bin] /= pixels_per_channel as f64;
        }
    }
    Ok(ColorHistogram {
        bins_per_channel,
        values,
    })
}

/// Euclidean distance between two histograms: `sqrt(sum (h1_i - h2_i)^2)`.
pub fn euclidean_distance_hist(h1: &ColorHistogram, h2: &ColorHistogram) -> Result<f64> {
    if h1.bins_per_channel != h2.bins_per_channel {
        return Err(Error::ShapeMismatch(format!(
            "histogram bin counts differ: {} vs {}",
            h1.bins_per_channel, h2.bins_per_channel
        )));
    }
    let sum: f64 = h1
        .values
        .iter()
        .zip(&h2.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum.sqrt())
}

/// Per-pixel Euclidean distance over all channels.
pub fn euclidean_distance_pixels(p1: &ImagePatch, p2: &ImagePatch) -> Result<f64> {
    if !p1.same_shape(p2) {
        return Err(Error::ShapeMismatch(format!(
            "patch shapes differ: {}x{} vs {}x{}",
            p1.width, p1.height, p2.width, p2.height
        )));
    }
    let sum: f64 = p1
        .pixels
        .iter()
        .zip(&p2.pixels)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum.sqrt())
}

// ---------------------------------------------------------------------------
// Dataset cache
//
// Flat binary file: 16-byte header (magic "QUSLDS01", u32 count, u16 width,
// u16 height, all little-endian) followed by `count` patches, each stored as
// 3*width*height f64 little-endian intensities in channel-major order.
// ---------------------------------------------------------------------------

const CACHE_MAGIC: &[u8; 8] = b"QUSLDS01";

/// Write patches to the flat binary dataset cache. All patches must share the
/// same dimensions.
pub fn write_dataset_cache(path: impl AsRef<Path>, patches: &[ImagePatch]) -> Result<()> {
    let path = path.as_ref();
    let first = patches.first().ok_or_else(|| {
        Error::InvalidArgument("refusing to write an empty dataset cache".into())
    })?;
    if patches.iter().any(|p| !p.same_shape(first)) {
        return Err(Error::ShapeMismatch(
            "all cached patches must share the same dimensions".into(),
        ));
    }
    if first.width > u16::MAX as usize || first.height > u16::MAX as usize {
        return Err(Error::InvalidArgument("patch dimensions exceed u16".into()));
    }
    if patches.len() > u32::MAX as usize {
        return Err(Error::InvalidArgument("too many patches for cache".into()));
    }

    let mut out = Vec::with_capacity(16 + patches.len() * first.pixels.len() * 8);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&(patches.len() as u32).to_le_bytes());
    out.extend_from_slice(&(first.width as u16).to_le_bytes());
    out.extend_from_slice(&(first.height as u16).to_le_bytes());
    for patch in patches {
        for v in &patch.pixels {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a dataset cache written by [`write_dataset_cache`].
pub fn read_dataset_cache(path: impl AsRef<Path>) -> Result<Vec<ImagePatch>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != CACHE_MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: "missing QUSLDS01 cache header".into(),
        });
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let width = u16::from_le_bytes(bytes[12..14].try_into().unwrap()) as usize;
    let height = u16::from_le_bytes(bytes[14..16].try_into().unwrap()) as usize;

    let patch_len = CHANNELS * width * height;
    let expected = 16 + count * patch_len * 8;
    if bytes.len() != expected {
        return Err(Error::Format {
            offset: bytes.len().min(expected) as u64,
            msg: format!(
                "cache length {} does not match header (expected {expected})",
                bytes.len()
            ),
        });
    }

    let mut patches = Vec::with_capacity(count);
    let mut pos = 16;
    for _ in 0..count {
        let mut pixels = Vec::with_capacity(patch_len);
        for _ in 0..patch_len {
            pixels.push(f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()));
            pos += 8;
        }
        patches.push(ImagePatch::new(width, height, pixels)?);
    }
    Ok(patches)
}

/// FNV-1a fingerprint of a dataset, used to verify that a checkpoint is
/// resumed against the data it was created with.
pub fn dataset_fingerprint(patches: &[ImagePatch]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |byte: u8| {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for patch in patches {
        for &d in &[patch.width as u64, patch.height as u64] {
            for b in d.to_le_bytes() {
                eat(b);
            }
        }
        for v in &patch.pixels {
            for b in v.to_le_bytes() {
                eat(b);
            }
        }
    }
    hash
}
