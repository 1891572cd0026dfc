//! Raster types and the generic 2D algorithms the detection stages build on:
//! min-max normalization, intensity complement, Hadamard product, city-block
//! distance transform, hole filling, run-length connected-component labeling
//! and normalized centroids.
//!
//! All images are row-major with `index = y * width + x`. Slices are at least
//! 8x8; the constructors enforce this.

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 8;

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width < MIN_DIM || height < MIN_DIM {
        return Err(Error::TooSmall(width, height));
    }
    if len != width * height {
        return Err(Error::BadLength {
            width,
            height,
            got: len,
        });
    }
    Ok(())
}

/// One 2D slice, 8-bit intensities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }
}

/// Real-valued image with every sample in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl UnitImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "unit image sample {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Boolean map with the same shape contract as [`GrayImage`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Pixelwise complement.
    pub fn invert(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Dense labeling of the foreground of a mask: 0 is background, objects are
/// labeled `1..=object_count` under 8-connectivity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    object_count: usize,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn object_count(&self) -> usize {
        self.object_count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel index lists per object, in label order.
    pub fn objects(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.object_count];
        for (idx, &label) in self.labels.iter().enumerate() {
            if label > 0 {
                out[label as usize - 1].push(idx as u32);
            }
        }
        out
    }
}

/// Raw city-block distances, in whole pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    data: Vec<u32>,
}

impl DistanceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn max(&self) -> u32 {
        self.data.iter().copied().max().unwrap_or(0)
    }
}

/// Anything that can be read as a flat buffer of real samples.
pub trait ScalarImage {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn sample(&self, idx: usize) -> f32;
}

impl ScalarImage for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn sample(&self, idx: usize) -> f32 {
        self.data[idx] as f32
    }
}

impl ScalarImage for UnitImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn sample(&self, idx: usize) -> f32 {
        self.data[idx]
    }
}

impl ScalarImage for DistanceMap {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn sample(&self, idx: usize) -> f32 {
        self.data[idx] as f32
    }
}

/// Min-max rescale to `[0, 1]`. A constant input maps to all zeros so that a
/// flat image stays inert downstream instead of dividing by zero.
pub fn normalize_to_unit<T: ScalarImage>(img: &T) -> UnitImage {
    let n = img.width() * img.height();
    let mut min = f32::INFINITY;
    let mut max = f32::NEG_INFINITY;
    for i in 0..n {
        let v = img.sample(i);
        min = min.min(v);
        max = max.max(v);
    }
    let data = if max > min {
        let span = max - min;
        (0..n).map(|i| (img.sample(i) - min) / span).collect()
    } else {
        vec![0.0; n]
    };
    UnitImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// `255 - v` per pixel.
pub fn complement(img: &GrayImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&v| 255 - v).collect(),
    }
}

/// Elementwise product of two unit images, rescaled back to `[0, 1]`.
pub fn hadamard(a: &UnitImage, b: &UnitImage) -> Result<UnitImage> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch(a.width, a.height, b.width, b.height));
    }
    let product = UnitImage {
        width: a.width,
        height: a.height,
        data: a
            .data
            .iter()
            .zip(&b.data)
            .map(|(&x, &y)| x * y)
            .collect(),
    };
    Ok(normalize_to_unit(&product))
}

/// Exact city-block distance to the nearest true pixel, via a two-pass
/// chamfer sweep. Errors when the mask has no true pixel at all.
pub fn distance_transform_l1(mask: &BinaryMask) -> Result<DistanceMap> {
    if mask.data.iter().all(|&v| !v) {
        return Err(Error::EmptyMask);
    }
    let (w, h) = (mask.width, mask.height);
    const INF: u32 = u32::MAX / 2;
    let mut d = vec![INF; w * h];
    for (i, &v) in mask.data.iter().enumerate() {
        if v {
            d[i] = 0;
        }
    }
    // Forward: left and up neighbors.
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x > 0 {
                d[i] = d[i].min(d[i - 1] + 1);
            }
            if y > 0 {
                d[i] = d[i].min(d[i - w] + 1);
            }
        }
    }
    // Backward: right and down neighbors.
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let i = y * w + x;
            if x + 1 < w {
                d[i] = d[i].min(d[i + 1] + 1);
            }
            if y + 1 < h {
                d[i] = d[i].min(d[i + w] + 1);
            }
        }
    }
    Ok(DistanceMap {
        width: w,
        height: h,
        data: d,
    })
}

/// Flips every false region that is not 4-connected to the image border.
/// Border-connected background is left unchanged.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut outside = vec![false; w * h];
    let mut queue = std::collections::VecDeque::new();
    let push = |idx: usize, outside: &mut Vec<bool>, queue: &mut std::collections::VecDeque<usize>| {
        if !mask.data[idx] && !outside[idx] {
            outside[idx] = true;
            queue.push_back(idx);
        }
    };
    for x in 0..w {
        push(x, &mut outside, &mut queue);
        push((h - 1) * w + x, &mut outside, &mut queue);
    }
    for y in 0..h {
        push(y * w, &mut outside, &mut queue);
        push(y * w + w - 1, &mut outside, &mut queue);
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        if x > 0 {
            push(i - 1, &mut outside, &mut queue);
        }
        if x + 1 < w {
            push(i + 1, &mut outside, &mut queue);
        }
        if y > 0 {
            push(i - w, &mut outside, &mut queue);
        }
        if y + 1 < h {
            push(i + w, &mut outside, &mut queue);
        }
    }
    let data = mask
        .data
        .iter()
        .zip(&outside)
        .map(|(&fg, &out)| fg || !out)
        .collect();
    BinaryMask {
        width: w,
        height: h,
        data,
    }
}

/// A run of consecutive foreground pixels within one row.
#[derive(Debug, Clone, Copy)]
struct Run {
    row: usize,
    start: usize,
    end: usize, // exclusive
    label: u32, // preliminary
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // Smaller root wins, so equivalence resolution stays deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// 8-connected labeling by run-length encoding: encode the rows as runs,
/// assign preliminary labels while recording equivalences between runs that
/// touch across rows, resolve the equivalence classes, then relabel densely
/// in row-major first-appearance order.
pub fn connected_components_8(mask: &BinaryMask) -> LabelMap {
    let (w, h) = (mask.width, mask.height);

    // Step 1: run-length encode.
    let mut runs: Vec<Run> = Vec::new();
    let mut row_runs: Vec<(usize, usize)> = Vec::with_capacity(h + 1); // [start, end) into `runs`
    for y in 0..h {
        let begin = runs.len();
        let mut x = 0;
        while x < w {
            if mask.data[y * w + x] {
                let start = x;
                while x < w && mask.data[y * w + x] {
                    x += 1;
                }
                runs.push(Run {
                    row: y,
                    start,
                    end: x,
                    label: 0,
                });
            } else {
                x += 1;
            }
        }
        row_runs.push((begin, runs.len()));
    }

    // Step 2: preliminary labels plus equivalences with the previous row.
    let mut uf = UnionFind::new(runs.len());
    let mut next = 0u32;
    for y in 0..h {
        let (lo, hi) = row_runs[y];
        for i in lo..hi {
            let mut label = u32::MAX;
            if y > 0 {
                let (plo, phi) = row_runs[y - 1];
                for j in plo..phi {
                    // Diagonal contact counts, hence the one-pixel slack.
                    let touches =
                        runs[j].start <= runs[i].end && runs[j].end + 1 > runs[i].start;
                    if touches {
                        if label == u32::MAX {
                            label = runs[j].label;
                        } else {
                            uf.union(label, runs[j].label);
                        }
                    }
                }
            }
            if label == u32::MAX {
                label = next;
                next += 1;
            }
            runs[i].label = label;
        }
    }

    // Steps 3 and 4: resolve classes and relabel densely by first appearance.
    let mut dense: Vec<u32> = vec![0; runs.len().max(1)];
    let mut object_count = 0usize;
    let mut labels = vec![0u32; w * h];
    for run in &runs {
        let root = uf.find(run.label);
        if dense[root as usize] == 0 {
            object_count += 1;
            dense[root as usize] = object_count as u32;
        }
        let final_label = dense[root as usize];
        for x in run.start..run.end {
            labels[run.row * w + x] = final_label;
        }
    }

    LabelMap {
        width: w,
        height: h,
        labels,
        object_count,
    }
}

/// Mean pixel coordinate scaled into `[0, 1]^2` by `(width-1, height-1)`.
pub fn object_centroid(pixels: &[u32], width: usize, height: usize) -> Result<(f64, f64)> {
    if pixels.is_empty() {
        return Err(Error::EmptyPixelSet);
    }
    let mut sx = 0.0;
    let mut sy = 0.0;
    for &idx in pixels {
        sx += (idx as usize % width) as f64;
        sy += (idx as usize / width) as f64;
    }
    let n = pixels.len() as f64;
    Ok((
        sx / n / (width - 1) as f64,
        sy / n / (height - 1) as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gray(w: usize, h: usize, rng: &mut ChaCha8Rng) -> GrayImage {
        GrayImage::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
    }

    fn random_mask(w: usize, h: usize, density: f64, rng: &mut ChaCha8Rng) -> BinaryMask {
        BinaryMask::new(w, h, (0..w * h).map(|_| rng.random_bool(density)).collect()).unwrap()
    }

    // Multi-source BFS: the stated independent oracle for the chamfer sweep.
    fn bfs_distance_oracle(mask: &BinaryMask) -> Vec<u32> {
        let (w, h) = (mask.width(), mask.height());
        let mut d = vec![u32::MAX; w * h];
        let mut queue = std::collections::VecDeque::new();
        for (i, &v) in mask.data().iter().enumerate() {
            if v {
                d[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            for (nx, ny) in [
                (x.wrapping_sub(1), y),
                (x + 1, y),
                (x, y.wrapping_sub(1)),
                (x, y + 1),
            ] {
                if nx < w && ny < h {
                    let j = ny * w + nx;
                    if d[j] == u32::MAX {
                        d[j] = d[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        d
    }

    // Flood fill from every border background pixel; holes are what is left.
    fn fill_holes_oracle(mask: &BinaryMask) -> Vec<bool> {
        let (w, h) = (mask.width(), mask.height());
        let mut reach = vec![false; w * h];
        let mut stack = Vec::new();
        for (i, &fg) in mask.data().iter().enumerate() {
            let (x, y) = (i % w, i / w);
            let border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            if border && !fg {
                reach[i] = true;
                stack.push(i);
            }
        }
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            for (nx, ny) in [
                (x.wrapping_sub(1), y),
                (x + 1, y),
                (x, y.wrapping_sub(1)),
                (x, y + 1),
            ] {
                if nx < w && ny < h {
                    let j = ny * w + nx;
                    if !mask.data()[j] && !reach[j] {
                        reach[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        (0..w * h).map(|i| mask.data()[i] || !reach[i]).collect()
    }

    // 8-connected flood-fill labeling oracle.
    fn flood_label_oracle(mask: &BinaryMask) -> Vec<u32> {
        let (w, h) = (mask.width(), mask.height());
        let mut labels = vec![0u32; w * h];
        let mut next = 0u32;
        for start in 0..w * h {
            if !mask.data()[start] || labels[start] != 0 {
                continue;
            }
            next += 1;
            labels[start] = next;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let (x, y) = (i as isize % w as isize, i as isize / w as isize);
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                            let j = ny as usize * w + nx as usize;
                            if mask.data()[j] && labels[j] == 0 {
                                labels[j] = next;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        labels
    }

    fn partitions_equal(a: &[u32], b: &[u32]) -> bool {
        // Label-permutation-invariant comparison.
        let mut fwd = std::collections::HashMap::new();
        let mut bwd = std::collections::HashMap::new();
        for (&x, &y) in a.iter().zip(b) {
            if (x == 0) != (y == 0) {
                return false;
            }
            if x == 0 {
                continue;
            }
            if *fwd.entry(x).or_insert(y) != y || *bwd.entry(y).or_insert(x) != x {
                return false;
            }
        }
        true
    }

    #[test]
    fn normalize_constant_is_zero() {
        let img = GrayImage::filled(8, 8, 7).unwrap();
        let unit = normalize_to_unit(&img);
        assert!(unit.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_three_levels() {
        let mut img = GrayImage::filled(8, 8, 128).unwrap();
        img.set(0, 0, 0);
        img.set(1, 0, 255);
        let unit = normalize_to_unit(&img);
        assert_eq!(unit.get(0, 0), 0.0);
        assert_eq!(unit.get(1, 0), 1.0);
        assert!((unit.get(2, 0) - 128.0 / 255.0).abs() < 1e-6);
    }

    #[test]
    fn normalize_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = random_gray(16, 16, &mut rng);
        let min = *img.data().iter().min().unwrap() as f32;
        let max = *img.data().iter().max().unwrap() as f32;
        let unit = normalize_to_unit(&img);
        for (i, &v) in unit.data().iter().enumerate() {
            let expect = (img.data()[i] as f32 - min) / (max - min);
            assert!((v - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn complement_basics() {
        let img = GrayImage::filled(8, 8, 0).unwrap();
        assert!(complement(&img).data().iter().all(|&v| v == 255));
        let img = GrayImage::filled(8, 8, 100).unwrap();
        assert_eq!(complement(&img).get(3, 3), 155);
    }

    #[test]
    fn hadamard_all_ones_is_normalized_other() {
        let a = UnitImage::new(8, 8, vec![1.0; 64]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = normalize_to_unit(&random_gray(8, 8, &mut rng));
        let prod = hadamard(&a, &b).unwrap();
        for (p, q) in prod.data().iter().zip(normalize_to_unit(&b).data()) {
            assert!((p - q).abs() < 1e-6);
        }
    }

    #[test]
    fn hadamard_zero_factor_and_mismatch() {
        let a = UnitImage::new(8, 8, vec![0.0; 64]).unwrap();
        let b = UnitImage::new(8, 8, vec![0.5; 64]).unwrap();
        assert!(hadamard(&a, &b).unwrap().data().iter().all(|&v| v == 0.0));
        let c = UnitImage::new(8, 9, vec![0.5; 72]).unwrap();
        assert!(hadamard(&a, &c).is_err());
    }

    #[test]
    fn hadamard_matches_product_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = normalize_to_unit(&random_gray(12, 9, &mut rng));
        let b = normalize_to_unit(&random_gray(12, 9, &mut rng));
        let got = hadamard(&a, &b).unwrap();
        let raw: Vec<f32> = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
        let min = raw.iter().cloned().fold(f32::INFINITY, f32::min);
        let max = raw.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        for (g, r) in got.data().iter().zip(&raw) {
            let expect = if max > min { (r - min) / (max - min) } else { 0.0 };
            assert!((g - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn distance_transform_basics() {
        let mut mask = BinaryMask::filled(9, 9, false).unwrap();
        mask.set(4, 4, true);
        let d = distance_transform_l1(&mask).unwrap();
        assert_eq!(d.get(4, 4), 0);
        assert_eq!(d.get(5, 4), 1);
        assert_eq!(d.get(4, 3), 1);
        assert_eq!(d.get(0, 0), 8);
        assert!(distance_transform_l1(&BinaryMask::filled(8, 8, false).unwrap()).is_err());
    }

    #[test]
    fn distance_transform_matches_bfs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let mask = random_mask(24, 24, 0.08, &mut rng);
            if mask.count_true() == 0 {
                continue;
            }
            let d = distance_transform_l1(&mask).unwrap();
            assert_eq!(d.data(), &bfs_distance_oracle(&mask)[..]);
        }
    }

    #[test]
    fn fill_holes_ring_and_idempotence() {
        let ring = BinaryMask::from_fn(11, 11, |x, y| {
            let on_ring = (2..=8).contains(&x) && (2..=8).contains(&y);
            let inner = (3..=7).contains(&x) && (3..=7).contains(&y);
            on_ring && !inner
        })
        .unwrap();
        let filled = fill_holes(&ring);
        for y in 2..=8 {
            for x in 2..=8 {
                assert!(filled.get(x, y));
            }
        }
        let no_holes = BinaryMask::from_fn(10, 10, |x, _| x < 3).unwrap();
        assert_eq!(fill_holes(&no_holes), no_holes);
    }

    #[test]
    fn fill_holes_matches_border_flood_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let mask = random_mask(20, 16, 0.45, &mut rng);
            let filled = fill_holes(&mask);
            assert_eq!(filled.data(), &fill_holes_oracle(&mask)[..]);
        }
    }

    #[test]
    fn components_empty_and_diagonal() {
        let empty = BinaryMask::filled(8, 8, false).unwrap();
        assert_eq!(connected_components_8(&empty).object_count(), 0);
        let mut diag = BinaryMask::filled(8, 8, false).unwrap();
        diag.set(2, 2, true);
        diag.set(3, 3, true);
        assert_eq!(connected_components_8(&diag).object_count(), 1);
    }

    #[test]
    fn components_match_flood_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for round in 0..200 {
            let density = 0.2 + 0.6 * (round % 7) as f64 / 7.0;
            let mask = random_mask(32, 32, density, &mut rng);
            let got = connected_components_8(&mask);
            let oracle = flood_label_oracle(&mask);
            assert!(
                partitions_equal(got.labels(), &oracle),
                "partition mismatch at round {round}"
            );
            let max_oracle = oracle.iter().max().copied().unwrap_or(0) as usize;
            assert_eq!(got.object_count(), max_oracle);
        }
    }

    #[test]
    fn centroid_cases() {
        let mut one = BinaryMask::filled(8, 8, false).unwrap();
        one.set(0, 0, true);
        let pixels: Vec<u32> = vec![0];
        assert_eq!(object_centroid(&pixels, 8, 8).unwrap(), (0.0, 0.0));
        let all: Vec<u32> = (0..64).collect();
        let (cx, cy) = object_centroid(&all, 8, 8).unwrap();
        assert!((cx - 0.5).abs() < 1e-12 && (cy - 0.5).abs() < 1e-12);
        assert!(object_centroid(&[], 8, 8).is_err());
    }

    #[test]
    fn centroid_matches_mean_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.random_range(1..40usize);
            let pixels: Vec<u32> = (0..n).map(|_| rng.random_range(0..(16 * 12) as u32)).collect();
            let (cx, cy) = object_centroid(&pixels, 16, 12).unwrap();
            let mx: f64 = pixels.iter().map(|&i| (i % 16) as f64).sum::<f64>() / n as f64;
            let my: f64 = pixels.iter().map(|&i| (i / 16) as f64).sum::<f64>() / n as f64;
            assert!((cx - mx / 15.0).abs() < 1e-12);
            assert!((cy - my / 11.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn complement_is_involution(data in proptest::collection::vec(any::<u8>(), 64)) {
            let img = GrayImage::new(8, 8, data).unwrap();
            prop_assert_eq!(complement(&complement(&img)), img);
        }

        #[test]
        fn distance_is_lipschitz(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = random_mask(16, 16, 0.1, &mut rng);
            prop_assume!(mask.count_true() > 0);
            let d = distance_transform_l1(&mask).unwrap();
            for y in 0..16 {
                for x in 0..16 {
                    if x + 1 < 16 {
                        prop_assert!(d.get(x, y).abs_diff(d.get(x + 1, y)) <= 1);
                    }
                    if y + 1 < 16 {
                        prop_assert!(d.get(x, y).abs_diff(d.get(x, y + 1)) <= 1);
                    }
                }
            }
        }

        #[test]
        fn fill_holes_is_monotone_and_idempotent(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = random_mask(14, 14, 0.4, &mut rng);
            let filled = fill_holes(&mask);
            for (o, f) in mask.data().iter().zip(filled.data()) {
                prop_assert!(!o || *f);
            }
            prop_assert_eq!(fill_holes(&filled), filled);
        }

        #[test]
        fn components_partition_the_foreground(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = random_mask(16, 16, 0.5, &mut rng);
            let map = connected_components_8(&mask);
            let sizes: usize = map.objects().iter().map(Vec::len).sum();
            prop_assert_eq!(sizes, mask.count_true());
            for (l, &fg) in map.labels().iter().zip(mask.data()) {
                prop_assert_eq!(*l > 0, fg);
            }
        }

        #[test]
        fn normalize_is_idempotent_on_full_range(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut img = random_gray(10, 10, &mut rng);
            img.set(0, 0, 0);
            img.set(1, 0, 255);
            let once = normalize_to_unit(&img);
            let twice = normalize_to_unit(&once);
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
