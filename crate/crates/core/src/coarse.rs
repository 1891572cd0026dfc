//! Per-slice candidate detection: sample white-matter intensities through the
//! contour equidistant from ventricles and brain boundary, flag modified
//! Z-score outliers, and filter the resulting objects by size and distance
//! heuristics.

use crate::error::{Error, Result};
use crate::image::{
    connected_components_8, distance_transform_l1, fill_holes, normalize_to_unit, object_centroid,
    BinaryMask, DistanceMap, GrayImage, UnitImage,
};

/// Robust statistics of the sampled white-matter intensities.
#[derive(Debug, Clone, Copy)]
pub struct WmStats {
    pub median: f64,
    /// Median absolute deviation from the median.
    pub mad: f64,
    pub sample_count: usize,
}

/// Fewest intensity samples accepted for the median/MAD estimate.
pub const MIN_WM_SAMPLES: usize = 16;

/// One connected hyperintensity object.
#[derive(Debug, Clone)]
pub struct CandidateObject {
    /// Linear pixel indices, ascending.
    pub pixels: Vec<u32>,
    pub size: usize,
    /// Centroid in normalized `[0,1]^2` coordinates.
    pub centroid: (f64, f64),
    /// Mean normalized boundary distance over the object's pixels.
    pub mean_dp: f64,
}

/// Candidate filtering switches. Both constraints default to on; the minimum
/// lesion size is an ablation knob and stays off unless asked for.
#[derive(Debug, Clone, Copy)]
pub struct FilterParams {
    pub size_constraint: bool,
    pub distance_constraint: bool,
    /// Objects with mean normalized boundary distance below this are dropped.
    pub dist_min: f64,
    pub min_size: Option<usize>,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            size_constraint: true,
            distance_constraint: true,
            dist_min: 0.15,
            min_size: None,
        }
    }
}

/// Everything the fine stage needs from one slice.
#[derive(Debug, Clone)]
pub struct CoarseResult {
    pub candidates: Vec<CandidateObject>,
    pub wm_mask: BinaryMask,
    pub candidate_mask: BinaryMask,
    pub stats: WmStats,
}

/// Pixels whose raw distance to the background differs from their raw
/// distance to the ventricles by at most one pixel: a closed band roughly
/// halfway between the two. With no ventricles the band falls back to half
/// the maximal boundary distance.
pub fn annulus_contour(
    boundary_dist: &DistanceMap,
    ventricles: &BinaryMask,
    brain: &BinaryMask,
) -> BinaryMask {
    let (w, h) = (brain.width(), brain.height());
    if ventricles.count_true() == 0 {
        let half = boundary_dist.max() as f64 / 2.0;
        return BinaryMask::from_fn(w, h, |x, y| {
            brain.get(x, y) && (boundary_dist.get(x, y) as f64 - half).abs() <= 1.0
        })
        .expect("same shape as brain");
    }
    let vent_dist = distance_transform_l1(ventricles).expect("ventricle mask is non-empty");
    BinaryMask::from_fn(w, h, |x, y| {
        brain.get(x, y) && boundary_dist.get(x, y).abs_diff(vent_dist.get(x, y)) <= 1
    })
    .expect("same shape as brain")
}

/// Region enclosed by the contour, with the ventricles punched out and
/// clipped to the brain. Errors when the contour is empty, since the slice
/// can then not be sampled.
pub fn wm_sample_mask(
    contour: &BinaryMask,
    ventricles: &BinaryMask,
    brain: &BinaryMask,
) -> Result<BinaryMask> {
    if contour.count_true() == 0 {
        return Err(Error::EmptyContour);
    }
    let enclosed = fill_holes(contour);
    BinaryMask::from_fn(contour.width(), contour.height(), |x, y| {
        enclosed.get(x, y) && !ventricles.get(x, y) && brain.get(x, y)
    })
}

/// Median and MAD of the intensities under the sample mask. Even-sized
/// samples use the mean of the two middle values.
pub fn wm_stats(img: &GrayImage, wm_mask: &BinaryMask) -> Result<WmStats> {
    let mut samples: Vec<u8> = img
        .data()
        .iter()
        .zip(wm_mask.data())
        .filter_map(|(&v, &m)| m.then_some(v))
        .collect();
    if samples.len() < MIN_WM_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: MIN_WM_SAMPLES,
        });
    }
    samples.sort_unstable();
    let median = median_of_sorted(&samples);
    let mut deviations: Vec<f64> = samples.iter().map(|&v| (v as f64 - median).abs()).collect();
    deviations.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mad = median_of_sorted_f64(&deviations);
    Ok(WmStats {
        median,
        mad,
        sample_count: samples.len(),
    })
}

fn median_of_sorted(sorted: &[u8]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

fn median_of_sorted_f64(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Modified Z-score of one gray value.
pub fn modified_z_score(value: f64, stats: &WmStats) -> f64 {
    0.6745 * (value - stats.median) / stats.mad
}

/// Brain pixels whose modified Z-score exceeds `z_threshold`. Scores are
/// signed, so ventricle remnants (below the median) are never flagged. When
/// the MAD is zero the score degenerates and the test falls back to the sign
/// of `g - median`.
pub fn hyperintensity_mask(
    img: &GrayImage,
    stats: &WmStats,
    brain: &BinaryMask,
    z_threshold: f64,
) -> BinaryMask {
    BinaryMask::from_fn(img.width(), img.height(), |x, y| {
        if !brain.get(x, y) {
            return false;
        }
        let g = img.get(x, y) as f64;
        if stats.mad > 0.0 {
            modified_z_score(g, stats) > z_threshold
        } else {
            g > stats.median
        }
    })
    .expect("same shape as image")
}

/// Two-cluster 1-D K-means over object sizes, centroids seeded with the
/// smallest and largest size. Returns per-object membership in the small
/// cluster. Degenerate inputs (one object, or all sizes equal) count as
/// entirely small.
fn small_cluster(sizes: &[usize]) -> Vec<bool> {
    let lo = *sizes.iter().min().unwrap() as f64;
    let hi = *sizes.iter().max().unwrap() as f64;
    if sizes.len() < 2 || lo == hi {
        return vec![true; sizes.len()];
    }
    let mut c_small = lo;
    let mut c_big = hi;
    let mut assign = vec![false; sizes.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (i, &s) in sizes.iter().enumerate() {
            let s = s as f64;
            // Ties go to the small cluster.
            let is_small = (s - c_small).abs() <= (s - c_big).abs();
            if assign[i] != is_small {
                assign[i] = is_small;
                changed = true;
            }
        }
        let (mut sum_s, mut n_s, mut sum_b, mut n_b) = (0.0, 0usize, 0.0, 0usize);
        for (i, &s) in sizes.iter().enumerate() {
            if assign[i] {
                sum_s += s as f64;
                n_s += 1;
            } else {
                sum_b += s as f64;
                n_b += 1;
            }
        }
        if n_s > 0 {
            c_small = sum_s / n_s as f64;
        }
        if n_b > 0 {
            c_big = sum_b / n_b as f64;
        }
        if !changed {
            break;
        }
    }
    assign
}

/// Labels the candidate mask and discards unlikely objects:
/// with the size constraint on, the top 5% largest objects go first (skull
/// segments), then the K-means "big" cluster; with the distance constraint
/// on, objects whose mean normalized boundary distance is below `dist_min`
/// go as well. An optional minimum size drops small objects last.
pub fn filter_candidates(
    candidate_mask: &BinaryMask,
    boundary_unit: &UnitImage,
    params: &FilterParams,
) -> Vec<CandidateObject> {
    let map = connected_components_8(candidate_mask);
    let objects = map.objects();
    if objects.is_empty() {
        return Vec::new();
    }
    let mut keep: Vec<bool> = vec![true; objects.len()];

    if params.size_constraint {
        // Rank by size, largest first, label order as tie-break.
        let mut order: Vec<usize> = (0..objects.len()).collect();
        order.sort_by(|&a, &b| objects[b].len().cmp(&objects[a].len()).then(a.cmp(&b)));
        let discard = (objects.len() as f64 * 0.05).ceil() as usize;
        for &i in order.iter().take(discard) {
            keep[i] = false;
        }
        let survivors: Vec<usize> = (0..objects.len()).filter(|&i| keep[i]).collect();
        if !survivors.is_empty() {
            let sizes: Vec<usize> = survivors.iter().map(|&i| objects[i].len()).collect();
            for (&i, &small) in survivors.iter().zip(small_cluster(&sizes).iter()) {
                if !small {
                    keep[i] = false;
                }
            }
        }
    }

    let width = candidate_mask.width();
    let height = candidate_mask.height();
    let mut out = Vec::new();
    for (i, pixels) in objects.into_iter().enumerate() {
        if !keep[i] {
            continue;
        }
        let mean_dp = pixels
            .iter()
            .map(|&p| boundary_unit.data()[p as usize] as f64)
            .sum::<f64>()
            / pixels.len() as f64;
        if params.distance_constraint && mean_dp < params.dist_min {
            continue;
        }
        if let Some(min_size) = params.min_size {
            if pixels.len() < min_size {
                continue;
            }
        }
        let centroid = object_centroid(&pixels, width, height).expect("object is non-empty");
        out.push(CandidateObject {
            size: pixels.len(),
            centroid,
            mean_dp,
            pixels,
        });
    }
    out
}

/// Union of the candidates' pixels as a mask.
pub fn candidates_to_mask(
    candidates: &[CandidateObject],
    width: usize,
    height: usize,
) -> BinaryMask {
    let mut mask = BinaryMask::filled(width, height, false).expect("valid dims");
    for c in candidates {
        for &p in &c.pixels {
            mask.set(p as usize % width, p as usize / width, true);
        }
    }
    mask
}

/// Runs the full coarse stage for one slice, given the preprocessing and
/// ventricle products.
pub fn coarse_detect(
    cleaned: &GrayImage,
    brain: &BinaryMask,
    boundary_dist: &DistanceMap,
    ventricles: &BinaryMask,
    z_threshold: f64,
    filter: &FilterParams,
) -> Result<CoarseResult> {
    let contour = annulus_contour(boundary_dist, ventricles, brain);
    let wm_mask = wm_sample_mask(&contour, ventricles, brain)?;
    let stats = wm_stats(cleaned, &wm_mask)?;
    let candidate_mask = hyperintensity_mask(cleaned, &stats, brain, z_threshold);
    let boundary_unit = normalize_to_unit(boundary_dist);
    let candidates = filter_candidates(&candidate_mask, &boundary_unit, filter);
    Ok(CoarseResult {
        candidates,
        wm_mask,
        candidate_mask,
        stats,
    })
}
