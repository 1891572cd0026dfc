//! Cross-slice validation of coarse candidates. A detection is kept only
//! when a nearby detection exists on an adjacent slice, since real lesions
//! persist across slices while noise does not.

use crate::coarse::CandidateObject;

/// Validation parameters: the normalized centroid distance tolerance and how
/// many slices on each side may confirm a candidate.
#[derive(Debug, Clone, Copy)]
pub struct FineParams {
    pub d_threshold: f64,
    pub n_adjacent: usize,
}

impl Default for FineParams {
    fn default() -> Self {
        Self {
            d_threshold: 0.1,
            n_adjacent: 1,
        }
    }
}

/// Candidates of one slice split into confirmed and rejected sets.
#[derive(Debug, Clone)]
pub struct SliceValidation {
    pub slice_index: usize,
    pub confirmed: Vec<CandidateObject>,
    pub rejected: Vec<CandidateObject>,
}

/// A likely occluded detection: confirmed neighbors flank an empty slice, so
/// the gap is annotated at the interpolated centroid. No pixels are invented.
#[derive(Debug, Clone)]
pub struct RecoveredSite {
    pub slice_index: usize,
    pub centroid: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct VolumeDetection {
    pub per_slice: Vec<SliceValidation>,
    pub recovered: Vec<RecoveredSite>,
    /// Set when the volume had a single slice and nothing could be validated.
    pub unvalidated: bool,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Partitions each slice's candidates by adjacent-slice support: a candidate
/// is confirmed when any candidate on one of the `n_adjacent` nearest slices
/// on either side lies within `d_threshold` in normalized coordinates.
/// Boundary slices use only their existing neighbors; a single-slice volume
/// confirms everything and is flagged unvalidated.
pub fn fine_validate(
    coarse_per_slice: &[(usize, Vec<CandidateObject>)],
    params: &FineParams,
) -> VolumeDetection {
    let n = coarse_per_slice.len();
    if n == 1 {
        let (slice_index, candidates) = &coarse_per_slice[0];
        return VolumeDetection {
            per_slice: vec![SliceValidation {
                slice_index: *slice_index,
                confirmed: candidates.clone(),
                rejected: Vec::new(),
            }],
            recovered: Vec::new(),
            unvalidated: true,
        };
    }

    let mut per_slice = Vec::with_capacity(n);
    for (k, (slice_index, candidates)) in coarse_per_slice.iter().enumerate() {
        let mut confirmed = Vec::new();
        let mut rejected = Vec::new();
        for cand in candidates {
            let mut supported = false;
            'search: for offset in 1..=params.n_adjacent {
                for pos in [k.checked_sub(offset), k.checked_add(offset)] {
                    let Some(pos) = pos else { continue };
                    let Some((_, neighbors)) = coarse_per_slice.get(pos) else {
                        continue;
                    };
                    if neighbors
                        .iter()
                        .any(|other| dist(cand.centroid, other.centroid) <= params.d_threshold)
                    {
                        supported = true;
                        break 'search;
                    }
                }
            }
            if supported {
                confirmed.push(cand.clone());
            } else {
                rejected.push(cand.clone());
            }
        }
        per_slice.push(SliceValidation {
            slice_index: *slice_index,
            confirmed,
            rejected,
        });
    }

    // Recover gaps: confirmed detections on both flanks, close to each
    // other, with nothing confirmed in between.
    let mut recovered = Vec::new();
    for k in 1..n.saturating_sub(1) {
        let mut sites: Vec<(f64, f64)> = Vec::new();
        for below in &per_slice[k - 1].confirmed {
            for above in &per_slice[k + 1].confirmed {
                if dist(below.centroid, above.centroid) > params.d_threshold {
                    continue;
                }
                let mid = (
                    (below.centroid.0 + above.centroid.0) / 2.0,
                    (below.centroid.1 + above.centroid.1) / 2.0,
                );
                let already_confirmed = per_slice[k]
                    .confirmed
                    .iter()
                    .any(|c| dist(c.centroid, mid) <= params.d_threshold);
                let already_recovered = sites
                    .iter()
                    .any(|&s| dist(s, mid) <= params.d_threshold / 2.0);
                if !already_confirmed && !already_recovered {
                    sites.push(mid);
                }
            }
        }
        let slice_index = per_slice[k].slice_index;
        recovered.extend(sites.into_iter().map(|centroid| RecoveredSite {
            slice_index,
            centroid,
        }));
    }

    VolumeDetection {
        per_slice,
        recovered,
        unvalidated: false,
    }
}
