//! Batch driver: runs coarse detection on every slice (optionally in
//! parallel) and fine validation across slices. Slice work is independent
//! and all randomness is seeded per slice, so output never depends on the
//! thread count.

use std::time::Instant;

use rayon::prelude::*;

use crate::coarse::{self, CandidateObject, CoarseResult, FilterParams};
use crate::error::{Error, Result};
use crate::fine::{fine_validate, FineParams, VolumeDetection};
use crate::image::{distance_transform_l1, BinaryMask, GrayImage};
use crate::mser::{detect_dark_regions, MserParams};
use crate::phantom::PhantomStack;
use crate::preprocess::{perona_malik, segregate_background, Conduction, DiffusionParams};
use crate::ventricle::{build_confidence, ga_select, score_regions, GaParams};

/// An ordered stack of slices plus whatever ground truth is available.
#[derive(Debug, Clone)]
pub struct SliceStack {
    pub stack_id: String,
    pub slices: Vec<GrayImage>,
    pub truth_lesion: Option<Vec<BinaryMask>>,
    pub truth_brain: Option<Vec<BinaryMask>>,
    pub pixel_spacing: Option<(f64, f64)>,
}

impl From<&PhantomStack> for SliceStack {
    fn from(p: &PhantomStack) -> Self {
        Self {
            stack_id: "phantom".into(),
            slices: p.slices.clone(),
            truth_lesion: Some(p.truth_lesion.clone()),
            truth_brain: Some(p.truth_brain.clone()),
            pixel_spacing: None,
        }
    }
}

/// Every tunable of the pipeline, overridable from a config file and CLI
/// flags of the same names.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub diffusion: bool,
    pub diffusion_iterations: usize,
    pub diffusion_lambda: f64,
    pub diffusion_kappa: f64,
    pub mser_delta: u8,
    pub mser_min_area_frac: f64,
    pub mser_max_area_frac: f64,
    pub mser_max_variation: f64,
    pub ga_population: usize,
    pub ga_generations: usize,
    pub ga_crossover_rate: f64,
    /// Zero means one expected flip per bitstring.
    pub ga_mutation_rate: f64,
    pub ga_elitism: usize,
    pub z_threshold: f64,
    pub dist_min: f64,
    pub size_constraint: bool,
    pub distance_constraint: bool,
    /// Zero disables the minimum-size ablation filter.
    pub min_lesion_size: usize,
    pub dth: f64,
    pub n_adjacent: usize,
    /// Zero uses all available cores.
    pub threads: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            diffusion: true,
            diffusion_iterations: 15,
            diffusion_lambda: 1.0 / 7.0,
            diffusion_kappa: 3.0,
            mser_delta: 5,
            mser_min_area_frac: 0.001,
            mser_max_area_frac: 0.25,
            mser_max_variation: 0.5,
            ga_population: 50,
            ga_generations: 100,
            ga_crossover_rate: 0.8,
            ga_mutation_rate: 0.0,
            ga_elitism: 2,
            z_threshold: 0.0,
            dist_min: 0.15,
            size_constraint: true,
            distance_constraint: true,
            min_lesion_size: 0,
            dth: 0.1,
            n_adjacent: 1,
            threads: 0,
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            size_constraint: self.size_constraint,
            distance_constraint: self.distance_constraint,
            dist_min: self.dist_min,
            min_size: (self.min_lesion_size > 0).then_some(self.min_lesion_size),
        }
    }

    pub fn fine_params(&self) -> FineParams {
        FineParams {
            d_threshold: self.dth,
            n_adjacent: self.n_adjacent,
        }
    }

    fn diffusion_params(&self) -> DiffusionParams {
        DiffusionParams {
            iterations: self.diffusion_iterations,
            lambda: self.diffusion_lambda,
            kappa: self.diffusion_kappa,
            conduction: Conduction::Rational,
        }
    }

    fn mser_params(&self, width: usize, height: usize) -> MserParams {
        let n = (width * height) as f64;
        MserParams {
            delta: self.mser_delta,
            min_area: ((self.mser_min_area_frac * n).round() as usize).max(1),
            max_area: ((self.mser_max_area_frac * n).round() as usize).min(width * height),
            max_variation: self.mser_max_variation,
        }
    }

    fn ga_params(&self, slice_index: usize) -> GaParams {
        GaParams {
            population: self.ga_population,
            generations: self.ga_generations,
            crossover_rate: self.ga_crossover_rate,
            mutation_rate: (self.ga_mutation_rate > 0.0).then_some(self.ga_mutation_rate),
            elitism: self.ga_elitism,
            rng_seed: self.seed.wrapping_add(slice_index as u64),
        }
    }
}

/// Coarse products of one slice. A slice that could not be processed (flat
/// intensities, empty contour, too few samples) is kept with a skip reason
/// and no candidates rather than failing the volume.
#[derive(Debug, Clone)]
pub struct SliceOutcome {
    pub slice_index: usize,
    pub skipped: Option<String>,
    pub foreground: BinaryMask,
    pub ventricle_mask: BinaryMask,
    pub candidates: Vec<CandidateObject>,
    pub candidate_mask: BinaryMask,
    pub wm_median: Option<f64>,
    pub wm_mad: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct StageTiming {
    pub coarse_ms_per_slice: f64,
    pub fine_ms_per_slice: f64,
    pub total_ms: f64,
    pub slice_count: usize,
}

#[derive(Debug, Clone)]
pub struct StackDetection {
    pub slices: Vec<SliceOutcome>,
    pub volume: VolumeDetection,
    /// Per-slice union of fine-confirmed candidate pixels.
    pub confirmed_masks: Vec<BinaryMask>,
    pub timing: StageTiming,
}

fn empty_outcome(slice_index: usize, w: usize, h: usize, reason: String) -> SliceOutcome {
    let empty = BinaryMask::filled(w, h, false).expect("valid dims");
    SliceOutcome {
        slice_index,
        skipped: Some(reason),
        foreground: empty.clone(),
        ventricle_mask: empty.clone(),
        candidates: Vec::new(),
        candidate_mask: empty,
        wm_median: None,
        wm_mad: None,
    }
}

/// Runs the whole coarse stage on one slice.
pub fn coarse_slice(img: &GrayImage, slice_index: usize, cfg: &RunConfig) -> Result<SliceOutcome> {
    let (w, h) = (img.width(), img.height());
    let working = if cfg.diffusion {
        perona_malik(img, &cfg.diffusion_params())?
    } else {
        img.clone()
    };

    let pre = match segregate_background(&working) {
        Ok(pre) => pre,
        Err(Error::ConstantImage) => {
            return Ok(empty_outcome(slice_index, w, h, "flat slice".into()))
        }
        Err(e) => return Err(e),
    };
    if pre.background.count_true() == 0 {
        return Ok(empty_outcome(
            slice_index,
            w,
            h,
            "no background detected".into(),
        ));
    }

    let boundary_dist = distance_transform_l1(&pre.background)?;
    let ctx = build_confidence(&pre)?;
    let regions = detect_dark_regions(&pre.cleaned, &cfg.mser_params(w, h))?;
    let scored = score_regions(regions, &ctx);
    let ventricle_mask = if scored.is_empty() {
        BinaryMask::filled(w, h, false)?
    } else {
        ga_select(&scored, w, h, &cfg.ga_params(slice_index))?.mask
    };

    let coarse: CoarseResult = match coarse_detect(
        &pre.cleaned,
        &pre.foreground,
        &boundary_dist,
        &ventricle_mask,
        cfg,
    ) {
        Ok(c) => c,
        Err(Error::EmptyContour) | Err(Error::TooFewSamples { .. }) => {
            return Ok(empty_outcome(
                slice_index,
                w,
                h,
                "white matter could not be sampled".into(),
            ))
        }
        Err(e) => return Err(e),
    };

    let candidate_mask = coarse::candidates_to_mask(&coarse.candidates, w, h);
    Ok(SliceOutcome {
        slice_index,
        skipped: None,
        foreground: pre.foreground,
        ventricle_mask,
        candidates: coarse.candidates,
        candidate_mask,
        wm_median: Some(coarse.stats.median),
        wm_mad: Some(coarse.stats.mad),
    })
}

fn coarse_detect(
    cleaned: &GrayImage,
    brain: &BinaryMask,
    boundary_dist: &crate::image::DistanceMap,
    ventricles: &BinaryMask,
    cfg: &RunConfig,
) -> Result<CoarseResult> {
    coarse::coarse_detect(
        cleaned,
        brain,
        boundary_dist,
        ventricles,
        cfg.z_threshold,
        &cfg.filter_params(),
    )
}

/// Detects the whole stack: coarse per slice (parallel up to the configured
/// thread count), then sequential fine validation.
pub fn detect_stack(stack: &SliceStack, cfg: &RunConfig) -> Result<StackDetection> {
    if stack.slices.is_empty() {
        return Err(Error::InvalidParameter("stack has no slices".into()));
    }
    let t_start = Instant::now();
    let run_coarse = || -> Result<Vec<SliceOutcome>> {
        stack
            .slices
            .par_iter()
            .enumerate()
            .map(|(i, img)| coarse_slice(img, i, cfg))
            .collect()
    };
    let outcomes = if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(run_coarse)?
    } else {
        run_coarse()?
    };
    let coarse_elapsed = t_start.elapsed();

    let t_fine = Instant::now();
    let per_slice: Vec<(usize, Vec<CandidateObject>)> = outcomes
        .iter()
        .map(|o| (o.slice_index, o.candidates.clone()))
        .collect();
    let volume = fine_validate(&per_slice, &cfg.fine_params());
    let fine_elapsed = t_fine.elapsed();

    let (w, h) = (stack.slices[0].width(), stack.slices[0].height());
    let confirmed_masks: Vec<BinaryMask> = volume
        .per_slice
        .iter()
        .map(|s| coarse::candidates_to_mask(&s.confirmed, w, h))
        .collect();

    let n = stack.slices.len() as f64;
    let timing = StageTiming {
        coarse_ms_per_slice: coarse_elapsed.as_secs_f64() * 1000.0 / n,
        fine_ms_per_slice: fine_elapsed.as_secs_f64() * 1000.0 / n,
        total_ms: t_start.elapsed().as_secs_f64() * 1000.0,
        slice_count: stack.slices.len(),
    };

    Ok(StackDetection {
        slices: outcomes,
        volume,
        confirmed_masks,
        timing,
    })
}
