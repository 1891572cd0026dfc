//! Ventricle selection: confidence scoring of extremal regions and
//! genetic-algorithm subset selection.
//!
//! A region's confidence is the mean, over its pixels, of the product of two
//! normalized cues: distance from the brain boundary (ventricles sit near the
//! center) and inverted intensity (ventricles are dark in T1). The subset of
//! regions forming the ventricles is chosen by maximizing
//! `fitness = count * product of confidences` over bitstrings with a seeded
//! generational GA, so the result is reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{
    complement, distance_transform_l1, hadamard, normalize_to_unit, BinaryMask, UnitImage,
};
use crate::mser::ExtremalRegion;
use crate::preprocess::PreprocessResult;

/// Normalized cue maps shared by region scoring.
#[derive(Debug, Clone)]
pub struct ConfidenceContext {
    /// Distance to the nearest background pixel, min-max normalized.
    pub boundary_distance: UnitImage,
    /// Normalized complement of the working image.
    pub inverted: UnitImage,
    /// Normalized Hadamard product of the two cues.
    pub confidence: UnitImage,
}

/// Builds the confidence maps from a preprocessed slice.
pub fn build_confidence(pre: &PreprocessResult) -> Result<ConfidenceContext> {
    let raw = distance_transform_l1(&pre.background)?;
    let boundary_distance = normalize_to_unit(&raw);
    // The background was whitened, so its complement is already zero and the
    // inverted map keeps only brain structure.
    let inverted = normalize_to_unit(&complement(&pre.cleaned));
    let confidence = hadamard(&boundary_distance, &inverted)?;
    Ok(ConfidenceContext {
        boundary_distance,
        inverted,
        confidence,
    })
}

/// A region annotated with its mean confidence.
#[derive(Debug, Clone)]
pub struct ScoredRegion {
    pub region: ExtremalRegion,
    pub confidence: f64,
}

/// Annotates each region with the mean confidence over its pixels.
pub fn score_regions(regions: Vec<ExtremalRegion>, ctx: &ConfidenceContext) -> Vec<ScoredRegion> {
    regions
        .into_iter()
        .map(|region| {
            let sum: f64 = region
                .pixels
                .iter()
                .map(|&i| ctx.confidence.data()[i as usize] as f64)
                .sum();
            let confidence = sum / region.pixels.len() as f64;
            ScoredRegion { region, confidence }
        })
        .collect()
}

/// GA hyperparameters. `mutation_rate: None` means one expected flip per
/// individual (`1 / bit length`).
#[derive(Debug, Clone, Copy)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
    pub rng_seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 100,
            crossover_rate: 0.8,
            mutation_rate: None,
            elitism: 2,
            rng_seed: 42,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParameter("ga population must be >= 2".into()));
        }
        if self.elitism >= self.population {
            return Err(Error::InvalidParameter(
                "ga elitism must be below the population size".into(),
            ));
        }
        for (name, p) in [
            ("crossover_rate", Some(self.crossover_rate)),
            ("mutation_rate", self.mutation_rate),
        ] {
            if let Some(p) = p {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "ga {name} must be a probability, got {p}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Selection count times the product of selected confidences; an empty
/// selection scores zero.
pub fn fitness(bits: &[bool], scored: &[ScoredRegion]) -> f64 {
    debug_assert_eq!(bits.len(), scored.len());
    let mut count = 0usize;
    let mut product = 1.0f64;
    for (bit, region) in bits.iter().zip(scored) {
        if *bit {
            count += 1;
            product *= region.confidence;
        }
    }
    if count == 0 {
        0.0
    } else {
        count as f64 * product
    }
}

/// Result of the GA search.
#[derive(Debug, Clone)]
pub struct VentricleSelection {
    /// Chosen regions, in region order.
    pub selected: Vec<ScoredRegion>,
    /// Best bitstring found.
    pub bits: Vec<bool>,
    pub fitness: f64,
    /// Union of the selected regions' pixels.
    pub mask: BinaryMask,
    /// Best-ever fitness after each generation; non-decreasing.
    pub best_per_generation: Vec<f64>,
}

/// Runs the generational GA (tournament of two, single-point crossover,
/// per-bit mutation, elitism) over region subsets. The initial population
/// seeds the all-ones string, so every detected region starts included, plus
/// the single best-confidence region; the rest is random.
pub fn ga_select(
    scored: &[ScoredRegion],
    width: usize,
    height: usize,
    params: &GaParams,
) -> Result<VentricleSelection> {
    params.validate()?;
    if scored.is_empty() {
        return Err(Error::InvalidParameter(
            "ga_select needs at least one scored region".into(),
        ));
    }
    let bits_len = scored.len();
    let mutation = params.mutation_rate.unwrap_or(1.0 / bits_len as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let mut population: Vec<Vec<bool>> = Vec::with_capacity(params.population);
    population.push(vec![true; bits_len]);
    let best = scored
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            a.confidence
                .partial_cmp(&b.confidence)
                .unwrap()
                .then(j.cmp(i))
        })
        .map(|(i, _)| i)
        .unwrap();
    let mut single = vec![false; bits_len];
    single[best] = true;
    population.push(single);
    while population.len() < params.population {
        population.push((0..bits_len).map(|_| rng.random_bool(0.5)).collect());
    }
    population.truncate(params.population);

    let mut best_bits = population[0].clone();
    let mut best_fit = fitness(&best_bits, scored);
    let mut best_per_generation = Vec::with_capacity(params.generations);

    for _ in 0..params.generations {
        let fits: Vec<f64> = population.iter().map(|b| fitness(b, scored)).collect();
        for (bits, &fit) in population.iter().zip(&fits) {
            if fit > best_fit {
                best_fit = fit;
                best_bits = bits.clone();
            }
        }
        best_per_generation.push(best_fit);

        // Elites first, ranked by fitness with index as the tie-break.
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| fits[b].partial_cmp(&fits[a]).unwrap().then(a.cmp(&b)));
        let mut next: Vec<Vec<bool>> = order[..params.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();

        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let a = rng.random_range(0..population.len());
            let b = rng.random_range(0..population.len());
            if fits[b] > fits[a] {
                b
            } else {
                a
            }
        };
        while next.len() < params.population {
            let pa = tournament(&mut rng);
            let pb = tournament(&mut rng);
            let mut child = if bits_len > 1 && rng.random_bool(params.crossover_rate) {
                let point = rng.random_range(1..bits_len);
                let mut c = population[pa][..point].to_vec();
                c.extend_from_slice(&population[pb][point..]);
                c
            } else {
                population[pa].clone()
            };
            for bit in child.iter_mut() {
                if rng.random_bool(mutation) {
                    *bit = !*bit;
                }
            }
            next.push(child);
        }
        population = next;
    }

    let fits: Vec<f64> = population.iter().map(|b| fitness(b, scored)).collect();
    for (bits, &fit) in population.iter().zip(&fits) {
        if fit > best_fit {
            best_fit = fit;
            best_bits = bits.clone();
        }
    }

    let mut mask = BinaryMask::filled(width, height, false)?;
    let mut selected = Vec::new();
    for (bit, region) in best_bits.iter().zip(scored) {
        if *bit {
            for &i in &region.region.pixels {
                mask.set(i as usize % width, i as usize / width, true);
            }
            selected.push(region.clone());
        }
    }
    Ok(VentricleSelection {
        selected,
        bits: best_bits,
        fitness: best_fit,
        mask,
        best_per_generation,
    })
}
