//! Deterministic synthetic slice stacks with ground truth.
//!
//! Each slice renders, over a dark noisy background, an elliptical brain
//! made of: a bright thin skull ring, bright cortical ribbon arcs just under
//! it, a handful of small bright peri-cortical nodules (persistent across
//! slices, the classic near-skull false-positive source), a mid-intensity
//! white-matter field, dark ventricle lobes near the center, hyperintense
//! lesions spanning a few consecutive slices with slowly drifting centroids,
//! and optional single-slice decoy blobs for cross-slice validation tests.
//! Everything is reproducible from the seed, bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage};

pub const BACKGROUND_INTENSITY: f64 = 20.0;
pub const WM_INTENSITY: f64 = 140.0;
pub const SKULL_INTENSITY: f64 = 120.0;
pub const RIBBON_INTENSITY: f64 = 165.0;
pub const VENTRICLE_INTENSITY: f64 = 45.0;

/// One synthetic lesion: a disk of `radius` pixels around a normalized
/// center, present on `span_slices` consecutive slices starting at
/// `start_slice`, `intensity_boost` above the white-matter field.
#[derive(Debug, Clone, Copy)]
pub struct LesionSpec {
    pub center: (f64, f64),
    pub radius: f64,
    pub span_slices: usize,
    pub start_slice: usize,
    pub intensity_boost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VentricleShape {
    /// Two mirrored lobes.
    Simple,
    /// Four lobes forming an irregular outline.
    Lobed,
}

#[derive(Debug, Clone)]
pub struct PhantomConfig {
    pub width: usize,
    pub height: usize,
    pub slice_count: usize,
    pub rng_seed: u64,
    pub noise_sigma: f64,
    pub lesion_specs: Vec<LesionSpec>,
    pub ventricle_shape: VentricleShape,
    pub skull_ring: bool,
    /// Single-slice decoy blobs, for fine-detection rejection tests.
    pub decoy_count: usize,
    /// Persistent small bright spots near the brain boundary.
    pub boundary_spot_count: usize,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            width: 96,
            height: 112,
            slice_count: 12,
            rng_seed: 7,
            noise_sigma: 0.12,
            lesion_specs: default_lesions(),
            ventricle_shape: VentricleShape::Simple,
            skull_ring: true,
            decoy_count: 5,
            boundary_spot_count: 4,
        }
    }
}

/// Three lesions of increasing size on non-overlapping slice spans.
pub fn default_lesions() -> Vec<LesionSpec> {
    vec![
        LesionSpec {
            center: (0.60, 0.685),
            radius: 4.0,
            span_slices: 3,
            start_slice: 1,
            intensity_boost: 65.0,
        },
        LesionSpec {
            center: (0.40, 0.685),
            radius: 5.4,
            span_slices: 3,
            start_slice: 4,
            intensity_boost: 65.0,
        },
        LesionSpec {
            center: (0.50, 0.31),
            radius: 6.0,
            span_slices: 3,
            start_slice: 7,
            intensity_boost: 65.0,
        },
    ]
}

/// A single-slice decoy blob, with its rendered pixels.
#[derive(Debug, Clone)]
pub struct DecoySite {
    pub slice_index: usize,
    pub centroid: (f64, f64),
    pub pixels: Vec<u32>,
}

/// One lesion's footprint on one slice.
#[derive(Debug, Clone)]
pub struct LesionSite {
    pub lesion: usize,
    pub slice_index: usize,
    pub centroid: (f64, f64),
    pub pixels: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct PhantomStack {
    pub slices: Vec<GrayImage>,
    pub truth_brain: Vec<BinaryMask>,
    pub truth_ventricle: Vec<BinaryMask>,
    pub truth_lesion: Vec<BinaryMask>,
    pub lesion_sites: Vec<LesionSite>,
    pub decoys: Vec<DecoySite>,
}

struct Geometry {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
}

impl Geometry {
    fn of(config: &PhantomConfig) -> Self {
        Self {
            cx: (config.width - 1) as f64 / 2.0,
            cy: (config.height - 1) as f64 / 2.0,
            a: config.width as f64 * 0.40,
            b: config.height as f64 * 0.41,
        }
    }

    /// Elliptical radius: 1.0 on the brain outline.
    fn radial(&self, x: f64, y: f64) -> f64 {
        let dx = (x - self.cx) / self.a;
        let dy = (y - self.cy) / self.b;
        (dx * dx + dy * dy).sqrt()
    }

    /// Same, but against the ellipse shrunk by `inset` pixels on both axes.
    fn radial_inset(&self, x: f64, y: f64, inset: f64) -> f64 {
        let dx = (x - self.cx) / (self.a - inset);
        let dy = (y - self.cy) / (self.b - inset);
        (dx * dx + dy * dy).sqrt()
    }

    fn angle(&self, x: f64, y: f64) -> f64 {
        ((y - self.cy) / self.b).atan2((x - self.cx) / self.a)
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Fine-detection tolerance the decoy layout must clear.
const DECOY_CLEARANCE: f64 = 0.2; // 2 * the default distance threshold

/// Renders the stack. Errors when a lesion (including its drift) leaves the
/// white-matter zone or sits too close to ventricles or cortex, or when the
/// lesion contrast is below three noise sigmas.
pub fn generate(config: &PhantomConfig) -> Result<PhantomStack> {
    if config.slice_count == 0 {
        return Err(Error::InvalidParameter("phantom needs at least one slice".into()));
    }
    if config.noise_sigma < 0.0 {
        return Err(Error::InvalidParameter("noise sigma must be >= 0".into()));
    }
    let geo = Geometry::of(config);
    let (w, h) = (config.width, config.height);
    let norm = |x: f64, y: f64| (x / (w - 1) as f64, y / (h - 1) as f64);
    let denorm = |c: (f64, f64)| (c.0 * (w - 1) as f64, c.1 * (h - 1) as f64);

    let ventricle_lobes: Vec<(f64, f64, f64, f64)> = match config.ventricle_shape {
        // (center dx, center dy, semi x, semi y) in pixels around the middle
        VentricleShape::Simple => vec![(-8.0, 0.0, 6.0, 10.0), (8.0, 0.0, 6.0, 10.0)],
        VentricleShape::Lobed => vec![
            (-8.0, -6.0, 5.5, 7.0),
            (8.0, -6.0, 5.5, 7.0),
            (-6.0, 6.0, 4.5, 6.5),
            (6.0, 6.0, 4.5, 6.5),
        ],
    };
    let in_ventricle = |x: f64, y: f64| -> bool {
        ventricle_lobes.iter().any(|&(dx, dy, sa, sb)| {
            let ex = (x - (geo.cx + dx)) / sa;
            let ey = (y - (geo.cy + dy)) / sb;
            ex * ex + ey * ey <= 1.0
        })
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let noise = Normal::new(0.0, config.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();

    // Per-lesion drift directions; steps stay well under the fine-detection
    // tolerance so lesions keep matching across slices.
    let drifts: Vec<(f64, f64)> = config
        .lesion_specs
        .iter()
        .map(|_| {
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            (0.012 * angle.cos(), 0.012 * angle.sin())
        })
        .collect();

    // Lesion centers per (lesion, slice).
    let mut lesion_centers: Vec<Vec<(usize, (f64, f64))>> = Vec::new();
    for (li, spec) in config.lesion_specs.iter().enumerate() {
        if spec.intensity_boost < 3.0 * config.noise_sigma {
            return Err(Error::InfeasibleGeometry(format!(
                "lesion {li} boost {} below 3 sigma {}",
                spec.intensity_boost,
                3.0 * config.noise_sigma
            )));
        }
        let mut centers = Vec::new();
        for step in 0..spec.span_slices {
            let slice = spec.start_slice + step;
            if slice >= config.slice_count {
                return Err(Error::InfeasibleGeometry(format!(
                    "lesion {li} extends past the last slice"
                )));
            }
            let c = (
                spec.center.0 + drifts[li].0 * step as f64,
                spec.center.1 + drifts[li].1 * step as f64,
            );
            let (px, py) = denorm(c);
            // The whole disk must stay in white matter: inside the cortex
            // inset, outside the ventricles with margin.
            let reach = spec.radius + 1.0;
            if geo.radial_inset(px, py, 9.0) + reach / (geo.a - 9.0).min(geo.b - 9.0) >= 0.98 {
                return Err(Error::InfeasibleGeometry(format!(
                    "lesion {li} leaves the white-matter zone on slice {slice}"
                )));
            }
            if in_ventricle(px, py)
                || ventricle_lobes.iter().any(|&(dx, dy, sa, sb)| {
                    let ex = (px - (geo.cx + dx)) / (sa + reach);
                    let ey = (py - (geo.cy + dy)) / (sb + reach);
                    ex * ex + ey * ey <= 1.0
                })
            {
                return Err(Error::InfeasibleGeometry(format!(
                    "lesion {li} overlaps the ventricles on slice {slice}"
                )));
            }
            centers.push((slice, c));
        }
        lesion_centers.push(centers);
    }

    // Persistent boundary nodules between the ribbon arcs.
    let spot_centers: Vec<(f64, f64)> = (0..config.boundary_spot_count)
        .map(|i| {
            // The default four land on the diagonals, in the ribbon gaps,
            // shallow enough to stay under the distance cutoff.
            let angle = (i as f64 + 0.5) * std::f64::consts::TAU
                / config.boundary_spot_count.max(1) as f64;
            (
                geo.cx + 0.92 * geo.a * angle.cos(),
                geo.cy + 0.92 * geo.b * angle.sin(),
            )
        })
        .collect();

    // Decoys: one random slice each, deep inside the white matter, at least
    // DECOY_CLEARANCE away (on adjacent slices) from every lesion track,
    // nodule, and other decoy.
    let mut decoy_layout: Vec<(usize, (f64, f64))> = Vec::new();
    for _ in 0..config.decoy_count {
        let mut placed = false;
        for _attempt in 0..1000 {
            let slice = rng.random_range(0..config.slice_count);
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            let frac = 0.25 + 0.35 * rng.random::<f64>();
            let px = geo.cx + frac * geo.a * angle.cos();
            let py = geo.cy + frac * geo.b * angle.sin();
            if in_ventricle(px, py) {
                continue;
            }
            let reach = 3.5;
            if ventricle_lobes.iter().any(|&(dx, dy, sa, sb)| {
                let ex = (px - (geo.cx + dx)) / (sa + reach);
                let ey = (py - (geo.cy + dy)) / (sb + reach);
                ex * ex + ey * ey <= 1.0
            }) {
                continue;
            }
            let c = norm(px, py);
            let near_slice = |s: usize| -> bool { s.abs_diff(slice) <= 1 };
            let clash = lesion_centers.iter().flatten().any(|&(s, lc)| {
                near_slice(s) && dist(c, lc) < DECOY_CLEARANCE
            }) || decoy_layout
                .iter()
                .any(|&(s, dc)| near_slice(s) && dist(c, dc) < DECOY_CLEARANCE)
                || spot_centers
                    .iter()
                    .any(|&(sx, sy)| dist(c, norm(sx, sy)) < DECOY_CLEARANCE);
            if clash {
                continue;
            }
            decoy_layout.push((slice, c));
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::InfeasibleGeometry(
                "could not place a decoy clear of lesions and other decoys".into(),
            ));
        }
    }

    // Ribbon arcs: four 56-degree spans centered on the axes, where the
    // city-block boundary distance matches the perpendicular depth, so the
    // distance constraint sees them as boundary-hugging.
    const ARC_HALF_WIDTH: f64 = 0.489;
    let in_arc = |angle: f64| -> bool {
        let m = angle.rem_euclid(std::f64::consts::FRAC_PI_2);
        m <= ARC_HALF_WIDTH || m >= std::f64::consts::FRAC_PI_2 - ARC_HALF_WIDTH
    };

    let mut stack = PhantomStack {
        slices: Vec::with_capacity(config.slice_count),
        truth_brain: Vec::with_capacity(config.slice_count),
        truth_ventricle: Vec::with_capacity(config.slice_count),
        truth_lesion: Vec::with_capacity(config.slice_count),
        lesion_sites: Vec::new(),
        decoys: Vec::new(),
    };

    for slice in 0..config.slice_count {
        let mut base = vec![BACKGROUND_INTENSITY; w * h];
        let mut brain = vec![false; w * h];
        let mut vent = vec![false; w * h];
        let mut lesion = vec![false; w * h];

        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (fx, fy) = (x as f64, y as f64);
                if geo.radial(fx, fy) > 1.0 {
                    continue;
                }
                brain[i] = true;
                base[i] = WM_INTENSITY;
                if config.skull_ring && geo.radial_inset(fx, fy, 1.0) > 1.0 {
                    base[i] = SKULL_INTENSITY;
                } else if geo.radial_inset(fx, fy, 7.0) > 1.0 && in_arc(geo.angle(fx, fy)) {
                    base[i] = RIBBON_INTENSITY;
                } else if in_ventricle(fx, fy) {
                    base[i] = VENTRICLE_INTENSITY;
                    vent[i] = true;
                }
            }
        }

        for &(sx, sy) in &spot_centers {
            paint_disk(&mut base, w, h, (sx, sy), 2.0, RIBBON_INTENSITY);
        }

        for (li, centers) in lesion_centers.iter().enumerate() {
            for &(s, c) in centers {
                if s != slice {
                    continue;
                }
                let spec = &config.lesion_specs[li];
                let (px, py) = denorm(c);
                let pixels = paint_disk(
                    &mut base,
                    w,
                    h,
                    (px, py),
                    spec.radius,
                    WM_INTENSITY + spec.intensity_boost,
                );
                for &p in &pixels {
                    lesion[p as usize] = true;
                }
                stack.lesion_sites.push(LesionSite {
                    lesion: li,
                    slice_index: slice,
                    centroid: c,
                    pixels,
                });
            }
        }

        for &(s, c) in &decoy_layout {
            if s != slice {
                continue;
            }
            let (px, py) = denorm(c);
            let pixels = paint_disk(&mut base, w, h, (px, py), 2.2, WM_INTENSITY + 65.0);
            stack.decoys.push(DecoySite {
                slice_index: slice,
                centroid: c,
                pixels,
            });
        }

        let data: Vec<u8> = base
            .iter()
            .map(|&v| (v + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
            .collect();
        stack.slices.push(GrayImage::new(w, h, data)?);
        stack.truth_brain.push(BinaryMask::new(w, h, brain)?);
        stack.truth_ventricle.push(BinaryMask::new(w, h, vent)?);
        stack.truth_lesion.push(BinaryMask::new(w, h, lesion)?);
    }

    Ok(stack)
}

/// Hard-edged disk; returns the painted pixel indices.
fn paint_disk(
    base: &mut [f64],
    w: usize,
    h: usize,
    center: (f64, f64),
    radius: f64,
    value: f64,
) -> Vec<u32> {
    let mut pixels = Vec::new();
    let x0 = (center.0 - radius - 1.0).floor().max(0.0) as usize;
    let x1 = ((center.0 + radius + 1.0).ceil() as usize).min(w - 1);
    let y0 = (center.1 - radius - 1.0).floor().max(0.0) as usize;
    let y1 = ((center.1 + radius + 1.0).ceil() as usize).min(h - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - center.0;
            let dy = y as f64 - center.1;
            if dx * dx + dy * dy <= radius * radius {
                base[y * w + x] = value;
                pixels.push((y * w + x) as u32);
            }
        }
    }
    pixels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let config = PhantomConfig::default();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        for (sa, sb) in a.slices.iter().zip(&b.slices) {
            assert_eq!(sa.data(), sb.data());
        }
        let c = generate(&PhantomConfig {
            rng_seed: 8,
            ..config
        })
        .unwrap();
        assert!(
            a.slices
                .iter()
                .zip(&c.slices)
                .any(|(x, y)| x.data() != y.data()),
            "different seeds should differ"
        );
    }

    #[test]
    fn lesions_span_exactly_their_slices() {
        let stack = generate(&PhantomConfig::default()).unwrap();
        let nonempty: Vec<usize> = stack
            .truth_lesion
            .iter()
            .enumerate()
            .filter_map(|(i, m)| (m.count_true() > 0).then_some(i))
            .collect();
        assert_eq!(nonempty, vec![1, 2, 3, 4, 5, 6, 7, 8, 9]);
        for spec in default_lesions() {
            let sites: Vec<_> = stack
                .lesion_sites
                .iter()
                .filter(|s| {
                    (spec.start_slice..spec.start_slice + spec.span_slices)
                        .contains(&s.slice_index)
                })
                .collect();
            assert!(sites.len() >= spec.span_slices);
        }
    }

    #[test]
    fn wm_median_is_close_to_configured_mean() {
        let stack = generate(&PhantomConfig::default()).unwrap();
        let slice = &stack.slices[0];
        let brain = &stack.truth_brain[0];
        let vent = &stack.truth_ventricle[0];
        let mut values: Vec<u8> = Vec::new();
        for y in 0..slice.height() {
            for x in 0..slice.width() {
                if brain.get(x, y) && !vent.get(x, y) && slice.get(x, y) < 160 {
                    values.push(slice.get(x, y));
                }
            }
        }
        values.sort_unstable();
        let median = values[values.len() / 2] as f64;
        assert!(
            (median - WM_INTENSITY).abs() <= 2.0,
            "WM median {median} vs {WM_INTENSITY}"
        );
    }

    #[test]
    fn ventricles_darker_and_lesions_brighter_than_wm() {
        let stack = generate(&PhantomConfig::default()).unwrap();
        for (i, slice) in stack.slices.iter().enumerate() {
            for y in 0..slice.height() {
                for x in 0..slice.width() {
                    if stack.truth_ventricle[i].get(x, y) {
                        assert!((slice.get(x, y) as f64) < WM_INTENSITY - 50.0);
                    }
                    if stack.truth_lesion[i].get(x, y) {
                        assert!((slice.get(x, y) as f64) > WM_INTENSITY + 50.0);
                    }
                }
            }
        }
    }

    #[test]
    fn decoys_are_isolated_across_adjacent_slices() {
        let stack = generate(&PhantomConfig::default()).unwrap();
        assert_eq!(stack.decoys.len(), 5);
        for (i, a) in stack.decoys.iter().enumerate() {
            for b in stack.decoys.iter().skip(i + 1) {
                if a.slice_index.abs_diff(b.slice_index) <= 1 {
                    assert!(dist(a.centroid, b.centroid) >= DECOY_CLEARANCE);
                }
            }
            for site in &stack.lesion_sites {
                if a.slice_index.abs_diff(site.slice_index) <= 1 {
                    assert!(dist(a.centroid, site.centroid) >= DECOY_CLEARANCE);
                }
            }
        }
    }

    #[test]
    fn infeasible_lesions_error() {
        let mut config = PhantomConfig::default();
        config.lesion_specs[0].center = (0.02, 0.02); // outside the brain
        assert!(generate(&config).is_err());

        let mut config = PhantomConfig::default();
        config.lesion_specs[0].center = (0.5, 0.5); // on the ventricles
        assert!(generate(&config).is_err());

        let mut config = PhantomConfig::default();
        config.lesion_specs[0].start_slice = 11; // span runs off the stack
        assert!(generate(&config).is_err());

        let config = PhantomConfig {
            noise_sigma: 50.0, // boost below 3 sigma
            ..Default::default()
        };
        assert!(generate(&config).is_err());
    }
}
