//! Maximally stable extremal region detection for dark blobs.
//!
//! The detector sweeps the lower level sets `{p : I(p) <= t}` for
//! `t = 0..=255` with a single flood-fill pass over the image (boundary heap
//! plus component stack), so dark-on-bright blobs are found in one traversal
//! instead of 256 thresholdings. Components are 4-connected.
//!
//! Semantics are pinned down so an exhaustive threshold-sweep oracle can
//! reproduce the output bit for bit:
//!
//! * Every component has a canonical *seed*: its pixel with minimal
//!   `(intensity, linear index)`. A *branch* is the run of levels over which
//!   a seed stays canonical; when two components join, the branch of the
//!   lexicographically smaller seed continues and the other branch ends at
//!   the joining level.
//! * With `h[j]` the component size at level `j` along a seed's branch
//!   (zero below its birth level), the relative area variation at level `t`
//!   is `q(t) = (h[t+delta] - h[t-delta]) / h[t]`.
//! * A region is emitted at `t` when `q(t) <= max_variation`, the size is
//!   within `[min_area, max_area]`, and `q` attains a local minimum there:
//!   `q(t) < q(t-1)` (or `t` is the branch birth) and `q(t) <= q(t+1)`,
//!   where the `t+1` value follows the canonical branch. Emissions with an
//!   identical pixel set are deduplicated, keeping the most stable level.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Detector parameters. There is no universal default; these are sized for
/// ventricle-scale blobs in 96x112 slices (fractions of the pixel count are
/// resolved by the pipeline).
#[derive(Debug, Clone, Copy)]
pub struct MserParams {
    /// Level offset used by the stability test.
    pub delta: u8,
    /// Smallest region size kept, in pixels.
    pub min_area: usize,
    /// Largest region size kept, in pixels.
    pub max_area: usize,
    /// Upper bound on the relative area variation.
    pub max_variation: f64,
}

impl MserParams {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.delta == 0 {
            return Err(Error::InvalidParameter("mser delta must be >= 1".into()));
        }
        if self.min_area == 0 || self.min_area >= self.max_area {
            return Err(Error::InvalidParameter(
                "mser areas must satisfy 0 < min_area < max_area".into(),
            ));
        }
        if self.max_area > width * height {
            return Err(Error::InvalidParameter(
                "mser max_area exceeds the pixel count".into(),
            ));
        }
        if self.max_variation < 0.0 {
            return Err(Error::InvalidParameter(
                "mser max_variation must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One detected region: a 4-connected component of a lower level set.
#[derive(Debug, Clone)]
pub struct ExtremalRegion {
    /// Linear pixel indices, ascending.
    pub pixels: Vec<u32>,
    pub size: usize,
    /// Relative area variation at the emitted level; lower is more stable.
    pub stability: f64,
    /// Threshold level the region was emitted at.
    pub seed_level: u8,
    /// Canonical seed pixel of the component.
    pub seed: u32,
}

const ROOT_DEATH: i32 = 256;

#[derive(Debug)]
struct Branch {
    seed: u32,
    birth: i32,
    death: i32,
    parent: Option<u32>,
    /// `(from_level, size)` checkpoints; a checkpoint holds until the next one.
    history: Vec<(i32, u32)>,
}

struct Component {
    level: i32,
    size: u32,
    seed_intensity: u8,
    seed_index: u32,
    branch: u32,
    history: Vec<(i32, u32)>,
}

impl Component {
    fn new(level: i32, branch: u32) -> Self {
        Self {
            level,
            size: 0,
            seed_intensity: u8::MAX,
            seed_index: u32::MAX,
            branch,
            history: Vec::new(),
        }
    }

    fn accumulate(&mut self, idx: u32, intensity: u8) {
        self.size += 1;
        if (intensity, idx) < (self.seed_intensity, self.seed_index) {
            self.seed_intensity = intensity;
            self.seed_index = idx;
        }
    }
}

/// Per-level LIFO stacks of pending boundary pixels.
struct BoundaryHeap {
    stacks: Vec<Vec<u32>>,
    lowest: usize,
    len: usize,
}

impl BoundaryHeap {
    fn new() -> Self {
        Self {
            stacks: vec![Vec::new(); 256],
            lowest: 256,
            len: 0,
        }
    }

    fn push(&mut self, level: u8, idx: u32) {
        self.stacks[level as usize].push(idx);
        self.lowest = self.lowest.min(level as usize);
        self.len += 1;
    }

    fn pop(&mut self) -> Option<(u8, u32)> {
        if self.len == 0 {
            return None;
        }
        while self.stacks[self.lowest].is_empty() {
            self.lowest += 1;
        }
        self.len -= 1;
        Some((self.lowest as u8, self.stacks[self.lowest].pop().unwrap()))
    }
}

/// Detects dark extremal regions of `img`. Ventricles are dark in T1, so the
/// sweep runs over `{I <= t}`, which is MSER on the inverted image.
pub fn detect_dark_regions(img: &GrayImage, params: &MserParams) -> Result<Vec<ExtremalRegion>> {
    params.validate(img.width(), img.height())?;
    let branches = build_branches(img);
    let emitted = emit_stable(&branches, params);
    Ok(extract_regions(img, emitted))
}

/// Runs the flood-fill sweep and returns every branch with its size history.
fn build_branches(img: &GrayImage) -> Vec<Branch> {
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    let data = img.data();

    let mut visited = vec![false; n];
    let mut edge = vec![0u8; n];
    let mut heap = BoundaryHeap::new();
    let mut branches: Vec<Branch> = Vec::new();
    let mut stack: Vec<Component> = Vec::new();

    let new_component = |level: i32, branches: &mut Vec<Branch>| -> Component {
        let id = branches.len() as u32;
        branches.push(Branch {
            seed: u32::MAX,
            birth: level,
            death: ROOT_DEATH,
            parent: None,
            history: Vec::new(),
        });
        Component::new(level, id)
    };

    // Sentinel so the stack never empties while processing.
    stack.push(Component::new(i32::MAX, u32::MAX));

    let mut cur_pixel = 0u32;
    let mut cur_level = data[0] as i32;
    visited[0] = true;
    let comp = new_component(cur_level, &mut branches);
    stack.push(comp);

    loop {
        // Explore the current pixel, descending into darker neighbors.
        'explore: loop {
            while edge[cur_pixel as usize] < 4 {
                let dir = edge[cur_pixel as usize];
                edge[cur_pixel as usize] += 1;
                let x = cur_pixel as usize % w;
                let y = cur_pixel as usize / w;
                let neighbor = match dir {
                    0 if x + 1 < w => Some(cur_pixel + 1),
                    1 if y + 1 < h => Some(cur_pixel + w as u32),
                    2 if x > 0 => Some(cur_pixel - 1),
                    3 if y > 0 => Some(cur_pixel - w as u32),
                    _ => None,
                };
                let Some(nb) = neighbor else { continue };
                if visited[nb as usize] {
                    continue;
                }
                visited[nb as usize] = true;
                let nb_level = data[nb as usize] as i32;
                if nb_level < cur_level {
                    // Deeper basin: shelve the current pixel and descend.
                    heap.push(cur_level as u8, cur_pixel);
                    cur_pixel = nb;
                    cur_level = nb_level;
                    let comp = new_component(cur_level, &mut branches);
                    stack.push(comp);
                    continue 'explore;
                }
                heap.push(nb_level as u8, nb);
            }
            break;
        }

        // All neighbors seen: the pixel joins the current component.
        debug_assert_eq!(data[cur_pixel as usize] as i32, cur_level);
        stack
            .last_mut()
            .unwrap()
            .accumulate(cur_pixel, data[cur_pixel as usize]);

        match heap.pop() {
            None => break,
            Some((level, px)) => {
                let level = level as i32;
                if level != cur_level {
                    debug_assert!(level > cur_level);
                    process_stack(level, &mut stack, &mut branches);
                    cur_level = level;
                }
                cur_pixel = px;
            }
        }
    }

    // Unwind: raise the remaining component past the top level.
    process_stack(ROOT_DEATH, &mut stack, &mut branches);
    let root = stack.pop().expect("root component");
    debug_assert_eq!(stack.len(), 1);
    debug_assert_eq!(branches[root.branch as usize].birth, root.seed_intensity as i32);
    let b = &mut branches[root.branch as usize];
    b.seed = root.seed_index;
    b.death = ROOT_DEATH;
    b.history = root.history;

    branches
}

/// Raises the top component to `new_level`, merging it with enclosing
/// components it joins on the way. A merge happens at the enclosing
/// component's level, which is where the two pixel sets become connected.
#[allow(clippy::ptr_arg)]
fn process_stack(new_level: i32, stack: &mut Vec<Component>, branches: &mut [Branch]) {
    loop {
        let mut top = stack.pop().expect("component stack underflow");
        let next = stack.last_mut().expect("sentinel present");
        if new_level < next.level {
            top.history.push((top.level, top.size));
            top.level = new_level;
            stack.push(top);
            return;
        }

        // `top` and `next` join at `next.level`; the smaller seed's branch
        // continues, the other branch dies here.
        top.history.push((top.level, top.size));
        let top_wins =
            (top.seed_intensity, top.seed_index) < (next.seed_intensity, next.seed_index);
        if top_wins {
            let dying = &mut branches[next.branch as usize];
            dying.seed = next.seed_index;
            dying.death = next.level;
            dying.parent = Some(top.branch);
            dying.history = std::mem::take(&mut next.history);
            next.branch = top.branch;
            next.history = top.history;
            next.seed_intensity = top.seed_intensity;
            next.seed_index = top.seed_index;
        } else {
            let dying = &mut branches[top.branch as usize];
            dying.seed = top.seed_index;
            dying.death = next.level;
            dying.parent = Some(next.branch);
            dying.history = top.history;
        }
        next.size += top.size;
        if new_level == next.level {
            return;
        }
    }
}

/// One emitted (seed, level) pair before pixel extraction.
struct Emission {
    seed: u32,
    level: i32,
    size: u32,
    stability: f64,
}

fn emit_stable(branches: &[Branch], params: &MserParams) -> Vec<Emission> {
    let delta = params.delta as i32;

    // Materialize per-branch size-by-level tables, parents first.
    let mut tables: Vec<Option<Vec<u32>>> = vec![None; branches.len()];
    for start in 0..branches.len() {
        let mut chain = vec![start];
        while let Some(p) = branches[*chain.last().unwrap()].parent {
            if tables[p as usize].is_some() {
                break;
            }
            chain.push(p as usize);
        }
        for &bi in chain.iter().rev() {
            if tables[bi].is_some() {
                continue;
            }
            let b = &branches[bi];
            let mut h = vec![0u32; 256];
            for (k, &(from, size)) in b.history.iter().enumerate() {
                let until = b
                    .history
                    .get(k + 1)
                    .map(|&(l, _)| l)
                    .unwrap_or(b.death)
                    .min(256);
                for j in from..until {
                    h[j as usize] = size;
                }
            }
            if b.death < 256 {
                let parent = tables[b.parent.unwrap() as usize]
                    .as_ref()
                    .expect("parent table built first")
                    .clone();
                h[b.death as usize..].copy_from_slice(&parent[b.death as usize..]);
            }
            tables[bi] = Some(h);
        }
    }

    let q_of = |bi: usize, t: i32| -> f64 {
        let h = tables[bi].as_ref().unwrap();
        let grown = h[(t + delta) as usize] as f64;
        let shrunk = if t - delta >= 0 {
            h[(t - delta) as usize] as f64
        } else {
            0.0
        };
        (grown - shrunk) / h[t as usize] as f64
    };
    let resolve = |mut bi: usize, t: i32| -> usize {
        while branches[bi].death <= t {
            bi = branches[bi].parent.expect("root covers every level") as usize;
        }
        bi
    };

    let mut out = Vec::new();
    for (bi, b) in branches.iter().enumerate() {
        let hi = b.death.min(256 - delta);
        for t in b.birth..hi {
            let size = tables[bi].as_ref().unwrap()[t as usize];
            if (size as usize) < params.min_area || (size as usize) > params.max_area {
                continue;
            }
            let q = q_of(bi, t);
            if q > params.max_variation {
                continue;
            }
            let left_ok = t == b.birth || q < q_of(bi, t - 1);
            if !left_ok {
                continue;
            }
            let right_ok = t + 1 + delta > 255 || q <= q_of(resolve(bi, t + 1), t + 1);
            if !right_ok {
                continue;
            }
            out.push(Emission {
                seed: b.seed,
                level: t,
                size,
                stability: q,
            });
        }
    }
    dedup_emissions(out)
}

/// Identical pixel sets (same seed and size) keep only the most stable
/// emission, breaking ties toward the lower level.
fn dedup_emissions(emissions: Vec<Emission>) -> Vec<Emission> {
    let mut best: HashMap<(u32, u32), Emission> = HashMap::new();
    for e in emissions {
        match best.entry((e.seed, e.size)) {
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(e);
            }
            std::collections::hash_map::Entry::Occupied(mut o) => {
                let cur = o.get();
                if (e.stability, e.level) < (cur.stability, cur.level) {
                    o.insert(e);
                }
            }
        }
    }
    best.into_values().collect()
}

fn extract_regions(img: &GrayImage, emissions: Vec<Emission>) -> Vec<ExtremalRegion> {
    let (w, h) = (img.width(), img.height());
    let data = img.data();
    let mut regions: Vec<ExtremalRegion> = emissions
        .into_iter()
        .map(|e| {
            // Flood the component of {I <= level} containing the seed.
            let mut pixels = Vec::with_capacity(e.size as usize);
            let mut seen = vec![false; w * h];
            let mut stack = vec![e.seed];
            seen[e.seed as usize] = true;
            while let Some(i) = stack.pop() {
                pixels.push(i);
                let (x, y) = (i as usize % w, i as usize / w);
                for (nx, ny) in [
                    (x.wrapping_sub(1), y),
                    (x + 1, y),
                    (x, y.wrapping_sub(1)),
                    (x, y + 1),
                ] {
                    if nx < w && ny < h {
                        let j = (ny * w + nx) as u32;
                        if !seen[j as usize] && data[j as usize] as i32 <= e.level {
                            seen[j as usize] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            debug_assert_eq!(pixels.len(), e.size as usize);
            pixels.sort_unstable();
            ExtremalRegion {
                pixels,
                size: e.size as usize,
                stability: e.stability,
                seed_level: e.level as u8,
                seed: e.seed,
            }
        })
        .collect();
    regions.sort_by_key(|a| (a.seed_level, a.size, a.seed));
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::time::Instant;

    /// Exhaustive reference detector: thresholds at every level, labels
    /// components by flood fill, and evaluates stability from those tables.
    fn naive_mser(img: &GrayImage, params: &MserParams) -> Vec<ExtremalRegion> {
        let (w, h) = (img.width(), img.height());
        let n = w * h;
        let data = img.data();
        let delta = params.delta as i32;

        // comp[t][p]: component id of p at level t (usize::MAX if absent).
        let mut comp = vec![vec![usize::MAX; n]; 256];
        let mut sizes: Vec<Vec<u32>> = vec![Vec::new(); 256];
        let mut seeds: Vec<Vec<u32>> = vec![Vec::new(); 256];
        for t in 0..256usize {
            for start in 0..n {
                if data[start] as usize > t || comp[t][start] != usize::MAX {
                    continue;
                }
                let id = sizes[t].len();
                let mut members = vec![start];
                comp[t][start] = id;
                let mut stack = vec![start];
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
                            if data[j] as usize <= t && comp[t][j] == usize::MAX {
                                comp[t][j] = id;
                                members.push(j);
                                stack.push(j);
                            }
                        }
                    }
                }
                let seed = members
                    .iter()
                    .map(|&p| (data[p], p as u32))
                    .min()
                    .unwrap()
                    .1;
                sizes[t].push(members.len() as u32);
                seeds[t].push(seed);
            }
        }

        let size_at = |t: i32, p: u32| -> f64 {
            if t < 0 || data[p as usize] as i32 > t {
                return 0.0;
            }
            sizes[t as usize][comp[t as usize][p as usize]] as f64
        };
        let q_at = |t: i32, seed: u32| -> f64 {
            (size_at(t + delta, seed) - size_at(t - delta, seed)) / size_at(t, seed)
        };

        let mut emitted: Vec<(u32, i32, u32, f64)> = Vec::new();
        for p in 0..n as u32 {
            let birth = data[p as usize] as i32;
            if seeds[birth as usize][comp[birth as usize][p as usize]] != p {
                continue; // not a canonical seed
            }
            for t in birth..=255 - delta {
                if seeds[t as usize][comp[t as usize][p as usize]] != p {
                    break; // branch ended
                }
                let size = size_at(t, p) as u32;
                if (size as usize) < params.min_area || (size as usize) > params.max_area {
                    continue;
                }
                let q = q_at(t, p);
                if q > params.max_variation {
                    continue;
                }
                if !(t == birth || q < q_at(t - 1, p)) {
                    continue;
                }
                if t + 1 + delta <= 255 {
                    let above = seeds[(t + 1) as usize][comp[(t + 1) as usize][p as usize]];
                    if q > q_at(t + 1, above) {
                        continue;
                    }
                }
                emitted.push((p, t, size, q));
            }
        }

        // Same dedup rule: identical pixel set keeps the most stable level.
        let mut best: HashMap<(u32, u32), (f64, i32)> = HashMap::new();
        for &(p, t, size, q) in &emitted {
            let e = best.entry((p, size)).or_insert((q, t));
            if (q, t) < *e {
                *e = (q, t);
            }
        }

        let mut regions: Vec<ExtremalRegion> = best
            .into_iter()
            .map(|((p, size), (q, t))| {
                let id = comp[t as usize][p as usize];
                let pixels: Vec<u32> = (0..n as u32)
                    .filter(|&j| {
                        data[j as usize] as i32 <= t && comp[t as usize][j as usize] == id
                    })
                    .collect();
                ExtremalRegion {
                    pixels,
                    size: size as usize,
                    stability: q,
                    seed_level: t as u8,
                    seed: p,
                }
            })
            .collect();
        regions.sort_by_key(|a| (a.seed_level, a.size, a.seed));
        regions
    }

    fn params_for(w: usize, h: usize) -> MserParams {
        MserParams {
            delta: 5,
            min_area: 2,
            max_area: w * h / 2,
            max_variation: 0.5,
        }
    }

    fn assert_same_regions(a: &[ExtremalRegion], b: &[ExtremalRegion]) {
        assert_eq!(a.len(), b.len(), "region count differs");
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.pixels, y.pixels);
            assert_eq!(x.seed_level, y.seed_level);
            assert_eq!(x.seed, y.seed);
            assert!((x.stability - y.stability).abs() < 1e-12);
        }
    }

    #[test]
    fn params_are_validated() {
        let img = GrayImage::filled(16, 16, 80).unwrap();
        let ok = params_for(16, 16);
        for bad in [
            MserParams { delta: 0, ..ok },
            MserParams { min_area: 0, ..ok },
            MserParams { min_area: 10, max_area: 10, ..ok },
            MserParams { max_area: 16 * 16 + 1, ..ok },
            MserParams { max_variation: -0.1, ..ok },
        ] {
            assert!(detect_dark_regions(&img, &bad).is_err());
        }
    }

    #[test]
    fn single_dark_square_is_one_region() {
        let img = GrayImage::from_fn(16, 16, |x, y| {
            if (5..11).contains(&x) && (5..11).contains(&y) {
                20
            } else {
                255
            }
        })
        .unwrap();
        let params = MserParams {
            delta: 5,
            min_area: 4,
            max_area: 64,
            max_variation: 0.5,
        };
        let regions = detect_dark_regions(&img, &params).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].size, 36);
    }

    #[test]
    fn constant_image_yields_no_regions() {
        let img = GrayImage::filled(16, 16, 80).unwrap();
        let params = MserParams {
            delta: 5,
            min_area: 2,
            max_area: 64, // whole image exceeds this
            max_variation: 0.5,
        };
        assert!(detect_dark_regions(&img, &params).unwrap().is_empty());
    }

    #[test]
    fn matches_naive_oracle_on_random_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for round in 0..30 {
            let (w, h) = match round % 3 {
                0 => (12, 10),
                1 => (24, 24),
                _ => (32, 32),
            };
            // Mix raw noise and smooth blobs so level sets are non-trivial.
            let img = if round % 2 == 0 {
                GrayImage::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
            } else {
                let cx = rng.random_range(2..w - 2) as f64;
                let cy = rng.random_range(2..h - 2) as f64;
                let noise: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..8)).collect();
                GrayImage::from_fn(w, h, |x, y| {
                    let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                    ((40.0 + 12.0 * d).min(220.0) as u8).saturating_add(noise[y * w + x])
                })
                .unwrap()
            };
            let params = params_for(w, h);
            let fast = detect_dark_regions(&img, &params).unwrap();
            let slow = naive_mser(&img, &params);
            assert_same_regions(&fast, &slow);
        }
    }

    #[test]
    fn quantized_images_match_oracle() {
        // Few distinct levels stress plateau handling and merge ties.
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for _ in 0..20 {
            let levels = [10u8, 60, 60, 120, 200];
            let img = GrayImage::new(
                16,
                16,
                (0..256)
                    .map(|_| levels[rng.random_range(0..levels.len())])
                    .collect(),
            )
            .unwrap();
            let params = params_for(16, 16);
            assert_same_regions(
                &detect_dark_regions(&img, &params).unwrap(),
                &naive_mser(&img, &params),
            );
        }
    }

    #[test]
    fn scaling_is_subquadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut make = |w: usize, h: usize| {
            let noise: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..40)).collect();
            GrayImage::from_fn(w, h, |x, y| {
                let d = ((x as f64 - w as f64 / 2.0).powi(2)
                    + (y as f64 - h as f64 / 2.0).powi(2))
                .sqrt();
                ((30.0 + 2.0 * d).min(200.0) as u8).saturating_add(noise[y * w + x])
            })
            .unwrap()
        };
        let small = make(48, 56);
        let large = make(96, 112);
        let params = MserParams {
            delta: 5,
            min_area: 10,
            max_area: 96 * 112 / 4,
            max_variation: 0.5,
        };
        let time = |img: &GrayImage| {
            let mut best = f64::INFINITY;
            for _ in 0..5 {
                let t0 = Instant::now();
                let _ = detect_dark_regions(img, &params).unwrap();
                best = best.min(t0.elapsed().as_secs_f64());
            }
            best
        };
        let t_small = time(&small);
        let t_large = time(&large);
        // 4x the pixels must stay well under 8x the time.
        assert!(
            t_large < 8.0 * t_small.max(1e-4),
            "small {t_small:.6}s large {t_large:.6}s"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn shift_invariance(seed in any::<u64>(), shift in 1u8..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<u8> = (0..144).map(|_| rng.random_range(0..200)).collect();
            let img = GrayImage::new(12, 12, data.clone()).unwrap();
            let shifted =
                GrayImage::new(12, 12, data.iter().map(|&v| v + shift).collect()).unwrap();
            let params = params_for(12, 12);
            let a = detect_dark_regions(&img, &params).unwrap();
            let b = detect_dark_regions(&shifted, &params).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(&x.pixels, &y.pixels);
                prop_assert_eq!(x.seed_level as u16 + shift as u16, y.seed_level as u16);
            }
        }

        #[test]
        fn regions_are_nested_or_disjoint(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = GrayImage::new(
                16, 16,
                (0..256).map(|_| rng.random()).collect(),
            ).unwrap();
            let regions = detect_dark_regions(&img, &params_for(16, 16)).unwrap();
            for i in 0..regions.len() {
                for j in i + 1..regions.len() {
                    let a: std::collections::HashSet<u32> =
                        regions[i].pixels.iter().copied().collect();
                    let b: std::collections::HashSet<u32> =
                        regions[j].pixels.iter().copied().collect();
                    let inter = a.intersection(&b).count();
                    prop_assert!(
                        inter == 0 || inter == a.len().min(b.len()),
                        "regions overlap without nesting"
                    );
                }
            }
        }
    }
}
