//! Generalized Lloyd (LBG) codebook design with binary splitting.
//!
//! Training starts from the global centroid and doubles the codebook until it
//! reaches the target size. Each split keeps the parent point `c` and adds
//! `c + ε·s`, where `s` is the per-dimension spread of the parent's cell; each
//! stage then runs Lloyd iterations (nearest-neighbor partition, centroid
//! update). Empty cells take the worst-served training vector of the cell with
//! the largest total distortion. None of these steps can raise the mean
//! distortion, so the recorded history is non-increasing.

use serde::{Deserialize, Serialize};

use super::{nearest, Codebook, TrainingMeta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbgOptions {
    pub split_epsilon: f64,
    /// Stop a stage once `(D_prev − D) ≤ rel_tol · D`.
    pub rel_tol: f64,
    /// Lloyd iterations per splitting stage.
    pub max_iters: usize,
}

impl Default for LbgOptions {
    fn default() -> Self {
        LbgOptions { split_epsilon: 0.01, rel_tol: 1e-6, max_iters: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct LbgOutcome {
    pub codebook: Codebook,
    /// Mean squared distortion after every Lloyd iteration, across all stages.
    pub history: Vec<f64>,
}

struct Partition {
    assign: Vec<usize>,
    dist: Vec<f64>,
}

fn partition(data: &[f64], dim: usize, codewords: &[f64], hint: &[usize]) -> Partition {
    let size = codewords.len() / dim;
    let (assign, dist) = data
        .chunks_exact(dim)
        .zip(hint)
        .map(|(x, &h)| if h < size { nearest_from(codewords, dim, x, h) } else { nearest(codewords, dim, x) })
        .unzip();
    Partition { assign, dist }
}

/// Same result as [`nearest`], but starts from candidate `hint` so the early
/// exit prunes from the first point on.
fn nearest_from(points: &[f64], dim: usize, x: &[f64], hint: usize) -> (usize, f64) {
    let sq = |p: &[f64]| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut best = (hint, sq(&points[hint * dim..(hint + 1) * dim]));
    for (i, p) in points.chunks_exact(dim).enumerate() {
        if i == hint {
            continue;
        }
        // a lower index wins a tie
        let beats = |d: f64, best: (usize, f64)| d < best.1 || (d == best.1 && i < best.0);
        let mut d = 0.0;
        let mut pruned = false;
        for (a, b) in p.iter().zip(x) {
            let t = a - b;
            d += t * t;
            if !beats(d, best) {
                pruned = true;
                break;
            }
        }
        if !pruned && beats(d, best) {
            best = (i, d);
        }
    }
    best
}

/// Per-cell sums, counts and total distortion.
fn cell_stats(data: &[f64], dim: usize, size: usize, part: &Partition) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
    let mut sums = vec![0.0; size * dim];
    let mut counts = vec![0usize; size];
    let mut distortion = vec![0.0; size];
    for (i, x) in data.chunks_exact(dim).enumerate() {
        let j = part.assign[i];
        counts[j] += 1;
        distortion[j] += part.dist[i];
        for (s, v) in sums[j * dim..(j + 1) * dim].iter_mut().zip(x) {
            *s += v;
        }
    }
    (sums, counts, distortion)
}

fn spread(data: &[f64], dim: usize, members: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut n = 0usize;
    let mut mean = vec![0.0; dim];
    let mut sq = vec![0.0; dim];
    for i in members {
        n += 1;
        for (d, v) in data[i * dim..(i + 1) * dim].iter().enumerate() {
            mean[d] += v;
            sq[d] += v * v;
        }
    }
    if n == 0 {
        return vec![0.0; dim];
    }
    let nf = n as f64;
    mean.iter().zip(&sq).map(|(m, s)| (s / nf - (m / nf).powi(2)).max(0.0).sqrt()).collect()
}

fn mean_distortion(data: &[f64], dim: usize, codewords: &[f64], assign: &[usize]) -> f64 {
    let total: f64 = data
        .chunks_exact(dim)
        .zip(assign)
        .map(|(x, &j)| x.iter().zip(&codewords[j * dim..(j + 1) * dim]).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum();
    total / (data.len() / dim) as f64
}

/// Trains a `target_size`-point codebook on real vectors (input scale 1).
pub fn lbg_train(samples: &[Vec<f64>], target_size: usize, opts: &LbgOptions) -> Result<LbgOutcome> {
    let dim = samples.first().map(Vec::len).unwrap_or(0);
    if samples.is_empty() || dim == 0 {
        return Err(Error::invalid("lbg_train: no training samples"));
    }
    if samples.iter().any(|s| s.len() != dim) {
        return Err(Error::invalid("lbg_train: samples have different dimensions"));
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("lbg_train: non-finite training sample"));
    }
    if !target_size.is_power_of_two() {
        return Err(Error::invalid(format!("lbg_train: target size {target_size} is not a power of two")));
    }
    if target_size > samples.len() {
        return Err(Error::invalid(format!(
            "lbg_train: target size {target_size} exceeds the {} training samples",
            samples.len()
        )));
    }
    let n = samples.len();
    let data: Vec<f64> = samples.concat();

    let global_spread = {
        let s = spread(&data, dim, 0..n);
        if s.iter().all(|&v| v == 0.0) {
            vec![1.0; dim]
        } else {
            s
        }
    };

    let mut codewords: Vec<f64> = mean_vector(&data, dim, n);
    let mut assign = vec![0usize; n];
    let mut history = Vec::new();
    let mut iterations = 0usize;

    loop {
        let size = codewords.len() / dim;
        let mut prev = f64::INFINITY;
        for _ in 0..opts.max_iters.max(1) {
            let mut part = partition(&data, dim, &codewords, &assign);
            loop {
                let (_, counts, cell_dist) = cell_stats(&data, dim, size, &part);
                let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
                let worst = (0..size).max_by(|&a, &b| cell_dist[a].total_cmp(&cell_dist[b])).unwrap_or(0);
                if cell_dist[worst] <= 0.0 {
                    return Err(Error::invalid(format!(
                        "lbg_train: fewer distinct training vectors than the {target_size} requested points"
                    )));
                }
                let far = (0..n)
                    .filter(|&i| part.assign[i] == worst)
                    .max_by(|&a, &b| part.dist[a].total_cmp(&part.dist[b]))
                    .expect("non-empty cell");
                codewords.splice(empty * dim..(empty + 1) * dim, data[far * dim..(far + 1) * dim].iter().copied());
                part = partition(&data, dim, &codewords, &assign);
            }
            let (sums, counts, _) = cell_stats(&data, dim, size, &part);
            for j in 0..size {
                for d in 0..dim {
                    codewords[j * dim + d] = sums[j * dim + d] / counts[j] as f64;
                }
            }
            assign = part.assign;
            let dist = mean_distortion(&data, dim, &codewords, &assign);
            history.push(dist);
            iterations += 1;
            if prev - dist <= opts.rel_tol * dist {
                break;
            }
            prev = dist;
        }

        if size >= target_size {
            break;
        }
        let mut grown = codewords.clone();
        for j in 0..size {
            let mut s = spread(&data, dim, (0..n).filter(|&i| assign[i] == j));
            if s.iter().all(|&v| v == 0.0) {
                s = global_spread.clone();
            }
            grown.extend(codewords[j * dim..(j + 1) * dim].iter().zip(&s).map(|(c, s)| c + opts.split_epsilon * s));
        }
        codewords = grown;
    }

    let meta = TrainingMeta {
        n_training_samples: n,
        final_distortion: *history.last().expect("at least one iteration"),
        iterations,
    };
    let codebook = Codebook::from_flat(codewords, dim, 1.0, meta)?;
    Ok(LbgOutcome { codebook, history })
}

fn mean_vector(data: &[f64], dim: usize, n: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    for x in data.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean.iter().map(|m| m / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;
    use proptest::prelude::*;
    use rand_distr::StandardNormal;

    proptest! {
        #[test]
        fn hinted_search_matches_exhaustive(
            pts in proptest::collection::vec(-3i32..3, 16),
            x in proptest::collection::vec(-3i32..3, 2),
            hint in 0usize..8,
        ) {
            // small integer grids force plenty of exact ties
            let pts: Vec<f64> = pts.into_iter().map(f64::from).collect();
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            prop_assert_eq!(nearest_from(&pts, 2, &x, hint), nearest(&pts, 2, &x));
        }
    }

    fn gaussian_samples(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, Purpose::Validation, &[]);
        (0..n).map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect()
    }

    #[test]
    fn single_point_is_the_mean() {
        let s = vec![vec![1.0, 2.0], vec![3.0, -2.0], vec![5.0, 3.0]];
        let out = lbg_train(&s, 1, &LbgOptions::default()).unwrap();
        assert_eq!(out.codebook.point(0), &[3.0, 1.0]);
    }

    /// Plain k-means from the known cluster means, used as the oracle.
    fn kmeans_from(s: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        for _ in 0..100 {
            let mut sums = vec![vec![0.0; 2]; centers.len()];
            let mut counts = vec![0.0; centers.len()];
            for x in s {
                let d = |c: &Vec<f64>| (c[0] - x[0]).powi(2) + (c[1] - x[1]).powi(2);
                let j = if d(&centers[0]) <= d(&centers[1]) { 0 } else { 1 };
                sums[j][0] += x[0];
                sums[j][1] += x[1];
                counts[j] += 1.0;
            }
            centers = sums.iter().zip(&counts).map(|(s, c)| vec![s[0] / c, s[1] / c]).collect();
        }
        centers
    }

    #[test]
    fn recovers_two_clusters() {
        let mut rng = stream(21, Purpose::Validation, &[]);
        let s: Vec<Vec<f64>> = (0..400)
            .map(|i| {
                let c = if i % 2 == 0 { 5.0 } else { -5.0 };
                vec![c + 0.1 * rng.sample::<f64, _>(StandardNormal), c + 0.1 * rng.sample::<f64, _>(StandardNormal)]
            })
            .collect();
        let oracle = kmeans_from(&s, vec![vec![5.0, 5.0], vec![-5.0, -5.0]]);
        let cb = lbg_train(&s, 2, &LbgOptions::default()).unwrap().codebook;
        for o in &oracle {
            let hit = (0..2).any(|i| (cb.point(i)[0] - o[0]).abs() < 0.05 && (cb.point(i)[1] - o[1]).abs() < 0.05);
            assert!(hit, "oracle center {o:?} not matched");
        }
    }

    #[test]
    fn history_is_non_increasing() {
        let s = gaussian_samples(2000, 3, 5);
        let out = lbg_train(&s, 64, &LbgOptions::default()).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]), "{:?}", out.history);
        assert_eq!(out.codebook.size(), 64);
        assert_eq!(out.codebook.training_meta.iterations, out.history.len());
        assert_eq!(out.codebook.training_meta.n_training_samples, 2000);
    }

    #[test]
    fn centroid_and_nearest_neighbor_conditions() {
        let s = gaussian_samples(1500, 2, 9);
        let opts = LbgOptions { rel_tol: 0.0, max_iters: 1000, ..LbgOptions::default() };
        let cb = lbg_train(&s, 16, &opts).unwrap().codebook;
        let mut sums = vec![[0.0f64; 2]; 16];
        let mut counts = vec![0.0; 16];
        for x in &s {
            let j = cb.quantize(x).unwrap().index;
            sums[j][0] += x[0];
            sums[j][1] += x[1];
            counts[j] += 1.0;
        }
        for j in 0..16 {
            for d in 0..2 {
                let centroid = sums[j][d] / counts[j];
                assert!((centroid - cb.point(j)[d]).abs() <= 1e-9 * centroid.abs().max(1.0));
            }
        }
    }

    #[test]
    fn distortion_falls_as_codebook_grows() {
        let train = gaussian_samples(4000, 2, 1);
        let held = gaussian_samples(4000, 2, 2);
        let mut last = f64::INFINITY;
        for size in [2, 4, 8, 16, 32] {
            let cb = lbg_train(&train, size, &LbgOptions::default()).unwrap().codebook;
            let d: f64 = held
                .iter()
                .map(|x| cb.quantize(x).unwrap().reconstruction.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .sum::<f64>()
                / held.len() as f64;
            assert!(d <= last, "size {size}: {d} > {last}");
            last = d;
        }
    }

    #[test]
    fn rejects_bad_input() {
        let s = gaussian_samples(4, 2, 3);
        assert!(lbg_train(&s, 8, &LbgOptions::default()).is_err());
        assert!(lbg_train(&s, 3, &LbgOptions::default()).is_err());
        assert!(lbg_train(&[], 1, &LbgOptions::default()).is_err());
        assert!(lbg_train(&[vec![f64::NAN]], 1, &LbgOptions::default()).is_err());
        let dup = vec![vec![1.0]; 8];
        assert!(lbg_train(&dup, 4, &LbgOptions::default()).is_err());
    }
}
