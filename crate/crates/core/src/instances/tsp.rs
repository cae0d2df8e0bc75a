use super::{check_permutation, euclidean, DistMatrix, InstanceError, Point};
use crate::rng::Rng;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Spatial distribution of generated cities. `Tsplib` marks instances read
/// from a TSPLIB file, whose coordinates are not confined to the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TspDistribution {
    Uniform,
    Clustered,
    Diagonal,
    Barbell,
    Tsplib,
}

impl FromStr for TspDistribution {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "clustered" => Ok(Self::Clustered),
            "diagonal" => Ok(Self::Diagonal),
            "barbell" => Ok(Self::Barbell),
            other => Err(InstanceError::UnknownTag { kind: "TSP distribution", tag: other.into() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    pub coords: Vec<Point>,
    pub dist: DistMatrix,
    pub distribution: TspDistribution,
}

impl TspInstance {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn from_coords(coords: Vec<Point>, distribution: TspDistribution) -> Self {
        let dist = euclidean(&coords);
        TspInstance { coords, dist, distribution }
    }
}

/// Generation log: the latent group of every point (if any) and the
/// coordinates before clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct TspTrace {
    pub labels: Vec<Option<usize>>,
    pub raw: Vec<Point>,
    pub centers: Vec<Point>,
}

pub const CLUSTER_COUNT: usize = 6;
pub const CLUSTER_RADIUS: f64 = 0.32;
pub const CLUSTER_STD: f64 = 0.055;
pub const DIAGONAL_STD: f64 = 0.13;
pub const BARBELL_CENTERS: [Point; 2] = [[0.22, 0.5], [0.78, 0.5]];
pub const BARBELL_SPREAD: Point = [0.07, 0.11];
pub const BRIDGE_X: (f64, f64) = (0.34, 0.66);
pub const BRIDGE_STD: f64 = 0.02;

pub fn gen_tsp(n: usize, distribution: TspDistribution, rng: &mut Rng) -> Result<TspInstance, InstanceError> {
    gen_tsp_traced(n, distribution, rng).map(|(i, _)| i)
}

/// Generate a TSP instance and its generation log.
///
/// Draw order per distribution:
/// * uniform: for each city, `x` then `y` from U[0,1).
/// * clustered: all `n` cluster labels (uniform over 6) first, then per city
///   the x and y offsets from N(0, 0.055); clipped to the unit square.
/// * diagonal: per city, repeat { `t` ~ U[0,1), `e` ~ N(0, 0.13) } until the
///   point `(t,t) + e·(-1,1)/√2` lies in the unit square.
/// * barbell: labels `[0; ⌊0.4n⌋] ++ [1; ⌊0.4n⌋] ++ [2; rest]` shuffled first;
///   then per city, lobes draw x ~ N(cx, 0.07), y ~ N(0.5, 0.11) and bridge
///   points draw x ~ U[0.34,0.66] + N(0, 0.02), y ~ N(0.5, 0.02); clipped.
pub fn gen_tsp_traced(
    n: usize,
    distribution: TspDistribution,
    rng: &mut Rng,
) -> Result<(TspInstance, TspTrace), InstanceError> {
    if n < 3 {
        return Err(InstanceError::TooSmall { what: "gen_tsp", min: 3, n });
    }
    let mut labels = vec![None; n];
    let mut raw = Vec::with_capacity(n);
    let mut centers = Vec::new();
    match distribution {
        TspDistribution::Uniform => {
            for _ in 0..n {
                let x: f64 = rng.random();
                let y: f64 = rng.random();
                raw.push([x, y]);
            }
        }
        TspDistribution::Clustered => {
            centers = (0..CLUSTER_COUNT)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / CLUSTER_COUNT as f64;
                    [0.5 + CLUSTER_RADIUS * a.cos(), 0.5 + CLUSTER_RADIUS * a.sin()]
                })
                .collect();
            for l in labels.iter_mut() {
                *l = Some(rng.random_range(0..CLUSTER_COUNT));
            }
            let noise = Normal::new(0.0, CLUSTER_STD).unwrap();
            for l in &labels {
                let c = centers[l.unwrap()];
                let x = c[0] + noise.sample(rng);
                let y = c[1] + noise.sample(rng);
                raw.push([x, y]);
            }
        }
        TspDistribution::Diagonal => {
            let noise = Normal::new(0.0, DIAGONAL_STD).unwrap();
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for _ in 0..n {
                loop {
                    let t: f64 = rng.random();
                    let e = noise.sample(rng);
                    let p = [t - e * s, t + e * s];
                    if (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) {
                        raw.push(p);
                        break;
                    }
                }
            }
        }
        TspDistribution::Barbell => {
            centers = BARBELL_CENTERS.to_vec();
            let lobe = n * 2 / 5;
            let mut tags: Vec<usize> = (0..n)
                .map(|i| if i < lobe { 0 } else if i < 2 * lobe { 1 } else { 2 })
                .collect();
            tags.shuffle(rng);
            let nx = Normal::new(0.0, BARBELL_SPREAD[0]).unwrap();
            let ny = Normal::new(0.0, BARBELL_SPREAD[1]).unwrap();
            let nb = Normal::new(0.0, BRIDGE_STD).unwrap();
            for (i, &tag) in tags.iter().enumerate() {
                labels[i] = Some(tag);
                let p = if tag < 2 {
                    let c = BARBELL_CENTERS[tag];
                    [c[0] + nx.sample(rng), c[1] + ny.sample(rng)]
                } else {
                    let x = rng.random_range(BRIDGE_X.0..BRIDGE_X.1) + nb.sample(rng);
                    [x, 0.5 + nb.sample(rng)]
                };
                raw.push(p);
            }
        }
        TspDistribution::Tsplib => {
            return Err(InstanceError::UnknownTag { kind: "TSP distribution", tag: "tsplib".into() })
        }
    }
    let coords: Vec<Point> = raw.iter().map(|p| [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]).collect();
    let inst = TspInstance::from_coords(coords, distribution);
    Ok((inst, TspTrace { labels, raw, centers }))
}

/// Closed tour length of `perm`, including the wraparound edge.
pub fn eval_tour(inst: &TspInstance, perm: &[usize]) -> Result<f64, InstanceError> {
    check_permutation(perm, inst.n())?;
    Ok(inst.dist.cycle_length(perm))
}

/// Greedy nearest-neighbor tour from node 0, ties to the lowest index.
pub fn nn_tour(dist: &DistMatrix) -> Vec<usize> {
    let n = dist.n();
    if n == 0 {
        return Vec::new();
    }
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = 0;
    visited[0] = true;
    tour.push(0);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..n {
            if !visited[j] && dist.get(cur, j) < best_d {
                best_d = dist.get(cur, j);
                best = j;
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    tour
}

pub fn nn_tour_length(dist: &DistMatrix) -> f64 {
    dist.cycle_length(&nn_tour(dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn unit_square_corners() {
        let inst = TspInstance::from_coords(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            TspDistribution::Uniform,
        );
        assert_eq!(eval_tour(&inst, &[0, 1, 2, 3]).unwrap(), 4.0);
        assert!(eval_tour(&inst, &[0, 1, 1, 3]).is_err());
        assert!(eval_tour(&inst, &[0, 1, 2]).is_err());
    }

    #[test]
    fn single_city_tour_is_free() {
        let inst = TspInstance::from_coords(vec![[0.3, 0.3]], TspDistribution::Uniform);
        assert_eq!(eval_tour(&inst, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn nn_collinear_and_triangle() {
        let line = euclidean(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]);
        assert_eq!(nn_tour(&line), vec![0, 1, 2]);
        assert_eq!(nn_tour_length(&line), 6.0);
        let h = 3f64.sqrt() / 2.0;
        let tri = euclidean(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]);
        assert!((nn_tour_length(&tri) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nn_ties_go_to_lowest_index() {
        // nodes 1 and 2 are both at distance 1 from node 0
        let d = euclidean(&[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [5.0, 0.0]]);
        assert_eq!(nn_tour(&d), vec![0, 1, 2, 3]);
    }

    #[test]
    fn uniform_contract() {
        let inst = gen_tsp(100, TspDistribution::Uniform, &mut rng_from_seed(3)).unwrap();
        assert!(inst.coords.iter().all(|p| (0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1])));
        assert!(inst.dist.is_symmetric());
        for i in 0..inst.n() {
            assert_eq!(inst.dist.get(i, i), 0.0);
        }
    }

    #[test]
    fn clustered_points_stay_near_their_center() {
        let (inst, trace) = gen_tsp_traced(200, TspDistribution::Clustered, &mut rng_from_seed(11)).unwrap();
        let near = inst
            .coords
            .iter()
            .zip(&trace.labels)
            .filter(|(p, l)| {
                let c = trace.centers[l.unwrap()];
                (p[0] - c[0]).abs() <= 4.0 * CLUSTER_STD && (p[1] - c[1]).abs() <= 4.0 * CLUSTER_STD
            })
            .count();
        assert!(near as f64 >= 0.95 * 200.0, "only {near} of 200 near their center");
        for c in &trace.centers {
            let r = ((c[0] - 0.5).powi(2) + (c[1] - 0.5).powi(2)).sqrt();
            assert!((r - CLUSTER_RADIUS).abs() < 1e-12);
        }
    }

    #[test]
    fn barbell_has_a_twenty_percent_bridge() {
        let (_, trace) = gen_tsp_traced(100, TspDistribution::Barbell, &mut rng_from_seed(5)).unwrap();
        let lo = BRIDGE_X.0 - 3.0 * BRIDGE_STD;
        let hi = BRIDGE_X.1 + 3.0 * BRIDGE_STD;
        let bridge: Vec<_> = trace
            .labels
            .iter()
            .zip(&trace.raw)
            .filter(|(l, _)| **l == Some(2))
            .collect();
        assert_eq!(bridge.len(), 20);
        assert!(bridge.iter().all(|(_, p)| p[0] >= lo && p[0] <= hi));
        assert_eq!(trace.labels.iter().filter(|l| **l == Some(0)).count(), 40);
    }

    #[test]
    fn diagonal_points_hug_the_diagonal() {
        let inst = gen_tsp(300, TspDistribution::Diagonal, &mut rng_from_seed(9)).unwrap();
        let off: f64 = inst
            .coords
            .iter()
            .map(|p| ((p[1] - p[0]) / 2f64.sqrt()).abs())
            .sum::<f64>()
            / 300.0;
        // mean |N(0, 0.13)| is 0.104; rejection near the corners trims it a little
        assert!(off > 0.05 && off < 0.13, "mean offset {off}");
    }

    #[test]
    fn unknown_distribution_tag() {
        assert!("spiral".parse::<TspDistribution>().is_err());
        assert_eq!("barbell".parse::<TspDistribution>().unwrap(), TspDistribution::Barbell);
    }

    #[test]
    fn generation_is_reproducible() {
        for d in [TspDistribution::Uniform, TspDistribution::Clustered, TspDistribution::Diagonal, TspDistribution::Barbell] {
            let a = gen_tsp(40, d, &mut rng_from_seed(21)).unwrap();
            let b = gen_tsp(40, d, &mut rng_from_seed(21)).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }
    }
}
