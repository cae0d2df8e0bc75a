use super::{euclidean, DistMatrix, InstanceError, Point, Sense};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DlpVariant {
    Median,
    Center,
    Cover,
    Dispersion,
}

impl DlpVariant {
    pub fn sense(self) -> Sense {
        match self {
            DlpVariant::Median | DlpVariant::Center => Sense::Minimize,
            DlpVariant::Cover | DlpVariant::Dispersion => Sense::Maximize,
        }
    }
}

impl FromStr for DlpVariant {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" | "p_median" => Ok(Self::Median),
            "center" | "p_center" => Ok(Self::Center),
            "cover" | "p_cover" => Ok(Self::Cover),
            "dispersion" | "p_dispersion" => Ok(Self::Dispersion),
            other => Err(InstanceError::UnknownTag { kind: "DLP variant", tag: other.into() }),
        }
    }
}

/// Discrete location instance: every node is both a demand point and a
/// candidate facility site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlpInstance {
    pub coords: Vec<Point>,
    pub dist: DistMatrix,
    pub p: usize,
    pub variant: DlpVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover_radius: Option<f64>,
}

impl DlpInstance {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    /// Objective of a facility subset without validation.
    pub fn objective(&self, open: &[usize]) -> f64 {
        let n = self.n();
        match self.variant {
            DlpVariant::Median => (0..n).map(|i| self.nearest(i, open)).sum(),
            DlpVariant::Center => (0..n).map(|i| self.nearest(i, open)).fold(0.0, f64::max),
            DlpVariant::Cover => {
                let r = self.cover_radius.unwrap_or(0.0);
                let w = self.demands.as_deref();
                (0..n)
                    .filter(|&i| self.nearest(i, open) <= r)
                    .map(|i| w.map_or(1.0, |w| w[i]))
                    .sum()
            }
            DlpVariant::Dispersion => {
                let mut m = f64::INFINITY;
                for (a, &i) in open.iter().enumerate() {
                    for &j in &open[a + 1..] {
                        m = m.min(self.dist.get(i, j));
                    }
                }
                m
            }
        }
    }

    fn nearest(&self, i: usize, open: &[usize]) -> f64 {
        open.iter().map(|&j| self.dist.get(i, j)).fold(f64::INFINITY, f64::min)
    }
}

/// Default facility count: max(10, ⌊n/20⌋), or max(10, ⌊n/10⌋) for dispersion.
pub fn default_p(n: usize, variant: DlpVariant) -> usize {
    match variant {
        DlpVariant::Dispersion => (n / 10).max(10),
        _ => (n / 20).max(10),
    }
}

/// Draw order: node coordinates (x then y, U[0,1)); for cover, then demand
/// weights 0.5 + U[0,1) per node. Cover radius is 1.8/√n.
pub fn gen_dlp(n: usize, variant: DlpVariant, p: Option<usize>, rng: &mut Rng) -> Result<DlpInstance, InstanceError> {
    let p = p.unwrap_or_else(|| default_p(n, variant));
    if p == 0 || p >= n {
        return Err(InstanceError::BadFacilityCount { p, n });
    }
    let coords: Vec<Point> = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            [x, y]
        })
        .collect();
    let (demands, cover_radius) = if variant == DlpVariant::Cover {
        let w = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
        (Some(w), Some(1.8 / (n as f64).sqrt()))
    } else {
        (None, None)
    };
    Ok(DlpInstance { dist: euclidean(&coords), coords, p, variant, demands, cover_radius })
}

/// Objective of opening exactly the `p` facilities in `open`.
pub fn eval_dlp(inst: &DlpInstance, open: &[usize]) -> Result<f64, InstanceError> {
    if open.len() != inst.p {
        return Err(InstanceError::InvalidSolution(format!("{} facilities open, expected {}", open.len(), inst.p)));
    }
    let mut seen = vec![false; inst.n()];
    for &j in open {
        if j >= inst.n() {
            return Err(InstanceError::UnknownNode(j));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(InstanceError::InvalidSolution(format!("facility {j} opened twice")));
        }
    }
    Ok(inst.objective(open))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn default_sizes_and_radius() {
        let cover = gen_dlp(200, DlpVariant::Cover, None, &mut rng_from_seed(1)).unwrap();
        assert_eq!(cover.cover_radius, Some(1.8 / 200f64.sqrt()));
        assert!(cover.demands.as_ref().unwrap().iter().all(|w| (0.5..1.5).contains(w)));
        assert_eq!(gen_dlp(200, DlpVariant::Dispersion, None, &mut rng_from_seed(1)).unwrap().p, 20);
        assert_eq!(gen_dlp(100, DlpVariant::Median, None, &mut rng_from_seed(1)).unwrap().p, 10);
    }

    #[test]
    fn p_must_be_below_n() {
        assert!(gen_dlp(12, DlpVariant::Median, None, &mut rng_from_seed(1)).is_ok());
        assert!(gen_dlp(8, DlpVariant::Median, None, &mut rng_from_seed(1)).is_err());
        assert!(gen_dlp(8, DlpVariant::Median, Some(8), &mut rng_from_seed(1)).is_err());
        assert!(gen_dlp(8, DlpVariant::Median, Some(3), &mut rng_from_seed(1)).is_ok());
    }

    #[test]
    fn objectives_on_a_line() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [6.0, 0.0]];
        let mut inst = DlpInstance {
            dist: euclidean(&coords),
            coords,
            p: 2,
            variant: DlpVariant::Median,
            demands: None,
            cover_radius: None,
        };
        assert_eq!(eval_dlp(&inst, &[1, 3]).unwrap(), 1.0 + 0.0 + 2.0 + 0.0);
        inst.variant = DlpVariant::Center;
        assert_eq!(eval_dlp(&inst, &[1, 3]).unwrap(), 2.0);
        inst.variant = DlpVariant::Dispersion;
        assert_eq!(eval_dlp(&inst, &[0, 3]).unwrap(), 6.0);
        inst.variant = DlpVariant::Cover;
        inst.cover_radius = Some(1.0);
        inst.demands = Some(vec![0.5, 1.0, 1.25, 0.75]);
        assert_eq!(eval_dlp(&inst, &[1, 3]).unwrap(), 0.5 + 1.0 + 0.75);
        assert!(eval_dlp(&inst, &[1]).is_err());
        assert!(eval_dlp(&inst, &[1, 1]).is_err());
    }
}
