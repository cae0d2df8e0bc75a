use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

/// Dense row-major square distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DistMatrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        DistMatrix { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Length of the closed tour visiting `order` cyclically.
    pub fn cycle_length(&self, order: &[usize]) -> f64 {
        if order.len() < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for w in order.windows(2) {
            total += self.get(w[0], w[1]);
        }
        total + self.get(order[order.len() - 1], order[0])
    }

    /// Length of the open path visiting `order`.
    pub fn path_length(&self, order: &[usize]) -> f64 {
        order.windows(2).map(|w| self.get(w[0], w[1])).sum()
    }
}

impl TryFrom<Vec<Vec<f64>>> for DistMatrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, String> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(format!("row {i} has {} entries, expected {n}", r.len()));
            }
            data.extend(r);
        }
        Ok(DistMatrix { n, data })
    }
}

impl From<DistMatrix> for Vec<Vec<f64>> {
    fn from(m: DistMatrix) -> Self {
        m.to_rows()
    }
}

/// Euclidean distance matrix; computed once per unordered pair so the
/// result is exactly symmetric.
pub fn euclidean(coords: &[Point]) -> DistMatrix {
    let n = coords.len();
    let mut m = DistMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            let d = (dx * dx + dy * dy).sqrt();
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    m
}
