//! Linear feature maps: tabular one-hot, an explicit `|S|×m` matrix, and
//! tile coding for continuous observations.
//!
//! Tile-coded vectors are binary with exactly `tilings` active entries, so
//! they are carried in sparse form. [`FeatureVector`] hides the difference
//! from the learners.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a feature map is applied to.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Discrete(usize),
    Continuous(Vec<f64>),
}

/// A length-`m` feature vector, dense or binary-sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureVector {
    Dense(Vec<f64>),
    /// Binary vector of length `len` with ones at `active` (sorted, unique).
    Binary { len: usize, active: Vec<usize> },
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        match self {
            FeatureVector::Dense(v) => v.len(),
            FeatureVector::Binary { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inner product with `w[offset..offset + len]`.
    #[inline]
    pub fn dot_at(&self, w: &[f64], offset: usize) -> f64 {
        match self {
            FeatureVector::Dense(v) => v.iter().zip(&w[offset..offset + v.len()]).map(|(x, y)| x * y).sum(),
            FeatureVector::Binary { active, .. } => active.iter().map(|&i| w[offset + i]).sum(),
        }
    }

    #[inline]
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.dot_at(w, 0)
    }

    /// `w[offset..] += scale · self`.
    #[inline]
    pub fn add_scaled_at(&self, w: &mut [f64], offset: usize, scale: f64) {
        match self {
            FeatureVector::Dense(v) => {
                for (wi, x) in w[offset..offset + v.len()].iter_mut().zip(v) {
                    *wi += scale * x;
                }
            }
            FeatureVector::Binary { active, .. } => {
                for &i in active {
                    w[offset + i] += scale;
                }
            }
        }
    }

    #[inline]
    pub fn add_scaled(&self, w: &mut [f64], scale: f64) {
        self.add_scaled_at(w, 0, scale)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            FeatureVector::Dense(v) => v.clone(),
            FeatureVector::Binary { len, active } => {
                let mut v = vec![0.0; *len];
                for &i in active {
                    v[i] = 1.0;
                }
                v
            }
        }
    }
}

/// Grid tile coder over a box in `R^d`.
///
/// Each tiling lays `tiles` cells per dimension over `[low, high]`, plus one
/// spare cell so that shifted tilings still cover the box. Tiling `k` is
/// displaced by `((2i+1)·k mod tilings) / tilings` of a cell width along
/// dimension `i`, the asymmetric pattern that avoids diagonal artefacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileCoder {
    pub tilings: usize,
    pub tiles: usize,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl TileCoder {
    pub fn new(tilings: usize, tiles: usize, low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        let coder = Self { tilings, tiles, low, high };
        coder.validate()?;
        Ok(coder)
    }

    fn validate(&self) -> Result<()> {
        if self.tilings == 0 || self.tiles == 0 {
            return Err(Error::Config("tile coder needs at least one tiling and one tile".into()));
        }
        if self.low.is_empty() || self.low.len() != self.high.len() {
            return Err(Error::Config("tile coder bounds must be non-empty and the same length".into()));
        }
        if self.low.iter().zip(&self.high).any(|(l, h)| !(h > l)) {
            return Err(Error::Config("tile coder needs high > low in every dimension".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.low.len()
    }

    fn cells_per_tiling(&self) -> usize {
        (self.tiles + 1).pow(self.dims() as u32)
    }

    pub fn feature_dim(&self) -> usize {
        self.tilings * self.cells_per_tiling()
    }

    /// Indices of the active tile in each tiling, in tiling order.
    /// Points outside the box are clamped onto it.
    pub fn active_tiles(&self, x: &[f64]) -> Vec<usize> {
        debug_assert_eq!(x.len(), self.dims());
        let per_tiling = self.cells_per_tiling();
        let side = self.tiles + 1;
        let scaled: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let clamped = xi.clamp(self.low[i], self.high[i]);
                (clamped - self.low[i]) / (self.high[i] - self.low[i]) * self.tiles as f64
            })
            .collect();
        (0..self.tilings)
            .map(|k| {
                let mut index = 0;
                let mut stride = 1;
                for (i, &xi) in scaled.iter().enumerate() {
                    let shift = ((2 * i + 1) * k % self.tilings) as f64 / self.tilings as f64;
                    let cell = ((xi + shift).floor() as usize).min(self.tiles);
                    index += cell * stride;
                    stride *= side;
                }
                k * per_tiling + index
            })
            .collect()
    }
}

/// A map from states or observations to feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    /// One-hot encoding of `n_states` discrete states.
    Tabular { n_states: usize },
    /// Row `s` of `phi` is `φ(s)`.
    Matrix { phi: Vec<Vec<f64>> },
    TileCoding(TileCoder),
}

impl FeatureMap {
    pub fn matrix(phi: Vec<Vec<f64>>) -> Result<Self> {
        if phi.is_empty() || phi[0].is_empty() {
            return Err(Error::Config("feature matrix must be non-empty".into()));
        }
        let m = phi[0].len();
        if phi.iter().any(|row| row.len() != m) {
            return Err(Error::Dimension("feature matrix rows have different lengths".into()));
        }
        Ok(FeatureMap::Matrix { phi })
    }

    /// Feature dimension `m`.
    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::Tabular { n_states } => *n_states,
            FeatureMap::Matrix { phi } => phi[0].len(),
            FeatureMap::TileCoding(coder) => coder.feature_dim(),
        }
    }

    /// Number of discrete states covered, if the map is discrete.
    pub fn n_states(&self) -> Option<usize> {
        match self {
            FeatureMap::Tabular { n_states } => Some(*n_states),
            FeatureMap::Matrix { phi } => Some(phi.len()),
            FeatureMap::TileCoding(_) => None,
        }
    }

    pub fn featurize(&self, obs: &Observation) -> Result<FeatureVector> {
        match (self, obs) {
            (FeatureMap::Tabular { n_states }, Observation::Discrete(s)) => {
                if s >= n_states {
                    return Err(Error::Dimension(format!("state {s} out of range for {n_states} states")));
                }
                Ok(FeatureVector::Binary { len: *n_states, active: vec![*s] })
            }
            (FeatureMap::Matrix { phi }, Observation::Discrete(s)) => phi
                .get(*s)
                .map(|row| FeatureVector::Dense(row.clone()))
                .ok_or_else(|| Error::Dimension(format!("state {s} out of range for {} rows", phi.len()))),
            (FeatureMap::TileCoding(coder), Observation::Continuous(x)) => {
                if x.len() != coder.dims() {
                    return Err(Error::Dimension(format!(
                        "observation has {} components, tile coder expects {}",
                        x.len(),
                        coder.dims()
                    )));
                }
                let mut active = coder.active_tiles(x);
                active.sort_unstable();
                Ok(FeatureVector::Binary { len: coder.feature_dim(), active })
            }
            _ => Err(Error::Dimension("observation kind does not match feature map".into())),
        }
    }

    /// Shorthand for discrete states.
    pub fn state(&self, s: usize) -> Result<FeatureVector> {
        self.featurize(&Observation::Discrete(s))
    }

    /// The `|S|×m` matrix Φ with `φ(s)` as rows, for discrete maps.
    pub fn feature_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self
            .n_states()
            .ok_or_else(|| Error::Config("tile-coded features have no finite feature matrix".into()))?;
        let m = self.dim();
        let mut out = DMatrix::zeros(n, m);
        for s in 0..n {
            let row = self.state(s)?.to_dense();
            for (j, x) in row.into_iter().enumerate() {
                out[(s, j)] = x;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabular_is_basis_vector() {
        let fm = FeatureMap::Tabular { n_states: 4 };
        assert_eq!(fm.state(2).unwrap().to_dense(), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(fm.state(4).is_err());
    }

    #[test]
    fn explicit_matrix_row() {
        let fm = FeatureMap::matrix(vec![vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(fm.state(1).unwrap().to_dense(), vec![2.0]);
        assert_eq!(fm.dim(), 1);
    }

    /// Brute-force tile lookup: scan every cell of every tiling and test
    /// interval membership.
    fn oracle_tiles(coder: &TileCoder, x: &[f64]) -> Vec<usize> {
        let d = x.len();
        let side = coder.tiles + 1;
        let per = side.pow(d as u32);
        let mut out = Vec::new();
        for k in 0..coder.tilings {
            for cell in 0..per {
                let mut rem = cell;
                let mut inside = true;
                for i in 0..d {
                    let c = rem % side;
                    rem /= side;
                    let width = (coder.high[i] - coder.low[i]) / coder.tiles as f64;
                    let offset = ((2 * i + 1) * k % coder.tilings) as f64 / coder.tilings as f64 * width;
                    let lo = coder.low[i] + c as f64 * width - offset;
                    let hi = lo + width;
                    let xi = x[i].clamp(coder.low[i], coder.high[i]);
                    let last = c == coder.tiles;
                    if !(xi >= lo - 1e-12 && (xi < hi - 1e-12 || last)) {
                        inside = false;
                        break;
                    }
                }
                if inside {
                    out.push(k * per + cell);
                    break;
                }
            }
        }
        out
    }

    #[test]
    fn tile_coding_has_exactly_tilings_ones_and_matches_oracle() {
        let coder = TileCoder::new(8, 8, vec![-1.2, -0.07], vec![0.6, 0.07]).unwrap();
        let fm = FeatureMap::TileCoding(coder.clone());
        let points = [[-0.5, 0.0], [-1.2, -0.07], [0.6, 0.07], [0.13, -0.031], [-0.91, 0.0504]];
        for p in points {
            let v = fm.featurize(&Observation::Continuous(p.to_vec())).unwrap();
            let dense = v.to_dense();
            assert_eq!(dense.len(), fm.dim());
            assert_eq!(dense.iter().filter(|&&x| x == 1.0).count(), 8);
            assert_eq!(dense.iter().filter(|&&x| x != 0.0).count(), 8);
            assert_eq!(coder.active_tiles(&p), oracle_tiles(&coder, &p), "point {p:?}");
        }
    }

    #[test]
    fn out_of_bounds_observations_are_clamped() {
        let coder = TileCoder::new(4, 5, vec![0.0], vec![1.0]).unwrap();
        assert_eq!(coder.active_tiles(&[-3.0]), coder.active_tiles(&[0.0]));
        assert_eq!(coder.active_tiles(&[7.0]), coder.active_tiles(&[1.0]));
    }

    #[test]
    fn featurize_is_pure() {
        let fm = FeatureMap::TileCoding(TileCoder::new(8, 6, vec![0.0; 4], vec![1.0; 4]).unwrap());
        let obs = Observation::Continuous(vec![0.3, 0.9, 0.1, 0.5]);
        assert_eq!(fm.featurize(&obs).unwrap(), fm.featurize(&obs).unwrap());
    }

    #[test]
    fn sparse_and_dense_arithmetic_agree() {
        let sparse = FeatureVector::Binary { len: 5, active: vec![1, 3] };
        let dense = FeatureVector::Dense(sparse.to_dense());
        let w = [0.5, -1.0, 2.0, 4.0, 8.0];
        assert_eq!(sparse.dot(&w), dense.dot(&w));
        let mut a = w;
        let mut b = w;
        sparse.add_scaled(&mut a, 0.25);
        dense.add_scaled(&mut b, 0.25);
        assert_eq!(a, b);
    }

    #[test]
    fn json_schema_tags() {
        let fm: FeatureMap = serde_json::from_str(r#"{"kind":"matrix","phi":[[1.0],[2.0]]}"#).unwrap();
        assert_eq!(fm.dim(), 1);
        let fm: FeatureMap =
            serde_json::from_str(r#"{"kind":"tile_coding","tilings":8,"tiles":8,"low":[0,0],"high":[1,1]}"#).unwrap();
        assert_eq!(fm.dim(), 8 * 81);
    }
}
