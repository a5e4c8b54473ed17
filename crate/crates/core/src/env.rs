//! Layered Poisson environments.
//!
//! An environment is a realization of a unit-intensity Poisson process on
//! `{1..n} × [-W, W]^d`. Each layer is generated tile by tile: space is cut
//! into cubes of side [`TILE_SIDE`], every cube draws its own Poisson count
//! from a stream keyed by `(seed, layer, tile)`, and points outside the window
//! are discarded. Consequently the content of a layer does not depend on the
//! order in which layers are generated, and enlarging the window only adds
//! points outside the old one.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geodesic::GeodesicResult;
use crate::rng;

/// Side length of the cubes used for counter-based sampling.
pub const TILE_SIDE: f64 = 16.0;

/// Default cap on the expected number of sampled points (all layers).
pub const DEFAULT_POINT_BUDGET: f64 = 5.0e7;

/// A point of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpacePoint(Vec<f64>);

impl SpacePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("a space point needs at least one coordinate");
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid(format!("non-finite coordinate in {coords:?}"));
        }
        Ok(SpacePoint(coords))
    }

    pub fn origin(dim: usize) -> Self {
        SpacePoint(vec![0.0; dim])
    }

    pub(crate) fn from_slice(coords: &[f64]) -> Self {
        SpacePoint(coords.to_vec())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl From<f64> for SpacePoint {
    fn from(x: f64) -> Self {
        SpacePoint(vec![x])
    }
}

/// Euclidean distance. In one dimension this is exactly `|a - b|`.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        (a[0] - b[0]).abs()
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    if a.len() == 1 {
        a[0].abs()
    } else {
        a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// The spatial window `[-W, W]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    half_width: f64,
    dimension: usize,
}

impl WindowSpec {
    pub fn new(half_width: f64, dimension: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return invalid(format!("window half-width must be positive, got {half_width}"));
        }
        if dimension == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(WindowSpec {
            half_width,
            dimension,
        })
    }

    /// `W = factor * n^exponent`.
    pub fn scaled(n: usize, dimension: usize, factor: f64, exponent: f64) -> Result<Self> {
        Self::new(factor * (n as f64).powf(exponent), dimension)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `(2W)^d`, the expected number of points per layer.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dimension as i32)
    }

    pub fn doubled(&self) -> Self {
        WindowSpec {
            half_width: 2.0 * self.half_width,
            dimension: self.dimension,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|c| c.abs() <= self.half_width)
    }

    /// Smallest distance from `x` to a face of the window.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        x.iter()
            .map(|c| self.half_width - c.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Points of one time section, stored flat and sorted lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    time_index: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl Layer {
    /// Sorts the points and rejects exact duplicates.
    fn build(time_index: usize, dim: usize, mut points: Vec<Vec<f64>>) -> Result<Self> {
        points.sort_by(|a, b| lex_cmp(a, b));
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePoint { layer: time_index });
        }
        Ok(Layer {
            time_index,
            dim,
            coords: points.into_iter().flatten().collect(),
        })
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Flat coordinate buffer, `len() * dim()` entries.
    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// Index of a point with exactly these coordinates.
    pub fn find(&self, x: &[f64]) -> Option<usize> {
        let n = self.len();
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match lex_cmp(self.point(mid), x) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn to_points(&self) -> Vec<SpacePoint> {
        self.points().map(SpacePoint::from_slice).collect()
    }

    /// The points satisfying `keep`, order preserved.
    pub(crate) fn filtered(&self, keep: impl Fn(&[f64]) -> bool) -> Layer {
        Layer {
            time_index: self.time_index,
            dim: self.dim,
            coords: self.points().filter(|p| keep(p)).flatten().copied().collect(),
        }
    }
}

/// A sampled (or hand-built) environment: layers `1..=n` plus the origin at
/// time 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    layers: Vec<Layer>,
    window: WindowSpec,
    master_seed: u64,
}

impl Environment {
    /// Builds an environment from explicit per-layer point lists (layer `i` of
    /// the input becomes time `i + 1`). Points must lie inside the window.
    pub fn from_layers(window: WindowSpec, master_seed: u64, layers: Vec<Vec<SpacePoint>>) -> Result<Self> {
        if layers.is_empty() {
            return invalid("an environment needs at least one layer");
        }
        let dim = window.dimension();
        let layers = layers
            .into_iter()
            .enumerate()
            .map(|(i, pts)| {
                let k = i + 1;
                let raw = pts
                    .into_iter()
                    .map(|p| {
                        if p.dim() != dim {
                            return invalid(format!("layer {k}: point of dimension {} in a {dim}-dimensional environment", p.dim()));
                        }
                        if !window.contains(p.coords()) {
                            return invalid(format!("layer {k}: point {:?} outside the window", p.coords()));
                        }
                        Ok(p.0)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Layer::build(k, dim, raw)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Environment {
            layers,
            window,
            master_seed,
        })
    }

    /// Number of layers, i.e. the longest admissible path length.
    pub fn n(&self) -> usize {
        self.layers.len()
    }

    pub fn dim(&self) -> usize {
        self.window.dimension()
    }

    pub fn window(&self) -> &WindowSpec {
        &self.window
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn origin(&self) -> SpacePoint {
        SpacePoint::origin(self.dim())
    }

    /// Layer at time `k` (`1 <= k <= n`).
    pub fn layer(&self, k: usize) -> &Layer {
        assert!(k >= 1 && k <= self.n(), "layer {k} out of range 1..={}", self.n());
        &self.layers[k - 1]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn total_points(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    /// Writes the JSON-lines layer format: a header line followed by one line
    /// per layer.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let header = EnvHeader {
            n: self.n(),
            d: self.dim(),
            w: self.window.half_width(),
            seed: self.master_seed,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for layer in &self.layers {
            let line = LayerLine {
                k: layer.time_index,
                pts: layer.points().map(<[f64]>::to_vec).collect(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header: EnvHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::Format("empty environment file".into())),
        };
        let window = WindowSpec::new(header.w, header.d)?;
        let mut layers = vec![Vec::new(); header.n];
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LayerLine = serde_json::from_str(&line)?;
            if parsed.k == 0 || parsed.k > header.n {
                return Err(Error::Format(format!("layer index {} outside 1..={}", parsed.k, header.n)));
            }
            layers[parsed.k - 1] = parsed
                .pts
                .into_iter()
                .map(SpacePoint::new)
                .collect::<Result<Vec<_>>>()?;
        }
        Environment::from_layers(window, header.seed, layers)
    }
}

#[derive(Serialize, Deserialize)]
struct EnvHeader {
    n: usize,
    d: usize,
    #[serde(rename = "W")]
    w: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct LayerLine {
    k: usize,
    pts: Vec<Vec<f64>>,
}

/// Samples layers `1..=n` of a unit-intensity Poisson process on `[-W, W]^d`.
pub fn sample_environment(n: usize, d: usize, window: WindowSpec, seed: u64) -> Result<Environment> {
    sample_environment_with_budget(n, d, window, seed, DEFAULT_POINT_BUDGET)
}

pub fn sample_environment_with_budget(
    n: usize,
    d: usize,
    window: WindowSpec,
    seed: u64,
    point_budget: f64,
) -> Result<Environment> {
    if n == 0 {
        return invalid("path length n must be at least 1");
    }
    if d == 0 || d != window.dimension() {
        return invalid(format!("dimension {d} does not match window dimension {}", window.dimension()));
    }
    let expected = n as f64 * window.volume();
    if !(expected <= point_budget) {
        return Err(Error::WindowTooLarge {
            expected,
            budget: point_budget,
        });
    }
    let layers = (1..=n)
        .into_par_iter()
        .map(|k| sample_layer(k, &window, seed))
        .collect();
    Ok(Environment {
        layers,
        window,
        master_seed: seed,
    })
}

/// Samples the layer at time `k` alone. Identical to the corresponding layer
/// of [`sample_environment`].
pub fn sample_layer(k: usize, window: &WindowSpec, seed: u64) -> Layer {
    let d = window.dimension();
    let w = window.half_width();
    let lo = (-w / TILE_SIDE).floor() as i64;
    let hi = (w / TILE_SIDE).floor() as i64;
    let poisson = Poisson::new(TILE_SIDE.powi(d as i32)).expect("positive tile volume");

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut tile = vec![lo; d];
    let mut key = Vec::with_capacity(d + 3);
    loop {
        key.clear();
        key.extend([seed, k as u64, d as u64]);
        key.extend(tile.iter().map(|&t| t as u64));
        let mut rng = rng::stream(&key);
        let count = poisson.sample(&mut rng) as usize;
        for _ in 0..count {
            let p: Vec<f64> = tile
                .iter()
                .map(|&t| (t as f64 + rng.random::<f64>()) * TILE_SIDE)
                .collect();
            if window.contains(&p) {
                points.push(p);
            }
        }
        // odometer over the tile grid
        let mut axis = 0;
        loop {
            if axis == d {
                return finish_layer(k, d, points);
            }
            if tile[axis] < hi {
                tile[axis] += 1;
                break;
            }
            tile[axis] = lo;
            axis += 1;
        }
    }
}

fn finish_layer(k: usize, d: usize, mut points: Vec<Vec<f64>>) -> Layer {
    points.sort_by(|a, b| lex_cmp(a, b));
    // exact duplicates have probability zero; drop them if they ever occur
    points.dedup();
    Layer {
        time_index: k,
        dim: d,
        coords: points.into_iter().flatten().collect(),
    }
}

/// Builds an environment holding exactly the given points. The window is the
/// smallest symmetric box containing every point, padded by 1.
pub fn deterministic_environment(dim: usize, points_by_layer: Vec<Vec<Vec<f64>>>) -> Result<Environment> {
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    let mut reach: f64 = 0.0;
    let mut layers = Vec::with_capacity(points_by_layer.len());
    for (i, pts) in points_by_layer.into_iter().enumerate() {
        let mut layer = Vec::with_capacity(pts.len());
        for p in pts {
            if p.len() != dim {
                return invalid(format!("layer {}: expected {dim} coordinates, got {}", i + 1, p.len()));
            }
            let p = SpacePoint::new(p)?;
            reach = p.coords().iter().fold(reach, |m, c| m.max(c.abs()));
            layer.push(p);
        }
        layers.push(layer);
    }
    let window = WindowSpec::new(reach + 1.0, dim)?;
    Environment::from_layers(window, 0, layers)
}

/// True iff every point of the path stays at least `margin_fraction * W` away
/// from every face of the window.
pub fn window_adequate(result: &GeodesicResult, window: &WindowSpec, margin_fraction: f64) -> bool {
    assert!(
        margin_fraction > 0.0 && margin_fraction < 0.5,
        "margin fraction must lie in (0, 0.5), got {margin_fraction}"
    );
    let margin = margin_fraction * window.half_width();
    std::iter::once(result.path().start.x.coords())
        .chain(result.path().steps.iter().map(SpacePoint::coords))
        .all(|x| window.distance_to_boundary(x) >= margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_length() {
        let w = WindowSpec::new(10.0, 1).unwrap();
        assert!(matches!(sample_environment(0, 1, w, 42), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rejects_window_over_budget() {
        let w = WindowSpec::new(1.0e6, 1).unwrap();
        let err = sample_environment_with_budget(10, 1, w, 1, 1.0e6).unwrap_err();
        assert!(matches!(err, Error::WindowTooLarge { .. }));
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = WindowSpec::new(10.0, 1).unwrap();
        let a = sample_environment(3, 1, w, 42).unwrap();
        let b = sample_environment(3, 1, w, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 3);
        let c = sample_environment(3, 1, w, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn layers_are_sorted_and_inside() {
        let w = WindowSpec::new(7.5, 2).unwrap();
        let env = sample_environment(4, 2, w, 9).unwrap();
        for layer in env.layers() {
            let pts: Vec<_> = layer.points().collect();
            assert!(pts.windows(2).all(|p| lex_cmp(p[0], p[1]) == Ordering::Less));
            assert!(pts.iter().all(|p| w.contains(p)));
        }
    }

    #[test]
    fn layer_order_independence() {
        let w = WindowSpec::new(40.0, 1).unwrap();
        let env = sample_environment(6, 1, w, 5).unwrap();
        for k in (1..=6).rev() {
            assert_eq!(&sample_layer(k, &w, 5), env.layer(k));
        }
    }

    #[test]
    fn doubled_window_is_a_superset() {
        let w = WindowSpec::new(20.0, 1).unwrap();
        let small = sample_layer(3, &w, 11);
        let big = sample_layer(3, &w.doubled(), 11);
        let inside: Vec<_> = big.points().filter(|p| w.contains(p)).collect();
        assert_eq!(inside, small.points().collect::<Vec<_>>());
    }

    #[test]
    fn fixture_one_point_per_layer() {
        let env = deterministic_environment(1, vec![vec![vec![1.0]], vec![vec![1.0]]]).unwrap();
        assert_eq!(env.n(), 2);
        assert_eq!(env.layer(1).len(), 1);
        assert_eq!(env.layer(2).point(0), &[1.0]);
        assert_eq!(env.window().half_width(), 2.0);
    }

    #[test]
    fn fixture_accepts_empty_layer() {
        let env = deterministic_environment(1, vec![vec![vec![0.5]], vec![], vec![vec![2.0]]]).unwrap();
        assert!(env.layer(2).is_empty());
    }

    #[test]
    fn fixture_rejects_duplicates_and_nan() {
        let dup = deterministic_environment(1, vec![vec![vec![1.0], vec![1.0]]]);
        assert!(matches!(dup, Err(Error::DuplicatePoint { layer: 1 })));
        let nan = deterministic_environment(1, vec![vec![vec![f64::NAN]]]);
        assert!(matches!(nan, Err(Error::InvalidParameter(_))));
        let wrong_dim = deterministic_environment(2, vec![vec![vec![1.0]]]);
        assert!(wrong_dim.is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let w = WindowSpec::new(5.0, 2).unwrap();
        let env = sample_environment(3, 2, w, 77).unwrap();
        let mut buf = Vec::new();
        env.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"n\":3,\"d\":2,\"W\":5.0,\"seed\":77}\n"));
        assert_eq!(text.lines().count(), 4);
        let back = Environment::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, env);
    }

    #[test]
    fn find_locates_points() {
        let env = deterministic_environment(2, vec![vec![vec![1.0, 2.0], vec![-1.0, 0.0], vec![1.0, -3.0]]]).unwrap();
        let layer = env.layer(1);
        assert_eq!(layer.find(&[1.0, -3.0]), Some(1));
        assert_eq!(layer.find(&[1.0, 2.0]), Some(2));
        assert_eq!(layer.find(&[0.0, 0.0]), None);
    }
}
