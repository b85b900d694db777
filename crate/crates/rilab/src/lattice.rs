//! The graph layer: `Z^d` (d >= 3) sites, adjacency, balls, boundaries,
//! boxes and translations.
//!
//! Everything here is immutable after construction and safe to share across
//! worker threads. Iteration orders are deterministic given the contents, so
//! a fixed seed reproduces bit-identical downstream output.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported lattice dimension. Window sides are a few hundred at
/// most, so coordinates always fit `i32`.
pub const MAX_DIM: usize = 6;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("lattice dimension must satisfy 3 <= d <= {MAX_DIM}, got {0}")]
    BadDimension(usize),
    #[error("site has {got} coordinates, lattice dimension is {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("operation requires a nonempty set")]
    EmptySet,
    #[error("malformed finite-set text: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A lattice vertex: `d` signed integer coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site(pub Vec<i32>);

impl Site {
    pub fn new(coords: Vec<i32>) -> Self {
        Site(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    /// Unit vector along `axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut c = vec![0; dim];
        c[axis] = 1;
        Site(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64).abs()).sum()
    }

    pub fn linf_norm(&self) -> i32 {
        self.0.iter().map(|&c| c.abs()).max().unwrap_or(0)
    }

    pub fn l2_sq(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn l1_dist(&self, other: &Site) -> i64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| ((a as i64) - (b as i64)).abs())
            .sum()
    }

    pub fn linf_dist(&self, other: &Site) -> i32 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, v: &[i32]) -> Site {
        Site(self.0.iter().zip(v).map(|(&a, &b)| a + b).collect())
    }

    pub fn sub(&self, other: &Site) -> Vec<i32> {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a - b).collect()
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// The ambient lattice `Z^d`. Only the dimension is stored; `d >= 3` is a
/// transience requirement and rejected otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
}

impl Lattice {
    pub fn new(dim: usize) -> Result<Self, LatticeError> {
        if !(3..=MAX_DIM).contains(&dim) {
            return Err(LatticeError::BadDimension(dim));
        }
        Ok(Lattice { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vertex degree, `2d`.
    pub fn degree(&self) -> usize {
        2 * self.dim
    }

    /// The `2d` nearest neighbors of `x` in deterministic order:
    /// axis-major, minus before plus.
    pub fn neighbors(&self, x: &Site) -> Vec<Site> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            for sign in [-1i32, 1] {
                let mut c = x.0.clone();
                c[axis] += sign;
                out.push(Site(c));
            }
        }
        out
    }

    /// Neighbor `k` of `x` under the same ordering as [`Lattice::neighbors`].
    pub fn neighbor(&self, x: &Site, k: usize) -> Site {
        let axis = k / 2;
        let sign = if k % 2 == 0 { -1 } else { 1 };
        let mut c = x.0.clone();
        c[axis] += sign;
        Site(c)
    }

    /// Graph-distance (L1) ball of radius `t` around `x`.
    pub fn ball(&self, x: &Site, t: i32) -> FiniteSet {
        assert!(t >= 0, "ball radius must be nonnegative");
        let mut sites = Vec::new();
        let mut cur = vec![0i32; self.dim];
        enumerate_l1(&mut cur, 0, t, &mut |v| {
            sites.push(x.add(v));
        });
        FiniteSet::from_sites(sites)
    }

    /// Number of sites in an L1 ball of radius `t` (dimension-only count).
    pub fn ball_size(&self, t: i32) -> usize {
        self.ball(&Site::origin(self.dim), t).len()
    }
}

fn enumerate_l1(cur: &mut Vec<i32>, axis: usize, budget: i32, f: &mut impl FnMut(&[i32])) {
    if axis == cur.len() - 1 {
        for c in -budget..=budget {
            cur[axis] = c;
            f(cur);
        }
        return;
    }
    for c in -budget..=budget {
        cur[axis] = c;
        enumerate_l1(cur, axis + 1, budget - c.abs(), f);
    }
}

/// A finite, deduplicated, lexicographically ordered set of sites with O(1)
/// membership queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSet {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl FiniteSet {
    pub fn from_sites(mut sites: Vec<Site>) -> Self {
        sites.sort();
        sites.dedup();
        let index = sites
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        FiniteSet { sites, index }
    }

    pub fn singleton(site: Site) -> Self {
        Self::from_sites(vec![site])
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: &Site) -> bool {
        self.index.contains_key(site)
    }

    /// Position of `site` in the canonical iteration order.
    pub fn position(&self, site: &Site) -> Option<usize> {
        self.index.get(site).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn dim(&self) -> Option<usize> {
        self.sites.first().map(|s| s.dim())
    }

    /// Elementwise shift by `v`.
    pub fn translate(&self, v: &[i32]) -> FiniteSet {
        FiniteSet::from_sites(self.sites.iter().map(|s| s.add(v)).collect())
    }

    /// Smallest L-infinity radius around the origin containing the set.
    pub fn linf_radius(&self) -> i32 {
        self.sites.iter().map(|s| s.linf_norm()).max().unwrap_or(0)
    }

    /// Sites of `self` with at least one neighbor outside `self`.
    pub fn inner_boundary(&self, lattice: &Lattice) -> FiniteSet {
        let sites = self
            .sites
            .iter()
            .filter(|s| lattice.neighbors(s).iter().any(|n| !self.contains(n)))
            .cloned()
            .collect();
        FiniteSet::from_sites(sites)
    }

    /// `|boundary| / |set|` as an exact reduced fraction plus a float.
    pub fn isoperimetric_ratio(&self, lattice: &Lattice) -> Result<(u64, u64, f64), LatticeError> {
        if self.is_empty() {
            return Err(LatticeError::EmptySet);
        }
        let b = self.inner_boundary(lattice).len() as u64;
        let n = self.len() as u64;
        let g = gcd(b.max(1), n);
        let (num, den) = if b == 0 { (0, 1) } else { (b / g, n / g) };
        Ok((num, den, b as f64 / n as f64))
    }

    /// Writes the one-site-per-line text format with a `dim=<d>` header.
    pub fn write_text(&self, w: &mut impl Write) -> Result<(), LatticeError> {
        let dim = self.dim().ok_or(LatticeError::EmptySet)?;
        writeln!(w, "dim={dim}")?;
        for s in &self.sites {
            writeln!(w, "{s}")?;
        }
        Ok(())
    }

    /// Parses the text format produced by [`FiniteSet::write_text`].
    pub fn read_text(r: &mut impl BufRead) -> Result<Self, LatticeError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| LatticeError::Parse("empty input".into()))??;
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .ok_or_else(|| LatticeError::Parse(format!("expected dim=<d>, got {header:?}")))?
            .parse()
            .map_err(|e| LatticeError::Parse(format!("bad dimension: {e}")))?;
        let mut sites = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let coords: Result<Vec<i32>, _> = t.split_whitespace().map(str::parse).collect();
            let coords = coords.map_err(|e| LatticeError::Parse(format!("bad site: {e}")))?;
            if coords.len() != dim {
                return Err(LatticeError::DimensionMismatch {
                    got: coords.len(),
                    want: dim,
                });
            }
            sites.push(Site(coords));
        }
        Ok(FiniteSet::from_sites(sites))
    }
}

/// An L-infinity box `{x : |x - center|_inf <= radius}` with flat row-major
/// indexing (axis 0 slowest). Sides are `2*radius + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatBox {
    pub center: Site,
    pub radius: i32,
}

impl LatBox {
    pub fn new(center: Site, radius: i32) -> Self {
        assert!(radius >= 0);
        LatBox { center, radius }
    }

    pub fn centered(dim: usize, radius: i32) -> Self {
        Self::new(Site::origin(dim), radius)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    /// Total number of sites, `(2 radius + 1)^d`.
    pub fn volume(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.linf_dist(&self.center) <= self.radius
    }

    /// Flat index of `site` in canonical order, if inside the box.
    pub fn flat_index(&self, site: &Site) -> Option<usize> {
        let side = self.side();
        let mut idx = 0usize;
        for (c, c0) in site.0.iter().zip(&self.center.0) {
            let off = c - c0 + self.radius;
            if off < 0 || off as usize >= side {
                return None;
            }
            idx = idx * side + off as usize;
        }
        Some(idx)
    }

    /// Site at flat index `idx` (canonical order).
    pub fn site_at(&self, idx: usize) -> Site {
        let side = self.side();
        let d = self.dim();
        let mut coords = vec![0i32; d];
        let mut rest = idx;
        for axis in (0..d).rev() {
            let off = (rest % side) as i32;
            rest /= side;
            coords[axis] = self.center.0[axis] + off - self.radius;
        }
        Site(coords)
    }

    /// All sites in canonical (flat index) order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.volume()).map(move |i| self.site_at(i))
    }

    pub fn to_finite_set(&self) -> FiniteSet {
        FiniteSet::from_sites(self.sites().collect())
    }

    /// Whether `site` lies on the inner boundary shell of the box.
    pub fn on_rim(&self, site: &Site) -> bool {
        self.contains(site) && site.linf_dist(&self.center) == self.radius
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
