//! Heat-kernel tables: n-step transition probabilities of the simple random
//! walk, computed by dynamic-programming convolution with uniform `1/(2d)`
//! steps and absorption outside a box. Lost mass is tracked per slice.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::lattice::{LatBox, Lattice, Site};

use super::grid::Stencil;
use super::PotentialError;

/// Dense table of `p_n(source, y)` for `0 <= n <= n_max`, `y` in an
/// L-infinity box of radius `r` around the source. Mass stepping out of the
/// box is absorbed and recorded, so each slice sums to `1 - lost_mass[n]`.
#[derive(Debug, Clone)]
pub struct HeatKernelTable {
    pub source: Site,
    pub bx: LatBox,
    pub n_max: usize,
    slices: Vec<Vec<f64>>,
    /// Cumulative absorbed mass by time `n`.
    pub lost_mass: Vec<f64>,
}

impl HeatKernelTable {
    /// Probability `p_n(source, y)`; zero outside the box.
    pub fn value(&self, n: usize, y: &Site) -> f64 {
        match self.bx.flat_index(y) {
            Some(idx) => self.slices[n][idx],
            None => 0.0,
        }
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        &self.slices[n]
    }

    /// Partial Green sum `sum_{n <= n_max} p_n(source, y)`; a lower bound on
    /// the Green function.
    pub fn green_partial(&self, y: &Site) -> f64 {
        match self.bx.flat_index(y) {
            Some(idx) => self.slices.iter().map(|s| s[idx]).sum(),
            None => 0.0,
        }
    }
}

/// Builds the dense heat-kernel table. Refuses if the table would exceed
/// `mem_cap_bytes`.
pub fn heat_kernel(
    lattice: &Lattice,
    source: &Site,
    n_max: usize,
    r: i32,
    mem_cap_bytes: usize,
) -> Result<HeatKernelTable, PotentialError> {
    let bx = LatBox::new(source.clone(), r);
    let volume = bx.volume();
    let need = volume
        .checked_mul(n_max + 1)
        .and_then(|v| v.checked_mul(8))
        .ok_or(PotentialError::MemoryCap {
            need_bytes: usize::MAX,
            cap_bytes: mem_cap_bytes,
        })?;
    if need > mem_cap_bytes {
        return Err(PotentialError::MemoryCap {
            need_bytes: need,
            cap_bytes: mem_cap_bytes,
        });
    }
    let st = Stencil::of(&bx);
    let inv_deg = 1.0 / (lattice.degree() as f64);

    let mut slices = Vec::with_capacity(n_max + 1);
    let mut first = vec![0.0; volume];
    first[bx.flat_index(source).expect("source is the box center")] = 1.0;
    slices.push(first);
    let mut lost = vec![0.0];

    for n in 0..n_max {
        let prev = &slices[n];
        let mut next = vec![0.0; volume];
        step_slice(&st, prev, &mut next, inv_deg);
        let mass_prev: f64 = prev.iter().sum();
        let mass_next: f64 = next.iter().sum();
        lost.push(lost[n] + (mass_prev - mass_next));
        slices.push(next);
    }

    Ok(HeatKernelTable {
        source: source.clone(),
        bx,
        n_max,
        slices,
        lost_mass: lost,
    })
}

fn step_slice(st: &Stencil, prev: &[f64], next: &mut [f64], inv_deg: f64) {
    let side = st.side;
    for (i, v) in prev.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let w = v * inv_deg;
        let pos = st.positions(i);
        for axis in 0..st.dim {
            if pos[axis] > 0 {
                next[i - st.strides[axis]] += w;
            }
            if pos[axis] + 1 < side {
                next[i + st.strides[axis]] += w;
            }
        }
    }
}

/// Streams heat-kernel slices `p_0, p_1, ...` to a visitor without storing
/// them, growing the active region with the walk's spread (the mass outside
/// five standard deviations is absorbed; at that width the absorbed mass per
/// slice is below 1e-12 of the total). The visitor receives the slice index,
/// the box, and the slice itself and returns `false` to stop early.
pub fn scan_heat_kernel(
    lattice: &Lattice,
    source: &Site,
    n_max: usize,
    r_cap: i32,
    mut visit: impl FnMut(usize, &LatBox, &[f64]) -> bool,
) -> Result<(), PotentialError> {
    let bx = LatBox::new(source.clone(), r_cap);
    let volume = bx.volume();
    let st = Stencil::of(&bx);
    let inv_deg = 1.0 / (lattice.degree() as f64);
    let d = lattice.dim() as f64;

    let mut cur = vec![0.0; volume];
    let mut nxt = vec![0.0; volume];
    cur[bx.flat_index(source).unwrap()] = 1.0;
    if !visit(0, &bx, &cur) {
        return Ok(());
    }
    for n in 0..n_max {
        // active radius: 5 sigma plus a pad, clamped to the cap
        let sigma = ((n + 1) as f64 / d).sqrt();
        let active = ((5.0 * sigma).ceil() as i32 + 2).min(r_cap);
        step_active(&st, &cur, &mut nxt, inv_deg, r_cap, active);
        std::mem::swap(&mut cur, &mut nxt);
        if !visit(n + 1, &bx, &cur) {
            return Ok(());
        }
    }
    Ok(())
}

/// One DP step restricted to the centered sub-box of radius `active`.
fn step_active(st: &Stencil, prev: &[f64], next: &mut [f64], inv_deg: f64, r_cap: i32, active: i32) {
    let side = st.side;
    let lo = (r_cap - active) as usize;
    let hi = (r_cap + active) as usize;
    // zero the target region (only cells reachable this step)
    let lo0 = lo.saturating_sub(1);
    let hi0 = (hi + 1).min(side - 1);
    zero_region(st, next, lo0, hi0);
    let mut pos = vec![lo; st.dim];
    'outer: loop {
        let mut idx = 0;
        for a in 0..st.dim {
            idx += pos[a] * st.strides[a];
        }
        let v = prev[idx];
        if v != 0.0 {
            let w = v * inv_deg;
            for axis in 0..st.dim {
                if pos[axis] > 0 {
                    next[idx - st.strides[axis]] += w;
                }
                if pos[axis] + 1 < side {
                    next[idx + st.strides[axis]] += w;
                }
            }
        }
        // odometer over [lo, hi]^d
        let mut axis = st.dim;
        loop {
            if axis == 0 {
                break 'outer;
            }
            axis -= 1;
            if pos[axis] < hi {
                pos[axis] += 1;
                for p in pos.iter_mut().skip(axis + 1) {
                    *p = lo;
                }
                break;
            }
        }
    }
}

fn zero_region(st: &Stencil, buf: &mut [f64], lo: usize, hi: usize) {
    let mut pos = vec![lo; st.dim];
    'outer: loop {
        let mut base = 0;
        for a in 0..st.dim - 1 {
            base += pos[a] * st.strides[a];
        }
        buf[base + lo..=base + hi].fill(0.0);
        let mut axis = st.dim - 1;
        loop {
            if axis == 0 {
                break 'outer;
            }
            axis -= 1;
            if pos[axis] < hi {
                pos[axis] += 1;
                for p in pos.iter_mut().skip(axis + 1) {
                    *p = lo;
                }
                break;
            }
        }
    }
}

/// Exact-rational heat kernel for tiny horizons, used to ground the
/// floating-point tables. `n_max <= 20` is enforced.
pub struct ExactHeatKernel {
    pub bx: LatBox,
    pub slices: Vec<Vec<BigRational>>,
    pub lost_mass: Vec<BigRational>,
}

impl ExactHeatKernel {
    pub fn value(&self, n: usize, y: &Site) -> BigRational {
        match self.bx.flat_index(y) {
            Some(idx) => self.slices[n][idx].clone(),
            None => BigRational::zero(),
        }
    }

    pub fn green_partial(&self, y: &Site) -> BigRational {
        match self.bx.flat_index(y) {
            Some(idx) => self.slices.iter().map(|s| s[idx].clone()).sum(),
            None => BigRational::zero(),
        }
    }
}

pub fn heat_kernel_exact(
    lattice: &Lattice,
    source: &Site,
    n_max: usize,
    r: i32,
) -> Result<ExactHeatKernel, PotentialError> {
    if n_max > 20 {
        return Err(PotentialError::ExactHorizon { n_max });
    }
    let bx = LatBox::new(source.clone(), r);
    let st = Stencil::of(&bx);
    let volume = bx.volume();
    let inv_deg = BigRational::new(BigInt::from(1), BigInt::from(lattice.degree()));

    let mut slices: Vec<Vec<BigRational>> = Vec::with_capacity(n_max + 1);
    let mut first = vec![BigRational::zero(); volume];
    first[bx.flat_index(source).unwrap()] = BigRational::one();
    slices.push(first);
    let mut lost = vec![BigRational::zero()];

    for n in 0..n_max {
        let prev = slices[n].clone();
        let mut next = vec![BigRational::zero(); volume];
        for (i, v) in prev.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let w = v * &inv_deg;
            let pos = st.positions(i);
            for axis in 0..st.dim {
                if pos[axis] > 0 {
                    next[i - st.strides[axis]] += w.clone();
                }
                if pos[axis] + 1 < st.side {
                    next[i + st.strides[axis]] += w.clone();
                }
            }
        }
        let mass_prev: BigRational = prev.iter().cloned().sum();
        let mass_next: BigRational = next.iter().cloned().sum();
        lost.push(&lost[n] + (mass_prev - mass_next));
        slices.push(next);
    }
    Ok(ExactHeatKernel {
        bx,
        slices,
        lost_mass: lost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> Lattice {
        Lattice::new(3).unwrap()
    }

    #[test]
    fn small_values() {
        let l = d3();
        let t = heat_kernel(&l, &Site::origin(3), 4, 6, 1 << 30).unwrap();
        assert_eq!(t.value(0, &Site::origin(3)), 1.0);
        assert!((t.value(1, &Site::unit(3, 0)) - 1.0 / 6.0).abs() < 1e-15);
        assert!((t.value(2, &Site::origin(3)) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn slice_mass_and_parity() {
        let l = d3();
        let t = heat_kernel(&l, &Site::origin(3), 8, 5, 1 << 30).unwrap();
        for n in 0..=8 {
            let mass: f64 = t.slice(n).iter().sum();
            assert!((mass + t.lost_mass[n] - 1.0).abs() < 1e-12, "n={n}");
            // parity and support
            for (i, v) in t.slice(n).iter().enumerate() {
                if *v != 0.0 {
                    let s = t.bx.site_at(i);
                    let dist = s.l1_norm();
                    assert!(dist <= n as i64);
                    assert_eq!((dist as usize) % 2, n % 2);
                }
            }
        }
    }

    #[test]
    fn memory_cap_refused() {
        let l = d3();
        let err = heat_kernel(&l, &Site::origin(3), 100, 50, 1024).unwrap_err();
        assert!(matches!(err, PotentialError::MemoryCap { .. }));
    }

    #[test]
    fn exact_mode_masses_are_exact() {
        let l = d3();
        let t = heat_kernel_exact(&l, &Site::origin(3), 6, 3).unwrap();
        for n in 0..=6 {
            let mass: BigRational = t.slices[n].iter().cloned().sum();
            assert_eq!(mass + t.lost_mass[n].clone(), BigRational::one(), "n={n}");
        }
        // p_2(0,0) = 1/6 exactly
        let p2 = t.value(2, &Site::origin(3));
        assert_eq!(p2, BigRational::new(BigInt::from(1), BigInt::from(6)));
        assert!(heat_kernel_exact(&l, &Site::origin(3), 21, 3).is_err());
    }

    #[test]
    fn scan_matches_dense_table() {
        let l = d3();
        let dense = heat_kernel(&l, &Site::origin(3), 12, 14, 1 << 30).unwrap();
        let mut checked = 0;
        scan_heat_kernel(&l, &Site::origin(3), 12, 14, |n, bx, slice| {
            let idx = bx.flat_index(&Site::origin(3)).unwrap();
            assert!((slice[idx] - dense.value(n, &Site::origin(3))).abs() < 1e-14);
            let e1 = bx.flat_index(&Site::unit(3, 0)).unwrap();
            assert!((slice[e1] - dense.value(n, &Site::unit(3, 0))).abs() < 1e-14);
            checked += 1;
            true
        })
        .unwrap();
        assert_eq!(checked, 13);
    }
}
