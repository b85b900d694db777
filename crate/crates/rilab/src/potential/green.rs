//! Green-function engine.
//!
//! `g_R(v)`, the expected visits to `v` by a walk from the origin absorbed
//! outside the radius-`R` box, increases to `g(v)` as `R` grows; the deficit
//! decays like `c/R` (the absorbed mass re-enters with probability of that
//! order). Solving at three radii gives a monotone lower bound, a Richardson
//! extrapolation in `1/R`, and a self-consistent margin from the difference
//! between the two- and three-point fits.

use crate::lattice::{LatBox, Lattice, Site};

use super::grid::solve_absorbing;
use super::{Interval, PotentialError};

/// Extrapolated Green values `g(0, v)` for offsets `|v|_inf <= r_lo`,
/// with per-offset margins.
#[derive(Debug, Clone)]
pub struct GreenTable {
    pub dim: usize,
    pub r_lo: i32,
    pub r_hi: i32,
    bx: LatBox,
    values: Vec<f64>,
    margins: Vec<f64>,
}

impl GreenTable {
    /// Extrapolated `g(0, v)`. Panics if `|v|_inf > r_lo`.
    pub fn value(&self, v: &Site) -> f64 {
        let idx = self
            .bx
            .flat_index(v)
            .expect("offset outside the trusted green box");
        self.values[idx]
    }

    pub fn margin(&self, v: &Site) -> f64 {
        let idx = self
            .bx
            .flat_index(v)
            .expect("offset outside the trusted green box");
        self.margins[idx]
    }

    pub fn interval(&self, v: &Site) -> Interval {
        Interval::around(self.value(v), self.margin(v))
    }

    /// `g(x, x')` via translation invariance.
    pub fn pair(&self, x: &Site, x2: &Site) -> f64 {
        self.value(&Site::new(x2.sub(x)))
    }

    pub fn pair_interval(&self, x: &Site, x2: &Site) -> Interval {
        self.interval(&Site::new(x2.sub(x)))
    }

    pub fn covers(&self, v: &Site) -> bool {
        v.linf_norm() <= self.r_lo
    }

    /// Diagonal value `g(0, 0)`.
    pub fn diagonal(&self) -> Interval {
        self.interval(&Site::origin(self.dim))
    }
}

/// Builds a Green table trusted on offsets `|v|_inf <= r_lo` from absorbing
/// solves at radii `r_lo/2`, `r_lo` and `r_hi` (usually `2 r_lo`).
pub fn green_table(lattice: &Lattice, r_lo: i32, r_hi: i32) -> Result<GreenTable, PotentialError> {
    if r_hi <= r_lo || r_lo < 4 {
        return Err(PotentialError::BadInput(format!(
            "green radii must satisfy 4 <= r_lo < r_hi, got ({r_lo}, {r_hi})"
        )));
    }
    let dim = lattice.dim();
    let r_mid = r_lo;
    let r_sm = r_lo / 2;

    let f_sm = green_solve(lattice, r_sm)?;
    let f_mid = green_solve(lattice, r_mid)?;
    let f_hi = green_solve(lattice, r_hi)?;

    let bx = LatBox::centered(dim, r_lo);
    let n = bx.volume();
    let mut values = vec![0.0; n];
    let mut margins = vec![0.0; n];

    let (ra, rb, rc) = (r_sm as f64, r_mid as f64, r_hi as f64);

    // The box-truncation deficit g - g_R is an absorbed-flux term, nearly
    // independent of the offset. Estimate the second-order part of it deep
    // inside the small box so it can be applied to offsets the small solve
    // does not cover.
    let mut deltas = Vec::new();
    for i in 0..n {
        let v = bx.site_at(i);
        if v.linf_norm() > r_sm / 2 {
            continue;
        }
        let a2 = (rc * f_hi.read(&v) - rb * f_mid.read(&v)) / (rc - rb);
        let a3 = fit3(ra, f_sm.read(&v), rb, f_mid.read(&v), rc, f_hi.read(&v));
        deltas.push(a3 - a2);
    }
    deltas.sort_by(|a, b| a.total_cmp(b));
    let delta_bar = deltas[deltas.len() / 2];

    for i in 0..n {
        let v = bx.site_at(i);
        let g_mid = f_mid.read(&v);
        let g_hi = f_hi.read(&v);
        // two-point fit of g_R = g - c/R
        let a2 = (rc * g_hi - rb * g_mid) / (rc - rb);
        let (val, mar) = if v.linf_norm() <= r_sm {
            // three-point fit including the 1/R^2 deficit term; its residual
            // stays below 0.3 of the applied second-order correction at all
            // calibrated radii (below 0.15 for r_sm >= 8)
            let a3 = fit3(ra, f_sm.read(&v), rb, g_mid, rc, g_hi);
            let m = (0.6 * (a3 - a2).abs()).max(1e-9);
            (a3, m)
        } else {
            // apply the offset-independent second-order deficit
            (a2 + delta_bar, delta_bar.abs().max(1e-9))
        };
        values[i] = val;
        margins[i] = mar;
    }

    Ok(GreenTable {
        dim,
        r_lo,
        r_hi,
        bx,
        values,
        margins,
    })
}

/// Constant term of the exact `{1, 1/R, 1/R^2}` fit through three points.
fn fit3(ra: f64, ga: f64, rb: f64, gb: f64, rc: f64, gc: f64) -> f64 {
    // Solve [1 1/r 1/r^2][a b c]^T = g by elimination on the 3x3 system.
    let mut m = [
        [1.0, 1.0 / ra, 1.0 / (ra * ra), ga],
        [1.0, 1.0 / rb, 1.0 / (rb * rb), gb],
        [1.0, 1.0 / rc, 1.0 / (rc * rc), gc],
    ];
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        for j in col..4 {
            m[col][j] /= d;
        }
        for row in 0..3 {
            if row != col {
                let f = m[row][col];
                for j in col..4 {
                    m[row][j] -= f * m[col][j];
                }
            }
        }
    }
    m[0][3]
}

struct GreenField {
    bx: LatBox,
    data: Vec<f64>,
}

impl GreenField {
    fn read(&self, v: &Site) -> f64 {
        match self.bx.flat_index(v) {
            Some(i) => self.data[i],
            None => 0.0,
        }
    }
}

fn green_solve(lattice: &Lattice, r: i32) -> Result<GreenField, PotentialError> {
    let bx = LatBox::centered(lattice.dim(), r);
    let n = bx.volume();
    let mask = vec![1u8; n];
    let mut b = vec![0.0; n];
    b[bx.flat_index(&Site::origin(lattice.dim())).unwrap()] = 1.0;
    let data = solve_absorbing(&bx, &mask, &b, 1e-13)?;
    Ok(GreenField { bx, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference values computed by an independent high-precision quadrature
    /// of the continuous-time representation and cross-checked in this crate
    /// by the Monte Carlo green oracle (see `oracle.rs` tests).
    pub const G3_REF: &[([i32; 3], f64)] = &[
        ([0, 0, 0], 1.516386059152),
        ([1, 0, 0], 0.516386059152),
        ([1, 1, 0], 0.331148602126),
        ([1, 1, 1], 0.261470126386),
        ([2, 0, 0], 0.257335887254),
        ([2, 1, 0], 0.215589620841),
        ([2, 1, 1], 0.191791650646),
        ([2, 2, 0], 0.168331035586),
        ([3, 0, 0], 0.165270781011),
        ([2, 2, 1], 0.156952412779),
        ([2, 2, 2], 0.135908196175),
        ([3, 1, 0], 0.153138898791),
    ];

    #[test]
    fn intervals_contain_reference_values() {
        let l = Lattice::new(3).unwrap();
        let t = green_table(&l, 16, 32).unwrap();
        for (v, g) in G3_REF {
            let iv = t.interval(&Site::new(v.to_vec()));
            assert!(
                iv.contains(*g),
                "g{v:?}: interval [{:.8}, {:.8}] misses {g:.8}",
                iv.lo,
                iv.hi
            );
            assert!(iv.width() < 2e-3, "g{v:?} width {:.2e}", iv.width());
        }
    }

    #[test]
    fn symmetry_and_diagonal_dominance() {
        let l = Lattice::new(3).unwrap();
        let t = green_table(&l, 8, 16).unwrap();
        let g00 = t.value(&Site::origin(3));
        for i in 0..t.bx.volume() {
            let v = t.bx.site_at(i);
            let neg = Site::new(v.coords().iter().map(|c| -c).collect());
            assert!((t.value(&v) - t.value(&neg)).abs() < 1e-12);
            if v != Site::origin(3) {
                assert!(t.value(&v) < g00);
            }
        }
    }

    /// Prints the convergence diagnostics used to pin the margin constants.
    #[test]
    #[ignore]
    fn calibration_dump() {
        let l = Lattice::new(3).unwrap();
        for (r_lo, r_hi) in [(8, 16), (12, 24), (16, 32), (24, 48)] {
            let t = green_table(&l, r_lo, r_hi).unwrap();
            for (v, g) in G3_REF {
                let s = Site::new(v.to_vec());
                let err = t.value(&s) - g;
                println!(
                    "radii ({r_lo},{r_hi}) g{v:?}: value {:.9} err {err:+.3e} margin {:.3e} honest {}",
                    t.value(&s),
                    t.margin(&s),
                    err.abs() <= t.margin(&s),
                );
            }
        }
    }
}

#[cfg(test)]
mod calib3 {
    use super::*;
    use super::tests::G3_REF;

    #[test]
    #[ignore]
    fn three_point_errors() {
        let l = Lattice::new(3).unwrap();
        for (r_sm, r_mid, r_hi) in [(4i32, 8i32, 16i32), (6, 12, 24), (8, 16, 32), (12, 24, 48)] {
            let fs = green_solve(&l, r_sm).unwrap();
            let fm = green_solve(&l, r_mid).unwrap();
            let fh = green_solve(&l, r_hi).unwrap();
            let (ra, rb, rc) = (r_sm as f64, r_mid as f64, r_hi as f64);
            for (v, g) in G3_REF {
                let s = Site::new(v.to_vec());
                if s.linf_norm() > r_sm {
                    continue;
                }
                let a2 = (rc * fh.read(&s) - rb * fm.read(&s)) / (rc - rb);
                let a3 = fit3(ra, fs.read(&s), rb, fm.read(&s), rc, fh.read(&s));
                println!(
                    "radii ({r_sm},{r_mid},{r_hi}) g{v:?}: a2err {:+.3e} a3err {:+.3e} |a3-a2| {:.3e}",
                    a2 - g, a3 - g, (a3 - a2).abs()
                );
            }
        }
    }
}
