//! Escape-probability fields.
//!
//! For a finite set `K`, `h_K(y) = P_y[never hit K]` is harmonic off `K`,
//! zero on `K`, and tends to one at infinity. The exit-before-hit
//! probability `U_R(y)` of the radius-`R` box is a rigorous upper bound
//! decreasing in `R`, with `U_R = h (1 + kappa(y)/R)` to leading order
//! (the box exit returns to `K` with probability of order `1/R`). Solving
//! at two radii eliminates the leading term pointwise.
//!
//! For `d = 3` a certified lower bound comes from the superharmonic weight
//! `f(x) = (|x|^2 + 2)^{-1/2}`: by optional stopping, the probability that
//! a walk from `z` ever enters a set of Euclidean radius `rho` is at most
//! `f(z) / min_set f = sqrt((rho^2 + 2) / (|z|^2 + 2))`.

use crate::lattice::{FiniteSet, LatBox, Lattice, Site};

use super::grid::{out_of_box_degree, solve_absorbing, Stencil};
use super::{Interval, PotentialError};

/// Certified upper bound on `sup_z P_z[hit B]` over `|z|_2^2 >= z_l2sq`,
/// where `B` has squared Euclidean radius `rho_l2sq` around the same
/// center. Only valid for `d = 3`.
pub fn seed_return_bound(rho_l2sq: f64, z_l2sq: f64) -> f64 {
    (((rho_l2sq + 2.0) / (z_l2sq + 2.0)).sqrt()).min(1.0)
}

/// Checks the discrete superharmonicity of `f(x) = (|x|^2+2)^{-1/2}` at `x`
/// (mean over the six neighbors does not exceed the value). Used by tests.
pub fn seed_weight_superharmonic_at(x: &[i32; 3]) -> bool {
    let f = |v: [i64; 3]| -> f64 {
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) as f64;
        1.0 / (s + 2.0).sqrt()
    };
    let v = [x[0] as i64, x[1] as i64, x[2] as i64];
    let mut mean = 0.0;
    for axis in 0..3 {
        for sign in [-1i64, 1] {
            let mut w = v;
            w[axis] += sign;
            mean += f(w);
        }
    }
    mean / 6.0 <= f(v) * (1.0 + 1e-15)
}

/// Escape field of a finite set: the extrapolated `h_K` together with the
/// rigorous upper bound, stored on a box around `K`.
#[derive(Debug, Clone)]
pub struct EscapeField {
    pub lattice: Lattice,
    pub center: Site,
    pub store: LatBox,
    pub r1: i32,
    pub r2: i32,
    k_mask: Vec<u8>,
    values: Vec<f64>,
    upper: Vec<f64>,
    /// Largest relative correction `(U - h)/h` applied inside the store box;
    /// the extrapolation residual is of the order of its square.
    pub max_rel_correction: f64,
    /// Certified `sup P[hit K]` from the larger solve rim (d = 3 only).
    pub seed_ret: Option<f64>,
    /// Squared Euclidean radius of `K` around `center`.
    pub rho_l2sq: f64,
}

impl EscapeField {
    pub fn contains_k(&self, s: &Site) -> bool {
        match self.store.flat_index(s) {
            Some(i) => self.k_mask[i] == 1,
            None => false,
        }
    }

    /// Extrapolated `h_K(s)`; zero on `K`. Outside the store box the field
    /// is continued by the `1/|y|` decay of the return probability.
    pub fn value(&self, s: &Site) -> f64 {
        match self.store.flat_index(s) {
            Some(i) => self.values[i],
            None => self.extend(s, &self.values),
        }
    }

    /// Rigorous upper bound `U_{r2}(s)`, continued like [`Self::value`].
    pub fn upper(&self, s: &Site) -> f64 {
        match self.store.flat_index(s) {
            Some(i) => self.upper[i],
            None => self.extend(s, &self.upper),
        }
    }

    /// Return probability estimate `1 - h(s)`.
    pub fn return_prob(&self, s: &Site) -> f64 {
        1.0 - self.value(s)
    }

    /// Rigorous two-sided interval for `h(s)`: `[U (1 - seed), U]` for
    /// d = 3, falling back to a model interval otherwise.
    pub fn rigorous_interval(&self, s: &Site) -> Interval {
        let u = self.upper(s);
        match self.seed_ret {
            Some(eps) => Interval::new(u * (1.0 - eps), u).clamp_unit(),
            None => {
                let v = self.value(s);
                let slack = 4.0 * (u - v).abs() + 1e-9;
                Interval::new(v - slack, u).clamp_unit()
            }
        }
    }

    /// Radial continuation beyond the store box: the return probability
    /// scales like the inverse Euclidean distance.
    fn extend(&self, s: &Site, data: &[f64]) -> f64 {
        let off = s.sub(&self.center);
        let norm = (off.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>()).sqrt();
        let r = self.store.radius;
        let linf = off.iter().map(|c| c.abs()).max().unwrap_or(0);
        if linf == 0 {
            return data[self.store.flat_index(&self.center).unwrap()];
        }
        // project radially onto the store rim
        let scale = r as f64 / linf as f64;
        let proj = Site::new(
            off.iter()
                .zip(self.center.coords())
                .map(|(&o, &c)| (((o as f64) * scale).round() as i32).clamp(-r, r) + c)
                .collect::<Vec<i32>>(),
        );
        let idx = self.store.flat_index(&proj).expect("projection stays in box");
        let pnorm = {
            let po = proj.sub(&self.center);
            (po.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>()).sqrt()
        };
        let ret_at_rim = 1.0 - data[idx];
        (1.0 - ret_at_rim * (pnorm / norm.max(pnorm))).clamp(0.0, 1.0)
    }
}

/// Builds the escape field of `k` with solves at radii `r1 < r2`, storing
/// the field on a box of radius `store_radius` around the set's center.
pub fn escape_field(
    lattice: &Lattice,
    k: &FiniteSet,
    r1: i32,
    r2: i32,
    store_radius: i32,
) -> Result<EscapeField, PotentialError> {
    if k.is_empty() {
        return Err(PotentialError::BadInput("escape field of empty set".into()));
    }
    let dim = lattice.dim();
    let center = bounding_center(k, dim);
    let k_radius = k.iter().map(|s| s.linf_dist(&center)).max().unwrap_or(0);
    if r1 < k_radius + 6 || r2 <= r1 || store_radius > r1 - 2 {
        return Err(PotentialError::BadInput(format!(
            "escape-field radii must satisfy k_radius+6 <= r1 < r2, store <= r1-2 \
             (k_radius={k_radius}, r1={r1}, r2={r2}, store={store_radius})"
        )));
    }

    let u1 = exit_before_hit(lattice, k, &center, r1)?;
    let u2 = exit_before_hit(lattice, k, &center, r2)?;

    let store = LatBox::new(center.clone(), store_radius);
    let n = store.volume();
    let mut k_mask = vec![0u8; n];
    for s in k.iter() {
        if let Some(i) = store.flat_index(s) {
            k_mask[i] = 1;
        }
    }

    let (ra, rb) = (r1 as f64, r2 as f64);
    let inv_gap = 1.0 / (1.0 / ra - 1.0 / rb);
    let mut values = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut max_rel = 0.0f64;
    for i in 0..n {
        if k_mask[i] == 1 {
            continue;
        }
        let s = store.site_at(i);
        let a = u1.read(&s);
        let b = u2.read(&s);
        upper[i] = b;
        if b <= 0.0 {
            values[i] = 0.0;
            continue;
        }
        // U_R = h (1 + kappa/R): eliminate kappa pointwise
        let kappa = ((a / b - 1.0) * inv_gap).max(0.0);
        let h = b / (1.0 + kappa / rb);
        values[i] = h.min(b);
        max_rel = max_rel.max((b - values[i]) / values[i].max(1e-12));
    }

    let rho_l2sq = k
        .iter()
        .map(|s| {
            let o = s.sub(&center);
            o.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>()
        })
        .fold(0.0, f64::max);
    let seed_ret = if dim == 3 {
        Some(seed_return_bound(rho_l2sq, (r2 as f64) * (r2 as f64)))
    } else {
        None
    };

    Ok(EscapeField {
        lattice: *lattice,
        center,
        store,
        r1,
        r2,
        k_mask,
        values,
        upper,
        max_rel_correction: max_rel,
        seed_ret,
        rho_l2sq,
    })
}

/// Equilibrium measure of `k` from an escape field:
/// `e_k(x) = (1/2d) sum_{y ~ x, y not in k} h(y)`, zero off the inner
/// boundary. Returns `(sites, estimates, rigorous_upper)` in the canonical
/// order of `k`'s inner boundary.
pub fn equilibrium_from_field(
    lattice: &Lattice,
    k: &FiniteSet,
    field: &EscapeField,
) -> (Vec<Site>, Vec<f64>, Vec<f64>) {
    let boundary = k.inner_boundary(lattice);
    let inv_deg = 1.0 / lattice.degree() as f64;
    let mut est = Vec::with_capacity(boundary.len());
    let mut hi = Vec::with_capacity(boundary.len());
    for x in boundary.iter() {
        let mut e = 0.0;
        let mut e_hi = 0.0;
        for y in lattice.neighbors(x) {
            if !k.contains(&y) {
                e += field.value(&y);
                e_hi += field.upper(&y);
            }
        }
        est.push(e * inv_deg);
        hi.push(e_hi * inv_deg);
    }
    (boundary.sites().to_vec(), est, hi)
}

struct ExitField {
    bx: LatBox,
    data: Vec<f64>,
}

impl ExitField {
    fn read(&self, s: &Site) -> f64 {
        match self.bx.flat_index(s) {
            Some(i) => self.data[i],
            None => 1.0,
        }
    }
}

/// `P_y[exit the radius-r box before hitting k]` for all box sites.
fn exit_before_hit(
    lattice: &Lattice,
    k: &FiniteSet,
    center: &Site,
    r: i32,
) -> Result<ExitField, PotentialError> {
    let bx = LatBox::new(center.clone(), r);
    let st = Stencil::of(&bx);
    let n = st.volume;
    let mut mask = vec![1u8; n];
    for s in k.iter() {
        match bx.flat_index(s) {
            Some(i) => mask[i] = 0,
            None => {
                return Err(PotentialError::SetTooLarge(format!(
                    "site {s} outside solve box radius {r}"
                )))
            }
        }
    }
    let inv_deg = 1.0 / lattice.degree() as f64;
    let mut b = vec![0.0; n];
    for (i, bi) in b.iter_mut().enumerate() {
        if mask[i] == 1 {
            let out = out_of_box_degree(&st, i);
            if out > 0 {
                *bi = out as f64 * inv_deg;
            }
        }
    }
    let data = solve_absorbing(&bx, &mask, &b, 1e-13)?;
    Ok(ExitField { bx, data })
}

fn bounding_center(k: &FiniteSet, dim: usize) -> Site {
    let mut lo = vec![i32::MAX; dim];
    let mut hi = vec![i32::MIN; dim];
    for s in k.iter() {
        for (a, &c) in s.coords().iter().enumerate() {
            lo[a] = lo[a].min(c);
            hi[a] = hi[a].max(c);
        }
    }
    Site::new(lo.iter().zip(&hi).map(|(&l, &h)| (l + h).div_euclid(2)).collect())
}
