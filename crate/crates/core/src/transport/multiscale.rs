use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{region_of, scaled_cell_box};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::geometry::HalfOpenBox;
use crate::measures::Measure;

/// Cells per level beyond which a walk over a non-atomic measure stops refining.
const CELL_CAP: usize = 1 << 22;
/// Deepest level visited; beyond it midpoints fall below float resolution.
const LEVEL_CAP: u32 = 52;
const TAIL_CAP: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MultiscaleValue {
    pub value: f64,
    /// `L_p ≤ value + truncation_bound`.
    pub truncation_bound: f64,
}

enum Side<'a> {
    Atoms(Vec<(&'a [f64], f64)>),
    General(&'a Measure),
}

impl Side<'_> {
    fn atoms(&self) -> &[(&[f64], f64)] {
        match self {
            Side::Atoms(a) => a,
            Side::General(_) => &[],
        }
    }
}

struct Cell {
    idx: Vec<u64>,
    mu: f64,
    nu: f64,
    mu_atoms: Vec<usize>,
    nu_atoms: Vec<usize>,
}

/// `D_ℓ = Σ_F |μ − ν|(2^n F ∩ region)` for `ℓ = 0, 1, …` until the cell cap or
/// `max_level`. `exhausted` means every cell froze, so `D_ℓ` is constant from
/// the last entry on.
struct Walk {
    discrepancy: Vec<f64>,
    exhausted: bool,
}

struct Walker<'a> {
    mu: Side<'a>,
    nu: Side<'a>,
    dim: usize,
    n: u32,
    annulus: bool,
}

impl Walker<'_> {
    fn general_mass(&self, m: &Measure, level: u32, idx: &[u64]) -> f64 {
        if self.annulus {
            region_of(self.n, level, idx)
                .iter()
                .map(|b| m.box_mass(b))
                .sum()
        } else {
            m.box_mass(&scaled_cell_box(self.n, level, idx))
        }
    }

    fn has_general(&self) -> bool {
        matches!(self.mu, Side::General(_)) || matches!(self.nu, Side::General(_))
    }

    /// One side is empty or every atom sits at one point: refinement cannot
    /// change this cell's contribution.
    fn frozen(&self, c: &Cell) -> bool {
        if c.mu == 0.0 || c.nu == 0.0 {
            return true;
        }
        if self.has_general() {
            return false;
        }
        let (ma, na) = (self.mu.atoms(), self.nu.atoms());
        let mut pts = c
            .mu_atoms
            .iter()
            .map(|&i| ma[i].0)
            .chain(c.nu_atoms.iter().map(|&i| na[i].0));
        let first = pts.next().expect("cell with mass has atoms");
        pts.all(|x| x == first)
    }

    fn child_code(&self, x: &[f64], level: u32, idx: &[u64]) -> u64 {
        let scale = 2f64.powi(self.n as i32);
        let half = 2f64.powi(-(level as i32));
        let mut code = 0u64;
        for (axis, (&xi, &i)) in x.iter().zip(idx).enumerate() {
            let mid = scale * (-1.0 + (2 * i + 1) as f64 * half);
            if xi > mid {
                code |= 1 << axis;
            }
        }
        code
    }

    fn children(&self, c: &Cell, level: u32) -> Vec<Cell> {
        let make = |code: u64| Cell {
            idx: c
                .idx
                .iter()
                .enumerate()
                .map(|(a, &i)| 2 * i + ((code >> a) & 1))
                .collect(),
            mu: 0.0,
            nu: 0.0,
            mu_atoms: Vec::new(),
            nu_atoms: Vec::new(),
        };
        let mut kids: Vec<(u64, Cell)> = if self.has_general() {
            (0..1u64 << self.dim)
                .map(|code| (code, make(code)))
                .collect()
        } else {
            Vec::new()
        };
        let slot = |kids: &mut Vec<(u64, Cell)>, code: u64| -> usize {
            match kids.iter().position(|(k, _)| *k == code) {
                Some(s) => s,
                None => {
                    kids.push((code, make(code)));
                    kids.len() - 1
                }
            }
        };
        for (side, list) in [(&self.mu, &c.mu_atoms), (&self.nu, &c.nu_atoms)]
            .into_iter()
            .enumerate()
        {
            let atoms = list.0.atoms();
            for &i in list.1 {
                let (x, w) = atoms[i];
                let s = slot(&mut kids, self.child_code(x, level, &c.idx));
                let kid = &mut kids[s].1;
                if side == 0 {
                    kid.mu += w;
                    kid.mu_atoms.push(i);
                } else {
                    kid.nu += w;
                    kid.nu_atoms.push(i);
                }
            }
        }
        for (_, kid) in kids.iter_mut() {
            if let Side::General(m) = self.mu {
                kid.mu = self.general_mass(m, level + 1, &kid.idx);
            }
            if let Side::General(m) = self.nu {
                kid.nu = self.general_mass(m, level + 1, &kid.idx);
            }
        }
        kids.into_iter()
            .map(|(_, k)| k)
            .filter(|k| k.mu > 0.0 || k.nu > 0.0)
            .collect()
    }

    fn walk(&self, max_level: u32) -> Walk {
        let root_idx = vec![0u64; self.dim];
        let side_mass = |s: &Side| match s {
            Side::Atoms(a) => a.iter().map(|p| p.1).sum(),
            Side::General(m) => self.general_mass(m, 0, &root_idx),
        };
        let root = Cell {
            idx: root_idx.clone(),
            mu: side_mass(&self.mu),
            nu: side_mass(&self.nu),
            mu_atoms: (0..self.mu.atoms().len()).collect(),
            nu_atoms: (0..self.nu.atoms().len()).collect(),
        };
        let mut discrepancy = Vec::new();
        let mut frozen_sum = 0.0;
        let mut active = if root.mu > 0.0 || root.nu > 0.0 {
            vec![root]
        } else {
            Vec::new()
        };
        let mut level = 0;
        loop {
            let live: f64 = active.iter().map(|c| (c.mu - c.nu).abs()).sum();
            discrepancy.push(frozen_sum + live);
            let (stay, freeze): (Vec<Cell>, Vec<Cell>) =
                active.into_iter().partition(|c| !self.frozen(c));
            frozen_sum += freeze.iter().map(|c| (c.mu - c.nu).abs()).sum::<f64>();
            if stay.is_empty() {
                return Walk {
                    discrepancy,
                    exhausted: true,
                };
            }
            let fanout = if self.has_general() {
                1usize << self.dim
            } else {
                1
            };
            if level >= max_level || stay.len().saturating_mul(fanout) > CELL_CAP {
                return Walk {
                    discrepancy,
                    exhausted: false,
                };
            }
            let mut next: Vec<Cell> = stay.iter().flat_map(|c| self.children(c, level)).collect();
            next.sort_by(|a, b| a.idx.cmp(&b.idx));
            active = next;
            level += 1;
        }
    }
}

/// Smallest `n` with `x ∈ Q_n`.
fn annulus_index(x: &[f64]) -> u32 {
    let mut n = 0u32;
    while !HalfOpenBox::cube(x.len(), n as i32).contains(x) {
        n += 1;
    }
    n
}

/// `Σ_{ℓ=a}^{b} 2^{−pℓ}`.
fn geometric(p: f64, a: u32, b: u32) -> f64 {
    if b < a {
        return 0.0;
    }
    let r = 2f64.powf(-p);
    r.powi(a as i32) * (1.0 - r.powi((b - a + 1) as i32)) / (1.0 - r)
}

fn check_pair(mu: &Measure, nu: &Measure, p: f64) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "order p must be positive, got {p}"
        )));
    }
    Ok(())
}

fn annulus_atoms(m: &Measure, n: u32) -> Option<Vec<(&[f64], f64)>> {
    m.as_atoms()
        .map(|a| a.iter().filter(|(x, _)| annulus_index(x) == n).collect())
}

fn side_for(m: &Measure, n: u32) -> Side<'_> {
    match annulus_atoms(m, n) {
        Some(a) => Side::Atoms(a),
        None => Side::General(m),
    }
}

fn tail_term(m: &Measure, p: f64, n_max: u32) -> Result<f64> {
    let r = 1.0 / (1.0 - 2f64.powf(-p));
    if let Some(a) = m.as_atoms() {
        return Ok(a
            .iter()
            .map(|(x, w)| {
                let n = annulus_index(x);
                if n > n_max {
                    2f64.powf(p * n as f64) * w * r
                } else {
                    0.0
                }
            })
            .sum());
    }
    if n_max >= TAIL_CAP {
        return moment_tail(m, p, n_max);
    }
    let head: f64 = (n_max + 1..=TAIL_CAP)
        .map(|n| 2f64.powf(p * n as f64) * m.annulus_mass(n) * r)
        .sum();
    if m.tail_mass(TAIL_CAP) == 0.0 {
        Ok(head)
    } else {
        Ok(head + moment_tail(m, p, TAIL_CAP)?)
    }
}

/// On `B_n` with `n ≥ 1`, `2^{pn} ≤ 2^p |x|^p`, so the remaining annuli sum to
/// at most `2^p M_p / (1 − 2^{−p})`.
fn moment_tail(m: &Measure, p: f64, n: u32) -> Result<f64> {
    if m.tail_mass(n) == 0.0 {
        return Ok(0.0);
    }
    Ok(match m.moment(p)? {
        Extended::Finite(v) => 2f64.powf(p) * v / (1.0 - 2f64.powf(-p)),
        Extended::Infinite => f64::INFINITY,
    })
}

/// The multiscale functional truncated to annuli `n ≤ n_max` and depths
/// `ℓ ≤ ℓ_max`, with an upper bound on the omitted part.
///
/// Cells where one measure has no mass, or where all atoms coincide, are not
/// refined further; their deeper contributions are summed in closed form.
pub fn multiscale_l(
    mu: &Measure,
    nu: &Measure,
    p: f64,
    n_max: u32,
    l_max: u32,
) -> Result<MultiscaleValue> {
    check_pair(mu, nu, p)?;
    let dim = mu.dim();
    let depth = l_max.min(LEVEL_CAP);
    let per_annulus: Vec<(f64, f64)> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let walker = Walker {
                mu: side_for(mu, n),
                nu: side_for(nu, n),
                dim,
                n,
                annulus: true,
            };
            let walk = walker.walk(depth);
            let weight = 2f64.powf(p * n as f64);
            let reached = (walk.discrepancy.len() - 1) as u32;
            let mut value: f64 = walk
                .discrepancy
                .iter()
                .enumerate()
                .map(|(l, d)| 2f64.powf(-p * l as f64) * d)
                .sum();
            let mass = side_total(&walker.mu, n) + side_total(&walker.nu, n);
            let mut trunc = 0.0;
            if walk.exhausted {
                value += walk.discrepancy[reached as usize] * geometric(p, reached + 1, l_max);
            } else {
                trunc += mass * geometric(p, reached + 1, l_max);
            }
            trunc += mass * 2f64.powf(-p * l_max as f64) / (1.0 - 2f64.powf(-p));
            (weight * value, weight * trunc)
        })
        .collect();
    let value = per_annulus.iter().map(|v| v.0).sum();
    let inner: f64 = per_annulus.iter().map(|v| v.1).sum();
    let truncation_bound = inner + tail_term(mu, p, n_max)? + tail_term(nu, p, n_max)?;
    Ok(MultiscaleValue {
        value,
        truncation_bound,
    })
}

fn whole(m: &Measure) -> Side<'_> {
    match m.as_atoms() {
        Some(at) => Side::Atoms(at.iter().collect()),
        None => Side::General(m),
    }
}

fn side_total(s: &Side, n: u32) -> f64 {
    match s {
        Side::Atoms(a) => a.iter().map(|p| p.1).sum(),
        Side::General(m) => m.annulus_mass(n),
    }
}

/// Certified upper bound on `W_p(μ, ν)^p` from dyadic refinement of the
/// smallest cube `Q_R` holding both supports:
/// `diam(Q_R)^p · min_L [2^{−pL} + Σ_{ℓ=1}^{L} 2^{−p(ℓ−1)} Σ_{F∈D_ℓ} |μ − ν|(F)]`.
///
/// Infinite when either measure has mass outside `Q_64`.
pub fn dyadic_transport_bound(mu: &Measure, nu: &Measure, p: f64) -> Result<f64> {
    check_pair(mu, nu, p)?;
    let support = |m: &Measure| -> Option<u32> {
        match m.as_atoms() {
            Some(a) => a.iter().map(|(x, _)| annulus_index(x)).max(),
            None => (0..=TAIL_CAP).find(|&n| m.tail_mass(n) == 0.0),
        }
    };
    let (Some(a), Some(b)) = (support(mu), support(nu)) else {
        return Ok(f64::INFINITY);
    };
    let r = a.max(b);
    let walker = Walker {
        mu: whole(mu),
        nu: whole(nu),
        dim: mu.dim(),
        n: r,
        annulus: false,
    };
    let walk = walker.walk(LEVEL_CAP);
    let diam = 2.0 * (mu.dim() as f64).sqrt() * 2f64.powi(r as i32);
    let rp = 2f64.powf(-p);
    let mut best = 1.0f64;
    let mut partial = 0.0;
    for (l, d) in walk.discrepancy.iter().enumerate().skip(1) {
        partial += rp.powi(l as i32 - 1) * d;
        best = best.min(rp.powi(l as i32) + partial);
    }
    if walk.exhausted {
        let last = walk.discrepancy.len() - 1;
        let d = walk.discrepancy[last];
        best = best.min(partial + d * rp.powi(last as i32) / (1.0 - rp));
    }
    Ok(diam.powf(p) * best)
}
