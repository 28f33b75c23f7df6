use super::{region_of, split::split_counts};
use crate::error::{Error, Result};
use crate::geometry::HalfOpenBox;
use crate::measures::Measure;

/// A stored cell with a positive count.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeCell {
    pub idx: Vec<u64>,
    pub count: u64,
    /// `μ(2^n F ∩ B_n)`, as used for the split.
    pub mass: f64,
    pub region: Vec<HalfOpenBox>,
}

/// Integer counts `k^ℓ_F` for one annulus; zero-count cells are pruned.
#[derive(Clone, Debug)]
pub struct AllocationTree {
    pub n: u32,
    pub depth: u32,
    pub budget: u64,
    pub root_count: u64,
    /// `levels[ℓ]` holds the stored cells at depth `ℓ`, sorted by index.
    pub levels: Vec<Vec<TreeCell>>,
}

impl AllocationTree {
    pub fn dim(&self) -> usize {
        self.levels[0][0].idx.len()
    }

    pub fn leaves(&self) -> &[TreeCell] {
        self.levels.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// `k^ℓ_F`, zero for pruned cells.
    pub fn count(&self, level: u32, idx: &[u64]) -> u64 {
        let Some(cells) = self.levels.get(level as usize) else {
            return 0;
        };
        cells
            .binary_search_by(|c| c.idx.as_slice().cmp(idx))
            .map(|i| cells[i].count)
            .unwrap_or(0)
    }

    /// Checks the three tree conclusions against fresh mass evaluations:
    /// root count, children summing to parents, and `|N·μ(F) − k_F| ≤ 1`.
    pub fn verify(&self, m: &Measure) -> Result<()> {
        let nf = self.budget as f64;
        let root = &self.levels[0];
        if root.len() > 1 || root.first().map_or(0, |c| c.count) != self.root_count {
            return Err(Error::Contract(format!(
                "root of annulus {} does not carry N_n = {}",
                self.n, self.root_count
            )));
        }
        for (level, cells) in self.levels.iter().enumerate() {
            for c in cells {
                let mass: f64 = c.region.iter().map(|b| m.box_mass(b)).sum();
                if (nf * mass - c.count as f64).abs() > 1.0 + 1e-9 {
                    return Err(Error::Contract(format!(
                        "cell ℓ={level} idx={:?}: N·μ = {} vs count {}",
                        c.idx,
                        nf * mass,
                        c.count
                    )));
                }
            }
            if level == 0 {
                continue;
            }
            for parent in &self.levels[level - 1] {
                let children: u64 = cells
                    .iter()
                    .filter(|c| c.idx.iter().zip(&parent.idx).all(|(a, b)| a / 2 == *b))
                    .map(|c| c.count)
                    .sum();
                if children != parent.count {
                    return Err(Error::Contract(format!(
                        "children of ℓ={} idx={:?} sum to {children}, parent holds {}",
                        level - 1,
                        parent.idx,
                        parent.count
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Top-down pruned tree for annulus `n` with root count `root_count`.
pub fn build_tree(
    m: &Measure,
    n: u32,
    root_count: u64,
    depth: u32,
    budget: u64,
) -> Result<AllocationTree> {
    let d = m.dim();
    if d > 16 {
        return Err(Error::Unsupported(format!(
            "dyadic trees need d ≤ 16, got {d}"
        )));
    }
    let root_idx = vec![0u64; d];
    let root_region = region_of(n, 0, &root_idx);
    let root_mass: f64 = root_region.iter().map(|b| m.box_mass(b)).sum();
    let nf = budget as f64;
    if (nf * root_mass - root_count as f64).abs() > 1.0 + 1e-9 {
        return Err(Error::Contract(format!(
            "annulus {n}: |μ(B_n) − N_n/N| ≤ 1/N fails (μ(B_n) = {root_mass}, N_n/N = {})",
            root_count as f64 / nf
        )));
    }
    let mut levels = vec![Vec::new()];
    if root_count > 0 {
        levels[0].push(TreeCell {
            idx: root_idx,
            count: root_count,
            mass: root_mass,
            region: root_region,
        });
    }
    for level in 1..=depth {
        let mut next = Vec::new();
        for parent in &levels[level as usize - 1] {
            let mut children: Vec<(Vec<u64>, Vec<HalfOpenBox>, f64)> = Vec::with_capacity(1 << d);
            for bits in 0..(1u32 << d) {
                let idx: Vec<u64> = parent
                    .idx
                    .iter()
                    .enumerate()
                    .map(|(axis, &i)| 2 * i + u64::from((bits >> (d - 1 - axis)) & 1))
                    .collect();
                let region = region_of(n, level, &idx);
                // Empty regions carry no mass and can never host a point.
                if region.iter().all(HalfOpenBox::is_empty) {
                    continue;
                }
                let mass = region.iter().map(|b| m.box_mass(b)).sum();
                children.push((idx, region, mass));
            }
            let masses: Vec<f64> = children.iter().map(|c| c.2).collect();
            let counts = split_counts(&masses, parent.count, budget)?;
            for ((idx, region, mass), count) in children.into_iter().zip(counts) {
                if count > 0 {
                    next.push(TreeCell {
                        idx,
                        count,
                        mass,
                        region,
                    });
                }
            }
        }
        next.sort_by(|a, b| a.idx.cmp(&b.idx));
        levels.push(next);
    }
    Ok(AllocationTree {
        n,
        depth,
        budget,
        root_count,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_follows_a_single_path() {
        let m = Measure::dirac(vec![0.0, 0.0]).unwrap();
        let t = build_tree(&m, 0, 12, 5, 12).unwrap();
        for cells in &t.levels {
            assert_eq!(cells.len(), 1);
            assert_eq!(cells[0].count, 12);
        }
        t.verify(&m).unwrap();
        // The origin sits on the upper corner of the cell just below it.
        assert_eq!(t.leaves()[0].idx, vec![15, 15]);
    }

    #[test]
    fn uniform_leaves_are_balanced() {
        let m = Measure::uniform(HalfOpenBox::cube(2, 0)).unwrap();
        let t = build_tree(&m, 0, 3 * 64, 3, 3 * 64).unwrap();
        assert_eq!(t.leaves().len(), 64);
        assert!(t.leaves().iter().all(|c| c.count == 3));
        t.verify(&m).unwrap();
    }

    #[test]
    fn bernoulli_counts() {
        let m = Measure::bernoulli(0.3).unwrap();
        let t = build_tree(&m, 0, 10, 3, 10).unwrap();
        assert_eq!(t.count(3, &[3]), 7);
        assert_eq!(t.count(3, &[7]), 3);
        assert_eq!(t.leaves().len(), 2);
        t.verify(&m).unwrap();
    }

    #[test]
    fn outer_annulus_skips_inner_cube() {
        let m = Measure::pareto(2.0).unwrap();
        let n = 2;
        let mass = m.annulus_mass(n);
        let budget = 64;
        let root = (mass * budget as f64).round() as u64;
        let t = build_tree(&m, n, root, 4, budget).unwrap();
        t.verify(&m).unwrap();
        for c in t.leaves() {
            assert!(c.region.len() == 1 && !c.region[0].is_empty());
            assert!(c.region[0].upper()[0] <= -2.0);
        }
    }

    #[test]
    fn contract_on_bad_root() {
        let m = Measure::bernoulli(0.3).unwrap();
        assert!(matches!(
            build_tree(&m, 0, 2, 3, 10),
            Err(Error::Contract(_))
        ));
    }
}
