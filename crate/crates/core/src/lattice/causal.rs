//! Discrete causal relations.
//!
//! `(n, j)` lies in the causal past of `(n', j')` when
//! `dist(j, j') ≤ (n' - n) + HALO` and `n ≤ n' + HALO`, distances in cells.
//! The leapfrog stencil never moves information faster than one cell per
//! step, so Green-operator supports are contained in these cones exactly.

use super::{Field, LatticeSpec, SupportBox};

/// Cells added to every cone.
pub const HALO: isize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CausalRegion {
    lattice: LatticeSpec,
    boxes: Vec<SupportBox>,
}

impl CausalRegion {
    pub fn new(lattice: LatticeSpec, boxes: Vec<SupportBox>) -> Self {
        Self { lattice, boxes }
    }

    pub fn boxes(&self) -> &[SupportBox] {
        &self.boxes
    }

    fn spatial_gap(&self, j: usize, b: &SupportBox) -> isize {
        if (b.x_min..=b.x_max).contains(&j) {
            return 0;
        }
        let l = &self.lattice;
        l.site_distance(j, b.x_min).min(l.site_distance(j, b.x_max)) as isize
    }

    /// `(n, j) ∈ J⁻(region)`.
    pub fn in_past(&self, n: usize, j: usize) -> bool {
        let n = n as isize;
        self.boxes.iter().any(|b| {
            let top = b.t_max as isize;
            n <= top + HALO && self.spatial_gap(j, b) <= top - n + HALO
        })
    }

    /// `(n, j) ∈ J⁺(region)`.
    pub fn in_future(&self, n: usize, j: usize) -> bool {
        let n = n as isize;
        self.boxes.iter().any(|b| {
            let bottom = b.t_min as isize;
            n >= bottom - HALO && self.spatial_gap(j, b) <= n - bottom + HALO
        })
    }

    /// Neither in the causal past nor the causal future.
    pub fn in_complement(&self, n: usize, j: usize) -> bool {
        !self.in_past(n, j) && !self.in_future(n, j)
    }

    fn box_points(b: &SupportBox) -> impl Iterator<Item = (usize, usize)> + '_ {
        (b.t_min..=b.t_max).flat_map(move |n| (b.x_min..=b.x_max).map(move |j| (n, j)))
    }

    /// True if some point of `b` lies in the causal past of the region.
    pub fn box_meets_past(&self, b: &SupportBox) -> bool {
        Self::box_points(b).any(|(n, j)| self.in_past(n, j))
    }

    /// True if every point of `b` is causally disconnected from the region.
    pub fn box_in_complement(&self, b: &SupportBox) -> bool {
        Self::box_points(b).all(|(n, j)| self.in_complement(n, j))
    }

    /// First nonzero point of `field` inside the causal past, if any.
    pub fn field_meets_past(&self, field: &Field) -> Option<(usize, usize)> {
        field.nonzero_points().find(|(n, j)| self.in_past(*n, *j))
    }

    /// Whether two regions are spacelike separated (neither meets the
    /// other's causal past or future).
    pub fn spacelike_to(&self, other: &CausalRegion) -> bool {
        other.boxes.iter().all(|b| self.box_in_complement(b))
    }

    /// Mask of points outside the causal cones, extended outward by
    /// `extra` cells (useful for support checks of solver output).
    pub fn outside_cone_mask(&self, past: bool, extra: isize) -> Vec<bool> {
        let l = self.lattice;
        let mut mask = Vec::with_capacity(l.len());
        for n in 0..l.n_time {
            for j in 0..l.n_space {
                let ni = n as isize;
                let inside = self.boxes.iter().any(|b| {
                    let gap = self.spatial_gap(j, b);
                    if past {
                        let top = b.t_max as isize;
                        ni <= top + HALO + extra && gap <= top - ni + HALO + extra
                    } else {
                        let bottom = b.t_min as isize;
                        ni >= bottom - HALO - extra && gap <= ni - bottom + HALO + extra
                    }
                });
                mask.push(!inside);
            }
        }
        mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region() -> CausalRegion {
        let l = LatticeSpec::new(64, 64, 1.0, 0.5).unwrap();
        CausalRegion::new(
            l,
            vec![SupportBox {
                t_min: 30,
                t_max: 32,
                x_min: 20,
                x_max: 22,
            }],
        )
    }

    #[test]
    fn cones() {
        let r = region();
        assert!(r.in_past(20, 21));
        assert!(r.in_past(20, 21 + 12 + 1));
        assert!(!r.in_past(20, 21 + 12 + 4));
        assert!(r.in_future(40, 30));
        assert!(!r.in_future(40, 40));
        assert!(r.in_complement(31, 40));
        assert!(!r.in_complement(31, 23));
    }

    #[test]
    fn periodic_wrap() {
        let r = region();
        // 30 slices before the box the cone covers 20 - 30 - 2 -> wraps to 54.
        assert!(r.in_past(2, 60));
    }

    #[test]
    fn spacelike_boxes() {
        let r = region();
        let l = LatticeSpec::new(64, 64, 1.0, 0.5).unwrap();
        let far = CausalRegion::new(
            l,
            vec![SupportBox {
                t_min: 30,
                t_max: 32,
                x_min: 40,
                x_max: 42,
            }],
        );
        assert!(r.spacelike_to(&far));
        let near = CausalRegion::new(
            l,
            vec![SupportBox {
                t_min: 30,
                t_max: 32,
                x_min: 25,
                x_max: 26,
            }],
        );
        assert!(!r.spacelike_to(&near));
    }
}
