//! Uniform grid over 2D points for neighborhood queries.
//!
//! Cell size equals the query tolerance, so any two points within tolerance
//! are in the same or adjacent cells; a 3x3 cell scan finds every candidate.

use std::collections::HashMap;

use crate::geom::Point2;

pub(crate) struct PointGrid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl PointGrid {
    pub fn new(cell: f64) -> Self {
        PointGrid {
            // Zero tolerance still needs a usable cell; only exact
            // coincidence matters then, and equal points share a cell at any
            // size.
            cell: if cell > 0.0 { cell } else { 1.0 },
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Point2, index: usize) {
        self.cells.entry(self.key(p)).or_default().push(index);
    }

    /// Indices in the 3x3 cell block around `p`. Callers re-check the exact
    /// distance; this is a candidate filter only.
    pub fn neighborhood(&self, p: Point2) -> Vec<usize> {
        let (cx, cy) = self.key(p);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_points_within_cell_tolerance() {
        let mut g = PointGrid::new(0.5);
        g.insert(Point2::new(0.0, 0.0), 0);
        g.insert(Point2::new(0.4, 0.0), 1);
        g.insert(Point2::new(10.0, 10.0), 2);
        let mut near = g.neighborhood(Point2::new(0.1, 0.1));
        near.sort_unstable();
        assert_eq!(near, vec![0, 1]);
    }

    #[test]
    fn zero_tolerance_still_groups_identical_points() {
        let mut g = PointGrid::new(0.0);
        g.insert(Point2::new(3.0, 4.0), 0);
        g.insert(Point2::new(3.0, 4.0), 1);
        assert_eq!(g.neighborhood(Point2::new(3.0, 4.0)).len(), 2);
    }
}
