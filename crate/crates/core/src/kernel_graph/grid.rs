use std::collections::HashMap;

use crate::geom::{self, Point};

/// Uniform cell grid over ambient coordinates.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    cell: f64,
    dim: usize,
    cells: HashMap<[i64; 4], Vec<u32>>,
}

impl SpatialGrid {
    pub fn new(points: &[Point], dim: usize, cell: f64) -> Self {
        assert!(cell > 0.0 && (1..=4).contains(&dim));
        let mut cells: HashMap<[i64; 4], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p, dim, cell)).or_default().push(i as u32);
        }
        SpatialGrid { cell, dim, cells }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.len()
    }

    /// Calls `f(index, squared_distance)` for every point with
    /// `|p - x| <= radius`. Visit order is deterministic for a fixed cloud.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, points: &[Point], x: &Point, radius: f64, mut f: F) {
        let r2 = radius * radius;
        let reach = (radius / self.cell).ceil() as i64;
        let span = (2 * reach + 1) as f64;
        if span.powi(self.dim as i32) > 2.0 * self.cells.len() as f64 + 27.0 {
            for (i, p) in points.iter().enumerate() {
                let d2 = geom::dist2(p, x);
                if d2 <= r2 {
                    f(i, d2);
                }
            }
            return;
        }
        let center = key(x, self.dim, self.cell);
        let mut offset = [0i64; 4];
        for k in 0..self.dim {
            offset[k] = -reach;
        }
        loop {
            let mut c = center;
            for k in 0..self.dim {
                c[k] += offset[k];
            }
            if let Some(list) = self.cells.get(&c) {
                for &i in list {
                    let d2 = geom::dist2(&points[i as usize], x);
                    if d2 <= r2 {
                        f(i as usize, d2);
                    }
                }
            }
            // odometer increment over the offset box
            let mut k = 0;
            loop {
                if k == self.dim {
                    return;
                }
                offset[k] += 1;
                if offset[k] <= reach {
                    break;
                }
                offset[k] = -reach;
                k += 1;
            }
        }
    }

    /// Indices within `radius` of `x`, ascending.
    pub fn query(&self, points: &[Point], x: &Point, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(points, x, radius, |i, _| out.push(i));
        out.sort_unstable();
        out
    }
}

#[inline]
fn key(p: &Point, dim: usize, cell: f64) -> [i64; 4] {
    let mut k = [0i64; 4];
    for d in 0..dim {
        k[d] = (p[d] / cell).floor() as i64;
    }
    k
}
