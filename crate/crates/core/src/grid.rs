//! Uniform grid for fixed-radius neighbor queries.
//!
//! Space is cut into cubic cells of side `cell`. When the bounding box holds
//! few enough cells they are stored densely; otherwise only occupied cells are
//! kept in a hash map. A ball query visits the box of cells overlapping the
//! ball, or every occupied cell when that box would be larger.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::pointset::Point;

type CellKey = SmallVec<[i64; 4]>;

/// Dense storage is used up to this dimension; query boxes live on the stack.
const MAX_DENSE_DIM: usize = 8;

/// Cell side for a set of `n` points in a ball of radius `radius`: the mean
/// spacing, floored at `radius / 1024` so the number of cells stays bounded.
pub(crate) fn default_cell_size(n: usize, dim: usize, radius: f64) -> f64 {
    if n == 0 || radius <= 0.0 {
        return 1.0;
    }
    let spacing = ((2.0 * radius).powi(dim as i32) / n as f64).powf(1.0 / dim as f64);
    spacing.max(radius / 1024.0)
}

#[derive(Debug)]
enum Cells {
    /// Every cell of the bounding box, in compressed-row form.
    Dense {
        origin: Vec<i64>,
        extent: Vec<i64>,
        offsets: Vec<u32>,
        items: Vec<u32>,
        /// Coordinates of `items`, in the same order, `dim` per point.
        coords: Vec<f64>,
    },
    /// Occupied cells only, for sparse or very fine grids.
    Hashed(FxHashMap<CellKey, Vec<u32>>),
}

struct DenseView<'a> {
    origin: &'a [i64],
    extent: &'a [i64],
    offsets: &'a [u32],
    items: &'a [u32],
    coords: &'a [f64],
    inv_cell: f64,
}

impl DenseView<'_> {
    #[inline]
    fn query<const D: usize>(&self, qc: &[f64], r: f64, mut f: impl FnMut(usize, f64)) {
        let q: [f64; D] = qc.try_into().expect("query dimension");
        let origin: [i64; D] = self.origin.try_into().expect("grid dimension");
        let extent: [i64; D] = self.extent.try_into().expect("grid dimension");
        let coords = &self.coords[..self.items.len() * D];
        let r2 = r * r;
        let mut lo = [0i64; D];
        let mut hi = [0i64; D];
        for k in 0..D {
            lo[k] = fast_floor((q[k] - r) * self.inv_cell).max(origin[k]) - origin[k];
            hi[k] =
                fast_floor((q[k] + r) * self.inv_cell).min(origin[k] + extent[k] - 1) - origin[k];
            if lo[k] > hi[k] {
                return;
            }
        }
        let mut key = lo;
        loop {
            let mut base = 0i64;
            for k in (1..D).rev() {
                base = base * extent[k] + key[k];
            }
            let row = (base * extent[0]) as usize;
            let a = self.offsets[row + lo[0] as usize] as usize;
            let b = self.offsets[row + hi[0] as usize + 1] as usize;
            for (t, c) in coords[a * D..b * D].chunks_exact(D).enumerate() {
                let mut d2 = 0.0;
                for k in 0..D {
                    let d = c[k] - q[k];
                    d2 += d * d;
                }
                if d2 <= r2 {
                    f(self.items[a + t] as usize, d2);
                }
            }
            let mut k = 1;
            loop {
                if k >= D {
                    return;
                }
                key[k] += 1;
                if key[k] <= hi[k] {
                    break;
                }
                key[k] = lo[k];
                k += 1;
            }
        }
    }
}

#[derive(Debug)]
pub(crate) struct SpatialGrid {
    cell: f64,
    /// `1 / cell`; binning and queries both multiply by it, so they agree.
    inv_cell: f64,
    dim: usize,
    cells: Cells,
    occupied: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(points: &[Point], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let dim = points.first().map_or(1, Point::dim);
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in points {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let inv_cell = 1.0 / cell;
        let keys: Vec<CellKey> = points.iter().map(|p| key_of(p, inv_cell)).collect();
        let dense_cells = if points.is_empty() {
            f64::INFINITY
        } else {
            (0..dim)
                .map(|k| (fast_floor(hi[k] * inv_cell) - fast_floor(lo[k] * inv_cell) + 1) as f64)
                .product::<f64>()
        };
        let cells = if dim <= MAX_DENSE_DIM && dense_cells <= (8 * points.len() + 64) as f64 {
            let origin: Vec<i64> = (0..dim).map(|k| fast_floor(lo[k] * inv_cell)).collect();
            let extent: Vec<i64> = (0..dim)
                .map(|k| fast_floor(hi[k] * inv_cell) - origin[k] + 1)
                .collect();
            let flat = |key: &CellKey| {
                let mut idx = 0i64;
                for k in (0..dim).rev() {
                    idx = idx * extent[k] + (key[k] - origin[k]);
                }
                idx as usize
            };
            let total = dense_cells as usize;
            let mut offsets = vec![0u32; total + 1];
            for key in &keys {
                offsets[flat(key) + 1] += 1;
            }
            for c in 0..total {
                offsets[c + 1] += offsets[c];
            }
            let mut fill = offsets.clone();
            let mut items = vec![0u32; points.len()];
            for (i, key) in keys.iter().enumerate() {
                let c = flat(key);
                items[fill[c] as usize] = i as u32;
                fill[c] += 1;
            }
            let coords = items
                .iter()
                .flat_map(|&i| points[i as usize].coords().iter().copied())
                .collect();
            Cells::Dense {
                origin,
                extent,
                offsets,
                items,
                coords,
            }
        } else {
            let mut map: FxHashMap<CellKey, Vec<u32>> = FxHashMap::default();
            for (i, key) in keys.into_iter().enumerate() {
                map.entry(key).or_default().push(i as u32);
            }
            Cells::Hashed(map)
        };
        let occupied = match &cells {
            Cells::Dense { offsets, .. } => offsets.windows(2).filter(|w| w[1] > w[0]).count(),
            Cells::Hashed(map) => map.len(),
        };
        SpatialGrid {
            cell,
            inv_cell,
            dim,
            cells,
            occupied,
            lo,
            hi,
        }
    }

    /// Point indices in cell order, when cells are stored densely.
    pub fn cell_order(&self) -> Option<&[u32]> {
        match &self.cells {
            Cells::Dense { items, .. } => Some(items),
            Cells::Hashed(_) => None,
        }
    }

    /// Calls `f(index, squared_distance)` for every point with `|p − q| ≤ r`.
    pub fn for_each_within(
        &self,
        points: &[Point],
        q: &Point,
        r: f64,
        mut f: impl FnMut(usize, f64),
    ) {
        if self.occupied == 0 {
            return;
        }
        let r2 = r * r;
        let mut visit = |indices: &[u32]| {
            for &j in indices {
                let d2 = points[j as usize].distance_squared(q);
                if d2 <= r2 {
                    f(j as usize, d2);
                }
            }
        };
        match &self.cells {
            Cells::Dense {
                origin,
                extent,
                offsets,
                items,
                coords,
            } => {
                let dim = self.dim;
                let qc = q.coords();
                let dense = DenseView {
                    origin,
                    extent,
                    offsets,
                    items,
                    coords,
                    inv_cell: self.inv_cell,
                };
                match dim {
                    1 => return dense.query::<1>(qc, r, f),
                    2 => return dense.query::<2>(qc, r, f),
                    3 => return dense.query::<3>(qc, r, f),
                    _ => {}
                }
                let mut visit_run = |a: usize, b: usize| {
                    for t in a..b {
                        let c = &coords[t * dim..(t + 1) * dim];
                        let d2: f64 = c.iter().zip(qc).map(|(x, y)| (x - y) * (x - y)).sum();
                        if d2 <= r2 {
                            f(items[t] as usize, d2);
                        }
                    }
                };
                let mut lo = [0i64; MAX_DENSE_DIM];
                let mut hi = [0i64; MAX_DENSE_DIM];
                for k in 0..dim {
                    lo[k] = fast_floor((qc[k] - r) * self.inv_cell).max(origin[k]);
                    hi[k] = fast_floor((qc[k] + r) * self.inv_cell).min(origin[k] + extent[k] - 1);
                    if lo[k] > hi[k] {
                        return;
                    }
                }
                let mut key = lo;
                loop {
                    // the first axis varies fastest, so its run of cells is contiguous
                    let mut base = 0i64;
                    for k in (1..self.dim).rev() {
                        base = base * extent[k] + (key[k] - origin[k]);
                    }
                    let row = (base * extent[0]) as usize;
                    let a = offsets[row + (lo[0] - origin[0]) as usize] as usize;
                    let b = offsets[row + (hi[0] - origin[0]) as usize + 1] as usize;
                    visit_run(a, b);
                    let mut k = 1;
                    loop {
                        if k >= self.dim {
                            return;
                        }
                        key[k] += 1;
                        if key[k] <= hi[k] {
                            break;
                        }
                        key[k] = lo[k];
                        k += 1;
                    }
                }
            }
            Cells::Hashed(map) => {
                let lo: CellKey = (0..self.dim)
                    .map(|k| fast_floor((q[k] - r) * self.inv_cell))
                    .collect();
                let hi: CellKey = (0..self.dim)
                    .map(|k| fast_floor((q[k] + r) * self.inv_cell))
                    .collect();
                let box_cells = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, h)| (h - l + 1) as f64)
                    .product::<f64>();
                if box_cells > map.len() as f64 {
                    for (key, indices) in map {
                        if key
                            .iter()
                            .zip(lo.iter().zip(&hi))
                            .all(|(c, (l, h))| c >= l && c <= h)
                        {
                            visit(indices);
                        }
                    }
                    return;
                }
                let mut key = lo.clone();
                loop {
                    if let Some(indices) = map.get(&key) {
                        visit(indices);
                    }
                    let mut k = 0;
                    loop {
                        if k == self.dim {
                            return;
                        }
                        key[k] += 1;
                        if key[k] <= hi[k] {
                            break;
                        }
                        key[k] = lo[k];
                        k += 1;
                    }
                }
            }
        }
    }

    /// Nearest point within the closed ball of radius `r` about `q`; ties go
    /// to the lowest index.
    pub fn closest_within(&self, points: &[Point], q: &Point, r: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.for_each_within(points, q, r, |j, d2| match best {
            Some((bj, bd)) if d2 > bd || (d2 == bd && j > bj) => {}
            _ => best = Some((j, d2)),
        });
        best.map(|(j, d2)| (j, d2.sqrt()))
    }

    /// Nearest point to `q` other than `exclude`.
    pub fn nearest_excluding(
        &self,
        points: &[Point],
        q: &Point,
        exclude: usize,
    ) -> Option<(usize, f64)> {
        let reach = self.max_distance_to_bbox(q);
        let mut r = self.cell;
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_each_within(points, q, r, |j, d2| {
                if j == exclude {
                    return;
                }
                match best {
                    Some((bj, bd)) if d2 > bd || (d2 == bd && j > bj) => {}
                    _ => best = Some((j, d2)),
                }
            });
            if let Some((j, d2)) = best {
                return Some((j, d2.sqrt()));
            }
            if r > reach {
                return None;
            }
            r *= 2.0;
        }
    }

    fn max_distance_to_bbox(&self, q: &Point) -> f64 {
        (0..self.dim)
            .map(|k| {
                let d = (q[k] - self.lo[k]).abs().max((q[k] - self.hi[k]).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn key_of(p: &Point, inv_cell: f64) -> CellKey {
    p.coords()
        .iter()
        .map(|c| fast_floor(c * inv_cell))
        .collect()
}

/// `x.floor() as i64` without the libm call; saturates like `as`.
#[inline]
fn fast_floor(x: f64) -> i64 {
    let t = x as i64;
    if (t as f64) > x {
        t - 1
    } else {
        t
    }
}

/// Smallest distance between two distinct entries of `points` (infinite when
/// fewer than two). `scale` is a length hint for the initial cell size.
pub(crate) fn min_pair_distance(points: &[Point], dim: usize, scale: f64) -> f64 {
    if points.len() < 2 {
        return f64::INFINITY;
    }
    let mut cell = default_cell_size(points.len(), dim, scale.max(f64::MIN_POSITIVE));
    loop {
        let grid = SpatialGrid::new(points, cell);
        let mut best = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            grid.for_each_within(points, p, cell, |j, d2| {
                if j > i && d2 < best {
                    best = d2;
                }
            });
        }
        let best = best.sqrt();
        // any pair closer than `cell` shares a neighborhood, so the minimum is exact
        if best <= cell {
            return best;
        }
        cell *= 4.0;
    }
}
