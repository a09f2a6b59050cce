//! Fixed-radius neighbor queries under the ℓ∞ norm on `[0, 1]^d`.
//!
//! [`NeighborIndex`] buckets points into a uniform grid (roughly one point
//! per cell) stored in compressed-row form. A query visits every cell that
//! overlaps the box `[x − Δ, x + Δ]^d` and filters candidates with the exact
//! closed-ball test `max_k |x_k − p_k| ≤ Δ`, so results equal a brute-force
//! scan.

use crate::error::{Error, Result};

/// Upper bound on the number of grid cells per point.
const MAX_CELLS_PER_POINT: usize = 2;

/// Points in `[0, 1]^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        Ok(Self {
            dim,
            coords: Vec::new(),
        })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut set = Self::new(dim)?;
        for p in points {
            set.push(p.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        check_point(self.dim, point)?;
        self.coords.extend_from_slice(point);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.coords[id * self.dim..(id + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
}

/// Validate dimension and domain of a point.
pub fn check_point(dim: usize, point: &[f64]) -> Result<()> {
    if point.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: point.len(),
        });
    }
    for (axis, &value) in point.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::PointOutOfDomain { axis, value });
        }
    }
    Ok(())
}

/// Neighborhood half-width Δ ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KernelWidth(f64);

impl KernelWidth {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidKernelWidth(delta));
        }
        Ok(Self(delta))
    }

    /// Width covering the whole domain.
    pub fn full() -> Self {
        Self(1.0)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `Δ = min(1, L^(−2/(d+2)) · (shrink · t)^(−1/(d+2)))`.
///
/// `shrink` is the factor `1 − B` applied to the sample count when tests are
/// lifted by a constant contextual offset `B`; use 1 in the static setting.
pub fn delta_schedule(t: usize, dim: usize, lipschitz: f64, shrink: f64) -> Result<KernelWidth> {
    if t == 0 {
        return Err(Error::InvalidSchedule(
            "sample count must be positive".into(),
        ));
    }
    if dim == 0 {
        return Err(Error::InvalidSchedule("dimension must be positive".into()));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidSchedule(format!(
            "Lipschitz constant {lipschitz}"
        )));
    }
    if !(shrink > 0.0 && shrink <= 1.0) {
        return Err(Error::InvalidSchedule(format!("shrink factor {shrink}")));
    }
    let exponent = 1.0 / (dim as f64 + 2.0);
    let delta = lipschitz.powf(-2.0 * exponent) * (shrink * t as f64).powf(-exponent);
    Ok(KernelWidth(delta.min(1.0)))
}

/// Static grid index over a [`PointSet`].
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: PointSet,
    cells_per_axis: usize,
    /// `cell_start[c]..cell_start[c + 1]` indexes `ids` for cell `c`.
    cell_start: Vec<usize>,
    ids: Vec<usize>,
}

impl NeighborIndex {
    pub fn build(points: PointSet) -> Self {
        let n = points.len();
        let dim = points.dim();
        let cells_per_axis = grid_resolution(n, dim);
        let total_cells = cells_per_axis.pow(dim as u32);

        let cell_of: Vec<usize> = points
            .iter()
            .map(|p| linear_cell(p, cells_per_axis))
            .collect();
        let mut counts = vec![0usize; total_cells + 1];
        for &c in &cell_of {
            counts[c + 1] += 1;
        }
        for c in 0..total_cells {
            counts[c + 1] += counts[c];
        }
        let cell_start = counts.clone();
        let mut cursor = counts;
        let mut ids = vec![0usize; n];
        for (id, &c) in cell_of.iter().enumerate() {
            ids[cursor[c]] = id;
            cursor[c] += 1;
        }
        Self {
            points,
            cells_per_axis,
            cell_start,
            ids,
        }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ids within ℓ∞ distance `delta` of `x`, in ascending order.
    pub fn query_radius(&self, x: &[f64], delta: KernelWidth) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        self.for_each_in_radius(x, delta, |id| out.push(id))?;
        out.sort_unstable();
        Ok(out)
    }

    /// Call `visit` once for each id within ℓ∞ distance `delta` of `x`, in
    /// unspecified order.
    pub fn for_each_in_radius<F: FnMut(usize)>(
        &self,
        x: &[f64],
        delta: KernelWidth,
        mut visit: F,
    ) -> Result<()> {
        check_point(self.dim(), x)?;
        if self.is_empty() {
            return Ok(());
        }
        let d = delta.get();
        let k = self.cells_per_axis;
        // One extra cell of slack on each side absorbs rounding in the bounds.
        let lo: Vec<usize> = x
            .iter()
            .map(|&v| axis_cell(v - d, k).saturating_sub(1))
            .collect();
        let hi: Vec<usize> = x
            .iter()
            .map(|&v| (axis_cell(v + d, k) + 1).min(k - 1))
            .collect();

        let mut cursor = lo.clone();
        loop {
            let cell = cursor.iter().fold(0, |acc, &c| acc * k + c);
            for &id in &self.ids[self.cell_start[cell]..self.cell_start[cell + 1]] {
                if within(self.points.point(id), x, d) {
                    visit(id);
                }
            }
            // Odometer increment over the cell box.
            let mut axis = cursor.len();
            loop {
                if axis == 0 {
                    return Ok(());
                }
                axis -= 1;
                if cursor[axis] < hi[axis] {
                    cursor[axis] += 1;
                    break;
                }
                cursor[axis] = lo[axis];
            }
        }
    }

    /// Number of points within `delta` of `x`.
    pub fn count_in_radius(&self, x: &[f64], delta: KernelWidth) -> Result<usize> {
        let mut count = 0;
        self.for_each_in_radius(x, delta, |_| count += 1)?;
        Ok(count)
    }
}

#[inline]
fn within(p: &[f64], x: &[f64], delta: f64) -> bool {
    p.iter().zip(x).all(|(a, b)| (a - b).abs() <= delta)
}

fn grid_resolution(n: usize, dim: usize) -> usize {
    if n == 0 {
        return 1;
    }
    let mut k = ((n as f64).powf(1.0 / dim as f64).floor() as usize).max(1);
    while k > 1
        && k.checked_pow(dim as u32)
            .is_none_or(|c| c > MAX_CELLS_PER_POINT * n)
    {
        k -= 1;
    }
    k
}

#[inline]
fn axis_cell(v: f64, k: usize) -> usize {
    if v <= 0.0 {
        0
    } else {
        ((v * k as f64) as usize).min(k - 1)
    }
}

fn linear_cell(p: &[f64], k: usize) -> usize {
    p.iter().fold(0, |acc, &v| acc * k + axis_cell(v, k))
}

/// Reference implementation used by tests: linear scan.
pub fn brute_force_radius(points: &PointSet, x: &[f64], delta: KernelWidth) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| within(p, x, delta.get()))
        .map(|(id, _)| id)
        .collect()
}
