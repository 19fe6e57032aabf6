//! Matérn covariance kernels, distance metrics and covariance blocks.
//!
//! The Matérn family is parameterized without the `sqrt(2 nu)` factor:
//!
//! ```text
//! k(d) = sigma2 * g(d / rho)
//! g_{1/2}(u) = exp(-u)
//! g_{3/2}(u) = (1 + u) exp(-u)
//! g_{5/2}(u) = (1 + u + u^2 / 3) exp(-u)
//! ```
//!
//! Ranges from software using the `sqrt(2 nu) d / rho` convention must be
//! divided by `sqrt(2 nu)` before they are passed here.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Distance used between locations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// Straight-line distance between (longitude, latitude) points, in
    /// degrees, mapped onto the unit sphere.
    Chordal,
}

/// Matérn smoothness values with closed-form kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl Smoothness {
    pub fn from_value(nu: f64) -> Result<Self> {
        if nu == 0.5 {
            Ok(Smoothness::Half)
        } else if nu == 1.5 {
            Ok(Smoothness::ThreeHalves)
        } else if nu == 2.5 {
            Ok(Smoothness::FiveHalves)
        } else {
            Err(Error::InvalidParameter(format!("unsupported Matérn smoothness {nu}; use 0.5, 1.5 or 2.5")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }

    /// Unit-variance correlation at scaled distance `u = d / rho`.
    #[inline]
    pub fn correlation(self, u: f64) -> f64 {
        let e = (-u).exp();
        match self {
            Smoothness::Half => e,
            Smoothness::ThreeHalves => (1.0 + u) * e,
            Smoothness::FiveHalves => (1.0 + u + u * u / 3.0) * e,
        }
    }
}

/// A set of `n` points in `d` dimensions, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LocationSet {
    coords: Vec<f64>,
    dim: usize,
    metric: Metric,
}

impl LocationSet {
    pub fn new(points: &[Vec<f64>], metric: Metric) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim.max(1), metric)
    }

    pub fn from_flat(coords: Vec<f64>, dim: usize, metric: Metric) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("location dimension must be >= 1".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: coords.len() % dim });
        }
        if metric == Metric::Chordal && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "chordal metric needs (longitude, latitude) points, got dimension {dim}"
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("location coordinates"));
        }
        Ok(Self { coords, dim, metric })
    }

    /// Regular grid over `[0, 1]^2` with `side x side` points, x-major.
    pub fn unit_grid(side: usize) -> Self {
        let step = if side > 1 { 1.0 / (side - 1) as f64 } else { 0.0 };
        Self::grid(side, side * side, step)
    }

    /// The first `n` points of a 2-D grid with `cols` columns and the given
    /// spacing, enumerated x-major.
    pub fn grid(cols: usize, n: usize, spacing: f64) -> Self {
        let cols = cols.max(1);
        let mut coords = Vec::with_capacity(2 * n);
        for i in 0..n {
            coords.push((i / cols) as f64 * spacing);
            coords.push((i % cols) as f64 * spacing);
        }
        Self { coords, dim: 2, metric: Metric::Euclidean }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// New set holding the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self { coords, dim: self.dim, metric: self.metric }
    }

    /// Coordinates in which the metric is plain Euclidean distance: the
    /// points themselves, or their unit-sphere embedding for chordal sets.
    pub fn embedded(&self) -> (Vec<f64>, usize) {
        match self.metric {
            Metric::Euclidean => (self.coords.clone(), self.dim),
            Metric::Chordal => {
                let mut out = Vec::with_capacity(self.len() * 3);
                for p in self.points() {
                    out.extend_from_slice(&sphere_point(p));
                }
                (out, 3)
            }
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance_unchecked(self.point(i), self.point(j), self.metric)
    }
}

fn sphere_point(p: &[f64]) -> [f64; 3] {
    let lon = p[0].to_radians();
    let lat = p[1].to_radians();
    [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
}

/// Squared Euclidean distance, accumulated in coordinate order.
#[inline]
pub(crate) fn squared_euclidean(s: &[f64], t: &[f64]) -> f64 {
    s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn distance_unchecked(s: &[f64], t: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => squared_euclidean(s, t).sqrt(),
        Metric::Chordal => squared_euclidean(&sphere_point(s), &sphere_point(t)).sqrt(),
    }
}

pub fn distance(s: &[f64], t: &[f64], metric: Metric) -> Result<f64> {
    if s.len() != t.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), found: t.len() });
    }
    if metric == Metric::Chordal && s.len() != 2 {
        return Err(Error::InvalidParameter(format!("chordal metric needs dimension 2, got {}", s.len())));
    }
    Ok(distance_unchecked(s, t, metric))
}

/// Stationary Matérn covariance with optional anisotropic ranges and nugget.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceModel {
    variance: f64,
    ranges: Vec<f64>,
    smoothness: Smoothness,
    nugget: f64,
}

impl CovarianceModel {
    pub fn new(variance: f64, ranges: Vec<f64>, smoothness: Smoothness, nugget: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!("variance must be positive, got {variance}")));
        }
        if ranges.is_empty() || ranges.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!("ranges must be positive, got {ranges:?}")));
        }
        if !(nugget >= 0.0 && nugget.is_finite()) {
            return Err(Error::InvalidParameter(format!("nugget must be nonnegative, got {nugget}")));
        }
        Ok(Self { variance, ranges, smoothness, nugget })
    }

    pub fn isotropic(variance: f64, range: f64, smoothness: Smoothness, nugget: f64) -> Result<Self> {
        Self::new(variance, vec![range], smoothness, nugget)
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn is_isotropic(&self) -> bool {
        self.ranges.len() == 1
    }

    /// Checks that the model can be evaluated on `locations`.
    pub fn check_locations(&self, locations: &LocationSet) -> Result<()> {
        if !self.is_isotropic() {
            if locations.metric() == Metric::Chordal {
                return Err(Error::InvalidParameter(
                    "per-dimension ranges are not supported with the chordal metric".into(),
                ));
            }
            if self.ranges.len() != locations.dim() {
                return Err(Error::DimensionMismatch { expected: locations.dim(), found: self.ranges.len() });
            }
        }
        Ok(())
    }

    /// Distance in range units between two points.
    #[inline]
    pub fn scaled_distance(&self, s: &[f64], t: &[f64], metric: Metric) -> f64 {
        if self.ranges.len() == 1 {
            distance_unchecked(s, t, metric) / self.ranges[0]
        } else {
            s.iter()
                .zip(t)
                .zip(&self.ranges)
                .map(|((a, b), r)| {
                    let u = (a - b) / r;
                    u * u
                })
                .sum::<f64>()
                .sqrt()
        }
    }

    /// Covariance at a scaled distance; no nugget.
    #[inline]
    pub fn covariance_at(&self, scaled: f64) -> f64 {
        self.variance * self.smoothness.correlation(scaled)
    }

    /// Kernel value between two points. The nugget is added only when the
    /// two arguments refer to the same index.
    pub fn value(&self, s: &[f64], t: &[f64], metric: Metric, same_index: bool) -> f64 {
        let k = self.covariance_at(self.scaled_distance(s, t, metric));
        if same_index {
            k + self.nugget
        } else {
            k
        }
    }

    /// Locations whose Euclidean geometry matches the kernel's anisotropy:
    /// each coordinate divided by its range. Isotropic models return the
    /// set unchanged, since uniform scaling preserves neighbor order.
    pub fn search_locations(&self, locations: &LocationSet) -> LocationSet {
        if self.is_isotropic() {
            return locations.clone();
        }
        let d = locations.dim();
        let coords = locations.flat().iter().enumerate().map(|(k, c)| c / self.ranges[k % d]).collect();
        LocationSet { coords, dim: d, metric: Metric::Euclidean }
    }
}

/// Checked scalar kernel evaluation.
pub fn kernel_value(model: &CovarianceModel, s: &[f64], t: &[f64], metric: Metric, same_index: bool) -> Result<f64> {
    distance(s, t, metric)?;
    if !model.is_isotropic() && model.ranges.len() != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), found: model.ranges.len() });
    }
    if !model.is_isotropic() && metric == Metric::Chordal {
        return Err(Error::InvalidParameter("per-dimension ranges are not supported with the chordal metric".into()));
    }
    Ok(model.value(s, t, metric, same_index))
}

/// Source of covariance entries `Sigma[i, j]` addressed by original index.
#[derive(Clone, Debug)]
pub enum Covariance {
    Kernel { model: CovarianceModel, locations: LocationSet },
    Dense(DMatrix<f64>),
}

impl Covariance {
    pub fn kernel(model: CovarianceModel, locations: LocationSet) -> Result<Self> {
        model.check_locations(&locations)?;
        Ok(Covariance::Kernel { model, locations })
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance matrix"));
        }
        for i in 0..matrix.nrows() {
            for j in 0..i {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(Error::InvalidParameter(format!("covariance matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Covariance::Dense(matrix))
    }

    pub fn len(&self) -> usize {
        match self {
            Covariance::Kernel { locations, .. } => locations.len(),
            Covariance::Dense(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Covariance::Kernel { model, locations } => {
                model.value(locations.point(i), locations.point(j), locations.metric(), i == j)
            }
            Covariance::Dense(m) => m[(i, j)],
        }
    }

    /// Dense block with entries `Sigma[rows[r], cols[c]]`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Result<DMatrix<f64>> {
        let n = self.len();
        if let Some(&index) = rows.iter().chain(cols).find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
        Ok(self.block_unchecked(rows, cols))
    }

    pub(crate) fn block_unchecked(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.entry(rows[r], cols[c]))
    }
}

/// Covariance block of a kernel over `locations`.
pub fn covariance_block(
    model: &CovarianceModel,
    locations: &LocationSet,
    rows: &[usize],
    cols: &[usize],
) -> Result<DMatrix<f64>> {
    model.check_locations(locations)?;
    let n = locations.len();
    if let Some(&index) = rows.iter().chain(cols).find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index, len: n });
    }
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        model.value(locations.point(rows[r]), locations.point(cols[c]), locations.metric(), rows[r] == cols[c])
    }))
}
