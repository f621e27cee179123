//! Structured quadrilateral meshes with bilinear element maps.

use crate::error::{Error, Result};

/// Upper bound (exclusive) on the vertex perturbation, in cell sizes.
pub const MAX_DISTORTION: f64 = 0.3;

/// Corners of one element: bottom-left, bottom-right, top-left, top-right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementQuad {
    pub vertices: [[f64; 2]; 4],
}

impl ElementQuad {
    pub fn new(v0: [f64; 2], v1: [f64; 2], v2: [f64; 2], v3: [f64; 2]) -> Self {
        ElementQuad {
            vertices: [v0, v1, v2, v3],
        }
    }

    /// Maps a reference point `(s, t)` in the unit square to physical space.
    pub fn map(&self, s: f64, t: f64) -> [f64; 2] {
        let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
        let mut x = [0.0; 2];
        for (wk, v) in w.iter().zip(&self.vertices) {
            x[0] += wk * v[0];
            x[1] += wk * v[1];
        }
        x
    }

    /// Columns `dx/ds` and `dx/dt` of the map's Jacobian.
    #[inline]
    pub fn jacobian(&self, s: f64, t: f64) -> [[f64; 2]; 2] {
        let [v0, v1, v2, v3] = self.vertices;
        let mut ds = [0.0; 2];
        let mut dt = [0.0; 2];
        for c in 0..2 {
            ds[c] = (1.0 - t) * (v1[c] - v0[c]) + t * (v3[c] - v2[c]);
            dt[c] = (1.0 - s) * (v2[c] - v0[c]) + s * (v3[c] - v1[c]);
        }
        [ds, dt]
    }

    #[inline]
    pub fn jacobian_det(&self, s: f64, t: f64) -> f64 {
        let [ds, dt] = self.jacobian(s, t);
        ds[0] * dt[1] - ds[1] * dt[0]
    }
}

/// Determinant of the bilinear map's Jacobian at reference point `(s, t)`.
pub fn jacobian_det_at(quad: &ElementQuad, ref_point: (f64, f64)) -> f64 {
    quad.jacobian_det(ref_point.0, ref_point.1)
}

/// Uniform `nx x ny` grid on `[0, extent_x] x [0, extent_y]`, optionally with
/// interior vertices perturbed. Elements are numbered `i = iy * nx + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    nx: usize,
    ny: usize,
    extent_x: f64,
    extent_y: f64,
    vertices: Vec<[f64; 2]>,
}

impl Mesh {
    /// Builds the grid. Interior vertex `(ix, iy)` is moved by
    /// `distortion * h * (sin(1.7 ix + 2.3 iy), cos(2.9 ix + 1.1 iy))`;
    /// boundary vertices stay on the boundary.
    pub fn structured(
        nx: usize,
        ny: usize,
        extent_x: f64,
        extent_y: f64,
        distortion: f64,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "mesh needs at least one element per direction, got {nx} x {ny}"
            )));
        }
        if !(extent_x > 0.0 && extent_y > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "domain extents must be positive, got {extent_x} x {extent_y}"
            )));
        }
        if !(0.0..MAX_DISTORTION).contains(&distortion) {
            return Err(Error::InvalidArgument(format!(
                "distortion {distortion} outside [0, {MAX_DISTORTION})"
            )));
        }
        let n_vertices = (nx + 1) * (ny + 1);
        if nx.checked_mul(ny).is_none_or(|n| n > u32::MAX as usize) {
            return Err(Error::InvalidArgument(format!(
                "{nx} x {ny} elements exceed the 32-bit index range"
            )));
        }
        let hx = extent_x / nx as f64;
        let hy = extent_y / ny as f64;
        let mut vertices = Vec::new();
        vertices
            .try_reserve_exact(n_vertices)
            .map_err(|_| Error::Allocation(2 * n_vertices))?;
        for iy in 0..=ny {
            for ix in 0..=nx {
                let mut x = ix as f64 * hx;
                let mut y = iy as f64 * hy;
                let interior = ix > 0 && ix < nx && iy > 0 && iy < ny;
                if interior && distortion > 0.0 {
                    let (fx, fy) = (ix as f64, iy as f64);
                    x += distortion * hx * (1.7 * fx + 2.3 * fy).sin();
                    y += distortion * hy * (2.9 * fx + 1.1 * fy).cos();
                }
                vertices.push([x, y]);
            }
        }
        Ok(Mesh {
            nx,
            ny,
            extent_x,
            extent_y,
            vertices,
        })
    }

    /// Square domain of `extent_m` meters at `resolution_km` cell size.
    pub fn square_at_resolution(extent_m: f64, resolution_km: f64, distortion: f64) -> Result<Self> {
        let n = elements_per_side(extent_m, resolution_km)?;
        Self::structured(n, n, extent_m, extent_m, distortion)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.extent_x, self.extent_y)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Corners of element `i`; panics when out of range.
    #[inline]
    pub fn quad(&self, i: usize) -> ElementQuad {
        let (ix, iy) = (i % self.nx, i / self.nx);
        let row = self.nx + 1;
        let bl = iy * row + ix;
        ElementQuad::new(
            self.vertices[bl],
            self.vertices[bl + 1],
            self.vertices[bl + row],
            self.vertices[bl + row + 1],
        )
    }

    pub fn element_vertices(&self, i: usize) -> Result<ElementQuad> {
        if i >= self.n_elements() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_elements(),
            });
        }
        Ok(self.quad(i))
    }
}

/// Elements per side for a square domain; errors unless the resolution
/// divides the extent into a whole number of cells.
pub fn elements_per_side(extent_m: f64, resolution_km: f64) -> Result<usize> {
    if !(resolution_km > 0.0 && extent_m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution_km} km and extent {extent_m} m must be positive"
        )));
    }
    let cells = extent_m / (resolution_km * 1e3);
    let n = cells.round();
    if n < 1.0 || (cells - n).abs() > 1e-9 * cells {
        return Err(Error::InvalidArgument(format!(
            "{resolution_km} km does not evenly divide a {} km domain",
            extent_m / 1e3
        )));
    }
    Ok(n as usize)
}
