//! Thin plate spline warping (scenario H).
//!
//! A 4x4 grid of control points spanning the image (borders included) is
//! displaced at random, an interpolating TPS is fitted from output-space
//! origins to input-space destinations, and every output pixel samples the
//! input at the mapped location.
//!
//! Coordinates are isotropic and scaled by the image width: pixel `(x, y)`
//! sits at `(x, y) / (W - 1)`. The grid therefore spans `[0, 1]` in x and
//! `[0, (H - 1) / (W - 1)]` in y, and displacements are fractions of the
//! width on both axes.

use crate::imgcore::Edge;
use crate::{Error, ImageBuffer, Result, RngStream};

pub const GRID_SIDE: usize = 4;
pub const GRID_POINTS: usize = GRID_SIDE * GRID_SIDE;

/// Displacements at or above one half grid spacing can fold the warp.
pub const MAX_DISPLACEMENT_LIMIT: f64 = 1.0 / 6.0;

const RCOND_LIMIT: f64 = 1e-12;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    /// `{0, 1/3, 2/3, 1}^2`, row-major.
    pub origins: [Point; GRID_POINTS],
    pub destinations: [Point; GRID_POINTS],
}

impl ControlGrid {
    pub fn unit_origins() -> [Point; GRID_POINTS] {
        let step = 1.0 / (GRID_SIDE - 1) as f64;
        std::array::from_fn(|k| [(k % GRID_SIDE) as f64 * step, (k / GRID_SIDE) as f64 * step])
    }

    pub fn identity() -> Self {
        let origins = Self::unit_origins();
        Self {
            origins,
            destinations: origins,
        }
    }

    pub fn displacements(&self) -> [Point; GRID_POINTS] {
        std::array::from_fn(|k| {
            [
                self.destinations[k][0] - self.origins[k][0],
                self.destinations[k][1] - self.origins[k][1],
            ]
        })
    }
}

/// Destinations are origins plus independent `U[-max_disp, max_disp]`
/// offsets on each axis.
pub fn sample_control_grid(rng: &mut RngStream, max_disp: f64) -> Result<ControlGrid> {
    if !(0.0..MAX_DISPLACEMENT_LIMIT).contains(&max_disp) {
        return Err(Error::InvalidParameter(format!(
            "max displacement must lie in [0, 1/6), got {max_disp}"
        )));
    }
    let origins = ControlGrid::unit_origins();
    let destinations = std::array::from_fn(|k| {
        let dx = rng.uniform(-max_disp, max_disp);
        let dy = rng.uniform(-max_disp, max_disp);
        [origins[k][0] + dx, origins[k][1] + dy]
    });
    Ok(ControlGrid {
        origins,
        destinations,
    })
}

/// Radial basis `r^2 log r^2`, written in terms of the squared distance.
#[inline]
pub fn kernel(r2: f64) -> f64 {
    if r2 == 0.0 {
        0.0
    } else {
        r2 * r2.ln()
    }
}

/// Fitted 2-D thin plate spline.
#[derive(Debug, Clone, PartialEq)]
pub struct TpsModel {
    centers: Vec<Point>,
    /// Radial weights per output coordinate.
    weights: [Vec<f64>; 2],
    /// `(a0, ax, ay)` per output coordinate.
    affine: [[f64; 3]; 2],
}

impl TpsModel {
    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn weights_x(&self) -> &[f64] {
        &self.weights[0]
    }

    pub fn weights_y(&self) -> &[f64] {
        &self.weights[1]
    }

    pub fn affine_x(&self) -> [f64; 3] {
        self.affine[0]
    }

    pub fn affine_y(&self) -> [f64; 3] {
        self.affine[1]
    }

    pub fn evaluate(&self, p: Point) -> Point {
        let mut out = [
            self.affine[0][0] + self.affine[0][1] * p[0] + self.affine[0][2] * p[1],
            self.affine[1][0] + self.affine[1][1] * p[0] + self.affine[1][2] * p[1],
        ];
        for (i, c) in self.centers.iter().enumerate() {
            let dx = p[0] - c[0];
            let dy = p[1] - c[1];
            let u = kernel(dx * dx + dy * dy);
            out[0] += self.weights[0][i] * u;
            out[1] += self.weights[1][i] * u;
        }
        out
    }
}

pub fn tps_evaluate(model: &TpsModel, p: Point) -> Point {
    model.evaluate(p)
}

/// Solves the interpolating system `[[K, P], [P^T, 0]] [w; a] = [v; 0]`
/// for both output coordinates.
pub fn fit_tps(src: &[Point], dst: &[Point]) -> Result<TpsModel> {
    let n = src.len();
    if n != dst.len() {
        return Err(Error::InvalidParameter(format!(
            "{} source points but {} destinations",
            n,
            dst.len()
        )));
    }
    if n < 3 {
        return Err(Error::SingularSystem(format!("need at least 3 points, got {n}")));
    }
    for i in 0..n {
        for j in 0..i {
            if src[i] == src[j] {
                return Err(Error::SingularSystem(format!(
                    "source points {j} and {i} coincide"
                )));
            }
        }
    }

    let m = n + 3;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let dx = src[i][0] - src[j][0];
            let dy = src[i][1] - src[j][1];
            a[i * m + j] = kernel(dx * dx + dy * dy);
        }
        let p = [1.0, src[i][0], src[i][1]];
        for k in 0..3 {
            a[i * m + n + k] = p[k];
            a[(n + k) * m + i] = p[k];
        }
    }
    let mut rhs = vec![[0.0; 2]; m];
    rhs[..n].copy_from_slice(dst);

    let lu = Lu::factor(a, m)?;
    let sol = lu.solve(&rhs);
    Ok(TpsModel {
        centers: src.to_vec(),
        weights: [
            sol[..n].iter().map(|s| s[0]).collect(),
            sol[..n].iter().map(|s| s[1]).collect(),
        ],
        affine: [
            [sol[n][0], sol[n + 1][0], sol[n + 2][0]],
            [sol[n][1], sol[n + 1][1], sol[n + 2][1]],
        ],
    })
}

/// Dense LU with partial pivoting.
struct Lu {
    m: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, m: usize) -> Result<Self> {
        let mut perm: Vec<usize> = (0..m).collect();
        let mut max_pivot: f64 = 0.0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..m {
            let (p, pivot) = (k..m)
                .map(|r| (r, a[r * m + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem(format!("zero pivot in column {k}")));
            }
            if p != k {
                for c in 0..m {
                    a.swap(k * m + c, p * m + c);
                }
                perm.swap(k, p);
            }
            max_pivot = max_pivot.max(pivot);
            min_pivot = min_pivot.min(pivot);
            let d = a[k * m + k];
            for r in k + 1..m {
                let f = a[r * m + k] / d;
                a[r * m + k] = f;
                if f != 0.0 {
                    for c in k + 1..m {
                        a[r * m + c] -= f * a[k * m + c];
                    }
                }
            }
        }
        // Pivot ratio as a cheap reciprocal-condition estimate.
        if min_pivot / max_pivot < RCOND_LIMIT {
            return Err(Error::SingularSystem(format!(
                "ill-conditioned system (pivot ratio {:.3e})",
                min_pivot / max_pivot
            )));
        }
        Ok(Self { m, a, perm })
    }

    fn solve(&self, rhs: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let m = self.m;
        let mut x: Vec<[f64; 2]> = self.perm.iter().map(|&p| rhs[p]).collect();
        for r in 0..m {
            for c in 0..r {
                let f = self.a[r * m + c];
                x[r][0] -= f * x[c][0];
                x[r][1] -= f * x[c][1];
            }
        }
        for r in (0..m).rev() {
            for c in r + 1..m {
                let f = self.a[r * m + c];
                x[r][0] -= f * x[c][0];
                x[r][1] -= f * x[c][1];
            }
            let d = self.a[r * m + r];
            x[r][0] /= d;
            x[r][1] /= d;
        }
        x
    }
}

/// Warps `img` so that the content at each grid destination lands on the
/// matching origin.
pub fn warp_with_grid(img: &ImageBuffer, grid: &ControlGrid) -> Result<ImageBuffer> {
    let (w, h) = img.dimensions();
    let scale = (w.max(2) - 1) as f64;
    let aspect = (h.max(2) - 1) as f64 / scale;
    let frame = |p: Point| [p[0], p[1] * aspect];
    let src: Vec<Point> = grid.origins.iter().map(|&p| frame(p)).collect();
    let dst: Vec<Point> = grid
        .origins
        .iter()
        .zip(grid.displacements())
        .map(|(&o, d)| {
            let f = frame(o);
            [f[0] + d[0], f[1] + d[1]]
        })
        .collect();
    let model = fit_tps(&src, &dst)?;
    Ok(img.remap(w, h, Edge::Symmetric, move |x, y| {
        let q = model.evaluate([x / scale, y / scale]);
        (q[0] * scale, q[1] * scale)
    }))
}

pub fn elastic_warp(img: &ImageBuffer, rng: &mut RngStream, max_disp: f64) -> Result<ImageBuffer> {
    let grid = sample_control_grid(rng, max_disp)?;
    warp_with_grid(img, &grid)
}
