//! Refractive-index fields n(q): the sole physical input that determines
//! the ray dynamics.
//!
//! Analytic families (homogeneous, linear, Maxwell fish-eye, parabolic
//! GRIN) carry exact gradients and second derivatives; sampled grids are
//! interpolated with a C¹ cubic-convolution kernel by default so that the
//! momentum equation ṗ ∝ ∇n stays continuous across cells.

use crate::error::HeliosError;
use crate::math::{Mat3, Vec3};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Axis-aligned bounding box of the medium.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Domain {
    pub min: Vec3,
    pub max: Vec3,
}

impl Domain {
    pub fn new(min: Vec3, max: Vec3) -> Result<Domain> {
        for i in 0..3 {
            if !(min.0[i] < max.0[i]) {
                return Err(HeliosError::Config(format!(
                    "domain must have positive extent on every axis, got min {:?} max {:?}",
                    min, max
                )));
            }
        }
        Ok(Domain { min, max })
    }

    pub fn contains(&self, q: Vec3) -> bool {
        (0..3).all(|i| q.0[i] >= self.min.0[i] && q.0[i] <= self.max.0[i])
    }

    /// Which face a point has left through (axis, +1 for max side / -1 for
    /// min side). Picks the axis of deepest violation.
    pub fn exit_face(&self, q: Vec3) -> Option<(usize, i8)> {
        let mut worst: Option<(usize, i8, f64)> = None;
        for i in 0..3 {
            let below = self.min.0[i] - q.0[i];
            let above = q.0[i] - self.max.0[i];
            if below > 0.0 && worst.map_or(true, |w| below > w.2) {
                worst = Some((i, -1, below));
            }
            if above > 0.0 && worst.map_or(true, |w| above > w.2) {
                worst = Some((i, 1, above));
            }
        }
        worst.map(|(a, s, _)| (a, s))
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }
}

/// Grid interpolation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationOrder {
    /// C¹ cubic convolution (4×4×4 stencil); the default. Gradients of the
    /// interpolant are continuous, which the Hamiltonian flow needs.
    Tricubic,
    /// C⁰ trilinear. Cheap, but ∇n jumps across cell faces, so momentum
    /// updates are only piecewise smooth; accepted with that caveat.
    Trilinear,
}

/// A scalar field sampled on a regular 3-D grid.
#[derive(Debug, Clone)]
pub struct GridField {
    pub dims: [usize; 3],
    pub origin: Vec3,
    pub spacing: Vec3,
    pub samples: Vec<f64>,
    pub order: InterpolationOrder,
}

impl GridField {
    pub fn new(
        dims: [usize; 3],
        origin: Vec3,
        spacing: Vec3,
        samples: Vec<f64>,
        order: InterpolationOrder,
    ) -> Result<GridField> {
        if dims.iter().any(|&d| d < 2) {
            return Err(HeliosError::Config(
                "grid must have at least 2 samples per axis".into(),
            ));
        }
        if spacing.0.iter().any(|&s| !(s > 0.0)) {
            return Err(HeliosError::Config("grid spacing must be positive".into()));
        }
        let expect = dims[0] * dims[1] * dims[2];
        if samples.len() != expect {
            return Err(HeliosError::Config(format!(
                "grid sample count {} does not match dims {:?} (expected {})",
                samples.len(),
                dims,
                expect
            )));
        }
        Ok(GridField {
            dims,
            origin,
            spacing,
            samples,
            order,
        })
    }

    /// Load from a raw little-endian f64 array with a sidecar JSON header
    /// `{"dims": [nx,ny,nz], "origin": [x,y,z], "spacing": [dx,dy,dz]}`.
    pub fn from_raw_file(
        raw_path: &std::path::Path,
        header_path: &std::path::Path,
        order: InterpolationOrder,
    ) -> Result<GridField> {
        #[derive(Deserialize)]
        struct Header {
            dims: [usize; 3],
            origin: [f64; 3],
            spacing: [f64; 3],
        }
        let header: Header = serde_json::from_slice(
            &std::fs::read(header_path)
                .map_err(|e| HeliosError::Config(format!("reading {:?}: {e}", header_path)))?,
        )
        .map_err(|e| HeliosError::Config(format!("grid header: {e}")))?;
        let bytes = std::fs::read(raw_path)
            .map_err(|e| HeliosError::Config(format!("reading {:?}: {e}", raw_path)))?;
        if bytes.len() % 8 != 0 {
            return Err(HeliosError::Config(
                "raw grid file length is not a multiple of 8".into(),
            ));
        }
        let samples: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        GridField::new(
            header.dims,
            Vec3(header.origin),
            Vec3(header.spacing),
            samples,
            order,
        )
    }

    fn sample(&self, i: usize, j: usize, k: usize) -> f64 {
        self.samples[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    /// Natural domain on which interpolation (and one-stencil-margin
    /// gradients) are defined.
    fn natural_domain(&self) -> Domain {
        let lo;
        let hi;
        match self.order {
            InterpolationOrder::Trilinear => {
                lo = self.origin;
                hi = Vec3([
                    self.origin.0[0] + (self.dims[0] - 1) as f64 * self.spacing.0[0],
                    self.origin.0[1] + (self.dims[1] - 1) as f64 * self.spacing.0[1],
                    self.origin.0[2] + (self.dims[2] - 1) as f64 * self.spacing.0[2],
                ]);
            }
            InterpolationOrder::Tricubic => {
                // The 4-point kernel needs one node of margin on each side.
                lo = Vec3([
                    self.origin.0[0] + self.spacing.0[0],
                    self.origin.0[1] + self.spacing.0[1],
                    self.origin.0[2] + self.spacing.0[2],
                ]);
                hi = Vec3([
                    self.origin.0[0] + (self.dims[0] - 2) as f64 * self.spacing.0[0],
                    self.origin.0[1] + (self.dims[1] - 2) as f64 * self.spacing.0[1],
                    self.origin.0[2] + (self.dims[2] - 2) as f64 * self.spacing.0[2],
                ]);
            }
        }
        Domain { min: lo, max: hi }
    }

    /// Per-axis cell index and fractional coordinate, clamped so that a
    /// query exactly on the upper boundary still resolves to a valid cell.
    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let t = (x - self.origin.0[axis]) / self.spacing.0[axis];
        let max_cell = self.dims[axis] - 2;
        let i = (t.floor() as isize).clamp(0, max_cell as isize) as usize;
        (i, t - i as f64)
    }

    fn value_trilinear(&self, q: Vec3) -> f64 {
        let (i, fx) = self.locate(0, q.0[0]);
        let (j, fy) = self.locate(1, q.0[1]);
        let (k, fz) = self.locate(2, q.0[2]);
        let mut acc = 0.0;
        for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
                    acc += wx * wy * wz * self.sample(i + di, j + dj, k + dk);
                }
            }
        }
        acc
    }

    fn grad_trilinear(&self, q: Vec3) -> Vec3 {
        let (i, fx) = self.locate(0, q.0[0]);
        let (j, fy) = self.locate(1, q.0[1]);
        let (k, fz) = self.locate(2, q.0[2]);
        let w = [[1.0 - fx, fx], [1.0 - fy, fy], [1.0 - fz, fz]];
        let dw = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]];
        let mut g = [0.0; 3];
        for di in 0..2 {
            for dj in 0..2 {
                for dk in 0..2 {
                    let s = self.sample(i + di, j + dj, k + dk);
                    g[0] += dw[0][di] * w[1][dj] * w[2][dk] * s;
                    g[1] += w[0][di] * dw[1][dj] * w[2][dk] * s;
                    g[2] += w[0][di] * w[1][dj] * dw[2][dk] * s;
                }
            }
        }
        Vec3([
            g[0] / self.spacing.0[0],
            g[1] / self.spacing.0[1],
            g[2] / self.spacing.0[2],
        ])
    }

    /// Catmull–Rom cubic-convolution weights for fractional coordinate t,
    /// over stencil offsets {-1, 0, 1, 2}; interpolates node values exactly
    /// and is C¹ across cell boundaries.
    fn cubic_weights(t: f64) -> [f64; 4] {
        let t2 = t * t;
        let t3 = t2 * t;
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ]
    }

    fn cubic_weights_d(t: f64) -> [f64; 4] {
        let t2 = t * t;
        [
            0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
            0.5 * (9.0 * t2 - 10.0 * t),
            0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
            0.5 * (3.0 * t2 - 2.0 * t),
        ]
    }

    /// Tricubic cell lookup: cell index (with one-node margin) and fraction.
    fn locate_cubic(&self, axis: usize, x: f64) -> (usize, f64) {
        let t = (x - self.origin.0[axis]) / self.spacing.0[axis];
        let max_cell = self.dims[axis] - 3; // need i-1 ≥ 0 and i+2 ≤ dims-1
        let i = (t.floor() as isize).clamp(1, max_cell as isize) as usize;
        (i, t - i as f64)
    }

    fn value_tricubic(&self, q: Vec3) -> f64 {
        let (i, fx) = self.locate_cubic(0, q.0[0]);
        let (j, fy) = self.locate_cubic(1, q.0[1]);
        let (k, fz) = self.locate_cubic(2, q.0[2]);
        let wx = Self::cubic_weights(fx);
        let wy = Self::cubic_weights(fy);
        let wz = Self::cubic_weights(fz);
        let mut acc = 0.0;
        for (a, &wxa) in wx.iter().enumerate() {
            for (b, &wyb) in wy.iter().enumerate() {
                for (c, &wzc) in wz.iter().enumerate() {
                    acc += wxa
                        * wyb
                        * wzc
                        * self.sample(i + a - 1, j + b - 1, k + c - 1);
                }
            }
        }
        acc
    }

    fn grad_tricubic(&self, q: Vec3) -> Vec3 {
        let (i, fx) = self.locate_cubic(0, q.0[0]);
        let (j, fy) = self.locate_cubic(1, q.0[1]);
        let (k, fz) = self.locate_cubic(2, q.0[2]);
        let wx = Self::cubic_weights(fx);
        let wy = Self::cubic_weights(fy);
        let wz = Self::cubic_weights(fz);
        let dx = Self::cubic_weights_d(fx);
        let dy = Self::cubic_weights_d(fy);
        let dz = Self::cubic_weights_d(fz);
        let mut g = [0.0; 3];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let s = self.sample(i + a - 1, j + b - 1, k + c - 1);
                    g[0] += dx[a] * wy[b] * wz[c] * s;
                    g[1] += wx[a] * dy[b] * wz[c] * s;
                    g[2] += wx[a] * wy[b] * dz[c] * s;
                }
            }
        }
        Vec3([
            g[0] / self.spacing.0[0],
            g[1] / self.spacing.0[1],
            g[2] / self.spacing.0[2],
        ])
    }

    fn value(&self, q: Vec3) -> f64 {
        match self.order {
            InterpolationOrder::Trilinear => self.value_trilinear(q),
            InterpolationOrder::Tricubic => self.value_tricubic(q),
        }
    }

    fn grad(&self, q: Vec3) -> Vec3 {
        match self.order {
            InterpolationOrder::Trilinear => self.grad_trilinear(q),
            InterpolationOrder::Tricubic => self.grad_tricubic(q),
        }
    }
}

/// The refractive-index families supported by the simulator.
#[derive(Debug, Clone)]
pub enum MediumKind {
    /// n ≡ n₀.
    Homogeneous { n0: f64 },
    /// n(q) = n₀ + g·q (valid where positive).
    Linear { n0: f64, g: Vec3 },
    /// Maxwell fish-eye: n(q) = n₀ / (1 + ‖q‖²/a²). Every ray is a circle.
    Fisheye { n0: f64, a: f64 },
    /// Parabolic graded-index profile about `axis`:
    /// n(q) = n₀·(1 − κ‖q⊥‖²/2), with q⊥ the component of q orthogonal to
    /// the (unit) axis.
    ParabolicGrin { n0: f64, kappa: f64, axis: Vec3 },
    /// Sampled grid with interpolation.
    Grid(GridField),
}

/// A refractive-index field with its bounding box and the speed of light.
///
/// Immutable after construction; shared read-only across threads.
#[derive(Debug, Clone)]
pub struct RefractiveIndexField {
    kind: MediumKind,
    domain: Domain,
    /// Speed of light in vacuum (m/s); tests use c = 1.
    pub c: f64,
}

/// Constructor-time positivity floor for n.
pub const N_MIN: f64 = 1e-6;

impl RefractiveIndexField {
    /// Build a field, validating n ≥ N_MIN on a dense sample of the domain
    /// (17³ points) and, for grids, that the requested domain fits inside
    /// the interpolable region.
    pub fn new(kind: MediumKind, domain: Domain, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(HeliosError::Config("speed of light must be positive".into()));
        }
        if let MediumKind::ParabolicGrin { axis, .. } = &kind {
            if (axis.norm() - 1.0).abs() > 1e-9 {
                return Err(HeliosError::Config(
                    "parabolic GRIN axis must be a unit vector".into(),
                ));
            }
        }
        if let MediumKind::Grid(grid) = &kind {
            let nat = grid.natural_domain();
            if !nat.contains(domain.min) || !nat.contains(domain.max) {
                return Err(HeliosError::Config(format!(
                    "grid domain {:?}..{:?} exceeds the interpolable region {:?}..{:?}",
                    domain.min, domain.max, nat.min, nat.max
                )));
            }
        }
        let field = RefractiveIndexField { kind, domain, c };
        let m = 17;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let f = |t: usize, lo: f64, hi: f64| {
                        lo + (hi - lo) * t as f64 / (m - 1) as f64
                    };
                    let q = Vec3([
                        f(i, domain.min.0[0], domain.max.0[0]),
                        f(j, domain.min.0[1], domain.max.0[1]),
                        f(k, domain.min.0[2], domain.max.0[2]),
                    ]);
                    let n = field.eval_unchecked(q);
                    if !(n >= N_MIN) {
                        return Err(HeliosError::NonPositiveIndex { q, n, min: N_MIN });
                    }
                }
            }
        }
        Ok(field)
    }

    pub fn kind(&self) -> &MediumKind {
        &self.kind
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval_unchecked(&self, q: Vec3) -> f64 {
        match &self.kind {
            MediumKind::Homogeneous { n0 } => *n0,
            MediumKind::Linear { n0, g } => n0 + g.dot(q),
            MediumKind::Fisheye { n0, a } => n0 / (1.0 + q.norm_sq() / (a * a)),
            MediumKind::ParabolicGrin { n0, kappa, axis } => {
                let q_par = *axis * q.dot(*axis);
                let q_perp = q - q_par;
                n0 * (1.0 - 0.5 * kappa * q_perp.norm_sq())
            }
            MediumKind::Grid(grid) => grid.value(q),
        }
    }

    /// n(q). Errors with `OutOfDomain` outside the bounding box.
    pub fn eval_n(&self, q: Vec3) -> Result<f64> {
        if !self.domain.contains(q) {
            return Err(HeliosError::OutOfDomain(q));
        }
        Ok(self.eval_unchecked(q))
    }

    /// ∇n(q): analytic for the closed-form families, differentiated
    /// interpolant for grids.
    pub fn grad_n(&self, q: Vec3) -> Result<Vec3> {
        if !self.domain.contains(q) {
            return Err(HeliosError::OutOfDomain(q));
        }
        Ok(match &self.kind {
            MediumKind::Homogeneous { .. } => Vec3::ZERO,
            MediumKind::Linear { g, .. } => *g,
            MediumKind::Fisheye { n0, a } => {
                let a2 = a * a;
                let denom = 1.0 + q.norm_sq() / a2;
                q * (-2.0 * n0 / (a2 * denom * denom))
            }
            MediumKind::ParabolicGrin { n0, kappa, axis } => {
                let q_perp = q - *axis * q.dot(*axis);
                q_perp * (-n0 * kappa)
            }
            MediumKind::Grid(grid) => grid.grad(q),
        })
    }

    /// Second derivatives of n: analytic where available, finite
    /// differences of the gradient for grid media (the implicit solver only
    /// needs this approximately).
    pub fn hessian_n(&self, q: Vec3) -> Result<Mat3> {
        if !self.domain.contains(q) {
            return Err(HeliosError::OutOfDomain(q));
        }
        Ok(match &self.kind {
            MediumKind::Homogeneous { .. } | MediumKind::Linear { .. } => Mat3::ZERO,
            MediumKind::Fisheye { n0, a } => {
                let a2 = a * a;
                let denom = 1.0 + q.norm_sq() / a2;
                // ∇n = -2 n0/a² · q/denom²  ⇒
                // Hess = -2 n0/a² · (I/denom² − 4 q⊗q /(a² denom³))
                let coef = -2.0 * n0 / a2;
                let ident = Mat3::identity().scale(coef / (denom * denom));
                let outer =
                    Mat3::outer(q, q).scale(coef * (-4.0) / (a2 * denom * denom * denom));
                ident.add(&outer)
            }
            MediumKind::ParabolicGrin { n0, kappa, axis } => {
                // ∇n = -n0 κ (q − (q·axis)axis) ⇒ Hess = -n0 κ (I − axis⊗axis)
                let proj = Mat3::identity().add(&Mat3::outer(*axis, *axis).scale(-1.0));
                proj.scale(-n0 * kappa)
            }
            MediumKind::Grid(_) => {
                let h = 1e-5
                    * (1.0
                        + q.max_abs().max(
                            self.domain.extent().max_abs() * 1e-3,
                        ));
                let mut m = Mat3::ZERO;
                for axis in 0..3 {
                    let mut qp = q;
                    let mut qm = q;
                    qp.0[axis] += h;
                    qm.0[axis] -= h;
                    // Clamp probes into the domain; one-sided fallback.
                    let gp = self.grad_n(qp).or_else(|_| self.grad_n(q))?;
                    let gm = self.grad_n(qm).or_else(|_| self.grad_n(q))?;
                    let col = (gp - gm) / (2.0 * h);
                    for r in 0..3 {
                        m.0[r][axis] = col.0[r];
                    }
                }
                // Symmetrize.
                for r in 0..3 {
                    for cidx in (r + 1)..3 {
                        let avg = 0.5 * (m.0[r][cidx] + m.0[cidx][r]);
                        m.0[r][cidx] = avg;
                        m.0[cidx][r] = avg;
                    }
                }
                m
            }
        })
    }

    /// Scale parameter ε = λ/d_n, where d_n = inf n/‖∇n‖ over a dense
    /// sample of interior points (32³ cell centers). d_n is a conservative
    /// length scale for the variation of n; homogeneous media return 0
    /// (d_n = ∞). Diagnostic only.
    pub fn estimate_scale_parameter(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(HeliosError::Config("wavelength must be positive".into()));
        }
        if matches!(self.kind, MediumKind::Homogeneous { .. }) {
            return Ok(0.0);
        }
        let m = 32;
        let mut d_n = f64::INFINITY;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let f = |t: usize, lo: f64, hi: f64| {
                        lo + (hi - lo) * (t as f64 + 0.5) / m as f64
                    };
                    let q = Vec3([
                        f(i, self.domain.min.0[0], self.domain.max.0[0]),
                        f(j, self.domain.min.0[1], self.domain.max.0[1]),
                        f(k, self.domain.min.0[2], self.domain.max.0[2]),
                    ]);
                    let g = self.grad_n(q)?.norm();
                    if g > 0.0 {
                        d_n = d_n.min(self.eval_unchecked(q) / g);
                    }
                }
            }
        }
        if d_n.is_infinite() {
            // Gradient vanished at every sample (e.g. grid of constants).
            return Ok(0.0);
        }
        Ok(lambda / d_n)
    }
}
