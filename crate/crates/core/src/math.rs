//! Small numerical kernels shared across the crate: 3-vectors, 3×3 and 6×6
//! dense matrices, Gauss–Legendre rules, and deterministic summation.
//!
//! The linear algebra here is deliberately tiny (the largest system solved
//! anywhere is 6×6, for the implicit-midpoint Newton step and the flow
//! Jacobian), so a hand-rolled partial-pivot LU keeps the crate free of a
//! general linear-algebra dependency.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// A 3-vector of f64, used for positions, momenta, and directions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }
    pub fn x(&self) -> f64 {
        self.0[0]
    }
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    pub fn z(&self) -> f64 {
        self.0[2]
    }
    pub fn dot(&self, o: Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
    pub fn cross(&self, o: Vec3) -> Vec3 {
        Vec3([
            self.0[1] * o.0[2] - self.0[2] * o.0[1],
            self.0[2] * o.0[0] - self.0[0] * o.0[2],
            self.0[0] * o.0[1] - self.0[1] * o.0[0],
        ])
    }
    pub fn norm_sq(&self) -> f64 {
        self.dot(*self)
    }
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
    /// Unit vector in the same direction; caller guarantees nonzero length.
    pub fn normalized(&self) -> Vec3 {
        *self / self.norm()
    }
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}
impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}
impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}
impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}
impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}
impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3([self.0[0] / s, self.0[1] / s, self.0[2] / s])
    }
}
impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

/// Row-major 3×3 matrix (used for the second-derivative blocks of n(q)).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn identity() -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            m.0[i][i] = 1.0;
        }
        m
    }
    /// a ⊗ b (outer product).
    pub fn outer(a: Vec3, b: Vec3) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a.0[i] * b.0[j];
            }
        }
        m
    }
    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row[0] * v.0[0] + row[1] * v.0[1] + row[2] * v.0[2];
        }
        Vec3(out)
    }
    pub fn scale(&self, s: f64) -> Mat3 {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        m
    }
    pub fn add(&self, o: &Mat3) -> Mat3 {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

/// Row-major 6×6 matrix for phase-space Jacobians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat6(pub [[f64; 6]; 6]);

impl Default for Mat6 {
    fn default() -> Self {
        Mat6([[0.0; 6]; 6])
    }
}

impl Mat6 {
    pub fn identity() -> Mat6 {
        let mut m = Mat6::default();
        for i in 0..6 {
            m.0[i][i] = 1.0;
        }
        m
    }

    /// Assemble from 3×3 blocks [[a, b], [c, d]].
    pub fn from_blocks(a: &Mat3, b: &Mat3, c: &Mat3, d: &Mat3) -> Mat6 {
        let mut m = Mat6::default();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a.0[i][j];
                m.0[i][j + 3] = b.0[i][j];
                m.0[i + 3][j] = c.0[i][j];
                m.0[i + 3][j + 3] = d.0[i][j];
            }
        }
        m
    }

    pub fn transpose(&self) -> Mat6 {
        let mut m = Mat6::default();
        for i in 0..6 {
            for j in 0..6 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn matmul(&self, o: &Mat6) -> Mat6 {
        let mut m = Mat6::default();
        for i in 0..6 {
            for k in 0..6 {
                let a = self.0[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..6 {
                    m.0[i][j] += a * o.0[k][j];
                }
            }
        }
        m
    }

    pub fn sub(&self, o: &Mat6) -> Mat6 {
        let mut m = *self;
        for i in 0..6 {
            for j in 0..6 {
                m.0[i][j] -= o.0[i][j];
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let mut a = self.0;
        let mut det = 1.0;
        for k in 0..6 {
            let piv = (k..6)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            if a[piv][k] == 0.0 {
                return 0.0;
            }
            if piv != k {
                a.swap(piv, k);
                det = -det;
            }
            det *= a[k][k];
            for i in (k + 1)..6 {
                let f = a[i][k] / a[k][k];
                for j in k..6 {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        det
    }

    /// Solve A·x = rhs in place via LU with partial pivoting.
    /// Returns None when a pivot vanishes (singular to machine precision).
    pub fn solve(&self, rhs: &[f64; 6]) -> Option<[f64; 6]> {
        let mut a = self.0;
        let mut b = *rhs;
        for k in 0..6 {
            let piv = (k..6)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            if a[piv][k].abs() < 1e-300 {
                return None;
            }
            if piv != k {
                a.swap(piv, k);
                b.swap(piv, k);
            }
            for i in (k + 1)..6 {
                let f = a[i][k] / a[k][k];
                if f == 0.0 {
                    continue;
                }
                for j in k..6 {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = [0.0; 6];
        for i in (0..6).rev() {
            let mut s = b[i];
            for j in (i + 1)..6 {
                s -= a[i][j] * x[j];
            }
            x[i] = s / a[i][i];
        }
        Some(x)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial (accurate to machine precision for the modest orders
/// used here).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = (n as f64) * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| half * w).collect(),
    )
}

///// Equal-area direction grid on the unit sphere: `n_polar` bands uniform
/// in z = cos θ crossed with `n_azimuth` uniform azimuth cells, evaluated
/// at cell centers. Every cell has solid angle 4π/(n_polar·n_azimuth), so
/// the weights sum to 4π exactly, and midpoint sampling in z integrates
/// any integrand linear in cos θ exactly — hemisphere cosine integrals
/// (∫(s̄·n⃗)⁺dΩ = π) come out exact on this grid.
pub fn equal_area_directions(n_polar: usize, n_azimuth: usize) -> Vec<(Vec3, f64)> {
    let w = 4.0 * std::f64::consts::PI / (n_polar * n_azimuth) as f64;
    let mut out = Vec::with_capacity(n_polar * n_azimuth);
    for i in 0..n_polar {
        let z = -1.0 + 2.0 * (i as f64 + 0.5) / n_polar as f64;
        let r = (1.0 - z * z).sqrt();
        for j in 0..n_azimuth {
            let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_azimuth as f64;
            out.push((Vec3::new(r * phi.cos(), r * phi.sin(), z), w));
        }
    }
    out
}

/// Pairwise (cascade) summation: deterministic for a fixed input order and
/// far better conditioned than sequential accumulation. Used for every
/// energy reduction so results do not depend on the degree of parallelism.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 32;
    if values.len() <= BASE {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
