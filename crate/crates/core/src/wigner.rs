//! Discrete Wigner transform of 1-D wave fields and the semiclassical
//! limit check: as ε → 0, wave propagation under the operator with symbol
//! c|p|/n(q) transports the Wigner distribution the same way the
//! Liouville equation transports a phase-space density.
//!
//! Conventions (fixed by the marginal identity):
//!   W(q_j, p_k) = Δq/(2πε) · Σ_m u(q_j + mΔq/2) conj(u(q_j − mΔq/2))
//!                 · e^{−2πi k m / N},
//! with half-integer shifts realized exactly on a doubled grid via
//! band-limited (zero-pad) interpolation, the m = −N/2 lag dropped so each
//! row transform is Hermitian, and the momentum grid p_k = (k − N/2)·Δp,
//! Δp = 2πε/L. With these choices Σ_k W Δp = |u(q_j)|² holds to roundoff —
//! the 1-D analogue of recovering the energy density by fiber integration.

use crate::error::HeliosError;
use crate::math::pairwise_sum;
use crate::Result;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// 1-D refractive-index profile for the scalar wave surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile1D {
    Homogeneous { n0: f64 },
    Linear { n0: f64, g: f64 },
}

impl Profile1D {
    pub fn n(&self, q: f64) -> f64 {
        match self {
            Profile1D::Homogeneous { n0 } => *n0,
            Profile1D::Linear { n0, g } => n0 + g * q,
        }
    }
}

/// A complex field sampled on a uniform periodic grid
/// q_j = −L/2 + j·Δq, j = 0..N−1, with N a power of two.
#[derive(Debug, Clone)]
pub struct SampledField1D {
    pub u: Vec<Complex64>,
    /// Semiclassical parameter (dimensionless).
    pub eps: f64,
    /// Physical length of the periodic domain.
    pub length: f64,
    pub profile: Profile1D,
}

impl SampledField1D {
    pub fn new(
        u: Vec<Complex64>,
        eps: f64,
        length: f64,
        profile: Profile1D,
    ) -> Result<SampledField1D> {
        let n = u.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(HeliosError::NonPowerOfTwo(n));
        }
        if !(eps > 0.0) || !(length > 0.0) {
            return Err(HeliosError::Config(
                "field needs eps > 0 and length > 0".into(),
            ));
        }
        if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(HeliosError::Config("field samples must be finite".into()));
        }
        let field = SampledField1D {
            u,
            eps,
            length,
            profile,
        };
        for &q in &field.q_grid() {
            let nq = profile.n(q);
            if !(nq > 0.0) {
                return Err(HeliosError::UnsupportedProfile(format!(
                    "refractive profile nonpositive at q = {q}: n = {nq}"
                )));
            }
        }
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn dq(&self) -> f64 {
        self.length / self.len() as f64
    }

    pub fn q_grid(&self) -> Vec<f64> {
        let dq = self.dq();
        (0..self.len())
            .map(|j| -0.5 * self.length + dq * j as f64)
            .collect()
    }

    /// L² norm squared: Σ|u|²Δq.
    pub fn norm_sq(&self) -> f64 {
        let v: Vec<f64> = self.u.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&v) * self.dq()
    }
}

/// Wigner distribution on the N×N (q, p) grid; row-major, rows = q.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub w: Vec<f64>,
    pub n: usize,
    pub dq: f64,
    /// Δp = 2πε/L; p_k = (k − N/2)·Δp.
    pub dp: f64,
    pub eps: f64,
    /// Largest |imaginary part| discarded when taking the real part,
    /// relative to max|W| — a roundoff diagnostic, ≤ 1e-12 by construction.
    pub max_imag_rel: f64,
    /// Set when more than 1e-6 of the spectral mass lies in the top 5% of
    /// |k| bins: the field is not resolved by the momentum grid and the
    /// transform aliases.
    pub alias_warning: bool,
}

impl WignerGrid {
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.w[j * self.n + k]
    }

    pub fn p_grid(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| (k as f64 - (self.n / 2) as f64) * self.dp)
            .collect()
    }

    /// Σ W Δq Δp (equals ‖u‖² by the marginal identity).
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.w) * self.dq * self.dp
    }

    /// Σ |W| Δq Δp.
    pub fn abs_mass(&self) -> f64 {
        let a: Vec<f64> = self.w.iter().map(|x| x.abs()).collect();
        pairwise_sum(&a) * self.dq * self.dp
    }
}

fn fft_forward(plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
    plan.process(data);
}

/// Band-limited interpolation onto the doubled grid: zero-pad the spectrum
/// to 2N, splitting the Nyquist coefficient half-and-half onto ±N/2 so
/// that even samples reproduce u exactly and the interpolant stays the
/// band-limited representative.
fn upsample_double(u: &[Complex64]) -> Vec<Complex64> {
    let n = u.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(2 * n);
    let mut spec = u.to_vec();
    fwd.process(&mut spec);
    let mut spec2 = vec![Complex64::new(0.0, 0.0); 2 * n];
    spec2[..n / 2].copy_from_slice(&spec[..n / 2]);
    // Negative frequencies k = N/2+1..N−1 → 2N−(N−k).
    for k in (n / 2 + 1)..n {
        spec2[n + k] = spec[k];
    }
    let nyq = spec[n / 2] * 0.5;
    spec2[n / 2] = nyq;
    spec2[2 * n - n / 2] = nyq;
    inv.process(&mut spec2);
    // Inverse is unnormalized (factor 2N); the doubled field wants 1/N.
    let scale = 1.0 / n as f64;
    for c in spec2.iter_mut() {
        *c *= scale;
    }
    spec2
}

/// Fraction of spectral mass in the top 5% of |k| bins.
fn high_band_fraction(u: &[Complex64]) -> f64 {
    let n = u.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let mut spec = u.to_vec();
    fwd.process(&mut spec);
    let power: Vec<f64> = spec.iter().map(|c| c.norm_sqr()).collect();
    let total = pairwise_sum(&power);
    if total == 0.0 {
        return 0.0;
    }
    let cutoff = ((n / 2) as f64 * 0.95) as usize;
    let mut high = 0.0;
    for (k, pw) in power.iter().enumerate() {
        let freq = if k <= n / 2 { k } else { n - k };
        if freq >= cutoff {
            high += pw;
        }
    }
    high / total
}

/// Discrete Wigner transform (see module docs for the convention).
pub fn discrete_wigner(field: &SampledField1D) -> Result<WignerGrid> {
    let n = field.len();
    let dq = field.dq();
    let dp = 2.0 * std::f64::consts::PI * field.eps / field.length;
    let v = upsample_double(&field.u);
    let alias_warning = high_band_fraction(&field.u) > 1e-6;

    let mut planner = FftPlanner::new();
    let row_fft: Arc<dyn Fft<f64>> = planner.plan_fft_forward(n);
    let scale = dq / (2.0 * std::f64::consts::PI * field.eps);
    let half = n / 2;
    let two_n = 2 * n;

    let rows: Vec<(Vec<f64>, f64)> = compute_rows(n, |j| {
        // Lag autocorrelation A_m = v[2j+m]·conj(v[2j−m]), stored in FFT
        // order (index i holds lag m ≡ i mod N), with the unpaired
        // m = −N/2 lag dropped so the row transform is Hermitian.
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        for (i, slot) in row.iter_mut().enumerate() {
            let m = if i < half { i as isize } else { i as isize - n as isize };
            if m == -(half as isize) {
                continue;
            }
            let a = (2 * j as isize + m).rem_euclid(two_n as isize) as usize;
            let b = (2 * j as isize - m).rem_euclid(two_n as isize) as usize;
            *slot = v[a] * v[b].conj();
        }
        fft_forward(&row_fft, &mut row);
        // fftshift: column k ↔ p = (k − N/2)Δp.
        let mut out = vec![0.0; n];
        let mut max_im = 0.0_f64;
        for (k, o) in out.iter_mut().enumerate() {
            let src = (k + half) % n;
            *o = row[src].re * scale;
            max_im = max_im.max(row[src].im.abs() * scale);
        }
        (out, max_im)
    });

    let mut w = Vec::with_capacity(n * n);
    let mut max_im = 0.0_f64;
    for (row, im) in rows {
        w.extend_from_slice(&row);
        max_im = max_im.max(im);
    }
    let max_w = w.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    Ok(WignerGrid {
        w,
        n,
        dq,
        dp,
        eps: field.eps,
        max_imag_rel: if max_w > 0.0 { max_im / max_w } else { 0.0 },
        alias_warning,
    })
}

#[cfg(feature = "parallel")]
fn compute_rows<R: Send>(n: usize, f: impl Fn(usize) -> R + Send + Sync) -> Vec<R> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn compute_rows<R>(n: usize, f: impl Fn(usize) -> R) -> Vec<R> {
    (0..n).map(f).collect()
}

/// Position marginal Σ_k W(q_j, p_k)·Δp. Equals |u(q_j)|² to roundoff.
pub fn marginal_position(grid: &WignerGrid) -> Vec<f64> {
    (0..grid.n)
        .map(|j| pairwise_sum(&grid.w[j * grid.n..(j + 1) * grid.n]) * grid.dp)
        .collect()
}

/// Build a WKB-form field u = a(q)·e^{iS(q)/ε} on an N-point grid.
///
/// Errors with ResolutionError when the local wavenumber S′(q) (estimated
/// by centered differences of S) exceeds 90% of the grid's momentum
/// range πε/Δq.
pub fn wkb_field(
    amplitude: impl Fn(f64) -> f64,
    phase: impl Fn(f64) -> f64,
    eps: f64,
    n: usize,
    length: f64,
    profile: Profile1D,
) -> Result<SampledField1D> {
    if n < 2 || !n.is_power_of_two() {
        return Err(HeliosError::NonPowerOfTwo(n));
    }
    let dq = length / n as f64;
    let p_grid_max = std::f64::consts::PI * eps / dq;
    let mut max_sp = 0.0_f64;
    let mut u = Vec::with_capacity(n);
    for j in 0..n {
        let q = -0.5 * length + dq * j as f64;
        let sp = (phase(q + 0.5 * dq) - phase(q - 0.5 * dq)) / dq;
        max_sp = max_sp.max(sp.abs());
        let s = phase(q) / eps;
        u.push(Complex64::from_polar(amplitude(q), 0.0) * Complex64::new(s.cos(), s.sin()));
    }
    if max_sp > 0.9 * p_grid_max {
        return Err(HeliosError::ResolutionError(format!(
            "max |S'(q)| = {max_sp:.3e} exceeds 90% of the momentum grid range {p_grid_max:.3e}; \
             refine the grid or increase eps"
        )));
    }
    SampledField1D::new(u, eps, length, profile)
}

/// Gaussian WKB packet a = exp(−(q−q₀)²/2σ²), S = k₀·(q−q₀), optionally
/// normalized to unit L² norm.
pub fn gaussian_packet(
    n: usize,
    length: f64,
    eps: f64,
    profile: Profile1D,
    q_center: f64,
    sigma: f64,
    k0: f64,
    normalize: bool,
) -> Result<SampledField1D> {
    let mut field = wkb_field(
        move |q| (-(q - q_center) * (q - q_center) / (2.0 * sigma * sigma)).exp(),
        move |q| k0 * (q - q_center),
        eps,
        n,
        length,
        profile,
    )?;
    if normalize {
        let norm = field.norm_sq().sqrt();
        for c in field.u.iter_mut() {
            *c /= norm;
        }
    }
    Ok(field)
}

/// Evolve iε∂_t u = Op^ε(c|p|/n(q))·u over time T.
///
/// Homogeneous profile: the multiplier e^{−i c|k| T/n₀} on Fourier modes
/// k = 2πj/L is exact (the ε in the symbol and in iε∂_t cancel).
/// Linear profile: Strang splitting with dt ≤ ε/2, factoring the symbol
/// around the running spectral centroid ⟨|p|⟩ and the running mean slowness
/// ⟨1/n⟩ so both split factors are diagonal (in x and k respectively).
pub fn propagate_semiclassical(
    field: &SampledField1D,
    t_end: f64,
    c: f64,
) -> Result<SampledField1D> {
    if t_end < 0.0 {
        return Err(HeliosError::Config("propagation time must be ≥ 0".into()));
    }
    let n = field.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    // Fourier mode wavenumbers in FFT order: 2π/L · (0, 1, …, −N/2, …, −1).
    let kmode: Vec<f64> = (0..n)
        .map(|i| {
            let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            2.0 * std::f64::consts::PI * k / field.length
        })
        .collect();
    let mut u = field.u.clone();
    match field.profile {
        Profile1D::Homogeneous { n0 } => {
            fwd.process(&mut u);
            for (c_i, &k) in u.iter_mut().zip(kmode.iter()) {
                let phase = -c * k.abs() * t_end / n0;
                *c_i *= Complex64::new(phase.cos(), phase.sin()) / n as f64;
            }
            inv.process(&mut u);
        }
        Profile1D::Linear { .. } => {
            if t_end > 0.0 {
                let q = field.q_grid();
                let slowness: Vec<f64> = q.iter().map(|&x| 1.0 / field.profile.n(x)).collect();
                let dt_nominal = field.eps / 2.0;
                let n_steps = (t_end / dt_nominal).ceil().max(1.0) as usize;
                let dt = t_end / n_steps as f64;
                let mut spec = vec![Complex64::new(0.0, 0.0); n];
                for _ in 0..n_steps {
                    // Weights for the running means.
                    let w2: Vec<f64> = u.iter().map(|c| c.norm_sqr()).collect();
                    let w2_tot = pairwise_sum(&w2);
                    spec.copy_from_slice(&u);
                    fwd.process(&mut spec);
                    let ps: Vec<f64> = spec.iter().map(|c| c.norm_sqr()).collect();
                    let ps_tot = pairwise_sum(&ps);
                    // Spectral centroid of |p| in physical units (p = ε·k).
                    let kc_terms: Vec<f64> = kmode
                        .iter()
                        .zip(ps.iter())
                        .map(|(&k, &m)| k.abs() * m)
                        .collect();
                    let kc = pairwise_sum(&kc_terms) / ps_tot * field.eps;
                    let mbar_terms: Vec<f64> = slowness
                        .iter()
                        .zip(w2.iter())
                        .map(|(&s, &m)| s * m)
                        .collect();
                    let mbar = pairwise_sum(&mbar_terms) / w2_tot;
                    // Half-step position factor, full-step momentum factor,
                    // half-step position factor.
                    let screen: Vec<Complex64> = slowness
                        .iter()
                        .map(|&s| {
                            let phase = -(dt / 2.0) * c * kc * (s - mbar) / field.eps;
                            Complex64::new(phase.cos(), phase.sin())
                        })
                        .collect();
                    for (c_i, s) in u.iter_mut().zip(screen.iter()) {
                        *c_i *= s;
                    }
                    fwd.process(&mut u);
                    for (c_i, &k) in u.iter_mut().zip(kmode.iter()) {
                        let phase = -dt * c * k.abs() * mbar;
                        *c_i *= Complex64::new(phase.cos(), phase.sin()) / n as f64;
                    }
                    inv.process(&mut u);
                    for (c_i, s) in u.iter_mut().zip(screen.iter()) {
                        *c_i *= s;
                    }
                }
            }
        }
    }
    SampledField1D::new(u, field.eps, field.length, field.profile)
}

/// Advect a Wigner grid by the 1-D Liouville flow of H = c|p|/n(q) over
/// time T, by evaluating the initial grid at the backward characteristics
/// (bilinear interpolation; periodic in q, vacuum 0 outside the p-range).
pub fn liouville_advect(w0: &WignerGrid, profile: &Profile1D, c: f64, t_end: f64) -> WignerGrid {
    let n = w0.n;
    let dq = w0.dq;
    let dp = w0.dp;
    let length = n as f64 * dq;
    let q0 = -0.5 * length;
    let p = w0.p_grid();
    let mut w = vec![0.0; n * n];
    match profile {
        Profile1D::Homogeneous { n0 } => {
            // q ← q − sign(p)·cT/n₀ backward; periodic linear interp per row.
            let shift = c * t_end / (n0 * dq); // in grid cells
            for j in 0..n {
                for (k, &pk) in p.iter().enumerate() {
                    let val = if pk == 0.0 {
                        w0.at(j, k)
                    } else {
                        let s = if pk > 0.0 { 1.0 } else { -1.0 };
                        let x = j as f64 - s * shift;
                        let j0 = x.floor();
                        let f = x - j0;
                        let ja = (j0 as isize).rem_euclid(n as isize) as usize;
                        let jb = (j0 as isize + 1).rem_euclid(n as isize) as usize;
                        (1.0 - f) * w0.at(ja, k) + f * w0.at(jb, k)
                    };
                    w[j * n + k] = val;
                }
            }
        }
        Profile1D::Linear { n0, g } => {
            // Backward characteristics in closed form: along a ray with
            // sign s = sign(p), position satisfies n₀Q + gQ²/2 = n₀q + gq²/2
            // − s·cT, and ‖p‖ rescales by n(Q)/n(q) (H conservation).
            for j in 0..n {
                let qj = q0 + dq * j as f64;
                let area = n0 * qj + 0.5 * g * qj * qj;
                for (k, &pk) in p.iter().enumerate() {
                    if pk == 0.0 {
                        w[j * n + k] = w0.at(j, k);
                        continue;
                    }
                    let s = if pk > 0.0 { 1.0 } else { -1.0 };
                    let rhs = area - s * c * t_end;
                    let disc = n0 * n0 + 2.0 * g * rhs;
                    if disc < 0.0 {
                        continue; // characteristic left the profile's range
                    }
                    let qsrc = (-n0 + disc.sqrt()) / g;
                    let psrc = pk * (n0 + g * qsrc) / (n0 + g * qj);
                    // Bilinear pullback; q periodic, p clipped to vacuum.
                    let xi = (qsrc - q0) / dq;
                    let j0f = xi.floor();
                    let fj = xi - j0f;
                    let ja = (j0f as isize).rem_euclid(n as isize) as usize;
                    let jb = (j0f as isize + 1).rem_euclid(n as isize) as usize;
                    let yi = (psrc - p[0]) / dp;
                    let k0f = yi.floor();
                    if !(0.0..=(n as f64 - 2.0)).contains(&k0f) {
                        continue;
                    }
                    let ka = k0f as usize;
                    let fk = yi - k0f;
                    w[j * n + k] = (1.0 - fj) * (1.0 - fk) * w0.at(ja, ka)
                        + fj * (1.0 - fk) * w0.at(jb, ka)
                        + (1.0 - fj) * fk * w0.at(ja, ka + 1)
                        + fj * fk * w0.at(jb, ka + 1);
                }
            }
        }
    }
    WignerGrid {
        w,
        n,
        dq,
        dp,
        eps: w0.eps,
        max_imag_rel: 0.0,
        alias_warning: w0.alias_warning,
    }
}

/// One rung of a semiclassical convergence ladder.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRung {
    pub eps: f64,
    pub t: f64,
    /// Σ|W_wave(T) − W_liouville(T)| / Σ|W(0)| — mass-normalized L¹
    /// distance between wave-propagated and Liouville-advected grids.
    pub l1_distance: f64,
    /// Mass of the propagated Wigner grid (should stay ≈ ‖u‖²).
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rungs: Vec<ConvergenceRung>,
}

impl ConvergenceReport {
    /// True when distances strictly decrease along the ladder.
    pub fn monotone(&self) -> bool {
        self.rungs.windows(2).all(|r| r[1].l1_distance < r[0].l1_distance)
    }

    /// Smallest adjacent-rung improvement factor.
    pub fn min_ratio(&self) -> f64 {
        self.rungs
            .windows(2)
            .map(|r| r[0].l1_distance / r[1].l1_distance)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Run the wave-vs-Liouville comparison across an ε-ladder. The factory
/// builds the initial field for each ε (packet widths must scale with ε to
/// stay in the semiclassical regime, so one fixed field cannot serve every
/// rung).
pub fn compare_liouville(
    factory: impl Fn(f64) -> Result<SampledField1D>,
    t_end: f64,
    eps_ladder: &[f64],
    c: f64,
) -> Result<ConvergenceReport> {
    let mut rungs = Vec::with_capacity(eps_ladder.len());
    for &eps in eps_ladder {
        let f0 = factory(eps)?;
        if (f0.eps - eps).abs() > 1e-15 * eps.abs() {
            return Err(HeliosError::Config(format!(
                "factory returned a field with eps = {} for requested {}",
                f0.eps, eps
            )));
        }
        let w0 = discrete_wigner(&f0)?;
        let ft = propagate_semiclassical(&f0, t_end, c)?;
        let wt = discrete_wigner(&ft)?;
        let wl = liouville_advect(&w0, &f0.profile, c, t_end);
        // Row-chunked sums: the grids are N² floats, so avoid N²-sized
        // temporaries.
        let n = w0.n;
        let mut diff_rows = Vec::with_capacity(n);
        let mut ref_rows = Vec::with_capacity(n);
        for j in 0..n {
            let (lo, hi) = (j * n, (j + 1) * n);
            let d: Vec<f64> = wt.w[lo..hi]
                .iter()
                .zip(wl.w[lo..hi].iter())
                .map(|(a, b)| (a - b).abs())
                .collect();
            diff_rows.push(pairwise_sum(&d));
            let r: Vec<f64> = w0.w[lo..hi].iter().map(|x| x.abs()).collect();
            ref_rows.push(pairwise_sum(&r));
        }
        let l1 = pairwise_sum(&diff_rows) / pairwise_sum(&ref_rows);
        rungs.push(ConvergenceRung {
            eps,
            t: t_end,
            l1_distance: l1,
            mass: wt.mass(),
        });
    }
    Ok(ConvergenceReport { rungs })
}
