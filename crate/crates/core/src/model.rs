//! Physical parameters, supercell geometry, the plane-wave grid and periodic
//! fields, together with the spectral primitives the solvers share.
//!
//! Grid point `(ix, iy, iz)` sits at `h·(ix, iy, iz)` with `h = N·L/n`; the
//! computational box is `[0, N·L)³` and the layout is x-fastest. A nucleus at
//! fractional position `(0, 0, 0)` therefore coincides with the grid origin.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c_tf: f64,
    pub c_dirac: f64,
    pub c_w: f64,
    pub lambda: f64,
    pub q: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            c_tf: 1.0,
            c_dirac: 0.0,
            c_w: 1.0,
            lambda: 1.0,
            q: 1,
        }
    }
}

impl ModelParams {
    pub fn new(c_tf: f64, c_dirac: f64, c_w: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            c_tf,
            c_dirac,
            c_w,
            lambda,
            q: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_tf > 0.0 && self.c_tf.is_finite()) {
            return Err(Error::Domain(format!(
                "c_tf must be positive, got {}",
                self.c_tf
            )));
        }
        if !(self.c_dirac >= 0.0 && self.c_dirac.is_finite()) {
            return Err(Error::Domain(format!(
                "c must be nonnegative, got {}",
                self.c_dirac
            )));
        }
        if !(self.c_w > 0.0 && self.c_w.is_finite()) {
            return Err(Error::Domain(format!(
                "c_w must be positive, got {}",
                self.c_w
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.q < 1 {
            return Err(Error::Domain("q must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_dirac(mut self, c: f64) -> Self {
        self.c_dirac = c;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    /// Fractional coordinates inside the unit cell, in `[0, 1)³`.
    pub position: [f64; 3],
    pub charge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub edge: f64,
    pub multiplier: usize,
    pub nuclei: Vec<Nucleus>,
}

impl Default for CellSpec {
    fn default() -> Self {
        Self {
            edge: 1.0,
            multiplier: 1,
            nuclei: vec![Nucleus {
                position: [0.0; 3],
                charge: 1.0,
            }],
        }
    }
}

impl CellSpec {
    pub fn new(edge: f64, multiplier: usize, nuclei: Vec<Nucleus>) -> Result<Self> {
        let cell = Self {
            edge,
            multiplier,
            nuclei,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.edge > 0.0 && self.edge.is_finite()) {
            return Err(Error::Domain(format!(
                "cell edge must be positive, got {}",
                self.edge
            )));
        }
        if self.multiplier < 1 {
            return Err(Error::Domain(
                "supercell multiplier must be at least 1".into(),
            ));
        }
        for (i, a) in self.nuclei.iter().enumerate() {
            if !(a.charge > 0.0 && a.charge.is_finite()) {
                return Err(Error::Domain(format!(
                    "nucleus {i} has non-positive charge"
                )));
            }
            if a.position.iter().any(|&f| !(0.0..1.0).contains(&f)) {
                return Err(Error::Domain(format!(
                    "nucleus {i} position {:?} is outside [0,1)^3",
                    a.position
                )));
            }
            for b in &self.nuclei[..i] {
                let d: f64 = (0..3)
                    .map(|k| {
                        let t = (a.position[k] - b.position[k]).abs();
                        t.min(1.0 - t).powi(2)
                    })
                    .sum();
                if d < 1e-24 {
                    return Err(Error::Domain(format!(
                        "nucleus {i} duplicates another position"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn with_multiplier(&self, multiplier: usize) -> Self {
        Self {
            multiplier,
            ..self.clone()
        }
    }

    /// Side length `N·L` of the computational box.
    pub fn side(&self) -> f64 {
        self.edge * self.multiplier as f64
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(3)
    }

    /// Total nuclear charge inside one unit cell.
    pub fn unit_charge(&self) -> f64 {
        self.nuclei.iter().map(|a| a.charge).sum()
    }

    /// All nuclei of the supercell in Cartesian coordinates, unit-cell copies
    /// enumerated x-fastest.
    pub fn supercell_nuclei(&self) -> Vec<([f64; 3], f64)> {
        let n = self.multiplier;
        let mut out = Vec::with_capacity(n * n * n * self.nuclei.len());
        for cz in 0..n {
            for cy in 0..n {
                for cx in 0..n {
                    let shift = [cx as f64, cy as f64, cz as f64];
                    for a in &self.nuclei {
                        let pos = [
                            (shift[0] + a.position[0]) * self.edge,
                            (shift[1] + a.position[1]) * self.edge,
                            (shift[2] + a.position[2]) * self.edge,
                        ];
                        out.push((pos, a.charge));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug)]
struct GridInner {
    n: usize,
    cell: CellSpec,
    /// Wavenumber per 1D index, centered Nyquist convention.
    k1d: Vec<f64>,
    k2: Vec<f64>,
    fft: Fft3,
}

/// Uniform cubic collocation grid over the supercell with its plane-wave basis.
#[derive(Clone, Debug)]
pub struct SpectralGrid {
    inner: Arc<GridInner>,
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.cell == other.inner.cell)
    }
}

impl SpectralGrid {
    pub fn new(n: usize, cell: CellSpec) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "grid size must be even and >= 8, got {n}"
            )));
        }
        cell.validate()?;
        let side = cell.side();
        let k1d: Vec<f64> = (0..n)
            .map(|j| 2.0 * PI * index_to_mode(j, n) as f64 / side)
            .collect();
        let mut k2 = Vec::with_capacity(n * n * n);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    k2.push(k1d[x] * k1d[x] + k1d[y] * k1d[y] + k1d[z] * k1d[z]);
                }
            }
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                cell,
                k1d,
                k2,
                fft: Fft3::new(n),
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn len(&self) -> usize {
        self.inner.n.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell(&self) -> &CellSpec {
        &self.inner.cell
    }

    pub fn side(&self) -> f64 {
        self.inner.cell.side()
    }

    pub fn spacing(&self) -> f64 {
        self.side() / self.inner.n as f64
    }

    pub fn dv(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.inner.cell.volume()
    }

    /// `|k|²` for every Fourier index, same layout as the real-space samples.
    pub fn k2(&self) -> &[f64] {
        &self.inner.k2
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        self.inner.k1d[j]
    }

    pub fn mode(&self, j: usize) -> i64 {
        index_to_mode(j, self.inner.n)
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        let n = self.inner.n;
        ix + n * (iy + n * iz)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.inner.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let [x, y, z] = self.coords(idx);
        [x as f64 * h, y as f64 * h, z as f64 * h]
    }

    /// Same resolution per unit cell on the `multiplier`-fold supercell.
    pub fn supercell(&self, multiplier: usize) -> Result<Self> {
        let per_cell = self.inner.n / self.inner.cell.multiplier;
        Self::new(
            per_cell * multiplier,
            self.inner.cell.with_multiplier(multiplier),
        )
    }

    pub(crate) fn fft(&self) -> &Fft3 {
        &self.inner.fft
    }

    /// Fourier coefficients `f̂` with `f(x) = Σ f̂(k) e^{ik·x}`.
    pub fn coefficients(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft().forward(&mut buf);
        let scale = 1.0 / self.len() as f64;
        for v in &mut buf {
            *v *= scale;
        }
        buf
    }

    /// Transforms two real fields with one complex FFT and splits the result.
    pub(crate) fn coefficients_pair(
        &self,
        a: &[f64],
        b: &[f64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let len = self.len();
        let mut buf: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.fft().forward(&mut buf);
        let scale = 0.5 / len as f64;
        let mut fa = vec![Complex64::default(); len];
        let mut fb = vec![Complex64::default(); len];
        for idx in 0..len {
            let z = buf[idx];
            let zc = buf[self.negated(idx)].conj();
            fa[idx] = (z + zc) * scale;
            // (z - conj(z_-k)) / 2i
            let d = (z - zc) * scale;
            fb[idx] = Complex64::new(d.im, -d.re);
        }
        (fa, fb)
    }

    /// Synthesizes two real fields from Hermitian coefficient arrays.
    pub(crate) fn synthesize_pair(
        &self,
        fa: &[Complex64],
        fb: &[Complex64],
    ) -> (Vec<f64>, Vec<f64>) {
        let len = self.len() as f64;
        let mut buf: Vec<Complex64> = fa
            .iter()
            .zip(fb)
            .map(|(&x, &y)| (x + Complex64::new(-y.im, y.re)) * len)
            .collect();
        self.fft().inverse(&mut buf);
        (
            buf.iter().map(|z| z.re).collect(),
            buf.iter().map(|z| z.im).collect(),
        )
    }

    /// Real part of the field synthesized from `coeffs`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let len = self.len() as f64;
        let mut buf: Vec<Complex64> = coeffs.iter().map(|&c| c * len).collect();
        self.fft().inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Flat index of the wavevector `-k`.
    pub fn negated(&self, idx: usize) -> usize {
        let n = self.inner.n;
        let [x, y, z] = self.coords(idx);
        let neg = |j: usize| if j == 0 { 0 } else { n - j };
        self.index(neg(x), neg(y), neg(z))
    }
}

fn index_to_mode(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Real periodic sample of a density amplitude on a [`SpectralGrid`].
#[derive(Clone, Debug)]
pub struct RealField {
    grid: SpectralGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: SpectralGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &SpectralGrid, value: f64) -> Self {
        Self {
            values: vec![value; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &SpectralGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `∫ w²`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dv()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dv()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.dv()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn l2_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .mul_add(self.grid.dv(), 0.0)
            .sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rescales to the requested mass. Returns `None` for a zero field.
    pub fn normalized_to(&self, mass: f64) -> Option<Self> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return None;
        }
        Some(self.scaled((mass / m).sqrt()))
    }

    /// Periodic shift by whole grid steps: `out(x) = self(x - shift·h)`.
    pub fn rolled(&self, shift: [i64; 3]) -> Self {
        let n = self.grid.n() as i64;
        let mut out = vec![0.0; self.values.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let c = self.grid.coords(idx);
            let src = |k: usize| ((c[k] as i64 - shift[k]).rem_euclid(n)) as usize;
            *slot = self.values[self.grid.index(src(0), src(1), src(2))];
        }
        Self {
            grid: self.grid.clone(),
            values: out,
        }
    }

    /// Tiles a unit-cell field over a supercell of the same spacing.
    pub fn periodic_extension(&self, target: &SpectralGrid) -> Result<Self> {
        let n = self.grid.n();
        if !target.n().is_multiple_of(n)
            || (target.spacing() - self.grid.spacing()).abs() > 1e-12 * target.spacing()
        {
            return Err(Error::GridMismatch);
        }
        let values = (0..target.len())
            .map(|idx| {
                let [x, y, z] = target.coords(idx);
                self.values[self.grid.index(x % n, y % n, z % n)]
            })
            .collect();
        Ok(Self {
            grid: target.clone(),
            values,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub tf: f64,
    pub dirac: f64,
    pub hartree: f64,
    pub external: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn from_parts(kinetic: f64, tf: f64, dirac: f64, hartree: f64, external: f64) -> Self {
        Self {
            kinetic,
            tf,
            dirac,
            hartree,
            external,
            total: kinetic + tf + dirac + hartree + external,
        }
    }
}

/// `-Δw` through the Fourier multiplier `|k|²`.
pub fn laplacian_apply(w: &RealField) -> RealField {
    let grid = w.grid();
    let mut coeffs = grid.coefficients(w.values());
    for (c, &k2) in coeffs.iter_mut().zip(grid.k2()) {
        *c *= k2;
    }
    RealField {
        grid: grid.clone(),
        values: grid.synthesize(&coeffs),
    }
}

/// `∫|∇w|²` evaluated on the Fourier side.
pub fn gradient_norm_sq(w: &RealField) -> f64 {
    let grid = w.grid();
    let coeffs = grid.coefficients(w.values());
    grid.volume()
        * coeffs
            .iter()
            .zip(grid.k2())
            .map(|(c, k2)| k2 * c.norm_sqr())
            .sum::<f64>()
}

/// Grid quadrature of `(∫|w|^p)^{1/p}`.
pub fn lp_norm(w: &RealField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("L^p norm needs p >= 1, got {p}")));
    }
    let dv = w.grid().dv();
    let sum: f64 = w.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((sum * dv).powf(1.0 / p))
}

/// Dirac's exchange constant `(6/(qπ))^{1/3}` for `q` spin states.
pub fn dirac_reference_constant(q: u32) -> Result<f64> {
    if q < 1 {
        return Err(Error::Domain("number of spin states must be >= 1".into()));
    }
    Ok((6.0 / (q as f64 * PI)).cbrt())
}
