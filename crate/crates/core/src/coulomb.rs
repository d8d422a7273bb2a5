//! Periodic Coulomb kernel with neutralizing background, built spectrally.
//!
//! `G(x) = (1/|V|) Σ_{k≠0} 4π/|k|² e^{ik·x} + const`. The constant follows
//! the min-zero convention of the unit cell: for the unit cell it is the
//! shift that makes the grid minimum of `G` vanish. On an `N`-fold
//! supercell the energies use `shift_unit / N³` for the `k = 0` channel,
//! which keeps the Hartree and external energies of a periodically extended
//! state exactly `N³` times the unit-cell values. `gk_field` always holds the
//! min-zero samples of the grid's own kernel.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CellSpec, RealField, SpectralGrid};

#[derive(Clone, Debug)]
pub struct CoulombKernel {
    grid: SpectralGrid,
    multiplier: Vec<f64>,
    shift: f64,
    zero_mode: f64,
    gk_field: RealField,
}

/// `4π/|k|²` per Fourier index with the `k = 0` entry zeroed.
pub fn coulomb_multiplier(grid: &SpectralGrid) -> Vec<f64> {
    grid.k2()
        .iter()
        .map(|&k2| if k2 == 0.0 { 0.0 } else { 4.0 * PI / k2 })
        .collect()
}

/// Samples of the mean-zero truncated series restricted to modes whose
/// integer indices are all divisible by `stride`.
fn mean_zero_series(grid: &SpectralGrid, multiplier: &[f64], stride: i64) -> Vec<f64> {
    let volume = grid.volume();
    let coeffs: Vec<Complex64> = multiplier
        .iter()
        .enumerate()
        .map(|(idx, &m)| {
            let [x, y, z] = grid.coords(idx);
            let keep = [x, y, z].iter().all(|&j| grid.mode(j) % stride == 0);
            if keep {
                Complex64::new(m / volume, 0.0)
            } else {
                Complex64::default()
            }
        })
        .collect();
    grid.synthesize(&coeffs)
}

pub fn build_gk(grid: &SpectralGrid) -> CoulombKernel {
    let multiplier = coulomb_multiplier(grid);
    let own = mean_zero_series(grid, &multiplier, 1);
    let shift = -own.iter().copied().fold(f64::INFINITY, f64::min);
    let n_mult = grid.cell().multiplier;
    let unit_shift = if n_mult == 1 {
        shift
    } else {
        // the unit-cell kernel lives on the sub-lattice of reciprocal vectors;
        // the series above is normalized by the supercell volume
        let unit = mean_zero_series(grid, &multiplier, n_mult as i64);
        -unit.iter().copied().fold(f64::INFINITY, f64::min) * n_mult.pow(3) as f64
    };
    let zero_mode = unit_shift / (n_mult.pow(3) as f64);
    let gk_field = RealField::new(grid.clone(), own.iter().map(|g| g + shift).collect())
        .expect("kernel samples match the grid");
    CoulombKernel {
        grid: grid.clone(),
        multiplier,
        shift,
        zero_mode,
        gk_field,
    }
}

impl CoulombKernel {
    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    /// Shift making the grid minimum of this grid's kernel zero.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Constant `k = 0` weight used in energies (`∫G = zero_mode·|V|`).
    pub fn zero_mode(&self) -> f64 {
        self.zero_mode
    }

    pub fn gk_field(&self) -> &RealField {
        &self.gk_field
    }

    fn check(&self, f: &RealField) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `Σ_i z_i G(x - R_i)` for arbitrary Cartesian positions.
    pub fn potential_of_charges(&self, charges: &[([f64; 3], f64)]) -> RealField {
        let grid = &self.grid;
        let volume = grid.volume();
        let n = grid.n();
        let coeffs: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let m = self.multiplier[idx];
                if m == 0.0 {
                    return Complex64::default();
                }
                let [x, y, z] = grid.coords(idx);
                let k = [grid.wavenumber(x), grid.wavenumber(y), grid.wavenumber(z)];
                let structure: Complex64 = charges
                    .iter()
                    .map(|(r, q)| {
                        let phase = -(k[0] * r[0] + k[1] * r[1] + k[2] * r[2]);
                        Complex64::from_polar(*q, phase)
                    })
                    .sum();
                structure * (m / volume)
            })
            .collect();
        debug_assert_eq!(coeffs.len(), n * n * n);
        let total: f64 = charges.iter().map(|c| c.1).sum();
        let values = grid
            .synthesize(&coeffs)
            .into_iter()
            .map(|v| v + self.zero_mode * total)
            .collect();
        RealField::new(grid.clone(), values).expect("grid sized")
    }

    /// `(G⋆f)(x)` including the constant channel.
    pub fn convolve(&self, f: &RealField) -> Result<RealField> {
        self.check(f)?;
        let mut coeffs = self.grid.coefficients(f.values());
        for (c, m) in coeffs.iter_mut().zip(&self.multiplier) {
            *c *= *m;
        }
        let constant = self.zero_mode * f.integral();
        let values = self
            .grid
            .synthesize(&coeffs)
            .into_iter()
            .map(|v| v + constant)
            .collect();
        RealField::new(self.grid.clone(), values)
    }

    /// Hartree pairing from Fourier coefficients and the two integrals.
    pub(crate) fn pair_from_coefficients(
        &self,
        fc: &[Complex64],
        gc: &[Complex64],
        int_f: f64,
        int_g: f64,
    ) -> f64 {
        let sum: f64 = fc
            .iter()
            .zip(gc)
            .zip(&self.multiplier)
            .map(|((a, b), m)| m * (a * b.conj()).re)
            .sum();
        self.grid.volume() * sum + self.zero_mode * int_f * int_g
    }
}

/// External potential `Σ_i z_i G(· - R_i)` of the supercell nuclei.
pub fn external_potential(kernel: &CoulombKernel, cell: &CellSpec) -> Result<RealField> {
    if (cell.side() - kernel.grid().side()).abs() > 1e-12 * cell.side() {
        return Err(Error::GridMismatch);
    }
    Ok(kernel.potential_of_charges(&cell.supercell_nuclei()))
}

/// `D(f, g) = ∫∫ f(x) G(x-y) g(y)`.
pub fn d_k(kernel: &CoulombKernel, f: &RealField, g: &RealField) -> Result<f64> {
    kernel.check(f)?;
    kernel.check(g)?;
    let grid = kernel.grid();
    let (fc, gc) = grid.coefficients_pair(f.values(), g.values());
    Ok(kernel.pair_from_coefficients(&fc, &gc, f.integral(), g.integral()))
}

/// `(1/2) D(ρ, ρ)` for a nonnegative density.
pub fn hartree_energy(kernel: &CoulombKernel, rho: &RealField) -> Result<f64> {
    if rho.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Domain(
            "Hartree energy needs a nonnegative density".into(),
        ));
    }
    Ok(0.5 * d_k(kernel, rho, rho)?)
}
