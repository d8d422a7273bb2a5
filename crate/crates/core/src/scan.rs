//! Sweeps over the Dirac constant: symmetry breaking on supercells, the
//! critical constant, large-`c` asymptotics and concentration diagnostics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::minimize::{
    minimize, minimize_from, minimize_with_starts, start_bump, start_random, Functional,
    MinimizeOptions, MinimizeResult, Mode,
};
use crate::model::{CellSpec, ModelParams, RealField, SpectralGrid};
use crate::radial::{s_lambda, solve_for_mass, ShootControls};

/// Relative gain below which a supercell state counts as symmetric.
pub const TOL_SYM: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub c: f64,
    pub e_single: f64,
    pub e_super: f64,
    /// `(e_super − N³e_single) / (N³|e_single|)`, negative when the supercell wins.
    pub gain: f64,
    pub periodicity_defect: Option<f64>,
    /// Grid point of the supercell density maximum.
    pub concentration_center: [f64; 3],
    pub nearest_nucleus_distance: f64,
    pub winning_start: String,
    pub converged: bool,
}

impl ScanRow {
    pub fn is_broken(&self, tol_sym: f64) -> bool {
        self.gain < -tol_sym
    }
}

fn ok_or_best(r: Result<MinimizeResult>) -> Result<MinimizeResult> {
    match r {
        Ok(r) => Ok(r),
        Err(Error::NonConvergence { best, .. }) => Ok(*best),
        Err(e) => Err(e),
    }
}

/// Minimal-image displacement `b − a` in a periodic box of side `side`.
fn min_image(a: [f64; 3], b: [f64; 3], side: f64) -> [f64; 3] {
    let mut d = [0.0; 3];
    for k in 0..3 {
        let x = (b[k] - a[k]).rem_euclid(side);
        d[k] = if x > 0.5 * side { x - side } else { x };
    }
    d
}

fn norm3(d: [f64; 3]) -> f64 {
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn nearest_nucleus(cell: &CellSpec, x: [f64; 3]) -> f64 {
    cell.supercell_nuclei()
        .iter()
        .map(|(r, _)| norm3(min_image(x, *r, cell.side())))
        .fold(f64::INFINITY, f64::min)
}

/// Supercell energy for one `c`, reusing the unit-cell minimizer as a start.
pub fn scan_row(
    params: &ModelParams,
    unit_grid: &SpectralGrid,
    multiplier: usize,
    opts: &MinimizeOptions,
) -> Result<ScanRow> {
    let super_grid = unit_grid.supercell(multiplier)?;
    let single = ok_or_best(minimize(params, unit_grid, opts, Mode::Full))?;
    let extension = single.field.periodic_extension(&super_grid)?;
    let sup = ok_or_best(minimize_with_starts(
        params,
        &super_grid,
        opts,
        Mode::Full,
        vec![("extension".to_string(), extension)],
    ))?;
    let copies = (multiplier * multiplier * multiplier) as f64;
    let e_single = single.breakdown.total;
    let e_super = sup.breakdown.total;
    let (imax, _) =
        sup.field
            .values()
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
    let center = super_grid.point(imax);
    Ok(ScanRow {
        c: params.c_dirac,
        e_single,
        e_super,
        gain: (e_super - copies * e_single) / (copies * e_single.abs()),
        periodicity_defect: sup.periodicity_defect,
        concentration_center: center,
        nearest_nucleus_distance: nearest_nucleus(super_grid.cell(), center),
        winning_start: sup.start_label.clone(),
        converged: single.converged && sup.converged,
    })
}

/// One row per entry of `c_list`; rows are independent.
pub fn symmetry_scan(
    params: &ModelParams,
    unit_grid: &SpectralGrid,
    c_list: &[f64],
    multiplier: usize,
    opts: &MinimizeOptions,
) -> Result<Vec<ScanRow>> {
    if multiplier < 2 {
        return Err(Error::Domain(
            "symmetry scan needs a supercell multiplier of at least 2".into(),
        ));
    }
    if unit_grid.cell().multiplier != 1 {
        return Err(Error::Domain(
            "symmetry scan expects a unit-cell grid".into(),
        ));
    }
    if c_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("c_list must be sorted".into()));
    }
    c_list
        .iter()
        .map(|&c| scan_row(&params.with_dirac(c), unit_grid, multiplier, opts))
        .collect()
}

/// Indices where the broken/symmetric classification flips along the scan.
pub fn classification_flips(rows: &[ScanRow], tol_sym: f64) -> Vec<usize> {
    rows.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].is_broken(tol_sym) != w[1].is_broken(tol_sym))
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalSearch {
    pub c_star: f64,
    pub bracket: (f64, f64),
    /// Every evaluated row in evaluation order.
    pub trace: Vec<ScanRow>,
}

impl CriticalSearch {
    /// True when every broken evaluation lies above every symmetric one.
    pub fn trace_is_monotone(&self, tol_sym: f64) -> bool {
        let max_sym = self
            .trace
            .iter()
            .filter(|r| !r.is_broken(tol_sym))
            .map(|r| r.c)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_broken = self
            .trace
            .iter()
            .filter(|r| r.is_broken(tol_sym))
            .map(|r| r.c)
            .fold(f64::INFINITY, f64::min);
        max_sym < min_broken
    }
}

/// Bisection on "gain < −tol_sym" until the bracket is narrower than `tol_c`.
pub fn critical_c(
    params: &ModelParams,
    unit_grid: &SpectralGrid,
    multiplier: usize,
    bracket: (f64, f64),
    tol_c: f64,
    tol_sym: f64,
    opts: &MinimizeOptions,
) -> Result<CriticalSearch> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tol_c > 0.0) {
        return Err(Error::InvalidBracket(format!(
            "need c_lo < c_hi and tol_c > 0, got ({lo}, {hi})"
        )));
    }
    let eval = |c: f64| scan_row(&params.with_dirac(c), unit_grid, multiplier, opts);
    let mut trace = Vec::new();
    let row_lo = eval(lo)?;
    let row_hi = eval(hi)?;
    let lo_ok = row_lo.gain.abs() <= tol_sym;
    let hi_ok = row_hi.is_broken(tol_sym);
    trace.push(row_lo);
    trace.push(row_hi);
    if !(lo_ok && hi_ok) {
        return Err(Error::InvalidBracket(format!(
            "gain {:.3e} at c = {lo} and {:.3e} at c = {hi}",
            trace[0].gain, trace[1].gain
        )));
    }
    while hi - lo > tol_c {
        let mid = 0.5 * (lo + hi);
        let row = eval(mid)?;
        if row.is_broken(tol_sym) {
            hi = mid;
        } else {
            lo = mid;
        }
        trace.push(row);
    }
    Ok(CriticalSearch {
        c_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        trace,
    })
}

/// `n = ⌈per_c·c⌉` rounded up to even, at least 8, capped at `cap`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridPolicy {
    pub per_c: f64,
    pub cap: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            per_c: 8.0,
            cap: 128,
        }
    }
}

impl GridPolicy {
    /// Grid size and whether the cap truncated it.
    pub fn size(&self, c: f64) -> (usize, bool) {
        let mut n = (self.per_c * c).ceil().max(8.0) as usize;
        if n % 2 == 1 {
            n += 1;
        }
        if n > self.cap {
            (self.cap - self.cap % 2, true)
        } else {
            (n, false)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticRow {
    pub c: f64,
    pub n: usize,
    pub under_resolved: bool,
    pub energy: f64,
    /// `c⁻²E`
    pub scaled_energy: f64,
    /// `|c⁻²E − J|`
    pub leading_residual: f64,
    /// `(E − c²J)/c`
    pub first_order: f64,
    /// `|first_order − S| / |S|`
    pub first_order_rel_error: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticsTable {
    pub lambda: f64,
    pub j: f64,
    pub s: f64,
    pub rows: Vec<AsymptoticRow>,
    /// `(c, |𝒥_{K,c}(v) − c²𝒥_{K_c,1}(v̆)| / |𝒥_{K,c}(v)|)` for a random `v`.
    pub scaling_identity: Vec<(f64, f64)>,
}

impl AsymptoticsTable {
    pub fn residuals_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].leading_residual < w[0].leading_residual)
    }
}

/// Relative defect of `𝒥_{K,c}(v) = c²𝒥_{K_c,1}(v̆)` with `v̆(y) = c^{-3/2}v(y/c)`.
///
/// Both sides are the effective functional; `K_c` is the cell dilated by `c`
/// and discretized with the same number of points.
pub fn scaling_identity_defect(params: &ModelParams, v: &RealField, c: f64) -> Result<f64> {
    let grid = v.grid();
    let lhs = Functional::new(params.with_dirac(c), grid, Mode::Effective)?;
    let cell = grid.cell();
    let dilated = CellSpec::new(cell.edge * c, cell.multiplier, cell.nuclei.clone())?;
    let dgrid = SpectralGrid::new(grid.n(), dilated)?;
    let scale = c.powf(-1.5);
    let v_breve = RealField::new(
        dgrid.clone(),
        v.values().iter().map(|x| x * scale).collect(),
    )?;
    let rhs = Functional::new(params.with_dirac(1.0), &dgrid, Mode::Effective)?;
    let a = lhs.energy(v)?.total;
    let b = c * c * rhs.energy(&v_breve)?.total;
    Ok((a - b).abs() / a.abs())
}

/// Compares `E_{K,λ}(c)` with `c²J(λ) + cS(λ)` along `c_list`.
///
/// `J` is the effective ground-state energy on R³, which carries a unit
/// gradient coefficient, so `params.c_w` must be 1. `S` uses the largest
/// nuclear charge of the unit cell.
pub fn asymptotics_check(
    params: &ModelParams,
    cell: &CellSpec,
    c_list: &[f64],
    policy: &GridPolicy,
    opts: &MinimizeOptions,
    controls: &ShootControls,
) -> Result<AsymptoticsTable> {
    if (params.c_w - 1.0).abs() > 0.0 {
        return Err(Error::Domain(
            "the large-c expansion is stated for c_w = 1".into(),
        ));
    }
    if c_list.windows(2).any(|w| w[1] <= w[0]) || c_list.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::Domain(
            "c_list must be positive and increasing".into(),
        ));
    }
    let radial = solve_for_mass(params.lambda, params.c_tf, controls)?.solution;
    let z_max = cell.nuclei.iter().map(|n| n.charge).fold(0.0, f64::max);
    let j = radial.energy_j;
    let s = s_lambda(&radial, z_max);
    let unit = cell.with_multiplier(1);
    let mut rows = Vec::new();
    let mut identity = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for &c in c_list {
        let (n, under) = policy.size(c);
        let grid = SpectralGrid::new(n, unit.clone())?;
        let p = params.with_dirac(c);
        let probe_grid = SpectralGrid::new(n.min(32), unit.clone())?;
        let v = start_random(&probe_grid, params.lambda, &mut rng);
        identity.push((c, scaling_identity_defect(params, &v, c)?));
        let result = match minimize(&p, &grid, opts, Mode::Full) {
            Ok(r) => r,
            Err(Error::NonConvergence { best, .. }) => *best,
            Err(e) => return Err(e),
        };
        let e = result.breakdown.total;
        let first = (e - c * c * j) / c;
        rows.push(AsymptoticRow {
            c,
            n,
            under_resolved: under,
            energy: e,
            scaled_energy: e / (c * c),
            leading_residual: (e / (c * c) - j).abs(),
            first_order: first,
            first_order_rel_error: (first - s).abs() / s.abs(),
            converged: result.converged,
        });
    }
    Ok(AsymptoticsTable {
        lambda: params.lambda,
        j,
        s,
        rows,
        scaling_identity: identity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Concentration {
    pub center: [f64; 3],
    pub distance_to_nearest_nucleus: f64,
}

/// Density-weighted centroid of the top 1% density cells, ties included.
///
/// Offsets are taken as minimal images around the density maximum so that
/// a peak straddling the periodic boundary is located correctly.
pub fn concentration_report(field: &RealField) -> Concentration {
    let grid = field.grid();
    let side = grid.side();
    let rho: Vec<f64> = field.values().iter().map(|w| w * w).collect();
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));
    let top = (rho.len() / 100).max(1);
    // keep every cell tied with the cutoff so symmetric shells stay whole
    let cutoff = rho[order[top - 1]] * (1.0 - 1e-9);
    let anchor = grid.point(order[0]);
    let mut acc = [0.0; 3];
    let mut weight = 0.0;
    for &i in order.iter().take_while(|&&i| rho[i] >= cutoff) {
        let d = min_image(anchor, grid.point(i), side);
        for k in 0..3 {
            acc[k] += rho[i] * d[k];
        }
        weight += rho[i];
    }
    let center = [0, 1, 2].map(|k| (anchor[k] + acc[k] / weight).rem_euclid(side));
    Concentration {
        center,
        distance_to_nearest_nucleus: nearest_nucleus(grid.cell(), center),
    }
}

#[derive(Clone, Debug)]
pub struct TranslateReport {
    /// One minimizer per start, bump-started at each copy of nucleus 0.
    pub results: Vec<MinimizeResult>,
    /// Largest `‖w_i − w_0(· − R_i)‖ / ‖w_0‖` over the copies.
    pub max_translate_mismatch: f64,
    /// Smallest relative L² distance between two of the minimizers.
    pub min_pairwise_distance: f64,
}

/// Bump-starts at every lattice copy of the first nucleus and checks that
/// the minimizers are translates of one another.
pub fn lattice_translates(
    params: &ModelParams,
    super_grid: &SpectralGrid,
    opts: &MinimizeOptions,
) -> Result<TranslateReport> {
    let cell = super_grid.cell();
    let mult = cell.multiplier;
    if !super_grid.n().is_multiple_of(mult) {
        return Err(Error::Domain("grid must contain whole unit cells".into()));
    }
    let func = Functional::new(*params, super_grid, Mode::Full)?;
    let mass = func.target_mass();
    let step = (super_grid.n() / mult) as i64;
    let base = cell
        .nuclei
        .first()
        .ok_or_else(|| Error::Domain("cell has no nuclei".into()))?;
    let mut results = Vec::new();
    let mut shifts = Vec::new();
    for a in 0..mult {
        for b in 0..mult {
            for c in 0..mult {
                let center = [
                    (base.position[0] + a as f64) * cell.edge,
                    (base.position[1] + b as f64) * cell.edge,
                    (base.position[2] + c as f64) * cell.edge,
                ];
                let start = start_bump(super_grid, center, mass);
                let label = format!("bump{a}{b}{c}");
                results.push(ok_or_best(minimize_from(&func, &start, &label, opts))?);
                shifts.push([a as i64 * step, b as i64 * step, c as i64 * step]);
            }
        }
    }
    let w0 = &results[0].field;
    let norm = w0.l2_norm();
    let max_translate_mismatch = results
        .iter()
        .zip(&shifts)
        .map(|(r, &s)| r.field.l2_distance(&w0.rolled(s)) / norm)
        .fold(0.0, f64::max);
    let mut min_pairwise_distance = f64::INFINITY;
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            let d = results[i].field.l2_distance(&results[j].field) / norm;
            min_pairwise_distance = min_pairwise_distance.min(d);
        }
    }
    Ok(TranslateReport {
        results,
        max_translate_mismatch,
        min_pairwise_distance,
    })
}
