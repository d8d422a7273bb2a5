//! One function per subcommand; each returns its rendered outputs so that
//! files are written once, after every result is in.

use serde_json::{json, Value};
use tfdw::minimize::{minimize, uniqueness_certificate, Certificate, MinimizeResult, Mode};
use tfdw::model::SpectralGrid;
use tfdw::radial::{
    linear_fit, linearized_spectrum, mass_curve, mu_grid, mu_star, negative_count, s_lambda, shoot,
    solve_for_mass, Linearization, MassCurvePoint, RadialSolution,
};
use tfdw::scan::{
    asymptotics_check, classification_flips, concentration_report, critical_c, scan_row, ScanRow,
};
use tfdw::Error;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{density_dump, Cell, Table};

pub struct Report {
    pub results: Value,
    /// Set when a solver stopped short; the outputs are still written.
    pub failure: Option<String>,
    pub files: Vec<(String, String)>,
}

/// Maps `f` over `items` on up to `workers` threads, preserving order.
pub fn ordered_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers.min(items.len()));
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                s.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

fn accept_best(r: tfdw::Result<MinimizeResult>) -> Result<MinimizeResult, CliError> {
    match r {
        Ok(r) => Ok(r),
        Err(Error::NonConvergence { best, .. }) => Ok(*best),
        Err(e) => Err(e.into()),
    }
}

pub fn periodic_min(cfg: &RunConfig) -> Result<Report, CliError> {
    let grid = SpectralGrid::new(cfg.n * cfg.cell.multiplier, cfg.cell.clone())?;
    let mode = if cfg.mode_effective {
        Mode::Effective
    } else {
        Mode::Full
    };
    let r = accept_best(minimize(&cfg.params, &grid, &cfg.opts, mode))?;
    let b = r.breakdown;
    let conc = concentration_report(&r.field);
    let certified = uniqueness_certificate(&r, &cfg.params) == Certificate::Certified;
    let results = json!({
        "grid_points": grid.n(),
        "energy": {
            "total": b.total,
            "kinetic": b.kinetic,
            "thomas_fermi": b.tf,
            "dirac": b.dirac,
            "hartree": b.hartree,
            "external": b.external,
        },
        "mu": r.mu,
        "mass": r.field.mass(),
        "residual": r.residual,
        "iterations": r.iterations,
        "winning_start": r.start_label,
        "periodicity_defect": r.periodicity_defect,
        "converged": r.converged,
        "uniqueness_certified": certified,
        "concentration_center": conc.center,
        "nearest_nucleus_distance": conc.distance_to_nearest_nucleus,
    });
    let mut trace = Table::new(vec![
        ("step", "accepted step index, 0 is the start"),
        ("energy", "total energy"),
    ]);
    for (i, &e) in r.energy_trace.iter().enumerate() {
        trace.push(vec![Cell::Int(i), Cell::Num(e)]);
    }
    let failure =
        (!r.converged).then(|| format!("minimization stopped at residual {:.3e}", r.residual));
    Ok(Report {
        results,
        failure,
        files: vec![
            (
                "periodic-min-trace.csv".into(),
                trace.render("periodic-min", cfg),
            ),
            (
                "periodic-min-density.csv".into(),
                density_dump(&r.field, cfg),
            ),
        ],
    })
}

fn lowest(sol: &RadialSolution, ell: u32, which: Linearization) -> f64 {
    linearized_spectrum(sol, ell, which, 1)[0]
}

pub fn radial(cfg: &RunConfig) -> Result<Report, CliError> {
    let c_tf = cfg.params.c_tf;
    let (sol, monotone) = match cfg.mu {
        Some(mu) => (shoot(mu, c_tf, &cfg.controls)?, None),
        None => {
            let s = solve_for_mass(cfg.params.lambda, c_tf, &cfg.controls)?;
            (s.solution, Some(s.monotone))
        }
    };
    let z = cfg
        .z
        .unwrap_or_else(|| cfg.cell.nuclei.iter().map(|n| n.charge).fold(0.0, f64::max));
    let results = json!({
        "mu": sol.mu,
        "mu_star": mu_star(c_tf),
        "mass": sol.mass,
        "energy_j": sol.energy_j,
        "gradient_sq": sol.gradient_sq,
        "q0": sol.q_values[0],
        "pohozaev_residual": sol.pohozaev_residual,
        "decay_rate": sol.decay_rate,
        "sqrt_mu": sol.mu.sqrt(),
        "r_match": sol.r_match,
        "r_max": sol.r_max(),
        "step": sol.step,
        "mass_curve_monotone": monotone,
        "z": z,
        "s_lambda": s_lambda(&sol, z),
        "lowest_eigenvalues": {
            "plus_0": lowest(&sol, 0, Linearization::Plus),
            "plus_1": lowest(&sol, 1, Linearization::Plus),
            "plus_2": lowest(&sol, 2, Linearization::Plus),
            "minus_0": lowest(&sol, 0, Linearization::Minus),
        },
        "negative_count_plus_0": negative_count(&sol, 0, Linearization::Plus),
    });
    let mut table = Table::new(vec![
        ("r", "radius"),
        ("q", "profile Q(r)"),
        ("dq", "derivative Q'(r)"),
    ]);
    for ((&r, &q), &dq) in sol.r_grid.iter().zip(&sol.q_values).zip(&sol.dq_values) {
        table.push(vec![Cell::Num(r), Cell::Num(q), Cell::Num(dq)]);
    }
    Ok(Report {
        results,
        failure: None,
        files: vec![("radial-profile.csv".into(), table.render("radial", cfg))],
    })
}

fn end_slope(points: &[(f64, f64)]) -> Option<f64> {
    (points.len() >= 2).then(|| linear_fit(points).0)
}

pub fn mass_curve_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let c_tf = cfg.params.c_tf;
    let mut mus = if cfg.mu_list.is_empty() {
        mu_grid(c_tf, cfg.mu_count)
    } else {
        cfg.mu_list.clone()
    };
    if mus.is_empty() {
        return Err(CliError::Config(
            "mass-curve needs mu_list or a positive mu_count".into(),
        ));
    }
    mus.sort_by(f64::total_cmp);
    let parts = ordered_map(&mus, cfg.workers, |&mu| {
        mass_curve(c_tf, &[mu], &cfg.controls)
    });
    let mut points: Vec<MassCurvePoint> = Vec::new();
    let mut failures: Vec<Value> = Vec::new();
    for (p, f) in parts {
        points.extend(p);
        failures.extend(
            f.into_iter()
                .map(|(mu, e)| json!({"mu": mu, "error": e.to_string()})),
        );
    }
    let ms = mu_star(c_tf);
    let k = points.len().min(5);
    let low: Vec<(f64, f64)> = points[..k]
        .iter()
        .map(|p| (p.mu.ln(), p.mass.ln()))
        .collect();
    let high: Vec<(f64, f64)> = points[points.len() - k..]
        .iter()
        .map(|p| ((ms - p.mu).ln(), p.mass.ln()))
        .collect();
    let results = json!({
        "mu_star": ms,
        "points": points.len(),
        "mass_increasing": points.windows(2).all(|w| w[1].mass > w[0].mass),
        "slope_small_mu": end_slope(&low),
        "slope_near_mu_star": end_slope(&high),
        "failures": failures,
    });
    let mut table = Table::new(vec![
        ("mu", "Lagrange multiplier"),
        ("mass", "M(mu), the squared L2 norm of Q"),
        ("energy_j", "effective energy of Q"),
    ]);
    for p in &points {
        table.push(vec![
            Cell::Num(p.mu),
            Cell::Num(p.mass),
            Cell::Num(p.energy_j),
        ]);
    }
    let failure = (!failures.is_empty())
        .then(|| format!("{} of {} mu points failed", failures.len(), mus.len()));
    Ok(Report {
        results,
        failure,
        files: vec![("mass-curve.csv".into(), table.render("mass-curve", cfg))],
    })
}

fn scan_table(rows: &[ScanRow], tol_sym: f64) -> Table {
    let mut t = Table::new(vec![
        ("c", "Dirac constant"),
        ("e_single", "unit-cell minimal energy"),
        ("e_super", "supercell minimal energy"),
        (
            "gain",
            "(e_super - N^3 e_single)/(N^3 |e_single|), negative when symmetry breaks",
        ),
        (
            "periodicity_defect",
            "min over unit translations of relative L2 mismatch",
        ),
        ("center_x", "supercell density peak, x"),
        ("center_y", "supercell density peak, y"),
        ("center_z", "supercell density peak, z"),
        (
            "nearest_nucleus_distance",
            "distance from the peak to the nearest nucleus",
        ),
        ("broken", "gain < -tol_sym"),
        ("winning_start", "label of the best supercell start"),
        ("converged", "both minimizations met the residual tolerance"),
    ]);
    for r in rows {
        t.push(vec![
            Cell::Num(r.c),
            Cell::Num(r.e_single),
            Cell::Num(r.e_super),
            Cell::Num(r.gain),
            Cell::Num(r.periodicity_defect.unwrap_or(f64::NAN)),
            Cell::Num(r.concentration_center[0]),
            Cell::Num(r.concentration_center[1]),
            Cell::Num(r.concentration_center[2]),
            Cell::Num(r.nearest_nucleus_distance),
            Cell::Bool(r.is_broken(tol_sym)),
            Cell::Text(r.winning_start.clone()),
            Cell::Bool(r.converged),
        ]);
    }
    t
}

fn unit_grid(cfg: &RunConfig) -> Result<SpectralGrid, CliError> {
    Ok(SpectralGrid::new(cfg.n, cfg.cell.with_multiplier(1))?)
}

fn unconverged(rows: &[ScanRow]) -> Option<String> {
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.converged)
        .map(|r| r.c.to_string())
        .collect();
    (!bad.is_empty()).then(|| format!("minimization did not converge at c = {}", bad.join(", ")))
}

pub fn scan_symmetry(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.c_list.is_empty() || cfg.c_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(CliError::Config(
            "c_list must be non-empty and sorted".into(),
        ));
    }
    let grid = unit_grid(cfg)?;
    let rows: Vec<ScanRow> = ordered_map(&cfg.c_list, cfg.workers, |&c| {
        scan_row(&cfg.params.with_dirac(c), &grid, cfg.supercell, &cfg.opts)
    })
    .into_iter()
    .collect::<tfdw::Result<_>>()?;
    let flips: Vec<f64> = classification_flips(&rows, cfg.tol_sym)
        .iter()
        .map(|&i| rows[i].c)
        .collect();
    let results = json!({
        "rows": rows.len(),
        "flips_after_c": flips,
        "broken": rows.iter().map(|r| r.is_broken(cfg.tol_sym)).collect::<Vec<_>>(),
        "gain": rows.iter().map(|r| r.gain).collect::<Vec<_>>(),
    });
    Ok(Report {
        results,
        failure: unconverged(&rows),
        files: vec![(
            "scan-symmetry.csv".into(),
            scan_table(&rows, cfg.tol_sym).render("scan-symmetry", cfg),
        )],
    })
}

pub fn critical(cfg: &RunConfig) -> Result<Report, CliError> {
    let grid = unit_grid(cfg)?;
    let search = critical_c(
        &cfg.params,
        &grid,
        cfg.supercell,
        (cfg.c_lo, cfg.c_hi),
        cfg.tol_c,
        cfg.tol_sym,
        &cfg.opts,
    )?;
    let results = json!({
        "c_star": search.c_star,
        "bracket": [search.bracket.0, search.bracket.1],
        "evaluations": search.trace.len(),
        "trace_monotone": search.trace_is_monotone(cfg.tol_sym),
    });
    Ok(Report {
        results,
        failure: unconverged(&search.trace),
        files: vec![(
            "critical-c.csv".into(),
            scan_table(&search.trace, cfg.tol_sym).render("critical-c", cfg),
        )],
    })
}

pub fn asymptotics(cfg: &RunConfig) -> Result<Report, CliError> {
    let table = asymptotics_check(
        &cfg.params,
        &cfg.cell,
        &cfg.c_list,
        &cfg.policy,
        &cfg.opts,
        &cfg.controls,
    )?;
    let results = json!({
        "lambda": table.lambda,
        "j": table.j,
        "s": table.s,
        "residuals_decreasing": table.residuals_decreasing(),
        "scaling_identity": table.scaling_identity.iter().map(|(c, d)| json!({"c": c, "defect": d})).collect::<Vec<_>>(),
    });
    let mut t = Table::new(vec![
        ("c", "Dirac constant"),
        ("n", "grid points per side"),
        ("under_resolved", "the grid policy hit its cap"),
        ("energy", "periodic minimal energy E(c)"),
        ("scaled_energy", "E/c^2"),
        ("leading_residual", "|E/c^2 - J|"),
        ("first_order", "(E - c^2 J)/c"),
        ("first_order_rel_error", "|(E - c^2 J)/c - S|/|S|"),
        ("converged", "minimization met the residual tolerance"),
    ]);
    for r in &table.rows {
        t.push(vec![
            Cell::Num(r.c),
            Cell::Int(r.n),
            Cell::Bool(r.under_resolved),
            Cell::Num(r.energy),
            Cell::Num(r.scaled_energy),
            Cell::Num(r.leading_residual),
            Cell::Num(r.first_order),
            Cell::Num(r.first_order_rel_error),
            Cell::Bool(r.converged),
        ]);
    }
    let bad: Vec<String> = table
        .rows
        .iter()
        .filter(|r| !r.converged)
        .map(|r| r.c.to_string())
        .collect();
    let failure = (!bad.is_empty())
        .then(|| format!("minimization did not converge at c = {}", bad.join(", ")));
    Ok(Report {
        results,
        failure,
        files: vec![("asymptotics.csv".into(), t.render("asymptotics", cfg))],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_map_keeps_input_order() {
        let items: Vec<usize> = (0..37).collect();
        for workers in [1, 2, 5, 64] {
            let out = ordered_map(&items, workers, |&i| i * i);
            assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
