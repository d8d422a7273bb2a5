use tfdw::radial::{
    linear_fit, linearized_spectrum, mass_curve, mu_grid, mu_star, negative_count, radial_operator,
    s_lambda, shoot, shooting_bracket, solve_for_mass, Linearization, ShootControls,
};

fn controls() -> ShootControls {
    ShootControls::default()
}

#[test]
fn half_window_solution_is_decreasing_with_sqrt_mu_decay() {
    let mu = 0.5 * mu_star(1.0);
    let s = shoot(mu, 1.0, &controls()).unwrap();
    assert!(s.q_values.windows(2).all(|w| w[1] < w[0]));
    assert!(
        (s.decay_rate - mu.sqrt()).abs() <= 0.02 * mu.sqrt(),
        "{} vs {}",
        s.decay_rate,
        mu.sqrt()
    );
    assert!(s.pohozaev_residual <= 1e-6);
}

#[test]
fn every_solution_on_the_mass_grid_satisfies_the_invariants() {
    let ms = mu_star(1.0);
    let (points, failures) = mass_curve(1.0, &mu_grid(1.0, 24), &controls());
    assert!(failures.is_empty(), "{failures:?}");
    assert!(points.windows(2).all(|w| w[1].mass > w[0].mass));
    for p in &points {
        let s = shoot(p.mu, 1.0, &controls()).unwrap();
        assert!(
            s.pohozaev_residual <= 1e-6,
            "μ/μ* = {}: {}",
            p.mu / ms,
            s.pohozaev_residual
        );
        assert!(
            (s.decay_rate / p.mu.sqrt() - 1.0).abs() <= 0.02,
            "μ/μ* = {}",
            p.mu / ms
        );
        assert_decreasing(&s.q_values, p.mu);
    }
}

/// Strictly decreasing wherever `Q` is distinguishable from the plateau
/// value `y₊` in double precision; non-increasing everywhere.
fn assert_decreasing(q: &[f64], mu: f64) {
    let (_, y_plus) = shooting_bracket(mu, 1.0).unwrap();
    for (i, w) in q.windows(2).enumerate() {
        assert!(w[1] <= w[0], "increase at sample {i}");
        if w[0] < y_plus * (1.0 - 1e-13) {
            assert!(w[1] < w[0], "flat at sample {i} below the plateau");
        }
    }
}

#[test]
fn mass_curve_asymptotic_slopes() {
    let ms = mu_star(1.0);
    let (points, failures) = mass_curve(1.0, &mu_grid(1.0, 40), &controls());
    assert!(failures.is_empty());
    let low: Vec<(f64, f64)> = points[..5]
        .iter()
        .map(|p| (p.mu.ln(), p.mass.ln()))
        .collect();
    let high: Vec<(f64, f64)> = points[points.len() - 5..]
        .iter()
        .map(|p| ((ms - p.mu).ln(), p.mass.ln()))
        .collect();
    let (s_low, _) = linear_fit(&low);
    let (s_high, _) = linear_fit(&high);
    assert!((s_low - 1.5).abs() <= 0.05, "{s_low}");
    assert!((s_high + 3.0).abs() <= 0.1, "{s_high}");
}

#[test]
fn effective_energy_bounds_binding_and_concavity() {
    let lambdas = [0.5, 1.0, 2.0, 4.0, 8.0];
    let js: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let sol = solve_for_mass(l, 1.0, &controls()).unwrap();
            assert!(sol.monotone);
            assert!((sol.solution.mass - l).abs() <= 1e-8 * l);
            sol.solution.energy_j
        })
        .collect();
    for (&l, &j) in lambdas.iter().zip(&js) {
        assert!(j < 0.0 && j > -15.0 / 64.0 * l, "λ = {l}: J = {j}");
    }
    // concavity: second differences on the doubling grid, in the variable λ
    for i in 1..lambdas.len() - 1 {
        let (a, b, c) = (lambdas[i - 1], lambdas[i], lambdas[i + 1]);
        let slope_left = (js[i] - js[i - 1]) / (b - a);
        let slope_right = (js[i + 1] - js[i]) / (c - b);
        assert!(slope_right <= slope_left + 1e-9, "at λ = {b}");
    }
    // strict binding J(8λ) < 8J(λ) at λ = 1
    assert!(js[4] < 8.0 * js[1] - 1e-3 * js[1].abs());
}

#[test]
fn second_order_coefficient_signs() {
    let sol = solve_for_mass(1.0, 1.0, &controls()).unwrap().solution;
    assert!(s_lambda(&sol, 1.0) < 0.0);
    // z → 0 leaves the positive self-energy
    assert!(s_lambda(&sol, 1e-12) > 0.0);
}

#[test]
fn linearized_spectra_at_half_window() {
    let mu = 0.5 * mu_star(1.0);
    let s = shoot(mu, 1.0, &controls()).unwrap();
    let plus1 = linearized_spectrum(&s, 1, Linearization::Plus, 1)[0];
    let minus0 = linearized_spectrum(&s, 0, Linearization::Minus, 1)[0];
    let plus2 = linearized_spectrum(&s, 2, Linearization::Plus, 1)[0];
    assert!(plus1.abs() <= 1e-3 * mu, "{plus1}");
    assert!(minus0.abs() <= 1e-3 * mu, "{minus0}");
    assert!(plus2 > 0.0);
    assert_eq!(negative_count(&s, 0, Linearization::Plus), 1);
}

#[test]
fn discrete_l_plus_one_annihilates_q_prime() {
    let mu = 0.5 * mu_star(1.0);
    let s = shoot(mu, 1.0, &controls()).unwrap();
    let op = radial_operator(&s, 1, Linearization::Plus);
    // the operator acts on interior samples of u = r·φ with φ = Q′
    let u: Vec<f64> = s.r_grid[1..=op.dim()]
        .iter()
        .zip(&s.dq_values[1..])
        .map(|(r, dq)| r * dq)
        .collect();
    let lu = op.apply(&u);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(
        norm(&lu) <= 1e-3 * norm(&u),
        "{} vs {}",
        norm(&lu),
        norm(&u)
    );
}
