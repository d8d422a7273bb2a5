use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfdw::coulomb::{build_gk, d_k, external_potential};
use tfdw::model::{CellSpec, Nucleus, RealField, SpectralGrid};

fn grid(n: usize) -> SpectralGrid {
    SpectralGrid::new(n, CellSpec::default()).unwrap()
}

fn random_field(g: &SpectralGrid, rng: &mut ChaCha8Rng) -> RealField {
    RealField::new(
        g.clone(),
        (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Minimal-image distance of a grid point from the origin.
fn radius(g: &SpectralGrid, idx: usize) -> f64 {
    let side = g.side();
    g.point(idx)
        .iter()
        .map(|&x| {
            let d = if x > 0.5 * side { x - side } else { x };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Smallest `C` with `G(x) ≤ C/|x|`, skipping the three shells of grid
/// points nearest the singularity where the truncated series oscillates.
fn fitted_bound(n: usize) -> f64 {
    let g = grid(n);
    let k = build_gk(&g);
    let cutoff = 3f64.sqrt() * g.spacing() * (1.0 + 1e-9);
    (0..g.len())
        .map(|idx| (radius(&g, idx), k.gk_field().values()[idx]))
        .filter(|&(r, _)| r > cutoff)
        .map(|(r, v)| v * r)
        .fold(0.0, f64::max)
}

#[test]
fn kernel_has_uniform_inverse_distance_bound() {
    let bounds: Vec<f64> = [16, 24, 32].iter().map(|&n| fitted_bound(n)).collect();
    for (&n, &c) in [16, 24, 32].iter().zip(&bounds) {
        assert!(c.is_finite() && c > 0.0, "n = {n}: C = {c}");
        let g = grid(n);
        assert!(build_gk(&g)
            .gk_field()
            .values()
            .iter()
            .all(|&v| v >= -1e-12));
    }
    let (lo, hi) = bounds
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi < 1.5 * lo, "bound drifts with resolution: {bounds:?}");
}

#[test]
fn shift_is_a_cauchy_sequence() {
    let s: Vec<f64> = [32, 48, 64]
        .iter()
        .map(|&n| build_gk(&grid(n)).shift())
        .collect();
    assert!((s[2] - s[1]).abs() < (s[1] - s[0]).abs(), "shifts {s:?}");
}

#[test]
fn d_k_matches_real_space_double_sum() {
    let g = grid(8);
    let k = build_gk(&g);
    let n = g.n();
    let gk = k.gk_field().values();
    let dv = g.dv();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let f = random_field(&g, &mut rng).map(f64::abs);
        let h = random_field(&g, &mut rng).map(f64::abs);
        let mut brute = 0.0;
        for i in 0..g.len() {
            let a = g.coords(i);
            for j in 0..g.len() {
                let b = g.coords(j);
                let d = g.index(
                    (a[0] + n - b[0]) % n,
                    (a[1] + n - b[1]) % n,
                    (a[2] + n - b[2]) % n,
                );
                brute += f.values()[i] * gk[d] * h.values()[j];
            }
        }
        brute *= dv * dv;
        let spectral = d_k(&k, &f, &h).unwrap();
        assert!(
            (spectral - brute).abs() <= 1e-10 * brute.abs(),
            "{spectral} vs {brute}"
        );
    }
}

#[test]
fn uniform_density_pairs_to_mean_kernel() {
    let g = grid(8);
    let k = build_gk(&g);
    let lambda = 1.7;
    let rho = RealField::constant(&g, lambda / g.volume());
    let mean = k.gk_field().integral() / g.volume();
    let d = d_k(&k, &rho, &rho).unwrap();
    assert!((d - lambda * lambda * mean).abs() < 1e-12 * d.abs());
}

#[test]
fn quadratic_form_is_positive() {
    let g = grid(8);
    let k = build_gk(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let f = random_field(&g, &mut rng);
        assert!(d_k(&k, &f, &f).unwrap() > 0.0);
    }
}

#[test]
fn single_mode_parseval() {
    let g = grid(8);
    let k = build_gk(&g);
    let f = RealField::from_fn(&g, |x| {
        (2.0 * std::f64::consts::PI * (x[0] + 2.0 * x[1])).cos()
    });
    // f̂(±k₀) = 1/2, |k₀|² = 20π²
    let expected = 2.0 * 0.25 * 4.0 * std::f64::consts::PI / (20.0 * std::f64::consts::PI.powi(2));
    let d = d_k(&k, &f, &f).unwrap();
    assert!((d - expected).abs() < 1e-12 * expected);
}

#[test]
fn translation_by_grid_vector_permutes_potential() {
    let g = grid(16);
    let k = build_gk(&g);
    let h = g.spacing();
    let base = CellSpec::new(
        1.0,
        1,
        vec![
            Nucleus {
                position: [0.1, 0.3, 0.55],
                charge: 1.0,
            },
            Nucleus {
                position: [0.6, 0.7, 0.2],
                charge: 2.0,
            },
        ],
    )
    .unwrap();
    let shift = [2usize, 5, 1];
    let moved = CellSpec::new(
        1.0,
        1,
        base.nuclei
            .iter()
            .map(|nu| Nucleus {
                position: [0, 1, 2].map(|a| (nu.position[a] + shift[a] as f64 * h).rem_euclid(1.0)),
                charge: nu.charge,
            })
            .collect(),
    )
    .unwrap();
    let v0 = external_potential(&k, &base).unwrap();
    let v1 = external_potential(&k, &moved).unwrap();
    let n = g.n();
    for idx in 0..g.len() {
        let [x, y, z] = g.coords(idx);
        let src = g.index(
            (x + n - shift[0]) % n,
            (y + n - shift[1]) % n,
            (z + n - shift[2]) % n,
        );
        assert!((v1.values()[idx] - v0.values()[src]).abs() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn d_k_is_symmetric_and_bilinear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = grid(8);
        let k = build_gk(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&g, &mut rng);
        let u = random_field(&g, &mut rng);
        let v = random_field(&g, &mut rng);
        let fg = d_k(&k, &f, &u).unwrap();
        let gf = d_k(&k, &u, &f).unwrap();
        prop_assert!((fg - gf).abs() <= 1e-12 * fg.abs().max(1.0));
        let lhs = d_k(&k, &f, &u.scaled(a).axpy(b, &v)).unwrap();
        let rhs = a * fg + b * d_k(&k, &f, &v).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
    }

    #[test]
    fn external_potential_is_additive_and_homogeneous(
        p in prop::array::uniform3(0.0f64..1.0),
        q in prop::array::uniform3(0.0f64..1.0),
        z1 in 0.1f64..3.0,
        z2 in 0.1f64..3.0,
    ) {
        let g = grid(8);
        let k = build_gk(&g);
        let both = k.potential_of_charges(&[(p, z1), (q, z2)]);
        let sum = k.potential_of_charges(&[(p, z1)]).axpy(1.0, &k.potential_of_charges(&[(q, z2)]));
        prop_assert!(both.l2_distance(&sum) <= 1e-12 * both.l2_norm());
        let scaled = k.potential_of_charges(&[(p, 2.0 * z1)]);
        let twice = k.potential_of_charges(&[(p, z1)]).scaled(2.0);
        prop_assert!(scaled.l2_distance(&twice) <= 1e-12 * scaled.l2_norm());
    }
}
