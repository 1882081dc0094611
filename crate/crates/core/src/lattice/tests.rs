use super::*;
use crate::exterior7::sigma_std;
use crate::rng::SeededRng;
use std::f64::consts::PI;

fn grid3(n: usize) -> Grid {
    Grid::new(3, n, 2.0 * PI).unwrap()
}

fn perturbed_sigma(g: Grid, amp: f64, seed: u64) -> Field {
    let db = d(&random_field(g, 2, seed)).unwrap();
    let db = db.scale(amp / db.max_abs());
    Field::constant(g, &sigma_std()).add(&db).unwrap()
}

fn random_field(grid: Grid, k: usize, seed: u64) -> Field {
    Field::random_trig(grid, k, 2, &mut SeededRng::with_stream(seed, k as u64))
}

#[test]
fn d_squared_vanishes() {
    for scheme in [DerivativeScheme::Spectral, DerivativeScheme::ForwardDifference] {
        let g = grid3(8).with_scheme(scheme);
        for k in 0..6 {
            let f = random_field(g, k, 1);
            let dd = d(&d(&f).unwrap()).unwrap();
            assert!(dd.max_abs() < 1e-10 * f.max_abs().max(1.0), "{scheme:?} k={k}: {}", dd.max_abs());
        }
    }
}

#[test]
fn d_of_seven_form_is_rejected() {
    let g = grid3(4);
    assert!(matches!(d(&Field::zeros(g, 7)), Err(Error::DegreeOverflow(7, 1))));
}

#[test]
fn spectral_d_of_single_mode() {
    let g = grid3(8);
    let e2 = KForm::basis(&[2]).unwrap();
    let f = Field::from_fn(g, 1, |x| e2 * x[0].sin());
    let df = d(&f).unwrap();
    let e12 = KForm::basis(&[1, 2]).unwrap();
    let exact = Field::from_fn(g, 2, |x| e12 * x[0].cos());
    assert!(df.sub(&exact).unwrap().max_abs() < 1e-13);
}

#[test]
fn forward_difference_is_first_order() {
    let err = |n: usize| {
        let g = grid3(n).with_scheme(DerivativeScheme::ForwardDifference);
        let f = Field::from_fn(g, 0, |x| KForm::scalar((x[1] + 2.0 * x[2]).sin()));
        let df = d(&f).unwrap();
        let exact = Field::from_fn(g, 1, |x| {
            let c = (x[1] + 2.0 * x[2]).cos();
            KForm::covector(&[0.0, c, 2.0 * c, 0.0, 0.0, 0.0, 0.0])
        });
        df.sub(&exact).unwrap().max_abs()
    };
    let ratio = err(32) / err(16);
    assert!((0.4..0.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn codifferential_is_adjoint_for_flat_and_curved_metrics() {
    let g = grid3(8);
    let flat = MetricField::flat(g);
    let sig = perturbed_sigma(g, 0.1, 9);
    let curved = MetricField::from_sigma(&sig).unwrap();
    for mf in [&flat, &curved] {
        for k in 0..6 {
            let a = random_field(g, k, 3);
            let b = random_field(g, k + 1, 4);
            let lhs = l2_inner(&d(&a).unwrap(), &b, mf).unwrap();
            let rhs = l2_inner(&a, &codifferential(&b, mf).unwrap(), mf).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "k={k}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn flat_laplacian_eigenvalue_of_single_mode() {
    let g = grid3(8);
    let mf = MetricField::flat(g);
    for k in 0..8 {
        let mut e = KForm::zero(k);
        e.coeffs_mut()[0] = 1.0;
        let f = Field::from_fn(g, k, |x| e * (x[0] + 2.0 * x[2]).cos());
        let lf = hodge_laplacian(&f, &mf).unwrap();
        assert!(lf.sub(&f.scale(5.0)).unwrap().max_abs() < 1e-11, "k={k}");
    }
}

#[test]
fn lambda0_of_unit_circle_grid() {
    let g = Grid::new(1, 8, 2.0 * PI).unwrap();
    assert!((spectrum_lambda0(&g) - 1.0).abs() < 1e-15);
    let g = Grid::new(3, 8, PI).unwrap();
    assert!((spectrum_lambda0(&g) - 4.0).abs() < 1e-14);
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(Grid::new(0, 8, 1.0).is_err());
    assert!(Grid::new(8, 8, 1.0).is_err());
    assert!(Grid::new(3, 1, 1.0).is_err());
    assert!(Grid::new(3, 8, -1.0).is_err());
}

#[test]
fn exact_forms_have_no_zero_mode() {
    let g = grid3(8);
    let f = d(&random_field(g, 2, 5)).unwrap();
    assert!(zero_mode(&f).max_abs() < 1e-15);
}

#[test]
fn star_field_involution_and_metric_from_sigma() {
    let g = grid3(6);
    let sig = perturbed_sigma(g, 0.1, 2);
    let mf = MetricField::from_sigma(&sig).unwrap();
    let a = random_field(g, 3, 7);
    let back = star(&star(&a, &mf).unwrap(), &mf).unwrap();
    assert!(back.sub(&a).unwrap().max_abs() < 1e-12);
}

#[test]
fn non_positive_site_is_reported() {
    let g = grid3(4);
    let mut sig = Field::constant(g, &sigma_std());
    sig.set(5, &KForm::basis(&[1, 2, 3]).unwrap());
    assert_eq!(
        MetricField::from_sigma(&sig).unwrap_err(),
        Error::NotPositive { site: Some(5) }
    );
}

#[test]
fn pointwise_wedge_and_interior_match_kform_algebra() {
    let g = grid3(4);
    let a = random_field(g, 1, 1);
    let b = random_field(g, 3, 2);
    let w = wedge_fields(&a, &b).unwrap();
    let i = interior_field(&a, &b).unwrap();
    for s in [0, 7, 33] {
        let aa = a.at(s);
        let v: [f64; 7] = std::array::from_fn(|j| aa.coeffs()[j]);
        assert!(w.at(s).dist(&crate::exterior7::wedge(&aa, &b.at(s)).unwrap()) < 1e-15);
        assert!(i.at(s).dist(&crate::exterior7::interior(&v, &b.at(s)).unwrap()) < 1e-15);
    }
}

#[test]
fn partial_derivative_matches_d_of_function() {
    let g = grid3(8);
    let f = random_field(g, 0, 11);
    let df = d(&f).unwrap();
    for a in 0..3 {
        let p = partial(&f, a).unwrap();
        for s in 0..g.n_sites() {
            assert!((p.at(s).coeffs()[0] - df.at(s).coeffs()[a]).abs() < 1e-12);
        }
    }
}

#[test]
fn l2_norm_of_constant_form() {
    let g = grid3(4);
    let f = Field::constant(g, &sigma_std());
    let n2 = l2_inner(&f, &f, &MetricField::flat(g)).unwrap();
    assert!((n2 - 7.0 * (2.0 * PI).powi(3)).abs() < 1e-9);
}

#[test]
fn downsample_picks_coarse_sites() {
    let g = grid3(8);
    let f = random_field(g, 1, 3);
    let c = f.downsample(2).unwrap();
    assert_eq!(c.grid().n(), 4);
    assert_eq!(c.at(c.grid().site(&[1, 2, 3])), f.at(g.site(&[2, 4, 6])));
}

#[test]
fn leibniz_rule_on_band_limited_products() {
    let g = grid3(16);
    let band = 16 / 4 - 1;
    let f = Field::random_trig(g, 0, band, &mut SeededRng::new(21));
    for k in [1, 2, 3] {
        let a = Field::random_trig(g, k, band, &mut SeededRng::with_stream(22, k as u64));
        let lhs = d(&wedge_fields(&f, &a).unwrap()).unwrap();
        let mut rhs = wedge_fields(&d(&f).unwrap(), &a).unwrap();
        rhs.axpy(1.0, &wedge_fields(&f, &d(&a).unwrap()).unwrap()).unwrap();
        let err = lhs.sub(&rhs).unwrap().max_abs();
        assert!(err <= 1e-12 * lhs.max_abs().max(1.0), "k={k}: {err}");
    }
}

#[test]
fn spectral_d_is_exact_up_to_half_bandwidth() {
    // d(sin(j x1) e2) = j cos(j x1) e12 for every j < n/2
    let g = grid3(16);
    for j in 1..8 {
        let jf = j as f64;
        let mut e2 = KForm::zero(1);
        e2.coeffs_mut()[1] = 1.0;
        let f = Field::from_fn(g, 1, |x| e2 * (jf * x[0]).sin());
        let e12 = KForm::basis(&[1, 2]).unwrap();
        let expect = Field::from_fn(g, 2, |x| e12 * (jf * (jf * x[0]).cos()));
        assert!(d(&f).unwrap().sub(&expect).unwrap().max_abs() <= 1e-12 * jf, "j={j}");
    }
}

#[test]
fn spectral_derivative_converges_on_smooth_functions() {
    // exp(cos x1) is not band-limited; the spectral error falls off super-algebraically
    let err = |n: usize| {
        let g = Grid::new(1, n, 2.0 * PI).unwrap();
        let f = Field::from_fn(g, 0, |x| KForm::scalar(x[0].cos().exp()));
        let df = partial(&f, 0).unwrap();
        let ex = Field::from_fn(g, 0, |x| KForm::scalar(-x[0].sin() * x[0].cos().exp()));
        df.sub(&ex).unwrap().max_abs()
    };
    let (e8, e16, e32) = (err(8), err(16), err(32));
    assert!(e16 < e8 * 1e-3, "{e8} {e16}");
    assert!(e32 < 1e-12, "{e32}");
}

#[test]
fn fourier_multiplier_commutes_with_d() {
    let g = grid3(8);
    let b = random_field(g, 2, 4);
    let m = |k2: f64| (-0.3 * k2).exp();
    let lhs = d(&fourier_multiplier(&b, m)).unwrap();
    let rhs = fourier_multiplier(&d(&b).unwrap(), m);
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-13);
    let id = fourier_multiplier(&b, |_| 1.0);
    assert!(id.sub(&b).unwrap().max_abs() < 1e-14);
}

#[test]
fn shell_energy_obeys_parseval() {
    let g = grid3(8);
    let f = random_field(g, 3, 6);
    let e = shell_energy(&f);
    let wn = g.wavenumbers();
    let mut counts = vec![0usize; e.len()];
    for &k2 in &wn.k2 {
        counts[k2.round() as usize] += 1;
    }
    let total: f64 = e.iter().zip(&counts).map(|(x, &c)| x * c as f64).sum();
    let direct = f.data().iter().map(|x| x * x).sum::<f64>() / g.n_sites() as f64;
    assert!((total - direct).abs() < 1e-12 * direct);
    // band-2 data has no energy beyond |k|² = 12
    assert!(e[13..].iter().all(|&x| x < 1e-28));
}

#[test]
fn shell_energy_of_single_mode() {
    let g = grid3(8);
    let f = Field::from_fn(g, 0, |x| KForm::scalar((x[0] + 2.0 * x[1]).cos()));
    let e = shell_energy(&f);
    for (j, &x) in e.iter().enumerate() {
        if j != 5 {
            assert!(x < 1e-28, "shell {j}: {x}");
        }
    }
    assert!(e[5] > 0.0);
}

#[test]
fn drop_nyquist_removes_only_the_nyquist_modes() {
    let g = grid3(8);
    let smooth = random_field(g, 1, 2);
    assert!(drop_nyquist(&smooth).sub(&smooth).unwrap().max_abs() < 1e-14);
    let alt = Field::from_fn(g, 0, |x| KForm::scalar((4.0 * x[1]).cos() + x[0].sin()));
    let kept = drop_nyquist(&alt);
    let expect = Field::from_fn(g, 0, |x| KForm::scalar(x[0].sin()));
    assert!(kept.sub(&expect).unwrap().max_abs() < 1e-14);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn d_squared_is_zero(seed in 0u64..1_000_000, k in 0usize..5) {
            let g = grid3(6);
            let f = Field::random_trig(g, k, 2, &mut SeededRng::new(seed));
            prop_assert!(d(&d(&f).unwrap()).unwrap().max_abs() < 1e-11);
        }

        #[test]
        fn exact_forms_keep_zero_mean(seed in 0u64..1_000_000, k in 0usize..6) {
            let g = grid3(6);
            let f = Field::random_trig(g, k, 2, &mut SeededRng::new(seed));
            prop_assert!(zero_mode(&d(&f).unwrap()).max_abs() < 1e-14);
        }
    }
}
