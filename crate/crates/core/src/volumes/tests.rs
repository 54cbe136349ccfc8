use super::*;
use crate::riemann::RiemannianPackage;
use nalgebra::{dvector, DMatrix};
use proptest::prelude::*;
use std::f64::consts::PI;

fn closed(spec: &MeasureSpec) -> LaplaceEvaluator {
    LaplaceEvaluator::new(spec, Backend::ClosedForm).unwrap()
}

fn quad(spec: &MeasureSpec) -> LaplaceEvaluator {
    LaplaceEvaluator::new(spec, Backend::quadrature()).unwrap()
}

fn iso(spec: MeasureSpec) -> MeasureSpec {
    spec.isotropize().unwrap().1
}

#[test]
fn exact_volumes() {
    assert!((volume_exact(&MeasureSpec::cube(2, 1.0).unwrap()).unwrap() - 4.0).abs() < 1e-14);
    assert!((volume_exact(&MeasureSpec::ball(2, 1.0).unwrap()).unwrap() - PI).abs() < 1e-14);
    let map = AffineMap::linear(DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 1.0])).unwrap();
    let img = MeasureSpec::affine_image(&MeasureSpec::cube(2, 1.0).unwrap(), map).unwrap();
    assert!((volume_exact(&img).unwrap() - 12.0).abs() < 1e-12);
    assert!(volume_exact(&MeasureSpec::gaussian(2).unwrap()).is_err());
}

#[test]
fn volume_radius() {
    assert!((vrad(PI, 2).unwrap() - 1.0).abs() < 1e-14);
    assert!((vrad(4.0, 2).unwrap() - (4.0 / PI).sqrt()).abs() < 1e-14);
    assert!((vrad(4.0 / 3.0 * PI, 3).unwrap() - 1.0).abs() < 1e-14);
    assert!(vrad(0.0, 2).is_err());
    assert!(vrad(-1.0, 2).is_err());
}

#[test]
fn inradius_of_bodies() {
    assert!((inradius(&MeasureSpec::cube(2, 1.5).unwrap()).unwrap() - 1.5).abs() < 1e-9);
    assert!((inradius(&MeasureSpec::ball(3, 0.8).unwrap()).unwrap() - 0.8).abs() < 1e-12);
    let simplex = inradius(&MeasureSpec::simplex(2).unwrap()).unwrap();
    assert!((simplex - 1.0 / (2.0 + 2f64.sqrt())).abs() < 1e-9);
    let cross = inradius(&MeasureSpec::crosspolytope(2).unwrap()).unwrap();
    assert!((cross - 0.5f64.sqrt()).abs() < 1e-9);
    let iso_cube = inradius(&iso(MeasureSpec::cube(2, 1.0).unwrap())).unwrap();
    assert!((iso_cube - 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn gromov_cube_one_dim() {
    let spec = MeasureSpec::cube(1, 1.0).unwrap();
    let r = gromov_volume(&closed(&spec), 50.0, 4000).unwrap();
    assert!((r.gromov_estimate.value - 2.0).abs() < 1e-3, "{r:?}");
    // ∫_{-R}^{R} Λ'' = 2Λ'(R) = 2(coth R - 1/R)
    let truncated = |r: f64| 2.0 * (1.0 / r.tanh() - 1.0 / r);
    assert!((r.raw_integral - truncated(50.0)).abs() < 1e-9);
    assert!((r.half_radius_integral - truncated(25.0)).abs() < 1e-9);
    assert!(r.shell_mean > 0.0 && r.shell_mass > 0.0 && r.shell_mass < 0.01);
}

#[test]
fn gromov_cube_and_disc() {
    let cube = MeasureSpec::cube(2, 1.0).unwrap();
    let r = gromov_volume(&closed(&cube), 40.0, 600).unwrap();
    assert!(r.relative_error().unwrap() < 1e-2, "{r:?}");
    let disc = MeasureSpec::ball(2, 1.0).unwrap();
    let r = gromov_volume(&quad(&disc), 40.0, 600).unwrap();
    assert!((r.gromov_estimate.value - PI).abs() / PI < 1e-2, "{r:?}");
}

#[test]
fn gromov_default_truncation_on_compact_kinds() {
    let specs = [
        MeasureSpec::cube(1, 1.0).unwrap(),
        MeasureSpec::cube(2, 0.7).unwrap(),
        MeasureSpec::ball(1, 1.0).unwrap(),
        MeasureSpec::ball(2, 1.0).unwrap(),
        MeasureSpec::simplex(2).unwrap(),
        MeasureSpec::crosspolytope(2).unwrap(),
        iso(MeasureSpec::cube(2, 1.0).unwrap()),
        iso(MeasureSpec::simplex(2).unwrap()),
    ];
    for spec in &specs {
        let backend = if spec.is_product() {
            Backend::ClosedForm
        } else {
            Backend::Quadrature { points_per_axis: Some(32), truncation_radius: None }
        };
        let ev = LaplaceEvaluator::new(spec, backend).unwrap();
        let grid = if spec.dim() == 1 { 4000 } else { 100 };
        let r = gromov_volume(&ev, default_truncation_radius(spec).unwrap(), grid).unwrap();
        assert!(r.gromov_estimate.value > 0.0);
        assert!(r.relative_error().unwrap() < 1e-2, "{}: {r:?}", spec.name());
    }
}

#[test]
fn gromov_rejections() {
    let g = MeasureSpec::gaussian(2).unwrap();
    assert!(matches!(gromov_volume(&closed(&g), 10.0, 50), Err(Error::Unsupported(_))));
    let cube = MeasureSpec::cube(2, 1.0).unwrap();
    let mc = LaplaceEvaluator::new(&cube, Backend::monte_carlo(1000, 1)).unwrap();
    assert!(matches!(gromov_volume(&mc, 10.0, 50), Err(Error::BackendUnavailable(_))));
    let cube4 = MeasureSpec::cube(4, 1.0).unwrap();
    assert!(gromov_volume(&closed(&cube4), 10.0, 10).is_err());
}

#[test]
fn volume_report_json() {
    let spec = MeasureSpec::cube(1, 1.0).unwrap();
    let r = gromov_volume(&closed(&spec), 50.0, 200).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in ["exact_volume", "gromov_estimate", "truncation_radius", "grid", "shell_mean", "backend"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn kt_membership_gaussian() {
    let ev = closed(&MeasureSpec::gaussian(2).unwrap());
    assert!(kt_contains(&ev, &dvector![0.0, 0.0], 1.0).unwrap());
    assert!(!kt_contains(&ev, &dvector![0.8, 0.0], 1.0).unwrap());
    assert!(kt_contains(&ev, &dvector![0.0, 0.7], 1.0).unwrap());
    let c = iso(MeasureSpec::cube(2, 1.0).unwrap());
    assert!(kt_contains(&closed(&c), &dvector![0.0, 0.0], 1.0).unwrap());
}

#[test]
fn kt_outside_domain_is_outside() {
    let exp = MeasureSpec::product_exponential(2).unwrap();
    let ev = closed(&exp);
    assert!(!kt_contains(&ev, &dvector![0.6, 0.0], 100.0).unwrap());
    assert!(kt_contains(&ev, &dvector![0.1, -0.1], 100.0).unwrap());
}

#[test]
fn kt_radial_extent_gaussian() {
    // Λ(2sθ) = 2s² ≤ t²
    let ev = closed(&MeasureSpec::gaussian(3).unwrap());
    let theta = dvector![1.0, 2.0, -2.0] / 3.0;
    for t in [0.5, 1.0, 1.7] {
        let rho = kt_radial_extent(&ev, &theta, t).unwrap();
        assert!((rho - t / 2f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn kt_volume_gaussian() {
    let ev = closed(&MeasureSpec::gaussian(2).unwrap());
    let r = kt_volume(&ev, 1.0, 200_000, None, 3, 4).unwrap();
    assert!(r.volume.within(PI / 2.0, 3.0), "{r:?}");
    assert!((vrad(r.volume.value, 2).unwrap() - 0.5f64.sqrt()).abs() < 5e-3);
    assert!(!r.touches_box);
    assert!((r.ratio_to_t_over_sqrt_n - r.volume_root * 2f64.sqrt()).abs() < 1e-12);
    let again = kt_volume(&ev, 1.0, 200_000, None, 3, 4).unwrap();
    assert_eq!(r.volume, again.volume);
}

/// Area of a star-shaped planar set from its radial function:
/// `½ ∫ ρ(θ)² dθ`.
fn polar_area(rho: impl Fn(f64) -> f64) -> f64 {
    let m = 2000;
    let h = 2.0 * PI / m as f64;
    (0..m).map(|k| 0.5 * rho(k as f64 * h).powi(2) * h).sum()
}

#[test]
fn kt_volume_isotropic_cube_matches_polar_quadrature() {
    let spec = iso(MeasureSpec::cube(2, 1.0).unwrap());
    let ev = closed(&spec);
    let r = kt_volume(&ev, 1.0, 1_000_000, None, 11, 4).unwrap();
    assert!(r.volume.value > 0.0 && r.ratio_to_t_over_sqrt_n.is_finite());
    let area = polar_area(|a| kt_radial_extent(&ev, &dvector![a.cos(), a.sin()], 1.0).unwrap());
    assert!(r.volume.within(area, 4.0), "{} vs {area} (se {})", r.volume.value, r.volume.std_error);
    assert!(!r.touches_box);
}

#[test]
fn kt_volume_low_acceptance() {
    let ev = closed(&MeasureSpec::gaussian(2).unwrap());
    assert!(matches!(
        kt_volume(&ev, 0.01, 10_000, Some(100.0), 1, 2),
        Err(Error::LowAcceptance(_))
    ));
}

/// Every sampled member of `K_t` is within distance bound `t` of 0.
#[test]
fn kt_inside_distance_ball() {
    use rand::Rng;
    let specs = [
        (MeasureSpec::gaussian(2).unwrap(), Backend::ClosedForm),
        (iso(MeasureSpec::cube(2, 1.0).unwrap()), Backend::ClosedForm),
        (iso(MeasureSpec::cube(3, 1.0).unwrap()), Backend::ClosedForm),
        (iso(MeasureSpec::ball(2, 1.0).unwrap()), Backend::quadrature()),
        (iso(MeasureSpec::crosspolytope(2).unwrap()), Backend::quadrature()),
    ];
    for (spec, backend) in specs {
        let ev = LaplaceEvaluator::new(&spec, backend).unwrap();
        let pkg = RiemannianPackage::primal(ev.clone()).unwrap();
        let zero = DVector::zeros(spec.dim());
        let mut rng = rng::stream(5);
        let mut found = 0;
        while found < 500 {
            let t = rng.random_range(0.5..2.0);
            let xi = ev.random_point(&mut rng, 2.0 * t);
            if kt_contains(&ev, &xi, t).unwrap() {
                found += 1;
                let d = pkg.distance_upper_bound(&xi, &zero).unwrap();
                assert!(d <= t + 1e-8, "{}: {d} > {t}", spec.name());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn kt_monotone_in_t(x in -2.0..2.0f64, y in -2.0..2.0f64, t1 in 0.1..3.0f64, dt in 0.0..2.0f64) {
        let ev = closed(&iso(MeasureSpec::cube(2, 1.0).unwrap()));
        let xi = dvector![x, y];
        if kt_contains(&ev, &xi, t1).unwrap() {
            prop_assert!(kt_contains(&ev, &xi, t1 + dt).unwrap());
        }
    }
}

#[test]
fn chain_isotropic_cube() {
    let spec = iso(MeasureSpec::cube(2, 1.0).unwrap());
    let r = lemma35_chain(&spec, Backend::ClosedForm, &ChainOptions::default()).unwrap();
    assert!(r.max_ratio.is_finite() && r.min_det.is_finite() && r.volume_constant.is_finite());
    assert!(r.min_det > 0.0);
    assert!(r.ratio_holds, "{r:?}");
    assert!(r.base_point_sigma < 1e-6);
    assert!(r.sigma_hat >= 1.0 && r.t >= 1.0 && r.t <= 2f64.sqrt());
    assert!((r.volume - 12.0).abs() < 1e-9);
}

#[test]
fn chain_isotropic_balls() {
    let opts = ChainOptions { directions: 16, ..ChainOptions::default() };
    for n in [2, 3] {
        let spec = iso(MeasureSpec::ball(n, 1.0).unwrap());
        let r = lemma35_chain(&spec, Backend::quadrature(), &opts).unwrap();
        assert!(r.ratio_holds, "{r:?}");
        assert!(r.min_det > 0.0 && r.volume_constant > 0.0);
    }
}

#[test]
fn chain_preconditions() {
    let opts = ChainOptions::default();
    let cube = MeasureSpec::cube(2, 1.0).unwrap();
    assert!(matches!(lemma35_chain(&cube, Backend::ClosedForm, &opts), Err(Error::NotIsotropic(_))));
    let simplex = iso(MeasureSpec::simplex(2).unwrap());
    assert!(lemma35_chain(&simplex, Backend::quadrature(), &opts).is_err());
    let g = MeasureSpec::gaussian(2).unwrap();
    assert!(lemma35_chain(&g, Backend::ClosedForm, &opts).is_err());
}
