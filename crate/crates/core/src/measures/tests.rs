use super::*;
use crate::quadrature::GaussLegendre;
use crate::rng::stream;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

pub(crate) fn triangle() -> Vec<Halfspace> {
    vec![
        Halfspace { normal: vec![-1.0, 0.0], offset: 0.0 },
        Halfspace { normal: vec![0.0, -1.0], offset: 0.0 },
        Halfspace { normal: vec![1.0, 2.0], offset: 2.0 },
    ]
}

fn zoo(n: usize) -> Vec<MeasureSpec> {
    vec![
        MeasureSpec::gaussian(n).unwrap(),
        MeasureSpec::cube(n, 1.0).unwrap(),
        MeasureSpec::ball(n, 1.0).unwrap(),
        MeasureSpec::simplex(n).unwrap(),
        MeasureSpec::crosspolytope(n).unwrap(),
        MeasureSpec::product_exponential(n).unwrap(),
    ]
}

#[test]
fn gaussian_log_density_at_origin() {
    let g = MeasureSpec::gaussian(1).unwrap();
    let v = g.log_density(&DVector::from_vec(vec![0.0])).unwrap();
    // oracle: the density integrates to one on a wide interval
    let rule = GaussLegendre::new(200);
    let mass = rule.integrate(-15.0, 15.0, |x| {
        g.log_density(&DVector::from_vec(vec![x])).unwrap().value.exp()
    });
    assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(v.value, -0.9189385332046727, epsilon = 1e-12);
    assert!(v.normalized);
}

#[test]
fn log_density_support_and_normalizers() {
    let e = MeasureSpec::product_exponential(1).unwrap();
    assert_eq!(
        e.log_density(&DVector::from_vec(vec![-2.0])).unwrap().value,
        f64::NEG_INFINITY
    );
    let c = MeasureSpec::cube(2, 1.0).unwrap();
    assert_abs_diff_eq!(
        c.log_density(&DVector::zeros(2)).unwrap().value,
        (0.25f64).ln(),
        epsilon = 1e-15
    );
    let p = MeasureSpec::polytope(2, triangle()).unwrap();
    let inside = p.log_density(&DVector::from_vec(vec![0.2, 0.2])).unwrap();
    assert_eq!(inside.value, 0.0);
    assert!(!inside.normalized);
    assert!(matches!(
        c.log_density(&DVector::zeros(3)),
        Err(Error::DimensionMismatch { expected: 2, got: 3 })
    ));
}

#[test]
fn affine_image_density_changes_variables() {
    let c = MeasureSpec::cube(2, 1.0).unwrap();
    let map = AffineMap::new(
        DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]),
        DVector::from_vec(vec![1.0, 0.0]),
    )
    .unwrap();
    let img = MeasureSpec::affine_image(&c, map).unwrap();
    assert_abs_diff_eq!(img.support_volume().unwrap(), 12.0, epsilon = 1e-12);
    let v = img.log_density(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
    assert_abs_diff_eq!(v.value, -(12f64.ln()), epsilon = 1e-12);
}

#[test]
fn sampler_examples() {
    let n = 100_000;
    // product exponential: centered
    let e = MeasureSpec::product_exponential(3).unwrap();
    let xs = e.sample(&mut stream(1), n).unwrap();
    for k in 0..3 {
        let m = xs.iter().map(|x| x[k]).sum::<f64>() / n as f64;
        assert!(m.abs() < 4.0 / (n as f64).sqrt(), "coord {k}: {m}");
    }
    // ball radius 1 in the plane: E|X|² by a polar-integral oracle
    let rule = GaussLegendre::new(20);
    let oracle = rule.integrate(0.0, 1.0, |r| r * r * 2.0 * std::f64::consts::PI * r)
        / std::f64::consts::PI;
    assert_abs_diff_eq!(oracle, 0.5, epsilon = 1e-14);
    let b = MeasureSpec::ball(2, 1.0).unwrap();
    let r2: Vec<f64> = b
        .sample(&mut stream(2), n)
        .unwrap()
        .iter()
        .map(|x| x.norm_squared())
        .collect();
    let (m, se) = crate::estimate::mean_and_se(&r2);
    assert!((m - oracle).abs() < 4.0 * se, "{m} ± {se}");
    // gaussian: identity covariance
    let g = MeasureSpec::gaussian(5).unwrap();
    let xs = g.sample(&mut stream(3), n).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let vals: Vec<f64> = xs.iter().map(|x| x[i] * x[j]).collect();
            let (m, se) = crate::estimate::mean_and_se(&vals);
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((m - target).abs() < 4.0 * se, "({i},{j}) {m} ± {se}");
        }
    }
}

#[test]
fn sample_rejects_zero_count() {
    let g = MeasureSpec::gaussian(2).unwrap();
    assert!(g.sample(&mut stream(0), 0).is_err());
}

#[test]
fn moments_examples() {
    let w = 3f64.sqrt();
    let rule = GaussLegendre::new(10);
    let var = rule.integrate(-w, w, |t| t * t / (2.0 * w));
    assert_abs_diff_eq!(var, 1.0, epsilon = 1e-14);
    let c = MeasureSpec::cube(2, w).unwrap().moments().unwrap();
    assert_abs_diff_eq!(c.covariance.as_matrix()[(0, 0)], var, epsilon = 1e-14);
    assert_eq!(c.source, MomentSource::ClosedForm);
    assert!(c.is_isotropic(1e-14));

    let g = MeasureSpec::gaussian(4).unwrap().moments().unwrap();
    assert!(g.is_isotropic(0.0));

    // ball of radius √(n+2), n = 4: radial oracle E|X|²/n
    let r = 6f64.sqrt();
    let radial = GaussLegendre::new(10).integrate(0.0, r, |s| s * s * 4.0 * s.powi(3) / r.powi(4)) / 4.0;
    assert_abs_diff_eq!(radial, 1.0, epsilon = 1e-13);
    let b = MeasureSpec::ball(4, r).unwrap().moments().unwrap();
    assert_abs_diff_eq!(b.covariance.as_matrix()[(2, 2)], radial, epsilon = 1e-13);
}

#[test]
fn monte_carlo_moments_match_closed_forms() {
    // every built-in kind, 10⁶ samples, 5 standard errors entrywise
    for spec in zoo(3) {
        let exact = spec.moments().unwrap();
        let xs = spec.sample_parallel(17, 1_000_000, 4, &SamplerConfig::default()).unwrap();
        let n = 3;
        let rows = xs.len() / n;
        for i in 0..n {
            let col: Vec<f64> = (0..rows).map(|r| xs[r * n + i]).collect();
            let (m, se) = crate::estimate::mean_and_se(&col);
            assert!(
                (m - exact.barycenter[i]).abs() < 5.0 * se,
                "{} mean[{i}] {m} vs {}",
                spec.name(),
                exact.barycenter[i]
            );
            for j in i..n {
                let prod: Vec<f64> = (0..rows)
                    .map(|r| (xs[r * n + i] - exact.barycenter[i]) * (xs[r * n + j] - exact.barycenter[j]))
                    .collect();
                let (m, se) = crate::estimate::mean_and_se(&prod);
                let target = exact.covariance.as_matrix()[(i, j)];
                assert!((m - target).abs() < 5.0 * se, "{} cov[{i},{j}] {m} vs {target}", spec.name());
            }
        }
    }
}

#[test]
fn polytope_moments_fall_back_to_monte_carlo() {
    // triangle with vertices (0,0), (2,0), (0,1): barycenter (2/3, 1/3)
    let p = MeasureSpec::polytope(2, triangle()).unwrap();
    let m = p.moments().unwrap();
    assert_eq!(m.source, MomentSource::MonteCarlo);
    let se = m.barycenter_se.as_ref().unwrap();
    assert!((m.barycenter[0] - 2.0 / 3.0).abs() < 5.0 * se[0]);
    assert!((m.barycenter[1] - 1.0 / 3.0).abs() < 5.0 * se[1]);
    // covariance of a triangle: (1/36)(Σ vᵢvᵢᵀ... ) → var x = 2/9, var y = 1/18, cov = -1/18
    let cse = m.covariance_se.as_ref().unwrap();
    let c = m.covariance.as_matrix();
    for (i, j, exact) in [(0, 0, 2.0 / 9.0), (1, 1, 1.0 / 18.0), (0, 1, -1.0 / 18.0)] {
        assert!((c[(i, j)] - exact).abs() < 5.0 * cse[(i, j)], "({i},{j}) {}", c[(i, j)]);
    }
    assert_eq!(m.covariance_estimate(0, 0).count, 200_000);
}

#[test]
fn isotropize_examples() {
    let (map, _) = MeasureSpec::gaussian(3).unwrap().isotropize().unwrap();
    assert_abs_diff_eq!(map.linear_part().clone(), DMatrix::identity(3, 3), epsilon = 1e-15);

    let (map, img) = MeasureSpec::cube(2, 1.0).unwrap().isotropize().unwrap();
    assert_abs_diff_eq!(
        map.linear_part().clone(),
        DMatrix::identity(2, 2) * 3f64.sqrt(),
        epsilon = 1e-14
    );
    assert!(img.moments().unwrap().is_isotropic(1e-12));

    // undo an affine decoration of an isotropic measure
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.0, 1.5, 0.4, 0.2, 0.0, 0.7]);
    let shift = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let base = MeasureSpec::product_exponential(3).unwrap();
    let decorated = MeasureSpec::affine_image(&base, AffineMap::new(a, shift).unwrap()).unwrap();
    let (_, iso) = decorated.isotropize().unwrap();
    let m = iso.moments().unwrap();
    assert!(m.barycenter.amax() < 1e-8);
    assert!(m.covariance.max_abs_diff(&DMatrix::identity(3, 3)) < 1e-8);

    let simplex = MeasureSpec::simplex(3).unwrap();
    let (_, iso) = simplex.isotropize().unwrap();
    assert!(iso.moments().unwrap().is_isotropic(1e-10));
}

#[test]
fn isotropize_rejects_near_singular_covariance() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-7]);
    let spec = MeasureSpec::affine_image(&MeasureSpec::gaussian(2).unwrap(), AffineMap::linear(a).unwrap()).unwrap();
    assert!(matches!(spec.isotropize(), Err(Error::Singular(_))));
}

#[test]
fn isotropized_samples_whiten() {
    let spec = MeasureSpec::simplex(3).unwrap();
    let (map, _) = spec.isotropize().unwrap();
    let xs = spec.sample_parallel(5, 1_000_000, 4, &SamplerConfig::default()).unwrap();
    let ys: Vec<DVector<f64>> = xs
        .chunks_exact(3)
        .map(|c| map.apply(&DVector::from_column_slice(c)))
        .collect();
    for i in 0..3 {
        for j in i..3 {
            let vals: Vec<f64> = ys.iter().map(|y| y[i] * y[j]).collect();
            let (m, se) = crate::estimate::mean_and_se(&vals);
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((m - target).abs() < 5.0 * se, "({i},{j}) {m}");
        }
    }
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(MeasureSpec::gaussian(0).is_err());
    assert!(MeasureSpec::cube(2, -1.0).is_err());
    assert!(MeasureSpec::ball(2, 0.0).is_err());
    let unbounded = vec![Halfspace { normal: vec![1.0, 0.0], offset: 1.0 }];
    assert!(matches!(
        MeasureSpec::polytope(2, unbounded),
        Err(Error::UnboundedPolytope)
    ));
    let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
    assert!(AffineMap::linear(singular).is_err());
}

#[test]
fn nested_affine_images_compose() {
    let c = MeasureSpec::cube(2, 1.0).unwrap();
    let t1 = AffineMap::translation(DVector::from_vec(vec![1.0, 2.0]));
    let t2 = AffineMap::linear(DMatrix::identity(2, 2) * 2.0).unwrap();
    let once = MeasureSpec::affine_image(&c, t1).unwrap();
    let twice = MeasureSpec::affine_image(&once, t2).unwrap();
    let (core, map) = twice.core();
    assert_eq!(core, &c);
    assert_eq!(map.unwrap().shift().as_slice(), &[2.0, 4.0]);
}

#[test]
fn json_document_shape() {
    let c = MeasureSpec::cube(2, 1.5).unwrap();
    let s = serde_json::to_string(&c).unwrap();
    assert_eq!(s, r#"{"kind":"uniform_cube","dim":2,"params":{"half_width":1.5}}"#);
    let g: MeasureSpec = serde_json::from_str(r#"{"kind":"gaussian_std","dim":3}"#).unwrap();
    assert_eq!(g, MeasureSpec::gaussian(3).unwrap());
    let err = serde_json::from_str::<MeasureSpec>(r#"{"kind":"uniform_ball","dim":2,"params":{}}"#)
        .unwrap_err()
        .to_string();
    assert!(err.contains("radius"), "{err}");
    assert!(serde_json::from_str::<MeasureSpec>(r#"{"kind":"torus","dim":2}"#).is_err());
}

fn arb_spec() -> impl Strategy<Value = MeasureSpec> {
    let n = 1usize..4;
    n.prop_flat_map(|n| {
        let base = prop_oneof![
            Just(MeasureSpec::gaussian(n).unwrap()),
            (1e-3f64..1e3).prop_map(move |w| MeasureSpec::cube(n, w).unwrap()),
            (1e-3f64..1e3).prop_map(move |r| MeasureSpec::ball(n, r).unwrap()),
            Just(MeasureSpec::simplex(n).unwrap()),
            Just(MeasureSpec::product_exponential(n).unwrap()),
        ];
        let affine = proptest::option::of((
            proptest::collection::vec(-10.0f64..10.0, n * n),
            proptest::collection::vec(-1e6f64..1e6, n),
        ));
        (base, affine).prop_map(move |(base, affine)| match affine {
            None => base,
            Some((lin, shift)) => {
                let a = DMatrix::from_row_slice(n, n, &lin) + DMatrix::identity(n, n) * 25.0;
                MeasureSpec::affine_image(&base, AffineMap::new(a, DVector::from_vec(shift)).unwrap())
                    .unwrap()
            }
        })
    })
}

proptest! {
    #[test]
    fn json_round_trip_is_bit_exact(spec in arb_spec()) {
        let text = serde_json::to_string(&spec).unwrap();
        let back: MeasureSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn log_density_is_concave_on_segments(
        which in 0usize..6,
        a in proptest::collection::vec(-0.3f64..0.3, 3),
        b in proptest::collection::vec(-0.3f64..0.3, 3),
        lambda in 0.0f64..1.0,
    ) {
        let spec = &zoo(3)[which];
        // shift into the simplex's support
        let offset = if which == 3 { 0.31 } else { 0.0 };
        let x = DVector::from_vec(a).add_scalar(offset) * if which == 3 { 0.5 } else { 1.0 };
        let y = DVector::from_vec(b).add_scalar(offset) * if which == 3 { 0.5 } else { 1.0 };
        let fx = spec.log_density(&x).unwrap().value;
        let fy = spec.log_density(&y).unwrap().value;
        let fm = spec.log_density(&(&x * lambda + &y * (1.0 - lambda))).unwrap().value;
        if fx.is_finite() && fy.is_finite() {
            prop_assert!(fm >= lambda * fx + (1.0 - lambda) * fy - 1e-9);
        }
    }
}
