use super::*;
use nalgebra::dvector;
use proptest::prelude::*;
use rand::Rng;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn exp(n: usize) -> ThirdMomentTensor {
    third_moment(&MeasureSpec::product_exponential(n).unwrap(), MomentMethod::ClosedForm).unwrap()
}

fn random_tensor(n: usize, seed: u64) -> ThirdMomentTensor {
    let mut rng = rng::stream(seed);
    let raw: Vec<f64> = (0..n * n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
    ThirdMomentTensor::symmetrized(n, &raw).unwrap()
}

#[test]
fn closed_form_tensors() {
    let t = exp(2);
    assert_eq!(t.get(0, 0, 0), 2.0);
    assert_eq!(t.get(1, 1, 1), 2.0);
    assert_eq!(t.get(0, 0, 1), 0.0);
    assert_eq!(t.get(0, 1, 1), 0.0);
    let g = third_moment(&MeasureSpec::gaussian(3).unwrap(), MomentMethod::ClosedForm).unwrap();
    assert!(g.polynomial().unwrap().is_zero());
    let cube = MeasureSpec::cube(2, 1.0).unwrap();
    assert!(matches!(third_moment(&cube, MomentMethod::ClosedForm), Err(Error::NotIsotropic(_))));
}

#[test]
fn rotated_exponential_matches_monte_carlo() {
    // X = Q Y with Q orthogonal keeps isotropy; compare both routes
    let (c, s) = (0.6, 0.8);
    let rot = crate::measures::AffineMap::linear(nalgebra::DMatrix::from_row_slice(2, 2, &[c, -s, s, c])).unwrap();
    let spec = MeasureSpec::affine_image(&MeasureSpec::product_exponential(2).unwrap(), rot).unwrap();
    let closed = third_moment(&spec, MomentMethod::ClosedForm).unwrap();
    let mc = third_moment(&spec, MomentMethod::MonteCarlo { count: 400_000, seed: 2, workers: 4 }).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let se = mc.std_error(i, j, k).unwrap();
                assert!((closed.get(i, j, k) - mc.get(i, j, k)).abs() < 5.0 * se, "{i}{j}{k}");
            }
        }
    }
}

#[test]
fn even_measure_tensor_vanishes_statistically() {
    let spec = MeasureSpec::cube(2, 1.0).unwrap().isotropize().unwrap().1;
    let t = third_moment(&spec, MomentMethod::MonteCarlo { count: 200_000, seed: 9, workers: 4 }).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                assert!(t.get(i, j, k).abs() < 5.0 * t.std_error(i, j, k).unwrap());
            }
        }
    }
}

#[test]
fn cubic_form_values() {
    let t = exp(2);
    assert_eq!(t.f_eval(&dvector![1.0, 0.0]).unwrap(), 2.0);
    assert_eq!(t.f_eval(&dvector![0.0, 0.0]).unwrap(), 0.0);
    let h = 0.5f64.sqrt();
    assert!((t.f_eval(&dvector![h, h]).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    assert!(t.f_eval(&dvector![1.0]).is_err());
}

#[test]
fn laplacian_vectors() {
    assert_eq!(exp(2).laplacian_vector(), dvector![12.0, 12.0]);
    let g = third_moment(&MeasureSpec::gaussian(2).unwrap(), MomentMethod::ClosedForm).unwrap();
    assert_eq!(g.laplacian_vector(), dvector![0.0, 0.0]);
}

#[test]
fn laplacian_of_cubic_is_linear_form() {
    for t in [exp(3), random_tensor(3, 1), random_tensor(4, 2)] {
        let w = t.laplacian_vector();
        let lap = t.polynomial().unwrap().laplacian();
        // exact: Δ F = 6 Σ_k (Σ_i T_iik) θ_k
        let six = BigRational::from_integer(6.into());
        let expected = SpherePolynomial::linear(&t.v_exact().unwrap()).scale(&six);
        assert_eq!(lap, expected);
        for k in 0..t.dim() {
            let mut e = vec![0; t.dim()];
            e[k] = 1;
            assert!((to_f64(&lap.coefficient(&e)) - w[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn harmonic_part_is_harmonic() {
    let g = third_moment(&MeasureSpec::gaussian(2).unwrap(), MomentMethod::ClosedForm).unwrap();
    assert!(harmonic_part(&g).unwrap().is_zero());
    assert!(harmonic_part(&exp(2)).unwrap().laplacian().is_zero());
    for seed in 0..20 {
        assert!(harmonic_part(&random_tensor(3, seed)).unwrap().laplacian().is_zero());
    }
}

#[test]
fn sphere_integrals() {
    for n in 1..5 {
        let mut a = vec![0; n];
        a[0] = 2;
        let p = SpherePolynomial::monomial(a, q(1, 1));
        assert_eq!(sphere_integral_poly(&p), q(1, n as i64));
    }
    assert_eq!(sphere_integral_poly(&SpherePolynomial::monomial(vec![6, 0], q(1, 1))), q(5, 16));
    let v = vec![q(3, 1), q(-1, 2), q(2, 1)];
    let lin = SpherePolynomial::linear(&v);
    let v2 = v.iter().fold(BigRational::zero(), |a, x| a + x * x);
    assert_eq!(sphere_integral_poly(&lin.mul(&lin).unwrap()), v2 / q(3, 1));
}

#[test]
fn sphere_bound_exponential_plane() {
    let r = prop37_check(&exp(2)).unwrap();
    assert_eq!(r.lhs_exact, "5/2");
    assert_eq!(r.rhs_exact, "9/4");
    assert_eq!(r.margin, 0.25);
    assert!(r.holds);
    assert!((r.ratio.unwrap() - 10.0 / 9.0).abs() < 1e-15);
    let g = third_moment(&MeasureSpec::gaussian(3).unwrap(), MomentMethod::ClosedForm).unwrap();
    let r = prop37_check(&g).unwrap();
    assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, None));
}

#[test]
fn sphere_bound_random_tensors_dim4() {
    for seed in 0..100 {
        let r = prop37_check(&random_tensor(4, 100 + seed)).unwrap();
        assert!(r.holds, "seed {seed}: {r:?}");
    }
}

#[test]
fn decomposition_is_orthogonal() {
    for t in [exp(2), exp(3), random_tensor(3, 5), random_tensor(4, 6)] {
        let d = decomposition(&t).unwrap();
        assert!(d.cross.is_zero());
        assert_eq!(d.total, &d.harmonic + &d.radial);
        // ∫ R² = (6/(2n+4))² |v|²/n on the sphere
        let n = t.dim() as i64;
        let v2 = t.v_exact().unwrap().iter().fold(BigRational::zero(), |a, x| a + x * x);
        assert_eq!(d.radial, q(36, (2 * n + 4) * (2 * n + 4)) * v2 / q(n, 1));
    }
}

#[test]
fn tensor_json_lists_sorted_triples() {
    let v: serde_json::Value = serde_json::to_value(exp(2)).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    assert_eq!(entries[0], serde_json::json!([0, 0, 0, 2.0]));
    assert_eq!(v["source"]["type"], "closed_form");
}

#[test]
fn cubic_quantiles_report() {
    let r = cubic_quantiles(&exp(4), 2000, 1).unwrap();
    assert_eq!(r.abs_f.len(), 3);
    assert!(r.abs_f.windows(2).all(|w| w[0] <= w[1]));
    assert!(r.abs_f[2] <= 2.0 + 1e-12);
    assert!((r.n_abs_f[0] - 4.0 * r.abs_f[0]).abs() < 1e-12);
}

proptest! {
    #[test]
    fn cubic_is_homogeneous(seed in 0u64..1000, l in -3.0..3.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64) {
        let t = random_tensor(3, seed);
        let th = dvector![a, b, c];
        let lhs = t.f_eval(&(&th * l)).unwrap();
        let rhs = l.powi(3) * t.f_eval(&th).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }
}
