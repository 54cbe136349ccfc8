use super::*;
use crate::harmonics::ThirdMomentTensor;
use crate::rng;
use nalgebra::dvector;
use rand_distr::{Distribution, StandardNormal};

fn iso(spec: MeasureSpec) -> MeasureSpec {
    spec.isotropize().unwrap().1
}

fn zoo(n: usize) -> Vec<MeasureSpec> {
    vec![
        MeasureSpec::gaussian(n).unwrap(),
        iso(MeasureSpec::cube(n, 1.0).unwrap()),
        iso(MeasureSpec::ball(n, 1.0).unwrap()),
        iso(MeasureSpec::simplex(n).unwrap()),
        iso(MeasureSpec::crosspolytope(n).unwrap()),
        MeasureSpec::product_exponential(n).unwrap(),
    ]
}

#[test]
fn gaussian_quadratic_functional() {
    // E(|X|² - n)² = Var χ²_n = 2n
    let s = shell_stats(&MeasureSpec::gaussian(16).unwrap(), 1_000_000, 1, DEFAULT_TAIL_C, 4).unwrap();
    assert!(s.quad_functional.within(2.0, 5.0), "{:?}", s.quad_functional);
    assert!(s.left_inequality_holds());
}

#[test]
fn gaussian_radial_variance_one_dim() {
    // E(|X| - 1)² = 2 - 2E|X| with E|X| = √(2/π)
    let s = shell_stats(&MeasureSpec::gaussian(1).unwrap(), 1_000_000, 2, DEFAULT_TAIL_C, 4).unwrap();
    let exact = 2.0 - 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((exact - 0.404231).abs() < 1e-6);
    assert!(s.var_radius.within(exact, 5.0), "{:?}", s.var_radius);
}

#[test]
fn exponential_sigma_underline() {
    let spec = MeasureSpec::product_exponential(4).unwrap();
    let s = shell_stats(&spec, 1_000_000, 3, DEFAULT_TAIL_C, 4).unwrap();
    assert!(s.sigma_underline.within(2.0, 5.0), "{:?}", s.sigma_underline);
    assert_eq!(sigma_underline_closed(&spec).unwrap(), 2.0);
    assert_eq!(s.v_closed_form.as_deref(), Some(&[2.0, 2.0, 2.0, 2.0][..]));
}

#[test]
fn directional_functionals() {
    let spec = MeasureSpec::product_exponential(4).unwrap();
    let s = shell_stats(&spec, 1_000_000, 4, DEFAULT_TAIL_C, 4).unwrap();
    let d = s.directional(&dvector![0.5, 0.5, 0.5, 0.5]).unwrap();
    assert!(d.value.within(4.0, 5.0), "{:?}", d.value);
    assert_eq!(d.closed_form, Some(4.0));
    let e1 = s.directional(&dvector![1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(e1.value.within(2.0, 5.0), "{:?}", e1.value);
    assert!(d.value.value <= d.sup_bound.value + 1e-12);
    assert!(s.directional(&dvector![1.0, 1.0, 0.0, 0.0]).is_err());

    let g = MeasureSpec::gaussian(3).unwrap();
    let theta = dvector![0.6, 0.0, -0.8];
    let d = sigma_underline_directional(&g, &theta, 200_000, 5, 4).unwrap();
    assert!(d.value.within(0.0, 5.0), "{:?}", d.value);
}

#[test]
fn isotropic_constants() {
    let cube = 1.0 / (2.0 * 3f64.sqrt());
    for n in [1, 2, 5] {
        let c = isotropic_constant(&MeasureSpec::cube(n, 1.0).unwrap()).unwrap();
        assert!((c - cube).abs() < 1e-12, "{c}");
        let g = isotropic_constant(&MeasureSpec::gaussian(n).unwrap()).unwrap();
        assert!((g - (2.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-12);
        let e = isotropic_constant(&MeasureSpec::product_exponential(n).unwrap()).unwrap();
        assert!((e - (-1f64).exp()).abs() < 1e-12);
    }
    for n in [2, 4, 8, 16] {
        for spec in zoo(n) {
            let l = isotropic_constant(&spec).unwrap();
            assert!(l > 0.2, "{} n={n}: {l}", spec.name());
        }
    }
}

#[test]
fn left_inequality_on_zoo() {
    for n in [2, 4, 8, 16] {
        for (k, spec) in zoo(n).iter().enumerate() {
            let s = shell_stats(spec, 40_000, 10 + k as u64, DEFAULT_TAIL_C, 4).unwrap();
            assert!(s.left_inequality_holds(), "{} n={n}: {:?} vs {:?}", spec.name(), s.var_radius, s.quad_functional);
            assert!(s.tail_fourth.value >= 0.0);
        }
    }
}

#[test]
fn cauchy_schwarz_chain() {
    let mut rng = rng::stream(8);
    for spec in [MeasureSpec::product_exponential(4).unwrap(), iso(MeasureSpec::simplex(4).unwrap())] {
        let s = shell_stats(&spec, 200_000, 9, DEFAULT_TAIL_C, 4).unwrap();
        for _ in 0..20 {
            let g: DVector<f64> = DVector::from_fn(4, |_, _| StandardNormal.sample(&mut rng));
            let cs = s.cauchy_schwarz(&(&g / g.norm())).unwrap();
            let slack = 5.0 * (cs.lhs.std_error.powi(2) + cs.rhs.std_error.powi(2)).sqrt();
            assert!(cs.lhs.value <= cs.rhs.value + slack, "{cs:?}");
        }
    }
}

#[test]
fn even_measures_have_no_third_moment_vector() {
    let n = 3;
    for spec in [
        MeasureSpec::gaussian(n).unwrap(),
        iso(MeasureSpec::cube(n, 1.0).unwrap()),
        iso(MeasureSpec::ball(n, 1.0).unwrap()),
        iso(MeasureSpec::crosspolytope(n).unwrap()),
    ] {
        let s = shell_stats(&spec, 100_000, 21, DEFAULT_TAIL_C, 4).unwrap();
        for (v, se) in s.v_vector.iter().zip(&s.v_vector_se) {
            assert!(v.abs() <= 5.0 * se, "{}: {v} (se {se})", spec.name());
        }
    }
}

#[test]
fn shell_vector_matches_tensor_trace() {
    let spec = iso(MeasureSpec::simplex(3).unwrap());
    let s = shell_stats(&spec, 200_000, 30, DEFAULT_TAIL_C, 4).unwrap();
    let t: ThirdMomentTensor =
        third_moment(&spec, MomentMethod::MonteCarlo { count: 200_000, seed: 31, workers: 4 }).unwrap();
    let w = t.laplacian_vector() / 6.0;
    let tse = t.v_std_errors().unwrap();
    for k in 0..3 {
        let se = (s.v_vector_se[k].powi(2) + tse[k].powi(2)).sqrt();
        assert!((s.v_vector[k] - w[k]).abs() < 5.0 * se, "{k}: {} vs {}", s.v_vector[k], w[k]);
    }
}

#[test]
fn deterministic_in_seed_and_workers() {
    let spec = iso(MeasureSpec::ball(3, 1.0).unwrap());
    let a = shell_stats(&spec, 30_000, 1, DEFAULT_TAIL_C, 3).unwrap();
    let b = shell_stats(&spec, 30_000, 1, DEFAULT_TAIL_C, 3).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn rejects_non_isotropic() {
    let spec = MeasureSpec::cube(2, 1.0).unwrap();
    assert!(matches!(shell_stats(&spec, 1000, 1, 3.0, 1), Err(Error::NotIsotropic(_))));
}

#[test]
fn csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shell.csv");
    let s = shell_stats(&MeasureSpec::gaussian(2).unwrap(), 1000, 1, 3.0, 2).unwrap();
    write_csv(&[s], &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "measure,dim,count,seed,var_radius,var_radius_se,quad,quad_se,sigma_u,sigma_u_se,v_norm,Lf,tail4,tail_C"
    );
    assert_eq!(text.lines().count(), 2);
}
