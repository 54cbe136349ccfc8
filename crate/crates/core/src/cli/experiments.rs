//! One function per experiment. Each returns the checks and payload for a
//! single dimension.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

use super::{Check, Experiment, ExperimentConfig, Status};
use crate::error::{Error, Result};
use crate::harmonics::{self, MomentMethod, ThirdMomentTensor};
use crate::loglaplace::{self, Backend, LaplaceEvaluator};
use crate::measures::{AffineMap, Kind, MeasureSpec};
use crate::riemann::{self, Curve, RiemannianPackage};
use crate::rng;
use crate::shell::{self, ShellStats, DEFAULT_TAIL_C};
use crate::volumes::{self, ChainOptions};

pub(super) struct DimOutput {
    pub checks: Vec<Check>,
    pub result: Option<serde_json::Value>,
    pub shell: Vec<ShellStats>,
}

impl DimOutput {
    fn new(checks: Vec<Check>, result: impl Serialize) -> Result<Self> {
        Ok(Self { checks, result: Some(serde_json::to_value(result)?), shell: Vec::new() })
    }
}

const DEFAULT_TRIALS: usize = 20;
const DEFAULT_SHELL_COUNT: usize = 100_000;
const DEFAULT_KT_COUNT: usize = 100_000;
const DEFAULT_TENSOR_COUNT: usize = 200_000;
const DEFAULT_RANDOM_TENSORS: usize = 100;
const DEFAULT_CURVATURE_POINTS: usize = 5;
const QUANTILE_SAMPLES: usize = 10_000;

pub(super) fn dispatch(cfg: &ExperimentConfig, spec: &MeasureSpec, workers: usize) -> Result<DimOutput> {
    let n = spec.dim();
    match cfg.experiment {
        Experiment::LaplaceCheck => laplace_check(cfg, spec),
        Experiment::Gromov => gromov(cfg, spec),
        Experiment::Duality => duality(cfg, spec),
        Experiment::Invariance => invariance(cfg, spec),
        Experiment::Distance => distance(cfg, spec),
        Experiment::Shell => shell_run(cfg, spec, workers),
        Experiment::Harmonics => harmonics_run(cfg, spec, workers),
        Experiment::Lemma35 => lemma35(cfg, spec, workers),
        Experiment::Curvature => curvature(cfg, spec),
    }
    .map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::InvalidArgument(format!("{} at dim {n}: {other}", cfg.experiment)),
    })
}

/// The configured backend, else closed form when the kind has one, else
/// quadrature.
fn backend(cfg: &ExperimentConfig, spec: &MeasureSpec) -> Backend {
    match &cfg.backend {
        Some(b) => b.clone(),
        None if LaplaceEvaluator::new(spec, Backend::ClosedForm).is_ok() => Backend::ClosedForm,
        None => Backend::quadrature(),
    }
}

fn evaluator(cfg: &ExperimentConfig, spec: &MeasureSpec) -> Result<LaplaceEvaluator> {
    LaplaceEvaluator::new(spec, backend(cfg, spec))
}

fn point_radius(cfg: &ExperimentConfig) -> f64 {
    cfg.params.point_radius.unwrap_or(1.0)
}

fn trials(cfg: &ExperimentConfig) -> usize {
    cfg.count.unwrap_or(DEFAULT_TRIALS)
}

fn is_plain(spec: &MeasureSpec, kind: fn(&Kind) -> bool) -> bool {
    kind(spec.kind())
}

fn laplace_check(cfg: &ExperimentConfig, spec: &MeasureSpec) -> Result<DimOutput> {
    let n = spec.dim();
    let ev = evaluator(cfg, spec)?;
    let det = ev.is_deterministic();
    let zero = DVector::zeros(n);
    let jet = ev.jet(&zero)?;
    let moments = spec.moments()?;
    let mut checks = vec![Check::at_most("lambda_zero", n, jet.value.value.abs(), 1e-12)];

    // moments at the origin, with the combined standard error of both sides
    let mut grad_z: f64 = 0.0;
    let mut grad_diff: f64 = 0.0;
    for i in 0..n {
        let m = moments.barycenter_estimate(i);
        let se = (m.std_error.powi(2) + jet.grad_se.as_ref().map_or(0.0, |s| s[i].powi(2))).sqrt();
        let d = (jet.grad[i] - m.value).abs();
        grad_diff = grad_diff.max(d);
        grad_z = grad_z.max(if se > 0.0 { d / se } else { 0.0 });
    }
    let mut hess_z: f64 = 0.0;
    let mut hess_diff: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = moments.covariance_estimate(i, j);
            let se = (m.std_error.powi(2) + jet.hess_se.as_ref().map_or(0.0, |s| s[(i, j)].powi(2))).sqrt();
            let d = (jet.hess[(i, j)] - m.value).abs();
            hess_diff = hess_diff.max(d);
            hess_z = hess_z.max(if se > 0.0 { d / se } else { 0.0 });
        }
    }
    if det && moments.barycenter_se.is_none() {
        checks.push(Check::at_most("grad_zero_barycenter", n, grad_diff, 1e-6));
        checks.push(Check::at_most("hess_zero_covariance", n, hess_diff, 1e-6));
    } else {
        checks.push(Check::at_most("grad_zero_barycenter_z", n, grad_z, 5.0));
        checks.push(Check::at_most("hess_zero_covariance_z", n, hess_z, 5.0));
    }

    let count = trials(cfg);
    let mut rng = rng::stream(cfg.seed);
    let mut worst = 0.0f64;
    let mut worst_se = 0.0f64;
    let mut all_pass = true;
    let mut hess_worst = 0.0f64;
    let mut legendre_worst = 0.0f64;
    for _ in 0..count {
        let xi1 = ev.random_point(&mut rng, 0.5 * point_radius(cfg));
        let xi = ev.tilted(&xi1)?.random_point(&mut rng, 0.5 * point_radius(cfg));
        let r = loglaplace::tilt_shift_identity_check(&ev, &xi1, &xi)?;
        all_pass &= r.passes();
        if r.residual > worst {
            worst = r.residual;
            worst_se = r.std_error;
        }
        if det {
            hess_worst = hess_worst.max(loglaplace::tilt_hessian_shift_check(&ev, &xi1, &xi)?);
            let x = ev.grad(&xi)?;
            let back = ev.legendre(&x)?;
            legendre_worst = legendre_worst.max((back.argmax - &xi).amax());
        }
    }
    let seed = cfg.seed;
    checks.push(
        Check::flag("tilt_shift_identity", n, all_pass, worst).with_stats(worst_se, count as u64, seed),
    );
    if det {
        checks.push(Check::at_most("tilt_hessian_shift", n, hess_worst, 1e-8).with_stats(0.0, count as u64, seed));
        checks.push(Check::at_most("legendre_inverts_gradient", n, legendre_worst, 1e-6).with_stats(0.0, count as u64, seed));
    }
    DimOutput::new(
        checks,
        json!({
            "dim": n,
            "backend": backend(cfg, spec),
            "lambda_zero": jet.value,
            "grad_zero": jet.grad.as_slice(),
            "barycenter": moments.barycenter.as_slice(),
            "hess_zero": crate::linalg::matrix_to_rows(&jet.hess),
            "covariance": crate::linalg::matrix_to_rows(moments.covariance.as_matrix()),
        }),
    )
}

fn gromov(cfg: &ExperimentConfig, spec: &MeasureSpec) -> Result<DimOutput> {
    let n = spec.dim();
    let ev = evaluator(cfg, spec)?;
    let radius = match cfg.params.truncation_radius {
        Some(r) => r,
        None => volumes::default_truncation_radius(spec)?,
    };
    let grid = cfg.params.grid.unwrap_or_else(|| volumes::default_grid(n));
    let report = volumes::gromov_volume(&ev, radius, grid)?;
    let mut checks = Vec::new();
    if let Some(rel) = report.relative_error() {
        checks.push(Check::at_most("gromov_relative_error", n, rel, 1e-2));
    }
    checks.push(Check::diagnostic("gromov_estimate", n, report.gromov_estimate.value));
    checks.push(Check::diagnostic("raw_integral", n, report.raw_integral));
    checks.push(Check::diagnostic("shell_mass", n, report.shell_mass));
    DimOutput::new(checks, &report)
}

fn duality(cfg: &ExperimentConfig, spec: &MeasureSpec) -> Result<DimOutput> {
    let n = spec.dim();
    let pkg = RiemannianPackage::primal(evaluator(cfg, spec)?)?;
    let count = trials(cfg);
    let mut rng = rng::stream(cfg.seed);
    let (mut hess, mut psi) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let xi = pkg.evaluator().random_point(&mut rng, point_radius(cfg));
        hess = hess.max(pkg.dual_duality_check(&xi)?);
        let (p, d) = pkg.primal_dual_psi(&xi)?;
        psi = psi.max((p - d).abs());
    }
    let stats = |c: Check| c.with_stats(0.0, count as u64, cfg.seed);
    DimOutput::new(
        vec![
            stats(Check::at_most("inverse_hessian_duality", n, hess, 1e-5)),
            stats(Check::at_most("psi_equals_dual_potential", n, psi, 1e-6)),
        ],
        json!({"dim": n, "trials": count, "max_hessian_residual": hess, "max_psi_residual": psi}),
    )
}

fn random_map<R: Rng>(rng: &mut R, n: usize) -> Result<AffineMap> {
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| {
            let g: f64 = StandardNormal.sample(rng);
            if i == j { 1.0 + 0.3 * g } else { 0.3 * g }
        });
        let b = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        if a.determinant().abs() > 0.2 {
            return AffineMap::new(a, b);
        }
    }
}

fn invariance(cfg: &ExperimentConfig, spec: &MeasureSpec) -> Result<DimOutput> {
    let n = spec.dim();
    let count = cfg.count.unwrap_or(50);
    let mut rng = rng::stream(cfg.seed);
    let (mut metric, mut psi) = (0.0f64, 0.0f64);
    for k in 0..count {
        let t = random_map(&mut rng, n)?;
        let r = riemann::affine_invariance_check(spec, &t, 1, cfg.seed.wrapping_add(k as u64))?;
        metric = metric.max(r.metric);
        psi = psi.max(r.psi);
    }
    let shift = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let tr = riemann::affine_invariance_check(spec, &AffineMap::translation(shift), count, cfg.seed)?;
    let stats = |c: Check| c.with_stats(0.0, count as u64, cfg.seed);
    let mut checks = vec![
        stats(Check::at_most("affine_metric_pullback", n, metric, 1e-8)),
        stats(Check::at_most("affine_psi_pullback", n, psi, 1e-8)),
        stats(Check::at_most("translation_invariance", n, tr.max(), 1e-10)),
    ];
    let ev = evaluator(cfg, spec)?;
    if ev.is_deterministic() {
        let pkg = RiemannianPackage::primal(ev.clone())?;
        let mut worst = 0.0f64;
        for _ in 0..count {
            let xi1 = ev.random_point(&mut rng, 0.5 * point_radius(cfg));
            let xi = ev.tilted(&xi1)?.random_point(&mut rng, 0.5 * point_radius(cfg));
            let recentered = pkg.recenter(&xi1)?;
            let lhs = recentered.metric_matrix(&xi)?;
            let rhs = pkg.metric_matrix(&(&xi + &xi1))?;
            worst = worst.max(lhs.max_abs_diff(rhs.as_matrix()));
        }
        checks.push(stats(Check::at_most("recentered_metric_shift", n, worst, 1e-8)));
    }
    DimOutput::new(
        checks,
        json!({"dim": n, "trials": count, "metric": metric, "psi": psi, "translation": tr}),
    )
}

fn distance(cfg: &ExperimentConfig, spec: &MeasureSpec) -> Result<DimOutput> {
    let n = spec.dim();
    let pkg = RiemannianPackage::primal(evaluator(cfg, spec)?)?;
    let count = cfg.count.unwrap_or(50);
    let mut rng = rng::stream(cfg.seed);
    let mut excess = f64::NEG_INFINITY;
    let mut ratio = 0.0f64;
    // keeps 2ξ - η inside the box of half width `point_radius`
    let r = point_radius(cfg) / 3.0;
    for _ in 0..count {
        let eta = pkg.evaluator().random_point(&mut rng, r);
        let xi = pkg.evaluator().random_point(&mut rng, r);
        let len = pkg.path_length(&Curve::segment(&eta, &xi)?)?;
        let bound = pkg.distance_upper_bound(&xi, &eta)?;
        excess = excess.max(len - bound);
        if bound > 0.0 {
            ratio = ratio.max(len / bound);
        }
    }
    let mut checks = vec![
        Check::at_most("segment_length_minus_bound", n, excess, 1e-8).with_stats(0.0, count as u64, cfg.seed),
        Check::diagnostic("max_length_over_bound", n, ratio),
    ];
    let mut gaussian = serde_json::Value::Null;
    if is_plain(spec, |k| matches!(k, Kind::GaussianStd)) {
        let mut e1 = DVector::zeros(n);
        e1[0] = 1.0;
        let zero = DVector::zeros(n);
        let bound = pkg.distance_upper_bound(&e1, &zero)?;
        let len = pkg.path_length(&Curve::segment(&zero, &e1)?)?;
        checks.push(Check::at_most("gaussian_bound_is_sqrt2", n, (bound - 2f64.sqrt()).abs(), 1e-10));
        checks.push(Check::at_most("gaussian_length_is_1", n, (len - 1.0).abs(), 1e-10));
        gaussian = json!({"bound": bound, "length": len});
    }
    DimOutput::new(
        checks,
        json!({"dim": n, "pairs": count, "max_excess": excess, "max_ratio": ratio, "gaussian_e1": gaussian}),
    )
}

fn shell_run(cfg: &ExperimentConfig, spec: &MeasureSpec, workers: usize) -> Result<DimOutput> {
    let n = spec.dim();
    let count = cfg.count.unwrap_or(DEFAULT_SHELL_COUNT);
    let tail_c = cfg.params.tail_c.unwrap_or(DEFAULT_TAIL_C);
    let stats = shell::shell_stats(spec, count, cfg.seed, tail_c, workers)?;
    let (cnt, seed) = (count as u64, cfg.seed);
    let mut checks = Vec::new();
    let (a, b) = (stats.var_radius, stats.quad_functional);
    let gap_se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    checks.push(
        Check::flag("left_inequality", n, stats.left_inequality_holds(), a.value - b.value)
            .with_stats(gap_se, cnt, seed)
            .with_message("var_radius - quad; passes below 5 se"),
    );
    if is_plain(spec, |k| matches!(k, Kind::GaussianStd)) {
        checks.push(
            Check::at_most("gaussian_quad_is_2_z", n, b.z_score(2.0).abs(), 5.0).with_stats(b.std_error, cnt, seed),
        );
    }
    let root_n = (n as f64).sqrt();
    if is_plain(spec, |k| matches!(k, Kind::ProductExponential)) {
        let s = stats.sigma_underline;
        checks.push(Check::at_most("exp_sigma_u_is_2_z", n, s.z_score(2.0).abs(), 5.0).with_stats(s.std_error, cnt, seed));
        let theta = DVector::from_element(n, 1.0 / root_n);
        let d = stats.directional(&theta)?;
        checks.push(
            Check::at_most("exp_directional_is_2sqrtn_z", n, d.value.z_score(2.0 * root_n).abs(), 5.0)
                .with_stats(d.value.std_error, cnt, seed),
        );
        if let Some(c) = d.closed_form {
            checks.push(Check::at_most("exp_directional_closed_form", n, (c - 2.0 * root_n).abs(), 1e-12));
        }
    }
    if spec.is_even() {
        let z = (0..n)
            .map(|i| if stats.v_vector_se[i] > 0.0 { stats.v_vector[i].abs() / stats.v_vector_se[i] } else { 0.0 })
            .fold(0.0, f64::max);
        checks.push(Check::at_most("even_v_is_zero_z", n, z, 5.0).with_stats(0.0, cnt, seed));
    }
    let mut rng = rng::stream(cfg.seed ^ 0x5eed);
    let mut cs_ok = true;
    let mut cs_worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let theta: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let r = stats.cauchy_schwarz(&theta.normalize())?;
        let se = (r.lhs.std_error.powi(2) + r.rhs.std_error.powi(2)).sqrt();
        cs_ok &= r.lhs.value <= r.rhs.value + 5.0 * se;
        cs_worst = cs_worst.max(r.lhs.value - r.rhs.value);
    }
    if spec.check_isotropic(harmonics::ISOTROPY_TOL).is_ok() {
        checks.push(Check::flag("cauchy_schwarz", n, cs_ok, cs_worst).with_stats(0.0, cnt, seed));
    }
    checks.push(Check::diagnostic("sigma_u", n, stats.sigma_underline.value).with_stats(stats.sigma_underline.std_error, cnt, seed));
    checks.push(Check::diagnostic("tail_fourth", n, stats.tail_fourth.value).with_stats(stats.tail_fourth.std_error, cnt, seed));
    let mut out = DimOutput::new(checks, &stats)?;
    out.shell.push(stats);
    Ok(out)
}

fn tensor_method(cfg: &ExperimentConfig, spec: &MeasureSpec, workers: usize) -> MomentMethod {
    if harmonics::third_moment(spec, MomentMethod::ClosedForm).is_ok() {
        MomentMethod::ClosedForm
    } else {
        MomentMethod::MonteCarlo { count: cfg.count.unwrap_or(DEFAULT_TENSOR_COUNT), seed: cfg.seed, workers }
    }
}

fn random_tensor<R: Rng>(rng: &mut R, n: usize) -> Result<ThirdMomentTensor> {
    let raw: Vec<f64> = (0..n * n * n).map(|_| StandardNormal.sample(rng)).collect();
    ThirdMomentTensor::symmetrized(n, &raw)
}

fn harmonics_run(cfg: &ExperimentConfig, spec: &MeasureSpec, workers: usize) -> Result<DimOutput> {
    let n = spec.dim();
    spec.check_isotropic(harmonics::ISOTROPY_TOL)?;
    let t = harmonics::third_moment(spec, tensor_method(cfg, spec, workers))?;
    let report = harmonics::prop37_check(&t)?;
    let mut checks = vec![Check::flag("sphere_integral_bound", n, report.holds, report.margin)];
    let lap = harmonics::harmonic_part(&t)?.laplacian();
    checks.push(Check::flag("harmonic_part_laplacian_zero", n, lap.is_zero(), 0.0));
    let d = harmonics::decomposition(&t)?;
    checks.push(Check::flag("harmonic_radial_orthogonal", n, num_traits::Zero::is_zero(&d.cross), harmonics::to_f64(&d.cross)));
    checks.push(Check::flag(
        "parseval_split",
        n,
        d.total == &d.harmonic + &d.radial,
        harmonics::to_f64(&(&d.total - &d.harmonic - &d.radial)),
    ));
    let tensors = cfg.params.random_tensors.unwrap_or(DEFAULT_RANDOM_TENSORS);
    let mut rng = rng::stream(cfg.seed);
    let mut held = 0usize;
    let mut min_margin = f64::INFINITY;
    for _ in 0..tensors {
        let r = harmonics::prop37_check(&random_tensor(&mut rng, n)?)?;
        held += r.holds as usize;
        min_margin = min_margin.min(r.margin);
    }
    if tensors > 0 {
        checks.push(
            Check::flag("random_tensors_bound", n, held == tensors, min_margin).with_stats(0.0, tensors as u64, cfg.seed),
        );
    }
    let q = harmonics::cubic_quantiles(&t, QUANTILE_SAMPLES, cfg.seed)?;
    for (lvl, v) in q.levels.iter().zip(&q.n_abs_f) {
        checks.push(
            Check::diagnostic(&format!("n_abs_f_q{}", (lvl * 100.0).round()), n, *v)
                .with_stats(0.0, QUANTILE_SAMPLES as u64, cfg.seed),
        );
    }
    DimOutput::new(
        checks,
        json!({"dim": n, "tensor": &t, "v": t.v().as_slice(), "bound": &report, "quantiles": &q}),
    )
}

fn lemma35(cfg: &ExperimentConfig, spec: &MeasureSpec, workers: usize) -> Result<DimOutput> {
    let n = spec.dim();
    let opts = ChainOptions {
        directions: cfg.params.directions.unwrap_or(ChainOptions::default().directions),
        seed: cfg.seed,
        ..ChainOptions::default()
    };
    let chain = volumes::lemma35_chain(spec, backend(cfg, spec), &opts)?;
    let mut checks = vec![
        Check::flag("ratio_bound", n, chain.ratio_holds, chain.max_ratio)
            .with_stats(0.0, chain.samples as u64, cfg.seed),
        Check::diagnostic("sigma_hat", n, chain.sigma_hat),
        Check::diagnostic("t", n, chain.t),
        Check::diagnostic("min_det", n, chain.min_det),
        Check::diagnostic("det_exponent", n, chain.det_exponent),
        Check::diagnostic("volume_constant", n, chain.volume_constant),
    ];
    let ev = evaluator(cfg, spec)?;
    let kt_count = cfg.params.kt_count.unwrap_or(DEFAULT_KT_COUNT);
    let kt = volumes::kt_volume(&ev, chain.t, kt_count, None, cfg.seed, workers);
    let kt_value = match &kt {
        Ok(r) => {
            checks.push(
                Check::diagnostic("kt_volume", n, r.volume.value).with_stats(r.volume.std_error, r.volume.count, r.volume.seed),
            );
            serde_json::to_value(r)?
        }
        Err(e) => {
            checks.push(Check { status: Status::Diagnostic, ..Check::error("kt_volume", n, e) });
            json!({"error": e.to_string()})
        }
    };
    DimOutput::new(checks, json!({"dim": n, "chain": &chain, "kt": kt_value}))
}

fn curvature(cfg: &ExperimentConfig, spec: &MeasureSpec) -> Result<DimOutput> {
    let n = spec.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("sectional curvature needs dim >= 2".into()));
    }
    let pkg = RiemannianPackage::primal(evaluator(cfg, spec)?)?;
    let points = cfg.count.unwrap_or(DEFAULT_CURVATURE_POINTS);
    let mut rng = rng::stream(cfg.seed);
    let mut u = DVector::zeros(n);
    u[0] = 1.0;
    let mut v = DVector::zeros(n);
    v[1] = 1.0;
    let mut values = Vec::with_capacity(points);
    for _ in 0..points {
        let p = pkg.evaluator().random_point(&mut rng, point_radius(cfg));
        values.push(pkg.curvature_probe(&p, &u, &v)?);
    }
    let worst = values.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    // affine images of product laws have flat metrics too
    let check = if spec.is_product() {
        Check::at_most("product_curvature_zero", n, worst, 1e-3)
    } else {
        Check::diagnostic("max_abs_curvature", n, worst)
    };
    DimOutput::new(
        vec![check.with_stats(0.0, points as u64, cfg.seed)],
        json!({"dim": n, "points": points, "curvatures": values}),
    )
}

