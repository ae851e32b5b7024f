//! Geometry-spec parsing, the ordered check suite, and machine-readable
//! reports. JSON reports are canonical: fixed key order, fixed float
//! formatting, no timing data, so identical spec + seed gives identical bytes.

use crate::construction::{Assembly, Half};
use crate::kahler::{KahlerData, PotentialSpec};
use crate::models::{self, CpModel, FlagModel, ProjectiveModel};
use crate::sampling::Sampler;
use crate::series::C64;
use serde::Deserialize;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("spec parse error: {0}")]
    Parse(String),
    #[error("spec validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitTerm {
    pub z: Vec<u8>,
    pub zt: Vec<u8>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCfg {
    #[serde(default = "d_overlap")]
    pub overlap: usize,
    #[serde(default = "d_legendrian")]
    pub legendrian: usize,
    #[serde(default = "d_real_slice")]
    pub real_slice: usize,
    #[serde(default = "d_cross")]
    pub cross_check: usize,
    #[serde(default = "d_base_radius")]
    pub base_radius: f64,
    #[serde(default = "d_fibre_min")]
    pub fibre_min: f64,
    #[serde(default = "d_fibre_max")]
    pub fibre_max: f64,
    #[serde(default = "d_cross_radius")]
    pub cross_radius: f64,
}

fn d_overlap() -> usize {
    50
}
fn d_legendrian() -> usize {
    20
}
fn d_real_slice() -> usize {
    50
}
fn d_cross() -> usize {
    100
}
fn d_base_radius() -> f64 {
    0.3
}
fn d_fibre_min() -> f64 {
    0.5
}
fn d_fibre_max() -> f64 {
    2.0
}
fn d_cross_radius() -> f64 {
    0.08
}

impl Default for SampleCfg {
    fn default() -> Self {
        SampleCfg {
            overlap: d_overlap(),
            legendrian: d_legendrian(),
            real_slice: d_real_slice(),
            cross_check: d_cross(),
            base_radius: d_base_radius(),
            fibre_min: d_fibre_min(),
            fibre_max: d_fibre_max(),
            cross_radius: d_cross_radius(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolCfg {
    #[serde(default = "d_series")]
    pub series: f64,
    #[serde(default = "d_sampled")]
    pub sampled: f64,
    #[serde(default = "d_exact")]
    pub exact: f64,
    #[serde(default = "d_degenerate")]
    pub degenerate: f64,
}

fn d_series() -> f64 {
    1e-10
}
fn d_sampled() -> f64 {
    1e-8
}
fn d_exact() -> f64 {
    1e-12
}
fn d_degenerate() -> f64 {
    1e-14
}

impl Default for TolCfg {
    fn default() -> Self {
        TolCfg {
            series: d_series(),
            sampled: d_sampled(),
            exact: d_exact(),
            degenerate: d_degenerate(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub coefficients: Option<Vec<ExplicitTerm>>,
    pub n: usize,
    pub c: f64,
    #[serde(default = "d_order")]
    pub order: u32,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default)]
    pub samples: SampleCfg,
    #[serde(default)]
    pub tolerances: TolCfg,
    #[serde(default)]
    pub cross_check: Option<String>,
}

fn d_order() -> u32 {
    8
}
fn d_seed() -> u64 {
    7
}

/// Parse and validate a geometry spec from JSON text.
pub fn parse_spec(text: &str) -> Result<GeometrySpec, SpecError> {
    let spec: GeometrySpec =
        serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
    validate_spec(&spec)?;
    Ok(spec)
}

pub fn validate_spec(spec: &GeometrySpec) -> Result<(), SpecError> {
    if !(4..=12).contains(&spec.order) {
        return Err(SpecError::Validation(format!(
            "order: {} outside [4, 12]",
            spec.order
        )));
    }
    if !(1..=3).contains(&spec.n) {
        return Err(SpecError::Validation(format!(
            "n: {} outside [1, 3]",
            spec.n
        )));
    }
    match (&spec.name, &spec.coefficients) {
        (Some(_), Some(_)) => {
            return Err(SpecError::Validation(
                "name, coefficients: give exactly one".into(),
            ))
        }
        (None, None) => {
            return Err(SpecError::Validation(
                "name, coefficients: one is required".into(),
            ))
        }
        _ => {}
    }
    if let Some(name) = &spec.name {
        if models::builtin_spec(name).is_err() {
            return Err(SpecError::Validation(format!(
                "name: unknown builtin `{name}`"
            )));
        }
    }
    let t = &spec.tolerances;
    for (label, v) in [
        ("series", t.series),
        ("sampled", t.sampled),
        ("exact", t.exact),
        ("degenerate", t.degenerate),
    ] {
        if v <= 0.0 || v.is_nan() {
            return Err(SpecError::Validation(format!(
                "tolerances.{label}: must be positive"
            )));
        }
    }
    if spec.samples.fibre_min <= 0.0 || spec.samples.fibre_max <= spec.samples.fibre_min {
        return Err(SpecError::Validation(
            "samples.fibre_min/fibre_max: need 0 < min < max".into(),
        ));
    }
    if let Some(cc) = &spec.cross_check {
        match cc.as_str() {
            "example1" => {}
            "example2" if spec.n == 1 => {}
            "example2" => {
                return Err(SpecError::Validation(
                    "cross_check: example2 requires n = 1".into(),
                ))
            }
            other => {
                return Err(SpecError::Validation(format!(
                    "cross_check: unknown model `{other}`"
                )))
            }
        }
    }
    Ok(())
}

pub fn to_potential(spec: &GeometrySpec) -> PotentialSpec {
    if let Some(name) = &spec.name {
        models::builtin_spec(name).expect("validated")
    } else {
        PotentialSpec::Explicit(
            spec.coefficients
                .as_ref()
                .expect("validated")
                .iter()
                .map(|t| (t.z.clone(), t.zt.clone(), C64::new(t.re, t.im)))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Degenerate,
}

impl CheckStatus {
    fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub id: &'static str,
    pub property: &'static str,
    pub status: CheckStatus,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub samples: usize,
    pub note: Option<String>,
    pub millis: f64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub spec: GeometrySpec,
    pub checks: Vec<CheckRecord>,
    pub aborted: Option<String>,
}

impl Report {
    pub fn overall_pass(&self) -> bool {
        self.aborted.is_none() && self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Stable identifiers of the full suite, in execution order.
pub fn suite_ids(with_cross_check: bool) -> Vec<&'static str> {
    let mut ids = vec![
        "input-validation",
        "curvature-identity",
        "affine-coordinates",
        "build-half-10",
        "build-half-01",
        "darboux-form",
        "contact-nondegeneracy",
        "euler-invariance",
        "moment-linearity",
        "divisor-structure",
        "legendrian-foliation",
        "transition-roundtrip",
        "overlap-scaling",
        "real-structure-involution",
        "real-structure-kernel",
        "fixed-point-metric",
    ];
    if with_cross_check {
        ids.push("model-cross-check");
    }
    ids
}

fn threads_hint() -> usize {
    std::env::var("QFK_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(1)
        .min(16)
}

/// Map items to residuals and take the max, chunked over scoped threads when
/// QFK_THREADS asks for it. The reduction order is fixed, so the result is
/// deterministic either way.
fn max_residual<T: Sync>(
    items: &[T],
    f: impl Fn(&T) -> Result<f64, String> + Sync,
) -> Result<f64, String> {
    let threads = threads_hint();
    if threads <= 1 || items.len() < 2 * threads {
        let mut worst: f64 = 0.0;
        for it in items {
            worst = worst.max(f(it)?);
        }
        return Ok(worst);
    }
    let chunk = items.len().div_ceil(threads);
    let fref = &f;
    let results: Vec<Result<f64, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let mut worst: f64 = 0.0;
                    for it in part {
                        worst = worst.max(fref(it)?);
                    }
                    Ok(worst)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut worst: f64 = 0.0;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(worst)
}

struct Runner {
    spec: GeometrySpec,
    filter: Option<Vec<String>>,
    records: Vec<CheckRecord>,
}

impl Runner {
    fn enabled(&self, id: &str) -> bool {
        match &self.filter {
            None => true,
            Some(ids) => ids.iter().any(|x| x == id),
        }
    }

    fn push(
        &mut self,
        id: &'static str,
        property: &'static str,
        tolerance: f64,
        samples: usize,
        started: Instant,
        outcome: Result<(f64, Option<CheckStatus>), String>,
    ) {
        let millis = started.elapsed().as_secs_f64() * 1e3;
        let rec = match outcome {
            Ok((residual, forced)) => {
                let status = forced.unwrap_or(if residual <= tolerance {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                });
                CheckRecord {
                    id,
                    property,
                    status,
                    residual: Some(residual),
                    tolerance,
                    samples,
                    note: None,
                    millis,
                }
            }
            Err(msg) => CheckRecord {
                id,
                property,
                status: CheckStatus::Fail,
                residual: None,
                tolerance,
                samples,
                note: Some(msg),
                millis,
            },
        };
        self.records.push(rec);
    }
}

/// Execute the ordered check suite for a validated spec. Failures become
/// report entries; construction-stage errors abort with a diagnostic record.
pub fn run_suite(spec: &GeometrySpec, filter: Option<&[String]>) -> Report {
    let mut r = Runner {
        spec: spec.clone(),
        filter: filter.map(|f| f.to_vec()),
        records: Vec::new(),
    };
    let tol = spec.tolerances.clone();
    let smp = spec.samples.clone();
    let seed = spec.seed;
    let n = spec.n;

    // Stage 1: input validation (always runs).
    let started = Instant::now();
    let kd = match KahlerData::load(&to_potential(spec), n, spec.c, spec.order) {
        Ok(kd) => {
            r.push(
                "input-validation",
                "potential reality, gauge normalization, positivity",
                tol.exact,
                0,
                started,
                Ok((0.0, None)),
            );
            Arc::new(kd)
        }
        Err(e) => {
            r.push(
                "input-validation",
                "potential reality, gauge normalization, positivity",
                tol.exact,
                0,
                started,
                Err(e.to_string()),
            );
            return Report {
                spec: r.spec,
                checks: r.records,
                aborted: Some("input validation failed".into()),
            };
        }
    };

    if r.enabled("curvature-identity") {
        let started = Instant::now();
        let out = kd
            .curvature_residual()
            .map(|res| (res, None))
            .map_err(|e| e.to_string());
        r.push(
            "curvature-identity",
            "connection curvature equals c times the Kähler form",
            tol.exact,
            0,
            started,
            out,
        );
    }
    if r.enabled("affine-coordinates") {
        let started = Instant::now();
        let out = kd
            .affine_residual()
            .map(|res| (res, None))
            .map_err(|e| e.to_string());
        r.push(
            "affine-coordinates",
            "fibre coordinates are affine along both leaf families",
            tol.exact,
            0,
            started,
            out,
        );
    }

    // Stage 2: construction (always runs; abort on error).
    let mut halves = Vec::with_capacity(2);
    for (id, property, which) in [
        (
            "build-half-10",
            "standardized chart and polynomial contact form, (1,0) half",
            Half::OneZero,
        ),
        (
            "build-half-01",
            "standardized chart and polynomial contact form, (0,1) half",
            Half::ZeroOne,
        ),
    ] {
        let started = Instant::now();
        match crate::construction::build_half(&kd, which) {
            Ok(h) => {
                r.push(
                    id,
                    property,
                    tol.series,
                    0,
                    started,
                    Ok((h.lift_defect, None)),
                );
                halves.push(h);
            }
            Err(e) => {
                r.push(id, property, tol.series, 0, started, Err(e.to_string()));
                return Report {
                    spec: r.spec,
                    checks: r.records,
                    aborted: Some("construction failed".into()),
                };
            }
        }
    }
    let h01 = halves.pop().unwrap();
    let h10 = halves.pop().unwrap();
    let assembly = Assembly {
        kd: Arc::clone(&kd),
        h10,
        h01,
    };

    if r.enabled("darboux-form") {
        let started = Instant::now();
        let out = (|| {
            let a = assembly.h10.darboux_residual().map_err(|e| e.to_string())?;
            let b = assembly.h01.darboux_residual().map_err(|e| e.to_string())?;
            Ok((a.max(b), None))
        })();
        r.push(
            "darboux-form",
            "contact form reduces to du0 + 2c Σ u_i dq_i",
            tol.series,
            0,
            started,
            out,
        );
    }

    if r.enabled("contact-nondegeneracy") {
        let started = Instant::now();
        let expected = (2.0 * spec.c).abs().powi(n as i32) * (1..=n).product::<usize>() as f64;
        let out = (|| {
            let (coeff, rest) = assembly
                .h10
                .contact_coefficient()
                .map_err(|e| e.to_string())?;
            if spec.c == 0.0 {
                let residual = coeff.norm().max(rest);
                let status = if residual <= tol.degenerate {
                    CheckStatus::Degenerate
                } else {
                    CheckStatus::Fail
                };
                Ok((residual, Some(status)))
            } else {
                Ok(((coeff.norm() - expected).abs().max(rest), None))
            }
        })();
        let tolerance = if spec.c == 0.0 {
            tol.degenerate
        } else {
            tol.series
        };
        r.push(
            "contact-nondegeneracy",
            "top coefficient of θ∧(dθ)^n is ±(2c)^n n!",
            tolerance,
            0,
            started,
            out,
        );
        if spec.c == 0.0 {
            if let Some(last) = r.records.last_mut() {
                last.note = Some("degenerate (hyperkahler limit)".into());
            }
        }
    }

    if r.enabled("euler-invariance") {
        let started = Instant::now();
        let out = (|| {
            let a = assembly
                .h10
                .euler_invariance_residual()
                .map_err(|e| e.to_string())?;
            let b = assembly
                .h01
                .euler_invariance_residual()
                .map_err(|e| e.to_string())?;
            Ok((a.max(b), None))
        })();
        r.push(
            "euler-invariance",
            "L_X θ = θ for the fibre scaling field",
            tol.series,
            0,
            started,
            out,
        );
    }

    if r.enabled("moment-linearity") {
        let started = Instant::now();
        let out = (|| {
            let a = assembly.h10.moment_residual().map_err(|e| e.to_string())?;
            let b = assembly.h01.moment_residual().map_err(|e| e.to_string())?;
            Ok((a.max(b), None))
        })();
        r.push(
            "moment-linearity",
            "the moment section θ(X) equals u0",
            tol.series,
            0,
            started,
            out,
        );
    }

    if r.enabled("divisor-structure") {
        let started = Instant::now();
        let out = (|| {
            let a = assembly.h10.divisor_residual().map_err(|e| e.to_string())?;
            let b = assembly.h01.divisor_residual().map_err(|e| e.to_string())?;
            Ok((a.max(b), None))
        })();
        r.push(
            "divisor-structure",
            "the moment section vanishes exactly on {u0 = 0}",
            tol.series,
            0,
            started,
            out,
        );
    }

    if r.enabled("legendrian-foliation") {
        let started = Instant::now();
        let mut sampler = Sampler::new(seed, "legendrian-foliation");
        let mut leaves: Vec<(C64, Vec<C64>)> =
            vec![(C64::new(0.0, 0.0), vec![C64::new(0.0, 0.0); n])];
        for _ in 0..smp.legendrian {
            leaves.push((
                sampler.annulus(0.0, 1.5),
                sampler.disc_vec(n, smp.base_radius),
            ));
        }
        let count = leaves.len();
        let out = max_residual(&leaves, |(a, q0)| {
            Ok(assembly
                .h10
                .legendrian_leaf_residual(*a, q0)
                .max(assembly.h01.legendrian_leaf_residual(*a, q0)))
        })
        .map(|res| (res, None));
        r.push(
            "legendrian-foliation",
            "affine hyperplanes {q = const, u0 = const} are Legendrian",
            tol.series,
            count,
            started,
            out,
        );
    }

    // Overlap sample points, generated upstairs and pushed down.
    let overlap_points: Vec<Vec<C64>> = {
        let mut sampler = Sampler::new(seed, "overlap-points");
        (0..smp.overlap)
            .map(|_| {
                let z = sampler.disc_vec(n, smp.base_radius);
                let zt = sampler.disc_vec(n, smp.base_radius);
                let t = sampler.annulus(smp.fibre_min, smp.fibre_max);
                let mut up = z;
                up.extend(zt);
                up.push(t);
                assembly.h10.psi.eval(&up)
            })
            .collect()
    };

    if r.enabled("transition-roundtrip") {
        let started = Instant::now();
        let out = max_residual(&overlap_points, |x| {
            let tr = assembly
                .transition(Half::OneZero, x)
                .map_err(|e| e.to_string())?;
            let back = assembly
                .transition(Half::ZeroOne, &tr.image)
                .map_err(|e| e.to_string())?;
            Ok(x.iter()
                .zip(&back.image)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max))
        })
        .map(|res| (res, None));
        r.push(
            "transition-roundtrip",
            "the gluing map composed both ways is the identity",
            tol.series,
            overlap_points.len(),
            started,
            out,
        );
    }

    if r.enabled("overlap-scaling") {
        let started = Instant::now();
        let out = max_residual(&overlap_points, |x| {
            let tr = assembly
                .transition(Half::OneZero, x)
                .map_err(|e| e.to_string())?;
            let theta = assembly.h10.theta_down.eval_covector(x);
            let theta_p = assembly.h01.theta_down.eval_covector(&tr.image);
            let dim = x.len();
            let mut pulled = vec![C64::new(0.0, 0.0); dim];
            for col in 0..dim {
                for row in 0..dim {
                    pulled[col] += tr.jacobian[row][col] * theta_p[row];
                }
            }
            let scale = theta
                .iter()
                .map(|v| (tr.lambda * v).norm())
                .fold(1.0, f64::max);
            let mut worst: f64 = 0.0;
            for i in 0..dim {
                worst = worst.max((pulled[i] - tr.lambda * theta[i]).norm() / scale);
            }
            // kernel agreement: vectors annihilated by θ stay annihilated
            let pivot = (0..dim)
                .max_by(|&a, &b| theta[a].norm().total_cmp(&theta[b].norm()))
                .unwrap();
            if theta[pivot].norm() > 1e-6 {
                for k in 0..dim {
                    if k == pivot {
                        continue;
                    }
                    let mut xi = vec![C64::new(0.0, 0.0); dim];
                    xi[k] = C64::new(1.0, 0.0);
                    xi[pivot] = -theta[k] / theta[pivot];
                    let mut img = vec![C64::new(0.0, 0.0); dim];
                    for row in 0..dim {
                        for col in 0..dim {
                            img[row] += tr.jacobian[row][col] * xi[col];
                        }
                    }
                    let pairing: C64 = theta_p.iter().zip(&img).map(|(a, b)| a * b).sum();
                    let xi_scale = xi.iter().map(|v| v.norm()).fold(1.0, f64::max);
                    worst = worst.max(pairing.norm() / (tr.lambda.norm() * xi_scale).max(1e-6));
                }
            }
            Ok(worst)
        })
        .map(|res| (res, None));
        r.push(
            "overlap-scaling",
            "the pulled-back contact form scales by −(e^η u0)^{−2}",
            tol.sampled,
            overlap_points.len(),
            started,
            out,
        );
    }

    if r.enabled("real-structure-involution") {
        let started = Instant::now();
        let mut sampler = Sampler::new(seed, "real-structure");
        let points: Vec<Vec<C64>> = (0..smp.real_slice)
            .map(|_| {
                let mut x = sampler.disc_vec(n, smp.base_radius);
                x.extend(sampler.disc_vec(n, smp.base_radius));
                x.push(sampler.annulus(smp.fibre_min, smp.fibre_max));
                x
            })
            .collect();
        let out = max_residual(&points, |xf| {
            let s1 = assembly
                .sigma_up_same_chart(xf)
                .map_err(|e| e.to_string())?;
            let s2 = assembly
                .sigma_up_same_chart(&s1)
                .map_err(|e| e.to_string())?;
            let invol = xf
                .iter()
                .zip(&s2)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let dist = xf
                .iter()
                .zip(&s1)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if dist < 0.1 {
                return Err(format!(
                    "fixed-point floor violated: |σ(x) − x| = {dist:.3e}"
                ));
            }
            // also the chart-to-chart involution downstairs
            let xd = {
                let mut up = xf.clone();
                let f = up.pop().unwrap();
                let base = up;
                let eta = assembly.kd.eta.eval_slice(&base);
                let t = (-eta).exp() * f;
                let mut upt = base;
                upt.push(t);
                assembly.h10.psi.eval(&upt)
            };
            let y = assembly.sigma_down(&xd);
            let back = assembly.sigma_down(&y);
            let invol2 = xd
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            Ok(invol.max(invol2))
        })
        .map(|res| (res, None));
        r.push(
            "real-structure-involution",
            "σ² = id with no fixed points",
            tol.series,
            smp.real_slice,
            started,
            out,
        );
    }

    if r.enabled("real-structure-kernel") {
        let started = Instant::now();
        let mut sampler = Sampler::new(seed, "real-structure-kernel");
        let points: Vec<(Vec<C64>, C64)> = (0..smp.real_slice)
            .map(|_| {
                (
                    sampler.disc_vec(n, smp.base_radius),
                    sampler.annulus(smp.fibre_min, smp.fibre_max),
                )
            })
            .collect();
        let out = max_residual(&points, |(z, f)| {
            let kernel = assembly
                .kernel_conjugation_residual(z, *f)
                .map_err(|e| e.to_string())?;
            let mut x: Vec<C64> = z.to_vec();
            x.extend(z.iter().map(|zi| zi.conj()));
            x.push(*f);
            let anti = assembly
                .sigma_antiholomorphy_residual(&x)
                .map_err(|e| e.to_string())?;
            Ok(kernel.max(anti))
        })
        .map(|res| (res, None));
        r.push(
            "real-structure-kernel",
            "σ is antiholomorphic and dσ maps the contact kernel to the conjugate kernel",
            tol.sampled,
            smp.real_slice,
            started,
            out,
        );
    }

    if r.enabled("fixed-point-metric") {
        let started = Instant::now();
        let mut sampler = Sampler::new(seed, "fixed-point-metric");
        let mut points: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]];
        for _ in 0..20 {
            points.push(sampler.disc_vec(n, smp.base_radius));
        }
        let count = points.len();
        let out = max_residual(&points, |z| {
            let (diff, min_eig) = assembly.fixed_point_metric(z);
            if min_eig <= 0.0 {
                return Err(format!(
                    "block metric not positive-definite: min eig {min_eig:.3e}"
                ));
            }
            Ok(diff)
        })
        .map(|res| (res, None));
        r.push(
            "fixed-point-metric",
            "the metric on the fixed set is two positive blocks of g",
            tol.exact,
            count,
            started,
            out,
        );
    }

    if spec.cross_check.is_some() && r.enabled("model-cross-check") {
        let started = Instant::now();
        let which = spec.cross_check.clone().unwrap();
        let out = (|| {
            let model: Box<dyn ProjectiveModel> = match which.as_str() {
                "example1" => Box::new(CpModel::new(n)),
                "example2" => Box::new(FlagModel::new(n).map_err(|e| e.to_string())?),
                other => return Err(format!("unknown model `{other}`")),
            };
            let rep = models::cross_check_with_radius(
                &assembly,
                model.as_ref(),
                smp.cross_check,
                seed,
                smp.cross_radius,
            )
            .map_err(|e| e.to_string())?;
            Ok((rep.jet_residual.max(rep.sample_residual), None))
        })();
        r.push(
            "model-cross-check",
            "two-chart atlas agrees with the projective model after fibre-linear identification",
            tol.sampled,
            smp.cross_check,
            started,
            out,
        );
    }

    Report {
        spec: r.spec,
        checks: r.records,
        aborted: None,
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.12e}")
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical JSON: fixed key order, %.12e floats, no timing fields.
pub fn emit_json(report: &Report) -> String {
    let spec = &report.spec;
    let mut out = String::new();
    out.push_str("{\n  \"config\": {\n");
    let potential = match (&spec.name, &spec.coefficients) {
        (Some(name), _) => name.clone(),
        (None, Some(terms)) => format!("explicit({} terms)", terms.len()),
        _ => "unspecified".into(),
    };
    let _ = writeln!(out, "    \"potential\": {},", json_string(&potential));
    let _ = writeln!(out, "    \"n\": {},", spec.n);
    let _ = writeln!(out, "    \"c\": {},", fmt_f64(spec.c));
    let _ = writeln!(out, "    \"order\": {},", spec.order);
    let _ = writeln!(out, "    \"seed\": {},", spec.seed);
    let _ = writeln!(
        out,
        "    \"samples\": {{\"overlap\": {}, \"legendrian\": {}, \"real_slice\": {}, \"cross_check\": {}, \"base_radius\": {}, \"fibre_min\": {}, \"fibre_max\": {}, \"cross_radius\": {}}},",
        spec.samples.overlap,
        spec.samples.legendrian,
        spec.samples.real_slice,
        spec.samples.cross_check,
        fmt_f64(spec.samples.base_radius),
        fmt_f64(spec.samples.fibre_min),
        fmt_f64(spec.samples.fibre_max),
        fmt_f64(spec.samples.cross_radius)
    );
    let _ = writeln!(
        out,
        "    \"tolerances\": {{\"series\": {}, \"sampled\": {}, \"exact\": {}, \"degenerate\": {}}},",
        fmt_f64(spec.tolerances.series),
        fmt_f64(spec.tolerances.sampled),
        fmt_f64(spec.tolerances.exact),
        fmt_f64(spec.tolerances.degenerate)
    );
    let cross = spec
        .cross_check
        .as_ref()
        .map(|s| json_string(s))
        .unwrap_or_else(|| "null".into());
    let _ = writeln!(out, "    \"cross_check\": {}", cross);
    out.push_str("  },\n  \"checks\": [\n");
    for (i, c) in report.checks.iter().enumerate() {
        let residual = c.residual.map(fmt_f64).unwrap_or_else(|| "null".into());
        let note = c
            .note
            .as_ref()
            .map(|s| json_string(s))
            .unwrap_or_else(|| "null".into());
        let _ = writeln!(
            out,
            "    {{\"id\": {}, \"property\": {}, \"status\": {}, \"max_residual\": {}, \"tolerance\": {}, \"samples\": {}, \"note\": {}}}{}",
            json_string(c.id),
            json_string(c.property),
            json_string(c.status.as_str()),
            residual,
            fmt_f64(c.tolerance),
            c.samples,
            note,
            if i + 1 < report.checks.len() { "," } else { "" }
        );
    }
    out.push_str("  ],\n");
    let aborted = report
        .aborted
        .as_ref()
        .map(|s| json_string(s))
        .unwrap_or_else(|| "null".into());
    let _ = writeln!(out, "  \"aborted\": {},", aborted);
    let _ = write!(
        out,
        "  \"overall\": {}\n}}\n",
        json_string(if report.overall_pass() {
            "pass"
        } else {
            "fail"
        })
    );
    out
}

/// Human-readable table, including wall times.
pub fn emit_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<26} {:<11} {:>13} {:>10} {:>8} {:>9}",
        "check", "status", "max residual", "tolerance", "samples", "time/ms"
    );
    for c in &report.checks {
        let residual = c
            .residual
            .map(|x| format!("{x:.3e}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<26} {:<11} {:>13} {:>10} {:>8} {:>9.2}",
            c.id,
            c.status.as_str(),
            residual,
            format!("{:.1e}", c.tolerance),
            c.samples,
            c.millis
        );
        if let Some(note) = &c.note {
            let _ = writeln!(out, "    note: {note}");
        }
    }
    if let Some(why) = &report.aborted {
        let _ = writeln!(out, "aborted: {why}");
    }
    let _ = writeln!(
        out,
        "overall: {}",
        if report.overall_pass() {
            "pass"
        } else {
            "fail"
        }
    );
    out
}

/// Coefficient dump of the main differential forms, canonical JSON.
pub fn emit_forms(spec: &GeometrySpec) -> Result<String, String> {
    let kd = Arc::new(
        KahlerData::load(&to_potential(spec), spec.n, spec.c, spec.order)
            .map_err(|e| e.to_string())?,
    );
    let assembly = Assembly::build(&kd).map_err(|e| e.to_string())?;
    let mut out = String::new();
    out.push_str("{\n");
    let omega = kd.kahler_form().map_err(|e| e.to_string())?;
    let conn = kd.connection_form().map_err(|e| e.to_string())?;
    let sections: Vec<(&str, &crate::exterior::Form)> = vec![
        ("kahler_form", &omega),
        ("connection_form", &conn),
        ("phi_10", &assembly.h10.phi_f),
        ("theta_up_10", &assembly.h10.theta_up),
        ("theta_down_10", &assembly.h10.theta_down),
        ("theta_down_01", &assembly.h01.theta_down),
    ];
    for (i, (label, form)) in sections.iter().enumerate() {
        let names: Vec<String> = form.chart.vars.iter().map(|v| v.name.clone()).collect();
        let _ = write!(out, "  {}: {{\"chart\": [", json_string(label));
        for (j, nm) in names.iter().enumerate() {
            let _ = write!(
                out,
                "{}{}",
                json_string(nm),
                if j + 1 < names.len() { ", " } else { "" }
            );
        }
        let _ = writeln!(out, "], \"degree\": {}, \"terms\": [", form.degree);
        let terms = crate::construction::form_terms(form);
        for (j, (indices, expo, coeff)) in terms.iter().enumerate() {
            let _ = writeln!(
                out,
                "    {{\"indices\": {:?}, \"exponent\": {:?}, \"re\": {}, \"im\": {}}}{}",
                indices,
                expo,
                fmt_f64(coeff.re),
                fmt_f64(coeff.im),
                if j + 1 < terms.len() { "," } else { "" }
            );
        }
        let _ = writeln!(
            out,
            "  ]}}{}",
            if i + 1 < sections.len() { "," } else { "" }
        );
    }
    out.push_str("}\n");
    Ok(out)
}

/// Dump of the standardization maps and the gluing-map jet at the base line.
pub fn emit_charts(spec: &GeometrySpec) -> Result<String, String> {
    let kd = Arc::new(
        KahlerData::load(&to_potential(spec), spec.n, spec.c, spec.order)
            .map_err(|e| e.to_string())?,
    );
    let assembly = Assembly::build(&kd).map_err(|e| e.to_string())?;
    let n = spec.n;
    let mut out = String::new();
    out.push_str("{\n");
    for (label, half) in [("psi_10", &assembly.h10), ("psi_01", &assembly.h01)] {
        let _ = writeln!(out, "  {}: {{", json_string(label));
        let comps = crate::construction::map_terms(&half.psi);
        let len = comps.len();
        for (i, (target, terms)) in comps.iter().enumerate() {
            let _ = write!(out, "    {}: [", json_string(target));
            for (j, (e, c)) in terms.iter().enumerate() {
                let _ = write!(
                    out,
                    "{{\"exponent\": {:?}, \"re\": {}, \"im\": {}}}{}",
                    e,
                    fmt_f64(c.re),
                    fmt_f64(c.im),
                    if j + 1 < terms.len() { ", " } else { "" }
                );
            }
            let _ = writeln!(out, "]{}", if i + 1 < len { "," } else { "" });
        }
        out.push_str("  },\n");
    }
    // transition 1-jet at the canonical line point (t = 1, base 0)
    let mut x = vec![C64::new(1.0, 0.0)];
    x.extend(vec![C64::new(0.0, 0.0); 2 * n]);
    let tr = assembly
        .transition(Half::OneZero, &x)
        .map_err(|e| e.to_string())?;
    out.push_str("  \"transition_at_base\": {\n    \"image\": [");
    for (i, v) in tr.image.iter().enumerate() {
        let _ = write!(
            out,
            "{{\"re\": {}, \"im\": {}}}{}",
            fmt_f64(v.re),
            fmt_f64(v.im),
            if i + 1 < tr.image.len() { ", " } else { "" }
        );
    }
    out.push_str("],\n    \"jacobian\": [\n");
    for (i, row) in tr.jacobian.iter().enumerate() {
        out.push_str("      [");
        for (j, v) in row.iter().enumerate() {
            let _ = write!(
                out,
                "{{\"re\": {}, \"im\": {}}}{}",
                fmt_f64(v.re),
                fmt_f64(v.im),
                if j + 1 < row.len() { ", " } else { "" }
            );
        }
        let _ = writeln!(out, "]{}", if i + 1 < tr.jacobian.len() { "," } else { "" });
    }
    let _ = write!(
        out,
        "    ],\n    \"lambda\": {{\"re\": {}, \"im\": {}}}\n  }}\n}}\n",
        fmt_f64(tr.lambda.re),
        fmt_f64(tr.lambda.im)
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_spec_examples() {
        let s = parse_spec(r#"{"name":"flat","n":1,"c":1}"#).unwrap();
        assert_eq!(s.order, 8);
        assert_eq!(s.samples.overlap, 50);
        assert!((s.tolerances.sampled - 1e-8).abs() < 1e-20);
        let s = parse_spec(r#"{"name":"fubini_study","n":2,"c":0.5,"order":8}"#).unwrap();
        assert_eq!(s.n, 2);
        // order too low
        assert!(matches!(
            parse_spec(r#"{"name":"flat","n":1,"c":1,"order":2}"#),
            Err(SpecError::Validation(_))
        ));
        // unknown field
        assert!(matches!(
            parse_spec(r#"{"name":"flat","n":1,"c":1,"bogus":3}"#),
            Err(SpecError::Parse(_))
        ));
        // both name and coefficients
        assert!(parse_spec(
            r#"{"name":"flat","coefficients":[{"z":[1],"zt":[1],"re":1.0}],"n":1,"c":1}"#
        )
        .is_err());
    }

    #[test]
    fn flat_suite_passes() {
        let spec = parse_spec(r#"{"name":"flat","n":1,"c":1}"#).unwrap();
        let report = run_suite(&spec, None);
        assert!(report.overall_pass(), "{}", emit_text(&report));
        assert_eq!(report.checks.len(), suite_ids(false).len());
        for (c, id) in report.checks.iter().zip(suite_ids(false)) {
            assert_eq!(c.id, id);
        }
    }

    #[test]
    fn cross_check_suite_is_complete() {
        let spec =
            parse_spec(r#"{"name":"fubini_study","n":1,"c":-1,"cross_check":"example1"}"#).unwrap();
        let report = run_suite(&spec, None);
        assert!(report.overall_pass(), "{}", emit_text(&report));
        let ids: Vec<&str> = report.checks.iter().map(|c| c.id).collect();
        assert_eq!(ids, suite_ids(true));
    }

    #[test]
    fn degenerate_c_zero_reported() {
        let spec = parse_spec(r#"{"name":"flat","n":1,"c":0}"#).unwrap();
        let report = run_suite(&spec, None);
        assert!(report.overall_pass(), "{}", emit_text(&report));
        let contact = report
            .checks
            .iter()
            .find(|c| c.id == "contact-nondegeneracy")
            .unwrap();
        assert_eq!(contact.status, CheckStatus::Degenerate);
        assert!(contact.note.as_deref().unwrap().contains("degenerate"));
    }

    #[test]
    fn forced_failure_with_tiny_tolerance() {
        let mut spec = parse_spec(r#"{"name":"fubini_study","n":1,"c":1}"#).unwrap();
        spec.tolerances.sampled = 1e-20;
        spec.tolerances.exact = 1e-20;
        let report = run_suite(&spec, None);
        assert!(!report.overall_pass());
    }

    #[test]
    fn deterministic_json_bytes() {
        let spec = parse_spec(r#"{"name":"fubini_study","n":1,"c":1,"seed":11}"#).unwrap();
        let a = emit_json(&run_suite(&spec, None));
        let b = emit_json(&run_suite(&spec, None));
        assert_eq!(a, b);
        assert!(
            serde_json::from_str::<serde_json::Value>(&a).is_ok(),
            "valid JSON"
        );
    }

    #[test]
    fn suite_filter() {
        let spec = parse_spec(r#"{"name":"flat","n":1,"c":1}"#).unwrap();
        let filter = vec!["darboux-form".to_string(), "moment-linearity".to_string()];
        let report = run_suite(&spec, Some(&filter));
        let ids: Vec<&str> = report.checks.iter().map(|c| c.id).collect();
        assert!(ids.contains(&"darboux-form"));
        assert!(ids.contains(&"moment-linearity"));
        assert!(!ids.contains(&"legendrian-foliation"));
    }

    #[test]
    fn input_validation_failure_aborts() {
        let spec =
            parse_spec(r#"{"coefficients":[{"z":[2],"zt":[0],"re":0.0,"im":1.0}],"n":1,"c":1}"#)
                .unwrap();
        let report = run_suite(&spec, None);
        assert!(!report.overall_pass());
        assert!(report.aborted.is_some());
        assert_eq!(report.checks.len(), 1);
    }
}
