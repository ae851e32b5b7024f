//! Built-in geometries and the two projective model spaces used as
//! independent oracles against the generic pipeline: the projective space
//! CP^{2n+1} glued from two bundle charts over CP^n, and the flag manifold
//! F_{1,2}(C^3) glued from two trivial bundle charts over a projective line.
//!
//! Both models expose their gluing in the same chart layout as the pipeline
//! downstairs charts (fibre block first, base block second), so a
//! fibre-linear identification can intertwine the transitions. The
//! identification is solved for by matching the Taylor expansion of the
//! intertwining defect through total degree two at the base point; sample
//! agreement at higher order is the actual test.

use crate::construction::{Assembly, ConstructionError, Half};
use crate::kahler::{KahlerData, KahlerError, PotentialSpec};
use crate::linalg;
use crate::sampling::Sampler;
use crate::series::{Series, SeriesError, VarSet, C64};
use std::sync::Arc;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ModelError {
    #[error("jet matching is singular: defect {0:.3e} (wrong curvature constant or wrong model)")]
    JetMatchSingular(f64),
    #[error("model `{0}` does not support n = {1}")]
    UnsupportedDimension(&'static str, usize),
    #[error("model transition undefined at a sample point")]
    UndefinedAtSample,
    #[error(transparent)]
    Kahler(#[from] KahlerError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Built-in geometry generator.
pub fn builtin(name: &str, n: usize, c: f64, order: u32) -> Result<KahlerData, KahlerError> {
    let spec = builtin_spec(name)?;
    KahlerData::load(&spec, n, c, order)
}

pub fn builtin_spec(name: &str) -> Result<PotentialSpec, KahlerError> {
    match name {
        "flat" => Ok(PotentialSpec::Flat),
        "fubini_study" => Ok(PotentialSpec::FubiniStudy),
        other => Err(KahlerError::UnknownBuiltin(other.to_string())),
    }
}

/// A model twistor space presented as two bundle charts and a gluing map,
/// in the pipeline layout (fibre_0..fibre_n, base_1..base_n).
pub trait ProjectiveModel {
    fn label(&self) -> &'static str;
    fn n(&self) -> usize;
    /// Curvature constant of the matching pipeline input in the η = cκ gauge.
    fn matching_c(&self) -> f64;
    /// Gluing map chart A → chart B at a numeric point.
    fn transition_numeric(&self, x: &[C64]) -> Option<Vec<C64>>;
    /// Gluing map on local series components (same layout).
    fn transition_jet(&self, comps: &[Series]) -> Result<Vec<Series>, SeriesError>;
}

/// CP^{2n+1} with homogeneous coordinates [x_0 : … : x_n : y_0 : … : y_n],
/// glued from the two standard affine bundle charts around {y = 0} and {x = 0}.
pub struct CpModel {
    pub n: usize,
}

impl CpModel {
    pub fn new(n: usize) -> CpModel {
        CpModel { n }
    }

    pub fn chart_a_to_homog(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut h = Vec::with_capacity(2 * n + 2);
        h.push(C64::new(1.0, 0.0));
        h.extend_from_slice(&x[n + 1..]); // ζ
        h.extend_from_slice(&x[..=n]); // ν
        h
    }

    /// The scalar action [λ x : λ^{-1} y].
    pub fn action(&self, lambda: C64, h: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut out = Vec::with_capacity(h.len());
        for xi in &h[..=n] {
            out.push(lambda * xi);
        }
        for yi in &h[n + 1..] {
            out.push(yi / lambda);
        }
        out
    }

    /// The real structure [x : y] ↦ [−ȳ : x̄].
    pub fn tau(&self, h: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut out = Vec::with_capacity(h.len());
        for yi in &h[n + 1..] {
            out.push(-yi.conj());
        }
        for xi in &h[..=n] {
            out.push(xi.conj());
        }
        out
    }

    /// Projective distance: 0 iff the points agree in CP^{2n+1}.
    pub fn projective_distance(a: &[C64], b: &[C64]) -> f64 {
        let (mut best_a, mut idx) = (0.0, 0);
        for (i, v) in a.iter().enumerate() {
            if v.norm() > best_a {
                best_a = v.norm();
                idx = i;
            }
        }
        if best_a == 0.0 || b[idx].norm() == 0.0 {
            return f64::INFINITY;
        }
        let (sa, sb) = (a[idx], b[idx]);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x / sa - y / sb).norm())
            .fold(0.0, f64::max)
    }

    /// The tautological contact form Σ (x_α dy_α − y_α dx_α) restricted to
    /// chart A, on an all-graded chart (ν_0..ν_n, ζ_1..ζ_n).
    pub fn contact_form_chart_a(&self, order: u32) -> crate::exterior::Form {
        let n = self.n;
        let mut names: Vec<String> = (0..=n).map(|a| format!("m{a}")).collect();
        for i in 0..n {
            names.push(format!("b{}", i + 1));
        }
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let ch = VarSet::graded(&refs);
        let one = Series::one(&ch, order);
        // θ_A = dν_0 + Σ_i (ζ_i dν_i − ν_i dζ_i)
        let mut theta = crate::exterior::Form::one_form_term(one, 0);
        for i in 0..n {
            let zeta = Series::variable(&ch, order, n + 1 + i);
            let nu = Series::variable(&ch, order, 1 + i);
            theta = theta
                .add(&crate::exterior::Form::one_form_term(zeta, 1 + i))
                .unwrap()
                .add(&crate::exterior::Form::one_form_term(nu.neg(), n + 1 + i))
                .unwrap();
        }
        theta
    }

    /// Generator of the fibre scaling in chart A.
    pub fn euler_chart_a(
        &self,
        order: u32,
        chart: &crate::exterior::Chart,
    ) -> crate::exterior::VectorField {
        let mut x = crate::exterior::VectorField::new(chart);
        for alpha in 0..=self.n {
            x = x.with(alpha, Series::variable(chart, order, alpha));
        }
        x
    }
}

impl ProjectiveModel for CpModel {
    fn label(&self) -> &'static str {
        "cp_projective_space"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn matching_c(&self) -> f64 {
        -1.0
    }

    fn transition_numeric(&self, x: &[C64]) -> Option<Vec<C64>> {
        let n = self.n;
        let nu0 = x[0];
        if nu0.norm() < 1e-8 {
            return None;
        }
        let mut out = Vec::with_capacity(2 * n + 1);
        out.push(C64::new(1.0, 0.0) / nu0); // ξ_0
        for i in 0..n {
            out.push(x[n + 1 + i] / nu0); // ξ_i = ζ_i/ν_0
        }
        for i in 0..n {
            out.push(x[1 + i] / nu0); // base: ζ̃_i = ν_i/ν_0
        }
        Some(out)
    }

    fn transition_jet(&self, comps: &[Series]) -> Result<Vec<Series>, SeriesError> {
        let n = self.n;
        let r0 = comps[0].reciprocal()?;
        let mut out = Vec::with_capacity(2 * n + 1);
        out.push(r0.clone());
        for i in 0..n {
            out.push(comps[n + 1 + i].mul(&r0)?);
        }
        for i in 0..n {
            out.push(comps[1 + i].mul(&r0)?);
        }
        Ok(out)
    }
}

/// A flag (l ⊂ K) in C^3: the line as a spanning vector, the plane as the
/// coefficient row of its defining equation.
#[derive(Debug, Clone)]
pub struct Flag {
    pub line: [C64; 3],
    pub plane_normal: [C64; 3],
}

impl Flag {
    fn dot(a: &[C64; 3], b: &[C64; 3]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn herm(a: &[C64; 3], b: &[C64; 3]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    }

    /// |n · l| scaled; zero iff the line lies in the plane.
    pub fn incidence_residual(&self) -> f64 {
        let num = Flag::dot(&self.plane_normal, &self.line).norm();
        let scale = (Flag::herm(&self.line, &self.line).norm()
            * Flag::herm(&self.plane_normal, &self.plane_normal).norm())
        .sqrt();
        num / scale.max(1e-300)
    }

    pub fn is_valid(&self) -> bool {
        let ln = Flag::herm(&self.line, &self.line).norm();
        let nn = Flag::herm(&self.plane_normal, &self.plane_normal).norm();
        ln > 1e-20 && nn > 1e-20 && self.incidence_residual() < 1e-10
    }

    /// The hermitian-orthogonal real structure (l, K) ↦ (K^⊥, l^⊥).
    pub fn perp(&self) -> Flag {
        let line = [
            self.plane_normal[0].conj(),
            self.plane_normal[1].conj(),
            self.plane_normal[2].conj(),
        ];
        let plane_normal = [
            self.line[0].conj(),
            self.line[1].conj(),
            self.line[2].conj(),
        ];
        Flag { line, plane_normal }
    }

    /// The scalar action (λ^{-1} e_0, λ e_1, λ e_2).
    pub fn action(&self, lambda: C64) -> Flag {
        let d = [C64::new(1.0, 0.0) / lambda, lambda, lambda];
        let line = [
            self.line[0] * d[0],
            self.line[1] * d[1],
            self.line[2] * d[2],
        ];
        let plane_normal = [
            self.plane_normal[0] / d[0],
            self.plane_normal[1] / d[1],
            self.plane_normal[2] / d[2],
        ];
        Flag { line, plane_normal }
    }

    fn parallel_distance(a: &[C64; 3], b: &[C64; 3]) -> f64 {
        let (mut best, mut idx) = (0.0, 0);
        for (i, v) in a.iter().enumerate() {
            if v.norm() > best {
                best = v.norm();
                idx = i;
            }
        }
        if best == 0.0 || b[idx].norm() == 0.0 {
            return f64::INFINITY;
        }
        let (sa, sb) = (a[idx], b[idx]);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x / sa - y / sb).norm())
            .fold(0.0, f64::max)
    }

    /// Zero iff the flags agree projectively.
    pub fn distance(&self, other: &Flag) -> f64 {
        Flag::parallel_distance(&self.line, &other.line).max(Flag::parallel_distance(
            &self.plane_normal,
            &other.plane_normal,
        ))
    }
}

/// The flag manifold F_{1,2}(C^3) glued from two trivial rank-2 bundle
/// charts over a projective line, the blow-down and the ⊥-gluing.
pub struct FlagModel;

impl FlagModel {
    pub fn new(n: usize) -> Result<FlagModel, ModelError> {
        if n != 1 {
            return Err(ModelError::UnsupportedDimension("flag_manifold", n));
        }
        Ok(FlagModel)
    }

    /// Chart A (around {l = a}): fibre (Q̃_1, Q̃_2), base r.
    /// l = span(e_0 + Q̃), K = {R_1 x_1 + R_2 x_2 = (Q̃·R) x_0} with R = (1, r).
    pub fn chart_a_to_flag(&self, x: &[C64]) -> Flag {
        let (q1, q2, r) = (x[0], x[1], x[2]);
        let qr = q1 + r * q2;
        Flag {
            line: [C64::new(1.0, 0.0), q1, q2],
            plane_normal: [-qr, C64::new(1.0, 0.0), r],
        }
    }

    /// Chart B (around {K = a^⊥}): fibre (L_1, L_2), base ω.
    /// l = span((L(w), w)) with w = (1, ω), K = {x_0 = L_1 x_1 + L_2 x_2}.
    pub fn chart_b_to_flag(&self, y: &[C64]) -> Flag {
        let (l1, l2, om) = (y[0], y[1], y[2]);
        Flag {
            line: [l1 + l2 * om, C64::new(1.0, 0.0), om],
            plane_normal: [C64::new(1.0, 0.0), -l1, -l2],
        }
    }
}

impl ProjectiveModel for FlagModel {
    fn label(&self) -> &'static str {
        "flag_manifold"
    }

    fn n(&self) -> usize {
        1
    }

    fn matching_c(&self) -> f64 {
        -0.5
    }

    fn transition_numeric(&self, x: &[C64]) -> Option<Vec<C64>> {
        let (q1, q2, r) = (x[0], x[1], x[2]);
        let den = q1 + r * q2;
        if q1.norm() < 1e-8 || den.norm() < 1e-8 {
            return None;
        }
        Some(vec![
            C64::new(1.0, 0.0) / den, // L_1
            r / den,                  // L_2
            q2 / q1,                  // ω
        ])
    }

    fn transition_jet(&self, comps: &[Series]) -> Result<Vec<Series>, SeriesError> {
        let q1 = &comps[0];
        let q2 = &comps[1];
        let r = &comps[2];
        let den = q1.add(&r.mul(q2)?)?;
        let l1 = den.reciprocal()?;
        let l2 = r.mul(&l1)?;
        let om = q2.mul(&q1.reciprocal()?)?;
        Ok(vec![l1, l2, om])
    }
}

/// Affine fibre-linear chart identification u ↦ (I + Σ_k base_k B_k) u,
/// solved for by jet matching.
#[derive(Debug, Clone)]
pub struct ChartIdentification {
    pub n: usize,
    /// B_k, one (n+1)×(n+1) matrix per base coordinate; side A then side B.
    pub m_side: Vec<Vec<Vec<C64>>>,
    pub n_side: Vec<Vec<Vec<C64>>>,
}

impl ChartIdentification {
    fn apply(mats: &[Vec<Vec<C64>>], base: &[C64], fibre: &[C64]) -> Vec<C64> {
        let dim = fibre.len();
        let mut out = fibre.to_vec();
        for (k, mk) in mats.iter().enumerate() {
            for row in 0..dim {
                for col in 0..dim {
                    out[row] += base[k] * mk[row][col] * fibre[col];
                }
            }
        }
        out
    }

    /// Pipeline chart A point → model chart A point.
    pub fn to_model_a(&self, x: &[C64]) -> Vec<C64> {
        let (fibre, base) = x.split_at(self.n + 1);
        let mut out = ChartIdentification::apply(&self.m_side, base, fibre);
        out.extend_from_slice(base);
        out
    }

    /// Pipeline chart B point → model chart B point.
    pub fn to_model_b(&self, x: &[C64]) -> Vec<C64> {
        let (fibre, base) = x.split_at(self.n + 1);
        let mut out = ChartIdentification::apply(&self.n_side, base, fibre);
        out.extend_from_slice(base);
        out
    }
}

pub struct CrossCheckReport {
    pub jet_residual: f64,
    pub sample_residual: f64,
    pub samples: usize,
    pub identification: ChartIdentification,
}

/// Local jet of the pipeline transition around (u_0, u, q) = (1, 0, 0),
/// in the layout (fibre.., base..) as series over (d0, u, q).
fn pipeline_jet(assembly: &Assembly, order: u32) -> Result<Vec<Series>, ModelError> {
    let n = assembly.kd.n;
    let mut names: Vec<String> = vec!["d0".into()];
    for i in 0..n {
        names.push(format!("u{}", i + 1));
    }
    for i in 0..n {
        names.push(format!("q{}", i + 1));
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let local = VarSet::graded(&refs);
    let one = Series::one(&local, order);
    let d0 = Series::variable(&local, order, 0);
    let recip0 = one.add(&d0)?.reciprocal()?;
    let u: Vec<Series> = (0..n)
        .map(|i| Series::variable(&local, order, 1 + i))
        .collect();
    let q: Vec<Series> = (0..n)
        .map(|i| Series::variable(&local, order, 1 + n + i))
        .collect();
    let w: Vec<Series> = u
        .iter()
        .map(|ui| ui.mul(&recip0))
        .collect::<Result<_, _>>()?;

    let h10 = &assembly.h10;
    let mut inv_subst = w.clone();
    inv_subst.extend(q.iter().cloned());
    let z: Vec<Series> = h10
        .base_inv
        .iter()
        .map(|s| s.compose(&inv_subst))
        .collect::<Result<_, _>>()?;

    // functions on the base chart (z.., zt..) take (z, q) here
    let mut base_subst = z.clone();
    base_subst.extend(q.iter().cloned());
    let eta_loc = assembly.kd.eta.compose(&base_subst)?;
    let v0 = eta_loc.scale(C64::new(-2.0, 0.0)).exp()?.mul(&recip0)?;
    let mut out = vec![v0.clone()];
    for i in 0..n {
        let rho = assembly.h01.p[i].compose(&base_subst)?;
        out.push(v0.mul(&rho)?);
    }
    out.extend(z);
    Ok(out)
}

/// Apply the affine fibre map (I + Σ base_k B_k) to local series components.
fn apply_affine_jet(
    mats: &[Vec<Vec<C64>>],
    base: &[Series],
    fibre: &[Series],
) -> Result<Vec<Series>, SeriesError> {
    let dim = fibre.len();
    let mut out = fibre.to_vec();
    for (k, mk) in mats.iter().enumerate() {
        for row in 0..dim {
            for col in 0..dim {
                let coeff = mk[row][col];
                if coeff.norm() == 0.0 {
                    continue;
                }
                out[row] = out[row].add(&base[k].mul(&fibre[col])?.scale(coeff))?;
            }
        }
    }
    Ok(out)
}

/// One full defect evaluation: returns the coefficient vector over a FIXED
/// monomial basis so probe columns align.
fn jet_defect_aligned(
    model: &dyn ProjectiveModel,
    pipe_jet: &[Series],
    local_fibre: &[Series],
    local_base: &[Series],
    m_side: &[Vec<Vec<C64>>],
    n_side: &[Vec<Vec<C64>>],
    basis: &[(usize, crate::series::Expo)],
) -> Result<Vec<C64>, ModelError> {
    let n = model.n();
    let (v_fibre, v_base) = pipe_jet.split_at(n + 1);
    let lhs_fibre = apply_affine_jet(n_side, v_base, v_fibre)?;
    let nu = apply_affine_jet(m_side, local_base, local_fibre)?;
    let mut model_in = nu;
    model_in.extend(local_base.iter().cloned());
    let rhs = model.transition_jet(&model_in)?;
    let diffs: Vec<Series> = (0..(2 * n + 1))
        .map(|i| {
            let lhs = if i <= n {
                &lhs_fibre[i]
            } else {
                &v_base[i - n - 1]
            };
            lhs.sub(&rhs[i])
        })
        .collect::<Result<_, _>>()?;
    Ok(basis
        .iter()
        .map(|(comp, e)| {
            diffs[*comp]
                .coeffs
                .get(e)
                .copied()
                .unwrap_or(C64::new(0.0, 0.0))
        })
        .collect())
}

/// Fibre-linear chart identification between the pipeline's bundle charts
/// and the model's charts, then transition-function comparison at sample
/// points. The identification is affine in the base coordinates; the value
/// and first derivatives at the base point agree for the trivial
/// identification by construction, and the affine parts are pinned by the
/// jets of the intertwining equation through total degree three, solved by
/// Newton iteration (the defect is polynomial in the unknown matrices).
pub fn cross_check(
    assembly: &Assembly,
    model: &dyn ProjectiveModel,
    samples: usize,
    seed: u64,
) -> Result<CrossCheckReport, ModelError> {
    cross_check_with_radius(assembly, model, samples, seed, 0.08)
}

/// `radius` bounds the fibre-ratio and base samples; the residual floor is
/// the degree-D truncation tail at that radius.
pub fn cross_check_with_radius(
    assembly: &Assembly,
    model: &dyn ProjectiveModel,
    samples: usize,
    seed: u64,
    radius: f64,
) -> Result<CrossCheckReport, ModelError> {
    let n = assembly.kd.n;
    if model.n() != n {
        return Err(ModelError::UnsupportedDimension(model.label(), n));
    }
    let jet_order = 3;
    let pipe = pipeline_jet(assembly, jet_order)?;
    let local = Arc::clone(&pipe[0].vars);
    let one = Series::one(&local, jet_order);
    let d0 = Series::variable(&local, jet_order, 0);
    let mut local_fibre = vec![one.add(&d0)?];
    for i in 0..n {
        local_fibre.push(Series::variable(&local, jet_order, 1 + i));
    }
    let local_base: Vec<Series> = (0..n)
        .map(|i| Series::variable(&local, jet_order, 1 + n + i))
        .collect();

    let dim = n + 1;
    let zero_mats = || vec![vec![vec![C64::new(0.0, 0.0); dim]; dim]; n];
    // Fixed monomial basis: all exponents of total degree ≤ jet_order.
    let mut basis: Vec<(usize, crate::series::Expo)> = Vec::new();
    {
        let nv = local.len();
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut stack = vec![0u8; nv];
        fn enumerate(exps: &mut Vec<Vec<u8>>, stack: &mut Vec<u8>, pos: usize, left: u8) {
            if pos == stack.len() {
                exps.push(stack.clone());
                return;
            }
            for k in 0..=left {
                stack[pos] = k;
                enumerate(exps, stack, pos + 1, left - k);
            }
            stack[pos] = 0;
        }
        enumerate(&mut exps, &mut stack, 0, jet_order as u8);
        for comp in 0..(2 * n + 1) {
            for e in &exps {
                basis.push((comp, crate::series::Expo(e.clone())));
            }
        }
    }

    let unknowns = 2 * n * dim * dim;
    let unpack = |theta: &[C64]| {
        let mut m_side = zero_mats();
        let mut n_side = zero_mats();
        let mut it = theta.iter();
        for mats in [&mut m_side, &mut n_side] {
            for k in 0..n {
                for row in 0..dim {
                    for col in 0..dim {
                        mats[k][row][col] = *it.next().unwrap();
                    }
                }
            }
        }
        (m_side, n_side)
    };
    let defect_of = |theta: &[C64]| -> Result<Vec<C64>, ModelError> {
        let (m_side, n_side) = unpack(theta);
        jet_defect_aligned(
            model,
            &pipe,
            &local_fibre,
            &local_base,
            &m_side,
            &n_side,
            &basis,
        )
    };

    // Newton iteration with a finite-difference Jacobian; the defect is a
    // low-degree polynomial in the unknowns, so this converges in a few steps.
    let mut theta = vec![C64::new(0.0, 0.0); unknowns];
    let mut jet_residual = f64::INFINITY;
    for _ in 0..10 {
        let e0 = defect_of(&theta)?;
        jet_residual = e0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if jet_residual < 1e-11 {
            break;
        }
        let h = 1e-5;
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(unknowns);
        for r in 0..unknowns {
            let mut probe = theta.clone();
            probe[r] += C64::new(h, 0.0);
            let er = defect_of(&probe)?;
            cols.push(er.iter().zip(&e0).map(|(p, b)| (p - b) / h).collect());
        }
        let rows = e0.len();
        let a_mat: Vec<Vec<C64>> = (0..rows)
            .map(|r| (0..unknowns).map(|c| cols[c][r]).collect())
            .collect();
        let rhs: Vec<C64> = e0.iter().map(|b| -b).collect();
        let step = linalg::least_squares(&a_mat, &rhs);
        let step_norm = step.iter().map(|s| s.norm()).fold(0.0, f64::max);
        for (t, s) in theta.iter_mut().zip(&step) {
            *t += s;
        }
        if step_norm < 1e-13 {
            let e = defect_of(&theta)?;
            jet_residual = e.iter().map(|c| c.norm()).fold(0.0, f64::max);
            break;
        }
    }
    if jet_residual > 1e-9 {
        return Err(ModelError::JetMatchSingular(jet_residual));
    }
    let (m_side, n_side) = unpack(&theta);
    let ident = ChartIdentification { n, m_side, n_side };

    // Sample comparison at full precision.
    let mut s = Sampler::new(seed, "cross-check");
    let mut worst: f64 = 0.0;
    let mut count = 0usize;
    while count < samples {
        let u0 = s.annulus(0.8, 1.25);
        let u = s.disc_vec(n, radius);
        let q = s.disc_vec(n, radius);
        let mut x = vec![u0];
        x.extend_from_slice(&u);
        x.extend_from_slice(&q);
        let tr = assembly
            .transition(Half::OneZero, &x)
            .map_err(ModelError::Construction)?;
        let lhs = ident.to_model_b(&tr.image);
        let model_a = ident.to_model_a(&x);
        let rhs = model
            .transition_numeric(&model_a)
            .ok_or(ModelError::UndefinedAtSample)?;
        for (a, b) in lhs.iter().zip(&rhs) {
            worst = worst.max((a - b).norm() / b.norm().max(1.0));
        }
        count += 1;
    }
    Ok(CrossCheckReport {
        jet_residual,
        sample_residual: worst,
        samples: count,
        identification: ident,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Assembly;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ci(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn builtin_geometries() {
        let kd = builtin("flat", 2, 1.0, 8).unwrap();
        // κ = z1 zt1 + z2 zt2
        assert_eq!(kd.kappa.coeffs.len(), 2);
        let kd = builtin("fubini_study", 1, 1.0, 6).unwrap();
        let expect = Series::from_terms(
            &kd.vars,
            6,
            &[
                (vec![1, 1], c(1.0)),
                (vec![2, 2], c(-0.5)),
                (vec![3, 3], c(1.0 / 3.0)),
            ],
        );
        assert!(kd.kappa.residual_vs(&expect) < 1e-14);
        assert!(builtin("nope", 1, 1.0, 8).is_err());
    }

    #[test]
    fn cp_model_action_and_tau() {
        let m = CpModel::new(1);
        let mut s = Sampler::new(1, "cp-action");
        for _ in 0..20 {
            let h: Vec<C64> = (0..4).map(|_| s.disc(1.0) + c(0.2)).collect();
            let lambda = ci(0.7, 0.4);
            let moved = m.action(lambda, &h);
            let d = CpModel::projective_distance(&h, &moved);
            // fixed iff x = 0 or y = 0
            let xn = h[..2].iter().map(|v| v.norm()).fold(0.0, f64::max);
            let yn = h[2..].iter().map(|v| v.norm()).fold(0.0, f64::max);
            if xn > 0.05 && yn > 0.05 {
                assert!(d > 1e-3);
            }
            // τ² = id, no fixed points
            let t2 = m.tau(&m.tau(&h));
            assert!(CpModel::projective_distance(&h, &t2) < 1e-12);
            let t1 = m.tau(&h);
            assert!(CpModel::projective_distance(&h, &t1) > 1e-3);
        }
        // points on the fixed sets
        let on_s = vec![c(1.0), c(0.3), c(0.0), c(0.0)];
        let moved = m.action(ci(0.5, 0.1), &on_s);
        assert!(CpModel::projective_distance(&on_s, &moved) < 1e-12);
        let on_sbar = vec![c(0.0), c(0.0), c(1.0), c(-0.4)];
        let moved = m.action(ci(0.5, 0.1), &on_sbar);
        assert!(CpModel::projective_distance(&on_sbar, &moved) < 1e-12);
        // τ intertwines the action with its conjugate inverse
        let h: Vec<C64> = vec![c(1.0), ci(0.2, 0.4), ci(-0.3, 0.1), c(0.7)];
        let lambda = ci(0.8, -0.5);
        let lhs = m.tau(&m.action(lambda, &h));
        let rhs = m.action(c(1.0) / lambda.conj(), &m.tau(&h));
        assert!(CpModel::projective_distance(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn cp_model_legendrian_fibres() {
        // inside a fibre {ζ = ζ0} the hyperplanes {ν0 + ζ0·ν' = a} kill θ
        let m = CpModel::new(2);
        let theta = m.contact_form_chart_a(6);
        let mut s = Sampler::new(8, "cp-legendrian");
        for _ in 0..20 {
            let z0 = s.disc_vec(2, 0.4);
            let a = s.disc(1.0);
            let nu = s.disc_vec(2, 0.8);
            let nu0 = a - z0[0] * nu[0] - z0[1] * nu[1];
            let point = vec![nu0, nu[0], nu[1], z0[0], z0[1]];
            let cov = theta.eval_covector(&point);
            // tangents to the leaf: ∂ν_i − ζ0_i ∂ν_0
            for i in 0..2 {
                let pairing = cov[1 + i] - z0[i] * cov[0];
                assert!(pairing.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn cp_model_contact_and_divisor() {
        let m = CpModel::new(1);
        let theta = m.contact_form_chart_a(6);
        // contact check: θ ∧ dθ has nonzero constant top coefficient
        let top = theta.wedge(&theta.d().unwrap()).unwrap();
        let key = vec![0u8, 1, 2];
        let coeff = top.terms.get(&key).unwrap().constant_term();
        assert!((coeff.norm() - 2.0).abs() < 1e-14);
        // θ(X̂) for the scalar field is ν_0 + Σ ζ_i ν_i: linear in the fibre
        let ch = Arc::clone(&theta.chart);
        let x = m.euler_chart_a(6, &ch);
        let moment = theta.interior(&x).unwrap();
        let sect = moment.terms.get(&vec![]).unwrap();
        let expect = Series::variable(&ch, 6, 0)
            .add(
                &Series::variable(&ch, 6, 2)
                    .mul(&Series::variable(&ch, 6, 1))
                    .unwrap(),
            )
            .unwrap();
        assert!(sect.residual_vs(&expect) < 1e-14);
    }

    #[test]
    fn cp_transition_matches_homogeneous_route() {
        let m = CpModel::new(2);
        let mut s = Sampler::new(3, "cp-transition");
        for _ in 0..30 {
            let x: Vec<C64> = (0..5).map(|_| s.disc(0.5) + c(0.8)).collect();
            let via_chart = m.transition_numeric(&x).unwrap();
            // through homogeneous coordinates: chart B of the same point
            let h = m.chart_a_to_homog(&x);
            let y0 = h[3]; // y_0 = ν_0
            let expect: Vec<C64> = vec![
                h[0] / y0,
                h[1] / y0,
                h[2] / y0, // ξ
                h[4] / y0,
                h[5] / y0, // ζ̃
            ];
            for (a, b) in via_chart.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn flag_model_charts_and_perp() {
        let fm = FlagModel::new(1).unwrap();
        assert!(FlagModel::new(2).is_err());
        let mut s = Sampler::new(4, "flag-charts");
        for _ in 0..100 {
            let xa = vec![s.disc(1.0), s.disc(1.0), s.disc(1.0)];
            let fa = fm.chart_a_to_flag(&xa);
            assert!(fa.is_valid());
            let xb = vec![s.disc(1.0), s.disc(1.0), s.disc(1.0)];
            let fb = fm.chart_b_to_flag(&xb);
            assert!(fb.is_valid());
            // ⊥ is a fixed-point-free involution
            let p = fa.perp();
            assert!(p.is_valid());
            assert!(p.perp().distance(&fa) < 1e-12);
            assert!(p.distance(&fa) > 1e-6);
        }
    }

    #[test]
    fn flag_transition_agrees_at_flag_level() {
        let fm = FlagModel::new(1).unwrap();
        let mut s = Sampler::new(5, "flag-transition");
        for _ in 0..100 {
            let xa = vec![s.disc(0.5) + c(1.0), s.disc(0.8), s.disc(0.8)];
            if let Some(xb) = fm.transition_numeric(&xa) {
                let fa = fm.chart_a_to_flag(&xa);
                let fb = fm.chart_b_to_flag(&xb);
                assert!(
                    fa.distance(&fb) < 1e-10,
                    "flags differ: {:.3e}",
                    fa.distance(&fb)
                );
            }
        }
    }

    #[test]
    fn flag_scaling_limit() {
        // λ → 0 sends (l, K) to (a, span(Q̂)^⊥): the line tends to e_0 and
        // the plane normal to (0, 1, r).
        let fm = FlagModel::new(1).unwrap();
        let xa = vec![ci(0.3, 0.1), ci(-0.2, 0.4), ci(0.25, -0.15)];
        let f = fm.chart_a_to_flag(&xa);
        let lam = c(1e-3);
        let moved = f.action(lam);
        // normalize the line by its first component
        let l = moved.line;
        assert!((l[1] / l[0]).norm() < 1e-5);
        assert!((l[2] / l[0]).norm() < 1e-5);
        let nrm = moved.plane_normal;
        assert!((nrm[0] / nrm[1]).norm() < 1e-5);
        assert!(((nrm[2] / nrm[1]) - xa[2]).norm() < 1e-10);
    }

    #[test]
    fn flag_action_preserves_flags() {
        let fm = FlagModel::new(1).unwrap();
        let mut s = Sampler::new(6, "flag-action");
        for _ in 0..20 {
            let xa = vec![s.disc(0.8), s.disc(0.8), s.disc(0.8)];
            let f = fm.chart_a_to_flag(&xa);
            let moved = f.action(ci(0.6, 0.3));
            assert!(moved.is_valid());
            // ⊥ commutes with the action up to inversion of λ
            let lhs = f.perp().action(ci(0.6, 0.3));
            let rhs = f.action(c(1.0) / ci(0.6, 0.3).conj()).perp();
            assert!(lhs.distance(&rhs) < 1e-10);
        }
    }

    #[test]
    fn cross_check_example1_n1() {
        let kd = Arc::new(builtin("fubini_study", 1, -1.0, 8).unwrap());
        let a = Assembly::build(&kd).unwrap();
        let m = CpModel::new(1);
        let rep = cross_check(&a, &m, 100, 42).unwrap();
        assert!(rep.jet_residual < 1e-10, "jet {:.3e}", rep.jet_residual);
        assert!(
            rep.sample_residual < 1e-8,
            "sample {:.3e}",
            rep.sample_residual
        );
        // the solved identification is the fibre shear u0 ↦ u0 − q u1
        let shear = rep.identification.m_side[0][0][1];
        assert!((shear - c(-1.0)).norm() < 1e-8, "shear {shear}");
    }

    #[test]
    fn cross_check_wrong_constant_is_singular() {
        let kd = Arc::new(builtin("fubini_study", 1, 1.0, 8).unwrap());
        let a = Assembly::build(&kd).unwrap();
        let m = CpModel::new(1);
        match cross_check(&a, &m, 10, 42) {
            Err(ModelError::JetMatchSingular(_)) => {}
            other => panic!(
                "expected singular jet match, got {:?}",
                other.map(|r| r.jet_residual)
            ),
        }
    }

    #[test]
    fn cross_check_example2_n1() {
        let kd = Arc::new(builtin("fubini_study", 1, -0.5, 8).unwrap());
        let a = Assembly::build(&kd).unwrap();
        let m = FlagModel::new(1).unwrap();
        let rep = cross_check(&a, &m, 100, 43).unwrap();
        assert!(rep.jet_residual < 1e-10, "jet {:.3e}", rep.jet_residual);
        assert!(
            rep.sample_residual < 1e-8,
            "sample {:.3e}",
            rep.sample_residual
        );
    }

    #[test]
    fn cross_check_real_structures_intertwine() {
        // The identification carries the pipeline real structure to the
        // model real structure on CP^3.
        let kd = Arc::new(builtin("fubini_study", 1, -1.0, 8).unwrap());
        let a = Assembly::build(&kd).unwrap();
        let m = CpModel::new(1);
        let rep = cross_check(&a, &m, 10, 44).unwrap();
        let ident = &rep.identification;
        let mut s = Sampler::new(7, "sigma-intertwine");
        for _ in 0..20 {
            let x = vec![s.annulus(0.8, 1.2), s.disc(0.05), s.disc(0.05)];
            let sig = a.sigma_down(&x);
            let lhs = ident.to_model_b(&sig);
            // model side: chart A → homog → τ → chart B coords
            let h = m.chart_a_to_homog(&ident.to_model_a(&x));
            let th = m.tau(&h);
            let y0 = th[2];
            let rhs = vec![th[0] / y0, th[1] / y0, th[3] / y0];
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - r).norm() < 1e-8, "σ mismatch {l} vs {r}");
            }
        }
    }
}
