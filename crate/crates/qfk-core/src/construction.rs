//! Assembly of the two halves of the twistor space in standardized
//! coordinates, the contact forms, the gluing map, the fibre scaling field
//! and the real structure.
//!
//! Chart conventions (n = complex dimension of the base):
//!   upstairs      (z_1..z_n, zt_1..zt_n, t)      t the fibre coordinate in the
//!                                                standardized trivialization
//!   f-chart       (z, zt, f)                      f = e^η t, the raw trivialization
//!   intermediate  (w_1..w_n, q_1..q_n, t)         w_i the affine fibre coordinates
//!   downstairs    (u_0, u_1..u_n, q_1..q_n)       the vector-bundle chart
//! The (0,1) half mirrors all of this with (v_0, v, qt) and the roles of
//! z and zt exchanged.

use crate::exterior::{Chart, ChartMap, Form, FormError, VectorField};
use crate::kahler::{KahlerData, KahlerError};
use crate::linalg;
use crate::series::{invert_map, Expo, Series, SeriesError, Var, VarSet, C64};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Lift-defect above this aborts the construction: the blown-down form must
/// extend across the zero section.
pub const LIFT_TOL: f64 = 1e-10;
/// Newton tolerance for the numeric base solve in the gluing map.
pub const NEWTON_TOL: f64 = 1e-13;
/// The gluing map is undefined near the zero sections.
pub const MIN_FIBRE: f64 = 1e-3;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ConstructionError {
    #[error("Hessian of the affine coordinates is singular or ill-conditioned (cond ~ {0:.3e})")]
    SingularHessian(f64),
    #[error("base solve did not converge (residual {0:.3e})")]
    NewtonDiverged(f64),
    #[error("fibre coordinate too small for the overlap: |t| = {0:.3e}")]
    FibreTooSmall(f64),
    #[error("blown-down form has a non-polynomial remainder {0:.3e}")]
    NonPolynomialRemainder(f64),
    #[error(transparent)]
    Kahler(#[from] KahlerError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

type Result<T> = std::result::Result<T, ConstructionError>;

/// Which half of the twistor space a chart belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    OneZero,
    ZeroOne,
}

impl Half {
    pub fn other(self) -> Half {
        match self {
            Half::OneZero => Half::ZeroOne,
            Half::ZeroOne => Half::OneZero,
        }
    }

    fn fibre_prefix(self) -> &'static str {
        match self {
            Half::OneZero => "u",
            Half::ZeroOne => "v",
        }
    }

    fn leaf_prefix(self) -> &'static str {
        match self {
            Half::OneZero => "q",
            Half::ZeroOne => "qt",
        }
    }
}

fn downstairs_chart(half: Half, n: usize) -> Chart {
    let mut vars = Vec::with_capacity(2 * n + 1);
    vars.push(Var {
        name: format!("{}0", half.fibre_prefix()),
        graded: false,
        fibre: true,
        pair: None,
    });
    for i in 0..n {
        vars.push(Var {
            name: format!("{}{}", half.fibre_prefix(), i + 1),
            graded: true,
            fibre: true,
            pair: None,
        });
    }
    for i in 0..n {
        vars.push(Var {
            name: format!("{}{}", half.leaf_prefix(), i + 1),
            graded: true,
            fibre: false,
            pair: None,
        });
    }
    Arc::new(VarSet { vars })
}

fn intermediate_chart(half: Half, n: usize) -> Chart {
    let wname = match half {
        Half::OneZero => "w",
        Half::ZeroOne => "wt",
    };
    let mut vars = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        vars.push(Var {
            name: format!("{}{}", wname, i + 1),
            graded: true,
            fibre: false,
            pair: None,
        });
    }
    for i in 0..n {
        vars.push(Var {
            name: format!("{}{}", half.leaf_prefix(), i + 1),
            graded: true,
            fibre: false,
            pair: None,
        });
    }
    vars.push(Var {
        name: "t".into(),
        graded: false,
        fibre: true,
        pair: None,
    });
    Arc::new(VarSet { vars })
}

fn inversion_chart(half: Half, n: usize) -> Chart {
    let wname = match half {
        Half::OneZero => "w",
        Half::ZeroOne => "wt",
    };
    let mut names: Vec<String> = (0..n).map(|i| format!("{}{}", wname, i + 1)).collect();
    for i in 0..n {
        names.push(format!("{}{}", half.leaf_prefix(), i + 1));
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    VarSet::graded(&refs)
}

/// One half of the twistor space in standardized coordinates.
#[derive(Debug, Clone)]
pub struct HalfChart {
    pub half: Half,
    pub n: usize,
    pub c: f64,
    pub order: u32,
    pub kd: Arc<KahlerData>,
    pub up: Chart,
    pub upf: Chart,
    pub intermediate: Chart,
    pub down: Chart,
    pub inv_chart: Chart,
    /// Affine fibre coordinates p_i on the base chart (ã_i here, a_i mirrored).
    pub p: Vec<Series>,
    /// Base inversion: the solved block of coordinates as series in (w, leaf).
    pub base_inv: Vec<Series>,
    /// Connection form in the raw trivialization, on the f-chart.
    pub phi_f: Form,
    /// e^{−η} φ in standardized upstairs coordinates.
    pub theta_up: Form,
    /// The contact form downstairs; polynomial across the zero section.
    pub theta_down: Form,
    /// Standardization map upstairs → downstairs.
    pub psi: ChartMap,
    /// Mass of the non-extendable part dropped by the blow-down.
    pub lift_defect: f64,
}

impl HalfChart {
    /// The block of base variables this half solves for in the gluing map
    /// (z for the (1,0) half, zt for the mirror).
    fn solve_offset(&self) -> usize {
        match self.half {
            Half::OneZero => 0,
            Half::ZeroOne => self.n,
        }
    }

    /// The block of base variables that become leaf coordinates downstairs.
    fn leaf_offset(&self) -> usize {
        match self.half {
            Half::OneZero => self.n,
            Half::ZeroOne => 0,
        }
    }

    /// Arrange (solved, leaf) values into the base-chart layout (z.., zt..).
    pub fn base_values(&self, solved: &[C64], leaf: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); 2 * n];
        for i in 0..n {
            out[self.solve_offset() + i] = solved[i];
            out[self.leaf_offset() + i] = leaf[i];
        }
        out
    }

    /// Target Darboux normal form du_0 + 2c Σ u_i dq_i.
    pub fn darboux_target(&self) -> Result<Form> {
        let n = self.n;
        let order = self.theta_down.order;
        let mut f = Form::one_form_term(Series::one(&self.down, order), 0);
        for i in 0..n {
            let ui = Series::variable(&self.down, order, 1 + i);
            f = f.add(&Form::one_form_term(
                ui.scale(C64::new(2.0 * self.c, 0.0)),
                1 + n + i,
            ))?;
        }
        Ok(f)
    }

    /// Master invariant: max coefficient of Θ − (du_0 + 2c Σ u_i dq_i).
    pub fn darboux_residual(&self) -> Result<f64> {
        Ok(self.theta_down.residual_vs(&self.darboux_target()?))
    }

    /// Generator of the fibre scaling action downstairs: Σ_α u_α ∂_{u_α}.
    pub fn euler_down(&self) -> VectorField {
        let order = self.theta_down.order;
        let mut x = VectorField::new(&self.down);
        for alpha in 0..=self.n {
            x = x.with(alpha, Series::variable(&self.down, order, alpha));
        }
        x
    }

    /// Twistorial moment section Θ(X̂).
    pub fn moment_section(&self) -> Result<Series> {
        let contraction = self.theta_down.interior(&self.euler_down())?;
        Ok(contraction
            .terms
            .get(&vec![])
            .cloned()
            .unwrap_or_else(|| Series::zero(&self.down, self.theta_down.order)))
    }

    /// |Θ(X̂) − u_0|.
    pub fn moment_residual(&self) -> Result<f64> {
        let m = self.moment_section()?;
        let u0 = Series::variable(&self.down, m.order, 0);
        Ok(m.residual_vs(&u0))
    }

    /// Divisor structure: the section must be u_0 times a unit that is ≡ 1,
    /// and must vanish identically on the zero set {u_0 = 0}.
    pub fn divisor_residual(&self) -> Result<f64> {
        let m = self.moment_section()?;
        let u0 = Series::variable(&self.down, m.order, 0);
        let unit_res = m.residual_vs(&u0);
        let restricted = m.partial_eval(&[(0, C64::new(0.0, 0.0))]);
        Ok(unit_res.max(restricted.max_norm()))
    }

    /// |L_{X̂} Θ − Θ|: the contact form has weight one under the scaling.
    pub fn euler_invariance_residual(&self) -> Result<f64> {
        let lie = self.theta_down.lie_derivative(&self.euler_down())?;
        Ok(lie.residual_vs(&self.theta_down))
    }

    /// Θ ∧ (dΘ)^n: constant coefficient of the top form and the residual mass
    /// of everything else. Nonzero iff c ≠ 0, magnitude (2|c|)^n n!.
    pub fn contact_coefficient(&self) -> Result<(C64, f64)> {
        let mut top = self.theta_down.clone();
        let dtheta = self.theta_down.d()?;
        for _ in 0..self.n {
            top = top.wedge(&dtheta)?;
        }
        let key: Vec<u8> = (0..(2 * self.n + 1) as u8).collect();
        let mut constant = C64::new(0.0, 0.0);
        let mut rest: f64 = 0.0;
        for (k, s) in &top.terms {
            if *k == key {
                constant = s.constant_term();
                let mut dust = s.clone();
                dust.coeffs.remove(&Expo::zeros(self.down.len()));
                rest = rest.max(dust.max_norm());
            } else {
                rest = rest.max(s.max_norm());
            }
        }
        Ok((constant, rest))
    }

    /// Pull Θ back to the affine hyperplane {u_0 = a, q = q0}: the du_i
    /// coefficients (i ≥ 1) must vanish there. Returns the max coefficient.
    pub fn legendrian_leaf_residual(&self, a: C64, q0: &[C64]) -> f64 {
        let n = self.n;
        let mut assignments: Vec<(usize, C64)> = vec![(0, a)];
        for i in 0..n {
            assignments.push((1 + n + i, q0[i]));
        }
        let mut worst: f64 = 0.0;
        for (key, s) in &self.theta_down.terms {
            let idx = key[0] as usize;
            if (1..=n).contains(&idx) {
                worst = worst.max(s.partial_eval(&assignments).max_norm());
            }
        }
        worst
    }

    /// Consistency of the blow-down: Ψ^*(Θ_downstairs) reproduces Θ upstairs.
    pub fn psi_consistency(&self) -> Result<f64> {
        let back = self.psi.pullback(&self.theta_down)?;
        Ok(back.residual_vs(&self.theta_up))
    }

    /// Solve p(·, leaf) = w for the leaf-transverse base block by Newton
    /// iteration, seeded with the stored inverse series.
    pub fn solve_base(&self, w: &[C64], leaf: &[C64]) -> Result<Vec<C64>> {
        let n = self.n;
        let mut inv_values = Vec::with_capacity(2 * n);
        inv_values.extend_from_slice(w);
        inv_values.extend_from_slice(leaf);
        let mut solved: Vec<C64> = self
            .base_inv
            .iter()
            .map(|s| s.eval_slice(&inv_values))
            .collect();
        let scale = w.iter().map(|x| x.norm()).fold(1.0, f64::max);
        for _ in 0..40 {
            let base = self.base_values(&solved, leaf);
            let res: Vec<C64> = (0..n).map(|i| self.p[i].eval_slice(&base) - w[i]).collect();
            let worst = res.iter().map(|r| r.norm()).fold(0.0, f64::max);
            if worst < NEWTON_TOL * scale {
                return Ok(solved);
            }
            let jac: Vec<Vec<C64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            self.p[i]
                                .derivative(self.solve_offset() + j)
                                .eval_slice(&base)
                        })
                        .collect()
                })
                .collect();
            let step = linalg::solve(&jac, &res).ok_or(ConstructionError::NewtonDiverged(worst))?;
            for j in 0..n {
                solved[j] -= step[j];
            }
        }
        let base = self.base_values(&solved, leaf);
        let worst = (0..n)
            .map(|i| (self.p[i].eval_slice(&base) - w[i]).norm())
            .fold(0.0, f64::max);
        if worst < 1e-9 * scale {
            Ok(solved)
        } else {
            Err(ConstructionError::NewtonDiverged(worst))
        }
    }
}

/// Build one half of the twistor space from validated Kähler data.
pub fn build_half(kd: &Arc<KahlerData>, half: Half) -> Result<HalfChart> {
    let n = kd.n;
    let order = kd.order;
    let base = &kd.vars;

    let p: Vec<Series> = match half {
        Half::OneZero => kd.at.clone(),
        Half::ZeroOne => kd.a.clone(),
    };
    let solve_offset = match half {
        Half::OneZero => 0,
        Half::ZeroOne => n,
    };
    let leaf_offset = n - solve_offset;

    // Hessian ∂p_i/∂(solved_j) at 0 must be invertible and well conditioned.
    let hess: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| p[i].derivative(solve_offset + j).constant_term())
                .collect()
        })
        .collect();
    let hess_inv =
        linalg::invert(&hess).ok_or(ConstructionError::SingularHessian(f64::INFINITY))?;
    let cond = linalg::norm_1(&hess) * linalg::norm_1(&hess_inv);
    if !cond.is_finite() || cond > 1e8 {
        return Err(ConstructionError::SingularHessian(cond));
    }

    // Invert the base map (solved, leaf) ↦ (p, leaf).
    let inv_chart = inversion_chart(half, n);
    let mut fmap: Vec<Series> = p.clone();
    for i in 0..n {
        fmap.push(Series::variable(base, order, leaf_offset + i));
    }
    // invert_map works on the plain base variables in (solved, leaf) order;
    // permute so the solved block comes first.
    let perm: Vec<usize> = (0..n)
        .map(|i| solve_offset + i)
        .chain((0..n).map(|i| leaf_offset + i))
        .collect();
    let permuted_vars = {
        let vars: Vec<Var> = perm
            .iter()
            .map(|&i| Var {
                name: base.vars[i].name.clone(),
                graded: true,
                fibre: false,
                pair: None,
            })
            .collect();
        Arc::new(VarSet { vars })
    };
    let inv_perm: Vec<usize> = {
        let mut ip = vec![0usize; 2 * n];
        for (newpos, &old) in perm.iter().enumerate() {
            ip[old] = newpos;
        }
        ip
    };
    let fmap_perm: Vec<Series> = fmap
        .iter()
        .map(|s| s.lift(&permuted_vars, &inv_perm))
        .collect();
    let g_full = invert_map(&fmap_perm, &inv_chart).map_err(|e| match e {
        SeriesError::SingularLinearPart(c) => ConstructionError::SingularHessian(c),
        other => ConstructionError::Series(other),
    })?;
    let base_inv: Vec<Series> = g_full[..n].to_vec();
    // the leaf block must invert to the identity
    for (i, g) in g_full[n..].iter().enumerate() {
        let qi = Series::variable(&inv_chart, order, n + i);
        debug_assert!(g.residual_vs(&qi) < 1e-12);
        let _ = (i, g);
    }

    // Charts.
    let up = {
        let mut vars = base.vars.clone();
        vars.push(Var {
            name: "t".into(),
            graded: false,
            fibre: true,
            pair: None,
        });
        Arc::new(VarSet { vars })
    };
    let upf = {
        let mut vars = base.vars.clone();
        vars.push(Var {
            name: "f".into(),
            graded: false,
            fibre: true,
            pair: None,
        });
        Arc::new(VarSet { vars })
    };
    let intermediate = intermediate_chart(half, n);
    let down = downstairs_chart(half, n);

    let idmap: Vec<usize> = (0..2 * n).collect();
    let lift_up = |s: &Series| s.lift(&up, &idmap);
    let lift_upf = |s: &Series| s.lift(&upf, &idmap);

    // φ = df − f c Σ a_i dz_i + c f Σ ã_i dzt_i in the raw trivialization;
    // the mirror half carries the dual bundle, so both signs flip.
    let f_idx = 2 * n;
    let fvar = Series::variable(&upf, order, f_idx);
    let sign = match half {
        Half::OneZero => 1.0,
        Half::ZeroOne => -1.0,
    };
    let cc = C64::new(sign * kd.c, 0.0);
    let mut phi_f = Form::one_form_term(Series::one(&upf, order), f_idx);
    for i in 0..n {
        let ai = lift_upf(&kd.a[i]);
        let ati = lift_upf(&kd.at[i]);
        phi_f = phi_f.add(&Form::one_form_term(fvar.mul(&ai)?.scale(-cc), i))?;
        phi_f = phi_f.add(&Form::one_form_term(fvar.mul(&ati)?.scale(cc), n + i))?;
    }

    // Standardization f = e^η t, then Θ_up = e^{−η} φ.
    let eta_up = lift_up(&kd.eta);
    let tvar = Series::variable(&up, order, 2 * n);
    let mut std_comps: Vec<Series> = (0..2 * n)
        .map(|i| Series::variable(&up, order, i))
        .collect();
    std_comps.push(eta_up.exp()?.mul(&tvar)?);
    let std_map = ChartMap {
        source: Arc::clone(&up),
        target: Arc::clone(&upf),
        comps: std_comps,
    };
    let theta_up = std_map
        .pullback(&phi_f)?
        .scale_series(&eta_up.neg().exp()?)?;

    // Ψ: (base, t) ↦ (t, t p_1, …, t p_n, leaf).
    let mut psi_comps: Vec<Series> = vec![tvar.clone()];
    for i in 0..n {
        psi_comps.push(tvar.mul(&lift_up(&p[i]))?);
    }
    for i in 0..n {
        psi_comps.push(Series::variable(&up, order, leaf_offset + i));
    }
    let psi = ChartMap {
        source: Arc::clone(&up),
        target: Arc::clone(&down),
        comps: psi_comps,
    };

    // Intermediate chart map (w, q, t) → upstairs: solved = Z(w, q), leaf = q, t = t.
    let int_to_inv: Vec<usize> = (0..2 * n).collect();
    let mut m1_comps = vec![Series::zero(&intermediate, order); 2 * n + 1];
    for i in 0..n {
        m1_comps[solve_offset + i] = base_inv[i].lift(&intermediate, &int_to_inv);
        m1_comps[leaf_offset + i] = Series::variable(&intermediate, order, n + i);
    }
    m1_comps[2 * n] = Series::variable(&intermediate, order, 2 * n);
    let m1 = ChartMap {
        source: Arc::clone(&intermediate),
        target: Arc::clone(&up),
        comps: m1_comps,
    };
    let theta_int = m1.pullback(&theta_up)?;

    // Blow down to the bundle chart.
    let (theta_down, lift_defect) = blow_down_one_form(&theta_int, &down, n)?;
    if lift_defect > LIFT_TOL {
        return Err(ConstructionError::NonPolynomialRemainder(lift_defect));
    }

    Ok(HalfChart {
        half,
        n,
        c: kd.c,
        order,
        kd: Arc::clone(kd),
        up,
        upf,
        intermediate,
        down,
        inv_chart,
        p,
        base_inv,
        phi_f,
        theta_up,
        theta_down,
        psi,
        lift_defect,
    })
}

/// Push a 1-form off the intermediate chart (w, q, t) onto the bundle chart
/// (u_0, u, q): coefficients of dw_i must be divisible by t, and every
/// monomial t^m w^α q^β must satisfy m ≥ |α| to become u_0^{m−|α|} u^α q^β.
/// Returns the downstairs form and the mass that failed to lift.
fn blow_down_one_form(theta_int: &Form, down: &Chart, n: usize) -> Result<(Form, f64)> {
    let int_chart = &theta_int.chart;
    let order = theta_int.order;
    let t_idx = 2 * n;
    let mut defect: f64 = 0.0;

    let lift_series = |s: &Series, defect: &mut f64| -> Series {
        let mut out = Series::zero(down, order);
        for (e, coeff) in &s.coeffs {
            let m = e.0[t_idx] as i32;
            let alpha: i32 = e.0[..n].iter().map(|&x| x as i32).sum();
            if m < alpha {
                *defect = defect.max(coeff.norm());
                continue;
            }
            let mut e2 = vec![0u8; 2 * n + 1];
            e2[0] = (m - alpha) as u8;
            for i in 0..n {
                e2[1 + i] = e.0[i];
                e2[1 + n + i] = e.0[n + i];
            }
            *out.coeffs.entry(Expo(e2)).or_insert(C64::new(0.0, 0.0)) += *coeff;
        }
        out.normalize();
        out
    };

    let divide_by_t = |s: &Series, defect: &mut f64| -> Series {
        let mut out = Series::zero(int_chart, order);
        for (e, coeff) in &s.coeffs {
            if e.0[t_idx] == 0 {
                *defect = defect.max(coeff.norm());
                continue;
            }
            let mut e2 = e.clone();
            e2.0[t_idx] -= 1;
            out.coeffs.insert(e2, *coeff);
        }
        out
    };

    let zero_int = Series::zero(int_chart, order);
    let p0 = theta_int
        .terms
        .get(&vec![t_idx as u8])
        .cloned()
        .unwrap_or_else(|| zero_int.clone());
    let mut theta_down = Form::zero(down, 1, order);

    // dw_i coefficients: P_i = t R_i, then B_i = lift(R_i).
    let mut r: Vec<Series> = Vec::with_capacity(n);
    for i in 0..n {
        let pi = theta_int
            .terms
            .get(&vec![i as u8])
            .cloned()
            .unwrap_or_else(|| zero_int.clone());
        r.push(divide_by_t(&pi, &mut defect));
    }
    for (i, ri) in r.iter().enumerate() {
        let bi = lift_series(ri, &mut defect);
        if !bi.is_zero() {
            theta_down = theta_down.add(&Form::one_form_term(bi, 1 + i))?;
        }
    }
    // dt coefficient: B_0 = lift(P_0 − Σ w_i R_i).
    let mut s0 = p0;
    for (i, ri) in r.iter().enumerate() {
        let wi = Series::variable(int_chart, order, i);
        s0 = s0.sub(&wi.mul(ri)?)?;
    }
    let b0 = lift_series(&s0, &mut defect);
    if !b0.is_zero() {
        theta_down = theta_down.add(&Form::one_form_term(b0, 0))?;
    }
    // dq_i coefficients lift directly.
    for i in 0..n {
        let qi = theta_int
            .terms
            .get(&vec![(n + i) as u8])
            .cloned()
            .unwrap_or_else(|| zero_int.clone());
        let ci = lift_series(&qi, &mut defect);
        if !ci.is_zero() {
            theta_down = theta_down.add(&Form::one_form_term(ci, 1 + n + i))?;
        }
    }
    Ok((theta_down, defect))
}

/// Numeric output of the gluing map at one point.
#[derive(Debug, Clone)]
pub struct TransitionPoint {
    pub image: Vec<C64>,
    pub jacobian: Vec<Vec<C64>>,
    /// Scaling factor λ = −(e^η u_0)^{−2} relating the two contact forms.
    pub lambda: C64,
    /// Solved base point (the block transverse to the leaves).
    pub solved: Vec<C64>,
    pub eta: C64,
}

/// Both halves plus the gluing and real-structure operations.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub kd: Arc<KahlerData>,
    pub h10: HalfChart,
    pub h01: HalfChart,
}

impl Assembly {
    pub fn build(kd: &Arc<KahlerData>) -> Result<Assembly> {
        Ok(Assembly {
            kd: Arc::clone(kd),
            h10: build_half(kd, Half::OneZero)?,
            h01: build_half(kd, Half::ZeroOne)?,
        })
    }

    pub fn half(&self, which: Half) -> &HalfChart {
        match which {
            Half::OneZero => &self.h10,
            Half::ZeroOne => &self.h01,
        }
    }

    /// Map a point of one bundle chart to the other across the overlap,
    /// with the Jacobian and the contact-form scaling factor.
    pub fn transition(&self, from: Half, x: &[C64]) -> Result<TransitionPoint> {
        let n = self.kd.n;
        let src = self.half(from);
        let dst = self.half(from.other());
        let t = x[0];
        if t.norm() < MIN_FIBRE {
            return Err(ConstructionError::FibreTooSmall(t.norm()));
        }
        let u = &x[1..=n];
        let leaf = &x[1 + n..];
        let w: Vec<C64> = u.iter().map(|ui| ui / t).collect();
        for v in leaf.iter().chain(&w) {
            if v.norm() > 0.8 {
                return Err(ConstructionError::Series(SeriesError::OutsideRadius(
                    "overlap".into(),
                    v.norm(),
                    0.8,
                )));
            }
        }
        let solved = src.solve_base(&w, leaf)?;
        let base = src.base_values(&solved, leaf);

        let eta_val = self.kd.eta.eval_slice(&base);
        let tp = (-2.0 * eta_val).exp() / t;
        let lambda = -tp / t;

        let mut image = vec![tp];
        for i in 0..n {
            image.push(tp * dst.p[i].eval_slice(&base));
        }
        image.extend_from_slice(&solved);

        // Chain rule. dw_i = du_i/t − u_i dt/t²; dz = Jp⁻¹ (dw − P_leaf dleaf).
        let so = src.solve_offset();
        let lo = src.leaf_offset();
        let jp: Vec<Vec<C64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| src.p[i].derivative(so + j).eval_slice(&base))
                    .collect()
            })
            .collect();
        let jp_inv = linalg::invert(&jp).ok_or(ConstructionError::NewtonDiverged(f64::INFINITY))?;
        let p_leaf: Vec<Vec<C64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| src.p[i].derivative(lo + j).eval_slice(&base))
                    .collect()
            })
            .collect();

        let dim = 2 * n + 1;
        // dz rows: derivative of each solved coordinate w.r.t. inputs (t, u, leaf).
        let mut dz = vec![vec![C64::new(0.0, 0.0); dim]; n];
        for i in 0..n {
            for k in 0..n {
                // ∂z_i/∂u_j = Σ_k Jp⁻¹[i][k] /t ; ∂z_i/∂t = Σ_k Jp⁻¹[i][k](−u_k/t²)
                dz[i][0] += jp_inv[i][k] * (-u[k] / (t * t));
                dz[i][1 + k] = jp_inv[i][k] / t;
                for j in 0..n {
                    dz[i][1 + n + j] -= jp_inv[i][k] * p_leaf[k][j];
                }
            }
        }
        // dη = Σ η_solved dz + Σ η_leaf dleaf.
        let mut deta = vec![C64::new(0.0, 0.0); dim];
        for i in 0..n {
            let es = self.kd.eta.derivative(so + i).eval_slice(&base);
            for col in 0..dim {
                deta[col] += es * dz[i][col];
            }
            let el = self.kd.eta.derivative(lo + i).eval_slice(&base);
            deta[1 + n + i] += el;
        }
        // dt' = t'(−2 dη − dt/t)
        let mut dtp = vec![C64::new(0.0, 0.0); dim];
        for col in 0..dim {
            dtp[col] = tp * (-2.0 * deta[col]);
        }
        dtp[0] -= tp / t;

        let mut jac = vec![vec![C64::new(0.0, 0.0); dim]; dim];
        jac[0] = dtp.clone();
        for i in 0..n {
            let rho = dst.p[i].eval_slice(&base);
            let mut row = vec![C64::new(0.0, 0.0); dim];
            for col in 0..dim {
                row[col] = rho * dtp[col];
            }
            for k in 0..n {
                let dsk = dst.p[i].derivative(so + k).eval_slice(&base);
                for col in 0..dim {
                    row[col] += tp * dsk * dz[k][col];
                }
            }
            for j in 0..n {
                let dlj = dst.p[i].derivative(lo + j).eval_slice(&base);
                row[1 + n + j] += tp * dlj;
            }
            jac[1 + i] = row;
        }
        for i in 0..n {
            jac[1 + n + i] = dz[i].clone();
        }

        Ok(TransitionPoint {
            image,
            jacobian: jac,
            lambda,
            solved,
            eta: eta_val,
        })
    }

    /// The real structure between the bundle charts:
    /// (x_0, x, leaf) ↦ (−x̄_0, −x̄, leaf̄) into the opposite half.
    pub fn sigma_down(&self, x: &[C64]) -> Vec<C64> {
        let n = self.kd.n;
        let mut out = Vec::with_capacity(x.len());
        for xi in &x[..=n] {
            out.push(-xi.conj());
        }
        for qi in &x[1 + n..] {
            out.push(qi.conj());
        }
        out
    }

    /// The real structure on an upstairs chart in the raw trivialization,
    /// written back into the same chart: (z, zt, f) ↦ (z̄t, z̄, −1/f̄).
    pub fn sigma_up_same_chart(&self, x: &[C64]) -> Result<Vec<C64>> {
        let n = self.kd.n;
        let f = x[2 * n];
        if f.norm() < MIN_FIBRE {
            return Err(ConstructionError::FibreTooSmall(f.norm()));
        }
        let mut out = vec![C64::new(0.0, 0.0); 2 * n + 1];
        for i in 0..n {
            out[i] = x[n + i].conj();
            out[n + i] = x[i].conj();
        }
        out[2 * n] = -C64::new(1.0, 0.0) / f.conj();
        Ok(out)
    }

    /// Numeric antiholomorphy witness for σ in the raw-trivialization chart:
    /// the holomorphic Wirtinger derivative of every component must vanish.
    /// Central differences in the real and imaginary directions of each input.
    pub fn sigma_antiholomorphy_residual(&self, x: &[C64]) -> Result<f64> {
        let dim = x.len();
        let h = 2e-6;
        let mut worst: f64 = 0.0;
        for j in 0..dim {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += C64::new(h, 0.0);
            xm[j] -= C64::new(h, 0.0);
            let da: Vec<C64> = self
                .sigma_up_same_chart(&xp)?
                .iter()
                .zip(self.sigma_up_same_chart(&xm)?)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect();
            xp[j] = x[j] + C64::new(0.0, h);
            xm[j] = x[j] - C64::new(0.0, h);
            let db: Vec<C64> = self
                .sigma_up_same_chart(&xp)?
                .iter()
                .zip(self.sigma_up_same_chart(&xm)?)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect();
            for (a, b) in da.iter().zip(&db) {
                // ∂/∂x_j = (∂_re − i ∂_im)/2
                let holo = (a - C64::new(0.0, 1.0) * b) * 0.5;
                worst = worst.max(holo.norm());
            }
        }
        Ok(worst)
    }

    /// Kernel conjugation at a real-slice point: a frame of ker φ at
    /// (z, z̄, f) is pushed through dσ and contracted with φ at σ(x).
    /// Returns the worst contraction residual.
    pub fn kernel_conjugation_residual(&self, z: &[C64], f: C64) -> Result<f64> {
        let n = self.kd.n;
        let h = &self.h10;
        let c = self.kd.c;
        let mut base = Vec::with_capacity(2 * n);
        base.extend_from_slice(z);
        base.extend(z.iter().map(|zi| zi.conj()));
        let mut x = base.clone();
        x.push(f);
        let sigma_x = self.sigma_up_same_chart(&x)?;
        let phi_at_sigma = h.phi_f.eval_covector(&sigma_x);

        let mut frame: Vec<Vec<C64>> = Vec::with_capacity(2 * n);
        for j in 0..n {
            // ξ_j = ∂_{z_j} + f c a_j ∂_f annihilates φ
            let mut xi = vec![C64::new(0.0, 0.0); 2 * n + 1];
            xi[j] = C64::new(1.0, 0.0);
            xi[2 * n] = f * c * self.kd.a[j].eval_slice(&base);
            frame.push(xi);
            // ξ̃_j = ∂_{zt_j} − f c ã_j ∂_f
            let mut xit = vec![C64::new(0.0, 0.0); 2 * n + 1];
            xit[n + j] = C64::new(1.0, 0.0);
            xit[2 * n] = -f * c * self.kd.at[j].eval_slice(&base);
            frame.push(xit);
        }
        let fbar = f.conj();
        let mut worst: f64 = 0.0;
        for xi in &frame {
            // dσ(ξ): swap the conjugated base components, scale the fibre one.
            let mut img = vec![C64::new(0.0, 0.0); 2 * n + 1];
            for j in 0..n {
                img[j] = xi[n + j].conj();
                img[n + j] = xi[j].conj();
            }
            img[2 * n] = xi[2 * n].conj() / (fbar * fbar);
            let pairing: C64 = phi_at_sigma.iter().zip(&img).map(|(a, b)| a * b).sum();
            worst = worst.max(pairing.norm());
        }
        Ok(worst)
    }

    /// The quaternion-Kähler metric restricted to the fixed set: two copies
    /// of g at a real-slice point. Returns the max disagreement between the
    /// two evaluation routes for the blocks and the minimum eigenvalue.
    pub fn fixed_point_metric(&self, z: &[C64]) -> (f64, f64) {
        let n = self.kd.n;
        let mut base = Vec::with_capacity(2 * n);
        base.extend_from_slice(z);
        base.extend(z.iter().map(|zi| zi.conj()));
        let mut block_a = vec![vec![C64::new(0.0, 0.0); n]; n];
        let mut block_b = vec![vec![C64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                block_a[i][j] = self.kd.g[i][j].eval_slice(&base);
                // second copy via the reality route: on the real slice
                // eval∘bar_swap is the hermitian transpose of eval
                match self.kd.g[j][i].bar_swap() {
                    Ok(sw) => block_b[i][j] = sw.eval_slice(&base),
                    Err(_) => block_b[i][j] = C64::new(f64::NAN, 0.0),
                }
            }
        }
        let mut diff: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                diff = diff.max((block_a[i][j] - block_b[i][j]).norm());
            }
        }
        let eig = linalg::hermitian_eigenvalues(&block_a);
        (diff, eig[0])
    }
}

/// Collect the coefficient table of a form for dumps: (indices, exponent, coeff).
pub fn form_terms(form: &Form) -> Vec<(Vec<u8>, Vec<u8>, C64)> {
    let mut out = Vec::new();
    for (key, s) in &form.terms {
        for (e, c) in s.terms_sorted() {
            out.push((key.clone(), e, c));
        }
    }
    out
}

/// Coefficient tables of a chart map for dumps.
pub fn map_terms(map: &ChartMap) -> BTreeMap<String, Vec<(Vec<u8>, C64)>> {
    map.comps
        .iter()
        .enumerate()
        .map(|(i, s)| (map.target.vars[i].name.clone(), s.terms_sorted()))
        .collect()
}
