//! Truncated multivariate power series over the complex numbers.
//!
//! Every analytic object in this crate (potentials, metric components,
//! form coefficients, chart maps) is stored as a `Series`: a finite set of
//! monomial coefficients truncated by total degree. Variables carry weights:
//! *graded* variables count toward the truncation order, *fibre* variables
//! (the coordinate along a line-bundle fibre and its images downstairs) do
//! not — they stay polynomial of low degree and are capped separately.
//!
//! Binary operations use min(a, b) truncation order. Coefficients with
//! magnitude below [`EPS_DROP`] are pruned; pruning is far below every
//! verification tolerance in the suite.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub type C64 = Complex64;

/// Coefficients smaller than this are dropped when normalizing.
pub const EPS_DROP: f64 = 1e-15;
/// A series is invertible only if its constant term exceeds this.
pub const UNIT_EPS: f64 = 1e-12;
/// Default evaluation radius for graded variables.
pub const EVAL_RADIUS: f64 = 0.5;
/// Default evaluation bound for fibre variables (annulus checks go up to |t| = 2).
pub const FIBRE_RADIUS: f64 = 4.0;
/// Hard cap on the polynomial degree in fibre variables.
pub const FIBRE_CAP: u32 = 8;
/// Default bound on the condition number of the linear part in `invert_map`.
pub const INVERT_COND_BOUND: f64 = 1e8;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SeriesError {
    #[error("variable sets do not match: {0} vs {1}")]
    VarSetMismatch(String, String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` has no conjugate partner")]
    UnpairedVariable(String),
    #[error("constant term {0:.3e} is not a unit")]
    NotAUnit(f64),
    #[error("log of a series with constant term on the closed negative real axis")]
    LogBranch,
    #[error("substituted series for `{0}` has nonzero constant term {1:.3e}")]
    CompositionConstantTerm(String, f64),
    #[error("missing assignment for variable `{0}`")]
    MissingAssignment(String),
    #[error("|{0}| = {1:.3} exceeds the evaluation radius {2}")]
    OutsideRadius(String, f64, f64),
    #[error("linear part of the map is singular or badly conditioned (cond ~ {0:.3e})")]
    SingularLinearPart(f64),
    #[error("fibre degree {0} exceeds the cap {1}")]
    FibreDegreeOverflow(u32, u32),
    #[error("operation requires a fibre-free series")]
    FibreContent,
    #[error("map inversion expects {0} series in {0} graded variables, got {1}")]
    InversionShape(usize, usize),
}

/// One chart variable: its name and truncation weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    /// Counts toward the truncation order.
    pub graded: bool,
    /// Polynomial fibre direction (kept exact, capped by [`FIBRE_CAP`]).
    pub fibre: bool,
    /// Index of the conjugate partner under `bar_swap`, if any.
    pub pair: Option<usize>,
}

/// Ordered list of variables shared by all series of one chart.
#[derive(Debug, PartialEq, Eq)]
pub struct VarSet {
    pub vars: Vec<Var>,
}

impl VarSet {
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    /// All-graded variable set with the given names, no pairing.
    pub fn graded(names: &[&str]) -> Arc<VarSet> {
        Arc::new(VarSet {
            vars: names
                .iter()
                .map(|n| Var {
                    name: n.to_string(),
                    graded: true,
                    fibre: false,
                    pair: None,
                })
                .collect(),
        })
    }

    /// Complexified base chart `z1..zn, zt1..ztn` with conjugate pairing.
    pub fn base(n: usize) -> Arc<VarSet> {
        let mut vars = Vec::with_capacity(2 * n);
        for i in 0..n {
            vars.push(Var {
                name: format!("z{}", i + 1),
                graded: true,
                fibre: false,
                pair: Some(n + i),
            });
        }
        for i in 0..n {
            vars.push(Var {
                name: format!("zt{}", i + 1),
                graded: true,
                fibre: false,
                pair: Some(i),
            });
        }
        Arc::new(VarSet { vars })
    }

    /// Base chart extended by one fibre coordinate (`t` by default).
    pub fn base_with_fibre(n: usize, fibre_name: &str) -> Arc<VarSet> {
        let base = VarSet::base(n);
        let mut vars = base.vars.clone();
        vars.push(Var {
            name: fibre_name.to_string(),
            graded: false,
            fibre: true,
            pair: None,
        });
        Arc::new(VarSet { vars })
    }

    fn describe(&self) -> String {
        self.vars
            .iter()
            .map(|v| v.name.clone())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Exponent vector, aligned with a `VarSet`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expo(pub Vec<u8>);

impl Expo {
    pub fn zeros(n: usize) -> Expo {
        Expo(vec![0; n])
    }

    pub fn unit(n: usize, idx: usize) -> Expo {
        let mut e = vec![0; n];
        e[idx] = 1;
        Expo(e)
    }

    fn add(&self, other: &Expo) -> Expo {
        Expo(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }
}

/// Evaluation point: assignment of complex values to variable names.
pub type Point = BTreeMap<String, C64>;

/// Truncated multivariate power series with complex coefficients.
#[derive(Debug, Clone)]
pub struct Series {
    pub vars: Arc<VarSet>,
    pub order: u32,
    pub coeffs: BTreeMap<Expo, C64>,
}

fn same_vars(a: &Series, b: &Series) -> Result<(), SeriesError> {
    if Arc::ptr_eq(&a.vars, &b.vars) || a.vars == b.vars {
        Ok(())
    } else {
        Err(SeriesError::VarSetMismatch(
            a.vars.describe(),
            b.vars.describe(),
        ))
    }
}

impl Series {
    pub fn zero(vars: &Arc<VarSet>, order: u32) -> Series {
        Series {
            vars: Arc::clone(vars),
            order,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Arc<VarSet>, order: u32, c: C64) -> Series {
        let mut s = Series::zero(vars, order);
        if c.norm() >= EPS_DROP {
            s.coeffs.insert(Expo::zeros(vars.len()), c);
        }
        s
    }

    pub fn one(vars: &Arc<VarSet>, order: u32) -> Series {
        Series::constant(vars, order, C64::new(1.0, 0.0))
    }

    pub fn variable(vars: &Arc<VarSet>, order: u32, idx: usize) -> Series {
        let mut s = Series::zero(vars, order);
        s.coeffs
            .insert(Expo::unit(vars.len(), idx), C64::new(1.0, 0.0));
        s
    }

    pub fn variable_named(
        vars: &Arc<VarSet>,
        order: u32,
        name: &str,
    ) -> Result<Series, SeriesError> {
        let idx = vars
            .index_of(name)
            .ok_or_else(|| SeriesError::UnknownVariable(name.to_string()))?;
        Ok(Series::variable(vars, order, idx))
    }

    /// Build from explicit (exponent, coefficient) terms, truncating.
    pub fn from_terms(vars: &Arc<VarSet>, order: u32, terms: &[(Vec<u8>, C64)]) -> Series {
        let mut s = Series::zero(vars, order);
        for (e, c) in terms {
            let e = Expo(e.clone());
            if s.graded_degree(&e) <= order {
                *s.coeffs.entry(e).or_insert(C64::new(0.0, 0.0)) += *c;
            }
        }
        s.normalize();
        s
    }

    fn graded_degree(&self, e: &Expo) -> u32 {
        e.0.iter()
            .zip(&self.vars.vars)
            .filter(|(_, v)| v.graded)
            .map(|(&x, _)| x as u32)
            .sum()
    }

    fn fibre_degree(&self, e: &Expo) -> u32 {
        e.0.iter()
            .zip(&self.vars.vars)
            .filter(|(_, v)| v.fibre)
            .map(|(&x, _)| x as u32)
            .sum()
    }

    pub fn constant_term(&self) -> C64 {
        self.coeffs
            .get(&Expo::zeros(self.vars.len()))
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn has_fibre_content(&self) -> bool {
        self.coeffs.keys().any(|e| self.fibre_degree(e) > 0)
    }

    /// Largest coefficient magnitude.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn normalize(&mut self) {
        self.coeffs.retain(|_, c| c.norm() >= EPS_DROP);
    }

    pub fn neg(&self) -> Series {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, k: C64) -> Series {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= k;
        }
        out.normalize();
        out
    }

    pub fn add(&self, other: &Series) -> Result<Series, SeriesError> {
        same_vars(self, other)?;
        let order = self.order.min(other.order);
        let mut out = Series::zero(&self.vars, order);
        for (e, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            if self.graded_degree(e) <= order {
                *out.coeffs.entry(e.clone()).or_insert(C64::new(0.0, 0.0)) += *c;
            }
        }
        out.normalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Series) -> Result<Series, SeriesError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Series) -> Result<Series, SeriesError> {
        same_vars(self, other)?;
        let order = self.order.min(other.order);
        let mut out = Series::zero(&self.vars, order);
        for (ea, ca) in &self.coeffs {
            let da = self.graded_degree(ea);
            if da > order {
                continue;
            }
            for (eb, cb) in &other.coeffs {
                if da + self.graded_degree(eb) > order {
                    continue;
                }
                let e = ea.add(eb);
                *out.coeffs.entry(e).or_insert(C64::new(0.0, 0.0)) += ca * cb;
            }
        }
        let fcap = out
            .coeffs
            .keys()
            .map(|e| out.fibre_degree(e))
            .max()
            .unwrap_or(0);
        if fcap > FIBRE_CAP {
            return Err(SeriesError::FibreDegreeOverflow(fcap, FIBRE_CAP));
        }
        out.normalize();
        Ok(out)
    }

    /// Formal partial derivative. Differentiating along a graded variable
    /// loses one order of accuracy; the result records that.
    pub fn derivative(&self, idx: usize) -> Series {
        let graded = self.vars.vars[idx].graded;
        let order = if graded {
            self.order.saturating_sub(1)
        } else {
            self.order
        };
        let mut out = Series::zero(&self.vars, order);
        for (e, c) in &self.coeffs {
            let k = e.0[idx];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2.0[idx] = k - 1;
            if out.graded_degree(&e2) <= order {
                out.coeffs.insert(e2, c * C64::new(k as f64, 0.0));
            }
        }
        out.normalize();
        out
    }

    pub fn derivative_named(&self, name: &str) -> Result<Series, SeriesError> {
        let idx = self
            .vars
            .index_of(name)
            .ok_or_else(|| SeriesError::UnknownVariable(name.to_string()))?;
        Ok(self.derivative(idx))
    }

    /// Substitute a series for every variable. All substituted series live on
    /// a common variable set and must have (numerically) zero constant term,
    /// so that truncation commutes with the substitution.
    pub fn compose(&self, subst: &[Series]) -> Result<Series, SeriesError> {
        assert_eq!(subst.len(), self.vars.len(), "one series per variable");
        let target = Arc::clone(&subst[0].vars);
        let mut order = self.order;
        for (v, s) in self.vars.vars.iter().zip(subst) {
            same_vars(&subst[0], s)?;
            order = order.min(s.order);
            let c0 = s.constant_term().norm();
            if c0 > UNIT_EPS
                && self
                    .coeffs
                    .keys()
                    .any(|e| e.0[self.vars.index_of(&v.name).unwrap()] > 0)
            {
                return Err(SeriesError::CompositionConstantTerm(v.name.clone(), c0));
            }
        }
        // Cache powers of each substituted series up to the needed exponent.
        let mut powers: Vec<Vec<Series>> = Vec::with_capacity(subst.len());
        let max_exp: Vec<u8> = (0..self.vars.len())
            .map(|i| self.coeffs.keys().map(|e| e.0[i]).max().unwrap_or(0))
            .collect();
        for (i, s) in subst.iter().enumerate() {
            let mut ps = vec![Series::one(&target, order)];
            for k in 1..=max_exp[i] as usize {
                let p = ps[k - 1].mul(s)?;
                ps.push(p);
            }
            powers.push(ps);
        }
        let mut out = Series::zero(&target, order);
        for (e, c) in &self.coeffs {
            let mut term = Series::constant(&target, order, *c);
            for (i, &k) in e.0.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&powers[i][k as usize])?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Multiplicative inverse; requires a unit constant term and no fibre content.
    pub fn reciprocal(&self) -> Result<Series, SeriesError> {
        if self.has_fibre_content() {
            return Err(SeriesError::FibreContent);
        }
        let c = self.constant_term();
        if c.norm() < UNIT_EPS {
            return Err(SeriesError::NotAUnit(c.norm()));
        }
        // 1/(c(1+u)) = (1/c) Σ (-u)^k with u = a/c - 1 nilpotent by truncation.
        let u = self
            .scale(C64::new(1.0, 0.0) / c)
            .sub(&Series::one(&self.vars, self.order))?;
        let mut acc = Series::one(&self.vars, self.order);
        let mut pw = Series::one(&self.vars, self.order);
        for _ in 0..self.order {
            pw = pw.mul(&u.neg())?;
            if pw.is_zero() {
                break;
            }
            acc = acc.add(&pw)?;
        }
        Ok(acc.scale(C64::new(1.0, 0.0) / c))
    }

    /// Exponential of a fibre-free series.
    pub fn exp(&self) -> Result<Series, SeriesError> {
        if self.has_fibre_content() {
            return Err(SeriesError::FibreContent);
        }
        let c = self.constant_term();
        let u = self.sub(&Series::constant(&self.vars, self.order, c))?;
        let mut acc = Series::one(&self.vars, self.order);
        let mut term = Series::one(&self.vars, self.order);
        for k in 1..=self.order.max(1) {
            term = term.mul(&u)?.scale(C64::new(1.0 / k as f64, 0.0));
            if term.is_zero() {
                break;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc.scale(c.exp()))
    }

    /// Principal-branch logarithm; the constant term must stay off the closed
    /// negative real axis (the potentials here satisfy h > 0 near the base point).
    pub fn log(&self) -> Result<Series, SeriesError> {
        if self.has_fibre_content() {
            return Err(SeriesError::FibreContent);
        }
        let c = self.constant_term();
        if c.norm() < UNIT_EPS {
            return Err(SeriesError::NotAUnit(c.norm()));
        }
        if c.re < 0.0 && c.im.abs() < UNIT_EPS {
            return Err(SeriesError::LogBranch);
        }
        let u = self
            .scale(C64::new(1.0, 0.0) / c)
            .sub(&Series::one(&self.vars, self.order))?;
        // log(1+u) = Σ (-1)^{k+1} u^k / k
        let mut acc = Series::zero(&self.vars, self.order);
        let mut pw = Series::one(&self.vars, self.order);
        for k in 1..=self.order.max(1) {
            pw = pw.mul(&u)?;
            if pw.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc = acc.add(&pw.scale(C64::new(sign / k as f64, 0.0)))?;
        }
        acc.add(&Series::constant(&self.vars, self.order, c.ln()))
    }

    /// Evaluate at a point given per-variable values aligned with the chart.
    pub fn eval_slice(&self, values: &[C64]) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (e, c) in &self.coeffs {
            let mut m = *c;
            for (i, &k) in e.0.iter().enumerate() {
                for _ in 0..k {
                    m *= values[i];
                }
            }
            total += m;
        }
        total
    }

    /// Evaluate at a named point, checking assignments and radii.
    pub fn evaluate(&self, p: &Point) -> Result<C64, SeriesError> {
        self.evaluate_with_radius(p, EVAL_RADIUS)
    }

    pub fn evaluate_with_radius(&self, p: &Point, radius: f64) -> Result<C64, SeriesError> {
        let mut values = Vec::with_capacity(self.vars.len());
        for v in &self.vars.vars {
            let val = p
                .get(&v.name)
                .copied()
                .ok_or_else(|| SeriesError::MissingAssignment(v.name.clone()))?;
            let bound = if v.fibre { FIBRE_RADIUS } else { radius };
            if val.norm() > bound {
                return Err(SeriesError::OutsideRadius(
                    v.name.clone(),
                    val.norm(),
                    bound,
                ));
            }
            values.push(val);
        }
        Ok(self.eval_slice(&values))
    }

    /// Substitute numeric values for a subset of variables, keeping the rest formal.
    pub fn partial_eval(&self, assignments: &[(usize, C64)]) -> Series {
        let mut out = Series::zero(&self.vars, self.order);
        for (e, c) in &self.coeffs {
            let mut m = *c;
            let mut e2 = e.clone();
            for &(i, val) in assignments {
                for _ in 0..e.0[i] {
                    m *= val;
                }
                e2.0[i] = 0;
            }
            if m.norm() >= EPS_DROP {
                *out.coeffs.entry(e2).or_insert(C64::new(0.0, 0.0)) += m;
            }
        }
        out.normalize();
        out
    }

    /// Re-embed into another variable set; `index_map[i]` is the target
    /// index of variable `i`.
    pub fn lift(&self, target: &Arc<VarSet>, index_map: &[usize]) -> Series {
        let mut out = Series::zero(target, self.order);
        for (e, c) in &self.coeffs {
            let mut e2 = vec![0u8; target.len()];
            for (i, &k) in e.0.iter().enumerate() {
                e2[index_map[i]] = k;
            }
            out.coeffs.insert(Expo(e2), *c);
        }
        out
    }

    /// Swap each variable with its conjugate partner and conjugate every
    /// coefficient. An antilinear involution on paired charts.
    pub fn bar_swap(&self) -> Result<Series, SeriesError> {
        let mut out = Series::zero(&self.vars, self.order);
        for (e, c) in &self.coeffs {
            let mut e2 = vec![0u8; e.0.len()];
            for (i, &k) in e.0.iter().enumerate() {
                if k == 0 {
                    e2[i] += 0;
                    continue;
                }
                match self.vars.vars[i].pair {
                    Some(j) => e2[j] += k,
                    None => {
                        return Err(SeriesError::UnpairedVariable(
                            self.vars.vars[i].name.clone(),
                        ))
                    }
                }
            }
            out.coeffs.insert(Expo(e2), c.conj());
        }
        Ok(out)
    }

    /// max |self - other| over coefficients.
    pub fn residual_vs(&self, other: &Series) -> f64 {
        match self.sub(other) {
            Ok(d) => d.max_norm(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Stable listing (exponent, coefficient) for dumps.
    pub fn terms_sorted(&self) -> Vec<(Vec<u8>, C64)> {
        self.coeffs.iter().map(|(e, c)| (e.0.clone(), *c)).collect()
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let names = self.vars.names();
        let mut first = true;
        for (e, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (i, &k) in e.0.iter().enumerate() {
                if k == 1 {
                    write!(f, "*{}", names[i])?;
                } else if k > 1 {
                    write!(f, "*{}^{}", names[i], k)?;
                }
            }
        }
        Ok(())
    }
}

/// Invert a formal map of `n` series in `n` graded variables with `F(0) = 0`.
///
/// The result lives on `target` (one fresh variable per component of `F`) and
/// satisfies `F ∘ G = id` exactly through the truncation order.
pub fn invert_map(f: &[Series], target: &Arc<VarSet>) -> Result<Vec<Series>, SeriesError> {
    invert_map_bounded(f, target, INVERT_COND_BOUND)
}

/// As [`invert_map`], with an explicit bound on the condition number of the
/// linear part.
pub fn invert_map_bounded(
    f: &[Series],
    target: &Arc<VarSet>,
    cond_bound: f64,
) -> Result<Vec<Series>, SeriesError> {
    let n = f.len();
    if n == 0 || target.len() != n {
        return Err(SeriesError::InversionShape(n, target.len()));
    }
    let src = Arc::clone(&f[0].vars);
    if src.len() != n || src.vars.iter().any(|v| !v.graded) {
        return Err(SeriesError::InversionShape(n, src.len()));
    }
    let order = f.iter().map(|s| s.order).min().unwrap();
    for s in f {
        same_vars(&f[0], s)?;
        if s.constant_term().norm() > UNIT_EPS {
            return Err(SeriesError::CompositionConstantTerm(
                "map component".into(),
                s.constant_term().norm(),
            ));
        }
    }
    // Linear part A[i][j] = ∂F_i/∂x_j at 0.
    let mut a = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (i, s) in f.iter().enumerate() {
        for j in 0..n {
            a[i][j] = s
                .coeffs
                .get(&Expo::unit(n, j))
                .copied()
                .unwrap_or(C64::new(0.0, 0.0));
        }
    }
    let ainv = crate::linalg::invert(&a).ok_or(SeriesError::SingularLinearPart(f64::INFINITY))?;
    let cond = crate::linalg::norm_1(&a) * crate::linalg::norm_1(&ainv);
    if !cond.is_finite() || cond > cond_bound {
        return Err(SeriesError::SingularLinearPart(cond));
    }
    // Higher-order part H := F - A x on the source chart.
    let mut h: Vec<Series> = Vec::with_capacity(n);
    for (i, s) in f.iter().enumerate() {
        let mut lin = Series::zero(&src, order);
        for j in 0..n {
            lin = lin.add(&Series::variable(&src, order, j).scale(a[i][j]))?;
        }
        h.push(s.sub(&lin)?);
    }
    // Fixed point G = A^{-1} (w - H(G)), gaining one degree per sweep.
    let wvars: Vec<Series> = (0..n).map(|j| Series::variable(target, order, j)).collect();
    let apply_ainv = |rhs: &[Series]| -> Result<Vec<Series>, SeriesError> {
        let mut out = Vec::with_capacity(n);
        for row in &ainv {
            let mut acc = Series::zero(target, order);
            for (j, coeff) in row.iter().enumerate() {
                acc = acc.add(&rhs[j].scale(*coeff))?;
            }
            out.push(acc);
        }
        Ok(out)
    };
    let mut g = apply_ainv(&wvars)?;
    for _ in 0..order {
        let mut rhs = Vec::with_capacity(n);
        for (j, hj) in h.iter().enumerate() {
            rhs.push(wvars[j].sub(&hj.compose(&g)?)?);
        }
        let next = apply_ainv(&rhs)?;
        let delta: f64 = next
            .iter()
            .zip(&g)
            .map(|(x, y)| x.residual_vs(y))
            .fold(0.0, f64::max);
        g = next;
        if delta < EPS_DROP {
            break;
        }
    }
    Ok(g)
}
