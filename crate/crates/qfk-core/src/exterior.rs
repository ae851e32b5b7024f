//! Exterior algebra of differential forms over a coordinate chart, with
//! series coefficients. Only strictly increasing index tuples are stored,
//! so equality is a coefficient diff.

use crate::series::{Series, SeriesError, VarSet, C64};
use std::collections::BTreeMap;
use std::sync::Arc;

pub type Chart = Arc<VarSet>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum FormError {
    #[error("chart mismatch")]
    ChartMismatch,
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Merge two strictly increasing tuples; returns (merged, sign), or None if
/// they share an index.
fn merge_indices(a: &[u8], b: &[u8]) -> Option<(Vec<u8>, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut sign = 1.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining entries of a
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, sign))
}

/// Exterior form of fixed degree with series coefficients.
#[derive(Debug, Clone)]
pub struct Form {
    pub chart: Chart,
    pub degree: usize,
    pub order: u32,
    pub terms: BTreeMap<Vec<u8>, Series>,
}

impl Form {
    pub fn zero(chart: &Chart, degree: usize, order: u32) -> Form {
        Form {
            chart: Arc::clone(chart),
            degree,
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_function(s: &Series) -> Form {
        let mut f = Form::zero(&s.vars, 0, s.order);
        if !s.is_zero() {
            f.terms.insert(vec![], s.clone());
        }
        f
    }

    /// The coordinate differential d(x_idx) scaled by a series coefficient.
    pub fn one_form_term(coeff: Series, idx: usize) -> Form {
        let mut f = Form::zero(&coeff.vars.clone(), 1, coeff.order);
        if !coeff.is_zero() {
            f.terms.insert(vec![idx as u8], coeff);
        }
        f
    }

    fn same_chart(&self, other: &Form) -> Result<(), FormError> {
        if Arc::ptr_eq(&self.chart, &other.chart) || self.chart == other.chart {
            Ok(())
        } else {
            Err(FormError::ChartMismatch)
        }
    }

    fn insert_acc(&mut self, key: Vec<u8>, s: Series) -> Result<(), FormError> {
        if s.is_zero() {
            return Ok(());
        }
        match self.terms.remove(&key) {
            Some(prev) => {
                let sum = prev.add(&s)?;
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
            None => {
                self.terms.insert(key, s);
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Form) -> Result<Form, FormError> {
        self.same_chart(other)?;
        if self.degree != other.degree {
            return Err(FormError::DegreeMismatch(self.degree, other.degree));
        }
        let mut out = Form::zero(&self.chart, self.degree, self.order.min(other.order));
        for (k, s) in self.terms.iter().chain(other.terms.iter()) {
            out.insert_acc(k.clone(), s.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Form) -> Result<Form, FormError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: C64) -> Form {
        let mut out = self.clone();
        out.terms = out
            .terms
            .into_iter()
            .map(|(key, s)| (key, s.scale(k)))
            .filter(|(_, s)| !s.is_zero())
            .collect();
        out
    }

    pub fn scale_series(&self, s: &Series) -> Result<Form, FormError> {
        let mut out = Form::zero(&self.chart, self.degree, self.order.min(s.order));
        for (k, c) in &self.terms {
            out.insert_acc(k.clone(), c.mul(s)?)?;
        }
        Ok(out)
    }

    /// Graded-commutative wedge product.
    pub fn wedge(&self, other: &Form) -> Result<Form, FormError> {
        self.same_chart(other)?;
        let mut out = Form::zero(
            &self.chart,
            self.degree + other.degree,
            self.order.min(other.order),
        );
        for (ka, sa) in &self.terms {
            for (kb, sb) in &other.terms {
                if let Some((key, sign)) = merge_indices(ka, kb) {
                    let coeff = sa.mul(sb)?.scale(C64::new(sign, 0.0));
                    out.insert_acc(key, coeff)?;
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn d(&self) -> Result<Form, FormError> {
        let mut out = Form::zero(&self.chart, self.degree + 1, self.order);
        let mut min_order = self.order;
        for (key, s) in &self.terms {
            for j in 0..self.chart.len() {
                let ds = s.derivative(j);
                if ds.is_zero() {
                    continue;
                }
                min_order = min_order.min(ds.order);
                if let Some((k2, sign)) = merge_indices(&[j as u8], key) {
                    out.insert_acc(k2, ds.scale(C64::new(sign, 0.0)))?;
                }
            }
        }
        out.order = min_order;
        Ok(out)
    }

    /// Interior product (contraction in the first slot).
    pub fn interior(&self, x: &VectorField) -> Result<Form, FormError> {
        if !(Arc::ptr_eq(&self.chart, &x.chart) || self.chart == x.chart) {
            return Err(FormError::ChartMismatch);
        }
        if self.degree == 0 {
            return Ok(Form::zero(&self.chart, 0, self.order));
        }
        let mut out = Form::zero(&self.chart, self.degree - 1, self.order);
        for (key, s) in &self.terms {
            for (pos, &idx) in key.iter().enumerate() {
                if let Some(comp) = x.comps.get(&(idx as usize)) {
                    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                    let mut k2 = key.clone();
                    k2.remove(pos);
                    out.insert_acc(k2, s.mul(comp)?.scale(C64::new(sign, 0.0)))?;
                }
            }
        }
        Ok(out)
    }

    /// Lie derivative along a vector field, by the Cartan formula.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<Form, FormError> {
        let a = self.d()?.interior(x)?;
        let b = self.interior(x)?.d()?;
        a.add(&b)
    }

    /// Numeric coefficients per index tuple at a point (values aligned with the chart).
    pub fn eval(&self, values: &[C64]) -> BTreeMap<Vec<u8>, C64> {
        self.terms
            .iter()
            .map(|(k, s)| (k.clone(), s.eval_slice(values)))
            .collect()
    }

    /// Numeric covector (degree-1 forms only), aligned with the chart.
    pub fn eval_covector(&self, values: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.chart.len()];
        for (k, s) in &self.terms {
            out[k[0] as usize] = s.eval_slice(values);
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        self.terms
            .values()
            .map(|s| s.max_norm())
            .fold(0.0, f64::max)
    }

    pub fn residual_vs(&self, other: &Form) -> f64 {
        match self.sub(other) {
            Ok(d) => d.max_norm(),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Vector field with series components; missing components are zero.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub chart: Chart,
    pub comps: BTreeMap<usize, Series>,
}

impl VectorField {
    pub fn new(chart: &Chart) -> VectorField {
        VectorField {
            chart: Arc::clone(chart),
            comps: BTreeMap::new(),
        }
    }

    pub fn with(mut self, idx: usize, s: Series) -> VectorField {
        if !s.is_zero() {
            self.comps.insert(idx, s);
        }
        self
    }

    /// Apply as a derivation to a function.
    pub fn apply(&self, f: &Series) -> Result<Series, FormError> {
        let mut out = Series::zero(&f.vars, f.order);
        for (&i, comp) in &self.comps {
            out = out.add(&f.derivative(i).mul(comp)?)?;
        }
        Ok(out)
    }
}

/// Holomorphic map between charts: one series (in source coordinates) per
/// target coordinate.
#[derive(Debug, Clone)]
pub struct ChartMap {
    pub source: Chart,
    pub target: Chart,
    pub comps: Vec<Series>,
}

impl ChartMap {
    pub fn identity(chart: &Chart, order: u32) -> ChartMap {
        ChartMap {
            source: Arc::clone(chart),
            target: Arc::clone(chart),
            comps: (0..chart.len())
                .map(|i| Series::variable(chart, order, i))
                .collect(),
        }
    }

    /// Compose with another map: (self ∘ inner) as a map from inner.source.
    pub fn after(&self, inner: &ChartMap) -> Result<ChartMap, FormError> {
        let mut comps = Vec::with_capacity(self.comps.len());
        for c in &self.comps {
            comps.push(c.compose(&inner.comps)?);
        }
        Ok(ChartMap {
            source: Arc::clone(&inner.source),
            target: Arc::clone(&self.target),
            comps,
        })
    }

    /// Differential of one target coordinate as a 1-form on the source.
    pub fn differential(&self, target_idx: usize) -> Result<Form, FormError> {
        let c = &self.comps[target_idx];
        let mut out = Form::zero(&self.source, 1, c.order);
        for j in 0..self.source.len() {
            let dc = c.derivative(j);
            if !dc.is_zero() {
                out.insert_acc(vec![j as u8], dc)?;
            }
        }
        Ok(out)
    }

    /// Pull back a form on the target to a form on the source.
    pub fn pullback(&self, alpha: &Form) -> Result<Form, FormError> {
        if !(Arc::ptr_eq(&alpha.chart, &self.target) || alpha.chart == self.target) {
            return Err(FormError::ChartMismatch);
        }
        let order = alpha.order.min(
            self.comps
                .iter()
                .map(|c| c.order)
                .min()
                .unwrap_or(alpha.order),
        );
        let mut out = Form::zero(&self.source, alpha.degree, order);
        for (key, s) in &alpha.terms {
            let coeff = s.compose(&self.comps)?;
            if coeff.is_zero() {
                continue;
            }
            let mut wedge = Form::from_function(&Series::one(&self.source, order));
            for &i in key {
                wedge = wedge.wedge(&self.differential(i as usize)?)?;
            }
            for (k, c) in wedge.terms {
                out.insert_acc(k, c.mul(&coeff)?)?;
            }
        }
        Ok(out)
    }

    pub fn eval(&self, values: &[C64]) -> Vec<C64> {
        self.comps.iter().map(|c| c.eval_slice(values)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::VarSet;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn wedge_antisymmetry() {
        let ch = VarSet::base(1);
        let one = Series::one(&ch, 8);
        let dz = Form::one_form_term(one.clone(), 0);
        let dzt = Form::one_form_term(one.clone(), 1);
        // dz ∧ dz = 0
        assert!(dz.wedge(&dz).unwrap().terms.is_empty());
        // dz ∧ dzt = -dzt ∧ dz
        let a = dz.wedge(&dzt).unwrap();
        let b = dzt.wedge(&dz).unwrap().scale(c(-1.0));
        assert!(a.residual_vs(&b) < 1e-16);
    }

    #[test]
    fn wedge_contact_block() {
        // (du0 + 2c u1 dq1) ∧ (2c du1∧dq1) = 2c du0∧du1∧dq1 for c = 1
        let names = ["u0", "u1", "q1"];
        let ch = VarSet::graded(&names);
        let order = 6;
        let one = Series::one(&ch, order);
        let u1 = Series::variable(&ch, order, 1);
        let theta = Form::one_form_term(one.clone(), 0)
            .add(&Form::one_form_term(u1.scale(c(2.0)), 2))
            .unwrap();
        let du1 = Form::one_form_term(one.clone(), 1);
        let dq1 = Form::one_form_term(one.clone(), 2);
        let dtheta = du1.wedge(&dq1).unwrap().scale(c(2.0));
        let top = theta.wedge(&dtheta).unwrap();
        assert_eq!(top.terms.len(), 1);
        let coeff = top.terms.get(&vec![0u8, 1, 2]).unwrap();
        assert!(coeff.residual_vs(&one.scale(c(2.0))) < 1e-15);
    }

    #[test]
    fn exterior_derivative() {
        let ch = VarSet::base(1);
        let order = 8;
        let z = Series::variable(&ch, order, 0);
        let zt = Series::variable(&ch, order, 1);
        // d(z dzt) = dz ∧ dzt
        let f = Form::one_form_term(z.clone(), 1);
        let df = f.d().unwrap();
        let expect = Form::one_form_term(Series::one(&ch, order), 0)
            .wedge(&Form::one_form_term(Series::one(&ch, order), 1))
            .unwrap();
        assert!(df.residual_vs(&expect) < 1e-15);
        // d∘d = 0 on a sample 0-form
        let g = z.mul(&zt).unwrap().add(&z.mul(&z).unwrap()).unwrap();
        let ddg = Form::from_function(&g).d().unwrap().d().unwrap();
        assert!(ddg.max_norm() < 1e-15);
        // d(∂κ) for κ = z zt: ∂κ = zt dz, d(zt dz) = dzt∧dz = -dz∧dzt
        let dk = Form::one_form_term(zt.clone(), 0).d().unwrap();
        let m = expect.scale(c(-1.0));
        assert!(dk.residual_vs(&m) < 1e-15);
    }

    #[test]
    fn interior_product() {
        let ch = VarSet::base_with_fibre(1, "t");
        let order = 6;
        let one = Series::one(&ch, order);
        let t = Series::variable(&ch, order, 2);
        let dt = Form::one_form_term(one.clone(), 2);
        // i_{∂t}(dt) = 1
        let x = VectorField::new(&ch).with(2, one.clone());
        let r = dt.interior(&x).unwrap();
        assert!(r.terms.get(&vec![]).unwrap().residual_vs(&one) < 1e-16);
        // i_{t∂t}(dt + t a dz) = t  (a = zt here)
        let a = Series::variable(&ch, order, 1);
        let alpha = dt.add(&Form::one_form_term(t.mul(&a).unwrap(), 0)).unwrap();
        let xt = VectorField::new(&ch).with(2, t.clone());
        let r = alpha.interior(&xt).unwrap();
        assert!(r.terms.get(&vec![]).unwrap().residual_vs(&t) < 1e-16);
        // i_X(f) = 0 for 0-forms
        let f0 = Form::from_function(&a);
        assert!(f0.interior(&xt).unwrap().max_norm() == 0.0);
    }

    #[test]
    fn lie_derivative_scaling_field() {
        let ch = VarSet::base_with_fibre(1, "t");
        let order = 6;
        let one = Series::one(&ch, order);
        let t = Series::variable(&ch, order, 2);
        let xt = VectorField::new(&ch).with(2, t.clone());
        // L_{t∂t}(dt) = dt
        let dt = Form::one_form_term(one.clone(), 2);
        let l = dt.lie_derivative(&xt).unwrap();
        assert!(l.residual_vs(&dt) < 1e-16);
        // Leibniz: L_X(f α) = (Xf) α + f L_X α on a sample
        let f = t.mul(&Series::variable(&ch, order, 0)).unwrap();
        let alpha = Form::one_form_term(Series::variable(&ch, order, 1), 0)
            .add(&dt)
            .unwrap();
        let lhs = alpha.scale_series(&f).unwrap().lie_derivative(&xt).unwrap();
        let rhs = alpha
            .scale_series(&xt.apply(&f).unwrap())
            .unwrap()
            .add(&alpha.lie_derivative(&xt).unwrap().scale_series(&f).unwrap())
            .unwrap();
        assert!(lhs.residual_vs(&rhs) < 1e-14);
    }

    #[test]
    fn pullback_examples() {
        let order = 6;
        let up = VarSet::base_with_fibre(1, "t");
        let down = VarSet::graded(&["u0", "u1", "q1"]);
        // identity pullback
        let idm = ChartMap::identity(&down, order);
        let u1 = Series::variable(&down, order, 1);
        let alpha = Form::one_form_term(u1.clone(), 2);
        assert!(idm.pullback(&alpha).unwrap().residual_vs(&alpha) < 1e-15);
        // pullback of du0 under u0 = t is dt
        let t = Series::variable(&up, order, 2);
        let p = Series::variable(&up, order, 0); // placeholder affine coordinate: z
        let psi = ChartMap {
            source: Arc::clone(&up),
            target: Arc::clone(&down),
            comps: vec![
                t.clone(),
                t.mul(&p).unwrap(),
                Series::variable(&up, order, 1),
            ],
        };
        let du0 = Form::one_form_term(Series::one(&down, order), 0);
        let got = psi.pullback(&du0).unwrap();
        let dt = Form::one_form_term(Series::one(&up, order), 2);
        assert!(got.residual_vs(&dt) < 1e-15);
        // pullback of du1 under u1 = t·p: p dt + t dp
        let du1 = Form::one_form_term(Series::one(&down, order), 1);
        let got = psi.pullback(&du1).unwrap();
        let expect = Form::one_form_term(p.clone(), 2)
            .add(&Form::one_form_term(t.clone(), 0))
            .unwrap();
        assert!(got.residual_vs(&expect) < 1e-15);
    }

    #[test]
    fn eval_form_coefficients() {
        let ch = VarSet::base(1);
        let order = 6;
        let z = Series::variable(&ch, order, 0);
        let alpha = Form::one_form_term(z, 1); // z dzt
        let vals = vec![c(0.5), c(0.0)];
        let m = alpha.eval(&vals);
        assert!((m.get(&vec![1u8]).unwrap() - c(0.5)).norm() < 1e-16);
    }
}
