//! Complexified Kähler input data: potential κ on the chart (z, z̃), the
//! bundle potential η = cκ, connection coefficients a_i = ∂κ/∂z_i and
//! ã_i = ∂κ/∂z̃_i, metric g_{ij̃} = ∂²κ/∂z_i∂z̃_j, and Christoffel symbols.

use crate::exterior::{Chart, Form};
use crate::linalg;
use crate::sampling::Sampler;
use crate::series::{Series, SeriesError, VarSet, C64};

/// Smallest admissible eigenvalue of g(0).
pub const DELTA_PD: f64 = 1e-8;
/// Reality / symmetry tolerance on input coefficients.
pub const REALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum KahlerError {
    #[error("truncation order {0} is too low to see curvature (need >= 4)")]
    OrderTooLow(u32),
    #[error("potential violates reality: bar-swap residual {0:.3e}")]
    RealityViolation(f64),
    #[error("g(0) is not positive-definite (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("metric series is singular at the base point")]
    SingularMetric,
    #[error("unknown builtin geometry `{0}`")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Input choice for the potential.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Flat,
    FubiniStudy,
    /// Explicit monomial terms (z-exponents, z̃-exponents, coefficient).
    Explicit(Vec<(Vec<u8>, Vec<u8>, C64)>),
}

/// Validated Kähler input with all derived fields.
#[derive(Debug, Clone)]
pub struct KahlerData {
    pub n: usize,
    pub c: f64,
    pub order: u32,
    pub vars: Chart,
    pub kappa: Series,
    pub eta: Series,
    /// a_i = ∂κ/∂z_i
    pub a: Vec<Series>,
    /// ã_i = ∂κ/∂z̃_i
    pub at: Vec<Series>,
    /// g[i][j] = ∂²κ/∂z_i∂z̃_j
    pub g: Vec<Vec<Series>>,
    /// g(0) and its inverse as numeric matrices.
    pub g0: Vec<Vec<C64>>,
    pub g0_inv: Vec<Vec<C64>>,
}

/// Γ^l_{jk} for the holomorphic directions (symmetric in j,k) and the
/// mirrored symbols along the antiholomorphic directions.
#[derive(Debug, Clone)]
pub struct Christoffels {
    pub gamma: Vec<Vec<Vec<Series>>>,
    pub gamma_mirror: Vec<Vec<Vec<Series>>>,
}

fn builtin_kappa(
    spec: &PotentialSpec,
    vars: &Chart,
    n: usize,
    order: u32,
) -> Result<Series, KahlerError> {
    match spec {
        PotentialSpec::Flat => {
            let mut k = Series::zero(vars, order);
            for i in 0..n {
                let term =
                    Series::variable(vars, order, i).mul(&Series::variable(vars, order, n + i))?;
                k = k.add(&term)?;
            }
            Ok(k)
        }
        PotentialSpec::FubiniStudy => {
            let mut u = Series::zero(vars, order);
            for i in 0..n {
                u = u.add(&Series::variable(vars, order, i).mul(&Series::variable(
                    vars,
                    order,
                    n + i,
                ))?)?;
            }
            Ok(Series::one(vars, order).add(&u)?.log()?)
        }
        PotentialSpec::Explicit(terms) => {
            let list: Vec<(Vec<u8>, C64)> = terms
                .iter()
                .map(|(ze, zte, c)| {
                    let mut e = vec![0u8; 2 * n];
                    for (i, &k) in ze.iter().enumerate().take(n) {
                        e[i] = k;
                    }
                    for (i, &k) in zte.iter().enumerate().take(n) {
                        e[n + i] = k;
                    }
                    (e, *c)
                })
                .collect();
            Ok(Series::from_terms(vars, order, &list))
        }
    }
}

impl KahlerData {
    /// Validate and derive everything from a potential spec.
    pub fn load(
        spec: &PotentialSpec,
        n: usize,
        c: f64,
        order: u32,
    ) -> Result<KahlerData, KahlerError> {
        if order < 4 {
            return Err(KahlerError::OrderTooLow(order));
        }
        let vars = VarSet::base(n);
        let raw = builtin_kappa(spec, &vars, n, order)?;
        // Reality first, on the raw input.
        let residual = raw.bar_swap()?.residual_vs(&raw);
        if residual > REALITY_TOL {
            return Err(KahlerError::RealityViolation(residual));
        }
        // Kähler-potential gauge: κ(0) = 0, no pure-z and no pure-z̃ part.
        let mut kappa = raw;
        kappa.coeffs.retain(|e, _| {
            let zdeg: u32 = e.0[..n].iter().map(|&x| x as u32).sum();
            let ztdeg: u32 = e.0[n..].iter().map(|&x| x as u32).sum();
            zdeg > 0 && ztdeg > 0
        });
        let residual = kappa.bar_swap()?.residual_vs(&kappa);
        if residual > REALITY_TOL {
            return Err(KahlerError::RealityViolation(residual));
        }
        let a: Vec<Series> = (0..n).map(|i| kappa.derivative(i)).collect();
        let at: Vec<Series> = (0..n).map(|i| kappa.derivative(n + i)).collect();
        let g: Vec<Vec<Series>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| kappa.derivative(i).derivative(n + j))
                    .collect()
            })
            .collect();
        let g0: Vec<Vec<C64>> = g
            .iter()
            .map(|row| row.iter().map(|s| s.constant_term()).collect())
            .collect();
        let eig = linalg::hermitian_eigenvalues(&g0);
        if eig[0] <= DELTA_PD {
            return Err(KahlerError::NotPositive(eig[0]));
        }
        let g0_inv = linalg::invert(&g0).ok_or(KahlerError::SingularMetric)?;
        let eta = kappa.scale(C64::new(c, 0.0));
        Ok(KahlerData {
            n,
            c,
            order,
            vars,
            kappa,
            eta,
            a,
            at,
            g,
            g0,
            g0_inv,
        })
    }

    /// Hyperkähler limit: the contact structure degenerates at c = 0.
    pub fn is_degenerate(&self) -> bool {
        self.c == 0.0
    }

    /// ω := d(Σ a_i dz_i), a 2-form with dz∧dz̃ components only.
    pub fn kahler_form(&self) -> Result<Form, KahlerError> {
        let mut alpha = Form::zero(&self.vars, 1, self.order);
        for (i, ai) in self.a.iter().enumerate() {
            alpha = alpha
                .add(&Form::one_form_term(ai.clone(), i))
                .map_err(form_err)?;
        }
        alpha.d().map_err(form_err)
    }

    /// Connection form A := c Σ a_i dz_i = ∂η.
    pub fn connection_form(&self) -> Result<Form, KahlerError> {
        let mut alpha = Form::zero(&self.vars, 1, self.order);
        for (i, ai) in self.a.iter().enumerate() {
            alpha = alpha
                .add(&Form::one_form_term(ai.scale(C64::new(self.c, 0.0)), i))
                .map_err(form_err)?;
        }
        Ok(alpha)
    }

    /// max coefficient of dA − c·ω; vanishes identically by construction and
    /// serves as the internal consistency witness for the exterior path.
    pub fn curvature_residual(&self) -> Result<f64, KahlerError> {
        let da = self.connection_form()?.d().map_err(form_err)?;
        let om = self.kahler_form()?.scale(C64::new(self.c, 0.0));
        Ok(da.residual_vs(&om))
    }

    /// Series inverse of the metric: ginv[l][m] with Σ_m ginv[l][m] g[k][m] = δ_{lk}.
    fn metric_inverse(&self) -> Result<Vec<Vec<Series>>, KahlerError> {
        let n = self.n;
        // Invert the transpose M[i][j] = g[j][i] so that ginv·gᵀ = I.
        let c0: Vec<Vec<C64>> = (0..n)
            .map(|i| (0..n).map(|j| self.g0[j][i]).collect())
            .collect();
        let c0_inv = linalg::invert(&c0).ok_or(KahlerError::SingularMetric)?;
        // E := C⁻¹ M − I has zero constant term.
        let mut e: Vec<Vec<Series>> = vec![vec![Series::zero(&self.vars, self.order); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Series::zero(&self.vars, self.order);
                for k in 0..n {
                    acc = acc.add(&self.g[j][k].scale(c0_inv[i][k]))?;
                }
                if i == j {
                    acc = acc.sub(&Series::one(&self.vars, self.order))?;
                }
                e[i][j] = acc;
            }
        }
        // (I + E)⁻¹ = Σ (−E)^k, then multiply by C⁻¹ on the right.
        let mut inv: Vec<Vec<Series>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Series::one(&self.vars, self.order)
                        } else {
                            Series::zero(&self.vars, self.order)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut pw = inv.clone();
        for _ in 0..self.order {
            // pw := -pw · E
            let mut next: Vec<Vec<Series>> = vec![vec![Series::zero(&self.vars, self.order); n]; n];
            let mut nonzero = false;
            for i in 0..n {
                for j in 0..n {
                    let mut acc = Series::zero(&self.vars, self.order);
                    for k in 0..n {
                        acc = acc.add(&pw[i][k].mul(&e[k][j])?)?;
                    }
                    let acc = acc.neg();
                    nonzero |= !acc.is_zero();
                    next[i][j] = acc;
                }
            }
            if !nonzero {
                break;
            }
            for i in 0..n {
                for j in 0..n {
                    inv[i][j] = inv[i][j].add(&next[i][j])?;
                }
            }
            pw = next;
        }
        // ginv = inv · C⁻¹
        let mut out: Vec<Vec<Series>> = vec![vec![Series::zero(&self.vars, self.order); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Series::zero(&self.vars, self.order);
                for k in 0..n {
                    acc = acc.add(&inv[i][k].scale(c0_inv[k][j]))?;
                }
                out[i][j] = acc;
            }
        }
        Ok(out)
    }

    /// Levi-Civita symbols Γ^l_{jk} = g^{lm̃} ∂_{z_j} g_{km̃} and the mirror.
    pub fn christoffels(&self) -> Result<Christoffels, KahlerError> {
        let n = self.n;
        let ginv = self.metric_inverse()?;
        let mut gamma = vec![vec![vec![Series::zero(&self.vars, self.order); n]; n]; n];
        let mut mirror = vec![vec![vec![Series::zero(&self.vars, self.order); n]; n]; n];
        for l in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = Series::zero(&self.vars, self.order);
                    let mut acc_m = Series::zero(&self.vars, self.order);
                    for m in 0..n {
                        acc = acc.add(&ginv[l][m].mul(&self.g[k][m].derivative(j))?)?;
                        // mirror symbols need the transposed inverse: Σ_m ginv[m][l] g[m][k] = δ_{lk}
                        acc_m = acc_m.add(&ginv[m][l].mul(&self.g[m][k].derivative(n + j))?)?;
                    }
                    gamma[l][j][k] = acc;
                    mirror[l][j][k] = acc_m;
                }
            }
        }
        Ok(Christoffels {
            gamma,
            gamma_mirror: mirror,
        })
    }

    /// max coefficient of ∂_j∂_k p_i − Σ_l Γ^l_{jk} ∂_l p_i with p_i := ã_i,
    /// plus the mirrored statement; a mathematical identity of the potential.
    pub fn affine_residual(&self) -> Result<f64, KahlerError> {
        let n = self.n;
        let ch = self.christoffels()?;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let hess = self.at[i].derivative(j).derivative(k);
                    let mut conn = Series::zero(&self.vars, self.order);
                    for l in 0..n {
                        conn = conn.add(&ch.gamma[l][j][k].mul(&self.at[i].derivative(l))?)?;
                    }
                    worst = worst.max(hess.residual_vs(&conn));

                    let hess_m = self.a[i].derivative(n + j).derivative(n + k);
                    let mut conn_m = Series::zero(&self.vars, self.order);
                    for l in 0..n {
                        conn_m = conn_m
                            .add(&ch.gamma_mirror[l][j][k].mul(&self.a[i].derivative(n + l))?)?;
                    }
                    worst = worst.max(hess_m.residual_vs(&conn_m));
                }
            }
        }
        Ok(worst)
    }
}

fn form_err(e: crate::exterior::FormError) -> KahlerError {
    match e {
        crate::exterior::FormError::Series(s) => KahlerError::Series(s),
        other => KahlerError::Series(SeriesError::VarSetMismatch(
            "form".into(),
            format!("{other}"),
        )),
    }
}

/// Seeded random admissible potential: positive-definite quadratic part plus
/// small mixed higher-order terms obeying the reality symmetry.
pub fn random_admissible(n: usize, order: u32, seed: u64) -> PotentialSpec {
    let mut s = Sampler::new(seed, "random-potential");
    let mut terms: Vec<(Vec<u8>, Vec<u8>, C64)> = Vec::new();
    // Quadratic part I + H with H Hermitian, ‖H‖ small.
    for i in 0..n {
        for j in 0..n {
            let h = if i == j {
                C64::new(1.0 + s.real_in(-0.15, 0.15), 0.0)
            } else if i < j {
                s.disc(0.1)
            } else {
                continue;
            };
            let mut ze = vec![0u8; n];
            let mut zte = vec![0u8; n];
            ze[i] = 1;
            zte[j] = 1;
            terms.push((ze.clone(), zte.clone(), h));
            if i != j {
                let mut ze2 = vec![0u8; n];
                let mut zte2 = vec![0u8; n];
                ze2[j] = 1;
                zte2[i] = 1;
                terms.push((ze2, zte2, h.conj()));
            }
        }
    }
    // Mixed higher terms up to the truncation order.
    for deg in 3..=order.min(6) {
        for _ in 0..(2 * n) {
            let zdeg = 1 + (s.real_in(0.0, (deg - 1) as f64) as u32).min(deg - 2);
            let ztdeg = deg - zdeg;
            if ztdeg == 0 {
                continue;
            }
            let mut ze = vec![0u8; n];
            let mut zte = vec![0u8; n];
            for _ in 0..zdeg {
                let i = (s.real_in(0.0, n as f64) as usize).min(n - 1);
                ze[i] += 1;
            }
            for _ in 0..ztdeg {
                let i = (s.real_in(0.0, n as f64) as usize).min(n - 1);
                zte[i] += 1;
            }
            let coeff = s.disc(0.25_f64.powi(deg as i32 - 2));
            terms.push((ze.clone(), zte.clone(), coeff));
            terms.push((zte, ze, coeff.conj()));
        }
    }
    PotentialSpec::Explicit(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn flat_geometry() {
        let kd = KahlerData::load(&PotentialSpec::Flat, 2, 1.0, 8).unwrap();
        // g = identity, Γ = 0
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j {
                    Series::one(&kd.vars, kd.order)
                } else {
                    Series::zero(&kd.vars, kd.order)
                };
                assert!(kd.g[i][j].residual_vs(&expect) < 1e-15);
            }
        }
        let ch = kd.christoffels().unwrap();
        for l in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(ch.gamma[l][j][k].max_norm() < 1e-15);
                }
            }
        }
        assert!(kd.curvature_residual().unwrap() < 1e-15);
        assert!(kd.affine_residual().unwrap() < 1e-15);
        // flat, c=1: A = Σ zt_i dz_i
        let a = kd.connection_form().unwrap();
        let expect = Form::one_form_term(Series::variable(&kd.vars, kd.order, 2), 0)
            .add(&Form::one_form_term(
                Series::variable(&kd.vars, kd.order, 3),
                1,
            ))
            .unwrap();
        assert!(a.residual_vs(&expect) < 1e-15);
        // ω = Σ dzt_i ∧ dz_i: stored canonically as -dz_i ∧ dzt_i
        let om = kd.kahler_form().unwrap();
        let one = Series::one(&kd.vars, kd.order);
        let expect = Form::one_form_term(one.clone(), 0)
            .wedge(&Form::one_form_term(one.clone(), 2))
            .unwrap()
            .add(
                &Form::one_form_term(one.clone(), 1)
                    .wedge(&Form::one_form_term(one.clone(), 3))
                    .unwrap(),
            )
            .unwrap()
            .scale(c(-1.0));
        assert!(om.residual_vs(&expect) < 1e-15);
    }

    #[test]
    fn fubini_study_n1() {
        let kd = KahlerData::load(&PotentialSpec::FubiniStudy, 1, 1.0, 8).unwrap();
        // g = (1+z zt)^{-2} = 1 - 2 z zt + 3 (z zt)^2 - 4 (z zt)^3 ...
        let expect = Series::from_terms(
            &kd.vars,
            kd.order,
            &[
                (vec![0, 0], c(1.0)),
                (vec![1, 1], c(-2.0)),
                (vec![2, 2], c(3.0)),
                (vec![3, 3], c(-4.0)),
            ],
        );
        // derivative drops the order to 6; compare through degree 6
        assert!(kd.g[0][0].residual_vs(&expect) < 1e-13);
        // Γ^z_zz = -2 zt + 2 z zt^2 - 2 z^2 zt^3 + ...
        let ch = kd.christoffels().unwrap();
        let expect = Series::from_terms(
            &kd.vars,
            kd.order,
            &[
                (vec![0, 1], c(-2.0)),
                (vec![1, 2], c(2.0)),
                (vec![2, 3], c(-2.0)),
            ],
        );
        assert!(ch.gamma[0][0][0].residual_vs(&expect) < 1e-13);
        // A = (zt/(1+z zt)) dz for c = 1
        let a = kd.connection_form().unwrap();
        let coeff = a.terms.get(&vec![0u8]).unwrap();
        let expect = Series::from_terms(
            &kd.vars,
            kd.order,
            &[
                (vec![0, 1], c(1.0)),
                (vec![1, 2], c(-1.0)),
                (vec![2, 3], c(1.0)),
                (vec![3, 4], c(-1.0)),
            ],
        );
        assert!(coeff.residual_vs(&expect) < 1e-13);
        assert!(kd.curvature_residual().unwrap() < 1e-13);
        assert!(kd.affine_residual().unwrap() < 1e-13);
        // ω coefficient at the origin is ±1 on dz∧dzt
        let om = kd.kahler_form().unwrap();
        let coeff = om.terms.get(&vec![0u8, 1]).unwrap().constant_term();
        assert!((coeff.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        // non-real i z^2
        let bad = PotentialSpec::Explicit(vec![(vec![2], vec![0], C64::new(0.0, 1.0))]);
        assert!(matches!(
            KahlerData::load(&bad, 1, 1.0, 8),
            Err(KahlerError::RealityViolation(_))
        ));
        // order too low
        assert!(matches!(
            KahlerData::load(&PotentialSpec::Flat, 1, 1.0, 2),
            Err(KahlerError::OrderTooLow(2))
        ));
        // not positive definite: κ = -z zt
        let neg = PotentialSpec::Explicit(vec![(vec![1], vec![1], c(-1.0))]);
        assert!(matches!(
            KahlerData::load(&neg, 1, 1.0, 8),
            Err(KahlerError::NotPositive(_))
        ));
    }

    #[test]
    fn gauge_normalization_strips_pluriharmonic() {
        // κ = 1 + z^2 + zt^2 + z zt: the pure parts are stripped, leaving z zt.
        let spec = PotentialSpec::Explicit(vec![
            (vec![0], vec![0], c(1.0)),
            (vec![2], vec![0], c(1.0)),
            (vec![0], vec![2], c(1.0)),
            (vec![1], vec![1], c(1.0)),
        ]);
        let kd = KahlerData::load(&spec, 1, 1.0, 8).unwrap();
        let flat = KahlerData::load(&PotentialSpec::Flat, 1, 1.0, 8).unwrap();
        assert!(kd.kappa.residual_vs(&flat.kappa) < 1e-15);
    }

    #[test]
    fn degenerate_c_zero() {
        let kd = KahlerData::load(&PotentialSpec::FubiniStudy, 1, 0.0, 8).unwrap();
        assert!(kd.is_degenerate());
        assert!(kd.connection_form().unwrap().max_norm() < 1e-15);
        assert!(kd.curvature_residual().unwrap() < 1e-15);
    }

    #[test]
    fn dω_zero_and_hermitian_symmetry() {
        for seed in 0..5u64 {
            let spec = random_admissible(2, 8, seed);
            let kd = KahlerData::load(&spec, 2, 1.0, 8).unwrap();
            let om = kd.kahler_form().unwrap();
            assert!(om.d().unwrap().max_norm() < 1e-12);
            // bar_swap(g_ij) = g_ji
            for i in 0..2 {
                for j in 0..2 {
                    let sw = kd.g[i][j].bar_swap().unwrap();
                    assert!(sw.residual_vs(&kd.g[j][i]) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_potentials_satisfy_identities() {
        for seed in 0..5u64 {
            let spec = random_admissible(2, 8, 100 + seed);
            let kd = KahlerData::load(&spec, 2, 0.7, 8).unwrap();
            assert!(kd.curvature_residual().unwrap() < 1e-12);
            assert!(kd.affine_residual().unwrap() < 1e-10);
            // Γ symmetry in (j,k)
            let ch = kd.christoffels().unwrap();
            for l in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!(ch.gamma[l][j][k].residual_vs(&ch.gamma[l][k][j]) < 1e-12);
                    }
                }
            }
        }
    }
}
