//! Boundary-constrained shape families for inverse engineering.
//!
//! Polynomials are stored in normalized time `τ = t / T`, but conditions,
//! evaluation and derivatives are expressed in physical time `t ∈ [0, T]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use thiserror::Error;

/// Constraint `d^order x / dt^order (time) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    pub order: u8,
    pub time: f64,
    pub value: f64,
}

impl BoundaryCondition {
    pub fn new(order: u8, time: f64, value: f64) -> Self {
        Self { order, time, value }
    }
}

/// Value and first two time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnsatzError {
    #[error("span must be positive and finite, got {0}")]
    InvalidSpan(f64),
    #[error("degree {degree} with {free} free coefficients needs {expected} conditions, got {got}")]
    ConditionCount { degree: usize, free: usize, expected: usize, got: usize },
    #[error("free coefficient index {index} exceeds degree {degree}")]
    FreeIndexOutOfRange { index: usize, degree: usize },
    #[error("condition {0:?} has derivative order above 2 or lies outside the span")]
    BadCondition(BoundaryCondition),
    #[error("constraint system is singular for conditions {conditions:?} with free indices {free:?}")]
    Singular { conditions: Vec<BoundaryCondition>, free: Vec<usize> },
    #[error("tanh-tan width must exceed 1, got {0}")]
    InvalidWidth(f64),
    #[error("t = {t} lies outside the span [0, {span}]")]
    OutsideSpan { t: f64, span: f64 },
}

pub type Result<T> = std::result::Result<T, AnsatzError>;

/// Expansion basis for a polynomial in normalized time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Basis {
    /// `τⁿ`.
    #[default]
    Monomial,
    /// Shifted Legendre polynomials `Pₙ(2τ − 1)`. Monomial coefficients of
    /// high-degree shapes grow huge and cancel, so degrees beyond about 10
    /// should use this basis.
    Legendre,
}

/// Polynomial `Σ cₙ φₙ(τ)` on `t ∈ [0, span]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
    span: f64,
    basis: Basis,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>, span: f64) -> Result<Self> {
        Self::in_basis(Basis::Monomial, coeffs, span)
    }

    pub fn in_basis(basis: Basis, coeffs: Vec<f64>, span: f64) -> Result<Self> {
        check_span(span)?;
        Ok(Self { coeffs, span, basis })
    }

    /// Coefficients in the polynomial's own basis, lowest order first.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficients of `τⁿ`, lowest order first.
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        match self.basis {
            Basis::Monomial => self.coeffs.clone(),
            Basis::Legendre => {
                let mut out = vec![0.0; self.coeffs.len()];
                for (k, p) in shifted_legendre_monomials(self.coeffs.len()).iter().enumerate() {
                    for (o, v) in out.iter_mut().zip(p) {
                        *o += self.coeffs[k] * v;
                    }
                }
                out
            }
        }
    }

    /// The same polynomial in another basis.
    pub fn to_basis(&self, basis: Basis) -> Self {
        let coeffs = match (self.basis, basis) {
            (a, b) if a == b => self.coeffs.clone(),
            (_, Basis::Monomial) => self.monomial_coefficients(),
            (_, Basis::Legendre) => {
                let n = self.coeffs.len();
                let mut out = vec![0.0; n];
                for (x, w) in crate::numerics::gauss_legendre(n.max(1)) {
                    let f = self.eval_normalized(0.5 * (x + 1.0)).0;
                    legendre_walk(x, n, |k, v, _, _| out[k] += 0.5 * (2 * k + 1) as f64 * w * f * v);
                }
                out
            }
        };
        Self { coeffs, span: self.span, basis }
    }

    /// Value and first two derivatives with respect to `τ`.
    pub fn eval_normalized(&self, tau: f64) -> (f64, f64, f64) {
        match self.basis {
            Basis::Monomial => {
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for &c in self.coeffs.iter().rev() {
                    ddp = ddp * tau + 2.0 * dp;
                    dp = dp * tau + p;
                    p = p * tau + c;
                }
                (p, dp, ddp)
            }
            Basis::Legendre => {
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                legendre_walk(2.0 * tau - 1.0, self.coeffs.len(), |k, v, d1, d2| {
                    p += self.coeffs[k] * v;
                    dp += self.coeffs[k] * d1;
                    ddp += self.coeffs[k] * d2;
                });
                (p, 2.0 * dp, 4.0 * ddp)
            }
        }
    }
}

/// Calls `f(k, Pₖ(x), Pₖ'(x), Pₖ''(x))` for `k < n`.
fn legendre_walk(x: f64, n: usize, mut f: impl FnMut(usize, f64, f64, f64)) {
    let (mut p0, mut d0, mut s0) = (1.0, 0.0, 0.0);
    let (mut p1, mut d1, mut s1) = (x, 1.0, 0.0);
    for k in 0..n {
        f(k, p0, d0, s0);
        let kf = (k + 1) as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        let s2 = s0 + (2.0 * kf + 1.0) * d1;
        (p0, d0, s0) = (p1, d1, s1);
        (p1, d1, s1) = (p2, d2, s2);
    }
}

/// Monomial coefficients of `Pₖ(2τ − 1)` for `k < n`.
fn shifted_legendre_monomials(n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let next = match k {
            0 => vec![1.0],
            1 => vec![-1.0, 2.0],
            _ => {
                let m = (k - 1) as f64;
                let (prev, prev2) = (&out[k - 1], &out[k - 2]);
                let mut v = vec![0.0; k + 1];
                for (i, c) in prev.iter().enumerate() {
                    v[i] -= c * (2.0 * m + 1.0) / (m + 1.0);
                    v[i + 1] += 2.0 * c * (2.0 * m + 1.0) / (m + 1.0);
                }
                for (i, c) in prev2.iter().enumerate() {
                    v[i] -= c * m / (m + 1.0);
                }
                v
            }
        };
        out.push(next);
    }
    out
}

/// `offset + amplitude·tanh(a1·tan(π/width·(t/T − ½)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhTan {
    pub amplitude: f64,
    pub offset: f64,
    pub a1: f64,
    pub width: f64,
    pub span: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeFunction {
    Polynomial(Polynomial),
    TanhTan(TanhTan),
}

impl ShapeFunction {
    pub fn span(&self) -> f64 {
        match self {
            Self::Polynomial(p) => p.span,
            Self::TanhTan(h) => h.span,
        }
    }

    /// Analytic value and time derivatives; `t` must lie in `[0, span]`.
    pub fn evaluate(&self, t: f64) -> Result<Derivs> {
        let span = self.span();
        if !(0.0..=span).contains(&t) {
            return Err(AnsatzError::OutsideSpan { t, span });
        }
        Ok(self.eval_unchecked(t))
    }

    /// Same as [`evaluate`](Self::evaluate) without the domain check, for
    /// hot loops whose sample points are known to be inside the span.
    pub fn eval_unchecked(&self, t: f64) -> Derivs {
        match self {
            Self::Polynomial(p) => {
                let (v, d1, d2) = p.eval_normalized((t / p.span).clamp(0.0, 1.0));
                Derivs { value: v, d1: d1 / p.span, d2: d2 / (p.span * p.span) }
            }
            Self::TanhTan(h) => {
                let k = PI / (h.width * h.span);
                let q = (k * t - PI / (2.0 * h.width)).tan();
                let q1 = k * (1.0 + q * q);
                let q2 = 2.0 * k * q * q1;
                let y = (h.a1 * q).tanh();
                let sech2 = 1.0 - y * y;
                let z1 = h.a1 * q1;
                let z2 = h.a1 * q2;
                Derivs {
                    value: h.offset + h.amplitude * y,
                    d1: h.amplitude * sech2 * z1,
                    d2: h.amplitude * sech2 * (z2 - 2.0 * y * z1 * z1),
                }
            }
        }
    }
}

fn check_span(span: f64) -> Result<()> {
    if span > 0.0 && span.is_finite() {
        Ok(())
    } else {
        Err(AnsatzError::InvalidSpan(span))
    }
}

/// Polynomial of `degree` satisfying every condition, with the coefficients
/// listed in `free` (index → value, normalized time) fixed.
pub fn fit_constrained_polynomial(
    degree: usize,
    conditions: &[BoundaryCondition],
    free: &BTreeMap<usize, f64>,
    span: f64,
) -> Result<ShapeFunction> {
    fit_constrained_polynomial_in(Basis::Monomial, degree, conditions, free, span)
}

/// [`fit_constrained_polynomial`] in an explicit basis; `free` indexes
/// coefficients of that basis.
pub fn fit_constrained_polynomial_in(
    basis: Basis,
    degree: usize,
    conditions: &[BoundaryCondition],
    free: &BTreeMap<usize, f64>,
    span: f64,
) -> Result<ShapeFunction> {
    check_span(span)?;
    let n = degree + 1;
    if let Some((&index, _)) = free.iter().find(|(&i, _)| i > degree) {
        return Err(AnsatzError::FreeIndexOutOfRange { index, degree });
    }
    if free.len() + conditions.len() != n {
        return Err(AnsatzError::ConditionCount {
            degree,
            free: free.len(),
            expected: n.saturating_sub(free.len()),
            got: conditions.len(),
        });
    }
    let mut conds = conditions.to_vec();
    for c in &conds {
        if c.order > 2 || !(0.0..=span).contains(&c.time) || !c.value.is_finite() {
            return Err(AnsatzError::BadCondition(*c));
        }
    }
    conds.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.order.cmp(&b.order)));

    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for (row, c) in conds.iter().enumerate() {
        let tau = c.time / span;
        let k = c.order as usize;
        match basis {
            Basis::Monomial => {
                for m in k..n {
                    let falling: f64 = ((m - k + 1)..=m).map(|j| j as f64).product();
                    a[row][m] = falling * tau.powi((m - k) as i32);
                }
            }
            Basis::Legendre => {
                let scale = 2f64.powi(k as i32);
                legendre_walk(2.0 * tau - 1.0, n, |m, v, d1, d2| {
                    a[row][m] = scale * [v, d1, d2][k];
                });
            }
        }
        rhs[row] = c.value * span.powi(k as i32);
    }
    for (row, (&i, &v)) in free.iter().enumerate() {
        a[conds.len() + row][i] = 1.0;
        rhs[conds.len() + row] = v;
    }
    let coeffs = solve_dense(a, rhs).ok_or_else(|| AnsatzError::Singular {
        conditions: conds.clone(),
        free: free.keys().copied().collect(),
    })?;
    Ok(ShapeFunction::Polynomial(Polynomial { coeffs, span, basis }))
}

/// Gaussian elimination plus one refinement step; `None` when singular.
fn solve_dense(a: Vec<Vec<f64>>, b: Vec<f64>) -> Option<Vec<f64>> {
    let mut x = eliminate(a.clone(), b.clone())?;
    let r: Vec<f64> = a.iter().zip(&b).map(|(row, bi)| bi - row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>()).collect();
    let dx = eliminate(a, r)?;
    x.iter_mut().zip(dx).for_each(|(v, d)| *v += d);
    Some(x)
}

fn eliminate(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        // earliest row among equal magnitudes, so exact unit rows win ties
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// The tanh∘tan family. Rejects `width <= 1`, where the tangent hits its
/// pole inside the span.
pub fn make_tanh_tan(amplitude: f64, offset: f64, a1: f64, width: f64, span: f64) -> Result<ShapeFunction> {
    check_span(span)?;
    if !(width > 1.0 && width.is_finite()) {
        return Err(AnsatzError::InvalidWidth(width));
    }
    Ok(ShapeFunction::TanhTan(TanhTan { amplitude, offset, a1, width, span }))
}
