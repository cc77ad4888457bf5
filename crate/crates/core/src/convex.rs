//! Convex scalar functions on `[0, ∞)` and the Legendre pipeline
//! `Q → Q* → Φ* → Φ` together with the right-hand side `g = (Φ')⁻¹₊` of the
//! Emden–Fowler equation.
//!
//! Every function here is convex with `h(0) = h'(0) = 0`. Sampled functions
//! are stored on positive abscissae and interpolated in log-log coordinates
//! by cubic Hermite polynomials: values use the exact logarithmic slopes
//! `x h'(x) / h(x)`, derivatives use shape-preserving slopes. Pure power
//! laws are therefore reproduced to rounding.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::interp::Hermite;
use crate::quadrature::TanhSinh;

/// `4π√2`: the velocity measure `dv = 4π√2 √E dE` for `E = |v|²/2`.
pub const VELOCITY_MEASURE: f64 = 4.0 * PI * SQRT_2;

const INVERSE_TOL: f64 = 1e-12;

/// Behaviour of a function on the negative half-line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LeftBranch {
    /// Extended by `+∞` (`Q`, `Φ`).
    PlusInfinity,
    /// Identically zero (`Q*`, `Φ*`).
    Zero,
}

/// Value of a function extended to the whole real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended {
    Finite(f64),
    PlusInfinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FunctionKind {
    /// `coefficient · x^exponent` with `exponent > 1`.
    Power {
        coefficient: f64,
        exponent: f64,
    },
    Tabulated,
}

/// Log-spaced abscissae used when a function is sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRange {
    pub min: f64,
    pub max: f64,
    pub nodes: usize,
}

impl Default for SampleRange {
    fn default() -> Self {
        Self {
            min: 1e-8,
            max: 1e4,
            nodes: 2000,
        }
    }
}

impl SampleRange {
    fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) || self.nodes < 4 {
            return Err(invalid(format!("bad sample range {self:?}")));
        }
        Ok(())
    }

    pub fn abscissae(&self) -> Vec<f64> {
        log_spaced(self.min, self.max, self.nodes)
    }
}

pub(crate) fn log_spaced(min: f64, max: f64, nodes: usize) -> Vec<f64> {
    let (a, b) = (min.ln(), max.ln());
    let mut xs: Vec<f64> = (0..nodes)
        .map(|i| (a + (b - a) * i as f64 / (nodes - 1) as f64).exp())
        .collect();
    xs[0] = min;
    xs[nodes - 1] = max;
    xs
}

/// Samples of a function and its derivative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleTable {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

#[derive(Clone, Debug)]
struct LogLogInterp {
    values: Hermite,
    derivatives: Hermite,
}

/// A convex function on `[0, ∞)` with `h(0) = h'(0) = 0`.
#[derive(Clone, Debug)]
pub struct ConvexScalarFunction {
    kind: FunctionKind,
    table: SampleTable,
    cutoff: f64,
    left: LeftBranch,
    superlinear: bool,
    interp: Option<LogLogInterp>,
}

impl ConvexScalarFunction {
    /// `coefficient · x^exponent`, sampled on `range` for export and for the
    /// abscissae of derived tables.
    pub fn power(coefficient: f64, exponent: f64, range: SampleRange) -> Result<Self> {
        if !(coefficient > 0.0 && coefficient.is_finite()) {
            return Err(invalid(format!(
                "power coefficient must be positive, got {coefficient}"
            )));
        }
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(invalid(format!("power exponent must exceed 1, got {exponent}")));
        }
        range.validate()?;
        let abscissae = range.abscissae();
        let values = abscissae.iter().map(|x| coefficient * x.powf(exponent)).collect();
        let derivatives = abscissae
            .iter()
            .map(|x| coefficient * exponent * x.powf(exponent - 1.0))
            .collect();
        Ok(Self {
            kind: FunctionKind::Power { coefficient, exponent },
            table: SampleTable {
                abscissae,
                values,
                derivatives,
            },
            cutoff: f64::INFINITY,
            left: LeftBranch::PlusInfinity,
            superlinear: true,
            interp: None,
        })
    }

    /// A sampled function. A leading abscissa of exactly zero is accepted
    /// if its value and derivative are zero; it is implied anyway.
    pub fn tabulated(table: SampleTable, left: LeftBranch, superlinear: bool) -> Result<Self> {
        let SampleTable {
            mut abscissae,
            mut values,
            mut derivatives,
        } = table;
        let n = abscissae.len();
        if values.len() != n || derivatives.len() != n {
            return Err(invalid("table columns differ in length"));
        }
        if n > 0 && abscissae[0] == 0.0 {
            if values[0] != 0.0 || derivatives[0] != 0.0 {
                return Err(Error::InvariantViolation(
                    "value(0) and derivative(0) must both vanish".into(),
                ));
            }
            abscissae.remove(0);
            values.remove(0);
            derivatives.remove(0);
        }
        let table = SampleTable {
            abscissae,
            values,
            derivatives,
        };
        validate_convex_table(&table)?;
        let cutoff = *table.abscissae.last().unwrap();
        let interp = Some(build_interp(&table));
        Ok(Self {
            kind: FunctionKind::Tabulated,
            table,
            cutoff,
            left,
            superlinear,
            interp,
        })
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn table(&self) -> &SampleTable {
        &self.table
    }

    /// Largest trusted abscissa.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn left_branch(&self) -> LeftBranch {
        self.left
    }

    /// Declared superlinear growth `h(x)/x → ∞`; only checkable on the
    /// sampled range.
    pub fn is_superlinear(&self) -> bool {
        self.superlinear
    }

    pub fn as_power(&self) -> Option<(f64, f64)> {
        match self.kind {
            FunctionKind::Power { coefficient, exponent } => Some((coefficient, exponent)),
            FunctionKind::Tabulated => None,
        }
    }

    fn check_cutoff(&self, x: f64) -> Result<()> {
        if x > self.cutoff * (1.0 + 1e-12) {
            Err(Error::DomainCutoff {
                argument: x,
                cutoff: self.cutoff,
            })
        } else {
            Ok(())
        }
    }

    /// Value on the whole real line.
    pub fn eval(&self, x: f64) -> Result<Extended> {
        if x.is_nan() {
            return Err(invalid("NaN argument"));
        }
        if x < 0.0 {
            return Ok(match self.left {
                LeftBranch::PlusInfinity => Extended::PlusInfinity,
                LeftBranch::Zero => Extended::Finite(0.0),
            });
        }
        self.value(x).map(Extended::Finite)
    }

    /// Finite value. Negative arguments are an error for `+∞`-extended
    /// functions and give zero otherwise.
    pub fn value(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return match (x < 0.0, self.left) {
                (true, LeftBranch::PlusInfinity) => Err(invalid(format!("{x} outside the effective domain"))),
                _ => Ok(0.0),
            };
        }
        if let FunctionKind::Power { coefficient, exponent } = self.kind {
            return Ok(coefficient * x.powf(exponent));
        }
        self.check_cutoff(x)?;
        let interp = self.interp.as_ref().expect("tabulated function has an interpolant");
        let lx = x.ln();
        let (x0, y0, s0) = interp.values.first();
        if lx <= x0 {
            return Ok((y0 + s0 * (lx - x0)).exp());
        }
        let (xn, yn, _) = interp.values.last();
        if lx >= xn {
            return Ok(yn.exp());
        }
        Ok(interp.values.eval(lx).exp())
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return match (x < 0.0, self.left) {
                (true, LeftBranch::PlusInfinity) => Err(invalid(format!("{x} outside the effective domain"))),
                _ => Ok(0.0),
            };
        }
        if let FunctionKind::Power { coefficient, exponent } = self.kind {
            return Ok(coefficient * exponent * x.powf(exponent - 1.0));
        }
        self.check_cutoff(x)?;
        let interp = self.interp.as_ref().expect("tabulated function has an interpolant");
        let lx = x.ln();
        let (x0, y0, s0) = interp.derivatives.first();
        if lx <= x0 {
            return Ok((y0 + s0 * (lx - x0)).exp());
        }
        let (xn, yn, _) = interp.derivatives.last();
        if lx >= xn {
            return Ok(yn.exp());
        }
        Ok(interp.derivatives.eval(lx).exp())
    }

    /// `(h')⁻¹₊(y)`: zero for `y ≤ 0`.
    pub fn inverse_derivative(&self, y: f64) -> Result<f64> {
        if y.is_nan() {
            return Err(invalid("NaN argument"));
        }
        if y <= 0.0 {
            return Ok(0.0);
        }
        if let FunctionKind::Power { coefficient, exponent } = self.kind {
            return Ok((y / (coefficient * exponent)).powf(1.0 / (exponent - 1.0)));
        }
        let interp = self.interp.as_ref().expect("tabulated function has an interpolant");
        let ly = y.ln();
        let (x0, y0, s0) = interp.derivatives.first();
        if ly <= y0 {
            return Ok((x0 + (ly - y0) / s0).exp());
        }
        let (_, yn, _) = interp.derivatives.last();
        if ly > yn + 1e-12 {
            return Err(Error::DomainCutoff {
                argument: y,
                cutoff: yn.exp(),
            });
        }
        if ly >= yn {
            return Ok(self.cutoff);
        }
        // tolerance in log x is a relative tolerance in x
        Ok(interp.derivatives.inverse(ly, INVERSE_TOL).exp())
    }

    /// Range of `h'` over the sampled abscissae.
    pub fn derivative_range(&self) -> (f64, f64) {
        let d = &self.table.derivatives;
        (d[0], d[d.len() - 1])
    }

    /// Local logarithmic slope `x h'(x) / h(x)` at every sample.
    pub fn local_exponents(&self) -> Vec<f64> {
        let t = &self.table;
        (0..t.abscissae.len())
            .map(|i| t.abscissae[i] * t.derivatives[i] / t.values[i])
            .collect()
    }
}

fn build_interp(table: &SampleTable) -> LogLogInterp {
    let lx: Vec<f64> = table.abscissae.iter().map(|x| x.ln()).collect();
    let lv: Vec<f64> = table.values.iter().map(|v| v.ln()).collect();
    let slopes: Vec<f64> = (0..lx.len())
        .map(|i| table.abscissae[i] * table.derivatives[i] / table.values[i])
        .collect();
    let ld: Vec<f64> = table.derivatives.iter().map(|d| d.ln()).collect();
    LogLogInterp {
        values: Hermite::with_slopes(lx.clone(), lv, slopes),
        derivatives: Hermite::pchip(lx, ld),
    }
}

/// Checks the sampled invariants: positive increasing abscissae, positive
/// nondecreasing convex values, strictly increasing positive derivatives.
pub fn validate_convex_table(table: &SampleTable) -> Result<()> {
    let SampleTable {
        abscissae: x,
        values: v,
        derivatives: d,
    } = table;
    let n = x.len();
    if n < 4 {
        return Err(invalid("a table needs at least four positive abscissae"));
    }
    for i in 0..n {
        if !(x[i].is_finite() && v[i].is_finite() && d[i].is_finite()) {
            return Err(Error::InvariantViolation(format!("non-finite entry at row {i}")));
        }
        if x[i] <= 0.0 || v[i] <= 0.0 || d[i] <= 0.0 {
            return Err(Error::InvariantViolation(format!(
                "row {i}: a strictly convex function with h(0)=h'(0)=0 is positive with positive slope for x > 0"
            )));
        }
    }
    for i in 1..n {
        if x[i] <= x[i - 1] {
            return Err(Error::InvariantViolation(format!(
                "abscissae not increasing at row {i}"
            )));
        }
        if v[i] < v[i - 1] {
            return Err(Error::InvariantViolation(format!("values decrease at row {i}")));
        }
        if d[i] <= d[i - 1] {
            return Err(Error::InvariantViolation(format!(
                "derivative not strictly increasing at row {i}"
            )));
        }
    }
    // secant slopes, starting with the implied origin
    let mut prev = v[0] / x[0];
    for i in 1..n {
        let secant = (v[i] - v[i - 1]) / (x[i] - x[i - 1]);
        if secant < prev * (1.0 - 1e-9) {
            return Err(Error::InvariantViolation(format!(
                "values not convex at row {i}: secant {secant:e} after {prev:e}"
            )));
        }
        prev = secant;
    }
    Ok(())
}

/// Whether a polytropic `Q(f) = f^{1+1/k}` yields an admissible `Φ`
/// (`0 < n = k + 3/2 < 3`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Admissibility {
    Admissible,
    /// `n = 3` exactly: the scaling argument degenerates.
    Edge,
    Outside,
}

pub fn q_admissibility(k: f64) -> Admissibility {
    phi_admissibility(k + 1.5)
}

pub fn phi_admissibility(n: f64) -> Admissibility {
    if n > 0.0 && n < 3.0 {
        Admissibility::Admissible
    } else if n == 3.0 {
        Admissibility::Edge
    } else {
        Admissibility::Outside
    }
}

/// `Q(f) = f^{1+1/k}`.
pub fn make_polytrope_q(k: f64) -> Result<ConvexScalarFunction> {
    make_polytrope_q_on(k, SampleRange::default())
}

pub fn make_polytrope_q_on(k: f64, range: SampleRange) -> Result<ConvexScalarFunction> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(invalid(format!("polytropic index k must be positive, got {k}")));
    }
    ConvexScalarFunction::power(1.0, 1.0 + 1.0 / k, range)
}

/// `Φ(ρ) = ρ^{1+1/n}`, given directly at the level of spatial densities.
pub fn make_polytrope_phi(n: f64) -> Result<ConvexScalarFunction> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(invalid(format!("polytropic index n must be positive, got {n}")));
    }
    ConvexScalarFunction::power(1.0, 1.0 + 1.0 / n, SampleRange::default())
}

/// Legendre transform `h*(λ) = sup_{r ≥ 0} (λ r − h(r))`, sampled at
/// log-spaced slopes spanning the derivative range of `h`. The supremum is
/// attained at `r = (h')⁻¹(λ)`, which is also `(h*)'(λ)`.
pub fn conjugate(h: &ConvexScalarFunction) -> Result<ConvexScalarFunction> {
    if !h.is_superlinear() {
        return Err(invalid("conjugation requires superlinear growth"));
    }
    if h.kind == FunctionKind::Tabulated {
        validate_convex_table(&h.table)?;
    }
    let (lo, hi) = h.derivative_range();
    let lambdas = log_spaced(lo, hi, h.table.abscissae.len());
    let mut values = Vec::with_capacity(lambdas.len());
    let mut derivatives = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let r = h.inverse_derivative(lambda)?;
        values.push(lambda * r - h.value(r)?);
        derivatives.push(r);
    }
    let left = match h.left {
        LeftBranch::PlusInfinity => LeftBranch::Zero,
        LeftBranch::Zero => LeftBranch::PlusInfinity,
    };
    ConvexScalarFunction::tabulated(
        SampleTable {
            abscissae: lambdas,
            values,
            derivatives,
        },
        left,
        true,
    )
}

/// `∫_{|v|<√(2λ)} F(λ − |v|²/2) dv` for a function `F` vanishing on
/// `(−∞, 0]`. With `E = λ s²` the `√E` weight becomes `2 λ^{3/2} s²`.
pub fn velocity_integral<F>(quad: &TanhSinh, lambda: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if lambda <= 0.0 {
        return Ok(0.0);
    }
    let mut failure = None;
    let integral = quad.integrate_unit(|s, one_minus_s| {
        if failure.is_some() {
            return 0.0;
        }
        let arg = lambda * one_minus_s * (1.0 + s);
        match f(arg) {
            Ok(v) => v * s * s,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(VELOCITY_MEASURE * 2.0 * lambda * lambda.sqrt() * integral)
}

/// `Φ*(λ) = ∫ Q*(λ − |v|²/2) dv = 4π√2 ∫_0^λ Q*(λ − E) √E dE`, with
/// derivative `∫ (Q*)'(λ − |v|²/2) dv`.
pub fn velocity_reduce(q_star: &ConvexScalarFunction) -> Result<ConvexScalarFunction> {
    if q_star.left_branch() != LeftBranch::Zero {
        return Err(invalid("velocity reduction needs a function vanishing on (-inf, 0]"));
    }
    let quad = TanhSinh::default();
    let lambdas = q_star.table.abscissae.clone();
    let mut values = Vec::with_capacity(lambdas.len());
    let mut derivatives = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let v = velocity_integral(&quad, lambda, |e| q_star.value(e))?;
        let d = velocity_integral(&quad, lambda, |e| q_star.derivative(e))?;
        if !(v >= 0.0 && d >= 0.0) {
            return Err(Error::InternalConsistency(format!(
                "velocity reduction produced a negative value at λ = {lambda}"
            )));
        }
        values.push(v);
        derivatives.push(d);
    }
    ConvexScalarFunction::tabulated(
        SampleTable {
            abscissae: lambdas,
            values,
            derivatives,
        },
        LeftBranch::Zero,
        true,
    )
}

/// `Φ = (Φ*)*` with `Φ* = velocity_reduce(Q*)`.
pub fn phi_from_q(q: &ConvexScalarFunction) -> Result<ConvexScalarFunction> {
    conjugate(&velocity_reduce(&conjugate(q)?)?)
}

/// Homogeneity of a power-law `g(λ) = c λ^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Homogeneity {
    pub exponent: f64,
    pub coefficient: f64,
}

#[derive(Clone, Debug)]
struct GTable {
    lambdas: Vec<f64>,
    values: Vec<f64>,
    /// first index with a positive value
    first_positive: usize,
    log_interp: Option<Hermite>,
}

/// The monotone map `g(λ) = (Φ')⁻¹₊(λ)`: zero for `λ ≤ 0`, nondecreasing,
/// strictly increasing where positive.
#[derive(Clone, Debug)]
pub struct GFunction {
    table: Option<GTable>,
    homogeneity: Option<Homogeneity>,
}

impl GFunction {
    /// `g(λ) = c λ^n` exactly.
    pub fn power(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0 && exponent > 0.0 && coefficient.is_finite() && exponent.is_finite()) {
            return Err(invalid(format!(
                "g = c λ^n needs c > 0 and n > 0, got c = {coefficient}, n = {exponent}"
            )));
        }
        Ok(Self {
            table: None,
            homogeneity: Some(Homogeneity { exponent, coefficient }),
        })
    }

    /// A sampled `g`; values must be nonnegative, nondecreasing and strictly
    /// increasing once positive.
    pub fn from_samples(lambdas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = lambdas.len();
        if n < 2 || values.len() != n {
            return Err(invalid("g table needs at least two rows of equal length"));
        }
        for i in 0..n {
            if !(lambdas[i] > 0.0 && lambdas[i].is_finite() && values[i] >= 0.0 && values[i].is_finite()) {
                return Err(Error::InvariantViolation(format!("bad g sample at row {i}")));
            }
            if i > 0 {
                if lambdas[i] <= lambdas[i - 1] {
                    return Err(Error::InvariantViolation(format!("λ not increasing at row {i}")));
                }
                if values[i] < values[i - 1] || (values[i - 1] > 0.0 && values[i] <= values[i - 1]) {
                    return Err(Error::InvariantViolation(format!(
                        "g not strictly increasing at row {i}"
                    )));
                }
            }
        }
        let first_positive = values.iter().position(|&v| v > 0.0).unwrap_or(n);
        let log_interp = if n - first_positive >= 2 {
            let lx = lambdas[first_positive..].iter().map(|x| x.ln()).collect();
            let ly = values[first_positive..].iter().map(|y| y.ln()).collect();
            Some(Hermite::pchip(lx, ly))
        } else {
            None
        };
        Ok(Self {
            table: Some(GTable {
                lambdas,
                values,
                first_positive,
                log_interp,
            }),
            homogeneity: None,
        })
    }

    /// `g = (Φ')⁻¹₊` for a given `Φ`.
    pub fn from_phi(phi: &ConvexScalarFunction) -> Result<Self> {
        if let Some((coefficient, exponent)) = phi.as_power() {
            // Φ = K ρ^p  ⇒  g(λ) = (λ / (K p))^{1/(p-1)}
            let n = 1.0 / (exponent - 1.0);
            return Self::power((coefficient * exponent).powf(-n), n);
        }
        let t = phi.table();
        Self::from_samples(t.derivatives.clone(), t.abscissae.clone())
    }

    pub(crate) fn with_homogeneity(mut self, h: Homogeneity) -> Self {
        self.homogeneity = Some(h);
        self
    }

    pub fn homogeneity(&self) -> Option<Homogeneity> {
        self.homogeneity
    }

    /// Largest trusted argument.
    pub fn cutoff(&self) -> f64 {
        match &self.table {
            Some(t) => *t.lambdas.last().unwrap(),
            None => f64::INFINITY,
        }
    }

    pub fn samples(&self) -> Option<(&[f64], &[f64])> {
        self.table.as_ref().map(|t| (t.lambdas.as_slice(), t.values.as_slice()))
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if lambda.is_nan() {
            return Err(invalid("NaN argument"));
        }
        if lambda <= 0.0 {
            return Ok(0.0);
        }
        let Some(t) = &self.table else {
            let h = self.homogeneity.expect("power g carries its homogeneity");
            return Ok(h.coefficient * lambda.powf(h.exponent));
        };
        let last = *t.lambdas.last().unwrap();
        if lambda > last * (1.0 + 1e-12) {
            return Err(Error::DomainCutoff {
                argument: lambda,
                cutoff: last,
            });
        }
        let p = t.first_positive;
        if p == t.lambdas.len() {
            return Ok(0.0);
        }
        if lambda >= t.lambdas[p] {
            return Ok(match &t.log_interp {
                Some(h) => h.eval(lambda.ln().min(last.ln())).exp(),
                None => t.values[p],
            });
        }
        if p == 0 {
            // power-law extrapolation towards the origin
            let (x0, y0, s0) =
                t.log_interp
                    .as_ref()
                    .map(|h| h.first())
                    .unwrap_or((t.lambdas[0].ln(), t.values[0].ln(), 1.0));
            return Ok((y0 + s0 * (lambda.ln() - x0)).exp());
        }
        let (a, b) = (t.lambdas[p - 1], t.lambdas[p]);
        if lambda <= a {
            return Ok(0.0);
        }
        Ok(t.values[p] * (lambda - a) / (b - a))
    }
}

/// `g(λ) = 4π√2 ∫_0^λ (Q')⁻¹(λ − E) √E dE`, tabulated at log-spaced λ over
/// the derivative range of `Q`. For a power-law `Q` the homogeneity
/// `g = c λ^{k+3/2}` is attached, with `c` read off the quadrature at λ = 1.
pub fn emden_rhs(q: &ConvexScalarFunction) -> Result<GFunction> {
    let quad = TanhSinh::default();
    let (lo, hi) = q.derivative_range();
    let lambdas = log_spaced(lo, hi, q.table().abscissae.len());
    let values = lambdas
        .iter()
        .map(|&l| velocity_integral(&quad, l, |s| q.inverse_derivative(s)))
        .collect::<Result<Vec<_>>>()?;
    let g = GFunction::from_samples(lambdas, values)?;
    if let Some((_, exponent)) = q.as_power() {
        let k = 1.0 / (exponent - 1.0);
        let n = k + 1.5;
        let reference = 1.0f64.clamp(lo, hi);
        let c = velocity_integral(&quad, reference, |s| q.inverse_derivative(s))? / reference.powf(n);
        return Ok(g.with_homogeneity(Homogeneity {
            exponent: n,
            coefficient: c,
        }));
    }
    Ok(g)
}

/// The pointwise optimal velocity profile
/// `g₀(v) = (Q')⁻¹(λ − |v|²/2)` for `|v| < √(2λ)`, zero otherwise.
#[derive(Clone, Copy, Debug)]
pub struct VelocityProfile<'a> {
    q: &'a ConvexScalarFunction,
    lambda: f64,
}

pub fn per_point_velocity_minimizer(q: &ConvexScalarFunction, lambda: f64) -> VelocityProfile<'_> {
    VelocityProfile { q, lambda }
}

impl VelocityProfile<'_> {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Radius `√(2λ)` of the velocity support (zero for `λ ≤ 0`).
    pub fn support_radius(&self) -> f64 {
        if self.lambda > 0.0 {
            (2.0 * self.lambda).sqrt()
        } else {
            0.0
        }
    }

    /// Profile value at speed `|v|`.
    pub fn eval(&self, speed: f64) -> Result<f64> {
        self.q.inverse_derivative(self.lambda - 0.5 * speed * speed)
    }

    /// `∫ g₀ dv`.
    pub fn density(&self) -> Result<f64> {
        velocity_integral(&TanhSinh::default(), self.lambda, |s| self.q.inverse_derivative(s))
    }

    /// `∫ (|v|²/2 g₀ + Q(g₀)) dv`.
    pub fn cost(&self) -> Result<f64> {
        let lambda = self.lambda;
        velocity_integral(&TanhSinh::default(), lambda, |s| {
            let f = self.q.inverse_derivative(s)?;
            Ok((lambda - s) * f + self.q.value(f)?)
        })
    }
}

/// One side of the growth assumptions on `Φ`: `C ρ^{1+1/n}` valid above
/// (lower bound) or below (upper bound) `threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerBound {
    pub index: f64,
    pub constant: f64,
    pub threshold: f64,
}

impl PowerBound {
    pub fn eval(&self, rho: f64) -> f64 {
        self.constant * rho.powf(1.0 + 1.0 / self.index)
    }
}

/// `Φ(ρ) ≥ C ρ^{1+1/n}` for large `ρ` and `Φ(ρ) ≤ C' ρ^{1+1/n'}` for small
/// `ρ`, with `0 < n, n' < 3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthEnvelope {
    pub lower: PowerBound,
    pub upper: PowerBound,
}

impl GrowthEnvelope {
    pub fn new(lower: PowerBound, upper: PowerBound) -> Result<Self> {
        for (name, b) in [("lower", lower), ("upper", upper)] {
            if !(b.index > 0.0 && b.index < 3.0) {
                return Err(invalid(format!(
                    "{name} growth index must lie in (0, 3), got {}",
                    b.index
                )));
            }
            if !(b.constant > 0.0 && b.constant.is_finite()) || !(b.threshold >= 0.0) {
                return Err(invalid(format!("{name} growth bound has bad constants")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Exact envelope of `Φ = K ρ^{1+1/n}`, valid on all of `[0, ∞)`.
    pub fn for_power(constant: f64, n: f64) -> Result<Self> {
        Self::new(
            PowerBound {
                index: n,
                constant,
                threshold: 0.0,
            },
            PowerBound {
                index: n,
                constant,
                threshold: f64::INFINITY,
            },
        )
    }

    /// Envelope read off the sampled range of `Φ`: the exponents are the
    /// local logarithmic slopes at the two ends of the table, the constants
    /// the extreme ratios over the upper and lower tenth of the samples.
    pub fn fit(phi: &ConvexScalarFunction) -> Result<Self> {
        if let Some((k, p)) = phi.as_power() {
            return Self::for_power(k, 1.0 / (p - 1.0));
        }
        let t = phi.table();
        let m = t.abscissae.len();
        let band = (m / 10).max(2);
        let slopes = phi.local_exponents();
        let n_large = 1.0 / (slopes[m - 1] - 1.0);
        let n_small = 1.0 / (slopes[0] - 1.0);
        let ratio = |i: usize, n: f64| t.values[i] / t.abscissae[i].powf(1.0 + 1.0 / n);
        let lower_c = (m - band..m).map(|i| ratio(i, n_large)).fold(f64::INFINITY, f64::min);
        let upper_c = (0..band).map(|i| ratio(i, n_small)).fold(0.0, f64::max);
        Self::new(
            PowerBound {
                index: n_large,
                constant: lower_c,
                threshold: t.abscissae[m - band],
            },
            PowerBound {
                index: n_small,
                constant: upper_c,
                threshold: t.abscissae[band - 1],
            },
        )
    }

    /// Checks `lower ≤ Φ ≤ upper` at the given densities that fall into the
    /// respective validity ranges; returns the violating densities.
    pub fn violations(&self, phi: &ConvexScalarFunction, samples: &[f64]) -> Result<Vec<f64>> {
        let mut bad = Vec::new();
        for &rho in samples {
            let v = phi.value(rho)?;
            let slack = 1e-12 * v.abs();
            let below = rho >= self.lower.threshold && v < self.lower.eval(rho) - slack;
            let above = rho <= self.upper.threshold && v > self.upper.eval(rho) + slack;
            if below || above {
                bad.push(rho);
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn polytrope_q_examples() {
        let q = make_polytrope_q(1.0).unwrap();
        assert_eq!(q.as_power(), Some((1.0, 2.0)));
        assert_eq!(q.value(3.0).unwrap(), 9.0);
        assert_eq!(q.derivative(3.0).unwrap(), 6.0);
        let q = make_polytrope_q(0.5).unwrap();
        assert_eq!(q.as_power(), Some((1.0, 3.0)));
        assert!(make_polytrope_q(1.5).is_ok());
        assert_eq!(q_admissibility(1.5), Admissibility::Edge);
        assert_eq!(q_admissibility(1.0), Admissibility::Admissible);
        assert!(matches!(make_polytrope_q(0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_polytrope_q(-1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn negative_arguments_use_the_declared_branch() {
        let q = make_polytrope_q(1.0).unwrap();
        assert_eq!(q.eval(-1.0).unwrap(), Extended::PlusInfinity);
        let qs = conjugate(&q).unwrap();
        assert_eq!(qs.eval(-1.0).unwrap(), Extended::Finite(0.0));
        assert_eq!(qs.value(-1.0).unwrap(), 0.0);
        assert_eq!(qs.value(0.0).unwrap(), 0.0);
        assert_eq!(qs.derivative(0.0).unwrap(), 0.0);
    }

    #[test]
    fn conjugate_of_square_is_quarter_square() {
        let q = make_polytrope_q(1.0).unwrap();
        let qs = conjugate(&q).unwrap();
        for lambda in [1e-6, 0.3, 1.0, 7.5, 1e3] {
            assert!(rel(qs.value(lambda).unwrap(), lambda * lambda / 4.0) < 1e-12);
        }
        // grid supremum oracle
        for lambda in [0.7, 2.0] {
            let sup = (0..=200_000)
                .map(|i| {
                    let f = i as f64 * 2e-5 * lambda;
                    lambda * f - f * f
                })
                .fold(f64::MIN, f64::max);
            assert!(rel(qs.value(lambda).unwrap(), sup) < 1e-8);
        }
    }

    #[test]
    fn biconjugate_recovers_q() {
        for k in [0.5, 1.0, 1.4] {
            let q = make_polytrope_q(k).unwrap();
            let qss = conjugate(&conjugate(&q).unwrap()).unwrap();
            let t = qss.table();
            for i in (0..t.abscissae.len()).step_by(37) {
                let x = t.abscissae[i];
                assert!(rel(t.values[i], q.value(x).unwrap()) < 1e-8, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn conjugate_slope_is_inverse_derivative() {
        let q = make_polytrope_q(0.8).unwrap();
        let qs = conjugate(&q).unwrap();
        for lambda in [1e-3, 0.5, 4.0, 300.0] {
            let lhs = qs.derivative(lambda).unwrap();
            assert!(rel(lhs, q.inverse_derivative(lambda).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn tabulated_rejects_nonconvex_tables() {
        let table = SampleTable {
            abscissae: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            values: vec![1.0, 4.0, 5.0, 16.0, 25.0],
            derivatives: vec![2.0, 4.0, 6.0, 8.0, 10.0],
        };
        assert!(matches!(
            ConvexScalarFunction::tabulated(table, LeftBranch::PlusInfinity, true),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn tabulated_cutoff_is_enforced() {
        let xs = log_spaced(1e-3, 10.0, 50);
        let table = SampleTable {
            values: xs.iter().map(|x| x * x).collect(),
            derivatives: xs.iter().map(|x| 2.0 * x).collect(),
            abscissae: xs,
        };
        let h = ConvexScalarFunction::tabulated(table, LeftBranch::PlusInfinity, true).unwrap();
        assert!(rel(h.value(3.3).unwrap(), 3.3 * 3.3) < 1e-12);
        assert!(matches!(h.value(11.0), Err(Error::DomainCutoff { .. })));
        assert!(matches!(h.inverse_derivative(21.0), Err(Error::DomainCutoff { .. })));
    }

    #[test]
    fn zero_q_star_reduces_to_zero() {
        // velocity reduction is linear, so Q* ≡ 0 gives Φ* ≡ 0
        let quad = TanhSinh::default();
        for lambda in [0.0, 0.5, 3.0] {
            assert_eq!(velocity_integral(&quad, lambda, |_| Ok(0.0)).unwrap(), 0.0);
        }
    }

    #[test]
    fn velocity_reduce_matches_beta_integral_for_k_one() {
        // Q*(λ) = λ² / 4  ⇒  Φ* = 4π√2 (1/4) B(3, 3/2) λ^{7/2}, B(3, 3/2) = 16/105
        let q = make_polytrope_q(1.0).unwrap();
        let phi_star = velocity_reduce(&conjugate(&q).unwrap()).unwrap();
        let c = VELOCITY_MEASURE * 0.25 * 16.0 / 105.0;
        for lambda in [1e-4, 0.2, 1.0, 13.0] {
            assert!(rel(phi_star.value(lambda).unwrap(), c * lambda.powf(3.5)) < 1e-10);
        }
    }

    #[test]
    fn emden_rhs_closed_forms() {
        let g1 = emden_rhs(&make_polytrope_q(1.0).unwrap()).unwrap();
        let c1 = 8.0 * PI * SQRT_2 / 15.0;
        let h = g1.homogeneity().unwrap();
        assert_eq!(h.exponent, 2.5);
        assert!(rel(h.coefficient, c1) < 1e-12);
        assert!(rel(g1.eval(2.0).unwrap(), c1 * 2f64.powf(2.5)) < 1e-10);
        assert_eq!(g1.eval(0.0).unwrap(), 0.0);
        assert_eq!(g1.eval(-3.0).unwrap(), 0.0);

        let g_half = emden_rhs(&make_polytrope_q(0.5).unwrap()).unwrap();
        let c_half = VELOCITY_MEASURE * 3f64.powf(-0.5) * PI / 8.0;
        assert!(rel(g_half.eval(1.7).unwrap(), c_half * 1.7 * 1.7) < 1e-10);
    }

    #[test]
    fn velocity_profile_for_k_one() {
        let q = make_polytrope_q(1.0).unwrap();
        let p = per_point_velocity_minimizer(&q, 1.0);
        assert_eq!(p.support_radius(), SQRT_2);
        assert!(rel(p.eval(0.5).unwrap(), (1.0 - 0.125) / 2.0) < 1e-15);
        assert_eq!(p.eval(1.5).unwrap(), 0.0);
        // direct radial quadrature oracle: 4π ∫_0^√2 (1 - v²/2)/2 v² dv
        let m = 200_000;
        let h = SQRT_2 / m as f64;
        let oracle: f64 = (0..m)
            .map(|i| {
                let v = (i as f64 + 0.5) * h;
                4.0 * PI * (1.0 - 0.5 * v * v) / 2.0 * v * v * h
            })
            .sum();
        assert!(rel(p.density().unwrap(), oracle) < 1e-8);
        assert!(rel(p.density().unwrap(), 8.0 * PI * SQRT_2 / 15.0) < 1e-12);
        let empty = per_point_velocity_minimizer(&q, -0.3);
        assert_eq!(empty.support_radius(), 0.0);
        assert_eq!(empty.eval(0.0).unwrap(), 0.0);
        assert_eq!(empty.density().unwrap(), 0.0);
    }

    #[test]
    fn g_from_phi_power() {
        // Φ = ρ² ⇒ Φ' = 2ρ ⇒ g(λ) = λ / 2
        let g = GFunction::from_phi(&make_polytrope_phi(1.0).unwrap()).unwrap();
        assert!(rel(g.eval(3.0).unwrap(), 1.5) < 1e-15);
    }

    #[test]
    fn g_table_with_zero_head() {
        let g = GFunction::from_samples(vec![0.5, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(g.eval(0.7).unwrap(), 0.0);
        assert!(rel(g.eval(1.5).unwrap(), 0.5) < 1e-15);
        assert!(g.eval(2.5).unwrap() > 1.0);
        assert!(GFunction::from_samples(vec![1.0, 2.0], vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn envelope_rejects_bad_indices() {
        assert!(GrowthEnvelope::for_power(1.0, 3.0).is_err());
        assert!(GrowthEnvelope::for_power(1.0, 2.9).is_ok());
    }
}
