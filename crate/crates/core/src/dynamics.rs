//! Hamiltonian models with a text expression parser and second-order
//! forward-mode automatic differentiation, classical flow integration,
//! monodromy propagation and Lyapunov estimation.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::Rng;
use std::fmt;

/// Value carrying first and second directional derivatives: evaluating f on
/// (v, d1, d2, d12) seeds yields f, f' d1, f' d2 and the mixed second
/// derivative in one pass.
#[derive(Debug, Clone, Copy)]
pub struct HyperDual {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
}

impl HyperDual {
    pub fn constant(v: f64) -> Self {
        HyperDual { v, d1: 0.0, d2: 0.0, d12: 0.0 }
    }

    fn add(self, o: Self) -> Self {
        HyperDual { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2, d12: self.d12 + o.d12 }
    }

    fn sub(self, o: Self) -> Self {
        HyperDual { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2, d12: self.d12 - o.d12 }
    }

    fn mul(self, o: Self) -> Self {
        HyperDual {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + self.v * o.d2,
            d12: self.d12 * o.v + self.d1 * o.d2 + self.d2 * o.d1 + self.v * o.d12,
        }
    }

    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let d1 = (self.d1 - v * o.d1) * inv;
        let d2 = (self.d2 - v * o.d2) * inv;
        let d12 = (self.d12 - d1 * o.d2 - d2 * o.d1 - v * o.d12) * inv;
        HyperDual { v, d1, d2, d12 }
    }

    fn neg(self) -> Self {
        HyperDual { v: -self.v, d1: -self.d1, d2: -self.d2, d12: -self.d12 }
    }

    fn powi(self, k: i64) -> Self {
        if k == 0 {
            return HyperDual::constant(1.0);
        }
        let (mut base, n) = if k < 0 {
            (HyperDual::constant(1.0).div(self), (-k) as u64)
        } else {
            (self, k as u64)
        };
        let mut acc = HyperDual::constant(1.0);
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }

    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        HyperDual {
            v: f,
            d1: df * self.d1,
            d2: df * self.d2,
            d12: df * self.d12 + ddf * self.d1 * self.d2,
        }
    }

    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos(), -self.v.sin())
    }

    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin(), -self.v.cos())
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    fn eval(&self, vars: &[HyperDual]) -> HyperDual {
        match self {
            Expr::Num(x) => HyperDual::constant(*x),
            Expr::Var(i) => vars[*i],
            Expr::Add(a, b) => a.eval(vars).add(b.eval(vars)),
            Expr::Sub(a, b) => a.eval(vars).sub(b.eval(vars)),
            Expr::Mul(a, b) => a.eval(vars).mul(b.eval(vars)),
            Expr::Div(a, b) => a.eval(vars).div(b.eval(vars)),
            Expr::Pow(a, k) => a.eval(vars).powi(*k),
            Expr::Neg(a) => a.eval(vars).neg(),
            Expr::Sin(a) => a.eval(vars).sin(),
            Expr::Cos(a) => a.eval(vars).cos(),
            Expr::Exp(a) => a.eval(vars).exp(),
        }
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    n_pairs: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.integer_exponent()?;
            return Ok(Expr::Pow(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i64> {
        self.skip_ws();
        let mut sign = 1i64;
        if self.peek() == Some(b'-') {
            sign = -1;
            self.pos += 1;
            self.skip_ws();
        }
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected integer exponent after '^'"));
        }
        if self.pos < self.text.len() && (self.text[self.pos] == b'.' || self.text[self.pos] == b'e')
        {
            return Err(self.err("non-integer exponent"));
        }
        let digits = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
        let value: i64 = digits.parse().map_err(|_| self.err("exponent out of range"))?;
        // exponents combine right-associatively: a^b^c = a^(b^c); with
        // integer literals the inner value folds immediately
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let inner = self.integer_exponent()?;
            if inner < 0 {
                return Err(self.err("negative exponent tower is not an integer"));
            }
            let folded = value
                .checked_pow(u32::try_from(inner).map_err(|_| self.err("exponent too large"))?)
                .ok_or_else(|| self.err("exponent overflow"))?;
            return Ok(sign * folded);
        }
        Ok(sign * value)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expression()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => self.number(),
            Some(ch) if ch.is_ascii_alphabetic() => self.identifier(),
            Some(ch) => Err(self.err(format!("unexpected character '{}'", ch as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        let mut seen_e = false;
        while self.pos < self.text.len() {
            let ch = self.text[self.pos];
            if ch.is_ascii_digit() || ch == b'.' {
                self.pos += 1;
            } else if (ch == b'e' || ch == b'E') && !seen_e {
                seen_e = true;
                self.pos += 1;
                if self.pos < self.text.len()
                    && (self.text[self.pos] == b'+' || self.text[self.pos] == b'-')
                {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let token = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
        token
            .parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| self.err(format!("bad numeric literal '{token}'")))
    }

    fn identifier(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_alphanumeric() || self.text[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.text[start..self.pos]).unwrap().to_string();
        match name.as_str() {
            "sin" | "cos" | "exp" => {
                if self.peek() != Some(b'(') {
                    return Err(self.err(format!("expected '(' after {name}")));
                }
                self.pos += 1;
                let arg = self.expression()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(match name.as_str() {
                    "sin" => Expr::Sin(Box::new(arg)),
                    "cos" => Expr::Cos(Box::new(arg)),
                    _ => Expr::Exp(Box::new(arg)),
                })
            }
            _ => {
                let idx = self.variable_index(&name)?;
                Ok(Expr::Var(idx))
            }
        }
    }

    fn variable_index(&self, name: &str) -> Result<usize> {
        let n = self.n_pairs;
        if n == 1 {
            if name == "q" || name == "q1" {
                return Ok(0);
            }
            if name == "p" || name == "p1" {
                return Ok(1);
            }
        }
        let (kind, rest) = name.split_at(1);
        if let Ok(i) = rest.parse::<usize>() {
            if i >= 1 && i <= n {
                match kind {
                    "q" => return Ok(i - 1),
                    "p" => return Ok(n + i - 1),
                    _ => {}
                }
            }
        }
        Err(Error::Parse {
            position: self.pos,
            message: format!("unknown identifier '{name}' for {n} degrees of freedom"),
        })
    }
}

/// Provenance of a Hamiltonian model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Harmonic { mass: f64, omega: f64 },
    Inverted,
    Free,
    Quartic { lambda4: f64 },
    Parsed { text: String },
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Harmonic { mass, omega } => write!(f, "harmonic(m={mass}, omega={omega})"),
            ModelKind::Inverted => write!(f, "inverted"),
            ModelKind::Free => write!(f, "free"),
            ModelKind::Quartic { lambda4 } => write!(f, "quartic(lambda4={lambda4})"),
            ModelKind::Parsed { text } => write!(f, "parsed({text})"),
        }
    }
}

/// Evaluator for H(phi), its gradient and Hessian over 2n phase-space
/// coordinates ordered q_1..q_n, p_1..p_n.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    n_pairs: usize,
    kind: ModelKind,
    expr: Expr,
}

impl HamiltonianModel {
    /// H = p^2/(2m) + m omega^2 q^2 / 2.
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        let expr = parse_expr(&format!("p^2/(2*{mass}) + {mass}*{omega}^2*q^2/2",), 1)
            .expect("builtin parses");
        HamiltonianModel { n_pairs: 1, kind: ModelKind::Harmonic { mass, omega }, expr }
    }

    /// H = p^2/2 - q^2/2.
    pub fn inverted() -> Self {
        let expr = parse_expr("p^2/2 - q^2/2", 1).expect("builtin parses");
        HamiltonianModel { n_pairs: 1, kind: ModelKind::Inverted, expr }
    }

    /// H = p^2/2.
    pub fn free() -> Self {
        let expr = parse_expr("p^2/2", 1).expect("builtin parses");
        HamiltonianModel { n_pairs: 1, kind: ModelKind::Free, expr }
    }

    /// H = p^2/2 + lambda4 q^4/4.
    pub fn quartic(lambda4: f64) -> Self {
        let expr = parse_expr(&format!("p^2/2 + {lambda4}*q^4/4"), 1).expect("builtin parses");
        HamiltonianModel { n_pairs: 1, kind: ModelKind::Quartic { lambda4 }, expr }
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        2 * self.n_pairs
    }

    pub fn evaluate(&self, phi: &Array1<f64>) -> f64 {
        let vars: Vec<HyperDual> = phi.iter().map(|&x| HyperDual::constant(x)).collect();
        self.expr.eval(&vars).v
    }

    pub fn gradient(&self, phi: &Array1<f64>) -> Array1<f64> {
        let dim = self.dim();
        let mut out = Array1::zeros(dim);
        let mut vars: Vec<HyperDual> = phi.iter().map(|&x| HyperDual::constant(x)).collect();
        for i in 0..dim {
            vars[i].d1 = 1.0;
            out[i] = self.expr.eval(&vars).d1;
            vars[i].d1 = 0.0;
        }
        out
    }

    /// Symmetrized Hessian; raises a diagnostic when the raw asymmetry
    /// exceeds 1e-8.
    pub fn hessian(&self, phi: &Array1<f64>) -> Result<Array2<f64>> {
        let dim = self.dim();
        let mut h = Array2::zeros((dim, dim));
        let mut vars: Vec<HyperDual> = phi.iter().map(|&x| HyperDual::constant(x)).collect();
        for i in 0..dim {
            for j in i..dim {
                vars[i].d1 = 1.0;
                vars[j].d2 = 1.0;
                let r = self.expr.eval(&vars);
                h[(i, j)] = r.d12;
                h[(j, i)] = r.d12;
                vars[i].d1 = 0.0;
                vars[j].d2 = 0.0;
            }
        }
        // hyper-dual evaluation is symmetric by construction; the guard
        // protects against future non-symmetric backends
        let asym = (&h - &h.t()).iter().map(|x| x.abs()).fold(0.0, f64::max);
        if asym > 1e-8 {
            return Err(Error::InvalidArgument(format!("hessian asymmetry {asym:.3e}")));
        }
        Ok(h)
    }

    /// omega . grad H, the right-hand side of Hamilton's equations.
    pub fn velocity(&self, phi: &Array1<f64>) -> Array1<f64> {
        let n = self.n_pairs;
        let grad = self.gradient(phi);
        let mut v = Array1::zeros(2 * n);
        for i in 0..n {
            v[i] = grad[n + i];
            v[n + i] = -grad[i];
        }
        v
    }

    /// omega . Hessian, the generator of the linearized (Jacobi) flow.
    pub fn jacobi_generator(&self, phi: &Array1<f64>) -> Result<Array2<f64>> {
        let n = self.n_pairs;
        let h = self.hessian(phi)?;
        let mut m = Array2::zeros((2 * n, 2 * n));
        for i in 0..n {
            for d in 0..2 * n {
                m[(i, d)] = h[(n + i, d)];
                m[(n + i, d)] = -h[(i, d)];
            }
        }
        Ok(m)
    }
}

/// Parse a Hamiltonian over q1..qn, p1..pn (q, p for n = 1); derivatives come
/// from hyper-dual evaluation of the expression tree.
pub fn parse_hamiltonian(text: &str, n_pairs: usize) -> Result<HamiltonianModel> {
    let expr = parse_expr(text, n_pairs)?;
    Ok(HamiltonianModel { n_pairs, kind: ModelKind::Parsed { text: text.to_string() }, expr })
}

fn parse_expr(text: &str, n_pairs: usize) -> Result<Expr> {
    let mut parser = Parser { text: text.as_bytes(), pos: 0, n_pairs };
    let expr = parser.expression()?;
    parser.skip_ws();
    if parser.pos != parser.text.len() {
        return Err(parser.err("trailing input"));
    }
    Ok(expr)
}

/// One trajectory sample.
#[derive(Debug, Clone)]
pub struct FlowSample {
    pub t: f64,
    pub phi: Array1<f64>,
    pub energy: f64,
}

/// Fixed-step RK4 trajectory with its relative energy drift.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<FlowSample>,
    pub energy_drift: f64,
}

fn rk4_step<F>(f: &F, y: &Array1<f64>, dt: f64) -> Array1<f64>
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    let k1 = f(y);
    let k2 = f(&(y + &k1.mapv(|v| v * dt / 2.0)));
    let k3 = f(&(y + &k2.mapv(|v| v * dt / 2.0)));
    let k4 = f(&(y + &k3.mapv(|v| v * dt)));
    y + &((k1 + k2.mapv(|v| 2.0 * v) + k3.mapv(|v| 2.0 * v) + k4).mapv(|v| v * dt / 6.0))
}

fn check_finite(phi: &Array1<f64>, t: f64) -> Result<()> {
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteState { t });
    }
    Ok(())
}

/// Integrate Hamilton's equations with fixed-step RK4, sampling every
/// `sample_every` steps (and always the final point).
pub fn flow(
    model: &HamiltonianModel,
    phi0: &Array1<f64>,
    t: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if dt <= 0.0 {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let steps = (t / dt).round().max(1.0) as usize;
    let dt = t / steps as f64;
    let rhs = |phi: &Array1<f64>| model.velocity(phi);
    let mut phi = phi0.clone();
    let e0 = model.evaluate(&phi);
    let mut samples =
        vec![FlowSample { t: 0.0, phi: phi.clone(), energy: e0 }];
    let mut drift: f64 = 0.0;
    let every = sample_every.max(1);
    for k in 0..steps {
        phi = rk4_step(&rhs, &phi, dt);
        let tk = (k + 1) as f64 * dt;
        check_finite(&phi, tk)?;
        let e = model.evaluate(&phi);
        drift = drift.max((e - e0).abs() / e0.abs().max(1e-30));
        if (k + 1) % every == 0 || k + 1 == steps {
            samples.push(FlowSample { t: tk, phi: phi.clone(), energy: e });
        }
    }
    Ok(Trajectory { samples, energy_drift: drift })
}

/// Phase point with the monodromy matrix transported along its trajectory.
#[derive(Debug, Clone)]
pub struct JacobiState {
    pub t: f64,
    pub phi: Array1<f64>,
    pub monodromy: Array2<f64>,
}

/// Co-integrate the Jacobi equation dM/dt = (omega Hess H) M alongside the
/// flow, for a full basis of initial displacements.
pub fn monodromy(
    model: &HamiltonianModel,
    phi0: &Array1<f64>,
    t: f64,
    dt: f64,
) -> Result<JacobiState> {
    if dt <= 0.0 {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let dim = model.dim();
    let steps = (t / dt).round().max(1.0) as usize;
    let dt = t / steps as f64;
    // combined vector field on (phi, M) keeps one RK4 error budget
    let mut y = Array1::zeros(dim + dim * dim);
    for i in 0..dim {
        y[i] = phi0[i];
        y[dim + i * dim + i] = 1.0;
    }
    let rhs = |state: &Array1<f64>| -> Array1<f64> {
        let phi = state.slice(ndarray::s![0..dim]).to_owned();
        let gen = model.jacobi_generator(&phi).expect("hessian");
        let vel = model.velocity(&phi);
        let mut out = Array1::zeros(dim + dim * dim);
        for i in 0..dim {
            out[i] = vel[i];
        }
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = 0.0;
                for k in 0..dim {
                    acc += gen[(r, k)] * state[dim + k * dim + c];
                }
                out[dim + r * dim + c] = acc;
            }
        }
        out
    };
    for k in 0..steps {
        y = rk4_step(&rhs, &y, dt);
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteState { t: (k + 1) as f64 * dt });
        }
    }
    let phi = y.slice(ndarray::s![0..dim]).to_owned();
    let mut m = Array2::zeros((dim, dim));
    for r in 0..dim {
        for c in 0..dim {
            m[(r, c)] = y[dim + r * dim + c];
        }
    }
    Ok(JacobiState { t: steps as f64 * dt, phi, monodromy: m })
}

/// Largest Lyapunov exponent by renormalized tangent-vector iteration along
/// a single orbit.
pub fn lyapunov(
    model: &HamiltonianModel,
    phi0: &Array1<f64>,
    total_time: f64,
    dt: f64,
    renorm_interval: f64,
    tangent0: &Array1<f64>,
) -> Result<f64> {
    if dt <= 0.0 || renorm_interval <= dt || total_time <= renorm_interval {
        return Err(Error::InvalidArgument(
            "need total_time >> renorm_interval > dt > 0".into(),
        ));
    }
    let dim = model.dim();
    let mut y = Array1::zeros(2 * dim);
    let norm0: f64 = tangent0.iter().map(|x| x * x).sum::<f64>().sqrt();
    for i in 0..dim {
        y[i] = phi0[i];
        y[dim + i] = tangent0[i] / norm0;
    }
    let rhs = |state: &Array1<f64>| -> Array1<f64> {
        let phi = state.slice(ndarray::s![0..dim]).to_owned();
        let gen = model.jacobi_generator(&phi).expect("hessian");
        let vel = model.velocity(&phi);
        let mut out = Array1::zeros(2 * dim);
        for i in 0..dim {
            out[i] = vel[i];
            let mut acc = 0.0;
            for k in 0..dim {
                acc += gen[(i, k)] * state[dim + k];
            }
            out[dim + i] = acc;
        }
        out
    };
    let steps_per_block = (renorm_interval / dt).round().max(1.0) as usize;
    let dt = renorm_interval / steps_per_block as f64;
    let blocks = (total_time / renorm_interval).round().max(2.0) as usize;
    // the first block is a warmup aligning the tangent with the expanding
    // direction; its growth is not accumulated
    let mut log_sum = 0.0;
    for block in 0..blocks {
        for _ in 0..steps_per_block {
            y = rk4_step(&rhs, &y, dt);
        }
        let norm: f64 = (0..dim).map(|i| y[dim + i] * y[dim + i]).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NonFiniteState { t: (block + 1) as f64 * renorm_interval });
        }
        if block > 0 {
            log_sum += norm.ln();
        }
        for i in 0..dim {
            y[dim + i] /= norm;
        }
    }
    Ok(log_sum / ((blocks - 1) as f64 * renorm_interval))
}

/// Monte-Carlo mean of per-orbit exponents over initial conditions sampled
/// uniformly from [-box_half, box_half]^{2n}; the tangent seed is drawn from
/// the same stream.
pub fn lyapunov_ensemble<R: Rng>(
    model: &HamiltonianModel,
    rng: &mut R,
    samples: usize,
    box_half: f64,
    total_time: f64,
    dt: f64,
    renorm_interval: f64,
) -> Result<Vec<f64>> {
    let dim = model.dim();
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let phi0 = Array1::from_shape_fn(dim, |_| rng.gen_range(-box_half..box_half));
        let tangent = Array1::from_shape_fn(dim, |_| rng.gen_range(-1.0..1.0));
        out.push(lyapunov(model, &phi0, total_time, dt, renorm_interval, &tangent)?);
    }
    Ok(out)
}

/// Trajectory export: CSV with t, q.., p.., energy columns.
pub fn trajectory_csv(model: &HamiltonianModel, trajectory: &Trajectory) -> String {
    let n = model.n_pairs();
    let mut head = String::from("t");
    for i in 1..=n {
        head.push_str(&format!(",q{i}"));
    }
    for i in 1..=n {
        head.push_str(&format!(",p{i}"));
    }
    head.push_str(",energy\n");
    let mut out = head;
    for s in &trajectory.samples {
        out.push_str(&format!("{:.12e}", s.t));
        for x in s.phi.iter() {
            out.push_str(&format!(",{x:.12e}"));
        }
        out.push_str(&format!(",{:.12e}\n", s.energy));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(v: &[f64]) -> Array1<f64> {
        Array1::from_vec(v.to_vec())
    }

    #[test]
    fn parses_harmonic_and_matches_builtin() {
        let m = parse_hamiltonian("0.5*p^2 + 0.5*q^2", 1).unwrap();
        let phi = arr(&[0.3, -0.7]);
        let h = m.hessian(&phi).unwrap();
        assert!((h[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((h[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(h[(0, 1)].abs() < 1e-12);
        let b = HamiltonianModel::harmonic(1.0, 1.0);
        assert!((m.evaluate(&phi) - b.evaluate(&phi)).abs() < 1e-12);
    }

    #[test]
    fn parses_inverted_hessian() {
        let m = parse_hamiltonian("p^2/2 - q^2/2", 1).unwrap();
        let h = m.hessian(&arr(&[1.0, 2.0])).unwrap();
        assert!((h[(0, 0)] + 1.0).abs() < 1e-12);
        assert!((h[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_second_derivative() {
        let m = parse_hamiltonian("p^2/2 + q^4/4", 1).unwrap();
        let h = m.hessian(&arr(&[1.0, 0.0])).unwrap();
        assert!((h[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn parser_errors() {
        assert!(matches!(
            parse_hamiltonian("q^2.5", 1),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_hamiltonian("q + r", 1),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_hamiltonian("q +", 1), Err(Error::Parse { .. })));
        assert!(matches!(parse_hamiltonian("(q", 1), Err(Error::Parse { .. })));
        // n=2 aliases q/p are not defined
        assert!(parse_hamiltonian("q^2", 2).is_err());
        assert!(parse_hamiltonian("q1^2 + p2^2", 2).is_ok());
    }

    #[test]
    fn gradient_hessian_match_finite_differences() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let m = parse_hamiltonian("p1^2/2 + p2^2/2 + sin(q1)*cos(q2) + exp(q1/4)*q2^2/2", 2)
            .unwrap();
        let h = 1e-5;
        for _ in 0..5 {
            let phi = Array1::from_shape_fn(4, |_| rng.gen_range(-1.0..1.0));
            let grad = m.gradient(&phi);
            let hess = m.hessian(&phi).unwrap();
            for i in 0..4 {
                let mut up = phi.clone();
                let mut dn = phi.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (m.evaluate(&up) - m.evaluate(&dn)) / (2.0 * h);
                assert!(
                    (grad[i] - fd).abs() / fd.abs().max(1.0) < 1e-6,
                    "grad[{i}] = {} vs fd {fd}",
                    grad[i]
                );
                for j in 0..4 {
                    let mut gu = phi.clone();
                    let mut gd = phi.clone();
                    gu[j] += h;
                    gd[j] -= h;
                    let mu = parse_like(&m, &gu, i);
                    let md = parse_like(&m, &gd, i);
                    let fd2 = (mu - md) / (2.0 * h);
                    assert!(
                        (hess[(i, j)] - fd2).abs() / fd2.abs().max(1.0) < 1e-6,
                        "hess[{i},{j}]"
                    );
                }
            }
        }
    }

    fn parse_like(m: &HamiltonianModel, phi: &Array1<f64>, i: usize) -> f64 {
        m.gradient(phi)[i]
    }

    #[test]
    fn harmonic_orbit_closes() {
        let m = HamiltonianModel::harmonic(1.0, 1.0);
        let phi0 = arr(&[1.0, 0.0]);
        let t = 2.0 * std::f64::consts::PI;
        let traj = flow(&m, &phi0, t, 1e-3, 1000).unwrap();
        let last = traj.samples.last().unwrap();
        assert!((last.phi[0] - 1.0).abs() < 1e-6);
        assert!(last.phi[1].abs() < 1e-6);
    }

    #[test]
    fn free_particle_drifts_linearly() {
        let m = HamiltonianModel::free();
        let traj = flow(&m, &arr(&[0.0, 1.0]), 3.0, 1e-3, 100).unwrap();
        let last = traj.samples.last().unwrap();
        assert!((last.phi[0] - 3.0).abs() < 1e-12);
        assert!((last.phi[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_energy_drift_small() {
        let m = HamiltonianModel::quartic(1.0);
        let traj = flow(&m, &arr(&[1.0, 0.0]), 10.0, 1e-3, 1000).unwrap();
        assert!(traj.energy_drift < 1e-8, "drift {}", traj.energy_drift);
    }

    #[test]
    fn monodromy_analytic_cases() {
        // harmonic full period -> identity
        let m = HamiltonianModel::harmonic(1.0, 1.0);
        let j = monodromy(&m, &arr(&[1.0, 0.0]), 2.0 * std::f64::consts::PI, 1e-3).unwrap();
        let eye = Array2::<f64>::eye(2);
        let dev = (&j.monodromy - &eye).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "harmonic dev {dev}");

        // inverted oscillator -> [[cosh t, sinh t], [sinh t, cosh t]]
        let m = HamiltonianModel::inverted();
        let t = 1.5;
        let j = monodromy(&m, &arr(&[0.2, -0.1]), t, 1e-3).unwrap();
        let expect = ndarray::array![[t.cosh(), t.sinh()], [t.sinh(), t.cosh()]];
        let dev = (&j.monodromy - &expect).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "inverted dev {dev}");

        // free particle -> [[1, t], [0, 1]]
        let m = HamiltonianModel::free();
        let j = monodromy(&m, &arr(&[0.0, 1.0]), 3.0, 1e-3).unwrap();
        let expect = ndarray::array![[1.0, 3.0], [0.0, 1.0]];
        let dev = (&j.monodromy - &expect).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(dev < 1e-9, "free dev {dev}");
    }

    #[test]
    fn monodromy_is_symplectic_and_cocycle() {
        let m = HamiltonianModel::quartic(0.8);
        let phi0 = arr(&[0.9, 0.3]);
        let j = monodromy(&m, &phi0, 5.0, 1e-3).unwrap();
        let omega = ndarray::array![[0.0, 1.0], [-1.0, 0.0]];
        let resid = j.monodromy.t().dot(&omega).dot(&j.monodromy) - &omega;
        assert!(resid.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-6);
        let det = j.monodromy[(0, 0)] * j.monodromy[(1, 1)]
            - j.monodromy[(0, 1)] * j.monodromy[(1, 0)];
        assert!((det - 1.0).abs() < 1e-7);

        // cocycle: M(t1 + t2; phi0) = M(t2; phi(t1)) M(t1; phi0)
        let (t1, t2) = (1.0, 1.3);
        let j1 = monodromy(&m, &phi0, t1, 1e-3).unwrap();
        let j2 = monodromy(&m, &j1.phi, t2, 1e-3).unwrap();
        let j12 = monodromy(&m, &phi0, t1 + t2, 1e-3).unwrap();
        let prod = j2.monodromy.dot(&j1.monodromy);
        let dev = (&j12.monodromy - &prod).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "cocycle dev {dev}");
    }

    #[test]
    fn lyapunov_benchmarks() {
        let inv = HamiltonianModel::inverted();
        let l = lyapunov(&inv, &arr(&[0.1, 0.0]), 20.0, 1e-3, 1.0, &arr(&[1.0, 0.3])).unwrap();
        assert!((l - 1.0).abs() < 0.02, "inverted exponent {l}");

        let harm = HamiltonianModel::harmonic(1.0, 1.0);
        let l = lyapunov(&harm, &arr(&[1.0, 0.0]), 50.0, 1e-3, 1.0, &arr(&[0.6, 0.8])).unwrap();
        assert!(l.abs() < 0.02, "harmonic exponent {l}");

        let free = HamiltonianModel::free();
        let l = lyapunov(&free, &arr(&[0.0, 1.0]), 100.0, 1e-3, 1.0, &arr(&[0.7, 0.7])).unwrap();
        assert!(l.abs() < 0.05, "free exponent {l}");
    }

    #[test]
    fn jacobi_growth_dichotomy() {
        // squared separation grows at least like e^{1.9 t} between t=2 and
        // t=10 for the inverted oscillator, stays bounded for the harmonic
        let inv = HamiltonianModel::inverted();
        let d = |t: f64| {
            let j = monodromy(&inv, &arr(&[0.1, 0.0]), t, 1e-3).unwrap();
            let v = j.monodromy.dot(&arr(&[1.0, 0.0]));
            v.iter().map(|x| x * x).sum::<f64>()
        };
        let ratio = d(10.0) / d(2.0);
        assert!(ratio > (1.9f64 * 8.0).exp(), "growth ratio {ratio}");

        let harm = HamiltonianModel::harmonic(1.0, 1.0);
        let j = monodromy(&harm, &arr(&[1.0, 0.0]), 10.0, 1e-3).unwrap();
        let v = j.monodromy.dot(&arr(&[1.0, 0.0]));
        let d = v.iter().map(|x| x * x).sum::<f64>();
        assert!(d < 1.0 + 1e-6, "harmonic separation bounded by its envelope, got {d}");
    }

    #[test]
    fn rejects_bad_steps() {
        let m = HamiltonianModel::free();
        assert!(flow(&m, &arr(&[0.0, 1.0]), 1.0, -0.1, 1).is_err());
        assert!(lyapunov(&m, &arr(&[0.0, 1.0]), 0.5, 1e-3, 1.0, &arr(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn finite_time_blowup_is_reported() {
        // an inverted quartic escapes to infinity in finite time
        let m = parse_hamiltonian("p^2/2 - q^4/4", 1).unwrap();
        let phi0 = arr(&[3.0, 3.0]);
        assert!(matches!(
            flow(&m, &phi0, 5.0, 0.1, 1),
            Err(Error::NonFiniteState { .. })
        ));
        assert!(matches!(
            monodromy(&m, &phi0, 5.0, 0.1),
            Err(Error::NonFiniteState { .. })
        ));
    }
}
