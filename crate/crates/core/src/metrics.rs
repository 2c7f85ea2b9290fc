//! The scalar-product metrics: positive-definite SvH, the gauge and
//! symplectic products, the generalized one-parameter families, metric
//! adjoints, hermiticity residuals and signatures.
//!
//! Throughout, a metric is the conjugate-symmetric fiber matrix g with
//! <Phi|psi> = sum_{A,B} conj(Phi_A) g^{AB} psi_B over monomial masks A, B.

use crate::error::{Error, Result};
use crate::grassmann::{contraction_op, wedge_op, Algebra, GrassmannOperator};
use crate::linalg::{
    self, adjoint_matrix, cr, eigh_hermitian, frobenius, hermiticity_deviation, inverse,
    nullspace_real,
};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const HERMITICITY_TOL: f64 = 1e-12;

/// Which builder produced a metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricFamily {
    Svh,
    Gauge,
    Symplectic,
    GeneralA { b: f64 },
    GeneralB { theta_alpha: f64, gamma_i: f64, g03_re: f64, g03_im: f64 },
    GeneralC { theta_alpha: f64, b: f64, g03_re: f64, g03_im: f64 },
    Custom,
}

/// A sesquilinear-form matrix on the fiber together with its provenance.
#[derive(Debug, Clone)]
pub struct Metric {
    algebra: Algebra,
    g: Array2<C64>,
    family: MetricFamily,
}

impl Metric {
    /// Wrap an explicit conjugate-symmetric invertible matrix.
    pub fn custom(algebra: &Algebra, g: Array2<C64>) -> Result<Self> {
        Self::build(algebra, g, MetricFamily::Custom)
    }

    fn build(algebra: &Algebra, g: Array2<C64>, family: MetricFamily) -> Result<Self> {
        let d = algebra.state_dim();
        if g.nrows() != d || g.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: g.nrows() });
        }
        let dev = hermiticity_deviation(&g);
        if dev > HERMITICITY_TOL * frobenius(&g).max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        inverse(&g)?;
        Ok(Metric { algebra: algebra.clone(), g, family })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.g
    }

    pub fn family(&self) -> &MetricFamily {
        &self.family
    }

    /// <phi|psi> on dense fiber coefficient vectors.
    pub fn pairing(&self, phi: &Array1<C64>, psi: &Array1<C64>) -> C64 {
        let gp = self.g.dot(psi);
        phi.iter().zip(gp.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sq(&self, psi: &Array1<C64>) -> f64 {
        self.pairing(psi, psi).re
    }
}

/// Positive-definite product: the identity matrix on the monomial basis,
/// overall constant fixed to 1, so the norm is the coefficient square sum.
pub fn svh_metric(algebra: &Algebra) -> Metric {
    let d = algebra.state_dim();
    Metric { algebra: algebra.clone(), g: Array2::eye(d), family: MetricFamily::Svh }
}

/// Indefinite product pairing each monomial with its complement; realized as
/// the Berezin integral of conj(Phi) wedge psi with the overall phase
/// kappa_n = (-i)^n fixed by the n=1 normalization <vol|1> = i.
pub fn gauge_metric(algebra: &Algebra) -> Result<Metric> {
    let n = algebra.n_pairs();
    if n == 0 {
        return Err(Error::InvalidArgument("gauge metric needs at least one pair".into()));
    }
    let g = gauge_matrix(algebra);
    let metric = Metric::build(algebra, g, MetricFamily::Gauge)?;
    // the construction must reproduce the defining hermiticity conditions
    // c^dagger = c, cbar^dagger = cbar; cheap exact check
    verify_rule_residual(&metric, &gauge_rule(algebra)?)?;
    Ok(metric)
}

fn gauge_matrix(algebra: &Algebra) -> Array2<C64> {
    let n = algebra.n_pairs();
    let m = algebra.state_generators();
    let d = algebra.state_dim();
    let kappa = C64::new(0.0, -1.0).powu(n as u32);
    let mut g = Array2::zeros((d, d));
    let full = (d - 1) as u64;
    for a in 0..d as u64 {
        let b = !a & full;
        let k = a.count_ones() as usize;
        // reversal sign of conj(c^A), then the sign sorting c^A c^B into the
        // volume monomial
        let rev = if (k * (k.saturating_sub(1)) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        let merge = state_merge_sign(a, b, m);
        g[(a as usize, b as usize)] = kappa * cr(rev * merge);
    }
    g
}

fn state_merge_sign(a: u64, b: u64, _m: usize) -> f64 {
    let mut swaps = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros() as u64;
        swaps += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Block product <Phi|psi> = sum_m (i^m/m!) Phi*_{a..} w^{ab}.. psi_{b..};
/// on increasing-index coefficients g^{AB} = i^|A| det(omega[A, B]).
pub fn symplectic_metric(algebra: &Algebra) -> Metric {
    let d = algebra.state_dim();
    let mut g = Array2::zeros((d, d));
    for a in 0..d as u64 {
        for b in 0..d as u64 {
            if a.count_ones() != b.count_ones() {
                continue;
            }
            let det = omega_minor_det(algebra, a, b);
            if det == 0.0 {
                continue;
            }
            let m = a.count_ones();
            g[(a as usize, b as usize)] = C64::new(0.0, 1.0).powu(m) * cr(det);
        }
    }
    Metric { algebra: algebra.clone(), g, family: MetricFamily::Symplectic }
}

fn mask_indices(mask: u64) -> Vec<usize> {
    let mut v = Vec::new();
    let mut m = mask;
    while m != 0 {
        v.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    v
}

fn omega_minor_det(algebra: &Algebra, a: u64, b: u64) -> f64 {
    let rows = mask_indices(a);
    let cols = mask_indices(b);
    let k = rows.len();
    if k == 0 {
        return 1.0;
    }
    let mut minor = Array2::<f64>::zeros((k, k));
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            minor[(i, j)] = algebra.omega_entry(r, c) as f64;
        }
    }
    det_small(&minor)
}

fn det_small(m: &Array2<f64>) -> f64 {
    // Laplace on integer matrices up to 6x6; entries are in {-1, 0, 1}
    let k = m.nrows();
    match k {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => {
            let mut det = 0.0;
            for j in 0..k {
                if m[(0, j)] == 0.0 {
                    continue;
                }
                let mut sub = Array2::zeros((k - 1, k - 1));
                for r in 1..k {
                    let mut cc = 0;
                    for c in 0..k {
                        if c == j {
                            continue;
                        }
                        sub[(r - 1, cc)] = m[(r, c)];
                        cc += 1;
                    }
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                det += sign * m[(0, j)] * det_small(&sub);
            }
            det
        }
    }
}

/// The three generalized n=1 families of hermiticity conditions.
#[derive(Debug, Clone, Copy)]
pub enum GeneralFamily {
    /// beta* gamma = 1: c^{p+} = i b cbar_q paired with a = -b on the q side.
    A { b: f64 },
    /// beta* gamma = 0 via beta = 0: phases plus the gamma_I admixture.
    B { theta_alpha: f64, gamma_i: f64, g03: C64 },
    /// beta* gamma = 0 via gamma = 0: phases plus the i b admixture.
    C { theta_alpha: f64, b: f64, g03: C64 },
}

/// Exact metric matrices of the generalized families (n = 1).
pub fn general_metric(algebra: &Algebra, family: GeneralFamily) -> Result<Metric> {
    if algebra.n_pairs() != 1 {
        return Err(Error::InvalidArgument("general metrics are derived for n = 1".into()));
    }
    let z = cr(0.0);
    match family {
        GeneralFamily::A { b } => {
            if b == 0.0 {
                return Err(Error::InvalidArgument("family A needs b != 0".into()));
            }
            let ib = C64::new(0.0, b);
            let g = ndarray::array![
                [cr(1.0), z, z, z],
                [z, z, -ib, z],
                [z, ib, z, z],
                [z, z, z, cr(-b * b)]
            ];
            Metric::build(algebra, g, MetricFamily::GeneralA { b })
        }
        GeneralFamily::B { theta_alpha, gamma_i, g03 } => {
            let phase = C64::from_polar(1.0, theta_alpha);
            let e = g03 * phase;
            let g00 = C64::new(0.0, 1.0) * e * cr(gamma_i);
            let g = ndarray::array![
                [g00, z, z, g03],
                [z, z, e, z],
                [z, -e, z, z],
                [-g03 * phase * phase, z, z, z]
            ];
            Metric::build(
                algebra,
                g,
                MetricFamily::GeneralB {
                    theta_alpha,
                    gamma_i,
                    g03_re: g03.re,
                    g03_im: g03.im,
                },
            )
        }
        GeneralFamily::C { theta_alpha, b, g03 } => {
            let phase = C64::from_polar(1.0, theta_alpha);
            let e = g03 * phase;
            let g33 = C64::new(0.0, -1.0) * e * cr(b);
            let g = ndarray::array![
                [z, z, z, g03],
                [z, z, e, z],
                [z, -e, z, z],
                [-g03 * phase * phase, z, z, g33]
            ];
            Metric::build(
                algebra,
                g,
                MetricFamily::GeneralC { theta_alpha, b, g03_re: g03.re, g03_im: g03.im },
            )
        }
    }
}

/// Metric adjoint A -> g^{-1} A^H g, satisfying <Phi|A psi> = <adj(A) Phi|psi>.
pub fn adjoint(metric: &Metric, op: &GrassmannOperator) -> Result<GrassmannOperator> {
    let ginv = inverse(metric.matrix())?;
    let m = ginv.dot(&adjoint_matrix(&op.matrix)).dot(metric.matrix());
    Ok(GrassmannOperator { algebra: op.algebra.clone(), matrix: m, parity: op.parity })
}

/// Frobenius norm of gA - (gA)^H; zero iff A is self-adjoint under g.
pub fn hermiticity_residual(metric: &Metric, op: &GrassmannOperator) -> f64 {
    let ga = metric.matrix().dot(&op.matrix);
    hermiticity_deviation(&ga)
}

/// Eigenvalue counts (n_plus, n_minus, n_zero) of the conjugate-symmetric g,
/// with |lambda| < 1e-10 * ||g|| counting as zero.
pub fn signature(metric: &Metric) -> Result<(usize, usize, usize)> {
    let (vals, _) = eigh_hermitian(metric.matrix())?;
    let tol = 1e-10 * frobenius(metric.matrix());
    let mut counts = (0, 0, 0);
    for &v in vals.iter() {
        if v.abs() < tol {
            counts.2 += 1;
        } else if v > 0.0 {
            counts.0 += 1;
        } else {
            counts.1 += 1;
        }
    }
    Ok(counts)
}

/// One half of a generalized hermiticity condition, of the shape
/// `wedge_target^dagger = alpha wedge_target + beta contraction_partner`,
/// `contraction_partner^dagger = gamma wedge_target + delta contraction_partner`.
#[derive(Debug, Clone, Copy)]
pub struct HalfRule {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl HalfRule {
    pub fn family1(b: f64) -> Self {
        HalfRule {
            alpha: cr(0.0),
            beta: C64::new(0.0, b),
            gamma: C64::new(0.0, 1.0 / b),
            delta: cr(0.0),
        }
    }

    pub fn family2(theta: f64, gamma_i: f64) -> Self {
        HalfRule {
            alpha: C64::from_polar(1.0, theta),
            beta: cr(0.0),
            gamma: C64::new(0.0, gamma_i),
            delta: C64::from_polar(1.0, -theta),
        }
    }

    pub fn family3(theta: f64, b: f64) -> Self {
        HalfRule {
            alpha: C64::from_polar(1.0, theta),
            beta: C64::new(0.0, b),
            gamma: cr(0.0),
            delta: C64::from_polar(1.0, -theta),
        }
    }
}

/// Classification of a half rule after checking the constraint chain.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleClass {
    /// beta* gamma = 1 (the i b / i/b pairing).
    Family1,
    /// beta* gamma = 0 with beta = 0.
    Family2,
    /// beta* gamma = 0 with gamma = 0 (the remaining real case collapses here).
    Family3,
}

/// Check the involution and unit-determinant constraints on a half rule and
/// classify it by the value of beta* gamma.
pub fn classify_conjugation(rule: &HalfRule) -> Result<RuleClass> {
    let HalfRule { alpha, beta, gamma, delta } = *rule;
    let tol = 1e-10;
    let checks: [(&'static str, C64); 5] = [
        ("alpha delta - beta gamma = 1", alpha * delta - beta * gamma - cr(1.0)),
        ("alpha* alpha + beta* gamma = 1", alpha.conj() * alpha + beta.conj() * gamma - cr(1.0)),
        ("alpha* beta + beta* delta = 0", alpha.conj() * beta + beta.conj() * delta),
        ("alpha gamma* + delta* gamma = 0", alpha * gamma.conj() + delta.conj() * gamma),
        ("gamma* beta + delta* delta = 1", gamma.conj() * beta + delta.conj() * delta - cr(1.0)),
    ];
    for (name, residual) in checks {
        if residual.norm() > tol {
            return Err(Error::InconsistentRule { constraint: name, residual: residual.norm() });
        }
    }
    let bg = beta.conj() * gamma;
    if bg.im.abs() > tol {
        return Err(Error::InconsistentRule {
            constraint: "Im(beta* gamma) = 0",
            residual: bg.im.abs(),
        });
    }
    if bg.re > 1.0 + tol {
        return Err(Error::InconsistentRule {
            constraint: "beta* gamma <= 1",
            residual: bg.re - 1.0,
        });
    }
    if (bg.re - 1.0).abs() < tol {
        Ok(RuleClass::Family1)
    } else if beta.norm() < tol {
        Ok(RuleClass::Family2)
    } else if gamma.norm() < tol {
        Ok(RuleClass::Family3)
    } else {
        // beta* gamma real and nonzero with both coefficients present never
        // survives the constraint chain (the z-case collapses to beta or
        // gamma vanishing)
        Err(Error::InconsistentRule {
            constraint: "beta* gamma in {0, 1}",
            residual: bg.re.abs().min((bg.re - 1.0).abs()),
        })
    }
}

/// A full conjugation rule for all 2n generator pairs, written on the
/// operator basis (c^1..c^{2n}, cbar_1..cbar_{2n}):
/// c^{a+} = sum_b P[a,b] c^b + Q[a,b] cbar_b,
/// cbar_a+ = sum_b R[a,b] c^b + S[a,b] cbar_b.
#[derive(Debug, Clone)]
pub struct ConjugationRule {
    pub p: Array2<C64>,
    pub q: Array2<C64>,
    pub r: Array2<C64>,
    pub s: Array2<C64>,
}

impl ConjugationRule {
    /// SvH: c^{a+} = cbar_a, cbar_a+ = c^a.
    pub fn svh(algebra: &Algebra) -> Self {
        let m = algebra.state_generators();
        ConjugationRule {
            p: Array2::zeros((m, m)),
            q: Array2::eye(m),
            r: Array2::eye(m),
            s: Array2::zeros((m, m)),
        }
    }

    /// Gauge: every generator is its own adjoint.
    pub fn gauge(algebra: &Algebra) -> Self {
        let m = algebra.state_generators();
        ConjugationRule {
            p: Array2::eye(m),
            q: Array2::zeros((m, m)),
            r: Array2::zeros((m, m)),
            s: Array2::eye(m),
        }
    }

    /// Symplectic: c^{a+} = i w^{ab} cbar_b, cbar_a+ = i w_{ab} c^b with
    /// w_{ab} the inverse symplectic matrix.
    pub fn symplectic(algebra: &Algebra) -> Self {
        let m = algebra.state_generators();
        let mut q = Array2::zeros((m, m));
        let mut r = Array2::zeros((m, m));
        for a in 0..m {
            for b in 0..m {
                let w = algebra.omega_entry(a, b) as f64;
                if w != 0.0 {
                    q[(a, b)] = C64::new(0.0, w);
                    r[(a, b)] = C64::new(0.0, -w);
                }
            }
        }
        ConjugationRule { p: Array2::zeros((m, m)), q, r, s: Array2::zeros((m, m)) }
    }

    /// Assemble the n=1 rule from a (c^p, cbar_q) half and a (c^q, cbar_p)
    /// half of the generalized hermiticity conditions.
    pub fn from_half_pair(p_side: HalfRule, q_side: HalfRule) -> Self {
        let z = cr(0.0);
        let p = ndarray::array![[q_side.alpha, z], [z, p_side.alpha]];
        let q = ndarray::array![[z, q_side.beta], [p_side.beta, z]];
        let r = ndarray::array![[z, p_side.gamma], [q_side.gamma, z]];
        let s = ndarray::array![[p_side.delta, z], [z, q_side.delta]];
        ConjugationRule { p, q, r, s }
    }

    /// The family-1 pair: p side with parameter b, q side with parameter a.
    pub fn family1_pair(b: f64, a: f64) -> Self {
        Self::from_half_pair(HalfRule::family1(b), HalfRule::family1(a))
    }

    fn block(&self) -> Array2<C64> {
        let m = self.p.nrows();
        let mut t = Array2::zeros((2 * m, 2 * m));
        for i in 0..m {
            for j in 0..m {
                t[(i, j)] = self.p[(i, j)];
                t[(i, m + j)] = self.q[(i, j)];
                t[(m + i, j)] = self.r[(i, j)];
                t[(m + i, m + j)] = self.s[(i, j)];
            }
        }
        t
    }
}

/// Adjoint images of the 4n basic operators under a full rule.
fn rule_images(
    algebra: &Algebra,
    rule: &ConjugationRule,
) -> Result<Vec<(GrassmannOperator, Array2<C64>)>> {
    let m = algebra.state_generators();
    if rule.p.nrows() != m {
        return Err(Error::DimensionMismatch { expected: m, got: rule.p.nrows() });
    }
    let wedges: Vec<GrassmannOperator> =
        (0..m).map(|a| wedge_op(algebra, a)).collect::<Result<_>>()?;
    let contractions: Vec<GrassmannOperator> =
        (0..m).map(|a| contraction_op(algebra, a)).collect::<Result<_>>()?;
    let d = algebra.state_dim();
    let combine = |wc: &Array2<C64>, dc: &Array2<C64>, a: usize| -> Array2<C64> {
        let mut out = Array2::zeros((d, d));
        for b in 0..m {
            if wc[(a, b)] != cr(0.0) {
                out = out + wedges[b].matrix.mapv(|z| z * wc[(a, b)]);
            }
            if dc[(a, b)] != cr(0.0) {
                out = out + contractions[b].matrix.mapv(|z| z * dc[(a, b)]);
            }
        }
        out
    };
    let mut images = Vec::with_capacity(2 * m);
    for (a, w) in wedges.iter().enumerate() {
        images.push((w.clone(), combine(&rule.p, &rule.q, a)));
    }
    for (a, d) in contractions.iter().enumerate() {
        images.push((d.clone(), combine(&rule.r, &rule.s, a)));
    }
    Ok(images)
}

/// Check that the rule preserves the graded commutators: the adjoint images
/// must satisfy {c^{a+}, cbar_b+} = delta and vanishing like-type pairs, the
/// consistency conditions that rule out the forbidden mixed pairings.
pub fn check_pairing(rule: &ConjugationRule) -> Result<()> {
    let m = rule.p.nrows();
    let t = rule.block();
    // anticommutator form on the operator basis: J = [[0, I], [I, 0]]
    let mut j = Array2::<C64>::zeros((2 * m, 2 * m));
    for i in 0..m {
        j[(i, m + i)] = cr(1.0);
        j[(m + i, i)] = cr(1.0);
    }
    let preserved = t.dot(&j).dot(&t.t());
    let dev = linalg::max_abs(&(&preserved - &j));
    if dev > 1e-10 {
        return Err(Error::InconsistentRule {
            constraint: "adjoint images preserve the graded commutators",
            residual: dev,
        });
    }
    Ok(())
}

/// The (A^+)^+ = A condition on the full rule.
pub fn check_involution(rule: &ConjugationRule) -> Result<()> {
    let t = rule.block();
    let tc = t.mapv(|z| z.conj());
    let dev = linalg::max_abs(&(&tc.dot(&t) - &Array2::<C64>::eye(t.nrows())));
    if dev > 1e-10 {
        return Err(Error::InconsistentRule {
            constraint: "applying the adjoint twice returns the operator",
            residual: dev,
        });
    }
    Ok(())
}

/// How the one-dimensional metric solution space is pinned.
#[derive(Debug, Clone, Copy)]
pub enum Normalization {
    /// Require g[row, col] to equal the given value (real rescaling only).
    Entry { row: usize, col: usize, value: C64 },
}

impl Normalization {
    /// g^{00} = 1, the choice made for the family-A metric.
    pub fn zero_form_unit() -> Self {
        Normalization::Entry { row: 0, col: 0, value: cr(1.0) }
    }
}

/// Solve g c = (rule image)^H g over conjugate-symmetric g and apply the
/// normalization; n = 1 only (the generalized families are derived there).
pub fn metric_from_conjugation(
    algebra: &Algebra,
    rule: &ConjugationRule,
    normalization: Normalization,
) -> Result<Metric> {
    // Only the involution and pairing constraints are required here: the SvH
    // rule is a legitimate input even though it fails the unit-determinant
    // condition that the hermiticity-of-H classification additionally imposes.
    check_involution(rule)?;
    check_pairing(rule)?;
    let images = rule_images(algebra, rule)?;
    metric_from_images(algebra, &images, normalization)
}

/// Generic solver: find the conjugate-symmetric g with g A = B^H g for every
/// (A, B = image of A) pair. The solution space must be one-dimensional.
pub fn metric_from_images(
    algebra: &Algebra,
    images: &[(GrassmannOperator, Array2<C64>)],
    normalization: Normalization,
) -> Result<Metric> {
    let d = algebra.state_dim();
    if d > 16 {
        return Err(Error::InvalidArgument(
            "conjugation solver supports fibers up to n = 2; use the closed-form builders".into(),
        ));
    }
    let unknowns = 2 * d * d;
    let rows_per = 2 * d * d;
    let mut m = Array2::<f64>::zeros((images.len() * rows_per + rows_per, unknowns));
    let mut row = 0;
    // g A - B^H g = 0
    for (a, b) in images {
        let bh = adjoint_matrix(b);
        for r in 0..d {
            for c in 0..d {
                // sum_k g[r,k] A[k,c] - BH[r,k] g[k,c]
                for k in 0..d {
                    add_complex_coeff(&mut m, row, idx(r, k, d), a.matrix[(k, c)]);
                    add_complex_coeff(&mut m, row, idx(k, c, d), -bh[(r, k)]);
                }
                row += 2;
            }
        }
    }
    // hermiticity: g[r,c] - conj(g[c,r]) = 0
    for r in 0..d {
        for c in 0..d {
            let (re_rc, im_rc) = (2 * idx(r, c, d), 2 * idx(r, c, d) + 1);
            let (re_cr, im_cr) = (2 * idx(c, r, d), 2 * idx(c, r, d) + 1);
            m[(row, re_rc)] += 1.0;
            m[(row, re_cr)] -= 1.0;
            m[(row + 1, im_rc)] += 1.0;
            m[(row + 1, im_cr)] += 1.0;
            row += 2;
        }
    }
    let basis = nullspace_real(&m, 1e-10)?;
    match basis.ncols() {
        0 => Err(Error::NoMetricSolution),
        1 => {
            let mut g = Array2::zeros((d, d));
            for r in 0..d {
                for c in 0..d {
                    g[(r, c)] = C64::new(basis[(2 * idx(r, c, d), 0)], basis[(2 * idx(r, c, d) + 1, 0)]);
                }
            }
            let Normalization::Entry { row, col, value } = normalization;
            let pivot = g[(row, col)];
            if pivot.norm() < 1e-12 {
                return Err(Error::NormalizationInfeasible {
                    reason: format!("solution has zero entry at ({row}, {col})"),
                });
            }
            let scale = value / pivot;
            if scale.im.abs() > 1e-10 * scale.norm() {
                return Err(Error::NormalizationInfeasible {
                    reason: "requested value needs a non-real rescaling, which breaks conjugate symmetry"
                        .into(),
                });
            }
            let g = g.mapv(|z| z * cr(scale.re));
            Metric::build(algebra, g, MetricFamily::Custom)
        }
        dim => Err(Error::AmbiguousMetricSolution { dim }),
    }
}

fn idx(r: usize, c: usize, d: usize) -> usize {
    r * d + c
}

fn add_complex_coeff(m: &mut Array2<f64>, row: usize, entry: usize, z: C64) {
    // complex equation rows come in (re, im) pairs; unknown g[entry] likewise
    let (re_col, im_col) = (2 * entry, 2 * entry + 1);
    m[(row, re_col)] += z.re;
    m[(row, im_col)] -= z.im;
    m[(row + 1, re_col)] += z.im;
    m[(row + 1, im_col)] += z.re;
}

fn gauge_rule(algebra: &Algebra) -> Result<Vec<(GrassmannOperator, Array2<C64>)>> {
    rule_images(algebra, &ConjugationRule::gauge(algebra))
}

fn verify_rule_residual(
    metric: &Metric,
    images: &[(GrassmannOperator, Array2<C64>)],
) -> Result<()> {
    for (a, b) in images {
        let lhs = metric.matrix().dot(&a.matrix);
        let rhs = adjoint_matrix(b).dot(metric.matrix());
        let dev = linalg::max_abs(&(&lhs - &rhs));
        if dev > 1e-12 {
            return Err(Error::NormalizationInfeasible {
                reason: format!("extension violates hermiticity conditions by {dev:.3e}"),
            });
        }
    }
    Ok(())
}

/// Serialization schema: family tag, degrees of freedom, dense matrix as
/// row-major [re, im] pairs.
#[derive(Debug, Serialize, Deserialize)]
pub struct MetricDocument {
    #[serde(flatten)]
    pub family: MetricFamily,
    pub n_pairs: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl Metric {
    pub fn to_document(&self) -> MetricDocument {
        let d = self.algebra.state_dim();
        let mut matrix = Vec::with_capacity(d);
        for r in 0..d {
            let mut row = Vec::with_capacity(d);
            for c in 0..d {
                let z = self.g[(r, c)];
                row.push([z.re, z.im]);
            }
            matrix.push(row);
        }
        MetricDocument { family: self.family.clone(), n_pairs: self.algebra.n_pairs(), matrix }
    }

    pub fn from_document(doc: &MetricDocument) -> Result<Self> {
        let algebra = Algebra::new(doc.n_pairs);
        let d = algebra.state_dim();
        if doc.matrix.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: doc.matrix.len() });
        }
        let mut g = Array2::zeros((d, d));
        for (r, row) in doc.matrix.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: row.len() });
            }
            for (c, z) in row.iter().enumerate() {
                g[(r, c)] = C64::new(z[0], z[1]);
            }
        }
        Metric::build(&algebra, g, doc.family.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("metric document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MetricDocument = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("metric JSON: {e}")))?;
        Self::from_document(&doc)
    }
}
