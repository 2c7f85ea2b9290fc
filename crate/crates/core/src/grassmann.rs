//! Exact finite-dimensional Grassmann algebra on the 2n state generators
//! c^{q_1}..c^{q_n}, c^{p_1}..c^{p_n}, optionally extended by Grassmann-odd
//! parameters theta_1..theta_P and their starred partners.
//!
//! Monomials are bitmasks. Parameter generators occupy the low bits so that a
//! canonical monomial reads "parameters first, then state generators", which
//! is the order coefficients are written in throughout: psi_0 + psi_q c^q + ...
//! with parameter-valued psi's standing to the left of the c's.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::fmt;

/// Shape of the algebra: n degrees of freedom (2n state generators) and
/// P auxiliary odd parameter pairs (theta_i, theta*_i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Algebra {
    n_state: usize,
    n_params: usize,
}

impl Algebra {
    pub fn new(n_pairs: usize) -> Self {
        Algebra { n_state: 2 * n_pairs, n_params: 0 }
    }

    pub fn with_params(n_pairs: usize, n_params: usize) -> Self {
        Algebra { n_state: 2 * n_pairs, n_params }
    }

    /// Algebra over a bare set of state generators, not grouped into (q, p)
    /// pairs; the symplectic form is unavailable in this case.
    pub fn raw(n_state: usize, n_params: usize) -> Self {
        Algebra { n_state, n_params }
    }

    pub fn n_pairs(&self) -> usize {
        debug_assert!(self.n_state.is_multiple_of(2), "pair structure on odd generator count");
        self.n_state / 2
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Number of state generators, 2n.
    pub fn state_generators(&self) -> usize {
        self.n_state
    }

    /// Number of parameter generators, 2P (theta's and starred theta's).
    pub fn param_generators(&self) -> usize {
        2 * self.n_params
    }

    pub fn total_generators(&self) -> usize {
        self.state_generators() + self.param_generators()
    }

    /// Fiber dimension 2^(2n).
    pub fn state_dim(&self) -> usize {
        1 << self.state_generators()
    }

    /// Parameter-coefficient dimension 2^(2P).
    pub fn param_dim(&self) -> usize {
        1 << self.param_generators()
    }

    /// Bit index of state generator `a` (0-based over q_1..q_n, p_1..p_n).
    pub fn state_bit(&self, a: usize) -> usize {
        self.param_generators() + a
    }

    pub fn q_index(&self, i: usize) -> usize {
        i
    }

    pub fn p_index(&self, i: usize) -> usize {
        self.n_pairs() + i
    }

    /// Bit index of parameter theta_i.
    pub fn theta_bit(&self, i: usize) -> usize {
        i
    }

    /// Bit index of parameter theta*_i.
    pub fn theta_star_bit(&self, i: usize) -> usize {
        self.n_params + i
    }

    /// Entry omega^{ab} of the symplectic form: +1 for (q_i, p_i), -1 for
    /// (p_i, q_i), zero otherwise.
    pub fn omega_entry(&self, a: usize, b: usize) -> i64 {
        let n = self.n_pairs();
        if a < n && b == n + a {
            1
        } else if a >= n && b == a - n {
            -1
        } else {
            0
        }
    }

    pub fn omega_matrix(&self) -> Array2<f64> {
        let m = self.state_generators();
        Array2::from_shape_fn((m, m), |(a, b)| self.omega_entry(a, b) as f64)
    }

    /// Volume monomial mask: all state generators present, no parameters.
    pub fn volume_mask(&self) -> u64 {
        ((1u64 << self.state_generators()) - 1) << self.param_generators()
    }

    fn param_mask_bits(&self) -> u64 {
        (1u64 << self.param_generators()).wrapping_sub(1)
    }

    /// Split a monomial mask into (parameter part, state part). The state
    /// part is shifted down so that bit a corresponds to generator a.
    pub fn split_mask(&self, mask: u64) -> (u64, u64) {
        (mask & self.param_mask_bits(), mask >> self.param_generators())
    }

    pub fn join_mask(&self, param: u64, state: u64) -> u64 {
        param | (state << self.param_generators())
    }
}

/// Sign picked up when a generator at `bit` is moved from the far left into
/// its slot inside the canonically ordered monomial `mask`.
fn insertion_sign(mask: u64, bit: usize) -> f64 {
    let below = mask & ((1u64 << bit) - 1);
    if below.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign for concatenating canonical monomials a and b into a canonical
/// monomial: the parity of the number of generator pairs (i in a, j in b)
/// with i > j.
fn merge_sign(a: u64, b: u64) -> f64 {
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

/// Element of the Grassmann algebra: sparse map from monomial bitmask to
/// complex coefficient, absent monomials exactly zero.
#[derive(Clone, PartialEq)]
pub struct Multivector {
    algebra: Algebra,
    terms: BTreeMap<u64, C64>,
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multivector{{")?;
        for (k, (mask, z)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({z:?})*m{mask:b}")?;
        }
        write!(f, "}}")
    }
}

impl Multivector {
    pub fn zero(algebra: &Algebra) -> Self {
        Multivector { algebra: algebra.clone(), terms: BTreeMap::new() }
    }

    pub fn scalar(algebra: &Algebra, z: C64) -> Self {
        let mut mv = Self::zero(algebra);
        mv.add_term(0, z);
        mv
    }

    pub fn one(algebra: &Algebra) -> Self {
        Self::scalar(algebra, C64::new(1.0, 0.0))
    }

    /// Monomial from a raw bitmask (parameters in the low bits).
    pub fn monomial(algebra: &Algebra, mask: u64) -> Self {
        let mut mv = Self::zero(algebra);
        mv.add_term(mask, C64::new(1.0, 0.0));
        mv
    }

    /// Monomial of state generators only, given by increasing generator indices.
    pub fn state_monomial(algebra: &Algebra, generators: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        let mut last: Option<usize> = None;
        for &a in generators {
            if a >= algebra.state_generators() {
                return Err(Error::IndexOutOfRange { index: a, count: algebra.state_generators() });
            }
            if let Some(prev) = last {
                if a <= prev {
                    return Err(Error::InvalidArgument(
                        "state_monomial expects strictly increasing indices".into(),
                    ));
                }
            }
            last = Some(a);
            mask |= 1u64 << algebra.state_bit(a);
        }
        Ok(Self::monomial(algebra, mask))
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, C64)> + '_ {
        self.terms.iter().map(|(&m, &z)| (m, z))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, mask: u64) -> C64 {
        self.terms.get(&mask).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    fn add_term(&mut self, mask: u64, z: C64) {
        if z.norm_sqr() == 0.0 {
            return;
        }
        let entry = self.terms.entry(mask).or_insert(C64::new(0.0, 0.0));
        *entry += z;
        if entry.norm_sqr() == 0.0 {
            self.terms.remove(&mask);
        }
    }

    pub fn add(&self, other: &Multivector) -> Multivector {
        let mut out = self.clone();
        for (m, z) in other.terms() {
            out.add_term(m, z);
        }
        out
    }

    pub fn sub(&self, other: &Multivector) -> Multivector {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> Multivector {
        let mut out = Self::zero(&self.algebra);
        for (m, w) in self.terms() {
            out.add_term(m, w * z);
        }
        out
    }

    /// Graded product of two elements.
    pub fn mul(&self, other: &Multivector) -> Multivector {
        let mut out = Self::zero(&self.algebra);
        for (ma, za) in self.terms() {
            for (mb, zb) in other.terms() {
                if ma & mb != 0 {
                    continue;
                }
                let sign = merge_sign(ma, mb);
                out.add_term(ma | mb, za * zb * sign);
            }
        }
        out
    }

    /// Left exterior multiplication by the generator at bit index `bit`.
    pub fn wedge_bit(&self, bit: usize) -> Multivector {
        let gen_bit = 1u64 << bit;
        let mut out = Self::zero(&self.algebra);
        for (m, z) in self.terms() {
            if m & gen_bit != 0 {
                continue;
            }
            out.add_term(m | gen_bit, z * insertion_sign(m, bit));
        }
        out
    }

    /// Left derivative with respect to the generator at bit index `bit`.
    pub fn contract_bit(&self, bit: usize) -> Multivector {
        let gen_bit = 1u64 << bit;
        let mut out = Self::zero(&self.algebra);
        for (m, z) in self.terms() {
            if m & gen_bit == 0 {
                continue;
            }
            out.add_term(m & !gen_bit, z * insertion_sign(m, bit));
        }
        out
    }

    pub fn wedge_state(&self, a: usize) -> Result<Multivector> {
        self.check_state_index(a)?;
        Ok(self.wedge_bit(self.algebra.state_bit(a)))
    }

    pub fn contract_state(&self, a: usize) -> Result<Multivector> {
        self.check_state_index(a)?;
        Ok(self.contract_bit(self.algebra.state_bit(a)))
    }

    fn check_state_index(&self, a: usize) -> Result<()> {
        if a >= self.algebra.state_generators() {
            return Err(Error::IndexOutOfRange { index: a, count: self.algebra.state_generators() });
        }
        Ok(())
    }

    /// Berezin integral over the generator at bit index `bit`; identical to
    /// the left derivative, so iterated integrals follow the contraction
    /// sign convention.
    pub fn berezin_bit(&self, bit: usize) -> Multivector {
        self.contract_bit(bit)
    }

    /// Iterated Berezin integral with the measure written left to right,
    /// innermost (applied first) being the rightmost: the measure
    /// `d a d b` integrates over `b` first.
    pub fn berezin_iterated(&self, bits: &[usize]) -> Multivector {
        let mut out = self.clone();
        for &bit in bits.iter().rev() {
            out = out.berezin_bit(bit);
        }
        out
    }

    /// Antilinear star involution: complex-conjugates coefficients, swaps
    /// theta_i with theta*_i, fixes state generators, and reverses factor
    /// order. Applying it twice is the identity.
    pub fn conjugate(&self) -> Multivector {
        let p = self.algebra.n_params;
        let mut out = Self::zero(&self.algebra);
        for (m, z) in self.terms() {
            let mut seq: Vec<usize> = Vec::new();
            let mut mm = m;
            while mm != 0 {
                let bit = mm.trailing_zeros() as usize;
                seq.push(bit);
                mm &= mm - 1;
            }
            seq.reverse();
            for b in seq.iter_mut() {
                if *b < p {
                    *b += p; // theta_i -> theta*_i
                } else if *b < 2 * p {
                    *b -= p; // theta*_i -> theta_i
                }
            }
            let (sorted_mask, sign) = sort_sign(&seq);
            out.add_term(sorted_mask, z.conj() * sign);
        }
        out
    }

    /// Grassmann parity of the element, if homogeneous.
    pub fn parity(&self) -> Option<Parity> {
        let mut parity: Option<u32> = None;
        for (m, _) in self.terms() {
            let p = m.count_ones() % 2;
            match parity {
                None => parity = Some(p),
                Some(q) if q == p => {}
                _ => return None,
            }
        }
        Some(if parity.unwrap_or(0) == 0 { Parity::Even } else { Parity::Odd })
    }

    /// Exact exponential of an even nilpotent element.
    pub fn exp_nilpotent(&self) -> Result<Multivector> {
        if self.parity() != Some(Parity::Even) {
            return Err(Error::InvalidArgument("exp_nilpotent requires an even element".into()));
        }
        let bound = 1usize << self.algebra.total_generators();
        let mut sum = Multivector::one(&self.algebra);
        let mut term = Multivector::one(&self.algebra);
        for k in 1..=bound + 1 {
            term = term.mul(self).scale(C64::new(1.0 / k as f64, 0.0));
            if term.is_zero() {
                return Ok(sum);
            }
            sum = sum.add(&term);
        }
        Err(Error::NotNilpotent { bound })
    }

    /// True when no term carries parameter generators.
    pub fn is_parameter_free(&self) -> bool {
        let pm = self.algebra.param_mask_bits();
        self.terms().all(|(m, _)| m & pm == 0)
    }

    /// Dense fiber coefficients for a parameter-free element.
    pub fn to_state_vector(&self) -> Result<Array1<C64>> {
        if !self.is_parameter_free() {
            return Err(Error::ParametricValue);
        }
        let mut v = Array1::zeros(self.algebra.state_dim());
        for (m, z) in self.terms() {
            let (_, state) = self.algebra.split_mask(m);
            v[state as usize] += z;
        }
        Ok(v)
    }

    pub fn from_state_vector(algebra: &Algebra, v: &Array1<C64>) -> Result<Self> {
        if v.len() != algebra.state_dim() {
            return Err(Error::DimensionMismatch { expected: algebra.state_dim(), got: v.len() });
        }
        let mut mv = Self::zero(algebra);
        for (state, &z) in v.iter().enumerate() {
            mv.add_term(algebra.join_mask(0, state as u64), z);
        }
        Ok(mv)
    }

    /// The parameter-algebra coefficient standing in front of the state
    /// monomial `state_mask`, as a parameter-only element.
    pub fn param_coeff(&self, state_mask: u64) -> Multivector {
        let mut out = Self::zero(&self.algebra);
        for (m, z) in self.terms() {
            let (param, state) = self.algebra.split_mask(m);
            if state == state_mask {
                out.add_term(param, z);
            }
        }
        out
    }

    /// Drop terms with coefficients below `tol` in magnitude.
    pub fn chop(&self, tol: f64) -> Multivector {
        let mut out = Self::zero(&self.algebra);
        for (m, z) in self.terms() {
            if z.norm() > tol {
                out.add_term(m, z);
            }
        }
        out
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms().map(|(_, z)| z.norm()).fold(0.0, f64::max)
    }
}

fn sort_sign(seq: &[usize]) -> (u64, f64) {
    let mut v = seq.to_vec();
    let mut swaps = 0usize;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            swaps += 1;
            j -= 1;
        }
    }
    let mut mask = 0u64;
    for b in v {
        mask |= 1u64 << b;
    }
    (mask, if swaps.is_multiple_of(2) { 1.0 } else { -1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Dense matrix acting on the 2^(2n) fiber of a parameter-free algebra.
#[derive(Debug, Clone)]
pub struct GrassmannOperator {
    pub algebra: Algebra,
    pub matrix: Array2<C64>,
    pub parity: Parity,
}

impl GrassmannOperator {
    pub fn new(algebra: &Algebra, matrix: Array2<C64>, parity: Parity) -> Result<Self> {
        let d = algebra.state_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: matrix.nrows() });
        }
        Ok(GrassmannOperator { algebra: algebra.clone(), matrix, parity })
    }

    pub fn identity(algebra: &Algebra) -> Self {
        GrassmannOperator {
            algebra: algebra.clone(),
            matrix: Array2::eye(algebra.state_dim()),
            parity: Parity::Even,
        }
    }

    pub fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }

    pub fn compose(&self, other: &GrassmannOperator) -> GrassmannOperator {
        let parity = if self.parity == other.parity { Parity::Even } else { Parity::Odd };
        GrassmannOperator {
            algebra: self.algebra.clone(),
            matrix: self.matrix.dot(&other.matrix),
            parity,
        }
    }

    pub fn add(&self, other: &GrassmannOperator) -> GrassmannOperator {
        let parity = if self.parity == other.parity { self.parity } else { Parity::Even };
        GrassmannOperator {
            algebra: self.algebra.clone(),
            matrix: &self.matrix + &other.matrix,
            parity,
        }
    }

    pub fn scale(&self, z: C64) -> GrassmannOperator {
        GrassmannOperator {
            algebra: self.algebra.clone(),
            matrix: self.matrix.mapv(|w| w * z),
            parity: self.parity,
        }
    }

    pub fn anticommutator(&self, other: &GrassmannOperator) -> Array2<C64> {
        self.matrix.dot(&other.matrix) + other.matrix.dot(&self.matrix)
    }

    pub fn commutator(&self, other: &GrassmannOperator) -> Array2<C64> {
        self.matrix.dot(&other.matrix) - other.matrix.dot(&self.matrix)
    }

    /// Exact exponential of a nilpotent operator.
    pub fn exp_nilpotent(&self) -> Result<GrassmannOperator> {
        let bound = self.algebra.state_dim();
        let dim = self.matrix.nrows();
        let mut sum: Array2<C64> = Array2::eye(dim);
        let mut term: Array2<C64> = Array2::eye(dim);
        for k in 1..=bound + 1 {
            term = term.dot(&self.matrix).mapv(|z| z / C64::new(k as f64, 0.0));
            if crate::linalg::max_abs(&term) == 0.0 {
                return Ok(GrassmannOperator {
                    algebra: self.algebra.clone(),
                    matrix: sum,
                    parity: Parity::Even,
                });
            }
            sum = &sum + &term;
        }
        Err(Error::NotNilpotent { bound })
    }
}

/// Matrix of left exterior multiplication by c^a. Parity odd.
pub fn wedge_op(algebra: &Algebra, a: usize) -> Result<GrassmannOperator> {
    let m = algebra.state_generators();
    if a >= m {
        return Err(Error::IndexOutOfRange { index: a, count: m });
    }
    let d = algebra.state_dim();
    let mut mat = Array2::zeros((d, d));
    let bit = 1u64 << a; // state-only mask space
    for col in 0..d as u64 {
        if col & bit != 0 {
            continue;
        }
        mat[((col | bit) as usize, col as usize)] = C64::new(insertion_sign(col, a), 0.0);
    }
    GrassmannOperator::new(algebra, mat, Parity::Odd)
}

/// Matrix of the left derivative d/dc^a. Parity odd.
pub fn contraction_op(algebra: &Algebra, a: usize) -> Result<GrassmannOperator> {
    let m = algebra.state_generators();
    if a >= m {
        return Err(Error::IndexOutOfRange { index: a, count: m });
    }
    let d = algebra.state_dim();
    let mut mat = Array2::zeros((d, d));
    let bit = 1u64 << a;
    for col in 0..d as u64 {
        if col & bit == 0 {
            continue;
        }
        mat[((col & !bit) as usize, col as usize)] = C64::new(insertion_sign(col, a), 0.0);
    }
    GrassmannOperator::new(algebra, mat, Parity::Odd)
}

/// The commuting projectors N_a = c^a d/dc^a for a = q_1..q_n, p_1..p_n.
/// Eigenvalue 1 on monomials containing c^a, 0 otherwise, so the joint
/// eigenbasis is the monomial basis.
pub fn number_ops(algebra: &Algebra) -> Result<Vec<GrassmannOperator>> {
    let mut out = Vec::with_capacity(algebra.state_generators());
    for a in 0..algebra.state_generators() {
        let w = wedge_op(algebra, a)?;
        let c = contraction_op(algebra, a)?;
        let mut op = w.compose(&c);
        op.parity = Parity::Even;
        out.push(op);
    }
    Ok(out)
}

/// Apply `exp(F)` to `base` where `F` is a nilpotent linear map given as a
/// closure on elements; used to build the parametric coherent states.
pub fn apply_exp_nilpotent<F>(f: F, base: &Multivector) -> Result<Multivector>
where
    F: Fn(&Multivector) -> Multivector,
{
    let bound = 1usize << base.algebra().total_generators();
    let mut sum = base.clone();
    let mut term = base.clone();
    for k in 1..=bound + 1 {
        term = f(&term).scale(C64::new(1.0 / k as f64, 0.0));
        if term.is_zero() {
            return Ok(sum);
        }
        sum = sum.add(&term);
    }
    Err(Error::NotNilpotent { bound })
}
