//! Extraction and verification of the physical subspaces: the generic-
//! potential kernel of the fiber Hamiltonian, the paired-monomial family
//! that spans it, and the xi / psi variable changes that organize the
//! symplectic and gauge cases.

use crate::error::{Error, Result};
use crate::grassmann::{contraction_op, wedge_op, Algebra, GrassmannOperator, Multivector, Parity};
use crate::lie::ferm_matrix;
use crate::linalg::{self, cr, inverse, nullspace, I};
use crate::metrics::Metric;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;

const KERNEL_TOL: f64 = 1e-10;

/// Orthonormal basis (standard inner product) of the common null space of
/// the fiber Hamiltonians built from the given Hessians.
pub fn ferm_kernel(algebra: &Algebra, hessians: &[Array2<f64>]) -> Result<Array2<C64>> {
    if hessians.is_empty() {
        return Err(Error::InvalidArgument("need at least one hessian".into()));
    }
    let d = algebra.state_dim();
    let mut stacked = Array2::zeros((hessians.len() * d, d));
    for (k, h) in hessians.iter().enumerate() {
        let f = ferm_matrix(algebra, h)?;
        for r in 0..d {
            for c in 0..d {
                stacked[(k * d + r, c)] = f.matrix[(r, c)];
            }
        }
    }
    nullspace(&stacked, KERNEL_TOL)
}

/// Random symmetric Hessians with entries uniform in [-1, 1]; the
/// operational meaning of "generic potential".
pub fn random_hessians<R: Rng>(rng: &mut R, m: usize, count: usize) -> Vec<Array2<f64>> {
    (0..count)
        .map(|_| {
            let raw = Array2::from_shape_fn((m, m), |_| rng.gen_range(-1.0..1.0));
            (&raw + &raw.t()).mapv(|x| x / 2.0)
        })
        .collect()
}

/// The n+1 states {1, sum_i c^{q_i} c^{p_i}, its wedge square / 2!, ...,
/// volume form}, each annihilated by the fiber Hamiltonian for arbitrary
/// Hessians.
pub fn svh_physical_basis(algebra: &Algebra) -> Result<Vec<Multivector>> {
    let n = algebra.n_pairs();
    let mut pair_sum = Multivector::zero(algebra);
    for i in 0..n {
        let m = Multivector::state_monomial(algebra, &[algebra.q_index(i), algebra.p_index(i)])?;
        pair_sum = pair_sum.add(&m);
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut power = Multivector::one(algebra);
    out.push(power.clone());
    for k in 1..=n {
        power = power.mul(&pair_sum).scale(cr(1.0 / k as f64));
        out.push(power.clone());
    }
    Ok(out)
}

/// A linear change of the odd variables: the coordinate side is a pure
/// substitution on the c generators (rows of `generator_matrix`), with the
/// momentum side expanding over the contraction operators; the fiber matrix
/// is the exterior-power lift of the generator matrix, multiplicative on
/// wedge products. Operator-level (Bogoliubov-type) changes carry no lift.
#[derive(Debug, Clone)]
pub struct BasisChange {
    pub algebra: Algebra,
    pub coord_ops: Vec<GrassmannOperator>,
    pub momentum_ops: Vec<GrassmannOperator>,
    pub generator_matrix: Option<Array2<C64>>,
    pub fiber: Option<Array2<C64>>,
}

/// Exterior-power lift of a generator substitution: column S of the result
/// is the c-monomial expansion of the wedge product of the new generators
/// listed in the mask S.
pub fn exterior_lift(algebra: &Algebra, gen_matrix: &Array2<C64>) -> Result<Array2<C64>> {
    let m = algebra.state_generators();
    if gen_matrix.nrows() != m || gen_matrix.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: gen_matrix.nrows() });
    }
    let d = algebra.state_dim();
    let mut lift = Array2::zeros((d, d));
    for mask in 0..d as u64 {
        let mut product = Multivector::one(algebra);
        for j in (0..m).rev() {
            if mask & (1 << j) == 0 {
                continue;
            }
            let mut row = Multivector::zero(algebra);
            for a in 0..m {
                if gen_matrix[(j, a)] != cr(0.0) {
                    row = row.add(
                        &Multivector::state_monomial(algebra, &[a])?.scale(gen_matrix[(j, a)]),
                    );
                }
            }
            product = row.mul(&product);
        }
        let col = product.to_state_vector()?;
        for r in 0..d {
            lift[(r, mask as usize)] = col[r];
        }
    }
    Ok(lift)
}

fn op_from_rows(
    algebra: &Algebra,
    rows: &Array2<C64>,
    base: &dyn Fn(usize) -> Result<GrassmannOperator>,
) -> Result<Vec<GrassmannOperator>> {
    let m = algebra.state_generators();
    let d = algebra.state_dim();
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut matrix = Array2::zeros((d, d));
        for a in 0..m {
            if rows[(j, a)] != cr(0.0) {
                matrix = matrix + base(a)?.matrix.mapv(|z| z * rows[(j, a)]);
            }
        }
        out.push(GrassmannOperator::new(algebra, matrix, Parity::Odd)?);
    }
    Ok(out)
}

/// The xi variables: xi_i = (c^{q_i} + i c^{p_i})/sqrt2 and its starred
/// partner, with conjugate momenta xibar_i = (-cbar_{q_i} + i cbar_{p_i})/sqrt2
/// and xibar*_i = (cbar_{q_i} + i cbar_{p_i})/sqrt2. Coordinate rows are
/// ordered (xi_1..xi_n, xi*_1..xi*_n).
pub fn xi_basis_change(algebra: &Algebra) -> Result<BasisChange> {
    let n = algebra.n_pairs();
    let m = algebra.state_generators();
    let s = cr(1.0 / 2f64.sqrt());
    let mut gen = Array2::zeros((m, m));
    let mut mom = Array2::zeros((m, m));
    for i in 0..n {
        let (q, p) = (algebra.q_index(i), algebra.p_index(i));
        gen[(i, q)] = s;
        gen[(i, p)] = I * s;
        gen[(n + i, q)] = s;
        gen[(n + i, p)] = -I * s;
        mom[(i, q)] = -s;
        mom[(i, p)] = I * s;
        mom[(n + i, q)] = s;
        mom[(n + i, p)] = I * s;
    }
    let coord_ops = op_from_rows(algebra, &gen, &|a| wedge_op(algebra, a))?;
    let momentum_ops = op_from_rows(algebra, &mom, &|a| contraction_op(algebra, a))?;
    let fiber = exterior_lift(algebra, &gen)?;
    Ok(BasisChange {
        algebra: algebra.clone(),
        coord_ops,
        momentum_ops,
        generator_matrix: Some(gen),
        fiber: Some(fiber),
    })
}

/// The self-adjoint combinations psi^a = (c^a + i w^{ab} cbar_b)/sqrt2,
/// psibar_a = (cbar_a + i w_{ab} c^b)/sqrt2; these mix wedge and contraction
/// operators, so no multiplicative fiber lift exists.
pub fn psi_basis_change(algebra: &Algebra) -> Result<BasisChange> {
    let m = algebra.state_generators();
    let s = cr(1.0 / 2f64.sqrt());
    let mut coord_ops = Vec::with_capacity(m);
    let mut momentum_ops = Vec::with_capacity(m);
    for a in 0..m {
        let mut cm = wedge_op(algebra, a)?.matrix;
        let mut mm = contraction_op(algebra, a)?.matrix;
        for b in 0..m {
            let w = algebra.omega_entry(a, b) as f64;
            if w != 0.0 {
                cm = cm + contraction_op(algebra, b)?.matrix.mapv(|z| z * I * cr(w));
                // lower-index omega is the inverse, i.e. -omega^{ab}
                mm = mm + wedge_op(algebra, b)?.matrix.mapv(|z| z * I * cr(-w));
            }
        }
        coord_ops.push(GrassmannOperator::new(algebra, cm.mapv(|z| z * s), Parity::Odd)?);
        momentum_ops.push(GrassmannOperator::new(algebra, mm.mapv(|z| z * s), Parity::Odd)?);
    }
    Ok(BasisChange {
        algebra: algebra.clone(),
        coord_ops,
        momentum_ops,
        generator_matrix: None,
        fiber: None,
    })
}

/// Hessian of H in the holomorphic coordinates z = (q + ip)/sqrt2: returns
/// the full 2n x 2n complex matrix in (z, zbar) block order.
pub fn holomorphic_hessian(algebra: &Algebra, hessian: &Array2<f64>) -> Result<Array2<C64>> {
    let n = algebra.n_pairs();
    let m = algebra.state_generators();
    if hessian.nrows() != m {
        return Err(Error::DimensionMismatch { expected: m, got: hessian.nrows() });
    }
    let s = cr(1.0 / 2f64.sqrt());
    // J[phi, (z, zbar)]: q_i = (z_i + zbar_i)/sqrt2, p_i = -i(z_i - zbar_i)/sqrt2
    let mut j = Array2::zeros((m, m));
    for i in 0..n {
        j[(i, i)] = s;
        j[(i, n + i)] = s;
        j[(n + i, i)] = -I * s;
        j[(n + i, n + i)] = I * s;
    }
    let hc = hessian.mapv(cr);
    Ok(j.t().dot(&hc).dot(&j))
}

/// The fiber Hamiltonian written on xi-monomial components: the mixed
/// d dbar term plus the two pair-breaking terms.
pub struct XiFermOperator {
    pub mixed: Array2<C64>,
    pub pair_breaking: Array2<C64>,
}

impl XiFermOperator {
    pub fn total(&self) -> Array2<C64> {
        &self.mixed + &self.pair_breaking
    }
}

/// Build the xi-component matrices of the fiber Hamiltonian from the
/// holomorphic Hessian blocks. xi-monomials index the masks with xi_i at
/// bit i and xi*_i at bit n+i.
pub fn xi_ferm_operator(algebra: &Algebra, hessian: &Array2<f64>) -> Result<XiFermOperator> {
    let n = algebra.n_pairs();
    let hz = holomorphic_hessian(algebra, hessian)?;
    let d = algebra.state_dim();
    let mut mixed = Array2::zeros((d, d));
    let mut breaking = Array2::zeros((d, d));
    for a in 0..n {
        for k in 0..n {
            let dd = hz[(a, k)]; // d_a d_k H
            let bb = hz[(n + a, n + k)]; // dbar_a dbar_k H
            let md = hz[(k, n + a)]; // d_k dbar_a H
            if dd != cr(0.0) {
                // + xi_a (d d H) d/dxi*_k
                let t = wedge_op(algebra, a)?.matrix.dot(&contraction_op(algebra, n + k)?.matrix);
                breaking = breaking + t.mapv(|z| z * dd);
            }
            if bb != cr(0.0) {
                // - xi*_a (dbar dbar H) d/dxi_k
                let t =
                    wedge_op(algebra, n + a)?.matrix.dot(&contraction_op(algebra, k)?.matrix);
                breaking = breaking - t.mapv(|z| z * bb);
            }
            if md != cr(0.0) {
                // (d_k dbar_a H)(-xi_k d/dxi_a + xi*_a d/dxi*_k)
                let t1 = wedge_op(algebra, k)?.matrix.dot(&contraction_op(algebra, a)?.matrix);
                let t2 =
                    wedge_op(algebra, n + a)?.matrix.dot(&contraction_op(algebra, n + k)?.matrix);
                mixed = mixed + (t2 - t1).mapv(|z| z * md);
            }
        }
    }
    Ok(XiFermOperator { mixed, pair_breaking: breaking })
}

/// Residuals of the pair-breaking and mixed terms on a candidate state given
/// in xi-monomial components.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalResidual {
    pub pair_breaking: f64,
    pub mixed: f64,
}

impl PhysicalResidual {
    pub fn total(&self) -> f64 {
        self.pair_breaking.max(self.mixed)
    }
}

/// Apply the xi-form Hamiltonian terms to a candidate in xi components and
/// report the residual norms; full annihilation means both vanish.
pub fn symplectic_physical_check(
    algebra: &Algebra,
    candidate_xi: &Array1<C64>,
    hessian: &Array2<f64>,
) -> Result<PhysicalResidual> {
    let d = algebra.state_dim();
    if candidate_xi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: candidate_xi.len() });
    }
    let op = xi_ferm_operator(algebra, hessian)?;
    let norm = |v: &Array1<C64>| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(PhysicalResidual {
        pair_breaking: norm(&op.pair_breaking.dot(candidate_xi)),
        mixed: norm(&op.mixed.dot(candidate_xi)),
    })
}

/// The paired xi family: states sum_{i != j} xi_i xi*_i xi_j xi*_j etc. in
/// xi components, one per even rank 0, 4, 8, ...; every term carries the
/// same coefficient.
pub fn symplectic_physical_family(algebra: &Algebra) -> Result<Vec<Array1<C64>>> {
    let n = algebra.n_pairs();
    let d = algebra.state_dim();
    // pair mask for slot i in xi ordering: xi_i at bit i, xi*_i at bit n+i
    let pair = |i: usize| -> u64 { (1 << i) | (1 << (n + i)) };
    let mut out = Vec::new();
    for rank_pairs in 0..=n / 2 {
        let mut v = Array1::zeros(d);
        if rank_pairs == 0 {
            v[0] = cr(1.0);
            out.push(v);
            continue;
        }
        // all ordered selections of 2*rank_pairs distinct pair slots carry
        // equal coefficients; combinations suffice up to normalization
        let mut found = false;
        for combo in combinations(n, 2 * rank_pairs) {
            let mut mask = 0u64;
            for &i in &combo {
                mask |= pair(i);
            }
            // sign of the xi monomial relative to increasing mask order:
            // products of even blocks commute and each block is already
            // increasing, so coefficients are +1 times the interleaving
            // sign, which is +1 for even blocks
            v[mask as usize] = cr(1.0);
            found = true;
        }
        if found {
            out.push(v);
        }
    }
    Ok(out)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Closure-under-evolution report for a subspace: residuals of the
/// self-adjointness defect (F - adj F) psi and of the commutator
/// [F, adj F] psi over the sampled Hessians.
#[derive(Debug, Clone, Copy)]
pub struct ClosureReport {
    pub max_defect: f64,
    pub max_commutator: f64,
}

pub fn closure_check(
    algebra: &Algebra,
    metric: &Metric,
    hessians: &[Array2<f64>],
    subspace: &[Multivector],
) -> Result<ClosureReport> {
    let ginv = inverse(metric.matrix())?;
    let mut report = ClosureReport { max_defect: 0.0, max_commutator: 0.0 };
    for h in hessians {
        let f = ferm_matrix(algebra, h)?;
        let fdag = ginv.dot(&linalg::adjoint_matrix(&f.matrix)).dot(metric.matrix());
        let defect = &f.matrix - &fdag;
        let comm = f.matrix.dot(&fdag) - fdag.dot(&f.matrix);
        for psi in subspace {
            let v = psi.to_state_vector()?;
            let scale = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
            let dnorm =
                defect.dot(&v).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / scale;
            let cnorm = comm.dot(&v).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / scale;
            report.max_defect = report.max_defect.max(dnorm);
            report.max_commutator = report.max_commutator.max(cnorm);
        }
    }
    Ok(report)
}

/// Subspace export: per basis vector, monomial bitmask to [re, im].
pub fn subspace_json(basis: &Array2<C64>) -> String {
    let mut vectors = Vec::new();
    for j in 0..basis.ncols() {
        let mut entries = Vec::new();
        for i in 0..basis.nrows() {
            let z = basis[(i, j)];
            if z.norm() > 1e-14 {
                entries.push(serde_json::json!({
                    "monomial": i,
                    "value": [z.re, z.im],
                }));
            }
        }
        vectors.push(serde_json::Value::Array(entries));
    }
    serde_json::to_string_pretty(&vectors).expect("subspace serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::metrics::{adjoint, svh_metric, symplectic_metric};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_dimension_and_span_match_paired_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=3 {
            let alg = Algebra::new(n);
            let hessians = random_hessians(&mut rng, 2 * n, 3);
            let kernel = ferm_kernel(&alg, &hessians).unwrap();
            assert_eq!(kernel.ncols(), n + 1, "kernel dimension at n = {n}");
            // span matches {1, sum c^q c^p, ...} up to principal angles
            let basis = svh_physical_basis(&alg).unwrap();
            let d = alg.state_dim();
            let mut family = Array2::zeros((d, basis.len()));
            for (k, mv) in basis.iter().enumerate() {
                let v = mv.to_state_vector().unwrap();
                family.column_mut(k).assign(&v);
            }
            let family = linalg::orthonormalize(&family, 1e-12);
            let cosines = linalg::principal_angle_cosines(&kernel, &family).unwrap();
            for c in cosines.iter() {
                assert!((c - 1.0).abs() < 1e-8, "principal angle cosine {c} at n = {n}");
            }
        }
    }

    #[test]
    fn single_harmonic_hessian_still_two_dimensional_at_n1() {
        let alg = Algebra::new(1);
        let kernel = ferm_kernel(&alg, &[ndarray::array![[1.0, 0.0], [0.0, 1.0]]]).unwrap();
        assert_eq!(kernel.ncols(), 2);
    }

    #[test]
    fn paired_family_annihilated_by_random_hessians() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=2 {
            let alg = Algebra::new(n);
            let basis = svh_physical_basis(&alg).unwrap();
            assert_eq!(basis.len(), n + 1);
            for h in random_hessians(&mut rng, 2 * n, 4) {
                let f = ferm_matrix(&alg, &h).unwrap();
                for mv in &basis {
                    let v = mv.to_state_vector().unwrap();
                    let fv = f.apply_vec(&v);
                    let dev = fv.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    assert!(dev < 1e-12, "n={n}: residual {dev}");
                }
            }
        }
    }

    #[test]
    fn xi_anticommutator_table() {
        for n in 1..=2 {
            let alg = Algebra::new(n);
            let xi = xi_basis_change(&alg).unwrap();
            let d = alg.state_dim();
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { -1.0 } else { 0.0 };
                    let anti = xi.coord_ops[i].anticommutator(&xi.momentum_ops[j]);
                    let target = Array2::<C64>::eye(d).mapv(|z| z * cr(expect));
                    assert!(max_abs(&(&anti - &target)) < 1e-12, "[xi_i, xibar_j]");
                    let expect = if i == j { 1.0 } else { 0.0 };
                    let anti =
                        xi.coord_ops[n + i].anticommutator(&xi.momentum_ops[n + j]);
                    let target = Array2::<C64>::eye(d).mapv(|z| z * cr(expect));
                    assert!(max_abs(&(&anti - &target)) < 1e-12, "[xi*_i, xibar*_j]");
                    // mixed pairs vanish
                    let anti = xi.coord_ops[i].anticommutator(&xi.momentum_ops[n + j]);
                    assert!(max_abs(&anti) < 1e-12);
                    let anti = xi.coord_ops[n + i].anticommutator(&xi.momentum_ops[j]);
                    assert!(max_abs(&anti) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn xi_symplectic_adjoints() {
        let alg = Algebra::new(1);
        let symp = symplectic_metric(&alg);
        let xi = xi_basis_change(&alg).unwrap();
        // xi^+ = xibar, xi*^+ = xibar*
        for j in 0..2 {
            let adj = adjoint(&symp, &xi.coord_ops[j]).unwrap();
            assert!(max_abs(&(&adj.matrix - &xi.momentum_ops[j].matrix)) < 1e-12);
        }
    }

    #[test]
    fn xi_monomial_norm_sign_counts_xi_factors() {
        let alg = Algebra::new(2);
        let symp = symplectic_metric(&alg);
        let xi = xi_basis_change(&alg).unwrap();
        let lift = xi.fiber.as_ref().unwrap();
        let n = 2;
        let d = alg.state_dim();
        for mask in 0..d as u64 {
            let mut v = Array1::zeros(d);
            v[mask as usize] = cr(1.0);
            let c_components = lift.dot(&v);
            let norm = symp.pairing(&c_components, &c_components).re;
            let xi_count = (mask & ((1 << n) - 1)).count_ones();
            let expect = if xi_count % 2 == 0 { 1.0 } else { -1.0 };
            assert!(
                (norm - expect).abs() < 1e-12,
                "mask {mask:b}: norm {norm} vs (-1)^{xi_count}"
            );
        }
    }

    #[test]
    fn momentum_lift_consistency() {
        // xibar_j in xi components is -d/dxi_j: the lift must intertwine
        let alg = Algebra::new(2);
        let xi = xi_basis_change(&alg).unwrap();
        let lift = xi.fiber.as_ref().unwrap();
        let linv = inverse(lift).unwrap();
        for j in 0..2 {
            let lhs = linv.dot(&xi.momentum_ops[j].matrix).dot(lift);
            let rhs = contraction_op(&alg, j).unwrap().matrix.mapv(|z| z * cr(-1.0));
            assert!(max_abs(&(&lhs - &rhs)) < 1e-12);
            let lhs = linv.dot(&xi.momentum_ops[2 + j].matrix).dot(lift);
            let rhs = contraction_op(&alg, 2 + j).unwrap().matrix;
            assert!(max_abs(&(&lhs - &rhs)) < 1e-12);
        }
    }

    #[test]
    fn xi_conjugated_ferm_matrix_matches_xi_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=2 {
            let alg = Algebra::new(n);
            let xi = xi_basis_change(&alg).unwrap();
            let lift = xi.fiber.as_ref().unwrap();
            let linv = inverse(lift).unwrap();
            for h in random_hessians(&mut rng, 2 * n, 3) {
                let f = ferm_matrix(&alg, &h).unwrap();
                let conjugated = linv.dot(&f.matrix).dot(lift);
                let xi_op = xi_ferm_operator(&alg, &h).unwrap().total();
                assert!(
                    max_abs(&(&conjugated - &xi_op)) < 1e-12,
                    "xi conjugation equivalence at n = {n}"
                );
            }
        }
    }

    #[test]
    fn paired_xi_family_is_annihilated_with_positive_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let alg = Algebra::new(2);
        let family = symplectic_physical_family(&alg).unwrap();
        assert_eq!(family.len(), 2); // rank 0 and the paired 4-form
        for h in random_hessians(&mut rng, 4, 5) {
            for v in &family {
                let r = symplectic_physical_check(&alg, v, &h).unwrap();
                assert!(r.pair_breaking < 1e-12, "pair-breaking residual {}", r.pair_breaking);
                assert!(r.mixed < 1e-12, "mixed residual {}", r.mixed);
            }
            // the equal-coefficient condition is essential: weighting the
            // paired two-form terms (1, 2) leaves a residual generically
            let d = alg.state_dim();
            let mut broken = Array1::zeros(d);
            broken[0b0101] = cr(1.0); // xi_1 xi*_1
            broken[0b1010] = cr(2.0); // xi_2 xi*_2
            let r = symplectic_physical_check(&alg, &broken, &h).unwrap();
            assert!(r.total() > 0.1, "generic hessian must see the broken pairing");
            // with equal coefficients the same two-form is annihilated
            let mut paired = Array1::zeros(d);
            paired[0b0101] = cr(1.0);
            paired[0b1010] = cr(1.0);
            let r = symplectic_physical_check(&alg, &paired, &h).unwrap();
            assert!(r.total() < 1e-12);
        }
        // positive-definite Gram matrix under the symplectic product
        let symp = symplectic_metric(&alg);
        let xi = xi_basis_change(&alg).unwrap();
        let lift = xi.fiber.as_ref().unwrap();
        let k = family.len();
        let mut gram = Array2::zeros((k, k));
        for i in 0..k {
            for j in 0..k {
                gram[(i, j)] = symp.pairing(&lift.dot(&family[i]), &lift.dot(&family[j]));
            }
        }
        let (vals, _) = linalg::eigh_hermitian(&gram).unwrap();
        assert!(vals.iter().all(|&v| v > 0.0), "gram eigenvalues {vals:?}");
    }

    #[test]
    fn four_form_maps_to_minus_pq_pairs() {
        // A sum_{i,j} xi_i xi*_i xi_j xi*_j pushed through the inverse xi
        // transform is -A sum_{i,j} c^{p_i} c^{q_i} c^{p_j} c^{q_j}
        let alg = Algebra::new(2);
        let xi = xi_basis_change(&alg).unwrap();
        let lift = xi.fiber.as_ref().unwrap();
        let a = crate::linalg::c(0.7, -0.4);
        // LHS in xi components: the double sum is 2A xi_1 xi*_1 xi_2 xi*_2,
        // and that product is -1 times the canonically ordered monomial
        // xi_1 xi_2 xi*_1 xi*_2 (mask 0b1111)
        let d = alg.state_dim();
        let mut lhs_xi = Array1::zeros(d);
        lhs_xi[0b1111] = -a * cr(2.0);
        let lhs_c = lift.dot(&lhs_xi);
        // RHS in c components: -2A c^{p_1} c^{q_1} c^{p_2} c^{q_2}; each
        // p,q swap plus the p_1/q_2 interchange give three sign flips back
        // to the canonical volume monomial
        let mut rhs_c = Array1::zeros(d);
        rhs_c[15] = -a * cr(2.0) * cr(-1.0);
        let dev = (&lhs_c - &rhs_c).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "four-form image deviation {dev}");
    }

    #[test]
    fn psi_variables_self_adjoint_and_canonical() {
        for n in 1..=2 {
            let alg = Algebra::new(n);
            let symp = symplectic_metric(&alg);
            let psi = psi_basis_change(&alg).unwrap();
            let d = alg.state_dim();
            for a in 0..2 * n {
                let adj = adjoint(&symp, &psi.coord_ops[a]).unwrap();
                assert!(max_abs(&(&adj.matrix - &psi.coord_ops[a].matrix)) < 1e-12);
                let adj = adjoint(&symp, &psi.momentum_ops[a]).unwrap();
                assert!(max_abs(&(&adj.matrix - &psi.momentum_ops[a].matrix)) < 1e-12);
                for b in 0..2 * n {
                    let anti = psi.coord_ops[a].anticommutator(&psi.momentum_ops[b]);
                    let expect = if a == b { 1.0 } else { 0.0 };
                    let target = Array2::<C64>::eye(d).mapv(|z| z * cr(expect));
                    assert!(max_abs(&(&anti - &target)) < 1e-12);
                    assert!(max_abs(&psi.coord_ops[a].anticommutator(&psi.coord_ops[b])) < 1e-12);
                    assert!(
                        max_abs(&psi.momentum_ops[a].anticommutator(&psi.momentum_ops[b]))
                            < 1e-12
                    );
                }
            }
            // inverse transformation: c^a = (psi^a - i w^{ab} psibar_b)/sqrt2
            let s = cr(1.0 / 2f64.sqrt());
            for a in 0..2 * n {
                let mut rebuilt = psi.coord_ops[a].matrix.clone();
                for b in 0..2 * n {
                    let w = alg.omega_entry(a, b) as f64;
                    if w != 0.0 {
                        rebuilt =
                            rebuilt + psi.momentum_ops[b].matrix.mapv(|z| z * -I * cr(w));
                    }
                }
                let rebuilt = rebuilt.mapv(|z| z * s);
                let expect = wedge_op(&alg, a).unwrap().matrix;
                assert!(max_abs(&(&rebuilt - &expect)) < 1e-12, "inverse map at a = {a}");
            }
        }
    }

    #[test]
    fn paired_xi_family_annihilated_at_n3() {
        // ranks 0 and 4 survive at n = 3 (three xi factors would flip the
        // norm sign, so the 6-form is excluded); the 4-form has three
        // equal-coefficient monomials
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let alg = Algebra::new(3);
        let family = symplectic_physical_family(&alg).unwrap();
        assert_eq!(family.len(), 2);
        let nonzero = (0..family[1].len()).filter(|&i| family[1][i] != cr(0.0)).count();
        assert_eq!(nonzero, 3);
        for h in random_hessians(&mut rng, 6, 3) {
            for v in &family {
                let r = symplectic_physical_check(&alg, v, &h).unwrap();
                assert!(r.total() < 1e-12, "n=3 residual {:?}", r);
            }
        }
    }

    #[test]
    fn xi_variables_rebuild_from_psi_chain() {
        // xi_i = (psi^{q_i} + i psi^{p_i} - i psibar_{p_i} - psibar_{q_i})/2,
        // the route that carries the construction over to the gauge product
        let alg = Algebra::new(2);
        let n = 2;
        let psi = psi_basis_change(&alg).unwrap();
        let xi = xi_basis_change(&alg).unwrap();
        let half = cr(0.5);
        for i in 0..n {
            let (q, p) = (alg.q_index(i), alg.p_index(i));
            let rebuilt = (&psi.coord_ops[q].matrix + &psi.coord_ops[p].matrix.mapv(|z| z * I)
                - &psi.momentum_ops[p].matrix.mapv(|z| z * I)
                - &psi.momentum_ops[q].matrix)
                .mapv(|z| z * half);
            assert!(max_abs(&(&rebuilt - &xi.coord_ops[i].matrix)) < 1e-12, "xi_{i} via psi");
        }
    }

    #[test]
    fn closure_holds_on_physical_basis_and_fails_on_odd_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let alg = Algebra::new(2);
        let svh = svh_metric(&alg);
        let hessians = random_hessians(&mut rng, 4, 3);
        let basis = svh_physical_basis(&alg).unwrap();
        let report = closure_check(&alg, &svh, &hessians, &basis).unwrap();
        assert!(report.max_defect < 1e-10);
        assert!(report.max_commutator < 1e-10);
        // an odd monomial is not physical
        let odd = vec![Multivector::state_monomial(&alg, &[0]).unwrap()];
        let report = closure_check(&alg, &svh, &hessians, &odd).unwrap();
        assert!(report.max_defect > 0.1);
        // vacuous pass on the zero subspace
        let report = closure_check(&alg, &svh, &hessians, &[]).unwrap();
        assert_eq!(report.max_defect, 0.0);
    }
}
