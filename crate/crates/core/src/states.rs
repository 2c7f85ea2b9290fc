//! Parametric basis states: the |0+/0-> ladder, coherent states built from
//! exponentials of parameter-weighted wedge/contraction operators, and the
//! scalar product of parameter-valued states under a fiber metric.
//!
//! These are exact elements of the enlarged Grassmann algebra, so the
//! appendix scalar-product tables and resolutions of identity can be checked
//! as algebra identities rather than formally.

use crate::error::{Error, Result};
use crate::grassmann::{apply_exp_nilpotent, Algebra, Multivector};
use crate::linalg::cr;
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Slot signs of a basis state: Minus is the slot annihilated by c^a
/// (generator present), Plus the one annihilated by cbar_a.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Minus,
    Plus,
}

/// The state |s_1, s_2, ..., s_m> built from the all-minus state (the volume
/// monomial) by applying (-1)^(i-1) cbar_i for each Plus slot, with the
/// operators ordered by ascending slot index.
pub fn slot_state(algebra: &Algebra, slots: &[Slot]) -> Result<Multivector> {
    let m = algebra.state_generators();
    if slots.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: slots.len() });
    }
    let mut state = Multivector::monomial(algebra, algebra.volume_mask());
    let mut sign = 1.0;
    // apply the highest index first so the ascending-ordered operator word
    // acts with its rightmost factor innermost
    for (i, slot) in slots.iter().enumerate().rev() {
        if *slot == Slot::Plus {
            state = state.contract_bit(algebra.state_bit(i));
            if i % 2 == 1 {
                sign = -sign;
            }
        }
    }
    Ok(state.scale(cr(sign)))
}

/// One slot of a coherent state: the sign pattern plus the Grassmann-odd
/// eigenvalue label (a parameter-algebra element).
#[derive(Debug, Clone)]
pub struct CoherentSlot {
    pub slot: Slot,
    pub label: Multivector,
}

/// exp(-sum_i label_i O_i) |base(slots)> with O_i = cbar_i on Minus slots
/// (giving c-eigenstates) and O_i = c^i on Plus slots (cbar-eigenstates).
pub fn coherent_state(algebra: &Algebra, slots: &[CoherentSlot]) -> Result<Multivector> {
    let m = algebra.state_generators();
    if slots.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: slots.len() });
    }
    let signs: Vec<Slot> = slots.iter().map(|s| s.slot).collect();
    let base = slot_state(algebra, &signs)?;
    let generator = |x: &Multivector| -> Multivector {
        let mut out = Multivector::zero(algebra);
        for (i, s) in slots.iter().enumerate() {
            let acted = match s.slot {
                Slot::Minus => x.contract_bit(algebra.state_bit(i)),
                Slot::Plus => x.wedge_bit(algebra.state_bit(i)),
            };
            out = out.add(&s.label.mul(&acted).scale(cr(-1.0)));
        }
        out
    };
    apply_exp_nilpotent(generator, &base)
}

/// Monomial of a single parameter theta_i.
pub fn theta(algebra: &Algebra, i: usize) -> Multivector {
    Multivector::monomial(algebra, 1 << algebra.theta_bit(i))
}

/// Monomial of a single starred parameter theta*_i.
pub fn theta_star(algebra: &Algebra, i: usize) -> Multivector {
    Multivector::monomial(algebra, 1 << algebra.theta_star_bit(i))
}

/// Scalar product of two parameter-valued states under the fiber metric g:
/// antilinear in the first argument with order-reversing conjugation of the
/// parameter coefficients, and the grading sign picked up by parameters
/// crossing the bra's state monomial.
pub fn scalar_product(g: &Array2<C64>, u: &Multivector, v: &Multivector) -> Result<Multivector> {
    let algebra = u.algebra().clone();
    if v.algebra() != &algebra {
        return Err(Error::InvalidArgument("scalar_product needs matching algebras".into()));
    }
    let d = algebra.state_dim();
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: g.nrows() });
    }
    let mut out = Multivector::zero(&algebra);
    for (mu, zu) in u.terms() {
        let (pu, au) = algebra.split_mask(mu);
        let state_deg = au.count_ones() as usize;
        let revconj = Multivector::monomial(&algebra, pu).conjugate();
        for (mv, zv) in v.terms() {
            let (pv, bv) = algebra.split_mask(mv);
            let entry = g[(au as usize, bv as usize)];
            if entry == cr(0.0) {
                continue;
            }
            let param_deg = (pu.count_ones() + pv.count_ones()) as usize;
            let sign = if (state_deg * param_deg).is_multiple_of(2) { 1.0 } else { -1.0 };
            let term = revconj
                .mul(&Multivector::monomial(&algebra, pv))
                .scale(zu.conj() * zv * entry * cr(sign));
            out = out.add(&term);
        }
    }
    Ok(out)
}

/// One |ket><bra| factor of a resolution of identity: the ket state and the
/// ket whose adjoint functional forms the bra.
#[derive(Debug, Clone)]
pub struct OuterProduct {
    pub ket: Multivector,
    pub bra_ket: Multivector,
}

/// Evaluate `prefactor * integral(measure) |ket><bra|` as a dense fiber
/// matrix: the measure lists parameter indices as written, integrated
/// innermost-last (rightmost first). Errors if parameters survive.
pub fn resolution_matrix(
    algebra: &Algebra,
    g: &Array2<C64>,
    outer: &OuterProduct,
    measure_thetas: &[usize],
    prefactor: C64,
) -> Result<Array2<C64>> {
    let d = algebra.state_dim();
    let bits: Vec<usize> = measure_thetas.iter().map(|&i| algebra.theta_bit(i)).collect();
    let mut out = Array2::zeros((d, d));
    for b in 0..d as u64 {
        let basis = Multivector::monomial(algebra, algebra.join_mask(0, b));
        let overlap = scalar_product(g, &outer.bra_ket, &basis)?;
        let column = outer.ket.mul(&overlap);
        let integrated = column.berezin_iterated(&bits).scale(prefactor);
        if !integrated.is_parameter_free() {
            return Err(Error::ParametricValue);
        }
        let col = integrated.to_state_vector()?;
        for r in 0..d {
            out[(r, b as usize)] = col[r];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn slot_states_single_pair() {
        // two slots (c^q, c^p): |-,-> = c^q c^p, |+,-> = c^p, |-,+> = c^q,
        // |+,+> = 1
        let alg = Algebra::new(1);
        let mm = slot_state(&alg, &[Slot::Minus, Slot::Minus]).unwrap();
        assert_eq!(mm, Multivector::monomial(&alg, alg.volume_mask()));
        let pm = slot_state(&alg, &[Slot::Plus, Slot::Minus]).unwrap();
        assert_eq!(pm, Multivector::state_monomial(&alg, &[1]).unwrap());
        let mp = slot_state(&alg, &[Slot::Minus, Slot::Plus]).unwrap();
        assert_eq!(mp, Multivector::state_monomial(&alg, &[0]).unwrap());
        let pp = slot_state(&alg, &[Slot::Plus, Slot::Plus]).unwrap();
        assert_eq!(pp, Multivector::one(&alg));
    }

    #[test]
    fn coherent_state_expands_like_the_exponential() {
        // exp(-alpha cbar_q)|0-> over a single pair restricted to the q slot:
        // |alpha-,0-> = c^q c^p - alpha (-(c^p)) ... checked against a direct
        // expansion
        let alg = Algebra::with_params(1, 1);
        let alpha = theta(&alg, 0);
        let state = coherent_state(
            &alg,
            &[
                CoherentSlot { slot: Slot::Minus, label: alpha.clone() },
                CoherentSlot { slot: Slot::Minus, label: Multivector::zero(&alg) },
            ],
        )
        .unwrap();
        let vol = Multivector::monomial(&alg, alg.volume_mask());
        let expect = vol.sub(&alpha.mul(&vol.contract_bit(alg.state_bit(0))));
        assert_eq!(state, expect);
    }

    #[test]
    fn svh_coherent_overlap_is_exponential() {
        // single Grassmann variable: (|alpha->, |beta->) = 1 + alpha* beta
        let alg = Algebra::raw(1, 2);
        let alpha = theta(&alg, 0);
        let beta = theta(&alg, 1);
        let build = |label: &Multivector| {
            coherent_state(&alg, &[CoherentSlot { slot: Slot::Minus, label: label.clone() }])
                .unwrap()
        };
        let u = build(&alpha);
        let v = build(&beta);
        let g = Array2::eye(2);
        let overlap = scalar_product(&g, &u, &v).unwrap();
        let expect = Multivector::one(&alg).add(&alpha.conjugate().mul(&beta));
        assert!(overlap.sub(&expect).max_coeff() < 1e-14);
    }

    #[test]
    fn exp_builds_two_term_state() {
        // exp(-alpha cbar)|0-> = |0-> - alpha |0+> on one variable
        let alg = Algebra::raw(1, 1);
        let alpha = theta(&alg, 0);
        let st = coherent_state(&alg, &[CoherentSlot { slot: Slot::Minus, label: alpha.clone() }])
            .unwrap();
        let minus = Multivector::monomial(&alg, alg.volume_mask());
        let plus = Multivector::one(&alg);
        let expect = minus.sub(&alpha.mul(&plus));
        assert_eq!(st, expect);
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let alg = Algebra::new(1);
        assert!(slot_state(&alg, &[Slot::Plus]).is_err());
        let g = Array2::<C64>::eye(2);
        let u = Multivector::one(&alg);
        assert!(scalar_product(&g, &u, &u).is_err());
    }

    #[test]
    fn scalar_product_handles_mixed_parameter_coefficients() {
        // the twisted SvH overlap (|alpha+>, |beta->) = alpha* - beta on one
        // variable, the case fixing the grading sign convention
        let alg = Algebra::raw(1, 2);
        let alpha = theta(&alg, 0);
        let beta = theta(&alg, 1);
        let plus = coherent_state(&alg, &[CoherentSlot { slot: Slot::Plus, label: alpha.clone() }])
            .unwrap();
        let minus =
            coherent_state(&alg, &[CoherentSlot { slot: Slot::Minus, label: beta.clone() }])
                .unwrap();
        let g = Array2::eye(2);
        let overlap = scalar_product(&g, &plus, &minus).unwrap();
        let expect = alpha.conjugate().sub(&beta);
        assert!(overlap.sub(&expect).max_coeff() < 1e-14);
        // and the parameter-free diagonal (1,1) entry: (|0->, |0->) = 1
        let m0 = slot_state(&alg, &[Slot::Minus]).unwrap();
        let s = scalar_product(&g, &m0, &m0).unwrap();
        assert_eq!(s.coeff(0), c(1.0, 0.0));
    }
}
