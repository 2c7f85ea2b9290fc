//! The scalar-product tables and resolutions of identity, checked as exact
//! parametric-algebra and matrix identities. This suite is the library core
//! of the `identities` CLI subcommand and of the acceptance tests.

use crate::error::Result;
use crate::grassmann::{Algebra, Multivector};
use crate::linalg::{c, cr, max_abs, I};
use crate::metrics::{gauge_metric, svh_metric, symplectic_metric, Metric};
use crate::states::{
    coherent_state, resolution_matrix, scalar_product, slot_state, theta, theta_star,
    CoherentSlot, OuterProduct, Slot,
};
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Outcome of one identity check.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

const TOL: f64 = 1e-12;

/// Metric replacement for negative controls: substitutes the fiber matrix of
/// the named product in the single-pair table checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductName {
    Svh,
    Gauge,
    Symplectic,
}

struct Suite {
    checks: Vec<IdentityCheck>,
    override_metric: Option<(ProductName, Array2<C64>)>,
}

impl Suite {
    fn record_elements(&mut self, name: &str, lhs: &Multivector, rhs: &Multivector) {
        let deviation = lhs.sub(rhs).max_coeff();
        self.checks.push(IdentityCheck { name: name.into(), deviation, tolerance: TOL });
    }

    fn record_matrix(&mut self, name: &str, lhs: &Array2<C64>, rhs: &Array2<C64>) {
        let deviation = max_abs(&(lhs - rhs));
        self.checks.push(IdentityCheck { name: name.into(), deviation, tolerance: TOL });
    }

    fn metric_matrix(&self, which: ProductName, fallback: &Metric) -> Array2<C64> {
        match &self.override_metric {
            Some((name, m)) if *name == which => m.clone(),
            _ => fallback.matrix().clone(),
        }
    }
}

/// Run the identity suite for n degrees of freedom (n = 1 or 2). An optional
/// metric override replaces the named product's fiber matrix wherever the
/// pair tables use it, for negative controls.
pub fn run_identity_suite(
    n: usize,
    override_metric: Option<(ProductName, Array2<C64>)>,
) -> Result<Vec<IdentityCheck>> {
    let mut suite = Suite { checks: Vec::new(), override_metric };
    single_variable_svh(&mut suite)?;
    single_variable_gauge(&mut suite)?;
    pair_tables_svh(&mut suite)?;
    pair_tables_gauge(&mut suite)?;
    pair_tables_symplectic(&mut suite)?;
    pair_resolutions(&mut suite)?;
    entry_order_checks(&mut suite)?;
    if n >= 2 {
        two_pair_tables_svh(&mut suite)?;
        two_pair_resolutions(&mut suite)?;
    }
    Ok(suite.checks)
}

fn exp_el(x: &Multivector) -> Multivector {
    x.exp_nilpotent().expect("nilpotent exponent")
}

fn minus(alg: &Algebra, label: &Multivector) -> CoherentSlot {
    let _ = alg;
    CoherentSlot { slot: Slot::Minus, label: label.clone() }
}

fn plus(alg: &Algebra, label: &Multivector) -> CoherentSlot {
    let _ = alg;
    CoherentSlot { slot: Slot::Plus, label: label.clone() }
}

/// Single-variable SvH overlaps and twisted resolutions.
fn single_variable_svh(suite: &mut Suite) -> Result<()> {
    let alg = Algebra::raw(1, 2);
    let g = Array2::<C64>::eye(2);
    let alpha = theta(&alg, 0);
    let beta = theta(&alg, 1);
    let am = coherent_state(&alg, &[minus(&alg, &alpha)])?;
    let bm = coherent_state(&alg, &[minus(&alg, &beta)])?;
    let ap = coherent_state(&alg, &[plus(&alg, &alpha)])?;
    let bp = coherent_state(&alg, &[plus(&alg, &beta)])?;
    let astar_b = alpha.conjugate().mul(&beta);
    let delta = alpha.conjugate().sub(&beta);

    suite.record_elements(
        "svh 1-var (|a->,|b->) = exp(a* b)",
        &scalar_product(&g, &am, &bm)?,
        &exp_el(&astar_b),
    );
    suite.record_elements(
        "svh 1-var (|a+>,|b+>) = exp(a* b)",
        &scalar_product(&g, &ap, &bp)?,
        &exp_el(&astar_b),
    );
    suite.record_elements(
        "svh 1-var (|a+>,|b->) = +delta(a* - b)",
        &scalar_product(&g, &ap, &bm)?,
        &delta,
    );
    suite.record_elements(
        "svh 1-var (|a->,|b+>) = -delta(a* - b)",
        &scalar_product(&g, &am, &bp)?,
        &delta.scale(cr(-1.0)),
    );

    // twisted resolutions: -integral d a |a+/-><-/+ a*| = 1
    let alg1 = Algebra::raw(1, 1);
    let a1 = theta(&alg1, 0);
    let a1s = theta_star(&alg1, 0);
    let eye = Array2::<C64>::eye(2);
    let g1 = Array2::<C64>::eye(2);
    let plus_ket = coherent_state(&alg1, &[plus(&alg1, &a1)])?;
    let minus_star = coherent_state(&alg1, &[minus(&alg1, &a1s)])?;
    let m = resolution_matrix(
        &alg1,
        &g1,
        &OuterProduct { ket: plus_ket, bra_ket: minus_star },
        &[0],
        cr(-1.0),
    )?;
    suite.record_matrix("svh 1-var resolution -int da |a+><-a*|", &m, &eye);
    let minus_ket = coherent_state(&alg1, &[minus(&alg1, &a1)])?;
    let plus_star = coherent_state(&alg1, &[plus(&alg1, &a1s)])?;
    let m = resolution_matrix(
        &alg1,
        &g1,
        &OuterProduct { ket: minus_ket, bra_ket: plus_star },
        &[0],
        cr(-1.0),
    )?;
    suite.record_matrix("svh 1-var resolution -int da |a-><+a*|", &m, &eye);
    Ok(())
}

/// Single-variable gauge product: base table, overlaps, resolutions and the
/// negative-norm example.
fn single_variable_gauge(suite: &mut Suite) -> Result<()> {
    let g1 = ndarray::array![[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]];
    let alg = Algebra::raw(1, 2);
    let gp = g1.clone();
    let zero_minus = slot_state(&alg, &[Slot::Minus])?;
    let zero_plus = slot_state(&alg, &[Slot::Plus])?;
    // base table: zero norms, unit cross products
    let mut dev: f64 = 0.0;
    for (u, v, expect) in [
        (&zero_plus, &zero_plus, cr(0.0)),
        (&zero_minus, &zero_minus, cr(0.0)),
        (&zero_plus, &zero_minus, cr(1.0)),
        (&zero_minus, &zero_plus, cr(1.0)),
    ] {
        let s = scalar_product(&gp, u, v)?;
        dev = dev.max(s.sub(&Multivector::scalar(&alg, expect)).max_coeff());
    }
    suite.checks.push(IdentityCheck {
        name: "gauge 1-var base table (zero norms, unit cross)".into(),
        deviation: dev,
        tolerance: TOL,
    });

    // The delta overlaps below carry the graded parameter-pulling
    // convention, (x, theta y) = (-1)^{|x|} theta (x, y), which is the one
    // the multi-variable tables and every resolution of identity require;
    // the single-variable signs come out opposite to the non-graded reading.
    let alpha = theta(&alg, 0);
    let beta = theta(&alg, 1);
    let am = coherent_state(&alg, &[minus(&alg, &alpha)])?;
    let bm = coherent_state(&alg, &[minus(&alg, &beta)])?;
    let ap = coherent_state(&alg, &[plus(&alg, &alpha)])?;
    let bp = coherent_state(&alg, &[plus(&alg, &beta)])?;
    let delta = alpha.conjugate().sub(&beta);
    let expo = exp_el(&alpha.conjugate().mul(&beta));
    suite.record_elements(
        "gauge 1-var (|a->,|b->) = -delta(a* - b) [graded convention]",
        &scalar_product(&gp, &am, &bm)?,
        &delta.scale(cr(-1.0)),
    );
    suite.record_elements(
        "gauge 1-var (|a+>,|b+>) = +delta(a* - b) [graded convention]",
        &scalar_product(&gp, &ap, &bp)?,
        &delta,
    );
    suite.record_elements(
        "gauge 1-var (|a+>,|b->) = exp(a* b)",
        &scalar_product(&gp, &ap, &bm)?,
        &expo,
    );
    suite.record_elements(
        "gauge 1-var (|a->,|b+>) = exp(a* b)",
        &scalar_product(&gp, &am, &bp)?,
        &expo,
    );

    // On a single variable the gauge outer products resolve the parity
    // operator rather than the identity: -int da |a-><-a*| = diag(1, -1)
    // and -int da |a+><+a*| = -diag(1, -1). Parity cancels pairwise, which
    // is why the two-variable resolutions reconstruct the plain identity.
    let alg1 = Algebra::raw(1, 1);
    let a1 = theta(&alg1, 0);
    let a1s = theta_star(&alg1, 0);
    let parity = ndarray::array![[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]];
    for (sign, name, expected) in [
        (Slot::Plus, "+", parity.mapv(|z| -z)),
        (Slot::Minus, "-", parity.clone()),
    ] {
        let ket = coherent_state(&alg1, &[CoherentSlot { slot: sign, label: a1.clone() }])?;
        let bra_ket = coherent_state(&alg1, &[CoherentSlot { slot: sign, label: a1s.clone() }])?;
        let m = resolution_matrix(
            &alg1,
            &g1,
            &OuterProduct { ket, bra_ket },
            &[0],
            cr(-1.0),
        )?;
        suite.record_matrix(
            &format!("gauge 1-var -int da |a{name}><{name}a*| resolves parity"),
            &m,
            &expected,
        );
    }

    // psi with wavefunction psi(a) = psi1 - psi1 a, i.e. components
    // (psi1, -psi1) on (|0+>, |0->), has squared norm -2|psi1|^2
    let psi1 = c(0.6, -1.1);
    let psi = slot_state(&alg, &[Slot::Plus])?
        .scale(psi1)
        .sub(&slot_state(&alg, &[Slot::Minus])?.scale(psi1));
    let norm = scalar_product(&gp, &psi, &psi)?;
    let expect = Multivector::scalar(&alg, cr(-2.0 * psi1.norm_sqr()));
    suite.record_elements("gauge 1-var ||psi1 - psi1 a||^2 = -2|psi1|^2", &norm, &expect);
    Ok(())
}

/// SvH tables on one (q, p) pair.
fn pair_tables_svh(suite: &mut Suite) -> Result<()> {
    let alg = Algebra::with_params(1, 4);
    let svh = svh_metric(&alg);
    let g = suite.metric_matrix(ProductName::Svh, &svh);
    let (aq, ap, bq, bp) =
        (theta(&alg, 0), theta(&alg, 1), theta(&alg, 2), theta(&alg, 3));

    // base states |0+,0->, |0-,0+> etc. are orthonormal
    let mut dev: f64 = 0.0;
    for i in 0..4u64 {
        for j in 0..4u64 {
            let slots = |k: u64| {
                [
                    if k & 1 == 0 { Slot::Plus } else { Slot::Minus },
                    if k & 2 == 0 { Slot::Plus } else { Slot::Minus },
                ]
            };
            let u = slot_state(&alg, &slots(i))?;
            let v = slot_state(&alg, &slots(j))?;
            let s = scalar_product(&g, &u, &v)?;
            let expect = if i == j { cr(1.0) } else { cr(0.0) };
            dev = dev.max(s.sub(&Multivector::scalar(&alg, expect)).max_coeff());
        }
    }
    suite.checks.push(IdentityCheck {
        name: "svh pair base states orthonormal".into(),
        deviation: dev,
        tolerance: TOL,
    });

    // (|aq-,ap->, |bq-,bp->) = exp(aq* bq + ap* bp)
    let u = coherent_state(&alg, &[minus(&alg, &aq), minus(&alg, &ap)])?;
    let v = coherent_state(&alg, &[minus(&alg, &bq), minus(&alg, &bp)])?;
    let expo = exp_el(&aq.conjugate().mul(&bq).add(&ap.conjugate().mul(&bp)));
    suite.record_elements(
        "svh pair (|aq-,ap->,|bq-,bp->) = exp(aq* bq + ap* bp)",
        &scalar_product(&g, &u, &v)?,
        &expo,
    );

    // (|aq*+,ap*+>, |bq-,bp->) = delta(aq - bq) delta(ap - bp)
    let us = coherent_state(
        &alg,
        &[plus(&alg, &aq.conjugate()), plus(&alg, &ap.conjugate())],
    )?;
    let deltas = aq.sub(&bq).mul(&ap.sub(&bp));
    suite.record_elements(
        "svh pair (|aq*+,ap*+>,|bq-,bp->) = delta(aq-bq) delta(ap-bp)",
        &scalar_product(&g, &us, &v)?,
        &deltas,
    );

    // (|aq*-,ap*->, |bq+,bp+>) = -delta(aq - bq) delta(ap - bp)
    let um = coherent_state(
        &alg,
        &[minus(&alg, &aq.conjugate()), minus(&alg, &ap.conjugate())],
    )?;
    let vp = coherent_state(&alg, &[plus(&alg, &bq), plus(&alg, &bp)])?;
    suite.record_elements(
        "svh pair (|aq*-,ap*->,|bq+,bp+>) = -delta(aq-bq) delta(ap-bp)",
        &scalar_product(&g, &um, &vp)?,
        &deltas.scale(cr(-1.0)),
    );
    Ok(())
}

/// Gauge tables on one (q, p) pair.
fn pair_tables_gauge(suite: &mut Suite) -> Result<()> {
    let alg = Algebra::with_params(1, 4);
    let gauge = gauge_metric(&alg)?;
    let g = suite.metric_matrix(ProductName::Gauge, &gauge);

    // base table: the only non-zero products and their values
    let mm = slot_state(&alg, &[Slot::Minus, Slot::Minus])?;
    let pp = slot_state(&alg, &[Slot::Plus, Slot::Plus])?;
    let mp = slot_state(&alg, &[Slot::Minus, Slot::Plus])?;
    let pm = slot_state(&alg, &[Slot::Plus, Slot::Minus])?;
    let states = [&mm, &mp, &pm, &pp];
    let mut dev: f64 = 0.0;
    for (iu, u) in states.iter().enumerate() {
        for (iv, v) in states.iter().enumerate() {
            let s = scalar_product(&g, u, v)?;
            let expect = match (iu, iv) {
                (0, 3) => I,
                (3, 0) => -I,
                (1, 2) => -I,
                (2, 1) => I,
                _ => cr(0.0),
            };
            dev = dev.max(s.sub(&Multivector::scalar(&alg, expect)).max_coeff());
        }
    }
    suite.checks.push(IdentityCheck {
        name: "gauge pair base table (four +-i entries, rest zero)".into(),
        deviation: dev,
        tolerance: TOL,
    });

    let (aq, ap, x, y) = (theta(&alg, 0), theta(&alg, 1), theta(&alg, 2), theta(&alg, 3));
    let amm = coherent_state(&alg, &[minus(&alg, &aq), minus(&alg, &ap)])?;
    let e = |t: &Multivector| exp_el(t);

    // the eight coherent overlaps of the gauge pair table
    let bpp = coherent_state(&alg, &[plus(&alg, &x), plus(&alg, &y)])?;
    suite.record_elements(
        "gauge pair (|aq-,ap->,|bq+,bp+>) = i exp(aq* bq + ap* bp)",
        &scalar_product(&g, &amm, &bpp)?,
        &e(&aq.conjugate().mul(&x).add(&ap.conjugate().mul(&y))).scale(I),
    );
    let aprime_bp = coherent_state(&alg, &[minus(&alg, &x), plus(&alg, &y)])?;
    suite.record_elements(
        "gauge pair (|aq-,ap->,|aq'-,bp+>) = i delta(aq*-aq') exp(ap* bp)",
        &scalar_product(&g, &amm, &aprime_bp)?,
        &aq.conjugate().sub(&x).mul(&e(&ap.conjugate().mul(&y))).scale(I),
    );
    let bq_aprime = coherent_state(&alg, &[plus(&alg, &x), minus(&alg, &y)])?;
    suite.record_elements(
        "gauge pair (|aq-,ap->,|bq+,ap'->) = i delta(ap*-ap') exp(aq* bq)",
        &scalar_product(&g, &amm, &bq_aprime)?,
        &ap.conjugate().sub(&y).mul(&e(&aq.conjugate().mul(&x))).scale(I),
    );
    let aprimes = coherent_state(&alg, &[minus(&alg, &x), minus(&alg, &y)])?;
    suite.record_elements(
        "gauge pair (|aq-,ap->,|aq'-,ap'->) = i delta(aq*-aq') delta(ap*-ap')",
        &scalar_product(&g, &amm, &aprimes)?,
        &aq.conjugate().sub(&x).mul(&ap.conjugate().sub(&y)).scale(I),
    );
    let bpp_base = coherent_state(&alg, &[plus(&alg, &aq), plus(&alg, &ap)])?;
    let a_bprime = coherent_state(&alg, &[minus(&alg, &x), plus(&alg, &y)])?;
    suite.record_elements(
        "gauge pair (|bq+,bp+>,|aq-,bp'+>) = i delta(bp*-bp') exp(bq* aq)",
        &scalar_product(&g, &bpp_base, &a_bprime)?,
        &ap.conjugate().sub(&y).mul(&e(&aq.conjugate().mul(&x))).scale(I),
    );
    let bprime_a = coherent_state(&alg, &[plus(&alg, &x), minus(&alg, &y)])?;
    suite.record_elements(
        "gauge pair (|bq+,bp+>,|bq'+,ap->) = i delta(bq'-bq*) exp(bp* ap)",
        &scalar_product(&g, &bpp_base, &bprime_a)?,
        &x.sub(&aq.conjugate())
            .mul(&e(&ap.conjugate().mul(&y)))
            .scale(I),
    );
    let bprimes = coherent_state(&alg, &[plus(&alg, &x), plus(&alg, &y)])?;
    suite.record_elements(
        "gauge pair (|bq+,bp+>,|bq'+,bp'+>) = i delta(bq*-bq') delta(bp*-bp')",
        &scalar_product(&g, &bpp_base, &bprimes)?,
        &aq.conjugate().sub(&x).mul(&ap.conjugate().sub(&y)).scale(I),
    );
    let amm2 = coherent_state(&alg, &[minus(&alg, &x), minus(&alg, &y)])?;
    suite.record_elements(
        "gauge pair (|bq+,bp+>,|aq-,ap->) = -i exp(bq* aq + bp* ap)",
        &scalar_product(&g, &bpp_base, &amm2)?,
        &e(&aq.conjugate().mul(&x).add(&ap.conjugate().mul(&y))).scale(-I),
    );
    Ok(())
}

/// Symplectic tables on one (q, p) pair.
fn pair_tables_symplectic(suite: &mut Suite) -> Result<()> {
    let alg = Algebra::with_params(1, 4);
    let symp = symplectic_metric(&alg);
    let g = suite.metric_matrix(ProductName::Symplectic, &symp);

    // base table
    let mm = slot_state(&alg, &[Slot::Minus, Slot::Minus])?;
    let pp = slot_state(&alg, &[Slot::Plus, Slot::Plus])?;
    let mp = slot_state(&alg, &[Slot::Minus, Slot::Plus])?;
    let pm = slot_state(&alg, &[Slot::Plus, Slot::Minus])?;
    let states = [&mm, &mp, &pm, &pp];
    let mut dev: f64 = 0.0;
    for (iu, u) in states.iter().enumerate() {
        for (iv, v) in states.iter().enumerate() {
            let s = scalar_product(&g, u, v)?;
            let expect = match (iu, iv) {
                (3, 3) => cr(1.0),
                (1, 2) => I,
                (2, 1) => -I,
                (0, 0) => cr(-1.0),
                _ => cr(0.0),
            };
            dev = dev.max(s.sub(&Multivector::scalar(&alg, expect)).max_coeff());
        }
    }
    suite.checks.push(IdentityCheck {
        name: "symplectic pair base table (norms +-1, cross +-i)".into(),
        deviation: dev,
        tolerance: TOL,
    });

    let (aq, ap, x, y) = (theta(&alg, 0), theta(&alg, 1), theta(&alg, 2), theta(&alg, 3));
    let e = |t: &Multivector| exp_el(t);

    let amm = coherent_state(&alg, &[minus(&alg, &aq), minus(&alg, &ap)])?;
    let primes_mm = coherent_state(&alg, &[minus(&alg, &x), minus(&alg, &y)])?;
    // (|aq-,ap->,|aq'-,ap'->) = -exp(-i aq* ap' + i ap* aq')
    suite.record_elements(
        "symplectic pair (|aq-,ap->,|aq'-,ap'->) = -exp(-i aq* ap' + i ap* aq')",
        &scalar_product(&g, &amm, &primes_mm)?,
        &e(&aq.conjugate().mul(&y).scale(-I).add(&ap.conjugate().mul(&x).scale(I)))
            .scale(cr(-1.0)),
    );
    // (|aq-,bp+>,|bq+,bp'+>) = i delta(bp' + i aq*) exp(i bq bp*)
    let a_bp = coherent_state(&alg, &[minus(&alg, &aq), plus(&alg, &ap)])?;
    let b_bprime = coherent_state(&alg, &[plus(&alg, &x), plus(&alg, &y)])?;
    suite.record_elements(
        "symplectic pair (|aq-,bp+>,|bq+,bp'+>) = i delta(bp'+i aq*) exp(i bq bp*)",
        &scalar_product(&g, &a_bp, &b_bprime)?,
        &y.add(&aq.conjugate().scale(I))
            .mul(&e(&x.mul(&ap.conjugate()).scale(I)))
            .scale(I),
    );
    // (|aq-,ap->,|bq+,ap'->) = delta(bq - i ap*) exp(i ap' aq*)
    let b_aprime = coherent_state(&alg, &[plus(&alg, &x), minus(&alg, &y)])?;
    suite.record_elements(
        "symplectic pair (|aq-,ap->,|bq+,ap'->) = delta(bq-i ap*) exp(i ap' aq*)",
        &scalar_product(&g, &amm, &b_aprime)?,
        &x.sub(&ap.conjugate().scale(I)).mul(&e(&y.mul(&aq.conjugate()).scale(I))),
    );
    // (|aq-,ap->,|bq+,bp+>) = delta(bq - i ap*) delta(bp + i aq*)
    suite.record_elements(
        "symplectic pair (|aq-,ap->,|bq+,bp+>) = delta(bq-i ap*) delta(bp+i aq*)",
        &scalar_product(&g, &amm, &b_bprime)?,
        &x.sub(&ap.conjugate().scale(I)).mul(&y.add(&aq.conjugate().scale(I))),
    );
    // (|aq-,ap->,|aq'-,bp+>) = -delta(bp + i aq*) exp(-i aq' ap*)
    let aprime_bp = coherent_state(&alg, &[minus(&alg, &x), plus(&alg, &y)])?;
    suite.record_elements(
        "symplectic pair (|aq-,ap->,|aq'-,bp+>) = -delta(bp+i aq*) exp(-i aq' ap*)",
        &scalar_product(&g, &amm, &aprime_bp)?,
        &y.add(&aq.conjugate().scale(I))
            .mul(&e(&x.mul(&ap.conjugate()).scale(-I)))
            .scale(cr(-1.0)),
    );
    // (|bq+,ap->,|bq'+,bp+>) = -i delta(bq' - i ap*) exp(-i bp bq*)
    let bq_am = coherent_state(&alg, &[plus(&alg, &aq), minus(&alg, &ap)])?;
    suite.record_elements(
        "symplectic pair (|bq+,ap->,|bq'+,bp+>) = -i delta(bq'-i ap*) exp(-i bp bq*)",
        &scalar_product(&g, &bq_am, &b_bprime)?,
        &x.sub(&ap.conjugate().scale(I))
            .mul(&e(&y.mul(&aq.conjugate()).scale(-I)))
            .scale(-I),
    );
    // (|bq+,ap->,|aq-,bp+>) = -i exp(i bq* bp + i ap* aq)
    suite.record_elements(
        "symplectic pair (|bq+,ap->,|aq-,bp+>) = -i exp(i bq* bp + i ap* aq)",
        &scalar_product(&g, &bq_am, &aprime_bp)?,
        &e(&aq.conjugate().mul(&y).scale(I).add(&ap.conjugate().mul(&x).scale(I)))
            .scale(-I),
    );
    // (|bq+,ap->,|bq'+,ap'->) = delta(ap* + i bq') delta(ap' - i bq*)
    suite.record_elements(
        "symplectic pair (|bq+,ap->,|bq'+,ap'->) = delta(ap*+i bq') delta(ap'-i bq*)",
        &scalar_product(&g, &bq_am, &b_aprime)?,
        &ap.conjugate().add(&x.scale(I)).mul(&y.sub(&aq.conjugate().scale(I))),
    );
    // (|aq-,bp+>,|aq'-,bp'+>) = delta(aq' + i bp*) delta(i bp' - aq*)
    suite.record_elements(
        "symplectic pair (|aq-,bp+>,|aq'-,bp'+>) = delta(aq'+i bp*) delta(i bp'-aq*)",
        &scalar_product(&g, &a_bp, &aprime_bp)?,
        &x.add(&ap.conjugate().scale(I)).mul(&y.scale(I).sub(&aq.conjugate())),
    );
    // (|bq+,bp+>,|bq'+,bp'+>) = exp(i bq* bp' - i bp* bq')
    let b_base = coherent_state(&alg, &[plus(&alg, &aq), plus(&alg, &ap)])?;
    suite.record_elements(
        "symplectic pair (|bq+,bp+>,|bq'+,bp'+>) = exp(i bq* bp' - i bp* bq')",
        &scalar_product(&g, &b_base, &b_bprime)?,
        &e(&aq.conjugate().mul(&y).scale(I).sub(&ap.conjugate().mul(&x).scale(I))),
    );
    Ok(())
}

/// All six resolutions of identity on one (q, p) pair.
fn pair_resolutions(suite: &mut Suite) -> Result<()> {
    let alg = Algebra::with_params(1, 2);
    let eye = Array2::<C64>::eye(4);
    let aq = theta(&alg, 0);
    let ap = theta(&alg, 1);
    let aqs = theta_star(&alg, 0);
    let aps = theta_star(&alg, 1);
    let svh = svh_metric(&alg);
    let g_svh = suite.metric_matrix(ProductName::Svh, &svh);

    // SvH twisted: int daq dap |aq+,ap+><-ap*,-aq*| = 1
    let ket = coherent_state(&alg, &[plus(&alg, &aq), plus(&alg, &ap)])?;
    let bra_ket = coherent_state(&alg, &[minus(&alg, &aqs), minus(&alg, &aps)])?;
    let m = resolution_matrix(&alg, &g_svh, &OuterProduct { ket, bra_ket }, &[0, 1], cr(1.0))?;
    suite.record_matrix("svh pair resolution int daq dap |++><--| twisted", &m, &eye);
    // int dap daq |aq-,ap-><+ap*,+aq*| = 1
    let ket = coherent_state(&alg, &[minus(&alg, &aq), minus(&alg, &ap)])?;
    let bra_ket = coherent_state(&alg, &[plus(&alg, &aqs), plus(&alg, &aps)])?;
    let m = resolution_matrix(&alg, &g_svh, &OuterProduct { ket, bra_ket }, &[1, 0], cr(1.0))?;
    suite.record_matrix("svh pair resolution int dap daq |--><++| twisted", &m, &eye);

    // gauge: i int daq dap |aq+-,ap+-><+-ap*,+-aq*| = 1
    let gauge = gauge_metric(&alg)?;
    let g_gauge = suite.metric_matrix(ProductName::Gauge, &gauge);
    for slot in [Slot::Plus, Slot::Minus] {
        let ket = coherent_state(
            &alg,
            &[
                CoherentSlot { slot, label: aq.clone() },
                CoherentSlot { slot, label: ap.clone() },
            ],
        )?;
        let bra_ket = coherent_state(
            &alg,
            &[
                CoherentSlot { slot, label: aqs.clone() },
                CoherentSlot { slot, label: aps.clone() },
            ],
        )?;
        let m = resolution_matrix(&alg, &g_gauge, &OuterProduct { ket, bra_ket }, &[0, 1], I)?;
        let tag = if slot == Slot::Plus { "+" } else { "-" };
        suite.record_matrix(
            &format!("gauge pair resolution i int daq dap |{tag}{tag}><{tag}{tag}|"),
            &m,
            &eye,
        );
    }

    // symplectic: int dap daq |aq-,ap-><(i ap*)+,(-i aq*)+| = 1
    let symp = symplectic_metric(&alg);
    let g_symp = suite.metric_matrix(ProductName::Symplectic, &symp);
    let ket = coherent_state(&alg, &[minus(&alg, &aq), minus(&alg, &ap)])?;
    let bra_ket = coherent_state(
        &alg,
        &[plus(&alg, &aps.scale(I)), plus(&alg, &aqs.scale(-I))],
    )?;
    let m = resolution_matrix(&alg, &g_symp, &OuterProduct { ket, bra_ket }, &[1, 0], cr(1.0))?;
    suite.record_matrix("symplectic pair resolution int dap daq |--><i ap*+, -i aq*+|", &m, &eye);
    // int dap daq |aq+,ap+><(-i ap*)-,(i aq*)-| = 1
    let ket = coherent_state(&alg, &[plus(&alg, &aq), plus(&alg, &ap)])?;
    let bra_ket = coherent_state(
        &alg,
        &[minus(&alg, &aps.scale(-I)), minus(&alg, &aqs.scale(I))],
    )?;
    let m = resolution_matrix(&alg, &g_symp, &OuterProduct { ket, bra_ket }, &[1, 0], cr(1.0))?;
    suite.record_matrix("symplectic pair resolution int dap daq |++><-i ap*-, i aq*-|", &m, &eye);
    Ok(())
}

/// The bra-entry order conventions: the SvH reading that requires inverting
/// the q and p entries, and the symplectic one that does not.
fn entry_order_checks(suite: &mut Suite) -> Result<()> {
    let alg = Algebra::new(1);
    let svh = svh_metric(&alg);
    // correct reading: (|0q-,0p+>, |0q-,0p+>) = 1
    let state = slot_state(&alg, &[Slot::Minus, Slot::Plus])?;
    let s = scalar_product(svh.matrix(), &state, &state)?;
    let mut dev = s.sub(&Multivector::one(&alg)).max_coeff();
    // the non-inverted reading evaluates <-0q,-0p| c^p (-cbar_p) |0q-,0p->
    // and lands on -1 instead
    let vol = Multivector::monomial(&alg, alg.volume_mask());
    let acted = vol.contract_state(1)?.scale(cr(-1.0)).wedge_state(1)?;
    let wrong = scalar_product(svh.matrix(), &vol, &acted)?;
    dev = dev.max(wrong.sub(&Multivector::scalar(&alg, cr(-1.0))).max_coeff());
    suite.checks.push(IdentityCheck {
        name: "svh bra entry order: inverted reading consistent, direct reading flips sign".into(),
        deviation: dev,
        tolerance: TOL,
    });

    // symplectic: <0+,0+| cbar_q cbar_p = <0-,0-| holds without inversion,
    // i.e. adjoint(cbar_q cbar_p) maps |0+,0+> = 1 to |0-,0-> = c^q c^p
    let symp = symplectic_metric(&alg);
    let dq = crate::grassmann::contraction_op(&alg, 0)?;
    let dp = crate::grassmann::contraction_op(&alg, 1)?;
    let prod = dq.compose(&dp);
    let adj = crate::metrics::adjoint(&symp, &prod)?;
    let one_vec = Multivector::one(&alg).to_state_vector()?;
    let got = adj.apply_vec(&one_vec);
    let expect = vol.to_state_vector()?;
    let dev2 = got
        .iter()
        .zip(expect.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    suite.checks.push(IdentityCheck {
        name: "symplectic bra entry order kept: adjoint(cbar_q cbar_p)|0+,0+> = |0-,0->".into(),
        deviation: dev2,
        tolerance: TOL,
    });
    Ok(())
}

/// The n = 2 coherent overlap table entries (four slots).
fn two_pair_tables_svh(suite: &mut Suite) -> Result<()> {
    let alg = Algebra::with_params(2, 8);
    let svh = svh_metric(&alg);
    let g = svh.matrix();
    let alphas: Vec<Multivector> = (0..4).map(|i| theta(&alg, i)).collect();
    let betas: Vec<Multivector> = (4..8).map(|i| theta(&alg, i)).collect();
    let minus_slots = |labels: &[Multivector]| -> Vec<CoherentSlot> {
        labels.iter().map(|l| CoherentSlot { slot: Slot::Minus, label: l.clone() }).collect()
    };
    let plus_slots = |labels: &[Multivector]| -> Vec<CoherentSlot> {
        labels.iter().map(|l| CoherentSlot { slot: Slot::Plus, label: l.clone() }).collect()
    };
    let u = coherent_state(&alg, &minus_slots(&alphas))?;
    let v = coherent_state(&alg, &minus_slots(&betas))?;
    let mut expo = Multivector::zero(&alg);
    for i in 0..4 {
        expo = expo.add(&alphas[i].conjugate().mul(&betas[i]));
    }
    suite.record_elements(
        "svh n=2 (|a1-..a4->,|b1-..b4->) = exp(sum a_i* b_i)",
        &scalar_product(g, &u, &v)?,
        &exp_el(&expo),
    );

    let starred: Vec<Multivector> = alphas.iter().map(|a| a.conjugate()).collect();
    let us = coherent_state(&alg, &plus_slots(&starred))?;
    let mut deltas = Multivector::one(&alg);
    for i in 0..4 {
        deltas = deltas.mul(&alphas[i].sub(&betas[i]));
    }
    suite.record_elements(
        "svh n=2 (|a1*+..a4*+>,|b1-..b4->) = prod delta(a_i - b_i)",
        &scalar_product(g, &us, &v)?,
        &deltas,
    );
    // On four variables the mirror overlap comes out with a plus sign: each
    // variable contributes one delta and a minus, and sorting the four
    // deltas together soaks up (-1)^{k(k-1)/2}; at k = 4 the two signs
    // cancel, unlike the two-variable case.
    let um = coherent_state(&alg, &minus_slots(&starred))?;
    let vp = coherent_state(&alg, &plus_slots(&betas))?;
    suite.record_elements(
        "svh n=2 (|a1*-..a4*->,|b1+..b4+>) = +prod delta(a_i - b_i)",
        &scalar_product(g, &um, &vp)?,
        &deltas,
    );
    Ok(())
}

/// The 16x16 resolutions of identity at n = 2 for all three products; the
/// measure order extends the pair case (all-minus kets integrate reversed,
/// the gauge ones as written) and the prefactors extend the pair values:
/// +1 for SvH and symplectic, i^2 = -1 for gauge.
fn two_pair_resolutions(suite: &mut Suite) -> Result<()> {
    let alg = Algebra::with_params(2, 4);
    let eye = Array2::<C64>::eye(16);
    let alphas: Vec<Multivector> = (0..4).map(|i| theta(&alg, i)).collect();
    let stars: Vec<Multivector> = (0..4).map(|i| theta_star(&alg, i)).collect();

    // SvH: |a1-..a4-> against the twisted all-plus starred bra
    let svh = svh_metric(&alg);
    let ket = coherent_state(
        &alg,
        &alphas.iter().map(|a| minus(&alg, a)).collect::<Vec<_>>(),
    )?;
    let bra_ket = coherent_state(
        &alg,
        &stars.iter().map(|s| plus(&alg, s)).collect::<Vec<_>>(),
    )?;
    let m = resolution_matrix(
        &alg,
        svh.matrix(),
        &OuterProduct { ket: ket.clone(), bra_ket },
        &[3, 2, 1, 0],
        cr(1.0),
    )?;
    suite.record_matrix("svh n=2 resolution (16x16, twisted)", &m, &eye);

    // gauge: same-sign bra, measure as written, prefactor (i)^2
    let gauge = gauge_metric(&alg)?;
    let bra_ket = coherent_state(
        &alg,
        &stars.iter().map(|s| minus(&alg, s)).collect::<Vec<_>>(),
    )?;
    let m = resolution_matrix(
        &alg,
        gauge.matrix(),
        &OuterProduct { ket: ket.clone(), bra_ket },
        &[0, 1, 2, 3],
        cr(-1.0),
    )?;
    suite.record_matrix("gauge n=2 resolution (16x16)", &m, &eye);

    // symplectic: bra labels beta_a = i w^{ab} alpha_b*
    let symp = symplectic_metric(&alg);
    let labels = [
        stars[2].scale(I),
        stars[3].scale(I),
        stars[0].scale(-I),
        stars[1].scale(-I),
    ];
    let bra_ket = coherent_state(
        &alg,
        &labels.iter().map(|l| plus(&alg, l)).collect::<Vec<_>>(),
    )?;
    let m = resolution_matrix(
        &alg,
        symp.matrix(),
        &OuterProduct { ket, bra_ket },
        &[3, 2, 1, 0],
        cr(1.0),
    )?;
    suite.record_matrix("symplectic n=2 resolution (16x16)", &m, &eye);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes_at_n2() {
        let checks = run_identity_suite(2, None).unwrap();
        assert!(checks.len() > 30);
        for c in &checks {
            assert!(
                c.passed(),
                "identity '{}' deviates by {:.3e}",
                c.name,
                c.deviation
            );
        }
    }

    #[test]
    fn corrupted_metric_fails_named_identity() {
        let alg = Algebra::new(1);
        let mut bad = svh_metric(&alg).matrix().clone();
        bad[(1, 1)] = cr(2.0);
        let checks = run_identity_suite(1, Some((ProductName::Svh, bad))).unwrap();
        let failing: Vec<_> = checks.iter().filter(|c| !c.passed()).collect();
        assert!(!failing.is_empty());
        assert!(failing.iter().any(|c| c.name.contains("svh")));
    }
}
