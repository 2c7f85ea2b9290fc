//! Linear canonical transformations, their induced action on the Grassmann
//! generators and the fiber, metric pushforward, and the invariance of the
//! hermiticity character under the transformation.

use crate::dynamics::HamiltonianModel;
use crate::error::{Error, Result};
use crate::grassmann::Algebra;
use crate::lie::ferm_matrix;
use crate::linalg::{adjoint_matrix, cr, frobenius, inverse};
use crate::metrics::{hermiticity_residual, Metric};
use crate::physical::exterior_lift;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// A linear canonical transformation phi' = S phi. Forms transform with
/// c'^a = S^a_b c^b and the conjugate momenta with the inverse transpose.
#[derive(Debug, Clone)]
pub struct LinearCanonical {
    algebra: Algebra,
    s: Array2<f64>,
}

impl LinearCanonical {
    /// Wrap a matrix, verifying the symplectic condition S w S^T = w.
    pub fn new(algebra: &Algebra, s: Array2<f64>) -> Result<Self> {
        let m = algebra.state_generators();
        if s.nrows() != m || s.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: s.nrows() });
        }
        let w = algebra.omega_matrix();
        let resid = s.dot(&w).dot(&s.t()) - &w;
        let dev = resid.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if dev > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "matrix violates the symplectic condition by {dev:.3e}"
            )));
        }
        Ok(LinearCanonical { algebra: algebra.clone(), s })
    }

    pub fn identity(algebra: &Algebra) -> Self {
        let m = algebra.state_generators();
        LinearCanonical { algebra: algebra.clone(), s: Array2::eye(m) }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    /// The generator transform acting on the c's (equal to S).
    pub fn generator_transform(&self) -> Array2<C64> {
        self.s.mapv(cr)
    }

    /// The transform acting on the cbar's: (S^{-1})^T.
    pub fn momentum_transform(&self) -> Result<Array2<C64>> {
        let sinv = inverse(&self.s.mapv(cr))?;
        Ok(sinv.t().to_owned())
    }

    /// Exterior-power lift of the generator transform to the fiber.
    pub fn fiber_lift(&self) -> Result<Array2<C64>> {
        exterior_lift(&self.algebra, &self.generator_transform())
    }

    /// The lift acting on fiber components: coefficients psi_a co-vary with
    /// the momenta, so the component transform is the exterior power of
    /// (S^{-1})^T. Substituting c = S^{-1} c' into psi_a c^a reproduces it.
    pub fn component_lift(&self) -> Result<Array2<C64>> {
        exterior_lift(&self.algebra, &self.momentum_transform()?)
    }

    pub fn apply_point(&self, phi: &Array1<f64>) -> Array1<f64> {
        self.s.dot(phi)
    }

    /// Hessian of the transformed Hamiltonian H'(phi') = H(S^{-1} phi') at
    /// the transformed point: (S^{-1})^T Hess (S^{-1}).
    pub fn transform_hessian(&self, hessian: &Array2<f64>) -> Result<Array2<f64>> {
        let sinv = inverse(&self.s.mapv(cr))?.mapv(|z| z.re);
        Ok(sinv.t().dot(hessian).dot(&sinv))
    }
}

/// The n = 1 scaling q' = alpha q, p' = p / alpha.
pub fn scaling_transform(algebra: &Algebra, alpha: f64) -> Result<LinearCanonical> {
    if algebra.n_pairs() != 1 {
        return Err(Error::InvalidArgument("scaling transform is the n = 1 case".into()));
    }
    if alpha == 0.0 {
        return Err(Error::InvalidArgument("alpha must be nonzero".into()));
    }
    LinearCanonical::new(algebra, ndarray::array![[alpha, 0.0], [0.0, 1.0 / alpha]])
}

/// Pushforward g' = (F^{-1})^H g F^{-1} with F the component lift, so that
/// the pairing of transformed states equals the original pairing identically.
pub fn pushforward_metric(metric: &Metric, transform: &LinearCanonical) -> Result<Metric> {
    let f = transform.component_lift()?;
    let finv = inverse(&f)?;
    let g = adjoint_matrix(&finv).dot(metric.matrix()).dot(&finv);
    Metric::custom(metric.algebra(), g)
}

/// Hermiticity residuals of the fiber Hamiltonian before and after a linear
/// canonical transformation, evaluated at phi and S phi with the transformed
/// Hessian and the pushed-forward metric. The conditioning bound of the
/// fiber lift accompanies the pair.
#[derive(Debug, Clone, Copy)]
pub struct InvarianceReport {
    pub residual_before: f64,
    pub residual_after: f64,
    pub lift_condition: f64,
}

pub fn hermiticity_invariance(
    model: &HamiltonianModel,
    metric: &Metric,
    transform: &LinearCanonical,
    phi: &Array1<f64>,
) -> Result<InvarianceReport> {
    let algebra = metric.algebra().clone();
    if model.dim() != algebra.state_generators() {
        return Err(Error::DimensionMismatch {
            expected: algebra.state_generators(),
            got: model.dim(),
        });
    }
    let hess = model.hessian(phi)?;
    let before = ferm_matrix(&algebra, &hess)?;
    let residual_before = hermiticity_residual(metric, &before);

    let hess_after = transform.transform_hessian(&hess)?;
    let after = ferm_matrix(&algebra, &hess_after)?;
    let pushed = pushforward_metric(metric, transform)?;
    let residual_after = hermiticity_residual(&pushed, &after);

    let f = transform.component_lift()?;
    let finv = inverse(&f)?;
    let lift_condition = frobenius(&f) * frobenius(&finv) / algebra.state_dim() as f64;
    Ok(InvarianceReport { residual_before, residual_after, lift_condition })
}
