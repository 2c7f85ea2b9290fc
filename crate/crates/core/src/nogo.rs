//! The generalized-metric parameter sweep behind the no-go dichotomy: every
//! consistent metric that keeps the fiber Hamiltonian self-adjoint carries
//! negative directions, while the positive-definite product cannot keep it
//! self-adjoint for generic Hessians.

use crate::error::Result;
use crate::grassmann::Algebra;
use crate::lie::ferm_matrix;
use crate::linalg::{c, cr};
use crate::metrics::{
    general_metric, hermiticity_residual, signature, svh_metric, GeneralFamily, Metric,
};
use crate::physical::random_hessians;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct NogoRow {
    pub family: String,
    pub params: String,
    pub consistent: bool,
    pub residual: f64,
    pub signature: Option<(usize, usize, usize)>,
    pub dichotomy_holds: bool,
}

fn residual_over(metric: &Metric, algebra: &Algebra, hessians: &[Array2<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for h in hessians {
        let f = ferm_matrix(algebra, h)?;
        worst = worst.max(hermiticity_residual(metric, &f));
    }
    Ok(worst)
}

/// Sweep the three generalized families on the n = 1 fiber: for each
/// parameter choice, record whether the builder accepts it, the worst
/// hermiticity residual over the sampled Hessians, the signature, and
/// whether the dichotomy row holds (self-adjoint implies indefinite).
pub fn nogo_sweep(seed: u64, samples: usize) -> Result<Vec<NogoRow>> {
    let algebra = Algebra::new(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hessians = random_hessians(&mut rng, 2, samples.max(3));
    let mut rows = Vec::new();

    let b_grid = [0.5, -0.5, 1.0, -1.0, 2.0, -2.0];
    let theta_grid = [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2];
    let gamma_grid = [0.0, 1.0];
    let g03_grid = [c(0.0, 1.0), c(0.0, -1.0), cr(1.0)];

    let mut push = |family: String, params: String, metric: Result<Metric>| -> Result<()> {
        match metric {
            Ok(m) => {
                let residual = residual_over(&m, &algebra, &hessians)?;
                let sig = signature(&m)?;
                let dichotomy_holds = residual >= RESIDUAL_TOL || sig.1 >= 1;
                rows.push(NogoRow {
                    family,
                    params,
                    consistent: true,
                    residual,
                    signature: Some(sig),
                    dichotomy_holds,
                });
            }
            Err(_) => {
                rows.push(NogoRow {
                    family,
                    params,
                    consistent: false,
                    residual: f64::NAN,
                    signature: None,
                    dichotomy_holds: true,
                });
            }
        }
        Ok(())
    };

    for b in b_grid {
        push(
            "A".into(),
            format!("b={b}"),
            general_metric(&algebra, GeneralFamily::A { b }),
        )?;
    }
    for theta in theta_grid {
        for gamma_i in gamma_grid {
            for g03 in g03_grid {
                push(
                    "B".into(),
                    format!("theta={theta:.4}, gamma_I={gamma_i}, g03={g03}"),
                    general_metric(&algebra, GeneralFamily::B { theta_alpha: theta, gamma_i, g03 }),
                )?;
            }
        }
        for b in b_grid {
            for g03 in g03_grid {
                push(
                    "C".into(),
                    format!("theta={theta:.4}, b={b}, g03={g03}"),
                    general_metric(&algebra, GeneralFamily::C { theta_alpha: theta, b, g03 }),
                )?;
            }
        }
    }

    // the positive-definite counterexample row: SvH has no negative
    // directions and a strictly positive residual for a quartic Hessian
    let svh = svh_metric(&algebra);
    let quartic_hessian = ndarray::array![[3.0, 0.0], [0.0, 1.0]];
    let f = ferm_matrix(&algebra, &quartic_hessian)?;
    let residual = hermiticity_residual(&svh, &f);
    let sig = signature(&svh)?;
    rows.push(NogoRow {
        family: "svh".into(),
        params: "V''=3".into(),
        consistent: true,
        residual,
        signature: Some(sig),
        dichotomy_holds: sig.1 == 0 && residual > 0.1,
    });
    Ok(rows)
}
