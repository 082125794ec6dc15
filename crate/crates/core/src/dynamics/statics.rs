use nalgebra::{DMatrix, DVector};

use super::forces::Evaluator;
use super::kinematics::SoilLaw;
use super::loads::EnvironmentLoads;
use super::model::ChainModel;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub q: DVector<f64>,
    pub iterations: usize,
    /// Infinity norm of the generalized force after each iteration.
    pub residual_history: Vec<f64>,
}

/// Characteristic torque used to scale convergence: largest joint spring
/// constant times 1 mrad.
pub fn characteristic_torque(model: &ChainModel) -> f64 {
    model
        .joint_stiffness_diagonal()
        .into_iter()
        .fold(0.0, f64::max)
        * 1e-3
}

/// Solves `Q(q, 0) = 0` by Newton iteration with a backtracking line search.
pub fn static_equilibrium(model: &ChainModel, env: &EnvironmentLoads) -> Result<Equilibrium> {
    if !env.is_time_invariant() {
        return Err(Error::Config(
            "static equilibrium needs time-invariant loads".into(),
        ));
    }
    let mut ev = Evaluator::new(model, env, SoilLaw::Nonlinear)?;
    let n = model.n_dof();
    let zeros = vec![0.0; n];
    let tol = 1e-8 * characteristic_torque(model);
    let mut q = DVector::<f64>::zeros(n);
    let mut r = ev.residual(q.as_slice(), &zeros, &zeros);
    let mut history = vec![r.amax()];

    for it in 0..MAX_ITERATIONS {
        if r.amax() <= tol {
            return Ok(Equilibrium {
                q,
                iterations: it,
                residual_history: history,
            });
        }
        let jac = residual_jacobian(&mut ev, &q, &zeros);
        let step = jac
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::Numerical("singular static Jacobian".into()))?;
        let norm0 = r.norm();
        let mut lambda = 1.0;
        loop {
            let trial = &q + &step * lambda;
            let rt = ev.residual(trial.as_slice(), &zeros, &zeros);
            if rt.norm() < (1.0 - 1e-4 * lambda) * norm0 || lambda < 1e-4 {
                q = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
        history.push(r.amax());
    }
    if r.amax() <= tol {
        return Ok(Equilibrium {
            q,
            iterations: MAX_ITERATIONS,
            residual_history: history,
        });
    }
    Err(Error::Solver {
        message: "static equilibrium did not converge".into(),
        iterations: MAX_ITERATIONS,
        history,
    })
}

/// Central-difference Jacobian of the residual with respect to q at zero
/// velocity and acceleration.
pub(crate) fn residual_jacobian(
    ev: &mut Evaluator,
    q: &DVector<f64>,
    zeros: &[f64],
) -> DMatrix<f64> {
    let n = q.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut x = q.clone();
    for k in 0..n {
        x[k] = q[k] + FD_STEP;
        let rp = ev.residual(x.as_slice(), zeros, zeros);
        x[k] = q[k] - FD_STEP;
        let rm = ev.residual(x.as_slice(), zeros, zeros);
        x[k] = q[k];
        jac.set_column(k, &((rp - rm) / (2.0 * FD_STEP)));
    }
    jac
}
