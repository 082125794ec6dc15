use nalgebra::{DMatrix, DVector, Vector3};

use super::kinematics::{self, ForceBreakdown, ForceInputs, Frames, SoilLaw, Workspace};
use super::loads::EnvironmentLoads;
use super::model::{ChainModel, RootCondition};
use crate::error::{Error, Result};
use crate::hydro::WaveField;

/// Generalized coordinates, velocities and time.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub t: f64,
}

impl SystemState {
    pub fn rest(n: usize) -> Self {
        Self {
            q: DVector::zeros(n),
            qd: DVector::zeros(n),
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite()) && self.t.is_finite()
    }
}

/// Reusable force evaluator bound to a model and an environment. Time-
/// dependent inputs are refreshed by [`Evaluator::set_time`].
#[derive(Debug, Clone)]
pub(crate) struct Evaluator<'a> {
    pub model: &'a ChainModel,
    env: &'a EnvironmentLoads,
    pub soil: SoilLaw,
    ws: Workspace,
    field: Option<WaveField>,
    wave: Vec<(f64, f64)>,
    yaw: Option<[f64; 6]>,
    nodal: Vec<(usize, [f64; 6])>,
    time: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a ChainModel, env: &'a EnvironmentLoads, soil: SoilLaw) -> Result<Self> {
        for (node, _) in &env.nodal {
            if *node >= model.nodes.len() {
                return Err(Error::Config(format!("nodal load on missing node {node}")));
            }
        }
        let field = match (&env.sea, &model.hydro) {
            (Some(sea), Some(h)) => {
                let depth = h.swl_elevation - h.seabed_elevation;
                if (sea.water_depth - depth).abs() > 1e-6 * depth.max(1.0) {
                    return Err(Error::Config(format!(
                        "sea-state water depth {} m differs from the model's {} m",
                        sea.water_depth, depth
                    )));
                }
                let depths: Vec<f64> = h.strips.iter().map(|(s, _)| s.z_swl).collect();
                Some(WaveField::new(sea, &depths)?)
            }
            _ => None,
        };
        let n_strips = model.hydro.as_ref().map_or(0, |h| h.strips.len());
        if let SoilLaw::Frozen(k) = &soil {
            if k.len() != model.soil.as_ref().map_or(0, |s| s.nodes.len()) {
                return Err(Error::Config(
                    "frozen soil law does not match the soil nodes".into(),
                ));
            }
        }
        let mut ev = Self {
            model,
            env,
            soil,
            ws: Workspace::new(model),
            field,
            wave: vec![(0.0, 0.0); n_strips],
            yaw: None,
            nodal: env.nodal.iter().map(|(n, _)| (*n, [0.0; 6])).collect(),
            time: f64::NAN,
        };
        let t0 = env.yaw_bearing.as_ref().map_or(0.0, |s| s.start());
        ev.set_time(t0)?;
        Ok(ev)
    }

    pub fn set_time(&mut self, t: f64) -> Result<()> {
        if t == self.time {
            return Ok(());
        }
        if let Some(f) = &mut self.field {
            f.evaluate(t, &mut self.wave);
        }
        self.yaw = self.env.yaw_bearing.as_ref().map(|s| s.at(t)).transpose()?;
        for (slot, (_, s)) in self.nodal.iter_mut().zip(&self.env.nodal) {
            slot.1 = s.at(t)?;
        }
        self.time = t;
        Ok(())
    }

    pub fn eval(&mut self, q: &[f64], qd: &[f64], qdd: &[f64]) -> &ForceBreakdown {
        let inputs = ForceInputs {
            gravity: self.env.gravity,
            wave: self.field.as_ref().map(|_| self.wave.as_slice()),
            yaw: self.yaw,
            nodal: &self.nodal,
            soil: &self.soil,
        };
        kinematics::evaluate(self.model, q, qd, qdd, &inputs, &mut self.ws);
        &self.ws.out
    }

    /// `M q_ddot + h - Q` at the current time.
    pub fn residual(&mut self, q: &[f64], qd: &[f64], qdd: &[f64]) -> DVector<f64> {
        self.eval(q, qd, qdd).residual()
    }

    /// Wrench the moving chain transmits to the support at the root, as
    /// `[Fx, Fy, Fz, Mx, My, Mz]` about the root point. Uses the forces of
    /// the most recent evaluation.
    pub fn root_wrench(&self) -> [f64; 6] {
        let w = self.ws.root_net;
        let p = Vector3::new(0.0, 0.0, self.model.root_elevation());
        let n = Vector3::new(w[0], w[1], w[2]);
        let f = Vector3::new(w[3], w[4], w[5]);
        let m = n - p.cross(&f);
        [f.x, f.y, f.z, m.x, m.y, m.z]
    }

    pub fn gravity(&self) -> Vector3<f64> {
        self.env.gravity
    }

    pub fn frames(&self) -> &Frames {
        &self.ws.frames
    }
}

/// Structural plus added-mass matrix at `q`.
pub fn mass_matrix(model: &ChainModel, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len(model, q.len())?;
    let mut frames = Frames::new(model.n_dof());
    let m = kinematics::mass_matrix_with(model, q.as_slice(), &mut frames);
    if m.clone().cholesky().is_none() {
        return Err(Error::Numerical(
            "mass matrix is not positive definite".into(),
        ));
    }
    Ok(m)
}

fn check_len(model: &ChainModel, n: usize) -> Result<()> {
    if n != model.n_dof() {
        return Err(Error::Config(format!(
            "state has {n} entries, model has {} DOFs",
            model.n_dof()
        )));
    }
    Ok(())
}

/// Generalized forces at zero generalized acceleration. The `inertial`
/// entry holds the velocity-product terms; [`ForceBreakdown::residual`]
/// negated gives the total right-hand side.
pub fn generalized_forces(
    model: &ChainModel,
    state: &SystemState,
    env: &EnvironmentLoads,
) -> Result<ForceBreakdown> {
    check_len(model, state.q.len())?;
    check_len(model, state.qd.len())?;
    let mut ev = Evaluator::new(model, env, SoilLaw::Nonlinear)?;
    ev.set_time(state.t)?;
    let zeros = vec![0.0; model.n_dof()];
    Ok(ev
        .eval(state.q.as_slice(), state.qd.as_slice(), &zeros)
        .clone())
}

/// Kinetic energy (including fluid added mass) plus gravity and joint-spring
/// potential.
pub fn mechanical_energy(model: &ChainModel, state: &SystemState, gravity: &Vector3<f64>) -> f64 {
    let q = state.q.as_slice();
    let spring: f64 = model
        .joint_stiffness_diagonal()
        .iter()
        .zip(q)
        .map(|(k, x)| 0.5 * k * x * x)
        .sum();
    kinematics::kinetic_energy(model, q, state.qd.as_slice())
        + kinematics::gravity_potential(model, q, gravity)
        + spring
}

/// Internal moment carried by the joint cluster nearest an elevation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalMoment {
    pub joint: usize,
    pub elevation: f64,
    /// Spring torque `K theta` about local x, y and z.
    pub spring: [f64; 3],
    /// Damper torque `c theta_dot`, reported separately.
    pub damper: [f64; 3],
}

pub fn internal_moment(
    model: &ChainModel,
    state: &SystemState,
    elevation: f64,
) -> Result<InternalMoment> {
    let (lo, hi) = (model.root_elevation(), model.top_elevation());
    if !(elevation >= lo && elevation <= hi) {
        return Err(Error::Domain(format!(
            "elevation {elevation} m outside the structure [{lo}, {hi}] m"
        )));
    }
    check_len(model, state.q.len())?;
    let c = model.nearest_joint(elevation);
    let joint = &model.joints[c];
    let mut spring = [0.0; 3];
    let mut damper = [0.0; 3];
    for axis in 0..3 {
        let k = model.joint_dof(c, axis);
        spring[axis] = joint.stiffness[axis] * state.q[k];
        damper[axis] = joint.damping[axis] * state.qd.get(k).copied().unwrap_or(0.0);
    }
    Ok(InternalMoment {
        joint: c,
        elevation: joint.section.elevation,
        spring,
        damper,
    })
}

/// Reaction wrench at a clamped root, `[Fx, Fy, Fz, Mx, My, Mz]` about the
/// root point, from external loads and inertia of the moving chain.
pub fn root_reaction(
    model: &ChainModel,
    state: &SystemState,
    qdd: &DVector<f64>,
    env: &EnvironmentLoads,
) -> Result<[f64; 6]> {
    if model.root != RootCondition::Clamped {
        return Err(Error::Domain(
            "root reaction is defined for a clamped root".into(),
        ));
    }
    check_len(model, state.q.len())?;
    let mut ev = Evaluator::new(model, env, SoilLaw::Nonlinear)?;
    ev.set_time(state.t)?;
    ev.eval(state.q.as_slice(), state.qd.as_slice(), qdd.as_slice());
    Ok(ev.root_wrench())
}

/// Displacement of every node from its undeformed position at `q`.
pub fn node_displacements(model: &ChainModel, q: &DVector<f64>) -> Result<Vec<Vector3<f64>>> {
    check_len(model, q.len())?;
    let n = model.n_dof();
    let zeros = vec![0.0; n];
    let mut frames = Frames::new(n);
    frames.compute(model, q.as_slice(), &zeros, &zeros);
    Ok(model
        .nodes
        .iter()
        .map(|p| frames.position(p) - p.reference)
        .collect())
}
