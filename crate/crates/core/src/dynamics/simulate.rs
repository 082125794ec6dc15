use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, LU};

use super::forces::{mass_matrix, Evaluator, SystemState};
use super::kinematics::SoilLaw;
use super::linear::{linearize, LinearizeOptions, SoilLinearization};
use super::loads::EnvironmentLoads;
use super::model::{ChainModel, DofKind};
use crate::csvio::fmt_f64;
use crate::error::{Error, Result};
use crate::soil::soil_reaction_force;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    /// Generalized-alpha with the given high-frequency spectral radius.
    GeneralizedAlpha { rho_inf: f64 },
    /// Classical explicit Runge-Kutta.
    Rk4,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::GeneralizedAlpha { rho_inf: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Output interval; must be a whole multiple of `dt`. `None` = every step.
    pub output_dt: Option<f64>,
    pub integrator: Integrator,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub initial: Option<SystemState>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: 0.005,
            output_dt: None,
            integrator: Integrator::default(),
            newton_tol: 1e-8,
            max_newton: 25,
            max_halvings: 8,
            initial: None,
        }
    }
}

/// A recorded output quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// Global displacement of a node, axis 0..3.
    NodeDisplacement {
        node: usize,
        axis: usize,
    },
    NodeAcceleration {
        node: usize,
        axis: usize,
    },
    JointAngle {
        joint: usize,
        axis: usize,
    },
    /// Spring moment at the joint nearest the elevation, about x or y.
    Moment {
        elevation: f64,
        axis: usize,
    },
    /// Soil reaction force at a soil node, x or y.
    SoilReaction {
        node: usize,
        axis: usize,
    },
}

const AXES: [&str; 3] = ["x", "y", "z"];

impl Channel {
    pub fn name(&self) -> String {
        match *self {
            Channel::NodeDisplacement { node, axis } => format!("node{node}.u{}", AXES[axis]),
            Channel::NodeAcceleration { node, axis } => format!("node{node}.a{}", AXES[axis]),
            Channel::JointAngle { joint, axis } => format!("joint{joint}.th{}", AXES[axis]),
            Channel::Moment { elevation, axis } => format!("moment.{elevation}m.{}", AXES[axis]),
            Channel::SoilReaction { node, axis } => format!("soil{node}.f{}", AXES[axis]),
        }
    }

    /// Parses the names produced by [`Channel::name`].
    pub fn parse(name: &str) -> Result<Channel> {
        let bad = || Error::Config(format!("unknown output channel `{name}`"));
        let axis_of = |s: &str| AXES.iter().position(|a| *a == s).ok_or_else(bad);
        if let Some(rest) = name.strip_prefix("moment.") {
            let (elev, axis) = rest.rsplit_once('.').ok_or_else(bad)?;
            let elevation: f64 = elev
                .strip_suffix('m')
                .ok_or_else(bad)?
                .parse()
                .map_err(|_| bad())?;
            let axis = axis_of(axis)?;
            if axis > 1 {
                return Err(bad());
            }
            return Ok(Channel::Moment { elevation, axis });
        }
        let (head, tail) = name.split_once('.').ok_or_else(bad)?;
        let split = head.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let index: usize = head[split..].parse().map_err(|_| bad())?;
        let (kind, axis) = tail.split_at(tail.len().saturating_sub(1));
        let axis = axis_of(axis)?;
        match (&head[..split], kind) {
            ("node", "u") => Ok(Channel::NodeDisplacement { node: index, axis }),
            ("node", "a") => Ok(Channel::NodeAcceleration { node: index, axis }),
            ("joint", "th") => Ok(Channel::JointAngle { joint: index, axis }),
            ("soil", "f") if axis < 2 => Ok(Channel::SoilReaction { node: index, axis }),
            _ => Err(bad()),
        }
    }

    fn check(&self, model: &ChainModel) -> Result<()> {
        let ok = match *self {
            Channel::NodeDisplacement { node, axis } | Channel::NodeAcceleration { node, axis } => {
                node < model.nodes.len() && axis < 3
            }
            Channel::JointAngle { joint, axis } => joint < model.n_joints() && axis < 3,
            Channel::Moment { elevation, axis } => {
                axis < 2
                    && elevation >= model.root_elevation()
                    && elevation <= model.top_elevation()
            }
            Channel::SoilReaction { node, axis } => {
                axis < 2 && model.soil.as_ref().is_some_and(|s| node < s.nodes.len())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "channel {} does not exist on this model",
                self.name()
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub t: f64,
    pub message: String,
}

/// Recorded channels on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    pub names: Vec<String>,
    pub time: Vec<f64>,
    /// One vector per channel.
    pub data: Vec<Vec<f64>>,
    pub diagnostics: Vec<Diagnostic>,
    /// State at the end of the run.
    pub final_state: Option<SystemState>,
}

impl TimeSeriesFrame {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
    }

    /// Keeps samples with `t >= t0`.
    pub fn discard_before(&mut self, t0: f64) {
        let k = self.time.partition_point(|&t| t < t0);
        self.time.drain(..k);
        for d in &mut self.data {
            d.drain(..k);
        }
    }

    /// Writes `t_s` plus one column per channel; `comment` lines go first,
    /// each prefixed with `#`.
    pub fn write_csv(
        &self,
        out: &mut impl std::io::Write,
        comment: Option<&str>,
    ) -> std::io::Result<()> {
        if let Some(c) = comment {
            for line in c.lines() {
                writeln!(out, "# {line}")?;
            }
        }
        write!(out, "t_s")?;
        for n in &self.names {
            write!(out, ",{n}")?;
        }
        writeln!(out)?;
        for (i, t) in self.time.iter().enumerate() {
            write!(out, "{}", fmt_f64(*t))?;
            for d in &self.data {
                write!(out, ",{}", fmt_f64(d[i]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Integrates the nonlinear equations of motion and records channels.
pub fn simulate(
    model: &ChainModel,
    env: &EnvironmentLoads,
    cfg: &SimulationConfig,
    channels: &[Channel],
) -> Result<TimeSeriesFrame> {
    let n = model.n_dof();
    if !(cfg.dt > 0.0 && cfg.t_end >= 0.0) {
        return Err(Error::Config(
            "dt must be positive and t_end non-negative".into(),
        ));
    }
    let out_every = match cfg.output_dt {
        None => 1,
        Some(o) => {
            let r = o / cfg.dt;
            if !(r >= 1.0 - 1e-9) || (r - r.round()).abs() > 1e-6 * r {
                return Err(Error::Config(format!(
                    "output interval {o} s is not a multiple of dt {} s",
                    cfg.dt
                )));
            }
            r.round() as usize
        }
    };
    for c in channels {
        c.check(model)?;
    }
    let state0 = cfg.initial.clone().unwrap_or_else(|| SystemState::rest(n));
    if state0.q.len() != n || state0.qd.len() != n || !state0.is_finite() {
        return Err(Error::Config(
            "initial state does not match the model".into(),
        ));
    }
    let steps = (cfg.t_end / cfg.dt + 1e-9).floor() as usize;

    let mut ev = Evaluator::new(model, env, SoilLaw::Nonlinear)?;
    let mut rec = Recorder::new(model, channels);
    let mut q = state0.q.clone();
    let mut v = state0.qd.clone();
    let t0 = state0.t;
    ev.set_time(t0)?;
    let mut a = accelerations(&mut ev, &q, &v)?;
    rec.record(&mut ev, t0, &q, &v, &a);

    match cfg.integrator {
        Integrator::Rk4 => {
            for step in 1..=steps {
                let t = t0 + (step - 1) as f64 * cfg.dt;
                rk4_step(&mut ev, &mut q, &mut v, t, cfg.dt)?;
                rec.check_state(t + cfg.dt, &q, &v);
                if step % out_every == 0 {
                    let tn = t0 + step as f64 * cfg.dt;
                    ev.set_time(tn)?;
                    a = accelerations(&mut ev, &q, &v)?;
                    rec.record(&mut ev, tn, &q, &v, &a);
                }
            }
        }
        Integrator::GeneralizedAlpha { rho_inf } => {
            if !(0.0..=1.0).contains(&rho_inf) {
                return Err(Error::Config("spectral radius must lie in [0, 1]".into()));
            }
            let mut ga = GenAlpha::new(rho_inf, cfg, a.clone());
            for step in 1..=steps {
                let t = t0 + (step - 1) as f64 * cfg.dt;
                ga.advance(&mut ev, &mut q, &mut v, &mut a, t, cfg.dt, 0)?;
                rec.check_state(t + cfg.dt, &q, &v);
                if step % out_every == 0 {
                    let tn = t0 + step as f64 * cfg.dt;
                    ev.set_time(tn)?;
                    rec.record(&mut ev, tn, &q, &v, &a);
                }
            }
        }
    }
    let t_final = t0 + steps as f64 * cfg.dt;
    Ok(rec.finish(SystemState {
        q,
        qd: v,
        t: t_final,
    }))
}

/// `M(q)^-1 Q(q, v, t)` at the evaluator's current time.
fn accelerations(ev: &mut Evaluator, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let m = mass_matrix(ev.model, q)?;
    let zeros = vec![0.0; q.len()];
    let rhs = -ev.residual(q.as_slice(), v.as_slice(), &zeros);
    m.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))
}

fn rk4_step(
    ev: &mut Evaluator,
    q: &mut DVector<f64>,
    v: &mut DVector<f64>,
    t: f64,
    h: f64,
) -> Result<()> {
    ev.set_time(t)?;
    let a1 = accelerations(ev, q, v)?;
    let (q2, v2) = (&*q + &*v * (0.5 * h), &*v + &a1 * (0.5 * h));
    ev.set_time(t + 0.5 * h)?;
    let a2 = accelerations(ev, &q2, &v2)?;
    let (q3, v3) = (&*q + &v2 * (0.5 * h), &*v + &a2 * (0.5 * h));
    let a3 = accelerations(ev, &q3, &v3)?;
    let (q4, v4) = (&*q + &v3 * h, &*v + &a3 * h);
    ev.set_time(t + h)?;
    let a4 = accelerations(ev, &q4, &v4)?;
    *q += (&*v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
    *v += (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (h / 6.0);
    Ok(())
}

/// Generalized-alpha state: algorithmic acceleration and the cached
/// iteration matrix.
struct GenAlpha {
    alpha_m: f64,
    alpha_f: f64,
    beta: f64,
    gamma: f64,
    acc: DVector<f64>,
    newton_tol: f64,
    max_newton: usize,
    max_halvings: usize,
    iteration: Option<(f64, LU<f64, nalgebra::Dyn, nalgebra::Dyn>)>,
}

impl GenAlpha {
    fn new(rho: f64, cfg: &SimulationConfig, a0: DVector<f64>) -> Self {
        let alpha_m = (2.0 * rho - 1.0) / (rho + 1.0);
        let alpha_f = rho / (rho + 1.0);
        let gamma = 0.5 - alpha_m + alpha_f;
        let beta = 0.25 * (gamma + 0.5).powi(2);
        Self {
            alpha_m,
            alpha_f,
            beta,
            gamma,
            acc: a0,
            newton_tol: cfg.newton_tol,
            max_newton: cfg.max_newton,
            max_halvings: cfg.max_halvings,
            iteration: None,
        }
    }

    fn coefficients(&self, h: f64) -> (f64, f64) {
        let r = (1.0 - self.alpha_f) / (1.0 - self.alpha_m);
        (h * h * self.beta * r, h * self.gamma * r)
    }

    fn refresh(&mut self, ev: &mut Evaluator, q: &DVector<f64>, h: f64) -> Result<()> {
        let model = ev.model;
        let soil = if model.soil.is_some() {
            SoilLinearization::Tangent
        } else {
            SoilLinearization::Secant
        };
        let lin_env = EnvironmentLoads {
            gravity: ev.gravity(),
            ..EnvironmentLoads::none()
        };
        let sys = linearize(model, &lin_env, q, &LinearizeOptions { step: 1e-6, soil })?;
        let (bp, gp) = self.coefficients(h);
        let s: DMatrix<f64> = &sys.m + drop_roundoff(sys.c) * gp + drop_roundoff(sys.k) * bp;
        self.iteration = Some((h, s.lu()));
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &mut self,
        ev: &mut Evaluator,
        q: &mut DVector<f64>,
        v: &mut DVector<f64>,
        a: &mut DVector<f64>,
        t: f64,
        h: f64,
        depth: usize,
    ) -> Result<()> {
        match self.try_step(ev, q, v, a, t, h) {
            Ok(()) => Ok(()),
            Err(e) if depth >= self.max_halvings => Err(e),
            Err(_) => {
                self.advance(ev, q, v, a, t, 0.5 * h, depth + 1)?;
                self.advance(ev, q, v, a, t + 0.5 * h, 0.5 * h, depth + 1)
            }
        }
    }

    fn try_step(
        &mut self,
        ev: &mut Evaluator,
        q: &mut DVector<f64>,
        v: &mut DVector<f64>,
        a: &mut DVector<f64>,
        t: f64,
        h: f64,
    ) -> Result<()> {
        ev.set_time(t + h)?;
        let bp = self.coefficients(h).0;
        let (am, af) = (self.alpha_m, self.alpha_f);
        let q_pred = &*q + &*v * h + &self.acc * (h * h * (0.5 - self.beta));
        let v_pred = &*v + &self.acc * (h * (1.0 - self.gamma));
        let acc_base = (&*a * af - &self.acc * am) / (1.0 - am);
        let r_ratio = (1.0 - af) / (1.0 - am);

        let mut history = Vec::new();
        for attempt in 0..2 {
            if attempt == 1 || self.iteration.as_ref().is_none_or(|(hh, _)| *hh != h) {
                self.refresh(ev, q, h)?;
            }
            let mut an = a.clone();
            for _ in 0..self.max_newton {
                let acc_n = &acc_base + &an * r_ratio;
                let qn = &q_pred + &acc_n * (h * h * self.beta);
                let vn = &v_pred + &acc_n * (h * self.gamma);
                let r = ev.residual(qn.as_slice(), vn.as_slice(), an.as_slice());
                let lu = &self.iteration.as_ref().unwrap().1;
                let da = lu
                    .solve(&(-r))
                    .ok_or_else(|| Error::Numerical("singular iteration matrix".into()))?;
                an += &da;
                let dq = da.amax() * bp;
                history.push(dq);
                if !dq.is_finite() {
                    break;
                }
                if dq <= self.newton_tol * qn.amax().max(1e-6) {
                    let acc_n = &acc_base + &an * r_ratio;
                    *q = &q_pred + &acc_n * (h * h * self.beta);
                    *v = &v_pred + &acc_n * (h * self.gamma);
                    *a = an;
                    self.acc = acc_n;
                    return Ok(());
                }
            }
        }
        Err(Error::Solver {
            message: format!("Newton iteration diverged at t = {t} s with dt = {h} s"),
            iterations: history.len(),
            history,
        })
    }
}

/// Zeroes off-diagonal entries at finite-difference noise level so that
/// exactly decoupled coordinates stay decoupled in the Newton update.
fn drop_roundoff(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let d: Vec<f64> = a.diagonal().iter().map(|v| v.abs()).collect();
    let n = a.nrows();
    for j in 0..n {
        for i in 0..n {
            if i != j && a[(i, j)].abs() <= 1e-9 * (d[i] * d[j]).sqrt() {
                a[(i, j)] = 0.0;
            }
        }
    }
    a
}

struct Recorder<'m> {
    model: &'m ChainModel,
    channels: Vec<Channel>,
    frame: TimeSeriesFrame,
    flagged: Vec<bool>,
}

impl<'m> Recorder<'m> {
    fn new(model: &'m ChainModel, channels: &[Channel]) -> Self {
        Self {
            model,
            channels: channels.to_vec(),
            frame: TimeSeriesFrame {
                names: channels.iter().map(Channel::name).collect(),
                time: Vec::new(),
                data: vec![Vec::new(); channels.len()],
                diagnostics: Vec::new(),
                final_state: None,
            },
            flagged: vec![false; model.n_dof()],
        }
    }

    fn check_state(&mut self, t: f64, q: &DVector<f64>, v: &DVector<f64>) {
        for (k, x) in q.iter().enumerate() {
            let angle = !matches!(self.model.dofs[k], DofKind::RootTranslation(_));
            if angle && x.abs() >= FRAC_PI_2 && !self.flagged[k] {
                self.flagged[k] = true;
                self.frame.diagnostics.push(Diagnostic {
                    t,
                    message: format!(
                        "coordinate {k} left the validity region: |q| = {} rad",
                        x.abs()
                    ),
                });
            }
        }
        if !(q.iter().chain(v.iter()).all(|x| x.is_finite()))
            && !self
                .frame
                .diagnostics
                .iter()
                .any(|d| d.message.contains("non-finite"))
        {
            self.frame.diagnostics.push(Diagnostic {
                t,
                message: "non-finite state".into(),
            });
        }
    }

    fn record(
        &mut self,
        ev: &mut Evaluator,
        t: f64,
        q: &DVector<f64>,
        v: &DVector<f64>,
        a: &DVector<f64>,
    ) {
        ev.eval(q.as_slice(), v.as_slice(), a.as_slice());
        let frames = ev.frames();
        let model = self.model;
        self.frame.time.push(t);
        for (c, out) in self.channels.iter().zip(self.frame.data.iter_mut()) {
            let value = match *c {
                Channel::NodeDisplacement { node, axis } => {
                    let p = &model.nodes[node];
                    frames.position(p)[axis] - p.reference[axis]
                }
                Channel::NodeAcceleration { node, axis } => {
                    frames.acceleration(&model.nodes[node])[axis]
                }
                Channel::JointAngle { joint, axis } => q[model.joint_dof(joint, axis)],
                Channel::Moment { elevation, axis } => {
                    let j = model.nearest_joint(elevation);
                    model.joints[j].stiffness[axis] * q[model.joint_dof(j, axis)]
                }
                Channel::SoilReaction { node, axis } => {
                    let soil = model.soil.as_ref().unwrap();
                    let (cfg, p) = &soil.nodes[node];
                    let y = frames.position(p)[axis] - p.reference[axis];
                    let yd = frames.velocity(p)[axis];
                    soil_reaction_force(&soil.curves, cfg, y, yd)
                }
            };
            out.push(value);
        }
    }

    fn finish(mut self, state: SystemState) -> TimeSeriesFrame {
        self.frame.final_state = Some(state);
        self.frame
    }
}
