//! World-frame spatial algebra: forward kinematics, recursive Newton-Euler
//! force projection and the composite-rigid-body mass matrix.
//!
//! Spatial vectors are stacked `[angular; linear]` and referred to the world
//! origin, so no coordinate transforms are needed between links.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};

use super::model::{ChainModel, PointRef};
use crate::hydro::{added_mass_per_length, morison_strip_force};
use crate::soil::{frozen_reaction_force, soil_reaction_force};

pub(crate) type Spatial = Vector6<f64>;

fn ang(v: &Spatial) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn lin(v: &Spatial) -> Vector3<f64> {
    Vector3::new(v[3], v[4], v[5])
}

fn spatial(a: Vector3<f64>, l: Vector3<f64>) -> Spatial {
    Vector6::new(a.x, a.y, a.z, l.x, l.y, l.z)
}

/// Motion cross motion.
fn cross_m(v: &Spatial, m: &Spatial) -> Spatial {
    let (w, u) = (ang(v), lin(v));
    spatial(w.cross(&ang(m)), w.cross(&lin(m)) + u.cross(&ang(m)))
}

/// Motion cross force.
fn cross_f(v: &Spatial, f: &Spatial) -> Spatial {
    let (w, u) = (ang(v), lin(v));
    spatial(w.cross(&ang(f)) + u.cross(&lin(f)), w.cross(&lin(f)))
}

/// Force `f` applied at world point `p`, as a spatial force at the origin.
pub(crate) fn point_force(p: &Vector3<f64>, f: &Vector3<f64>) -> Spatial {
    spatial(p.cross(f), *f)
}

fn skew(c: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -c.z, c.y, c.z, 0.0, -c.x, -c.y, c.x, 0.0)
}

/// Spatial inertia at the world origin of a body with centre of mass `c`
/// and rotational inertia `i_cm` about it (world axes).
pub(crate) fn spatial_inertia(mass: f64, c: &Vector3<f64>, i_cm: &Matrix3<f64>) -> Matrix6<f64> {
    let cx = skew(c);
    let mut out = Matrix6::zeros();
    let upper = i_cm + mass * cx * cx.transpose();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&upper);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(mass * cx));
    out.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(mass * cx.transpose()));
    out.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(mass * Matrix3::identity()));
    out
}

/// Spatial inertia of a world-fixed translational mass matrix `a` acting at
/// point `p`: the kinetic energy is `v_p' a v_p / 2`.
pub(crate) fn point_translational_inertia(p: &Vector3<f64>, a: &Matrix3<f64>) -> Matrix6<f64> {
    let px = skew(p);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(px * a * px.transpose()));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(px * a));
    out.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(a * px.transpose()));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(a);
    out
}

pub(crate) fn axis_rotation(axis: usize, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    match axis {
        0 => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        1 => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        _ => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

/// Per-link poses and spatial motion for one (q, q_dot, q_ddot).
#[derive(Debug, Clone)]
pub(crate) struct Frames {
    pub rot: Vec<Matrix3<f64>>,
    pub origin: Vec<Vector3<f64>>,
    pub s: Vec<Spatial>,
    pub v: Vec<Spatial>,
    pub a: Vec<Spatial>,
}

impl Frames {
    pub fn new(n: usize) -> Self {
        Self {
            rot: vec![Matrix3::identity(); n],
            origin: vec![Vector3::zeros(); n],
            s: vec![Spatial::zeros(); n],
            v: vec![Spatial::zeros(); n],
            a: vec![Spatial::zeros(); n],
        }
    }

    pub fn compute(&mut self, model: &ChainModel, q: &[f64], qd: &[f64], qdd: &[f64]) {
        let mut r_prev = Matrix3::identity();
        let mut o_prev = Vector3::zeros();
        let mut v_prev = Spatial::zeros();
        let mut a_prev = Spatial::zeros();
        for (k, link) in model.links.iter().enumerate() {
            let mut e = Vector3::zeros();
            e[link.axis] = 1.0;
            let axis_w = r_prev * e;
            let (r, o, s) = if link.prismatic {
                let o = o_prev + r_prev * (link.offset + e * q[k]);
                (r_prev, o, spatial(Vector3::zeros(), axis_w))
            } else {
                let o = o_prev + r_prev * link.offset;
                (
                    r_prev * axis_rotation(link.axis, q[k]),
                    o,
                    spatial(axis_w, o.cross(&axis_w)),
                )
            };
            let vj = s * qd[k];
            let v = v_prev + vj;
            let a = a_prev + s * qdd[k] + cross_m(&v, &vj);
            self.rot[k] = r;
            self.origin[k] = o;
            self.s[k] = s;
            self.v[k] = v;
            self.a[k] = a;
            r_prev = r;
            o_prev = o;
            v_prev = v;
            a_prev = a;
        }
    }

    pub fn position(&self, p: &PointRef) -> Vector3<f64> {
        match p.link {
            Some(l) => self.origin[l] + self.rot[l] * p.local,
            None => p.local,
        }
    }

    pub fn velocity(&self, p: &PointRef) -> Vector3<f64> {
        match p.link {
            Some(l) => {
                let x = self.position(p);
                lin(&self.v[l]) + ang(&self.v[l]).cross(&x)
            }
            None => Vector3::zeros(),
        }
    }

    pub fn acceleration(&self, p: &PointRef) -> Vector3<f64> {
        match p.link {
            Some(l) => {
                let x = self.position(p);
                let w = ang(&self.v[l]);
                let vp = lin(&self.v[l]) + w.cross(&x);
                lin(&self.a[l]) + ang(&self.a[l]).cross(&x) + w.cross(&vp)
            }
            None => Vector3::zeros(),
        }
    }

    /// Linear Jacobian column of point `p` for coordinate `k`.
    pub fn point_jacobian(&self, p: &PointRef, k: usize) -> Vector3<f64> {
        match p.link {
            Some(l) if k <= l => {
                let x = self.position(p);
                lin(&self.s[k]) + ang(&self.s[k]).cross(&x)
            }
            _ => Vector3::zeros(),
        }
    }

    pub fn angular_jacobian(&self, link: Option<usize>, k: usize) -> Vector3<f64> {
        match link {
            Some(l) if k <= l => ang(&self.s[k]),
            _ => Vector3::zeros(),
        }
    }
}

/// Soil constitutive law used during force evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum SoilLaw {
    Nonlinear,
    /// Per node and horizontal direction: (secant stiffness, damping).
    Frozen(Vec<[(f64, f64); 2]>),
}

/// Time-resolved inputs for one force evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ForceInputs<'a> {
    pub gravity: Vector3<f64>,
    /// (u, u_dot) along x per hydro strip; `None` = still water.
    pub wave: Option<&'a [(f64, f64)]>,
    /// Yaw-bearing wrench [Fx, Fy, Fz, Mx, My, Mz] in global axes.
    pub yaw: Option<[f64; 6]>,
    /// Extra wrenches at structural nodes.
    pub nodal: &'a [(usize, [f64; 6])],
    pub soil: &'a SoilLaw,
}

/// Generalized forces per coordinate, split by origin. The inertial term is
/// `M q_ddot + h(q, q_dot)`; every other term is a force acting on the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceBreakdown {
    pub inertial: DVector<f64>,
    pub spring: DVector<f64>,
    pub damper: DVector<f64>,
    pub gravity: DVector<f64>,
    pub soil: DVector<f64>,
    pub hydro: DVector<f64>,
    pub applied: DVector<f64>,
}

impl ForceBreakdown {
    fn zeros(n: usize) -> Self {
        let z = DVector::zeros(n);
        Self {
            inertial: z.clone(),
            spring: z.clone(),
            damper: z.clone(),
            gravity: z.clone(),
            soil: z.clone(),
            hydro: z.clone(),
            applied: z,
        }
    }

    pub fn external(&self) -> DVector<f64> {
        &self.spring + &self.damper + &self.gravity + &self.soil + &self.hydro + &self.applied
    }

    /// Equation-of-motion residual `M q_ddot + h - Q`.
    pub fn residual(&self) -> DVector<f64> {
        &self.inertial - self.external()
    }
}

/// Scratch space reused across evaluations.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    pub frames: Frames,
    per_link: Vec<Spatial>,
    pub out: ForceBreakdown,
    /// External minus inertial spatial force on the moving chain.
    pub root_net: Spatial,
}

impl Workspace {
    pub fn new(model: &ChainModel) -> Self {
        let n = model.n_dof();
        Self {
            frames: Frames::new(n),
            per_link: vec![Spatial::zeros(); n],
            out: ForceBreakdown::zeros(n),
            root_net: Spatial::zeros(),
        }
    }
}

/// Backward accumulation of per-link spatial forces into joint forces.
/// Returns the total spatial force carried into the root.
fn project(frames: &Frames, per_link: &mut [Spatial], out: &mut DVector<f64>) -> Spatial {
    let n = per_link.len();
    for k in (0..n).rev() {
        out[k] = frames.s[k].dot(&per_link[k]);
        if k > 0 {
            let f = per_link[k];
            per_link[k - 1] += f;
        }
    }
    per_link.first().copied().unwrap_or_else(Spatial::zeros)
}

fn clear(v: &mut [Spatial]) {
    v.iter_mut().for_each(|x| *x = Spatial::zeros());
}

/// Full force evaluation at (q, q_dot, q_ddot). Results land in `ws.out`.
pub(crate) fn evaluate(
    model: &ChainModel,
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
    inputs: &ForceInputs,
    ws: &mut Workspace,
) {
    ws.frames.compute(model, q, qd, qdd);
    let frames = &ws.frames;
    let per_link = &mut ws.per_link;
    let out = &mut ws.out;

    // inertia
    clear(per_link);
    for (k, li) in model.link_inertia.iter().enumerate() {
        if li.mass <= 0.0 {
            continue;
        }
        let r = frames.rot[k];
        let c = frames.origin[k] + r * li.com;
        let inertia = spatial_inertia(li.mass, &c, &(r * li.inertia * r.transpose()));
        let iv = inertia * frames.v[k];
        per_link[k] = inertia * frames.a[k] + cross_f(&frames.v[k], &iv);
    }
    let mut net = -project(frames, per_link, &mut out.inertial);

    // gravity
    clear(per_link);
    for (k, li) in model.link_inertia.iter().enumerate() {
        if li.mass <= 0.0 {
            continue;
        }
        let c = frames.origin[k] + frames.rot[k] * li.com;
        per_link[k] = point_force(&c, &(inputs.gravity * li.mass));
    }
    net += project(frames, per_link, &mut out.gravity);

    // soil
    clear(per_link);
    if let Some(soil) = &model.soil {
        for (i, (cfg, p)) in soil.nodes.iter().enumerate() {
            let Some(l) = p.link else { continue };
            let x = frames.position(p);
            let v = frames.velocity(p);
            let mut f = Vector3::zeros();
            for dir in 0..2 {
                let y = x[dir] - p.reference[dir];
                f[dir] = match inputs.soil {
                    SoilLaw::Nonlinear => soil_reaction_force(&soil.curves, cfg, y, v[dir]),
                    SoilLaw::Frozen(k) => {
                        frozen_reaction_force(k[i][dir].0, k[i][dir].1, y, v[dir])
                    }
                };
            }
            per_link[l] += point_force(&x, &f);
        }
    }
    net += project(frames, per_link, &mut out.soil);

    // hydro
    clear(per_link);
    if let Some(h) = &model.hydro {
        for (i, (strip, p)) in h.strips.iter().enumerate() {
            let Some(l) = p.link else { continue };
            let x = frames.position(p);
            let v = frames.velocity(p);
            let a = frames.acceleration(p);
            let (uw, duw) = inputs.wave.map(|w| w[i]).unwrap_or((0.0, 0.0));
            let fx = morison_strip_force(strip.diameter, uw, duw, v.x, a.x, &h.coefficients);
            let fy = morison_strip_force(strip.diameter, 0.0, 0.0, v.y, a.y, &h.coefficients);
            per_link[l] += point_force(&x, &(Vector3::new(fx, fy, 0.0) * strip.length));
        }
    }
    net += project(frames, per_link, &mut out.hydro);

    // applied wrenches
    clear(per_link);
    let mut apply = |p: &PointRef, w: &[f64; 6]| {
        if let Some(l) = p.link {
            let x = frames.position(p);
            let f = Vector3::new(w[0], w[1], w[2]);
            per_link[l] +=
                point_force(&x, &f) + spatial(Vector3::new(w[3], w[4], w[5]), Vector3::zeros());
        }
    };
    if let Some(w) = &inputs.yaw {
        apply(&model.yaw_bearing(), w);
    }
    for (node, w) in inputs.nodal {
        apply(&model.nodes[*node], w);
    }
    net += project(frames, per_link, &mut out.applied);

    ws.root_net = net;

    // joint springs and dampers
    for (k, d) in model.dofs.iter().enumerate() {
        if let super::model::DofKind::Joint { cluster, axis } = d {
            let j = &model.joints[*cluster];
            out.spring[k] = -j.stiffness[*axis] * q[k];
            out.damper[k] = -j.damping[*axis] * qd[k];
        } else {
            out.spring[k] = 0.0;
            out.damper[k] = 0.0;
        }
    }
    if let Some(c) = &model.global_damping {
        let qd_v = DVector::from_column_slice(qd);
        out.damper -= c * qd_v;
    }
}

/// Structural plus hydrodynamic added-mass matrix at `q`, by composite
/// rigid-body recursion. Added mass enters as a horizontal translational
/// inertia at each strip point.
pub(crate) fn mass_matrix_with(model: &ChainModel, q: &[f64], frames: &mut Frames) -> DMatrix<f64> {
    let n = model.n_dof();
    let zeros = vec![0.0; n];
    frames.compute(model, q, &zeros, &zeros);
    let mut composite = vec![Matrix6::<f64>::zeros(); n];
    for (k, li) in model.link_inertia.iter().enumerate() {
        if li.mass > 0.0 {
            let r = frames.rot[k];
            let c = frames.origin[k] + r * li.com;
            composite[k] += spatial_inertia(li.mass, &c, &(r * li.inertia * r.transpose()));
        }
    }
    if let Some(h) = &model.hydro {
        for (strip, p) in &h.strips {
            let Some(l) = p.link else { continue };
            let m = added_mass_per_length(&h.coefficients, strip.diameter) * strip.length;
            let a = Matrix3::from_diagonal(&Vector3::new(m, m, 0.0));
            composite[l] += point_translational_inertia(&frames.position(p), &a);
        }
    }
    for k in (1..n).rev() {
        let c = composite[k];
        composite[k - 1] += c;
    }
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let f = composite[k] * frames.s[k];
        for j in 0..=k {
            let v = frames.s[j].dot(&f);
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    m
}

/// Kinetic energy summed body by body, including added-mass kinetic energy;
/// independent of the mass-matrix recursion.
pub(crate) fn kinetic_energy(model: &ChainModel, q: &[f64], qd: &[f64]) -> f64 {
    let n = model.n_dof();
    let mut frames = Frames::new(n);
    frames.compute(model, q, qd, &vec![0.0; n]);
    let mut t = 0.0;
    for (k, li) in model.link_inertia.iter().enumerate() {
        if li.mass <= 0.0 {
            continue;
        }
        let r = frames.rot[k];
        let com = PointRef {
            link: Some(k),
            local: li.com,
            reference: Vector3::zeros(),
        };
        let v = frames.velocity(&com);
        let w = ang(&frames.v[k]);
        t += 0.5 * li.mass * v.norm_squared() + 0.5 * w.dot(&(r * li.inertia * r.transpose() * w));
    }
    if let Some(h) = &model.hydro {
        for (strip, p) in &h.strips {
            let m = added_mass_per_length(&h.coefficients, strip.diameter) * strip.length;
            let v = frames.velocity(p);
            t += 0.5 * m * (v.x * v.x + v.y * v.y);
        }
    }
    t
}

/// Gravitational potential energy relative to z = 0.
pub(crate) fn gravity_potential(model: &ChainModel, q: &[f64], gravity: &Vector3<f64>) -> f64 {
    let n = model.n_dof();
    let mut frames = Frames::new(n);
    let zeros = vec![0.0; n];
    frames.compute(model, q, &zeros, &zeros);
    model
        .link_inertia
        .iter()
        .enumerate()
        .filter(|(_, li)| li.mass > 0.0)
        .map(|(k, li)| -li.mass * gravity.dot(&(frames.origin[k] + frames.rot[k] * li.com)))
        .sum()
}
