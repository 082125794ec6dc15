use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};

use super::forces::{mass_matrix, Evaluator};
use super::kinematics::{Frames, SoilLaw};
use super::loads::EnvironmentLoads;
use super::model::ChainModel;
use crate::error::{Error, Result};
use crate::soil::{damping_coefficient, secant_stiffness};

/// How the soil springs enter the linearized model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SoilLinearization {
    /// Spring and dashpot frozen at the secant values of the operating point.
    #[default]
    Secant,
    /// Tangent of the nonlinear law at the operating point.
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizeOptions {
    pub step: f64,
    pub soil: SoilLinearization,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        Self {
            step: 1e-6,
            soil: SoilLinearization::Secant,
        }
    }
}

/// `M x'' + C x' + K x = 0` about `q0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub q0: DVector<f64>,
    pub m: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

/// Secant spring and dashpot per soil node and direction at configuration q.
pub fn frozen_soil(model: &ChainModel, q: &DVector<f64>) -> Result<Vec<[(f64, f64); 2]>> {
    let Some(soil) = &model.soil else {
        return Ok(Vec::new());
    };
    let n = model.n_dof();
    let mut frames = Frames::new(n);
    let zeros = vec![0.0; n];
    frames.compute(model, q.as_slice(), &zeros, &zeros);
    soil.nodes
        .iter()
        .map(|(cfg, p)| {
            let x = frames.position(p);
            let mut out = [(0.0, 0.0); 2];
            for (dir, slot) in out.iter_mut().enumerate() {
                let y = x[dir] - p.reference[dir];
                let k = secant_stiffness(&soil.curves, cfg.depth, y, cfg.strip_length);
                *slot = (k, damping_coefficient(k, cfg.beta_s, cfg.f_load)?);
            }
            Ok(out)
        })
        .collect()
}

fn soil_law(model: &ChainModel, q0: &DVector<f64>, opts: &LinearizeOptions) -> Result<SoilLaw> {
    Ok(match opts.soil {
        SoilLinearization::Secant => SoilLaw::Frozen(frozen_soil(model, q0)?),
        SoilLinearization::Tangent => SoilLaw::Nonlinear,
    })
}

/// Linearizes about `q0` at rest. Joint springs and dampers enter exactly;
/// everything else by central differences.
pub fn linearize(
    model: &ChainModel,
    env: &EnvironmentLoads,
    q0: &DVector<f64>,
    opts: &LinearizeOptions,
) -> Result<LinearSystem> {
    let n = model.n_dof();
    if q0.len() != n {
        return Err(Error::Config(format!(
            "q0 has {} entries, model has {n} DOFs",
            q0.len()
        )));
    }
    if !(opts.step > 0.0) {
        return Err(Error::Config(
            "finite-difference step must be positive".into(),
        ));
    }
    let mut ev = Evaluator::new(model, env, soil_law(model, q0, opts)?)?;
    let h = opts.step;
    let zeros = vec![0.0; n];

    let mut k = DMatrix::zeros(n, n);
    let mut x = q0.clone();
    for j in 0..n {
        let mut col = DVector::zeros(n);
        for (sign, dx) in [(1.0, h), (-1.0, -h)] {
            x[j] = q0[j] + dx;
            let f = ev.eval(x.as_slice(), &zeros, &zeros);
            col += (f.residual() + &f.spring) * sign;
        }
        x[j] = q0[j];
        k.set_column(j, &(col / (2.0 * h)));
    }
    for (j, kj) in model.joint_stiffness_diagonal().into_iter().enumerate() {
        k[(j, j)] += kj;
    }

    let mut c = DMatrix::zeros(n, n);
    let mut v = DVector::<f64>::zeros(n);
    for j in 0..n {
        let mut col = DVector::zeros(n);
        for (sign, dv) in [(1.0, h), (-1.0, -h)] {
            v[j] = dv;
            let f = ev.eval(q0.as_slice(), v.as_slice(), &zeros);
            col += (f.residual() + &f.damper) * sign;
        }
        v[j] = 0.0;
        c.set_column(j, &(col / (2.0 * h)));
    }
    for (j, cj) in model.joint_damping_diagonal().into_iter().enumerate() {
        c[(j, j)] += cj;
    }
    if let Some(g) = &model.global_damping {
        c += g;
    }

    Ok(LinearSystem {
        q0: q0.clone(),
        m: mass_matrix(model, q0)?,
        c,
        k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    ForeAft,
    SideSide,
    Torsion,
}

impl ModeKind {
    pub fn label(self) -> &'static str {
        match self {
            ModeKind::ForeAft => "fore-aft",
            ModeKind::SideSide => "side-side",
            ModeKind::Torsion => "torsion",
        }
    }
}

/// Per-node `[ux, uy, uz, rx, ry, rz]` at the element-boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeShape {
    pub elevations: Vec<f64>,
    pub components: Vec<[f64; 6]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalResult {
    /// Ascending, Hz.
    pub frequencies: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    pub kinds: Vec<ModeKind>,
    pub shapes: Vec<ModeShape>,
    /// Mass-normalized generalized eigenvectors, one column per mode.
    pub vectors: DMatrix<f64>,
}

impl ModalResult {
    /// Index of the `rank`-th (0-based) mode of a kind.
    pub fn nth_of_kind(&self, kind: ModeKind, rank: usize) -> Option<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == kind)
            .nth(rank)
            .map(|(i, _)| i)
    }
}

const DEGENERATE_GAP: f64 = 1e-6;

/// Solves `K phi = omega^2 M phi` and post-processes shapes, labels and
/// damping ratios.
pub fn eigenmodes(model: &ChainModel, sys: &LinearSystem) -> Result<ModalResult> {
    let n = sys.m.nrows();
    if n != model.n_dof() || sys.k.shape() != (n, n) || sys.c.shape() != (n, n) {
        return Err(Error::Config(
            "linear system does not match the model".into(),
        ));
    }
    let chol = sys
        .m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let ksym = (&sys.k + sys.k.transpose()) * 0.5;
    let a = l
        .solve_lower_triangular(&ksym)
        .and_then(|x| l.solve_lower_triangular(&x.transpose()))
        .ok_or_else(|| Error::Numerical("mass factor is singular".into()))?;
    let a = (&a + a.transpose()) * 0.5;
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let lt = l.transpose();
    let mut lambdas = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let lam = eig.eigenvalues[i];
        if !(lam > 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive stiffness eigenvalue {lam:e}"
            )));
        }
        let phi = lt
            .solve_upper_triangular(&eig.eigenvectors.column(i).into_owned())
            .ok_or_else(|| Error::Numerical("mass factor is singular".into()))?;
        vectors.set_column(col, &phi);
        lambdas.push(lam);
    }

    let nodal = NodalMap::new(model, &sys.q0);
    align_degenerate_pairs(&lambdas, &mut vectors, &nodal);

    let mut kinds = Vec::with_capacity(n);
    let mut shapes = Vec::with_capacity(n);
    for j in 0..n {
        let raw = nodal.shape(&vectors.column(j).into_owned());
        let kind = nodal.classify(&raw);
        shapes.push(normalize_shape(raw, kind, &nodal.elevations));
        kinds.push(kind);
    }

    let omegas: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let damping_ratios = if sys.c.iter().all(|v| *v == 0.0) {
        vec![0.0; n]
    } else {
        complex_damping_ratios(sys, &omegas)?
    };
    Ok(ModalResult {
        frequencies: omegas.iter().map(|w| w / (2.0 * PI)).collect(),
        damping_ratios,
        kinds,
        shapes,
        vectors,
    })
}

/// Maps generalized vectors to nodal translations and rotations at q0.
struct NodalMap {
    elevations: Vec<f64>,
    radii: Vec<f64>,
    // per node: translational and rotational Jacobians (3 x n each)
    jt: Vec<DMatrix<f64>>,
    jr: Vec<DMatrix<f64>>,
}

impl NodalMap {
    fn new(model: &ChainModel, q0: &DVector<f64>) -> Self {
        let n = model.n_dof();
        let mut frames = Frames::new(n);
        let zeros = vec![0.0; n];
        frames.compute(model, q0.as_slice(), &zeros, &zeros);
        let mut jt = Vec::new();
        let mut jr = Vec::new();
        for p in &model.nodes {
            let mut t = DMatrix::zeros(3, n);
            let mut r = DMatrix::zeros(3, n);
            for k in 0..n {
                t.set_column(k, &frames.point_jacobian(p, k));
                r.set_column(k, &frames.angular_jacobian(p.link, k));
            }
            jt.push(t);
            jr.push(r);
        }
        let elevations = model.plan.element_boundaries.clone();
        let radii = elevations
            .iter()
            .map(|&z| 0.5 * outer_diameter(model, z))
            .collect();
        Self {
            elevations,
            radii,
            jt,
            jr,
        }
    }

    fn shape(&self, phi: &DVector<f64>) -> Vec<[f64; 6]> {
        self.jt
            .iter()
            .zip(&self.jr)
            .map(|(t, r)| {
                let a: Vector3<f64> = (t * phi).fixed_rows::<3>(0).into_owned();
                let b: Vector3<f64> = (r * phi).fixed_rows::<3>(0).into_owned();
                [a.x, a.y, a.z, b.x, b.y, b.z]
            })
            .collect()
    }

    fn measures(&self, shape: &[[f64; 6]]) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (c, r) in shape.iter().zip(&self.radii) {
            m[0] += c[0] * c[0];
            m[1] += c[1] * c[1];
            m[2] += (c[5] * r).powi(2);
        }
        m
    }

    fn classify(&self, shape: &[[f64; 6]]) -> ModeKind {
        let m = self.measures(shape);
        if m[2] >= m[0] && m[2] >= m[1] {
            ModeKind::Torsion
        } else if m[0] >= m[1] {
            ModeKind::ForeAft
        } else {
            ModeKind::SideSide
        }
    }
}

fn outer_diameter(model: &ChainModel, z: f64) -> f64 {
    model
        .bodies
        .iter()
        .find(|b| z >= b.base_elevation && z <= b.top_elevation)
        .or_else(|| model.bodies.last())
        .map_or(0.0, |b| b.outer_diameter_at(z))
}

/// Rotates nearly repeated pairs so that the first member carries the
/// most fore-aft translation.
fn align_degenerate_pairs(lambdas: &[f64], vectors: &mut DMatrix<f64>, nodal: &NodalMap) {
    let mut i = 0;
    while i + 1 < lambdas.len() {
        if lambdas[i + 1] - lambdas[i] > DEGENERATE_GAP * lambdas[i] {
            i += 1;
            continue;
        }
        let a = vectors.column(i).into_owned();
        let b = vectors.column(i + 1).into_owned();
        let (sa, sb) = (nodal.shape(&a), nodal.shape(&b));
        let (mut gaa, mut gab, mut gbb) = (0.0, 0.0, 0.0);
        for (x, y) in sa.iter().zip(&sb) {
            gaa += x[0] * x[0];
            gab += x[0] * y[0];
            gbb += y[0] * y[0];
        }
        let theta = 0.5 * (2.0 * gab).atan2(gaa - gbb);
        let (s, c) = theta.sin_cos();
        vectors.set_column(i, &(&a * c + &b * s));
        vectors.set_column(i + 1, &(&b * c - &a * s));
        i += 2;
    }
}

fn normalize_shape(mut comps: Vec<[f64; 6]>, kind: ModeKind, elevations: &[f64]) -> ModeShape {
    let range = if kind == ModeKind::Torsion {
        3..6
    } else {
        0..3
    };
    let mut peak = 0.0f64;
    for c in &comps {
        for v in &c[range.clone()] {
            if v.abs() > peak.abs() {
                peak = *v;
            }
        }
    }
    if peak != 0.0 {
        for c in &mut comps {
            for v in c.iter_mut() {
                *v /= peak;
            }
        }
    }
    ModeShape {
        elevations: elevations.to_vec(),
        components: comps,
    }
}

/// Modal damping ratios from the eigenvalues of the first-order system,
/// matched to the undamped frequencies.
pub fn complex_damping_ratios(sys: &LinearSystem, omegas: &[f64]) -> Result<Vec<f64>> {
    let n = sys.m.nrows();
    let chol = sys
        .m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let mk = chol.solve(&sys.k);
    let mc = chol.solve(&sys.c);
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).fill_with_identity();
    a.view_mut((n, 0), (n, n)).copy_from(&(-mk));
    a.view_mut((n, n), (n, n)).copy_from(&(-mc));
    let eig = a.complex_eigenvalues();
    let mut candidates: Vec<(f64, f64)> = eig
        .iter()
        .filter(|l| l.im > 0.0)
        .map(|l| (l.norm(), -l.re / l.norm()))
        .collect();
    let mut out = Vec::with_capacity(omegas.len());
    for &w in omegas {
        let best = candidates
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 .0 - w).abs().partial_cmp(&(y.1 .0 - w).abs()).unwrap())
            .map(|(i, _)| i);
        match best {
            Some(i) => out.push(candidates.swap_remove(i).1),
            None => out.push(1.0),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingTarget {
    /// 0-based index into the ascending mode list.
    pub mode: usize,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingCalibration {
    pub model: ChainModel,
    /// Damper coefficients per joint cluster and axis.
    pub joint_damping: Vec<[f64; 3]>,
    /// Joint dampers are this multiple of the joint springs.
    pub stiffness_coefficient: f64,
    /// Mass-proportional coefficient of the global damping matrix.
    pub mass_coefficient: f64,
    pub achieved: Vec<f64>,
    pub iterations: usize,
}

const CALIBRATION_ITERATIONS: usize = 10;
const CALIBRATION_TOL: f64 = 0.01;

/// Sets joint dampers proportional to the joint springs (one target) or a
/// Rayleigh pair of joint dampers plus a mass-proportional global matrix
/// (two targets), iterating until the complex eigenanalysis of the
/// linearized system meets every target within 1 %.
pub fn calibrate_joint_damping(
    model: &ChainModel,
    env: &EnvironmentLoads,
    q0: &DVector<f64>,
    targets: &[DampingTarget],
    opts: &LinearizeOptions,
) -> Result<DampingCalibration> {
    if targets.len() > 2 {
        return Err(Error::Config(
            "at most two damping targets can be met".into(),
        ));
    }
    if targets
        .iter()
        .any(|t| !(t.zeta >= 0.0 && t.zeta < 1.0) || t.mode >= model.n_dof())
    {
        return Err(Error::Config(
            "damping targets need 0 <= zeta < 1 and an existing mode".into(),
        ));
    }
    let mut base = model.with_joint_damping(&vec![[0.0; 3]; model.n_joints()])?;
    base.global_damping = None;
    let sys0 = linearize(&base, env, q0, opts)?;
    let omegas: Vec<f64> = eigenmodes(
        &base,
        &LinearSystem {
            c: DMatrix::zeros(sys0.m.nrows(), sys0.m.nrows()),
            ..sys0.clone()
        },
    )?
    .frequencies
    .iter()
    .map(|f| 2.0 * PI * f)
    .collect();
    let kj = DMatrix::from_diagonal(&DVector::from_vec(base.joint_stiffness_diagonal()));
    let achieved_at = |alpha: f64, mass: f64| -> Result<Vec<f64>> {
        let sys = LinearSystem {
            c: &sys0.c + &kj * alpha + &sys0.m * mass,
            ..sys0.clone()
        };
        let all = if sys.c.iter().all(|v| *v == 0.0) {
            vec![0.0; omegas.len()]
        } else {
            complex_damping_ratios(&sys, &omegas)?
        };
        Ok(targets.iter().map(|t| all[t.mode]).collect())
    };
    let wanted: Vec<f64> = targets.iter().map(|t| t.zeta).collect();
    let converged = |z: &[f64]| {
        z.iter().zip(&wanted).all(|(a, t)| {
            (a - t).abs() <= CALIBRATION_TOL * t.max(1e-12) || (*t == 0.0 && a.abs() < 1e-9)
        })
    };

    let background = achieved_at(0.0, 0.0)?;
    let mut alpha = 0.0;
    let mut mass = 0.0;
    let mut achieved = background.clone();
    let mut iterations = 0;
    if !converged(&achieved) {
        let fail = |achieved: Vec<f64>| Error::Calibration {
            targets: wanted.clone(),
            achieved,
        };
        match targets.len() {
            1 => {
                let w = omegas[targets[0].mode];
                alpha = 2.0 * (wanted[0] - background[0]) / w;
                while iterations < CALIBRATION_ITERATIONS {
                    if alpha < 0.0 {
                        return Err(fail(achieved));
                    }
                    iterations += 1;
                    achieved = achieved_at(alpha, 0.0)?;
                    if converged(&achieved) {
                        break;
                    }
                    let gain = achieved[0] - background[0];
                    if !(gain > 0.0) {
                        return Err(fail(achieved));
                    }
                    alpha *= (wanted[0] - background[0]) / gain;
                }
            }
            _ => {
                let (wi, wj) = (omegas[targets[0].mode], omegas[targets[1].mode]);
                let sys = nalgebra::Matrix2::new(0.5 / wi, 0.5 * wi, 0.5 / wj, 0.5 * wj);
                let inv = sys.try_inverse().ok_or_else(|| {
                    Error::Config("two damping targets on modes with equal frequency".into())
                })?;
                let mut eff =
                    nalgebra::Vector2::new(wanted[0] - background[0], wanted[1] - background[1]);
                while iterations < CALIBRATION_ITERATIONS {
                    let sol = inv * eff;
                    mass = sol[0];
                    alpha = sol[1];
                    if mass < 0.0 || alpha < 0.0 {
                        return Err(fail(achieved));
                    }
                    iterations += 1;
                    achieved = achieved_at(alpha, mass)?;
                    if converged(&achieved) {
                        break;
                    }
                    eff += nalgebra::Vector2::new(wanted[0] - achieved[0], wanted[1] - achieved[1]);
                }
            }
        }
        if !converged(&achieved) {
            return Err(fail(achieved));
        }
    }

    let joint_damping: Vec<[f64; 3]> = base
        .joints
        .iter()
        .map(|j| j.stiffness.map(|k| alpha * k))
        .collect();
    let mut out = base.with_joint_damping(&joint_damping)?;
    if mass > 0.0 {
        out.global_damping = Some(&sys0.m * mass);
    }
    Ok(DampingCalibration {
        model: out,
        joint_damping,
        stiffness_coefficient: alpha,
        mass_coefficient: mass,
        achieved,
        iterations,
    })
}
