use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{DiscretizationPlan, HalfElementBody, JointSection};
use crate::hydro::{self, MorisonCoefficients, StripElement};
use crate::soil::{self, PYCurveSet, SoilNodeConfig};

/// Support at the lowest body base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootCondition {
    /// Lowest body welded to ground; no root degrees of freedom.
    Clamped,
    /// Pile tip free to translate and rotate horizontally on an ideal
    /// vertical support (torsion held); lateral restraint comes from soil.
    SoilSupported,
}

/// Lumped mass with inertia attached to a structural node (e.g. the RNA).
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    pub mass: f64,
    /// Inertia about the point's own centre of mass, global axes.
    pub inertia: Matrix3<f64>,
    /// Centre of mass relative to the attachment node, global axes.
    pub cm_offset: Vector3<f64>,
    /// Index into the element-boundary nodes (0 = root, n = top).
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointCluster {
    pub section: JointSection,
    /// Spring constants about local x, y (bending) and z (torsion).
    pub stiffness: [f64; 3],
    pub damping: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    RootTranslation(usize),
    RootRotation(usize),
    /// `axis`: 0 = about local x, 1 = about local y, 2 = torsion.
    Joint {
        cluster: usize,
        axis: usize,
    },
}

/// One single-axis joint of the serial chain.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Link {
    /// Joint location in the parent frame, reference configuration.
    pub offset: Vector3<f64>,
    pub axis: usize,
    pub prismatic: bool,
    /// Undeformed elevation of the frame origin.
    pub elevation: f64,
}

/// Rigid mass carried by a link, in link coordinates.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinkInertia {
    pub mass: f64,
    pub com: Vector3<f64>,
    pub inertia: Matrix3<f64>,
}

impl LinkInertia {
    fn empty() -> Self {
        Self {
            mass: 0.0,
            com: Vector3::zeros(),
            inertia: Matrix3::zeros(),
        }
    }

    fn add(&mut self, mass: f64, com: Vector3<f64>, inertia: Matrix3<f64>) {
        let total = self.mass + mass;
        if total <= 0.0 {
            return;
        }
        let c = (self.com * self.mass + com * mass) / total;
        let shift =
            |m: f64, d: Vector3<f64>| m * (Matrix3::identity() * d.dot(&d) - d * d.transpose());
        self.inertia =
            self.inertia + shift(self.mass, self.com - c) + inertia + shift(mass, com - c);
        self.mass = total;
        self.com = c;
    }
}

/// A material point fixed to a link (`None` = ground).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRef {
    pub link: Option<usize>,
    pub local: Vector3<f64>,
    pub reference: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoilBinding {
    pub curves: PYCurveSet,
    pub nodes: Vec<(SoilNodeConfig, PointRef)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydroBinding {
    pub coefficients: MorisonCoefficients,
    pub strips: Vec<(StripElement, PointRef)>,
    pub swl_elevation: f64,
    pub seabed_elevation: f64,
}

/// Soil and hydro inputs for [`assemble_chain`].
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    pub soil: Option<(PYCurveSet, Vec<SoilNodeConfig>)>,
    pub hydro: Option<HydroSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroSpec {
    pub coefficients: MorisonCoefficients,
    pub swl_elevation: f64,
    pub seabed_elevation: f64,
    pub strips_per_body: usize,
}

/// The assembled chain. Immutable once built, apart from damping
/// calibration which produces a modified copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    pub bodies: Vec<HalfElementBody>,
    pub plan: DiscretizationPlan,
    pub root: RootCondition,
    pub joints: Vec<JointCluster>,
    pub dofs: Vec<DofKind>,
    /// Element-boundary nodes, root to top.
    pub nodes: Vec<PointRef>,
    pub point_masses: Vec<PointMass>,
    pub soil: Option<SoilBinding>,
    pub hydro: Option<HydroBinding>,
    /// Constant generalized damping matrix added to the joint dampers
    /// (mass-proportional part of a Rayleigh pair).
    pub global_damping: Option<DMatrix<f64>>,
    pub(crate) links: Vec<Link>,
    pub(crate) link_inertia: Vec<LinkInertia>,
    pub(crate) first_cluster_dof: usize,
}

impl ChainModel {
    pub fn n_dof(&self) -> usize {
        self.dofs.len()
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn root_elevation(&self) -> f64 {
        self.plan.element_boundaries[0]
    }

    pub fn top_elevation(&self) -> f64 {
        *self.plan.element_boundaries.last().unwrap()
    }

    /// Generalized coordinate index of a joint cluster axis.
    pub fn joint_dof(&self, cluster: usize, axis: usize) -> usize {
        self.first_cluster_dof + 3 * cluster + axis
    }

    pub fn yaw_bearing(&self) -> PointRef {
        *self.nodes.last().unwrap()
    }

    /// Node index closest to an elevation.
    pub fn nearest_node(&self, elevation: f64) -> usize {
        nearest(&self.plan.element_boundaries, elevation)
    }

    /// Joint cluster closest to an elevation.
    pub fn nearest_joint(&self, elevation: f64) -> usize {
        nearest(&self.plan.joint_elevations(), elevation)
    }

    /// Diagonal of joint spring constants per generalized coordinate.
    pub fn joint_stiffness_diagonal(&self) -> Vec<f64> {
        self.per_dof(|j, a| j.stiffness[a])
    }

    pub fn joint_damping_diagonal(&self) -> Vec<f64> {
        self.per_dof(|j, a| j.damping[a])
    }

    fn per_dof(&self, f: impl Fn(&JointCluster, usize) -> f64) -> Vec<f64> {
        self.dofs
            .iter()
            .map(|d| match d {
                DofKind::Joint { cluster, axis } => f(&self.joints[*cluster], *axis),
                _ => 0.0,
            })
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.properties.mass).sum::<f64>()
            + self.point_masses.iter().map(|p| p.mass).sum::<f64>()
    }

    /// Locates the material point at an undeformed elevation on the axis,
    /// plus an offset in global axes.
    pub fn point_at(&self, elevation: f64, offset: Vector3<f64>) -> PointRef {
        let link = self.link_for_elevation(elevation);
        let origin = match link {
            Some(l) => Vector3::new(0.0, 0.0, self.links[l].elevation),
            None => Vector3::zeros(),
        };
        let reference = Vector3::new(0.0, 0.0, elevation) + offset;
        PointRef {
            link,
            local: reference - origin,
            reference,
        }
    }

    fn link_for_elevation(&self, elevation: f64) -> Option<usize> {
        let joints = &self.plan.joints;
        let above = joints.iter().rposition(|j| j.elevation <= elevation);
        match above {
            Some(c) => Some(self.joint_dof(c, 2)),
            None if self.first_cluster_dof > 0 => Some(self.first_cluster_dof - 1),
            None => None,
        }
    }

    /// Replaces the joint dampers; `damping[c]` holds the three axis values.
    pub fn with_joint_damping(&self, damping: &[[f64; 3]]) -> Result<ChainModel> {
        if damping.len() != self.joints.len() || damping.iter().flatten().any(|c| !(*c >= 0.0)) {
            return Err(Error::Config(
                "joint damping must be non-negative, one triple per joint".into(),
            ));
        }
        let mut model = self.clone();
        for (j, c) in model.joints.iter_mut().zip(damping) {
            j.damping = *c;
        }
        Ok(model)
    }
}

fn nearest(values: &[f64], x: f64) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().partial_cmp(&(b.1 - x).abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn diag(v: [f64; 3]) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::from(v))
}

/// Builds the serial chain: optional root DOFs, then one x/y/z revolute
/// triple per joint cluster, with each half body carried by the link just
/// below it.
pub fn assemble_chain(
    bodies: Vec<HalfElementBody>,
    plan: DiscretizationPlan,
    attachments: &[PointMass],
    bindings: &Bindings,
    root: RootCondition,
) -> Result<ChainModel> {
    let n_el = plan.joints.len();
    if n_el == 0 || bodies.len() != 2 * n_el || plan.element_boundaries.len() != n_el + 1 {
        return Err(Error::Config(format!(
            "inconsistent discretization: {} joints, {} bodies, {} boundaries",
            n_el,
            bodies.len(),
            plan.element_boundaries.len()
        )));
    }
    if root == RootCondition::SoilSupported && bindings.soil.is_none() {
        return Err(Error::Config(
            "a soil-supported root needs p-y curves and soil nodes".into(),
        ));
    }
    let root_z = plan.element_boundaries[0];

    let mut links = Vec::new();
    let mut dofs = Vec::new();
    if root == RootCondition::SoilSupported {
        for (i, (axis, prismatic)) in [(0, true), (1, true), (0, false), (1, false)]
            .into_iter()
            .enumerate()
        {
            links.push(Link {
                offset: if i == 0 {
                    Vector3::new(0.0, 0.0, root_z)
                } else {
                    Vector3::zeros()
                },
                axis,
                prismatic,
                elevation: root_z,
            });
            dofs.push(if prismatic {
                DofKind::RootTranslation(axis)
            } else {
                DofKind::RootRotation(axis)
            });
        }
    }
    let first_cluster_dof = links.len();
    let mut prev_z = if root == RootCondition::SoilSupported {
        root_z
    } else {
        0.0
    };
    let mut joints = Vec::with_capacity(n_el);
    for (c, js) in plan.joints.iter().enumerate() {
        for axis in 0..3 {
            links.push(Link {
                offset: if axis == 0 {
                    Vector3::new(0.0, 0.0, js.elevation - prev_z)
                } else {
                    Vector3::zeros()
                },
                axis,
                prismatic: false,
                elevation: js.elevation,
            });
            dofs.push(DofKind::Joint { cluster: c, axis });
        }
        prev_z = js.elevation;
        if !(js.bending_stiffness > 0.0 && js.torsion_stiffness > 0.0) {
            return Err(Error::Config(format!(
                "joint {c} has a non-positive spring constant"
            )));
        }
        joints.push(JointCluster {
            section: *js,
            stiffness: [
                js.bending_stiffness,
                js.bending_stiffness,
                js.torsion_stiffness,
            ],
            damping: [0.0; 3],
        });
    }

    let mut model = ChainModel {
        bodies,
        plan,
        root,
        joints,
        dofs,
        nodes: Vec::new(),
        point_masses: attachments.to_vec(),
        soil: None,
        hydro: None,
        global_damping: None,
        link_inertia: vec![LinkInertia::empty(); links.len()],
        links,
        first_cluster_dof,
    };

    model.nodes = model
        .plan
        .element_boundaries
        .iter()
        .map(|&z| model.point_at(z, Vector3::zeros()))
        .collect();

    for b in &model.bodies {
        let mid = 0.5 * (b.base_elevation + b.top_elevation);
        let p = model.point_at(mid, Vector3::zeros());
        if let Some(link) = p.link {
            let com = Vector3::new(
                0.0,
                0.0,
                p.local.z - (mid - b.base_elevation) + b.properties.z_cm,
            );
            let p_ = &b.properties;
            model.link_inertia[link].add(p_.mass, com, diag([p_.i_xx, p_.i_yy, p_.i_zz]));
        }
    }

    for pm in attachments {
        if pm.node >= model.nodes.len() {
            return Err(Error::Config(format!(
                "point mass attached to node {} but the chain has {} nodes",
                pm.node,
                model.nodes.len()
            )));
        }
        if !(pm.mass >= 0.0) {
            return Err(Error::Config("point mass must be non-negative".into()));
        }
        let z = model.plan.element_boundaries[pm.node];
        let p = model.point_at(z, pm.cm_offset);
        if let Some(link) = p.link {
            model.link_inertia[link].add(pm.mass, p.local, pm.inertia);
        }
    }

    if let Some((curves, nodes)) = &bindings.soil {
        let mut bound = Vec::with_capacity(nodes.len());
        for n in nodes {
            n.validate()?;
            if n.elevation < model.root_elevation() - 1e-9 || n.elevation > model.top_elevation() {
                return Err(Error::Config(format!(
                    "soil node at {} m lies outside the structure",
                    n.elevation
                )));
            }
            bound.push((*n, model.point_at(n.elevation, Vector3::zeros())));
        }
        if root == RootCondition::SoilSupported {
            let embedded = nodes
                .iter()
                .map(|n| n.elevation)
                .fold(f64::NEG_INFINITY, f64::max)
                - root_z;
            soil::check_strip_coverage(nodes, embedded)?;
        }
        model.soil = Some(SoilBinding {
            curves: curves.clone(),
            nodes: bound,
        });
    }

    if let Some(spec) = &bindings.hydro {
        let mut strips = Vec::new();
        for (i, b) in model.bodies.iter().enumerate() {
            for s in hydro::strips_for_body(
                i,
                b.base_elevation,
                b.top_elevation,
                spec.seabed_elevation,
                spec.swl_elevation,
                spec.strips_per_body,
                |z| b.outer_diameter_at(z),
            ) {
                strips.push((s, model.point_at(s.elevation, Vector3::zeros())));
            }
        }
        model.hydro = Some(HydroBinding {
            coefficients: spec.coefficients,
            strips,
            swl_elevation: spec.swl_elevation,
            seabed_elevation: spec.seabed_elevation,
        });
    }

    Ok(model)
}
