//! Multibody chain assembly and the structural solvers.

mod forces;
mod kinematics;
mod linear;
mod loads;
mod model;
mod simulate;
mod statics;

pub use forces::{
    generalized_forces, internal_moment, mass_matrix, mechanical_energy, node_displacements,
    root_reaction, InternalMoment, SystemState,
};
pub use kinematics::{ForceBreakdown, SoilLaw};
pub use linear::{
    calibrate_joint_damping, complex_damping_ratios, eigenmodes, frozen_soil, linearize,
    DampingCalibration, DampingTarget, LinearSystem, LinearizeOptions, ModalResult, ModeKind,
    ModeShape, SoilLinearization,
};
pub use loads::{EnvironmentLoads, LoadSeries, LOAD_HEADER};
pub use model::{
    assemble_chain, Bindings, ChainModel, DofKind, HydroBinding, HydroSpec, JointCluster,
    PointMass, PointRef, RootCondition, SoilBinding,
};
pub use simulate::{simulate, Channel, Diagnostic, Integrator, SimulationConfig, TimeSeriesFrame};
pub use statics::{characteristic_torque, static_equilibrium, Equilibrium};

#[cfg(test)]
mod tests;
