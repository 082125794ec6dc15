use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{DVector, Matrix3, Vector3};
use proptest::prelude::*;

use super::*;
use crate::geometry::{
    discretize_structure, frustum_mass_properties, FrustumSegment, Refinement, Station,
    StationTable,
};
use crate::hydro::{MorisonCoefficients, GRAVITY};
use crate::soil::{soil_nodes, PYCurve, PYCurveSet};

const E: f64 = 2.1e11;
const G: f64 = 8.08e10;
const RHO: f64 = 7850.0;

fn table(bottom: f64, top: f64, d: f64, t: f64) -> StationTable {
    let st = |z| Station {
        elevation: z,
        outer_diameter: d,
        wall_thickness: t,
        density: RHO,
        youngs_modulus: E,
        shear_modulus: G,
    };
    StationTable::new(vec![st(bottom), st(top)]).unwrap()
}

fn clamped(n: usize, length: f64, attachments: &[PointMass]) -> ChainModel {
    tube(n, length, 4.0, 0.04, attachments)
}

fn tube(n: usize, length: f64, d: f64, t: f64, attachments: &[PointMass]) -> ChainModel {
    let (bodies, plan) =
        discretize_structure(&table(0.0, length, d, t), n, &Refinement::Uniform).unwrap();
    assemble_chain(
        bodies,
        plan,
        attachments,
        &Bindings::default(),
        RootCondition::Clamped,
    )
    .unwrap()
}

fn py_set() -> PYCurveSet {
    PYCurveSet::new(vec![
        PYCurve::new(0.0, vec![0.0, 0.02, 0.2], vec![0.0, 4.0e5, 1.0e6]).unwrap(),
        PYCurve::new(20.0, vec![0.0, 0.02, 0.2], vec![0.0, 4.0e6, 1.0e7]).unwrap(),
    ])
    .unwrap()
}

/// Pile from -20 m (tip) to a tower top at 60 m; mudline at 0, water to 20 m.
/// Without soil the structure is clamped at the mudline.
fn soil_structure(hydro: bool, soil: bool) -> ChainModel {
    let bottom = if soil { -20.0 } else { 0.0 };
    let tbl = table(bottom, 60.0, 5.0, 0.05);
    let (bodies, plan) = discretize_structure(&tbl, 16, &Refinement::Uniform).unwrap();
    let rna = PointMass {
        mass: 2.0e5,
        inertia: Matrix3::from_diagonal(&Vector3::new(1e6, 1e6, 1e6)),
        cm_offset: Vector3::new(-2.0, 0.0, 1.5),
        node: 16,
    };
    let bindings = Bindings {
        soil: Some((py_set(), soil_nodes(0.0, -20.0, 21, 0.1, 0.25).unwrap())),
        hydro: hydro.then_some(HydroSpec {
            coefficients: MorisonCoefficients::default(),
            swl_elevation: 20.0,
            seabed_elevation: 0.0,
            strips_per_body: 2,
        }),
    };
    let root = if soil {
        RootCondition::SoilSupported
    } else {
        RootCondition::Clamped
    };
    let bindings = if soil {
        bindings
    } else {
        Bindings {
            soil: None,
            ..bindings
        }
    };
    assemble_chain(bodies, plan, &[rna], &bindings, root).unwrap()
}

fn tip_load(p: [f64; 6]) -> EnvironmentLoads {
    EnvironmentLoads {
        yaw_bearing: Some(LoadSeries::constant(0.0, 1e6, p).unwrap()),
        ..EnvironmentLoads::none()
    }
}

/// Bending rigidity and mass per length of a uniform model.
fn section(model: &ChainModel) -> (f64, f64) {
    let length = model.top_elevation() - model.root_elevation();
    (
        model.joints[0].section.bending_rigidity(),
        model.total_mass() / length,
    )
}

#[test]
fn dof_count_and_determinism() {
    let a = clamped(7, 30.0, &[]);
    assert_eq!(a.n_dof(), 21);
    assert_eq!(a.n_joints(), 7);
    assert_eq!(a, clamped(7, 30.0, &[]));
    let s = soil_structure(false, true);
    assert_eq!(s.n_dof(), 3 * 16 + 4);
    for (j, sec) in a.joints.iter().zip(&a.plan.joints) {
        assert_eq!(
            j.stiffness,
            [
                sec.bending_stiffness,
                sec.bending_stiffness,
                sec.torsion_stiffness
            ]
        );
    }
}

#[test]
fn dangling_attachment_is_rejected() {
    let (bodies, plan) =
        discretize_structure(&table(0.0, 10.0, 4.0, 0.04), 2, &Refinement::Uniform).unwrap();
    let pm = PointMass {
        mass: 1.0,
        inertia: Matrix3::zeros(),
        cm_offset: Vector3::zeros(),
        node: 3,
    };
    let err = assemble_chain(
        bodies,
        plan,
        &[pm],
        &Bindings::default(),
        RootCondition::Clamped,
    )
    .unwrap_err();
    assert!(err.is_config());
}

#[test]
fn compound_pendulum_mass_matrix() {
    // One element: the lower half is welded to ground, the upper half
    // swings about the mid-node joint.
    let model = clamped(1, 10.0, &[]);
    let m = mass_matrix(&model, &DVector::zeros(3)).unwrap();
    let half = frustum_mass_properties(&FrustumSegment {
        height: 5.0,
        outer_radius_bottom: 2.0,
        outer_radius_top: 2.0,
        inner_radius_bottom: 1.96,
        inner_radius_top: 1.96,
        density: RHO,
    })
    .unwrap();
    let pivot = half.i_xx + half.mass * half.z_cm.powi(2);
    assert_relative_eq!(m[(0, 0)], pivot, max_relative = 1e-10);
    assert_relative_eq!(m[(1, 1)], pivot, max_relative = 1e-10);
    assert_relative_eq!(m[(2, 2)], half.i_zz, max_relative = 1e-10);
    assert!(m[(0, 1)].abs() < 1e-9 * pivot);
}

fn random_state(n: usize, seed: u64, amp: f64) -> DVector<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| amp * (2.0 * rng.random::<f64>() - 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mass_matrix_symmetric_positive(seed in 0u64..1000) {
        let model = soil_structure(true, true);
        let n = model.n_dof();
        let q = random_state(n, seed, 0.3);
        let m = mass_matrix(&model, &q).unwrap();
        prop_assert_eq!(&m, &m.transpose());
        let x = random_state(n, seed + 1, 1.0);
        prop_assert!((x.transpose() * &m * &x)[0] > 0.0);
    }

    #[test]
    fn mass_matrix_is_momentum_map(seed in 0u64..1000) {
        // dT/dqd by central differences of the body-by-body kinetic energy
        let model = soil_structure(true, true);
        let n = model.n_dof();
        let q = random_state(n, seed, 0.2);
        let qd = random_state(n, seed + 7, 0.5);
        let m = mass_matrix(&model, &q).unwrap();
        let p = &m * &qd;
        let h = 1e-4;
        for k in (0..n).step_by(5) {
            let mut a = qd.clone();
            a[k] += h;
            let mut b = qd.clone();
            b[k] -= h;
            let t = |v: &DVector<f64>| kinematics::kinetic_energy(&model, q.as_slice(), v.as_slice());
            let fd = (t(&a) - t(&b)) / (2.0 * h);
            prop_assert!((fd - p[k]).abs() <= 1e-6 * p.amax(), "k = {}: {} vs {}", k, fd, p[k]);
        }
    }

    #[test]
    fn gravity_is_potential_gradient(seed in 0u64..1000) {
        let model = soil_structure(false, true);
        let n = model.n_dof();
        let q = random_state(n, seed, 0.2);
        let env = EnvironmentLoads::gravity_only();
        let state = SystemState { q: q.clone(), qd: DVector::zeros(n), t: 0.0 };
        let qg = generalized_forces(&model, &state, &env).unwrap().gravity;
        let h = 1e-6;
        for k in 0..n {
            let mut a = q.clone();
            a[k] += h;
            let mut b = q.clone();
            b[k] -= h;
            let v = |x: &DVector<f64>| kinematics::gravity_potential(&model, x.as_slice(), &env.gravity);
            let fd = -(v(&a) - v(&b)) / (2.0 * h);
            prop_assert!((fd - qg[k]).abs() <= 1e-6 * qg.amax().max(1.0), "k = {}: {} vs {}", k, fd, qg[k]);
        }
    }
}

#[test]
fn rest_without_loads_has_no_forces_and_spring_is_minus_k_theta() {
    let model = clamped(4, 20.0, &[]);
    let n = model.n_dof();
    let f = generalized_forces(&model, &SystemState::rest(n), &EnvironmentLoads::none()).unwrap();
    assert_eq!(f.residual(), DVector::zeros(n));

    let mut s = SystemState::rest(n);
    let k = model.joint_dof(2, 1);
    s.q[k] = 0.01;
    let f = generalized_forces(&model, &s, &EnvironmentLoads::none()).unwrap();
    assert_eq!(f.spring[k], -model.joints[2].stiffness[1] * 0.01);
}

#[test]
fn offset_rna_loads_every_joint_under_gravity() {
    let rna = PointMass {
        mass: 5e4,
        inertia: Matrix3::identity() * 1e4,
        cm_offset: Vector3::new(-3.0, 0.0, 2.0),
        node: 6,
    };
    let model = clamped(6, 40.0, &[rna]);
    let f = generalized_forces(
        &model,
        &SystemState::rest(model.n_dof()),
        &EnvironmentLoads::gravity_only(),
    )
    .unwrap();
    for c in 0..model.n_joints() {
        // weight at -x tips the tower towards -x: negative rotation about y
        assert!(f.gravity[model.joint_dof(c, 1)] < 0.0);
        assert_eq!(f.gravity[model.joint_dof(c, 0)], 0.0);
    }
}

#[test]
fn no_loads_equilibrium_is_undeformed() {
    let model = soil_structure(true, true);
    let eq = static_equilibrium(&model, &EnvironmentLoads::none()).unwrap();
    assert_eq!(eq.q, DVector::zeros(model.n_dof()));
}

#[test]
fn tip_load_statics_match_beam_theory() {
    let length = 60.0;
    let model = clamped(50, length, &[]);
    let (ei, _) = section(&model);
    let p = 2.0e5;
    let env = tip_load([p, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let eq = static_equilibrium(&model, &env).unwrap();
    let state = SystemState {
        q: eq.q.clone(),
        qd: DVector::zeros(model.n_dof()),
        t: 0.0,
    };
    let mut frames = kinematics::Frames::new(model.n_dof());
    let z = vec![0.0; model.n_dof()];
    frames.compute(&model, eq.q.as_slice(), &z, &z);
    let tip = frames.position(&model.yaw_bearing()).x;
    let expected = p * length.powi(3) / (3.0 * ei);
    assert!(tip < 0.005 * length);
    assert_relative_eq!(tip, expected, max_relative = 0.01);

    let root = root_reaction(&model, &state, &DVector::zeros(model.n_dof()), &env).unwrap();
    assert_relative_eq!(root[4], p * length, max_relative = 0.01);
    assert_relative_eq!(root[0], p, max_relative = 1e-9);

    // joint moments follow P (L - z)
    for c in (0..50).step_by(7) {
        let m = internal_moment(&model, &state, model.plan.joints[c].elevation).unwrap();
        let z = m.elevation;
        assert_relative_eq!(m.spring[1], p * (length - z), max_relative = 0.01);
        assert_eq!(m.damper, [0.0; 3]);
    }
    assert!(matches!(
        internal_moment(&model, &state, -1.0),
        Err(crate::Error::Domain(_))
    ));
    let rest = internal_moment(&model, &SystemState::rest(model.n_dof()), 10.0).unwrap();
    assert_eq!(rest.spring, [0.0; 3]);
}

#[test]
fn flexible_foundation_increases_gravity_deflection() {
    let env = EnvironmentLoads::gravity_only();
    let tip = |model: &ChainModel| {
        let eq = static_equilibrium(model, &env).unwrap();
        let mut f = kinematics::Frames::new(model.n_dof());
        let z = vec![0.0; model.n_dof()];
        f.compute(model, eq.q.as_slice(), &z, &z);
        f.position(&model.yaw_bearing()).x
    };
    let soil = tip(&soil_structure(false, true));
    let fixed = tip(&soil_structure(false, false));
    assert!(fixed < 0.0);
    assert!(soil < fixed, "soil {soil} vs clamped {fixed}");
}

#[test]
fn linearized_stiffness_without_environment_is_joint_diagonal() {
    let model = clamped(5, 30.0, &[]);
    let n = model.n_dof();
    let sys = linearize(
        &model,
        &EnvironmentLoads::none(),
        &DVector::zeros(n),
        &LinearizeOptions::default(),
    )
    .unwrap();
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j {
                model.joint_stiffness_diagonal()[i]
            } else {
                0.0
            };
            assert_eq!(sys.k[(i, j)], expected);
        }
    }
}

#[test]
fn gravity_stiffness_is_symmetric_at_equilibrium() {
    let model = soil_structure(false, true);
    let env = EnvironmentLoads::gravity_only();
    let eq = static_equilibrium(&model, &env).unwrap();
    let sys = linearize(&model, &env, &eq.q, &LinearizeOptions::default()).unwrap();
    let asym = (&sys.k - sys.k.transpose()).amax();
    assert!(
        asym <= 1e-6 * sys.k.amax(),
        "asymmetry {asym:e} of {:e}",
        sys.k.amax()
    );
}

#[test]
fn single_joint_oscillator_frequency() {
    let model = clamped(1, 10.0, &[]);
    let sys = linearize(
        &model,
        &EnvironmentLoads::none(),
        &DVector::zeros(3),
        &LinearizeOptions::default(),
    )
    .unwrap();
    let modes = eigenmodes(&model, &sys).unwrap();
    let k = model.joints[0].stiffness;
    let i_b = sys.m[(1, 1)];
    let i_t = sys.m[(2, 2)];
    let bend = (k[1] / i_b).sqrt() / (2.0 * PI);
    let tors = (k[2] / i_t).sqrt() / (2.0 * PI);
    let mut expected = vec![bend, bend, tors];
    expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (f, e) in modes.frequencies.iter().zip(&expected) {
        assert_relative_eq!(*f, *e, max_relative = 1e-10);
    }
    let fa = modes.nth_of_kind(ModeKind::ForeAft, 0).unwrap();
    let ss = modes.nth_of_kind(ModeKind::SideSide, 0).unwrap();
    assert_ne!(fa, ss);
    assert_eq!(modes.shapes[fa].components[1][0], 1.0);
}

// Slender enough that rotary inertia of the sections stays well below the
// discretization error.
fn cantilever_f(n: usize) -> (ModalResult, LinearSystem, ChainModel) {
    let model = tube(n, 120.0, 2.0, 0.02, &[]);
    let sys = linearize(
        &model,
        &EnvironmentLoads::none(),
        &DVector::zeros(model.n_dof()),
        &LinearizeOptions::default(),
    )
    .unwrap();
    (eigenmodes(&model, &sys).unwrap(), sys, model)
}

#[test]
fn cantilever_frequencies_converge_to_beam_theory() {
    let mut errors = Vec::new();
    for n in [5, 10, 20, 50] {
        let (modes, sys, model) = cantilever_f(n);
        let (ei, rho_a) = section(&model);
        let analytic =
            |lambda: f64| lambda * lambda / (2.0 * PI) * (ei / (rho_a * 120f64.powi(4))).sqrt();
        let f1 = modes.frequencies[modes.nth_of_kind(ModeKind::ForeAft, 0).unwrap()];
        let f2 = modes.frequencies[modes.nth_of_kind(ModeKind::ForeAft, 1).unwrap()];
        errors.push((f1 / analytic(1.8751) - 1.0).abs());
        if n == 50 {
            assert!(errors[3] < 0.005, "f1 error {}", errors[3]);
            assert!((f2 / analytic(4.6941) - 1.0).abs() < 0.02);
            // mass orthogonality
            let p = modes.vectors.transpose() * &sys.m * &modes.vectors;
            let off = (p - nalgebra::DMatrix::identity(model.n_dof(), model.n_dof())).amax();
            assert!(off < 1e-8, "{off:e}");
            assert_eq!(modes.kinds[0], ModeKind::ForeAft);
            assert_eq!(modes.kinds[1], ModeKind::SideSide);
        }
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn soil_and_water_lower_the_first_frequency() {
    let env = EnvironmentLoads::gravity_only();
    let f1 = |model: &ChainModel| {
        let eq = static_equilibrium(model, &env).unwrap();
        let sys = linearize(model, &env, &eq.q, &LinearizeOptions::default()).unwrap();
        eigenmodes(model, &sys).unwrap().frequencies[0]
    };
    let dry_clamped = f1(&soil_structure(false, false));
    let dry_soil = f1(&soil_structure(false, true));
    let wet_soil = f1(&soil_structure(true, true));
    assert!(dry_soil < dry_clamped);
    assert!(wet_soil < dry_soil);
}

#[test]
fn calibration_hits_closed_form_and_targets() {
    let model = clamped(1, 10.0, &[]);
    let q0 = DVector::zeros(3);
    let env = EnvironmentLoads::none();
    let sys = linearize(&model, &env, &q0, &LinearizeOptions::default()).unwrap();
    let cal = calibrate_joint_damping(
        &model,
        &env,
        &q0,
        &[DampingTarget {
            mode: 0,
            zeta: 0.01,
        }],
        &LinearizeOptions::default(),
    )
    .unwrap();
    let k = model.joints[0].stiffness[1];
    let c = 2.0 * 0.01 * (k * sys.m[(1, 1)]).sqrt();
    assert_relative_eq!(cal.joint_damping[0][1], c, max_relative = 0.01);

    let zero = calibrate_joint_damping(
        &model,
        &env,
        &q0,
        &[DampingTarget { mode: 0, zeta: 0.0 }],
        &LinearizeOptions::default(),
    )
    .unwrap();
    assert_eq!(zero.joint_damping, vec![[0.0; 3]]);

    let model = clamped(10, 60.0, &[]);
    let q0 = DVector::zeros(model.n_dof());
    let targets = [
        DampingTarget {
            mode: 0,
            zeta: 0.01,
        },
        DampingTarget {
            mode: 2,
            zeta: 0.02,
        },
    ];
    let cal = calibrate_joint_damping(
        &model,
        &env,
        &q0,
        &targets[..1],
        &LinearizeOptions::default(),
    )
    .unwrap();
    assert!((cal.achieved[0] / 0.01 - 1.0).abs() <= 0.01);
    let sys = linearize(&cal.model, &env, &q0, &LinearizeOptions::default()).unwrap();
    let modes = eigenmodes(&cal.model, &sys).unwrap();
    assert!((modes.damping_ratios[0] / 0.01 - 1.0).abs() <= 0.01);

    let pair =
        calibrate_joint_damping(&model, &env, &q0, &targets, &LinearizeOptions::default()).unwrap();
    assert!((pair.achieved[0] / 0.01 - 1.0).abs() <= 0.01);
    assert!((pair.achieved[1] / 0.02 - 1.0).abs() <= 0.01);
    assert!(pair.mass_coefficient > 0.0);

    let too_many = [targets[0], targets[1], targets[0]];
    assert!(
        calibrate_joint_damping(&model, &env, &q0, &too_many, &LinearizeOptions::default())
            .is_err()
    );
}

#[test]
fn unloaded_rest_stays_at_rest() {
    let model = soil_structure(true, true);
    let frame = simulate(
        &model,
        &EnvironmentLoads::none(),
        &SimulationConfig {
            t_end: 1.0,
            dt: 0.01,
            ..Default::default()
        },
        &[
            Channel::NodeDisplacement { node: 16, axis: 0 },
            Channel::Moment {
                elevation: 0.0,
                axis: 1,
            },
        ],
    )
    .unwrap();
    assert_eq!(frame.time.len(), 101);
    assert!(frame.data.iter().flatten().all(|v| *v == 0.0));
}

fn first_mode_start(model: &ChainModel, amp: f64) -> (SystemState, f64) {
    let n = model.n_dof();
    let sys = linearize(
        model,
        &EnvironmentLoads::none(),
        &DVector::zeros(n),
        &LinearizeOptions::default(),
    )
    .unwrap();
    let modes = eigenmodes(model, &sys).unwrap();
    let phi = modes.vectors.column(0).into_owned();
    let q = &phi * (amp / phi.amax());
    (
        SystemState {
            q,
            qd: DVector::zeros(n),
            t: 0.0,
        },
        modes.frequencies[0],
    )
}

#[test]
fn rk4_conserves_energy_short_run() {
    let model = clamped(20, 120.0, &[]);
    let (s0, _) = first_mode_start(&model, 1e-3);
    let g = Vector3::zeros();
    let e0 = mechanical_energy(&model, &s0, &g);
    let cfg = SimulationConfig {
        t_end: 5.0,
        dt: 1e-3,
        output_dt: Some(0.1),
        integrator: Integrator::Rk4,
        initial: Some(s0),
        ..Default::default()
    };
    let frame = simulate(
        &model,
        &EnvironmentLoads::none(),
        &cfg,
        &[Channel::JointAngle { joint: 0, axis: 1 }],
    )
    .unwrap();
    assert_eq!(frame.time.len(), 51);
    let end = frame.final_state.as_ref().unwrap();
    assert_relative_eq!(end.t, 5.0, max_relative = 1e-12);
    let e1 = mechanical_energy(&model, end, &g);
    assert!(((e1 - e0) / e0).abs() < 1e-3, "{e0} -> {e1}");
}

#[test]
fn planar_loading_keeps_out_of_plane_dofs_zero() {
    let rna = PointMass {
        mass: 5e4,
        inertia: Matrix3::identity() * 1e4,
        cm_offset: Vector3::new(-3.0, 0.0, 2.0),
        node: 8,
    };
    let model = clamped(8, 60.0, &[rna]);
    let mut env = EnvironmentLoads::gravity_only();
    env.yaw_bearing = Some(
        LoadSeries::new(
            vec![0.0, 1.0, 3.0],
            vec![[0.0; 6], [1e5, 0.0, -1e4, 0.0, 2e5, 0.0], [0.0; 6]],
        )
        .unwrap(),
    );
    let mut channels = Vec::new();
    for j in 0..8 {
        channels.push(Channel::JointAngle { joint: j, axis: 0 });
        channels.push(Channel::JointAngle { joint: j, axis: 2 });
    }
    channels.push(Channel::NodeDisplacement { node: 8, axis: 1 });
    channels.push(Channel::JointAngle { joint: 0, axis: 1 });
    let frame = simulate(
        &model,
        &env,
        &SimulationConfig {
            t_end: 3.0,
            dt: 0.005,
            ..Default::default()
        },
        &channels,
    )
    .unwrap();
    let n = channels.len();
    for d in &frame.data[..n - 1] {
        assert!(d.iter().all(|v| *v == 0.0));
    }
    assert!(frame.data[n - 1].iter().any(|v| *v != 0.0));
}

fn zero_crossing_frequency(t: &[f64], x: &[f64]) -> f64 {
    let mut crossings = Vec::new();
    for i in 1..x.len() {
        if x[i - 1] > 0.0 && x[i] <= 0.0 {
            let s = x[i - 1] / (x[i - 1] - x[i]);
            crossings.push(t[i - 1] + s * (t[i] - t[i - 1]));
        }
    }
    (crossings.len() - 1) as f64 / (crossings.last().unwrap() - crossings[0])
}

#[test]
fn small_free_vibration_matches_eigenfrequency() {
    let model = clamped(10, 60.0, &[]);
    let (s0, f1) = first_mode_start(&model, 1e-4);
    let t_end = 20.0;
    let cfg = SimulationConfig {
        t_end,
        dt: 0.005,
        initial: Some(s0),
        ..Default::default()
    };
    let frame = simulate(
        &model,
        &EnvironmentLoads::none(),
        &cfg,
        &[Channel::NodeDisplacement { node: 10, axis: 0 }],
    )
    .unwrap();
    let f = zero_crossing_frequency(&frame.time, &frame.data[0]);
    assert!((f - f1).abs() <= 1.0 / t_end, "{f} vs {f1}");
}

#[test]
fn generalized_alpha_tracks_undamped_oscillator() {
    let model = clamped(1, 10.0, &[]);
    let mut s0 = SystemState::rest(3);
    s0.q[1] = 1e-4;
    let sys = linearize(
        &model,
        &EnvironmentLoads::none(),
        &DVector::zeros(3),
        &LinearizeOptions::default(),
    )
    .unwrap();
    let w = (model.joints[0].stiffness[1] / sys.m[(1, 1)]).sqrt();
    let period = 2.0 * PI / w;
    let dt = period / 200.0;
    let cfg = SimulationConfig {
        t_end: 3.0 * period,
        dt,
        initial: Some(s0),
        ..Default::default()
    };
    let frame = simulate(
        &model,
        &EnvironmentLoads::none(),
        &cfg,
        &[Channel::JointAngle { joint: 0, axis: 1 }],
    )
    .unwrap();
    for (t, th) in frame.time.iter().zip(&frame.data[0]) {
        assert!((th - 1e-4 * (w * t).cos()).abs() < 2e-6, "t = {t}");
    }
}

#[test]
fn channel_names_round_trip() {
    let chans = [
        Channel::NodeDisplacement { node: 3, axis: 0 },
        Channel::NodeAcceleration { node: 12, axis: 2 },
        Channel::JointAngle { joint: 0, axis: 1 },
        Channel::Moment {
            elevation: -30.5,
            axis: 1,
        },
        Channel::SoilReaction { node: 60, axis: 0 },
    ];
    let names: Vec<String> = chans.iter().map(Channel::name).collect();
    assert_eq!(
        names,
        [
            "node3.ux",
            "node12.az",
            "joint0.thy",
            "moment.-30.5m.y",
            "soil60.fx"
        ]
    );
    for (c, n) in chans.iter().zip(&names) {
        assert_eq!(Channel::parse(n).unwrap(), *c);
    }
    assert!(Channel::parse("node3.qx").is_err());
    assert!(Channel::parse("moment.1m.z").is_err());
}

#[test]
fn output_interval_must_divide_dt() {
    let model = clamped(2, 10.0, &[]);
    let cfg = SimulationConfig {
        t_end: 1.0,
        dt: 0.003,
        output_dt: Some(0.05),
        ..Default::default()
    };
    assert!(simulate(&model, &EnvironmentLoads::none(), &cfg, &[])
        .unwrap_err()
        .is_config());
}

#[test]
fn gravity_constant_is_standard() {
    assert_eq!(EnvironmentLoads::gravity_only().gravity.z, -GRAVITY);
}
