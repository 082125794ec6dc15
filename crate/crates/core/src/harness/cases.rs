use std::f64::consts::PI;
use std::io::Write;
use std::thread;
use std::time::Instant;

use nalgebra::{DVector, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{LoadCase, RunConfig, Scheme, StaticMethod, Variant};
use super::{Artifact, RunOutput, RunSummary};
use crate::csvio::fmt_f64;
use crate::dynamics::{
    assemble_chain, calibrate_joint_damping, eigenmodes, linearize, node_displacements, simulate,
    static_equilibrium, Bindings, ChainModel, Channel, DampingTarget, EnvironmentLoads, HydroSpec,
    Integrator, LinearizeOptions, LoadSeries, ModalResult, ModeKind, PointMass, RootCondition,
    SimulationConfig, SystemState, TimeSeriesFrame,
};
use crate::error::{Error, Result};
use crate::geometry::{discretize_at, discretize_structure, Refinement, StationTable};
use crate::hydro::{synthesize_sea, MorisonCoefficients, SeaStateConfig, WaveRealization};
use crate::modal::{
    band_psd_sum, fdd_identify, mac_real, singular_values, welch_csd_matrix, welch_psd,
    write_modal_csv, SpectralConfig, Window,
};
use crate::soil::{soil_nodes, PYCurveSet};

/// Parsed input files.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    pub table: StationTable,
    pub curves: PYCurveSet,
    pub yaw_loads: Option<LoadSeries>,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    Ok(Inputs {
        table: StationTable::from_path(&cfg.resolve(&cfg.files.stations))?,
        curves: PYCurveSet::from_path(&cfg.resolve(&cfg.files.py_curves))?,
        yaw_loads: cfg
            .files
            .yaw_loads
            .as_ref()
            .map(|p| LoadSeries::from_path(&cfg.resolve(p)))
            .transpose()?,
    })
}

/// Runs one load case. `threads` caps how many independent model variants
/// are solved at once.
pub fn run_case(cfg: &RunConfig, case: LoadCase, threads: usize) -> Result<RunOutput> {
    let start = Instant::now();
    let inputs = load_inputs(cfg)?;
    let mut out = match case {
        LoadCase::LC12 => run_lc_static(cfg, &inputs, threads),
        LoadCase::LC21 => run_lc_eigen(cfg, &inputs, Variant::ClampedDry),
        LoadCase::LC23 => run_lc_eigen(cfg, &inputs, Variant::SoilWet),
        LoadCase::LC51 => run_lc_windwave(cfg, &inputs),
        LoadCase::Custom => windwave(cfg, &inputs, cfg.variant, LoadCase::Custom),
    }?;
    out.summary.wall_time = start.elapsed();
    Ok(out)
}

fn summary(cfg: &RunConfig, case: LoadCase) -> Result<RunSummary> {
    Ok(RunSummary {
        case,
        digest: cfg.digest()?,
        wall_time: Default::default(),
        headline: Vec::new(),
        warnings: Vec::new(),
    })
}

fn comment(s: &RunSummary) -> String {
    format!("config_digest={}", s.digest)
}

fn gravity() -> EnvironmentLoads {
    EnvironmentLoads::gravity_only()
}

/// Element boundaries of the full (soil-supported) structure. The mudline
/// and the still-water level are always boundaries so the clamped variant
/// shares the same elements above the mudline.
fn element_boundaries(cfg: &RunConfig, table: &StationTable) -> Result<Vec<f64>> {
    let (mud, swl) = (cfg.site.mudline_elevation, cfg.site.swl_elevation);
    if !(mud > table.bottom() && mud < table.top()) {
        return Err(Error::Config(format!(
            "mudline {mud} m must lie strictly inside the station table [{}, {}] m",
            table.bottom(),
            table.top()
        )));
    }
    let mut breaks = cfg.discretization.breaks.clone();
    breaks.push(mud);
    if swl > table.bottom() && swl < table.top() {
        breaks.push(swl);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let (_, plan) = discretize_structure(
        table,
        cfg.discretization.n_elements,
        &Refinement::Segments(breaks),
    )?;
    Ok(plan.element_boundaries)
}

/// Assembles a model variant. Clamped variants are cut at the mudline;
/// soil-supported variants carry the p-y springs and Morison strips.
pub fn build_model(
    cfg: &RunConfig,
    inputs: &Inputs,
    variant: Variant,
    f_load: f64,
) -> Result<ChainModel> {
    let mud = cfg.site.mudline_elevation;
    let bounds = element_boundaries(cfg, &inputs.table)?;
    let (bodies, plan) = match variant {
        Variant::SoilWet => discretize_at(&inputs.table, &bounds)?,
        Variant::ClampedDry => {
            let upper: Vec<f64> = bounds.iter().copied().filter(|z| *z >= mud).collect();
            discretize_at(&inputs.table.truncated_below(mud)?, &upper)?
        }
    };
    let rna = PointMass {
        mass: cfg.rna.mass,
        inertia: Matrix3::from_diagonal(&Vector3::from(cfg.rna.inertia)),
        cm_offset: Vector3::from(cfg.rna.cm_offset),
        node: plan.n_elements(),
    };
    let (bindings, root) = match variant {
        Variant::ClampedDry => (Bindings::default(), RootCondition::Clamped),
        Variant::SoilWet => {
            let nodes = soil_nodes(
                mud,
                inputs.table.bottom(),
                cfg.discretization.soil_nodes,
                cfg.soil.beta_s,
                f_load,
            )?;
            let hydro = HydroSpec {
                coefficients: coefficients(cfg),
                swl_elevation: cfg.site.swl_elevation,
                seabed_elevation: mud,
                strips_per_body: cfg.discretization.strips_per_body,
            };
            let b = Bindings {
                soil: Some((inputs.curves.clone(), nodes)),
                hydro: Some(hydro),
            };
            (b, RootCondition::SoilSupported)
        }
    };
    assemble_chain(bodies, plan, &[rna], &bindings, root)
}

fn coefficients(cfg: &RunConfig) -> MorisonCoefficients {
    MorisonCoefficients {
        water_density: cfg.sea.water_density,
        added_mass: cfg.sea.added_mass,
        drag: cfg.sea.drag,
    }
}

fn sea_state(cfg: &RunConfig) -> Result<WaveRealization> {
    synthesize_sea(&SeaStateConfig {
        significant_wave_height: cfg.sea.significant_wave_height,
        peak_period: cfg.sea.peak_period,
        water_depth: cfg.water_depth(),
        coefficients: coefficients(cfg),
        n_components: cfg.sea.n_components,
        f_min: cfg.sea.f_min,
        f_max: cfg.sea.f_max,
        seed: cfg.seed,
    })
}

fn equilibrium(model: &ChainModel) -> Result<DVector<f64>> {
    Ok(static_equilibrium(model, &gravity())?.q)
}

fn modal_analysis(model: &ChainModel) -> Result<(DVector<f64>, ModalResult)> {
    let q0 = equilibrium(model)?;
    let sys = linearize(model, &gravity(), &q0, &LinearizeOptions::default())?;
    Ok((q0, eigenmodes(model, &sys)?))
}

/// Soil dashpot reference frequency: configured, else the wave peak
/// frequency with waves, else the first natural frequency.
fn resolve_f_load(cfg: &RunConfig, inputs: &Inputs, waves: bool) -> Result<f64> {
    if let Some(f) = cfg.soil.f_load {
        return Ok(f);
    }
    if waves {
        return Ok(1.0 / cfg.sea.peak_period);
    }
    if cfg.soil.beta_s == 0.0 {
        return Ok(1.0);
    }
    let probe = build_model(cfg, inputs, Variant::SoilWet, 1.0)?;
    Ok(modal_analysis(&probe)?.1.frequencies[0])
}

/// Model with joint dampers calibrated to the configured targets. The
/// calibration sees the structure without soil dashpots, which are then
/// added on top.
fn damped_model(
    cfg: &RunConfig,
    inputs: &Inputs,
    variant: Variant,
    f_load: f64,
) -> Result<ChainModel> {
    let model = build_model(cfg, inputs, variant, f_load)?;
    if cfg.damping.targets.is_empty() {
        return Ok(model);
    }
    let mut bare_cfg = cfg.clone();
    bare_cfg.soil.beta_s = 0.0;
    let bare = build_model(&bare_cfg, inputs, variant, f_load)?;
    let q0 = equilibrium(&bare)?;
    let targets: Vec<DampingTarget> = cfg
        .damping
        .targets
        .iter()
        .map(|t| DampingTarget {
            mode: t.mode,
            zeta: t.zeta,
        })
        .collect();
    let cal = calibrate_joint_damping(
        &bare,
        &gravity(),
        &q0,
        &targets,
        &LinearizeOptions::default(),
    )?;
    let mut damped = model.with_joint_damping(&cal.joint_damping)?;
    damped.global_damping = cal.model.global_damping;
    Ok(damped)
}

fn sim_config(cfg: &RunConfig, t_end: f64, q0: DVector<f64>) -> SimulationConfig {
    let i = &cfg.integrator;
    let n = q0.len();
    SimulationConfig {
        t_end,
        dt: i.dt,
        output_dt: Some(1.0 / i.output_rate),
        integrator: match i.scheme {
            Scheme::GeneralizedAlpha => Integrator::GeneralizedAlpha { rho_inf: i.rho_inf },
            Scheme::Rk4 => Integrator::Rk4,
        },
        newton_tol: i.newton_tol,
        max_newton: i.max_newton,
        max_halvings: i.max_halvings,
        initial: Some(SystemState {
            q: q0,
            qd: DVector::zeros(n),
            t: 0.0,
        }),
    }
}

fn diagnostics(frame: &TimeSeriesFrame, warnings: &mut Vec<String>) {
    warnings.extend(
        frame
            .diagnostics
            .iter()
            .map(|d| format!("t = {} s: {}", d.t, d.message)),
    );
}

struct StaticResult {
    variant: Variant,
    elevations: Vec<f64>,
    displacements: Vec<Vector3<f64>>,
    warnings: Vec<String>,
}

fn static_variant(cfg: &RunConfig, inputs: &Inputs, variant: Variant) -> Result<StaticResult> {
    let f_load = resolve_f_load(cfg, inputs, false)?;
    let mut warnings = Vec::new();
    let (model, q) = match cfg.integrator.static_method {
        StaticMethod::Equilibrium => {
            let model = build_model(cfg, inputs, variant, f_load)?;
            let q = equilibrium(&model)?;
            (model, q)
        }
        StaticMethod::TimeDomain => {
            let model = damped_model(cfg, inputs, variant, f_load)?;
            let rest = DVector::zeros(model.n_dof());
            let sim = sim_config(cfg, cfg.integrator.static_duration, rest);
            let frame = simulate(&model, &gravity(), &sim, &[])?;
            diagnostics(&frame, &mut warnings);
            let q = frame
                .final_state
                .ok_or_else(|| Error::Numerical("simulation returned no final state".into()))?
                .q;
            (model, q)
        }
    };
    Ok(StaticResult {
        variant,
        elevations: model.plan.element_boundaries.clone(),
        displacements: node_displacements(&model, &q)?,
        warnings,
    })
}

/// Gravity-only deflection of the clamped and soil-supported variants.
pub fn run_lc_static(cfg: &RunConfig, inputs: &Inputs, threads: usize) -> Result<RunOutput> {
    let mut s = summary(cfg, LoadCase::LC12)?;
    let variants = [Variant::ClampedDry, Variant::SoilWet];
    let results: Vec<StaticResult> = if threads >= 2 {
        thread::scope(|scope| {
            let handles: Vec<_> = variants
                .iter()
                .map(|&v| scope.spawn(move || static_variant(cfg, inputs, v)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("static solve panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        variants
            .iter()
            .map(|&v| static_variant(cfg, inputs, v))
            .collect::<Result<Vec<_>>>()?
    };

    let c = comment(&s);
    let table = Artifact::render("static.csv", |out| {
        writeln!(out, "# {c}")?;
        writeln!(out, "variant,node,elevation_m,ux_m,uy_m,uz_m")?;
        for r in &results {
            for (i, (z, u)) in r.elevations.iter().zip(&r.displacements).enumerate() {
                writeln!(
                    out,
                    "{},{i},{},{},{},{}",
                    r.variant.name(),
                    fmt_f64(*z),
                    fmt_f64(u.x),
                    fmt_f64(u.y),
                    fmt_f64(u.z)
                )?;
            }
        }
        Ok(())
    })?;
    let top: Vec<f64> = results
        .iter()
        .map(|r| r.displacements.last().unwrap().x)
        .collect();
    for (r, ux) in results.iter().zip(&top) {
        s.push(
            format!("tower_top_ux_{}_m", r.variant.name()),
            *ux,
            "static.csv",
        );
        s.warnings.extend(r.warnings.iter().cloned());
    }
    if top[0] != 0.0 {
        s.push(
            "deflection_ratio_soil_to_clamped",
            top[1] / top[0],
            "static.csv",
        );
    } else {
        s.warnings
            .push("clamped tower-top deflection is zero; ratio undefined".into());
    }
    Ok(RunOutput {
        summary: s,
        artifacts: vec![table],
    })
}

/// Translation or rotation component that characterizes a mode kind.
fn shape_component(kind: ModeKind) -> usize {
    match kind {
        ModeKind::ForeAft => 0,
        ModeKind::SideSide => 1,
        ModeKind::Torsion => 5,
    }
}

const REPORTED_MODES: usize = 10;

/// Eigenanalysis about the gravity equilibrium, plus an optional white-noise
/// identification run for the soil-supported variant.
pub fn run_lc_eigen(cfg: &RunConfig, inputs: &Inputs, variant: Variant) -> Result<RunOutput> {
    let case = match variant {
        Variant::ClampedDry => LoadCase::LC21,
        Variant::SoilWet => LoadCase::LC23,
    };
    let mut s = summary(cfg, case)?;
    let c = comment(&s);
    let f_load = resolve_f_load(cfg, inputs, false)?;
    let model = build_model(cfg, inputs, variant, f_load)?;
    let (_, modes) = modal_analysis(&model)?;
    let n = REPORTED_MODES.min(modes.frequencies.len());

    let table = Artifact::render("modes.csv", |out| {
        writeln!(out, "# {c}")?;
        writeln!(out, "# variant={}", variant.name())?;
        writeln!(out, "mode,f_Hz,kind,damping_ratio")?;
        for m in 0..n {
            writeln!(
                out,
                "{m},{},{},{}",
                fmt_f64(modes.frequencies[m]),
                modes.kinds[m].label(),
                fmt_f64(modes.damping_ratios[m])
            )?;
        }
        Ok(())
    })?;
    let shapes: Vec<Vec<f64>> = (0..n)
        .map(|m| {
            let k = shape_component(modes.kinds[m]);
            modes.shapes[m].components.iter().map(|c| c[k]).collect()
        })
        .collect();
    let shape_file = Artifact::render("mode_shapes.csv", |out| {
        write_modal_csv(out, &modes.frequencies[..n], &shapes, Some(&c))
    })?;

    for kind in [ModeKind::ForeAft, ModeKind::SideSide, ModeKind::Torsion] {
        for rank in 0..2 {
            if let Some(m) = modes.nth_of_kind(kind, rank).filter(|&m| m < n) {
                let key = format!("f_{}_{}_Hz", kind.label().replace('-', "_"), rank + 1);
                s.push(key, modes.frequencies[m], "modes.csv");
            }
        }
    }
    let mut artifacts = vec![table, shape_file];
    if variant == Variant::SoilWet && cfg.identification.enabled {
        artifacts.extend(identify(cfg, inputs, f_load, &modes, &mut s)?);
    }
    Ok(RunOutput {
        summary: s,
        artifacts,
    })
}

/// White-noise forcing at equally spaced nodes from the mudline to the yaw
/// bearing, then frequency-domain decomposition of their accelerations.
fn identify(
    cfg: &RunConfig,
    inputs: &Inputs,
    f_load: f64,
    modes: &ModalResult,
    s: &mut RunSummary,
) -> Result<Vec<Artifact>> {
    let id = &cfg.identification;
    let model = damped_model(cfg, inputs, Variant::SoilWet, f_load)?;
    let (lo, hi) = (cfg.site.mudline_elevation, model.top_elevation());
    let nodes: Vec<usize> = (0..id.nodes)
        .map(|i| model.nearest_node(lo + (hi - lo) * i as f64 / (id.nodes - 1) as f64))
        .collect();
    if nodes.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config(format!(
            "{} measurement nodes need a finer discretization",
            id.nodes
        )));
    }

    let h = 1.0 / cfg.integrator.output_rate;
    let samples = (id.duration / h).ceil() as usize + 2;
    let times: Vec<f64> = (0..samples).map(|k| k as f64 * h).collect();
    let normal = Normal::new(0.0, id.force_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nodal = Vec::with_capacity(nodes.len());
    for &node in &nodes {
        let values: Vec<[f64; 6]> = (0..samples)
            .map(|_| {
                [
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                ]
            })
            .collect();
        nodal.push((node, LoadSeries::new(times.clone(), values)?));
    }
    let env = EnvironmentLoads { nodal, ..gravity() };

    let channels: Vec<Channel> = [0, 1]
        .iter()
        .flat_map(|&axis| {
            nodes
                .iter()
                .map(move |&node| Channel::NodeAcceleration { node, axis })
        })
        .collect();
    let q0 = equilibrium(&model)?;
    let frame = simulate(&model, &env, &sim_config(cfg, id.duration, q0), &channels)?;
    diagnostics(&frame, &mut s.warnings);

    let spectral = SpectralConfig {
        sample_rate: cfg.integrator.output_rate,
        segment_length: id.segment_length,
        overlap: cfg.outputs.overlap,
        window: Window::Hann,
    };
    // Fore-aft modes from the x accelerations, the rest from y; the two
    // bending directions of a near-axisymmetric tower share frequencies.
    let k = nodes.len();
    let csd = [
        welch_csd_matrix(&frame.data[..k], &spectral)?,
        welch_csd_matrix(&frame.data[k..], &spectral)?,
    ];
    let lateral: Vec<usize> = (0..modes.frequencies.len())
        .filter(|&m| modes.kinds[m] != ModeKind::Torsion)
        .take(id.modes)
        .collect();
    let direction = |m: usize| usize::from(modes.kinds[m] != ModeKind::ForeAft);
    let mut found = Vec::with_capacity(lateral.len());
    let mut macs = Vec::with_capacity(lateral.len());
    for &m in &lateral {
        let f = modes.frequencies[m];
        let band = (f * (1.0 - id.band_width), f * (1.0 + id.band_width));
        let a = direction(m);
        let mode = fdd_identify(&csd[a], &[band])?.remove(0);
        let model_shape: Vec<f64> = nodes
            .iter()
            .map(|&n| modes.shapes[m].components[n][a])
            .collect();
        macs.push(mac_real(&mode.real_shape(), &model_shape));
        if let Some(d) = &mode.diagnostic {
            s.warnings.push(d.clone());
        }
        found.push(mode);
    }

    let c = comment(s);
    let table = Artifact::render("fdd.csv", |out| {
        writeln!(out, "# {c}")?;
        writeln!(
            out,
            "band,model_mode,f_model_Hz,band_lo_Hz,band_hi_Hz,f_fdd_Hz,singular_value,mac"
        )?;
        for (i, ((&m, f), mac)) in lateral.iter().zip(&found).zip(&macs).enumerate() {
            writeln!(
                out,
                "{i},{m},{},{},{},{},{},{}",
                fmt_f64(modes.frequencies[m]),
                fmt_f64(f.band.0),
                fmt_f64(f.band.1),
                fmt_f64(f.frequency),
                fmt_f64(f.singular_value),
                fmt_f64(*mac)
            )?;
        }
        Ok(())
    })?;
    let freqs: Vec<f64> = found.iter().map(|f| f.frequency).collect();
    let shapes: Vec<Vec<f64>> = found.iter().map(|f| f.real_shape()).collect();
    let shape_file = Artifact::render("fdd_shapes.csv", |out| {
        writeln!(
            out,
            "# channels: acceleration along the mode direction at nodes {nodes:?}"
        )?;
        write_modal_csv(out, &freqs, &shapes, Some(&c))
    })?;
    let sv = [singular_values(&csd[0]), singular_values(&csd[1])];
    let sv_file = Artifact::render("singular_values.csv", |out| {
        writeln!(out, "# {c}")?;
        writeln!(out, "f_Hz,x_s1,x_s2,y_s1,y_s2")?;
        for (i, f) in csd[0].frequencies.iter().enumerate() {
            let at = |d: usize, k: usize| fmt_f64(sv[d][i].get(k).copied().unwrap_or(0.0));
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(*f),
                at(0, 0),
                at(0, 1),
                at(1, 0),
                at(1, 1)
            )?;
        }
        Ok(())
    })?;
    for (i, (f, mac)) in found.iter().zip(&macs).enumerate() {
        s.push(format!("fdd_f_{}_Hz", i + 1), f.frequency, "fdd.csv");
        s.push(format!("fdd_mac_{}", i + 1), *mac, "fdd.csv");
    }
    Ok(vec![table, shape_file, sv_file])
}

/// Mean thrust and rotor harmonics sampled at the integrator step.
fn synthetic_wind(cfg: &RunConfig) -> Result<LoadSeries> {
    let w = &cfg.wind;
    let h = cfg.integrator.dt;
    let n = (cfg.integrator.duration / h).ceil() as usize + 2;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
    let values = times
        .iter()
        .map(|&t| {
            let fx = w.mean_force
                + w.frequencies
                    .iter()
                    .zip(&w.amplitudes)
                    .map(|(f, a)| a * (2.0 * PI * f * t).sin())
                    .sum::<f64>();
            [fx, 0.0, 0.0, 0.0, w.mean_moment, 0.0]
        })
        .collect();
    LoadSeries::new(times, values)
}

fn yaw_loads(cfg: &RunConfig, inputs: &Inputs) -> Result<Option<(LoadSeries, [f64; 6])>> {
    if let Some(series) = &inputs.yaw_loads {
        let d = cfg.integrator.duration;
        if series.start() > 0.0 || series.end() < d {
            return Err(Error::Config(format!(
                "yaw-bearing loads cover [{}, {}] s but the run needs [0, {d}] s",
                series.start(),
                series.end()
            )));
        }
        return Ok(Some((series.clone(), series.at(0.0)?)));
    }
    if !cfg.wind.enabled {
        return Ok(None);
    }
    let w = &cfg.wind;
    Ok(Some((
        synthetic_wind(cfg)?,
        [w.mean_force, 0.0, 0.0, 0.0, w.mean_moment, 0.0],
    )))
}

fn band_key(lo: f64, hi: f64) -> String {
    format!("{lo}_{hi}Hz")
}

/// Wind and wave time-domain run with the seabed moment spectrum.
pub fn run_lc_windwave(cfg: &RunConfig, inputs: &Inputs) -> Result<RunOutput> {
    windwave(cfg, inputs, Variant::SoilWet, LoadCase::LC51)
}

fn windwave(
    cfg: &RunConfig,
    inputs: &Inputs,
    variant: Variant,
    case: LoadCase,
) -> Result<RunOutput> {
    let mut s = summary(cfg, case)?;
    let c = comment(&s);
    let waves = cfg.sea.enabled && variant == Variant::SoilWet;
    let f_load = resolve_f_load(cfg, inputs, waves)?;
    let model = damped_model(cfg, inputs, variant, f_load)?;
    let sea = if waves { Some(sea_state(cfg)?) } else { None };
    if let Some(r) = &sea {
        s.warnings.extend(r.warnings.iter().cloned());
    }
    let yaw = yaw_loads(cfg, inputs)?;
    let duration = cfg.integrator.duration;

    // Start from the equilibrium under gravity and the initial wind load.
    let initial_env = EnvironmentLoads {
        yaw_bearing: yaw
            .as_ref()
            .map(|(_, w0)| LoadSeries::constant(0.0, duration, *w0))
            .transpose()?,
        ..gravity()
    };
    let q0 = static_equilibrium(&model, &initial_env)?.q;
    let env = EnvironmentLoads {
        sea: sea.clone(),
        yaw_bearing: yaw.map(|(series, _)| series),
        ..gravity()
    };

    let elevation = cfg
        .outputs
        .moment_elevation
        .unwrap_or(cfg.site.mudline_elevation);
    let moment = Channel::Moment { elevation, axis: 1 };
    let mut channels = vec![moment];
    for name in &cfg.outputs.channels {
        let ch = Channel::parse(name)?;
        if !channels.contains(&ch) {
            channels.push(ch);
        }
    }
    let mut frame = simulate(&model, &env, &sim_config(cfg, duration, q0), &channels)?;
    diagnostics(&frame, &mut s.warnings);
    frame.discard_before(cfg.integrator.transient);

    let series = frame
        .channel(&moment.name())
        .expect("moment channel recorded");
    let spectral = SpectralConfig {
        sample_rate: cfg.integrator.output_rate,
        segment_length: cfg.outputs.segment_length,
        overlap: cfg.outputs.overlap,
        window: Window::Hann,
    };
    let psd = welch_psd(series, &spectral)?;
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / series.len() as f64;
    s.push("moment_mean_Nm", mean, "timeseries.csv");
    s.push("moment_std_Nm", var.sqrt(), "timeseries.csv");
    s.push("psd_0Hz", psd.psd[0], "psd.csv");

    let mut sums = Vec::new();
    for b in &cfg.outputs.bands {
        let sum = band_psd_sum(&psd.frequencies, &psd.psd, b[0], b[1])?;
        s.push(
            format!("psd_sum_{}", band_key(b[0], b[1])),
            sum,
            "bands.csv",
        );
        if let Some(k) = psd.peak_in(b[0], b[1]) {
            s.push(
                format!("psd_peak_{}", band_key(b[0], b[1])),
                psd.frequencies[k],
                "psd.csv",
            );
        }
        sums.push(sum);
    }

    let mut artifacts = vec![
        Artifact::render("timeseries.csv", |out| frame.write_csv(out, Some(&c)))?,
        Artifact::render("psd.csv", |out| psd.write_csv(out, Some(&c)))?,
        Artifact::render("bands.csv", |out| {
            writeln!(out, "# {c}")?;
            writeln!(out, "# channel={}", moment.name())?;
            writeln!(out, "band_lo_Hz,band_hi_Hz,psd_sum")?;
            for (b, sum) in cfg.outputs.bands.iter().zip(&sums) {
                writeln!(out, "{},{},{}", fmt_f64(b[0]), fmt_f64(b[1]), fmt_f64(*sum))?;
            }
            Ok(())
        })?,
    ];
    if let Some(r) = &sea {
        artifacts.push(Artifact::render("wave_elevation.csv", |out| {
            writeln!(out, "# {c}")?;
            writeln!(out, "t_s,eta_m")?;
            for &t in &frame.time {
                writeln!(
                    out,
                    "{},{}",
                    fmt_f64(t),
                    fmt_f64(r.surface_elevation(0.0, t))
                )?;
            }
            Ok(())
        })?);
    }
    Ok(RunOutput {
        summary: s,
        artifacts,
    })
}
