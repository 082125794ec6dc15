//! Station tables, hollow-frustum rigid bodies and the mid-node discretization.
//!
//! Each beam element is split at its mid-node into two rigid bodies. A joint
//! cluster (two bending springs and one torsion spring) sits at the mid-node;
//! element boundaries are rigid welds between neighbouring half-element bodies.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use crate::csvio;
use crate::error::{Error, Result};

pub const STATION_HEADER: [&str; 6] = [
    "elevation_m",
    "outer_diameter_m",
    "wall_thickness_m",
    "density_kgm3",
    "E_Pa",
    "G_Pa",
];

// 4-point Gauss-Legendre on [-1, 1]; exact for polynomials up to degree 7.
const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

fn gauss4(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL4_NODES
        .iter()
        .zip(GL4_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + (b - a) * s
}

/// One row of a station table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub elevation: f64,
    pub outer_diameter: f64,
    pub wall_thickness: f64,
    pub density: f64,
    pub youngs_modulus: f64,
    pub shear_modulus: f64,
}

impl Station {
    pub fn inner_diameter(&self) -> f64 {
        self.outer_diameter - 2.0 * self.wall_thickness
    }

    pub fn area(&self) -> f64 {
        let d_i = self.inner_diameter();
        PI / 4.0 * (self.outer_diameter.powi(2) - d_i.powi(2))
    }

    /// Second moment of area of the annulus about a diameter.
    pub fn second_moment(&self) -> f64 {
        annulus_second_moment(self.outer_diameter, self.wall_thickness)
    }

    /// Polar moment of the annulus; twice the second moment.
    pub fn polar_moment(&self) -> f64 {
        2.0 * self.second_moment()
    }

    fn interpolate(&self, other: &Station, s: f64, elevation: f64) -> Station {
        Station {
            elevation,
            outer_diameter: lerp(self.outer_diameter, other.outer_diameter, s),
            wall_thickness: lerp(self.wall_thickness, other.wall_thickness, s),
            density: lerp(self.density, other.density, s),
            youngs_modulus: lerp(self.youngs_modulus, other.youngs_modulus, s),
            shear_modulus: lerp(self.shear_modulus, other.shear_modulus, s),
        }
    }
}

pub fn annulus_second_moment(outer_diameter: f64, wall_thickness: f64) -> f64 {
    let d_i = outer_diameter - 2.0 * wall_thickness;
    PI / 64.0 * (outer_diameter.powi(4) - d_i.powi(4))
}

/// Cross-section geometry and material versus elevation, linearly interpolated
/// between stations.
#[derive(Debug, Clone, PartialEq)]
pub struct StationTable {
    stations: Vec<Station>,
}

impl StationTable {
    pub fn new(stations: Vec<Station>) -> Result<Self> {
        if stations.len() < 2 {
            return Err(Error::InvalidGeometry(format!(
                "station table needs at least 2 stations, got {}",
                stations.len()
            )));
        }
        for pair in stations.windows(2) {
            if pair[1].elevation <= pair[0].elevation {
                return Err(Error::InvalidGeometry(format!(
                    "station elevations must be strictly increasing ({} m followed by {} m)",
                    pair[0].elevation, pair[1].elevation
                )));
            }
        }
        for s in &stations {
            let finite = [
                s.elevation,
                s.outer_diameter,
                s.wall_thickness,
                s.density,
                s.youngs_modulus,
                s.shear_modulus,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidGeometry(format!(
                    "non-finite value at elevation {} m",
                    s.elevation
                )));
            }
            if !(s.wall_thickness > 0.0 && s.outer_diameter > 2.0 * s.wall_thickness) {
                return Err(Error::InvalidGeometry(format!(
                    "need outer_diameter > 2*wall_thickness > 0 at elevation {} m",
                    s.elevation
                )));
            }
            if !(s.density > 0.0 && s.youngs_modulus > 0.0 && s.shear_modulus > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "density and moduli must be positive at elevation {} m",
                    s.elevation
                )));
            }
        }
        Ok(Self { stations })
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        let rows = csvio::read_numeric(reader, source, &STATION_HEADER)?;
        Self::from_rows(rows, source)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let rows = csvio::read_numeric_path(path, &STATION_HEADER)?;
        Self::from_rows(rows, &path.display().to_string())
    }

    fn from_rows(rows: csvio::NumericRows, source: &str) -> Result<Self> {
        let stations = rows
            .rows
            .iter()
            .map(|(_, v)| Station {
                elevation: v[0],
                outer_diameter: v[1],
                wall_thickness: v[2],
                density: v[3],
                youngs_modulus: v[4],
                shear_modulus: v[5],
            })
            .collect();
        Self::new(stations).map_err(|e| Error::Parse {
            path: source.to_string(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn bottom(&self) -> f64 {
        self.stations[0].elevation
    }

    pub fn top(&self) -> f64 {
        self.stations[self.stations.len() - 1].elevation
    }

    pub fn length(&self) -> f64 {
        self.top() - self.bottom()
    }

    fn check_range(&self, z: f64) -> Result<()> {
        let tol = 1e-9 * self.length().max(1.0);
        if z < self.bottom() - tol || z > self.top() + tol {
            return Err(Error::OutOfRange {
                value: z,
                lo: self.bottom(),
                hi: self.top(),
            });
        }
        Ok(())
    }

    /// Interpolated cross-section at elevation `z`.
    pub fn section_at(&self, z: f64) -> Result<Station> {
        self.check_range(z)?;
        let z = z.clamp(self.bottom(), self.top());
        let idx = self
            .stations
            .partition_point(|s| s.elevation <= z)
            .clamp(1, self.stations.len() - 1);
        let (a, b) = (&self.stations[idx - 1], &self.stations[idx]);
        let s = (z - a.elevation) / (b.elevation - a.elevation);
        Ok(a.interpolate(b, s, z))
    }

    /// Elevations of stations strictly inside `(lo, hi)`.
    fn interior_stations(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        self.stations
            .iter()
            .map(|s| s.elevation)
            .filter(move |&z| z > lo && z < hi)
    }

    /// Breakpoints covering `[lo, hi]`: the ends plus every station in between.
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![lo];
        pts.extend(self.interior_stations(lo, hi));
        pts.push(hi);
        pts
    }

    /// Integral of rho*A over `[lo, hi]`. Exact: the integrand is a cubic on
    /// every station interval.
    pub fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check_range(lo)?;
        self.check_range(hi)?;
        let pts = self.breakpoints(lo, hi);
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (self.section_at(w[0])?, self.section_at(w[1])?);
            total += gauss4(w[0], w[1], |z| {
                let s = (z - w[0]) / (w[1] - w[0]);
                let st = a.interpolate(&b, s, z);
                st.density * st.area()
            });
        }
        Ok(total)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_between(self.bottom(), self.top())
            .expect("full range is always valid")
    }

    /// The part of the table at or above `z`, with an interpolated station at `z`.
    pub fn truncated_below(&self, z: f64) -> Result<StationTable> {
        self.check_range(z)?;
        if z >= self.top() {
            return Err(Error::OutOfRange {
                value: z,
                lo: self.bottom(),
                hi: self.top(),
            });
        }
        let mut stations = vec![self.section_at(z)?];
        stations.extend(self.stations.iter().copied().filter(|s| s.elevation > z));
        StationTable::new(stations)
    }

    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "{}", STATION_HEADER.join(","))?;
        for s in &self.stations {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                csvio::fmt_f64(s.elevation),
                csvio::fmt_f64(s.outer_diameter),
                csvio::fmt_f64(s.wall_thickness),
                csvio::fmt_f64(s.density),
                csvio::fmt_f64(s.youngs_modulus),
                csvio::fmt_f64(s.shear_modulus)
            )?;
        }
        Ok(())
    }
}

/// Hollow conical frustum with uniform density; z runs from 0 (base) to `height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrustumSegment {
    pub height: f64,
    pub outer_radius_bottom: f64,
    pub outer_radius_top: f64,
    pub inner_radius_bottom: f64,
    pub inner_radius_top: f64,
    pub density: f64,
}

impl FrustumSegment {
    pub fn validate(&self) -> Result<()> {
        let ok = self.height > 0.0
            && self.inner_radius_bottom >= 0.0
            && self.inner_radius_top >= 0.0
            && self.outer_radius_bottom >= self.inner_radius_bottom
            && self.outer_radius_top >= self.inner_radius_top
            && (self.outer_radius_bottom > self.inner_radius_bottom
                || self.outer_radius_top > self.inner_radius_top)
            && self.density > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGeometry(format!(
                "degenerate frustum {self:?}"
            )))
        }
    }

    pub fn outer_radius(&self, z: f64) -> f64 {
        lerp(
            self.outer_radius_bottom,
            self.outer_radius_top,
            z / self.height,
        )
    }

    pub fn inner_radius(&self, z: f64) -> f64 {
        lerp(
            self.inner_radius_bottom,
            self.inner_radius_top,
            z / self.height,
        )
    }

    /// The sub-frustum between heights `z0 < z1` with the same taper.
    pub fn slice(&self, z0: f64, z1: f64) -> FrustumSegment {
        FrustumSegment {
            height: z1 - z0,
            outer_radius_bottom: self.outer_radius(z0),
            outer_radius_top: self.outer_radius(z1),
            inner_radius_bottom: self.inner_radius(z0),
            inner_radius_top: self.inner_radius(z1),
            density: self.density,
        }
    }
}

/// Mass properties of an axisymmetric body. Inertias are about the centre of
/// mass in body axes, z along the body axis; `z_cm` is measured from the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyProperties {
    pub volume: f64,
    pub mass: f64,
    pub z_cm: f64,
    pub i_xx: f64,
    pub i_yy: f64,
    pub i_zz: f64,
}

impl RigidBodyProperties {
    /// Stack bodies along a common axis. Each entry carries the elevation of
    /// its base relative to the composite base.
    pub fn compose(parts: &[(f64, RigidBodyProperties)]) -> RigidBodyProperties {
        let mass: f64 = parts.iter().map(|(_, p)| p.mass).sum();
        let volume: f64 = parts.iter().map(|(_, p)| p.volume).sum();
        let z_cm = parts
            .iter()
            .map(|(b, p)| p.mass * (b + p.z_cm))
            .sum::<f64>()
            / mass;
        let i_xx = parts
            .iter()
            .map(|(b, p)| p.i_xx + p.mass * (b + p.z_cm - z_cm).powi(2))
            .sum();
        let i_zz = parts.iter().map(|(_, p)| p.i_zz).sum();
        RigidBodyProperties {
            volume,
            mass,
            z_cm,
            i_xx,
            i_yy: i_xx,
            i_zz,
        }
    }
}

/// Volume, centre of mass and inertia tensor of a hollow conical frustum.
///
/// The integrals are polynomial in z (degree <= 6), so the 4-point
/// Gauss-Legendre rule evaluates them exactly. `R^2 - r^2` is factored as
/// `(R - r)(R + r)` to keep thin walls free of cancellation. The transverse
/// inertia is first taken about the base and then shifted to the centre of
/// mass.
pub fn frustum_mass_properties(seg: &FrustumSegment) -> Result<RigidBodyProperties> {
    seg.validate()?;
    let h = seg.height;
    let wall = |z: f64| seg.outer_radius(z) - seg.inner_radius(z);
    let sum = |z: f64| seg.outer_radius(z) + seg.inner_radius(z);
    // R^2 - r^2 and R^4 - r^4
    let d2 = |z: f64| wall(z) * sum(z);
    let d4 = |z: f64| d2(z) * (seg.outer_radius(z).powi(2) + seg.inner_radius(z).powi(2));

    let volume = PI * gauss4(0.0, h, d2);
    let mass = seg.density * volume;
    let z_cm = PI * gauss4(0.0, h, |z| z * d2(z)) / volume;
    let i_zz = seg.density * PI / 2.0 * gauss4(0.0, h, d4);
    let i_xx_base = seg.density * gauss4(0.0, h, |z| PI / 4.0 * d4(z) + PI * z * z * d2(z));
    let i_xx = i_xx_base - mass * z_cm * z_cm;

    Ok(RigidBodyProperties {
        volume,
        mass,
        z_cm,
        i_xx,
        i_yy: i_xx,
        i_zz,
    })
}

/// Rotational bending spring `E*I/l` lumping a beam segment of length `l`.
pub fn bending_spring_constant(
    youngs_modulus: f64,
    second_moment: f64,
    spacing: f64,
) -> Result<f64> {
    if spacing == 0.0 {
        return Err(Error::DivisionByZero("joint spacing is zero"));
    }
    if !(youngs_modulus > 0.0 && second_moment > 0.0 && spacing > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "bending spring needs E, I, l > 0 (E={youngs_modulus}, I={second_moment}, l={spacing})"
        )));
    }
    Ok(youngs_modulus * second_moment / spacing)
}

/// Rotational torsion spring `G*J/l`.
pub fn torsion_spring_constant(shear_modulus: f64, polar_moment: f64, spacing: f64) -> Result<f64> {
    if spacing == 0.0 {
        return Err(Error::DivisionByZero("joint spacing is zero"));
    }
    if !(shear_modulus > 0.0 && polar_moment > 0.0 && spacing > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "torsion spring needs G, J, l > 0 (G={shear_modulus}, J={polar_moment}, l={spacing})"
        )));
    }
    Ok(shear_modulus * polar_moment / spacing)
}

/// A half-element rigid body. Split further at station elevations so that
/// every piece is an exact linear taper.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfElementBody {
    pub base_elevation: f64,
    pub top_elevation: f64,
    /// Pieces stacked from the base, each with the elevation of its own base.
    pub pieces: Vec<(f64, FrustumSegment)>,
    pub properties: RigidBodyProperties,
}

impl HalfElementBody {
    fn build(table: &StationTable, lo: f64, hi: f64) -> Result<Self> {
        let pts = table.breakpoints(lo, hi);
        let mut pieces = Vec::with_capacity(pts.len() - 1);
        let mut parts = Vec::with_capacity(pts.len() - 1);
        for w in pts.windows(2) {
            let (a, b) = (table.section_at(w[0])?, table.section_at(w[1])?);
            let mut seg = FrustumSegment {
                height: w[1] - w[0],
                outer_radius_bottom: a.outer_diameter / 2.0,
                outer_radius_top: b.outer_diameter / 2.0,
                inner_radius_bottom: a.inner_diameter() / 2.0,
                inner_radius_top: b.inner_diameter() / 2.0,
                density: 1.0,
            };
            // Mass-equivalent uniform density over the piece.
            let unit = frustum_mass_properties(&seg)?;
            seg.density = table.mass_between(w[0], w[1])? / unit.volume;
            let props = frustum_mass_properties(&seg)?;
            parts.push((w[0] - lo, props));
            pieces.push((w[0], seg));
        }
        Ok(Self {
            base_elevation: lo,
            top_elevation: hi,
            pieces,
            properties: RigidBodyProperties::compose(&parts),
        })
    }

    pub fn height(&self) -> f64 {
        self.top_elevation - self.base_elevation
    }

    /// Outer diameter at an elevation inside the body.
    pub fn outer_diameter_at(&self, z: f64) -> f64 {
        let idx = self
            .pieces
            .iter()
            .rposition(|(base, _)| *base <= z)
            .unwrap_or(0);
        let (base, seg) = &self.pieces[idx];
        2.0 * seg.outer_radius((z - base).clamp(0.0, seg.height))
    }
}

/// Nodal section data of one joint cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSection {
    pub elevation: f64,
    /// Length of beam lumped into this joint (the element length).
    pub spacing: f64,
    pub youngs_modulus: f64,
    pub shear_modulus: f64,
    pub second_moment: f64,
    pub polar_moment: f64,
    pub bending_stiffness: f64,
    pub torsion_stiffness: f64,
}

impl JointSection {
    pub fn bending_rigidity(&self) -> f64 {
        self.youngs_modulus * self.second_moment
    }

    pub fn torsional_rigidity(&self) -> f64 {
        self.shear_modulus * self.polar_moment
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationPlan {
    pub element_boundaries: Vec<f64>,
    pub joints: Vec<JointSection>,
}

impl DiscretizationPlan {
    pub fn joint_elevations(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.elevation).collect()
    }

    pub fn n_elements(&self) -> usize {
        self.joints.len()
    }
}

/// How element boundaries are laid out over the table.
#[derive(Debug, Clone, PartialEq)]
pub enum Refinement {
    /// Equal-length elements over the whole table.
    Uniform,
    /// Equal-length elements inside each segment delimited by these interior
    /// elevations; elements are shared out in proportion to segment length
    /// with at least one per segment.
    Segments(Vec<f64>),
    /// Explicit `(segment top elevation, element count)` pairs, bottom to top.
    /// The last top must equal the table top.
    Counts(Vec<(f64, usize)>),
}

/// Split the table into elements, each element into two half bodies at its
/// mid-node, and compute the joint springs at each mid-node.
pub fn discretize_structure(
    table: &StationTable,
    n_elements: usize,
    refinement: &Refinement,
) -> Result<(Vec<HalfElementBody>, DiscretizationPlan)> {
    let boundaries = element_boundaries(table, n_elements, refinement)?;
    discretize_at(table, &boundaries)
}

fn element_boundaries(
    table: &StationTable,
    n_elements: usize,
    refinement: &Refinement,
) -> Result<Vec<f64>> {
    let (lo, hi) = (table.bottom(), table.top());
    let counts: Vec<(f64, usize)> = match refinement {
        Refinement::Uniform => {
            if n_elements == 0 {
                return Err(Error::Config("n_elements must be at least 1".into()));
            }
            vec![(hi, n_elements)]
        }
        Refinement::Segments(interior) => {
            let mut edges = vec![lo];
            for &z in interior {
                table.check_range(z)?;
                if z > *edges.last().unwrap() && z < hi {
                    edges.push(z);
                }
            }
            edges.push(hi);
            let n_seg = edges.len() - 1;
            if n_elements < n_seg {
                return Err(Error::Config(format!(
                    "{n_elements} elements cannot cover {n_seg} segments"
                )));
            }
            let lengths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
            let counts = apportion(&lengths, n_elements);
            edges[1..].iter().copied().zip(counts).collect()
        }
        Refinement::Counts(c) => c.clone(),
    };

    let mut boundaries = vec![lo];
    for &(top, n) in &counts {
        table.check_range(top)?;
        let base = *boundaries.last().unwrap();
        if n == 0 || top <= base {
            return Err(Error::Config(format!(
                "segment ending at {top} m needs a positive length and element count"
            )));
        }
        for k in 1..=n {
            boundaries.push(if k == n {
                top
            } else {
                base + (top - base) * k as f64 / n as f64
            });
        }
    }
    if (boundaries.last().unwrap() - hi).abs() > 1e-9 * table.length() {
        return Err(Error::OutOfRange {
            value: *boundaries.last().unwrap(),
            lo,
            hi,
        });
    }
    *boundaries.last_mut().unwrap() = hi;
    Ok(boundaries)
}

/// Largest-remainder apportionment with a floor of one per bin.
fn apportion(lengths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    let spare = total - lengths.len();
    let exact: Vec<f64> = lengths.iter().map(|l| l / sum * spare as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize + 1).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Discretize with explicit element boundaries (ascending, spanning the table).
pub fn discretize_at(
    table: &StationTable,
    boundaries: &[f64],
) -> Result<(Vec<HalfElementBody>, DiscretizationPlan)> {
    if boundaries.len() < 2 {
        return Err(Error::Config("need at least one element".into()));
    }
    for &z in boundaries {
        table.check_range(z)?;
    }
    if boundaries.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "element boundaries must be strictly increasing".into(),
        ));
    }
    let mut bodies = Vec::with_capacity(2 * (boundaries.len() - 1));
    let mut joints = Vec::with_capacity(boundaries.len() - 1);
    for w in boundaries.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        bodies.push(HalfElementBody::build(table, w[0], mid)?);
        bodies.push(HalfElementBody::build(table, mid, w[1])?);

        let section = table.section_at(mid)?;
        let spacing = w[1] - w[0];
        let second_moment = section.second_moment();
        let polar_moment = section.polar_moment();
        joints.push(JointSection {
            elevation: mid,
            spacing,
            youngs_modulus: section.youngs_modulus,
            shear_modulus: section.shear_modulus,
            second_moment,
            polar_moment,
            bending_stiffness: bending_spring_constant(
                section.youngs_modulus,
                second_moment,
                spacing,
            )?,
            torsion_stiffness: torsion_spring_constant(
                section.shear_modulus,
                polar_moment,
                spacing,
            )?,
        });
    }
    Ok((
        bodies,
        DiscretizationPlan {
            element_boundaries: boundaries.to_vec(),
            joints,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn steel(z: f64, d: f64, t: f64) -> Station {
        Station {
            elevation: z,
            outer_diameter: d,
            wall_thickness: t,
            density: 8500.0,
            youngs_modulus: 2.1e11,
            shear_modulus: 8.08e10,
        }
    }

    fn cylinder_table(length: f64) -> StationTable {
        StationTable::new(vec![steel(0.0, 4.0, 0.05), steel(length, 4.0, 0.05)]).unwrap()
    }

    #[test]
    fn hollow_cylinder_properties() {
        let seg = FrustumSegment {
            height: 10.0,
            outer_radius_bottom: 2.0,
            outer_radius_top: 2.0,
            inner_radius_bottom: 1.0,
            inner_radius_top: 1.0,
            density: 8500.0,
        };
        let p = frustum_mass_properties(&seg).unwrap();
        assert_relative_eq!(p.volume, 94.247_779_607_693_8, max_relative = 1e-12);
        assert_relative_eq!(p.mass, 8500.0 * 30.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(p.z_cm, 5.0, max_relative = 1e-12);
        assert_relative_eq!(p.i_zz, 0.5 * p.mass * 5.0, max_relative = 1e-12);
        // thick tube about a transverse axis through the centre
        let i_xx = p.mass / 12.0 * (3.0 * (4.0 + 1.0) + 100.0);
        assert_relative_eq!(p.i_xx, i_xx, max_relative = 1e-12);
        assert_eq!(p.i_xx, p.i_yy);
    }

    #[test]
    fn solid_cone_centroid() {
        let seg = FrustumSegment {
            height: 6.0,
            outer_radius_bottom: 3.0,
            outer_radius_top: 0.0,
            inner_radius_bottom: 0.0,
            inner_radius_top: 0.0,
            density: 1000.0,
        };
        let p = frustum_mass_properties(&seg).unwrap();
        assert_relative_eq!(p.volume, PI * 9.0 * 6.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(p.z_cm, 1.5, max_relative = 1e-12);
        // solid cone: I_zz = 3/10 m R^2
        assert_relative_eq!(p.i_zz, 0.3 * p.mass * 9.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_frusta_rejected() {
        let mut seg = FrustumSegment {
            height: 1.0,
            outer_radius_bottom: 1.0,
            outer_radius_top: 1.0,
            inner_radius_bottom: 0.5,
            inner_radius_top: 0.5,
            density: 1.0,
        };
        seg.height = 0.0;
        assert!(matches!(
            frustum_mass_properties(&seg),
            Err(Error::InvalidGeometry(_))
        ));
        seg.height = 1.0;
        seg.inner_radius_bottom = 1.0;
        seg.inner_radius_top = 1.0;
        assert!(matches!(
            frustum_mass_properties(&seg),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn spring_constants() {
        assert_relative_eq!(bending_spring_constant(2.1e11, 0.5, 5.0).unwrap(), 2.1e10);
        assert_eq!(bending_spring_constant(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(torsion_spring_constant(8.08e10, 1.0, 1.0).unwrap(), 8.08e10);
        assert!(matches!(
            bending_spring_constant(1.0, 1.0, 0.0),
            Err(Error::DivisionByZero(_))
        ));
        assert!(matches!(
            torsion_spring_constant(1.0, 1.0, 0.0),
            Err(Error::DivisionByZero(_))
        ));

        // annulus hand computation, D_o = 9.0, t = 0.11
        // by radii: pi/4 (R^4 - r^4)
        let (r_o, r_i): (f64, f64) = (4.5, 4.39);
        let i_a = PI / 4.0 * (r_o.powi(4) - r_i.powi(4));
        assert_relative_eq!(annulus_second_moment(9.0, 0.11), i_a, max_relative = 1e-12);
        let k = bending_spring_constant(2.1e11, i_a, 4.0).unwrap();
        assert_relative_eq!(k, 2.1e11 * i_a / 4.0, max_relative = 1e-12);

        let j = 2.0 * i_a;
        let kt = torsion_spring_constant(8.08e10, j, 4.0).unwrap();
        assert_relative_eq!(kt / k, 2.0 * 8.08e10 / 2.1e11, max_relative = 1e-14);
    }

    #[test]
    fn uniform_cylinder_discretization() {
        let table = cylinder_table(100.0);
        let (bodies, plan) = discretize_structure(&table, 4, &Refinement::Uniform).unwrap();
        assert_eq!(bodies.len(), 8);
        for b in &bodies {
            assert_relative_eq!(b.height(), 12.5, max_relative = 1e-14);
        }
        let z: Vec<f64> = plan.joint_elevations();
        assert_eq!(z, vec![12.5, 37.5, 62.5, 87.5]);
        let k0 = plan.joints[0].bending_stiffness;
        assert!(plan
            .joints
            .iter()
            .all(|j| (j.bending_stiffness - k0).abs() <= 1e-12 * k0));
        let total: f64 = plan.joints.iter().map(|j| j.spacing).sum();
        assert_relative_eq!(total, 100.0, max_relative = 1e-14);
    }

    #[test]
    fn linear_taper_mid_nodes() {
        // D from 6 m at 0 to 4 m at 40 m, t 0.04 constant
        let table = StationTable::new(vec![steel(0.0, 6.0, 0.04), steel(40.0, 4.0, 0.04)]).unwrap();
        let (_, plan) = discretize_structure(&table, 2, &Refinement::Uniform).unwrap();
        // mid-nodes at 10 m and 30 m: D = 5.5 m and 4.5 m
        let expected_d = [5.5, 4.5];
        for (j, d) in plan.joints.iter().zip(expected_d) {
            let d_i: f64 = d - 0.08;
            let i_a = PI / 64.0 * (d.powi(4) - d_i.powi(4));
            assert_relative_eq!(j.second_moment, i_a, max_relative = 1e-13);
            assert_relative_eq!(
                j.bending_stiffness,
                2.1e11 * i_a / 20.0,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn segment_boundaries_respected() {
        let table = StationTable::new(vec![
            steel(-40.0, 9.0, 0.1),
            steel(0.0, 9.0, 0.1),
            steel(30.0, 9.0, 0.1),
            steel(130.0, 6.0, 0.03),
        ])
        .unwrap();
        let (_, plan) =
            discretize_structure(&table, 17, &Refinement::Segments(vec![0.0, 30.0])).unwrap();
        assert_eq!(plan.n_elements(), 17);
        assert!(plan.element_boundaries.contains(&0.0));
        assert!(plan.element_boundaries.contains(&30.0));
        let err = discretize_structure(&table, 5, &Refinement::Counts(vec![(0.0, 2), (200.0, 3)]));
        assert!(matches!(err, Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn station_table_rejects_bad_rows() {
        assert!(StationTable::new(vec![steel(0.0, 4.0, 0.05)]).is_err());
        assert!(StationTable::new(vec![steel(1.0, 4.0, 0.05), steel(0.0, 4.0, 0.05)]).is_err());
        assert!(StationTable::new(vec![steel(0.0, 4.0, 2.0), steel(1.0, 4.0, 0.05)]).is_err());
    }

    #[test]
    fn csv_round_trip_and_comments() {
        let text = "# tower\nelevation_m,outer_diameter_m,wall_thickness_m,density_kgm3,E_Pa,G_Pa\n0,6,0.03,8500,2.1e11,8.08e10\n# mid\n100,4,0.02,8500,2.1e11,8.08e10\n";
        let table = StationTable::from_reader(text.as_bytes(), "mem").unwrap();
        assert_eq!(table.stations().len(), 2);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let again = StationTable::from_reader(buf.as_slice(), "mem").unwrap();
        assert_eq!(table, again);

        let bad = "elevation_m,outer_diameter_m\n0,1\n";
        assert!(matches!(
            StationTable::from_reader(bad.as_bytes(), "mem"),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad = "elevation_m,outer_diameter_m,wall_thickness_m,density_kgm3,E_Pa,G_Pa\n0,6,x,8500,2.1e11,8.08e10\n";
        assert!(matches!(
            StationTable::from_reader(bad.as_bytes(), "mem"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
