//! Per-frame kinematic features: relative motion, uncertain velocities,
//! DRAC variants, scenario manifests and z-score normalization.
//!
//! Relative quantities follow the "positive when approaching" convention:
//! `dv_x > 0` means the longitudinal centre offset is shrinking.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scenario::{EventTrajectory, Family, Frame, VehicleState};

/// Smallest gap DRAC divides by, m.
pub const DRAC_MIN_GAP: f64 = 0.1;

/// Per-axis uncertain-velocity magnitudes of the subject and neighbours, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySigmas {
    pub subject_x: f64,
    pub subject_y: f64,
    pub neighbour_x: f64,
    pub neighbour_y: f64,
}

impl UncertaintySigmas {
    pub const ZERO: UncertaintySigmas = UncertaintySigmas {
        subject_x: 0.0,
        subject_y: 0.0,
        neighbour_x: 0.0,
        neighbour_y: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Role {
    Subject,
    Neighbour,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Relative {
    pub dx: f64,
    pub dy: f64,
    pub dv_x: f64,
    pub dv_y: f64,
    pub da_x: f64,
    pub da_y: f64,
}

fn neighbour(frame: &Frame, index: usize) -> Result<&VehicleState> {
    frame.neighbours.get(index).ok_or(Error::MissingNeighbour {
        index,
        available: frame.neighbours.len(),
    })
}

/// Approach rate and its derivative along one axis for a centre offset
/// `offset = p_n - p_s`, relative velocity `dv = v_n - v_s` and relative
/// acceleration `da = a_n - a_s`.
fn approach(offset: f64, dv: f64, da: f64) -> (f64, f64) {
    if offset > 0.0 {
        (-dv, -da)
    } else if offset < 0.0 {
        (dv, da)
    } else if dv != 0.0 {
        // Passing through zero offset the distance always grows.
        (-dv.abs(), -dv.signum() * da)
    } else {
        (0.0, -da.abs())
    }
}

pub fn relative_kinematics(frame: &Frame, index: usize) -> Result<Relative> {
    let s = &frame.subject;
    let n = neighbour(frame, index)?;
    let (dv_x, da_x) = approach(n.x - s.x, n.vx - s.vx, n.ax - s.ax);
    let (dv_y, da_y) = approach(n.y - s.y, n.vy - s.vy, n.ay - s.ay);
    Ok(Relative {
        dx: (n.x - s.x).abs(),
        dy: (n.y - s.y).abs(),
        dv_x,
        dv_y,
        da_x,
        da_y,
    })
}

/// Uncertain velocity of `role`, directed from that vehicle toward the other
/// one of the pair `(subject, neighbours[index])`, scaled per axis.
pub fn uncertain_velocity(role: Role, frame: &Frame, index: usize, sigma_x: f64, sigma_y: f64) -> Result<(f64, f64)> {
    let s = &frame.subject;
    let n = neighbour(frame, index)?;
    let (ox, oy) = match role {
        Role::Subject => (n.x - s.x, n.y - s.y),
        Role::Neighbour => (s.x - n.x, s.y - n.y),
    };
    let norm = ox.hypot(oy);
    if norm == 0.0 {
        return Err(Error::CoincidentCentres);
    }
    Ok((sigma_x * ox / norm, sigma_y * oy / norm))
}

/// Deceleration rate to avoid a crash.
pub fn drac(v_s: f64, v_n: f64, gap: f64, gap_rate: f64) -> f64 {
    if gap_rate >= 0.0 {
        return 0.0;
    }
    let d = v_s - v_n;
    d * d / gap.max(DRAC_MIN_GAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DracSet {
    pub r_x: f64,
    pub r_y: f64,
    pub u_x: f64,
    pub u_y: f64,
}

pub fn drac_components(frame: &Frame, index: usize, sigmas: &UncertaintySigmas) -> Result<DracSet> {
    let s = &frame.subject;
    let n = neighbour(frame, index)?;
    let (us_x, us_y) = uncertain_velocity(Role::Subject, frame, index, sigmas.subject_x, sigmas.subject_y)?;
    let (un_x, un_y) = uncertain_velocity(Role::Neighbour, frame, index, sigmas.neighbour_x, sigmas.neighbour_y)?;
    let axis = |offset: f64, half: f64, vs: f64, vn: f64| {
        let gap = (offset.abs() - half).max(0.0);
        let rate = if offset >= 0.0 { vn - vs } else { vs - vn };
        drac(vs, vn, gap, rate)
    };
    let ox = n.x - s.x;
    let oy = n.y - s.y;
    let hx = 0.5 * (n.length + s.length);
    let hy = 0.5 * (n.width + s.width);
    Ok(DracSet {
        r_x: axis(ox, hx, s.vx, n.vx),
        r_y: axis(oy, hy, s.vy, n.vy),
        u_x: axis(ox, hx, us_x, un_x),
        u_y: axis(oy, hy, us_y, un_y),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    VsX,
    VsY,
    AsX,
    AsY,
    VnX,
    VnY,
    AnX,
    AnY,
    Dx,
    Dy,
    DvX,
    DvY,
    DaX,
    DaY,
    DvSuX,
    DvSuY,
    DvNuX,
    DvNuY,
    DracUX,
    DracUY,
    DracRX,
    DracRY,
}

struct FeatureDef {
    name: &'static str,
    quantity: Quantity,
    /// Neighbour slot: 0 = lead / interacting vehicle, 1 = SVM follower.
    neighbour: usize,
}

macro_rules! defs {
    ($($name:literal => $q:ident @ $n:literal),* $(,)?) => {
        &[$(FeatureDef { name: $name, quantity: Quantity::$q, neighbour: $n }),*]
    };
}

const VOCABULARY: &[FeatureDef] = defs![
    "v_s_x" => VsX @ 0,
    "v_s_y" => VsY @ 0,
    "a_s_x" => AsX @ 0,
    "a_s_y" => AsY @ 0,
    "v_n_x" => VnX @ 0,
    "v_n_y" => VnY @ 0,
    "a_n_x" => AnX @ 0,
    "a_n_y" => AnY @ 0,
    "dx" => Dx @ 0,
    "dy" => Dy @ 0,
    "dv_x" => DvX @ 0,
    "dv_y" => DvY @ 0,
    "da_x" => DaX @ 0,
    "da_y" => DaY @ 0,
    "dv_s_u_x" => DvSuX @ 0,
    "dv_s_u_y" => DvSuY @ 0,
    "dv_n_u_x" => DvNuX @ 0,
    "dv_n_u_y" => DvNuY @ 0,
    "drac_u_x" => DracUX @ 0,
    "drac_u_y" => DracUY @ 0,
    "drac_r_x" => DracRX @ 0,
    "drac_r_y" => DracRY @ 0,
    "v_nb_x" => VnX @ 1,
    "v_nb_y" => VnY @ 1,
    "a_nb_x" => AnX @ 1,
    "a_nb_y" => AnY @ 1,
    "dx_b" => Dx @ 1,
    "dy_b" => Dy @ 1,
    "dv_x_b" => DvX @ 1,
    "dv_y_b" => DvY @ 1,
    "da_x_b" => DaX @ 1,
    "da_y_b" => DaY @ 1,
    "dv_nb_u_x" => DvNuX @ 1,
    "dv_nb_u_y" => DvNuY @ 1,
    "drac_u_b_x" => DracUX @ 1,
    "drac_u_b_y" => DracUY @ 1,
    "drac_r_b_x" => DracRX @ 1,
    "drac_r_b_y" => DracRY @ 1,
];

fn lookup(name: &str) -> Result<&'static FeatureDef> {
    VOCABULARY
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| Error::UnknownFeature(name.to_string()))
}

/// Every feature name the extractor knows, in canonical order.
pub fn vocabulary() -> Vec<&'static str> {
    VOCABULARY.iter().map(|d| d.name).collect()
}

/// Ordered list of features fed to one scenario family's network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub family: Family,
    pub features: Vec<String>,
}

const HB_FEATURES: [&str; 11] = [
    "v_s_x", "a_s_x", "v_n_x", "a_n_x", "dx", "dv_x", "da_x", "dv_s_u_x", "dv_n_u_x", "drac_u_x", "drac_r_x",
];

const SVM_FOLLOWER: [&str; 11] = [
    "v_nb_x",
    "a_nb_x",
    "dx_b",
    "dy_b",
    "dv_x_b",
    "dv_y_b",
    "da_x_b",
    "dv_nb_u_x",
    "dv_nb_u_y",
    "drac_u_b_x",
    "drac_r_b_x",
];

impl FeatureManifest {
    pub fn default_for(family: Family) -> Self {
        let leading = || VOCABULARY.iter().filter(|d| d.neighbour == 0).map(|d| d.name);
        let features: Vec<&str> = match family {
            Family::Hb => HB_FEATURES.to_vec(),
            Family::Mb => leading().filter(|n| *n != "da_y").collect(),
            Family::Lc => leading().filter(|n| *n != "da_x" && *n != "da_y").collect(),
            Family::Svm => leading().filter(|n| *n != "da_y").chain(SVM_FOLLOWER).collect(),
        };
        Self {
            family,
            features: features.into_iter().map(String::from).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn validate(&self) -> Result<()> {
        for name in &self.features {
            let def = lookup(name)?;
            if def.neighbour > 0 && self.family != Family::Svm {
                return Err(Error::FeatureUnavailable {
                    feature: name.clone(),
                    scenario: self.family.name().to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Default manifests keyed by family name, as written to `manifest.json`.
pub fn default_manifests() -> BTreeMap<String, Vec<String>> {
    [Family::Mb, Family::Hb, Family::Lc, Family::Svm]
        .into_iter()
        .map(|f| (f.name().to_string(), FeatureManifest::default_for(f).features))
        .collect()
}

#[derive(Default, Clone, Copy)]
struct PairValues {
    rel: Relative,
    us: (f64, f64),
    un: (f64, f64),
    drac: DracSet,
}

fn pair_values(frame: &Frame, index: usize, sigmas: &UncertaintySigmas) -> Result<PairValues> {
    Ok(PairValues {
        rel: relative_kinematics(frame, index)?,
        us: uncertain_velocity(Role::Subject, frame, index, sigmas.subject_x, sigmas.subject_y)?,
        un: uncertain_velocity(Role::Neighbour, frame, index, sigmas.neighbour_x, sigmas.neighbour_y)?,
        drac: drac_components(frame, index, sigmas)?,
    })
}

fn value(q: Quantity, s: &VehicleState, n: &VehicleState, p: &PairValues) -> f64 {
    use Quantity::*;
    match q {
        VsX => s.vx,
        VsY => s.vy,
        AsX => s.ax,
        AsY => s.ay,
        VnX => n.vx,
        VnY => n.vy,
        AnX => n.ax,
        AnY => n.ay,
        Dx => p.rel.dx,
        Dy => p.rel.dy,
        DvX => p.rel.dv_x,
        DvY => p.rel.dv_y,
        DaX => p.rel.da_x,
        DaY => p.rel.da_y,
        DvSuX => p.us.0,
        DvSuY => p.us.1,
        DvNuX => p.un.0,
        DvNuY => p.un.1,
        DracUX => p.drac.u_x,
        DracUY => p.drac.u_y,
        DracRX => p.drac.r_x,
        DracRY => p.drac.r_y,
    }
}

/// Feature matrix (frames × manifest features) of one trajectory.
pub fn build_features(traj: &EventTrajectory, manifest: &FeatureManifest, sigmas: &UncertaintySigmas) -> Result<Matrix> {
    if manifest.family != traj.scenario.family() {
        return Err(Error::ManifestMismatch {
            manifest: manifest.family.name().to_string(),
            trajectory: traj.scenario.name().to_string(),
        });
    }
    let defs = manifest
        .features
        .iter()
        .map(|n| lookup(n))
        .collect::<Result<Vec<_>>>()?;
    let available = traj.scenario.neighbour_count();
    if let Some(d) = defs.iter().find(|d| d.neighbour >= available) {
        return Err(Error::FeatureUnavailable {
            feature: d.name.to_string(),
            scenario: traj.scenario.name().to_string(),
        });
    }
    let slots = defs.iter().map(|d| d.neighbour + 1).max().unwrap_or(0);
    let mut m = Matrix::zeros(traj.frames.len(), defs.len());
    let mut pairs = vec![PairValues::default(); slots];
    for (k, frame) in traj.frames.iter().enumerate() {
        for (i, p) in pairs.iter_mut().enumerate() {
            *p = pair_values(frame, i, sigmas)?;
        }
        let row = m.row_mut(k);
        for (c, d) in defs.iter().enumerate() {
            row[c] = value(d.quantity, &frame.subject, &frame.neighbours[d.neighbour], &pairs[d.neighbour]);
        }
    }
    Ok(m)
}

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn zscore_fit(m: &Matrix, names: &[String]) -> Result<NormStats> {
    if names.len() != m.cols {
        return Err(Error::DimensionMismatch {
            expected: m.cols,
            got: names.len(),
        });
    }
    if m.rows == 0 {
        return Err(Error::InvalidConfig("cannot fit normalization on zero rows".into()));
    }
    let n = m.rows as f64;
    let mut mean = vec![0.0; m.cols];
    let mut std = vec![0.0; m.cols];
    for c in 0..m.cols {
        let rough = (0..m.rows).map(|r| m.get(r, c)).sum::<f64>() / n;
        // Second pass removes the rounding left in the first mean.
        let mu = rough + (0..m.rows).map(|r| m.get(r, c) - rough).sum::<f64>() / n;
        let var = (0..m.rows).map(|r| (m.get(r, c) - mu).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !(sd > 1e-12 * (1.0 + mu.abs())) {
            return Err(Error::ZeroVariance(names[c].clone()));
        }
        mean[c] = mu;
        std[c] = sd;
    }
    Ok(NormStats {
        names: names.to_vec(),
        mean,
        std,
    })
}

pub fn zscore_apply(m: &Matrix, stats: &NormStats) -> Result<Matrix> {
    if m.cols != stats.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: stats.mean.len(),
            got: m.cols,
        });
    }
    let mut out = m.clone();
    for r in 0..out.rows {
        for (c, v) in out.row_mut(r).iter_mut().enumerate() {
            *v = (*v - stats.mean[c]) / stats.std[c];
        }
    }
    Ok(out)
}
