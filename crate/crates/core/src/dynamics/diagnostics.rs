//! Validity of the adiabatic elimination along a path.

use nalgebra::{DMatrix, DVector};

use super::effective::DriveSchedule;
use super::frames::{apply_signs, local_frame, GaugeTrack};
use super::path::ParamPath;
use super::DynamicsOptions;
use crate::error::Result;
use crate::par;
use crate::spectrum::{HamiltonianModel, RoleMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ValidityFlag {
    Ok,
    Marginal,
    Violated,
}

impl ValidityFlag {
    pub fn from_ratio(r: f64) -> Self {
        if r < 0.05 {
            ValidityFlag::Ok
        } else if r < 0.2 {
            ValidityFlag::Marginal
        } else {
            ValidityFlag::Violated
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ValidityFlag::Ok => "ok",
            ValidityFlag::Marginal => "marginal",
            ValidityFlag::Violated => "violated",
        }
    }
}

/// `(max |X_ja/(E_a − E_j)|, max |F·D_aj/(|E_a − E_j| − ω)|)` over `j ∈ {0, 2}` and auxiliaries `a`.
pub fn snapshot_ratios(
    energies: &DVector<f64>,
    drive: &DMatrix<f64>,
    motion: &DMatrix<f64>,
    roles: &RoleMap,
    amplitude: f64,
    omega: f64,
) -> (f64, f64) {
    let mut nonadiabatic: f64 = 0.0;
    let mut offresonance: f64 = 0.0;
    for j in [roles.state0, roles.state2] {
        for &a in &roles.auxiliary {
            let gap = energies[a] - energies[j];
            nonadiabatic = nonadiabatic.max((motion[(j, a)] / gap).abs());
            offresonance = offresonance.max((amplitude * drive[(a, j)] / (gap.abs() - omega)).abs());
        }
    }
    (nonadiabatic, offresonance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRatios {
    pub time: f64,
    pub nonadiabatic: f64,
    pub offresonance: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticityReport {
    pub nonadiabatic_max: f64,
    pub offresonance_max: f64,
    pub nonadiabatic_flag: ValidityFlag,
    pub offresonance_flag: ValidityFlag,
    pub probes: Vec<ProbeRatios>,
}

impl AdiabaticityReport {
    /// The worse of the two flags.
    pub fn flag(&self) -> ValidityFlag {
        self.nonadiabatic_flag.max(self.offresonance_flag)
    }
}

/// Both ratio families at `probes` uniformly spaced times over the whole path.
pub fn adiabaticity_report<M: HamiltonianModel>(
    model: &M,
    path: &ParamPath,
    drive: &DriveSchedule,
    probes: usize,
    opts: &DynamicsOptions,
) -> Result<AdiabaticityReport> {
    drive.validate()?;
    let track = GaugeTrack::build(model, path.curve(), opts)?;
    let n = probes.max(2);
    let roles = model.roles();
    let rows = par::try_map_range(opts.exec, n, |k| {
        let t = path.duration() * k as f64 / (n - 1) as f64;
        let (cycle, _) = path.phase(t);
        let (u, _) = path.u_at(t);
        let mut reference = track.reference(u).clone();
        if cycle % 2 == 1 && !track.is_trivial() {
            reference = apply_signs(model, &reference, track.holonomy());
        }
        let local = local_frame(model, &path.at(t), Some(&reference), &opts.spectrum)?;
        let e = DVector::from_column_slice(local.energies());
        let motion = local.motion(&path.velocity(t));
        let omega = drive.omega(&e, &local.drive, &motion, roles)?;
        let (na, off) = snapshot_ratios(&e, &local.drive, &motion, roles, drive.amplitude, omega);
        Ok(ProbeRatios { time: t, nonadiabatic: na, offresonance: off, omega })
    })?;
    let nonadiabatic_max = rows.iter().map(|r| r.nonadiabatic).fold(0.0, f64::max);
    let offresonance_max = rows.iter().map(|r| r.offresonance).fold(0.0, f64::max);
    Ok(AdiabaticityReport {
        nonadiabatic_max,
        offresonance_max,
        nonadiabatic_flag: ValidityFlag::from_ratio(nonadiabatic_max),
        offresonance_flag: ValidityFlag::from_ratio(offresonance_max),
        probes: rows,
    })
}
