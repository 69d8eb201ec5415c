//! JSON experiment configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::presets::{InitialCondition, VelocityPreset};
use crate::cch::CCHConfig;
use crate::mesh::{build_disk_mesh, build_rect_mesh, read_mesh, Point, TriMesh};
use crate::transport::{TransportConfig, TransportScheme};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    /// Structured triangulation of a rectangle, each cell square split
    /// along its diagonal.
    Rect {
        nx: usize,
        ny: usize,
        #[serde(default)]
        lower: Point,
        #[serde(default = "unit_point")]
        upper: Point,
    },
    /// Polar triangulation of the unit disk.
    Disk { rings: usize, sectors: usize },
    /// Mesh file, relative paths resolved against the config file.
    File { path: PathBuf },
}

fn unit_point() -> Point {
    [1.0, 1.0]
}

impl MeshSpec {
    pub fn build(&self, base_dir: &Path) -> Result<TriMesh, crate::MeshError> {
        match self {
            Self::Rect { nx, ny, lower, upper } => build_rect_mesh(*nx, *ny, *lower, *upper),
            Self::Disk { rings, sectors } => build_disk_mesh(*rings, *sectors),
            Self::File { path } => read_mesh(base_dir.join(path)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Write a snapshot every this many steps (the first and last step are
    /// always written).
    pub vtk_every: usize,
    pub write_vtk: bool,
    pub csv: String,
    /// Convergence table file name (`converge` only).
    pub table: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            vtk_every: 100,
            write_vtk: true,
            csv: "diagnostics.csv".into(),
            table: "convergence.csv".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    /// Number of test resolutions; the reference is one refinement finer
    /// than the finest of them.
    pub levels: usize,
}

/// Transport solver controls plus the scheme choice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSection {
    pub dt: f64,
    pub linear_tol: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub scheme: SchemeName,
}

impl Default for TransportSection {
    fn default() -> Self {
        let c = TransportConfig::default();
        Self {
            dt: c.dt,
            linear_tol: c.linear_tol,
            picard_tol: c.picard_tol,
            picard_max: c.picard_max,
            scheme: SchemeName::default(),
        }
    }
}

impl TransportSection {
    pub fn solver(&self) -> TransportConfig {
        TransportConfig {
            dt: self.dt,
            linear_tol: self.linear_tol,
            picard_tol: self.picard_tol,
            picard_max: self.picard_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Linear,
    Truncated,
}

impl From<SchemeName> for TransportScheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Linear => TransportScheme::Linear,
            SchemeName::Truncated => TransportScheme::Truncated,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mesh: MeshSpec,
    pub initial: InitialCondition,
    #[serde(default)]
    pub velocity: VelocityPreset,
    pub t_final: f64,
    #[serde(default)]
    pub cch: Option<CCHConfig>,
    #[serde(default)]
    pub transport: Option<TransportSection>,
    #[serde(default)]
    pub convergence: Option<ConvergenceSpec>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Use the multi-threaded assembly when the build supports it.
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn yes() -> bool {
    true
}

/// What the configuration is going to be used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Run,
    Transport,
    Converge,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self, purpose: Purpose, base_dir: &Path) -> Result<(), String> {
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err("t_final must be a nonnegative number".into());
        }
        if self.output.vtk_every == 0 {
            return Err("output.vtk_every must be at least 1".into());
        }
        if let MeshSpec::File { path } = &self.mesh {
            let full = base_dir.join(path);
            if !full.is_file() {
                return Err(format!("mesh file {} does not exist", full.display()));
            }
        }
        self.initial.validate()?;
        match purpose {
            Purpose::Run | Purpose::Converge => {
                let cch = self.cch.as_ref().ok_or("missing `cch` section")?;
                cch.validate().map_err(|e| e.to_string())?;
            }
            Purpose::Transport => {
                let t = self.transport.as_ref().ok_or("missing `transport` section")?;
                t.solver().validate().map_err(|e| e.to_string())?;
            }
        }
        if purpose == Purpose::Converge {
            let c = self.convergence.ok_or("missing `convergence` section")?;
            if c.levels < 3 {
                return Err("convergence.levels must be at least 3".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUN: &str = r#"{
        "mesh": {"type": "rect", "nx": 4, "ny": 4},
        "initial": {"type": "two_circles", "centers": [[0.3, 0.5], [0.7, 0.5]]},
        "t_final": 1e-5,
        "cch": {"eps": 0.01, "dt": 1e-6},
        "output": {"vtk_every": 5}
    }"#;

    #[test]
    fn parses_and_validates() {
        let c = ExperimentConfig::from_json(RUN).unwrap();
        assert_eq!(c.velocity, VelocityPreset::Zero);
        assert_eq!(c.output.csv, "diagnostics.csv");
        assert!(c.parallel);
        assert!(c.validate(Purpose::Run, Path::new(".")).is_ok());
        assert!(c.validate(Purpose::Transport, Path::new(".")).is_err());
        assert!(c.validate(Purpose::Converge, Path::new(".")).is_err());
        let m = c.mesh.build(Path::new(".")).unwrap();
        assert_eq!(m.n_cells(), 32);
    }

    #[test]
    fn rejects_unknown_keys_at_every_level() {
        for bad in [
            RUN.replace("\"t_final\"", "\"bogus\": 1, \"t_final\""),
            RUN.replace("\"nx\": 4", "\"nx\": 4, \"nz\": 1"),
            RUN.replace("\"dt\": 1e-6", "\"dt\": 1e-6, \"tau\": 1"),
            RUN.replace("\"vtk_every\": 5", "\"vtk_every\": 5, \"png\": true"),
        ] {
            assert!(ExperimentConfig::from_json(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn transport_section() {
        let text = r#"{
            "mesh": {"type": "disk", "rings": 4, "sectors": 6},
            "initial": {"type": "bump", "center": [0.4, 0.0], "radius": 0.3},
            "velocity": {"type": "rotation", "omega": 1},
            "t_final": 0.1,
            "transport": {"dt": 0.01, "scheme": "truncated"}
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let t = c.transport.unwrap();
        assert_eq!((t.dt, t.scheme), (0.01, SchemeName::Truncated));
        assert!(c.validate(Purpose::Transport, Path::new(".")).is_ok());
        assert!(ExperimentConfig::from_json(&text.replace("\"scheme\"", "\"shceme\"")).is_err());
    }

    #[test]
    fn missing_mesh_file_is_a_config_error() {
        let text = RUN.replace(r#"{"type": "rect", "nx": 4, "ny": 4}"#, r#"{"type": "file", "path": "nope.mesh"}"#);
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert!(c.validate(Purpose::Run, Path::new("/nonexistent")).is_err());
        let zero_cadence = RUN.replace("\"vtk_every\": 5", "\"vtk_every\": 0");
        let c = ExperimentConfig::from_json(&zero_cadence).unwrap();
        assert!(c.validate(Purpose::Run, Path::new(".")).is_err());
    }
}
