//! Initial conditions and velocity fields used by the experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fespace::{project_p0, P0Field};
use crate::mesh::{Point, TriMesh};

/// Sum of two diffuse discs `½(tanh((r − |x − c|)/(√2 ε)) + 1)`.
pub fn ic_two_circles(centers: [Point; 2], radius: f64, eps: f64) -> impl Fn(Point) -> f64 + Send + Sync {
    let s = std::f64::consts::SQRT_2 * eps;
    move |p| {
        centers
            .iter()
            .map(|c| {
                let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
                0.5 * (((radius - d) / s).tanh() + 1.0)
            })
            .sum()
    }
}

/// Per-cell i.i.d. uniform values in `[mean − amplitude, mean + amplitude]`.
pub fn ic_random_spinodal(n_cells: usize, seed: u64, mean: f64, amplitude: f64) -> P0Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    P0Field(
        (0..n_cells)
            .map(|_| mean + amplitude * (2.0 * rng.random::<f64>() - 1.0))
            .collect(),
    )
}

/// Compactly supported cosine bump of the given height, nonnegative.
pub fn ic_bump(center: Point, radius: f64, height: f64) -> impl Fn(Point) -> f64 + Send + Sync {
    move |p| {
        let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() / radius;
        if d < 1.0 {
            height * 0.5 * (1.0 + (std::f64::consts::PI * d).cos())
        } else {
            0.0
        }
    }
}

/// Initial data selectable from a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    TwoCircles {
        centers: [Point; 2],
        #[serde(default = "default_radius")]
        radius: f64,
        /// Defaults to the interface width of the coupled solver.
        #[serde(default)]
        eps: Option<f64>,
    },
    RandomSpinodal {
        #[serde(default = "default_mean")]
        mean: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    Bump {
        center: Point,
        radius: f64,
        #[serde(default = "default_height")]
        height: f64,
    },
    Constant {
        value: f64,
    },
}

fn default_radius() -> f64 {
    0.2
}
fn default_mean() -> f64 {
    0.5
}
fn default_amplitude() -> f64 {
    0.01
}
fn default_height() -> f64 {
    1.0
}

impl InitialCondition {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Self::TwoCircles { radius, eps, .. } => {
                if !(*radius > 0.0) {
                    return Err("two_circles radius must be positive".into());
                }
                if eps.is_some_and(|e| !(e > 0.0)) {
                    return Err("two_circles eps must be positive".into());
                }
            }
            Self::RandomSpinodal { amplitude, .. } if !(*amplitude >= 0.0) => {
                return Err("random_spinodal amplitude must be nonnegative".into());
            }
            Self::Bump { radius, .. } if !(*radius > 0.0) => {
                return Err("bump radius must be positive".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Cell averages on `mesh`. Diffuse-interface profiles are clamped to
    /// `[0, 1]` after averaging; `default_eps` fills a missing width.
    pub fn build(&self, mesh: &TriMesh, seed: u64, default_eps: Option<f64>) -> Result<P0Field, String> {
        self.validate()?;
        Ok(match self {
            Self::TwoCircles { centers, radius, eps } => {
                let eps = eps.or(default_eps).ok_or("two_circles needs an eps")?;
                let u = project_p0(mesh, ic_two_circles(*centers, *radius, eps));
                P0Field(u.iter().map(|v| v.clamp(0.0, 1.0)).collect())
            }
            Self::RandomSpinodal { mean, amplitude } => ic_random_spinodal(mesh.n_cells(), seed, *mean, *amplitude),
            Self::Bump { center, radius, height } => project_p0(mesh, ic_bump(*center, *radius, *height)),
            Self::Constant { value } => P0Field::constant(mesh.n_cells(), *value),
        })
    }
}

/// Velocity fields selectable from a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityPreset {
    #[default]
    Zero,
    /// `ω (y − c_y, −(x − c_x))`: rigid clockwise rotation about `center`.
    Rotation {
        omega: f64,
        #[serde(default)]
        center: Point,
    },
}

impl VelocityPreset {
    pub fn field(&self) -> impl Fn(Point) -> [f64; 2] + Send + Sync {
        let (omega, c) = match *self {
            Self::Zero => (0.0, [0.0, 0.0]),
            Self::Rotation { omega, center } => (omega, center),
        };
        move |p| [omega * (p[1] - c[1]), -omega * (p[0] - c[0])]
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero | Self::Rotation { omega: 0.0, .. })
    }
}
