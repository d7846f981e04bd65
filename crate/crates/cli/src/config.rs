//! Scenario parameters: defaults, the TOML file layout, and flag overrides.
//!
//! Every section is a flat table of scalars and lists. A flag given on the
//! command line replaces the file value, which replaces the default.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Declares a parameter section, its defaults, and the matching optional
/// flags. Text after `=>` is passed to clap only.
macro_rules! section {
    ($(#[$m:meta])* $name:ident / $args:ident {
        $($(#[$fm:meta])* $field:ident : $ty:ty = $default:expr $(=> [$($arg:tt)*])?),* $(,)?
    }) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $($(#[$fm])* pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                $name { $($field: $default,)* }
            }
        }

        #[derive(Debug, Clone, Default, clap::Args)]
        pub struct $args {
            $($(#[$fm])* #[arg(long $(, $($arg)*)?)] pub $field: Option<$ty>,)*
        }

        impl $name {
            pub fn overlay(&mut self, flags: &$args) {
                $(if let Some(v) = &flags.$field {
                    self.$field = v.clone();
                })*
            }
        }
    };
}

section! {
    /// Ensemble transport through a multi-mode box superposition.
    RelaxParams / RelaxArgs {
        /// Box dimension, 1 or 2.
        dim: usize = 2,
        /// Total number of modes; a perfect square in two dimensions.
        modes: u32 = 16,
        length: f64 = PI,
        /// Seed of the random mode phases.
        phase_seed: u64 = 0,
        /// Grid points per axis.
        grid_points: usize = 64,
        particles: usize = 100_000,
        /// Run length in natural periods.
        periods: f64 = 10.0,
        samples_per_period: usize = 1,
        dt: f64 = 0.05,
        stage_tolerance: f64 = 0.5,
        /// Coarse-graining cell counts.
        cells: Vec<usize> = vec![16, 32, 64] => [value_delimiter = ','],
        /// Cell count at which the H-function is judged.
        judged_cells: usize = 32,
        reference_segments: usize = 256,
        /// Start in equilibrium instead of uniform on the central third.
        equilibrium: bool = false => [num_args = 0..=1, default_missing_value = "true"],
    }
}

section! {
    /// Cloud radii tested against the hydrogen ground state.
    DetectParams / DetectArgs {
        /// `equilibrium`, `scaled`, `lomax`, or `relaxing`.
        parent: String = "scaled".to_string(),
        /// Scale of the parent `lambda p_eq(lambda r)`; 1 is equilibrium.
        /// The starting scale for `relaxing`.
        lambda: f64 = 1.0,
        /// Lomax tail index.
        alpha: f64 = 3.0,
        /// Lomax scale.
        scale: f64 = 1.0,
        /// Relaxation time of a `relaxing` parent.
        tau: f64 = 1.0,
        /// Instant at which a `relaxing` parent is observed.
        observed_at: f64 = 0.0,
        n_cloud: usize = 100_000,
        n_sample: usize = 10_000,
        repetitions: usize = 100,
        log_ratio_threshold: f64 = 10.0,
    }
}

section! {
    /// Entangled pairs, a local operation at B, the marginal at A.
    SignalParams / SignalArgs {
        sigma_a: f64 = 1.0,
        sigma_b: f64 = 1.0,
        coupling: f64 = 5.0,
        t_prep: f64 = 0.2,
        half_width: f64 = 24.0,
        points: usize = 256,
        dt: f64 = 0.01,
        /// Initial `|psi0|^(2 beta)`; 1 is equilibrium.
        beta: f64 = 2.0,
        pairs: usize = 100_000,
        /// Height of the phase step applied at B.
        strength: f64 = PI,
        /// Width of the phase step.
        width: f64 = 1.0,
        t_signal: f64 = 1.0,
        bins: usize = 8,
    }
}

section! {
    /// Pointer measurements of a Gaussian system.
    MeasureParams / MeasureArgs {
        /// Width of the system packet.
        sigma: f64 = 1.0,
        half_width: f64 = 12.0,
        points: usize = 1024,
        coupling: f64 = 1.0,
        duration: f64 = 0.5,
        /// Width of the uniform pointer distribution.
        width: f64 = 0.1,
        /// Width of the quantum pointer state.
        delta: f64 = 1.0,
        /// Draw the pointer from `|g0|^2` instead of the narrow uniform.
        equilibrium_pointer: bool = false => [num_args = 0..=1, default_missing_value = "true"],
        records: usize = 100_000,
        joint_particles: usize = 100_000,
        joint_cells: usize = 64,
    }
}

section! {
    /// Telling two non-orthogonal packets apart from one tracked path.
    DiscriminateParams / DiscriminateArgs {
        overlap: f64 = 0.8,
        sigma: f64 = 1.0,
        resolution: f64 = 1e-3,
        window: usize = 8,
        t_first: f64 = 0.1,
        t_last: f64 = 1.0,
        eps_vel: f64 = 0.05,
        dt: f64 = 0.01,
        trials: usize = 1000,
    }
}

section! {
    /// The B92 protocol with an optional subquantum eavesdropper.
    QkdParams / QkdArgs {
        overlap: f64 = 0.5,
        sigma: f64 = 1.0,
        rounds: usize = 10_000,
        transit: f64 = 1.2,
        /// Put Eve on the channel.
        eve: bool = false => [num_args = 0..=1, default_missing_value = "true"],
        resolution: f64 = 1e-4,
        window: usize = 8,
        t_first: f64 = 0.1,
        t_last: f64 = 1.0,
        eps_vel: f64 = 0.05,
        dt: f64 = 0.01,
        /// Eve resolutions to sweep; at least three, empty for none.
        sweep: Vec<f64> = Vec::new() => [value_delimiter = ','],
    }
}

section! {
    /// Mode-set recovery and the gadget count read off one trajectory.
    ReadoutParams / ReadoutArgs {
        n_max: u32 = 12,
        modes: usize = 4,
        noise: f64 = 1e-6,
        trials: usize = 100,
        samples: usize = 8,
        length: f64 = PI,
        dt: f64 = 0.002,
        /// Counts `s` to read through the two-level state.
        s: Vec<u64> = vec![0, 1] => [value_delimiter = ','],
        /// First-register size of the gadget state.
        n: usize = 4,
        resolution: f64 = 1e-5,
        window: usize = 8,
        eps_vel: f64 = 0.05,
        contrast: u64 = 1,
        read_trials: usize = 100,
    }
}

section! {
    /// The post-selected counting circuit.
    GadgetParams / GadgetArgs {
        n: usize = 2,
        /// `zero`, `all`, `random`, `single:x`, `count:s`, or a hex truth table.
        oracle: String = "random".to_string(),
    }
}

/// Layout of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub relax: Option<RelaxParams>,
    pub detect: Option<DetectParams>,
    pub signal: Option<SignalParams>,
    pub measure: Option<MeasureParams>,
    pub discriminate: Option<DiscriminateParams>,
    #[serde(rename = "qkd-b92")]
    pub qkd_b92: Option<QkdParams>,
    pub readout: Option<ReadoutParams>,
    pub gadget: Option<GadgetParams>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}
