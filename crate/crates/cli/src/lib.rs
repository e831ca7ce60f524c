//! Scenario runner for the `jcwigner` command-line tool.

pub mod app;
pub mod config;
pub mod render;
pub mod run;
pub mod selftest;

pub use config::{load, parse_scenario, preset, ConfigError, Scenario};
pub use render::render_heatmap;
pub use run::{run_scenario, Manifest, RunError};

/// Command-line overrides applied on top of a loaded scenario.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub verify: bool,
    pub grid_step: Option<f64>,
    pub nmax: Option<usize>,
}

impl Overrides {
    pub fn apply(self, mut s: Scenario) -> Result<Scenario, ConfigError> {
        s.verify |= self.verify;
        if let Some(step) = self.grid_step {
            s.grid.step = Some(step);
        }
        if let Some(n) = self.nmax {
            s.nmax = Some(n);
        }
        s.resolve()
    }
}

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "JCWIGNER_THREADS";
