//! Config-driven runs of the Finsler laboratory: parses a run file,
//! dispatches one command and collects reports, CSV tables and plot data.

pub mod config;
pub mod output;
pub mod run;

pub use config::{BoundCheck, Command, ConfigInvalid, Overrides, Params, RunConfig};
pub use output::{emit_plotdata, fmt_f64, plot_tables, to_json, Artifacts, Table, PLOT_COLUMNS};
pub use run::{run, CheckOutcome, RunOutcome, Status};
