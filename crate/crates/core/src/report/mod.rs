//! Stream plots, convergence plots and result documents.

mod doc;
mod svg;

pub use doc::{tac_table, ResultDocument};
pub use svg::{render_convergence, render_stream_plot, stream_plot_lanes, LANE_HEIGHT, WIDTH};
