//! Deterministic report artifacts: forest plots (text and SVG), kernel
//! density curves for the variability figures, and CSV tables.

mod density;
mod forest;
mod render;
mod tables;

pub use density::density_points;
pub use forest::{
    build_forest, BetweenGroupsLine, ForestDiamond, ForestPlotModel, ForestRow, ForestSection, ForestSource,
    HeterogeneityLine,
};
pub use render::{marker_side, render_forest_svg, render_forest_text, svg_x};
pub use tables::{write_all_significant_table, write_density_csv, write_interval_table, write_power_table};
