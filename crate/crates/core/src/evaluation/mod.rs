//! Error metrics, leverage diagnostics, input relevancy and plot data.

pub mod leverage;
pub mod metrics;
pub mod plots;
pub mod relevancy;

pub use leverage::{
    design_matrix, hat_diagonal, independent_columns, leverage_report, standardized_residuals,
    warning_leverage, williams_classify, LeverageReport, PointFlag, COLLINEAR_TOLERANCE,
    QUOTED_WARNING_LEVERAGE, RESIDUAL_CUTOFF,
};
pub use metrics::{metrics, MetricsReport, Partition};
pub use plots::{andrews_curve, write_plot_data, PlotKind};
pub use relevancy::{relevancy_factor, relevancy_report, RelevancyReport};
