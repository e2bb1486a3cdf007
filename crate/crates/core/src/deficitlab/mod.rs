//! Two-pathway network trained on a synthetic multi-view task under input
//! deficits (blur, dissociation) applied in chosen epoch windows.

pub mod net;
pub mod sweep;
pub mod task;
pub mod train;

pub use net::{loss_and_gradients, Activation, LabelMode, LossMode, NetConfig, PathwayNet};
pub use sweep::{
    aggregate, critical_period_cells, depth_cells, run_cells, summarize, CellRole, SweepCell,
    SweepPoint, SweepRow,
};
pub use task::{
    apply_blur, apply_dissociation, generate_task, Batch, ChannelSpec, MultiViewSample, Pathway,
    TaskData, TaskSpec,
};
pub use train::{
    run, train, usable_information, DeficitKind, DeficitSchedule, EpochMetrics, OptimConfig,
    RunConfig, RunRecord, UsableInformation, Window,
};
