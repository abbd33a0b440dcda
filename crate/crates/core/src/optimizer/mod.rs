//! Per-slot minimum-power precoding, the convexified trajectory update, and
//! the alternating outer loop that couples them.

mod double_loop;
mod precoding;
mod sdp;
mod trajectory;

pub use double_loop::{double_loop_optimize, slot_channel, slot_rotation, DoubleLoopOutput};
pub use precoding::{
    constraint_violation, snr_per_stream, solve_precoding_slot, total_power, zf_precoder, PrecodingMatrix,
    PrecodingProblem, SolveStatus, SolverReport,
};
pub use trajectory::{
    linearize_no_fly, project, sweep_trajectory, trajectory_step, Disc, Halfspace, PowerSurrogate, SlotProblem, Trajectory,
};
