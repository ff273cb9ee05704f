//! Agent-based model of a hub colony solving the best-of-N site selection
//! problem.
//!
//! Every agent runs the same seven-state Markov machine. Agents at the hub
//! observe and recruit; agents in the field explore, assess sites and travel.
//! A trial ends once a quorum of recruiters for one site is at the hub.

mod init;
mod log;
mod params;
mod sim;
mod step;
mod types;

pub use init::{make_initial_condition, place_sites, sample_qualities, InitialCondition};
pub use log::{read_trajectory_log, write_trajectory_log, TickRecord, TrialMeta};
pub use params::{compute_gamma, compute_x, RecruitDwell, TransitionParams};
pub use sim::{
    check_quorum, quorum_threshold, run_outcome, run_simulation, Outcome, RunSummary, Simulation,
    Trajectory,
};
pub use step::{sample_recruitment, step_agent, RecruiterPool};
pub use types::{Agent, AgentState, Point, Site, WorldConfig};
