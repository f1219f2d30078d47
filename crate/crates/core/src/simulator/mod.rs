//! Synthetic agents with known behavioral differences.

pub mod generate;
pub mod profile;
pub mod suites;

pub use generate::{
    episode_id, generate_corpus, generate_trace, simulate, SimulatedCorpus, SplitSizes, PROFILES_FILE, SIM_DATASET,
};
pub use profile::{ActionMix, AgentProfile, ClickModel, CountModel, KindTiming, LogNormal, ProfileSet, ScrollWalk};
pub use suites::{heldout_agent, preset_suites, suite, SUITE_NAMES};
