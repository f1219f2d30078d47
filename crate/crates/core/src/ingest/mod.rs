//! Reading episode files and corpus trees into traces and datasets.

pub mod convert;
pub mod corpus;
pub mod episode;
pub mod export;

pub use corpus::{
    build_dataset, class_names_of, featurize, scan_corpus, scan_corpus_as, traces_in_split, write_trace,
    CorpusScan, DatasetSplits, EpisodeFormat, SplitManifest, SPLIT_MANIFEST,
};
pub use episode::{parse_episode, parse_episode_with_warnings, ParsedEpisode};
pub use export::{read_csv, write_csv};
