//! Corpus directory trees and split manifests.
//!
//! Episodes live at `<root>/<agent_id>/<dataset>/<timestamp>/<episode_id>.json`.
//! The split of every episode is given by an explicit manifest
//! (`splits.json` at the corpus root by convention).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::ingest::convert::convert_released;
use crate::ingest::episode::{episode_from_value, parse_episode_with_warnings, ParsedEpisode};
use crate::trace::Trace;

pub const SPLIT_MANIFEST: &str = "splits.json";

/// How episode files are decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpisodeFormat {
    #[default]
    Native,
    /// Field names of the released corpus, mapped by [`convert_released`].
    Released,
}

#[derive(Debug)]
pub struct CorpusScan {
    /// Successfully parsed traces, sorted by path.
    pub traces: Vec<Trace>,
    pub paths: Vec<PathBuf>,
    pub errors: Vec<(PathBuf, Error)>,
    pub warnings: Vec<(PathBuf, String)>,
}

struct Located {
    agent_id: String,
    dataset: String,
    episode_stem: String,
}

fn locate(root: &Path, path: &Path) -> Option<Located> {
    let rel = path.strip_prefix(root).ok()?;
    let parts: Vec<&str> = rel.iter().map(|c| c.to_str()).collect::<Option<_>>()?;
    if parts.len() != 4 || !parts[3].ends_with(".json") {
        return None;
    }
    Some(Located {
        agent_id: parts[0].to_string(),
        dataset: parts[1].to_string(),
        episode_stem: parts[3].trim_end_matches(".json").to_string(),
    })
}

fn load_one(path: &Path, loc: &Located, format: EpisodeFormat) -> Result<ParsedEpisode> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut parsed = match format {
        EpisodeFormat::Native => parse_episode_with_warnings(&bytes)?,
        EpisodeFormat::Released => {
            let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
                offset: 0,
                message: e.to_string(),
            })?;
            episode_from_value(convert_released(value)?)?
        }
    };
    let mut meta = parsed.trace.meta().clone();
    if meta.agent_id != loc.agent_id {
        parsed.warnings.push(format!(
            "metadata agent_id {:?} disagrees with path {:?}; using path",
            meta.agent_id, loc.agent_id
        ));
        meta.agent_id = loc.agent_id.clone();
    }
    if meta.dataset.is_empty() {
        meta.dataset = loc.dataset.clone();
    } else if meta.dataset != loc.dataset {
        parsed.warnings.push(format!(
            "metadata dataset {:?} disagrees with path {:?}; using path",
            meta.dataset, loc.dataset
        ));
        meta.dataset = loc.dataset.clone();
    }
    if meta.episode_id.is_empty() {
        meta.episode_id = loc.episode_stem.clone();
    }
    parsed.trace = parsed.trace.with_meta(meta);
    Ok(parsed)
}

/// Discovers and parses every episode under `root`. Per-file failures are
/// collected; only an unreadable root is fatal.
pub fn scan_corpus(root: &Path, dataset_filter: Option<&str>) -> Result<CorpusScan> {
    scan_corpus_as(root, dataset_filter, EpisodeFormat::Native)
}

pub fn scan_corpus_as(root: &Path, dataset_filter: Option<&str>, format: EpisodeFormat) -> Result<CorpusScan> {
    fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut files: Vec<(PathBuf, Located)> = Vec::new();
    for entry in walkdir::WalkDir::new(root).min_depth(4).max_depth(4) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed")))
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        if let Some(loc) = locate(root, entry.path()) {
            if dataset_filter.is_none_or(|d| d == loc.dataset) {
                files.push((entry.into_path(), loc));
            }
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));

    let results: Vec<Result<ParsedEpisode>> = files
        .par_iter()
        .map(|(path, loc)| load_one(path, loc, format))
        .collect();

    let mut scan = CorpusScan {
        traces: Vec::new(),
        paths: Vec::new(),
        errors: Vec::new(),
        warnings: Vec::new(),
    };
    for ((path, _), result) in files.into_iter().zip(results) {
        match result {
            Ok(parsed) => {
                for w in parsed.warnings {
                    log::warn!("{}: {w}", path.display());
                    scan.warnings.push((path.clone(), w));
                }
                scan.traces.push(parsed.trace);
                scan.paths.push(path);
            }
            Err(e) => {
                log::warn!("{}: {e}", path.display());
                scan.errors.push((path, e));
            }
        }
    }
    Ok(scan)
}

/// Episode id to split assignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub version: u32,
    pub splits: BTreeMap<String, Split>,
}

impl SplitManifest {
    pub fn new(splits: BTreeMap<String, Split>) -> Self {
        SplitManifest { version: 1, splits }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let m: SplitManifest = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("{}: bad split manifest: {e}", path.display())))?;
        if m.version != 1 {
            return Err(Error::Config(format!("unsupported split manifest version {}", m.version)));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSplits {
    pub train: LabeledDataset,
    pub val: LabeledDataset,
    pub test: LabeledDataset,
}

impl DatasetSplits {
    pub fn get(&self, split: Split) -> &LabeledDataset {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Sorted unique agent ids.
pub fn class_names_of(traces: &[Trace]) -> Vec<String> {
    traces
        .iter()
        .map(|t| t.meta().agent_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Featurizes traces into labeled rows against a fixed class list.
pub fn featurize(traces: &[Trace], class_names: &[String], split: Split) -> Result<LabeledDataset> {
    let rows = traces.par_iter().map(extract_features).collect();
    let labels = traces
        .iter()
        .map(|t| {
            class_names
                .iter()
                .position(|c| *c == t.meta().agent_id)
                .ok_or_else(|| Error::Config(format!("agent {:?} not in class list", t.meta().agent_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = traces.iter().map(|t| t.meta().episode_id.clone()).collect();
    LabeledDataset::new(rows, labels, ids, class_names.to_vec(), split)
}

/// Partitions traces per the manifest and featurizes each part. Class names
/// are the sorted agent ids over all traces.
pub fn build_dataset(traces: &[Trace], split_plan: &BTreeMap<String, Split>) -> Result<DatasetSplits> {
    let class_names = class_names_of(traces);
    let mut parts: BTreeMap<Split, Vec<Trace>> = BTreeMap::new();
    for t in traces {
        let id = &t.meta().episode_id;
        let split = split_plan
            .get(id)
            .ok_or_else(|| Error::Config(format!("episode {id:?} missing from split manifest")))?;
        parts.entry(*split).or_default().push(t.clone());
    }
    let mut build = |s: Split| featurize(&parts.remove(&s).unwrap_or_default(), &class_names, s);
    Ok(DatasetSplits {
        train: build(Split::Train)?,
        val: build(Split::Val)?,
        test: build(Split::Test)?,
    })
}

/// Traces of one split, in corpus order.
pub fn traces_in_split(
    traces: &[Trace],
    split_plan: &BTreeMap<String, Split>,
    split: Split,
) -> Result<Vec<Trace>> {
    let mut out = Vec::new();
    for t in traces {
        let id = &t.meta().episode_id;
        match split_plan.get(id) {
            Some(s) if *s == split => out.push(t.clone()),
            Some(_) => {}
            None => return Err(Error::Config(format!("episode {id:?} missing from split manifest"))),
        }
    }
    Ok(out)
}

/// Writes a trace at its canonical corpus location.
pub fn write_trace(root: &Path, timestamp: &str, trace: &Trace) -> Result<PathBuf> {
    let m = trace.meta();
    let dir = root.join(&m.agent_id).join(&m.dataset).join(timestamp);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(format!("{}.json", m.episode_id));
    fs::write(&path, trace.to_json_string()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{EpisodeMetadata, Event, EventPayload};

    fn fixture_trace(agent: &str, ep: &str) -> Trace {
        Trace::new(
            EpisodeMetadata::new(agent, "wiki", ep),
            vec![
                Event::new(100, EventPayload::Click { x: 10.0, y: 20.0, is_link: true }),
                Event::new(400, EventPayload::Scroll { depth_pct: 30.0 }),
            ],
        )
        .unwrap()
    }

    fn fixture_tree(root: &Path) {
        for agent in ["beta", "alpha"] {
            for ep in ["e0", "e1", "e2"] {
                write_trace(root, "20250101T000000", &fixture_trace(agent, ep)).unwrap();
            }
        }
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let scan = scan_corpus(dir.path(), None).unwrap();
        assert!(scan.traces.is_empty() && scan.errors.is_empty());
    }

    #[test]
    fn missing_root_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let r = scan_corpus(&dir.path().join("nope"), None);
        assert!(matches!(r, Err(Error::Io { .. })));
    }

    #[test]
    fn two_agents_three_episodes() {
        let dir = tempfile::tempdir().unwrap();
        fixture_tree(dir.path());
        let scan = scan_corpus(dir.path(), None).unwrap();
        assert_eq!(scan.traces.len(), 6);
        let agents: Vec<_> = scan.traces.iter().map(|t| t.meta().agent_id.as_str()).collect();
        assert_eq!(agents, ["alpha", "alpha", "alpha", "beta", "beta", "beta"]);
        assert!(scan.paths.windows(2).all(|w| w[0] < w[1]));
        assert!(scan_corpus(dir.path(), Some("other")).unwrap().traces.is_empty());
    }

    #[test]
    fn corrupt_file_is_collected() {
        let dir = tempfile::tempdir().unwrap();
        fixture_tree(dir.path());
        let bad = dir.path().join("beta/wiki/20250101T000000/e1.json");
        fs::write(&bad, "{\"meta\": ").unwrap();
        let scan = scan_corpus(dir.path(), None).unwrap();
        assert_eq!(scan.traces.len(), 5);
        assert_eq!(scan.errors.len(), 1);
        assert_eq!(scan.errors[0].0, bad);
    }

    #[test]
    fn path_label_wins_over_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let t = fixture_trace("alpha", "e9");
        let path = write_trace(dir.path(), "ts", &t).unwrap();
        let renamed = dir.path().join("gamma/wiki/ts");
        fs::create_dir_all(&renamed).unwrap();
        fs::rename(&path, renamed.join("e9.json")).unwrap();
        let scan = scan_corpus(dir.path(), None).unwrap();
        assert_eq!(scan.traces[0].meta().agent_id, "gamma");
        assert_eq!(scan.warnings.len(), 1);
    }

    #[test]
    fn dataset_splits_and_errors() {
        let traces: Vec<Trace> = ["b", "a"]
            .iter()
            .flat_map(|a| (0..4).map(move |i| fixture_trace(a, &format!("e{i}"))))
            .collect();
        let mut plan: BTreeMap<String, Split> = BTreeMap::new();
        plan.insert("e0".into(), Split::Train);
        plan.insert("e1".into(), Split::Train);
        plan.insert("e2".into(), Split::Val);
        plan.insert("e3".into(), Split::Test);
        let ds = build_dataset(&traces, &plan).unwrap();
        assert_eq!((ds.train.len(), ds.val.len(), ds.test.len()), (4, 2, 2));
        assert_eq!(ds.train.class_names(), &["a".to_string(), "b".to_string()]);

        plan.remove("e3");
        match build_dataset(&traces, &plan) {
            Err(Error::Config(msg)) => assert!(msg.contains("e3")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_agent_dataset_is_valid() {
        let traces = vec![fixture_trace("solo", "e0")];
        let plan = BTreeMap::from([("e0".to_string(), Split::Train)]);
        let ds = build_dataset(&traces, &plan).unwrap();
        assert_eq!(ds.train.n_classes(), 1);
    }
}
