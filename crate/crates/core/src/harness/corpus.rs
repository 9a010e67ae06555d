//! Flow corpora and raw trace directories on disk.
//!
//! A corpus directory holds `flows/*.json`, each naming its states by
//! fingerprint, and `states/<fingerprint>.json`. A raw directory holds
//! `traces/*.jsonl` with one pointer event per line and
//! `states/<ref>.json` for every referenced state.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{list_files, read_text, write_bytes};
use crate::sim::Corpus;
use crate::trace::MotionEvent;
use crate::ui::{Action, InteractionFlow, UiState};

#[derive(Serialize, Deserialize)]
struct FlowFile {
    app_id: String,
    states: Vec<String>,
    actions: Vec<Action>,
}

fn write_states<'a>(dir: &Path, states: impl Iterator<Item = (String, &'a UiState)>) -> Result<()> {
    let mut done = std::collections::HashSet::new();
    for (r, s) in states {
        if done.insert(r.clone()) {
            write_bytes(&dir.join(format!("{r}.json")), s.to_json().as_bytes())?;
        }
    }
    Ok(())
}

pub fn save_corpus(dir: &Path, flows: &[InteractionFlow]) -> Result<()> {
    for (i, f) in flows.iter().enumerate() {
        let file = FlowFile {
            app_id: f.app_id.clone(),
            states: f.states.iter().map(|s| s.fingerprint().to_string()).collect(),
            actions: f.actions.clone(),
        };
        let path = dir.join("flows").join(format!("{i:05}_{}.json", f.app_id));
        write_bytes(&path, serde_json::to_string(&file)?.as_bytes())?;
    }
    write_states(
        &dir.join("states"),
        flows.iter().flat_map(|f| f.states.iter().map(|s| (s.fingerprint().to_string(), s))),
    )
}

fn load_states(dir: &Path, problems: &mut Vec<(PathBuf, String)>) -> Result<HashMap<String, UiState>> {
    let mut out = HashMap::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for p in list_files(dir, "json")? {
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        match read_text(&p).and_then(|t| UiState::from_json(&t)) {
            Ok(s) => {
                out.insert(name, s);
            }
            Err(e) => problems.push((p, e.to_string())),
        }
    }
    Ok(out)
}

pub fn load_corpus(dir: &Path) -> Result<Vec<InteractionFlow>> {
    let mut problems = Vec::new();
    let states = load_states(&dir.join("states"), &mut problems)?;
    if let Some((p, e)) = problems.first() {
        return Err(Error::InvalidState(format!("{}: {e}", p.display())));
    }
    let flows_dir = dir.join("flows");
    if !flows_dir.is_dir() {
        return Err(Error::EmptyDataset(format!("{} has no flows directory", dir.display())));
    }
    list_files(&flows_dir, "json")?
        .iter()
        .map(|p| {
            let file: FlowFile = serde_json::from_str(&read_text(p)?)?;
            let states = file
                .states
                .iter()
                .map(|r| {
                    states
                        .get(r)
                        .cloned()
                        .ok_or_else(|| Error::InvalidState(format!("{}: unknown state `{r}`", p.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            let flow = InteractionFlow {
                app_id: file.app_id,
                states,
                actions: file.actions,
            };
            flow.validate()?;
            Ok(flow)
        })
        .collect()
}

pub fn save_raw(dir: &Path, corpus: &Corpus) -> Result<()> {
    for (i, t) in corpus.raw.iter().enumerate() {
        let mut text = String::new();
        for e in &t.events {
            text.push_str(&serde_json::to_string(e)?);
            text.push('\n');
        }
        write_bytes(&dir.join("traces").join(format!("{i:05}_{}.jsonl", t.app_id)), text.as_bytes())?;
    }
    write_states(&dir.join("states"), corpus.states.iter().map(|(r, s)| (r.clone(), s)))
}

#[derive(Debug, Default)]
pub struct RawDir {
    /// File, app id, events; in file-name order.
    pub traces: Vec<(PathBuf, String, Vec<MotionEvent>)>,
    pub states: HashMap<String, UiState>,
    /// Files that could not be read, with the reason.
    pub problems: Vec<(PathBuf, String)>,
}

/// Reads a raw directory, collecting unreadable files instead of failing.
pub fn load_raw(dir: &Path) -> Result<RawDir> {
    let mut out = RawDir::default();
    out.states = load_states(&dir.join("states"), &mut out.problems)?;
    let traces = dir.join("traces");
    if !traces.is_dir() {
        return Ok(out);
    }
    for p in list_files(&traces, "jsonl")? {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let app_id = stem.split_once('_').map_or(stem, |(_, a)| a).to_string();
        let parsed = read_text(&p).and_then(|text| {
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| {
                    serde_json::from_str::<MotionEvent>(l).map_err(|e| Error::Trace {
                        index: i,
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        });
        match parsed {
            Ok(events) => out.traces.push((p, app_id, events)),
            Err(e) => out.problems.push((p, e.to_string())),
        }
    }
    Ok(out)
}

/// Fraction of states with at most `k` enumerable actions, for a few `k`.
pub fn action_count_cdf(flows: &[InteractionFlow]) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0usize;
    for f in flows {
        for s in &f.states {
            *counts.entry(crate::ui::enumerate_actions(s).len()).or_default() += 1;
            total += 1;
        }
    }
    [1, 2, 5, 10, 20, 50, 100]
        .iter()
        .map(|&k| {
            let n: usize = counts.range(..=k).map(|(_, c)| c).sum();
            (k, if total == 0 { 0.0 } else { n as f64 / total as f64 })
        })
        .collect()
}
