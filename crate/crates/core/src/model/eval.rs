use std::io::Write;
use std::time::Instant;

use crate::error::Result;
use crate::model::{rank_order, score_actions, InteractionModel};
use crate::nn::Scalar;
use crate::raster::UiContext;
use crate::ui::{enumerate_actions, InteractionFlow};

pub const TOP_N: [usize; 4] = [1, 3, 5, 10];

/// Scores of every enumerable action in one held-out state.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredState {
    pub app_id: String,
    pub flow: usize,
    pub step: usize,
    pub scores: Vec<f64>,
    /// Enumeration index of the recorded action.
    pub truth: usize,
}

impl ScoredState {
    /// 1-based position of the recorded action in the ranking.
    pub fn rank(&self) -> usize {
        rank_order(&self.scores).iter().position(|&i| i == self.truth).expect("truth in range") + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub states: usize,
    /// States whose recorded action is not enumerable.
    pub skipped: usize,
    pub top_n: [f64; 4],
    pub random_top_n: [f64; 4],
    pub mean_percentile: f64,
    pub median_percentile: f64,
    pub mean_latency_ms: f64,
    pub max_latency_ms: f64,
    pub scored: Vec<ScoredState>,
}

/// Aggregates top-N hit rates, random baselines and percentile ranks.
pub fn summarize(scored: &[ScoredState]) -> ([f64; 4], [f64; 4], f64, f64) {
    let n = scored.len().max(1) as f64;
    let mut top = [0.0; 4];
    let mut random = [0.0; 4];
    let mut pct = Vec::with_capacity(scored.len());
    for s in scored {
        let k = s.scores.len();
        let rank = s.rank();
        for (j, &topn) in TOP_N.iter().enumerate() {
            if rank <= topn {
                top[j] += 1.0;
            }
            random[j] += topn.min(k) as f64 / k as f64;
        }
        pct.push(rank as f64 / k as f64);
    }
    top.iter_mut().chain(random.iter_mut()).for_each(|v| *v /= n);
    let mean = pct.iter().sum::<f64>() / n;
    (top, random, mean, median(&mut pct))
}

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn evaluate<T: Scalar>(model: &InteractionModel<T>, flows: &[InteractionFlow]) -> Result<EvalReport> {
    let mut scored = Vec::new();
    let mut skipped = 0;
    let mut latencies = Vec::new();
    for (fi, f) in flows.iter().enumerate() {
        for step in 0..f.len() {
            let state = &f.states[step];
            let actions = enumerate_actions(state);
            let Some(truth) = actions.iter().position(|a| a.same_target(&f.actions[step])) else {
                skipped += 1;
                continue;
            };
            let start = Instant::now();
            let pred = model.predict(&UiContext::at_step(&f.states, &f.actions, step))?;
            let scores = score_actions(&pred, state, &actions)?;
            latencies.push(start.elapsed().as_secs_f64() * 1e3);
            scored.push(ScoredState {
                app_id: f.app_id.clone(),
                flow: fi,
                step,
                scores,
                truth,
            });
        }
    }
    let (top_n, random_top_n, mean_percentile, median_percentile) = summarize(&scored);
    Ok(EvalReport {
        states: scored.len(),
        skipped,
        top_n,
        random_top_n,
        mean_percentile,
        median_percentile,
        mean_latency_ms: latencies.iter().sum::<f64>() / latencies.len().max(1) as f64,
        max_latency_ms: latencies.iter().copied().fold(0.0, f64::max),
        scored,
    })
}

impl EvalReport {
    pub fn write_metrics_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "metric,value")?;
        writeln!(out, "states,{}", self.states)?;
        writeln!(out, "skipped,{}", self.skipped)?;
        for (j, n) in TOP_N.iter().enumerate() {
            writeln!(out, "top{n},{:.6}", self.top_n[j])?;
            writeln!(out, "random_top{n},{:.6}", self.random_top_n[j])?;
        }
        writeln!(out, "mean_percentile,{:.6}", self.mean_percentile)?;
        writeln!(out, "median_percentile,{:.6}", self.median_percentile)?;
        writeln!(out, "mean_latency_ms,{:.3}", self.mean_latency_ms)?;
        writeln!(out, "max_latency_ms,{:.3}", self.max_latency_ms)
    }

    /// One line per state: identifiers, truth index, then every score.
    pub fn write_scores_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "app_id,flow,step,truth,scores")?;
        for s in &self.scored {
            let scores: Vec<String> = s.scores.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{},{},{},{},{}", s.app_id, s.flow, s.step, s.truth, scores.join(" "))?;
        }
        Ok(())
    }
}
