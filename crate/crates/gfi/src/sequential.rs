//! Sequential grouped feature importance: greedy forward selection of groups
//! by LOGI improvement.
//!
//! Per outer data split, selection starts from the empty set; step 1 accepts
//! the best single group iff its LOGI exceeds δ, and each later step accepts
//! the best one-group extension of the current combination iff the LOGI gain
//! over the previous level exceeds δ. Candidate LOGI evaluations within a
//! split share identical inner resampling folds, so argmax comparisons are
//! paired. Repeating over many outer splits yields selection paths that
//! aggregate into alluvial flow data.

use crate::data::{Dataset, GroupSpec};
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::model::Learner;
use crate::refit::{logi_with_splits, RefitConfig};
use crate::resampling::{make_splits, ResamplingPlan};
use crate::seed;
use crate::svg::{fmt, palette, Svg};
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

pub struct SequentialConfig<'a> {
    /// Improvement threshold δ > 0.
    pub delta: f64,
    /// Outer data splits (the procedure runs on each split's train part).
    pub outer: ResamplingPlan,
    /// Inner resampling for LOGI; its seed is re-derived per outer split.
    pub inner: ResamplingPlan,
    pub learner: &'a dyn Learner,
    pub loss: Loss,
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Group added at this step.
    pub group: String,
    /// LOGI of the combination after adding the group.
    pub logi: f64,
    /// Estimated generalization error of the combination's model.
    pub ge: f64,
}

#[derive(Debug, Clone)]
pub struct SequentialResult {
    /// One (possibly empty) accepted-step sequence per outer split.
    pub steps_per_split: Vec<Vec<StepRecord>>,
}

impl SequentialResult {
    /// Path prefix strings ("G1", "G1+G3", ...) of one split.
    pub fn path_of(&self, split: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut prefix = String::new();
        for step in &self.steps_per_split[split] {
            if !prefix.is_empty() {
                prefix.push('+');
            }
            prefix.push_str(&step.group);
            out.push(prefix.clone());
        }
        out
    }
}

/// Runs the greedy forward search over every outer split.
pub fn sequential_select(
    cfg: &SequentialConfig,
    data: &Dataset,
    groups: &GroupSpec,
) -> Result<SequentialResult> {
    if cfg.delta <= 0.0 {
        return Err(Error::contract(format!(
            "improvement threshold must be > 0, got {}",
            cfg.delta
        )));
    }
    if groups.is_empty() {
        return Err(Error::contract("need at least one group"));
    }
    let outer_splits = make_splits(&cfg.outer, data.n())?;

    // candidate names in lexicographic order: ties in the argmax go to the
    // first name under strict-improvement scanning
    let mut ordered_names: Vec<String> =
        groups.names().iter().map(|s| s.to_string()).collect();
    ordered_names.sort();

    let steps_per_split: Vec<Vec<StepRecord>> = outer_splits
        .par_iter()
        .enumerate()
        .map(|(split_idx, outer)| -> Result<Vec<StepRecord>> {
            let subset = data.select_rows(&outer.train);
            let inner_plan = cfg
                .inner
                .with_seed(seed::child_seed(cfg.inner.seed(), "seq-inner", split_idx as u64));
            let inner_splits = make_splits(&inner_plan, subset.n())?;
            let refit_cfg = RefitConfig {
                plan: inner_plan,
                learner: cfg.learner,
                loss: cfg.loss,
            };

            let mut selected: Vec<String> = Vec::new();
            let mut selected_features: Vec<usize> = Vec::new();
            let mut level = 0.0;
            let mut records = Vec::new();

            loop {
                let mut best: Option<(String, f64, f64, Vec<usize>)> = None;
                for name in &ordered_names {
                    if selected.contains(name) {
                        continue;
                    }
                    let mut union = selected_features.clone();
                    union.extend_from_slice(groups.get(name).unwrap());
                    union.sort_unstable();
                    union.dedup();
                    let score = logi_with_splits(&refit_cfg, &subset, &union, &inner_splits)?;
                    let ge =
                        score.ge_model.iter().sum::<f64>() / score.ge_model.len() as f64;
                    if best.as_ref().is_none_or(|(_, b, _, _)| score.mean > *b) {
                        best = Some((name.clone(), score.mean, ge, union));
                    }
                }
                let Some((name, logi, ge, union)) = best else { break };
                let improvement = logi - level;
                if improvement <= cfg.delta {
                    break;
                }
                level = logi;
                selected.push(name.clone());
                selected_features = union;
                records.push(StepRecord { group: name, logi, ge });
                if selected.len() == groups.len() {
                    break;
                }
            }
            Ok(records)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SequentialResult { steps_per_split })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRow {
    /// 1-based selection step.
    pub step: usize,
    /// Group names joined by '+' in selection order.
    pub path: String,
    /// Number of outer splits whose selection starts with this prefix.
    pub count: usize,
    /// Mean estimated generalization error at this step over those splits.
    pub mean_ge: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FlowTable {
    pub rows: Vec<FlowRow>,
}

impl FlowTable {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("step,path,count,mean_ge\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.step, r.path, r.count, r.mean_ge));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

/// Collapses selection paths into per-step prefix counts and mean GE. Rows
/// with fewer than `min_count` supporting splits are dropped (use 1 to keep
/// everything).
pub fn aggregate_alluvial(result: &SequentialResult, min_count: usize) -> FlowTable {
    use std::collections::BTreeMap;
    // (step, path) → (count, ge sum)
    let mut acc: BTreeMap<(usize, String), (usize, f64)> = BTreeMap::new();
    for (split_idx, steps) in result.steps_per_split.iter().enumerate() {
        let prefixes = result.path_of(split_idx);
        for (i, prefix) in prefixes.iter().enumerate() {
            let entry = acc.entry((i + 1, prefix.clone())).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += steps[i].ge;
        }
    }
    let mut rows: Vec<FlowRow> = acc
        .into_iter()
        .filter(|(_, (count, _))| *count >= min_count.max(1))
        .map(|((step, path), (count, ge_sum))| FlowRow {
            step,
            path,
            count,
            mean_ge: ge_sum / count as f64,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.step
            .cmp(&b.step)
            .then(b.count.cmp(&a.count))
            .then(a.path.cmp(&b.path))
    });
    FlowTable { rows }
}

/// Renders the flow table as a static alluvial chart: one column per step,
/// node height proportional to count, nodes labeled with the added group,
/// count, and mean GE. Output bytes are deterministic.
pub fn render_alluvial_svg(table: &FlowTable, path: impl AsRef<Path>) -> Result<()> {
    let svg = alluvial_svg_string(table);
    std::fs::write(path, svg)?;
    Ok(())
}

fn alluvial_svg_string(table: &FlowTable) -> String {
    let width = 760.0;
    let height = 420.0;
    let mut svg = Svg::new(width, height);
    if table.rows.is_empty() {
        svg.text(width / 2.0, height / 2.0, 18.0, "middle", "no selections");
        return svg.into_string();
    }

    let max_step = table.rows.iter().map(|r| r.step).max().unwrap();
    let margin_x = 60.0;
    let margin_y = 50.0;
    let node_w = 26.0;
    let gap = 10.0;
    let usable_h = height - 2.0 * margin_y;
    let col_dx = if max_step > 1 {
        (width - 2.0 * margin_x - node_w) / (max_step - 1) as f64
    } else {
        0.0
    };

    let step_total: Vec<usize> = (1..=max_step)
        .map(|s| table.rows.iter().filter(|r| r.step == s).map(|r| r.count).sum())
        .collect();
    let max_total = *step_total.iter().max().unwrap() as f64;
    let px = usable_h / max_total;

    // node geometry per (step, path): (x, y_top, height)
    let mut geom: std::collections::BTreeMap<(usize, &str), (f64, f64, f64)> =
        std::collections::BTreeMap::new();
    for s in 1..=max_step {
        let x = margin_x + (s - 1) as f64 * col_dx;
        let mut y = margin_y;
        for row in table.rows.iter().filter(|r| r.step == s) {
            let h = row.count as f64 * px;
            geom.insert((s, row.path.as_str()), (x, y, h));
            y += h + gap;
        }
        svg.text(
            x + node_w / 2.0,
            margin_y - 18.0,
            13.0,
            "middle",
            &format!("step {s}"),
        );
    }

    // streams: child at step s+1 connects to its parent prefix at step s
    for row in table.rows.iter().filter(|r| r.step > 1) {
        let parts: Vec<&str> = row.path.split('+').collect();
        let parent_path = parts[..row.step - 1].join("+");
        let Some(&(px0, py0, ph0)) = geom.get(&(row.step - 1, parent_path.as_str())) else {
            continue; // parent filtered out by min_count
        };
        let &(cx, cy, ch) = geom.get(&(row.step, row.path.as_str())).unwrap();
        // outflow leaves the parent proportionally from its top
        let y0 = py0 + (ph0 - ch).max(0.0) / 2.0;
        let x0 = px0 + node_w;
        let mid = (x0 + cx) / 2.0;
        let d = format!(
            "M {} {} C {} {}, {} {}, {} {} L {} {} C {} {}, {} {}, {} {} Z",
            fmt(x0),
            fmt(y0),
            fmt(mid),
            fmt(y0),
            fmt(mid),
            fmt(cy),
            fmt(cx),
            fmt(cy),
            fmt(cx),
            fmt(cy + ch),
            fmt(mid),
            fmt(cy + ch),
            fmt(mid),
            fmt(y0 + ch.min(ph0)),
            fmt(x0),
            fmt(y0 + ch.min(ph0)),
        );
        svg.path(&d, "#9aa5b1", 0.45);
    }

    // nodes on top of the streams
    for row in &table.rows {
        let &(x, y, h) = geom.get(&(row.step, row.path.as_str())).unwrap();
        let added = row.path.rsplit('+').next().unwrap();
        svg.rect(x, y, node_w, h, palette(row.step - 1));
        svg.text(
            x + node_w + 6.0,
            y + h / 2.0 + 4.0,
            12.0,
            "start",
            &format!("{added} (n={}, GE={})", row.count, fmt(row.mean_ge)),
        );
    }

    svg.into_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LinearLearner;
    use ndarray::{Array1, Array2};
    use rand_distr::{Distribution, StandardNormal};

    fn noise_data(n: usize, p: usize, signal: Option<f64>, s: u64) -> (Dataset, GroupSpec) {
        let mut rng = seed::rng(s, "seq-data", 0);
        let mut xs = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(p);
            for _ in 0..p {
                row.push(StandardNormal.sample(&mut rng));
            }
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(signal.map_or(0.0, |b| b * row[0]) + e);
            xs.extend(row);
        }
        let names: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
        let data = Dataset::new(
            Array2::from_shape_vec((n, p), xs).unwrap(),
            names,
            Array1::from(y),
        )
        .unwrap();
        let mut map = indexmap::IndexMap::new();
        for i in 0..p {
            map.insert(format!("G{}", i + 1), vec![i]);
        }
        (data, GroupSpec::new(map, p).unwrap())
    }

    fn config(learner: &LinearLearner, reps: usize, seed_val: u64) -> SequentialConfig<'_> {
        SequentialConfig {
            delta: 0.001,
            outer: ResamplingPlan::Subsampling {
                repetitions: reps,
                train_fraction: 0.8,
                seed: seed_val,
            },
            inner: ResamplingPlan::KFold { k: 5, seed: seed_val },
            learner,
            loss: Loss::Mse,
        }
    }

    #[test]
    fn pure_noise_selects_nothing() {
        let (data, groups) = noise_data(200, 3, None, 4);
        let learner = LinearLearner::new(1.0);
        let cfg = config(&learner, 20, 7);
        let result = sequential_select(&cfg, &data, &groups).unwrap();
        let empty = result
            .steps_per_split
            .iter()
            .filter(|s| s.is_empty())
            .count();
        assert!(empty >= 18, "empty in {empty}/20 splits");
    }

    #[test]
    fn informative_group_selected_first() {
        let (data, groups) = noise_data(300, 3, Some(3.0), 5);
        let learner = LinearLearner::new(0.01);
        let cfg = config(&learner, 50, 8);
        let result = sequential_select(&cfg, &data, &groups).unwrap();
        let first_is_signal = result
            .steps_per_split
            .iter()
            .filter(|s| s.first().is_some_and(|r| r.group == "G1"))
            .count();
        assert!(first_is_signal >= 48, "G1 first in {first_is_signal}/50");

        // accepted LOGI levels strictly increase by more than δ
        for steps in &result.steps_per_split {
            let mut prev = 0.0;
            for (i, s) in steps.iter().enumerate() {
                if i == 0 {
                    assert!(s.logi > cfg.delta);
                } else {
                    assert!(s.logi - prev > cfg.delta);
                }
                prev = s.logi;
            }
            // selected groups are distinct
            let mut names: Vec<&str> = steps.iter().map(|s| s.group.as_str()).collect();
            names.sort_unstable();
            names.dedup();
            assert_eq!(names.len(), steps.len());
        }

        // reruns reproduce bit-identical results
        let again = sequential_select(&cfg, &data, &groups).unwrap();
        for (a, b) in result.steps_per_split.iter().zip(&again.steps_per_split) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.group, y.group);
                assert_eq!(x.logi.to_bits(), y.logi.to_bits());
            }
        }
    }

    #[test]
    fn delta_must_be_positive() {
        let (data, groups) = noise_data(50, 2, None, 1);
        let learner = LinearLearner::new(0.1);
        let mut cfg = config(&learner, 2, 1);
        cfg.delta = 0.0;
        assert!(sequential_select(&cfg, &data, &groups).is_err());
    }

    fn fixture_result() -> SequentialResult {
        let step = |g: &str, logi: f64, ge: f64| StepRecord {
            group: g.into(),
            logi,
            ge,
        };
        SequentialResult {
            steps_per_split: vec![
                vec![step("G1", 1.0, 1.2), step("G3", 2.0, 0.2)],
                vec![step("G1", 1.1, 1.3), step("G3", 2.1, 0.3)],
                vec![step("G2", 0.9, 1.4), step("G3", 1.9, 0.25)],
            ],
        }
    }

    #[test]
    fn aggregate_counts_paths() {
        let result = fixture_result();
        let table = aggregate_alluvial(&result, 1);
        assert_eq!(table.rows.len(), 4);
        let g1 = table.rows.iter().find(|r| r.path == "G1").unwrap();
        assert_eq!(g1.count, 2);
        assert!((g1.mean_ge - 1.25).abs() < 1e-12);
        let deep = table.rows.iter().find(|r| r.path == "G1+G3").unwrap();
        assert_eq!(deep.step, 2);
        assert_eq!(deep.count, 2);

        // identical paths over all splits collapse to one row per step
        let uniform = SequentialResult {
            steps_per_split: vec![
                result.steps_per_split[0].clone(),
                result.steps_per_split[0].clone(),
            ],
        };
        let t2 = aggregate_alluvial(&uniform, 1);
        assert_eq!(t2.rows.len(), 2);
        assert!(t2.rows.iter().all(|r| r.count == 2));

        // single split → single path with count 1
        let single = SequentialResult {
            steps_per_split: vec![result.steps_per_split[2].clone()],
        };
        let t3 = aggregate_alluvial(&single, 1);
        assert!(t3.rows.iter().all(|r| r.count == 1));

        // min-count filter drops thin streams
        let filtered = aggregate_alluvial(&result, 2);
        assert!(filtered.rows.iter().all(|r| r.count >= 2));
    }

    #[test]
    fn svg_rendering_is_deterministic() {
        let table = aggregate_alluvial(&fixture_result(), 1);
        let a = alluvial_svg_string(&table);
        let b = alluvial_svg_string(&table);
        assert_eq!(a, b);
        assert!(a.contains("step 1"));
        assert!(a.contains("G3"));

        let empty = alluvial_svg_string(&FlowTable::default());
        assert!(empty.contains("no selections"));
    }

    #[test]
    fn flow_csv_schema() {
        let table = aggregate_alluvial(&fixture_result(), 1);
        let csv = table.to_csv_string();
        assert!(csv.starts_with("step,path,count,mean_ge\n"));
        assert!(csv.contains("2,G1+G3,2,"));
    }
}
