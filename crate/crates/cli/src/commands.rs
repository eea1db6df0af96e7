use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use riskdecode_core::calibration::{
    calibrate, compare_models, minmax_rescale, CalibrationJob, CalibrationResult, ComparisonEvent,
};
use riskdecode_core::explain::{global_importance, shap_exact, shap_sampled, ShapRow, MAX_EXACT_FEATURES};
use riskdecode_core::models::ModelKind;
use riskdecode_core::pipeline::{group_data, train_group, TrainedSurrogate};
use riskdecode_core::reconstruction::{filter_all, reconstruct, AlignmentTable, FilterMode, Method, RatingRecord};
use riskdecode_core::scenario::{enumerate_events, simulate_event, EventSpec, EventTrajectory, Family, ModelGroup, DT};
use riskdecode_core::surrogate::MlpConfig;
use riskdecode_core::synthetic::synthetic_ratings;
use serde::{Deserialize, Serialize};

use crate::artifacts::{csv_reader, csv_text, f6, sha256_hex, Workspace};
use crate::config::{PipelineConfig, Selection};

pub const EVENTS: &str = "events.json";
pub const RATINGS: &str = "ratings.csv";
pub const INDEX: &str = "index.json";
pub const CURVES: &str = "curves.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const ANALYTIC: &str = "analytic.csv";
pub const GLOBALS: &str = "globals.csv";
pub const MANIFEST: &str = "manifest.json";

pub struct Context_ {
    pub ws: Workspace,
    pub cfg: PipelineConfig,
    pub selection: Selection,
}

fn t_of(k: usize) -> String {
    f6(k as f64 * DT)
}

fn model_path(g: ModelGroup) -> String {
    format!("models/{}.json", g.name())
}

fn load_events(cx: &mut Context_) -> Result<Vec<EventSpec>> {
    cx.ws.read_json(EVENTS, "generate")
}

fn simulate_selected(cx: &mut Context_) -> Result<Vec<EventTrajectory>> {
    let events = load_events(cx)?;
    events
        .iter()
        .filter(|e| cx.selection.includes(e.scenario))
        .map(|e| simulate_event(e).map_err(Into::into))
        .collect()
}

fn read_curves(cx: &mut Context_) -> Result<BTreeMap<u32, Vec<f64>>> {
    let text = cx.ws.read_artifact(CURVES, "reconstruct")?;
    let mut out: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for rec in csv_reader(&text).deserialize::<CurveRow>() {
        let r = rec.context("reading curves.csv")?;
        out.entry(r.event_id).or_default().push(r.mean);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct CurveRow {
    event_id: u32,
    #[allow(dead_code)]
    t: f64,
    mean: f64,
}

pub fn generate(cx: &mut Context_) -> Result<()> {
    let events: Vec<EventSpec> = enumerate_events()
        .into_iter()
        .filter(|e| cx.selection.includes(e.scenario))
        .collect();
    let dir = cx.ws.path("trajectories");
    if dir.exists() {
        for entry in fs::read_dir(&dir)? {
            let p = entry?.path();
            if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("event_")) {
                fs::remove_file(&p)?;
            }
        }
    }
    for e in &events {
        let traj = simulate_event(e)?;
        cx.ws.write_csv(
            &format!("trajectories/event_{:03}.csv", e.event_id),
            &riskdecode_core::scenario::trajectory_csv(&traj),
        )?;
    }
    cx.ws.write_json(EVENTS, &events)?;
    println!("generated {} events into {}", events.len(), cx.ws.out.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub raw_ratings: usize,
    pub valid_ratings: usize,
    pub ratings_per_family: BTreeMap<String, usize>,
    pub participants: usize,
    pub dropped: Vec<(u32, u32)>,
}

const CANONICAL: [&str; 4] = ["participant_id", "event_id", "clip_index", "rating"];

/// Parses a ratings file, mapping column names through `profile`.
pub fn parse_ratings(text: &str, profile: &BTreeMap<String, String>) -> Result<Vec<RatingRecord>> {
    let mut rdr = csv_reader(text);
    let headers = rdr.headers().context("reading ratings header")?.clone();
    let mut cols = [0usize; 4];
    for (k, name) in CANONICAL.iter().enumerate() {
        let want = profile.get(*name).map(String::as_str).unwrap_or(name);
        cols[k] = headers
            .iter()
            .position(|h| h == want)
            .with_context(|| format!("ratings file lacks column `{want}`"))?;
    }
    let table = AlignmentTable::builtin();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.context("malformed ratings row")?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| rec.get(cols[k]).unwrap_or("");
        let parse = |k: usize| -> Result<u32> {
            field(k)
                .parse::<u32>()
                .with_context(|| format!("line {line}: `{}` is not a valid {}", field(k), CANONICAL[k]))
        };
        let (participant_id, event_id, clip_index, rating) = (parse(0)?, parse(1)?, parse(2)?, parse(3)?);
        let clips = table
            .clip_count(event_id)
            .map_err(|_| anyhow::anyhow!("line {line}: unknown event_id {event_id}"))?;
        if clip_index == 0 || clip_index as usize > clips {
            bail!("line {line}: clip_index {clip_index} outside 1..={clips} for event {event_id}");
        }
        if rating > 10 {
            bail!("line {line}: rating {rating} outside 0..=10");
        }
        out.push(RatingRecord {
            participant_id,
            event_id,
            clip_index,
            rating: rating as u8,
        });
    }
    Ok(out)
}

pub fn ingest(cx: &mut Context_, path: Option<&Path>, synthetic: bool) -> Result<()> {
    let records = if synthetic {
        let trajs = simulate_selected(cx)?;
        let scfg = riskdecode_core::synthetic::SyntheticConfig {
            seed: cx.ws.seed,
            ..cx.cfg.synthetic.clone()
        };
        synthetic_ratings(&trajs, &scfg)?
    } else {
        let Some(path) = path else {
            bail!("no ratings file given: pass a path, set RISKDECODE_DATA_DIR, or use --synthetic");
        };
        let path = if path.is_dir() { path.join("ratings.csv") } else { path.to_path_buf() };
        let text = cx.ws.read_file(&path, "ratings_input")?;
        parse_ratings(&text, &cx.cfg.ratings_profile)?
    };
    let raw = records.len();
    let (mut kept, outcomes) = filter_all(&records, FilterMode::default())?;
    kept.sort();
    let mut per_family: BTreeMap<String, usize> = BTreeMap::new();
    let fam_of: BTreeMap<u32, Family> = enumerate_events().iter().map(|e| (e.event_id, e.family())).collect();
    for r in &kept {
        *per_family.entry(fam_of[&r.event_id].name().to_string()).or_insert(0) += 1;
    }
    let index = DatasetIndex {
        raw_ratings: raw,
        valid_ratings: kept.len(),
        ratings_per_family: per_family,
        participants: kept.iter().map(|r| r.participant_id).collect::<BTreeSet<_>>().len(),
        dropped: outcomes
            .iter()
            .flat_map(|(e, o)| o.dropped_participants.iter().map(move |p| (*e, *p)))
            .collect(),
    };
    let body = csv_text(
        &CANONICAL,
        kept.iter().map(|r| {
            vec![
                r.participant_id.to_string(),
                r.event_id.to_string(),
                r.clip_index.to_string(),
                r.rating.to_string(),
            ]
        }),
    )?;
    cx.ws.write_csv(RATINGS, &body)?;
    cx.ws.write_json(INDEX, &index)?;
    println!(
        "ingested {raw} ratings, {} valid after filtering ({} participant-event sequences dropped)",
        index.valid_ratings,
        index.dropped.len()
    );
    Ok(())
}

pub fn reconstruct_cmd(cx: &mut Context_, method: Method) -> Result<()> {
    let text = cx.ws.read_artifact(RATINGS, "ingest")?;
    let recs = parse_ratings(&text, &BTreeMap::new())?;
    let durations: BTreeMap<u32, f64> = enumerate_events().iter().map(|e| (e.event_id, e.duration)).collect();
    let curves = reconstruct(&recs, &AlignmentTable::builtin(), method, |id| {
        durations
            .get(&id)
            .copied()
            .ok_or(riskdecode_core::Error::UnknownEvent(id))
    })?;
    let mut rows = Vec::new();
    for c in &curves {
        let a = &c.aggregate;
        for k in 0..a.mean.len() {
            rows.push(vec![
                c.event_id.to_string(),
                t_of(k),
                f6(a.mean[k]),
                f6(a.p25[k]),
                f6(a.p75[k]),
                f6(a.std[k]),
            ]);
        }
    }
    cx.ws
        .write_csv(CURVES, &csv_text(&["event_id", "t", "mean", "p25", "p75", "std"], rows)?)?;
    println!("reconstructed {} event curves ({})", curves.len(), method.name());
    Ok(())
}

pub fn features(cx: &mut Context_) -> Result<()> {
    let trajs = simulate_selected(cx)?;
    for g in cx.selection.groups() {
        let manifest = cx.cfg.manifest(g.family())?;
        let data = group_data(g, &manifest, &trajs, None)?;
        let mut header = vec!["event_id", "t"];
        header.extend(manifest.features.iter().map(String::as_str));
        let rows = data.rows.iter().enumerate().map(|(r, (e, k))| {
            let mut row = vec![e.to_string(), t_of(*k)];
            row.extend(data.features.row(r).iter().map(|v| f6(*v)));
            row
        });
        cx.ws.write_csv(&format!("features/{}.csv", g.name()), &csv_text(&header, rows)?)?;
        let norm = riskdecode_core::features::zscore_fit(&data.features, &manifest.features)?;
        cx.ws.write_json(&format!("features/{}_norm.json", g.name()), &norm)?;
        println!("{}: {} rows x {} features", g.name(), data.rows.len(), manifest.dim());
    }
    Ok(())
}

fn targets_for(trajs: &[EventTrajectory], curves: &BTreeMap<u32, Vec<f64>>) -> Result<(Vec<EventTrajectory>, Vec<Vec<f64>>)> {
    let mut t = Vec::new();
    let mut y = Vec::new();
    for tr in trajs {
        if let Some(c) = curves.get(&tr.event_id) {
            if c.len() != tr.frames.len() {
                bail!("curve of event {} has {} samples, trajectory has {}", tr.event_id, c.len(), tr.frames.len());
            }
            t.push(tr.clone());
            y.push(c.clone());
        }
    }
    if t.is_empty() {
        bail!("no selected event has a reconstructed curve");
    }
    Ok((t, y))
}

pub fn calibrate_cmd(cx: &mut Context_, draws: Option<usize>, model: Option<&str>) -> Result<()> {
    let trajs = simulate_selected(cx)?;
    let curves = read_curves(cx)?;
    let (trajs, targets) = targets_for(&trajs, &curves)?;
    let kinds: Vec<ModelKind> = match model {
        None => vec![ModelKind::Pcad, ModelKind::Drf],
        Some(m) if m.eq_ignore_ascii_case("pcad") => vec![ModelKind::Pcad],
        Some(m) if m.eq_ignore_ascii_case("drf") => vec![ModelKind::Drf],
        Some(m) => bail!("unknown model `{m}` (expected PCAD or DRF)"),
    };
    for kind in kinds {
        let job = CalibrationJob::new(kind, draws.unwrap_or(cx.cfg.calibration_draws), cx.ws.seed);
        let res = calibrate(&job, &trajs, &targets)?;
        let mut header = vec!["draw"];
        header.extend(res.param_names.iter().map(String::as_str));
        header.push("rmse");
        let rows = res.trace.iter().map(|r| {
            let mut row = vec![r.draw.to_string()];
            row.extend(r.values.iter().map(|v| f6(*v)));
            row.push(f6(r.rmse));
            row
        });
        cx.ws
            .write_csv(&format!("calibration/{}_trace.csv", kind.name()), &csv_text(&header, rows)?)?;
        let summary = CalibrationResult {
            trace: Vec::new(),
            ..res.clone()
        };
        cx.ws.write_json(&format!("calibration/{}.json", kind.name()), &summary)?;
        println!(
            "{}: best RMSE {:.6} at draw {} (default {:.6})",
            kind.name(),
            res.best_rmse,
            res.best_draw,
            res.default_rmse
        );
    }
    Ok(())
}

pub fn train(cx: &mut Context_, epochs: Option<usize>) -> Result<()> {
    let trajs = simulate_selected(cx)?;
    let curves = read_curves(cx)?;
    let config = MlpConfig {
        seed: cx.ws.seed,
        epochs: epochs.unwrap_or(cx.cfg.mlp.epochs),
        ..cx.cfg.mlp.clone()
    };
    for g in cx.selection.groups() {
        let manifest = cx.cfg.manifest(g.family())?;
        let data = match group_data(g, &manifest, &trajs, Some(&curves)) {
            Ok(d) => d,
            Err(riskdecode_core::Error::InvalidConfig(msg)) => {
                println!("{}: skipped ({msg})", g.name());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let net = train_group(&data, &config)?;
        for e in &net.report.epochs {
            println!(
                "{} epoch {:>4} train_rmse {:.6} val_rmse {:.6}",
                g.name(),
                e.epoch + 1,
                e.train_rmse,
                e.val_rmse
            );
        }
        let rows = net
            .report
            .epochs
            .iter()
            .map(|e| vec![(e.epoch + 1).to_string(), f6(e.train_rmse), f6(e.val_rmse)]);
        cx.ws.write_csv(
            &format!("models/{}_epochs.csv", g.name()),
            &csv_text(&["epoch", "train_rmse", "val_rmse"], rows)?,
        )?;
        cx.ws.write_json(&model_path(g), &net)?;
        println!(
            "{}: final train RMSE {:.6}, validation RMSE {:.6}",
            g.name(),
            net.report.final_train_rmse,
            net.report.final_val_rmse
        );
    }
    Ok(())
}

fn load_models(cx: &mut Context_) -> Result<Vec<TrainedSurrogate>> {
    let mut nets = Vec::new();
    for g in cx.selection.groups() {
        if cx.ws.exists(&model_path(g)) {
            nets.push(cx.ws.read_json::<TrainedSurrogate>(&model_path(g), "train")?);
        }
    }
    if nets.is_empty() {
        cx.ws.require(&model_path(cx.selection.groups()[0]), "train")?;
    }
    Ok(nets)
}

pub fn predict(cx: &mut Context_) -> Result<()> {
    let trajs = simulate_selected(cx)?;
    let nets = load_models(cx)?;
    let mut rows = Vec::new();
    for net in &nets {
        let manifest = riskdecode_core::features::FeatureManifest {
            family: net.group.family(),
            features: net.norm.names.clone(),
        };
        let data = group_data(net.group, &manifest, &trajs, None)?;
        let p = net.predict(&data.features)?;
        for (r, (e, k)) in data.rows.iter().enumerate() {
            rows.push((*e, *k, p.mean[r], p.variance[r]));
        }
    }
    rows.sort_by_key(|r| (r.0, r.1));
    cx.ws.write_csv(
        PREDICTIONS,
        &csv_text(
            &["event_id", "t", "mean", "variance"],
            rows.iter().map(|r| vec![r.0.to_string(), t_of(r.1), f6(r.2), f6(r.3)]),
        )?,
    )?;

    let mut analytic: Vec<(ModelKind, Vec<Vec<f64>>)> = Vec::new();
    for kind in [ModelKind::Pcad, ModelKind::Drf] {
        let rel = format!("calibration/{}.json", kind.name());
        if cx.ws.exists(&rel) {
            let res: CalibrationResult = cx.ws.read_json(&rel, "calibrate")?;
            analytic.push((kind, minmax_rescale(&res.best.raw_outputs(&trajs)?)?));
        }
    }
    if !analytic.is_empty() {
        let mut header = vec!["event_id", "t"];
        header.extend(analytic.iter().map(|(k, _)| k.name()));
        let mut out = Vec::new();
        for (i, t) in trajs.iter().enumerate() {
            for k in 0..t.frames.len() {
                let mut row = vec![t.event_id.to_string(), t_of(k)];
                row.extend(analytic.iter().map(|(_, v)| f6(v[i][k])));
                out.push(row);
            }
        }
        cx.ws.write_csv(ANALYTIC, &csv_text(&header, out)?)?;
    }
    println!("predicted {} frames with {} network(s)", rows.len(), nets.len());
    Ok(())
}

pub fn explain(cx: &mut Context_, permutations: Option<usize>, stride: Option<usize>) -> Result<()> {
    let trajs = simulate_selected(cx)?;
    let nets = load_models(cx)?;
    let n_perm = permutations.unwrap_or(cx.cfg.permutations);
    let stride = stride.unwrap_or(cx.cfg.explain_stride).max(1);
    let mut global_rows = Vec::new();
    for net in &nets {
        let names = net.norm.names.clone();
        let manifest = riskdecode_core::features::FeatureManifest {
            family: net.group.family(),
            features: names.clone(),
        };
        let data = group_data(net.group, &manifest, &trajs, None)?;
        let z = net.normalize(&data.features)?;
        let exact = names.len() <= MAX_EXACT_FEATURES;
        let mut shap_rows = Vec::new();
        let mut frame_rows = Vec::new();
        let mut all: Vec<ShapRow> = Vec::new();
        for (r, &(event, k)) in data.rows.iter().enumerate() {
            if k % stride != 0 {
                continue;
            }
            let x = z.row(r);
            let row = if exact {
                shap_exact(&net.weights, x, &net.baseline)?
            } else {
                shap_sampled(&net.weights, x, &net.baseline, n_perm, cx.ws.seed ^ r as u64)?
            };
            let pred = net.weights.mean(x)?;
            frame_rows.push(vec![event.to_string(), t_of(k), f6(row.base_value), f6(pred)]);
            for (i, name) in names.iter().enumerate() {
                shap_rows.push(vec![
                    event.to_string(),
                    t_of(k),
                    name.clone(),
                    f6(row.phi[i]),
                    f6(data.features.get(r, i)),
                    row.std_err.as_ref().map_or(String::new(), |s| f6(s[i])),
                ]);
            }
            all.push(row);
        }
        let g = net.group.name();
        cx.ws.write_csv(
            &format!("shap/{g}.csv"),
            &csv_text(&["event_id", "t", "feature", "phi", "feature_value", "std_err"], shap_rows)?,
        )?;
        cx.ws.write_csv(
            &format!("shap/{g}_frames.csv"),
            &csv_text(&["event_id", "t", "base_value", "predicted"], frame_rows)?,
        )?;
        for imp in global_importance(&names, &all)? {
            global_rows.push(vec![g.to_string(), imp.feature, f6(imp.mean_abs_phi), imp.rank.to_string()]);
        }
        println!(
            "{g}: {} frames attributed ({})",
            all.len(),
            if exact { "exact".to_string() } else { format!("{n_perm} sampled permutations") }
        );
    }
    cx.ws
        .write_csv(GLOBALS, &csv_text(&["scenario", "feature", "mean_abs_phi", "rank"], global_rows)?)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PredRow {
    event_id: u32,
    #[allow(dead_code)]
    t: f64,
    mean: f64,
}

pub fn report(cx: &mut Context_) -> Result<()> {
    let curves_text = cx.ws.read_artifact(CURVES, "reconstruct")?;
    let pred_text = cx.ws.read_artifact(PREDICTIONS, "predict")?;
    let truth = read_curves(cx)?;
    let mut models: BTreeMap<u32, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for rec in csv_reader(&pred_text).deserialize::<PredRow>() {
        let r = rec.context("reading predictions.csv")?;
        models.entry(r.event_id).or_default().entry("MLP".into()).or_default().push(r.mean);
    }
    if cx.ws.exists(ANALYTIC) {
        let text = cx.ws.read_artifact(ANALYTIC, "predict")?;
        let mut rdr = csv_reader(&text);
        let headers = rdr.headers()?.clone();
        for rec in rdr.records() {
            let rec = rec?;
            let event: u32 = rec[0].parse()?;
            for (i, h) in headers.iter().enumerate().skip(2) {
                models.entry(event).or_default().entry(h.to_string()).or_default().push(rec[i].parse()?);
            }
        }
    }
    let fam_of: BTreeMap<u32, Family> = enumerate_events().iter().map(|e| (e.event_id, e.family())).collect();
    let events: Vec<ComparisonEvent> = models
        .into_iter()
        .filter_map(|(id, m)| {
            truth.get(&id).map(|t| ComparisonEvent {
                event_id: id,
                scenario: fam_of[&id].name().to_string(),
                truth: t.clone(),
                models: m,
            })
        })
        .collect();
    let cmp = compare_models(&events)?;

    cx.ws.write_csv("report/curves.csv", curves_text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect::<String>().as_str())?;
    cx.ws.write_csv(
        "report/comparison.csv",
        &csv_text(
            &["scenario", "model", "median", "q1", "q3"],
            cmp.summaries
                .iter()
                .map(|s| vec![s.scenario.clone(), s.model.clone(), f6(s.median), f6(s.q1), f6(s.q3)]),
        )?,
    )?;
    cx.ws.write_csv(
        "report/histogram.csv",
        &csv_text(
            &["model", "bin_lo", "count"],
            cmp.histograms
                .iter()
                .map(|h| vec![h.model.clone(), f6(h.bin_lo), h.count.to_string()]),
        )?,
    )?;
    let mut box_rows = Vec::new();
    for e in &cmp.errors {
        let sc = fam_of[&e.event_id].name();
        for (k, v) in e.abs_error.iter().enumerate() {
            box_rows.push(vec![sc.to_string(), e.model.clone(), e.event_id.to_string(), t_of(k), f6(*v)]);
        }
    }
    cx.ws.write_csv(
        "report/abs_errors.csv",
        &csv_text(&["scenario", "model", "event_id", "t", "abs_error"], box_rows)?,
    )?;
    if cx.ws.exists(GLOBALS) {
        let g = cx.ws.read_artifact(GLOBALS, "explain")?;
        let body: String = g.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
        cx.ws.write_csv("report/rankings.csv", &body)?;
        let mut heat = Vec::new();
        for grp in ModelGroup::ALL {
            let rel = format!("shap/{}.csv", grp.name());
            let frames_rel = format!("shap/{}_frames.csv", grp.name());
            if !cx.ws.exists(&rel) || !cx.ws.exists(&frames_rel) {
                continue;
            }
            let frames = cx.ws.read_artifact(&frames_rel, "explain")?;
            let mut pred: BTreeMap<(u32, String), (String, String)> = BTreeMap::new();
            for rec in csv_reader(&frames).records() {
                let rec = rec?;
                pred.insert((rec[0].parse()?, rec[1].to_string()), (rec[2].to_string(), rec[3].to_string()));
            }
            let shap = cx.ws.read_artifact(&rel, "explain")?;
            for rec in csv_reader(&shap).records() {
                let rec = rec?;
                let key = (rec[0].parse::<u32>()?, rec[1].to_string());
                let (base, p) = pred.get(&key).cloned().unwrap_or_default();
                heat.push(vec![
                    grp.name().to_string(),
                    rec[0].to_string(),
                    rec[1].to_string(),
                    rec[2].to_string(),
                    rec[3].to_string(),
                    base,
                    p,
                ]);
            }
        }
        if !heat.is_empty() {
            cx.ws.write_csv(
                "report/heatmaps.csv",
                &csv_text(&["scenario", "event_id", "t", "feature", "phi", "base_value", "predicted"], heat)?,
            )?;
        }
    }
    write_manifest(cx)?;
    for s in cmp.summaries.iter().filter(|s| s.scenario == "ALL") {
        println!("{}: median abs error {:.6} (q1 {:.6}, q3 {:.6})", s.model, s.median, s.q1, s.q3);
    }
    Ok(())
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
    bytes: u64,
}

fn write_manifest(cx: &mut Context_) -> Result<()> {
    let mut files = Vec::new();
    walk(&cx.ws.out, &mut files)?;
    files.sort();
    let mut entries = Vec::new();
    for f in files {
        let rel = f.strip_prefix(&cx.ws.out)?.to_string_lossy().replace('\\', "/");
        if rel == MANIFEST {
            continue;
        }
        let bytes = fs::read(&f)?;
        entries.push(ManifestEntry {
            path: rel,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    cx.ws.write_json(MANIFEST, &entries)?;
    Ok(())
}
