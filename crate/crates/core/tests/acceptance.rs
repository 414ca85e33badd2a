//! Acceptance suite. Prints one PASS/FAIL line per criterion (with indented
//! detail lines) and exits non-zero if any criterion fails.
//!
//! `cargo test -p loadcast --test acceptance -- 1 3 7` runs a subset.
//! Set `LOADCAST_ACCEPTANCE_DIR` to keep the pipeline artifacts.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration as StdDuration, Instant};

use chrono::{Duration, NaiveDate};
use common::{
    brute_dbscan, dataset_from, random_points, records_at, spec, t0, worst_lstm_gradient_error, worst_loss_gradient_error,
    BATCH_VALUES, GRAD_VALUES, LOSS_VALUES,
};
use loadcast::anomaly::{dbscan, DbscanParams, DetectionScore, InjectionSpec, NOISE};
use loadcast::evaluation::{
    compare_experiments, percent_decrease, AnomalyMode, ComparisonTable, EvalReport, GroupKey, GroupRow, Pairing, ReportMeta,
    SeasonalityMode, Units,
};
use loadcast::losses::{batch_loss, loss_al1, loss_al2, loss_grad, loss_mse, LossKind, LossSpec};
use loadcast::lstm::TrainConfig;
use loadcast::pipeline::{prepare_datasets, run_matrix, run_pipeline, ExperimentConfig, Manifest, MatrixAxes};
use loadcast::synth::SynthSpec;
use loadcast::timeseries::{
    apply_scaler, fit_robust_scaler, make_windows, season_of, split_seasons, Feature, MultiSeries, SeasonId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { pass: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: impl Into<String>) {
        let line = line.into();
        if !ok {
            self.pass = false;
            self.details.push(format!("FAILED {line}"));
        } else {
            self.details.push(line);
        }
    }

    fn note(&mut self, line: impl Into<String>) {
        self.details.push(line.into());
    }

    fn budget(&mut self, elapsed: StdDuration, limit: StdDuration) {
        self.check(elapsed <= limit, format!("runtime {:.1}s (budget {:.0}s)", elapsed.as_secs_f64(), limit.as_secs_f64()));
    }
}

/// State handed from the matrix criterion to the determinism criterion.
#[derive(Default)]
struct Context {
    root: PathBuf,
    mean_cell_secs: Option<f64>,
    reference_cell: Option<(ExperimentConfig, Manifest)>,
    matrix_table: Option<ComparisonTable>,
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.4}"))
}

fn secs(s: f64) -> StdDuration {
    StdDuration::from_secs_f64(s)
}

// 1 ---------------------------------------------------------------------

fn loss_values(_: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    let value = |kind, e| match kind {
        LossKind::Mse => loss_mse(e),
        LossKind::Al1 => loss_al1(e, &spec(kind)),
        LossKind::Al2 => loss_al2(e, &spec(kind)),
    };
    let mut worst: f64 = 0.0;
    for &(kind, e, want) in LOSS_VALUES {
        let got = value(kind, e);
        worst = worst.max((got - want).abs());
        v.check((got - want).abs() <= 1e-12, format!("{kind}({e}) = {got} (expected {want})"));
    }
    for &(kind, errors, want) in BATCH_VALUES {
        let got = batch_loss(errors, &spec(kind)).unwrap();
        v.check((got - want).abs() <= 1e-12, format!("batch {kind}{errors:?} = {got} (expected {want})"));
    }
    for &(kind, e, want) in GRAD_VALUES {
        let got = loss_grad(e, &spec(kind));
        v.check((got - want).abs() <= 1e-12, format!("d{kind}/de({e}) = {got} (expected {want})"));
    }
    let al1 = LossSpec::new(LossKind::Al1);
    for x in [-1.0_f64, 1.0] {
        let jump = (loss_al1(x - 1e-9, &al1) - loss_al1(x + 1e-9, &al1)).abs();
        v.check(jump <= 1e-6, format!("AL1 continuity at {x}: jump {jump:e}"));
    }
    v.details.retain(|d| d.starts_with("FAILED") || d.starts_with("AL1"));
    v.note(format!("{} values checked, worst deviation {worst:e}", LOSS_VALUES.len() + BATCH_VALUES.len() + GRAD_VALUES.len()));
    v.budget(start.elapsed(), secs(1.0));
    v
}

// 2 ---------------------------------------------------------------------

fn gradients(_: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    for kind in LossKind::ALL {
        let worst = worst_loss_gradient_error(kind, 7);
        v.check(worst <= 1e-6, format!("{kind} loss derivative: worst relative error {worst:.2e} (limit 1e-6)"));
    }
    for kind in LossKind::ALL {
        let worst = (0..10).map(|seed| worst_lstm_gradient_error(&LossSpec::new(kind), seed)).fold(0.0, f64::max);
        v.check(worst <= 1e-4, format!("{kind} LSTM backprop, every parameter: worst relative error {worst:.2e} (limit 1e-4)"));
    }
    v.budget(start.elapsed(), secs(30.0));
    v
}

// 3 ---------------------------------------------------------------------

fn partition(labels: &[i32]) -> (BTreeSet<BTreeSet<usize>>, BTreeSet<usize>) {
    let mut groups: BTreeMap<i32, BTreeSet<usize>> = BTreeMap::new();
    let mut noise = BTreeSet::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == NOISE {
            noise.insert(i);
        } else {
            groups.entry(l).or_default().insert(i);
        }
    }
    (groups.into_values().collect(), noise)
}

fn dbscan_oracle(_: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut points = 0;
    for case in 0..200 {
        let pts = random_points(&mut rng, 60);
        points += pts.len();
        let eps = [0.05, 0.11, 0.2][case % 3];
        let min_samples = rng.gen_range(1..6);
        let got = dbscan(&pts, &DbscanParams { eps, min_samples }).unwrap();
        if partition(&got.labels) != partition(&brute_dbscan(&pts, eps, min_samples)) {
            mismatches += 1;
        }
    }
    v.check(mismatches == 0, format!("200 instances ({points} points): {mismatches} partition mismatches"));
    v.budget(start.elapsed(), secs(10.0));
    v
}

// 4 ---------------------------------------------------------------------

fn detection(_: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    let config = ExperimentConfig {
        synth: Some(SynthSpec::default()),
        anomaly: AnomalyMode::DetectSubstitute,
        injection: Some(InjectionSpec { rate: 0.01, ..Default::default() }),
        ..Default::default()
    };
    let prepared = match prepare_datasets(&config) {
        Ok(p) => p,
        Err(e) => {
            v.check(false, format!("pipeline error: {e}"));
            return v;
        }
    };
    let mut pooled = DetectionScore::from_counts(0, 0, 0);
    for p in &prepared {
        let summary = p.detection.as_ref().expect("detection ran");
        let score = summary.score.as_ref().expect("ground truth present");
        pooled = pooled.merge(score);
        let holidays_flagged = summary.flagged.iter().filter(|&&i| p.dataset.records[i].is_holiday).count();
        v.check(
            score.recall.unwrap_or(0.0) >= 0.95 && score.precision.unwrap_or(0.0) >= 0.80 && holidays_flagged == 0,
            format!(
                "{}: {} injected, {} flagged, precision {} recall {}, holiday records flagged {} (exempted off-cluster holidays {})",
                p.dataset.season,
                p.truth.as_ref().map_or(0, |t| t.len()),
                summary.flagged.len(),
                fmt(score.precision),
                fmt(score.recall),
                holidays_flagged,
                summary.holiday_exempt
            ),
        );
    }
    v.check(
        pooled.recall.unwrap_or(0.0) >= 0.95 && pooled.precision.unwrap_or(0.0) >= 0.80,
        format!("pooled: precision {} recall {} (need >= 0.80 / >= 0.95)", fmt(pooled.precision), fmt(pooled.recall)),
    );
    v.budget(start.elapsed(), secs(60.0));
    v
}

// 5 ---------------------------------------------------------------------

/// Two synthetic years (2018 train, 2019 test) and 30 epochs.
fn reduced(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        synth: Some(SynthSpec { start_year: 2018, end_year: 2019, ..Default::default() }),
        train: TrainConfig { epochs: 30, ..Default::default() },
        output_dir: dir.to_path_buf(),
        ..Default::default()
    }
}

fn anomaly_direction(ctx: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    let base = reduced(&ctx.root.join("c5"));
    let axes = MatrixAxes {
        losses: LossKind::ALL.to_vec(),
        anomaly: vec![AnomalyMode::Off, AnomalyMode::DetectSubstitute],
        seasonality: vec![SeasonalityMode::Split],
        injection_rates: vec![Some(0.01), Some(0.02)],
    };
    let outcome = match run_matrix(&base, &axes, 1) {
        Ok(o) => o,
        Err(e) => {
            v.check(false, format!("matrix error: {e}"));
            return v;
        }
    };
    let elapsed = start.elapsed();
    for (label, cause) in &outcome.failures {
        v.check(false, format!("cell {label}: {cause}"));
    }
    let rows: BTreeMap<GroupKey, &GroupRow> = outcome.table.rows.iter().map(|r| (r.key, r)).collect();
    for loss in LossKind::ALL {
        for bp in [100u32, 200] {
            let key = |anomaly| GroupKey { loss, anomaly, seasonality: SeasonalityMode::Split, injection_bp: Some(bp) };
            let (Some(off), Some(det)) = (rows.get(&key(AnomalyMode::Off)), rows.get(&key(AnomalyMode::DetectSubstitute))) else {
                v.check(false, format!("{loss} at {}%: missing group", bp as f64 / 100.0));
                continue;
            };
            let lower = |a: Option<f64>, b: Option<f64>| matches!((a, b), (Some(a), Some(b)) if b < a);
            v.check(
                lower(off.under_rmse, det.under_rmse) && lower(off.over_rmse, det.over_rmse),
                format!(
                    "{loss} {}%: under {} -> {}, over {} -> {} (with outliers -> after detect+substitute)",
                    bp as f64 / 100.0,
                    fmt(off.under_rmse),
                    fmt(det.under_rmse),
                    fmt(off.over_rmse),
                    fmt(det.over_rmse)
                ),
            );
        }
    }
    let cells = outcome.cells.len();
    ctx.matrix_table = Some(outcome.table.clone());
    ctx.mean_cell_secs = Some(elapsed.as_secs_f64() / cells.max(1) as f64);
    ctx.reference_cell = outcome
        .cells
        .iter()
        .find(|c| c.config.train.loss.kind == LossKind::Al2 && c.config.anomaly == AnomalyMode::DetectSubstitute)
        .and_then(|c| c.result.as_ref().ok().map(|r| (c.config.clone(), r.manifest.clone())));
    v.note(format!("{cells} cells, mean cell cost {:.1}s", ctx.mean_cell_secs.unwrap()));
    v.budget(elapsed, secs(3600.0));
    v
}

// 6 ---------------------------------------------------------------------

type SeasonRmse = BTreeMap<(SeasonId, LossKind), (f64, f64)>;

fn clean_reports(root: &Path, seed: u64) -> Result<SeasonRmse, String> {
    let mut base = reduced(&root.join(format!("c6_seed{seed}")));
    base.anomaly = AnomalyMode::Off;
    base.seed = seed;
    let axes = MatrixAxes { losses: LossKind::ALL.to_vec(), ..Default::default() };
    let outcome = run_matrix(&base, &axes, 1).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    for cell in &outcome.cells {
        let result = cell.result.as_ref().map_err(|e| format!("{}: {e}", cell.label))?;
        for r in &result.reports {
            let (Some(u), Some(o)) = (r.under_rmse, r.over_rmse) else {
                return Err(format!("{}: empty under or over set", cell.label));
            };
            out.insert((r.metadata.season, r.metadata.loss), (u, o));
        }
    }
    Ok(out)
}

fn ordering_holds(m: &SeasonRmse, season: SeasonId) -> Option<bool> {
    let g = |k| m.get(&(season, k)).copied();
    let ((u1, o1), (u2, _), (um, om)) = (g(LossKind::Al1)?, g(LossKind::Al2)?, g(LossKind::Mse)?);
    Some(u1 < u2 && u2 < um && o1 > om)
}

fn describe(m: &SeasonRmse, season: SeasonId) -> String {
    LossKind::ALL
        .iter()
        .map(|&k| match m.get(&(season, k)) {
            Some((u, o)) => format!("{k} {u:.4}/{o:.4}"),
            None => format!("{k} -"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn asymmetry(ctx: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    let first = match clean_reports(&ctx.root, 0) {
        Ok(m) => m,
        Err(e) => {
            v.check(false, e);
            return v;
        }
    };
    v.note("ordering: under AL1 < AL2 < MSE and over AL1 > MSE; values are under/over RMSE");
    let all_hold = SeasonId::SPLIT.iter().all(|&s| ordering_holds(&first, s) == Some(true));
    if all_hold {
        for s in SeasonId::SPLIT {
            v.check(true, format!("seed 0 {s}: {}", describe(&first, s)));
        }
    } else {
        for s in SeasonId::SPLIT {
            let ok = ordering_holds(&first, s) == Some(true);
            v.note(format!("seed 0 {s} ({}): {}", if ok { "holds" } else { "violated" }, describe(&first, s)));
        }
        v.note("seed 0 violates the ordering; evaluating the median over seeds 0-4");
        let mut runs = vec![first];
        for seed in 1..5 {
            match clean_reports(&ctx.root, seed) {
                Ok(m) => runs.push(m),
                Err(e) => {
                    v.check(false, e);
                    return v;
                }
            }
        }
        let mut med = SeasonRmse::new();
        for s in SeasonId::SPLIT {
            for k in LossKind::ALL {
                let u = median(runs.iter().map(|m| m[&(s, k)].0).collect());
                let o = median(runs.iter().map(|m| m[&(s, k)].1).collect());
                med.insert((s, k), (u, o));
            }
        }
        for s in SeasonId::SPLIT {
            v.check(ordering_holds(&med, s) == Some(true), format!("median {s}: {}", describe(&med, s)));
        }
    }
    v.note(format!("runtime {:.1}s", start.elapsed().as_secs_f64()));
    v
}

// 7 ---------------------------------------------------------------------

fn report(loss: LossKind, season: SeasonId, anomaly: AnomalyMode, under: f64, over: f64) -> EvalReport {
    EvalReport {
        under_rmse: Some(under),
        over_rmse: Some(over),
        n_under: 10,
        n_over: 10,
        n_exact: 0,
        histogram: Vec::new(),
        metadata: ReportMeta {
            loss,
            season,
            anomaly,
            seasonality: SeasonalityMode::Split,
            injection_rate: Some(0.01),
            model_seed: 0,
            shuffle_seed: 0,
            injection_seed: Some(0),
            units: Units::Scaled,
        },
    }
}

fn percentage_arithmetic(ctx: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    let pct = percent_decrease(0.154, 0.068).unwrap_or(f64::NAN);
    v.check((pct - 56.0).abs() <= 1.0, format!("0.154 -> 0.068: {pct:.2}% decrease (expected 56 +/- 1)"));

    // Per-season values whose season means drop by 86% (under) and 91% (over).
    let old_under = [0.40, 0.50, 0.60];
    let new_under = [0.05, 0.07, 0.09];
    let old_over = [0.8, 1.0, 1.2];
    let new_over = [0.08, 0.09, 0.10];
    let mut reports = Vec::new();
    for (i, s) in SeasonId::SPLIT.into_iter().enumerate() {
        reports.push(report(LossKind::Mse, s, AnomalyMode::Off, old_under[i], old_over[i]));
        reports.push(report(LossKind::Mse, s, AnomalyMode::DetectSubstitute, new_under[i], new_over[i]));
    }
    let table = compare_experiments(&reports, &[Pairing::Anomaly]);
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let want_under = (mean(&old_under) - mean(&new_under)) / mean(&old_under) * 100.0;
    let want_over = (mean(&old_over) - mean(&new_over)) / mean(&old_over) * 100.0;
    match table.deltas.as_slice() {
        [d] => {
            let (u, o) = (d.under_decrease_pct.unwrap_or(f64::NAN), d.over_decrease_pct.unwrap_or(f64::NAN));
            v.check(
                (u - want_under).abs() <= 1e-9 && (o - want_over).abs() <= 1e-9 && u.round() == 86.0 && o.round() == 91.0,
                format!("season-averaged deltas: under {u:.2}% (formula {want_under:.2}%), over {o:.2}% (formula {want_over:.2}%)"),
            );
        }
        other => v.check(false, format!("expected one delta, got {}", other.len())),
    }
    v.check(percent_decrease(0.3, 0.3) == Some(0.0), "identical pair gives 0%");
    if let Some(table) = &ctx.matrix_table {
        // Every delta of the criterion 5 comparison, recomputed from its rows.
        let rows: BTreeMap<GroupKey, &GroupRow> = table.rows.iter().map(|r| (r.key, r)).collect();
        let formula = |old: Option<f64>, new: Option<f64>| match (old, new) {
            (Some(o), Some(n)) if o != 0.0 => Some((o - n) / o * 100.0),
            _ => None,
        };
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
            (None, None) => true,
            _ => false,
        };
        let mut wrong = 0;
        for d in &table.deltas {
            let (old, new) = (rows[&d.old], rows[&d.new]);
            if !close(d.under_decrease_pct, formula(old.under_rmse, new.under_rmse))
                || !close(d.over_decrease_pct, formula(old.over_rmse, new.over_rmse))
            {
                wrong += 1;
            }
        }
        v.check(wrong == 0, format!("{} matrix deltas recomputed from their rows, {wrong} disagree", table.deltas.len()));
        for d in table.deltas.iter().filter(|d| d.pairing == Pairing::Anomaly) {
            v.note(format!(
                "{} -> {}: under {}%, over {}%",
                d.old,
                d.new.anomaly,
                d.under_decrease_pct.map_or("-".into(), |x| format!("{x:.1}")),
                d.over_decrease_pct.map_or("-".into(), |x| format!("{x:.1}"))
            ));
        }
    }
    v.budget(start.elapsed(), secs(1.0));
    v
}

// 8 ---------------------------------------------------------------------

fn determinism(ctx: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    let (config, reference) = match ctx.reference_cell.clone() {
        Some((config, manifest)) => (config, Some(manifest)),
        None => {
            let mut c = reduced(&ctx.root.join("c8_first"));
            c.injection = Some(InjectionSpec { rate: 0.02, ..Default::default() });
            c.train.loss = LossSpec::new(LossKind::Al2);
            (c, None)
        }
    };
    let run_in = |dir: &str| {
        let mut c = config.clone();
        c.output_dir = ctx.root.join(dir);
        run_pipeline(&c).map(|o| (o.manifest, std::fs::read(c.output_dir.join("manifest.json")).unwrap_or_default()))
    };
    let (first, first_bytes) = match reference {
        Some(m) => {
            v.note(format!("first run: matrix cell {}", config.label()));
            let bytes = std::fs::read(config.output_dir.join("manifest.json")).unwrap_or_default();
            (m, bytes)
        }
        None => match run_in("c8_first") {
            Ok(x) => x,
            Err(e) => {
                v.check(false, format!("first run failed: {e}"));
                return v;
            }
        },
    };
    let single = Instant::now();
    let (second, second_bytes) = match run_in("c8_second") {
        Ok(x) => x,
        Err(e) => {
            v.check(false, format!("second run failed: {e}"));
            return v;
        }
    };
    let second_secs = single.elapsed().as_secs_f64();
    let differing: Vec<&String> = first
        .files
        .iter()
        .filter(|(k, d)| second.files.get(*k) != Some(d))
        .map(|(k, _)| k)
        .collect();
    v.check(first == second, format!("{} files hashed, {} differ {:?}", first.files.len(), differing.len(), differing));
    v.check(!first_bytes.is_empty() && first_bytes == second_bytes, "manifest.json byte-identical");
    let cell = ctx.mean_cell_secs.unwrap_or(second_secs);
    v.budget(start.elapsed(), secs(2.0 * cell));
    v
}

// 9 ---------------------------------------------------------------------

fn data_properties(_: &mut Context) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cases = 200;

    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(4..400);
        let t = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
            + Duration::hours(rng.gen_range(0..12_000));
        let offsets: Vec<i64> = (0..n as i64).collect();
        let mut records = records_at(t, &offsets);
        let scale = 10f64.powi(rng.gen_range(-2..5));
        for r in &mut records {
            for f in Feature::ALL {
                r.set(f, rng.gen_range(-1.0..1.0) * scale);
            }
        }
        let series = MultiSeries::new("acceptance", records);
        let cutoff = series.records[3].timestamp.format("%Y").to_string().parse().unwrap();
        let params = fit_robust_scaler(&series, cutoff).unwrap();
        let scaled = apply_scaler(series.clone(), &params);
        for (a, b) in series.records.iter().zip(&scaled.records) {
            for f in Feature::ALL {
                let rel = (params.inverse(f, b.get(f)) - a.get(f)).abs() / a.get(f).abs().max(1e-300);
                worst = worst.max(if a.get(f) == 0.0 { 0.0 } else { rel });
            }
        }
    }
    v.check(worst <= 1e-9, format!("scaler round-trip: {cases} series, worst relative error {worst:.1e}"));

    let mut bad = 0;
    for _ in 0..cases {
        let len = rng.gen_range(1..30_000);
        let t = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
            + Duration::hours(rng.gen_range(0..30_000));
        let offsets: Vec<i64> = (0..len as i64).collect();
        let series = MultiSeries::new("acceptance", records_at(t, &offsets));
        let parts = split_seasons(&series, &loadcast::timeseries::RobustScalerParams::identity(2018));
        let mut seen = BTreeSet::new();
        let consistent = parts
            .iter()
            .all(|d| d.records.iter().all(|r| season_of(r.timestamp) == d.season && seen.insert(r.timestamp)));
        if !consistent || seen.len() != len {
            bad += 1;
        }
    }
    v.check(bad == 0, format!("season partition: {cases} series, {bad} incomplete or overlapping"));

    let mut bad = 0;
    for _ in 0..cases {
        let w = rng.gen_range(1..10);
        let segments: Vec<usize> = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(0..60)).collect();
        let mut offsets = Vec::new();
        let mut t = 0;
        for &n in &segments {
            offsets.extend(t..t + n as i64);
            t += n as i64 + rng.gen_range(2..50);
        }
        let ds = dataset_from(records_at(t0(), &offsets));
        let got = make_windows(&ds, w).unwrap().len();
        if got != segments.iter().map(|&n| n.saturating_sub(w)).sum::<usize>() {
            bad += 1;
        }
    }
    v.check(bad == 0, format!("window counts N - w: {cases} gapped series, {bad} mismatches"));
    v.budget(start.elapsed(), secs(10.0));
    v
}

type Criterion = fn(&mut Context) -> Verdict;

fn main() {
    let criteria: [(usize, &str, Criterion); 9] = [
        (1, "loss unit values", loss_values),
        (2, "gradient checks", gradients),
        (3, "DBSCAN oracle", dbscan_oracle),
        (4, "detection efficacy", detection),
        (5, "anomaly-removal direction", anomaly_direction),
        (6, "asymmetry direction", asymmetry),
        (7, "percentage arithmetic", percentage_arithmetic),
        (8, "determinism", determinism),
        (9, "scaler and window properties", data_properties),
    ];
    let selected: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();

    let kept = std::env::var_os("LOADCAST_ACCEPTANCE_DIR").map(PathBuf::from);
    let temp = tempfile::tempdir().expect("temp dir");
    let root = kept.unwrap_or_else(|| temp.path().to_path_buf());
    let mut ctx = Context { root, ..Default::default() };

    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let verdict = run(&mut ctx);
        println!("{} criterion {n}: {name}", if verdict.pass { "PASS" } else { "FAIL" });
        for d in &verdict.details {
            println!("    {d}");
        }
        if !verdict.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
