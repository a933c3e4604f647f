use std::fs;
use std::str::FromStr;

use tarstop::quantile::pet_expected_recall_all_relevant;
use tarstop::sim::{
    cost_dynamics as run_dynamics, derive_seed, gen_synthetic, ingest_record, record_to_json,
    replicate, synth::DEFAULT_DECAY, BoxStats,
};
use tarstop::{
    ceiling_sweep, min_sample_nontrivial, qbcb_index, qbcb_stop_index, table_rows, RankRecord,
    RecallLevel, Rule, RuleConfig, SyntheticModel,
};

use crate::error::{CliError, CliResult};
use crate::output::{check_distinct, fmt3, sidecar, RunManifest, Table};
use crate::{
    BiasArgs, DynamicsArgs, GenArgs, GoalArgs, ModelKind, PlanArgs, RuleKind, SimulateArgs,
    SourceArgs, TableArgs,
};

/// Seed stream for synthetic records built inside `simulate` and
/// `cost-dynamics`; replications use stream 0.
const RECORD_STREAM: u64 = 2;

fn parse_list<T: FromStr>(text: &str, flag: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse {s:?}")))
        })
        .collect()
}

fn trivial_advisory(r: u64, goal: &GoalArgs) -> CliResult<String> {
    let min = min_sample_nontrivial(goal.recall, goal.alpha)?;
    Ok(format!(
        "r = {r} is too small to certify recall {} at confidence {}; minimum r = {min}",
        goal.recall,
        1.0 - goal.alpha
    ))
}

pub fn plan(args: PlanArgs) -> CliResult {
    let g = args.goal;
    let plan = qbcb_index(args.r, g.recall, g.alpha)?;
    let e = plan.estimates;
    println!("r = {}", plan.sample_size);
    println!("recall_goal = {}", g.recall);
    println!("alpha = {}", g.alpha);
    println!("j = {}", plan.index);
    println!("trivial = {}", plan.trivial);
    if plan.trivial {
        println!("fallback j* = {}", plan.sample_size);
    }
    println!("lcb = {}", fmt3(e.lcb));
    println!("plugin = {}", fmt3(e.plugin));
    println!("ucb = {}", fmt3(e.ucb));
    if plan.trivial {
        return Err(CliError::Trivial(trivial_advisory(args.r, &g)?));
    }
    Ok(())
}

fn default_ceilings() -> Vec<f64> {
    (86..=99).rev().map(|c| c as f64 / 100.0).collect()
}

pub fn table(args: TableArgs) -> CliResult {
    let g = args.goal;
    let mut manifest = RunManifest::start("table", 0);
    manifest
        .param("recall", g.recall.to_string())
        .param("alpha", g.alpha);
    let sizes: Vec<u64> = match &args.sizes {
        Some(text) => parse_list(text, "--sizes")?,
        None => {
            let ceilings = match &args.ceilings {
                Some(text) => parse_list(text, "--ceilings")?,
                None => default_ceilings(),
            };
            manifest.param("ceilings", &ceilings);
            let sweep = ceiling_sweep(&ceilings, g.recall, g.alpha)?;
            for (c, r) in &sweep {
                eprintln!("# ceiling {c} -> r = {r}");
            }
            let mut sizes: Vec<u64> = sweep.into_iter().map(|(_, r)| r).collect();
            sizes.sort_unstable();
            sizes.dedup();
            sizes
        }
    };
    let relaxed: Vec<u64> = parse_list(&args.relaxed, "--relaxed")?;
    manifest.param("sizes", &sizes).param("relaxed", &relaxed);

    let mut table = Table::new(&["r", "j", "lcb", "plugin", "ucb"])?;
    for row in table_rows(g.recall, g.alpha, &sizes, &relaxed)? {
        let j = if row.starred {
            format!("{}*", row.j)
        } else {
            row.j.to_string()
        };
        let e = row.estimates;
        table.row([
            row.r.to_string(),
            j,
            fmt3(e.lcb),
            fmt3(e.plugin),
            fmt3(e.ucb),
        ])?;
    }
    let bytes = table.into_bytes()?;
    print!("{}", String::from_utf8_lossy(&bytes));
    if let Some(out) = &args.out {
        fs::write(out, &bytes).map_err(|e| CliError::io(out, e))?;
        manifest.output(out);
        manifest.finish(out)?;
    }
    Ok(())
}

pub fn bias_demo(args: BiasArgs) -> CliResult {
    let (big_n, n) = (args.big_n, args.n);
    let closed = pet_expected_recall_all_relevant(big_n, n)?;
    let record = gen_synthetic(&SyntheticModel::all_relevant(big_n), 0)?;
    let config = RuleConfig::pet(n, RecallLevel::from_ratio(1, 2)?)?;
    let summary = replicate(&record, &config, args.reps as usize, args.seed)?;
    let (mean, se) = summary.mean_recall();
    let diff = (mean - closed).abs();
    let agrees = if se > 0.0 {
        diff <= 3.0 * se
    } else {
        diff <= 1e-12
    };
    println!(
        "N = {big_n}, n = {n}, reps = {}, seed = {}",
        args.reps, args.seed
    );
    println!("closed_form = {closed:.6}");
    println!("mc_mean = {mean:.6}");
    println!("mc_se = {se:.6}");
    if se > 0.0 {
        println!("z = {:.3}", (mean - closed) / se);
    }
    println!("below_one_half = {}", mean < 0.5);
    println!("agreement_3se = {}", if agrees { "PASS" } else { "FAIL" });
    Ok(())
}

fn build_model(
    kind: ModelKind,
    big_n: Option<u64>,
    prevalence: Option<f64>,
    decay: Option<f64>,
) -> CliResult<SyntheticModel> {
    let big_n = big_n.ok_or_else(|| CliError::Usage("--N is required with --model".into()))?;
    let prevalence = || {
        prevalence.ok_or_else(|| CliError::Usage("--prevalence is required for this model".into()))
    };
    Ok(match kind {
        ModelKind::Uniform => SyntheticModel::uniform(big_n, prevalence()?),
        ModelKind::Geometric => {
            SyntheticModel::geometric(big_n, prevalence()?, decay.unwrap_or(DEFAULT_DECAY))
        }
        ModelKind::AllRelevant => SyntheticModel::all_relevant(big_n),
    })
}

fn load_record(src: &SourceArgs, seed: u64, manifest: &mut RunManifest) -> CliResult<RankRecord> {
    let record = match (&src.record, src.model) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            manifest.param("record", path.display().to_string());
            ingest_record(&text).map_err(|e| match e {
                tarstop::Error::Parse {
                    line,
                    column,
                    message,
                } => CliError::Data(format!("{}:{line}:{column}: {message}", path.display())),
                other => CliError::Data(format!("{}: {other}", path.display())),
            })?
        }
        (None, Some(kind)) => {
            let model = build_model(kind, src.big_n, src.prevalence, src.decay)?;
            manifest.param("model", model);
            gen_synthetic(&model, derive_seed(seed, RECORD_STREAM, 0))?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --record or --model is required".into(),
            ))
        }
    };
    let record = match src.batch_size {
        Some(b) => record.with_batch_size(b),
        None => record,
    };
    manifest
        .param("N", record.collection_size())
        .param("R", record.positive_count())
        .param("batch_size", record.batch_size());
    Ok(record)
}

fn rule_config(args: &SimulateArgs) -> CliResult<RuleConfig> {
    let g = args.goal;
    let need_r = || {
        args.r
            .ok_or_else(|| CliError::Usage("--r is required for this rule".into()))
    };
    if args.sample_total.is_some() && args.rule != RuleKind::Countdown {
        return Err(CliError::Usage(
            "--sample-total applies only to countdown".into(),
        ));
    }
    let config = match args.rule {
        RuleKind::Pet => RuleConfig::pet(need_r()?, g.recall)?,
        RuleKind::Qpet => RuleConfig::qpet(need_r()?, g.recall)?,
        RuleKind::Qbcb => {
            let r = need_r()?;
            if qbcb_stop_index(r, g.recall, g.alpha)? > r {
                return Err(CliError::Trivial(trivial_advisory(r, &g)?));
            }
            RuleConfig::qbcb(r, g.recall, g.alpha)?
        }
        RuleKind::Target => {
            let config = RuleConfig::target(g.recall)?;
            if let Some(r) = args.r {
                if r != config.sample_positives {
                    return Err(CliError::Usage(format!(
                        "the target rule uses {} positives; drop --r or pass --r {}",
                        config.sample_positives, config.sample_positives
                    )));
                }
            }
            config
        }
        RuleKind::Countdown => RuleConfig::countdown(need_r()?, g.recall, args.sample_total)?,
    };
    Ok(config)
}

fn box_fields(stats: &BoxStats) -> Vec<String> {
    vec![
        stats.mean.to_string(),
        stats.q1.to_string(),
        stats.median.to_string(),
        stats.q3.to_string(),
        stats.whisker_lo.to_string(),
        stats.whisker_hi.to_string(),
        stats.outliers.len().to_string(),
    ]
}

const BOX_COLUMNS: [&str; 7] = [
    "mean",
    "q1",
    "median",
    "q3",
    "whisker_lo",
    "whisker_hi",
    "outliers",
];

pub fn simulate(args: SimulateArgs) -> CliResult {
    check_distinct(&args.out, args.source.record.as_deref())?;
    let mut manifest = RunManifest::start("simulate", args.seed);
    let config = rule_config(&args)?;
    let record = load_record(&args.source, args.seed, &mut manifest)?;
    let g = args.goal;
    manifest
        .param("rule", config.rule)
        .param("r", config.sample_positives)
        .param("recall", g.recall.to_string())
        .param("reps", args.reps);
    let summary = replicate(&record, &config, args.reps as usize, args.seed)?;

    let mut rows = Table::new(&[
        "rep",
        "seed",
        "stop_rank",
        "stop_batch",
        "recall",
        "sample_pos",
        "sample_neg",
        "review_pos",
        "review_neg",
        "phase2_penalty",
        "total_cost",
    ])?;
    for rep in &summary.per_rep {
        let o = &rep.outcome;
        let c = &o.cost;
        rows.row([
            rep.rep.to_string(),
            rep.seed.to_string(),
            o.stop_rank
                .map_or_else(|| "NO_STOP".to_string(), |s| s.to_string()),
            o.stop_batch.to_string(),
            o.achieved_recall.to_string(),
            c.sample_pos.to_string(),
            c.sample_neg.to_string(),
            c.review_pos.to_string(),
            c.review_neg.to_string(),
            c.phase2_penalty.to_string(),
            c.total.to_string(),
        ])?;
    }
    rows.write_to(&args.out)?;
    manifest.output(&args.out);

    let goal = g.recall.value();
    let coverage = summary.coverage(goal);
    let (mean, se) = summary.mean_recall();
    let no_stop = summary.no_stop_count();
    let index = config.stop_index()?;
    // Coverage band for QBCB: nominal confidence minus three Monte Carlo SEs.
    let band = match config.rule {
        Rule::Qbcb { alpha } => {
            let floor = (1.0 - alpha) - 3.0 * (alpha * (1.0 - alpha) / args.reps as f64).sqrt();
            Some((floor, coverage >= floor))
        }
        _ => None,
    };

    let mut header = vec![
        "rule",
        "r",
        "j",
        "recall_goal",
        "reps",
        "coverage",
        "coverage_floor",
        "coverage_check",
        "no_stop",
        "recall_se",
    ];
    let recall_cols: Vec<String> = BOX_COLUMNS.iter().map(|c| format!("recall_{c}")).collect();
    let cost_cols: Vec<String> = BOX_COLUMNS.iter().map(|c| format!("cost_{c}")).collect();
    header.extend(recall_cols.iter().map(String::as_str));
    header.extend(cost_cols.iter().map(String::as_str));
    let mut fields = vec![
        config.rule.name().to_string(),
        config.sample_positives.to_string(),
        index.map_or_else(String::new, |j| j.to_string()),
        g.recall.to_string(),
        args.reps.to_string(),
        coverage.to_string(),
        band.map_or_else(String::new, |(f, _)| f.to_string()),
        band.map_or_else(String::new, |(_, ok)| {
            if ok { "PASS" } else { "FAIL" }.to_string()
        }),
        no_stop.to_string(),
        se.to_string(),
    ];
    fields.extend(box_fields(&summary.recall_stats));
    fields.extend(box_fields(&summary.cost_stats));
    let mut table = Table::new(&header)?;
    table.row(fields)?;
    let summary_path = sidecar(&args.out, "summary.csv");
    table.write_to(&summary_path)?;
    manifest.output(&summary_path);
    manifest.finish(&args.out)?;

    println!(
        "rule = {}, r = {}, reps = {}, recall goal = {}",
        config.rule.name(),
        config.sample_positives,
        args.reps,
        g.recall
    );
    if let Some(j) = index {
        println!("stop index j = {j}");
    }
    println!("mean recall = {mean:.4} (se {se:.4})");
    println!(
        "recall median = {:.4}, cost median = {}",
        summary.recall_stats.median, summary.cost_stats.median
    );
    println!("coverage P[recall >= {goal}] = {coverage:.4}");
    if let Some((floor, ok)) = band {
        println!(
            "coverage check (>= {floor:.4}) = {}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if no_stop > 0 {
        println!(
            "NO_STOP: {no_stop} of {} replications never stopped",
            args.reps
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn gen(args: GenArgs) -> CliResult {
    let model = build_model(args.model, Some(args.big_n), args.prevalence, args.decay)?;
    let mut manifest = RunManifest::start("gen", args.seed);
    manifest
        .param("model", model)
        .param("batch_size", args.batch_size);
    let record = gen_synthetic(&model, args.seed)?.with_batch_size(args.batch_size);
    let mut text = record_to_json(&record);
    text.push('\n');
    fs::write(&args.out, text).map_err(|e| CliError::io(&args.out, e))?;
    manifest
        .param("R", record.positive_count())
        .output(&args.out);
    manifest.finish(&args.out)?;
    println!(
        "N = {}, R = {}, batch_size = {}; wrote {}",
        record.collection_size(),
        record.positive_count(),
        record.batch_size(),
        args.out.display()
    );
    Ok(())
}

pub fn cost_dynamics(args: DynamicsArgs) -> CliResult {
    check_distinct(&args.out, args.source.record.as_deref())?;
    let g = args.goal;
    let mut manifest = RunManifest::start("cost-dynamics", args.seed);
    let record = load_record(&args.source, args.seed, &mut manifest)?;
    if record.batch_size() == 0 {
        return Err(CliError::Data(
            "cost dynamics require a batched record (batch_size = 0); pass --batch-size".into(),
        ));
    }
    let requested: Vec<u64> = parse_list(&args.sizes, "--sizes")?;
    let mut sizes = Vec::with_capacity(requested.len());
    for r in requested {
        if r == 0 || qbcb_stop_index(r, g.recall, g.alpha)? > r {
            eprintln!("skipping: {}", trivial_advisory(r, &g)?);
        } else {
            sizes.push(r);
        }
    }
    manifest
        .param("recall", g.recall.to_string())
        .param("alpha", g.alpha)
        .param("sizes", &sizes)
        .param("reps", args.reps);
    let dynamics = run_dynamics(
        &record,
        g.recall,
        g.alpha,
        &sizes,
        args.reps as usize,
        args.seed,
    )?;

    let mut curve = Table::new(&[
        "batch",
        "rank",
        "recall",
        "review_pos",
        "review_neg",
        "phase2_penalty",
        "total_cost",
    ])?;
    for p in &dynamics.curve {
        curve.row([
            p.batch.to_string(),
            p.rank.to_string(),
            p.recall.to_string(),
            p.review_pos.to_string(),
            p.review_neg.to_string(),
            p.phase2_penalty.to_string(),
            p.total.to_string(),
        ])?;
    }
    curve.write_to(&args.out)?;
    manifest.output(&args.out);

    let mut markers = Table::new(&[
        "r",
        "j",
        "rep",
        "seed",
        "stop_batch",
        "recall",
        "sample_pos",
        "sample_neg",
        "review_pos",
        "review_neg",
        "phase2_penalty",
        "total_cost",
    ])?;
    for w in &dynamics.worst_cases {
        let c = &w.cost;
        markers.row([
            w.sample_size.to_string(),
            w.stop_index.to_string(),
            w.rep.to_string(),
            w.seed.to_string(),
            w.stop_batch.to_string(),
            w.recall.to_string(),
            c.sample_pos.to_string(),
            c.sample_neg.to_string(),
            c.review_pos.to_string(),
            c.review_neg.to_string(),
            c.phase2_penalty.to_string(),
            c.total.to_string(),
        ])?;
    }
    let markers_path = sidecar(&args.out, "markers.csv");
    markers.write_to(&markers_path)?;
    manifest.output(&markers_path);
    manifest.finish(&args.out)?;

    if let Some(best) = dynamics.curve_minimum() {
        println!(
            "curve minimum: batch {} (rank {}), cost {}",
            best.batch, best.rank, best.total
        );
    }
    for w in &dynamics.worst_cases {
        println!(
            "r = {}: worst cost {} at batch {} (rep {})",
            w.sample_size, w.cost.total, w.stop_batch, w.rep
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
