use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use anyhow::{Context as _, Result};
use chrono::NaiveDate;
use runlmc::analysis;
use runlmc::baselines::{self, EmConfig, SoftImputeConfig};
use runlmc::datamodel::{self, io, Gender, PerformanceTable};
use runlmc::eval::{self, ValidationMode, ValidationSpec};
use runlmc::ingest::{self, CleaningConfig, RawAttempt, SubsampleSpec};
use runlmc::lmc::{self, LmcConfig};
use runlmc::lowrank::{self, CoefficientScaling, RecordHistory};
use runlmc::synth::{self, MissingnessScheme, SynthSpec};
use runlmc::{Method, Predictor};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::Context;
use crate::UsageError;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: &Cli, ctx: &Context) -> Result<()> {
    let seed = cli.global.seed;
    match &cli.command {
        Command::Ingest(a) => ingest(a, seed, ctx),
        Command::Collate(a) => collate(a, seed, ctx),
        Command::Clean(a) => clean(a, ctx),
        Command::Subsample(a) => subsample_cmd(a, ctx),
        Command::Predict(a) => predict(a, seed, ctx),
        Command::Impute(a) => impute(a, seed, ctx),
        Command::Validate(a) => validate(a, seed, ctx),
        Command::Compare(a) => compare(a, seed, ctx),
        Command::Components(a) => components(a, seed, ctx),
        Command::Summary(a) => summary(a, seed, ctx),
        Command::Synth(a) => synth_cmd(a, seed, ctx),
        Command::FairRace(a) => fair_race(a, seed, ctx),
        Command::Pivot(a) => pivot(a, seed, ctx),
        Command::Optimal(a) => optimal(a, seed, ctx),
    }
}

fn load(t: &TableInput) -> Result<PerformanceTable> {
    let table = io::read_table(&t.input).with_context(|| format!("reading table {}", t.input.display()))?;
    Ok(datamodel::reparameterize(&table, t.param.into())?)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn read_raw(raw: &RawInput) -> Result<(Vec<datamodel::AthleteMeta>, Vec<RawAttempt>)> {
    let athletes = ingest::parse_athletes(open(&raw.athletes)?).context("parsing athletes")?;
    let events = ingest::parse_events(open(&raw.events)?).context("parsing events")?;
    Ok((athletes, events))
}

fn method(name: &str, seed: u64, bagged: bool, circuits: Option<usize>, knn_k: Option<usize>) -> Result<Method> {
    let mut m: Method = name.parse().map_err(|e: runlmc::Error| usage(e.to_string()))?;
    m = m.with_seed(seed).bagged(bagged);
    if let Some(n) = circuits {
        m = m.with_circuits(n);
    }
    if let Some(k) = knn_k {
        m = m.with_knn_k(k);
    }
    Ok(m)
}

fn chosen(a: &MethodArgs, seed: u64) -> Result<Method> {
    method(&a.method, seed, a.bagged, a.circuits, a.knn_k)
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| usage(format!("bad date {s:?}: {e}")))
}

fn cleaning_config(a: &CleaningArgs) -> Result<CleaningConfig> {
    let mut cfg = CleaningConfig {
        slow_threshold_factor: a.slow_factor,
        min_age_years: a.min_age,
        sentinel_birth_date: parse_date(&a.sentinel_birth_date)?,
        sentinel_attempt_dates: a.sentinel_dates.iter().map(|s| parse_date(s)).collect::<Result<_>>()?,
        ..Default::default()
    };
    if let Some(p) = &a.world_records {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        cfg.world_records = RecordHistory::from_json(&text)?;
    }
    Ok(cfg)
}

fn subsample_spec(a: &SubsampleFlags) -> Result<SubsampleSpec> {
    let age_range = match (a.age_min, a.age_max) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(0), hi.unwrap_or(u32::MAX))),
    };
    let spec = SubsampleSpec {
        gender: a.gender.map(|g| match g {
            GenderArg::M => Gender::M,
            GenderArg::F => Gender::F,
        }),
        age_range,
        min_events: a.min_events,
        percentile_range: (a.percentile_low, a.percentile_high),
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

fn collate_table(
    attempts: &[RawAttempt],
    athletes: &[datamodel::AthleteMeta],
    mode: CollateModeArg,
    remove_outliers: bool,
    seed: u64,
) -> Result<(PerformanceTable, Vec<usize>)> {
    let catalog = datamodel::EventCatalog::standard();
    let table = match mode {
        CollateModeArg::Best => ingest::collate_best(attempts, athletes, &catalog)?,
        CollateModeArg::Random => ingest::collate_random(attempts, athletes, &catalog, seed)?,
    };
    Ok(if remove_outliers { ingest::remove_outliers(&table) } else { (table, Vec::new()) })
}

fn ingest(a: &IngestArgs, seed: u64, ctx: &Context) -> Result<()> {
    let (athletes, attempts) = read_raw(&a.raw)?;
    let cfg = cleaning_config(&a.cleaning)?;
    let spec = subsample_spec(&a.subsample)?;
    let cleaned = ingest::clean(&attempts, &athletes, &cfg);
    let (table, outliers) = collate_table(&cleaned.attempts, &cleaned.athletes, a.collate, a.remove_outliers, seed)?;
    let rows_collated = table.n_athletes();
    let table = ingest::subsample(&table, &spec)?;
    ctx.table(
        &table,
        json!({ "cleaning": cleaned.report, "rows_collated": rows_collated, "outliers_removed": outliers.len(), "rows_out": table.n_athletes() }),
    )
}

fn collate(a: &CollateArgs, seed: u64, ctx: &Context) -> Result<()> {
    let (athletes, attempts) = read_raw(&a.raw)?;
    let (table, outliers) = collate_table(&attempts, &athletes, a.mode, a.remove_outliers, seed)?;
    ctx.table(&table, json!({ "outliers_removed": outliers }))
}

fn clean(a: &CleanArgs, ctx: &Context) -> Result<()> {
    let (athletes, attempts) = read_raw(&a.raw)?;
    let cfg = cleaning_config(&a.cleaning)?;
    let out = ingest::clean(&attempts, &athletes, &cfg);
    let mut events = String::from("athlete_id,event,date,performance\n");
    for e in &out.attempts {
        let date = e.date.map(|d| d.to_string()).unwrap_or_default();
        writeln!(events, "{},{},{},{:?}", e.athlete_id, e.event, date, e.performance)?;
    }
    ctx.tsv(events.as_bytes())?;
    let athletes_path = a.athletes_out.clone().or_else(|| ctx.out.as_ref().map(|p| p.with_extension("athletes.csv")));
    if let Some(p) = athletes_path {
        let mut text = String::from("athlete_id,gender,birth_date\n");
        for m in &out.athletes {
            let gender = match m.gender {
                Gender::M => "M",
                Gender::F => "F",
                Gender::Unknown => "",
            };
            let birth = m.birth_date.map(|d| d.to_string()).unwrap_or_default();
            writeln!(text, "{},{},{}", m.athlete_id, gender, birth)?;
        }
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    ctx.json(&out.report)
}

fn subsample_cmd(a: &SubsampleArgs, ctx: &Context) -> Result<()> {
    let spec = subsample_spec(&a.subsample)?;
    let table = io::read_table(&a.input).with_context(|| format!("reading table {}", a.input.display()))?;
    let out = ingest::subsample(&table, &spec)?;
    ctx.table(&out, json!({ "rows_in": table.n_athletes(), "rows_out": out.n_athletes() }))
}

fn check_row(table: &PerformanceTable, row: usize) -> Result<()> {
    if row >= table.n_athletes() {
        return Err(usage(format!("row {row} outside the table's {} rows", table.n_athletes())));
    }
    Ok(())
}

fn predict(a: &PredictArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    check_row(&table, a.row)?;
    let col = table.catalog().index_of(&a.event).ok_or_else(|| usage(format!("unknown event {:?}", a.event)))?;
    let m = chosen(&a.method, seed)?.prepare(&table.masked(a.row, col))?;
    let value = m.predict(&table.masked(a.row, col), a.row, col)?;
    let seconds = table.value_to_time(col, value);
    let label = table.catalog().label(col);
    let id = table.athlete(a.row).athlete_id;
    let tsv = format!("athlete_id\tevent\tmethod\tvalue\tseconds\n{id}\t{label}\t{m}\t{value:?}\t{seconds:?}\n");
    ctx.tsv(tsv.as_bytes())?;
    ctx.json(&json!({ "athlete_id": id, "event": label, "method": m.to_string(), "value": value, "seconds": seconds }))
}

fn impute(a: &ImputeArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    let m = chosen(&a.method, seed)?;
    let (filled, report): (PerformanceTable, Value) = match &m {
        Method::Lmc(cfg) => {
            let imp = lmc::impute_all(&table, cfg)?;
            (imp.table, serde_json::to_value(imp.report)?)
        }
        Method::Em => {
            let r = baselines::em_impute(&table, &EmConfig::default())?;
            let report = json!({ "iterations": r.iterations, "converged": r.converged, "ridged": r.ridged, "loglik": r.loglik.last() });
            (r.table, report)
        }
        Method::Nuclear { seed, .. } => {
            let cfg = SoftImputeConfig { seed: *seed, ..Default::default() };
            let lambda = baselines::select_lambda_cv(&table, &cfg)?;
            let r = baselines::nuclear_norm_impute(&table, lambda, &cfg)?;
            (r.table, json!({ "lambda": lambda, "iterations": r.iterations, "converged": r.converged, "rank": r.rank }))
        }
        other => {
            let p = other.prepare(&table)?;
            let mut out = table.clone();
            let mut failed = Vec::new();
            for (i, j) in table.missing_entries() {
                match p.predict(&table, i, j) {
                    Ok(v) => out.set(i, j, Some(v))?,
                    Err(_) => failed.push((i, j)),
                }
            }
            (out, json!({ "unpredictable": failed }))
        }
    };
    ctx.table(&filled, json!({ "method": m.to_string(), "imputed": table.missing_entries().len(), "report": report }))
}

fn validation_spec(v: &ValidationFlags, seed: u64) -> ValidationSpec {
    ValidationSpec {
        n_holdouts: v.holdouts,
        mode: match v.mode {
            Mode::AllRemaining => ValidationMode::AllRemaining,
            Mode::CausalPast => ValidationMode::CausalPast,
        },
        metric: v.metric.into(),
        seed,
        n_boot: v.boot,
        min_other_events: v.min_other_events,
        fastest_fraction: v.fastest,
    }
}

fn validate(a: &ValidateArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    let spec = validation_spec(&a.validation, seed);
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let c = eval::compare_methods(&table, &[chosen(&a.method, seed)?], &spec, 0)?;
    let report = &c.reports[0];
    let mut buf = Vec::new();
    eval::write_report_tsv(report, &mut buf)?;
    ctx.tsv(&buf)?;
    ctx.json(report)
}

fn compare(a: &CompareArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    let spec = validation_spec(&a.validation, seed);
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let methods: Vec<Method> =
        a.methods.iter().map(|n| method(n, seed, a.bagged, a.circuits, a.knn_k)).collect::<Result<_>>()?;
    let reference = match &a.reference {
        None => 0,
        Some(r) => a
            .methods
            .iter()
            .position(|n| n == r)
            .ok_or_else(|| usage(format!("reference {r} is not among --methods")))?,
    };
    let c = eval::compare_methods(&table, &methods, &spec, reference)?;
    let mut buf = Vec::new();
    eval::write_comparison_tsv(&c, &mut buf)?;
    ctx.tsv(&buf)?;
    ctx.json(&c)
}

/// Completes the table with rank-3 LMC when entries are missing.
fn completed(table: &PerformanceTable, seed: u64) -> Result<(PerformanceTable, usize)> {
    if table.is_complete() {
        return Ok((table.clone(), 0));
    }
    let n = table.missing_entries().len();
    Ok((lmc::impute_all(table, &LmcConfig { rank: 3, seed, ..Default::default() })?.table, n))
}

fn components(a: &ComponentsArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    let (full, imputed) = completed(&table, seed)?;
    let scaling = match a.scaling {
        Scaling::Singular => CoefficientScaling::Singular,
        Scaling::PureU => CoefficientScaling::PureU,
    };
    let model = lowrank::extract_components(&full, a.rank, scaling)?;
    let mut tsv = String::from("component\tsingular_value");
    for e in model.catalog.events() {
        write!(tsv, "\t{}", e.label)?;
    }
    tsv.push('\n');
    for (i, f) in model.components.iter().enumerate() {
        write!(tsv, "f{}\t{:?}", i + 1, model.singular_values[i])?;
        for v in f {
            write!(tsv, "\t{v:?}")?;
        }
        tsv.push('\n');
    }
    ctx.tsv(tsv.as_bytes())?;
    let diagnostic = lowrank::individual_exponent_diagnostic(&model.components[0], &model.catalog)?;
    let records = RecordHistory::bundled().current_for(&model.catalog).ok();
    let record_fits = match &records {
        Some(wr) => (1..=model.rank()).map(|r| lowrank::fit_world_records(wr, &model, r)).collect::<runlmc::Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    ctx.json(&json!({ "imputed_entries": imputed, "model": model, "exponent_diagnostic": diagnostic, "world_record_fits": record_fits }))
}

fn summary(a: &SummaryArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    let rows = datamodel::summaries(&table);
    let lambdas = if a.three_number {
        let (full, _) = completed(&table, seed)?;
        let model = lowrank::extract_components(&full, 3, CoefficientScaling::Singular)?;
        let scale = lowrank::exponent_scale(&model)?;
        let s = (0..table.n_athletes()).map(|i| lowrank::three_number_summary(&model, i)).collect::<runlmc::Result<Vec<_>>>()?;
        Some((s, scale))
    } else {
        None
    };
    let mut tsv = String::from("athlete_id\tn_events\tpreferred_distance\ttraining_standard");
    for e in table.catalog().events() {
        write!(tsv, "\tpct_{}", e.label)?;
    }
    if lambdas.is_some() {
        tsv.push_str("\tlambda1\tlambda2\tlambda3\texponent");
    }
    tsv.push('\n');
    let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:?}"));
    for (i, s) in rows.iter().enumerate() {
        write!(tsv, "{}", table.athlete(i).athlete_id)?;
        match s {
            Some(s) => {
                write!(tsv, "\t{}\t{:?}\t{:?}", s.n_events, s.preferred_distance, s.training_standard)?;
                for p in &s.percentiles {
                    write!(tsv, "\t{}", na(*p))?;
                }
            }
            None => {
                write!(tsv, "\t0\tNA\tNA")?;
                for _ in 0..table.n_events() {
                    tsv.push_str("\tNA");
                }
            }
        }
        if let Some((l, scale)) = &lambdas {
            let t = &l[i];
            write!(tsv, "\t{:?}\t{:?}\t{:?}\t{:?}", t.lambda1, t.lambda2, t.lambda3, t.lambda1 * scale)?;
        }
        tsv.push('\n');
    }
    ctx.tsv(tsv.as_bytes())?;
    ctx.json(&json!({ "summaries": rows, "three_number": lambdas.as_ref().map(|(l, s)| json!({ "exponent_scale": s, "rows": l })) }))
}

fn synth_cmd(a: &SynthArgs, seed: u64, ctx: &Context) -> Result<()> {
    let spec = SynthSpec { n_athletes: a.athletes, noise_std: a.noise, seed, ..Default::default() };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let pop = synth::generate(&spec)?;
    let scheme = match a.scheme {
        Scheme::None => None,
        Scheme::Uniform => Some(MissingnessScheme::UniformK { missing: a.k }),
        Scheme::Consecutive => Some(MissingnessScheme::ConsecutiveK { present: a.k }),
        Scheme::Reference => Some(MissingnessScheme::REFERENCE),
    };
    let table = match scheme {
        Some(s) => synth::apply_missingness(&pop.table, s, seed).map_err(|e| usage(e.to_string()))?,
        None => pop.table.clone(),
    };
    if let Some(p) = &a.truth {
        ctx.table_at(&pop.table, p)?;
    }
    ctx.table(&table, json!({ "scheme": scheme, "coefficients": pop.coefficients, "components": pop.components }))
}

fn fair_race(a: &FairRaceArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    check_row(&table, a.a)?;
    check_row(&table, a.b)?;
    let m = chosen(&a.method, seed)?.prepare(&table)?;
    let r = analysis::fair_race(&table, a.a, a.b, &m, a.boot, seed)?;
    let (ia, ib) = (table.athlete(a.a).athlete_id, table.athlete(a.b).athlete_id);
    let tsv = format!(
        "athlete_a\tathlete_b\tdistance\tci_low\tci_high\tshorter_event\tlonger_event\tn_crossings\tn_boot_ok\n\
         {ia}\t{ib}\t{:?}\t{:?}\t{:?}\t{}\t{}\t{}\t{}\n",
        r.distance, r.ci_low, r.ci_high, r.shorter_event, r.longer_event, r.n_crossings, r.n_boot_ok
    );
    ctx.tsv(tsv.as_bytes())?;
    ctx.json(&r)
}

fn pivot(a: &PivotArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    let eps = if a.epsilons.is_empty() { analysis::default_epsilons() } else { a.epsilons.clone() };
    let r = analysis::pivot_experiment(&table, a.benchmark, &eps, seed)?;
    let mut tsv = String::from("shorter\tmiddle\tlonger\tepsilon\trelative_change\n");
    for t in &r.triples {
        for (e, d) in t.epsilons.iter().zip(&t.relative_change) {
            writeln!(tsv, "{}\t{}\t{}\t{e:?}\t{d:?}", t.shorter, t.middle, t.longer)?;
        }
    }
    ctx.tsv(tsv.as_bytes())?;
    ctx.json(&r)
}

fn optimal(a: &OptimalArgs, seed: u64, ctx: &Context) -> Result<()> {
    let table = load(&a.table)?;
    check_row(&table, a.athlete)?;
    let m = chosen(&a.method, seed)?.prepare(&table)?;
    let r = analysis::optimal_distance(&table, a.athlete, &m)?;
    let mut tsv = String::from("event\tpredicted\tseconds\tpercentile\toptimal\n");
    for (j, (v, p)) in r.predicted.iter().zip(&r.percentiles).enumerate() {
        let secs = table.value_to_time(j, *v);
        writeln!(tsv, "{}\t{v:?}\t{secs:?}\t{p:?}\t{}", table.catalog().label(j), j == r.event)?;
    }
    ctx.tsv(tsv.as_bytes())?;
    ctx.json(&r)
}
