//! Campaign execution: generate, run, judge, score, compare, audit.
//!
//! The config seed fans out to one sub-seed per component with
//! `seed::derive(seed, label, 0)` for the labels `generator`, `experiments`
//! and `audit`. Every tuple sees the same experiment seed, so per-case
//! randomness is shared between compared tuples.

use std::collections::BTreeSet;
use std::path::Path;

use standin::experiment::Evaluation;
use standin::generators::{
    generate_adaptive, generate_bounded_sequences, generate_exhaustive, generate_random,
    generate_stratified, GeneratorSpec, Strategy,
};
use standin::metrics::{
    audit_accuracy_trend, audit_consistency, audit_monotonicity, audit_reproducibility,
    audit_union_compatibility, class_coverage_eff, success_score, AuditReport, EfficiencyFunction,
    PoolSampler, Requirement, SamplerMode, ScoreRecord, SimilarityDegree,
};
use standin::partition::{detect_adversarial, falsify_from, partition};
use standin::replacement::{equivalence_from, exhaustive_on, replacement_from};
use standin::{evaluate, seed, TestSet, ValueSource};
use standin_traffic::DrivingScenario;

use crate::config::{AuditConfig, CampaignConfig, ContextKind, SamplerKind};
use crate::error::{CampaignError, Result};
use crate::registry::{wire, Setup, Wiring};
use crate::report::{
    CampaignReport, CaseRecord, CaseResult, EfficiencyRecord, PlotRow, Status, TestSetSummary, TupleReport,
};

/// Which sections a campaign computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Everything configured.
    Run,
    /// Audits only; replacement and anomaly sections stay null.
    Audit,
    /// The two-tuple comparison; audits stay null.
    Replace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seeds {
    pub generator: u64,
    pub experiments: u64,
    pub audit: u64,
}

impl Seeds {
    pub fn from_root(root: u64) -> Self {
        Seeds {
            generator: seed::derive(root, "generator", 0),
            experiments: seed::derive(root, "experiments", 0),
            audit: seed::derive(root, "audit", 0),
        }
    }
}

fn bad(msg: impl Into<String>) -> CampaignError {
    CampaignError::config(msg)
}

/// Checks that the config is complete for `mode` before anything runs.
pub fn check(config: &CampaignConfig, mode: Mode) -> Result<()> {
    let g = &config.generator;
    GeneratorSpec {
        strategy: g.strategy,
        count: g.count,
        max_length: g.max_length,
        classifier_ref: config.classifier.as_ref().map(|c| format!("{:?}", c.kind)),
        seed: config.seed,
    }
    .validate()
    .map_err(|e| bad(format!("generator: {e}")))?;
    if g.strategy == Strategy::Adaptive && config.tuples.is_empty() {
        return Err(bad("adaptive generation needs at least one tuple"));
    }
    if g.strategy == Strategy::BoundedSequence && config.context.kind != ContextKind::Dialogue {
        return Err(bad("bounded-sequence generation needs a dialogue context"));
    }
    if !(config.report.confidence > 0.0 && config.report.confidence < 1.0) {
        return Err(bad(format!("confidence {} is outside (0, 1)", config.report.confidence)));
    }
    match mode {
        Mode::Audit if config.audit.is_none() => return Err(bad("`audit` needs an [audit] section")),
        Mode::Replace if config.tuples.len() < 2 => return Err(bad("`replace` needs two tuples")),
        _ => {}
    }
    if let Some(a) = config.audit.as_ref().filter(|_| mode != Mode::Replace) {
        check_audit(a, config)?;
    }
    Ok(())
}

fn check_audit(a: &AuditConfig, config: &CampaignConfig) -> Result<()> {
    let classified = config.classifier.is_some();
    if a.trials == 0 {
        return Err(bad("audit trials must be at least 1"));
    }
    if !(a.delta.is_finite() && a.delta >= 0.0) {
        return Err(bad(format!("audit delta {} must be non-negative", a.delta)));
    }
    if matches!(a.sampler, SamplerKind::Stratified | SamplerKind::ClassAligned) && !classified {
        return Err(bad("class-based samplers need a [classifier]"));
    }
    if a.sampler == SamplerKind::Stratified && a.per_class.is_none() {
        return Err(bad("the stratified sampler needs `per_class`"));
    }
    for r in &a.requirements {
        match r {
            Requirement::Consistency if !classified => {
                return Err(bad("the consistency audit needs a [classifier]"))
            }
            Requirement::Reproducibility | Requirement::AccuracyTrend if config.tuples.is_empty() => {
                return Err(bad(format!("the {r} audit needs a tuple")))
            }
            _ => {}
        }
    }
    Ok(())
}

fn generate(config: &CampaignConfig, wiring: &mut Wiring, seed: u64) -> Result<TestSet> {
    let g = &config.generator;
    let count = g.count.unwrap_or(0);
    let classifier = || wiring.classifier.as_ref().ok_or_else(|| bad("generation needs a [classifier]"));
    if let Setup::Traffic { context, space } = &mut wiring.setup {
        if g.strategy == Strategy::Exhaustive {
            let scenarios = space.scenarios();
            *context = context.clone().with_scenarios(&scenarios);
            return Ok(TestSet::from_payloads(
                "exhaustive",
                "e",
                scenarios.iter().map(DrivingScenario::to_value),
            ));
        }
    }
    let source: &dyn ValueSource = match &wiring.setup {
        Setup::Traffic { space, .. } => space,
        other => other.context().input_domain(),
    };
    Ok(match g.strategy {
        Strategy::Exhaustive => generate_exhaustive(wiring.setup.context().input_domain())?,
        Strategy::Random => generate_random(source, count, seed)?,
        Strategy::Stratified => generate_stratified(source, classifier()?, count, seed)?,
        Strategy::Adaptive => generate_adaptive(
            wiring.setup.context(),
            &wiring.tuples[0].1,
            wiring.property.as_ref(),
            classifier()?,
            source,
            count,
            seed,
        )?,
        Strategy::BoundedSequence => {
            let Setup::Dialogue { context, alphabet } = &wiring.setup else {
                return Err(bad("bounded-sequence generation needs a dialogue context"));
            };
            let max = g.max_length.unwrap_or(context.max_length());
            if max > context.max_length() {
                return Err(bad(format!(
                    "max_length {max} exceeds the context bound {}",
                    context.max_length()
                )));
            }
            generate_bounded_sequences(alphabet.clone(), max, g.count, seed)?
        }
    })
}

fn efficiency(wiring: &Wiring, pool: usize) -> Result<EfficiencyFunction> {
    match &wiring.classifier {
        Some(c) => Ok(class_coverage_eff(c)?),
        None => Ok(EfficiencyFunction::new("set-fraction", move |cases| {
            let ids: BTreeSet<&str> = cases.iter().map(|c| c.id.as_str()).collect();
            Ok(if pool == 0 { 0.0 } else { (ids.len() as f64 / pool as f64).min(1.0) })
        })),
    }
}

/// Prefix sizes for the plot: the configured sweep or powers of two, then
/// the full size. Clamped, sorted and deduplicated.
pub fn sweep_sizes(configured: Option<&[usize]>, n: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = match configured {
        Some(s) => s.iter().map(|&k| k.min(n)).collect(),
        None => std::iter::successors(Some(1usize), |k| k.checked_mul(2))
            .take_while(|&k| k < n)
            .chain(std::iter::once(n))
            .collect(),
    };
    sizes.retain(|&k| k > 0);
    sizes.sort_unstable();
    sizes.dedup();
    sizes
}

fn score_of(evals: &[Evaluation], level: f64) -> Result<ScoreRecord> {
    Ok(success_score(evals.iter().map(|e| &e.verdict), level)?)
}

fn sampler(a: &AuditConfig, wiring: &Wiring, set: &TestSet) -> Result<PoolSampler> {
    let mode = match a.sampler {
        SamplerKind::Uniform => SamplerMode::Uniform,
        SamplerKind::Mirrored => SamplerMode::Mirrored,
        SamplerKind::ClassAligned => SamplerMode::ClassAligned,
        SamplerKind::Stratified => SamplerMode::Stratified {
            per_class: a.per_class.unwrap_or(1),
        },
    };
    let pool = set.cases().to_vec();
    let s = match &wiring.classifier {
        Some(c) => PoolSampler::with_classifier(pool, c, mode)?,
        None => PoolSampler::new(pool, mode)?,
    };
    Ok(match a.max_size {
        Some(m) => s.max_size(m),
        None => s,
    })
}

/// Points of the first tuple's sweep with strictly increasing efficiency.
fn trend_series(plot: &[PlotRow], tuple: &str, evals: &[Evaluation], level: f64) -> Result<Vec<(f64, ScoreRecord)>> {
    let mut series: Vec<(f64, ScoreRecord)> = Vec::new();
    for row in plot.iter().filter(|r| r.tuple == tuple) {
        if series.last().is_none_or(|(e, _)| row.eff > *e) {
            series.push((row.eff, score_of(&evals[..row.size], level)?));
        }
    }
    Ok(series)
}

#[allow(clippy::too_many_arguments)]
fn run_audits(
    a: &AuditConfig,
    wiring: &Wiring,
    set: &TestSet,
    eff: &EfficiencyFunction,
    plot: &[PlotRow],
    first: Option<&[Evaluation]>,
    level: f64,
    seed: u64,
) -> Result<Vec<AuditReport>> {
    let sampler = sampler(a, wiring, set)?;
    let ctx = wiring.setup.context();
    let mut out = Vec::with_capacity(a.requirements.len());
    for r in &a.requirements {
        let s = seed::derive(seed, r.label(), 0);
        out.push(match r {
            Requirement::Monotonicity => audit_monotonicity(eff, &sampler, a.trials, s)?,
            Requirement::Consistency => {
                let c = wiring.classifier.as_ref().ok_or_else(|| bad("consistency needs a classifier"))?;
                audit_consistency(eff, c, &sampler, a.trials, s)?
            }
            Requirement::Reproducibility => audit_reproducibility(
                eff,
                ctx,
                &wiring.tuples[0].1,
                wiring.property.as_ref(),
                &sampler,
                SimilarityDegree::new(a.delta)?,
                a.trials,
                s,
            )?,
            Requirement::UnionCompatibility => audit_union_compatibility(eff, &sampler, a.trials, s)?,
            Requirement::AccuracyTrend => {
                let evals = first.ok_or_else(|| bad("accuracy-trend needs a tuple"))?;
                audit_accuracy_trend(&trend_series(plot, &wiring.tuples[0].0, evals, level)?)?
            }
        });
    }
    Ok(out)
}

fn execute(
    report: &mut CampaignReport,
    config: &CampaignConfig,
    mut wiring: Wiring,
    mode: Mode,
    preset: Option<TestSet>,
) -> Result<()> {
    let seeds = Seeds::from_root(config.seed);
    let level = config.report.confidence;
    let set = match preset {
        Some(s) => s,
        None => generate(config, &mut wiring, seeds.generator)?,
    };
    let parts = wiring.classifier.as_ref().map(|c| partition(&set, c)).transpose()?;
    report.test_set = Some(TestSetSummary {
        name: set.name.clone(),
        size: set.len(),
        classes: parts.as_ref().map(|p| p.sizes()),
        uncovered: parts.as_ref().map(|p| p.uncovered.clone()),
    });
    report.tuples = wiring
        .tuples
        .iter()
        .map(|(name, systems)| TupleReport {
            name: name.clone(),
            systems: systems.iter().map(|s| s.name().to_string()).collect(),
            score: None,
            anomalies: None,
        })
        .collect();

    let ctx = wiring.setup.context();
    let mut evals: Vec<Vec<Evaluation>> = Vec::with_capacity(wiring.tuples.len());
    for (_, systems) in &wiring.tuples {
        evals.push(evaluate(ctx, systems, wiring.property.as_ref(), set.cases(), seeds.experiments)?);
    }
    let mut records: Vec<CaseRecord> = set
        .cases()
        .iter()
        .enumerate()
        .map(|(i, case)| CaseRecord {
            id: case.id.clone(),
            payload: case.payload.clone(),
            class: parts.as_ref().and_then(|p| p.class_of(&case.id)).map(str::to_string),
            results: wiring
                .tuples
                .iter()
                .zip(&evals)
                .map(|((name, _), ev)| CaseResult {
                    tuple: name.clone(),
                    verdict: ev[i].verdict.clone(),
                    ticks: ev[i].run.last_tick(),
                    terminated: ev[i].run.terminated,
                })
                .collect(),
        })
        .collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    report.cases = records;
    report.timing.experiments = evals.iter().map(Vec::len).sum();
    report.timing.ticks = evals.iter().flatten().map(|e| e.run.last_tick()).sum();

    let eff = efficiency(&wiring, set.len())?;
    report.efficiency = Some(EfficiencyRecord {
        function: eff.name().to_string(),
        value: eff.eval(set.cases())?,
    });
    for (t, ev) in report.tuples.iter_mut().zip(&evals) {
        t.score = Some(score_of(ev, level)?);
    }
    let sizes = sweep_sizes(config.report.sweep.as_deref(), set.len());
    for ((name, _), ev) in wiring.tuples.iter().zip(&evals) {
        for &n in &sizes {
            let s = score_of(&ev[..n], level)?;
            report.plot.push(PlotRow {
                tuple: name.clone(),
                size: n,
                eff: eff.eval(&set.cases()[..n])?,
                score: s.point_estimate,
                ci_low: s.ci_low,
                ci_high: s.ci_high,
            });
        }
    }

    if mode != Mode::Audit {
        if let Some(c) = &wiring.classifier {
            for (t, ev) in report.tuples.iter_mut().zip(&evals) {
                t.anomalies = Some(detect_adversarial(&falsify_from(ev, c)?, &eff)?);
            }
        }
        if let [first, second, ..] = evals.as_slice() {
            let exhaustive = exhaustive_on(ctx, &set);
            report.replacement = Some(replacement_from(first, second, exhaustive));
            report.reverse_replacement = Some(replacement_from(second, first, exhaustive));
            report.equivalence = Some(equivalence_from(first, second, exhaustive));
        }
    }
    if mode != Mode::Replace {
        if let Some(a) = &config.audit {
            report.audits = Some(run_audits(
                a,
                &wiring,
                &set,
                &eff,
                &report.plot,
                evals.first().map(Vec::as_slice),
                level,
                seeds.audit,
            )?);
        }
    }
    Ok(())
}

/// Resolves and checks `config`. Any failure here is a configuration error.
pub fn prepare(config: &CampaignConfig, base: &Path, mode: Mode) -> Result<Wiring> {
    check(config, mode)?;
    wire(config, base).map_err(|e| match e {
        CampaignError::Config(_) => e,
        other => bad(other.to_string()),
    })
}

/// Runs a campaign. Configuration errors are returned as `Err`; a failure
/// while executing yields an aborted report holding whatever was computed.
pub fn run_campaign(config: &CampaignConfig, base: &Path, mode: Mode) -> Result<CampaignReport> {
    let wiring = prepare(config, base, mode)?;
    Ok(run_wired(config, wiring, mode, None))
}

/// Runs a campaign on already resolved components; `preset` replaces the
/// generated test set.
pub fn run_wired(config: &CampaignConfig, wiring: Wiring, mode: Mode, preset: Option<TestSet>) -> CampaignReport {
    let mut report = CampaignReport::new(config.clone());
    if let Err(e) = execute(&mut report, config, wiring, mode, preset) {
        report.status = Status::Aborted;
        report.error = Some(e.to_string());
    }
    report
}

/// Process exit status for a finished campaign.
pub fn exit_status(report: &CampaignReport, mode: Mode) -> i32 {
    if report.status == Status::Aborted {
        return 3;
    }
    let replacement_failed = report.replacement.as_ref().is_some_and(|r| !r.holds);
    let failed = match mode {
        Mode::Replace => replacement_failed,
        Mode::Audit => report.audits_failed(),
        Mode::Run => {
            let property_failed = match &report.replacement {
                Some(_) => replacement_failed,
                None => report.any_failure(),
            };
            property_failed || report.audits_failed()
        }
    };
    i32::from(failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_defaults() {
        assert_eq!(sweep_sizes(None, 0), Vec::<usize>::new());
        assert_eq!(sweep_sizes(None, 1), vec![1]);
        assert_eq!(sweep_sizes(None, 10), vec![1, 2, 4, 8, 10]);
        assert_eq!(sweep_sizes(None, 8), vec![1, 2, 4, 8]);
        assert_eq!(sweep_sizes(Some(&[5, 0, 50, 3, 5]), 10), vec![3, 5, 10]);
    }

    #[test]
    fn seeds_differ_per_component() {
        let s = Seeds::from_root(1);
        assert_ne!(s.generator, s.experiments);
        assert_ne!(s.experiments, s.audit);
        assert_eq!(s, Seeds::from_root(1));
    }
}
