//! Resolves the names in a [`CampaignConfig`] to contexts, systems,
//! properties and classifiers.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use standin::contexts::{
    make_dialogue_context, make_function_context, DialogueContext, DialogueSystem, DialogueTable,
    FieldShape, FunctionContext, FunctionTable, TableSystem,
};
use standin::properties::{FnProperty, OutputEqualsInput, OutputMatches, RecordedVerdicts};
use standin::{Context, DomainDescriptor, EquivalenceClassifier, FnSystem, Property, SystemRef, Value};
use standin_traffic::fixtures;
use standin_traffic::{
    build_network, cautious, fleet, greedy, make_traffic_context, scenario_classifier, Bands,
    CollisionFree, Dynamics, NoCongestion, RoadNetwork, ScenarioSpace, TrafficContext,
};

use crate::config::{
    CampaignConfig, ClassifierConfig, ClassifierKind, ContextConfig, ContextKind, PropertyConfig,
    PropertyKind,
};
use crate::error::{CampaignError, Result};

const DEFAULT_VEHICLES: usize = 3;

/// The concrete context, kept typed for the operations that need more than
/// the [`Context`] trait.
#[derive(Clone)]
pub enum Setup {
    Function(FunctionContext),
    Dialogue {
        context: DialogueContext,
        alphabet: Vec<Value>,
    },
    Traffic {
        context: TrafficContext,
        space: ScenarioSpace,
    },
}

impl Setup {
    pub fn context(&self) -> &dyn Context {
        match self {
            Setup::Function(c) => c,
            Setup::Dialogue { context, .. } => context,
            Setup::Traffic { context, .. } => context,
        }
    }

    pub fn kind(&self) -> ContextKind {
        match self {
            Setup::Function(_) => ContextKind::Function,
            Setup::Dialogue { .. } => ContextKind::Dialogue,
            Setup::Traffic { .. } => ContextKind::Traffic,
        }
    }
}

/// Every component a campaign needs, resolved.
#[derive(Clone)]
pub struct Wiring {
    pub setup: Setup,
    pub tuples: Vec<(String, Vec<SystemRef>)>,
    pub property: Arc<dyn Property>,
    pub classifier: Option<EquivalenceClassifier>,
}

fn bad(msg: impl Into<String>) -> CampaignError {
    CampaignError::config(msg)
}

fn resolve_path(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn read(base: &Path, p: &str) -> Result<String> {
    let path = resolve_path(base, p);
    std::fs::read_to_string(&path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))
}

fn parse_int(s: &str, what: &str) -> Result<i64> {
    s.trim().parse().map_err(|_| bad(format!("{what}: `{s}` is not an integer")))
}

/// `bit-pairs`, `bits:<k>`, `ints:<lo>:<hi>` or `syms:<a>,<b>,...`.
pub fn parse_domain(spec: &str) -> Result<DomainDescriptor> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "bit-pairs" if rest.is_empty() => Ok(DomainDescriptor::bit_tuples(2)),
        "bits" => {
            let k = parse_int(rest, "bit width")?;
            if !(1..=16).contains(&k) {
                return Err(bad(format!("bit width {k} is outside 1..=16")));
            }
            Ok(DomainDescriptor::bit_tuples(k as u32))
        }
        "ints" => {
            let (lo, hi) = rest
                .split_once(':')
                .ok_or_else(|| bad(format!("domain `{spec}` needs ints:<lo>:<hi>")))?;
            let (lo, hi) = (parse_int(lo, "range start")?, parse_int(hi, "range end")?);
            if lo > hi {
                return Err(bad(format!("empty range in `{spec}`")));
            }
            Ok(DomainDescriptor::int_range(lo, hi))
        }
        "syms" if !rest.is_empty() => Ok(DomainDescriptor::finite(
            rest.split(',').map(|s| Value::sym(s.trim())),
        )),
        _ => Err(bad(format!("unknown domain `{spec}`"))),
    }
}

/// A traffic network by built-in name or file path.
pub fn load_network(base: &Path, spec: &str) -> Result<(Arc<RoadNetwork>, Dynamics)> {
    match spec.strip_prefix("builtin:") {
        Some("crossing") => Ok(fixtures::crossing()),
        Some("signal") => Ok(fixtures::signal_junction()),
        Some("straight") => Ok(fixtures::straight_road()),
        Some(other) => Err(bad(format!("unknown built-in network `{other}`"))),
        None => {
            let f = build_network(&read(base, spec)?).map_err(|e| bad(e.to_string()))?;
            Ok((Arc::new(f.network), f.dynamics))
        }
    }
}

fn build_setup(c: &ContextConfig, base: &Path) -> Result<Setup> {
    match c.kind {
        ContextKind::Function => {
            let domain = parse_domain(c.domain.as_deref().ok_or_else(|| bad("function context needs `domain`"))?)?;
            let codomain = match &c.codomain {
                Some(s) => parse_domain(s)?,
                None => domain.clone(),
            };
            Ok(Setup::Function(make_function_context(domain, codomain)?))
        }
        ContextKind::Dialogue => {
            let alphabet: Vec<Value> = c
                .alphabet
                .as_ref()
                .ok_or_else(|| bad("dialogue context needs `alphabet`"))?
                .iter()
                .map(Value::sym)
                .collect();
            let l = c.max_length.ok_or_else(|| bad("dialogue context needs `max_length`"))?;
            let context = make_dialogue_context(alphabet.clone(), l).map_err(|e| bad(e.to_string()))?;
            Ok(Setup::Dialogue { context, alphabet })
        }
        ContextKind::Traffic => {
            let (net, dynamics) = load_network(base, c.network.as_deref().unwrap_or("builtin:crossing"))?;
            let n = c.vehicles.unwrap_or(DEFAULT_VEHICLES);
            if n == 0 {
                return Err(bad("traffic context needs at least one vehicle slot"));
            }
            let horizon = c.horizon.unwrap_or(fixtures::CROSSING_HORIZON);
            let space = ScenarioSpace::from_od_pairs(&net, n, dynamics.v_max, horizon);
            let context = make_traffic_context(net, n, dynamics);
            Ok(Setup::Traffic { context, space })
        }
    }
}

fn bool_op(name: &str) -> Option<fn(&[Value]) -> i64> {
    fn bits(xs: &[Value]) -> impl Iterator<Item = i64> + '_ {
        xs.iter().filter_map(Value::as_int)
    }
    match name {
        "xor" => Some(|xs| bits(xs).fold(0, |a, b| a ^ b)),
        "and" => Some(|xs| bits(xs).fold(1, |a, b| a & b)),
        "or" => Some(|xs| bits(xs).fold(0, |a, b| a | b)),
        _ => None,
    }
}

fn parse_scalar(s: &str) -> Value {
    s.parse::<i64>().map(Value::Int).unwrap_or_else(|_| Value::sym(s))
}

fn function_system(ctx: &FunctionContext, spec: &str, base: &Path) -> Result<SystemRef> {
    let sig = ctx.signature().clone();
    if let Some(op) = bool_op(spec) {
        if !ctx.input_domain().enumerate(usize::MAX).is_ok_and(|xs| xs.iter().all(|x| x.as_list().is_some())) {
            return Err(bad(format!("`{spec}` needs a bit-tuple domain")));
        }
        return Ok(FnSystem::new(spec, sig, move |v| Value::Int(op(v.as_list().unwrap_or(&[])))).into_ref());
    }
    match spec.split_once(':') {
        None if spec == "xor-wrong-11" => Ok(FnSystem::new(spec, sig, |v| {
            let xs = v.as_list().unwrap_or(&[]);
            let ones = xs.iter().all(|x| x.as_int() == Some(1));
            Value::Int(if ones && !xs.is_empty() { 1 } else { (bool_op("xor").unwrap())(xs) })
        })
        .into_ref()),
        None if spec == "identity" => Ok(FnSystem::new(spec, sig, Value::clone).into_ref()),
        Some(("const", v)) => {
            let out = parse_scalar(v);
            Ok(FnSystem::new(spec, sig, move |_| out.clone()).into_ref())
        }
        Some(("table", p)) => {
            let table = FunctionTable::parse(&read(base, p)?).map_err(|e| bad(format!("{p}: {e}")))?;
            Ok(TableSystem::new(p, table, sig).map_err(|e| bad(format!("{p}: {e}")))?.into_ref())
        }
        _ => Err(bad(format!("unknown function system `{spec}`"))),
    }
}

fn dialogue_system(ctx: &DialogueContext, spec: &str, base: &Path) -> Result<SystemRef> {
    let sig = ctx.signature().clone();
    match spec.split_once(':') {
        None if spec == "echo" => Ok(FnSystem::new(spec, sig, Value::clone).into_ref()),
        None if spec == "reverse" => Ok(FnSystem::new(spec, sig, |v| {
            let mut xs = v.as_list().map(<[Value]>::to_vec).unwrap_or_default();
            xs.reverse();
            Value::List(xs)
        })
        .into_ref()),
        None if spec == "silent" => {
            Ok(FnSystem::new(spec, sig, |_| DialogueContext::no_answer()).into_ref())
        }
        Some(("dialogue-table", p)) => {
            let table =
                DialogueTable::parse(&read(base, p)?, ctx.max_length()).map_err(|e| bad(format!("{p}: {e}")))?;
            Ok(DialogueSystem::new(p, table, ctx).map_err(|e| bad(e.to_string()))?.into_ref())
        }
        _ => Err(bad(format!("unknown dialogue system `{spec}`"))),
    }
}

/// One system for a single slot of the context.
pub fn resolve_system(setup: &Setup, spec: &str, base: &Path) -> Result<SystemRef> {
    match setup {
        Setup::Function(ctx) => function_system(ctx, spec, base),
        Setup::Dialogue { context, .. } => dialogue_system(context, spec, base),
        Setup::Traffic { .. } => match spec {
            "cautious" => Ok(cautious()),
            "greedy" => Ok(greedy()),
            _ => Err(bad(format!("unknown driver policy `{spec}`"))),
        },
    }
}

/// A system tuple filling every slot of the context.
pub fn resolve_tuple(setup: &Setup, specs: &[String], base: &Path) -> Result<Vec<SystemRef>> {
    let arity = setup.context().arity();
    match specs {
        [one] if matches!(setup, Setup::Traffic { .. }) => Ok(fleet(&resolve_system(setup, one, base)?, arity)),
        [one] => Ok(vec![resolve_system(setup, one, base)?; arity]),
        many if many.len() == arity => many.iter().map(|s| resolve_system(setup, s, base)).collect(),
        many => Err(bad(format!(
            "tuple lists {} systems; the context embeds {arity}",
            many.len()
        ))),
    }
}

fn build_property(p: &PropertyConfig, setup: &Setup, base: &Path) -> Result<Arc<dyn Property>> {
    let traffic = matches!(setup, Setup::Traffic { .. });
    let wrong_context = |what: &str| bad(format!("property `{what}` does not apply to this context"));
    Ok(match p.kind {
        PropertyKind::OutputEqualsInput if !traffic => Arc::new(OutputEqualsInput::default()),
        PropertyKind::Matches if !traffic => {
            let spec = p.reference.as_deref().ok_or_else(|| bad("property `matches` needs `reference`"))?;
            let reference = resolve_system(setup, spec, base)?;
            Arc::new(OutputMatches::new(format!("matches {spec}"), move |v| {
                reference.reset(0).react(v)
            }))
        }
        PropertyKind::Answered if matches!(setup, Setup::Dialogue { .. }) => {
            Arc::new(FnProperty::on_output("answered", |_, out| out != &DialogueContext::no_answer()))
        }
        PropertyKind::Recorded if !traffic => {
            let path = p.path.as_deref().ok_or_else(|| bad("property `recorded` needs `path`"))?;
            let shape = match setup {
                Setup::Dialogue { .. } => FieldShape::Sequence,
                _ => FieldShape::Auto,
            };
            Arc::new(RecordedVerdicts::parse(path, &read(base, path)?, shape).map_err(|e| bad(format!("{path}: {e}")))?)
        }
        PropertyKind::CollisionFree if traffic => Arc::new(CollisionFree),
        PropertyKind::NoCongestion if traffic => Arc::new(NoCongestion {
            deadline: p.deadline.ok_or_else(|| bad("property `no-congestion` needs `deadline`"))?,
        }),
        kind => return Err(wrong_context(&format!("{kind:?}"))),
    })
}

fn bands(c: &ClassifierConfig) -> Result<Bands> {
    let labels = |l: &Option<Vec<String>>| l.clone().unwrap_or_default();
    match (&c.density_cuts, &c.length_cuts) {
        (None, None) if c.density_labels.is_none() && c.length_labels.is_none() => Ok(fixtures::crossing_bands()),
        _ => {
            let (dc, lc) = (c.density_cuts.clone().unwrap_or_default(), c.length_cuts.clone().unwrap_or_default());
            let (dl, ll) = (labels(&c.density_labels), labels(&c.length_labels));
            let dl: Vec<&str> = dl.iter().map(String::as_str).collect();
            let ll: Vec<&str> = ll.iter().map(String::as_str).collect();
            Bands::new((&dc, &dl), (&lc, &ll))
                .ok_or_else(|| bad("band labels must number cuts + 1 and cuts must increase"))
        }
    }
}

fn build_classifier(c: &ClassifierConfig, setup: &Setup) -> Result<EquivalenceClassifier> {
    let classifier = match (c.kind, setup) {
        (ClassifierKind::Parity, Setup::Function(_)) => EquivalenceClassifier::parity(),
        (ClassifierKind::ByValue, Setup::Function(_) | Setup::Dialogue { .. }) => {
            let domain = setup.context().input_domain().enumerate(usize::MAX)?;
            EquivalenceClassifier::by_value(&domain)
        }
        (ClassifierKind::ByLength, Setup::Dialogue { context, .. }) => {
            EquivalenceClassifier::by_length(c.max_length.unwrap_or(context.max_length()))
        }
        (ClassifierKind::ScenarioBands, Setup::Traffic { context, .. }) => {
            scenario_classifier(context.network().clone(), bands(c)?)
        }
        (kind, _) => return Err(bad(format!("classifier `{kind:?}` does not apply to this context"))),
    };
    if let Some(universe) = classifier.universe() {
        if let Some(k) = c.weights.keys().find(|k| !universe.contains(*k)) {
            return Err(bad(format!("weight for unknown class `{k}`")));
        }
    }
    classifier
        .with_weights(c.weights.iter().map(|(k, w)| (k.clone(), *w)))
        .map_err(|e| bad(e.to_string()))
}

/// Resolves every reference in `config`; relative paths are taken from `base`.
pub fn wire(config: &CampaignConfig, base: &Path) -> Result<Wiring> {
    let setup = build_setup(&config.context, base)?;
    let tuples = config
        .tuples
        .iter()
        .map(|t| Ok((t.name.clone(), resolve_tuple(&setup, &t.systems, base)?)))
        .collect::<Result<Vec<_>>>()?;
    let property = build_property(&config.property, &setup, base)?;
    let classifier = config
        .classifier
        .as_ref()
        .map(|c| build_classifier(c, &setup))
        .transpose()?;
    Ok(Wiring {
        setup,
        tuples,
        property,
        classifier,
    })
}
