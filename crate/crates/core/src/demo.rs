//! Bundled demo scenario, plans and desired effects, plus seeded generators
//! for large synthetic scenarios and plans.
//!
//! The demo models three provinces (capital, north, south), each with
//! economy, population, security, governance and infrastructure blocks,
//! and one national information block. Left alone the situation drifts
//! toward stagnant growth, rising corruption, spreading insurgent influence
//! and unrest. Two hypotheses disagree on what drives the unrest.

use crate::coa::{DesiredEffect, Direction, EffectSet, EffectTarget};
use crate::model::*;
use crate::plan::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub const PROVINCES: [&str; 3] = ["capital", "north", "south"];
/// Province population shares used for national aggregates.
pub const PROVINCE_WEIGHTS: [f64; 3] = [0.5, 0.3, 0.2];
pub const DEMO_HORIZON: u32 = 104;
pub const LOES: [&str; 3] = ["Reconstruction", "Governance", "Security"];

fn var(name: &str, value: f64, polarity: Polarity) -> LevelVar {
    LevelVar::new(name, value, polarity)
}

fn ports(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// The generic component library.
pub fn templates() -> Vec<ComponentTemplate> {
    use Polarity::*;
    vec![
        ComponentTemplate {
            id: "economy".into(),
            kind: ComponentKind::Economic,
            state_vars: vec![var("employment", 38.0, FavorableHigh), var("growth", 32.0, FavorableHigh)],
            input_ports: ports(&["investment", "safety"]),
            output_ports: ports(&["prosperity"]),
            dynamics: Dynamics {
                state: vec![vec![0.96, 0.01], vec![0.0, 0.95]],
                input: vec![vec![0.35, 0.01], vec![0.45, 0.01]],
                bias: vec![0.45, 0.75],
                output: vec![vec![0.5, 0.5]],
            },
            noise_std: vec![0.4, 0.4],
        },
        ComponentTemplate {
            id: "population".into(),
            kind: ComponentKind::Social,
            state_vars: vec![var("unrest", 42.0, FavorableLow), var("support", 40.0, FavorableHigh)],
            input_ports: ports(&["prosperity", "messaging", "violence", "services"]),
            output_ports: ports(&["grievance", "consent"]),
            dynamics: Dynamics {
                state: vec![vec![0.95, 0.0], vec![0.0, 0.95]],
                input: vec![vec![-0.03, -0.02, 0.06, -0.02], vec![0.02, 0.02, -0.03, 0.02]],
                bias: vec![2.8, 1.2],
                output: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            noise_std: vec![0.5, 0.5],
        },
        ComponentTemplate {
            id: "security".into(),
            kind: ComponentKind::Military,
            state_vars: vec![var("insurgent_influence", 35.0, FavorableLow), var("security", 45.0, FavorableHigh)],
            input_ports: ports(&["operations", "grievance"]),
            output_ports: ports(&["safety", "violence"]),
            dynamics: Dynamics {
                state: vec![vec![0.96, 0.0], vec![-0.02, 0.96]],
                input: vec![vec![-0.4, 0.02], vec![0.5, -0.01]],
                bias: vec![1.0, 2.6],
                output: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            },
            noise_std: vec![0.5, 0.5],
        },
        ComponentTemplate {
            id: "governance".into(),
            kind: ComponentKind::Political,
            state_vars: vec![var("legitimacy", 40.0, FavorableHigh), var("corruption", 50.0, FavorableLow)],
            input_ports: ports(&["reform", "consent"]),
            output_ports: ports(&["stability"]),
            dynamics: Dynamics {
                state: vec![vec![0.96, -0.01], vec![0.0, 0.97]],
                input: vec![vec![0.3, 0.02], vec![-0.5, 0.0]],
                bias: vec![1.3, 1.8],
                output: vec![vec![1.0, 0.0]],
            },
            noise_std: vec![0.3, 0.3],
        },
        ComponentTemplate {
            id: "infrastructure".into(),
            kind: ComponentKind::Infrastructure,
            state_vars: vec![var("services", 35.0, FavorableHigh)],
            input_ports: ports(&["reconstruction", "safety"]),
            output_ports: ports(&["service_level"]),
            dynamics: Dynamics {
                state: vec![vec![0.97]],
                input: vec![vec![0.5, 0.005]],
                bias: vec![0.75],
                output: vec![vec![1.0]],
            },
            noise_std: vec![0.3],
        },
        ComponentTemplate {
            id: "media".into(),
            kind: ComponentKind::Information,
            state_vars: vec![var("narrative", 40.0, FavorableHigh)],
            input_ports: ports(&["messaging"]),
            output_ports: ports(&["reach"]),
            dynamics: Dynamics { state: vec![vec![0.95]], input: vec![vec![0.6]], bias: vec![1.8], output: vec![vec![1.0]] },
            noise_std: vec![0.5],
        },
    ]
}

fn couple(from: &str, out: &str, to: &str, input: &str, gain: f64) -> Coupling {
    Coupling { from: PortRef::new(from, out), to: PortRef::new(to, input), gain }
}

/// Province blocks and their internal couplings.
fn province(p: &str, overrides: &dyn Fn(&str) -> Vec<ParamOverride>) -> (Vec<InstanceSpec>, Vec<Coupling>) {
    let id = |t: &str| format!("{t}-{p}");
    let instances = ["economy", "population", "security", "governance", "infrastructure"]
        .iter()
        .map(|t| InstanceSpec {
            id: id(t),
            template: t.to_string(),
            region: p.to_string(),
            tier: Tier::Province,
            overrides: overrides(t),
        })
        .collect();
    let couplings = vec![
        couple(&id("economy"), "prosperity", &id("population"), "prosperity", 1.0),
        couple(&id("security"), "violence", &id("population"), "violence", 1.0),
        couple(&id("infrastructure"), "service_level", &id("population"), "services", 1.0),
        couple(&id("population"), "grievance", &id("security"), "grievance", 1.0),
        couple(&id("security"), "safety", &id("economy"), "safety", 1.0),
        couple(&id("security"), "safety", &id("infrastructure"), "safety", 1.0),
        couple(&id("population"), "consent", &id("governance"), "consent", 1.0),
    ];
    (instances, couplings)
}

fn national_rule(national_var: &str, template: &str, var: &str, provinces: &[String], weights: &[f64]) -> AggregationRule {
    AggregationRule {
        national_var: national_var.into(),
        sources: provinces
            .iter()
            .zip(weights)
            .map(|(p, w)| AggregationSource { instance: format!("{template}-{p}"), var: var.into(), weight: *w })
            .collect(),
    }
}

fn standard_aggregations(provinces: &[String], weights: &[f64]) -> Vec<AggregationRule> {
    vec![
        national_rule("employment", "economy", "employment", provinces, weights),
        national_rule("unrest", "population", "unrest", provinces, weights),
        national_rule("insurgent_influence", "security", "insurgent_influence", provinces, weights),
        national_rule("legitimacy", "governance", "legitimacy", provinces, weights),
    ]
}

fn demo_graph(id: &str, overrides: &dyn Fn(&str) -> Vec<ParamOverride>) -> GraphSpec {
    let mut instances = Vec::new();
    let mut couplings = Vec::new();
    for p in PROVINCES {
        let (i, c) = province(p, overrides);
        instances.extend(i);
        couplings.extend(c);
    }
    instances.push(InstanceSpec {
        id: "media".into(),
        template: "media".into(),
        region: "national".into(),
        tier: Tier::National,
        overrides: vec![],
    });
    for p in PROVINCES {
        couplings.push(couple("media", "reach", &format!("population-{p}"), "messaging", 0.5));
    }
    let provinces: Vec<String> = PROVINCES.iter().map(|s| s.to_string()).collect();
    GraphSpec { id: id.into(), instances, couplings, aggregations: standard_aggregations(&provinces, &PROVINCE_WEIGHTS) }
}

pub fn demo_scenario() -> Scenario {
    // Under the grievance reading, unrest tracks economic hardship more than
    // violence, and military operations buy less.
    let grievance = |t: &str| match t {
        "population" => vec![
            ParamOverride::Input { row: 0, col: 0, value: -0.05 },
            ParamOverride::Input { row: 0, col: 2, value: 0.03 },
        ],
        "security" => vec![ParamOverride::Input { row: 0, col: 0, value: -0.25 }],
        _ => vec![],
    };
    Scenario {
        schema_version: SCHEMA_VERSION,
        id: "demo-three-provinces".into(),
        description: "Three-province stabilization scenario with competing insurgency and grievance hypotheses".into(),
        detection: DetectionParams::default(),
        templates: templates(),
        hypotheses: vec![
            HypothesisSpec {
                name: "insurgency-driven".into(),
                provenance: "Unrest is driven mainly by insurgent violence".into(),
                graph: demo_graph("demo-insurgency", &|_| vec![]),
            },
            HypothesisSpec {
                name: "grievance-driven".into(),
                provenance: "Unrest is driven mainly by economic grievance".into(),
                graph: demo_graph("demo-grievance", &grievance),
            },
        ],
    }
}

fn pools() -> Vec<ResourcePool> {
    vec![
        ResourcePool { id: "usaid".into(), agency: "USAID".into(), budget: 6000.0, kind: ResourceKind::Financial },
        ResourcePool { id: "state".into(), agency: "State".into(), budget: 2500.0, kind: ResourceKind::Financial },
        ResourcePool { id: "dod".into(), agency: "DoD".into(), budget: 8000.0, kind: ResourceKind::Personnel },
    ]
}

fn loes() -> Vec<LineOfEffort> {
    vec![
        LineOfEffort { name: "Reconstruction".into(), description: "Economic recovery and essential services".into() },
        LineOfEffort { name: "Governance".into(), description: "Institutions, anti-corruption and messaging".into() },
        LineOfEffort { name: "Security".into(), description: "Clear and hold operations".into() },
    ]
}

#[allow(clippy::too_many_arguments)]
fn action(
    id: &str,
    name: &str,
    instrument: Instrument,
    loe: &str,
    target: (&str, &str),
    start: u32,
    duration: u32,
    intensity: f64,
    pool: &str,
    rate: f64,
    deps: &[&str],
) -> Action {
    Action {
        id: id.into(),
        name: name.into(),
        instrument,
        line_of_effort: loe.into(),
        target: PortRef::new(target.0, target.1),
        start_tick: start,
        duration_ticks: duration,
        intensity,
        resource: ResourceDraw { pool: pool.into(), rate_per_tick: rate },
        dependencies: deps.iter().map(|d| d.to_string()).collect::<BTreeSet<_>>(),
    }
}

fn integrated_actions() -> Vec<Action> {
    use Instrument::*;
    vec![
        action("sec-clear-north", "Clear north", Military, "Security", ("security-north", "operations"), 0, 16, 6.0, "dod", 60.0, &[]),
        action("sec-hold-north", "Hold north", Military, "Security", ("security-north", "operations"), 16, 60, 3.0, "dod", 30.0, &["sec-clear-north"]),
        action("sec-clear-south", "Clear south", Military, "Security", ("security-south", "operations"), 4, 16, 6.0, "dod", 60.0, &[]),
        action("sec-hold-south", "Hold south", Military, "Security", ("security-south", "operations"), 20, 60, 3.0, "dod", 30.0, &["sec-clear-south"]),
        action("sec-police-capital", "Capital policing", Military, "Security", ("security-capital", "operations"), 0, 80, 2.0, "dod", 10.0, &[]),
        action("rec-invest-capital", "Capital business grants", Economic, "Reconstruction", ("economy-capital", "investment"), 4, 60, 4.0, "usaid", 25.0, &[]),
        action("rec-invest-north", "North agriculture credit", Economic, "Reconstruction", ("economy-north", "investment"), 16, 56, 4.0, "usaid", 20.0, &["sec-clear-north"]),
        action("rec-invest-south", "South market rebuild", Economic, "Reconstruction", ("economy-south", "investment"), 20, 56, 4.0, "usaid", 20.0, &["sec-clear-south"]),
        action("rec-power-south", "South power and water", Economic, "Reconstruction", ("infrastructure-south", "reconstruction"), 20, 40, 3.0, "usaid", 15.0, &["sec-clear-south"]),
        action("rec-power-north", "North power and water", Economic, "Reconstruction", ("infrastructure-north", "reconstruction"), 16, 40, 3.0, "usaid", 15.0, &["sec-clear-north"]),
        action("gov-anticorruption-capital", "Capital anti-corruption", Diplomatic, "Governance", ("governance-capital", "reform"), 0, 70, 2.5, "state", 12.0, &[]),
        action("gov-reform-north", "North provincial council", Diplomatic, "Governance", ("governance-north", "reform"), 16, 60, 2.0, "state", 8.0, &["sec-clear-north"]),
        action("gov-reform-south", "South provincial council", Diplomatic, "Governance", ("governance-south", "reform"), 20, 50, 2.0, "state", 8.0, &["sec-clear-south"]),
        action("gov-messaging", "National messaging campaign", Information, "Governance", ("media", "messaging"), 0, 80, 4.0, "state", 5.0, &[]),
    ]
}

fn plan_with(id: &str, actions: Vec<Action>) -> Plan {
    let mut p = Plan::empty(id, DEMO_HORIZON);
    p.scenario = Some(demo_scenario().id);
    p.lines_of_effort = loes();
    p.pools = pools();
    p.actions = actions;
    p.canonicalize();
    p
}

/// Plan covering all three lines of effort.
pub fn integrated_plan() -> Plan {
    plan_with("integrated", integrated_actions())
}

/// The part of the integrated plan owned by one line-of-effort team.
/// Cross-LOE dependencies are dropped.
pub fn loe_plan(loe: &str) -> Plan {
    let actions: Vec<Action> = integrated_actions().into_iter().filter(|a| a.line_of_effort == loe).collect();
    let ids: BTreeSet<String> = actions.iter().map(|a| a.id.clone()).collect();
    let actions = actions
        .into_iter()
        .map(|mut a| {
            a.dependencies.retain(|d| ids.contains(d));
            a
        })
        .collect();
    plan_with(&format!("{}-only", loe.to_lowercase()), actions)
}

pub fn empty_plan() -> Plan {
    plan_with("empty", Vec::new())
}

fn effect(id: &str, target: EffectTarget, direction: Direction, level: f64) -> DesiredEffect {
    DesiredEffect { id: id.into(), target, direction, threshold_level: level, deadline_tick: DEMO_HORIZON }
}

fn national(v: &str) -> EffectTarget {
    EffectTarget::National { var: v.into() }
}

fn at(instance: &str, v: &str) -> EffectTarget {
    EffectTarget::Instance { instance: instance.into(), var: v.into() }
}

/// Ten named end-state effects for the demo.
pub fn desired_effects() -> EffectSet {
    use Direction::*;
    EffectSet {
        schema_version: SCHEMA_VERSION,
        id: "demo-ten-effects".into(),
        effects: vec![
            effect("E01-national-employment", national("employment"), Increase, 40.0),
            effect("E02-national-unrest", national("unrest"), Decrease, 35.0),
            effect("E03-national-insurgency", national("insurgent_influence"), Decrease, 25.0),
            effect("E04-north-security", at("security-north", "security"), Increase, 60.0),
            effect("E05-south-security", at("security-south", "security"), Increase, 60.0),
            effect("E06-capital-corruption", at("governance-capital", "corruption"), Decrease, 40.0),
            effect("E07-north-legitimacy", at("governance-north", "legitimacy"), Increase, 45.0),
            effect("E08-south-services", at("infrastructure-south", "services"), Increase, 45.0),
            effect("E09-national-narrative", at("media", "narrative"), Increase, 55.0),
            effect("E10-capital-growth", at("economy-capital", "growth"), Increase, 30.0),
        ],
    }
}

/// Synthetic scenario with `provinces × 5` province blocks (50 for 10
/// provinces) and two hypotheses with seeded parameter perturbations.
pub fn generate_scenario(provinces: usize, seed: u64) -> Scenario {
    let names: Vec<String> = (0..provinces).map(|p| format!("p{p:02}")).collect();
    let weights = vec![1.0 / provinces as f64; provinces];
    let mut weights = weights;
    let sum_head: f64 = weights[..provinces - 1].iter().sum();
    weights[provinces - 1] = 1.0 - sum_head;

    let build = |id: &str, jitter: Option<u64>| {
        let mut rng = ChaCha8Rng::seed_from_u64(jitter.unwrap_or(0));
        let mut instances = Vec::new();
        let mut couplings = Vec::new();
        for p in &names {
            let (mut i, c) = province(p, &|_| vec![]);
            if jitter.is_some() {
                for spec in &mut i {
                    let k = templates().iter().find(|t| t.id == spec.template).map_or(1, |t| t.state_vars.len());
                    for row in 0..k {
                        spec.overrides.push(ParamOverride::State { row, col: row, value: rng.random_range(0.93..0.98) });
                    }
                }
            }
            instances.extend(i);
            couplings.extend(c);
        }
        GraphSpec { id: id.into(), instances, couplings, aggregations: standard_aggregations(&names, &weights) }
    };

    Scenario {
        schema_version: SCHEMA_VERSION,
        id: format!("generated-{provinces}p-{seed}"),
        description: format!("Generated {provinces}-province scenario"),
        detection: DetectionParams::default(),
        templates: templates(),
        hypotheses: vec![
            HypothesisSpec { name: "nominal".into(), provenance: "template defaults".into(), graph: build("gen-nominal", None) },
            HypothesisSpec {
                name: "perturbed".into(),
                provenance: format!("diagonal persistence drawn with seed {seed}"),
                graph: build("gen-perturbed", Some(seed)),
            },
        ],
    }
}

/// Seeded plan of `n_actions` actions against a generated scenario. Every
/// dependency points at an action that finishes before the dependent starts
/// and the pools are sized to cover the total spend.
pub fn generate_plan(scenario: &Scenario, n_actions: usize, horizon: u32, seed: u64) -> Plan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = &scenario.hypotheses[0].graph;
    let targets: Vec<(String, &str, &str, Instrument)> = graph
        .instances
        .iter()
        .filter_map(|i| match i.template.as_str() {
            "economy" => Some((i.id.clone(), "investment", "Reconstruction", Instrument::Economic)),
            "infrastructure" => Some((i.id.clone(), "reconstruction", "Reconstruction", Instrument::Economic)),
            "governance" => Some((i.id.clone(), "reform", "Governance", Instrument::Diplomatic)),
            "security" => Some((i.id.clone(), "operations", "Security", Instrument::Military)),
            _ => None,
        })
        .collect();

    let mut actions: Vec<Action> = Vec::with_capacity(n_actions);
    for n in 0..n_actions {
        let (inst, port, loe, instrument) = &targets[rng.random_range(0..targets.len())];
        let duration = rng.random_range(4..=40u32).min(horizon);
        let start = rng.random_range(0..=horizon - duration);
        let mut deps = BTreeSet::new();
        if rng.random_bool(0.2) {
            if let Some(prior) = actions.iter().filter(|a| a.end_tick() <= start as u64).nth(rng.random_range(0..8)) {
                deps.insert(prior.id.clone());
            }
        }
        let pool = match *loe {
            "Security" => "dod",
            "Governance" => "state",
            _ => "usaid",
        };
        actions.push(Action {
            id: format!("a{n:04}"),
            name: format!("{instrument:?} action {n} on {inst}"),
            instrument: *instrument,
            line_of_effort: loe.to_string(),
            target: PortRef::new(inst.clone(), *port),
            start_tick: start,
            duration_ticks: duration,
            intensity: (rng.random_range(0.5..4.0f64) * 100.0).round() / 100.0,
            resource: ResourceDraw { pool: pool.into(), rate_per_tick: rng.random_range(1..=20u32) as f64 },
            dependencies: deps,
        });
    }
    let mut plan = Plan::empty(format!("generated-{n_actions}-{seed}"), horizon);
    plan.scenario = Some(scenario.id.clone());
    plan.lines_of_effort = loes();
    let mut pools = pools();
    let spend = total_spend(&Plan { actions: actions.clone(), pools: pools.clone(), ..plan.clone() });
    for p in &mut pools {
        p.budget = spend.get(&p.id).copied().unwrap_or(0.0).max(p.budget);
    }
    plan.pools = pools;
    plan.actions = actions;
    plan.canonicalize();
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{baseline, RunConfig};

    #[test]
    fn demo_scenario_validates() {
        for h in demo_scenario().hypotheses().unwrap() {
            let report = validate_graph(&h.graph);
            assert!(!report.has_errors(), "{:?}", report.errors().collect::<Vec<_>>());
            for plan in [integrated_plan(), empty_plan(), loe_plan("Security")] {
                let r = validate_plan(&plan, &h.graph);
                assert!(!r.has_errors(), "{}: {:?}", plan.id, r.errors().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn baseline_drifts_the_wrong_way() {
        let h = &demo_scenario().hypotheses().unwrap()[0];
        let b = baseline(&h.graph, &RunConfig::new(DEMO_HORIZON, 0, false)).unwrap();
        let first = |v: &str| b.national(v).unwrap().values[0];
        let last = |v: &str| *b.national(v).unwrap().values.last().unwrap();
        assert!(last("employment") < first("employment"));
        assert!(last("unrest") > first("unrest"));
        assert!(last("insurgent_influence") > first("insurgent_influence"));
        let corruption = b.series("governance-capital", "corruption").unwrap();
        assert!(corruption.values.last().unwrap() > &corruption.values[0]);
    }

    #[test]
    fn loe_plans_merge_back_to_integrated_actions() {
        let parts: Vec<Plan> = LOES.iter().map(|l| loe_plan(l)).collect();
        let (merged, dups) = merge_plans(&parts).unwrap();
        assert_eq!(merged.actions.len(), integrated_plan().actions.len());
        assert!(dups.pairs.iter().all(|(a, b)| a.starts_with("sec") && b.starts_with("sec")));
    }

    #[test]
    fn generated_plan_is_valid() {
        let s = generate_scenario(10, 7);
        let hyps = s.hypotheses().unwrap();
        assert_eq!(hyps[0].graph.instances.len(), 50);
        let p = generate_plan(&s, 400, 260, 3);
        assert_eq!(p.actions.len(), 400);
        for h in &hyps {
            let r = validate_plan(&p, &h.graph);
            assert!(!r.has_errors(), "{:?}", r.errors().take(3).collect::<Vec<_>>());
            assert!(!validate_graph(&h.graph).has_errors());
        }
    }
}
