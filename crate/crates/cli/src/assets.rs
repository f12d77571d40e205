//! Bundled demo inputs, written by `wargamer demo` and checked into
//! `assets/demo/`.

use wargame_core::demo;
use wargame_core::{canonical_json, demo::LOES};

const SIMILARITY_CSV: &str = "\
concept,security,governance,economy,legitimacy
security,,6,3,7
governance,6,,4,9
economy,3,4,,5
legitimacy,7,9,5,
";

const TLX_CSV: &str = "\
respondent,mental,physical,temporal,performance,effort,frustration,w_mental,w_physical,w_temporal,w_performance,w_effort,w_frustration
cell-a,100,80,60,40,20,0,5,4,3,2,1,0
cell-b,50,50,50,50,50,50,3,3,3,2,2,2
";

const INTERACTIONS_CSV: &str = "\
timestamp,source,destination,durationSeconds,kind,sourceGroup,destGroup,sourceRole,destRole
0,a,b,60,person-person,Governance,Governance,planner,planner
30,c,b,30,person-person,Security,Governance,planner,leader
45,a,planning-tool,90,person-tool,Governance,,planner,
";

const TRUST_CSV: &str = "\
respondent,item1,item2,item3,item4,item5,item6,item7,item8,item9,item10,item11,item12,item13,explorative,predictive
p1,5,2,5,6,5,4,5,5,6,5,4,5,6,6,3
p2,4,3,4,5,4,4,4,5,5,4,4,4,5,5,3
p3,6,2,5,6,6,5,5,6,6,6,5,5,6,6,4
p4,5,3,4,5,5,4,5,4,5,5,4,4,5,5,2
";

const TREND_CSV: &str = "\
x,y
1,1
2,2
3,2
4,3
";

/// `(relative path, contents)` of every demo asset.
pub fn demo_assets() -> Vec<(String, String)> {
    let mut out = vec![
        ("scenario.json".to_string(), demo::demo_scenario().to_canonical_json()),
        ("effects.json".to_string(), canonical_json(&demo::desired_effects())),
        ("plans/integrated.json".to_string(), demo::integrated_plan().to_canonical_json()),
        ("plans/empty.json".to_string(), demo::empty_plan().to_canonical_json()),
    ];
    for loe in LOES {
        let plan = demo::loe_plan(loe);
        out.push((format!("plans/{}.json", plan.id), plan.to_canonical_json()));
    }
    for (name, text) in [
        ("similarity.csv", SIMILARITY_CSV),
        ("tlx.csv", TLX_CSV),
        ("interactions.csv", INTERACTIONS_CSV),
        ("trust.csv", TRUST_CSV),
        ("trend.csv", TREND_CSV),
    ] {
        out.push((format!("analytics/{name}"), text.to_string()));
    }
    out
}
