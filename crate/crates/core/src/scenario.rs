//! JSON scenario files.
//!
//! A scenario is one document with a section per concern:
//!
//! ```json
//! {
//!   "schema": 1,
//!   "world": { "vertices": [{"id": "w0", "kind": "action", "initial": true, "goal": false}],
//!              "edges": [{"src": "w0", "dst": "w1", "labels": ["go"]}] },
//!   "plan": { "vertices": [{"id": "p0", "kind": "action", "initial": true, "term": false}], "edges": [] },
//!   "labelmap": { "actions": {"go": "act"}, "observations": {}, "allow_shared_images": false },
//!   "filter": { "vertices": [], "edges": [] },
//!   "divulgence": { "case": "I", "decoys": [] },
//!   "stipulation": "!w1"
//! }
//! ```
//!
//! Only `schema` and `world` are required. Edge labels are given by name and
//! take the kind of their source vertex. Saving always emits the normalized
//! form (sorted vertices, edges and labels, all flags present), so a saved
//! file reloads and saves to the same bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closure::{ClosureOptions, ClosureResult, Color};
use crate::graph::{Finding, Kind, Label, PGraph, VertexId};
use crate::labelmap::{LabelMap, LabelMapError};
use crate::observer::{divulged_from_case_with, DivulgenceCase, Observer, ObserverError};
use crate::planning::{Plan, PlanningError, PlanningProblem};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    UnsupportedSchema(u32),
    #[error("{section}: {detail} refers to unknown vertex `{vertex}`")]
    DanglingReference {
        section: String,
        detail: String,
        vertex: String,
    },
    #[error("{section}: label `{label}` is used both as an action and as an observation")]
    LabelKindClash { section: String, label: String },
    #[error("{section}: {message}")]
    Invalid { section: String, message: String },
    #[error("scenario has no `{0}` section")]
    MissingSection(&'static str),
    #[error("labelmap: {0}")]
    LabelMap(#[from] LabelMapError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: String,
    kind: Kind,
    #[serde(default)]
    initial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    term: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    src: String,
    dst: String,
    labels: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    vertices: Vec<VertexDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelMapDoc {
    #[serde(default)]
    actions: BTreeMap<String, String>,
    #[serde(default)]
    observations: BTreeMap<String, String>,
    #[serde(default)]
    allow_shared_images: bool,
}

/// Divulgence cases by their conventional numerals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseTag {
    I,
    II,
    III,
    IV,
}

impl CaseTag {
    pub const ALL: [CaseTag; 4] = [CaseTag::I, CaseTag::II, CaseTag::III, CaseTag::IV];
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::I => "I",
            CaseTag::II => "II",
            CaseTag::III => "III",
            CaseTag::IV => "IV",
        })
    }
}

impl std::str::FromStr for CaseTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "1" => Ok(CaseTag::I),
            "II" | "2" => Ok(CaseTag::II),
            "III" | "3" => Ok(CaseTag::III),
            "IV" | "4" => Ok(CaseTag::IV),
            other => Err(format!(
                "unknown divulgence case `{other}` (expected I, II, III or IV)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DivulgenceDoc {
    case: CaseTag,
    #[serde(default)]
    decoys: Vec<GraphDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    schema: u32,
    world: GraphDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plan: Option<GraphDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labelmap: Option<LabelMapDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    filter: Option<GraphDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    divulgence: Option<DivulgenceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stipulation: Option<String>,
}

/// The divulgence section: which case applies, and the other plans mixed in
/// with the executed one under case II.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divulgence {
    pub case: CaseTag,
    pub decoys: Vec<Plan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub world: PGraph,
    pub goals: BTreeSet<VertexId>,
    pub plan: Option<Plan>,
    pub labelmap: Option<LabelMap>,
    pub filter: Option<PGraph>,
    pub divulgence: Option<Divulgence>,
    pub stipulation: Option<String>,
}

/// Which per-vertex flag a graph section carries besides `initial`.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Flag {
    None,
    Goal,
    Term,
}

fn graph_from_doc(
    section: &str,
    doc: &GraphDoc,
    flag: Flag,
) -> Result<(PGraph, BTreeSet<VertexId>), ScenarioError> {
    let mut g = PGraph::new();
    let mut marked = BTreeSet::new();
    for v in &doc.vertices {
        if g.contains(&v.id) {
            return Err(ScenarioError::Invalid {
                section: section.to_owned(),
                message: format!("duplicate vertex `{}`", v.id),
            });
        }
        let (allowed, other) = match flag {
            Flag::None => (None, [v.goal, v.term]),
            Flag::Goal => (v.goal, [v.term, None]),
            Flag::Term => (v.term, [v.goal, None]),
        };
        if other.iter().any(Option::is_some) {
            return Err(ScenarioError::Invalid {
                section: section.to_owned(),
                message: format!("vertex `{}` carries a flag this section does not use", v.id),
            });
        }
        g.add_vertex(v.id.as_str(), v.kind);
        if v.initial {
            g.mark_initial(v.id.as_str());
        }
        if allowed == Some(true) {
            marked.insert(VertexId::from(v.id.as_str()));
        }
    }
    for e in &doc.edges {
        for (end, id) in [("source", &e.src), ("target", &e.dst)] {
            if !g.contains(id) {
                return Err(ScenarioError::DanglingReference {
                    section: section.to_owned(),
                    detail: format!("{end} of edge `{}` -> `{}`", e.src, e.dst),
                    vertex: id.clone(),
                });
            }
        }
        if e.labels.is_empty() {
            return Err(ScenarioError::Invalid {
                section: section.to_owned(),
                message: format!("edge `{}` -> `{}` carries no labels", e.src, e.dst),
            });
        }
        let kind = g.kind(&e.src).unwrap_or(Kind::Action);
        g.add_edge(
            e.src.as_str(),
            e.dst.as_str(),
            e.labels.iter().map(|l| Label::new(kind, l.as_str())),
        );
    }
    if let Some(finding) = g.validate().findings.into_iter().next() {
        return Err(match finding {
            Finding::LabelKindClash(label) => ScenarioError::LabelKindClash {
                section: section.to_owned(),
                label,
            },
            other => ScenarioError::Invalid {
                section: section.to_owned(),
                message: other.to_string(),
            },
        });
    }
    Ok((g, marked))
}

fn graph_to_doc(g: &PGraph, marked: Option<(&BTreeSet<VertexId>, Flag)>) -> GraphDoc {
    let vertices = g
        .vertices()
        .map(|(id, kind)| {
            let flag = marked.map(|(set, f)| (set.contains(id), f));
            VertexDoc {
                id: id.to_string(),
                kind,
                initial: g.initial().contains(id),
                goal: match flag {
                    Some((b, Flag::Goal)) => Some(b),
                    _ => None,
                },
                term: match flag {
                    Some((b, Flag::Term)) => Some(b),
                    _ => None,
                },
            }
        })
        .collect();
    let edges = g
        .edges()
        .map(|(src, dst, labels)| EdgeDoc {
            src: src.to_string(),
            dst: dst.to_string(),
            labels: labels.iter().map(|l| l.name().to_owned()).collect(),
        })
        .collect();
    GraphDoc { vertices, edges }
}

fn plan_from_doc(section: &str, doc: &GraphDoc) -> Result<Plan, ScenarioError> {
    let (g, term) = graph_from_doc(section, doc, Flag::Term)?;
    Ok(Plan::new(g, term)?)
}

fn plan_to_doc(plan: &Plan) -> GraphDoc {
    graph_to_doc(plan.graph(), Some((plan.terminals(), Flag::Term)))
}

/// A single graph in the scenario graph format, with optional goal flags.
pub fn graph_to_json(g: &PGraph, goals: Option<&BTreeSet<VertexId>>) -> String {
    let doc = graph_to_doc(g, goals.map(|m| (m, Flag::Goal)));
    let mut out = serde_json::to_string_pretty(&doc).expect("graph documents always serialize");
    out.push('\n');
    out
}

#[derive(Serialize)]
struct ClosureDoc {
    no_solving_plan: bool,
    initial_proviso: bool,
    coloring: BTreeMap<String, Color>,
    pi: BTreeMap<String, String>,
    members: BTreeMap<String, Vec<String>>,
    pstar: GraphDoc,
}

/// Coloring, completion policy and closure of a closure computation.
pub fn closure_to_json(c: &ClosureResult) -> String {
    let doc = ClosureDoc {
        no_solving_plan: c.no_solving_plan(),
        initial_proviso: c.options.initial_proviso,
        coloring: c
            .coloring
            .iter()
            .map(|(v, col)| (v.to_string(), *col))
            .collect(),
        pi: c
            .pi
            .iter()
            .map(|(v, l)| (v.to_string(), l.name().to_owned()))
            .collect(),
        members: c
            .wprime
            .vertex_ids()
            .map(|v| {
                let m = c.members(v.as_str()).into_iter().flatten();
                (v.to_string(), m.map(|w| w.to_string()).collect())
            })
            .collect(),
        pstar: graph_to_doc(&c.pstar, Some((&c.goals_prime, Flag::Term))),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("closure documents always serialize");
    out.push('\n');
    out
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| ScenarioError::Schema {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if doc.schema != SCHEMA_VERSION {
            return Err(ScenarioError::UnsupportedSchema(doc.schema));
        }
        let (world, goals) = graph_from_doc("world", &doc.world, Flag::Goal)?;
        let plan = doc
            .plan
            .as_ref()
            .map(|p| plan_from_doc("plan", p))
            .transpose()?;
        let filter = doc
            .filter
            .as_ref()
            .map(|f| graph_from_doc("filter", f, Flag::None).map(|(g, _)| g))
            .transpose()?;
        let divulgence = doc
            .divulgence
            .as_ref()
            .map(|d| -> Result<Divulgence, ScenarioError> {
                let decoys = d
                    .decoys
                    .iter()
                    .enumerate()
                    .map(|(i, p)| plan_from_doc(&format!("divulgence.decoys[{i}]"), p))
                    .collect::<Result<_, _>>()?;
                Ok(Divulgence {
                    case: d.case,
                    decoys,
                })
            })
            .transpose()?;
        let labelmap = doc
            .labelmap
            .as_ref()
            .map(|m| {
                let entries = m
                    .actions
                    .iter()
                    .map(|(l, x)| (Label::action(l.as_str()), x.clone()))
                    .chain(
                        m.observations
                            .iter()
                            .map(|(l, x)| (Label::observation(l.as_str()), x.clone())),
                    );
                LabelMap::new(entries, m.allow_shared_images)
            })
            .transpose()?;

        if let Some(h) = &labelmap {
            h.ensure_total_on(&world)?;
            if let Some(plan) = &plan {
                h.ensure_total_on(plan.graph())?;
            }
            if let Some(filter) = &filter {
                let images = h.image_space();
                if let Some(l) = filter.labels().into_iter().find(|l| !images.contains(*l)) {
                    return Err(LabelMapError::UnmappedImage(l.clone()).into());
                }
            }
        }
        Ok(Self {
            world,
            goals,
            plan,
            labelmap,
            filter,
            divulgence,
            stipulation: doc.stipulation,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Normalized pretty-printed JSON, newline terminated.
    pub fn to_json(&self) -> String {
        let doc = ScenarioDoc {
            schema: SCHEMA_VERSION,
            world: graph_to_doc(&self.world, Some((&self.goals, Flag::Goal))),
            plan: self.plan.as_ref().map(plan_to_doc),
            labelmap: self.labelmap.as_ref().map(|h| {
                let mut actions = BTreeMap::new();
                let mut observations = BTreeMap::new();
                for (label, image) in h.entries() {
                    let side = match label.kind() {
                        Kind::Action => &mut actions,
                        Kind::Observation => &mut observations,
                    };
                    side.insert(label.name().to_owned(), image.to_owned());
                }
                LabelMapDoc {
                    actions,
                    observations,
                    allow_shared_images: h.allows_shared_images(),
                }
            }),
            filter: self.filter.as_ref().map(|f| graph_to_doc(f, None)),
            divulgence: self.divulgence.as_ref().map(|d| DivulgenceDoc {
                case: d.case,
                decoys: d.decoys.iter().map(plan_to_doc).collect(),
            }),
            stipulation: self.stipulation.clone(),
        };
        let mut out =
            serde_json::to_string_pretty(&doc).expect("scenario documents always serialize");
        out.push('\n');
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ScenarioError::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn problem(&self) -> Result<PlanningProblem, ScenarioError> {
        Ok(PlanningProblem::new(
            self.world.clone(),
            self.goals.clone(),
        )?)
    }

    pub fn plan(&self) -> Result<&Plan, ScenarioError> {
        self.plan
            .as_ref()
            .ok_or(ScenarioError::MissingSection("plan"))
    }

    pub fn labelmap(&self) -> Result<&LabelMap, ScenarioError> {
        self.labelmap
            .as_ref()
            .ok_or(ScenarioError::MissingSection("labelmap"))
    }

    pub fn filter(&self) -> Result<&PGraph, ScenarioError> {
        self.filter
            .as_ref()
            .ok_or(ScenarioError::MissingSection("filter"))
    }

    pub fn case_tag(&self) -> Result<CaseTag, ScenarioError> {
        self.divulgence
            .as_ref()
            .map(|d| d.case)
            .ok_or(ScenarioError::MissingSection("divulgence"))
    }

    /// The divulgence case `tag` instantiated from this scenario. Case II
    /// hides the executed plan among the decoys.
    pub fn divulgence_case(&self, tag: CaseTag) -> Result<DivulgenceCase, ScenarioError> {
        Ok(match tag {
            CaseTag::I => DivulgenceCase::ExactPlan(self.plan()?.clone()),
            CaseTag::II => {
                let mut plans = vec![self.plan()?.clone()];
                if let Some(d) = &self.divulgence {
                    plans.extend(d.decoys.iter().cloned());
                }
                DivulgenceCase::PlanSet(plans)
            }
            CaseTag::III => DivulgenceCase::SomePlan(self.problem()?),
            CaseTag::IV => DivulgenceCase::WorldOnly(self.world.clone()),
        })
    }

    pub fn observer(
        &self,
        tag: CaseTag,
        options: ClosureOptions,
    ) -> Result<Observer, ScenarioError> {
        let divulged = divulged_from_case_with(&self.divulgence_case(tag)?, options)?;
        Ok(Observer {
            filter: self.filter()?.clone(),
            divulged,
        })
    }
}
