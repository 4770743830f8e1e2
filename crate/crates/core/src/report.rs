//! Machine-readable reports for the command surface.
//!
//! Reports serialize to JSON with a fixed field order and no volatile data:
//! `elapsed_ms` is pinned to zero in the JSON body so that identical inputs
//! produce byte-identical reports; the text renderer may show wall time.

use serde::Serialize;
use serde_json::{json, Value};

use crate::cat::FiniteCategory;
use crate::geometry::{Atlas, GcWitness, OpenImmersionWitness, SectionWitness};
use crate::presheaf::Presheaf;
use crate::topology::SheafWitness;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub check: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub verdicts: Vec<Verdict>,
    pub witnesses: Vec<Value>,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            schema: 1,
            command: command.to_string(),
            verdicts: Vec::new(),
            witnesses: Vec::new(),
            elapsed_ms: 0,
        }
    }

    pub fn push(&mut self, check: &str, status: Status, witness: Option<Value>) {
        let witness = witness.map(|w| {
            self.witnesses.push(w);
            self.witnesses.len() - 1
        });
        self.verdicts.push(Verdict { check: check.to_string(), status, witness });
    }

    pub fn pass(&mut self, check: &str) {
        self.push(check, Status::Pass, None);
    }

    pub fn fail(&mut self, check: &str, witness: Value) {
        self.push(check, Status::Fail, Some(witness));
    }

    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.status == Status::Fail) {
            1
        } else if self.verdicts.iter().any(|v| v.status == Status::Inconclusive) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self, elapsed_ms: u128) -> String {
        let mut out = format!("command: {}\n", self.command);
        for v in &self.verdicts {
            let status = match v.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Inconclusive => "inconclusive",
            };
            match v.witness {
                Some(i) => {
                    out.push_str(&format!("{}: {} {}\n", v.check, status, self.witnesses[i]))
                }
                None => out.push_str(&format!("{}: {}\n", v.check, status)),
            }
        }
        let overall = match self.exit_code() {
            0 => "pass",
            1 => "fail",
            _ => "inconclusive",
        };
        out.push_str(&format!("result: {}\n", overall));
        out.push_str(&format!("elapsed: {}ms\n", elapsed_ms));
        out
    }
}

pub fn sheaf_witness_value(cat: &FiniteCategory, f: &Presheaf, w: &SheafWitness) -> Value {
    match w {
        SheafWitness::NotSeparated { object, sieve, first, second } => json!({
            "kind": "not_separated",
            "object": cat.object_name(*object),
            "sieve": sieve.arrows.iter().map(|&a| cat.arrow_name(a)).collect::<Vec<_>>(),
            "first": f.label(*object, *first),
            "second": f.label(*object, *second),
        }),
        SheafWitness::NoAmalgamation { object, sieve, assignments } => json!({
            "kind": "no_amalgamation",
            "object": cat.object_name(*object),
            "sieve": sieve.arrows.iter().map(|&a| cat.arrow_name(a)).collect::<Vec<_>>(),
            "family": assignments
                .iter()
                .map(|&(a, s)| json!({
                    "arrow": cat.arrow_name(a),
                    "section": f.label(cat.src(a), s),
                }))
                .collect::<Vec<_>>(),
        }),
    }
}

pub fn gc_witness_value(cat: &FiniteCategory, w: &GcWitness) -> Value {
    use crate::geometry::AdmissibleWitness as Aw;
    match w {
        GcWitness::MissingTerminal => json!({ "kind": "missing_terminal" }),
        GcWitness::MissingProduct { first, second } => json!({
            "kind": "missing_product",
            "first": cat.object_name(*first),
            "second": cat.object_name(*second),
        }),
        GcWitness::NotSubcanonical { object } => json!({
            "kind": "not_subcanonical",
            "object": cat.object_name(*object),
        }),
        GcWitness::NotAdmissible(Aw::IdentityMissing { object }) => json!({
            "kind": "identity_not_in_class",
            "object": cat.object_name(*object),
        }),
        GcWitness::NotAdmissible(Aw::BaseChangeEscapes { p_arrow, along, pulled }) => json!({
            "kind": "base_change_escapes_class",
            "class_arrow": cat.arrow_name(*p_arrow),
            "along": cat.arrow_name(*along),
            "pulled": cat.arrow_name(*pulled),
        }),
        GcWitness::NotAdmissible(Aw::CompositionEscapes { first, second }) => json!({
            "kind": "composition_escapes_class",
            "first": cat.arrow_name(*first),
            "second": cat.arrow_name(*second),
        }),
        GcWitness::NotLocal { arrow, family } => json!({
            "kind": "class_not_local",
            "arrow": cat.arrow_name(*arrow),
            "covering": family.iter().map(|&a| cat.arrow_name(a)).collect::<Vec<_>>(),
        }),
        GcWitness::NoClassRefinement { object, covering } => json!({
            "kind": "no_class_refinement",
            "object": cat.object_name(*object),
            "covering": covering.arrows.iter().map(|&a| cat.arrow_name(a)).collect::<Vec<_>>(),
        }),
        GcWitness::NotLocallyCartesian { arrow } => json!({
            "kind": "class_not_locally_cartesian",
            "arrow": cat.arrow_name(*arrow),
        }),
    }
}

pub fn open_immersion_witness_value(
    cat: &FiniteCategory,
    target: &Presheaf,
    w: &OpenImmersionWitness,
) -> Value {
    match w {
        OpenImmersionWitness::NotMono { object, section } => json!({
            "kind": "pullback_not_mono",
            "object": cat.object_name(*object),
            "section": target.label(*object, *section),
        }),
        OpenImmersionWitness::ImageNotClassGenerated { object, section } => json!({
            "kind": "image_not_class_generated",
            "object": cat.object_name(*object),
            "section": target.label(*object, *section),
        }),
    }
}

pub fn section_witness_value(cat: &FiniteCategory, target: &Presheaf, w: &SectionWitness) -> Value {
    json!({
        "object": cat.object_name(w.object),
        "section": target.label(w.object, w.section),
    })
}

pub fn atlas_value(cat: &FiniteCategory, x: &Presheaf, atlas: &Atlas) -> Value {
    json!({
        "charts": atlas
            .charts
            .iter()
            .map(|&(u, s)| json!({
                "object": cat.object_name(u),
                "section": x.label(u, s),
            }))
            .collect::<Vec<_>>(),
    })
}

pub fn sections_value(cat: &FiniteCategory, f: &Presheaf) -> Value {
    let mut map = serde_json::Map::new();
    for u in cat.objects() {
        map.insert(
            cat.object_name(u).to_string(),
            json!(f.labels[u.0].iter().collect::<Vec<_>>()),
        );
    }
    Value::Object(map)
}
