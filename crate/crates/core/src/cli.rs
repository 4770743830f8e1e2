//! Command execution: parse a document, compile it, run one check or
//! computation, and assemble a deterministic report.
//!
//! Exit codes: 0 every check passed, 1 some check failed, 2 a search was
//! inconclusive (budget), 3 the input could not be parsed or compiled.

use serde_json::json;

use crate::dsl::{self, CompileError, Workspace};
use crate::geometry::{
    self, decompose, find_open_atlas, glue, is_class_morphism_of_sheaves,
    is_open_immersion, is_schematic_morphism, scheme_fibred_product, validate_geometric_context,
    GeometricContext,
};
use crate::presheaf::{Morphism, Presheaf};
use crate::report::{
    atlas_value, gc_witness_value, open_immersion_witness_value, section_witness_value,
    sections_value, sheaf_witness_value, Report, Status,
};
use crate::sheaf_ops::{is_epimorphism, is_monomorphism};
use crate::topology::{is_sheaf, sheafify, Site, SiteViolation};
use crate::Error as EngineError;

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub budget: u64,
    pub witnesses: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { budget: geometry::DEFAULT_BUDGET, witnesses: false }
    }
}

/// An input problem: parse or compile diagnostics, exit code 3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic(pub String);

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const COMMANDS: [&str; 12] = [
    "validate-context",
    "check-sheaf",
    "sheafify",
    "check-epi",
    "check-mono",
    "check-open-immersion",
    "check-p-morphism",
    "check-schematic",
    "is-scheme",
    "glue",
    "decompose",
    "fibre-product",
];

/// Runs one command against a document. Returns the report; its exit code is
/// derived from the verdict statuses.
pub fn execute(
    command: &str,
    text: &str,
    args: &[String],
    opts: &RunOptions,
) -> Result<Report, Diagnostic> {
    let doc = dsl::parse(text).map_err(|e| Diagnostic(e.to_string()))?;
    if command == "validate-context" {
        return validate_context_command(&doc);
    }
    let ws = dsl::compile(&doc).map_err(|e| Diagnostic(e.to_string()))?;
    let ctx = dsl::context_of(&ws).map_err(Diagnostic)?;
    let mut budget = opts.budget;
    let mut report = Report::new(command);
    match command {
        "check-sheaf" => {
            let (name, f) = resolve_presheaf(&ws, args.first())?;
            let verdict = engine(is_sheaf(&ctx.site, f))?;
            match verdict.witness {
                None => report.pass(&format!("sheaf({})", name)),
                Some(w) => report.fail(
                    &format!("sheaf({})", name),
                    sheaf_witness_value(ctx.cat(), f, &w),
                ),
            }
        }
        "sheafify" => {
            let (name, f) = resolve_presheaf(&ws, args.first())?;
            let (sheaf, unit) = sheafify(&ctx.site, f);
            report.pass(&format!("sheafify({})", name));
            report.push(
                "result",
                Status::Pass,
                Some(json!({
                    "sections": sections_value(ctx.cat(), &sheaf),
                    "unit_is_iso": unit.map.is_pointwise_bijective(f, &sheaf),
                })),
            );
        }
        "check-epi" => {
            let (name, m) = resolve_morphism(&ws, args.first())?;
            require_sheaf_endpoints(&ctx, &ws, name)?;
            let verdict = engine(is_epimorphism(&ctx.site, m))?;
            match verdict.witness {
                None => report.pass(&format!("epi({})", name)),
                Some((u, s)) => report.fail(
                    &format!("epi({})", name),
                    json!({
                        "kind": "section_not_locally_hit",
                        "object": ctx.cat().object_name(u),
                        "section": m.dst.label(u, s),
                    }),
                ),
            }
        }
        "check-mono" => {
            let (name, m) = resolve_morphism(&ws, args.first())?;
            require_sheaf_endpoints(&ctx, &ws, name)?;
            let verdict = engine(is_monomorphism(&ctx.site, m))?;
            match verdict.witness {
                None => report.pass(&format!("mono({})", name)),
                Some((u, s, t)) => report.fail(
                    &format!("mono({})", name),
                    json!({
                        "kind": "sections_identified",
                        "object": ctx.cat().object_name(u),
                        "first": m.src.label(u, s),
                        "second": m.src.label(u, t),
                    }),
                ),
            }
        }
        "check-open-immersion" => {
            let (name, m) = resolve_morphism(&ws, args.first())?;
            require_sheaf_endpoints(&ctx, &ws, name)?;
            let verdict = engine(is_open_immersion(&ctx, m))?;
            match verdict.witness {
                None => report.pass(&format!("open-immersion({})", name)),
                Some(w) => report.fail(
                    &format!("open-immersion({})", name),
                    open_immersion_witness_value(ctx.cat(), &m.dst, &w),
                ),
            }
        }
        "check-p-morphism" => {
            let (name, m) = resolve_morphism(&ws, args.first())?;
            require_sheaf_endpoints(&ctx, &ws, name)?;
            let check = format!("p-morphism({})", name);
            match is_class_morphism_of_sheaves(&ctx, &ctx.class_p, m, &mut budget) {
                Ok(v) if v.ok => report.pass(&check),
                Ok(v) => report.fail(
                    &check,
                    section_witness_value(ctx.cat(), &m.dst, &v.witness.unwrap()),
                ),
                Err(EngineError::SearchBudgetExceeded) => {
                    report.push(&check, Status::Inconclusive, None)
                }
                Err(e) => return Err(Diagnostic(e.to_string())),
            }
        }
        "check-schematic" => {
            let (name, m) = resolve_morphism(&ws, args.first())?;
            require_sheaf_endpoints(&ctx, &ws, name)?;
            let check = format!("schematic({})", name);
            match is_schematic_morphism(&ctx, m, &mut budget) {
                Ok(v) if v.ok => report.pass(&check),
                Ok(v) => report.fail(
                    &check,
                    section_witness_value(ctx.cat(), &m.dst, &v.witness.unwrap()),
                ),
                Err(EngineError::SearchBudgetExceeded) => {
                    report.push(&check, Status::Inconclusive, None)
                }
                Err(e) => return Err(Diagnostic(e.to_string())),
            }
        }
        "is-scheme" => {
            let (name, sheaf) = resolve_sheaf_like(&ws, &ctx, args.first(), &mut budget)?;
            let check = format!("scheme({})", name);
            match find_open_atlas(&ctx, &sheaf, &mut budget) {
                Ok(Some(atlas)) => {
                    let witness = opts
                        .witnesses
                        .then(|| atlas_value(ctx.cat(), &sheaf, &atlas));
                    report.push(&check, Status::Pass, witness);
                }
                Ok(None) => report.fail(&check, json!({ "kind": "no_open_atlas" })),
                Err(EngineError::SearchBudgetExceeded) => {
                    report.push(&check, Status::Inconclusive, None)
                }
                Err(e) => return Err(Diagnostic(e.to_string())),
            }
        }
        "glue" => {
            let (name, data) = resolve_gluing(&ws, args.first())?;
            let check = format!("glue({})", name);
            match glue(&ctx, data, &mut budget) {
                Ok(glued) => {
                    report.pass(&check);
                    report.push(
                        "result",
                        Status::Pass,
                        Some(json!({
                            "sections": sections_value(ctx.cat(), &glued.sheaf),
                            "atlas": atlas_value(ctx.cat(), &glued.sheaf, &glued.atlas),
                        })),
                    );
                }
                Err(EngineError::GluingConditionViolated { condition, witness }) => {
                    report.fail(
                        &check,
                        json!({ "kind": "gluing_condition", "condition": condition.to_string(), "detail": witness }),
                    );
                }
                Err(EngineError::SearchBudgetExceeded) => {
                    report.push(&check, Status::Inconclusive, None)
                }
                Err(e) => return Err(Diagnostic(e.to_string())),
            }
        }
        "decompose" => {
            let (name, sheaf) = resolve_sheaf_like(&ws, &ctx, args.first(), &mut budget)?;
            let check = format!("decompose({})", name);
            match find_open_atlas(&ctx, &sheaf, &mut budget) {
                Ok(Some(atlas)) => {
                    let data = decompose(&ctx, &sheaf, &atlas, &mut budget)
                        .map_err(|e| Diagnostic(e.to_string()))?;
                    report.pass(&check);
                    let overlaps: Vec<_> = data
                        .overlaps
                        .iter()
                        .map(|(&(i, j), table)| {
                            json!({
                                "pair": [i + 1, j + 1],
                                "sections": table.iter().map(|s| s.len()).sum::<usize>(),
                            })
                        })
                        .collect();
                    report.push(
                        "result",
                        Status::Pass,
                        Some(json!({
                            "charts": data
                                .charts
                                .iter()
                                .map(|&u| ctx.cat().object_name(u))
                                .collect::<Vec<_>>(),
                            "overlaps": overlaps,
                        })),
                    );
                }
                Ok(None) => report.fail(&check, json!({ "kind": "no_open_atlas" })),
                Err(EngineError::SearchBudgetExceeded) => {
                    report.push(&check, Status::Inconclusive, None)
                }
                Err(e) => return Err(Diagnostic(e.to_string())),
            }
        }
        "fibre-product" => {
            let (fname, f) = resolve_morphism(&ws, args.first())?;
            let (gname, g) = resolve_morphism(&ws, args.get(1))?;
            require_sheaf_endpoints(&ctx, &ws, fname)?;
            require_sheaf_endpoints(&ctx, &ws, gname)?;
            let check = format!("fibre-product({},{})", fname, gname);
            match scheme_fibred_product(&ctx, f, g, &mut budget) {
                Ok((apex, _, _, atlas)) => {
                    report.pass(&check);
                    report.push(
                        "result",
                        Status::Pass,
                        Some(json!({
                            "sections": sections_value(ctx.cat(), &apex),
                            "atlas": atlas_value(ctx.cat(), &apex, &atlas),
                        })),
                    );
                }
                Err(EngineError::PullbacksMissingInC { f, g }) => report.fail(
                    &check,
                    json!({ "kind": "pullbacks_missing", "cospan": [f, g] }),
                ),
                Err(EngineError::NotAScheme(which)) => {
                    report.fail(&check, json!({ "kind": "not_a_scheme", "input": which }))
                }
                Err(EngineError::SearchBudgetExceeded) => {
                    report.push(&check, Status::Inconclusive, None)
                }
                Err(e) => return Err(Diagnostic(e.to_string())),
            }
        }
        other => {
            return Err(Diagnostic(format!(
                "unknown command `{}`; expected one of {}",
                other,
                COMMANDS.join(", ")
            )))
        }
    }
    Ok(report)
}

fn validate_context_command(doc: &dsl::ContextDocument) -> Result<Report, Diagnostic> {
    let mut report = Report::new("validate-context");
    let ws = match dsl::compile(doc) {
        Ok(ws) => ws,
        Err(CompileError::Category(e)) => {
            report.fail("category", json!({ "kind": "category_law", "detail": e.to_string() }));
            return Ok(report);
        }
        Err(CompileError::Engine(EngineError::NotATopology(msg))) => {
            report.fail("space", json!({ "kind": "not_a_topology", "detail": msg }));
            return Ok(report);
        }
        Err(e) => return Err(Diagnostic(e.to_string())),
    };
    report.pass("category");
    let site = match Site::from_pretopology(ws.cat.clone(), ws.pretopology.clone()) {
        Ok(site) => site,
        Err(SiteViolation::Pretopology(v)) => {
            report.fail(
                "pretopology",
                json!({ "kind": "pretopology_axiom", "detail": v.describe(&ws.cat) }),
            );
            return Ok(report);
        }
        Err(SiteViolation::Topology(v)) => {
            report.pass("pretopology");
            report.fail(
                "topology",
                json!({ "kind": "topology_axiom", "detail": v.describe(&ws.cat) }),
            );
            return Ok(report);
        }
    };
    report.pass("pretopology");
    report.pass("topology");
    let gc_report = validate_geometric_context(&site, &ws.class);
    for (i, verdict) in gc_report.gc.iter().enumerate() {
        let check = format!("gc{}", i + 1);
        match &verdict.witness {
            None => report.pass(&check),
            Some(w) => report.fail(&check, gc_witness_value(&site.cat, w)),
        }
    }
    if let Some(isos) = gc_report.isos_in_class {
        report.push(
            "isos-in-class",
            if isos { Status::Pass } else { Status::Fail },
            None,
        );
    }
    Ok(report)
}

fn engine<T>(result: Result<T, EngineError>) -> Result<T, Diagnostic> {
    result.map_err(|e| Diagnostic(e.to_string()))
}

fn resolve_presheaf<'a>(
    ws: &'a Workspace,
    arg: Option<&String>,
) -> Result<(&'a str, &'a Presheaf), Diagnostic> {
    match arg {
        Some(name) => ws
            .presheaves
            .iter()
            .find(|(n, _)| n == name)
            .map(|(n, p)| (n.as_str(), p))
            .ok_or_else(|| Diagnostic(format!("no presheaf named `{}`", name))),
        None => match ws.presheaves.as_slice() {
            [(n, p)] => Ok((n.as_str(), p)),
            [] => Err(Diagnostic("the document declares no presheaf".into())),
            _ => Err(Diagnostic("several presheaves declared; name one".into())),
        },
    }
}

fn resolve_morphism<'a>(
    ws: &'a Workspace,
    arg: Option<&String>,
) -> Result<(&'a str, &'a Morphism), Diagnostic> {
    match arg {
        Some(name) => ws
            .morphisms
            .iter()
            .find(|(n, _, _, _)| n == name)
            .map(|(n, _, _, m)| (n.as_str(), m))
            .ok_or_else(|| Diagnostic(format!("no morphism named `{}`", name))),
        None => match ws.morphisms.as_slice() {
            [(n, _, _, m)] => Ok((n.as_str(), m)),
            [] => Err(Diagnostic("the document declares no morphism".into())),
            _ => Err(Diagnostic("several morphisms declared; name one".into())),
        },
    }
}

fn resolve_gluing<'a>(
    ws: &'a Workspace,
    arg: Option<&String>,
) -> Result<(&'a str, &'a geometry::GluingData), Diagnostic> {
    match arg {
        Some(name) => ws
            .gluings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(n, g)| (n.as_str(), g))
            .ok_or_else(|| Diagnostic(format!("no gluing named `{}`", name))),
        None => match ws.gluings.as_slice() {
            [(n, g)] => Ok((n.as_str(), g)),
            [] => Err(Diagnostic("the document declares no gluing".into())),
            _ => Err(Diagnostic("several gluings declared; name one".into())),
        },
    }
}

/// A sheaf argument is either a declared presheaf (which must be a sheaf) or
/// the result of a declared gluing. With no argument, a sole gluing wins,
/// then a sole presheaf.
fn resolve_sheaf_like(
    ws: &Workspace,
    ctx: &GeometricContext,
    arg: Option<&String>,
    budget: &mut u64,
) -> Result<(String, Presheaf), Diagnostic> {
    let from_gluing = |name: &str, data: &geometry::GluingData, budget: &mut u64| {
        glue(ctx, data, budget)
            .map(|glued| (name.to_string(), glued.sheaf))
            .map_err(|e| Diagnostic(format!("gluing `{}` failed: {}", name, e)))
    };
    let from_presheaf = |name: &str, p: &Presheaf| {
        let verdict = engine(is_sheaf(&ctx.site, p))?;
        if verdict.ok {
            Ok((name.to_string(), p.clone()))
        } else {
            Err(Diagnostic(format!(
                "presheaf `{}` is not a sheaf; run check-sheaf for the witness",
                name
            )))
        }
    };
    match arg {
        Some(name) => {
            if let Some((n, data)) = ws.gluings.iter().find(|(n, _)| n == name) {
                return from_gluing(n, data, budget);
            }
            if let Some((n, p)) = ws.presheaves.iter().find(|(n, _)| n == name) {
                return from_presheaf(n, p);
            }
            Err(Diagnostic(format!("no sheaf or gluing named `{}`", name)))
        }
        None => {
            if let [(n, data)] = ws.gluings.as_slice() {
                return from_gluing(n, data, budget);
            }
            if let [(n, p)] = ws.presheaves.as_slice() {
                return from_presheaf(n, p);
            }
            Err(Diagnostic("name a presheaf or gluing to inspect".into()))
        }
    }
}

fn require_sheaf_endpoints(
    ctx: &GeometricContext,
    ws: &Workspace,
    morphism: &str,
) -> Result<(), Diagnostic> {
    let (_, src_name, dst_name, m) = ws
        .morphisms
        .iter()
        .find(|(n, _, _, _)| n == morphism)
        .expect("resolved earlier");
    for (name, p) in [(src_name, &m.src), (dst_name, &m.dst)] {
        if !engine(is_sheaf(&ctx.site, p))?.ok {
            return Err(Diagnostic(format!(
                "presheaf `{}` is not a sheaf; the check requires sheaf endpoints",
                name
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const INT: &str = "space { points x m y; open; open x; open y; open x y; open x m y }";

    #[test]
    fn validate_context_passes_on_interval_space() {
        let report = execute("validate-context", INT, &[], &RunOptions::default()).unwrap();
        assert_eq!(report.exit_code(), 0);
        assert_eq!(report.verdicts.len(), 10);
    }

    #[test]
    fn json_reports_are_byte_identical_across_runs() {
        let opts = RunOptions::default();
        let a = execute("validate-context", INT, &[], &opts).unwrap().to_json();
        let b = execute("validate-context", INT, &[], &opts).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_command_is_diagnosed() {
        assert!(execute("frobnicate", INT, &[], &RunOptions::default()).is_err());
    }

    #[test]
    fn missing_name_is_diagnosed() {
        let err = execute("check-sheaf", INT, &[], &RunOptions::default()).unwrap_err();
        assert!(err.0.contains("no presheaf"));
    }
}
