//! Geometric contexts: validation of the six context conditions, contexts
//! generated from finite topological spaces, the open-immersion and
//! class-morphism decision procedures on sheaves, atlases, elementary-scheme
//! recognition, schematic morphisms, fibred products, and gluing.
//!
//! The existential searches in the definitions are canonicalized: a family of
//! arrows (or charts) with a property exists exactly when the maximal
//! candidate family has it, because the verdicts are monotone in the family.
//! That removes exponential search; the budget guards the remaining
//! chart-by-chart work.

use std::collections::{BTreeMap, BTreeSet};

use crate::cat::{ArrId, FiniteCategory, ObjId};
use crate::presheaf::{
    evaluate_at_identity, image_subpresheaf, yoneda, yoneda_arrow, yoneda_correspond, yoneda_map,
    Morphism, Presheaf, Sieve, Subpresheaf,
};
use crate::sheaf_ops::{
    quotient_by_relation, saturate, sheaf_coproduct,
    sheaf_product, sheaf_pullback, subsheaf_union, validate_equivalence_relation,
};
use crate::topology::{is_subcanonical, Family, Site};
use crate::{charge, fixtures, Error};

/// Search budget for the chart searches, counting candidate charts examined.
pub const DEFAULT_BUDGET: u64 = 10_000;

/// A class of arrows of the ambient category (the class **P**, or a generic S).
pub type ArrowClass = BTreeSet<ArrId>;

pub fn all_arrows_class(cat: &FiniteCategory) -> ArrowClass {
    cat.all_arrows().collect()
}

pub fn identities_class(cat: &FiniteCategory) -> ArrowClass {
    cat.objects().map(|u| cat.id(u)).collect()
}

/// Witness for a failed admissibility condition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AdmissibleWitness {
    IdentityMissing { object: ObjId },
    /// A cartesian square over `p_arrow` along `along` whose pulled-back
    /// arrow escapes the class.
    BaseChangeEscapes { p_arrow: ArrId, along: ArrId, pulled: ArrId },
    CompositionEscapes { first: ArrId, second: ArrId },
}

/// Identities, stability under base change, stability under composition.
/// On success also reports the derived fact that all isomorphisms lie in the
/// class.
pub fn validate_admissible(
    cat: &FiniteCategory,
    class: &ArrowClass,
) -> Result<bool, AdmissibleWitness> {
    for u in cat.objects() {
        if !class.contains(&cat.id(u)) {
            return Err(AdmissibleWitness::IdentityMissing { object: u });
        }
    }
    for &phi in class {
        for &psi in cat.arrows_into(cat.dst(phi)) {
            for w in cat.pullback_witnesses(phi, psi) {
                if !class.contains(&w.to_second) {
                    return Err(AdmissibleWitness::BaseChangeEscapes {
                        p_arrow: phi,
                        along: psi,
                        pulled: w.to_second,
                    });
                }
            }
        }
    }
    for &phi in class {
        for &psi in class {
            if cat.dst(phi) == cat.src(psi) && !class.contains(&cat.compose(psi, phi)) {
                return Err(AdmissibleWitness::CompositionEscapes { first: phi, second: psi });
            }
        }
    }
    let isos_in_class = cat.all_arrows().filter(|&f| cat.is_iso(f)).all(|f| class.contains(&f));
    Ok(isos_in_class)
}

/// Witness for a failed context condition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GcWitness {
    MissingTerminal,
    MissingProduct { first: ObjId, second: ObjId },
    NotSubcanonical { object: ObjId },
    NotAdmissible(AdmissibleWitness),
    /// An arrow outside the class, locally in it on the recorded covering family.
    NotLocal { arrow: ArrId, family: Family },
    /// A covering sieve with no class-refinement.
    NoClassRefinement { object: ObjId, covering: Sieve },
    /// A class arrow with no covering making the composites cartesian.
    NotLocallyCartesian { arrow: ArrId },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GcVerdict {
    pub ok: bool,
    pub witness: Option<GcWitness>,
}

impl GcVerdict {
    fn pass() -> GcVerdict {
        GcVerdict { ok: true, witness: None }
    }

    fn fail(witness: GcWitness) -> GcVerdict {
        GcVerdict { ok: false, witness: Some(witness) }
    }
}

/// The six verdicts, in order GC1–GC6.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ContextReport {
    pub gc: Vec<GcVerdict>,
    /// Derived fact reported when admissibility passes.
    pub isos_in_class: Option<bool>,
}

impl ContextReport {
    pub fn all_ok(&self) -> bool {
        self.gc.iter().all(|v| v.ok)
    }
}

/// Checks GC1–GC6 for the triple (site, class); every check is exhaustive.
pub fn validate_geometric_context(site: &Site, class: &ArrowClass) -> ContextReport {
    let cat = &site.cat;
    // GC1: finite products = terminal + all binary products
    let gc1 = if cat.terminal().is_none() {
        GcVerdict::fail(GcWitness::MissingTerminal)
    } else {
        let mut verdict = GcVerdict::pass();
        'outer: for a in cat.objects() {
            for b in cat.objects() {
                if cat.product(a, b).is_none() {
                    verdict = GcVerdict::fail(GcWitness::MissingProduct { first: a, second: b });
                    break 'outer;
                }
            }
        }
        verdict
    };
    // GC2: subcanonicity
    let gc2 = match is_subcanonical(site) {
        Ok(v) if v.ok => GcVerdict::pass(),
        Ok(v) => GcVerdict::fail(GcWitness::NotSubcanonical {
            object: v.witness.map(|w| w.object()).unwrap_or(ObjId(0)),
        }),
        Err(_) => GcVerdict::fail(GcWitness::NotSubcanonical { object: ObjId(0) }),
    };
    // GC3: admissibility
    let (gc3, isos_in_class) = match validate_admissible(cat, class) {
        Ok(isos) => (GcVerdict::pass(), Some(isos)),
        Err(w) => (GcVerdict::fail(GcWitness::NotAdmissible(w)), None),
    };
    // GC4: locality of the class. An arrow fails when the maximal candidate
    // family (class members with class composites) covers.
    let mut gc4 = GcVerdict::pass();
    'gc4: for phi in cat.all_arrows() {
        if class.contains(&phi) {
            continue;
        }
        let u = cat.src(phi);
        let family: Family = cat
            .arrows_into(u)
            .iter()
            .copied()
            .filter(|&rho| class.contains(&rho) && class.contains(&cat.compose(phi, rho)))
            .collect();
        let sieve = Sieve::generated_by(cat, u, &family).expect("arrows into u");
        if site.topology.is_covering(&sieve) {
            gc4 = GcVerdict::fail(GcWitness::NotLocal { arrow: phi, family });
            break 'gc4;
        }
    }
    // GC5: every covering sieve admits a class-refinement that still covers
    let mut gc5 = GcVerdict::pass();
    'gc5: for u in cat.objects() {
        for r in &site.topology.covering[u.0] {
            let refinement: Family =
                r.arrows.iter().copied().filter(|a| class.contains(a)).collect();
            let sieve = Sieve::generated_by(cat, u, &refinement).expect("arrows into u");
            if !site.topology.is_covering(&sieve) {
                gc5 = GcVerdict::fail(GcWitness::NoClassRefinement {
                    object: u,
                    covering: r.clone(),
                });
                break 'gc5;
            }
        }
    }
    // GC6: class arrows are locally cartesian
    let mut gc6 = GcVerdict::pass();
    'gc6: for &phi in class {
        let u = cat.src(phi);
        let family: Family = cat
            .arrows_into(u)
            .iter()
            .copied()
            .filter(|&rho| class.contains(&rho) && cat.is_cartesian(cat.compose(phi, rho)))
            .collect();
        let sieve = Sieve::generated_by(cat, u, &family).expect("arrows into u");
        if !site.topology.is_covering(&sieve) {
            gc6 = GcVerdict::fail(GcWitness::NotLocallyCartesian { arrow: phi });
            break 'gc6;
        }
    }
    ContextReport { gc: vec![gc1, gc2, gc3, gc4, gc5, gc6], isos_in_class }
}

/// A validated triple (C, J, **P**), with the saturated images of the
/// representable maps of class arrows cached per target object.
#[derive(Clone, Debug)]
pub struct GeometricContext {
    pub site: Site,
    pub class_p: ArrowClass,
    class_images: Vec<Vec<(ArrId, Subpresheaf)>>,
}

impl GeometricContext {
    pub fn new(site: Site, class_p: ArrowClass) -> Result<GeometricContext, Box<ContextReport>> {
        let report = validate_geometric_context(&site, &class_p);
        if !report.all_ok() {
            return Err(Box::new(report));
        }
        let class_images = site
            .cat
            .objects()
            .map(|u| {
                site.cat
                    .arrows_into(u)
                    .iter()
                    .copied()
                    .filter(|a| class_p.contains(a))
                    .map(|a| {
                        let image = image_subpresheaf(&yoneda_map(&site.cat, a));
                        (a, saturate(&site, &yoneda(&site.cat, u), &image))
                    })
                    .collect()
            })
            .collect();
        Ok(GeometricContext { site, class_p, class_images })
    }

    pub fn cat(&self) -> &FiniteCategory {
        &self.site.cat
    }

    pub fn in_class(&self, a: ArrId) -> bool {
        self.class_p.contains(&a)
    }
}

/// Builds the geometric context of a finite topological space: the poset of
/// opens, the open-cover topology, and the class of all inclusions (every
/// inclusion of opens is a local morphism here).
pub fn context_from_finite_space(
    points: &[&str],
    opens: &[&[usize]],
) -> Result<GeometricContext, Error> {
    let n = points.len();
    let mut sets: Vec<BTreeSet<usize>> = Vec::new();
    for open in opens {
        let set: BTreeSet<usize> = open.iter().copied().collect();
        if let Some(&bad) = set.iter().find(|&&p| p >= n) {
            return Err(Error::NotATopology(format!("open refers to unknown point #{}", bad)));
        }
        if !sets.contains(&set) {
            sets.push(set);
        }
    }
    let render = |s: &BTreeSet<usize>| {
        let names: Vec<&str> = s.iter().map(|&p| points[p]).collect();
        format!("{{{}}}", names.join(","))
    };
    let full: BTreeSet<usize> = (0..n).collect();
    if !sets.contains(&BTreeSet::new()) {
        return Err(Error::NotATopology("the empty set is not open".into()));
    }
    if !sets.contains(&full) {
        return Err(Error::NotATopology("the full point set is not open".into()));
    }
    for a in &sets {
        for b in &sets {
            let union: BTreeSet<usize> = a.union(b).copied().collect();
            if !sets.contains(&union) {
                return Err(Error::NotATopology(format!(
                    "union of {} and {} is not open",
                    render(a),
                    render(b)
                )));
            }
            let meet: BTreeSet<usize> = a.intersection(b).copied().collect();
            if !sets.contains(&meet) {
                return Err(Error::NotATopology(format!(
                    "intersection of {} and {} is not open",
                    render(a),
                    render(b)
                )));
            }
        }
    }
    let as_slices: Vec<Vec<usize>> = sets.iter().map(|s| s.iter().copied().collect()).collect();
    let as_refs: Vec<&[usize]> = as_slices.iter().map(|v| v.as_slice()).collect();
    let (cat, sorted) = fixtures::poset_of_opens_with_sets(points, &as_refs);
    let cov = fixtures::open_cover_pretopology(&cat, &sorted);
    let site = Site::from_pretopology(cat, cov)
        .map_err(|v| Error::Internal(format!("open-cover site failed validation: {:?}", v)))?;
    let class = all_arrows_class(&site.cat);
    GeometricContext::new(site, class)
        .map_err(|r| Error::Internal(format!("finite-space context failed a check: {:?}", r)))
}

/// The point context: one object, identity arrow, minimal topology.
pub fn point_context() -> GeometricContext {
    let site = fixtures::point_site();
    let class = all_arrows_class(&site.cat);
    GeometricContext::new(site, class).expect("point context is valid")
}

pub fn interval_context() -> GeometricContext {
    context_from_finite_space(&["x", "m", "y"], &[&[], &[0], &[2], &[0, 2], &[0, 1, 2]])
        .expect("interval context is valid")
}

pub fn sierpinski_context() -> GeometricContext {
    context_from_finite_space(&["p0", "p1"], &[&[], &[1], &[0, 1]])
        .expect("sierpinski context is valid")
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum OpenImmersionWitness {
    /// The pullback against the section (object, index) is not a monomorphism.
    NotMono { object: ObjId, section: usize },
    /// The pullback image is not the union of class-arrow images inside it.
    ImageNotClassGenerated { object: ObjId, section: usize },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OpenImmersionVerdict {
    pub ok: bool,
    pub witness: Option<OpenImmersionWitness>,
}

/// Open-immersion test: for every section h_U → G, the pullback
/// F ×_G h_U → h_U must be a monomorphism whose image equals the union of the
/// images of every class arrow contained in it. The empty union is the
/// initial subobject, so the empty family is admitted.
pub fn is_open_immersion(
    ctx: &GeometricContext,
    f: &Morphism,
) -> Result<OpenImmersionVerdict, Error> {
    let site = &ctx.site;
    let cat = ctx.cat();
    for u in cat.objects() {
        let h_u = yoneda(cat, u);
        for g_idx in 0..f.dst.size(u) {
            let g = yoneda_correspond(cat, &f.dst, u, g_idx)?;
            let (_, _, to_hu) = sheaf_pullback(site, f, &g)?;
            if to_hu.map.is_pointwise_injective(&to_hu.src).is_some() {
                return Ok(OpenImmersionVerdict {
                    ok: false,
                    witness: Some(OpenImmersionWitness::NotMono { object: u, section: g_idx }),
                });
            }
            let image = saturate(site, &h_u, &image_subpresheaf(&to_hu));
            let candidates: Vec<Subpresheaf> = ctx.class_images[u.0]
                .iter()
                .filter(|(_, im)| im.is_subset(&image))
                .map(|(_, im)| im.clone())
                .collect();
            let union = subsheaf_union(site, &h_u, &candidates)?;
            if union != image {
                return Ok(OpenImmersionVerdict {
                    ok: false,
                    witness: Some(OpenImmersionWitness::ImageNotClassGenerated {
                        object: u,
                        section: g_idx,
                    }),
                });
            }
        }
    }
    Ok(OpenImmersionVerdict { ok: true, witness: None })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SectionWitness {
    pub object: ObjId,
    pub section: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ClassMorphismVerdict {
    pub ok: bool,
    pub witness: Option<SectionWitness>,
}

/// S-morphism test: for every section h_U → G, the pullback F ×_G h_U must
/// admit an open atlas whose composites into U lie in S. The maximal
/// eligible chart family is an atlas exactly when some family is.
pub fn is_class_morphism_of_sheaves(
    ctx: &GeometricContext,
    class_s: &ArrowClass,
    f: &Morphism,
    budget: &mut u64,
) -> Result<ClassMorphismVerdict, Error> {
    let site = &ctx.site;
    let cat = ctx.cat();
    for u in cat.objects() {
        for g_idx in 0..f.dst.size(u) {
            let g = yoneda_correspond(cat, &f.dst, u, g_idx)?;
            let (apex, _, to_hu) = sheaf_pullback(site, f, &g)?;
            let mut images = Vec::new();
            for v in cat.objects() {
                for t in 0..apex.size(v) {
                    charge(budget, 1)?;
                    let composite = yoneda_arrow(cat, u, v, to_hu.map.apply(v, t));
                    if !class_s.contains(&composite) {
                        continue;
                    }
                    let chart = yoneda_correspond(cat, &apex, v, t)?;
                    if is_open_immersion(ctx, &chart)?.ok {
                        images.push(image_subpresheaf(&chart));
                    }
                }
            }
            let union = subsheaf_union(site, &apex, &images)?;
            if !union.is_full(&apex) {
                return Ok(ClassMorphismVerdict {
                    ok: false,
                    witness: Some(SectionWitness { object: u, section: g_idx }),
                });
            }
        }
    }
    Ok(ClassMorphismVerdict { ok: true, witness: None })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AtlasKind {
    Open,
    ClassMorphism,
}

/// A family of representable charts h_{U_i} → X, jointly epimorphic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Atlas {
    pub kind: AtlasKind,
    /// (chart object, section of X at it) per chart.
    pub charts: Vec<(ObjId, usize)>,
}

impl Atlas {
    pub fn chart_morphism(
        &self,
        ctx: &GeometricContext,
        x: &Presheaf,
        i: usize,
    ) -> Result<Morphism, Error> {
        let (u, s) = self.charts[i];
        yoneda_correspond(ctx.cat(), x, u, s)
    }
}

/// Searches for an open atlas: eligible charts are the sections whose
/// transformation is an open immersion. If the full eligible family is not
/// jointly epimorphic no atlas exists; otherwise a minimal subfamily is
/// extracted greedily in canonical order.
pub fn find_open_atlas(
    ctx: &GeometricContext,
    x: &Presheaf,
    budget: &mut u64,
) -> Result<Option<Atlas>, Error> {
    find_atlas_by(ctx, x, budget, AtlasKind::Open)
}

/// Same search with class-morphism charts.
pub fn find_class_atlas(
    ctx: &GeometricContext,
    x: &Presheaf,
    budget: &mut u64,
) -> Result<Option<Atlas>, Error> {
    find_atlas_by(ctx, x, budget, AtlasKind::ClassMorphism)
}

fn find_atlas_by(
    ctx: &GeometricContext,
    x: &Presheaf,
    budget: &mut u64,
    kind: AtlasKind,
) -> Result<Option<Atlas>, Error> {
    let site = &ctx.site;
    let cat = ctx.cat();
    let mut eligible: Vec<((ObjId, usize), Subpresheaf)> = Vec::new();
    for v in cat.objects() {
        for t in 0..x.size(v) {
            charge(budget, 1)?;
            let chart = yoneda_correspond(cat, x, v, t)?;
            let good = match kind {
                AtlasKind::Open => is_open_immersion(ctx, &chart)?.ok,
                AtlasKind::ClassMorphism => {
                    is_class_morphism_of_sheaves(ctx, &ctx.class_p, &chart, budget)?.ok
                }
            };
            if good {
                eligible.push(((v, t), image_subpresheaf(&chart)));
            }
        }
    }
    let all: Vec<Subpresheaf> = eligible.iter().map(|(_, im)| im.clone()).collect();
    if !subsheaf_union(site, x, &all)?.is_full(x) {
        return Ok(None);
    }
    // greedy forward pass in canonical order, then a backward prune
    let mut chosen: Vec<usize> = Vec::new();
    let mut acc = Subpresheaf::empty(cat);
    for (i, (_, im)) in eligible.iter().enumerate() {
        if saturate(site, x, &acc).is_full(x) {
            break;
        }
        let grown = acc.union(im);
        if grown != acc {
            acc = grown;
            chosen.push(i);
        }
    }
    if !saturate(site, x, &acc).is_full(x) {
        // a chart adding no pointwise section can still matter after closure
        for (i, (_, im)) in eligible.iter().enumerate() {
            if !chosen.contains(&i) {
                acc = acc.union(im);
                chosen.push(i);
            }
            if saturate(site, x, &acc).is_full(x) {
                break;
            }
        }
    }
    let mut keep = chosen.clone();
    let mut i = 0;
    while i < keep.len() {
        let mut trimmed = keep.clone();
        trimmed.remove(i);
        let subs: Vec<Subpresheaf> =
            trimmed.iter().map(|&k| eligible[k].1.clone()).collect();
        if subsheaf_union(site, x, &subs)?.is_full(x) {
            keep = trimmed;
        } else {
            i += 1;
        }
    }
    let charts = keep.into_iter().map(|k| eligible[k].0).collect();
    Ok(Some(Atlas { kind, charts }))
}

/// Validates that a chart family is an atlas of `x` of the requested kind.
pub fn validate_atlas(
    ctx: &GeometricContext,
    x: &Presheaf,
    atlas: &Atlas,
    budget: &mut u64,
) -> Result<(), Error> {
    let site = &ctx.site;
    let cat = ctx.cat();
    let mut images = Vec::new();
    for &(v, t) in &atlas.charts {
        let chart = yoneda_correspond(cat, x, v, t)?;
        let good = match atlas.kind {
            AtlasKind::Open => is_open_immersion(ctx, &chart)?.ok,
            AtlasKind::ClassMorphism => {
                is_class_morphism_of_sheaves(ctx, &ctx.class_p, &chart, budget)?.ok
            }
        };
        if !good {
            return Err(Error::NotAnOpenAtlas {
                chart: format!("{}#{}", cat.object_name(v), x.label(v, t)),
            });
        }
        images.push(image_subpresheaf(&chart));
    }
    if !subsheaf_union(site, x, &images)?.is_full(x) {
        return Err(Error::NotAnOpenAtlas { chart: "(family is not jointly epimorphic)".into() });
    }
    Ok(())
}

pub fn is_elementary_scheme(
    ctx: &GeometricContext,
    x: &Presheaf,
    budget: &mut u64,
) -> Result<bool, Error> {
    Ok(find_open_atlas(ctx, x, budget)?.is_some())
}

pub fn is_geometric_sheaf(
    ctx: &GeometricContext,
    x: &Presheaf,
    budget: &mut u64,
) -> Result<bool, Error> {
    Ok(find_class_atlas(ctx, x, budget)?.is_some())
}

/// Schematic test: every pullback against a representable section is an
/// elementary scheme.
pub fn is_schematic_morphism(
    ctx: &GeometricContext,
    f: &Morphism,
    budget: &mut u64,
) -> Result<ClassMorphismVerdict, Error> {
    let cat = ctx.cat();
    for u in cat.objects() {
        for g_idx in 0..f.dst.size(u) {
            let g = yoneda_correspond(cat, &f.dst, u, g_idx)?;
            let (apex, _, _) = sheaf_pullback(&ctx.site, f, &g)?;
            if !is_elementary_scheme(ctx, &apex, budget)? {
                return Ok(ClassMorphismVerdict {
                    ok: false,
                    witness: Some(SectionWitness { object: u, section: g_idx }),
                });
            }
        }
    }
    Ok(ClassMorphismVerdict { ok: true, witness: None })
}

/// Fibred product of elementary schemes over a common base, with an atlas for
/// the result. Requires the ambient category to admit pullbacks.
pub fn scheme_fibred_product(
    ctx: &GeometricContext,
    f: &Morphism,
    g: &Morphism,
    budget: &mut u64,
) -> Result<(Presheaf, Morphism, Morphism, Atlas), Error> {
    let cat = ctx.cat();
    if let Some((a, b)) = cat.has_all_pullbacks() {
        return Err(Error::PullbacksMissingInC {
            f: cat.arrow_name(a).to_string(),
            g: cat.arrow_name(b).to_string(),
        });
    }
    for (name, sheaf) in [("first factor", &f.src), ("second factor", &g.src), ("base", &f.dst)] {
        if !is_elementary_scheme(ctx, sheaf, budget)? {
            return Err(Error::NotAScheme(name.to_string()));
        }
    }
    let (apex, p1, p2) = sheaf_pullback(&ctx.site, f, g)?;
    let atlas = find_open_atlas(ctx, &apex, budget)?.ok_or_else(|| {
        Error::Internal("fibred product of schemes did not yield an atlas".into())
    })?;
    Ok((apex, p1, p2, atlas))
}

/// Gluing data: chart objects U_i and overlap subobjects
/// R_ij ⊆ h_{U_i} × h_{U_j}, given pointwise as pairs of hom-set indices.
/// Missing diagonal blocks default to the diagonal; missing transposes to the
/// transpose; missing off-diagonal blocks to the empty subobject.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GluingData {
    pub charts: Vec<ObjId>,
    pub overlaps: BTreeMap<(usize, usize), Vec<BTreeSet<(usize, usize)>>>,
}

impl GluingData {
    pub fn new(charts: Vec<ObjId>) -> GluingData {
        GluingData { charts, overlaps: BTreeMap::new() }
    }

    pub fn set_overlap(
        &mut self,
        i: usize,
        j: usize,
        table: Vec<BTreeSet<(usize, usize)>>,
    ) {
        self.overlaps.insert((i, j), table);
    }

    /// The overlap table for (i, j) after applying the defaults.
    fn block(&self, cat: &FiniteCategory, i: usize, j: usize) -> Vec<BTreeSet<(usize, usize)>> {
        if let Some(table) = self.overlaps.get(&(i, j)) {
            return table.clone();
        }
        if let Some(table) = self.overlaps.get(&(j, i)) {
            return table
                .iter()
                .map(|set| set.iter().map(|&(a, b)| (b, a)).collect())
                .collect();
        }
        if i == j {
            let u = self.charts[i];
            return cat
                .objects()
                .map(|w| (0..cat.hom(w, u).len()).map(|s| (s, s)).collect())
                .collect();
        }
        vec![BTreeSet::new(); cat.object_count()]
    }
}

/// The result of gluing: the quotient sheaf, its chart atlas, and the chart
/// morphisms' target description.
pub struct Glued {
    pub sheaf: Presheaf,
    pub atlas: Atlas,
    /// Canonical quotient map from the chart coproduct.
    pub projection: Morphism,
}

/// Validates the gluing conditions and builds the glued sheaf as the quotient
/// of the chart coproduct by the assembled relation.
pub fn glue(ctx: &GeometricContext, data: &GluingData, budget: &mut u64) -> Result<Glued, Error> {
    let site = &ctx.site;
    let cat = ctx.cat();
    let n = data.charts.len();
    let parts: Vec<Presheaf> = data.charts.iter().map(|&u| yoneda(cat, u)).collect();
    for (&(i, j), table) in &data.overlaps {
        if i >= n || j >= n {
            return Err(Error::Shape(format!("overlap ({},{}) out of range", i, j)));
        }
        if table.len() != cat.object_count() {
            return Err(Error::Shape(format!("overlap ({},{}) has wrong length", i, j)));
        }
        for w in cat.objects() {
            for &(a, b) in &table[w.0] {
                if a >= parts[i].size(w) || b >= parts[j].size(w) {
                    return Err(Error::Shape(format!(
                        "overlap ({},{}) escapes the hom-sets at `{}`",
                        i,
                        j,
                        cat.object_name(w)
                    )));
                }
            }
        }
    }
    // (a) the carrier is the coproduct of the charts
    let (carrier, inclusions) = sheaf_coproduct(site, &parts)?;
    // assemble the relation: saturated union of the block images in X×X
    let (product, _, _) = sheaf_product(site, &carrier, &carrier)?;
    let blocks: BTreeMap<(usize, usize), Vec<BTreeSet<(usize, usize)>>> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| ((i, j), data.block(cat, i, j)))
        .collect();
    let mut raw = Subpresheaf::empty(cat);
    for ((i, j), table) in &blocks {
        for w in cat.objects() {
            for &(a, b) in &table[w.0] {
                let xa = inclusions[*i].map.apply(w, a);
                let xb = inclusions[*j].map.apply(w, b);
                raw.insert(w, xa * carrier.size(w) + xb);
            }
        }
    }
    let rel_sub = saturate(site, &product, &raw);
    let rel_pairs: Vec<BTreeSet<(usize, usize)>> = cat
        .objects()
        .map(|w| {
            rel_sub.sections[w.0]
                .iter()
                .map(|&code| (code / carrier.size(w), code % carrier.size(w)))
                .collect()
        })
        .collect();
    // (b) blocks are the pullbacks of the relation and their first
    // projections are open immersions
    for ((i, j), table) in &blocks {
        let hi = &parts[*i];
        let hj = &parts[*j];
        let (block_product, _, _) = sheaf_product(site, hi, hj)?;
        let given = Subpresheaf {
            sections: cat
                .objects()
                .map(|w| table[w.0].iter().map(|&(a, b)| a * hj.size(w) + b).collect())
                .collect(),
        };
        let given = saturate(site, &block_product, &given);
        let pulled = Subpresheaf {
            sections: cat
                .objects()
                .map(|w| {
                    (0..hi.size(w))
                        .flat_map(|a| (0..hj.size(w)).map(move |b| (a, b)))
                        .filter(|&(a, b)| {
                            let xa = inclusions[*i].map.apply(w, a);
                            let xb = inclusions[*j].map.apply(w, b);
                            rel_pairs[w.0].contains(&(xa, xb))
                        })
                        .map(|(a, b)| a * hj.size(w) + b)
                        .collect()
                })
                .collect(),
        };
        if given != pulled {
            return Err(Error::GluingConditionViolated {
                condition: 'b',
                witness: format!("overlap ({},{}) is not the pullback of the relation", i, j),
            });
        }
        // first projection of the block must be an open immersion
        let (block_presheaf, block_incl) = given.to_presheaf(cat, &block_product);
        let _ = block_incl;
        let proj = Morphism {
            src: block_presheaf.clone(),
            dst: hi.clone(),
            map: crate::presheaf::NatTrans {
                component: cat
                    .objects()
                    .map(|w| {
                        given.sections[w.0].iter().map(|&code| code / hj.size(w)).collect()
                    })
                    .collect(),
            },
        };
        if !is_open_immersion(ctx, &proj)?.ok {
            return Err(Error::GluingConditionViolated {
                condition: 'b',
                witness: format!(
                    "projection of overlap ({},{}) to `{}` is not an open immersion",
                    i,
                    j,
                    cat.object_name(data.charts[*i])
                ),
            });
        }
        // (c) diagonal blocks are the diagonal
        if i == j {
            let diagonal = Subpresheaf {
                sections: cat
                    .objects()
                    .map(|w| (0..hi.size(w)).map(|a| a * hj.size(w) + a).collect())
                    .collect(),
            };
            let diagonal = saturate(site, &block_product, &diagonal);
            if given != diagonal {
                return Err(Error::GluingConditionViolated {
                    condition: 'c',
                    witness: format!(
                        "overlap ({},{}) is not the diagonal of `{}`",
                        i,
                        i,
                        cat.object_name(data.charts[*i])
                    ),
                });
            }
        }
    }
    // (d) the assembled relation is an equivalence relation
    let relation = validate_equivalence_relation(site, &carrier, &rel_pairs).map_err(|e| {
        Error::GluingConditionViolated { condition: 'd', witness: e.to_string() }
    })?;
    let (quotient, projection) = quotient_by_relation(site, &relation)?;
    let charts: Vec<(ObjId, usize)> = data
        .charts
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let composite = projection.compose(&inclusions[i]);
            (u, evaluate_at_identity(cat, u, &composite.map))
        })
        .collect();
    let atlas = Atlas { kind: AtlasKind::Open, charts };
    validate_atlas(ctx, &quotient, &atlas, budget)
        .map_err(|e| Error::Internal(format!("glued atlas failed validation: {}", e)))?;
    Ok(Glued { sheaf: quotient, atlas, projection })
}

/// Reads gluing data off a scheme with an open atlas: overlaps are the
/// pairwise pullbacks of the charts.
pub fn decompose(
    ctx: &GeometricContext,
    x: &Presheaf,
    atlas: &Atlas,
    budget: &mut u64,
) -> Result<GluingData, Error> {
    let cat = ctx.cat();
    validate_atlas(ctx, x, atlas, budget)?;
    let mut data = GluingData::new(atlas.charts.iter().map(|&(u, _)| u).collect());
    for (i, &(ui, ti)) in atlas.charts.iter().enumerate() {
        for (j, &(uj, tj)) in atlas.charts.iter().enumerate() {
            let table: Vec<BTreeSet<(usize, usize)>> = cat
                .objects()
                .map(|w| {
                    let homs_i = cat.hom(w, ui);
                    let homs_j = cat.hom(w, uj);
                    homs_i
                        .iter()
                        .enumerate()
                        .flat_map(|(a, &phi)| {
                            homs_j.iter().enumerate().filter_map(move |(b, &psi)| {
                                if x.apply(phi, ti) == x.apply(psi, tj) {
                                    Some((a, b))
                                } else {
                                    None
                                }
                            })
                        })
                        .collect()
                })
                .collect();
            data.set_overlap(i, j, table);
        }
    }
    Ok(data)
}

/// Base change of an elementary scheme along a schematic morphism:
/// X' = S' ×_S X, re-verified to be a scheme.
pub fn base_change_scheme(
    ctx: &GeometricContext,
    f: &Morphism,
    p: &Morphism,
    budget: &mut u64,
) -> Result<(Presheaf, Morphism, Morphism, bool), Error> {
    if f.dst != p.dst {
        return Err(Error::Shape("base change legs must share a target".into()));
    }
    if !is_schematic_morphism(ctx, f, budget)?.ok {
        return Err(Error::Shape("base change along a non-schematic morphism".into()));
    }
    let (apex, to_s_prime, to_x) = sheaf_pullback(&ctx.site, f, p)?;
    let verdict = is_elementary_scheme(ctx, &apex, budget)?;
    Ok((apex, to_s_prime, to_x, verdict))
}
