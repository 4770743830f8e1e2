//! Grothendieck pretopologies and topologies on a finite category, the sheaf
//! condition, and sheafification by the double plus-construction.
//!
//! Covering sieves are materialized as explicit sets, so the axioms reduce to
//! set operations. The set J(U) is finite and closed under intersection, so it
//! has a least element; the plus-construction colimit over covering sieves
//! collapses to the matching families of that least sieve.

use std::collections::{BTreeMap, BTreeSet};

use crate::cat::{ArrId, FiniteCategory, ObjId};
use crate::presheaf::{
    all_sieves_on, enumerate_nat_trans, yoneda, Morphism, NatTrans, Presheaf, Sieve,
};
use crate::{sheaf_ops, Error};

/// A finite family of arrows into a common object, with set semantics.
pub type Family = BTreeSet<ArrId>;

/// Covering families per object; the generating structure of a topology.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pretopology {
    pub covers: Vec<BTreeSet<Family>>,
}

impl Pretopology {
    pub fn empty(cat: &FiniteCategory) -> Pretopology {
        Pretopology { covers: vec![BTreeSet::new(); cat.object_count()] }
    }

    /// The minimal pretopology: only singleton isomorphism covers.
    pub fn chaotic(cat: &FiniteCategory) -> Pretopology {
        let mut p = Pretopology::empty(cat);
        for f in cat.all_arrows() {
            if cat.is_iso(f) {
                p.covers[cat.dst(f).0].insert([f].into());
            }
        }
        p
    }

    pub fn add(&mut self, u: ObjId, family: Family) {
        self.covers[u.0].insert(family);
    }
}

/// First failed pretopology axiom, with a concrete witness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PretopologyViolation {
    BadTarget { object: ObjId, arrow: ArrId },
    MemberNotCartesian { object: ObjId, family: Family, arrow: ArrId },
    PullbackUnstable { object: ObjId, family: Family, along: ArrId },
    CompositionNotClosed { object: ObjId, family: Family, composite: Family },
    IsoSingletonMissing { arrow: ArrId },
}

impl PretopologyViolation {
    pub fn describe(&self, cat: &FiniteCategory) -> String {
        let fam = |f: &Family| {
            let names: Vec<&str> = f.iter().map(|&a| cat.arrow_name(a)).collect();
            format!("[{}]", names.join(" "))
        };
        match self {
            PretopologyViolation::BadTarget { object, arrow } => format!(
                "family member `{}` does not target `{}`",
                cat.arrow_name(*arrow),
                cat.object_name(*object)
            ),
            PretopologyViolation::MemberNotCartesian { object, family, arrow } => format!(
                "axiom 1: member `{}` of {} covering `{}` is not cartesian",
                cat.arrow_name(*arrow),
                fam(family),
                cat.object_name(*object)
            ),
            PretopologyViolation::PullbackUnstable { object, family, along } => format!(
                "axiom 2: no pullback of {} covering `{}` along `{}` is a covering",
                fam(family),
                cat.object_name(*object),
                cat.arrow_name(*along)
            ),
            PretopologyViolation::CompositionNotClosed { object, family, composite } => format!(
                "axiom 3: composite {} of refinements of {} is not a covering of `{}`",
                fam(composite),
                fam(family),
                cat.object_name(*object)
            ),
            PretopologyViolation::IsoSingletonMissing { arrow } => format!(
                "axiom 4: the isomorphism singleton [{}] is not a covering",
                cat.arrow_name(*arrow)
            ),
        }
    }
}

/// Checks the four pretopology axioms exhaustively, in order.
pub fn validate_pretopology(
    cat: &FiniteCategory,
    cov: &Pretopology,
) -> Result<(), PretopologyViolation> {
    if cov.covers.len() != cat.object_count() {
        return Err(PretopologyViolation::BadTarget { object: ObjId(0), arrow: ArrId(0) });
    }
    for u in cat.objects() {
        for family in &cov.covers[u.0] {
            if let Some(&bad) = family.iter().find(|&&a| cat.dst(a) != u) {
                return Err(PretopologyViolation::BadTarget { object: u, arrow: bad });
            }
        }
    }
    // axiom 1: members are cartesian
    for u in cat.objects() {
        for family in &cov.covers[u.0] {
            for &rho in family {
                if !cat.is_cartesian(rho) {
                    return Err(PretopologyViolation::MemberNotCartesian {
                        object: u,
                        family: family.clone(),
                        arrow: rho,
                    });
                }
            }
        }
    }
    // axiom 2: stability under pullback, over every choice of pullback witnesses
    for u in cat.objects() {
        for family in &cov.covers[u.0] {
            for &phi in cat.arrows_into(u) {
                let v = cat.src(phi);
                let choices: Vec<BTreeSet<ArrId>> = family
                    .iter()
                    .map(|&rho| {
                        cat.pullback_witnesses(rho, phi)
                            .into_iter()
                            .map(|w| w.to_second)
                            .collect()
                    })
                    .collect();
                let mut candidates: BTreeSet<Family> = BTreeSet::new();
                candidates.insert(Family::new());
                for legs in &choices {
                    let mut next = BTreeSet::new();
                    for partial in &candidates {
                        for &leg in legs {
                            let mut fam = partial.clone();
                            fam.insert(leg);
                            next.insert(fam);
                        }
                    }
                    candidates = next;
                }
                if !candidates.iter().any(|fam| cov.covers[v.0].contains(fam)) {
                    return Err(PretopologyViolation::PullbackUnstable {
                        object: u,
                        family: family.clone(),
                        along: phi,
                    });
                }
            }
        }
    }
    // axiom 3: closure under composition of refinements
    for u in cat.objects() {
        for family in &cov.covers[u.0] {
            let members: Vec<ArrId> = family.iter().copied().collect();
            let mut stack: Vec<(usize, Family)> = vec![(0, Family::new())];
            while let Some((i, acc)) = stack.pop() {
                if i == members.len() {
                    if !cov.covers[u.0].contains(&acc) {
                        return Err(PretopologyViolation::CompositionNotClosed {
                            object: u,
                            family: family.clone(),
                            composite: acc,
                        });
                    }
                    continue;
                }
                let rho = members[i];
                for refinement in &cov.covers[cat.src(rho).0] {
                    let mut acc2 = acc.clone();
                    for &sigma in refinement {
                        acc2.insert(cat.compose(rho, sigma));
                    }
                    stack.push((i + 1, acc2));
                }
            }
        }
    }
    // axiom 4: isomorphism singletons
    for f in cat.all_arrows() {
        if cat.is_iso(f) && !cov.covers[cat.dst(f).0].contains(&Family::from([f])) {
            return Err(PretopologyViolation::IsoSingletonMissing { arrow: f });
        }
    }
    Ok(())
}

/// Covering sieves per object, materialized.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Topology {
    pub covering: Vec<BTreeSet<Sieve>>,
}

impl Topology {
    /// The minimal topology: only the maximal sieve covers.
    pub fn minimal(cat: &FiniteCategory) -> Topology {
        Topology {
            covering: cat.objects().map(|u| [Sieve::maximal(cat, u)].into()).collect(),
        }
    }

    pub fn is_covering(&self, sieve: &Sieve) -> bool {
        self.covering[sieve.anchor.0].contains(sieve)
    }
}

/// J(U) = sieves containing a sieve generated by some covering family.
pub fn topology_from_pretopology(cat: &FiniteCategory, cov: &Pretopology) -> Topology {
    let covering = cat
        .objects()
        .map(|u| {
            let generated: Vec<Sieve> = cov.covers[u.0]
                .iter()
                .map(|fam| Sieve::generated_by(cat, u, fam).expect("validated families"))
                .collect();
            all_sieves_on(cat, u)
                .into_iter()
                .filter(|r| generated.iter().any(|g| g.is_subset(r)))
                .collect()
        })
        .collect();
    Topology { covering }
}

/// First failed topology axiom, with a concrete witness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TopologyViolation {
    MalformedSieve { object: ObjId, sieve: Sieve },
    Stability { arrow: ArrId, sieve: Sieve },
    Transitivity { object: ObjId, covering: Sieve, candidate: Sieve },
    MaximalMissing { object: ObjId },
}

impl TopologyViolation {
    pub fn describe(&self, cat: &FiniteCategory) -> String {
        let sieve = |s: &Sieve| {
            let names: Vec<&str> = s.arrows.iter().map(|&a| cat.arrow_name(a)).collect();
            format!("{{{}}}", names.join(" "))
        };
        match self {
            TopologyViolation::MalformedSieve { object, sieve: s } => format!(
                "sieve {} on `{}` is not closed under precomposition",
                sieve(s),
                cat.object_name(*object)
            ),
            TopologyViolation::Stability { arrow, sieve: s } => format!(
                "axiom 1: pullback of covering sieve {} along `{}` is not covering",
                sieve(s),
                cat.arrow_name(*arrow)
            ),
            TopologyViolation::Transitivity { object, covering, candidate } => format!(
                "axiom 2: sieve {} on `{}` covers locally on {} but is not covering",
                sieve(candidate),
                cat.object_name(*object),
                sieve(covering)
            ),
            TopologyViolation::MaximalMissing { object } => format!(
                "axiom 3: the maximal sieve on `{}` is not covering",
                cat.object_name(*object)
            ),
        }
    }
}

/// Checks the three topology axioms exhaustively, in order.
pub fn validate_topology(cat: &FiniteCategory, j: &Topology) -> Result<(), TopologyViolation> {
    for u in cat.objects() {
        for sieve in &j.covering[u.0] {
            if sieve.anchor != u
                || !sieve.is_closed(cat)
                || sieve.arrows.iter().any(|&a| cat.dst(a) != u)
            {
                return Err(TopologyViolation::MalformedSieve { object: u, sieve: sieve.clone() });
            }
        }
    }
    // the maximal-sieve axiom is checked first so that a dropped maximal
    // sieve is reported at its own object, not as a stability failure elsewhere
    for u in cat.objects() {
        if !j.is_covering(&Sieve::maximal(cat, u)) {
            return Err(TopologyViolation::MaximalMissing { object: u });
        }
    }
    for v in cat.objects() {
        for r in &j.covering[v.0] {
            for &phi in cat.arrows_into(v) {
                let pulled = r.pullback(cat, phi).expect("anchors match");
                if !j.is_covering(&pulled) {
                    return Err(TopologyViolation::Stability { arrow: phi, sieve: r.clone() });
                }
            }
        }
    }
    for u in cat.objects() {
        let all = all_sieves_on(cat, u);
        for r in &j.covering[u.0] {
            for s in &all {
                if j.is_covering(s) {
                    continue;
                }
                let locally = r.arrows.iter().all(|&phi| {
                    let pulled = s.pullback(cat, phi).expect("anchors match");
                    j.is_covering(&pulled)
                });
                if locally {
                    return Err(TopologyViolation::Transitivity {
                        object: u,
                        covering: r.clone(),
                        candidate: s.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Why a site failed to assemble.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SiteViolation {
    Pretopology(PretopologyViolation),
    Topology(TopologyViolation),
}

impl SiteViolation {
    pub fn describe(&self, cat: &FiniteCategory) -> String {
        match self {
            SiteViolation::Pretopology(v) => v.describe(cat),
            SiteViolation::Topology(v) => v.describe(cat),
        }
    }
}

/// A validated site (C, J), with the generating pretopology when one was given
/// and the least covering sieve of every object precomputed.
#[derive(Clone, Debug)]
pub struct Site {
    pub cat: FiniteCategory,
    pub topology: Topology,
    pub pretopology: Option<Pretopology>,
    min_cover: Vec<Sieve>,
}

impl Site {
    /// Builds the site generated by a pretopology; both layers are validated.
    pub fn from_pretopology(
        cat: FiniteCategory,
        cov: Pretopology,
    ) -> Result<Site, SiteViolation> {
        validate_pretopology(&cat, &cov).map_err(SiteViolation::Pretopology)?;
        let topology = topology_from_pretopology(&cat, &cov);
        validate_topology(&cat, &topology).map_err(SiteViolation::Topology)?;
        Ok(Site::assemble(cat, topology, Some(cov)))
    }

    /// Wraps an explicit topology after validating it.
    pub fn from_topology(cat: FiniteCategory, topology: Topology) -> Result<Site, SiteViolation> {
        validate_topology(&cat, &topology).map_err(SiteViolation::Topology)?;
        Ok(Site::assemble(cat, topology, None))
    }

    fn assemble(cat: FiniteCategory, topology: Topology, cov: Option<Pretopology>) -> Site {
        let min_cover = cat
            .objects()
            .map(|u| {
                let mut iter = topology.covering[u.0].iter();
                let first = iter.next().expect("maximal sieve always covers").clone();
                iter.fold(first, |acc, s| acc.intersect(s))
            })
            .collect();
        Site { cat, topology, pretopology: cov, min_cover }
    }

    /// The least covering sieve on `u` (the intersection of all of J(u)).
    pub fn min_cover(&self, u: ObjId) -> &Sieve {
        &self.min_cover[u.0]
    }
}

/// How a presheaf failed the sheaf condition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SheafWitness {
    /// Two distinct sections restrict identically on a covering sieve.
    NotSeparated { object: ObjId, sieve: Sieve, first: usize, second: usize },
    /// A matching family (arrow → section of the arrow's source) has no
    /// amalgamation.
    NoAmalgamation { object: ObjId, sieve: Sieve, assignments: Vec<(ArrId, usize)> },
}

impl SheafWitness {
    pub fn object(&self) -> ObjId {
        match self {
            SheafWitness::NotSeparated { object, .. } => *object,
            SheafWitness::NoAmalgamation { object, .. } => *object,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SheafVerdict {
    pub ok: bool,
    pub witness: Option<SheafWitness>,
}

/// Matching families of F over a sieve, i.e. morphisms from the sieve's
/// presheaf into F, in a canonical enumeration order.
pub fn matching_families(cat: &FiniteCategory, sieve: &Sieve, f: &Presheaf) -> Vec<NatTrans> {
    enumerate_nat_trans(cat, &sieve.to_presheaf(cat), f)
}

fn restriction_family(cat: &FiniteCategory, sieve: &Sieve, f: &Presheaf, s: usize) -> NatTrans {
    let component = cat
        .objects()
        .map(|v| {
            sieve
                .arrows
                .iter()
                .copied()
                .filter(|&a| cat.src(a) == v)
                .map(|a| f.apply(a, s))
                .collect()
        })
        .collect();
    NatTrans { component }
}

fn check_sieve_condition(
    cat: &FiniteCategory,
    sieve: &Sieve,
    f: &Presheaf,
) -> Option<SheafWitness> {
    let u = sieve.anchor;
    let families = matching_families(cat, sieve, f);
    let mut hit: BTreeMap<&NatTrans, usize> = BTreeMap::new();
    for s in 0..f.size(u) {
        let fam = restriction_family(cat, sieve, f, s);
        let idx = families.iter().position(|m| *m == fam).expect("restriction matches");
        if let Some(&prev) = hit.get(&families[idx]) {
            return Some(SheafWitness::NotSeparated {
                object: u,
                sieve: sieve.clone(),
                first: prev,
                second: s,
            });
        }
        hit.insert(&families[idx], s);
    }
    for m in &families {
        if !hit.contains_key(m) {
            let arrows: Vec<ArrId> = sieve.arrows.iter().copied().collect();
            let assignments = arrows
                .iter()
                .map(|&a| {
                    let v = cat.src(a);
                    let pos = sieve
                        .arrows
                        .iter()
                        .copied()
                        .filter(|&b| cat.src(b) == v)
                        .position(|b| b == a)
                        .unwrap();
                    (a, m.component[v.0][pos])
                })
                .collect();
            return Some(SheafWitness::NoAmalgamation {
                object: u,
                sieve: sieve.clone(),
                assignments,
            });
        }
    }
    None
}

fn check_cover_condition(
    cat: &FiniteCategory,
    u: ObjId,
    family: &Family,
    f: &Presheaf,
) -> Option<SheafWitness> {
    let members: Vec<ArrId> = family.iter().copied().collect();
    // one pullback witness per ordered pair; agreement transfers across
    // isomorphic witnesses
    let overlaps: Vec<Vec<Option<(ArrId, ArrId)>>> = members
        .iter()
        .map(|&rho| {
            members
                .iter()
                .map(|&tau| cat.pullback(rho, tau).map(|w| (w.to_first, w.to_second)))
                .collect()
        })
        .collect();
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new()];
    for (i, &rho) in members.iter().enumerate() {
        let mut next = Vec::new();
        for partial in &assignments {
            'candidate: for s in 0..f.size(cat.src(rho)) {
                for j in 0..=i {
                    let sj = if j == i { s } else { partial[j] };
                    if let Some((p1, p2)) = overlaps[j][i] {
                        if f.apply(p1, sj) != f.apply(p2, s) {
                            continue 'candidate;
                        }
                    }
                    if j < i {
                        if let Some((p1, p2)) = overlaps[i][j] {
                            if f.apply(p1, s) != f.apply(p2, sj) {
                                continue 'candidate;
                            }
                        }
                    }
                }
                let mut ext = partial.clone();
                ext.push(s);
                next.push(ext);
            }
        }
        assignments = next;
    }
    for matching in &assignments {
        let glues: Vec<usize> = (0..f.size(u))
            .filter(|&s| {
                members.iter().enumerate().all(|(i, &rho)| f.apply(rho, s) == matching[i])
            })
            .collect();
        if glues.len() != 1 {
            let sieve = Sieve::generated_by(cat, u, family).expect("family targets u");
            if glues.len() > 1 {
                return Some(SheafWitness::NotSeparated {
                    object: u,
                    sieve,
                    first: glues[0],
                    second: glues[1],
                });
            }
            return Some(SheafWitness::NoAmalgamation {
                object: u,
                sieve,
                assignments: members.iter().copied().zip(matching.iter().copied()).collect(),
            });
        }
    }
    None
}

/// Sheaf test: sections over every object biject with matching families over
/// every covering sieve. With a generating pretopology present the
/// matching-family formulation over Cov is evaluated as well and the two
/// verdicts are required to agree.
pub fn is_sheaf(site: &Site, f: &Presheaf) -> Result<SheafVerdict, Error> {
    let cat = &site.cat;
    let mut sieve_witness = None;
    'outer: for u in cat.objects() {
        for sieve in &site.topology.covering[u.0] {
            if let Some(w) = check_sieve_condition(cat, sieve, f) {
                sieve_witness = Some(w);
                break 'outer;
            }
        }
    }
    if let Some(cov) = &site.pretopology {
        let mut cover_witness = None;
        'outer2: for u in cat.objects() {
            for family in &cov.covers[u.0] {
                if let Some(w) = check_cover_condition(cat, u, family, f) {
                    cover_witness = Some(w);
                    break 'outer2;
                }
            }
        }
        if cover_witness.is_some() != sieve_witness.is_some() {
            return Err(Error::Internal(
                "sieve and covering-family sheaf tests disagree".into(),
            ));
        }
    }
    Ok(SheafVerdict { ok: sieve_witness.is_none(), witness: sieve_witness })
}

/// One plus-construction step: sections at U are matching families over the
/// least covering sieve of U.
pub fn plus(site: &Site, f: &Presheaf) -> (Presheaf, NatTrans) {
    let cat = &site.cat;
    let arrows_by_src: Vec<Vec<Vec<ArrId>>> = cat
        .objects()
        .map(|u| {
            cat.objects()
                .map(|v| {
                    site.min_cover(u)
                        .arrows
                        .iter()
                        .copied()
                        .filter(|&a| cat.src(a) == v)
                        .collect()
                })
                .collect()
        })
        .collect();
    let families: Vec<Vec<NatTrans>> = cat
        .objects()
        .map(|u| matching_families(cat, site.min_cover(u), f))
        .collect();
    let index: Vec<BTreeMap<&NatTrans, usize>> = families
        .iter()
        .map(|fs| fs.iter().enumerate().map(|(i, m)| (m, i)).collect())
        .collect();
    let labels = families
        .iter()
        .map(|fs| (0..fs.len()).map(|i| format!("p{}", i)).collect())
        .collect();
    let restrict = cat
        .all_arrows()
        .map(|arr| {
            let (v, u) = (cat.src(arr), cat.dst(arr));
            families[u.0]
                .iter()
                .map(|m| {
                    let component = cat
                        .objects()
                        .map(|w| {
                            arrows_by_src[v.0][w.0]
                                .iter()
                                .map(|&psi| {
                                    let composed = cat.compose(arr, psi);
                                    let pos = arrows_by_src[u.0][w.0]
                                        .iter()
                                        .position(|&x| x == composed)
                                        .expect("least sieve pulls back into itself");
                                    m.component[w.0][pos]
                                })
                                .collect()
                        })
                        .collect();
                    index[v.0][&NatTrans { component }]
                })
                .collect()
        })
        .collect();
    let plus = Presheaf { labels, restrict };
    let unit = NatTrans {
        component: cat
            .objects()
            .map(|u| {
                (0..f.size(u))
                    .map(|s| {
                        let fam = restriction_family(cat, site.min_cover(u), f, s);
                        index[u.0][&fam]
                    })
                    .collect()
            })
            .collect(),
    };
    (plus, unit)
}

/// Sheafification a(F) = (F⁺)⁺ with its unit F → a(F).
pub fn sheafify(site: &Site, f: &Presheaf) -> (Presheaf, Morphism) {
    let (once, eta1) = plus(site, f);
    let (twice, eta2) = plus(site, &once);
    let unit = Morphism { src: f.clone(), dst: twice.clone(), map: eta2.compose(&eta1) };
    (twice, unit)
}

/// Extends t: F → G along one plus step, for G a sheaf.
fn extend_plus(
    site: &Site,
    f: &Presheaf,
    f_plus: &Presheaf,
    g: &Presheaf,
    t: &NatTrans,
) -> Result<NatTrans, Error> {
    let cat = &site.cat;
    let component = cat
        .objects()
        .map(|u| {
            let sieve = site.min_cover(u);
            let arrows: Vec<ArrId> = sieve.arrows.iter().copied().collect();
            let families = matching_families(cat, sieve, f);
            debug_assert_eq!(families.len(), f_plus.size(u));
            families
                .iter()
                .map(|m| {
                    let glues: Vec<usize> = (0..g.size(u))
                        .filter(|&s| {
                            arrows.iter().all(|&a| {
                                let v = cat.src(a);
                                let pos = sieve
                                    .arrows
                                    .iter()
                                    .copied()
                                    .filter(|&b| cat.src(b) == v)
                                    .position(|b| b == a)
                                    .unwrap();
                                g.apply(a, s) == t.component[v.0][m.component[v.0][pos]]
                            })
                        })
                        .collect();
                    match glues.as_slice() {
                        [s] => Ok(*s),
                        _ => Err(Error::Internal(
                            "plus extension did not glue uniquely in a sheaf".into(),
                        )),
                    }
                })
                .collect::<Result<Vec<usize>, Error>>()
        })
        .collect::<Result<Vec<Vec<usize>>, Error>>()?;
    Ok(NatTrans { component })
}

/// The unique u: a(F) → G with u ∘ η = t, for G a sheaf.
pub fn extend_along_unit(
    site: &Site,
    f: &Presheaf,
    g: &Presheaf,
    t: &NatTrans,
) -> Result<NatTrans, Error> {
    let (once, _) = plus(site, f);
    let (twice, _) = plus(site, &once);
    let step1 = extend_plus(site, f, &once, g, t)?;
    extend_plus(site, &once, &twice, g, &step1)
}

/// Subcanonicity: every representable is a sheaf.
pub fn is_subcanonical(site: &Site) -> Result<SheafVerdict, Error> {
    for u in site.cat.objects() {
        let verdict = is_sheaf(site, &yoneda(&site.cat, u))?;
        if !verdict.ok {
            return Ok(verdict);
        }
    }
    Ok(SheafVerdict { ok: true, witness: None })
}

/// A family covers iff its generated sieve is covering. On subcanonical sites
/// the verdict is cross-checked against the sheaf-epimorphism criterion.
pub fn is_covering_family(site: &Site, u: ObjId, family: &Family) -> Result<bool, Error> {
    let sieve = Sieve::generated_by(&site.cat, u, family)?;
    let covering = site.topology.is_covering(&sieve);
    if is_subcanonical(site)?.ok {
        let members: Vec<ArrId> = family.iter().copied().collect();
        let parts: Vec<Presheaf> =
            members.iter().map(|&a| yoneda(&site.cat, site.cat.src(a))).collect();
        let legs: Vec<Morphism> =
            members.iter().map(|&a| crate::presheaf::yoneda_map(&site.cat, a)).collect();
        let h_u = yoneda(&site.cat, u);
        let (_, _, induced) = sheaf_ops::coproduct_cotuple(site, &parts, &legs, &h_u)?;
        let epi = sheaf_ops::is_epimorphism(site, &induced)?;
        if epi.ok != covering {
            return Err(Error::Internal(
                "covering verdict disagrees with the sheaf-epimorphism test".into(),
            ));
        }
    }
    Ok(covering)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::presheaf::find_isomorphism;

    fn interval_site() -> Site {
        fixtures::interval_site()
    }

    fn sierpinski_site() -> Site {
        fixtures::sierpinski_site()
    }

    #[test]
    fn point_pretopology_passes() {
        let cat = fixtures::point_category();
        let mut cov = Pretopology::empty(&cat);
        cov.add(ObjId(0), [cat.id(ObjId(0))].into());
        assert!(validate_pretopology(&cat, &cov).is_ok());
    }

    #[test]
    fn interval_open_cover_pretopology_passes() {
        interval_site();
    }

    #[test]
    fn lone_point_cover_fails_an_axiom() {
        let cat = fixtures::interval_category();
        let xy = cat.object_by_name("x_y").unwrap();
        let x = cat.object_by_name("x").unwrap();
        let mut cov = Pretopology::chaotic(&cat);
        cov.add(xy, [cat.hom(x, xy)[0]].into());
        let err = validate_pretopology(&cat, &cov).unwrap_err();
        assert!(matches!(err, PretopologyViolation::PullbackUnstable { .. }));
    }

    #[test]
    fn point_topology_is_maximal_only() {
        let cat = fixtures::point_category();
        let mut cov = Pretopology::empty(&cat);
        cov.add(ObjId(0), [cat.id(ObjId(0))].into());
        let j = topology_from_pretopology(&cat, &cov);
        assert_eq!(j.covering[0].len(), 1);
        assert!(j.is_covering(&Sieve::maximal(&cat, ObjId(0))));
    }

    #[test]
    fn interval_topology_contains_generated_and_maximal() {
        let site = interval_site();
        let cat = &site.cat;
        let xy = cat.object_by_name("x_y").unwrap();
        let x = cat.object_by_name("x").unwrap();
        let y = cat.object_by_name("y").unwrap();
        let fam: Family = [cat.hom(x, xy)[0], cat.hom(y, xy)[0]].into();
        let gen = Sieve::generated_by(cat, xy, &fam).unwrap();
        assert!(site.topology.is_covering(&gen));
        assert!(site.topology.is_covering(&Sieve::maximal(cat, xy)));
    }

    #[test]
    fn chaotic_topology_covers_iff_sieve_contains_iso() {
        let cat = fixtures::interval_category();
        let cov = Pretopology::chaotic(&cat);
        let j = topology_from_pretopology(&cat, &cov);
        for u in cat.objects() {
            for sieve in all_sieves_on(&cat, u) {
                let has_iso = sieve.arrows.iter().any(|&a| cat.is_iso(a));
                assert_eq!(j.is_covering(&sieve), has_iso);
            }
        }
    }

    #[test]
    fn generated_topologies_pass_validation() {
        let site = interval_site();
        assert!(validate_topology(&site.cat, &site.topology).is_ok());
        let site = sierpinski_site();
        assert!(validate_topology(&site.cat, &site.topology).is_ok());
    }

    #[test]
    fn minimal_topology_passes() {
        let cat = fixtures::interval_category();
        let j = Topology::minimal(&cat);
        assert!(validate_topology(&cat, &j).is_ok());
    }

    #[test]
    fn dropping_maximal_sieve_fails_axiom_three() {
        let cat = fixtures::interval_category();
        let mut j = Topology::minimal(&cat);
        let xy = cat.object_by_name("x_y").unwrap();
        j.covering[xy.0].clear();
        let err = validate_topology(&cat, &j).unwrap_err();
        assert_eq!(err, TopologyViolation::MaximalMissing { object: xy });
    }

    #[test]
    fn every_presheaf_is_sheaf_for_minimal_topology() {
        let cat = fixtures::interval_category();
        let site = Site::from_topology(cat, Topology::minimal(&fixtures::interval_category()))
            .unwrap();
        let two = Presheaf {
            labels: vec![vec!["a".into(), "b".into()]; 5],
            restrict: vec![vec![0, 1]; site.cat.arrow_count()],
        };
        assert!(two.validate(&site.cat).is_ok());
        assert!(is_sheaf(&site, &two).unwrap().ok);
    }

    #[test]
    fn representables_are_sheaves_on_interval() {
        let site = interval_site();
        for u in site.cat.objects() {
            assert!(is_sheaf(&site, &yoneda(&site.cat, u)).unwrap().ok);
        }
        assert!(is_subcanonical(&site).unwrap().ok);
    }

    #[test]
    fn two_sections_at_empty_violate_sheaf_condition() {
        let site = interval_site();
        let cat = &site.cat;
        let empty = cat.object_by_name("empty").unwrap();
        let mut labels = vec![vec!["s".to_string()]; cat.object_count()];
        labels[empty.0] = vec!["a".into(), "b".into()];
        let restrict = cat
            .all_arrows()
            .map(|f| {
                if f == cat.id(empty) {
                    vec![0, 1]
                } else {
                    vec![0; labels[cat.dst(f).0].len()]
                }
            })
            .collect();
        let p = Presheaf { labels, restrict };
        assert!(p.validate(cat).is_ok());
        let verdict = is_sheaf(&site, &p).unwrap();
        assert!(!verdict.ok);
        assert_eq!(verdict.witness.unwrap().object(), empty);
    }

    #[test]
    fn sheafification_of_constant_two_on_interval() {
        let site = interval_site();
        let cat = &site.cat;
        let two = Presheaf {
            labels: vec![vec!["a".into(), "b".into()]; cat.object_count()],
            restrict: vec![vec![0, 1]; cat.arrow_count()],
        };
        let (sheaf, _unit) = sheafify(&site, &two);
        assert!(is_sheaf(&site, &sheaf).unwrap().ok);
        let size_at = |name: &str| sheaf.size(cat.object_by_name(name).unwrap());
        assert_eq!(size_at("empty"), 1);
        assert_eq!(size_at("x"), 2);
        assert_eq!(size_at("y"), 2);
        assert_eq!(size_at("x_y"), 4);
        assert_eq!(size_at("x_m_y"), 2);
    }

    #[test]
    fn sheafifying_a_sheaf_is_iso() {
        let site = interval_site();
        let h = yoneda(&site.cat, site.cat.object_by_name("x_y").unwrap());
        let (sheaf, unit) = sheafify(&site, &h);
        assert!(unit.map.is_pointwise_bijective(&h, &sheaf));
    }

    #[test]
    fn plus_of_plus_is_sheaf_on_fixture_presheaves() {
        let site = sierpinski_site();
        let cat = &site.cat;
        let two = Presheaf {
            labels: vec![vec!["a".into(), "b".into()]; cat.object_count()],
            restrict: vec![vec![0, 1]; cat.arrow_count()],
        };
        let (once, _) = plus(&site, &two);
        assert!(once.validate(cat).is_ok());
        let (twice, _) = plus(&site, &once);
        assert!(is_sheaf(&site, &twice).unwrap().ok);
        let (a, _) = sheafify(&site, &two);
        assert!(find_isomorphism(cat, &a, &twice).is_some());
    }

    #[test]
    fn covering_family_verdicts_on_interval() {
        let site = interval_site();
        let cat = &site.cat;
        let xy = cat.object_by_name("x_y").unwrap();
        let top = cat.object_by_name("x_m_y").unwrap();
        let x = cat.object_by_name("x").unwrap();
        let y = cat.object_by_name("y").unwrap();
        assert!(is_covering_family(&site, xy, &[cat.id(xy)].into()).unwrap());
        let pts: Family = [cat.hom(x, xy)[0], cat.hom(y, xy)[0]].into();
        assert!(is_covering_family(&site, xy, &pts).unwrap());
        let partial: Family = [cat.hom(x, top)[0], cat.hom(y, top)[0]].into();
        assert!(!is_covering_family(&site, top, &partial).unwrap());
    }
}
