//! Presheaves with finite value sets, natural transformations, sieves, the
//! Yoneda embedding, and pointwise (co)limits.
//!
//! Sections are identified by their index into a per-object list; the label
//! list carries user-facing names only. All orders are canonical so every
//! construction is deterministic.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::cat::{ArrId, FiniteCategory, ObjId};
use crate::Error;

/// A functor C° → finite sets, tabulated.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Presheaf {
    /// Per object: display labels of the sections (index = section id).
    pub labels: Vec<Vec<String>>,
    /// Per arrow f: v→u, a map F(u) → F(v) as an index table of length |F(u)|.
    pub restrict: Vec<Vec<usize>>,
}

impl Presheaf {
    pub fn size(&self, u: ObjId) -> usize {
        self.labels[u.0].len()
    }

    pub fn label(&self, u: ObjId, s: usize) -> &str {
        &self.labels[u.0][s]
    }

    pub fn section_by_label(&self, u: ObjId, label: &str) -> Option<usize> {
        self.labels[u.0].iter().position(|l| l == label)
    }

    /// Applies the restriction map along `f` to section `s` of F(dst f).
    pub fn apply(&self, f: ArrId, s: usize) -> usize {
        self.restrict[f.0][s]
    }

    /// Identity and contravariant-composition laws, checked exhaustively.
    pub fn validate(&self, cat: &FiniteCategory) -> Result<(), Error> {
        if self.labels.len() != cat.object_count() || self.restrict.len() != cat.arrow_count() {
            return Err(Error::Shape("presheaf tables do not match the category".into()));
        }
        for f in cat.all_arrows() {
            let (v, u) = (cat.src(f), cat.dst(f));
            if self.restrict[f.0].len() != self.size(u) {
                return Err(Error::Shape(format!(
                    "restriction along `{}` has wrong domain size",
                    cat.arrow_name(f)
                )));
            }
            if self.restrict[f.0].iter().any(|&t| t >= self.size(v)) {
                return Err(Error::Shape(format!(
                    "restriction along `{}` escapes the value set",
                    cat.arrow_name(f)
                )));
            }
        }
        for u in cat.objects() {
            let id = cat.id(u);
            for s in 0..self.size(u) {
                if self.apply(id, s) != s {
                    return Err(Error::Law(format!(
                        "restriction along id_{} is not the identity",
                        cat.object_name(u)
                    )));
                }
            }
        }
        for f in cat.all_arrows() {
            for g in cat.all_arrows() {
                if cat.dst(f) != cat.src(g) {
                    continue;
                }
                let gf = cat.compose(g, f);
                for s in 0..self.size(cat.dst(g)) {
                    if self.apply(gf, s) != self.apply(f, self.apply(g, s)) {
                        return Err(Error::Law(format!(
                            "contravariance fails on `{}` then `{}`",
                            cat.arrow_name(f),
                            cat.arrow_name(g)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Presheaf with the same singleton value everywhere (limit of the empty diagram).
    pub fn terminal(cat: &FiniteCategory) -> Presheaf {
        Presheaf {
            labels: vec![vec!["*".to_string()]; cat.object_count()],
            restrict: vec![vec![0]; cat.arrow_count()],
        }
    }

    /// Presheaf with empty value sets everywhere (colimit of the empty diagram).
    pub fn empty(cat: &FiniteCategory) -> Presheaf {
        Presheaf {
            labels: vec![Vec::new(); cat.object_count()],
            restrict: vec![Vec::new(); cat.arrow_count()],
        }
    }

    pub fn total_sections(&self) -> usize {
        self.labels.iter().map(|l| l.len()).sum()
    }
}

/// Natural transformation between two presheaves over the same category.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct NatTrans {
    /// Per object: map F(u) → G(u) as an index table.
    pub component: Vec<Vec<usize>>,
}

impl NatTrans {
    pub fn identity(f: &Presheaf) -> NatTrans {
        NatTrans {
            component: f.labels.iter().map(|l| (0..l.len()).collect()).collect(),
        }
    }

    pub fn apply(&self, u: ObjId, s: usize) -> usize {
        self.component[u.0][s]
    }

    /// Naturality against every arrow; endpoints fixed by the caller.
    pub fn validate(
        &self,
        cat: &FiniteCategory,
        src: &Presheaf,
        dst: &Presheaf,
    ) -> Result<(), Error> {
        if self.component.len() != cat.object_count() {
            return Err(Error::Shape("component count mismatch".into()));
        }
        for u in cat.objects() {
            if self.component[u.0].len() != src.size(u) {
                return Err(Error::Shape(format!(
                    "component at `{}` has wrong domain",
                    cat.object_name(u)
                )));
            }
            if self.component[u.0].iter().any(|&t| t >= dst.size(u)) {
                return Err(Error::Shape(format!(
                    "component at `{}` escapes the target",
                    cat.object_name(u)
                )));
            }
        }
        for f in cat.all_arrows() {
            let (v, u) = (cat.src(f), cat.dst(f));
            for s in 0..src.size(u) {
                if dst.apply(f, self.apply(u, s)) != self.apply(v, src.apply(f, s)) {
                    return Err(Error::Law(format!(
                        "naturality fails along `{}`",
                        cat.arrow_name(f)
                    )));
                }
            }
        }
        Ok(())
    }

    /// self ∘ other (other first).
    pub fn compose(&self, other: &NatTrans) -> NatTrans {
        NatTrans {
            component: other
                .component
                .iter()
                .enumerate()
                .map(|(u, col)| col.iter().map(|&s| self.component[u][s]).collect())
                .collect(),
        }
    }

    pub fn is_pointwise_injective(&self, src: &Presheaf) -> Option<(ObjId, usize, usize)> {
        for (u, col) in self.component.iter().enumerate() {
            for s in 0..col.len() {
                for t in (s + 1)..col.len() {
                    if col[s] == col[t] {
                        return Some((ObjId(u), s, t));
                    }
                }
            }
            debug_assert_eq!(col.len(), src.size(ObjId(u)));
        }
        None
    }

    pub fn is_pointwise_bijective(&self, src: &Presheaf, dst: &Presheaf) -> bool {
        self.is_pointwise_injective(src).is_none()
            && self
                .component
                .iter()
                .enumerate()
                .all(|(u, col)| col.len() == dst.size(ObjId(u)))
    }
}

/// A morphism of presheaves with its endpoints carried along.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Morphism {
    pub src: Presheaf,
    pub dst: Presheaf,
    pub map: NatTrans,
}

impl Morphism {
    pub fn identity(f: &Presheaf) -> Morphism {
        Morphism { src: f.clone(), dst: f.clone(), map: NatTrans::identity(f) }
    }

    pub fn validate(&self, cat: &FiniteCategory) -> Result<(), Error> {
        self.src.validate(cat)?;
        self.dst.validate(cat)?;
        self.map.validate(cat, &self.src, &self.dst)
    }

    /// self ∘ other.
    pub fn compose(&self, other: &Morphism) -> Morphism {
        Morphism {
            src: other.src.clone(),
            dst: self.dst.clone(),
            map: self.map.compose(&other.map),
        }
    }
}

/// A set of arrows into a fixed object, closed under precomposition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Sieve {
    pub anchor: ObjId,
    pub arrows: BTreeSet<ArrId>,
}

impl Sieve {
    pub fn empty(anchor: ObjId) -> Sieve {
        Sieve { anchor, arrows: BTreeSet::new() }
    }

    /// The maximal sieve h_U: every arrow into the anchor.
    pub fn maximal(cat: &FiniteCategory, anchor: ObjId) -> Sieve {
        Sieve { anchor, arrows: cat.arrows_into(anchor).iter().copied().collect() }
    }

    pub fn contains(&self, a: ArrId) -> bool {
        self.arrows.contains(&a)
    }

    pub fn is_closed(&self, cat: &FiniteCategory) -> bool {
        self.arrows.iter().all(|&phi| {
            cat.arrows_into(cat.src(phi))
                .iter()
                .all(|&psi| self.arrows.contains(&cat.compose(phi, psi)))
        })
    }

    /// Smallest sieve containing `family`; membership is "factors through a member".
    pub fn generated_by(
        cat: &FiniteCategory,
        anchor: ObjId,
        family: &BTreeSet<ArrId>,
    ) -> Result<Sieve, Error> {
        if let Some(&bad) = family.iter().find(|&&a| cat.dst(a) != anchor) {
            return Err(Error::MixedTargets { arrow: cat.arrow_name(bad).to_string() });
        }
        let mut arrows = BTreeSet::new();
        for &rho in family {
            arrows.insert(rho);
            for &psi in cat.arrows_into(cat.src(rho)) {
                arrows.insert(cat.compose(rho, psi));
            }
        }
        Ok(Sieve { anchor, arrows })
    }

    /// φ⁻¹(R): arrows ψ into src(φ) with φ∘ψ ∈ R.
    pub fn pullback(&self, cat: &FiniteCategory, phi: ArrId) -> Result<Sieve, Error> {
        if cat.dst(phi) != self.anchor {
            return Err(Error::AnchorMismatch {
                expected: cat.object_name(self.anchor).to_string(),
                found: cat.object_name(cat.dst(phi)).to_string(),
            });
        }
        let u = cat.src(phi);
        let arrows = cat
            .arrows_into(u)
            .iter()
            .copied()
            .filter(|&psi| self.arrows.contains(&cat.compose(phi, psi)))
            .collect();
        Ok(Sieve { anchor: u, arrows })
    }

    pub fn intersect(&self, other: &Sieve) -> Sieve {
        debug_assert_eq!(self.anchor, other.anchor);
        Sieve {
            anchor: self.anchor,
            arrows: self.arrows.intersection(&other.arrows).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Sieve) -> bool {
        self.anchor == other.anchor && self.arrows.is_subset(&other.arrows)
    }

    /// The sieve as a presheaf: sections at v are the member arrows with source v.
    pub fn to_presheaf(&self, cat: &FiniteCategory) -> Presheaf {
        let per_object: Vec<Vec<ArrId>> = cat
            .objects()
            .map(|v| self.arrows.iter().copied().filter(|&a| cat.src(a) == v).collect())
            .collect();
        let labels = per_object
            .iter()
            .map(|col| col.iter().map(|&a| cat.arrow_name(a).to_string()).collect())
            .collect();
        let restrict = cat
            .all_arrows()
            .map(|psi| {
                let (w, v) = (cat.src(psi), cat.dst(psi));
                per_object[v.0]
                    .iter()
                    .map(|&phi| {
                        let composed = cat.compose(phi, psi);
                        per_object[w.0].iter().position(|&x| x == composed).expect("sieve closed")
                    })
                    .collect()
            })
            .collect();
        Presheaf { labels, restrict }
    }

    /// The sieve as a subpresheaf of h_{anchor}.
    pub fn to_subpresheaf(&self, cat: &FiniteCategory) -> Subpresheaf {
        let sections = cat
            .objects()
            .map(|v| {
                cat.hom(v, self.anchor)
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| self.arrows.contains(a))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Subpresheaf { sections }
    }
}

/// All sieves on an object, enumerated as the closed subsets of arrows into it.
pub fn all_sieves_on(cat: &FiniteCategory, u: ObjId) -> Vec<Sieve> {
    let arrows = cat.arrows_into(u);
    assert!(
        arrows.len() <= 22,
        "sieve enumeration bound exceeded at `{}`",
        cat.object_name(u)
    );
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << arrows.len()) {
        let set: BTreeSet<ArrId> = arrows
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &a)| a)
            .collect();
        let sieve = Sieve { anchor: u, arrows: set };
        if sieve.is_closed(cat) {
            out.push(sieve);
        }
    }
    out.sort();
    out
}

/// h: C → Ĉ, U ↦ Hom(−, U); restriction is precomposition.
pub fn yoneda(cat: &FiniteCategory, u: ObjId) -> Presheaf {
    let homs: Vec<Vec<ArrId>> = cat.objects().map(|v| cat.hom(v, u)).collect();
    let labels = homs
        .iter()
        .map(|col| col.iter().map(|&a| cat.arrow_name(a).to_string()).collect())
        .collect();
    let restrict = cat
        .all_arrows()
        .map(|psi| {
            let (w, v) = (cat.src(psi), cat.dst(psi));
            homs[v.0]
                .iter()
                .map(|&phi| {
                    let composed = cat.compose(phi, psi);
                    homs[w.0].iter().position(|&x| x == composed).unwrap()
                })
                .collect()
        })
        .collect();
    Presheaf { labels, restrict }
}

/// Section index of an arrow φ: v→u inside h_u(v).
pub fn yoneda_index(cat: &FiniteCategory, u: ObjId, phi: ArrId) -> usize {
    cat.hom(cat.src(phi), u).iter().position(|&x| x == phi).unwrap()
}

/// The arrow named by a section of h_u(v).
pub fn yoneda_arrow(cat: &FiniteCategory, u: ObjId, v: ObjId, idx: usize) -> ArrId {
    cat.hom(v, u)[idx]
}

/// h_φ: h_a → h_b for φ: a→b, by postcomposition.
pub fn yoneda_map(cat: &FiniteCategory, phi: ArrId) -> Morphism {
    let (a, b) = (cat.src(phi), cat.dst(phi));
    let src = yoneda(cat, a);
    let dst = yoneda(cat, b);
    let component = cat
        .objects()
        .map(|v| {
            cat.hom(v, a)
                .iter()
                .map(|&psi| yoneda_index(cat, b, cat.compose(phi, psi)))
                .collect()
        })
        .collect();
    Morphism { src, dst, map: NatTrans { component } }
}

/// The unique transformation h_u → F sending Id_u to the section `s` of F(u).
pub fn yoneda_correspond(
    cat: &FiniteCategory,
    f: &Presheaf,
    u: ObjId,
    s: usize,
) -> Result<Morphism, Error> {
    if s >= f.size(u) {
        return Err(Error::ElementNotInValueSet {
            object: cat.object_name(u).to_string(),
            index: s,
        });
    }
    let component = cat
        .objects()
        .map(|v| cat.hom(v, u).iter().map(|&phi| f.apply(phi, s)).collect())
        .collect();
    Ok(Morphism { src: yoneda(cat, u), dst: f.clone(), map: NatTrans { component } })
}

/// Inverse direction of the Yoneda bijection: evaluate at the identity.
pub fn evaluate_at_identity(cat: &FiniteCategory, u: ObjId, t: &NatTrans) -> usize {
    t.apply(u, yoneda_index(cat, u, cat.id(u)))
}

/// Per-object subset of a parent presheaf, stable under restriction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Subpresheaf {
    pub sections: Vec<BTreeSet<usize>>,
}

impl Subpresheaf {
    pub fn empty(cat: &FiniteCategory) -> Subpresheaf {
        Subpresheaf { sections: vec![BTreeSet::new(); cat.object_count()] }
    }

    pub fn full(parent: &Presheaf) -> Subpresheaf {
        Subpresheaf {
            sections: parent.labels.iter().map(|l| (0..l.len()).collect()).collect(),
        }
    }

    pub fn contains(&self, u: ObjId, s: usize) -> bool {
        self.sections[u.0].contains(&s)
    }

    pub fn insert(&mut self, u: ObjId, s: usize) -> bool {
        self.sections[u.0].insert(s)
    }

    pub fn is_full(&self, parent: &Presheaf) -> bool {
        self.sections
            .iter()
            .enumerate()
            .all(|(u, set)| set.len() == parent.size(ObjId(u)))
    }

    /// Stability: restriction maps send the subset into the subset.
    pub fn validate_stable(&self, cat: &FiniteCategory, parent: &Presheaf) -> Result<(), Error> {
        if self.sections.len() != cat.object_count() {
            return Err(Error::Shape("subpresheaf has wrong object count".into()));
        }
        for u in cat.objects() {
            if self.sections[u.0].iter().any(|&s| s >= parent.size(u)) {
                return Err(Error::Shape(format!(
                    "subpresheaf escapes the parent at `{}`",
                    cat.object_name(u)
                )));
            }
        }
        for f in cat.all_arrows() {
            let (v, u) = (cat.src(f), cat.dst(f));
            for &s in &self.sections[u.0] {
                if !self.sections[v.0].contains(&parent.apply(f, s)) {
                    return Err(Error::Law(format!(
                        "subpresheaf is not stable along `{}`",
                        cat.arrow_name(f)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn union(&self, other: &Subpresheaf) -> Subpresheaf {
        Subpresheaf {
            sections: self
                .sections
                .iter()
                .zip(&other.sections)
                .map(|(a, b)| a.union(b).copied().collect())
                .collect(),
        }
    }

    pub fn intersect(&self, other: &Subpresheaf) -> Subpresheaf {
        Subpresheaf {
            sections: self
                .sections
                .iter()
                .zip(&other.sections)
                .map(|(a, b)| a.intersection(b).copied().collect())
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &Subpresheaf) -> bool {
        self.sections.iter().zip(&other.sections).all(|(a, b)| a.is_subset(b))
    }

    /// Materializes the subset as a presheaf together with its inclusion.
    pub fn to_presheaf(&self, cat: &FiniteCategory, parent: &Presheaf) -> (Presheaf, Morphism) {
        let per_object: Vec<Vec<usize>> =
            self.sections.iter().map(|set| set.iter().copied().collect()).collect();
        let labels: Vec<Vec<String>> = per_object
            .iter()
            .enumerate()
            .map(|(u, col)| col.iter().map(|&s| parent.labels[u][s].clone()).collect())
            .collect();
        let restrict = cat
            .all_arrows()
            .map(|f| {
                let (v, u) = (cat.src(f), cat.dst(f));
                per_object[u.0]
                    .iter()
                    .map(|&s| {
                        let t = parent.apply(f, s);
                        per_object[v.0].iter().position(|&x| x == t).expect("stable subset")
                    })
                    .collect()
            })
            .collect();
        let sub = Presheaf { labels, restrict };
        let component = per_object.into_iter().collect::<Vec<_>>();
        let incl = Morphism {
            src: sub.clone(),
            dst: parent.clone(),
            map: NatTrans { component },
        };
        (sub, incl)
    }
}

/// Pointwise image of a morphism, as a subpresheaf of its target.
pub fn image_subpresheaf(m: &Morphism) -> Subpresheaf {
    Subpresheaf {
        sections: m.map.component.iter().map(|col| col.iter().copied().collect()).collect(),
    }
}

/// A finite diagram of presheaves.
#[derive(Clone, Default, Debug)]
pub struct Diagram {
    pub nodes: Vec<Presheaf>,
    /// (source node, target node, transformation)
    pub edges: Vec<(usize, usize, NatTrans)>,
}

impl Diagram {
    pub fn new(nodes: Vec<Presheaf>) -> Diagram {
        Diagram { nodes, edges: Vec::new() }
    }

    pub fn edge(&mut self, from: usize, to: usize, map: NatTrans) {
        self.edges.push((from, to, map));
    }
}

/// Pointwise limit: compatible tuples, ordered lexicographically.
/// The empty diagram yields the constant-singleton presheaf.
pub fn presheaf_limit(cat: &FiniteCategory, diag: &Diagram) -> (Presheaf, Vec<NatTrans>) {
    if diag.nodes.is_empty() {
        return (Presheaf::terminal(cat), Vec::new());
    }
    let mut tuples_at: Vec<Vec<Vec<usize>>> = Vec::with_capacity(cat.object_count());
    for u in cat.objects() {
        let mut tuples = vec![Vec::new()];
        for node in &diag.nodes {
            let mut next = Vec::new();
            for t in &tuples {
                for s in 0..node.size(u) {
                    let mut t2 = t.clone();
                    t2.push(s);
                    next.push(t2);
                }
            }
            tuples = next;
        }
        tuples.retain(|t| {
            diag.edges
                .iter()
                .all(|(from, to, map)| map.apply(u, t[*from]) == t[*to])
        });
        tuples_at.push(tuples);
    }
    let index_at: Vec<BTreeMap<&Vec<usize>, usize>> = tuples_at
        .iter()
        .map(|ts| ts.iter().enumerate().map(|(i, t)| (t, i)).collect())
        .collect();
    let labels = tuples_at
        .iter()
        .enumerate()
        .map(|(u, ts)| {
            ts.iter()
                .map(|t| {
                    if t.is_empty() {
                        "*".to_string()
                    } else {
                        let parts: Vec<&str> = t
                            .iter()
                            .enumerate()
                            .map(|(n, &s)| diag.nodes[n].labels[u][s].as_str())
                            .collect();
                        format!("({})", parts.join(","))
                    }
                })
                .collect()
        })
        .collect();
    let restrict = cat
        .all_arrows()
        .map(|f| {
            let (v, u) = (cat.src(f), cat.dst(f));
            tuples_at[u.0]
                .iter()
                .map(|t| {
                    let moved: Vec<usize> = t
                        .iter()
                        .enumerate()
                        .map(|(n, &s)| diag.nodes[n].apply(f, s))
                        .collect();
                    index_at[v.0][&moved]
                })
                .collect()
        })
        .collect();
    let limit = Presheaf { labels, restrict };
    let projections = (0..diag.nodes.len())
        .map(|n| NatTrans {
            component: tuples_at.iter().map(|ts| ts.iter().map(|t| t[n]).collect()).collect(),
        })
        .collect();
    (limit, projections)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    // smaller index wins, keeping representatives canonical
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra < rb {
            self.parent[rb] = ra;
        } else {
            self.parent[ra] = rb;
        }
    }
}

/// Pointwise colimit: quotient of the disjoint union by the edge identifications.
/// Representatives are the least (node, section) pair in the class.
pub fn presheaf_colimit(cat: &FiniteCategory, diag: &Diagram) -> (Presheaf, Vec<NatTrans>) {
    if diag.nodes.is_empty() {
        return (Presheaf::empty(cat), Vec::new());
    }
    // offsets of each node inside the pointwise disjoint union
    let mut offsets_at: Vec<Vec<usize>> = Vec::with_capacity(cat.object_count());
    let mut totals: Vec<usize> = Vec::with_capacity(cat.object_count());
    for u in cat.objects() {
        let mut offsets = Vec::with_capacity(diag.nodes.len());
        let mut acc = 0;
        for node in &diag.nodes {
            offsets.push(acc);
            acc += node.size(u);
        }
        offsets_at.push(offsets);
        totals.push(acc);
    }
    let mut class_of: Vec<Vec<usize>> = Vec::with_capacity(cat.object_count());
    let mut reps_at: Vec<Vec<usize>> = Vec::with_capacity(cat.object_count());
    for u in cat.objects() {
        let mut uf = UnionFind::new(totals[u.0]);
        for (from, to, map) in &diag.edges {
            for s in 0..diag.nodes[*from].size(u) {
                uf.union(
                    offsets_at[u.0][*from] + s,
                    offsets_at[u.0][*to] + map.apply(u, s),
                );
            }
        }
        let mut reps: Vec<usize> = (0..totals[u.0]).filter(|&x| uf.find(x) == x).collect();
        reps.sort_unstable();
        let mut classes = vec![0usize; totals[u.0]];
        for x in 0..totals[u.0] {
            let r = uf.find(x);
            classes[x] = reps.iter().position(|&y| y == r).unwrap();
        }
        class_of.push(classes);
        reps_at.push(reps);
    }
    let node_of = |u: usize, raw: usize| -> (usize, usize) {
        let mut n = diag.nodes.len() - 1;
        while offsets_at[u][n] > raw {
            n -= 1;
        }
        (n, raw - offsets_at[u][n])
    };
    let labels: Vec<Vec<String>> = reps_at
        .iter()
        .enumerate()
        .map(|(u, reps)| {
            reps.iter()
                .map(|&raw| {
                    let (n, s) = node_of(u, raw);
                    format!("{}:{}", n, diag.nodes[n].labels[u][s])
                })
                .collect()
        })
        .collect();
    let restrict = cat
        .all_arrows()
        .map(|f| {
            let (v, u) = (cat.src(f), cat.dst(f));
            reps_at[u.0]
                .iter()
                .map(|&raw| {
                    let (n, s) = node_of(u.0, raw);
                    class_of[v.0][offsets_at[v.0][n] + diag.nodes[n].apply(f, s)]
                })
                .collect()
        })
        .collect();
    let colimit = Presheaf { labels, restrict };
    let injections = (0..diag.nodes.len())
        .map(|n| NatTrans {
            component: (0..cat.object_count())
                .map(|u| {
                    (0..diag.nodes[n].size(ObjId(u)))
                        .map(|s| class_of[u][offsets_at[u][n] + s])
                        .collect()
                })
                .collect(),
        })
        .collect();
    (colimit, injections)
}

/// Binary product with projections.
pub fn presheaf_product(
    cat: &FiniteCategory,
    f: &Presheaf,
    g: &Presheaf,
) -> (Presheaf, NatTrans, NatTrans) {
    let diag = Diagram::new(vec![f.clone(), g.clone()]);
    let (p, mut projs) = presheaf_limit(cat, &diag);
    let pr2 = projs.pop().unwrap();
    let pr1 = projs.pop().unwrap();
    (p, pr1, pr2)
}

/// All natural transformations F → G, found by backtracking with constraint
/// propagation along restriction maps.
pub fn enumerate_nat_trans(cat: &FiniteCategory, f: &Presheaf, g: &Presheaf) -> Vec<NatTrans> {
    let mut out = Vec::new();
    let state: Vec<Vec<Option<usize>>> =
        (0..cat.object_count()).map(|u| vec![None; f.size(ObjId(u))]).collect();
    search_nat_trans(cat, f, g, state, false, &mut out);
    out
}

/// First pointwise-bijective natural transformation F → G, if any.
pub fn find_isomorphism(cat: &FiniteCategory, f: &Presheaf, g: &Presheaf) -> Option<NatTrans> {
    for u in cat.objects() {
        if f.size(u) != g.size(u) {
            return None;
        }
    }
    let mut out = Vec::new();
    let state: Vec<Vec<Option<usize>>> =
        (0..cat.object_count()).map(|u| vec![None; f.size(ObjId(u))]).collect();
    search_nat_trans(cat, f, g, state, true, &mut out);
    out.into_iter().next()
}

fn search_nat_trans(
    cat: &FiniteCategory,
    f: &Presheaf,
    g: &Presheaf,
    state: Vec<Vec<Option<usize>>>,
    bijective: bool,
    out: &mut Vec<NatTrans>,
) {
    if bijective && !out.is_empty() {
        return;
    }
    let next = state
        .iter()
        .enumerate()
        .find_map(|(u, col)| col.iter().position(|x| x.is_none()).map(|s| (u, s)));
    let (u, s) = match next {
        None => {
            out.push(NatTrans {
                component: state
                    .into_iter()
                    .map(|col| col.into_iter().map(Option::unwrap).collect())
                    .collect(),
            });
            return;
        }
        Some(pair) => pair,
    };
    'candidates: for cand in 0..g.size(ObjId(u)) {
        let mut st = state.clone();
        let mut queue = vec![(u, s, cand)];
        while let Some((qu, qs, qg)) = queue.pop() {
            match st[qu][qs] {
                Some(existing) if existing == qg => continue,
                Some(_) => continue 'candidates,
                None => {}
            }
            if bijective && st[qu].iter().any(|&x| x == Some(qg)) {
                continue 'candidates;
            }
            st[qu][qs] = Some(qg);
            for &arr in cat.arrows_into(ObjId(qu)) {
                let v = cat.src(arr);
                queue.push((v.0, f.apply(arr, qs), g.apply(arr, qg)));
            }
        }
        search_nat_trans(cat, f, g, st, bijective, out);
        if bijective && !out.is_empty() {
            return;
        }
    }
}
