//! Operations in the sheaf topos over a validated site: epi/mono tests,
//! image factorization by two independent routes, limits, coproducts, and
//! quotients by equivalence relations.
//!
//! Subobjects of a sheaf are kept in normalized form: pointwise index sets,
//! stable under restriction and closed under local gluing (saturated).
//! Equality of subobjects is then plain set equality.
//!
//! Callers guarantee that morphism endpoints are sheaves; the constructors in
//! this module only produce sheaves, and the CLI validates user input once at
//! entry.

use std::collections::BTreeSet;

use crate::cat::ObjId;
use crate::presheaf::{
    image_subpresheaf, presheaf_colimit, presheaf_limit, Diagram, Morphism, NatTrans, Presheaf,
    Subpresheaf,
};
use crate::topology::{is_sheaf, sheafify, Site};
use crate::Error;

/// Local closure: adds every section whose restrictions along the least
/// covering sieve already lie in the subset, until a fixpoint.
pub fn saturate(site: &Site, parent: &Presheaf, sub: &Subpresheaf) -> Subpresheaf {
    let cat = &site.cat;
    let mut out = sub.clone();
    loop {
        let mut grew = false;
        for u in cat.objects() {
            let sieve = site.min_cover(u);
            for s in 0..parent.size(u) {
                if out.contains(u, s) {
                    continue;
                }
                let locally_in = sieve
                    .arrows
                    .iter()
                    .all(|&phi| out.contains(cat.src(phi), parent.apply(phi, s)));
                if locally_in {
                    out.insert(u, s);
                    grew = true;
                }
            }
        }
        if !grew {
            return out;
        }
    }
}

/// Normalized subobject equality. Both sides must live under the same parent.
pub fn subsheaf_equal(
    site: &Site,
    parent: &Presheaf,
    s: &Subpresheaf,
    t: &Subpresheaf,
) -> Result<bool, Error> {
    check_parent(parent, s)?;
    check_parent(parent, t)?;
    Ok(saturate(site, parent, s) == saturate(site, parent, t))
}

/// Union of subobjects: the image of the coproduct of the inclusions, i.e.
/// the local closure of the pointwise union.
pub fn subsheaf_union(
    site: &Site,
    parent: &Presheaf,
    subs: &[Subpresheaf],
) -> Result<Subpresheaf, Error> {
    let mut acc = Subpresheaf::empty(&site.cat);
    for sub in subs {
        check_parent(parent, sub)?;
        acc = acc.union(sub);
    }
    Ok(saturate(site, parent, &acc))
}

fn check_parent(parent: &Presheaf, sub: &Subpresheaf) -> Result<(), Error> {
    if sub.sections.len() != parent.labels.len() {
        return Err(Error::ParentMismatch);
    }
    for (u, set) in sub.sections.iter().enumerate() {
        if set.iter().any(|&s| s >= parent.size(ObjId(u))) {
            return Err(Error::ParentMismatch);
        }
    }
    Ok(())
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EpiVerdict {
    pub ok: bool,
    /// (object, section of the target) with no covering through the image.
    pub witness: Option<(ObjId, usize)>,
}

/// Epimorphism = local surjectivity: every section of the target restricts,
/// on some covering, into the pointwise image. Holding on some covering sieve
/// is equivalent to holding on the least one.
pub fn is_epimorphism(site: &Site, f: &Morphism) -> Result<EpiVerdict, Error> {
    let image = saturate(site, &f.dst, &image_subpresheaf(f));
    for u in site.cat.objects() {
        for s in 0..f.dst.size(u) {
            if !image.contains(u, s) {
                return Ok(EpiVerdict { ok: false, witness: Some((u, s)) });
            }
        }
    }
    Ok(EpiVerdict { ok: true, witness: None })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MonoVerdict {
    pub ok: bool,
    /// (object, section, section) identified by the morphism.
    pub witness: Option<(ObjId, usize, usize)>,
}

/// Monomorphism = pointwise injectivity.
pub fn is_monomorphism(_site: &Site, f: &Morphism) -> Result<MonoVerdict, Error> {
    match f.map.is_pointwise_injective(&f.src) {
        Some((u, s, t)) => Ok(MonoVerdict { ok: false, witness: Some((u, s, t)) }),
        None => Ok(MonoVerdict { ok: true, witness: None }),
    }
}

pub fn is_isomorphism(_site: &Site, f: &Morphism) -> bool {
    f.map.is_pointwise_bijective(&f.src, &f.dst)
}

/// Epi-mono factorization of a sheaf morphism.
#[derive(Clone, Debug)]
pub struct ImageFactorization {
    pub image: Presheaf,
    /// The image as a normalized subobject of the target.
    pub sub: Subpresheaf,
    pub epi: Morphism,
    pub mono: Morphism,
}

/// Factors f through its image. Two independent routes are computed — the
/// pushout-equalizer recipe and the local closure of the pointwise image —
/// and must agree as subobjects of the target.
pub fn image_factorization(site: &Site, f: &Morphism) -> Result<ImageFactorization, Error> {
    let cat = &site.cat;
    // route 1: equalizer of the two legs of the self-pushout
    let mut diag = Diagram::new(vec![f.src.clone(), f.dst.clone(), f.dst.clone()]);
    diag.edge(0, 1, f.map.clone());
    diag.edge(0, 2, f.map.clone());
    let (pushout0, inj) = presheaf_colimit(cat, &diag);
    let (_, unit) = sheafify(site, &pushout0);
    let q = unit.map.compose(&inj[1]);
    let r = unit.map.compose(&inj[2]);
    let equalizer = Subpresheaf {
        sections: cat
            .objects()
            .map(|u| (0..f.dst.size(u)).filter(|&s| q.apply(u, s) == r.apply(u, s)).collect())
            .collect(),
    };
    // route 2: local closure of the pointwise image
    let closure = saturate(site, &f.dst, &image_subpresheaf(f));
    if equalizer != closure {
        return Err(Error::InternalRouteDisagreement(
            "pushout-equalizer image differs from the closed pointwise image".into(),
        ));
    }
    let (image, mono) = closure.to_presheaf(cat, &f.dst);
    let ordered: Vec<Vec<usize>> =
        closure.sections.iter().map(|set| set.iter().copied().collect()).collect();
    let epi_map = NatTrans {
        component: cat
            .objects()
            .map(|u| {
                (0..f.src.size(u))
                    .map(|s| {
                        let target = f.map.apply(u, s);
                        ordered[u.0].iter().position(|&x| x == target).expect("image contains f")
                    })
                    .collect()
            })
            .collect(),
    };
    let epi = Morphism { src: f.src.clone(), dst: image.clone(), map: epi_map };
    Ok(ImageFactorization { image, sub: closure, epi, mono })
}

/// Pointwise limit of a diagram of sheaves; the result is verified to be a
/// sheaf.
pub fn sheaf_limit(site: &Site, diag: &Diagram) -> Result<(Presheaf, Vec<NatTrans>), Error> {
    let (limit, projections) = presheaf_limit(&site.cat, diag);
    if !is_sheaf(site, &limit)?.ok {
        return Err(Error::Internal("pointwise limit of sheaves failed the sheaf test".into()));
    }
    Ok((limit, projections))
}

/// Binary product of sheaves with projections.
pub fn sheaf_product(
    site: &Site,
    f: &Presheaf,
    g: &Presheaf,
) -> Result<(Presheaf, Morphism, Morphism), Error> {
    let diag = Diagram::new(vec![f.clone(), g.clone()]);
    let (p, mut projs) = sheaf_limit(site, &diag)?;
    let pr2 = projs.pop().unwrap();
    let pr1 = projs.pop().unwrap();
    Ok((
        p.clone(),
        Morphism { src: p.clone(), dst: f.clone(), map: pr1 },
        Morphism { src: p, dst: g.clone(), map: pr2 },
    ))
}

/// Pullback of f: F → X against g: G → X; sections are the pairs with equal
/// images, in lexicographic order.
pub fn sheaf_pullback(
    site: &Site,
    f: &Morphism,
    g: &Morphism,
) -> Result<(Presheaf, Morphism, Morphism), Error> {
    if f.dst != g.dst {
        return Err(Error::Shape("pullback legs must share a target".into()));
    }
    let cat = &site.cat;
    let pairs_at: Vec<Vec<(usize, usize)>> = cat
        .objects()
        .map(|u| {
            let mut pairs = Vec::new();
            for a in 0..f.src.size(u) {
                for b in 0..g.src.size(u) {
                    if f.map.apply(u, a) == g.map.apply(u, b) {
                        pairs.push((a, b));
                    }
                }
            }
            pairs
        })
        .collect();
    let labels = pairs_at
        .iter()
        .enumerate()
        .map(|(u, ps)| {
            ps.iter()
                .map(|&(a, b)| format!("({},{})", f.src.labels[u][a], g.src.labels[u][b]))
                .collect()
        })
        .collect();
    let restrict = cat
        .all_arrows()
        .map(|arr| {
            let (v, u) = (cat.src(arr), cat.dst(arr));
            pairs_at[u.0]
                .iter()
                .map(|&(a, b)| {
                    let moved = (f.src.apply(arr, a), g.src.apply(arr, b));
                    pairs_at[v.0].iter().position(|&p| p == moved).expect("stable pairs")
                })
                .collect()
        })
        .collect();
    let apex = Presheaf { labels, restrict };
    if !is_sheaf(site, &apex)?.ok {
        return Err(Error::Internal("pullback of sheaves failed the sheaf test".into()));
    }
    let p1 = NatTrans {
        component: pairs_at.iter().map(|ps| ps.iter().map(|&(a, _)| a).collect()).collect(),
    };
    let p2 = NatTrans {
        component: pairs_at.iter().map(|ps| ps.iter().map(|&(_, b)| b).collect()).collect(),
    };
    Ok((
        apex.clone(),
        Morphism { src: apex.clone(), dst: f.src.clone(), map: p1 },
        Morphism { src: apex, dst: g.src.clone(), map: p2 },
    ))
}

/// Coproduct: sheafification of the pointwise disjoint union, with a fast
/// path when the pointwise result is already a sheaf. Inclusions are the
/// composites of the pointwise injections with the unit.
pub fn sheaf_coproduct(
    site: &Site,
    parts: &[Presheaf],
) -> Result<(Presheaf, Vec<Morphism>), Error> {
    let diag = Diagram::new(parts.to_vec());
    let (pointwise, inj) = presheaf_colimit(&site.cat, &diag);
    if is_sheaf(site, &pointwise)?.ok {
        let inclusions = parts
            .iter()
            .zip(inj)
            .map(|(part, map)| Morphism { src: part.clone(), dst: pointwise.clone(), map })
            .collect();
        return Ok((pointwise, inclusions));
    }
    let (coprod, unit) = sheafify(site, &pointwise);
    let inclusions = parts
        .iter()
        .zip(inj)
        .map(|(part, map)| Morphism {
            src: part.clone(),
            dst: coprod.clone(),
            map: unit.map.compose(&map),
        })
        .collect();
    Ok((coprod, inclusions))
}

/// Coproduct together with the canonical map into a sheaf induced by one leg
/// per part (the universal property, computed by extension along the unit).
pub fn coproduct_cotuple(
    site: &Site,
    parts: &[Presheaf],
    legs: &[Morphism],
    target: &Presheaf,
) -> Result<(Presheaf, Vec<Morphism>, Morphism), Error> {
    if parts.len() != legs.len()
        || legs.iter().zip(parts).any(|(leg, part)| &leg.src != part || &leg.dst != target)
    {
        return Err(Error::Shape("cotuple legs do not match the parts and target".into()));
    }
    let cat = &site.cat;
    let diag = Diagram::new(parts.to_vec());
    let (pointwise, inj) = presheaf_colimit(cat, &diag);
    let mut component: Vec<Vec<usize>> =
        cat.objects().map(|u| vec![usize::MAX; pointwise.size(u)]).collect();
    for (i, part) in parts.iter().enumerate() {
        for u in cat.objects() {
            for s in 0..part.size(u) {
                component[u.0][inj[i].apply(u, s)] = legs[i].map.apply(u, s);
            }
        }
    }
    let t0 = NatTrans { component };
    if is_sheaf(site, &pointwise)?.ok {
        let inclusions = parts
            .iter()
            .zip(&inj)
            .map(|(part, map)| Morphism {
                src: part.clone(),
                dst: pointwise.clone(),
                map: map.clone(),
            })
            .collect();
        let induced = Morphism { src: pointwise.clone(), dst: target.clone(), map: t0 };
        return Ok((pointwise, inclusions, induced));
    }
    let (coprod, unit) = crate::topology::sheafify(site, &pointwise);
    let extended = crate::topology::extend_along_unit(site, &pointwise, target, &t0)?;
    let inclusions = parts
        .iter()
        .zip(&inj)
        .map(|(part, map)| Morphism {
            src: part.clone(),
            dst: coprod.clone(),
            map: unit.map.compose(map),
        })
        .collect();
    let induced = Morphism { src: coprod.clone(), dst: target.clone(), map: extended };
    Ok((coprod, inclusions, induced))
}

/// An equivalence relation on a sheaf, kept as a normalized subobject of the
/// product X × X.
#[derive(Clone, Debug)]
pub struct EquivalenceRelation {
    pub carrier: Presheaf,
    /// Per object: the set of related pairs of section indices.
    pub pairs: Vec<BTreeSet<(usize, usize)>>,
}

impl EquivalenceRelation {
    pub fn diagonal(site: &Site, x: &Presheaf) -> EquivalenceRelation {
        EquivalenceRelation {
            carrier: x.clone(),
            pairs: site.cat.objects().map(|u| (0..x.size(u)).map(|s| (s, s)).collect()).collect(),
        }
    }

    pub fn related(&self, u: ObjId, a: usize, b: usize) -> bool {
        self.pairs[u.0].contains(&(a, b))
    }

    /// The relation as a sheaf with its two projections to the carrier.
    pub fn legs(&self, site: &Site) -> (Presheaf, Morphism, Morphism) {
        let cat = &site.cat;
        let pairs_at: Vec<Vec<(usize, usize)>> =
            self.pairs.iter().map(|set| set.iter().copied().collect()).collect();
        let labels = pairs_at
            .iter()
            .enumerate()
            .map(|(u, ps)| {
                ps.iter()
                    .map(|&(a, b)| {
                        format!("({},{})", self.carrier.labels[u][a], self.carrier.labels[u][b])
                    })
                    .collect()
            })
            .collect();
        let restrict = cat
            .all_arrows()
            .map(|arr| {
                let (v, u) = (cat.src(arr), cat.dst(arr));
                pairs_at[u.0]
                    .iter()
                    .map(|&(a, b)| {
                        let moved = (self.carrier.apply(arr, a), self.carrier.apply(arr, b));
                        pairs_at[v.0].iter().position(|&p| p == moved).expect("stable")
                    })
                    .collect()
            })
            .collect();
        let rel = Presheaf { labels, restrict };
        let r1 = NatTrans {
            component: pairs_at.iter().map(|ps| ps.iter().map(|&(a, _)| a).collect()).collect(),
        };
        let r2 = NatTrans {
            component: pairs_at.iter().map(|ps| ps.iter().map(|&(_, b)| b).collect()).collect(),
        };
        (
            rel.clone(),
            Morphism { src: rel.clone(), dst: self.carrier.clone(), map: r1 },
            Morphism { src: rel, dst: self.carrier.clone(), map: r2 },
        )
    }
}

/// Validates reflexivity, symmetry, transitivity, and that the pair set is a
/// subsheaf of X × X (stable and locally closed).
pub fn validate_equivalence_relation(
    site: &Site,
    x: &Presheaf,
    pairs: &[BTreeSet<(usize, usize)>],
) -> Result<EquivalenceRelation, Error> {
    let cat = &site.cat;
    if pairs.len() != cat.object_count() {
        return Err(Error::NotAnEquivalenceRelation("pair table has wrong length".into()));
    }
    let fail = |msg: String| Err(Error::NotAnEquivalenceRelation(msg));
    for u in cat.objects() {
        let n = x.size(u);
        if pairs[u.0].iter().any(|&(a, b)| a >= n || b >= n) {
            return fail(format!("pair out of range at `{}`", cat.object_name(u)));
        }
        for s in 0..n {
            if !pairs[u.0].contains(&(s, s)) {
                return fail(format!(
                    "not reflexive at `{}` on `{}`",
                    cat.object_name(u),
                    x.label(u, s)
                ));
            }
        }
        for &(a, b) in &pairs[u.0] {
            if !pairs[u.0].contains(&(b, a)) {
                return fail(format!(
                    "not symmetric at `{}` on (`{}`,`{}`)",
                    cat.object_name(u),
                    x.label(u, a),
                    x.label(u, b)
                ));
            }
        }
        for &(a, b) in &pairs[u.0] {
            for &(b2, c) in &pairs[u.0] {
                if b == b2 && !pairs[u.0].contains(&(a, c)) {
                    return fail(format!(
                        "not transitive at `{}` on (`{}`,`{}`,`{}`)",
                        cat.object_name(u),
                        x.label(u, a),
                        x.label(u, b),
                        x.label(u, c)
                    ));
                }
            }
        }
    }
    for f in cat.all_arrows() {
        let (v, u) = (cat.src(f), cat.dst(f));
        for &(a, b) in &pairs[u.0] {
            if !pairs[v.0].contains(&(x.apply(f, a), x.apply(f, b))) {
                return fail(format!("not stable along `{}`", cat.arrow_name(f)));
            }
        }
    }
    // local closure inside X×X
    let (product, _, _) = sheaf_product(site, x, x)?;
    let as_sub = pairs_to_subobject(site, x, &product, pairs);
    let closed = saturate(site, &product, &as_sub);
    if closed != as_sub {
        return fail("relation is not locally closed in X×X".into());
    }
    Ok(EquivalenceRelation { carrier: x.clone(), pairs: pairs.to_vec() })
}

fn pairs_to_subobject(
    site: &Site,
    x: &Presheaf,
    product: &Presheaf,
    pairs: &[BTreeSet<(usize, usize)>],
) -> Subpresheaf {
    let _ = product;
    // product sections are tuples in lexicographic order over (a, b)
    Subpresheaf {
        sections: site
            .cat
            .objects()
            .map(|u| {
                pairs[u.0]
                    .iter()
                    .map(|&(a, b)| a * x.size(u) + b)
                    .collect::<BTreeSet<usize>>()
            })
            .collect(),
    }
}

/// Quotient of the carrier by an equivalence relation: sheafified pointwise
/// quotient. The projection is an epimorphism, coequalizes the legs, and is
/// effective (the kernel pair recovers the relation); all three facts are
/// re-verified.
pub fn quotient_by_relation(
    site: &Site,
    rel: &EquivalenceRelation,
) -> Result<(Presheaf, Morphism), Error> {
    let cat = &site.cat;
    let x = &rel.carrier;
    let mut class_at: Vec<Vec<usize>> = Vec::with_capacity(cat.object_count());
    let mut reps_at: Vec<Vec<usize>> = Vec::with_capacity(cat.object_count());
    for u in cat.objects() {
        let n = x.size(u);
        let mut class = vec![usize::MAX; n];
        let mut reps = Vec::new();
        for s in 0..n {
            if class[s] != usize::MAX {
                continue;
            }
            let c = reps.len();
            for t in s..n {
                if rel.related(u, s, t) {
                    class[t] = c;
                }
            }
            reps.push(s);
        }
        class_at.push(class);
        reps_at.push(reps);
    }
    let labels: Vec<Vec<String>> = reps_at
        .iter()
        .enumerate()
        .map(|(u, reps)| reps.iter().map(|&s| x.labels[u][s].clone()).collect())
        .collect();
    let restrict = cat
        .all_arrows()
        .map(|f| {
            let (v, u) = (cat.src(f), cat.dst(f));
            reps_at[u.0].iter().map(|&s| class_at[v.0][x.apply(f, s)]).collect()
        })
        .collect();
    let pointwise = Presheaf { labels, restrict };
    let proj = NatTrans { component: class_at };
    let (quotient, q) = if is_sheaf(site, &pointwise)?.ok {
        (pointwise.clone(), proj)
    } else {
        let (sheaf, unit) = sheafify(site, &pointwise);
        (sheaf, unit.map.compose(&proj))
    };
    let q = Morphism { src: x.clone(), dst: quotient.clone(), map: q };
    let epi = is_epimorphism(site, &q)?;
    if !epi.ok {
        return Err(Error::Internal("quotient projection is not an epimorphism".into()));
    }
    let (_, r1, r2) = rel.legs(site);
    if q.compose(&r1).map != q.compose(&r2).map {
        return Err(Error::Internal("quotient projection does not coequalize the legs".into()));
    }
    for u in cat.objects() {
        for a in 0..x.size(u) {
            for b in 0..x.size(u) {
                let kernel = q.map.apply(u, a) == q.map.apply(u, b);
                if kernel != rel.related(u, a, b) {
                    return Err(Error::Internal(
                        "quotient is not effective: kernel pair differs from the relation".into(),
                    ));
                }
            }
        }
    }
    Ok((quotient, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::presheaf::{find_isomorphism, yoneda, yoneda_map};
    use crate::topology::Site;

    fn h(site: &Site, name: &str) -> Presheaf {
        yoneda(&site.cat, site.cat.object_by_name(name).unwrap())
    }

    #[test]
    fn identity_is_epi_and_mono() {
        let site = fixtures::interval_site();
        let id = Morphism::identity(&h(&site, "x_y"));
        assert!(is_epimorphism(&site, &id).unwrap().ok);
        assert!(is_monomorphism(&site, &id).unwrap().ok);
    }

    #[test]
    fn point_cover_of_xy_is_epi() {
        let site = fixtures::interval_site();
        let parts = [h(&site, "x"), h(&site, "y")];
        let legs = [
            yoneda_map(&site.cat, site.cat.arrow_by_name("x_to_x_y").unwrap()),
            yoneda_map(&site.cat, site.cat.arrow_by_name("y_to_x_y").unwrap()),
        ];
        let (_, _, induced) =
            coproduct_cotuple(&site, &parts, &legs, &h(&site, "x_y")).unwrap();
        assert!(is_epimorphism(&site, &induced).unwrap().ok);
    }

    #[test]
    fn fold_map_is_not_mono() {
        let site = fixtures::interval_site();
        let f = h(&site, "x");
        let legs = [Morphism::identity(&f), Morphism::identity(&f)];
        let (_, _, fold) =
            coproduct_cotuple(&site, &[f.clone(), f.clone()], &legs, &f).unwrap();
        let verdict = is_monomorphism(&site, &fold).unwrap();
        assert!(!verdict.ok);
        assert!(verdict.witness.is_some());
    }

    #[test]
    fn diagonal_is_mono() {
        let site = fixtures::interval_site();
        let f = h(&site, "x_y");
        let (product, _, _) = sheaf_product(&site, &f, &f).unwrap();
        let component = site
            .cat
            .objects()
            .map(|u| (0..f.size(u)).map(|s| s * f.size(u) + s).collect())
            .collect();
        let diag = Morphism { src: f, dst: product, map: NatTrans { component } };
        assert!(is_monomorphism(&site, &diag).unwrap().ok);
    }

    #[test]
    fn image_of_mono_is_source() {
        let site = fixtures::interval_site();
        let m = yoneda_map(&site.cat, site.cat.arrow_by_name("x_to_x_m_y").unwrap());
        let fact = image_factorization(&site, &m).unwrap();
        assert!(is_isomorphism(&site, &fact.epi));
        // the image subsheaf of h_L is the part generated by the point x
        let sections: Vec<usize> =
            fact.sub.sections.iter().map(|s| s.len()).collect();
        // objects in canonical order: empty, x, y, x_y, x_m_y
        assert_eq!(sections, vec![1, 1, 0, 0, 0]);
    }

    #[test]
    fn image_of_epi_is_target() {
        let site = fixtures::interval_site();
        let two = h(&site, "x_y");
        let id = Morphism::identity(&two);
        let fact = image_factorization(&site, &id).unwrap();
        assert!(is_isomorphism(&site, &fact.mono));
    }

    #[test]
    fn empty_diagram_limit_is_terminal_sheaf() {
        let site = fixtures::interval_site();
        let (t, _) = sheaf_limit(&site, &Diagram::default()).unwrap();
        for u in site.cat.objects() {
            assert_eq!(t.size(u), 1);
        }
    }

    #[test]
    fn pullback_of_representables_over_top() {
        let site = fixtures::interval_site();
        let f = yoneda_map(&site.cat, site.cat.arrow_by_name("x_to_x_m_y").unwrap());
        let g = yoneda_map(&site.cat, site.cat.arrow_by_name("y_to_x_m_y").unwrap());
        let (apex, _, _) = sheaf_pullback(&site, &f, &g).unwrap();
        assert!(find_isomorphism(&site.cat, &apex, &h(&site, "empty")).is_some());
    }

    #[test]
    fn pullback_of_mono_is_mono() {
        let site = fixtures::interval_site();
        let m = yoneda_map(&site.cat, site.cat.arrow_by_name("x_to_x_m_y").unwrap());
        let g = yoneda_map(&site.cat, site.cat.arrow_by_name("x_y_to_x_m_y").unwrap());
        assert!(is_monomorphism(&site, &m).unwrap().ok);
        let (_, _, to_g_src) = sheaf_pullback(&site, &m, &g).unwrap();
        assert!(is_monomorphism(&site, &to_g_src).unwrap().ok);
    }

    #[test]
    fn singleton_coproduct_is_iso() {
        let site = fixtures::interval_site();
        let f = h(&site, "x_y");
        let (coprod, incl) = sheaf_coproduct(&site, &[f]).unwrap();
        assert!(incl[0].map.is_pointwise_bijective(&incl[0].src, &coprod));
    }

    #[test]
    fn empty_coproduct_is_initial_sheaf() {
        let site = fixtures::interval_site();
        let (initial, _) = sheaf_coproduct(&site, &[]).unwrap();
        assert!(is_sheaf(&site, &initial).unwrap().ok);
        // the initial sheaf has a unique section at the empty open
        let empty = site.cat.object_by_name("empty").unwrap();
        assert_eq!(initial.size(empty), 1);
        let top = site.cat.object_by_name("x_m_y").unwrap();
        assert_eq!(initial.size(top), 0);
    }

    #[test]
    fn coproduct_of_endpoint_representables() {
        let site = fixtures::interval_site();
        let (coprod, incl) = sheaf_coproduct(&site, &[h(&site, "x"), h(&site, "y")]).unwrap();
        // matching-family count over the {x},{y} cover of x_y: one section
        let xy = site.cat.object_by_name("x_y").unwrap();
        assert_eq!(coprod.size(xy), 1);
        assert!(find_isomorphism(&site.cat, &coprod, &h(&site, "x_y")).is_some());
        for inc in &incl {
            assert!(is_monomorphism(&site, inc).unwrap().ok);
        }
    }

    #[test]
    fn diagonal_quotient_is_identity() {
        let site = fixtures::interval_site();
        let x = h(&site, "x_y");
        let rel = EquivalenceRelation::diagonal(&site, &x);
        let (q, proj) = quotient_by_relation(&site, &rel).unwrap();
        assert!(proj.map.is_pointwise_bijective(&x, &q));
    }

    #[test]
    fn total_relation_on_point_collapses() {
        let site = fixtures::point_site();
        let x = Presheaf {
            labels: vec![vec!["a".into(), "b".into(), "c".into()]],
            restrict: vec![vec![0, 1, 2]],
        };
        let pairs = vec![(0..3).flat_map(|a| (0..3).map(move |b| (a, b))).collect()];
        let rel = validate_equivalence_relation(&site, &x, &pairs).unwrap();
        let (q, _) = quotient_by_relation(&site, &rel).unwrap();
        assert_eq!(q.size(ObjId(0)), 1);
    }

    #[test]
    fn missing_transitivity_is_rejected() {
        let site = fixtures::point_site();
        let x = Presheaf {
            labels: vec![vec!["a".into(), "b".into(), "c".into()]],
            restrict: vec![vec![0, 1, 2]],
        };
        let pairs = vec![[(0, 0), (1, 1), (2, 2), (0, 1), (1, 0), (1, 2), (2, 1)]
            .into_iter()
            .collect()];
        assert!(matches!(
            validate_equivalence_relation(&site, &x, &pairs),
            Err(Error::NotAnEquivalenceRelation(_))
        ));
    }

    #[test]
    fn union_of_point_images_misses_global_section() {
        let site = fixtures::interval_site();
        let top = h(&site, "x_m_y");
        let subs: Vec<Subpresheaf> = ["x", "y", "x_y"]
            .iter()
            .map(|name| {
                let arrow = site.cat.arrow_by_name(&format!("{}_to_x_m_y", name)).unwrap();
                image_subpresheaf(&yoneda_map(&site.cat, arrow))
            })
            .collect();
        let union = subsheaf_union(&site, &top, &subs).unwrap();
        assert!(!union.is_full(&top));
        let l = site.cat.object_by_name("x_m_y").unwrap();
        assert!(union.sections[l.0].is_empty());
        // union with the empty subobject changes nothing
        let with_empty =
            subsheaf_union(&site, &top, &[union.clone(), Subpresheaf::empty(&site.cat)]).unwrap();
        assert!(subsheaf_equal(&site, &top, &union, &with_empty).unwrap());
    }

    #[test]
    fn parent_mismatch_is_reported() {
        let site = fixtures::interval_site();
        let a = h(&site, "x");
        let b = h(&site, "x_m_y");
        let sub = Subpresheaf::full(&b);
        assert!(matches!(
            subsheaf_equal(&site, &a, &sub, &sub),
            Err(Error::ParentMismatch)
        ));
    }

    #[test]
    fn mono_and_epi_implies_iso() {
        let site = fixtures::interval_site();
        let f = h(&site, "x_y");
        let id = Morphism::identity(&f);
        assert!(is_epimorphism(&site, &id).unwrap().ok);
        assert!(is_monomorphism(&site, &id).unwrap().ok);
        assert!(is_isomorphism(&site, &id));
    }

    #[test]
    fn epi_stable_under_base_change() {
        let site = fixtures::interval_site();
        let parts = [h(&site, "x"), h(&site, "y")];
        let legs = [
            yoneda_map(&site.cat, site.cat.arrow_by_name("x_to_x_m_y").unwrap()),
            yoneda_map(&site.cat, site.cat.arrow_by_name("y_to_x_m_y").unwrap()),
        ];
        let (_, _, induced) =
            coproduct_cotuple(&site, &parts, &legs, &h(&site, "x_m_y")).unwrap();
        let onto_image = image_factorization(&site, &induced).unwrap();
        let epi = onto_image.epi;
        assert!(is_epimorphism(&site, &epi).unwrap().ok);
        // pull the epi back along the inclusion of x_y into the image
        let xy_into = yoneda_map(&site.cat, site.cat.arrow_by_name("x_y_to_x_m_y").unwrap());
        let component = site
            .cat
            .objects()
            .map(|u| {
                (0..xy_into.src.size(u))
                    .map(|s| {
                        let target = xy_into.map.apply(u, s);
                        onto_image
                            .sub
                            .sections[u.0]
                            .iter()
                            .position(|&x| x == target)
                            .expect("x_y sections land in the image")
                    })
                    .collect()
            })
            .collect();
        let g = Morphism {
            src: xy_into.src.clone(),
            dst: onto_image.image.clone(),
            map: NatTrans { component },
        };
        let (_, _, pulled) = sheaf_pullback(&site, &epi, &g).unwrap();
        assert!(is_epimorphism(&site, &pulled).unwrap().ok);
    }
}
