//! Fixture constructors shared by tests, the shipped corpus, and the
//! finite-space shorthand: posets of opens and their open-cover sites.

use std::collections::BTreeSet;

use crate::cat::{CategoryBuilder, FiniteCategory, ObjId};
use crate::presheaf::{Presheaf, Subpresheaf};
use crate::topology::{Family, Pretopology, Site};

/// One object, one identity arrow.
pub fn point_category() -> FiniteCategory {
    let mut b = CategoryBuilder::new();
    let pt = b.object("pt");
    let id = b.arrow("id_pt", pt, pt);
    b.identity(pt, id);
    b.build().expect("point category is valid")
}

/// The point site: minimal topology on the one-object category.
pub fn point_site() -> Site {
    let cat = point_category();
    let mut cov = Pretopology::empty(&cat);
    cov.add(ObjId(0), [cat.id(ObjId(0))].into());
    Site::from_pretopology(cat, cov).expect("point site is valid")
}

/// Builds the poset of opens of a finite space as a category, returning the
/// canonically ordered open sets alongside.
///
/// Opens are named by joining their point names with `_` (the empty set is
/// `empty`); the inclusion V ⊆ U is named `<V>_to_<U>`.
pub fn poset_of_opens_with_sets(
    points: &[&str],
    opens: &[&[usize]],
) -> (FiniteCategory, Vec<BTreeSet<usize>>) {
    let mut sorted: Vec<BTreeSet<usize>> =
        opens.iter().map(|o| o.iter().copied().collect()).collect();
    sorted.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    sorted.dedup();
    let name = |o: &BTreeSet<usize>| -> String {
        if o.is_empty() {
            "empty".to_string()
        } else {
            o.iter().map(|&p| points[p]).collect::<Vec<_>>().join("_")
        }
    };
    let mut b = CategoryBuilder::new();
    let ids: Vec<ObjId> = sorted.iter().map(|o| b.object(&name(o))).collect();
    let mut arrow_of = vec![vec![None; sorted.len()]; sorted.len()];
    for (i, small) in sorted.iter().enumerate() {
        for (j, big) in sorted.iter().enumerate() {
            if small.is_subset(big) {
                let arr = if i == j {
                    b.arrow(&format!("id_{}", name(big)), ids[i], ids[j])
                } else {
                    b.arrow(&format!("{}_to_{}", name(small), name(big)), ids[i], ids[j])
                };
                arrow_of[i][j] = Some(arr);
            }
        }
    }
    for (i, _) in sorted.iter().enumerate() {
        b.identity(ids[i], arrow_of[i][i].unwrap());
    }
    for i in 0..sorted.len() {
        for j in 0..sorted.len() {
            for k in 0..sorted.len() {
                if let (Some(f), Some(g), Some(h)) =
                    (arrow_of[i][j], arrow_of[j][k], arrow_of[i][k])
                {
                    b.composite(f, g, h);
                }
            }
        }
    }
    (b.build().expect("a poset of opens is a valid category"), sorted)
}

pub fn poset_of_opens(points: &[&str], opens: &[&[usize]]) -> FiniteCategory {
    poset_of_opens_with_sets(points, opens).0
}

/// The open-cover pretopology on a poset of opens: a family covers U exactly
/// when the union of its sources is U. The empty family covers the empty open.
pub fn open_cover_pretopology(
    cat: &FiniteCategory,
    open_sets: &[BTreeSet<usize>],
) -> Pretopology {
    let mut cov = Pretopology::empty(cat);
    for (u, target) in open_sets.iter().enumerate() {
        let subopens: Vec<usize> =
            (0..open_sets.len()).filter(|&v| open_sets[v].is_subset(target)).collect();
        assert!(subopens.len() <= 20, "open-cover enumeration bound exceeded");
        for mask in 0u64..(1u64 << subopens.len()) {
            let chosen: Vec<usize> = subopens
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            let union: BTreeSet<usize> =
                chosen.iter().flat_map(|&v| open_sets[v].iter().copied()).collect();
            if union == *target {
                let family: Family = chosen
                    .iter()
                    .map(|&v| {
                        cat.hom(ObjId(v), ObjId(u))
                            .first()
                            .copied()
                            .expect("inclusion arrow exists")
                    })
                    .collect();
                cov.add(ObjId(u), family);
            }
        }
    }
    cov
}

/// Site of a finite space: poset of opens with the open-cover topology.
pub fn open_cover_site(points: &[&str], opens: &[&[usize]]) -> Site {
    let (cat, sets) = poset_of_opens_with_sets(points, opens);
    let cov = open_cover_pretopology(&cat, &sets);
    Site::from_pretopology(cat, cov).expect("open covers form a pretopology")
}

const INTERVAL_POINTS: [&str; 3] = ["x", "m", "y"];
const INTERVAL_OPENS: [&[usize]; 5] = [&[], &[0], &[2], &[0, 2], &[0, 1, 2]];
const SIERPINSKI_POINTS: [&str; 2] = ["p0", "p1"];
const SIERPINSKI_OPENS: [&[usize]; 3] = [&[], &[1], &[0, 1]];

/// Opens of the interval model L = {x, m, y}: ∅, {x}, {y}, {x,y}, L.
pub fn interval_category() -> FiniteCategory {
    poset_of_opens(&INTERVAL_POINTS, &INTERVAL_OPENS)
}

pub fn interval_site() -> Site {
    open_cover_site(&INTERVAL_POINTS, &INTERVAL_OPENS)
}

/// Opens of the Sierpiński space {p0, p1}: ∅, {p1}, {p0,p1}.
pub fn sierpinski_category() -> FiniteCategory {
    poset_of_opens(&SIERPINSKI_POINTS, &SIERPINSKI_OPENS)
}

pub fn sierpinski_site() -> Site {
    open_cover_site(&SIERPINSKI_POINTS, &SIERPINSKI_OPENS)
}

/// Three objects with a parallel pair u,v: a→b coequalized by f: b→c, so f
/// is not a monomorphism.
pub fn fold_category() -> FiniteCategory {
    let mut b = CategoryBuilder::new();
    let a = b.object("a");
    let bb = b.object("b");
    let c = b.object("c");
    let ia = b.arrow("id_a", a, a);
    let ib = b.arrow("id_b", bb, bb);
    let ic = b.arrow("id_c", c, c);
    let u = b.arrow("u", a, bb);
    let v = b.arrow("v", a, bb);
    let f = b.arrow("f", bb, c);
    let w = b.arrow("w", a, c);
    b.identity(a, ia);
    b.identity(bb, ib);
    b.identity(c, ic);
    b.composite(u, f, w);
    b.composite(v, f, w);
    b.build().expect("fold category is valid")
}

/// Gluing data for the pseudocircle: two interval charts overlapping on the
/// two endpoint opens and nowhere else.
pub fn pseudocircle_data(ctx: &crate::geometry::GeometricContext) -> crate::geometry::GluingData {
    let cat = ctx.cat();
    let top = cat.object_by_name("x_m_y").expect("interval context");
    let mut data = crate::geometry::GluingData::new(vec![top, top]);
    let table = cat
        .objects()
        .map(|w| {
            if cat.object_name(w) == "x_m_y" {
                BTreeSet::new()
            } else {
                [(0usize, 0usize)].into()
            }
        })
        .collect();
    data.set_overlap(0, 1, table);
    data
}

/// Every stable subpresheaf of `parent`, by filtering all per-object subsets.
/// Only usable on small parents.
pub fn all_subpresheaves(cat: &FiniteCategory, parent: &Presheaf) -> Vec<Subpresheaf> {
    let total: usize = parent.total_sections();
    assert!(total <= 16, "subpresheaf enumeration bound exceeded");
    let sizes: Vec<usize> = cat.objects().map(|u| parent.size(u)).collect();
    let mut flat = Vec::new();
    for (u, &n) in sizes.iter().enumerate() {
        for s in 0..n {
            flat.push((u, s));
        }
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << total) {
        let mut sub = Subpresheaf::empty(cat);
        for (bit, &(u, s)) in flat.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                sub.insert(ObjId(u), s);
            }
        }
        if sub.validate_stable(cat, parent).is_ok() {
            out.push(sub);
        }
    }
    out
}
