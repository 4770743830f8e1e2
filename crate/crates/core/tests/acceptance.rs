//! Acceptance suite: one test per criterion, each printing a pass line once
//! its assertions hold.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geoctx::cat::{ArrId, ObjId};
use geoctx::fixtures;
use geoctx::geometry::{
    self, all_arrows_class, context_from_finite_space, find_open_atlas, glue,
    is_class_morphism_of_sheaves, is_elementary_scheme, is_open_immersion,
    scheme_fibred_product, validate_geometric_context, AdmissibleWitness, GcWitness,
    GeometricContext, GluingData,
};
use geoctx::presheaf::{
    enumerate_nat_trans, find_isomorphism, presheaf_product, yoneda, yoneda_map, Morphism,
    NatTrans, Presheaf,
};
use geoctx::sheaf_ops::{
    coproduct_cotuple, image_factorization, is_epimorphism, is_isomorphism, is_monomorphism,
    sheaf_coproduct, sheaf_product,
};
use geoctx::topology::{
    is_sheaf, sheafify, validate_pretopology, Family, PretopologyViolation, Site,
};

const BUDGET: u64 = 1_000_000;

fn interval() -> GeometricContext {
    geometry::interval_context()
}

fn sierpinski() -> GeometricContext {
    geometry::sierpinski_context()
}

/// Random presheaf on a poset-of-opens site: restriction maps are drawn for
/// covering relations and composed for the rest, then the whole table is
/// rechecked (rejection handles the diamonds).
fn random_presheaf(site: &Site, rng: &mut ChaCha8Rng) -> Presheaf {
    let cat = &site.cat;
    'attempt: loop {
        let sizes: Vec<usize> = cat
            .objects()
            .map(|u| {
                // a small set at the bottom keeps the diamond rejection cheap
                if cat.arrows_into(u).len() == 1 {
                    rng.gen_range(1..=2)
                } else {
                    rng.gen_range(1..=4)
                }
            })
            .collect();
        let labels: Vec<Vec<String>> = sizes
            .iter()
            .map(|&n| (0..n).map(|i| format!("s{}", i)).collect())
            .collect();
        // interval length of an arrow = how many objects lie strictly between
        let less = |a: ObjId, b: ObjId| a != b && !cat.hom(a, b).is_empty();
        let is_cover = |f: ArrId| {
            let (v, u) = (cat.src(f), cat.dst(f));
            v != u && !cat.objects().any(|w| less(v, w) && less(w, u))
        };
        let mut restrict: Vec<Option<Vec<usize>>> = vec![None; cat.arrow_count()];
        for u in cat.objects() {
            restrict[cat.id(u).0] = Some((0..sizes[u.0]).collect());
        }
        for f in cat.all_arrows() {
            if is_cover(f) {
                let (v, u) = (cat.src(f), cat.dst(f));
                restrict[f.0] =
                    Some((0..sizes[u.0]).map(|_| rng.gen_range(0..sizes[v.0])).collect());
            }
        }
        // longer arrows: compose any covering-relation factorization
        loop {
            let mut progressed = false;
            for f in cat.all_arrows() {
                if restrict[f.0].is_some() {
                    continue;
                }
                let (v, u) = (cat.src(f), cat.dst(f));
                for w in cat.objects() {
                    if !(less(v, w) && less(w, u)) {
                        continue;
                    }
                    let first = cat.hom(w, u)[0];
                    let second = cat.hom(v, w)[0];
                    if let (Some(fu), Some(sv)) = (&restrict[first.0], &restrict[second.0]) {
                        restrict[f.0] = Some(fu.iter().map(|&s| sv[s]).collect());
                        progressed = true;
                        break;
                    }
                }
            }
            if !progressed {
                break;
            }
        }
        let table: Vec<Vec<usize>> = match restrict.into_iter().collect::<Option<Vec<_>>>() {
            Some(t) => t,
            None => continue 'attempt,
        };
        let candidate = Presheaf { labels, restrict: table };
        if candidate.validate(cat).is_ok() {
            return candidate;
        }
    }
}

fn all_morphisms(ctx: &GeometricContext, src: &Presheaf, dst: &Presheaf) -> Vec<Morphism> {
    enumerate_nat_trans(ctx.cat(), src, dst)
        .into_iter()
        .map(|map| Morphism { src: src.clone(), dst: dst.clone(), map })
        .collect()
}

fn pseudocircle(ctx: &GeometricContext) -> (Presheaf, geometry::Atlas) {
    let data = fixtures::pseudocircle_data(ctx);
    let mut budget = BUDGET;
    let glued = glue(ctx, &data, &mut budget).expect("pseudocircle glues");
    (glued.sheaf, glued.atlas)
}

/// Fixture sheaves used by the morphism sweeps.
fn sheaf_pool(ctx: &GeometricContext, with_pc: bool) -> Vec<Presheaf> {
    let cat = ctx.cat();
    let mut pool: Vec<Presheaf> = cat.objects().map(|u| yoneda(cat, u)).collect();
    let (initial, _) = sheaf_coproduct(&ctx.site, &[]).unwrap();
    pool.push(initial);
    let h0 = yoneda(cat, ObjId(1));
    let h1 = yoneda(cat, ObjId(2));
    let (coprod, _) = sheaf_coproduct(&ctx.site, &[h0, h1]).unwrap();
    pool.push(coprod);
    if with_pc {
        pool.push(pseudocircle(ctx).0);
    }
    pool
}

#[test]
fn criterion_1_context_validation_and_mutations() {
    // the three spaces validate end to end
    let point = context_from_finite_space(&["pt"], &[&[], &[0]]).unwrap();
    assert_eq!(point.cat().object_count(), 2);
    let int = interval();
    let sierp = sierpinski();
    for ctx in [&point, &int, &sierp] {
        let report = validate_geometric_context(&ctx.site, &ctx.class_p);
        assert!(report.all_ok());
    }

    // drop a cover: the lone {x}-cover of {x,y} breaks pullback stability
    let cat = int.cat().clone();
    let xy = cat.object_by_name("x_y").unwrap();
    let x = cat.object_by_name("x").unwrap();
    let y = cat.object_by_name("y").unwrap();
    let mut cov = int.site.pretopology.clone().unwrap();
    cov.covers[xy.0] = [Family::from([cat.hom(x, xy)[0]])].into();
    let err = validate_pretopology(&cat, &cov).unwrap_err();
    match err {
        PretopologyViolation::PullbackUnstable { object, along, .. } => {
            assert_eq!(object, xy);
            assert_eq!(along, cat.hom(y, xy)[0]);
        }
        other => panic!("expected pullback instability, got {:?}", other),
    }

    // remove a class arrow: exactly GC3 flips, with a composition witness
    let mut class = all_arrows_class(&cat);
    class.remove(&cat.arrow_by_name("x_to_x_m_y").unwrap());
    let report = validate_geometric_context(&int.site, &class);
    let ok: Vec<bool> = report.gc.iter().map(|v| v.ok).collect();
    assert_eq!(ok, vec![true, true, false, true, true, true]);
    assert!(matches!(
        report.gc[2].witness,
        Some(GcWitness::NotAdmissible(AdmissibleWitness::CompositionEscapes { .. }))
    ));

    // delete an object: the point context loses its terminal, exactly GC1
    let empty_cat = geoctx::cat::CategoryBuilder::new().build().unwrap();
    let empty_site = Site::from_topology(
        empty_cat,
        geoctx::topology::Topology { covering: vec![] },
    )
    .unwrap();
    let report = validate_geometric_context(&empty_site, &BTreeSet::new());
    let ok: Vec<bool> = report.gc.iter().map(|v| v.ok).collect();
    assert_eq!(ok, vec![false, true, true, true, true, true]);
    assert!(matches!(report.gc[0].witness, Some(GcWitness::MissingTerminal)));

    println!("criterion 1 (context validation and mutations): pass");
}

#[test]
fn criterion_2_sheafification_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut checked = 0usize;
    for ctx in [interval(), sierpinski()] {
        let site = &ctx.site;
        let cat = ctx.cat();
        let representables: Vec<Presheaf> = cat.objects().map(|u| yoneda(cat, u)).collect();
        for _ in 0..27 {
            let f = random_presheaf(site, &mut rng);
            let (a_f, unit) = sheafify(site, &f);
            assert!(is_sheaf(site, &a_f).unwrap().ok, "a(F) is a sheaf");
            let (a_a_f, _) = sheafify(site, &a_f);
            assert!(
                find_isomorphism(cat, &a_f, &a_a_f).is_some(),
                "sheafification is idempotent"
            );
            // adjunction: composition with the unit bijects hom-sets
            for g in &representables {
                let upstairs = enumerate_nat_trans(cat, &a_f, g);
                let downstairs: BTreeSet<NatTrans> =
                    enumerate_nat_trans(cat, &f, g).into_iter().collect();
                let composed: BTreeSet<NatTrans> =
                    upstairs.iter().map(|t| t.compose(&unit.map)).collect();
                assert_eq!(composed.len(), upstairs.len(), "composition with unit is injective");
                assert_eq!(composed, downstairs, "composition with unit is surjective");
            }
            // left exactness on binary products
            let g = random_presheaf(site, &mut rng);
            let (product, _, _) = presheaf_product(cat, &f, &g);
            let (a_product, _) = sheafify(site, &product);
            let (a_f2, _) = sheafify(site, &f);
            let (a_g, _) = sheafify(site, &g);
            let (product_of_sheaves, _, _) = sheaf_product(site, &a_f2, &a_g).unwrap();
            assert!(
                find_isomorphism(cat, &a_product, &product_of_sheaves).is_some(),
                "sheafification preserves binary products"
            );
            checked += 1;
        }
    }
    assert!(checked >= 50, "at least fifty randomized presheaves, got {}", checked);
    println!("criterion 2 (sheafification suite, {} presheaves): pass", checked);
}

#[test]
fn criterion_3_epi_oracle_on_the_point_topos() {
    let ctx = geometry::point_context();
    let site = &ctx.site;
    let set = |n: usize| Presheaf {
        labels: vec![(0..n).map(|i| format!("e{}", i)).collect()],
        restrict: vec![(0..n).collect()],
    };
    // all functions from an m-element set to an n-element set
    fn functions(m: usize, n: usize) -> Vec<Vec<usize>> {
        if m == 0 {
            return vec![vec![]];
        }
        if n == 0 {
            return vec![];
        }
        (0..n.pow(m as u32))
            .map(|mut code| {
                (0..m)
                    .map(|_| {
                        let v = code % n;
                        code /= n;
                        v
                    })
                    .collect()
            })
            .collect()
    }
    let mut agreements = 0usize;
    for m in 0..=3usize {
        for n in 0..=3usize {
            let src = set(m);
            let dst = set(n);
            for component in functions(m, n) {
                let morphism = Morphism {
                    src: src.clone(),
                    dst: dst.clone(),
                    map: NatTrans { component: vec![component.clone()] },
                };
                let engine = is_epimorphism(site, &morphism).unwrap().ok;
                // oracle: right cancellation against every set of size <= 3
                let mut cancels = true;
                'oracle: for t in 0..=3usize {
                    let candidates = functions(n, t);
                    for u in &candidates {
                        for v in &candidates {
                            if u == v {
                                continue;
                            }
                            let equal_after = component.iter().all(|&s| u[s] == v[s]);
                            if equal_after {
                                cancels = false;
                                break 'oracle;
                            }
                        }
                    }
                }
                assert_eq!(engine, cancels, "m={} n={} map={:?}", m, n, component);
                agreements += 1;
            }
        }
    }
    println!(
        "criterion 3 (epi oracle on the point topos, {} morphisms): pass",
        agreements
    );
}

#[test]
fn criterion_4_open_immersion_equivalence_on_arrows() {
    for ctx in [interval(), sierpinski()] {
        let cat = ctx.cat();
        for phi in cat.all_arrows() {
            let lhs = is_open_immersion(&ctx, &yoneda_map(cat, phi)).unwrap().ok;
            let rhs = ctx.in_class(phi) && cat.is_mono(phi);
            assert_eq!(lhs, rhs, "arrow {}", cat.arrow_name(phi));
        }
    }
    // the same equivalence in a context whose class is a proper subset
    let site = fixtures::sierpinski_site();
    let cat = site.cat.clone();
    let mut class = geometry::identities_class(&cat);
    class.insert(cat.arrow_by_name("empty_to_p1").unwrap());
    class.insert(cat.arrow_by_name("empty_to_p0_p1").unwrap());
    let ctx = GeometricContext::new(site, class).unwrap();
    for phi in cat.all_arrows() {
        let lhs = is_open_immersion(&ctx, &yoneda_map(&cat, phi)).unwrap().ok;
        let rhs = ctx.in_class(phi) && cat.is_mono(phi);
        assert_eq!(lhs, rhs, "restricted class, arrow {}", cat.arrow_name(phi));
    }
    println!("criterion 4 (open immersion equivalence on arrows): pass");
}

#[test]
fn criterion_5_open_immersion_corollary_cross_check() {
    let mut instances = 0usize;
    for (ctx, with_pc) in [(interval(), true), (sierpinski(), false)] {
        let pool = sheaf_pool(&ctx, with_pc);
        for src in &pool {
            for dst in &pool {
                for m in all_morphisms(&ctx, src, dst) {
                    let open = is_open_immersion(&ctx, &m).unwrap().ok;
                    let mono = is_monomorphism(&ctx.site, &m).unwrap().ok;
                    let mut budget = BUDGET;
                    let class =
                        is_class_morphism_of_sheaves(&ctx, &ctx.class_p, &m, &mut budget)
                            .unwrap()
                            .ok;
                    assert_eq!(open, mono && class, "corollary fails on an instance");
                    instances += 1;
                }
            }
        }
    }
    assert!(instances >= 200, "need at least 200 instances, got {}", instances);
    println!(
        "criterion 5 (open immersion = mono + class morphism, {} instances): pass",
        instances
    );
}

#[test]
fn criterion_6_image_route_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut checked = 0usize;
    for ctx in [interval(), sierpinski()] {
        let site = &ctx.site;
        while checked < if ctx.cat().object_count() == 5 { 60 } else { 110 } {
            let f = random_presheaf(site, &mut rng);
            let g = random_presheaf(site, &mut rng);
            let (a_f, _) = sheafify(site, &f);
            let (a_g, _) = sheafify(site, &g);
            let all = enumerate_nat_trans(ctx.cat(), &a_f, &a_g);
            if all.is_empty() {
                continue;
            }
            let pick = rng.gen_range(0..all.len());
            let m = Morphism { src: a_f.clone(), dst: a_g.clone(), map: all[pick].clone() };
            // image_factorization fails loudly if the two routes disagree
            let fact = image_factorization(site, &m).unwrap();
            if is_monomorphism(site, &m).unwrap().ok {
                assert!(is_isomorphism(site, &fact.epi), "mono => epi part iso");
            }
            if is_epimorphism(site, &m).unwrap().ok {
                assert!(is_isomorphism(site, &fact.mono), "epi => mono part iso");
            }
            checked += 1;
        }
    }
    assert!(checked >= 100);
    println!("criterion 6 (image route agreement, {} morphisms): pass", checked);
}

#[test]
fn criterion_7_gluing_theorem_round_trip() {
    let ctx = interval();
    let cat = ctx.cat();
    let (pc, atlas) = pseudocircle(&ctx);
    let mut budget = BUDGET;
    assert!(is_elementary_scheme(&ctx, &pc, &mut budget).unwrap());
    for u in cat.objects() {
        assert!(
            find_isomorphism(cat, &pc, &yoneda(cat, u)).is_none(),
            "pseudocircle is not representable"
        );
    }
    let data = geometry::decompose(&ctx, &pc, &atlas, &mut budget).unwrap();
    let reglued = glue(&ctx, &data, &mut budget).unwrap();
    assert!(find_isomorphism(cat, &pc, &reglued.sheaf).is_some(), "glue after decompose");

    // two charts with empty overlap glue to the coproduct exactly
    let x = cat.object_by_name("x").unwrap();
    let y = cat.object_by_name("y").unwrap();
    let data = GluingData::new(vec![x, y]);
    let glued = glue(&ctx, &data, &mut budget).unwrap();
    let (coprod, _) = sheaf_coproduct(&ctx.site, &[yoneda(cat, x), yoneda(cat, y)]).unwrap();
    assert!(find_isomorphism(cat, &glued.sheaf, &coprod).is_some());
    println!("criterion 7 (gluing theorem round trip): pass");
}

#[test]
fn criterion_8_closure_properties() {
    let ctx = interval();
    let cat = ctx.cat();
    let mut budget = BUDGET;
    let (pc, _) = pseudocircle(&ctx);
    let mut schemes: Vec<Presheaf> = cat.objects().map(|u| yoneda(cat, u)).collect();
    schemes.push(pc);

    // binary products of schemes are schemes
    for a in &schemes {
        for b in &schemes {
            let (product, _, _) = sheaf_product(&ctx.site, a, b).unwrap();
            assert!(is_elementary_scheme(&ctx, &product, &mut budget).unwrap());
        }
    }
    // finite coproducts of schemes are schemes, and the inclusions are open
    // immersions
    for a in &schemes {
        for b in &schemes {
            let (coprod, inclusions) = sheaf_coproduct(&ctx.site, &[a.clone(), b.clone()])
                .unwrap();
            assert!(is_elementary_scheme(&ctx, &coprod, &mut budget).unwrap());
            for inc in &inclusions {
                assert!(is_open_immersion(&ctx, inc).unwrap().ok, "coproduct inclusion");
            }
        }
    }
    // fibred products over a representable base (the ambient poset has
    // pullbacks)
    let top = cat.object_by_name("x_m_y").unwrap();
    let h_top = yoneda(cat, top);
    let legs: Vec<Morphism> = cat
        .objects()
        .map(|u| yoneda_map(cat, cat.hom(u, top)[0]))
        .collect();
    for f in &legs {
        for g in &legs {
            let (apex, _, _, atlas) = scheme_fibred_product(&ctx, f, g, &mut budget).unwrap();
            assert!(is_elementary_scheme(&ctx, &apex, &mut budget).unwrap());
            geometry::validate_atlas(&ctx, &apex, &atlas, &mut budget).unwrap();
        }
    }
    // a non-representable factor as well: PC x PC over the terminal sheaf
    let (pc, _) = pseudocircle(&ctx);
    let into_top: Vec<NatTrans> = enumerate_nat_trans(cat, &pc, &h_top);
    assert_eq!(into_top.len(), 1, "terminal representable");
    let p = Morphism { src: pc.clone(), dst: h_top.clone(), map: into_top[0].clone() };
    let (square, _, _, _) = scheme_fibred_product(&ctx, &p, &p, &mut budget).unwrap();
    assert!(is_elementary_scheme(&ctx, &square, &mut budget).unwrap());
    println!("criterion 8 (closure properties of schemes): pass");
}

#[test]
fn criterion_9_cli_determinism_and_round_trip() {
    use geoctx::cli::{execute, RunOptions};
    let fixtures_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let golden_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden");
    let cases: &[(&str, &str, &[&str])] = &[
        ("validate-context", "pt.geo", &[]),
        ("validate-context", "sierp.geo", &[]),
        ("validate-context", "int.geo", &[]),
        ("validate-context", "int_bad_cover.geo", &[]),
        ("validate-context", "int_no_class_arrow.geo", &[]),
        ("validate-context", "pt_no_object.geo", &[]),
        ("is-scheme", "pc.geo", &[]),
        ("glue", "pc.geo", &[]),
        ("decompose", "pc.geo", &[]),
        ("check-sheaf", "fold.geo", &["F"]),
        ("check-mono", "fold.geo", &["fold"]),
        ("check-open-immersion", "fold.geo", &["fold"]),
        ("check-epi", "fold.geo", &["fold"]),
        ("sheafify", "fold.geo", &["F"]),
    ];
    let opts = RunOptions { budget: 1_000_000, witnesses: true };
    for (command, fixture, args) in cases {
        let text = std::fs::read_to_string(fixtures_dir.join(fixture)).unwrap();
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let first = execute(command, &text, &args, &opts).unwrap().to_json();
        let second = execute(command, &text, &args, &opts).unwrap().to_json();
        assert_eq!(first, second, "{} {} varies across runs", command, fixture);
        let golden_name = format!(
            "{}_{}.json",
            command.replace('-', "_"),
            fixture.trim_end_matches(".geo")
        );
        let golden = std::fs::read_to_string(golden_dir.join(&golden_name))
            .unwrap_or_else(|_| panic!("missing golden file {}", golden_name));
        assert_eq!(first.trim_end(), golden.trim_end(), "golden mismatch for {}", golden_name);
    }
    // parse/print round trip over the whole corpus
    for entry in std::fs::read_dir(&fixtures_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("geo") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let doc = geoctx::dsl::parse(&text).unwrap();
        let printed = geoctx::dsl::print(&doc);
        assert_eq!(
            geoctx::dsl::parse(&printed).unwrap(),
            doc,
            "round trip fails for {}",
            path.display()
        );
    }
    println!("criterion 9 (deterministic reports and corpus round trip): pass");
}
