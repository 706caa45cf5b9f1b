//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gos_core::build;
use gos_core::covers::verify_cover;
use gos_core::invariants::{l2_betti, obstruction, surface_rigidity_decider, whyte_decider, ObstructionVerdict};
use gos_core::leighton::{common_cover, RungOutcome, Search, SearchBudget};
use gos_core::measure::euler;
use gos_core::model::{AtomType, Catalog, Descriptor, Field};
use gos_core::permgrp::{
    alternating, coset_action, cyclic, dihedral, normal_core, quaternion, symmetric, torsion_free_cover, GraphOfFiniteGroups,
    PermGroup,
};
use gos_core::pipeline::{check_certificate, commensurate, generate_bipartite_pair, Certificate, PairParams};
use gos_core::rational::{alternating_sum, int, ratio, zero, Rational};
use gos_core::treespace::same_ideal_geometry;
use gos_core::CoveringMap;
use rand::Rng;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Covers and certificates gathered along the way for criteria 5 and 8.
#[derive(Default)]
struct Harvest {
    covers: Vec<(CoveringMap, Descriptor, Descriptor, Catalog)>,
    certificates: Vec<Certificate>,
}

impl Harvest {
    fn cover(&mut self, m: &CoveringMap, s: &Descriptor, t: &Descriptor, cat: &Catalog) {
        self.covers.push((m.clone(), s.clone(), t.clone(), cat.clone()));
    }

    fn certificate(&mut self, c: Certificate) {
        for (m, s, t) in [
            (&c.a_map, &c.a_hat, &c.a),
            (&c.b_map, &c.b_hat, &c.b),
            (&c.p, &c.c, &c.a_hat),
            (&c.q, &c.c, &c.b_hat),
            (&c.to_a, &c.c, &c.a),
            (&c.to_b, &c.c, &c.b),
        ] {
            self.covers.push((m.clone(), s.clone(), t.clone(), c.catalog.clone()));
        }
        self.certificates.push(c);
    }
}

fn criterion_1() -> Outcome {
    let cat = build::point_catalog();
    let mut oracle = BallOracle::default();
    let (mut yes, mut no, mut disagreements) = (0, 0, Vec::new());
    for seed in 0..600u64 {
        let mut r = rng(1_000 + seed);
        let (a, b) = match seed % 3 {
            0 => {
                let (na, nb) = (r.gen_range(1..=8), r.gen_range(1..=8));
                (random_point_graph(&mut r, "a", na, 4, &["pt", "pt2"]), random_point_graph(&mut r, "b", nb, 4, &["pt", "pt2"]))
            }
            1 => {
                let n = r.gen_range(1..=4);
                let base = random_point_graph(&mut r, "base", n, 4, &["pt", "pt2"]);
                let (a, _) = random_cover(&mut r, &base, &cat, 2, "a");
                let db = r.gen_range(1..=2);
                let (b, _) = random_cover(&mut r, &base, &cat, db, "b");
                (a, b)
            }
            _ => {
                let (na, nb) = (r.gen_range(1..=8), r.gen_range(1..=8));
                (random_point_graph(&mut r, "a", na, 3, &["pt"]), random_point_graph(&mut r, "b", nb, 3, &["pt"]))
            }
        };
        let radius = 2 * (a.vertices.len() + b.vertices.len());
        let engine = same_ideal_geometry(&a, &b, &cat).expect("valid pair").is_yes();
        let brute = oracle.some_roots_agree(&PlainGraph::from_descriptor(&a), &PlainGraph::from_descriptor(&b), radius);
        if engine {
            yes += 1;
        } else {
            no += 1;
        }
        if engine != brute {
            disagreements.push(seed);
        }
    }
    Outcome {
        pass: disagreements.is_empty(),
        detail: format!("600 pairs ({yes} same, {no} different), disagreements={disagreements:?}"),
    }
}

fn criterion_2(h: &mut Harvest) -> Outcome {
    let cat = build::point_catalog();
    let mut failures = Vec::new();
    let (mut checked, mut exists, mut slowest) = (0, 0, Duration::ZERO);
    for seed in 0..120u64 {
        let mut r = rng(2_000 + seed);
        let n = r.gen_range(1..=3);
        let base = random_point_graph(&mut r, "base", n, 4, &["pt", "pt2"]);
        let max_degree = 6 / n;
        let (da, db) = (r.gen_range(1..=max_degree), r.gen_range(1..=max_degree));
        let (a, pa) = random_cover(&mut r, &base, &cat, da, "a");
        let (b, pb) = random_cover(&mut r, &base, &cat, db, "b");
        h.cover(&pa, &a, &base, &cat);
        h.cover(&pb, &b, &base, &cat);
        let start = Instant::now();
        let search = common_cover(&a, &b, &cat, &SearchBudget::default()).expect("signature-equal pair");
        let took = start.elapsed();
        slowest = slowest.max(took);
        let Search::Found(cc) = search else {
            failures.push(format!("seed {seed}: exhausted"));
            continue;
        };
        if took > Duration::from_secs(60) {
            failures.push(format!("seed {seed}: {took:?}"));
        }
        if !verify_cover(&cc.p, &cc.c, &a, &cat).is_ok() || !verify_cover(&cc.q, &cc.c, &b, &cat).is_ok() {
            failures.push(format!("seed {seed}: leg rejected"));
        }
        h.cover(&cc.p, &cc.c, &a, &cat);
        h.cover(&cc.q, &cc.c, &b, &cat);
        let (va, vb) = (a.vertices.len(), b.vertices.len());
        let g = gcd(va, vb);
        let (na, nb) = (vb / g, va / g);
        if va <= 4 && vb <= 4 && na <= 4 && nb <= 4 {
            checked += 1;
            let brute = common_cover_exists(&PlainGraph::from_descriptor(&a), &PlainGraph::from_descriptor(&b), na, nb);
            let first = &cc.ladder[0];
            let engine = first.degrees == (na as u64, nb as u64) && first.outcome == RungOutcome::Found;
            if brute {
                exists += 1;
            }
            if brute != engine {
                failures.push(format!("seed {seed}: oracle={brute} engine={:?}", first));
            }
        }
        match commensurate(&a, &b, &cat, &SearchBudget::default()) {
            Ok(c) => h.certificate(c),
            Err(f) => failures.push(format!("seed {seed}: pipeline {f}")),
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "120 pairs, slowest {:.3}s, {checked} checked exhaustively ({exists} with a cover at the minimal pair), failures={failures:?}",
            slowest.as_secs_f64()
        ),
    }
}

fn criterion_3(h: &mut Harvest) -> Outcome {
    let start = Instant::now();
    let cat = build::surface_catalog(&[2, 3, 4]);
    let (_, g24) = build::surface_free_product(&[2, 4]);
    let (_, g33) = build::surface_free_product(&[3, 3]);
    let (_, g42) = build::surface_free_product(&[4, 2]);
    let chi = (euler(&g24, &cat).unwrap(), euler(&g33, &cat).unwrap());
    let first = (whyte_decider(2, 4, 3, 3).unwrap(), surface_rigidity_decider(2, 4, 3, 3).unwrap());
    let second = (whyte_decider(2, 4, 4, 2).unwrap(), surface_rigidity_decider(2, 4, 4, 2).unwrap());
    let geometry = (
        same_ideal_geometry(&g24, &g33, &cat).unwrap().is_yes(),
        same_ideal_geometry(&g24, &g42, &cat).unwrap().is_yes(),
    );
    if let Ok(c) = commensurate(&g24, &g42, &cat, &SearchBudget::default()) {
        h.certificate(c);
    }
    let took = start.elapsed();
    Outcome {
        pass: chi == (int(-9), int(-9))
            && first == (true, false)
            && second == (true, true)
            && geometry == (false, true)
            && took < Duration::from_secs(1),
        detail: format!(
            "(2,4)/(3,3): chi {}={} commensurable={} model_geometry={}; (2,4)/(4,2): {} {}; {:.3}s",
            chi.0, chi.1, first.0, first.1, second.0, second.1,
            took.as_secs_f64()
        ),
    }
}

fn criterion_4(h: &mut Harvest) -> Outcome {
    let start = Instant::now();
    let s = generate_bipartite_pair(PairParams { f_order: 10, r: 5, delta_index: 15 }).unwrap();
    let shape = (s.h_prime.vertices.len(), s.h_prime.edges.len(), s.h_prime.graph_rank());
    let pq = (s.p * s.q) as i64 - s.p as i64 - s.q as i64 + 1;
    let same = same_ideal_geometry(&s.h_side_expanded, &s.h_prime, &s.catalog).unwrap().is_yes();
    let degenerate = generate_bipartite_pair(PairParams { f_order: 5, r: 5, delta_index: 5 }).unwrap().h_prime.graph_rank();
    if let Ok(c) = commensurate(&s.h_side_expanded, &s.h_prime, &s.catalog, &SearchBudget::default()) {
        h.certificate(c);
    }
    let torsion_side = commensurate(&s.h_side, &s.h_prime, &s.catalog, &SearchBudget::default())
        .err()
        .map(|f| (f.stage, f.reason.kind()));
    let took = start.elapsed();
    Outcome {
        pass: shape == (5, 6, 2) && pq == 2 && same && degenerate == 0 && took < Duration::from_secs(1),
        detail: format!(
            "(10,5,15): vertices={} edges={} rank={} pq-p-q+1={pq} same_geometry={same}; (5,5,5): rank={degenerate}; torsion side {:?}; {:.3}s",
            shape.0, shape.1, shape.2, torsion_side, took.as_secs_f64()
        ),
    }
}

/// Volume per atom and Euler characteristic straight from the catalog numbers.
fn hand_measures(d: &Descriptor, cat: &Catalog) -> (Vec<(String, Rational)>, Rational) {
    let mut vol: Vec<(String, Rational)> = Vec::new();
    let mut chi = -int(d.edges.len() as i64);
    for v in &d.vertices {
        let atom = &cat.atoms[&v.atom];
        let (x, e) = if atom.is_point() {
            let order = v.group.as_ref().map_or(1, |g| cat.groups[g].build().unwrap().group.order());
            (ratio(1, order as i64), ratio(1, order as i64))
        } else {
            let n = int(v.degree as i64);
            let base_chi = atom.base_euler.clone().unwrap_or_else(zero);
            (&n * &atom.base_volume, &n * base_chi)
        };
        chi += e;
        match vol.iter_mut().find(|(t, _)| *t == v.atom) {
            Some((_, s)) => *s += x,
            None => vol.push((v.atom.clone(), x)),
        }
    }
    vol.sort();
    (vol, chi)
}

fn criterion_5(h: &Harvest) -> Outcome {
    let mut violations = Vec::new();
    for (m, s, t, cat) in &h.covers {
        let n = int(m.total_degree as i64);
        let (vs, es) = hand_measures(s, cat);
        let (vt, et) = hand_measures(t, cat);
        let scaled: Vec<(String, Rational)> = vt.into_iter().map(|(a, x)| (a, &n * x)).collect();
        if vs != scaled || es != &n * et {
            violations.push(m.id.clone());
        }
    }
    Outcome {
        pass: h.covers.len() >= 200 && violations.is_empty(),
        detail: format!("{} covers, violations={violations:?}", h.covers.len()),
    }
}

type Elements = BTreeSet<Vec<u32>>;

fn mul(a: &[u32], b: &[u32]) -> Vec<u32> {
    // apply a, then b
    a.iter().map(|&i| b[i as usize]).collect()
}

fn inv(a: &[u32]) -> Vec<u32> {
    let mut out = vec![0; a.len()];
    for (i, &j) in a.iter().enumerate() {
        out[j as usize] = i as u32;
    }
    out
}

fn generate(seed: &Elements, extra: &[u32]) -> Elements {
    let mut out = seed.clone();
    out.insert(extra.to_vec());
    loop {
        let mut grown = out.clone();
        for x in &out {
            for y in &out {
                grown.insert(mul(x, y));
            }
        }
        if grown.len() == out.len() {
            return out;
        }
        out = grown;
    }
}

/// Every subgroup, by repeatedly adjoining one element to a known subgroup.
fn all_subgroups(k: &Elements) -> Vec<Elements> {
    let id: Vec<u32> = (0..k.iter().next().unwrap().len() as u32).collect();
    let mut found: BTreeSet<Elements> = BTreeSet::from([Elements::from([id])]);
    let mut frontier: Vec<Elements> = found.iter().cloned().collect();
    while let Some(h) = frontier.pop() {
        for g in k {
            if !h.contains(g) {
                let bigger = generate(&h, g);
                if found.insert(bigger.clone()) {
                    frontier.push(bigger);
                }
            }
        }
    }
    found.into_iter().collect()
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut groups: Vec<(String, PermGroup)> = Vec::new();
    for n in 1..=12 {
        groups.push((format!("C{n}"), cyclic(n)));
    }
    for n in 3..=24 {
        groups.push((format!("D{n}"), dihedral(n)));
    }
    groups.push(("S3".into(), symmetric(3)));
    groups.push(("S4".into(), symmetric(4)));
    groups.push(("A4".into(), alternating(4)));
    groups.push(("Q8".into(), quaternion()));
    let mut mismatches = Vec::new();
    let mut pairs = 0;
    for (name, k) in &groups {
        let ke: Elements = k.elements().iter().map(|p| p.images().to_vec()).collect();
        for h in all_subgroups(&ke) {
            pairs += 1;
            let mut core = h.clone();
            for g in &ke {
                let gi = inv(g);
                core.retain(|x| h.contains(&mul(&mul(&gi, x), g)));
            }
            let gens: Vec<_> = h.iter().map(|x| gos_core::permgrp::Perm::from_images(x.clone()).unwrap()).collect();
            let hg = gos_core::permgrp::closure(k.degree(), &gens, 100_000).unwrap();
            let lib: Elements = normal_core(k, &hg).unwrap().elements().iter().map(|p| p.images().to_vec()).collect();
            let kernel: Elements =
                coset_action(k, &hg).unwrap().kernel.elements().iter().map(|p| p.images().to_vec()).collect();
            if lib != core || kernel != core {
                mismatches.push(format!("{name} |H|={}", h.len()));
            }
        }
    }
    let took = start.elapsed();
    Outcome {
        pass: mismatches.is_empty() && took < Duration::from_secs(30),
        detail: format!("{} groups, {pairs} subgroups, mismatches={mismatches:?}, {:.2}s", groups.len(), took.as_secs_f64()),
    }
}

fn criterion_7(h: &mut Harvest) -> Outcome {
    let cat = l2_catalog();
    let mut bad = Vec::new();
    for seed in 0..250u64 {
        let mut r = rng(7_000 + seed);
        let d = random_l2_descriptor(&mut r, "d");
        if alternating_sum(&l2_betti(&d, &cat).unwrap()) != euler(&d, &cat).unwrap() {
            bad.push(seed);
        }
        if seed < 40 && d.uses_groups() {
            let groups = d
                .vertices
                .iter()
                .filter_map(|v| v.group.as_ref().map(|g| (v.id.clone(), cat.groups[g].build().unwrap().group)))
                .collect();
            let t = torsion_free_cover(&GraphOfFiniteGroups { shadow: d.clone(), groups }, "t").unwrap();
            h.cover(&t.map, &t.cover, &d, &cat);
            if let Ok(c) = commensurate(&d, &d, &cat, &SearchBudget::default()) {
                h.certificate(c);
            }
        }
    }
    let mcat = Catalog::new("m")
        .with_atom(build::four_manifold_atom("m2", 2))
        .with_atom(build::four_manifold_atom("m4", 4))
        .with_atom(AtomType::point("pt"));
    let verdict = obstruction(&build::manifold_free_z(&mcat, "m2"), &build::manifold_free_z(&mcat, "m4"), &mcat).unwrap();
    let ratios = match &verdict {
        ObstructionVerdict::L2RatioMismatch { ratio_k, ratio_k_prime, .. } => Some((ratio_k.clone(), ratio_k_prime.clone())),
        _ => None,
    };
    let expected = Some((Some(int(1)), Some(ratio(1, 2))));
    Outcome {
        pass: bad.is_empty() && ratios == expected,
        detail: format!(
            "250 descriptors, mismatches={bad:?}; chi 2 vs 4: {} ratios {}",
            verdict.kind(),
            match &ratios {
                Some((Some(x), Some(y))) => format!("{x} and {y}"),
                _ => "missing".to_string(),
            }
        ),
    }
}

fn surface_cycle_certificate() -> Certificate {
    let cat = Catalog::new("sc").with_atom(
        AtomType::symmetric("g2", Field::R, 2, int(2)).with_euler(int(-2)).with_l2(vec![zero(), int(2), zero()]).with_peg("x", 2),
    );
    let c3 = build::symmetric_cycle(&cat, "g2", 3);
    let c4 = build::symmetric_cycle(&cat, "g2", 4);
    commensurate(&c3, &c4, &cat, &SearchBudget::default()).expect("3- and 4-cycles of surfaces")
}

fn corrupt_ports(m: &mut CoveringMap) {
    let mut it = m.port_map.values().cloned();
    let first = it.next().unwrap();
    let key = m.port_map.keys().nth(1).unwrap().clone();
    m.port_map.insert(key, first);
}

fn mutations() -> Vec<(&'static str, Box<dyn Fn(&mut Certificate)>)> {
    vec![
        ("port bijection of c->a_hat", Box::new(|c| corrupt_ports(&mut c.p))),
        ("port bijection of c->b_hat", Box::new(|c| corrupt_ports(&mut c.q))),
        ("port bijection of c->a", Box::new(|c| corrupt_ports(&mut c.to_a))),
        ("degree of c->a_hat", Box::new(|c| c.p.total_degree += 1)),
        ("degree of c->b", Box::new(|c| c.to_b.total_degree += 1)),
        ("degree of a_hat->a", Box::new(|c| c.a_map.total_degree = 2)),
        ("stage-4 degrees", Box::new(|c| c.degrees.0 += 1)),
        ("summary index", Box::new(|c| c.indices.1 += 1)),
        ("volume record", Box::new(|c| c.volumes[0].1 += int(1))),
        ("euler record", Box::new(|c| c.euler.1 += int(1))),
        ("signature hash", Box::new(|c| c.signature = c.signature.chars().rev().collect())),
        ("signature round", Box::new(|c| c.round += 1)),
        ("edge of c removed", Box::new(|c| {
            c.c.edges.pop();
        })),
        ("vertex degree in c", Box::new(|c| c.c.vertices[0].degree += 1)),
        ("vertex image", Box::new(|c| {
            let (k, v) = c.p.vertex_map.iter().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
            let other = c.a_hat.vertices.iter().find(|w| w.id != v).unwrap().id.clone();
            c.p.vertex_map.insert(k, other);
        })),
        ("edge image", Box::new(|c| {
            let (k, v) = c.q.edge_map.iter().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
            let other = c.b_hat.edges.iter().find(|e| e.id != v).unwrap().id.clone();
            c.q.edge_map.insert(k, other);
        })),
        ("local degree", Box::new(|c| *c.p.local_degree.values_mut().next().unwrap() = 2)),
        ("stage-1 degree", Box::new(|c| c.stage1.atoms[0].degree += 1)),
        ("stage-1 lift", Box::new(|c| c.stage1.lifts[0].2 += 1)),
        ("atom base volume", Box::new(|c| {
            let atom = c.catalog.atoms.get_mut("g2").unwrap();
            atom.base_volume = &atom.base_volume * int(2);
        })),
    ]
}

fn criterion_8(h: &mut Harvest) -> Outcome {
    let base = surface_cycle_certificate();
    h.certificate(base.clone());
    let rejected: Vec<&Certificate> = h.certificates.iter().filter(|c| !check_certificate(c)).collect();
    let mut missed = Vec::new();
    let list = mutations();
    for (name, mutate) in &list {
        let mut c = base.clone();
        mutate(&mut c);
        if c == base || check_certificate(&c) {
            missed.push(*name);
        }
    }
    Outcome {
        pass: rejected.is_empty() && missed.is_empty() && list.len() == 20,
        detail: format!(
            "{} certificates accepted, {} rejected; {} corruptions, undetected={missed:?}",
            h.certificates.len() - rejected.len(),
            rejected.len(),
            list.len()
        ),
    }
}

fn main() -> ExitCode {
    let total = Instant::now();
    let mut h = Harvest::default();
    let mut lines = Vec::new();
    let mut run = |n: usize, name: &str, f: &mut dyn FnMut(&mut Harvest) -> Outcome, h: &mut Harvest| {
        let start = Instant::now();
        let o = f(h);
        let line = format!(
            "criterion {n} {name:<32} {} [{:.2}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        println!("{line}");
        lines.push(o.pass);
    };
    run(1, "refinement vs ball oracle", &mut |_| criterion_1(), &mut h);
    run(2, "common cover sound+complete", &mut criterion_2, &mut h);
    run(3, "surface free products", &mut criterion_3, &mut h);
    run(4, "generated bipartite pair", &mut criterion_4, &mut h);
    run(6, "normal cores", &mut |_| criterion_6(), &mut h);
    run(7, "l2 and euler", &mut criterion_7, &mut h);
    run(8, "certificate checking", &mut criterion_8, &mut h);
    run(5, "index identities on all covers", &mut |h| criterion_5(h), &mut h);
    let failed = lines.iter().filter(|p| !**p).count();
    println!("acceptance: {} of {} criteria pass ({:.2}s)", lines.len() - failed, lines.len(), total.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
