//! Seeded generators and brute-force oracles shared by the integration tests.
//!
//! The oracles work on plain edge lists and do not call the library's refinement or search code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use gos_core::build;
use gos_core::covers::{permutation_cover, SheetSpec};
use gos_core::model::{AtomType, Catalog, Descriptor, Field, PortRef, VertexInstance, POINT_SLOT};
use gos_core::permgrp::Perm;
use gos_core::rational::{int, zero};
use gos_core::CoveringMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected point graph: a random spanning tree plus extra edges (loops and parallel edges
/// allowed) while every valence stays at most `max_valence`.
pub fn random_point_graph(r: &mut ChaCha8Rng, id: &str, n: usize, max_valence: usize, atoms: &[&str]) -> Descriptor {
    let mut valence = vec![0usize; n];
    let mut edges = Vec::new();
    for v in 1..n {
        let choices: Vec<usize> = (0..v).filter(|&u| valence[u] < max_valence).collect();
        let u = *choices.choose(r).unwrap_or(&0);
        edges.push((u, v));
        valence[u] += 1;
        valence[v] += 1;
    }
    let extra = r.gen_range(0..=n + 1);
    for _ in 0..extra {
        let x = r.gen_range(0..n);
        let y = r.gen_range(0..n);
        let need = if x == y { 2 } else { 1 };
        if valence[x] + need > max_valence || valence[y] + need > max_valence || (x != y && valence[x] + 1 > max_valence) {
            continue;
        }
        edges.push((x, y));
        valence[x] += 1;
        valence[y] += 1;
    }
    if edges.is_empty() {
        // a lone vertex needs at least a loop to be a graph of interest
        edges.push((0, 0));
    }
    let labels: Vec<&str> = (0..n).map(|_| *atoms.choose(r).expect("atoms")).collect();
    build::point_graph(id, "pts", &labels, &edges)
}

pub fn random_perm(r: &mut ChaCha8Rng, n: usize) -> Perm {
    let mut images: Vec<u32> = (0..n as u32).collect();
    images.shuffle(r);
    Perm::from_images(images).expect("shuffle is a permutation")
}

/// Connected component of a random permutation cover of degree at most `n`.
pub fn random_cover(r: &mut ChaCha8Rng, d: &Descriptor, cat: &Catalog, n: usize, id: &str) -> (Descriptor, CoveringMap) {
    let mut spec = SheetSpec { n, ..SheetSpec::default() };
    for e in &d.edges {
        spec.edge_perms.insert(e.id.clone(), random_perm(r, n));
    }
    permutation_cover(d, cat, &spec, id).expect("permutation cover")
}

/// Catalog whose atoms all carry l2 profiles, with cyclic groups for torsion points.
pub fn l2_catalog() -> Catalog {
    let mut cat = Catalog::new("l2")
        .with_atom(AtomType::point("pt"))
        .with_atom(build::surface_atom(2))
        .with_atom(build::surface_atom(3))
        .with_atom(build::four_manifold_atom("m2", 2))
        .with_atom(build::four_manifold_atom("m4", 4))
        .with_atom(AtomType::symmetric("h3", Field::R, 3, int(3)).with_l2(vec![zero(); 4]).with_peg("x", 1));
    for k in [2usize, 3] {
        cat.groups.insert(
            format!("c{k}"),
            gos_core::model::GroupDecl {
                id: format!("c{k}"),
                degree: k,
                ends: 0,
                gens: vec![Perm::cycle(k)],
                end_images: vec![Perm::identity(0)],
                subgroups: BTreeMap::new(),
            },
        );
    }
    cat
}

/// Random connected descriptor over [`l2_catalog`]: points (some with finite groups) joined by
/// a tree and extra edges, symmetric vertices of degree 1..=2 hanging off the points.
pub fn random_l2_descriptor(r: &mut ChaCha8Rng, id: &str) -> Descriptor {
    let mut d = Descriptor::new(id, "l2");
    let points = r.gen_range(1..=3);
    let mut next_port = vec![0u32; points];
    let port = |next: &mut Vec<u32>, i: usize| {
        next[i] += 1;
        PortRef::new(&format!("p{i}"), POINT_SLOT, next[i])
    };
    for i in 0..points {
        let mut v = VertexInstance::new(&format!("p{i}"), "pt", 1);
        match r.gen_range(0..4) {
            0 => v.group = Some("c2".into()),
            1 => v.group = Some("c3".into()),
            _ => {}
        }
        d.add_vertex(v);
    }
    let mut k = 0;
    for i in 1..points {
        let j = r.gen_range(0..i);
        let (a, b) = (port(&mut next_port, j), port(&mut next_port, i));
        d.add_edge(&format!("e{k}"), a, b);
        k += 1;
    }
    for _ in 0..r.gen_range(0..=2) {
        let (i, j) = (r.gen_range(0..points), r.gen_range(0..points));
        let (a, b) = (port(&mut next_port, i), port(&mut next_port, j));
        d.add_edge(&format!("e{k}"), a, b);
        k += 1;
    }
    let atoms = ["g2", "g3", "m2", "m4", "h3"];
    for s in 0..r.gen_range(0..=3) {
        let atom = *atoms.choose(r).expect("atoms");
        let degree = r.gen_range(1..=2u64);
        let mut v = VertexInstance::new(&format!("s{s}"), atom, degree);
        for t in 1..=degree {
            v = v.with_slot(&format!("x{t}"), "x");
        }
        d.add_vertex(v);
        for t in 1..=degree {
            let i = r.gen_range(0..points);
            let a = port(&mut next_port, i);
            d.add_edge(&format!("e{k}"), PortRef::new(&format!("s{s}"), &format!("x{t}"), 1), a);
            k += 1;
        }
    }
    d
}

/// A point graph as atom labels plus an end list; end `2k` and `2k + 1` are the two sides of edge `k`.
#[derive(Debug, Clone)]
pub struct PlainGraph {
    pub atoms: Vec<String>,
    pub end_vertex: Vec<usize>,
    pub ends_at: Vec<Vec<usize>>,
}

impl PlainGraph {
    pub fn from_edges(atoms: Vec<String>, edges: &[(usize, usize)]) -> Self {
        let mut end_vertex = Vec::new();
        let mut ends_at = vec![Vec::new(); atoms.len()];
        for &(x, y) in edges {
            ends_at[x].push(end_vertex.len());
            end_vertex.push(x);
            ends_at[y].push(end_vertex.len());
            end_vertex.push(y);
        }
        PlainGraph { atoms, end_vertex, ends_at }
    }

    pub fn from_descriptor(d: &Descriptor) -> Self {
        let index: HashMap<&str, usize> = d.vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
        let atoms = d.vertices.iter().map(|v| v.atom.clone()).collect();
        let edges: Vec<(usize, usize)> =
            d.edges.iter().map(|e| (index[e.a.vertex.as_str()], index[e.b.vertex.as_str()])).collect();
        Self::from_edges(atoms, &edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_edges(&self) -> usize {
        self.end_vertex.len() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_edges()).map(|k| (self.end_vertex[2 * k], self.end_vertex[2 * k + 1])).collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &e in &self.ends_at[v] {
                let w = self.end_vertex[e ^ 1];
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Rooted-ball codes of universal covers, interned across graphs.
#[derive(Default)]
pub struct BallOracle {
    intern: HashMap<(String, Vec<u32>), u32>,
}

impl BallOracle {
    fn id(&mut self, atom: &str, mut children: Vec<u32>) -> u32 {
        children.sort_unstable();
        let next = self.intern.len() as u32;
        *self.intern.entry((atom.to_string(), children)).or_insert(next)
    }

    /// Code of the subtree entered through `end` (an end at its own vertex), `depth` levels deep.
    fn below(&mut self, g: &PlainGraph, end: usize, depth: usize, memo: &mut HashMap<(usize, usize), u32>) -> u32 {
        if let Some(&c) = memo.get(&(end, depth)) {
            return c;
        }
        let v = g.end_vertex[end];
        let mut children = Vec::new();
        if depth > 0 {
            for &f in &g.ends_at[v] {
                if f != end {
                    children.push(self.below(g, f ^ 1, depth - 1, memo));
                }
            }
        }
        let c = self.id(&g.atoms[v], children);
        memo.insert((end, depth), c);
        c
    }

    /// Ball code of radius `radius` around each vertex.
    pub fn root_codes(&mut self, g: &PlainGraph, radius: usize) -> Vec<u32> {
        let mut memo = HashMap::new();
        (0..g.num_vertices())
            .map(|v| {
                let children: Vec<u32> = if radius == 0 {
                    Vec::new()
                } else {
                    g.ends_at[v].clone().into_iter().map(|f| self.below(g, f ^ 1, radius - 1, &mut memo)).collect()
                };
                self.id(&g.atoms[v], children)
            })
            .collect()
    }

    /// True when some pair of roots has isomorphic balls of the given radius.
    pub fn some_roots_agree(&mut self, a: &PlainGraph, b: &PlainGraph, radius: usize) -> bool {
        let ca = self.root_codes(a, radius);
        let cb = self.root_codes(b, radius);
        ca.iter().any(|x| cb.contains(x))
    }
}

/// Whether some covering map `c -> y` exists, by backtracking over end images.
pub fn covers_onto(c: &PlainGraph, y: &PlainGraph) -> bool {
    if c.num_vertices() == 0 || y.num_vertices() == 0 || c.num_vertices() % y.num_vertices() != 0 {
        return false;
    }
    let compatible = |w: usize, v: usize| c.atoms[w] == y.atoms[v] && c.ends_at[w].len() == y.ends_at[v].len();
    for v in 0..y.num_vertices() {
        if !compatible(0, v) {
            continue;
        }
        let mut vmap = vec![usize::MAX; c.num_vertices()];
        let mut emap = vec![usize::MAX; c.end_vertex.len()];
        vmap[0] = v;
        if extend(c, y, &mut vmap, &mut emap, &compatible) {
            return true;
        }
    }
    false
}

fn extend(
    c: &PlainGraph,
    y: &PlainGraph,
    vmap: &mut Vec<usize>,
    emap: &mut Vec<usize>,
    compatible: &dyn Fn(usize, usize) -> bool,
) -> bool {
    // ends are always assigned together with their partner
    let Some(e) = (0..c.end_vertex.len()).find(|&e| emap[e] == usize::MAX && vmap[c.end_vertex[e]] != usize::MAX) else {
        return vmap.iter().all(|&x| x != usize::MAX);
    };
    let w = c.end_vertex[e];
    let v = vmap[w];
    let taken = |emap: &Vec<usize>, w: usize, f: usize| c.ends_at[w].iter().any(|&x| emap[x] == f);
    for &f in &y.ends_at[v] {
        let (e2, f2) = (e ^ 1, f ^ 1);
        let (w2, v2) = (c.end_vertex[e2], y.end_vertex[f2]);
        if taken(emap, w, f) || taken(emap, w2, f2) {
            continue;
        }
        let fresh = vmap[w2] == usize::MAX;
        if (fresh && !compatible(w2, v2)) || (!fresh && vmap[w2] != v2) {
            continue;
        }
        vmap[w2] = v2;
        emap[e] = f;
        emap[e2] = f2;
        if extend(c, y, vmap, emap, compatible) {
            return true;
        }
        emap[e] = usize::MAX;
        emap[e2] = usize::MAX;
        if fresh {
            vmap[w2] = usize::MAX;
        }
    }
    false
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Every connected `n`-fold cover of `g`, up to relabeling: spanning-tree edges carry the
/// identity, every other edge any permutation. Calls `visit` until it returns true.
pub fn any_connected_cover(g: &PlainGraph, n: usize, visit: &mut dyn FnMut(&PlainGraph) -> bool) -> bool {
    let edges = g.edges();
    let mut in_tree = vec![false; edges.len()];
    let mut seen = vec![false; g.num_vertices()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &e in &g.ends_at[v] {
            let w = g.end_vertex[e ^ 1];
            if !seen[w] {
                seen[w] = true;
                in_tree[e / 2] = true;
                stack.push(w);
            }
        }
    }
    let free: Vec<usize> = (0..edges.len()).filter(|&k| !in_tree[k]).collect();
    let perms = all_perms(n);
    let mut choice = vec![0usize; free.len()];
    loop {
        let mut voltage: Vec<&[usize]> = vec![&perms[0]; edges.len()];
        for (slot, &k) in free.iter().enumerate() {
            voltage[k] = &perms[choice[slot]];
        }
        let atoms: Vec<String> = (0..g.num_vertices() * n).map(|i| g.atoms[i / n].clone()).collect();
        let lifted: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .flat_map(|(k, &(x, y))| {
                let p = voltage[k];
                (0..n).map(move |i| (x * n + i, y * n + p[i]))
            })
            .collect();
        let c = PlainGraph::from_edges(atoms, &lifted);
        if c.is_connected() && visit(&c) {
            return true;
        }
        // odometer
        let mut i = 0;
        loop {
            if i == choice.len() {
                return false;
            }
            choice[i] += 1;
            if choice[i] < perms.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Number of voltage assignments [`any_connected_cover`] would visit.
pub fn enumeration_size(g: &PlainGraph, n: usize) -> u64 {
    let rank = g.num_edges() + 1 - g.num_vertices();
    factorial(n).saturating_pow(rank as u32)
}

/// Independent answer to "is there a connected common cover with `(na, nb)` sheets?".
/// Enumerates covers of the cheaper side and tests each for a covering map onto the other.
pub fn common_cover_exists(a: &PlainGraph, b: &PlainGraph, na: usize, nb: usize) -> bool {
    if enumeration_size(a, na) <= enumeration_size(b, nb) {
        any_connected_cover(a, na, &mut |c| covers_onto(c, b))
    } else {
        any_connected_cover(b, nb, &mut |c| covers_onto(c, a))
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
