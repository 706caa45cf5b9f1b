//! Decorated universal covers: degree refinement, ideal-geometry equivalence and balls.
//!
//! Refinement runs on the vertex/slot incidence structure. A vertex's new color depends on the
//! *proportions* of its slot colors (counts divided by their gcd), so two vertices of one atom
//! with different cover degrees can share a color. This is the same as plain refinement of the
//! lift in which every vertex of atom `t` is replaced by one of degree `lcm` of that atom's degrees.

mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::measure::point_group_order;
use crate::model::{Catalog, Descriptor, Layout, PortRef, VertexInstance};

pub use tree::{
    ball, format_address, locally_realizable, map_by_ends, Address, BallCoder, BallNode, BallView, Decoration, DecoratedTree, SlotGroup, Step,
    TreeMap,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("catalog mismatch: {0} vs {1}")]
    CatalogMismatch(String, String),
    #[error("invalid descriptor: {0}")]
    Invalid(String),
    #[error("invalid address: {0}")]
    Address(String),
}

const TAG_VERTEX: u64 = 0x7665_7274_6578_0001;
const TAG_SLOT: u64 = 0x736c_6f74_0000_0002;
const TAG_POINT_SLOT: u64 = 0x706f_696e_7400_0003;
const TAG_ROUND_SLOT: u64 = 0x726e_6473_0000_0004;
const TAG_ROUND_VERTEX: u64 = 0x726e_6476_0000_0005;
const TAG_SIGNATURE: u64 = 0x7369_676e_0000_0006;

/// splitmix64 finalizer.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-dependent fold of a word sequence.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = mix(words.len() as u64);
    for &w in words {
        h = mix(h ^ w);
    }
    h
}

pub fn hash_str(s: &str) -> u64 {
    let words: Vec<u64> = s.bytes().map(u64::from).collect();
    hash_words(&words)
}

/// Stable refinement of a descriptor.
#[derive(Debug, Clone)]
pub struct RefinementSignature {
    /// Colors per round, vertices then slots, in layout order. `history[0]` is the initial coloring.
    pub history: Vec<Vec<u64>>,
    pub num_vertices: usize,
    /// Rounds until the class count stopped growing.
    pub rounds: usize,
    pub hash: u64,
}

impl RefinementSignature {
    pub fn stable(&self) -> &[u64] {
        &self.history[self.rounds]
    }

    pub fn vertex_colors(&self) -> &[u64] {
        &self.stable()[..self.num_vertices]
    }

    pub fn slot_colors(&self) -> &[u64] {
        &self.stable()[self.num_vertices..]
    }

    pub fn color_set(&self, round: usize) -> BTreeSet<u64> {
        self.history[round.min(self.history.len() - 1)].iter().copied().collect()
    }

    /// Vertex class sizes `n_i`, keyed by stable color.
    pub fn class_counts(&self) -> BTreeMap<u64, usize> {
        let mut out = BTreeMap::new();
        for &c in self.vertex_colors() {
            *out.entry(c).or_insert(0) += 1;
        }
        out
    }

    /// Slot class sizes keyed by stable color.
    pub fn slot_class_counts(&self) -> BTreeMap<u64, usize> {
        let mut out = BTreeMap::new();
        for &c in self.slot_colors() {
            *out.entry(c).or_insert(0) += 1;
        }
        out
    }

    pub fn hex(&self) -> String {
        format!("{:016x}", self.hash)
    }
}

impl fmt::Display for RefinementSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "signature {} rounds={} vertex_classes={} slot_classes={}",
            self.hex(),
            self.rounds,
            self.class_counts().len(),
            self.slot_class_counts().len()
        )
    }
}

/// Refinement state for one descriptor.
pub struct Refiner {
    layout: Layout,
    initial: Vec<u64>,
}

impl Refiner {
    pub fn new(d: &Descriptor, cat: &Catalog) -> Result<Refiner, TreeError> {
        let layout = Layout::new(d, cat).map_err(|e| TreeError::Invalid(e.0))?;
        let mut initial = Vec::with_capacity(layout.num_vertices() + layout.slots.len());
        for (i, v) in d.vertices.iter().enumerate() {
            let torsion = point_group_order(v, cat).map_err(|e| TreeError::Invalid(e.to_string()))? as u64;
            initial.push(hash_words(&[TAG_VERTEX, hash_str(&v.atom), layout.is_point[i] as u64, torsion]));
        }
        for s in &layout.slots {
            let atom = hash_str(&layout.atom[s.vertex]);
            initial.push(match &s.peg {
                Some(p) => hash_words(&[TAG_SLOT, atom, hash_str(p)]),
                None => hash_words(&[TAG_POINT_SLOT, atom]),
            });
        }
        Ok(Refiner { layout, initial })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn round(&self, colors: &[u64]) -> Vec<u64> {
        let l = &self.layout;
        let nv = l.num_vertices();
        let mut next = vec![0u64; colors.len()];
        for (si, s) in l.slots.iter().enumerate() {
            let mut across: Vec<u64> = l.slot_ends[si]
                .iter()
                .map(|&e| colors[nv + l.end_slot[Layout::opposite(e)]])
                .collect();
            across.sort_unstable();
            let mut words = vec![TAG_ROUND_SLOT, colors[nv + si], colors[s.vertex]];
            words.extend(across);
            next[nv + si] = hash_words(&words);
        }
        for v in 0..nv {
            let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
            for &s in &l.vertex_slots[v] {
                *counts.entry(colors[nv + s]).or_insert(0) += 1;
            }
            let g = counts.values().fold(0u64, |acc, &c| acc.gcd(&c)).max(1);
            let mut words = vec![TAG_ROUND_VERTEX, colors[v], hash_str(&l.atom[v])];
            for (c, n) in counts {
                words.push(c);
                words.push(n / g);
            }
            next[v] = hash_words(&words);
        }
        next
    }

    /// Runs at least `min_rounds` rounds and until the class count stops growing.
    pub fn run(&self, min_rounds: usize) -> RefinementSignature {
        let classes = |c: &[u64]| c.iter().collect::<BTreeSet<_>>().len();
        let mut history = vec![self.initial.clone()];
        let mut rounds = None;
        loop {
            let last = history.last().expect("nonempty");
            let next = self.round(last);
            if rounds.is_none() && classes(&next) == classes(last) {
                rounds = Some(history.len() - 1);
            }
            history.push(next);
            if let Some(r) = rounds {
                if history.len() > min_rounds.max(r) {
                    break;
                }
            }
        }
        let rounds = rounds.expect("set");
        let stable: BTreeSet<u64> = history[rounds].iter().copied().collect();
        let mut words = vec![TAG_SIGNATURE, rounds as u64];
        words.extend(stable);
        RefinementSignature { hash: hash_words(&words), history, num_vertices: self.layout.num_vertices(), rounds }
    }
}

pub fn refine(d: &Descriptor, cat: &Catalog) -> Result<RefinementSignature, TreeError> {
    Ok(Refiner::new(d, cat)?.run(0))
}

#[derive(Debug, Clone)]
pub enum Equivalence {
    Yes(SharedSignature),
    No(Distinction),
}

impl Equivalence {
    pub fn is_yes(&self) -> bool {
        matches!(self, Equivalence::Yes(_))
    }
}

#[derive(Debug, Clone)]
pub struct SharedSignature {
    pub a: RefinementSignature,
    pub b: RefinementSignature,
    /// Round at which both color sets were compared.
    pub round: usize,
    pub hash: u64,
}

#[derive(Debug, Clone)]
pub struct Distinction {
    /// First refinement round (ball radius in slot/vertex steps) where the color sets differ.
    pub radius: usize,
    /// A color present on one side only, with the side (`'a'` or `'b'`) and an example vertex or slot.
    pub color: u64,
    pub side: char,
    pub example: String,
}

/// Replaces each orbifold vertex (group acting on edge ends, with unused ports) by its unfolding:
/// the far side of the edge at a used port is copied onto every unused port of the same orbit.
pub fn expand_torsion(d: &Descriptor, cat: &Catalog) -> Result<Descriptor, TreeError> {
    let mut out = d.clone();
    for v in &d.vertices {
        let Some(gid) = &v.group else { continue };
        let Some(decl) = cat.groups.get(gid) else {
            return Err(TreeError::Invalid(format!("unknown group {gid}")));
        };
        let datum = decl.build().map_err(|e| TreeError::Invalid(e.to_string()))?;
        if !datum.acts_on_ends() {
            continue;
        }
        let Some(atom) = cat.atom(&v.atom) else {
            return Err(TreeError::Invalid(format!("unknown atom {}", v.atom)));
        };
        for (sid, peg) in &v.slots {
            let ends = atom.peg(peg).map_or(0, |p| p.ends);
            if ends as usize != datum.ends {
                continue;
            }
            let used: BTreeMap<u32, &crate::model::Edge> = d
                .edges
                .iter()
                .flat_map(|e| [(&e.a, e), (&e.b, e)])
                .filter(|(p, _)| p.vertex == v.id && &p.slot == sid)
                .map(|(p, e)| (p.port, e))
                .collect();
            for port in 1..=ends {
                if used.contains_key(&port) {
                    continue;
                }
                let orbit = datum.end_orbit(port as usize - 1);
                let Some((&src_port, edge)) = orbit.iter().find_map(|&o| used.get_key_value(&(o as u32 + 1))) else {
                    continue;
                };
                copy_branch(&mut out, d, &v.id, sid, src_port, edge, port)?;
            }
        }
        if let Some(w) = out.vertices.iter_mut().find(|w| w.id == v.id) {
            w.group = None;
            w.sub = None;
        }
    }
    Ok(out)
}

fn copy_branch(
    out: &mut Descriptor,
    d: &Descriptor,
    vid: &str,
    sid: &str,
    src_port: u32,
    edge: &crate::model::Edge,
    new_port: u32,
) -> Result<(), TreeError> {
    let here = PortRef::new(vid, sid, src_port);
    let far = if edge.a == here { &edge.b } else { &edge.a };
    // collect the far side without crossing back through `edge`
    let mut side: BTreeSet<String> = BTreeSet::new();
    let mut stack = vec![far.vertex.clone()];
    while let Some(x) = stack.pop() {
        if x == vid {
            return Err(TreeError::Invalid(format!("edge {} at an orbifold port is not a bridge", edge.id)));
        }
        if !side.insert(x.clone()) {
            continue;
        }
        for e in &d.edges {
            if e.id == edge.id {
                continue;
            }
            if e.a.vertex == x {
                stack.push(e.b.vertex.clone());
            }
            if e.b.vertex == x {
                stack.push(e.a.vertex.clone());
            }
        }
    }
    let tag = format!("_x{new_port}");
    let rename = |p: &PortRef| PortRef::new(&format!("{}{}", p.vertex, tag), &p.slot, p.port);
    for v in &d.vertices {
        if side.contains(&v.id) {
            out.vertices.push(VertexInstance { id: format!("{}{}", v.id, tag), ..v.clone() });
        }
    }
    for e in &d.edges {
        if e.id != edge.id && side.contains(&e.a.vertex) {
            out.add_edge(&format!("{}{}", e.id, tag), rename(&e.a), rename(&e.b));
        }
    }
    out.add_edge(&format!("{}{}", edge.id, tag), PortRef::new(vid, sid, new_port), rename(far));
    Ok(())
}

fn needs_expansion(d: &Descriptor, cat: &Catalog) -> bool {
    d.vertices.iter().any(|v| {
        v.group
            .as_ref()
            .and_then(|g| cat.groups.get(g))
            .and_then(|g| g.build().ok())
            .is_some_and(|datum| datum.acts_on_ends())
    })
}

/// Decides whether two descriptors have isomorphic decorated universal covers.
pub fn same_ideal_geometry(a: &Descriptor, b: &Descriptor, cat: &Catalog) -> Result<Equivalence, TreeError> {
    if a.catalog != b.catalog || a.catalog != cat.id {
        return Err(TreeError::CatalogMismatch(a.catalog.clone(), b.catalog.clone()));
    }
    let a = if needs_expansion(a, cat) { expand_torsion(a, cat)? } else { a.clone() };
    let b = if needs_expansion(b, cat) { expand_torsion(b, cat)? } else { b.clone() };
    let ra = Refiner::new(&a, cat)?;
    let rb = Refiner::new(&b, cat)?;
    let sa = ra.run(0);
    let sb = rb.run(0);
    let depth = sa.rounds.max(sb.rounds) + 1;
    let sa = ra.run(depth);
    let sb = rb.run(depth);
    for round in 0..=depth {
        let ca = sa.color_set(round);
        let cb = sb.color_set(round);
        if ca != cb {
            let (color, side, sig, layout, d) = match ca.difference(&cb).next() {
                Some(&c) => (c, 'a', &sa, ra.layout(), &a),
                None => (*cb.difference(&ca).next().expect("sets differ"), 'b', &sb, rb.layout(), &b),
            };
            let idx = sig.history[round].iter().position(|&c| c == color).expect("present");
            let example = if idx < sig.num_vertices {
                format!("vertex {}", d.vertices[idx].id)
            } else {
                let s = &layout.slots[idx - sig.num_vertices];
                format!("slot {}.{}", layout.vertex_ids[s.vertex], s.id)
            };
            return Ok(Equivalence::No(Distinction { radius: round, color, side, example }));
        }
    }
    let stable: BTreeSet<u64> = sa.color_set(depth);
    let mut words = vec![TAG_SIGNATURE, depth as u64];
    words.extend(stable);
    let hash = hash_words(&words);
    Ok(Equivalence::Yes(SharedSignature { a: sa, b: sb, round: depth, hash }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build;

    #[test]
    fn cycles_share_a_signature() {
        let (cat, c3) = build::point_cycle(3);
        let (_, c4) = build::point_cycle(4);
        let s3 = refine(&c3, &cat).unwrap();
        let s4 = refine(&c4, &cat).unwrap();
        assert_eq!(s3.class_counts().len(), 1);
        assert_eq!(s3.hash, s4.hash);
        assert!(same_ideal_geometry(&c3, &c4, &cat).unwrap().is_yes());
    }

    #[test]
    fn path_differs_from_cycle() {
        let (cat, c3) = build::point_cycle(3);
        let (_, p3) = build::point_path(3);
        let s = refine(&p3, &cat).unwrap();
        assert_eq!(s.class_counts().len(), 2);
        assert_ne!(s.hash, refine(&c3, &cat).unwrap().hash);
        match same_ideal_geometry(&c3, &p3, &cat).unwrap() {
            Equivalence::No(w) => assert!(w.radius >= 1),
            Equivalence::Yes(_) => panic!("path and cycle separated"),
        }
    }

    #[test]
    fn cubic_graphs_agree() {
        let cat = build::point_catalog();
        assert!(same_ideal_geometry(&build::k4(), &build::k33(), &cat).unwrap().is_yes());
        assert!(same_ideal_geometry(&build::prism(), &build::k33(), &cat).unwrap().is_yes());
    }

    #[test]
    fn refinement_is_idempotent() {
        let cat = build::point_catalog();
        let d = build::point_graph("d", "pts", &["pt", "pt", "pt2", "pt"], &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
        let r = Refiner::new(&d, &cat).unwrap();
        let s = r.run(0);
        let more = r.run(s.rounds + 3);
        let count = |c: &[u64]| c.iter().collect::<BTreeSet<_>>().len();
        for k in s.rounds..more.history.len() {
            assert_eq!(count(&more.history[k]), count(s.stable()));
        }
        assert!(s.rounds <= d.vertices.len() + r.layout().slots.len());
    }

    #[test]
    fn degree_is_not_a_color() {
        // one vertex of degree 2 with two loops vs one of degree 1 with a loop, same atom
        let mut ring = build::surface_atom(2);
        ring.pegs[0].ends = 2;
        let cat = Catalog::new("c").with_atom(ring);
        let one = build::symmetric_cycle(&cat, "g2", 1);
        let mut two = Descriptor::new("two", "c");
        two.add_vertex(VertexInstance::new("v", "g2", 2).with_slot("x1", "x").with_slot("x2", "x"));
        two.add_edge("e1", PortRef::new("v", "x1", 1), PortRef::new("v", "x1", 2));
        two.add_edge("e2", PortRef::new("v", "x2", 1), PortRef::new("v", "x2", 2));
        assert!(same_ideal_geometry(&one, &two, &cat).unwrap().is_yes());
    }
}
