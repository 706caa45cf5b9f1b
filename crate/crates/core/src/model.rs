//! Catalogs, atoms and descriptors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::permgrp::{closure, GroupError, Perm, PermGroup, DEFAULT_ORDER_CAP};
use crate::rational::{alternating_sum, int, Rational};

/// Slot id used by point vertices.
pub const POINT_SLOT: &str = "@";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    R,
    C,
    H,
    Ca,
}

impl Field {
    pub fn parse(s: &str) -> Option<Field> {
        match s {
            "R" => Some(Field::R),
            "C" => Some(Field::C),
            "H" => Some(Field::H),
            "Ca" => Some(Field::Ca),
            _ => None,
        }
    }

    pub fn real_multiplier(self) -> u32 {
        match self {
            Field::R => 1,
            Field::C => 2,
            Field::H => 4,
            Field::Ca => 8,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Field::R => "R",
            Field::C => "C",
            Field::H => "H",
            Field::Ca => "Ca",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Point,
    Symmetric { field: Field, dim: u32 },
}

impl AtomKind {
    /// Real dimension of the symmetric space, 0 for points.
    pub fn real_dim(self) -> u32 {
        match self {
            AtomKind::Point => 0,
            AtomKind::Symmetric { field, dim } => field.real_multiplier() * dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PegClass {
    pub id: String,
    pub ends: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomType {
    pub id: String,
    pub kind: AtomKind,
    pub base_volume: Rational,
    pub base_euler: Option<Rational>,
    pub l2_profile: Option<Vec<Rational>>,
    pub pegs: Vec<PegClass>,
}

impl AtomType {
    pub fn point(id: &str) -> Self {
        AtomType {
            id: id.to_string(),
            kind: AtomKind::Point,
            base_volume: int(1),
            base_euler: Some(int(1)),
            l2_profile: None,
            pegs: Vec::new(),
        }
    }

    pub fn symmetric(id: &str, field: Field, dim: u32, base_volume: Rational) -> Self {
        AtomType {
            id: id.to_string(),
            kind: AtomKind::Symmetric { field, dim },
            base_volume,
            base_euler: None,
            l2_profile: None,
            pegs: Vec::new(),
        }
    }

    pub fn with_euler(mut self, chi: Rational) -> Self {
        self.base_euler = Some(chi);
        self
    }

    pub fn with_l2(mut self, profile: Vec<Rational>) -> Self {
        self.l2_profile = Some(profile);
        self
    }

    pub fn with_peg(mut self, id: &str, ends: u32) -> Self {
        self.pegs.push(PegClass { id: id.to_string(), ends });
        self
    }

    pub fn is_point(&self) -> bool {
        self.kind == AtomKind::Point
    }

    pub fn peg(&self, id: &str) -> Option<&PegClass> {
        self.pegs.iter().find(|p| p.id == id)
    }

    /// Euler characteristic of the reference, with the odd-dimension zero convention.
    pub fn effective_euler(&self) -> Option<Rational> {
        match self.kind {
            AtomKind::Point => Some(int(1)),
            AtomKind::Symmetric { .. } => match &self.base_euler {
                Some(chi) => Some(chi.clone()),
                None if self.kind.real_dim() % 2 == 1 => Some(int(0)),
                None => None,
            },
        }
    }

    /// Violations of the atom-level invariants.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.base_volume <= int(0) {
            out.push(format!("atom {}: base volume must be positive", self.id));
        }
        match self.kind {
            AtomKind::Point => {
                if !self.pegs.is_empty() {
                    out.push(format!("atom {}: point atoms carry no pegs", self.id));
                }
                if self.base_volume != int(1) {
                    out.push(format!("atom {}: point atoms have base volume 1", self.id));
                }
                if self.base_euler.as_ref().is_some_and(|c| *c != int(1)) {
                    out.push(format!("atom {}: point atoms have base euler 1", self.id));
                }
            }
            AtomKind::Symmetric { dim, .. } => {
                if dim < 2 {
                    out.push(format!("atom {}: dim must be at least 2", self.id));
                }
                if self.pegs.is_empty() {
                    out.push(format!("atom {}: symmetric atoms need a peg class", self.id));
                }
                if self.base_euler.is_none() && self.kind.real_dim() % 2 == 0 {
                    out.push(format!("atom {}: even-dimensional atom needs basechi", self.id));
                }
            }
        }
        for p in &self.pegs {
            if p.ends == 0 {
                out.push(format!("atom {}: peg {} needs ends >= 1", self.id, p.id));
            }
        }
        if let Some(profile) = &self.l2_profile {
            if profile.iter().any(|b| *b < int(0)) {
                out.push(format!("atom {}: negative l2 entry", self.id));
            }
            if let Some(chi) = self.effective_euler() {
                if alternating_sum(profile) != chi {
                    out.push(format!("atom {}: l2 alternating sum differs from basechi", self.id));
                }
            }
        }
        out
    }
}

/// Raw finite group data as declared in a document.
///
/// `ends` is the number of edge-end points the group permutes at its vertex;
/// `end_images[i]` is the action of `gens[i]` on them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDecl {
    pub id: String,
    pub degree: usize,
    pub ends: usize,
    pub gens: Vec<Perm>,
    pub end_images: Vec<Perm>,
    pub subgroups: BTreeMap<String, Vec<Perm>>,
}

/// A finite group with marked subgroups and an action on edge ends.
#[derive(Debug, Clone)]
pub struct LocalSymmetryDatum {
    pub group: PermGroup,
    pub marked: BTreeMap<String, PermGroup>,
    pub end_action: Vec<Perm>,
    pub ends: usize,
}

impl LocalSymmetryDatum {
    pub fn acts_on_ends(&self) -> bool {
        self.end_action.iter().any(|p| !p.is_identity())
    }

    /// Orbit of an end (0-based) under the end action.
    pub fn end_orbit(&self, end: usize) -> Vec<usize> {
        let mut seen = vec![false; self.ends];
        let mut stack = vec![end];
        seen[end] = true;
        while let Some(x) = stack.pop() {
            for g in &self.end_action {
                let y = g.apply(x);
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        (0..self.ends).filter(|&i| seen[i]).collect()
    }
}

impl GroupDecl {
    pub fn build(&self) -> Result<LocalSymmetryDatum, GroupError> {
        let group = closure(self.degree, &self.gens, DEFAULT_ORDER_CAP)?;
        let mut marked = BTreeMap::new();
        for (name, gens) in &self.subgroups {
            let h = closure(self.degree, gens, DEFAULT_ORDER_CAP)?;
            if !h.is_subgroup_of(&group) {
                return Err(GroupError::NotASubgroup(format!("{} in {}", name, self.id)));
            }
            marked.insert(name.clone(), h);
        }
        if self.ends > 0 {
            // homomorphism check: the joint action must not be bigger than the group
            let joint: Vec<Perm> = self
                .gens
                .iter()
                .zip(&self.end_images)
                .map(|(g, e)| {
                    let mut images: Vec<u32> = g.images().to_vec();
                    images.extend(e.images().iter().map(|&i| i + self.degree as u32));
                    Perm::from_images(images).expect("disjoint union of permutations")
                })
                .collect();
            let joint_group = closure(self.degree + self.ends, &joint, DEFAULT_ORDER_CAP)?;
            if joint_group.order() != group.order() {
                return Err(GroupError::NotASubgroup(format!(
                    "end action of {} is not a homomorphism",
                    self.id
                )));
            }
        }
        Ok(LocalSymmetryDatum {
            group,
            marked,
            end_action: self.end_images.clone(),
            ends: self.ends,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Catalog {
    pub id: String,
    pub atoms: BTreeMap<String, AtomType>,
    pub groups: BTreeMap<String, GroupDecl>,
}

impl Catalog {
    pub fn new(id: &str) -> Self {
        Catalog { id: id.to_string(), ..Default::default() }
    }

    pub fn with_atom(mut self, atom: AtomType) -> Self {
        self.atoms.insert(atom.id.clone(), atom);
        self
    }

    pub fn atom(&self, id: &str) -> Option<&AtomType> {
        self.atoms.get(id)
    }

    pub fn check(&self) -> Vec<String> {
        let mut out: Vec<String> = self.atoms.values().flat_map(|a| a.check()).collect();
        for g in self.groups.values() {
            if let Err(e) = g.build() {
                out.push(format!("group {}: {e}", g.id));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortRef {
    pub vertex: String,
    pub slot: String,
    pub port: u32,
}

impl PortRef {
    pub fn new(vertex: &str, slot: &str, port: u32) -> Self {
        PortRef { vertex: vertex.to_string(), slot: slot.to_string(), port }
    }

    pub fn parse(text: &str) -> Option<PortRef> {
        let mut parts = text.rsplitn(3, '.');
        let port = parts.next()?.parse().ok()?;
        let slot = parts.next()?;
        let vertex = parts.next()?;
        if vertex.is_empty() || slot.is_empty() {
            return None;
        }
        Some(PortRef::new(vertex, slot, port))
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.vertex, self.slot, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexInstance {
    pub id: String,
    pub atom: String,
    pub degree: u64,
    /// `(slotId, pegClassId)` pairs.
    pub slots: Vec<(String, String)>,
    pub group: Option<String>,
    pub sub: Option<String>,
}

impl VertexInstance {
    pub fn new(id: &str, atom: &str, degree: u64) -> Self {
        VertexInstance {
            id: id.to_string(),
            atom: atom.to_string(),
            degree,
            slots: Vec::new(),
            group: None,
            sub: None,
        }
    }

    pub fn with_slot(mut self, slot: &str, peg: &str) -> Self {
        self.slots.push((slot.to_string(), peg.to_string()));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub a: PortRef,
    pub b: PortRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descriptor {
    pub id: String,
    pub catalog: String,
    pub vertices: Vec<VertexInstance>,
    pub edges: Vec<Edge>,
}

impl Descriptor {
    pub fn new(id: &str, catalog: &str) -> Self {
        Descriptor { id: id.to_string(), catalog: catalog.to_string(), vertices: Vec::new(), edges: Vec::new() }
    }

    pub fn vertex(&self, id: &str) -> Option<&VertexInstance> {
        self.vertices.iter().find(|v| v.id == id)
    }

    pub fn add_vertex(&mut self, v: VertexInstance) {
        self.vertices.push(v);
    }

    pub fn add_edge(&mut self, id: &str, a: PortRef, b: PortRef) {
        self.edges.push(Edge { id: id.to_string(), a, b });
    }

    /// Copy with vertices, slots and edges in lexicographic id order.
    pub fn canonical(&self) -> Descriptor {
        let mut d = self.clone();
        for v in &mut d.vertices {
            v.slots.sort();
        }
        d.vertices.sort_by(|x, y| x.id.cmp(&y.id));
        d.edges.sort_by(|x, y| x.id.cmp(&y.id));
        d
    }

    /// First Betti number of the underlying graph, assuming connectivity.
    pub fn graph_rank(&self) -> i64 {
        self.edges.len() as i64 - self.vertices.len() as i64 + 1
    }

    pub fn uses_groups(&self) -> bool {
        self.vertices.iter().any(|v| v.group.is_some())
    }
}

/// Indexed view of a descriptor used by the graph algorithms.
///
/// Every edge contributes two ends, `2e` (side a) and `2e + 1` (side b).
/// Point vertices get a single slot with id `@` holding all their ends.
#[derive(Debug, Clone)]
pub struct Layout {
    pub vertex_ids: Vec<String>,
    pub vindex: HashMap<String, usize>,
    pub atom: Vec<String>,
    pub degree: Vec<u64>,
    pub is_point: Vec<bool>,
    pub slots: Vec<SlotInfo>,
    pub vertex_slots: Vec<Vec<usize>>,
    /// Ends per slot, ordered by port number.
    pub slot_ends: Vec<Vec<usize>>,
    pub end_slot: Vec<usize>,
    pub end_port: Vec<u32>,
    pub edge_ids: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SlotInfo {
    pub vertex: usize,
    pub id: String,
    /// Peg class, `None` for the point slot.
    pub peg: Option<String>,
    /// Port count; for the point slot this is the number of ends present.
    pub ports: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutError(pub String);

impl Layout {
    pub fn new(d: &Descriptor, cat: &Catalog) -> Result<Layout, LayoutError> {
        let err = |s: String| Err(LayoutError(s));
        let n = d.vertices.len();
        let mut vindex = HashMap::new();
        let mut atom = Vec::with_capacity(n);
        let mut degree = Vec::with_capacity(n);
        let mut is_point = Vec::with_capacity(n);
        let mut slots = Vec::new();
        let mut vertex_slots = vec![Vec::new(); n];
        let mut slot_lookup: HashMap<(usize, String), usize> = HashMap::new();
        for (i, v) in d.vertices.iter().enumerate() {
            if vindex.insert(v.id.clone(), i).is_some() {
                return err(format!("duplicate vertex {}", v.id));
            }
            let Some(at) = cat.atom(&v.atom) else {
                return err(format!("unknown atom {}", v.atom));
            };
            atom.push(v.atom.clone());
            degree.push(v.degree);
            is_point.push(at.is_point());
            if at.is_point() {
                slot_lookup.insert((i, POINT_SLOT.to_string()), slots.len());
                vertex_slots[i].push(slots.len());
                slots.push(SlotInfo { vertex: i, id: POINT_SLOT.to_string(), peg: None, ports: 0 });
            } else {
                let mut sorted = v.slots.clone();
                sorted.sort();
                for (sid, peg) in &sorted {
                    let Some(pc) = at.peg(peg) else {
                        return err(format!("unknown peg {peg} on atom {}", at.id));
                    };
                    if slot_lookup.insert((i, sid.clone()), slots.len()).is_some() {
                        return err(format!("duplicate slot {}.{}", v.id, sid));
                    }
                    vertex_slots[i].push(slots.len());
                    slots.push(SlotInfo { vertex: i, id: sid.clone(), peg: Some(peg.clone()), ports: pc.ends });
                }
            }
        }
        let mut slot_ends: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
        let mut end_slot = Vec::with_capacity(2 * d.edges.len());
        let mut end_port = Vec::with_capacity(2 * d.edges.len());
        for e in &d.edges {
            for pr in [&e.a, &e.b] {
                let Some(&vi) = vindex.get(&pr.vertex) else {
                    return err(format!("edge {}: unknown vertex {}", e.id, pr.vertex));
                };
                let Some(&si) = slot_lookup.get(&(vi, pr.slot.clone())) else {
                    return err(format!("edge {}: unknown slot {}.{}", e.id, pr.vertex, pr.slot));
                };
                slot_ends[si].push(end_slot.len());
                end_slot.push(si);
                end_port.push(pr.port);
            }
        }
        for (si, ends) in slot_ends.iter_mut().enumerate() {
            ends.sort_by_key(|&x| end_port[x]);
            if slots[si].peg.is_none() {
                slots[si].ports = ends.len() as u32;
            }
        }
        Ok(Layout {
            vertex_ids: d.vertices.iter().map(|v| v.id.clone()).collect(),
            vindex,
            atom,
            degree,
            is_point,
            slots,
            vertex_slots,
            slot_ends,
            end_slot,
            end_port,
            edge_ids: d.edges.iter().map(|e| e.id.clone()).collect(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn num_ends(&self) -> usize {
        self.end_slot.len()
    }

    #[inline]
    pub fn opposite(end: usize) -> usize {
        end ^ 1
    }

    #[inline]
    pub fn end_vertex(&self, end: usize) -> usize {
        self.slots[self.end_slot[end]].vertex
    }

    /// Number of edge ends at a vertex.
    pub fn valence(&self, v: usize) -> usize {
        self.vertex_slots[v].iter().map(|&s| self.slot_ends[s].len()).sum()
    }

    /// Vertex adjacency lists (with multiplicity).
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for end in 0..self.num_ends() {
            adj[self.end_vertex(end)].push(self.end_vertex(Self::opposite(end)));
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return false;
        }
        let adj = self.neighbors();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}
