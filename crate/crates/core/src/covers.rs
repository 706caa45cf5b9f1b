//! Explicit covering maps between descriptors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::measure::point_group_order;
use crate::model::{Catalog, Descriptor, Edge, Layout, PortRef, VertexInstance, POINT_SLOT};
use crate::permgrp::{closure, Perm, DEFAULT_ORDER_CAP};
use crate::validate::ValidationReport;

pub type SlotKey = (String, String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringMap {
    pub id: String,
    pub source: String,
    pub target: String,
    pub total_degree: u64,
    pub vertex_map: BTreeMap<String, String>,
    pub local_degree: BTreeMap<String, u64>,
    /// Symmetric slots only; the point slot maps implicitly.
    pub slot_map: BTreeMap<SlotKey, SlotKey>,
    pub edge_map: BTreeMap<String, String>,
    pub port_map: BTreeMap<PortRef, PortRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverError {
    #[error("descriptor mismatch: {0}")]
    Mismatch(String),
    #[error("invalid permutation degree for edge {0}")]
    PermutationDegree(String),
    #[error("invalid sheet data: {0}")]
    Sheets(String),
    #[error("invalid descriptor: {0}")]
    Layout(String),
}

impl CoveringMap {
    pub fn identity(d: &Descriptor) -> CoveringMap {
        let mut m = CoveringMap {
            id: format!("id_{}", d.id),
            source: d.id.clone(),
            target: d.id.clone(),
            total_degree: 1,
            vertex_map: BTreeMap::new(),
            local_degree: BTreeMap::new(),
            slot_map: BTreeMap::new(),
            edge_map: BTreeMap::new(),
            port_map: BTreeMap::new(),
        };
        for v in &d.vertices {
            m.vertex_map.insert(v.id.clone(), v.id.clone());
            m.local_degree.insert(v.id.clone(), 1);
            for (s, _) in &v.slots {
                let k = (v.id.clone(), s.clone());
                m.slot_map.insert(k.clone(), k);
            }
        }
        for e in &d.edges {
            m.edge_map.insert(e.id.clone(), e.id.clone());
            m.port_map.insert(e.a.clone(), e.a.clone());
            m.port_map.insert(e.b.clone(), e.b.clone());
        }
        m
    }
}

fn is_torsion_point(v: &VertexInstance, cat: &Catalog) -> bool {
    cat.atom(&v.atom).is_some_and(|a| a.is_point()) && point_group_order(v, cat).unwrap_or(1) > 1
}

/// Checks every covering-map invariant; an empty report means `m` is a cover `source -> target`.
///
/// Targets with a finite group at a point vertex are checked as orbifold covers there:
/// any local degree is allowed and each target port has exactly that many preimages in
/// the source vertex.
pub fn verify_cover(m: &CoveringMap, source: &Descriptor, target: &Descriptor, cat: &Catalog) -> ValidationReport {
    let mut r = ValidationReport::default();
    if m.source != source.id || m.target != target.id {
        r.push(format!(
            "cover {} is {} -> {}, given {} -> {}",
            m.id, m.source, m.target, source.id, target.id
        ));
        return r;
    }
    if m.total_degree == 0 {
        r.push("total degree must be positive");
        return r;
    }
    let n = m.total_degree;
    let tv: BTreeMap<&str, &VertexInstance> = target.vertices.iter().map(|v| (v.id.as_str(), v)).collect();
    let sv: BTreeMap<&str, &VertexInstance> = source.vertices.iter().map(|v| (v.id.as_str(), v)).collect();
    let te: BTreeMap<&str, &Edge> = target.edges.iter().map(|e| (e.id.as_str(), e)).collect();

    // vertices
    let mut fiber_sum: BTreeMap<&str, u64> = tv.keys().map(|k| (*k, 0)).collect();
    for w in &source.vertices {
        let Some(vid) = m.vertex_map.get(&w.id) else {
            r.push(format!("vertex {} has no image", w.id));
            continue;
        };
        let Some(v) = tv.get(vid.as_str()) else {
            r.push(format!("vertex {} maps to unknown {}", w.id, vid));
            continue;
        };
        let ld = m.local_degree.get(&w.id).copied().unwrap_or(0);
        if ld == 0 {
            r.push(format!("vertex {} has no positive local degree", w.id));
            continue;
        }
        *fiber_sum.get_mut(vid.as_str()).expect("target vertex") += ld;
        if w.atom != v.atom {
            r.push(format!("vertex {}: atom {} over {}", w.id, w.atom, v.atom));
        }
        let torsion = is_torsion_point(v, cat);
        if !torsion && w.degree != ld * v.degree {
            r.push(format!(
                "vertex {}: degree {} ≠ local degree {} × {}",
                w.id, w.degree, ld, v.degree
            ));
        }
        // slots
        let mut per_target: BTreeMap<&str, u64> = v.slots.iter().map(|(s, _)| (s.as_str(), 0)).collect();
        for (s, peg) in &w.slots {
            let key = (w.id.clone(), s.clone());
            let Some((tvid, ts)) = m.slot_map.get(&key) else {
                r.push(format!("slot {}.{} has no image", w.id, s));
                continue;
            };
            if tvid != &v.id {
                r.push(format!("slot {}.{} maps off the vertex image", w.id, s));
                continue;
            }
            match v.slots.iter().find(|(x, _)| x == ts) {
                None => r.push(format!("slot {}.{} maps to unknown slot {}", w.id, s, ts)),
                Some((_, tpeg)) => {
                    if tpeg != peg {
                        r.push(format!("slot {}.{}: peg {} over {}", w.id, s, peg, tpeg));
                    }
                    *per_target.get_mut(ts.as_str()).expect("slot") += 1;
                }
            }
        }
        for (ts, count) in per_target {
            if count != ld {
                r.push(format!("slot {}.{} has {} preimages in {}, expected {}", v.id, ts, count, w.id, ld));
            }
        }
    }
    for (vid, sum) in fiber_sum {
        if sum != n {
            r.push(format!("fiber degree sum over {vid} is {sum}, expected {n}"));
        }
    }
    for key in m.vertex_map.keys() {
        if !sv.contains_key(key.as_str()) {
            r.push(format!("vertex map has unknown source {key}"));
        }
    }

    // edges and ports
    let mut edge_count: BTreeMap<&str, u64> = te.keys().map(|k| (*k, 0)).collect();
    let mut seen_ports: BTreeSet<&PortRef> = BTreeSet::new();
    let mut port_preimages: BTreeMap<(&str, &PortRef), u64> = BTreeMap::new();
    let mut slot_images: BTreeSet<(&str, &str, &PortRef)> = BTreeSet::new();
    for e in &source.edges {
        let Some(tid) = m.edge_map.get(&e.id) else {
            r.push(format!("edge {} has no image", e.id));
            continue;
        };
        let Some(t) = te.get(tid.as_str()) else {
            r.push(format!("edge {} maps to unknown {}", e.id, tid));
            continue;
        };
        *edge_count.get_mut(tid.as_str()).expect("edge") += 1;
        let (Some(pa), Some(pb)) = (m.port_map.get(&e.a), m.port_map.get(&e.b)) else {
            r.push(format!("edge {}: ports without image", e.id));
            continue;
        };
        let straight = pa == &t.a && pb == &t.b;
        let crossed = pa == &t.b && pb == &t.a;
        if !straight && !crossed {
            r.push(format!("edge {}: ports do not lie over the ends of {}", e.id, t.id));
        }
        for (sp, tp) in [(&e.a, pa), (&e.b, pb)] {
            seen_ports.insert(sp);
            if m.vertex_map.get(&sp.vertex) != Some(&tp.vertex) {
                r.push(format!("port {sp} maps off the vertex image"));
                continue;
            }
            if sp.slot == POINT_SLOT || tp.slot == POINT_SLOT {
                if sp.slot != tp.slot {
                    r.push(format!("port {sp} mixes point and peg slots"));
                }
            } else {
                let key = (sp.vertex.clone(), sp.slot.clone());
                if m.slot_map.get(&key) != Some(&(tp.vertex.clone(), tp.slot.clone())) {
                    r.push(format!("port {sp} maps off the slot image"));
                }
                if !slot_images.insert((sp.vertex.as_str(), sp.slot.as_str(), tp)) {
                    r.push(format!("slot {}.{} sends two ports to {tp}", sp.vertex, sp.slot));
                }
            }
            *port_preimages.entry((sp.vertex.as_str(), tp)).or_default() += 1;
        }
    }
    for (tid, count) in edge_count {
        if count != n {
            r.push(format!("edge {tid} has {count} preimages, expected {n}"));
        }
    }
    for p in m.port_map.keys() {
        if !seen_ports.contains(p) {
            r.push(format!("port map has stray source port {p}"));
        }
    }
    // each source vertex sees each target port at its image exactly ld times
    for w in &source.vertices {
        let (Some(vid), Some(&ld)) = (m.vertex_map.get(&w.id), m.local_degree.get(&w.id)) else {
            continue;
        };
        let Some(v) = tv.get(vid.as_str()) else { continue };
        if ld == 0 {
            continue;
        }
        for t in &target.edges {
            for tp in [&t.a, &t.b] {
                if tp.vertex != v.id {
                    continue;
                }
                let count = port_preimages.get(&(w.id.as_str(), tp)).copied().unwrap_or(0);
                if count != ld {
                    r.push(format!("port {tp} has {count} preimages at {}, expected {ld}", w.id));
                }
            }
        }
    }
    r
}

/// `q ∘ p`, the cover `A -> C` from `p: A -> B` and `q: B -> C`.
pub fn compose(p: &CoveringMap, q: &CoveringMap) -> Result<CoveringMap, CoverError> {
    if p.target != q.source {
        return Err(CoverError::Mismatch(format!("{} -> {} then {} -> {}", p.source, p.target, q.source, q.target)));
    }
    let miss = |what: &str, k: &str| CoverError::Mismatch(format!("{what} {k} missing in {}", q.id));
    let mut out = CoveringMap {
        id: format!("{}_{}", p.id, q.id),
        source: p.source.clone(),
        target: q.target.clone(),
        total_degree: p.total_degree * q.total_degree,
        vertex_map: BTreeMap::new(),
        local_degree: BTreeMap::new(),
        slot_map: BTreeMap::new(),
        edge_map: BTreeMap::new(),
        port_map: BTreeMap::new(),
    };
    for (w, v) in &p.vertex_map {
        let u = q.vertex_map.get(v).ok_or_else(|| miss("vertex", v))?;
        out.vertex_map.insert(w.clone(), u.clone());
        let ld = p.local_degree.get(w).copied().unwrap_or(0) * q.local_degree.get(v).copied().unwrap_or(0);
        out.local_degree.insert(w.clone(), ld);
    }
    for (s, t) in &p.slot_map {
        let u = q.slot_map.get(t).ok_or_else(|| miss("slot", &t.1))?;
        out.slot_map.insert(s.clone(), u.clone());
    }
    for (e, f) in &p.edge_map {
        let g = q.edge_map.get(f).ok_or_else(|| miss("edge", f))?;
        out.edge_map.insert(e.clone(), g.clone());
    }
    for (a, b) in &p.port_map {
        let c = q.port_map.get(b).ok_or_else(|| miss("port", &b.to_string()))?;
        out.port_map.insert(a.clone(), c.clone());
    }
    Ok(out)
}

/// Connected component of `c` containing `root`, with the cover restricted to it.
pub fn restrict_to_component(
    c: &Descriptor,
    m: &CoveringMap,
    cat: &Catalog,
    root: &str,
) -> Result<(Descriptor, CoveringMap), CoverError> {
    let layout = Layout::new(c, cat).map_err(|e| CoverError::Layout(e.0))?;
    let start = *layout.vindex.get(root).ok_or_else(|| CoverError::Mismatch(format!("no vertex {root}")))?;
    let comp = component_of(&layout, start);
    let keep: BTreeSet<&str> = comp.iter().map(|&i| layout.vertex_ids[i].as_str()).collect();
    let mut d = Descriptor::new(&c.id, &c.catalog);
    d.vertices = c.vertices.iter().filter(|v| keep.contains(v.id.as_str())).cloned().collect();
    d.edges = c.edges.iter().filter(|e| keep.contains(e.a.vertex.as_str())).cloned().collect();
    let mut out = m.clone();
    out.vertex_map.retain(|k, _| keep.contains(k.as_str()));
    out.local_degree.retain(|k, _| keep.contains(k.as_str()));
    out.slot_map.retain(|k, _| keep.contains(k.0.as_str()));
    let eids: BTreeSet<&str> = d.edges.iter().map(|e| e.id.as_str()).collect();
    out.edge_map.retain(|k, _| eids.contains(k.as_str()));
    out.port_map.retain(|k, _| keep.contains(k.vertex.as_str()));
    let base = &m.vertex_map[root];
    out.total_degree = out
        .vertex_map
        .iter()
        .filter(|(_, t)| *t == base)
        .map(|(s, _)| out.local_degree[s])
        .sum();
    Ok((d, out))
}

pub(crate) fn component_of(layout: &Layout, start: usize) -> Vec<usize> {
    let adj = layout.neighbors();
    let mut seen = vec![false; layout.num_vertices()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut out = vec![start];
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Sheet data for a cover of degree `n`.
///
/// `blocks[v]` partitions the sheets over symmetric vertex `v` into cover vertices
/// (singletons when absent); `edge_perms[e]` sends the sheet at end `a` to the sheet at end `b`
/// (identity when absent).
#[derive(Debug, Clone, Default)]
pub struct SheetSpec {
    pub n: usize,
    pub blocks: BTreeMap<String, Vec<Vec<usize>>>,
    pub edge_perms: BTreeMap<String, Perm>,
}

/// The full, possibly disconnected, cover described by `spec`.
pub fn sheet_cover(d: &Descriptor, cat: &Catalog, spec: &SheetSpec, id: &str) -> Result<(Descriptor, CoveringMap), CoverError> {
    let n = spec.n;
    if n == 0 {
        return Err(CoverError::Sheets("zero sheets".into()));
    }
    let mut c = Descriptor::new(id, &d.catalog);
    let mut m = CoveringMap {
        id: format!("{id}_to_{}", d.id),
        source: id.to_string(),
        target: d.id.clone(),
        total_degree: n as u64,
        vertex_map: BTreeMap::new(),
        local_degree: BTreeMap::new(),
        slot_map: BTreeMap::new(),
        edge_map: BTreeMap::new(),
        port_map: BTreeMap::new(),
    };
    // owner[v][sheet] = cover vertex id
    let mut owner: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for v in &d.vertices {
        let atom = cat.atom(&v.atom).ok_or_else(|| CoverError::Layout(format!("unknown atom {}", v.atom)))?;
        let blocks: Vec<Vec<usize>> = match spec.blocks.get(&v.id) {
            Some(b) => b.clone(),
            None => (0..n).map(|i| vec![i]).collect(),
        };
        let mut seen = vec![false; n];
        for b in &blocks {
            for &i in b {
                if i >= n || seen[i] {
                    return Err(CoverError::Sheets(format!("blocks over {} are not a partition", v.id)));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) || blocks.iter().any(|b| b.is_empty()) {
            return Err(CoverError::Sheets(format!("blocks over {} are not a partition", v.id)));
        }
        if atom.is_point() && blocks.iter().any(|b| b.len() != 1) {
            return Err(CoverError::Sheets(format!("point vertex {} needs singleton blocks", v.id)));
        }
        let mut own = vec![String::new(); n];
        for b in &blocks {
            let first = *b.iter().min().expect("nonempty");
            let wid = format!("{}_{}", v.id, first);
            let mut w = VertexInstance::new(&wid, &v.atom, v.degree * b.len() as u64);
            w.group = v.group.clone();
            w.sub = v.sub.clone();
            for &i in b {
                own[i] = wid.clone();
                for (s, peg) in &v.slots {
                    let sid = format!("{s}_{i}");
                    w.slots.push((sid.clone(), peg.clone()));
                    m.slot_map.insert((wid.clone(), sid), (v.id.clone(), s.clone()));
                }
            }
            m.vertex_map.insert(wid.clone(), v.id.clone());
            m.local_degree.insert(wid.clone(), b.len() as u64);
            c.add_vertex(w);
        }
        owner.insert(v.id.as_str(), own);
    }
    let lift = |p: &PortRef, sheet: usize| -> PortRef {
        let w = &owner[p.vertex.as_str()][sheet];
        if p.slot == POINT_SLOT {
            PortRef::new(w, POINT_SLOT, p.port)
        } else {
            PortRef::new(w, &format!("{}_{}", p.slot, sheet), p.port)
        }
    };
    for e in &d.edges {
        let perm = match spec.edge_perms.get(&e.id) {
            Some(p) if p.degree() == n => p.clone(),
            Some(_) => return Err(CoverError::PermutationDegree(e.id.clone())),
            None => Perm::identity(n),
        };
        for i in 0..n {
            let j = perm.apply(i);
            let pa = lift(&e.a, i);
            let pb = lift(&e.b, j);
            let eid = format!("{}_{}", e.id, i);
            m.edge_map.insert(eid.clone(), e.id.clone());
            m.port_map.insert(pa.clone(), e.a.clone());
            m.port_map.insert(pb.clone(), e.b.clone());
            c.add_edge(&eid, pa, pb);
        }
    }
    Ok((c, m))
}

/// Component of the sheet cover containing sheet 0 over the first vertex.
pub fn permutation_cover(d: &Descriptor, cat: &Catalog, spec: &SheetSpec, id: &str) -> Result<(Descriptor, CoveringMap), CoverError> {
    let (c, m) = sheet_cover(d, cat, spec, id)?;
    let v0 = &d.vertices[0].id;
    let first = spec
        .blocks
        .get(v0)
        .and_then(|bs| bs.iter().find(|b| b.contains(&0)))
        .map_or(0, |b| *b.iter().min().expect("nonempty"));
    restrict_to_component(&c, &m, cat, &format!("{v0}_{first}"))
}

/// A descriptor automorphism given on vertices, edges and ports.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Automorphism {
    pub vertex: BTreeMap<String, String>,
    pub edge: BTreeMap<String, String>,
    pub port: BTreeMap<PortRef, PortRef>,
}

#[derive(Debug, Clone)]
pub struct DeckAction {
    pub cover: String,
    pub generators: Vec<Automorphism>,
    /// Number of deck transformations.
    pub order: usize,
    /// Transitive on fibers.
    pub regular: bool,
}

impl DeckAction {
    /// Each generator is an automorphism of `c` commuting with `m`.
    pub fn check(&self, c: &Descriptor, m: &CoveringMap) -> ValidationReport {
        let mut r = ValidationReport::default();
        for (k, g) in self.generators.iter().enumerate() {
            let images: BTreeSet<&String> = g.vertex.values().collect();
            if images.len() != c.vertices.len() || g.vertex.len() != c.vertices.len() {
                r.push(format!("deck {k}: vertex map is not a bijection"));
            }
            for (w, x) in &g.vertex {
                if m.vertex_map.get(w) != m.vertex_map.get(x) {
                    r.push(format!("deck {k}: {w} and {x} lie over different vertices"));
                }
            }
            for e in &c.edges {
                let Some(f) = g.edge.get(&e.id).and_then(|f| c.edges.iter().find(|x| &x.id == f)) else {
                    r.push(format!("deck {k}: edge {} has no image", e.id));
                    continue;
                };
                if m.edge_map.get(&e.id) != m.edge_map.get(&f.id) {
                    r.push(format!("deck {k}: edge {} moves across fibers", e.id));
                }
                let (pa, pb) = (g.port.get(&e.a), g.port.get(&e.b));
                let ok = (pa == Some(&f.a) && pb == Some(&f.b)) || (pa == Some(&f.b) && pb == Some(&f.a));
                if !ok {
                    r.push(format!("deck {k}: edge {} ports do not match", e.id));
                }
            }
            for (p, q) in &g.port {
                if m.port_map.get(p) != m.port_map.get(q) {
                    r.push(format!("deck {k}: port {p} moves across fibers"));
                }
            }
        }
        r
    }
}

#[derive(Debug, Clone)]
pub struct RegularCover {
    pub cover: Descriptor,
    pub map: CoveringMap,
    pub deck: DeckAction,
    pub regular: bool,
}

/// Derived cover of a permutation voltage assignment, restricted to the basepoint component.
///
/// Edges without a voltage carry the identity. Regularity is decided from the
/// monodromy group at the basepoint.
pub fn graph_regular_cover(
    d: &Descriptor,
    cat: &Catalog,
    n: usize,
    voltages: &BTreeMap<String, Perm>,
    id: &str,
) -> Result<RegularCover, CoverError> {
    for (e, p) in voltages {
        if p.degree() != n {
            return Err(CoverError::PermutationDegree(e.clone()));
        }
    }
    let spec = SheetSpec { n, blocks: BTreeMap::new(), edge_perms: voltages.clone() };
    let (full, full_map) = sheet_cover(d, cat, &spec, id)?;
    let layout = Layout::new(d, cat).map_err(|e| CoverError::Layout(e.0))?;
    let nv = layout.num_vertices();
    let volt = |ei: usize| voltages.get(&layout.edge_ids[ei]).cloned().unwrap_or_else(|| Perm::identity(n));
    // tree voltages from the basepoint
    let mut t: Vec<Option<Perm>> = vec![None; nv];
    t[0] = Some(Perm::identity(n));
    let mut queue = VecDeque::from([0usize]);
    let mut tree_edge = vec![false; layout.edge_ids.len()];
    while let Some(u) = queue.pop_front() {
        for &s in &layout.vertex_slots[u] {
            for &end in &layout.slot_ends[s] {
                let w = layout.end_vertex(Layout::opposite(end));
                if t[w].is_some() {
                    continue;
                }
                let ei = end / 2;
                let step = if end % 2 == 0 { volt(ei) } else { volt(ei).inverse() };
                t[w] = Some(t[u].as_ref().expect("visited").then(&step));
                tree_edge[ei] = true;
                queue.push_back(w);
            }
        }
    }
    let t: Vec<Perm> = t.into_iter().map(|x| x.expect("connected base")).collect();
    let mut walks = Vec::new();
    for ei in 0..layout.edge_ids.len() {
        if tree_edge[ei] {
            continue;
        }
        let u = layout.end_vertex(2 * ei);
        let w = layout.end_vertex(2 * ei + 1);
        walks.push(t[u].then(&volt(ei)).then(&t[w].inverse()));
    }
    let mono = closure(n, &walks, DEFAULT_ORDER_CAP).map_err(|e| CoverError::Sheets(e.to_string()))?;
    let mut orbit: Vec<usize> = mono.elements().iter().map(|g| g.apply(0)).collect();
    orbit.sort_unstable();
    orbit.dedup();
    let stab0: Vec<&Perm> = mono.elements().iter().filter(|g| g.apply(0) == 0).collect();
    // deck transformations: delta_k(h(0)) = h(k) for k fixed by Stab(0)
    let mut deck_perms: Vec<Perm> = Vec::new();
    for &k in &orbit {
        if !stab0.iter().all(|g| g.apply(k) == k) {
            continue;
        }
        let mut images: Vec<u32> = (0..n as u32).collect();
        for h in mono.elements() {
            images[h.apply(0)] = h.apply(k) as u32;
        }
        deck_perms.push(Perm::from_images(images).expect("deck permutation"));
    }
    let regular = deck_perms.len() == orbit.len();
    let v0 = &d.vertices[0].id;
    let (cover, map) = restrict_to_component(&full, &full_map, cat, &format!("{v0}_0"))?;
    let mut generators = Vec::new();
    for delta in &deck_perms {
        if delta.is_identity() {
            continue;
        }
        // at vertex v, sheet t_v(x) goes to t_v(delta(x))
        let at = |v: usize, sheet: usize| -> usize {
            let x = t[v].inverse().apply(sheet);
            t[v].apply(delta.apply(x))
        };
        let mut g = Automorphism::default();
        for w in &cover.vertices {
            let (base, sheet) = split_sheet(&w.id);
            let v = layout.vindex[base];
            g.vertex.insert(w.id.clone(), format!("{base}_{}", at(v, sheet)));
        }
        for e in &cover.edges {
            let (base, sheet) = split_sheet(&e.id);
            let ei = layout.edge_ids.iter().position(|x| x == base).expect("base edge");
            let u = layout.end_vertex(2 * ei);
            g.edge.insert(e.id.clone(), format!("{base}_{}", at(u, sheet)));
            for p in [&e.a, &e.b] {
                let (vb, vs) = split_sheet(&p.vertex);
                let v = layout.vindex[vb];
                let img_sheet = at(v, vs);
                let slot = if p.slot == POINT_SLOT {
                    POINT_SLOT.to_string()
                } else {
                    format!("{}_{}", split_sheet(&p.slot).0, img_sheet)
                };
                g.port.insert(p.clone(), PortRef::new(&format!("{vb}_{img_sheet}"), &slot, p.port));
            }
        }
        generators.push(g);
    }
    let deck = DeckAction { cover: map.id.clone(), generators, order: deck_perms.len(), regular };
    Ok(RegularCover { cover, map, deck, regular })
}

fn split_sheet(id: &str) -> (&str, usize) {
    let (base, sheet) = id.rsplit_once('_').expect("sheet suffix");
    (base, sheet.parse().expect("sheet index"))
}

/// One component of a fiber product with its two projections.
#[derive(Debug, Clone)]
pub struct FiberComponent {
    pub c: Descriptor,
    pub to_a: CoveringMap,
    pub to_b: CoveringMap,
}

/// Pullback of two covers of one base, split into components.
///
/// Over a symmetric base vertex the pair `(x, y)` becomes a single vertex of degree
/// `ld(x) ld(y) deg(v)`; over a point the pair is a point.
pub fn fiber_product(
    p: &CoveringMap,
    q: &CoveringMap,
    a: &Descriptor,
    b: &Descriptor,
    base: &Descriptor,
    cat: &Catalog,
) -> Result<Vec<FiberComponent>, CoverError> {
    if p.target != base.id || q.target != base.id || p.source != a.id || q.source != b.id {
        return Err(CoverError::Mismatch("fiber product needs covers of one base".into()));
    }
    let mut pairs: Vec<(String, String)> = Vec::new();
    for x in &a.vertices {
        for y in &b.vertices {
            if p.vertex_map[&x.id] == q.vertex_map[&y.id] {
                pairs.push((x.id.clone(), y.id.clone()));
            }
        }
    }
    let pid: BTreeMap<(String, String), String> =
        pairs.iter().enumerate().map(|(i, pr)| (pr.clone(), format!("f{i:03}"))).collect();
    let base_v: BTreeMap<&str, &VertexInstance> = base.vertices.iter().map(|v| (v.id.as_str(), v)).collect();
    let av: BTreeMap<&str, &VertexInstance> = a.vertices.iter().map(|v| (v.id.as_str(), v)).collect();
    let bv: BTreeMap<&str, &VertexInstance> = b.vertices.iter().map(|v| (v.id.as_str(), v)).collect();

    let mut c = Descriptor::new("fp", &base.catalog);
    let mut to_a = CoveringMap {
        id: "fp_a".into(),
        source: "fp".into(),
        target: a.id.clone(),
        total_degree: 0,
        vertex_map: BTreeMap::new(),
        local_degree: BTreeMap::new(),
        slot_map: BTreeMap::new(),
        edge_map: BTreeMap::new(),
        port_map: BTreeMap::new(),
    };
    let mut to_b = CoveringMap { id: "fp_b".into(), target: b.id.clone(), ..to_a.clone() };
    // slot pairs over the same base slot, numbered per c-vertex
    let mut slot_pair: BTreeMap<(String, String), String> = BTreeMap::new();
    for (x, y) in &pairs {
        let vid = &p.vertex_map[x];
        let v = base_v[vid.as_str()];
        let (lx, ly) = (p.local_degree[x], q.local_degree[y]);
        let cid = pid[&(x.clone(), y.clone())].clone();
        let mut w = VertexInstance::new(&cid, &v.atom, lx * ly * v.degree);
        let mut k = 0;
        for (sx, peg) in &av[x.as_str()].slots {
            for (sy, _) in &bv[y.as_str()].slots {
                if p.slot_map[&(x.clone(), sx.clone())] != q.slot_map[&(y.clone(), sy.clone())] {
                    continue;
                }
                k += 1;
                let sid = format!("s{k}");
                w.slots.push((sid.clone(), peg.clone()));
                to_a.slot_map.insert((cid.clone(), sid.clone()), (x.clone(), sx.clone()));
                to_b.slot_map.insert((cid.clone(), sid.clone()), (y.clone(), sy.clone()));
                slot_pair.insert((format!("{x}.{sx}"), format!("{y}.{sy}")), sid);
            }
        }
        to_a.vertex_map.insert(cid.clone(), x.clone());
        to_a.local_degree.insert(cid.clone(), ly);
        to_b.vertex_map.insert(cid.clone(), y.clone());
        to_b.local_degree.insert(cid.clone(), lx);
        c.add_vertex(w);
    }
    let mut point_ports: BTreeMap<String, u32> = BTreeMap::new();
    let mut point_port_id: BTreeMap<(PortRef, PortRef), u32> = BTreeMap::new();
    let mut k = 0;
    for e in &base.edges {
        let lifts = |m: &CoveringMap, d: &Descriptor| -> Vec<(String, PortRef, PortRef)> {
            d.edges
                .iter()
                .filter(|x| m.edge_map.get(&x.id) == Some(&e.id))
                .map(|x| {
                    if m.port_map[&x.a] == e.a {
                        (x.id.clone(), x.a.clone(), x.b.clone())
                    } else {
                        (x.id.clone(), x.b.clone(), x.a.clone())
                    }
                })
                .collect()
        };
        for (ea, a1, a2) in lifts(p, a) {
            for (eb, b1, b2) in lifts(q, b) {
                let mut ends = Vec::new();
                for (pa, pb, tp) in [(&a1, &b1, &e.a), (&a2, &b2, &e.b)] {
                    let cid = pid[&(pa.vertex.clone(), pb.vertex.clone())].clone();
                    let port = if tp.slot == POINT_SLOT {
                        let key = (pa.clone(), pb.clone());
                        if let Some(&n) = point_port_id.get(&key) {
                            PortRef::new(&cid, POINT_SLOT, n)
                        } else {
                            let n = point_ports.entry(cid.clone()).or_insert(0);
                            *n += 1;
                            point_port_id.insert(key, *n);
                            PortRef::new(&cid, POINT_SLOT, *n)
                        }
                    } else {
                        let sid = &slot_pair[&(format!("{}.{}", pa.vertex, pa.slot), format!("{}.{}", pb.vertex, pb.slot))];
                        PortRef::new(&cid, sid, tp.port)
                    };
                    to_a.port_map.insert(port.clone(), pa.clone());
                    to_b.port_map.insert(port.clone(), pb.clone());
                    ends.push(port);
                }
                let eid = format!("e{k:03}");
                k += 1;
                to_a.edge_map.insert(eid.clone(), ea.clone());
                to_b.edge_map.insert(eid.clone(), eb.clone());
                c.add_edge(&eid, ends[0].clone(), ends[1].clone());
            }
        }
    }
    // split into components in order of least vertex id
    let layout = Layout::new(&c, cat).map_err(|e| CoverError::Layout(e.0))?;
    let mut done = vec![false; layout.num_vertices()];
    let mut out = Vec::new();
    for start in 0..layout.num_vertices() {
        if done[start] {
            continue;
        }
        let comp = component_of(&layout, start);
        for &i in &comp {
            done[i] = true;
        }
        let idx = out.len();
        let root = layout.vertex_ids[start].clone();
        let (mut ca, mut ma) = restrict_to_component(&c, &to_a, cat, &root)?;
        let (_, mut mb) = restrict_to_component(&c, &to_b, cat, &root)?;
        let cid = format!("fp{idx}");
        ca.id = cid.clone();
        ma.source = cid.clone();
        mb.source = cid.clone();
        ma.id = format!("{cid}_a");
        mb.id = format!("{cid}_b");
        out.push(FiberComponent { c: ca, to_a: ma, to_b: mb });
    }
    Ok(out)
}
