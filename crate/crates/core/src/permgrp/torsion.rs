//! Finite torsion-free covers of graphs of finite groups with trivial edge groups.

use std::collections::BTreeMap;

use super::{closure, GroupError, Perm, PermGroup, DEFAULT_ORDER_CAP};
use crate::covers::CoveringMap;
use crate::model::{Descriptor, PortRef, VertexInstance, POINT_SLOT};

/// A descriptor whose vertices carry finite groups; vertices missing from `groups` are trivial.
#[derive(Debug, Clone)]
pub struct GraphOfFiniteGroups {
    pub shadow: Descriptor,
    pub groups: BTreeMap<String, PermGroup>,
}

#[derive(Debug, Clone)]
pub struct TorsionFreeCover {
    pub cover: Descriptor,
    pub map: CoveringMap,
    pub total_degree: u64,
    /// `|Q|` and, per shadow vertex, the fiber size.
    pub quotient_order: usize,
    pub fiber_sizes: BTreeMap<String, usize>,
}

/// Cover attached to `Q = prod_v G_v`, each vertex group embedded on its own block of points and
/// every free generator sent to the identity.
///
/// Vertices over `v` are the left cosets `q G_v`; edge lifts are indexed by `q in Q`. Symmetric
/// vertices gain one slot copy per element of their coset, point vertices one port per
/// `(port, element)` pair.
pub fn torsion_free_cover(g: &GraphOfFiniteGroups, cover_id: &str) -> Result<TorsionFreeCover, GroupError> {
    let d = &g.shadow;
    // block offsets
    let mut offsets: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    let mut order = 1usize;
    for v in &d.vertices {
        if let Some(gv) = g.groups.get(&v.id) {
            offsets.insert(v.id.as_str(), total);
            total += gv.degree();
            order = order.saturating_mul(gv.order());
            if order > DEFAULT_ORDER_CAP {
                return Err(GroupError::CapExceeded { cap: DEFAULT_ORDER_CAP });
            }
        }
    }
    let embed = |vid: &str, p: &Perm| -> Perm {
        let off = offsets[vid];
        let mut images: Vec<u32> = (0..total as u32).collect();
        for i in 0..p.degree() {
            images[off + i] = (off + p.apply(i)) as u32;
        }
        Perm::from_images(images).expect("block embedding")
    };
    let mut all_gens = Vec::new();
    let mut embedded: BTreeMap<&str, Vec<Perm>> = BTreeMap::new();
    for v in &d.vertices {
        if let Some(gv) = g.groups.get(&v.id) {
            let els: Vec<Perm> = gv.elements().iter().map(|x| embed(&v.id, x)).collect();
            all_gens.extend(gv.generators().iter().map(|x| embed(&v.id, x)));
            embedded.insert(v.id.as_str(), els);
        }
    }
    let q = closure(total, &all_gens, DEFAULT_ORDER_CAP)?;
    let qels = q.elements();
    let index_of: BTreeMap<&Perm, usize> = qels.iter().enumerate().map(|(i, x)| (x, i)).collect();

    let mut cover = Descriptor::new(cover_id, &d.catalog);
    let mut map = CoveringMap {
        id: format!("{cover_id}_to_{}", d.id),
        source: cover_id.to_string(),
        target: d.id.clone(),
        total_degree: qels.len() as u64,
        vertex_map: BTreeMap::new(),
        local_degree: BTreeMap::new(),
        slot_map: BTreeMap::new(),
        edge_map: BTreeMap::new(),
        port_map: BTreeMap::new(),
    };
    // coset[v][qi] = (cover vertex id, position of q inside its coset)
    let mut coset: BTreeMap<&str, Vec<(String, usize)>> = BTreeMap::new();
    let mut fiber_sizes = BTreeMap::new();
    for v in &d.vertices {
        let hv: Vec<Perm> = embedded.get(v.id.as_str()).cloned().unwrap_or_else(|| vec![Perm::identity(total)]);
        let mut assign: Vec<Option<(String, usize)>> = vec![None; qels.len()];
        let mut k = 0;
        for (qi, x) in qels.iter().enumerate() {
            if assign[qi].is_some() {
                continue;
            }
            let wid = format!("{}_{}", v.id, k);
            k += 1;
            // members x h, ordered by their index in Q
            let mut members: Vec<usize> = hv.iter().map(|h| index_of[&h.then(x)]).collect();
            members.sort_unstable();
            let degree = if v.slots.is_empty() { v.degree } else { v.degree * hv.len() as u64 };
            let mut w = VertexInstance::new(&wid, &v.atom, degree);
            for (pos, &m) in members.iter().enumerate() {
                assign[m] = Some((wid.clone(), pos));
                for (s, peg) in &v.slots {
                    let sid = format!("{s}_{m}");
                    w.slots.push((sid.clone(), peg.clone()));
                    map.slot_map.insert((wid.clone(), sid), (v.id.clone(), s.clone()));
                }
            }
            map.vertex_map.insert(wid.clone(), v.id.clone());
            map.local_degree.insert(wid.clone(), hv.len() as u64);
            cover.add_vertex(w);
        }
        fiber_sizes.insert(v.id.clone(), k);
        coset.insert(v.id.as_str(), assign.into_iter().map(|x| x.expect("every element lies in a coset")).collect());
    }
    // point ports: numbered per cover vertex in (base port, element) order
    let mut point_ports: BTreeMap<(String, PortRef, usize), u32> = BTreeMap::new();
    let mut next_port: BTreeMap<String, u32> = BTreeMap::new();
    let mut base_ports: Vec<&PortRef> = d.edges.iter().flat_map(|e| [&e.a, &e.b]).collect();
    base_ports.sort();
    for p in base_ports {
        if p.slot != POINT_SLOT {
            continue;
        }
        for qi in 0..qels.len() {
            let (wid, _) = &coset[p.vertex.as_str()][qi];
            let n = next_port.entry(wid.clone()).or_insert(0);
            *n += 1;
            point_ports.insert((wid.clone(), p.clone(), qi), *n);
        }
    }
    let lift = |p: &PortRef, qi: usize| -> PortRef {
        let (wid, _) = &coset[p.vertex.as_str()][qi];
        if p.slot == POINT_SLOT {
            PortRef::new(wid, POINT_SLOT, point_ports[&(wid.clone(), p.clone(), qi)])
        } else {
            PortRef::new(wid, &format!("{}_{}", p.slot, qi), p.port)
        }
    };
    for e in &d.edges {
        for qi in 0..qels.len() {
            let (pa, pb) = (lift(&e.a, qi), lift(&e.b, qi));
            let eid = format!("{}_{}", e.id, qi);
            map.edge_map.insert(eid.clone(), e.id.clone());
            map.port_map.insert(pa.clone(), e.a.clone());
            map.port_map.insert(pb.clone(), e.b.clone());
            cover.add_edge(&eid, pa, pb);
        }
    }
    Ok(TorsionFreeCover { cover, total_degree: map.total_degree, map, quotient_order: qels.len(), fiber_sizes })
}
