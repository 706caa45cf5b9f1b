//! Constructors for frequently used catalogs and descriptors.

use crate::model::{AtomType, Catalog, Descriptor, Field, PortRef, VertexInstance, POINT_SLOT};
use crate::rational::int;

pub fn point_catalog() -> Catalog {
    Catalog::new("pts").with_atom(AtomType::point("pt")).with_atom(AtomType::point("pt2"))
}

/// Descriptor over point atoms. Ports at each vertex are numbered in edge order.
pub fn point_graph(id: &str, cat: &str, atoms: &[&str], edges: &[(usize, usize)]) -> Descriptor {
    let mut d = Descriptor::new(id, cat);
    for (i, a) in atoms.iter().enumerate() {
        d.add_vertex(VertexInstance::new(&format!("v{i}"), a, 1));
    }
    let mut next = vec![1u32; atoms.len()];
    for (k, &(x, y)) in edges.iter().enumerate() {
        let px = next[x];
        next[x] += 1;
        let py = next[y];
        next[y] += 1;
        d.add_edge(
            &format!("e{k}"),
            PortRef::new(&format!("v{x}"), POINT_SLOT, px),
            PortRef::new(&format!("v{y}"), POINT_SLOT, py),
        );
    }
    d
}

/// The n-cycle of points; `n = 1` is a single loop.
pub fn point_cycle(n: usize) -> (Catalog, Descriptor) {
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let atoms = vec!["pt"; n];
    (point_catalog(), point_graph(&format!("cycle{n}"), "pts", &atoms, &edges))
}

pub fn point_path(n: usize) -> (Catalog, Descriptor) {
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let atoms = vec!["pt"; n];
    (point_catalog(), point_graph(&format!("path{n}"), "pts", &atoms, &edges))
}

pub fn k4() -> Descriptor {
    let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    point_graph("k4", "pts", &["pt"; 4], &edges)
}

pub fn k33() -> Descriptor {
    let edges = [(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)];
    point_graph("k33", "pts", &["pt"; 6], &edges)
}

/// Triangular prism: 6 vertices, 3-regular, not bipartite.
pub fn prism() -> Descriptor {
    let edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)];
    point_graph("prism", "pts", &["pt"; 6], &edges)
}

pub fn theta() -> Descriptor {
    point_graph("theta", "pts", &["pt"; 2], &[(0, 1), (0, 1), (0, 1)])
}

/// Closed surface atom of genus `g` with one marked point.
pub fn surface_atom(g: i64) -> AtomType {
    AtomType::symmetric(&format!("g{g}"), Field::R, 2, int(2 * g - 2))
        .with_euler(int(2 - 2 * g))
        .with_l2(vec![int(0), int(2 * g - 2), int(0)])
        .with_peg("x", 1)
}

pub fn surface_catalog(genera: &[i64]) -> Catalog {
    let mut cat = Catalog::new("surf");
    for &g in genera {
        cat = cat.with_atom(surface_atom(g));
    }
    cat.with_atom(AtomType::point("pt"))
}

/// Free product of closed surfaces. Two factors are joined directly, more go through a point hub.
pub fn surface_free_product(genera: &[i64]) -> (Catalog, Descriptor) {
    let cat = surface_catalog(genera);
    let name: Vec<String> = genera.iter().map(|g| g.to_string()).collect();
    let mut d = Descriptor::new(&format!("s{}", name.join("_")), &cat.id);
    for (i, &g) in genera.iter().enumerate() {
        d.add_vertex(VertexInstance::new(&format!("f{i}"), &format!("g{g}"), 1).with_slot("x1", "x"));
    }
    if genera.len() == 2 {
        d.add_edge("e0", PortRef::new("f0", "x1", 1), PortRef::new("f1", "x1", 1));
    } else if genera.len() > 2 {
        d.add_vertex(VertexInstance::new("hub", "pt", 1));
        for i in 0..genera.len() {
            d.add_edge(
                &format!("e{i}"),
                PortRef::new(&format!("f{i}"), "x1", 1),
                PortRef::new("hub", POINT_SLOT, i as u32 + 1),
            );
        }
    }
    (cat, d)
}

/// Atom for a closed hyperbolic 4-manifold with Euler characteristic `chi`.
pub fn four_manifold_atom(id: &str, chi: i64) -> AtomType {
    AtomType::symmetric(id, Field::R, 4, int(chi))
        .with_euler(int(chi))
        .with_l2(vec![int(0), int(0), int(chi), int(0), int(0)])
        .with_peg("x", 1)
}

/// `pi_1(M) * Z`: one manifold vertex attached to a point carrying a loop.
pub fn manifold_free_z(cat: &Catalog, atom: &str) -> Descriptor {
    let mut d = Descriptor::new(&format!("{atom}_z"), &cat.id);
    d.add_vertex(VertexInstance::new("m", atom, 1).with_slot("x1", "x"));
    d.add_vertex(VertexInstance::new("p", "pt", 1));
    d.add_edge("e0", PortRef::new("m", "x1", 1), PortRef::new("p", POINT_SLOT, 1));
    d.add_edge("e1", PortRef::new("p", POINT_SLOT, 2), PortRef::new("p", POINT_SLOT, 3));
    d
}

/// Cycle of `n` vertices of one symmetric atom with a single peg of one end, degree 1 each.
///
/// The atom needs a peg `x` with `ends = 2`; each vertex uses both ports of its slot.
pub fn symmetric_cycle(cat: &Catalog, atom: &str, n: usize) -> Descriptor {
    let mut d = Descriptor::new(&format!("{atom}_cycle{n}"), &cat.id);
    for i in 0..n {
        d.add_vertex(VertexInstance::new(&format!("v{i}"), atom, 1).with_slot("x1", "x"));
    }
    for i in 0..n {
        d.add_edge(
            &format!("e{i}"),
            PortRef::new(&format!("v{i}"), "x1", 2),
            PortRef::new(&format!("v{}", (i + 1) % n), "x1", 1),
        );
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate;

    #[test]
    fn builders_validate() {
        let cat = point_catalog();
        for d in [point_cycle(1).1, point_cycle(4).1, point_path(3).1, k4(), k33(), prism(), theta()] {
            assert!(validate(&d, &cat).is_ok(), "{}: {}", d.id, validate(&d, &cat));
        }
        for g in [vec![2, 4], vec![3, 3], vec![2, 2, 2]] {
            let (cat, d) = surface_free_product(&g);
            assert!(validate(&d, &cat).is_ok());
        }
        let cat = Catalog::new("m").with_atom(four_manifold_atom("m2", 2)).with_atom(AtomType::point("pt"));
        assert!(validate(&manifold_free_z(&cat, "m2"), &cat).is_ok());
        let mut ring = surface_atom(2);
        ring.pegs[0].ends = 2;
        let cat = Catalog::new("c").with_atom(ring);
        assert!(validate(&symmetric_cycle(&cat, "g2", 3), &cat).is_ok());
    }
}
