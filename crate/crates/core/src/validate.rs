//! Structural validation of descriptors against their catalog.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{Catalog, Descriptor, Layout, LocalSymmetryDatum, POINT_SLOT};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        Ok(())
    }
}

pub fn validate(d: &Descriptor, cat: &Catalog) -> ValidationReport {
    let mut report = ValidationReport::default();
    if d.catalog != cat.id {
        report.push(format!("catalog mismatch: {} refers to {}, have {}", d.id, d.catalog, cat.id));
    }
    if d.vertices.is_empty() {
        report.push("descriptor has no vertices");
        return report;
    }
    let mut vids = BTreeSet::new();
    let mut datums: BTreeMap<String, LocalSymmetryDatum> = BTreeMap::new();
    for v in &d.vertices {
        if !vids.insert(v.id.as_str()) {
            report.push(format!("duplicate vertex id {}", v.id));
        }
        let Some(atom) = cat.atom(&v.atom) else {
            report.push(format!("vertex {}: unknown atom {}", v.id, v.atom));
            continue;
        };
        if v.degree == 0 {
            report.push(format!("vertex {}: degree must be positive", v.id));
        }
        if atom.is_point() {
            if v.degree != 1 {
                report.push(format!("vertex {}: point vertices have degree 1", v.id));
            }
            if !v.slots.is_empty() {
                report.push(format!("vertex {}: point vertices have no slots", v.id));
            }
        } else {
            for peg in &atom.pegs {
                let count = v.slots.iter().filter(|(_, p)| *p == peg.id).count() as u64;
                if count != v.degree {
                    report.push(format!(
                        "vertex {}: slot count ≠ degree for peg {} ({} slots, degree {})",
                        v.id, peg.id, count, v.degree
                    ));
                }
            }
            let mut sids = BTreeSet::new();
            for (sid, peg) in &v.slots {
                if sid == POINT_SLOT {
                    report.push(format!("vertex {}: slot id @ is reserved", v.id));
                }
                if !sids.insert(sid.as_str()) {
                    report.push(format!("vertex {}: duplicate slot {}", v.id, sid));
                }
                if atom.peg(peg).is_none() {
                    report.push(format!("vertex {}: unknown peg {}", v.id, peg));
                }
            }
        }
        if let Some(gid) = &v.group {
            match cat.groups.get(gid) {
                None => report.push(format!("vertex {}: unknown group {}", v.id, gid)),
                Some(decl) => match decl.build() {
                    Err(e) => report.push(format!("vertex {}: group {}: {e}", v.id, gid)),
                    Ok(datum) => {
                        if let Some(sub) = &v.sub {
                            match datum.marked.get(sub) {
                                None => report.push(format!("vertex {}: unknown subgroup {}", v.id, sub)),
                                Some(h) => {
                                    if !atom.is_point() && h.index_in(&datum.group) as u64 != v.degree {
                                        report.push(format!(
                                            "vertex {}: subgroup index {} ≠ degree {}",
                                            v.id,
                                            h.index_in(&datum.group),
                                            v.degree
                                        ));
                                    }
                                }
                            }
                        }
                        datums.insert(v.id.clone(), datum);
                    }
                },
            }
        } else if v.sub.is_some() {
            report.push(format!("vertex {}: sub given without group", v.id));
        }
    }
    let mut eids = BTreeSet::new();
    for e in &d.edges {
        if !eids.insert(e.id.as_str()) {
            report.push(format!("duplicate edge id {}", e.id));
        }
        if e.a == e.b {
            report.push(format!("edge {}: both ends use the same port", e.id));
        }
        for pr in [&e.a, &e.b] {
            let Some(v) = d.vertex(&pr.vertex) else {
                report.push(format!("edge {}: unknown vertex {}", e.id, pr.vertex));
                continue;
            };
            let Some(atom) = cat.atom(&v.atom) else { continue };
            if atom.is_point() {
                if pr.slot != POINT_SLOT {
                    report.push(format!("edge {}: point vertex {} uses slot @", e.id, v.id));
                }
                if pr.port == 0 {
                    report.push(format!("edge {}: port out of range at {}", e.id, pr));
                }
            } else {
                match v.slots.iter().find(|(s, _)| *s == pr.slot) {
                    None => report.push(format!("edge {}: unknown slot {}.{}", e.id, v.id, pr.slot)),
                    Some((_, peg)) => {
                        if let Some(pc) = atom.peg(peg) {
                            if pr.port == 0 || pr.port > pc.ends {
                                report.push(format!("edge {}: port out of range at {}", e.id, pr));
                            }
                        }
                    }
                }
            }
        }
    }
    if !report.is_ok() {
        return report;
    }
    // port usage
    let mut used: BTreeMap<(String, String, u32), usize> = BTreeMap::new();
    for e in &d.edges {
        for pr in [&e.a, &e.b] {
            *used.entry((pr.vertex.clone(), pr.slot.clone(), pr.port)).or_default() += 1;
        }
    }
    for ((v, s, p), count) in &used {
        if *count > 1 {
            report.push(format!("port {v}.{s}.{p} used by {count} edge ends"));
        }
    }
    for v in &d.vertices {
        let atom = cat.atom(&v.atom).expect("checked above");
        for (sid, peg) in &v.slots {
            let ends = atom.peg(peg).map_or(0, |p| p.ends);
            let used_here: Vec<u32> =
                (1..=ends).filter(|p| used.contains_key(&(v.id.clone(), sid.clone(), *p))).collect();
            for port in 1..=ends {
                if used_here.contains(&port) {
                    continue;
                }
                let covered = datums.get(&v.id).is_some_and(|datum| {
                    datum.ends == ends as usize
                        && datum
                            .end_orbit(port as usize - 1)
                            .iter()
                            .any(|&o| used_here.contains(&(o as u32 + 1)))
                });
                if !covered {
                    report.push(format!("unused port {}.{}.{}", v.id, sid, port));
                }
            }
        }
    }
    match Layout::new(d, cat) {
        Ok(layout) => {
            if !layout.is_connected() {
                report.push("not connected");
            }
        }
        Err(e) => report.push(e.0),
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build;
    use crate::model::{PortRef, VertexInstance};

    #[test]
    fn valid_cycle_is_clean() {
        let (cat, d) = build::point_cycle(3);
        assert!(validate(&d, &cat).is_ok());
    }

    #[test]
    fn slot_count_violation() {
        let cat = build::surface_catalog(&[2]);
        let mut d = crate::model::Descriptor::new("d", &cat.id);
        d.add_vertex(VertexInstance::new("v", "g2", 2).with_slot("x1", "x"));
        let r = validate(&d, &cat);
        assert!(r.contains("slot count ≠ degree"), "{r}");
    }

    #[test]
    fn disconnected_violation() {
        let (cat, mut d) = build::point_cycle(3);
        let (_, other) = build::point_cycle(2);
        for v in other.vertices {
            d.add_vertex(VertexInstance { id: format!("w{}", v.id), ..v });
        }
        for e in other.edges {
            let re = |p: &PortRef| PortRef::new(&format!("w{}", p.vertex), &p.slot, p.port);
            d.add_edge(&format!("f{}", e.id), re(&e.a), re(&e.b));
        }
        let r = validate(&d, &cat);
        assert!(r.contains("not connected"), "{r}");
    }

    #[test]
    fn port_out_of_range() {
        let cat = build::surface_catalog(&[2]);
        let mut d = crate::model::Descriptor::new("d", &cat.id);
        d.add_vertex(VertexInstance::new("v", "g2", 1).with_slot("x1", "x"));
        d.add_vertex(VertexInstance::new("w", "g2", 1).with_slot("x1", "x"));
        d.add_edge("e", PortRef::new("v", "x1", 1), PortRef::new("w", "x1", 3));
        assert!(validate(&d, &cat).contains("port out of range"));
    }
}
