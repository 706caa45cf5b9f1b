//! Commensurability invariants and the surface and volume deciders.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::covers::CoveringMap;
use crate::measure::{euler, point_group_order, total_volume_by_atom, vertex_volume, MeasureError};
use crate::model::{AtomKind, Catalog, Descriptor};
use crate::rational::{int, ratio, zero, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("genus {0} is below 2")]
    Genus(i64),
    #[error("expected exactly two symmetric vertices in {0}, found {1}")]
    Shape(String, usize),
}

/// Isometry types of the symmetric vertex spaces, without multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QiClass {
    pub spaces: BTreeSet<String>,
    pub infinite_ended: bool,
}

impl fmt::Display for QiClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spaces: Vec<&str> = self.spaces.iter().map(String::as_str).collect();
        write!(f, "{{{}}}", spaces.join(","))?;
        if self.infinite_ended {
            write!(f, " infinite-ended")?;
        }
        Ok(())
    }
}

pub fn qi_class(d: &Descriptor, cat: &Catalog) -> Result<QiClass, InvariantError> {
    let mut spaces = BTreeSet::new();
    for v in &d.vertices {
        let atom = cat.atom(&v.atom).ok_or_else(|| MeasureError::UnknownAtom(v.atom.clone()))?;
        if let AtomKind::Symmetric { field, dim } = atom.kind {
            spaces.insert(format!("H^{dim}_{field}"));
        }
    }
    Ok(QiClass { spaces, infinite_ended: !d.edges.is_empty() || d.vertices.len() >= 2 })
}

/// l2-Betti numbers of the fundamental group of the graph of spaces.
///
/// Edge groups are trivial, so `b_k = sum_v b_k(G_v)` for `k >= 2` and
/// `b_1 = sum_v b_1(G_v) - sum_v b_0(G_v) + |E|` once the group is infinite. A finite vertex group
/// contributes `b_0 = 1/|G_v|`, a symmetric vertex `degree × profile`.
pub fn l2_betti(d: &Descriptor, cat: &Catalog) -> Result<Vec<Rational>, InvariantError> {
    let mut len = 2;
    let mut symmetric = 0usize;
    let mut torsion_vertices = 0usize;
    for v in &d.vertices {
        let atom = cat.atom(&v.atom).ok_or_else(|| MeasureError::UnknownAtom(v.atom.clone()))?;
        if !atom.is_point() {
            let profile = atom.l2_profile.as_ref().ok_or_else(|| MeasureError::MissingL2Profile(atom.id.clone()))?;
            len = len.max(profile.len());
            symmetric += 1;
        } else if point_group_order(v, cat)? > 1 {
            torsion_vertices += 1;
        }
    }
    let mut b = vec![zero(); len];
    let finite = symmetric == 0 && torsion_vertices <= 1 && d.graph_rank() == 0;
    if finite {
        let order = d.vertices.iter().map(|v| point_group_order(v, cat)).try_fold(1usize, |acc, o| o.map(|o| acc * o))?;
        b[0] = ratio(1, order as i64);
        return Ok(b);
    }
    for v in &d.vertices {
        let atom = cat.atom(&v.atom).expect("checked");
        if atom.is_point() {
            b[1] -= ratio(1, point_group_order(v, cat)? as i64);
        } else {
            let profile = atom.l2_profile.as_ref().expect("checked");
            for (k, x) in profile.iter().enumerate() {
                b[k] += x * int(v.degree as i64);
            }
        }
    }
    b[1] += int(d.edges.len() as i64);
    Ok(b)
}

#[derive(Debug, Clone)]
pub struct InvariantReport {
    pub qi: QiClass,
    pub euler: Option<Rational>,
    pub volume_by_atom: BTreeMap<String, Rational>,
    pub l2: Option<Vec<Rational>>,
    pub notes: Vec<String>,
}

pub fn invariants(d: &Descriptor, cat: &Catalog) -> Result<InvariantReport, InvariantError> {
    let mut notes = Vec::new();
    let euler = match euler(d, cat) {
        Ok(x) => Some(x),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let l2 = match l2_betti(d, cat) {
        Ok(x) => Some(x),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    Ok(InvariantReport { qi: qi_class(d, cat)?, euler, volume_by_atom: total_volume_by_atom(d, cat)?, l2, notes })
}

fn join(xs: &[Rational]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {}", "qi_class", self.qi)?;
        match &self.euler {
            Some(x) => writeln!(f, "{:<16} {}", "euler", x)?,
            None => writeln!(f, "{:<16} undefined", "euler")?,
        }
        for (t, v) in &self.volume_by_atom {
            writeln!(f, "{:<16} {}", format!("volume[{t}]"), v)?;
        }
        match &self.l2 {
            Some(b) => writeln!(f, "{:<16} ({})", "l2_betti", join(b))?,
            None => writeln!(f, "{:<16} undefined", "l2_betti")?,
        }
        for n in &self.notes {
            writeln!(f, "{:<16} {}", "note", n)?;
        }
        write!(f, "euler={}", self.euler.as_ref().map_or("undefined".to_string(), |x| x.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObstructionVerdict {
    QiMismatch { a: QiClass, b: QiClass },
    /// `ratio` is `vol_a[atom] / vol_b[atom]`; `reference` is the ratio of the first shared atom.
    CovolumeRatioMismatch { atom: String, ratio: Rational, reference: Rational },
    /// Ratios `b_k(a) / b_k(b)`; `None` stands for a zero denominator.
    L2RatioMismatch { k: usize, k_prime: usize, ratio_k: Option<Rational>, ratio_k_prime: Option<Rational> },
    NoObstructionFound,
}

impl ObstructionVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            ObstructionVerdict::QiMismatch { .. } => "qi-mismatch",
            ObstructionVerdict::CovolumeRatioMismatch { .. } => "covolume-ratio-mismatch",
            ObstructionVerdict::L2RatioMismatch { .. } => "l2-ratio-mismatch",
            ObstructionVerdict::NoObstructionFound => "no-obstruction-found",
        }
    }

    pub fn is_obstruction(&self) -> bool {
        !matches!(self, ObstructionVerdict::NoObstructionFound)
    }
}

fn show(r: &Option<Rational>) -> String {
    r.as_ref().map_or("inf".to_string(), |x| x.to_string())
}

impl fmt::Display for ObstructionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObstructionVerdict::QiMismatch { a, b } => {
                writeln!(f, "{:<16} {}", "qi_class_a", a)?;
                writeln!(f, "{:<16} {}", "qi_class_b", b)?;
            }
            ObstructionVerdict::CovolumeRatioMismatch { atom, ratio, reference } => {
                writeln!(f, "{:<16} {}", "atom", atom)?;
                writeln!(f, "{:<16} {}", "ratio", ratio)?;
                writeln!(f, "{:<16} {}", "reference", reference)?;
            }
            ObstructionVerdict::L2RatioMismatch { k, k_prime, ratio_k, ratio_k_prime } => {
                writeln!(f, "{:<16} {}", format!("ratio[b{k}]"), show(ratio_k))?;
                writeln!(f, "{:<16} {}", format!("ratio[b{k_prime}]"), show(ratio_k_prime))?;
            }
            ObstructionVerdict::NoObstructionFound => {}
        }
        write!(f, "verdict={}", self.kind())?;
        match self {
            ObstructionVerdict::CovolumeRatioMismatch { ratio, reference, .. } => {
                write!(f, "\nwitness={ratio}\nwitness={reference}")
            }
            ObstructionVerdict::L2RatioMismatch { ratio_k, ratio_k_prime, .. } => {
                write!(f, "\nwitness={}\nwitness={}", show(ratio_k), show(ratio_k_prime))
            }
            _ => Ok(()),
        }
    }
}

fn symmetric_volumes(d: &Descriptor, cat: &Catalog) -> Result<BTreeMap<String, Rational>, InvariantError> {
    let mut out = total_volume_by_atom(d, cat)?;
    out.retain(|t, _| cat.atom(t).is_some_and(|a| !a.is_point()));
    Ok(out)
}

/// First invariant that separates `a` from `b`: QI class, then per-atom covolume ratios of the
/// symmetric atoms present in both, then ratios of the nonvanishing l2-Betti numbers.
pub fn obstruction(a: &Descriptor, b: &Descriptor, cat: &Catalog) -> Result<ObstructionVerdict, InvariantError> {
    let (qa, qb) = (qi_class(a, cat)?, qi_class(b, cat)?);
    if qa != qb {
        return Ok(ObstructionVerdict::QiMismatch { a: qa, b: qb });
    }
    let (va, vb) = (symmetric_volumes(a, cat)?, symmetric_volumes(b, cat)?);
    let mut reference: Option<Rational> = None;
    for (t, x) in &va {
        let Some(y) = vb.get(t) else { continue };
        let r = x / y;
        match &reference {
            None => reference = Some(r),
            Some(r0) if *r0 != r => {
                return Ok(ObstructionVerdict::CovolumeRatioMismatch { atom: t.clone(), ratio: r, reference: r0.clone() })
            }
            Some(_) => {}
        }
    }
    if let (Ok(ba), Ok(bb)) = (l2_betti(a, cat), l2_betti(b, cat)) {
        let len = ba.len().max(bb.len());
        let get = |v: &Vec<Rational>, k: usize| v.get(k).cloned().unwrap_or_else(zero);
        let mut first: Option<(usize, Option<Rational>)> = None;
        for k in 0..len {
            let (x, y) = (get(&ba, k), get(&bb, k));
            if x == zero() && y == zero() {
                continue;
            }
            let r = if y == zero() { None } else { Some(&x / &y) };
            match &first {
                None => first = Some((k, r)),
                Some((k0, r0)) if *r0 != r => {
                    return Ok(ObstructionVerdict::L2RatioMismatch { k: *k0, k_prime: k, ratio_k: r0.clone(), ratio_k_prime: r })
                }
                Some(_) => {}
            }
        }
    }
    Ok(ObstructionVerdict::NoObstructionFound)
}

fn check_genera(gs: &[i64]) -> Result<(), InvariantError> {
    match gs.iter().find(|&&g| g < 2) {
        Some(&g) => Err(InvariantError::Genus(g)),
        None => Ok(()),
    }
}

/// Abstract commensurability of `S_{g1} * S_{g2}` and `S_{h1} * S_{h2}`.
pub fn whyte_decider(g1: i64, g2: i64, h1: i64, h2: i64) -> Result<bool, InvariantError> {
    check_genera(&[g1, g2, h1, h2])?;
    Ok(g1 + g2 == h1 + h2)
}

/// Common model geometry for the same pair of free products: the genera agree as multisets.
pub fn surface_rigidity_decider(g1: i64, g2: i64, h1: i64, h2: i64) -> Result<bool, InvariantError> {
    check_genera(&[g1, g2, h1, h2])?;
    let (mut x, mut y) = ([g1, g2], [h1, h2]);
    x.sort_unstable();
    y.sort_unstable();
    Ok(x == y)
}

fn factor_volumes(d: &Descriptor, cat: &Catalog) -> Result<[Rational; 2], InvariantError> {
    let mut vols = Vec::new();
    for v in &d.vertices {
        if cat.atom(&v.atom).is_some_and(|a| !a.is_point()) {
            vols.push(vertex_volume(v, cat)?);
        }
    }
    if vols.len() != 2 {
        return Err(InvariantError::Shape(d.id.clone(), vols.len()));
    }
    vols.sort();
    Ok([vols[0].clone(), vols[1].clone()])
}

/// Necessary condition for a common model geometry of two-factor free products of closed
/// manifolds: the factor volumes agree after possibly swapping the factors.
pub fn volume_matching_decider(a: &Descriptor, b: &Descriptor, cat: &Catalog) -> Result<bool, InvariantError> {
    Ok(factor_volumes(a, cat)? == factor_volumes(b, cat)?)
}

/// Multiset comparison of explicit volume pairs.
pub fn volume_pairs_match(a: [Rational; 2], b: [Rational; 2]) -> bool {
    let (mut a, mut b) = (a, b);
    a.sort();
    b.sort();
    a == b
}

#[derive(Debug, Clone)]
pub struct Claim1Report {
    pub degree: u64,
    /// `(atom, source volume, target volume)`
    pub lines: Vec<(String, Rational, Rational)>,
    pub violations: Vec<String>,
}

impl Claim1Report {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Claim1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {}", "degree", self.degree)?;
        for (t, s, x) in &self.lines {
            writeln!(f, "{:<16} {} / {}", format!("index[{t}]"), s, x)?;
        }
        for v in &self.violations {
            writeln!(f, "{:<16} {}", "violation", v)?;
        }
        write!(f, "verdict={}", if self.is_ok() { "ok" } else { "violated" })
    }
}

/// Checks `N = vol(source)[t] / vol(target)[t]` for every atom, and `N · χ(target) = χ(source)`.
pub fn claim1_index_check(
    m: &CoveringMap,
    source: &Descriptor,
    target: &Descriptor,
    cat: &Catalog,
) -> Result<Claim1Report, InvariantError> {
    let n = int(m.total_degree as i64);
    let vs = total_volume_by_atom(source, cat)?;
    let vt = total_volume_by_atom(target, cat)?;
    let mut lines = Vec::new();
    let mut violations = Vec::new();
    let atoms: BTreeSet<&String> = vs.keys().chain(vt.keys()).collect();
    for t in atoms {
        let s = vs.get(t).cloned().unwrap_or_else(zero);
        let x = vt.get(t).cloned().unwrap_or_else(zero);
        if s != &n * &x {
            violations.push(format!("atom {t}: {s} ≠ {n} × {x}"));
        }
        lines.push((t.clone(), s, x));
    }
    if let (Ok(es), Ok(et)) = (euler(source, cat), euler(target, cat)) {
        if es != &n * &et {
            violations.push(format!("euler: {es} ≠ {n} × {et}"));
        }
    }
    Ok(Claim1Report { degree: m.total_degree, lines, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build;
    use crate::model::{AtomType, Field, VertexInstance};
    use crate::rational::alternating_sum;

    #[test]
    fn surface_free_product_invariants() {
        let (cat, d) = build::surface_free_product(&[2, 4]);
        let q = qi_class(&d, &cat).unwrap();
        assert_eq!(q.spaces.len(), 1);
        assert!(q.infinite_ended);
        let b = l2_betti(&d, &cat).unwrap();
        assert_eq!(b, vec![int(0), int(9), int(0)]);
        assert_eq!(alternating_sum(&b), euler(&d, &cat).unwrap());
    }

    #[test]
    fn single_surface_profile() {
        let cat = build::surface_catalog(&[2]);
        let mut d = Descriptor::new("s", &cat.id);
        d.add_vertex(VertexInstance::new("f", "g2", 1).with_slot("x1", "x"));
        assert_eq!(l2_betti(&d, &cat).unwrap(), vec![int(0), int(2), int(0)]);
        assert!(!qi_class(&d, &cat).unwrap().infinite_ended);
    }

    #[test]
    fn two_genus_two_surfaces() {
        let (cat, d) = build::surface_free_product(&[2, 2]);
        assert_eq!(l2_betti(&d, &cat).unwrap(), vec![int(0), int(5), int(0)]);
        assert_eq!(euler(&d, &cat).unwrap(), int(-5));
    }

    #[test]
    fn manifold_free_z() {
        let cat = Catalog::new("m").with_atom(build::four_manifold_atom("m2", 2)).with_atom(AtomType::point("pt"));
        let d = build::manifold_free_z(&cat, "m2");
        let b = l2_betti(&d, &cat).unwrap();
        assert_eq!(b, vec![int(0), int(1), int(2), int(0), int(0)]);
        assert_eq!(euler(&d, &cat).unwrap(), int(1));
    }

    #[test]
    fn l2_ratio_mismatch() {
        let cat = Catalog::new("m")
            .with_atom(build::four_manifold_atom("m2", 2))
            .with_atom(build::four_manifold_atom("m4", 4))
            .with_atom(AtomType::point("pt"));
        let a = build::manifold_free_z(&cat, "m2");
        let mut b = build::manifold_free_z(&cat, "m4");
        b.id = "b".into();
        let v = obstruction(&a, &b, &cat).unwrap();
        assert_eq!(
            v,
            ObstructionVerdict::L2RatioMismatch { k: 1, k_prime: 2, ratio_k: Some(int(1)), ratio_k_prime: Some(ratio(1, 2)) }
        );
        let back = obstruction(&b, &a, &cat).unwrap();
        assert_eq!(
            back,
            ObstructionVerdict::L2RatioMismatch { k: 1, k_prime: 2, ratio_k: Some(int(1)), ratio_k_prime: Some(int(2)) }
        );
    }

    fn two_atoms(vols_a: [i64; 2], vols_b: [i64; 2]) -> (Catalog, Descriptor, Descriptor) {
        let t1 = AtomType::symmetric("t1", Field::R, 3, int(1)).with_peg("x", 1);
        let t2 = AtomType::symmetric("t2", Field::C, 2, int(1)).with_peg("x", 1).with_euler(int(1));
        let cat = Catalog::new("c").with_atom(t1).with_atom(t2);
        let make = |id: &str, vols: [i64; 2]| {
            let mut d = Descriptor::new(id, "c");
            let mut v1 = VertexInstance::new("u", "t1", vols[0] as u64);
            for k in 1..=vols[0] {
                v1 = v1.with_slot(&format!("x{k}"), "x");
            }
            let mut v2 = VertexInstance::new("w", "t2", vols[1] as u64);
            for k in 1..=vols[1] {
                v2 = v2.with_slot(&format!("x{k}"), "x");
            }
            d.add_vertex(v1);
            d.add_vertex(v2);
            d
        };
        (cat.clone(), make("a", vols_a), make("b", vols_b))
    }

    #[test]
    fn covolume_ratios() {
        let (cat, a, b) = two_atoms([2, 3], [4, 6]);
        assert_eq!(obstruction(&a, &b, &cat).unwrap(), ObstructionVerdict::NoObstructionFound);
        let (cat, a, b) = two_atoms([2, 3], [4, 5]);
        assert_eq!(
            obstruction(&a, &b, &cat).unwrap(),
            ObstructionVerdict::CovolumeRatioMismatch { atom: "t2".into(), ratio: ratio(3, 5), reference: ratio(1, 2) }
        );
    }

    #[test]
    fn surface_deciders() {
        assert!(whyte_decider(2, 4, 3, 3).unwrap());
        assert!(!surface_rigidity_decider(2, 4, 3, 3).unwrap());
        assert!(!whyte_decider(2, 2, 2, 3).unwrap());
        assert!(surface_rigidity_decider(2, 4, 4, 2).unwrap());
        assert!(surface_rigidity_decider(3, 3, 3, 3).unwrap());
        assert_eq!(whyte_decider(1, 4, 3, 3), Err(InvariantError::Genus(1)));
    }

    #[test]
    fn volume_pairs() {
        assert!(volume_pairs_match([int(5), int(7)], [int(7), int(5)]));
        assert!(!volume_pairs_match([int(5), int(7)], [int(5), int(8)]));
    }

    #[test]
    fn all_points_class() {
        let (cat, d) = build::point_cycle(3);
        let q = qi_class(&d, &cat).unwrap();
        assert!(q.spaces.is_empty() && q.infinite_ended);
        assert_eq!(alternating_sum(&l2_betti(&d, &cat).unwrap()), euler(&d, &cat).unwrap());
    }

    #[test]
    fn claim1_on_identity() {
        let (cat, d) = build::surface_free_product(&[2, 3]);
        let r = claim1_index_check(&CoveringMap::identity(&d), &d, &d, &cat).unwrap();
        assert!(r.is_ok(), "{r}");
    }
}
