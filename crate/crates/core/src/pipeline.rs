//! End-to-end commensuration: vertex-space alignment, torsion-free covers, the shared tree check
//! and a common finite cover, packaged as a certificate that can be re-checked on its own.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::covers::{compose, verify_cover, CoveringMap};
use crate::format::{Document, Record};
use crate::invariants::claim1_index_check;
use crate::leighton::{common_cover, ExhaustedReport, LeightonError, Search, SearchBudget};
use crate::measure::{euler, total_volume_by_atom};
use crate::model::{AtomType, Catalog, Descriptor, Field, GroupDecl, PortRef, VertexInstance};
use crate::permgrp::{intersect_all, normal_core, torsion_free_cover, GraphOfFiniteGroups, GroupError, Perm, PermGroup};
use crate::rational::{int, parse_rational, zero, Rational};
use crate::treespace::{expand_torsion, same_ideal_geometry, Distinction, Equivalence};
use crate::validate::validate;

#[derive(Debug, Clone)]
pub enum FailureReason {
    SignatureMismatch(Distinction),
    Exhausted(ExhaustedReport),
    CapExceeded(String),
    MissingGroupData(String),
    Invalid(String),
}

impl FailureReason {
    pub fn kind(&self) -> &'static str {
        match self {
            FailureReason::SignatureMismatch(_) => "signature-mismatch",
            FailureReason::Exhausted(_) => "exhausted",
            FailureReason::CapExceeded(_) => "cap-exceeded",
            FailureReason::MissingGroupData(_) => "missing-group-data",
            FailureReason::Invalid(_) => "invalid-input",
        }
    }
}

/// Stage 0 is input validation.
#[derive(Debug, Clone)]
pub struct Failure {
    pub stage: u8,
    pub reason: FailureReason,
}

impl Failure {
    fn new(stage: u8, reason: FailureReason) -> Self {
        Failure { stage, reason }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "failure stage={} reason={}", self.stage, self.reason.kind())?;
        match &self.reason {
            FailureReason::SignatureMismatch(d) => {
                write!(f, "radius={} side={} example={}", d.radius, d.side, d.example.replace(' ', "="))
            }
            FailureReason::Exhausted(r) => write!(f, "{r}"),
            FailureReason::CapExceeded(s) | FailureReason::MissingGroupData(s) | FailureReason::Invalid(s) => {
                write!(f, "detail: {s}")
            }
        }
    }
}

impl std::error::Error for Failure {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomAlignment {
    pub atom: String,
    pub degree: u64,
    /// `[K : core]` when a group with marked subgroups sits on a vertex of this atom.
    pub core_index: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stage1 {
    pub atoms: Vec<AtomAlignment>,
    /// `(side, vertex, lift degree)`, side `'a'` or `'b'`.
    pub lifts: Vec<(char, String, u64)>,
}

impl Stage1 {
    pub fn degree(&self, atom: &str) -> Option<u64> {
        self.atoms.iter().find(|a| a.atom == atom).map(|a| a.degree)
    }
}

fn group_failure(stage: u8, e: GroupError) -> Failure {
    match e {
        GroupError::CapExceeded { .. } => Failure::new(stage, FailureReason::CapExceeded(e.to_string())),
        other => Failure::new(stage, FailureReason::Invalid(other.to_string())),
    }
}

/// Common vertex-space degree per atom and the lift each vertex needs to reach it.
///
/// An atom whose symmetric vertices carry a group `K` uses `[K : core(∩ marked)]`; the lcm with
/// the vertex degrees is taken so every lift is integral. Otherwise the lcm of the degrees.
pub fn align_vertex_spaces(a: &Descriptor, b: &Descriptor, cat: &Catalog) -> Result<Stage1, Failure> {
    let mut common: BTreeMap<String, (u64, Option<u64>)> = BTreeMap::new();
    for v in a.vertices.iter().chain(&b.vertices) {
        let atom = cat.atom(&v.atom).ok_or_else(|| Failure::new(1, FailureReason::Invalid(format!("unknown atom {}", v.atom))))?;
        let entry = common.entry(v.atom.clone()).or_insert((1, None));
        entry.0 = entry.0.lcm(&v.degree.max(1));
        if atom.is_point() {
            continue;
        }
        let Some(gid) = &v.group else { continue };
        let decl = cat.groups.get(gid).ok_or_else(|| Failure::new(1, FailureReason::Invalid(format!("unknown group {gid}"))))?;
        let datum = decl.build().map_err(|e| group_failure(1, e))?;
        let marked: Vec<PermGroup> = datum.marked.values().cloned().collect();
        let meet = intersect_all(&datum.group, &marked).map_err(|e| group_failure(1, e))?;
        let core = normal_core(&datum.group, &meet).map_err(|e| group_failure(1, e))?;
        let index = core.index_in(&datum.group) as u64;
        entry.0 = entry.0.lcm(&index);
        entry.1 = Some(entry.1.map_or(index, |i: u64| i.lcm(&index)));
    }
    let atoms = common.iter().map(|(t, &(degree, core_index))| AtomAlignment { atom: t.clone(), degree, core_index }).collect();
    let mut lifts = Vec::new();
    for (side, d) in [('a', a), ('b', b)] {
        for v in &d.vertices {
            let (degree, _) = common[&v.atom];
            lifts.push((side, v.id.clone(), degree / v.degree.max(1)));
        }
    }
    Ok(Stage1 { atoms, lifts })
}

/// Torsion-free cover of `d` when point vertices carry groups, the identity otherwise.
pub fn torsion_free_stage(d: &Descriptor, cat: &Catalog) -> Result<(Descriptor, CoveringMap), Failure> {
    let mut groups = BTreeMap::new();
    for v in &d.vertices {
        let Some(gid) = &v.group else { continue };
        let atom = cat.atom(&v.atom).ok_or_else(|| Failure::new(2, FailureReason::Invalid(format!("unknown atom {}", v.atom))))?;
        let decl = cat.groups.get(gid).ok_or_else(|| Failure::new(2, FailureReason::Invalid(format!("unknown group {gid}"))))?;
        let datum = decl.build().map_err(|e| group_failure(2, e))?;
        if atom.is_point() {
            if !datum.group.is_trivial() {
                groups.insert(v.id.clone(), datum.group);
            }
        } else if datum.acts_on_ends() {
            return Err(Failure::new(
                2,
                FailureReason::MissingGroupData(format!(
                    "group {gid} permutes edge ends at {}.{}; no finite torsion-free cover is available from local data",
                    d.id, v.id
                )),
            ));
        }
    }
    if groups.is_empty() {
        return Ok((d.clone(), CoveringMap::identity(d)));
    }
    let g = GraphOfFiniteGroups { shadow: d.clone(), groups };
    let t = torsion_free_cover(&g, &format!("{}_tf", d.id)).map_err(|e| group_failure(2, e))?;
    Ok((t.cover, t.map))
}

/// Everything needed to re-check a commensuration of `a` and `b` without rerunning the search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub catalog: Catalog,
    pub a: Descriptor,
    pub b: Descriptor,
    pub stage1: Stage1,
    pub a_hat: Descriptor,
    pub b_hat: Descriptor,
    /// `â -> a` and `b̂ -> b`.
    pub a_map: CoveringMap,
    pub b_map: CoveringMap,
    pub signature: String,
    pub round: usize,
    pub c: Descriptor,
    /// `c -> â` and `c -> b̂`.
    pub p: CoveringMap,
    pub q: CoveringMap,
    pub degrees: (u64, u64),
    pub ladder: String,
    /// `c -> a` and `c -> b`.
    pub to_a: CoveringMap,
    pub to_b: CoveringMap,
    pub indices: (u64, u64),
    /// `(atom, vol(c), N_a · vol(a), N_b · vol(b))`
    pub volumes: Vec<(String, Rational, Rational, Rational)>,
    pub euler: (Rational, Rational, Rational),
}

fn volume_lines(
    c: &Descriptor,
    a: &Descriptor,
    b: &Descriptor,
    na: u64,
    nb: u64,
    cat: &Catalog,
) -> Result<Vec<(String, Rational, Rational, Rational)>, String> {
    let vc = total_volume_by_atom(c, cat).map_err(|e| e.to_string())?;
    let va = total_volume_by_atom(a, cat).map_err(|e| e.to_string())?;
    let vb = total_volume_by_atom(b, cat).map_err(|e| e.to_string())?;
    let atoms: BTreeSet<&String> = vc.keys().chain(va.keys()).chain(vb.keys()).collect();
    let (ra, rb) = (int(na as i64), int(nb as i64));
    Ok(atoms
        .into_iter()
        .map(|t| {
            let get = |m: &BTreeMap<String, Rational>| m.get(t).cloned().unwrap_or_else(zero);
            (t.clone(), get(&vc), &ra * get(&va), &rb * get(&vb))
        })
        .collect())
}

fn euler_triple(
    c: &Descriptor,
    a: &Descriptor,
    b: &Descriptor,
    na: u64,
    nb: u64,
    cat: &Catalog,
) -> Result<(Rational, Rational, Rational), String> {
    let e = |d: &Descriptor| euler(d, cat).map_err(|e| e.to_string());
    Ok((e(c)?, int(na as i64) * e(a)?, int(nb as i64) * e(b)?))
}

/// Runs all four stages.
pub fn commensurate(a: &Descriptor, b: &Descriptor, cat: &Catalog, budget: &SearchBudget) -> Result<Certificate, Failure> {
    for d in [a, b] {
        let r = validate(d, cat);
        if !r.is_ok() {
            return Err(Failure::new(0, FailureReason::Invalid(format!("{}: {}", d.id, r))));
        }
    }
    let stage1 = align_vertex_spaces(a, b, cat)?;
    let (a_hat, a_map) = torsion_free_stage(a, cat)?;
    let (b_hat, b_map) = torsion_free_stage(b, cat)?;
    let invalid = |stage: u8, e: &dyn fmt::Display| Failure::new(stage, FailureReason::Invalid(e.to_string()));
    let shared = match same_ideal_geometry(&a_hat, &b_hat, cat).map_err(|e| invalid(3, &e))? {
        Equivalence::Yes(s) => s,
        Equivalence::No(d) => return Err(Failure::new(3, FailureReason::SignatureMismatch(d))),
    };
    let cc = match common_cover(&a_hat, &b_hat, cat, budget) {
        Ok(Search::Found(cc)) => *cc,
        Ok(Search::Exhausted(r)) => return Err(Failure::new(4, FailureReason::Exhausted(r))),
        Err(LeightonError::SignatureMismatch(d)) => return Err(Failure::new(3, FailureReason::SignatureMismatch(d))),
        Err(e) => return Err(invalid(4, &e)),
    };
    let to_a = compose(&cc.p, &a_map).map_err(|e| invalid(4, &e))?;
    let to_b = compose(&cc.q, &b_map).map_err(|e| invalid(4, &e))?;
    let indices = (to_a.total_degree, to_b.total_degree);
    let volumes = volume_lines(&cc.c, a, b, indices.0, indices.1, cat).map_err(|e| invalid(4, &e))?;
    let euler = euler_triple(&cc.c, a, b, indices.0, indices.1, cat).map_err(|e| invalid(4, &e))?;
    let mut ladder = String::new();
    for r in &cc.ladder {
        ladder.push_str(&format!("{}x{}:{},", r.degrees.0, r.degrees.1, r.outcome));
    }
    ladder.pop();
    Ok(Certificate {
        catalog: cat.clone(),
        a: a.clone(),
        b: b.clone(),
        stage1,
        a_hat,
        b_hat,
        a_map,
        b_map,
        signature: format!("{:016x}", shared.hash),
        round: shared.round,
        degrees: cc.degrees,
        c: cc.c,
        p: cc.p,
        q: cc.q,
        ladder,
        to_a,
        to_b,
        indices,
        volumes,
        euler,
    })
}

impl Certificate {
    pub fn to_document(&self) -> Document {
        let mut descriptors: Vec<Descriptor> = Vec::new();
        for d in [&self.a, &self.b, &self.a_hat, &self.b_hat, &self.c] {
            if descriptors.iter().all(|x| x.id != d.id) {
                descriptors.push(d.clone());
            }
        }
        let mut covers: Vec<CoveringMap> = Vec::new();
        for m in [&self.a_map, &self.b_map, &self.p, &self.q, &self.to_a, &self.to_b] {
            if covers.iter().all(|x| x.id != m.id) {
                covers.push(m.clone());
            }
        }
        let mut records = vec![Record::new(
            "certificate",
            vec![
                format!("a={}", self.a.id),
                format!("b={}", self.b.id),
                format!("a_hat={}", self.a_hat.id),
                format!("b_hat={}", self.b_hat.id),
                format!("c={}", self.c.id),
                format!("a_map={}", self.a_map.id),
                format!("b_map={}", self.b_map.id),
                format!("p={}", self.p.id),
                format!("q={}", self.q.id),
                format!("to_a={}", self.to_a.id),
                format!("to_b={}", self.to_b.id),
            ],
        )];
        for t in &self.stage1.atoms {
            let core = t.core_index.map_or("-".to_string(), |i| i.to_string());
            records.push(Record::new(
                "stage1",
                vec![format!("atom={}", t.atom), format!("degree={}", t.degree), format!("core={core}")],
            ));
        }
        for (side, v, lift) in &self.stage1.lifts {
            records.push(Record::new("stage1lift", vec![format!("side={side}"), format!("vertex={v}"), format!("lift={lift}")]));
        }
        records.push(Record::new(
            "stage2",
            vec![format!("index_a={}", self.a_map.total_degree), format!("index_b={}", self.b_map.total_degree)],
        ));
        records.push(Record::new("stage3", vec![format!("signature={}", self.signature), format!("round={}", self.round)]));
        let ladder = if self.ladder.is_empty() { "-".to_string() } else { self.ladder.clone() };
        records.push(Record::new(
            "stage4",
            vec![format!("index_a={}", self.degrees.0), format!("index_b={}", self.degrees.1), format!("ladder={ladder}")],
        ));
        records.push(Record::new("summary", vec![format!("index_a={}", self.indices.0), format!("index_b={}", self.indices.1)]));
        for (t, c, a, b) in &self.volumes {
            records.push(Record::new("volume", vec![format!("atom={t}"), format!("c={c}"), format!("a={a}"), format!("b={b}")]));
        }
        records.push(Record::new(
            "euler",
            vec![format!("c={}", self.euler.0), format!("a={}", self.euler.1), format!("b={}", self.euler.2)],
        ));
        Document { catalog: self.catalog.clone(), descriptors, covers, records }
    }

    /// Reads a certificate back; any missing piece is an error.
    pub fn from_document(doc: &Document) -> Result<Certificate, String> {
        let head = record(doc, "certificate")?;
        let field = |r: &Record, k: &str| -> Result<String, String> {
            r.get(k).map(str::to_string).ok_or_else(|| format!("{} record lacks {k}", r.keyword))
        };
        let number = |r: &Record, k: &str| -> Result<u64, String> {
            field(r, k)?.parse().map_err(|_| format!("{} record: {k} is not a number", r.keyword))
        };
        let rational = |r: &Record, k: &str| -> Result<Rational, String> {
            parse_rational(&field(r, k)?).ok_or_else(|| format!("{} record: {k} is not a rational", r.keyword))
        };
        let desc = |k: &str| -> Result<Descriptor, String> {
            let id = field(head, k)?;
            doc.descriptor(&id).cloned().ok_or_else(|| format!("descriptor {id} missing"))
        };
        let cover = |k: &str| -> Result<CoveringMap, String> {
            let id = field(head, k)?;
            doc.cover(&id).cloned().ok_or_else(|| format!("cover {id} missing"))
        };
        let mut stage1 = Stage1::default();
        for r in doc.records.iter().filter(|r| r.keyword == "stage1") {
            let core = field(r, "core")?;
            let core_index = if core == "-" { None } else { Some(core.parse().map_err(|_| "stage1 core".to_string())?) };
            stage1.atoms.push(AtomAlignment { atom: field(r, "atom")?, degree: number(r, "degree")?, core_index });
        }
        for r in doc.records.iter().filter(|r| r.keyword == "stage1lift") {
            let side = field(r, "side")?.chars().next().ok_or("stage1lift side")?;
            stage1.lifts.push((side, field(r, "vertex")?, number(r, "lift")?));
        }
        let s3 = record(doc, "stage3")?;
        let s4 = record(doc, "stage4")?;
        let summary = record(doc, "summary")?;
        let mut volumes = Vec::new();
        for r in doc.records.iter().filter(|r| r.keyword == "volume") {
            volumes.push((field(r, "atom")?, rational(r, "c")?, rational(r, "a")?, rational(r, "b")?));
        }
        let e = record(doc, "euler")?;
        let ladder = field(s4, "ladder")?;
        Ok(Certificate {
            catalog: doc.catalog.clone(),
            a: desc("a")?,
            b: desc("b")?,
            stage1,
            a_hat: desc("a_hat")?,
            b_hat: desc("b_hat")?,
            a_map: cover("a_map")?,
            b_map: cover("b_map")?,
            signature: field(s3, "signature")?,
            round: number(s3, "round")? as usize,
            c: desc("c")?,
            p: cover("p")?,
            q: cover("q")?,
            degrees: (number(s4, "index_a")?, number(s4, "index_b")?),
            ladder: if ladder == "-" { String::new() } else { ladder },
            to_a: cover("to_a")?,
            to_b: cover("to_b")?,
            indices: (number(summary, "index_a")?, number(summary, "index_b")?),
            volumes,
            euler: (rational(e, "c")?, rational(e, "a")?, rational(e, "b")?),
        })
    }
}

fn record<'a>(doc: &'a Document, keyword: &str) -> Result<&'a Record, String> {
    let mut it = doc.records.iter().filter(|r| r.keyword == keyword);
    let r = it.next().ok_or_else(|| format!("no {keyword} record"))?;
    if it.next().is_some() {
        return Err(format!("repeated {keyword} record"));
    }
    Ok(r)
}

/// Re-derives every claim of a certificate; returns the violations found.
pub fn audit_certificate(cert: &Certificate) -> Vec<String> {
    let cat = &cert.catalog;
    let mut out = Vec::new();
    for d in [&cert.a, &cert.b, &cert.a_hat, &cert.b_hat, &cert.c] {
        let r = validate(d, cat);
        if !r.is_ok() {
            out.push(format!("descriptor {}: {r}", d.id));
        }
    }
    if !out.is_empty() {
        return out;
    }
    let legs: [(&str, &CoveringMap, &Descriptor, &Descriptor); 6] = [
        ("a_map", &cert.a_map, &cert.a_hat, &cert.a),
        ("b_map", &cert.b_map, &cert.b_hat, &cert.b),
        ("p", &cert.p, &cert.c, &cert.a_hat),
        ("q", &cert.q, &cert.c, &cert.b_hat),
        ("to_a", &cert.to_a, &cert.c, &cert.a),
        ("to_b", &cert.to_b, &cert.c, &cert.b),
    ];
    for (name, m, s, t) in legs {
        if m.source != s.id || m.target != t.id {
            out.push(format!("{name}: runs {} -> {}, expected {} -> {}", m.source, m.target, s.id, t.id));
            continue;
        }
        let r = verify_cover(m, s, t, cat);
        if !r.is_ok() {
            out.push(format!("{name}: {r}"));
        }
        match claim1_index_check(m, s, t, cat) {
            Ok(c) if c.is_ok() => {}
            Ok(c) => out.extend(c.violations.into_iter().map(|v| format!("{name}: {v}"))),
            Err(e) => out.push(format!("{name}: {e}")),
        }
    }
    if cert.to_a.total_degree != cert.p.total_degree * cert.a_map.total_degree {
        out.push("to_a: degree is not the product of its legs".into());
    }
    if cert.to_b.total_degree != cert.q.total_degree * cert.b_map.total_degree {
        out.push("to_b: degree is not the product of its legs".into());
    }
    if cert.degrees != (cert.p.total_degree, cert.q.total_degree) {
        out.push(format!("stage4: degrees {:?} differ from the maps", cert.degrees));
    }
    if cert.indices != (cert.to_a.total_degree, cert.to_b.total_degree) {
        out.push(format!("summary: indices {:?} differ from the composed maps", cert.indices));
    }
    match align_vertex_spaces(&cert.a, &cert.b, cat) {
        Ok(s) if s == cert.stage1 => {}
        Ok(_) => out.push("stage1: alignment differs from recomputation".into()),
        Err(e) => out.push(format!("stage1: {e}")),
    }
    match same_ideal_geometry(&cert.a_hat, &cert.b_hat, cat) {
        Ok(Equivalence::Yes(s)) => {
            if format!("{:016x}", s.hash) != cert.signature || s.round != cert.round {
                out.push("stage3: recorded signature differs".into());
            }
        }
        Ok(Equivalence::No(d)) => out.push(format!("stage3: signatures differ at radius {}", d.radius)),
        Err(e) => out.push(format!("stage3: {e}")),
    }
    let (na, nb) = cert.indices;
    match volume_lines(&cert.c, &cert.a, &cert.b, na, nb, cat) {
        Ok(v) => {
            if v != cert.volumes {
                out.push("volume: recorded lines differ from recomputation".into());
            }
            for (t, c, a, b) in &v {
                if c != a || c != b {
                    out.push(format!("volume[{t}]: {c}, {a}, {b} not all equal"));
                }
            }
        }
        Err(e) => out.push(format!("volume: {e}")),
    }
    match euler_triple(&cert.c, &cert.a, &cert.b, na, nb, cat) {
        Ok(e) => {
            if e != cert.euler {
                out.push("euler: recorded values differ from recomputation".into());
            }
            if e.0 != e.1 || e.0 != e.2 {
                out.push(format!("euler: {}, {}, {} not all equal", e.0, e.1, e.2));
            }
        }
        Err(e) => out.push(format!("euler: {e}")),
    }
    out
}

pub fn check_certificate(cert: &Certificate) -> bool {
    audit_certificate(cert).is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairParams {
    pub f_order: u64,
    pub r: u64,
    pub delta_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairError {
    #[error("parameters must be positive")]
    NotPositive,
    #[error("r = {r} does not divide |F| = {f}")]
    RDoesNotDivideF { r: u64, f: u64 },
    #[error("r = {r} does not divide the index {index}")]
    RDoesNotDivideIndex { r: u64, index: u64 },
    #[error("r = {0}: the (r,5,5) triangle group is not hyperbolic")]
    NotHyperbolic(u64),
}

impl PairParams {
    pub fn p(&self) -> u64 {
        self.f_order / self.r
    }

    pub fn q(&self) -> u64 {
        self.delta_index / self.r
    }

    pub fn check(&self) -> Result<(), PairError> {
        if self.f_order == 0 || self.r == 0 || self.delta_index == 0 {
            return Err(PairError::NotPositive);
        }
        if self.f_order % self.r != 0 {
            return Err(PairError::RDoesNotDivideF { r: self.r, f: self.f_order });
        }
        if self.delta_index % self.r != 0 {
            return Err(PairError::RDoesNotDivideIndex { r: self.r, index: self.delta_index });
        }
        if self.r < 2 {
            return Err(PairError::NotHyperbolic(self.r));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BipartitePair {
    pub params: PairParams,
    pub p: u64,
    pub q: u64,
    pub catalog: Catalog,
    /// One `hv` vertex carrying the placeholder group `F` and one `hu` vertex.
    pub h_side: Descriptor,
    pub h_side_expanded: Descriptor,
    pub h_prime: Descriptor,
}

impl BipartitePair {
    pub fn to_document(&self) -> Document {
        Document {
            catalog: self.catalog.clone(),
            descriptors: vec![self.h_side.clone(), self.h_side_expanded.clone(), self.h_prime.clone()],
            covers: Vec::new(),
            records: Vec::new(),
        }
    }
}

/// The two sides of the residually finite / non residually finite pair.
///
/// Atom `hv` is a closed real hyperbolic 3-manifold unit with peg `x` carrying `p` ends; atom `hu`
/// is the hyperbolic plane with unit `r` times the (r,5,5) triangle orbifold and peg `y` of one end.
pub fn generate_bipartite_pair(params: PairParams) -> Result<BipartitePair, PairError> {
    params.check()?;
    let (p, q, r) = (params.p(), params.q(), params.r as i64);
    let f = params.f_order as usize;
    // chi of r copies of the (r,5,5) orbifold: r (1/r + 2/5 - 1)
    let chi = Rational::new((5 - 3 * r).into(), 5.into());
    let mut cat = Catalog::new("pair")
        .with_atom(
            AtomType::symmetric("hv", Field::R, 3, int(1)).with_l2(vec![zero(), zero(), zero(), zero()]).with_peg("x", p as u32),
        )
        .with_atom(
            AtomType::symmetric("hu", Field::R, 2, -chi.clone())
                .with_euler(chi.clone())
                .with_l2(vec![zero(), -chi, zero()])
                .with_peg("y", 1),
        );
    let gen = Perm::cycle(f);
    cat.groups.insert(
        "F".into(),
        GroupDecl {
            id: "F".into(),
            degree: f,
            ends: p as usize,
            gens: vec![gen.clone()],
            end_images: vec![Perm::cycle(p as usize)],
            subgroups: BTreeMap::from([("f".to_string(), vec![gen.pow(p as usize)])]),
        },
    );

    let mut h_side = Descriptor::new("h_side", "pair");
    let mut v = VertexInstance::new("v", "hv", 1).with_slot("x1", "x");
    v.group = Some("F".into());
    h_side.add_vertex(v);
    h_side.add_vertex(VertexInstance::new("u", "hu", 1).with_slot("y1", "y"));
    h_side.add_edge("e0", PortRef::new("v", "x1", 1), PortRef::new("u", "y1", 1));
    let mut h_side_expanded = expand_torsion(&h_side, &cat).expect("generated data is consistent");
    h_side_expanded.id = "h_side_x".into();

    let mut h_prime = Descriptor::new("h_prime", "pair");
    for i in 1..=q {
        h_prime.add_vertex(VertexInstance::new(&format!("v{i}"), "hv", 1).with_slot("x1", "x"));
    }
    for j in 1..=p {
        let mut u = VertexInstance::new(&format!("u{j}"), "hu", q);
        for i in 1..=q {
            u = u.with_slot(&format!("y{i}"), "y");
        }
        h_prime.add_vertex(u);
    }
    for i in 1..=q {
        for j in 1..=p {
            h_prime.add_edge(
                &format!("e{i}_{j}"),
                PortRef::new(&format!("v{i}"), "x1", j as u32),
                PortRef::new(&format!("u{j}"), &format!("y{i}"), 1),
            );
        }
    }
    Ok(BipartitePair { params, p, q, catalog: cat, h_side, h_side_expanded, h_prime })
}
