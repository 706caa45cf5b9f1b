//! The line-oriented GOS text format.
//!
//! ```text
//! catalog <id>
//! atom <id> kind=point
//! atom <id> kind=symmetric field=<R|C|H|Ca> dim=<int> basevol=<p/q> [basechi=<p/q>] [l2=<p/q>,...]
//! peg <atomId> <pegId> ends=<int>
//! group <gid> degree=<n> [ends=<m>]
//! gen <gid> <cycles> [ends=<cycles>]
//! subgroup <gid> <name>
//! subgen <gid> <name> <cycles>
//! descriptor <id> catalog=<catalogId>
//! vertex <vid> atom=<atomId> deg=<int> [group=<gid>] [sub=<name>]
//! slot <vid> <slotId> class=<pegId>
//! edge <eid> <vid>.<slotId>.<port> <vid>.<slotId>.<port>
//! cover <id> <srcId> -> <tgtId> N=<int>
//! vmap <srcV> <tgtV> ld=<int>
//! smap <srcV>.<slot> <tgtV>.<slot>
//! emap <srcE> <tgtE>
//! pmap <port> <port>
//! ```
//!
//! Cycles are written without spaces, e.g. `(1,2,3)(4,5)`; the identity is `()`.
//! Certificate lines (`certificate`, `stage1`, .., `euler`) are kept as raw records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::covers::CoveringMap;
use crate::model::{AtomKind, AtomType, Catalog, Descriptor, Edge, Field, GroupDecl, PegClass, PortRef, VertexInstance, POINT_SLOT};
use crate::permgrp::Perm;
use crate::rational::{parse_rational, Rational};

pub const RECORD_KEYWORDS: &[&str] =
    &["certificate", "stage1", "stage1lift", "stage2", "stage3", "stage4", "summary", "volume", "euler"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

/// A keyword line whose meaning lives outside this module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub keyword: String,
    pub fields: Vec<String>,
}

impl Record {
    pub fn new(keyword: &str, fields: Vec<String>) -> Self {
        Record { keyword: keyword.to_string(), fields }
    }

    /// Value of a `key=value` field.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find_map(|f| f.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub catalog: Catalog,
    pub descriptors: Vec<Descriptor>,
    pub covers: Vec<CoveringMap>,
    pub records: Vec<Record>,
}

impl Document {
    pub fn descriptor(&self, id: &str) -> Option<&Descriptor> {
        self.descriptors.iter().find(|d| d.id == id)
    }

    pub fn cover(&self, id: &str) -> Option<&CoveringMap> {
        self.covers.iter().find(|c| c.id == id)
    }

    /// Copy in canonical order: everything sorted by id, records untouched.
    pub fn canonical(&self) -> Document {
        let mut doc = self.clone();
        for a in doc.catalog.atoms.values_mut() {
            a.pegs.sort_by(|x, y| x.id.cmp(&y.id));
        }
        doc.descriptors = doc.descriptors.iter().map(|d| d.canonical()).collect();
        doc.descriptors.sort_by(|x, y| x.id.cmp(&y.id));
        doc.covers.sort_by(|x, y| x.id.cmp(&y.id));
        doc
    }
}

struct Line<'a> {
    no: usize,
    tokens: Vec<(usize, &'a str)>,
}

impl<'a> Line<'a> {
    fn err(&self, idx: usize, message: impl Into<String>) -> ParseError {
        let col = self.tokens.get(idx).map_or(1, |t| t.0);
        ParseError { line: self.no, col, message: message.into() }
    }

    fn tok(&self, idx: usize, what: &str) -> Result<&'a str, ParseError> {
        self.tokens
            .get(idx)
            .map(|t| t.1)
            .ok_or_else(|| ParseError { line: self.no, col: self.end_col(), message: format!("missing {what}") })
    }

    fn end_col(&self) -> usize {
        self.tokens.last().map_or(1, |(c, t)| c + t.chars().count())
    }

    fn id(&self, idx: usize, what: &str) -> Result<&'a str, ParseError> {
        let t = self.tok(idx, what)?;
        if is_id(t) {
            Ok(t)
        } else {
            Err(self.err(idx, format!("invalid {what} '{t}'")))
        }
    }

    /// `key=value` options from token `from` on; unknown keys are errors.
    fn options(&self, from: usize, allowed: &[&str]) -> Result<BTreeMap<&'a str, (usize, &'a str)>, ParseError> {
        let mut out = BTreeMap::new();
        for i in from..self.tokens.len() {
            let t = self.tokens[i].1;
            let Some((k, v)) = t.split_once('=') else {
                return Err(self.err(i, format!("expected key=value, found '{t}'")));
            };
            if !allowed.contains(&k) {
                return Err(self.err(i, format!("unknown option '{k}'")));
            }
            if out.insert(k, (i, v)).is_some() {
                return Err(self.err(i, format!("repeated option '{k}'")));
            }
        }
        Ok(out)
    }
}

pub fn is_id(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in body.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &body[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &body[s..]));
    }
    out.into_iter()
        .map(|(byte, t)| (body[..byte].chars().count() + 1, t))
        .collect()
}

fn parse_int<T: std::str::FromStr>(line: &Line, idx: usize, text: &str, what: &str) -> Result<T, ParseError> {
    text.parse::<T>().map_err(|_| line.err(idx, format!("invalid {what} '{text}'")))
}

fn parse_rat(line: &Line, idx: usize, text: &str, what: &str) -> Result<Rational, ParseError> {
    parse_rational(text).ok_or_else(|| line.err(idx, format!("invalid {what} '{text}'")))
}

fn parse_port(line: &Line, idx: usize) -> Result<PortRef, ParseError> {
    let t = line.tok(idx, "port")?;
    let p = PortRef::parse(t).ok_or_else(|| line.err(idx, format!("invalid port '{t}'")))?;
    if !is_id(&p.vertex) || !(is_id(&p.slot) || p.slot == POINT_SLOT) {
        return Err(line.err(idx, format!("invalid port '{t}'")));
    }
    Ok(p)
}

fn parse_slot_ref(line: &Line, idx: usize) -> Result<(String, String), ParseError> {
    let t = line.tok(idx, "slot")?;
    match t.rsplit_once('.') {
        Some((v, s)) if is_id(v) && is_id(s) => Ok((v.to_string(), s.to_string())),
        _ => Err(line.err(idx, format!("invalid slot reference '{t}'"))),
    }
}

struct EdgeSite {
    line: usize,
    cols: [usize; 2],
    desc: usize,
    edge: usize,
}

pub fn parse(text: &str) -> Result<Document, ParseError> {
    let mut doc = Document::default();
    let mut have_catalog = false;
    let mut edge_sites: Vec<EdgeSite> = Vec::new();
    let mut atom_lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut current_desc: Option<usize> = None;
    let mut current_cover: Option<usize> = None;
    let mut desc_ids = BTreeSet::new();
    let mut cover_ids = BTreeSet::new();
    let mut any = false;

    for (i, raw) in text.lines().enumerate() {
        let line = Line { no: i + 1, tokens: tokenize(raw) };
        let Some(&(_, kw)) = line.tokens.first() else { continue };
        any = true;
        if kw != "catalog" && !have_catalog && !RECORD_KEYWORDS.contains(&kw) {
            return Err(line.err(0, "document must start with a catalog line"));
        }
        match kw {
            "catalog" => {
                if have_catalog {
                    return Err(line.err(0, "second catalog in one document"));
                }
                let id = line.id(1, "catalog id")?;
                if line.tokens.len() > 2 {
                    return Err(line.err(2, "unexpected token"));
                }
                doc.catalog = Catalog::new(id);
                have_catalog = true;
            }
            "atom" => {
                let id = line.id(1, "atom id")?;
                if doc.catalog.atoms.contains_key(id) {
                    return Err(line.err(1, format!("duplicate id {id}")));
                }
                let opts = line.options(2, &["kind", "field", "dim", "basevol", "basechi", "l2"])?;
                let Some(&(ki, kind)) = opts.get("kind") else {
                    return Err(line.err(1, "missing kind"));
                };
                let atom = match kind {
                    "point" => {
                        if let Some(&(j, _)) = opts.iter().find(|(k, _)| **k != "kind").map(|(_, v)| v) {
                            return Err(line.err(j, "point atoms take no further options"));
                        }
                        AtomType::point(id)
                    }
                    "symmetric" => {
                        let need = |k: &str| opts.get(k).copied().ok_or_else(|| line.err(1, format!("missing {k}")));
                        let (fi, f) = need("field")?;
                        let field = Field::parse(f).ok_or_else(|| line.err(fi, format!("unknown field '{f}'")))?;
                        let (di, d) = need("dim")?;
                        let dim: u32 = parse_int(&line, di, d, "dim")?;
                        let (vi, v) = need("basevol")?;
                        let mut atom = AtomType::symmetric(id, field, dim, parse_rat(&line, vi, v, "basevol")?);
                        if let Some(&(ci, c)) = opts.get("basechi") {
                            atom.base_euler = Some(parse_rat(&line, ci, c, "basechi")?);
                        }
                        if let Some(&(li, l)) = opts.get("l2") {
                            let profile = l
                                .split(',')
                                .map(|x| parse_rat(&line, li, x, "l2 entry"))
                                .collect::<Result<Vec<_>, _>>()?;
                            atom.l2_profile = Some(profile);
                        }
                        atom
                    }
                    other => return Err(line.err(ki, format!("unknown kind '{other}'"))),
                };
                atom_lines.insert(id.to_string(), line.no);
                doc.catalog.atoms.insert(id.to_string(), atom);
            }
            "peg" => {
                let aid = line.id(1, "atom id")?;
                let pid = line.id(2, "peg id")?;
                let opts = line.options(3, &["ends"])?;
                let &(ei, e) = opts.get("ends").ok_or_else(|| line.err(2, "missing ends"))?;
                let ends: u32 = parse_int(&line, ei, e, "ends")?;
                let Some(atom) = doc.catalog.atoms.get_mut(aid) else {
                    return Err(line.err(1, format!("unknown atom {aid}")));
                };
                if atom.is_point() {
                    return Err(line.err(1, format!("point atom {aid} cannot carry pegs")));
                }
                if atom.peg(pid).is_some() {
                    return Err(line.err(2, format!("duplicate id {pid}")));
                }
                atom.pegs.push(PegClass { id: pid.to_string(), ends });
            }
            "group" => {
                let gid = line.id(1, "group id")?;
                if doc.catalog.groups.contains_key(gid) {
                    return Err(line.err(1, format!("duplicate id {gid}")));
                }
                let opts = line.options(2, &["degree", "ends"])?;
                let &(di, d) = opts.get("degree").ok_or_else(|| line.err(1, "missing degree"))?;
                let degree: usize = parse_int(&line, di, d, "degree")?;
                let ends: usize = match opts.get("ends") {
                    Some(&(ei, e)) => parse_int(&line, ei, e, "ends")?,
                    None => 0,
                };
                if degree == 0 {
                    return Err(line.err(di, "group degree must be positive"));
                }
                doc.catalog.groups.insert(
                    gid.to_string(),
                    GroupDecl {
                        id: gid.to_string(),
                        degree,
                        ends,
                        gens: Vec::new(),
                        end_images: Vec::new(),
                        subgroups: BTreeMap::new(),
                    },
                );
            }
            "gen" => {
                let gid = line.id(1, "group id")?;
                let Some(g) = doc.catalog.groups.get_mut(gid) else {
                    return Err(line.err(1, format!("unknown group {gid}")));
                };
                let cyc = line.tok(2, "cycles")?;
                let p = Perm::parse_cycles(cyc, g.degree).map_err(|_| line.err(2, format!("invalid cycles '{cyc}'")))?;
                let opts = line.options(3, &["ends"])?;
                let e = match opts.get("ends") {
                    Some(&(ei, e)) => {
                        Perm::parse_cycles(e, g.ends).map_err(|_| line.err(ei, format!("invalid end cycles '{e}'")))?
                    }
                    None => Perm::identity(g.ends),
                };
                g.gens.push(p);
                g.end_images.push(e);
            }
            "subgroup" => {
                let gid = line.id(1, "group id")?;
                let name = line.id(2, "subgroup name")?;
                let Some(g) = doc.catalog.groups.get_mut(gid) else {
                    return Err(line.err(1, format!("unknown group {gid}")));
                };
                if g.subgroups.insert(name.to_string(), Vec::new()).is_some() {
                    return Err(line.err(2, format!("duplicate id {name}")));
                }
            }
            "subgen" => {
                let gid = line.id(1, "group id")?;
                let name = line.id(2, "subgroup name")?;
                let Some(g) = doc.catalog.groups.get_mut(gid) else {
                    return Err(line.err(1, format!("unknown group {gid}")));
                };
                let degree = g.degree;
                let Some(sub) = g.subgroups.get_mut(name) else {
                    return Err(line.err(2, format!("unknown subgroup {name}")));
                };
                let cyc = line.tok(3, "cycles")?;
                let p = Perm::parse_cycles(cyc, degree).map_err(|_| line.err(3, format!("invalid cycles '{cyc}'")))?;
                sub.push(p);
            }
            "descriptor" => {
                let id = line.id(1, "descriptor id")?;
                if !desc_ids.insert(id.to_string()) {
                    return Err(line.err(1, format!("duplicate id {id}")));
                }
                let opts = line.options(2, &["catalog"])?;
                let &(ci, c) = opts.get("catalog").ok_or_else(|| line.err(1, "missing catalog"))?;
                if c != doc.catalog.id {
                    return Err(line.err(ci, format!("unknown catalog {c}")));
                }
                doc.descriptors.push(Descriptor::new(id, c));
                current_desc = Some(doc.descriptors.len() - 1);
                current_cover = None;
            }
            "vertex" => {
                let di = current_desc.ok_or_else(|| line.err(0, "vertex outside a descriptor"))?;
                let vid = line.id(1, "vertex id")?;
                let opts = line.options(2, &["atom", "deg", "group", "sub"])?;
                let &(ai, atom) = opts.get("atom").ok_or_else(|| line.err(1, "missing atom"))?;
                if !doc.catalog.atoms.contains_key(atom) {
                    return Err(line.err(ai, format!("unknown atom {atom}")));
                }
                let &(gi, deg) = opts.get("deg").ok_or_else(|| line.err(1, "missing deg"))?;
                let degree: u64 = parse_int(&line, gi, deg, "deg")?;
                let mut v = VertexInstance::new(vid, atom, degree);
                if let Some(&(gi, g)) = opts.get("group") {
                    if !doc.catalog.groups.contains_key(g) {
                        return Err(line.err(gi, format!("unknown group {g}")));
                    }
                    v.group = Some(g.to_string());
                }
                if let Some(&(si, s)) = opts.get("sub") {
                    let known = v
                        .group
                        .as_ref()
                        .and_then(|g| doc.catalog.groups.get(g))
                        .is_some_and(|g| g.subgroups.contains_key(s));
                    if !known {
                        return Err(line.err(si, format!("unknown subgroup {s}")));
                    }
                    v.sub = Some(s.to_string());
                }
                let d = &mut doc.descriptors[di];
                if d.vertex(vid).is_some() {
                    return Err(line.err(1, format!("duplicate id {vid}")));
                }
                d.add_vertex(v);
            }
            "slot" => {
                let di = current_desc.ok_or_else(|| line.err(0, "slot outside a descriptor"))?;
                let vid = line.id(1, "vertex id")?;
                let sid = line.id(2, "slot id")?;
                let opts = line.options(3, &["class"])?;
                let &(ci, class) = opts.get("class").ok_or_else(|| line.err(2, "missing class"))?;
                let d = &mut doc.descriptors[di];
                let Some(v) = d.vertices.iter_mut().find(|v| v.id == vid) else {
                    return Err(line.err(1, format!("unknown vertex {vid}")));
                };
                let atom = &doc.catalog.atoms[&v.atom];
                if atom.peg(class).is_none() {
                    return Err(line.err(ci, format!("unknown peg {class}")));
                }
                if v.slots.iter().any(|(s, _)| s == sid) {
                    return Err(line.err(2, format!("duplicate id {sid}")));
                }
                v.slots.push((sid.to_string(), class.to_string()));
            }
            "edge" => {
                let di = current_desc.ok_or_else(|| line.err(0, "edge outside a descriptor"))?;
                let eid = line.id(1, "edge id")?;
                let a = parse_port(&line, 2)?;
                let b = parse_port(&line, 3)?;
                if line.tokens.len() > 4 {
                    return Err(line.err(4, "unexpected token"));
                }
                let d = &mut doc.descriptors[di];
                if d.edges.iter().any(|e| e.id == eid) {
                    return Err(line.err(1, format!("duplicate id {eid}")));
                }
                d.edges.push(Edge { id: eid.to_string(), a, b });
                edge_sites.push(EdgeSite {
                    line: line.no,
                    cols: [line.tokens[2].0, line.tokens[3].0],
                    desc: di,
                    edge: d.edges.len() - 1,
                });
            }
            "cover" => {
                let id = line.id(1, "cover id")?;
                if !cover_ids.insert(id.to_string()) {
                    return Err(line.err(1, format!("duplicate id {id}")));
                }
                let src = line.id(2, "source id")?;
                if line.tok(3, "->")? != "->" {
                    return Err(line.err(3, "expected '->'"));
                }
                let tgt = line.id(4, "target id")?;
                let opts = line.options(5, &["N"])?;
                let &(ni, n) = opts.get("N").ok_or_else(|| line.err(4, "missing N"))?;
                let total_degree: u64 = parse_int(&line, ni, n, "N")?;
                doc.covers.push(CoveringMap {
                    id: id.to_string(),
                    source: src.to_string(),
                    target: tgt.to_string(),
                    total_degree,
                    vertex_map: BTreeMap::new(),
                    local_degree: BTreeMap::new(),
                    slot_map: BTreeMap::new(),
                    edge_map: BTreeMap::new(),
                    port_map: BTreeMap::new(),
                });
                current_cover = Some(doc.covers.len() - 1);
                current_desc = None;
            }
            "vmap" | "smap" | "emap" | "pmap" => {
                let ci = current_cover.ok_or_else(|| line.err(0, format!("{kw} outside a cover")))?;
                let m = &mut doc.covers[ci];
                match kw {
                    "vmap" => {
                        let s = line.id(1, "vertex id")?;
                        let t = line.id(2, "vertex id")?;
                        let opts = line.options(3, &["ld"])?;
                        let &(li, l) = opts.get("ld").ok_or_else(|| line.err(2, "missing ld"))?;
                        let ld: u64 = parse_int(&line, li, l, "ld")?;
                        if m.vertex_map.insert(s.to_string(), t.to_string()).is_some() {
                            return Err(line.err(1, format!("duplicate id {s}")));
                        }
                        m.local_degree.insert(s.to_string(), ld);
                    }
                    "smap" => {
                        let s = parse_slot_ref(&line, 1)?;
                        let t = parse_slot_ref(&line, 2)?;
                        if m.slot_map.insert(s, t).is_some() {
                            return Err(line.err(1, "duplicate slot mapping"));
                        }
                    }
                    "emap" => {
                        let s = line.id(1, "edge id")?;
                        let t = line.id(2, "edge id")?;
                        if m.edge_map.insert(s.to_string(), t.to_string()).is_some() {
                            return Err(line.err(1, format!("duplicate id {s}")));
                        }
                    }
                    _ => {
                        let s = parse_port(&line, 1)?;
                        let t = parse_port(&line, 2)?;
                        if m.port_map.insert(s, t).is_some() {
                            return Err(line.err(1, "duplicate port mapping"));
                        }
                    }
                }
            }
            k if RECORD_KEYWORDS.contains(&k) => {
                let fields = line.tokens[1..].iter().map(|t| t.1.to_string()).collect();
                doc.records.push(Record::new(k, fields));
            }
            other => return Err(line.err(0, format!("unknown keyword '{other}'"))),
        }
    }
    if !any || !have_catalog {
        return Err(ParseError { line: 1, col: 1, message: "empty document".into() });
    }
    // catalog invariants
    for (id, atom) in &doc.catalog.atoms {
        if let Some(msg) = atom.check().into_iter().next() {
            return Err(ParseError { line: atom_lines[id], col: 1, message: msg });
        }
    }
    for g in doc.catalog.groups.values() {
        if let Err(e) = g.build() {
            return Err(ParseError { line: 1, col: 1, message: format!("group {}: {e}", g.id) });
        }
    }
    // edge references
    for site in &edge_sites {
        let d = &doc.descriptors[site.desc];
        let e = &d.edges[site.edge];
        for (k, p) in [&e.a, &e.b].into_iter().enumerate() {
            let at = |message: String| ParseError { line: site.line, col: site.cols[k], message };
            let Some(v) = d.vertex(&p.vertex) else {
                return Err(at(format!("unknown vertex {}", p.vertex)));
            };
            let atom = &doc.catalog.atoms[&v.atom];
            if atom.is_point() {
                if p.slot != POINT_SLOT {
                    return Err(at(format!("point vertex {} has only slot @", v.id)));
                }
                if p.port == 0 {
                    return Err(at(format!("port out of range: {p}")));
                }
            } else {
                let Some((_, peg)) = v.slots.iter().find(|(s, _)| *s == p.slot) else {
                    return Err(at(format!("unknown slot {}.{}", v.id, p.slot)));
                };
                let ends = atom.peg(peg).map_or(0, |pc| pc.ends);
                if p.port == 0 || p.port > ends {
                    return Err(at(format!("port out of range: {p} (peg {peg} has ends={ends})")));
                }
            }
        }
    }
    Ok(doc)
}

fn cycles(p: &Perm) -> String {
    p.to_string().replace(' ', ",")
}

pub fn write_catalog(out: &mut String, cat: &Catalog) {
    let _ = writeln!(out, "catalog {}", cat.id);
    for atom in cat.atoms.values() {
        match atom.kind {
            AtomKind::Point => {
                let _ = writeln!(out, "atom {} kind=point", atom.id);
            }
            AtomKind::Symmetric { field, dim } => {
                let _ = write!(out, "atom {} kind=symmetric field={} dim={} basevol={}", atom.id, field, dim, atom.base_volume);
                if let Some(chi) = &atom.base_euler {
                    let _ = write!(out, " basechi={chi}");
                }
                if let Some(l2) = &atom.l2_profile {
                    let parts: Vec<String> = l2.iter().map(|x| x.to_string()).collect();
                    let _ = write!(out, " l2={}", parts.join(","));
                }
                out.push('\n');
            }
        }
        let mut pegs = atom.pegs.clone();
        pegs.sort_by(|x, y| x.id.cmp(&y.id));
        for p in pegs {
            let _ = writeln!(out, "peg {} {} ends={}", atom.id, p.id, p.ends);
        }
    }
    for g in cat.groups.values() {
        let _ = write!(out, "group {} degree={}", g.id, g.degree);
        if g.ends > 0 {
            let _ = write!(out, " ends={}", g.ends);
        }
        out.push('\n');
        for (p, e) in g.gens.iter().zip(&g.end_images) {
            let _ = write!(out, "gen {} {}", g.id, cycles(p));
            if g.ends > 0 {
                let _ = write!(out, " ends={}", cycles(e));
            }
            out.push('\n');
        }
        for (name, gens) in &g.subgroups {
            let _ = writeln!(out, "subgroup {} {}", g.id, name);
            for p in gens {
                let _ = writeln!(out, "subgen {} {} {}", g.id, name, cycles(p));
            }
        }
    }
}

pub fn write_descriptor(out: &mut String, d: &Descriptor) {
    let d = d.canonical();
    let _ = writeln!(out, "descriptor {} catalog={}", d.id, d.catalog);
    for v in &d.vertices {
        let _ = write!(out, "vertex {} atom={} deg={}", v.id, v.atom, v.degree);
        if let Some(g) = &v.group {
            let _ = write!(out, " group={g}");
        }
        if let Some(s) = &v.sub {
            let _ = write!(out, " sub={s}");
        }
        out.push('\n');
    }
    for v in &d.vertices {
        for (s, peg) in &v.slots {
            let _ = writeln!(out, "slot {} {} class={}", v.id, s, peg);
        }
    }
    for e in &d.edges {
        let _ = writeln!(out, "edge {} {} {}", e.id, e.a, e.b);
    }
}

pub fn write_cover(out: &mut String, m: &CoveringMap) {
    let _ = writeln!(out, "cover {} {} -> {} N={}", m.id, m.source, m.target, m.total_degree);
    for (s, t) in &m.vertex_map {
        let ld = m.local_degree.get(s).copied().unwrap_or(0);
        let _ = writeln!(out, "vmap {s} {t} ld={ld}");
    }
    for ((sv, ss), (tv, ts)) in &m.slot_map {
        let _ = writeln!(out, "smap {sv}.{ss} {tv}.{ts}");
    }
    for (s, t) in &m.edge_map {
        let _ = writeln!(out, "emap {s} {t}");
    }
    for (s, t) in &m.port_map {
        let _ = writeln!(out, "pmap {s} {t}");
    }
}

pub fn write_record(out: &mut String, r: &Record) {
    let _ = writeln!(out, "{} {}", r.keyword, r.fields.join(" "));
}

/// Canonical serialization.
pub fn serialize(doc: &Document) -> String {
    let doc = doc.canonical();
    let mut out = String::new();
    write_catalog(&mut out, &doc.catalog);
    for d in &doc.descriptors {
        write_descriptor(&mut out, d);
    }
    for m in &doc.covers {
        write_cover(&mut out, m);
    }
    for r in &doc.records {
        write_record(&mut out, r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build;

    const MINIMAL: &str = "catalog c\natom pt kind=point\ndescriptor d catalog=c\nvertex p atom=pt deg=1\n";

    #[test]
    fn minimal_document() {
        let doc = parse(MINIMAL).unwrap();
        assert_eq!(doc.catalog.atoms.len(), 1);
        assert_eq!(doc.descriptors.len(), 1);
        assert_eq!(doc.descriptors[0].vertices.len(), 1);
        assert!(doc.descriptors[0].edges.is_empty());
        assert_eq!(serialize(&doc), MINIMAL);
    }

    #[test]
    fn port_range_is_checked() {
        let text = "catalog c\n\
            atom s kind=symmetric field=R dim=3 basevol=1\n\
            peg s x ends=2\n\
            descriptor d catalog=c\n\
            vertex v atom=s deg=1\n\
            vertex w atom=s deg=1\n\
            slot v x1 class=x\n\
            slot w x1 class=x\n\
            edge e1 v.x1.1 w.x1.3\n";
        let err = parse(text).unwrap_err();
        assert_eq!(err.line, 9);
        assert_eq!(err.col, 16);
        assert!(err.message.contains("port out of range"), "{err}");
    }

    #[test]
    fn syntax_and_reference_errors() {
        assert!(parse("").unwrap_err().message.contains("empty"));
        let e = parse("catalog c\natom a kind=blob\n").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
        let e = parse("catalog c\natom pt kind=point\natom pt kind=point\n").unwrap_err();
        assert!(e.message.contains("duplicate id"));
        let e = parse("catalog c\natom pt kind=point\ndescriptor d catalog=c\nvertex p atom=q deg=1\n").unwrap_err();
        assert!(e.message.contains("unknown atom"));
        let e = parse("catalog c\natom s kind=symmetric field=R dim=2 basevol=1 basechi=-2\n").unwrap_err();
        assert!(e.message.contains("peg class"));
    }

    #[test]
    fn groups_parse_and_round_trip() {
        let text = "catalog c\n\
            atom pt kind=point\n\
            group f degree=4 ends=2\n\
            gen f (1,2,3,4) ends=(1,2)\n\
            subgroup f h\n\
            subgen f h (1,3)(2,4)\n";
        let doc = parse(text).unwrap();
        let g = &doc.catalog.groups["f"];
        assert_eq!(g.build().unwrap().group.order(), 4);
        assert_eq!(serialize(&doc), text);
    }

    #[test]
    fn builders_round_trip() {
        let (cat, d) = build::surface_free_product(&[2, 4, 3]);
        let doc = Document { catalog: cat, descriptors: vec![d], ..Default::default() };
        let text = serialize(&doc);
        let back = parse(&text).unwrap();
        assert_eq!(back, doc.canonical());
        assert_eq!(serialize(&back), text);
    }
}
