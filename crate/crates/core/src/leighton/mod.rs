//! Common finite covers of two descriptors with the same decorated universal cover.
//!
//! A common cover `c` is encoded by counts: how many point vertices of `c` lie over each pair
//! `(v_a, v_b)`, how many slots lie over each pair of slots, and how many edge ends lie over each
//! pair of ends `(x, y)`. Ends over `(x, y)` must be matched with ends over the opposite pair, so
//! those two counts are a single variable. Symmetric vertices over one pair are merged into a
//! single vertex. Any solution of the resulting integer system is turned into a cover by
//! splitting count matrices into permutations.

mod solver;

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use solver::{birkhoff, perfect_matching, Outcome, Problem};

use crate::covers::{restrict_to_component, verify_cover, CoveringMap};
use crate::format::{Document, Record};
use crate::measure::{euler, point_group_order, total_volume_by_atom, MeasureError};
use crate::model::{Catalog, Descriptor, Layout, PortRef, VertexInstance, POINT_SLOT};
use crate::rational::Rational;
use crate::treespace::{same_ideal_geometry, Distinction, Equivalence, SharedSignature, TreeError};

#[derive(Debug, Clone, Error)]
pub enum LeightonError {
    #[error("no common universal cover: colors differ at radius {} ({})", .0.radius, .0.example)]
    SignatureMismatch(Distinction),
    #[error("incompatible class counts: {0}")]
    Incompatible(String),
    #[error("torsion at point vertex {0}; pass a torsion-free cover")]
    Torsion(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_degree_pairs: usize,
    pub max_nodes: u64,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_degree_pairs: 4, max_nodes: 200_000, time_limit: None, seed: 0, threads: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rung {
    pub degrees: (u64, u64),
    pub nodes: u64,
    pub outcome: RungOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RungOutcome {
    Found,
    /// Complete search, no cover at these degrees.
    Infeasible,
    NodeLimit,
    TimeLimit,
}

impl fmt::Display for RungOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RungOutcome::Found => "found",
            RungOutcome::Infeasible => "none",
            RungOutcome::NodeLimit => "node-limit",
            RungOutcome::TimeLimit => "time-limit",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CommonCover {
    pub c: Descriptor,
    pub p: CoveringMap,
    pub q: CoveringMap,
    pub degrees: (u64, u64),
    pub ladder: Vec<Rung>,
}

#[derive(Debug, Clone)]
pub struct ExhaustedReport {
    pub budget: SearchBudget,
    pub ladder: Vec<Rung>,
}

impl fmt::Display for ExhaustedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "exhausted max_degree_pairs={} max_nodes={} seed={}",
            self.budget.max_degree_pairs, self.budget.max_nodes, self.budget.seed
        )?;
        for r in &self.ladder {
            writeln!(f, "  degrees=({},{}) nodes={} result={}", r.degrees.0, r.degrees.1, r.nodes, r.outcome)?;
        }
        write!(f, "no common cover found within budget; this is not a proof of nonexistence")
    }
}

#[derive(Debug, Clone)]
pub enum Search {
    Found(Box<CommonCover>),
    Exhausted(ExhaustedReport),
}

fn shared_signature(a: &Descriptor, b: &Descriptor, cat: &Catalog) -> Result<SharedSignature, LeightonError> {
    match same_ideal_geometry(a, b, cat)? {
        Equivalence::Yes(s) => Ok(s),
        Equivalence::No(d) => Err(LeightonError::SignatureMismatch(d)),
    }
}

/// Per stable vertex class: point count, or total degree for symmetric classes.
fn class_weights(d: &Descriptor, cat: &Catalog, colors: &[u64]) -> BTreeMap<u64, u64> {
    let mut out = BTreeMap::new();
    for (i, v) in d.vertices.iter().enumerate() {
        let point = cat.atom(&v.atom).is_some_and(|t| t.is_point());
        *out.entry(colors[i]).or_insert(0) += if point { 1 } else { v.degree };
    }
    out
}

/// Least `(N_a, N_b)` with `N_a · w_i(a) = N_b · w_i(b)` for every class `i`.
pub fn minimal_degree_pair(
    a: &Descriptor,
    b: &Descriptor,
    cat: &Catalog,
    shared: &SharedSignature,
) -> Result<(u64, u64), LeightonError> {
    let ca = &shared.a.history[shared.round][..shared.a.num_vertices];
    let cb = &shared.b.history[shared.round][..shared.b.num_vertices];
    let wa = class_weights(a, cat, ca);
    let wb = class_weights(b, cat, cb);
    let mut pair: Option<(u64, u64)> = None;
    for (color, &na) in &wa {
        let Some(&nb) = wb.get(color) else {
            return Err(LeightonError::Incompatible(format!("class {color:016x} missing on b")));
        };
        let g = na.gcd(&nb);
        let here = (nb / g, na / g);
        match pair {
            None => pair = Some(here),
            Some(p) if p != here => {
                return Err(LeightonError::Incompatible(format!(
                    "class ratios {}:{} and {}:{} disagree",
                    p.0, p.1, here.0, here.1
                )))
            }
            Some(_) => {}
        }
    }
    if wb.keys().any(|c| !wa.contains_key(c)) {
        return Err(LeightonError::Incompatible("class missing on a".into()));
    }
    pair.ok_or_else(|| LeightonError::Incompatible("empty descriptors".into()))
}

fn check_torsion_free(d: &Descriptor, cat: &Catalog) -> Result<(), LeightonError> {
    for v in &d.vertices {
        if point_group_order(v, cat)? > 1 {
            return Err(LeightonError::Torsion(format!("{}.{}", d.id, v.id)));
        }
    }
    Ok(())
}

/// Searches the degree ladder `k · minimal_degree_pair` for a common cover.
pub fn common_cover(a: &Descriptor, b: &Descriptor, cat: &Catalog, budget: &SearchBudget) -> Result<Search, LeightonError> {
    check_torsion_free(a, cat)?;
    check_torsion_free(b, cat)?;
    let shared = shared_signature(a, b, cat)?;
    if a == b {
        let id = CoveringMap::identity(a);
        return Ok(Search::Found(Box::new(CommonCover {
            c: a.clone(),
            p: id.clone(),
            q: id,
            degrees: (1, 1),
            ladder: vec![Rung { degrees: (1, 1), nodes: 0, outcome: RungOutcome::Found }],
        })));
    }
    let (ma, mb) = minimal_degree_pair(a, b, cat, &shared)?;
    let system = System::new(a, b, cat, &shared)?;
    let deadline = budget.time_limit.map(|t| Instant::now() + t);
    let mut ladder = Vec::new();
    let threads = budget.threads.max(1);
    let mut k = 1u64;
    while (k as usize) <= budget.max_degree_pairs {
        let hi = (k + threads as u64 - 1).min(budget.max_degree_pairs as u64);
        let ks: Vec<u64> = (k..=hi).collect();
        // rungs run side by side; a rung stops early once a smaller one has succeeded
        let best = AtomicU64::new(u64::MAX);
        let run = |k: u64| {
            let cancel = || best.load(Ordering::Relaxed) < k;
            let out = system.attempt(k * ma, k * mb, budget, deadline, &cancel);
            if out.1.is_some() {
                best.fetch_min(k, Ordering::Relaxed);
            }
            out
        };
        let results: Vec<(Rung, Option<Built>)> = if ks.len() == 1 {
            vec![run(ks[0])]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = ks.iter().map(|&k| s.spawn(move || run(k))).collect();
                handles.into_iter().map(|h| h.join().expect("search thread")).collect()
            })
        };
        for (rung, built) in results {
            if rung.degrees.0 / ma > best.load(Ordering::Relaxed) {
                continue;
            }
            ladder.push(rung);
            if let Some(built) = built {
                let (c, p, q) = built?;
                let degrees = (p.total_degree, q.total_degree);
                return Ok(Search::Found(Box::new(CommonCover { c, p, q, degrees, ladder })));
            }
        }
        k = hi + 1;
    }
    Ok(Search::Exhausted(ExhaustedReport { budget: budget.clone(), ladder }))
}

type Built = Result<(Descriptor, CoveringMap, CoveringMap), LeightonError>;

struct PointPair {
    va: usize,
    vb: usize,
    count: usize,
    ends_a: Vec<usize>,
    ends_b: Vec<usize>,
}

struct SlotPair {
    sa: usize,
    sb: usize,
    count: usize,
}

struct SymPair {
    va: usize,
    vb: usize,
    t: usize,
    alpha: u64,
    slots: Vec<SlotPair>,
}

/// Unknowns and constraints of the common-cover system, independent of the degree pair.
struct System<'a> {
    a: &'a Descriptor,
    b: &'a Descriptor,
    cat: &'a Catalog,
    la: Layout,
    lb: Layout,
    base: Problem,
    points: Vec<PointPair>,
    syms: Vec<SymPair>,
    /// End-pair variable, keyed by `(x, y)`; `(x, y)` and its opposite share one.
    ends: HashMap<(usize, usize), usize>,
    /// Rows of the fiber constraints: `(side, vertex, terms)`.
    fibers: Vec<(char, Vec<(usize, i64)>)>,
    priority: Vec<u64>,
}

impl<'a> System<'a> {
    fn new(a: &'a Descriptor, b: &'a Descriptor, cat: &'a Catalog, shared: &SharedSignature) -> Result<Self, LeightonError> {
        let la = Layout::new(a, cat).map_err(|e| LeightonError::Internal(e.0))?;
        let lb = Layout::new(b, cat).map_err(|e| LeightonError::Internal(e.0))?;
        let ca = &shared.a.history[shared.round];
        let cb = &shared.b.history[shared.round];
        let (nva, nvb) = (la.num_vertices(), lb.num_vertices());
        let slot_color_a = |e: usize| ca[nva + la.end_slot[e]];
        let slot_color_b = |e: usize| cb[nvb + lb.end_slot[e]];
        let end_ok = |x: usize, y: usize| {
            slot_color_a(x) == slot_color_b(y) && slot_color_a(Layout::opposite(x)) == slot_color_b(Layout::opposite(y))
        };
        let mut s = System {
            a,
            b,
            cat,
            base: Problem::new(),
            points: Vec::new(),
            syms: Vec::new(),
            ends: HashMap::new(),
            fibers: Vec::new(),
            priority: Vec::new(),
            la: la.clone(),
            lb: lb.clone(),
        };
        let big = 1i64 << 40;
        let mut end_var = |p: &mut Problem, pri: &mut Vec<u64>, x: usize, y: usize| -> usize {
            let key = (x, y).min((Layout::opposite(x), Layout::opposite(y)));
            *s.ends.entry(key).or_insert_with(|| {
                pri.push(2);
                p.var(0, big)
            })
        };
        let ends_at = |l: &Layout, v: usize| -> Vec<usize> {
            l.vertex_slots[v].iter().flat_map(|&s| l.slot_ends[s].iter().copied()).collect()
        };
        let mut fiber_a: Vec<Vec<(usize, i64)>> = vec![Vec::new(); nva];
        let mut fiber_b: Vec<Vec<(usize, i64)>> = vec![Vec::new(); nvb];
        for va in 0..nva {
            for vb in 0..nvb {
                if ca[va] != cb[vb] {
                    continue;
                }
                if la.is_point[va] {
                    let count = s.base.var(0, big);
                    s.priority.push(0);
                    fiber_a[va].push((count, 1));
                    fiber_b[vb].push((count, 1));
                    let (ea, eb) = (ends_at(&la, va), ends_at(&lb, vb));
                    let mut cols: Vec<Vec<(usize, i64)>> = vec![vec![(count, -1)]; eb.len()];
                    for &x in &ea {
                        let mut row = vec![(count, -1)];
                        for (j, &y) in eb.iter().enumerate() {
                            if end_ok(x, y) {
                                let m = end_var(&mut s.base, &mut s.priority, x, y);
                                row.push((m, 1));
                                cols[j].push((m, 1));
                            }
                        }
                        s.base.equal(row, 0);
                    }
                    for col in cols {
                        s.base.equal(col, 0);
                    }
                    s.points.push(PointPair { va, vb, count, ends_a: ea, ends_b: eb });
                } else {
                    let (da, db) = (la.degree[va], lb.degree[vb]);
                    let g = da.gcd(&db);
                    let (alpha, beta) = (db / g, da / g);
                    let t = s.base.var(0, big);
                    s.priority.push(0);
                    fiber_a[va].push((t, alpha as i64));
                    fiber_b[vb].push((t, beta as i64));
                    let mut slots = Vec::new();
                    let mut cols: BTreeMap<usize, Vec<(usize, i64)>> =
                        lb.vertex_slots[vb].iter().map(|&sb| (sb, vec![(t, -(beta as i64))])).collect();
                    for &sa in &la.vertex_slots[va] {
                        let mut row = vec![(t, -(alpha as i64))];
                        for &sb in &lb.vertex_slots[vb] {
                            if ca[nva + sa] != cb[nvb + sb] || la.slots[sa].peg != lb.slots[sb].peg {
                                continue;
                            }
                            let count = s.base.var(0, big);
                            s.priority.push(1);
                            row.push((count, 1));
                            cols.get_mut(&sb).expect("slot").push((count, 1));
                            let (xa, yb) = (&la.slot_ends[sa], &lb.slot_ends[sb]);
                            let mut ecols: Vec<Vec<(usize, i64)>> = vec![vec![(count, -1)]; yb.len()];
                            for &x in xa {
                                let mut erow = vec![(count, -1)];
                                for (j, &y) in yb.iter().enumerate() {
                                    if end_ok(x, y) {
                                        let m = end_var(&mut s.base, &mut s.priority, x, y);
                                        erow.push((m, 1));
                                        ecols[j].push((m, 1));
                                    }
                                }
                                s.base.equal(erow, 0);
                            }
                            for col in ecols {
                                s.base.equal(col, 0);
                            }
                            slots.push(SlotPair { sa, sb, count });
                        }
                        s.base.equal(row, 0);
                    }
                    for (_, col) in cols {
                        s.base.equal(col, 0);
                    }
                    s.syms.push(SymPair { va, vb, t, alpha, slots });
                }
            }
        }
        s.fibers = fiber_a
            .into_iter()
            .map(|t| ('a', t))
            .chain(fiber_b.into_iter().map(|t| ('b', t)))
            .collect();
        Ok(s)
    }

    fn attempt(
        &self,
        na: u64,
        nb: u64,
        budget: &SearchBudget,
        deadline: Option<Instant>,
        cancel: &dyn Fn() -> bool,
    ) -> (Rung, Option<Built>) {
        let mut p = self.base.clone();
        for (side, terms) in &self.fibers {
            p.equal(terms.clone(), if *side == 'a' { na as i64 } else { nb as i64 });
        }
        let (outcome, nodes) = p.solve_until(&self.priority, budget.max_nodes, deadline, cancel);
        let (rung_outcome, built) = match outcome {
            Outcome::Solved(values) => (RungOutcome::Found, Some(self.build(&values, na, nb, budget.seed))),
            Outcome::Infeasible => (RungOutcome::Infeasible, None),
            Outcome::NodeLimit => (RungOutcome::NodeLimit, None),
            Outcome::TimeLimit => (RungOutcome::TimeLimit, None),
        };
        (Rung { degrees: (na, nb), nodes, outcome: rung_outcome }, built)
    }

    fn end_value(&self, values: &[i64], x: usize, y: usize) -> i64 {
        let key = (x, y).min((Layout::opposite(x), Layout::opposite(y)));
        self.ends.get(&key).map_or(0, |&v| values[v])
    }

    fn split(&self, values: &[i64], xs: &[usize], ys: &[usize], n: i64) -> Result<Vec<Vec<usize>>, LeightonError> {
        let matrix: Vec<Vec<i64>> = xs.iter().map(|&x| ys.iter().map(|&y| self.end_value(values, x, y)).collect()).collect();
        birkhoff(&matrix, n).ok_or_else(|| LeightonError::Internal("count matrix is not a sum of permutations".into()))
    }

    fn build(&self, values: &[i64], na: u64, nb: u64, seed: u64) -> Built {
        let (a, b, la, lb) = (self.a, self.b, &self.la, &self.lb);
        let cid = format!("{}_{}_common", a.id, b.id);
        let mut c = Descriptor::new(&cid, &a.catalog);
        let mut p = empty_map(&format!("{cid}_to_{}", a.id), &cid, &a.id, na);
        let mut q = empty_map(&format!("{cid}_to_{}", b.id), &cid, &b.id, nb);
        // (port of c, end of a, end of b)
        let mut ports: Vec<(PortRef, usize, usize)> = Vec::new();
        let port_of = |l: &Layout, d: &Descriptor, e: usize| -> PortRef {
            let s = &l.slots[l.end_slot[e]];
            PortRef::new(&d.vertices[s.vertex].id, &s.id, l.end_port[e])
        };
        for pp in &self.points {
            let count = values[pp.count];
            if count == 0 {
                continue;
            }
            let perms = self.split(values, &pp.ends_a, &pp.ends_b, count)?;
            for (k, perm) in perms.iter().enumerate() {
                let wid = format!("w{}_{}_{}", pp.va, pp.vb, k);
                let atom = &la.atom[pp.va];
                c.add_vertex(VertexInstance::new(&wid, atom, 1));
                for (m, map, vid) in [(&mut p, la, &a.vertices[pp.va].id), (&mut q, lb, &b.vertices[pp.vb].id)] {
                    let _ = map;
                    m.vertex_map.insert(wid.clone(), vid.clone());
                    m.local_degree.insert(wid.clone(), 1);
                }
                for (i, &x) in pp.ends_a.iter().enumerate() {
                    let y = pp.ends_b[perm[i]];
                    ports.push((PortRef::new(&wid, POINT_SLOT, i as u32 + 1), x, y));
                }
            }
        }
        for sp in &self.syms {
            let t = values[sp.t] as u64;
            if t == 0 {
                continue;
            }
            let wid = format!("w{}_{}", sp.va, sp.vb);
            let ld_a = t * sp.alpha;
            let ld_b = ld_a * la.degree[sp.va] / lb.degree[sp.vb];
            let mut w = VertexInstance::new(&wid, &la.atom[sp.va], ld_a * la.degree[sp.va]);
            let mut next_slot = 0usize;
            for slot in &sp.slots {
                let count = values[slot.count];
                if count == 0 {
                    continue;
                }
                let (xs, ys) = (&la.slot_ends[slot.sa], &lb.slot_ends[slot.sb]);
                let perms = self.split(values, xs, ys, count)?;
                let peg = la.slots[slot.sa].peg.clone().expect("peg slot");
                for perm in perms {
                    next_slot += 1;
                    let sid = format!("s{next_slot}");
                    w.slots.push((sid.clone(), peg.clone()));
                    p.slot_map.insert((wid.clone(), sid.clone()), (a.vertices[sp.va].id.clone(), la.slots[slot.sa].id.clone()));
                    q.slot_map.insert((wid.clone(), sid.clone()), (b.vertices[sp.vb].id.clone(), lb.slots[slot.sb].id.clone()));
                    for (i, &x) in xs.iter().enumerate() {
                        ports.push((PortRef::new(&wid, &sid, la.end_port[x]), x, ys[perm[i]]));
                    }
                }
            }
            c.add_vertex(w);
            p.vertex_map.insert(wid.clone(), a.vertices[sp.va].id.clone());
            p.local_degree.insert(wid.clone(), ld_a);
            q.vertex_map.insert(wid.clone(), b.vertices[sp.vb].id.clone());
            q.local_degree.insert(wid, ld_b);
        }
        // match ends over (x, y) with ends over the opposite pair, joining components greedily
        let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, (_, x, y)) in ports.iter().enumerate() {
            by_pair.entry((*x, *y)).or_default().push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vindex: HashMap<&str, usize> = c.vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
        let mut uf = UnionFind::new(c.vertices.len());
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (&(x, y), list) in &by_pair {
            let partner = (Layout::opposite(x), Layout::opposite(y));
            if partner < (x, y) {
                continue;
            }
            let mut left = list.clone();
            let mut right = by_pair.get(&partner).cloned().unwrap_or_default();
            if left.len() != right.len() {
                return Err(LeightonError::Internal(format!("unbalanced end pair ({x},{y})")));
            }
            left.shuffle(&mut rng);
            right.shuffle(&mut rng);
            for i in left {
                let ci = uf.find(vindex[ports[i].0.vertex.as_str()]);
                let pos = right
                    .iter()
                    .position(|&j| uf.find(vindex[ports[j].0.vertex.as_str()]) != ci)
                    .unwrap_or(0);
                let j = right.remove(pos);
                uf.union(vindex[ports[i].0.vertex.as_str()], vindex[ports[j].0.vertex.as_str()]);
                edges.push((i, j));
            }
        }
        for (k, &(i, j)) in edges.iter().enumerate() {
            let eid = format!("e{}", k + 1);
            let (pi, xi, yi) = &ports[i];
            let (pj, xj, yj) = &ports[j];
            c.add_edge(&eid, pi.clone(), pj.clone());
            p.edge_map.insert(eid.clone(), la.edge_ids[xi / 2].clone());
            q.edge_map.insert(eid.clone(), lb.edge_ids[yi / 2].clone());
            p.port_map.insert(pi.clone(), port_of(la, a, *xi));
            p.port_map.insert(pj.clone(), port_of(la, a, *xj));
            q.port_map.insert(pi.clone(), port_of(lb, b, *yi));
            q.port_map.insert(pj.clone(), port_of(lb, b, *yj));
        }
        let (c, p, q) = seed_component(c, p, q, self.cat)?;
        for (m, target) in [(&p, a), (&q, b)] {
            let r = verify_cover(m, &c, target, self.cat);
            if !r.is_ok() {
                return Err(LeightonError::Internal(format!("constructed leg {} fails: {r}", m.id)));
            }
        }
        Ok((c, p, q))
    }
}

fn empty_map(id: &str, source: &str, target: &str, n: u64) -> CoveringMap {
    CoveringMap {
        id: id.to_string(),
        source: source.to_string(),
        target: target.to_string(),
        total_degree: n,
        vertex_map: BTreeMap::new(),
        local_degree: BTreeMap::new(),
        slot_map: BTreeMap::new(),
        edge_map: BTreeMap::new(),
        port_map: BTreeMap::new(),
    }
}

fn seed_component(
    c: Descriptor,
    p: CoveringMap,
    q: CoveringMap,
    cat: &Catalog,
) -> Result<(Descriptor, CoveringMap, CoveringMap), LeightonError> {
    let layout = Layout::new(&c, cat).map_err(|e| LeightonError::Internal(e.0))?;
    if layout.is_connected() {
        return Ok((c, p, q));
    }
    let root = c.vertices[0].id.clone();
    let internal = |e: crate::covers::CoverError| LeightonError::Internal(e.to_string());
    let (c2, p2) = restrict_to_component(&c, &p, cat, &root).map_err(internal)?;
    let (_, q2) = restrict_to_component(&c, &q, cat, &root).map_err(internal)?;
    Ok((c2, p2, q2))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx != ry {
            self.0[rx.max(ry)] = rx.min(ry);
        }
    }
}

/// Index data and per-atom volume and Euler identities of a common cover.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub degrees: (u64, u64),
    /// `(atom, vol(c), N_a · vol(a), N_b · vol(b))`
    pub volumes: Vec<(String, Rational, Rational, Rational)>,
    pub euler: (Rational, Rational, Rational),
}

impl WitnessReport {
    pub fn holds(&self) -> bool {
        self.volumes.iter().all(|(_, c, a, b)| c == a && c == b) && self.euler.0 == self.euler.1 && self.euler.0 == self.euler.2
    }
}

impl fmt::Display for WitnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {}", "index_a", self.degrees.0)?;
        writeln!(f, "{:<12} {}", "index_b", self.degrees.1)?;
        for (t, c, a, b) in &self.volumes {
            writeln!(f, "{:<12} {} = {} = {}", format!("volume[{t}]"), c, a, b)?;
        }
        writeln!(f, "{:<12} {} = {} = {}", "euler", self.euler.0, self.euler.1, self.euler.2)?;
        write!(f, "verdict={}", if self.holds() { "ok" } else { "violated" })
    }
}

pub fn commensurating_witness(
    cc: &CommonCover,
    a: &Descriptor,
    b: &Descriptor,
    cat: &Catalog,
) -> Result<WitnessReport, LeightonError> {
    let (na, nb) = cc.degrees;
    let (ra, rb) = (Rational::from_integer(na.into()), Rational::from_integer(nb.into()));
    let vc = total_volume_by_atom(&cc.c, cat)?;
    let va = total_volume_by_atom(a, cat)?;
    let vb = total_volume_by_atom(b, cat)?;
    let mut atoms: Vec<&String> = vc.keys().chain(va.keys()).chain(vb.keys()).collect();
    atoms.sort();
    atoms.dedup();
    let zero = Rational::from_integer(0.into());
    let volumes = atoms
        .into_iter()
        .map(|t| {
            let get = |m: &BTreeMap<String, Rational>| m.get(t).cloned().unwrap_or_else(|| zero.clone());
            (t.clone(), get(&vc), &ra * get(&va), &rb * get(&vb))
        })
        .collect();
    let euler = (euler(&cc.c, cat)?, &ra * euler(a, cat)?, &rb * euler(b, cat)?);
    Ok(WitnessReport { degrees: cc.degrees, volumes, euler })
}

impl CommonCover {
    /// Document with the catalog, `a`, `b`, `c` and both covering maps.
    pub fn to_document(&self, cat: &Catalog, a: &Descriptor, b: &Descriptor) -> Document {
        let mut descriptors = vec![a.clone()];
        if b.id != a.id {
            descriptors.push(b.clone());
        }
        if descriptors.iter().all(|d| d.id != self.c.id) {
            descriptors.push(self.c.clone());
        }
        let mut ladder = String::new();
        for r in &self.ladder {
            let _ = write!(ladder, "{}x{}:{},", r.degrees.0, r.degrees.1, r.outcome);
        }
        ladder.pop();
        let mut covers = vec![self.p.clone()];
        if self.q.id != self.p.id {
            covers.push(self.q.clone());
        }
        Document {
            catalog: cat.clone(),
            descriptors,
            covers,
            records: vec![Record::new(
                "summary",
                vec![
                    format!("index_a={}", self.degrees.0),
                    format!("index_b={}", self.degrees.1),
                    format!("ladder={ladder}"),
                ],
            )],
        }
    }
}
