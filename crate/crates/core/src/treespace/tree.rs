//! The lazily expanded decorated tree, balls, canonical ball codes and local realizability.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::RwLock;

use num_integer::Integer;

use super::{hash_str, TreeError};
use crate::measure::point_group_order;
use crate::model::{Catalog, Descriptor, Layout};

/// One edge crossing: `(slot index at the vertex, slot copy, port)`.
pub type Step = (u32, u32, u32);
/// Reduced word of steps from the root.
pub type Address = Vec<Step>;
/// Partial map between tree nodes, by address.
pub type TreeMap = BTreeMap<Address, Address>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decoration {
    pub atom: String,
    pub lifted_degree: u64,
    pub torsion: u64,
}

impl Decoration {
    fn words(&self) -> [u64; 3] {
        [hash_str(&self.atom), self.lifted_degree, self.torsion]
    }
}

/// Universal cover of a descriptor's underlying graph, decorated by vertex spaces.
///
/// A vertex `v` of atom `t` appears with `m_v = D_t / d_v` copies of each slot, where `D_t` is the
/// lifted degree of `t`. With `m_v = 1` everywhere the tree is the plain universal cover.
pub struct DecoratedTree {
    pub base_id: String,
    layout: Layout,
    multiplicity: Vec<u64>,
    decoration: Vec<Decoration>,
    root: usize,
    cache: RwLock<HashMap<Address, (usize, Option<usize>)>>,
}

impl DecoratedTree {
    /// Tree with every atom lifted to the lcm of its degrees in `d` and, if given, in `others`.
    pub fn lifted(d: &Descriptor, cat: &Catalog, others: &[&Descriptor]) -> Result<Self, TreeError> {
        let mut lift: BTreeMap<String, u64> = BTreeMap::new();
        for x in std::iter::once(d).chain(others.iter().copied()) {
            for v in &x.vertices {
                let e = lift.entry(v.atom.clone()).or_insert(1);
                *e = e.lcm(&v.degree.max(1));
            }
        }
        Self::build(d, cat, Some(&lift))
    }

    /// Tree without slot copies; decorations carry each vertex's own degree.
    pub fn unlifted(d: &Descriptor, cat: &Catalog) -> Result<Self, TreeError> {
        Self::build(d, cat, None)
    }

    fn build(d: &Descriptor, cat: &Catalog, lift: Option<&BTreeMap<String, u64>>) -> Result<Self, TreeError> {
        let layout = Layout::new(d, cat).map_err(|e| TreeError::Invalid(e.0))?;
        if layout.num_vertices() == 0 {
            return Err(TreeError::Invalid("empty descriptor".into()));
        }
        let mut multiplicity = Vec::new();
        let mut decoration = Vec::new();
        for v in &d.vertices {
            let torsion = point_group_order(v, cat).map_err(|e| TreeError::Invalid(e.to_string()))? as u64;
            let (m, lifted) = match lift {
                Some(map) => {
                    let big = map.get(&v.atom).copied().unwrap_or(v.degree);
                    if v.degree == 0 || big % v.degree != 0 {
                        return Err(TreeError::Invalid(format!("lift {big} not a multiple of {}", v.degree)));
                    }
                    (big / v.degree, big)
                }
                None => (1, v.degree),
            };
            multiplicity.push(m);
            decoration.push(Decoration { atom: v.atom.clone(), lifted_degree: lifted, torsion });
        }
        Ok(DecoratedTree {
            base_id: d.id.clone(),
            layout,
            multiplicity,
            decoration,
            root: 0,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn decoration_of_vertex(&self, v: usize) -> &Decoration {
        &self.decoration[v]
    }

    pub fn multiplicity(&self, v: usize) -> u64 {
        self.multiplicity[v]
    }

    /// End taken by `step` at vertex `v`, if the step exists.
    fn end_of_step(&self, v: usize, step: Step) -> Option<usize> {
        let (si, copy, port) = step;
        let slot = *self.layout.vertex_slots[v].get(si as usize)?;
        if u64::from(copy) >= self.multiplicity[v] {
            return None;
        }
        self.layout.slot_ends[slot].iter().copied().find(|&e| self.layout.end_port[e] == port)
    }

    fn step_of_end(&self, end: usize, copy: u32) -> Step {
        let slot = self.layout.end_slot[end];
        let v = self.layout.slots[slot].vertex;
        let si = self.layout.vertex_slots[v].iter().position(|&s| s == slot).expect("slot at vertex");
        (si as u32, copy, self.layout.end_port[end])
    }

    /// Base vertex and entry end of a node.
    pub fn resolve(&self, address: &Address) -> Result<(usize, Option<usize>), TreeError> {
        if let Some(hit) = self.cache.read().expect("cache lock").get(address) {
            return Ok(*hit);
        }
        let mut v = self.root;
        let mut entry: Option<usize> = None;
        for (k, &step) in address.iter().enumerate() {
            let end = self
                .end_of_step(v, step)
                .ok_or_else(|| TreeError::Address(format!("step {k} {step:?} does not exist")))?;
            if step.1 == 0 && entry == Some(end) {
                return Err(TreeError::Address(format!("step {k} backtracks")));
            }
            let opp = Layout::opposite(end);
            v = self.layout.end_vertex(opp);
            entry = Some(opp);
        }
        self.cache.write().expect("cache lock").insert(address.clone(), (v, entry));
        Ok((v, entry))
    }

    /// Node reached from `address` through `end` (an end at the node's vertex) in slot copy `copy`.
    pub fn step_through(&self, address: &Address, end: usize, copy: u32) -> Result<Address, TreeError> {
        let (v, entry) = self.resolve(address)?;
        if self.layout.end_vertex(end) != v {
            return Err(TreeError::Address("end is not at this node".into()));
        }
        let mut out = address.clone();
        if copy == 0 && entry == Some(end) {
            out.pop();
        } else {
            out.push(self.step_of_end(end, copy));
        }
        Ok(out)
    }

    /// Neighbours of a node grouped as `(slot, copy, end, neighbour address)`.
    fn neighbours(&self, address: &Address) -> Result<Vec<(usize, u32, usize, Address)>, TreeError> {
        let (v, entry) = self.resolve(address)?;
        let mut out = Vec::new();
        for &s in &self.layout.vertex_slots[v] {
            for copy in 0..self.multiplicity[v] as u32 {
                for &end in &self.layout.slot_ends[s] {
                    let next = if copy == 0 && entry == Some(end) {
                        let mut up = address.clone();
                        up.pop();
                        up
                    } else {
                        let mut down = address.clone();
                        down.push(self.step_of_end(end, copy));
                        down
                    };
                    out.push((s, copy, end, next));
                }
            }
        }
        Ok(out)
    }

    /// Shortest address of some lift of base vertex `target`.
    pub fn address_of_vertex(&self, target: usize) -> Address {
        let mut prev: Vec<Option<usize>> = vec![None; self.layout.num_vertices()];
        let mut seen = vec![false; self.layout.num_vertices()];
        seen[self.root] = true;
        let mut queue = VecDeque::from([self.root]);
        while let Some(v) = queue.pop_front() {
            for &s in &self.layout.vertex_slots[v] {
                for &end in &self.layout.slot_ends[s] {
                    let w = self.layout.end_vertex(Layout::opposite(end));
                    if !seen[w] {
                        seen[w] = true;
                        prev[w] = Some(end);
                        queue.push_back(w);
                    }
                }
            }
        }
        let mut ends = Vec::new();
        let mut v = target;
        while let Some(end) = prev[v] {
            ends.push(end);
            v = self.layout.end_vertex(end);
        }
        ends.reverse();
        ends.into_iter().map(|e| self.step_of_end(e, 0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotGroup {
    pub slot: usize,
    pub copy: u32,
    pub peg: Option<String>,
    /// The group holds the port leading back toward the center.
    pub has_parent: bool,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallNode {
    pub address: Address,
    pub vertex: usize,
    pub depth: usize,
    pub decoration: Decoration,
    /// Empty at the boundary of the ball.
    pub groups: Vec<SlotGroup>,
}

/// The radius-`R` ball around a tree node; `nodes[0]` is the center.
#[derive(Debug, Clone)]
pub struct BallView {
    pub center: Address,
    pub radius: usize,
    pub nodes: Vec<BallNode>,
}

pub fn ball(t: &DecoratedTree, center: &Address, radius: usize) -> Result<BallView, TreeError> {
    let (v0, _) = t.resolve(center)?;
    let mut nodes = vec![BallNode {
        address: center.clone(),
        vertex: v0,
        depth: 0,
        decoration: t.decoration[v0].clone(),
        groups: Vec::new(),
    }];
    let mut parent_of: Vec<Option<Address>> = vec![None];
    let mut i = 0;
    while i < nodes.len() {
        if nodes[i].depth < radius {
            let addr = nodes[i].address.clone();
            let mut groups: Vec<SlotGroup> = Vec::new();
            for (slot, copy, _end, next) in t.neighbours(&addr)? {
                let gi = match groups.iter().position(|g| g.slot == slot && g.copy == copy) {
                    Some(gi) => gi,
                    None => {
                        groups.push(SlotGroup {
                            slot,
                            copy,
                            peg: t.layout.slots[slot].peg.clone(),
                            has_parent: false,
                            children: Vec::new(),
                        });
                        groups.len() - 1
                    }
                };
                if parent_of[i].as_ref() == Some(&next) {
                    groups[gi].has_parent = true;
                    continue;
                }
                let (w, _) = t.resolve(&next)?;
                groups[gi].children.push(nodes.len());
                nodes.push(BallNode {
                    address: next,
                    vertex: w,
                    depth: nodes[i].depth + 1,
                    decoration: t.decoration[w].clone(),
                    groups: Vec::new(),
                });
                parent_of.push(Some(addr.clone()));
            }
            nodes[i].groups = groups;
        }
        i += 1;
    }
    Ok(BallView { center: center.clone(), radius, nodes })
}

fn peg_word(peg: &Option<String>) -> u64 {
    match peg {
        Some(p) => hash_str(p),
        None => 0x4040,
    }
}

impl BallView {
    pub fn index_of(&self, address: &Address) -> Option<usize> {
        self.nodes.iter().position(|n| &n.address == address)
    }

    /// Canonical code in the interner of `coder`; equal codes mean isomorphic balls.
    pub fn code(&self, coder: &mut BallCoder) -> u32 {
        self.node_code(0, coder)
    }

    fn node_code(&self, i: usize, coder: &mut BallCoder) -> u32 {
        let n = &self.nodes[i];
        let mut words: Vec<u64> = n.decoration.words().to_vec();
        if n.depth == self.radius {
            return coder.intern(words);
        }
        let mut groups: Vec<u64> = Vec::new();
        for g in &n.groups {
            let mut kids: Vec<u64> = g.children.iter().map(|&c| u64::from(self.node_code(c, coder))).collect();
            kids.sort_unstable();
            let mut gw = vec![peg_word(&g.peg), g.has_parent as u64];
            gw.extend(kids);
            groups.push(u64::from(coder.intern(gw)));
        }
        groups.sort_unstable();
        words.extend(groups);
        coder.intern(words)
    }

    /// Indented text dump, one node per line.
    pub fn dump(&self, t: &DecoratedTree) -> String {
        let mut out = String::new();
        self.dump_node(0, 0, t, &mut out);
        out
    }

    fn dump_node(&self, i: usize, indent: usize, t: &DecoratedTree, out: &mut String) {
        let n = &self.nodes[i];
        let _ = writeln!(
            out,
            "{:indent$}{} atom={} deg={} addr={}",
            "",
            t.layout.vertex_ids[n.vertex],
            n.decoration.atom,
            n.decoration.lifted_degree,
            format_address(&n.address),
            indent = indent
        );
        for g in &n.groups {
            for &c in &g.children {
                self.dump_node(c, indent + 2, t, out);
            }
        }
    }
}

pub fn format_address(a: &Address) -> String {
    if a.is_empty() {
        return "/".into();
    }
    a.iter().map(|(s, c, p)| format!("/{s}#{c}.{p}")).collect()
}

/// Memoized canonical codes of balls, shared across trees through one interner.
#[derive(Default)]
pub struct BallCoder {
    interner: HashMap<Vec<u64>, u32>,
    memo: HashMap<(usize, usize, usize, usize), u32>,
}

impl BallCoder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, words: Vec<u64>) -> u32 {
        let next = self.interner.len() as u32;
        *self.interner.entry(words).or_insert(next)
    }

    /// Code of the radius-`k` ball around any lift of vertex `v`. `tree_key` separates memo
    /// entries of different trees.
    pub fn vertex_code(&mut self, t: &DecoratedTree, tree_key: usize, v: usize, k: usize) -> u32 {
        self.code(t, tree_key, v, None, k)
    }

    fn code(&mut self, t: &DecoratedTree, tree_key: usize, v: usize, entry: Option<usize>, k: usize) -> u32 {
        let key = (tree_key, v, entry.unwrap_or(usize::MAX), k);
        if let Some(&c) = self.memo.get(&key) {
            return c;
        }
        let mut words: Vec<u64> = t.decoration[v].words().to_vec();
        if k > 0 {
            let l = &t.layout;
            let mut groups: Vec<u64> = Vec::new();
            for &s in &l.vertex_slots[v] {
                let mut full: Vec<u64> = Vec::new();
                let mut reduced: Vec<u64> = Vec::new();
                let holds_entry = entry.is_some_and(|e| l.end_slot[e] == s);
                for &end in &l.slot_ends[s] {
                    let opp = Layout::opposite(end);
                    let c = u64::from(self.code(t, tree_key, l.end_vertex(opp), Some(opp), k - 1));
                    full.push(c);
                    if Some(end) != entry {
                        reduced.push(c);
                    }
                }
                full.sort_unstable();
                reduced.sort_unstable();
                let peg = peg_word(&l.slots[s].peg);
                let mut copies = t.multiplicity[v];
                if holds_entry {
                    let mut gw = vec![peg, 1];
                    gw.extend(reduced);
                    groups.push(u64::from(self.intern(gw)));
                    copies -= 1;
                }
                let mut gw = vec![peg, 0];
                gw.extend(full);
                let gc = u64::from(self.intern(gw));
                for _ in 0..copies {
                    groups.push(gc);
                }
            }
            groups.sort_unstable();
            words.extend(groups);
        }
        let c = self.intern(words);
        self.memo.insert(key, c);
        c
    }
}

/// Perfect matching between `0..n` and `0..n` under `compat`, by augmenting paths.
fn has_perfect_matching(n: usize, mut compat: impl FnMut(usize, usize) -> bool) -> bool {
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| compat(i, j)).collect()).collect();
    let mut match_right: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], match_right: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if match_right[j].is_none_or(|k| augment(k, adj, seen, match_right)) {
                match_right[j] = Some(i);
                return true;
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &adj, &mut seen, &mut match_right) {
            return false;
        }
    }
    true
}

struct Constrained<'a> {
    a: &'a BallView,
    b: &'a BallView,
    forward: HashMap<usize, usize>,
    backward: HashMap<usize, usize>,
    memo: HashMap<(usize, usize), bool>,
}

impl Constrained<'_> {
    fn matches(&mut self, ia: usize, ib: usize) -> bool {
        if let Some(&r) = self.memo.get(&(ia, ib)) {
            return r;
        }
        let r = self.compute(ia, ib);
        self.memo.insert((ia, ib), r);
        r
    }

    fn compute(&mut self, ia: usize, ib: usize) -> bool {
        let (na, nb) = (&self.a.nodes[ia], &self.b.nodes[ib]);
        if na.decoration != nb.decoration || na.depth != nb.depth {
            return false;
        }
        if self.forward.get(&ia).is_some_and(|&x| x != ib) || self.backward.get(&ib).is_some_and(|&x| x != ia) {
            return false;
        }
        if na.groups.len() != nb.groups.len() {
            return false;
        }
        let ga = na.groups.clone();
        let gb = nb.groups.clone();
        has_perfect_matching(ga.len(), |i, j| {
            let (x, y) = (&ga[i], &gb[j]);
            if x.peg != y.peg || x.has_parent != y.has_parent || x.children.len() != y.children.len() {
                return false;
            }
            has_perfect_matching(x.children.len(), |p, q| self.matches(x.children[p], y.children[q]))
        })
    }
}

/// True iff for every node `x` in the domain of `f` some decoration-preserving isomorphism
/// `B_R(x) -> B_R(f(x))` agrees with `f` on the domain nodes inside `B_R(x)`.
pub fn locally_realizable(a: &DecoratedTree, b: &DecoratedTree, f: &TreeMap, radius: usize) -> Result<bool, TreeError> {
    for (x, fx) in f {
        let ba = ball(a, x, radius)?;
        let bb = ball(b, fx, radius)?;
        let mut forward = HashMap::new();
        let mut backward = HashMap::new();
        for (ia, node) in ba.nodes.iter().enumerate() {
            if let Some(img) = f.get(&node.address) {
                let Some(ib) = bb.index_of(img) else {
                    return Ok(false);
                };
                if backward.insert(ib, ia).is_some() {
                    return Ok(false);
                }
                forward.insert(ia, ib);
            }
        }
        let mut c = Constrained { a: &ba, b: &bb, forward, backward, memo: HashMap::new() };
        if !c.matches(0, 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Tree map induced by an end map of the base graphs, anchored by the image of the root.
///
/// Covers all nodes within `depth` of the root. Both trees must be unlifted.
pub fn map_by_ends(
    source: &DecoratedTree,
    target: &DecoratedTree,
    root_image: &Address,
    end_image: &dyn Fn(usize) -> usize,
    depth: usize,
) -> Result<TreeMap, TreeError> {
    let mut out = TreeMap::new();
    let mut queue = VecDeque::from([(Vec::new(), root_image.clone(), 0usize)]);
    out.insert(Vec::new(), root_image.clone());
    while let Some((addr, img, k)) = queue.pop_front() {
        if k == depth {
            continue;
        }
        let (v, entry) = source.resolve(&addr)?;
        for &s in &source.layout.vertex_slots[v] {
            for &end in &source.layout.slot_ends[s] {
                if entry == Some(end) {
                    continue;
                }
                let child = source.step_through(&addr, end, 0)?;
                let child_img = target.step_through(&img, end_image(end), 0)?;
                out.insert(child.clone(), child_img.clone());
                queue.push_back((child, child_img, k + 1));
            }
        }
    }
    Ok(out)
}
