//! Small finite permutation groups by explicit element enumeration.
//!
//! Groups are materialized as sorted element lists with a hard order cap, which
//! keeps subgroup intersection and conjugation plain set operations.

mod torsion;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub use torsion::{torsion_free_cover, GraphOfFiniteGroups, TorsionFreeCover};

pub const DEFAULT_ORDER_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("group order exceeds cap {cap}")]
    CapExceeded { cap: usize },
    #[error("permutation degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("not a subgroup: {0}")]
    NotASubgroup(String),
}

/// A permutation of `{0, .., n-1}` stored as its image table.
///
/// Cycle notation in and out is 1-based: `(1 2 3)(4 5)`, identity `()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Vec<u32>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n as u32).collect())
    }

    pub fn from_images(images: Vec<u32>) -> Result<Self, GroupError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            let i = i as usize;
            if i >= n || seen[i] {
                return Err(GroupError::InvalidPermutation(format!("{images:?}")));
            }
            seen[i] = true;
        }
        Ok(Perm(images))
    }

    /// The n-cycle `0 -> 1 -> .. -> n-1 -> 0`.
    pub fn cycle(n: usize) -> Self {
        Perm((0..n as u32).map(|i| (i + 1) % n as u32).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    /// Composition applying `self` first, then `other`.
    pub fn then(&self, other: &Perm) -> Perm {
        Perm(self.0.iter().map(|&i| other.0[i as usize]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0u32; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j as usize] = i as u32;
        }
        Perm(inv)
    }

    /// `g^-1 self g`, i.e. relabel by `g`.
    pub fn conjugate_by(&self, g: &Perm) -> Perm {
        g.inverse().then(self).then(g)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i as u32 == j)
    }

    pub fn pow(&self, k: usize) -> Perm {
        let mut acc = Perm::identity(self.degree());
        for _ in 0..k {
            acc = acc.then(self);
        }
        acc
    }

    pub fn order(&self) -> usize {
        let mut acc = self.clone();
        let mut k = 1;
        while !acc.is_identity() {
            acc = acc.then(self);
            k += 1;
        }
        k
    }

    /// Parses 1-based cycle notation on `n` points.
    pub fn parse_cycles(text: &str, n: usize) -> Result<Perm, GroupError> {
        let bad = || GroupError::InvalidPermutation(text.to_string());
        let mut images: Vec<u32> = (0..n as u32).collect();
        let mut seen = vec![false; n];
        let mut rest = text.trim();
        while !rest.is_empty() {
            let open = rest.strip_prefix('(').ok_or_else(bad)?;
            let close = open.find(')').ok_or_else(bad)?;
            let body = &open[..close];
            rest = open[close + 1..].trim_start();
            let points: Vec<usize> = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            for &p in &points {
                if p == 0 || p > n || seen[p - 1] {
                    return Err(bad());
                }
                seen[p - 1] = true;
            }
            for (k, &p) in points.iter().enumerate() {
                let next = points[(k + 1) % points.len()];
                images[p - 1] = (next - 1) as u32;
            }
        }
        Ok(Perm(images))
    }

    /// Largest point moved, 1-based, as a lower bound on the degree of `text`.
    pub fn max_point(text: &str) -> usize {
        text.split(|c: char| !c.is_ascii_digit())
            .filter_map(|t| t.parse::<usize>().ok())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut wrote = false;
        for start in 0..n {
            if seen[start] || self.0[start] as usize == start {
                continue;
            }
            write!(f, "(")?;
            let mut i = start;
            let mut first = true;
            loop {
                seen[i] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}", i + 1)?;
                first = false;
                i = self.0[i] as usize;
                if i == start {
                    break;
                }
            }
            write!(f, ")")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "()")?;
        }
        Ok(())
    }
}

/// A finite permutation group with its full element list materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Perm>,
    elements: Vec<Perm>,
}

impl PermGroup {
    pub fn trivial(degree: usize) -> Self {
        PermGroup { degree, generators: Vec::new(), elements: vec![Perm::identity(degree)] }
    }

    /// Builds a group from an element set already known to be closed.
    fn from_closed(degree: usize, elements: BTreeSet<Perm>) -> Self {
        let elements: Vec<Perm> = elements.into_iter().collect();
        let generators = greedy_generators(degree, &elements);
        PermGroup { degree, generators, elements }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &PermGroup) -> bool {
        self.degree == other.degree && self.elements.iter().all(|e| other.contains(e))
    }

    pub fn is_normal_in(&self, other: &PermGroup) -> bool {
        self.is_subgroup_of(other)
            && other
                .generators
                .iter()
                .all(|g| self.elements.iter().all(|h| self.contains(&h.conjugate_by(g))))
    }

    pub fn index_in(&self, other: &PermGroup) -> usize {
        other.order() / self.order()
    }

    /// `g^-1 H g`.
    pub fn conjugate(&self, g: &Perm) -> PermGroup {
        let elements: BTreeSet<Perm> = self.elements.iter().map(|h| h.conjugate_by(g)).collect();
        PermGroup::from_closed(self.degree, elements)
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }
}

/// Picks generators from `elements` in sorted order, skipping those already generated.
fn greedy_generators(degree: usize, elements: &[Perm]) -> Vec<Perm> {
    let mut gens: Vec<Perm> = Vec::new();
    let mut span: BTreeSet<Perm> = BTreeSet::new();
    span.insert(Perm::identity(degree));
    for e in elements {
        if span.contains(e) {
            continue;
        }
        gens.push(e.clone());
        span = closure_set(degree, &gens, usize::MAX).expect("subset of a finite group");
    }
    gens
}

fn closure_set(degree: usize, gens: &[Perm], cap: usize) -> Result<BTreeSet<Perm>, GroupError> {
    let mut seen: BTreeSet<Perm> = BTreeSet::new();
    let id = Perm::identity(degree);
    let mut queue = VecDeque::new();
    seen.insert(id.clone());
    queue.push_back(id);
    while let Some(e) = queue.pop_front() {
        for g in gens {
            let next = e.then(g);
            if !seen.contains(&next) {
                if seen.len() >= cap {
                    return Err(GroupError::CapExceeded { cap });
                }
                seen.insert(next.clone());
                queue.push_back(next);
            }
        }
    }
    Ok(seen)
}

/// Breadth-first closure of `gens` under composition.
pub fn closure(degree: usize, gens: &[Perm], cap: usize) -> Result<PermGroup, GroupError> {
    for g in gens {
        if g.degree() != degree {
            return Err(GroupError::DegreeMismatch { expected: degree, found: g.degree() });
        }
    }
    let elements: Vec<Perm> = closure_set(degree, gens, cap)?.into_iter().collect();
    let generators = gens.iter().filter(|g| !g.is_identity()).cloned().collect();
    Ok(PermGroup { degree, generators, elements })
}

/// Subgroup of `k` with the given element set, checking closure.
pub fn subgroup_from_elements(k: &PermGroup, elements: BTreeSet<Perm>) -> Result<PermGroup, GroupError> {
    for e in &elements {
        if !k.contains(e) {
            return Err(GroupError::NotASubgroup(format!("{e} not in group")));
        }
        for f in &elements {
            if !elements.contains(&e.then(f)) {
                return Err(GroupError::NotASubgroup("not closed".into()));
            }
        }
    }
    Ok(PermGroup::from_closed(k.degree, elements))
}

/// Largest normal subgroup of `k` contained in `h`.
///
/// Computed as the largest subset of `h` stable under conjugation by the
/// generators of `k`; this set is exactly the intersection of all conjugates.
pub fn normal_core(k: &PermGroup, h: &PermGroup) -> Result<PermGroup, GroupError> {
    if !h.is_subgroup_of(k) {
        return Err(GroupError::NotASubgroup("H is not contained in K".into()));
    }
    let mut current: BTreeSet<Perm> = h.elements.iter().cloned().collect();
    loop {
        let next: BTreeSet<Perm> = current
            .iter()
            .filter(|x| k.generators.iter().all(|g| current.contains(&x.conjugate_by(g))))
            .cloned()
            .collect();
        if next.len() == current.len() {
            break;
        }
        current = next;
    }
    Ok(PermGroup::from_closed(k.degree, current))
}

/// Intersection of subgroups of `k`. An empty list yields `k` itself.
pub fn intersect_all(k: &PermGroup, subgroups: &[PermGroup]) -> Result<PermGroup, GroupError> {
    for h in subgroups {
        if !h.is_subgroup_of(k) {
            return Err(GroupError::NotASubgroup("subgroup not contained in K".into()));
        }
    }
    let elements: BTreeSet<Perm> = k
        .elements
        .iter()
        .filter(|e| subgroups.iter().all(|h| h.contains(e)))
        .cloned()
        .collect();
    Ok(PermGroup::from_closed(k.degree, elements))
}

/// Action of `k` on the left cosets `xH` by left multiplication.
#[derive(Debug, Clone)]
pub struct CosetAction {
    /// Coset representatives; coset `i` is `reps[i] H`.
    pub reps: Vec<Perm>,
    /// Image in `Sym(index)` of each generator of `k`.
    pub generator_images: Vec<Perm>,
    pub kernel: PermGroup,
    lookup: HashMap<Perm, usize>,
}

impl CosetAction {
    pub fn index(&self) -> usize {
        self.reps.len()
    }

    /// Image of an arbitrary element of `k`. Panics if `g` does not normalize the coset table.
    pub fn image(&self, g: &Perm) -> Perm {
        let images = self
            .reps
            .iter()
            .map(|r| self.lookup[&g_times(g, r)] as u32)
            .collect();
        Perm(images)
    }

    pub fn coset_of(&self, x: &Perm) -> usize {
        self.lookup[x]
    }

    pub fn image_group(&self) -> Result<PermGroup, GroupError> {
        closure(self.index(), &self.generator_images, DEFAULT_ORDER_CAP)
    }
}

/// Group product `g * r` in the convention "apply r first, then g", matching left cosets `g(rH)`.
fn g_times(g: &Perm, r: &Perm) -> Perm {
    r.then(g)
}

pub fn coset_action(k: &PermGroup, h: &PermGroup) -> Result<CosetAction, GroupError> {
    if !h.is_subgroup_of(k) {
        return Err(GroupError::NotASubgroup("H is not contained in K".into()));
    }
    // left coset xH = { x*h } = { h then x }
    let mut lookup: HashMap<Perm, usize> = HashMap::new();
    let mut reps: Vec<Perm> = Vec::new();
    for x in &k.elements {
        if lookup.contains_key(x) {
            continue;
        }
        let idx = reps.len();
        for hh in &h.elements {
            lookup.insert(g_times(x, hh), idx);
        }
        reps.push(x.clone());
    }
    let action = |g: &Perm| -> Perm {
        Perm(reps.iter().map(|r| lookup[&g_times(g, r)] as u32).collect())
    };
    let generator_images: Vec<Perm> = k.generators.iter().map(action).collect();
    let kernel_elements: BTreeSet<Perm> =
        k.elements.iter().filter(|g| action(g).is_identity()).cloned().collect();
    let kernel = PermGroup::from_closed(k.degree, kernel_elements);
    Ok(CosetAction { reps, generator_images, kernel, lookup })
}

/// Cyclic group of order `n` acting regularly on `n` points.
pub fn cyclic(n: usize) -> PermGroup {
    closure(n, &[Perm::cycle(n)], DEFAULT_ORDER_CAP).expect("cyclic group")
}

/// Dihedral group of order `2n` acting on the vertices of an n-gon.
pub fn dihedral(n: usize) -> PermGroup {
    let rotation = Perm::cycle(n);
    let reflection = Perm((0..n as u32).map(|i| (n as u32 - i) % n as u32).collect());
    closure(n, &[rotation, reflection], DEFAULT_ORDER_CAP).expect("dihedral group")
}

pub fn symmetric(n: usize) -> PermGroup {
    let mut gens = vec![Perm::cycle(n)];
    if n > 1 {
        let mut t: Vec<u32> = (0..n as u32).collect();
        t.swap(0, 1);
        gens.push(Perm(t));
    }
    closure(n, &gens, DEFAULT_ORDER_CAP).expect("symmetric group")
}

pub fn alternating(n: usize) -> PermGroup {
    let gens: Vec<Perm> = (2..n)
        .map(|k| {
            let mut t: Vec<u32> = (0..n as u32).collect();
            t[0] = 1;
            t[1] = k as u32;
            t[k] = 0;
            Perm(t)
        })
        .collect();
    closure(n, &gens, DEFAULT_ORDER_CAP).expect("alternating group")
}

/// Quaternion group of order 8 in its regular representation.
pub fn quaternion() -> PermGroup {
    // elements indexed: 0=1, 1=-1, 2=i, 3=-i, 4=j, 5=-j, 6=k, 7=-k
    let mul = |a: usize, b: usize| -> usize {
        let sign = (a % 2) ^ (b % 2);
        let (ua, ub) = (a / 2, b / 2); // 0=1, 1=i, 2=j, 3=k
        let (unit, s) = match (ua, ub) {
            (0, u) => (u, 0),
            (u, 0) => (u, 0),
            (x, y) if x == y => (0, 1),
            (1, 2) => (3, 0),
            (2, 3) => (1, 0),
            (3, 1) => (2, 0),
            (2, 1) => (3, 1),
            (3, 2) => (1, 1),
            (1, 3) => (2, 1),
            _ => unreachable!(),
        };
        unit * 2 + (sign ^ s)
    };
    // right regular action x -> x * g
    let gen = |g: usize| Perm((0..8).map(|x| mul(x, g) as u32).collect());
    closure(8, &[gen(2), gen(4)], DEFAULT_ORDER_CAP).expect("quaternion group")
}

/// Every subgroup of `k` generated by at most two elements, deduplicated.
pub fn two_generated_subgroups(k: &PermGroup) -> Vec<PermGroup> {
    let mut found: BTreeMap<Vec<Perm>, PermGroup> = BTreeMap::new();
    for (i, a) in k.elements.iter().enumerate() {
        for b in &k.elements[i..] {
            let g = closure(k.degree, &[a.clone(), b.clone()], DEFAULT_ORDER_CAP).expect("subgroup");
            found.entry(g.elements.clone()).or_insert(g);
        }
    }
    found.into_values().collect()
}
