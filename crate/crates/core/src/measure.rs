//! Exact volume and Euler characteristic bookkeeping.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Catalog, Descriptor, VertexInstance};
use crate::rational::{int, ratio, zero, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("unknown atom {0}")]
    UnknownAtom(String),
    #[error("atom {0} has no basechi")]
    MissingBaseEuler(String),
    #[error("atom {0} has no l2 profile")]
    MissingL2Profile(String),
    #[error("group {0} is invalid")]
    BadGroup(String),
}

/// Order of the finite group sitting at a point vertex, 1 when none is declared.
pub fn point_group_order(v: &VertexInstance, cat: &Catalog) -> Result<usize, MeasureError> {
    let Some(atom) = cat.atom(&v.atom) else {
        return Err(MeasureError::UnknownAtom(v.atom.clone()));
    };
    match (&v.group, atom.is_point()) {
        (Some(gid), true) => {
            let decl = cat.groups.get(gid).ok_or_else(|| MeasureError::BadGroup(gid.clone()))?;
            let datum = decl.build().map_err(|_| MeasureError::BadGroup(gid.clone()))?;
            Ok(datum.group.order())
        }
        _ => Ok(1),
    }
}

pub fn vertex_volume(v: &VertexInstance, cat: &Catalog) -> Result<Rational, MeasureError> {
    let atom = cat.atom(&v.atom).ok_or_else(|| MeasureError::UnknownAtom(v.atom.clone()))?;
    if atom.is_point() {
        return Ok(ratio(1, point_group_order(v, cat)? as i64));
    }
    Ok(&atom.base_volume * int(v.degree as i64))
}

pub fn vertex_euler(v: &VertexInstance, cat: &Catalog) -> Result<Rational, MeasureError> {
    let atom = cat.atom(&v.atom).ok_or_else(|| MeasureError::UnknownAtom(v.atom.clone()))?;
    if atom.is_point() {
        return Ok(ratio(1, point_group_order(v, cat)? as i64));
    }
    let chi = atom.effective_euler().ok_or_else(|| MeasureError::MissingBaseEuler(atom.id.clone()))?;
    Ok(chi * int(v.degree as i64))
}

/// Euler characteristic of the graph of spaces: vertex terms minus the edge count.
pub fn euler(d: &Descriptor, cat: &Catalog) -> Result<Rational, MeasureError> {
    let mut chi = zero();
    for v in &d.vertices {
        chi += vertex_euler(v, cat)?;
    }
    Ok(chi - int(d.edges.len() as i64))
}

/// Total volume per atom id, over every atom that occurs in `d`.
pub fn total_volume_by_atom(d: &Descriptor, cat: &Catalog) -> Result<BTreeMap<String, Rational>, MeasureError> {
    let mut out: BTreeMap<String, Rational> = BTreeMap::new();
    for v in &d.vertices {
        let vol = vertex_volume(v, cat)?;
        *out.entry(v.atom.clone()).or_insert_with(zero) += vol;
    }
    Ok(out)
}
