//! Decorated graphs of spaces, their finite covers, and the commensurability toolkit built on them.

pub mod build;
pub mod covers;
pub mod format;
pub mod invariants;
pub mod leighton;
pub mod measure;
pub mod model;
pub mod permgrp;
pub mod pipeline;
pub mod rational;
pub mod treespace;
pub mod validate;

pub use covers::CoveringMap;
pub use model::{AtomKind, AtomType, Catalog, Descriptor, Edge, Field, Layout, PegClass, PortRef, VertexInstance};
pub use rational::Rational;
