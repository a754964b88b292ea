//! Exact arithmetic for mod-p Milnor K-theory symbols over complete discrete
//! valuation fields of mixed characteristic `(0, p)`, and their reduction
//! through pseudo-perfect extensions.

pub mod element;
pub mod error;
pub mod expr;
pub mod field;
pub mod hensel;
pub mod oracle;
pub mod poly;
pub mod pseudo_perfect;
pub mod residue;
pub mod symbols;
pub mod verify;

pub use element::{CdvfElement, ValuationReport};
pub use error::{Error, Result};
pub use hensel::{hensel_root, pth_root_1unit};
pub use oracle::{hilbert2, hilbert_ext, tame_symbol, HilbertValue, IsotropyWitness};
pub use field::{Field, FieldDescriptor, TowerKind, TowerRecord};
pub use pseudo_perfect::{bounds, build_pp_extension, pseudo_rank, BoundsReport, PpExtension, PseudoBasis};
pub use symbols::{MilnorSymbol, SymbolTerm};
