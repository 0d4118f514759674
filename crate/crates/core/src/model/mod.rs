//! Nested types, values, placeholder patterns and the result distance.

pub mod distance;
pub mod nip;
pub mod path;
pub mod types;
pub mod value;

pub use distance::{bag_distance, result_distance};
pub use nip::{generalize, matches, matches_nip, Nip};
pub use path::AttrPath;
pub use types::{NestedType, PrimKind, TupleType};
pub use value::{type_of, Bag, Tuple, Value};
