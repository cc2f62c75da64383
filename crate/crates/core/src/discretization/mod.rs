//! Fourier × Chebyshev discretisation of the flattened slab.

pub mod chebyshev;
pub mod field;
pub mod grid;
pub mod norms;

pub use chebyshev::Chebyshev;
pub use field::{dot, dot_surface, traces, BulkField, SurfaceFunction};
pub use grid::Grid;
