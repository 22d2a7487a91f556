//! Arithmetic and linear algebra over GF(2^e), and expansion to binary matrices.

pub mod bits;
mod expand;
mod field;
mod matrix;

pub use expand::{f2_expand, f2_expand_in_basis, BinaryMatrix};
pub use field::{is_irreducible, Field, FieldError, Gf};
pub use matrix::{
    kernel_basis, kernel_basis_dense, rank, solve_linear, Blocks, DenseMatrix, FieldMatrix, FieldVector,
    LinalgError, Solver,
};

/// Constructs GF(2^e).
pub fn field_make(e: u32) -> Result<Field, FieldError> {
    Field::new(e)
}
