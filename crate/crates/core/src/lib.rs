//! Cubical sheaf chain complexes over GF(2^e): geometry, local codes, walks,
//! distance measurements and CSS code extraction.

pub mod ff2e;
pub mod builders;
pub mod geometry;
pub mod report;
pub mod cosets;
pub mod sheaf;
pub mod local;
pub mod walks;
pub mod analysis;
pub mod css;
