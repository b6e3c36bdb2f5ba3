pub mod matrix;
pub mod basis;
pub mod expr;
pub mod charpoly;
pub mod field;
pub mod symmetry;
pub mod tables;
pub mod epfinder;
pub mod dispersion;
pub mod models;
