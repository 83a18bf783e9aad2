pub mod cli;
pub mod continuation;
pub mod data;
pub mod error;
pub mod geometry;
pub mod holder;
pub mod linalg;
pub mod poly;
pub mod potential;
pub mod sph;
pub mod system;
