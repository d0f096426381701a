pub mod dilog;
pub mod homology;
pub mod invariants;
pub mod prebloch;
pub mod triangulation;
