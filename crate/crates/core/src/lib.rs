pub mod action;
pub mod aut;
pub mod blowup;
pub mod complex;
pub mod gos;
pub mod graph;
pub mod group;
pub mod imprim;
pub mod leighton;
pub mod perm;
pub mod structure;
pub mod voltage;
