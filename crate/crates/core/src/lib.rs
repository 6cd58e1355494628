pub mod dataio;
pub mod domain;
pub mod fom;
pub mod selector;
pub mod surrogate;
pub mod sweep;
