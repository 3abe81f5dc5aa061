pub mod assembly;
pub mod domain;
pub mod evolve;
pub mod golden;
pub mod icosian;
pub mod mesh;
pub mod spectra;
