pub mod errors;
pub mod fit;
pub mod report;
pub mod score;
pub mod scos;
pub mod synth;
