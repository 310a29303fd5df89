pub mod coeff;
pub mod frames;
pub mod func;
pub mod grassmann;
pub mod linalg;
pub mod symalg;
pub mod report;
pub mod scenario;
pub mod spectral;
pub mod superexpr;
