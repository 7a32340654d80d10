pub mod bell;
pub mod calibrate;
pub mod knife;
pub mod spectral;
