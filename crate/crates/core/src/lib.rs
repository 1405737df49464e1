//! One-bounce global illumination with spherical-harmonics virtual lights.

pub mod brdf;
pub mod image;
pub mod lights;
pub mod math;
pub mod render;
pub mod scene;
pub mod sh;
pub mod shading;
