pub mod params;
pub mod trajectory;
mod dopri;
pub mod integrator;
pub mod energy;
pub mod classify;
pub mod shooting;
pub mod json;
pub mod config;
pub mod sweep;
pub mod acceptance;
pub mod cli;
