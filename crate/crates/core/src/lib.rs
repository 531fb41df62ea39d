pub mod compile;
pub mod config;
pub mod field;
pub mod gadgets;
pub mod proj;
pub mod render;
pub mod slp;
pub mod verify;
