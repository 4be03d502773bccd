pub mod cech;
pub mod cli;
pub mod expr;
pub mod grauert;
pub mod jet;
pub mod oracle;
pub mod surface;
