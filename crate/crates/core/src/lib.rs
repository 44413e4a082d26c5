pub mod ambient;
pub mod chen;
pub mod expr;
pub mod families;
pub mod geom;
pub mod harness;
pub mod jet;
pub mod specfile;
pub mod subman;
