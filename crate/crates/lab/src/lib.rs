pub mod bench;
pub mod io;
