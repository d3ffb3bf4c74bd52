pub mod bench;
pub mod ddl;
pub mod format;
pub mod session;
