pub mod ingest;
pub mod meta;
pub mod portfolio;
