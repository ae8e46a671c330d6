pub mod agents;
pub mod analytics;
pub mod arith;
pub mod cli;
pub mod config;
pub mod http;
pub mod ingestion;
pub mod numeric;
pub mod retrieval;
pub mod review;
pub mod sandbox;
pub mod workspace;
