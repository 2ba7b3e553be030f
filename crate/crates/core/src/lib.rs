pub mod budget;
pub mod flow;
pub mod frontend;
pub mod lowering;
pub mod span;
pub mod detector;
pub mod triage;
pub mod pipeline;
pub mod bench;
pub mod report;
pub mod config;
pub mod fetch;
pub mod cli;
