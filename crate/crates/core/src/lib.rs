pub mod ccfomi;
pub mod engine;
pub mod harness;
pub mod oracle;
pub mod store;
