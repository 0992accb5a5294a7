pub mod geometry;
pub mod flows;
pub mod cnf;
pub mod encoder_ls;
pub mod encoder_func;
pub mod encoder_ft;
pub mod engine;
pub mod viz;
pub mod sched;
