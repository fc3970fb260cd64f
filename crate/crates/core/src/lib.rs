pub mod baseline;
pub mod exec;
pub mod experiment;
pub mod fd;
pub mod gp;
pub mod kernel;
pub mod operator;
