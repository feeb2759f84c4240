pub mod cli;
pub mod coverage;
pub mod datastore;
pub mod evalsim;
pub mod profile;
pub mod scoring;
pub mod taxonomy;
pub mod treebuild;
