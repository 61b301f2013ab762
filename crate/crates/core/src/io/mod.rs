//! Text formats, generators and experiment orchestration.

pub mod experiment;
pub mod format;
pub mod generate;

pub use experiment::{
    build_setup, noise_field, parse_experiments, run_experiment, write_flow_csv, ExperimentOutcome,
    ExperimentSpec, Setup, Summary,
};
pub use format::{
    graph_file_for, parse_edge_field, parse_graph, parse_graph_file, parse_vertex_field,
    write_edge_field, write_graph, write_vertex_field, GraphFile,
};
pub use generate::{generate, parse_pgm, read_pgm, GraphKind, Generated, Pgm};
