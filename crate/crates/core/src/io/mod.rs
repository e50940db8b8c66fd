//! Configuration files and field output.

pub mod config;
pub mod fields;

pub use config::{
    parse_config, parse_config_with, OutputFormat, Provenance, ResolvedConfig, Settings,
};
pub use fields::{
    fields_csv, fields_vtk, output_path, parse_fields_csv, read_fields_csv, write_fields,
    FieldFormat,
};
