//! Persistence: CSV tables, field dumps, SVG plots, manifests.

pub mod csv;
pub mod dump;
pub mod manifest;
pub mod sink;
pub mod svg;

pub use self::csv::{format_value, parse_csv, parse_trace, trace_table, write_csv, write_csv_file, Table};
pub use dump::{decode_field, encode_field, read_field_dump, write_field_dump, FieldHeader};
pub use manifest::{run_dir_name, RunManifest};
pub use sink::{DirectorySink, SinkLayout, Tee};
pub use svg::{write_svg, LinePlot};
