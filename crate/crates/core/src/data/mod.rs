//! Series ingestion, normalization, windowing and stitching.

pub mod csv_io;
pub mod frame;
pub mod normalize;
pub mod window;

pub use csv_io::{read_csv, read_csv_from, write_csv, write_csv_to};
pub use frame::SeriesFrame;
pub use normalize::{denormalize, normalize, percentile_abs, ScaleRecord};
pub use window::{make_windows, prepare, stitch, Prepared, Window, WindowBatch, WINDOW};
