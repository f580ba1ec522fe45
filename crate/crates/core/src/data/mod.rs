//! Record ingestion, cleaning, feature encoding, windowing and splitting.

mod clean;
mod correlation;
mod csv_io;
mod features;
mod pipeline;
mod record;
mod synthetic;
mod windows;

pub use clean::{clean, CleanReport};
pub use correlation::{correlation_matrix, CorrelationMatrix, DEFAULT_CORRELATION_COLUMNS};
pub use csv_io::{load_csv, read_csv, save_csv, write_csv, LoadReport};
pub use features::{fit_feature_spec, mean_std, ColumnStats, FeatureSpec};
pub use pipeline::{prepare, prepare_with_spec, training_rows, PreparedData};
pub use record::{AvocadoType, Column, NumericColumn, RawRecord, RecordTable, SENTINEL};
pub use synthetic::{gen_synthetic, generate, region_name, SyntheticConfig};
pub use windows::{
    encode_series, group_series, make_windows, split_chronological, window_positions,
    Chronological, EncodedSeries, Series, SeriesKey, Split, SplitRatios, TimelineKey,
    WindowedSample, MAX_STEP_DAYS,
};
