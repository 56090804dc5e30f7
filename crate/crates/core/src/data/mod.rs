//! Datasets, loaders, vertical partitioning, and batch plans.

pub mod batch;
pub mod dataset;
pub mod mnist;
pub mod partition;
pub mod tabular;

pub use batch::{make_batches, Batch, BatchPlan};
pub use dataset::Dataset;
pub use mnist::{load_mnist_dir, load_mnist_idx, MnistSplit};
pub use partition::{
    align_entities, build_intersection_split, vertical_split, IntersectionSpec, IntersectionSplit,
    VerticalPartitionSpec,
};
pub use tabular::{load_csv, load_csv_raw, CsvOptions, MinMaxScaler};
