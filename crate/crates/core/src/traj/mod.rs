//! Trajectory sources and transforms: the base measure sampler, the linear
//! benchmark generator, normalization, time-bound rescaling and CSV I/O.

mod io;
mod linear;
mod mu0;
mod normalize;
mod rescale;

pub use io::{load_dataset, read_dataset_csv, save_dataset, write_dataset_csv};
pub use linear::{gen_linear_dataset, LinearSystem};
pub use mu0::{sample_mu0, sample_mu0_batch, sample_mu0_with, sample_path, Mu0Params, Mu0Path};
pub use normalize::{denormalize, denormalize_thresholds, normalize, DatasetStats};
pub use rescale::{rescale_interval, rescale_time_bounds, REFERENCE_POINTS};
