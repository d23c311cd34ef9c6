//! Periodic boxes, fields, and Fourier-diagonal operators.

mod fft;
mod field;
mod grid;
mod ops;
mod rescale;
mod snapshot;

pub use field::{Field, Rank, SpectralField};
pub use grid::{BoxGrid, MIN_N};
pub use ops::{
    apply_diff, dealias, gradient_norm, jacobian, keeps_mode, leray_project, relative_divergence,
    second_derivative, DiffOp,
};
pub use rescale::{derivative_lp_norm, rescale_field, ScalingReport};
pub use rustfft::num_complex::Complex64;
pub use snapshot::{read_meta, read_snapshot, write_snapshot, SnapshotMeta, SNAPSHOT_FORMAT};

pub(crate) use fft::plan as fft_plan;
pub(crate) use ops::{dealias_in_place, project_in_place, Wavenumbers};
