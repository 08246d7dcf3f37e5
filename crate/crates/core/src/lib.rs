//! Rotary positional encodings for mixed 3D point-cloud and text token
//! sequences.
//!
//! Three schemes share one rotation engine:
//!
//! * **RoPE**: every pair rotates with the 1D sequence index `t`.
//! * **RoPE-3D**: the pair spectrum is split between `t` and Cartesian
//!   `x`, `y`, `z`.
//! * **SoPE**: the spectrum is split between `t` and spherical `r`, `theta`,
//!   `phi` (spatial bands at the high-frequency end), with optional
//!   multi-scale phase mixing.
//!
//! [`oracle`] rebuilds every score from dense rotation matrices for
//! verification, and [`attention`] turns encoded tokens into attention
//! matrices and concentration metrics.

pub mod attention;
pub mod bands;
pub mod commands;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod multiscale;
pub mod oracle;
pub mod position;
pub mod report;
pub mod rope;
pub mod sope;
pub mod synthetic;

pub use attention::{bias_metrics, score_matrix, softmax_rows, AttentionOptions, AttentionReport};
pub use bands::{allocate_bands, base_angles, BandAllocation, BaseAngles, Component};
pub use config::{load_config, Settings};
pub use error::{Error, Result};
pub use geometry::{cart_to_sph, index_from_cartesian, sph_to_cart};
pub use io::{load_tokens, TokenFormat};
pub use multiscale::{g_lin, g_log, g_per, mixed_phase, ScaleConfig};
pub use oracle::{build_dense, dense_score, DenseRotation};
pub use position::{displacement, Displacement, Modality, PositionIndex};
pub use rope::{apply_rotation, rope_phases, rope_score, RotationPlan};
pub use sope::{
    encode, relative_score, rope3d_phases, score, sope_phases, sope_score, EncodingConfig, Role,
    Scheme, Token, TokenSequence,
};
