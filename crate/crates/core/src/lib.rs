//! Numerical workbench for radial Fourier multipliers: kernels, square functions,
//! maximal operators, Besov-type multiplier norms and a Calderón–Zygmund decomposition lab.

pub mod grids_norms;
pub mod special_functions;
pub mod radial_transforms;
pub mod multiplier_operators;
pub mod square_functions;
pub mod maximal_operators;
pub mod besov_multipliers;
pub mod decomposition_lab;
pub mod experiments;
pub mod experiments_cli;
