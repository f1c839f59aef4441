//! The built-in models: a linear SDE with constant anisotropic diffusion,
//! a nonlinear polar-coordinates test with variable diffusion and a known
//! quasi-potential, the Maier-Stein bistable field, and the Lambda Phage
//! genetic toggle switch.

mod lambda_phage;
mod linear;
mod maier_stein;
mod polar;

pub use lambda_phage::{
    binding_table, BindingState, DiffusionKind, LambdaPhageModel, LambdaPhageParams,
    LYSOGENIC_SEED, LYTIC_SEED, SADDLE_SEED,
};
pub use linear::LinearModel;
pub use maier_stein::MaierSteinModel;
pub use polar::PolarModel;
