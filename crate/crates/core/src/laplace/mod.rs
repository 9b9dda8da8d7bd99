//! MAP estimation and the Laplace approximation around it.

mod hessian;
mod lbfgs;
mod map;
mod model;
mod pairwise;

pub use hessian::{assemble_hessian, CrossBlock, HessianBlocks, ParamLayout};
pub use map::{fit_map, MapConfig, MapFit};
pub use model::{
    build_laplace, build_laplace_with_limit, laplace_draws, LaplaceModel, DENSE_LIMIT, LAPLACE_FILE,
    LAPLACE_META_FILE, MODE_FILE,
};
pub use pairwise::{laplace_pairwise_draws, PairwiseDraws};
