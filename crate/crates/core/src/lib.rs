//! Deterministic column, row and fiber selection with Frobenius-norm
//! quasi-optimality guarantees.

pub mod charpoly;
pub mod cross;
pub mod css;
pub mod cur;
pub mod error;
pub mod generators;
pub mod matcore;
pub mod oracle;
pub mod svdupdate;
pub mod tensor;

pub use cross::{select_cross, select_cross_sweep, CrossApprox};
pub use css::{select_columns, select_columns_sweep, CssConfig, SelectionResult};
pub use cur::{cur_approximate, cur_approximate_sweep, CurApprox};
pub use error::{LowRankError, Result};
pub use matcore::DenseMatrix;
pub use tensor::{Tensor, TuckerFactors};
