pub mod cam;
pub mod cli;
pub mod error;
pub mod faithfulness;
pub mod mask;
pub mod method;
pub mod model;
pub mod ops;
pub mod synthdata;
pub mod tensor;
pub mod viz;

pub use error::{Error, Result};
pub use mask::RetentionMask;
pub use method::Method;
pub use model::{Label, Sample, SmallCnn};
pub use tensor::{Rng, Shape, Tensor};
