//! Minimal sequential neural-network engine: layers with explicit forward and
//! backward passes, Adam, cross-entropy losses, finite-difference checking and
//! the `GDL1` checkpoint format.

pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod init;
pub mod layer;
pub mod loss;
pub mod network;
pub mod norm;
pub mod optim;
pub mod pool;
pub mod scalar;
pub mod tensor;

pub use dense::EmbedMode;
pub use init::Init;
pub use layer::{Layer, LayerKind};
pub use network::{Mode, Network, NetworkBuilder};
pub use optim::{Adam, AdamConfig};
pub use scalar::Scalar;
pub use tensor::Tensor;
