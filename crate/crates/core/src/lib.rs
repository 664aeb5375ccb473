mod balls;
pub mod certificate;
pub mod constants;
pub mod error;
pub mod length_area;
pub mod pipeline;
pub mod surface;
pub mod thick;
pub mod thin;
pub mod tree;
pub mod width;

pub use certificate::Certificate;
pub use error::{Error, Result};
