pub mod cb_spaces;
pub mod certificates;
pub mod engine;
pub mod gamma;
pub mod instance;
pub mod ordinal;
pub mod subshift;

pub use ordinal::Ordinal;
