pub mod assembly;
pub mod element;
pub mod norms;
pub mod quadrature;
pub mod residual;
pub mod space;
pub mod state;
