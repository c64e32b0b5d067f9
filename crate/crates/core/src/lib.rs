//! Dispersive shock waves of the higher-order Chen–Lee–Liu equation.

pub mod hodograph;
pub mod hydro;
pub mod onephase;
pub mod pde;
pub mod riemann;
mod roots;
pub mod specfun;
pub mod whitham;
