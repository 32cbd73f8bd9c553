//! Statistical workbench: EM reconstruction for Poisson linear inverse
//! problems (emission and network tomography), a tangent-subspace character
//! classifier, and residual-lifetime / length-biased sampling tools.

pub mod cli;
pub mod em;
pub mod io;
pub mod net;
pub mod ocr;
pub mod pet;
pub mod poisson;
pub mod renewal;
pub mod rng;
