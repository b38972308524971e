//! Exact intersection numbers of psi classes and the first Mumford-Morita-Miller
//! class on moduli spaces of stable curves, computed by a kappa-extended
//! topological recursion, with independent oracles, Weil-Petersson volume
//! polynomials and numerical checks of the McShane kernels.

pub mod cli;
pub mod coefficients;
pub mod correlator;
pub mod engine;
pub mod kernels;
pub mod oracles;
pub mod verify;
pub mod volumes;

pub use coefficients::{beta_coeff, f_kernel_value, ZetaValue};
pub use correlator::{CorrelatorKey, KappaPsiKey, KeyError};
pub use engine::{Engine, EngineError};
pub use volumes::{volume_polynomial, PiGradedPoly};
