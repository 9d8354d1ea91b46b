//! Numerical construction and verification of isoparametric hypersurfaces of
//! OT–FKM type in spheres.
//!
//! The crate builds symmetric Clifford systems, samples points on the level
//! sets of the associated Cartan–Münzner polynomial, decomposes the tangent
//! space into the four principal distributions, and checks bundle
//! isomorphisms, almost Hermitian structures and *-Ricci identities at those
//! points.
//!
//! Modules are layered bottom-up:
//!
//! | module | content |
//! |--------|---------|
//! | [`clifford`] | skew Clifford modules, symmetric Clifford systems, full-square systems |
//! | [`isoparametric`] | Cartan–Münzner polynomial, unit normal, `P`, focal maps, sampling |
//! | [`shape`] | shape operator, principal distributions `D1..D4`, Clifford frame |
//! | [`diffgeo`] | finite-difference covariant derivatives, connection forms, Nijenhuis tensor |
//! | [`bundleiso`] | `D1 ≅ D3`, `D2 ≅ D4`, `E±(P)` splittings, `D1⊕D2 ≅ D3⊕D4` for odd `m` |
//! | [`hermitian`] | pair-swapping almost complex structures, nearly Kähler test, Nijenhuis witness |
//! | [`starricci`] | *-Ricci tensor, Gauss-equation oracle, weakly *-Einstein conditions |

pub mod bundleiso;
pub mod clifford;
pub mod diffgeo;
pub mod error;
pub mod hermitian;
pub mod isoparametric;
pub mod linalg;
pub mod report;
pub mod seed;
pub mod shape;
pub mod starricci;
pub mod tolerances;

pub use error::{Error, Result};
pub use report::{Bound, CheckRecord, Status, VerificationReport};
