//! Default thresholds shared by constructions and checks.
//!
//! Algebraic identities that only involve a handful of matrix products sit
//! near machine precision; anything that goes through a finite-difference
//! derivative carries the `O(h^2)` truncation of the central stencil.

/// Clifford relations: symmetry, `P_i^2 = I`, anticommutators.
pub const CLIFFORD: f64 = 1e-12;

/// Sum-of-squares identity of a full-square Clifford system.
pub const FULL_SQUARE: f64 = 1e-12;

/// `|f(x) - cos 4θ|` accepted for a point of the hypersurface.
pub const LEVEL: f64 = 1e-10;

/// Distance of `f` from `±1` below which a sample is rejected as near-focal.
pub const FOCAL_MARGIN: f64 = 1e-6;

/// Pointwise identities of the unit normal, `P` and the focal maps.
pub const POINTWISE: f64 = 1e-10;

/// Orthonormality of constructed tangent bases.
pub const ORTHONORMAL: f64 = 1e-12;

/// Eigenvalues of the shape operator against the cotangent formula.
pub const SPECTRUM: f64 = 1e-8;

/// Subspace distances (sine of the largest principal angle).
pub const SUBSPACE: f64 = 1e-8;

/// Gram matrix preservation of fibre isometries.
pub const GRAM: f64 = 1e-10;

/// Minimum admissible separation of an eigenvalue from its nearest
/// expected principal curvature before the point is declared degenerate.
pub const CLUSTER_GAP: f64 = 1e-4;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Antisymmetry of finite-difference connection coefficients.
pub const CONNECTION_ANTISYMMETRY: f64 = 5e-6;

/// Codazzi residuals from finite-difference connection coefficients.
pub const CODAZZI: f64 = 5e-5;

/// Agreement of the two Nijenhuis evaluations, and of the two `∇Φ` routes.
pub const FD_CROSS_CHECK: f64 = 1e-4;

/// `max |G_iij|` for the nearly Kähler condition.
pub const NEARLY_KAHLER: f64 = 1e-4;

/// Relative agreement of the numeric Nijenhuis witness with its closed form.
pub const WITNESS_RELATIVE: f64 = 1e-3;

/// *-Ricci tensor entries and oracle agreement.
pub const STAR_RICCI: f64 = 1e-10;

/// Lower threshold of the symmetry criterion: both indicators hold.
pub const IFF_PASS: f64 = 1e-8;

/// Upper threshold of the symmetry criterion: both indicators fail.
pub const IFF_FAIL: f64 = 1e-6;

/// Relative error of the Gauss–Kronecker identity.
pub const GAUSS_KRONECKER: f64 = 1e-8;

/// Admissible band of `θ` for finite-difference suites: `[0.15, π/4 - 0.15]`.
pub const FD_THETA_MARGIN: f64 = 0.15;
