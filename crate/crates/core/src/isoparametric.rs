//! Level sets `M = f^{-1}(cos 4θ)` of the Cartan–Münzner polynomial
//! restricted to the unit sphere, with the unit normal, the Clifford-sphere
//! operator `P(x)` and the parallel maps to the focal submanifolds.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use crate::clifford::CliffordSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::seed::rng_from_seed;
use crate::tolerances;

/// `F(x) = |x|^4 − 2 Σ ⟨P_i x, x⟩^2`.
pub fn cartan_munzner(system: &CliffordSystem, x: &Vector) -> f64 {
    let s: f64 = system.quadratic_forms(x).iter().map(|c| c * c).sum();
    x.norm_squared().powi(2) - 2.0 * s
}

/// A Clifford system together with the level parameter `θ ∈ (0, π/4)`.
#[derive(Debug, Clone)]
pub struct IsoparametricFamily {
    system: CliffordSystem,
    theta: f64,
    lambda: [f64; 4],
    m1: usize,
    m2: usize,
}

impl IsoparametricFamily {
    pub fn new(system: CliffordSystem, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < FRAC_PI_4) {
            return Err(Error::Domain(format!("theta must lie in (0, π/4), got {theta}")));
        }
        let (m1, m2) = system.multiplicities();
        if m1 < 1 || m2 < 1 {
            return Err(Error::Domain(format!(
                "system with multiplicities ({m1}, {m2}) carries no isoparametric family"
            )));
        }
        let lambda = std::array::from_fn(|k| 1.0 / (theta + k as f64 * FRAC_PI_4).tan());
        Ok(IsoparametricFamily {
            system,
            theta,
            lambda,
            m1,
            m2: m2 as usize,
        })
    }

    pub fn system(&self) -> &CliffordSystem {
        &self.system
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Principal curvatures `λ_k = cot(θ + (k−1)π/4)`, indexed from 0.
    pub fn lambdas(&self) -> [f64; 4] {
        self.lambda
    }

    pub fn multiplicities(&self) -> (usize, usize) {
        (self.m1, self.m2)
    }

    /// Multiplicity of the `k`-th distribution (0-based), `(m1, m2, m1, m2)`.
    pub fn distribution_dim(&self, k: usize) -> usize {
        if k % 2 == 0 {
            self.m1
        } else {
            self.m2
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.system.ambient_dim()
    }

    /// Dimension `2l − 2` of the hypersurface.
    pub fn dim(&self) -> usize {
        self.ambient_dim() - 2
    }

    pub fn level(&self) -> f64 {
        (4.0 * self.theta).cos()
    }

    /// The same hypersurface seen from the complementary Clifford system of
    /// a full-square system: level parameter `π/4 − θ`.
    pub fn dual(&self, complement: CliffordSystem) -> Result<Self> {
        IsoparametricFamily::new(complement, FRAC_PI_4 - self.theta)
    }

    pub fn level_residual(&self, x: &Vector) -> f64 {
        (cartan_munzner(&self.system, x) - self.level()).abs().max((x.norm() - 1.0).abs())
    }

    fn check_level(&self, x: &Vector) -> Result<()> {
        let residual = self.level_residual(x);
        if residual < tolerances::LEVEL {
            Ok(())
        } else {
            Err(Error::StalePoint {
                residual,
                tolerance: tolerances::LEVEL,
            })
        }
    }
}

/// Unit normal of the level set through `x` with parameter `theta`, no
/// level check.
fn normal_at_level(system: &CliffordSystem, theta: f64, x: &Vector) -> Vector {
    let (s2, c2) = (2.0 * theta).sin_cos();
    let coeffs = system.quadratic_forms(x);
    let mut sum = Vector::zeros(x.len());
    for (p, c) in system.matrices().iter().zip(coeffs.iter()) {
        sum += (p * x) * *c;
    }
    (x * s2 - sum / s2) / c2
}

/// `ξ(x) = (1/cos 2θ)(x sin 2θ − (1/sin 2θ) Σ ⟨P_i x, x⟩ P_i x)`.
pub fn normal_xi(family: &IsoparametricFamily, x: &Vector) -> Result<Vector> {
    family.check_level(x)?;
    Ok(normal_at_level(&family.system, family.theta, x))
}

/// Jacobian of the ambient expression for `ξ`:
/// `(1/cos 2θ)(sin 2θ I − (1/sin 2θ) Σ (2 P_i x (P_i x)^T + ⟨P_i x, x⟩ P_i))`.
/// It is symmetric; on tangent vectors it is the differential of the normal.
pub fn normal_jacobian(family: &IsoparametricFamily, x: &Vector) -> Matrix {
    let n = x.len();
    let (s2, c2) = (2.0 * family.theta).sin_cos();
    let mut acc = Matrix::zeros(n, n);
    for p in family.system.matrices() {
        let px = p * x;
        let c = px.dot(x);
        acc += &px * px.transpose() * 2.0 + p * c;
    }
    (Matrix::identity(n, n) * s2 - acc / s2) / c2
}

/// `dξ(v)` for a tangent vector `v` at `x`.
pub fn normal_differential(family: &IsoparametricFamily, x: &Vector, v: &Vector) -> Vector {
    let (s2, c2) = (2.0 * family.theta).sin_cos();
    let mut acc = Vector::zeros(x.len());
    for p in family.system.matrices() {
        let px = p * x;
        acc += &px * (2.0 * px.dot(v)) + (p * v) * px.dot(x);
    }
    (v * s2 - acc / s2) / c2
}

/// Unit coefficient vector `(⟨P_i x, x⟩ / sin 2θ)_i` and the operator
/// `P = Σ_i a_i P_i`.
pub fn clifford_projection_p(family: &IsoparametricFamily, x: &Vector) -> Result<(Matrix, Vector)> {
    family.check_level(x)?;
    let coeffs = family.system.quadratic_forms(x) / (2.0 * family.theta).sin();
    Ok((family.system.combine(&coeffs), coeffs))
}

/// `φ_k` and `ξ_k` for `k = 1..4`, stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalData {
    pub phi: [Vector; 4],
    pub xi: [Vector; 4],
}

/// Parallel maps `φ_k = x cos t_k + ξ sin t_k`, `ξ_k = −x sin t_k + ξ cos t_k`
/// with `t_k = θ + (k−1)π/4`, cross-checked against their closed forms in
/// terms of `P` and `φ_1`.
pub fn focal_maps(family: &IsoparametricFamily, x: &Vector, xi: &Vector) -> Result<FocalData> {
    let (p, _) = clifford_projection_p(family, x)?;
    let mut phi: [Vector; 4] = Default::default();
    let mut xis: [Vector; 4] = Default::default();
    for k in 0..4 {
        let (s, c) = (family.theta + k as f64 * FRAC_PI_4).sin_cos();
        phi[k] = x * c + xi * s;
        xis[k] = -x * s + xi * c;
    }

    let (st, ct) = family.theta.sin_cos();
    let c2 = (2.0 * family.theta).cos();
    let px = &p * x;
    let phi1 = (x * ct - &px * st) / c2;
    let p_phi1 = &p * &phi1;
    let plus = (&phi1 + &p_phi1) / SQRT_2;
    let minus = (&phi1 - &p_phi1) / SQRT_2;
    let closed: [(&str, &Vector, Vector); 8] = [
        ("phi_1", &phi[0], phi1.clone()),
        ("xi_1", &xis[0], -&p_phi1),
        ("phi_2", &phi[1], minus.clone()),
        ("xi_2", &xis[1], -&plus),
        ("phi_3", &phi[2], -&p_phi1),
        ("xi_3", &xis[2], -&phi1),
        ("phi_4", &phi[3], -&plus),
        ("xi_4", &xis[3], -&minus),
    ];
    for (name, direct, formula) in closed {
        let residual = (direct - &formula).amax();
        if residual >= tolerances::POINTWISE {
            return Err(Error::Inconsistency {
                what: format!("{name}: definition {direct:?} vs closed form {formula:?}"),
                residual,
                tolerance: tolerances::POINTWISE,
            });
        }
    }
    Ok(FocalData { phi, xi: xis })
}

/// A point of `M` with everything derived from it cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub x: Vector,
    pub xi: Vector,
    pub p_op: Matrix,
    /// Coordinates of `P` on the Clifford sphere.
    pub coeffs: Vector,
    pub focal: FocalData,
}

impl SurfacePoint {
    pub fn new(family: &IsoparametricFamily, x: Vector) -> Result<Self> {
        let xi = normal_xi(family, &x)?;
        let (p_op, coeffs) = clifford_projection_p(family, &x)?;
        let focal = focal_maps(family, &x, &xi)?;
        Ok(SurfacePoint { x, xi, p_op, coeffs, focal })
    }

    pub fn ambient_dim(&self) -> usize {
        self.x.len()
    }

    /// Orthogonal projector onto `T_xM = {x, ξ}^⊥`.
    pub fn tangent_projector(&self) -> Matrix {
        let n = self.x.len();
        Matrix::identity(n, n) - &self.x * self.x.transpose() - &self.xi * self.xi.transpose()
    }

    pub fn project_tangent(&self, v: &Vector) -> Vector {
        v - &self.x * self.x.dot(v) - &self.xi * self.xi.dot(v)
    }

    /// `|⟨v, x⟩| + |⟨v, ξ⟩|`.
    pub fn normal_component(&self, v: &Vector) -> f64 {
        self.x.dot(v).abs() + self.xi.dot(v).abs()
    }
}

/// Moves a unit vector `y` along the normal geodesic of its own level set
/// onto `M`. Each step is exact up to rounding since level sets are
/// parallel; a few repetitions absorb the rounding.
fn retract(family: &IsoparametricFamily, y: &Vector) -> Result<Vector> {
    let eps = tolerances::FOCAL_MARGIN;
    let mut x = y / y.norm();
    for _ in 0..=3 {
        let f = cartan_munzner(&family.system, &x).clamp(-1.0 + eps, 1.0 - eps);
        if (f - family.level()).abs() < 1e-14 {
            break;
        }
        let theta_y = f.acos() / 4.0;
        let xi_y = normal_at_level(&family.system, theta_y, &x);
        let (s, c) = (theta_y - family.theta).sin_cos();
        x = &x * c + xi_y * s;
        x /= x.norm();
    }
    family.check_level(&x)?;
    Ok(x)
}

/// Random point of `M` from a uniform point of the sphere pushed along its
/// normal geodesic.
pub fn sample_point(family: &IsoparametricFamily, seed: u64) -> Result<SurfacePoint> {
    const BUDGET: usize = 10_000;
    let mut rng = rng_from_seed(seed);
    for _ in 0..BUDGET {
        let y = linalg::random_unit_vector(family.ambient_dim(), &mut rng);
        let f = cartan_munzner(&family.system, &y);
        if f.abs() > 1.0 - tolerances::FOCAL_MARGIN {
            continue;
        }
        let x = retract(family, &y)?;
        return SurfacePoint::new(family, x);
    }
    Err(Error::Sampling(format!(
        "no sample away from the focal sets after {BUDGET} draws (seed {seed})"
    )))
}

/// `γ(t)`: `(x + t v)/|x + t v|` retracted onto `M`. `γ(0) = x` and
/// `γ'(0) = v`.
pub fn tangent_curve(family: &IsoparametricFamily, point: &SurfacePoint, v: &Vector, t: f64) -> Result<SurfacePoint> {
    let normal = point.normal_component(v);
    if normal > 1e-10 * v.norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "curve direction is not tangent: normal component {normal:e}"
        )));
    }
    if t == 0.0 {
        return Ok(point.clone());
    }
    let y = &point.x + v * t;
    let x = retract(family, &(&y / y.norm()))?;
    SurfacePoint::new(family, x)
}
