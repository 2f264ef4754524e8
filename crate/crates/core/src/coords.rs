//! Canonical coordinates: charts in which an Abelian group action on
//! positions becomes a translation.
//!
//! The spherical chart sends `r in R^3` to `(theta, phi)` with
//! `theta = atan2(sqrt(x^2 + y^2), z)` in `[0, pi]` and `phi = atan2(y, x)` in
//! `(-pi, pi]`. A rotation about the z-axis by `dphi` adds `dphi` to `phi`
//! modulo `2 pi`: the azimuth wraps, so positions whose `phi` differ by `2 pi`
//! are the same point. An encoder therefore only sees the rotation as an
//! exact translation when its response to the `phi` axis is `2 pi`-periodic,
//! i.e. integer frequencies on that axis. Otherwise the rotation is a
//! translation only while `phi + dphi` stays inside `(-pi, pi]`.

use std::f64::consts::PI;

use crate::encoder::PositionEncoder;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalKind {
    IdentityTranslation,
    SphericalAngles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonicalMap {
    kind: CanonicalKind,
    domain_dim: usize,
    codomain_dim: usize,
}

/// Points closer than this to the z-axis, relative to their norm, are rejected.
const AXIS_TOL: f64 = 1e-12;

impl CanonicalMap {
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: CanonicalKind::IdentityTranslation,
            domain_dim: dim,
            codomain_dim: dim,
        }
    }

    pub fn spherical() -> Self {
        Self {
            kind: CanonicalKind::SphericalAngles,
            domain_dim: 3,
            codomain_dim: 2,
        }
    }

    pub fn kind(&self) -> CanonicalKind {
        self.kind
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn to_canonical(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.domain_dim {
            return Err(Error::DimensionMismatch {
                what: "position",
                expected: self.domain_dim,
                found: r.len(),
            });
        }
        match self.kind {
            CanonicalKind::IdentityTranslation => Ok(r.to_vec()),
            CanonicalKind::SphericalAngles => {
                let (x, y, z) = (r[0], r[1], r[2]);
                let rho = x.hypot(y);
                let norm = rho.hypot(z);
                if !norm.is_finite() {
                    return Err(Error::NonFinite("position"));
                }
                if norm == 0.0 {
                    return Err(Error::Domain("spherical angles are undefined at the origin".into()));
                }
                if rho <= AXIS_TOL * norm {
                    return Err(Error::Domain("azimuth is undefined on the z-axis".into()));
                }
                let phi = y.atan2(x);
                // atan2 returns -pi for y = -0.0; keep phi in (-pi, pi].
                let phi = if phi == -PI { PI } else { phi };
                Ok(vec![rho.atan2(z), phi])
            }
        }
    }
}

pub fn to_canonical(map: &CanonicalMap, r: &[f64]) -> Result<Vec<f64>> {
    map.to_canonical(r)
}

/// `enc` applied at `to_canonical(r)`.
pub fn canonical_encode<E: PositionEncoder + ?Sized>(map: &CanonicalMap, enc: &E, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_codomain(map, enc)?;
    enc.encode(&map.to_canonical(r)?, z)
}

fn check_codomain<E: PositionEncoder + ?Sized>(map: &CanonicalMap, enc: &E) -> Result<()> {
    if enc.position_dim() != map.codomain_dim() {
        return Err(Error::DimensionMismatch {
            what: "encoder coordinate dimension",
            expected: map.codomain_dim(),
            found: enc.position_dim(),
        });
    }
    Ok(())
}

/// An encoder that first maps raw positions through a canonical chart.
#[derive(Debug, Clone)]
pub struct CanonicalEncoder<E> {
    map: CanonicalMap,
    inner: E,
}

impl<E: PositionEncoder> CanonicalEncoder<E> {
    pub fn new(map: CanonicalMap, inner: E) -> Result<Self> {
        check_codomain(&map, &inner)?;
        Ok(Self { map, inner })
    }

    pub fn map(&self) -> &CanonicalMap {
        &self.map
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: PositionEncoder> PositionEncoder for CanonicalEncoder<E> {
    fn position_dim(&self) -> usize {
        self.map.domain_dim()
    }

    fn token_dim(&self) -> usize {
        self.inner.token_dim()
    }

    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    fn encode(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.inner.encode(&self.map.to_canonical(r)?, z)
    }
}

/// Rotation of `r` about the z-axis by `angle`.
pub fn rotate_about_z(r: &[f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    [c * r[0] - s * r[1], s * r[0] + c * r[1], r[2]]
}

/// `a - b` reduced to `(-pi, pi]`.
pub fn wrapped_angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}
