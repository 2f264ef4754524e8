//! JSON encoder documents.
//!
//! ```json
//! { "variant": "cayley", "dim": 8, "coord_dim": 2, "seed": 3 }
//! ```
//!
//! Fields, all but the first three optional:
//!
//! | field | meaning |
//! |---|---|
//! | `variant` | `rope`, `dense`, `cayley`, `circulant` or `outer` |
//! | `dim` | token dimension `d`; even except for `outer` |
//! | `coord_dim` | encoder coordinate dimension `d_c` (after any canonical map) |
//! | `base_wavelength` | default schedule base, `10000` if absent |
//! | `schedule` | `d_c` arrays of `d/2` frequencies (rope, cayley, dense with `basis`) |
//! | `skew_entries` | cayley: strict upper triangle of `S`, row-major, `d(d-1)/2` values |
//! | `circulant_rows` | circulant: `d_c` arrays of `d` values, the first column of each `C_k` |
//! | `block_size` | circulant: independent block length, divides `d`, default `d` |
//! | `generators` | dense: `d_c` arrays of `d*d` values, each a skew matrix row-major |
//! | `basis` | dense: orthogonal `P`, `d*d` values row-major, planted as `P J_k P^T` |
//! | `num_features` | outer: number of frequency vectors `m` when drawn from `seed` |
//! | `frequencies` | outer: `m` arrays of `d_c` values |
//! | `canonical` | `none` (default) or `spherical`; spherical takes 3D positions, needs `coord_dim = 2` |
//! | `seed` | draws any missing payload |
//!
//! Without an explicit schedule the default `theta_n = base^(-2n/d)` is used
//! on every axis. Seeded payloads come from one ChaCha8 stream in this order:
//! dense basis (Haar orthogonal), cayley `S` (entries `N(0, 0.25)`),
//! circulant rows (entries `N(0, 0.25)`), outer frequencies (`N(0, 1)`).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coords::{CanonicalEncoder, CanonicalKind, CanonicalMap};
use crate::encoder::{DenseEncoder, Encoder};
use crate::error::{Error, Result};
use crate::linalg::SkewMatrix;
use crate::outer::{FourierFeatureMap, OuterEncoder};
use crate::random::{gaussian_vec, random_orthogonal, random_skew, rng};
use crate::rope::{default_schedule, FrequencySchedule, RopeEncoder, DEFAULT_BASE_WAVELENGTH};
use crate::string::{CayleyEncoder, CirculantEncoder, GeneratorSet, OrthogonalBasis};

/// Standard deviation of seeded Cayley and circulant payload entries.
pub const SEEDED_PARAMETER_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Rope,
    Dense,
    Cayley,
    Circulant,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Canonical {
    #[default]
    None,
    Spherical,
}

fn default_base_wavelength() -> f64 {
    DEFAULT_BASE_WAVELENGTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub variant: Variant,
    pub dim: usize,
    pub coord_dim: usize,
    #[serde(default = "default_base_wavelength")]
    pub base_wavelength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew_entries: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circulant_rows: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_features: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub canonical: Canonical,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A built encoder behind its canonical chart.
pub type ConfiguredEncoder = CanonicalEncoder<Encoder>;

fn missing(variant: &str, what: &str) -> Error {
    Error::Config(format!("{variant} config needs `{what}` or `seed`"))
}

fn unexpected(variant: &str, field: &str) -> Error {
    Error::Config(format!("field `{field}` does not apply to variant {variant}"))
}

fn square(dim: usize, flat: &[f64], what: &str) -> Result<DMatrix<f64>> {
    if flat.len() != dim * dim {
        return Err(Error::Config(format!(
            "`{what}` entries must have {} values, got {}",
            dim * dim,
            flat.len()
        )));
    }
    Ok(DMatrix::from_row_slice(dim, dim, flat))
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl EncoderConfig {
    /// Minimal config for `variant`; payloads come from `seed`.
    pub fn seeded(variant: Variant, dim: usize, coord_dim: usize, seed: u64) -> Self {
        Self {
            variant,
            dim,
            coord_dim,
            base_wavelength: DEFAULT_BASE_WAVELENGTH,
            schedule: None,
            skew_entries: None,
            circulant_rows: None,
            block_size: None,
            generators: None,
            basis: None,
            num_features: None,
            frequencies: None,
            canonical: Canonical::None,
            seed: Some(seed),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn canonical_map(&self) -> CanonicalMap {
        match self.canonical {
            Canonical::None => CanonicalMap::identity(self.coord_dim),
            Canonical::Spherical => CanonicalMap::spherical(),
        }
    }

    /// Raw position dimension expected by the built encoder.
    pub fn position_dim(&self) -> usize {
        self.canonical_map().domain_dim()
    }

    fn check_fields(&self) -> Result<()> {
        let name = format!("{:?}", self.variant).to_lowercase();
        let present = [
            ("schedule", self.schedule.is_some()),
            ("skew_entries", self.skew_entries.is_some()),
            ("circulant_rows", self.circulant_rows.is_some()),
            ("block_size", self.block_size.is_some()),
            ("generators", self.generators.is_some()),
            ("basis", self.basis.is_some()),
            ("num_features", self.num_features.is_some()),
            ("frequencies", self.frequencies.is_some()),
        ];
        let allowed: &[&str] = match self.variant {
            Variant::Rope => &["schedule"],
            Variant::Dense => &["schedule", "generators", "basis"],
            Variant::Cayley => &["schedule", "skew_entries"],
            Variant::Circulant => &["circulant_rows", "block_size"],
            Variant::Outer => &["num_features", "frequencies"],
        };
        if let Some((field, _)) = present.iter().find(|(f, p)| *p && !allowed.contains(f)) {
            return Err(unexpected(&name, field));
        }
        if self.dim == 0 || self.coord_dim == 0 {
            return Err(Error::Config("`dim` and `coord_dim` must be positive".into()));
        }
        if self.variant != Variant::Outer && self.dim % 2 != 0 {
            return Err(Error::OddDimension(self.dim));
        }
        if self.canonical == Canonical::Spherical && self.coord_dim != 2 {
            return Err(Error::Config("spherical canonical coordinates need `coord_dim` = 2".into()));
        }
        Ok(())
    }

    fn schedule(&self) -> Result<FrequencySchedule> {
        let s = match &self.schedule {
            Some(axes) => FrequencySchedule::from_axes(axes.clone())?,
            None => default_schedule(self.dim, self.base_wavelength, self.coord_dim)?,
        };
        if s.dim() != self.dim || s.coord_dim() != self.coord_dim {
            return Err(Error::Config(format!(
                "schedule is {} axes of {} frequencies, expected {} axes of {}",
                s.coord_dim(),
                s.dim() / 2,
                self.coord_dim,
                self.dim / 2
            )));
        }
        Ok(s)
    }

    pub fn build_encoder(&self) -> Result<Encoder> {
        self.check_fields()?;
        let (d, dc) = (self.dim, self.coord_dim);
        let mut rng = self.seed.map(rng);
        Ok(match self.variant {
            Variant::Rope => Encoder::Rope(RopeEncoder::new(self.schedule()?)),
            Variant::Dense => {
                if let Some(gens) = &self.generators {
                    if self.basis.is_some() || self.schedule.is_some() {
                        return Err(Error::Config("dense `generators` excludes `basis` and `schedule`".into()));
                    }
                    if gens.len() != dc {
                        return Err(Error::Config(format!("expected {dc} generators, got {}", gens.len())));
                    }
                    let gens = gens
                        .iter()
                        .map(|g| SkewMatrix::from_matrix(&square(d, g, "generators")?))
                        .collect::<Result<Vec<_>>>()?;
                    Encoder::Dense(DenseEncoder::new(GeneratorSet::new(gens)?))
                } else {
                    let p = match (&self.basis, rng.as_mut()) {
                        (Some(b), _) => square(d, b, "basis")?,
                        (None, Some(r)) => random_orthogonal(r, d),
                        (None, None) => return Err(missing("dense", "generators` or `basis")),
                    };
                    Encoder::Dense(DenseEncoder::planted(OrthogonalBasis::new(p)?, self.schedule()?)?)
                }
            }
            Variant::Cayley => {
                let s = match (&self.skew_entries, rng.as_mut()) {
                    (Some(upper), _) => SkewMatrix::from_upper(d, upper)?,
                    (None, Some(r)) => random_skew(r, d, SEEDED_PARAMETER_SCALE),
                    (None, None) => return Err(missing("cayley", "skew_entries")),
                };
                Encoder::Cayley(CayleyEncoder::new(s, self.schedule()?)?)
            }
            Variant::Circulant => {
                let rows = match (&self.circulant_rows, rng.as_mut()) {
                    (Some(rows), _) => rows.clone(),
                    (None, Some(r)) => (0..dc)
                        .map(|_| gaussian_vec(r, d).into_iter().map(|x| x * SEEDED_PARAMETER_SCALE).collect())
                        .collect(),
                    (None, None) => return Err(missing("circulant", "circulant_rows")),
                };
                if rows.len() != dc || rows.iter().any(|row| row.len() != d) {
                    return Err(Error::Config(format!("`circulant_rows` must be {dc} arrays of {d} values")));
                }
                Encoder::Circulant(CirculantEncoder::with_block_size(rows, self.block_size.unwrap_or(d))?)
            }
            Variant::Outer => {
                let map = match (&self.frequencies, self.num_features, rng.as_mut()) {
                    (Some(f), None, _) => FourierFeatureMap::new(f.clone())?,
                    (Some(f), Some(m), _) if f.len() == m => FourierFeatureMap::new(f.clone())?,
                    (Some(f), Some(m), _) => {
                        return Err(Error::Config(format!("`num_features` is {m} but {} frequencies given", f.len())))
                    }
                    (None, Some(m), Some(r)) => FourierFeatureMap::gaussian(r, m, dc)?,
                    (None, _, _) => return Err(Error::Config("outer config needs `frequencies`, or `num_features` with `seed`".into())),
                };
                if map.coord_dim() != dc {
                    return Err(Error::Config(format!("frequency vectors must have {dc} entries")));
                }
                Encoder::Outer(OuterEncoder::new(d, map))
            }
        })
    }

    pub fn build(&self) -> Result<ConfiguredEncoder> {
        CanonicalEncoder::new(self.canonical_map(), self.build_encoder()?)
    }

    /// Explicit config reproducing `enc` exactly, with no seed.
    pub fn from_encoder(enc: &Encoder, canonical: Canonical) -> Self {
        let mut c = Self::seeded(Variant::Rope, enc.dim(), enc.coord_dim(), 0);
        c.seed = None;
        c.canonical = canonical;
        let schedule = |s: &FrequencySchedule| (Some(s.per_axis().to_vec()), s.base_wavelength());
        match enc {
            Encoder::Rope(e) => {
                (c.schedule, c.base_wavelength) = schedule(e.schedule());
            }
            Encoder::Dense(e) => {
                c.variant = Variant::Dense;
                match e.planted_parts() {
                    Some((b, s)) => {
                        c.basis = Some(row_major(b.matrix()));
                        (c.schedule, c.base_wavelength) = schedule(s);
                    }
                    None => {
                        c.generators = Some(e.generators().generators().iter().map(|g| row_major(g.matrix())).collect());
                    }
                }
            }
            Encoder::Cayley(e) => {
                c.variant = Variant::Cayley;
                c.skew_entries = Some(e.skew().upper());
                (c.schedule, c.base_wavelength) = schedule(e.schedule());
            }
            Encoder::Circulant(e) => {
                c.variant = Variant::Circulant;
                c.circulant_rows = Some(e.rows().to_vec());
                c.block_size = (e.block_size() != e.dim()).then_some(e.block_size());
            }
            Encoder::Outer(e) => {
                c.variant = Variant::Outer;
                c.frequencies = Some(e.map().frequencies().to_vec());
            }
        }
        c
    }
}

impl CanonicalKind {
    pub fn as_config(self) -> Canonical {
        match self {
            CanonicalKind::IdentityTranslation => Canonical::None,
            CanonicalKind::SphericalAngles => Canonical::Spherical,
        }
    }
}
