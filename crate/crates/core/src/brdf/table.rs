//! Isotropic BRDF tables: one SH vector per channel for each sampled `θ_o`.
//!
//! `F` projects `cos θ_i⁺ f_s`; `F′` projects `f_s` evenly extended across
//! the tangent plane (`f_s(x, y, |z|)`), so a Lambertian `F′` is exactly the
//! band-0 constant. Directions below the surface are removed at emission
//! time by the geometric factor.

use std::f64::consts::FRAC_PI_2;
use std::io::{Read, Write};
use std::path::Path;

use super::{BrdfError, BrdfModel};
use crate::math::{Direction, Rgb, Vec3};
use crate::sh::{eval_basis_into, sh_dot, window_coeffs, ShVector, SphereRule, MAX_BANDS};

pub const DEFAULT_THETA_STEPS: usize = 90;

const MAGIC: &[u8; 4] = b"HVLB";
const VERSION: u32 = 1;
const CHANNELS: u32 = 3;

/// One SH vector per color channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbSh {
    pub channels: [ShVector; 3],
}

impl RgbSh {
    pub fn zeros(bands: usize) -> Self {
        RgbSh { channels: [ShVector::zeros(bands), ShVector::zeros(bands), ShVector::zeros(bands)] }
    }

    pub fn bands(&self) -> usize {
        self.channels[0].bands()
    }

    /// Per-channel `∫ light · F dω`.
    pub fn dot_sh(&self, light: &ShVector) -> Rgb {
        Rgb::new(
            sh_dot(&self.channels[0], light),
            sh_dot(&self.channels[1], light),
            sh_dot(&self.channels[2], light),
        )
    }

    /// Per-channel reconstruction from precomputed basis values.
    pub fn dot_basis(&self, basis: &[f64]) -> Rgb {
        let d = |v: &ShVector| v.coeffs().iter().zip(basis).map(|(a, b)| a * b).sum::<f64>();
        Rgb::new(d(&self.channels[0]), d(&self.channels[1]), d(&self.channels[2]))
    }

    pub fn reconstruct(&self, dir: Direction) -> Rgb {
        let bands = self.bands();
        let mut basis = vec![0.0; bands * bands];
        eval_basis_into(bands, dir, &mut basis);
        self.dot_basis(&basis)
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(|c| c.coeffs().iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrdfTable {
    bands: usize,
    entries_f: Vec<RgbSh>,
    entries_f_prime: Vec<RgbSh>,
}

impl BrdfTable {
    /// Tabulates `model` at `theta_steps` outgoing angles `i·(π/2)/steps`,
    /// in the local frame `z = n` with `ω_o` in the xz half-plane (`φ_o = 0`).
    pub fn tabulate(model: &BrdfModel, bands: usize, theta_steps: usize) -> Result<Self, BrdfError> {
        model.validate()?;
        if bands == 0 || bands > MAX_BANDS {
            return Err(BrdfError::Invalid(format!("band count {bands} outside [1, {MAX_BANDS}]")));
        }
        if theta_steps == 0 {
            return Err(BrdfError::Invalid("theta steps must be >= 1".into()));
        }
        let n2 = bands * bands;
        let nt = (2 * bands + 2).max(64);
        let rule = SphereRule::new(nt, 2 * nt);
        let points = rule.points_in(&[(0.0, 1.0)]);
        let mut basis = vec![0.0; points.len() * n2];
        for (k, (d, _)) in points.iter().enumerate() {
            eval_basis_into(bands, *d, &mut basis[k * n2..(k + 1) * n2]);
        }
        // Y(x, y, -z) = (-1)^(l+m) Y(x, y, z): the even extension doubles the
        // even-parity coefficients and cancels the odd ones.
        let mut parity = vec![0.0; n2];
        for l in 0..bands {
            for m in -(l as i64)..=(l as i64) {
                parity[crate::sh::sh_index(l, m)] = if (l as i64 + m) % 2 == 0 { 2.0 } else { 0.0 };
            }
        }

        let n = Direction::Z;
        let mut entries_f = Vec::with_capacity(theta_steps);
        let mut entries_f_prime = Vec::with_capacity(theta_steps);
        let mut acc_f = [vec![0.0; n2], vec![0.0; n2], vec![0.0; n2]];
        let mut acc_p = [vec![0.0; n2], vec![0.0; n2], vec![0.0; n2]];
        for i in 0..theta_steps {
            let theta_o = theta_of(i, theta_steps);
            let wo = Direction::from_spherical(theta_o, 0.0);
            for a in acc_f.iter_mut().chain(acc_p.iter_mut()) {
                a.fill(0.0);
            }
            for (k, (wi, w)) in points.iter().enumerate() {
                let f = model.eval(*wi, wo, n);
                if f == Rgb::ZERO {
                    continue;
                }
                let b = &basis[k * n2..(k + 1) * n2];
                let fw = f * *w;
                let fc = fw * wi.z();
                for c in 0..3 {
                    let (vp, vf) = (fw[c], fc[c]);
                    for ((p, q), y) in acc_p[c].iter_mut().zip(acc_f[c].iter_mut()).zip(b) {
                        *p += vp * y;
                        *q += vf * y;
                    }
                }
            }
            let pack = |acc: &[Vec<f64>; 3], scale: Option<&[f64]>| -> Result<RgbSh, BrdfError> {
                let mk = |c: usize| -> Result<ShVector, BrdfError> {
                    let coeffs = match scale {
                        Some(s) => acc[c].iter().zip(s).map(|(a, b)| a * b).collect(),
                        None => acc[c].clone(),
                    };
                    let v = ShVector::from_coeffs(bands, coeffs)
                        .map_err(|e| BrdfError::Invalid(format!("tabulation produced {e}")))?;
                    Ok(window_coeffs(&v))
                };
                Ok(RgbSh { channels: [mk(0)?, mk(1)?, mk(2)?] })
            };
            entries_f.push(pack(&acc_f, None)?);
            entries_f_prime.push(pack(&acc_p, Some(&parity))?);
        }
        Ok(BrdfTable { bands, entries_f, entries_f_prime })
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn theta_steps(&self) -> usize {
        self.entries_f.len()
    }

    pub fn entries_f(&self) -> &[RgbSh] {
        &self.entries_f
    }

    pub fn entries_f_prime(&self) -> &[RgbSh] {
        &self.entries_f_prime
    }

    /// Bin of `theta_o`: nearest sample, clamped into the table.
    pub fn bin(&self, theta_o: f64) -> usize {
        let steps = self.theta_steps();
        let step = FRAC_PI_2 / steps as f64;
        let i = (theta_o.max(0.0) / step).round();
        if i.is_nan() {
            return 0;
        }
        (i as usize).min(steps - 1)
    }

    /// Nearest-sample entry; `primed` selects `F′` (no cosine factor).
    pub fn lookup(&self, theta_o: f64, primed: bool) -> &RgbSh {
        let i = self.bin(theta_o);
        if primed {
            &self.entries_f_prime[i]
        } else {
            &self.entries_f[i]
        }
    }

    /// Writes the binary cache form: `"HVLB"`, then `u32` version, bands,
    /// theta steps, channels, then every `F` entry followed by every `F′`
    /// entry as little-endian `f32` (channel-major within an entry).
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), BrdfError> {
        w.write_all(MAGIC)?;
        for v in [VERSION, self.bands as u32, self.theta_steps() as u32, CHANNELS] {
            w.write_all(&v.to_le_bytes())?;
        }
        for e in self.entries_f.iter().chain(&self.entries_f_prime) {
            for ch in &e.channels {
                for c in ch.coeffs() {
                    w.write_all(&(*c as f32).to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, BrdfError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(BrdfError::Format("bad magic".into()));
        }
        let mut header = [0u32; 4];
        for h in header.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *h = u32::from_le_bytes(b);
        }
        let [version, bands, steps, channels] = header;
        if version != VERSION {
            return Err(BrdfError::Format(format!("unsupported version {version}")));
        }
        if channels != CHANNELS {
            return Err(BrdfError::Format(format!("expected {CHANNELS} channels, got {channels}")));
        }
        let (bands, steps) = (bands as usize, steps as usize);
        if bands == 0 || bands > MAX_BANDS || steps == 0 {
            return Err(BrdfError::Format(format!("bad dimensions: {bands} bands, {steps} steps")));
        }
        let n2 = bands * bands;
        let mut read_entry = || -> Result<RgbSh, BrdfError> {
            let mut chan = || -> Result<ShVector, BrdfError> {
                let mut buf = vec![0u8; n2 * 4];
                r.read_exact(&mut buf)?;
                let coeffs = buf.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64).collect();
                ShVector::from_coeffs(bands, coeffs).map_err(|e| BrdfError::Format(e.to_string()))
            };
            Ok(RgbSh { channels: [chan()?, chan()?, chan()?] })
        };
        let entries_f = (0..steps).map(|_| read_entry()).collect::<Result<Vec<_>, _>>()?;
        let entries_f_prime = (0..steps).map(|_| read_entry()).collect::<Result<Vec<_>, _>>()?;
        Ok(BrdfTable { bands, entries_f, entries_f_prime })
    }

    pub fn save(&self, path: &Path) -> Result<(), BrdfError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, BrdfError> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Loads from `dir` when a table for the same model and size is cached
    /// there, otherwise tabulates and stores it.
    pub fn cached(model: &BrdfModel, bands: usize, theta_steps: usize, dir: &Path) -> Result<Self, BrdfError> {
        let path = dir.join(cache_file_name(model, bands, theta_steps));
        if let Ok(t) = Self::load(&path) {
            if t.bands == bands && t.theta_steps() == theta_steps {
                return Ok(t);
            }
        }
        let t = Self::tabulate(model, bands, theta_steps)?;
        std::fs::create_dir_all(dir)?;
        t.save(&path)?;
        Ok(t)
    }
}

/// Sample angle of bin `i`.
pub(crate) fn theta_of(i: usize, steps: usize) -> f64 {
    i as f64 * FRAC_PI_2 / steps as f64
}

fn cache_file_name(model: &BrdfModel, bands: usize, steps: usize) -> String {
    let hex = |v: Vec3| format!("{:016x}{:016x}{:016x}", v.x.to_bits(), v.y.to_bits(), v.z.to_bits());
    let params = match *model {
        BrdfModel::Lambertian { albedo } => format!("lambert-{}", hex(albedo)),
        BrdfModel::Ggx { albedo, roughness, eta } => {
            format!("ggx-{}-{:016x}-{:016x}", hex(albedo), roughness.to_bits(), eta.to_bits())
        }
        BrdfModel::Phong { diffuse, specular, exponent } => {
            format!("phong-{}-{}-{:016x}", hex(diffuse), hex(specular), exponent.to_bits())
        }
    };
    format!("{params}-b{bands}-t{steps}.hvlb")
}
