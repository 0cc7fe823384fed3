//! Channel realizations: node geometry, Rician fading and free-space path
//! loss, drawn from seeded, replayable RNG streams.
//!
//! Coordinates are `(x, y, z)` with `y` the height above the X-Z plane.
//! Alice sits at `x = 0`, Bob at `x = D`, Eve at `x = D_E`, and the IRS is a
//! planar grid in the `z = 0` plane centered horizontally at `x = D/2`.

use std::f64::consts::PI;
use std::path::Path;


use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CMat;

/// Which variant of the IRS-Eve path-loss denominator to use.
///
/// The product-distance model we follow prints the Eve term as
/// `l_e / sqrt(D_E + l_e^2)`, which is dimensionally odd next to the Bob
/// term `l_r / sqrt((D/2)^2 + l_r^2)`. `AsPrinted` keeps the published
/// form; `Symmetric` squares `D_E` inside the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaIeVariant {
    #[default]
    AsPrinted,
    Symmetric,
}

/// Node geometry, fading and noise parameters for one scenario.
///
/// Field names mirror the conventional symbols; Greek letters are spelled
/// out (`iota_a`, `upsilon`, `kappa`, `epsilon`, `sigma2_b`). Defaults are
/// the evaluation setup used throughout the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Transmit antennas at Alice.
    #[serde(rename = "Nt")]
    pub nt: usize,
    /// Receive antennas at Bob.
    #[serde(rename = "Nr")]
    pub nr: usize,
    /// Receive antennas at Eve.
    #[serde(rename = "Ne")]
    pub ne: usize,
    /// Reflecting elements at the IRS (0 disables the surface).
    #[serde(rename = "N")]
    pub n: usize,
    /// Alice-Bob horizontal separation (m).
    #[serde(rename = "D")]
    pub d: f64,
    /// Alice-Eve horizontal separation (m).
    #[serde(rename = "D_E")]
    pub d_e: f64,
    /// Third coordinate of Alice, Bob, Eve (m).
    pub l_t: f64,
    pub l_r: f64,
    pub l_e: f64,
    /// Top-most element heights (m).
    #[serde(rename = "h_T")]
    pub h_t: f64,
    #[serde(rename = "h_R")]
    pub h_r: f64,
    #[serde(rename = "h_E")]
    pub h_e: f64,
    #[serde(rename = "h_I")]
    pub h_i: f64,
    /// Element spacings (m).
    pub iota_a: f64,
    pub iota_b: f64,
    pub iota_e: f64,
    /// IRS grid pitch (m). The published parameter list says 0.03 m, but the
    /// stated element size (0.01 m) plus gap (0.01 m) gives 0.02 m; we default
    /// to the latter and leave it configurable.
    pub iota_i: f64,
    /// Carrier wavelength (m).
    pub upsilon: f64,
    /// Rician K-factor (linear).
    pub kappa: f64,
    /// Path-loss exponent.
    pub epsilon: f64,
    /// Noise powers at Bob and Eve (W).
    pub sigma2_b: f64,
    pub sigma2_e: f64,
    /// IRS-Eve path-loss denominator variant.
    pub zeta_ie_variant: ZetaIeVariant,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        // sigma_n^2 = -95 dBW at both receivers.
        let sigma2 = 10f64.powf(-9.5);
        GeometryConfig {
            nt: 4,
            nr: 3,
            ne: 2,
            n: 25,
            d: 50.0,
            d_e: 40.0,
            l_t: 20.0,
            l_r: 15.0,
            l_e: 35.0,
            h_t: 3.0,
            h_r: 2.5,
            h_e: 2.0,
            h_i: 5.0,
            iota_a: 0.05,
            iota_b: 0.25,
            iota_e: 0.03,
            iota_i: 0.02,
            upsilon: 0.15,
            kappa: 1.0,
            epsilon: 3.0,
            sigma2_b: sigma2,
            sigma2_e: sigma2,
            zeta_ie_variant: ZetaIeVariant::AsPrinted,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.nt < 1 || self.nr < 1 || self.ne < 1 {
            problems.push("antenna counts Nt, Nr, Ne must be >= 1".to_string());
        }
        for (name, v) in [
            ("D", self.d),
            ("D_E", self.d_e),
            ("l_t", self.l_t),
            ("l_r", self.l_r),
            ("l_e", self.l_e),
            ("h_T", self.h_t),
            ("h_R", self.h_r),
            ("h_E", self.h_e),
            ("h_I", self.h_i),
            ("iota_a", self.iota_a),
            ("iota_b", self.iota_b),
            ("iota_e", self.iota_e),
            ("iota_i", self.iota_i),
            ("upsilon", self.upsilon),
        ] {
            if !(v > 0.0) {
                problems.push(format!("{name} must be > 0 (got {v})"));
            }
        }
        if !(self.kappa >= 0.0) {
            problems.push(format!("kappa must be >= 0 (got {})", self.kappa));
        }
        if !(self.epsilon > 0.0) {
            problems.push(format!("epsilon must be > 0 (got {})", self.epsilon));
        }
        if !(self.sigma2_b > 0.0) || !(self.sigma2_e > 0.0) {
            problems.push("noise powers must be > 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Load from a TOML file; missing keys fall back to defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: GeometryConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    /// Alice-Bob reference distance between node anchors.
    pub fn dist_ab(&self) -> f64 {
        (self.d * self.d + (self.l_t - self.l_r).powi(2)).sqrt()
    }

    /// Alice-Eve reference distance between node anchors.
    pub fn dist_ae(&self) -> f64 {
        (self.d_e * self.d_e + (self.l_t - self.l_e).powi(2)).sqrt()
    }

    /// Noise standard deviations.
    pub fn sigma_b(&self) -> f64 {
        self.sigma2_b.sqrt()
    }

    pub fn sigma_e(&self) -> f64 {
        self.sigma2_e.sqrt()
    }

    /// Copy with a different element/antenna count, for sweeps.
    pub fn with_counts(&self, n: usize, ne: usize) -> Self {
        let mut cfg = self.clone();
        cfg.n = n;
        cfg.ne = ne;
        cfg
    }
}

/// 3-D element coordinates for all four nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionSet {
    pub alice: Vec<[f64; 3]>,
    pub bob: Vec<[f64; 3]>,
    pub eve: Vec<[f64; 3]>,
    pub irs: Vec<[f64; 3]>,
}

fn linear_array(x: f64, top: f64, z: f64, spacing: f64, count: usize) -> Vec<[f64; 3]> {
    (0..count)
        .map(|k| [x, top - k as f64 * spacing, z])
        .collect()
}

/// Element coordinates per the scenario geometry.
///
/// Antenna arrays run downward from their top-most element; the IRS is a
/// row-major near-square grid (`ceil(sqrt(N))` columns) in the `z = 0`
/// plane with top-left reference `(D/2, h_I, 0)` and pitch `iota_i` along
/// both in-plane axes.
pub fn element_positions(cfg: &GeometryConfig) -> Result<PositionSet> {
    cfg.validate()?;
    let check_height = |node: &str, top: f64, spacing: f64, count: usize| -> Result<()> {
        if count > 0 && top - (count - 1) as f64 * spacing < 0.0 {
            return Err(Error::Geometry(format!(
                "{node} array extends below ground: top {top} m, {count} elements at {spacing} m"
            )));
        }
        Ok(())
    };
    check_height("Alice", cfg.h_t, cfg.iota_a, cfg.nt)?;
    check_height("Bob", cfg.h_r, cfg.iota_b, cfg.nr)?;
    check_height("Eve", cfg.h_e, cfg.iota_e, cfg.ne)?;

    let alice = linear_array(0.0, cfg.h_t, cfg.l_t, cfg.iota_a, cfg.nt);
    let bob = linear_array(cfg.d, cfg.h_r, cfg.l_r, cfg.iota_b, cfg.nr);
    let eve = linear_array(cfg.d_e, cfg.h_e, cfg.l_e, cfg.iota_e, cfg.ne);

    let mut irs = Vec::with_capacity(cfg.n);
    if cfg.n > 0 {
        let cols = (cfg.n as f64).sqrt().ceil() as usize;
        let rows = cfg.n.div_ceil(cols);
        check_height("IRS", cfg.h_i, cfg.iota_i, rows)?;
        for k in 0..cfg.n {
            let row = k / cols;
            let col = k % cols;
            irs.push([
                cfg.d / 2.0 + col as f64 * cfg.iota_i,
                cfg.h_i - row as f64 * cfg.iota_i,
                0.0,
            ]);
        }
    }
    Ok(PositionSet {
        alice,
        bob,
        eve,
        irs,
    })
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Line-of-sight phase matrix: entry `(r, t)` is `exp(-j 2 pi d_{r,t} / upsilon)`.
pub fn los_matrix(tx: &[[f64; 3]], rx: &[[f64; 3]], upsilon: f64) -> CMat {
    CMat::from_fn(rx.len(), tx.len(), |r, t| {
        let phase = -2.0 * PI * dist(&rx[r], &tx[t]) / upsilon;
        Complex64::from_polar(1.0, phase)
    })
}

/// Free-space path loss for the direct links: `zeta = (4 pi / upsilon)^2 d^epsilon`.
pub fn fspl_direct(distance: f64, upsilon: f64, epsilon: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain {
            op: "fspl_direct",
            detail: format!("distance must be > 0, got {distance}"),
        });
    }
    Ok((4.0 * PI / upsilon).powi(2) * distance.powf(epsilon))
}

/// Which IRS cascade link a path-loss coefficient refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsTarget {
    Bob,
    Eve,
}

/// Product-distance path loss of the IRS cascade toward Bob or Eve.
pub fn fspl_irs(cfg: &GeometryConfig, target: IrsTarget) -> f64 {
    let d_t = ((cfg.d / 2.0).powi(2) + cfg.l_t * cfg.l_t).sqrt();
    let lead = 256.0 * PI * PI * cfg.upsilon.powi(-4) * d_t * d_t;
    match target {
        IrsTarget::Bob => {
            let d_r = ((cfg.d / 2.0).powi(2) + cfg.l_r * cfg.l_r).sqrt();
            lead * d_r * d_r / (cfg.l_t / d_t + cfg.l_r / d_r).powi(2)
        }
        IrsTarget::Eve => {
            let d_e = ((cfg.d_e / 2.0).powi(2) + cfg.l_e * cfg.l_e).sqrt();
            let eve_term = match cfg.zeta_ie_variant {
                ZetaIeVariant::AsPrinted => cfg.l_e / (cfg.d_e + cfg.l_e * cfg.l_e).sqrt(),
                ZetaIeVariant::Symmetric => {
                    cfg.l_e / (cfg.d_e * cfg.d_e + cfg.l_e * cfg.l_e).sqrt()
                }
            };
            lead * d_e * d_e / (cfg.l_t / d_t + eve_term).powi(2)
        }
    }
}

/// RNG stream purposes derived from one `(master, trial)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Channel matrix draws.
    Channel,
    /// Phase-shift initialization.
    PhaseInit,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Channel => 0x4348414e,
            StreamPurpose::PhaseInit => 0x50484153,
        }
    }
}

/// Replay handle: a master seed plus a trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub trial: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(master: u64, trial: u64) -> Self {
        Seed { master, trial }
    }

    /// Independent ChaCha stream for `(master, trial, purpose)`.
    ///
    /// The 256-bit key is expanded by a SplitMix64 chain over the three
    /// inputs, so distinct tuples get unrelated streams and parallel trials
    /// are reproducible regardless of scheduling.
    pub fn stream(&self, purpose: StreamPurpose) -> ChaCha12Rng {
        let mut state = self
            .master
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(self.trial)
            .wrapping_add(purpose.tag().wrapping_mul(0xd1342543de82ef95));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

/// The five channel matrices of one realization plus noise-normalized forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_ab: CMat,
    pub h_ae: CMat,
    pub h_ai: CMat,
    pub h_ib: CMat,
    pub h_ie: CMat,
    /// Noise standard deviations at Bob and Eve (sqrt W).
    pub sigma_b: f64,
    pub sigma_e: f64,
    /// Cached noise-normalized matrices.
    pub h_ab_bar: CMat,
    pub h_ib_bar: CMat,
    pub h_ae_bar: CMat,
    pub h_ie_bar: CMat,
}

impl ChannelSet {
    pub fn new(
        h_ab: CMat,
        h_ae: CMat,
        h_ai: CMat,
        h_ib: CMat,
        h_ie: CMat,
        sigma_b: f64,
        sigma_e: f64,
    ) -> Result<Self> {
        let nt = h_ab.ncols();
        let nr = h_ab.nrows();
        let ne = h_ae.nrows();
        let n = h_ai.nrows();
        let ok = h_ae.ncols() == nt
            && h_ai.ncols() == nt
            && h_ib.nrows() == nr
            && h_ib.ncols() == n
            && h_ie.nrows() == ne
            && h_ie.ncols() == n;
        if !ok {
            return Err(Error::Dimension {
                op: "ChannelSet::new",
                detail: format!(
                    "inconsistent shapes: AB {}x{}, AE {}x{}, AI {}x{}, IB {}x{}, IE {}x{}",
                    h_ab.nrows(),
                    h_ab.ncols(),
                    h_ae.nrows(),
                    h_ae.ncols(),
                    h_ai.nrows(),
                    h_ai.ncols(),
                    h_ib.nrows(),
                    h_ib.ncols(),
                    h_ie.nrows(),
                    h_ie.ncols()
                ),
            });
        }
        if !(sigma_b > 0.0) || !(sigma_e > 0.0) {
            return Err(Error::Domain {
                op: "ChannelSet::new",
                detail: "noise std must be > 0".to_string(),
            });
        }
        let inv_b = Complex64::new(1.0 / sigma_b, 0.0);
        let inv_e = Complex64::new(1.0 / sigma_e, 0.0);
        Ok(ChannelSet {
            h_ab_bar: &h_ab * inv_b,
            h_ib_bar: &h_ib * inv_b,
            h_ae_bar: &h_ae * inv_e,
            h_ie_bar: &h_ie * inv_e,
            h_ab,
            h_ae,
            h_ai,
            h_ib,
            h_ie,
            sigma_b,
            sigma_e,
        })
    }

    pub fn nt(&self) -> usize {
        self.h_ab.ncols()
    }

    pub fn nr(&self) -> usize {
        self.h_ab.nrows()
    }

    pub fn ne(&self) -> usize {
        self.h_ae.nrows()
    }

    /// Number of IRS elements.
    pub fn n(&self) -> usize {
        self.h_ai.nrows()
    }

    /// Same direct links with the IRS removed (N = 0).
    pub fn without_irs(&self) -> ChannelSet {
        ChannelSet::new(
            self.h_ab.clone(),
            self.h_ae.clone(),
            CMat::zeros(0, self.nt()),
            CMat::zeros(self.nr(), 0),
            CMat::zeros(self.ne(), 0),
            self.sigma_b,
            self.sigma_e,
        )
        .expect("shapes remain consistent")
    }
}

/// Circularly-symmetric complex Gaussian matrix with unit entry variance.
///
/// Entries are `(g1 + j g2)/sqrt(2)` drawn in column-major order.
fn nlos_matrix(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    })
}

fn rician(los: &CMat, nlos: &CMat, kappa: f64, zeta: Option<f64>) -> CMat {
    let path = match zeta {
        Some(z) => (1.0 / z).sqrt(),
        None => 1.0,
    };
    let lead = Complex64::new(path / (kappa + 1.0).sqrt(), 0.0);
    let k_sqrt = Complex64::new(kappa.sqrt(), 0.0);
    (los * k_sqrt + nlos) * lead
}

/// Draw one Rician channel realization for the given geometry and seed.
///
/// Deterministic in `(cfg, seed)`: matrices are drawn in the fixed order
/// AB, AE, AI, IB, IE from the seed's channel stream.
pub fn draw_channels(cfg: &GeometryConfig, seed: &Seed) -> Result<ChannelSet> {
    let pos = element_positions(cfg)?;
    let mut rng = seed.stream(StreamPurpose::Channel);

    let zeta_ab = fspl_direct(cfg.dist_ab(), cfg.upsilon, cfg.epsilon)?;
    let zeta_ae = fspl_direct(cfg.dist_ae(), cfg.upsilon, cfg.epsilon)?;
    let zeta_ib = fspl_irs(cfg, IrsTarget::Bob);
    let zeta_ie = fspl_irs(cfg, IrsTarget::Eve);

    let nlos_ab = nlos_matrix(cfg.nr, cfg.nt, &mut rng);
    let nlos_ae = nlos_matrix(cfg.ne, cfg.nt, &mut rng);
    let nlos_ai = nlos_matrix(cfg.n, cfg.nt, &mut rng);
    let nlos_ib = nlos_matrix(cfg.nr, cfg.n, &mut rng);
    let nlos_ie = nlos_matrix(cfg.ne, cfg.n, &mut rng);

    let h_ab = rician(
        &los_matrix(&pos.alice, &pos.bob, cfg.upsilon),
        &nlos_ab,
        cfg.kappa,
        Some(zeta_ab),
    );
    let h_ae = rician(
        &los_matrix(&pos.alice, &pos.eve, cfg.upsilon),
        &nlos_ae,
        cfg.kappa,
        Some(zeta_ae),
    );
    // The Alice-IRS hop carries no separate loss factor; the cascade loss
    // lives entirely in zeta_IB / zeta_IE.
    let h_ai = rician(
        &los_matrix(&pos.alice, &pos.irs, cfg.upsilon),
        &nlos_ai,
        cfg.kappa,
        None,
    );
    let h_ib = rician(
        &los_matrix(&pos.irs, &pos.bob, cfg.upsilon),
        &nlos_ib,
        cfg.kappa,
        Some(zeta_ib),
    );
    let h_ie = rician(
        &los_matrix(&pos.irs, &pos.eve, cfg.upsilon),
        &nlos_ie,
        cfg.kappa,
        Some(zeta_ie),
    );

    ChannelSet::new(
        h_ab,
        h_ae,
        h_ai,
        h_ib,
        h_ie,
        cfg.sigma_b(),
        cfg.sigma_e(),
    )
}

/// `10^((dBm - 30)/10)` watts.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// `10 log10(W) + 30` dBm.
pub fn watts_to_dbm(p_watts: f64) -> f64 {
    10.0 * p_watts.log10() + 30.0
}
