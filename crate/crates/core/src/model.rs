//! Hidden-variable models: per-emission latent draws, measurement outcome
//! rules, detection rules and time-delay rules for the five model variants.
//!
//! All functions here are pure. The right-hand station carries the hidden
//! angle `e + π`, realized throughout as sign and magnitude of `-cos(e - β)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which simulation model a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    /// Pulsed detection-loophole model, threshold `p = sin²(uπ/2)/2`.
    EprSimple,
    /// Pulsed detection-loophole model with Pearle's threshold `p = 2/√(1+3u) − 1`.
    Pearle,
    /// Clocked model with timescale, detector jitter and window 4e-4.
    ClockedCore,
    /// Clocked model rescaled to unit timescale, gain 1.28, window 0.034.
    ClockedSimplified,
    /// Clocked model with Pearle's threshold, unit gain and a tiny window.
    ClockedOptimized,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [
        ModelId::EprSimple,
        ModelId::Pearle,
        ModelId::ClockedCore,
        ModelId::ClockedSimplified,
        ModelId::ClockedOptimized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::EprSimple => "epr-simple",
            ModelId::Pearle => "pearle",
            ModelId::ClockedCore => "clocked-core",
            ModelId::ClockedSimplified => "clocked-simplified",
            ModelId::ClockedOptimized => "clocked-optimized",
        }
    }

    /// True for the models that emit timestamped detections; pulsed models
    /// instead decide detection per discrete trial.
    pub fn is_clocked(self) -> bool {
        matches!(
            self,
            ModelId::ClockedCore | ModelId::ClockedSimplified | ModelId::ClockedOptimized
        )
    }

    pub fn is_pulsed(self) -> bool {
        !self.is_clocked()
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_owned()))
    }
}

/// Measurement station. `Left` is Alice, `Right` is Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Station {
    Left,
    Right,
}

/// Ternary measurement result; `Zero` means no detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Zero,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Zero => 0,
            Outcome::Minus => -1,
        }
    }

    /// Row/column position in a 3x3 outcome table, ordered (+1, 0, -1).
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Zero => 1,
            Outcome::Minus => 2,
        }
    }

    pub fn is_detected(self) -> bool {
        self != Outcome::Zero
    }
}

/// Model parameters; only the clocked variants read them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Timescale multiplying clocked-core delays, seconds.
    pub timescale: f64,
    /// Lower bound of the clocked-core detector jitter interval `[asym, 1]`.
    pub asym: f64,
    /// Gain on the cosine magnitude in simplified/optimized delays.
    pub delay_gain: f64,
    /// Coincidence window, seconds (strict `|Δt| < window`).
    pub coinc_window: f64,
}

impl ModelParams {
    /// Stock parameters for each model variant.
    pub fn for_model(model: ModelId) -> Self {
        let (delay_gain, coinc_window) = match model {
            ModelId::ClockedSimplified => (1.28, 0.034),
            ModelId::ClockedOptimized => (1.0, 1e-6),
            _ => (1.0, 0.0004),
        };
        ModelParams {
            timescale: PI * 0.03,
            asym: 0.98,
            delay_gain,
            coinc_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("timescale", self.timescale, self.timescale > 0.0),
            ("asym", self.asym, self.asym > 0.0 && self.asym <= 1.0),
            ("delay_gain", self.delay_gain, self.delay_gain > 0.0),
            ("coinc_window", self.coinc_window, self.coinc_window > 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidParam { name, value });
            }
        }
        Ok(())
    }
}

/// Detector-side multiplicative jitters drawn for the clocked-core model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub left: f64,
    pub right: f64,
}

/// Per-emission hidden variables shared by both particles of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenPair {
    /// Hidden angle, radians in `[0, 2π)`.
    pub e: f64,
    /// Detection threshold (pulsed) or delay threshold (clocked).
    pub p: f64,
    /// Present iff the model is `ClockedCore`.
    pub jitter: Option<Jitter>,
}

fn check_unit(u: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&u) {
        Ok(u)
    } else {
        Err(Error::UnitRange(u))
    }
}

/// Draw one hidden pair from four unit uniforms.
///
/// `u[0]` sets the angle, `u[1]` the threshold; `u[2]`/`u[3]` become the
/// clocked-core jitters and are ignored by every other variant. All four are
/// always consumed so trial streams stay aligned across model variants.
pub fn sample_hidden(model: ModelId, params: &ModelParams, u: [f64; 4]) -> Result<HiddenPair> {
    for v in u {
        check_unit(v)?;
    }
    let e = 2.0 * PI * u[0];
    let p = match model {
        ModelId::EprSimple => (u[1] * PI / 2.0).sin().powi(2) / 2.0,
        ModelId::Pearle | ModelId::ClockedOptimized => 2.0 / (1.0 + 3.0 * u[1]).sqrt() - 1.0,
        ModelId::ClockedCore => 0.5 * (u[1] * PI / 6.0).sin().powi(2),
        ModelId::ClockedSimplified => 4.0 * (u[1] * PI / 6.0).sin().powi(2),
    };
    let jitter = (model == ModelId::ClockedCore).then(|| Jitter {
        left: params.asym + (1.0 - params.asym) * u[2],
        right: params.asym + (1.0 - params.asym) * u[3],
    });
    Ok(HiddenPair { e, p, jitter })
}

/// The station's signed cosine: `cos(e - setting)` on the left and
/// `-cos(e - setting)` on the right (the `e + π` convention).
#[inline]
fn station_cos(e: f64, setting: f64, station: Station) -> f64 {
    let c = (e - setting).cos();
    match station {
        Station::Left => c,
        Station::Right => -c,
    }
}

#[inline]
fn sign_of(c: f64) -> Outcome {
    // c == 0 resolves to +1; measure-zero under a continuous hidden angle.
    if c >= 0.0 {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// Ternary outcome of a pulsed-model measurement: the sign of the station
/// cosine if its magnitude strictly exceeds the threshold, else no detection.
pub fn outcome_detect(model: ModelId, hv: &HiddenPair, setting: f64, station: Station) -> Outcome {
    assert!(
        model.is_pulsed(),
        "outcome_detect applies to pulsed models; clocked variants always detect"
    );
    let c = station_cos(hv.e, setting, station);
    if c.abs() > hv.p {
        sign_of(c)
    } else {
        Outcome::Zero
    }
}

/// Clocked-model outcome: always a sign, never `Zero`; acceptance is decided
/// later by pairing.
pub fn outcome_sign(hv: &HiddenPair, setting: f64, station: Station) -> Outcome {
    sign_of(station_cos(hv.e, setting, station))
}

/// Time delay a clocked-model particle picks up at its detector, seconds.
///
/// Simplified/optimized use the same `|cos(e - setting)|` expression at both
/// stations, so equal settings give bit-identical delays.
pub fn delay(
    model: ModelId,
    hv: &HiddenPair,
    setting: f64,
    station: Station,
    params: &ModelParams,
) -> f64 {
    match model {
        ModelId::ClockedCore => {
            let jitter = hv.jitter.expect("clocked-core hidden pair carries jitters");
            let m = match station {
                Station::Left => jitter.left,
                Station::Right => jitter.right,
            };
            let c = station_cos(hv.e, setting, station);
            params.timescale * (m * hv.p - (0.5 / PI) * c.abs()).max(0.0)
        }
        ModelId::ClockedSimplified | ModelId::ClockedOptimized => {
            let mag = (hv.e - setting).cos().abs();
            (hv.p - params.delay_gain * mag).max(0.0)
        }
        ModelId::EprSimple | ModelId::Pearle => {
            panic!("delay applies to clocked models only")
        }
    }
}
