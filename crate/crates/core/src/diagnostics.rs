//! Benchmarks: the repeaterless capacity bound and the sending-or-not-sending
//! source-constraint penalty (quantum-coin imbalance).

use serde::{Deserialize, Serialize};

use crate::channel_model::{single_photon_yield, transmittance, LinkGeometry, SystemParams};
use crate::error::{Error, Result};

/// Repeaterless secret-key capacity `-log2(1 - eta)` for a fiber of
/// `total_km`, detector efficiency included in `eta`.
pub fn plob_bound(total_km: f64, eta_d: f64, alpha_db_per_km: f64) -> f64 {
    let eta = transmittance(total_km, eta_d, alpha_db_per_km);
    -(-eta).ln_1p() / std::f64::consts::LN_2
}

/// Intensities and Z-window probabilities of a sending-or-not-sending pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnsSourceSetting {
    pub mu_a: f64,
    pub mu_b: f64,
    pub nu_a: f64,
    pub nu_b: f64,
    pub t_a: f64,
    pub t_b: f64,
}

impl SnsSourceSetting {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu_a", self.mu_a),
            ("mu_b", self.mu_b),
            ("nu_a", self.nu_a),
            ("nu_b", self.nu_b),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSetting(format!("{name} = {v} must be > 0")));
            }
        }
        for (name, v) in [("t_a", self.t_a), ("t_b", self.t_b)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidSetting(format!("{name} = {v} not in (0, 1)")));
            }
        }
        Ok(())
    }

    /// Unnormalized Z-basis single-photon weights `t_a(1-t_b) mu_a e^{-mu_a}`
    /// and its mirror.
    fn z_weights(&self) -> (f64, f64) {
        (
            self.t_a * (1.0 - self.t_b) * self.mu_a * (-self.mu_a).exp(),
            self.t_b * (1.0 - self.t_a) * self.mu_b * (-self.mu_b).exp(),
        )
    }
}

/// `nu_a/nu_b` minus the ratio the Z-window settings require; zero iff the
/// X and Z single-photon states coincide.
pub fn sns_constraint_residual(s: &SnsSourceSetting) -> Result<f64> {
    s.validate()?;
    let (wa, wb) = s.z_weights();
    Ok(s.nu_a / s.nu_b - wa / wb)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinImbalance {
    pub fidelity: f64,
    pub q1: f64,
    pub delta: f64,
}

/// Fidelity between the two diagonal single-photon states, the Z-basis
/// single-photon yield `Q1`, and the imbalance `(1 - F)/(2 Q1)`.
pub fn sns_quantum_coin_delta(s: &SnsSourceSetting, y10: f64, y01: f64) -> Result<CoinImbalance> {
    s.validate()?;
    for (name, y) in [("y10", y10), ("y01", y01)] {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::Domain {
                name,
                value: y,
                domain: "(0, 1]",
            });
        }
    }
    let (wa, wb) = s.z_weights();
    let c = 1.0 / (wa + wb);
    let (za, zb) = (c * wa, c * wb);
    let (xa, xb) = (s.nu_a / (s.nu_a + s.nu_b), s.nu_b / (s.nu_a + s.nu_b));
    let fidelity = ((za * xa).sqrt() + (zb * xb).sqrt()).min(1.0);
    let q1 = c * (wa * y10 + wb * y01);
    let delta = (1.0 - fidelity) / (2.0 * q1);
    if delta >= 0.5 {
        return Err(Error::UnusableCoin(delta));
    }
    Ok(CoinImbalance {
        fidelity,
        q1,
        delta,
    })
}

/// Single-photon yields of the channel, for use as `(y10, y01)` above.
pub fn channel_single_photon_yields(
    geom: &LinkGeometry,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    let eta_a = transmittance(geom.l_a_km, params.eta_d, params.alpha_db_per_km);
    let eta_b = transmittance(geom.l_b_km, params.eta_d, params.alpha_db_per_km);
    Ok((
        single_photon_yield(eta_a, params.p_d)?,
        single_photon_yield(eta_b, params.p_d)?,
    ))
}

/// The two phase-error bounds given an imbalance and an X-basis error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseErrorBound {
    pub exact: f64,
    pub relaxed: f64,
    pub bound: f64,
}

/// Upper bound on the Z-basis phase error rate, clamped to 0.5.
pub fn sns_phase_error_bound(delta: f64, e1x: f64) -> Result<PhaseErrorBound> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::Domain {
            name: "coin imbalance",
            value: delta,
            domain: "[0, 0.5)",
        });
    }
    if !(0.0..=0.5).contains(&e1x) {
        return Err(Error::Domain {
            name: "X-basis error rate",
            value: e1x,
            domain: "[0, 0.5]",
        });
    }
    let root =
        (1.0 - 2.0 * delta) * e1x.sqrt() + 2.0 * (delta * (1.0 - delta) * (1.0 - e1x)).sqrt();
    let exact = root * root;
    let relaxed = e1x + 4.0 * delta + 4.0 * (delta * e1x).sqrt();
    Ok(PhaseErrorBound {
        exact,
        relaxed,
        bound: exact.min(relaxed).min(0.5),
    })
}
