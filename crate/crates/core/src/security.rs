//! Reference-frame-independent security core.
//!
//! The phase-basis correlations enter only through
//! `C = sum (1 - 2 e)^2` over XX, XY, YX and YY, which does not depend on the
//! misalignment angle. `C` and the key-basis single-photon error bound give
//! Eve's information, and with the decoy bounds the finite-key rate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::finitekey::{decoy_bounds, tau, DecoyBounds, EpsilonBudget};
use crate::statmodel::{
    expected_tallies, single_photon, vacuum_yield, BasisPair, ChannelParams, ProtocolParams,
    SessionParams, TallyTable,
};

/// Default error-correction efficiency.
pub const DEFAULT_EC_EFFICIENCY: f64 = 1.16;

/// Binary Shannon entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid("x", format!("{x} not in [0, 1]")));
    }
    Ok(entropy(x))
}

fn entropy(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// `C` from the single-photon error bounds of XX, XY, YX and YY.
pub fn c_quantity(e1u: [f64; 4]) -> f64 {
    e1u.iter().map(|e| (1.0 - 2.0 * e).powi(2)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveInformation {
    pub u: f64,
    pub v: f64,
    pub i_e_upper: f64,
}

/// Upper bound on Eve's information per single-photon key event.
pub fn eve_information(e_zz_1u: f64, c: f64) -> EveInformation {
    let e = e_zz_1u;
    let c = c.max(0.0);
    let u = ((c / 2.0).sqrt() / (1.0 - e)).min(1.0);
    // v multiplies e in the leakage, so its value at e = 0 is immaterial.
    let v = if e > 0.0 {
        let radicand = c / 2.0 - (1.0 - e).powi(2) * u * u;
        radicand.max(0.0).sqrt() / e
    } else {
        0.0
    };
    let i_e_upper = (1.0 - e) * entropy((1.0 + u) / 2.0) + e * entropy((1.0 + v) / 2.0);
    EveInformation {
        u,
        v,
        i_e_upper: i_e_upper.clamp(0.0, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityResult {
    pub c_value: f64,
    /// Single-photon error bounds of XX, XY, YX, YY.
    pub e1_phase: [f64; 4],
    pub e_zz_1u: f64,
    /// Observed key-basis error rate over both intensities.
    pub e_zz: f64,
    pub n_zz: f64,
    pub s0_lower: f64,
    pub s1_lower: f64,
    pub u_value: f64,
    pub v_value: f64,
    pub i_e_upper: f64,
    pub skr_per_pulse: f64,
    pub skr_bits_per_second: f64,
}

/// Finite-key rate from the key-basis bounds and the phase-basis error bounds.
pub fn secret_key_rate(
    t: &TallyTable,
    bounds_zz: &DecoyBounds,
    e1_phase: [f64; 4],
    eb: &EpsilonBudget,
    sess: &SessionParams,
    f: f64,
) -> Result<SecurityResult> {
    if !(f >= 1.0) {
        return Err(invalid("f", format!("{f} must be >= 1")));
    }
    let n_zz = t.n_total(BasisPair::ZZ);
    if !(n_zz > 0.0) {
        return Err(Error::EmptyKeyBasis);
    }
    let e_zz = t.m_total(BasisPair::ZZ) / n_zz;
    let c_value = c_quantity(e1_phase);
    let eve = eve_information(bounds_zz.e1_upper, c_value);

    let correction = eb.a as f64 * (eb.b as f64 / eb.eps_sec).log2() + (2.0 / eb.eps_cor).log2();
    let key = bounds_zz.s0_lower + bounds_zz.s1_lower * (1.0 - eve.i_e_upper)
        - n_zz * f * entropy(e_zz)
        - correction;
    let skr_per_pulse = (key / sess.n_tot).max(0.0);

    Ok(SecurityResult {
        c_value,
        e1_phase,
        e_zz_1u: bounds_zz.e1_upper,
        e_zz,
        n_zz,
        s0_lower: bounds_zz.s0_lower,
        s1_lower: bounds_zz.s1_lower,
        u_value: eve.u,
        v_value: eve.v,
        i_e_upper: eve.i_e_upper,
        skr_per_pulse,
        skr_bits_per_second: skr_per_pulse * sess.rep_rate_hz,
    })
}

/// Runs the decoy bounds on all five pairs and then the rate.
pub fn finite_key_rate(
    t: &TallyTable,
    pp: &ProtocolParams,
    eb: &EpsilonBudget,
    sess: &SessionParams,
    f: f64,
) -> Result<SecurityResult> {
    eb.validate()?;
    let zz = decoy_bounds(t, BasisPair::ZZ, pp, eb)?;
    let mut e1_phase = [0.5; 4];
    for (slot, pair) in e1_phase.iter_mut().zip(BasisPair::PHASE) {
        *slot = decoy_bounds(t, pair, pp, eb)?.e1_upper;
    }
    secret_key_rate(t, &zz, e1_phase, eb, sess, f)
}

/// True single-photon error rates of XX, XY, YX, YY from the channel model.
pub fn asymptotic_phase_errors(ch: &ChannelParams) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, pair) in out.iter_mut().zip(BasisPair::PHASE) {
        *slot = single_photon(ch, pair)?.1;
    }
    Ok(out)
}

/// `C` computed from the true single-photon error rates.
pub fn asymptotic_c(ch: &ChannelParams) -> Result<f64> {
    Ok(c_quantity(asymptotic_phase_errors(ch)?))
}

/// Infinite-statistics rate: single-photon and vacuum contributions from the
/// channel model, no fluctuation or composition terms.
pub fn asymptotic_key_rate(
    ch: &ChannelParams,
    pp: &ProtocolParams,
    sess: &SessionParams,
    f: f64,
) -> Result<SecurityResult> {
    let t = expected_tallies(ch, pp, sess)?;
    let n_zz = t.n_total(BasisPair::ZZ);
    if !(n_zz > 0.0) {
        return Err(Error::EmptyKeyBasis);
    }
    let e_zz = t.m_total(BasisPair::ZZ) / n_zz;
    let sifted = sess.n_tot * pp.p_z * pp.p_z;
    let (y1, e1_zz) = single_photon(ch, BasisPair::ZZ)?;
    let s1 = sifted * tau(1, pp)? * y1;
    let s0 = sifted * tau(0, pp)? * vacuum_yield(ch, BasisPair::ZZ);

    let e1_phase = asymptotic_phase_errors(ch)?;
    let c_value = c_quantity(e1_phase);
    let eve = eve_information(e1_zz, c_value);
    let key = s0 + s1 * (1.0 - eve.i_e_upper) - n_zz * f * entropy(e_zz);
    let skr_per_pulse = (key / sess.n_tot).max(0.0);
    Ok(SecurityResult {
        c_value,
        e1_phase,
        e_zz_1u: e1_zz,
        e_zz,
        n_zz,
        s0_lower: s0,
        s1_lower: s1,
        u_value: eve.u,
        v_value: eve.v,
        i_e_upper: eve.i_e_upper,
        skr_per_pulse,
        skr_bits_per_second: skr_per_pulse * sess.rep_rate_hz,
    })
}

/// Misalignment angle from the signal-state XX error rate,
/// `theta = arccos(1 - 2 E_XX)`.
///
/// Valid in the weak-signal regime (`mu eta (1 +/- cos theta)/2 << 1`) with
/// dark counts well below `mu eta`.
pub fn estimate_theta(e_xx_mu: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&e_xx_mu) {
        return Err(invalid("e_xx_mu", format!("{e_xx_mu} not in [0, 0.5]")));
    }
    Ok((1.0 - 2.0 * e_xx_mu).acos())
}
