//! Pulse-level Monte Carlo of a session.
//!
//! Each pulse draws Alice's intensity and basis and Bob's basis. Pulses in a
//! tallied basis pair are sent through the channel: photons reach the
//! matching and the other detector as independent Poisson streams, and each
//! detector also fires on its own dark count. Only events where exactly one
//! detector fires are recorded; double clicks are discarded.
//!
//! The click probabilities are derived here from the Poisson model and do not
//! call into [`crate::statmodel`]'s gain formulas, so the two can check each
//! other.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::finitekey::EpsilonBudget;
use crate::security::{finite_key_rate, SecurityResult};
use crate::statmodel::{
    Basis, BasisPair, ChannelParams, Intensity, ProtocolParams, SessionParams, TallyTable,
};

/// Pulses per independently seeded batch.
pub const BATCH_PULSES: u64 = 1 << 20;

const CELLS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub pulses: u64,
    pub channel: ChannelParams,
    pub protocol: ProtocolParams,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pulses == 0 {
            return Err(invalid("pulses", "must be >= 1"));
        }
        self.channel.validate()?;
        self.protocol.validate()
    }
}

/// Detector behaviour for one (intensity, basis pair) cell.
///
/// Probabilities are stored as thresholds on a uniform `u64`: the event
/// happens when the draw falls below the threshold.
#[derive(Debug, Clone, Copy)]
struct Detectors {
    cell: usize,
    /// At least one detector fires.
    any: u64,
    /// The matching detector fires, given that one fires.
    right_given_any: u64,
    /// The other detector fires (unconditional).
    wrong: u64,
    e_d: u64,
}

fn threshold(p: f64) -> u64 {
    // 2^64 p, saturating at both ends
    (p * 18446744073709551616.0) as u64
}

impl Detectors {
    fn new(ch: &ChannelParams, pair: BasisPair, k: Intensity, mean_photons: f64) -> Self {
        let eta = ch.eta_d * 10f64.powf(-ch.loss_db / 10.0);
        let (a_right, a_wrong) = pair.detector_fractions(ch.theta);
        let log_silent_dark = (-ch.p_d).ln_1p();
        // P(fires) = 1 - P(no photon arrives) P(no dark count)
        let fires = |frac: f64| -(-mean_photons * eta * frac + log_silent_dark).exp_m1();
        let right = fires(a_right);
        let wrong = fires(a_wrong);
        let any = 1.0 - (1.0 - right) * (1.0 - wrong);
        Detectors {
            cell: pair.index() * 2 + k.index(),
            any: threshold(any),
            right_given_any: threshold(if any > 0.0 { right / any } else { 0.0 }),
            wrong: threshold(wrong),
            e_d: threshold(ch.intrinsic_error(pair)),
        }
    }
}

/// One outcome of the (intensity, Alice basis, Bob basis) draw.
#[derive(Debug, Clone, Copy)]
struct Branch {
    cumulative: u64,
    detectors: Option<Detectors>,
}

fn branches(ch: &ChannelParams, pp: &ProtocolParams) -> Vec<Branch> {
    let mut out = Vec::with_capacity(18);
    let mut acc = 0.0;
    for k in Intensity::ALL {
        for alice in [Basis::Z, Basis::X, Basis::Y] {
            for bob in [Basis::Z, Basis::X, Basis::Y] {
                acc += pp.intensity_prob(k) * pp.basis_prob(alice) * pp.basis_prob(bob);
                let detectors = BasisPair::from_bases(alice, bob)
                    .map(|pair| Detectors::new(ch, pair, k, pp.intensity(k)));
                out.push(Branch {
                    cumulative: threshold(acc),
                    detectors,
                });
            }
        }
    }
    // Rounding in the running sum must not leave a gap below 1.
    if let Some(last) = out.last_mut() {
        last.cumulative = u64::MAX;
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    n: [u64; CELLS],
    m: [u64; CELLS],
}

impl Counts {
    fn merge(mut self, other: Counts) -> Counts {
        for i in 0..CELLS {
            self.n[i] += other.n[i];
            self.m[i] += other.m[i];
        }
        self
    }
}

fn run_batch(seed: u64, batch: u64, pulses: u64, table: &[Branch]) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    let mut counts = Counts::default();
    for _ in 0..pulses {
        let u = rng.next_u64();
        let branch = table
            .iter()
            .find(|b| u < b.cumulative)
            .unwrap_or(&table[table.len() - 1]);
        let Some(det) = branch.detectors else {
            continue;
        };
        if rng.next_u64() >= det.any {
            continue;
        }
        let right = rng.next_u64() < det.right_given_any;
        let wrong = !right || rng.next_u64() < det.wrong;
        if right && wrong {
            continue;
        }
        let flipped = rng.next_u64() < det.e_d;
        counts.n[det.cell] += 1;
        if wrong != flipped {
            counts.m[det.cell] += 1;
        }
    }
    counts
}

/// Simulates `cfg.pulses` pulses and returns integer tallies.
///
/// Bob flips his bit assignment for a cell whose error count exceeds half its
/// detections. The merged result does not depend on thread scheduling.
pub fn simulate_session(cfg: &SimConfig) -> Result<TallyTable> {
    cfg.validate()?;
    let table = branches(&cfg.channel, &cfg.protocol);
    let batches = cfg.pulses.div_ceil(BATCH_PULSES);
    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let size = BATCH_PULSES.min(cfg.pulses - b * BATCH_PULSES);
            run_batch(cfg.seed, b, size, &table)
        })
        .reduce(Counts::default, Counts::merge);

    let mut tallies = TallyTable::zero();
    for pair in BasisPair::ALL {
        for k in Intensity::ALL {
            let cell = pair.index() * 2 + k.index();
            let (n, mut m) = (counts.n[cell], counts.m[cell]);
            if 2 * m > n {
                m = n - m;
            }
            tallies.set(pair, k, n as f64, m as f64);
        }
    }
    Ok(tallies)
}

/// Simulates a session and runs the sampled tallies through the finite-key
/// analysis. The session length is `cfg.pulses`.
pub fn end_to_end_skr(
    cfg: &SimConfig,
    eb: &EpsilonBudget,
    f: f64,
    rep_rate_hz: f64,
) -> Result<SecurityResult> {
    let sess = SessionParams {
        n_tot: cfg.pulses as f64,
        rep_rate_hz,
    };
    sess.validate()?;
    let tallies = simulate_session(cfg)?;
    finite_key_rate(&tallies, &cfg.protocol, eb, &sess, f)
}
