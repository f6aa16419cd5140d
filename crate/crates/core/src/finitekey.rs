//! One-decoy finite-key estimation.
//!
//! Observed counts are turned into Hoeffding intervals, and the intervals
//! into decoy-state bounds on vacuum events, single-photon events and
//! single-photon errors. All logarithms here are natural.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::statmodel::{BasisPair, Intensity, ProtocolParams, TallyTable};

/// Floor applied to the vacuum-event lower bound.
pub const S0_LOWER_FLOOR: f64 = 1e-10;

/// Smallest signal/decoy separation the bounds accept.
pub const MIN_DECOY_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBudget {
    pub eps_sec: f64,
    pub eps_cor: f64,
    /// Failure probability of the detection-count intervals.
    pub eps_1: f64,
    /// Failure probability of the error-count intervals.
    pub eps_2: f64,
    pub a: u32,
    pub b: u32,
}

impl Default for EpsilonBudget {
    fn default() -> Self {
        EpsilonBudget {
            eps_sec: 1e-9,
            eps_cor: 1e-15,
            eps_1: 1e-10,
            eps_2: 1e-10,
            a: 6,
            b: 43,
        }
    }
}

impl EpsilonBudget {
    pub fn with_hoeffding(self, eps_1: f64, eps_2: f64) -> Self {
        EpsilonBudget {
            eps_1,
            eps_2,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name, x: f64| {
            if x > 0.0 && x <= 1.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("{x} not in (0, 1]")))
            }
        };
        unit("eps_sec", self.eps_sec)?;
        unit("eps_cor", self.eps_cor)?;
        unit("eps_1", self.eps_1)?;
        unit("eps_2", self.eps_2)?;
        if self.a == 0 || self.b == 0 {
            return Err(invalid("a", "composition constants must be positive"));
        }
        Ok(())
    }
}

/// Probability that the source emits an `i`-photon pulse, `i` in {0, 1}.
pub fn tau(i: u32, pp: &ProtocolParams) -> Result<f64> {
    if i > 1 {
        return Err(Error::UnsupportedPhotonNumber(i));
    }
    let term = |k: f64, p: f64| p * (-k).exp() * if i == 0 { 1.0 } else { k };
    Ok(term(pp.mu, pp.p_mu) + term(pp.nu, pp.p_nu))
}

/// Hoeffding half-width `sqrt(x/2 * ln(1/eps))`.
pub fn hoeffding_delta(x: f64, eps: f64) -> f64 {
    (x.max(0.0) / 2.0 * (1.0 / eps).ln()).sqrt()
}

/// Interval on the count `x` observed at intensity `k`, rescaled by
/// `e^k / p_k`. The half-width is driven by `x_tot`, the count of the same
/// basis pair summed over both intensities. The lower end is clamped at 0.
pub fn hoeffding_bounds(x: f64, x_tot: f64, k: f64, p_k: f64, eps: f64) -> (f64, f64) {
    let scale = k.exp() / p_k;
    let delta = hoeffding_delta(x_tot, eps);
    let lower = (scale * (x - delta)).max(0.0);
    let upper = scale * (x + delta);
    (lower, upper)
}

/// Decoy-state bounds for one basis pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyBounds {
    pub pair: BasisPair,
    pub s0_lower: f64,
    pub s0_upper: f64,
    pub s1_lower: f64,
    pub m1_upper: f64,
    pub e1_upper: f64,
}

impl DecoyBounds {
    /// True when no single-photon events could be certified; `e1_upper` is
    /// then pinned at 0.5.
    pub fn is_degenerate(&self) -> bool {
        self.s1_lower <= 0.0
    }

    /// The single-photon error bound, or an error when it is undefined.
    pub fn e1_upper_strict(&self) -> Result<f64> {
        if self.is_degenerate() {
            Err(Error::EmptyTally(self.pair.to_string()))
        } else {
            Ok(self.e1_upper)
        }
    }
}

pub fn decoy_bounds(
    t: &TallyTable,
    pair: BasisPair,
    pp: &ProtocolParams,
    eb: &EpsilonBudget,
) -> Result<DecoyBounds> {
    let (mu, nu) = (pp.mu, pp.nu);
    let gap = mu - nu;
    if !(gap >= MIN_DECOY_GAP) {
        return Err(Error::DegenerateDecoy(gap));
    }
    let tau0 = tau(0, pp)?;
    let tau1 = tau(1, pp)?;

    let n_tot = t.n_total(pair);
    let m_tot = t.m_total(pair);
    let (_, n_mu_up) = hoeffding_bounds(t.n(pair, Intensity::Mu), n_tot, mu, pp.p_mu, eb.eps_1);
    let (n_nu_lo, _) = hoeffding_bounds(t.n(pair, Intensity::Nu), n_tot, nu, pp.p_nu, eb.eps_1);
    let (_, m_mu_up) = hoeffding_bounds(t.m(pair, Intensity::Mu), m_tot, mu, pp.p_mu, eb.eps_2);
    let (m_nu_lo, _) = hoeffding_bounds(t.m(pair, Intensity::Nu), m_tot, nu, pp.p_nu, eb.eps_2);

    let s0_lower = (tau0 / gap * (mu * n_nu_lo - nu * n_mu_up)).max(S0_LOWER_FLOOR);

    // Two vacuum upper bounds; the second one uses the decoy intensity.
    let dn = hoeffding_delta(n_tot, eb.eps_1);
    let dm = hoeffding_delta(m_tot, eb.eps_2);
    let from_total = 2.0 * (m_tot + dn);
    let from_decoy = 2.0 * tau0 * nu.exp() / pp.p_nu * (t.m(pair, Intensity::Nu) + dm) + 2.0 * dn;
    let s0_upper = from_total.min(from_decoy);

    let s1_lower = (tau1 * mu / (nu * gap)
        * (n_nu_lo
            - nu * nu / (mu * mu) * n_mu_up
            - (mu * mu - nu * nu) / (mu * mu) * s0_upper / tau0))
        .max(0.0);

    let m1_upper = tau1 / gap * (m_mu_up - m_nu_lo);
    let e1_upper = if s1_lower > 0.0 {
        (m1_upper / s1_lower).clamp(0.0, 0.5)
    } else {
        0.5
    };

    Ok(DecoyBounds {
        pair,
        s0_lower,
        s0_upper,
        s1_lower,
        m1_upper,
        e1_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statmodel::{expected_tallies, single_photon, ChannelParams, SessionParams};
    use proptest::prelude::*;

    fn pp250() -> ProtocolParams {
        ProtocolParams::symmetric(0.388, 0.123, 0.5, 0.476)
    }

    fn measured_250km_tallies() -> TallyTable {
        let mut t = TallyTable::zero();
        let rows = [
            (BasisPair::ZZ, 93130.0, 31187.0, 1274.0, 924.0),
            (BasisPair::XX, 27506.0, 8502.0, 1224.0, 403.0),
            (BasisPair::XY, 27116.0, 8635.0, 8241.0, 2930.0),
            (BasisPair::YX, 26864.0, 8251.0, 11855.0, 3529.0),
            (BasisPair::YY, 27782.0, 8334.0, 1095.0, 307.0),
        ];
        for (pair, nm, nn, mm, mn) in rows {
            t.set(pair, Intensity::Mu, nm, mm);
            t.set(pair, Intensity::Nu, nn, mn);
        }
        t
    }

    #[test]
    fn tau_values() {
        let pp = pp250();
        // 0.5 e^-0.388 + 0.5 e^-0.123, evaluated at 30 digits
        assert!((tau(0, &pp).unwrap() - 0.781_338_002_912_462).abs() < 1e-14);
        // 0.5*0.388 e^-0.388 + 0.5*0.123 e^-0.123
        assert!((tau(1, &pp).unwrap() - 0.185_994_209_840_727).abs() < 1e-14);
        assert_eq!(tau(2, &pp), Err(Error::UnsupportedPhotonNumber(2)));

        let faint = ProtocolParams {
            mu: 1e-9,
            nu: 5e-10,
            p_mu: 1.0,
            p_nu: 0.0,
            ..pp
        };
        assert!((tau(0, &faint).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hoeffding_trivial_cases() {
        let (lo, hi) = hoeffding_bounds(100.0, 150.0, 0.3, 0.5, 1.0);
        assert_eq!(lo, hi);
        assert!((lo - 0.3f64.exp() / 0.5 * 100.0).abs() < 1e-12);
        assert_eq!(hoeffding_bounds(0.0, 0.0, 0.3, 0.5, 1e-10), (0.0, 0.0));
    }

    #[test]
    fn hoeffding_250km_regression() {
        // 30-digit reference: delta = 1196.349595657015,
        // (lo, hi) = e^0.388/0.5 * (93130 -/+ delta)
        let (lo, hi) = hoeffding_bounds(93130.0, 124317.0, 0.388, 0.5, 1e-10);
        assert!((hoeffding_delta(124317.0, 1e-10) - 1196.349595657015).abs() < 1e-9);
        assert!((lo - 271_025.877_748_670).abs() < 1e-6, "{lo}");
        assert!((hi - 278_079.697_494_348).abs() < 1e-6, "{hi}");
    }

    #[test]
    fn measured_250km_key_basis() {
        let b = decoy_bounds(
            &measured_250km_tallies(),
            BasisPair::ZZ,
            &pp250(),
            &EpsilonBudget::default(),
        )
        .unwrap();
        assert_eq!(b.s0_lower, S0_LOWER_FLOOR);
        assert!((b.s1_lower / 71757.71 - 1.0).abs() < 0.02, "{}", b.s1_lower);
        assert!((b.e1_upper - 0.0247).abs() < 0.0015, "{}", b.e1_upper);
        assert!(b.s0_lower <= b.s0_upper);
    }

    #[test]
    fn all_zero_table_is_degenerate() {
        let b = decoy_bounds(
            &TallyTable::zero(),
            BasisPair::ZZ,
            &pp250(),
            &EpsilonBudget::default(),
        )
        .unwrap();
        assert_eq!(b.s0_lower, S0_LOWER_FLOOR);
        assert_eq!(b.s1_lower, 0.0);
        assert_eq!(b.e1_upper, 0.5);
        assert!(b.is_degenerate());
        assert_eq!(b.e1_upper_strict(), Err(Error::EmptyTally("ZZ".into())));
    }

    #[test]
    fn close_intensities_are_rejected() {
        let pp = ProtocolParams {
            nu: 0.388 - 1e-8,
            ..pp250()
        };
        assert!(matches!(
            decoy_bounds(&measured_250km_tallies(), BasisPair::ZZ, &pp, &EpsilonBudget::default()),
            Err(Error::DegenerateDecoy(_))
        ));
    }

    #[test]
    fn asymptotic_scaling_converges_to_noiseless_bound() {
        let ch = ChannelParams::experiment(47.10);
        let pp = pp250();
        let t = expected_tallies(&ch, &pp, &SessionParams::EXPERIMENT).unwrap();
        let exact = EpsilonBudget::default().with_hoeffding(1.0, 1.0);
        for pair in BasisPair::ALL {
            let limit = decoy_bounds(&t, pair, &pp, &exact).unwrap().e1_upper;
            let scaled = decoy_bounds(&t.scaled(1e6), pair, &pp, &EpsilonBudget::default())
                .unwrap()
                .e1_upper;
            assert!((scaled - limit).abs() < 1e-3, "{pair}: {scaled} vs {limit}");
        }
        // The noiseless one-decoy bound stays above the true single-photon
        // error rate of the key basis.
        let (_, e1) = single_photon(&ch, BasisPair::ZZ).unwrap();
        let bound = decoy_bounds(&t, BasisPair::ZZ, &pp, &exact)
            .unwrap()
            .e1_upper;
        assert!(bound >= e1, "{bound} < {e1}");
    }

    fn arb_table() -> impl Strategy<Value = TallyTable> {
        prop::collection::vec((0.0f64..1e7, 0.0f64..=1.0), 10).prop_map(|cells| {
            let mut t = TallyTable::zero();
            for (i, (n, frac)) in cells.into_iter().enumerate() {
                let pair = BasisPair::ALL[i / 2];
                let k = Intensity::ALL[i % 2];
                t.set(pair, k, n.round(), (n * frac).round());
            }
            t
        })
    }

    proptest! {
        #[test]
        fn hoeffding_ordering(x in 0.0f64..1e8, extra in 0.0f64..1e8, k in 0.01f64..1.0,
                              p in 0.01f64..1.0, e1 in 1e-15f64..1.0, e2 in 1e-15f64..1.0) {
            let tot = x + extra;
            let (lo, hi) = hoeffding_bounds(x, tot, k, p, e1);
            let central = k.exp() / p * x;
            prop_assert!(lo <= central && central <= hi);
            let (wide, narrow) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let (lw, hw) = hoeffding_bounds(x, tot, k, p, wide);
            let (ln, hn) = hoeffding_bounds(x, tot, k, p, narrow);
            prop_assert!(lw <= ln && hn <= hw);
        }

        #[test]
        fn bound_clamps_hold(t in arb_table(), mu in 0.2f64..0.9, nu_frac in 0.05f64..0.9,
                             pmu in 0.05f64..0.95, all_errors in any::<bool>()) {
            let t = if all_errors {
                let mut adv = t.clone();
                for (pair, k, n, _) in t.iter() {
                    adv.set(pair, k, n, n);
                }
                adv
            } else {
                t
            };
            let pp = ProtocolParams::symmetric(mu, mu * nu_frac, pmu, 0.5);
            for pair in BasisPair::ALL {
                let b = decoy_bounds(&t, pair, &pp, &EpsilonBudget::default()).unwrap();
                prop_assert!(b.s1_lower >= 0.0);
                prop_assert!(b.s0_lower >= S0_LOWER_FLOOR);
                prop_assert!((0.0..=0.5).contains(&b.e1_upper));
            }
        }
    }
}
