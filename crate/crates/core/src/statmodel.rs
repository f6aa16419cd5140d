//! Analytic forward model of a one-decoy RFI-QKD link.
//!
//! Given the physical channel and the operating point, this module produces
//! the per-detector click probabilities, gains, error rates and the expected
//! detection tallies for the five sifted basis pairs (ZZ, XX, XY, YX, YY).
//!
//! Bob's two detectors are modelled as threshold detectors behind a lossless
//! splitter. For a pulse of mean photon number `k` the probability that only
//! detector `j` clicks is
//!
//! ```text
//! P_j = e^{-k eta} (1 - p_d) (e^{k eta a_j} + p_d - 1)
//!     = P(other detector silent) * P(detector j clicks)
//! ```
//!
//! where `a_j` is the fraction of the transmitted light routed to detector
//! `j`. Double clicks are therefore not part of the gain.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on probability normalisation.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Z,
    X,
    Y,
}

/// The five basis pairs that survive sifting. Mixed pairs such as ZX are
/// discarded and never tallied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisPair {
    ZZ,
    XX,
    XY,
    YX,
    YY,
}

impl BasisPair {
    pub const ALL: [BasisPair; 5] = [
        BasisPair::ZZ,
        BasisPair::XX,
        BasisPair::XY,
        BasisPair::YX,
        BasisPair::YY,
    ];

    /// The four pairs entering the reference-frame-independent quantity C.
    pub const PHASE: [BasisPair; 4] = [BasisPair::XX, BasisPair::XY, BasisPair::YX, BasisPair::YY];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BasisPair::ZZ => "ZZ",
            BasisPair::XX => "XX",
            BasisPair::XY => "XY",
            BasisPair::YX => "YX",
            BasisPair::YY => "YY",
        }
    }

    /// Alice's preparation basis and Bob's measurement basis.
    pub fn bases(self) -> (Basis, Basis) {
        match self {
            BasisPair::ZZ => (Basis::Z, Basis::Z),
            BasisPair::XX => (Basis::X, Basis::X),
            BasisPair::XY => (Basis::X, Basis::Y),
            BasisPair::YX => (Basis::Y, Basis::X),
            BasisPair::YY => (Basis::Y, Basis::Y),
        }
    }

    /// Returns the tallied pair for a preparation/measurement combination, or
    /// `None` when the combination is discarded in sifting.
    pub fn from_bases(alice: Basis, bob: Basis) -> Option<BasisPair> {
        match (alice, bob) {
            (Basis::Z, Basis::Z) => Some(BasisPair::ZZ),
            (Basis::X, Basis::X) => Some(BasisPair::XX),
            (Basis::X, Basis::Y) => Some(BasisPair::XY),
            (Basis::Y, Basis::X) => Some(BasisPair::YX),
            (Basis::Y, Basis::Y) => Some(BasisPair::YY),
            _ => None,
        }
    }

    pub fn is_key_basis(self) -> bool {
        self == BasisPair::ZZ
    }

    /// Fractions of the transmitted light reaching the detector that matches
    /// Alice's bit and the one that does not, at misalignment `theta`.
    pub fn detector_fractions(self, theta: f64) -> (f64, f64) {
        let plus = |x: f64| (1.0 + x) / 2.0;
        let minus = |x: f64| (1.0 - x) / 2.0;
        match self {
            BasisPair::ZZ => (1.0, 0.0),
            BasisPair::XX | BasisPair::YY => (plus(theta.cos()), minus(theta.cos())),
            BasisPair::XY => (minus(theta.sin()), plus(theta.sin())),
            BasisPair::YX => (plus(theta.sin()), minus(theta.sin())),
        }
    }
}

impl fmt::Display for BasisPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BasisPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ZZ" => Ok(BasisPair::ZZ),
            "XX" => Ok(BasisPair::XX),
            "XY" => Ok(BasisPair::XY),
            "YX" => Ok(BasisPair::YX),
            "YY" => Ok(BasisPair::YY),
            other => Err(Error::UnknownBasisPair(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intensity {
    Mu,
    Nu,
}

impl Intensity {
    pub const ALL: [Intensity; 2] = [Intensity::Mu, Intensity::Nu];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Intensity::Mu => "mu",
            Intensity::Nu => "nu",
        }
    }
}

impl FromStr for Intensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(Intensity::Mu),
            "nu" => Ok(Intensity::Nu),
            other => Err(Error::UnknownIntensity(other.to_string())),
        }
    }
}

/// Physical-layer description of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Detection efficiency.
    pub eta_d: f64,
    /// Dark-count probability per gate.
    pub p_d: f64,
    /// Optical intrinsic error rate in the Z basis.
    pub e_d_z: f64,
    /// Optical intrinsic error rate in the X and Y bases.
    pub e_d_xy: f64,
    /// Total transmission loss in dB.
    pub loss_db: f64,
    /// Reference-frame misalignment angle in radians.
    pub theta: f64,
}

impl ChannelParams {
    /// The 250 km link used in the experiment (47.10 dB, theta = pi/9).
    pub fn experiment(loss_db: f64) -> Self {
        ChannelParams {
            eta_d: 0.7,
            p_d: 1e-8,
            e_d_z: 0.007,
            e_d_xy: 0.014,
            loss_db,
            theta: std::f64::consts::PI / 9.0,
        }
    }

    pub fn with_loss(self, loss_db: f64) -> Self {
        ChannelParams { loss_db, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta_d) {
            return Err(invalid("eta_d", format!("{} not in [0, 1]", self.eta_d)));
        }
        if !(0.0..1.0).contains(&self.p_d) {
            return Err(invalid("p_d", format!("{} not in [0, 1)", self.p_d)));
        }
        if !(0.0..=0.5).contains(&self.e_d_z) {
            return Err(invalid("e_d_z", format!("{} not in [0, 0.5]", self.e_d_z)));
        }
        if !(0.0..=0.5).contains(&self.e_d_xy) {
            return Err(invalid(
                "e_d_xy",
                format!("{} not in [0, 0.5]", self.e_d_xy),
            ));
        }
        if !(self.loss_db >= 0.0) || !self.loss_db.is_finite() {
            return Err(invalid(
                "loss_db",
                format!("{} must be finite and >= 0", self.loss_db),
            ));
        }
        if !self.theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        let eta = self.transmittance();
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(
                "eta_d",
                format!("overall transmittance {eta:e} not in (0, 1]"),
            ));
        }
        Ok(())
    }

    /// Overall transmittance `eta_d * 10^(-loss/10)`.
    pub fn transmittance(&self) -> f64 {
        self.eta_d * 10f64.powf(-self.loss_db / 10.0)
    }

    /// Intrinsic optical error rate that applies to a basis pair.
    pub fn intrinsic_error(&self, pair: BasisPair) -> f64 {
        if pair.is_key_basis() {
            self.e_d_z
        } else {
            self.e_d_xy
        }
    }
}

/// Free function form of [`ChannelParams::transmittance`].
pub fn transmittance(ch: &ChannelParams) -> f64 {
    ch.transmittance()
}

/// User-controlled operating point. Alice and Bob use the same basis
/// probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub mu: f64,
    pub nu: f64,
    pub p_mu: f64,
    pub p_nu: f64,
    pub p_z: f64,
    pub p_x: f64,
    pub p_y: f64,
}

impl ProtocolParams {
    /// Operating point with `p_nu = 1 - p_mu` and `p_x = p_y = (1 - p_z)/2`.
    pub fn symmetric(mu: f64, nu: f64, p_mu: f64, p_z: f64) -> Self {
        let p_x = (1.0 - p_z) / 2.0;
        ProtocolParams {
            mu,
            nu,
            p_mu,
            p_nu: 1.0 - p_mu,
            p_z,
            p_x,
            p_y: p_x,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", format!("{} must be > 0", self.mu)));
        }
        if !(self.nu > 0.0) {
            return Err(invalid("nu", format!("{} must be > 0", self.nu)));
        }
        if !(self.nu < self.mu) {
            return Err(invalid(
                "nu",
                format!("decoy {} must be below signal {}", self.nu, self.mu),
            ));
        }
        let probs = [
            ("p_mu", self.p_mu),
            ("p_nu", self.p_nu),
            ("p_z", self.p_z),
            ("p_x", self.p_x),
            ("p_y", self.p_y),
        ];
        for (name, p) in probs {
            if !(p > 0.0 && p < 1.0) {
                return Err(invalid(name, format!("{p} not in (0, 1)")));
            }
        }
        if (self.p_mu + self.p_nu - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid("p_mu", "p_mu + p_nu must equal 1"));
        }
        if (self.p_z + self.p_x + self.p_y - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid("p_z", "p_z + p_x + p_y must equal 1"));
        }
        Ok(())
    }

    pub fn intensity(&self, k: Intensity) -> f64 {
        match k {
            Intensity::Mu => self.mu,
            Intensity::Nu => self.nu,
        }
    }

    pub fn intensity_prob(&self, k: Intensity) -> f64 {
        match k {
            Intensity::Mu => self.p_mu,
            Intensity::Nu => self.p_nu,
        }
    }

    pub fn basis_prob(&self, b: Basis) -> f64 {
        match b {
            Basis::Z => self.p_z,
            Basis::X => self.p_x,
            Basis::Y => self.p_y,
        }
    }

    /// `P_alpha * P_beta * P_k`: the probability that a pulse lands in the
    /// given (pair, intensity) cell.
    pub fn detection_prob(&self, pair: BasisPair, k: Intensity) -> f64 {
        let (a, b) = pair.bases();
        self.basis_prob(a) * self.basis_prob(b) * self.intensity_prob(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    /// Total pulses sent by Alice.
    pub n_tot: f64,
    /// Pulse repetition rate in Hz.
    pub rep_rate_hz: f64,
}

impl SessionParams {
    /// 8.1e11 pulses at 150 MHz.
    pub const EXPERIMENT: SessionParams = SessionParams {
        n_tot: 8.1e11,
        rep_rate_hz: 150e6,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.n_tot >= 1.0) || !self.n_tot.is_finite() {
            return Err(invalid("n_tot", format!("{} must be >= 1", self.n_tot)));
        }
        if !(self.rep_rate_hz > 0.0) || !self.rep_rate_hz.is_finite() {
            return Err(invalid(
                "rep_rate_hz",
                format!("{} must be > 0", self.rep_rate_hz),
            ));
        }
        Ok(())
    }
}

/// Click probabilities `(P_00, P_01, P_10, P_11)` where the first index is
/// Alice's bit and the second is the detector that fired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProbabilities {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl PairProbabilities {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p00, self.p01, self.p10, self.p11]
    }

    /// Gain: the average over Alice's two bit values of the click probability.
    pub fn gain(&self) -> f64 {
        (self.p00 + self.p01 + self.p10 + self.p11) / 2.0
    }

    /// Raw error fraction before the intrinsic optical error is applied.
    pub fn raw_error(&self) -> Option<f64> {
        let q = self.gain();
        (q > 0.0).then(|| (self.p01 + self.p10) / (2.0 * q))
    }
}

/// `e^{-k eta} (1 - p_d) (e^{k eta a} + p_d - 1)`, evaluated with `expm1` so
/// that the tiny `k eta` of long links keeps full relative precision.
fn exclusive_click(k_eta: f64, p_d: f64, a: f64) -> f64 {
    (-k_eta).exp() * (1.0 - p_d) * ((k_eta * a).exp_m1() + p_d)
}

/// Per-detector click probabilities for a basis pair at mean photon number `k`.
pub fn pair_probabilities(ch: &ChannelParams, pair: BasisPair, k: f64) -> PairProbabilities {
    let k_eta = k * ch.transmittance();
    let (a_right, a_wrong) = pair.detector_fractions(ch.theta);
    let right = exclusive_click(k_eta, ch.p_d, a_right);
    let wrong = exclusive_click(k_eta, ch.p_d, a_wrong);
    PairProbabilities {
        p00: right,
        p01: wrong,
        p10: wrong,
        p11: right,
    }
}

/// Gain `Q^k` for a basis pair, from the four click probabilities.
pub fn gain(ch: &ChannelParams, pair: BasisPair, k: f64) -> f64 {
    pair_probabilities(ch, pair, k).gain()
}

/// Closed-form gain, written directly from the collapsed expressions rather
/// than from the per-detector terms.
pub fn closed_form_gain(ch: &ChannelParams, pair: BasisPair, k: f64) -> f64 {
    let k_eta = k * ch.transmittance();
    let pd = ch.p_d;
    let pre = (-k_eta).exp() * (1.0 - pd);
    match pair {
        BasisPair::ZZ => pre * (k_eta.exp_m1() + 2.0 * pd),
        BasisPair::XX | BasisPair::YY => {
            let c = ch.theta.cos();
            pre * ((k_eta * (1.0 + c) / 2.0).exp_m1()
                + (k_eta * (1.0 - c) / 2.0).exp_m1()
                + 2.0 * pd)
        }
        BasisPair::XY | BasisPair::YX => {
            let s = ch.theta.sin();
            pre * ((k_eta * (1.0 + s) / 2.0).exp_m1()
                + (k_eta * (1.0 - s) / 2.0).exp_m1()
                + 2.0 * pd)
        }
    }
}

/// Applies the intrinsic optical error and the bit-flip convention:
/// `E = min(E~, 1 - E~)` with `E~ = e_d (1 - 2e) + e`.
pub fn apply_intrinsic_error(raw: f64, e_d: f64) -> f64 {
    let tilde = e_d * (1.0 - 2.0 * raw) + raw;
    tilde.min(1.0 - tilde)
}

/// Observed error rate `E^k` for a basis pair.
pub fn qber(ch: &ChannelParams, pair: BasisPair, k: f64) -> Result<f64> {
    let probs = pair_probabilities(ch, pair, k);
    let raw = probs.raw_error().ok_or(Error::ZeroGain {
        pair: pair.to_string(),
        intensity: k,
    })?;
    Ok(apply_intrinsic_error(raw, ch.intrinsic_error(pair)))
}

/// Click probabilities for an exact photon-number state of `photons`
/// photons, consistent with the Poisson model above.
pub fn fock_pair_probabilities(
    ch: &ChannelParams,
    pair: BasisPair,
    photons: u32,
) -> PairProbabilities {
    let eta = ch.transmittance();
    let (a_right, a_wrong) = pair.detector_fractions(ch.theta);
    let pd = ch.p_d;
    let lost = 1.0 - eta;
    // (1 - p_d) [x^n - (1 - p_d) y^n] with x = 1 - eta a_other, y = 1 - eta;
    // x^n - y^n is expanded as (x - y) sum x^i y^(n-1-i) to avoid cancellation.
    let click = |own: f64, other: f64| {
        let x = 1.0 - eta * other;
        let diff: f64 = (0..photons)
            .map(|i| x.powi(i as i32) * lost.powi((photons - 1 - i) as i32))
            .sum::<f64>()
            * (eta * own);
        (1.0 - pd) * (diff + pd * lost.powi(photons as i32))
    };
    let right = click(a_right, a_wrong);
    let wrong = click(a_wrong, a_right);
    PairProbabilities {
        p00: right,
        p01: wrong,
        p10: wrong,
        p11: right,
    }
}

/// Single-photon yield and error rate (with the intrinsic optical error
/// applied) for a basis pair. These are the true values the decoy method
/// bounds.
pub fn single_photon(ch: &ChannelParams, pair: BasisPair) -> Result<(f64, f64)> {
    let probs = fock_pair_probabilities(ch, pair, 1);
    let raw = probs.raw_error().ok_or(Error::ZeroGain {
        pair: pair.to_string(),
        intensity: 1.0,
    })?;
    Ok((
        probs.gain(),
        apply_intrinsic_error(raw, ch.intrinsic_error(pair)),
    ))
}

/// Vacuum yield: the probability of a single click with no photon sent.
pub fn vacuum_yield(ch: &ChannelParams, pair: BasisPair) -> f64 {
    fock_pair_probabilities(ch, pair, 0).gain()
}

const CELLS: usize = 10;

fn cell(pair: BasisPair, k: Intensity) -> usize {
    pair.index() * 2 + k.index()
}

/// Detection and error-detection counts per (basis pair, intensity).
///
/// Counts are real-valued so that analytic expectations and sampled or
/// measured integers share one type.
#[derive(Debug, Clone, PartialEq)]
pub struct TallyTable {
    n: [f64; CELLS],
    m: [f64; CELLS],
}

impl Default for TallyTable {
    fn default() -> Self {
        TallyTable::zero()
    }
}

impl TallyTable {
    pub fn zero() -> Self {
        TallyTable {
            n: [0.0; CELLS],
            m: [0.0; CELLS],
        }
    }

    pub fn n(&self, pair: BasisPair, k: Intensity) -> f64 {
        self.n[cell(pair, k)]
    }

    pub fn m(&self, pair: BasisPair, k: Intensity) -> f64 {
        self.m[cell(pair, k)]
    }

    pub fn set(&mut self, pair: BasisPair, k: Intensity, n: f64, m: f64) {
        self.n[cell(pair, k)] = n;
        self.m[cell(pair, k)] = m;
    }

    /// Detections in a basis pair summed over both intensities.
    pub fn n_total(&self, pair: BasisPair) -> f64 {
        self.n(pair, Intensity::Mu) + self.n(pair, Intensity::Nu)
    }

    pub fn m_total(&self, pair: BasisPair) -> f64 {
        self.m(pair, Intensity::Mu) + self.m(pair, Intensity::Nu)
    }

    /// Observed error rate of a pair over both intensities.
    pub fn error_rate(&self, pair: BasisPair) -> Option<f64> {
        let n = self.n_total(pair);
        (n > 0.0).then(|| self.m_total(pair) / n)
    }

    pub fn scaled(&self, c: f64) -> Self {
        TallyTable {
            n: self.n.map(|x| x * c),
            m: self.m.map(|x| x * c),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisPair, Intensity, f64, f64)> + '_ {
        BasisPair::ALL.into_iter().flat_map(move |pair| {
            Intensity::ALL
                .into_iter()
                .map(move |k| (pair, k, self.n(pair, k), self.m(pair, k)))
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (pair, k, n, m) in self.iter() {
            if !n.is_finite() || !m.is_finite() || n < 0.0 || m < 0.0 {
                return Err(Error::InvalidTally(format!(
                    "{pair}.{} has non-finite or negative counts",
                    k.as_str()
                )));
            }
            if m > n {
                return Err(Error::InvalidTally(format!(
                    "{pair}.{}: error count {m} exceeds detection count {n}",
                    k.as_str()
                )));
            }
        }
        Ok(())
    }

    pub fn is_integral(&self) -> bool {
        self.n.iter().chain(self.m.iter()).all(|x| x.fract() == 0.0)
    }
}

/// Serialised as `{"n": {"ZZ.mu": .., ..}, "m": {..}}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TallyRepr {
    n: BTreeMap<String, Count>,
    m: BTreeMap<String, Count>,
}

/// Writes integral values as JSON integers.
#[derive(Clone, Copy)]
struct Count(f64);

impl Serialize for Count {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.fract() == 0.0 && self.0 >= 0.0 && self.0 < 9.0e15 {
            s.serialize_u64(self.0 as u64)
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Count)
    }
}

pub fn tally_key(pair: BasisPair, k: Intensity) -> String {
    format!("{}.{}", pair.as_str(), k.as_str())
}

fn parse_key(key: &str) -> Result<(BasisPair, Intensity)> {
    let (pair, k) = key
        .split_once('.')
        .ok_or_else(|| Error::InvalidTally(format!("malformed tally key `{key}`")))?;
    Ok((pair.parse()?, k.parse()?))
}

impl Serialize for TallyTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut n = BTreeMap::new();
        let mut m = BTreeMap::new();
        for (pair, k, nv, mv) in self.iter() {
            n.insert(tally_key(pair, k), Count(nv));
            m.insert(tally_key(pair, k), Count(mv));
        }
        TallyRepr { n, m }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TallyTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TallyRepr::deserialize(d)?;
        let mut table = TallyTable::zero();
        let mut seen_n = [false; CELLS];
        let mut seen_m = [false; CELLS];
        for (key, value) in &repr.n {
            let (pair, k) = parse_key(key).map_err(D::Error::custom)?;
            table.n[cell(pair, k)] = value.0;
            seen_n[cell(pair, k)] = true;
        }
        for (key, value) in &repr.m {
            let (pair, k) = parse_key(key).map_err(D::Error::custom)?;
            table.m[cell(pair, k)] = value.0;
            seen_m[cell(pair, k)] = true;
        }
        if let Some(missing) = (0..CELLS).find(|&i| !seen_n[i] || !seen_m[i]) {
            let pair = BasisPair::ALL[missing / 2];
            let k = Intensity::ALL[missing % 2];
            return Err(D::Error::custom(format!(
                "missing tally `{}`",
                tally_key(pair, k)
            )));
        }
        Ok(table)
    }
}

/// Expected tallies `n = N_tot P_alpha P_beta P_k Q`, `m = n E`.
pub fn expected_tallies(
    ch: &ChannelParams,
    pp: &ProtocolParams,
    sess: &SessionParams,
) -> Result<TallyTable> {
    ch.validate()?;
    pp.validate()?;
    let mut table = TallyTable::zero();
    for pair in BasisPair::ALL {
        for k in Intensity::ALL {
            let probs = pair_probabilities(ch, pair, pp.intensity(k));
            let q = probs.gain();
            let n = sess.n_tot * pp.detection_prob(pair, k) * q;
            let m = match probs.raw_error() {
                Some(raw) => n * apply_intrinsic_error(raw, ch.intrinsic_error(pair)),
                None => 0.0,
            };
            table.set(pair, k, n, m);
        }
    }
    Ok(table)
}
