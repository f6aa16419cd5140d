//! Operating-point search: a seeded genetic algorithm and an exhaustive grid.
//!
//! The search runs over four genes `(mu, nu, p_mu, p_z)`. The remaining
//! probabilities follow from normalisation with `p_x = p_y`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::finitekey::EpsilonBudget;
use crate::security::{finite_key_rate, SecurityResult};
use crate::statmodel::{expected_tallies, ChannelParams, ProtocolParams, SessionParams};

const GENES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub mu_range: (f64, f64),
    pub nu_range: (f64, f64),
    pub p_mu_range: (f64, f64),
    pub p_z_range: (f64, f64),
    /// Smallest allowed `mu - nu`.
    pub min_gap: f64,
    /// Smallest allowed value of any probability.
    pub prob_floor: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            mu_range: (0.1, 1.0),
            nu_range: (0.01, 0.5),
            p_mu_range: (0.01, 0.99),
            p_z_range: (0.01, 0.98),
            min_gap: 0.01,
            prob_floor: 0.01,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let unit_range = |name, (lo, hi): (f64, f64)| {
            if lo > 0.0 && lo <= hi && hi <= 1.0 {
                Ok(())
            } else {
                Err(invalid(
                    name,
                    format!("[{lo}, {hi}] is not a closed interval in (0, 1]"),
                ))
            }
        };
        unit_range("mu_range", self.mu_range)?;
        unit_range("nu_range", self.nu_range)?;
        unit_range("p_mu_range", self.p_mu_range)?;
        unit_range("p_z_range", self.p_z_range)?;
        if !(self.min_gap > 0.0) {
            return Err(invalid("min_gap", format!("{} must be > 0", self.min_gap)));
        }
        if !(self.prob_floor > 0.0 && self.prob_floor < 1.0 / 3.0) {
            return Err(invalid(
                "prob_floor",
                format!("{} not in (0, 1/3)", self.prob_floor),
            ));
        }
        if self.mu_range.1 - self.nu_range.0 < self.min_gap {
            return Err(invalid(
                "min_gap",
                "no mu in range clears the smallest nu by min_gap",
            ));
        }
        if self.p_mu_range.0 > 1.0 - self.prob_floor || self.p_mu_range.1 < self.prob_floor {
            return Err(invalid(
                "p_mu_range",
                "range excludes every normalisable p_mu",
            ));
        }
        if self.p_z_range.0 > 1.0 - 2.0 * self.prob_floor || self.p_z_range.1 < self.prob_floor {
            return Err(invalid(
                "p_z_range",
                "range excludes every normalisable p_z",
            ));
        }
        Ok(())
    }

    fn bounds(&self) -> [(f64, f64); GENES] {
        let floor = self.prob_floor;
        [
            self.mu_range,
            self.nu_range,
            (
                self.p_mu_range.0.max(floor),
                self.p_mu_range.1.min(1.0 - floor),
            ),
            (
                self.p_z_range.0.max(floor),
                self.p_z_range.1.min(1.0 - 2.0 * floor),
            ),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Gaussian mutation scale as a fraction of each gene's range.
    pub mutation_sigma: f64,
    pub elitism: usize,
    pub seed: u64,
    /// Evaluate fitness on the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 64,
            generations: 200,
            tournament_size: 4,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_sigma: 0.05,
            elitism: 2,
            seed: 0,
            parallel: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(invalid("population", "must be >= 2"));
        }
        if self.generations < 1 {
            return Err(invalid("generations", "must be >= 1"));
        }
        if self.tournament_size < 1 {
            return Err(invalid("tournament_size", "must be >= 1"));
        }
        if self.elitism > self.population {
            return Err(invalid("elitism", "cannot exceed the population"));
        }
        for (name, r) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(invalid(name, format!("{r} not in [0, 1]")));
            }
        }
        if !(self.mutation_sigma >= 0.0) || !self.mutation_sigma.is_finite() {
            return Err(invalid("mutation_sigma", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// One point of the search space and its fitness in bit/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mu: f64,
    pub nu: f64,
    pub p_mu: f64,
    pub p_z: f64,
    pub fitness: f64,
}

impl Candidate {
    pub fn new(mu: f64, nu: f64, p_mu: f64, p_z: f64) -> Self {
        Candidate {
            mu,
            nu,
            p_mu,
            p_z,
            fitness: 0.0,
        }
    }

    pub fn from_protocol(pp: &ProtocolParams) -> Self {
        Candidate::new(pp.mu, pp.nu, pp.p_mu, pp.p_z)
    }

    pub fn protocol(&self) -> ProtocolParams {
        ProtocolParams::symmetric(self.mu, self.nu, self.p_mu, self.p_z)
    }

    fn genes(&self) -> [f64; GENES] {
        [self.mu, self.nu, self.p_mu, self.p_z]
    }

    fn from_genes(g: [f64; GENES]) -> Self {
        Candidate::new(g[0], g[1], g[2], g[3])
    }

    /// Projects the candidate onto the feasible set: clip every gene to its
    /// range, then shrink `nu` until `mu - nu >= min_gap`. When that would
    /// push `nu` below its range, `nu` sits at its lower edge and `mu` is
    /// raised instead.
    pub fn repair(&self, space: &SearchSpace) -> Self {
        let b = space.bounds();
        let mut g = self.genes();
        for (x, (lo, hi)) in g.iter_mut().zip(b) {
            *x = x.clamp(lo, hi);
        }
        if g[1] > g[0] - space.min_gap {
            g[1] = g[0] - space.min_gap;
            if g[1] < b[1].0 {
                g[1] = b[1].0;
                g[0] = g[1] + space.min_gap;
            }
        }
        Candidate {
            fitness: self.fitness,
            ..Candidate::from_genes(g)
        }
    }
}

/// Full pipeline result for a parameter set, or `None` when any stage fails.
pub fn evaluate(
    pp: &ProtocolParams,
    ch: &ChannelParams,
    sess: &SessionParams,
    eb: &EpsilonBudget,
    f: f64,
) -> Option<SecurityResult> {
    let t = expected_tallies(ch, pp, sess).ok()?;
    let r = finite_key_rate(&t, pp, eb, sess, f).ok()?;
    r.skr_bits_per_second.is_finite().then_some(r)
}

/// Secret key rate in bit/s; invalid intermediate states score zero.
pub fn fitness(
    c: &Candidate,
    ch: &ChannelParams,
    sess: &SessionParams,
    eb: &EpsilonBudget,
    f: f64,
) -> f64 {
    evaluate(&c.protocol(), ch, sess, eb, f).map_or(0.0, |r| r.skr_bits_per_second)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub params: ProtocolParams,
    pub result: SecurityResult,
    /// Best fitness after each generation (empty for grid search).
    pub history: Vec<f64>,
}

struct Problem<'a> {
    ch: &'a ChannelParams,
    sess: &'a SessionParams,
    eb: &'a EpsilonBudget,
    f: f64,
}

impl Problem<'_> {
    fn score(&self, pop: &mut [Candidate], parallel: bool) {
        let eval = |c: &mut Candidate| c.fitness = fitness(c, self.ch, self.sess, self.eb, self.f);
        if parallel {
            pop.par_iter_mut().for_each(eval);
        } else {
            pop.iter_mut().for_each(eval);
        }
    }

    fn finish(&self, best: Candidate, history: Vec<f64>) -> Result<Optimum> {
        if !(best.fitness > 0.0) {
            return Err(Error::InfeasibleLink);
        }
        let params = best.protocol();
        let result =
            evaluate(&params, self.ch, self.sess, self.eb, self.f).ok_or(Error::InfeasibleLink)?;
        Ok(Optimum {
            params,
            result,
            history,
        })
    }
}

fn check_inputs(
    ch: &ChannelParams,
    sess: &SessionParams,
    eb: &EpsilonBudget,
    f: f64,
    space: &SearchSpace,
) -> Result<()> {
    ch.validate()?;
    sess.validate()?;
    eb.validate()?;
    space.validate()?;
    if !(f >= 1.0) {
        return Err(invalid("f", format!("{f} must be >= 1")));
    }
    Ok(())
}

fn stream(seed: u64, generation: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | index as u64);
    rng
}

/// Index of the fitter candidate, ties going to the lower index.
fn fitter(pop: &[Candidate], a: usize, b: usize) -> usize {
    match pop[a].fitness.total_cmp(&pop[b].fitness) {
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Equal => a.min(b),
    }
}

fn tournament(pop: &[Candidate], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size {
        best = fitter(pop, best, rng.random_range(0..pop.len()));
    }
    best
}

fn ranking(pop: &[Candidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| pop[b].fitness.total_cmp(&pop[a].fitness).then(a.cmp(&b)));
    order
}

fn offspring(
    pop: &[Candidate],
    cfg: &GaConfig,
    space: &SearchSpace,
    bounds: &[(f64, f64); GENES],
    rng: &mut ChaCha8Rng,
) -> Candidate {
    let a = pop[tournament(pop, cfg.tournament_size, rng)].genes();
    let b = pop[tournament(pop, cfg.tournament_size, rng)].genes();
    let mut child = a;
    if rng.random_bool(cfg.crossover_rate) {
        for (c, y) in child.iter_mut().zip(b) {
            if rng.random_bool(0.5) {
                *c = y;
            }
        }
    }
    for (c, (lo, hi)) in child.iter_mut().zip(bounds) {
        if rng.random_bool(cfg.mutation_rate) {
            let sigma = cfg.mutation_sigma * (hi - lo);
            if sigma > 0.0 {
                *c += Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
            }
        }
    }
    Candidate::from_genes(child).repair(space)
}

/// Genetic-algorithm search. Every random draw comes from a stream keyed by
/// `(seed, generation, index)`, so the result does not depend on
/// `cfg.parallel` or on the thread count.
pub fn optimize(
    ch: &ChannelParams,
    sess: &SessionParams,
    eb: &EpsilonBudget,
    f: f64,
    space: &SearchSpace,
    cfg: &GaConfig,
) -> Result<Optimum> {
    check_inputs(ch, sess, eb, f, space)?;
    cfg.validate()?;
    let problem = Problem { ch, sess, eb, f };
    let bounds = space.bounds();

    let mut pop: Vec<Candidate> = (0..cfg.population)
        .map(|i| {
            let mut rng = stream(cfg.seed, 0, i);
            let g = bounds.map(|(lo, hi)| {
                if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            });
            Candidate::from_genes(g).repair(space)
        })
        .collect();
    problem.score(&mut pop, cfg.parallel);

    let mut history = Vec::with_capacity(cfg.generations);
    for generation in 1..=cfg.generations {
        let order = ranking(&pop);
        let mut next: Vec<Candidate> = order[..cfg.elitism].iter().map(|&i| pop[i]).collect();
        let mut children: Vec<Candidate> = (cfg.elitism..cfg.population)
            .map(|i| {
                offspring(
                    &pop,
                    cfg,
                    space,
                    &bounds,
                    &mut stream(cfg.seed, generation, i),
                )
            })
            .collect();
        problem.score(&mut children, cfg.parallel);
        next.append(&mut children);
        pop = next;
        history.push(pop[ranking(&pop)[0]].fitness);
    }
    let best = pop[ranking(&pop)[0]];
    problem.finish(best, history)
}

/// Exhaustive search over `resolution` evenly spaced values per gene, each
/// grid point repaired like a GA offspring.
pub fn grid_search(
    ch: &ChannelParams,
    sess: &SessionParams,
    eb: &EpsilonBudget,
    f: f64,
    space: &SearchSpace,
    resolution: usize,
) -> Result<Optimum> {
    check_inputs(ch, sess, eb, f, space)?;
    if resolution < 2 {
        return Err(invalid("resolution", "must be >= 2"));
    }
    let axes = space.bounds().map(|(lo, hi)| {
        (0..resolution)
            .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
            .collect::<Vec<_>>()
    });
    let mut grid = Vec::with_capacity(resolution.pow(GENES as u32));
    for &mu in &axes[0] {
        for &nu in &axes[1] {
            for &p_mu in &axes[2] {
                for &p_z in &axes[3] {
                    grid.push(Candidate::new(mu, nu, p_mu, p_z).repair(space));
                }
            }
        }
    }
    let problem = Problem { ch, sess, eb, f };
    problem.score(&mut grid, true);
    let best = grid[ranking(&grid)[0]];
    problem.finish(best, Vec::new())
}
