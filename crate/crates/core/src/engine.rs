//! The day-cycle world loop: movement, foraging, pairwise breeding and
//! social learning by co-location, individual learning, energy settlement,
//! birth and death.
//!
//! A world advances in whole days of `day_length` timesteps. Within a step
//! every agent moves along its chosen memeplex, forages from the realized
//! stock at its site (split proportionally among co-located foragers), and
//! may be matched with a co-located partner for breeding or social
//! exchange. At the end of the day eligible agents learn, food converts to
//! energy, agents at or below zero energy die, and stocks regrow.
//!
//! A run is a pure function of its parameters and seed: all randomness
//! flows through one seeded stream and every iteration order is fixed.

use crate::genetics::{self, Genome};
use crate::memetics::{self, forage_time, Memeplex, Memome};
use crate::network::{NetworkError, SiteId, SiteNetwork};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

/// Which adaptation channels are active for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Inherited genome only: no learning of any kind.
    Basic,
    /// Individual learning on, social learning off.
    Breeders,
    /// Like `Breeders`, but the child genome is built from the parents'
    /// current memomes at reproduction.
    Lamarck,
    /// Full model: individual learning plus social exchange.
    Socializers,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Basic, Mode::Breeders, Mode::Lamarck, Mode::Socializers];

    pub fn individual_learning(self) -> bool {
        self != Mode::Basic
    }

    pub fn social_learning(self) -> bool {
        self == Mode::Socializers
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Basic => "basic",
            Mode::Breeders => "breeders",
            Mode::Lamarck => "lamarck",
            Mode::Socializers => "socializers",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "basic" => Ok(Mode::Basic),
            "breeders" => Ok(Mode::Breeders),
            "lamarck" => Ok(Mode::Lamarck),
            "socializers" => Ok(Mode::Socializers),
            other => Err(format!(
                "unknown mode `{other}` (expected basic, breeders, lamarck or socializers)"
            )),
        }
    }
}

/// Energy economy constants shared by evaluation and the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomyParams {
    /// Fraction of a site's stock one agent can attempt per step at unit
    /// yield and full foraging time.
    pub harvest_rate: f64,
    /// Fraction of a step each activity flag reserves.
    pub tau: f64,
    /// Energy cost per edge traversed.
    pub c_move: f64,
    /// Energy cost per day just to stay alive.
    pub metabolic: f64,
    /// Minimum energy required to join a breeding match.
    pub breed_threshold: f64,
    /// Energy granted to a newborn; each parent pays half.
    pub child_endowment: f64,
    /// Energy of the founding population.
    pub initial_energy: f64,
}

impl EconomyParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("harvest_rate", self.harvest_rate),
            ("tau", self.tau),
            ("c_move", self.c_move),
            ("metabolic", self.metabolic),
            ("breed_threshold", self.breed_threshold),
            ("child_endowment", self.child_endowment),
            ("initial_energy", self.initial_energy),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be strictly positive, got {v}"));
            }
        }
        if self.tau * 3.0 > 1.0 {
            return Err(format!(
                "tau = {} leaves negative time with all three flags set (3*tau > 1)",
                self.tau
            ));
        }
        if self.child_endowment > 2.0 * self.breed_threshold {
            return Err(format!(
                "child_endowment = {} exceeds twice breed_threshold = {}",
                self.child_endowment, self.breed_threshold
            ));
        }
        Ok(())
    }
}

/// Parameters of the site network a world is generated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    pub n_sites: usize,
    pub radius: f64,
    pub capacity_min: f64,
    pub capacity_max: f64,
    /// Nightly stock replenishment per site.
    pub regrow_rate: f64,
}

/// Everything the engine needs to run one world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldParams {
    pub mode: Mode,
    /// Timesteps per day (memeplex length).
    pub day_length: usize,
    /// Genes per genome.
    pub genome_length: usize,
    pub point_rate: f64,
    pub path_rate: f64,
    /// Founding population size.
    pub initial_population: usize,
    pub econ: EconomyParams,
    pub network: NetworkParams,
}

impl WorldParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.day_length == 0 {
            return Err("day_length must be >= 1".into());
        }
        if self.genome_length < self.day_length {
            return Err(format!(
                "genome_length ({}) must be >= day_length ({})",
                self.genome_length, self.day_length
            ));
        }
        for (name, rate) in [("point_rate", self.point_rate), ("path_rate", self.path_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(format!("{name} must lie in [0, 1], got {rate}"));
            }
        }
        if self.network.regrow_rate < 0.0 {
            return Err("regrow_rate must be non-negative".into());
        }
        self.econ.validate()
    }
}

/// An energy-bearing individual. Present in the population means alive;
/// agents are removed when their energy reaches zero at settlement.
///
/// The genome is fixed at birth. The per-day fields reset each morning and
/// support the energy-ledger invariant: after settlement,
/// `energy - day_start_energy` equals
/// `day_food - day_move_cost - day_strategy_cost - day_breed_paid - metabolic`.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: u64,
    /// Days survived.
    pub age: u32,
    pub energy: f64,
    pub site: SiteId,
    pub genome: Genome,
    pub memome: Memome,
    /// The day's behavior. `None` for newborns, which idle until the next
    /// morning.
    pub today: Option<Memeplex>,
    /// Food gathered today, converted to energy at settlement.
    pub food_today: f64,
    pub learned_today: bool,
    pub day_start_energy: f64,
    pub day_food: f64,
    pub day_move_cost: f64,
    pub day_strategy_cost: f64,
    pub day_breed_paid: f64,
    /// Mean fitness of the memome developed from this agent's genome,
    /// cached at birth (the genome never changes afterwards).
    pub genetic_mean: f64,
    /// Genome flag fractions (breed, learn, social), cached at birth.
    pub genome_allocation: (f64, f64, f64),
}

impl Agent {
    fn new(
        id: u64,
        site: SiteId,
        genome: Genome,
        energy: f64,
        net: &SiteNetwork,
        params: &WorldParams,
    ) -> Agent {
        let memome = genetics::develop(&genome, params.day_length, net, &params.econ);
        let genetic_mean = memome
            .mean_fitness()
            .expect("development produces at least one memeplex");
        let genome_allocation = genetics::genome_time_allocation(&genome);
        Agent {
            id,
            age: 0,
            energy,
            site,
            genome,
            memome,
            today: None,
            food_today: 0.0,
            learned_today: false,
            day_start_energy: energy,
            day_food: 0.0,
            day_move_cost: 0.0,
            day_strategy_cost: 0.0,
            day_breed_paid: 0.0,
            genetic_mean,
            genome_allocation,
        }
    }

    /// Ledger residual for the day just settled; zero (up to rounding) when
    /// the energy books balance.
    pub fn ledger_residual(&self, metabolic: f64) -> f64 {
        (self.energy - self.day_start_energy)
            - (self.day_food
                - self.day_move_cost
                - self.day_strategy_cost
                - self.day_breed_paid
                - metabolic)
    }
}

/// Event totals over a world's lifetime, for diagnostics and mode checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounters {
    pub births: u64,
    pub deaths: u64,
    pub learning_events: u64,
    pub social_exchanges: u64,
}

/// Uniform random maximal matching: shuffle, then pair consecutive
/// candidates; an odd one stays unmatched.
pub fn match_pairs<T: Copy, R: Rng>(candidates: &[T], rng: &mut R) -> Vec<(T, T)> {
    let mut pool: Vec<T> = candidates.to_vec();
    pool.shuffle(rng);
    pool.chunks_exact(2).map(|pair| (pair[0], pair[1])).collect()
}

/// One running simulation. Strictly single-threaded and deterministic for a
/// given `(params, seed)`.
pub struct World {
    net: SiteNetwork,
    agents: Vec<Agent>,
    day: u64,
    params: WorldParams,
    rng: ChaCha8Rng,
    next_id: u64,
    counters: EventCounters,
}

impl World {
    /// Generates the network and founds the initial population, each agent
    /// at a uniform random site with a random genome, a freshly developed
    /// memome, and a selected behavior for day zero.
    pub fn init(params: WorldParams, seed: u64) -> Result<World, NetworkError> {
        if let Err(msg) = params.validate() {
            return Err(NetworkError::InvalidParams(msg));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = SiteNetwork::generate(
            params.network.n_sites,
            params.network.radius,
            (params.network.capacity_min, params.network.capacity_max),
            &mut rng,
        )?;
        let mut world = World {
            net,
            agents: Vec::with_capacity(params.initial_population),
            day: 0,
            params,
            rng,
            next_id: 0,
            counters: EventCounters::default(),
        };
        for _ in 0..world.params.initial_population {
            let site = SiteId(world.rng.random_range(0..world.net.len()));
            let genome = genetics::random_genome(
                &world.net,
                world.params.genome_length,
                &mut world.rng,
            );
            let id = world.next_id;
            world.next_id += 1;
            let agent = Agent::new(
                id,
                site,
                genome,
                world.params.econ.initial_energy,
                &world.net,
                &world.params,
            );
            world.agents.push(agent);
        }
        world.begin_next_day();
        Ok(world)
    }

    pub fn day(&self) -> u64 {
        self.day
    }

    pub fn population(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn net(&self) -> &SiteNetwork {
        &self.net
    }

    pub fn params(&self) -> &WorldParams {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.params.mode
    }

    pub fn counters(&self) -> EventCounters {
        self.counters
    }

    /// Runs one full day and selects the next day's behaviors. Equivalent
    /// to [`World::run_day`] followed by [`World::begin_next_day`]; callers
    /// who record metrics between the two phases drive them directly.
    pub fn step_day(&mut self) {
        self.run_day();
        self.begin_next_day();
    }

    /// Executes the current day: all timesteps, then learning, settlement,
    /// deaths, aging and regrowth. Advances the day counter. Agents' `today`
    /// still holds the executed behavior afterwards.
    pub fn run_day(&mut self) {
        if self.agents.is_empty() {
            self.day += 1;
            return;
        }
        for t in 0..self.params.day_length {
            self.execute_timestep(t);
        }
        self.end_of_day_learning();
        self.settle_energy();
        for agent in &mut self.agents {
            agent.age += 1;
        }
        self.net.regrow(self.params.network.regrow_rate);
        self.day += 1;
    }

    /// Selects every agent's behavior for the coming day from its memome at
    /// its current site, and resets the per-day ledgers.
    pub fn begin_next_day(&mut self) {
        for idx in 0..self.agents.len() {
            let site = self.agents[idx].site;
            let plex = memetics::select_behavior(
                &self.agents[idx].memome,
                site,
                &self.net,
                &self.params.econ,
                self.params.day_length,
                &mut self.rng,
            );
            let agent = &mut self.agents[idx];
            debug_assert_eq!(plex.start_site(), site);
            agent.today = Some(plex);
            agent.learned_today = false;
            agent.food_today = 0.0;
            agent.day_food = 0.0;
            agent.day_move_cost = 0.0;
            agent.day_strategy_cost = 0.0;
            agent.day_breed_paid = 0.0;
            agent.day_start_energy = agent.energy;
        }
    }

    /// One timestep: movement and foraging for every agent, then breeding
    /// matches, then social matches, then learning-eligibility marks.
    fn execute_timestep(&mut self, t: usize) {
        debug_assert!(t < self.params.day_length);
        let econ = self.params.econ;

        // Movement, step costs, and harvest attempts. Attempts at a site are
        // all priced against the stock at the start of the step, so the
        // allocation below is order-independent.
        let mut attempts: BTreeMap<SiteId, Vec<(usize, f64)>> = BTreeMap::new();
        for idx in 0..self.agents.len() {
            let Some(gene) = self.agents[idx]
                .today
                .as_ref()
                .map(|plex| plex.genes()[t])
            else {
                continue; // newborn idling until tomorrow
            };
            if gene.site != self.agents[idx].site {
                debug_assert!(self.net.has_edge(self.agents[idx].site, gene.site));
                let agent = &mut self.agents[idx];
                agent.energy -= econ.c_move;
                agent.day_move_cost += econ.c_move;
                agent.site = gene.site;
            }
            let ft = forage_time(&gene, econ.tau);
            let step_cost = gene.strategy.step_cost() * ft;
            let agent = &mut self.agents[idx];
            agent.energy -= step_cost;
            agent.day_strategy_cost += step_cost;
            if ft > 0.0 {
                let stock = self.net.site(gene.site).stock;
                let attempt = econ.harvest_rate * stock * gene.strategy.yield_multiplier() * ft;
                if attempt > 0.0 {
                    attempts.entry(gene.site).or_default().push((idx, attempt));
                }
            }
        }

        // Allocate harvests; when combined attempts exceed the stock, shares
        // scale down proportionally so realized forage never exceeds it.
        for (site, list) in attempts {
            let stock = self.net.site(site).stock;
            if stock <= 0.0 {
                continue;
            }
            let total: f64 = list.iter().map(|(_, a)| a).sum();
            let scale = if total > stock { stock / total } else { 1.0 };
            let mut taken = 0.0;
            for (idx, attempt) in list {
                let share = attempt * scale;
                let agent = &mut self.agents[idx];
                agent.food_today += share;
                agent.day_food += share;
                taken += share;
            }
            debug_assert!(taken <= stock + 1e-9);
            let entry = self.net.site_mut(site);
            entry.stock = (entry.stock - taken).max(0.0);
        }

        // Breeding: co-located agents flagging breed this step with enough
        // energy at the moment of matching. Active in every mode.
        let mut breed_sites: BTreeMap<SiteId, Vec<usize>> = BTreeMap::new();
        for (idx, agent) in self.agents.iter().enumerate() {
            let Some(gene) = agent.today.as_ref().map(|p| p.genes()[t]) else {
                continue;
            };
            if gene.breed && agent.energy >= econ.breed_threshold {
                breed_sites.entry(agent.site).or_default().push(idx);
            }
        }
        let mut newborns = Vec::new();
        for (_, candidates) in breed_sites {
            for (a, b) in match_pairs(&candidates, &mut self.rng) {
                newborns.push(self.breed_pair(a, b));
            }
        }
        self.agents.extend(newborns);

        // Social exchange: co-located agents flagging social this step.
        if self.params.mode.social_learning() {
            let mut social_sites: BTreeMap<SiteId, Vec<usize>> = BTreeMap::new();
            for (idx, agent) in self.agents.iter().enumerate() {
                let Some(gene) = agent.today.as_ref().map(|p| p.genes()[t]) else {
                    continue;
                };
                if gene.social {
                    social_sites.entry(agent.site).or_default().push(idx);
                }
            }
            for (_, candidates) in social_sites {
                for (a, b) in match_pairs(&candidates, &mut self.rng) {
                    self.social_exchange(a, b);
                }
            }
        }

        // Learning flags executed this step mark the agent for end-of-day
        // individual learning.
        if self.params.mode.individual_learning() {
            for agent in &mut self.agents {
                if let Some(gene) = agent.today.as_ref().map(|p| p.genes()[t]) {
                    if gene.learn {
                        agent.learned_today = true;
                    }
                }
            }
        }
    }

    /// Creates the child of two matched parents. Each parent pays half the
    /// endowment; the child idles at the meeting site until next morning.
    fn breed_pair(&mut self, a_idx: usize, b_idx: usize) -> Agent {
        let econ = self.params.econ;
        debug_assert_eq!(self.agents[a_idx].site, self.agents[b_idx].site);
        debug_assert!(self.agents[a_idx].energy >= econ.breed_threshold);
        debug_assert!(self.agents[b_idx].energy >= econ.breed_threshold);
        let site = self.agents[a_idx].site;
        let half = econ.child_endowment / 2.0;
        self.agents[a_idx].energy -= half;
        self.agents[a_idx].day_breed_paid += half;
        self.agents[b_idx].energy -= half;
        self.agents[b_idx].day_breed_paid += half;

        let genome = match self.params.mode {
            Mode::Lamarck => {
                let stitched = genetics::lamarck_genome(
                    &self.agents[a_idx].memome,
                    &self.agents[b_idx].memome,
                    self.params.genome_length,
                    &self.net,
                    &mut self.rng,
                );
                genetics::mutate_genome(
                    &stitched,
                    &self.net,
                    self.params.point_rate,
                    self.params.path_rate,
                    &mut self.rng,
                )
            }
            _ => {
                let crossed = genetics::recombine(
                    &self.agents[a_idx].genome,
                    &self.agents[b_idx].genome,
                    &mut self.rng,
                );
                genetics::mutate_genome(
                    &crossed,
                    &self.net,
                    self.params.point_rate,
                    self.params.path_rate,
                    &mut self.rng,
                )
            }
        };

        let id = self.next_id;
        self.next_id += 1;
        self.counters.births += 1;
        Agent::new(id, site, genome, econ.child_endowment, &self.net, &self.params)
    }

    /// Symmetric exchange: each partner offers the other a possibly mutated
    /// copy of the memeplex it is using today. Genomes are untouched.
    fn social_exchange(&mut self, a_idx: usize, b_idx: usize) {
        let a_today = self.agents[a_idx].today.clone().expect("matched agent acts today");
        let b_today = self.agents[b_idx].today.clone().expect("matched agent acts today");
        let for_a = memetics::mutate_memeplex(
            &b_today,
            &self.net,
            &self.params.econ,
            self.params.point_rate,
            self.params.path_rate,
            &mut self.rng,
        );
        let for_b = memetics::mutate_memeplex(
            &a_today,
            &self.net,
            &self.params.econ,
            self.params.point_rate,
            self.params.path_rate,
            &mut self.rng,
        );
        self.agents[a_idx].memome.insert(for_a);
        self.agents[b_idx].memome.insert(for_b);
        self.counters.social_exchanges += 1;
    }

    /// Every agent that executed at least one learn flag offers a possibly
    /// mutated copy of today's memeplex to its own memome.
    fn end_of_day_learning(&mut self) {
        for idx in 0..self.agents.len() {
            if !self.agents[idx].learned_today {
                continue;
            }
            let today = self.agents[idx].today.clone().expect("learner acted today");
            let copy = memetics::mutate_memeplex(
                &today,
                &self.net,
                &self.params.econ,
                self.params.point_rate,
                self.params.path_rate,
                &mut self.rng,
            );
            self.agents[idx].memome.insert(copy);
            self.counters.learning_events += 1;
        }
    }

    /// Food converts to energy one-for-one, the metabolic cost is paid, and
    /// agents at or below zero energy are removed.
    fn settle_energy(&mut self) {
        let metabolic = self.params.econ.metabolic;
        for agent in &mut self.agents {
            agent.energy += agent.food_today;
            agent.food_today = 0.0;
            agent.energy -= metabolic;
        }
        let before = self.agents.len();
        self.agents.retain(|a| a.energy > 0.0);
        self.counters.deaths += (before - self.agents.len()) as u64;
    }

    /// Order-sensitive digest of the observable world state, for
    /// determinism checks.
    pub fn state_digest(&self) -> u64 {
        let mut h = std::hash::DefaultHasher::new();
        self.day.hash(&mut h);
        self.next_id.hash(&mut h);
        for site in self.net.sites() {
            site.stock.to_bits().hash(&mut h);
            site.capacity.to_bits().hash(&mut h);
        }
        for agent in &self.agents {
            agent.id.hash(&mut h);
            agent.age.hash(&mut h);
            agent.energy.to_bits().hash(&mut h);
            agent.site.0.hash(&mut h);
            for gene in agent.genome.genes() {
                hash_gene(gene, &mut h);
            }
            for (site, plex) in agent.memome.iter() {
                site.0.hash(&mut h);
                plex.fitness().to_bits().hash(&mut h);
                for gene in plex.genes() {
                    hash_gene(gene, &mut h);
                }
            }
        }
        h.finish()
    }
}

#[cfg(test)]
impl World {
    /// Bare world over an explicit network, for crafted-scenario tests.
    pub(crate) fn bare(net: SiteNetwork, params: WorldParams, seed: u64) -> World {
        World {
            net,
            agents: Vec::new(),
            day: 0,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_id: 0,
            counters: EventCounters::default(),
        }
    }

    /// Adds an agent whose genome and executed behavior are both the given
    /// gene sequence. Returns its index.
    pub(crate) fn push_crafted(
        &mut self,
        site: usize,
        energy: f64,
        genes: Vec<crate::genetics::Gene>,
    ) -> usize {
        let genome = Genome::new(genes.clone(), &self.net);
        let id = self.next_id;
        self.next_id += 1;
        let mut agent = Agent::new(id, SiteId(site), genome, energy, &self.net, &self.params);
        agent.today = Some(Memeplex::from_genes(genes, &self.net, &self.params.econ));
        agent.day_start_energy = energy;
        self.agents.push(agent);
        self.agents.len() - 1
    }

    pub(crate) fn agents_mut(&mut self) -> &mut Vec<Agent> {
        &mut self.agents
    }
}

fn hash_gene<H: Hasher>(gene: &crate::genetics::Gene, h: &mut H) {
    gene.site.0.hash(h);
    gene.strategy.yield_multiplier().to_bits().hash(h);
    gene.breed.hash(h);
    gene.learn.hash(h);
    gene.social.hash(h);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genetics::{ForageStrategy, Gene};

    fn econ() -> EconomyParams {
        EconomyParams {
            harvest_rate: 0.1,
            tau: 1.0 / 3.0,
            c_move: 1.0,
            metabolic: 2.0,
            breed_threshold: 100.0,
            child_endowment: 50.0,
            initial_energy: 50.0,
        }
    }

    fn small_params(mode: Mode) -> WorldParams {
        WorldParams {
            mode,
            day_length: 5,
            genome_length: 30,
            point_rate: 0.05,
            path_rate: 0.05,
            initial_population: 20,
            econ: EconomyParams {
                harvest_rate: 0.02,
                tau: 1.0 / 3.0,
                c_move: 0.1,
                metabolic: 2.0,
                breed_threshold: 30.0,
                child_endowment: 20.0,
                initial_energy: 40.0,
            },
            network: NetworkParams {
                n_sites: 15,
                radius: 0.5,
                capacity_min: 20.0,
                capacity_max: 60.0,
                regrow_rate: 60.0,
            },
        }
    }

    /// Two-site fixture with hand-placed agents for timestep-level tests.
    fn fixture(mode: Mode, day_length: usize) -> World {
        let net = SiteNetwork::from_parts(
            vec![(0.0, 0.0), (0.1, 0.0)],
            0.5,
            vec![10.0, 8.0],
        )
        .unwrap();
        let params = WorldParams {
            mode,
            day_length,
            genome_length: day_length,
            point_rate: 0.0,
            path_rate: 0.0,
            initial_population: 0,
            econ: econ(),
            network: NetworkParams {
                n_sites: 2,
                radius: 0.5,
                capacity_min: 8.0,
                capacity_max: 10.0,
                regrow_rate: 10.0,
            },
        };
        World::bare(net, params, 99)
    }

    fn gene_at(site: usize, breed: bool, learn: bool, social: bool) -> Gene {
        Gene {
            site: SiteId(site),
            strategy: ForageStrategy::Standard,
            breed,
            learn,
            social,
        }
    }

    fn add_agent(world: &mut World, site: usize, energy: f64, genes: Vec<Gene>) -> usize {
        world.push_crafted(site, energy, genes)
    }

    #[test]
    fn match_pairs_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(match_pairs::<u32, _>(&[], &mut rng).is_empty());
        assert!(match_pairs(&[7], &mut rng).is_empty());
        assert_eq!(match_pairs(&[1, 2], &mut rng).len(), 1);
        assert_eq!(match_pairs(&[1, 2, 3, 4, 5], &mut rng).len(), 2);
    }

    #[test]
    fn match_pairs_uniform_over_three_candidates() {
        // 10^4 seeded trials; chi-squared against uniform at alpha = 0.01
        // (df = 2, critical value 9.21).
        let mut counts = std::collections::HashMap::new();
        for seed in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = match_pairs(&[0, 1, 2], &mut rng);
            assert_eq!(pairs.len(), 1);
            let (a, b) = pairs[0];
            let key = (a.min(b), a.max(b));
            *counts.entry(key).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 3);
        let expected = 10_000.0 / 3.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 9.21, "chi-squared {chi2} exceeds the 1% critical value");
    }

    #[test]
    fn lone_breeder_gets_no_child() {
        let mut world = fixture(Mode::Socializers, 3);
        add_agent(
            &mut world,
            0,
            200.0,
            vec![gene_at(0, true, false, false); 3],
        );
        world.execute_timestep(0);
        assert_eq!(world.population(), 1);
        assert_eq!(world.counters().births, 0);
    }

    #[test]
    fn colocated_breeders_produce_exactly_one_child() {
        let mut world = fixture(Mode::Socializers, 3);
        add_agent(&mut world, 0, 200.0, vec![gene_at(0, true, false, false); 3]);
        add_agent(&mut world, 0, 200.0, vec![gene_at(0, true, false, false); 3]);
        world.execute_timestep(0);
        assert_eq!(world.population(), 3);
        assert_eq!(world.counters().births, 1);

        let child = &world.agents()[2];
        assert_eq!(child.site, SiteId(0));
        assert_eq!(child.energy, world.params().econ.child_endowment);
        assert!(child.today.is_none());

        // Each parent paid half the endowment on top of its step costs.
        let half = world.params().econ.child_endowment / 2.0;
        for parent in &world.agents()[..2] {
            assert_eq!(parent.day_breed_paid, half);
        }
    }

    #[test]
    fn below_threshold_agents_do_not_breed() {
        let mut world = fixture(Mode::Socializers, 3);
        add_agent(&mut world, 0, 50.0, vec![gene_at(0, true, false, false); 3]);
        add_agent(&mut world, 0, 50.0, vec![gene_at(0, true, false, false); 3]);
        world.execute_timestep(0);
        assert_eq!(world.counters().births, 0);
    }

    #[test]
    fn identical_parents_zero_rates_clone_the_genome() {
        let mut world = fixture(Mode::Socializers, 3);
        let genes = vec![gene_at(0, true, false, false); 3];
        add_agent(&mut world, 0, 200.0, genes.clone());
        add_agent(&mut world, 0, 200.0, genes);
        world.execute_timestep(0);
        let parent_genome = world.agents()[0].genome.clone();
        assert_eq!(world.agents()[2].genome, parent_genome);
    }

    #[test]
    fn child_memome_matches_develop_oracle() {
        let mut world = fixture(Mode::Socializers, 2);
        let genes = vec![gene_at(0, true, false, false); 2];
        add_agent(&mut world, 0, 200.0, genes.clone());
        add_agent(&mut world, 0, 200.0, genes);
        world.execute_timestep(0);
        let child = &world.agents()[2];
        let oracle = genetics::develop(
            &child.genome,
            world.params().day_length,
            world.net(),
            &world.params().econ,
        );
        assert_eq!(child.memome, oracle);
    }

    #[test]
    fn three_social_agents_exchange_once() {
        let mut world = fixture(Mode::Socializers, 3);
        for _ in 0..3 {
            add_agent(&mut world, 0, 50.0, vec![gene_at(0, false, false, true); 3]);
        }
        world.execute_timestep(0);
        assert_eq!(world.counters().social_exchanges, 1);
    }

    #[test]
    fn social_exchange_adopts_strictly_fitter_memeplex() {
        let mut world = fixture(Mode::Socializers, 2);
        // Agent 0 wanders (pays a move), agent 1 stays put; both flag social
        // at step 0 and start from site 0.
        let wander = vec![
            gene_at(0, false, false, true),
            gene_at(1, false, false, true),
        ];
        let stay = vec![
            gene_at(0, false, false, true),
            gene_at(0, false, false, true),
        ];
        add_agent(&mut world, 0, 50.0, wander.clone());
        add_agent(&mut world, 0, 50.0, stay.clone());
        let fit_stay = world.agents()[1].today.as_ref().unwrap().fitness();
        assert!(fit_stay > world.agents()[0].today.as_ref().unwrap().fitness());

        world.execute_timestep(0);
        assert_eq!(world.counters().social_exchanges, 1);
        // With zero mutation rates the exchange is exact: the wanderer's
        // archive at site 0 now holds the stay-put memeplex.
        assert_eq!(
            world.agents()[0].memome.get(SiteId(0)).unwrap().fitness(),
            fit_stay
        );
        // Genomes are untouched by exchange.
        assert_eq!(world.agents()[0].genome.genes().to_vec(), wander);
        assert_eq!(world.agents()[1].genome.genes().to_vec(), stay);
    }

    #[test]
    fn identical_exchange_leaves_archives_unchanged() {
        let mut world = fixture(Mode::Socializers, 2);
        let genes = vec![gene_at(0, false, false, true); 2];
        add_agent(&mut world, 0, 50.0, genes.clone());
        add_agent(&mut world, 0, 50.0, genes);
        let before: Vec<Memome> = world.agents().iter().map(|a| a.memome.clone()).collect();
        world.execute_timestep(0);
        for (agent, memome) in world.agents().iter().zip(&before) {
            assert_eq!(&agent.memome, memome);
        }
    }

    #[test]
    fn learning_requires_an_executed_learn_flag() {
        let mut world = fixture(Mode::Breeders, 2);
        add_agent(&mut world, 0, 50.0, vec![gene_at(0, false, false, false); 2]);
        add_agent(&mut world, 1, 50.0, vec![gene_at(1, false, true, false); 2]);
        world.run_day();
        assert_eq!(world.counters().learning_events, 1);
        assert!(!world.agents()[0].learned_today);
    }

    #[test]
    fn learning_with_zero_rates_never_changes_the_archive() {
        let mut world = fixture(Mode::Breeders, 2);
        let idx = add_agent(&mut world, 0, 50.0, vec![gene_at(0, false, true, false); 2]);
        // Seed the archive with exactly today's behavior.
        let today = world.agents[idx].today.clone().unwrap();
        world.agents[idx].memome.insert(today);
        let before = world.agents[idx].memome.clone();
        world.run_day();
        assert_eq!(world.agents()[0].memome, before);
    }

    #[test]
    fn settlement_deaths_and_arithmetic() {
        let mut world = fixture(Mode::Basic, 1);
        // All flags set: forage time 0, so no food arrives. Energy 1.5 fails
        // the metabolic bill; energy 5 survives.
        let genes = vec![gene_at(0, true, true, true)];
        add_agent(&mut world, 0, 1.5, genes.clone());
        add_agent(&mut world, 0, 5.0, genes);
        world.run_day();
        assert_eq!(world.population(), 1);
        assert_eq!(world.counters().deaths, 1);
        assert!((world.agents()[0].energy - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dead_partners_memes_survive_in_other_archives() {
        let mut world = fixture(Mode::Socializers, 2);
        // Agent 1 starts at site 1 and moves to site 0 where both flag
        // social; its memeplex starts at site 1, which agent 0 has never
        // archived. Agent 1 then dies at settlement.
        let a_genes = vec![gene_at(0, false, false, true); 2];
        let b_genes = vec![
            gene_at(1, false, false, true),
            gene_at(0, false, false, true),
        ];
        add_agent(&mut world, 0, 50.0, a_genes);
        let b = add_agent(&mut world, 1, 0.5, b_genes);
        // Drop the mover's archive entry fitness so the exchange inserts at
        // a vacant key.
        assert!(world.agents[0].memome.get(SiteId(1)).is_none());
        world.run_day();
        assert_eq!(world.population(), 1, "mover should starve at settlement");
        let survivor = &world.agents()[0];
        assert_eq!(survivor.id, 0);
        assert!(
            survivor.memome.get(SiteId(1)).is_some(),
            "exchanged memeplex must outlive its host"
        );
        let _ = b;
    }

    #[test]
    fn single_stationary_agent_matches_realized_ledger() {
        // Standard strategy on a capacity-10 site for a three-step day.
        // Stock depletes within the day, so the realized take is computed
        // against the declining stock.
        let mut world = fixture(Mode::Basic, 3);
        let genes = vec![gene_at(0, false, false, false); 3];
        add_agent(&mut world, 0, 50.0, genes);

        let e = world.params().econ;
        let mut stock = 10.0;
        let mut food = 0.0;
        for _ in 0..3 {
            let take = e.harvest_rate * stock * 1.0 * 1.0;
            food += take;
            stock -= take;
        }
        let expected = 50.0 + food - 3.0 * 0.5 - e.metabolic;

        world.run_day();
        assert!((world.agents()[0].energy - expected).abs() < 1e-12);
        assert!((world.net().site(SiteId(0)).stock - 10.0f64).abs() < 1e-12, "regrown overnight");
        assert!((world.agents()[0].ledger_residual(e.metabolic)).abs() < 1e-12);
    }

    #[test]
    fn contention_splits_stock_proportionally() {
        let mut world = fixture(Mode::Basic, 1);
        // Crank the harvest rate so combined attempts exceed the stock.
        world.params.econ.harvest_rate = 0.9;
        let genes = vec![gene_at(0, false, false, false)];
        add_agent(&mut world, 0, 50.0, genes.clone());
        add_agent(&mut world, 0, 50.0, genes);
        world.execute_timestep(0);
        let total: f64 = world.agents().iter().map(|a| a.food_today).sum();
        assert!(total <= 10.0 + 1e-9, "realized forage exceeded the stock");
        assert!((world.agents()[0].food_today - world.agents()[1].food_today).abs() < 1e-12);
        assert!(world.net().site(SiteId(0)).stock.abs() < 1e-9);
    }

    #[test]
    fn empty_world_day_increments_and_nothing_else() {
        let mut world = fixture(Mode::Socializers, 3);
        let stocks: Vec<f64> = world.net().sites().iter().map(|s| s.stock).collect();
        world.step_day();
        assert_eq!(world.day(), 1);
        assert_eq!(world.population(), 0);
        let after: Vec<f64> = world.net().sites().iter().map(|s| s.stock).collect();
        assert_eq!(stocks, after);
    }

    #[test]
    fn init_is_deterministic() {
        let params = small_params(Mode::Socializers);
        let a = World::init(params, 7).unwrap();
        let b = World::init(params, 7).unwrap();
        assert_eq!(a.state_digest(), b.state_digest());
    }

    #[test]
    fn runs_are_deterministic_over_many_days() {
        let params = small_params(Mode::Socializers);
        let mut a = World::init(params, 11).unwrap();
        let mut b = World::init(params, 11).unwrap();
        for _ in 0..50 {
            a.step_day();
            b.step_day();
        }
        assert_eq!(a.state_digest(), b.state_digest());
    }

    #[test]
    fn founding_memomes_satisfy_the_window_oracle() {
        let params = small_params(Mode::Socializers);
        let world = World::init(params, 3).unwrap();
        for agent in world.agents() {
            let oracle = genetics::develop(
                &agent.genome,
                params.day_length,
                world.net(),
                &params.econ,
            );
            assert_eq!(agent.memome, oracle);
        }
    }

    #[test]
    fn mode_separation() {
        for (mode, expect_learning, expect_social) in [
            (Mode::Basic, false, false),
            (Mode::Breeders, true, false),
            (Mode::Lamarck, true, false),
            (Mode::Socializers, true, true),
        ] {
            let mut world = World::init(small_params(mode), 5).unwrap();
            for _ in 0..40 {
                world.step_day();
                if world.population() == 0 {
                    break;
                }
            }
            let c = world.counters();
            if !expect_learning {
                assert_eq!(c.learning_events, 0, "{mode}: learning must be off");
            }
            if !expect_social {
                assert_eq!(c.social_exchanges, 0, "{mode}: social exchange must be off");
            }
        }
    }

    #[test]
    fn genomes_are_inert_in_non_lamarck_modes() {
        for mode in [Mode::Basic, Mode::Breeders, Mode::Socializers] {
            let mut world = World::init(small_params(mode), 13).unwrap();
            let mut at_birth: std::collections::HashMap<u64, Genome> = world
                .agents()
                .iter()
                .map(|a| (a.id, a.genome.clone()))
                .collect();
            for _ in 0..30 {
                world.step_day();
                for agent in world.agents() {
                    let snap = at_birth.entry(agent.id).or_insert_with(|| agent.genome.clone());
                    assert_eq!(&agent.genome, snap, "{mode}: genome changed during life");
                }
            }
        }
    }

    #[test]
    fn energy_ledger_closes_every_day() {
        let params = small_params(Mode::Socializers);
        let mut world = World::init(params, 17).unwrap();
        for _ in 0..30 {
            world.run_day();
            for agent in world.agents() {
                let r = agent.ledger_residual(params.econ.metabolic);
                assert!(r.abs() < 1e-9, "agent {} residual {r}", agent.id);
            }
            world.begin_next_day();
        }
    }

    #[test]
    fn newborn_idles_until_next_morning() {
        let mut world = fixture(Mode::Socializers, 3);
        let genes = vec![gene_at(0, true, false, false); 3];
        add_agent(&mut world, 0, 200.0, genes.clone());
        add_agent(&mut world, 0, 200.0, genes);
        world.run_day();
        let child = world.agents().iter().find(|a| a.id == 2).unwrap();
        assert!(child.today.is_none());
        assert_eq!(child.day_food, 0.0);
        // Metabolic cost still applies on the birth day.
        assert_eq!(child.energy, world.params().econ.child_endowment - 2.0);
        world.begin_next_day();
        let child = world.agents().iter().find(|a| a.id == 2).unwrap();
        let plan = child.today.as_ref().unwrap();
        assert_eq!(plan.start_site(), SiteId(0));
    }
}
