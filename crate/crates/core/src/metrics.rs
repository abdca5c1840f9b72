//! Divergence measurements over a world snapshot: genetic versus memetic
//! optimization, activity time shares, age-stratified activity, and
//! collapse detection.
//!
//! Both optimization trajectories are measured with the same fitness
//! function, so they are directly comparable: the genetic value of an agent
//! is the mean fitness of the memome its genome develops into, and the
//! memetic value is the mean archived fitness of its current memome.
//!
//! All functions here are pure reads of a world between end-of-day
//! settlement and the next day's behavior selection.

use crate::engine::World;

/// One day's observations. Fields are `None` where the underlying
/// population or stratum is empty; they serialize as blank CSV fields.
#[derive(Debug, Clone, PartialEq)]
pub struct DayMetrics {
    pub day: u64,
    pub population: usize,
    pub mean_energy: Option<f64>,
    pub genetic_opt: Option<f64>,
    pub memetic_opt: Option<f64>,
    pub breed_time: Option<f64>,
    pub learn_time: Option<f64>,
    pub social_time: Option<f64>,
    pub genome_breed: Option<f64>,
    pub genome_learn: Option<f64>,
    pub genome_social: Option<f64>,
    pub young_activity: Option<f64>,
    pub old_activity: Option<f64>,
}

/// Mean over living agents of the mean developed-archive fitness of their
/// genomes. Cached per agent at birth; genomes never change afterwards.
pub fn genetic_optimization(world: &World) -> Option<f64> {
    mean(world.agents().iter().map(|a| a.genetic_mean))
}

/// Mean over living agents of the mean archived fitness in their current
/// memomes.
pub fn memetic_optimization(world: &World) -> Option<f64> {
    mean(
        world
            .agents()
            .iter()
            .map(|a| a.memome.mean_fitness().expect("memomes are never empty")),
    )
}

/// Fractions of executed (agent, step) slots carrying each activity flag.
/// Agents without an executed behavior (newborns) are excluded.
pub fn time_allocation(world: &World) -> Option<(f64, f64, f64)> {
    let mut slots = 0usize;
    let mut breed = 0usize;
    let mut learn = 0usize;
    let mut social = 0usize;
    for agent in world.agents() {
        let Some(plex) = &agent.today else { continue };
        for gene in plex.genes() {
            slots += 1;
            breed += gene.breed as usize;
            learn += gene.learn as usize;
            social += gene.social as usize;
        }
    }
    if slots == 0 {
        return None;
    }
    let n = slots as f64;
    Some((breed as f64 / n, learn as f64 / n, social as f64 / n))
}

/// Mean per-agent activity (all three flags pooled, normalized by `3 * T`)
/// for agents younger than `age_split` and for the rest. An empty stratum
/// yields `None` on its side.
pub fn age_stratified_allocation(world: &World, age_split: u32) -> (Option<f64>, Option<f64>) {
    let mut young = Vec::new();
    let mut old = Vec::new();
    for agent in world.agents() {
        let Some(plex) = &agent.today else { continue };
        let flags: u32 = plex.genes().iter().map(|g| g.flags_set()).sum();
        let activity = flags as f64 / (3.0 * plex.len() as f64);
        if agent.age < age_split {
            young.push(activity);
        } else {
            old.push(activity);
        }
    }
    (mean(young.into_iter()), mean(old.into_iter()))
}

/// Reports the current day the first time the population is found empty;
/// once recorded, collapse is absorbing.
pub fn collapse_check(world: &World, recorded: Option<u64>) -> Option<u64> {
    if recorded.is_some() {
        return recorded;
    }
    if world.population() == 0 {
        Some(world.day())
    } else {
        None
    }
}

/// Full per-day observation row.
pub fn collect(world: &World, age_split: u32) -> DayMetrics {
    let population = world.population();
    let (breed_time, learn_time, social_time) = match time_allocation(world) {
        Some((b, l, s)) => (Some(b), Some(l), Some(s)),
        None => (None, None, None),
    };
    let (young_activity, old_activity) = age_stratified_allocation(world, age_split);
    let genome = if population == 0 {
        (None, None, None)
    } else {
        let n = population as f64;
        let sums = world.agents().iter().fold((0.0, 0.0, 0.0), |acc, a| {
            let (b, l, s) = a.genome_allocation;
            (acc.0 + b, acc.1 + l, acc.2 + s)
        });
        (Some(sums.0 / n), Some(sums.1 / n), Some(sums.2 / n))
    };
    DayMetrics {
        day: world.day(),
        population,
        mean_energy: mean(world.agents().iter().map(|a| a.energy)),
        genetic_opt: genetic_optimization(world),
        memetic_opt: memetic_optimization(world),
        breed_time,
        learn_time,
        social_time,
        genome_breed: genome.0,
        genome_learn: genome.1,
        genome_social: genome.2,
        young_activity,
        old_activity,
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(sum / n as f64)
    }
}
