//! Memeplex evaluation, the elite memome archive, behavior selection, and
//! meme mutation.
//!
//! A memeplex is a day-length behavior program: a valid path whose first
//! gene names its start site, plus a cached fitness. The memome keeps at
//! most one memeplex per start site and only ever replaces an entry with a
//! strictly fitter one, so archived fitness never decreases.

use crate::engine::EconomyParams;
use crate::genetics::{self, Gene, ForageStrategy};
use crate::network::{SiteId, SiteNetwork};
use rand::Rng;
use std::collections::BTreeMap;

/// Expected net energy per day of executing `genes`, scored against nominal
/// stocks (stock equal to capacity) and ignoring other agents.
///
/// Per step: foraging time is what remains after the gene's activity flags
/// each reserve a `tau` fraction of the step; reward is foraging time times
/// site capacity times the strategy's yield multiplier times the harvest
/// rate; the strategy's cost is paid per unit of foraging time. Every edge
/// actually traversed between consecutive genes costs `c_move`, and the
/// daily metabolic cost is subtracted once.
pub fn evaluate(genes: &[Gene], net: &SiteNetwork, econ: &EconomyParams) -> f64 {
    assert!(!genes.is_empty(), "cannot evaluate an empty gene sequence");
    assert!(
        genetics::path_is_valid(genes, net),
        "cannot evaluate an invalid path"
    );
    let mut total = 0.0;
    for (i, gene) in genes.iter().enumerate() {
        let forage_time = forage_time(gene, econ.tau);
        let site = net.site(gene.site);
        total += forage_time * site.capacity * gene.strategy.yield_multiplier() * econ.harvest_rate;
        total -= gene.strategy.step_cost() * forage_time;
        if i > 0 && genes[i - 1].site != gene.site {
            total -= econ.c_move;
        }
    }
    total - econ.metabolic
}

/// Fraction of a step left for foraging after activity flags take their cut.
pub fn forage_time(gene: &Gene, tau: f64) -> f64 {
    (1.0 - tau * gene.flags_set() as f64).max(0.0)
}

/// A day-length behavior program with a cached fitness estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Memeplex {
    genes: Vec<Gene>,
    start_site: SiteId,
    fitness: f64,
}

impl Memeplex {
    /// Builds a memeplex from genes, computing its fitness.
    pub fn from_genes(genes: Vec<Gene>, net: &SiteNetwork, econ: &EconomyParams) -> Memeplex {
        let fitness = evaluate(&genes, net, econ);
        Memeplex {
            start_site: genes[0].site,
            genes,
            fitness,
        }
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    pub fn start_site(&self) -> SiteId {
        self.start_site
    }

    pub fn fitness(&self) -> f64 {
        self.fitness
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn last_site(&self) -> SiteId {
        self.genes.last().unwrap().site
    }
}

/// Elite archive of memeplexes, keyed by start site.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Memome {
    archive: BTreeMap<SiteId, Memeplex>,
}

impl Memome {
    pub fn new() -> Memome {
        Memome::default()
    }

    /// Offers a memeplex to the archive. It is stored when its start site is
    /// vacant or when it is strictly fitter than the incumbent; ties keep
    /// the incumbent. Returns whether the archive changed.
    pub fn insert(&mut self, m: Memeplex) -> bool {
        match self.archive.entry(m.start_site) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(m);
                true
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                if m.fitness > slot.get().fitness {
                    slot.insert(m);
                    true
                } else {
                    false
                }
            }
        }
    }

    pub fn get(&self, site: SiteId) -> Option<&Memeplex> {
        self.archive.get(&site)
    }

    pub fn len(&self) -> usize {
        self.archive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.archive.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SiteId, &Memeplex)> {
        self.archive.iter().map(|(site, plex)| (*site, plex))
    }

    /// Mean fitness over archived entries; `None` for an empty archive.
    pub fn mean_fitness(&self) -> Option<f64> {
        if self.archive.is_empty() {
            return None;
        }
        Some(self.archive.values().map(|p| p.fitness).sum::<f64>() / self.archive.len() as f64)
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.archive
            .values()
            .map(|p| p.fitness)
            .fold(None, |acc, f| Some(acc.map_or(f, |a: f64| a.max(f))))
    }
}

/// The behavior an agent adopts for the day at site `s`: the archived
/// memeplex for `s` when one exists, otherwise a fallback program.
pub fn select_behavior<R: Rng>(
    memome: &Memome,
    s: SiteId,
    net: &SiteNetwork,
    econ: &EconomyParams,
    day_length: usize,
    rng: &mut R,
) -> Memeplex {
    match memome.get(s) {
        Some(plex) => plex.clone(),
        None => fallback_memeplex(s, net, econ, day_length, rng),
    }
}

/// Mutated copy of a memeplex. Same operator as genome mutation except that
/// the start gene's site is held fixed; fitness is recomputed.
pub fn mutate_memeplex<R: Rng>(
    m: &Memeplex,
    net: &SiteNetwork,
    econ: &EconomyParams,
    point_rate: f64,
    path_rate: f64,
    rng: &mut R,
) -> Memeplex {
    let mut genes = m.genes.clone();
    genetics::mutate_genes(&mut genes, net, point_rate, path_rate, 1, rng);
    Memeplex::from_genes(genes, net, econ)
}

/// What an agent does at a site it knows nothing about: a lazy random walk
/// at standard intensity with every activity flag clear.
pub fn fallback_memeplex<R: Rng>(
    s: SiteId,
    net: &SiteNetwork,
    econ: &EconomyParams,
    day_length: usize,
    rng: &mut R,
) -> Memeplex {
    let sites = genetics::random_walk(net, s, day_length, rng);
    let genes = sites
        .into_iter()
        .map(|site| Gene {
            site,
            strategy: ForageStrategy::Standard,
            breed: false,
            learn: false,
            social: false,
        })
        .collect();
    Memeplex::from_genes(genes, net, econ)
}
