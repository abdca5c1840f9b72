//! Genome representation, inheritance operators, and development of a
//! newborn's memome.
//!
//! A genome is a long valid path through the site network: consecutive genes
//! reference the same site or two sites joined by an edge. Genomes are fixed
//! at birth and never change during an agent's life; variation enters only
//! through recombination and mutation at reproduction.

use crate::engine::EconomyParams;
use crate::memetics::{Memeplex, Memome};
use crate::network::{SiteId, SiteNetwork};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Foraging intensity chosen per gene. Higher yield costs more energy per
/// step of foraging time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForageStrategy {
    Conservative,
    Standard,
    Intensive,
}

impl ForageStrategy {
    pub const ALL: [ForageStrategy; 3] = [
        ForageStrategy::Conservative,
        ForageStrategy::Standard,
        ForageStrategy::Intensive,
    ];

    pub fn yield_multiplier(self) -> f64 {
        match self {
            ForageStrategy::Conservative => 0.5,
            ForageStrategy::Standard => 1.0,
            ForageStrategy::Intensive => 1.5,
        }
    }

    /// Energy cost per step spent foraging at this intensity.
    pub fn step_cost(self) -> f64 {
        match self {
            ForageStrategy::Conservative => 0.2,
            ForageStrategy::Standard => 0.5,
            ForageStrategy::Intensive => 1.0,
        }
    }
}

/// One step of behavior: where to be, how hard to forage, and which
/// activities to attempt there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gene {
    pub site: SiteId,
    pub strategy: ForageStrategy,
    pub breed: bool,
    pub learn: bool,
    pub social: bool,
}

impl Gene {
    pub fn flags_set(&self) -> u32 {
        self.breed as u32 + self.learn as u32 + self.social as u32
    }
}

/// A long valid path of genes; cannot be completed within one day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    genes: Vec<Gene>,
}

impl Genome {
    /// Wraps a gene sequence, asserting path validity.
    pub fn new(genes: Vec<Gene>, net: &SiteNetwork) -> Genome {
        assert!(!genes.is_empty(), "genome must contain at least one gene");
        debug_assert!(path_is_valid(&genes, net), "genome is not a valid path");
        Genome { genes }
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

pub fn path_is_valid(genes: &[Gene], net: &SiteNetwork) -> bool {
    genes
        .windows(2)
        .all(|pair| net.valid_step(pair[0].site, pair[1].site))
}

/// Flag probability for founder genomes. Founders start activity-heavy,
/// well above the flip-mutation equilibrium of one half, so both
/// inheritance channels have room to shed surplus activity over a run.
const FOUNDER_FLAG_PROB: f64 = 0.8;

/// Flag probability for genes refreshed by path mutation: the equilibrium
/// of the symmetric flag flip.
const REFRESH_FLAG_PROB: f64 = 0.5;

fn random_gene<R: Rng>(site: SiteId, flag_prob: f64, rng: &mut R) -> Gene {
    let strategy = *ForageStrategy::ALL.choose(rng).unwrap();
    Gene {
        site,
        strategy,
        breed: rng.random_bool(flag_prob),
        learn: rng.random_bool(flag_prob),
        social: rng.random_bool(flag_prob),
    }
}

/// One step of a lazy random walk: uniform over the current site and its
/// neighbors.
pub(crate) fn walk_step<R: Rng>(net: &SiteNetwork, from: SiteId, rng: &mut R) -> SiteId {
    let nbrs = net.neighbors(from);
    let pick = rng.random_range(0..=nbrs.len());
    if pick == nbrs.len() {
        from
    } else {
        nbrs[pick]
    }
}

/// Random walk of `len` sites starting at `start` (inclusive).
pub(crate) fn random_walk<R: Rng>(
    net: &SiteNetwork,
    start: SiteId,
    len: usize,
    rng: &mut R,
) -> Vec<SiteId> {
    let mut sites = Vec::with_capacity(len);
    let mut cur = start;
    for i in 0..len {
        if i > 0 {
            cur = walk_step(net, cur, rng);
        }
        sites.push(cur);
    }
    sites
}

/// Samples a fresh genome: a lazy random walk from a uniform start site,
/// uniform strategies, each flag set independently.
pub fn random_genome<R: Rng>(net: &SiteNetwork, length: usize, rng: &mut R) -> Genome {
    assert!(length >= 1, "genome length must be >= 1");
    let start = SiteId(rng.random_range(0..net.len()));
    let sites = random_walk(net, start, length, rng);
    let genes = sites
        .into_iter()
        .map(|s| random_gene(s, FOUNDER_FLAG_PROB, rng))
        .collect();
    Genome::new(genes, net)
}

/// Single-point crossover at a position where both parents reference the
/// same site, so the child is a valid path without repair. When the parents
/// share no site at any index the child is a copy of `a`.
pub fn recombine<R: Rng>(a: &Genome, b: &Genome, rng: &mut R) -> Genome {
    assert_eq!(
        a.len(),
        b.len(),
        "recombine requires genomes of equal length"
    );
    let common: Vec<usize> = (0..a.len())
        .filter(|&k| a.genes[k].site == b.genes[k].site)
        .collect();
    let Some(&k) = common.choose(rng) else {
        return a.clone();
    };
    let mut genes = a.genes[..k].to_vec();
    genes.extend_from_slice(&b.genes[k..]);
    Genome { genes }
}

/// Shared mutation pass over a gene sequence.
///
/// Point mutation hits each gene independently with probability
/// `point_rate`: the strategy is resampled and each flag flips with
/// probability one half. Path mutation fires at most once per call with
/// probability `path_rate`: an index at or above `min_path_index` is chosen
/// and the suffix from it is regenerated as a fresh random walk (continuing
/// from the previous gene's site, or from a resampled start when the index
/// is zero).
pub(crate) fn mutate_genes<R: Rng>(
    genes: &mut Vec<Gene>,
    net: &SiteNetwork,
    point_rate: f64,
    path_rate: f64,
    min_path_index: usize,
    rng: &mut R,
) {
    assert!((0.0..=1.0).contains(&point_rate), "point_rate out of [0,1]");
    assert!((0.0..=1.0).contains(&path_rate), "path_rate out of [0,1]");
    for gene in genes.iter_mut() {
        if rng.random_bool(point_rate) {
            gene.strategy = *ForageStrategy::ALL.choose(rng).unwrap();
            if rng.random_bool(0.5) {
                gene.breed = !gene.breed;
            }
            if rng.random_bool(0.5) {
                gene.learn = !gene.learn;
            }
            if rng.random_bool(0.5) {
                gene.social = !gene.social;
            }
        }
    }
    if genes.len() > min_path_index && rng.random_bool(path_rate) {
        let i = rng.random_range(min_path_index..genes.len());
        let suffix_sites: Vec<SiteId> = if i == 0 {
            // The whole path restarts from a resampled site.
            let start = SiteId(rng.random_range(0..net.len()));
            random_walk(net, start, genes.len(), rng)
        } else {
            let mut sites = Vec::with_capacity(genes.len() - i);
            let mut cur = genes[i - 1].site;
            for _ in i..genes.len() {
                cur = walk_step(net, cur, rng);
                sites.push(cur);
            }
            sites
        };
        for (offset, &site) in suffix_sites.iter().enumerate() {
            genes[i + offset] = random_gene(site, REFRESH_FLAG_PROB, rng);
        }
    }
}

/// Mutated copy of a genome; the original is untouched.
pub fn mutate_genome<R: Rng>(
    g: &Genome,
    net: &SiteNetwork,
    point_rate: f64,
    path_rate: f64,
    rng: &mut R,
) -> Genome {
    let mut genes = g.genes.clone();
    mutate_genes(&mut genes, net, point_rate, path_rate, 0, rng);
    debug_assert!(path_is_valid(&genes, net));
    Genome { genes }
}

/// Development: every contiguous day-length window of the genome is offered
/// to an empty memome, keyed by the window's first site, under the elite
/// rule. The result holds the best window per start site.
pub fn develop(
    g: &Genome,
    day_length: usize,
    net: &SiteNetwork,
    econ: &EconomyParams,
) -> Memome {
    assert!(
        g.len() >= day_length,
        "develop requires genome length ({}) >= day length ({day_length})",
        g.len()
    );
    let mut memome = Memome::new();
    for window in g.genes.windows(day_length) {
        memome.insert(Memeplex::from_genes(window.to_vec(), net, econ));
    }
    memome
}

/// Fraction of genes carrying each activity flag.
pub fn genome_time_allocation(g: &Genome) -> (f64, f64, f64) {
    let n = g.len() as f64;
    let breed = g.genes.iter().filter(|gene| gene.breed).count() as f64;
    let learn = g.genes.iter().filter(|gene| gene.learn).count() as f64;
    let social = g.genes.iter().filter(|gene| gene.social).count() as f64;
    (breed / n, learn / n, social / n)
}

/// Child genome construction for the Lamarck engine mode: the parents'
/// archived memeplexes (alternating parents, descending fitness) are
/// concatenated, stitched with shortest-path connector walks, and truncated
/// or padded by random walk to the target length.
pub fn lamarck_genome<R: Rng>(
    parent_a: &Memome,
    parent_b: &Memome,
    length: usize,
    net: &SiteNetwork,
    rng: &mut R,
) -> Genome {
    let ranked = |m: &Memome| -> Vec<Memeplex> {
        let mut entries: Vec<Memeplex> = m.iter().map(|(_, plex)| plex.clone()).collect();
        entries.sort_by(|a, b| {
            b.fitness()
                .partial_cmp(&a.fitness())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.start_site().cmp(&b.start_site()))
        });
        entries
    };
    let from_a = ranked(parent_a);
    let from_b = ranked(parent_b);

    let mut genes: Vec<Gene> = Vec::with_capacity(length);
    let mut ai = 0;
    let mut bi = 0;
    let mut take_a = true;
    while genes.len() < length && (ai < from_a.len() || bi < from_b.len()) {
        let plex = if take_a && ai < from_a.len() {
            ai += 1;
            &from_a[ai - 1]
        } else if bi < from_b.len() {
            bi += 1;
            &from_b[bi - 1]
        } else {
            ai += 1;
            &from_a[ai - 1]
        };
        take_a = !take_a;

        if let Some(last) = genes.last() {
            let Some(connector) = net.shortest_path(last.site, plex.start_site()) else {
                continue;
            };
            // Skip the endpoints: the previous gene already sits at the
            // start, and the memeplex itself provides the destination.
            for &site in connector.iter().skip(1).take(connector.len().saturating_sub(2)) {
                genes.push(Gene {
                    site,
                    strategy: ForageStrategy::Standard,
                    breed: false,
                    learn: false,
                    social: false,
                });
            }
        }
        genes.extend_from_slice(plex.genes());
    }

    if genes.is_empty() {
        return random_genome(net, length, rng);
    }
    genes.truncate(length);
    while genes.len() < length {
        let next = walk_step(net, genes.last().unwrap().site, rng);
        genes.push(random_gene(next, REFRESH_FLAG_PROB, rng));
    }
    debug_assert!(path_is_valid(&genes, net));
    Genome { genes }
}
