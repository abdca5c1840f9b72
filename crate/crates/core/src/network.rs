//! Random geometric network of food sites.
//!
//! Sites are points in the unit square. Two sites are connected when their
//! Euclidean distance is at most the connection radius. Each site holds a
//! food stock bounded by its capacity; stocks are drawn down by foraging
//! during a day and replenished by [`SiteNetwork::regrow`] at night.

use rand::Rng;
use thiserror::Error;

/// How many times generation resamples positions before giving up on
/// producing a connected network.
pub const CONNECTIVITY_RETRIES: usize = 100;

/// Index of a site within its owning network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId(pub usize);

impl std::fmt::Display for SiteId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A food site: a fixed point with a renewable stock.
#[derive(Debug, Clone)]
pub struct Site {
    pub position: (f64, f64),
    pub capacity: f64,
    pub stock: f64,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(
        "could not generate a connected network ({n_sites} sites, radius {radius}) \
         within {retries} attempts"
    )]
    Disconnected {
        n_sites: usize,
        radius: f64,
        retries: usize,
    },
    #[error("invalid network parameters: {0}")]
    InvalidParams(String),
}

/// Undirected geometric graph over food sites.
///
/// Immutable after construction except for per-site stock.
#[derive(Debug, Clone)]
pub struct SiteNetwork {
    sites: Vec<Site>,
    radius: f64,
    /// Neighbor lists, each sorted ascending by site id.
    adjacency: Vec<Vec<SiteId>>,
}

impl SiteNetwork {
    /// Generates a connected network with uniformly placed sites and
    /// capacities drawn uniformly from `capacity_range`.
    ///
    /// Positions are resampled (up to [`CONNECTIVITY_RETRIES`] times) until
    /// the distance-rule graph is connected.
    pub fn generate<R: Rng>(
        n_sites: usize,
        radius: f64,
        capacity_range: (f64, f64),
        rng: &mut R,
    ) -> Result<Self, NetworkError> {
        let (cap_min, cap_max) = capacity_range;
        if n_sites == 0 {
            return Err(NetworkError::InvalidParams("n_sites must be >= 1".into()));
        }
        if !(radius > 0.0 && radius <= std::f64::consts::SQRT_2) {
            return Err(NetworkError::InvalidParams(format!(
                "radius must be in (0, sqrt(2)], got {radius}"
            )));
        }
        if !(cap_min >= 0.0 && cap_min <= cap_max) {
            return Err(NetworkError::InvalidParams(format!(
                "capacity range must satisfy 0 <= min <= max, got [{cap_min}, {cap_max}]"
            )));
        }

        for _ in 0..CONNECTIVITY_RETRIES {
            let positions: Vec<(f64, f64)> = (0..n_sites)
                .map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
                .collect();
            let adjacency = build_adjacency(&positions, radius);
            if connected(&adjacency) {
                let sites = positions
                    .into_iter()
                    .map(|position| {
                        let capacity = if cap_min == cap_max {
                            cap_min
                        } else {
                            rng.random_range(cap_min..=cap_max)
                        };
                        Site {
                            position,
                            capacity,
                            stock: capacity,
                        }
                    })
                    .collect();
                return Ok(SiteNetwork {
                    sites,
                    radius,
                    adjacency,
                });
            }
        }
        Err(NetworkError::Disconnected {
            n_sites,
            radius,
            retries: CONNECTIVITY_RETRIES,
        })
    }

    /// Builds a network from explicit positions and capacities.
    ///
    /// Connectivity is not enforced here; this is the entry point for
    /// hand-built fixtures and debugging.
    pub fn from_parts(
        positions: Vec<(f64, f64)>,
        radius: f64,
        capacities: Vec<f64>,
    ) -> Result<Self, NetworkError> {
        if positions.is_empty() {
            return Err(NetworkError::InvalidParams("need at least one site".into()));
        }
        if positions.len() != capacities.len() {
            return Err(NetworkError::InvalidParams(format!(
                "{} positions but {} capacities",
                positions.len(),
                capacities.len()
            )));
        }
        if capacities.iter().any(|c| *c < 0.0) {
            return Err(NetworkError::InvalidParams(
                "capacities must be non-negative".into(),
            ));
        }
        let adjacency = build_adjacency(&positions, radius);
        let sites = positions
            .into_iter()
            .zip(capacities)
            .map(|(position, capacity)| Site {
                position,
                capacity,
                stock: capacity,
            })
            .collect();
        Ok(SiteNetwork {
            sites,
            radius,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn site(&self, id: SiteId) -> &Site {
        &self.sites[self.checked(id)]
    }

    pub(crate) fn site_mut(&mut self, id: SiteId) -> &mut Site {
        let idx = self.checked(id);
        &mut self.sites[idx]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// All sites adjacent to `id`, ascending by site id.
    pub fn neighbors(&self, id: SiteId) -> &[SiteId] {
        &self.adjacency[self.checked(id)]
    }

    pub fn has_edge(&self, a: SiteId, b: SiteId) -> bool {
        self.checked(a);
        self.checked(b);
        a != b && self.adjacency[a.0].binary_search(&b).is_ok()
    }

    /// True when a path may step from `a` to `b`: staying put or crossing
    /// one edge.
    pub fn valid_step(&self, a: SiteId, b: SiteId) -> bool {
        a == b || self.has_edge(a, b)
    }

    pub fn is_connected(&self) -> bool {
        connected(&self.adjacency)
    }

    /// Each undirected edge once, as `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> Vec<(SiteId, SiteId)> {
        let mut out = Vec::new();
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &n in nbrs {
                if SiteId(i) < n {
                    out.push((SiteId(i), n));
                }
            }
        }
        out
    }

    /// Nightly replenishment: every stock rises by `rate`, capped at capacity.
    pub fn regrow(&mut self, rate: f64) {
        assert!(rate >= 0.0, "regrow rate must be non-negative, got {rate}");
        for site in &mut self.sites {
            site.stock = (site.stock + rate).min(site.capacity);
        }
    }

    /// Shortest path from `a` to `b` by edge count (BFS, neighbors visited
    /// ascending so ties resolve deterministically). Includes both endpoints.
    pub fn shortest_path(&self, a: SiteId, b: SiteId) -> Option<Vec<SiteId>> {
        self.checked(a);
        self.checked(b);
        if a == b {
            return Some(vec![a]);
        }
        let mut parent: Vec<Option<SiteId>> = vec![None; self.sites.len()];
        let mut queue = std::collections::VecDeque::new();
        parent[a.0] = Some(a);
        queue.push_back(a);
        while let Some(v) = queue.pop_front() {
            for &n in &self.adjacency[v.0] {
                if parent[n.0].is_none() {
                    parent[n.0] = Some(v);
                    if n == b {
                        let mut path = vec![b];
                        let mut cur = b;
                        while cur != a {
                            cur = parent[cur.0].unwrap();
                            path.push(cur);
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// Plain-text dump: one `site_id,x,y,capacity` line per site, then one
    /// `edge,a,b` line per undirected edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, site) in self.sites.iter().enumerate() {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                i, site.position.0, site.position.1, site.capacity
            ));
        }
        for (a, b) in self.edges() {
            out.push_str(&format!("edge,{},{}\n", a, b));
        }
        out
    }

    fn checked(&self, id: SiteId) -> usize {
        assert!(
            id.0 < self.sites.len(),
            "site id {} out of bounds for network of {} sites",
            id.0,
            self.sites.len()
        );
        id.0
    }
}

fn build_adjacency(positions: &[(f64, f64)], radius: f64) -> Vec<Vec<SiteId>> {
    let n = positions.len();
    let r2 = radius * radius;
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = positions[i].0 - positions[j].0;
            let dy = positions[i].1 - positions[j].1;
            if dx * dx + dy * dy <= r2 {
                adjacency[i].push(SiteId(j));
                adjacency[j].push(SiteId(i));
            }
        }
    }
    // Pushed in ascending order already, but keep the invariant explicit.
    for nbrs in &mut adjacency {
        nbrs.sort_unstable();
    }
    adjacency
}

fn connected(adjacency: &[Vec<SiteId>]) -> bool {
    let n = adjacency.len();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &n in &adjacency[v] {
            if !seen[n.0] {
                seen[n.0] = true;
                count += 1;
                stack.push(n.0);
            }
        }
    }
    count == n
}
