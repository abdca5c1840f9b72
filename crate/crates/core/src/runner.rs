//! Batch execution and data emission.
//!
//! A batch runs `runs` simulations with seeds `base_seed + i`, in parallel
//! with one run per worker and fully isolated state, then writes one CSV
//! per run, a cross-run aggregate CSV, and a summary file. Emission is
//! deterministic: the same configuration and seed produce byte-identical
//! output directories.

use crate::config::Config;
use crate::engine::{Mode, World};
use crate::metrics::{self, DayMetrics};
use crate::network::NetworkError;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Exact header of every per-run and aggregate CSV.
pub const CSV_HEADER: &str = "day,population,mean_energy,genetic_opt,memetic_opt,breed_time,\
learn_time,social_time,genome_breed,genome_learn,genome_social,young_activity,old_activity";

pub const SNAPSHOT_HEADER: &str = "day,id,age,energy,site,archive_size,best_fitness";

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Optional extras recorded during a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Emit per-agent snapshot rows every N days (day 0 included).
    pub snapshot_every: Option<u64>,
    /// Capture the generated network in dump format.
    pub dump_network: bool,
}

#[derive(Debug, Clone)]
pub struct SnapshotRow {
    pub day: u64,
    pub id: u64,
    pub age: u32,
    pub energy: f64,
    pub site: usize,
    pub archive_size: usize,
    pub best_fitness: f64,
}

/// The metric series of one simulation.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub mode: Mode,
    pub series: Vec<DayMetrics>,
    /// Day the population reached zero, when it did; the series ends there.
    pub collapse_day: Option<u64>,
    pub snapshots: Vec<SnapshotRow>,
    pub network_dump: Option<String>,
}

/// Cross-run means for one day, over runs still alive that day.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub day: u64,
    pub runs_alive: usize,
    pub population: Option<f64>,
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

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub runs: Vec<RunResult>,
    pub collapse_fraction: f64,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs one simulation to `max_days` or collapse, recording metrics daily
/// (day 0 is the initial snapshot).
pub fn run_simulation(
    cfg: &Config,
    seed: u64,
    opts: RunOptions,
) -> Result<RunResult, RunnerError> {
    let mut world = World::init(cfg.world_params(), seed)?;
    let network_dump = opts.dump_network.then(|| world.net().dump());

    let mut snapshots = Vec::new();
    let take_snapshot = |world: &World, out: &mut Vec<SnapshotRow>| {
        if let Some(every) = opts.snapshot_every {
            if every > 0 && world.day() % every == 0 {
                for agent in world.agents() {
                    out.push(SnapshotRow {
                        day: world.day(),
                        id: agent.id,
                        age: agent.age,
                        energy: agent.energy,
                        site: agent.site.0,
                        archive_size: agent.memome.len(),
                        best_fitness: agent.memome.best_fitness().unwrap_or(f64::NAN),
                    });
                }
            }
        }
    };

    let mut series = vec![metrics::collect(&world, cfg.age_split)];
    take_snapshot(&world, &mut snapshots);
    let mut collapse_day = metrics::collapse_check(&world, None);

    if collapse_day.is_none() {
        for _ in 0..cfg.max_days {
            world.run_day();
            series.push(metrics::collect(&world, cfg.age_split));
            take_snapshot(&world, &mut snapshots);
            collapse_day = metrics::collapse_check(&world, collapse_day);
            if collapse_day.is_some() {
                break;
            }
            world.begin_next_day();
        }
    }

    Ok(RunResult {
        seed,
        mode: cfg.mode,
        series,
        collapse_day,
        snapshots,
        network_dump,
    })
}

/// Runs the configured batch; run `i` uses seed `base_seed + i`.
pub fn run_batch(cfg: &Config, opts: RunOptions) -> Result<BatchResult, RunnerError> {
    let runs: Vec<RunResult> = (0..cfg.runs)
        .into_par_iter()
        .map(|i| run_simulation(cfg, cfg.base_seed.wrapping_add(i), opts))
        .collect::<Result<_, _>>()?;
    let collapsed = runs.iter().filter(|r| r.collapse_day.is_some()).count();
    let collapse_fraction = collapsed as f64 / runs.len() as f64;
    let aggregate = aggregate_rows(&runs);
    Ok(BatchResult {
        runs,
        collapse_fraction,
        aggregate,
    })
}

fn aggregate_rows(runs: &[RunResult]) -> Vec<AggregateRow> {
    let max_len = runs.iter().map(|r| r.series.len()).max().unwrap_or(0);
    let mut out = Vec::with_capacity(max_len);
    for day_idx in 0..max_len {
        let alive: Vec<&DayMetrics> = runs
            .iter()
            .filter_map(|r| r.series.get(day_idx))
            .filter(|m| m.population > 0)
            .collect();
        let day = day_idx as u64;
        let mean_of = |f: &dyn Fn(&DayMetrics) -> Option<f64>| -> Option<f64> {
            let values: Vec<f64> = alive.iter().filter_map(|m| f(m)).collect();
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        };
        out.push(AggregateRow {
            day,
            runs_alive: alive.len(),
            population: if alive.is_empty() {
                None
            } else {
                Some(alive.iter().map(|m| m.population as f64).sum::<f64>() / alive.len() as f64)
            },
            mean_energy: mean_of(&|m| m.mean_energy),
            genetic_opt: mean_of(&|m| m.genetic_opt),
            memetic_opt: mean_of(&|m| m.memetic_opt),
            breed_time: mean_of(&|m| m.breed_time),
            learn_time: mean_of(&|m| m.learn_time),
            social_time: mean_of(&|m| m.social_time),
            genome_breed: mean_of(&|m| m.genome_breed),
            genome_learn: mean_of(&|m| m.genome_learn),
            genome_social: mean_of(&|m| m.genome_social),
            young_activity: mean_of(&|m| m.young_activity),
            old_activity: mean_of(&|m| m.old_activity),
        });
    }
    out
}

fn opt6(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// One CSV data row for a day of one run.
pub fn metrics_csv_row(m: &DayMetrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        m.day,
        m.population,
        opt6(m.mean_energy),
        opt6(m.genetic_opt),
        opt6(m.memetic_opt),
        opt6(m.breed_time),
        opt6(m.learn_time),
        opt6(m.social_time),
        opt6(m.genome_breed),
        opt6(m.genome_learn),
        opt6(m.genome_social),
        opt6(m.young_activity),
        opt6(m.old_activity)
    )
}

fn aggregate_csv_row(r: &AggregateRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.day,
        opt6(r.population),
        opt6(r.mean_energy),
        opt6(r.genetic_opt),
        opt6(r.memetic_opt),
        opt6(r.breed_time),
        opt6(r.learn_time),
        opt6(r.social_time),
        opt6(r.genome_breed),
        opt6(r.genome_learn),
        opt6(r.genome_social),
        opt6(r.young_activity),
        opt6(r.old_activity)
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunnerError> {
    let io_err = |source: std::io::Error| RunnerError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(contents.as_bytes()).map_err(io_err)
}

/// Serializes one run to `run_<i>.csv` (plus optional snapshot and network
/// files) inside `out_dir`.
pub fn emit_run_csv(run: &RunResult, index: u64, out_dir: &Path) -> Result<(), RunnerError> {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &run.series {
        csv.push_str(&metrics_csv_row(row));
        csv.push('\n');
    }
    write_file(&out_dir.join(format!("run_{index}.csv")), &csv)?;

    if !run.snapshots.is_empty() {
        let mut snap = String::from(SNAPSHOT_HEADER);
        snap.push('\n');
        for s in &run.snapshots {
            snap.push_str(&format!(
                "{},{},{},{:.6},{},{},{:.6}\n",
                s.day, s.id, s.age, s.energy, s.site, s.archive_size, s.best_fitness
            ));
        }
        write_file(&out_dir.join(format!("run_{index}_snapshots.csv")), &snap)?;
    }
    if let Some(dump) = &run.network_dump {
        write_file(&out_dir.join(format!("run_{index}_network.txt")), dump)?;
    }
    Ok(())
}

/// Writes the whole batch: per-run CSVs, `batch.csv` aggregates, and
/// `summary.txt` with the collapse fraction.
pub fn emit_batch(batch: &BatchResult, cfg: &Config, out_dir: &Path) -> Result<(), RunnerError> {
    std::fs::create_dir_all(out_dir).map_err(|source| RunnerError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    for (i, run) in batch.runs.iter().enumerate() {
        emit_run_csv(run, i as u64, out_dir)?;
    }

    let mut agg = String::from(CSV_HEADER);
    agg.push('\n');
    for row in &batch.aggregate {
        agg.push_str(&aggregate_csv_row(row));
        agg.push('\n');
    }
    write_file(&out_dir.join("batch.csv"), &agg)?;

    let collapsed = batch
        .runs
        .iter()
        .filter(|r| r.collapse_day.is_some())
        .count();
    let summary = format!(
        "mode = {}\nruns = {}\nmax_days = {}\nbase_seed = {}\ncollapsed_runs = {}\ncollapse_fraction = {:.6}\n",
        cfg.mode, cfg.runs, cfg.max_days, cfg.base_seed, collapsed, batch.collapse_fraction
    );
    write_file(&out_dir.join("summary.txt"), &summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> Config {
        Config {
            n_sites: 15,
            radius: 0.5,
            initial_population: 15,
            genome_length: 40,
            day_length: 8,
            max_days: 30,
            runs: 3,
            base_seed: 5,
            ..Config::default()
        }
    }

    #[test]
    fn zero_days_gives_initial_snapshot_only() {
        let cfg = Config {
            max_days: 0,
            ..quick_cfg()
        };
        let run = run_simulation(&cfg, 1, RunOptions::default()).unwrap();
        assert_eq!(run.series.len(), 1);
        assert_eq!(run.series[0].day, 0);
        assert_eq!(run.collapse_day, None);
    }

    #[test]
    fn empty_population_collapses_at_day_zero() {
        let cfg = Config {
            initial_population: 0,
            ..quick_cfg()
        };
        let run = run_simulation(&cfg, 1, RunOptions::default()).unwrap();
        assert_eq!(run.collapse_day, Some(0));
        assert_eq!(run.series.len(), 1);
        assert_eq!(run.series[0].population, 0);
    }

    #[test]
    fn series_length_matches_collapse_or_max_days() {
        let cfg = quick_cfg();
        let run = run_simulation(&cfg, 2, RunOptions::default()).unwrap();
        let last = run.collapse_day.unwrap_or(cfg.max_days);
        assert_eq!(run.series.len() as u64, last + 1);
        if run.collapse_day.is_some() {
            assert_eq!(run.series.last().unwrap().population, 0);
        }
    }

    #[test]
    fn single_agent_never_breeds() {
        let cfg = Config {
            initial_population: 1,
            max_days: 40,
            ..quick_cfg()
        };
        let run = run_simulation(&cfg, 3, RunOptions::default()).unwrap();
        // Population can only shrink from 1 without a partner.
        for row in &run.series {
            assert!(row.population <= 1);
        }
    }

    #[test]
    fn identical_config_and_seed_reproduce_the_run() {
        let cfg = quick_cfg();
        let a = run_simulation(&cfg, 9, RunOptions::default()).unwrap();
        let b = run_simulation(&cfg, 9, RunOptions::default()).unwrap();
        assert_eq!(a.series.len(), b.series.len());
        for (x, y) in a.series.iter().zip(&b.series) {
            assert_eq!(metrics_csv_row(x), metrics_csv_row(y));
        }
    }

    #[test]
    fn batch_is_deterministic_and_reports_collapse_fraction() {
        let cfg = quick_cfg();
        let a = run_batch(&cfg, RunOptions::default()).unwrap();
        let b = run_batch(&cfg, RunOptions::default()).unwrap();
        assert_eq!(a.runs.len(), 3);
        assert!((0.0..=1.0).contains(&a.collapse_fraction));
        for (ra, rb) in a.runs.iter().zip(&b.runs) {
            assert_eq!(ra.seed, rb.seed);
            assert_eq!(ra.collapse_day, rb.collapse_day);
            for (x, y) in ra.series.iter().zip(&rb.series) {
                assert_eq!(metrics_csv_row(x), metrics_csv_row(y));
            }
        }

        let single = Config {
            runs: 1,
            ..quick_cfg()
        };
        let one = run_batch(&single, RunOptions::default()).unwrap();
        assert!(one.collapse_fraction == 0.0 || one.collapse_fraction == 1.0);
    }

    #[test]
    fn emission_is_byte_identical_on_reemit() {
        let cfg = quick_cfg();
        let batch = run_batch(&cfg, RunOptions::default()).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        emit_batch(&batch, &cfg, dir_a.path()).unwrap();
        emit_batch(&batch, &cfg, dir_b.path()).unwrap();

        let mut names_a: Vec<_> = std::fs::read_dir(dir_a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names_a.sort();
        let mut names_b: Vec<_> = std::fs::read_dir(dir_b.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names_b.sort();
        assert_eq!(names_a, names_b);
        assert!(names_a.iter().any(|n| n == "batch.csv"));
        assert!(names_a.iter().any(|n| n == "summary.txt"));
        for name in names_a {
            let a = std::fs::read(dir_a.path().join(&name)).unwrap();
            let b = std::fs::read(dir_b.path().join(&name)).unwrap();
            assert_eq!(a, b, "{name:?} differs between emissions");
        }
    }

    #[test]
    fn csv_header_is_pinned() {
        assert_eq!(
            CSV_HEADER,
            "day,population,mean_energy,genetic_opt,memetic_opt,breed_time,learn_time,\
social_time,genome_breed,genome_learn,genome_social,young_activity,old_activity"
        );
    }

    #[test]
    fn snapshots_and_network_dump_are_emitted_on_request() {
        let cfg = Config {
            max_days: 4,
            runs: 1,
            ..quick_cfg()
        };
        let opts = RunOptions {
            snapshot_every: Some(2),
            dump_network: true,
        };
        let batch = run_batch(&cfg, opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_batch(&batch, &cfg, dir.path()).unwrap();
        let snap = std::fs::read_to_string(dir.path().join("run_0_snapshots.csv")).unwrap();
        assert!(snap.starts_with(SNAPSHOT_HEADER));
        // Days 0, 2, 4 sampled.
        let days: std::collections::BTreeSet<&str> = snap
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(days.into_iter().collect::<Vec<_>>(), vec!["0", "2", "4"]);

        let net = std::fs::read_to_string(dir.path().join("run_0_network.txt")).unwrap();
        assert!(net.lines().count() >= cfg.n_sites);
    }
}
