//! Experiment configuration files, sweep grids and summary CSV.
//!
//! Config files are flat `key = value` lines; `#` starts a comment.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::adversary::AdversaryType;
use crate::algo::Algorithm;
use crate::error::{ParseError, Result};
use crate::execution::{run_execution, AdversarySpec, ExecutionReport, RunSpec, StopRule};
use crate::fixed::Fixed;
use crate::metrics::{DEFAULT_MAX_ROUNDS, DEFAULT_MAX_STAGES, DEFAULT_STAGE_SIZE};

pub const DEFAULT_BETA: Fixed = Fixed::from_int(10);
pub const DEFAULT_ADVERSARY: &str = "randomized";

pub const KEYS: [&str; 11] = [
    "algorithm",
    "n",
    "rho",
    "beta",
    "collision_detection",
    "seed",
    "stage_size",
    "max_stages",
    "max_rounds",
    "adversary",
    "output",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    pub rho: Fixed,
    pub beta: Fixed,
    pub collision_detection: bool,
    pub seed: u64,
    pub stage_size: u64,
    pub max_stages: usize,
    pub max_rounds: u64,
    /// `randomized`, `randomized-individual`, a strategy name or
    /// `trace:<path>`.
    pub adversary: String,
    pub output: Option<PathBuf>,
}

/// Splits config text into `(key, value)` pairs in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ParseError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ParseError::Line {
            line: idx + 1,
            reason: "expected key = value".into(),
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ParseError> {
    raw.parse().map_err(|_| ParseError::Value {
        key: key.to_string(),
        value: raw.to_string(),
    })
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, n: usize, rho: Fixed) -> Self {
        ExperimentConfig {
            algorithm,
            n,
            rho,
            beta: DEFAULT_BETA,
            collision_detection: false,
            seed: 0,
            stage_size: DEFAULT_STAGE_SIZE,
            max_stages: DEFAULT_MAX_STAGES,
            max_rounds: DEFAULT_MAX_ROUNDS,
            adversary: DEFAULT_ADVERSARY.to_string(),
            output: None,
        }
    }

    /// Builds a config from pairs; later pairs override earlier ones.
    /// `algorithm`, `n` and `rho` are required.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self, ParseError> {
        let find = |key: &str| {
            pairs
                .iter()
                .rev()
                .find(|(k, _)| k.as_ref() == key)
                .map(|(_, v)| v.as_ref())
        };
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !KEYS.contains(&k.as_ref())) {
            return Err(ParseError::Key(k.as_ref().to_string()));
        }
        let required = |key: &str| {
            find(key).ok_or_else(|| ParseError::Value {
                key: key.to_string(),
                value: "<missing>".into(),
            })
        };
        let algorithm: Algorithm = required("algorithm")?.parse()?;
        let mut c = ExperimentConfig::new(
            algorithm,
            value("n", required("n")?)?,
            value("rho", required("rho")?)?,
        );
        if let Some(v) = find("beta") {
            c.beta = value("beta", v)?;
        }
        if let Some(v) = find("collision_detection") {
            c.collision_detection = value("collision_detection", v)?;
        }
        if let Some(v) = find("seed") {
            c.seed = value("seed", v)?;
        }
        if let Some(v) = find("stage_size") {
            c.stage_size = value("stage_size", v)?;
        }
        if let Some(v) = find("max_stages") {
            c.max_stages = value("max_stages", v)?;
        }
        if let Some(v) = find("max_rounds") {
            c.max_rounds = value("max_rounds", v)?;
        }
        if let Some(v) = find("adversary") {
            c.adversary = v.to_string();
        }
        if let Some(v) = find("output") {
            c.output = Some(PathBuf::from(v));
        }
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        ExperimentConfig::from_pairs(&parse_pairs(text)?)
    }

    pub fn emit(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "algorithm = {}", self.algorithm);
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "rho = {}", self.rho);
        let _ = writeln!(out, "beta = {}", self.beta);
        let _ = writeln!(out, "collision_detection = {}", self.collision_detection);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "stage_size = {}", self.stage_size);
        let _ = writeln!(out, "max_stages = {}", self.max_stages);
        let _ = writeln!(out, "max_rounds = {}", self.max_rounds);
        let _ = writeln!(out, "adversary = {}", self.adversary);
        if let Some(p) = &self.output {
            let _ = writeln!(out, "output = {}", p.display());
        }
        out
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        let ty = AdversaryType::new(self.rho, self.beta)?;
        let adversary = AdversarySpec::from_name(&self.adversary)?;
        let mut spec = RunSpec::new(self.algorithm, self.n, ty, adversary);
        spec.collision_detection = self.collision_detection;
        spec.stop = StopRule::StageVerdict {
            max_stages: self.max_stages,
            max_rounds: self.max_rounds,
        };
        spec.stage_size = self.stage_size;
        spec.seed = self.seed;
        Ok(spec)
    }

    pub fn run(&self) -> Result<ExecutionReport> {
        run_execution(&self.run_spec()?)
    }
}

pub const CSV_HEADER: &str =
    "algorithm,n,rho,beta,seed,cd,verdict,avg_latency,stages,max_latency,max_total_queue,rounds";
pub const STAGES_CSV_HEADER: &str = "stage,avg_latency,closed_round";

/// One line of the summary CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub rho: Fixed,
    pub beta: Fixed,
    pub seed: u64,
    pub cd: bool,
    /// `None` when the cell failed.
    pub result: Option<RowResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowResult {
    pub verdict: &'static str,
    pub avg_latency: Option<f64>,
    pub stages: usize,
    pub max_latency: u64,
    pub max_total_queue: u64,
    pub rounds: u64,
}

impl SummaryRow {
    pub fn new(config: &ExperimentConfig, outcome: &Result<ExecutionReport>) -> Self {
        SummaryRow {
            algorithm: config.algorithm,
            n: config.n,
            rho: config.rho,
            beta: config.beta,
            seed: config.seed,
            cd: config.collision_detection,
            result: outcome.as_ref().ok().map(|r| RowResult {
                verdict: r.verdict().label(),
                avg_latency: r.verdict().value(),
                stages: r.summary.stages(),
                max_latency: r.summary.max_delay,
                max_total_queue: r.summary.max_queue,
                rounds: r.summary.rounds,
            }),
        }
    }

    fn sort_key(&self) -> (&'static str, usize, Fixed, u64) {
        (self.algorithm.name(), self.n, self.rho, self.seed)
    }

    pub fn to_csv(&self) -> String {
        let head = format!(
            "{},{},{},{},{},{}",
            self.algorithm, self.n, self.rho, self.beta, self.seed, self.cd
        );
        match &self.result {
            Some(r) => format!(
                "{head},{},{},{},{},{},{}",
                r.verdict,
                r.avg_latency.map(|v| format!("{v:.6}")).unwrap_or_default(),
                r.stages,
                r.max_latency,
                r.max_total_queue,
                r.rounds
            ),
            None => format!("{head},error,,,,,"),
        }
    }
}

/// Header plus rows sorted by (algorithm, n, rho, seed).
pub fn render_csv(rows: &[SummaryRow]) -> String {
    let mut sorted: Vec<&SummaryRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in sorted {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn render_stages_csv(report: &ExecutionReport) -> String {
    let mut out = String::from(STAGES_CSV_HEADER);
    out.push('\n');
    for (i, avg) in report.summary.stage_averages.iter().enumerate() {
        let closed = report
            .summary
            .stage_closures
            .get(i)
            .copied()
            .unwrap_or_default();
        let _ = writeln!(out, "{i},{avg:.6},{closed}");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepGrid {
    pub algorithms: Vec<Algorithm>,
    pub ns: Vec<usize>,
    pub rhos: Vec<Fixed>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Ad-hoc and backoff algorithms, 10 stations, full rate range.
    Fig1,
    /// As `Fig1` with 250 stations.
    Fig2,
    /// Token algorithms, 10 stations, rates in [0.80, 0.98].
    Fig3,
    /// As `Fig3` with 250 stations.
    Fig4,
}

impl std::str::FromStr for Preset {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        match s {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            _ => Err(ParseError::Value {
                key: "preset".into(),
                value: s.into(),
            }),
        }
    }
}

fn rates(micros: impl IntoIterator<Item = u64>) -> Vec<Fixed> {
    micros.into_iter().map(Fixed::from_micros).collect()
}

impl SweepGrid {
    pub fn preset(preset: Preset, seeds: Vec<u64>) -> Self {
        let adhoc = vec![
            Algorithm::CountingBackoff,
            Algorithm::QuadrupleRound,
            Algorithm::QueueBackoff,
            Algorithm::Beb,
            Algorithm::BebCapped,
            Algorithm::Qb,
            Algorithm::QbCapped,
        ];
        let token = vec![
            Algorithm::Rrw,
            Algorithm::OfRrw,
            Algorithm::Srr,
            Algorithm::OfSrr,
            Algorithm::Mbtf,
        ];
        let full = rates((1..=9).map(|i| i * 100_000).chain([950_000]));
        let high = rates((0..=9).map(|i| 800_000 + i * 20_000));
        let (algorithms, n, rhos) = match preset {
            Preset::Fig1 => (adhoc, 10, full),
            Preset::Fig2 => (adhoc, 250, full),
            Preset::Fig3 => (token, 10, high),
            Preset::Fig4 => (token, 250, high),
        };
        SweepGrid {
            algorithms,
            ns: vec![n],
            rhos,
            seeds,
        }
    }

    /// Cells in (algorithm name, n, rho, seed) order; each starts from
    /// `base`. Algorithms that need collision detection get it.
    pub fn cells(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let mut algorithms = self.algorithms.clone();
        algorithms.sort_by_key(|a| a.name());
        algorithms.dedup();
        let mut ns = self.ns.clone();
        ns.sort_unstable();
        let mut rhos = self.rhos.clone();
        rhos.sort_unstable();
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        let mut cells = Vec::new();
        for &algorithm in &algorithms {
            for &n in &ns {
                for &rho in &rhos {
                    for &seed in &seeds {
                        let mut c = base.clone();
                        c.algorithm = algorithm;
                        c.n = n;
                        c.rho = rho;
                        c.seed = seed;
                        c.collision_detection = base.collision_detection || algorithm.requires_cd();
                        cells.push(c);
                    }
                }
            }
        }
        cells
    }
}

/// Runs every cell with at most `jobs` threads; failed cells become
/// `error` rows. Output is independent of `jobs`.
pub fn run_sweep(cells: &[ExperimentConfig], jobs: usize) -> String {
    let rows = crate::batch::run_with_jobs(cells, jobs, |c| SummaryRow::new(c, &c.run()));
    render_csv(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::SimError;
    use proptest::prelude::*;

    #[test]
    fn defaults_and_required_keys() {
        let c = ExperimentConfig::parse("algorithm = rrw\nn = 10\nrho = 0.5\n").unwrap();
        assert_eq!(c.beta, DEFAULT_BETA);
        assert_eq!(c.stage_size, 5_000);
        assert_eq!(c.adversary, "randomized");
        assert!(ExperimentConfig::parse("n = 10\nrho = 0.5").is_err());
        assert!(
            ExperimentConfig::parse("algorithm = rrw\nn = 10\nrho = 0.5\ncolour = red").is_err()
        );
        assert!(ExperimentConfig::parse("algorithm = rrw\nn = ten\nrho = 0.5").is_err());
        assert!(ExperimentConfig::parse("algorithm = rrw\nn 10").is_err());
    }

    #[test]
    fn later_pairs_override() {
        let c = ExperimentConfig::from_pairs(&[
            ("algorithm", "rrw"),
            ("n", "10"),
            ("rho", "0.5"),
            ("seed", "1"),
            ("seed", "7"),
        ])
        .unwrap();
        assert_eq!(c.seed, 7);
    }

    proptest! {
        #[test]
        fn emit_parse_round_trip(
            alg in 0usize..12,
            n in 1usize..1000,
            rho in 1u64..=1_000_000,
            beta in 1_000_000u64..50_000_000,
            cd: bool,
            seed: u64,
            stage_size in 1u64..10_000,
            out in proptest::option::of("[a-z]{1,8}\\.csv"),
        ) {
            let mut c = ExperimentConfig::new(Algorithm::ALL[alg], n, Fixed::from_micros(rho));
            c.beta = Fixed::from_micros(beta);
            c.collision_detection = cd;
            c.seed = seed;
            c.stage_size = stage_size;
            c.output = out.map(PathBuf::from);
            prop_assert_eq!(ExperimentConfig::parse(&c.emit()).unwrap(), c);
        }
    }

    #[test]
    fn csv_rows_sort_and_render() {
        let mut a = ExperimentConfig::new(Algorithm::Rrw, 10, "0.9".parse().unwrap());
        a.seed = 2;
        let mut b = a.clone();
        b.rho = "0.85".parse().unwrap();
        let failed: Result<ExecutionReport> = Err(SimError::InvalidParameter("x".into()));
        let rows = vec![SummaryRow::new(&a, &failed), SummaryRow::new(&b, &failed)];
        let csv = render_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "rrw,10,0.850000,10.000000,2,false,error,,,,,");
        assert_eq!(lines[2], "rrw,10,0.900000,10.000000,2,false,error,,,,,");
        assert_eq!(render_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn grid_cells_are_sorted() {
        let grid = SweepGrid {
            algorithms: vec![Algorithm::Srr, Algorithm::Beb],
            ns: vec![10, 4],
            rhos: vec!["0.5".parse().unwrap(), "0.25".parse().unwrap()],
            seeds: vec![2, 1],
        };
        let base = ExperimentConfig::new(Algorithm::Rrw, 1, Fixed::ONE);
        let cells = grid.cells(&base);
        assert_eq!(cells.len(), 16);
        assert_eq!(cells[0].algorithm, Algorithm::Beb);
        assert_eq!(
            (cells[0].n, cells[0].rho, cells[0].seed),
            (4, "0.25".parse().unwrap(), 1)
        );
        assert!(cells
            .iter()
            .filter(|c| c.algorithm == Algorithm::Srr)
            .all(|c| c.collision_detection));
    }

    #[test]
    fn presets() {
        let fig3 = SweepGrid::preset(Preset::Fig3, vec![1]);
        assert_eq!(fig3.rhos.first().unwrap().to_string(), "0.800000");
        assert_eq!(fig3.rhos.last().unwrap().to_string(), "0.980000");
        assert_eq!(SweepGrid::preset(Preset::Fig2, vec![1]).ns, vec![250]);
        assert!("fig9".parse::<Preset>().is_err());
    }

    #[test]
    fn sweep_is_independent_of_jobs() {
        let grid = SweepGrid {
            algorithms: vec![Algorithm::QueueBackoff, Algorithm::Rrw],
            ns: vec![4],
            rhos: vec!["0.3".parse().unwrap(), "0.6".parse().unwrap()],
            seeds: vec![1, 2],
        };
        let mut base = ExperimentConfig::new(Algorithm::Rrw, 1, Fixed::ONE);
        base.stage_size = 200;
        let cells = grid.cells(&base);
        assert_eq!(run_sweep(&cells, 1), run_sweep(&cells, 4));
    }
}
