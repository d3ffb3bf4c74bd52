//! Benchmark harness: seeded fixtures, each scenario run under the three
//! execution modes, with wall time, record fetches and result digests.

use std::collections::HashSet;
use std::fmt;
use std::time::{Duration, Instant};

use gredo_core::database::Database;
use gredo_core::fixtures::{ecommerce, rng, EcommerceScale, YOGURT_QUERY};
use gredo_core::query::optimizer::{run_query, JoinShape, QueryOptions};
use gredo_core::schema::{ColumnDef, ColumnType};
use gredo_core::value::Value;
use gredo_core::{Error, Result};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// All rewrite rules, predicate pushdown into matching, cost-based
    /// join placement.
    Full,
    /// No rewrite rules and no predicate pushdown; match first.
    NoOptimizer,
    /// As `NoOptimizer`, with patterns matched by hash joins over the
    /// vertex and edge tables instead of topology traversal.
    JoinEmulation,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Full, Mode::NoOptimizer, Mode::JoinEmulation];

    pub fn options(self, base: &QueryOptions) -> QueryOptions {
        match self {
            Mode::Full => base.clone(),
            Mode::NoOptimizer => QueryOptions {
                costs: base.costs,
                ..QueryOptions::unoptimized()
            },
            Mode::JoinEmulation => QueryOptions {
                costs: base.costs,
                join_emulation: true,
                ..QueryOptions::unoptimized()
            },
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::NoOptimizer => "no-optimizer",
            Mode::JoinEmulation => "join-emulation",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Measurement {
    pub scenario: String,
    pub mode: Mode,
    /// Median over the timed runs.
    pub wall: Duration,
    /// Records read by scans and tid fetches in one run.
    pub fetches: u64,
    pub rows: usize,
    pub digest: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub suite: String,
    pub scale: usize,
    pub seed: u64,
    pub measurements: Vec<Measurement>,
}

impl BenchReport {
    pub fn get(&self, scenario: &str, mode: Mode) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.scenario == scenario && m.mode == mode)
    }

    pub fn scenarios(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for m in &self.measurements {
            if !out.contains(&m.scenario.as_str()) {
                out.push(&m.scenario);
            }
        }
        out
    }

    /// Every scenario produced the same result multiset in every mode.
    pub fn digests_agree(&self) -> bool {
        self.scenarios().iter().all(|s| {
            let mut ds = self.measurements.iter().filter(|m| m.scenario == *s).map(|m| &m.digest);
            let first = ds.next();
            ds.all(|d| Some(d) == first)
        })
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} scale {} seed {}", self.suite, self.scale, self.seed)?;
        if self.measurements.is_empty() {
            return writeln!(f, "(no scenarios)");
        }
        writeln!(
            f,
            "{:<24} {:<15} {:>12} {:>10} {:>8}  digest",
            "scenario", "mode", "wall_ms", "fetches", "rows"
        )?;
        for m in &self.measurements {
            writeln!(
                f,
                "{:<24} {:<15} {:>12.3} {:>10} {:>8}  {}",
                m.scenario,
                m.mode.to_string(),
                m.wall.as_secs_f64() * 1e3,
                m.fetches,
                m.rows,
                &m.digest[..16]
            )?;
        }
        writeln!(
            f,
            "results {}",
            if self.digests_agree() { "agree across modes" } else { "DIFFER across modes" }
        )
    }
}

/// Run `query` once to warm caches, then `runs` timed times.
pub fn measure(db: &Database, scenario: &str, query: &str, mode: Mode, base: &QueryOptions, runs: usize) -> Result<Measurement> {
    let opts = mode.options(base);
    run_query(db, query, &opts)?;
    let mut times = Vec::with_capacity(runs.max(1));
    let mut last = None;
    let mut fetches = 0;
    for _ in 0..runs.max(1) {
        db.reset_counters();
        let start = Instant::now();
        let (_, result) = run_query(db, query, &opts)?;
        times.push(start.elapsed());
        fetches = db.access_stats().record_fetches();
        last = Some(result);
    }
    times.sort();
    let result = last.expect("at least one run");
    Ok(Measurement {
        scenario: scenario.to_string(),
        mode,
        wall: times[times.len() / 2],
        fetches,
        rows: result.row_count(),
        digest: result.digest(),
    })
}

/// The e-commerce fixture used by the `gcdi` suite.
pub fn gcdi_scale(scale: usize) -> EcommerceScale {
    EcommerceScale {
        customers: 100 * scale,
        products: 8,
        orders: 300 * scale,
        tags: 6,
        interests: 400 * scale,
    }
}

/// The fixture behind the `speedup` suite: `500 * scale` customers and
/// persons, 100 tags and `10_000 * scale` interest edges.
pub fn speedup_scale(scale: usize) -> EcommerceScale {
    EcommerceScale {
        customers: 500 * scale,
        products: 8,
        orders: 1000 * scale,
        tags: 100,
        interests: 10_000 * scale,
    }
}

pub const SELECTIVE_CROSS_MODEL: &str = "SELECT C.name, t.name FROM Customers C, Interested_in \
MATCH (p:Persons)-[e:Interested in]->(t:Tags) \
WHERE C.id = p.id AND C.id <= 20 AND e.weight >= 5";

pub const SELECTIVE_PATTERN: &str = "SELECT p.name, t.id FROM Interested_in \
MATCH (p:Persons)-[e:Interested in]->(t:Tags) WHERE p.id <= 10";

fn scenarios(suite: &str) -> Result<Vec<(&'static str, &'static str)>> {
    Ok(match suite {
        "gcdi" => vec![
            ("yogurt", YOGURT_QUERY),
            ("selective-cross-model", SELECTIVE_CROSS_MODEL),
            ("selective-pattern", SELECTIVE_PATTERN),
        ],
        "speedup" => vec![
            ("selective-cross-model", SELECTIVE_CROSS_MODEL),
            ("selective-pattern", SELECTIVE_PATTERN),
        ],
        other => return Err(Error::NotFound(format!("bench suite {other} (expected gcdi or speedup)"))),
    })
}

/// Generate the suite's fixture at `scale` and measure each scenario in
/// every mode. Scale 0 gives an empty report.
pub fn bench(suite: &str, scale: usize, seed: u64, runs: usize, base: &QueryOptions) -> Result<BenchReport> {
    let list = scenarios(suite)?;
    let mut report = BenchReport {
        suite: suite.to_string(),
        scale,
        seed,
        measurements: Vec::new(),
    };
    if scale == 0 {
        return Ok(report);
    }
    let mut db = Database::in_memory();
    let shape = if suite == "speedup" { speedup_scale(scale) } else { gcdi_scale(scale) };
    ecommerce(&mut db, shape, seed)?;
    for (name, query) in list {
        for mode in Mode::ALL {
            report.measurements.push(measure(&db, name, query, mode, base, runs)?);
        }
    }
    Ok(report)
}

/// Size of the payments fixture used for plan ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaymentsScale {
    pub users: usize,
    pub transfers: usize,
    pub days: usize,
}

/// Regions (10), Users (`uid` = account id, `region`, `score` in [0,1)),
/// Days (`holiday` set on about 3%), and graph Payments over vertex table
/// Accounts (`id`, `region`) with edge table Transfers (`amount`, `day`).
pub fn payments(db: &mut Database, scale: PaymentsScale, seed: u64) -> Result<()> {
    let mut r = rng(seed);
    let int = |n: &str| ColumnDef::new(n, ColumnType::Int);
    db.create_relation("Regions", vec![int("id"), ColumnDef::new("name", ColumnType::Text)])?;
    db.create_relation("Users", vec![int("uid"), int("region"), ColumnDef::new("score", ColumnType::Float)])?;
    db.create_relation("Days", vec![int("day"), int("holiday")])?;
    db.create_vertex_table("Accounts", "Account", vec![int("id"), int("region")])?;
    db.create_edge_table("Transfers", "transfer", vec![ColumnDef::new("amount", ColumnType::Float), int("day")])?;
    db.create_graph("Payments", &["Accounts"], "Transfers")?;
    let names = ["north", "south", "east", "west", "center", "coast", "hills", "plain", "lake", "delta"];
    db.insert_by_name(
        "Regions",
        names.iter().enumerate().map(|(i, n)| vec![Value::Int(i as i64), Value::from(*n)]).collect(),
    )?;
    let regions: Vec<i64> = (0..scale.users).map(|_| r.gen_range(0..names.len() as i64)).collect();
    db.insert_by_name(
        "Users",
        (0..scale.users)
            .map(|i| vec![Value::Int(i as i64), Value::Int(regions[i]), Value::Float(r.gen())])
            .collect(),
    )?;
    db.insert_by_name(
        "Days",
        (0..scale.days as i64).map(|d| vec![Value::Int(d), Value::Int(i64::from(r.gen_bool(0.03)))]).collect(),
    )?;
    db.insert_by_name(
        "Accounts",
        (0..scale.users)
            .map(|i| vec![Value::Int(i as i64), Value::Int(i as i64), Value::Int(regions[i])])
            .collect(),
    )?;
    let oid = db.oid_of("Accounts")?.0 as i64;
    let target = scale.transfers.min(scale.users * scale.users);
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(target);
    while rows.len() < target {
        let (s, t) = (r.gen_range(0..scale.users as i64), r.gen_range(0..scale.users as i64));
        if seen.insert((s, t)) {
            rows.push(vec![
                Value::Int(oid),
                Value::Int(s),
                Value::Int(oid),
                Value::Int(t),
                Value::Float((r.gen::<f64>() * 1000.0).round() / 10.0),
                Value::Int(r.gen_range(0..scale.days.max(1) as i64)),
            ]);
        }
    }
    db.insert_by_name("Transfers", rows)?;
    Ok(())
}

/// One plan-ranking fixture: a payments database and a query whose join
/// shapes differ widely in work.
#[derive(Debug, Clone)]
pub struct RankingCase {
    pub name: String,
    pub scale: PaymentsScale,
    pub seed: u64,
    pub query: String,
}

pub fn ranking_cases(seed: u64) -> Vec<RankingCase> {
    let case = |name: &str, users, transfers, query: &str, k: u64| RankingCase {
        name: name.to_string(),
        scale: PaymentsScale { users, transfers, days: 365 },
        seed: seed.wrapping_add(k),
        query: query.to_string(),
    };
    let pushed = |cut: f64| {
        format!(
            "SELECT a.id, e.amount FROM Users U, Payments MATCH (a:Account)-[e:transfer]->(b:Account) \
             WHERE U.uid = a.id AND U.score > {cut}"
        )
    };
    let edge_join = |k: i64| {
        format!(
            "SELECT a.id, e.amount, D.holiday FROM Days D, Payments MATCH (a:Account)-[e:transfer]->(b:Account) \
             WHERE D.day = e.day AND a.id < {k}"
        )
    };
    let via_region = |name: &str| {
        format!(
            "SELECT U.uid, e.amount FROM Users U, Regions R, Payments MATCH (a:Account)-[e:transfer]->(b:Account) \
             WHERE U.uid = a.id AND U.region = R.id AND R.name = '{name}' AND U.score > 0.9"
        )
    };
    vec![
        case("restrict-start-1", 1000, 40_000, &pushed(0.99), 1),
        case("restrict-start-2", 2000, 60_000, &pushed(0.98), 2),
        case("restrict-start-3", 500, 25_000, &pushed(0.97), 3),
        case("restrict-start-4", 1500, 50_000, &pushed(0.995), 4),
        case("edge-join-1", 1000, 40_000, &edge_join(5), 5),
        case("edge-join-2", 2000, 60_000, &edge_join(10), 6),
        case("edge-join-3", 800, 30_000, &edge_join(3), 7),
        case("joins-first-1", 1000, 40_000, &via_region("north"), 8),
        case("joins-first-2", 2000, 60_000, &via_region("delta"), 9),
        case("joins-first-3", 1200, 45_000, &via_region("lake"), 10),
    ]
}

#[derive(Debug, Clone)]
pub struct RankingOutcome {
    pub case: String,
    pub chosen: JoinShape,
    /// Per legal shape: estimated cost and measured record fetches.
    pub candidates: Vec<(JoinShape, f64, u64)>,
}

impl RankingOutcome {
    pub fn min_fetches(&self) -> u64 {
        self.candidates.iter().map(|c| c.2).min().unwrap_or(0)
    }

    pub fn max_fetches(&self) -> u64 {
        self.candidates.iter().map(|c| c.2).max().unwrap_or(0)
    }

    pub fn chosen_fetches(&self) -> u64 {
        self.candidates.iter().find(|c| c.0 == self.chosen).map_or(0, |c| c.2)
    }

    pub fn chose_cheapest(&self) -> bool {
        self.chosen_fetches() == self.min_fetches()
    }
}

/// Build the case's fixture, let the optimizer choose, then force each
/// legal shape and count record fetches.
pub fn rank(case: &RankingCase, base: &QueryOptions) -> Result<RankingOutcome> {
    let mut db = Database::in_memory();
    payments(&mut db, case.scale, case.seed)?;
    let (plan, _) = run_query(&db, &case.query, base)?;
    let mut candidates = Vec::new();
    for (shape, estimate) in &plan.candidates {
        let forced = QueryOptions {
            shape: Some(*shape),
            ..base.clone()
        };
        run_query(&db, &case.query, &forced)?;
        db.reset_counters();
        run_query(&db, &case.query, &forced)?;
        candidates.push((*shape, estimate.cost, db.access_stats().record_fetches()));
    }
    Ok(RankingOutcome {
        case: case.name.clone(),
        chosen: plan.shape,
        candidates,
    })
}
