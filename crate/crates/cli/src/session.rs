//! One shell session: a database, its settings and the inter-buffer, with
//! statement dispatch.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gredo_core::analytics::{run_analyze, AnalysisOutput, InterBuffer, KernelConfig};
use gredo_core::cost::CostConstants;
use gredo_core::database::Database;
use gredo_core::fixtures::{ecommerce, yogurt, EcommerceScale};
use gredo_core::query::optimizer::{optimize, QueryOptions, Rule};
use gredo_core::query::physical::execute;
use gredo_core::query::{build_logical_plan, parse, Statement};
use gredo_core::schema::CollectionKind;
use gredo_core::Error;
use thiserror::Error;

use crate::bench::{bench, rank, ranking_cases};
use crate::ddl::{parse_command, Command};
use crate::format::{render_matrix, render_result, OutputFormat};

const DEFAULT_BUFFER_BUDGET: usize = 256 << 20;
const BENCH_RUNS: usize = 5;

#[derive(Debug, Clone)]
pub struct SessionConfig {
    /// `None` keeps everything in memory.
    pub db_dir: Option<PathBuf>,
    pub optimizer: bool,
    /// Per-rule overrides applied on top of the optimizer toggle.
    pub rules: Vec<(Rule, bool)>,
    pub costs: CostConstants,
    pub workers: usize,
    pub buffer_budget: usize,
    pub format: OutputFormat,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            db_dir: None,
            optimizer: true,
            rules: Vec::new(),
            costs: CostConstants::default(),
            workers: KernelConfig::default().workers,
            buffer_budget: DEFAULT_BUFFER_BUDGET,
            format: OutputFormat::Table,
            seed: 42,
        }
    }
}

impl SessionConfig {
    pub fn query_options(&self) -> QueryOptions {
        let mut opts = if self.optimizer {
            QueryOptions::default()
        } else {
            QueryOptions::unoptimized()
        };
        opts.costs = self.costs;
        for &(rule, on) in &self.rules {
            opts.set_rule(rule, on);
        }
        opts
    }

    pub fn kernel_config(&self) -> KernelConfig {
        KernelConfig::with_workers(self.workers)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.workers == 0 {
            return Err(Error::execution("worker count must be at least 1"));
        }
        self.costs.validate()
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Engine(#[from] Error),
    #[error("{0}")]
    AuditFailed(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Engine(_) => 1,
            CommandError::AuditFailed(_) => 2,
        }
    }

    /// `error[<category>]: <message>`; a failed audit lists its problems.
    pub fn render(&self) -> String {
        match self {
            CommandError::Engine(e) => format!("error[{}]: {e}", e.category()),
            CommandError::AuditFailed(report) => format!("error[execution]: audit failed\n{report}"),
        }
    }
}

pub struct Session {
    db: Database,
    config: SessionConfig,
    buffer: InterBuffer,
}

const HELP: &str = "\
statements end with ';'
  CREATE TABLE name (col TYPE, ...)
  CREATE COLLECTION name
  CREATE VERTEX TABLE name [LABEL 'label'] (col TYPE, ...)
  CREATE EDGE TABLE name [LABEL 'label'] (col TYPE, ...)
  CREATE GRAPH name VERTICES (table, ...) EDGES table
  IMPORT name FROM 'path'      CSV; JSON Lines for collections
  EXPORT name TO 'path'
  INSERT INTO name VALUES (...), ...
  SELECT ... FROM ... [MATCH ...] [WHERE ...]
  EXPLAIN SELECT ...
  ANALYZE MULTIPLY|SIMILARITY|REGRESSION USING (query, ...) [WITH (key = value, ...)]
dot commands
  .tables                  list collections and graphs
  .audit [graph]           check topology consistency (all graphs by default)
  .stats                   record counts and access counters
  .bench gcdi|speedup [scale]
  .bench ranking           plan choice on the ranking fixtures
  .fixture yogurt|ecommerce [scale]
  .set opt on|off | rule <name> on|off | format table|csv|json | workers N
  .help";

fn on_off(word: &str) -> Result<bool, Error> {
    match word.to_ascii_lowercase().as_str() {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(Error::execution(format!("expected on or off, found {other}"))),
    }
}

fn number<T: std::str::FromStr>(word: &str, what: &str) -> Result<T, Error> {
    word.parse()
        .map_err(|_| Error::execution(format!("{what} must be a number, found {word}")))
}

impl Session {
    pub fn open(config: SessionConfig) -> Result<Self, Error> {
        config.validate()?;
        let db = match &config.db_dir {
            Some(dir) => Database::open(dir)?,
            None => Database::in_memory(),
        };
        let buffer = InterBuffer::new(config.buffer_budget);
        Ok(Session { db, config, buffer })
    }

    pub fn db(&self) -> &Database {
        &self.db
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Persist collection logs and topologies when backed by a directory.
    pub fn close(self) -> Result<(), Error> {
        if self.db.dir().is_some() {
            self.db.checkpoint()?;
        }
        Ok(())
    }

    /// Run one statement or dot command and return its formatted output.
    pub fn run_command(&mut self, text: &str) -> Result<String, CommandError> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix('.') {
            return self.dot(rest.trim_end_matches(';'));
        }
        if text.trim_end_matches(';').trim().is_empty() {
            return Ok(String::new());
        }
        if let Some(cmd) = parse_command(text)? {
            let out = self.ddl(cmd)?;
            if self.db.dir().is_some() {
                self.db.checkpoint()?;
            }
            return Ok(out);
        }
        let opts = self.config.query_options();
        match parse(text)? {
            Statement::Query(q) => {
                let plan = optimize(&self.db, build_logical_plan(&q, &self.db)?, &opts)?;
                let result = execute(&self.db, &plan.physical)?;
                Ok(render_result(&result, self.config.format))
            }
            Statement::Explain(q) => {
                let plan = optimize(&self.db, build_logical_plan(&q, &self.db)?, &opts)?;
                Ok(plan.explain())
            }
            Statement::Analyze(a) => {
                let kcfg = self.config.kernel_config();
                let (out, _, _) = run_analyze(&self.db, &a, &opts, &kcfg, &self.buffer)?;
                Ok(match out {
                    AnalysisOutput::Matrix(m) => render_matrix(&m, self.config.format),
                    AnalysisOutput::Regression(r) => {
                        let mut s = String::new();
                        let _ = writeln!(s, "intercept: {:.6}", r.model.weights[0]);
                        for (name, w) in r.features.iter().zip(&r.model.weights[1..]) {
                            let _ = writeln!(s, "{name}: {w:.6}");
                        }
                        let _ = writeln!(s, "loss: {:.6} (baseline {:.6})", r.model.loss, r.baseline_loss);
                        let _ = write!(
                            s,
                            "iterations: {}{}",
                            r.model.iterations,
                            if r.model.converged { " (converged)" } else { "" }
                        );
                        s
                    }
                })
            }
        }
    }

    fn ddl(&mut self, cmd: Command) -> Result<String, Error> {
        let db = &mut self.db;
        Ok(match cmd {
            Command::CreateTable { name, columns } => {
                db.create_relation(&name, columns)?;
                format!("created table {name}")
            }
            Command::CreateCollection { name } => {
                db.create_documents(&name)?;
                format!("created collection {name}")
            }
            Command::CreateVertexTable { name, label, columns } => {
                db.create_vertex_table(&name, &label, columns)?;
                format!("created vertex table {name}")
            }
            Command::CreateEdgeTable { name, label, columns } => {
                db.create_edge_table(&name, &label, columns)?;
                format!("created edge table {name}")
            }
            Command::CreateGraph {
                name,
                vertex_tables,
                edge_table,
            } => {
                let tables: Vec<&str> = vertex_tables.iter().map(String::as_str).collect();
                db.create_graph(&name, &tables, &edge_table)?;
                format!("created graph {name}")
            }
            Command::Import { name, path } => {
                let n = db.import_file(&name, Path::new(&path))?;
                format!("imported {n} records into {name}")
            }
            Command::Export { name, path } => {
                let n = db.export_file(&name, Path::new(&path))?;
                format!("exported {n} records from {name}")
            }
            Command::Insert { name, rows } => {
                let n = db.insert_by_name(&name, rows)?.len();
                format!("inserted {n} records into {name}")
            }
        })
    }

    fn dot(&mut self, text: &str) -> Result<String, CommandError> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let Some((&cmd, args)) = words.split_first() else {
            return Ok(HELP.to_string());
        };
        match cmd {
            "help" => Ok(HELP.to_string()),
            "tables" => Ok(self.tables()),
            "audit" => self.audit(args.first().copied()),
            "stats" => Ok(self.stats()?),
            "bench" => Ok(self.bench(args)?),
            "fixture" => {
                let out = self.fixture(args)?;
                if self.db.dir().is_some() {
                    self.db.checkpoint().map_err(CommandError::Engine)?;
                }
                Ok(out)
            }
            "set" => Ok(self.set(args)?),
            other => Err(Error::execution(format!("unknown command .{other} (try .help)")).into()),
        }
    }

    fn tables(&self) -> String {
        let mut out = String::new();
        for s in &self.db.catalog().schemas {
            let kind = match s.kind {
                CollectionKind::Relation => "table",
                CollectionKind::DocumentCollection => "collection",
                CollectionKind::VertexTable => "vertex table",
                CollectionKind::EdgeTable => "edge table",
            };
            let cols: Vec<String> = s.columns.iter().map(|c| format!("{} {}", c.name, c.ty)).collect();
            let _ = write!(out, "{kind} {}", s.name);
            if let Some(label) = &s.label {
                let _ = write!(out, " label '{label}'");
            }
            if !cols.is_empty() {
                let _ = write!(out, " ({})", cols.join(", "));
            }
            out.push('\n');
        }
        for g in &self.db.catalog().graphs {
            let _ = writeln!(out, "graph {} edges '{}'", g.name, g.edge_label);
        }
        out.trim_end().to_string()
    }

    fn audit(&self, graph: Option<&str>) -> Result<String, CommandError> {
        let names: Vec<String> = match graph {
            Some(g) => vec![g.to_string()],
            None => self.db.catalog().graphs.iter().map(|g| g.name.clone()).collect(),
        };
        if names.is_empty() {
            return Ok("no graphs".to_string());
        }
        let mut lines = Vec::new();
        let mut failed = false;
        for name in &names {
            let report = self.db.audit(name)?;
            failed |= !report.is_consistent();
            lines.push(report.to_string());
        }
        let text = lines.join("\n");
        if failed {
            Err(CommandError::AuditFailed(text))
        } else {
            Ok(text)
        }
    }

    fn stats(&self) -> Result<String, Error> {
        let mut out = String::new();
        for s in &self.db.catalog().schemas {
            let _ = writeln!(out, "{}: {} records", s.name, self.db.collection(s.oid)?.len());
        }
        let a = self.db.access_stats();
        let _ = writeln!(
            out,
            "access: {} scans, {} rows scanned, {} tid fetches",
            a.scans, a.rows_scanned, a.tid_fetches
        );
        let b = self.buffer.stats();
        let _ = write!(
            out,
            "inter-buffer: {} entries, {} bytes, {} hits, {} misses",
            b.entries, b.bytes, b.hits, b.misses
        );
        Ok(out)
    }

    fn bench(&self, args: &[&str]) -> Result<String, Error> {
        let suite = args.first().copied().unwrap_or("gcdi");
        let base = self.config.query_options();
        if suite == "ranking" {
            let mut out = String::new();
            let mut wins = 0;
            let cases = ranking_cases(self.config.seed);
            for case in &cases {
                let o = rank(case, &base)?;
                wins += usize::from(o.chose_cheapest());
                let cands: Vec<String> = o
                    .candidates
                    .iter()
                    .map(|(shape, cost, fetches)| format!("{shape} est {cost:.0} fetched {fetches}"))
                    .collect();
                let _ = writeln!(out, "{}: chose {}; {}", o.case, o.chosen, cands.join("; "));
            }
            let _ = write!(out, "cheapest plan chosen in {wins}/{} cases", cases.len());
            return Ok(out);
        }
        let scale = match args.get(1) {
            Some(w) => number(w, "scale")?,
            None => 1,
        };
        Ok(bench(suite, scale, self.config.seed, BENCH_RUNS, &base)?.to_string())
    }

    fn fixture(&mut self, args: &[&str]) -> Result<String, Error> {
        match args {
            ["yogurt"] => yogurt(&mut self.db)?,
            ["ecommerce"] => ecommerce(&mut self.db, EcommerceScale::small(), self.config.seed)?,
            ["ecommerce", scale] => {
                let scale: usize = number(scale, "scale")?;
                ecommerce(&mut self.db, crate::bench::gcdi_scale(scale), self.config.seed)?;
            }
            _ => return Err(Error::execution("usage: .fixture yogurt|ecommerce [scale]")),
        }
        Ok(format!("loaded fixture {}", args[0]))
    }

    fn set(&mut self, args: &[&str]) -> Result<String, Error> {
        match args {
            ["opt", v] => self.config.optimizer = on_off(v)?,
            ["rule", name, v] => {
                let rule = Rule::parse(name).ok_or_else(|| Error::execution(format!("unknown rule {name}")))?;
                self.config.rules.retain(|(r, _)| *r != rule);
                self.config.rules.push((rule, on_off(v)?));
            }
            ["format", f] => self.config.format = f.parse().map_err(Error::execution)?,
            ["workers", n] => {
                let n: usize = number(n, "workers")?;
                if n == 0 {
                    return Err(Error::execution("worker count must be at least 1"));
                }
                self.config.workers = n;
            }
            ["seed", n] => self.config.seed = number(n, "seed")?,
            _ => return Err(Error::execution("usage: .set opt|rule|format|workers|seed ...")),
        }
        Ok(String::new())
    }
}

/// Split a script into statements at semicolons outside quotes. Dot
/// commands end at the newline.
pub fn split_statements(script: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    for line in script.lines() {
        if quote.is_none() && current.trim().is_empty() {
            let t = line.trim();
            if t.starts_with('.') {
                out.push(t.to_string());
                current.clear();
                continue;
            }
            if t.starts_with("--") {
                continue;
            }
        }
        for c in line.chars() {
            match quote {
                Some(q) if c == q => quote = None,
                Some(_) => {}
                None if c == '\'' || c == '"' || c == '`' => quote = Some(c),
                None if c == ';' => {
                    let stmt = current.trim().to_string();
                    if !stmt.is_empty() {
                        out.push(stmt);
                    }
                    current.clear();
                    continue;
                }
                None => {}
            }
            current.push(c);
        }
        current.push('\n');
    }
    let rest = current.trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_semicolons_outside_quotes() {
        let parts = split_statements(".tables\nSELECT 'a;b' FROM T;\n-- note\nEXPLAIN SELECT x\nFROM T;\n.audit G");
        assert_eq!(parts, vec![".tables", "SELECT 'a;b' FROM T", "EXPLAIN SELECT x\nFROM T", ".audit G"]);
    }

    #[test]
    fn rule_overrides_apply_after_toggle() {
        let config = SessionConfig {
            optimizer: false,
            rules: vec![(Rule::PredicatePushdown, true)],
            ..SessionConfig::default()
        };
        let opts = config.query_options();
        assert!(opts.enabled(Rule::PredicatePushdown));
        assert!(!opts.enabled(Rule::MatchTrimming));
    }
}
