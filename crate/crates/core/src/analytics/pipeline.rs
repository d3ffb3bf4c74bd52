//! Ordering analytical operator invocations, inserting matrix generation
//! for query inputs, and running the result with inter-buffer reuse.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::database::Database;
use crate::error::{Error, Result};
use crate::query::ast::{Analyze, AnalyzeOp};
use crate::query::logical::{build_logical_plan, Gcdi};
use crate::query::optimizer::{optimize, QueryOptions};
use crate::query::physical::{execute, QueryResult};
use crate::value::Value;

use super::buffer::{fingerprint, source_collections, versions_of, InterBuffer};
use super::kernels::{cosine_similarity, intercept_only_loss, logistic_regression, multiply, KernelConfig, RegressionModel, RegressionParams};
use super::matrix::{result_matrix, Matrix};

#[derive(Debug, Clone)]
pub enum TaskInput {
    Query(Gcdi),
    /// The matrix produced by another task.
    Task(usize),
}

#[derive(Debug, Clone)]
pub struct AnalysisTask {
    pub op: AnalyzeOp,
    pub inputs: Vec<TaskInput>,
    pub options: Vec<(String, Value)>,
}

impl AnalysisTask {
    fn option(&self, key: &str) -> Option<&Value> {
        self.options.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone)]
pub enum StepKind {
    /// Run a query; the fingerprint covers its canonical plan.
    Materialize { query: Box<Gcdi>, fingerprint: String },
    /// Turn a materialized result into a matrix of the output columns at
    /// these positions.
    Rel2Matrix { columns: Vec<usize>, names: Vec<String>, fingerprint: String },
    Operator { op: AnalyzeOp, task: usize },
}

#[derive(Debug, Clone)]
pub struct PipelineStep {
    pub kind: StepKind,
    /// Indices of earlier steps this one reads.
    pub inputs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PipelinePlan {
    pub steps: Vec<PipelineStep>,
    pub tasks: Vec<AnalysisTask>,
    /// Step producing each task's result.
    pub outputs: Vec<usize>,
}

impl fmt::Display for PipelinePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            let name = match &s.kind {
                StepKind::Materialize { fingerprint, .. } => format!("materialize {}", &fingerprint[..12]),
                StepKind::Rel2Matrix { names, .. } => format!("rel2matrix [{}]", names.join(", ")),
                StepKind::Operator { op, .. } => op.to_string().to_lowercase(),
            };
            let inputs: Vec<String> = s.inputs.iter().map(|i| format!("#{i}")).collect();
            writeln!(f, "#{i} {name} <- [{}]", inputs.join(", "))?;
        }
        Ok(())
    }
}

impl PipelinePlan {
    /// Step names in order, e.g. `["materialize", "rel2matrix", "regression"]`.
    pub fn step_names(&self) -> Vec<&'static str> {
        self.steps
            .iter()
            .map(|s| match s.kind {
                StepKind::Materialize { .. } => "materialize",
                StepKind::Rel2Matrix { .. } => "rel2matrix",
                StepKind::Operator { op: AnalyzeOp::Multiply, .. } => "multiply",
                StepKind::Operator { op: AnalyzeOp::Similarity, .. } => "similarity",
                StepKind::Operator { op: AnalyzeOp::Regression, .. } => "regression",
            })
            .collect()
    }
}

/// Output column named `key`, or the only one ending in `.key`.
fn output_column(names: &[String], key: &str) -> Result<String> {
    if names.iter().any(|n| n == key) {
        return Ok(key.to_string());
    }
    let suffix = format!(".{key}");
    let hits: Vec<&String> = names.iter().filter(|n| n.ends_with(&suffix)).collect();
    match hits.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(Error::schema(format!("no output column {key} among {}", names.join(", ")))),
        _ => Err(Error::schema(format!("ambiguous output column {key}"))),
    }
}

fn text_option(v: &Value) -> Result<String> {
    match v {
        Value::Text(s) => Ok(s.clone()),
        other => Err(Error::schema(format!("expected a column name, found {}", other.type_name()))),
    }
}

/// Matrix columns for a query input: the `columns` option (comma
/// separated) or every output column, with the regression label last.
/// Returned as output positions and names.
fn input_columns(task: &AnalysisTask, query: &Gcdi) -> Result<(Vec<usize>, Vec<String>)> {
    let names: Vec<String> = query.output.iter().map(|o| o.name.clone()).collect();
    let label = match (task.op, task.option("label")) {
        (AnalyzeOp::Regression, Some(v)) => Some(output_column(&names, &text_option(v)?)?),
        (AnalyzeOp::Regression, None) => return Err(Error::schema("REGRESSION needs WITH (label = <column>)")),
        _ => None,
    };
    let mut cols = match task.option("columns") {
        Some(v) => text_option(v)?
            .split(',')
            .map(|c| output_column(&names, c.trim()))
            .collect::<Result<Vec<_>>>()?,
        None => names.iter().filter(|n| Some(*n) != label.as_ref()).cloned().collect(),
    };
    cols.extend(label);
    let idx = cols.iter().map(|c| names.iter().position(|n| n == c).unwrap()).collect();
    Ok((idx, cols))
}

/// Order tasks by their dependencies and expand each query input into a
/// materialization and a matrix-generation step, shared between tasks.
pub fn plan_pipeline(db: &Database, tasks: Vec<AnalysisTask>) -> Result<PipelinePlan> {
    let n = tasks.len();
    let mut indegree = vec![0usize; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, t) in tasks.iter().enumerate() {
        if t.inputs.len() != t.op.arity() {
            return Err(Error::schema(format!("{} takes {} input(s), got {}", t.op, t.op.arity(), t.inputs.len())));
        }
        for input in &t.inputs {
            if let TaskInput::Task(j) = *input {
                if j >= n {
                    return Err(Error::schema(format!("task {i} reads unbound input {j}")));
                }
                indegree[i] += 1;
                users[j].push(i);
            }
        }
    }
    let mut ready: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_front() {
        order.push(i);
        for &u in &users[i] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                ready.push_back(u);
            }
        }
    }
    if order.len() < n {
        return Err(Error::schema("analysis tasks form a dependency cycle"));
    }
    let mut steps: Vec<PipelineStep> = Vec::new();
    let mut materialized: BTreeMap<String, usize> = BTreeMap::new();
    let mut matrices: BTreeMap<String, usize> = BTreeMap::new();
    let mut outputs = vec![usize::MAX; n];
    for &i in &order {
        let t = &tasks[i];
        let mut inputs = Vec::new();
        for input in &t.inputs {
            let step = match input {
                TaskInput::Task(j) => outputs[*j],
                TaskInput::Query(q) => {
                    let qfp = fingerprint(db, q, "")?;
                    let m = match materialized.get(&qfp) {
                        Some(&s) => s,
                        None => {
                            steps.push(PipelineStep {
                                kind: StepKind::Materialize {
                                    query: Box::new(q.clone()),
                                    fingerprint: qfp.clone(),
                                },
                                inputs: vec![],
                            });
                            materialized.insert(qfp, steps.len() - 1);
                            steps.len() - 1
                        }
                    };
                    let (columns, names) = input_columns(t, q)?;
                    let key: Vec<String> = columns.iter().map(usize::to_string).collect();
                    let mfp = fingerprint(db, q, &key.join(","))?;
                    match matrices.get(&mfp) {
                        Some(&s) => s,
                        None => {
                            steps.push(PipelineStep {
                                kind: StepKind::Rel2Matrix {
                                    columns,
                                    names,
                                    fingerprint: mfp.clone(),
                                },
                                inputs: vec![m],
                            });
                            matrices.insert(mfp, steps.len() - 1);
                            steps.len() - 1
                        }
                    }
                }
            };
            inputs.push(step);
        }
        steps.push(PipelineStep {
            kind: StepKind::Operator { op: t.op, task: i },
            inputs,
        });
        outputs[i] = steps.len() - 1;
    }
    Ok(PipelinePlan { steps, tasks, outputs })
}

fn regression_params(task: &AnalysisTask) -> Result<RegressionParams> {
    let mut p = RegressionParams::default();
    let num = |k: &str| -> Result<Option<f64>> {
        match task.option(k) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::schema(format!("option {k} must be numeric"))),
        }
    };
    if let Some(v) = num("rate")? {
        p.learning_rate = v;
    }
    if let Some(v) = num("iterations")? {
        p.max_iterations = v as usize;
    }
    if let Some(v) = num("tolerance")? {
        p.tolerance = v;
    }
    if let Some(v) = num("l2")? {
        p.l2 = v;
    }
    if let Some(v) = task.option("standardize") {
        p.standardize = match v {
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::Text(s) => matches!(s.to_ascii_lowercase().as_str(), "true" | "on" | "yes"),
            _ => return Err(Error::schema("option standardize must be a boolean")),
        };
    }
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone)]
pub struct RegressionOutput {
    pub features: Vec<String>,
    pub model: RegressionModel,
    /// Loss of the best constant predictor on the same labels.
    pub baseline_loss: f64,
}

#[derive(Debug, Clone)]
pub enum AnalysisOutput {
    Matrix(Arc<Matrix>),
    Regression(RegressionOutput),
}

impl AnalysisOutput {
    /// The result as a matrix; a regression gives one row of weights.
    pub fn to_matrix(&self) -> Result<Arc<Matrix>> {
        match self {
            AnalysisOutput::Matrix(m) => Ok(m.clone()),
            AnalysisOutput::Regression(r) => {
                let labels = std::iter::once("intercept".to_string()).chain(r.features.iter().cloned()).collect();
                Ok(Arc::new(Matrix::new(1, r.model.weights.len(), r.model.weights.clone())?.with_col_labels(labels)))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineReport {
    pub queries_run: usize,
    pub buffer_hits: usize,
}

/// Execute the plan in step order. A matrix step whose fingerprint hits
/// the buffer skips its query.
pub fn run_pipeline(
    db: &Database,
    plan: &PipelinePlan,
    query_opts: &QueryOptions,
    kernels: &KernelConfig,
    buffer: &InterBuffer,
) -> Result<(Vec<AnalysisOutput>, PipelineReport)> {
    let mut report = PipelineReport::default();
    let mut results: Vec<Option<Arc<QueryResult>>> = vec![None; plan.steps.len()];
    let mut outputs: Vec<Option<AnalysisOutput>> = vec![None; plan.steps.len()];
    for (i, step) in plan.steps.iter().enumerate() {
        match &step.kind {
            StepKind::Materialize { .. } => {}
            StepKind::Rel2Matrix { columns, fingerprint, .. } => {
                let source = step.inputs[0];
                if let Some(m) = buffer.lookup(db, fingerprint) {
                    report.buffer_hits += 1;
                    outputs[i] = Some(AnalysisOutput::Matrix(m));
                    continue;
                }
                let StepKind::Materialize { query, .. } = &plan.steps[source].kind else {
                    return Err(Error::Contract("matrix generation must read a materialization".into()));
                };
                let versions = versions_of(db, &source_collections(db, query)?)?;
                if results[source].is_none() {
                    let optimized = optimize(db, (**query).clone(), query_opts)?;
                    results[source] = Some(Arc::new(execute(db, &optimized.physical)?));
                    report.queries_run += 1;
                }
                let result = results[source].as_ref().unwrap();
                let names: Vec<&str> = columns.iter().map(|&c| result.columns[c].as_str()).collect();
                let m = Arc::new(result_matrix(result, &names)?);
                buffer.put(fingerprint.clone(), m.clone(), versions);
                outputs[i] = Some(AnalysisOutput::Matrix(m));
            }
            StepKind::Operator { op, task } => {
                let ins = step
                    .inputs
                    .iter()
                    .map(|&s| outputs[s].as_ref().expect("inputs precede their users").to_matrix())
                    .collect::<Result<Vec<_>>>()?;
                let out = match op {
                    AnalyzeOp::Multiply => AnalysisOutput::Matrix(Arc::new(multiply(&ins[0], &ins[1], kernels)?)),
                    AnalyzeOp::Similarity => {
                        AnalysisOutput::Matrix(Arc::new(cosine_similarity(&ins[0], &ins[1], kernels)?))
                    }
                    AnalyzeOp::Regression => {
                        let m = &ins[0];
                        if m.cols() < 1 {
                            return Err(Error::schema("REGRESSION input has no label column"));
                        }
                        let d = m.cols() - 1;
                        let x = m.select_columns(&(0..d).collect::<Vec<_>>());
                        let y = m.column(d);
                        let params = regression_params(&plan.tasks[*task])?;
                        let model = logistic_regression(&x, &y, &params, kernels)?;
                        AnalysisOutput::Regression(RegressionOutput {
                            features: x.col_labels.clone().unwrap_or_default(),
                            baseline_loss: intercept_only_loss(&y),
                            model,
                        })
                    }
                };
                outputs[i] = Some(out);
            }
        }
    }
    let outs = plan
        .outputs
        .iter()
        .map(|&s| outputs[s].clone().expect("every task produced output"))
        .collect();
    Ok((outs, report))
}

/// Plan and run one ANALYZE statement.
pub fn run_analyze(
    db: &Database,
    stmt: &Analyze,
    query_opts: &QueryOptions,
    kernels: &KernelConfig,
    buffer: &InterBuffer,
) -> Result<(AnalysisOutput, PipelinePlan, PipelineReport)> {
    let inputs = stmt
        .inputs
        .iter()
        .map(|q| build_logical_plan(q, db).map(TaskInput::Query))
        .collect::<Result<Vec<_>>>()?;
    let task = AnalysisTask {
        op: stmt.op,
        inputs,
        options: stmt.options.clone(),
    };
    let plan = plan_pipeline(db, vec![task])?;
    let (mut outs, report) = run_pipeline(db, &plan, query_opts, kernels, buffer)?;
    Ok((outs.remove(0), plan, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::yogurt;
    use crate::query::{parse, parse_query, Statement};

    fn db() -> Database {
        let mut db = Database::in_memory();
        yogurt(&mut db).unwrap();
        db
    }

    fn query(db: &Database, text: &str) -> TaskInput {
        TaskInput::Query(build_logical_plan(&parse_query(text).unwrap(), db).unwrap())
    }

    fn regression(db: &Database) -> AnalysisTask {
        AnalysisTask {
            op: AnalyzeOp::Regression,
            inputs: vec![query(db, "SELECT C.age, C.loyal FROM Customers C")],
            options: vec![("label".into(), Value::from("loyal"))],
        }
    }

    #[test]
    fn single_regression_plan() {
        let db = db();
        let plan = plan_pipeline(&db, vec![regression(&db)]).unwrap();
        assert_eq!(plan.step_names(), ["materialize", "rel2matrix", "regression"]);
    }

    #[test]
    fn shared_source_materializes_once() {
        let db = db();
        let q = "SELECT C.age, C.loyal FROM Customers C";
        let sim = AnalysisTask {
            op: AnalyzeOp::Similarity,
            inputs: vec![query(&db, q), query(&db, "SELECT  X.age, X.loyal FROM Customers X")],
            options: vec![],
        };
        let plan = plan_pipeline(&db, vec![regression(&db), sim]).unwrap();
        let names = plan.step_names();
        assert_eq!(names.iter().filter(|n| **n == "materialize").count(), 1);
        let (outs, report) =
            run_pipeline(&db, &plan, &QueryOptions::default(), &KernelConfig::default(), &InterBuffer::default()).unwrap();
        assert_eq!(report.queries_run, 1);
        assert_eq!(outs.len(), 2);
    }

    #[test]
    fn cycles_and_unbound_inputs_are_rejected() {
        let db = db();
        let t = |a: usize, b: usize| AnalysisTask {
            op: AnalyzeOp::Multiply,
            inputs: vec![TaskInput::Task(a), TaskInput::Task(b)],
            options: vec![],
        };
        assert!(plan_pipeline(&db, vec![t(1, 1), t(0, 0)]).is_err());
        assert!(plan_pipeline(&db, vec![t(5, 5)]).is_err());
    }

    #[test]
    fn chained_tasks_run_in_dependency_order() {
        let db = db();
        let gram = AnalysisTask {
            op: AnalyzeOp::Multiply,
            inputs: vec![TaskInput::Task(1), query(&db, "SELECT P.price FROM Products P WHERE P.id = 1")],
            options: vec![],
        };
        let sim = AnalysisTask {
            op: AnalyzeOp::Similarity,
            inputs: vec![query(&db, "SELECT P.price FROM Products P"), query(&db, "SELECT P.price FROM Products P WHERE P.id = 1")],
            options: vec![],
        };
        let plan = plan_pipeline(&db, vec![gram, sim]).unwrap();
        assert!(plan.outputs[1] < plan.outputs[0]);
        let (outs, _) =
            run_pipeline(&db, &plan, &QueryOptions::default(), &KernelConfig::default(), &InterBuffer::default()).unwrap();
        let m = outs[0].to_matrix().unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 1));
        assert!(m.data().iter().all(|v| (v - 1.2).abs() < 1e-12));
    }

    #[test]
    fn repeated_analyze_hits_buffer_until_source_changes() {
        let mut db = db();
        let Statement::Analyze(a) = parse(
            "ANALYZE REGRESSION USING (SELECT C.age, C.loyal FROM Customers C) WITH (label = 'loyal', standardize = true)",
        )
        .unwrap() else {
            panic!()
        };
        let buf = InterBuffer::default();
        let (opts, k) = (QueryOptions::default(), KernelConfig::default());
        let (first, _, r1) = run_analyze(&db, &a, &opts, &k, &buf).unwrap();
        let (second, _, r2) = run_analyze(&db, &a, &opts, &k, &buf).unwrap();
        assert_eq!((r1.queries_run, r1.buffer_hits), (1, 0));
        assert_eq!((r2.queries_run, r2.buffer_hits), (0, 1));
        assert_eq!(first.to_matrix().unwrap(), second.to_matrix().unwrap());
        db.insert_by_name("Customers", vec![vec![9.into(), "Ivy".into(), Value::Float(3.5), 1.into()]]).unwrap();
        let (_, _, r3) = run_analyze(&db, &a, &opts, &k, &buf).unwrap();
        assert_eq!((r3.queries_run, r3.buffer_hits), (1, 0));
    }

    #[test]
    fn regression_needs_label() {
        let db = db();
        let mut t = regression(&db);
        t.options.clear();
        assert!(plan_pipeline(&db, vec![t]).is_err());
    }
}
