//! Tile-parallel matrix kernels. Each output entry is accumulated in a
//! fixed order, so results do not depend on the worker count.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};

use super::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelConfig {
    pub workers: usize,
    pub tile_rows: usize,
    pub tile_cols: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            tile_rows: 64,
            tile_cols: 64,
        }
    }
}

impl KernelConfig {
    pub fn with_workers(workers: usize) -> Self {
        KernelConfig {
            workers,
            ..KernelConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 || self.tile_rows == 0 || self.tile_cols == 0 {
            return Err(Error::Contract("workers and tile sizes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    pub block_row: usize,
    pub block_col: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

/// Partition a `rows`x`cols` grid into tiles of at most `tr`x`tc`.
pub fn tiles(rows: usize, cols: usize, tr: usize, tc: usize) -> Vec<Tile> {
    let mut out = Vec::new();
    for (bi, r0) in (0..rows).step_by(tr.max(1)).enumerate() {
        for (bj, c0) in (0..cols).step_by(tc.max(1)).enumerate() {
            out.push(Tile {
                block_row: bi,
                block_col: bj,
                rows: r0..(r0 + tr).min(rows),
                cols: c0..(c0 + tc).min(cols),
            });
        }
    }
    out
}

/// Run `work` over every task index on up to `workers` threads, tasks
/// handed out dynamically. Results come back in task order.
fn run_parallel<T: Send>(tasks: usize, workers: usize, work: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = workers.min(tasks).max(1);
    if workers == 1 {
        return (0..tasks).map(work).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..tasks).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks {
                    break;
                }
                let out = work(i);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|t| t.expect("every task ran")).collect()
}

/// Fill an `rows`x`cols` output tile by tile; `entry` writes one tile's
/// entries row-major into the given buffer.
fn tiled(rows: usize, cols: usize, cfg: &KernelConfig, entry: impl Fn(&Tile, &mut Vec<f64>) + Sync) -> Vec<f64> {
    let ts = tiles(rows, cols, cfg.tile_rows, cfg.tile_cols);
    let blocks = run_parallel(ts.len(), cfg.workers, |i| {
        let mut buf = Vec::with_capacity(ts[i].rows.len() * ts[i].cols.len());
        entry(&ts[i], &mut buf);
        buf
    });
    let mut out = vec![0.0; rows * cols];
    for (t, buf) in ts.iter().zip(blocks) {
        let w = t.cols.len();
        for (bi, i) in t.rows.clone().enumerate() {
            out[i * cols + t.cols.start..i * cols + t.cols.end].copy_from_slice(&buf[bi * w..(bi + 1) * w]);
        }
    }
    out
}

/// `x * y`; every entry sums its products with k ascending.
pub fn multiply(x: &Matrix, y: &Matrix, cfg: &KernelConfig) -> Result<Matrix> {
    cfg.validate()?;
    if x.cols() != y.rows() {
        return Err(Error::execution(format!(
            "cannot multiply {}x{} by {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let (n, m) = (y.rows(), y.cols());
    let yd = y.data();
    let data = tiled(x.rows(), m, cfg, |t, buf| {
        let w = t.cols.len();
        for i in t.rows.clone() {
            let start = buf.len();
            buf.resize(start + w, 0.0);
            let acc = &mut buf[start..];
            let xi = x.row(i);
            for (k, &xik) in xi.iter().enumerate().take(n) {
                let yk = &yd[k * m + t.cols.start..k * m + t.cols.end];
                for (a, &ykj) in acc.iter_mut().zip(yk) {
                    *a += xik * ykj;
                }
            }
        }
    });
    let mut z = Matrix::new(x.rows(), m, data)?;
    z.row_labels = x.row_labels.clone();
    z.col_labels = y.col_labels.clone();
    Ok(z)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |s, (x, y)| s + x * y)
}

/// Pairwise cosine similarity of the rows of `x` and `y`; a zero-norm row
/// has similarity 0 with everything.
pub fn cosine_similarity(x: &Matrix, y: &Matrix, cfg: &KernelConfig) -> Result<Matrix> {
    cfg.validate()?;
    if x.cols() != y.cols() {
        return Err(Error::execution(format!(
            "row widths differ: {} and {}",
            x.cols(),
            y.cols()
        )));
    }
    let norms = |m: &Matrix| (0..m.rows()).map(|i| dot(m.row(i), m.row(i)).sqrt()).collect::<Vec<_>>();
    let (nx, ny) = (norms(x), norms(y));
    let data = tiled(x.rows(), y.rows(), cfg, |t, buf| {
        for i in t.rows.clone() {
            for j in t.cols.clone() {
                let d = nx[i] * ny[j];
                buf.push(if d > 0.0 { dot(x.row(i), y.row(j)) / d } else { 0.0 });
            }
        }
    });
    let mut s = Matrix::new(x.rows(), y.rows(), data)?;
    s.row_labels = x.row_labels.clone();
    s.col_labels = y.row_labels.clone();
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionParams {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
    pub l2: f64,
    /// Scale features to zero mean and unit variance first.
    pub standardize: bool,
}

impl Default for RegressionParams {
    fn default() -> Self {
        RegressionParams {
            learning_rate: 0.1,
            max_iterations: 100,
            tolerance: 1e-6,
            l2: 0.0,
            standardize: false,
        }
    }
}

impl RegressionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.max_iterations == 0 || !(self.tolerance >= 0.0) || !(self.l2 >= 0.0) {
            return Err(Error::Contract(format!(
                "regression needs rate > 0, iterations >= 1, tolerance >= 0, l2 >= 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    /// Intercept first, then one weight per feature column.
    pub weights: Vec<f64>,
    pub loss: f64,
    /// Loss before each update, then the final loss.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean log-loss (plus `l2/2 * |w|^2` over feature weights) and its
/// gradient at `w`. Row blocks are summed in block order.
pub fn regression_gradient(x: &Matrix, y: &[f64], w: &[f64], l2: f64, cfg: &KernelConfig) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    let d = x.cols();
    if w.len() != d + 1 || y.len() != x.rows() {
        return Err(Error::Contract(format!(
            "gradient needs {} weights and {} labels, got {} and {}",
            d + 1,
            x.rows(),
            w.len(),
            y.len()
        )));
    }
    let blocks: Vec<Range<usize>> = (0..x.rows())
        .step_by(cfg.tile_rows)
        .map(|s| s..(s + cfg.tile_rows).min(x.rows()))
        .collect();
    let partial = run_parallel(blocks.len(), cfg.workers, |b| {
        let mut loss = 0.0;
        let mut grad = vec![0.0; d + 1];
        for i in blocks[b].clone() {
            let xi = x.row(i);
            let z = w[0] + dot(&w[1..], xi);
            loss += softplus(z) - y[i] * z;
            let r = sigmoid(z) - y[i];
            grad[0] += r;
            for (g, &v) in grad[1..].iter_mut().zip(xi) {
                *g += r * v;
            }
        }
        (loss, grad)
    });
    let n = x.rows() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (l, g) in partial {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    if l2 > 0.0 {
        loss += 0.5 * l2 * w[1..].iter().map(|v| v * v).sum::<f64>();
        for (g, v) in grad[1..].iter_mut().zip(&w[1..]) {
            *g += l2 * v;
        }
    }
    Ok((loss, grad))
}

/// Log-loss of the best constant predictor, `logit(mean(y))`.
pub fn intercept_only_loss(y: &[f64]) -> f64 {
    let p = y.iter().sum::<f64>() / y.len() as f64;
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }
}

/// Batch gradient descent on the mean log-loss with a sigmoid link.
pub fn logistic_regression(x: &Matrix, y: &[f64], params: &RegressionParams, cfg: &KernelConfig) -> Result<RegressionModel> {
    params.validate()?;
    if x.rows() == 0 {
        return Err(Error::execution("regression over an empty matrix"));
    }
    if let Some(v) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::execution(format!("regression labels must be 0 or 1, found {v}")));
    }
    let standardized;
    let x = if params.standardize {
        standardized = x.standardized();
        &standardized
    } else {
        x
    };
    let mut w = vec![0.0; x.cols() + 1];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut loss;
    loop {
        let (l, g) = regression_gradient(x, y, &w, params.l2, cfg)?;
        loss = l;
        history.push(l);
        if dot(&g, &g).sqrt() < params.tolerance {
            converged = true;
            break;
        }
        if iterations == params.max_iterations {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= params.learning_rate * gi;
        }
        iterations += 1;
    }
    Ok(RegressionModel {
        weights: w,
        loss,
        history,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn tiles_partition_exactly() {
        for (r, c, tr, tc) in [(0, 5, 2, 2), (7, 5, 3, 2), (64, 64, 64, 64), (65, 1, 64, 64)] {
            let mut seen = vec![0u8; r * c];
            for t in tiles(r, c, tr, tc) {
                for i in t.rows.clone() {
                    for j in t.cols.clone() {
                        seen[i * c + j] += 1;
                    }
                }
            }
            assert!(seen.iter().all(|&s| s == 1), "{r}x{c} by {tr}x{tc}");
        }
    }

    #[test]
    fn multiply_small_cases() {
        let cfg = KernelConfig::with_workers(2);
        let x = m(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(multiply(&x, &m(&[vec![5.0], vec![6.0]]), &cfg).unwrap().data(), &[17.0, 39.0]);
        assert_eq!(multiply(&x, &Matrix::identity(2), &cfg).unwrap().data(), x.data());
        assert!(multiply(&x, &Matrix::identity(3), &cfg).is_err());
    }

    #[test]
    fn cosine_small_cases() {
        let cfg = KernelConfig::default();
        let s = cosine_similarity(&m(&[vec![1.0, 0.0], vec![0.6, 0.8]]), &m(&[vec![0.0, 1.0], vec![0.6, 0.8]]), &cfg).unwrap();
        assert_eq!(s.get(0, 0), 0.0);
        assert!((s.get(1, 1) - 1.0).abs() < 1e-12);
        let z = cosine_similarity(&m(&[vec![0.0, 0.0]]), &m(&[vec![1.0, 1.0]]), &cfg).unwrap();
        assert_eq!(z.get(0, 0), 0.0);
        assert!(cosine_similarity(&Matrix::identity(2), &Matrix::identity(3), &cfg).is_err());
    }

    #[test]
    fn symmetric_data_gives_intercept_only_fit() {
        // each x value appears once with each label, so y carries no signal
        let x = m(&[vec![-1.0], vec![-1.0], vec![1.0], vec![1.0], vec![2.0], vec![2.0], vec![2.0], vec![2.0]]);
        let y = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let params = RegressionParams { max_iterations: 5000, learning_rate: 0.1, ..RegressionParams::default() };
        let fit = logistic_regression(&x, &y, &params, &KernelConfig::default()).unwrap();
        assert!(fit.weights[1].abs() < 1e-3, "{:?}", fit.weights);
        assert!(fit.weights[0].abs() < 1e-3, "{:?}", fit.weights);
        assert!((fit.loss - intercept_only_loss(&y)).abs() < 1e-6);
    }

    #[test]
    fn separable_loss_strictly_decreases() {
        let x = m(&[vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let fit = logistic_regression(&x, &y, &RegressionParams { learning_rate: 0.05, ..RegressionParams::default() }, &KernelConfig::default()).unwrap();
        assert!(fit.history.windows(2).all(|w| w[1] < w[0]));
        assert!(fit.loss < intercept_only_loss(&y));
    }

    #[test]
    fn regression_rejects_bad_input() {
        let cfg = KernelConfig::default();
        let p = RegressionParams::default();
        assert!(logistic_regression(&Matrix::zeros(0, 2), &[], &p, &cfg).is_err());
        assert!(logistic_regression(&Matrix::zeros(1, 1), &[2.0], &p, &cfg).is_err());
        let bad = RegressionParams { learning_rate: 0.0, ..p };
        assert!(logistic_regression(&Matrix::zeros(1, 1), &[1.0], &bad, &cfg).is_err());
    }
}
