use gredo_core::analytics::{
    cosine_similarity, logistic_regression, multiply, regression_gradient, rel2matrix, KernelConfig, Matrix,
    RegressionParams,
};
use gredo_core::database::Database;
use gredo_core::fixtures::rng;
use gredo_core::schema::{ColumnDef, ColumnType};
use gredo_core::value::Value;
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| r.gen_range(-3.0..3.0)).collect()).unwrap()
}

fn naive_multiply(x: &Matrix, y: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.rows() * y.cols());
    for i in 0..x.rows() {
        for j in 0..y.cols() {
            let mut acc = 0.0;
            for k in 0..x.cols() {
                acc += x.get(i, k) * y.get(k, j);
            }
            out.push(acc);
        }
    }
    out
}

fn cfg(workers: usize, tile: usize) -> KernelConfig {
    KernelConfig {
        workers,
        tile_rows: tile,
        tile_cols: tile,
    }
}

#[test]
fn multiply_50x70_by_70x30_matches_naive_bit_for_bit() {
    let mut r = rng(7);
    let (x, y) = (random_matrix(&mut r, 50, 70), random_matrix(&mut r, 70, 30));
    let expected = naive_multiply(&x, &y);
    for workers in [1, 2, 8] {
        assert_eq!(multiply(&x, &y, &cfg(workers, 64)).unwrap().data(), expected.as_slice());
        assert_eq!(multiply(&x, &y, &cfg(workers, 7)).unwrap().data(), expected.as_slice());
    }
}

fn scalar_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        d / (na.sqrt() * nb.sqrt())
    }
}

/// Loss of logistic regression computed directly, for finite differences.
fn scalar_loss(x: &Matrix, y: &[f64], w: &[f64], l2: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..x.rows() {
        let z = w[0] + (0..x.cols()).map(|j| w[j + 1] * x.get(i, j)).sum::<f64>();
        let p = 1.0 / (1.0 + (-z).exp());
        total += -(y[i] * p.ln() + (1.0 - y[i]) * (1.0 - p).ln());
    }
    total / x.rows() as f64 + 0.5 * l2 * w[1..].iter().map(|v| v * v).sum::<f64>()
}

fn labels(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| f64::from(u8::from(r.gen_bool(0.5)))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn multiply_matches_naive_across_worker_counts(seed in any::<u64>(), n in 1usize..40, k in 1usize..40, m in 1usize..40, tile in 1usize..20) {
        let mut r = rng(seed);
        let (x, y) = (random_matrix(&mut r, n, k), random_matrix(&mut r, k, m));
        let expected = naive_multiply(&x, &y);
        for workers in [1, 2, 8] {
            prop_assert_eq!(multiply(&x, &y, &cfg(workers, tile)).unwrap().data().to_vec(), expected.clone());
        }
    }

    #[test]
    fn cosine_matches_scalar_oracle(seed in any::<u64>(), n in 1usize..30, m in 1usize..30, d in 1usize..12, tile in 1usize..20) {
        let mut r = rng(seed);
        let (x, y) = (random_matrix(&mut r, n, d), random_matrix(&mut r, m, d));
        let one = cosine_similarity(&x, &y, &cfg(1, tile)).unwrap();
        for workers in [2, 8] {
            prop_assert_eq!(cosine_similarity(&x, &y, &cfg(workers, tile)).unwrap().data().to_vec(), one.data().to_vec());
        }
        for i in 0..n {
            for j in 0..m {
                prop_assert!((one.get(i, j) - scalar_cosine(x.row(i), y.row(j))).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..60, d in 1usize..6, l2 in 0.0f64..0.5) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, d);
        let y = labels(&mut r, n);
        let w: Vec<f64> = (0..=d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (loss, grad) = regression_gradient(&x, &y, &w, l2, &cfg(1, 8)).unwrap();
        prop_assert!((loss - scalar_loss(&x, &y, &w, l2)).abs() < 1e-10);
        let h = 1e-5;
        for j in 0..=d {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (scalar_loss(&x, &y, &up, l2) - scalar_loss(&x, &y, &down, l2)) / (2.0 * h);
            prop_assert!((grad[j] - fd).abs() <= 1e-6 * fd.abs().max(1.0), "component {}: {} vs {}", j, grad[j], fd);
        }
        for workers in [2, 8] {
            prop_assert_eq!(regression_gradient(&x, &y, &w, l2, &cfg(workers, 8)).unwrap(), (loss, grad.clone()));
        }
    }

    #[test]
    fn standardized_loss_never_increases(seed in any::<u64>(), n in 2usize..80, d in 1usize..5, rate in 0.01f64..0.1) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, d);
        // labels from a noisy linear rule
        let y: Vec<f64> = (0..n).map(|i| f64::from(u8::from(x.get(i, 0) + r.gen_range(-1.0..1.0) > 0.0))).collect();
        let params = RegressionParams { learning_rate: rate, standardize: true, ..RegressionParams::default() };
        let fit = logistic_regression(&x, &y, &params, &cfg(4, 16)).unwrap();
        prop_assert!(fit.history.windows(2).all(|w| w[1] <= w[0]), "{:?}", fit.history);
    }

    #[test]
    fn rel2matrix_matches_row_by_row_extraction(seed in any::<u64>(), n in 0usize..50) {
        let mut r = rng(seed);
        let mut db = Database::in_memory();
        db.create_relation("T", vec![
            ColumnDef::new("a", ColumnType::Int),
            ColumnDef::new("b", ColumnType::Float),
            ColumnDef::new("c", ColumnType::Float),
        ]).unwrap();
        let rows: Vec<Vec<Value>> = (0..n)
            .map(|_| vec![Value::Int(r.gen_range(-9..9)), Value::Float(r.gen_range(-1.0..1.0)), Value::Float(r.gen_range(0.0..5.0))])
            .collect();
        db.insert_by_name("T", rows.clone()).unwrap();
        let m = rel2matrix(&db, "T", &["c", "a"]).unwrap();
        let expected: Vec<f64> = rows.iter().flat_map(|row| [row[2].as_f64().unwrap(), row[0].as_f64().unwrap()]).collect();
        prop_assert_eq!((m.rows(), m.cols()), (n, 2));
        prop_assert_eq!(m.data(), expected.as_slice());
    }
}
