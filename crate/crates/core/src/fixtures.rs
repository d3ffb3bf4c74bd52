//! Seeded data generators shared by tests and the bench command.
//!
//! All generators are deterministic for a given seed (ChaCha8).

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::database::Database;
use crate::error::Result;
use crate::schema::{ColumnDef, ColumnType};
use crate::value::Value;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of a random property graph.
#[derive(Debug, Clone, Copy)]
pub struct GraphShape {
    /// Vertices per vertex table.
    pub vertices: usize,
    pub edges: usize,
    /// 1 or 2 vertex tables (labels `A`, `B`).
    pub vertex_tables: usize,
    /// Distinct values of the integer attribute `x`.
    pub value_range: i64,
}

/// Tables `<name>_A` (and `<name>_B`) with columns `x Int, tag Text,
/// score Float`, edge table `<name>_E` (label `link`, column `w Int`), and
/// graph `<name>`. Self-loops occur; parallel edges do not.
pub fn random_graph(db: &mut Database, name: &str, shape: GraphShape, seed: u64) -> Result<()> {
    let mut r = rng(seed);
    let props = || {
        vec![
            ColumnDef::new("x", ColumnType::Int),
            ColumnDef::new("tag", ColumnType::Text),
            ColumnDef::new("score", ColumnType::Float),
        ]
    };
    let labels = ["A", "B"];
    let mut tables = Vec::new();
    for label in labels.iter().take(shape.vertex_tables.clamp(1, 2)) {
        let t = format!("{name}_{label}");
        db.create_vertex_table(&t, label, props())?;
        tables.push(t);
    }
    let edge_table = format!("{name}_E");
    db.create_edge_table(&edge_table, "link", vec![ColumnDef::new("w", ColumnType::Int)])?;
    let refs: Vec<&str> = tables.iter().map(String::as_str).collect();
    db.create_graph(name, &refs, &edge_table)?;

    let tags = ["red", "green", "blue"];
    let mut endpoints = Vec::new();
    for t in &tables {
        let oid = db.oid_of(t)?.0 as i64;
        let rows: Vec<Vec<Value>> = (0..shape.vertices)
            .map(|vid| {
                endpoints.push((oid, vid as i64));
                vec![
                    Value::Int(vid as i64),
                    if r.gen_bool(0.05) { Value::Null } else { Value::Int(r.gen_range(0..shape.value_range.max(1))) },
                    Value::from(*tags.choose(&mut r).unwrap()),
                    Value::Float((r.gen::<f64>() * 100.0).round() / 10.0),
                ]
            })
            .collect();
        db.insert_by_name(t, rows)?;
    }
    let max_edges = endpoints.len() * endpoints.len();
    let target = shape.edges.min(max_edges);
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(target);
    while rows.len() < target {
        let s = *endpoints.choose(&mut r).unwrap();
        let t = *endpoints.choose(&mut r).unwrap();
        if seen.insert((s, t)) {
            rows.push(vec![
                Value::Int(s.0),
                Value::Int(s.1),
                Value::Int(t.0),
                Value::Int(t.1),
                Value::Int(r.gen_range(0..10)),
            ]);
        }
    }
    db.insert_by_name(&edge_table, rows)?;
    Ok(())
}

/// Query over the e-commerce fixtures that selects customers who bought
/// yogurt together with the tags they are interested in.
pub const YOGURT_QUERY: &str = "SELECT C.id, t.id \
FROM Customers C, Products P, Orders O, Interested_in \
MATCH (p:Persons)-[e:Interested in]->(t:Tags) \
WHERE C.id = p.id AND P.id = O->>'product_id' AND O->>'customer_id' = C.id AND P.title = 'Yogurt'";

fn ecommerce_schema(db: &mut Database) -> Result<()> {
    db.create_relation(
        "Customers",
        vec![
            ColumnDef::new("id", ColumnType::Int),
            ColumnDef::new("name", ColumnType::Text),
            ColumnDef::new("age", ColumnType::Float),
            ColumnDef::new("loyal", ColumnType::Int),
        ],
    )?;
    db.create_relation(
        "Products",
        vec![
            ColumnDef::new("id", ColumnType::Int),
            ColumnDef::new("title", ColumnType::Text),
            ColumnDef::new("price", ColumnType::Float),
        ],
    )?;
    db.create_documents("Orders")?;
    db.create_vertex_table(
        "Persons",
        "Persons",
        vec![ColumnDef::new("id", ColumnType::Int), ColumnDef::new("name", ColumnType::Text)],
    )?;
    db.create_vertex_table(
        "Tags",
        "Tags",
        vec![ColumnDef::new("id", ColumnType::Int), ColumnDef::new("name", ColumnType::Text)],
    )?;
    db.create_edge_table("Interests", "Interested in", vec![ColumnDef::new("weight", ColumnType::Int)])?;
    db.create_graph("Interested_in", &["Persons", "Tags"], "Interests")
}

fn order(customer: i64, product: i64) -> Vec<Value> {
    vec![Value::from_json(&serde_json::json!({"customer_id": customer, "product_id": product}))]
}

/// The worked e-commerce example: 4 customers, 3 products (one titled
/// "Yogurt"), 5 orders and a 6-vertex interest graph. Customers 1 and 2
/// bought yogurt; [`YOGURT_QUERY`] returns (1,10), (1,20), (2,20).
pub fn yogurt(db: &mut Database) -> Result<()> {
    ecommerce_schema(db)?;
    let customer = |id: i64, name: &str, age: f64, loyal: i64| {
        vec![Value::Int(id), Value::from(name), Value::Float(age), Value::Int(loyal)]
    };
    db.insert_by_name(
        "Customers",
        vec![
            customer(1, "Ann", 2.5, 1),
            customer(2, "Bob", 4.5, 0),
            customer(3, "Cai", 3.0, 1),
            customer(4, "Dee", 5.0, 0),
        ],
    )?;
    let product = |id: i64, title: &str, price: f64| vec![Value::Int(id), Value::from(title), Value::Float(price)];
    db.insert_by_name(
        "Products",
        vec![product(1, "Milk", 1.2), product(2, "Yogurt", 0.9), product(3, "Bread", 2.1)],
    )?;
    db.insert_by_name("Orders", vec![order(1, 2), order(2, 2), order(3, 1), order(4, 3), order(1, 3)])?;
    let named = |vid: i64, id: i64, name: &str| vec![Value::Int(vid), Value::Int(id), Value::from(name)];
    db.insert_by_name(
        "Persons",
        vec![named(1, 1, "Ann"), named(2, 2, "Bob"), named(3, 3, "Cai"), named(4, 4, "Dee")],
    )?;
    db.insert_by_name("Tags", vec![named(1, 10, "dairy"), named(2, 20, "organic")])?;
    let (p, t) = (db.oid_of("Persons")?.0 as i64, db.oid_of("Tags")?.0 as i64);
    let interest = |s: i64, d: i64, w: i64| vec![Value::Int(p), Value::Int(s), Value::Int(t), Value::Int(d), Value::Int(w)];
    db.insert_by_name("Interests", vec![interest(1, 1, 3), interest(1, 2, 1), interest(2, 2, 2), interest(3, 1, 5)])?;
    Ok(())
}

/// Scale of a generated e-commerce fixture.
#[derive(Debug, Clone, Copy)]
pub struct EcommerceScale {
    pub customers: usize,
    pub products: usize,
    pub orders: usize,
    pub tags: usize,
    pub interests: usize,
}

impl EcommerceScale {
    pub fn small() -> Self {
        EcommerceScale {
            customers: 30,
            products: 8,
            orders: 60,
            tags: 6,
            interests: 70,
        }
    }
}

pub const PRODUCT_TITLES: [&str; 8] = ["Yogurt", "Milk", "Bread", "Cheese", "Apples", "Coffee", "Rice", "Honey"];
pub const TAG_NAMES: [&str; 6] = ["dairy", "organic", "bakery", "fruit", "drinks", "pantry"];

/// The e-commerce schema populated at `scale`. Customer `i` and person
/// vertex `i` share id `i`; tag `j` has id `10 * (j + 1)`.
pub fn ecommerce(db: &mut Database, scale: EcommerceScale, seed: u64) -> Result<()> {
    let mut r = rng(seed);
    ecommerce_schema(db)?;
    let names = ["Ann", "Bob", "Cai", "Dee", "Eve", "Fay", "Gus", "Hal"];
    let customers = (1..=scale.customers as i64)
        .map(|id| {
            vec![
                Value::Int(id),
                Value::from(*names.choose(&mut r).unwrap()),
                Value::Float(r.gen_range(18..80) as f64 / 10.0),
                Value::Int(r.gen_range(0..2)),
            ]
        })
        .collect();
    db.insert_by_name("Customers", customers)?;
    let products = (1..=scale.products as i64)
        .map(|id| {
            let title = PRODUCT_TITLES[(id as usize - 1) % PRODUCT_TITLES.len()];
            vec![Value::Int(id), Value::from(title), Value::Float(r.gen_range(5..500) as f64 / 100.0)]
        })
        .collect();
    db.insert_by_name("Products", products)?;
    let orders = (0..scale.orders)
        .map(|_| {
            order(
                r.gen_range(1..=scale.customers as i64),
                r.gen_range(1..=scale.products as i64),
            )
        })
        .collect();
    db.insert_by_name("Orders", orders)?;
    let persons = (1..=scale.customers as i64)
        .map(|id| vec![Value::Int(id), Value::Int(id), Value::from(*names.choose(&mut r).unwrap())])
        .collect();
    db.insert_by_name("Persons", persons)?;
    let tags = (0..scale.tags as i64)
        .map(|j| {
            vec![
                Value::Int(j + 1),
                Value::Int(10 * (j + 1)),
                Value::from(TAG_NAMES[j as usize % TAG_NAMES.len()]),
            ]
        })
        .collect();
    db.insert_by_name("Tags", tags)?;
    let (p, t) = (db.oid_of("Persons")?.0 as i64, db.oid_of("Tags")?.0 as i64);
    let target = scale.interests.min(scale.customers * scale.tags);
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(target);
    while edges.len() < target {
        let s = r.gen_range(1..=scale.customers as i64);
        let d = r.gen_range(1..=scale.tags as i64);
        if seen.insert((s, d)) {
            edges.push(vec![Value::Int(p), Value::Int(s), Value::Int(t), Value::Int(d), Value::Int(r.gen_range(0..10))]);
        }
    }
    db.insert_by_name("Interests", edges)?;
    Ok(())
}
