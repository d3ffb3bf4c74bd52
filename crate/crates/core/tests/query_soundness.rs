use gredo_core::database::Database;
use gredo_core::fixtures::{ecommerce, EcommerceScale, PRODUCT_TITLES};
use gredo_core::query::optimizer::{run_query, JoinShape, QueryOptions, Rule};
use gredo_core::value::{resolve_path, PathExpr, Value};
use proptest::prelude::*;

fn rows(db: &Database, name: &str) -> Vec<Vec<Value>> {
    db.collection_by_name(name).unwrap().iter_live().map(|r| r.values.to_vec()).collect()
}

fn int(v: &Value) -> i64 {
    v.as_i64().unwrap()
}

/// Customers who ordered a product titled `title`, crossed with the tags
/// they are interested in with weight at least `min_weight`. Nested loops
/// over the stored records.
fn oracle(db: &Database, title: &str, min_weight: i64) -> Vec<Vec<Value>> {
    let products = rows(db, "Products");
    let orders = rows(db, "Orders");
    let customers = rows(db, "Customers");
    let tags = rows(db, "Tags");
    let edges = rows(db, "Interests");
    let (cid, pid) = (PathExpr::key("customer_id"), PathExpr::key("product_id"));
    let mut out = Vec::new();
    for c in &customers {
        for o in &orders {
            if int(resolve_path(&o[0], &cid)) != int(&c[0]) {
                continue;
            }
            for p in &products {
                if int(&p[0]) != int(resolve_path(&o[0], &pid)) || p[1].as_str() != Some(title) {
                    continue;
                }
                // edge layout: soid, svid, toid, tvid, weight; person vid = id
                for e in &edges {
                    if int(&e[1]) != int(&c[0]) || int(&e[4]) < min_weight {
                        continue;
                    }
                    let tag = tags.iter().find(|t| int(&t[0]) == int(&e[3])).unwrap();
                    out.push(vec![c[0].clone(), tag[1].clone()]);
                }
            }
        }
    }
    out.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    out
}

fn query(title: &str, min_weight: i64) -> String {
    format!(
        "SELECT C.id, t.id FROM Customers C, Products P, Orders O, Interested_in \
         MATCH (p:Persons)-[e:Interested in]->(t:Tags) \
         WHERE C.id = p.id AND P.id = O->>'product_id' AND O->>'customer_id' = C.id \
         AND P.title = '{title}' AND e.weight >= {min_weight}"
    )
}

fn configurations() -> Vec<QueryOptions> {
    let mut out = vec![QueryOptions::default(), QueryOptions::unoptimized()];
    for shape in JoinShape::ALL {
        for join_emulation in [false, true] {
            out.push(QueryOptions { shape: Some(shape), join_emulation, ..QueryOptions::default() });
        }
    }
    for r in Rule::ALL {
        let mut o = QueryOptions::default();
        o.set_rule(r, false);
        out.push(o);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_configuration_agrees_with_oracle(seed in 0u64..1000, title in 0usize..PRODUCT_TITLES.len(), min_weight in 0i64..10) {
        let mut db = Database::in_memory();
        ecommerce(&mut db, EcommerceScale::small(), seed).unwrap();
        let title = PRODUCT_TITLES[title];
        let expected = oracle(&db, title, min_weight);
        let q = query(title, min_weight);
        for opts in configurations() {
            let (plan, result) = run_query(&db, &q, &opts).unwrap();
            prop_assert_eq!(result.sorted_rows(), expected.clone(), "{:?}\n{}", opts, plan.explain());
        }
    }

    #[test]
    fn chosen_plan_is_cheapest_candidate(seed in 0u64..1000, title in 0usize..PRODUCT_TITLES.len()) {
        let mut db = Database::in_memory();
        ecommerce(&mut db, EcommerceScale::small(), seed).unwrap();
        let (plan, _) = run_query(&db, &query(PRODUCT_TITLES[title], 0), &QueryOptions::default()).unwrap();
        let best = plan.candidates.iter().map(|(_, e)| e.cost).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(plan.physical.estimate.cost, best);
        prop_assert!(plan.explain().lines().last().unwrap().starts_with("rules: "));
    }
}
