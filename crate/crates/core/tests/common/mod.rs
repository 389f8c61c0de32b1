#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use whatif_core::{
    load_cube, parse_query, AggFn, AggregationSpec, CubeManifest, DataCube, Factors, MaterializedRow, Query,
    ScenarioStore,
};

pub const SUPPLY_CSV: &str = "\
Year,Supplier,Product,Volume,Cost
2011,SU1,P1,10,1.0
2011,SU1,P2,11,1.5
2011,SU2,P1,12,1.1
2011,SU2,P2,13,1.4
";

pub fn manifest() -> CubeManifest {
    CubeManifest {
        dimensions: vec!["Year".into(), "Supplier".into(), "Product".into()],
        measures: vec!["Volume".into(), "Cost".into()],
        source: None,
    }
}

pub fn supply_cube() -> DataCube {
    load_cube(SUPPLY_CSV, &manifest()).unwrap()
}

pub fn q(store: &ScenarioStore, text: &str) -> Query {
    parse_query(text, store).unwrap()
}

pub fn factors(store: &ScenarioStore, pairs: &[(&str, f64)]) -> Factors {
    Factors::from_named(pairs.iter().copied(), store.schema()).unwrap()
}

pub fn associate(store: &mut ScenarioStore, target: &str, query: &str, pairs: &[(&str, f64)]) {
    let query = q(store, query);
    let f = factors(store, pairs);
    store.associate_query(target, &query, &f).unwrap();
}

pub fn amount(cube: &DataCube) -> AggregationSpec {
    AggregationSpec::parse("sum:Volume*Cost", cube.schema()).unwrap()
}

/// 2012 as two supplier blocks, SU3 as SU2 at 90% cost.
pub fn year_and_supplier(cube: &DataCube) -> ScenarioStore {
    let mut s = ScenarioStore::new(cube.schema().clone());
    s.create_scenario("2012", "Year").unwrap();
    s.create_scenario("SU3", "Supplier").unwrap();
    associate(
        &mut s,
        "2012",
        "Year=2011;Supplier=SU1;Product=P1,P2",
        &[("Volume", 2.0), ("Cost", 1.0)],
    );
    associate(
        &mut s,
        "2012",
        "Year=2011;Supplier=SU2;Product=P1,P2",
        &[("Volume", 3.0), ("Cost", 1.0)],
    );
    associate(
        &mut s,
        "SU3",
        "Year=2011;Supplier=SU2;Product=P1,P2",
        &[("Volume", 1.0), ("Cost", 0.9)],
    );
    s
}

/// 2012 redefined so its second supplier is SU3.
pub fn redefined(cube: &DataCube) -> ScenarioStore {
    let mut s = year_and_supplier(cube);
    let su2 = q(&s, "Year=2011,2012;Supplier=SU2;Product=P1,P2");
    s.remove_entry("2012", &su2).unwrap();
    associate(
        &mut s,
        "2012",
        "Year=2011;Supplier=SU3;Product=P1,P2",
        &[("Volume", 3.0), ("Cost", 1.0)],
    );
    s
}

pub fn rows_text(store: &ScenarioStore, rows: &[MaterializedRow<'_>]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            let coords: Vec<&str> = r.coords().iter().map(|&id| store.value_name(id)).collect();
            let measures: Vec<String> = r.measures().iter().map(|&x| whatif_core::format_number(x)).collect();
            format!("{},{}", coords.join(","), measures.join(","))
        })
        .collect()
}

pub fn all_specs(cube: &DataCube) -> Vec<AggregationSpec> {
    let schema = cube.schema();
    let m = schema.measure_count();
    let mut out = Vec::new();
    for f in [AggFn::Sum, AggFn::Count, AggFn::Avg, AggFn::Min, AggFn::Max] {
        for i in 0..m {
            out.push(AggregationSpec::new(f, vec![i], schema).unwrap());
        }
    }
    if m > 1 {
        out.push(AggregationSpec::new(AggFn::Sum, vec![0, 1], schema).unwrap());
    }
    out
}

/// Folds rows in order, independently of the engine's accumulators.
pub fn aggregate(rows: &[Vec<f64>], spec: &AggregationSpec) -> Option<f64> {
    let xs: Vec<f64> = rows
        .iter()
        .map(|m| spec.measures.iter().map(|&i| m[i]).product())
        .collect();
    match spec.function {
        AggFn::Count => Some(xs.len() as f64),
        AggFn::Sum => Some(xs.iter().fold(0.0, |a, x| a + x)),
        _ if xs.is_empty() => None,
        AggFn::Avg => Some(xs.iter().fold(0.0, |a, x| a + x) / xs.len() as f64),
        AggFn::Min => xs.iter().copied().reduce(f64::min),
        AggFn::Max => xs.iter().copied().reduce(f64::max),
    }
}

/// A random cube with scenarios. Measures are small multiples of 1/4 and
/// factors powers of two, so every sum is exact in any order.
pub struct Instance {
    pub cube: DataCube,
    pub store: ScenarioStore,
    /// Names per dimension: real values then scenario values.
    pub values: Vec<Vec<String>>,
    pub dims: Vec<String>,
}

pub fn random_instance(rng: &mut StdRng) -> Instance {
    let ndims = rng.random_range(1..=4);
    let dims: Vec<String> = (0..ndims).map(|d| format!("D{d}")).collect();
    let mut values: Vec<Vec<String>> = (0..ndims)
        .map(|d| (0..rng.random_range(1..=5)).map(|v| format!("d{d}v{v}")).collect())
        .collect();
    let nrows = rng.random_range(0..=200);
    let mut csv = format!("{},M0,M1\n", dims.join(","));
    let mut seen: Vec<Vec<bool>> = values.iter().map(|v| vec![false; v.len()]).collect();
    for _ in 0..nrows {
        let mut cells = Vec::new();
        for d in 0..ndims {
            let i = rng.random_range(0..values[d].len());
            seen[d][i] = true;
            cells.push(values[d][i].clone());
        }
        for _ in 0..2 {
            cells.push((rng.random_range(-16..=16) as f64 / 4.0).to_string());
        }
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    // only values that occur in rows are real
    for d in 0..ndims {
        let keep: Vec<String> = values[d]
            .iter()
            .zip(&seen[d])
            .filter(|(_, &s)| s)
            .map(|(v, _)| v.clone())
            .collect();
        values[d] = keep;
    }
    let manifest = CubeManifest {
        dimensions: dims.clone(),
        measures: vec!["M0".into(), "M1".into()],
        source: None,
    };
    let cube = load_cube(&csv, &manifest).unwrap();
    let mut store = ScenarioStore::new(cube.schema().clone());

    let nscen = rng.random_range(0..=3);
    let mut scenarios = Vec::new();
    for k in 0..nscen {
        let d = rng.random_range(0..ndims);
        let name = format!("d{d}s{k}");
        store.create_scenario(&name, &dims[d]).unwrap();
        values[d].push(name.clone());
        scenarios.push((name, d));
    }
    for (name, _) in &scenarios {
        for _ in 0..rng.random_range(1..=3) {
            let text = random_query_text(rng, &dims, &values, Some(name));
            let Some(text) = text else { continue };
            let query = q(&store, &text);
            let f = [0.5, 1.0, 2.0];
            let pairs = [("M0", *f.choose(rng).unwrap()), ("M1", *f.choose(rng).unwrap())];
            let fs = factors(&store, &pairs);
            match store.associate_query(name, &query, &fs) {
                Ok(_) => {}
                Err(e) => assert!(matches!(e.code(), "EMPTY_RESOLUTION"), "unexpected {e} for {text}"),
            }
        }
    }
    Instance {
        cube,
        store,
        values,
        dims,
    }
}

/// STAR with probability 1/4, else a non-empty random subset. Returns
/// `None` when `exclude` leaves some dimension without values.
pub fn random_query_text(
    rng: &mut StdRng,
    dims: &[String],
    values: &[Vec<String>],
    exclude: Option<&str>,
) -> Option<String> {
    let mut clauses = Vec::new();
    for (d, name) in dims.iter().enumerate() {
        let pool: Vec<&String> = values[d].iter().filter(|v| Some(v.as_str()) != exclude).collect();
        if rng.random_bool(0.25) {
            clauses.push(format!("{name}=*"));
            continue;
        }
        if pool.is_empty() {
            return None;
        }
        let mut picked: Vec<&str> = pool
            .iter()
            .filter(|_| rng.random_bool(0.5))
            .map(|v| v.as_str())
            .collect();
        if picked.is_empty() {
            picked.push(pool.choose(rng).unwrap());
        }
        clauses.push(format!("{name}={}", picked.join(",")));
    }
    Some(clauses.join(";"))
}

pub fn real_query_text(rng: &mut StdRng, inst: &Instance) -> String {
    let real: Vec<Vec<String>> = inst
        .values
        .iter()
        .map(|v| v.iter().filter(|n| !n.contains('s')).cloned().collect())
        .collect();
    loop {
        if let Some(t) = random_query_text(rng, &inst.dims, &real, None) {
            return t;
        }
    }
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
