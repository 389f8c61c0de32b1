use crate::cube::{DataCube, Factors};
use crate::io::{load_cube, CubeManifest};
use crate::query::Query;
use crate::scenario::ScenarioStore;
use crate::text::parse_query;

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

pub fn query(store: &ScenarioStore, text: &str) -> Query {
    parse_query(text, store).unwrap()
}

fn associate(store: &mut ScenarioStore, target: &str, q: &str, pairs: &[(&str, f64)]) {
    let q = query(store, q);
    let f = Factors::from_named(pairs.iter().copied(), store.schema()).unwrap();
    store.associate_query(target, &q, &f).unwrap();
}

/// 2012 and SU3 as left after redefining 2012 in terms of SU3.
pub fn sample_store(cube: &DataCube) -> ScenarioStore {
    let mut s = ScenarioStore::new(cube.schema().clone());
    s.create_scenario("2012", "Year").unwrap();
    s.create_scenario("SU3", "Supplier").unwrap();
    associate(
        &mut s,
        "2012",
        "Year=2011;Supplier=SU1;Product=P1,P2",
        &[("Volume", 2.0)],
    );
    associate(
        &mut s,
        "2012",
        "Year=2011;Supplier=SU2;Product=P1,P2",
        &[("Volume", 3.0)],
    );
    associate(&mut s, "SU3", "Year=2011;Supplier=SU2;Product=P1,P2", &[("Cost", 0.9)]);
    let su2 = query(&s, "Year=2011,2012;Supplier=SU2;Product=P1,P2");
    s.remove_entry("2012", &su2).unwrap();
    associate(
        &mut s,
        "2012",
        "Year=2011;Supplier=SU3;Product=P1,P2",
        &[("Volume", 3.0)],
    );
    s
}
