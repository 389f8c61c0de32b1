use whatif_core::{load_cube, AggregationSpec, CubeManifest, Session};

const CSV: &str = "Year,Supplier,Product,Volume,Cost
2011,SU1,P1,10,1
2011,SU1,P2,11,1.5
2011,SU2,P1,12,1.1
2011,SU2,P2,13,1.4
";

fn main() -> whatif_core::Result<()> {
    let manifest = CubeManifest {
        dimensions: vec!["Year".into(), "Supplier".into(), "Product".into()],
        measures: vec!["Volume".into(), "Cost".into()],
        source: None,
    };
    let mut session = Session::new();
    session.load_cube(load_cube(CSV, &manifest)?);

    session.create_scenario("2012", "Year")?;
    let q = session.parse_query("Year=2011;Supplier=SU1")?;
    session.associate("2012", &q, &[("Volume", 2.0)])?;

    let spec = AggregationSpec::parse("sum:Volume*Cost", session.cube()?.schema())?;
    let e = session.parse_query("Year=2012")?;
    let out = session.evaluate(&e, &[spec])?;
    println!("{:?}", out.values[0]);
    let rows = session.materialize(&e)?;
    print!("{}", whatif_core::export_rows(session.store()?, &rows));
    Ok(())
}
