mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use whatif_core::{evaluate, evaluate_parallel, materialize, select, AggregationSpec, DataCube, Query, ScenarioStore};

type Outcome = Result<(), String>;
type Entry = (String, Vec<(String, Vec<f64>)>);
type Criterion = (u32, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn eval_one(cube: &DataCube, store: &ScenarioStore, e: &Query, spec: &AggregationSpec) -> f64 {
    evaluate(cube, store, e, std::slice::from_ref(spec)).unwrap().values[0].unwrap()
}

fn amounts(rows: &[whatif_core::MaterializedRow<'_>]) -> Vec<f64> {
    rows.iter().map(|r| r.measures()[0] * r.measures()[1]).collect()
}

fn golden_2011_total() -> Outcome {
    let start = Instant::now();
    let cube = supply_cube();
    let store = ScenarioStore::new(cube.schema().clone());
    let e = q(&store, "Year=2011;Supplier=SU1,SU2;Product=P1,P2");
    let v = eval_one(&cube, &store, &e, &amount(&cube));
    let took = start.elapsed();
    ensure!(close(v, 57.9), "sum(Volume*Cost) = {v}, expected 57.9");
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(())
}

fn scenario_2012() -> Outcome {
    let cube = supply_cube();
    let mut s = ScenarioStore::new(cube.schema().clone());
    s.create_scenario("2012", "Year").unwrap();
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
        &[("Volume", 3.0), ("Cost", 1.0)],
    );
    let rows = materialize(&cube, &s, &q(&s, "Year=2012;Supplier=SU1,SU2;Product=P1,P2")).unwrap();
    let got: Vec<(Vec<&str>, Vec<f64>)> = rows
        .iter()
        .map(|r| {
            (
                r.coords().iter().map(|&id| s.value_name(id)).collect(),
                r.measures().to_vec(),
            )
        })
        .collect();
    let want: Vec<(Vec<&str>, Vec<f64>)> = vec![
        (vec!["2012", "SU1", "P1"], vec![20.0, 1.0]),
        (vec!["2012", "SU1", "P2"], vec![22.0, 1.5]),
        (vec!["2012", "SU2", "P1"], vec![36.0, 1.1]),
        (vec!["2012", "SU2", "P2"], vec![39.0, 1.4]),
    ];
    ensure!(got == want, "got {got:?}");
    ensure!(
        rows.iter().all(|r| r.is_simulated()),
        "non-simulated row in a scenario-only query"
    );
    Ok(())
}

fn scenario_su3() -> Outcome {
    let cube = supply_cube();
    let mut s = ScenarioStore::new(cube.schema().clone());
    s.create_scenario("SU3", "Supplier").unwrap();
    associate(
        &mut s,
        "SU3",
        "Year=2011;Supplier=SU2;Product=P1,P2",
        &[("Volume", 1.0), ("Cost", 0.9)],
    );
    let rows = materialize(&cube, &s, &q(&s, "Year=2011;Supplier=SU3;Product=P1,P2")).unwrap();
    ensure!(rows.len() == 2, "{} rows", rows.len());
    let text = rows_text(&s, &rows);
    ensure!(text == ["2011,SU3,P1,12,0.99", "2011,SU3,P2,13,1.26"], "got {text:?}");
    let m: Vec<&[f64]> = rows.iter().map(|r| r.measures()).collect();
    ensure!(m[0][0] == 12.0 && close(m[0][1], 0.99), "row 1 {:?}", m[0]);
    ensure!(m[1][0] == 13.0 && close(m[1][1], 1.26), "row 2 {:?}", m[1]);
    let a = amounts(&rows);
    ensure!(close(a[0], 11.88) && close(a[1], 16.38), "amounts {a:?}");
    Ok(())
}

fn dependent_resolution() -> Outcome {
    let cube = supply_cube();
    let s = redefined(&cube);
    let y2012 = s.scenario_by_name("2012").unwrap();
    let entries: Vec<Entry> = y2012
        .entries()
        .iter()
        .map(|(k, vs)| {
            (
                s.display_query(k),
                vs.iter()
                    .map(|v| (s.display_query(&v.query), v.factors.as_slice().to_vec()))
                    .collect(),
            )
        })
        .collect();
    let want = vec![
        (
            "Year=2011,2012;Supplier=SU1;Product=P1,P2".to_string(),
            vec![("Year=2011;Supplier=SU1;Product=P1,P2".to_string(), vec![2.0, 1.0])],
        ),
        (
            "Year=2011,2012;Supplier=SU3;Product=P1,P2".to_string(),
            vec![("Year=2011;Supplier=SU2;Product=P1,P2".to_string(), vec![3.0, 0.9])],
        ),
    ];
    ensure!(entries == want, "stored {entries:?}");
    ensure!(
        y2012.entries().values().flatten().all(|v| v.query.is_real_only()),
        "value query names a scenario"
    );
    Ok(())
}

fn golden_2012_total() -> Outcome {
    let cube = supply_cube();
    let s = redefined(&cube);
    let e = q(&s, "Year=2012;Supplier=SU1,SU3;Product=P1,P2");
    let v = eval_one(&cube, &s, &e, &amount(&cube));
    ensure!(close(v, 137.78), "sum(Volume*Cost) = {v}, expected 137.78");
    let rows = materialize(&cube, &s, &e).unwrap();
    let a = amounts(&rows);
    let want = [20.0, 33.0, 35.64, 49.14];
    ensure!(
        a.len() == 4 && a.iter().zip(want).all(|(&x, y)| close(x, y)),
        "amounts {a:?}"
    );
    let text = rows_text(&s, &rows);
    ensure!(
        text == [
            "2012,SU1,P1,20,1",
            "2012,SU1,P2,22,1.5",
            "2012,SU3,P1,36,0.99",
            "2012,SU3,P2,39,1.26"
        ],
        "rows {text:?}"
    );
    Ok(())
}

fn full_mixed_query() -> Outcome {
    let cube = supply_cube();
    let s = redefined(&cube);
    let e = q(&s, "Year=2011,2012;Supplier=SU1,SU2,SU3;Product=P1,P2");
    let rows = materialize(&cube, &s, &e).unwrap();
    let again = materialize(&cube, &s, &e).unwrap();
    let text = rows_text(&s, &rows);
    ensure!(text == rows_text(&s, &again), "order differs between runs");
    let want = [
        "2011,SU1,P1,10,1",
        "2011,SU1,P2,11,1.5",
        "2011,SU2,P1,12,1.1",
        "2011,SU2,P2,13,1.4",
        "2012,SU1,P1,20,1",
        "2012,SU1,P2,22,1.5",
        "2012,SU3,P1,36,0.99",
        "2012,SU3,P2,39,1.26",
    ];
    let total: f64 = amounts(&rows).iter().sum();
    let extra: Vec<&String> = text.iter().filter(|r| !want.contains(&r.as_str())).collect();
    ensure!(
        text == want && close(total, 195.68),
        "{} rows with amount {} (expected 8 rows, 195.68); rows outside the 8: {extra:?}",
        text.len(),
        whatif_core::format_number(total)
    );
    Ok(())
}

fn same(a: Option<f64>, b: Option<f64>) -> bool {
    a.map(f64::to_bits) == b.map(f64::to_bits)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(0x5eed);
    let (mut checked, mut simulated) = (0, 0);
    for instance in 0..500 {
        let inst = random_instance(&mut rng);
        let specs = all_specs(&inst.cube);
        for _ in 0..3 {
            let Some(text) = random_query_text(&mut rng, &inst.dims, &inst.values, None) else {
                continue;
            };
            let e = q(&inst.store, &text);
            let rows = materialize(&inst.cube, &inst.store, &e).unwrap();
            simulated += rows.iter().filter(|r| r.is_simulated()).count();
            let measures: Vec<Vec<f64>> = rows.iter().map(|r| r.measures().to_vec()).collect();
            let got = evaluate(&inst.cube, &inst.store, &e, &specs).unwrap();
            let par = evaluate_parallel(&inst.cube, &inst.store, &e, &specs, 7).unwrap();
            ensure!(
                got.row_count as usize == rows.len(),
                "instance {instance} `{text}`: row count"
            );
            for (i, spec) in specs.iter().enumerate() {
                let want = aggregate(&measures, spec);
                let ok = match spec.function {
                    whatif_core::AggFn::Avg => match (got.values[i], want) {
                        (Some(a), Some(b)) => close(a, b),
                        (a, b) => a.is_none() && b.is_none(),
                    },
                    _ => same(got.values[i], want) && same(par.values[i], want),
                };
                ensure!(
                    ok,
                    "instance {instance} `{text}` {}: evaluate {:?}, oracle {want:?}",
                    spec.display(inst.cube.schema()),
                    got.values[i]
                );
            }
            checked += 1;
        }
    }
    let took = start.elapsed();
    ensure!(checked > 1000, "only {checked} queries checked");
    ensure!(simulated > 1000, "only {simulated} simulated rows seen");
    eprintln!("{checked} queries, {simulated} simulated rows");
    ensure!(took < Duration::from_secs(60), "took {took:?}");
    Ok(())
}

fn regression_quartet() -> Outcome {
    let cube = supply_cube();
    let base = {
        let mut s = redefined(&cube);
        s.create_scenario("P3", "Product").unwrap();
        s
    };
    let count = AggregationSpec::parse("count:Volume", cube.schema()).unwrap();
    let volume = AggregationSpec::parse("sum:Volume", cube.schema()).unwrap();

    // the key keeps the owner value
    let mut s = base.clone();
    associate(&mut s, "P3", "Year=2011;Supplier=SU1;Product=P1", &[]);
    let key = s.display_query(s.scenario_by_name("P3").unwrap().entries().keys().next().unwrap());
    ensure!(key == "Year=2011;Supplier=SU1;Product=P1,P3", "item 1: key {key}");
    let e = q(&s, "Year=2011;Supplier=SU1;Product=P3");
    let rows = rows_text(&s, &materialize(&cube, &s, &e).unwrap());
    ensure!(rows == ["2011,SU1,P3,10,1"], "item 1: rows {rows:?}");

    // the key keeps the scenario values named before resolution
    let mut s = base.clone();
    associate(&mut s, "P3", "Year=2011;Supplier=SU3;Product=P1,P2", &[]);
    let (key, values) = s.scenario_by_name("P3").unwrap().entries().first().unwrap();
    ensure!(
        s.display_query(key) == "Year=2011;Supplier=SU3;Product=P1,P2,P3",
        "item 2: key {}",
        s.display_query(key)
    );
    ensure!(
        s.display_query(&values[0].query) == "Year=2011;Supplier=SU2;Product=P1,P2",
        "item 2: value {}",
        s.display_query(&values[0].query)
    );
    let su3 = q(&s, "Year=2011;Supplier=SU3;Product=P3");
    ensure!(eval_one(&cube, &s, &su3, &count) == 2.0, "item 2: SU3 rows not found");
    let su2 = q(&s, "Year=2011;Supplier=SU2;Product=P3");
    ensure!(
        eval_one(&cube, &s, &su2, &count) == 0.0,
        "item 2: SU2 query picks SU3-keyed rows"
    );

    // each key selects only its own derived queries
    associate(&mut s, "P3", "Year=2012;Supplier=SU3;Product=P1,P2", &[("Volume", 5.0)]);
    let entries = s.scenario_by_name("P3").unwrap().entries();
    ensure!(entries.len() == 2, "item 3: {} keys", entries.len());
    let (k1, v1) = entries.get_index(1).unwrap();
    ensure!(
        s.display_query(k1) == "Year=2012;Supplier=SU3;Product=P1,P2,P3"
            && s.display_query(&v1[0].query) == "Year=2011;Supplier=SU2;Product=P1,P2",
        "item 3: second entry {} -> {}",
        s.display_query(k1),
        s.display_query(&v1[0].query)
    );
    ensure!(
        v1[0].factors.as_slice() == [15.0, 0.9],
        "item 3: factors {:?}",
        v1[0].factors
    );
    let v = eval_one(&cube, &s, &su3, &volume);
    ensure!(v == 25.0, "item 3: sum Volume over 2011/SU3/P3 = {v}, expected 25");
    let e2012 = q(&s, "Year=2012;Supplier=SU3;Product=P3");
    let v = eval_one(&cube, &s, &e2012, &volume);
    ensure!(v == 375.0, "item 3: sum Volume over 2012/SU3/P3 = {v}, expected 375");

    // keys are atomic, so SU2-derived rows stay out of an SU3 query
    let mut s = ScenarioStore::new(cube.schema().clone());
    s.create_scenario("SU3", "Supplier").unwrap();
    s.create_scenario("P3", "Product").unwrap();
    associate(&mut s, "SU3", "Year=2011;Supplier=SU2;Product=P1,P2", &[("Cost", 0.9)]);
    associate(&mut s, "P3", "Year=2011;Supplier=SU2,SU3;Product=P1,P2", &[]);
    let keys: Vec<String> = s
        .scenario_by_name("P3")
        .unwrap()
        .entries()
        .keys()
        .map(|k| s.display_query(k))
        .collect();
    ensure!(
        keys == [
            "Year=2011;Supplier=SU3;Product=P1,P2,P3",
            "Year=2011;Supplier=SU2;Product=P1,P2,P3"
        ],
        "item 4: keys {keys:?}"
    );
    let e = q(&s, "Year=2011;Supplier=SU3;Product=P3");
    let rows = materialize(&cube, &s, &e).unwrap();
    let text = rows_text(&s, &rows);
    ensure!(
        text == ["2011,SU3,P3,12,0.99", "2011,SU3,P3,13,1.26"],
        "item 4: rows {text:?}"
    );
    let v = eval_one(&cube, &s, &e, &amount(&cube));
    ensure!(close(v, 28.26), "item 4: amount {v}, expected 28.26");
    Ok(())
}

fn independence() -> Outcome {
    let cube = supply_cube();
    let mut s = redefined(&cube);
    let specs = all_specs(&cube);
    let years = ["2011", "2012", "2011,2012", "*"];
    let suppliers = ["SU1", "SU2", "SU1,SU2", "*"];
    let products = ["P1", "P2", "P1,P2", "*"];
    let mut queries = Vec::new();
    for y in years {
        for sp in suppliers {
            for p in products {
                queries.push(format!("Year={y};Supplier={sp};Product={p}"));
            }
        }
    }
    let snapshot = |s: &ScenarioStore| -> Vec<(Vec<Option<u64>>, u64, Vec<String>)> {
        queries
            .iter()
            .map(|t| {
                let e = q(s, t);
                let ev = evaluate(&cube, s, &e, &specs).unwrap();
                let rows = materialize(&cube, s, &e).unwrap();
                (
                    ev.values.iter().map(|v| v.map(f64::to_bits)).collect(),
                    ev.row_count,
                    rows.iter()
                        .map(|r| {
                            format!(
                                "{:?}{:?}",
                                r.coords(),
                                r.measures().iter().map(|x| x.to_bits()).collect::<Vec<_>>()
                            )
                        })
                        .collect(),
                )
            })
            .collect()
    };
    let entries = |s: &ScenarioStore| format!("{:?}", s.scenario_by_name("2012").unwrap().entries());
    let before = snapshot(&s);
    let entries_before = entries(&s);
    s.delete_scenario("SU3").unwrap();
    let after = snapshot(&s);
    for (i, (a, b)) in before.iter().zip(&after).enumerate() {
        ensure!(a == b, "`{}` changed after deleting SU3", queries[i]);
    }
    ensure!(entries(&s) == entries_before, "2012 entries changed");
    ensure!(
        whatif_core::parse_query("Supplier=SU3", &s).unwrap_err().code() == "UNKNOWN_VALUE",
        "SU3 still resolves"
    );
    Ok(())
}

fn degeneration() -> Outcome {
    let mut rng = seeded(0xde9e);
    let mut done = 0;
    while done < 100 {
        let inst = random_instance(&mut rng);
        if inst.cube.is_empty() {
            continue;
        }
        let text = real_query_text(&mut rng, &inst);
        let e = q(&inst.store, &text);
        let selected = select(&inst.cube, &e).unwrap();
        let rows = materialize(&inst.cube, &inst.store, &e).unwrap();
        ensure!(
            rows.len() == selected.len(),
            "`{text}`: {} rows vs {}",
            rows.len(),
            selected.len()
        );
        for (r, s) in rows.iter().zip(&selected) {
            ensure!(
                !r.is_simulated() && r.coords() == s.coords && r.measures() == s.measures,
                "`{text}`: row differs"
            );
        }
        let specs = all_specs(&inst.cube);
        let measures: Vec<Vec<f64>> = selected.iter().map(|r| r.measures.clone()).collect();
        let got = evaluate(&inst.cube, &inst.store, &e, &specs).unwrap();
        for (i, spec) in specs.iter().enumerate() {
            let want = aggregate(&measures, spec);
            let ok = match spec.function {
                whatif_core::AggFn::Avg => match (got.values[i], want) {
                    (Some(a), Some(b)) => close(a, b),
                    (a, b) => a.is_none() && b.is_none(),
                },
                _ => same(got.values[i], want),
            };
            ensure!(
                ok,
                "`{text}` {}: {:?} vs {want:?}",
                spec.display(inst.cube.schema()),
                got.values[i]
            );
        }
        done += 1;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "golden 2011 total", golden_2011_total),
        (2, "scenario 2012 rows", scenario_2012),
        (3, "scenario SU3 rows", scenario_su3),
        (4, "dependent scenario resolution", dependent_resolution),
        (5, "golden 2012 total", golden_2012_total),
        (6, "full mixed query", full_mixed_query),
        (7, "evaluate matches aggregated materialize", oracle_equivalence),
        (8, "key structure regressions", regression_quartet),
        (9, "independence after delete", independence),
        (10, "degeneration to plain selection", degeneration),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(()) => println!("criterion {n:>2}: PASS  {name} ({ms} ms)"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {name} ({ms} ms): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
