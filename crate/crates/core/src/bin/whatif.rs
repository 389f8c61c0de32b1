use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use whatif_core::service::{serve, ServeConfig};
use whatif_core::{export_rows, format_number, load_cube, parse_factor, AggregationSpec, CubeManifest, Error, Session};

/// What-if analysis over a CSV data cube.
#[derive(Parser)]
#[command(name = "whatif", version)]
struct Cli {
    #[command(flatten)]
    source: Source,
    /// Scenario store file; read if present, rewritten by scenario commands.
    #[arg(long, global = true, env = "WHATIF_STORE")]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// JSON manifest: {"dimensions": [..], "measures": [..], "source": "data.csv"}.
    #[arg(long, global = true, conflicts_with_all = ["cube", "dims", "measures"])]
    manifest: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long, global = true, requires_all = ["dims", "measures"])]
    cube: Option<PathBuf>,
    /// Comma-separated dimension columns.
    #[arg(long, global = true, value_delimiter = ',')]
    dims: Vec<String>,
    /// Comma-separated measure columns.
    #[arg(long, global = true, value_delimiter = ',')]
    measures: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load the cube and print its shape.
    Load,
    /// Create, fill, inspect and remove scenarios
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Evaluate aggregates; prints one value per `-a`.
    Eval {
        #[arg(short, long, default_value = "")]
        query: String,
        /// `fn:Measure` or `fn:M1*M2`; fn is sum, count, avg, min or max.
        #[arg(short, long = "agg", required = true)]
        agg: Vec<String>,
    },
    /// Write the selected rows as CSV.
    Materialize {
        #[arg(short, long, default_value = "")]
        query: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Save or replace the scenario store
    #[command(subcommand)]
    Store(StoreCommand),
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "WHATIF_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "WHATIF_STATIC_DIR")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Register a new value for a dimension.
    Create {
        value: String,
        #[arg(short, long = "dim")]
        dimension: String,
    },
    /// Associate a query and factors with a scenario.
    AddQuery {
        value: String,
        #[arg(short, long)]
        query: String,
        /// `Measure=number`; unlisted measures keep factor 1.
        #[arg(short, long = "factor")]
        factor: Vec<String>,
    },
    /// Remove a scenario, or one of its entries with --entry.
    Rm {
        value: String,
        #[arg(long)]
        entry: Option<usize>,
    },
    /// Print stored entries.
    List,
}

#[derive(Subcommand)]
enum StoreCommand {
    /// Write the store document to stdout or --out.
    Save {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a store document and install it as --store.
    Load { file: PathBuf },
}

enum Failure {
    Usage(String),
    Domain(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<(), Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn open_session(cli: &Cli) -> Result<Session, Failure> {
    let (manifest, csv) = match (&cli.source.manifest, &cli.source.cube) {
        (Some(path), _) => {
            let manifest: CubeManifest = serde_json::from_str(&read_file(path)?)
                .map_err(|e| Failure::Domain(Error::MalformedDocument(e.to_string())))?;
            let source = manifest
                .source
                .as_ref()
                .ok_or_else(|| Failure::Usage("manifest has no `source`".into()))?;
            let csv_path = path.parent().unwrap_or(Path::new(".")).join(source);
            let csv = read_file(&csv_path)?;
            (manifest, csv)
        }
        (None, Some(path)) => (
            CubeManifest {
                dimensions: cli.source.dims.clone(),
                measures: cli.source.measures.clone(),
                source: None,
            },
            read_file(path)?,
        ),
        (None, None) => {
            return Err(Failure::Usage(
                "give --manifest or --cube with --dims and --measures".into(),
            ))
        }
    };
    let mut session = Session::new();
    session.load_cube(load_cube(&csv, &manifest)?);
    if let Some(store) = cli.store.as_ref().filter(|p| p.exists()) {
        session.load_store(&read_file(store)?)?;
    }
    Ok(session)
}

fn store_path(cli: &Cli) -> Result<&Path, Failure> {
    cli.store
        .as_deref()
        .ok_or_else(|| Failure::Usage("this command needs --store".into()))
}

fn persist(cli: &Cli, session: &Session) -> Outcome {
    write_file(store_path(cli)?, &session.save_store()?)
}

fn print_entries(session: &Session, value: &str) -> Outcome {
    let store = session.store()?;
    let scenario = store
        .scenario_by_name(value)
        .ok_or_else(|| Error::UnknownScenario(value.to_string()))?;
    for (i, (key, values)) in scenario.entries().iter().enumerate() {
        println!("{value} [{i}] {}", store.display_query(key));
        for v in values {
            println!(
                "  {} {}",
                store.display_query(&v.query),
                factors_text(session, v.factors.as_slice())?
            );
        }
    }
    Ok(())
}

fn factors_text(session: &Session, f: &[f64]) -> Result<String, Failure> {
    let schema = session.cube()?.schema();
    Ok(schema
        .measures()
        .iter()
        .zip(f)
        .map(|(m, &x)| format!("{m}={}", format_number(x)))
        .collect::<Vec<_>>()
        .join(" "))
}

fn run(cli: &Cli) -> Outcome {
    if let Command::Serve { listen, static_dir } = &cli.command {
        let session = match (&cli.source.manifest, &cli.source.cube) {
            (None, None) => Session::new(),
            _ => open_session(cli)?,
        };
        let config = ServeConfig {
            listen: *listen,
            static_dir: static_dir.clone(),
        };
        let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
        return rt
            .block_on(serve(config, session))
            .map_err(|e| Failure::Io(e.to_string()));
    }

    let mut session = open_session(cli)?;
    match &cli.command {
        Command::Load => {
            let cube = session.cube()?;
            let schema = cube.schema();
            println!("rows: {}", cube.len());
            for d in schema.dimensions() {
                println!("dimension {}: {} values", d.name(), d.values().len());
            }
            println!("measures: {}", schema.measures().join(","));
            println!("scenarios: {}", session.store()?.len());
        }
        Command::Scenario(ScenarioCommand::Create { value, dimension }) => {
            store_path(cli)?;
            session.create_scenario(value, dimension)?;
            persist(cli, &session)?;
            println!("created {value} in {dimension}");
        }
        Command::Scenario(ScenarioCommand::AddQuery { value, query, factor }) => {
            store_path(cli)?;
            let q = session.parse_query(query)?;
            let pairs = factor.iter().map(|f| parse_factor(f)).collect::<Result<Vec<_>, _>>()?;
            let pairs: Vec<(&str, f64)> = pairs.iter().map(|(m, f)| (m.as_str(), *f)).collect();
            let added = session.associate(value, &q, &pairs)?;
            persist(cli, &session)?;
            let store = session.store()?;
            for (key, values) in &added {
                println!("key {}", store.display_query(key));
                for v in values {
                    println!(
                        "  {} {}",
                        store.display_query(&v.query),
                        factors_text(&session, v.factors.as_slice())?
                    );
                }
            }
        }
        Command::Scenario(ScenarioCommand::Rm { value, entry }) => {
            store_path(cli)?;
            match entry {
                Some(i) => {
                    let (key, _) = session.remove_entry(value, *i)?;
                    persist(cli, &session)?;
                    println!("removed {}", session.store()?.display_query(&key));
                }
                None => {
                    session.delete_scenario(value)?;
                    persist(cli, &session)?;
                    println!("deleted {value}");
                }
            }
        }
        Command::Scenario(ScenarioCommand::List) => {
            let names: Vec<String> = session.store()?.scenarios().map(|s| s.name().to_string()).collect();
            for name in names {
                print_entries(&session, &name)?;
            }
        }
        Command::Eval { query, agg } => {
            let q = session.parse_query(query)?;
            let schema = session.cube()?.schema().clone();
            let specs = agg
                .iter()
                .map(|a| AggregationSpec::parse(a, &schema))
                .collect::<Result<Vec<_>, _>>()?;
            let out = session.evaluate(&q, &specs)?;
            for v in out.values {
                println!("{}", v.map_or_else(|| "null".to_string(), format_number));
            }
        }
        Command::Materialize { query, out } => {
            let q = session.parse_query(query)?;
            let rows = session.materialize(&q)?;
            let text = export_rows(session.store()?, &rows);
            match out {
                Some(path) => write_file(path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Store(StoreCommand::Save { out }) => {
            let text = session.save_store()?;
            match out {
                Some(path) => write_file(path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Store(StoreCommand::Load { file }) => {
            let target = store_path(cli)?;
            session.load_store(&read_file(file)?)?;
            write_file(target, &session.save_store()?)?;
            println!("loaded {} scenarios", session.store()?.len());
        }
        Command::Serve { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(3)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: IO: {msg}");
            ExitCode::from(3)
        }
    }
}
