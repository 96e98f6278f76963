//! `wst`: plan, validate, merge and simulate clinical pathways from the
//! command line. Every verb except `parse` talks to the session service,
//! either one given by `--server` or a private one started in-process.

mod render;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wst_client::{Client, ClientError};
use wst_core::api::{PlanRequest, SelectRequest};
use wst_core::dsl::{self, Diagnostic};
use wst_core::{interchange, DayTimeDuration, FactSet, ScenarioDocument, SearchOptions, Timestamp};
use wst_service::DATA_DIR_ENV;

#[derive(Parser, Debug)]
#[command(name = "wst", version, about = "Weighted state transition pathway planner")]
struct Cli {
    /// Base URL of a running service. Without it a private service is
    /// started for the duration of the command.
    #[arg(long, global = true)]
    server: Option<String>,
    /// Session storage directory for `serve` and the private service.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Interchange,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Parse a scenario; print it canonically or just check it.
    Parse {
        file: PathBuf,
        #[arg(long)]
        check: bool,
    },
    /// List candidate paths toward a goal.
    Plan {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        goal: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Select a path and check that its goal is still reachable.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        pathways: PathwayArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Select several paths and print their merged timeline.
    Merge {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        pathways: PathwayArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Select several paths and report predicted conflicts between them.
    Conflicts {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        pathways: PathwayArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Select a path and execute it step by step, optionally overriding
    /// expected outcomes with observed facts.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        pathways: PathwayArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// `STEP=FACTS`, e.g. `1=ex:pat1 care:tumor_size 40 .` (steps count from 1).
        #[arg(long = "observe", value_name = "STEP=FACTS")]
        observe: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct ScenarioArg {
    /// A `.wst` text file or an interchange `.json` file.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = SearchOptions::default().max_depth)]
    max_depth: usize,
    #[arg(long, default_value_t = SearchOptions::default().max_paths)]
    max_paths: usize,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions { max_depth: self.max_depth, max_paths: self.max_paths, prune: true }
    }
}

/// One pathway per `--goal`; `--path` and `--epoch` pair up with the goals in
/// order and default to 0 and `P0D`.
#[derive(Args, Debug)]
struct PathwayArgs {
    #[arg(long, required = true)]
    goal: Vec<String>,
    #[arg(long)]
    path: Vec<usize>,
    /// Start offset of the pathway as a duration, e.g. `P15D`.
    #[arg(long, value_parser = parse_duration)]
    epoch: Vec<DayTimeDuration>,
}

fn parse_duration(s: &str) -> Result<DayTimeDuration, String> {
    DayTimeDuration::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Invalid { source: String, diagnostics: Vec<Diagnostic>, message: String },
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invalid { .. } => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match (e.status().map(|s| s.as_u16()), e.body()) {
            (Some(400), Some(body)) if !body.diagnostics.is_empty() || !body.violations.is_empty() => Failure::Invalid {
                source: "service".into(),
                diagnostics: body.diagnostics.clone(),
                message: body.message.clone(),
            },
            (Some(400), _) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

struct Scenario {
    document: ScenarioDocument,
    bytes: Vec<u8>,
    json: bool,
}

fn read_scenario(path: &Path) -> Result<Scenario, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let source = path.display().to_string();
    let json = path.extension().and_then(|e| e.to_str()) == Some("json");
    let document = if json {
        interchange::load(&bytes).map_err(|e| Failure::Invalid { source, diagnostics: Vec::new(), message: e.to_string() })?
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        dsl::parse(text).map_err(|e| Failure::Invalid { source, diagnostics: e.diagnostics(), message: e.to_string() })?
    };
    Ok(Scenario { document, bytes, json })
}

fn data_dir_or_temp(dir: Option<PathBuf>) -> Result<(PathBuf, Option<tempfile::TempDir>), Failure> {
    match dir {
        Some(d) => Ok((d, None)),
        None => {
            let tmp = tempfile::tempdir().map_err(|e| Failure::Runtime(format!("temporary data directory: {e}")))?;
            Ok((tmp.path().to_path_buf(), Some(tmp)))
        }
    }
}

fn emit(format: Format, value: &impl serde::Serialize, text: impl FnOnce() -> String) {
    match format {
        Format::Interchange => println!("{}", serde_json::to_string_pretty(value).expect("responses serialize")),
        Format::Text => print!("{}", text()),
    }
}

struct Ctx {
    client: Client,
    format: Format,
}

impl Ctx {
    async fn open(&self, path: &Path) -> Result<(String, ScenarioDocument), Failure> {
        let scenario = read_scenario(path)?;
        let created = if scenario.json {
            self.client.create_session_interchange(scenario.bytes).await?
        } else {
            let text = String::from_utf8(scenario.bytes).expect("checked while reading");
            self.client.create_session_text(&text).await?
        };
        Ok((created.id, scenario.document))
    }

    async fn select_all(&self, session: &str, p: &PathwayArgs, search: &SearchArgs) -> Result<Vec<String>, Failure> {
        let mut ids = Vec::new();
        let mut version = self.client.session(session).await?.version;
        for (i, goal) in p.goal.iter().enumerate() {
            let req = SelectRequest {
                goal: goal.clone(),
                path_index: p.path.get(i).copied().unwrap_or(0),
                epoch: Timestamp(0).after(p.epoch.get(i).copied().unwrap_or(DayTimeDuration::ZERO)),
                expected_version: version,
                options: search.options(),
            };
            let made = self.client.select(session, &req).await?;
            version = made.version;
            ids.push(made.instance.id);
        }
        Ok(ids)
    }

    async fn run(&self, command: Command) -> Result<(), Failure> {
        match command {
            Command::Serve { .. } | Command::Parse { .. } => unreachable!("handled before connecting"),
            Command::Plan { scenario, goal, search } => {
                let (id, _) = self.open(&scenario.scenario).await?;
                let resp = self.client.plan(&id, &PlanRequest { goal, options: search.options() }).await?;
                emit(self.format, &resp, || render::plan(&resp));
            }
            Command::Validate { scenario, pathways, search } => {
                let (id, _) = self.open(&scenario.scenario).await?;
                let mut out = Vec::new();
                for iid in self.select_all(&id, &pathways, &search).await? {
                    out.push(self.client.validate(&id, &iid).await?);
                }
                emit(self.format, &out, || out.iter().map(render::validation).collect());
            }
            Command::Merge { scenario, pathways, search } => {
                let (id, _) = self.open(&scenario.scenario).await?;
                self.select_all(&id, &pathways, &search).await?;
                let resp = self.client.merged(&id).await?;
                emit(self.format, &resp, || render::merged(&resp));
            }
            Command::Conflicts { scenario, pathways, search } => {
                let (id, _) = self.open(&scenario.scenario).await?;
                self.select_all(&id, &pathways, &search).await?;
                let resp = self.client.conflicts(&id).await?;
                emit(self.format, &resp, || render::conflicts(&resp));
            }
            Command::Simulate { scenario, pathways, search, observe } => {
                let (id, doc) = self.open(&scenario.scenario).await?;
                let observed = parse_observations(&observe, &doc)?;
                let instances = self.select_all(&id, &pathways, &search).await?;
                let summary = self.client.session(&id).await?;
                let mut version = summary.version;
                let mut steps = Vec::new();
                for iid in &instances {
                    let total = summary.instances.iter().find(|i| &i.id == iid).map_or(0, |i| i.actions.len());
                    for step in 1..=total {
                        let facts = observed.iter().find(|(n, _)| *n == step).map(|(_, f)| f.clone()).unwrap_or_default();
                        let resp = self.client.advance(&id, iid, version, facts).await?;
                        version = resp.version;
                        steps.push(resp);
                    }
                }
                let state = self.client.state(&id).await?;
                let report = serde_json::json!({ "steps": steps, "finalState": state });
                emit(self.format, &report, || render::simulation(&steps, &state));
            }
        }
        Ok(())
    }
}

fn parse_observations(raw: &[String], doc: &ScenarioDocument) -> Result<Vec<(usize, FactSet)>, Failure> {
    raw.iter()
        .map(|item| {
            let (step, facts) = item
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--observe expects STEP=FACTS, got {item:?}")))?;
            let step: usize = step
                .trim()
                .parse()
                .ok()
                .filter(|n| *n >= 1)
                .ok_or_else(|| Failure::Usage(format!("bad step number in {item:?}")))?;
            let facts = dsl::parse_facts(facts, &doc.prefixes).map_err(|e| Failure::Invalid {
                source: "--observe".into(),
                diagnostics: e.diagnostics(),
                message: e.to_string(),
            })?;
            Ok((step, facts))
        })
        .collect()
}

fn parse_command(file: &Path, check: bool, format: Format) -> Result<(), Failure> {
    let scenario = read_scenario(file)?;
    if check {
        println!("{}: ok", file.display());
        return Ok(());
    }
    match format {
        Format::Text => print!("{}", dsl::serialize(&scenario.document)),
        Format::Interchange => {
            let bytes = interchange::dump(&scenario.document);
            print!("{}", String::from_utf8(bytes).expect("JSON is UTF-8"));
        }
    }
    Ok(())
}

async fn serve(addr: SocketAddr, data_dir: PathBuf) -> Result<(), Failure> {
    let svc = wst_service::start(addr, &data_dir).await.map_err(|e| Failure::Runtime(e.to_string()))?;
    eprintln!("wst service listening on {} (data in {})", svc.url(), data_dir.display());
    tokio::signal::ctrl_c().await.map_err(|e| Failure::Runtime(e.to_string()))?;
    svc.shutdown().await.map_err(|e| Failure::Runtime(e.to_string()))
}

async fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Parse { file, check } => parse_command(&file, check, cli.format),
        Command::Serve { addr } => {
            let dir = cli.data_dir.unwrap_or_else(|| PathBuf::from("wst-data"));
            serve(addr, dir).await
        }
        command => {
            if let Some(url) = cli.server {
                return Ctx { client: Client::new(url), format: cli.format }.run(command).await;
            }
            let (dir, _guard) = data_dir_or_temp(cli.data_dir)?;
            let svc = wst_service::start("127.0.0.1:0".parse().unwrap(), &dir)
                .await
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            let result = Ctx { client: Client::new(svc.url()), format: cli.format }.run(command).await;
            svc.shutdown().await.map_err(|e| Failure::Runtime(e.to_string()))?;
            result
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if matches!(cli.command, Command::Serve { .. }) {
        tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    }
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match runtime.block_on(dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) | Failure::Runtime(msg) => eprintln!("error: {msg}"),
                Failure::Invalid { source, diagnostics, message } => {
                    if diagnostics.is_empty() {
                        eprintln!("{source}: {message}");
                    }
                    for d in diagnostics {
                        eprintln!("{source}:{d}");
                    }
                }
            }
            ExitCode::from(failure.code())
        }
    }
}
