pub mod serve;

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ntccrt::ccfomi::{
    estimate_convergence_with, run_session, ConvergenceOptions, Rho, SessionConfig, SyncGuard, UnitRecord,
};
use ntccrt::harness::{
    bench, format_symbol, load_config, parse_notes, read_trace, replay, write_trace, BenchConfig,
};
use ntccrt::oracle::{Oracle, Symbol};

#[derive(Parser, Debug)]
#[command(name = "ntccrt", version, about = "Concurrent constraint music improvisation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the factor oracle of a notes file and print it as JSON.
    Learn {
        #[arg(long)]
        notes: PathBuf,
        #[arg(long, default_value_t = 26)]
        alphabet: u32,
    },
    /// Run a session over a notes file and write its JSONL trace.
    Improvise(ImproviseArgs),
    /// Time units of replicated sessions.
    Bench {
        #[arg(long, default_value_t = 300)]
        units: usize,
        #[arg(long, default_value_t = 5)]
        replicas: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random notes fed to each replica.
        #[arg(long, default_value_t = 30)]
        notes: usize,
        #[arg(long)]
        json: bool,
    },
    /// Estimate how fast each rho reaches an improvisation state.
    Converge {
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        t: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Continuations required after a jump.
        #[arg(long, default_value_t = 4)]
        phrase_len: usize,
        #[arg(long)]
        json: bool,
    },
    /// Start the live jam service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GuardArg {
    Assigned,
    NonNegative,
}

#[derive(Args, Debug, Default)]
pub struct SessionArgs {
    /// JSON session config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Continuation probability, or `nondet`.
    #[arg(long)]
    rho: Option<Rho>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alphabet: Option<u32>,
    #[arg(long)]
    tick: Option<u64>,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    star_bound: Option<u32>,
    /// Run `unless` only on a guard that is decided false.
    #[arg(long)]
    unless_strict: bool,
    #[arg(long, value_enum)]
    sync_guard: Option<GuardArg>,
}

impl SessionArgs {
    fn resolve(&self, units: Option<usize>) -> Result<SessionConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path).map_err(Failure::Input)?,
            None => SessionConfig::default(),
        };
        if let Some(r) = self.rho {
            cfg.rho = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(a) = self.alphabet {
            cfg.alphabet_size = a;
        }
        if let Some(t) = self.tick {
            cfg.tick_ms = t;
        }
        if let Some(k) = self.k0 {
            cfg.k0 = k;
        }
        if let Some(b) = self.star_bound {
            cfg.star_bound = b;
        }
        if let Some(u) = units {
            cfg.max_units = u;
        }
        cfg.unless_strict |= self.unless_strict;
        if let Some(g) = self.sync_guard {
            cfg.sync_guard = match g {
                GuardArg::Assigned => SyncGuard::Assigned,
                GuardArg::NonNegative => SyncGuard::NonNegative,
            };
        }
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct ImproviseArgs {
    #[arg(long, required_unless_present = "replay")]
    notes: Option<PathBuf>,
    #[arg(long)]
    units: Option<usize>,
    /// Trace destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-run a recorded trace, feeding each unit its recorded note.
    #[arg(long, conflicts_with = "notes")]
    replay: Option<PathBuf>,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// Overridden by the PORT environment variable.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Seconds a session survives without clients.
    #[arg(long, default_value_t = 30)]
    grace: u64,
    /// JSONL trace of the live session.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    session: SessionArgs,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad flag values: exit 2.
    Usage(String),
    /// Unreadable or malformed input: exit 1.
    Input(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Input(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Input(m) => f.write_str(m),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", path.display()))
}

fn read_notes(path: &Path, alphabet: u32) -> Result<Vec<Symbol>, Failure> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_notes(&text, alphabet).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut f = io::BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
            body(&mut f).and_then(|_| f.flush()).map_err(io_err(path))
        }
        None => body(&mut io::stdout().lock()).map_err(|e| Failure::Input(e.to_string())),
    }
}

fn out_line(records: &[UnitRecord]) -> String {
    let syms: Vec<String> = records.iter().filter_map(|r| r.out).map(format_symbol).collect();
    syms.join(" ")
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Learn { notes, alphabet } => {
            if alphabet == 0 {
                return Err(Failure::Usage("--alphabet must be at least 1".into()));
            }
            let syms = read_notes(&notes, alphabet)?;
            let oracle = Oracle::from_symbols(alphabet, &syms).map_err(|e| Failure::Input(e.to_string()))?;
            let json = serde_json::to_string_pretty(&oracle.to_json()).expect("oracle JSON");
            println!("{json}");
            Ok(())
        }
        Command::Improvise(args) => improvise(args),
        Command::Bench {
            units,
            replicas,
            runs,
            seed,
            notes,
            json,
        } => {
            let cfg = BenchConfig {
                units,
                replicas,
                runs,
                seed,
                notes,
                ..BenchConfig::default()
            };
            let report = bench(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
            if json {
                println!("{}", serde_json::to_string(&report).expect("report JSON"));
            } else {
                println!("units        {}", report.durations_ms.len());
                println!("activations  {:.1} per unit (mean)", report.mean_activations);
                println!("median       {:.3} ms", report.median_ms);
                println!("mean         {:.3} ms", report.mean_ms);
                println!("p95          {:.3} ms", report.p95_ms);
                println!("max          {:.3} ms", report.max_ms);
            }
            Ok(())
        }
        Command::Converge {
            rho,
            t,
            trials,
            seed,
            phrase_len,
            json,
        } => {
            if !json {
                println!("{:>6} {:>6} {:>8} {:>8}  ci95", "rho", "t", "trials", "q_hat");
            }
            for r in rho {
                let opts = ConvergenceOptions {
                    phrase_len,
                    ..ConvergenceOptions::new(r, t, trials, seed)
                };
                let est = estimate_convergence_with(&opts).map_err(|e| Failure::Usage(e.to_string()))?;
                if json {
                    println!("{}", serde_json::to_string(&est).expect("estimate JSON"));
                } else {
                    println!(
                        "{:>6.2} {:>6} {:>8} {:>8.4}  [{:.4}, {:.4}]",
                        est.rho, est.t, est.trials, est.q_hat, est.ci95.0, est.ci95.1
                    );
                }
            }
            Ok(())
        }
        Command::Serve(args) => serve_cmd(args),
    }
}

fn improvise(args: ImproviseArgs) -> Result<(), Failure> {
    let cfg = args.session.resolve(args.units)?;
    if let Some(path) = &args.replay {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let recorded = read_trace(BufReader::new(file)).map_err(io_err(path))?;
        let again = replay(&cfg, &recorded).map_err(|e| Failure::Input(e.to_string()))?;
        emit(args.out.as_deref(), |w| write_trace(w, &again))?;
        let diverged = recorded
            .iter()
            .zip(&again)
            .find(|(a, b)| (a.out, a.branch) != (b.out, b.branch));
        return match diverged {
            None => {
                eprintln!("replay: identical out stream over {} units", again.len());
                Ok(())
            }
            Some((a, _)) => Err(Failure::Input(format!("replay diverged at unit {}", a.unit))),
        };
    }
    let notes_path = args.notes.as_deref().expect("clap requires --notes without --replay");
    let notes = read_notes(notes_path, cfg.alphabet_size)?;
    let run = run_session(&cfg, &notes).map_err(|e| Failure::Input(e.to_string()))?;
    emit(args.out.as_deref(), |w| write_trace(w, &run.records))?;
    eprintln!("out: {}", out_line(&run.records));
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> Result<(), Failure> {
    let cfg = args.session.resolve(None)?;
    let port = match std::env::var("PORT") {
        Ok(p) => p
            .parse()
            .map_err(|_| Failure::Usage(format!("PORT must be a port number, got `{p}`")))?,
        Err(_) => args.port,
    };
    let opts = serve::ServeOptions {
        grace: Duration::from_secs(args.grace),
        trace: args.out,
        ..serve::ServeOptions::new(cfg)
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Input(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), port))
            .await
            .map_err(|e| Failure::Input(format!("cannot bind {}:{port}: {e}", args.host)))?;
        eprintln!("listening on ws://{}/ws", listener.local_addr().map_err(|e| Failure::Input(e.to_string()))?);
        serve::serve(listener, opts).await.map_err(|e| Failure::Input(e.to_string()))
    })
}
