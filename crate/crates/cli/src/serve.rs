//! Live jam service.
//!
//! A network task per client forwards inbound frames into a shared inbox
//! and relays broadcast events. A single tick task owns the session: at
//! each tick it drains the inbox, runs one unit and publishes what the
//! unit produced.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use ntccrt::ccfomi::{Branch, Rho, Session, SessionConfig, SessionError};
use ntccrt::harness::protocol::{parse_client_frame, ClientFrame, ServerFrame};
use ntccrt::harness::write_record;
use ntccrt::oracle::Symbol;
use tokio::net::TcpListener;
use tokio::sync::broadcast;
use tokio::time::MissedTickBehavior;

#[derive(Clone, Debug)]
pub struct ServeOptions {
    pub config: SessionConfig,
    /// How long a session outlives its last client.
    pub grace: Duration,
    /// Minimum spacing of oracle snapshots.
    pub oracle_every: Duration,
    /// JSONL trace of the current session.
    pub trace: Option<PathBuf>,
}

impl ServeOptions {
    pub fn new(config: SessionConfig) -> Self {
        Self {
            config,
            grace: Duration::from_secs(30),
            oracle_every: Duration::from_millis(500),
            trace: None,
        }
    }
}

enum Inbound {
    Note(Symbol),
    Rho(Rho),
}

struct Shared {
    inbox: Mutex<Vec<Inbound>>,
    events: broadcast::Sender<String>,
    clients: AtomicUsize,
    alphabet: u32,
}

fn router(shared: Arc<Shared>) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(shared)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, opts: ServeOptions) -> io::Result<()> {
    opts.config.validate().map_err(io::Error::other)?;
    let (events, _) = broadcast::channel(4096);
    let shared = Arc::new(Shared {
        inbox: Mutex::new(Vec::new()),
        events,
        clients: AtomicUsize::new(0),
        alphabet: opts.config.alphabet_size,
    });
    let ticker = Ticker::new(opts, shared.clone()).map_err(io::Error::other)?;
    tokio::spawn(ticker.run());
    axum::serve(listener, router(shared)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    ws.on_upgrade(move |socket| client(socket, shared))
}

async fn client(socket: WebSocket, shared: Arc<Shared>) {
    let mut events = shared.events.subscribe();
    shared.clients.fetch_add(1, Ordering::SeqCst);
    let (mut tx, mut rx) = socket.split();
    loop {
        tokio::select! {
            msg = rx.next() => {
                let reply = match msg {
                    Some(Ok(Message::Text(text))) => accept(&shared, text.as_str()),
                    Some(Ok(Message::Binary(_))) => Some("binary frames are not supported".to_string()),
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => None,
                };
                if let Some(msg) = reply {
                    let frame = ServerFrame::Error { msg }.to_json();
                    if tx.send(Message::Text(frame.into())).await.is_err() {
                        break;
                    }
                }
            }
            event = events.recv() => match event {
                Ok(text) => {
                    if tx.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => {}
                Err(broadcast::error::RecvError::Closed) => break,
            },
        }
    }
    shared.clients.fetch_sub(1, Ordering::SeqCst);
}

/// Queues a valid frame; returns the error message for an invalid one.
fn accept(shared: &Shared, text: &str) -> Option<String> {
    let inbound = match parse_client_frame(text) {
        Ok(ClientFrame::Note { sym }) => match sym.symbol() {
            Ok(s) if s < shared.alphabet => Inbound::Note(s),
            Ok(s) => return Some(format!("note {s} is outside the alphabet of size {}", shared.alphabet)),
            Err(e) => return Some(e),
        },
        Ok(ClientFrame::Config { rho }) => Inbound::Rho(rho),
        Err(e) => return Some(e),
    };
    shared.inbox.lock().unwrap_or_else(|e| e.into_inner()).push(inbound);
    None
}

struct Ticker {
    opts: ServeOptions,
    shared: Arc<Shared>,
    session: Session,
    trace: Option<BufWriter<File>>,
    running: bool,
    alone_since: Option<Instant>,
    last_oracle: Option<Instant>,
    oracle_dirty: bool,
}

impl Ticker {
    fn new(opts: ServeOptions, shared: Arc<Shared>) -> Result<Self, SessionError> {
        let session = Session::new(opts.config.clone())?;
        Ok(Ticker {
            opts,
            shared,
            session,
            trace: None,
            running: false,
            alone_since: None,
            last_oracle: None,
            oracle_dirty: false,
        })
    }

    fn publish(&self, frame: ServerFrame) {
        // No receivers is fine.
        let _ = self.shared.events.send(frame.to_json());
    }

    fn reset(&mut self) -> Result<(), SessionError> {
        self.session = Session::new(self.opts.config.clone())?;
        self.trace = None;
        self.running = false;
        self.oracle_dirty = false;
        Ok(())
    }

    fn open_trace(&mut self) {
        if let Some(path) = &self.opts.trace {
            match File::create(path) {
                Ok(f) => self.trace = Some(BufWriter::new(f)),
                Err(e) => eprintln!("cannot write trace {}: {e}", path.display()),
            }
        }
    }

    async fn run(mut self) {
        let mut interval = tokio::time::interval(Duration::from_millis(self.opts.config.tick_ms));
        interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
        loop {
            interval.tick().await;
            if let Err(e) = self.tick() {
                self.publish(ServerFrame::Error { msg: e.to_string() });
            }
        }
    }

    fn tick(&mut self) -> Result<(), SessionError> {
        let clients = self.shared.clients.load(Ordering::SeqCst);
        if clients == 0 {
            let since = *self.alone_since.get_or_insert_with(Instant::now);
            if self.running && since.elapsed() >= self.opts.grace {
                self.reset()?;
            }
            if !self.running {
                return Ok(());
            }
        } else {
            self.alone_since = None;
            if !self.running {
                self.running = true;
                self.open_trace();
                self.publish(ServerFrame::Oracle {
                    snapshot: self.session.oracle().to_json(),
                });
            }
        }

        let inbound = std::mem::take(&mut *self.shared.inbox.lock().unwrap_or_else(|e| e.into_inner()));
        for msg in inbound {
            match msg {
                Inbound::Note(sym) => self.session.push_note(sym)?,
                Inbound::Rho(rho) => self.session.set_rho(rho)?,
            }
        }

        let record = self.session.step()?;
        for &(i, sym) in &record.learned {
            self.publish(ServerFrame::Learned { i, sym });
            self.oracle_dirty = true;
        }
        if let (Some(sym), true) = (record.out, record.branch != Branch::Blocked) {
            self.publish(ServerFrame::Out {
                unit: record.unit,
                sym,
                branch: record.branch,
            });
        }
        let due = self.last_oracle.is_none_or(|t| t.elapsed() >= self.opts.oracle_every);
        if self.oracle_dirty && due {
            self.publish(ServerFrame::Oracle {
                snapshot: self.session.oracle().to_json(),
            });
            self.last_oracle = Some(Instant::now());
            self.oracle_dirty = false;
        }
        if let Some(w) = &mut self.trace {
            if let Err(e) = write_record(&mut *w, &record).and_then(|_| w.flush()) {
                eprintln!("trace write failed: {e}");
                self.trace = None;
            }
        }
        Ok(())
    }
}
