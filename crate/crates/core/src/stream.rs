//! TCP replay of a recorded trace as GGA sentences, and a live tracker
//! that filters such a feed as it arrives.
//!
//! The wire format is plain NMEA-0183: ASCII lines terminated by `\r\n`.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::filters::{FilterParams, PositionFilter};
use crate::geodesy::{haversine_distance, GeoPosition};
use crate::ingest::{format_gga, FixAssembler, IngestStats, LineOutcome, Trace};
use crate::report::{series_csv_header, series_csv_row, ReportBundle};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:10110";

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayConfig {
    /// Sentences per second.
    pub rate_hz: f64,
    /// Restart from the first fix after the last one instead of closing.
    pub loop_forever: bool,
    pub listen: String,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig {
            rate_hz: 1.0,
            loop_forever: false,
            listen: DEFAULT_LISTEN.to_string(),
        }
    }
}

impl ReplayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rate must be > 0 Hz, got {}",
                self.rate_hz
            )));
        }
        Ok(())
    }

    fn period(&self) -> Duration {
        Duration::from_secs_f64(1.0 / self.rate_hz)
    }
}

struct Shared {
    sentences: Vec<String>,
    period: Duration,
    loop_forever: bool,
    /// Set once a session has delivered the whole trace (non-looping mode).
    finished: AtomicBool,
    shutdown: AtomicBool,
}

/// A bound replay server. Each connection gets its own pass over the trace
/// from the first fix. Without looping, the replay is over once any session
/// has delivered every fix; later connections are closed without data.
pub struct ReplayServer {
    listener: TcpListener,
    addr: SocketAddr,
    shared: Arc<Shared>,
}

impl ReplayServer {
    pub fn bind(trace: &Trace, config: &ReplayConfig) -> Result<Self> {
        config.validate()?;
        if trace.is_empty() {
            return Err(Error::EmptyInput("nothing to replay"));
        }
        let listener = TcpListener::bind(&config.listen).map_err(|source| Error::Bind {
            addr: config.listen.clone(),
            source,
        })?;
        let addr = listener.local_addr()?;
        let sentences = trace.fixes().iter().map(format_gga).collect();
        Ok(ReplayServer {
            listener,
            addr,
            shared: Arc::new(Shared {
                sentences,
                period: config.period(),
                loop_forever: config.loop_forever,
                finished: AtomicBool::new(false),
                shutdown: AtomicBool::new(false),
            }),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Accepts connections until stopped through a [`ReplayHandle`].
    pub fn serve(self) -> Result<()> {
        let mut sessions: Vec<JoinHandle<()>> = Vec::new();
        for conn in self.listener.incoming() {
            if self.shared.shutdown.load(Ordering::SeqCst) {
                break;
            }
            let stream = match conn {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            let shared = Arc::clone(&self.shared);
            sessions.retain(|h| !h.is_finished());
            sessions.push(thread::spawn(move || match run_session(stream, &shared) {
                Ok(sent) => log::info!("{peer}: session ended after {sent} sentences"),
                Err(e) => log::debug!("{peer}: session dropped: {e}"),
            }));
        }
        for h in sessions {
            let _ = h.join();
        }
        Ok(())
    }

    pub fn spawn(self) -> ReplayHandle {
        let addr = self.addr;
        let shared = Arc::clone(&self.shared);
        let thread = thread::spawn(move || self.serve());
        ReplayHandle {
            addr,
            shared,
            thread: Some(thread),
        }
    }
}

fn run_session(mut stream: TcpStream, shared: &Shared) -> io::Result<usize> {
    if !shared.loop_forever && shared.finished.load(Ordering::SeqCst) {
        stream.shutdown(Shutdown::Both)?;
        return Ok(0);
    }
    stream.set_nodelay(true)?;
    let start = Instant::now();
    let mut sent = 0usize;
    loop {
        for sentence in &shared.sentences {
            if shared.shutdown.load(Ordering::SeqCst) {
                return Ok(sent);
            }
            sleep_until(start + shared.period * sent as u32);
            stream.write_all(sentence.as_bytes())?;
            stream.write_all(b"\r\n")?;
            stream.flush()?;
            sent += 1;
        }
        if !shared.loop_forever {
            break;
        }
    }
    shared.finished.store(true, Ordering::SeqCst);
    // Hold the last fix for one period so n fixes span n periods.
    sleep_until(start + shared.period * sent as u32);
    stream.shutdown(Shutdown::Both)?;
    Ok(sent)
}

fn sleep_until(deadline: Instant) {
    let now = Instant::now();
    if deadline > now {
        thread::sleep(deadline - now);
    }
}

/// Running server; dropping it stops the server.
pub struct ReplayHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    thread: Option<JoinHandle<Result<()>>>,
}

impl ReplayHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) -> Result<()> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> Result<()> {
        let Some(thread) = self.thread.take() else {
            return Ok(());
        };
        self.shared.shutdown.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        thread.join().expect("replay server thread panicked")
    }
}

impl Drop for ReplayHandle {
    fn drop(&mut self) {
        let _ = self.stop_inner();
    }
}

/// Blocks serving `trace` until the process is stopped.
pub fn replay_serve(trace: &Trace, config: &ReplayConfig) -> Result<()> {
    let server = ReplayServer::bind(trace, config)?;
    log::info!("replaying {} fixes on {}", trace.len(), server.local_addr());
    server.serve()
}

/// A live tracking client. Filter state lives inside [`TrackSession::run`]
/// and is never shared.
#[derive(Clone, Debug)]
pub struct TrackSession {
    pub connect: String,
    pub params: FilterParams,
    pub reference: GeoPosition,
    received: usize,
}

#[derive(Clone, Debug)]
pub struct LiveOutcome {
    pub bundle: ReportBundle,
    pub stats: IngestStats,
}

impl TrackSession {
    pub fn new(connect: impl Into<String>, params: FilterParams, reference: GeoPosition) -> Self {
        TrackSession {
            connect: connect.into(),
            params,
            reference,
            received: 0,
        }
    }

    /// Fixes accepted so far.
    pub fn received(&self) -> usize {
        self.received
    }

    /// Connects, tracks until the server closes the stream, and returns
    /// the same bundle the offline pipeline builds for the received fixes.
    pub fn run(&mut self, sink: Option<&mut dyn Write>) -> Result<LiveOutcome> {
        self.params.validate()?;
        let stream = TcpStream::connect(&self.connect).map_err(|source| Error::Connect {
            addr: self.connect.clone(),
            source,
        })?;
        self.track_reader(BufReader::new(stream), sink)
    }

    /// Tracks any line source; [`TrackSession::run`] feeds it a socket.
    pub fn track_reader<R: BufRead>(
        &mut self,
        mut reader: R,
        mut sink: Option<&mut dyn Write>,
    ) -> Result<LiveOutcome> {
        let mut filter = PositionFilter::new(self.params)?;
        let mut assembler = FixAssembler::new();
        let mut fixes = Vec::new();
        let mut estimates = Vec::new();

        if let Some(out) = sink.as_deref_mut() {
            writeln!(out, "{}", series_csv_header(&[self.params.kind]))?;
            out.flush()?;
        }

        let mut buf = Vec::new();
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            let line = String::from_utf8_lossy(&buf);
            let fix = match assembler.accept(&line) {
                LineOutcome::Fix(fix) => fix,
                LineOutcome::Corrupted(why) => {
                    log::warn!("skipping corrupted sentence: {why}");
                    continue;
                }
                _ => continue,
            };
            let estimate = filter.push(fix.position)?;
            self.received += 1;

            if let Some(out) = sink.as_deref_mut() {
                let raw_m = haversine_distance(fix.position, self.reference);
                let filtered_m = haversine_distance(estimate, self.reference);
                writeln!(out, "{}", series_csv_row(fix.record_id, raw_m, &[filtered_m]))?;
                out.flush()?;
            }
            fixes.push(fix);
            estimates.push(estimate);
        }

        let stats = assembler.stats();
        if fixes.is_empty() {
            return Err(Error::EmptyInput("stream delivered no fixes"));
        }
        let trace = Trace::new(fixes, self.reference, format!("live {}", self.connect))?;
        let bundle = ReportBundle::from_filtered(trace, vec![(self.params.kind, estimates)])?;
        Ok(LiveOutcome { bundle, stats })
    }
}

pub fn track_live(session: &mut TrackSession, sink: Option<&mut dyn Write>) -> Result<LiveOutcome> {
    session.run(sink)
}
