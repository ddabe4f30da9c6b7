use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geotrack::ingest::{parse_trace_csv, read_nmea, write_trace_csv};
use geotrack::stream::{replay_serve, ReplayConfig, TrackSession, DEFAULT_LISTEN};
use geotrack::{
    comparison_table, error_series, filter_trace, to_geojson, to_series_csv, Error, FilterKind,
    FilterParams, GeoPosition, GpsFix, ReportBundle, Trace, TraceMeta,
};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  invalid command line (unknown flag, bad value)
  3  file could not be read or written
  4  input could not be parsed (CSV schema/row, NMEA sentence, metadata)
  5  invalid value (coordinates, filter parameters, mismatched series)
  6  empty input (no fixes to analyze)
  7  network failure (cannot listen or connect)

Set RUST_LOG=info (or debug) for progress messages.";

#[derive(Parser, Debug)]
#[command(name = "geotrack", version, about = "Filter noisy GPS traces and measure their error", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert an NMEA log or CSV trace into the canonical CSV format.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Output CSV; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the filtered positions of a trace as canonical CSV.
    Filter {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = Kind::Kalman)]
        kind: Kind,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare receiver, Kalman and Average error margins.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Also write per-record error margins as CSV.
        #[arg(long)]
        series_out: Option<PathBuf>,
    },
    /// Export the reference point, fixes and filtered tracks as GeoJSON.
    Geojson {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Filtered tracks to include.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Kind::Kalman, Kind::Average])]
        kinds: Vec<Kind>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serve a trace as GGA sentences over TCP, one connection per client.
    Replay {
        #[command(flatten)]
        input: InputArgs,
        /// Sentences per second.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        /// Restart from the first fix instead of closing after the last.
        #[arg(long = "loop")]
        loop_forever: bool,
        #[arg(long, default_value = DEFAULT_LISTEN)]
        listen: String,
    },
    /// Connect to a replay server and filter its fixes as they arrive.
    Track {
        #[arg(long, default_value = DEFAULT_LISTEN)]
        connect: String,
        /// Reference point as `lat,lon`.
        #[arg(long = "ref", value_name = "LAT,LON", allow_hyphen_values = true)]
        reference: GeoPosition,
        #[arg(long, value_enum, default_value_t = Kind::Kalman)]
        kind: Kind,
        #[command(flatten)]
        params: ParamArgs,
        /// Append per-fix error margins here, flushed after every fix.
        #[arg(long)]
        sink: Option<PathBuf>,
        /// Write the final overlay as GeoJSON.
        #[arg(long)]
        geojson: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Trace file: canonical CSV, or an NMEA log (.nmea/.log/.txt).
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    format: Format,
    /// Reference point as `lat,lon`. Defaults to the `<stem>.meta.json`
    /// sidecar next to the input.
    #[arg(long = "ref", value_name = "LAT,LON", allow_hyphen_values = true)]
    reference: Option<GeoPosition>,
    /// Drop fixes computed from fewer than three satellites.
    #[arg(long)]
    usable_only: bool,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Kalman measurement noise.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Kalman initial error covariance.
    #[arg(long, default_value_t = 4.0)]
    p0: f64,
}

impl ParamArgs {
    fn with(&self, kind: Kind) -> FilterParams {
        FilterParams {
            r: self.r,
            p0: self.p0,
            kind: kind.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Kalman,
    Average,
}

impl From<Kind> for FilterKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Kalman => FilterKind::Kalman,
            Kind::Average => FilterKind::Average,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Auto,
    Csv,
    Nmea,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    File { path: PathBuf, source: io::Error },
    NoReference(PathBuf),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::File { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::NoReference(input) => write!(
                f,
                "no reference point: pass --ref LAT,LON or provide {}",
                TraceMeta::sidecar_path(input).display()
            ),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::File { .. } => 3,
            CliError::NoReference(_) => 5,
            CliError::Core(e) => match e {
                Error::Io(_) => 3,
                Error::Checksum { .. }
                | Error::Field { .. }
                | Error::Sentence(_)
                | Error::UnsupportedSentence(_)
                | Error::NoFix
                | Error::Schema(_)
                | Error::Row { .. }
                | Error::Metadata(_) => 4,
                Error::InvalidArgument(_)
                | Error::InvalidParameter(_)
                | Error::Validation(_)
                | Error::Shape { .. } => 5,
                Error::EmptyInput(_) => 6,
                Error::Bind { .. } | Error::Connect { .. } => 7,
            },
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write_output(path: Option<&Path>, content: &str) -> CliResult {
    match path {
        None => io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Core(e.into())),
        Some(p) => fs::write(p, content).map_err(|source| CliError::File {
            path: p.to_path_buf(),
            source,
        }),
    }
}

fn is_nmea(path: &Path, format: Format) -> bool {
    match format {
        Format::Csv => false,
        Format::Nmea => true,
        Format::Auto => matches!(
            path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
            Some("nmea" | "log" | "txt")
        ),
    }
}

/// Loads the input trace. Without a reference, the sidecar is required
/// unless `placeholder_ok`, in which case the first fix stands in.
fn load_trace(args: &InputArgs, placeholder_ok: bool) -> CliResult<Trace> {
    let sidecar = TraceMeta::sidecar_path(&args.input);
    let meta = if sidecar.exists() {
        Some(TraceMeta::load(&sidecar)?)
    } else {
        None
    };
    let reference = args.reference.or(meta.as_ref().map(|m| m.reference));
    let label = meta.map(|m| m.label).unwrap_or_default();
    let fallback = GeoPosition::new(0.0, 0.0)?;

    let bytes = read_file(&args.input)?;
    let mut trace = if is_nmea(&args.input, args.format) {
        let log = read_nmea(BufReader::new(bytes.as_slice()), reference.unwrap_or(fallback))?;
        log::info!(
            "{}: {} fixes, {} corrupted, {} skipped, {} without fix",
            args.input.display(),
            log.stats.fixes,
            log.stats.corrupted,
            log.stats.skipped,
            log.stats.no_fix
        );
        log.trace
    } else {
        parse_trace_csv(&bytes, reference.unwrap_or(fallback))?
    };

    if reference.is_none() {
        if !placeholder_ok {
            return Err(CliError::NoReference(args.input.clone()));
        }
        let first = trace.fixes().first().map(|f| f.position).unwrap_or(fallback);
        trace = Trace::new(trace.fixes().to_vec(), first, "")?;
    }
    if args.usable_only {
        trace = trace.usable_only();
    }
    Ok(trace.with_label(label))
}

fn write_sidecar(output: Option<&Path>, trace: &Trace) -> CliResult {
    if let Some(path) = output {
        let meta = TraceMeta {
            label: trace.label().to_string(),
            reference: trace.reference(),
        };
        write_output(Some(&TraceMeta::sidecar_path(path)), &meta.to_json())?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Ingest { input, output } => {
            let trace = load_trace(&input, false)?;
            write_output(output.as_deref(), &write_trace_csv(&trace))?;
            write_sidecar(output.as_deref(), &trace)
        }
        Command::Filter {
            input,
            kind,
            params,
            output,
        } => {
            let trace = load_trace(&input, false)?;
            let filtered = filter_trace(&trace, &params.with(kind))?;
            let errors = error_series(&filtered, trace.reference(), FilterKind::from(kind).label())?;
            let fixes = trace
                .fixes()
                .iter()
                .zip(&filtered)
                .zip(&errors.values)
                .map(|((fix, &position), &err)| GpsFix {
                    position,
                    published_error_m: Some(err),
                    ..fix.clone()
                })
                .collect();
            let out = Trace::new(fixes, trace.reference(), trace.label())?;
            write_output(output.as_deref(), &write_trace_csv(&out))?;
            write_sidecar(output.as_deref(), &out)
        }
        Command::Analyze {
            input,
            params,
            series_out,
        } => {
            let trace = load_trace(&input, false)?;
            let bundle = ReportBundle::build(&trace, &[params.with(Kind::Kalman), params.with(Kind::Average)])?;
            if let Some(path) = series_out {
                write_output(Some(&path), &to_series_csv(&bundle))?;
            }
            write_output(None, &comparison_table(&bundle))
        }
        Command::Geojson {
            input,
            params,
            kinds,
            output,
        } => {
            let trace = load_trace(&input, false)?;
            let all: Vec<FilterParams> = kinds.iter().map(|&k| params.with(k)).collect();
            let bundle = ReportBundle::build(&trace, &all)?;
            write_output(output.as_deref(), &to_geojson(&bundle))
        }
        Command::Replay {
            input,
            rate,
            loop_forever,
            listen,
        } => {
            let trace = load_trace(&input, true)?;
            let config = ReplayConfig {
                rate_hz: rate,
                loop_forever,
                listen,
            };
            eprintln!("replaying {} fixes at {rate} Hz on {}", trace.len(), config.listen);
            Ok(replay_serve(&trace, &config)?)
        }
        Command::Track {
            connect,
            reference,
            kind,
            params,
            sink,
            geojson,
        } => {
            let mut session = TrackSession::new(connect, params.with(kind), reference);
            let mut sink_file = match &sink {
                Some(path) => Some(File::create(path).map_err(|source| CliError::File {
                    path: path.clone(),
                    source,
                })?),
                None => None,
            };
            let outcome = session.run(sink_file.as_mut().map(|f| f as &mut dyn Write))?;
            let stats = outcome.stats;
            eprintln!(
                "received {} fixes ({} corrupted, {} skipped)",
                stats.fixes, stats.corrupted, stats.skipped
            );
            if let Some(path) = geojson {
                write_output(Some(&path), &to_geojson(&outcome.bundle))?;
            }
            write_output(None, &comparison_table(&outcome.bundle))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geotrack: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
