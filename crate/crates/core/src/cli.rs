//! Command-line front end: flag and config-file resolution, sweep dispatch
//! and CSV output.
//!
//! Values resolve as defaults < config file < flags. The config file is
//! flat `key = value` text using the long flag names as keys; `#` starts a
//! comment line. Every CSV starts with the resolved settings as `# key = value`
//! comment lines, so stripping the `# ` prefix yields a config file that
//! reproduces the run.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::Parser;

use crate::harness::{run_sweep, SweepResult, SweepSpec};
use crate::relaying::{Protocol, ScenarioConfig, SelectionScheme, Structure};

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 2,
    Runtime = 3,
    Io = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// `--help` / `--version` output; not a failure.
    #[error("{0}")]
    Display(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("runtime: {0}")]
    Runtime(#[from] crate::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Display(_) => ExitStatus::Success,
            CliError::Usage(_) => ExitStatus::Usage,
            CliError::Config(_) | CliError::Runtime(_) => ExitStatus::Runtime,
            CliError::Io(_) => ExitStatus::Io,
        }
    }
}

/// Monte Carlo link-level simulator for relay-assisted OFDM-IM.
#[derive(Debug, Parser)]
#[command(name = "relay-ofdm-im", version, about)]
struct Flags {
    /// Network structure: p2p, serial, parallel or cr.
    #[arg(long)]
    structure: Option<Structure>,
    /// Forwarding protocol: df, af-vg or af-fg.
    #[arg(long)]
    protocol: Option<Protocol>,
    /// Relay selection: none, prs, bulk or ps (parallel only).
    #[arg(long)]
    rs: Option<SelectionScheme>,
    /// Number of hops L.
    #[arg(long, alias = "L")]
    hops: Option<usize>,
    /// Relays per hop T.
    #[arg(long, alias = "T")]
    relays: Option<usize>,
    /// Subcarriers per group N.
    #[arg(long)]
    subcarriers: Option<usize>,
    /// Active subcarriers K.
    #[arg(long)]
    active: Option<usize>,
    /// PSK order M.
    #[arg(long)]
    psk: Option<usize>,
    /// Source-destination distance in meters.
    #[arg(long, value_name = "METERS")]
    dsd: Option<f64>,
    /// Path-loss exponent.
    #[arg(long, value_name = "A")]
    alpha: Option<f64>,
    /// Transmit-power grid in dB relative to the noise power.
    #[arg(long = "pt-db", value_name = "START:STOP:STEP")]
    pt_db: Option<String>,
    /// Trials per grid point.
    #[arg(long, value_name = "COUNT")]
    trials: Option<u64>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "COUNT")]
    workers: Option<usize>,
    /// Output CSV path (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Noise power per subcarrier.
    #[arg(long = "noise-var")]
    noise_var: Option<f64>,
    /// Outage SNR threshold (linear).
    #[arg(long = "outage-threshold")]
    outage_threshold: Option<f64>,
}

/// Inclusive transmit-power grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PowerGrid {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| format!("malformed grid `{text}`"))?;
        let grid = match nums[..] {
            [single] => PowerGrid { start: single, stop: single, step: 1.0 },
            [start, stop, step] => PowerGrid { start, stop, step },
            _ => return Err(format!("grid `{text}` must be START:STOP:STEP")),
        };
        if !(grid.start.is_finite() && grid.stop.is_finite() && grid.step.is_finite()) {
            return Err(format!("grid `{text}` has non-finite values"));
        }
        if grid.step <= 0.0 || grid.stop < grid.start {
            return Err(format!("grid `{text}` needs STEP > 0 and STOP >= START"));
        }
        if (grid.stop - grid.start) / grid.step > 1e6 {
            return Err(format!("grid `{text}` has too many points"));
        }
        Ok(grid)
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl std::fmt::Display for PowerGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub structure: Structure,
    pub protocol: Protocol,
    pub rs: SelectionScheme,
    /// Unset means "natural for the structure": 1 for p2p, 2 otherwise.
    pub hops: Option<usize>,
    pub relays: usize,
    pub subcarriers: usize,
    pub active: usize,
    pub psk: usize,
    pub dsd: f64,
    pub alpha: f64,
    pub noise_var: f64,
    pub outage_threshold: f64,
    pub pt_db: PowerGrid,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        let base = ScenarioConfig::default();
        Settings {
            structure: base.structure,
            protocol: base.protocol,
            rs: base.selection,
            hops: None,
            relays: base.relays,
            subcarriers: base.subcarriers,
            active: base.active,
            psk: base.psk_order,
            dsd: base.d_sd,
            alpha: base.alpha,
            noise_var: base.noise_var,
            outage_threshold: base.outage_threshold,
            pt_db: PowerGrid { start: 0.0, stop: 40.0, step: 5.0 },
            trials: 100_000,
            seed: 1,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: None,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("bad value `{value}` for `{key}`: {e}"))
}

impl Settings {
    /// Sets one parameter from its flag name and textual value.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "structure" => self.structure = parse_value(key, value)?,
            "protocol" => self.protocol = parse_value(key, value)?,
            "rs" => self.rs = parse_value(key, value)?,
            "hops" | "L" => self.hops = Some(parse_value(key, value)?),
            "relays" | "T" => self.relays = parse_value(key, value)?,
            "subcarriers" => self.subcarriers = parse_value(key, value)?,
            "active" => self.active = parse_value(key, value)?,
            "psk" => self.psk = parse_value(key, value)?,
            "dsd" => self.dsd = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "noise-var" => self.noise_var = parse_value(key, value)?,
            "outage-threshold" => self.outage_threshold = parse_value(key, value)?,
            "pt-db" => self.pt_db = PowerGrid::parse(value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "workers" => self.workers = parse_value(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            // Informational manifest lines.
            "tool" | "timestamp" => {}
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file.
    pub fn apply_config_text(&mut self, text: &str) -> Result<(), String> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            self.apply(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(())
    }

    pub fn resolved_hops(&self) -> usize {
        self.hops.unwrap_or(match self.structure {
            Structure::PointToPoint => 1,
            _ => 2,
        })
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            structure: self.structure,
            protocol: self.protocol,
            selection: self.rs,
            hops: self.resolved_hops(),
            relays: self.relays,
            subcarriers: self.subcarriers,
            active: self.active,
            psk_order: self.psk,
            pt: 1.0,
            alpha: self.alpha,
            d_sd: self.dsd,
            noise_var: self.noise_var,
            outage_threshold: self.outage_threshold,
        }
    }

    /// `key = value` lines accepted back by [`Settings::apply_config_text`].
    pub fn to_config_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("structure = {}", self.structure),
            format!("protocol = {}", self.protocol),
            format!("rs = {}", self.rs),
            format!("hops = {}", self.resolved_hops()),
            format!("relays = {}", self.relays),
            format!("subcarriers = {}", self.subcarriers),
            format!("active = {}", self.active),
            format!("psk = {}", self.psk),
            format!("dsd = {}", self.dsd),
            format!("alpha = {}", self.alpha),
            format!("noise-var = {}", self.noise_var),
            format!("outage-threshold = {}", self.outage_threshold),
            format!("pt-db = {}", self.pt_db),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.seed),
            format!("workers = {}", self.workers),
        ];
        if let Some(out) = &self.out {
            lines.push(format!("out = {}", out.display()));
        }
        lines
    }
}

/// Everything needed to run, and later reproduce, one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub settings: Settings,
    pub spec: SweepSpec,
    pub version: String,
    /// Seconds since the Unix epoch at parse time.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn from_settings(settings: Settings) -> Result<Self, CliError> {
        let config = settings.scenario_config();
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        crate::modem::ImModem::new(config.subcarriers, config.active, config.psk_order)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if settings.trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        if settings.workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        let spec = SweepSpec {
            config,
            pt_grid_db: settings.pt_db.points(),
            trials_per_point: settings.trials,
            master_seed: settings.seed,
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(RunManifest {
            settings,
            spec,
            version: TOOL.to_string(),
            timestamp,
        })
    }
}

/// Resolves defaults, the optional config file and flags into a manifest.
pub fn parse_args<I, T>(argv: I) -> Result<RunManifest, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = Flags::try_parse_from(argv).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Display(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;

    let mut settings = Settings::default();
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        // A previous run's CSV doubles as a config file.
        let text = if is_csv_output(&text) { manifest_text(&text) } else { text };
        settings
            .apply_config_text(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }

    let overrides: [(&str, Option<String>); 17] = [
        ("structure", flags.structure.map(|v| v.to_string())),
        ("protocol", flags.protocol.map(|v| v.to_string())),
        ("rs", flags.rs.map(|v| v.to_string())),
        ("hops", flags.hops.map(|v| v.to_string())),
        ("relays", flags.relays.map(|v| v.to_string())),
        ("subcarriers", flags.subcarriers.map(|v| v.to_string())),
        ("active", flags.active.map(|v| v.to_string())),
        ("psk", flags.psk.map(|v| v.to_string())),
        ("dsd", flags.dsd.map(|v| v.to_string())),
        ("alpha", flags.alpha.map(|v| v.to_string())),
        ("noise-var", flags.noise_var.map(|v| v.to_string())),
        ("outage-threshold", flags.outage_threshold.map(|v| v.to_string())),
        ("pt-db", flags.pt_db),
        ("trials", flags.trials.map(|v| v.to_string())),
        ("seed", flags.seed.map(|v| v.to_string())),
        ("workers", flags.workers.map(|v| v.to_string())),
        ("out", flags.out.map(|p| p.display().to_string())),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            settings
                .apply(key, &value)
                .map_err(|e| CliError::Usage(format!("--{key}: {e}")))?;
        }
    }
    RunManifest::from_settings(settings)
}

/// Recovers the settings embedded in a CSV written by [`emit_csv`].
pub fn settings_from_csv(csv: &str) -> Result<Settings, CliError> {
    let mut settings = Settings::default();
    settings.apply_config_text(&manifest_text(csv)).map_err(CliError::Config)?;
    Ok(settings)
}

fn is_csv_output(text: &str) -> bool {
    text.starts_with("# tool = ")
}

fn manifest_text(csv: &str) -> String {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        })
}

/// `%g`-style formatting with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{:.*}", (5 - exp) as usize, x))
    }
}

const COLUMNS: [&str; 17] = [
    "structure", "protocol", "rs_scheme", "L", "T", "N", "K", "M", "pt_db", "trials", "bler",
    "bler_ci95", "ber", "ber_ci95", "op", "op_ci95", "throughput_bpcu",
];

/// Writes the manifest comments, header and one row per grid point.
pub fn emit_csv<W: Write>(result: &SweepResult, manifest: &RunManifest, sink: &mut W) -> io::Result<()> {
    if result.points.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty sweep result"));
    }
    let mut text = String::new();
    let _ = writeln!(text, "# tool = {}", manifest.version);
    let _ = writeln!(text, "# timestamp = {}", manifest.timestamp);
    for line in manifest.settings.to_config_lines() {
        let _ = writeln!(text, "# {line}");
    }
    let cfg = &manifest.spec.config;
    let overlay = cfg.structure == Structure::CrOverlay;
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if overlay {
        header.extend(["primary_ber", "secondary_ber"]);
    }
    header.push("seed");
    let _ = writeln!(text, "{}", header.join(","));

    for point in &result.points {
        let s = &point.summary;
        let mut row = vec![
            cfg.structure.to_string(),
            cfg.protocol.to_string(),
            cfg.selection.to_string(),
            cfg.hops.to_string(),
            cfg.relays.to_string(),
            cfg.subcarriers.to_string(),
            cfg.active.to_string(),
            cfg.psk_order.to_string(),
            point.pt_db.to_string(),
            s.trials.to_string(),
        ];
        for p in [s.bler, s.ber, s.op] {
            row.push(format_sig6(p.estimate));
            row.push(format_sig6(p.ci95));
        }
        row.push(format_sig6(s.throughput));
        if let Some(o) = &s.overlay {
            row.push(format_sig6(o.primary_ber.estimate));
            row.push(format_sig6(o.secondary_ber.estimate));
        }
        row.push(manifest.spec.master_seed.to_string());
        let _ = writeln!(text, "{}", row.join(","));
    }
    sink.write_all(text.as_bytes())?;
    sink.flush()
}

/// Parses, runs and writes; returns the process exit status.
pub fn run<I, T>(argv: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match try_run(argv) {
        Ok(()) => ExitStatus::Success,
        Err(CliError::Display(text)) => {
            print!("{text}");
            ExitStatus::Success
        }
        Err(e) => {
            eprintln!("relay-ofdm-im: {e}");
            e.status()
        }
    }
}

fn try_run<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let manifest = parse_args(argv)?;
    let result = run_sweep(&manifest.spec, manifest.settings.workers)?;
    let write = |sink: &mut dyn Write| emit_csv(&result, &manifest, &mut io::BufWriter::new(sink));
    match &manifest.settings.out {
        Some(path) => {
            let mut file = fs::File::create(path)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
            write(&mut file)
        }
        None => write(&mut io::stdout().lock()),
    }
    .map_err(|e| CliError::Io(e.to_string()))
}
