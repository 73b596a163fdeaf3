//! `fragkey` — command-line harness for the fragment-synthesis key
//! distribution simulator.
//!
//! Subcommands: `run` one protocol session, `sweep` sampling-ratio recovery
//! limits, `attacks` detection-rate tables, `export` a saved transcript as a
//! readable report. Every invocation prints the exact configuration it ran,
//! so any result can be reproduced from its output alone.

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fragkey_core::rng::mix_seed;
use fragkey_core::*;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fragkey",
    version,
    about = "Simulator of a ghost-imaging key distribution protocol with fragment-synthesis authentication",
    after_help = "Exit codes: 0 = Authentic (or plain success), 2 = Attacked verdict, 1 = error.\n\
                  FRAGKEY_SEED supplies the seed when --seed is not given."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol session and report the verdict and keys
    Run(RunArgs),
    /// Sweep sampling ratios and estimate exact-recovery limits
    Sweep(SweepArgs),
    /// Measure detection rates for every attack kind plus a clean control
    Attacks(AttacksArgs),
    /// Render a saved transcript JSON as a human-readable report
    Export(ExportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// 4 users, 8x8 rhombus, nu=8, N=4096, smoothing: recovery is exact
    Oversampled,
    /// 3 users, sorting method at N=286: the regime the attack tables use
    AttackDemo,
}

#[derive(Args)]
struct RunArgs {
    /// Start from a named configuration instead of the oversampled default
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Load the session configuration from a JSON file (flags still override)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of users the parent pattern is split among
    #[arg(long)]
    users: Option<usize>,
    /// Parent pattern width in cells
    #[arg(long)]
    width: Option<usize>,
    /// Parent pattern height in cells
    #[arg(long)]
    height: Option<usize>,
    /// Upsampling factor (detector resolution = pattern cells x nu)
    #[arg(long)]
    nu: Option<usize>,
    /// Length of each user's bucket sequence
    #[arg(long)]
    measurements: Option<usize>,
    /// Parent pattern shape: rhombus, rectangle, cross, checker
    #[arg(long)]
    shape: Option<Shape>,
    /// Dark:bright cell ratio of the parent, e.g. 13:3
    #[arg(long)]
    ratio: Option<Ratio>,
    /// Binarization method: smoothing or sorting
    #[arg(long)]
    method: Option<MethodChoice>,
    /// Fragment split mode: uniform or balanced
    #[arg(long)]
    split: Option<SplitMode>,
    /// Master seed (precedence: this flag, then FRAGKEY_SEED, then preset)
    #[arg(long)]
    seed: Option<u64>,
    /// Detector noise std as a fraction of the mean bucket value
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Absolute detector noise std added on top of the relative term
    #[arg(long)]
    noise_floor: Option<f64>,
    /// Illumination profile: flat, center:<strength>, or a CSV file path
    #[arg(long)]
    source_profile: Option<SourceProfile>,
    /// Symbol alphabet the per-user key libraries draw from
    #[arg(long)]
    key_alphabet: Option<String>,
    /// Read key symbols at the fragment's dark cells instead of bright ones
    #[arg(long)]
    index_dark: bool,
    /// On a short bucket sequence, reconstruct from the prefix instead of
    /// conceding the fragment (the length mismatch is still evidence)
    #[arg(long)]
    truncate_on_length_mismatch: bool,
    /// Manipulate one user's public bucket sequence before reconstruction
    #[arg(long)]
    attack: Option<AttackKind>,
    /// Fraction of bucket values the attack touches (0, 1]
    #[arg(long, requires = "attack")]
    attack_fraction: Option<f64>,
    /// Index of the user whose sequence is attacked
    #[arg(long, requires = "attack")]
    attack_user: Option<usize>,
    /// Seed of the attacker's own randomness (default: derived from --seed)
    #[arg(long, requires = "attack")]
    attack_seed: Option<u64>,
    /// Write the full session transcript as JSON
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write each extracted key to <dir>/user<j>.key
    #[arg(long)]
    keys_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Upsampling factor
    #[arg(long, default_value_t = 8)]
    nu: usize,
    /// Comma-separated dark:bright ratios, one sweep series each
    #[arg(long, value_delimiter = ',', default_value = "1:1,13:3,31:2")]
    ratios: Vec<Ratio>,
    /// First sampling ratio in percent of the detector pixel count
    #[arg(long, default_value_t = 1)]
    from: u32,
    /// Last sampling ratio in percent (may exceed 100 to oversample)
    #[arg(long, default_value_t = 40)]
    to: u32,
    /// Grid step in percent
    #[arg(long, default_value_t = 1)]
    step: u32,
    /// Seeded trials per grid point
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Success rate defining the reported limit
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Pattern shape for every series
    #[arg(long, default_value = "rhombus")]
    shape: Shape,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 8)]
    height: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_floor: f64,
    /// Illumination profile: flat, center:<strength>, or a CSV file path
    #[arg(long, default_value = "flat")]
    source_profile: SourceProfile,
    /// Write the results table as CSV (default: print to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write gnuplot-ready data (one index block per series)
    #[arg(long)]
    dat: Option<PathBuf>,
}

#[derive(Args)]
struct AttacksArgs {
    /// Seeded sessions per attack kind
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Fraction of bucket values each attack touches
    #[arg(long, default_value_t = 0.01)]
    fraction: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the demo session's user count
    #[arg(long)]
    users: Option<usize>,
    /// Override the demo session's bucket-sequence length
    #[arg(long)]
    measurements: Option<usize>,
    /// Index of the attacked user
    #[arg(long)]
    attack_user: Option<usize>,
    /// Sequence length of the no-attack control row
    #[arg(long, default_value_t = 4096)]
    control_measurements: usize,
    /// Write the detection table as CSV (default: print to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save one example transcript per row into this directory
    #[arg(long)]
    transcripts_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Transcript JSON produced by `fragkey run --out`
    #[arg(long)]
    transcript: PathBuf,
}

fn main() -> ExitCode {
    // die quietly when a pager or `head` closes the pipe instead of
    // panicking mid-report
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code: u8 = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Attacks(args) => cmd_attacks(args),
        Command::Export(args) => cmd_export(args),
    }
}

/// Seed precedence: explicit flag, then FRAGKEY_SEED, then None (caller's
/// default stands).
fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("FRAGKEY_SEED") {
        Ok(v) => Ok(Some(
            v.trim()
                .parse()
                .with_context(|| format!("FRAGKEY_SEED must be an unsigned integer, got {v:?}"))?,
        )),
        Err(_) => Ok(None),
    }
}

fn build_session_config(a: &RunArgs) -> Result<SessionConfig> {
    let mut cfg = if let Some(path) = &a.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?
    } else {
        match a.preset {
            Some(Preset::AttackDemo) => attack_demo_config(0),
            _ => oversampled_config(0),
        }
    };

    if let Some(v) = a.users {
        cfg.users = v;
    }
    if let Some(v) = a.width {
        cfg.width = v;
    }
    if let Some(v) = a.height {
        cfg.height = v;
    }
    if let Some(v) = a.nu {
        cfg.nu = v;
    }
    if let Some(v) = a.measurements {
        cfg.n_measurements = v;
    }
    if let Some(v) = a.shape {
        cfg.shape = v;
    }
    if let Some(v) = a.ratio {
        cfg.ratio = Some(v);
    }
    if let Some(v) = a.method {
        cfg.method = v;
    }
    if let Some(v) = a.split {
        cfg.split = v;
    }
    if let Some(v) = resolve_seed(a.seed)? {
        cfg.seed = v;
    }
    if let Some(v) = a.noise_sigma {
        cfg.noise_sigma = v;
    }
    if let Some(v) = a.noise_floor {
        cfg.noise_floor = v;
    }
    if let Some(v) = &a.source_profile {
        cfg.profile = v.clone();
    }
    if let Some(v) = &a.key_alphabet {
        cfg.key_alphabet = v.clone();
    }
    if a.index_dark {
        cfg.key_indexing = KeyIndexing::Dark;
    }
    if a.truncate_on_length_mismatch {
        cfg.truncate_on_length_mismatch = true;
    }

    if let Some(kind) = a.attack {
        let mut spec = AttackSpec::new(kind);
        if let Some(f) = a.attack_fraction {
            spec.fraction = f;
        }
        spec.target_user = match a.attack_user {
            Some(u) => u,
            None if a.preset == Some(Preset::AttackDemo) => ATTACK_DEMO_TARGET,
            None => 0,
        };
        spec.seed = a
            .attack_seed
            .unwrap_or_else(|| mix_seed(&[cfg.seed, 0xADD]));
        cfg.attack = Some(spec);
    }
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let cfg = build_session_config(&args)?;
    println!("config: {}", serde_json::to_string(&cfg)?);

    let transcript = run_session(&cfg)?;

    println!(
        "parent: {}x{} {} pattern, {} bright cells; fragment sizes {:?}",
        cfg.width,
        cfg.height,
        cfg.shape,
        transcript.realized_bright,
        fragment_sizes(&transcript)?
    );
    println!(
        "channel: {} messages ({} public broadcasts)",
        transcript.messages.len(),
        transcript
            .messages
            .iter()
            .filter(|m| m.channel == ChannelKind::Public)
            .count()
    );

    match &transcript.verdict {
        Verdict::Authentic => println!("verdict: Authentic"),
        Verdict::Attacked { evidence } => {
            println!("verdict: Attacked ({} pieces of evidence)", evidence.len());
            for e in evidence.iter().take(8) {
                println!("  evidence: {}", describe_evidence(e));
            }
            if evidence.len() > 8 {
                println!("  ... and {} more", evidence.len() - 8);
            }
        }
    }

    if let Some(keys) = &transcript.keys {
        let prep = server_prepare(&cfg, &mut Vec::new())?;
        let expected = expected_keys(&prep, cfg.key_indexing)?;
        for (u, key) in keys.iter().enumerate() {
            let status = if expected.get(u) == Some(key) {
                "matches the server's expectation"
            } else {
                "DIFFERS from the server's expectation"
            };
            println!("key user {u}: {} ({status})", key.symbols);
        }
        if let Some(dir) = &args.keys_dir {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))?;
            for (u, key) in keys.iter().enumerate() {
                let path = dir.join(format!("user{u}.key"));
                fs::write(&path, format!("{}\n", key.symbols))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("keys written to {}", dir.display());
        }
    } else {
        println!("keys: withheld (session not authentic)");
    }

    if let Some(path) = &args.out {
        fs::write(path, transcript.to_json()?)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("transcript written to {}", path.display());
    }

    Ok(verdict_exit(&transcript.verdict))
}

fn verdict_exit(verdict: &Verdict) -> ExitCode {
    if verdict.is_authentic() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

/// Bright-cell count of each dealt fragment, read back from the transcript.
fn fragment_sizes(t: &SessionTranscript) -> Result<Vec<usize>> {
    t.fragment_pbms
        .iter()
        .map(|pbm| Ok(BinaryPattern::from_pbm(pbm)?.bright_count()))
        .collect()
}

fn describe_evidence(e: &Evidence) -> String {
    match e {
        Evidence::Overlap { row, col, value } => {
            format!("cell ({row},{col}) claimed by {value} users at once")
        }
        Evidence::Mismatch { row, col, fsp, expected } => {
            format!("cell ({row},{col}) synthesized to {fsp}, expected {expected}")
        }
        Evidence::LengthMismatch { user, expected, got } => {
            format!("user {user} received {got} bucket values, expected {expected}")
        }
        Evidence::ReconstructFailure { user, reason } => {
            format!("user {user} could not reconstruct a fragment: {reason}")
        }
    }
}

fn write_or_print(table: &str, out: Option<&Path>, what: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, table).with_context(|| format!("writing {}", path.display()))?;
            println!("{what} written to {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    if args.step == 0 {
        bail!("--step must be at least 1");
    }
    if args.from == 0 || args.from > args.to {
        bail!("sweep range must satisfy 1 <= from <= to");
    }
    let mut cfg = SweepConfig::new(args.nu, args.ratios.clone());
    cfg.shape = args.shape;
    cfg.width = args.width;
    cfg.height = args.height;
    cfg.percents = (args.from..=args.to).step_by(args.step as usize).collect();
    cfg.trials = args.trials;
    cfg.threshold = args.threshold;
    cfg.seed = resolve_seed(args.seed)?.unwrap_or(0);
    cfg.noise_sigma = args.noise_sigma;
    cfg.noise_floor = args.noise_floor;
    cfg.profile = args.source_profile.clone();
    println!("config: {}", serde_json::to_string(&cfg)?);

    let result = sweep_subsampling(&cfg)?;
    for series in &result.series {
        println!(
            "series {} ({} bright cells): limit {} at threshold {}",
            series.ratio,
            series.bright_count,
            series
                .limit_percent
                .map_or("not reached".into(), |l| format!("{l}%")),
            cfg.threshold
        );
        for note in &series.notes {
            println!("  note: {note}");
        }
    }
    write_or_print(&result.to_csv(), args.out.as_deref(), "sweep table")?;
    if let Some(path) = &args.dat {
        fs::write(path, result.to_gnuplot())
            .with_context(|| format!("writing {}", path.display()))?;
        println!("gnuplot data written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_attacks(args: AttacksArgs) -> Result<ExitCode> {
    let mut base = attack_demo_config(0);
    if let Some(u) = args.users {
        base.users = u;
    }
    if let Some(n) = args.measurements {
        base.n_measurements = n;
    }
    let mut cfg = AttackMatrixConfig::new(base);
    cfg.trials = args.trials;
    cfg.fraction = args.fraction;
    cfg.seed = resolve_seed(args.seed)?.unwrap_or(0);
    cfg.target_user = args.attack_user.unwrap_or(ATTACK_DEMO_TARGET);
    cfg.control_n = args.control_measurements;
    if cfg.target_user >= cfg.base.users {
        bail!(
            "attack target user {} out of range for {} users (use --attack-user)",
            cfg.target_user,
            cfg.base.users
        );
    }
    println!(
        "config: users={} measurements={} fraction={} trials={} seed={} target_user={}",
        cfg.base.users, cfg.base.n_measurements, cfg.fraction, cfg.trials, cfg.seed, cfg.target_user
    );

    let matrix = attack_matrix(&cfg)?;
    for row in &matrix.rows {
        println!(
            "{:<10} detected {:>3}/{} ({:.0}%), authentic {}",
            row.label,
            row.attacked,
            row.trials,
            100.0 * row.detection_rate(),
            row.authentic
        );
    }
    write_or_print(&matrix.to_csv(), args.out.as_deref(), "attack table")?;

    if let Some(dir) = &args.transcripts_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (kind_idx, kind) in cfg.kinds.iter().enumerate() {
            let transcript = run_session(&attack_trial_config(&cfg, kind_idx, 0))?;
            let path = dir.join(format!("{kind}.json"));
            fs::write(&path, transcript.to_json()?)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        let control = run_session(&control_trial_config(&cfg, 0))?;
        let path = dir.join("control.json");
        fs::write(&path, control.to_json()?)
            .with_context(|| format!("writing {}", path.display()))?;
        println!(
            "example transcripts (trial 0 of each row) written to {}",
            dir.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn describe_payload(p: &Payload) -> String {
    match p {
        Payload::SpeckleKeyRegistration { digest } => {
            format!("speckle key registration (digest {}…)", &digest[..12])
        }
        Payload::LibraryRegistration { user } => {
            format!("symbol library for user {user}")
        }
        Payload::BrightCountNotice { user, bright_count } => {
            format!("bright-count notice to user {user}: {bright_count}")
        }
        Payload::ExpectedParentRegistration { .. } => "expected parent pattern".into(),
        Payload::BucketBroadcast { user, len, digest } => {
            format!("bucket broadcast for user {user}: {len} values (digest {}…)", &digest[..12])
        }
        Payload::ClaimSubmission { user, .. } => format!("fragment claim from user {user}"),
        Payload::FspReturn { user } => format!("synthesis pattern returned to user {user}"),
        Payload::VerdictReturn { user, authentic } => {
            format!("verdict to user {user}: authentic={authentic}")
        }
        Payload::RekeyInstruction { user } => format!("rekey instruction to user {user}"),
    }
}

fn party_name(p: &Party) -> String {
    match p {
        Party::Server => "server".into(),
        Party::User(u) => format!("user {u}"),
        Party::Intermediary => "intermediary".into(),
    }
}

fn cmd_export(args: ExportArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.transcript)
        .with_context(|| format!("reading {}", args.transcript.display()))?;
    let t = SessionTranscript::from_json(&text)?;

    println!("config: {}", serde_json::to_string(&t.config)?);
    println!(
        "parent: {}x{} {}, {} bright cells, fragments sized {:?}",
        t.config.width,
        t.config.height,
        t.config.shape,
        t.realized_bright,
        fragment_sizes(&t)?
    );
    println!("messages ({}):", t.messages.len());
    for (i, m) in t.messages.iter().enumerate() {
        println!(
            "  {i:>3} [{}] {} -> {}: {}",
            match m.channel {
                ChannelKind::Public => "public ",
                ChannelKind::Private => "private",
            },
            party_name(&m.from),
            party_name(&m.to),
            describe_payload(&m.payload)
        );
    }
    audit_channel_discipline(&t.messages)?;
    println!("channel discipline: clean (bucket broadcasts public, everything else private)");

    match &t.verdict {
        Verdict::Authentic => println!("verdict: Authentic"),
        Verdict::Attacked { evidence } => {
            println!("verdict: Attacked");
            for e in evidence {
                println!("  evidence: {}", describe_evidence(e));
            }
        }
    }
    match &t.keys {
        Some(keys) => {
            for (u, k) in keys.iter().enumerate() {
                println!("key user {u}: {}", k.symbols);
            }
        }
        None => println!("keys: withheld"),
    }
    Ok(verdict_exit(&t.verdict))
}
