use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use merw_core::ensemble::{ensemble_distribution, mermin_check, sat_posterior, sequence_prob, CircuitSpec, Cnf};
use merw_core::field::sample;
use merw_core::mc::{mh_run, running_csv, McConfig};
use merw_core::numeric::fmt17;
use merw_core::onsager::exact_uh_with;
use merw_core::onsager::Integrator;
use merw_core::sweep::{run_sweep, sweep_csv, SweepSpec};
use merw_core::tfim::tfim_joint;
use merw_core::{
    ContextShape, Error, InteractionSpec, ModelParams, Representation, ScanModel, SolverOptions, TransferOperator,
};

#[derive(Parser)]
#[command(name = "merw", version, about = "Transfer-operator solutions of Ising-like lattice models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive a scan model and print U, H and magnetization.
    Model(ModelCmd),
    /// Coupling sweep against the exact 2D values, as CSV.
    Sweep(SweepCmd),
    /// Sample a field from a stored scan model.
    Sample(SampleCmd),
    /// Exact infinite-lattice energy and entropy.
    Analytic(AnalyticCmd),
    /// Metropolis-Hastings reference run on a torus.
    Mc(McCmd),
    /// Joint angle distribution of neighbouring rotors, as a CSV matrix.
    Tfim(TfimCmd),
    /// Probabilities in path ensembles: a circuit file or a stripe sequence.
    Path(PathCmd),
    /// Three-spin agreement probabilities of the boundary-driven construction.
    Mermin,
    /// Posterior over assignments of a 3-CNF formula.
    Sat3(Sat3Cmd),
}

#[derive(Args)]
struct Lattice {
    #[arg(long, default_value_t = 10)]
    width: usize,
    /// Cyclic stripes (the default).
    #[arg(long, overrides_with = "open")]
    cyclic: bool,
    /// Open stripes without the wrap-around bond.
    #[arg(long)]
    open: bool,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Sets both couplings.
    #[arg(long = "J", default_value_t = 1.0, allow_negative_numbers = true)]
    j: f64,
    #[arg(long, allow_negative_numbers = true)]
    jh: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    jv: Option<f64>,
    #[arg(long, conflicts_with = "implicit")]
    dense: bool,
    #[arg(long)]
    implicit: bool,
}

impl Lattice {
    fn params(&self) -> ModelParams {
        ModelParams::ising(self.width, self.j)
            .with_beta(self.beta)
            .with_mu(self.mu)
            .with_couplings(self.jh.unwrap_or(self.j), self.jv.unwrap_or(self.j))
            .with_cyclic(!self.open)
    }

    fn representation(&self) -> Option<Representation> {
        match (self.dense, self.implicit) {
            (true, _) => Some(Representation::Dense),
            (_, true) => Some(Representation::Implicit),
            _ => None,
        }
    }

    fn solve(&self, spec: InteractionSpec) -> Result<(TransferOperator, merw_core::SpectralSolution), Error> {
        let params = self.params();
        let repr = self
            .representation()
            .unwrap_or_else(|| Representation::default_for_width(params.width));
        let op = TransferOperator::build(params, spec, repr)?;
        let sol = op.dominant_eigenpair(&SolverOptions::default())?;
        Ok((op, sol))
    }
}

#[derive(Args)]
struct ModelCmd {
    #[command(flatten)]
    lattice: Lattice,
    #[arg(long, default_value_t = 3)]
    before: usize,
    #[arg(long, default_value_t = 3)]
    after: usize,
    /// Hard-core constraint instead of Ising energies.
    #[arg(long)]
    hard_square: bool,
    /// Also print the conditional table.
    #[arg(long)]
    table: bool,
    /// Write the model JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCmd {
    #[arg(long, default_value_t = 0.05)]
    j_min: f64,
    #[arg(long, default_value_t = 1.0)]
    j_max: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Comma-separated stripe widths.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    widths: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    before: usize,
    #[arg(long, default_value_t = 3)]
    after: usize,
    #[arg(long)]
    open: bool,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, conflicts_with = "implicit")]
    dense: bool,
    #[arg(long)]
    implicit: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleCmd {
    /// Scan model JSON written by `model --out`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 256)]
    rows: usize,
    #[arg(long, default_value_t = 256)]
    cols: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// PBM output; the sidecar goes next to it with a `.json` suffix.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyticCmd {
    #[arg(long = "J", allow_negative_numbers = true)]
    j: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    tanh_sinh: bool,
}

#[derive(Args)]
struct McCmd {
    #[arg(long, default_value_t = 64)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    cols: usize,
    #[arg(long = "J", default_value_t = 0.2, allow_negative_numbers = true)]
    j: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 10_000)]
    sweeps: usize,
    /// Defaults to a tenth of the sweeps.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Running-estimate CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Final configuration as PBM.
    #[arg(long)]
    field: Option<PathBuf>,
}

#[derive(Args)]
struct TfimCmd {
    #[arg(long = "J", default_value_t = 1.0, allow_negative_numbers = true)]
    j: f64,
    #[arg(long = "h", default_value_t = 1.0, allow_negative_numbers = true)]
    h: f64,
    #[arg(long, default_value_t = 100)]
    lat: usize,
    /// CSV output; the JSON header goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathCmd {
    /// Circuit JSON; prints per-layer marginals.
    #[arg(long, conflicts_with = "sequence")]
    circuit: Option<PathBuf>,
    /// Comma-separated pattern indices, `_` for a free stripe.
    #[arg(long)]
    sequence: Option<String>,
    #[command(flatten)]
    lattice: Lattice,
}

#[derive(Args)]
struct Sat3Cmd {
    /// DIMACS CNF file.
    file: PathBuf,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn model(cmd: &ModelCmd) -> Result<(), Error> {
    let spec = if cmd.hard_square {
        InteractionSpec::HardSquare
    } else {
        InteractionSpec::Ising
    };
    let (op, sol) = cmd.lattice.solve(spec)?;
    let m = ScanModel::derive(&op, &sol, ContextShape::new(cmd.before, cmd.after))?;
    let p = m.params();
    println!("lambda={}", fmt17(sol.lambda));
    if cmd.hard_square {
        println!("capacity={}", fmt17(sol.lambda.log2() / p.width as f64));
        let obs = m.observables(&spec)?;
        println!("H={}", fmt17(obs.entropy));
    } else {
        let obs = m.observables(&spec)?;
        println!("U={}", fmt17(obs.energy));
        println!("H={}", fmt17(obs.entropy));
        println!("mag={}", fmt17(obs.magnetization));
        if p.mu == 0.0 && p.jh == p.jv && p.jh >= 0.0 {
            let exact = exact_uh_with(p.jh, p.beta, Integrator::GaussKronrod)?;
            println!("U_exact={}", fmt17(exact.u));
            println!("H_exact={}", fmt17(exact.h));
            println!("err_U={}", fmt17(obs.energy - exact.u));
            println!("err_H={}", fmt17(obs.entropy - exact.h));
        }
    }
    if cmd.table {
        let shape = m.shape();
        for (key, q) in m.table().iter().enumerate() {
            let bits = format!("{key:0width$b}", width = shape.before + shape.after);
            println!("{} {}", bits, fmt17(*q));
        }
    }
    if let Some(out) = &cmd.out {
        write(out, &m.to_json())?;
        eprintln!("wrote {} (hash {})", out.display(), m.identity_hash());
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sweep(cmd: &SweepCmd) -> Result<(), Error> {
    let mut spec = SweepSpec::new(cmd.j_min, cmd.j_max, cmd.steps, cmd.widths.clone());
    spec.before = cmd.before;
    spec.after = cmd.after;
    spec.cyclic = !cmd.open;
    spec.beta = cmd.beta;
    spec.representation = match (cmd.dense, cmd.implicit) {
        (true, _) => Some(Representation::Dense),
        (_, true) => Some(Representation::Implicit),
        _ => None,
    };
    let rows = run_sweep(&spec)?;
    emit(&cmd.out, &sweep_csv(&rows))
}

fn sample_cmd(cmd: &SampleCmd) -> Result<(), Error> {
    let m = ScanModel::from_json(&read(&cmd.model)?)?;
    let field = sample(&m, &m.reduced_models(), cmd.rows, cmd.cols, cmd.seed)?;
    match &cmd.out {
        Some(path) => {
            write(path, &field.to_pbm())?;
            let sidecar = serde_json::to_string_pretty(&field.sidecar())?;
            write(&with_suffix(path, ".json"), &sidecar)?;
        }
        None => print!("{}", field.to_pbm()),
    }
    Ok(())
}

fn analytic(cmd: &AnalyticCmd) -> Result<(), Error> {
    let integrator = if cmd.tanh_sinh {
        Integrator::TanhSinh
    } else {
        Integrator::GaussKronrod
    };
    let r = exact_uh_with(cmd.j, cmd.beta, integrator)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}

fn mc(cmd: &McCmd) -> Result<(), Error> {
    let params = ModelParams::ising(1, cmd.j).with_mu(cmd.mu).with_beta(cmd.beta);
    let mut cfg = McConfig::new(cmd.rows, cmd.cols, params, cmd.sweeps, cmd.seed);
    if let Some(b) = cmd.burn_in {
        cfg.burn_in = b;
    }
    cfg.thin = cmd.thin;
    let rep = mh_run(&cfg)?;
    emit(&cmd.out, &running_csv(&rep))?;
    eprintln!(
        "U={} +- {} mag={} +- {} acceptance={:.4}",
        fmt17(rep.u),
        fmt17(rep.u_stderr),
        fmt17(rep.mag),
        fmt17(rep.mag_stderr),
        rep.acceptance_rate
    );
    if let Some(path) = &cmd.field {
        write(path, &rep.final_field.to_pbm())?;
    }
    Ok(())
}

fn tfim(cmd: &TfimCmd) -> Result<(), Error> {
    let d = tfim_joint(cmd.j, cmd.h, cmd.lat)?;
    match &cmd.out {
        Some(path) => {
            write(path, &d.to_csv())?;
            write(&with_suffix(path, ".json"), &d.header_json())?;
        }
        None => print!("{}", d.to_csv()),
    }
    Ok(())
}

fn path(cmd: &PathCmd) -> Result<(), Error> {
    if let Some(file) = &cmd.circuit {
        let e = CircuitSpec::from_json(&read(file)?)?.build()?;
        let m = ensemble_distribution(&e)?;
        println!("{}", serde_json::to_string_pretty(&m)?);
        return Ok(());
    }
    let Some(seq) = &cmd.sequence else {
        return Err(Error::InvalidArgument("give --circuit or --sequence".into()));
    };
    let fixed = seq
        .split(',')
        .map(|t| match t.trim() {
            "_" => Ok(None),
            s => s
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidArgument(format!("bad sequence entry {s:?}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (op, sol) = cmd.lattice.solve(InteractionSpec::Ising)?;
    println!("Pr={}", fmt17(sequence_prob(&sol, &op, &fixed)?));
    Ok(())
}

fn mermin() -> Result<(), Error> {
    let r = mermin_check()?;
    let verdict = if r.violated { "< 1: violated" } else { ">= 1: satisfied" };
    println!(
        "Pr(A=B)={} Pr(A=C)={} Pr(B=C)={} sum={} {verdict}",
        short(r.ab),
        short(r.ac),
        short(r.bc),
        short(r.sum)
    );
    Ok(())
}

/// Shortest decimal after rounding away accumulated ulps.
fn short(x: f64) -> String {
    let rounded: f64 = format!("{x:.12}").parse().unwrap_or(x);
    format!("{rounded}")
}

fn sat3(cmd: &Sat3Cmd) -> Result<(), Error> {
    let cnf = Cnf::parse_dimacs(&read(&cmd.file)?)?;
    let post = sat_posterior(&cnf)?;
    let mut ranked: Vec<(usize, f64)> = post.iter().copied().enumerate().filter(|&(_, p)| p > 1e-12).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (x, p) in ranked {
        let bits: Vec<String> = (0..cnf.num_vars)
            .map(|v| ((x >> (cnf.num_vars - 1 - v)) & 1).to_string())
            .collect();
        println!("{} posterior={}", bits.join(" "), short(p));
    }
    Ok(())
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("MERW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("MERW_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match &cli.command {
        Command::Model(c) => model(c),
        Command::Sweep(c) => sweep(c),
        Command::Sample(c) => sample_cmd(c),
        Command::Analytic(c) => analytic(c),
        Command::Mc(c) => mc(c),
        Command::Tfim(c) => tfim(c),
        Command::Path(c) => path(c),
        Command::Mermin => mermin(),
        Command::Sat3(c) => sat3(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
