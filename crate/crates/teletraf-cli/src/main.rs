//! Command-line front end for the teletraf toolkit: closed-form solvers,
//! dimensioning searches, simulations, network models and traffic-trace
//! generation behind one binary.

mod config;
mod network;
mod output;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::{fmt_sig, Format, Table};
use teletraf::delaymodels::{
    erlang_c, lifo_metrics, mg1_metrics, mg1_priority_nonpreemptive,
    mg1_priority_preemptive_resume, mm1_delay_ccdf, mm1_metrics, mm1n_metrics, mminf_metrics,
    mmk_delay_factor, mmk_metrics, mmkn_metrics, ps_metrics, wong_bound_check, QueueMetrics,
    ServiceSpec,
};
use teletraf::deterministic::{dd1, dd1n, ddk, ddkk, slb_d1n, DeterministicResult, MeanQueue};
use teletraf::dimension::{
    dim_erlang_b, dim_erlang_c, dim_delay_percentile_lambda, dim_delay_percentile_mu,
    dim_link_binomial, dim_link_heterogeneous, erm_dimension, hayward_dimension,
    multiplexing_gain, ErlangCTarget, LinkSizing, SourceClass,
};
use teletraf::lossmodels::{
    engset_blocking, engset_from_offered, engset_loads, erlang_b, erlang_b_inverse_recursion,
    erlang_b_jagerman, erm_blocking, hayward_blocking, mmkk_preemptive_priority, mmkk_stats,
    overflow_of, saturated_blocking, ErmRounding,
};
use teletraf::chainsolve::{
    ctmc_solve, dt_queue_solve, mem1n_solve, mmpp2_m1n_build, mmpp2_m1n_metrics,
};
use teletraf::multiservice::{ms_enumerate_solve, ms_occupancy_recursion, ServiceClass};
use teletraf::randkit::{poisson_pmf, Pmf, RngStream};
use teletraf::trafficgen::{
    ar1_fit, ar1_generate, ear1_interarrivals, mmpp2_arrivals, poisson_arrivals, Ar1Params,
    Mmpp2Params, PpbpParams,
};

/// Errors mapped onto the exit-code contract: 2 validation, 3
/// instability/infeasibility, 4 convergence.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Unstable(String),
    Convergence(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Unstable(_) => 3,
            CliError::Convergence(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Unstable(m) | CliError::Convergence(m) => m,
        }
    }
}

impl From<teletraf::Error> for CliError {
    fn from(e: teletraf::Error) -> Self {
        use teletraf::Error as E;
        match e {
            E::Unstable(_) | E::Infeasible(_) | E::NotSaturated { .. } => {
                CliError::Unstable(e.to_string())
            }
            E::NoConvergence { .. } => CliError::Convergence(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<config::ParseError> for CliError {
    fn from(e: config::ParseError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "teletraf", version, about = "Teletraffic analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for result tables.
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,
    /// Significant digits in printed numbers.
    #[arg(long, global = true, default_value_t = 10)]
    digits: usize,
    /// Write the result to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a closed-form queueing or loss model.
    Compute {
        #[command(subcommand)]
        model: ComputeModel,
    },
    /// Search for the capacity meeting a QoS target.
    Dimension {
        #[command(subcommand)]
        target: DimensionModel,
    },
    /// Run a simulation scenario with independent replications.
    Simulate {
        /// Scenario configuration file.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        replications: u64,
        /// Confidence level of the summary interval.
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Solve a queueing or loss network.
    Network {
        #[command(subcommand)]
        kind: NetworkKind,
    },
    /// Generate a traffic trace, one value per line.
    Traffic {
        #[command(subcommand)]
        model: TrafficModel,
    },
    /// Run the built-in golden-value suite.
    Selfcheck,
}

#[derive(Args)]
struct OfferedServers {
    /// Offered traffic in erlangs.
    #[arg(long = "A", allow_negative_numbers = true)]
    offered: f64,
    /// Number of servers.
    #[arg(long)]
    k: u32,
}

#[derive(Args)]
struct Rates {
    /// Arrival rate.
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Service rate.
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
}

#[derive(Subcommand)]
enum ComputeModel {
    /// Erlang B blocking probability.
    ErlangB {
        #[command(flatten)]
        load: OfferedServers,
        /// recursion | inverse | jagerman
        #[arg(long, default_value = "recursion")]
        method: String,
    },
    /// Full M/M/k/k record.
    Mmkk {
        #[command(flatten)]
        load: OfferedServers,
    },
    /// Overflow moments of an M/M/k/k group.
    Overflow {
        #[command(flatten)]
        load: OfferedServers,
    },
    /// Equivalent Random Method blocking for overflow traffic.
    Erm {
        #[arg(long)]
        mean: f64,
        #[arg(long)]
        variance: f64,
        #[arg(long)]
        k: u32,
        /// Round the equivalent group size down instead of to nearest.
        #[arg(long)]
        conservative: bool,
    },
    /// Hayward blocking for overflow traffic.
    Hayward {
        #[arg(long)]
        mean: f64,
        #[arg(long)]
        variance: f64,
        #[arg(long)]
        k: u32,
    },
    /// Engset blocking for finite sources.
    Engset {
        #[arg(long)]
        sources: u32,
        #[arg(long)]
        k: u32,
        /// Per-free-source intensity.
        #[arg(long)]
        rho: Option<f64>,
        /// Offered load, solved by fixed point when rho is unknown.
        #[arg(long)]
        offered: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Engset load bookkeeping (intended, offered, carried).
    EngsetLoads {
        #[arg(long)]
        sources: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        rho: f64,
    },
    /// Per-class blocking under preemptive priorities in M/M/k/k.
    PriorityLoss {
        /// Offered load per class, highest priority first.
        #[arg(long = "A", required = true)]
        offered: Vec<f64>,
        #[arg(long)]
        k: u32,
    },
    /// Fluid-flow blocking estimate of a saturated group.
    Saturated {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        k: u32,
    },
    /// Full M/M/1 record.
    Mm1 {
        #[command(flatten)]
        rates: Rates,
    },
    /// M/M/1 delay tail probabilities at time t.
    Mm1Tails {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        t: f64,
    },
    /// M/M/infinity record.
    Mminf {
        #[command(flatten)]
        rates: Rates,
    },
    /// Full M/M/k record.
    Mmk {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        k: u32,
    },
    /// Full M/M/1/N record.
    Mm1n {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        n: usize,
    },
    /// Full M/M/k/N record.
    Mmkn {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: usize,
    },
    /// M/G/1 record from the service moments.
    Mg1 {
        #[arg(long)]
        lambda: f64,
        /// Mean service time.
        #[arg(long)]
        mean: f64,
        /// Service-time variance (0 = deterministic; omit for exponential).
        #[arg(long)]
        variance: Option<f64>,
    },
    /// M/G/1 priority classes, `--class lambda:mean[:variance]` repeated,
    /// highest priority first.
    Mg1Priority {
        #[arg(long = "class", required = true)]
        classes: Vec<String>,
        #[arg(long)]
        preemptive: bool,
    },
    /// Processor sharing record, optionally with a job-size query.
    Ps {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mean: f64,
        /// Solo service requirement for a conditional-delay query.
        #[arg(long)]
        x: Option<f64>,
    },
    /// M/G/1-LIFO record (M/M/1 queue-size law by insensitivity).
    Lifo {
        #[command(flatten)]
        rates: Rates,
    },
    /// Finite/infinite buffer overflow inequality check.
    Wong {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        loss: f64,
        #[arg(long)]
        overflow: f64,
    },
    /// Deterministic D/D/1.
    Dd1 {
        #[command(flatten)]
        rates: Rates,
    },
    /// Deterministic D/D/k.
    Ddk {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        k: u32,
    },
    /// Deterministic loss system D/D/k/k.
    Ddkk {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        k: u32,
    },
    /// Deterministic finite buffer D/D/1/N.
    Dd1n {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        n: usize,
    },
    /// Single large burst into a finite buffer.
    Slb {
        #[arg(long)]
        burst: u64,
        #[arg(long)]
        n: u64,
    },
    /// Multi-service loss model from a config file.
    Multiservice {
        #[arg(long)]
        config: PathBuf,
    },
    /// MMPP(2)/M/1/N queue solved on its generator.
    Mmpp2M1n {
        #[arg(long)]
        lambda0: f64,
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        delta0: f64,
        #[arg(long)]
        delta1: f64,
        /// Mode-speed multiplier applied to both delta parameters.
        #[arg(long, default_value_t = 1.0)]
        psi: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        n: usize,
    },
    /// M/Em/1/N queue solved on its phase chain.
    Mem1n {
        #[command(flatten)]
        rates: Rates,
        /// Erlang service phases.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Discrete-time queue from a per-slot arrival pmf.
    DtQueue {
        /// Comma-separated probabilities of 0,1,2,... arrivals per slot.
        #[arg(long)]
        pmf: String,
        #[arg(long, default_value_t = 1e-12)]
        tail_tol: f64,
    },
}

#[derive(Subcommand)]
enum DimensionModel {
    /// Minimal servers with Erlang B blocking within the target.
    ErlangB {
        #[arg(long = "A")]
        offered: f64,
        #[arg(long)]
        pb: f64,
    },
    /// Minimal servers meeting an Erlang C target.
    ErlangC {
        #[arg(long = "A")]
        offered: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        delay_prob: Option<f64>,
        #[arg(long)]
        mean_delay: Option<f64>,
        #[arg(long)]
        delay_factor: Option<f64>,
    },
    /// Link capacity for on-off source classes from a config file.
    Link {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.0015)]
        alpha: f64,
    },
    /// M/M/1 delay-percentile dimensioning; solves for whichever of
    /// lambda/mu is omitted.
    Delay {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        alpha: f64,
    },
    /// Required rate and gain when n streams share one server.
    Multiplexing {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        n: u32,
    },
    /// Servers for overflow traffic under the Hayward approximation.
    Hayward {
        #[arg(long)]
        mean: f64,
        #[arg(long)]
        variance: f64,
        #[arg(long)]
        pb: f64,
    },
    /// Servers for overflow traffic under the Equivalent Random Method.
    Erm {
        #[arg(long)]
        mean: f64,
        #[arg(long)]
        variance: f64,
        #[arg(long)]
        pb: f64,
        #[arg(long)]
        conservative: bool,
    },
}

#[derive(Subcommand)]
enum NetworkKind {
    /// Open Jackson network from a config file.
    Jackson {
        #[arg(long)]
        config: PathBuf,
    },
    /// Erlang fixed-point approximation of a circuit-switched network.
    Efpa {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1.0)]
        damping: f64,
    },
    /// Convert transport measurements to (lambda, h, A).
    Convert {
        /// Long-run average bit-rate.
        #[arg(long)]
        r: f64,
        /// Mean volume per connection.
        #[arg(long)]
        b: f64,
        /// Channel capacity.
        #[arg(long)]
        c: f64,
        /// Mean utilization of a connection.
        #[arg(long)]
        u: f64,
    },
}

#[derive(Subcommand)]
enum TrafficModel {
    /// Poisson event times on [0, horizon).
    Poisson {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// MMPP(2) event times on [0, horizon).
    Mmpp2 {
        #[arg(long)]
        lambda0: f64,
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        delta0: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long, default_value_t = 1.0)]
        psi: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// AR(1) Gaussian per-slot workloads fitted to moments.
    Ar1 {
        #[arg(long)]
        mean: f64,
        #[arg(long)]
        variance: f64,
        /// Autocovariance sum.
        #[arg(long)]
        s: f64,
        #[arg(long)]
        slots: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// EAR(1) inter-arrival times.
    Ear1 {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Poisson Pareto burst process per-slot workloads.
    Ppbp {
        /// Burst arrival rate per slot.
        #[arg(long)]
        lambda: f64,
        /// Rate of one active burst.
        #[arg(long)]
        r: f64,
        /// Hurst parameter in [0.5, 1).
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        slots: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let digits = cli.digits;
    let table = match cli.command {
        Command::Compute { model } => compute(model, digits)?,
        Command::Dimension { target } => dimension(target, digits)?,
        Command::Simulate { scenario, seed, replications, confidence } => {
            let cfg = network::load_config(&scenario)?;
            simulate::run_scenario(
                &cfg,
                &simulate::SimulateArgs { seed, replications, confidence, digits },
            )?
        }
        Command::Network { kind } => match kind {
            NetworkKind::Jackson { config } => {
                network::cmd_jackson(&network::load_config(&config)?, digits)?
            }
            NetworkKind::Efpa { config, tol, max_iter, damping } => network::cmd_efpa(
                &network::load_config(&config)?,
                tol,
                max_iter,
                damping,
                digits,
            )?,
            NetworkKind::Convert { r, b, c, u } => network::cmd_convert(r, b, c, u, digits)?,
        },
        Command::Traffic { model } => {
            // traces are raw values, one per line, whatever the format flag
            let values = traffic(model)?;
            let mut rendered = String::new();
            for v in values {
                rendered.push_str(&fmt_sig(v, digits));
                rendered.push('\n');
            }
            return match cli.output.as_deref() {
                Some(path) => std::fs::write(path, rendered).map_err(|e| {
                    CliError::Validation(format!("cannot write {}: {e}", path.display()))
                }),
                None => {
                    print!("{rendered}");
                    Ok(())
                }
            };
        }
        Command::Selfcheck => return selfcheck(),
    };
    emit(&table, &cli.format, cli.output.as_deref())
}

fn emit(table: &Table, format: &Format, output: Option<&std::path::Path>) -> Result<(), CliError> {
    let rendered = table.render(*format);
    match output {
        Some(path) => std::fs::write(path, rendered).map_err(|e| {
            CliError::Validation(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn metrics_table(m: &QueueMetrics<f64>, digits: usize) -> Table {
    let mut t = Table::metrics();
    if let Some(b) = m.blocking {
        t.metric("blocking", b, digits);
    }
    t.metric("mean_queue", m.mean_queue, digits);
    t.metric("mean_in_queue", m.mean_in_queue, digits);
    t.metric("mean_in_service", m.mean_in_service, digits);
    t.metric("mean_delay", m.mean_delay, digits);
    t.metric("mean_wait", m.mean_wait, digits);
    t.metric("utilization", m.utilization, digits);
    if let Some(p) = m.delay_prob {
        t.metric("delay_probability", p, digits);
    }
    if let Some(d) = m.delayed_mean_delay {
        t.metric("delayed_mean_delay", d, digits);
    }
    if let Some(w) = m.delayed_mean_wait {
        t.metric("delayed_mean_wait", w, digits);
    }
    if let Some(b) = m.busy_period {
        t.metric("mean_busy_period", b, digits);
    }
    t.metric("effective_arrival_rate", m.effective_arrival_rate, digits);
    t
}

fn deterministic_table(r: &DeterministicResult<f64>, digits: usize) -> Table {
    let mut t = Table::metrics();
    match r.mean_queue {
        MeanQueue::Finite(q) => t.metric("mean_queue", q, digits),
        MeanQueue::Unbounded => t.metric_text("mean_queue", "unbounded"),
    }
    t.metric("utilization", r.utilization, digits);
    t.metric("blocking", r.blocking, digits);
    for (state, fraction) in &r.state_fractions {
        t.metric(&format!("time_fraction_q{state}"), *fraction, digits);
    }
    if let Some(c) = r.cycle_length {
        t.metric("cycle_length", c, digits);
    }
    t
}

fn parse_service_class(text: &str) -> Result<(f64, ServiceSpec<f64>), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad =
        || CliError::Validation(format!("`--class {text}` must be lambda:mean[:variance]"));
    if parts.len() < 2 || parts.len() > 3 {
        return Err(bad());
    }
    let lambda: f64 = parts[0].parse().map_err(|_| bad())?;
    let mean: f64 = parts[1].parse().map_err(|_| bad())?;
    let spec = match parts.get(2) {
        Some(v) => {
            let variance: f64 = v.parse().map_err(|_| bad())?;
            ServiceSpec::from_mean_variance(mean, variance)?
        }
        None => ServiceSpec::exponential(mean)?,
    };
    Ok((lambda, spec))
}

fn compute(model: ComputeModel, digits: usize) -> Result<Table, CliError> {
    let mut table = Table::metrics();
    match model {
        ComputeModel::ErlangB { load, method } => {
            let value = match method.as_str() {
                "recursion" => erlang_b(load.offered, load.k)?,
                "inverse" => erlang_b_inverse_recursion(load.offered, load.k)?,
                "jagerman" => erlang_b_jagerman(load.offered, load.k)?,
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown method `{other}` (recursion, inverse, jagerman)"
                    )))
                }
            };
            table.metric("blocking", value, digits);
        }
        ComputeModel::Mmkk { load } => {
            let r = mmkk_stats(load.offered, load.k)?;
            table.metric("blocking", r.blocking, digits);
            table.metric("carried_erlangs", r.carried, digits);
            table.metric("overflow_erlangs", r.overflow, digits);
            table.metric("utilization", r.utilization, digits);
        }
        ComputeModel::Overflow { load } => {
            let t = overflow_of(load.offered, load.k)?;
            table.metric("mean", t.mean, digits);
            table.metric("variance", t.variance, digits);
            match t.peakedness {
                Some(z) => table.metric("peakedness", z, digits),
                None => table.metric_text("peakedness", "undefined"),
            }
        }
        ComputeModel::Erm { mean, variance, k, conservative } => {
            let rounding =
                if conservative { ErmRounding::Down } else { ErmRounding::Nearest };
            table.metric("blocking", erm_blocking(mean, variance, k, rounding)?, digits);
        }
        ComputeModel::Hayward { mean, variance, k } => {
            table.metric("blocking", hayward_blocking(mean, variance, k)?, digits);
        }
        ComputeModel::Engset { sources, k, rho, offered, tol } => {
            let blocking = match (rho, offered) {
                (Some(rho), None) => engset_blocking(sources, k, rho)?,
                (None, Some(t_o)) => engset_from_offered(sources, k, t_o, tol)?,
                _ => {
                    return Err(CliError::Validation(
                        "give exactly one of --rho or --offered".into(),
                    ))
                }
            };
            table.metric("blocking", blocking, digits);
        }
        ComputeModel::EngsetLoads { sources, k, rho } => {
            let l = engset_loads(sources, k, rho)?;
            table.metric("blocking", l.blocking, digits);
            table.metric("intended_load", l.intended, digits);
            table.metric("offered_load", l.offered, digits);
            table.metric("carried_load", l.carried, digits);
        }
        ComputeModel::PriorityLoss { offered, k } => {
            let blocking = mmkk_preemptive_priority(&offered, k)?;
            table = Table::new(vec!["class", "offered", "blocking"]);
            for (i, (a, b)) in offered.iter().zip(&blocking).enumerate() {
                table.push(vec![
                    (i + 1).to_string(),
                    fmt_sig(*a, digits),
                    b.map(|b| fmt_sig(b, digits)).unwrap_or_else(|| "no-traffic".into()),
                ]);
            }
        }
        ComputeModel::Saturated { rates, k } => {
            table.metric("blocking", saturated_blocking(rates.lambda, rates.mu, k)?, digits);
        }
        ComputeModel::Mm1 { rates } => {
            table = metrics_table(&mm1_metrics(rates.lambda, rates.mu)?, digits);
        }
        ComputeModel::Mm1Tails { rates, t } => {
            let tails = mm1_delay_ccdf(rates.lambda, rates.mu, t)?;
            table.metric("delay_tail", tails.total, digits);
            table.metric("wait_tail", tails.queueing, digits);
        }
        ComputeModel::Mminf { rates } => {
            table = metrics_table(&mminf_metrics(rates.lambda, rates.mu)?, digits);
        }
        ComputeModel::Mmk { rates, k } => {
            table = metrics_table(&mmk_metrics(rates.lambda, rates.mu, k)?, digits);
            table.metric(
                "delay_factor",
                mmk_delay_factor(rates.lambda, rates.mu, k)?,
                digits,
            );
        }
        ComputeModel::Mm1n { rates, n } => {
            table = metrics_table(&mm1n_metrics(rates.lambda, rates.mu, n)?, digits);
        }
        ComputeModel::Mmkn { rates, k, n } => {
            table = metrics_table(&mmkn_metrics(rates.lambda, rates.mu, k, n)?, digits);
        }
        ComputeModel::Mg1 { lambda, mean, variance } => {
            let service = match variance {
                Some(v) => ServiceSpec::from_mean_variance(mean, v)?,
                None => ServiceSpec::exponential(mean)?,
            };
            table = metrics_table(&mg1_metrics(lambda, &service)?, digits);
        }
        ComputeModel::Mg1Priority { classes, preemptive } => {
            let parsed: Vec<(f64, ServiceSpec<f64>)> = classes
                .iter()
                .map(|c| parse_service_class(c))
                .collect::<Result<_, _>>()?;
            table = Table::new(vec!["class", "mean_wait", "mean_delay"]);
            if preemptive {
                for (i, d) in
                    mg1_priority_preemptive_resume(&parsed)?.iter().enumerate()
                {
                    match d {
                        Some(d) => table.push(vec![
                            (i + 1).to_string(),
                            "-".into(),
                            fmt_sig(d.mean_delay, digits),
                        ]),
                        None => table.push(vec![
                            (i + 1).to_string(),
                            "-".into(),
                            "unstable".into(),
                        ]),
                    }
                }
            } else {
                for (i, d) in mg1_priority_nonpreemptive(&parsed)?.iter().enumerate() {
                    table.push(vec![
                        (i + 1).to_string(),
                        fmt_sig(d.mean_wait.unwrap_or(f64::NAN), digits),
                        fmt_sig(d.mean_delay, digits),
                    ]);
                }
            }
        }
        ComputeModel::Ps { lambda, mean, x } => {
            let m = ps_metrics(lambda, mean)?;
            table.metric("mean_queue", m.mean_queue, digits);
            table.metric("mean_delay", m.mean_delay, digits);
            if let Some(x) = x {
                table.metric("conditional_delay", m.conditional_delay(x), digits);
            }
        }
        ComputeModel::Lifo { rates } => {
            table = metrics_table(&lifo_metrics(rates.lambda, rates.mu)?, digits);
        }
        ComputeModel::Wong { rho, loss, overflow } => {
            let w = wong_bound_check(rho, loss, overflow)?;
            table.metric_text("holds", if w.holds { "yes" } else { "no" });
            table.metric("slack", w.slack, digits);
        }
        ComputeModel::Dd1 { rates } => {
            table = deterministic_table(&dd1(rates.lambda, rates.mu)?, digits);
        }
        ComputeModel::Ddk { rates, k } => {
            table = deterministic_table(&ddk(rates.lambda, rates.mu, k)?, digits);
        }
        ComputeModel::Ddkk { rates, k } => {
            table = deterministic_table(&ddkk(rates.lambda, rates.mu, k)?, digits);
        }
        ComputeModel::Dd1n { rates, n } => {
            table = deterministic_table(&dd1n(rates.lambda, rates.mu, n)?, digits);
        }
        ComputeModel::Slb { burst, n } => {
            table.metric("blocking", slb_d1n(burst, n)?, digits);
        }
        ComputeModel::Multiservice { config } => {
            let cfg = network::load_config(&config)?;
            let (classes, capacity) = multiservice_from_config(&cfg)?;
            let recursion = ms_occupancy_recursion(&classes, capacity)?;
            let enumeration = ms_enumerate_solve(&classes, capacity)
                .ok()
                .map(|set| set.blocking());
            table = Table::new(vec![
                "class",
                "slots",
                "offered",
                "blocking_recursion",
                "blocking_enumeration",
            ]);
            for (i, class) in classes.iter().enumerate() {
                table.push(vec![
                    (i + 1).to_string(),
                    class.slots().to_string(),
                    fmt_sig(class.offered(), digits),
                    fmt_sig(recursion[i], digits),
                    enumeration
                        .as_ref()
                        .map(|b| fmt_sig(b[i], digits))
                        .unwrap_or_else(|| "skipped".into()),
                ]);
            }
        }
        ComputeModel::Mmpp2M1n { lambda0, lambda1, delta0, delta1, psi, mu, n } => {
            let (q, _) =
                mmpp2_m1n_build(lambda0, lambda1, delta0 * psi, delta1 * psi, mu, n)?;
            let dist = ctmc_solve(&q, 1e-12, 200_000)?;
            let m = mmpp2_m1n_metrics(lambda0, lambda1, delta0 * psi, delta1 * psi, &dist)?;
            table.metric("blocking", m.blocking, digits);
            table.metric("average_arrival_rate", m.lambda_av, digits);
            table.metric("mode0_probability", m.mode_probs[0], digits);
            table.metric("mode1_probability", m.mode_probs[1], digits);
            table.metric("mean_queue", m.mean_queue, digits);
            table.metric("utilization", m.utilization, digits);
        }
        ComputeModel::Mem1n { rates, m, n } => {
            let r = mem1n_solve(rates.lambda, rates.mu, m, n)?;
            table.metric("blocking", r.blocking, digits);
            table.metric("mean_queue", r.mean_queue, digits);
            table.metric("mean_delay", r.mean_delay, digits);
        }
        ComputeModel::DtQueue { pmf, tail_tol } => {
            let probs: Vec<f64> = pmf
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Validation("--pmf must be comma-separated numbers".into()))?;
            let pmf = Pmf::new(0, probs)?;
            let sol = dt_queue_solve(&pmf, tail_tol)?;
            table.metric("boundary_empty", sol.boundary_empty, digits);
            table.metric("idle_fraction", sol.idle_fraction, digits);
            table.metric("mean_queue", sol.mean_queue, digits);
        }
    }
    Ok(table)
}

fn multiservice_from_config(
    cfg: &config::Config,
) -> Result<(Vec<ServiceClass<f64>>, u32), CliError> {
    cfg.expect_keys(&["classes", "capacity"])?;
    let capacity = cfg.u64("capacity")? as u32;
    let mut classes = Vec::new();
    for (i, rec) in cfg.records("classes")?.iter().enumerate() {
        config::rec_expect_keys(rec, i, &["slots", "arrival_rate", "mean_holding_time"])?;
        classes.push(ServiceClass::new(
            config::rec_u64(rec, i, "slots")? as u32,
            config::rec_f64(rec, i, "arrival_rate")?,
            config::rec_f64(rec, i, "mean_holding_time")?,
        )?);
    }
    Ok((classes, capacity))
}

fn dimension(target: DimensionModel, digits: usize) -> Result<Table, CliError> {
    let mut table = Table::metrics();
    match target {
        DimensionModel::ErlangB { offered, pb } => {
            let k = dim_erlang_b(offered, pb)?;
            table.metric_int("servers", u64::from(k));
            table.metric("achieved_blocking", erlang_b(offered, k)?, digits);
        }
        DimensionModel::ErlangC { offered, mu, delay_prob, mean_delay, delay_factor } => {
            let target = match (delay_prob, mean_delay, delay_factor) {
                (Some(c), None, None) => ErlangCTarget::DelayProbability(c),
                (None, Some(d), None) => ErlangCTarget::MeanDelay(d),
                (None, None, Some(f)) => ErlangCTarget::DelayFactor(f),
                _ => {
                    return Err(CliError::Validation(
                        "give exactly one of --delay-prob, --mean-delay, --delay-factor".into(),
                    ))
                }
            };
            let k = dim_erlang_c(offered, mu, target)?;
            table.metric_int("servers", u64::from(k));
            table.metric("achieved_delay_probability", erlang_c(offered, k)?, digits);
        }
        DimensionModel::Link { config, alpha } => {
            let cfg = network::load_config(&config)?;
            cfg.expect_keys(&["classes"])?;
            let mut classes = Vec::new();
            for (i, rec) in cfg.records("classes")?.iter().enumerate() {
                config::rec_expect_keys(rec, i, &["count", "peak", "activity"])?;
                classes.push(SourceClass::on_off(
                    config::rec_u64(rec, i, "count")? as u32,
                    config::rec_f64(rec, i, "peak")?,
                    config::rec_f64(rec, i, "activity")?,
                )?);
            }
            let capacity = dim_link_heterogeneous(&classes, alpha)?;
            table.metric("capacity", capacity, digits);
            // a single homogeneous class can also be sized exactly
            if let [only] = classes.as_slice() {
                if let teletraf::dimension::SourceModel::OnOff { peak, activity } = only.model {
                    let exact = dim_link_binomial(
                        only.count,
                        activity,
                        peak,
                        alpha,
                        LinkSizing::ExactBinomial,
                    )?;
                    table.metric("capacity_exact_binomial", exact, digits);
                }
            }
        }
        DimensionModel::Delay { lambda, mu, t, alpha } => match (lambda, mu) {
            (Some(lambda), None) => {
                let mu = dim_delay_percentile_mu(lambda, t, alpha)?;
                table.metric("required_mu", mu, digits);
            }
            (None, Some(mu)) => {
                let lambda = dim_delay_percentile_lambda(mu, t, alpha)?;
                table.metric("admissible_lambda", lambda, digits);
            }
            _ => {
                return Err(CliError::Validation(
                    "give exactly one of --lambda (solves mu) or --mu (solves lambda)".into(),
                ))
            }
        },
        DimensionModel::Multiplexing { lambda, mu, n } => {
            let g = multiplexing_gain(lambda, mu, n)?;
            table.metric("required_rate", g.required_rate, digits);
            table.metric("multiplexing_gain", g.gain, digits);
        }
        DimensionModel::Hayward { mean, variance, pb } => {
            table.metric_int("servers", u64::from(hayward_dimension(mean, variance, pb)?));
        }
        DimensionModel::Erm { mean, variance, pb, conservative } => {
            let rounding =
                if conservative { ErmRounding::Down } else { ErmRounding::Nearest };
            table.metric_int("servers", u64::from(erm_dimension(mean, variance, pb, rounding)?));
        }
    }
    Ok(table)
}

fn traffic(model: TrafficModel) -> Result<Vec<f64>, CliError> {
    Ok(match model {
        TrafficModel::Poisson { lambda, horizon, seed } => {
            let mut stream = RngStream::new(seed);
            poisson_arrivals(lambda, horizon, &mut stream)?
        }
        TrafficModel::Mmpp2 { lambda0, lambda1, delta0, delta1, psi, horizon, seed } => {
            let params = Mmpp2Params::new(lambda0, lambda1, delta0, delta1)?
                .with_mode_speed(psi)?;
            let mut stream = RngStream::new(seed);
            mmpp2_arrivals(&params, horizon, &mut stream)?.arrivals
        }
        TrafficModel::Ar1 { mean, variance, s, slots, seed } => {
            let params: Ar1Params = ar1_fit(mean, variance, s)?;
            let mut stream = RngStream::new(seed);
            ar1_generate(&params, slots, &mut stream)?
        }
        TrafficModel::Ear1 { lambda, a, n, seed } => {
            let mut stream = RngStream::new(seed);
            ear1_interarrivals(lambda, a, n, &mut stream)?
        }
        TrafficModel::Ppbp { lambda, r, hurst, slots, seed } => {
            let params = PpbpParams::from_hurst(lambda, r, hurst)?;
            let mut stream = RngStream::new(seed);
            teletraf::trafficgen::ppbp_workload(&params, slots, &mut stream)?
        }
    })
}

fn selfcheck() -> Result<(), CliError> {
    let mut failures = 0;
    let mut check = |name: &str, got: f64, want: f64, tol: f64| {
        let ok = (got - want).abs() <= tol;
        if !ok {
            failures += 1;
        }
        println!(
            "{} {name}: {} (reference {want})",
            if ok { "ok  " } else { "FAIL" },
            fmt_sig(got, 10)
        );
    };

    check("erlang_b(20, 30)", erlang_b(20.0, 30).unwrap_or(f64::NAN), 0.0085, 1e-4);
    check(
        "erlang_b(10000, 9970)",
        erlang_b_inverse_recursion(10_000.0, 9_970).unwrap_or(f64::NAN),
        0.0099,
        1e-4,
    );
    check("erlang_c(20, 30)", erlang_c(20.0, 30).unwrap_or(f64::NAN), 0.025, 1e-3);
    check(
        "hayward(21, 31.5, 24)",
        hayward_blocking(21.0, 31.5, 24).unwrap_or(f64::NAN),
        0.1145,
        1e-4,
    );
    check(
        "erm(21, 31.5, 24)",
        erm_blocking(21.0, 31.5, 24, ErmRounding::Nearest).unwrap_or(f64::NAN),
        0.1194,
        5e-4,
    );
    check(
        "mm1(2e6, 2.1e6).mean_queue",
        mm1_metrics(2.0e6, 2.1e6).map(|m| m.mean_queue).unwrap_or(f64::NAN),
        20.0,
        0.5,
    );
    check(
        "mm1n(1000, 1, 1000).blocking",
        mm1n_metrics(1000.0, 1.0, 1000)
            .map(|m| m.blocking.unwrap_or(f64::NAN))
            .unwrap_or(f64::NAN),
        0.999,
        1e-3,
    );
    check(
        "mg1(1.5, 0.4, 0.2).mean_queue",
        mg1_metrics(1.5, &ServiceSpec::from_mean_variance(0.4, 0.2).unwrap())
            .map(|m| m.mean_queue)
            .unwrap_or(f64::NAN),
        1.6125,
        1e-9,
    );
    check(
        "ps(200000, 4e-6).mean_queue",
        ps_metrics(200_000.0, 1.0 / 250_000.0).map(|m| m.mean_queue).unwrap_or(f64::NAN),
        4.0,
        1e-9,
    );
    let voice_video = vec![
        ServiceClass::new(1, 0.3, 3.0).unwrap(),
        ServiceClass::new(2, 0.2, 5.0).unwrap(),
    ];
    let blocking = ms_occupancy_recursion(&voice_video, 2).unwrap_or_default();
    check("multiservice voice (k=2)", blocking.first().copied().unwrap_or(f64::NAN), 0.425, 5e-4);
    check("multiservice video (k=2)", blocking.get(1).copied().unwrap_or(f64::NAN), 0.6974, 5e-4);
    check(
        "dim_erlang_b(100, 1%)",
        dim_erlang_b(100.0, 0.01).map(f64::from).unwrap_or(f64::NAN),
        117.0,
        0.0,
    );
    let classes = vec![
        SourceClass::on_off(20, 10.0, 0.1).unwrap(),
        SourceClass::on_off(80, 1.0, 0.05).unwrap(),
    ];
    check(
        "dim_link heterogeneous",
        dim_link_heterogeneous(&classes, 0.0015).unwrap_or(f64::NAN),
        64.67186,
        1e-4,
    );
    check(
        "poisson_pmf(2).prob(0)",
        poisson_pmf(2.0, 1e-12).map(|p| p.prob(0)).unwrap_or(f64::NAN),
        (-2.0f64).exp(),
        1e-12,
    );

    if failures > 0 {
        eprintln!("{failures} selfcheck(s) failed");
        std::process::exit(1);
    }
    println!("all selfchecks passed");
    Ok(())
}
