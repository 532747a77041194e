//! `simulate` subcommand: scenario files dispatched onto the simulation
//! engines, independent replications, summary confidence intervals.

use teletraf::randkit::RngStream;
use teletraf::simkit::{
    cellular_sim, confidence_interval, des_run, mc_mm1, mc_mmkk,
    poisson_inspector_paradox_demo, CellularSpec, DesArrival, DesConfig, Discipline,
};
use teletraf::trafficgen::Mmpp2Params;

use crate::config::{rec_expect_keys, rec_f64, Config};
use crate::output::{fmt_sig, Table};
use crate::CliError;

/// A deviate source described in a scenario file, e.g. `exp:1.5`,
/// `uniform:0,2`, `pareto:2.5,0.6`, `det:1`, `ear1:1,0.5`,
/// `mmpp2:1,2,0.1,0.2` or `trace:path[:gaps|:times]`.
#[derive(Debug, Clone)]
enum SourceSpec {
    Exp(f64),
    Det(f64),
    Uniform(f64, f64),
    Pareto(f64, f64),
    Ear1(f64, f64),
    Mmpp2(Mmpp2Params),
    Trace(Vec<f64>),
}

impl SourceSpec {
    fn parse(text: &str, line_hint: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::Validation(format!("cannot parse source `{text}` for {line_hint}"))
        };
        let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
        let nums = |expect: usize| -> Result<Vec<f64>, CliError> {
            let parts: Vec<f64> = rest
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            if parts.len() != expect {
                return Err(bad());
            }
            Ok(parts)
        };
        match kind {
            "exp" => Ok(SourceSpec::Exp(nums(1)?[0])),
            "det" => Ok(SourceSpec::Det(nums(1)?[0])),
            "uniform" => {
                let v = nums(2)?;
                Ok(SourceSpec::Uniform(v[0], v[1]))
            }
            "pareto" => {
                let v = nums(2)?;
                Ok(SourceSpec::Pareto(v[0], v[1]))
            }
            "ear1" => {
                let v = nums(2)?;
                Ok(SourceSpec::Ear1(v[0], v[1]))
            }
            "mmpp2" => {
                let v = nums(4)?;
                Ok(SourceSpec::Mmpp2(
                    Mmpp2Params::new(v[0], v[1], v[2], v[3])
                        .map_err(CliError::from)?,
                ))
            }
            "trace" => {
                let (path, mode) = match rest.rsplit_once(':') {
                    Some((p, m)) if m == "gaps" || m == "times" => (p, m),
                    _ => (rest, "times"),
                };
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read trace {path}: {e}"))
                })?;
                let mut values = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() {
                        continue;
                    }
                    values.push(line.parse::<f64>().map_err(|_| {
                        CliError::Validation(format!(
                            "trace {path} line {}: not a number",
                            i + 1
                        ))
                    })?);
                }
                if mode == "times" {
                    // absolute event times to gaps
                    let mut gaps = Vec::with_capacity(values.len());
                    let mut last = 0.0;
                    for t in values {
                        gaps.push(t - last);
                        last = t;
                    }
                    values = gaps;
                }
                Ok(SourceSpec::Trace(values))
            }
            _ => Err(bad()),
        }
    }

    /// Stateful gap generator bound to a stream.
    fn gaps(&self, mut stream: RngStream) -> Box<dyn FnMut() -> f64> {
        match self.clone() {
            SourceSpec::Exp(rate) => {
                Box::new(move || stream.exp_deviate(rate).unwrap())
            }
            SourceSpec::Det(value) => Box::new(move || value),
            SourceSpec::Uniform(lo, hi) => {
                Box::new(move || lo + (hi - lo) * stream.uniform01())
            }
            SourceSpec::Pareto(gamma, delta) => {
                Box::new(move || stream.pareto_deviate(gamma, delta).unwrap())
            }
            SourceSpec::Ear1(rate, a) => {
                let mut d = stream.exp_deviate(rate).unwrap();
                Box::new(move || {
                    let innovate = stream.uniform01() <= 1.0 - a;
                    let e = stream.exp_deviate(rate).unwrap();
                    d = a * d + if innovate { e } else { 0.0 };
                    d
                })
            }
            SourceSpec::Mmpp2(params) => {
                let p_mode0 = params.delta1 / (params.delta0 + params.delta1);
                let mut mode = usize::from(stream.uniform01() >= p_mode0);
                let lambda = [params.lambda0, params.lambda1];
                let delta = [params.delta0, params.delta1];
                let mut switch_in = stream.exp_deviate(delta[mode]).unwrap();
                Box::new(move || {
                    let mut gap = 0.0;
                    loop {
                        let e = stream.exp_deviate(lambda[mode]).unwrap();
                        if e < switch_in {
                            switch_in -= e;
                            return gap + e;
                        }
                        gap += switch_in;
                        mode = 1 - mode;
                        switch_in = stream.exp_deviate(delta[mode]).unwrap();
                    }
                })
            }
            SourceSpec::Trace(values) => {
                let mut i = 0;
                Box::new(move || {
                    let v = values[i % values.len()];
                    i += 1;
                    v
                })
            }
        }
    }
}

pub struct SimulateArgs {
    pub seed: u64,
    pub replications: u64,
    pub confidence: f64,
    pub digits: usize,
}

pub fn run_scenario(cfg: &Config, args: &SimulateArgs) -> Result<Table, CliError> {
    let model = cfg.scalar("model")?;
    match model {
        "gg1" | "ggkn" => queue_scenario(cfg, args),
        "mc-mm1" => mc_mm1_scenario(cfg, args),
        "mc-mmkk" => mc_mmkk_scenario(cfg, args),
        "cellular" => cellular_scenario(cfg, args),
        "inspector" => inspector_scenario(cfg, args),
        other => Err(CliError::Validation(format!("unknown model `{other}`"))),
    }
}

/// Replication table: one row per replication plus mean and CI half-width.
fn replication_table(
    columns: &[&str],
    rows: Vec<Vec<f64>>,
    args: &SimulateArgs,
) -> Result<Table, CliError> {
    let mut header = vec!["row".to_string()];
    header.extend(columns.iter().map(|c| c.to_string()));
    let mut table = Table::new(header);
    for (rep, row) in rows.iter().enumerate() {
        let mut cells = vec![rep.to_string()];
        cells.extend(row.iter().map(|v| fmt_sig(*v, args.digits)));
        table.push(cells);
    }
    let mut means = vec!["mean".to_string()];
    let mut widths = vec!["ci_halfwidth".to_string()];
    for col in 0..columns.len() {
        let observations: Vec<f64> = rows.iter().map(|r| r[col]).collect();
        let ci = confidence_interval(&observations, args.confidence)?;
        means.push(fmt_sig(ci.mean, args.digits));
        widths.push(fmt_sig(ci.half_width, args.digits));
    }
    table.push(means);
    table.push(widths);
    Ok(table)
}

fn queue_scenario(cfg: &Config, args: &SimulateArgs) -> Result<Table, CliError> {
    cfg.expect_keys(&[
        "model",
        "arrival",
        "service",
        "servers",
        "capacity",
        "arrivals",
        "warmup",
        "discipline",
        "inspector_rate",
    ])?;
    let arrival = SourceSpec::parse(cfg.scalar("arrival")?, "arrival")?;
    let service = SourceSpec::parse(cfg.scalar("service")?, "service")?;
    let servers = cfg.u64_or("servers", 1)? as u32;
    let horizon = cfg.u64_or("arrivals", 100_000)?;
    let capacity = cfg.u64_or("capacity", 0)?;
    let discipline = match cfg.has("discipline").then(|| cfg.scalar("discipline")).transpose()? {
        None | Some("fifo") => Discipline::Fifo,
        Some("lifo") => Discipline::LifoPreemptive,
        Some(other) => {
            return Err(CliError::Validation(format!("unknown discipline `{other}`")))
        }
    };
    let mut des = DesConfig {
        servers,
        capacity: (capacity > 0).then_some(capacity),
        discipline,
        horizon_arrivals: horizon,
        warmup_arrivals: cfg.u64_or("warmup", horizon / 10)?,
        keep_ledger: false,
        keep_departures: false,
        inspector: None,
    };
    if cfg.has("inspector_rate") {
        des.inspector = Some((cfg.f64("inspector_rate")?, args.seed ^ 0x1234_5678));
    }

    let base = RngStream::new(args.seed);
    let mut rows = Vec::new();
    for rep in 0..args.replications {
        let stream = base.substream(rep + 1);
        let mut gaps = arrival.gaps(stream.substream(1));
        let mut services = service.gaps(stream.substream(2));
        let source = std::iter::from_fn(|| Some(DesArrival::new(gaps(), services())))
            .take(horizon as usize);
        let r = des_run(&des, source)?;
        rows.push(vec![
            r.blocking,
            r.mean_delay,
            r.mean_wait,
            r.queue_mean_time,
            r.queue_mean_on_arrival,
            1.0 - r.idle_fraction,
        ]);
    }
    replication_table(
        &[
            "blocking",
            "mean_delay",
            "mean_wait",
            "queue_mean_time",
            "queue_mean_on_arrival",
            "busy_fraction",
        ],
        rows,
        args,
    )
}

fn mc_mm1_scenario(cfg: &Config, args: &SimulateArgs) -> Result<Table, CliError> {
    cfg.expect_keys(&["model", "lambda", "mu", "measurements"])?;
    let lambda = cfg.f64("lambda")?;
    let mu = cfg.f64("mu")?;
    let measurements = cfg.u64_or("measurements", 1_000_000)?;
    let base = RngStream::new(args.seed);
    let rows: Result<Vec<Vec<f64>>, CliError> = (0..args.replications)
        .map(|rep| {
            let mut stream = base.substream(rep + 1);
            Ok(vec![mc_mm1(lambda, mu, measurements, &mut stream)?])
        })
        .collect();
    replication_table(&["mean_queue"], rows?, args)
}

fn mc_mmkk_scenario(cfg: &Config, args: &SimulateArgs) -> Result<Table, CliError> {
    cfg.expect_keys(&["model", "lambda", "mu", "servers", "arrivals"])?;
    let lambda = cfg.f64("lambda")?;
    let mu = cfg.f64("mu")?;
    let servers = cfg.u64("servers")?;
    let arrivals = cfg.u64_or("arrivals", 1_000_000)?;
    let base = RngStream::new(args.seed);
    let rows: Result<Vec<Vec<f64>>, CliError> = (0..args.replications)
        .map(|rep| {
            let mut stream = base.substream(rep + 1);
            Ok(vec![mc_mmkk(lambda, mu, servers, arrivals, &mut stream)?])
        })
        .collect();
    replication_table(&["blocking"], rows?, args)
}

fn cellular_scenario(cfg: &Config, args: &SimulateArgs) -> Result<Table, CliError> {
    cfg.expect_keys(&[
        "model",
        "channels",
        "service_rate",
        "arrivals",
        "cells",
        "routing",
    ])?;
    let mut new_call_rates = Vec::new();
    let mut handover_rates = Vec::new();
    for (i, rec) in cfg.records("cells")?.iter().enumerate() {
        rec_expect_keys(rec, i, &["rate", "handover"])?;
        new_call_rates.push(rec_f64(rec, i, "rate")?);
        handover_rates.push(if rec.contains_key("handover") {
            rec_f64(rec, i, "handover")?
        } else {
            0.0
        });
    }
    let n = new_call_rates.len();
    let routing = if cfg.has("routing") {
        cfg.matrix("routing")?.to_vec()
    } else {
        vec![vec![0.0; n]; n]
    };
    let spec = CellularSpec {
        channels: cfg.u64("channels")?,
        new_call_rates,
        service_rate: cfg.f64("service_rate")?,
        handover_rates,
        routing,
    };
    let arrivals = cfg.u64_or("arrivals", 1_000_000)?;
    let base = RngStream::new(args.seed);
    let mut rows = Vec::new();
    for rep in 0..args.replications {
        let mut stream = base.substream(rep + 1);
        let r = cellular_sim(&spec, arrivals, &mut stream)?;
        let mut row = vec![r.overall_blocking];
        row.extend(
            r.per_cell_blocking
                .iter()
                .map(|b| b.unwrap_or(f64::NAN)),
        );
        rows.push(row);
    }
    let mut columns = vec!["overall_blocking".to_string()];
    columns.extend((0..n).map(|i| format!("cell{i}_blocking")));
    let column_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    replication_table(&column_refs, rows, args)
}

fn inspector_scenario(cfg: &Config, args: &SimulateArgs) -> Result<Table, CliError> {
    cfg.expect_keys(&["model", "lambda", "horizon", "picks"])?;
    let lambda = cfg.f64("lambda")?;
    let horizon = cfg.f64_or("horizon", 10_000.0)?;
    let picks = cfg.u64_or("picks", 1_000)? as usize;
    let base = RngStream::new(args.seed);
    let rows: Result<Vec<Vec<f64>>, CliError> = (0..args.replications)
        .map(|rep| {
            let mut stream = base.substream(rep + 1);
            let p = poisson_inspector_paradox_demo(lambda, horizon, picks, &mut stream)?;
            Ok(vec![p.straddling_mean, p.interval_mean])
        })
        .collect();
    replication_table(&["straddling_mean", "interval_mean"], rows?, args)
}
