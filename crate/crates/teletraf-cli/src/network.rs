//! `network` subcommand: Jackson solver, Erlang fixed point, parameter
//! conversion.

use teletraf::netcalc::{
    convert_params, efpa_solve_with, jackson_solve, CircuitNetworkSpec, EfpaOptions, JacksonSpec,
    LinkSpec, RouteSpec,
};

use crate::config::{self, rec_expect_keys, rec_f64, rec_list, rec_str, rec_u64, Config};
use crate::output::Table;
use crate::CliError;

pub fn jackson_from_config(cfg: &Config) -> Result<JacksonSpec<f64>, CliError> {
    cfg.expect_keys(&["queues", "routing"])?;
    let queues = cfg.records("queues")?;
    let mut service = Vec::new();
    let mut external = Vec::new();
    for (i, rec) in queues.iter().enumerate() {
        rec_expect_keys(rec, i, &["mu", "external_rate"])?;
        service.push(rec_f64(rec, i, "mu")?);
        external.push(if rec.contains_key("external_rate") {
            rec_f64(rec, i, "external_rate")?
        } else {
            0.0
        });
    }
    let routing: Vec<Vec<f64>> = cfg.matrix("routing")?.to_vec();
    Ok(JacksonSpec::new(external, service, routing)?)
}

pub fn cmd_jackson(cfg: &Config, digits: usize) -> Result<Table, CliError> {
    let spec = jackson_from_config(cfg)?;
    let sol = jackson_solve(&spec)?;
    let mut table = Table::new(vec![
        "queue",
        "arrival_rate",
        "load",
        "mean_queue",
        "mean_delay",
    ]);
    for (i, q) in sol.queues.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            crate::output::fmt_sig(sol.arrival_rates[i], digits),
            crate::output::fmt_sig(sol.loads[i], digits),
            crate::output::fmt_sig(q.mean_queue, digits),
            crate::output::fmt_sig(q.mean_delay, digits),
        ]);
    }
    table.push(vec![
        "network".into(),
        String::new(),
        String::new(),
        crate::output::fmt_sig(
            sol.queues.iter().map(|q| q.mean_queue).sum::<f64>(),
            digits,
        ),
        crate::output::fmt_sig(sol.network_mean_delay, digits),
    ]);
    table.push(vec![
        "all_empty_probability".into(),
        crate::output::fmt_sig(sol.all_empty, digits),
        String::new(),
        String::new(),
        String::new(),
    ]);
    Ok(table)
}

pub fn circuit_from_config(cfg: &Config) -> Result<CircuitNetworkSpec<f64>, CliError> {
    cfg.expect_keys(&["links", "routes"])?;
    let mut links = Vec::new();
    for (i, rec) in cfg.records("links")?.iter().enumerate() {
        rec_expect_keys(rec, i, &["id", "capacity"])?;
        links.push(LinkSpec {
            id: rec_str(rec, i, "id")?.to_string(),
            capacity: rec_u64(rec, i, "capacity")? as u32,
        });
    }
    let mut routes = Vec::new();
    for (i, rec) in cfg.records("routes")?.iter().enumerate() {
        rec_expect_keys(rec, i, &["links", "offered"])?;
        routes.push(RouteSpec {
            links: rec_list(rec, i, "links")?.to_vec(),
            offered: rec_f64(rec, i, "offered")?,
        });
    }
    Ok(CircuitNetworkSpec::new(links, routes)?)
}

pub fn cmd_efpa(
    cfg: &Config,
    tol: f64,
    max_iter: usize,
    damping: f64,
    digits: usize,
) -> Result<Table, CliError> {
    let spec = circuit_from_config(cfg)?;
    let sol = efpa_solve_with(
        &spec,
        EfpaOptions { tol, max_iter, damping },
    )?;
    let mut table = Table::new(vec!["kind", "name", "offered", "blocking"]);
    for (link, (offered, blocking)) in spec
        .links()
        .iter()
        .zip(sol.link_offered.iter().zip(&sol.link_blocking))
    {
        table.push(vec![
            "link".into(),
            link.id.clone(),
            crate::output::fmt_sig(*offered, digits),
            crate::output::fmt_sig(*blocking, digits),
        ]);
    }
    for (i, (route, blocking)) in
        spec.routes().iter().zip(&sol.route_blocking).enumerate()
    {
        table.push(vec![
            "route".into(),
            format!("{}:{}", i, route.links.join("-")),
            crate::output::fmt_sig(route.offered, digits),
            crate::output::fmt_sig(*blocking, digits),
        ]);
    }
    Ok(table)
}

pub fn cmd_convert(r: f64, b: f64, c: f64, u: f64, digits: usize) -> Result<Table, CliError> {
    let conv = convert_params(r, b, c, u)?;
    let mut table = Table::metrics();
    table.metric("arrival_rate", conv.arrival_rate, digits);
    table.metric("mean_holding_time", conv.mean_holding_time, digits);
    table.metric("offered_erlangs", conv.offered_erlangs, digits);
    Ok(table)
}

pub fn load_config(path: &std::path::Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read {}: {e}", path.display()))
    })?;
    Ok(config::parse(&text)?)
}
