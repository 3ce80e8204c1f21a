//! Renders the bundled synthetic dataset under `fixtures/synthetic/`.

use chrono::{Duration, NaiveDate};
use hydro_fpv::fixture;
use hydro_fpv::SystemParams;
use std::fmt::Write;

use crate::ingest::format_timestamp;

/// Transmission capacities listed in the bundled `[sweep]` section, MWh per step.
pub const SWEEP_P_VALUES: [f64; 6] = [100.0, 300.0, 600.0, 900.0, 1300.0, 2000.0];

fn start() -> chrono::NaiveDateTime {
    NaiveDate::from_ymd_opt(2023, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

fn hourly(header: &str, hours: usize, value: fn(usize) -> f64) -> String {
    let mut s = format!("timestamp,{header}\n");
    for h in 0..hours {
        let ts = format_timestamp(start() + Duration::hours(h as i64));
        writeln!(s, "{ts},{}", value(h)).unwrap();
    }
    s
}

/// `(file name, contents)` for every bundled file.
pub fn render() -> Vec<(&'static str, String)> {
    let hours: usize = fixture::MONTH_HOURS.iter().sum();
    let mut inflow = String::from("date,m3_per_day\n");
    for d in 0..hours / 24 {
        let date = (start() + Duration::days(d as i64)).date();
        writeln!(
            inflow,
            "{},{}",
            date.format("%Y-%m-%d"),
            fixture::daily_inflow(d)
        )
        .unwrap();
    }
    let mut head = String::from("volume_m3,head_m\n");
    for (v, h) in fixture::head_table() {
        writeln!(head, "{v},{h}").unwrap();
    }

    let series = fixture::series(0, hours);
    let curve = fixture::fitted_head()
        .expect("fixture head table fits")
        .curve;
    let initial = fixture::initial_state();
    let contracts = fixture::contracts(
        &series,
        &fixture::month_spans(),
        &initial,
        &SystemParams::default(),
        &curve,
    )
    .expect("fixture contracts are reachable");
    let list = |xs: &[f64]| {
        xs.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let targets: Vec<f64> = contracts.iter().map(|c| c.target).collect();
    let config = format!(
        r#"# Synthetic two-month dataset (January and February 2023).

[data]
price = "price.csv"
solar = "solar.csv"
inflow = "inflow.csv"
head = "head.csv"

[initial]
v0 = {v0:?}
u0 = {u0:?}

[contracts]
release_m3 = [{targets}]

[sweep]
p_values = [{p}]

[oracle]
start = 300
steps = 6

[scenario]
mape_levels = [0.0, 0.05, 0.1, 0.15, 0.2]
runs = 200
ar_coeff = 0.7
seed = 42
"#,
        v0 = initial.v0,
        u0 = initial.u0,
        targets = list(&targets),
        p = list(&SWEEP_P_VALUES),
    );

    vec![
        ("price.csv", hourly("usd_per_mwh", hours, fixture::price)),
        (
            "solar.csv",
            hourly("capacity_factor", hours, fixture::capacity_factor),
        ),
        ("inflow.csv", inflow),
        ("head.csv", head),
        ("config.toml", config),
    ]
}
