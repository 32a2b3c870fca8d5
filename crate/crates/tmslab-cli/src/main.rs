//! Command-line front end: input parsing, experiment orchestration, and
//! CSV/JSON emission.
//!
//! Exit codes: 0 success, 1 parse error, 2 precondition violation,
//! 3 numeric failure.

use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::process::ExitCode;
use tmslab::defaults::{EIGEN_TOL, ENUMERATION_CAP};
use tmslab::ekp;
use tmslab::error::{Error, ErrorClass};
use tmslab::observable::LocallyConstantFunction;
use tmslab::renewal::{Discriminant, LoopSystem};
use tmslab::shift::MarkovGraph;
use tmslab::spec_io::{self, ParsedSystem};
use tmslab::thermo;
use tmslab::transfer::{perron_data, pressure_finite, transfer_matrix, zstar_split_check};

#[derive(Parser)]
#[command(
    name = "tmslab",
    about = "Thermodynamic formalism laboratory for topological Markov shifts",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Graph or loop-system spec: a JSON file path, inline JSON, or the
    /// shorthands builtin:full:N, builtin:golden, loop:{f:{1:1,2:1}}.
    #[arg(long, default_value = "builtin:full:2")]
    graph: String,

    /// Potential phi (JSON file/inline, indicator:WORD, const:C).
    #[arg(long, default_value = "const:0")]
    potential: String,

    /// Observable psi (JSON file/inline, indicator:WORD, const:C).
    #[arg(long)]
    observable: Option<String>,

    /// Output artifact path (CSV or JSON depending on the command).
    #[arg(long)]
    out: Option<String>,

    /// Root-finding tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Grid "lo:hi:n".
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,

    /// Window parameter (Legendre half-width; sharpness start).
    #[arg(long)]
    window: Option<f64>,

    /// Battery seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Enumeration cap.
    #[arg(long, default_value_t = ENUMERATION_CAP)]
    cap: usize,

    /// Emit machine-readable JSON to stdout as well.
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Gurevich pressure and RPF eigendata on a finite graph.
    Pressure(Common),
    /// SPR verdict, discriminant, and entropy of a loop system.
    Spr(Common),
    /// Pressure curve CSV: t,p,p1,p2_fd,p2_gk.
    Curve(Common),
    /// Restricted-pressure window CSV: a,t_of_a,q,q1,q2.
    Legendre(Common),
    /// EKP scan over the measure battery; CSV + summary JSON.
    EkpScan(Common),
    /// Sharpness sequence of the optimal EKP bound.
    Sharpness(Common),
    /// Escape-to-infinity family and the pressure-at-infinity bound.
    Escape(Common),
    /// First-return splitting identities at a state.
    Zsplit(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pressure(c) => cmd_pressure(c),
        Command::Spr(c) => cmd_spr(c),
        Command::Curve(c) => cmd_curve(c),
        Command::Legendre(c) => cmd_legendre(c),
        Command::EkpScan(c) => cmd_ekp_scan(c),
        Command::Sharpness(c) => cmd_sharpness(c),
        Command::Escape(c) => cmd_escape(c),
        Command::Zsplit(c) => cmd_zsplit(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Parse => ExitCode::from(1),
                ErrorClass::Precondition => ExitCode::from(2),
                ErrorClass::Numeric => ExitCode::from(3),
            }
        }
    }
}

/// 15 significant digits, locale-independent.
fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..15).contains(&mag) {
        return format!("{x:.14e}");
    }
    let decimals = (14 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn graph_of(c: &Common) -> Result<MarkovGraph, Error> {
    match spec_io::parse_system(&c.graph)? {
        ParsedSystem::Graph(g) => Ok(g),
        ParsedSystem::Loops(_) => Err(Error::Domain(
            "this command needs a finite graph, not a loop system".into(),
        )),
    }
}

fn loops_of(c: &Common) -> Result<LoopSystem, Error> {
    match spec_io::parse_system(&c.graph)? {
        ParsedSystem::Loops(ls) => Ok(ls),
        ParsedSystem::Graph(_) => Err(Error::Domain(
            "this command needs a loop system (loop:{...})".into(),
        )),
    }
}

fn potential_of(c: &Common, g: &MarkovGraph) -> Result<LocallyConstantFunction, Error> {
    spec_io::parse_observable(&c.potential, g)
}

fn observable_of(c: &Common, g: &MarkovGraph) -> Result<LocallyConstantFunction, Error> {
    match &c.observable {
        Some(text) => spec_io::parse_observable(text, g),
        None => Ok(LocallyConstantFunction::indicator(&[0])),
    }
}

fn parse_grid(c: &Common, default: (f64, f64, usize)) -> Result<Vec<f64>, Error> {
    let (lo, hi, n) = match &c.grid {
        None => default,
        Some(text) => {
            let parts: Vec<&str> = text.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("grid {text:?} is not lo:hi:n")));
            }
            let lo: f64 = parts[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad grid lo {:?}", parts[0])))?;
            let hi: f64 = parts[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad grid hi {:?}", parts[1])))?;
            let n: usize = parts[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad grid n {:?}", parts[2])))?;
            (lo, hi, n)
        }
    };
    if n < 1 || hi < lo {
        return Err(Error::Parse("grid needs n >= 1 and hi >= lo".into()));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

fn write_artifact(c: &Common, default_name: &str, content: &str) -> Result<String, Error> {
    let path = c.out.clone().unwrap_or_else(|| default_name.to_string());
    std::fs::write(&path, content)?;
    Ok(path)
}

fn cmd_pressure(c: &Common) -> Result<(), Error> {
    let g = graph_of(c)?;
    let phi = potential_of(c, &g)?;
    let p = pressure_finite(&g, &phi, EIGEN_TOL)?;
    println!("{}", fmt_g(p));
    if g.is_mixing() {
        let l = transfer_matrix(&g, &phi)?;
        let rpf = perron_data(&l, EIGEN_TOL)?;
        println!("lambda = {}", fmt_g(rpf.lambda));
        println!("iterations = {}", rpf.iterations);
        if c.json {
            let blocks: Vec<String> = l
                .block_words
                .iter()
                .map(|w| g.word_ids(w).join(","))
                .collect();
            let json = serde_json::json!({
                "pressure": p,
                "lambda": rpf.lambda,
                "states": blocks,
                "h": rpf.h,
                "nu": rpf.nu,
                "residual_h": rpf.residual_h,
                "residual_nu": rpf.residual_nu,
            });
            println!("{json}");
        }
    }
    Ok(())
}

fn cmd_spr(c: &Common) -> Result<(), Error> {
    let ls = loops_of(c)?;
    let verdict = ls.is_spr();
    let spr_text = match verdict.spr {
        Some(true) => "true",
        Some(false) => "false",
        None => "boundary",
    };
    println!("SPR = {spr_text}");
    println!(
        "F(R) in [{}, {}]",
        fmt_g(verdict.f_at_radius.0),
        fmt_g(verdict.f_at_radius.1)
    );
    match ls.discriminant() {
        Discriminant::Infinite => println!("discriminant = +infinity"),
        Discriminant::Finite { value, uncertainty } => {
            println!("discriminant = {} (+/- {})", fmt_g(value), fmt_g(uncertainty))
        }
    }
    let h = ls.gurevich_entropy(c.tol)?;
    println!("h = {}", fmt_g(h));
    if c.json {
        let json = serde_json::json!({
            "spr": spr_text,
            "f_at_radius": [verdict.f_at_radius.0, verdict.f_at_radius.1],
            "entropy": h,
        });
        println!("{json}");
    }
    Ok(())
}

fn cmd_curve(c: &Common) -> Result<(), Error> {
    let g = graph_of(c)?;
    let phi = potential_of(c, &g)?;
    let psi = observable_of(c, &g)?;
    let grid = parse_grid(c, (-3.0, 3.0, 25))?;
    let curve = thermo::pressure_curve(&g, &phi, &psi, &grid, EIGEN_TOL)?;
    let mut csv = String::from("t,p,p1,p2_fd,p2_gk\n");
    for i in 0..curve.ts.len() {
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_g(curve.ts[i]),
            fmt_g(curve.p[i]),
            fmt_g(curve.p1[i]),
            fmt_g(curve.p2_fd[i]),
            fmt_g(curve.p2_gk[i])
        )
        .ok();
    }
    let path = write_artifact(c, "curve.csv", &csv)?;
    println!("pressure curve on {} points -> {path}", curve.ts.len());
    println!(
        "min second difference = {} (convexity certificate)",
        fmt_g(curve.min_second_difference)
    );
    let max_dev = curve
        .p2_fd
        .iter()
        .zip(&curve.p2_gk)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("max |p2_fd - p2_gk| = {}", fmt_g(max_dev));
    Ok(())
}

fn cmd_legendre(c: &Common) -> Result<(), Error> {
    let g = graph_of(c)?;
    let phi = potential_of(c, &g)?;
    let psi = observable_of(c, &g)?;
    let samples = match &c.grid {
        Some(_) => parse_grid(c, (0.0, 1.0, 21))?.len(),
        None => 21,
    };
    let data = thermo::legendre_data(&g, &phi, &psi, c.window, samples, c.tol)?;
    let mut csv = String::from("a,t_of_a,q,q1,q2\n");
    for s in &data.samples {
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_g(s.a),
            fmt_g(s.t),
            fmt_g(s.q),
            fmt_g(s.q1),
            fmt_g(s.q2)
        )
        .ok();
    }
    let path = write_artifact(c, "legendre.csv", &csv)?;
    println!(
        "restricted pressure on [{}, {}] -> {path}",
        fmt_g(data.a0 - data.half_width),
        fmt_g(data.a0 + data.half_width)
    );
    println!("a0 = {}", fmt_g(data.a0));
    println!("sigma^2 = {}", fmt_g(data.sigma2));
    println!(
        "max second difference = {} (concavity certificate)",
        fmt_g(data.max_second_difference)
    );
    Ok(())
}

fn cmd_ekp_scan(c: &Common) -> Result<(), Error> {
    let g = graph_of(c)?;
    let phi = potential_of(c, &g)?;
    let psi = observable_of(c, &g)?;
    let battery_id = format!("tmslab-ekp-battery-v1-seed{}", c.seed);
    let family = ekp::battery_measures(&g, EIGEN_TOL)?;
    let (records, summary) = ekp::ekp_scan(&g, &phi, &psi, &family, 1.0, &battery_id)?;
    let mut csv =
        String::from("provenance,int_psi_mu,int_psi_m,P_mu,P_G,gap,ratio,sigma,holder_norm\n");
    for r in &records {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.provenance,
            fmt_g(r.int_psi_mu),
            fmt_g(r.int_psi_m),
            fmt_g(r.p_mu),
            fmt_g(r.p_g),
            fmt_g(r.gap),
            fmt_g(r.ratio),
            fmt_g(r.sigma),
            fmt_g(r.holder_norm)
        )
        .ok();
    }
    let path = write_artifact(c, "ekp_scan.csv", &csv)?;
    let json = serde_json::json!({
        "empirical_C": summary.empirical_c,
        "sharp_limit": summary.sharp_limit,
        "battery_id": summary.battery_id,
    });
    let json_path = path.replace(".csv", ".json");
    std::fs::write(&json_path, format!("{json}\n"))?;
    println!("{} records -> {path}", records.len());
    println!("max ratio = {}", fmt_g(summary.max_ratio));
    println!("empirical_C = {}", fmt_g(summary.empirical_c));
    println!("sharp limit sqrt(2) sigma = {}", fmt_g(summary.sharp_limit));
    if c.json {
        println!("{json}");
    }
    Ok(())
}

fn cmd_sharpness(c: &Common) -> Result<(), Error> {
    let g = graph_of(c)?;
    let phi = potential_of(c, &g)?;
    let psi = observable_of(c, &g)?;
    let t0 = c.window.unwrap_or(0.5);
    let steps = match &c.grid {
        Some(_) => parse_grid(c, (0.0, 1.0, 7))?.len(),
        None => 7,
    };
    let ts: Vec<f64> = (1..=steps).map(|k| t0 * 0.5f64.powi(k as i32 - 1)).collect();
    let records = ekp::sharpness_sequence(&g, &phi, &psi, &ts, 1.0)?;
    let mut csv = String::from("t,int_psi_nu,P_nu,gap,ratio,limit\n");
    let limit = std::f64::consts::SQRT_2 * records[0].sigma;
    for (t, r) in ts.iter().zip(&records) {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_g(*t),
            fmt_g(r.int_psi_mu),
            fmt_g(r.p_mu),
            fmt_g(r.gap),
            fmt_g(r.ratio),
            fmt_g(limit)
        )
        .ok();
    }
    let path = write_artifact(c, "sharpness.csv", &csv)?;
    println!("sharpness sequence ({} tilts) -> {path}", ts.len());
    println!("sqrt(2) sigma = {}", fmt_g(limit));
    let last = records.last().unwrap();
    println!(
        "final ratio = {} (relative gap {})",
        fmt_g(last.ratio),
        fmt_g((last.ratio - limit).abs() / limit)
    );
    Ok(())
}

fn cmd_escape(c: &Common) -> Result<(), Error> {
    let ls = loops_of(c)?;
    let (bound, records) = ls.pressure_at_infinity_lower_bound(c.cap, c.tol)?;
    let mut csv = String::from("n,window_hi,pressure,entropy,base_mass,int_psi\n");
    for r in &records {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.n,
            r.window.1,
            fmt_g(r.pressure),
            fmt_g(r.abramov_entropy),
            fmt_g(r.base_mass),
            fmt_g(r.int_psi)
        )
        .ok();
    }
    let path = write_artifact(c, "escape.csv", &csv)?;
    println!("{} escape windows -> {path}", records.len());
    println!("pressure-at-infinity lower bound = {}", fmt_g(bound));
    println!("gurevich entropy = {}", fmt_g(ls.gurevich_entropy(c.tol)?));
    Ok(())
}

fn cmd_zsplit(c: &Common) -> Result<(), Error> {
    let g = graph_of(c)?;
    let phi = potential_of(c, &g)?;
    let a = 0usize;
    let outs = g.out(a).to_vec();
    let e0: Vec<(usize, usize)> = outs.first().map(|&b| (a, b)).into_iter().collect();
    let e1: Vec<(usize, usize)> = outs.get(1).map(|&b| (a, b)).into_iter().collect();
    let n_max = c.cap.min(12);
    let mut csv = String::from("n,total,e0,e1,core,sub0,sub1,ok\n");
    let mut all_ok = true;
    for n in 1..=n_max {
        let rep = zstar_split_check(&g, &phi, a, &e0, &e1, n, c.cap)?;
        all_ok &= rep.ok;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            n,
            fmt_g(rep.total),
            fmt_g(rep.parts[0]),
            fmt_g(rep.parts[1]),
            fmt_g(rep.parts[2]),
            fmt_g(rep.subgraph[0]),
            fmt_g(rep.subgraph[1]),
            rep.ok
        )
        .ok();
    }
    let path = write_artifact(c, "zsplit.csv", &csv)?;
    println!(
        "splitting identities at state {} for n <= {n_max} -> {path}",
        g.id(a)
    );
    println!("all identities exact: {all_ok}");
    if !all_ok {
        return Err(Error::Domain("splitting identity violated".into()));
    }
    Ok(())
}

