//! Effective-intrinsic-ergodicity harness: the EKP quotient over measure
//! families, the sharp `sqrt(2) sigma` regime, sharpness sequences, and the
//! divergence of the quotient on non-SPR renewal systems.

use crate::defaults::EIGEN_TOL;
use crate::error::{Error, Result};
use crate::measure::{
    self, bernoulli_measure, periodic_measure, rpf_measure, subgraph_measure,
    tilted_equilibrium, MarkovMeasure,
};
use crate::observable::{decorrelated_observable, holder_norm, LocallyConstantFunction};
use crate::renewal::{LoopObservable, LoopSystem};
use crate::shift::{enumerate_cycles, MarkovGraph};
use crate::thermo::{asymptotic_variance, restricted_pressure};
use crate::transfer::{pressure_finite, remove_edges_component};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// One EKP comparison: a measure against the equilibrium measure.
#[derive(Debug, Clone)]
pub struct EKPRecord {
    pub provenance: String,
    pub int_psi_mu: f64,
    pub int_psi_m: f64,
    pub p_mu: f64,
    pub p_g: f64,
    /// `P_G(phi) - P_mu(phi) >= 0` by the variational principle.
    pub gap: f64,
    /// `|int psi dmu - int psi dm| / sqrt(gap)`; zero gap with zero
    /// numerator is ratio 0 by the limit convention.
    pub ratio: f64,
    pub sigma: f64,
    pub holder_norm: f64,
}

/// Scan summary: the empirical global constant and the sharp-regime
/// comparison value `sqrt(2) sigma_m(psi)`.
#[derive(Debug, Clone)]
pub struct EkpSummary {
    pub battery_id: String,
    /// max over records of ratio / ||psi||_beta.
    pub empirical_c: f64,
    pub max_ratio: f64,
    /// max ratio over the subfamily with gap <= 1e-4.
    pub high_pressure_max_ratio: f64,
    pub sharp_limit: f64,
}

fn make_record(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    mu: &MarkovMeasure,
    int_psi_m: f64,
    p_g: f64,
    sigma: f64,
    norm: f64,
) -> Result<EKPRecord> {
    let int_psi_mu = measure::integrate(mu, psi, g)?;
    let p_mu = measure::measure_pressure(mu, phi, g)?;
    let gap = p_g - p_mu;
    if gap < -1e-10 {
        return Err(Error::Domain(format!(
            "variational principle violated: gap = {gap} for {}",
            mu.provenance()
        )));
    }
    let numerator = (int_psi_mu - int_psi_m).abs();
    let ratio = if gap <= 1e-14 {
        if numerator > 1e-8 {
            return Err(Error::Domain(
                "zero pressure gap with nonzero integral difference contradicts uniqueness".into(),
            ));
        }
        0.0
    } else {
        numerator / gap.sqrt()
    };
    Ok(EKPRecord {
        provenance: mu.provenance().to_string(),
        int_psi_mu,
        int_psi_m,
        p_mu,
        p_g,
        gap: gap.max(0.0),
        ratio,
        sigma,
        holder_norm: norm,
    })
}

/// Evaluates the EKP quotient for every measure in the family.
pub fn ekp_scan(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    family: &[MarkovMeasure],
    beta: f64,
    battery_id: &str,
) -> Result<(Vec<EKPRecord>, EkpSummary)> {
    let m = rpf_measure(g, phi, EIGEN_TOL)?;
    let p_g = pressure_finite(g, phi, EIGEN_TOL)?;
    let int_psi_m = measure::integrate(&m, psi, g)?;
    let sigma = asymptotic_variance(&m, psi, g)?.max(0.0).sqrt();
    let norm = holder_norm(g, psi, beta).norm;
    let mut records = Vec::with_capacity(family.len());
    for mu in family {
        records.push(make_record(g, phi, psi, mu, int_psi_m, p_g, sigma, norm)?);
    }
    let summary = summarize(&records, sigma, norm, battery_id);
    Ok((records, summary))
}

fn summarize(records: &[EKPRecord], sigma: f64, norm: f64, battery_id: &str) -> EkpSummary {
    let max_ratio = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let high_pressure_max_ratio = records
        .iter()
        .filter(|r| r.gap <= 1e-4)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    EkpSummary {
        battery_id: battery_id.to_string(),
        empirical_c: if norm > 0.0 { max_ratio / norm } else { 0.0 },
        max_ratio,
        high_pressure_max_ratio,
        sharp_limit: std::f64::consts::SQRT_2 * sigma,
    }
}

/// The sharpness sequence of the optimal EKP bound: tilted equilibrium
/// measures at `t_n -> 0` whose quotients converge to
/// `sqrt(2) sigma_m(psi)`. Inputs with vanishing asymptotic variance are
/// refused: those are coboundaries plus constants and the bound degenerates.
pub fn sharpness_sequence(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    ts: &[f64],
    beta: f64,
) -> Result<Vec<EKPRecord>> {
    let m = rpf_measure(g, phi, EIGEN_TOL)?;
    let p_g = pressure_finite(g, phi, EIGEN_TOL)?;
    let int_psi_m = measure::integrate(&m, psi, g)?;
    let sigma2 = asymptotic_variance(&m, psi, g)?;
    if sigma2 <= 1e-12 {
        return Err(Error::Domain(
            "asymptotic variance vanishes (psi is a coboundary plus a constant), \
             so the sharp bound is degenerate"
                .into(),
        ));
    }
    let sigma = sigma2.sqrt();
    let norm = holder_norm(g, psi, beta).norm;
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        let nu = tilted_equilibrium(g, phi, psi, t, EIGEN_TOL)?;
        out.push(make_record(g, phi, psi, &nu, int_psi_m, p_g, sigma, norm)?);
    }
    Ok(out)
}

/// Empirical high-pressure regime: the largest gap threshold below which
/// every family member obeys the sharp bound `sqrt(2) e^eps sigma`.
#[derive(Debug, Clone)]
pub struct SharpRegimeReport {
    pub epsilon: f64,
    pub bound: f64,
    /// Largest `gap` such that all records with `gap <=` it pass.
    pub threshold: f64,
    /// The paper-shaped reference `eps^2 (sigma / ||psi||)^6`.
    pub shape_reference: f64,
    pub all_pass: bool,
}

pub fn sharp_regime_check(records: &[EKPRecord], epsilon: f64) -> Result<SharpRegimeReport> {
    let first = records
        .first()
        .ok_or_else(|| Error::Domain("empty record set".into()))?;
    let sigma = first.sigma;
    let norm = first.holder_norm;
    let bound = std::f64::consts::SQRT_2 * epsilon.exp() * sigma;
    let mut sorted: Vec<&EKPRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    let mut threshold = 0.0;
    let mut all_pass = true;
    for r in &sorted {
        if r.ratio <= bound {
            threshold = r.gap;
        } else {
            all_pass = false;
            break;
        }
    }
    let shape_reference = if norm > 0.0 {
        epsilon * epsilon * (sigma / norm).powi(6)
    } else {
        0.0
    };
    Ok(SharpRegimeReport {
        epsilon,
        bound,
        threshold,
        shape_reference,
        all_pass,
    })
}

/// Escape-family demonstration that non-SPR systems violate every EKP
/// bound: the pressure gaps vanish while the base-cylinder integral stays
/// away from any candidate equilibrium value, so the quotient diverges.
#[derive(Debug, Clone)]
pub struct SprNecessityReport {
    pub p_g: f64,
    /// Stand-in for the (nonexistent) equilibrium integral: the first
    /// escape record's value.
    pub reference: f64,
    /// `(n, P_mu_n, mu_n[a], ratio_n)` per window.
    pub rows: Vec<(usize, f64, f64, f64)>,
    pub final_ratio: f64,
}

pub fn spr_necessity_demo(
    ls: &LoopSystem,
    schedule: &[usize],
    tol: f64,
) -> Result<SprNecessityReport> {
    match ls.is_spr().spr {
        Some(false) => {}
        _ => {
            return Err(Error::Domain(
                "refused: the loop system is SPR (or numerically boundary); escape \
                 measures cannot approach the pressure"
                    .into(),
            ))
        }
    }
    let p_g = ls.gurevich_entropy(tol)?;
    let mut rows = Vec::new();
    let mut reference = None;
    for &n in schedule {
        let rec = ls.escape_family(n, &LoopObservable::BaseIndicator, tol)?;
        let refv = *reference.get_or_insert(rec.int_psi);
        let gap = (p_g - rec.pressure).max(f64::MIN_POSITIVE);
        let ratio = (rec.int_psi - refv).abs() / gap.sqrt();
        rows.push((n, rec.pressure, rec.base_mass, ratio));
    }
    let final_ratio = rows.last().map(|r| r.3).unwrap_or(0.0);
    Ok(SprNecessityReport {
        p_g,
        reference: reference.unwrap_or(0.0),
        rows,
        final_ratio,
    })
}

/// Window bounds of the restricted pressure around `a0`, with user-supplied
/// `delta` standing in for the non-constructive constant. The curvature
/// window uses the empirical third derivative for the `H` constant.
#[derive(Debug, Clone)]
pub struct KadyrovReport {
    pub a0: f64,
    pub sigma2: f64,
    pub h_constant: f64,
    pub window: f64,
    /// Worst slack of the two-sided quadratic bound inside the window
    /// (positive = satisfied).
    pub quadratic_slack: f64,
    /// Worst slack of the linear lower bound outside the window.
    pub linear_slack: f64,
}

pub fn kadyrov_window_check(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    delta: f64,
    tol: f64,
) -> Result<KadyrovReport> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::Domain("delta must lie in (0, 1/3)".into()));
    }
    let m = rpf_measure(g, phi, EIGEN_TOL)?;
    let a0 = measure::integrate(&m, psi, g)?;
    let sigma2 = asymptotic_variance(&m, psi, g)?;
    if sigma2 <= 0.0 {
        return Err(Error::Domain("degenerate direction (zero variance)".into()));
    }
    let p_g = pressure_finite(g, phi, EIGEN_TOL)?;
    // empirical third derivative of the pressure via the Green-Kubo second
    let h_fd = 1e-3;
    let p2 = |t: f64| -> Result<f64> {
        let m_t = tilted_equilibrium(g, phi, psi, t, EIGEN_TOL)?;
        asymptotic_variance(&m_t, psi, g)
    };
    let p3 = (p2(h_fd)? - p2(-h_fd)?) / (2.0 * h_fd);
    let h_constant = 8.0 * p3.abs().max(1.0);
    let window = delta * sigma2 * sigma2 / h_constant;
    let q_gap = |a: f64| -> Result<f64> {
        let (q, _) = restricted_pressure(g, phi, psi, a, tol)?;
        Ok(p_g - q)
    };
    let mut quadratic_slack = f64::INFINITY;
    for k in 1..=5 {
        for sign in [-1.0, 1.0] {
            let a = a0 + sign * window * k as f64 / 5.0;
            let gap = q_gap(a)?;
            let quad = (a - a0).powi(2) / (2.0 * sigma2);
            let upper = delta.exp() * quad - gap;
            let lower = gap - (-delta).exp() * quad;
            quadratic_slack = quadratic_slack.min(upper).min(lower);
        }
    }
    // outside the window: linear lower bound via the concavity chord
    let (lo_mean, hi_mean) = crate::thermo::asymptotic_slopes(g, psi)?;
    let edge = (a0 - lo_mean).min(hi_mean - a0);
    let mut linear_slack = f64::INFINITY;
    for k in 1..=4 {
        for sign in [-1.0, 1.0] {
            let dist = window + (0.6 * edge - window) * k as f64 / 4.0;
            if dist <= window || dist >= edge {
                continue;
            }
            let a = a0 + sign * dist;
            let gap = q_gap(a)?;
            let bound = delta * sigma2 / (8.0 * h_constant) * dist;
            linear_slack = linear_slack.min(gap - bound);
        }
    }
    Ok(KadyrovReport {
        a0,
        sigma2,
        h_constant,
        window,
        quadratic_slack,
        linear_slack,
    })
}

/// The variance-rescued observable of the arbitrary-measure EKP proof:
/// returns `psi` itself when its variance is already comparable to its
/// norm, else `psi + ||psi|| A` with `A` the decorrelated observable, which
/// matches both integrals of `psi` and has variance bounded below.
pub fn rescued_observable(
    g: &MarkovGraph,
    psi: &LocallyConstantFunction,
    mu: &MarkovMeasure,
    m: &MarkovMeasure,
    beta: f64,
    cap: usize,
) -> Result<LocallyConstantFunction> {
    let a = decorrelated_observable(mu, m, g, cap)?;
    let q = asymptotic_variance(m, &a, g)?.max(0.0).sqrt();
    let norm_psi = holder_norm(g, psi, beta).norm;
    let sigma_psi = asymptotic_variance(m, psi, g)?.max(0.0).sqrt();
    if sigma_psi >= q * norm_psi / 3.0 {
        return Ok(psi.clone());
    }
    psi.add(g, &a.scale(norm_psi))
}

/// The deterministic graph battery: full 2-shift, golden mean, and five
/// seeded random mixing graphs on at most 6 states.
pub fn battery_graphs(seed: u64) -> Vec<(String, MarkovGraph)> {
    let mut out = vec![
        ("full2".to_string(), MarkovGraph::full_shift(2).unwrap()),
        ("golden".to_string(), MarkovGraph::golden_mean()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..5 {
        out.push((
            format!("rand{i}"),
            MarkovGraph::random_mixing_sized(&mut rng, 6, 0.5),
        ));
    }
    out
}

/// The fixed observable list for a graph: a first-state indicator, a
/// deterministic memory-2 table, and a coboundary-perturbed indicator.
pub fn battery_observables(g: &MarkovGraph) -> Vec<(String, LocallyConstantFunction)> {
    let ind = LocallyConstantFunction::indicator(&[0]);
    let mut table = std::collections::HashMap::new();
    for (i, w) in g.admissible_words(2).into_iter().enumerate() {
        // fixed low-discrepancy values in [-1, 1]
        let x = ((i as f64 + 1.0) * 0.754877666).fract();
        table.insert(w, 2.0 * x - 1.0);
    }
    let two = LocallyConstantFunction::new(2, table, 0.0).unwrap();
    let u = LocallyConstantFunction::indicator(&[g.state_count() - 1]).scale(0.6);
    let perturbed = ind
        .add(g, &crate::observable::coboundary(g, &u, 0.0))
        .unwrap();
    vec![
        ("indicator".to_string(), ind),
        ("memory2".to_string(), two),
        ("perturbed".to_string(), perturbed),
    ]
}

/// The measure battery for a graph: Bernoulli scans on full shifts,
/// periodic orbits through period 6, and edge-removal subgraph
/// restrictions. Deterministic given the graph.
pub fn battery_measures(g: &MarkovGraph, tol: f64) -> Result<Vec<MarkovMeasure>> {
    let mut out = Vec::new();
    out.push(rpf_measure(g, &LocallyConstantFunction::constant(0.0), tol)?);
    let n = g.state_count();
    if g.edge_count() == n * n {
        let mut ps: Vec<f64> = (1..=19).map(|k| k as f64 / 20.0).collect();
        ps.extend([0.49, 0.495, 0.505, 0.51]);
        for p in ps {
            let mut v = vec![(1.0 - p) / (n - 1) as f64; n];
            v[0] = p;
            out.push(bernoulli_measure(g, &v)?);
        }
    }
    // distinct periodic orbits through period 6
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    'orbits: for len in 1..=6usize {
        for a in 0..n {
            for cyc in enumerate_cycles(g, a, len, 16)? {
                if cyc.symbols().iter().any(|&s| s < a) {
                    continue;
                }
                let canon = canonical_rotation(cyc.symbols());
                if seen.insert(canon) {
                    out.push(periodic_measure(g, &cyc)?);
                    if seen.len() >= 24 {
                        break 'orbits;
                    }
                }
            }
        }
    }
    // subgraph restrictions: drop one edge at a time while mixing survives
    let mut subs = 0;
    for (a, b) in g.edges() {
        if subs >= 3 {
            break;
        }
        if g.out(a).len() < 2 {
            continue;
        }
        if let Some((sub, _)) = remove_edges_component(g, (a + 1) % n, &[(a, b)])? {
            if sub.state_count() == n && sub.is_mixing() {
                out.push(subgraph_measure(g, &sub, tol)?);
                subs += 1;
            }
        }
    }
    Ok(out)
}

fn canonical_rotation(w: &[usize]) -> Vec<usize> {
    let n = w.len();
    (0..n)
        .map(|r| {
            let mut rot: Vec<usize> = Vec::with_capacity(n);
            for i in 0..n {
                rot.push(w[(i + r) % n]);
            }
            rot
        })
        .min()
        .unwrap()
}

/// Outcome of the full standard battery at one seed.
#[derive(Debug, Clone)]
pub struct BatteryOutcome {
    pub battery_id: String,
    /// max ratio / ||psi|| over every (graph, observable, measure) record.
    pub empirical_c: f64,
    pub max_ratio: f64,
    pub records: usize,
    /// worst high-pressure sharp-regime excess `ratio / (sqrt2 sigma)`
    /// over records with gap <= 1e-4 and sigma > 0.
    pub sharp_excess: f64,
}

/// Runs the EKP scan over the whole deterministic battery.
pub fn run_standard_battery(seed: u64, tol: f64) -> Result<BatteryOutcome> {
    let battery_id = format!("tmslab-ekp-battery-v1-seed{seed}");
    let phi = LocallyConstantFunction::constant(0.0);
    let mut empirical_c = 0.0f64;
    let mut max_ratio = 0.0f64;
    let mut sharp_excess = 0.0f64;
    let mut records = 0usize;
    for (_name, g) in battery_graphs(seed) {
        let family = battery_measures(&g, tol)?;
        for (_oname, psi) in battery_observables(&g) {
            let (recs, summary) = ekp_scan(&g, &phi, &psi, &family, 1.0, &battery_id)?;
            records += recs.len();
            empirical_c = empirical_c.max(summary.empirical_c);
            max_ratio = max_ratio.max(summary.max_ratio);
            if summary.sharp_limit > 1e-9 {
                sharp_excess = sharp_excess.max(summary.high_pressure_max_ratio / summary.sharp_limit);
            }
        }
    }
    Ok(BatteryOutcome {
        battery_id,
        empirical_c,
        max_ratio,
        records,
        sharp_excess,
    })
}
