//! Pressure curves, asymptotic variance by independent routes, extreme
//! cycle means, and the restricted pressure via the Legendre transform.

use crate::defaults::{BRACKET_LIMIT, COV_TRUNCATION, EIGEN_TOL, FD_STEP};
use crate::error::{Error, Result};
use crate::measure::{self, MarkovMeasure};
use crate::numeric::{fd_second, solve_dense};
use crate::observable::LocallyConstantFunction;
use crate::shift::MarkovGraph;
use crate::transfer::{edge_form, pressure_finite};

/// Sampled pressure function `t -> P_G(phi + t psi)` with derivative data.
#[derive(Debug, Clone)]
pub struct PressureCurve {
    pub ts: Vec<f64>,
    pub p: Vec<f64>,
    /// `p'(t) = int psi dm_t` (exact equilibrium integration).
    pub p1: Vec<f64>,
    /// `p''(t)` by central finite differences of `p`.
    pub p2_fd: Vec<f64>,
    /// `p''(t)` by the Green–Kubo route at `m_t`.
    pub p2_gk: Vec<f64>,
    /// Minimum raw second difference over the grid (convexity certificate).
    pub min_second_difference: f64,
}

/// Evaluates the pressure curve on a grid; each point carries the exact
/// slope and both second-derivative routes, whose disagreement is the
/// caller's cross-check.
pub fn pressure_curve(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    grid: &[f64],
    tol: f64,
) -> Result<PressureCurve> {
    if grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    let pressure_at = |t: f64| -> Result<f64> {
        let tilt = phi.add(g, &psi.scale(t))?;
        pressure_finite(g, &tilt, tol)
    };
    let mut p = Vec::with_capacity(grid.len());
    let mut p1 = Vec::with_capacity(grid.len());
    let mut p2_fd = Vec::with_capacity(grid.len());
    let mut p2_gk = Vec::with_capacity(grid.len());
    for &t in grid {
        p.push(pressure_at(t)?);
        let m_t = measure::tilted_equilibrium(g, phi, psi, t, tol)?;
        p1.push(measure::integrate(&m_t, psi, g)?);
        let mut fd_err: Option<Error> = None;
        let fd = fd_second(
            |x| match pressure_at(x) {
                Ok(v) => v,
                Err(e) => {
                    fd_err = Some(e);
                    f64::NAN
                }
            },
            t,
            FD_STEP,
        );
        if let Some(e) = fd_err {
            return Err(e);
        }
        p2_fd.push(fd);
        p2_gk.push(asymptotic_variance(&m_t, psi, g)?);
    }
    let mut min_sd = f64::INFINITY;
    for i in 1..grid.len().saturating_sub(1) {
        min_sd = min_sd.min(p[i + 1] - 2.0 * p[i] + p[i - 1]);
    }
    Ok(PressureCurve {
        ts: grid.to_vec(),
        p,
        p1,
        p2_fd,
        p2_gk,
        min_second_difference: min_sd,
    })
}

/// Asymptotic variance `sigma^2 = Var(psi) + 2 sum_{k>=1} Cov(psi, psi.s^k)`
/// under a stationary Markov measure, computed exactly through the
/// fundamental-matrix (Poisson equation) route.
///
/// With `f` the observable on the block chain, centered, and `g` solving
/// `(I - P + 1 pi) g = f`, the geometric series of covariances collapses to
/// `sigma^2 = 2 <f, g>_pi - <f, f>_pi`.
pub fn asymptotic_variance(
    mu: &MarkovMeasure,
    psi: &LocallyConstantFunction,
    g: &MarkovGraph,
) -> Result<f64> {
    Ok(variance_solver(mu, psi, g)?.0)
}

/// Both variance routes: the exact linear solve and the truncated
/// covariance sum (geometric-tail stop, cap [`COV_TRUNCATION`]). The
/// truncated route is only meaningful for mixing chains.
pub fn asymptotic_variance_routes(
    mu: &MarkovMeasure,
    psi: &LocallyConstantFunction,
    g: &MarkovGraph,
) -> Result<(f64, f64)> {
    variance_solver(mu, psi, g)
}

fn variance_solver(
    mu: &MarkovMeasure,
    psi: &LocallyConstantFunction,
    g: &MarkovGraph,
) -> Result<(f64, f64)> {
    let order = mu.block_order().max(psi.memory());
    let big = measure::promote(mu, g, order)?;
    let words = big.state_words();
    let support: Vec<usize> = (0..words.len())
        .filter(|&i| big.stationary()[i] > 0.0)
        .collect();
    let n = support.len();
    let pi: Vec<f64> = support.iter().map(|&i| big.stationary()[i]).collect();
    let p: Vec<Vec<f64>> = support
        .iter()
        .map(|&i| support.iter().map(|&j| big.matrix()[i][j]).collect())
        .collect();
    let f_raw: Vec<f64> = support.iter().map(|&i| psi.value(&words[i])).collect();
    let mean: f64 = pi.iter().zip(&f_raw).map(|(a, b)| a * b).sum();
    let f: Vec<f64> = f_raw.iter().map(|v| v - mean).collect();

    // exact route
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = if i == j { 1.0 } else { 0.0 } - p[i][j] + pi[j];
        }
    }
    let sol = solve_dense(&a, &f)?;
    let mut exact = 0.0;
    for i in 0..n {
        exact += pi[i] * f[i] * (2.0 * sol[i] - f[i]);
    }
    // tiny negatives from rounding are zero
    if exact < 0.0 && exact > -1e-12 {
        exact = 0.0;
    }

    // truncated cross-check
    let c0: f64 = pi.iter().zip(&f).map(|(a, b)| a * b * b).sum();
    let mut truncated = c0;
    let mut v = f.clone();
    let scale = c0.max(1e-30);
    for _k in 1..=COV_TRUNCATION {
        let mut next = vec![0.0; n];
        for (i, row) in p.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * v[j];
            }
            next[i] = acc;
        }
        v = next;
        let c: f64 = pi.iter().zip(&f).zip(&v).map(|((a, b), c)| a * b * c).sum();
        truncated += 2.0 * c;
        if c.abs() < 1e-17 * scale {
            break;
        }
    }
    Ok((exact, truncated))
}

/// Extreme Birkhoff cycle means of `psi` (Karp's minimum/maximum mean
/// cycle): these are the asymptotic slopes `p'(-inf)` and `p'(+inf)` of the
/// pressure curve.
pub fn asymptotic_slopes(g: &MarkovGraph, psi: &LocallyConstantFunction) -> Result<(f64, f64)> {
    if !g.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let ef = edge_form(g, psi)?;
    let mut edges = Vec::new();
    for (a, row) in ef.values.iter().enumerate() {
        for &(b, w) in row {
            edges.push((a, b, w));
        }
    }
    let n = ef.graph.state_count();
    let min = karp_min_cycle_mean(n, &edges);
    let negated: Vec<(usize, usize, f64)> = edges.iter().map(|&(a, b, w)| (a, b, -w)).collect();
    let max = -karp_min_cycle_mean(n, &negated);
    Ok((min, max))
}

/// Karp's minimum cycle mean on a strongly connected weighted digraph.
fn karp_min_cycle_mean(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut dist = vec![vec![f64::INFINITY; n]; n + 1];
    dist[0][0] = 0.0;
    for k in 1..=n {
        for &(u, v, w) in edges {
            if dist[k - 1][u].is_finite() {
                let cand = dist[k - 1][u] + w;
                if cand < dist[k][v] {
                    dist[k][v] = cand;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    for v in 0..n {
        if !dist[n][v].is_finite() {
            continue;
        }
        let mut worst = f64::NEG_INFINITY;
        for k in 0..n {
            if dist[k][v].is_finite() {
                worst = worst.max((dist[n][v] - dist[k][v]) / (n - k) as f64);
            }
        }
        best = best.min(worst);
    }
    best
}

/// Solves `p'(t) = a` by safeguarded Newton (Green–Kubo second derivative)
/// on a geometrically grown bracket, and returns `(q(a), t(a))` with
/// `q(a) = p(t) - t a`: minus the Legendre transform of the pressure curve.
pub fn restricted_pressure(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    a: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let (lo_mean, hi_mean) = asymptotic_slopes(g, psi)?;
    if !(a > lo_mean && a < hi_mean) {
        return Err(Error::Domain(format!(
            "a = {a} outside the open slope interval ({lo_mean}, {hi_mean})"
        )));
    }
    let slope = |t: f64| -> Result<f64> {
        let m_t = measure::tilted_equilibrium(g, phi, psi, t, EIGEN_TOL)?;
        measure::integrate(&m_t, psi, g)
    };
    let curvature = |t: f64| -> Result<f64> {
        let m_t = measure::tilted_equilibrium(g, phi, psi, t, EIGEN_TOL)?;
        asymptotic_variance(&m_t, psi, g)
    };
    // geometric bracket growth from t = 0
    let (mut t_lo, mut t_hi);
    let s0 = slope(0.0)?;
    if s0 == a {
        let p0 = pressure_finite(g, phi, EIGEN_TOL)?;
        return Ok((p0, 0.0));
    }
    if s0 < a {
        t_lo = 0.0;
        t_hi = 1.0;
        while slope(t_hi)? < a {
            t_lo = t_hi;
            t_hi *= 2.0;
            if t_hi > BRACKET_LIMIT {
                return Err(Error::Domain(format!(
                    "bracket growth exceeded |t| <= {BRACKET_LIMIT} near the domain endpoint"
                )));
            }
        }
    } else {
        t_hi = 0.0;
        t_lo = -1.0;
        while slope(t_lo)? > a {
            t_hi = t_lo;
            t_lo *= 2.0;
            if t_lo < -BRACKET_LIMIT {
                return Err(Error::Domain(format!(
                    "bracket growth exceeded |t| <= {BRACKET_LIMIT} near the domain endpoint"
                )));
            }
        }
    }
    // safeguarded Newton on the monotone slope
    let mut t = 0.5 * (t_lo + t_hi);
    let mut result = None;
    for _ in 0..128 {
        let s = slope(t)? - a;
        if s.abs() <= tol {
            result = Some(t);
            break;
        }
        if s > 0.0 {
            t_hi = t;
        } else {
            t_lo = t;
        }
        let d = curvature(t)?;
        let newton = if d.abs() > 1e-12 { t - s / d } else { f64::NAN };
        t = if newton.is_finite() && newton > t_lo && newton < t_hi {
            newton
        } else {
            0.5 * (t_lo + t_hi)
        };
        if t_hi - t_lo <= f64::EPSILON * (1.0 + t.abs()) {
            result = Some(t);
            break;
        }
    }
    let t = result.ok_or(Error::NonConvergence {
        iters: 128,
        residual: f64::NAN,
    })?;
    let tilt = phi.add(g, &psi.scale(t))?;
    let p = pressure_finite(g, &tilt, EIGEN_TOL)?;
    Ok((p - t * a, t))
}

/// One Legendre sample: `q` and its grid finite differences.
#[derive(Debug, Clone, Copy)]
pub struct LegendreSample {
    pub a: f64,
    pub t: f64,
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
}

/// The restricted-pressure conjugate sampled on a window around
/// `a0 = int psi dm`.
#[derive(Debug, Clone)]
pub struct LegendreData {
    pub a0: f64,
    /// Asymptotic variance at t = 0.
    pub sigma2: f64,
    pub half_width: f64,
    pub samples: Vec<LegendreSample>,
    /// Maximum raw second difference of q (concavity certificate: <= slack).
    pub max_second_difference: f64,
}

/// Samples `q` on a uniform window and differentiates along the grid. The
/// window half-width defaults to `0.25 sigma^2 min(a0 - lo, hi - a0)`,
/// a computable stand-in for the non-constructive window of the theory.
pub fn legendre_data(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    half_width: Option<f64>,
    n_samples: usize,
    tol: f64,
) -> Result<LegendreData> {
    if n_samples < 3 {
        return Err(Error::Domain("need at least 3 samples".into()));
    }
    let m = measure::rpf_measure(g, phi, EIGEN_TOL)?;
    let a0 = measure::integrate(&m, psi, g)?;
    let sigma2 = asymptotic_variance(&m, psi, g)?;
    if sigma2 <= 0.0 {
        return Err(Error::Domain(
            "psi is cohomologous to a constant; the Legendre window is degenerate".into(),
        ));
    }
    let (lo_mean, hi_mean) = asymptotic_slopes(g, psi)?;
    let edge = (a0 - lo_mean).min(hi_mean - a0);
    let hw = half_width.unwrap_or(0.25 * sigma2 * edge).min(0.95 * edge);
    let h = 2.0 * hw / (n_samples - 1) as f64;
    // two extra points on each side for the Richardson stencil
    let mut qs = Vec::new();
    for i in 0..n_samples + 4 {
        let a = a0 - hw + (i as f64 - 2.0) * h;
        let (q, t) = restricted_pressure(g, phi, psi, a, tol)?;
        qs.push((a, q, t));
    }
    let mut samples = Vec::with_capacity(n_samples);
    let mut max_sd = f64::NEG_INFINITY;
    for i in 2..n_samples + 2 {
        let (a, q, t) = qs[i];
        let d1h = (qs[i + 1].1 - qs[i - 1].1) / (2.0 * h);
        let d12h = (qs[i + 2].1 - qs[i - 2].1) / (4.0 * h);
        let q1 = (4.0 * d1h - d12h) / 3.0;
        let s1h = (qs[i + 1].1 - 2.0 * q + qs[i - 1].1) / (h * h);
        let s2h = (qs[i + 2].1 - 2.0 * q + qs[i - 2].1) / (4.0 * h * h);
        let q2 = (4.0 * s1h - s2h) / 3.0;
        max_sd = max_sd.max(qs[i + 1].1 - 2.0 * q + qs[i - 1].1);
        samples.push(LegendreSample { a, t, q, q1, q2 });
    }
    Ok(LegendreData {
        a0,
        sigma2,
        half_width: hw,
        samples,
        max_second_difference: max_sd,
    })
}

/// Deviations of the Legendre identities `q'(p'(t)) = -t` and
/// `q''(p'(t)) = -1/p''(t)` along a t-grid.
#[derive(Debug, Clone)]
pub struct LegendreIdentityReport {
    pub samples: Vec<(f64, f64, f64, f64)>,
    pub max_q1_deviation: f64,
    pub max_q2_deviation: f64,
}

/// Finite-difference check of the Legendre identities on the given t-grid
/// (which must stay inside the smooth window).
pub fn legendre_identity_check(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    t_grid: &[f64],
    tol: f64,
) -> Result<LegendreIdentityReport> {
    let mut samples = Vec::new();
    let mut max1 = 0.0f64;
    let mut max2 = 0.0f64;
    let h = 1e-3;
    for &t in t_grid {
        let m_t = measure::tilted_equilibrium(g, phi, psi, t, EIGEN_TOL)?;
        let a = measure::integrate(&m_t, psi, g)?;
        let p2 = asymptotic_variance(&m_t, psi, g)?;
        let q_at = |x: f64| -> Result<f64> { Ok(restricted_pressure(g, phi, psi, x, tol)?.0) };
        let stencil = [
            q_at(a - 2.0 * h)?,
            q_at(a - h)?,
            q_at(a)?,
            q_at(a + h)?,
            q_at(a + 2.0 * h)?,
        ];
        let d1h = (stencil[3] - stencil[1]) / (2.0 * h);
        let d12h = (stencil[4] - stencil[0]) / (4.0 * h);
        let q1 = (4.0 * d1h - d12h) / 3.0;
        let s1h = (stencil[3] - 2.0 * stencil[2] + stencil[1]) / (h * h);
        let s2h = (stencil[4] - 2.0 * stencil[2] + stencil[0]) / (4.0 * h * h);
        let q2 = (4.0 * s1h - s2h) / 3.0;
        let dev1 = (q1 + t).abs();
        let dev2 = (q2 + 1.0 / p2).abs();
        max1 = max1.max(dev1);
        max2 = max2.max(dev2);
        samples.push((t, a, q1, q2));
    }
    Ok(LegendreIdentityReport {
        samples,
        max_q1_deviation: max1,
        max_q2_deviation: max2,
    })
}
