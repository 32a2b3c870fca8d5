//! Weighted transfer matrices and Gurevich pressure on finite graphs.
//!
//! For a potential of memory <= 2 the transfer operator restricted to
//! functions of the first coordinate is the matrix `L_{ab} = T_{ab}
//! exp(phi(a,b))`; larger memories are recoded through higher blocks first,
//! so the eigenproblem always stays matrix-valued.

use crate::defaults::EIGEN_MAX_ITERS;
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::observable::LocallyConstantFunction;
use crate::shift::{self, higher_block, spectral_decomposition, MarkovGraph};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// A potential in edge form: a graph (possibly a higher-block recode of the
/// original) together with one value of the potential per edge.
#[derive(Debug, Clone)]
pub struct EdgeForm {
    pub graph: MarkovGraph,
    /// Block-state index -> original word (singleton words when no recoding
    /// was necessary).
    pub block_words: Vec<Vec<usize>>,
    /// `values[a]` holds `(b, phi(a,b))` per outgoing edge, sorted by `b`.
    pub values: Vec<Vec<(usize, f64)>>,
}

/// Rewrites `(g, phi)` with `phi` of arbitrary memory as an edge function on
/// a block graph. Memory <= 2 passes through unchanged.
pub fn edge_form(g: &MarkovGraph, phi: &LocallyConstantFunction) -> Result<EdgeForm> {
    let m = phi.memory();
    if m <= 2 {
        let values = (0..g.state_count())
            .map(|a| {
                g.out(a)
                    .iter()
                    .map(|&b| {
                        let v = if m == 1 {
                            phi.value(&[a])
                        } else {
                            phi.value(&[a, b])
                        };
                        (b, v)
                    })
                    .collect()
            })
            .collect();
        return Ok(EdgeForm {
            graph: g.clone(),
            block_words: (0..g.state_count()).map(|v| vec![v]).collect(),
            values,
        });
    }
    let hb = higher_block(g, m - 1)?;
    let values = (0..hb.graph.state_count())
        .map(|a| {
            hb.graph
                .out(a)
                .iter()
                .map(|&b| {
                    let mut word = hb.words[a].clone();
                    word.push(*hb.words[b].last().unwrap());
                    (b, phi.value(&word))
                })
                .collect()
        })
        .collect();
    Ok(EdgeForm {
        graph: hb.graph,
        block_words: hb.words,
        values,
    })
}

/// Sparse weighted transfer matrix `L_{ab} = T_{ab} e^{phi(a,b)}` on a
/// (possibly recoded) graph.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub graph: MarkovGraph,
    pub block_words: Vec<Vec<usize>>,
    /// `rows[a]` holds `(b, weight)` with strictly positive weights.
    pub rows: Vec<Vec<(usize, f64)>>,
}

/// Builds the transfer matrix of `phi` on `g`, recoding automatically when
/// the memory exceeds 2.
pub fn transfer_matrix(g: &MarkovGraph, phi: &LocallyConstantFunction) -> Result<TransferMatrix> {
    let ef = edge_form(g, phi)?;
    let rows = ef
        .values
        .iter()
        .map(|row| row.iter().map(|&(b, v)| (b, v.exp())).collect())
        .collect();
    Ok(TransferMatrix {
        graph: ef.graph,
        block_words: ef.block_words,
        rows,
    })
}

impl TransferMatrix {
    fn n(&self) -> usize {
        self.rows.len()
    }

    /// y = L x
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (a, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(b, w) in row {
                acc += w * x[b];
            }
            y[a] = acc;
        }
    }

    /// y = L^T x
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (a, row) in self.rows.iter().enumerate() {
            for &(b, w) in row {
                y[b] += w * x[a];
            }
        }
    }
}

/// Perron–Frobenius eigendata of a transfer matrix.
#[derive(Debug, Clone)]
pub struct RPFData {
    /// Dominant eigenvalue `lambda = exp(P_G(phi))`.
    pub lambda: f64,
    pub log_lambda: f64,
    /// Right eigenvector, `L h = lambda h`, strictly positive.
    pub h: Vec<f64>,
    /// Left eigenvector, `nu^T L = lambda nu^T`, strictly positive,
    /// normalized so that `sum_a h_a nu_a = 1`.
    pub nu: Vec<f64>,
    /// Max-norm residuals of the two eigenequations.
    pub residual_h: f64,
    pub residual_nu: f64,
    pub iterations: usize,
}

/// Power iteration for the dominant eigentriple of `L`, with the transpose
/// iteration for the left vector. The deterministic start vector is
/// all-ones; Collatz–Wielandt ratio spread is the stopping rule, and the
/// final eigenvalue is the two-sided Rayleigh quotient, which squares the
/// eigenvector error away.
pub fn perron_data(l: &TransferMatrix, tol: f64) -> Result<RPFData> {
    if !l.graph.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let p = l.graph.period()?;
    if p != 1 {
        return Err(Error::NotAperiodic { period: p });
    }
    let n = l.n();
    let mut h = vec![1.0; n];
    let mut nu = vec![1.0; n];
    let mut buf = vec![0.0; n];
    let mut iterations = 0;
    let mut spread_h = f64::INFINITY;
    let mut spread_nu = f64::INFINITY;
    // Iterate on L + sI with s tracking the eigenvalue estimate: the
    // eigenvectors are unchanged, and the diagonal shift keeps a spectral
    // gap even when a subdominant eigenvalue approaches -lambda (strongly
    // tilted potentials on nearly periodic graphs).
    let mut shift = 0.0f64;
    while iterations < EIGEN_MAX_ITERS {
        iterations += 1;
        l.apply(&h, &mut buf);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for a in 0..n {
            let r = buf[a] / h[a] + shift;
            buf[a] += shift * h[a];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        spread_h = (hi - lo) / hi;
        let est = 0.5 * (lo + hi) - shift;
        let norm: f64 = buf.iter().sum();
        h.iter_mut().zip(&buf).for_each(|(t, &s)| *t = s / norm);

        l.apply_transpose(&nu, &mut buf);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for a in 0..n {
            let r = buf[a] / nu[a] + shift;
            buf[a] += shift * nu[a];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        spread_nu = (hi - lo) / hi;
        let norm: f64 = buf.iter().sum();
        nu.iter_mut().zip(&buf).for_each(|(t, &s)| *t = s / norm);

        // push the spread a factor below tol so the final residual
        // invariant holds with margin
        if spread_h <= 0.25 * tol && spread_nu <= 0.25 * tol {
            break;
        }
        shift = est.max(0.0);
    }
    if spread_h > 0.25 * tol || spread_nu > 0.25 * tol {
        return Err(Error::NonConvergence {
            iters: iterations,
            residual: spread_h.max(spread_nu),
        });
    }
    // two-sided Rayleigh quotient
    l.apply(&h, &mut buf);
    let num: f64 = nu.iter().zip(&buf).map(|(a, b)| a * b).sum();
    let den: f64 = nu.iter().zip(&h).map(|(a, b)| a * b).sum();
    let lambda = num / den;
    // normalize sum_a h_a nu_a = 1, keeping sum h = 1 for determinism
    let hsum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= hsum);
    let inner: f64 = nu.iter().zip(&h).map(|(a, b)| a * b).sum();
    nu.iter_mut().for_each(|v| *v /= inner);

    let mut residual_h = 0.0f64;
    l.apply(&h, &mut buf);
    for a in 0..n {
        residual_h = residual_h.max((buf[a] - lambda * h[a]).abs());
    }
    let mut residual_nu = 0.0f64;
    l.apply_transpose(&nu, &mut buf);
    for a in 0..n {
        residual_nu = residual_nu.max((buf[a] - lambda * nu[a]).abs());
    }
    // eigenequation residual invariant, enforced on every call
    let h_max = h.iter().cloned().fold(0.0, f64::max);
    let nu_max = nu.iter().cloned().fold(0.0, f64::max);
    if residual_h > tol * lambda * h_max || residual_nu > tol * lambda * nu_max {
        return Err(Error::NonConvergence {
            iters: iterations,
            residual: residual_h.max(residual_nu),
        });
    }
    Ok(RPFData {
        lambda,
        log_lambda: lambda.ln(),
        h,
        nu,
        residual_h,
        residual_nu,
        iterations,
    })
}

/// Gurevich pressure of `phi` on the finite graph `g`. Mixing graphs go
/// straight to the eigensolver; transitive period-p graphs are decomposed
/// and `P = (1/p) P(phi_p | component_0)`.
pub fn pressure_finite(g: &MarkovGraph, phi: &LocallyConstantFunction, tol: f64) -> Result<f64> {
    let ef = edge_form(g, phi)?;
    if !ef.graph.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let p = ef.graph.period()?;
    if p == 1 {
        let rows = ef
            .values
            .iter()
            .map(|row| row.iter().map(|&(b, v)| (b, v.exp())).collect())
            .collect();
        let l = TransferMatrix {
            graph: ef.graph,
            block_words: ef.block_words,
            rows,
        };
        return Ok(perron_data(&l, tol)?.log_lambda);
    }
    // fold the edge potential along length-p cylinders of the recoded graph
    let comps = spectral_decomposition(&ef.graph)?;
    let comp = &comps[0];
    let edge_value = |a: usize, b: usize| -> f64 {
        ef.values[a]
            .iter()
            .find(|&&(t, _)| t == b)
            .map(|&(_, v)| v)
            .expect("edge present in component")
    };
    let rows: Vec<Vec<(usize, f64)>> = (0..comp.graph.state_count())
        .map(|ia| {
            let wa = &comp.cylinder_words[ia];
            comp.graph
                .out(ia)
                .iter()
                .map(|&ib| {
                    let wb = &comp.cylinder_words[ib];
                    let mut sum = 0.0;
                    for i in 0..p {
                        let from = wa[i];
                        let to = if i + 1 < p { wa[i + 1] } else { wb[0] };
                        sum += edge_value(from, to);
                    }
                    (ib, sum.exp())
                })
                .collect()
        })
        .collect();
    let l = TransferMatrix {
        graph: comp.graph.clone(),
        block_words: comp.cylinder_words.clone(),
        rows,
    };
    Ok(perron_data(&l, tol)?.log_lambda / p as f64)
}

/// Exact partition sum `Z_n(phi, a)` over loops of length `n` at `a`.
/// The `phi = 0` path counts in exact integers.
pub fn partition_sum(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    a: usize,
    n: usize,
    cap: usize,
) -> Result<f64> {
    if n == 0 || n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if is_zero_potential(g, phi) {
        return Ok(big_to_f64(&shift::cycle_count(g, a, n)));
    }
    let ef = edge_form(g, phi)?;
    let starts: Vec<usize> = (0..ef.graph.state_count())
        .filter(|&w| ef.block_words[w][0] == a)
        .collect();
    let mut total = KahanSum::new();
    for &start in &starts {
        total.add(weighted_loop_sum(&ef, start, n, None));
    }
    Ok(total.value())
}

/// Exact first-return sum `Z*_n(phi, a)` over loops whose interior avoids
/// `a`.
pub fn first_return_sum(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    a: usize,
    n: usize,
    cap: usize,
) -> Result<f64> {
    if n == 0 || n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if is_zero_potential(g, phi) {
        return Ok(big_to_f64(&shift::count_first_return_loops(g, a, n, cap)?));
    }
    let ef = edge_form(g, phi)?;
    let starts: Vec<usize> = (0..ef.graph.state_count())
        .filter(|&w| ef.block_words[w][0] == a)
        .collect();
    let mut total = KahanSum::new();
    for &start in &starts {
        total.add(weighted_loop_sum(&ef, start, n, Some(a)));
    }
    Ok(total.value())
}

/// Weighted count of length-`n` loops at block state `start`; when `avoid`
/// is set, interior block states whose first original symbol equals it are
/// excluded (first-return restriction).
fn weighted_loop_sum(ef: &EdgeForm, start: usize, n: usize, avoid: Option<usize>) -> f64 {
    let ns = ef.graph.state_count();
    let blocked = |w: usize| avoid.is_some_and(|a| ef.block_words[w][0] == a);
    let weights: Vec<Vec<(usize, f64)>> = ef
        .values
        .iter()
        .map(|row| row.iter().map(|&(b, v)| (b, v.exp())).collect())
        .collect();
    let mut v = vec![0.0f64; ns];
    v[start] = 1.0;
    for step in 1..=n {
        let last = step == n;
        let mut next = vec![0.0f64; ns];
        for s in 0..ns {
            if v[s] == 0.0 {
                continue;
            }
            for &(t, w) in &weights[s] {
                if last {
                    if t == start {
                        next[t] += v[s] * w;
                    }
                } else if !blocked(t) {
                    next[t] += v[s] * w;
                }
            }
        }
        v = next;
    }
    v[start]
}

fn is_zero_potential(g: &MarkovGraph, phi: &LocallyConstantFunction) -> bool {
    if phi.default_value() != 0.0 {
        return false;
    }
    let m = phi.memory();
    g.admissible_words(m).iter().all(|w| phi.value(w) == 0.0)
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Report of the first-return splitting identities at a state: the
/// first-edge decomposition and the subgraph identity, both checked by
/// independent enumeration.
#[derive(Debug, Clone)]
pub struct ZSplitReport {
    pub n: usize,
    /// `Z*_n(phi, a)` on the full graph.
    pub total: f64,
    /// First-edge restricted sums over `E_0`, `E_1`, `E_core`.
    pub parts: [f64; 3],
    /// `Z*_n` on the two edge-removal subgraphs.
    pub subgraph: [f64; 2],
    /// `|total - (parts sum)|`.
    pub split_defect: f64,
    /// `|subgraph[i] - parts[i] - parts[2]|` for i = 0, 1.
    pub subgraph_defect: [f64; 2],
    /// All checks exact (integer potentials) or within 1e-12 relative.
    pub ok: bool,
}

/// Verifies the first-return splitting `Z*_n = Z*(E_0) + Z*(E_1) +
/// Z*(E_core)` and the subgraph identity `Z*_n(G_i) = Z*(E_i) + Z*(E_core)`
/// where `G_i` removes `E_{1-i}` and restricts to the strongly connected
/// component of `a`. Potentials up to memory 2 are supported.
pub fn zstar_split_check(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    a: usize,
    e0: &[(usize, usize)],
    e1: &[(usize, usize)],
    n: usize,
    cap: usize,
) -> Result<ZSplitReport> {
    if phi.memory() > 2 {
        return Err(Error::Domain(
            "splitting check requires a potential of memory <= 2".into(),
        ));
    }
    for &(x, y) in e0.iter().chain(e1) {
        if x != a || !g.has_edge(x, y) {
            return Err(Error::BadPartition(format!(
                "({}, {}) is not an outgoing edge of {}",
                g.word_ids(&[x]).join(""),
                g.word_ids(&[y]).join(""),
                g.id(a)
            )));
        }
    }
    for &(_, y) in e0 {
        if e1.iter().any(|&(_, z)| z == y) {
            return Err(Error::BadPartition("E0 and E1 overlap".into()));
        }
    }
    let in_set = |set: &[(usize, usize)], b: usize| set.iter().any(|&(_, y)| y == b);
    let core: Vec<usize> = g
        .out(a)
        .iter()
        .copied()
        .filter(|&b| !in_set(e0, b) && !in_set(e1, b))
        .collect();

    let total = first_return_sum(g, phi, a, n, cap)?;
    let part = |targets: &[usize]| -> Result<f64> {
        let mut acc = KahanSum::new();
        for &b in targets {
            acc.add(first_edge_return_sum(g, phi, a, b, n)?);
        }
        Ok(acc.value())
    };
    let t0: Vec<usize> = e0.iter().map(|&(_, b)| b).collect();
    let t1: Vec<usize> = e1.iter().map(|&(_, b)| b).collect();
    let parts = [part(&t0)?, part(&t1)?, part(&core)?];

    let mut subgraph = [0.0f64; 2];
    for i in 0..2 {
        let removed: &[(usize, usize)] = if i == 0 { e1 } else { e0 };
        let sub = remove_edges_component(g, a, removed)?;
        subgraph[i] = match sub {
            Some((sg, sa)) => first_return_sum(&sg, &restrict_potential(g, &sg, phi), sa, n, cap)?,
            None => 0.0,
        };
    }

    let split_defect = (total - (parts[0] + parts[1] + parts[2])).abs();
    let subgraph_defect = [
        (subgraph[0] - parts[0] - parts[2]).abs(),
        (subgraph[1] - parts[1] - parts[2]).abs(),
    ];
    let scale = total.abs().max(1.0);
    let ok = split_defect <= 1e-12 * scale
        && subgraph_defect[0] <= 1e-12 * scale
        && subgraph_defect[1] <= 1e-12 * scale;
    Ok(ZSplitReport {
        n,
        total,
        parts,
        subgraph,
        split_defect,
        subgraph_defect,
        ok,
    })
}

/// First-return sum restricted to loops whose first edge is `a -> b`.
fn first_edge_return_sum(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    a: usize,
    b: usize,
    n: usize,
) -> Result<f64> {
    let m = phi.memory();
    let w = |x: usize, y: usize| -> f64 {
        if m == 1 {
            phi.value(&[x])
        } else {
            phi.value(&[x, y])
        }
    };
    if n == 1 {
        return Ok(if a == b && g.has_edge(a, a) {
            w(a, a).exp()
        } else {
            0.0
        });
    }
    if b == a {
        return Ok(0.0);
    }
    // weighted paths b -> a of length n-1 avoiding a in the interior
    let ns = g.state_count();
    let mut v = vec![0.0f64; ns];
    v[b] = w(a, b).exp();
    for step in 0..n - 1 {
        let mut next = vec![0.0f64; ns];
        let last = step + 1 == n - 1;
        for s in 0..ns {
            if v[s] == 0.0 || s == a {
                continue;
            }
            for &t in g.out(s) {
                if last && t != a {
                    continue;
                }
                if !last && t == a {
                    continue;
                }
                next[t] += v[s] * w(s, t).exp();
            }
        }
        v = next;
    }
    Ok(v[a])
}

/// Removes the listed edges, then restricts to the strongly connected
/// component containing `a` (pruned like any constructed graph). Returns
/// the subgraph and the new index of `a`, or `None` when `a` loses all
/// loops.
pub fn remove_edges_component(
    g: &MarkovGraph,
    a: usize,
    removed: &[(usize, usize)],
) -> Result<Option<(MarkovGraph, usize)>> {
    let n = g.state_count();
    // strongly connected component of a in the reduced graph
    let keep_edge =
        |x: usize, y: usize| -> bool { !removed.iter().any(|&(rx, ry)| rx == x && ry == y) };
    let reach_from = {
        let mut seen = vec![false; n];
        let mut stack = vec![a];
        seen[a] = true;
        while let Some(v) = stack.pop() {
            for &w in g.out(v) {
                if keep_edge(v, w) && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let reach_to = {
        let mut seen = vec![false; n];
        let mut stack = vec![a];
        seen[a] = true;
        while let Some(v) = stack.pop() {
            for &w in g.inc(v) {
                if keep_edge(w, v) && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let scc: Vec<usize> = (0..n).filter(|&v| reach_from[v] && reach_to[v]).collect();
    let ids: Vec<String> = scc.iter().map(|&v| g.id(v).to_string()).collect();
    let mut edges = Vec::new();
    for &x in &scc {
        for &y in g.out(x) {
            if keep_edge(x, y) && reach_from[y] && reach_to[y] {
                edges.push((g.id(x).to_string(), g.id(y).to_string()));
            }
        }
    }
    match MarkovGraph::from_parts(&ids, &edges) {
        Ok(sub) => match sub.state(g.id(a)) {
            Ok(sa) => Ok(Some((sub, sa))),
            Err(_) => Ok(None),
        },
        Err(Error::EmptyGraph) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Re-keys a memory <= 2 potential onto a subgraph via state identifiers.
fn restrict_potential(
    g: &MarkovGraph,
    sub: &MarkovGraph,
    phi: &LocallyConstantFunction,
) -> LocallyConstantFunction {
    let m = phi.memory().min(2);
    let mut table = std::collections::HashMap::new();
    for w in sub.admissible_words(m) {
        let orig: Vec<usize> = w.iter().map(|&v| g.state(sub.id(v)).unwrap()).collect();
        table.insert(w, phi.value(&orig));
    }
    LocallyConstantFunction::new(m, table, phi.default_value()).expect("valid table")
}
