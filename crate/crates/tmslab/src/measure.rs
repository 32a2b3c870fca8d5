//! Shift-invariant Markov measures on (block recodings of) finite graphs.
//!
//! Every measure used by the experiments — equilibrium/RPF, Bernoulli,
//! periodic-orbit, subgraph-restricted — is Markov over some block
//! alphabet, so entropies and integrals are exact finite formulas and the
//! acceptance checks carry no sampling error.

use crate::error::{Error, Result};
use crate::observable::LocallyConstantFunction;
use crate::shift::{MarkovGraph, Word};
use crate::transfer::{perron_data, transfer_matrix, RPFData, TransferMatrix};
use std::collections::HashMap;

/// How a measure was built; keys reports and uniqueness checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Parry,
    Rpf(String),
    Tilted { t: f64 },
    Bernoulli(Vec<f64>),
    Periodic(Vec<String>),
    Subgraph(String),
    Escape { window: (usize, usize) },
    Custom(String),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Parry => write!(f, "parry"),
            Provenance::Rpf(s) => write!(f, "rpf({s})"),
            Provenance::Tilted { t } => write!(f, "tilted(t={t})"),
            Provenance::Bernoulli(p) => {
                let ps: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
                write!(f, "bernoulli({})", ps.join(";"))
            }
            Provenance::Periodic(w) => write!(f, "periodic({})", w.join(";")),
            Provenance::Subgraph(s) => write!(f, "subgraph({s})"),
            Provenance::Escape { window } => write!(f, "escape[{},{}]", window.0, window.1),
            Provenance::Custom(s) => write!(f, "{s}"),
        }
    }
}

/// A stationary Markov chain over an alphabet of base-graph words
/// (length-b blocks), representing a b-step Markov measure of the shift.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    /// Chain state -> base-graph word of length `block`.
    states: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    pi: Vec<f64>,
    p: Vec<Vec<f64>>,
    provenance: Provenance,
    /// Probabilities below 1e-300 clamped to zero during construction.
    pub clamped: usize,
}

impl MarkovMeasure {
    pub fn new(
        states: Vec<Vec<usize>>,
        pi: Vec<f64>,
        p: Vec<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 || pi.len() != n || p.len() != n || p.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("measure dimensions disagree".into()));
        }
        let mut clamped = 0;
        let mut pi = pi;
        let mut p = p;
        for v in pi.iter_mut().chain(p.iter_mut().flatten()) {
            if *v != 0.0 && v.abs() < 1e-300 {
                *v = 0.0;
                clamped += 1;
            }
        }
        let block = states[0].len();
        if states.iter().any(|w| w.len() != block) {
            return Err(Error::Domain("ragged block alphabet".into()));
        }
        let pi_sum: f64 = pi.iter().sum();
        if (pi_sum - 1.0).abs() > 1e-11 {
            return Err(Error::Domain(format!("pi sums to {pi_sum}")));
        }
        for (a, row) in p.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-11 {
                return Err(Error::Domain(format!("row {a} sums to {s}")));
            }
        }
        // stationarity
        for b in 0..n {
            let fixed: f64 = (0..n).map(|a| pi[a] * p[a][b]).sum();
            if (fixed - pi[b]).abs() > 1e-11 {
                return Err(Error::Domain(format!(
                    "pi is not stationary at state {b}: {fixed} vs {}",
                    pi[b]
                )));
            }
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(Self {
            states,
            index,
            pi,
            p,
            provenance,
            clamped,
        })
    }

    pub fn block_order(&self) -> usize {
        self.states[0].len()
    }

    pub fn state_words(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }
}

/// Builds the Markov measure `pi_a = h_a nu_a`, `P_ab = L_ab h_b / (lambda
/// h_a)` from Perron data of a transfer matrix.
fn measure_from_rpf(l: &TransferMatrix, rpf: &RPFData, provenance: Provenance) -> Result<MarkovMeasure> {
    let n = rpf.h.len();
    let pi: Vec<f64> = (0..n).map(|a| rpf.h[a] * rpf.nu[a]).collect();
    let mut p = vec![vec![0.0; n]; n];
    for (a, row) in l.rows.iter().enumerate() {
        for &(b, w) in row {
            p[a][b] = w * rpf.h[b] / (rpf.lambda * rpf.h[a]);
        }
    }
    // renormalize rounding residue so the invariants hold exactly
    let pis: f64 = pi.iter().sum();
    let pi = pi.into_iter().map(|x| x / pis).collect();
    MarkovMeasure::new(l.block_words.clone(), pi, p, provenance)
}

/// The RPF (equilibrium) measure of `phi` on a mixing graph.
pub fn rpf_measure(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    tol: f64,
) -> Result<MarkovMeasure> {
    let l = transfer_matrix(g, phi)?;
    let rpf = perron_data(&l, tol)?;
    measure_from_rpf(&l, &rpf, Provenance::Rpf(format!("memory{}", phi.memory())))
}

/// Parry's measure of maximal entropy (`phi = 0`).
pub fn parry_measure(g: &MarkovGraph, tol: f64) -> Result<MarkovMeasure> {
    let m = rpf_measure(g, &LocallyConstantFunction::constant(0.0), tol)?;
    Ok(m.with_provenance(Provenance::Parry))
}

/// Unique equilibrium measure of `phi + t psi`.
pub fn tilted_equilibrium(
    g: &MarkovGraph,
    phi: &LocallyConstantFunction,
    psi: &LocallyConstantFunction,
    t: f64,
    tol: f64,
) -> Result<MarkovMeasure> {
    let tilt = phi.add(g, &psi.scale(t))?;
    Ok(rpf_measure(g, &tilt, tol)?.with_provenance(Provenance::Tilted { t }))
}

/// Bernoulli measure on a full shift.
pub fn bernoulli_measure(g: &MarkovGraph, probs: &[f64]) -> Result<MarkovMeasure> {
    let n = g.state_count();
    if probs.len() != n {
        return Err(Error::Domain("probability vector length mismatch".into()));
    }
    if g.edge_count() != n * n {
        return Err(Error::Domain("Bernoulli measures need a full shift".into()));
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("not a probability vector".into()));
    }
    let states = (0..n).map(|v| vec![v]).collect();
    let p = vec![probs.to_vec(); n];
    MarkovMeasure::new(states, probs.to_vec(), p, Provenance::Bernoulli(probs.to_vec()))
}

/// Invariant measure equidistributed on a periodic orbit.
pub fn periodic_measure(g: &MarkovGraph, cycle: &Word) -> Result<MarkovMeasure> {
    let syms = cycle.symbols();
    let n = syms.len();
    if n == 0 || !g.is_admissible(syms) || !g.has_edge(syms[n - 1], syms[0]) {
        return Err(Error::InadmissibleWord(g.word_ids(syms).join(",")));
    }
    // reduce to the primitive period
    let prim = (1..=n)
        .find(|&p| n % p == 0 && (0..n).all(|i| syms[i] == syms[i % p]))
        .unwrap();
    let syms = &syms[..prim];
    let n = prim;
    // block length making all cyclic windows distinct
    let window = |start: usize, len: usize| -> Vec<usize> {
        (0..len).map(|i| syms[(start + i) % n]).collect()
    };
    let mut block = 1;
    while block <= n {
        let mut seen = std::collections::HashSet::new();
        if (0..n).all(|i| seen.insert(window(i, block))) {
            break;
        }
        block += 1;
    }
    let states: Vec<Vec<usize>> = (0..n).map(|i| window(i, block)).collect();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        p[i][(i + 1) % n] = 1.0;
    }
    let pi = vec![1.0 / n as f64; n];
    MarkovMeasure::new(
        states,
        pi,
        p,
        Provenance::Periodic(g.word_ids(syms).to_vec()),
    )
}

/// Parry measure of a mixing subgraph, regarded as a measure on the ambient
/// shift (its block words are re-keyed to ambient state indices).
pub fn subgraph_measure(g: &MarkovGraph, sub: &MarkovGraph, tol: f64) -> Result<MarkovMeasure> {
    for v in 0..sub.state_count() {
        g.state(sub.id(v))?;
    }
    for (a, b) in sub.edges() {
        let (ga, gb) = (g.state(sub.id(a))?, g.state(sub.id(b))?);
        if !g.has_edge(ga, gb) {
            return Err(Error::Domain(format!(
                "subgraph edge {} -> {} missing in ambient graph",
                sub.id(a),
                sub.id(b)
            )));
        }
    }
    let m = parry_measure(sub, tol)?;
    let states: Vec<Vec<usize>> = m
        .states
        .iter()
        .map(|w| w.iter().map(|&v| g.state(sub.id(v)).unwrap()).collect())
        .collect();
    let desc = format!("{} states", sub.state_count());
    MarkovMeasure::new(states, m.pi.clone(), m.p.clone(), Provenance::Subgraph(desc))
}

/// Exact probability of the base cylinder `[word]`.
pub fn word_probability(mu: &MarkovMeasure, word: &[usize]) -> Result<f64> {
    if word.is_empty() {
        return Ok(1.0);
    }
    let b = mu.block_order();
    if word.len() <= b {
        let mut total = 0.0;
        for (i, w) in mu.states.iter().enumerate() {
            if w[..word.len()] == *word {
                total += mu.pi[i];
            }
        }
        return Ok(total);
    }
    let Some(&start) = mu.index.get(&word[..b]) else {
        return Ok(0.0);
    };
    let mut prob = mu.pi[start];
    let mut cur = start;
    for i in 1..=word.len() - b {
        if prob == 0.0 {
            return Ok(0.0);
        }
        let Some(&next) = mu.index.get(&word[i..i + b]) else {
            return Ok(0.0);
        };
        prob *= mu.p[cur][next];
        cur = next;
    }
    Ok(prob)
}

/// Entropy rate `-sum_a pi_a sum_b P_ab log P_ab` with `0 log 0 = 0`.
pub fn entropy(mu: &MarkovMeasure) -> f64 {
    let mut h = 0.0;
    for (a, row) in mu.p.iter().enumerate() {
        if mu.pi[a] == 0.0 {
            continue;
        }
        for &q in row {
            if q > 0.0 {
                h -= mu.pi[a] * q * q.ln();
            }
        }
    }
    h
}

/// Exact integral of a locally constant observable: sum over admissible
/// memory-words of (stationary word probability) x (value).
pub fn integrate(
    mu: &MarkovMeasure,
    psi: &LocallyConstantFunction,
    g: &MarkovGraph,
) -> Result<f64> {
    let m = psi.memory();
    let mut total = 0.0;
    for w in g.admissible_words(m) {
        let p = word_probability(mu, &w)?;
        if p > 0.0 {
            total += p * psi.value(&w);
        }
    }
    Ok(total)
}

/// `P_mu(phi) = h_mu + int phi dmu`.
pub fn measure_pressure(
    mu: &MarkovMeasure,
    phi: &LocallyConstantFunction,
    g: &MarkovGraph,
) -> Result<f64> {
    Ok(entropy(mu) + integrate(mu, phi, g)?)
}

/// Re-expresses the measure over length-`target` blocks of `g` (the chain
/// of sliding windows). States outside the support get a uniform row so the
/// stochasticity invariant survives.
pub fn promote(mu: &MarkovMeasure, g: &MarkovGraph, target: usize) -> Result<MarkovMeasure> {
    let b = mu.block_order();
    if target < b {
        return Err(Error::Domain(format!(
            "cannot demote block order {b} to {target}"
        )));
    }
    if target == b {
        return Ok(mu.clone());
    }
    let words = g.admissible_words(target);
    let n = words.len();
    let mut pi = vec![0.0; n];
    let mut p = vec![vec![0.0; n]; n];
    let index: HashMap<Vec<usize>, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    for (i, w) in words.iter().enumerate() {
        pi[i] = word_probability(mu, w)?;
    }
    for (i, w) in words.iter().enumerate() {
        let total = pi[i];
        let mut row_mass = 0.0;
        let mut succs = Vec::new();
        for &s in g.out(*w.last().unwrap()) {
            let mut ext = w[1..].to_vec();
            ext.push(s);
            if let Some(&j) = index.get(&ext) {
                succs.push(j);
                if total > 0.0 {
                    let mut full = w.clone();
                    full.push(s);
                    let q = word_probability(mu, &full)? / total;
                    p[i][j] = q;
                    row_mass += q;
                }
            }
        }
        if total == 0.0 || row_mass == 0.0 {
            // unreachable state: any stochastic row keeps the invariants
            let u = 1.0 / succs.len().max(1) as f64;
            for j in &succs {
                p[i][*j] = u;
            }
        } else if (row_mass - 1.0).abs() > 1e-13 {
            for v in p[i].iter_mut() {
                *v /= row_mass;
            }
        }
    }
    let pis: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= pis;
    }
    MarkovMeasure::new(words, pi, p, mu.provenance.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::EIGEN_TOL;
    use crate::observable::{coboundary, LocallyConstantFunction as Lcf};
    use crate::shift::{cycle_count_total, periodic_points_in_cylinder, MarkovGraph};
    use crate::transfer::pressure_finite;
    use num_traits::ToPrimitive;

    const GOLDEN: f64 = 1.618033988749894848_f64;

    fn full2() -> MarkovGraph {
        MarkovGraph::full_shift(2).unwrap()
    }

    #[test]
    fn parry_full_shift_is_uniform() {
        let m = parry_measure(&full2(), EIGEN_TOL).unwrap();
        for a in 0..2 {
            assert!((m.stationary()[a] - 0.5).abs() < 1e-13);
            for b in 0..2 {
                assert!((m.matrix()[a][b] - 0.5).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn parry_golden_mean_closed_form() {
        let g = MarkovGraph::golden_mean();
        let m = parry_measure(&g, EIGEN_TOL).unwrap();
        let pi1 = GOLDEN / 5f64.sqrt();
        assert!((m.stationary()[0] - pi1).abs() < 1e-12);
        assert!((m.matrix()[0][0] - 1.0 / GOLDEN).abs() < 1e-12);
        assert!((m.matrix()[1][0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn parry_matches_periodic_orbit_frequencies() {
        let g = MarkovGraph::golden_mean();
        let m = parry_measure(&g, EIGEN_TOL).unwrap();
        let n = 20;
        let total = cycle_count_total(&g, n).to_f64().unwrap();
        for w in [vec![0], vec![1], vec![0, 0], vec![0, 1]] {
            let hits = periodic_points_in_cylinder(&g, &w, n)
                .unwrap()
                .to_f64()
                .unwrap();
            let freq = hits / total;
            let exact = word_probability(&m, &w).unwrap();
            assert!(
                (freq - exact).abs() < 1e-3,
                "cylinder {w:?}: {freq} vs {exact}"
            );
        }
    }

    #[test]
    fn parry_cycle_with_chord_matches_frequencies() {
        let s = ["1", "2", "3"];
        let g =
            MarkovGraph::from_parts(&s, &[("1", "2"), ("2", "3"), ("3", "1"), ("1", "1")]).unwrap();
        let m = parry_measure(&g, EIGEN_TOL).unwrap();
        let n = 24;
        let total = cycle_count_total(&g, n).to_f64().unwrap();
        for w in [vec![0], vec![1], vec![2], vec![0, 1], vec![2, 0]] {
            let hits = periodic_points_in_cylinder(&g, &w, n)
                .unwrap()
                .to_f64()
                .unwrap();
            let freq = hits / total;
            let exact = word_probability(&m, &w).unwrap();
            assert!((freq - exact).abs() < 1e-3);
        }
    }

    #[test]
    fn rpf_zero_potential_is_parry() {
        let g = MarkovGraph::golden_mean();
        let parry = parry_measure(&g, EIGEN_TOL).unwrap();
        let rpf = rpf_measure(&g, &Lcf::constant(0.0), EIGEN_TOL).unwrap();
        for a in 0..2 {
            assert!((parry.stationary()[a] - rpf.stationary()[a]).abs() < 1e-13);
        }
    }

    #[test]
    fn rpf_tilted_bernoulli_closed_form() {
        let g = full2();
        for t in [-1.0, 0.0, 0.6, 2.0] {
            let m = tilted_equilibrium(
                &g,
                &Lcf::constant(0.0),
                &Lcf::indicator(&[0]),
                t,
                EIGEN_TOL,
            )
            .unwrap();
            let p1 = t.exp() / (t.exp() + 1.0);
            assert!((m.stationary()[0] - p1).abs() < 1e-12, "t = {t}");
            for a in 0..2 {
                assert!((m.matrix()[a][0] - p1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conditional_ratio_identity() {
        // the backward conditional m[a,b,c] / m[b,c] equals the eigenvector
        // expression q_ab = T_ab nu_a / (lambda nu_b), independently of the
        // continuation c
        let g = MarkovGraph::golden_mean();
        let m = parry_measure(&g, EIGEN_TOL).unwrap();
        let l = crate::transfer::transfer_matrix(&g, &Lcf::constant(0.0)).unwrap();
        let rpf = crate::transfer::perron_data(&l, EIGEN_TOL).unwrap();
        for w in g.admissible_words(3) {
            let (a, b) = (w[0], w[1]);
            let ratio = word_probability(&m, &w).unwrap()
                / word_probability(&m, &w[1..]).unwrap();
            let q = rpf.nu[a] / (rpf.lambda * rpf.nu[b]);
            assert!((ratio - q).abs() < 1e-12, "word {w:?}");
        }
    }

    #[test]
    fn entropy_examples() {
        let m = bernoulli_measure(&full2(), &[0.5, 0.5]).unwrap();
        assert!((entropy(&m) - 2f64.ln()).abs() < 1e-14);

        let g = MarkovGraph::golden_mean();
        let parry = parry_measure(&g, EIGEN_TOL).unwrap();
        assert!((entropy(&parry) - GOLDEN.ln()).abs() < 1e-10);

        let cyc = Word::new(&g, vec![0, 1]).unwrap();
        let per = periodic_measure(&g, &cyc).unwrap();
        assert_eq!(entropy(&per), 0.0);
    }

    #[test]
    fn integrate_examples() {
        let g = full2();
        let uni = bernoulli_measure(&g, &[0.5, 0.5]).unwrap();
        let ind = Lcf::indicator(&[0]);
        assert!((integrate(&uni, &ind, &g).unwrap() - 0.5).abs() < 1e-14);

        let gm = MarkovGraph::golden_mean();
        let parry = parry_measure(&gm, EIGEN_TOL).unwrap();
        let val = integrate(&parry, &Lcf::indicator(&[0]), &gm).unwrap();
        assert!((val - GOLDEN / 5f64.sqrt()).abs() < 1e-12);

        // coboundaries integrate to their constant under any measure
        let u = Lcf::indicator(&[0]).scale(1.3);
        let cob = coboundary(&gm, &u, 0.7);
        for mu in [
            parry.clone(),
            periodic_measure(&gm, &Word::new(&gm, vec![0, 1]).unwrap()).unwrap(),
        ] {
            let v = integrate(&mu, &cob, &gm).unwrap();
            assert!((v - 0.7).abs() < 1e-13);
        }
    }

    #[test]
    fn variational_principle_on_small_battery() {
        let g = full2();
        let phi = Lcf::indicator(&[0]).scale(0.4);
        let pg = pressure_finite(&g, &phi, EIGEN_TOL).unwrap();
        let eq = rpf_measure(&g, &phi, EIGEN_TOL).unwrap();
        let p_eq = measure_pressure(&eq, &phi, &g).unwrap();
        assert!((p_eq - pg).abs() < 1e-10);
        for k in 1..=9 {
            let p = k as f64 / 10.0;
            let mu = bernoulli_measure(&g, &[p, 1.0 - p]).unwrap();
            let pm = measure_pressure(&mu, &phi, &g).unwrap();
            assert!(pm <= pg + 1e-10);
            if (p - eq.stationary()[0]).abs() > 1e-3 {
                assert!(pm < pg - 1e-6);
            }
        }
    }

    #[test]
    fn rpf_measures_have_full_support() {
        let g = MarkovGraph::golden_mean();
        let m = rpf_measure(&g, &Lcf::indicator(&[0, 1]).scale(-0.9), EIGEN_TOL).unwrap();
        for (a, b) in g.edges() {
            // block order can exceed 1 after recoding; check cylinder masses
            let base = vec![a, b];
            assert!(word_probability(&m, &base).unwrap() > 0.0);
        }
    }

    #[test]
    fn periodic_measure_with_repeated_states() {
        let g = full2();
        let cyc = Word::new(&g, vec![0, 0, 1]).unwrap();
        let m = periodic_measure(&g, &cyc).unwrap();
        assert_eq!(m.block_order(), 2);
        assert!((integrate(&m, &Lcf::indicator(&[0]), &g).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(entropy(&m), 0.0);
        // non-primitive input reduces
        let doubled = Word::new(&g, vec![0, 1, 0, 1]).unwrap();
        let m2 = periodic_measure(&g, &doubled).unwrap();
        assert!((integrate(&m2, &Lcf::indicator(&[0]), &g).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn subgraph_measure_support() {
        let g = full2();
        let sub = MarkovGraph::golden_mean();
        let m = subgraph_measure(&g, &sub, EIGEN_TOL).unwrap();
        assert!(word_probability(&m, &[0, 1]).unwrap() > 0.0);
        assert_eq!(word_probability(&m, &[1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn promotion_preserves_integrals_and_entropy() {
        let g = MarkovGraph::golden_mean();
        let m = parry_measure(&g, EIGEN_TOL).unwrap();
        let m3 = promote(&m, &g, 3).unwrap();
        let psi = Lcf::indicator(&[0, 0]);
        let a = integrate(&m, &psi, &g).unwrap();
        let b = integrate(&m3, &psi, &g).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((entropy(&m) - entropy(&m3)).abs() < 1e-10);
    }
}
