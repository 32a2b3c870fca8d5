//! Locally constant potentials and observables.
//!
//! A locally constant function depends on finitely many coordinates
//! `x_0 .. x_{m-1}` (its *memory*), so its oscillations vanish beyond the
//! memory and it is Hölder continuous for every exponent. All paper
//! experiments (indicators, coboundaries, tilted directions) live in this
//! class, and pressure computations reduce to finite eigenproblems after
//! higher-block recoding.

use crate::error::{Error, Result};
use crate::measure::{self, MarkovMeasure};
use crate::shift::{enumerate_cycles, MarkovGraph, Word};
use std::collections::HashMap;

/// A function of the first `memory` coordinates, given by a finite table
/// over admissible words plus a default for unlisted words.
#[derive(Debug, Clone)]
pub struct LocallyConstantFunction {
    memory: usize,
    table: HashMap<Vec<usize>, f64>,
    default: f64,
}

/// Hölder regularity data of an observable at exponent `beta`.
///
/// The seminorm maximizes `|psi(x) - psi(y)| * exp(beta * t)` over pairs of
/// admissible memory-words agreeing on exactly the first `t` symbols; pairs
/// agreeing beyond the memory contribute nothing by local constancy.
#[derive(Debug, Clone, Copy)]
pub struct HolderData {
    pub beta: f64,
    pub sup_norm: f64,
    pub seminorm: f64,
    /// `sup_norm + seminorm`.
    pub norm: f64,
}

impl LocallyConstantFunction {
    pub fn new(memory: usize, table: HashMap<Vec<usize>, f64>, default: f64) -> Result<Self> {
        if memory == 0 {
            return Err(Error::Domain("memory must be >= 1".into()));
        }
        if table.keys().any(|w| w.len() != memory) {
            return Err(Error::Domain("table keys must have length = memory".into()));
        }
        Ok(Self {
            memory,
            table,
            default,
        })
    }

    /// The constant function `c` (memory 1, empty table).
    pub fn constant(c: f64) -> Self {
        Self {
            memory: 1,
            table: HashMap::new(),
            default: c,
        }
    }

    /// Indicator of the cylinder `[word]`.
    pub fn indicator(word: &[usize]) -> Self {
        let mut table = HashMap::new();
        table.insert(word.to_vec(), 1.0);
        Self {
            memory: word.len(),
            table,
            default: 0.0,
        }
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn default_value(&self) -> f64 {
        self.default
    }

    /// Raw table lookup on the first `memory` symbols (no admissibility
    /// check); internal building block.
    pub(crate) fn value(&self, word: &[usize]) -> f64 {
        debug_assert!(word.len() >= self.memory);
        self.table
            .get(&word[..self.memory])
            .copied()
            .unwrap_or(self.default)
    }

    /// Evaluate on an admissible word of length >= memory.
    pub fn evaluate(&self, g: &MarkovGraph, word: &[usize]) -> Result<f64> {
        if word.len() < self.memory {
            return Err(Error::WordTooShort {
                len: word.len(),
                memory: self.memory,
            });
        }
        if !g.is_admissible(word) {
            return Err(Error::InadmissibleWord(g.word_ids(word).join(",")));
        }
        Ok(self.value(word))
    }

    /// Scale by a constant.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            memory: self.memory,
            table: self.table.iter().map(|(k, v)| (k.clone(), c * v)).collect(),
            default: c * self.default,
        }
    }

    /// Add a constant.
    pub fn add_constant(&self, c: f64) -> Self {
        Self {
            memory: self.memory,
            table: self.table.iter().map(|(k, v)| (k.clone(), c + v)).collect(),
            default: c + self.default,
        }
    }

    /// Rewrite over memory `m >= self.memory` by enumerating admissible
    /// words of `g`.
    pub fn promote(&self, g: &MarkovGraph, m: usize) -> Result<Self> {
        if m < self.memory {
            return Err(Error::Domain(format!(
                "cannot demote memory {} to {m}",
                self.memory
            )));
        }
        if m == self.memory {
            return Ok(self.clone());
        }
        let table = g
            .admissible_words(m)
            .into_iter()
            .map(|w| {
                let v = self.value(&w);
                (w, v)
            })
            .collect();
        Ok(Self {
            memory: m,
            table,
            default: 0.0,
        })
    }

    /// Pointwise sum; operands are promoted to the larger memory.
    pub fn add(&self, g: &MarkovGraph, other: &Self) -> Result<Self> {
        let m = self.memory.max(other.memory);
        let table = g
            .admissible_words(m)
            .into_iter()
            .map(|w| {
                let v = self.value(&w) + other.value(&w);
                (w, v)
            })
            .collect();
        Ok(Self {
            memory: m,
            table,
            default: self.default + other.default,
        })
    }

    pub fn sub(&self, g: &MarkovGraph, other: &Self) -> Result<Self> {
        self.add(g, &other.scale(-1.0))
    }

    /// `psi . sigma` as a memory-(m+1) function.
    pub fn compose_shift(&self, g: &MarkovGraph) -> Self {
        let m = self.memory + 1;
        let table = g
            .admissible_words(m)
            .into_iter()
            .map(|w| {
                let v = self.value(&w[1..]);
                (w, v)
            })
            .collect();
        Self {
            memory: m,
            table,
            default: 0.0,
        }
    }

    /// Birkhoff sum of the observable around an admissible loop, with
    /// cyclic wraparound.
    pub fn birkhoff_sum_on_cycle(&self, g: &MarkovGraph, cycle: &Word) -> Result<f64> {
        let syms = cycle.symbols();
        let n = syms.len();
        if n == 0 || !g.is_admissible(syms) || !g.has_edge(syms[n - 1], syms[0]) {
            return Err(Error::InadmissibleWord(g.word_ids(syms).join(",")));
        }
        // unroll the cycle far enough to read every window of length memory
        let reps = (n + self.memory - 1).div_ceil(n) + 1;
        let mut ext = Vec::with_capacity(reps * n);
        for _ in 0..reps {
            ext.extend_from_slice(syms);
        }
        let mut total = 0.0;
        for k in 0..n {
            total += self.value(&ext[k..k + self.memory]);
        }
        Ok(total)
    }

    /// n-th oscillation over admissible pairs: zero for `n >= memory`.
    pub fn oscillation(&self, g: &MarkovGraph, n: usize) -> f64 {
        if n >= self.memory {
            return 0.0;
        }
        let words = g.admissible_words(self.memory);
        let mut osc = 0.0f64;
        for (i, x) in words.iter().enumerate() {
            for y in &words[i + 1..] {
                if x[..n] == y[..n] {
                    osc = osc.max((self.value(x) - self.value(y)).abs());
                }
            }
        }
        osc
    }
}

/// Exact Hölder norm of `psi` at exponent `beta > 0` by finite enumeration
/// over admissible memory-words.
pub fn holder_norm(g: &MarkovGraph, psi: &LocallyConstantFunction, beta: f64) -> HolderData {
    let m = psi.memory();
    let words = g.admissible_words(m);
    let sup_norm = words
        .iter()
        .map(|w| psi.value(w).abs())
        .fold(0.0f64, f64::max);
    let mut seminorm = 0.0f64;
    for (i, x) in words.iter().enumerate() {
        for y in &words[i + 1..] {
            let t = x.iter().zip(y.iter()).take_while(|(a, b)| a == b).count();
            if t < m {
                let gap = (psi.value(x) - psi.value(y)).abs();
                seminorm = seminorm.max(gap * (beta * t as f64).exp());
            }
        }
    }
    HolderData {
        beta,
        sup_norm,
        seminorm,
        norm: sup_norm + seminorm,
    }
}

/// The coboundary `u - u . sigma + c` as a memory-(m+1) function; its
/// Birkhoff sum over any length-n loop telescopes to `c * n`.
pub fn coboundary(g: &MarkovGraph, u: &LocallyConstantFunction, c: f64) -> LocallyConstantFunction {
    let shifted = u.compose_shift(g);
    u.sub(g, &shifted)
        .expect("memory promotion over admissible words")
        .add_constant(c)
}

/// The vanishing-variance family `psi^(n) = psi/n + (psi - psi . sigma)`:
/// its asymptotic variance scales like `sigma(psi)/n` while the Hölder norm
/// stays bounded below.
pub fn small_sigma_family(
    g: &MarkovGraph,
    psi: &LocallyConstantFunction,
    n: usize,
) -> Result<LocallyConstantFunction> {
    if n == 0 {
        return Err(Error::Domain("family index must be >= 1".into()));
    }
    let scaled = psi.scale(1.0 / n as f64);
    let cob = coboundary(g, psi, 0.0);
    scaled.add(g, &cob)
}

/// Outcome of the periodic-orbit cohomology check.
#[derive(Debug, Clone)]
pub struct CohomologyVerdict {
    /// Common per-period average when all cycles agree.
    pub constant: Option<f64>,
    /// Two cycles with different averages, when they disagree.
    pub witness: Option<(Word, Word)>,
    /// Largest cycle length inspected; agreement up to here is evidence,
    /// not proof.
    pub verified_up_to: usize,
}

/// Tests whether all per-period cycle averages of `psi` agree for cycle
/// lengths `<= n_max` (the Livshits periodic-orbit criterion at desk scale).
pub fn cohomology_to_constant_test(
    g: &MarkovGraph,
    psi: &LocallyConstantFunction,
    n_max: usize,
    cap: usize,
) -> Result<CohomologyVerdict> {
    if n_max > cap {
        return Err(Error::CapExceeded { n: n_max, cap });
    }
    let mut reference: Option<(f64, Word)> = None;
    for n in 1..=n_max {
        for a in 0..g.state_count() {
            for cycle in enumerate_cycles(g, a, n, cap)? {
                // canonical base state: skip cycles whose minimum is not at
                // the front, so each orbit is inspected once
                if cycle.symbols().iter().any(|&s| s < a) {
                    continue;
                }
                let avg = psi.birkhoff_sum_on_cycle(g, &cycle)? / n as f64;
                match &reference {
                    None => reference = Some((avg, cycle)),
                    Some((r, w)) => {
                        if (avg - r).abs() > 1e-10 {
                            return Ok(CohomologyVerdict {
                                constant: None,
                                witness: Some((w.clone(), cycle)),
                                verified_up_to: n,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(CohomologyVerdict {
        constant: reference.map(|(r, _)| r),
        witness: None,
        verified_up_to: n_max,
    })
}

/// Searches for `count` pairwise-disjoint periodic orbits of one common
/// period that share their first symbol. Orbits are represented by loops
/// based at the shared state; the search runs over base states in
/// lexicographic identifier order, then periods `p = 1, 2, ..`, and the
/// first hit wins (deterministic).
pub fn disjoint_periodic_orbits(
    g: &MarkovGraph,
    count: usize,
    cap: usize,
) -> Result<(usize, Vec<Word>)> {
    let mut order: Vec<usize> = (0..g.state_count()).collect();
    order.sort_by(|&a, &b| g.id(a).cmp(g.id(b)));
    for p in 1..=cap {
        for &base in &order {
            let loops = enumerate_cycles(g, base, p, cap)?;
            let mut reps: Vec<Word> = Vec::new();
            'next: for w in loops {
                for r in &reps {
                    if cyclic_equal(r.symbols(), w.symbols()) {
                        continue 'next;
                    }
                }
                reps.push(w);
            }
            if reps.len() >= count {
                reps.truncate(count);
                return Ok((p, reps));
            }
        }
    }
    Err(Error::Domain(format!(
        "no {count} disjoint periodic orbits of a common period within cap {cap}"
    )))
}

fn cyclic_equal(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    (0..n).any(|r| (0..n).all(|i| a[i] == b[(i + r) % n]))
}

/// The decorrelated observable of the arbitrary-measure EKP argument:
/// built from two disjoint periodic-orbit cylinder indicators so that
/// `int A dm = int A dmu = 0`.
pub fn decorrelated_observable(
    mu: &MarkovMeasure,
    m: &MarkovMeasure,
    g: &MarkovGraph,
    cap: usize,
) -> Result<LocallyConstantFunction> {
    let (p, orbits) = disjoint_periodic_orbits(g, 4, cap)?;
    let word_a = closed_word(&orbits[0]);
    let word_b = closed_word(&orbits[2]);
    let a = LocallyConstantFunction::indicator(&word_a)
        .add_constant(-measure::word_probability(m, &word_a)?);
    let b = LocallyConstantFunction::indicator(&word_b)
        .add_constant(-measure::word_probability(m, &word_b)?);
    let ia = measure::integrate(mu, &a, g)?;
    let ib = measure::integrate(mu, &b, g)?;
    let _ = p;
    const ZERO: f64 = 1e-14;
    if ia.abs() <= ZERO {
        return Ok(a);
    }
    if ib.abs() <= ZERO {
        return Ok(b);
    }
    let r = (ia * ia + ib * ib).sqrt();
    a.scale(ib / r).sub(g, &b.scale(ia / r))
}

/// The closed word `(x_0, .., x_{p-1}, x_0)` of a loop.
fn closed_word(w: &Word) -> Vec<usize> {
    let mut v = w.symbols().to_vec();
    v.push(w.symbols()[0]);
    v
}
