//! Renewal presentations of countable-state shifts: first-return loop
//! multiplicities `f_n` at a base state, with an optional analytic tail
//! `f_n = floor(c * rho^{-n} * n^{-alpha})`.
//!
//! The induced system is a full shift over the loop alphabet, so pressure,
//! SPR diagnostics and escape families reduce to one-dimensional generating
//! function arithmetic with certified remainder bounds. The tail form
//! realizes both SPR and non-SPR regimes with exactly known radius
//! `R = rho`; `rho = 1` is allowed so that the full-shift loop data
//! `f_n = 1` for all `n` is representable.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use std::collections::BTreeMap;

/// Analytic tail `f_n = floor(c * rho^{-n} * n^{-alpha})` for `n >= from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub c: f64,
    pub rho: f64,
    pub alpha: f64,
    pub from: usize,
}

/// Observable on a loop system, constant on loops of a given length: the
/// value is the Birkhoff sum of the observable over one full loop.
#[derive(Debug, Clone)]
pub enum LoopObservable {
    /// Indicator of the base cylinder: every loop meets the base exactly
    /// once, so all loop sums equal 1.
    BaseIndicator,
    /// Arbitrary per-length loop sums.
    PerLength {
        values: BTreeMap<usize, f64>,
        default: f64,
    },
}

impl LoopObservable {
    fn loop_sum(&self, n: usize) -> f64 {
        match self {
            LoopObservable::BaseIndicator => 1.0,
            LoopObservable::PerLength { values, default } => {
                values.get(&n).copied().unwrap_or(*default)
            }
        }
    }
}

/// First-return loop data at a base state. Explicit entries override the
/// tail formula at their index (which is how loop removal is expressed).
/// Optional per-length weights `w_n` represent a potential constant on
/// loops of length `n`.
#[derive(Debug, Clone)]
pub struct LoopSystem {
    explicit: BTreeMap<usize, u64>,
    tail: Option<Tail>,
    weights: BTreeMap<usize, f64>,
    /// Smallest n at which the tail value exceeds 2^53 and the floor stops
    /// being representable; beyond it the analytic form is used directly.
    float_cutoff: usize,
    /// Largest index carrying a nonzero weight (fast skip in hot loops).
    weights_max: usize,
}

/// A generating-function evaluation with a rigorous truncation bound.
#[derive(Debug, Clone, Copy)]
pub enum GfValue {
    Finite { value: f64, remainder: f64 },
    Infinite,
}

/// Certified SPR verdict. `None` means the certified interval for `F(R)`
/// straddles 1 and the question is numerically undecidable.
#[derive(Debug, Clone, Copy)]
pub struct SprVerdict {
    pub spr: Option<bool>,
    /// Certified enclosure of `F(R)`; `(inf, inf)` when the series
    /// diverges at the radius.
    pub f_at_radius: (f64, f64),
}

/// Discriminant value: `sup_p log(sum f_n e^{w_n + p n})`.
#[derive(Debug, Clone, Copy)]
pub enum Discriminant {
    Infinite,
    Finite { value: f64, uncertainty: f64 },
}

/// Induced equilibrium data of a positively recurrent loop system.
#[derive(Debug, Clone)]
pub struct InducedParry {
    /// Root of `F_w(z) = 1`.
    pub z_star: f64,
    /// Loop-length distribution `q_n = f_n e^{w_n} z*^n` (leading part).
    pub distribution: Vec<(usize, f64)>,
    pub mean_loop: f64,
    /// `mu[base] = 1 / mean_loop`.
    pub base_mass: f64,
    /// Entropy of the induced Bernoulli scheme (with loop multiplicity).
    pub induced_entropy: f64,
    /// Abramov entropy of the base measure.
    pub entropy: f64,
    /// `P_mu(phi) = entropy + int phi = -log z*`.
    pub pressure: f64,
}

/// One member of the escape-to-infinity family: the equilibrium measure of
/// the subsystem of loops with lengths inside the window.
#[derive(Debug, Clone)]
pub struct EscapeFamilyRecord {
    pub n: usize,
    pub window: (usize, usize),
    /// Per-loop probability of a length-k loop is `e^{w_k} z*^k`.
    pub z_star: f64,
    pub mean_loop: f64,
    pub base_mass: f64,
    pub abramov_entropy: f64,
    pub pressure: f64,
    pub int_psi: f64,
}

impl LoopSystem {
    /// Builds a loop system; when `enforce_mixing` is set the support must
    /// have gcd 1.
    pub fn new(
        explicit: BTreeMap<usize, u64>,
        tail: Option<Tail>,
        weights: BTreeMap<usize, f64>,
        enforce_mixing: bool,
    ) -> Result<Self> {
        if explicit.keys().any(|&n| n == 0) || weights.keys().any(|&n| n == 0) {
            return Err(Error::Domain("loop lengths start at 1".into()));
        }
        if let Some(t) = &tail {
            let ok = t.c.is_finite()
                && t.c > 0.0
                && t.rho > 0.0
                && t.rho <= 1.0
                && t.alpha >= 0.0
                && t.from >= 1;
            if !ok {
                return Err(Error::Domain(
                    "tail needs c > 0, rho in (0, 1], alpha >= 0, from >= 1".into(),
                ));
            }
        }
        let float_cutoff = match &tail {
            None => usize::MAX,
            Some(t) => {
                let mut n = t.from;
                loop {
                    let raw = t.c * t.rho.powi(-(n as i32)) * (n as f64).powf(-t.alpha);
                    if !raw.is_finite() || raw >= 9.0e15 {
                        break n;
                    }
                    n += 1;
                    if n > 1_000_000 {
                        break usize::MAX;
                    }
                }
            }
        };
        let weights_max = weights.keys().copied().max().unwrap_or(0);
        let ls = Self {
            explicit,
            tail,
            weights,
            float_cutoff,
            weights_max,
        };
        if ls.support_is_empty() {
            return Err(Error::Domain("loop system has no loops".into()));
        }
        if enforce_mixing && !ls.is_mixing() {
            return Err(Error::Domain(
                "support gcd exceeds 1 (non-mixing loop system)".into(),
            ));
        }
        Ok(ls)
    }

    /// Finite-support constructor from explicit counts only.
    pub fn finite<I: IntoIterator<Item = (usize, u64)>>(counts: I) -> Result<Self> {
        Self::new(counts.into_iter().collect(), None, BTreeMap::new(), true)
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn weights(&self) -> &BTreeMap<usize, f64> {
        &self.weights
    }

    /// Loop count `f_n` (floored tail values above 2^53 are represented
    /// approximately; their relative error is below 2^-53).
    pub fn f(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if let Some(&v) = self.explicit.get(&n) {
            return v as f64;
        }
        match &self.tail {
            Some(t) if n >= t.from => {
                let raw = t.c * t.rho.powi(-(n as i32)) * (n as f64).powf(-t.alpha);
                if raw < 9.0e15 {
                    raw.floor()
                } else {
                    raw
                }
            }
            _ => 0.0,
        }
    }

    fn weight(&self, n: usize) -> f64 {
        if n > self.weights_max {
            return 0.0;
        }
        self.weights.get(&n).copied().unwrap_or(0.0)
    }

    /// Radius of convergence of the weighted generating function.
    pub fn radius(&self) -> f64 {
        match &self.tail {
            Some(t) => t.rho,
            None => f64::INFINITY,
        }
    }

    fn support_is_empty(&self) -> bool {
        let explicit_positive = self.explicit.values().any(|&v| v > 0);
        if explicit_positive {
            return false;
        }
        match &self.tail {
            None => true,
            Some(t) => {
                // the tail eventually produces positive counts unless it is
                // fully overridden (only finitely many overrides exist)
                let mut n = t.from;
                loop {
                    if self.f(n) > 0.0 {
                        return false;
                    }
                    n += 1;
                    if n > t.from + 10_000 {
                        return true;
                    }
                }
            }
        }
    }

    /// gcd of the support.
    pub fn is_mixing(&self) -> bool {
        let mut g = 0usize;
        for (&n, &v) in &self.explicit {
            if v > 0 {
                g = gcd(g, n);
            }
        }
        if let Some(t) = &self.tail {
            let mut n = t.from;
            let mut seen = 0;
            while seen < 64 && n < t.from + 100_000 {
                if self.f(n) > 0.0 {
                    g = gcd(g, n);
                    seen += 1;
                    if g == 1 {
                        return true;
                    }
                }
                n += 1;
            }
        }
        g == 1
    }

    pub fn max_explicit(&self) -> usize {
        self.explicit.keys().copied().max().unwrap_or(0)
    }

    /// Log of the weighted term `f_n e^{w_n} z^n`, or `None` for absent
    /// lengths. Tail terms are combined in exponent space so that huge
    /// `rho^{-n}` factors cancel against `z^n` exactly.
    fn ln_term(&self, n: usize, ln_z: f64) -> Option<f64> {
        if let Some(&v) = self.explicit.get(&n) {
            if v == 0 {
                return None;
            }
            return Some((v as f64).ln() + self.weight(n) + n as f64 * ln_z);
        }
        match &self.tail {
            Some(t) if n >= t.from => {
                // respect the floor while it is representable
                if n < self.float_cutoff {
                    let raw = t.c * t.rho.powi(-(n as i32)) * (n as f64).powf(-t.alpha);
                    let fl = raw.floor();
                    if fl < 1.0 {
                        return None;
                    }
                    return Some(fl.ln() + self.weight(n) + n as f64 * ln_z);
                }
                let raw_ln =
                    t.c.ln() - t.alpha * (n as f64).ln() + n as f64 * (ln_z - t.rho.ln());
                Some(raw_ln + self.weight(n))
            }
            _ => None,
        }
    }

    /// Stable sum of `f_n e^{w_n} z^n` over `lo..=hi` together with the
    /// weighted moments needed downstream. Returns
    /// `(ln_sum, mean_length, mean_weight, mean_psi)` relative to the
    /// normalized distribution, where means are `sum x_n t_n / sum t_n`.
    fn window_moments(
        &self,
        ln_z: f64,
        lo: usize,
        hi: usize,
        psi: Option<&LoopObservable>,
    ) -> Option<(f64, f64, f64, f64)> {
        // max exponent: the tail exponent is convex in n, so its maximum
        // over the (override-free) tail endpoints dominates; explicit
        // entries are scanned directly
        let mut m = f64::NEG_INFINITY;
        for (&n, &v) in self.explicit.range(lo..=hi) {
            if v > 0 {
                if let Some(l) = self.ln_term(n, ln_z) {
                    m = m.max(l);
                }
            }
        }
        if let Some(t) = &self.tail {
            let mut tlo = lo.max(t.from);
            while tlo <= hi && self.explicit.contains_key(&tlo) {
                tlo += 1;
            }
            let mut thi = hi;
            while thi > tlo && self.explicit.contains_key(&thi) {
                thi -= 1;
            }
            if tlo <= thi {
                for n in [tlo, thi] {
                    if let Some(l) = self.ln_term(n, ln_z) {
                        m = m.max(l);
                    }
                }
            }
        }
        if m == f64::NEG_INFINITY {
            return None;
        }
        let mut sum = KahanSum::new();
        let mut sum_n = KahanSum::new();
        let mut sum_w = KahanSum::new();
        let mut sum_s = KahanSum::new();
        for n in lo..=hi {
            let Some(l) = self.ln_term(n, ln_z) else {
                continue;
            };
            let t = (l - m).exp();
            if t == 0.0 {
                continue;
            }
            sum.add(t);
            sum_n.add(n as f64 * t);
            sum_w.add(self.weight(n) * t);
            if let Some(p) = psi {
                sum_s.add(p.loop_sum(n) * t);
            }
        }
        let s = sum.value();
        Some((
            m + s.ln(),
            sum_n.value() / s,
            sum_w.value() / s,
            sum_s.value() / s,
        ))
    }

    /// Truncation bound for the tail beyond `hi` at argument `ln_z`
    /// (requires `z <= rho`; geometric comparison for `z < rho`, integral
    /// comparison at `z = rho`).
    fn tail_remainder(&self, ln_z: f64, hi: usize) -> f64 {
        let Some(t) = &self.tail else {
            return 0.0;
        };
        let n = (hi + 1).max(t.from);
        let delta = ln_z - t.rho.ln();
        if delta < 0.0 {
            // sum_{k > hi} c k^-alpha e^{k delta} <= c n^-alpha e^{n delta} / (1 - e^delta)
            t.c * (n as f64).powf(-t.alpha) * (n as f64 * delta).exp() / (-delta).exp_m1().abs()
        } else if t.alpha > 1.0 {
            // z = rho: integral comparison
            t.c * (n as f64 - 1.0).powf(1.0 - t.alpha) / (t.alpha - 1.0)
        } else {
            f64::INFINITY
        }
    }

    /// `F_w(z) = sum f_n e^{w_n} z^n` through `n_trunc`, with a rigorous
    /// remainder bound. Divergence for `z > R` is an error; divergence at
    /// `z = R` reports [`GfValue::Infinite`].
    pub fn generating_function(&self, z: f64, n_trunc: usize) -> Result<GfValue> {
        if z < 0.0 {
            return Err(Error::Domain("z must be nonnegative".into()));
        }
        if z == 0.0 {
            return Ok(GfValue::Finite {
                value: 0.0,
                remainder: 0.0,
            });
        }
        let r = self.radius();
        if z > r {
            return Err(Error::Divergent { z, radius: r });
        }
        if let Some(t) = &self.tail {
            if z == r && t.alpha <= 1.0 {
                return Ok(GfValue::Infinite);
            }
        }
        let hi = n_trunc.max(self.max_explicit()).max(
            self.tail
                .map(|t| t.from)
                .unwrap_or(1),
        );
        let ln_z = z.ln();
        let value = match self.window_moments(ln_z, 1, hi, None) {
            Some((ln_sum, _, _, _)) => ln_sum.exp(),
            None => 0.0,
        };
        let remainder = self.tail_remainder(ln_z, hi);
        Ok(GfValue::Finite { value, remainder })
    }

    /// Certified enclosure of `F_w(R)`.
    fn f_at_radius(&self) -> GfValue {
        match &self.tail {
            None => GfValue::Infinite,
            Some(t) => {
                if t.alpha <= 1.0 {
                    return GfValue::Infinite;
                }
                // push the truncation until the bound is negligible
                let mut hi = (self.max_explicit().max(t.from) + 1024).next_power_of_two();
                loop {
                    let rem = self.tail_remainder(t.rho.ln(), hi);
                    let val = match self.window_moments(t.rho.ln(), 1, hi, None) {
                        Some((ls, _, _, _)) => ls.exp(),
                        None => 0.0,
                    };
                    if rem <= 1e-12 * val.max(1.0) || hi >= 1 << 22 {
                        return GfValue::Finite {
                            value: val,
                            remainder: rem,
                        };
                    }
                    hi *= 2;
                }
            }
        }
    }

    /// Strong positive recurrence: `F_w(R) > 1`, certified.
    pub fn is_spr(&self) -> SprVerdict {
        match self.f_at_radius() {
            GfValue::Infinite => SprVerdict {
                spr: Some(true),
                f_at_radius: (f64::INFINITY, f64::INFINITY),
            },
            GfValue::Finite { value, remainder } => {
                let (lo, hi) = (value, value + remainder);
                let spr = if lo > 1.0 {
                    Some(true)
                } else if hi < 1.0 {
                    Some(false)
                } else {
                    None
                };
                SprVerdict {
                    spr,
                    f_at_radius: (lo, hi),
                }
            }
        }
    }

    /// Discriminant `sup_p log sum f_n e^{w_n + pn}`: the limit value at
    /// `p -> log R` (monotone), `+infinity` for finite support.
    pub fn discriminant(&self) -> Discriminant {
        match self.f_at_radius() {
            GfValue::Infinite => Discriminant::Infinite,
            GfValue::Finite { value, remainder } => Discriminant::Finite {
                value: (value + 0.5 * remainder).ln(),
                uncertainty: (value + remainder).ln() - value.ln(),
            },
        }
    }

    /// Solves `sum_{n in [lo, hi]} f_n e^{w_n} z^n = 1` for `ln z`. The sum
    /// is strictly increasing in `z`, so bisection brackets are always
    /// valid; Newton steps (the log-sum derivative is the mean loop length)
    /// accelerate the endgame.
    fn solve_unit_window(&self, lo: usize, hi: usize, tol: f64) -> Result<f64> {
        if self.window_moments(0.0, lo, hi, None).is_none() {
            return Err(Error::Domain(format!("no loops in window [{lo}, {hi}]")));
        }
        let eval = |ln_z: f64| -> f64 {
            self.window_moments(ln_z, lo, hi, None)
                .map(|(ls, _, _, _)| ls)
                .unwrap_or(f64::NEG_INFINITY)
        };
        // bracket ln z with eval(a) <= 0 <= eval(b)
        let mut a = -1.0f64;
        while eval(a) > 0.0 {
            a *= 2.0;
            if a < -1e6 {
                return Err(Error::NonConvergence {
                    iters: 0,
                    residual: eval(a),
                });
            }
        }
        let mut b = a;
        while eval(b) < 0.0 {
            b = if b < -0.5 { b / 2.0 } else { b + 1.0 };
            if b > 1e6 {
                return Err(Error::NonConvergence {
                    iters: 0,
                    residual: eval(b),
                });
            }
        }
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let Some((ls, tau, _, _)) = self.window_moments(x, lo, hi, None) else {
                break;
            };
            if ls.abs() <= tol {
                return Ok(x);
            }
            if ls > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let newton = x - ls / tau;
            x = if newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if b - a < f64::EPSILON * (1.0 + x.abs()) {
                return Ok(x);
            }
        }
        Ok(x)
    }

    /// Root of `F_w(z) = 1` over the full support, with the truncation
    /// refined until the tail remainder cannot move the root (or the
    /// safety cap is reached, which only happens arbitrarily close to the
    /// radius).
    fn solve_unit_full(&self, tol: f64) -> Result<f64> {
        let Some(t) = self.tail else {
            return self.solve_unit_window(1, self.max_explicit(), tol);
        };
        let base = self.max_explicit().max(t.from);
        let mut hi = (base + 4096).next_power_of_two();
        loop {
            let ln_z = self.solve_unit_window(1, hi, tol)?;
            let rem = self.tail_remainder(ln_z, hi);
            if rem <= 0.01 * tol || hi >= 1 << 18 {
                return Ok(ln_z);
            }
            hi *= 4;
        }
    }

    /// Gurevich entropy (pressure, when weights are present) of the
    /// renewal shift: `-log z*` where `F_w(z*) = 1` when the root exists in
    /// `(0, R]`, else `-log R` (the non-SPR / transient value).
    pub fn gurevich_entropy(&self, tol: f64) -> Result<f64> {
        match self.is_spr().spr {
            Some(true) | None => {}
            Some(false) => return Ok(-self.radius().ln()),
        }
        let Some(t) = self.tail else {
            // finite support; the root can sit anywhere in (0, infinity)
            let ln_z = self.solve_unit_full(tol)?;
            return Ok(-ln_z);
        };
        // certified F(R) >= 1: the root lies inside (0, R]
        let ln_z = self.solve_unit_full(tol)?;
        Ok(-ln_z.min(t.rho.ln()))
    }

    /// Induced equilibrium (Parry) data; errors on transient or
    /// null-recurrent systems, which admit no such measure.
    pub fn parry_on_loops(&self, tol: f64) -> Result<InducedParry> {
        let verdict = self.is_spr();
        if verdict.spr == Some(false) {
            return Err(Error::NoMeasure(format!(
                "transient loop system: F(R) <= {:.6} < 1",
                verdict.f_at_radius.1
            )));
        }
        let ln_z = self.solve_unit_full(tol)?;
        if let Some(t) = &self.tail {
            let margin = t.rho.ln() - ln_z;
            if margin < 1e-9 && t.alpha <= 2.0 {
                return Err(Error::NoMeasure(
                    "null recurrent: mean first-return time diverges".into(),
                ));
            }
        }
        let (lo, hi) = (1usize, {
            match &self.tail {
                None => self.max_explicit(),
                Some(t) => {
                    // truncation where the remainder is negligible at the root
                    let base = self.max_explicit().max(t.from);
                    let mut hi = (base + 4096).next_power_of_two();
                    while self.tail_remainder(ln_z, hi) > 1e-15 && hi < 1 << 18 {
                        hi *= 2;
                    }
                    hi
                }
            }
        });
        let (ln_s, tau, w_mean, _) = self
            .window_moments(ln_z, lo, hi, None)
            .ok_or_else(|| Error::NoMeasure("empty loop distribution".into()))?;
        debug_assert!(ln_s.abs() < 1e-6);
        let z_star = ln_z.exp();
        let induced_entropy = -w_mean - tau * ln_z;
        let entropy = induced_entropy / tau;
        let mut distribution = Vec::new();
        for n in lo..=hi.min(lo + 9_999) {
            if let Some(l) = self.ln_term(n, ln_z) {
                distribution.push((n, l.exp()));
            }
        }
        Ok(InducedParry {
            z_star,
            distribution,
            mean_loop: tau,
            base_mass: 1.0 / tau,
            induced_entropy,
            entropy,
            pressure: -ln_z,
        })
    }

    /// Escape-family member at window start `n`: the induced equilibrium of
    /// the subsystem of loops with lengths in `[n, n^2]`. On non-SPR tails
    /// the pressures climb to `-log R = P_G` while the base mass decays
    /// like `1/mean_loop <= 1/n`.
    pub fn escape_family(
        &self,
        n: usize,
        psi: &LoopObservable,
        tol: f64,
    ) -> Result<EscapeFamilyRecord> {
        if n < 2 {
            return Err(Error::Domain("escape windows start at n >= 2".into()));
        }
        let hi_limit = match &self.tail {
            Some(_) => n.saturating_mul(n),
            None => self.max_explicit().min(n.saturating_mul(n)),
        };
        if hi_limit < n {
            return Err(Error::Domain(format!("no loops of length >= {n}")));
        }
        let ln_z = self.solve_unit_window(n, hi_limit, tol)?;
        let (ln_s, tau, w_mean, s_mean) = self
            .window_moments(ln_z, n, hi_limit, Some(psi))
            .ok_or_else(|| Error::Domain(format!("no loops in window [{n}, {hi_limit}]")))?;
        debug_assert!(ln_s.abs() < 1e-6);
        let induced_entropy = -w_mean - tau * ln_z;
        Ok(EscapeFamilyRecord {
            n,
            window: (n, hi_limit),
            z_star: ln_z.exp(),
            mean_loop: tau,
            base_mass: 1.0 / tau,
            abramov_entropy: induced_entropy / tau,
            pressure: -ln_z,
            int_psi: s_mean / tau,
        })
    }

    /// Supremum of escape-family pressures over a doubling schedule up to
    /// `n_max`: a certified lower bound for the pressure at infinity.
    pub fn pressure_at_infinity_lower_bound(
        &self,
        n_max: usize,
        tol: f64,
    ) -> Result<(f64, Vec<EscapeFamilyRecord>)> {
        if self.tail.is_none() {
            return Err(Error::Domain(
                "finite-support systems admit no escape to infinity".into(),
            ));
        }
        let mut records = Vec::new();
        let mut n = 4usize;
        while n <= n_max {
            if let Ok(rec) = self.escape_family(n, &LoopObservable::BaseIndicator, tol) {
                records.push(rec);
            }
            n *= 2;
        }
        if records.is_empty() {
            return Err(Error::Domain("no nonempty escape windows".into()));
        }
        let bound = records.iter().map(|r| r.pressure).fold(f64::MIN, f64::max);
        Ok((bound, records))
    }

    /// Removes one loop of length `n` and reports the entropy before and
    /// after. SPR systems must show a strict drop; non-SPR systems with an
    /// untouched radius show none.
    pub fn loop_removal_gap(&self, n: usize, tol: f64) -> Result<(f64, f64)> {
        let count = self.f(n);
        if count < 1.0 {
            return Err(Error::Domain(format!("no loop of length {n} to remove")));
        }
        let before = self.gurevich_entropy(tol)?;
        let mut explicit = self.explicit.clone();
        explicit.insert(n, (count - 1.0) as u64);
        let reduced = LoopSystem::new(explicit, self.tail, self.weights.clone(), false)?;
        let after = reduced.gurevich_entropy(tol)?;
        Ok((before, after))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    const GOLDEN: f64 = 1.618033988749894848_f64;

    /// f_n = 1 for all n (the full 2-shift loop data): tail c=1, rho=1,
    /// alpha=0.
    fn full_shift_loops() -> LoopSystem {
        LoopSystem::new(
            BTreeMap::new(),
            Some(Tail {
                c: 1.0,
                rho: 1.0,
                alpha: 0.0,
                from: 1,
            }),
            BTreeMap::new(),
            true,
        )
        .unwrap()
    }

    fn golden_loops() -> LoopSystem {
        LoopSystem::finite([(1, 1), (2, 1)]).unwrap()
    }

    /// Non-SPR cubic tail: f_n = floor(4^n / (20 n^3)).
    fn cubic_tail() -> LoopSystem {
        LoopSystem::new(
            BTreeMap::new(),
            Some(Tail {
                c: 0.05,
                rho: 0.25,
                alpha: 3.0,
                from: 2,
            }),
            BTreeMap::new(),
            true,
        )
        .unwrap()
    }

    /// SPR tail: f_n = floor(4^n / n^3); F(R) ~ zeta(3) > 1.
    fn spr_tail() -> LoopSystem {
        LoopSystem::new(
            BTreeMap::new(),
            Some(Tail {
                c: 1.0,
                rho: 0.25,
                alpha: 3.0,
                from: 1,
            }),
            BTreeMap::new(),
            true,
        )
        .unwrap()
    }

    #[test]
    fn generating_function_closed_forms() {
        let ls = full_shift_loops();
        // F(1/2) = sum 2^-n = 1
        match ls.generating_function(0.5, 200).unwrap() {
            GfValue::Finite { value, remainder } => {
                assert!((value - 1.0).abs() < 1e-12 + remainder);
                assert!(remainder < 1e-12);
            }
            _ => panic!("finite expected"),
        }
        // z = 0
        match ls.generating_function(0.0, 10).unwrap() {
            GfValue::Finite { value, .. } => assert_eq!(value, 0.0),
            _ => panic!(),
        }
        // golden: F(1/phi) = 1
        let gl = golden_loops();
        match gl.generating_function(1.0 / GOLDEN, 10).unwrap() {
            GfValue::Finite { value, .. } => assert!((value - 1.0).abs() < 1e-14),
            _ => panic!(),
        }
    }

    #[test]
    fn generating_function_divergence() {
        let ls = cubic_tail();
        assert!(matches!(
            ls.generating_function(0.3, 100),
            Err(Error::Divergent { .. })
        ));
        // at the radius with alpha = 0 the series diverges
        assert!(matches!(
            full_shift_loops().generating_function(1.0, 100),
            Ok(GfValue::Infinite)
        ));
    }

    #[test]
    fn spr_verdicts() {
        assert_eq!(golden_loops().is_spr().spr, Some(true));
        assert_eq!(full_shift_loops().is_spr().spr, Some(true));

        let non = cubic_tail();
        let v = non.is_spr();
        assert_eq!(v.spr, Some(false));
        assert!(v.f_at_radius.1 < 0.05, "F(R) ~ 0.01 for c = 1/20");

        let spr = spr_tail();
        let v = spr.is_spr();
        assert_eq!(v.spr, Some(true));
        // zeta(3)-ish after floors; well above 1
        assert!(v.f_at_radius.0 > 1.1 && v.f_at_radius.1 < 1.25, "{v:?}");
    }

    #[test]
    fn entropies() {
        // full-shift loops: z* = 1/2
        let h = full_shift_loops().gurevich_entropy(1e-12).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-10);
        // golden loops: z* = 1/phi
        let h = golden_loops().gurevich_entropy(1e-12).unwrap();
        assert!((h - GOLDEN.ln()).abs() < 1e-10);
        // non-SPR: h = -log R = log 4
        let h = cubic_tail().gurevich_entropy(1e-12).unwrap();
        assert!((h - 4f64.ln()).abs() < 1e-12);
        // truncated full shift: h_20 within 1e-5 of log 2
        let trunc = LoopSystem::finite((1..=20).map(|n| (n, 1))).unwrap();
        let h = trunc.gurevich_entropy(1e-12).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-5);
        assert!(h < 2f64.ln());
    }

    #[test]
    fn discriminant_signs_agree_with_spr() {
        for (ls, expect_spr) in [
            (golden_loops(), true),
            (full_shift_loops(), true),
            (spr_tail(), true),
            (cubic_tail(), false),
        ] {
            let d = ls.discriminant();
            match d {
                Discriminant::Infinite => assert!(expect_spr),
                Discriminant::Finite { value, .. } => {
                    assert_eq!(value > 0.0, expect_spr, "{d:?}");
                }
            }
        }
        // finite support is +infinity
        assert!(matches!(
            golden_loops().discriminant(),
            Discriminant::Infinite
        ));
    }

    #[test]
    fn discriminant_matches_log_f_at_radius() {
        // constructed tail with F(R) ~ e: c = e / zeta(3)
        let c = std::f64::consts::E / 1.2020569031595943;
        let ls = LoopSystem::new(
            BTreeMap::new(),
            Some(Tail {
                c,
                rho: 0.25,
                alpha: 3.0,
                from: 1,
            }),
            BTreeMap::new(),
            true,
        )
        .unwrap();
        // oracle: direct partial sum of floor(c 4^n / n^3) 4^-n; the floor
        // only matters while c 4^n / n^3 is exactly representable
        let mut oracle = 0.0;
        for n in 1..=24u32 {
            let raw = c * 4f64.powi(n as i32) / (n as f64).powi(3);
            oracle += raw.floor() * 0.25f64.powi(n as i32);
        }
        for n in 25..=200_000u64 {
            oracle += c / ((n * n * n) as f64);
        }
        match ls.discriminant() {
            Discriminant::Finite { value, .. } => {
                assert!(
                    (value - oracle.ln()).abs() < 1e-6,
                    "{value} vs {}",
                    oracle.ln()
                );
                assert!((value - 1.0).abs() < 0.05, "Delta ~ 1 by construction");
            }
            _ => panic!("finite discriminant expected"),
        }
    }

    #[test]
    fn parry_on_loops_closed_forms() {
        // f_n = 1 for all n: z* = 1/2, q_n = 2^-n, tau = 2, h = log 2
        let p = full_shift_loops().parry_on_loops(1e-13).unwrap();
        assert!((p.z_star - 0.5).abs() < 1e-11);
        assert!((p.mean_loop - 2.0).abs() < 1e-9);
        assert!((p.base_mass - 0.5).abs() < 1e-9);
        assert!((p.entropy - 2f64.ln()).abs() < 1e-9);

        // golden: q_1 = 1/phi, q_2 = 1/phi^2, h = log phi, mu[a] = phi/sqrt5
        let p = golden_loops().parry_on_loops(1e-13).unwrap();
        assert!((p.z_star - 1.0 / GOLDEN).abs() < 1e-11);
        assert!((p.distribution[0].1 - 1.0 / GOLDEN).abs() < 1e-10);
        assert!((p.distribution[1].1 - 1.0 / GOLDEN.powi(2)).abs() < 1e-10);
        assert!((p.entropy - GOLDEN.ln()).abs() < 1e-10);
        assert!((p.base_mass - GOLDEN / 5f64.sqrt()).abs() < 1e-10);

        // single loop: point mass, entropy 0, base mass 1/p
        let single = LoopSystem::new(
            [(3usize, 1u64)].into_iter().collect(),
            None,
            BTreeMap::new(),
            false,
        )
        .unwrap();
        let p = single.parry_on_loops(1e-13).unwrap();
        assert!((p.z_star - 1.0).abs() < 1e-12);
        assert!(p.entropy.abs() < 1e-12);
        assert!((p.base_mass - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn parry_on_loops_weighted_pressure() {
        // weights shift the root: F_w(z) = e^w z + z^2 = 1
        let w = -0.4;
        let ls = LoopSystem::new(
            [(1, 1), (2, 1)].into_iter().collect(),
            None,
            [(1usize, w)].into_iter().collect(),
            true,
        )
        .unwrap();
        let p = ls.parry_on_loops(1e-13).unwrap();
        // oracle: direct quadratic root
        let ew = w.exp();
        let z = (-ew + (ew * ew + 4.0).sqrt()) / 2.0;
        assert!((p.z_star - z).abs() < 1e-10);
        assert!((p.pressure - (-z.ln())).abs() < 1e-10);
        // Abramov consistency: h + int phi = pressure
        let int_phi = (p.distribution[0].1 * w) / p.mean_loop;
        assert!((p.entropy + int_phi - p.pressure).abs() < 1e-9);
    }

    #[test]
    fn transient_has_no_measure() {
        assert!(matches!(
            cubic_tail().parry_on_loops(1e-12),
            Err(Error::NoMeasure(_))
        ));
    }

    #[test]
    fn boundary_null_recurrent_detected() {
        // F(R) pinned to 1 via an explicit weighted loop; alpha <= 2 makes
        // the mean return time diverge
        let tail = Tail {
            c: 0.3,
            rho: 0.5,
            alpha: 1.5,
            from: 2,
        };
        let bare = LoopSystem::new(BTreeMap::new(), Some(tail), BTreeMap::new(), true).unwrap();
        let (lo, hi) = match bare.f_at_radius() {
            GfValue::Finite { value, remainder } => (value, value + remainder),
            _ => panic!(),
        };
        let missing = 1.0 - 0.5 * (lo + hi);
        assert!(missing > 0.0, "tail alone stays below 1");
        let w1 = (missing / 0.5).ln();
        let ls = LoopSystem::new(
            [(1usize, 1u64)].into_iter().collect(),
            Some(tail),
            [(1usize, w1)].into_iter().collect(),
            true,
        )
        .unwrap();
        let verdict = ls.is_spr();
        assert!(verdict.spr.is_none(), "boundary verdict expected: {verdict:?}");
        assert!(matches!(ls.parry_on_loops(1e-12), Err(Error::NoMeasure(_))));
    }

    #[test]
    fn escape_family_on_non_spr_tail() {
        let ls = cubic_tail();
        let mut last_pressure = f64::MIN;
        for n in [4usize, 8, 16, 32] {
            let rec = ls
                .escape_family(n, &LoopObservable::BaseIndicator, 1e-12)
                .unwrap();
            assert!(rec.base_mass <= 1.0 / n as f64 + 1e-12);
            assert!(rec.pressure > last_pressure, "pressures climb with n");
            assert!((rec.int_psi - rec.base_mass).abs() < 1e-12);
            last_pressure = rec.pressure;
        }
        assert!(4f64.ln() - last_pressure < 0.05, "n = 32 is already close");
    }

    #[test]
    fn escape_family_degenerate_window() {
        // a single loop length with f = 1 gives the zero-entropy orbit
        let single = LoopSystem::new(
            [(5usize, 1u64)].into_iter().collect(),
            None,
            BTreeMap::new(),
            false,
        )
        .unwrap();
        let rec = single
            .escape_family(5, &LoopObservable::BaseIndicator, 1e-12)
            .unwrap();
        assert!(rec.abramov_entropy.abs() < 1e-12);
        assert!((rec.base_mass - 0.2).abs() < 1e-12);
    }

    #[test]
    fn pressure_at_infinity_bounds() {
        // non-SPR: bound approaches log 4
        let (bound, recs) = cubic_tail()
            .pressure_at_infinity_lower_bound(64, 1e-12)
            .unwrap();
        assert!(bound <= 4f64.ln());
        assert!(4f64.ln() - bound < 0.05);
        assert!(recs.len() >= 4);
        // SPR tail: bound strictly below the entropy
        let spr = spr_tail();
        let h = spr.gurevich_entropy(1e-12).unwrap();
        let (bound, _) = spr.pressure_at_infinity_lower_bound(64, 1e-12).unwrap();
        assert!(
            h - bound > 0.05,
            "escape pressures stay below h: {bound} vs {h}"
        );
        // finite support refuses
        assert!(golden_loops().pressure_at_infinity_lower_bound(64, 1e-12).is_err());
    }

    #[test]
    fn loop_removal_gaps() {
        // golden: removing the 1-loop leaves the single 2-loop, entropy 0
        let (before, after) = golden_loops().loop_removal_gap(1, 1e-12).unwrap();
        assert!((before - GOLDEN.ln()).abs() < 1e-10);
        assert!(after.abs() < 1e-10);

        // full-shift loops: removing the 1-loop gives z^2/(1-z) = 1
        let (before, after) = full_shift_loops().loop_removal_gap(1, 1e-12).unwrap();
        assert!((before - 2f64.ln()).abs() < 1e-10);
        assert!((after - GOLDEN.ln()).abs() < 1e-8);

        // non-SPR tail: removing one loop leaves h = log 4 untouched
        let ls = cubic_tail();
        assert!(ls.f(7) >= 1.0);
        let (before, after) = ls.loop_removal_gap(7, 1e-12).unwrap();
        assert!((before - 4f64.ln()).abs() < 1e-12);
        assert!((after - 4f64.ln()).abs() < 1e-12);

        // error path
        assert!(golden_loops().loop_removal_gap(5, 1e-12).is_err());
    }

    #[test]
    fn removal_strictness_iff_spr_battery() {
        let battery: Vec<(LoopSystem, bool, usize)> = vec![
            (golden_loops(), true, 1),
            (full_shift_loops(), true, 2),
            (spr_tail(), true, 1),
            (cubic_tail(), false, 8),
            (LoopSystem::finite((1..=6).map(|n| (n, 1))).unwrap(), true, 3),
        ];
        for (ls, spr, n) in battery {
            let (before, after) = ls.loop_removal_gap(n, 1e-12).unwrap();
            if spr {
                assert!(
                    before - after > 1e-9,
                    "SPR system must drop strictly ({before} -> {after})"
                );
            } else {
                assert!((before - after).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixing_enforcement() {
        let err = LoopSystem::new(
            [(2usize, 1u64), (4, 3)].into_iter().collect(),
            None,
            BTreeMap::new(),
            true,
        );
        assert!(err.is_err());
        let ok = LoopSystem::new(
            [(2usize, 1u64), (4, 3)].into_iter().collect(),
            None,
            BTreeMap::new(),
            false,
        );
        assert!(ok.is_ok());
    }
}
