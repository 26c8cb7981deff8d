//! Stabilizer groups over Z_N kept in Howell form on the interleaved
//! `(x_0, z_0, x_1, z_1, …)` exponent matrix.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{divisors, ext_gcd, factorize, gcd, normalizing_unit};
use crate::pauli::{ModParams, PauliWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    InGroup,
    /// `w = γ^offset · h` for some `h` in the group.
    ProportionalOnly(u32),
    NotInGroup,
}

impl Membership {
    pub fn phase_offset(&self) -> Option<u32> {
        match self {
            Membership::InGroup => Some(0),
            Membership::ProportionalOnly(k) => Some(*k),
            Membership::NotInGroup => None,
        }
    }

    pub fn up_to_phase(&self) -> bool {
        !matches!(self, Membership::NotInGroup)
    }
}

/// Expectation value of a Pauli word in the stabilizer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expectation {
    Zero,
    /// The value `γ^k`.
    Gamma(u32),
}

/// `log_N` of the codespace dimension, kept as the exact group order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalCount {
    pub n: usize,
    pub dim: u32,
    /// Orders `N / g_i` of the Howell pivots; the group order is their product.
    pub pivot_orders: Vec<u32>,
}

impl LogicalCount {
    /// `(numerator, denominator)` when `log_N |G|` is rational.
    pub fn as_rational(&self) -> Option<(i64, i64)> {
        let nf = factorize(self.dim as u64);
        let mut exps = vec![0u64; nf.len()];
        for &o in &self.pivot_orders {
            let mut o = o as u64;
            for (k, &(p, _)) in nf.iter().enumerate() {
                while o.is_multiple_of(p) {
                    o /= p;
                    exps[k] += 1;
                }
            }
        }
        // |G| = N^(a/b) iff e_p(|G|) / e_p(N) is the same for every prime p of N.
        let (a, b) = (exps[0], nf[0].1 as u64);
        for (k, &(_, e)) in nf.iter().enumerate() {
            if exps[k] * b != a * e as u64 {
                return None;
            }
        }
        let num = self.n as i64 * b as i64 - a as i64;
        let den = b as i64;
        let g = gcd(num.unsigned_abs(), den as u64).max(1) as i64;
        Some((num / g, den / g))
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_rational().and_then(|(a, b)| (b == 1).then_some(a))
    }

    pub fn as_f64(&self) -> f64 {
        let ln_n = (self.dim as f64).ln();
        self.n as f64 - self.pivot_orders.iter().map(|&o| (o as f64).ln() / ln_n).sum::<f64>()
    }
}

#[inline]
fn entry(w: &PauliWord, col: usize) -> u32 {
    if col.is_multiple_of(2) {
        w.x_at(col / 2)
    } else {
        w.z_at(col / 2)
    }
}

fn first_col(w: &PauliWord) -> Option<usize> {
    let (x, z) = (w.x_exps(), w.z_exps());
    (0..x.len()).find(|&i| x[i] != 0 || z[i] != 0).map(|i| if x[i] != 0 { 2 * i } else { 2 * i + 1 })
}

fn power_product(a: &PauliWord, s: i64, b: &PauliWord, t: i64) -> PauliWord {
    let mut out = a.pow(s);
    out.mul_pow_assign(b, t);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Canonical {
    rows: Vec<PauliWord>,
    /// `(column, pivot value)` per row; pivot values divide N.
    pivots: Vec<(usize, u32)>,
}

fn push_nontrivial(pool: &mut Vec<PauliWord>, w: PauliWord, strict: bool) -> Result<()> {
    if w.is_scalar() {
        if strict && w.phase() != 0 {
            return Err(Error::Inconsistent(w.phase()));
        }
        return Ok(());
    }
    pool.push(w);
    Ok(())
}

fn howell(rows: Vec<PauliWord>, n: usize, dim: u32) -> Result<Canonical> {
    howell_impl(rows, n, dim, true)
}

/// With `strict == false`, scalar words are dropped whatever their phase; the
/// phases of the result are then meaningless.
fn howell_impl(rows: Vec<PauliWord>, n: usize, dim: u32, strict: bool) -> Result<Canonical> {
    let nn = dim as u64;
    let mut pool = Vec::with_capacity(rows.len());
    for r in rows {
        push_nontrivial(&mut pool, r, strict)?;
    }
    let mut done: Vec<PauliWord> = Vec::new();
    let mut pivots = Vec::new();
    for col in 0..2 * n {
        if pool.is_empty() {
            break;
        }
        let (mut active, mut rest): (Vec<_>, Vec<_>) = pool.into_iter().partition(|r| entry(r, col) != 0);
        let Some(mut piv) = active.pop() else {
            pool = rest;
            continue;
        };
        let u = normalizing_unit(entry(&piv, col) as u64, nn);
        if u != 1 {
            piv = piv.pow(u as i64);
        }
        for r in active {
            let (ep, er) = (entry(&piv, col) as i64, entry(&r, col) as i64);
            if er % ep == 0 {
                let mut r = r;
                r.mul_pow_assign(&piv, -(er / ep));
                push_nontrivial(&mut rest, r, strict)?;
            } else {
                let (g, s, t) = ext_gcd(ep, er);
                let newp = power_product(&piv, s, &r, t);
                let newr = power_product(&piv, -(er / g), &r, ep / g);
                push_nontrivial(&mut rest, newr, strict)?;
                piv = newp;
                let u = normalizing_unit(entry(&piv, col) as u64, nn);
                if u != 1 {
                    piv = piv.pow(u as i64);
                }
            }
        }
        let g = entry(&piv, col);
        debug_assert_eq!(nn % g as u64, 0);
        push_nontrivial(&mut rest, piv.pow((nn / g as u64) as i64), strict)?;
        for d in done.iter_mut() {
            let e = entry(d, col);
            if e >= g {
                d.mul_pow_assign(&piv, -((e / g) as i64));
            }
        }
        done.push(piv);
        pivots.push((col, g));
        pool = rest;
    }
    for r in pool {
        push_nontrivial(&mut Vec::new(), r, strict)?;
    }
    Ok(Canonical { rows: done, pivots })
}

/// A stabilizer group, always held in canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerGroup {
    n: usize,
    params: ModParams,
    canon: Canonical,
}

impl StabilizerGroup {
    pub fn empty(n: usize, params: ModParams) -> Self {
        StabilizerGroup { n, params, canon: Canonical { rows: Vec::new(), pivots: Vec::new() } }
    }

    /// Canonicalizes arbitrary generators after checking that they commute.
    pub fn new(n: usize, params: ModParams, gens: Vec<PauliWord>) -> Result<Self> {
        for g in &gens {
            if g.len() != n || g.dim() != params.n {
                return Err(Error::Dimension(format!("generator {g} does not live on {n} qudits of dimension {}", params.n)));
            }
        }
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                if !gens[i].commutes_with(&gens[j]) {
                    return Err(Error::Contradiction(gens[i].to_text(), gens[j].to_text()));
                }
            }
        }
        Self::from_commuting(n, params, gens)
    }

    /// Like [`new`](Self::new) but trusts the caller on commutation.
    pub fn from_commuting(n: usize, params: ModParams, gens: Vec<PauliWord>) -> Result<Self> {
        let canon = howell(gens, n, params.n)?;
        Ok(StabilizerGroup { n, params, canon })
    }

    /// Group generated by `gens` with phases ignored (for shape comparisons).
    pub fn phaseless(n: usize, params: ModParams, gens: Vec<PauliWord>) -> Result<Self> {
        for g in &gens {
            if g.len() != n || g.dim() != params.n {
                return Err(Error::Dimension(format!("generator {g} does not live on {n} qudits")));
            }
        }
        for (i, a) in gens.iter().enumerate() {
            if let Some(b) = gens[i + 1..].iter().find(|b| !a.commutes_with(b)) {
                return Err(Error::Contradiction(a.to_text(), b.to_text()));
            }
        }
        let gens = gens.into_iter().map(|g| g.phaseless()).collect();
        Ok(StabilizerGroup { n, params, canon: howell_impl(gens, n, params.n, false)? })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> ModParams {
        self.params
    }

    pub fn generators(&self) -> &[PauliWord] {
        &self.canon.rows
    }

    pub fn pivots(&self) -> &[(usize, u32)] {
        &self.canon.pivots
    }

    pub fn len(&self) -> usize {
        self.canon.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canon.rows.is_empty()
    }

    /// Sum over pivots of `log_N (N / g_i)`.
    pub fn rank(&self) -> f64 {
        self.n as f64 - self.logical_count().as_f64()
    }

    fn reduce(&self, w: &PauliWord) -> PauliWord {
        let mut r = w.clone();
        for (row, &(col, g)) in self.canon.rows.iter().zip(&self.canon.pivots) {
            let e = entry(&r, col);
            if e == 0 {
                continue;
            }
            if !e.is_multiple_of(g) {
                return r;
            }
            r.mul_pow_assign(row, -((e / g) as i64));
        }
        r
    }

    pub fn contains(&self, w: &PauliWord) -> Result<Membership> {
        self.check_word(w)?;
        Ok(self.contains_unchecked(w))
    }

    pub(crate) fn contains_unchecked(&self, w: &PauliWord) -> Membership {
        let r = self.reduce(w);
        if !r.is_scalar() {
            Membership::NotInGroup
        } else if r.phase() == 0 {
            Membership::InGroup
        } else {
            Membership::ProportionalOnly(r.phase())
        }
    }

    fn check_word(&self, w: &PauliWord) -> Result<()> {
        if w.len() != self.n || w.dim() != self.params.n {
            return Err(Error::Dimension(format!(
                "word on {} qudits (N={}) vs group on {} (N={})",
                w.len(),
                w.dim(),
                self.n,
                self.params.n
            )));
        }
        Ok(())
    }

    pub fn expectation(&self, w: &PauliWord) -> Expectation {
        if self.canon.rows.iter().any(|g| !g.commutes_with(w)) {
            return Expectation::Zero;
        }
        match self.contains_unchecked(w).phase_offset() {
            Some(k) => Expectation::Gamma(k),
            None => Expectation::Zero,
        }
    }

    /// The admissible outcomes of measuring `w`: `(base, step, count)` so the
    /// outcome is `base + step·u` for `u` uniform in `[0, count)`.
    pub fn outcome_support(&self, w: &PauliWord) -> Result<(u32, u32, u32)> {
        self.check_word(w)?;
        let nn = self.params.n as u64;
        if !w.pow(nn as i64).is_identity() {
            return Err(Error::NotMeasurable(w.to_text()));
        }
        for t in divisors(nn) {
            let red = self.reduce(&w.pow(t as i64));
            if !red.is_scalar() {
                continue;
            }
            let delta = red.phase() as u64;
            // w^t = γ^δ h, and w^t has eigenvalues ω^{t k}.
            if !delta.is_multiple_of(2) || !(delta / 2).is_multiple_of(t) {
                return Err(Error::NotMeasurable(w.to_text()));
            }
            let step = nn / t;
            let base = (delta / 2 / t) % step;
            return Ok((base as u32, step as u32, t as u32));
        }
        unreachable!("w^N is the identity")
    }

    /// Measures `w`, returning `k` for eigenvalue `ω^k`.
    pub fn measure<R: Rng + ?Sized>(&mut self, w: &PauliWord, rng: &mut R) -> Result<u32> {
        let (base, step, count) = self.outcome_support(w)?;
        let k = if count == 1 { base } else { base + step * rng.gen_range(0..count) };
        self.update_with_outcome(w, k)?;
        Ok(k)
    }

    /// Measures `w` with a caller-forced outcome; fails if `k` is impossible.
    pub fn measure_forced(&mut self, w: &PauliWord, k: u32) -> Result<()> {
        let (base, step, _) = self.outcome_support(w)?;
        if k % step != base % step {
            return Err(Error::NotMeasurable(format!("{} cannot yield outcome {k}", w.to_text())));
        }
        self.update_with_outcome(w, k)
    }

    fn update_with_outcome(&mut self, w: &PauliWord, k: u32) -> Result<()> {
        let nn = self.params.n as i64;
        let mut keep = Vec::with_capacity(self.len() + 1);
        let mut piv: Option<(PauliWord, i64)> = None;
        for g in self.canon.rows.drain(..) {
            let c = g.comm_unchecked(w) as i64;
            if c == 0 {
                keep.push(g);
                continue;
            }
            piv = Some(match piv {
                None => (g, c),
                Some((p, cp)) => {
                    let (d, s, t) = ext_gcd(cp, c);
                    let zero = power_product(&p, -(c / d), &g, cp / d);
                    keep.push(zero);
                    (power_product(&p, s, &g, t), d.rem_euclid(nn))
                }
            });
        }
        if let Some((p, c)) = piv {
            let ord = nn / gcd(nn as u64, c as u64) as i64;
            keep.push(p.pow(ord));
        }
        let mut m = w.clone();
        m.add_phase(-2 * k as i64);
        keep.push(m);
        self.canon = howell(keep, self.n, self.params.n)?;
        Ok(())
    }

    /// Adds generators that commute with the group.
    pub fn extend(&mut self, words: impl IntoIterator<Item = PauliWord>) -> Result<()> {
        let mut rows = self.canon.rows.clone();
        for w in words {
            self.check_word(&w)?;
            if let Some(g) = rows.iter().find(|g| !g.commutes_with(&w)) {
                return Err(Error::Contradiction(g.to_text(), w.to_text()));
            }
            rows.push(w);
        }
        self.canon = howell(rows, self.n, self.params.n)?;
        Ok(())
    }

    pub fn logical_count(&self) -> LogicalCount {
        let nn = self.params.n;
        LogicalCount { n: self.n, dim: nn, pivot_orders: self.canon.pivots.iter().map(|&(_, g)| nn / g).collect() }
    }

    pub fn group_equal(&self, other: &Self) -> bool {
        self.n == other.n && self.params.n == other.params.n && self.canon == other.canon
    }

    /// Equality of the groups once measurement signs are forgotten.
    pub fn group_equal_phaseless(&self, other: &Self) -> bool {
        self.n == other.n
            && self.params.n == other.params.n
            && self.canon.pivots == other.canon.pivots
            && self.canon.rows.iter().zip(&other.canon.rows).all(|(a, b)| a.x_exps() == b.x_exps() && a.z_exps() == b.z_exps())
    }

    /// Phaseless membership of every generator of `sub`.
    pub fn contains_group_phaseless(&self, sub: &Self) -> bool {
        sub.generators().iter().all(|g| self.contains_unchecked(g).up_to_phase())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.canon.rows.iter().map(|g| serde_json::Value::String(g.to_text())).collect())
    }

    /// Leading column of each generator, for debugging echelon structure.
    pub fn leading_columns(&self) -> Vec<Option<usize>> {
        self.canon.rows.iter().map(first_col).collect()
    }
}
