//! Generalized Pauli operators over Z_N qudits.
//!
//! A word stores `γ^phase · ∏_i X_i^{x_i} Z_i^{z_i}` with `γ = exp(iπ/N)`, so
//! `ω = γ²` and `Z X = ω X Z`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{gcd, mod_inv};

/// Qudit dimension plus the automorphism exponents `p`, `q` with `pq = 1 mod N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModParams {
    pub n: u32,
    pub p: u32,
    pub q: u32,
}

impl ModParams {
    pub fn new(n: u32, p: u32, q: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Params(format!("N must be at least 2, got {n}")));
        }
        let (p, q) = (p % n, q % n);
        if (p as u64 * q as u64) % n as u64 != 1 {
            return Err(Error::Params(format!("p*q must be 1 mod N (p={p}, q={q}, N={n})")));
        }
        if n == 2 && (p != 1 || q != 1) {
            return Err(Error::Params("N=2 requires p=q=1".into()));
        }
        Ok(ModParams { n, p, q })
    }

    pub fn qubit() -> Self {
        ModParams { n: 2, p: 1, q: 1 }
    }

    /// `p` is taken as the inverse of `q`.
    pub fn from_q(n: u32, q: u32) -> Result<Self> {
        let p = mod_inv(q as u64 % n as u64, n as u64).ok_or_else(|| Error::Params(format!("q={q} is not a unit mod {n}")))?;
        Self::new(n, p as u32, q)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliWord {
    dim: u32,
    x: Vec<u32>,
    z: Vec<u32>,
    phase: u32,
}

impl PauliWord {
    pub fn identity(n: usize, dim: u32) -> Self {
        assert!(dim >= 2, "qudit dimension must be at least 2");
        PauliWord { dim, x: vec![0; n], z: vec![0; n], phase: 0 }
    }

    /// Builds a word from raw exponents; everything is reduced on entry.
    pub fn from_parts(dim: u32, x: Vec<i64>, z: Vec<i64>, phase: i64) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::Dimension(format!("x has {} entries, z has {}", x.len(), z.len())));
        }
        let d = dim as i64;
        Ok(PauliWord {
            dim,
            x: x.iter().map(|&e| e.rem_euclid(d) as u32).collect(),
            z: z.iter().map(|&e| e.rem_euclid(d) as u32).collect(),
            phase: phase.rem_euclid(2 * d) as u32,
        })
    }

    /// `X_i^xe Z_i^ze` on an otherwise trivial register.
    pub fn single(n: usize, dim: u32, i: usize, xe: i64, ze: i64) -> Self {
        let mut w = Self::identity(n, dim);
        w.set_site(i, xe, ze);
        w
    }

    pub fn x_on(n: usize, dim: u32, i: usize) -> Self {
        Self::single(n, dim, i, 1, 0)
    }

    pub fn z_on(n: usize, dim: u32, i: usize) -> Self {
        Self::single(n, dim, i, 0, 1)
    }

    /// Qubit `Y = γ X Z` on site `i`.
    pub fn y_on(n: usize, i: usize) -> Self {
        let mut w = Self::single(n, 2, i, 1, 1);
        w.phase = 1;
        w
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn phase(&self) -> u32 {
        self.phase
    }

    pub fn x_exps(&self) -> &[u32] {
        &self.x
    }

    pub fn z_exps(&self) -> &[u32] {
        &self.z
    }

    pub fn x_at(&self, i: usize) -> u32 {
        self.x[i]
    }

    pub fn z_at(&self, i: usize) -> u32 {
        self.z[i]
    }

    pub fn set_site(&mut self, i: usize, xe: i64, ze: i64) {
        let d = self.dim as i64;
        self.x[i] = xe.rem_euclid(d) as u32;
        self.z[i] = ze.rem_euclid(d) as u32;
    }

    pub fn with_phase(mut self, phase: i64) -> Self {
        self.phase = phase.rem_euclid(2 * self.dim as i64) as u32;
        self
    }

    /// Multiplies by `γ^k`.
    pub fn add_phase(&mut self, k: i64) {
        let m = 2 * self.dim as i64;
        self.phase = (self.phase as i64 + k).rem_euclid(m) as u32;
    }

    /// Same operator with the phase dropped.
    pub fn phaseless(&self) -> Self {
        PauliWord { phase: 0, ..self.clone() }
    }

    pub fn is_identity(&self) -> bool {
        self.phase == 0 && self.is_scalar()
    }

    /// True when all x/z exponents vanish (the word is `γ^k·I`).
    pub fn is_scalar(&self) -> bool {
        self.x.iter().all(|&e| e == 0) && self.z.iter().all(|&e| e == 0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.x[i] != 0 || self.z[i] != 0).collect()
    }

    pub fn weight(&self) -> usize {
        (0..self.len()).filter(|&i| self.x[i] != 0 || self.z[i] != 0).count()
    }

    /// Restriction to `sites`, phase dropped.
    pub fn restrict(&self, sites: &[usize]) -> Self {
        let mut w = Self::identity(self.len(), self.dim);
        for &i in sites {
            w.x[i] = self.x[i];
            w.z[i] = self.z[i];
        }
        w
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!("modulus {} vs {}", self.dim, other.dim)));
        }
        if self.len() != other.len() {
            return Err(Error::Dimension(format!("{} qudits vs {}", self.len(), other.len())));
        }
        Ok(())
    }

    /// Normal-ordered product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.mul_assign_unchecked(other);
        Ok(out)
    }

    /// `self ← self · other` without dimension checks.
    pub fn mul_assign_unchecked(&mut self, other: &Self) {
        let d = self.dim as u64;
        let mut cross = 0u64;
        for i in 0..self.x.len() {
            cross += self.z[i] as u64 * other.x[i] as u64;
            self.x[i] = ((self.x[i] + other.x[i]) as u64 % d) as u32;
            self.z[i] = ((self.z[i] + other.z[i]) as u64 % d) as u32;
        }
        let m = 2 * d;
        self.phase = ((self.phase as u64 + other.phase as u64 + 2 * (cross % d)) % m) as u32;
    }

    /// `self ← self · other^k` for any integer `k`.
    pub fn mul_pow_assign(&mut self, other: &Self, k: i64) {
        if k == 0 {
            return;
        }
        let p = other.pow(k);
        self.mul_assign_unchecked(&p);
    }

    /// `c` with `self · other = ω^c · other · self`.
    pub fn comm_exponent(&self, other: &Self) -> Result<u32> {
        self.check_compatible(other)?;
        Ok(self.comm_unchecked(other))
    }

    pub fn comm_unchecked(&self, other: &Self) -> u32 {
        let d = self.dim as u64;
        let mut acc = 0u64;
        for i in 0..self.x.len() {
            acc += self.z[i] as u64 * other.x[i] as u64;
            acc += (d - self.x[i] as u64) * other.z[i] as u64 % d;
        }
        (acc % d) as u32
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        self.comm_unchecked(other) == 0
    }

    fn xz_dot(&self) -> u64 {
        let d = self.dim as u64;
        self.x.iter().zip(&self.z).map(|(&a, &b)| a as u64 * b as u64 % d).sum::<u64>() % d
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim as u64;
        let m = 2 * d;
        let phase = ((m - self.phase as u64) + 2 * self.xz_dot()) % m;
        PauliWord {
            dim: self.dim,
            x: self.x.iter().map(|&e| ((d - e as u64) % d) as u32).collect(),
            z: self.z.iter().map(|&e| ((d - e as u64) % d) as u32).collect(),
            phase: phase as u32,
        }
    }

    /// `self^k`; negative powers go through the adjoint.
    pub fn pow(&self, k: i64) -> Self {
        if k < 0 {
            return self.adjoint().pow(-k);
        }
        let d = self.dim as u64;
        let m = 2 * d;
        // (X^x Z^z)^k = ω^{xz·k(k−1)/2} X^{kx} Z^{kz}; period 2N in k.
        let k = k as u64 % m;
        let tri = (k * (k.saturating_sub(1)) / 2) % d;
        let phase = (k * self.phase as u64 + 2 * (self.xz_dot() * tri % d)) % m;
        PauliWord {
            dim: self.dim,
            x: self.x.iter().map(|&e| (e as u64 * k % d) as u32).collect(),
            z: self.z.iter().map(|&e| (e as u64 * k % d) as u32).collect(),
            phase: phase as u32,
        }
    }

    /// Smallest `k ≥ 1` with `self^k` scalar (the order of the x|z vector).
    pub fn vector_order(&self) -> u32 {
        let g = self.x.iter().chain(&self.z).fold(self.dim as u64, |acc, &e| gcd(acc, e as u64));
        (self.dim as u64 / g) as u32
    }

    /// Compact text form, e.g. `w^3 X2^1 Z2^2 X5^1`.
    pub fn to_text(&self) -> String {
        let mut s = format!("w^{}", self.phase);
        for i in 0..self.len() {
            if self.x[i] != 0 {
                s.push_str(&format!(" X{}^{}", i, self.x[i]));
            }
            if self.z[i] != 0 {
                s.push_str(&format!(" Z{}^{}", i, self.z[i]));
            }
        }
        s
    }

    /// Inverse of [`to_text`](Self::to_text). Factors must appear in normal order.
    pub fn parse(text: &str, n: usize, dim: u32) -> Result<Self> {
        let bad = |reason: &str| Error::Parse { text: text.to_string(), reason: reason.to_string() };
        let mut w = Self::identity(n, dim);
        let mut last: Option<(usize, u8)> = None;
        for (pos, tok) in text.split_whitespace().enumerate() {
            let (head, exp) = tok.split_once('^').ok_or_else(|| bad("missing '^'"))?;
            let e: u64 = exp.parse().map_err(|_| bad("bad exponent"))?;
            if head == "w" {
                if pos != 0 {
                    return Err(bad("phase must come first"));
                }
                if e >= 2 * dim as u64 {
                    return Err(bad("phase out of range"));
                }
                w.phase = e as u32;
                continue;
            }
            let kind = head.as_bytes().first().copied().ok_or_else(|| bad("empty factor"))?;
            let idx: usize = head[1..].parse().map_err(|_| bad("bad qudit index"))?;
            if idx >= n {
                return Err(bad("qudit index out of range"));
            }
            if e == 0 || e >= dim as u64 {
                return Err(bad("exponent out of range"));
            }
            let rank = match kind {
                b'X' => 0u8,
                b'Z' => 1u8,
                _ => return Err(bad("factor must be X or Z")),
            };
            if let Some(prev) = last {
                if (idx, rank) <= prev {
                    return Err(bad("factors not in normal order"));
                }
            }
            last = Some((idx, rank));
            if rank == 0 {
                w.x[idx] = e as u32;
            } else {
                w.z[idx] = e as u32;
            }
        }
        Ok(w)
    }
}

impl fmt::Debug for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[N={} {}]", self.dim, self.to_text())
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
