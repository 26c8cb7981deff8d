//! State-vector reference for the stabilizer engine.

use floquet_core::floquet::make_measurable;
use floquet_core::{ModParams, PauliWord, StabilizerGroup};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type State = Vec<Complex64>;

fn root(dim: u32, k: i64, twice: bool) -> Complex64 {
    let m = if twice { 2 * dim } else { dim } as f64;
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m)
}

/// `w |ψ⟩` with `X|j⟩ = |j+1⟩`, `Z|j⟩ = ω^j |j⟩`; site 0 is the lowest digit.
pub fn apply(w: &PauliWord, psi: &[Complex64]) -> State {
    let d = w.dim() as usize;
    let n = w.len();
    let global = root(w.dim(), w.phase() as i64, true);
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (b, amp) in psi.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let (mut rest, mut target, mut place, mut zsum) = (b, 0usize, 1usize, 0i64);
        for i in 0..n {
            let j = rest % d;
            rest /= d;
            zsum += w.z_at(i) as i64 * j as i64;
            target += ((j + w.x_at(i) as usize) % d) * place;
            place *= d;
        }
        out[target] += amp * global * root(w.dim(), zsum, false);
    }
    out
}

/// `P_k |ψ⟩` for the eigenvalue `ω^k` of a measurable `w`.
pub fn project(w: &PauliWord, k: u32, psi: &[Complex64]) -> State {
    let nn = w.dim();
    let mut acc = vec![Complex64::new(0.0, 0.0); psi.len()];
    let mut cur = psi.to_vec();
    for j in 0..nn {
        let c = root(nn, -(j as i64) * k as i64, false) / nn as f64;
        for (a, v) in acc.iter_mut().zip(&cur) {
            *a += c * v;
        }
        cur = apply(w, &cur);
    }
    acc
}

pub fn norm_sqr(psi: &[Complex64]) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum()
}

/// Projector onto the joint +1 eigenspace of the generators, as a dense matrix.
pub fn group_projector(g: &StabilizerGroup, n: usize, dim: u32) -> Vec<State> {
    let size = (dim as usize).pow(n as u32);
    (0..size)
        .map(|col| {
            let mut v = vec![Complex64::new(0.0, 0.0); size];
            v[col] = Complex64::new(1.0, 0.0);
            for s in g.generators() {
                v = project(s, 0, &v);
            }
            v
        })
        .collect()
}

pub fn random_word<R: Rng>(n: usize, dim: u32, rng: &mut R) -> PauliWord {
    let x = (0..n).map(|_| rng.gen_range(0..dim) as i64).collect();
    let z = (0..n).map(|_| rng.gen_range(0..dim) as i64).collect();
    let phase = rng.gen_range(0..2 * dim) as i64;
    make_measurable(PauliWord::from_parts(dim, x, z, phase).unwrap())
}

pub fn params_for(dim: u32) -> ModParams {
    match dim {
        2 => ModParams::qubit(),
        3 => ModParams::new(3, 2, 2).unwrap(),
        _ => ModParams::new(dim, 1, 1).unwrap(),
    }
}

#[derive(Debug, Default, Clone)]
pub struct OracleReport {
    pub measurements: usize,
    /// Measurements whose admissible outcome set or weights differ.
    pub support_mismatches: usize,
    /// Standardized count of engine outcomes hitting the lowest dense outcome.
    pub z_score: f64,
    pub max_stabilizer_error: f64,
    pub max_projector_error: f64,
    pub impure: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.support_mismatches == 0
            && self.impure == 0
            && self.z_score.abs() < 5.0
            && self.max_stabilizer_error < 1e-9
            && self.max_projector_error < 1e-9
    }
}

/// Runs `sequences` random measurement sequences on `n ≤ 4` qudits of dimension `dim`.
pub fn run_oracle(dim: u32, sequences: usize, steps: usize, seed: u64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = params_for(dim);
    let mut rep = OracleReport::default();
    let (mut sum, mut mean, mut var) = (0.0, 0.0, 0.0);
    for _ in 0..sequences {
        let n = rng.gen_range(1..=4usize);
        let size = (dim as usize).pow(n as u32);
        let zs = (0..n).map(|i| PauliWord::z_on(n, dim, i)).collect();
        let mut g = StabilizerGroup::new(n, params, zs).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); size];
        psi[0] = Complex64::new(1.0, 0.0);
        for _ in 0..steps {
            let w = random_word(n, dim, &mut rng);
            rep.measurements += 1;
            let probs: Vec<f64> = (0..dim).map(|k| norm_sqr(&project(&w, k, &psi))).collect();
            let (base, step, count) = g.outcome_support(&w).unwrap();
            let ok = (0..dim).all(|k| {
                let allowed = k % step == base % step;
                let expect = if allowed { 1.0 / count as f64 } else { 0.0 };
                (probs[k as usize] - expect).abs() < 1e-9
            });
            if !ok {
                rep.support_mismatches += 1;
            }
            let k = g.measure(&w, &mut rng).unwrap();
            // Frequency of the lowest outcome with nonzero dense weight.
            let low = probs.iter().position(|&q| q > 1e-9).unwrap();
            sum += (k as usize == low) as u8 as f64;
            mean += probs[low];
            var += probs[low] * (1.0 - probs[low]);
            psi = project(&w, k, &psi);
            let norm = norm_sqr(&psi).sqrt();
            if norm < 1e-6 {
                rep.support_mismatches += 1;
                break;
            }
            psi.iter_mut().for_each(|a| *a /= norm);
            if g.logical_count().as_integer() != Some(0) {
                rep.impure += 1;
            }
            for s in g.generators() {
                let e: f64 = apply(s, &psi).iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                rep.max_stabilizer_error = rep.max_stabilizer_error.max(e);
            }
            if n <= 2 {
                let proj = group_projector(&g, n, dim);
                for (c, col) in proj.iter().enumerate() {
                    for (r, v) in col.iter().enumerate() {
                        let e = (v - psi[r] * psi[c].conj()).norm();
                        rep.max_projector_error = rep.max_projector_error.max(e);
                    }
                }
            }
        }
    }
    rep.z_score = if var > 0.0 { (sum - mean) / var.sqrt() } else { 0.0 };
    rep
}
