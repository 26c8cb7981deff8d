//! Linear solves over Z_N phrased in terms of Pauli words.

use crate::modular::solve_combination;
use crate::pauli::PauliWord;

/// Some product `M = ∏ candidates[i]^{a_i}` such that `base · M` commutes with
/// every word in `constraints`, returned as the exponent list.
pub fn commuting_completion(base: &PauliWord, candidates: &[PauliWord], constraints: &[PauliWord]) -> Option<Vec<u64>> {
    let n = base.dim() as u64;
    let rows: Vec<Vec<u64>> = candidates.iter().map(|c| constraints.iter().map(|k| c.comm_unchecked(k) as u64).collect()).collect();
    let target: Vec<u64> = constraints.iter().map(|k| (n - base.comm_unchecked(k) as u64) % n).collect();
    solve_combination(&rows, &target, n)
}

/// `∏ words[i]^{exps[i]}` in list order.
pub fn product(template: &PauliWord, words: &[PauliWord], exps: &[u64]) -> PauliWord {
    let mut out = PauliWord::identity(template.len(), template.dim());
    for (w, &a) in words.iter().zip(exps) {
        if a != 0 {
            out.mul_pow_assign(w, a as i64);
        }
    }
    out
}

/// An operator supported on `sites` whose commutation exponent with each
/// `constraints[j]` equals `targets[j]` (`O·g = ω^{t} g·O`).
pub fn operator_with_syndrome(n_qudits: usize, dim: u32, sites: &[usize], constraints: &[PauliWord], targets: &[u64]) -> Option<PauliWord> {
    let mut basis = Vec::with_capacity(2 * sites.len());
    for &s in sites {
        basis.push(PauliWord::single(n_qudits, dim, s, 1, 0));
        basis.push(PauliWord::single(n_qudits, dim, s, 0, 1));
    }
    let rows: Vec<Vec<u64>> = basis.iter().map(|b| constraints.iter().map(|g| b.comm_unchecked(g) as u64).collect()).collect();
    let exps = solve_combination(&rows, targets, dim as u64)?;
    Some(product(&PauliWord::identity(n_qudits, dim), &basis, &exps))
}
