//! Small integer helpers for arithmetic in Z_N.

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Returns `(g, s, t)` with `s·a + t·b = g = gcd(a, b)`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

pub fn mod_inv(a: u64, n: u64) -> Option<u64> {
    let (g, s, _) = ext_gcd(a as i64, n as i64);
    (g == 1).then(|| s.rem_euclid(n as i64) as u64)
}

/// A unit `u` of Z_N with `u·a ≡ gcd(a, N) (mod N)`.
pub fn normalizing_unit(a: u64, n: u64) -> u64 {
    let g = gcd(a, n);
    if g == n {
        return 1;
    }
    let (a1, n1) = (a / g, n / g);
    let u0 = mod_inv(a1 % n1, n1).unwrap_or(1);
    (0..g).map(|k| u0 + k * n1).find(|&u| gcd(u, n) == 1).expect("a unit lift always exists") % n
}

pub fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Prime factorization as `(prime, exponent)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Howell form of the row module spanned by `rows` over Z_N. Zero rows are dropped;
/// rows are in echelon order with pivot entries dividing N.
pub fn howell_rows(rows: Vec<Vec<u64>>, n: u64) -> Vec<Vec<u64>> {
    let width = rows.first().map_or(0, |r| r.len());
    let reduce = |r: &mut Vec<u64>| r.iter_mut().for_each(|x| *x %= n);
    let nonzero = |r: &Vec<u64>| r.iter().any(|&x| x != 0);
    let mut pool: Vec<Vec<u64>> = rows
        .into_iter()
        .map(|mut r| {
            reduce(&mut r);
            r
        })
        .filter(nonzero)
        .collect();
    let mut done: Vec<(usize, Vec<u64>)> = Vec::new();
    let axpy = |a: &[u64], s: i64, b: &[u64], t: i64| -> Vec<u64> {
        let nn = n as i64;
        a.iter().zip(b).map(|(&x, &y)| ((s.rem_euclid(nn) * x as i64 + t.rem_euclid(nn) * y as i64) % nn) as u64).collect()
    };
    for col in 0..width {
        if pool.is_empty() {
            break;
        }
        let (mut active, mut rest): (Vec<_>, Vec<_>) = pool.into_iter().partition(|r| r[col] != 0);
        let Some(mut piv) = active.pop() else {
            pool = rest;
            continue;
        };
        for r in active {
            let (ep, er) = (piv[col] as i64, r[col] as i64);
            let (g, s, t) = ext_gcd(ep, er);
            let newp = axpy(&piv, s, &r, t);
            let newr = axpy(&piv, -(er / g), &r, ep / g);
            if nonzero(&newr) {
                rest.push(newr);
            }
            piv = newp;
        }
        let u = normalizing_unit(piv[col], n);
        piv.iter_mut().for_each(|x| *x = *x * u % n);
        let g = piv[col];
        let ann: Vec<u64> = piv.iter().map(|&x| x * (n / g) % n).collect();
        if nonzero(&ann) {
            rest.push(ann);
        }
        for (_, d) in done.iter_mut() {
            let k = d[col] / g;
            if k > 0 {
                *d = axpy(d, 1, &piv, -(k as i64));
            }
        }
        done.push((col, piv));
        pool = rest;
    }
    done.into_iter().map(|(_, r)| r).collect()
}

/// Generators of the left kernel `{c : c·M = 0}` of an `m × k` matrix over Z_N.
pub fn left_kernel(mat: &[Vec<u64>], n: u64) -> Vec<Vec<u64>> {
    let m = mat.len();
    let k = mat.first().map_or(0, |r| r.len());
    let aug: Vec<Vec<u64>> = (0..m)
        .map(|i| {
            let mut row = mat[i].iter().map(|x| x % n).collect::<Vec<_>>();
            row.extend((0..m).map(|j| u64::from(i == j)));
            row
        })
        .collect();
    howell_rows(aug, n).into_iter().filter(|r| r[..k].iter().all(|&x| x == 0)).map(|r| r[k..].to_vec()).collect()
}

/// Some `x` with `Σ_i x_i·rows[i] ≡ target (mod N)`, if one exists.
pub fn solve_combination(rows: &[Vec<u64>], target: &[u64], n: u64) -> Option<Vec<u64>> {
    if target.iter().all(|&t| t % n == 0) {
        return Some(vec![0; rows.len()]);
    }
    let mut mat: Vec<Vec<u64>> = rows.to_vec();
    mat.push(target.to_vec());
    let kernel = left_kernel(&mat, n);
    let last = rows.len();
    // Combine kernel vectors until the coefficient of `target` is a unit.
    let mut acc = vec![0u64; last + 1];
    for v in kernel {
        let (a, b) = (acc[last] as i64, v[last] as i64);
        if b % n as i64 == 0 {
            continue;
        }
        let (_, s, t) = ext_gcd(a, b);
        let nn = n as i64;
        let cand: Vec<u64> =
            acc.iter().zip(&v).map(|(&x, &y)| ((s.rem_euclid(nn) * x as i64 + t.rem_euclid(nn) * y as i64) % nn) as u64).collect();
        if gcd(cand[last], n) < gcd(acc[last], n) || acc[last] == 0 {
            acc = cand;
        }
        if gcd(acc[last], n) == 1 {
            break;
        }
    }
    if gcd(acc[last], n) != 1 {
        return None;
    }
    // c·rows + c_last·target = 0  ⇒  x = -c / c_last.
    let inv = mod_inv(acc[last], n)?;
    Some(acc[..last].iter().map(|&c| (n - c % n) % n * inv % n).collect())
}
