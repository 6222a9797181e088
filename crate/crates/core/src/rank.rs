//! Exact rank over the rationals.
//!
//! [`bareiss_rank`] is fraction-free elimination, generic over the integer
//! type. [`rank_rational`] is the fast path for larger integer matrices: rank
//! modulo several word-sized primes, certified against the Hadamard bound so
//! the result equals the rank over Q.

use num_integer::Integer;
use num_traits::Signed;

/// Rank of an integer matrix by Bareiss elimination. Intermediate values are
/// minors of the input, so `T` must hold `max |minor|`; use `BigInt` when unsure.
pub fn bareiss_rank<T: Integer + Signed + Clone>(mut a: Vec<Vec<T>>) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut prev = T::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, piv);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let v =
                    a[rank][col].clone() * a[r][c].clone() - a[r][col].clone() * a[rank][c].clone();
                a[r][c] = v.div_floor(&prev);
            }
            a[r][col] = T::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

fn is_prime_u32(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    // Miller-Rabin with bases 2, 7, 61 is exact below 4.7e9
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'bases: for a in [2u64, 7, 61] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 || a % n == 0 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Largest primes below 2^31, descending.
fn primes_31() -> impl Iterator<Item = u64> {
    (1u64..(1 << 31))
        .rev()
        .filter(|&n| n & 1 == 1 && is_prime_u32(n))
}

/// Rank of `a` (row-major, entries reduced mod `p`) over GF(p). Stops early once
/// `cap` is reached.
pub fn rank_mod_p(a: &mut [u64], rows: usize, cols: usize, p: u64, cap: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows || rank == cap {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
            continue;
        };
        if piv != rank {
            for c in 0..cols {
                a.swap(piv * cols + c, rank * cols + c);
            }
        }
        let inv = pow_mod(a[rank * cols + col], p - 2, p);
        let (head, tail) = a.split_at_mut((rank + 1) * cols);
        let pivot_row = &head[rank * cols..];
        for row in tail.chunks_exact_mut(cols) {
            let f = row[col];
            if f == 0 {
                continue;
            }
            let f = mul_mod(f, inv, p);
            for c in col..cols {
                row[c] = (row[c] + p - mul_mod(f, pivot_row[c], p)) % p;
            }
        }
        rank += 1;
    }
    rank
}

/// Bits of the Hadamard bound `r^(r/2)·max|a|^r` on any `r × r` minor.
fn hadamard_bits(r: usize, max_abs: u64) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let r = r as f64;
    0.5 * r * r.log2() + r * (max_abs.max(1) as f64).log2()
}

fn dedup_rows(a: &[i64], rows: usize, cols: usize) -> (Vec<i64>, usize) {
    let mut seen: Vec<&[i64]> = a.chunks_exact(cols.max(1)).take(rows).collect();
    seen.sort_unstable();
    seen.dedup();
    let n = seen.len();
    (seen.concat(), n)
}

fn transpose(a: &[i64], rows: usize, cols: usize) -> Vec<i64> {
    let mut t = vec![0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = a[r * cols + c];
        }
    }
    t
}

/// Exact rank over Q of an integer matrix given row-major.
///
/// Duplicate rows and columns are removed first. The rank is then the maximum
/// of the ranks modulo 31-bit primes, taken over enough primes that their
/// product exceeds the Hadamard bound of the largest possible minor.
pub fn rank_rational(a: &[i64], rows: usize, cols: usize) -> usize {
    assert_eq!(a.len(), rows * cols, "shape mismatch");
    if rows == 0 || cols == 0 {
        return 0;
    }
    let (a, rows) = dedup_rows(a, rows, cols);
    let (t, cols) = dedup_rows(&transpose(&a, rows, cols), cols, rows);
    let a = transpose(&t, cols, rows);
    if a.iter().all(|&v| v == 0) {
        return 0;
    }
    let cap = rows.min(cols);
    let max_abs = a.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    let needed = hadamard_bits(cap, max_abs);
    let mut covered = 0.0;
    let mut best = 0;
    for p in primes_31() {
        let mut m: Vec<u64> = a.iter().map(|&v| v.rem_euclid(p as i64) as u64).collect();
        best = best.max(rank_mod_p(&mut m, rows, cols, p, cap));
        covered += (p as f64).log2();
        if best == cap || covered > needed + 1.0 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn bareiss_small_cases() {
        assert_eq!(bareiss_rank::<i64>(vec![]), 0);
        assert_eq!(bareiss_rank(vec![vec![0i64, 0], vec![0, 0]]), 0);
        assert_eq!(bareiss_rank(vec![vec![1i64, 2], vec![2, 4]]), 1);
        assert_eq!(bareiss_rank(vec![vec![1i64, 1], vec![1, -1]]), 2);
        let m = vec![vec![2i64, 4, 6], vec![1, 3, 5], vec![3, 7, 11]];
        assert_eq!(bareiss_rank(m), 2);
    }

    #[test]
    fn bareiss_bigint_matches_i128() {
        let m: Vec<Vec<i128>> = (0..6)
            .map(|i| (0..6).map(|j| ((i * 7 + j * 3) % 5) as i128 - 2).collect())
            .collect();
        let big: Vec<Vec<BigInt>> = m
            .iter()
            .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
            .collect();
        assert_eq!(bareiss_rank(m), bareiss_rank(big));
    }

    #[test]
    fn primes_are_prime() {
        let ps: Vec<u64> = primes_31().take(3).collect();
        assert_eq!(ps, vec![2147483647, 2147483629, 2147483587]);
        assert!(!is_prime_u32(2147483649));
    }

    #[test]
    fn rank_mod_p_sees_characteristic() {
        // det = 2, singular mod 2 only
        let mut m = vec![1, 1, 1, 3];
        assert_eq!(rank_mod_p(&mut m.clone(), 2, 2, 2, 2), 1);
        assert_eq!(rank_mod_p(&mut m, 2, 2, 3, 2), 2);
    }

    #[test]
    fn multimodular_matches_bareiss() {
        let mut s = 12345u64;
        for size in [3usize, 5, 8, 12] {
            for _ in 0..20 {
                let rows = size;
                let cols = size + 2;
                let mut a = vec![0i64; rows * cols];
                for v in a.iter_mut() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                    *v = if s >> 63 == 1 { 1 } else { -1 };
                }
                // force some dependence
                if rows > 2 {
                    for c in 0..cols {
                        a[2 * cols + c] = a[c] * a[cols + c];
                        a[(rows - 1) * cols + c] = a[c];
                    }
                }
                let nested: Vec<Vec<BigInt>> = a
                    .chunks(cols)
                    .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                    .collect();
                assert_eq!(rank_rational(&a, rows, cols), bareiss_rank(nested));
            }
        }
    }

    #[test]
    fn hadamard_rows_are_full_rank() {
        // Sylvester Hadamard matrix of order 16
        let n = 16usize;
        let a: Vec<i64> = (0..n * n)
            .map(|k| {
                if ((k / n) & (k % n)).count_ones().is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            })
            .collect();
        assert_eq!(rank_rational(&a, n, n), n);
        assert_eq!(rank_rational(&[1; 9], 3, 3), 1);
        assert_eq!(rank_rational(&[0; 9], 3, 3), 0);
    }
}
