//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's field arithmetic.

#![allow(dead_code)]

pub fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn powmod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    acc
}

/// Inverse by Fermat's little theorem.
pub fn invmod(a: u64, p: u64) -> u64 {
    assert!(!a.is_multiple_of(p), "no inverse of zero");
    powmod(a, p - 2, p)
}

pub fn naive_is_prime(n: u64) -> bool {
    n >= 2
        && (2..n)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

/// Coefficients (low degree first) of the polynomial through `points`, by
/// Gaussian elimination on the Vandermonde system mod `p`.
pub fn vandermonde_solve(points: &[(u64, u64)], p: u64) -> Vec<u64> {
    let n = points.len();
    let mut m: Vec<Vec<u64>> = points
        .iter()
        .map(|&(x, y)| {
            let mut row: Vec<u64> = (0..n as u64).map(|j| powmod(x, j, p)).collect();
            row.push(y % p);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| m[r][col] != 0).expect("singular system");
        m.swap(col, pivot);
        let inv = invmod(m[col][col], p);
        for v in m[col].iter_mut() {
            *v = mulmod(*v, inv, p);
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            let f = row[col];
            if r != col && f != 0 {
                for (v, &q) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *v = (*v + p - mulmod(f, q, p)) % p;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n]).collect()
}

/// Plain integer sum of the selected rows.
pub fn integer_sum(models: &[Vec<u64>], rows: &[usize]) -> Vec<u64> {
    let len = models.first().map_or(0, Vec::len);
    (0..len)
        .map(|i| rows.iter().map(|&r| models[r][i]).sum())
        .collect()
}
