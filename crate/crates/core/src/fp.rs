//! Linear algebra over the residue field F_p.
//!
//! Vectors are `Vec<u32>` with entries in `0..p`; matrices are row-major
//! `Vec<Vec<u32>>`. Class indices order F_p^d lexicographically with the first
//! coordinate most significant.

pub type FpVec = Vec<u32>;
pub type FpMat = Vec<Vec<u32>>;

#[inline]
fn mulm(a: u32, b: u32, p: u32) -> u32 {
    ((a as u64 * b as u64) % p as u64) as u32
}

pub fn inv(a: u32, p: u32) -> Option<u32> {
    let a = a % p;
    if a == 0 {
        return None;
    }
    // Fermat; p is prime and small.
    let mut result = 1u64;
    let mut base = a as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    Some(result as u32)
}

pub fn add(a: &[u32], b: &[u32], p: u32) -> FpVec {
    a.iter().zip(b).map(|(&x, &y)| (x + y) % p).collect()
}

pub fn sub(a: &[u32], b: &[u32], p: u32) -> FpVec {
    a.iter().zip(b).map(|(&x, &y)| (x + p - y) % p).collect()
}

pub fn scale(c: u32, a: &[u32], p: u32) -> FpVec {
    a.iter().map(|&x| mulm(c, x, p)).collect()
}

pub fn dot(a: &[u32], b: &[u32], p: u32) -> u32 {
    a.iter().zip(b).fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % p as u64) as u32
}

pub fn is_zero(a: &[u32]) -> bool {
    a.iter().all(|&x| x == 0)
}

pub fn mat_vec(m: &FpMat, v: &[u32], p: u32) -> FpVec {
    m.iter().map(|row| dot(row, v, p)).collect()
}

pub fn mat_mul(a: &FpMat, b: &FpMat, p: u32) -> FpMat {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).fold(0u64, |acc, (&x, r)| (acc + x as u64 * r[j] as u64) % p as u64) as u32)
                .collect()
        })
        .collect()
}

pub fn transpose(m: &FpMat) -> FpMat {
    let n = m.first().map_or(0, |r| r.len());
    (0..n).map(|j| m.iter().map(|r| r[j]).collect()).collect()
}

pub fn identity(d: usize) -> FpMat {
    (0..d).map(|i| (0..d).map(|j| u32::from(i == j)).collect()).collect()
}

/// Row echelon reduction in place; returns (rank, determinant of the square part).
fn eliminate(m: &mut FpMat, p: u32) -> (usize, u32) {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut det = 1u32;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| m[r][col] != 0) else {
            det = 0;
            continue;
        };
        if piv != rank {
            m.swap(piv, rank);
            det = (p - det) % p;
        }
        let pv = m[rank][col];
        det = mulm(det, pv, p);
        let pinv = inv(pv, p).expect("nonzero pivot");
        for x in m[rank].iter_mut() {
            *x = mulm(*x, pinv, p);
        }
        for r in 0..rows {
            if r != rank && m[r][col] != 0 {
                let f = m[r][col];
                for c in 0..cols {
                    let t = mulm(f, m[rank][c], p);
                    m[r][c] = (m[r][c] + p - t) % p;
                }
            }
        }
        rank += 1;
    }
    if rank < rows.min(cols) {
        det = 0;
    }
    (rank, det)
}

pub fn det(m: &FpMat, p: u32) -> u32 {
    let mut a = m.clone();
    eliminate(&mut a, p).1
}

pub fn rank(m: &FpMat, p: u32) -> usize {
    let mut a = m.clone();
    eliminate(&mut a, p).0
}

pub fn inverse(m: &FpMat, p: u32) -> Option<FpMat> {
    let d = m.len();
    let mut aug: FpMat = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..d).map(|j| u32::from(i == j)));
            r
        })
        .collect();
    // eliminate only over the left block
    for col in 0..d {
        let piv = (col..d).find(|&r| aug[r][col] != 0)?;
        aug.swap(piv, col);
        let pinv = inv(aug[col][col], p)?;
        for x in aug[col].iter_mut() {
            *x = mulm(*x, pinv, p);
        }
        for r in 0..d {
            if r != col && aug[r][col] != 0 {
                let f = aug[r][col];
                for c in 0..2 * d {
                    let t = mulm(f, aug[col][c], p);
                    aug[r][c] = (aug[r][c] + p - t) % p;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[d..].to_vec()).collect())
}

pub fn class_count(p: u32, d: usize) -> usize {
    (p as usize).pow(d as u32)
}

pub fn class_index(c: &[u32], p: u32) -> usize {
    c.iter().fold(0usize, |acc, &x| acc * p as usize + x as usize)
}

pub fn class_from_index(mut i: usize, p: u32, d: usize) -> FpVec {
    let mut c = vec![0u32; d];
    for slot in c.iter_mut().rev() {
        *slot = (i % p as usize) as u32;
        i /= p as usize;
    }
    c
}

/// Representative of `F_p^* k` whose first nonzero coordinate is 1.
pub fn canonical_direction(k: &[u32], p: u32) -> Option<FpVec> {
    let lead = *k.iter().find(|&&x| x != 0)?;
    Some(scale(inv(lead, p)?, k, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let p = 5;
        let m = vec![vec![1, 2, 0], vec![3, 1, 4], vec![0, 2, 2]];
        assert_ne!(det(&m, p), 0);
        let mi = inverse(&m, p).unwrap();
        assert_eq!(mat_mul(&m, &mi, p), identity(3));
        assert_eq!(mat_mul(&mi, &m, p), identity(3));
    }

    #[test]
    fn singular_matrix() {
        let m = vec![vec![1, 2], vec![2, 4]];
        assert_eq!(det(&m, 5), 0);
        assert!(inverse(&m, 5).is_none());
        assert_eq!(rank(&m, 5), 1);
    }

    #[test]
    fn det_matches_cofactor_on_all_2x2_mod_3() {
        let p = 3;
        for i in 0..81 {
            let e = class_from_index(i, p, 4);
            let m = vec![vec![e[0], e[1]], vec![e[2], e[3]]];
            let expect = ((e[0] * e[3]) % p + p * p - (e[1] * e[2]) % p) % p;
            assert_eq!(det(&m, p), expect, "{m:?}");
        }
    }

    #[test]
    fn class_index_round_trip() {
        for i in 0..27 {
            assert_eq!(class_index(&class_from_index(i, 3, 3), 3), i);
        }
        assert_eq!(class_index(&[1, 0], 3), 3);
    }

    #[test]
    fn canonical_direction_scales_lead_to_one() {
        assert_eq!(canonical_direction(&[0, 2, 1], 3), Some(vec![0, 1, 2]));
        assert_eq!(canonical_direction(&[0, 0], 3), None);
    }
}
