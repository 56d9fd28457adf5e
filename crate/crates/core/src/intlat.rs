//! Full-rank integer sublattices of Z^d (d <= 3) in Hermite normal form.

use crate::error::{Error, Result};
use crate::lattice::V3;

/// Upper-triangular basis: row i has zeros before column i, positive pivot,
/// and entries above each pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntLattice {
    pub dim: usize,
    pub rows: Vec<V3>,
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        // a = q b + r with r = a.rem_euclid(b)
        let q = (a - a.rem_euclid(b)) / b;
        (g, y, x - q * y)
    }
}

impl IntLattice {
    /// Lattice generated by arbitrary integer vectors; errors if not full rank.
    pub fn from_generators(dim: usize, gens: &[V3]) -> Result<Self> {
        let mut m: Vec<[i64; 3]> = gens
            .iter()
            .map(|v| [v[0] as i64, v[1] as i64, v[2] as i64])
            .filter(|v| v[..dim].iter().any(|&x| x != 0))
            .collect();
        let mut rows: Vec<[i64; 3]> = Vec::new();
        for col in 0..dim {
            // Euclid on column `col` across remaining rows.
            loop {
                let nz: Vec<usize> = (0..m.len()).filter(|&i| m[i][col] != 0).collect();
                if nz.len() <= 1 {
                    break;
                }
                let (i, j) = (nz[0], nz[1]);
                let (a, b) = (m[i][col], m[j][col]);
                let (g, x, y) = ext_gcd(a, b);
                let (ai, bj) = (a / g, b / g);
                let ri = m[i];
                let rj = m[j];
                let mut new_i = [0i64; 3];
                let mut new_j = [0i64; 3];
                for k in 0..3 {
                    new_i[k] = x * ri[k] + y * rj[k];
                    new_j[k] = -bj * ri[k] + ai * rj[k];
                }
                m[i] = new_i;
                m[j] = new_j;
                m.retain(|v| v[..dim].iter().any(|&x| x != 0));
            }
            let pos = m.iter().position(|v| v[col] != 0).ok_or_else(|| {
                Error::InvalidGroundState("generators are not of full rank".into())
            })?;
            let mut p = m.remove(pos);
            if p[col] < 0 {
                for x in p.iter_mut() {
                    *x = -*x;
                }
            }
            rows.push(p);
        }
        // Reduce entries above pivots.
        for j in 0..dim {
            let pj = rows[j][j];
            for i in 0..j {
                let f = rows[i][j].div_euclid(pj);
                if f != 0 {
                    for k in 0..3 {
                        rows[i][k] -= f * rows[j][k];
                    }
                }
            }
        }
        let rows = rows
            .into_iter()
            .map(|r| [r[0] as i32, r[1] as i32, r[2] as i32])
            .collect();
        Ok(IntLattice { dim, rows })
    }

    pub fn index(&self) -> i64 {
        (0..self.dim).map(|i| self.rows[i][i] as i64).product()
    }

    /// Canonical representative of `v` modulo the lattice.
    pub fn reduce(&self, v: V3) -> V3 {
        let mut w = [v[0] as i64, v[1] as i64, v[2] as i64];
        for i in 0..self.dim {
            let p = self.rows[i][i] as i64;
            let f = w[i].div_euclid(p);
            if f != 0 {
                for k in 0..3 {
                    w[k] -= f * self.rows[i][k] as i64;
                }
            }
        }
        [w[0] as i32, w[1] as i32, w[2] as i32]
    }

    pub fn contains(&self, v: V3) -> bool {
        self.reduce(v) == [0, 0, 0]
    }

    /// All coset representatives (the box `[0, p_0) x ... `).
    pub fn coset_reps(&self) -> Vec<V3> {
        let mut out = vec![[0i32; 3]];
        for i in 0..self.dim {
            let p = self.rows[i][i];
            let mut next = Vec::new();
            for r in &out {
                for a in 0..p {
                    let mut v = *r;
                    v[i] = a;
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    pub fn basis(&self) -> Vec<V3> {
        self.rows.clone()
    }

    /// Image under an integer linear map (rows of `m` act on column vectors).
    pub fn map_linear(&self, m: &[[i32; 3]; 3]) -> Result<IntLattice> {
        let gens: Vec<V3> = self.rows.iter().map(|r| mat_vec(m, *r)).collect();
        IntLattice::from_generators(self.dim, &gens)
    }
}

pub fn mat_vec(m: &[[i32; 3]; 3], v: V3) -> V3 {
    let mut out = [0i32; 3];
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_period_lattice_has_index_seven() {
        let l = IntLattice::from_generators(2, &[[2, 1, 0], [-3, 2, 0], [1, -3, 0]]).unwrap();
        assert_eq!(l.index(), 7);
        assert!(l.contains([7, 0, 0]));
        assert!(l.contains([0, 7, 0]));
        assert!(!l.contains([1, 2, 0]));
        assert_eq!(l.coset_reps().len(), 7);
    }

    #[test]
    fn hnf_is_canonical() {
        let a = IntLattice::from_generators(2, &[[2, 2, 0], [-4, 2, 0]]).unwrap();
        let b = IntLattice::from_generators(2, &[[2, -4, 0], [6, 0, 0], [0, 6, 0], [2, 2, 0]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.index(), 12);
    }

    #[test]
    fn rank_deficient_is_error() {
        assert!(IntLattice::from_generators(2, &[[1, 1, 0], [2, 2, 0]]).is_err());
    }

    #[test]
    fn reduce_is_idempotent_and_lattice_invariant() {
        let l = IntLattice::from_generators(3, &[[2, 1, 0], [0, 3, 1], [1, 0, 2]]).unwrap();
        for x in -5..5 {
            for y in -5..5 {
                let v = [x, y, 1];
                let r = l.reduce(v);
                assert_eq!(l.reduce(r), r);
                assert!(l.contains([v[0] - r[0], v[1] - r[1], v[2] - r[2]]));
            }
        }
    }
}
