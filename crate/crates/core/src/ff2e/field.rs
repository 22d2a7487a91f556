use std::fmt;
use std::sync::Arc;

use rand::Rng;

/// A field element in polynomial-basis integer encoding (bit i is the coefficient of x^i).
pub type Gf = u16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("extension degree {0} out of range 1..=16")]
    DegreeOutOfRange(u32),
}

struct Tables {
    e: u32,
    modulus: u32,
    exp: Vec<Gf>,
    log: Vec<u32>,
    trace: Vec<u8>,
    basis: Vec<Gf>,
}

/// GF(2^e) with log/antilog tables and a trace-orthonormal basis.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}; modulus {:#b})", self.t.e, self.t.modulus)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.t.e == other.t.e && self.t.modulus == other.t.modulus
    }
}
impl Eq for Field {}

fn clmul_mod(mut a: u32, mut b: u32, modulus: u32, e: u32) -> u32 {
    let mut r = 0u32;
    while b != 0 {
        if b & 1 == 1 {
            r ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> e & 1 == 1 {
            a ^= modulus;
        }
    }
    r
}

fn poly_deg(p: u32) -> u32 {
    31 - p.leading_zeros()
}

fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = poly_deg(b);
    while a != 0 && poly_deg(a) >= db {
        a ^= b << (poly_deg(a) - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
pub fn is_irreducible(p: u32) -> bool {
    let d = poly_deg(p);
    if d == 0 {
        return false;
    }
    for dd in 1..=d / 2 {
        for q in (1u32 << dd)..(1u32 << (dd + 1)) {
            if poly_rem(p, q) == 0 {
                return false;
            }
        }
    }
    true
}

impl Field {
    pub fn new(e: u32) -> Result<Field, FieldError> {
        if !(1..=16).contains(&e) {
            return Err(FieldError::DegreeOutOfRange(e));
        }
        let modulus = ((1u32 << e) + 1..(1u32 << (e + 1)))
            .step_by(2)
            .find(|&p| is_irreducible(p))
            .expect("irreducible polynomials exist in every degree");
        let q = 1usize << e;
        let mut exp = Vec::new();
        let mut log = vec![0u32; q];
        'search: for g in 1..q as u32 {
            exp.clear();
            let mut x = 1u32;
            for i in 0..q - 1 {
                if i > 0 && x == 1 {
                    continue 'search;
                }
                exp.push(x as Gf);
                log[x as usize] = i as u32;
                x = clmul_mod(x, g, modulus, e);
            }
            if x == 1 {
                break;
            }
        }
        assert_eq!(exp.len(), q - 1);
        let table = exp.clone();
        exp.extend_from_slice(&table);
        let mut f = Field { t: Arc::new(Tables { e, modulus, exp, log, trace: Vec::new(), basis: Vec::new() }) };
        let trace: Vec<u8> = (0..q)
            .map(|x| {
                let (mut acc, mut y) = (0 as Gf, x as Gf);
                for _ in 0..e {
                    acc ^= y;
                    y = f.mul(y, y);
                }
                debug_assert!(acc <= 1);
                acc as u8
            })
            .collect();
        Arc::get_mut(&mut f.t).expect("unshared").trace = trace;
        let basis = self_dual_basis(&f);
        Arc::get_mut(&mut f.t).expect("unshared").basis = basis;
        f.check_basis(f.selfdual_basis()).expect("self-dual basis verification");
        Ok(f)
    }

    pub fn degree(&self) -> u32 {
        self.t.e
    }

    pub fn order(&self) -> usize {
        1usize << self.t.e
    }

    pub fn modulus(&self) -> u32 {
        self.t.modulus
    }

    pub fn selfdual_basis(&self) -> &[Gf] {
        &self.t.basis
    }

    #[inline]
    pub fn add(&self, a: Gf, b: Gf) -> Gf {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Gf, b: Gf) -> Gf {
        if a == 0 || b == 0 {
            0
        } else {
            self.t.exp[(self.t.log[a as usize] + self.t.log[b as usize]) as usize]
        }
    }

    pub fn inv(&self, a: Gf) -> Gf {
        assert!(a != 0, "inverse of zero");
        let n = self.order() as u32 - 1;
        self.t.exp[((n - self.t.log[a as usize]) % n) as usize]
    }

    pub fn div(&self, a: Gf, b: Gf) -> Gf {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: Gf, k: u64) -> Gf {
        if a == 0 {
            return if k == 0 { 1 } else { 0 };
        }
        let n = self.order() as u64 - 1;
        self.t.exp[((self.t.log[a as usize] as u64 * (k % n)) % n) as usize]
    }

    #[inline]
    pub fn trace(&self, a: Gf) -> u8 {
        self.t.trace[a as usize]
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Gf {
        rng.gen_range(0..self.order()) as Gf
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Gf {
        rng.gen_range(1..self.order()) as Gf
    }

    /// `dst[i] += c * src[i]`.
    pub fn axpy(&self, dst: &mut [Gf], c: Gf, src: &[Gf]) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        if c == 1 {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= *s;
            }
            return;
        }
        let lc = self.t.log[c as usize];
        let exp = &self.t.exp;
        let log = &self.t.log;
        for (d, &s) in dst.iter_mut().zip(src) {
            if s != 0 {
                *d ^= exp[(log[s as usize] + lc) as usize];
            }
        }
    }

    pub fn scale(&self, v: &mut [Gf], c: Gf) {
        for x in v.iter_mut() {
            *x = self.mul(*x, c);
        }
    }

    pub fn dot(&self, a: &[Gf], b: &[Gf]) -> Gf {
        a.iter().zip(b).fold(0, |acc, (&x, &y)| acc ^ self.mul(x, y))
    }

    /// Coordinates of `a` in the self-dual basis, packed as bits (bit i = Tr(a·b_i)).
    pub fn coords(&self, a: Gf) -> u32 {
        self.t.basis.iter().enumerate().fold(0, |acc, (i, &b)| acc | (self.trace(self.mul(a, b)) as u32) << i)
    }

    pub fn from_coords(&self, bits: u32) -> Gf {
        self.t.basis.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).fold(0, |acc, (_, &b)| acc ^ b)
    }

    /// Checks that `basis` is trace-orthonormal.
    pub fn check_basis(&self, basis: &[Gf]) -> Result<(), (usize, usize)> {
        if basis.len() != self.degree() as usize {
            return Err((basis.len(), basis.len()));
        }
        for (i, &a) in basis.iter().enumerate() {
            for (j, &b) in basis.iter().enumerate() {
                let want = u8::from(i == j);
                if self.trace(self.mul(a, b)) != want {
                    return Err((i, j));
                }
            }
        }
        Ok(())
    }
}

/// Kernel basis over GF(2) of the functionals x -> Tr(x·c) for c in `cs`,
/// with field elements viewed as e-bit vectors.
fn trace_complement(f: &Field, cs: &[Gf]) -> Vec<Gf> {
    let e = f.degree() as usize;
    // row r: bit j is Tr(x^j * c_r)
    let mut rows: Vec<u32> = cs
        .iter()
        .map(|&c| (0..e).fold(0u32, |acc, j| acc | (f.trace(f.mul(1 << j, c)) as u32) << j))
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..e {
        if let Some(p) = (r..rows.len()).find(|&i| rows[i] >> col & 1 == 1) {
            rows.swap(r, p);
            for i in 0..rows.len() {
                if i != r && rows[i] >> col & 1 == 1 {
                    rows[i] ^= rows[r];
                }
            }
            pivots.push(col);
            r += 1;
        }
    }
    (0..e)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = 1u32 << free;
            for (i, &pc) in pivots.iter().enumerate() {
                if rows[i] >> free & 1 == 1 {
                    v |= 1 << pc;
                }
            }
            v as Gf
        })
        .collect()
}

fn self_dual_basis(f: &Field) -> Vec<Gf> {
    let e = f.degree() as usize;
    let bil = |x: Gf, y: Gf| f.trace(f.mul(x, y));
    let mut basis: Vec<Gf> = Vec::new();
    while basis.len() < e {
        let u = trace_complement(f, &basis);
        if let Some(&w) = u.iter().find(|&&w| f.trace(w) == 1) {
            basis.push(w);
            continue;
        }
        // The complement is alternating: use a hyperbolic pair to split off three vectors.
        let x = u[0];
        let y = *u.iter().find(|&&y| bil(x, y) == 1).expect("nondegenerate complement");
        let last = basis.pop().expect("whole space is not alternating");
        basis.push(last ^ x);
        basis.push(last ^ y);
        basis.push(last ^ x ^ y);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slow_mul(f: &Field, a: Gf, b: Gf) -> Gf {
        clmul_mod(a as u32, b as u32, f.modulus(), f.degree()) as Gf
    }

    #[test]
    fn gf4_matches_schoolbook() {
        let f = Field::new(2).unwrap();
        assert_eq!(f.modulus(), 0b111);
        assert_eq!(f.selfdual_basis(), &[2, 3]);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(f.mul(a, b), slow_mul(&f, a, b));
            }
        }
    }

    #[test]
    fn tables_agree_with_carryless_product() {
        for e in [1, 3, 5, 8, 11] {
            let f = Field::new(e).unwrap();
            let q = f.order() as Gf;
            for a in (0..q).step_by(1 + q as usize / 64) {
                for b in (0..q).step_by(1 + q as usize / 61) {
                    assert_eq!(f.mul(a, b), slow_mul(&f, a, b));
                }
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1);
                }
            }
        }
    }

    #[test]
    fn every_degree_has_a_self_dual_basis() {
        for e in 1..=16 {
            let f = Field::new(e).unwrap();
            assert!(f.check_basis(f.selfdual_basis()).is_ok(), "e={e}");
            for a in [0, 1, (f.order() - 1) as Gf, (f.order() / 2) as Gf] {
                assert_eq!(f.from_coords(f.coords(a)), a);
            }
        }
    }

    #[test]
    fn degree_bounds() {
        assert_eq!(Field::new(0).unwrap_err(), FieldError::DegreeOutOfRange(0));
        assert_eq!(Field::new(17).unwrap_err(), FieldError::DegreeOutOfRange(17));
        assert_eq!(Field::new(1).unwrap().modulus(), 0b11);
    }
}
