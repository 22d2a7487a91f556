//! The graded incidence poset of cubical faces over a set with t commuting
//! families of permutations.

use serde_json::json;

use crate::report::Report;

pub const MAX_T: usize = 8;
pub const MAX_N: usize = 254;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("directions {j} and {j2} do not commute: generators {a}, {a2} at element {g}")]
    CommutationViolation { j: usize, j2: usize, a: usize, a2: usize, g: usize },
    #[error("direction {j}: inverse of generator {a} is missing")]
    NotInverseClosed { j: usize, a: usize },
    #[error("direction {j}: generator {a} is not a bijection of 0..{size}")]
    NotBijection { j: usize, a: usize, size: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("level {level} out of range for dimension {t}")]
    LevelOutOfRange { level: usize, t: usize },
}

/// One direction's generator set, each generator a permutation stored as an index array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationSet {
    pub direction: usize,
    perms: Vec<Vec<u32>>,
    inverse: Vec<usize>,
}

impl PermutationSet {
    pub fn new(direction: usize, perms: Vec<Vec<u32>>) -> Result<Self, GeometryError> {
        let size = perms.first().map_or(0, |p| p.len());
        for (a, p) in perms.iter().enumerate() {
            let mut seen = vec![false; size];
            if p.len() != size {
                return Err(GeometryError::NotBijection { j: direction, a, size });
            }
            for &x in p {
                if x as usize >= size || std::mem::replace(&mut seen[x as usize], true) {
                    return Err(GeometryError::NotBijection { j: direction, a, size });
                }
            }
        }
        let mut inverse = Vec::with_capacity(perms.len());
        for (a, p) in perms.iter().enumerate() {
            let mut inv = vec![0u32; size];
            for (g, &x) in p.iter().enumerate() {
                inv[x as usize] = g as u32;
            }
            let pick = if perms[a] == inv { Some(a) } else { perms.iter().position(|q| *q == inv) };
            match pick {
                Some(b) => inverse.push(b),
                None => return Err(GeometryError::NotInverseClosed { j: direction, a }),
            }
        }
        Ok(PermutationSet { direction, perms, inverse })
    }

    pub fn n(&self) -> usize {
        self.perms.len()
    }

    pub fn domain(&self) -> usize {
        self.perms.first().map_or(0, |p| p.len())
    }

    #[inline]
    pub fn apply(&self, a: usize, g: u32) -> u32 {
        self.perms[a][g as usize]
    }

    pub fn inverse_of(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn perm(&self, a: usize) -> &[u32] {
        &self.perms[a]
    }

    pub fn is_identity(&self, a: usize) -> bool {
        self.perms[a].iter().enumerate().all(|(g, &x)| g as u32 == x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Bit(u8),
    Gen(usize),
}

/// A face `[g; labels]` packed as the element index plus one byte per direction
/// (0 and 1 are bits, 2 + a is generator a). The canonical order of faces is the
/// index order of [`ComplexGeometry::index_of`], not the derived `Ord`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub g: u32,
    code: u64,
}

impl Face {
    pub fn new(g: u32, labels: &[Label]) -> Face {
        let mut f = Face { g, code: 0 };
        for (j, &l) in labels.iter().enumerate() {
            f.set_label(j, l);
        }
        f
    }

    #[inline]
    pub fn label(&self, j: usize) -> Label {
        match (self.code >> (8 * j)) as u8 {
            b @ (0 | 1) => Label::Bit(b),
            x => Label::Gen(x as usize - 2),
        }
    }

    #[inline]
    pub fn set_label(&mut self, j: usize, l: Label) {
        let byte = match l {
            Label::Bit(b) => b as u64,
            Label::Gen(a) => a as u64 + 2,
        };
        self.code = self.code & !(0xff << (8 * j)) | byte << (8 * j);
    }

    #[inline]
    pub fn gen(&self, j: usize) -> Option<usize> {
        match self.label(j) {
            Label::Gen(a) => Some(a),
            Label::Bit(_) => None,
        }
    }

    #[inline]
    pub fn bit(&self, j: usize) -> Option<u8> {
        match self.label(j) {
            Label::Bit(b) => Some(b),
            Label::Gen(_) => None,
        }
    }

    /// Bitmask of generator directions.
    #[inline]
    pub fn type_mask(&self) -> u32 {
        (0..MAX_T).filter(|&j| (self.code >> (8 * j)) as u8 >= 2).fold(0, |m, j| m | 1 << j)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.type_mask().count_ones() as usize
    }

    pub fn labels(&self, t: usize) -> Vec<Label> {
        (0..t).map(|j| self.label(j)).collect()
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// All k-subsets of `items` in lexicographic order, as bitmasks.
pub fn subsets_of(items: &[usize], k: usize) -> Vec<u32> {
    fn rec(items: &[usize], k: usize, start: usize, mask: u32, out: &mut Vec<u32>) {
        if k == 0 {
            out.push(mask);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k {
                break;
            }
            rec(items, k - 1, i + 1, mask | 1 << items[i], out);
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, 0, &mut out);
    out
}

pub fn mask_elems(mask: u32) -> Vec<usize> {
    (0..32).filter(|&j| mask >> j & 1 == 1).collect()
}

#[derive(Clone, Debug)]
struct Level {
    types: Vec<u32>,
    type_pos: Vec<usize>,
    per_type: usize,
}

/// The complex X(G; A_1..A_t).
#[derive(Clone, Debug)]
pub struct ComplexGeometry {
    t: usize,
    size: usize,
    n: usize,
    permsets: Vec<PermutationSet>,
    levels: Vec<Level>,
}

impl ComplexGeometry {
    /// Verifies inverse closure (at `PermutationSet` construction) and commutation
    /// of every pair of generators from distinct directions.
    pub fn build(size: usize, permsets: Vec<PermutationSet>) -> Result<Self, GeometryError> {
        let t = permsets.len();
        if t == 0 || t > MAX_T {
            return Err(GeometryError::SizeMismatch(format!("dimension {t} not in 1..={MAX_T}")));
        }
        let n = permsets[0].n();
        if n == 0 || n > MAX_N {
            return Err(GeometryError::SizeMismatch(format!("generator count {n} not in 1..={MAX_N}")));
        }
        for (j, p) in permsets.iter().enumerate() {
            if p.n() != n {
                return Err(GeometryError::SizeMismatch(format!("direction {j} has {} generators, expected {n}", p.n())));
            }
            if p.domain() != size {
                return Err(GeometryError::SizeMismatch(format!(
                    "direction {j} acts on {} elements, expected {size}",
                    p.domain()
                )));
            }
        }
        for j in 0..t {
            for j2 in j + 1..t {
                for a in 0..n {
                    for a2 in 0..n {
                        let (p, p2) = (permsets[j].perm(a), permsets[j2].perm(a2));
                        if let Some(g) = (0..size).find(|&g| p[p2[g] as usize] != p2[p[g] as usize]) {
                            return Err(GeometryError::CommutationViolation { j, j2, a, a2, g });
                        }
                    }
                }
            }
        }
        let all: Vec<usize> = (0..t).collect();
        let levels = (0..=t)
            .map(|k| {
                let types = subsets_of(&all, k);
                let mut type_pos = vec![usize::MAX; 1 << t];
                for (i, &m) in types.iter().enumerate() {
                    type_pos[m as usize] = i;
                }
                Level { types, type_pos, per_type: size * n.pow(k as u32) * (1 << (t - k)) }
            })
            .collect();
        Ok(ComplexGeometry { t, size, n, permsets, levels })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// |G|.
    pub fn group_size(&self) -> usize {
        self.size
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permset(&self, j: usize) -> &PermutationSet {
        &self.permsets[j]
    }

    pub fn permsets(&self) -> &[PermutationSet] {
        &self.permsets
    }

    pub fn level_size(&self, k: usize) -> usize {
        self.levels[k].types.len() * self.levels[k].per_type
    }

    /// Formula value C(t,k)·2^{t−k}·n^k·N.
    pub fn level_size_formula(&self, k: usize) -> usize {
        binomial(self.t, k) * (1 << (self.t - k)) * self.n.pow(k as u32) * self.size
    }

    pub fn types(&self, k: usize) -> &[u32] {
        &self.levels[k].types
    }

    /// Number of faces of each type at level k.
    pub fn per_type(&self, k: usize) -> usize {
        self.levels[k].per_type
    }

    /// Index range of faces of a given type within its level.
    pub fn type_range(&self, mask: u32) -> std::ops::Range<usize> {
        let k = mask.count_ones() as usize;
        let lv = &self.levels[k];
        let p = lv.type_pos[mask as usize];
        p * lv.per_type..(p + 1) * lv.per_type
    }

    /// Canonical position of `f` within its level.
    pub fn index_of(&self, f: &Face) -> usize {
        let mask = f.type_mask();
        let lv = &self.levels[mask.count_ones() as usize];
        let mut idx = f.g as usize;
        for j in 0..self.t {
            idx = match f.label(j) {
                Label::Bit(b) => idx * 2 + b as usize,
                Label::Gen(a) => idx * self.n + a,
            };
        }
        lv.type_pos[mask as usize] * lv.per_type + idx
    }

    pub fn face_at(&self, k: usize, idx: usize) -> Face {
        let lv = &self.levels[k];
        let mask = lv.types[idx / lv.per_type];
        let mut rest = idx % lv.per_type;
        let mut f = Face { g: 0, code: 0 };
        for j in (0..self.t).rev() {
            if mask >> j & 1 == 1 {
                f.set_label(j, Label::Gen(rest % self.n));
                rest /= self.n;
            } else {
                f.set_label(j, Label::Bit((rest % 2) as u8));
                rest /= 2;
            }
        }
        f.g = rest as u32;
        f
    }

    pub fn faces(&self, k: usize) -> impl Iterator<Item = Face> + '_ {
        (0..self.level_size(k)).map(move |i| self.face_at(k, i))
    }

    fn check_level(&self, k: usize) -> Result<(), GeometryError> {
        if k > self.t {
            Err(GeometryError::LevelOutOfRange { level: k, t: self.t })
        } else {
            Ok(())
        }
    }

    /// Faces f' ⋖_j f, for j ∈ type(f) ascending and b = 0, 1.
    pub fn covers_down(&self, f: &Face) -> Vec<(Face, usize)> {
        let mut out = Vec::with_capacity(2 * f.dim());
        for j in 0..self.t {
            if let Some(a) = f.gen(j) {
                let mut lo = *f;
                lo.set_label(j, Label::Bit(0));
                let mut hi = *f;
                hi.set_label(j, Label::Bit(1));
                hi.g = self.permsets[j].apply(a, f.g);
                out.push((lo, j));
                out.push((hi, j));
            }
        }
        out
    }

    /// Faces f' ⋗_j f, for j ∉ type(f) ascending and a ∈ A_j.
    pub fn covers_up(&self, f: &Face) -> Vec<(Face, usize)> {
        let mut out = Vec::with_capacity((self.t - f.dim()) * self.n);
        for j in 0..self.t {
            if let Some(b) = f.bit(j) {
                for a in 0..self.n {
                    let mut u = *f;
                    u.set_label(j, Label::Gen(a));
                    if b == 1 {
                        let p = &self.permsets[j];
                        u.g = p.apply(p.inverse_of(a), f.g);
                    }
                    out.push((u, j));
                }
            }
        }
        out
    }

    /// X_{≥v}(k).
    pub fn link_up(&self, v: &Face, k: usize) -> Result<Vec<Face>, GeometryError> {
        self.check_level(k)?;
        let i = v.dim();
        if k < i {
            return Err(GeometryError::LevelOutOfRange { level: k, t: self.t });
        }
        let free: Vec<usize> = (0..self.t).filter(|&j| v.bit(j).is_some()).collect();
        let mut out = Vec::with_capacity(binomial(free.len(), k - i) * self.n.pow((k - i) as u32));
        for mask in subsets_of(&free, k - i) {
            let dirs = mask_elems(mask);
            let total = self.n.pow(dirs.len() as u32);
            for code in 0..total {
                let mut u = *v;
                let mut rest = code;
                for &j in dirs.iter().rev() {
                    let a = rest % self.n;
                    rest /= self.n;
                    u.set_label(j, Label::Gen(a));
                    if v.bit(j) == Some(1) {
                        let p = &self.permsets[j];
                        u.g = p.apply(p.inverse_of(a), u.g);
                    }
                }
                out.push(u);
            }
        }
        Ok(out)
    }

    /// X_{≤u}(ℓ).
    pub fn link_down(&self, u: &Face, l: usize) -> Result<Vec<Face>, GeometryError> {
        let i = u.dim();
        if l > i {
            return Err(GeometryError::LevelOutOfRange { level: l, t: self.t });
        }
        let gens: Vec<usize> = (0..self.t).filter(|&j| u.gen(j).is_some()).collect();
        let mut out = Vec::with_capacity(binomial(i, l) << (i - l));
        for mask in subsets_of(&gens, i - l) {
            let dirs = mask_elems(mask);
            for bits in 0..1u32 << dirs.len() {
                let mut w = *u;
                for (p, &j) in dirs.iter().enumerate() {
                    let b = (bits >> (dirs.len() - 1 - p) & 1) as u8;
                    let a = u.gen(j).unwrap();
                    w.set_label(j, Label::Bit(b));
                    if b == 1 {
                        w.g = self.permsets[j].apply(a, w.g);
                    }
                }
                out.push(w);
            }
        }
        Ok(out)
    }

    /// The 2^{dim f} vertices of f.
    pub fn vertices(&self, f: &Face) -> Vec<Face> {
        self.link_down(f, 0).expect("level 0 is always below")
    }

    /// w ⪯ u.
    pub fn is_below(&self, w: &Face, u: &Face) -> bool {
        let (mw, mu) = (w.type_mask(), u.type_mask());
        if mw & !mu != 0 {
            return false;
        }
        let mut g = u.g;
        for j in 0..self.t {
            match (w.label(j), u.label(j)) {
                (Label::Gen(a), Label::Gen(b)) if a != b => return false,
                (Label::Bit(x), Label::Bit(y)) if x != y => return false,
                (Label::Bit(1), Label::Gen(a)) => g = self.permsets[j].apply(a, g),
                _ => {}
            }
        }
        g == w.g
    }

    /// Exhaustive comparison of face, cover and link counts with their formulas.
    pub fn count_check(&self) -> Report {
        let mut rep = Report::new();
        let t = self.t;
        for k in 0..=t {
            let counted = self.faces(k).count();
            let mut distinct = std::collections::HashSet::new();
            let mut index_ok = true;
            for (i, f) in self.faces(k).enumerate() {
                index_ok &= self.index_of(&f) == i && f.dim() == k;
                distinct.insert(f);
            }
            rep.check(
                format!("geometry.level_size.{k}"),
                "face count per level",
                counted == self.level_size_formula(k) && distinct.len() == counted && index_ok,
                json!({"level": k, "enumerated": counted, "formula": self.level_size_formula(k)}),
            );
        }
        let mut down_bad = 0usize;
        let mut up_bad = 0usize;
        let mut link_up_bad = 0usize;
        let mut link_down_bad = 0usize;
        let mut faces_seen = 0usize;
        for i in 0..=t {
            for f in self.faces(i) {
                faces_seen += 1;
                let down = self.covers_down(&f);
                if down.len() != 2 * i || down.iter().any(|(d, _)| d.dim() + 1 != i || !self.is_below(d, &f)) {
                    down_bad += 1;
                }
                let up = self.covers_up(&f);
                if up.len() != (t - i) * self.n
                    || up.iter().any(|(u, _)| u.dim() != i + 1 || !self.covers_down(u).iter().any(|(d, _)| *d == f))
                {
                    up_bad += 1;
                }
                for k in i..=t {
                    let l = self.link_up(&f, k).unwrap();
                    let want = binomial(t - i, k - i) * self.n.pow((k - i) as u32);
                    let set: std::collections::HashSet<_> = l.iter().collect();
                    if l.len() != want || set.len() != want || l.iter().any(|u| u.dim() != k || !self.is_below(&f, u)) {
                        link_up_bad += 1;
                    }
                }
                for l in 0..=i {
                    let d = self.link_down(&f, l).unwrap();
                    let want = binomial(i, l) << (i - l);
                    let set: std::collections::HashSet<_> = d.iter().collect();
                    if d.len() != want || set.len() != want || d.iter().any(|w| w.dim() != l || !self.is_below(w, &f)) {
                        link_down_bad += 1;
                    }
                }
            }
        }
        let data = |bad: usize| json!({"faces": faces_seen, "violations": bad});
        rep.check("geometry.covers_down", "down-cover count 2i", down_bad == 0, data(down_bad));
        rep.check("geometry.covers_up", "up-cover count (t-i)n", up_bad == 0, data(up_bad));
        rep.check("geometry.link_up", "upper link size C(t-i,k-i) n^(k-i)", link_up_bad == 0, data(link_up_bad));
        rep.check("geometry.link_down", "lower link size C(i,l) 2^(i-l)", link_down_bad == 0, data(link_down_bad));
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z4() -> ComplexGeometry {
        let add = |s: u32| (0..4).map(|g| (g + s) % 4).collect::<Vec<u32>>();
        let p = PermutationSet::new(0, vec![add(1), add(3), add(2)]).unwrap();
        ComplexGeometry::build(4, vec![p]).unwrap()
    }

    #[test]
    fn cyclic_line() {
        let x = z4();
        assert_eq!(x.level_size(0), 8);
        assert_eq!(x.level_size(1), 12);
        let e = Face::new(1, &[Label::Gen(0)]);
        let d = x.covers_down(&e);
        assert_eq!(d[0].0, Face::new(1, &[Label::Bit(0)]));
        assert_eq!(d[1].0, Face::new(2, &[Label::Bit(1)]));
        assert!(x.count_check().all_pass());
    }

    #[test]
    fn index_roundtrip() {
        let x = z4();
        for k in 0..=1 {
            for i in 0..x.level_size(k) {
                assert_eq!(x.index_of(&x.face_at(k, i)), i);
            }
        }
    }
}
