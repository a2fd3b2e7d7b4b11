//! Verma modules on the PBW basis `f_{r_1}^{k_1} ... f_{r_m}^{k_m} v`, where
//! the lowering generators `f_{a,b} = e_{a,b}` (`a > b`) are ordered
//! lexicographically by `(a, b)`. Generator actions are computed by normal
//! ordering in the untruncated module; truncation happens afterwards.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use crate::exact::Rat;

pub(crate) type Monomial = Vec<u32>;
type LinComb = BTreeMap<Monomial, Rat>;

pub(crate) struct PbwAlgebra {
    hw: Vec<i64>,
    roots: Vec<(usize, usize)>,
    root_index: HashMap<(usize, usize), usize>,
    memo: HashMap<(usize, usize, Monomial), LinComb>,
}

fn add_into(acc: &mut LinComb, m: Monomial, c: Rat) {
    if c.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match acc.entry(m) {
        Entry::Vacant(e) => {
            e.insert(c);
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

impl PbwAlgebra {
    pub(crate) fn new(hw: Vec<i64>) -> Self {
        let n = hw.len();
        let roots: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..a).map(move |b| (a, b)))
            .collect();
        let root_index = roots.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        PbwAlgebra {
            hw,
            roots,
            root_index,
            memo: HashMap::new(),
        }
    }

    pub(crate) fn roots(&self) -> &[(usize, usize)] {
        &self.roots
    }

    pub(crate) fn weight(&self, m: &Monomial) -> Vec<i64> {
        let mut w = self.hw.clone();
        for (r, &k) in m.iter().enumerate() {
            let (a, b) = self.roots[r];
            w[a] += k as i64;
            w[b] -= k as i64;
        }
        w
    }

    /// `e_{c,d} * m` as a combination of PBW monomials.
    pub(crate) fn act(&mut self, c: usize, d: usize, m: &Monomial) -> LinComb {
        let key = (c, d, m.clone());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let out = self.act_uncached(c, d, m);
        self.memo.insert(key, out.clone());
        out
    }

    fn act_uncached(&mut self, c: usize, d: usize, m: &Monomial) -> LinComb {
        let mut out = LinComb::new();
        if c == d {
            let w = self.weight(m)[c];
            add_into(&mut out, m.clone(), Rat::from_integer(w.into()));
            return out;
        }
        let first = m.iter().position(|&k| k > 0);
        if c > d {
            let r = self.root_index[&(c, d)];
            if first.is_none_or(|f| r <= f) {
                let mut m2 = m.clone();
                m2[r] += 1;
                add_into(&mut out, m2, Rat::from_integer(1.into()));
                return out;
            }
        }
        let Some(first) = first else {
            // Raising operator on the highest weight vector.
            return out;
        };
        // e_{c,d} f_r m' = f_r (e_{c,d} m') + [e_{c,d}, f_r] m'
        let (a, b) = self.roots[first];
        let mut rest = m.clone();
        rest[first] -= 1;
        let inner = self.act(c, d, &rest);
        for (mono, coef) in inner {
            for (mono2, coef2) in self.act(a, b, &mono) {
                add_into(&mut out, mono2, &coef * &coef2);
            }
        }
        // [e_{c,d}, e_{a,b}] = δ_{da} e_{c,b} - δ_{cb} e_{a,d}
        let one = Rat::from_integer(1.into());
        let mut bracket: Vec<(usize, usize, Rat)> = Vec::new();
        if d == a {
            bracket.push((c, b, one.clone()));
        }
        if c == b {
            bracket.push((a, d, -one));
        }
        for (g1, g2, s) in bracket {
            for (mono, coef) in self.act(g1, g2, &rest) {
                add_into(&mut out, mono, &s * &coef);
            }
        }
        out
    }
}
