//! Tuples of series, composition, Jacobians and formal inversion.

use std::collections::{BTreeMap, HashMap};

use super::{add_into, MultiIndex, MultiSeries, SeriesError};
use crate::linalg;
use crate::ring::CoeffRing;

/// An `m`-tuple of series in `n` common variables, read as a map germ.
#[derive(Clone, PartialEq, Debug)]
pub struct SeriesTuple<R: CoeffRing> {
    components: Vec<MultiSeries<R>>,
}

impl<R: CoeffRing> SeriesTuple<R> {
    /// Components must share the variable count; truncation is lowered to the minimum.
    pub fn new(components: Vec<MultiSeries<R>>) -> Result<Self, SeriesError> {
        if let Some(first) = components.first() {
            let n = first.num_vars();
            if let Some(bad) = components.iter().find(|c| c.num_vars() != n) {
                return Err(SeriesError::VarMismatch(n, bad.num_vars()));
            }
            let nt = components.iter().map(MultiSeries::trunc_degree).min().unwrap();
            let components = components.into_iter().map(|c| c.truncate(nt)).collect();
            return Ok(SeriesTuple { components });
        }
        Ok(SeriesTuple { components })
    }

    pub fn identity(ring: R, n: usize, trunc_degree: u32) -> Self {
        SeriesTuple {
            components: (0..n).map(|i| MultiSeries::variable(ring.clone(), n, trunc_degree, i)).collect(),
        }
    }

    /// The linear map `x -> M x`.
    pub fn linear(ring: R, m: &[Vec<R::Elem>], trunc_degree: u32) -> Self {
        let n = m.first().map_or(0, Vec::len);
        let components = m
            .iter()
            .map(|row| {
                let terms = row.iter().enumerate().map(|(j, c)| (MultiIndex::unit(n, j), c.clone()));
                MultiSeries::from_terms(ring.clone(), n, trunc_degree, terms).expect("row length")
            })
            .collect();
        SeriesTuple { components }
    }

    /// `x -> (λ_1 x_1, ..., λ_n x_n)`.
    pub fn diagonal(ring: R, lambda: &[R::Elem], trunc_degree: u32) -> Self {
        let n = lambda.len();
        let components = lambda
            .iter()
            .enumerate()
            .map(|(i, l)| MultiSeries::monomial(ring.clone(), trunc_degree, MultiIndex::unit(n, i), l.clone()))
            .collect();
        SeriesTuple { components }
    }

    pub fn components(&self) -> &[MultiSeries<R>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &MultiSeries<R> {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<MultiSeries<R>> {
        self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.components.first().map_or(0, MultiSeries::num_vars)
    }

    pub fn trunc_degree(&self) -> u32 {
        self.components.first().map_or(0, MultiSeries::trunc_degree)
    }

    pub fn ring(&self) -> &R {
        self.components[0].ring()
    }

    pub fn truncate(&self, n: u32) -> Self {
        SeriesTuple { components: self.components.iter().map(|c| c.truncate(n)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(MultiSeries::is_zero)
    }

    /// Lowest degree of a nonzero term over all components.
    pub fn order(&self) -> Option<u32> {
        self.components.iter().filter_map(MultiSeries::order).min()
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_arity(other)?;
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a.try_add(b)).collect::<Result<_, _>>()?;
        Ok(SeriesTuple { components })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_arity(other)?;
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a.try_sub(b)).collect::<Result<_, _>>()?;
        Ok(SeriesTuple { components })
    }

    fn check_arity(&self, other: &Self) -> Result<(), SeriesError> {
        if self.len() != other.len() {
            return Err(SeriesError::ArityMismatch { expected: self.len(), found: other.len() });
        }
        Ok(())
    }

    /// `self ∘ diag(scales)`.
    pub fn scale_variables(&self, scales: &[R::Elem]) -> Self {
        SeriesTuple { components: self.components.iter().map(|c| c.scale_variables(scales)).collect() }
    }

    /// Componentwise `self ∘ g`.
    pub fn compose(&self, g: &SeriesTuple<R>) -> Result<Self, SeriesError> {
        let components = self.components.iter().map(|c| c.compose(g)).collect::<Result<_, _>>()?;
        Ok(SeriesTuple { components })
    }

    /// Matrix of degree-one coefficients, `M[i][j]` = coefficient of `x_j` in component `i`.
    pub fn linear_part(&self) -> Vec<Vec<R::Elem>> {
        let n = self.num_vars();
        self.components
            .iter()
            .map(|c| (0..n).map(|j| c.coeff(&MultiIndex::unit(n, j))).collect())
            .collect()
    }

    /// `J[i][j] = ∂f_i/∂x_j`, each entry truncated at `N - 1`.
    pub fn jacobian(&self) -> Vec<Vec<MultiSeries<R>>> {
        let n = self.num_vars();
        self.components.iter().map(|c| (0..n).map(|j| c.derivative(j)).collect()).collect()
    }

    /// Components with only their terms of degree >= 2.
    pub fn nonlinear_part(&self) -> Self {
        SeriesTuple { components: self.components.iter().map(|c| c.filter_terms(|i| i.degree() >= 2)).collect() }
    }

    pub fn eval(&self, point: &[R::Elem]) -> Vec<R::Elem> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    fn check_no_constants(&self) -> Result<(), SeriesError> {
        for (i, c) in self.components.iter().enumerate() {
            if !c.ring().is_zero(&c.constant_term()) {
                return Err(SeriesError::NonZeroConstant(i));
            }
        }
        Ok(())
    }

    /// Formal inverse: `self ∘ inverse = id` through the truncation degree.
    pub fn invert(&self) -> Result<Self, SeriesError> {
        let n = self.len();
        if n != self.num_vars() {
            return Err(SeriesError::ArityMismatch { expected: self.num_vars(), found: n });
        }
        self.check_no_constants()?;
        let ring = self.ring().clone();
        let nt = self.trunc_degree();
        let b = linalg::invert_matrix(&ring, &self.linear_part()).ok_or(SeriesError::SingularLinearPart)?;
        let nonlinear = self.nonlinear_part();
        // A k + H(k) = y, so k_d = -B (H∘k)_d, where (H∘k)_d only sees layers below d
        let mut k: Vec<MultiSeries<R>> = SeriesTuple::linear(ring.clone(), &b, nt).into_components();
        let mut cache = PowerCache::new(ring.clone(), n, nonlinear.components.iter().flat_map(|c| c.terms().map(|(i, _)| i.clone())));
        for d in 2..=nt {
            cache.push_layer(&k, d);
            let hk: Vec<BTreeMap<MultiIndex, R::Elem>> =
                nonlinear.components.iter().map(|c| cache.compose_layer(c, &k, d)).collect();
            for (i, row) in b.iter().enumerate() {
                let mut layer = BTreeMap::new();
                for (j, bij) in row.iter().enumerate() {
                    if ring.is_zero(bij) {
                        continue;
                    }
                    let coef = ring.neg(bij);
                    for (idx, c) in &hk[j] {
                        add_into(&ring, &mut layer, idx.clone(), &ring.mul(c, &coef));
                    }
                }
                k[i].set_layer(d, layer);
            }
        }
        Ok(SeriesTuple { components: k })
    }
}

impl<R: CoeffRing> MultiSeries<R> {
    /// `self(g_1, ..., g_n)`, truncated at the smaller truncation degree.
    ///
    /// Horner over the variables with a degree budget: only the part of each
    /// cofactor that can still reach the truncation degree is ever formed.
    pub fn compose(&self, g: &SeriesTuple<R>) -> Result<MultiSeries<R>, SeriesError> {
        if g.len() != self.num_vars() {
            return Err(SeriesError::ArityMismatch { expected: self.num_vars(), found: g.len() });
        }
        g.check_no_constants()?;
        let m = if g.is_empty() { 0 } else { g.num_vars() };
        let budget = if g.is_empty() { self.trunc_degree() } else { self.trunc_degree().min(g.trunc_degree()) };
        let terms: Vec<(&MultiIndex, &R::Elem)> = self.terms().collect();
        Ok(horner(self.ring(), &terms, 0, budget, g, m))
    }
}

fn horner<R: CoeffRing>(
    ring: &R,
    terms: &[(&MultiIndex, &R::Elem)],
    var: usize,
    budget: u32,
    g: &SeriesTuple<R>,
    m: usize,
) -> MultiSeries<R> {
    let mut out = MultiSeries::zero(ring.clone(), m, budget);
    if terms.is_empty() {
        return out;
    }
    let n = terms[0].0.len();
    if var == n {
        let total = terms.iter().fold(ring.zero(), |acc, (_, c)| ring.add(&acc, c));
        out.set_coeff(MultiIndex::zeros(m), total);
        return out;
    }
    // group by the exponent of `var`, dropping terms that cannot reach the budget
    let mut groups: BTreeMap<u32, Vec<(&MultiIndex, &R::Elem)>> = BTreeMap::new();
    for &(i, c) in terms {
        if i.tail_degree(var) <= budget {
            groups.entry(i.get(var)).or_default().push((i, c));
        }
    }
    let Some((&top, _)) = groups.iter().next_back() else {
        return out;
    };
    let gv = g.component(var);
    let mut acc = horner(ring, groups.get(&top).map_or(&[][..], Vec::as_slice), var + 1, budget - top, g, m);
    for k in (0..top).rev() {
        let cap = budget - k;
        if !acc.is_zero() {
            acc = product_upto(&acc, gv, cap);
        } else {
            acc = MultiSeries::zero(ring.clone(), m, cap);
        }
        if let Some(group) = groups.get(&k) {
            let tail = horner(ring, group, var + 1, cap, g, m);
            acc = &acc + &tail;
        }
    }
    acc
}

/// Product with layers `0..=cap`, using whatever layers the operands store.
/// Only valid when `cap` does not exceed what the operands' orders justify.
pub(crate) fn product_upto<R: CoeffRing>(a: &MultiSeries<R>, b: &MultiSeries<R>, cap: u32) -> MultiSeries<R> {
    let ring = a.ring();
    let mut out = MultiSeries::zero(ring.clone(), a.num_vars(), cap);
    let (Some(oa), Some(ob)) = (a.order(), b.order()) else {
        return out;
    };
    for da in oa..=a.trunc_degree() {
        let la = a.layer(da);
        if la.is_empty() {
            continue;
        }
        for db in ob..=b.trunc_degree() {
            if da + db > cap {
                break;
            }
            let lb = b.layer(db);
            let target = &mut out.layers[(da + db) as usize];
            for (ia, ca) in la {
                for (ib, cb) in lb {
                    add_into(ring, target, ia.add(ib), &ring.mul(ca, cb));
                }
            }
        }
    }
    out
}

enum Parent {
    Base(usize),
    Cached(usize),
}

/// Layer-by-layer powers `k^I` of a tuple `k` that is itself being built degree by
/// degree. Layer `d` of every cached power only needs layers `< d` of `k`, since
/// every component of `k` has order at least one.
pub(crate) struct PowerCache<R: CoeffRing> {
    ring: R,
    index_of: HashMap<MultiIndex, usize>,
    entries: Vec<(MultiIndex, Parent, usize)>,
    layers: Vec<Vec<BTreeMap<MultiIndex, R::Elem>>>,
}

impl<R: CoeffRing> PowerCache<R> {
    /// Caches `k^I` for every requested `I` of degree >= 2 and the chain of factors it needs.
    pub(crate) fn new(ring: R, n: usize, wanted: impl IntoIterator<Item = MultiIndex>) -> Self {
        let mut all: Vec<MultiIndex> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack: Vec<MultiIndex> = wanted.into_iter().filter(|i| i.degree() >= 2).collect();
        while let Some(i) = stack.pop() {
            if !seen.insert(i.clone()) {
                continue;
            }
            let v = first_nonzero(&i);
            let parent = i.lower(v);
            if parent.degree() >= 2 {
                stack.push(parent);
            }
            all.push(i);
        }
        all.sort();
        let mut index_of = HashMap::new();
        let mut entries = Vec::with_capacity(all.len());
        for (pos, i) in all.into_iter().enumerate() {
            let v = first_nonzero(&i);
            let parent = i.lower(v);
            let p = if parent.degree() == 1 {
                Parent::Base(first_nonzero(&parent))
            } else {
                Parent::Cached(index_of[&parent])
            };
            index_of.insert(i.clone(), pos);
            entries.push((i, p, v));
        }
        debug_assert!(entries.iter().all(|(i, _, _)| i.len() == n));
        let layers = entries.iter().map(|_| Vec::new()).collect();
        PowerCache { ring, index_of, entries, layers }
    }

    /// Computes layer `d` of every cached power; layers `< d` must already exist
    /// and `base` must be complete through degree `d - 1`.
    pub(crate) fn push_layer(&mut self, base: &[MultiSeries<R>], d: u32) {
        let ring = &self.ring;
        for pos in 0..self.entries.len() {
            while (self.layers[pos].len() as u32) < d {
                // catch up on skipped layers (first call at d > 2)
                let missing = self.layers[pos].len() as u32;
                let layer = self.compute(pos, base, missing);
                self.layers[pos].push(layer);
            }
            let layer = self.compute(pos, base, d);
            let _ = ring;
            self.layers[pos].push(layer);
        }
    }

    fn compute(&self, pos: usize, base: &[MultiSeries<R>], d: u32) -> BTreeMap<MultiIndex, R::Elem> {
        let ring = &self.ring;
        let (ref idx, ref parent, v) = self.entries[pos];
        let mut acc = BTreeMap::new();
        let deg = idx.degree();
        if d < deg {
            return acc;
        }
        let kv = &base[v];
        // parent has order >= deg - 1, k_v has order >= 1
        for j in 1..=(d - (deg - 1)) {
            if j > kv.trunc_degree() {
                break;
            }
            let lk = kv.layer(j);
            if lk.is_empty() {
                continue;
            }
            let pd = d - j;
            let lp = match parent {
                Parent::Base(w) => {
                    if pd > base[*w].trunc_degree() {
                        continue;
                    }
                    base[*w].layer(pd)
                }
                Parent::Cached(q) => match self.layers[*q].get(pd as usize) {
                    Some(l) => l,
                    None => continue,
                },
            };
            for (ia, ca) in lp {
                for (ib, cb) in lk {
                    add_into(ring, &mut acc, ia.add(ib), &ring.mul(ca, cb));
                }
            }
        }
        acc
    }

    /// Layer `d` of `k^I`; `I` of degree 1 reads the base directly.
    pub(crate) fn power_layer<'a>(&'a self, base: &'a [MultiSeries<R>], i: &MultiIndex, d: u32) -> Option<&'a BTreeMap<MultiIndex, R::Elem>> {
        match i.degree() {
            0 => None,
            1 => {
                let w = first_nonzero(i);
                (d <= base[w].trunc_degree()).then(|| base[w].layer(d))
            }
            _ => self.layers[self.index_of[i]].get(d as usize),
        }
    }

    /// Layer `d` of `φ ∘ k` for a series `φ` whose monomials are all cached (or linear).
    /// The constant term of `φ` is ignored.
    pub(crate) fn compose_layer(&self, phi: &MultiSeries<R>, base: &[MultiSeries<R>], d: u32) -> BTreeMap<MultiIndex, R::Elem> {
        let ring = &self.ring;
        let mut acc = BTreeMap::new();
        for (i, c) in phi.terms() {
            if i.degree() == 0 || i.degree() > d {
                continue;
            }
            if let Some(layer) = self.power_layer(base, i, d) {
                for (j, a) in layer {
                    add_into(ring, &mut acc, j.clone(), &ring.mul(a, c));
                }
            }
        }
        acc
    }
}

fn first_nonzero(i: &MultiIndex) -> usize {
    i.exponents().iter().position(|&e| e > 0).expect("nonzero index")
}
