use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

/// Exponent vector of a monomial `x^I`.
///
/// Ordered graded-lexicographically: by total degree, then so that `x1` dominates
/// (`x1^2 < x1*x2 < x2^2` within degree 2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exps: SmallVec<[u32; 6]>,
    degree: u32,
}

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        Self::from_slice(&exps)
    }

    pub fn from_slice(exps: &[u32]) -> Self {
        MultiIndex { degree: exps.iter().sum(), exps: SmallVec::from_slice(exps) }
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex { exps: SmallVec::from_elem(0, n), degree: 0 }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zeros(n);
        m.exps[i] = 1;
        m.degree = 1;
        m
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn get(&self, var: usize) -> u32 {
        self.exps[var]
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    /// Degree in the variables with index `>= r`.
    pub fn tail_degree(&self, r: usize) -> u32 {
        self.exps[r..].iter().sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
            degree: self.degree + other.degree,
        }
    }

    /// `I - e_var`; the exponent must be positive.
    pub fn lower(&self, var: usize) -> Self {
        let mut m = self.clone();
        m.exps[var] -= 1;
        m.degree -= 1;
        m
    }

    pub fn raise(&self, var: usize) -> Self {
        let mut m = self.clone();
        m.exps[var] += 1;
        m.degree += 1;
        m
    }

    /// Componentwise `self >= other`.
    pub fn divides_into(&self, other: &Self) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    /// Pads with zero exponents up to `n` variables.
    pub fn extend(&self, n: usize) -> Self {
        let mut m = self.clone();
        m.exps.resize(n, 0);
        m
    }

    /// All exponent vectors in `n` variables of total degree `d`, in ascending order.
    pub fn all_of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fill(&mut cur, 0, d, &mut out);
        out.sort();
        out
    }
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(MultiIndex::from_slice(cur));
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(MultiIndex::zeros(0));
        }
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        fill(cur, pos + 1, left - e, out);
    }
    cur[pos] = 0;
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree.cmp(&other.degree).then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps.as_slice())
    }
}
