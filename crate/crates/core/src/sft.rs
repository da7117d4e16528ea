//! Subshifts of finite type, admissible words, locally constant functions and
//! higher-block recoding.
//!
//! Symbols are `0..m`. A [`Word`] of length `n` names the cylinder of all
//! one-sided sequences starting with it; cylinders play the role of dynamical
//! balls throughout the crate. A [`LocallyConstantFn`] of depth `k` is a table
//! over admissible `k`-words, and its Birkhoff sum over an `n`-word runs over
//! the `n - k + 1` windows that fit inside the word.

use std::collections::HashMap;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Finite word over `0..m`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    /// Parses a string of decimal digits, one symbol per character.
    pub fn parse_digits(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("empty word"));
        }
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::invalid(format!("word {s:?}: {c:?} is not a digit symbol")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        self.0[self.0.len() - 1]
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.0.iter().all(|&s| s < 10);
        for (i, s) in self.0.iter().enumerate() {
            if !digits && i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Recurrence structure of the transition graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Structure {
    pub irreducible: bool,
    /// Period of the graph when irreducible.
    pub period: Option<usize>,
    pub primitive: bool,
}

/// One-sided subshift of finite type given by a 0/1 transition matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SftModel {
    alphabet_size: usize,
    transition: Vec<bool>,
    labels: Option<Vec<String>>,
    structure: Structure,
}

/// Models up to this size certify primitivity by boolean matrix powers; larger
/// ones use the graph period, which is equivalent.
const POWER_CHECK_MAX: usize = 128;

impl SftModel {
    /// Builds a model from a 0/1 matrix given row by row.
    pub fn new(transition: Vec<Vec<u8>>) -> Result<Self> {
        let m = transition.len();
        if m == 0 {
            return Err(Error::invalid("alphabet must be non-empty"));
        }
        let mut flat = Vec::with_capacity(m * m);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid(format!(
                    "transition row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (j, &e) in row.iter().enumerate() {
                match e {
                    0 => flat.push(false),
                    1 => flat.push(true),
                    _ => {
                        return Err(Error::invalid(format!(
                            "transition entry ({i},{j}) is {e}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Self::from_flags(m, flat)
    }

    fn from_flags(m: usize, transition: Vec<bool>) -> Result<Self> {
        for i in 0..m {
            if !(0..m).any(|j| transition[i * m + j]) {
                return Err(Error::invalid(format!("symbol {i} has no successor")));
            }
            if !(0..m).any(|j| transition[j * m + i]) {
                return Err(Error::invalid(format!("symbol {i} has no predecessor")));
            }
        }
        let mut model = SftModel {
            alphabet_size: m,
            transition,
            labels: None,
            structure: Structure {
                irreducible: false,
                period: None,
                primitive: false,
            },
        };
        model.structure = model.analyze();
        Ok(model)
    }

    pub fn full_shift(m: usize) -> Self {
        Self::from_flags(m, vec![true; m * m]).expect("full shift is valid")
    }

    /// The shift on `{0,1}` forbidding the word `11`.
    pub fn golden_mean() -> Self {
        Self::new(vec![vec![1, 1], vec![1, 0]]).expect("golden mean shift is valid")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.alphabet_size {
            return Err(Error::invalid(format!(
                "{} labels for an alphabet of {} symbols",
                labels.len(),
                self.alphabet_size
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.transition[i * self.alphabet_size + j]
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.alphabet_size).filter(move |&j| self.allows(i, j))
    }

    /// Allowed transitions `(i, j)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let m = self.alphabet_size;
        (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|&(i, j)| self.allows(i, j))
            .collect()
    }

    pub fn transition_rows(&self) -> Vec<Vec<u8>> {
        let m = self.alphabet_size;
        (0..m)
            .map(|i| (0..m).map(|j| self.allows(i, j) as u8).collect())
            .collect()
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn is_irreducible(&self) -> bool {
        self.structure.irreducible
    }

    pub fn is_primitive(&self) -> bool {
        self.structure.primitive
    }

    /// Fails with [`Error::NotMixing`] unless the model is primitive.
    pub fn require_primitive(&self) -> Result<()> {
        if self.structure.primitive {
            Ok(())
        } else if self.structure.irreducible {
            Err(Error::NotMixing(format!(
                "transition matrix is irreducible with period {}",
                self.structure.period.unwrap_or(0)
            )))
        } else {
            Err(Error::NotMixing("transition matrix is reducible".into()))
        }
    }

    pub fn is_admissible(&self, w: &[usize]) -> bool {
        !w.is_empty() && w.iter().all(|&s| s < self.alphabet_size) && w.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    /// Strongly connected components of the transition graph, each sorted,
    /// listed by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let m = self.alphabet_size;
        let mut g = DiGraph::<(), ()>::with_capacity(m, m * m);
        let nodes: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
        for (i, j) in self.edges() {
            g.add_edge(nodes[i], nodes[j], ());
        }
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                v.sort_unstable();
                v
            })
            .collect();
        comps.sort();
        comps
    }

    fn analyze(&self) -> Structure {
        let irreducible = self.components().len() == 1;
        if !irreducible {
            return Structure {
                irreducible,
                period: None,
                primitive: false,
            };
        }
        let period = self.graph_period();
        let primitive = if self.alphabet_size <= POWER_CHECK_MAX {
            self.wielandt_power_is_positive()
        } else {
            period == 1
        };
        Structure {
            irreducible,
            period: Some(period),
            primitive,
        }
    }

    /// Period of an irreducible graph: gcd of `level(u) + 1 - level(v)` over
    /// edges, with BFS levels from symbol 0.
    pub fn graph_period(&self) -> usize {
        let m = self.alphabet_size;
        let mut level = vec![usize::MAX; m];
        let mut queue = std::collections::VecDeque::new();
        level[0] = 0;
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for v in self.successors(u) {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g = 0usize;
        for (u, v) in self.edges() {
            if level[u] == usize::MAX || level[v] == usize::MAX {
                continue;
            }
            let d = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
            g = gcd(g, d);
        }
        g.max(1)
    }

    /// Whether `A^((m-1)^2 + 1)` is strictly positive (Wielandt's bound).
    pub fn wielandt_power_is_positive(&self) -> bool {
        let m = self.alphabet_size;
        let exponent = (m - 1) * (m - 1) + 1;
        let a = BoolMatrix::from_model(self);
        a.pow(exponent).all_true()
    }

    /// Smallest `p` with `A^p` strictly positive, if the model is primitive.
    pub fn primitivity_exponent(&self) -> Option<usize> {
        if !self.structure.primitive {
            return None;
        }
        let a = BoolMatrix::from_model(self);
        let mut acc = a.clone();
        let bound = (self.alphabet_size - 1).pow(2) + 1;
        for p in 1..=bound {
            if acc.all_true() {
                return Some(p);
            }
            acc = acc.mul(&a);
        }
        None
    }

    /// Whether some admissible word of `steps + 1` symbols runs from `i` to `j`.
    pub fn reachability(&self, steps: usize) -> Vec<bool> {
        let m = self.alphabet_size;
        if steps == 0 {
            let mut id = vec![false; m * m];
            for i in 0..m {
                id[i * m + i] = true;
            }
            return id;
        }
        BoolMatrix::from_model(self).pow(steps).data
    }

    /// Number of admissible words of length `n`: the entry sum of `A^(n-1)`.
    pub fn word_count(&self, n: usize) -> u128 {
        assert!(n >= 1);
        let m = self.alphabet_size;
        let mut v = vec![1u128; m];
        for _ in 1..n {
            let mut next = vec![0u128; m];
            for i in 0..m {
                for j in self.successors(i) {
                    next[i] = next[i].saturating_add(v[j]);
                }
            }
            v = next;
        }
        v.into_iter().fold(0u128, |a, b| a.saturating_add(b))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug)]
struct BoolMatrix {
    n: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    fn from_model(model: &SftModel) -> Self {
        BoolMatrix {
            n: model.alphabet_size,
            data: model.transition.clone(),
        }
    }

    fn mul(&self, other: &BoolMatrix) -> BoolMatrix {
        let n = self.n;
        let mut data = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if self.data[i * n + k] {
                    for j in 0..n {
                        data[i * n + j] |= other.data[k * n + j];
                    }
                }
            }
        }
        BoolMatrix { n, data }
    }

    fn pow(&self, mut e: usize) -> BoolMatrix {
        let mut base = self.clone();
        let mut acc: Option<BoolMatrix> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc.expect("exponent must be positive")
    }

    fn all_true(&self) -> bool {
        self.data.iter().all(|&b| b)
    }
}

/// Lexicographic iterator over admissible words of a fixed length, optionally
/// restricted to those extending a prefix.
pub struct WordIter<'a> {
    model: &'a SftModel,
    n: usize,
    fixed: usize,
    current: Vec<usize>,
    state: IterState,
}

#[derive(PartialEq)]
enum IterState {
    Fresh,
    Running,
    Done,
}

impl<'a> WordIter<'a> {
    fn with_prefix(model: &'a SftModel, prefix: &[usize], n: usize) -> Self {
        let ok = prefix.len() <= n && (prefix.is_empty() || model.is_admissible(prefix));
        WordIter {
            model,
            n,
            fixed: prefix.len(),
            current: prefix.to_vec(),
            state: if ok && n > 0 { IterState::Fresh } else { IterState::Done },
        }
    }

    // Every symbol has a successor, so any admissible prefix extends.
    fn fill_from(&mut self, pos: usize) {
        self.current.truncate(pos);
        while self.current.len() < self.n {
            let next = match self.current.last() {
                None => 0,
                Some(&s) => self.model.successors(s).next().expect("no stranded symbols"),
            };
            self.current.push(next);
        }
    }

    fn next_choice(&self, pos: usize) -> Option<usize> {
        let cur = self.current[pos];
        let m = self.model.alphabet_size;
        (cur + 1..m).find(|&s| pos == 0 || self.model.allows(self.current[pos - 1], s))
    }
}

impl Iterator for WordIter<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        match self.state {
            IterState::Done => return None,
            IterState::Fresh => {
                self.fill_from(self.fixed);
                self.state = IterState::Running;
                return Some(Word(self.current.clone()));
            }
            IterState::Running => {}
        }
        let mut pos = self.n;
        while pos > self.fixed {
            pos -= 1;
            if let Some(s) = self.next_choice(pos) {
                self.current[pos] = s;
                self.fill_from(pos + 1);
                return Some(Word(self.current.clone()));
            }
        }
        self.state = IterState::Done;
        None
    }
}

/// All admissible words of length `n` in lexicographic order.
pub fn enumerate_words(model: &SftModel, n: usize) -> WordIter<'_> {
    WordIter::with_prefix(model, &[], n)
}

/// Admissible words of length `n` extending `prefix`, in lexicographic order.
pub fn enumerate_words_with_prefix<'a>(model: &'a SftModel, prefix: &[usize], n: usize) -> WordIter<'a> {
    WordIter::with_prefix(model, prefix, n)
}

/// Whether a function plays the part of a potential or an observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FnRole {
    #[default]
    Potential,
    Observable,
}

/// Real function on sequences depending on the first `depth` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LocallyConstantFn {
    depth: usize,
    alphabet_size: usize,
    // indexed by word in base m, NaN on inadmissible words
    values: Vec<f64>,
    role: FnRole,
}

fn word_index(m: usize, w: &[usize]) -> usize {
    w.iter().fold(0, |acc, &s| acc * m + s)
}

fn index_word(m: usize, depth: usize, mut idx: usize) -> Vec<usize> {
    let mut w = vec![0; depth];
    for slot in w.iter_mut().rev() {
        *slot = idx % m;
        idx /= m;
    }
    w
}

impl LocallyConstantFn {
    /// Builds a function from explicit word values; the entries must cover
    /// every admissible word of length `depth` exactly once.
    pub fn from_table<I>(model: &SftModel, depth: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, f64)>,
    {
        if depth == 0 {
            return Err(Error::invalid("depth must be at least 1"));
        }
        let m = model.alphabet_size();
        let size = m
            .checked_pow(depth as u32)
            .filter(|&s| s <= 1 << 26)
            .ok_or_else(|| Error::invalid(format!("depth {depth} table too large")))?;
        let mut values = vec![f64::NAN; size];
        for (w, v) in entries {
            if w.len() != depth {
                return Err(Error::invalid(format!(
                    "word {w} has length {}, expected {depth}",
                    w.len()
                )));
            }
            if !model.is_admissible(w.symbols()) {
                return Err(Error::invalid(format!("word {w} is not admissible")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("value at {w} is not finite")));
            }
            let idx = word_index(m, w.symbols());
            if !values[idx].is_nan() {
                return Err(Error::invalid(format!("word {w} given twice")));
            }
            values[idx] = v;
        }
        if let Some(missing) = enumerate_words(model, depth).find(|w| values[word_index(m, w.symbols())].is_nan()) {
            return Err(Error::invalid(format!("no value for admissible word {missing}")));
        }
        Ok(LocallyConstantFn {
            depth,
            alphabet_size: m,
            values,
            role: FnRole::Potential,
        })
    }

    /// Tabulates `f` on the admissible words of length `depth`.
    pub fn from_fn(model: &SftModel, depth: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let entries: Vec<(Word, f64)> = enumerate_words(model, depth)
            .map(|w| {
                let v = f(w.symbols());
                (w, v)
            })
            .collect();
        Self::from_table(model, depth, entries)
    }

    pub fn constant(model: &SftModel, depth: usize, c: f64) -> Result<Self> {
        Self::from_fn(model, depth, |_| c)
    }

    pub fn zero(model: &SftModel) -> Self {
        Self::constant(model, 1, 0.0).expect("zero function is valid")
    }

    /// Indicator of the cylinder `[word]`, with depth `word.len()`.
    pub fn cylinder_indicator(model: &SftModel, word: &[usize]) -> Result<Self> {
        Self::from_fn(model, word.len(), |w| if w == word { 1.0 } else { 0.0 }).map(|f| f.with_role(FnRole::Observable))
    }

    pub fn with_role(mut self, role: FnRole) -> Self {
        self.role = role;
        self
    }

    pub fn role(&self) -> FnRole {
        self.role
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Value on an admissible word of length `depth`.
    #[inline]
    pub fn value(&self, w: &[usize]) -> f64 {
        debug_assert_eq!(w.len(), self.depth);
        self.values[word_index(self.alphabet_size, w)]
    }

    /// `(word, value)` pairs over admissible words in lexicographic order.
    pub fn entries(&self) -> Vec<(Word, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(|(i, &v)| (Word(index_word(self.alphabet_size, self.depth, i)), v))
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn is_constant(&self) -> bool {
        let mut it = self.values.iter().filter(|v| !v.is_nan());
        match it.next() {
            None => true,
            Some(first) => it.all(|v| v == first),
        }
    }

    /// Same function read as depth `k >= depth`: depends on the first `depth`
    /// of its `k` coordinates.
    pub fn extend_depth(&self, model: &SftModel, k: usize) -> Result<Self> {
        if k < self.depth {
            return Err(Error::invalid(format!("cannot lower depth {} to {k}", self.depth)));
        }
        if k == self.depth {
            return Ok(self.clone());
        }
        let d = self.depth;
        Self::from_fn(model, k, |w| self.value(&w[..d])).map(|f| f.with_role(self.role))
    }

    /// `a * self + b * other` on the common depth.
    pub fn affine_combination(&self, model: &SftModel, a: f64, other: &Self, b: f64) -> Result<Self> {
        let k = self.depth.max(other.depth);
        let x = self.extend_depth(model, k)?;
        let y = other.extend_depth(model, k)?;
        Self::from_fn(model, k, |w| a * x.value(w) + b * y.value(w)).map(|f| f.with_role(self.role))
    }

    /// Adds `perturb(word)` to every table entry.
    pub fn perturbed(&self, model: &SftModel, mut perturb: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        Self::from_fn(model, self.depth, |w| self.value(w) + perturb(w)).map(|f| f.with_role(self.role))
    }
}

/// `S f(w)`: sum of `f` over the `len(w) - depth(f) + 1` windows of `w`.
pub fn birkhoff_sum(f: &LocallyConstantFn, w: &Word) -> Result<f64> {
    let k = f.depth();
    if w.len() < k {
        return Err(Error::invalid(format!(
            "word of length {} is shorter than the function depth {k}",
            w.len()
        )));
    }
    let mut acc = NeumaierSum::new();
    for win in w.symbols().windows(k) {
        acc.add(f.value(win));
    }
    Ok(acc.value())
}

/// Largest spread of Birkhoff sums over the points of an `n`-cylinder.
///
/// Points of `[w]` are represented by their admissible extensions to length
/// `max(n, depth)`, and the sum runs over the windows of that extension. The
/// result is `0` once `n >= depth`, so locally constant functions satisfy the
/// bounded-variation condition with constant `0`.
pub fn bowen_variation(model: &SftModel, f: &LocallyConstantFn, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("cylinder length must be at least 1"));
    }
    let len = n.max(f.depth());
    let mut worst = 0.0f64;
    for w in enumerate_words(model, n) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for ext in enumerate_words_with_prefix(model, w.symbols(), len) {
            let s = birkhoff_sum(f, &ext)?;
            lo = lo.min(s);
            hi = hi.max(s);
        }
        worst = worst.max(hi - lo);
    }
    Ok(worst)
}

/// Higher-block presentation of a model over its admissible `block_len`-words.
#[derive(Clone, Debug)]
pub struct BlockRecoding {
    block_len: usize,
    source: SftModel,
    target: SftModel,
    blocks: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl BlockRecoding {
    /// Recodes onto the alphabet of admissible `block_len`-words (lexicographic
    /// order); `a -> b` is allowed when `b` continues `a` by one symbol.
    pub fn new(model: &SftModel, block_len: usize) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::invalid("block length must be at least 1"));
        }
        let blocks: Vec<Word> = enumerate_words(model, block_len).collect();
        let index: HashMap<Word, usize> = blocks.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let target = if block_len == 1 {
            model.clone()
        } else {
            let n = blocks.len();
            let mut flags = vec![false; n * n];
            for (a, wa) in blocks.iter().enumerate() {
                let tail = &wa.symbols()[1..];
                let last = wa.last();
                for s in model.successors(last) {
                    let mut next = tail.to_vec();
                    next.push(s);
                    flags[a * n + index[&Word(next)]] = true;
                }
            }
            SftModel::from_flags(n, flags)?
        };
        Ok(BlockRecoding {
            block_len,
            source: model.clone(),
            target,
            blocks,
            index,
        })
    }

    pub fn identity(model: &SftModel) -> Self {
        Self::new(model, 1).expect("identity recoding")
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn is_identity(&self) -> bool {
        self.block_len == 1
    }

    pub fn source(&self) -> &SftModel {
        &self.source
    }

    pub fn target(&self) -> &SftModel {
        &self.target
    }

    /// Source word of target symbol `s`.
    pub fn block(&self, s: usize) -> &Word {
        &self.blocks[s]
    }

    /// Maps an admissible `n`-word to the word of its `n - block_len + 1`
    /// consecutive blocks.
    pub fn encode(&self, w: &Word) -> Result<Word> {
        if w.len() < self.block_len || !self.source.is_admissible(w.symbols()) {
            return Err(Error::invalid(format!("cannot encode {w}")));
        }
        Ok(Word(
            w.symbols()
                .windows(self.block_len)
                .map(|b| self.index[&Word(b.to_vec())])
                .collect(),
        ))
    }

    pub fn decode(&self, w: &Word) -> Result<Word> {
        if !self.target.is_admissible(w.symbols()) {
            return Err(Error::invalid(format!("cannot decode {w}")));
        }
        let mut out = self.blocks[w.first()].symbols().to_vec();
        out.extend(w.symbols()[1..].iter().map(|&s| self.blocks[s].last()));
        Ok(Word(out))
    }

    /// Carries a function of depth `<= block_len + 1` to a depth-2 function on
    /// the target. Its Birkhoff sums over encoded words match the source sums of
    /// the depth-`(block_len + 1)` extension of `f`.
    pub fn recode_fn(&self, f: &LocallyConstantFn) -> Result<LocallyConstantFn> {
        let k = self.block_len + 1;
        if f.depth() > k {
            return Err(Error::invalid(format!(
                "function depth {} exceeds recoding depth {k}",
                f.depth()
            )));
        }
        let lifted = f.extend_depth(&self.source, k)?;
        LocallyConstantFn::from_fn(&self.target, 2, |ab| {
            let mut w = self.blocks[ab[0]].symbols().to_vec();
            w.push(self.blocks[ab[1]].last());
            lifted.value(&w)
        })
        .map(|g| g.with_role(f.role()))
    }
}

/// Re-presents `model` so that every function in `fns` becomes depth 2.
///
/// With `k = max(2, max depth)` the target alphabet is the admissible
/// `(k-1)`-words; for `k = 2` the recoding is the identity and depth-1
/// functions are read as depth 2 through their first coordinate.
pub fn recode_to_depth2(
    model: &SftModel,
    fns: &[&LocallyConstantFn],
) -> Result<(BlockRecoding, Vec<LocallyConstantFn>)> {
    let k = fns.iter().map(|f| f.depth()).max().unwrap_or(1).max(2);
    let rec = BlockRecoding::new(model, k - 1)?;
    let out = fns.iter().map(|f| rec.recode_fn(f)).collect::<Result<Vec<_>>>()?;
    Ok((rec, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reducible_matrix() -> SftModel {
        SftModel::new(vec![
            vec![1, 1, 1, 0],
            vec![1, 1, 1, 0],
            vec![1, 1, 1, 0],
            vec![0, 0, 0, 1],
        ])
        .unwrap()
    }

    fn words(model: &SftModel, n: usize) -> Vec<String> {
        enumerate_words(model, n).map(|w| w.to_string()).collect()
    }

    #[test]
    fn full_shift_pairs() {
        assert_eq!(words(&SftModel::full_shift(2), 2), ["00", "01", "10", "11"]);
    }

    #[test]
    fn golden_mean_three_words() {
        let w = words(&SftModel::golden_mean(), 3);
        assert_eq!(w, ["000", "001", "010", "100", "101"]);
    }

    #[test]
    fn reducible_matrix_two_words() {
        let w = words(&reducible_matrix(), 2);
        assert_eq!(w.len(), 10);
        assert!(w.contains(&"33".to_string()));
        assert!(!w.iter().any(|s| s.contains('3') && s != "33"));
    }

    #[test]
    fn golden_mean_counts_are_fibonacci() {
        let g = SftModel::golden_mean();
        let (mut a, mut b) = (1u128, 2u128); // F(2), F(3)
        for n in 1..=12 {
            assert_eq!(enumerate_words(&g, n).count() as u128, b, "n = {n}");
            let c = a + b;
            a = b;
            b = c;
        }
    }

    #[test]
    fn rejects_stranded_symbols() {
        assert!(SftModel::new(vec![vec![1, 1], vec![0, 0]]).is_err());
        assert!(SftModel::new(vec![vec![1, 0], vec![1, 0]]).is_err());
        assert!(SftModel::new(vec![vec![1, 2], vec![1, 0]]).is_err());
    }

    #[test]
    fn structure_flags() {
        assert!(SftModel::full_shift(3).is_primitive());
        assert!(SftModel::golden_mean().is_primitive());
        let swap = SftModel::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(swap.is_irreducible() && !swap.is_primitive());
        assert_eq!(swap.structure().period, Some(2));
        let p = reducible_matrix();
        assert!(!p.is_irreducible());
        assert_eq!(p.components(), vec![vec![0, 1, 2], vec![3]]);
        assert_eq!(SftModel::golden_mean().primitivity_exponent(), Some(2));
    }

    #[test]
    fn birkhoff_examples() {
        let full = SftModel::full_shift(2);
        let c = LocallyConstantFn::constant(&full, 1, 2.5).unwrap();
        let w = Word::parse_digits("01101").unwrap();
        assert_eq!(birkhoff_sum(&c, &w).unwrap(), 12.5);

        let chi0 = LocallyConstantFn::cylinder_indicator(&full, &[0]).unwrap();
        assert_eq!(birkhoff_sum(&chi0, &Word::parse_digits("0110").unwrap()).unwrap(), 2.0);

        let g = SftModel::golden_mean();
        let f = LocallyConstantFn::from_fn(&g, 2, |w| (10 * w[0] + w[1]) as f64 + 0.5).unwrap();
        let s = birkhoff_sum(&f, &Word::parse_digits("010").unwrap()).unwrap();
        assert_eq!(s, f.value(&[0, 1]) + f.value(&[1, 0]));

        assert!(birkhoff_sum(&f, &Word::parse_digits("0").unwrap()).is_err());
    }

    #[test]
    fn table_validation() {
        let g = SftModel::golden_mean();
        let ok = vec![
            (Word::parse_digits("00").unwrap(), 1.0),
            (Word::parse_digits("01").unwrap(), 2.0),
            (Word::parse_digits("10").unwrap(), 3.0),
        ];
        assert!(LocallyConstantFn::from_table(&g, 2, ok.clone()).is_ok());
        let mut missing = ok.clone();
        missing.pop();
        assert!(LocallyConstantFn::from_table(&g, 2, missing).is_err());
        let mut forbidden = ok.clone();
        forbidden.push((Word::parse_digits("11").unwrap(), 0.0));
        assert!(LocallyConstantFn::from_table(&g, 2, forbidden).is_err());
        let mut dup = ok;
        dup.push((Word::parse_digits("00").unwrap(), 0.0));
        assert!(LocallyConstantFn::from_table(&g, 2, dup).is_err());
    }

    #[test]
    fn recoding_examples() {
        let full = SftModel::full_shift(2);
        let f1 = LocallyConstantFn::zero(&full);
        let (rec, out) = recode_to_depth2(&full, &[&f1]).unwrap();
        assert!(rec.is_identity());
        assert_eq!(rec.target(), &full);
        assert_eq!(out[0].depth(), 2);

        let f3 = LocallyConstantFn::from_fn(&full, 3, |w| w[0] as f64 - w[2] as f64).unwrap();
        let (rec, _) = recode_to_depth2(&full, &[&f3]).unwrap();
        assert_eq!(rec.target().alphabet_size(), 4);
        assert_eq!(rec.target().edges().len(), 8);

        let g = BlockRecoding::new(&SftModel::golden_mean(), 2).unwrap();
        let blocks: Vec<String> = (0..3).map(|s| g.block(s).to_string()).collect();
        assert_eq!(blocks, ["00", "01", "10"]);
        // 00->00, 00->01, 01->10, 10->00, 10->01
        assert_eq!(g.target().edges(), vec![(0, 0), (0, 1), (1, 2), (2, 0), (2, 1)]);
    }

    #[test]
    fn recoding_preserves_sums_and_round_trips() {
        let g = SftModel::golden_mean();
        let f = LocallyConstantFn::from_fn(&g, 3, |w| (w[0] + 2 * w[1] + 4 * w[2]) as f64 * 0.37 - 1.0).unwrap();
        let (rec, out) = recode_to_depth2(&g, &[&f]).unwrap();
        for n in 3..=9 {
            for w in enumerate_words(&g, n) {
                let e = rec.encode(&w).unwrap();
                assert_eq!(rec.decode(&e).unwrap(), w);
                let a = birkhoff_sum(&f, &w).unwrap();
                let b = birkhoff_sum(&out[0], &e).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
            assert_eq!(
                enumerate_words(rec.target(), n - 1).count(),
                enumerate_words(&g, n).count()
            );
        }
    }

    #[test]
    fn bowen_examples() {
        let full = SftModel::full_shift(2);
        let chi0 = LocallyConstantFn::cylinder_indicator(&full, &[0]).unwrap();
        assert_eq!(bowen_variation(&full, &chi0, 5).unwrap(), 0.0);
        let c = LocallyConstantFn::constant(&full, 2, 1.5).unwrap();
        for n in 1..6 {
            assert_eq!(bowen_variation(&full, &c, n).unwrap(), 0.0);
        }
        let f3 = LocallyConstantFn::from_fn(&full, 3, |w| w[2] as f64 * 0.75).unwrap();
        assert_eq!(bowen_variation(&full, &f3, 2).unwrap(), 0.75);
        assert_eq!(bowen_variation(&full, &f3, 3).unwrap(), 0.0);
    }

    #[test]
    fn prefix_enumeration() {
        let g = SftModel::golden_mean();
        let w: Vec<String> = enumerate_words_with_prefix(&g, &[1], 4)
            .map(|w| w.to_string())
            .collect();
        assert_eq!(w, ["1000", "1001", "1010"]);
        assert_eq!(enumerate_words_with_prefix(&g, &[1, 1], 4).count(), 0);
    }
}
