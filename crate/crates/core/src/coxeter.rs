//! Finite Coxeter systems `(W, I)`.
//!
//! Groups are enumerated from their presentation by coset enumeration over the
//! trivial subgroup. Every element is then named by its shortlex-least reduced
//! word, which doubles as a stable identifier: element ids are assigned in
//! shortlex order, so id 0 is the identity and ids never depend on hash order.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Default cap on the number of enumerated elements.
pub const DEFAULT_ELEMENT_BOUND: usize = 100_000;

/// Errors raised while building or querying a Coxeter system.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoxeterError {
    #[error("invalid Coxeter matrix: {0}")]
    InvalidMatrix(String),
    #[error("enumeration exceeded the bound of {bound} elements")]
    BoundExceeded { bound: usize },
    #[error("generator index {index} out of range for rank {rank}")]
    InvalidGenerator { index: usize, rank: usize },
    #[error("elements belong to different Coxeter systems")]
    SystemMismatch,
}

/// Symmetric matrix of orders `m(i, j)` of products of generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoxeterMatrix {
    rank: usize,
    entries: Vec<u32>,
}

impl CoxeterMatrix {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self, CoxeterError> {
        let rank = rows.len();
        if rank == 0 {
            return Err(CoxeterError::InvalidMatrix("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(rank * rank);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != rank {
                return Err(CoxeterError::InvalidMatrix(alloc::format!(
                    "row {i} has {} entries, expected {rank}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        for i in 0..rank {
            for j in 0..rank {
                let m = entries[i * rank + j];
                if i == j && m != 1 {
                    return Err(CoxeterError::InvalidMatrix(alloc::format!(
                        "diagonal entry ({i},{i}) is {m}, expected 1"
                    )));
                }
                if i != j && m < 2 {
                    return Err(CoxeterError::InvalidMatrix(alloc::format!(
                        "off-diagonal entry ({i},{j}) is {m}, expected at least 2"
                    )));
                }
                if m != entries[j * rank + i] {
                    return Err(CoxeterError::InvalidMatrix(alloc::format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(CoxeterMatrix { rank, entries })
    }

    /// Type `A_n`: a path with all bonds of order 3.
    pub fn type_a(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i.abs_diff(j) == 1 { 3 } else { 2 })
    }

    /// Dihedral type `I_2(m)`.
    pub fn dihedral(m: u32) -> Self {
        Self::from_fn(2, |_, _| m)
    }

    /// Type `B_n = C_n`.
    pub fn type_b(n: usize) -> Self {
        Self::from_fn(n, |i, j| match i.abs_diff(j) {
            1 if i.max(j) == n - 1 => 4,
            1 => 3,
            _ => 2,
        })
    }

    fn from_fn(rank: usize, f: impl Fn(usize, usize) -> u32) -> Self {
        let mut entries = vec![0; rank * rank];
        for i in 0..rank {
            for j in 0..rank {
                entries[i * rank + j] = if i == j { 1 } else { f(i, j) };
            }
        }
        CoxeterMatrix { rank, entries }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.rank + j]
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.entries.chunks(self.rank).map(|r| r.to_vec()).collect()
    }

    /// Connected components of the Coxeter graph (edges where `m >= 3`).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.rank];
        let mut out = Vec::new();
        for start in 0..self.rank {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut k = 0;
            while k < comp.len() {
                let i = comp[k];
                for j in 0..self.rank {
                    if !seen[j] && self.get(i, j) >= 3 {
                        seen[j] = true;
                        comp.push(j);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn fingerprint(&self) -> u64 {
        // FNV-1a over the entries; only used to tag elements with their system.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &e in core::iter::once(&(self.rank as u32)).chain(self.entries.iter()) {
            for b in e.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Parses one row per line of whitespace-separated integers. Blank lines and
/// lines starting with `#` are skipped.
impl FromStr for CoxeterMatrix {
    type Err = CoxeterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut rows = Vec::new();
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u32>().map_err(|_| {
                        CoxeterError::InvalidMatrix(alloc::format!("bad entry {tok:?}"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        CoxeterMatrix::new(rows)
    }
}

/// Index of a group element inside its [`CoxeterSystem`].
pub type ElementId = u32;

/// A group element tagged with the system it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoxeterElement {
    system: u64,
    id: ElementId,
}

impl CoxeterElement {
    pub fn id(self) -> ElementId {
        self.id
    }
}

/// A fully enumerated finite Coxeter group.
#[derive(Debug, Clone)]
pub struct CoxeterSystem {
    matrix: CoxeterMatrix,
    tag: u64,
    /// `right[w * rank + s] = w s`.
    right: Vec<ElementId>,
    /// `left[w * rank + s] = s w`.
    left: Vec<ElementId>,
    words: Vec<Vec<u8>>,
    lengths: Vec<u32>,
    inverse: Vec<ElementId>,
    longest: ElementId,
}

impl CoxeterSystem {
    /// Enumerates `W` from its Coxeter presentation.
    pub fn build(matrix: CoxeterMatrix, element_bound: usize) -> Result<Self, CoxeterError> {
        let rank = matrix.rank();
        let table = todd_coxeter(&matrix, element_bound)?;
        let order = table.len() / rank;

        // Relabel cosets in shortlex order of their least reduced word.
        let mut new_id = vec![u32::MAX; order];
        let mut old_of = Vec::with_capacity(order);
        let mut words: Vec<Vec<u8>> = Vec::with_capacity(order);
        let mut lengths = Vec::with_capacity(order);
        new_id[0] = 0;
        old_of.push(0usize);
        words.push(Vec::new());
        lengths.push(0u32);
        let mut k = 0;
        while k < old_of.len() {
            let old = old_of[k];
            for s in 0..rank {
                let next = table[old * rank + s] as usize;
                if new_id[next] == u32::MAX {
                    new_id[next] = old_of.len() as u32;
                    old_of.push(next);
                    let mut w = words[k].clone();
                    w.push(s as u8);
                    words.push(w);
                    lengths.push(lengths[k] + 1);
                }
            }
            k += 1;
        }
        debug_assert_eq!(old_of.len(), order);

        let mut right = vec![0; order * rank];
        for (new, &old) in old_of.iter().enumerate() {
            for s in 0..rank {
                right[new * rank + s] = new_id[table[old * rank + s] as usize];
            }
        }

        let fold = |word: &[u8]| -> ElementId {
            word.iter()
                .fold(0, |w, &s| right[w as usize * rank + s as usize])
        };
        let inverse: Vec<ElementId> = words
            .iter()
            .map(|w| {
                let rev: Vec<u8> = w.iter().rev().copied().collect();
                fold(&rev)
            })
            .collect();
        let mut left = vec![0; order * rank];
        for w in 0..order {
            for s in 0..rank {
                // s w = (w^{-1} s)^{-1}
                let t = right[inverse[w] as usize * rank + s];
                left[w * rank + s] = inverse[t as usize];
            }
        }

        let max_len = *lengths.iter().max().unwrap_or(&0);
        let longest = lengths.iter().position(|&l| l == max_len).unwrap_or(0) as ElementId;

        Ok(CoxeterSystem {
            tag: matrix.fingerprint(),
            matrix,
            right,
            left,
            words,
            lengths,
            inverse,
            longest,
        })
    }

    pub fn matrix(&self) -> &CoxeterMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    pub fn order(&self) -> usize {
        self.words.len()
    }

    pub fn identity(&self) -> CoxeterElement {
        self.element(0)
    }

    pub fn generator(&self, s: usize) -> CoxeterElement {
        self.element(self.right[s])
    }

    pub fn longest(&self) -> CoxeterElement {
        self.element(self.longest)
    }

    /// Wraps a raw id. Panics when `id` is out of range.
    pub fn element(&self, id: ElementId) -> CoxeterElement {
        assert!((id as usize) < self.order(), "element id {id} out of range");
        CoxeterElement {
            system: self.tag,
            id,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = CoxeterElement> + '_ {
        (0..self.order() as ElementId).map(|id| self.element(id))
    }

    pub fn length(&self, w: CoxeterElement) -> u32 {
        self.lengths[w.id as usize]
    }

    /// Shortlex-least reduced word of `w`.
    pub fn word(&self, w: CoxeterElement) -> &[u8] {
        &self.words[w.id as usize]
    }

    pub fn inverse(&self, w: CoxeterElement) -> CoxeterElement {
        self.element(self.inverse[w.id as usize])
    }

    /// `w s`.
    pub fn mul_gen(&self, w: CoxeterElement, s: usize) -> CoxeterElement {
        self.element(self.right[w.id as usize * self.rank() + s])
    }

    /// `s w`.
    pub fn gen_mul(&self, s: usize, w: CoxeterElement) -> CoxeterElement {
        self.element(self.left[w.id as usize * self.rank() + s])
    }

    pub fn owns(&self, w: CoxeterElement) -> bool {
        w.system == self.tag && (w.id as usize) < self.order()
    }

    pub fn multiply(
        &self,
        w: CoxeterElement,
        v: CoxeterElement,
    ) -> Result<CoxeterElement, CoxeterError> {
        if !self.owns(w) || !self.owns(v) {
            return Err(CoxeterError::SystemMismatch);
        }
        Ok(self
            .word(v)
            .iter()
            .fold(w, |acc, &s| self.mul_gen(acc, s as usize)))
    }

    /// Evaluates a word in the generators and returns its canonical form.
    pub fn reduce_word(&self, word: &[usize]) -> Result<CoxeterElement, CoxeterError> {
        let rank = self.rank();
        let mut w = self.identity();
        for &s in word {
            if s >= rank {
                return Err(CoxeterError::InvalidGenerator { index: s, rank });
            }
            w = self.mul_gen(w, s);
        }
        Ok(w)
    }

    /// A word is reduced iff its length equals the length of its product.
    pub fn is_reduced(&self, word: &[usize]) -> Result<bool, CoxeterError> {
        Ok(self.length(self.reduce_word(word)?) as usize == word.len())
    }

    /// The generator `t` with `w0 s w0 = t`.
    pub fn longest_conjugate(&self, s: usize) -> usize {
        let w0 = self.longest();
        let c = self.mul_gen(w0, s);
        let c = self.multiply(c, w0).expect("same system");
        (0..self.rank())
            .find(|&t| self.generator(t) == c)
            .expect("w0 normalises the generating set")
    }

    /// Number of elements of each length, indexed by length.
    pub fn poincare_polynomial(&self) -> Vec<u64> {
        let max = self.lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut coeffs = vec![0u64; max + 1];
        for &l in &self.lengths {
            coeffs[l as usize] += 1;
        }
        coeffs
    }

    /// True when `I` splits into two nonempty mutually commuting subsets.
    pub fn is_decomposable(&self) -> bool {
        self.matrix.components().len() > 1
    }

    /// Full multiplication table, `table[w][v] = w v`.
    pub fn product_table(&self) -> Vec<Vec<ElementId>> {
        let all: Vec<_> = self.elements().collect();
        all.iter()
            .map(|&w| {
                all.iter()
                    .map(|&v| self.multiply(w, v).expect("same system").id)
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for CoxeterMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.entries.chunks(self.rank) {
            let mut first = true;
            for e in row {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{e}")?;
                first = false;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

const UNDEF: u32 = u32::MAX;

/// HLT coset enumeration of the trivial subgroup. Every generator is an
/// involution, so a single column per generator suffices and the table is
/// kept symmetric: `t[c][s] = d` iff `t[d][s] = c`.
///
/// Returns the compacted right-regular table with coset 0 as the identity.
fn todd_coxeter(matrix: &CoxeterMatrix, element_bound: usize) -> Result<Vec<u32>, CoxeterError> {
    let rank = matrix.rank();
    let mut relators: Vec<Vec<usize>> = Vec::new();
    for i in 0..rank {
        for j in i + 1..rank {
            let m = matrix.get(i, j) as usize;
            let mut r = Vec::with_capacity(2 * m);
            for _ in 0..m {
                r.push(i);
                r.push(j);
            }
            relators.push(r);
        }
    }

    let working_limit = element_bound.saturating_mul(8).max(1024);
    let mut tc = CosetTable {
        rank,
        table: vec![UNDEF; rank],
        parent: vec![0],
        queue: VecDeque::new(),
        limit: working_limit,
    };

    let mut c = 0usize;
    while c < tc.parent.len() {
        if tc.alive(c) {
            for r in &relators {
                tc.scan_and_fill(c, r)?;
                if !tc.alive(c) {
                    break;
                }
            }
            if tc.alive(c) {
                for s in 0..rank {
                    if tc.table[c * rank + s] == UNDEF {
                        tc.define(c, s)?;
                    }
                }
            }
        }
        c += 1;
    }

    let live: Vec<usize> = (0..tc.parent.len()).filter(|&c| tc.alive(c)).collect();
    if live.len() > element_bound {
        return Err(CoxeterError::BoundExceeded {
            bound: element_bound,
        });
    }
    let mut renum = vec![UNDEF; tc.parent.len()];
    for (k, &c) in live.iter().enumerate() {
        renum[c] = k as u32;
    }
    let mut out = vec![0u32; live.len() * rank];
    for (k, &c) in live.iter().enumerate() {
        for s in 0..rank {
            out[k * rank + s] = renum[tc.table[c * rank + s] as usize];
        }
    }
    Ok(out)
}

struct CosetTable {
    rank: usize,
    table: Vec<u32>,
    parent: Vec<u32>,
    queue: VecDeque<usize>,
    limit: usize,
}

impl CosetTable {
    fn alive(&self, c: usize) -> bool {
        self.parent[c] as usize == c
    }

    fn get(&self, c: usize, s: usize) -> u32 {
        self.table[c * self.rank + s]
    }

    fn set(&mut self, c: usize, s: usize, d: usize) {
        self.table[c * self.rank + s] = d as u32;
        self.table[d * self.rank + s] = c as u32;
    }

    fn define(&mut self, c: usize, s: usize) -> Result<usize, CoxeterError> {
        let d = self.parent.len();
        if d >= self.limit {
            return Err(CoxeterError::BoundExceeded {
                bound: self.limit / 8,
            });
        }
        self.parent.push(d as u32);
        self.table.extend(core::iter::repeat_n(UNDEF, self.rank));
        self.set(c, s, d);
        Ok(d)
    }

    fn scan_and_fill(&mut self, c: usize, r: &[usize]) -> Result<(), CoxeterError> {
        let mut f = c;
        let mut b = c;
        let mut i = 0usize;
        let mut j = r.len() as isize - 1;
        loop {
            while (i as isize) <= j && self.get(f, r[i]) != UNDEF {
                f = self.get(f, r[i]) as usize;
                i += 1;
            }
            if (i as isize) > j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            while j >= i as isize && self.get(b, r[j as usize]) != UNDEF {
                b = self.get(b, r[j as usize]) as usize;
                j -= 1;
            }
            if j < i as isize {
                self.coincidence(f, b);
                return Ok(());
            } else if j == i as isize {
                self.set(f, r[i], b);
                return Ok(());
            } else {
                self.define(f, r[i])?;
            }
        }
    }

    fn rep(&mut self, c: usize) -> usize {
        let mut root = c;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut x = c;
        while self.parent[x] as usize != root {
            let next = self.parent[x] as usize;
            self.parent[x] = root as u32;
            x = next;
        }
        root
    }

    fn merge(&mut self, a: usize, b: usize) {
        let a = self.rep(a);
        let b = self.rep(b);
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi] = lo as u32;
            self.queue.push_back(hi);
        }
    }

    fn coincidence(&mut self, a: usize, b: usize) {
        self.merge(a, b);
        while let Some(e) = self.queue.pop_front() {
            for s in 0..self.rank {
                let f = self.get(e, s);
                if f == UNDEF {
                    continue;
                }
                let f = f as usize;
                self.table[f * self.rank + s] = UNDEF;
                let e1 = self.rep(e);
                let f1 = self.rep(f);
                let e1s = self.get(e1, s);
                let f1s = self.get(f1, s);
                if e1s != UNDEF {
                    self.merge(f1, e1s as usize);
                } else if f1s != UNDEF {
                    self.merge(e1, f1s as usize);
                } else {
                    self.set(e1, s, f1);
                }
            }
        }
    }
}
