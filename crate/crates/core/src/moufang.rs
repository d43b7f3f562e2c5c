//! Root groups of finite rank-2 buildings computed as explicit chamber
//! permutations, the Moufang condition, mu-elements, commutator relations,
//! and valuation filtrations of root groups over local fields.
//!
//! Permutations act on the right: `x^(ab) = (x^a)^b`, `a^b = b^{-1} a b`,
//! `[a, b] = a^{-1} b^{-1} a b`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::chambers::{ChamberComplex, ChamberError, ChamberId, PanelRef};
use crate::localfield::{Field, FieldElement, FieldKind};

pub const DEFAULT_BUDGET: u64 = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoufangError {
    #[error("root groups are only computed for rank 2 (got rank {0})")]
    NotRank2(usize),
    #[error("automorphism search exceeded its budget of {0} nodes")]
    SearchBudgetExceeded(u64),
    #[error("parametrization needs a prime field, got q = {0}")]
    NotPrimeField(usize),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("filtrations need a local field")]
    NotLocal,
    #[error(transparent)]
    Chamber(#[from] ChamberError),
}

/// A type-preserving permutation of chambers; `perm[x]` is the image of `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Automorphism {
    perm: Vec<ChamberId>,
}

impl Automorphism {
    pub fn identity(n: usize) -> Self {
        Automorphism {
            perm: (0..n as ChamberId).collect(),
        }
    }

    pub fn from_perm(perm: Vec<ChamberId>) -> Self {
        Automorphism { perm }
    }

    pub fn perm(&self) -> &[ChamberId] {
        &self.perm
    }

    pub fn apply(&self, x: ChamberId) -> ChamberId {
        self.perm[x as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.perm
            .iter()
            .enumerate()
            .all(|(i, &x)| i as ChamberId == x)
    }

    /// `self` then `other`.
    pub fn then(&self, other: &Automorphism) -> Automorphism {
        Automorphism {
            perm: self.perm.iter().map(|&x| other.apply(x)).collect(),
        }
    }

    pub fn inverse(&self) -> Automorphism {
        let mut perm = vec![0; self.perm.len()];
        for (i, &x) in self.perm.iter().enumerate() {
            perm[x as usize] = i as ChamberId;
        }
        Automorphism { perm }
    }

    pub fn pow(&self, k: usize) -> Automorphism {
        (0..k).fold(Automorphism::identity(self.perm.len()), |acc, _| {
            acc.then(self)
        })
    }

    /// `b^{-1} self b`.
    pub fn conjugate_by(&self, b: &Automorphism) -> Automorphism {
        b.inverse().then(self).then(b)
    }

    /// `[self, b] = self^{-1} b^{-1} self b`.
    pub fn commutator(&self, b: &Automorphism) -> Automorphism {
        self.inverse().then(&b.inverse()).then(self).then(b)
    }

    pub fn order(&self) -> usize {
        let mut k = 1;
        let mut x = self.clone();
        while !x.is_identity() {
            x = x.then(self);
            k += 1;
        }
        k
    }
}

/// Backtracking search for type-preserving automorphisms under pinning
/// constraints.
#[derive(Debug, Clone)]
pub struct AutomorphismSearch<'a> {
    cx: &'a ChamberComplex,
    targets: Vec<Option<ChamberId>>,
    fixed_panels: Vec<PanelRef>,
    budget: u64,
}

struct SearchState {
    img: Vec<ChamberId>,
    used: Vec<bool>,
    pmap: Vec<Vec<u32>>,
    pinv: Vec<Vec<u32>>,
    nodes: u64,
    found: Vec<Automorphism>,
}

const UNSET: u32 = u32::MAX;

impl<'a> AutomorphismSearch<'a> {
    pub fn new(cx: &'a ChamberComplex) -> Self {
        AutomorphismSearch {
            cx,
            targets: vec![None; cx.len()],
            fixed_panels: Vec::new(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn fix_chamber(mut self, c: ChamberId) -> Self {
        self.targets[c as usize] = Some(c);
        self
    }

    pub fn fix_chambers(mut self, cs: impl IntoIterator<Item = ChamberId>) -> Self {
        for c in cs {
            self.targets[c as usize] = Some(c);
        }
        self
    }

    /// Requires the panel to be mapped onto itself (not pointwise).
    pub fn fix_panel(mut self, p: PanelRef) -> Self {
        self.fixed_panels.push(p);
        self
    }

    pub fn map(mut self, from: ChamberId, to: ChamberId) -> Self {
        self.targets[from as usize] = Some(to);
        self
    }

    pub fn budget(mut self, nodes: u64) -> Self {
        self.budget = nodes;
        self
    }

    /// All solutions, or at most `limit` of them.
    pub fn run(&self, limit: Option<usize>) -> Result<Vec<Automorphism>, MoufangError> {
        let cx = self.cx;
        let n = cx.len();
        if n == 0 {
            return Ok(vec![Automorphism::identity(0)]);
        }
        let order = search_order(cx, &self.targets);
        if order.len() != n {
            return Err(MoufangError::Chamber(ChamberError::NotConnected));
        }
        let mut st = SearchState {
            img: vec![UNSET; n],
            used: vec![false; n],
            pmap: (0..cx.rank())
                .map(|i| vec![UNSET; cx.panel_count(i)])
                .collect(),
            pinv: (0..cx.rank())
                .map(|i| vec![UNSET; cx.panel_count(i)])
                .collect(),
            nodes: 0,
            found: Vec::new(),
        };
        for p in &self.fixed_panels {
            st.pmap[p.kind][p.index as usize] = p.index;
            st.pinv[p.kind][p.index as usize] = p.index;
        }
        self.descend(0, &order, &mut st, limit)?;
        Ok(st.found)
    }

    fn descend(
        &self,
        pos: usize,
        order: &[(ChamberId, ChamberId, usize)],
        st: &mut SearchState,
        limit: Option<usize>,
    ) -> Result<(), MoufangError> {
        if limit.is_some_and(|l| st.found.len() >= l) {
            return Ok(());
        }
        st.nodes += 1;
        if st.nodes > self.budget {
            return Err(MoufangError::SearchBudgetExceeded(self.budget));
        }
        let cx = self.cx;
        if pos == order.len() {
            st.found.push(Automorphism::from_perm(st.img.clone()));
            return Ok(());
        }
        let (x, parent, kind) = order[pos];
        let candidates: Vec<ChamberId> = match self.targets[x as usize] {
            Some(t) => vec![t],
            None if kind == usize::MAX => cx.chambers().collect(),
            None => cx
                .panel(cx.panel_containing(st.img[parent as usize], kind))
                .to_vec(),
        };
        for cand in candidates {
            if st.used[cand as usize] {
                continue;
            }
            if kind != usize::MAX {
                let pp = cx.panel_containing(st.img[parent as usize], kind);
                if cx.panel_containing(cand, kind) != pp {
                    continue;
                }
            }
            let consistent = (0..cx.rank()).all(|t| {
                let (from, to) = (
                    cx.panel_containing(x, t).index as usize,
                    cx.panel_containing(cand, t).index,
                );
                match st.pmap[t][from] {
                    UNSET => st.pinv[t][to as usize] == UNSET,
                    m => m == to,
                }
            });
            if !consistent
                || !order[..pos].iter().all(|&(y, _, _)| {
                    cx.w_distance_id(x, y) == cx.w_distance_id(cand, st.img[y as usize])
                })
            {
                continue;
            }
            let mut trail = Vec::new();
            for t in 0..cx.rank() {
                let from = cx.panel_containing(x, t).index as usize;
                let to = cx.panel_containing(cand, t).index;
                if st.pmap[t][from] == UNSET {
                    st.pmap[t][from] = to;
                    st.pinv[t][to as usize] = from as u32;
                    trail.push((t, from, to));
                }
            }
            st.img[x as usize] = cand;
            st.used[cand as usize] = true;
            self.descend(pos + 1, order, st, limit)?;
            st.used[cand as usize] = false;
            st.img[x as usize] = UNSET;
            for (t, from, to) in trail {
                st.pmap[t][from] = UNSET;
                st.pinv[t][to as usize] = UNSET;
            }
        }
        Ok(())
    }
}

/// Pinned chambers first; after that the chamber with the most panels
/// already reached, ties going to the panel reached most recently, so the
/// order follows galleries and closes circuits early. Each entry is
/// `(chamber, reached from, panel type)`, type `usize::MAX` for a start.
fn search_order(
    cx: &ChamberComplex,
    targets: &[Option<ChamberId>],
) -> Vec<(ChamberId, ChamberId, usize)> {
    let n = cx.len();
    let mut order: Vec<(ChamberId, ChamberId, usize)> = Vec::new();
    let mut placed = vec![false; n];
    // per type and panel: (position of the first chamber placed in it, that chamber)
    let mut touched: Vec<Vec<Option<(usize, ChamberId)>>> = (0..cx.rank())
        .map(|i| vec![None; cx.panel_count(i)])
        .collect();
    let place = |c: ChamberId,
                 parent: ChamberId,
                 kind: usize,
                 order: &mut Vec<(ChamberId, ChamberId, usize)>,
                 placed: &mut [bool],
                 touched: &mut [Vec<Option<(usize, ChamberId)>>]| {
        placed[c as usize] = true;
        let at = order.len();
        order.push((c, parent, kind));
        for (t, row) in touched.iter_mut().enumerate() {
            row[cx.panel_containing(c, t).index as usize].get_or_insert((at, c));
        }
    };
    for c in cx.chambers().filter(|&c| targets[c as usize].is_some()) {
        place(c, c, usize::MAX, &mut order, &mut placed, &mut touched);
    }
    if order.is_empty() && n > 0 {
        place(0, 0, usize::MAX, &mut order, &mut placed, &mut touched);
    }
    loop {
        let mut best: Option<((usize, usize), ChamberId, ChamberId, usize)> = None;
        for c in cx.chambers().filter(|&c| !placed[c as usize]) {
            let mut score = (0, 0);
            let mut via = None;
            for (t, row) in touched.iter().enumerate() {
                if let Some((at, parent)) = row[cx.panel_containing(c, t).index as usize] {
                    score.0 += 1;
                    if via.is_none() || at > score.1 {
                        score.1 = at;
                        via = Some((parent, t));
                    }
                }
            }
            if let Some((parent, t)) = via {
                if best.is_none_or(|b| score > b.0) {
                    best = Some((score, c, parent, t));
                }
            }
        }
        match best {
            Some((_, c, parent, t)) => place(c, parent, t, &mut order, &mut placed, &mut touched),
            None => break,
        }
    }
    order
}

/// The full automorphism group (type-preserving).
pub fn automorphism_group(cx: &ChamberComplex) -> Result<Vec<Automorphism>, MoufangError> {
    AutomorphismSearch::new(cx).run(None)
}

/// An apartment of a generalized `n`-gon as a circuit `e_1, ..., e_{2n}`;
/// chamber `e_k` is the edge `{k-1, k}` and panel `v_k` the vertex `k`
/// shared by `e_k` and `e_{k+1}`. `e_1` is the least chamber and `e_2` the
/// smaller of its two neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledApartment {
    n: usize,
    edges: Vec<ChamberId>,
    vertices: Vec<PanelRef>,
}

fn shared_panel(cx: &ChamberComplex, a: ChamberId, b: ChamberId) -> Option<PanelRef> {
    (0..cx.rank())
        .map(|t| cx.panel_containing(a, t))
        .find(|&p| cx.panel_containing(b, p.kind) == p)
}

impl LabeledApartment {
    pub fn new(cx: &ChamberComplex, chambers: &[ChamberId]) -> Result<Self, MoufangError> {
        if cx.rank() != 2 {
            return Err(MoufangError::NotRank2(cx.rank()));
        }
        let n = cx.coxeter().matrix().get(0, 1) as usize;
        let set: BTreeSet<ChamberId> = chambers.iter().copied().collect();
        let bad = || MoufangError::NotFound(format!("{chambers:?} is not a 2n-circuit"));
        if set.len() != 2 * n {
            return Err(bad());
        }
        let nbrs = |c: ChamberId| -> Vec<ChamberId> {
            let mut v: Vec<ChamberId> = (0..2)
                .flat_map(|t| {
                    cx.neighbours(c, t)
                        .filter(|d| set.contains(d))
                        .collect::<Vec<_>>()
                })
                .collect();
            v.sort_unstable();
            v
        };
        let first = *set.iter().next().unwrap();
        let start = nbrs(first);
        if start.len() != 2 {
            return Err(bad());
        }
        let mut edges = vec![first, start[0]];
        while edges.len() < 2 * n {
            let cur = *edges.last().unwrap();
            let prev = edges[edges.len() - 2];
            let next: Vec<ChamberId> = nbrs(cur).into_iter().filter(|&d| d != prev).collect();
            if next.len() != 1 || edges.contains(&next[0]) {
                return Err(bad());
            }
            edges.push(next[0]);
        }
        let vertices = (0..2 * n)
            .map(|k| shared_panel(cx, edges[k], edges[(k + 1) % (2 * n)]).ok_or_else(bad))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LabeledApartment { n, edges, vertices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn wrap(&self, k: i64) -> usize {
        (k - 1).rem_euclid(2 * self.n as i64) as usize
    }

    /// `e_k`, indices modulo `2n`.
    pub fn edge(&self, k: i64) -> ChamberId {
        self.edges[self.wrap(k)]
    }

    /// `v_k`, indices modulo `2n`.
    pub fn vertex(&self, k: i64) -> PanelRef {
        self.vertices[self.wrap(k)]
    }

    pub fn chambers(&self) -> &[ChamberId] {
        &self.edges
    }

    /// Chambers `e_{i+1}, ..., e_{i+n}` of the root `α_i`.
    pub fn root_chambers(&self, i: i64) -> Vec<ChamberId> {
        (1..=self.n as i64).map(|k| self.edge(i + k)).collect()
    }

    /// Panels `v_{i+1}, ..., v_{i+n-1}`, those meeting `α_i` in two chambers.
    pub fn root_interior(&self, i: i64) -> Vec<PanelRef> {
        (1..self.n as i64).map(|k| self.vertex(i + k)).collect()
    }

    /// Whether `g` maps the circuit onto itself as `v_k -> v_{2i-k}`.
    pub fn is_reflection(&self, g: &Automorphism, i: i64) -> bool {
        (1..=2 * self.n as i64).all(|k| g.apply(self.edge(k)) == self.edge(2 * i + 1 - k))
    }
}

/// `U_α` for the root with chamber list `root` (a gallery of length `n`):
/// automorphisms fixing every chamber of each panel that meets the root in
/// two chambers.
pub fn root_group(
    cx: &ChamberComplex,
    root: &[ChamberId],
) -> Result<Vec<Automorphism>, MoufangError> {
    let mut search = AutomorphismSearch::new(cx);
    for w in root.windows(2) {
        let p = shared_panel(cx, w[0], w[1])
            .ok_or_else(|| MoufangError::NotFound(format!("{root:?} is not a gallery")))?;
        search = search.fix_chambers(cx.panel(p).iter().copied());
    }
    search.run(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MoufangReport {
    pub roots_checked: usize,
    /// Number of apartments containing a root, mapped to how many roots have
    /// that many.
    pub orbit_counts: BTreeMap<usize, usize>,
    pub group_orders: BTreeMap<usize, usize>,
    pub failures: Vec<String>,
}

impl MoufangReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.roots_checked > 0
    }
}

/// Checks for every root that `U_α` acts simply transitively on the
/// apartments containing it.
pub fn check_moufang(cx: &ChamberComplex) -> Result<MoufangReport, MoufangError> {
    if cx.rank() != 2 {
        return Err(MoufangError::NotRank2(cx.rank()));
    }
    let mut report = MoufangReport::default();
    if let Some(p) = cx.all_panels().find(|&p| cx.panel(p).len() < 3) {
        report.failures.push(format!(
            "not thick: panel {p:?} has {} chambers",
            cx.panel(p).len()
        ));
        return Ok(report);
    }
    let apartments = cx.all_apartments();
    let mut roots: BTreeSet<Vec<ChamberId>> = BTreeSet::new();
    let mut galleries: Vec<Vec<ChamberId>> = Vec::new();
    for a in &apartments {
        let lab = LabeledApartment::new(cx, a)?;
        for i in 1..=2 * lab.n() as i64 {
            let gallery = lab.root_chambers(i);
            let mut key = gallery.clone();
            key.sort_unstable();
            if roots.insert(key) {
                galleries.push(gallery);
            }
        }
    }
    for gallery in &galleries {
        report.roots_checked += 1;
        let containing: BTreeSet<&Vec<ChamberId>> = apartments
            .iter()
            .filter(|a| gallery.iter().all(|c| a.binary_search(c).is_ok()))
            .collect();
        let group = root_group(cx, gallery)?;
        *report.orbit_counts.entry(containing.len()).or_default() += 1;
        *report.group_orders.entry(group.len()).or_default() += 1;
        let reference = containing
            .iter()
            .next()
            .expect("the root lies in an apartment");
        let mut orbit: BTreeSet<Vec<ChamberId>> = BTreeSet::new();
        for u in &group {
            let mut image: Vec<ChamberId> = reference.iter().map(|&c| u.apply(c)).collect();
            image.sort_unstable();
            orbit.insert(image);
        }
        let all: BTreeSet<Vec<ChamberId>> = containing.iter().map(|a| (*a).clone()).collect();
        if orbit != all {
            report.failures.push(format!(
                "root {gallery:?}: orbit of size {} but {} apartments contain it",
                orbit.len(),
                all.len()
            ));
        } else if group.len() != all.len() {
            report.failures.push(format!(
                "root {gallery:?}: |U| = {} is not simply transitive on {} apartments",
                group.len(),
                all.len()
            ));
        }
    }
    Ok(report)
}

/// The root groups `U_i` of a labeled apartment and the parametrization
/// `t -> x_i(t)` over a prime field.
#[derive(Debug, Clone)]
pub struct RootGroupSystem<'a> {
    cx: &'a ChamberComplex,
    sigma: LabeledApartment,
    groups: Vec<Vec<Automorphism>>,
}

impl<'a> RootGroupSystem<'a> {
    /// Uses the first apartment of the complex (in sorted order).
    pub fn new(cx: &'a ChamberComplex) -> Result<Self, MoufangError> {
        let a = cx
            .all_apartments()
            .into_iter()
            .next()
            .ok_or_else(|| MoufangError::NotFound("no apartment".into()))?;
        Self::with_apartment(cx, LabeledApartment::new(cx, &a)?)
    }

    pub fn with_apartment(
        cx: &'a ChamberComplex,
        sigma: LabeledApartment,
    ) -> Result<Self, MoufangError> {
        let groups = (1..=2 * sigma.n() as i64)
            .map(|i| root_group(cx, &sigma.root_chambers(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RootGroupSystem { cx, sigma, groups })
    }

    pub fn apartment(&self) -> &LabeledApartment {
        &self.sigma
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }

    /// `U_i`, indices modulo `2n`.
    pub fn group(&self, i: i64) -> &[Automorphism] {
        &self.groups[(i - 1).rem_euclid(2 * self.n() as i64) as usize]
    }

    fn identity(&self) -> Automorphism {
        Automorphism::identity(self.cx.len())
    }

    /// The unique element of `U_{i+n}^* u U_{i+n}^*` mapping the apartment to
    /// itself by `v_k -> v_{2i-k}`, with the number of such elements found.
    pub fn mu_element(
        &self,
        i: i64,
        u: &Automorphism,
    ) -> Result<(Automorphism, usize), MoufangError> {
        let opposite = self.group(i + self.n() as i64);
        let mut hits = BTreeSet::new();
        for a in opposite.iter().filter(|a| !a.is_identity()) {
            let au = a.then(u);
            for b in opposite.iter().filter(|b| !b.is_identity()) {
                let m = au.then(b);
                if self.sigma.is_reflection(&m, i) {
                    hits.insert(m);
                }
            }
        }
        let count = hits.len();
        hits.into_iter()
            .next()
            .map(|m| (m, count))
            .ok_or_else(|| MoufangError::NotFound(format!("mu-element for U_{i}")))
    }

    /// `x_i(1)`: the element of `U_i` moving `e_i` to the least chamber of
    /// `v_i` other than `e_i`, `e_{i+1}`.
    pub fn unit_element(&self, i: i64) -> Result<Automorphism, MoufangError> {
        let (ei, ej) = (self.sigma.edge(i), self.sigma.edge(i + 1));
        let target = self
            .cx
            .panel(self.sigma.vertex(i))
            .iter()
            .copied()
            .find(|&c| c != ei && c != ej)
            .ok_or_else(|| MoufangError::NotFound(format!("third chamber at v_{i}")))?;
        self.group(i)
            .iter()
            .find(|u| u.apply(ei) == target)
            .cloned()
            .ok_or_else(|| MoufangError::NotFound(format!("x_{i}(1)")))
    }

    /// `t -> x_i(t) = x_i(1)^t` over `F_p`; needs `|U_i| = p` prime.
    pub fn powers(&self, i: i64) -> Result<Vec<Automorphism>, MoufangError> {
        let p = self.group(i).len();
        if !is_prime(p) {
            return Err(MoufangError::NotPrimeField(p));
        }
        let generator = self.unit_element(i)?;
        Ok((0..p).map(|t| generator.pow(t)).collect())
    }

    /// Parametrizations of `U_1` and `U_{n+1}`: `x_1(t) = x_1(1)^t` and
    /// `x_{n+1}(t) = x_1(t)^m` with `m = μ(x_1(1))`.
    pub fn parametrize(&self) -> Result<Parametrization, MoufangError> {
        let x1 = self.powers(1)?;
        let (m, _) = self.mu_element(1, &x1[1])?;
        let xn1 = x1.iter().map(|u| u.conjugate_by(&m)).collect();
        Ok(Parametrization { x1, xn1 })
    }

    /// Searches `μ(x_1(t))` for every `t != 0` and compares with
    /// `x_{n+1}(t^{-1}) x_1(t) x_{n+1}(t^{-1})`.
    pub fn check_mu_formula(&self) -> Result<MuReport, MoufangError> {
        let par = self.parametrize()?;
        let p = par.x1.len();
        let mut report = MuReport {
            checked: 0,
            unique: true,
            formula_holds: true,
            failures: Vec::new(),
        };
        for t in 1..p {
            let tinv = (1..p).find(|s| s * t % p == 1).expect("prime field");
            let (mu, count) = self.mu_element(1, &par.x1[t])?;
            report.checked += 1;
            if count != 1 {
                report.unique = false;
                report
                    .failures
                    .push(format!("t={t}: {count} candidates for mu(x_1(t))"));
            }
            if !self.sigma.is_reflection(&mu, 1) {
                report
                    .failures
                    .push(format!("t={t}: mu does not reflect the apartment"));
            }
            let formula = par.xn1[tinv].then(&par.x1[t]).then(&par.xn1[tinv]);
            if formula != mu {
                report.formula_holds = false;
                report.failures.push(format!(
                    "t={t}: mu(x_1(t)) differs from x_{{n+1}}(1/t) x_1(t) x_{{n+1}}(1/t)"
                ));
            }
        }
        Ok(report)
    }

    /// The set of products `U_i U_{i+1} ... U_{i+j}`.
    pub fn product_set(&self, i: i64, j: i64) -> BTreeSet<Automorphism> {
        let mut acc: BTreeSet<Automorphism> = BTreeSet::from([self.identity()]);
        for k in i..=i + j {
            acc = acc
                .iter()
                .flat_map(|a| self.group(k).iter().map(move |u| a.then(u)))
                .collect();
        }
        acc
    }

    /// Chambers fixed by every element and panels mapped to themselves.
    fn fixed_structure(&self, group: &BTreeSet<Automorphism>) -> (Vec<ChamberId>, Vec<PanelRef>) {
        let cx = self.cx;
        let chambers = cx
            .chambers()
            .filter(|&c| group.iter().all(|g| g.apply(c) == c))
            .collect();
        let panels = cx
            .all_panels()
            .filter(|&p| {
                let c = cx.panel(p)[0];
                group
                    .iter()
                    .all(|g| cx.panel_containing(g.apply(c), p.kind) == p)
            })
            .collect();
        (chambers, panels)
    }

    /// Verifies that `U_i ... U_{i+j}` (`0 <= j <= n-3`, every `i` mod `2n`)
    /// is the pointwise stabilizer of its fixed structure, and that
    /// `[U_i, U_j]` lies in `U_{i+1} ... U_{j-1}` for `1 <= i < j <= n`.
    pub fn check_commutators(&self) -> Result<ContainmentReport, MoufangError> {
        let n = self.n() as i64;
        let mut report = ContainmentReport::default();
        for j in 0..=n - 3 {
            for i in 1..=2 * n {
                let product = self.product_set(i, j);
                let (chambers, panels) = self.fixed_structure(&product);
                let mut search = AutomorphismSearch::new(self.cx).fix_chambers(chambers);
                for p in panels {
                    search = search.fix_panel(p);
                }
                let stabilizer: BTreeSet<Automorphism> = search.run(None)?.into_iter().collect();
                let equal = stabilizer == product;
                if !equal {
                    report.failures.push(format!(
                        "U_{i}..U_{}: product of order {} vs stabilizer of order {}",
                        i + j,
                        product.len(),
                        stabilizer.len()
                    ));
                }
                report.stabilizers.push(StabilizerCheck {
                    i,
                    j,
                    product_order: product.len(),
                    stabilizer_order: stabilizer.len(),
                    equal,
                });
            }
        }
        for i in 1..=n {
            for j in i..=n {
                let target = if j > i + 1 {
                    self.product_set(i + 1, j - i - 2)
                } else {
                    BTreeSet::from([self.identity()])
                };
                let mut commutators = BTreeSet::new();
                for a in self.group(i) {
                    for b in self.group(j) {
                        commutators.insert(a.commutator(b));
                    }
                }
                let contained = commutators.is_subset(&target);
                if !contained {
                    report.failures.push(format!(
                        "[U_{i}, U_{j}] is not inside U_{}..U_{}",
                        i + 1,
                        j - 1
                    ));
                }
                report.commutators.push(CommutatorCheck {
                    i,
                    j,
                    commutators: commutators.len(),
                    target_order: target.len(),
                    contained,
                });
            }
        }
        Ok(report)
    }

    /// For a quadrangle: with `x_2(u) = x_4(u)^m` (`m = μ(x_1(1))`) and
    /// `x_3(t) = x_1(t)^{r^{-1}}` (`r = μ(x_4(1))`), writes each
    /// `[x_1(1), x_4(u)^{-1}]` as `x_2(s) x_3(t)` and records `u -> (s, t)`.
    pub fn fit_quadrangle_identity(&self) -> Result<QuadrangleFit, MoufangError> {
        if self.n() != 4 {
            return Err(MoufangError::NotFound(
                "quadrangle identity needs n = 4".into(),
            ));
        }
        let x1 = self.powers(1)?;
        let x4 = self.powers(4)?;
        let (m, _) = self.mu_element(1, &x1[1])?;
        let (r, _) = self.mu_element(4, &x4[1])?;
        let rinv = r.inverse();
        let x2: Vec<Automorphism> = x4.iter().map(|u| u.conjugate_by(&m)).collect();
        let x3: Vec<Automorphism> = x1.iter().map(|u| u.conjugate_by(&rinv)).collect();
        let p = x1.len();
        let mut fitted = Vec::new();
        let mut failures = Vec::new();
        for u in 0..p {
            let c = x1[1].commutator(&x4[u].inverse());
            let hit = (0..p)
                .flat_map(|s| (0..p).map(move |t| (s, t)))
                .find(|&(s, t)| x2[s].then(&x3[t]) == c);
            match hit {
                Some((s, t)) => fitted.push((u, s, t)),
                None => failures.push(format!("u={u}: commutator not in U_2 U_3")),
            }
        }
        let identity_holds = failures.is_empty() && fitted.iter().all(|&(u, s, _)| u == s);
        Ok(QuadrangleFit {
            fitted,
            identity_holds,
            failures,
        })
    }
}

fn is_prime(p: usize) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

#[derive(Debug, Clone)]
pub struct Parametrization {
    /// `x_1(t)` for `t = 0..p`.
    pub x1: Vec<Automorphism>,
    /// `x_{n+1}(t)`.
    pub xn1: Vec<Automorphism>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuReport {
    pub checked: usize,
    pub unique: bool,
    pub formula_holds: bool,
    pub failures: Vec<String>,
}

impl MuReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerCheck {
    pub i: i64,
    pub j: i64,
    pub product_order: usize,
    pub stabilizer_order: usize,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutatorCheck {
    pub i: i64,
    pub j: i64,
    pub commutators: usize,
    pub target_order: usize,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContainmentReport {
    pub stabilizers: Vec<StabilizerCheck>,
    pub commutators: Vec<CommutatorCheck>,
    pub failures: Vec<String>,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `u -> (s, t)` with `[x_1(1), x_4(u)^{-1}] = x_2(s) x_3(t)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadrangleFit {
    pub fitted: Vec<(usize, usize, usize)>,
    /// `s = u` for every `u`, so `q(u) = t` fits the identity.
    pub identity_holds: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationLevel {
    pub k: i64,
    pub index: usize,
    pub nested: bool,
}

/// `[U_{α,k} : U_{α,k+1}]` for `k` in `from..to`, where the root group is
/// `(F, +)` with `φ(x(t)) = ν(t)`. Cosets are counted among the elements
/// `π^k (d_0 + d_1 π)` by comparing valuations of differences.
pub fn filtration_indices(
    field: &Field,
    from: i64,
    to: i64,
) -> Result<Vec<FiltrationLevel>, MoufangError> {
    if field.kind() == FieldKind::Finite {
        return Err(MoufangError::NotLocal);
    }
    let q = field.residue_size();
    let mut out = Vec::new();
    for k in from..to {
        let mut reps: Vec<FieldElement> = Vec::new();
        let mut nested = true;
        for d0 in 0..q {
            for d1 in 0..q {
                let x = field.from_digits(k, &[d0, d1]);
                if field.valuation(&x) < crate::localfield::Valuation::Finite(k) {
                    nested = false;
                }
                let known = reps.iter().any(|r| {
                    field.valuation(&field.sub(&x, r))
                        >= crate::localfield::Valuation::Finite(k + 1)
                });
                if !known {
                    reps.push(x);
                }
                // the level k+1 part lies in level k
                let y = field.from_digits(k + 1, &[d0]);
                if field.valuation(&y) < crate::localfield::Valuation::Finite(k) {
                    nested = false;
                }
            }
        }
        out.push(FiltrationLevel {
            k,
            index: reps.len(),
            nested,
        });
    }
    Ok(out)
}
