//! Finite chamber systems: flag complexes of `PG(2,q)`, the symplectic
//! quadrangle `W(q)` and full flags of `F_q^{n+1}`, plus thin Coxeter
//! complexes. Provides the W-distance, building-axiom checks, projections,
//! apartments and Schubert cells with their punctured-panel coordinates.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::coxeter::{CoxeterElement, CoxeterError, CoxeterMatrix, CoxeterSystem, ElementId};
use crate::localfield::{prime_power, FiniteField};

pub type ChamberId = u32;

/// Largest complex we are willing to build (the W-distance table is quadratic).
pub const MAX_CHAMBERS: usize = 3000;

const UNREACHED: ElementId = ElementId::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChamberError {
    #[error("unsupported geometry: {0}")]
    UnsupportedSpec(String),
    #[error("word {0:?} is not a reduced expression")]
    NotReduced(Vec<usize>),
    #[error("chamber graph is not connected")]
    NotConnected,
    #[error("projection onto the panel is not unique")]
    NotUnique,
    #[error("chamber {0} out of range")]
    InvalidChamber(ChamberId),
    #[error("word {word:?} does not evaluate to the requested element")]
    WordMismatch { word: Vec<usize> },
    #[error(transparent)]
    Coxeter(#[from] CoxeterError),
}

/// `PG2:q=<n>` | `W:q=<n>` | `Aflags:n=<k>,q=<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometrySpec {
    ProjectivePlane { q: u32 },
    Symplectic { q: u32 },
    Flags { n: u32, q: u32 },
}

impl fmt::Display for GeometrySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GeometrySpec::ProjectivePlane { q } => write!(f, "PG2:q={q}"),
            GeometrySpec::Symplectic { q } => write!(f, "W:q={q}"),
            GeometrySpec::Flags { n, q } => write!(f, "Aflags:n={n},q={q}"),
        }
    }
}

impl FromStr for GeometrySpec {
    type Err = ChamberError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ChamberError::UnsupportedSpec(s.to_string());
        let (kind, params) = s.trim().split_once(':').ok_or_else(bad)?;
        let mut q = None;
        let mut n = None;
        for kv in params.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            let v: u32 = v.trim().parse().map_err(|_| bad())?;
            match k.trim() {
                "q" => q = Some(v),
                "n" => n = Some(v),
                _ => return Err(bad()),
            }
        }
        match (kind.trim(), n, q) {
            ("PG2", None, Some(q)) => Ok(GeometrySpec::ProjectivePlane { q }),
            ("W", None, Some(q)) => Ok(GeometrySpec::Symplectic { q }),
            ("Aflags", Some(n), Some(q)) => Ok(GeometrySpec::Flags { n, q }),
            _ => Err(bad()),
        }
    }
}

/// An `i`-panel: the type and its index among panels of that type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PanelRef {
    pub kind: usize,
    pub index: u32,
}

/// Chambers with, for each type `i`, a partition into `i`-panels, and the
/// W-distance table obtained from minimal galleries.
#[derive(Debug, Clone)]
pub struct ChamberComplex {
    label: String,
    coxeter: CoxeterSystem,
    /// Per chamber, a description of the underlying flag.
    flags: Vec<Vec<u32>>,
    /// `panel_of[i][c]`.
    panel_of: Vec<Vec<u32>>,
    /// `panels[i][p]`, sorted.
    panels: Vec<Vec<Vec<ChamberId>>>,
    /// `delta[c * n + d]`, from breadth-first search with types tried in
    /// increasing order.
    delta: Vec<ElementId>,
}

impl ChamberComplex {
    /// Assembles a complex from panel labels: chambers `c`, `d` are
    /// `i`-adjacent when `panel_key[i][c] == panel_key[i][d]`.
    pub fn from_panel_keys(
        label: impl Into<String>,
        coxeter: CoxeterSystem,
        flags: Vec<Vec<u32>>,
        panel_key: Vec<Vec<u64>>,
    ) -> Result<Self, ChamberError> {
        let n = flags.len();
        if n > MAX_CHAMBERS {
            return Err(ChamberError::UnsupportedSpec(format!(
                "{n} chambers exceeds the limit of {MAX_CHAMBERS}"
            )));
        }
        let mut panel_of = Vec::with_capacity(panel_key.len());
        let mut panels = Vec::with_capacity(panel_key.len());
        for keys in &panel_key {
            let mut ids: BTreeMap<u64, u32> = BTreeMap::new();
            let mut of = vec![0u32; n];
            let mut groups: Vec<Vec<ChamberId>> = Vec::new();
            for (c, k) in keys.iter().enumerate() {
                let next = groups.len() as u32;
                let id = *ids.entry(*k).or_insert(next);
                if id == next {
                    groups.push(Vec::new());
                }
                groups[id as usize].push(c as ChamberId);
                of[c] = id;
            }
            panel_of.push(of);
            panels.push(groups);
        }
        let mut complex = ChamberComplex {
            label: label.into(),
            coxeter,
            flags,
            panel_of,
            panels,
            delta: Vec::new(),
        };
        complex.compute_delta()?;
        Ok(complex)
    }

    fn compute_delta(&mut self) -> Result<(), ChamberError> {
        let n = self.len();
        let mut delta = vec![UNREACHED; n * n];
        let mut queue = VecDeque::new();
        for c in 0..n {
            let row = &mut delta[c * n..(c + 1) * n];
            row[c] = self.coxeter.identity().id();
            queue.clear();
            queue.push_back(c as ChamberId);
            while let Some(x) = queue.pop_front() {
                let wx = self.coxeter.element(row[x as usize]);
                for i in 0..self.rank() {
                    for &y in self.panel(PanelRef {
                        kind: i,
                        index: self.panel_of[i][x as usize],
                    }) {
                        if row[y as usize] == UNREACHED {
                            row[y as usize] = self.coxeter.mul_gen(wx, i).id();
                            queue.push_back(y);
                        }
                    }
                }
            }
            if row.contains(&UNREACHED) {
                return Err(ChamberError::NotConnected);
            }
        }
        self.delta = delta;
        Ok(())
    }

    pub fn build(spec: GeometrySpec) -> Result<Self, ChamberError> {
        let unsupported = |why: &str| ChamberError::UnsupportedSpec(format!("{spec}: {why}"));
        let q = match spec {
            GeometrySpec::ProjectivePlane { q }
            | GeometrySpec::Symplectic { q }
            | GeometrySpec::Flags { q, .. } => q,
        };
        if prime_power(q).is_none() {
            return Err(unsupported("q must be a prime power"));
        }
        let field = FiniteField::new(q).map_err(|e| unsupported(&e.to_string()))?;
        match spec {
            GeometrySpec::ProjectivePlane { .. } => flag_complex(&spec.to_string(), &field, 2),
            GeometrySpec::Flags { n, .. } => {
                if n == 0 {
                    return Err(unsupported("n must be at least 1"));
                }
                flag_complex(&spec.to_string(), &field, n as usize)
            }
            GeometrySpec::Symplectic { .. } => symplectic_complex(&spec.to_string(), &field),
        }
    }

    /// The thin complex of `W`: chambers are group elements and `w`, `ws`
    /// form an `s`-panel.
    pub fn coxeter_complex(coxeter: CoxeterSystem) -> Result<Self, ChamberError> {
        let rank = coxeter.rank();
        let flags: Vec<Vec<u32>> = coxeter.elements().map(|w| vec![w.id()]).collect();
        let keys: Vec<Vec<u64>> = (0..rank)
            .map(|s| {
                coxeter
                    .elements()
                    .map(|w| u64::from(w.id().min(coxeter.mul_gen(w, s).id())))
                    .collect()
            })
            .collect();
        let label = format!("thin({})", coxeter.matrix().to_string().replace('\n', ";"));
        Self::from_panel_keys(label, coxeter, flags, keys)
    }

    /// The subsystem on the remaining chambers (renumbered in order).
    pub fn without_chambers(&self, removed: &[ChamberId]) -> Result<Self, ChamberError> {
        let removed: BTreeSet<ChamberId> = removed.iter().copied().collect();
        let keep: Vec<usize> = (0..self.len())
            .filter(|c| !removed.contains(&(*c as ChamberId)))
            .collect();
        let flags = keep.iter().map(|&c| self.flags[c].clone()).collect();
        let keys = (0..self.rank())
            .map(|i| {
                keep.iter()
                    .map(|&c| u64::from(self.panel_of[i][c]))
                    .collect()
            })
            .collect();
        Self::from_panel_keys(
            format!("{}-minus{:?}", self.label, removed),
            self.coxeter.clone(),
            flags,
            keys,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coxeter(&self) -> &CoxeterSystem {
        &self.coxeter
    }

    pub fn rank(&self) -> usize {
        self.coxeter.rank()
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn chambers(&self) -> impl Iterator<Item = ChamberId> {
        0..self.len() as ChamberId
    }

    pub fn flag(&self, c: ChamberId) -> &[u32] {
        &self.flags[c as usize]
    }

    pub fn panel_count(&self, kind: usize) -> usize {
        self.panels[kind].len()
    }

    pub fn panel(&self, p: PanelRef) -> &[ChamberId] {
        &self.panels[p.kind][p.index as usize]
    }

    /// `p^i(c)`.
    pub fn panel_containing(&self, c: ChamberId, kind: usize) -> PanelRef {
        PanelRef {
            kind,
            index: self.panel_of[kind][c as usize],
        }
    }

    pub fn all_panels(&self) -> impl Iterator<Item = PanelRef> + '_ {
        (0..self.rank()).flat_map(move |kind| {
            (0..self.panels[kind].len() as u32).map(move |index| PanelRef { kind, index })
        })
    }

    /// Chambers `i`-adjacent to `c`, `c` excluded.
    pub fn neighbours(&self, c: ChamberId, kind: usize) -> impl Iterator<Item = ChamberId> + '_ {
        self.panel(self.panel_containing(c, kind))
            .iter()
            .copied()
            .filter(move |&d| d != c)
    }

    pub fn w_distance(&self, c: ChamberId, d: ChamberId) -> CoxeterElement {
        self.coxeter
            .element(self.delta[c as usize * self.len() + d as usize])
    }

    /// Id of the W-distance, for cheap comparisons.
    pub fn w_distance_id(&self, c: ChamberId, d: ChamberId) -> ElementId {
        self.delta[c as usize * self.len() + d as usize]
    }

    /// Gallery distance, the length of the W-distance.
    pub fn distance(&self, c: ChamberId, d: ChamberId) -> u32 {
        self.coxeter.length(self.w_distance(c, d))
    }

    pub fn is_opposite(&self, c: ChamberId, d: ChamberId) -> bool {
        self.w_distance(c, d) == self.coxeter.longest()
    }

    /// The chamber of `panel` nearest to `c`.
    pub fn projection(&self, panel: PanelRef, c: ChamberId) -> Result<ChamberId, ChamberError> {
        let members = self.panel(panel);
        let best = members.iter().map(|&e| self.distance(e, c)).min();
        let mut nearest = members
            .iter()
            .copied()
            .filter(|&e| Some(self.distance(e, c)) == best);
        match (nearest.next(), nearest.next()) {
            (Some(e), None) => Ok(e),
            _ => Err(ChamberError::NotUnique),
        }
    }

    pub fn schubert_cell(&self, base: ChamberId, w: CoxeterElement) -> SchubertCell {
        let members = self
            .chambers()
            .filter(|&c| self.w_distance(base, c) == w)
            .collect();
        SchubertCell { base, w, members }
    }

    /// `|C_w(base)|` for every `w`, indexed by element id.
    pub fn cell_sizes(&self, base: ChamberId) -> Vec<usize> {
        let mut sizes = vec![0usize; self.coxeter.order()];
        for c in self.chambers() {
            sizes[self.w_distance(base, c).id() as usize] += 1;
        }
        sizes
    }

    /// An apartment containing `c` and `d`, found by extending `w -> f(w)`
    /// with `delta(c, f(w)) = w` along `W` in shortlex order.
    pub fn find_apartment(&self, c: ChamberId, d: ChamberId) -> Option<Apartment> {
        let cox = &self.coxeter;
        let order = cox.order();
        let v = self.w_distance(c, d);
        let mut image = vec![ChamberId::MAX; order];
        image[0] = c;
        // parent[w] = (w s, s) with shorter length, s the last letter of w
        let parent: Vec<(usize, usize)> = cox
            .elements()
            .map(|w| match cox.word(w).last() {
                None => (0, 0),
                Some(&s) => (cox.mul_gen(w, s as usize).id() as usize, s as usize),
            })
            .collect();
        let mut used = BTreeSet::new();
        used.insert(c);
        if self.extend_apartment(1, v, d, &parent, &mut image, &mut used) {
            Some(Apartment { chambers: image })
        } else {
            None
        }
    }

    fn extend_apartment(
        &self,
        k: usize,
        v: CoxeterElement,
        d: ChamberId,
        parent: &[(usize, usize)],
        image: &mut Vec<ChamberId>,
        used: &mut BTreeSet<ChamberId>,
    ) -> bool {
        let cox = &self.coxeter;
        if k == cox.order() {
            return true;
        }
        let w = cox.element(k as ElementId);
        let (prev, s) = parent[k];
        let c = image[0];
        let target = cox.length(cox.multiply(cox.inverse(w), v).expect("same system"));
        let candidates: Vec<ChamberId> = self.neighbours(image[prev], s).collect();
        for x in candidates {
            if used.contains(&x) || self.w_distance(c, x) != w || self.distance(x, d) != target {
                continue;
            }
            // x must be t-adjacent to the already placed image of w t
            let fits = (0..self.rank()).all(|t| {
                let wt = cox.mul_gen(w, t);
                if cox.length(wt) > cox.length(w) {
                    return true;
                }
                let y = image[wt.id() as usize];
                self.panel_of[t][y as usize] == self.panel_of[t][x as usize]
            });
            if !fits {
                continue;
            }
            image[k] = x;
            used.insert(x);
            if self.extend_apartment(k + 1, v, d, parent, image, used) {
                return true;
            }
            used.remove(&x);
            image[k] = ChamberId::MAX;
        }
        false
    }

    /// The unique apartment through a pair of opposite chambers: everything
    /// on a minimal gallery between them.
    pub fn apartment_through_opposites(
        &self,
        c: ChamberId,
        d: ChamberId,
    ) -> Option<Vec<ChamberId>> {
        if !self.is_opposite(c, d) {
            return None;
        }
        let l0 = self.coxeter.length(self.coxeter.longest());
        Some(
            self.chambers()
                .filter(|&x| self.distance(c, x) + self.distance(x, d) == l0)
                .collect(),
        )
    }

    /// Every apartment, as sorted chamber lists in sorted order.
    pub fn all_apartments(&self) -> Vec<Vec<ChamberId>> {
        let mut set = BTreeSet::new();
        for c in self.chambers() {
            for d in self.chambers() {
                if c < d {
                    if let Some(a) = self.apartment_through_opposites(c, d) {
                        set.insert(a);
                    }
                }
            }
        }
        set.into_iter().collect()
    }

    pub fn verify_building_axioms(&self) -> AxiomReport {
        AxiomReport {
            b1: self.check_apartments(),
            b2: self.check_w_distance(),
            b3: self.check_thickness(),
        }
    }

    fn check_apartments(&self) -> AxiomCheck {
        let mut check = AxiomCheck::new("B1");
        for c in self.chambers() {
            for d in self.chambers() {
                if d < c {
                    continue;
                }
                check.checked += 1;
                match self.find_apartment(c, d) {
                    Some(a) if self.is_apartment(&a) => {}
                    _ => check.fail(format!("no apartment contains chambers {c} and {d}")),
                }
            }
        }
        check
    }

    /// `w -> f(w)` is an isometry from `W` onto a set of `|W|` chambers.
    pub fn is_apartment(&self, a: &Apartment) -> bool {
        let cox = &self.coxeter;
        let distinct: BTreeSet<_> = a.chambers.iter().collect();
        if distinct.len() != cox.order() || a.chambers.contains(&ChamberId::MAX) {
            return false;
        }
        cox.elements().all(|u| {
            cox.elements().all(|w| {
                let want = cox.multiply(cox.inverse(u), w).expect("same system");
                self.w_distance(a.chambers[u.id() as usize], a.chambers[w.id() as usize]) == want
            })
        })
    }

    fn check_w_distance(&self) -> AxiomCheck {
        let mut check = AxiomCheck::new("B2");
        let cox = &self.coxeter;
        for c in self.chambers() {
            for x in self.chambers() {
                check.checked += 1;
                let wx = self.w_distance(c, x);
                if cox.inverse(wx) != self.w_distance(x, c) {
                    check.fail(format!(
                        "delta({c},{x}) is not the inverse of delta({x},{c})"
                    ));
                }
                if (wx == cox.identity()) != (c == x) {
                    check.fail(format!("delta({c},{x}) = 1 for distinct chambers"));
                }
                let dx = self.distance(c, x);
                for i in 0..self.rank() {
                    for y in self.neighbours(x, i) {
                        let wy = self.w_distance(c, y);
                        let dy = cox.length(wy);
                        if dy == dx + 1 && wy != cox.mul_gen(wx, i) {
                            check.fail(format!(
                                "galleries from {c} to {y} through {x} give different W-distances"
                            ));
                        }
                        if dy.abs_diff(dx) > 1 {
                            check.fail(format!(
                                "adjacent chambers {x},{y} have W-lengths {dx},{dy} from {c}"
                            ));
                        }
                    }
                }
            }
        }
        check
    }

    fn check_thickness(&self) -> AxiomCheck {
        let mut check = AxiomCheck::new("B3");
        for p in self.all_panels().collect::<Vec<_>>() {
            check.checked += 1;
            let members = self.panel(p);
            if members.len() < 3 {
                check.fail(format!(
                    "panel of type {} #{} has only {} chambers {:?}",
                    p.kind,
                    p.index,
                    members.len(),
                    members
                ));
            }
        }
        check
    }

    /// The punctured-panel coordinatization of `C_w(base)` along the reduced
    /// word `direction`.
    pub fn schubert_coordinates(
        &self,
        base: ChamberId,
        w: CoxeterElement,
        direction: &[usize],
    ) -> Result<SchubertCoordinates<'_>, ChamberError> {
        let cox = &self.coxeter;
        if (base as usize) >= self.len() {
            return Err(ChamberError::InvalidChamber(base));
        }
        if !cox.is_reduced(direction)? {
            return Err(ChamberError::NotReduced(direction.to_vec()));
        }
        if cox.reduce_word(direction)? != w {
            return Err(ChamberError::WordMismatch {
                word: direction.to_vec(),
            });
        }
        let w0 = cox.longest();
        let mut levels = Vec::with_capacity(direction.len());
        for k in 1..=direction.len() {
            let i = direction[k - 1];
            let (panel, removed) = if k == 1 {
                (self.panel_containing(base, i), base)
            } else {
                let wk = cox.reduce_word(&direction[..k])?;
                let j = cox.longest_conjugate(i);
                let v = cox.multiply(wk, w0)?;
                let d = self
                    .chambers()
                    .find(|&x| self.w_distance(base, x) == v)
                    .ok_or(ChamberError::NotUnique)?;
                (self.panel_containing(d, j), d)
            };
            let punctured = self
                .panel(panel)
                .iter()
                .copied()
                .filter(|&x| x != removed)
                .collect();
            levels.push(CoordinateLevel {
                kind: i,
                panel,
                removed,
                punctured,
            });
        }
        Ok(SchubertCoordinates {
            complex: self,
            base,
            w,
            direction: direction.to_vec(),
            levels,
        })
    }
}

/// A thin subcomplex given as the image of `W`: `chambers[w]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Apartment {
    chambers: Vec<ChamberId>,
}

impl Apartment {
    pub fn chamber_at(&self, w: CoxeterElement) -> ChamberId {
        self.chambers[w.id() as usize]
    }

    pub fn sorted_chambers(&self) -> Vec<ChamberId> {
        let mut v = self.chambers.clone();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub checked: usize,
    pub failed: usize,
    /// The first few failures.
    pub witnesses: Vec<String>,
}

const MAX_WITNESSES: usize = 10;

impl AxiomCheck {
    fn new(name: &'static str) -> Self {
        AxiomCheck {
            name,
            checked: 0,
            failed: 0,
            witnesses: Vec::new(),
        }
    }

    fn fail(&mut self, why: String) {
        self.failed += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(why);
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub b1: AxiomCheck,
    pub b2: AxiomCheck,
    pub b3: AxiomCheck,
}

impl AxiomReport {
    pub fn checks(&self) -> [&AxiomCheck; 3] {
        [&self.b1, &self.b2, &self.b3]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchubertCell {
    pub base: ChamberId,
    pub w: CoxeterElement,
    pub members: Vec<ChamberId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateLevel {
    /// Last letter of the prefix this level peels off.
    pub kind: usize,
    pub panel: PanelRef,
    pub removed: ChamberId,
    pub punctured: Vec<ChamberId>,
}

/// The bijection between `C_w(base)` and a product of punctured panels.
#[derive(Debug, Clone)]
pub struct SchubertCoordinates<'a> {
    complex: &'a ChamberComplex,
    pub base: ChamberId,
    pub w: CoxeterElement,
    pub direction: Vec<usize>,
    pub levels: Vec<CoordinateLevel>,
}

impl SchubertCoordinates<'_> {
    /// Sizes of the punctured panels, one per letter.
    pub fn domain_shape(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.punctured.len()).collect()
    }

    fn to_chambers(&self, c: ChamberId, depth: usize) -> Result<Vec<ChamberId>, ChamberError> {
        if depth == 1 {
            return Ok(vec![c]);
        }
        let level = &self.levels[depth - 1];
        let cx = self.complex;
        let a = cx.projection(cx.panel_containing(c, level.kind), self.base)?;
        let b = cx.projection(level.panel, c)?;
        let mut out = self.to_chambers(a, depth - 1)?;
        out.push(b);
        Ok(out)
    }

    fn from_chambers(&self, t: &[ChamberId]) -> Result<ChamberId, ChamberError> {
        if t.len() == 1 {
            return Ok(t[0]);
        }
        let level = &self.levels[t.len() - 1];
        let a = self.from_chambers(&t[..t.len() - 1])?;
        let cx = self.complex;
        cx.projection(cx.panel_containing(a, level.kind), t[t.len() - 1])
    }

    /// 1-based positions of the coordinates of `c` in the punctured panels;
    /// `None` if some coordinate lands outside its punctured panel.
    pub fn coordinates(&self, c: ChamberId) -> Result<Option<Vec<usize>>, ChamberError> {
        let chambers = self.to_chambers(c, self.levels.len())?;
        Ok(chambers
            .iter()
            .zip(&self.levels)
            .map(|(x, l)| l.punctured.iter().position(|y| y == x).map(|p| p + 1))
            .collect())
    }

    pub fn chamber(&self, coords: &[usize]) -> Result<ChamberId, ChamberError> {
        let chambers: Vec<ChamberId> = coords
            .iter()
            .zip(&self.levels)
            .map(|(&k, l)| l.punctured[k - 1])
            .collect();
        self.from_chambers(&chambers)
    }

    /// Checks that both maps are mutually inverse bijections between the
    /// whole product and the whole cell.
    pub fn verify(&self) -> Result<CoordinateCheck, ChamberError> {
        let cx = self.complex;
        let cell = cx.schubert_cell(self.base, self.w);
        let shape = self.domain_shape();
        let mut failures = Vec::new();
        let mut image = BTreeSet::new();
        let mut tuples = 0usize;
        let mut coords = vec![1usize; shape.len()];
        loop {
            tuples += 1;
            let c = self.chamber(&coords)?;
            if cx.w_distance(self.base, c) != self.w {
                failures.push(format!("{coords:?} maps to {c} outside the cell"));
            } else if self.coordinates(c)?.as_deref() != Some(&coords[..]) {
                failures.push(format!("{coords:?} -> {c} does not round-trip"));
            }
            image.insert(c);
            // odometer over the product
            let mut k = shape.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                if coords[k] < shape[k] {
                    coords[k] += 1;
                    break;
                }
                coords[k] = 1;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX || shape.is_empty() {
                break;
            }
        }
        for &c in &cell.members {
            match self.coordinates(c)? {
                Some(t) if self.chamber(&t)? == c => {}
                _ => failures.push(format!("chamber {c} does not round-trip")),
            }
        }
        Ok(CoordinateCheck {
            cell_size: cell.members.len(),
            tuples,
            image_size: image.len(),
            failures,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateCheck {
    pub cell_size: usize,
    pub tuples: usize,
    pub image_size: usize,
    pub failures: Vec<String>,
}

impl CoordinateCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
            && self.image_size == self.cell_size
            && self.tuples == self.cell_size
    }
}

type Subspace = Vec<Vec<u32>>;

/// All `k`-dimensional subspaces of `F^m` as reduced row echelon bases,
/// sorted.
fn subspaces(f: &FiniteField, m: usize, k: usize) -> Vec<Subspace> {
    let q = f.order();
    let mut out = Vec::new();
    for pivots in combinations(m, k) {
        let free: Vec<(usize, usize)> = (0..k)
            .flat_map(|r| {
                let pivots = &pivots;
                (pivots[r] + 1..m)
                    .filter(move |c| !pivots.contains(c))
                    .map(move |c| (r, c))
            })
            .collect();
        let total = (q as usize).pow(free.len() as u32);
        for code in 0..total {
            let mut rows = vec![vec![0u32; m]; k];
            for (r, &p) in pivots.iter().enumerate() {
                rows[r][p] = 1;
            }
            let mut x = code;
            for &(r, c) in &free {
                rows[r][c] = (x % q as usize) as u32;
                x /= q as usize;
            }
            out.push(rows);
        }
    }
    out.sort();
    out
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            go(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Whether `v` lies in the span of the echelon basis `basis`.
fn in_span(f: &FiniteField, basis: &Subspace, v: &[u32]) -> bool {
    let mut v = v.to_vec();
    for row in basis {
        let p = row
            .iter()
            .position(|&x| x != 0)
            .expect("echelon rows are nonzero");
        let c = v[p];
        if c != 0 {
            for (x, &r) in v.iter_mut().zip(row) {
                *x = f.sub(*x, f.mul(c, r));
            }
        }
    }
    v.iter().all(|&x| x == 0)
}

fn contained(f: &FiniteField, small: &Subspace, big: &Subspace) -> bool {
    small.iter().all(|r| in_span(f, big, r))
}

/// Chains `V_1 < ... < V_n` in `F^{n+1}`; type `i` changes `V_{i+1}`.
fn flag_complex(label: &str, f: &FiniteField, n: usize) -> Result<ChamberComplex, ChamberError> {
    let m = n + 1;
    let subs: Vec<Vec<Subspace>> = (1..=n).map(|k| subspaces(f, m, k)).collect();
    // up[k][a] = subspaces of dimension k+2 containing subs[k][a]
    let up: Vec<Vec<Vec<u32>>> = (0..n.saturating_sub(1))
        .map(|k| {
            subs[k]
                .iter()
                .map(|a| {
                    (0..subs[k + 1].len() as u32)
                        .filter(|&b| contained(f, a, &subs[k + 1][b as usize]))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut chains: Vec<Vec<u32>> = Vec::new();
    let mut estimate = 1usize;
    for k in 1..=n {
        // number of flags is prod_k (q^k - 1)/(q - 1)
        let q = f.order() as usize;
        estimate = estimate.saturating_mul((q.pow(k as u32 + 1) - 1) / (q - 1));
    }
    if estimate > MAX_CHAMBERS {
        return Err(ChamberError::UnsupportedSpec(format!(
            "{label}: {estimate} chambers exceeds the limit of {MAX_CHAMBERS}"
        )));
    }
    fn extend(up: &[Vec<Vec<u32>>], n: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let k = cur.len() - 1;
        for &b in &up[k][*cur.last().unwrap() as usize] {
            cur.push(b);
            extend(up, n, cur, out);
            cur.pop();
        }
    }
    for a in 0..subs[0].len() as u32 {
        extend(&up, n, &mut vec![a], &mut chains);
    }
    chains.sort();
    let matrix = if n == 1 {
        CoxeterMatrix::new(vec![vec![1]])?
    } else {
        CoxeterMatrix::type_a(n)
    };
    let coxeter = CoxeterSystem::build(matrix, crate::coxeter::DEFAULT_ELEMENT_BOUND)?;
    let keys = (0..n).map(|i| chain_keys(&chains, i)).collect();
    ChamberComplex::from_panel_keys(label, coxeter, chains, keys)
}

/// Panel keys for "agree everywhere except position `i`".
fn chain_keys(chains: &[Vec<u32>], i: usize) -> Vec<u64> {
    let mut ids: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    chains
        .iter()
        .map(|c| {
            let mut k = c.clone();
            k[i] = u32::MAX;
            let next = ids.len() as u64;
            *ids.entry(k).or_insert(next)
        })
        .collect()
}

/// Alternating form `u0 v3 - u3 v0 + u1 v2 - u2 v1` on `F^4`.
fn symplectic_form(f: &FiniteField, u: &[u32], v: &[u32]) -> u32 {
    let a = f.sub(f.mul(u[0], v[3]), f.mul(u[3], v[0]));
    let b = f.sub(f.mul(u[1], v[2]), f.mul(u[2], v[1]));
    f.add(a, b)
}

/// Point-line flags of `W(q)`; type 0 changes the point, type 1 the line.
fn symplectic_complex(label: &str, f: &FiniteField) -> Result<ChamberComplex, ChamberError> {
    let q = f.order() as usize;
    let estimate = (q + 1) * (q * q + 1) * (q + 1);
    if estimate > MAX_CHAMBERS {
        return Err(ChamberError::UnsupportedSpec(format!(
            "{label}: {estimate} chambers exceeds the limit of {MAX_CHAMBERS}"
        )));
    }
    let points = subspaces(f, 4, 1);
    let lines: Vec<Subspace> = subspaces(f, 4, 2)
        .into_iter()
        .filter(|l| symplectic_form(f, &l[0], &l[1]) == 0)
        .collect();
    let mut chambers = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        for (li, l) in lines.iter().enumerate() {
            if contained(f, p, l) {
                chambers.push(vec![pi as u32, li as u32]);
            }
        }
    }
    chambers.sort();
    let coxeter = CoxeterSystem::build(CoxeterMatrix::dihedral(4), 64)?;
    let keys = (0..2).map(|i| chain_keys(&chambers, i)).collect();
    ChamberComplex::from_panel_keys(label, coxeter, chambers, keys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(s: &str) -> ChamberComplex {
        ChamberComplex::build(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn spec_grammar() {
        assert_eq!(
            "Aflags:n=3,q=2".parse::<GeometrySpec>().unwrap(),
            GeometrySpec::Flags { n: 3, q: 2 }
        );
        assert!("PG3:q=2".parse::<GeometrySpec>().is_err());
        assert!(ChamberComplex::build("PG2:q=6".parse().unwrap()).is_err());
        assert!(ChamberComplex::build("Aflags:n=4,q=3".parse().unwrap()).is_err());
    }

    #[test]
    fn chamber_counts() {
        assert_eq!(build("PG2:q=2").len(), 21);
        assert_eq!(build("W:q=2").len(), 45);
        assert_eq!(build("PG2:q=3").len(), 13 * 4);
        assert_eq!(build("Aflags:n=3,q=2").len(), 15 * 7 * 3);
        for c in build("PG2:q=2").all_panels().collect::<Vec<_>>() {
            assert_eq!(build("PG2:q=2").panel(c).len(), 3);
        }
    }

    #[test]
    fn aflags_two_is_the_plane() {
        let a = build("PG2:q=2");
        let b = build("Aflags:n=2,q=2");
        assert_eq!(a.panel_of, b.panel_of);
        assert_eq!(a.flags, b.flags);
    }

    #[test]
    fn w_distance_examples() {
        let c = build("PG2:q=2");
        let cox = c.coxeter();
        assert_eq!(c.w_distance(3, 3), cox.identity());
        let d = c.neighbours(0, 1).next().unwrap();
        assert_eq!(c.w_distance(0, d), cox.generator(1));
        let opp = c.chambers().find(|&x| c.is_opposite(0, x)).unwrap();
        assert_eq!(cox.length(c.w_distance(0, opp)), 3);
    }

    #[test]
    fn axioms_hold_for_catalog() {
        for s in ["PG2:q=2", "W:q=2"] {
            let r = build(s).verify_building_axioms();
            assert!(r.passed(), "{s}: {r:?}");
        }
    }

    #[test]
    fn thin_and_truncated_fail_thickness() {
        let thin = ChamberComplex::coxeter_complex(
            CoxeterSystem::build(CoxeterMatrix::type_a(2), 100).unwrap(),
        )
        .unwrap();
        let r = thin.verify_building_axioms();
        assert!(r.b1.passed() && r.b2.passed());
        assert_eq!(r.b3.failed, thin.all_panels().count());

        let c = build("PG2:q=2");
        let cut = c.without_chambers(&[0]).unwrap();
        let r = cut.verify_building_axioms();
        assert_eq!(r.b3.failed, 2);
        assert!(r.b3.witnesses[0].contains("only 2 chambers"));
    }

    #[test]
    fn projection_examples() {
        let c = build("PG2:q=2");
        let p = c.panel_containing(5, 0);
        assert_eq!(c.projection(p, 5).unwrap(), 5);
        let d = c.neighbours(5, 1).next().unwrap();
        let p = c.panel_containing(d, 0);
        assert_eq!(c.projection(p, 5).unwrap(), d);
    }

    #[test]
    fn cells_and_coordinates() {
        let c = build("PG2:q=2");
        let cox = c.coxeter();
        let w0 = cox.longest();
        assert_eq!(c.schubert_cell(0, w0).members.len(), 8);
        assert_eq!(c.schubert_cell(0, cox.identity()).members, vec![0]);
        let word: Vec<usize> = cox.word(w0).iter().map(|&s| s as usize).collect();
        let coords = c.schubert_coordinates(0, w0, &word).unwrap();
        assert_eq!(coords.domain_shape(), vec![2, 2, 2]);
        assert!(coords.verify().unwrap().passed());
        assert!(matches!(
            c.schubert_coordinates(0, cox.identity(), &[0, 0]),
            Err(ChamberError::NotReduced(_))
        ));

        let w = build("W:q=2");
        let cox = w.coxeter();
        let el = cox.reduce_word(&[0, 1]).unwrap();
        let coords = w.schubert_coordinates(0, el, &[0, 1]).unwrap();
        let check = coords.verify().unwrap();
        assert_eq!(check.tuples, 4);
        assert!(check.passed());
    }
}
