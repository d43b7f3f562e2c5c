//! The Bruhat-Tits tree of `SL_2` over `Q_p` or `F_q((t))`.
//!
//! A vertex is the class of the lattice spanned by the columns
//! `(π^a, 0)` and `(b, 1)` with `b` taken modulo `π^a`. Its neighbours are
//! `(a - 1, b mod π^{a-1})` and the `q` vertices `(a + 1, b + c π^a)`.
//! Following the chain `(a - k, b mod π^{a-k})` from any vertex leads to the
//! end `(1 : 0)`, which gives
//! `d(u, v) = a_u + a_v - 2 min(a_u, a_v, ν(b_u - b_v))`.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;
use thiserror::Error;

use crate::localfield::{uniform_below, Field, FieldElement, FieldError, FieldKind, Valuation};
use crate::projline::ProjPoint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("the tree needs a local field")]
    NotLocal,
    #[error("determinant is not 1")]
    DeterminantNotOne,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Lattice class `(a, b mod π^a)`; `b` is stored as its nonzero digits at
/// exponents below `a`, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVertex {
    a: i64,
    b: Vec<(i64, u32)>,
}

impl LatticeVertex {
    pub fn base() -> Self {
        LatticeVertex {
            a: 0,
            b: Vec::new(),
        }
    }

    /// Digits at exponents `>= a` and zero digits are dropped.
    pub fn new(a: i64, digits: impl IntoIterator<Item = (i64, u32)>) -> Self {
        let mut b: Vec<(i64, u32)> = digits
            .into_iter()
            .filter(|&(e, d)| d != 0 && e < a)
            .collect();
        b.sort_unstable();
        b.dedup_by_key(|x| x.0);
        LatticeVertex { a, b }
    }

    /// `(a, b mod π^a)`, reading the digits of `b` from its valuation.
    pub fn from_element(field: &Field, a: i64, b: &FieldElement) -> Result<Self, FieldError> {
        match field.valuation(b) {
            Valuation::Infinity => Ok(LatticeVertex::new(a, [])),
            Valuation::Finite(v) if v >= a => Ok(LatticeVertex::new(a, [])),
            Valuation::Finite(v) => {
                let digits = field.digits(b, v, a)?;
                Ok(LatticeVertex::new(a, (v..a).zip(digits)))
            }
        }
    }

    pub fn level(&self) -> i64 {
        self.a
    }

    pub fn digits(&self) -> &[(i64, u32)] {
        &self.b
    }

    /// `b` as a field element.
    pub fn b_element(&self, field: &Field) -> FieldElement {
        self.b.iter().fold(field.zero(), |acc, &(e, d)| {
            field.add(&acc, &field.monomial(d, e))
        })
    }

    /// `ν(b_self - b_other)`, `None` when the digit strings agree.
    fn difference_valuation(&self, other: &LatticeVertex) -> Option<i64> {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.b.get(i), other.b.get(j)) {
                (None, None) => return None,
                (Some(&(e, _)), None) | (None, Some(&(e, _))) => return Some(e),
                (Some(&(e, d)), Some(&(f, c))) => {
                    if e != f {
                        return Some(e.min(f));
                    }
                    if d != c {
                        return Some(e);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }

    pub fn distance(&self, other: &LatticeVertex) -> u64 {
        let mut meet = self.a.min(other.a);
        if let Some(v) = self.difference_valuation(other) {
            meet = meet.min(v);
        }
        (self.a + other.a - 2 * meet) as u64
    }

    pub fn depth(&self) -> u64 {
        self.distance(&LatticeVertex::base())
    }

    /// Toward `(1 : 0)` first, then the `q` vertices away from it.
    pub fn neighbours(&self, q: u32) -> Vec<LatticeVertex> {
        let mut out = Vec::with_capacity(q as usize + 1);
        out.push(LatticeVertex::new(self.a - 1, self.b.iter().copied()));
        for c in 0..q {
            let mut b = self.b.clone();
            if c != 0 {
                b.push((self.a, c));
            }
            out.push(LatticeVertex { a: self.a + 1, b });
        }
        out
    }
}

/// All vertices within `radius` of the base vertex, with the edges between
/// them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeBall {
    pub q: u32,
    pub radius: u32,
    pub vertices: Vec<LatticeVertex>,
    pub edges: Vec<(usize, usize)>,
}

impl TreeBall {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(x, y)| x == i || y == i)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.len()];
        for &(x, y) in &self.edges {
            deg[x] += 1;
            deg[y] += 1;
        }
        deg
    }

    /// Connected with `|E| = |V| - 1`.
    pub fn is_tree(&self) -> bool {
        if self.is_empty() || self.edges.len() + 1 != self.len() {
            return false;
        }
        let mut adj = vec![Vec::new(); self.len()];
        for &(x, y) in &self.edges {
            adj[x].push(y);
            adj[y].push(x);
        }
        let mut seen = vec![false; self.len()];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn require_local(field: &Field) -> Result<u32, TreeError> {
    match field.kind() {
        FieldKind::Finite => Err(TreeError::NotLocal),
        _ => Ok(field.precision().unwrap_or(0)),
    }
}

/// `1 + (q + 1)(q^r - 1)/(q - 1)`.
pub fn ball_size(q: u64, radius: u32) -> u64 {
    if radius == 0 {
        return 1;
    }
    1 + (q + 1) * (q.pow(radius) - 1) / (q - 1)
}

pub fn build_tree_ball(field: &Field, radius: u32) -> Result<TreeBall, TreeError> {
    let prec = require_local(field)?;
    if radius > prec {
        return Err(FieldError::PrecisionExhausted.into());
    }
    let q = field.residue_size();
    let mut index: BTreeMap<LatticeVertex, usize> = BTreeMap::new();
    let mut vertices = vec![LatticeVertex::base()];
    index.insert(LatticeVertex::base(), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        if vertices[i].depth() == u64::from(radius) {
            continue;
        }
        for v in vertices[i].neighbours(q) {
            if !index.contains_key(&v) {
                index.insert(v.clone(), vertices.len());
                queue.push_back(vertices.len());
                vertices.push(v);
            }
        }
    }
    let mut edges = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        for w in v.neighbours(q) {
            if let Some(&j) = index.get(&w) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
    }
    Ok(TreeBall {
        q,
        radius,
        vertices,
        edges,
    })
}

/// An end of the tree as a normalized point of the projective line:
/// `(x : 1)` with `ν(x) >= 0`, or `(1 : x)` with `ν(x) > 0` (`x = 0` is the
/// end `(1 : 0)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryPoint {
    Affine(FieldElement),
    Polar(FieldElement),
}

impl BoundaryPoint {
    pub fn normalize(field: &Field, p: &ProjPoint) -> Result<Self, FieldError> {
        match p {
            ProjPoint::Infinity => Ok(BoundaryPoint::Polar(field.zero())),
            ProjPoint::Finite(x) => match field.valuation(x) {
                Valuation::Finite(v) if v < 0 => Ok(BoundaryPoint::Polar(field.inv(x)?)),
                _ => Ok(BoundaryPoint::Affine(x.clone())),
            },
        }
    }

    /// The normalized primitive vector `(u_1, u_2)`.
    pub fn vector(&self, field: &Field) -> (FieldElement, FieldElement) {
        match self {
            BoundaryPoint::Affine(x) => (x.clone(), field.one()),
            BoundaryPoint::Polar(x) => (field.one(), x.clone()),
        }
    }

    pub fn format(&self, field: &Field) -> String {
        match self {
            BoundaryPoint::Affine(x) => format!("({} : 1)", field.format_element(x)),
            BoundaryPoint::Polar(x) => format!("(1 : {})", field.format_element(x)),
        }
    }
}

/// The geodesic ray from the base vertex to the end `x`, `depth + 1`
/// vertices. The `k`-th vertex is the class of `O·u + π^k O^2` for the
/// normalized vector `u` of `x`.
pub fn ray_to_end(
    field: &Field,
    x: &BoundaryPoint,
    depth: u32,
) -> Result<Vec<LatticeVertex>, TreeError> {
    let prec = require_local(field)?;
    if depth > prec {
        return Err(FieldError::PrecisionExhausted.into());
    }
    let depth = i64::from(depth);
    match x {
        BoundaryPoint::Affine(x) => {
            if field.valuation(x) < Valuation::Finite(0) {
                return Err(FieldError::NotIntegral.into());
            }
            let digits = if field.is_zero(x) {
                vec![0; depth as usize]
            } else {
                field.digits(x, 0, depth)?
            };
            Ok((0..=depth)
                .map(|k| LatticeVertex::new(k, (0..k).zip(digits.iter().copied())))
                .collect())
        }
        BoundaryPoint::Polar(x) => {
            let m = match field.valuation(x) {
                Valuation::Infinity => i64::MAX,
                Valuation::Finite(m) if m > 0 => m,
                Valuation::Finite(_) => return Err(FieldError::NotIntegral.into()),
            };
            let inv = if m <= depth {
                Some(field.inv(x)?)
            } else {
                None
            };
            (0..=depth)
                .map(|k| match &inv {
                    Some(y) if k > m => Ok(LatticeVertex::from_element(field, k - 2 * m, y)?),
                    _ => Ok(LatticeVertex::new(-k, [])),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeComparison {
    /// Edges shared by the two rays from the base vertex.
    pub agreement: u32,
    /// `ν(u_1 v_2 - u_2 v_1)` of the normalized vectors.
    pub valuation_distance: Valuation,
    /// `agreement = min(valuation_distance, depth)`.
    pub consistent: bool,
}

pub fn cone_vs_ultrametric(
    field: &Field,
    x: &BoundaryPoint,
    y: &BoundaryPoint,
    depth: u32,
) -> Result<ConeComparison, TreeError> {
    let rx = ray_to_end(field, x, depth)?;
    let ry = ray_to_end(field, y, depth)?;
    let shared = rx.iter().zip(&ry).take_while(|(a, b)| a == b).count();
    let agreement = shared.saturating_sub(1) as u32;
    let (u1, u2) = x.vector(field);
    let (v1, v2) = y.vector(field);
    let cross = field.sub(&field.mul(&u1, &v2), &field.mul(&u2, &v1));
    // an inexact zero still bounds the valuation from below
    let valuation_distance = match (field.valuation(&cross), field.absolute_precision(&cross)) {
        (Valuation::Infinity, Some(abs)) => Valuation::Finite(abs),
        (v, _) => v,
    };
    let expected = match valuation_distance {
        Valuation::Finite(v) => v.clamp(0, i64::from(depth)) as u32,
        Valuation::Infinity => depth,
    };
    Ok(ConeComparison {
        agreement,
        valuation_distance,
        consistent: agreement == expected,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConeReport {
    pub pairs: usize,
    pub failures: Vec<String>,
}

impl ConeReport {
    pub fn passed(&self) -> bool {
        self.pairs > 0 && self.failures.is_empty()
    }
}

fn random_end<R: RngCore + ?Sized>(field: &Field, rng: &mut R, depth: u32) -> BoundaryPoint {
    if uniform_below(rng, 2) == 0 {
        BoundaryPoint::Affine(field.random_integral(rng, i64::from(depth)))
    } else if uniform_below(rng, 8) == 0 {
        BoundaryPoint::Polar(field.zero())
    } else {
        BoundaryPoint::Polar(field.random_nonzero(rng, 1, i64::from(depth) + 1))
    }
}

/// Sampled pairs, the second end often a perturbation `x + π^m u` of the
/// first so that agreements of every length occur; the pairs
/// `(0, π^m)` for `m = 1..depth` are always included.
pub fn cone_check<R: RngCore + ?Sized>(
    field: &Field,
    depth: u32,
    samples: usize,
    rng: &mut R,
) -> Result<ConeReport, TreeError> {
    require_local(field)?;
    let mut pairs = Vec::new();
    for m in 1..=i64::from(depth) {
        pairs.push((
            BoundaryPoint::Affine(field.zero()),
            BoundaryPoint::Affine(field.monomial(1, m)),
        ));
    }
    for _ in 0..samples {
        let x = random_end(field, rng, depth);
        let y = if uniform_below(rng, 2) == 0 {
            random_end(field, rng, depth)
        } else {
            let m = uniform_below(rng, u64::from(depth) + 1) as i64;
            let shift = field.random_nonzero(rng, m, m);
            match &x {
                BoundaryPoint::Affine(a) => BoundaryPoint::Affine(field.add(a, &shift)),
                BoundaryPoint::Polar(a) => {
                    let shifted = field.add(a, &field.mul(&shift, &field.uniformizer()?));
                    BoundaryPoint::Polar(shifted)
                }
            }
        };
        pairs.push((x, y));
    }
    let mut report = ConeReport::default();
    for (x, y) in pairs {
        let c = cone_vs_ultrametric(field, &x, &y, depth)?;
        let swapped = cone_vs_ultrametric(field, &y, &x, depth)?;
        report.pairs += 1;
        if !c.consistent
            || swapped.agreement != c.agreement
            || swapped.valuation_distance != c.valuation_distance
        {
            report.failures.push(format!(
                "x={} y={} agreement={} valuation={:?}",
                x.format(field),
                y.format(field),
                c.agreement,
                c.valuation_distance
            ));
        }
    }
    Ok(report)
}

/// A 2x2 matrix, rows first.
pub type Mat2 = [[FieldElement; 2]; 2];

pub fn mat_mul(field: &Field, a: &Mat2, b: &Mat2) -> Mat2 {
    let e = |i: usize, j: usize| {
        field.add(
            &field.mul(&a[i][0], &b[0][j]),
            &field.mul(&a[i][1], &b[1][j]),
        )
    };
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn det(field: &Field, a: &Mat2) -> FieldElement {
    field.sub(
        &field.mul(&a[0][0], &a[1][1]),
        &field.mul(&a[0][1], &a[1][0]),
    )
}

pub fn mat_eq(field: &Field, a: &Mat2, b: &Mat2) -> bool {
    (0..2).all(|i| (0..2).all(|j| field.eq_to_precision(&a[i][j], &b[i][j])))
}

pub fn format_mat(field: &Field, a: &Mat2) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        field.format_element(&a[0][0]),
        field.format_element(&a[0][1]),
        field.format_element(&a[1][0]),
        field.format_element(&a[1][1])
    )
}

/// `g = k b`, `k` integral with unit determinant, `b` upper triangular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IwasawaFactors {
    pub k: Mat2,
    pub b: Mat2,
}

/// Column reduction pivoting on the entry of the first column with the
/// smaller valuation.
pub fn iwasawa_decompose(field: &Field, g: &Mat2) -> Result<IwasawaFactors, TreeError> {
    require_local(field)?;
    if !field.eq_to_precision(&det(field, g), &field.one()) {
        return Err(TreeError::DeterminantNotOne);
    }
    let (zero, one) = (field.zero(), field.one());
    let [[g11, g12], [g21, g22]] = g;
    if field.is_zero(g11) && field.is_zero(g21) {
        return Err(FieldError::PrecisionExhausted.into());
    }
    if field.valuation(g11) <= field.valuation(g21) {
        let r = field.div(g21, g11)?;
        let k = [[one.clone(), zero.clone()], [r.clone(), one]];
        let b22 = field.sub(g22, &field.mul(&r, g12));
        Ok(IwasawaFactors {
            k,
            b: [[g11.clone(), g12.clone()], [zero, b22]],
        })
    } else {
        let r = field.div(g11, g21)?;
        let k = [[r, field.neg(&one)], [one, zero.clone()]];
        let b22 = field.div(&det(field, g), g21)?;
        Ok(IwasawaFactors {
            k,
            b: [[g21.clone(), g22.clone()], [zero, b22]],
        })
    }
}

/// Random determinant-1 matrix: three entries with valuations in
/// `-window..=window`, the fourth solved for.
pub fn random_sl2<R: RngCore + ?Sized>(
    field: &Field,
    rng: &mut R,
    window: i64,
) -> Result<Mat2, FieldError> {
    let mut entry = |zero_odds: u64| {
        if uniform_below(rng, zero_odds) == 0 {
            field.zero()
        } else {
            field.random_nonzero(rng, -window, window)
        }
    };
    let g11 = entry(u64::MAX);
    let g12 = entry(8);
    let g21 = entry(8);
    let g22 = field.div(&field.add(&field.one(), &field.mul(&g12, &g21)), &g11)?;
    Ok([[g11, g12], [g21, g22]])
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IwasawaReport {
    pub samples: usize,
    pub failures: Vec<String>,
}

impl IwasawaReport {
    pub fn passed(&self) -> bool {
        self.samples > 0 && self.failures.is_empty()
    }
}

pub fn is_integral_unimodular(field: &Field, k: &Mat2) -> bool {
    k.iter()
        .flatten()
        .all(|e| field.valuation(e) >= Valuation::Finite(0))
        && field.valuation(&det(field, k)) == Valuation::Finite(0)
}

/// Decomposes `samples` random matrices and checks `k b = g`, `k` integral
/// unimodular, `b` upper triangular of determinant 1.
pub fn iwasawa_check<R: RngCore + ?Sized>(
    field: &Field,
    samples: usize,
    rng: &mut R,
) -> Result<IwasawaReport, TreeError> {
    require_local(field)?;
    let mut report = IwasawaReport::default();
    for _ in 0..samples {
        let g = random_sl2(field, rng, 2)?;
        report.samples += 1;
        let witness = format_mat(field, &g);
        match iwasawa_decompose(field, &g) {
            Err(e) => report.failures.push(format!("g={witness}: {e}")),
            Ok(IwasawaFactors { k, b }) => {
                if !mat_eq(field, &mat_mul(field, &k, &b), &g) {
                    report
                        .failures
                        .push(format!("g={witness}: k b differs from g"));
                }
                if !is_integral_unimodular(field, &k) {
                    report.failures.push(format!(
                        "g={witness}: k={} not integral unimodular",
                        format_mat(field, &k)
                    ));
                }
                if !field.is_zero(&b[1][0]) || !field.eq_to_precision(&det(field, &b), &field.one())
                {
                    report.failures.push(format!(
                        "g={witness}: b={} not upper triangular of det 1",
                        format_mat(field, &b)
                    ));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryReport {
    pub depth: u32,
    pub classes: usize,
    pub expected_classes: u64,
    pub orbits: usize,
    pub generators: usize,
    pub identity_fixes_all: bool,
}

impl BoundaryReport {
    pub fn passed(&self) -> bool {
        self.orbits == 1 && self.classes as u64 == self.expected_classes && self.identity_fixes_all
    }
}

/// Class of a primitive vector in `P^1(O/π^D)`: a tag (0 for `(x : 1)`,
/// 1 for `(1 : y)` with `y ∈ πO`) followed by the digits `0..D`.
fn boundary_class(
    field: &Field,
    v: &(FieldElement, FieldElement),
    depth: i64,
) -> Result<Vec<u32>, FieldError> {
    let (v1, v2) = v;
    let (tag, ratio) = if field.valuation(v2) == Valuation::Finite(0) {
        (0, field.div(v1, v2)?)
    } else if field.valuation(v1) == Valuation::Finite(0) {
        (1, field.div(v2, v1)?)
    } else {
        return Err(FieldError::NotIntegral);
    };
    let mut key = vec![tag];
    if field.is_zero(&ratio) {
        key.resize(depth as usize + 1, 0);
    } else {
        key.extend(field.digits(&ratio, 0, depth)?);
    }
    Ok(key)
}

fn class_vector(field: &Field, key: &[u32]) -> (FieldElement, FieldElement) {
    let x = field.from_digits(0, &key[1..]);
    if key[0] == 0 {
        (x, field.one())
    } else {
        (field.one(), x)
    }
}

fn apply(
    field: &Field,
    g: &Mat2,
    v: &(FieldElement, FieldElement),
) -> (FieldElement, FieldElement) {
    let r = |i: usize| field.add(&field.mul(&g[i][0], &v.0), &field.mul(&g[i][1], &v.1));
    (r(0), r(1))
}

/// Orbits of `SL_2(O)` on `P^1(O/π^D)`, generated by the elementary
/// matrices with entries `c π^k` (`c` a nonzero digit, `k < D`) and
/// `[[0, -1], [1, 0]]`.
pub fn boundary_transitivity_check(field: &Field, depth: u32) -> Result<BoundaryReport, TreeError> {
    let prec = require_local(field)?;
    if depth > prec || depth == 0 {
        return Err(FieldError::PrecisionExhausted.into());
    }
    let q = field.residue_size();
    let d = i64::from(depth);
    let mut classes: Vec<Vec<u32>> = Vec::new();
    for tag in 0..2u32 {
        let free = if tag == 0 { depth } else { depth - 1 };
        for code in 0..u64::from(q).pow(free) {
            let mut key = vec![tag];
            if tag == 1 {
                key.push(0);
            }
            key.extend((0..free).map(|k| ((code / u64::from(q).pow(k)) % u64::from(q)) as u32));
            classes.push(key);
        }
    }
    let index: BTreeMap<Vec<u32>, usize> = classes
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let (zero, one) = (field.zero(), field.one());
    let mut gens: Vec<Mat2> = vec![[[zero.clone(), field.neg(&one)], [one.clone(), zero.clone()]]];
    for c in 1..q {
        for k in 0..d {
            let e = field.monomial(c, k);
            gens.push([[one.clone(), e.clone()], [zero.clone(), one.clone()]]);
            gens.push([[one.clone(), zero.clone()], [e, one.clone()]]);
        }
    }
    let identity: Mat2 = [[one.clone(), zero.clone()], [zero.clone(), one.clone()]];
    let mut identity_fixes_all = true;
    let mut orbit = vec![usize::MAX; classes.len()];
    let mut orbits = 0;
    for start in 0..classes.len() {
        if orbit[start] != usize::MAX {
            continue;
        }
        orbit[start] = orbits;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let v = class_vector(field, &classes[i]);
            if boundary_class(field, &apply(field, &identity, &v), d)? != classes[i] {
                identity_fixes_all = false;
            }
            for g in &gens {
                let key = boundary_class(field, &apply(field, g, &v), d)?;
                let j = *index.get(&key).ok_or(FieldError::PrecisionExhausted)?;
                if orbit[j] == usize::MAX {
                    orbit[j] = orbits;
                    stack.push(j);
                }
            }
        }
        orbits += 1;
    }
    let distinct: BTreeSet<&Vec<u32>> = classes.iter().collect();
    Ok(BoundaryReport {
        depth,
        classes: distinct.len(),
        expected_classes: u64::from(q).pow(depth - 1) * (u64::from(q) + 1),
        orbits,
        generators: gens.len(),
        identity_fixes_all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localfield::FieldSpec;

    fn field(s: &str) -> Field {
        Field::new(s.parse::<FieldSpec>().unwrap()).unwrap()
    }

    #[test]
    fn ball_examples() {
        let f2 = field("Qp:p=2,prec=8");
        assert_eq!(build_tree_ball(&f2, 2).unwrap().len(), 10);
        assert_eq!(build_tree_ball(&f2, 0).unwrap().len(), 1);
        assert_eq!(
            build_tree_ball(&field("Laurent:q=3,prec=4"), 1)
                .unwrap()
                .len(),
            5
        );
        assert_eq!(
            build_tree_ball(&f2, 9),
            Err(TreeError::Field(FieldError::PrecisionExhausted))
        );
        assert_eq!(build_tree_ball(&field("F5"), 1), Err(TreeError::NotLocal));
        let ball = build_tree_ball(&f2, 3).unwrap();
        assert!(ball.is_tree());
        let deg = ball.degrees();
        for (v, d) in ball.vertices.iter().zip(deg) {
            let want = if v.depth() < 3 { 3 } else { 1 };
            assert_eq!(d, want, "{v:?}");
        }
    }

    #[test]
    fn distance_examples() {
        let u = LatticeVertex::new(-2, []);
        let v = LatticeVertex::new(1, [(-1, 1)]);
        assert_eq!(u.depth(), 2);
        assert_eq!(v.depth(), 3);
        assert_eq!(u.distance(&v), 3);
        assert_eq!(v.distance(&v), 0);
        for w in v.neighbours(3) {
            assert_eq!(v.distance(&w), 1);
        }
    }

    #[test]
    fn ray_examples() {
        let f = field("Qp:p=2,prec=8");
        let inf = BoundaryPoint::Polar(f.zero());
        let ray = ray_to_end(&f, &inf, 3).unwrap();
        assert_eq!(
            ray,
            (0..=3)
                .map(|a| LatticeVertex::new(-a, []))
                .collect::<Vec<_>>()
        );
        let zero = BoundaryPoint::Affine(f.zero());
        let ray = ray_to_end(&f, &zero, 3).unwrap();
        assert_eq!(
            ray,
            (0..=3)
                .map(|a| LatticeVertex::new(a, []))
                .collect::<Vec<_>>()
        );
        assert_eq!(
            ray_to_end(&f, &zero, 0).unwrap(),
            vec![LatticeVertex::base()]
        );
        let two = BoundaryPoint::Affine(f.from_int(2));
        let c = cone_vs_ultrametric(&f, &zero, &two, 4).unwrap();
        assert_eq!(
            (c.agreement, c.valuation_distance),
            (1, Valuation::Finite(1))
        );
        assert!(c.consistent);
        let one = BoundaryPoint::Affine(f.one());
        assert_eq!(
            cone_vs_ultrametric(&f, &zero, &one, 4).unwrap().agreement,
            0
        );
    }

    #[test]
    fn iwasawa_examples() {
        let f = field("Qp:p=5,prec=8");
        let (z, o, p) = (f.zero(), f.one(), f.from_int(5));
        let g = [[f.inv(&p).unwrap(), z.clone()], [z.clone(), p.clone()]];
        let r = iwasawa_decompose(&f, &g).unwrap();
        assert!(mat_eq(
            &f,
            &r.k,
            &[[o.clone(), z.clone()], [z.clone(), o.clone()]]
        ));
        assert!(mat_eq(&f, &r.b, &g));
        let w = [[z.clone(), f.neg(&o)], [o.clone(), z.clone()]];
        let r = iwasawa_decompose(&f, &w).unwrap();
        assert!(mat_eq(&f, &r.k, &w));
        assert!(mat_eq(
            &f,
            &r.b,
            &[[o.clone(), z.clone()], [z.clone(), o.clone()]]
        ));
        let bad = [[p.clone(), z.clone()], [z, p]];
        assert_eq!(
            iwasawa_decompose(&f, &bad),
            Err(TreeError::DeterminantNotOne)
        );
    }

    #[test]
    fn boundary_examples() {
        let r = boundary_transitivity_check(&field("Qp:p=2,prec=6"), 2).unwrap();
        assert_eq!((r.classes, r.orbits), (6, 1));
        assert!(r.passed());
        let r = boundary_transitivity_check(&field("Laurent:q=3,prec=4"), 1).unwrap();
        assert_eq!((r.classes, r.orbits), (4, 1));
    }
}
