//! Certified decisions over the standard simplex.
//!
//! On a sub-simplex with vertices `v_1..v_r`, a point is `x = sum l_j v_j` with `l` a
//! probability vector, and
//! `(A x^{m-1})_k = sum l_{j2}..l_{jm} A(e_k, v_{j2}, .., v_{jm})`.
//! The multilinear coefficients, averaged over index permutations, bound each
//! component from below and above. A leaf is certified when a convex combination
//! of components has all coefficients above the threshold (a small LP); the search
//! refines uncertified leaves best-first by longest-edge bisection, and splits at
//! a point where the objective touches the threshold so that point becomes a vertex.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome, Rel, Row};
use crate::tensor::{advance, Tensor};

const ON_SIMPLEX_TOL: f64 = 1e-12;
const MIN_VOLUME: f64 = 1e-14;

/// A simplex with `r` vertices inside the standard simplex of `R^r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simplex {
    vertices: Vec<Vec<f64>>,
    depth: usize,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>, depth: usize) -> Result<Self> {
        let r = vertices.len();
        if r == 0 {
            return Err(Error::DegenerateSimplex("no vertices".into()));
        }
        for v in &vertices {
            if v.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: v.len(),
                });
            }
            let sum: f64 = v.iter().sum();
            if v.iter().any(|&c| !c.is_finite() || c < -ON_SIMPLEX_TOL)
                || (sum - 1.0).abs() > ON_SIMPLEX_TOL
            {
                return Err(Error::DegenerateSimplex(format!(
                    "vertex {v:?} is off the standard simplex"
                )));
            }
        }
        let s = Self { vertices, depth };
        let vol = s.volume();
        if vol <= MIN_VOLUME {
            return Err(Error::DegenerateSimplex(format!("volume {vol:e}")));
        }
        Ok(s)
    }

    /// The standard simplex itself: vertices are the basis vectors.
    pub fn unit(r: usize) -> Self {
        let vertices = (0..r)
            .map(|j| (0..r).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { vertices, depth: 0 }
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.vertices.len()
    }

    /// `(r-1)`-dimensional volume from the Gram determinant of the edge vectors.
    pub fn volume(&self) -> f64 {
        let r = self.dim();
        if r == 1 {
            return 1.0;
        }
        let edges: Vec<Vec<f64>> = self.vertices[1..]
            .iter()
            .map(|v| v.iter().zip(&self.vertices[0]).map(|(a, b)| a - b).collect())
            .collect();
        let k = r - 1;
        let gram = DMatrix::from_fn(k, k, |i, j| dot(&edges[i], &edges[j]));
        let det = gram.determinant().max(0.0);
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        det.sqrt() / fact
    }

    fn edge_len2(&self, i: usize, j: usize) -> f64 {
        self.vertices[i]
            .iter()
            .zip(&self.vertices[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Longest edge; ties go to the lexicographically smallest vertex pair.
    pub fn longest_edge(&self) -> Option<(usize, usize)> {
        let r = self.dim();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..r {
            for j in i + 1..r {
                let l = self.edge_len2(i, j);
                if best.is_none_or(|(b, _, _)| l > b) {
                    best = Some((l, i, j));
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }

    pub fn diameter(&self) -> f64 {
        self.longest_edge()
            .map(|(i, j)| self.edge_len2(i, j).sqrt())
            .unwrap_or(0.0)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let r = self.dim();
        let w = vec![1.0 / r as f64; r];
        self.point(&w)
    }

    /// Point with barycentric coordinates `lambda`.
    pub fn point(&self, lambda: &[f64]) -> Vec<f64> {
        let r = self.dim();
        let mut x = vec![0.0; r];
        for (v, &l) in self.vertices.iter().zip(lambda) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += l * vi;
            }
        }
        x
    }

    /// Barycentric coordinates of `p`; `None` if the vertex matrix is singular.
    pub fn barycentric(&self, p: &[f64]) -> Option<Vec<f64>> {
        let r = self.dim();
        if p.len() != r {
            return None;
        }
        let m = DMatrix::from_fn(r, r, |i, j| self.vertices[j][i]);
        let b = DVector::from_column_slice(p);
        m.lu().solve(&b).map(|l| l.iter().copied().collect())
    }

    /// Longest-edge bisection. The first child keeps vertex `i` of the split edge
    /// `(i, j)`, so points on the shared facet belong to the first child.
    pub fn refine(&self) -> Result<(Simplex, Simplex)> {
        let (i, j) = self
            .longest_edge()
            .ok_or_else(|| Error::DegenerateSimplex("a single vertex cannot be bisected".into()))?;
        let mid: Vec<f64> = self.vertices[i]
            .iter()
            .zip(&self.vertices[j])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mut first = self.vertices.clone();
        first[j] = mid.clone();
        let mut second = self.vertices.clone();
        second[i] = mid;
        Ok((
            Simplex {
                vertices: first,
                depth: self.depth + 1,
            },
            Simplex {
                vertices: second,
                depth: self.depth + 1,
            },
        ))
    }

    /// Split at the point with barycentric coordinates `lambda` (nonnegative, sum 1):
    /// one child per vertex with positive weight, that vertex replaced by the point.
    fn split_at(&self, lambda: &[f64]) -> Vec<Simplex> {
        let p = self.point(lambda);
        lambda
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(j, _)| {
                let mut vertices = self.vertices.clone();
                vertices[j] = p.clone();
                Simplex {
                    vertices,
                    depth: self.depth + 1,
                }
            })
            .collect()
    }
}

/// Raw coefficients `c[k][(j2, .., jm)] = A(e_k, v_{j2}, .., v_{jm})`, the inner index
/// flattened row-major over the vertices.
pub fn component_coeffs(a: &Tensor, s: &Simplex) -> Result<Vec<Vec<f64>>> {
    if s.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: s.dim(),
        });
    }
    let data = a.blossom(1, s.vertices());
    let block = data.len() / a.dim();
    Ok(data.chunks(block).map(<[f64]>::to_vec).collect())
}

/// Raw coefficients `c[(j1, .., jm)] = A(v_{j1}, .., v_{jm})` of the form.
pub fn form_coeffs(a: &Tensor, s: &Simplex) -> Result<Vec<f64>> {
    if s.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: s.dim(),
        });
    }
    Ok(a.blossom(0, s.vertices()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

/// What the engine is looking for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    /// A witness needs a value `< -eps`; a leaf is certified by a bound `> -eps`.
    Negative,
    /// A witness needs a value `<= eps`; a leaf is certified by a bound `> eps`.
    NonPositive,
}

impl Sign {
    fn is_witness(self, v: f64, eps: f64) -> bool {
        match self {
            Sign::Negative => v < -eps,
            Sign::NonPositive => v <= eps,
        }
    }

    fn threshold(self, eps: f64) -> f64 {
        match self {
            Sign::Negative => -eps,
            Sign::NonPositive => eps,
        }
    }

    fn certifies(self, bound: f64, eps: f64) -> bool {
        bound > self.threshold(eps)
    }
}

/// A claim a witness vector must satisfy when re-evaluated through the tensor.
#[derive(Debug, Clone, Copy)]
pub enum Claim {
    /// Every component `(A x^{m-1})_k` is below the threshold; with
    /// `support_only`, only components where `x_k > 0` are checked.
    Components {
        sign: Sign,
        support_only: bool,
        min_coord: f64,
    },
    /// The form `A x^m` is below the threshold.
    Form { sign: Sign },
}

/// Re-evaluate a claim on `x` (normalized to sum 1 first). Returns a reason on failure.
pub fn check_claim(a: &Tensor, claim: Claim, x: &[f64], eps: f64) -> std::result::Result<(), String> {
    if x.len() != a.dim() {
        return Err(format!("witness has length {}, tensor dim {}", x.len(), a.dim()));
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err("witness must be finite and nonnegative".into());
    }
    let sum: f64 = x.iter().sum();
    if !(sum > 0.0) {
        return Err("witness must be nonzero".into());
    }
    let y: Vec<f64> = x.iter().map(|v| v / sum).collect();
    match claim {
        Claim::Components {
            sign,
            support_only,
            min_coord,
        } => {
            let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
            if lo < min_coord {
                return Err(format!("witness coordinate {lo:e} below interior margin {min_coord:e}"));
            }
            let f = a.apply(&y).map_err(|e| e.to_string())?;
            let worst = f
                .iter()
                .zip(&y)
                .filter(|(_, &yk)| !support_only || yk > 0.0)
                .map(|(fk, _)| *fk)
                .fold(f64::NEG_INFINITY, f64::max);
            if sign.is_witness(worst, eps) {
                Ok(())
            } else {
                Err(format!("largest component {worst:e} misses threshold {:e}", sign.threshold(eps)))
            }
        }
        Claim::Form { sign } => {
            let v = a.form_value(&y).map_err(|e| e.to_string())?;
            if sign.is_witness(v, eps) {
                Ok(())
            } else {
                Err(format!("form value {v:e} misses threshold {:e}", sign.threshold(eps)))
            }
        }
    }
}

/// Three-valued decision with its evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    status: Status,
    witness: Option<Vec<f64>>,
    epsilon: f64,
    nodes: usize,
    depth: usize,
    worst_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

/// Search statistics carried by a verdict.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub nodes: usize,
    pub depth: usize,
    pub worst_bound: Option<f64>,
}

impl Verdict {
    pub fn holds(epsilon: f64, stats: Stats) -> Self {
        Self::plain(Status::Holds, epsilon, stats)
    }

    pub fn inconclusive(epsilon: f64, stats: Stats) -> Self {
        Self::plain(Status::Inconclusive, epsilon, stats)
    }

    /// A negative answer justified by a certificate rather than a witness vector.
    pub fn fails_certified(epsilon: f64, stats: Stats, note: impl Into<String>) -> Self {
        Self::plain(Status::Fails, epsilon, stats).with_note(note)
    }

    /// A verdict backed by a witness. The witness is re-evaluated against `claim`
    /// on `tensor` and normalized to sum 1; a witness that does not re-check is an error.
    pub fn with_witness(
        status: Status,
        tensor: &Tensor,
        claim: Claim,
        witness: &[f64],
        epsilon: f64,
        stats: Stats,
    ) -> Result<Self> {
        check_claim(tensor, claim, witness, epsilon).map_err(Error::InvalidWitness)?;
        let sum: f64 = witness.iter().sum();
        let mut v = Self::plain(status, epsilon, stats);
        v.witness = Some(witness.iter().map(|x| x / sum).collect());
        Ok(v)
    }

    fn plain(status: Status, epsilon: f64, stats: Stats) -> Self {
        Self {
            status,
            witness: None,
            epsilon,
            nodes: stats.nodes,
            depth: stats.depth,
            worst_bound: stats.worst_bound,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn witness(&self) -> Option<&[f64]> {
        self.witness.as_deref()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn worst_bound(&self) -> Option<f64> {
        self.worst_bound
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn stats(&self) -> Stats {
        Stats {
            nodes: self.nodes,
            depth: self.depth,
            worst_bound: self.worst_bound,
        }
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == Status::Fails
    }

    pub fn is_inconclusive(&self) -> bool {
        self.status == Status::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    /// Relative tolerance; the absolute one is this times the largest entry magnitude.
    pub epsilon: f64,
    pub max_depth: usize,
    pub max_nodes: usize,
    /// Smallest coordinate of a normalized witness for claims needing `x > 0`.
    pub interior_margin: f64,
    pub polish_steps: usize,
    pub max_polishes: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-9,
            max_depth: 40,
            max_nodes: 200_000,
            interior_margin: 1e-6,
            polish_steps: 50,
            max_polishes: 40,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        if !(self.interior_margin >= 0.0) || self.interior_margin >= 0.5 {
            return Err(Error::InvalidParameter("interior margin must lie in [0, 0.5)".into()));
        }
        Ok(())
    }

    /// Absolute tolerance for a tensor of the given largest magnitude.
    pub fn absolute_epsilon(&self, scale: f64) -> f64 {
        self.epsilon * if scale > 0.0 { scale } else { 1.0 }
    }
}

/// Does some `y > 0` make every component of `A y^{m-1}` negative
/// (`Sign::Negative`) or nonpositive (`Sign::NonPositive`)?
///
/// `Fails` means such a `y` exists and is returned; `Holds` means every leaf of the
/// subdivision was certified.
pub fn decide_all_components_negative(a: &Tensor, sign: Sign, cfg: &EngineConfig) -> Result<Verdict> {
    cfg.validate()?;
    let eps = cfg.absolute_epsilon(a.max_abs());
    Ok(search(a, Objective::Components, sign, true, eps, cfg))
}

/// Is `A x^m >= 0` (`strict`: `> 0`) on the standard simplex?
pub fn decide_form_nonneg(a: &Tensor, strict: bool, cfg: &EngineConfig) -> Result<Verdict> {
    cfg.validate()?;
    let eps = cfg.absolute_epsilon(a.max_abs());
    let sign = if strict { Sign::NonPositive } else { Sign::Negative };
    Ok(search(a, Objective::Form, sign, false, eps, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Objective {
    /// Minimize `max_k (A y^{m-1})_k`.
    Components,
    /// Minimize `A y^m`.
    Form,
}

/// Run the engine with an absolute tolerance. With `interior`, witnesses must have
/// every normalized coordinate at least the configured margin.
pub(crate) fn search(
    a: &Tensor,
    objective: Objective,
    sign: Sign,
    interior: bool,
    eps: f64,
    cfg: &EngineConfig,
) -> Verdict {
    let margin = if interior { cfg.interior_margin } else { 0.0 };
    let claim = match objective {
        Objective::Components => Claim::Components {
            sign,
            support_only: false,
            min_coord: margin,
        },
        Objective::Form => Claim::Form { sign },
    };
    let mut engine = Engine::new(a, objective, sign, claim, margin, eps, cfg);
    let outcome = engine.run();
    let stats = Stats {
        nodes: engine.nodes,
        depth: engine.max_depth_seen,
        worst_bound: engine.worst_bound(),
    };
    match outcome {
        Outcome::Witness(y) => Verdict::with_witness(Status::Fails, a, claim, &y, eps, stats)
            .expect("engine witnesses are checked before they are returned"),
        Outcome::Certified => Verdict::holds(eps, stats),
        Outcome::Exhausted(why) => Verdict::inconclusive(eps, stats).with_note(why),
    }
}

enum Outcome {
    Witness(Vec<f64>),
    Certified,
    Exhausted(String),
}

/// Coefficient classes: each multi-index over `r` vertices maps to its sorted multiset.
struct Classes {
    class_of: Vec<usize>,
    counts: Vec<usize>,
}

impl Classes {
    fn new(r: usize, modes: usize) -> Self {
        let total = r.pow(modes as u32);
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(total);
        let mut counts = Vec::new();
        let mut idx = vec![0usize; modes];
        for _ in 0..total {
            let mut key = idx.clone();
            key.sort_unstable();
            let next = ids.len();
            let id = *ids.entry(key).or_insert(next);
            if id == counts.len() {
                counts.push(0);
            }
            counts[id] += 1;
            class_of.push(id);
            advance(&mut idx, r);
        }
        Self { class_of, counts }
    }

    fn average(&self, raw: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.counts.len()];
        for (&c, &v) in self.class_of.iter().zip(raw) {
            sums[c] += v;
        }
        sums.iter()
            .zip(&self.counts)
            .map(|(s, &n)| s / n as f64)
            .collect()
    }
}

struct Node {
    simplex: Simplex,
    bound: f64,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: the smallest bound, then the oldest node, comes out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Engine<'a> {
    a: &'a Tensor,
    objective: Objective,
    sign: Sign,
    claim: Claim,
    margin: f64,
    eps: f64,
    cfg: &'a EngineConfig,
    classes: Classes,
    scale: f64,
    nodes: usize,
    max_depth_seen: usize,
    seq: u64,
    best_value: f64,
    polishes: usize,
    touch: Vec<Vec<f64>>,
    worst_certified: Option<f64>,
    worst_open: Option<f64>,
}

const TOUCH_LIMIT: usize = 8;

impl<'a> Engine<'a> {
    fn new(
        a: &'a Tensor,
        objective: Objective,
        sign: Sign,
        claim: Claim,
        margin: f64,
        eps: f64,
        cfg: &'a EngineConfig,
    ) -> Self {
        let r = a.dim();
        let modes = match objective {
            Objective::Components => a.order() - 1,
            Objective::Form => a.order(),
        };
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        Self {
            a,
            objective,
            sign,
            claim,
            margin,
            eps,
            cfg,
            classes: Classes::new(r, modes),
            scale,
            nodes: 0,
            max_depth_seen: 0,
            seq: 0,
            best_value: f64::INFINITY,
            polishes: 0,
            touch: Vec::new(),
            worst_certified: None,
            worst_open: None,
        }
    }

    fn worst_bound(&self) -> Option<f64> {
        match (self.worst_open, self.worst_certified) {
            (Some(o), _) => Some(o),
            (None, c) => c,
        }
    }

    fn value(&self, y: &[f64]) -> f64 {
        match self.objective {
            Objective::Components => self
                .a
                .apply(y)
                .expect("engine points match the tensor dimension")
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max),
            Objective::Form => self.a.form_value(y).expect("engine points match the tensor dimension"),
        }
    }

    /// Values and Jacobian rows of the functions whose maximum is minimized.
    fn linearize(&self, y: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        match self.objective {
            Objective::Components => (
                self.a.apply(y).expect("dimension checked"),
                self.a.jacobian(y).expect("dimension checked"),
            ),
            Objective::Form => (
                vec![self.a.form_value(y).expect("dimension checked")],
                vec![self.a.form_gradient(y).expect("dimension checked")],
            ),
        }
    }

    fn run(&mut self) -> Outcome {
        let r = self.a.dim();
        let root = Simplex::unit(r);
        if r == 1 {
            self.nodes = 1;
            let v = self.value(&[1.0]);
            if self.sign.is_witness(v, self.eps) {
                return Outcome::Witness(vec![1.0]);
            }
            self.worst_certified = Some(v);
            return Outcome::Certified;
        }

        if let Some(w) = self.probe(&root.centroid()) {
            return Outcome::Witness(w);
        }
        for v in root.vertices().to_vec() {
            if let Some(w) = self.probe(&v) {
                return Outcome::Witness(w);
            }
        }

        let mut heap = BinaryHeap::new();
        let bound = self.bound(&root);
        if self.sign.certifies(bound, self.eps) {
            self.nodes = 1;
            self.worst_certified = Some(bound);
            return Outcome::Certified;
        }
        self.push(&mut heap, root, bound);

        let mut exhausted = false;
        while let Some(node) = heap.pop() {
            if self.nodes >= self.cfg.max_nodes {
                self.note_open(node.bound);
                return Outcome::Exhausted(format!("node budget {} reached", self.cfg.max_nodes));
            }
            self.nodes += 1;
            self.max_depth_seen = self.max_depth_seen.max(node.simplex.depth());

            if let Some(w) = self.probe(&node.simplex.centroid()) {
                return Outcome::Witness(w);
            }
            if node.simplex.depth() >= self.cfg.max_depth {
                exhausted = true;
                self.note_open(node.bound);
                continue;
            }
            let children = match self.touch_split(&node.simplex) {
                Some(children) => children,
                None => {
                    let (_, j) = node.simplex.longest_edge().expect("r >= 2");
                    let (c1, c2) = node.simplex.refine().expect("r >= 2 simplices bisect");
                    // The new midpoint vertex is shared by both children.
                    if let Some(w) = self.probe(&c1.vertices()[j]) {
                        return Outcome::Witness(w);
                    }
                    vec![c1, c2]
                }
            };
            for child in children {
                let b = self.bound(&child);
                if self.sign.certifies(b, self.eps) {
                    self.worst_certified = Some(self.worst_certified.map_or(b, |w| w.min(b)));
                    self.max_depth_seen = self.max_depth_seen.max(child.depth());
                } else {
                    self.push(&mut heap, child, b);
                }
            }
        }
        if exhausted {
            Outcome::Exhausted(format!("depth limit {} reached", self.cfg.max_depth))
        } else {
            Outcome::Certified
        }
    }

    fn note_open(&mut self, b: f64) {
        self.worst_open = Some(self.worst_open.map_or(b, |w| w.min(b)));
    }

    fn push(&mut self, heap: &mut BinaryHeap<Node>, simplex: Simplex, bound: f64) {
        self.seq += 1;
        heap.push(Node {
            simplex,
            bound,
            seq: self.seq,
        });
    }

    /// Lower bound of the objective over the simplex.
    fn bound(&self, s: &Simplex) -> f64 {
        match self.objective {
            Objective::Form => {
                let raw = self.a.blossom(0, s.vertices());
                self.classes
                    .average(&raw)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
            }
            Objective::Components => {
                let raw = self.a.blossom(1, s.vertices());
                let block = raw.len() / self.a.dim();
                let per_k: Vec<Vec<f64>> = raw
                    .chunks(block)
                    .map(|c| self.classes.average(c))
                    .collect();
                let single = per_k
                    .iter()
                    .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
                    .fold(f64::NEG_INFINITY, f64::max);
                if self.sign.certifies(single, self.eps) {
                    return single;
                }
                single.max(mixture_bound(&per_k))
            }
        }
    }

    /// Evaluate a candidate; polish it if it improves the best value seen.
    fn probe(&mut self, y: &[f64]) -> Option<Vec<f64>> {
        if let Some(w) = self.accept(y) {
            return Some(w);
        }
        let v = self.value(y);
        if v < self.best_value {
            self.best_value = v;
            if self.polishes < self.cfg.max_polishes {
                self.polishes += 1;
                let (p, pv) = self.polish(y);
                if let Some(w) = self.accept(&p) {
                    return Some(w);
                }
                self.best_value = self.best_value.min(pv);
                self.remember_touch(p, pv);
            }
        }
        None
    }

    /// Return a checked witness near `y`, pushed inside the margin if needed.
    fn accept(&self, y: &[f64]) -> Option<Vec<f64>> {
        let y = push_inside(y, self.margin);
        if check_claim(self.a, self.claim, &y, self.eps).is_ok() {
            Some(y)
        } else {
            None
        }
    }

    fn remember_touch(&mut self, p: Vec<f64>, value: f64) {
        let thr = self.sign.threshold(self.eps);
        if value > thr + 1e-6 * self.scale || self.touch.len() >= TOUCH_LIMIT {
            return;
        }
        let near = |q: &Vec<f64>| q.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-9;
        if !self.touch.iter().any(near) {
            self.touch.push(p);
        }
    }

    /// Split at a remembered near-threshold point that lies well inside a face of `s`.
    fn touch_split(&self, s: &Simplex) -> Option<Vec<Simplex>> {
        for p in &self.touch {
            let Some(mut l) = s.barycentric(p) else {
                continue;
            };
            if l.iter().any(|&v| v < -1e-12) {
                continue;
            }
            l.iter_mut().for_each(|v| {
                if *v < 1e-9 {
                    *v = 0.0
                }
            });
            let support = l.iter().filter(|&&v| v > 0.0).count();
            let smallest = l.iter().copied().filter(|&v| v > 0.0).fold(1.0, f64::min);
            if support < 2 || smallest < 1e-4 {
                continue;
            }
            let total: f64 = l.iter().sum();
            l.iter_mut().for_each(|v| *v /= total);
            return Some(s.split_at(&l));
        }
        None
    }

    /// Trust-region descent on `max_k f_k` over the simplex (each step a small LP on
    /// the linearization), keeping every coordinate at least the margin.
    fn polish(&self, y0: &[f64]) -> (Vec<f64>, f64) {
        let r = y0.len();
        let mut y = push_inside(y0, self.margin);
        let mut g = self.value(&y);
        let mut delta = 0.1;
        for _ in 0..self.cfg.polish_steps {
            let (vals, jac) = self.linearize(&y);
            let lo: Vec<f64> = y.iter().map(|&yi| (yi - self.margin).clamp(0.0, delta)).collect();
            let t0 = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                + delta * jac.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
                + 1.0;
            // variables: e_0..e_{r-1} (d = e - lo), s (t = s - t0)
            let mut rows = Vec::with_capacity(vals.len() + r + 1);
            for (vk, jk) in vals.iter().zip(&jac) {
                let mut coeffs = jk.clone();
                coeffs.push(-1.0);
                let shift: f64 = jk.iter().zip(&lo).map(|(a, b)| a * b).sum();
                rows.push(Row {
                    coeffs,
                    rel: Rel::Le,
                    rhs: -t0 - vk + shift,
                });
            }
            for i in 0..r {
                let mut coeffs = vec![0.0; r + 1];
                coeffs[i] = 1.0;
                rows.push(Row {
                    coeffs,
                    rel: Rel::Le,
                    rhs: lo[i] + delta,
                });
            }
            let mut coeffs = vec![1.0; r + 1];
            coeffs[r] = 0.0;
            rows.push(Row {
                coeffs,
                rel: Rel::Eq,
                rhs: lo.iter().sum(),
            });
            let mut c = vec![0.0; r + 1];
            c[r] = -1.0;
            let LpOutcome::Optimal { x, .. } = lp::maximize(&c, &rows) else {
                break;
            };
            let d: Vec<f64> = x[..r].iter().zip(&lo).map(|(e, l)| e - l).collect();
            let model = vals
                .iter()
                .zip(&jac)
                .map(|(vk, jk)| vk + jk.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            let predicted = g - model;
            if !(predicted > 1e-17 * self.scale) {
                break;
            }
            let mut cand: Vec<f64> = y.iter().zip(&d).map(|(a, b)| (a + b).max(self.margin)).collect();
            let sum: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|v| *v /= sum);
            let gc = self.value(&cand);
            let actual = g - gc;
            if actual >= 0.1 * predicted {
                y = cand;
                g = gc;
                if actual >= 0.75 * predicted {
                    delta = (2.0 * delta).min(0.5);
                }
                if self.sign.is_witness(g, self.eps) && self.accept(&y).is_some() {
                    break;
                }
            } else {
                delta *= 0.25;
                if delta < 1e-15 {
                    break;
                }
            }
        }
        (y, g)
    }
}

/// Best lower bound `min_class sum_k mu_k c[k][class]` over mixtures `mu` on the simplex.
/// The value is recomputed from the clipped, renormalized LP solution so it is a valid
/// bound whatever the solver's rounding.
fn mixture_bound(per_k: &[Vec<f64>]) -> f64 {
    let r = per_k.len();
    if r < 2 {
        return f64::NEG_INFINITY;
    }
    let classes = per_k[0].len();
    let shift = per_k
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        + 1.0;
    // variables mu_0..mu_{r-1}, t' with t = t' - shift
    let mut rows = Vec::with_capacity(classes + 1);
    for a in 0..classes {
        let mut coeffs: Vec<f64> = per_k.iter().map(|c| -(c[a] + shift)).collect();
        coeffs.push(1.0);
        rows.push(Row {
            coeffs,
            rel: Rel::Le,
            rhs: 0.0,
        });
    }
    let mut coeffs = vec![1.0; r + 1];
    coeffs[r] = 0.0;
    rows.push(Row {
        coeffs,
        rel: Rel::Eq,
        rhs: 1.0,
    });
    let mut c = vec![0.0; r + 1];
    c[r] = 1.0;
    let LpOutcome::Optimal { x, .. } = lp::maximize(&c, &rows) else {
        return f64::NEG_INFINITY;
    };
    let mut mu: Vec<f64> = x[..r].iter().map(|v| v.max(0.0)).collect();
    let total: f64 = mu.iter().sum();
    if !(total > 0.0) {
        return f64::NEG_INFINITY;
    }
    mu.iter_mut().for_each(|v| *v /= total);
    (0..classes)
        .map(|a| per_k.iter().zip(&mu).map(|(c, m)| m * c[a]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Normalize to sum 1 and lift every coordinate to at least `margin`.
fn push_inside(y: &[f64], margin: f64) -> Vec<f64> {
    let sum: f64 = y.iter().map(|v| v.max(0.0)).sum();
    let r = y.len() as f64;
    let mut out: Vec<f64> = y.iter().map(|v| v.max(0.0) / sum).collect();
    let lo = out.iter().copied().fold(f64::INFINITY, f64::min);
    if margin > 0.0 && lo < margin {
        // Convex combination with the barycenter keeps the sum at 1.
        let s = (margin - lo) / (1.0 / r - lo) * (1.0 + 1e-9);
        let s = s.min(1.0);
        out.iter_mut().for_each(|v| *v = (1.0 - s) * *v + s / r);
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
