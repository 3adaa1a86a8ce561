//! Tensor class predicates built on the subdivision engine and the spectral routines.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::{self, RadiusEnclosure};
use crate::subdivision::{self, Claim, EngineConfig, Objective, Sign, Stats, Status, Verdict};
use crate::tensor::{IndexSet, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub epsilon: f64,
    pub max_depth: usize,
    pub max_nodes: usize,
    pub subset_cap: usize,
    pub seed: u64,
    pub interior_margin: f64,
    pub spectral_tol: f64,
    pub spectral_max_iter: usize,
    pub eigen_restarts: usize,
    /// Largest subset size for which a missing `S0` solution is certified.
    pub s0_certify_max_dim: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            epsilon: 1e-9,
            max_depth: 40,
            max_nodes: 200_000,
            subset_cap: 12,
            seed: 0,
            interior_margin: 1e-6,
            spectral_tol: 1e-12,
            spectral_max_iter: 10_000,
            eigen_restarts: 8,
            s0_certify_max_dim: 4,
        }
    }
}

impl Config {
    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            epsilon: self.epsilon,
            max_depth: self.max_depth,
            max_nodes: self.max_nodes,
            interior_margin: self.interior_margin,
            ..EngineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.engine().validate()?;
        if self.subset_cap == 0 || self.subset_cap > 20 {
            return Err(Error::InvalidParameter("subset cap must lie in 1..=20".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Class {
    E0,
    E,
    #[serde(rename = "almostE0")]
    AlmostE0,
    #[serde(rename = "almostE")]
    AlmostE,
    C0,
    C,
    #[serde(rename = "almostC0")]
    AlmostC0,
    #[serde(rename = "almostC")]
    AlmostC,
    Z,
    M,
    #[serde(rename = "strongM")]
    StrongM,
    #[serde(rename = "diagDominant")]
    DiagDominant,
    #[serde(rename = "strictDiagDominant")]
    StrictDiagDominant,
    S,
    S0,
    #[serde(rename = "completelyS")]
    CompletelyS,
    #[serde(rename = "completelyS0")]
    CompletelyS0,
    #[serde(rename = "nonneg")]
    Nonneg,
    #[serde(rename = "positive")]
    Positive,
}

impl Class {
    pub const ALL: [Class; 19] = [
        Class::E0,
        Class::E,
        Class::AlmostE0,
        Class::AlmostE,
        Class::C0,
        Class::C,
        Class::AlmostC0,
        Class::AlmostC,
        Class::Z,
        Class::M,
        Class::StrongM,
        Class::DiagDominant,
        Class::StrictDiagDominant,
        Class::S,
        Class::S0,
        Class::CompletelyS,
        Class::CompletelyS0,
        Class::Nonneg,
        Class::Positive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Class::E0 => "E0",
            Class::E => "E",
            Class::AlmostE0 => "almostE0",
            Class::AlmostE => "almostE",
            Class::C0 => "C0",
            Class::C => "C",
            Class::AlmostC0 => "almostC0",
            Class::AlmostC => "almostC",
            Class::Z => "Z",
            Class::M => "M",
            Class::StrongM => "strongM",
            Class::DiagDominant => "diagDominant",
            Class::StrictDiagDominant => "strictDiagDominant",
            Class::S => "S",
            Class::S0 => "S0",
            Class::CompletelyS => "completelyS",
            Class::CompletelyS0 => "completelyS0",
            Class::Nonneg => "nonneg",
            Class::Positive => "positive",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Class::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

/// `A = t I - B` with `B >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZDecomposition {
    pub t: f64,
    pub b: Tensor,
}

pub fn is_z_tensor(a: &Tensor) -> Option<Vec<usize>> {
    a.entries()
        .iter()
        .enumerate()
        .find(|&(pos, &v)| v > 0.0 && !a.is_diagonal_position(pos))
        .map(|(pos, _)| a.multi_index(pos))
}

pub fn z_decompose(a: &Tensor) -> Result<ZDecomposition> {
    if let Some(idx) = is_z_tensor(a) {
        return Err(Error::NotZTensor(idx));
    }
    let t = a.diag().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let b = Tensor::identity(a.order(), a.dim())?.scale(t).sub(a)?;
    Ok(ZDecomposition { t, b })
}

/// `|a_{i..i}| >= sum of |off-diagonal entries in row i|` for every `i` (strict: `>`).
pub fn is_diag_dominant(a: &Tensor, strict: bool) -> Verdict {
    let bad: Vec<String> = a
        .diag()
        .into_iter()
        .enumerate()
        .filter_map(|(i, d)| {
            let off: f64 = a.off_diagonal_row(i).map(f64::abs).sum();
            let ok = if strict { d.abs() > off } else { d.abs() >= off };
            (!ok).then(|| format!("row {i}: |{d}| vs {off}"))
        })
        .collect();
    if bad.is_empty() {
        Verdict::holds(0.0, Stats::default())
    } else {
        Verdict::fails_certified(0.0, Stats::default(), bad.join("; "))
    }
}

/// First row whose entries are all nonnegative (`positive`: all positive).
pub fn nonneg_row_subtensor(a: &Tensor, positive: bool) -> Option<usize> {
    (0..a.dim()).find(|&i| {
        a.row(i)
            .iter()
            .all(|&v| if positive { v > 0.0 } else { v >= 0.0 })
    })
}

pub fn has_nonneg_row_subtensor(a: &Tensor) -> Option<usize> {
    nonneg_row_subtensor(a, false)
}

/// Every row contains a negative entry.
pub fn rows_have_negative_entry(a: &Tensor) -> bool {
    (0..a.dim()).all(|i| a.row(i).iter().any(|&v| v < 0.0))
}

/// Sign conditions on entries that every almost (strictly) semi-positive tensor meets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryConditions {
    pub diagonal: Vec<f64>,
    /// `a_{k..k} + sum of the negative off-diagonal entries of row k`, per row.
    pub row_sums: Vec<f64>,
}

impl EntryConditions {
    pub fn diag_nonneg(&self, tol: f64) -> bool {
        self.diagonal.iter().all(|&d| d >= -tol)
    }

    pub fn diag_positive(&self) -> bool {
        self.diagonal.iter().all(|&d| d > 0.0)
    }

    /// First row with a negative sum.
    pub fn negative_row(&self) -> Option<usize> {
        self.row_sums.iter().position(|&s| s < 0.0)
    }

    /// First row with a sum at most `tol`.
    pub fn nonpositive_row(&self, tol: f64) -> Option<usize> {
        self.row_sums.iter().position(|&s| s <= tol)
    }

    /// The conditions for the almost semi-positive class (`strict`: strictly).
    pub fn passes(&self, strict: bool, tol: f64) -> bool {
        if strict {
            self.diag_positive() && self.nonpositive_row(tol).is_some()
        } else {
            self.diag_nonneg(tol) && self.negative_row().is_some()
        }
    }
}

pub fn entry_conditions(a: &Tensor) -> EntryConditions {
    let diagonal = a.diag();
    let row_sums = diagonal
        .iter()
        .enumerate()
        .map(|(k, d)| d + a.off_diagonal_row(k).filter(|&v| v < 0.0).sum::<f64>())
        .collect();
    EntryConditions { diagonal, row_sums }
}

/// Diagonal `D` with `d_i = -(A x^{m-1})_i / x_i^{m-1}`, so `(A + D) x^{m-1} = 0`.
pub fn stabilizing_diagonal(a: &Tensor, x: &[f64]) -> Result<Tensor> {
    let ax = a.apply(x)?;
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidWitness("x must be strictly positive".into()));
    }
    if ax.iter().any(|&v| !(v < 0.0)) {
        return Err(Error::InvalidWitness("A x^{m-1} must be strictly negative".into()));
    }
    let p = a.order() as i32 - 1;
    let d: Vec<f64> = ax.iter().zip(x).map(|(v, xi)| -v / xi.powi(p)).collect();
    Tensor::diagonal(a.order(), &d)
}

/// Whether `x^T D (A x^{m-1}) < 0` for the coordinate diagonals and `trials` random
/// nonzero nonnegative diagonals.
pub fn check_weighted_characterization(a: &Tensor, x: &[f64], trials: usize, seed: u64) -> Result<bool> {
    let ax = a.apply(x)?;
    let n = a.dim();
    let weighted = |d: &[f64]| -> f64 { (0..n).map(|i| x[i] * d[i] * ax[i]).sum() };
    for i in 0..n {
        let mut d = vec![0.0; n];
        d[i] = 1.0;
        if !(weighted(&d) < 0.0) {
            return Ok(false);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut d: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) })
            .collect();
        if d.iter().all(|&v| v == 0.0) {
            d[rng.random_range(0..n)] = 1.0;
        }
        if !(weighted(&d) < 0.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Query {
    /// Some point with every component of `A_J y^{m-1}` below the threshold.
    Components { sign: Sign, interior: bool },
    /// Some point with every component of `A_J y^{m-1}` above the threshold.
    Positive { sign: Sign },
    /// Some point with `A_J y^m` below the threshold.
    Form { sign: Sign },
}

struct Scan {
    failed: Option<(IndexSet, Verdict)>,
    inconclusive: Option<IndexSet>,
    stats: Stats,
}

fn merge(acc: &mut Stats, s: Stats) {
    acc.nodes += s.nodes;
    acc.depth = acc.depth.max(s.depth);
    acc.worst_bound = match (acc.worst_bound, s.worst_bound) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
}

/// Runs class predicates on one tensor, sharing subset computations between them.
pub struct Classifier<'a> {
    a: &'a Tensor,
    cfg: Config,
    eps: f64,
    cache: Mutex<HashMap<(IndexSet, Query), Verdict>>,
}

impl<'a> Classifier<'a> {
    pub fn new(a: &'a Tensor, cfg: &Config) -> Result<Self> {
        cfg.validate()?;
        if a.order() < 2 {
            return Err(Error::OrderTooSmall(a.order()));
        }
        if a.dim() > cfg.subset_cap {
            return Err(Error::SubsetCapExceeded {
                dim: a.dim(),
                cap: cfg.subset_cap,
            });
        }
        Ok(Self {
            a,
            eps: cfg.engine().absolute_epsilon(a.max_abs()),
            cfg: cfg.clone(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn tensor(&self) -> &Tensor {
        self.a
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    /// Absolute tolerance used by every verdict.
    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    fn full(&self) -> IndexSet {
        IndexSet::full(self.a.dim())
    }

    /// Engine verdict for a query on `A_J`, in the engine's own terms:
    /// `Fails` means a point was found.
    fn engine(&self, j: &IndexSet, q: Query) -> Verdict {
        let key = (j.clone(), q);
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return v.clone();
        }
        let sub = self.a.principal_subtensor(j).expect("index sets come from this tensor");
        let cfg = self.cfg.engine();
        let v = match q {
            Query::Components { sign, interior } => {
                subdivision::search(&sub, Objective::Components, sign, interior, self.eps, &cfg)
            }
            Query::Positive { sign } => {
                let interior = sign == Sign::Negative;
                subdivision::search(&sub.scale(-1.0), Objective::Components, sign, interior, self.eps, &cfg)
            }
            Query::Form { sign } => subdivision::search(&sub, Objective::Form, sign, false, self.eps, &cfg),
        };
        self.cache.lock().expect("cache lock").insert(key, v.clone());
        v
    }

    /// Evaluate `property` on the subsets by increasing size, stopping after the
    /// first size that has a failing subset.
    fn scan(&self, subsets: Vec<IndexSet>, property: impl Fn(&IndexSet) -> Verdict + Sync) -> Scan {
        let mut stats = Stats::default();
        let mut inconclusive = None;
        let mut start = 0;
        while start < subsets.len() {
            let size = subsets[start].len();
            let end = subsets[start..]
                .iter()
                .position(|s| s.len() != size)
                .map_or(subsets.len(), |p| start + p);
            let group = &subsets[start..end];
            let results: Vec<Verdict> = group.par_iter().map(&property).collect();
            let mut failed = None;
            for (j, v) in group.iter().zip(results) {
                merge(&mut stats, v.stats());
                match v.status() {
                    Status::Fails if failed.is_none() => failed = Some((j.clone(), v)),
                    Status::Inconclusive if inconclusive.is_none() => inconclusive = Some(j.clone()),
                    _ => {}
                }
            }
            if failed.is_some() {
                return Scan {
                    failed,
                    inconclusive,
                    stats,
                };
            }
            start = end;
        }
        Scan {
            failed: None,
            inconclusive,
            stats,
        }
    }

    fn semi_positive_on(&self, j: &IndexSet, strict: bool) -> Verdict {
        let sign = if strict { Sign::NonPositive } else { Sign::Negative };
        self.engine(j, Query::Components { sign, interior: false })
    }

    /// Semi-positive (`strict`: strictly). `Fails` carries `x >= 0` whose support
    /// components of `A x^{m-1}` are all negative (nonpositive).
    pub fn is_semi_positive(&self, strict: bool) -> Verdict {
        self.semi_positive_over(IndexSet::all_subsets(self.a.dim()), strict)
    }

    fn semi_positive_over(&self, subsets: Vec<IndexSet>, strict: bool) -> Verdict {
        let sign = if strict { Sign::NonPositive } else { Sign::Negative };
        let scan = self.scan(subsets, |j| self.semi_positive_on(j, strict));
        if let Some((j, v)) = scan.failed {
            let x = j.embed(v.witness().expect("engine failures carry witnesses"), self.a.dim());
            let claim = Claim::Components {
                sign,
                support_only: true,
                min_coord: 0.0,
            };
            return Verdict::with_witness(Status::Fails, self.a, claim, &x, self.eps, scan.stats)
                .expect("subset witnesses extend to the full tensor")
                .with_note(format!("witness supported on {j}"));
        }
        match scan.inconclusive {
            Some(j) => Verdict::inconclusive(self.eps, scan.stats).with_note(format!("undecided on {j}")),
            None => Verdict::holds(self.eps, scan.stats),
        }
    }

    /// Almost semi-positive (`strict`: almost strictly). `Holds` carries `x > 0` with
    /// `A x^{m-1} < 0` (`<= 0`).
    pub fn is_almost_semi_positive(&self, strict: bool) -> Result<Verdict> {
        let n = self.a.dim();
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let proper = self.semi_positive_over(IndexSet::proper_subsets(n), strict);
        let mut stats = proper.stats();
        if proper.is_fails() {
            let note = proper.note().unwrap_or_default().to_string();
            return Ok(Verdict::fails_certified(self.eps, stats, format!("a proper principal subtensor is not semi-positive; {note}")));
        }
        let sign = if strict { Sign::NonPositive } else { Sign::Negative };
        let full = self.engine(&self.full(), Query::Components { sign, interior: true });
        merge(&mut stats, full.stats());
        if proper.is_inconclusive() {
            return Ok(Verdict::inconclusive(self.eps, stats).with_note(proper.note().unwrap_or("proper subtensors undecided").to_string()));
        }
        Ok(match full.status() {
            Status::Fails => {
                let claim = Claim::Components {
                    sign,
                    support_only: false,
                    min_coord: self.cfg.interior_margin,
                };
                Verdict::with_witness(Status::Holds, self.a, claim, full.witness().expect("witness"), self.eps, stats)
                    .expect("engine witness re-checks")
            }
            Status::Holds => Verdict::fails_certified(self.eps, stats, "no positive vector drives every component below the threshold"),
            Status::Inconclusive => Verdict::inconclusive(self.eps, stats).with_note("interior search undecided"),
        })
    }

    fn copositive_on(&self, j: &IndexSet, strict: bool) -> Verdict {
        let sign = if strict { Sign::NonPositive } else { Sign::Negative };
        self.engine(j, Query::Form { sign })
    }

    /// Copositive (`strict`: strictly). `Fails` carries `x >= 0` with `A x^m < 0` (`<= 0`).
    pub fn is_copositive(&self, strict: bool) -> Verdict {
        self.copositive_on(&self.full(), strict)
    }

    /// Copositivity of one principal subtensor.
    pub fn is_copositive_on(&self, j: &IndexSet, strict: bool) -> Verdict {
        self.copositive_on(j, strict)
    }

    /// Not (strictly) copositive while every proper principal subtensor is.
    pub fn is_almost_copositive(&self, strict: bool) -> Result<Verdict> {
        let n = self.a.dim();
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let full = self.copositive_on(&self.full(), strict);
        let mut stats = full.stats();
        if full.is_holds() {
            return Ok(Verdict::fails_certified(self.eps, stats, "the tensor itself is copositive"));
        }
        // Every proper principal subtensor is a principal subtensor of a maximal one.
        let scan = self.scan(IndexSet::maximal_proper_subsets(n), |j| self.copositive_on(j, strict));
        merge(&mut stats, scan.stats);
        if let Some((j, _)) = scan.failed {
            return Ok(Verdict::fails_certified(self.eps, stats, format!("principal subtensor on {j} is not copositive")));
        }
        if let Some(j) = scan.inconclusive {
            return Ok(Verdict::inconclusive(self.eps, stats).with_note(format!("undecided on {j}")));
        }
        if full.is_inconclusive() {
            return Ok(Verdict::inconclusive(self.eps, stats).with_note("full tensor undecided"));
        }
        let sign = if strict { Sign::NonPositive } else { Sign::Negative };
        Ok(Verdict::with_witness(Status::Holds, self.a, Claim::Form { sign }, full.witness().expect("witness"), self.eps, stats)
            .expect("engine witness re-checks"))
    }

    fn s_on(&self, j: &IndexSet, zero: bool) -> Verdict {
        let sign = if zero { Sign::NonPositive } else { Sign::Negative };
        let v = self.engine(j, Query::Positive { sign });
        let sub = self.a.principal_subtensor(j).expect("subset of this tensor");
        match v.status() {
            Status::Fails => {
                let claim = Claim::Components {
                    sign,
                    support_only: false,
                    min_coord: if zero { 0.0 } else { self.cfg.interior_margin },
                };
                Verdict::with_witness(Status::Holds, &sub.scale(-1.0), claim, v.witness().expect("witness"), self.eps, v.stats())
                    .expect("engine witness re-checks")
            }
            Status::Holds if zero && j.len() > self.cfg.s0_certify_max_dim => {
                Verdict::inconclusive(self.eps, v.stats()).with_note("no solution found; nonexistence is only certified in small dimension")
            }
            Status::Holds => Verdict::fails_certified(self.eps, v.stats(), "no nonnegative solution exists"),
            Status::Inconclusive => v,
        }
    }

    /// `A x^{m-1} > 0` has a solution `x > 0`. `Holds` carries the solution.
    pub fn is_s(&self) -> Verdict {
        self.s_on(&self.full(), false)
    }

    /// `A x^{m-1} >= 0` has a solution `0 != x >= 0`. `Holds` carries the solution.
    pub fn is_s0(&self) -> Verdict {
        self.s_on(&self.full(), true)
    }

    fn completely(&self, zero: bool) -> Verdict {
        let scan = self.scan(IndexSet::all_subsets(self.a.dim()), |j| self.s_on(j, zero));
        if let Some((j, _)) = scan.failed {
            return Verdict::fails_certified(self.eps, scan.stats, format!("principal subtensor on {j} has no solution"));
        }
        match scan.inconclusive {
            Some(j) => Verdict::inconclusive(self.eps, scan.stats).with_note(format!("undecided on {j}")),
            None => Verdict::holds(self.eps, scan.stats),
        }
    }

    pub fn is_completely_s(&self) -> Verdict {
        self.completely(false)
    }

    pub fn is_completely_s0(&self) -> Verdict {
        self.completely(true)
    }

    /// Spectral radius enclosure of `B` in `A = t I - B`.
    pub fn z_radius(&self) -> Result<(ZDecomposition, RadiusEnclosure)> {
        let z = z_decompose(self.a)?;
        let e = spectral::spectral_radius_nonneg(&z.b, self.cfg.spectral_tol, self.cfg.spectral_max_iter)?;
        Ok((z, e))
    }

    /// M-tensor (`strong`: strong M-tensor), by comparing `t` with the enclosure of `rho(B)`.
    pub fn is_m_tensor(&self, strong: bool) -> Verdict {
        let (z, e) = match self.z_radius() {
            Ok(v) => v,
            Err(Error::NotZTensor(idx)) => {
                return Verdict::fails_certified(self.eps, Stats::default(), format!("not a Z-tensor: positive entry at {idx:?}"))
            }
            Err(err) => return Verdict::inconclusive(self.eps, Stats::default()).with_note(err.to_string()),
        };
        let eps = self.eps;
        let note = format!("t = {}, rho(B) in [{}, {}]", z.t, e.lower, e.upper);
        let (holds, fails) = if strong {
            (z.t > e.upper + eps, z.t <= e.lower + eps)
        } else {
            (z.t >= e.upper - eps, z.t < e.lower - eps)
        };
        let v = if holds {
            Verdict::holds(eps, Stats::default())
        } else if fails {
            Verdict::fails_certified(eps, Stats::default(), "")
        } else {
            Verdict::inconclusive(eps, Stats::default())
        };
        v.with_note(note)
    }

    pub fn verdict(&self, class: Class) -> Result<Verdict> {
        let a = self.a;
        let exact = |ok: bool, why: &str| {
            if ok {
                Verdict::holds(0.0, Stats::default())
            } else {
                Verdict::fails_certified(0.0, Stats::default(), why)
            }
        };
        Ok(match class {
            Class::E0 => self.is_semi_positive(false),
            Class::E => self.is_semi_positive(true),
            Class::AlmostE0 => self.is_almost_semi_positive(false)?,
            Class::AlmostE => self.is_almost_semi_positive(true)?,
            Class::C0 => self.is_copositive(false),
            Class::C => self.is_copositive(true),
            Class::AlmostC0 => self.is_almost_copositive(false)?,
            Class::AlmostC => self.is_almost_copositive(true)?,
            Class::Z => match is_z_tensor(a) {
                None => Verdict::holds(0.0, Stats::default()),
                Some(idx) => Verdict::fails_certified(0.0, Stats::default(), format!("positive off-diagonal entry at {idx:?}")),
            },
            Class::M => self.is_m_tensor(false),
            Class::StrongM => self.is_m_tensor(true),
            Class::DiagDominant => is_diag_dominant(a, false),
            Class::StrictDiagDominant => is_diag_dominant(a, true),
            Class::S => self.is_s(),
            Class::S0 => self.is_s0(),
            Class::CompletelyS => self.is_completely_s(),
            Class::CompletelyS0 => self.is_completely_s0(),
            Class::Nonneg => exact(a.is_nonneg(), "negative entry"),
            Class::Positive => exact(a.is_positive(), "nonpositive entry"),
        })
    }
}

/// The claim a witness attached to `class`'s verdict must satisfy, and whether it
/// is evaluated on `-A` instead of `A`.
pub fn witness_claim(class: Class, status: Status, interior_margin: f64) -> Option<(Claim, bool)> {
    let comps = |sign, support_only, min_coord| Claim::Components {
        sign,
        support_only,
        min_coord,
    };
    use Class::*;
    use Sign::*;
    Some(match (class, status) {
        (E0, Status::Fails) => (comps(Negative, true, 0.0), false),
        (E, Status::Fails) => (comps(NonPositive, true, 0.0), false),
        (AlmostE0, Status::Holds) => (comps(Negative, false, interior_margin), false),
        (AlmostE, Status::Holds) => (comps(NonPositive, false, interior_margin), false),
        (C0, Status::Fails) | (AlmostC0, Status::Holds) => (Claim::Form { sign: Negative }, false),
        (C, Status::Fails) | (AlmostC, Status::Holds) => (Claim::Form { sign: NonPositive }, false),
        (S, Status::Holds) => (comps(Negative, false, interior_margin), true),
        (S0, Status::Holds) => (comps(NonPositive, false, 0.0), true),
        _ => return None,
    })
}

/// Re-evaluate the witness carried by a verdict for `class` on `a`.
pub fn recheck_witness(a: &Tensor, class: Class, v: &Verdict, interior_margin: f64) -> std::result::Result<(), String> {
    let Some(x) = v.witness() else {
        return Ok(());
    };
    let (claim, negate) = witness_claim(class, v.status(), interior_margin)
        .ok_or_else(|| format!("{class} verdict {:?} should not carry a witness", v.status()))?;
    let target = if negate { a.scale(-1.0) } else { a.clone() };
    subdivision::check_claim(&target, claim, x, v.epsilon())
}

/// SHA-256 of order, dimension and the little-endian entries.
pub fn digest(a: &Tensor) -> String {
    let mut h = Sha256::new();
    h.update((a.order() as u64).to_le_bytes());
    h.update((a.dim() as u64).to_le_bytes());
    for v in a.entries() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub order: usize,
    pub dim: usize,
    pub digest: String,
    pub config: Config,
    pub verdicts: BTreeMap<Class, Verdict>,
    pub skipped: BTreeMap<Class, String>,
    pub consistency_violations: Vec<String>,
}

impl ClassificationReport {
    pub fn get(&self, class: Class) -> Option<&Verdict> {
        self.verdicts.get(&class)
    }

    pub fn status(&self, class: Class) -> Option<Status> {
        self.get(class).map(Verdict::status)
    }

    pub fn any_inconclusive(&self) -> bool {
        self.verdicts.values().any(Verdict::is_inconclusive)
    }
}

/// Run every class predicate and cross-check the results.
pub fn classify(a: &Tensor, cfg: &Config) -> Result<ClassificationReport> {
    classify_only(a, cfg, &Class::ALL)
}

/// Run the listed class predicates and cross-check the results.
pub fn classify_only(a: &Tensor, cfg: &Config, classes: &[Class]) -> Result<ClassificationReport> {
    let c = Classifier::new(a, cfg)?;
    let mut verdicts = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    for &class in classes {
        match c.verdict(class) {
            Ok(v) => {
                verdicts.insert(class, v);
            }
            Err(e @ Error::DimensionTooSmall(_)) => {
                skipped.insert(class, e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    let consistency_violations = consistency(a, &verdicts, c.epsilon());
    Ok(ClassificationReport {
        order: a.order(),
        dim: a.dim(),
        digest: digest(a),
        config: cfg.clone(),
        verdicts,
        skipped,
        consistency_violations,
    })
}

/// Implications between classes, checked wherever both sides are decisive.
pub fn consistency(a: &Tensor, v: &BTreeMap<Class, Verdict>, eps: f64) -> Vec<String> {
    let st = |c: Class| v.get(&c).map(Verdict::status);
    let holds = |c: Class| st(c) == Some(Status::Holds);
    let fails = |c: Class| st(c) == Some(Status::Fails);
    let mut out = Vec::new();
    let mut implies = |p: bool, q_fails: bool, what: &str| {
        if p && q_fails {
            out.push(what.to_string());
        }
    };
    use Class::*;
    implies(holds(E), fails(E0), "E without E0");
    implies(holds(C), fails(C0), "C without C0");
    implies(holds(C0), fails(E0), "C0 without E0");
    implies(holds(C), fails(E), "C without E");
    implies(holds(Positive), fails(Nonneg), "positive without nonneg");
    implies(holds(Nonneg), fails(E0), "nonneg without E0");
    implies(holds(Positive), fails(E), "positive without E");
    implies(holds(S), fails(S0), "S without S0");
    implies(holds(CompletelyS), fails(S), "completely S without S");
    implies(holds(CompletelyS0), fails(S0), "completely S0 without S0");
    implies(holds(StrongM), fails(M), "strong M without M");
    let diag = a.diag();
    implies(
        holds(DiagDominant) && diag.iter().all(|&d| d >= 0.0),
        fails(E0),
        "diagonally dominant with nonnegative diagonal but not E0",
    );
    implies(
        holds(StrictDiagDominant) && diag.iter().all(|&d| d > 0.0),
        fails(E),
        "strictly diagonally dominant with positive diagonal but not E",
    );
    if holds(Z) {
        implies(holds(E0), fails(M), "Z and E0 but not M");
        implies(holds(M), fails(E0), "Z and M but not E0");
        implies(holds(E), fails(StrongM), "Z and E but not strong M");
        implies(holds(StrongM), fails(E), "Z and strong M but not E");
    }
    if a.is_symmetric() {
        implies(holds(E0), fails(C0), "symmetric E0 but not C0");
        implies(holds(E), fails(C), "symmetric E but not C");
        implies(holds(AlmostE0), fails(AlmostC0), "symmetric almost E0 but not almost C0");
        implies(holds(AlmostC0), fails(AlmostE0), "symmetric almost C0 but not almost E0");
        implies(holds(AlmostE), fails(AlmostC), "symmetric almost E but not almost C");
        implies(holds(AlmostC), fails(AlmostE), "symmetric almost C but not almost E");
    }
    let negative_rows = rows_have_negative_entry(a);
    implies(holds(AlmostE0), !negative_rows, "almost E0 with a row free of negative entries");
    implies(holds(AlmostE), !negative_rows, "almost E with a row free of negative entries");
    implies(holds(AlmostE), fails(AlmostE0) && fails(E0), "almost E but neither almost E0 nor E0");
    let conditions = entry_conditions(a);
    let tol = eps * (a.entries().len() / a.dim()) as f64;
    implies(holds(AlmostE0), !conditions.passes(false, tol), "almost E0 violating entry sign conditions");
    implies(holds(AlmostE), !conditions.passes(true, tol), "almost E violating entry sign conditions");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t3(coo: &[([usize; 3], f64)]) -> Tensor {
        let coo: Vec<_> = coo.iter().map(|(i, v)| (i.to_vec(), *v)).collect();
        Tensor::from_coo(3, 2, &coo).unwrap()
    }

    fn almost_e0() -> Tensor {
        t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -1.0), ([1, 0, 1], -1.0)])
    }

    fn almost_e() -> Tensor {
        t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -1.0), ([1, 0, 1], -3.0), ([1, 1, 1], 1.0)])
    }

    #[test]
    fn diag_dominance() {
        assert!(is_diag_dominant(&Tensor::identity(3, 2).unwrap(), true).is_holds());
        let v = is_diag_dominant(&almost_e0(), true);
        assert!(v.is_fails() && v.note().unwrap().contains("row 1: |0| vs 1"));
        let mut coo = vec![];
        for i in 0..3 {
            coo.push((vec![i; 3], 3.0));
            coo.push((vec![i, (i + 1) % 3, (i + 1) % 3], 1.0));
            coo.push((vec![i, (i + 2) % 3, (i + 2) % 3], -1.0));
        }
        let a = Tensor::from_coo(3, 3, &coo).unwrap();
        assert!(is_diag_dominant(&a, true).is_holds());
    }

    #[test]
    fn z_decomposition() {
        let z = z_decompose(&Tensor::identity(3, 2).unwrap()).unwrap();
        assert_eq!(z.t, 1.0);
        assert!(z.b.entries().iter().all(|&v| v == 0.0));

        let ones = Tensor::ones(3, 2).unwrap();
        let a = Tensor::identity(3, 2).unwrap().scale(3.0).sub(&ones).unwrap();
        let z = z_decompose(&a).unwrap();
        assert_eq!(z.t, 2.0);
        assert_eq!(z.b.diag(), vec![0.0, 0.0]);
        assert!(z.b.off_diagonal_row(0).all(|v| v == 1.0));
        let recon = Tensor::identity(3, 2).unwrap().scale(z.t).sub(&z.b).unwrap();
        assert_eq!(recon, a);

        let b = t3(&[([0, 0, 0], 1.0), ([0, 1, 1], 2.0), ([1, 0, 0], 2.0), ([1, 1, 1], 1.0)]);
        assert!(matches!(z_decompose(&b), Err(Error::NotZTensor(_))));
    }

    #[test]
    fn m_tensors() {
        let cfg = Config::default();
        let id = Tensor::identity(3, 2).unwrap();
        assert!(Classifier::new(&id, &cfg).unwrap().is_m_tensor(true).is_holds());
        for (m, n) in [(3, 2), (3, 3), (4, 2)] {
            let k = (n as f64).powi(m as i32 - 1);
            let ones = Tensor::ones(m, n).unwrap();
            let boundary = Tensor::identity(m, n).unwrap().scale(k).sub(&ones).unwrap();
            let c = Classifier::new(&boundary, &cfg).unwrap();
            assert!(c.is_m_tensor(false).is_holds(), "m={m} n={n}");
            assert!(c.is_m_tensor(true).is_fails());
            let half = Tensor::identity(m, n).unwrap().scale(0.5 * k).sub(&ones).unwrap();
            assert!(Classifier::new(&half, &cfg).unwrap().is_m_tensor(false).is_fails());
        }
    }

    #[test]
    fn semi_positivity() {
        let cfg = Config::default();
        let a = t3(&[([0, 0, 0], 1.0), ([1, 1, 1], 1.0), ([1, 0, 0], -1.0), ([0, 1, 1], -1.0)]);
        let b = t3(&[([0, 0, 0], 1.0), ([0, 1, 1], 2.0), ([1, 0, 0], 2.0), ([1, 1, 1], 1.0)]);
        assert!(Classifier::new(&a, &cfg).unwrap().is_semi_positive(false).is_holds());
        assert!(Classifier::new(&b, &cfg).unwrap().is_semi_positive(false).is_holds());
        let ab = a.hadamard(&b).unwrap();
        let v = Classifier::new(&ab, &cfg).unwrap().is_semi_positive(false);
        assert!(v.is_fails());
        let w = v.witness().unwrap();
        assert!((w[0] - 0.5).abs() < 1e-6, "{w:?}");
        assert_eq!(ab.apply(&[1.0, 1.0]).unwrap(), vec![-1.0, -1.0]);

        let sbar = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -2.0), ([0, 1, 1], 1.0), ([1, 0, 0], -1.0), ([1, 1, 1], 1.0)]);
        let v = Classifier::new(&sbar, &cfg).unwrap().is_semi_positive(true);
        assert!(v.is_fails());
        assert!((v.witness().unwrap()[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn almost_classes() {
        let cfg = Config::default();
        let v = Classifier::new(&almost_e0(), &cfg).unwrap().is_almost_semi_positive(false).unwrap();
        assert!(v.is_holds());
        let w = v.witness().unwrap();
        assert!(almost_e0().apply(w).unwrap().iter().all(|&f| f < 0.0));
        let v = Classifier::new(&almost_e(), &cfg).unwrap().is_almost_semi_positive(true).unwrap();
        assert!(v.is_holds());
        let w = v.witness().unwrap();
        assert!((w[0] - 0.5).abs() < 1e-6, "{w:?}");
        assert_eq!(almost_e().apply(&[1.0, 1.0]).unwrap(), vec![0.0, -2.0]);
        let id = Tensor::identity(3, 2).unwrap();
        assert!(Classifier::new(&id, &cfg).unwrap().is_almost_semi_positive(false).unwrap().is_fails());
        let one = Tensor::identity(3, 1).unwrap();
        assert!(matches!(
            Classifier::new(&one, &cfg).unwrap().is_almost_semi_positive(false),
            Err(Error::DimensionTooSmall(1))
        ));
    }

    #[test]
    fn copositivity() {
        let cfg = Config::default();
        let ex52 = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -2.0), ([1, 0, 1], -3.0), ([1, 1, 1], 1.0)]);
        let c = Classifier::new(&ex52, &cfg).unwrap();
        assert!(c.is_copositive(false).is_fails());
        assert!(c.is_almost_copositive(false).unwrap().is_holds());
        assert!(c.is_almost_copositive(true).unwrap().is_holds());
        let ex56 = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -2.0)]);
        let c = Classifier::new(&ex56, &cfg).unwrap();
        assert!(c.is_almost_copositive(false).unwrap().is_holds());
        assert!(c.is_semi_positive(false).is_holds());
        assert!(c.is_almost_semi_positive(false).unwrap().is_fails());
        assert_eq!(has_nonneg_row_subtensor(&ex56), Some(1));
        assert_eq!(has_nonneg_row_subtensor(&almost_e0()), None);
        assert_eq!(has_nonneg_row_subtensor(&Tensor::ones(3, 2).unwrap()), Some(0));
        assert!(Classifier::new(&Tensor::ones(3, 3).unwrap(), &cfg).unwrap().is_copositive(false).is_holds());
    }

    #[test]
    fn s_classes() {
        let cfg = Config::default();
        let id = Tensor::identity(3, 2).unwrap();
        let c = Classifier::new(&id, &cfg).unwrap();
        let v = c.is_s();
        assert!(v.is_holds());
        assert!(c.is_completely_s().is_holds());

        let s0bar = almost_e0();
        let c = Classifier::new(&s0bar, &cfg).unwrap();
        let v = c.is_s0();
        assert!(v.is_holds(), "{v:?}");
        assert!(c.is_completely_s0().is_holds());
        assert!(c.is_semi_positive(false).is_fails());

        let sbar = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -2.0), ([0, 1, 1], 1.0), ([1, 0, 0], -1.0), ([1, 1, 1], 1.0)]);
        let c = Classifier::new(&sbar, &cfg).unwrap();
        let v = c.is_s();
        assert!(v.is_holds());
        let f = sbar.apply(v.witness().unwrap()).unwrap();
        assert!(f.iter().all(|&x| x > 0.0));
        assert!(c.is_completely_s().is_holds());
        let f = sbar.apply(&[1.0, 1.1]).unwrap();
        assert!(f[0] > 0.0 && f[1] > 0.0);

        let neg = Tensor::identity(3, 2).unwrap().scale(-1.0);
        let c = Classifier::new(&neg, &cfg).unwrap();
        assert!(c.is_s().is_fails());
        assert!(c.is_s0().is_fails());
    }

    #[test]
    fn entry_condition_examples() {
        let e = entry_conditions(&almost_e0());
        assert_eq!(e.diagonal, vec![1.0, 0.0]);
        assert_eq!(e.row_sums, vec![0.0, -1.0]);
        assert_eq!(e.negative_row(), Some(1));
        assert!(e.passes(false, 0.0));
        let e = entry_conditions(&almost_e());
        assert!(e.diag_positive());
        assert_eq!(e.nonpositive_row(0.0), Some(0));
        let e = entry_conditions(&Tensor::identity(3, 2).unwrap());
        assert_eq!(e.negative_row(), None);
    }

    #[test]
    fn stabilizer() {
        let a = almost_e0();
        let d = stabilizing_diagonal(&a, &[1.0, 2.0]).unwrap();
        assert_eq!(d.diag(), vec![1.0, 0.5]);
        let s = a.add(&d).unwrap();
        assert!(s.apply(&[1.0, 2.0]).unwrap().iter().all(|v| v.abs() < 1e-12));
        let cfg = Config::default();
        let c = Classifier::new(&s, &cfg).unwrap();
        assert!(c.is_almost_semi_positive(true).unwrap().is_holds());
        assert!(c.is_completely_s0().is_holds());
        assert!(stabilizing_diagonal(&a, &[1.0, 0.0]).is_err());
        assert!(stabilizing_diagonal(&Tensor::identity(3, 2).unwrap(), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn weighted() {
        assert!(check_weighted_characterization(&almost_e0(), &[1.0, 2.0], 100, 1).unwrap());
        assert!(!check_weighted_characterization(&Tensor::identity(3, 2).unwrap(), &[1.0, 1.0], 10, 1).unwrap());
        let rem46 = t3(&[([0, 0, 0], 1.0), ([1, 1, 1], 1.0), ([0, 1, 1], -1.0), ([1, 0, 0], -1.0)]);
        assert!(!check_weighted_characterization(&rem46, &[1.0, 1.0], 10, 1).unwrap());
    }

    #[test]
    fn full_report() {
        let r = classify(&almost_e0(), &Config::default()).unwrap();
        assert_eq!(r.status(Class::AlmostE0), Some(Status::Holds));
        assert!(r.consistency_violations.is_empty(), "{:?}", r.consistency_violations);
        let zero = Tensor::zeros(3, 2).unwrap();
        let r = classify(&zero, &Config::default()).unwrap();
        assert_eq!(r.status(Class::E0), Some(Status::Holds));
        assert_eq!(r.status(Class::E), Some(Status::Fails));
        let one = classify(&Tensor::identity(3, 1).unwrap(), &Config::default()).unwrap();
        assert!(one.skipped.contains_key(&Class::AlmostE0));
        assert_eq!("almostC0".parse::<Class>().unwrap(), Class::AlmostC0);
    }
}
