//! Property suites: each draws random instances and checks one theorem on them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::generators::{self, GeneratorKind};
use crate::classifiers::{self, Classifier, Config};
use crate::error::{Error, Result};
use crate::io;
use crate::spectral;
use crate::subdivision::{Sign, Status};
use crate::tensor::Tensor;

/// Outcome of one instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Every checked statement agreed; `premise` records whether a hypothesis held.
    Agree { premise: bool },
    Violation(String),
    Inconclusive(String),
}

impl Outcome {
    fn and(self, other: Outcome) -> Outcome {
        use Outcome::*;
        match (self, other) {
            (Violation(a), Violation(b)) => Violation(format!("{a}; {b}")),
            (Violation(a), _) | (_, Violation(a)) => Violation(a),
            (Inconclusive(a), Inconclusive(b)) => Inconclusive(format!("{a}; {b}")),
            (Inconclusive(a), _) | (_, Inconclusive(a)) => Inconclusive(a),
            (Agree { premise: a }, Agree { premise: b }) => Agree { premise: a || b },
        }
    }
}

/// `p => q`, where `q` is only evaluated when `p` holds.
fn implies(what: &str, p: Status, q: impl FnOnce() -> Status) -> Outcome {
    match p {
        Status::Fails => Outcome::Agree { premise: false },
        Status::Inconclusive => Outcome::Inconclusive(format!("{what}: premise undecided")),
        Status::Holds => match q() {
            Status::Holds => Outcome::Agree { premise: true },
            Status::Fails => Outcome::Violation(format!("{what}: premise holds, conclusion fails")),
            Status::Inconclusive => Outcome::Inconclusive(format!("{what}: conclusion undecided")),
        },
    }
}

fn iff(what: &str, p: Status, q: Status) -> Outcome {
    match (p, q) {
        (Status::Inconclusive, _) | (_, Status::Inconclusive) => Outcome::Inconclusive(format!("{what}: undecided")),
        (a, b) if a == b => Outcome::Agree {
            premise: a == Status::Holds,
        },
        (a, b) => Outcome::Violation(format!("{what}: {a:?} vs {b:?}")),
    }
}

fn exact(what: &str, ok: bool) -> Outcome {
    if ok {
        Outcome::Agree { premise: true }
    } else {
        Outcome::Violation(what.to_string())
    }
}

type Runner = fn(&mut Instance) -> Result<Outcome>;

pub struct SuiteDef {
    pub name: &'static str,
    /// The statement under test, in plain terms.
    pub statement: &'static str,
    pub default_count: usize,
    run: Runner,
}

/// Per-instance context handed to a suite runner.
pub struct Instance<'a> {
    pub index: usize,
    pub order: usize,
    pub dim: usize,
    pub rng: ChaCha8Rng,
    pub cfg: &'a Config,
    /// The tensor to report if the instance violates the statement.
    pub tensor: Option<Tensor>,
}

impl Instance<'_> {
    fn keep(&mut self, t: &Tensor) {
        self.tensor = Some(t.clone());
    }

    fn classifier<'t>(&self, t: &'t Tensor) -> Result<Classifier<'t>> {
        Classifier::new(t, self.cfg)
    }
}

pub const SUITES: &[SuiteDef] = &[
    SuiteDef {
        name: "dd_implies_E0",
        statement: "a diagonally dominant tensor with nonnegative diagonal is semi-positive",
        default_count: 200,
        run: dd_implies_e0,
    },
    SuiteDef {
        name: "strict_dd_implies_E",
        statement: "a strictly diagonally dominant tensor with positive diagonal is strictly semi-positive",
        default_count: 200,
        run: strict_dd_implies_e,
    },
    SuiteDef {
        name: "nonneg_implies_E0",
        statement: "nonnegative tensors are semi-positive and positive ones strictly so",
        default_count: 200,
        run: nonneg_implies_e0,
    },
    SuiteDef {
        name: "z_E0_iff_M",
        statement: "a Z-tensor is semi-positive iff it is an M-tensor, and strictly iff strong M",
        default_count: 200,
        run: z_e0_iff_m,
    },
    SuiteDef {
        name: "copositive_implies_semipositive",
        statement: "copositive tensors are semi-positive, strictly copositive ones strictly semi-positive",
        default_count: 200,
        run: copositive_implies_semipositive,
    },
    SuiteDef {
        name: "sym_semipositive_implies_copositive",
        statement: "a symmetric semi-positive tensor is copositive, and likewise for the strict classes",
        default_count: 200,
        run: sym_semipositive_implies_copositive,
    },
    SuiteDef {
        name: "sym_almostE0_iff_almostC0",
        statement: "for symmetric tensors the almost semi-positive and almost copositive classes coincide",
        default_count: 200,
        run: sym_almost_iff,
    },
    SuiteDef {
        name: "almost_scaling_permutation_invariance",
        statement: "almost classes are preserved by positive row scaling, positive variable scaling and simultaneous permutation",
        default_count: 200,
        run: almost_invariance,
    },
    SuiteDef {
        name: "almost_rows_have_negative_entry",
        statement: "every row of an almost semi-positive tensor has a negative entry",
        default_count: 200,
        run: almost_rows_negative,
    },
    SuiteDef {
        name: "almost_entry_conditions",
        statement: "almost semi-positive tensors meet the diagonal and row-sum sign conditions",
        default_count: 200,
        run: almost_entry_conditions,
    },
    SuiteDef {
        name: "almostE_trichotomy",
        statement: "an almost strictly semi-positive tensor is almost semi-positive or semi-positive",
        default_count: 200,
        run: almost_e_trichotomy,
    },
    SuiteDef {
        name: "stabilizer",
        statement: "adding the stabilizing diagonal to an almost semi-positive tensor gives an almost strictly semi-positive, completely S0 tensor",
        default_count: 50,
        run: stabilizer,
    },
    SuiteDef {
        name: "weighted_characterization",
        statement: "a positive vector certifying the almost class makes x^T D A x^{m-1} negative for every nonzero nonnegative diagonal D",
        default_count: 200,
        run: weighted,
    },
    SuiteDef {
        name: "sym_almostE0_negative_hpp",
        statement: "symmetric almost semi-positive tensors have a negative eigenvalue with a positive eigenvector",
        default_count: 200,
        run: sym_negative_hpp,
    },
];

pub fn suite(name: &str) -> Result<&'static SuiteDef> {
    SUITES
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownName(name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub detail: String,
    pub tensor: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Undecided {
    pub index: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub statement: String,
    pub seed: u64,
    pub instances: usize,
    pub decisive: usize,
    /// Decisive instances on which a hypothesis of the statement held.
    pub premise_held: usize,
    pub inconclusive: usize,
    pub violations: Vec<Violation>,
    pub undecided: Vec<Undecided>,
    pub generator_failures: Vec<Undecided>,
    pub config: Config,
}

impl SuiteReport {
    pub fn inconclusive_rate(&self) -> f64 {
        (self.inconclusive + self.generator_failures.len()) as f64 / self.instances.max(1) as f64
    }

    pub fn passed(&self, max_inconclusive_rate: f64) -> bool {
        self.violations.is_empty() && self.inconclusive_rate() < max_inconclusive_rate
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of instance `index` in `suite`; independent of scheduling.
pub fn instance_seed(seed: u64, suite: &str, index: usize) -> u64 {
    let name = suite.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    splitmix(splitmix(seed ^ name) ^ index as u64)
}

/// `(m, n)` for instance `index`, cycling over `{3, 4} x {2, 3, 4}`.
pub fn shape(index: usize) -> (usize, usize) {
    ([3, 4][index % 2], [2, 3, 4][(index / 2) % 3])
}

pub fn run_suite(name: &str, seed: u64, count: usize, cfg: &Config) -> Result<SuiteReport> {
    cfg.validate()?;
    let def = suite(name)?;
    let results: Vec<(std::result::Result<Outcome, String>, Option<Tensor>)> = (0..count)
        .into_par_iter()
        .map(|index| {
            let (order, dim) = shape(index);
            let mut inst = Instance {
                index,
                order,
                dim,
                rng: ChaCha8Rng::seed_from_u64(instance_seed(seed, def.name, index)),
                cfg,
                tensor: None,
            };
            let out = (def.run)(&mut inst).map_err(|e| e.to_string());
            (out, inst.tensor)
        })
        .collect();
    let mut report = SuiteReport {
        suite: def.name.to_string(),
        statement: def.statement.to_string(),
        seed,
        instances: count,
        decisive: 0,
        premise_held: 0,
        inconclusive: 0,
        violations: Vec::new(),
        undecided: Vec::new(),
        generator_failures: Vec::new(),
        config: cfg.clone(),
    };
    for (index, (out, tensor)) in results.into_iter().enumerate() {
        match out {
            Ok(Outcome::Agree { premise }) => {
                report.decisive += 1;
                report.premise_held += premise as usize;
            }
            Ok(Outcome::Violation(detail)) => {
                report.decisive += 1;
                report.violations.push(Violation {
                    index,
                    detail,
                    tensor: tensor.as_ref().map(io::to_value),
                });
            }
            Ok(Outcome::Inconclusive(detail)) => {
                report.inconclusive += 1;
                report.undecided.push(Undecided { index, detail });
            }
            Err(detail) => report.generator_failures.push(Undecided { index, detail }),
        }
    }
    Ok(report)
}

fn dd_implies_e0(inst: &mut Instance) -> Result<Outcome> {
    let a = generators::generate_one(GeneratorKind::DiagDominant, inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let premise = classifiers::is_diag_dominant(&a, false).status();
    let premise = if a.diag().iter().all(|&d| d >= 0.0) { premise } else { Status::Fails };
    Ok(implies("dd => E0", premise, || c.is_semi_positive(false).status()))
}

fn strict_dd_implies_e(inst: &mut Instance) -> Result<Outcome> {
    let a = generators::generate_one(GeneratorKind::StrictDiagDominant, inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let premise = classifiers::is_diag_dominant(&a, true).status();
    let premise = if a.diag().iter().all(|&d| d > 0.0) { premise } else { Status::Fails };
    Ok(implies("strict dd => E", premise, || c.is_semi_positive(true).status()))
}

fn bool_status(b: bool) -> Status {
    if b {
        Status::Holds
    } else {
        Status::Fails
    }
}

fn nonneg_implies_e0(inst: &mut Instance) -> Result<Outcome> {
    let a = generators::generate_one(GeneratorKind::Nonneg, inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let first = implies("nonneg => E0", bool_status(a.is_nonneg()), || c.is_semi_positive(false).status());
    let second = implies("positive => E", bool_status(a.is_positive()), || c.is_semi_positive(true).status());
    Ok(first.and(second))
}

fn z_e0_iff_m(inst: &mut Instance) -> Result<Outcome> {
    let factor = [0.5, 1.0, 1.5][(inst.index / 6) % 3];
    let a = generators::generate_one(GeneratorKind::ZTensor { factor }, inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let first = iff("E0 <=> M", c.is_semi_positive(false).status(), c.is_m_tensor(false).status());
    let second = iff("E <=> strong M", c.is_semi_positive(true).status(), c.is_m_tensor(true).status());
    Ok(first.and(second))
}

fn copositive_implies_semipositive(inst: &mut Instance) -> Result<Outcome> {
    let a = generators::mixed(inst.order, inst.dim, &mut inst.rng);
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let first = implies("C0 => E0", c.is_copositive(false).status(), || c.is_semi_positive(false).status());
    let second = implies("C => E", c.is_copositive(true).status(), || c.is_semi_positive(true).status());
    Ok(first.and(second))
}

fn sym_semipositive_implies_copositive(inst: &mut Instance) -> Result<Outcome> {
    let a = generators::generate_one(GeneratorKind::Symmetric, inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let first = implies("symmetric E0 => C0", c.is_semi_positive(false).status(), || c.is_copositive(false).status());
    let second = implies("symmetric E => C", c.is_semi_positive(true).status(), || c.is_copositive(true).status());
    Ok(first.and(second))
}

fn sym_almost_iff(inst: &mut Instance) -> Result<Outcome> {
    let a = generators::generate_one(GeneratorKind::Symmetric, inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let first = iff(
        "almost E0 <=> almost C0",
        c.is_almost_semi_positive(false)?.status(),
        c.is_almost_copositive(false)?.status(),
    );
    let second = iff(
        "almost E <=> almost C",
        c.is_almost_semi_positive(true)?.status(),
        c.is_almost_copositive(true)?.status(),
    );
    Ok(first.and(second))
}

/// Even instances are seeded almost semi-positive tensors, odd ones their stabilized
/// (almost strictly semi-positive) versions; every fourth odd one is a generic draw.
fn almost_candidate(inst: &mut Instance) -> Result<Tensor> {
    let (m, n) = (inst.order, inst.dim);
    let a = match inst.index % 4 {
        0 | 2 => generators::almost_e0(m, n, &mut inst.rng, inst.cfg)?.0,
        1 => {
            let (a, x) = generators::almost_e0(m, n, &mut inst.rng, inst.cfg)?;
            a.add(&classifiers::stabilizing_diagonal(&a, &x)?)?
        }
        _ => generators::mixed(m, n, &mut inst.rng),
    };
    inst.keep(&a);
    Ok(a)
}

fn almost_invariance(inst: &mut Instance) -> Result<Outcome> {
    let a = almost_candidate(inst)?;
    let n = a.dim();
    let d: Vec<f64> = (0..n).map(|_| inst.rng.random_range(0.5..2.0)).collect();
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(&mut inst.rng);
    let c = inst.classifier(&a)?;
    let base = [c.is_almost_semi_positive(false)?.status(), c.is_almost_semi_positive(true)?.status()];
    let mut out = Outcome::Agree { premise: base[0] == Status::Holds };
    for (label, t) in [
        ("row scaling", a.scale_rows(&d)?),
        ("variable scaling", a.scale_modes(&d)?),
        ("permutation", a.permute(&sigma)?),
    ] {
        let ct = inst.classifier(&t)?;
        out = out.and(iff(&format!("almost E0 under {label}"), base[0], ct.is_almost_semi_positive(false)?.status()));
        out = out.and(iff(&format!("almost E under {label}"), base[1], ct.is_almost_semi_positive(true)?.status()));
    }
    Ok(out)
}

fn almost_rows_negative(inst: &mut Instance) -> Result<Outcome> {
    let a = almost_candidate(inst)?;
    let c = inst.classifier(&a)?;
    let rows = bool_status(classifiers::rows_have_negative_entry(&a));
    let first = implies("almost E0 => negative entry per row", c.is_almost_semi_positive(false)?.status(), || rows);
    let second = implies("almost E => negative entry per row", c.is_almost_semi_positive(true)?.status(), || rows);
    Ok(first.and(second))
}

/// Slack allowed in the row-sum condition for the strict class, from the engine tolerance.
fn entry_tolerance(c: &Classifier) -> f64 {
    let a = c.tensor();
    c.epsilon() * (a.dim() as f64).powi(a.order() as i32 - 1)
}

fn almost_entry_conditions(inst: &mut Instance) -> Result<Outcome> {
    let a = almost_candidate(inst)?;
    let c = inst.classifier(&a)?;
    let e = classifiers::entry_conditions(&a);
    let tol = entry_tolerance(&c);
    let first = implies("almost E0 => (a) and (c)", c.is_almost_semi_positive(false)?.status(), || {
        bool_status(e.passes(false, tol))
    });
    let second = implies("almost E => (b) and (d)", c.is_almost_semi_positive(true)?.status(), || {
        bool_status(e.passes(true, tol))
    });
    Ok(first.and(second))
}

fn almost_e_trichotomy(inst: &mut Instance) -> Result<Outcome> {
    let a = almost_candidate(inst)?;
    let c = inst.classifier(&a)?;
    Ok(implies("almost E => almost E0 or E0", c.is_almost_semi_positive(true)?.status(), || {
        match (c.is_almost_semi_positive(false).map(|v| v.status()), c.is_semi_positive(false).status()) {
            (Ok(Status::Holds), _) | (_, Status::Holds) => Status::Holds,
            (Ok(Status::Fails), Status::Fails) => Status::Fails,
            _ => Status::Inconclusive,
        }
    }))
}

fn stabilizer(inst: &mut Instance) -> Result<Outcome> {
    let (a, x) = generators::almost_e0(inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    let d = classifiers::stabilizing_diagonal(&a, &x)?;
    let s = a.add(&d)?;
    inst.keep(&s);
    let defect = s.apply(&x)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c = inst.classifier(&s)?;
    Ok(exact(&format!("stabilized defect {defect:e}"), defect <= 1e-10)
        .and(implies("A + D almost E", Status::Holds, || c.is_almost_semi_positive(true).map_or(Status::Inconclusive, |v| v.status())))
        .and(implies("A + D completely S0", Status::Holds, || c.is_completely_s0().status())))
}

fn weighted(inst: &mut Instance) -> Result<Outcome> {
    let (a, x) = generators::almost_e0(inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let v = c.is_almost_semi_positive(false)?;
    let seed = inst.rng.random();
    let mut out = exact(
        "constructed vector fails the weighted test",
        classifiers::check_weighted_characterization(&a, &x, 50, seed)?,
    );
    if let Some(w) = v.witness() {
        out = out.and(exact(
            "engine witness fails the weighted test",
            classifiers::check_weighted_characterization(&a, w, 50, seed)?,
        ));
    }
    Ok(out)
}

fn sym_negative_hpp(inst: &mut Instance) -> Result<Outcome> {
    let a = generators::generate_one(GeneratorKind::Symmetric, inst.order, inst.dim, &mut inst.rng, inst.cfg)?;
    inst.keep(&a);
    let c = inst.classifier(&a)?;
    let cfg = inst.cfg;
    let seed = inst.rng.random();
    let tol = 1e-8 * a.max_abs().max(1.0);
    let search = |sign| -> Status {
        match spectral::find_hpp_eigenpair(&a, tol, cfg.eigen_restarts, seed, sign, cfg.interior_margin) {
            Ok(Some(p)) if p.residual <= tol => Status::Holds,
            // Not finding a pair is absence of evidence.
            _ => Status::Inconclusive,
        }
    };
    let first = implies("almost E0 => negative H++ eigenvalue", c.is_almost_semi_positive(false)?.status(), || {
        search(Sign::Negative)
    });
    let second = implies("almost E => nonpositive H++ eigenvalue", c.is_almost_semi_positive(true)?.status(), || {
        search(Sign::NonPositive)
    });
    Ok(first.and(second))
}

/// Reports for every suite, in table order.
pub fn run_all(seed: u64, count: Option<usize>, cfg: &Config) -> Result<Vec<SuiteReport>> {
    SUITES
        .iter()
        .map(|s| run_suite(s.name, seed, count.unwrap_or(s.default_count), cfg))
        .collect()
}
