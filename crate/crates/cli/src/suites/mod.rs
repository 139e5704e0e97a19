//! Check families. Each family draws its instances from its own seeded
//! stream, so families can be run alone with the same results as inside a
//! full suite.

use qrl::{Check, Tolerances};

use crate::config::{RunConfig, Suite};
use crate::error::CliResult;

pub mod approx;
pub mod convert;
pub mod lln;
pub mod measures;

/// The inputs every family reads.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub seed: u64,
    pub n_max: Option<usize>,
    pub tol: Tolerances,
    pub delta: Option<f64>,
}

impl Ctx {
    pub fn new(seed: u64) -> Self {
        Ctx { seed, n_max: None, tol: Tolerances::default(), delta: None }
    }

    pub fn from_config(cfg: &RunConfig) -> Self {
        Ctx { seed: cfg.seed, n_max: cfg.n_max, tol: cfg.tolerances, delta: cfg.delta }
    }

    /// `default`, lowered to the configured cap.
    pub fn depth(&self, default: usize) -> usize {
        self.n_max.map_or(default, |n| n.min(default))
    }

    pub fn delta_or(&self, default: f64) -> f64 {
        self.delta.unwrap_or(default)
    }
}

pub type FamilyFn = fn(&Ctx, usize) -> CliResult<Vec<Check>>;

pub struct Family {
    pub name: &'static str,
    pub suite: Suite,
    /// Stream family passed to [`qrl::gen::rng_for`].
    pub stream: u32,
    pub run: FamilyFn,
}

pub const FAMILIES: &[Family] = &[
    Family { name: "approx", suite: Suite::Approx, stream: 1, run: approx::approx },
    Family { name: "solovay", suite: Suite::Convert, stream: 2, run: convert::solovay },
    Family { name: "nesting", suite: Suite::Convert, stream: 3, run: convert::nesting },
    Family { name: "convexity", suite: Suite::Convert, stream: 4, run: convert::convexity },
    Family { name: "counting", suite: Suite::Measures, stream: 5, run: measures::counting },
    Family { name: "diagonal", suite: Suite::Measures, stream: 6, run: measures::diagonal },
    Family { name: "schnorr", suite: Suite::Measures, stream: 7, run: measures::schnorr },
    Family { name: "exactness", suite: Suite::Lln, stream: 8, run: lln::exactness },
    Family { name: "chernoff", suite: Suite::Lln, stream: 9, run: lln::chernoff },
    Family { name: "markov", suite: Suite::Lln, stream: 10, run: lln::markov },
    Family { name: "trace_markov", suite: Suite::Lln, stream: 11, run: lln::trace_markov },
];

pub fn family(name: &str) -> Option<&'static Family> {
    FAMILIES.iter().find(|f| f.name == name)
}

pub fn families_of(suite: Suite) -> impl Iterator<Item = &'static Family> {
    FAMILIES.iter().filter(move |f| suite == Suite::All || f.suite == suite)
}

pub(crate) fn stream(name: &str) -> u32 {
    family(name).expect("registered family").stream
}

/// Instance id `family/0007` or `family/0007/detail`.
pub(crate) fn instance(family: &str, id: usize, detail: &str) -> String {
    if detail.is_empty() {
        format!("{family}/{id:04}")
    } else {
        format!("{family}/{id:04}/{detail}")
    }
}

/// Re-labels checks produced by the library under `family/id`.
pub(crate) fn tagged(family: &str, id: usize, checks: impl IntoIterator<Item = Check>) -> impl Iterator<Item = Check> {
    let family = family.to_string();
    checks.into_iter().map(move |mut c| {
        c.instance = instance(&family, id, &c.instance);
        c
    })
}

/// A count that must be at least `need`; used to flag vacuous instances.
pub(crate) fn at_least(instance: String, what: &str, count: usize, need: usize) -> Check {
    Check::greater_eq(instance, format!("{what} ≥ {need}"), count as f64, need as f64, 0.0)
}
