//! Exhaustive checks over small multiple clock domain circuits.
//!
//! The enumerated class has one data input `I` and `k` flip-flops, each on
//! its own free clock. Every flip-flop latches some non-empty subset of
//! `{I, F0, .., Fk-1}` and the output reads some non-empty subset of the same
//! sources. Free clocks stand for arbitrary independent clock domains, since
//! every latch/hold pattern is realised by some waveform.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::explore::explore;
use crate::influence::{forms_of_space, restriction_map_unchecked, ScheduleSpace};
use crate::model::{
    Circuit, Clock, ClockRef, FlipFlop, RefSet, ReferringForm, Schedule, Selector, Source,
};
use crate::oracle::{semantic_influence, Logic};
use crate::order::{check_time_preservation, lemma_check, LemmaViolation, WitnessEdge};

pub const DEFAULT_MAX_FFS: usize = 2;
pub const DEFAULT_ORACLE_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub max_ffs: usize,
    /// Cap on the schedule space of a single circuit.
    pub budget: u128,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_ffs: DEFAULT_MAX_FFS,
            budget: crate::DEFAULT_SCHEDULE_BUDGET,
        }
    }
}

fn source_base(ff_count: usize) -> usize {
    (1 << (ff_count + 1)) - 1
}

/// Number of circuits with `ff_count` flip-flops in the enumerated class.
pub fn mcd_circuit_count(ff_count: usize) -> usize {
    source_base(ff_count).pow(ff_count as u32 + 1)
}

fn subset(mask: usize, ff_count: usize) -> BTreeSet<Source> {
    let mut set = BTreeSet::new();
    if mask & 1 != 0 {
        set.insert(Source::Data(0));
    }
    for f in 0..ff_count {
        if mask & (1 << (f + 1)) != 0 {
            set.insert(Source::Ff(f));
        }
    }
    set
}

/// The `index`-th circuit of the class. The output subset varies fastest,
/// then `F0`'s source subset, and so on.
pub fn mcd_circuit(ff_count: usize, index: usize) -> Circuit {
    let base = source_base(ff_count);
    let mut rest = index;
    let mut next_mask = || {
        let m = rest % base + 1;
        rest /= base;
        m
    };
    let output = Selector::fixed(subset(next_mask(), ff_count));
    let ffs = (0..ff_count)
        .map(|f| FlipFlop {
            name: format!("F{f}"),
            clock: f,
            data_input: Selector::fixed(subset(next_mask(), ff_count)),
        })
        .collect();
    Circuit {
        name: format!("mcd{ff_count}_{index}"),
        data_ports: vec![String::from("I")],
        control_ports: Vec::new(),
        clocks: (0..ff_count)
            .map(|f| Clock {
                name: format!("c{f}"),
                kind: ClockRef::Free,
            })
            .collect(),
        ffs,
        output,
    }
}

/// Every circuit of the class with exactly `ff_count` flip-flops, once each.
pub fn enumerate_mcd_circuits(
    ff_count: usize,
    max_ffs: usize,
) -> Result<impl Iterator<Item = Circuit>> {
    if ff_count > max_ffs {
        return Err(Error::TooManyFlipFlops {
            requested: ff_count,
            max: max_ffs,
        });
    }
    Ok((0..mcd_circuit_count(ff_count)).map(move |i| mcd_circuit(ff_count, i)))
}

#[cfg(feature = "parallel")]
fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indices<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    Theorem,
    Lemma,
}

#[derive(Clone, Debug)]
pub enum FailureDetail {
    NotPreserving {
        witness: Vec<WitnessEdge>,
        forms: Vec<ReferringForm>,
    },
    Lemma {
        schedule_index: u128,
        form: ReferringForm,
        violation: LemmaViolation,
    },
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub circuit_index: usize,
    pub circuit: Circuit,
    pub detail: FailureDetail,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub property: Property,
    pub ff_count: usize,
    pub horizon: usize,
    pub circuits: usize,
    pub schedules_per_circuit: u128,
    /// (circuit, schedule) pairs examined.
    pub checked: u128,
    pub failures: Vec<Failure>,
    /// Circuits where some flip-flop latches its own value.
    pub self_loop_circuits: usize,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let noun = match self.property {
            Property::Theorem => "failures",
            Property::Lemma => "violations",
        };
        writeln!(
            f,
            "checked {} circuits × {} schedules: {} {noun}",
            self.circuits,
            self.schedules_per_circuit,
            self.failures.len()
        )?;
        writeln!(
            f,
            "{} (circuit, schedule) pairs; {} circuits have flip-flop self-loops",
            self.checked, self.self_loop_circuits
        )?;
        for failure in &self.failures {
            match &failure.detail {
                FailureDetail::NotPreserving { witness, .. } => {
                    writeln!(f, "circuit #{} is not time-preserving", failure.circuit_index)?;
                    for e in witness {
                        writeln!(
                            f,
                            "  {} -> {} (form {}, t={} to t={})",
                            DisplaySet(&e.from),
                            DisplaySet(&e.to),
                            e.form,
                            e.t1,
                            e.t2
                        )?;
                    }
                }
                FailureDetail::Lemma {
                    schedule_index,
                    violation,
                    ..
                } => writeln!(
                    f,
                    "circuit #{} schedule #{schedule_index}: latest reference decreases between t={} and t={}",
                    failure.circuit_index, violation.t1, violation.t2
                )?,
            }
        }
        Ok(())
    }
}

/// Occurrence set rendered as `{(0,3), (1,5)}` with port indices.
struct DisplaySet<'a>(&'a RefSet);

impl fmt::Display for DisplaySet<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "(I{},{})", o.port, o.time)?;
        }
        f.write_str("}")
    }
}

fn sweep(
    property: Property,
    ff_count: usize,
    horizon: usize,
    options: &VerifyOptions,
) -> Result<Report> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let circuits: Vec<Circuit> = enumerate_mcd_circuits(ff_count, options.max_ffs)?.collect();
    let space = ScheduleSpace::new(&circuits[0], horizon)?;
    let per_circuit = space.cardinality();
    if per_circuit > options.budget {
        return Err(Error::BudgetExceeded {
            required: per_circuit,
            budget: options.budget,
        });
    }
    let results = map_indices(circuits.len(), |i| {
        let circuit = &circuits[i];
        let detail = match property {
            Property::Theorem => {
                let forms: Vec<ReferringForm> =
                    forms_of_space(circuit, &space).into_iter().collect();
                let verdict = check_time_preservation(&forms).expect("at least one schedule");
                verdict.witness.map(|witness| {
                    let used: BTreeSet<usize> = witness.iter().map(|e| e.form).collect();
                    let renumber: Vec<usize> = used.into_iter().collect();
                    let forms = renumber.iter().map(|&k| forms[k].clone()).collect();
                    let witness = witness
                        .into_iter()
                        .map(|mut e| {
                            e.form = renumber.binary_search(&e.form).expect("form is used");
                            e
                        })
                        .collect();
                    FailureDetail::NotPreserving { witness, forms }
                })
            }
            Property::Lemma => (0..per_circuit).find_map(|s| {
                let form = restriction_map_unchecked(circuit, &space.schedule(s));
                lemma_check(&form)
                    .err()
                    .map(|violation| FailureDetail::Lemma {
                        schedule_index: s,
                        form,
                        violation,
                    })
            }),
        };
        detail.map(|detail| Failure {
            circuit_index: i,
            circuit: circuit.clone(),
            detail,
        })
    });
    Ok(Report {
        property,
        ff_count,
        horizon,
        circuits: circuits.len(),
        schedules_per_circuit: per_circuit,
        checked: per_circuit * circuits.len() as u128,
        failures: results.into_iter().flatten().collect(),
        self_loop_circuits: circuits
            .iter()
            .filter(|c| !c.self_loops().is_empty())
            .count(),
    })
}

/// Checks that every circuit of the class is time preserving over all
/// schedules of `horizon` steps.
pub fn verify_theorem(ff_count: usize, horizon: usize, options: &VerifyOptions) -> Result<Report> {
    sweep(Property::Theorem, ff_count, horizon, options)
}

/// Checks latest-occurrence monotonicity on every form of every circuit of
/// the class.
pub fn verify_lemma(ff_count: usize, horizon: usize, options: &VerifyOptions) -> Result<Report> {
    sweep(Property::Lemma, ff_count, horizon, options)
}

/// Two memories on free clocks, read through a two-way multiplexer.
pub fn selective_memory_circuit() -> Circuit {
    Circuit {
        name: "selmem".into(),
        data_ports: vec!["I1".into(), "I2".into()],
        control_ports: vec!["sel".into()],
        clocks: vec![
            Clock {
                name: "c1".into(),
                kind: ClockRef::Free,
            },
            Clock {
                name: "c2".into(),
                kind: ClockRef::Free,
            },
        ],
        ffs: vec![
            FlipFlop {
                name: "M1".into(),
                clock: 0,
                data_input: Selector::fixed([Source::Data(0)]),
            },
            FlipFlop {
                name: "M2".into(),
                clock: 1,
                data_input: Selector::fixed([Source::Data(1)]),
            },
        ],
        output: Selector::select(
            0,
            vec![
                [Source::Ff(0)].into_iter().collect(),
                [Source::Ff(1)].into_iter().collect(),
            ],
        ),
    }
}

/// Two forms that order a pair of distinct values both ways:
/// `first[a] = second[d] = values.0` and `first[b] = second[c] = values.1`
/// with `a < b` and `c < d`.
#[derive(Clone, Debug)]
pub struct OrderConflict {
    pub first: (Schedule, ReferringForm),
    pub second: (Schedule, ReferringForm),
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    pub values: (RefSet, RefSet),
}

/// Searches the whole schedule space for a two-value antisymmetry conflict,
/// preferring conflicts between non-empty values and between distinct forms.
pub fn find_order_conflict(
    circuit: &Circuit,
    horizon: usize,
    budget: u128,
) -> Result<Option<OrderConflict>> {
    let exploration = explore(circuit, horizon, budget)?;
    let graph = exploration.graph();
    let mut candidates: Vec<(usize, usize)> = graph
        .edges()
        .keys()
        .copied()
        .filter(|&(u, v)| graph.edges().contains_key(&(v, u)))
        .collect();
    candidates.sort_by_key(|&(u, v)| {
        let empties =
            usize::from(graph.nodes()[u].is_empty()) + usize::from(graph.nodes()[v].is_empty());
        (empties, u, v)
    });
    let mut fallback = None;
    for (u, v) in candidates {
        let (s1, e1) = exploration.realize(&graph.edges()[&(u, v)]);
        let (s2, e2) = exploration.realize(&graph.edges()[&(v, u)]);
        let distinct = s1 != s2;
        let conflict = OrderConflict {
            first: (s1.clone(), restriction_map_unchecked(circuit, &s1)),
            second: (s2.clone(), restriction_map_unchecked(circuit, &s2)),
            a: e1.t1,
            b: e1.t2,
            c: e2.t1,
            d: e2.t2,
            values: (graph.nodes()[u].clone(), graph.nodes()[v].clone()),
        };
        if distinct {
            return Ok(Some(conflict));
        }
        fallback.get_or_insert(conflict);
    }
    Ok(fallback)
}

/// The selective-memory counterexample at the given horizon, if one fits.
pub fn find_counterexample_selective(horizon: usize) -> Option<OrderConflict> {
    find_order_conflict(
        &selective_memory_circuit(),
        horizon,
        crate::DEFAULT_SCHEDULE_BUDGET,
    )
    .expect("the selective memory circuit is valid and small")
}

#[derive(Clone, Debug)]
pub struct SpotCheckMismatch {
    pub circuit_index: usize,
    pub schedule_index: u128,
    pub semantic: ReferringForm,
    pub syntactic: ReferringForm,
}

#[derive(Clone, Debug)]
pub struct SpotCheck {
    pub pairs: Vec<(usize, u128)>,
    pub mismatches: Vec<SpotCheckMismatch>,
}

/// Compares the oracle (tupling, binary alphabet) against the influence
/// analysis on `samples` seeded random (circuit, schedule) pairs.
pub fn oracle_spot_check(
    ff_count: usize,
    horizon: usize,
    samples: usize,
    seed: u64,
    options: &VerifyOptions,
) -> Result<SpotCheck> {
    let count = enumerate_mcd_circuits(ff_count, options.max_ffs)?.count();
    let space = ScheduleSpace::new(&mcd_circuit(ff_count, 0), horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, u128)> = (0..samples)
        .map(|_| {
            (
                rng.gen_range(0..count),
                rng.gen_range(0..space.cardinality()),
            )
        })
        .collect();
    let checked = map_indices(pairs.len(), |k| -> Result<Option<SpotCheckMismatch>> {
        let (ci, si) = pairs[k];
        let circuit = mcd_circuit(ff_count, ci);
        let schedule = space.schedule(si);
        let semantic = semantic_influence(&circuit, &schedule, 2, Logic::Tupling, options.budget)?;
        let syntactic = restriction_map_unchecked(&circuit, &schedule);
        Ok((semantic != syntactic).then_some(SpotCheckMismatch {
            circuit_index: ci,
            schedule_index: si,
            semantic,
            syntactic,
        }))
    });
    let mut mismatches = Vec::new();
    for r in checked {
        mismatches.extend(r?);
    }
    Ok(SpotCheck { pairs, mismatches })
}
