//! Influence propagation over the time-unrolled circuit.
//!
//! Every flip-flop carries the set of input occurrences its stored value may
//! depend on. At step `t` the output reads the contents stored *before* the
//! step's latching (registered read), plus the data ports wired straight to
//! it. Latching flip-flops then all update at once from the pre-update
//! contents of their sources; holding flip-flops keep theirs.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{
    Circuit, ClockRef, InputOccurrence, RefSet, ReferringForm, Schedule, Source, StepControl,
};

/// Per flip-flop occurrence sets at one step boundary.
pub type FfContents = Vec<RefSet>;

/// What the output can refer to at `t`, given the pre-update contents.
pub(crate) fn read_output(
    circuit: &Circuit,
    contents: &[RefSet],
    choice: &[usize],
) -> (RefSet, BTreeSet<usize>) {
    let mut past = RefSet::empty();
    let mut current = BTreeSet::new();
    for source in circuit.output.active(choice) {
        match *source {
            Source::Data(p) => {
                current.insert(p);
            }
            Source::Ff(f) => past.union_with(&contents[f]),
        }
    }
    (past, current)
}

/// Contents after the latching of step `t`.
pub(crate) fn advance(
    circuit: &Circuit,
    contents: &[RefSet],
    t: usize,
    control: &StepControl,
) -> FfContents {
    circuit
        .ffs
        .iter()
        .enumerate()
        .map(|(i, ff)| {
            if !control.latch[i] {
                return contents[i].clone();
            }
            let mut next = RefSet::empty();
            for source in ff.data_input.active(&control.choice) {
                match *source {
                    Source::Data(p) => next.insert(InputOccurrence::new(p, t)),
                    Source::Ff(f) => next.union_with(&contents[f]),
                }
            }
            next
        })
        .collect()
}

fn prepare(circuit: &Circuit, schedule: &Schedule) -> Result<()> {
    circuit.validate()?;
    schedule.check(circuit)
}

/// Flip-flop contents after each step's update.
pub fn ff_contents_trace(circuit: &Circuit, schedule: &Schedule) -> Result<Vec<FfContents>> {
    prepare(circuit, schedule)?;
    let mut contents = vec![RefSet::empty(); circuit.ffs.len()];
    let mut trace = Vec::with_capacity(schedule.horizon());
    for t in 0..schedule.horizon() {
        contents = advance(circuit, &contents, t, &schedule.step_control(t));
        trace.push(contents.clone());
    }
    Ok(trace)
}

/// The referring form of `circuit` under `schedule`.
pub fn restriction_map(circuit: &Circuit, schedule: &Schedule) -> Result<ReferringForm> {
    prepare(circuit, schedule)?;
    Ok(restriction_map_unchecked(circuit, schedule))
}

pub(crate) fn restriction_map_unchecked(circuit: &Circuit, schedule: &Schedule) -> ReferringForm {
    let horizon = schedule.horizon();
    let mut contents = vec![RefSet::empty(); circuit.ffs.len()];
    let mut past = Vec::with_capacity(horizon);
    let mut current = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let control = schedule.step_control(t);
        let (p, c) = read_output(circuit, &contents, &control.choice);
        past.push(p);
        current.push(c);
        if t + 1 < horizon {
            contents = advance(circuit, &contents, t, &control);
        }
    }
    ReferringForm::new(past, current).expect("influence propagation only reaches the past")
}

/// The finite set of schedules admissible for a circuit over a horizon:
/// every latch pattern of each free clock times every choice sequence of
/// each control port. Clocks with edges are fixed.
#[derive(Clone, Debug)]
pub struct ScheduleSpace {
    horizon: usize,
    ff_clock: Vec<usize>,
    clocks: Vec<ClockRef>,
    free_clocks: Vec<usize>,
    arities: Vec<usize>,
}

impl ScheduleSpace {
    pub fn new(circuit: &Circuit, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        circuit.validate()?;
        let ff_clock: Vec<usize> = circuit.ffs.iter().map(|f| f.clock).collect();
        let used: BTreeSet<usize> = ff_clock.iter().copied().collect();
        let free_clocks = used
            .into_iter()
            .filter(|&c| circuit.clocks[c].kind.is_free())
            .collect();
        Ok(Self {
            horizon,
            ff_clock,
            clocks: circuit.clocks.iter().map(|c| c.kind.clone()).collect(),
            free_clocks,
            arities: circuit.control_arities(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of schedules, saturating at `u128::MAX`.
    pub fn cardinality(&self) -> u128 {
        let per_step = self.moves_per_step();
        let mut total: u128 = 1;
        for _ in 0..self.horizon {
            total = total.saturating_mul(per_step);
        }
        total
    }

    /// Number of distinct control values at a single step.
    pub fn moves_per_step(&self) -> u128 {
        let mut n: u128 = 1;
        for _ in &self.free_clocks {
            n = n.saturating_mul(2);
        }
        for &a in &self.arities {
            n = n.saturating_mul(a as u128);
        }
        n
    }

    /// Decodes a schedule index; free-clock bits come first, step 0 in the
    /// least significant position.
    pub fn schedule(&self, index: u128) -> Schedule {
        let mut rest = index;
        let mut free_bits = vec![vec![false; self.horizon]; self.clocks.len()];
        for &clock in &self.free_clocks {
            for bit in free_bits[clock].iter_mut() {
                *bit = rest % 2 == 1;
                rest /= 2;
            }
        }
        let mut choice = vec![vec![0usize; self.horizon]; self.arities.len()];
        for (c, &arity) in self.arities.iter().enumerate() {
            if arity > 1 {
                for slot in choice[c].iter_mut() {
                    *slot = (rest % arity as u128) as usize;
                    rest /= arity as u128;
                }
            }
        }
        let latch = self
            .ff_clock
            .iter()
            .map(|&clock| match self.clocks[clock].edge_at(0) {
                None => free_bits[clock].clone(),
                Some(_) => (0..self.horizon)
                    .map(|t| self.clocks[clock].edge_at(t) == Some(true))
                    .collect(),
            })
            .collect();
        Schedule::from_rows(self.horizon, latch, choice)
    }

    pub fn iter(&self) -> impl Iterator<Item = Schedule> + '_ {
        (0..self.cardinality()).map(move |i| self.schedule(i))
    }

    /// Every admissible control value at step `t`, in a fixed order.
    pub fn moves_at(&self, t: usize) -> Vec<StepControl> {
        let total = self.moves_per_step() as usize;
        let mut moves = Vec::with_capacity(total);
        for index in 0..total {
            let mut rest = index;
            let mut free = vec![false; self.clocks.len()];
            for &clock in &self.free_clocks {
                free[clock] = rest % 2 == 1;
                rest /= 2;
            }
            let choice = self
                .arities
                .iter()
                .map(|&a| {
                    let digit = rest % a;
                    rest /= a;
                    digit
                })
                .collect();
            let latch = self
                .ff_clock
                .iter()
                .map(|&clock| self.clocks[clock].edge_at(t).unwrap_or(free[clock]))
                .collect();
            moves.push(StepControl { latch, choice });
        }
        moves
    }
}

/// The referring forms of `circuit` over every admissible schedule,
/// deduplicated and canonically ordered.
pub fn all_referring_forms(
    circuit: &Circuit,
    horizon: usize,
    budget: u128,
) -> Result<BTreeSet<ReferringForm>> {
    let space = ScheduleSpace::new(circuit, horizon)?;
    let required = space.cardinality();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(forms_of_space(circuit, &space))
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn forms_of_space(circuit: &Circuit, space: &ScheduleSpace) -> BTreeSet<ReferringForm> {
    space
        .iter()
        .map(|s| restriction_map_unchecked(circuit, &s))
        .collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn forms_of_space(circuit: &Circuit, space: &ScheduleSpace) -> BTreeSet<ReferringForm> {
    use rayon::prelude::*;
    let n = u64::try_from(space.cardinality()).expect("space was checked against the budget");
    (0..n)
        .into_par_iter()
        .map(|i| restriction_map_unchecked(circuit, &space.schedule(i as u128)))
        .collect()
}
