//! Circuits, schedules, input occurrences and referring forms.
//!
//! Time is 0-based throughout. Data ports, control ports, clocks and
//! flip-flops are referred to by their index in the owning [`Circuit`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A discrete clock tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeStep(pub usize);

impl fmt::Display for TimeStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortKind {
    Data,
    Control,
}

/// One data input port at one absolute time step.
///
/// Ordered by port index, then time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InputOccurrence {
    pub port: usize,
    pub time: TimeStep,
}

impl InputOccurrence {
    pub fn new(port: usize, time: usize) -> Self {
        Self {
            port,
            time: TimeStep(time),
        }
    }
}

/// A finite set of input occurrences, kept sorted and duplicate-free.
///
/// Equality is element-set equality: two sets taken from streams of
/// different lengths compare equal when they hold the same occurrences.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefSet(Vec<InputOccurrence>);

/// Sorts and deduplicates a bag of occurrences.
pub fn canonicalize(occurrences: impl IntoIterator<Item = InputOccurrence>) -> RefSet {
    let mut items: Vec<_> = occurrences.into_iter().collect();
    items.sort_unstable();
    items.dedup();
    RefSet(items)
}

impl RefSet {
    pub const fn empty() -> Self {
        RefSet(Vec::new())
    }

    pub fn singleton(occurrence: InputOccurrence) -> Self {
        RefSet(vec![occurrence])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, InputOccurrence> {
        self.0.iter()
    }

    pub fn occurrences(&self) -> &[InputOccurrence] {
        &self.0
    }

    pub fn contains(&self, occurrence: &InputOccurrence) -> bool {
        self.0.binary_search(occurrence).is_ok()
    }

    pub fn is_subset(&self, other: &RefSet) -> bool {
        self.0.iter().all(|o| other.contains(o))
    }

    pub fn insert(&mut self, occurrence: InputOccurrence) {
        if let Err(at) = self.0.binary_search(&occurrence) {
            self.0.insert(at, occurrence);
        }
    }

    /// Merges `other` into `self`.
    pub fn union_with(&mut self, other: &RefSet) {
        if other.0.is_empty() {
            return;
        }
        if self.0.is_empty() {
            self.0.extend_from_slice(&other.0);
            return;
        }
        let mut merged = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => {
                    if x < y {
                        merged.push(**x);
                        a.next();
                    } else if y < x {
                        merged.push(**y);
                        b.next();
                    } else {
                        merged.push(**x);
                        a.next();
                        b.next();
                    }
                }
                (Some(x), None) => {
                    merged.push(**x);
                    a.next();
                }
                (None, Some(y)) => {
                    merged.push(**y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        self.0 = merged;
    }

    /// Latest time of any occurrence.
    pub fn latest(&self) -> Option<TimeStep> {
        self.0.iter().map(|o| o.time).max()
    }

    /// Latest time of an occurrence of `port`.
    pub fn latest_for_port(&self, port: usize) -> Option<TimeStep> {
        self.0
            .iter()
            .filter(|o| o.port == port)
            .map(|o| o.time)
            .max()
    }
}

impl FromIterator<InputOccurrence> for RefSet {
    fn from_iter<T: IntoIterator<Item = InputOccurrence>>(iter: T) -> Self {
        canonicalize(iter)
    }
}

impl<'a> IntoIterator for &'a RefSet {
    type Item = &'a InputOccurrence;
    type IntoIter = core::slice::Iter<'a, InputOccurrence>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Per-step record of which past occurrences the output may refer to.
///
/// `past[t]` only holds occurrences strictly before `t`; the data ports
/// read combinationally at `t` are carried in `current[t]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReferringForm {
    past: Vec<RefSet>,
    current: Vec<BTreeSet<usize>>,
}

impl ReferringForm {
    pub fn new(past: Vec<RefSet>, current: Vec<BTreeSet<usize>>) -> Result<Self> {
        if past.is_empty() {
            return Err(Error::ZeroHorizon);
        }
        if past.len() != current.len() {
            return Err(Error::InvalidForm(format!(
                "{} past steps but {} current steps",
                past.len(),
                current.len()
            )));
        }
        for (t, set) in past.iter().enumerate() {
            if let Some(o) = set.iter().find(|o| o.time.0 >= t) {
                return Err(Error::InvalidForm(format!(
                    "step {t} refers to occurrence at time {} which is not in its past",
                    o.time
                )));
            }
        }
        Ok(Self { past, current })
    }

    /// A form with no current-input references.
    pub fn from_past(past: Vec<RefSet>) -> Result<Self> {
        let current = vec![BTreeSet::new(); past.len()];
        Self::new(past, current)
    }

    pub fn horizon(&self) -> usize {
        self.past.len()
    }

    pub fn past(&self, t: usize) -> &RefSet {
        &self.past[t]
    }

    pub fn current(&self, t: usize) -> &BTreeSet<usize> {
        &self.current[t]
    }

    pub fn past_steps(&self) -> &[RefSet] {
        &self.past
    }

    pub fn current_steps(&self) -> &[BTreeSet<usize>] {
        &self.current
    }

    /// The same form cut down to its first `horizon` steps.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        let h = horizon.min(self.horizon());
        Ok(Self {
            past: self.past[..h].to_vec(),
            current: self.current[..h].to_vec(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Data(usize),
    Ff(usize),
}

pub type SourceSet = BTreeSet<Source>;

/// A combinational node: one source set per alternative, picked by a
/// control port. A fixed connection has no control and one alternative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    pub control: Option<usize>,
    pub alternatives: Vec<SourceSet>,
}

impl Selector {
    pub fn fixed(sources: impl IntoIterator<Item = Source>) -> Self {
        Self {
            control: None,
            alternatives: vec![sources.into_iter().collect()],
        }
    }

    pub fn select(control: usize, alternatives: Vec<SourceSet>) -> Self {
        Self {
            control: Some(control),
            alternatives,
        }
    }

    pub fn arity(&self) -> usize {
        self.alternatives.len()
    }

    /// The source set active under `choice` (the per-control choice vector).
    pub fn active(&self, choice: &[usize]) -> &SourceSet {
        match self.control {
            Some(c) => &self.alternatives[choice[c]],
            None => &self.alternatives[0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClockRef {
    Periodic {
        period: usize,
        offset: usize,
    },
    Edges(BTreeSet<usize>),
    /// Unconstrained: every latch/hold pattern is admissible.
    Free,
}

impl ClockRef {
    /// Whether the clock has an edge at `t`; `None` for free clocks.
    pub fn edge_at(&self, t: usize) -> Option<bool> {
        match self {
            ClockRef::Periodic { period, offset } => Some(t % period == *offset),
            ClockRef::Edges(edges) => Some(edges.contains(&t)),
            ClockRef::Free => None,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, ClockRef::Free)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clock {
    pub name: String,
    pub kind: ClockRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipFlop {
    pub name: String,
    pub clock: usize,
    pub data_input: Selector,
}

/// A single-output circuit of flip-flops and combinational connectivity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub name: String,
    pub data_ports: Vec<String>,
    pub control_ports: Vec<String>,
    pub clocks: Vec<Clock>,
    pub ffs: Vec<FlipFlop>,
    pub output: Selector,
}

impl Circuit {
    /// Checks every structural invariant: unique names, resolved references,
    /// well-formed clocks and selectors.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCircuit(msg));
        if self.data_ports.is_empty() {
            return bad("at least one data input is required".into());
        }
        let mut seen = BTreeSet::new();
        let names = self
            .data_ports
            .iter()
            .chain(&self.control_ports)
            .chain(self.clocks.iter().map(|c| &c.name))
            .chain(self.ffs.iter().map(|f| &f.name));
        for name in names {
            if name.is_empty() {
                return bad("empty name".into());
            }
            if !seen.insert(name.as_str()) {
                return bad(format!("duplicate name `{name}`"));
            }
        }
        for clock in &self.clocks {
            match &clock.kind {
                ClockRef::Periodic { period, offset } => {
                    if *period == 0 {
                        return bad(format!("clock `{}` has period 0", clock.name));
                    }
                    if offset >= period {
                        return bad(format!(
                            "clock `{}` has offset {offset} outside [0, {period})",
                            clock.name
                        ));
                    }
                }
                ClockRef::Edges(_) | ClockRef::Free => {}
            }
        }
        let mut arities: BTreeMap<usize, usize> = BTreeMap::new();
        for (owner, selector) in self.selectors() {
            if selector.alternatives.is_empty() {
                return bad(format!("{owner} has no alternatives"));
            }
            match selector.control {
                None if selector.arity() != 1 => {
                    return bad(format!("{owner} has several alternatives but no control"));
                }
                None => {}
                Some(c) if c >= self.control_ports.len() => {
                    return bad(format!("{owner} uses unknown control port #{c}"));
                }
                Some(c) => {
                    let arity = *arities.entry(c).or_insert(selector.arity());
                    if arity != selector.arity() {
                        return bad(format!(
                            "control `{}` drives selectors of arity {arity} and {}",
                            self.control_ports[c],
                            selector.arity()
                        ));
                    }
                }
            }
            for source in selector.alternatives.iter().flatten() {
                let ok = match *source {
                    Source::Data(p) => p < self.data_ports.len(),
                    Source::Ff(f) => f < self.ffs.len(),
                };
                if !ok {
                    return bad(format!("{owner} refers to an unknown source {source:?}"));
                }
            }
        }
        for ff in &self.ffs {
            if ff.clock >= self.clocks.len() {
                return bad(format!("flip-flop `{}` uses unknown clock", ff.name));
            }
        }
        Ok(())
    }

    /// Every selector with a printable owner label, flip-flops first.
    pub fn selectors(&self) -> impl Iterator<Item = (String, &Selector)> {
        self.ffs
            .iter()
            .map(|ff| (format!("flip-flop `{}`", ff.name), &ff.data_input))
            .chain(core::iter::once((String::from("output"), &self.output)))
    }

    /// Number of alternatives selectable by each control port (1 when unused).
    pub fn control_arities(&self) -> Vec<usize> {
        let mut arities = vec![1; self.control_ports.len()];
        for (_, selector) in self.selectors() {
            if let Some(c) = selector.control {
                arities[c] = selector.arity();
            }
        }
        arities
    }

    pub fn ff_index(&self, name: &str) -> Option<usize> {
        self.ffs.iter().position(|f| f.name == name)
    }

    pub fn data_index(&self, name: &str) -> Option<usize> {
        self.data_ports.iter().position(|p| p == name)
    }

    pub fn control_index(&self, name: &str) -> Option<usize> {
        self.control_ports.iter().position(|p| p == name)
    }

    pub fn clock_index(&self, name: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c.name == name)
    }

    pub fn source_name(&self, source: Source) -> &str {
        match source {
            Source::Data(p) => &self.data_ports[p],
            Source::Ff(f) => &self.ffs[f].name,
        }
    }

    /// Flip-flops that can latch their own previous value.
    pub fn self_loops(&self) -> Vec<usize> {
        (0..self.ffs.len())
            .filter(|&i| {
                self.ffs[i]
                    .data_input
                    .alternatives
                    .iter()
                    .any(|alt| alt.contains(&Source::Ff(i)))
            })
            .collect()
    }

    /// Single data port and no real selection anywhere: the multiple clock
    /// domain class for which time preservation is guaranteed.
    pub fn is_mcd_class(&self) -> bool {
        self.data_ports.len() == 1 && self.selectors().all(|(_, s)| s.arity() == 1)
    }

    /// A copy where every selector driven by `control` is fixed to `alternative`.
    pub fn pinned(&self, control: usize, alternative: usize) -> Circuit {
        let mut out = self.clone();
        let pin = |s: &mut Selector| {
            if s.control == Some(control) {
                *s = Selector {
                    control: None,
                    alternatives: vec![s.alternatives[alternative].clone()],
                };
            }
        };
        for ff in &mut out.ffs {
            pin(&mut ff.data_input);
        }
        pin(&mut out.output);
        out
    }
}

/// The control inputs of one step: latch bit per flip-flop and alternative
/// index per control port.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepControl {
    pub latch: Vec<bool>,
    pub choice: Vec<usize>,
}

/// A fully resolved control stream over a finite horizon.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Schedule {
    horizon: usize,
    latch: Vec<Vec<bool>>,
    choice: Vec<Vec<usize>>,
}

impl Schedule {
    /// Builds a schedule and checks it against the circuit's clocks and
    /// selectors.
    pub fn new(
        circuit: &Circuit,
        horizon: usize,
        latch: Vec<Vec<bool>>,
        choice: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let schedule = Self {
            horizon,
            latch,
            choice,
        };
        schedule.check(circuit)?;
        Ok(schedule)
    }

    pub(crate) fn from_rows(
        horizon: usize,
        latch: Vec<Vec<bool>>,
        choice: Vec<Vec<usize>>,
    ) -> Self {
        Self {
            horizon,
            latch,
            choice,
        }
    }

    pub(crate) fn from_steps(horizon: usize, steps: &[StepControl]) -> Self {
        let ffs = steps.first().map_or(0, |s| s.latch.len());
        let controls = steps.first().map_or(0, |s| s.choice.len());
        Self {
            horizon,
            latch: (0..ffs)
                .map(|i| steps.iter().map(|s| s.latch[i]).collect())
                .collect(),
            choice: (0..controls)
                .map(|c| steps.iter().map(|s| s.choice[c]).collect())
                .collect(),
        }
    }

    pub fn check(&self, circuit: &Circuit) -> Result<()> {
        let mismatch = |msg: String| Err(Error::ScheduleMismatch(msg));
        if self.horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        if self.latch.len() != circuit.ffs.len() {
            return mismatch(format!(
                "{} latch rows for {} flip-flops",
                self.latch.len(),
                circuit.ffs.len()
            ));
        }
        if self.choice.len() != circuit.control_ports.len() {
            return mismatch(format!(
                "{} choice rows for {} control ports",
                self.choice.len(),
                circuit.control_ports.len()
            ));
        }
        let mut by_clock: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, ff) in circuit.ffs.iter().enumerate() {
            let row = &self.latch[i];
            if row.len() != self.horizon {
                return mismatch(format!("latch row of `{}` has wrong length", ff.name));
            }
            let clock = &circuit.clocks[ff.clock];
            for (t, &bit) in row.iter().enumerate() {
                if let Some(edge) = clock.kind.edge_at(t) {
                    if edge != bit {
                        return mismatch(format!(
                            "`{}` {} at step {t} but clock `{}` {}",
                            ff.name,
                            if bit { "latches" } else { "holds" },
                            clock.name,
                            if edge { "has an edge" } else { "has no edge" }
                        ));
                    }
                }
            }
            if let Some(&other) = by_clock.get(&ff.clock) {
                if self.latch[other] != *row {
                    return mismatch(format!(
                        "`{}` and `{}` share clock `{}` but latch differently",
                        circuit.ffs[other].name, ff.name, clock.name
                    ));
                }
            } else {
                by_clock.insert(ff.clock, i);
            }
        }
        let arities = circuit.control_arities();
        for (c, row) in self.choice.iter().enumerate() {
            if row.len() != self.horizon {
                return mismatch(format!(
                    "choice row of `{}` has wrong length",
                    circuit.control_ports[c]
                ));
            }
            if let Some((step, &choice)) = row.iter().enumerate().find(|(_, &x)| x >= arities[c]) {
                return Err(Error::ChoiceOutOfRange {
                    control: circuit.control_ports[c].clone(),
                    step,
                    choice,
                    arity: arities[c],
                });
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn latches(&self, ff: usize, t: usize) -> bool {
        self.latch[ff][t]
    }

    pub fn latch_row(&self, ff: usize) -> &[bool] {
        &self.latch[ff]
    }

    pub fn choice(&self, control: usize, t: usize) -> usize {
        self.choice[control][t]
    }

    pub fn choice_row(&self, control: usize) -> &[usize] {
        &self.choice[control]
    }

    pub fn step_control(&self, t: usize) -> StepControl {
        StepControl {
            latch: self.latch.iter().map(|row| row[t]).collect(),
            choice: self.choice.iter().map(|row| row[t]).collect(),
        }
    }
}

/// Control values that clocks alone do not determine.
#[derive(Clone, Debug, Default)]
pub struct ControlInputs {
    /// Latch bits for free clocks, keyed by clock index.
    pub free_latch: BTreeMap<usize, Vec<bool>>,
    /// Alternative indices per control port; missing ports choose 0.
    pub choices: BTreeMap<usize, Vec<usize>>,
}

/// Expands the circuit's clocks into latch/hold bits over `horizon` steps.
pub fn schedule_from_clocks(
    circuit: &Circuit,
    horizon: usize,
    controls: &ControlInputs,
) -> Result<Schedule> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let mut latch = Vec::with_capacity(circuit.ffs.len());
    for ff in &circuit.ffs {
        let clock = &circuit.clocks[ff.clock];
        let row = match &clock.kind {
            ClockRef::Free => match controls.free_latch.get(&ff.clock) {
                Some(bits) => bits.clone(),
                None => return Err(Error::UnresolvedFreeClock(clock.name.clone())),
            },
            kind => (0..horizon)
                .map(|t| kind.edge_at(t) == Some(true))
                .collect(),
        };
        latch.push(row);
    }
    let choice = (0..circuit.control_ports.len())
        .map(|c| {
            controls
                .choices
                .get(&c)
                .cloned()
                .unwrap_or_else(|| vec![0; horizon])
        })
        .collect();
    Schedule::new(circuit, horizon, latch, choice)
}
