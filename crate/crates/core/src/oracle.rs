//! Brute-force ground truth for the influence analysis.
//!
//! A circuit is instantiated as a concrete Mealy machine over a small
//! alphabet and run on every input stream. An occurrence `(p, τ)` influences
//! output step `t` when two streams that differ only at `(p, τ)` produce
//! different outputs at `t`.
//!
//! Under the tupling instantiation every combinational node forwards the
//! tuple of its source values, so nothing can cancel and semantic influence
//! coincides with connectivity. The XOR instantiation sums sources modulo the
//! alphabet size; reconvergent paths cancel there and semantic influence can
//! be strictly smaller.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{
    Circuit, InputOccurrence, RefSet, ReferringForm, Schedule, Source, StepControl,
};

pub type Symbol = u8;

/// A value carried on a wire or stored in a flip-flop.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    /// An uninitialized flip-flop.
    Bottom,
    Sym(Symbol),
    Tuple(Vec<Value>),
}

/// A deterministic machine: from the previous state, the current input
/// vector and the step's control, produce the output and the next state.
pub trait MealyMachine {
    type State: Clone;

    fn initial(&self) -> Self::State;

    fn transition(
        &self,
        state: &Self::State,
        input: &[Symbol],
        control: &StepControl,
    ) -> (Value, Self::State);
}

/// Runs `machine` over `inputs` (one vector of port symbols per step).
pub fn run<M: MealyMachine>(
    machine: &M,
    inputs: &[Vec<Symbol>],
    schedule: &Schedule,
) -> Result<Vec<Value>> {
    if inputs.len() != schedule.horizon() {
        return Err(Error::LengthMismatch {
            inputs: inputs.len(),
            horizon: schedule.horizon(),
        });
    }
    let mut state = machine.initial();
    let mut outputs = Vec::with_capacity(inputs.len());
    for (t, input) in inputs.iter().enumerate() {
        let (out, next) = machine.transition(&state, input, &schedule.step_control(t));
        outputs.push(out);
        state = next;
    }
    Ok(outputs)
}

/// Anything that maps a finite input stream to an output stream under a
/// schedule. Mealy machines are one instance; test fixtures may be others.
pub trait StreamFunction {
    fn data_ports(&self) -> usize;
    fn alphabet(&self) -> usize;
    fn apply(&self, inputs: &[Vec<Symbol>], schedule: &Schedule) -> Result<Vec<Value>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Logic {
    Tupling,
    Xor,
}

/// A circuit with concrete combinational logic.
#[derive(Clone, Debug)]
pub struct CircuitMachine {
    circuit: Circuit,
    alphabet: usize,
    logic: Logic,
}

pub fn instantiate_tupling(circuit: &Circuit, alphabet: usize) -> Result<CircuitMachine> {
    instantiate(circuit, alphabet, Logic::Tupling)
}

pub fn instantiate_xor(circuit: &Circuit, alphabet: usize) -> Result<CircuitMachine> {
    instantiate(circuit, alphabet, Logic::Xor)
}

pub fn instantiate(circuit: &Circuit, alphabet: usize, logic: Logic) -> Result<CircuitMachine> {
    if alphabet == 0 {
        return Err(Error::EmptyAlphabet);
    }
    if alphabet > usize::from(Symbol::MAX) + 1 {
        return Err(Error::InvalidCircuit(alloc::format!(
            "alphabet of {alphabet} symbols does not fit a byte"
        )));
    }
    circuit.validate()?;
    Ok(CircuitMachine {
        circuit: circuit.clone(),
        alphabet,
        logic,
    })
}

impl CircuitMachine {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn logic(&self) -> Logic {
        self.logic
    }

    fn combine<'a>(&self, values: impl Iterator<Item = &'a Value>) -> Value {
        match self.logic {
            Logic::Tupling => Value::Tuple(values.cloned().collect()),
            Logic::Xor => {
                let sum = values
                    .map(|v| match v {
                        Value::Sym(s) => usize::from(*s),
                        _ => 0,
                    })
                    .sum::<usize>();
                Value::Sym((sum % self.alphabet) as Symbol)
            }
        }
    }

    fn gather<'a>(
        &self,
        sources: impl Iterator<Item = &'a Source>,
        state: &'a [Value],
        inputs: &'a [Value],
    ) -> Vec<&'a Value> {
        sources
            .map(|s| match *s {
                Source::Data(p) => &inputs[p],
                Source::Ff(f) => &state[f],
            })
            .collect()
    }
}

impl MealyMachine for CircuitMachine {
    type State = Vec<Value>;

    fn initial(&self) -> Vec<Value> {
        vec![Value::Bottom; self.circuit.ffs.len()]
    }

    fn transition(
        &self,
        state: &Vec<Value>,
        input: &[Symbol],
        control: &StepControl,
    ) -> (Value, Vec<Value>) {
        let inputs: Vec<Value> = input.iter().map(|&s| Value::Sym(s)).collect();
        let out_sources = self.circuit.output.active(&control.choice).iter();
        let output = self.combine(self.gather(out_sources, state, &inputs).into_iter());
        let next = self
            .circuit
            .ffs
            .iter()
            .enumerate()
            .map(|(i, ff)| {
                if control.latch[i] {
                    let sources = ff.data_input.active(&control.choice).iter();
                    self.combine(self.gather(sources, state, &inputs).into_iter())
                } else {
                    state[i].clone()
                }
            })
            .collect();
        (output, next)
    }
}

impl StreamFunction for CircuitMachine {
    fn data_ports(&self) -> usize {
        self.circuit.data_ports.len()
    }

    fn alphabet(&self) -> usize {
        self.alphabet
    }

    fn apply(&self, inputs: &[Vec<Symbol>], schedule: &Schedule) -> Result<Vec<Value>> {
        run(self, inputs, schedule)
    }
}

/// Number of stream evaluations an exhaustive perturbation sweep costs.
pub fn sweep_cost(ports: usize, alphabet: usize, horizon: usize) -> u128 {
    let positions = (ports * horizon) as u128;
    let mut streams: u128 = 1;
    for _ in 0..positions {
        streams = streams.saturating_mul(alphabet as u128);
    }
    streams.saturating_mul(1 + positions * (alphabet as u128).saturating_sub(1))
}

/// Visits every base stream and every single-position perturbation of it.
/// The callback gets the perturbed position `(t, p)` and both output streams.
fn sweep<F: StreamFunction>(
    f: &F,
    schedule: &Schedule,
    budget: u128,
    mut visit: impl FnMut(usize, usize, &[Value], &[Value]),
) -> Result<()> {
    let (ports, alphabet, horizon) = (f.data_ports(), f.alphabet(), schedule.horizon());
    if alphabet == 0 {
        return Err(Error::EmptyAlphabet);
    }
    let required = sweep_cost(ports, alphabet, horizon);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let positions = ports * horizon;
    let streams = (alphabet as u128).pow(positions as u32);
    let mut inputs = vec![vec![0 as Symbol; ports]; horizon];
    for index in 0..streams {
        let mut rest = index;
        for slot in inputs.iter_mut().flatten() {
            *slot = (rest % alphabet as u128) as Symbol;
            rest /= alphabet as u128;
        }
        let base = f.apply(&inputs, schedule)?;
        for t in 0..horizon {
            for p in 0..ports {
                let original = inputs[t][p];
                // each unordered pair of streams is visited once, from its smaller base
                for a in (usize::from(original) + 1)..alphabet {
                    inputs[t][p] = a as Symbol;
                    let perturbed = f.apply(&inputs, schedule)?;
                    visit(t, p, &base, &perturbed);
                }
                inputs[t][p] = original;
            }
        }
    }
    Ok(())
}

/// Influence sets recovered by exhaustive perturbation, shaped as a
/// referring form.
pub fn perturbation_influence<F: StreamFunction>(
    f: &F,
    schedule: &Schedule,
    budget: u128,
) -> Result<ReferringForm> {
    let horizon = schedule.horizon();
    let mut past = vec![BTreeSet::new(); horizon];
    let mut current = vec![BTreeSet::new(); horizon];
    sweep(f, schedule, budget, |tau, p, base, perturbed| {
        for t in tau..horizon {
            if base[t] != perturbed[t] {
                if t == tau {
                    current[t].insert(p);
                } else {
                    past[t].insert(InputOccurrence::new(p, tau));
                }
            }
        }
    })?;
    ReferringForm::new(
        past.into_iter()
            .map(|s| s.into_iter().collect::<RefSet>())
            .collect(),
        current,
    )
}

/// Semantic influence of `circuit` under `schedule` with the given logic.
pub fn semantic_influence(
    circuit: &Circuit,
    schedule: &Schedule,
    alphabet: usize,
    logic: Logic,
    budget: u128,
) -> Result<ReferringForm> {
    schedule.check(circuit)?;
    let machine = instantiate(circuit, alphabet, logic)?;
    perturbation_influence(&machine, schedule, budget)
}

/// True iff no output depends on a later input.
pub fn causality_check<F: StreamFunction>(
    f: &F,
    schedule: &Schedule,
    budget: u128,
) -> Result<bool> {
    let mut causal = true;
    sweep(f, schedule, budget, |tau, _, base, perturbed| {
        if base[..tau] != perturbed[..tau] {
            causal = false;
        }
    })?;
    Ok(causal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::restriction_map;
    use crate::model::{schedule_from_clocks, Clock, ClockRef, ControlInputs, FlipFlop, Selector};

    fn dff(clock: ClockRef) -> Circuit {
        Circuit {
            name: "dff".into(),
            data_ports: vec!["I".into()],
            control_ports: vec![],
            clocks: vec![Clock {
                name: "c".into(),
                kind: clock,
            }],
            ffs: vec![FlipFlop {
                name: "F".into(),
                clock: 0,
                data_input: Selector::fixed([Source::Data(0)]),
            }],
            output: Selector::fixed([Source::Ff(0)]),
        }
    }

    fn pass_through() -> Circuit {
        Circuit {
            name: "wire".into(),
            data_ports: vec!["I".into()],
            control_ports: vec![],
            clocks: vec![],
            ffs: vec![],
            output: Selector::fixed([Source::Data(0)]),
        }
    }

    fn fixed(c: &Circuit, h: usize) -> Schedule {
        schedule_from_clocks(c, h, &ControlInputs::default()).unwrap()
    }

    fn stream(symbols: &[Symbol]) -> Vec<Vec<Symbol>> {
        symbols.iter().map(|&s| vec![s]).collect()
    }

    fn tuple1(s: Symbol) -> Value {
        Value::Tuple(vec![Value::Sym(s)])
    }

    #[test]
    fn pass_through_runs_identity() {
        let c = pass_through();
        let m = instantiate_tupling(&c, 2).unwrap();
        assert!(m.initial().is_empty());
        let out = run(&m, &stream(&[1, 0, 1, 1]), &fixed(&c, 4)).unwrap();
        assert_eq!(out, vec![tuple1(1), tuple1(0), tuple1(1), tuple1(1)]);
    }

    #[test]
    fn dff_registered_read() {
        let c = dff(ClockRef::Edges([0, 4].into_iter().collect()));
        let m = instantiate_tupling(&c, 2).unwrap();
        let out = run(&m, &stream(&[1, 0, 0, 0, 1]), &fixed(&c, 5)).unwrap();
        let one = Value::Tuple(vec![tuple1(1)]);
        assert_eq!(
            out,
            vec![
                Value::Tuple(vec![Value::Bottom]),
                one.clone(),
                one.clone(),
                one.clone(),
                one
            ]
        );
    }

    #[test]
    fn all_hold_outputs_bottom() {
        let c = dff(ClockRef::Edges(BTreeSet::new()));
        let m = instantiate_tupling(&c, 2).unwrap();
        let out = run(&m, &stream(&[1, 0, 1]), &fixed(&c, 3)).unwrap();
        assert!(out.iter().all(|v| *v == Value::Tuple(vec![Value::Bottom])));
    }

    #[test]
    fn run_checks_length() {
        let c = pass_through();
        let m = instantiate_tupling(&c, 2).unwrap();
        assert!(matches!(
            run(&m, &stream(&[1, 0]), &fixed(&c, 3)),
            Err(Error::LengthMismatch {
                inputs: 2,
                horizon: 3
            })
        ));
    }

    #[test]
    fn empty_alphabet_is_rejected() {
        assert_eq!(
            instantiate_tupling(&pass_through(), 0).unwrap_err(),
            Error::EmptyAlphabet
        );
    }

    #[test]
    fn pass_through_influence_is_current_only() {
        let c = pass_through();
        let form = semantic_influence(&c, &fixed(&c, 4), 2, Logic::Tupling, 1 << 20).unwrap();
        for t in 0..4 {
            assert!(form.past(t).is_empty());
            assert_eq!(form.current(t), &BTreeSet::from([0]));
        }
    }

    #[test]
    fn dff_influence_matches_restriction_map() {
        let c = dff(ClockRef::Periodic {
            period: 4,
            offset: 0,
        });
        let s = fixed(&c, 6);
        let semantic = semantic_influence(&c, &s, 2, Logic::Tupling, 1 << 20).unwrap();
        assert_eq!(semantic, restriction_map(&c, &s).unwrap());
    }

    #[test]
    fn oracle_budget_is_enforced() {
        let c = dff(ClockRef::Periodic {
            period: 4,
            offset: 0,
        });
        let s = fixed(&c, 6);
        assert!(matches!(
            semantic_influence(&c, &s, 2, Logic::Tupling, 100),
            Err(Error::BudgetExceeded {
                required: 448,
                budget: 100
            })
        ));
    }

    struct Lookahead;

    impl StreamFunction for Lookahead {
        fn data_ports(&self) -> usize {
            1
        }

        fn alphabet(&self) -> usize {
            2
        }

        fn apply(&self, inputs: &[Vec<Symbol>], _: &Schedule) -> Result<Vec<Value>> {
            Ok((0..inputs.len())
                .map(|t| {
                    inputs
                        .get(t + 1)
                        .map_or(Value::Bottom, |i| Value::Sym(i[0]))
                })
                .collect())
        }
    }

    #[test]
    fn causality() {
        let c = dff(ClockRef::Periodic {
            period: 2,
            offset: 1,
        });
        let s = fixed(&c, 5);
        let m = instantiate_tupling(&c, 2).unwrap();
        assert!(causality_check(&m, &s, 1 << 20).unwrap());
        assert!(!causality_check(&Lookahead, &s, 1 << 20).unwrap());
    }

    #[test]
    fn xor_cancels_reconvergent_paths() {
        // two flip-flops on one clock both latch I; the output XORs them
        let mut c = dff(ClockRef::Periodic {
            period: 2,
            offset: 0,
        });
        c.ffs.push(FlipFlop {
            name: "G".into(),
            clock: 0,
            data_input: Selector::fixed([Source::Data(0)]),
        });
        c.output = Selector::fixed([Source::Ff(0), Source::Ff(1)]);
        let s = fixed(&c, 4);
        let syntactic = restriction_map(&c, &s).unwrap();
        let xor = semantic_influence(&c, &s, 2, Logic::Xor, 1 << 20).unwrap();
        assert!(syntactic.past(1).contains(&InputOccurrence::new(0, 0)));
        assert!(xor.past_steps().iter().all(|p| p.is_empty()));
        assert_eq!(
            semantic_influence(&c, &s, 2, Logic::Tupling, 1 << 20).unwrap(),
            syntactic
        );
    }
}
