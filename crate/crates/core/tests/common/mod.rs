#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refform_core::influence::ScheduleSpace;
use refform_core::{
    Circuit, Clock, ClockRef, FlipFlop, InputOccurrence, RefSet, ReferringForm, Schedule, Selector,
    Source, SourceSet,
};

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_data: usize,
    pub max_controls: usize,
    pub max_ffs: usize,
    pub free_only: bool,
}

pub const WIDE: Shape = Shape {
    max_data: 3,
    max_controls: 2,
    max_ffs: 4,
    free_only: false,
};

pub const SMALL: Shape = Shape {
    max_data: 2,
    max_controls: 1,
    max_ffs: 2,
    free_only: false,
};

fn name(rng: &mut ChaCha8Rng, base: &str, i: usize) -> String {
    const TAIL: &[u8] = b"abcxyz019_";
    let extra: String = (0..rng.gen_range(0..3))
        .map(|_| TAIL[rng.gen_range(0..TAIL.len())] as char)
        .collect();
    format!("{base}{i}{extra}")
}

fn source_set(rng: &mut ChaCha8Rng, data: usize, ffs: usize) -> SourceSet {
    let mut set = BTreeSet::new();
    for p in 0..data {
        if rng.gen_bool(0.5) {
            set.insert(Source::Data(p));
        }
    }
    for f in 0..ffs {
        if rng.gen_bool(0.4) {
            set.insert(Source::Ff(f));
        }
    }
    set
}

fn selector(rng: &mut ChaCha8Rng, arities: &[usize], data: usize, ffs: usize) -> Selector {
    if arities.is_empty() || rng.gen_bool(0.5) {
        return Selector::fixed(source_set(rng, data, ffs));
    }
    let c = rng.gen_range(0..arities.len());
    Selector::select(
        c,
        (0..arities[c])
            .map(|_| source_set(rng, data, ffs))
            .collect(),
    )
}

pub fn build_circuit(seed: u64, shape: Shape) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = rng.gen_range(1..=shape.max_data);
    let arities: Vec<usize> = (0..rng.gen_range(0..=shape.max_controls))
        .map(|_| rng.gen_range(2..=3))
        .collect();
    let ffs = rng.gen_range(0..=shape.max_ffs);
    let clocks: Vec<Clock> = (0..rng.gen_range(1..=3))
        .map(|i| {
            let kind = match (shape.free_only, rng.gen_range(0..3)) {
                (true, _) | (_, 0) => ClockRef::Free,
                (_, 1) => {
                    let period = rng.gen_range(1..=4);
                    ClockRef::Periodic {
                        period,
                        offset: rng.gen_range(0..period),
                    }
                }
                _ => {
                    let mut edges: BTreeSet<usize> = (0..rng.gen_range(1..4))
                        .map(|_| rng.gen_range(0..8))
                        .collect();
                    edges.insert(rng.gen_range(0..8));
                    ClockRef::Edges(edges)
                }
            };
            Clock {
                name: name(&mut rng, "c", i),
                kind,
            }
        })
        .collect();
    let n_clocks = clocks.len();
    let circuit = Circuit {
        name: name(&mut rng, "k", 0),
        data_ports: (0..data).map(|i| name(&mut rng, "I", i)).collect(),
        control_ports: (0..arities.len()).map(|i| name(&mut rng, "s", i)).collect(),
        clocks,
        ffs: (0..ffs)
            .map(|i| FlipFlop {
                name: name(&mut rng, "F", i),
                clock: rng.gen_range(0..n_clocks),
                data_input: selector(&mut rng, &arities, data, ffs),
            })
            .collect(),
        output: selector(&mut rng, &arities, data, ffs),
    };
    circuit.validate().expect("generated circuits are valid");
    circuit
}

pub fn circuit(shape: Shape) -> impl Strategy<Value = Circuit> {
    any::<u64>().prop_map(move |seed| build_circuit(seed, shape))
}

/// A circuit with an admissible schedule of the given horizon range.
pub fn scheduled(
    shape: Shape,
    horizons: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (Circuit, Schedule)> {
    (circuit(shape), horizons, any::<u128>()).prop_map(|(c, h, pick)| {
        let space = ScheduleSpace::new(&c, h).unwrap();
        let s = space.schedule(pick % space.cardinality());
        (c, s)
    })
}

pub fn truncate(circuit: &Circuit, schedule: &Schedule, horizon: usize) -> Schedule {
    Schedule::new(
        circuit,
        horizon,
        (0..circuit.ffs.len())
            .map(|i| schedule.latch_row(i)[..horizon].to_vec())
            .collect(),
        (0..circuit.control_ports.len())
            .map(|c| schedule.choice_row(c)[..horizon].to_vec())
            .collect(),
    )
    .unwrap()
}

/// Forms over a small pool of values so that different forms collide.
pub fn form_set() -> impl Strategy<Value = Vec<ReferringForm>> {
    let pool = prop::collection::vec(
        prop::collection::btree_set((0usize..2, 0usize..5), 0..3),
        1..5,
    );
    (
        pool,
        prop::collection::vec(
            prop::collection::vec(any::<prop::sample::Index>(), 1..9),
            1..5,
        ),
    )
        .prop_map(|(pool, picks)| {
            picks
                .into_iter()
                .map(|steps| {
                    let past = steps
                        .iter()
                        .enumerate()
                        .map(|(t, pick)| {
                            pool[pick.index(pool.len())]
                                .iter()
                                .filter(|&&(_, tau)| tau < t)
                                .map(|&(p, tau)| InputOccurrence::new(p, tau))
                                .collect::<RefSet>()
                        })
                        .collect();
                    ReferringForm::from_past(past).unwrap()
                })
                .collect()
        })
}
