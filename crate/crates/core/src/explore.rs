//! Precedence graph of a circuit's whole schedule space, built without
//! enumerating schedules.
//!
//! The output value at `t` depends only on the flip-flop contents before `t`
//! and the control at `t`. Exploring reachable contents layer by layer, and
//! remembering for each reachable state which values may have been emitted
//! just before reaching it, yields exactly the consecutive-change edges of
//! all referring forms. Schedules are reconstructed only for the edges that
//! end up in a witness.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::influence::{
    advance, read_output, restriction_map_unchecked, FfContents, ScheduleSpace,
};
use crate::model::{Circuit, RefSet, ReferringForm, Schedule, StepControl};
use crate::order::{decide, Evidence, PrecedenceGraph, TimePreservationVerdict};

/// Where an edge `u → v` was found: `v` emitted at step `t` from state
/// `node` of layer `t` under move `mv`, with `u` emitted on the way in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSite {
    t: usize,
    node: usize,
    from: usize,
    mv: usize,
}

#[derive(Debug)]
struct Node {
    parent: Option<(usize, usize)>,
    /// value id emitted on entry -> (predecessor node, move)
    incoming: BTreeMap<usize, (usize, usize)>,
}

/// Result of exploring every admissible schedule of a circuit.
#[derive(Debug)]
pub struct Exploration {
    horizon: usize,
    moves: Vec<Vec<StepControl>>,
    layers: Vec<Vec<Node>>,
    graph: PrecedenceGraph<EdgeSite>,
    transitions: u128,
}

/// Explores the reachable flip-flop contents of `circuit` over `horizon`
/// steps. `budget` caps the number of (state, move) transitions.
pub fn explore(circuit: &Circuit, horizon: usize, budget: u128) -> Result<Exploration> {
    let space = ScheduleSpace::new(circuit, horizon)?;
    let moves: Vec<Vec<StepControl>> = (0..horizon).map(|t| space.moves_at(t)).collect();
    let mut values: BTreeMap<RefSet, usize> = BTreeMap::new();
    let mut edges: Vec<(usize, usize, EdgeSite)> = Vec::new();
    let mut seen_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut transitions: u128 = 0;

    let mut layers: Vec<Vec<Node>> = Vec::with_capacity(horizon);
    let mut states: Vec<FfContents> = vec![vec![RefSet::empty(); circuit.ffs.len()]];
    layers.push(vec![Node {
        parent: None,
        incoming: BTreeMap::new(),
    }]);

    for t in 0..horizon {
        let work = transitions + states.len() as u128 * moves[t].len() as u128;
        if work > budget {
            return Err(Error::BudgetExceeded {
                required: work,
                budget,
            });
        }
        transitions = work;
        let last = t + 1 == horizon;
        let mut next_index: BTreeMap<FfContents, usize> = BTreeMap::new();
        let mut next_states: Vec<FfContents> = Vec::new();
        let mut next_nodes: Vec<Node> = Vec::new();
        for (n, contents) in states.iter().enumerate() {
            for (m, control) in moves[t].iter().enumerate() {
                let (value, _) = read_output(circuit, contents, &control.choice);
                let next_id = values.len();
                let v = *values.entry(value).or_insert(next_id);
                for &u in layers[t][n].incoming.keys() {
                    if u != v && seen_edges.insert((u, v)) {
                        edges.push((
                            u,
                            v,
                            EdgeSite {
                                t,
                                node: n,
                                from: u,
                                mv: m,
                            },
                        ));
                    }
                }
                if last {
                    continue;
                }
                let after = advance(circuit, contents, t, control);
                let k = match next_index.get(&after) {
                    Some(&k) => k,
                    None => {
                        let k = next_states.len();
                        next_index.insert(after.clone(), k);
                        next_states.push(after);
                        next_nodes.push(Node {
                            parent: Some((n, m)),
                            incoming: BTreeMap::new(),
                        });
                        k
                    }
                };
                next_nodes[k].incoming.entry(v).or_insert((n, m));
            }
        }
        if !last {
            states = next_states;
            layers.push(next_nodes);
        }
    }

    let mut by_id = vec![RefSet::empty(); values.len()];
    for (value, id) in &values {
        by_id[*id] = value.clone();
    }
    let graph = PrecedenceGraph::from_parts(
        values.into_keys().collect(),
        edges
            .into_iter()
            .map(|(u, v, site)| (by_id[u].clone(), by_id[v].clone(), site)),
    );
    Ok(Exploration {
        horizon,
        moves,
        layers,
        graph,
        transitions,
    })
}

impl Exploration {
    pub fn graph(&self) -> &PrecedenceGraph<EdgeSite> {
        &self.graph
    }

    pub fn transitions(&self) -> u128 {
        self.transitions
    }

    /// A schedule whose form realises the edge found at `site`: the value
    /// changes between steps `site.t - 1` and `site.t`.
    pub fn realize(&self, site: &EdgeSite) -> (Schedule, Evidence) {
        let mut steps: Vec<usize> = vec![0; self.horizon];
        steps[site.t] = site.mv;
        let (mut node, mv) = self.layers[site.t][site.node].incoming[&site.from];
        steps[site.t - 1] = mv;
        for k in (0..site.t - 1).rev() {
            let (parent, mv) = self.layers[k + 1][node]
                .parent
                .expect("non-initial nodes have a parent");
            steps[k] = mv;
            node = parent;
        }
        let controls: Vec<StepControl> = steps
            .iter()
            .enumerate()
            .map(|(t, &m)| self.moves[t][m].clone())
            .collect();
        (
            Schedule::from_steps(self.horizon, &controls),
            Evidence {
                form: 0,
                t1: site.t - 1,
                t2: site.t,
            },
        )
    }
}

/// Time-preservation verdict over every admissible schedule, with the
/// schedules and forms that realise a witness.
#[derive(Clone, Debug)]
pub struct CircuitVerdict {
    pub verdict: TimePreservationVerdict,
    /// Forms referenced by `verdict.witness[..].form`.
    pub forms: Vec<(Schedule, ReferringForm)>,
    pub image_size: usize,
    pub transitions: u128,
}

pub fn check_circuit(circuit: &Circuit, horizon: usize, budget: u128) -> Result<CircuitVerdict> {
    let exploration = explore(circuit, horizon, budget)?;
    let decision = decide(exploration.graph());
    let mut forms: Vec<(Schedule, ReferringForm)> = Vec::new();
    let verdict = TimePreservationVerdict::from_decision(exploration.graph(), decision, |site| {
        let (schedule, mut evidence) = exploration.realize(site);
        evidence.form = match forms.iter().position(|(s, _)| *s == schedule) {
            Some(i) => i,
            None => {
                let form = restriction_map_unchecked(circuit, &schedule);
                forms.push((schedule, form));
                forms.len() - 1
            }
        };
        evidence
    });
    Ok(CircuitVerdict {
        verdict,
        forms,
        image_size: exploration.graph().nodes().len(),
        transitions: exploration.transitions(),
    })
}
