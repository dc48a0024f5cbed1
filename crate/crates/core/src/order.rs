//! Time preservation of a set of referring forms.
//!
//! The values a set of forms takes (its unified image) are ordered by the
//! relation "some form takes `u` at `t` and `v` at a later `t'`". The set is
//! time preserving exactly when the reflexive-transitive closure of that
//! relation is antisymmetric, i.e. when the precedence graph of consecutive
//! distinct values has no cycle. The closure is then the least partial order
//! that every form respects; otherwise a shortest cycle is reported together
//! with the form and steps realising each of its edges.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{RefSet, ReferringForm};

/// Where an edge of the precedence graph was observed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Evidence {
    pub form: usize,
    pub t1: usize,
    pub t2: usize,
}

/// Distinct values of a form set and the consecutive-change edges between
/// them. Each edge keeps the first evidence found for it.
#[derive(Clone, Debug)]
pub struct PrecedenceGraph<E = Evidence> {
    nodes: Vec<RefSet>,
    edges: BTreeMap<(usize, usize), E>,
}

impl<E: Clone> PrecedenceGraph<E> {
    /// `nodes` must contain every endpoint of `edges`.
    pub fn from_parts(
        nodes: BTreeSet<RefSet>,
        edges: impl IntoIterator<Item = (RefSet, RefSet, E)>,
    ) -> Self {
        let nodes: Vec<RefSet> = nodes.into_iter().collect();
        let mut map = BTreeMap::new();
        for (from, to, evidence) in edges {
            let a = nodes.binary_search(&from).expect("edge endpoint is a node");
            let b = nodes.binary_search(&to).expect("edge endpoint is a node");
            if a != b {
                map.entry((a, b)).or_insert(evidence);
            }
        }
        Self { nodes, edges: map }
    }

    pub fn nodes(&self) -> &[RefSet] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<(usize, usize), E> {
        &self.edges
    }

    pub fn index_of(&self, value: &RefSet) -> Option<usize> {
        self.nodes.binary_search(value).ok()
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in self.edges.keys() {
            succ[a].push(b);
        }
        succ
    }
}

/// Outcome of deciding a precedence graph.
#[derive(Clone, Debug)]
pub enum Decision {
    Order(PartialOrder),
    /// Node indices of a shortest cycle, in edge order.
    Cycle(Vec<usize>),
}

pub fn decide<E: Clone>(graph: &PrecedenceGraph<E>) -> Decision {
    let succ = graph.successors();
    let components = strongly_connected_components(&succ);
    if components.iter().all(|c| c.len() == 1) {
        return Decision::Order(PartialOrder::closure_of(graph.nodes.clone(), &succ));
    }
    let mut component_of = vec![usize::MAX; succ.len()];
    for (i, c) in components.iter().enumerate() {
        for &v in c {
            component_of[v] = i;
        }
    }
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    for component in components.iter().filter(|c| c.len() > 1) {
        let mut starts = component.clone();
        starts.sort_unstable();
        for &s in &starts {
            // ∅ is the only empty value, so avoiding it is enough to find
            // the fewest-empties cycle among the shortest ones.
            let cycles = [
                shortest_cycle_through(s, &succ, &component_of, |_| true),
                shortest_cycle_through(s, &succ, &component_of, |v| !graph.nodes[v].is_empty()),
            ];
            for cycle in cycles.into_iter().flatten() {
                let empties = cycle.iter().filter(|&&v| graph.nodes[v].is_empty()).count();
                let key = (cycle.len(), empties, cycle);
                if best.as_ref().is_none_or(|b| key < *b) {
                    best = Some(key);
                }
            }
        }
    }
    Decision::Cycle(best.expect("a non-trivial component has a cycle").2)
}

fn shortest_cycle_through(
    start: usize,
    succ: &[Vec<usize>],
    component_of: &[usize],
    allowed: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    if !allowed(start) {
        return None;
    }
    let scc = component_of[start];
    let mut parent = vec![usize::MAX; succ.len()];
    let mut seen = vec![false; succ.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if v == start {
                let mut path = vec![u];
                let mut cur = u;
                while cur != start {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            if !seen[v] && component_of[v] == scc && allowed(v) {
                seen[v] = true;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

/// Tarjan's algorithm, iterative. Components come out in reverse
/// topological order.
pub(crate) fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(frame) = frames.last_mut() {
            let (v, child) = *frame;
            if child < succ[v].len() {
                frame.1 += 1;
                let w = succ[v][child];
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("component root is on the stack");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                components.push(component);
            }
        }
    }
    components
}

/// A reflexive relation on a finite set of values, stored as bit rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialOrder {
    nodes: Vec<RefSet>,
    rows: Vec<Vec<u64>>,
}

impl PartialOrder {
    fn closure_of(nodes: Vec<RefSet>, succ: &[Vec<usize>]) -> Self {
        let n = nodes.len();
        let words = n.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; n];
        for (s, row) in rows.iter_mut().enumerate() {
            let mut stack = vec![s];
            row[s / 64] |= 1 << (s % 64);
            while let Some(u) = stack.pop() {
                for &v in &succ[u] {
                    if row[v / 64] & (1 << (v % 64)) == 0 {
                        row[v / 64] |= 1 << (v % 64);
                        stack.push(v);
                    }
                }
            }
        }
        Self { nodes, rows }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[RefSet] {
        &self.nodes
    }

    pub fn index_of(&self, value: &RefSet) -> Option<usize> {
        self.nodes.binary_search(value).ok()
    }

    pub fn le_index(&self, a: usize, b: usize) -> bool {
        self.rows[a][b / 64] & (1 << (b % 64)) != 0
    }

    /// `a ≤ b`, or `None` when either value is outside the image.
    pub fn le(&self, a: &RefSet, b: &RefSet) -> Option<bool> {
        Some(self.le_index(self.index_of(a)?, self.index_of(b)?))
    }

    /// Number of related pairs, including the reflexive ones.
    pub fn relation_size(&self) -> usize {
        self.rows
            .iter()
            .flatten()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.len()).all(|i| self.le_index(i, i))
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|a| (0..n).all(|b| a == b || !(self.le_index(a, b) && self.le_index(b, a))))
    }

    pub fn is_transitive(&self) -> bool {
        let n = self.len();
        (0..n).all(|a| {
            (0..n).filter(|&b| self.le_index(a, b)).all(|b| {
                self.rows[b]
                    .iter()
                    .zip(&self.rows[a])
                    .all(|(rb, ra)| rb & !ra == 0)
            })
        })
    }

    pub fn is_partial_order(&self) -> bool {
        self.is_reflexive() && self.is_antisymmetric() && self.is_transitive()
    }

    /// Whether `t ≤ t'` implies `form[t] ≤ form[t']`.
    pub fn preserved_by(&self, form: &ReferringForm) -> bool {
        let idx: Option<Vec<usize>> = form.past_steps().iter().map(|v| self.index_of(v)).collect();
        let Some(idx) = idx else {
            return false;
        };
        (0..idx.len()).all(|t| (t..idx.len()).all(|u| self.le_index(idx[t], idx[u])))
    }
}

/// One edge of a witness cycle with the form and steps that realise it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessEdge {
    pub from: RefSet,
    pub to: RefSet,
    pub form: usize,
    pub t1: usize,
    pub t2: usize,
}

#[derive(Clone, Debug)]
pub struct TimePreservationVerdict {
    pub preserving: bool,
    pub order: Option<PartialOrder>,
    pub witness: Option<Vec<WitnessEdge>>,
}

impl TimePreservationVerdict {
    pub(crate) fn from_decision<E>(
        graph: &PrecedenceGraph<E>,
        decision: Decision,
        mut evidence: impl FnMut(&E) -> Evidence,
    ) -> Self {
        match decision {
            Decision::Order(order) => Self {
                preserving: true,
                order: Some(order),
                witness: None,
            },
            Decision::Cycle(cycle) => {
                let edges = (0..cycle.len())
                    .map(|i| {
                        let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
                        let e = evidence(&graph.edges[&(a, b)]);
                        WitnessEdge {
                            from: graph.nodes[a].clone(),
                            to: graph.nodes[b].clone(),
                            form: e.form,
                            t1: e.t1,
                            t2: e.t2,
                        }
                    })
                    .collect();
                Self {
                    preserving: false,
                    order: None,
                    witness: Some(edges),
                }
            }
        }
    }

    /// Checks that the witness is a closed cycle through at least two
    /// distinct values and that every edge is realised by `forms`.
    pub fn witness_replays(&self, forms: &[ReferringForm]) -> bool {
        let Some(witness) = &self.witness else {
            return false;
        };
        let distinct: BTreeSet<&RefSet> = witness.iter().map(|e| &e.from).collect();
        if witness.len() < 2 || distinct.len() < 2 {
            return false;
        }
        let closed =
            (0..witness.len()).all(|i| witness[i].to == witness[(i + 1) % witness.len()].from);
        closed
            && witness.iter().all(|e| {
                forms.get(e.form).is_some_and(|f| {
                    e.t1 < e.t2
                        && e.t2 < f.horizon()
                        && *f.past(e.t1) == e.from
                        && *f.past(e.t2) == e.to
                })
            })
    }
}

/// All values taken by any form at any step.
pub fn unified_image(forms: &[ReferringForm]) -> Result<BTreeSet<RefSet>> {
    if forms.is_empty() {
        return Err(Error::EmptyFormSet);
    }
    Ok(forms
        .iter()
        .flat_map(|f| f.past_steps().iter().cloned())
        .collect())
}

pub fn precedence_graph(forms: &[ReferringForm]) -> Result<PrecedenceGraph> {
    let nodes = unified_image(forms)?;
    let edges = forms.iter().enumerate().flat_map(|(i, f)| {
        f.past_steps()
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != w[1])
            .map(move |(t, w)| {
                (
                    w[0].clone(),
                    w[1].clone(),
                    Evidence {
                        form: i,
                        t1: t,
                        t2: t + 1,
                    },
                )
            })
    });
    Ok(PrecedenceGraph::from_parts(nodes, edges))
}

pub fn check_time_preservation(forms: &[ReferringForm]) -> Result<TimePreservationVerdict> {
    let graph = precedence_graph(forms)?;
    let decision = decide(&graph);
    Ok(TimePreservationVerdict::from_decision(
        &graph,
        decision,
        |e| *e,
    ))
}

/// First pair `t1 ≤ t2` at which the latest referred occurrence moves back
/// in time (or disappears).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LemmaViolation {
    pub t1: usize,
    pub t2: usize,
    /// Set by the per-port variant.
    pub port: Option<usize>,
}

/// Latest-occurrence monotonicity: whenever `form[t1]` refers to something,
/// every later `form[t2]` refers to something at least as recent.
pub fn lemma_check(form: &ReferringForm) -> Result<(), LemmaViolation> {
    monotone_latest(form, |v| v.latest().map(|t| t.0), None)
}

/// Latest-occurrence monotonicity checked separately for each data port.
pub fn lemma_check_per_port(form: &ReferringForm, ports: usize) -> Result<(), LemmaViolation> {
    (0..ports)
        .try_for_each(|p| monotone_latest(form, |v| v.latest_for_port(p).map(|t| t.0), Some(p)))
}

fn monotone_latest(
    form: &ReferringForm,
    latest: impl Fn(&RefSet) -> Option<usize>,
    port: Option<usize>,
) -> Result<(), LemmaViolation> {
    let values: Vec<Option<usize>> = form.past_steps().iter().map(latest).collect();
    let mut running: Option<usize> = None;
    for (t2, &now) in values.iter().enumerate() {
        if let Some(prev) = running {
            if now.is_none_or(|n| n < prev) {
                let t1 = values
                    .iter()
                    .position(|v| v.is_some_and(|v| now.is_none_or(|n| v > n)))
                    .expect("running maximum was attained");
                return Err(LemmaViolation { t1, t2, port });
            }
        }
        running = running.max(now);
    }
    Ok(())
}
