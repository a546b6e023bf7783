//! Explicit dataflow graphs of the filtering structures.
//!
//! Nodes are operators (multipliers, algebraic adders, halvers) or terminals
//! (inputs, outputs, register-memory cells). Sign changes live on the input
//! ports of adders rather than in separate negation nodes.

mod build;
mod dot;
mod module;

use std::collections::VecDeque;

use serde::Serialize;

use crate::arith::{ArithError, Arithmetic, Counting, OpCounts, Sign};

pub use build::{build_naive_graph, build_precompute_graph, build_winograd_graph, NaiveAdders};
pub use dot::{export_dot, parse_dot};
pub use module::{
    simulate_cluster, simulate_module, Completed, DEFAULT_PIPELINE_DEPTH, ModuleState, SimError, SimulationTrace,
};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKind {
    Input { index: usize },
    Output { index: usize },
    /// A cell of the register memory, loaded before evaluation.
    Register { index: usize },
    Multiplier,
    /// Algebraic adder; one sign per input port.
    Adder { signs: Vec<Sign> },
    /// Multiplication by the constant 1/2 (a hardwired shift).
    Halve,
}

impl NodeKind {
    pub fn in_ports(&self) -> usize {
        match self {
            NodeKind::Input { .. } | NodeKind::Register { .. } => 0,
            NodeKind::Output { .. } | NodeKind::Halve => 1,
            NodeKind::Multiplier => 2,
            NodeKind::Adder { signs } => signs.len(),
        }
    }

    pub fn is_operator(&self) -> bool {
        matches!(
            self,
            NodeKind::Multiplier | NodeKind::Adder { .. } | NodeKind::Halve
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub port: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("node {index} has id {id}; ids must equal positions")]
    BadNodeId { index: usize, id: NodeId },
    #[error("edge {from} -> {to} references a missing node")]
    DanglingEdge { from: NodeId, to: NodeId },
    #[error("node {node} ({label}): {problem}")]
    Ports {
        node: NodeId,
        label: String,
        problem: String,
    },
    #[error("adder {node} has arity {arity}; only 2 and 3 are supported")]
    AdderArity { node: NodeId, arity: usize },
    #[error("graph contains a cycle")]
    Cycle,
    #[error("output {node} is not reachable from any input")]
    Unreachable { node: NodeId },
    #[error("{kind} indices must be 0..{count} without gaps")]
    TerminalIndices { kind: &'static str, count: usize },
    #[error("expected {expected} input values ({inputs} inputs + {registers} registers), got {got}")]
    InputCount {
        expected: usize,
        inputs: usize,
        registers: usize,
        got: usize,
    },
    #[error("DOT parse error on line {line}: {message}")]
    Dot { line: usize, message: String },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Operator counts extracted from a graph's structure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OperatorInventory {
    pub multipliers: u64,
    pub adders_2in: u64,
    pub adders_3in: u64,
    pub halvings: u64,
    /// Two-input-equivalent adders upstream of some multiplier.
    pub pre_adders: u64,
    /// Two-input-equivalent adders not feeding any multiplier.
    pub post_adders: u64,
}

impl OperatorInventory {
    pub fn adders_2in_equiv(&self) -> u64 {
        self.adders_2in + 2 * self.adders_3in
    }
}

/// Result of evaluating a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<V> {
    pub outputs: Vec<V>,
    pub counts: OpCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataflowGraph {
    name: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl DataflowGraph {
    /// Wraps raw nodes and edges. No checks are made here; see [`validate`](Self::validate).
    pub fn from_parts(name: impl Into<String>, nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        DataflowGraph {
            name: name.into(),
            nodes,
            edges,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn into_parts(self) -> (String, Vec<Node>, Vec<Edge>) {
        (self.name, self.nodes, self.edges)
    }

    fn count(&self, pred: impl Fn(&NodeKind) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.kind)).count()
    }

    pub fn input_count(&self) -> usize {
        self.count(|k| matches!(k, NodeKind::Input { .. }))
    }

    pub fn register_count(&self) -> usize {
        self.count(|k| matches!(k, NodeKind::Register { .. }))
    }

    pub fn output_count(&self) -> usize {
        self.count(|k| matches!(k, NodeKind::Output { .. }))
    }

    /// Producer of every input port, indexed `[node][port]`.
    fn port_sources(&self) -> Result<Vec<Vec<Option<NodeId>>>, GraphError> {
        let mut sources: Vec<Vec<Option<NodeId>>> = self
            .nodes
            .iter()
            .map(|n| vec![None; n.kind.in_ports()])
            .collect();
        for e in &self.edges {
            if e.from >= self.nodes.len() || e.to >= self.nodes.len() {
                return Err(GraphError::DanglingEdge {
                    from: e.from,
                    to: e.to,
                });
            }
            let node = &self.nodes[e.to];
            let slot = sources[e.to].get_mut(e.port).ok_or_else(|| GraphError::Ports {
                node: e.to,
                label: node.label.clone(),
                problem: format!("port {} does not exist", e.port),
            })?;
            if slot.is_some() {
                return Err(GraphError::Ports {
                    node: e.to,
                    label: node.label.clone(),
                    problem: format!("port {} driven twice", e.port),
                });
            }
            *slot = Some(e.from);
        }
        Ok(sources)
    }

    /// Kahn topological order.
    fn topo_order(&self) -> Result<Vec<NodeId>, GraphError> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut succ: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for e in &self.edges {
            indegree[e.to] += 1;
            succ[e.from].push(e.to);
        }
        let mut ready: VecDeque<NodeId> = (0..n).filter(|i| indegree[*i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(id) = ready.pop_front() {
            order.push(id);
            for &next in &succ[id] {
                indegree[next] -= 1;
                if indegree[next] == 0 {
                    ready.push_back(next);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(GraphError::Cycle)
        }
    }

    fn check_indices(&self, kind: &'static str, pick: impl Fn(&NodeKind) -> Option<usize>) -> Result<(), GraphError> {
        let mut idx: Vec<usize> = self.nodes.iter().filter_map(|n| pick(&n.kind)).collect();
        idx.sort_unstable();
        if idx.iter().enumerate().any(|(i, v)| i != *v) {
            return Err(GraphError::TerminalIndices {
                kind,
                count: idx.len(),
            });
        }
        Ok(())
    }

    /// Checks every structural invariant: ids, port wiring, adder arity,
    /// terminal numbering, acyclicity and reachability of outputs.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (index, node) in self.nodes.iter().enumerate() {
            if node.id != index {
                return Err(GraphError::BadNodeId { index, id: node.id });
            }
            if let NodeKind::Adder { signs } = &node.kind {
                if !(2..=3).contains(&signs.len()) {
                    return Err(GraphError::AdderArity {
                        node: index,
                        arity: signs.len(),
                    });
                }
            }
        }
        let sources = self.port_sources()?;
        for (node, ports) in self.nodes.iter().zip(&sources) {
            if let Some(port) = ports.iter().position(Option::is_none) {
                return Err(GraphError::Ports {
                    node: node.id,
                    label: node.label.clone(),
                    problem: format!("port {port} is unconnected"),
                });
            }
        }
        self.check_indices("input", |k| match k {
            NodeKind::Input { index } => Some(*index),
            _ => None,
        })?;
        self.check_indices("output", |k| match k {
            NodeKind::Output { index } => Some(*index),
            _ => None,
        })?;
        self.check_indices("register", |k| match k {
            NodeKind::Register { index } => Some(*index),
            _ => None,
        })?;
        let order = self.topo_order()?;

        let mut from_input = vec![false; self.nodes.len()];
        for id in order {
            from_input[id] = matches!(self.nodes[id].kind, NodeKind::Input { .. })
                || sources[id].iter().flatten().any(|src| from_input[*src]);
        }
        for node in &self.nodes {
            if matches!(node.kind, NodeKind::Output { .. }) && !from_input[node.id] {
                return Err(GraphError::Unreachable { node: node.id });
            }
        }
        Ok(())
    }

    /// Evaluates the graph in topological order.
    ///
    /// `values` holds the inputs in index order followed by the register
    /// contents in index order.
    pub fn evaluate<A: Arithmetic>(
        &self,
        arith: &A,
        values: &[A::Value],
    ) -> Result<Evaluation<A::Value>, GraphError> {
        let inputs = self.input_count();
        let registers = self.register_count();
        if values.len() != inputs + registers {
            return Err(GraphError::InputCount {
                expected: inputs + registers,
                inputs,
                registers,
                got: values.len(),
            });
        }
        self.validate()?;
        let sources = self.port_sources()?;
        let order = self.topo_order()?;
        let counting = Counting::new(arith);

        let mut computed: Vec<Option<A::Value>> = vec![None; self.nodes.len()];
        let mut outputs: Vec<Option<A::Value>> = vec![None; self.output_count()];
        for id in order {
            let args: Vec<&A::Value> = sources[id]
                .iter()
                .map(|src| computed[src.expect("validated")].as_ref().expect("topological"))
                .collect();
            let value = match &self.nodes[id].kind {
                NodeKind::Input { index } => values[*index].clone(),
                NodeKind::Register { index } => values[inputs + *index].clone(),
                NodeKind::Output { index } => {
                    outputs[*index] = Some(args[0].clone());
                    args[0].clone()
                }
                NodeKind::Multiplier => counting.mul(args[0], args[1])?,
                NodeKind::Halve => counting.halve(args[0])?,
                NodeKind::Adder { signs } => {
                    let terms: Vec<(Sign, &A::Value)> =
                        signs.iter().copied().zip(args.iter().copied()).collect();
                    counting.signed_sum(&terms)?
                }
            };
            computed[id] = Some(value);
        }
        Ok(Evaluation {
            outputs: outputs.into_iter().map(|v| v.expect("indices checked")).collect(),
            counts: counting.counts(),
        })
    }

    /// Counts operators by kind and splits adders into those before and after
    /// the multiplier stage.
    pub fn inventory(&self) -> OperatorInventory {
        // Nodes from which some multiplier is reachable.
        let mut feeds_mul = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Multiplier)
            .map(|n| n.id)
            .collect();
        while let Some(id) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.to == id) {
                if e.from < feeds_mul.len() && !feeds_mul[e.from] {
                    feeds_mul[e.from] = true;
                    stack.push(e.from);
                }
            }
        }

        let mut inv = OperatorInventory::default();
        for node in &self.nodes {
            match &node.kind {
                NodeKind::Multiplier => inv.multipliers += 1,
                NodeKind::Halve => inv.halvings += 1,
                NodeKind::Adder { signs } => {
                    let equiv = signs.len().saturating_sub(1) as u64;
                    match signs.len() {
                        2 => inv.adders_2in += 1,
                        3 => inv.adders_3in += 1,
                        _ => inv.adders_2in += equiv,
                    }
                    if feeds_mul[node.id] {
                        inv.pre_adders += equiv;
                    } else {
                        inv.post_adders += equiv;
                    }
                }
                _ => {}
            }
        }
        inv
    }

    /// Longest input-to-output path, counted in operator nodes.
    pub fn operator_depth(&self) -> Result<usize, GraphError> {
        let order = self.topo_order()?;
        let mut depth = vec![0usize; self.nodes.len()];
        for id in order {
            let own = usize::from(self.nodes[id].kind.is_operator());
            let best = self
                .edges
                .iter()
                .filter(|e| e.to == id)
                .map(|e| depth[e.from])
                .max()
                .unwrap_or(0);
            depth[id] = best + own;
        }
        Ok(depth.into_iter().max().unwrap_or(0))
    }
}
