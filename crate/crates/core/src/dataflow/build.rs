//! Graph builders. The minimal filtering graphs are generated from the
//! transform matrices, so their adder signs follow the matrices row by row.

use crate::arith::Sign;
use crate::kernel::{transform_constants, DiagEntry};

use super::{DataflowGraph, Edge, Node, NodeId, NodeKind};

#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl Builder {
    fn node(&mut self, kind: NodeKind, label: impl Into<String>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            kind,
            label: label.into(),
        });
        id
    }

    fn wire(&mut self, from: NodeId, to: NodeId, port: usize) {
        self.edges.push(Edge { from, to, port });
    }

    fn input(&mut self, index: usize, label: String) -> NodeId {
        self.node(NodeKind::Input { index }, label)
    }

    fn register(&mut self, index: usize, label: String) -> NodeId {
        self.node(NodeKind::Register { index }, label)
    }

    fn output(&mut self, index: usize, label: String, from: NodeId) {
        let id = self.node(NodeKind::Output { index }, label);
        self.wire(from, id, 0);
    }

    fn mul(&mut self, label: String, a: NodeId, b: NodeId) -> NodeId {
        let id = self.node(NodeKind::Multiplier, label);
        self.wire(a, id, 0);
        self.wire(b, id, 1);
        id
    }

    fn adder(&mut self, label: String, terms: &[(Sign, NodeId)]) -> NodeId {
        let signs = terms.iter().map(|(s, _)| *s).collect();
        let id = self.node(NodeKind::Adder { signs }, label);
        for (port, (_, src)) in terms.iter().enumerate() {
            self.wire(*src, id, port);
        }
        id
    }

    fn halve(&mut self, label: String, from: NodeId) -> NodeId {
        let id = self.node(NodeKind::Halve, label);
        self.wire(from, id, 0);
        id
    }

    /// Realizes one {-1, 0, 1} matrix row over signed wires. A lone term is
    /// passed through (keeping its sign); otherwise an adder is placed.
    fn row(&mut self, label: String, row: &[i8], wires: &[(Sign, NodeId)]) -> (Sign, NodeId) {
        let terms: Vec<(Sign, NodeId)> = row
            .iter()
            .zip(wires)
            .filter_map(|(c, (sign, node))| {
                Sign::from_coeff(*c).map(|s| (if s == *sign { Sign::Plus } else { Sign::Minus }, *node))
            })
            .collect();
        match terms.as_slice() {
            [single] => *single,
            _ => (Sign::Plus, self.adder(label, &terms)),
        }
    }

    fn finish(self, name: &str) -> DataflowGraph {
        DataflowGraph::from_parts(name, self.nodes, self.edges)
    }
}

/// The minimal filtering module: inputs `x0..x3`, registers `s0..s3`, four
/// 2-input pre-adders, four multipliers and two 3-input post-adders.
pub fn build_winograd_graph() -> DataflowGraph {
    let k = transform_constants();
    let mut b = Builder::default();
    let x: Vec<(Sign, NodeId)> = (0..4).map(|i| (Sign::Plus, b.input(i, format!("x{i}")))).collect();
    let s: Vec<NodeId> = (0..4).map(|i| b.register(i, format!("s{i}"))).collect();

    let operands: Vec<NodeId> = k
        .input_transform
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let (sign, node) = b.row(format!("a{i}"), row, &x);
            debug_assert_eq!(sign, Sign::Plus);
            node
        })
        .collect();
    let products: Vec<(Sign, NodeId)> = operands
        .iter()
        .zip(&s)
        .enumerate()
        .map(|(i, (a, s))| (Sign::Plus, b.mul(format!("mu{}", i + 1), *a, *s)))
        .collect();
    for (i, row) in k.output_transform.iter().enumerate() {
        let (_, sum) = b.row(format!("sum{i}"), row, &products);
        b.output(i, format!("y{i}"), sum);
    }
    b.finish("winograd")
}

/// How the direct structure accumulates its three products per output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NaiveAdders {
    /// One 3-input adder per output.
    #[default]
    ThreeInput,
    /// Two chained 2-input adders per output.
    TwoInputChain,
}

/// The direct structure: inputs `x0..x3`, registers `h0..h2`, six multipliers.
pub fn build_naive_graph(adders: NaiveAdders) -> DataflowGraph {
    let mut b = Builder::default();
    let x: Vec<NodeId> = (0..4).map(|i| b.input(i, format!("x{i}"))).collect();
    let h: Vec<NodeId> = (0..3).map(|i| b.register(i, format!("h{i}"))).collect();
    for out in 0..2 {
        let p: Vec<NodeId> = (0..3)
            .map(|i| b.mul(format!("p{out}{i}"), x[out + i], h[i]))
            .collect();
        let sum = match adders {
            NaiveAdders::ThreeInput => b.adder(
                format!("sum{out}"),
                &[(Sign::Plus, p[0]), (Sign::Plus, p[1]), (Sign::Plus, p[2])],
            ),
            NaiveAdders::TwoInputChain => {
                let partial = b.adder(format!("acc{out}"), &[(Sign::Plus, p[0]), (Sign::Plus, p[1])]);
                b.adder(format!("sum{out}"), &[(Sign::Plus, partial), (Sign::Plus, p[2])])
            }
        };
        b.output(out, format!("y{out}"), sum);
    }
    b.finish("naive")
}

/// Tap precompute network: inputs `h0..h2`, outputs `s0..s3`; two sparse
/// adder stages followed by two halvers.
pub fn build_precompute_graph() -> DataflowGraph {
    let k = transform_constants();
    let mut b = Builder::default();
    let h: Vec<(Sign, NodeId)> = (0..3).map(|i| (Sign::Plus, b.input(i, format!("h{i}")))).collect();
    let expanded: Vec<(Sign, NodeId)> = k
        .tap_expand
        .iter()
        .enumerate()
        .map(|(i, row)| b.row(format!("e{i}"), row, &h))
        .collect();
    let combined: Vec<(Sign, NodeId)> = k
        .tap_combine
        .iter()
        .enumerate()
        .map(|(i, row)| b.row(format!("c{i}"), row, &expanded))
        .collect();
    for (i, ((sign, node), scale)) in combined.into_iter().zip(k.tap_scale).enumerate() {
        assert_eq!(sign, Sign::Plus, "tap network output {i} would need a negation");
        let node = match scale {
            DiagEntry::One => node,
            DiagEntry::Half => b.halve(format!("half{i}"), node),
        };
        b.output(i, format!("s{i}"), node);
    }
    b.finish("precompute")
}
