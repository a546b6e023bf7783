//! Graphviz export and the matching reader.
//!
//! Each node and edge carries a `comment` attribute with its exact kind, index
//! or port, so the emitted text can be parsed back into the same graph.
//! Edges into negated adder ports are drawn dashed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::arith::Sign;

use super::{DataflowGraph, Edge, GraphError, Node, NodeKind};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn kind_tag(kind: &NodeKind) -> String {
    match kind {
        NodeKind::Input { index } => format!("input:{index}"),
        NodeKind::Output { index } => format!("output:{index}"),
        NodeKind::Register { index } => format!("register:{index}"),
        NodeKind::Multiplier => "multiplier".to_string(),
        NodeKind::Halve => "halve".to_string(),
        NodeKind::Adder { signs } => {
            let pattern: String = signs.iter().map(|s| s.symbol()).collect();
            format!("adder:{pattern}")
        }
    }
}

fn shape(kind: &NodeKind) -> &'static str {
    match kind {
        NodeKind::Input { .. } | NodeKind::Output { .. } => "plaintext",
        NodeKind::Register { .. } => "box",
        NodeKind::Multiplier | NodeKind::Halve => "circle",
        NodeKind::Adder { .. } => "point",
    }
}

/// Deterministic DOT rendering of a graph.
pub fn export_dot(g: &DataflowGraph) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", g.name()).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    for node in g.nodes() {
        let label = match &node.kind {
            NodeKind::Multiplier => "×".to_string(),
            NodeKind::Halve => "1/2".to_string(),
            _ => node.label.clone(),
        };
        let xlabel = match &node.kind {
            NodeKind::Adder { .. } | NodeKind::Multiplier | NodeKind::Halve => {
                format!(", xlabel=\"{}\"", escape(&node.label))
            }
            _ => String::new(),
        };
        writeln!(
            out,
            "  n{} [label=\"{}\"{}, shape={}, comment=\"{}\"];",
            node.id,
            escape(&label),
            xlabel,
            shape(&node.kind),
            kind_tag(&node.kind)
        )
        .unwrap();
    }
    for e in g.edges() {
        let negated = matches!(
            g.nodes().get(e.to).map(|n| &n.kind),
            Some(NodeKind::Adder { signs }) if signs.get(e.port) == Some(&Sign::Minus)
        );
        let style = if negated { ", style=dashed" } else { "" };
        writeln!(
            out,
            "  n{} -> n{} [comment=\"port:{}\"{}];",
            e.from, e.to, e.port, style
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Splits `key=value, key="quoted, value"` into a map.
fn parse_attrs(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut attrs = BTreeMap::new();
    let mut chars = text.chars().peekable();
    loop {
        while matches!(chars.peek(), Some(c) if c.is_whitespace() || *c == ',') {
            chars.next();
        }
        if chars.peek().is_none() {
            return Ok(attrs);
        }
        let key: String = std::iter::from_fn(|| chars.next_if(|c| *c != '=')).collect();
        if chars.next() != Some('=') {
            return Err(format!("attribute `{}` has no value", key.trim()));
        }
        let value = if chars.peek() == Some(&'"') {
            chars.next();
            let mut v = String::new();
            loop {
                match chars.next() {
                    Some('\\') => v.extend(chars.next()),
                    Some('"') => break,
                    Some(c) => v.push(c),
                    None => return Err("unterminated string".to_string()),
                }
            }
            v
        } else {
            std::iter::from_fn(|| chars.next_if(|c| *c != ',')).collect::<String>().trim().to_string()
        };
        attrs.insert(key.trim().to_string(), value);
    }
}

fn node_id(token: &str) -> Option<usize> {
    token.trim().strip_prefix('n')?.parse().ok()
}

fn parse_kind(tag: &str) -> Result<NodeKind, String> {
    let (name, arg) = tag.split_once(':').unwrap_or((tag, ""));
    let index = || arg.parse::<usize>().map_err(|_| format!("bad index in `{tag}`"));
    Ok(match name {
        "input" => NodeKind::Input { index: index()? },
        "output" => NodeKind::Output { index: index()? },
        "register" => NodeKind::Register { index: index()? },
        "multiplier" => NodeKind::Multiplier,
        "halve" => NodeKind::Halve,
        "adder" => NodeKind::Adder {
            signs: arg
                .chars()
                .map(|c| match c {
                    '+' => Ok(Sign::Plus),
                    '-' => Ok(Sign::Minus),
                    other => Err(format!("bad sign `{other}`")),
                })
                .collect::<Result<_, _>>()?,
        },
        other => return Err(format!("unknown node kind `{other}`")),
    })
}

/// Reads text produced by [`export_dot`] back into a graph.
pub fn parse_dot(text: &str) -> Result<DataflowGraph, GraphError> {
    let mut name = None;
    let mut nodes: Vec<Node> = Vec::new();
    let mut edges: Vec<(Edge, bool)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let err = |message: String| GraphError::Dot {
            line: lineno + 1,
            message,
        };
        let line = raw.trim();
        if line.is_empty() || line == "}" || line.starts_with("rankdir") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("digraph ") {
            name = Some(rest.trim_end_matches('{').trim().to_string());
            continue;
        }
        let (head, attrs) = line
            .strip_suffix("];")
            .and_then(|l| l.split_once('['))
            .ok_or_else(|| err(format!("unrecognized statement `{line}`")))?;
        let attrs = parse_attrs(attrs).map_err(err)?;
        let comment = attrs
            .get("comment")
            .ok_or_else(|| err("missing comment attribute".to_string()))?;
        if let Some((from, to)) = head.split_once("->") {
            let from = node_id(from).ok_or_else(|| err(format!("bad node `{from}`")))?;
            let to = node_id(to).ok_or_else(|| err(format!("bad node `{to}`")))?;
            let port = comment
                .strip_prefix("port:")
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| err(format!("bad port `{comment}`")))?;
            let dashed = attrs.get("style").map(String::as_str) == Some("dashed");
            edges.push((Edge { from, to, port }, dashed));
        } else {
            let id = node_id(head).ok_or_else(|| err(format!("bad node `{head}`")))?;
            let kind = parse_kind(comment).map_err(err)?;
            let label = match kind {
                NodeKind::Adder { .. } | NodeKind::Multiplier | NodeKind::Halve => attrs.get("xlabel"),
                _ => attrs.get("label"),
            }
            .cloned()
            .unwrap_or_default();
            nodes.push(Node { id, kind, label });
        }
    }
    nodes.sort_by_key(|n| n.id);
    for (e, dashed) in &edges {
        let negated = matches!(
            nodes.get(e.to).map(|n| &n.kind),
            Some(NodeKind::Adder { signs }) if signs.get(e.port) == Some(&Sign::Minus)
        );
        if negated != *dashed {
            return Err(GraphError::Dot {
                line: 0,
                message: format!("edge n{} -> n{} style disagrees with adder sign", e.from, e.to),
            });
        }
    }
    let g = DataflowGraph::from_parts(
        name.unwrap_or_default(),
        nodes,
        edges.into_iter().map(|(e, _)| e).collect(),
    );
    g.validate()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::{build_naive_graph, build_precompute_graph, build_winograd_graph, NaiveAdders};

    #[test]
    fn winograd_dot_has_register_labels() {
        let dot = export_dot(&build_winograd_graph());
        for i in 0..4 {
            assert!(dot.contains(&format!("[label=\"s{i}\", shape=box, comment=\"register:{i}\"]")));
        }
        assert_eq!(dot.matches("comment=\"multiplier\"").count(), 4);
        // Three pre-adders subtract one operand; the second output adder subtracts two.
        assert_eq!(dot.matches("style=dashed").count(), 3 + 2);
        assert_eq!(export_dot(&build_winograd_graph()), dot);
    }

    #[test]
    fn naive_dot_has_six_multipliers() {
        let dot = export_dot(&build_naive_graph(NaiveAdders::ThreeInput));
        assert_eq!(dot.matches("comment=\"multiplier\"").count(), 6);
        assert!(!dot.contains("dashed"));
    }

    #[test]
    fn round_trips() {
        for g in [
            build_winograd_graph(),
            build_naive_graph(NaiveAdders::ThreeInput),
            build_naive_graph(NaiveAdders::TwoInputChain),
            build_precompute_graph(),
        ] {
            let parsed = parse_dot(&export_dot(&g)).unwrap();
            assert_eq!(parsed.inventory(), g.inventory());
            assert_eq!(parsed, g);
        }
    }

    #[test]
    fn rejects_malformed_text() {
        assert!(parse_dot("digraph g {\n  n0 [label=\"x\"];\n}\n").is_err());
        assert!(parse_dot("digraph g {\n  garbage\n}\n").is_err());
        let dot = export_dot(&build_winograd_graph()).replacen(", style=dashed", "", 1);
        assert!(parse_dot(&dot).is_err());
    }

    #[test]
    fn attr_parser_handles_quotes() {
        let a = parse_attrs(r#"label="a, \"b\"", shape=box"#).unwrap();
        assert_eq!(a["label"], "a, \"b\"");
        assert_eq!(a["shape"], "box");
    }
}
