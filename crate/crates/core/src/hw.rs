//! Hardware cost model: operand-width area estimates and DSP-block packing.
//!
//! Multiplier area grows with the square of the operand width, adder area
//! linearly. Inventories always come from the dataflow graphs, never from
//! hard-coded counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataflow::{build_naive_graph, build_winograd_graph, DataflowGraph, NaiveAdders, OperatorInventory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HwError {
    #[error("bit width must be at least 1, got {0}")]
    BitWidth(u32),
    #[error("area coefficients must be finite and positive (mul {mul}, add {add})")]
    Coefficients { mul: f64, add: f64 },
    #[error("invalid DSP block spec: {0}")]
    DspSpec(String),
}

/// Area per multiplier bit² and per adder bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AreaFields", into = "AreaFields")]
pub struct AreaModel {
    mul_coeff: f64,
    add_coeff: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AreaFields {
    mul_coeff: f64,
    add_coeff: f64,
}

impl TryFrom<AreaFields> for AreaModel {
    type Error = HwError;
    fn try_from(f: AreaFields) -> Result<Self, HwError> {
        AreaModel::new(f.mul_coeff, f.add_coeff)
    }
}

impl From<AreaModel> for AreaFields {
    fn from(m: AreaModel) -> Self {
        AreaFields {
            mul_coeff: m.mul_coeff,
            add_coeff: m.add_coeff,
        }
    }
}

impl Default for AreaModel {
    fn default() -> Self {
        AreaModel::unit()
    }
}

impl AreaModel {
    pub fn new(mul_coeff: f64, add_coeff: f64) -> Result<Self, HwError> {
        let ok = |c: f64| c.is_finite() && c > 0.0;
        if !ok(mul_coeff) || !ok(add_coeff) {
            return Err(HwError::Coefficients {
                mul: mul_coeff,
                add: add_coeff,
            });
        }
        Ok(AreaModel {
            mul_coeff,
            add_coeff,
        })
    }

    pub fn unit() -> Self {
        AreaModel {
            mul_coeff: 1.0,
            add_coeff: 1.0,
        }
    }

    pub fn mul_coeff(&self) -> f64 {
        self.mul_coeff
    }

    pub fn add_coeff(&self) -> f64 {
        self.add_coeff
    }
}

/// Resources of one hardened DSP block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DspBlockSpec {
    pub multipliers: u32,
    pub input_adders: u32,
    pub output_adders: u32,
}

impl DspBlockSpec {
    /// Four multipliers, three adders ahead of them and three after.
    pub const STRATIX_II: DspBlockSpec = DspBlockSpec {
        multipliers: 4,
        input_adders: 3,
        output_adders: 3,
    };
}

impl Default for DspBlockSpec {
    fn default() -> Self {
        DspBlockSpec::STRATIX_II
    }
}

impl FromStr for DspBlockSpec {
    type Err = HwError;

    /// `multipliers,input_adders,output_adders`
    fn from_str(s: &str) -> Result<Self, HwError> {
        let parts: Vec<u32> = s
            .split(',')
            .map(|p| p.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| HwError::DspSpec(format!("expected `m,i,o`, got `{s}`")))?;
        match parts.as_slice() {
            [m, i, o] => Ok(DspBlockSpec {
                multipliers: *m,
                input_adders: *i,
                output_adders: *o,
            }),
            _ => Err(HwError::DspSpec(format!("expected `m,i,o`, got `{s}`"))),
        }
    }
}

/// How an inventory maps onto DSP blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DspPacking {
    pub blocks_used: u64,
    pub internal_input_adders: u64,
    pub internal_output_adders: u64,
    /// Two-input-equivalent adders left for general-purpose logic.
    pub external_adders: u64,
    pub unused_multipliers: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaBreakdown {
    pub total: f64,
    pub mul: f64,
    pub add: f64,
}

pub fn area_breakdown(
    inv: &OperatorInventory,
    bits: u32,
    model: &AreaModel,
) -> Result<AreaBreakdown, HwError> {
    if bits < 1 {
        return Err(HwError::BitWidth(bits));
    }
    let b = bits as f64;
    let mul = model.mul_coeff * b * b * inv.multipliers as f64;
    let add = model.add_coeff * b * inv.adders_2in_equiv() as f64;
    Ok(AreaBreakdown {
        total: mul + add,
        mul,
        add,
    })
}

/// `mul_coeff·b²·multipliers + add_coeff·b·adders` (two-input equivalents).
pub fn estimate_area(inv: &OperatorInventory, bits: u32, model: &AreaModel) -> Result<f64, HwError> {
    area_breakdown(inv, bits, model).map(|a| a.total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureComparison {
    pub naive: f64,
    pub winograd: f64,
    /// winograd / naive
    pub ratio: f64,
}

pub fn compare_structures(bits: u32, model: &AreaModel) -> Result<StructureComparison, HwError> {
    let naive = estimate_area(&Structure::Naive.graph().inventory(), bits, model)?;
    let winograd = estimate_area(&Structure::Winograd.graph().inventory(), bits, model)?;
    Ok(StructureComparison {
        naive,
        winograd,
        ratio: winograd / naive,
    })
}

/// Greedy packing: blocks are sized by multipliers; pre-multiplication adders
/// fill the block input adders, post-multiplication adders fill the output
/// adders, and the remainder spills to external logic.
pub fn pack_into_dsp(inv: &OperatorInventory, spec: &DspBlockSpec) -> Result<DspPacking, HwError> {
    if inv.multipliers > 0 && spec.multipliers == 0 {
        return Err(HwError::DspSpec(
            "a block without multipliers cannot host a multiplier".to_string(),
        ));
    }
    let blocks = if inv.multipliers == 0 {
        0
    } else {
        inv.multipliers.div_ceil(spec.multipliers as u64)
    };
    let input_capacity = blocks * spec.input_adders as u64;
    let output_capacity = blocks * spec.output_adders as u64;
    let internal_input_adders = inv.pre_adders.min(input_capacity);
    let internal_output_adders = inv.post_adders.min(output_capacity);
    Ok(DspPacking {
        blocks_used: blocks,
        internal_input_adders,
        internal_output_adders,
        external_adders: (inv.pre_adders - internal_input_adders)
            + (inv.post_adders - internal_output_adders),
        unused_multipliers: blocks * spec.multipliers as u64 - inv.multipliers,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Naive,
    #[default]
    Winograd,
}

impl Structure {
    pub fn graph(self) -> DataflowGraph {
        match self {
            Structure::Naive => build_naive_graph(NaiveAdders::ThreeInput),
            Structure::Winograd => build_winograd_graph(),
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Naive => "naive",
            Structure::Winograd => "winograd",
        })
    }
}

impl FromStr for Structure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "naive" => Ok(Structure::Naive),
            "winograd" => Ok(Structure::Winograd),
            other => Err(format!("unknown structure `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub structure: String,
    pub bit_width: u32,
    pub inventory: OperatorInventory,
    pub area: AreaBreakdown,
    pub packing: DspPacking,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    structure: &'a str,
    bit_width: u32,
    inventory: InventoryJson,
    area: AreaBreakdown,
    dsp: DspJson,
}

#[derive(Serialize)]
struct InventoryJson {
    multipliers: u64,
    adders_2in: u64,
    adders_3in: u64,
}

#[derive(Serialize)]
struct DspJson {
    blocks_used: u64,
    external_adders: u64,
    unused_multipliers: u64,
}

impl ResourceReport {
    /// Pretty JSON with a fixed field order, newline-terminated.
    pub fn to_json(&self) -> String {
        let doc = ReportJson {
            structure: &self.structure,
            bit_width: self.bit_width,
            inventory: InventoryJson {
                multipliers: self.inventory.multipliers,
                adders_2in: self.inventory.adders_2in,
                adders_3in: self.inventory.adders_3in,
            },
            area: self.area,
            dsp: DspJson {
                blocks_used: self.packing.blocks_used,
                external_adders: self.packing.external_adders,
                unused_multipliers: self.packing.unused_multipliers,
            },
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Report for an arbitrary graph; the inventory is extracted from it.
pub fn report_for_graph(
    name: &str,
    graph: &DataflowGraph,
    bits: u32,
    model: &AreaModel,
    spec: &DspBlockSpec,
) -> Result<ResourceReport, HwError> {
    let inventory = graph.inventory();
    Ok(ResourceReport {
        structure: name.to_string(),
        bit_width: bits,
        inventory,
        area: area_breakdown(&inventory, bits, model)?,
        packing: pack_into_dsp(&inventory, spec)?,
    })
}

pub fn report(
    structure: Structure,
    bits: u32,
    model: &AreaModel,
    spec: &DspBlockSpec,
) -> Result<ResourceReport, HwError> {
    report_for_graph(&structure.to_string(), &structure.graph(), bits, model, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(multipliers: u64, adders_2in: u64, adders_3in: u64, pre: u64, post: u64) -> OperatorInventory {
        OperatorInventory {
            multipliers,
            adders_2in,
            adders_3in,
            halvings: 0,
            pre_adders: pre,
            post_adders: post,
        }
    }

    #[test]
    fn area_examples() {
        let unit = AreaModel::unit();
        let naive = inv(6, 0, 2, 0, 4);
        let wino = inv(4, 4, 2, 4, 4);
        assert_eq!(estimate_area(&naive, 16, &unit).unwrap(), 1600.0);
        assert_eq!(estimate_area(&wino, 16, &unit).unwrap(), 1152.0);
        assert_eq!(estimate_area(&naive, 1, &unit).unwrap(), 6.0 + 4.0);
        assert_eq!(estimate_area(&wino, 1, &unit).unwrap(), 4.0 + 8.0);
        assert_eq!(estimate_area(&wino, 0, &unit), Err(HwError::BitWidth(0)));
        let scaled = AreaModel::new(0.5, 3.0).unwrap();
        assert_eq!(estimate_area(&wino, 4, &scaled).unwrap(), 0.5 * 16.0 * 4.0 + 3.0 * 4.0 * 8.0);
    }

    #[test]
    fn area_model_validation() {
        assert!(AreaModel::new(0.0, 1.0).is_err());
        assert!(AreaModel::new(1.0, -1.0).is_err());
        assert!(AreaModel::new(f64::NAN, 1.0).is_err());
        let m: Result<AreaModel, _> = serde_json::from_str(r#"{"mul_coeff": 0, "add_coeff": 1}"#);
        assert!(m.is_err());
    }

    #[test]
    fn comparison_examples() {
        let unit = AreaModel::unit();
        let c = compare_structures(16, &unit).unwrap();
        assert_eq!((c.naive, c.winograd), (1600.0, 1152.0));
        assert_eq!(c.ratio, 0.72);
        let c = compare_structures(2, &unit).unwrap();
        assert_eq!((c.naive, c.winograd, c.ratio), (32.0, 32.0, 1.0));
        let c = compare_structures(1, &unit).unwrap();
        assert_eq!((c.naive, c.winograd), (10.0, 12.0));
        assert!((c.ratio - 1.2).abs() < 1e-15);
    }

    #[test]
    fn area_difference_closed_form() {
        let unit = AreaModel::unit();
        for b in 1..=64u32 {
            let c = compare_structures(b, &unit).unwrap();
            let b = b as f64;
            assert_eq!(c.naive - c.winograd, 2.0 * b * (b - 2.0));
        }
    }

    #[test]
    fn packing_examples() {
        let s2 = DspBlockSpec::STRATIX_II;
        let p = pack_into_dsp(&inv(4, 4, 2, 4, 4), &s2).unwrap();
        assert_eq!(p.blocks_used, 1);
        assert_eq!(p.internal_input_adders, 3);
        assert_eq!(p.internal_output_adders, 3);
        assert_eq!(p.external_adders, 2);
        assert_eq!(p.unused_multipliers, 0);
        let p = pack_into_dsp(&inv(6, 0, 2, 0, 4), &s2).unwrap();
        assert_eq!(p.blocks_used, 2);
        assert_eq!(p.external_adders, 0);
        assert_eq!(p.unused_multipliers, 2);
        assert_eq!(pack_into_dsp(&OperatorInventory::default(), &s2).unwrap(), DspPacking::default());
        let none = DspBlockSpec { multipliers: 0, input_adders: 3, output_adders: 3 };
        assert!(pack_into_dsp(&inv(1, 0, 0, 0, 0), &none).is_err());
    }

    #[test]
    fn packing_conserves_adders() {
        for m in 0..12 {
            for pre in 0..10 {
                for post in 0..10 {
                    for spec in [DspBlockSpec::STRATIX_II, DspBlockSpec { multipliers: 2, input_adders: 0, output_adders: 1 }] {
                        let i = inv(m, pre + post, 0, pre, post);
                        let p = pack_into_dsp(&i, &spec).unwrap();
                        assert_eq!(
                            p.internal_input_adders + p.internal_output_adders + p.external_adders,
                            i.adders_2in_equiv()
                        );
                        assert!(m <= p.blocks_used * spec.multipliers as u64);
                    }
                }
            }
        }
    }

    #[test]
    fn reports_use_graph_inventories() {
        let unit = AreaModel::unit();
        let s2 = DspBlockSpec::STRATIX_II;
        let w = report(Structure::Winograd, 16, &unit, &s2).unwrap();
        assert_eq!((w.inventory.multipliers, w.inventory.adders_2in, w.inventory.adders_3in), (4, 4, 2));
        assert_eq!(w.area.total, 1152.0);
        assert_eq!(w.packing.blocks_used, 1);
        let n = report(Structure::Naive, 16, &unit, &s2).unwrap();
        assert_eq!(n.inventory.multipliers, 6);
        assert_eq!(n.area.total, 1600.0);
        assert_eq!(n.packing.blocks_used, 2);
    }

    #[test]
    fn parses_dsp_spec() {
        assert_eq!("4,3,3".parse::<DspBlockSpec>().unwrap(), DspBlockSpec::STRATIX_II);
        assert!("4,3".parse::<DspBlockSpec>().is_err());
        assert!("a,b,c".parse::<DspBlockSpec>().is_err());
    }
}
