//! Winograd F(2,3) minimal filtering: kernels, datapath arithmetic, dataflow
//! structure and a hardware cost model for the two-output, three-tap
//! convolution module.

pub mod arith;
pub mod dataflow;
pub mod hw;
pub mod io;
pub mod kernel;
pub mod streaming;
pub mod verify;

pub use arith::{
    Arithmetic, ArithError, Backend, BackendKind, Counting, Exact, FixedFormat, FixedPoint,
    Float64, OpCounts, OverflowPolicy, Rational, Rounding, ScalarValue, Sign,
};
pub use kernel::{
    naive_pair, precompute_taps, precompute_taps_factored, transform_constants, winograd_pair,
    winograd_pair_matrix, OutPair, Taps3, Tile4, TransformConstants, TransformedTaps,
};
pub use streaming::{convolve, convolve_parallel, tile_schedule, ConvolutionResult, Mode, Signal};
pub use dataflow::{
    build_naive_graph, build_precompute_graph, build_winograd_graph, export_dot, DataflowGraph,
    ModuleState, OperatorInventory,
};
pub use hw::{
    compare_structures, estimate_area, pack_into_dsp, report, report_for_graph, AreaModel,
    DspBlockSpec, DspPacking, ResourceReport, Structure,
};
pub use io::{load_config, load_signal, save_config, write_result, RunConfig, SignalFormat};
