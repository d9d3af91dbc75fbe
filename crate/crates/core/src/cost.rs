//! Matrix-op, vector-op and data-movement counts per operation, plus
//! parameter and MAC counters.
//!
//! Matrix ops are FLOPs (two per multiply-accumulate) at the model batch
//! size. Data ops are elements moved: inputs and outputs for every image in
//! the batch, plus weights once.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::{ArchError, ArchSpec, ImageShape};
use crate::network::{lower_arch, HeadSpec, Layer, Network, OpKind, TensorShape};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("{kind}: shape {input} -> {output} is inconsistent ({reason})")]
    ShapeMismatch { kind: String, input: TensorShape, output: TensorShape, reason: &'static str },
    #[error(transparent)]
    Arch(#[from] ArchError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub matrix_ops: u64,
    pub vector_ops: u64,
    pub data_ops: u64,
}

impl CostBreakdown {
    pub const ZERO: CostBreakdown = CostBreakdown { matrix_ops: 0, vector_ops: 0, data_ops: 0 };

    pub fn new(matrix_ops: u64, vector_ops: u64, data_ops: u64) -> Self {
        CostBreakdown { matrix_ops, vector_ops, data_ops }
    }

    pub fn as_f64(&self) -> (f64, f64, f64) {
        (self.matrix_ops as f64, self.vector_ops as f64, self.data_ops as f64)
    }
}

impl Add for CostBreakdown {
    type Output = CostBreakdown;

    fn add(self, o: CostBreakdown) -> CostBreakdown {
        CostBreakdown {
            matrix_ops: self.matrix_ops + o.matrix_ops,
            vector_ops: self.vector_ops + o.vector_ops,
            data_ops: self.data_ops + o.data_ops,
        }
    }
}

impl AddAssign for CostBreakdown {
    fn add_assign(&mut self, o: CostBreakdown) {
        *self = *self + o;
    }
}

impl Sum for CostBreakdown {
    fn sum<I: Iterator<Item = CostBreakdown>>(iter: I) -> Self {
        iter.fold(CostBreakdown::ZERO, Add::add)
    }
}

/// Vector-unit work per output element for each non-matrix op.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRules {
    pub batchnorm: u64,
    pub relu: u64,
    pub relu6: u64,
    pub swish: u64,
    pub add: u64,
}

impl Default for CostRules {
    fn default() -> Self {
        CostRules { batchnorm: 8, relu: 1, relu6: 2, swish: 2, add: 1 }
    }
}

fn mismatch(kind: OpKind, input: TensorShape, output: TensorShape, reason: &'static str) -> CostError {
    CostError::ShapeMismatch { kind: kind.label(), input, output, reason }
}

fn check_shapes(kind: OpKind, i: TensorShape, o: TensorShape) -> Result<(), CostError> {
    let fail = |reason| Err(mismatch(kind, i, o, reason));
    match kind {
        OpKind::Conv { kh, kw, stride, groups } => {
            if kh == 0 || kw == 0 || stride == 0 || groups == 0 {
                return fail("zero kernel, stride or groups");
            }
            if i.channels % groups != 0 || o.channels % groups != 0 {
                return fail("channels not divisible by groups");
            }
            if o.height != i.height.div_ceil(stride) || o.width != i.width.div_ceil(stride) {
                return fail("spatial size does not match stride");
            }
        }
        OpKind::FullyConnected => {
            if (i.height, i.width, o.height, o.width) != (1, 1, 1, 1) {
                return fail("fully-connected layers take pooled 1x1 features");
            }
        }
        OpKind::MaxPool { k, stride } | OpKind::AvgPool { k, stride } => {
            if k == 0 || stride == 0 {
                return fail("zero window or stride");
            }
            if i.channels != o.channels
                || o.height != i.height.div_ceil(stride)
                || o.width != i.width.div_ceil(stride)
            {
                return fail("pooling output does not match stride");
            }
        }
        OpKind::GlobalAvgPool => {
            if o != TensorShape::new(1, 1, i.channels) {
                return fail("global pooling yields 1x1xC");
            }
        }
        OpKind::Concat => {
            if i != o {
                return fail("concat input is the concatenated shape");
            }
        }
        OpKind::BatchNorm | OpKind::Relu | OpKind::Relu6 | OpKind::Swish | OpKind::Add | OpKind::Identity => {
            if i != o {
                return fail("elementwise op must preserve shape");
            }
        }
    }
    Ok(())
}

/// Cost of one op. `fused` marks a normalization or activation that runs
/// inside the preceding convolution; such ops cost nothing.
pub fn op_cost(
    kind: OpKind,
    input: TensorShape,
    output: TensorShape,
    batch: u32,
    fused: bool,
    rules: &CostRules,
) -> Result<CostBreakdown, CostError> {
    check_shapes(kind, input, output)?;
    let b = u64::from(batch);
    let n_in = b * input.elements();
    let n_out = b * output.elements();
    let elementwise = |coef: u64| CostBreakdown::new(0, coef * n_out, 2 * n_out);
    if fused && kind.is_fusable() {
        return Ok(CostBreakdown::ZERO);
    }
    let cost = match kind {
        OpKind::Conv { kh, kw, groups, .. } => {
            let weights = u64::from(kh * kw) * u64::from(input.channels / groups) * u64::from(output.channels);
            let spatial = u64::from(output.height) * u64::from(output.width);
            CostBreakdown::new(2 * weights * spatial * b, 0, n_in + n_out + weights)
        }
        OpKind::FullyConnected => {
            let cin = u64::from(input.channels);
            let cout = u64::from(output.channels);
            CostBreakdown::new(2 * cin * cout * b, 0, n_in + n_out + (cin + 1) * cout)
        }
        OpKind::BatchNorm => elementwise(rules.batchnorm),
        OpKind::Relu => elementwise(rules.relu),
        OpKind::Relu6 => elementwise(rules.relu6),
        OpKind::Swish => elementwise(rules.swish),
        OpKind::Add => CostBreakdown::new(0, rules.add * n_out, 3 * n_out),
        OpKind::MaxPool { k, .. } | OpKind::AvgPool { k, .. } => {
            CostBreakdown::new(0, u64::from(k * k) * n_out, n_in + n_out)
        }
        OpKind::GlobalAvgPool => CostBreakdown::new(0, n_in, n_in + n_out),
        OpKind::Concat => CostBreakdown::new(0, 0, n_in + n_out),
        OpKind::Identity => CostBreakdown::ZERO,
    };
    Ok(cost)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostConfig {
    pub input: ImageShape,
    pub batch: u32,
    pub fusion: bool,
    pub head: HeadSpec,
    pub rules: CostRules,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            input: ImageShape::imagenet(),
            batch: 16,
            fusion: true,
            head: HeadSpec::default(),
            rules: CostRules::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerCost {
    pub id: String,
    pub kind: String,
    pub fused: bool,
    pub cost: CostBreakdown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub name: String,
    pub layers: Vec<LayerCost>,
    pub total: CostBreakdown,
}

impl CostReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,kind,fused,matrix_ops,vector_ops,data_ops\n");
        for l in &self.layers {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                l.id,
                l.kind,
                u8::from(l.fused),
                l.cost.matrix_ops,
                l.cost.vector_ops,
                l.cost.data_ops
            ));
        }
        out.push_str(&format!(
            "total,,,{},{},{}\n",
            self.total.matrix_ops, self.total.vector_ops, self.total.data_ops
        ));
        out
    }
}

/// Which layers run fused: a BN/activation whose predecessor is a
/// convolution or another fused op.
pub fn fused_mask(layers: &[Layer], fusion: bool) -> Vec<bool> {
    let mut mask = Vec::with_capacity(layers.len());
    let mut chain = false;
    for l in layers {
        let fused = fusion && chain && l.kind.is_fusable();
        mask.push(fused);
        chain = matches!(l.kind, OpKind::Conv { .. }) || fused;
    }
    mask
}

pub fn network_cost_report(net: &Network, batch: u32, fusion: bool, rules: &CostRules) -> Result<CostReport, CostError> {
    let mask = fused_mask(&net.layers, fusion);
    let mut layers = Vec::with_capacity(net.layers.len());
    let mut total = CostBreakdown::ZERO;
    for (l, &fused) in net.layers.iter().zip(&mask) {
        let cost = op_cost(l.kind, l.input, l.output, batch, fused, rules)?;
        total += cost;
        layers.push(LayerCost { id: l.id.clone(), kind: l.kind.label(), fused, cost });
    }
    Ok(CostReport { name: net.name.clone(), layers, total })
}

pub fn network_cost(net: &Network, batch: u32, fusion: bool, rules: &CostRules) -> Result<CostBreakdown, CostError> {
    let mask = fused_mask(&net.layers, fusion);
    net.layers
        .iter()
        .zip(mask)
        .map(|(l, fused)| op_cost(l.kind, l.input, l.output, batch, fused, rules))
        .sum()
}

/// Total cost of an architecture including the classifier head.
pub fn arch_cost(spec: &ArchSpec, config: &CostConfig) -> Result<CostBreakdown, CostError> {
    let net = lower_arch(spec, config.input, &config.head)?;
    network_cost(&net, config.batch, config.fusion, &config.rules)
}

pub fn arch_cost_report(spec: &ArchSpec, config: &CostConfig) -> Result<CostReport, CostError> {
    let net = lower_arch(spec, config.input, &config.head)?;
    network_cost_report(&net, config.batch, config.fusion, &config.rules)
}

/// Weights of convolutions (no bias), two affine parameters per BatchNorm
/// channel, and fully-connected weights with bias.
pub fn network_params(net: &Network) -> u64 {
    net.layers
        .iter()
        .map(|l| match l.kind {
            OpKind::Conv { kh, kw, groups, .. } => {
                u64::from(kh * kw) * u64::from(l.input.channels / groups) * u64::from(l.output.channels)
            }
            OpKind::FullyConnected => (u64::from(l.input.channels) + 1) * u64::from(l.output.channels),
            OpKind::BatchNorm => 2 * u64::from(l.output.channels),
            _ => 0,
        })
        .sum()
}

/// Multiply-accumulates of convolutions and fully-connected layers for a
/// single image.
pub fn network_macs(net: &Network) -> u64 {
    net.layers
        .iter()
        .map(|l| match l.kind {
            OpKind::Conv { kh, kw, groups, .. } => {
                u64::from(kh * kw)
                    * u64::from(l.input.channels / groups)
                    * u64::from(l.output.channels)
                    * u64::from(l.output.height)
                    * u64::from(l.output.width)
            }
            OpKind::FullyConnected => u64::from(l.input.channels) * u64::from(l.output.channels),
            _ => 0,
        })
        .sum()
}

pub fn param_count(spec: &ArchSpec, head: &HeadSpec) -> Result<u64, ArchError> {
    // Parameters do not depend on resolution; any input deep enough works.
    let side = 1u32 << spec.stages.len().clamp(1, 16);
    let net = lower_arch(spec, ImageShape::new(side, side, 3), head)?;
    Ok(network_params(&net))
}

pub fn mac_count(spec: &ArchSpec, input: ImageShape, head: &HeadSpec) -> Result<u64, ArchError> {
    Ok(network_macs(&lower_arch(spec, input, head)?))
}
