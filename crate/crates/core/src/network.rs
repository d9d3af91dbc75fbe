//! Flat, execution-ordered layer lists. Search-space architectures and the
//! hand-written reference networks both lower to this form so one cost
//! model covers them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arch::{validate, ArchError, ArchSpec, EdgeOp, ImageShape};

/// Tensor shapes are per-image; batch is applied by the cost model.
pub type TensorShape = ImageShape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OpKind {
    Conv { kh: u32, kw: u32, stride: u32, groups: u32 },
    FullyConnected,
    BatchNorm,
    Relu,
    Relu6,
    Swish,
    /// Elementwise sum of two equally shaped tensors.
    Add,
    MaxPool { k: u32, stride: u32 },
    AvgPool { k: u32, stride: u32 },
    GlobalAvgPool,
    /// Channel concatenation; `input` holds the concatenated shape.
    Concat,
    Identity,
}

impl OpKind {
    pub fn conv(k: u32, stride: u32) -> OpKind {
        OpKind::Conv { kh: k, kw: k, stride, groups: 1 }
    }

    pub fn is_matrix(self) -> bool {
        matches!(self, OpKind::Conv { .. } | OpKind::FullyConnected)
    }

    /// Vector ops that may be fused into a preceding convolution.
    pub fn is_fusable(self) -> bool {
        matches!(self, OpKind::BatchNorm | OpKind::Relu | OpKind::Relu6 | OpKind::Swish)
    }

    pub fn label(self) -> String {
        match self {
            OpKind::Conv { kh, kw, groups, .. } if groups > 1 => format!("dwconv{kh}x{kw}"),
            OpKind::Conv { kh, kw, .. } => format!("conv{kh}x{kw}"),
            OpKind::FullyConnected => "fc".into(),
            OpKind::BatchNorm => "batchnorm".into(),
            OpKind::Relu => "relu".into(),
            OpKind::Relu6 => "relu6".into(),
            OpKind::Swish => "swish".into(),
            OpKind::Add => "add".into(),
            OpKind::MaxPool { k, .. } => format!("maxpool{k}x{k}"),
            OpKind::AvgPool { k, .. } => format!("avgpool{k}x{k}"),
            OpKind::GlobalAvgPool => "gap".into(),
            OpKind::Concat => "concat".into(),
            OpKind::Identity => "identity".into(),
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub id: String,
    pub kind: OpKind,
    pub input: TensorShape,
    pub output: TensorShape,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(name: impl Into<String>) -> Self {
        Network { name: name.into(), layers: Vec::new() }
    }

    pub fn output(&self) -> Option<TensorShape> {
        self.layers.last().map(|l| l.output)
    }

    pub fn concat(mut self, other: Network) -> Network {
        self.layers.extend(other.layers);
        self
    }
}

/// Appends layers while tracking the running feature-map shape.
pub struct NetBuilder {
    net: Network,
    cur: TensorShape,
}

impl NetBuilder {
    pub fn new(name: impl Into<String>, input: TensorShape) -> Self {
        NetBuilder { net: Network::new(name), cur: input }
    }

    pub fn shape(&self) -> TensorShape {
        self.cur
    }

    pub fn push(&mut self, id: impl Into<String>, kind: OpKind, output: TensorShape) -> &mut Self {
        self.net.layers.push(Layer { id: id.into(), kind, input: self.cur, output });
        self.cur = output;
        self
    }

    /// Appends a layer fed by `input` rather than the running shape, e.g. a
    /// projection on a residual shortcut.
    pub fn branch(&mut self, id: impl Into<String>, kind: OpKind, input: TensorShape, output: TensorShape) -> &mut Self {
        self.net.layers.push(Layer { id: id.into(), kind, input, output });
        self.cur = output;
        self
    }

    pub fn conv(&mut self, id: &str, kh: u32, kw: u32, stride: u32, groups: u32, out_channels: u32) -> &mut Self {
        let out = self.cur.strided(stride, stride, out_channels);
        self.push(id, OpKind::Conv { kh, kw, stride, groups }, out)
    }

    /// Applies an op that keeps the shape (normalization, activation, add).
    pub fn same(&mut self, id: impl Into<String>, kind: OpKind) -> &mut Self {
        let out = self.cur;
        self.push(id, kind, out)
    }

    pub fn pool(&mut self, id: &str, kind: OpKind) -> &mut Self {
        let out = match kind {
            OpKind::MaxPool { stride, .. } | OpKind::AvgPool { stride, .. } => {
                self.cur.strided(stride, stride, self.cur.channels)
            }
            OpKind::GlobalAvgPool => TensorShape::new(1, 1, self.cur.channels),
            other => panic!("{other} is not a pooling op"),
        };
        self.push(id, kind, out)
    }

    pub fn fc(&mut self, id: &str, out_features: u32) -> &mut Self {
        self.push(id, OpKind::FullyConnected, TensorShape::new(1, 1, out_features))
    }

    pub fn finish(self) -> Network {
        self.net
    }
}

/// Classifier appended after the searched body: an optional 1x1 conv
/// (BN, ReLU), global average pooling and a fully-connected layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub conv_width: Option<u32>,
    pub num_classes: u32,
}

impl Default for HeadSpec {
    fn default() -> Self {
        HeadSpec { conv_width: Some(1280), num_classes: 1000 }
    }
}

impl HeadSpec {
    /// Pooling straight into the classifier.
    pub fn plain(num_classes: u32) -> Self {
        HeadSpec { conv_width: None, num_classes }
    }

    pub fn append(&self, b: &mut NetBuilder) {
        if let Some(width) = self.conv_width {
            b.conv("head.conv", 1, 1, 1, 1, width);
            b.same("head.bn", OpKind::BatchNorm);
            b.same("head.relu", OpKind::Relu);
        }
        b.pool("head.pool", OpKind::GlobalAvgPool);
        b.fc("head.fc", self.num_classes);
    }
}

/// Lowers a search-space architecture. Every convolution is followed by
/// BatchNorm and ReLU; when `la` is off the final ReLU of each block is
/// dropped. Pair edges are two sequential convolutions of the edge width.
/// Skip connections add the block input to its output on every block but
/// the first of a stage.
pub fn lower_arch(spec: &ArchSpec, input: ImageShape, head: &HeadSpec) -> Result<Network, ArchError> {
    lower_body(spec, input).map(|mut b| {
        head.append(&mut b);
        b.finish()
    })
}

pub(crate) fn lower_body(spec: &ArchSpec, input: ImageShape) -> Result<NetBuilder, ArchError> {
    let report = validate(spec);
    if !report.is_valid() {
        return Err(ArchError::Invalid(report));
    }
    let ns = spec.stages.len();
    let min = 1u32 << ns;
    if input.height < min || input.width < min {
        return Err(ArchError::SpatialUnderflow { height: input.height, width: input.width, stages: ns });
    }
    let mut b = NetBuilder::new("arch", input);
    for (i, st) in spec.stages.iter().enumerate() {
        let stage = i + 1;
        let first = st.first_active_edge().expect("validated");
        let last = st.last_active_edge().expect("validated");
        for block in 0..st.nb {
            let block_in = b.shape();
            for (e, &op) in st.edges.iter().enumerate() {
                if op.is_identity() {
                    continue;
                }
                let stride = if block == 0 && e == first { 2 } else { 1 };
                let width = st.edge_width(stage, e);
                let p = format!("s{stage}.b{block}.e{e}");
                let k = op.kernel();
                if op.is_pair() {
                    b.conv(&format!("{p}.conv1x{k}"), 1, k, stride, 1, width);
                    b.same(format!("{p}.bn0"), OpKind::BatchNorm);
                    b.same(format!("{p}.relu0"), OpKind::Relu);
                    b.conv(&format!("{p}.conv{k}x1"), k, 1, 1, 1, width);
                } else {
                    debug_assert!(op != EdgeOp::Identity);
                    b.conv(&format!("{p}.conv"), k, k, stride, 1, width);
                }
                b.same(format!("{p}.bn"), OpKind::BatchNorm);
                if e != last || st.la {
                    b.same(format!("{p}.relu"), OpKind::Relu);
                }
            }
            if st.sk && block > 0 {
                debug_assert_eq!(block_in, b.shape());
                b.same(format!("s{stage}.b{block}.add"), OpKind::Add);
            }
        }
    }
    Ok(b)
}
