//! Residual networks outside the four-edge space, used for costing and
//! parameter comparisons only.

use crate::arch::ImageShape;
use crate::network::{NetBuilder, Network, OpKind, TensorShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResNetBlock {
    /// Two 3x3 convolutions.
    Basic,
    /// 1x1 reduce, 3x3, 1x1 expand.
    Bottleneck(Bottleneck),
}

/// Bottleneck shape: the inner 3x3 runs at `width`, the block emits
/// `width * expansion` channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bottleneck {
    pub expansion: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceNet {
    pub name: String,
    pub block: ResNetBlock,
    pub depths: Vec<u32>,
    /// Inner width of the first stage; doubled at each later stage.
    pub base_width: u32,
    pub stem_width: u32,
}

impl ReferenceNet {
    pub fn by_name(name: &str) -> Option<ReferenceNet> {
        let (block, depths) = match name {
            "resnet-18" => (ResNetBlock::Basic, vec![2, 2, 2, 2]),
            "resnet-34" => (ResNetBlock::Basic, vec![3, 4, 6, 3]),
            "resnet-50" => (ResNetBlock::Bottleneck(Bottleneck { expansion: 4 }), vec![3, 4, 6, 3]),
            "resnet-101" => (ResNetBlock::Bottleneck(Bottleneck { expansion: 4 }), vec![3, 4, 23, 3]),
            _ => return None,
        };
        Some(ReferenceNet { name: name.to_string(), block, depths, base_width: 64, stem_width: 64 })
    }

    /// 7x7/2 stem, 3x3/2 max-pool, residual stages (stride 2 from the
    /// second stage on, projection shortcuts where shapes change), global
    /// pooling and a fully-connected classifier.
    pub fn network(&self, input: ImageShape, num_classes: u32) -> Network {
        let mut b = NetBuilder::new(self.name.clone(), input);
        b.conv("stem.conv", 7, 7, 2, 1, self.stem_width)
            .same("stem.bn", OpKind::BatchNorm)
            .same("stem.relu", OpKind::Relu)
            .pool("stem.pool", OpKind::MaxPool { k: 3, stride: 2 });
        for (s, &depth) in self.depths.iter().enumerate() {
            let width = self.base_width << s;
            for block in 0..depth {
                let stride = if s > 0 && block == 0 { 2 } else { 1 };
                let p = format!("s{}.b{block}", s + 1);
                residual_block(&mut b, &p, self.block, width, stride);
            }
        }
        b.pool("head.pool", OpKind::GlobalAvgPool).fc("head.fc", num_classes);
        let mut net = b.finish();
        net.name = self.name.clone();
        net
    }
}

pub(crate) fn residual_block(b: &mut NetBuilder, p: &str, kind: ResNetBlock, width: u32, stride: u32) {
    let block_in = b.shape();
    let out_channels = match kind {
        ResNetBlock::Basic => {
            b.conv(&format!("{p}.conv1"), 3, 3, stride, 1, width)
                .same(format!("{p}.bn1"), OpKind::BatchNorm)
                .same(format!("{p}.relu1"), OpKind::Relu)
                .conv(&format!("{p}.conv2"), 3, 3, 1, 1, width)
                .same(format!("{p}.bn2"), OpKind::BatchNorm);
            width
        }
        ResNetBlock::Bottleneck(Bottleneck { expansion }) => {
            b.conv(&format!("{p}.conv1"), 1, 1, 1, 1, width)
                .same(format!("{p}.bn1"), OpKind::BatchNorm)
                .same(format!("{p}.relu1"), OpKind::Relu)
                .conv(&format!("{p}.conv2"), 3, 3, stride, 1, width)
                .same(format!("{p}.bn2"), OpKind::BatchNorm)
                .same(format!("{p}.relu2"), OpKind::Relu)
                .conv(&format!("{p}.conv3"), 1, 1, 1, 1, width * expansion)
                .same(format!("{p}.bn3"), OpKind::BatchNorm);
            width * expansion
        }
    };
    let out = b.shape();
    if stride != 1 || block_in.channels != out_channels {
        let proj: TensorShape = block_in.strided(stride, stride, out_channels);
        debug_assert_eq!(proj, out);
        b.branch(format!("{p}.down.conv"), OpKind::conv(1, stride), block_in, proj)
            .same(format!("{p}.down.bn"), OpKind::BatchNorm);
    }
    b.same(format!("{p}.add"), OpKind::Add).same(format!("{p}.relu"), OpKind::Relu);
}
