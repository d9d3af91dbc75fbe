//! Seeded samplers over four design spaces. The search space draws from
//! [`sample_random`]; the others vary depth, width and block options around
//! well-known templates.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::reference::{residual_block, Bottleneck, ResNetBlock};
use crate::arch::{sample_random, ArchSpec, ImageShape, SpaceConstraints};
use crate::network::{lower_arch, HeadSpec, NetBuilder, Network, OpKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Isynet,
    ResnetLike,
    Mobilenetv2Like,
    MnasnetLike,
}

impl Space {
    pub const ALL: [Space; 4] = [Space::Isynet, Space::ResnetLike, Space::Mobilenetv2Like, Space::MnasnetLike];

    pub fn name(self) -> &'static str {
        match self {
            Space::Isynet => "isynet",
            Space::ResnetLike => "resnet_like",
            Space::Mobilenetv2Like => "mobilenetv2_like",
            Space::MnasnetLike => "mnasnet_like",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Space {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Space::ALL
            .into_iter()
            .find(|sp| sp.name() == s)
            .ok_or_else(|| format!("unknown space '{s}'; expected one of isynet, resnet_like, mobilenetv2_like, mnasnet_like"))
    }
}

#[derive(Clone, Debug)]
pub struct SampledNet {
    pub network: Network,
    /// Present for search-space samples.
    pub spec: Option<ArchSpec>,
}

/// Draws `n` networks at 224x224 with a 1000-class classifier.
pub fn space_sampler<R: Rng + ?Sized>(space: Space, n: usize, rng: &mut R) -> Vec<SampledNet> {
    let input = ImageShape::imagenet();
    (0..n)
        .map(|i| match space {
            Space::Isynet => {
                let spec = sample_random(rng, &SpaceConstraints::default());
                let mut network = lower_arch(&spec, input, &HeadSpec::default()).expect("samples are in-space");
                network.name = format!("isynet-{i}");
                SampledNet { network, spec: Some(spec) }
            }
            Space::ResnetLike => SampledNet { network: resnet_like(rng, input, i), spec: None },
            Space::Mobilenetv2Like => SampledNet { network: mobilenetv2_like(rng, input, i), spec: None },
            Space::MnasnetLike => SampledNet { network: mnasnet_like(rng, input, i), spec: None },
        })
        .collect()
}

/// Rounds to the nearest multiple of 8, never dropping more than 10%.
fn divisible(v: f64) -> u32 {
    let d = 8.0;
    let r = ((v + d / 2.0) / d).floor().max(1.0) * d;
    let r = if r < 0.9 * v { r + d } else { r };
    r as u32
}

/// Four residual stages of basic or bottleneck blocks, 1-8 blocks each,
/// base width 32-128.
fn resnet_like<R: Rng + ?Sized>(rng: &mut R, input: ImageShape, i: usize) -> Network {
    let block = if rng.gen_bool(0.5) {
        ResNetBlock::Basic
    } else {
        ResNetBlock::Bottleneck(Bottleneck { expansion: 4 })
    };
    let base = *[32u32, 48, 64, 80, 96, 128].choose(rng).expect("non-empty");
    let depths: Vec<u32> = (0..4).map(|_| rng.gen_range(1..=8)).collect();
    let mut b = NetBuilder::new(format!("resnet_like-{i}"), input);
    b.conv("stem.conv", 7, 7, 2, 1, base)
        .same("stem.bn", OpKind::BatchNorm)
        .same("stem.relu", OpKind::Relu)
        .pool("stem.pool", OpKind::MaxPool { k: 3, stride: 2 });
    for (s, &depth) in depths.iter().enumerate() {
        for blk in 0..depth {
            let stride = if s > 0 && blk == 0 { 2 } else { 1 };
            residual_block(&mut b, &format!("s{}.b{blk}", s + 1), block, base << s, stride);
        }
    }
    b.pool("head.pool", OpKind::GlobalAvgPool).fc("head.fc", 1000);
    b.finish()
}

/// Inverted residual: optional 1x1 expansion, depthwise kxk, linear 1x1
/// projection, residual add when shapes match.
fn inverted_residual(b: &mut NetBuilder, p: &str, expand: u32, k: u32, stride: u32, out: u32, act: OpKind) {
    let block_in = b.shape();
    let hidden = block_in.channels * expand;
    if expand != 1 {
        b.conv(&format!("{p}.expand"), 1, 1, 1, 1, hidden)
            .same(format!("{p}.expand.bn"), OpKind::BatchNorm)
            .same(format!("{p}.expand.act"), act);
    }
    b.conv(&format!("{p}.dw"), k, k, stride, hidden, hidden)
        .same(format!("{p}.dw.bn"), OpKind::BatchNorm)
        .same(format!("{p}.dw.act"), act)
        .conv(&format!("{p}.project"), 1, 1, 1, 1, out)
        .same(format!("{p}.project.bn"), OpKind::BatchNorm);
    if stride == 1 && block_in.channels == out {
        b.same(format!("{p}.add"), OpKind::Add);
    }
}

fn mobile_head(b: &mut NetBuilder, width: u32, act: OpKind) {
    b.conv("head.conv", 1, 1, 1, 1, width)
        .same("head.bn", OpKind::BatchNorm)
        .same("head.act", act)
        .pool("head.pool", OpKind::GlobalAvgPool)
        .fc("head.fc", 1000);
}

/// The seven inverted-residual stages of the reference mobile network with
/// a random width multiplier, per-stage depth and expansion ratio.
fn mobilenetv2_like<R: Rng + ?Sized>(rng: &mut R, input: ImageShape, i: usize) -> Network {
    // (expansion, channels, repeats, stride)
    const STAGES: [(u32, u32, u32, u32); 7] =
        [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2), (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)];
    let alpha = *[0.5, 0.75, 1.0, 1.3, 1.4].choose(rng).expect("non-empty");
    let act = OpKind::Relu6;
    let mut b = NetBuilder::new(format!("mobilenetv2_like-{i}"), input);
    b.conv("stem.conv", 3, 3, 2, 1, divisible(32.0 * alpha))
        .same("stem.bn", OpKind::BatchNorm)
        .same("stem.act", act);
    for (s, &(t, c, n, stride)) in STAGES.iter().enumerate() {
        let expand = if t == 1 { 1 } else { *[3, 4, 6].choose(rng).expect("non-empty") };
        let repeats = rng.gen_range(n.saturating_sub(1).max(1)..=n + 1);
        let out = divisible(f64::from(c) * alpha);
        for r in 0..repeats {
            let st = if r == 0 { stride } else { 1 };
            inverted_residual(&mut b, &format!("s{}.b{r}", s + 1), expand, 3, st, out, act);
        }
    }
    mobile_head(&mut b, divisible(1280.0 * alpha.max(1.0)), act);
    b.finish()
}

/// Factorized hierarchical space: separable stem block, then six stages
/// with per-stage kernel (3/5), expansion (3/6) and depth (1-4).
fn mnasnet_like<R: Rng + ?Sized>(rng: &mut R, input: ImageShape, i: usize) -> Network {
    // (channels, stride)
    const STAGES: [(u32, u32); 6] = [(24, 2), (40, 2), (80, 2), (96, 1), (192, 2), (320, 1)];
    let alpha = *[0.5, 0.75, 1.0, 1.3].choose(rng).expect("non-empty");
    let act = OpKind::Relu;
    let stem = divisible(32.0 * alpha);
    let mut b = NetBuilder::new(format!("mnasnet_like-{i}"), input);
    b.conv("stem.conv", 3, 3, 2, 1, stem)
        .same("stem.bn", OpKind::BatchNorm)
        .same("stem.act", act)
        .conv("sep.dw", 3, 3, 1, stem, stem)
        .same("sep.dw.bn", OpKind::BatchNorm)
        .same("sep.dw.act", act)
        .conv("sep.pw", 1, 1, 1, 1, divisible(16.0 * alpha))
        .same("sep.pw.bn", OpKind::BatchNorm);
    for (s, &(c, stride)) in STAGES.iter().enumerate() {
        let k = *[3, 5].choose(rng).expect("non-empty");
        let expand = *[3, 6].choose(rng).expect("non-empty");
        let repeats = rng.gen_range(1..=4);
        let out = divisible(f64::from(c) * alpha);
        for r in 0..repeats {
            let st = if r == 0 { stride } else { 1 };
            inverted_residual(&mut b, &format!("s{}.b{r}", s + 1), expand, k, st, out, act);
        }
    }
    mobile_head(&mut b, 1280, act);
    b.finish()
}
