//! Block-structured search space: stages of identical blocks, each block a
//! chain of four edges.
//!
//! A stage `s` (1-based) has `nb` blocks whose output width is
//! `2^(3 + s + ci)`. Every edge but the last non-identity one is widened by
//! `ef`. The first block of a stage downsamples by 2 in its first
//! non-identity edge and never carries a skip connection.

use std::fmt;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_STAGES: usize = 6;
pub const MAX_BLOCKS: u32 = 20;
pub const MAX_CHANNEL_INCREMENT: u32 = 2;
pub const EDGES_PER_BLOCK: usize = 4;
/// Integers per stage group: LA, NB, EF, SK, CI and four edge codes.
pub const GROUP_LEN: usize = 5 + EDGES_PER_BLOCK;
pub const ENCODING_LEN: usize = 1 + MAX_STAGES * GROUP_LEN;
/// Channel widths are kept divisible by the 16x16 matrix tile.
pub const CHANNEL_ALIGN: u32 = 16;

#[derive(Debug, Error)]
pub enum ArchError {
    #[error("architecture is outside the search space: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("input {height}x{width} is too small for {stages} stride-2 stages")]
    SpatialUnderflow { height: u32, width: u32, stages: usize },
    #[error("malformed architecture JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// One edge of a block. The numeric code is the value stored in the
/// encoding vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
#[repr(u8)]
pub enum EdgeOp {
    Conv1x1 = 0,
    Conv3x3 = 1,
    Conv5x5 = 2,
    Conv7x7 = 3,
    /// conv1x3 followed by conv3x1
    Pair3 = 4,
    /// conv1x5 followed by conv5x1
    Pair5 = 5,
    /// conv1x7 followed by conv7x1
    Pair7 = 6,
    Identity = 7,
}

impl EdgeOp {
    pub const ALL: [EdgeOp; 8] = [
        EdgeOp::Conv1x1,
        EdgeOp::Conv3x3,
        EdgeOp::Conv5x5,
        EdgeOp::Conv7x7,
        EdgeOp::Pair3,
        EdgeOp::Pair5,
        EdgeOp::Pair7,
        EdgeOp::Identity,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<EdgeOp> {
        EdgeOp::ALL.get(code as usize).copied()
    }

    pub fn is_identity(self) -> bool {
        self == EdgeOp::Identity
    }

    /// Kernel extent; 0 for identity.
    pub fn kernel(self) -> u32 {
        match self {
            EdgeOp::Conv1x1 => 1,
            EdgeOp::Conv3x3 | EdgeOp::Pair3 => 3,
            EdgeOp::Conv5x5 | EdgeOp::Pair5 => 5,
            EdgeOp::Conv7x7 | EdgeOp::Pair7 => 7,
            EdgeOp::Identity => 0,
        }
    }

    pub fn is_pair(self) -> bool {
        matches!(self, EdgeOp::Pair3 | EdgeOp::Pair5 | EdgeOp::Pair7)
    }

    pub fn name(self) -> &'static str {
        match self {
            EdgeOp::Conv1x1 => "conv1x1",
            EdgeOp::Conv3x3 => "conv3x3",
            EdgeOp::Conv5x5 => "conv5x5",
            EdgeOp::Conv7x7 => "conv7x7",
            EdgeOp::Pair3 => "conv1x3+conv3x1",
            EdgeOp::Pair5 => "conv1x5+conv5x1",
            EdgeOp::Pair7 => "conv1x7+conv7x1",
            EdgeOp::Identity => "identity",
        }
    }
}

impl From<EdgeOp> for u8 {
    fn from(op: EdgeOp) -> u8 {
        op.code()
    }
}

impl TryFrom<u8> for EdgeOp {
    type Error = String;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        EdgeOp::from_code(code).ok_or_else(|| format!("edge code {code} is outside 0..=7"))
    }
}

impl fmt::Display for EdgeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// 0/1 integers on the wire, `bool` in memory.
mod flag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(D::Error::custom(format!("flag must be 0 or 1, got {v}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageSpec {
    /// Activation after the last non-identity edge.
    #[serde(with = "flag")]
    pub la: bool,
    pub nb: u32,
    pub ef: u32,
    #[serde(with = "flag")]
    pub sk: bool,
    pub ci: u32,
    pub edges: [EdgeOp; EDGES_PER_BLOCK],
}

impl StageSpec {
    /// Output width of every block in stage `stage` (1-based).
    pub fn out_channels(&self, stage: usize) -> u32 {
        1u32 << (3 + stage as u32 + self.ci)
    }

    pub fn last_active_edge(&self) -> Option<usize> {
        self.edges.iter().rposition(|e| !e.is_identity())
    }

    pub fn first_active_edge(&self) -> Option<usize> {
        self.edges.iter().position(|e| !e.is_identity())
    }

    /// Output width of edge `edge`: intermediate edges are multiplied by `ef`.
    pub fn edge_width(&self, stage: usize, edge: usize) -> u32 {
        let out = self.out_channels(stage);
        if Some(edge) == self.last_active_edge() {
            out
        } else {
            out * self.ef
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchSpec {
    pub stages: Vec<StageSpec>,
}

impl ArchSpec {
    pub fn new(stages: Vec<StageSpec>) -> Self {
        ArchSpec { stages }
    }

    pub fn depths(&self) -> Vec<u32> {
        self.stages.iter().map(|s| s.nb).collect()
    }

    pub fn total_blocks(&self) -> u32 {
        self.stages.iter().map(|s| s.nb).sum()
    }

    pub fn from_json(text: &str) -> Result<ArchSpec, ArchError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ArchSpec serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    StageCount { found: usize },
    BlockCount { stage: usize, found: u32 },
    ChannelIncrement { stage: usize, found: u32 },
    ExpansionFactor { stage: usize, found: u32 },
    ChannelAlignment { stage: usize, channels: u32 },
    AllIdentity { stage: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::StageCount { found } => {
                write!(f, "stage count {found} outside 1..={MAX_STAGES}")
            }
            Violation::BlockCount { stage, found } => {
                write!(f, "stage {stage}: block count {found} outside 1..={MAX_BLOCKS}")
            }
            Violation::ChannelIncrement { stage, found } => write!(
                f,
                "stage {stage}: channel increment {found} outside 0..={MAX_CHANNEL_INCREMENT}"
            ),
            Violation::ExpansionFactor { stage, found } => {
                write!(f, "stage {stage}: expansion factor {found} must be at least 1")
            }
            Violation::ChannelAlignment { stage, channels } => write!(
                f,
                "stage {stage}: width {channels} is not a multiple of {CHANNEL_ALIGN}"
            ),
            Violation::AllIdentity { stage } => {
                write!(f, "stage {stage}: block has only identity edges")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Lists every rule the architecture breaks. An empty report means the
/// architecture is inside the search space.
pub fn validate(spec: &ArchSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let ns = spec.stages.len();
    if !(1..=MAX_STAGES).contains(&ns) {
        violations.push(Violation::StageCount { found: ns });
    }
    for (i, st) in spec.stages.iter().enumerate() {
        let stage = i + 1;
        if !(1..=MAX_BLOCKS).contains(&st.nb) {
            violations.push(Violation::BlockCount { stage, found: st.nb });
        }
        let ci_ok = st.ci <= MAX_CHANNEL_INCREMENT;
        if !ci_ok {
            violations.push(Violation::ChannelIncrement { stage, found: st.ci });
        }
        if st.ef == 0 {
            violations.push(Violation::ExpansionFactor { stage, found: st.ef });
        }
        // Widths are only meaningful for in-range increments; 2^(3+s+ci)
        // would overflow long before it misaligns otherwise.
        if ci_ok && stage <= MAX_STAGES {
            for e in 0..EDGES_PER_BLOCK {
                if st.edges[e].is_identity() {
                    continue;
                }
                let w = st.edge_width(stage, e);
                if w % CHANNEL_ALIGN != 0 {
                    violations.push(Violation::ChannelAlignment { stage, channels: w });
                    break;
                }
            }
        }
        if st.last_active_edge().is_none() {
            violations.push(Violation::AllIdentity { stage });
        }
    }
    ValidationReport { violations }
}

/// Fixed-length integer encoding: `[NS, V_1, .., V_6]` with
/// `V_s = (LA, NB, EF, SK, CI, E0, E1, E2, E3)`; groups past NS are zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EncodingVector {
    values: [i64; ENCODING_LEN],
}

impl EncodingVector {
    pub fn from_slice(values: &[i64]) -> Result<EncodingVector, DecodeError> {
        let values: [i64; ENCODING_LEN] = values.try_into().map_err(|_| DecodeError {
            field: "length".into(),
            value: values.len() as i64,
            reason: format!("expected {ENCODING_LEN} integers"),
        })?;
        Ok(EncodingVector { values })
    }

    pub fn values(&self) -> &[i64; ENCODING_LEN] {
        &self.values
    }

    pub fn num_stages(&self) -> i64 {
        self.values[0]
    }

    /// The 9 integers of stage `stage` (0-based), padding included.
    pub fn group(&self, stage: usize) -> &[i64] {
        let start = 1 + stage * GROUP_LEN;
        &self.values[start..start + GROUP_LEN]
    }

    pub fn to_csv_row(&self) -> String {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        parts.join(",")
    }

    pub fn parse_csv_row(line: &str) -> Result<EncodingVector, DecodeError> {
        let mut values = Vec::with_capacity(ENCODING_LEN);
        for (i, tok) in line.trim().split(',').enumerate() {
            let tok = tok.trim();
            let v = tok.parse::<i64>().map_err(|_| DecodeError {
                field: format!("column {i}"),
                value: 0,
                reason: format!("'{tok}' is not an integer"),
            })?;
            values.push(v);
        }
        EncodingVector::from_slice(&values)
    }
}

impl Serialize for EncodingVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.values.iter())
    }
}

impl<'de> Deserialize<'de> for EncodingVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let values = Vec::<i64>::deserialize(d)?;
        EncodingVector::from_slice(&values).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("cannot decode {field} = {value}: {reason}")]
pub struct DecodeError {
    pub field: String,
    pub value: i64,
    pub reason: String,
}

pub fn encode(spec: &ArchSpec) -> Result<EncodingVector, ArchError> {
    let report = validate(spec);
    if !report.is_valid() {
        return Err(ArchError::Invalid(report));
    }
    let mut values = [0i64; ENCODING_LEN];
    values[0] = spec.stages.len() as i64;
    for (i, st) in spec.stages.iter().enumerate() {
        let g = &mut values[1 + i * GROUP_LEN..1 + (i + 1) * GROUP_LEN];
        g[0] = i64::from(st.la);
        g[1] = i64::from(st.nb);
        g[2] = i64::from(st.ef);
        g[3] = i64::from(st.sk);
        g[4] = i64::from(st.ci);
        for (slot, op) in g[5..].iter_mut().zip(st.edges) {
            *slot = i64::from(op.code());
        }
    }
    Ok(EncodingVector { values })
}

/// Inverse of [`encode`]. Groups beyond NS are ignored, so zero padding is
/// never read as conv1x1 stages.
pub fn decode(vec: &EncodingVector) -> Result<ArchSpec, ArchError> {
    let ns = vec.num_stages();
    if !(1..=MAX_STAGES as i64).contains(&ns) {
        return Err(DecodeError {
            field: "NS".into(),
            value: ns,
            reason: format!("stage count must be in 1..={MAX_STAGES}"),
        }
        .into());
    }
    let mut stages = Vec::with_capacity(ns as usize);
    for s in 0..ns as usize {
        let g = vec.group(s);
        let name = |f: &str| format!("stage {} {f}", s + 1);
        let flag = |f: &str, v: i64| -> Result<bool, DecodeError> {
            match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(DecodeError { field: name(f), value: v, reason: "flag must be 0 or 1".into() }),
            }
        };
        let ranged = |f: &str, v: i64, lo: i64, hi: i64| -> Result<u32, DecodeError> {
            if (lo..=hi).contains(&v) {
                Ok(v as u32)
            } else {
                Err(DecodeError { field: name(f), value: v, reason: format!("must be in {lo}..={hi}") })
            }
        };
        let la = flag("LA", g[0])?;
        let nb = ranged("NB", g[1], 1, i64::from(MAX_BLOCKS))?;
        let ef = ranged("EF", g[2], 1, i64::from(u32::MAX >> 12))?;
        let sk = flag("SK", g[3])?;
        let ci = ranged("CI", g[4], 0, i64::from(MAX_CHANNEL_INCREMENT))?;
        let mut edges = [EdgeOp::Identity; EDGES_PER_BLOCK];
        for (e, slot) in edges.iter_mut().enumerate() {
            let code = ranged(&format!("E{e}"), g[5 + e], 0, 7)?;
            *slot = EdgeOp::from_code(code as u8).expect("range checked");
        }
        stages.push(StageSpec { la, nb, ef, sk, ci, edges });
    }
    let spec = ArchSpec { stages };
    let report = validate(&spec);
    if !report.is_valid() {
        return Err(ArchError::Invalid(report));
    }
    Ok(spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageShape {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
}

impl ImageShape {
    pub const fn new(height: u32, width: u32, channels: u32) -> Self {
        ImageShape { height, width, channels }
    }

    /// The usual 224x224 RGB classification input.
    pub const fn imagenet() -> Self {
        ImageShape::new(224, 224, 3)
    }

    pub fn elements(&self) -> u64 {
        u64::from(self.height) * u64::from(self.width) * u64::from(self.channels)
    }

    /// Spatial extent after a same-padded stride: `ceil(x / stride)`.
    pub fn strided(&self, stride_h: u32, stride_w: u32, channels: u32) -> ImageShape {
        ImageShape {
            height: self.height.div_ceil(stride_h),
            width: self.width.div_ceil(stride_w),
            channels,
        }
    }
}

impl fmt::Display for ImageShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeShape {
    pub stage: usize,
    pub block: u32,
    pub edge: usize,
    pub op: EdgeOp,
    pub input: ImageShape,
    pub output: ImageShape,
    pub stride: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShapeTable {
    pub batch: u32,
    pub input: ImageShape,
    pub edges: Vec<EdgeShape>,
}

impl ShapeTable {
    /// Feature map leaving the last block.
    pub fn output(&self) -> ImageShape {
        self.edges.last().map(|e| e.output).unwrap_or(self.input)
    }

    pub fn stage_output(&self, stage: usize) -> Option<ImageShape> {
        self.edges.iter().rev().find(|e| e.stage == stage).map(|e| e.output)
    }
}

/// Propagates tensor shapes through every non-identity edge.
pub fn infer_shapes(spec: &ArchSpec, input: ImageShape, batch: u32) -> Result<ShapeTable, ArchError> {
    let report = validate(spec);
    if !report.is_valid() {
        return Err(ArchError::Invalid(report));
    }
    let ns = spec.stages.len();
    let min = 1u32 << ns;
    if input.height < min || input.width < min {
        return Err(ArchError::SpatialUnderflow { height: input.height, width: input.width, stages: ns });
    }
    let mut edges = Vec::new();
    let mut cur = input;
    for (i, st) in spec.stages.iter().enumerate() {
        let stage = i + 1;
        let first = st.first_active_edge().expect("validated");
        for block in 0..st.nb {
            for (e, &op) in st.edges.iter().enumerate() {
                if op.is_identity() {
                    continue;
                }
                let stride = if block == 0 && e == first { 2 } else { 1 };
                let out = cur.strided(stride, stride, st.edge_width(stage, e));
                edges.push(EdgeShape { stage, block, edge: e, op, input: cur, output: out, stride });
                cur = out;
            }
        }
    }
    Ok(ShapeTable { batch, input, edges })
}

/// Per-field sampling ranges, all inside the search-space bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceConstraints {
    pub stages: RangeInclusive<u32>,
    pub blocks: RangeInclusive<u32>,
    pub expansion: RangeInclusive<u32>,
    pub channel_increment: RangeInclusive<u32>,
}

impl Default for SpaceConstraints {
    fn default() -> Self {
        SpaceConstraints {
            stages: 1..=MAX_STAGES as u32,
            blocks: 1..=MAX_BLOCKS,
            expansion: 1..=4,
            channel_increment: 0..=MAX_CHANNEL_INCREMENT,
        }
    }
}

impl SpaceConstraints {
    pub fn check(&self) -> Result<(), String> {
        let within = |r: &RangeInclusive<u32>, lo: u32, hi: u32| r.start() <= r.end() && *r.start() >= lo && *r.end() <= hi;
        if !within(&self.stages, 1, MAX_STAGES as u32) {
            return Err(format!("stage range {:?} outside 1..={MAX_STAGES}", self.stages));
        }
        if !within(&self.blocks, 1, MAX_BLOCKS) {
            return Err(format!("block range {:?} outside 1..={MAX_BLOCKS}", self.blocks));
        }
        if !within(&self.expansion, 1, 64) {
            return Err(format!("expansion range {:?} outside 1..=64", self.expansion));
        }
        if !within(&self.channel_increment, 0, MAX_CHANNEL_INCREMENT) {
            return Err(format!(
                "channel increment range {:?} outside 0..={MAX_CHANNEL_INCREMENT}",
                self.channel_increment
            ));
        }
        Ok(())
    }
}

fn sample_edges<R: Rng + ?Sized>(rng: &mut R) -> [EdgeOp; EDGES_PER_BLOCK] {
    loop {
        let edges: [EdgeOp; EDGES_PER_BLOCK] =
            std::array::from_fn(|_| EdgeOp::ALL[rng.gen_range(0..EdgeOp::ALL.len())]);
        if edges.iter().any(|e| !e.is_identity()) {
            return edges;
        }
    }
}

/// Uniform draw of every field. Panics if `constraints` fails
/// [`SpaceConstraints::check`].
pub fn sample_random<R: Rng + ?Sized>(rng: &mut R, constraints: &SpaceConstraints) -> ArchSpec {
    if let Err(msg) = constraints.check() {
        panic!("invalid space constraints: {msg}");
    }
    let ns = rng.gen_range(constraints.stages.clone()) as usize;
    let stages = (0..ns)
        .map(|_| StageSpec {
            la: rng.gen_bool(0.5),
            nb: rng.gen_range(constraints.blocks.clone()),
            ef: rng.gen_range(constraints.expansion.clone()),
            sk: rng.gen_bool(0.5),
            ci: rng.gen_range(constraints.channel_increment.clone()),
            edges: sample_edges(rng),
        })
        .collect();
    ArchSpec { stages }
}

pub fn mutate<R: Rng + ?Sized>(spec: &ArchSpec, rng: &mut R) -> ArchSpec {
    mutate_within(spec, &SpaceConstraints::default(), rng)
}

/// Changes exactly one encoded field. LA/SK toggles are always legal, so
/// the redraw loop terminates.
pub fn mutate_within<R: Rng + ?Sized>(spec: &ArchSpec, constraints: &SpaceConstraints, rng: &mut R) -> ArchSpec {
    assert!(!spec.stages.is_empty(), "cannot mutate an empty architecture");
    loop {
        let mut out = spec.clone();
        let s = rng.gen_range(0..out.stages.len());
        let st = &mut out.stages[s];
        let changed = match rng.gen_range(0..6) {
            0 => {
                let e = rng.gen_range(0..EDGES_PER_BLOCK);
                let old = st.edges[e];
                let new = EdgeOp::ALL[rng.gen_range(0..EdgeOp::ALL.len())];
                st.edges[e] = new;
                new != old && st.last_active_edge().is_some()
            }
            1 => step(&mut st.nb, rng.gen_bool(0.5), &constraints.blocks),
            2 => {
                st.la = !st.la;
                true
            }
            3 => {
                st.sk = !st.sk;
                true
            }
            4 => step(&mut st.ci, rng.gen_bool(0.5), &constraints.channel_increment),
            _ => step(&mut st.ef, rng.gen_bool(0.5), &constraints.expansion),
        };
        if changed {
            return out;
        }
    }
}

/// Moves `value` one unit up or down, staying inside `range` (values that
/// already sit outside it may only move toward it).
fn step(value: &mut u32, up: bool, range: &RangeInclusive<u32>) -> bool {
    let next = if up { value.checked_add(1) } else { value.checked_sub(1) };
    match next {
        Some(n) if range.contains(&n) => {
            *value = n;
            true
        }
        Some(n) if (n > *range.end() && n < *value) || (n < *range.start() && n > *value) => {
            *value = n;
            true
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stage(la: bool, nb: u32, ef: u32, sk: bool, ci: u32, edges: [u8; 4]) -> StageSpec {
        StageSpec { la, nb, ef, sk, ci, edges: edges.map(|c| EdgeOp::from_code(c).unwrap()) }
    }

    fn single_conv1x1() -> ArchSpec {
        ArchSpec::new(vec![stage(true, 3, 2, true, 1, [0, 7, 7, 7])])
    }

    #[test]
    fn edge_codes_follow_table() {
        let names: Vec<_> = EdgeOp::ALL.iter().map(|e| (e.code(), e.name())).collect();
        assert_eq!(names[0], (0, "conv1x1"));
        assert_eq!(names[1], (1, "conv3x3"));
        assert_eq!(names[4], (4, "conv1x3+conv3x1"));
        assert_eq!(names[7], (7, "identity"));
        assert!(EdgeOp::from_code(8).is_none());
    }

    #[test]
    fn stage_count_violation() {
        let spec = ArchSpec::new(vec![stage(true, 1, 1, false, 0, [1, 7, 7, 7]); 7]);
        let report = validate(&spec);
        assert!(report.violations.contains(&Violation::StageCount { found: 7 }));
        let empty = validate(&ArchSpec::new(vec![]));
        assert!(empty.violations.contains(&Violation::StageCount { found: 0 }));
    }

    #[test]
    fn all_identity_violation() {
        let spec = ArchSpec::new(vec![
            stage(true, 1, 1, false, 0, [1, 7, 7, 7]),
            stage(true, 2, 1, true, 0, [7, 7, 7, 7]),
        ]);
        assert_eq!(validate(&spec).violations, vec![Violation::AllIdentity { stage: 2 }]);
    }

    #[test]
    fn every_rule_is_reported() {
        let spec = ArchSpec::new(vec![stage(true, 21, 0, false, 3, [7, 7, 7, 7]), stage(true, 0, 1, false, 0, [0, 7, 7, 7])]);
        let v = validate(&spec).violations;
        assert!(v.contains(&Violation::BlockCount { stage: 1, found: 21 }));
        assert!(v.contains(&Violation::ExpansionFactor { stage: 1, found: 0 }));
        assert!(v.contains(&Violation::ChannelIncrement { stage: 1, found: 3 }));
        assert!(v.contains(&Violation::AllIdentity { stage: 1 }));
        assert!(v.contains(&Violation::BlockCount { stage: 2, found: 0 }));
    }

    #[test]
    fn single_stage_encoding_is_padded() {
        let enc = encode(&single_conv1x1()).unwrap();
        let mut expected = vec![1, 1, 3, 2, 1, 1, 0, 7, 7, 7];
        expected.resize(ENCODING_LEN, 0);
        assert_eq!(enc.values().as_slice(), expected.as_slice());
    }

    #[test]
    fn encode_rejects_invalid() {
        let spec = ArchSpec::new(vec![stage(true, 25, 1, false, 0, [1, 7, 7, 7])]);
        match encode(&spec) {
            Err(ArchError::Invalid(r)) => assert_eq!(r.violations.len(), 1),
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn decode_ignores_padding_and_rejects_bad_codes() {
        let mut v = vec![2, 1, 2, 1, 1, 0, 1, 1, 7, 7, 0, 4, 1, 1, 1, 0, 0, 0, 7];
        v.resize(ENCODING_LEN, 0);
        let spec = decode(&EncodingVector::from_slice(&v).unwrap()).unwrap();
        assert_eq!(spec.stages.len(), 2);
        assert_eq!(spec.stages[1].edges[3], EdgeOp::Identity);

        v[8] = 8;
        let err = decode(&EncodingVector::from_slice(&v).unwrap()).unwrap_err();
        match err {
            ArchError::Decode(d) => {
                assert_eq!(d.field, "stage 1 E2");
                assert_eq!(d.value, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decode_rejects_stage_count() {
        for ns in [0, 7, -1] {
            let mut v = vec![0i64; ENCODING_LEN];
            v[0] = ns;
            let err = decode(&EncodingVector::from_slice(&v).unwrap()).unwrap_err();
            assert!(matches!(err, ArchError::Decode(DecodeError { ref field, .. }) if field == "NS"));
        }
        assert!(EncodingVector::from_slice(&[1, 2, 3]).is_err());
    }

    #[test]
    fn one_stage_halves_spatial() {
        let t = infer_shapes(&single_conv1x1(), ImageShape::new(32, 32, 3), 1).unwrap();
        let out = t.output();
        assert_eq!((out.height, out.width), (16, 16));
        assert_eq!(t.edges[0].stride, 2);
        assert!(t.edges[1..].iter().all(|e| e.stride == 1));
    }

    #[test]
    fn underflow_is_an_error() {
        let spec = ArchSpec::new(vec![stage(true, 1, 1, false, 0, [1, 7, 7, 7]); 3]);
        assert!(matches!(
            infer_shapes(&spec, ImageShape::new(4, 4, 3), 1),
            Err(ArchError::SpatialUnderflow { .. })
        ));
        assert!(infer_shapes(&spec, ImageShape::new(8, 8, 3), 1).is_ok());
    }

    #[test]
    fn intermediate_edges_are_expanded() {
        let spec = ArchSpec::new(vec![stage(true, 2, 3, true, 0, [1, 0, 7, 1])]);
        let t = infer_shapes(&spec, ImageShape::new(64, 64, 3), 1).unwrap();
        let widths: Vec<u32> = t.edges.iter().map(|e| e.output.channels).collect();
        assert_eq!(widths, vec![48, 48, 16, 48, 48, 16]);
    }

    #[test]
    fn json_keys_are_stable() {
        let json = serde_json::to_string(&single_conv1x1()).unwrap();
        assert_eq!(json, r#"{"stages":[{"la":1,"nb":3,"ef":2,"sk":1,"ci":1,"edges":[0,7,7,7]}]}"#);
        assert!(ArchSpec::from_json(r#"{"stages":[{"la":2,"nb":3,"ef":2,"sk":1,"ci":1,"edges":[0,7,7,7]}]}"#).is_err());
        assert!(ArchSpec::from_json(r#"{"stages":[{"la":1,"nb":3,"ef":2,"sk":1,"ci":1,"edges":[9,7,7,7]}]}"#).is_err());
    }

    #[test]
    fn samples_are_valid_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = SpaceConstraints::default();
        let mut seen = [false; 8];
        for _ in 0..1000 {
            let spec = sample_random(&mut rng, &c);
            assert!(validate(&spec).is_valid());
            assert!((1..=6).contains(&spec.stages.len()));
            for st in &spec.stages {
                assert!((1..=20).contains(&st.nb));
                for e in st.edges {
                    seen[e.code() as usize] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = SpaceConstraints::default();
        let a = sample_random(&mut ChaCha8Rng::seed_from_u64(9), &c);
        let b = sample_random(&mut ChaCha8Rng::seed_from_u64(9), &c);
        assert_eq!(a, b);
    }

    #[test]
    fn mutation_respects_block_bound() {
        let spec = ArchSpec::new(vec![stage(true, 20, 1, true, 0, [1, 1, 7, 7])]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let m = mutate(&spec, &mut rng);
            assert!(m.stages[0].nb <= 20);
            assert!(validate(&m).is_valid());
        }
    }

    #[test]
    fn step_moves_toward_range() {
        let mut v = 6;
        assert!(!step(&mut v, true, &(1..=4)));
        assert!(step(&mut v, false, &(1..=4)));
        assert_eq!(v, 5);
        let mut one = 1;
        assert!(!step(&mut one, false, &(1..=4)));
    }
}
