use crate::arch::{EncodingVector, EDGES_PER_BLOCK, MAX_STAGES};

/// NB, EF, CI, LA, SK, then a one-hot over the 8 edge codes for each edge.
pub const STAGE_FEATURES: usize = 5 + EDGES_PER_BLOCK * 8;
/// NS followed by one block per stage slot.
pub const FEATURE_DIM: usize = 1 + MAX_STAGES * STAGE_FEATURES;

/// Features of one 9-integer stage group; all zeros for padding.
pub fn stage_features(group: &[i64], active: bool) -> [f64; STAGE_FEATURES] {
    let mut f = [0.0; STAGE_FEATURES];
    if !active {
        return f;
    }
    let (la, nb, ef, sk, ci) = (group[0], group[1], group[2], group[3], group[4]);
    f[0] = nb as f64;
    f[1] = ef as f64;
    f[2] = ci as f64;
    f[3] = la as f64;
    f[4] = sk as f64;
    for (e, &code) in group[5..5 + EDGES_PER_BLOCK].iter().enumerate() {
        if (0..8).contains(&code) {
            f[5 + e * 8 + code as usize] = 1.0;
        }
    }
    f
}

/// Fixed-width numeric view of an encoding for the regression surrogates.
pub fn encode_features(vec: &EncodingVector) -> Vec<f64> {
    let ns = vec.num_stages().clamp(0, MAX_STAGES as i64) as usize;
    let mut out = Vec::with_capacity(FEATURE_DIM);
    out.push(ns as f64);
    for s in 0..MAX_STAGES {
        out.extend_from_slice(&stage_features(vec.group(s), s < ns));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{encode, EdgeOp};
    use crate::presets::isynet;

    #[test]
    fn one_edge_change_touches_one_block() {
        let base = isynet("isynet-n0").unwrap();
        let mut other = base.clone();
        other.stages[2].edges[1] = EdgeOp::Conv5x5;
        let a = encode_features(&encode(&base).unwrap());
        let b = encode_features(&encode(&other).unwrap());
        let block = 1 + 2 * STAGE_FEATURES + 5 + 8;
        let diff: Vec<usize> = (0..FEATURE_DIM).filter(|&i| a[i] != b[i]).collect();
        assert_eq!(diff.len(), 2);
        assert!(diff.iter().all(|&i| (block..block + 8).contains(&i)));
    }

    #[test]
    fn padding_blocks_are_zero() {
        let f = encode_features(&encode(&isynet("isynet-n1").unwrap()).unwrap());
        assert_eq!(f.len(), FEATURE_DIM);
        assert!(f[1 + 5 * STAGE_FEATURES..].iter().all(|v| *v == 0.0));
        assert_eq!(f[0], 5.0);
    }
}
