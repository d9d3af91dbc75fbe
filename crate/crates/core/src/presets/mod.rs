//! Built-in architectures and reference design-space samplers.
//!
//! The searched architectures list per-stage edge kernels, output widths,
//! LA/NB/SK flags but no expansion factor. The EF values below are the
//! smallest integers that reproduce the published parameter and MAC totals
//! together with the stated widths (the stage-4 EF of the N1 family, for
//! instance, is pinned by the parameter difference between N1 and N1-S3).

mod reference;
mod spaces;

pub use reference::{Bottleneck, ReferenceNet, ResNetBlock};
pub use spaces::{space_sampler, SampledNet, Space};

use thiserror::Error;

use crate::arch::{ArchError, ArchSpec, EdgeOp, ImageShape, StageSpec};
use crate::network::{lower_arch, HeadSpec, Network};

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("unknown preset '{name}'; available: {}", CATALOG.join(", "))]
    Unknown { name: String },
    #[error(transparent)]
    Arch(#[from] ArchError),
}

pub const CATALOG: &[&str] = &[
    "isynet-n0",
    "isynet-n1",
    "isynet-n1-s1",
    "isynet-n1-s2",
    "isynet-n1-s3",
    "isynet-n2",
    "isynet-n3",
    "resnet-18",
    "resnet-34",
    "resnet-50",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preset {
    Arch(ArchSpec),
    Reference(ReferenceNet),
}

impl Preset {
    pub fn as_arch(&self) -> Option<&ArchSpec> {
        match self {
            Preset::Arch(a) => Some(a),
            Preset::Reference(_) => None,
        }
    }

    /// Search-space architectures get `head`; reference networks keep their
    /// own pooling + FC classifier with `head.num_classes` outputs.
    pub fn network(&self, input: ImageShape, head: &HeadSpec) -> Result<Network, ArchError> {
        match self {
            Preset::Arch(a) => lower_arch(a, input, head),
            Preset::Reference(r) => Ok(r.network(input, head.num_classes)),
        }
    }
}

pub fn builtin(name: &str) -> Result<Preset, PresetError> {
    let key = name.to_ascii_lowercase();
    if let Some(spec) = isynet(&key) {
        return Ok(Preset::Arch(spec));
    }
    ReferenceNet::by_name(&key).map(Preset::Reference).ok_or(PresetError::Unknown { name: name.to_string() })
}

fn st(la: u8, nb: u32, ef: u32, sk: u8, ci: u32, edges: [u8; 4]) -> StageSpec {
    StageSpec {
        la: la == 1,
        nb,
        ef,
        sk: sk == 1,
        ci,
        edges: edges.map(|c| EdgeOp::from_code(c).expect("preset edge code")),
    }
}

fn n1_family(depths: [u32; 5]) -> ArchSpec {
    let mut spec = ArchSpec::new(vec![
        st(1, 1, 1, 1, 0, [3, 7, 7, 7]),
        st(1, 1, 3, 1, 0, [5, 0, 1, 2]),
        st(1, 4, 1, 1, 1, [1, 1, 1, 7]),
        st(1, 6, 2, 1, 0, [1, 0, 1, 7]),
        st(1, 1, 1, 1, 0, [0, 0, 0, 7]),
    ]);
    for (stage, nb) in spec.stages.iter_mut().zip(depths) {
        stage.nb = nb;
    }
    spec
}

/// The searched architectures by catalog name.
pub fn isynet(name: &str) -> Option<ArchSpec> {
    let spec = match name {
        "isynet-n0" => ArchSpec::new(vec![
            st(1, 1, 1, 0, 0, [2, 7, 7, 7]),
            st(1, 2, 4, 1, 0, [1, 1, 7, 7]),
            st(1, 4, 1, 1, 0, [1, 1, 0, 0]),
            st(0, 2, 2, 1, 0, [0, 1, 7, 7]),
            st(1, 6, 1, 1, 0, [1, 1, 0, 7]),
        ]),
        "isynet-n1" => n1_family([1, 1, 4, 6, 1]),
        "isynet-n1-s1" => n1_family([1, 1, 4, 6, 3]),
        "isynet-n1-s2" => n1_family([1, 1, 5, 6, 6]),
        "isynet-n1-s3" => n1_family([1, 1, 6, 8, 7]),
        "isynet-n2" => ArchSpec::new(vec![
            st(1, 1, 1, 1, 0, [1, 3, 3, 7]),
            st(0, 3, 2, 1, 0, [2, 1, 1, 7]),
            st(1, 4, 3, 1, 0, [1, 1, 1, 7]),
            st(0, 17, 3, 1, 0, [1, 0, 7, 7]),
            st(1, 2, 3, 1, 1, [0, 0, 0, 7]),
        ]),
        "isynet-n3" => ArchSpec::new(vec![
            st(1, 1, 2, 0, 1, [2, 3, 7, 7]),
            st(0, 5, 1, 1, 1, [1, 1, 7, 7]),
            st(1, 3, 2, 1, 1, [1, 4, 1, 1]),
            st(0, 13, 1, 1, 1, [4, 0, 7, 7]),
            st(1, 1, 2, 1, 2, [0, 0, 0, 7]),
        ]),
        _ => return None,
    };
    Some(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{decode, encode, validate};

    #[test]
    fn catalog_resolves() {
        for name in CATALOG {
            builtin(name).unwrap();
        }
        let err = builtin("isynet-n9").unwrap_err().to_string();
        assert!(err.contains("isynet-n9") && err.contains("resnet-50"));
    }

    #[test]
    fn depths_match_table() {
        let d = |n: &str| isynet(n).unwrap().depths();
        assert_eq!(d("isynet-n0"), vec![1, 2, 4, 2, 6]);
        assert_eq!(d("isynet-n1"), vec![1, 1, 4, 6, 1]);
        assert_eq!(d("isynet-n1-s1"), vec![1, 1, 4, 6, 3]);
        assert_eq!(d("isynet-n2")[3], 17);
        assert_eq!(d("isynet-n3"), vec![1, 5, 3, 13, 1]);
    }

    #[test]
    fn presets_are_in_space_and_roundtrip() {
        for name in CATALOG.iter().filter(|n| n.starts_with("isynet")) {
            let spec = isynet(name).unwrap();
            assert!(validate(&spec).is_valid(), "{name}");
            assert_eq!(decode(&encode(&spec).unwrap()).unwrap(), spec, "{name}");
        }
    }

    #[test]
    fn scaled_family_is_monotone() {
        let fam: Vec<_> = ["isynet-n1", "isynet-n1-s1", "isynet-n1-s2", "isynet-n1-s3"]
            .iter()
            .map(|n| isynet(n).unwrap().depths())
            .collect();
        for pair in fam.windows(2) {
            assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn output_widths_match_table() {
        let widths = |n: &str| {
            let spec = isynet(n).unwrap();
            spec.stages.iter().enumerate().map(|(i, s)| s.out_channels(i + 1)).collect::<Vec<_>>()
        };
        assert_eq!(widths("isynet-n0"), vec![16, 32, 64, 128, 256]);
        assert_eq!(widths("isynet-n1"), vec![16, 32, 128, 128, 256]);
        assert_eq!(widths("isynet-n2"), vec![16, 32, 64, 128, 512]);
        assert_eq!(widths("isynet-n3"), vec![32, 64, 128, 256, 1024]);
    }
}
