//! Full and proxy U-Net specifications and their parameter counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channels of the first proxy encoder level.
pub const PROXY_BASE_CHANNELS: usize = 4;
/// Residual blocks per level in a proxy network.
pub const PROXY_RES_BLOCKS: usize = 1;
/// Deepest network accepted; keeps channel counts far from overflow.
pub const MAX_LEVELS: usize = 12;

/// Capacity description of a residual U-Net. Level `l` carries
/// `base_channels * 2^l` channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UNetSpec {
    pub levels: usize,
    pub base_channels: usize,
    pub res_blocks: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl Default for UNetSpec {
    fn default() -> Self {
        full_spec()
    }
}

impl UNetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.levels > MAX_LEVELS {
            return Err(Error::InvalidInput(format!(
                "levels must be in 1..={MAX_LEVELS}, got {}",
                self.levels
            )));
        }
        if self.base_channels == 0 || self.base_channels > 1 << 16 {
            return Err(Error::InvalidInput(format!(
                "base_channels must be in 1..=65536, got {}",
                self.base_channels
            )));
        }
        if self.res_blocks == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidInput(format!(
                "res_blocks, in_channels and out_channels must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Channel count at each level, shallowest first.
    pub fn channels(&self) -> Vec<u64> {
        (0..self.levels)
            .map(|l| (self.base_channels as u64) << l)
            .collect()
    }
}

/// The full model: five levels, two residual blocks, 16 base channels.
pub fn full_spec() -> UNetSpec {
    UNetSpec {
        levels: 5,
        base_channels: 16,
        res_blocks: 2,
        in_channels: 1,
        out_channels: 2,
    }
}

/// Proxy variants of `full`: 4 base channels, one residual block, and
/// `L`, `L - 1`, `L - 2` levels in that order.
pub fn proxy_schedule(full: &UNetSpec) -> Result<Vec<UNetSpec>> {
    if full.levels < 3 {
        return Err(Error::Schedule(format!(
            "full network needs at least 3 levels, has {}",
            full.levels
        )));
    }
    Ok((0..3)
        .map(|drop| UNetSpec {
            levels: full.levels - drop,
            base_channels: PROXY_BASE_CHANNELS,
            res_blocks: PROXY_RES_BLOCKS,
            ..*full
        })
        .collect())
}

fn conv(kernel_volume: u64, c_in: u64, c_out: u64) -> u64 {
    kernel_volume * c_in * c_out + c_out
}

/// Convolution weights and biases of the canonical residual U-Net.
///
/// Stem 3x3x3 (in -> c0); per encoder level `res_blocks` residual blocks of
/// two 3x3x3 convolutions; a strided 3x3x3 downsampling convolution between
/// consecutive levels; per decoder level a 2x2x2 transposed convolution from
/// the level below, a 3x3x3 fusion convolution over the concatenated skip
/// (2c -> c) and `res_blocks` residual blocks; a 1x1x1 head (c0 -> out).
/// Normalization and activation parameters are not counted.
pub fn param_count(spec: &UNetSpec) -> u64 {
    let c = spec.channels();
    let blocks = spec.res_blocks as u64;
    let res_block = |ch: u64| 2 * conv(27, ch, ch);

    let mut total = conv(27, spec.in_channels as u64, c[0]);
    for l in 0..c.len() {
        total += blocks * res_block(c[l]);
        if l + 1 < c.len() {
            total += conv(27, c[l], c[l + 1]);
            total += conv(8, c[l + 1], c[l]);
            total += conv(27, 2 * c[l], c[l]);
            total += blocks * res_block(c[l]);
        }
    }
    total + conv(1, c[0], spec.out_channels as u64)
}

/// `param_count(spec) / param_count(reference)`.
pub fn capacity_ratio(spec: &UNetSpec, reference: &UNetSpec) -> f64 {
    param_count(spec) as f64 / param_count(reference) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_defaults() {
        let f = full_spec();
        assert_eq!((f.levels, f.res_blocks, f.base_channels), (5, 2, 16));
    }

    #[test]
    fn schedule_from_full() {
        let s = proxy_schedule(&full_spec()).unwrap();
        let triples: Vec<_> = s
            .iter()
            .map(|u| (u.levels, u.base_channels, u.res_blocks))
            .collect();
        assert_eq!(triples, vec![(5, 4, 1), (4, 4, 1), (3, 4, 1)]);
        assert!(s.iter().all(|u| u.in_channels == 1 && u.out_channels == 2));
    }

    #[test]
    fn shallow_full_rejected() {
        let shallow = UNetSpec {
            levels: 2,
            ..full_spec()
        };
        assert!(matches!(proxy_schedule(&shallow), Err(Error::Schedule(_))));
    }

    #[test]
    fn smallest_network_by_hand() {
        let spec = UNetSpec {
            levels: 1,
            base_channels: 1,
            res_blocks: 1,
            in_channels: 1,
            out_channels: 1,
        };
        assert_eq!(param_count(&spec), 86);
    }

    #[test]
    fn proxies_shrink() {
        let full = full_spec();
        let counts: Vec<u64> = proxy_schedule(&full)
            .unwrap()
            .iter()
            .map(param_count)
            .collect();
        assert!(counts.windows(2).all(|w| w[0] > w[1]));
        assert!(counts[0] < param_count(&full));
    }

    #[test]
    fn wire_json_shape() {
        let json = serde_json::to_string(&full_spec()).unwrap();
        assert_eq!(
            json,
            r#"{"levels":5,"base_channels":16,"res_blocks":2,"in_channels":1,"out_channels":2}"#
        );
    }
}
