//! Built-in look-up tables for the two convolutional-encoder families.
//!
//! Accuracy and per-cycle throughput rows come from offline measurements of
//! the encoder/classifier chains on a 43-class traffic-sign task. The image
//! size and bits-per-pixel columns are shared by both families.

use std::path::Path;

use serde::Deserialize;

use super::CompressionProfile;
use crate::error::ConfigError;

/// Names accepted by [`preset`].
pub const PRESET_NAMES: &[&str] = &["deep_ce", "short_ce", "deep_and_short"];

/// Common columns: (rho, pixels, bits per pixel, server DU per cycle).
const COMMON: [(u32, u64, f64, f64); 6] = [
    (2, 128 * 128 * 3, 1.08, 1.2e-7),
    (4, 64 * 64 * 3, 2.27, 2.17e-7),
    (8, 32 * 32 * 3, 4.72, 2.87e-7),
    (16, 16 * 16 * 3, 9.06, 3.57e-7),
    (32, 8 * 8 * 3, 8.0, 5e-7),
    (64, 4 * 4 * 3, 8.0, 6.25e-7),
];

/// Deep encoder: (accuracy %, offload DU/cycle, local DU/cycle).
const DEEP: [(f64, f64, f64); 6] = [
    (97.3, 1.44e-7, 8.35e-8),
    (96.5, 1.26e-7, 9.04e-8),
    (93.4, 1.16e-7, 8.90e-8),
    (91.8, 1.07e-7, 8.73e-8),
    (83.0, 1.35e-7, 1.06e-7),
    (67.0, 1.32e-7, 1.09e-7),
];

/// Short encoder: (accuracy %, offload DU/cycle, local DU/cycle).
const SHORT: [(f64, f64, f64); 6] = [
    (97.3, 1.44e-7, 8.35e-8),
    (95.8, 1.68e-7, 1.10e-7),
    (91.5, 1.88e-7, 1.26e-7),
    (91.3, 1.95e-7, 1.38e-7),
    (77.0, 2.25e-7, 1.55e-7),
    (50.0, 2.25e-7, 1.65e-7),
];

fn build(family: &[(f64, f64, f64); 6]) -> Vec<CompressionProfile> {
    COMMON
        .iter()
        .zip(family.iter())
        .map(
            |(&(rho, pixels, bits_per_pixel, j_server), &(acc, j_offload, j_local))| {
                CompressionProfile {
                    rho,
                    accuracy: acc / 100.0,
                    pixels,
                    bits_per_pixel,
                    j_offload,
                    j_local,
                    j_server,
                }
            },
        )
        .collect()
}

pub fn deep_ce() -> Vec<CompressionProfile> {
    build(&DEEP)
}

pub fn short_ce() -> Vec<CompressionProfile> {
    build(&SHORT)
}

/// Both families offered side by side (twelve rows, deep first).
pub fn deep_and_short() -> Vec<CompressionProfile> {
    let mut rows = deep_ce();
    rows.extend(short_ce());
    rows
}

pub fn preset(name: &str) -> Result<Vec<CompressionProfile>, ConfigError> {
    match name {
        "deep_ce" | "deep" => Ok(deep_ce()),
        "short_ce" | "short" => Ok(short_ce()),
        "deep_and_short" => Ok(deep_and_short()),
        other => Err(ConfigError::UnknownPreset {
            kind: "lut",
            name: other.to_string(),
            known: PRESET_NAMES.join(", "),
        }),
    }
}

#[derive(Debug, Deserialize)]
struct LutCsvRow {
    rho: u32,
    /// Percent.
    accuracy_pct: f64,
    pixels: u64,
    bits_per_pixel: f64,
    j_offload: f64,
    j_local: f64,
    j_server: f64,
}

/// Reads a user LUT from CSV with header
/// `rho,accuracy_pct,pixels,bits_per_pixel,j_offload,j_local,j_server`.
pub fn read_csv(path: &Path) -> Result<Vec<CompressionProfile>, ConfigError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    reader
        .deserialize::<LutCsvRow>()
        .map(|row| {
            let row = row.map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
            Ok(CompressionProfile {
                rho: row.rho,
                accuracy: row.accuracy_pct / 100.0,
                pixels: row.pixels,
                bits_per_pixel: row.bits_per_pixel,
                j_offload: row.j_offload,
                j_local: row.j_local,
                j_server: row.j_server,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn du_bits_strictly_decreasing_in_rho() {
        for lut in [deep_ce(), short_ce()] {
            for pair in lut.windows(2) {
                assert!(pair[0].rho < pair[1].rho);
                assert!(pair[0].du_bits() > pair[1].du_bits());
            }
        }
    }

    #[test]
    fn accuracy_non_increasing_within_family() {
        for lut in [deep_ce(), short_ce()] {
            for pair in lut.windows(2) {
                assert!(pair[0].accuracy >= pair[1].accuracy);
            }
        }
    }

    #[test]
    fn shipped_rows_validate() {
        for (i, p) in deep_and_short().iter().enumerate() {
            p.validate(&format!("lut[{i}]")).unwrap();
        }
    }

    #[test]
    fn unknown_preset_lists_known_names() {
        let err = preset("downsampling").unwrap_err();
        assert!(err.to_string().contains("deep_ce"));
    }
}
