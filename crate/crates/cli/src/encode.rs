use std::path::Path;

use anyhow::{bail, Context, Result};
use string_pe::config::EncoderConfig;
use string_pe::{encode_batch, PositionEncoder, PositionedTokenBatch};

use crate::csvio::{read_rows, write_rows};

pub fn load_config(path: &Path) -> Result<EncoderConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    EncoderConfig::from_json(&text).with_context(|| format!("{}: invalid encoder config", path.display()))
}

/// Encodes `tokens[i]` at `positions[i]` for every row.
pub fn encode_rows(config: &EncoderConfig, positions: Vec<Vec<f64>>, tokens: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    if positions.len() != tokens.len() {
        bail!(
            "row count mismatch: {} position rows, {} token rows",
            positions.len(),
            tokens.len()
        );
    }
    let enc = config.build().context("cannot build encoder")?;
    for (what, rows, want) in [
        ("position", &positions, enc.position_dim()),
        ("token", &tokens, enc.token_dim()),
    ] {
        if let Some(row) = rows.first() {
            if row.len() != want {
                bail!("{what} rows have {} columns, config expects {want}", row.len());
            }
        }
    }
    let batch = PositionedTokenBatch::new(tokens, positions)?;
    let (encoded, _) = encode_batch(&enc, &batch)?.into_parts();
    Ok(encoded)
}

pub fn cmd_encode(config: &Path, positions: &Path, tokens: &Path, output: &Path) -> Result<usize> {
    let config = load_config(config)?;
    let encoded = encode_rows(&config, read_rows(positions)?, read_rows(tokens)?)?;
    write_rows(output, &encoded)?;
    Ok(encoded.len())
}
