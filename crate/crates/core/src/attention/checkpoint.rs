//! Parameter files: one JSON header line, then the parameters as
//! little-endian `f64` in [`Params::tensors`] order.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::params::{BlockDims, BlockParams, Params};
use super::MaskMode;
use crate::error::{Error, Location, Result};

pub const CHECKPOINT_FORMAT: &str = "synattn-block";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub dims: BlockDims,
    pub seed: Option<u64>,
    pub mode: MaskMode,
    pub count: usize,
}

pub fn write_checkpoint(mut out: impl Write, params: &BlockParams, seed: Option<u64>, mode: MaskMode) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: 1,
        dims: params.dims(),
        seed,
        mode,
        count: params.num_params(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for x in params.flatten() {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint(input: impl Read) -> Result<(CheckpointHeader, BlockParams)> {
    let mut reader = std::io::BufReader::new(input);
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::format(
            Location::Byte(line.len()),
            "checkpoint header is not newline-terminated",
        ));
    }
    let header: CheckpointHeader = serde_json::from_slice(&line[..line.len() - 1])?;
    if header.format != CHECKPOINT_FORMAT || header.version != 1 {
        return Err(Error::format(
            Location::Byte(0),
            format!("unsupported checkpoint {} v{}", header.format, header.version),
        ));
    }
    header.dims.check()?;
    let mut params = BlockParams::zeros(header.dims);
    if params.num_params() != header.count {
        return Err(Error::format(
            Location::Byte(0),
            format!(
                "header count {} does not match dims ({})",
                header.count,
                params.num_params()
            ),
        ));
    }
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != header.count * 8 {
        return Err(Error::format(
            Location::Byte(line.len() + payload.len()),
            format!("expected {} payload bytes, found {}", header.count * 8, payload.len()),
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("checkpoint parameters".into()));
    }
    params.load_flat(&values)?;
    Ok((header, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dims = BlockDims {
            d_model: 4,
            heads: 2,
            d_head: 2,
            d_ff: 6,
        };
        let p = BlockParams::init(dims, 9).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &p, Some(9), MaskMode::Multiplicative).unwrap();
        let (h, q) = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(q, p);
        assert_eq!(h.seed, Some(9));
        assert_eq!(h.mode, MaskMode::Multiplicative);
        let newline = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(buf.len() - newline - 1, 8 * p.num_params());

        buf.pop();
        assert!(matches!(read_checkpoint(&buf[..]), Err(Error::Format { .. })));
    }
}
