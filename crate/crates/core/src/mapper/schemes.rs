use super::{Dimension, FrameDims, MapError, MappingScheme, Polarization, Quadrature};

/// Streams per subcarrier in the order (X_I, X_Q, Y_I, Y_Q).
fn component(index: usize) -> (Polarization, Quadrature) {
    match index {
        0 => (Polarization::X, Quadrature::I),
        1 => (Polarization::X, Quadrature::Q),
        2 => (Polarization::Y, Quadrature::I),
        3 => (Polarization::Y, Quadrature::Q),
        _ => unreachable!("component index {index} out of 0..4"),
    }
}

/// Conventional 2D intra-DM pairing: each block feeds one (subcarrier,
/// polarization) stream, consecutive amplitude pairs form I and Q.
#[derive(Debug, Default, Clone, Copy)]
pub struct Pairing2D;

impl MappingScheme for Pairing2D {
    fn name(&self) -> &'static str {
        "2d"
    }

    fn label(&self) -> &'static str {
        "2D intra-DM pairing"
    }

    fn check_dims(&self, dims: &FrameDims, block_len: usize) -> Result<(), MapError> {
        if (2 * dims.slots) % block_len != 0 {
            return Err(MapError::Scheme(format!(
                "2D pairing needs 2 x {} slots per stream to be a multiple of the blocklength {block_len}",
                dims.slots
            )));
        }
        Ok(())
    }

    fn place(&self, dims: &FrameDims, block_len: usize, block: usize, offset: usize) -> Dimension {
        let streams = 2 * dims.subcarriers;
        let stream = block % streams;
        let pos = (block / streams) * block_len + offset;
        Dimension {
            subcarrier: stream / 2,
            pol: if stream % 2 == 0 {
                Polarization::X
            } else {
                Polarization::Y
            },
            slot: pos / 2,
            quadrature: if pos % 2 == 0 { Quadrature::I } else { Quadrature::Q },
        }
    }
}

/// 4D super symbol: each block feeds one subcarrier, consecutive quadruples
/// form (X_I, X_Q, Y_I, Y_Q) of one slot.
#[derive(Debug, Default, Clone, Copy)]
pub struct SuperSymbol4D;

impl MappingScheme for SuperSymbol4D {
    fn name(&self) -> &'static str {
        "4d"
    }

    fn label(&self) -> &'static str {
        "4D super symbol"
    }

    fn check_dims(&self, dims: &FrameDims, block_len: usize) -> Result<(), MapError> {
        if (4 * dims.slots) % block_len != 0 {
            return Err(MapError::Scheme(format!(
                "4D super symbol needs 4 x {} slots per subcarrier to be a multiple of the blocklength {block_len}",
                dims.slots
            )));
        }
        Ok(())
    }

    fn place(&self, dims: &FrameDims, block_len: usize, block: usize, offset: usize) -> Dimension {
        let subcarrier = block % dims.subcarriers;
        let pos = (block / dims.subcarriers) * block_len + offset;
        let (pol, quadrature) = component(pos % 4);
        Dimension {
            subcarrier,
            pol,
            slot: pos / 4,
            quadrature,
        }
    }
}

/// 16D mapping over both polarizations of four subcarriers. The amplitude
/// stream is consumed continuously, so a slot may straddle two blocks.
#[derive(Debug, Default, Clone, Copy)]
pub struct MultiDim16D;

impl MappingScheme for MultiDim16D {
    fn name(&self) -> &'static str {
        "16d"
    }

    fn label(&self) -> &'static str {
        "16D intra-DM mapping"
    }

    fn check_dims(&self, dims: &FrameDims, _block_len: usize) -> Result<(), MapError> {
        if dims.subcarriers != 4 {
            return Err(MapError::Scheme(format!(
                "16D requires 4 subcarriers, frame has {}",
                dims.subcarriers
            )));
        }
        Ok(())
    }

    fn place(&self, _dims: &FrameDims, block_len: usize, block: usize, offset: usize) -> Dimension {
        let pos = block * block_len + offset;
        let within = pos % 16;
        let (pol, quadrature) = component(within % 4);
        Dimension {
            subcarrier: within / 4,
            pol,
            slot: pos / 16,
            quadrature,
        }
    }
}
