//! PRBS-15 from a Fibonacci LFSR with feedback polynomial x^15 + x^14 + 1.

use crate::error::{Error, Result};

pub const PRBS15_PERIOD: usize = (1 << 15) - 1;

/// Default register state.
pub const DEFAULT_PRBS_SEED: u16 = 0x7FFF;

/// One full period of PRBS-15 as 0/1 values.
pub fn prbs15(seed: u16) -> Result<Vec<u8>> {
    let mut state = seed & 0x7FFF;
    if state == 0 {
        return Err(Error::ZeroSeed);
    }
    let mut bits = Vec::with_capacity(PRBS15_PERIOD);
    for _ in 0..PRBS15_PERIOD {
        let fb = ((state >> 14) ^ (state >> 13)) & 1;
        state = ((state << 1) | fb) & 0x7FFF;
        bits.push(fb as u8);
    }
    Ok(bits)
}
