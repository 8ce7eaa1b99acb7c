//! Transmit and receive PHY primitives.

mod ofdm;
mod qam;

pub use ofdm::{
    demap_subcarriers, map_subcarriers, ofdm_demodulate, ofdm_modulate, pack_allocations, validate_allocations, Ofdm,
    OfdmConfig, OfdmGrid, UserAllocation, SUBCARRIERS_PER_RB,
};
pub use qam::{qam_demodulate, qam_modulate, QamConfig};
