mod common;

use common::*;
use proptest::prelude::*;
use qrfh::phy::{
    demap_subcarriers, map_subcarriers, pack_allocations, qam_demodulate, qam_modulate, Ofdm, OfdmConfig, QamConfig,
};
use qrfh::C64;

#[test]
fn qam_round_trip_all_orders() {
    let mut r = rng(21);
    for order in [4, 16, 64, 256] {
        let cfg = QamConfig::new(order).unwrap();
        for _ in 0..100 {
            let bits = random_bits(&mut r, cfg.bits_per_symbol() * 97);
            let symbols = qam_modulate(&bits, &cfg).unwrap();
            assert_eq!(qam_demodulate(&symbols, &cfg), bits);
        }
    }
}

#[test]
fn constellation_has_unit_energy_and_distinct_points() {
    for order in [4, 16, 64, 256] {
        let pts = QamConfig::new(order).unwrap().constellation();
        let energy: f64 = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / order as f64;
        assert!((energy - 1.0).abs() < 1e-12);
        for i in 0..order {
            for j in 0..i {
                assert!((pts[i] - pts[j]).norm() > 1e-6);
            }
        }
    }
}

#[test]
fn detection_matches_exhaustive_nearest_point_at_30db() {
    let cfg = QamConfig::new(64).unwrap();
    let pts = cfg.constellation();
    let bps = cfg.bits_per_symbol();
    let mut r = rng(22);
    let sigma2 = 10f64.powf(-3.0);
    let n = 100_000;
    let bits = random_bits(&mut r, n * bps);
    let tx = qam_modulate(&bits, &cfg).unwrap();
    let rx: Vec<C64> = tx.iter().map(|s| s + gaussian(&mut r) * sigma2.sqrt()).collect();
    let got = qam_demodulate(&rx, &cfg);
    for (k, y) in rx.iter().enumerate() {
        let best = (0..pts.len())
            .min_by(|&a, &b| (y - pts[a]).norm_sqr().total_cmp(&(y - pts[b]).norm_sqr()))
            .unwrap();
        let want: Vec<u8> = (0..bps).map(|b| ((best >> (bps - 1 - b)) & 1) as u8).collect();
        assert_eq!(&got[k * bps..(k + 1) * bps], &want[..], "symbol {k}");
    }
}

#[test]
fn ofdm_round_trip_and_energy() {
    let mut r = rng(23);
    for cfg in [OfdmConfig::desk(), OfdmConfig::table1(), OfdmConfig::centered(64, 8, 4).unwrap()] {
        let ofdm = Ofdm::new(cfg).unwrap();
        let rbs = vec![cfg.n_rb_max / 2, cfg.n_rb_max - cfg.n_rb_max / 2];
        let allocs = pack_allocations(&rbs);
        for _ in 0..if cfg.n_fft > 1024 { 5 } else { 100 } {
            let syms: Vec<Vec<C64>> = allocs
                .iter()
                .map(|a| (0..a.n_subcarriers()).map(|_| gaussian(&mut r)).collect())
                .collect();
            let grid = map_subcarriers(&syms, &allocs, &cfg).unwrap();
            let time = ofdm.modulate(&grid).unwrap();
            assert_eq!(time.len(), cfg.n_fft + cfg.cp_len);
            assert_eq!(&time[..cfg.cp_len], &time[cfg.n_fft..]);
            // unitary transform preserves energy over the CP-free body
            let body: f64 = time[cfg.cp_len..].iter().map(|z| z.norm_sqr()).sum();
            assert!((body - grid.energy()).abs() < 1e-10 * grid.energy());
            let back = demap_subcarriers(&ofdm.demodulate(&time).unwrap(), &allocs, &cfg);
            for (a, b) in syms.iter().flatten().zip(back.iter().flatten()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn dc_is_counted_in_the_active_band() {
    let cfg = OfdmConfig::desk();
    let n = cfg.n_active();
    assert_eq!(cfg.bin(n / 2), 0);
    assert_eq!(cfg.bin(0), cfg.n_fft - n / 2);
    let bins: std::collections::HashSet<usize> = (0..n).map(|k| cfg.bin(k)).collect();
    assert_eq!(bins.len(), n);
}

#[test]
fn bad_inputs_rejected() {
    assert!(QamConfig::new(32).is_err());
    let cfg = QamConfig::new(16).unwrap();
    assert!(qam_modulate(&[0, 1, 1], &cfg).is_err());
    assert!(qam_modulate(&[0, 1, 2, 0], &cfg).is_err());
    let ofdm = Ofdm::new(OfdmConfig::desk()).unwrap();
    assert!(ofdm.demodulate(&[C64::new(0.0, 0.0); 10]).is_err());
}

proptest! {
    #[test]
    fn qam_round_trip_prop(order_idx in 0usize..4, seed in any::<u64>(), n in 1usize..200) {
        let cfg = QamConfig::new([4, 16, 64, 256][order_idx]).unwrap();
        let bits = random_bits(&mut rng(seed), n * cfg.bits_per_symbol());
        prop_assert_eq!(qam_demodulate(&qam_modulate(&bits, &cfg).unwrap(), &cfg), bits);
    }
}
