mod common;

use common::*;
use proptest::prelude::*;
use qrfh::codec::{
    compress_svd_baseline, compression_ratio, decompress, decompress_svd, demap_users, CompressedPayload,
    QrCompressor, QuantizerSpec, SvdPayload, HEADER_BYTES,
};
use qrfh::linalg::frobenius_error;
use qrfh::phy::{pack_allocations, Ofdm, OfdmConfig, OfdmGrid, UserAllocation};
use qrfh::{Error, IQMatrix};
use rand::Rng;

/// Time-domain block whose per-user frequency-domain blocks are the given matrices.
fn synthesize(ofdm: &Ofdm, allocs: &[UserAllocation], blocks: &[IQMatrix], n_r: usize) -> IQMatrix {
    let cfg = ofdm.config();
    let mut y = IQMatrix::zeros(cfg.symbol_len(), n_r);
    for r in 0..n_r {
        let mut grid = OfdmGrid::zeros(cfg);
        for (a, b) in allocs.iter().zip(blocks) {
            for (k, bin) in a.bins(cfg).into_iter().enumerate() {
                grid.bins[bin] = b.get(k, r);
            }
        }
        for (t, v) in ofdm.modulate(&grid).unwrap().into_iter().enumerate() {
            y.set(t, r, v);
        }
    }
    y
}

/// Layout arithmetic: fixed header, then per user a 64-bit prefix and a
/// byte-padded bit field of indices, two scales and the factor codes.
fn expected_len(n_r: usize, b_q: usize, users: &[(usize, usize)]) -> usize {
    let idx = if n_r <= 1 { 0 } else { (n_r as f64).log2().ceil() as usize };
    HEADER_BYTES
        + users
            .iter()
            .map(|&(n_f, l)| 8 + (n_r * idx + 64 + l * (n_f + n_r) * b_q).div_ceil(8))
            .sum::<usize>()
}

#[test]
fn payload_length_is_bit_exact_on_random_configs() {
    let mut r = rng(41);
    for case in 0..20 {
        let n_fft = [64, 128, 256, 512][r.random_range(0..4)];
        let n_rb_max = (n_fft / 12 * 3 / 4).max(1);
        let cfg = OfdmConfig::centered(n_fft, n_fft / 8, n_rb_max).unwrap();
        let n_u = r.random_range(1..=3.min(n_rb_max));
        let mut rbs = vec![1; n_u];
        for _ in 0..r.random_range(0..=n_rb_max - n_u) {
            rbs[r.random_range(0..n_u)] += 1;
        }
        let allocs = pack_allocations(&rbs);
        let n_r = r.random_range(2..=40);
        let bits = r.random_range(6..=16);
        let quant = QuantizerSpec::new(bits).unwrap();
        let l_u: Vec<usize> = allocs.iter().map(|a| r.random_range(1..=n_r.min(a.n_subcarriers()))).collect();
        let y = random_matrix(&mut r, cfg.symbol_len(), n_r);
        let c = QrCompressor::new(cfg, allocs.clone(), quant).unwrap();
        let p = c.compress(&y, &l_u).unwrap();
        let bytes = p.serialize();

        let users: Vec<(usize, usize)> = allocs.iter().zip(&l_u).map(|(a, &l)| (a.n_subcarriers(), l)).collect();
        assert_eq!(bytes.len(), expected_len(n_r, 2 * bits as usize, &users), "case {case}");
        let cr = compression_ratio(cfg.symbol_len(), n_r, 2 * bits, &users);
        assert_eq!(p.sample_bits(), cr.b_cmp);
        assert_eq!(p.index_overhead_bits(), cr.b_ovh);
        let overhead_bits = 8 * bytes.len() as u64 - cr.b_cmp - cr.b_ovh;
        // header, prefixes and scales plus under one byte of padding per user
        let fixed = 8 * HEADER_BYTES as u64 + n_u as u64 * (64 + 64);
        assert!(overhead_bits >= fixed && overhead_bits < fixed + 8 * n_u as u64, "case {case}");

        let back = CompressedPayload::deserialize(&bytes).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.serialize(), bytes);
    }
}

#[test]
fn rank_12_blocks_survive_the_codec() {
    let cfg = OfdmConfig::desk();
    let ofdm = Ofdm::new(cfg).unwrap();
    let allocs = pack_allocations(&[8, 10, 12]);
    let n_r = 64;
    let mut r = rng(42);
    let blocks: Vec<IQMatrix> = allocs.iter().map(|a| exact_rank(&mut r, a.n_subcarriers(), n_r, 12)).collect();
    let y = synthesize(&ofdm, &allocs, &blocks, n_r);
    let c = QrCompressor::new(cfg, allocs.clone(), QuantizerSpec::table1()).unwrap();
    let p = CompressedPayload::deserialize(&c.compress(&y, &[12, 12, 12]).unwrap().serialize()).unwrap();
    for (want, got) in blocks.iter().zip(decompress(&p).unwrap()) {
        let err = frobenius_error(want, &got).unwrap();
        assert!(err < 2f64.powi(-12), "error {err:e}");
    }
    // without quantization the factors are exact
    for (want, f) in blocks.iter().zip(c.factorize(&y, &[12, 12, 12]).unwrap()) {
        let got = qrfh::linalg::qr_reconstruct(&f).unwrap();
        assert!(frobenius_error(want, &got).unwrap() < 1e-10);
    }
}

#[test]
fn full_rank_codec_is_quantization_limited() {
    let cfg = OfdmConfig::centered(128, 16, 6).unwrap();
    let ofdm = Ofdm::new(cfg).unwrap();
    let allocs = pack_allocations(&[3, 3]);
    let mut r = rng(43);
    let y = random_matrix(&mut r, cfg.symbol_len(), 16);
    let p = qrfh::codec::compress_qr(&y, &allocs, &[16, 16], QuantizerSpec::table1(), cfg).unwrap();
    for (want, got) in demap_users(&y, &allocs, &ofdm).unwrap().iter().zip(decompress(&p).unwrap()) {
        assert!(frobenius_error(want, &got).unwrap() < 2f64.powi(-12));
    }
}

#[test]
fn compression_ratio_falls_as_rank_grows() {
    let users = |l: usize| vec![(96, l); 4];
    let mut prev = f64::INFINITY;
    for l in 1..=64 {
        let cr = compression_ratio(548, 64, 30, &users(l)).cr;
        assert!(cr < prev);
        prev = cr;
    }
}

#[test]
fn svd_payload_round_trip_and_budget() {
    let cfg = OfdmConfig::desk();
    let mut r = rng(44);
    let y = exact_rank(&mut r, cfg.symbol_len(), 64, 16);
    let target = 155_136;
    let p = compress_svd_baseline(&y, 16, target, &cfg).unwrap();
    assert!(p.sample_bits() <= target);
    assert_eq!(p.bits_per_component, 7);
    let bytes = p.serialize();
    assert_eq!(bytes.len(), HEADER_BYTES + 2 + 8 + (p.sample_bits() as usize).div_ceil(8));
    let back = SvdPayload::deserialize(&bytes).unwrap();
    assert_eq!(back, p);
    let err = frobenius_error(&y, &decompress_svd(&back)).unwrap();
    assert!(err < 0.05, "7-bit SVD error {err}");
    assert!(matches!(
        compress_svd_baseline(&y, 16, 10_000, &cfg),
        Err(Error::InfeasibleBudget { .. })
    ));
}

#[test]
fn corrupted_payloads_are_rejected() {
    let cfg = OfdmConfig::centered(64, 8, 4).unwrap();
    let allocs = pack_allocations(&[2, 2]);
    let mut r = rng(45);
    let y = random_matrix(&mut r, cfg.symbol_len(), 8);
    let bytes = qrfh::codec::compress_qr(&y, &allocs, &[2, 3], QuantizerSpec::table1(), cfg)
        .unwrap()
        .serialize();

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(CompressedPayload::deserialize(&bad), Err(Error::Decode { offset: 0, .. })));

    for cut in [10, HEADER_BYTES + 3, bytes.len() - 1] {
        assert!(matches!(CompressedPayload::deserialize(&bytes[..cut]), Err(Error::Decode { .. })));
    }

    let mut extra = bytes.clone();
    extra.push(0);
    assert!(CompressedPayload::deserialize(&extra).is_err());

    // duplicate antenna index: first two 3-bit indices of user 0 set equal
    let mut dup = bytes.clone();
    let start = HEADER_BYTES + 8;
    dup[start] = 0;
    assert!(CompressedPayload::deserialize(&dup).is_err());

    assert!(SvdPayload::deserialize(&bytes).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn payload_round_trip_prop(seed in any::<u64>(), n_r in 1usize..20, bits in 2u32..=16) {
        let cfg = OfdmConfig::centered(64, 8, 4).unwrap();
        let allocs = pack_allocations(&[1, 3]);
        let mut r = rng(seed);
        let y = random_matrix(&mut r, cfg.symbol_len(), n_r);
        let l_u = [r.random_range(1..=n_r.min(12)), r.random_range(1..=n_r.min(36))];
        let p = qrfh::codec::compress_qr(&y, &allocs, &l_u, QuantizerSpec::new(bits).unwrap(), cfg).unwrap();
        let bytes = p.serialize();
        let back = CompressedPayload::deserialize(&bytes).unwrap();
        prop_assert_eq!(&back, &p);
        let users = [(12, l_u[0]), (36, l_u[1])];
        prop_assert_eq!(bytes.len(), expected_len(n_r, 2 * bits as usize, &users));
    }
}
