use proptest::prelude::*;
use pudtune_core::calibration::calibrate_with;
use pudtune_core::exec::majority;
use pudtune_core::{
    charge_share, exec_maj, store_calibration, CalibParams, CalibPattern, CalibrationTable,
    CellCharge, FracConfig, MajPlan, Mode, NoiseConfig, OffsetLadder, SenseAmpProfile, Subarray,
    SubarrayGeometry,
};

fn frac_strategy() -> impl Strategy<Value = FracConfig> {
    (0u8..4, 0u8..4, 0u8..4).prop_map(|(x, y, z)| FracConfig::new(x, y, z).unwrap())
}

proptest! {
    #[test]
    fn charge_share_matches_closed_form(cells in prop::collection::vec(0.0f64..=1.0, 1..9)) {
        let g = SubarrayGeometry::default();
        let charges: Vec<CellCharge> = cells.iter().map(|&v| CellCharge::new(v)).collect();
        let v = charge_share(&charges, &g).unwrap();
        let k = cells.len() as f64;
        let want = (30.0 * cells.iter().sum::<f64>() + 270.0 * 0.5) / (30.0 * k + 270.0);
        prop_assert!((v - want).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn charge_share_ignores_cell_order(cells in prop::collection::vec(0.0f64..=1.0, 1..9), rot in 0usize..8) {
        let g = SubarrayGeometry::default();
        let a: Vec<CellCharge> = cells.iter().map(|&v| CellCharge::new(v)).collect();
        let mut b = a.clone();
        b.rotate_left(rot % a.len());
        b.reverse();
        let (va, vb) = (charge_share(&a, &g).unwrap(), charge_share(&b, &g).unwrap());
        prop_assert!((va - vb).abs() < 1e-12);
    }

    #[test]
    fn charge_share_is_monotone(cells in prop::collection::vec(0.0f64..=1.0, 1..9), i in 0usize..8, up in 0.0f64..=1.0) {
        let g = SubarrayGeometry::default();
        let i = i % cells.len();
        let a: Vec<CellCharge> = cells.iter().map(|&v| CellCharge::new(v)).collect();
        let mut b = a.clone();
        b[i] = CellCharge::new(cells[i].max(up));
        prop_assert!(charge_share(&b, &g).unwrap() >= charge_share(&a, &g).unwrap() - 1e-15);
    }

    #[test]
    fn frac_contracts_toward_half(v in 0.0f64..=1.0, times in 0u32..5) {
        let g = SubarrayGeometry::new(4, 1);
        let mut s = Subarray::new(g, SenseAmpProfile::ideal(1), NoiseConfig::noiseless()).unwrap();
        s.set_cell(0, 0, CellCharge::new(v)).unwrap();
        s.frac_n(0, times).unwrap();
        let want = 0.5 + 0.5f64.powi(times as i32) * (v - 0.5);
        prop_assert!((s.cell(0, 0).value() - want).abs() < 1e-12);
    }

    #[test]
    fn ladder_is_symmetric_under_complement(frac in frac_strategy()) {
        let ladder = OffsetLadder::enumerate(frac, 0.5).unwrap();
        let o = ladder.offsets();
        for (a, b) in o.iter().zip(o.iter().rev()) {
            prop_assert!((a + b).abs() < 1e-9);
        }
        for bits in 0u8..8 {
            let p = CalibPattern::new(bits);
            prop_assert!((p.offset(&frac, 0.5) + p.complement().offset(&frac, 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn maj_output_is_monotone_in_inputs(
        tau in 0.40f64..0.60,
        level in 0usize..8,
        combo in 0u32..32,
        flip in 0usize..5,
    ) {
        let g = SubarrayGeometry::new(32, 1);
        let cfg = FracConfig::new(2, 1, 0).unwrap();
        let mut s = Subarray::new(g, SenseAmpProfile::uniform(1, tau), NoiseConfig::noiseless()).unwrap();
        let plan = MajPlan::new(&g, 5, Mode::PudTune, cfg).unwrap();
        let table = CalibrationTable::from_levels(cfg, 0.5, vec![level]).unwrap();
        store_calibration(&mut s, &plan, &table).unwrap();
        let mut bits: Vec<bool> = (0..5).map(|i| combo >> i & 1 == 1).collect();
        bits[flip] = false;
        let low = exec_maj(&mut s, &plan, &bits.iter().map(|&b| vec![b]).collect::<Vec<_>>(), Some(&table)).unwrap();
        bits[flip] = true;
        let high = exec_maj(&mut s, &plan, &bits.iter().map(|&b| vec![b]).collect::<Vec<_>>(), Some(&table)).unwrap();
        prop_assert!(!low[0] || high[0]);
    }

    #[test]
    fn ideal_majority_is_exact(combo in 0u32..32) {
        let g = SubarrayGeometry::new(32, 1);
        let mut s = Subarray::new(g, SenseAmpProfile::ideal(1), NoiseConfig::noiseless()).unwrap();
        let plan = MajPlan::new(&g, 5, Mode::Baseline, FracConfig::new(3, 0, 0).unwrap()).unwrap();
        let bits: Vec<bool> = (0..5).map(|i| combo >> i & 1 == 1).collect();
        let out = exec_maj(&mut s, &plan, &bits.iter().map(|&b| vec![b]).collect::<Vec<_>>(), None).unwrap();
        prop_assert_eq!(out[0], majority(&bits));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn calibration_levels_stay_in_bounds_and_step_by_one(
        taus in prop::collection::vec(0.35f64..0.65, 1..6),
        seed in any::<u64>(),
    ) {
        let n = taus.len();
        let g = SubarrayGeometry::new(32, n);
        let cfg = FracConfig::new(2, 1, 0).unwrap();
        let noise = NoiseConfig { sigma_sense: 0.005, sigma_cell: 0.0, seed };
        let mut s = Subarray::new(g, SenseAmpProfile::new(taus).unwrap(), noise).unwrap();
        let plan = MajPlan::new(&g, 5, Mode::PudTune, cfg).unwrap();
        let params = CalibParams { n_iterations: 6, samples_per_iteration: 64, seed, ..CalibParams::default() };
        let mut prev = CalibrationTable::mid_level(cfg, 0.5, n).unwrap().levels().to_vec();
        let mut ok = true;
        let table = calibrate_with(&mut s, &plan, &params, None, |_, t| {
            for (a, b) in prev.iter().zip(t.levels()) {
                ok &= a.abs_diff(*b) <= 1 && *b < 8;
            }
            prev = t.levels().to_vec();
        })
        .unwrap();
        prop_assert!(ok);
        prop_assert!(table.is_consistent());
    }
}
