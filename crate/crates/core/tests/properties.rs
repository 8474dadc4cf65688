use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qcd_core::calibration::{threshold_for_arl, ArlTable};
use qcd_core::detector::CusumRun;
use qcd_core::experiments::config::{Params, KNOWN_KEYS};
use qcd_core::gaussian::{
    apply_loss, entangled_block_cov_closed, entangled_block_cov_oracle, entangled_block_state, homodyne_marginal,
    kl_gaussian_1d, kl_gaussian_nd, Gaussian1D, GaussianVec,
};
use qcd_core::sampling::{dv_inverse_cdf, sample, SeededStream};
use qcd_core::schemes::{
    cre_coherent, cre_squeezed, dv_homodyne_cdf, entangled_homodyne_stats, ChannelPair, EnergyParams,
    ObservationModel, Scheme, SchemeKind,
};
use qcd_core::table::fmt_float;

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n)
        .prop_map(move |v| {
            let a = DMatrix::from_vec(n, n, v);
            &a * a.transpose() + DMatrix::identity(n, n) * 0.1
        })
}

fn channel() -> impl Strategy<Value = ChannelPair> {
    (0.05f64..1.0, 0.05f64..1.0).prop_map(|(e1, tap)| ChannelPair::from_tap(e1, tap).unwrap())
}

proptest! {
    #[test]
    fn kl_1d_nonnegative(m1 in -5.0f64..5.0, m2 in -5.0f64..5.0, v1 in 0.01f64..4.0, v2 in 0.01f64..4.0) {
        let p2 = Gaussian1D::new(m2, v2).unwrap();
        let p1 = Gaussian1D::new(m1, v1).unwrap();
        prop_assert!(kl_gaussian_1d(&p2, &p1) >= 0.0);
        prop_assert_eq!(kl_gaussian_1d(&p1, &p1), 0.0);
    }

    #[test]
    fn kl_nd_nonnegative(c1 in spd(4), c2 in spd(4), m in prop::collection::vec(-2.0f64..2.0, 4)) {
        let p1 = GaussianVec::new(DVector::zeros(4), c1).unwrap();
        let p2 = GaussianVec::new(DVector::from_vec(m), c2).unwrap();
        prop_assert!(kl_gaussian_nd(&p2, &p1).unwrap() >= 0.0);
        prop_assert!(kl_gaussian_nd(&p1, &p1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_oracle(k in 0u32..=4, r in 0.0f64..1.5) {
        let n = 1usize << k;
        let a = entangled_block_cov_closed(n, r).unwrap();
        let b = entangled_block_cov_oracle(n, r).unwrap();
        prop_assert!((a - b).abs().max() < 1e-12);
    }

    #[test]
    fn loss_composes(n in 1usize..6, r in 0.0f64..1.5, eta_a in 0.05f64..1.0, frac in 0.05f64..1.0) {
        let eta_b = eta_a * frac;
        let s = entangled_block_state(n, r, 1.7).unwrap();
        let twice = apply_loss(&apply_loss(&s, eta_a).unwrap(), frac).unwrap();
        let once = apply_loss(&s, eta_b).unwrap();
        prop_assert!((twice.cov() - once.cov()).abs().max() < 1e-12);
        prop_assert!((twice.mean() - once.mean()).abs().max() < 1e-12);
    }

    #[test]
    fn marginal_matches_block_statistics(n in 1usize..9, r in 0.0f64..1.5, eta in 0.05f64..1.0, alpha in 0.0f64..10.0) {
        let g = homodyne_marginal(&apply_loss(&entangled_block_state(n, r, alpha).unwrap(), eta).unwrap()).unwrap();
        let direct = entangled_homodyne_stats(n, r, alpha, eta).unwrap();
        prop_assert!((g.cov() - direct.cov()).abs().max() < 1e-12);
        prop_assert!((g.mean() - direct.mean()).abs().max() < 1e-12);
    }

    #[test]
    fn cres_nonnegative_and_vanish_without_change(ch in channel(), n in 0.0f64..200.0, na in 0.0f64..5.0) {
        let e = EnergyParams::new(n, na).unwrap();
        prop_assert!(cre_coherent(&ch, &e) >= 0.0);
        prop_assert!(cre_squeezed(&ch, &e) >= 0.0);
        let same = ch.unchanged();
        prop_assert_eq!(cre_coherent(&same, &e), 0.0);
        prop_assert!(cre_squeezed(&same, &e).abs() < 1e-15);
    }

    #[test]
    fn cusum_matches_definition(ls in prop::collection::vec(-3.0f64..3.0, 1..300)) {
        let mut run = CusumRun::new(f64::MAX).unwrap();
        let mut prefix = vec![0.0];
        for (k, &l) in ls.iter().enumerate() {
            run.step(l).unwrap();
            prefix.push(prefix[k] + l);
            let brute = prefix.iter().map(|s| prefix[k + 1] - s).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((run.decision() - brute).abs() < 1e-12);
            prop_assert!(run.decision() >= 0.0);
        }
    }

    #[test]
    fn cusum_alarm_is_first_crossing(ls in prop::collection::vec(-1.0f64..2.0, 1..200), h in 0.0f64..10.0) {
        let mut run = CusumRun::new(h).unwrap();
        let mut g = 0.0f64;
        let mut expected = None;
        for (k, &l) in ls.iter().enumerate() {
            g = (g + l).max(0.0);
            if g > h {
                expected = Some(k as u64 + 1);
                break;
            }
        }
        for &l in &ls {
            if run.step(l).unwrap() {
                break;
            }
        }
        prop_assert_eq!(run.alarm_time(), expected);
    }

    #[test]
    fn dv_inverse_cdf_inverts(u in 1e-6f64..(1.0 - 1e-6), alpha in 0.0f64..10.0, eta in 0.0f64..1.0) {
        let x = dv_inverse_cdf(u, alpha, eta).unwrap();
        prop_assert!((dv_homodyne_cdf(x, alpha, eta) - u).abs() < 1e-10);
    }

    #[test]
    fn streams_reproduce(seed in any::<u64>(), id in any::<u64>()) {
        let m = ObservationModel::Gauss1(Gaussian1D::new(0.0, 1.0).unwrap());
        let a = sample(&m, SeededStream::new(seed, id), 8).unwrap();
        let b = sample(&m, SeededStream::new(seed, id), 8).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn float_format_round_trips(x in any::<f64>()) {
        let s = fmt_float(x);
        let back: f64 = s.parse().unwrap();
        if x.is_nan() {
            prop_assert!(back.is_nan());
        } else {
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn config_round_trips(idx in prop::collection::btree_set(0..KNOWN_KEYS.len(), 1..8), v in 0u32..1000) {
        let text: String = idx
            .iter()
            .map(|&i| format!("{} = {v}  # note\n", KNOWN_KEYS[i]))
            .collect();
        let p = Params::parse(&text).unwrap();
        let want = v.to_string();
        for &i in &idx {
            prop_assert_eq!(p.raw(KNOWN_KEYS[i]), Some(want.as_str()));
        }
    }

    #[test]
    fn threshold_lookup_stays_in_table(target in 1.5f64..900.0) {
        let h_grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let gamma: Vec<f64> = h_grid.iter().map(|h| (h + 0.4f64).exp()).collect();
        let table = ArlTable {
            censor_frac: vec![0.0; h_grid.len()],
            h_grid,
            gamma,
            runs: 10,
            run_length: 100,
            scheme: Scheme::unmodulated(SchemeKind::CoherentHomodyne, EnergyParams::new(1.0, 0.0).unwrap()).unwrap(),
            channel: ChannelPair::new(0.9, 0.85).unwrap(),
        };
        let h = threshold_for_arl(&table, target).unwrap();
        prop_assert!((0.0..=10.0).contains(&h));
        // the table is exactly exponential, so log-linear interpolation is exact
        prop_assert!((h - (target.ln() - 0.4)).abs() < 1e-9);
    }
}
