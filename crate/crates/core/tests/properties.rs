use dpsbound_core::detection::{interferometer_amplitudes, untrusted_error_count, wrong_detectors, Detector};
use dpsbound_core::trusted::{pd_profile, preceding_probabilities, truncated_blocks};
use dpsbound_core::untrusted::{clicks_by_summation, clicks_closed_form, pulses_by_summation, pulses_closed_form};
use dpsbound_core::{
    trusted_rates, untrusted_gain, untrusted_qber, AmplitudeDistribution, AttackParams, BlockDistribution,
    DetectorModel, PhotonNumberDistribution,
};
use proptest::prelude::*;

fn dist(i: usize) -> AmplitudeDistribution {
    match i {
        0 => AmplitudeDistribution::flat(),
        1 => AmplitudeDistribution::binomial(),
        _ => AmplitudeDistribution::optimal(),
    }
}

fn untrusted_params() -> impl Strategy<Value = AttackParams> {
    (0.01f64..1.5, 2usize..40, 0.0f64..=1.0, 0usize..800).prop_flat_map(|(mu, m_max, q, pad)| {
        (1..m_max).prop_map(move |m_min| AttackParams::new(mu, m_min, m_max, q, pad).unwrap())
    })
}

fn trusted_case() -> impl Strategy<Value = (AttackParams, DetectorModel, usize)> {
    (
        0.02f64..0.8,
        2usize..12,
        0.0f64..=1.0,
        0.0f64..=1.0,
        -9.0f64..-1.0,
        1usize..=3,
    )
        .prop_flat_map(|(mu, d, q, eta, log_pd, m)| {
            (1..d).prop_map(move |m_min| {
                let params = AttackParams::new(mu, m_min, d, q, d).unwrap();
                let det = DetectorModel::with_dead_pulses(eta, 10f64.powf(log_pd), d).unwrap();
                (params, det, m)
            })
        })
}

fn unit_vector(raw: Vec<f64>) -> Vec<f64> {
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.into_iter().map(|x| x / norm).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closed_forms_match_summation(params in untrusted_params()) {
        let blocks = BlockDistribution::new(&params);
        let clicks = clicks_by_summation(&blocks);
        let pulses = pulses_by_summation(&blocks, params.pad());
        prop_assert!((clicks_closed_form(&params) - clicks).abs() <= 1e-12 * clicks.max(1e-300));
        prop_assert!((pulses_closed_form(&params).unwrap() - pulses).abs() <= 1e-12 * pulses);
        prop_assert!((blocks.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn untrusted_rates_are_probabilities(params in untrusted_params(), d in 0usize..3) {
        let g = untrusted_gain(&params).unwrap();
        prop_assert!(g > 0.0 && g <= 1.0);
        let q = untrusted_qber(&params, &dist(d)).unwrap();
        prop_assert!((0.0..=0.5).contains(&q));
    }

    #[test]
    fn optimal_gives_lowest_qber(params in untrusted_params()) {
        let opt = untrusted_qber(&params, &dist(2)).unwrap();
        prop_assert!(opt <= untrusted_qber(&params, &dist(0)).unwrap() + 1e-12);
        prop_assert!(opt <= untrusted_qber(&params, &dist(1)).unwrap() + 1e-12);
    }

    #[test]
    fn error_count_ignores_eve_phases(raw in prop::collection::vec(0.01f64..1.0, 1..12), bits in any::<u16>()) {
        let a = unit_vector(raw);
        let phases: Vec<f64> = (0..a.len())
            .map(|i| if bits >> (i % 16) & 1 == 1 { std::f64::consts::PI } else { 0.0 })
            .collect();
        let amps = interferometer_amplitudes(&a, 1.0, &phases).unwrap();
        let (e, f) = (amps.e_weights(), amps.f_weights());
        let wrong: f64 = wrong_detectors(&phases)
            .iter()
            .enumerate()
            .map(|(n, det)| match det {
                Detector::D1 => e[n],
                Detector::D0 => f[n],
            })
            .sum();
        prop_assert!((wrong - untrusted_error_count(&a).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn truncated_statistics_are_normalized(
        (params, _, _) in trusted_case(),
        log_g in -9.0f64..-0.1,
    ) {
        let blocks = BlockDistribution::new(&params);
        let pd = pd_profile(10f64.powf(log_g), params.m_max()).unwrap();
        prop_assert!((pd.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        let t = truncated_blocks(&blocks, &pd).unwrap();
        prop_assert!((t.total() - 1.0).abs() <= 1e-10);
        let pre = preceding_probabilities(&blocks, &pd, &t).unwrap();
        prop_assert!((pre.p_pv + pre.p_pk.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn trusted_rates_stay_in_range((params, det, m) in trusted_case()) {
        let out = trusted_rates(&params, &det, &dist(2), &PhotonNumberDistribution::single(m).unwrap()).unwrap();
        prop_assert!(out.gain > 0.0 && out.gain <= 1.0);
        prop_assert!(out.qber >= 0.0 && out.qber <= 0.5 + 1e-9);
        prop_assert!(out.dc_rate >= 0.0 && out.dc_rate <= out.gain);
        if m == 1 && det.eta_det() > 0.0 {
            // One photon never fires both detectors; only dark counts can.
            let p_d = det.p_dark();
            prop_assert!(out.dc_rate <= out.gain * p_d * 2.0 + 1e-15);
        }
    }

    #[test]
    fn dark_counts_set_a_gain_floor((params, det, m) in trusted_case()) {
        let photons = PhotonNumberDistribution::single(m).unwrap();
        let dark_only = DetectorModel::with_dead_pulses(0.0, det.p_dark(), det.dead_pulses()).unwrap();
        let g = trusted_rates(&params, &det, &dist(2), &photons).unwrap().gain;
        let floor = trusted_rates(&params, &dark_only, &dist(2), &photons).unwrap().gain;
        prop_assert!(g >= floor * (1.0 - 1e-9));
    }

    #[test]
    fn longer_dead_time_never_raises_gain((params, det, m) in trusted_case(), extra in 1usize..20) {
        let photons = PhotonNumberDistribution::single(m).unwrap();
        let d = det.dead_pulses() + extra;
        let longer = DetectorModel::with_dead_pulses(det.eta_det(), det.p_dark(), d).unwrap();
        let g = trusted_rates(&params, &det, &dist(2), &photons).unwrap().gain;
        let g_long = trusted_rates(&params.with_pad(d), &longer, &dist(2), &photons).unwrap().gain;
        prop_assert!(g_long <= g * (1.0 + 1e-9), "{g_long} > {g}");
    }
}

#[test]
fn dark_only_double_clicks_follow_coincidences() {
    for (p_d, d) in [(1e-6, 5), (0.02, 3), (0.3, 10)] {
        let det = DetectorModel::with_dead_pulses(0.0, p_d, d).unwrap();
        let params = AttackParams::new(0.3, 1, d, 0.4, d).unwrap();
        let out = trusted_rates(&params, &det, &dist(0), &PhotonNumberDistribution::single(2).unwrap()).unwrap();
        let big_p = p_d * (2.0 - p_d);
        assert!((out.qber - 0.5).abs() < 1e-12);
        assert!((out.dc_rate / out.gain - p_d * p_d / big_p).abs() < 1e-12);
    }
}
