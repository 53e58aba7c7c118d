use tapfuse::finger::Finger;
use tapfuse::keyboard::{default_layout, KeyTouchModel};
use tapfuse::simulator::*;

fn clean_profile(sigma: (f64, f64)) -> NoiseProfile {
    NoiseProfile {
        sensing_sigma: [sigma; 10],
        user_scale: 0.0,
        miss_rate: 0.0,
        ghost_rate: 0.0,
        confusion_rate: 0.0,
        frame_jitter: 0.0,
        ..Default::default()
    }
}

#[test]
fn sensing_noise_has_the_configured_spread() {
    let layout = default_layout();
    let keys = KeyTouchModel::default_prior(&layout);
    let phrase: String = "the quick brown fox jumps over a lazy dog ".repeat(250);
    let n = phrase.chars().count();
    assert!(n >= 10_000);
    let sim = simulate(&phrase, &layout, &keys, &clean_profile((4.6, 4.1)), 99).unwrap();
    assert_eq!(sim.observations.len(), n);
    let mut sum = [0.0; 2];
    let mut sq = [0.0; 2];
    for (o, t) in sim.observations.iter().zip(&sim.truth) {
        for a in 0..2 {
            let d = o.mean()[a] - t.contact[a];
            sum[a] += d;
            sq[a] += d * d;
        }
    }
    let nf = n as f64;
    for (a, want) in [(0, 4.6), (1, 4.1)] {
        let mean = sum[a] / nf;
        let sd = (sq[a] / nf - mean * mean).sqrt();
        assert!((sd - want).abs() / want < 0.03, "axis {a}: {sd} vs {want}");
        assert!(mean.abs() < 0.2);
    }
    // Reported variance is the true sensing variance.
    assert!((sim.observations[0].location.cov.0[0][0] - 4.6 * 4.6).abs() < 1e-12);
}

#[test]
fn calibrated_sigmas_reproduce_target_errors_on_fresh_draws() {
    for &(finger, target) in TABLE2_BETA_NLL_09.iter() {
        let s = calibrate_sensing(&[(finger, target)]).unwrap()[finger.index()];
        let fresh = mean_radial_error(s, 200_000, 12345);
        assert!((fresh - target).abs() / target < 0.01, "{}: {fresh} vs {target}", finger.code());
    }
}

#[test]
fn rescaled_targets_hit_the_overall_mean() {
    let phrases = ["hello world", "a quiet zone", "pack my box"];
    let usage = finger_usage(phrases).unwrap();
    let scaled = rescale_targets(&TABLE2_BETA_NLL_09, OVERALL_MEAN_ERROR, &usage);
    let total: f64 = usage.iter().sum();
    let mean: f64 = scaled.iter().map(|(f, t)| usage[f.index()] * t).sum::<f64>() / total;
    assert!((mean - OVERALL_MEAN_ERROR).abs() < 1e-12);
    let ratio = scaled[0].1 / TABLE2_BETA_NLL_09[0].1;
    assert!(scaled.iter().zip(TABLE2_BETA_NLL_09.iter()).all(|(a, b)| (a.1 / b.1 - ratio).abs() < 1e-12));
}

#[test]
fn space_goes_to_the_opposite_thumb() {
    assert_eq!(finger_for_key(' ', Some('e')).unwrap(), Finger::RightThumb);
    assert_eq!(finger_for_key(' ', Some('o')).unwrap(), Finger::LeftThumb);
    assert_eq!(finger_for_key(' ', None).unwrap(), Finger::LeftThumb);
}

#[test]
fn miss_and_ghost_rates_are_honored() {
    let layout = default_layout();
    let keys = KeyTouchModel::default_prior(&layout);
    let phrase = "pack my box with five dozen liquor jugs ".repeat(200);
    let n = phrase.len() as f64;
    let profile = NoiseProfile { miss_rate: 0.1, ghost_rate: 0.05, ..Default::default() };
    let sim = simulate(&phrase, &layout, &keys, &profile, 5).unwrap();
    assert!((sim.misses as f64 / n - 0.1).abs() < 0.015);
    assert!((sim.ghosts as f64 / n - 0.05).abs() < 0.01);
    assert_eq!(sim.observations.len(), phrase.len() - sim.misses + sim.ghosts);
}

#[test]
fn noise_profile_round_trips_through_json() {
    let p = NoiseProfile::default().scaled_sensing(1.3);
    let back: NoiseProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(back, p);
    let partial: NoiseProfile = serde_json::from_str(r#"{"miss_rate": 0.2}"#).unwrap();
    assert_eq!(partial.miss_rate, 0.2);
    assert_eq!(partial.ghost_rate, NoiseProfile::default().ghost_rate);
}
