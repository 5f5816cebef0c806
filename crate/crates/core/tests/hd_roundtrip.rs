use fedhd_core::analysis::pearson;
use fedhd_core::data::smooth_signals;
use fedhd_core::hd::{decode, Decoder, EncoderBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn decode_recovers_smooth_signals_at_ten_times_width() {
    let (channels, window) = (9, 10);
    let f = channels * window;
    let basis = EncoderBasis::new(10 * f, f, 11).unwrap();
    let decoder = Decoder::new(&basis).unwrap();
    let signals = smooth_signals(channels, window, 50, 0.85, 3).unwrap();
    let corr: Vec<f64> = signals
        .iter()
        .map(|x| pearson(x, &decoder.decode_hypervector(&basis.encode(x).unwrap()).unwrap()))
        .collect();
    let mean = corr.iter().sum::<f64>() / corr.len() as f64;
    assert!(mean > 0.9, "mean correlation {mean}");
}

#[test]
fn decoded_noise_is_uncorrelated_with_a_fixed_signal() {
    // Default data width: at F = 90 the null spread of a sample correlation
    // between smooth signals is itself about 0.1.
    let (channels, window) = (90, 10);
    let f = channels * window;
    let basis = EncoderBasis::new(10 * f, f, 12).unwrap();
    let decoder = Decoder::new(&basis).unwrap();
    let x = &smooth_signals(channels, window, 1, 1.0, 5).unwrap()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut sum = 0.0;
    for _ in 0..50 {
        let h: Vec<f64> = (0..10 * f).map(|_| 100.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let c = pearson(x, &decoder.decode(&h).unwrap());
        assert!(c.abs() < 0.2, "correlation {c}");
        sum += c;
    }
    assert!((sum / 50.0).abs() < 0.05, "mean correlation {}", sum / 50.0);
}

#[test]
fn decode_needs_at_least_as_many_dimensions_as_features() {
    let basis = EncoderBasis::new(89, 90, 1).unwrap();
    assert!(matches!(
        decode(&basis, &vec![1.0; 89]),
        Err(fedhd_core::Error::Underdetermined { .. })
    ));
}

#[test]
fn encoding_preserves_locality() {
    let basis = EncoderBasis::new(4096, 90, 3).unwrap();
    let signals = smooth_signals(9, 10, 3, 1.0, 8).unwrap();
    let x = &signals[0];
    let near: Vec<f64> = x.iter().zip(&signals[1]).map(|(a, b)| a + 0.05 * b).collect();
    let hx = basis.encode(x).unwrap();
    let near_sim = hx.cosine(&basis.encode(&near).unwrap());
    let far_sim = hx.cosine(&basis.encode(&signals[2]).unwrap());
    assert!(near_sim > 0.9, "{near_sim}");
    assert!(near_sim > far_sim, "{near_sim} vs {far_sim}");
}
