//! Fading draws, Shannon rate limits and transmit energy for both channel
//! presets.

use goc_edge::channel::{self, FadingChannel};
use goc_edge::experiments::{reference_ue, MEDA_STEPS};
use goc_edge::model::{lut, ChannelScenario, FadingMode, UeConstraints, KAPPA_REF};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tau = 0.05;
    for (name, scenario) in [
        ("A", ChannelScenario::preset_a()),
        ("B", ChannelScenario::preset_b()),
    ] {
        let ue = reference_ue(
            0,
            lut::deep_ce(),
            scenario.clone(),
            KAPPA_REF,
            UeConstraints {
                delay_avg: 0.2,
                accuracy_avg: 0.8,
                energy_avg: f64::INFINITY,
            },
            MEDA_STEPS,
        );
        let ergodic = channel::ergodic_capacity(
            ue.p_tx_max,
            scenario.pathloss_gain,
            scenario.bandwidth_hz,
            scenario.noise_psd,
        );
        println!(
            "scenario {name}: ergodic capacity {:.3} Mb/s",
            ergodic / 1e6
        );

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut fading = FadingChannel::new(&scenario, tau, &mut rng);
        for _ in 0..3 {
            let s = fading.next_gain(&mut rng);
            let r_max = channel::max_rate(&s, &ue);
            let half = channel::tx_energy(0.5 * r_max, &s, &ue, tau)?;
            println!(
                "  slot {}: |h|^2 = {:.3e}, R_max = {:.3} Mb/s, E_tx(R_max/2) = {:.2} mJ",
                s.slot,
                s.gain_sq,
                r_max / 1e6,
                half * 1e3
            );
        }
    }

    let clarke = ChannelScenario {
        fading: FadingMode::Clarke { doppler_hz: None },
        ..ChannelScenario::preset_a()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut fading = FadingChannel::new(&clarke, tau, &mut rng);
    let trace: Vec<f64> = (0..2000)
        .map(|_| fading.next_gain(&mut rng).gain_sq)
        .collect();
    let mean = trace.iter().sum::<f64>() / trace.len() as f64;
    println!(
        "Clarke fading, Doppler {:.2} Hz: mean gain / path loss = {:.3}",
        channel::default_doppler(tau),
        mean / clarke.pathloss_gain
    );
    println!(
        "computation energy at 1.4 GHz: {:.2} mJ/slot",
        channel::comp_energy(1.4e9, KAPPA_REF, tau) * 1e3
    );
    Ok(())
}
