//! Flat block-fading channels and the rate/power/energy conversions built on
//! the Shannon capacity of the link.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::model::{ChannelScenario, FadingMode, UeConfig};

/// Sinusoids in the sum-of-sinusoids Clarke generator.
pub const CLARKE_SINUSOIDS: usize = 64;

/// Channel power gain seen during one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    /// `|h|^2`, path loss included.
    pub gain_sq: f64,
    pub slot: u64,
}

/// Per-device fading process. One instance per device; instances are never
/// shared so devices can be advanced independently.
#[derive(Debug, Clone)]
pub struct FadingChannel {
    pathloss_gain: f64,
    kind: FadingKind,
    slot: u64,
}

#[derive(Debug, Clone)]
enum FadingKind {
    Iid,
    Clarke {
        /// Doppler phase increment per slot, `2 pi f_D tau`.
        omega: f64,
        cos_alpha: Vec<f64>,
        phase: Vec<f64>,
    },
}

impl FadingChannel {
    /// Builds the generator. Clarke generators draw their sinusoid phases
    /// once from `rng`.
    pub fn new<R: Rng + ?Sized>(scenario: &ChannelScenario, tau: f64, rng: &mut R) -> Self {
        let kind = match scenario.fading {
            FadingMode::IidRayleigh => FadingKind::Iid,
            FadingMode::Clarke { doppler_hz } => {
                let fd = doppler_hz.unwrap_or_else(|| default_doppler(tau));
                // Midpoint arrival angles over (0, pi): distinct Doppler shifts
                // whose phasor average tends to J0.
                let m = CLARKE_SINUSOIDS as f64;
                let cos_alpha = (0..CLARKE_SINUSOIDS)
                    .map(|n| (PI * (n as f64 + 0.5) / m).cos())
                    .collect();
                let phase = (0..CLARKE_SINUSOIDS)
                    .map(|_| rng.random::<f64>() * 2.0 * PI)
                    .collect();
                FadingKind::Clarke {
                    omega: 2.0 * PI * fd * tau,
                    cos_alpha,
                    phase,
                }
            }
        };
        FadingChannel {
            pathloss_gain: scenario.pathloss_gain,
            kind,
            slot: 0,
        }
    }

    /// Unit-power complex fade for the current slot (Clarke mode only).
    pub fn clarke_fade(&self) -> Option<(f64, f64)> {
        match &self.kind {
            FadingKind::Iid => None,
            FadingKind::Clarke {
                omega,
                cos_alpha,
                phase,
            } => {
                let t = self.slot as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (c, p) in cos_alpha.iter().zip(phase) {
                    let arg = omega * t * c + p;
                    re += arg.cos();
                    im += arg.sin();
                }
                let norm = (CLARKE_SINUSOIDS as f64).sqrt();
                Some((re / norm, im / norm))
            }
        }
    }

    /// Draws the gain for the next slot.
    pub fn next_gain<R: Rng + ?Sized>(&mut self, rng: &mut R) -> ChannelState {
        let unit = match &self.kind {
            FadingKind::Iid => {
                let g: f64 = Exp1.sample(rng);
                g
            }
            FadingKind::Clarke { .. } => {
                let (re, im) = self.clarke_fade().expect("clarke state");
                re * re + im * im
            }
        };
        let state = ChannelState {
            gain_sq: self.pathloss_gain * unit,
            slot: self.slot,
        };
        self.slot += 1;
        state
    }
}

/// Doppler spread whose coherence time `1 / (2 pi f_D)` equals one slot.
pub fn default_doppler(tau: f64) -> f64 {
    1.0 / (2.0 * PI * tau)
}

/// Largest rate the device can sustain at full power on this slot's channel.
pub fn max_rate(state: &ChannelState, ue: &UeConfig) -> f64 {
    capacity(
        ue.p_tx_max,
        state.gain_sq,
        ue.bandwidth(),
        ue.channel.noise_psd,
    )
}

/// Shannon capacity `B log2(1 + p g / (N0 B))`.
pub fn capacity(power: f64, gain_sq: f64, bandwidth: f64, noise_psd: f64) -> f64 {
    if gain_sq <= 0.0 || power <= 0.0 {
        return 0.0;
    }
    let snr = power * gain_sq / (noise_psd * bandwidth);
    bandwidth * snr.ln_1p() / LN_2
}

/// Transmit energy over one slot needed to run the link at `rate`.
pub fn tx_energy(rate: f64, state: &ChannelState, ue: &UeConfig, tau: f64) -> Result<f64> {
    tx_energy_raw(
        rate,
        state.gain_sq,
        ue.bandwidth(),
        ue.channel.noise_psd,
        tau,
    )
}

/// Inverse of [`capacity`], scaled by the slot length:
/// `tau B N0 / g * (2^(R/B) - 1)`.
pub fn tx_energy_raw(
    rate: f64,
    gain_sq: f64,
    bandwidth: f64,
    noise_psd: f64,
    tau: f64,
) -> Result<f64> {
    if rate <= 0.0 {
        return Ok(0.0);
    }
    if gain_sq <= 0.0 {
        return Err(Error::InfeasibleLink { rate });
    }
    Ok(tau * bandwidth * noise_psd / gain_sq * (rate * LN_2 / bandwidth).exp_m1())
}

/// Dynamic CPU energy over one slot, `tau kappa f^3`.
pub fn comp_energy(freq: f64, kappa: f64, tau: f64) -> f64 {
    tau * kappa * freq * freq * freq
}

/// Ergodic capacity of a Rayleigh link with mean gain `mean_gain_sq`,
/// `B E[log2(1 + p g X / (N0 B))]` with `X ~ Exp(1)`, by adaptive Simpson
/// quadrature.
pub fn ergodic_capacity(power: f64, mean_gain_sq: f64, bandwidth: f64, noise_psd: f64) -> f64 {
    if power <= 0.0 || mean_gain_sq <= 0.0 {
        return 0.0;
    }
    let snr = power * mean_gain_sq / (noise_psd * bandwidth);
    let f = |x: f64| (snr * x).ln_1p() * (-x).exp();
    // Split at the knee of the logarithm, then integrate the exponential tail.
    let knee = (1.0 / snr).min(1.0);
    let mut total = 0.0;
    let mut a = 0.0;
    for b in [knee, 1.0, 5.0, 15.0, 40.0, 80.0] {
        if b > a {
            total += adaptive_simpson(&f, a, b, 1e-13, 40);
            a = b;
        }
    }
    bandwidth * total / LN_2
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        eps: f64,
        whole: f64,
        m: f64,
        fm: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, eps / 2.0, left, lm, flm, depth - 1)
            + recurse(f, m, fm, b, fb, eps / 2.0, right, rm, frm, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, eps, whole, m, fm, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lut, StepSizes, UeConstraints, KAPPA_REF};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ue(channel: ChannelScenario) -> UeConfig {
        UeConfig {
            id: 0,
            lut: lut::deep_ce(),
            freq_set: vec![1.4e9],
            kappa: KAPPA_REF,
            p_tx_max: 0.1,
            channel,
            delta: 1.0,
            arrival_mean: 2.0,
            constraints: UeConstraints {
                delay_avg: 0.2,
                accuracy_avg: 0.9,
                energy_avg: f64::INFINITY,
            },
            step_sizes: StepSizes::default(),
        }
    }

    #[test]
    fn dead_channel_has_zero_rate() {
        let s = ChannelState {
            gain_sq: 0.0,
            slot: 0,
        };
        assert_eq!(max_rate(&s, &ue(ChannelScenario::preset_a())), 0.0);
    }

    #[test]
    fn zero_rate_costs_nothing() {
        let s = ChannelState {
            gain_sq: 1e-12,
            slot: 0,
        };
        let u = ue(ChannelScenario::preset_b());
        assert_eq!(tx_energy(0.0, &s, &u, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn positive_rate_on_dead_channel_is_infeasible() {
        let s = ChannelState {
            gain_sq: 0.0,
            slot: 0,
        };
        let u = ue(ChannelScenario::preset_b());
        assert!(matches!(
            tx_energy(1.0, &s, &u, 0.05),
            Err(Error::InfeasibleLink { .. })
        ));
    }

    #[test]
    fn energy_at_capacity_is_full_power() {
        let u = ue(ChannelScenario::preset_b());
        for g in [1e-16, 2.72e-14, 1e-12, 1.06e-10, 1e-8] {
            let s = ChannelState {
                gain_sq: g,
                slot: 0,
            };
            let e = tx_energy(max_rate(&s, &u), &s, &u, 0.05).unwrap();
            assert!((e / (0.05 * u.p_tx_max) - 1.0).abs() < 1e-9, "g={g}: {e}");
        }
    }

    #[test]
    fn doubling_power_never_reduces_rate() {
        let mut u = ue(ChannelScenario::preset_a());
        let s = ChannelState {
            gain_sq: 3e-11,
            slot: 0,
        };
        let r1 = max_rate(&s, &u);
        u.p_tx_max *= 2.0;
        assert!(max_rate(&s, &u) >= r1);
    }

    #[test]
    fn cpu_energy_is_cubic() {
        assert_eq!(comp_energy(0.0, KAPPA_REF, 0.05), 0.0);
        let e = comp_energy(1.4e9, KAPPA_REF, 0.05);
        assert!((e - 0.05 * 1.097e-27 * 1.4e9f64.powi(3)).abs() < 1e-15);
        assert!((comp_energy(2.8e9, KAPPA_REF, 0.05) / e - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_doppler_is_frozen() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sc = ChannelScenario::preset_a();
        sc.fading = FadingMode::Clarke {
            doppler_hz: Some(0.0),
        };
        let mut ch = FadingChannel::new(&sc, 0.05, &mut rng);
        let first = ch.next_gain(&mut rng).gain_sq;
        for _ in 0..100 {
            assert_eq!(ch.next_gain(&mut rng).gain_sq, first);
        }
    }

    #[test]
    fn ergodic_capacity_below_capacity_at_mean_gain() {
        // Jensen: E[log(1 + sX)] <= log(1 + s E[X]).
        for g in [2.72e-14, 1.06e-10] {
            let c = ergodic_capacity(0.1, g, 2.5e6, crate::model::THERMAL_NOISE_PSD);
            let awgn = capacity(0.1, g, 2.5e6, crate::model::THERMAL_NOISE_PSD);
            assert!(c > 0.0 && c < awgn);
        }
    }
}
