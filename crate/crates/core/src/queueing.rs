//! Physical and virtual queues, per-slot service counts, and the Little's-law
//! delay mapping.
//!
//! Every device owns one transmission/computation queue and one server-side
//! queue per compression profile. Long-term constraints are tracked by
//! virtual queues: `Z` (delay) for every policy, `Y` (accuracy) for the
//! energy-minimizing family, `S` and `O` (device and server energy) for the
//! accuracy-maximizing one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CompressionProfile, EsConfig, UeConfig};

/// Slack applied before flooring DU counts so that exact products such as
/// `tau * (q / (tau * j)) * j` land on `q` rather than just below it.
const FLOOR_SLACK: f64 = 1e-9;

pub(crate) fn floor_du(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        0
    } else {
        (x + FLOOR_SLACK).floor() as u64
    }
}

/// Time the device needs to compress the first DU before it can transmit.
pub fn setup_time(profile: &CompressionProfile, f_d: f64) -> f64 {
    1.0 / (f_d * profile.j_offload)
}

/// Highest rate the compressor can feed at clock `f_d`, `W f_d J_d`.
pub fn compress_rate_limit(profile: &CompressionProfile, f_d: f64) -> f64 {
    profile.du_bits() * f_d * profile.j_offload
}

/// DUs that can be compressed and shipped in one slot at `rate`.
///
/// The first DU must be compressed before transmission starts, so the usable
/// airtime is `tau - 1 / (f_d J_d)`. Asking for more than the compressor can
/// feed is a contract error.
pub fn n_offload(profile: &CompressionProfile, f_d: f64, rate: f64, tau: f64) -> Result<u64> {
    if rate <= 0.0 {
        return Ok(0);
    }
    if f_d <= 0.0 {
        return Err(Error::Contract(format!(
            "offloading at {rate} b/s with a stopped compressor"
        )));
    }
    let limit = compress_rate_limit(profile, f_d);
    if rate > limit * (1.0 + 1e-9) {
        return Err(Error::Contract(format!(
            "rate {rate} b/s exceeds compressor throughput {limit} b/s"
        )));
    }
    let airtime = tau - setup_time(profile, f_d);
    if airtime <= 0.0 {
        return Ok(0);
    }
    Ok(floor_du(airtime * rate / profile.du_bits()))
}

/// Smallest rate that ships `n` DUs in one slot, or `None` when the setup
/// time leaves no airtime.
pub fn rate_for_offload(profile: &CompressionProfile, f_d: f64, n: u64, tau: f64) -> Option<f64> {
    if n == 0 {
        return Some(0.0);
    }
    let airtime = tau - setup_time(profile, f_d);
    (airtime > 0.0).then(|| n as f64 * profile.du_bits() / airtime)
}

/// DUs compressed and classified on the device in one slot.
pub fn n_local(profile: &CompressionProfile, f_d: f64, tau: f64) -> u64 {
    floor_du(tau * f_d * profile.j_local)
}

/// DUs classified by the server in one slot on a queue granted `f_ki` Hz.
pub fn n_server(profile: &CompressionProfile, f_ki: f64, tau: f64) -> u64 {
    floor_du(tau * f_ki * profile.j_server)
}

/// Average delay implied by an average backlog through Little's law.
/// `arrival_mean` is in DUs per slot.
pub fn delay_estimate(avg_q_tot: f64, arrival_mean: f64, tau: f64) -> f64 {
    if avg_q_tot <= 0.0 {
        return 0.0;
    }
    if arrival_mean <= 0.0 {
        return f64::INFINITY;
    }
    avg_q_tot / (arrival_mean / tau)
}

/// Which long-term constraints the virtual queues enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintFamily {
    /// Delay and accuracy (`Z`, `Y`).
    DelayAccuracy,
    /// Delay, device energy and server energy (`Z`, `S`, `O`).
    DelayEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueBank {
    pub q_ue: Vec<u64>,
    /// `q_es[k][i]`: DUs of device `k` compressed with profile `i` awaiting the server.
    pub q_es: Vec<Vec<u64>>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub o: f64,
    /// Running estimate of how often each profile is used for offloading.
    pub p_hat: Vec<Vec<f64>>,
    /// Offloading slots folded into `p_hat`.
    pub p_count: Vec<u64>,
}

/// What one device does to its queues in a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeTransfer {
    pub offload: bool,
    pub lut_index: usize,
    /// DUs the device could drain this slot (before clamping to its backlog).
    pub capacity: u64,
}

/// Observed per-slot quantities that drive the constraint queues.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualObservation {
    /// Accuracy of the profile each device selected.
    pub accuracy: Vec<f64>,
    /// Device energy (transmission + computation) per device, J.
    pub device_energy: Vec<f64>,
    pub server_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotInputs {
    pub transfers: Vec<UeTransfer>,
    /// Server DU capacity per `(k, i)` queue this slot.
    pub es_capacity: Vec<Vec<u64>>,
    pub arrivals: Vec<u64>,
    pub observation: VirtualObservation,
}

/// Realized delay-queue drift against its analytical upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftCheck {
    /// `(Z(t+1)^2 - Z(t)^2) / 2`.
    pub realized: f64,
    /// Single-step bound for `max(0, X + x - xbar)` queues.
    pub step_bound: f64,
    /// Step bound with the total queue expanded through the physical-queue
    /// recursion.
    pub expanded_bound: f64,
    /// Rounding allowance. `Z` is stored in floating point, so the realized
    /// change carries an error of order `eps * Z^2` however small it is.
    pub tolerance: f64,
}

impl DriftCheck {
    pub fn holds(&self) -> bool {
        self.realized <= self.step_bound + self.tolerance
            && self.step_bound <= self.expanded_bound + self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeTransition {
    /// DUs that left the device queue.
    pub served: u64,
    /// Of those, DUs pushed to the server.
    pub offloaded: u64,
    /// Of those, DUs classified on the device.
    pub local: u64,
    /// DUs the server classified for this device.
    pub server_classified: u64,
    pub q_tot: f64,
    pub drift: DriftCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueTransition {
    pub ues: Vec<UeTransition>,
}

impl QueueBank {
    pub fn new(fleet: &[UeConfig]) -> Self {
        let k = fleet.len();
        QueueBank {
            q_ue: vec![0; k],
            q_es: fleet.iter().map(|u| vec![0; u.lut_len()]).collect(),
            z: vec![0.0; k],
            y: vec![0.0; k],
            s: vec![0.0; k],
            o: 0.0,
            p_hat: fleet
                .iter()
                .map(|u| vec![1.0 / u.lut_len() as f64; u.lut_len()])
                .collect(),
            p_count: vec![0; k],
        }
    }

    pub fn num_ues(&self) -> usize {
        self.q_ue.len()
    }

    /// `Q_UE + sum_i p_i Q_ES,i` for device `k`.
    pub fn total_queue(&self, k: usize) -> f64 {
        self.q_ue[k] as f64
            + self.p_hat[k]
                .iter()
                .zip(&self.q_es[k])
                .map(|(p, q)| p * *q as f64)
                .sum::<f64>()
    }

    /// DUs held anywhere in the system.
    pub fn backlog(&self) -> u64 {
        self.q_ue.iter().sum::<u64>() + self.q_es.iter().flatten().sum::<u64>()
    }

    fn observe_profile(&mut self, k: usize, chosen: usize) {
        self.p_count[k] += 1;
        let n = self.p_count[k] as f64;
        for (i, p) in self.p_hat[k].iter_mut().enumerate() {
            let hit = if i == chosen { 1.0 } else { 0.0 };
            *p += (hit - *p) / n;
        }
    }

    /// Applies one slot: device service and arrivals, server service and
    /// hand-offs, profile estimates, then the virtual queues.
    #[allow(clippy::needless_range_loop)]
    pub fn advance_slot(
        &mut self,
        inputs: &SlotInputs,
        fleet: &[UeConfig],
        server: &EsConfig,
        tau: f64,
        family: ConstraintFamily,
    ) -> QueueTransition {
        let k_count = self.num_ues();
        let before_q_ue = self.q_ue.clone();
        let before_q_es = self.q_es.clone();
        let before_z = self.z.clone();

        let mut ues = Vec::with_capacity(k_count);
        let mut handed = vec![0u64; k_count];
        for k in 0..k_count {
            let t = inputs.transfers[k];
            let served = t.capacity.min(self.q_ue[k]);
            self.q_ue[k] = self.q_ue[k] - served + inputs.arrivals[k];
            let (offloaded, local) = if t.offload { (served, 0) } else { (0, served) };
            handed[k] = offloaded;

            let mut server_classified = 0;
            for (i, q) in self.q_es[k].iter_mut().enumerate() {
                let drained = inputs.es_capacity[k][i].min(*q);
                server_classified += drained;
                *q -= drained;
                if t.offload && i == t.lut_index {
                    *q += offloaded;
                }
            }
            if t.offload && offloaded > 0 {
                self.observe_profile(k, t.lut_index);
            }
            ues.push(UeTransition {
                served,
                offloaded,
                local,
                server_classified,
                q_tot: 0.0,
                drift: DriftCheck {
                    realized: 0.0,
                    step_bound: 0.0,
                    expanded_bound: 0.0,
                    tolerance: 0.0,
                },
            });
        }

        for k in 0..k_count {
            ues[k].q_tot = self.total_queue(k);
        }
        self.update_virtual(&inputs.observation, fleet, server, tau, family);

        for k in 0..k_count {
            let ue = &fleet[k];
            let mu = ue.step_sizes.mu;
            let q_avg = ue.queue_avg(tau);
            let dev = ues[k].q_tot - q_avg;
            let z0 = before_z[k];
            let realized = 0.5 * (self.z[k] * self.z[k] - z0 * z0);
            let cross = mu * z0 * dev;
            let step_bound = 0.5 * mu * mu * dev * dev + cross;

            let sq = |x: u64| (x as f64) * (x as f64);
            let (q, a, n) = (
                before_q_ue[k] as f64,
                inputs.arrivals[k] as f64,
                ues[k].served as f64,
            );
            let mut expanded = q * q + a * a + n * n + 2.0 * q * (a - n);
            for i in 0..self.q_es[k].len() {
                let p = self.p_hat[k][i];
                let qi = before_q_es[k][i] as f64;
                let ai = if inputs.transfers[k].offload && i == inputs.transfers[k].lut_index {
                    handed[k]
                } else {
                    0
                };
                let ni = inputs.es_capacity[k][i].min(before_q_es[k][i]);
                expanded += p * qi * qi + sq(ai) + sq(ni) + 2.0 * p * qi * (ai as f64 - ni as f64);
            }
            expanded += q_avg * q_avg;
            let terms = (self.q_es[k].len() + 2) as f64;
            let magnitude = z0 * z0 + self.z[k] * self.z[k] + (mu * dev).powi(2) + cross.abs();
            ues[k].drift = DriftCheck {
                realized,
                step_bound,
                expanded_bound: 0.5 * mu * mu * terms * expanded + cross,
                tolerance: 1e-9 + 1e-12 * magnitude,
            };
        }

        QueueTransition { ues }
    }

    /// Advances the constraint queues with this slot's observations. Must run
    /// after the physical queues so `Z` sees the post-slot total queue.
    pub fn update_virtual(
        &mut self,
        obs: &VirtualObservation,
        fleet: &[UeConfig],
        server: &EsConfig,
        tau: f64,
        family: ConstraintFamily,
    ) {
        for (k, ue) in fleet.iter().enumerate() {
            let mu = ue.step_sizes.mu;
            self.z[k] = (self.z[k] + mu * (self.total_queue(k) - ue.queue_avg(tau))).max(0.0);
            match family {
                ConstraintFamily::DelayAccuracy => {
                    let nu = ue.step_sizes.nu;
                    self.y[k] =
                        (self.y[k] + nu * (ue.constraints.accuracy_avg - obs.accuracy[k])).max(0.0);
                }
                ConstraintFamily::DelayEnergy => {
                    let lambda = ue.step_sizes.lambda;
                    self.s[k] = (self.s[k]
                        + lambda * (obs.device_energy[k] - ue.constraints.energy_avg))
                        .max(0.0);
                }
            }
        }
        if family == ConstraintFamily::DelayEnergy {
            self.o = (self.o + server.eta * (obs.server_energy - server.energy_avg)).max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lut, ChannelScenario, StepSizes, UeConstraints, KAPPA_REF};

    fn ue(lut: Vec<CompressionProfile>) -> UeConfig {
        UeConfig {
            id: 0,
            lut,
            freq_set: crate::model::uniform_freq_set(1.4e9, 10),
            kappa: KAPPA_REF,
            p_tx_max: 0.1,
            channel: ChannelScenario::preset_b(),
            delta: 1.0,
            arrival_mean: 2.0,
            constraints: UeConstraints {
                delay_avg: 0.2,
                accuracy_avg: 0.9,
                energy_avg: 0.1,
            },
            step_sizes: StepSizes::default(),
        }
    }

    fn server() -> EsConfig {
        EsConfig {
            freq_set: crate::model::uniform_freq_set(4.5e9, 10),
            kappa: KAPPA_REF,
            gamma: 0.5,
            eta: 1.0,
            energy_avg: 0.2,
        }
    }

    fn idle_inputs(fleet: &[UeConfig], arrivals: Vec<u64>) -> SlotInputs {
        SlotInputs {
            transfers: fleet
                .iter()
                .map(|_| UeTransfer {
                    offload: false,
                    lut_index: 0,
                    capacity: 0,
                })
                .collect(),
            es_capacity: fleet.iter().map(|u| vec![0; u.lut_len()]).collect(),
            arrivals,
            observation: VirtualObservation {
                accuracy: vec![1.0; fleet.len()],
                device_energy: vec![0.0; fleet.len()],
                server_energy: 0.0,
            },
        }
    }

    #[test]
    fn counts_at_zero_are_zero() {
        let p = &lut::deep_ce()[0];
        assert_eq!(n_offload(p, 1e9, 0.0, 0.05).unwrap(), 0);
        assert_eq!(n_local(p, 0.0, 0.05), 0);
        assert_eq!(n_server(p, 0.0, 0.05), 0);
    }

    #[test]
    fn local_count_reference() {
        // 0.05 * 1.4e9 * 8.35e-8 = 5.845
        assert_eq!(n_local(&lut::deep_ce()[0], 1.4e9, 0.05), 5);
    }

    #[test]
    fn server_count_reference() {
        // 0.05 * 4.5e9 * 6.25e-7 = 140.625
        assert_eq!(n_server(&lut::deep_ce()[5], 4.5e9, 0.05), 140);
    }

    #[test]
    fn offload_over_compressor_rate_is_contract_error() {
        let p = &lut::deep_ce()[5];
        let limit = compress_rate_limit(p, 1e8);
        assert!(matches!(
            n_offload(p, 1e8, limit * 1.01, 0.05),
            Err(Error::Contract(_))
        ));
        assert!(n_offload(p, 1e8, limit, 0.05).is_ok());
    }

    #[test]
    fn offload_reference_with_setup_time() {
        // W = 384 b, R = 9 W / tau: nine DUs of airtime minus the setup slice.
        let p = &lut::deep_ce()[5];
        let rate = 384.0 / 0.05 * 9.0;
        let f = 1.4e9;
        let airtime = 0.05 - 1.0 / (f * p.j_offload);
        let expected = (airtime * rate / 384.0).floor() as u64;
        assert_eq!(n_offload(p, f, rate, 0.05).unwrap(), expected);
        assert!(expected == 8 || expected == 9);
    }

    #[test]
    fn rate_for_offload_hits_its_count() {
        let lut = lut::short_ce();
        for p in &lut {
            for &f in &[2.8e8, 7e8, 1.4e9] {
                for n in 0..20 {
                    if let Some(r) = rate_for_offload(p, f, n, 0.05) {
                        if r <= compress_rate_limit(p, f) {
                            assert_eq!(n_offload(p, f, r, 0.05).unwrap(), n);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn delay_little_law() {
        assert!((delay_estimate(4.0, 2.0, 0.05) - 0.1).abs() < 1e-15);
        assert_eq!(delay_estimate(0.0, 2.0, 0.05), 0.0);
        let u = ue(lut::deep_ce());
        assert!((delay_estimate(u.queue_avg(0.05), 2.0, 0.05) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn total_queue_cases() {
        let fleet = vec![ue(lut::deep_ce())];
        let mut bank = QueueBank::new(&fleet);
        bank.q_ue[0] = 5;
        assert_eq!(bank.total_queue(0), 5.0);
        bank.q_es[0] = vec![6; 6];
        assert!((bank.total_queue(0) - 11.0).abs() < 1e-12);

        let single = vec![ue(vec![lut::deep_ce()[0].clone()])];
        let mut b1 = QueueBank::new(&single);
        b1.q_ue[0] = 3;
        b1.q_es[0][0] = 4;
        assert_eq!(b1.total_queue(0), 7.0);
    }

    #[test]
    fn identity_slot_leaves_bank_unchanged() {
        let fleet = vec![ue(lut::deep_ce()), ue(lut::short_ce())];
        let mut bank = QueueBank::new(&fleet);
        let before = bank.clone();
        let mut inputs = idle_inputs(&fleet, vec![0, 0]);
        inputs.observation.accuracy = vec![0.95, 0.95];
        bank.advance_slot(
            &inputs,
            &fleet,
            &server(),
            0.05,
            ConstraintFamily::DelayAccuracy,
        );
        assert_eq!(bank, before);
    }

    #[test]
    fn offload_moves_at_most_the_backlog() {
        let fleet = vec![ue(lut::deep_ce())];
        let mut bank = QueueBank::new(&fleet);
        bank.q_ue[0] = 3;
        let mut inputs = idle_inputs(&fleet, vec![2]);
        inputs.transfers[0] = UeTransfer {
            offload: true,
            lut_index: 2,
            capacity: 5,
        };
        let tr = bank.advance_slot(
            &inputs,
            &fleet,
            &server(),
            0.05,
            ConstraintFamily::DelayAccuracy,
        );
        assert_eq!(bank.q_es[0][2], 3);
        assert_eq!(bank.q_ue[0], 2);
        assert_eq!(tr.ues[0].offloaded, 3);
        assert_eq!(bank.p_hat[0][2], 1.0);
        assert!(tr.ues[0].drift.holds());
    }

    #[test]
    fn constraint_met_with_equality_keeps_z_at_zero() {
        let fleet = vec![ue(lut::deep_ce())];
        let mut bank = QueueBank::new(&fleet);
        // Q_avg = 0.2 * 2 / 0.05 = 8 DUs held on the device, nothing served.
        bank.q_ue[0] = 8;
        for _ in 0..50 {
            let mut inputs = idle_inputs(&fleet, vec![0]);
            inputs.observation.accuracy = vec![0.95];
            bank.advance_slot(
                &inputs,
                &fleet,
                &server(),
                0.05,
                ConstraintFamily::DelayAccuracy,
            );
            assert_eq!(bank.z[0], 0.0);
            assert_eq!(bank.y[0], 0.0);
        }
    }

    #[test]
    fn constant_violation_grows_z_linearly() {
        let fleet = vec![ue(lut::deep_ce())];
        let mut bank = QueueBank::new(&fleet);
        bank.q_ue[0] = 9;
        for t in 1..=20 {
            let inputs = idle_inputs(&fleet, vec![0]);
            bank.advance_slot(
                &inputs,
                &fleet,
                &server(),
                0.05,
                ConstraintFamily::DelayAccuracy,
            );
            assert!((bank.z[0] - t as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_queues_track_overspend() {
        let fleet = vec![ue(lut::deep_ce())];
        let mut bank = QueueBank::new(&fleet);
        let mut inputs = idle_inputs(&fleet, vec![0]);
        inputs.observation.device_energy = vec![0.15];
        inputs.observation.server_energy = 0.5;
        bank.advance_slot(
            &inputs,
            &fleet,
            &server(),
            0.05,
            ConstraintFamily::DelayEnergy,
        );
        assert!((bank.s[0] - 0.05).abs() < 1e-12);
        assert!((bank.o - 0.3).abs() < 1e-12);
        assert_eq!(bank.y[0], 0.0);
    }

    #[test]
    fn p_hat_starts_uniform_and_stays_normalized() {
        let fleet = vec![ue(lut::deep_ce())];
        let mut bank = QueueBank::new(&fleet);
        assert!(bank.p_hat[0].iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));
        for t in 0..100u64 {
            bank.q_ue[0] = 2;
            let mut inputs = idle_inputs(&fleet, vec![0]);
            inputs.transfers[0] = UeTransfer {
                offload: true,
                lut_index: (t % 3) as usize,
                capacity: 1,
            };
            bank.advance_slot(
                &inputs,
                &fleet,
                &server(),
                0.05,
                ConstraintFamily::DelayAccuracy,
            );
            let sum: f64 = bank.p_hat[0].iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        assert!((bank.p_hat[0][0] - 34.0 / 100.0).abs() < 1e-12);
    }
}
