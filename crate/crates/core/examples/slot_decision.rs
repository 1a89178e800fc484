//! One slot of both controllers on a hand-built state.

use goc_edge::channel::ChannelState;
use goc_edge::experiments::{baselines_k3, made_k3};
use goc_edge::policies::{made_ue_step, meda_es_step, meda_ue_step, SlotState};
use goc_edge::queueing::QueueBank;
use goc_edge::PolicyKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = baselines_k3(PolicyKind::MuMeda);
    let mut queues = QueueBank::new(&config.fleet);
    queues.q_ue = vec![6, 2, 9];
    queues.z = vec![40.0, 0.0, 250.0];
    queues.y = vec![10.0, 80.0, 0.0];
    queues.q_es[2][3] = 5;
    let channels = config
        .fleet
        .iter()
        .enumerate()
        .map(|(k, ue)| ChannelState {
            gain_sq: ue.channel.pathloss_gain,
            slot: k as u64,
        })
        .collect();
    let state = SlotState {
        slot: 0,
        channels,
        queues,
    };

    println!("energy-minimizing controller:");
    for k in 0..config.num_ues() {
        let d = meda_ue_step(k, &state, &config)?;
        println!(
            "  ue{k}: {} rho={} f_d={:.2} GHz R={:.3} Mb/s service={} DU E={:.2} mJ",
            if d.action.offload {
                "offload"
            } else {
                "local  "
            },
            d.action.rho,
            d.action.f_d / 1e9,
            d.action.rate / 1e6,
            d.service,
            (d.e_tx + d.e_comp) * 1e3
        );
    }
    let es = meda_es_step(&state, &config);
    println!(
        "  server: f_s = {:.2} GHz, E = {:.2} mJ",
        es.action.f_s / 1e9,
        es.energy * 1e3
    );

    let made = made_k3(1e5);
    let mut queues = QueueBank::new(&made.fleet);
    queues.q_ue = state.queues.q_ue.clone();
    queues.z = state.queues.z.clone();
    queues.s = vec![0.5, 3.0, 20.0];
    let state = SlotState { queues, ..state };
    println!("accuracy-maximizing controller:");
    for k in 0..made.num_ues() {
        let d = made_ue_step(k, &state, &made)?;
        println!(
            "  ue{k}: {} accuracy={:.3} service={} DU",
            if d.action.offload {
                "offload"
            } else {
                "local  "
            },
            made.fleet[k].lut[d.action.lut_index].accuracy,
            d.service
        );
    }
    Ok(())
}
