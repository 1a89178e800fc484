use goc_edge::engine;
use goc_edge::experiments::{self, made_k3, BundleOptions};
use goc_edge::io::{
    read_rows, read_slot_log, read_summaries, read_summaries_from, summary_header, write_rows,
    write_summaries, write_summaries_to, EnergyTraceRow, OffloadRow, SlotLogWriter, SummaryRow,
};

fn small_made() -> goc_edge::Config {
    let mut c = made_k3(1e5);
    c.sim.horizon = 200;
    c.sim.warmup = 50;
    c
}

#[test]
fn summary_csv_round_trip() {
    let runs = engine::sweep(&small_made(), &[1e3, 1e5]).unwrap();
    let mut buf = Vec::new();
    write_summaries_to(&mut buf, &runs).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let first = text.lines().next().unwrap();
    assert_eq!(first, summary_header(3).join(","));
    let rows = read_summaries_from(text.as_bytes()).unwrap();
    let expected: Vec<SummaryRow> = runs.iter().map(SummaryRow::from).collect();
    assert_eq!(rows, expected);
}

#[test]
fn summaries_must_share_fleet_size() {
    let a = engine::run(&small_made()).unwrap();
    let mut b = a.clone();
    b.ues.pop();
    assert!(write_summaries_to(Vec::new(), &[a, b]).is_err());
}

#[test]
fn slot_log_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("slots.jsonl");
    let (_, records) = engine::run_recorded(&small_made()).unwrap();
    let mut w = SlotLogWriter::create(&path).unwrap();
    for r in &records {
        w.write(r).unwrap();
    }
    w.finish().unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), records.len());
    assert!(text.ends_with('\n'));
    assert_eq!(read_slot_log(&path).unwrap(), records);
}

#[test]
fn auxiliary_csv_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let hist = vec![OffloadRow {
        label: "x".into(),
        v: 1e6,
        ue: 2,
        channel: "B".into(),
        offload_pct: 12.5,
    }];
    let p = tmp.path().join("h.csv");
    write_rows(&p, &hist).unwrap();
    assert_eq!(
        std::fs::read_to_string(&p).unwrap(),
        "label,v,ue,channel,offload_pct\nx,1000000.0,2,B,12.5\n"
    );
    assert_eq!(read_rows::<OffloadRow>(&p).unwrap(), hist);

    let trace = vec![EnergyTraceRow {
        policy: "mu_meda".into(),
        slot: 7,
        ue: 0,
        energy_j: 0.001,
    }];
    let p = tmp.path().join("t.csv");
    write_rows(&p, &trace).unwrap();
    assert_eq!(read_rows::<EnergyTraceRow>(&p).unwrap(), trace);
}

#[test]
fn every_bundle_csv_parses_with_constant_width() {
    let tmp = tempfile::tempdir().unwrap();
    let opts = BundleOptions {
        horizon: Some(120),
        warmup: None,
        seed: Some(3),
        v_grid: Some(vec![1e3, 1e6]),
    };
    for name in experiments::EXPERIMENTS {
        let dir = tmp.path().join(name);
        let out = experiments::run_bundle(name, &opts, &dir).unwrap();
        assert!(!out.files.is_empty());
        let summary = dir.join("all.csv");
        write_summaries(&summary, &out.summaries).unwrap();
        assert_eq!(read_summaries(&summary).unwrap().len(), out.summaries.len());
        for f in &out.files {
            let mut r = csv::Reader::from_path(f).unwrap();
            let width = r.headers().unwrap().len();
            let mut n = 0;
            for rec in r.records() {
                assert_eq!(rec.unwrap().len(), width, "{}", f.display());
                n += 1;
            }
            assert!(n > 0, "{} is empty", f.display());
        }
    }
}
