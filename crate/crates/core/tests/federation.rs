use std::sync::Arc;
use std::thread;

use gafed::fed::{
    aggregate, epoch_seed, local_update, run_client, run_server, simulate, simulate_with, ClientEntry, FederationConfig,
    LocalHyper, Uniform,
};
use gafed::gaf::GafImage;
use gafed::ingest::BeatLabel;
use gafed::nn::{init_params, train_epoch, AdamState, ModelSpec};
use gafed::transport::{
    backend_registry, loopback_channel_pair, Channel, CommStats, Frame, Message, MessageType, TrafficModel,
};
use gafed::Error;

fn small_spec() -> ModelSpec {
    ModelSpec { c1: 2, c2: 2, c3: 2, c4: 2, fc: 8, classes: 5, alpha: 0.01 }
}

fn images(n: usize, seed: usize) -> Vec<GafImage> {
    (0..n)
        .map(|i| GafImage {
            size: 32,
            pixels: (0..1024).map(|j| (((i * 17 + j * 3 + seed * 7) % 29) as f32 / 14.0) - 1.0).collect(),
            label: BeatLabel::ALL[(i + seed) % 5],
            method: "gasf".into(),
        })
        .collect()
}

fn config(ids: &[&str], rounds: u32, epochs: u32) -> FederationConfig {
    let share = 1.0 / ids.len() as f64;
    let mut clients: Vec<ClientEntry> = ids.iter().map(|id| ClientEntry { id: id.to_string(), share }).collect();
    let rest: f64 = clients[1..].iter().map(|c| c.share).sum();
    clients[0].share = 1.0 - rest;
    FederationConfig { rounds, local_epochs: epochs, batch_size: 8, seed: 11, clients, model: small_spec(), ..Default::default() }
}

#[test]
fn three_clients_ten_rounds() {
    let cfg = config(&["c", "a", "b"], 10, 1);
    let shards = vec![images(6, 0), images(5, 1), images(4, 2)];
    let sim = simulate(&cfg, &shards, None).unwrap();
    assert_eq!(sim.run.rounds.len(), 10);
    for (i, r) in sim.run.rounds.iter().enumerate() {
        assert_eq!(r.round, i as u32 + 1);
        let ids: Vec<&str> = r.clients.iter().map(|c| c.client_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }
    assert_eq!(sim.updates_sent, vec![10, 10, 10]);
    for s in &sim.client_stats {
        assert_eq!(s.received_of(MessageType::GlobalModel), 10);
        assert_eq!(s.received_of(MessageType::Done), 1);
        assert_eq!(s.sent_of(MessageType::LocalUpdate), 10);
    }
}

#[test]
fn traffic_matches_formula_and_grows_every_round() {
    let cfg = config(&["a", "b"], 3, 1);
    let shards = vec![images(4, 0), images(4, 1)];
    let sim = simulate(&cfg, &shards, None).unwrap();
    let t = TrafficModel::new(1, &init_params(&cfg.model, 0).unwrap());
    let (sent, received) = t.server_totals(2, 3);
    assert_eq!(sim.server_stats.bytes_sent, sent + 2 * t.done);
    assert_eq!(sim.server_stats.bytes_received, received);
    let mut prev = (0, 2 * t.register);
    for r in &sim.run.rounds {
        assert_eq!(r.bytes_sent - prev.0, 2 * t.global_model);
        assert_eq!(r.bytes_received - prev.1, 2 * t.local_update);
        prev = (r.bytes_sent, r.bytes_received);
    }
}

#[test]
fn single_client_equals_sequential_training() {
    let cfg = config(&["solo"], 3, 2);
    let shard = images(20, 3);
    let sim = simulate(&cfg, std::slice::from_ref(&shard), None).unwrap();

    let mut params = init_params(&cfg.model, cfg.seed).unwrap();
    for round in 1..=3 {
        let mut state = AdamState::new(cfg.adam_config(), &params);
        for epoch in 0..2 {
            train_epoch(&mut params, &cfg.model, &mut state, &shard, cfg.batch_size, epoch_seed(cfg.seed, "solo", round, epoch))
                .unwrap();
        }
    }
    assert!(sim.run.params.bitwise_eq(&params));
}

#[test]
fn loopback_and_tcp_agree() {
    let mut cfg = config(&["a", "b"], 2, 1);
    let shards = vec![images(5, 0), images(3, 1)];
    let reg = backend_registry();
    let lo = simulate_with(&cfg, reg.get("loopback").unwrap(), &shards, None).unwrap();
    cfg.transport.mode = "tcp".into();
    let tcp = simulate(&cfg, &shards, None).unwrap();
    assert!(lo.run.params.bitwise_eq(&tcp.run.params));
    assert_eq!(lo.server_stats, tcp.server_stats);
    assert_eq!(lo.client_stats, tcp.client_stats);
    assert_eq!(lo.run.rounds, tcp.run.rounds);
}

#[test]
fn zero_rounds_rejected() {
    let cfg = config(&["a"], 0, 1);
    let err = simulate(&cfg, &[images(2, 0)], None).unwrap_err();
    assert!(matches!(err.error, Error::Config(_)));
}

#[test]
fn client_sees_done_before_any_round() {
    let (mut server, mut client) = loopback_channel_pair(Arc::new(CommStats::new()), Arc::new(CommStats::new()));
    let peer = thread::spawn(move || {
        assert!(matches!(server.recv_message().unwrap(), Message::Register { .. }));
        server.send_message(&Message::Done).unwrap();
    });
    let hyper = LocalHyper::from(&config(&["a"], 1, 1));
    assert_eq!(run_client(&mut client, "a", &small_spec(), &hyper, &images(2, 0)).unwrap(), 0);
    peer.join().unwrap();
}

#[test]
fn client_rejects_malformed_frames_and_mismatched_models() {
    let hyper = LocalHyper::from(&config(&["a"], 1, 1));
    for bad in [
        Frame::new(MessageType::GlobalModel, vec![1, 2, 3]),
        Frame::new(MessageType::LocalUpdate, vec![]),
        (Message::GlobalModel { params: init_params(&ModelSpec::default(), 0).unwrap() }).to_frame().unwrap(),
    ] {
        let (mut server, mut client) = loopback_channel_pair(Arc::new(CommStats::new()), Arc::new(CommStats::new()));
        server.send_frame(&bad).unwrap();
        let err = run_client(&mut client, "a", &small_spec(), &hyper, &images(2, 0)).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "{err:?}");
    }
}

#[test]
fn client_connection_loss_is_client_abort() {
    let (server, mut client) = loopback_channel_pair(Arc::new(CommStats::new()), Arc::new(CommStats::new()));
    drop(server);
    let hyper = LocalHyper::from(&config(&["a"], 1, 1));
    let err = run_client(&mut client, "a", &small_spec(), &hyper, &images(2, 0)).unwrap_err();
    assert!(matches!(err, Error::ClientAbort(_)));
}

/// A peer that registers, takes `answer` rounds, then misbehaves by
/// hanging up or going silent.
fn flaky_peer(mut ch: Box<dyn Channel>, id: &str, answer: u32, hang_up: bool) -> thread::JoinHandle<()> {
    let id = id.to_string();
    thread::spawn(move || {
        ch.send_message(&Message::Register { client_id: id }).unwrap();
        for round in 1..=answer {
            let Message::GlobalModel { params } = ch.recv_message().unwrap() else { panic!() };
            let u = gafed::transport::UpdatePayload { round, sample_count: 1, mean_loss: 0.0, accuracy: 0.0, params };
            ch.send_message(&Message::LocalUpdate(u)).unwrap();
        }
        if hang_up {
            drop(ch);
        } else {
            let _ = ch.recv_message();
            std::thread::sleep(std::time::Duration::from_millis(500));
        }
    })
}

#[test]
fn disconnect_and_timeout_abort_the_round() {
    for hang_up in [true, false] {
        let mut cfg = config(&["good", "bad"], 3, 1);
        cfg.transport.timeout_sec = 0.2;
        let stats = Arc::new(CommStats::new());
        let (s1, c1) = loopback_channel_pair(Arc::clone(&stats), Arc::new(CommStats::new()));
        let (s2, c2) = loopback_channel_pair(Arc::clone(&stats), Arc::new(CommStats::new()));
        let peers = [flaky_peer(Box::new(c1), "good", 3, true), flaky_peer(Box::new(c2), "bad", 1, hang_up)];
        let err = run_server(&cfg, vec![Box::new(s1), Box::new(s2)], &stats, None).unwrap_err();
        match &err.error {
            Error::RoundAbort { round, client, reason } => {
                assert_eq!((*round, client.as_str()), (2, "bad"));
                assert_eq!(reason, if hang_up { "disconnected" } else { "timed out" });
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(err.partial.rounds.len(), 1);
        for p in peers {
            let _ = p.join();
        }
    }
}

#[test]
fn unknown_and_duplicate_registrations() {
    for ids in [["a", "zzz"], ["a", "a"]] {
        let cfg = config(&["a", "b"], 1, 1);
        let stats = Arc::new(CommStats::new());
        let mut server_ends: Vec<Box<dyn Channel>> = Vec::new();
        for id in ids {
            let (s, mut c) = loopback_channel_pair(Arc::clone(&stats), Arc::new(CommStats::new()));
            c.send_message(&Message::Register { client_id: id.into() }).unwrap();
            std::mem::forget(c);
            server_ends.push(Box::new(s));
        }
        let err = run_server(&cfg, server_ends, &stats, None).unwrap_err();
        assert!(matches!(err.error, Error::Protocol(_)), "{:?}", err.error);
    }
}

#[test]
fn ablation_drops_a_client() {
    let cfg = config(&["a", "b", "pi"], 1, 1);
    let shards = vec![images(4, 0), images(4, 1)];
    let smaller = cfg.without_client("pi").unwrap();
    let sim = simulate(&smaller, &shards, None).unwrap();
    assert_eq!(sim.run.rounds[0].clients.len(), 2);
}

#[test]
fn relabeling_clients_keeps_predictions() {
    let shards = [images(6, 0), images(6, 1)];
    let spec = small_spec();
    let global = init_params(&spec, 5).unwrap();
    let hyper = LocalHyper::from(&config(&["a", "b"], 1, 1));
    let run = |ids: [&str; 2]| {
        let ups: Vec<_> = ids
            .iter()
            .zip(&shards)
            .map(|(id, s)| {
                let mut u = local_update(&global, &spec, s, &hyper, "fixed", 1).unwrap();
                u.client_id = id.to_string();
                u
            })
            .collect();
        aggregate(&ups, &Uniform).unwrap()
    };
    let a = run(["x", "y"]);
    let b = run(["y", "x"]);
    assert!(a.max_abs_diff(&b) <= 1e-6);
    let test = images(25, 4);
    let la = gafed::nn::forward(&a, &spec, &test).unwrap();
    let lb = gafed::nn::forward(&b, &spec, &test).unwrap();
    for (x, y) in la.data().chunks(5).zip(lb.data().chunks(5)) {
        assert_eq!(gafed::nn::argmax(x), gafed::nn::argmax(y));
    }
}
