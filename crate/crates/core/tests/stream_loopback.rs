use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use proptest::prelude::*;
use softconform::eval::synthetic::{process_like_model, SyntheticStream};
use softconform::stream::{emit_tcp, listen_tcp, EmitOptions, ListenOptions, TcpEventSource};
use softconform::{
    prepare_for_conformance, replay_log, EventLog, Rate, ReplayMode, ReplaySchedule, StreamEvent,
    Trace,
};

fn sample_log() -> EventLog {
    let mut log = EventLog::new();
    for (i, labels) in [
        vec!["A", "B", "C"],
        vec!["A", "A", "B", "C"],
        vec!["X"],
        vec!["B", "C", "A", "B"],
    ]
    .iter()
    .enumerate()
    {
        log.push(
            format!("case{i}"),
            Trace::from_labels("name", labels).unwrap(),
        )
        .unwrap();
    }
    log
}

#[test]
fn emit_then_listen_reproduces_replay() {
    let events = replay_log(
        &sample_log(),
        "name",
        &ReplaySchedule::new(ReplayMode::Shuffle(3)),
    )
    .unwrap();
    let source = TcpEventSource::bind("127.0.0.1:0").unwrap();
    let addr = source.local_addr().unwrap().to_string();
    let rx = source.events(ListenOptions::connections(1)).unwrap();
    let sent = events.clone();
    let emitter = thread::spawn(move || emit_tcp(&sent, &addr, &EmitOptions::default()).unwrap());
    let received: Vec<StreamEvent> = rx.collect();
    let report = emitter.join().unwrap();
    assert_eq!(report.sent, events.len() as u64);
    assert_eq!(received, events);
}

#[test]
fn unthrottled_hundred_thousand_events() {
    let s = prepare_for_conformance(&process_like_model(20, 1), 0.9).unwrap();
    let events: Vec<StreamEvent> = SyntheticStream::new(s, 500, 40, 2).take(100_000).collect();
    let source = TcpEventSource::bind("127.0.0.1:0").unwrap();
    let addr = source.local_addr().unwrap().to_string();
    let mut rx = source.events(ListenOptions::connections(1)).unwrap();
    let sent = events.clone();
    let emitter = thread::spawn(move || emit_tcp(&sent, &addr, &EmitOptions::default()).unwrap());
    let received: Vec<StreamEvent> = rx.by_ref().collect();
    emitter.join().unwrap();
    assert_eq!(rx.stats().malformed, 0);
    assert_eq!(received.len(), 100_000);
    assert_eq!(received, events);
}

#[test]
fn throttled_rate_is_honoured() {
    let source = TcpEventSource::bind("127.0.0.1:0").unwrap();
    let addr = source.local_addr().unwrap().to_string();
    let rx = source.events(ListenOptions::connections(1)).unwrap();
    let emitter = thread::spawn(move || {
        let endless = (1..).map(|k| StreamEvent::new(format!("c{}", k % 7), "A", k));
        let opts = EmitOptions {
            rate: Rate::PerSecond(100.0),
            duration: Some(Duration::from_secs(10)),
            ..EmitOptions::default()
        };
        emit_tcp(endless, &addr, &opts).unwrap()
    });
    let received = rx.count();
    let report = emitter.join().unwrap();
    assert!((950..=1050).contains(&received), "received {received}");
    assert_eq!(report.sent, received as u64);
    assert!((report.achieved_rate() - 100.0).abs() < 5.0, "{report:?}");
}

#[test]
fn merges_several_producers_in_one_order() {
    let source = TcpEventSource::bind("127.0.0.1:0").unwrap();
    let addr = source.local_addr().unwrap();
    let rx = source.events(ListenOptions::connections(3)).unwrap();
    let producers: Vec<_> = (0..3)
        .map(|p| {
            thread::spawn(move || {
                let mut s = TcpStream::connect(addr).unwrap();
                for k in 0..500 {
                    writeln!(s, "p{p}-{},L{k}", k % 10).unwrap();
                }
                writeln!(s, "garbage").unwrap();
            })
        })
        .collect();
    let mut rx = rx;
    let events: Vec<StreamEvent> = rx.by_ref().collect();
    for p in producers {
        p.join().unwrap();
    }
    assert_eq!(events.len(), 1500);
    assert_eq!(rx.stats().malformed, 3);
    assert!(events
        .windows(2)
        .all(|w| w[0].arrival_index + 1 == w[1].arrival_index));
    // per-connection order survives the merge
    for p in 0..3 {
        let mine: Vec<u32> = events
            .iter()
            .filter(|e| e.case_id.starts_with(&format!("p{p}-")))
            .map(|e| e.accomplishment[1..].parse().unwrap())
            .collect();
        assert_eq!(mine, (0..500).collect::<Vec<_>>());
    }
}

#[test]
fn listen_tcp_callback() {
    let probe = TcpEventSource::bind("127.0.0.1:0").unwrap();
    let addr = probe.local_addr().unwrap();
    drop(probe);
    let producer = thread::spawn(move || {
        for _ in 0..50 {
            if let Ok(mut s) = TcpStream::connect(addr) {
                s.write_all(b"c1,A\nc1,B,2019-06-24T10:00:00\nc1\n")
                    .unwrap();
                return;
            }
            thread::sleep(Duration::from_millis(20));
        }
        panic!("listener never came up");
    });
    let mut got = Vec::new();
    let stats = listen_tcp(addr, ListenOptions::connections(1), |e| got.push(e)).unwrap();
    producer.join().unwrap();
    assert_eq!(
        got,
        vec![
            StreamEvent::new("c1", "A", 1),
            StreamEvent::new("c1", "B", 2)
        ]
    );
    assert_eq!(stats.malformed, 1);
}

fn positions(events: &[StreamEvent]) -> BTreeSet<(String, String, usize)> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    events
        .iter()
        .map(|e| {
            let k = seen.entry(&e.case_id).or_insert(0);
            *k += 1;
            (e.case_id.clone(), e.accomplishment.clone(), *k)
        })
        .collect()
}

proptest! {
    #[test]
    fn every_schedule_emits_each_event_once(
        traces in proptest::collection::vec(proptest::collection::vec("[A-D]", 1..8), 1..15),
        seed in any::<u64>(),
    ) {
        let mut log = EventLog::new();
        for (i, t) in traces.iter().enumerate() {
            log.push(format!("c{i}"), Trace::from_labels("name", t).unwrap()).unwrap();
        }
        let baseline = replay_log(&log, "name", &ReplaySchedule::new(ReplayMode::Sequential)).unwrap();
        let total: usize = traces.iter().map(Vec::len).sum();
        prop_assert_eq!(baseline.len(), total);
        for mode in [ReplayMode::RoundRobin, ReplayMode::Shuffle(seed)] {
            let ev = replay_log(&log, "name", &ReplaySchedule::new(mode)).unwrap();
            prop_assert_eq!(ev.len(), total);
            prop_assert_eq!(positions(&ev), positions(&baseline));
            prop_assert!(ev.iter().enumerate().all(|(k, e)| e.arrival_index == k as u64 + 1));
        }
    }
}
