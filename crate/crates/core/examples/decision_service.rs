//! The whole loop in one process: a node streams a half day of telemetry to
//! the service, an operator forces the pump off for ten minutes over HTTP,
//! and the service reports what it learned.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::thread;
use std::time::Duration;

use agrisim::edge::link::NodeLink;
use agrisim::edge::{IrrigationPolicy, PumpReason, ScenarioConfig, ScenarioRunner};
use agrisim::service::{Clock, ServeOptions, Server, ServiceConfig};

fn http(addr: SocketAddr, method: &str, path: &str, body: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    let status = resp.split(' ').nth(1).unwrap_or("?").to_string();
    let body = resp.split("\r\n\r\n").nth(1).unwrap_or("");
    format!("{status} {body}")
}

fn main() {
    let store = tempfile::tempdir().unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let mut opts = ServeOptions::new(0, store.path());
    opts.ingest_port = Some(0);
    opts.config = ServiceConfig {
        clock: Clock::Log,
        ..ServiceConfig::default()
    };
    let server = rt.block_on(Server::bind(opts)).unwrap();
    let (api, ingest) = (server.http_addr().unwrap(), server.ingest_addr().unwrap());
    let svc = server.service();
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let serving = rt.spawn(server.run(async {
        let _ = stopped.await;
    }));
    println!("api {api}, ingest {ingest}");

    let mut cfg = ScenarioConfig::new(
        12.0 * 3600.0,
        IrrigationPolicy {
            tick_s: 10.0,
            ..IrrigationPolicy::default()
        },
    );
    cfg.initial.moisture = 0.37;
    let mut runner = ScenarioRunner::new(cfg).unwrap();
    let mut link = NodeLink::connect(ingest).unwrap();
    let mut sent = 0u64;
    let mut forced_ticks = 0;
    while let Some(tick) = runner.step() {
        link.send(&tick.record).unwrap();
        sent += 1;
        if sent == 100 {
            // wait for the first records to land so the node is known
            while svc.read().unwrap().store().ingested() < sent {
                thread::sleep(Duration::from_millis(1));
            }
            println!(
                "override: {}",
                http(
                    api,
                    "POST",
                    "/api/override",
                    r#"{"node":"n1","state":"off","ttl_s":600}"#
                )
            );
            thread::sleep(Duration::from_millis(50));
        }
        for d in link.drain() {
            println!("node got {}", d.to_line());
            runner.apply_override(d.state, d.ttl_s);
        }
        if tick.command.reason == PumpReason::Override {
            forced_ticks += 1;
        }
    }
    while svc.read().unwrap().store().ingested() < sent {
        thread::sleep(Duration::from_millis(5));
    }
    println!("sent {sent}, {forced_ticks} ticks held by the override");

    println!("latest: {}", http(api, "GET", "/api/latest?node=n1", ""));
    println!("model: {}", http(api, "GET", "/api/model", ""));
    println!(
        "policy: {}",
        http(api, "PUT", "/api/policy/tomato", r#"{"m_on_pct":30,"m_off_pct":55}"#)
    );
    println!(
        "bad policy: {}",
        http(api, "PUT", "/api/policy/tomato", r#"{"m_on_pct":60,"m_off_pct":35}"#)
    );
    println!(
        "recommendation: {}",
        http(api, "GET", "/api/recommendation?crop=tomato", "")
    );

    let _ = stop.send(());
    rt.block_on(serving).unwrap().unwrap();
}
