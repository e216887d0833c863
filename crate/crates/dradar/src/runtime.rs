//! Runs the sensor and fusion nodes concurrently: one thread per sensor,
//! the fusion node on the calling thread, over channels or loopback TCP.

use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use dradar_core::admm::{Clock, Hyperparams, Mode, Problem, RunOutput};
use dradar_core::dist::{build_nodes, CommStats, FusionNode, SensorNode, WireMessage};

use crate::config::{TransportConfig, TransportKind};
use crate::error::{CliError, CliResult};

/// Largest accepted TCP frame.
pub const MAX_FRAME_BYTES: usize = 256 << 20;

/// Wall clock started at construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for StdClock {
    fn elapsed_ms(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// Frame or failure delivered to the fusion node.
type Inbound = Result<Vec<u8>, String>;

/// Sends one fusion reply to one sensor.
type Outbox = Box<dyn FnMut(&[u8]) -> CliResult<()>>;

fn transport(round: u64, reason: impl Into<String>) -> CliError {
    CliError::Transport { round, reason: reason.into() }
}

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    if payload.len() > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "frame too large"));
    }
    w.write_all(&(payload.len() as u32).to_le_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// `Ok(None)` on a clean end of stream between frames.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes exceeds the limit")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

/// Drives one sensor node until it sees `Terminate`.
fn sensor_loop(
    mut node: SensorNode,
    mut send: impl FnMut(&[u8]) -> CliResult<()>,
    mut recv: impl FnMut(u64) -> CliResult<Vec<u8>>,
) -> CliResult<usize> {
    send(&node.start()?.encode()?)?;
    let mut round = 0;
    while !node.is_done() {
        let msg = WireMessage::decode(&recv(round)?)?;
        round = msg.round() + 1;
        for out in node.handle(&msg)? {
            send(&out.encode()?)?;
        }
    }
    Ok(node.degenerate_screens())
}

fn fusion_loop(
    fusion: &mut FusionNode,
    inbox: &Receiver<Inbound>,
    outboxes: &mut [Outbox],
    timeout: Duration,
    clock: &mut dyn Clock,
) -> CliResult<()> {
    while !fusion.is_finished() {
        let frame = match inbox.recv_timeout(timeout) {
            Ok(Ok(frame)) => frame,
            Ok(Err(reason)) => return Err(transport(fusion.round(), reason)),
            Err(RecvTimeoutError::Timeout) => {
                return Err(transport(
                    fusion.round(),
                    format!("timed out after {timeout:?} waiting for sensors {:?}", fusion.missing()),
                ))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(transport(fusion.round(), format!("sensors {:?} went away", fusion.missing())))
            }
        };
        let msg = WireMessage::decode(&frame)?;
        if let Some(reply) = fusion.handle(&msg, clock)? {
            let bytes = reply.encode()?;
            for out in outboxes.iter_mut() {
                out(&bytes)?;
            }
        }
    }
    Ok(())
}

/// Joins sensor threads; the first sensor error wins over a bare count.
fn join_sensors(handles: Vec<JoinHandle<CliResult<usize>>>) -> CliResult<usize> {
    let mut degenerate = 0;
    let mut first_err = None;
    for h in handles {
        match h.join() {
            Ok(Ok(d)) => degenerate += d,
            Ok(Err(e)) => {
                first_err.get_or_insert(e);
            }
            Err(_) => {
                first_err.get_or_insert(transport(0, "sensor thread panicked"));
            }
        }
    }
    first_err.map_or(Ok(degenerate), Err)
}

/// A sensor's own failure (say, a numerical one) explains a broken round
/// better than the transport error the fusion node saw as a result.
fn settle(fusion: CliResult<()>, sensors: CliResult<usize>) -> CliResult<usize> {
    match (fusion, sensors) {
        (Err(_), Err(e)) if !matches!(e, CliError::Transport { .. }) => Err(e),
        (Err(e), _) => Err(e),
        (Ok(()), s) => s,
    }
}

/// Solves `problem` with sensor nodes on their own threads. The result is
/// bitwise identical to the single-process engine.
pub fn run_distributed(
    problem: &Problem,
    hyper: Hyperparams,
    mode: Mode,
    cfg: &TransportConfig,
    clock: &mut dyn Clock,
) -> CliResult<(RunOutput, CommStats)> {
    let (sensors, fusion) = build_nodes(problem, hyper, mode)?;
    let timeout = Duration::from_millis(cfg.round_timeout_ms.max(1));
    match cfg.kind {
        TransportKind::Inproc => run_inproc(sensors, fusion, timeout, clock),
        TransportKind::Tcp => run_tcp(sensors, fusion, &cfg.fusion_addr, timeout, clock),
    }
}

fn run_inproc(
    sensors: Vec<SensorNode>,
    mut fusion: FusionNode,
    timeout: Duration,
    clock: &mut dyn Clock,
) -> CliResult<(RunOutput, CommStats)> {
    let (up_tx, inbox) = mpsc::channel::<Inbound>();
    let mut outboxes: Vec<Outbox> = Vec::new();
    let mut handles = Vec::new();
    for node in sensors {
        let (down_tx, down_rx) = mpsc::channel::<Vec<u8>>();
        let id = node.id();
        outboxes.push(Box::new(move |b: &[u8]| {
            // a sensor that already failed has reported through the inbox
            let _ = down_tx.send(b.to_vec());
            Ok(())
        }));
        let up = up_tx.clone();
        handles.push(thread::spawn(move || {
            let send_up = up.clone();
            let result = sensor_loop(
                node,
                |b| send_up.send(Ok(b.to_vec())).map_err(|_| transport(0, "fusion node went away")),
                |round| {
                    down_rx
                        .recv_timeout(timeout)
                        .map_err(|e| transport(round, format!("sensor {id} waiting for fusion: {e}")))
                },
            );
            if let Err(e) = &result {
                let _ = up.send(Err(format!("sensor {id}: {e}")));
            }
            result
        }));
    }
    drop(up_tx);
    let outcome = fusion_loop(&mut fusion, &inbox, &mut outboxes, timeout, clock);
    drop(outboxes);
    drop(inbox);
    let joined = join_sensors(handles);
    Ok(fusion.into_output(settle(outcome, joined)?))
}

fn accept_all(listener: &TcpListener, q: usize, timeout: Duration) -> CliResult<Vec<TcpStream>> {
    listener.set_nonblocking(true).map_err(|e| transport(0, e.to_string()))?;
    let deadline = Instant::now() + timeout;
    let mut streams = Vec::with_capacity(q);
    while streams.len() < q {
        match listener.accept() {
            Ok((s, _)) => {
                s.set_nonblocking(false).map_err(|e| transport(0, e.to_string()))?;
                s.set_nodelay(true).map_err(|e| transport(0, e.to_string()))?;
                streams.push(s);
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if Instant::now() > deadline {
                    return Err(transport(0, format!("only {} of {q} sensors connected", streams.len())));
                }
                thread::sleep(Duration::from_millis(2));
            }
            Err(e) => return Err(transport(0, e.to_string())),
        }
    }
    Ok(streams)
}

fn spawn_reader(mut stream: TcpStream, inbox: Sender<Inbound>) {
    thread::spawn(move || loop {
        match read_frame(&mut stream) {
            Ok(Some(frame)) => {
                if inbox.send(Ok(frame)).is_err() {
                    return;
                }
            }
            Ok(None) => {
                let _ = inbox.send(Err("sensor closed its connection".into()));
                return;
            }
            Err(e) => {
                let _ = inbox.send(Err(format!("read failed: {e}")));
                return;
            }
        }
    });
}

fn run_tcp(
    sensors: Vec<SensorNode>,
    mut fusion: FusionNode,
    addr: &str,
    timeout: Duration,
    clock: &mut dyn Clock,
) -> CliResult<(RunOutput, CommStats)> {
    let listener = TcpListener::bind(addr).map_err(|e| transport(0, format!("cannot listen on {addr}: {e}")))?;
    let local: SocketAddr = listener.local_addr().map_err(|e| transport(0, e.to_string()))?;
    let q = sensors.len();
    let handles: Vec<_> = sensors
        .into_iter()
        .map(|node| thread::spawn(move || tcp_sensor(node, local, timeout)))
        .collect();
    let streams = match accept_all(&listener, q, timeout) {
        Ok(s) => s,
        Err(e) => {
            // unblock sensors that did connect, then report the listener failure
            drop(listener);
            let _ = join_sensors(handles);
            return Err(e);
        }
    };
    let (up_tx, inbox) = mpsc::channel::<Inbound>();
    let mut outboxes: Vec<Outbox> = Vec::new();
    let mut conns = Vec::with_capacity(q);
    for s in streams {
        conns.push(s.try_clone().map_err(|e| transport(0, e.to_string()))?);
        let reader = s.try_clone().map_err(|e| transport(0, e.to_string()))?;
        spawn_reader(reader, up_tx.clone());
        let mut w = s;
        outboxes.push(Box::new(move |b: &[u8]| write_frame(&mut w, b).map_err(|e| transport(0, e.to_string()))));
    }
    drop(up_tx);
    let outcome = fusion_loop(&mut fusion, &inbox, &mut outboxes, timeout, clock);
    drop(outboxes);
    // wakes sensors still blocked on a read if the fusion loop failed
    for c in &conns {
        let _ = c.shutdown(Shutdown::Both);
    }
    let joined = join_sensors(handles);
    Ok(fusion.into_output(settle(outcome, joined)?))
}

fn tcp_sensor(node: SensorNode, addr: SocketAddr, timeout: Duration) -> CliResult<usize> {
    let id = node.id();
    let stream = TcpStream::connect_timeout(&addr, timeout)
        .map_err(|e| transport(0, format!("sensor {id} cannot connect to {addr}: {e}")))?;
    stream.set_nodelay(true).map_err(|e| transport(0, e.to_string()))?;
    stream.set_read_timeout(Some(timeout)).map_err(|e| transport(0, e.to_string()))?;
    let mut reader = stream.try_clone().map_err(|e| transport(0, e.to_string()))?;
    let mut writer = stream;
    sensor_loop(
        node,
        |b| write_frame(&mut writer, b).map_err(|e| transport(0, format!("sensor {id}: {e}"))),
        |round| match read_frame(&mut reader) {
            Ok(Some(frame)) => Ok(frame),
            Ok(None) => Err(transport(round, format!("sensor {id}: fusion closed the connection"))),
            Err(e) => Err(transport(round, format!("sensor {id}: {e}"))),
        },
    )
}
