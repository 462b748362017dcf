use std::collections::VecDeque;
use std::net::{Ipv4Addr, SocketAddr, UdpSocket};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socket2::{Domain, Protocol, Socket, Type};

use crate::frame::{FrameAnchor, Pose};
use crate::message::{StateMessage, WIRE_LEN};
use crate::VveError;

pub const DEFAULT_PORT: u16 = 47001;

/// `VVE_PORT` if set and valid, else the default.
pub fn default_port() -> u16 {
    std::env::var("VVE_PORT").ok().and_then(|p| p.parse().ok()).unwrap_or(DEFAULT_PORT)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopbackConfig {
    /// Added one-way delay, s.
    pub latency: f64,
    /// Drop probability per message, in `[0, 1)`.
    pub loss: f64,
    pub seed: u64,
    /// Receiver port; 0 picks a free one.
    pub port: u16,
    /// Frame applied on the receiving side.
    pub anchor: FrameAnchor,
    /// Gap between sends, s. Zero sends as fast as the socket allows.
    pub period: f64,
}

impl Default for LoopbackConfig {
    fn default() -> Self {
        Self { latency: 0.0, loss: 0.0, seed: 0, port: 0, anchor: FrameAnchor::default(), period: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Received {
    pub msg: StateMessage,
    /// Sender pose mapped into the receiver frame.
    pub pose: Pose,
    /// Wall-clock delay from hand-off to the link until arrival, s.
    pub latency: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkStats {
    pub offered: usize,
    pub injected_drops: usize,
    pub delivered: usize,
    pub delivered_ratio: f64,
    /// Arrivals with a sequence number below one already seen.
    pub reorder_count: usize,
    /// Missing sequence numbers at the receiver.
    pub seq_gaps: usize,
    pub mean_latency: f64,
    pub max_latency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopbackReport {
    pub received: Vec<Received>,
    /// Sequence numbers the injector dropped.
    pub dropped: Vec<u32>,
    pub stats: LinkStats,
}

fn receiver_socket(port: u16) -> Result<UdpSocket, VveError> {
    let sock = Socket::new(Domain::IPV4, Type::DGRAM, Some(Protocol::UDP))?;
    // room for a burst of small datagrams; the kernel may cap this
    let _ = sock.set_recv_buffer_size(8 << 20);
    sock.bind(&SocketAddr::from((Ipv4Addr::LOCALHOST, port)).into())?;
    Ok(sock.into())
}

/// Send `messages` from one thread to a receiver thread over localhost UDP.
///
/// Loss is decided per message by a seeded generator before sending, so the
/// dropped set depends only on the seed. Latency holds each datagram back by
/// the configured delay before it is written to the socket.
pub fn loopback_session(messages: &[StateMessage], config: &LoopbackConfig) -> Result<LoopbackReport, VveError> {
    if !(config.latency >= 0.0) || !config.latency.is_finite() {
        return Err(VveError::Config("latency must be finite and non-negative".into()));
    }
    if !(0.0..1.0).contains(&config.loss) {
        return Err(VveError::Config("loss must be in [0, 1)".into()));
    }
    let encoded: Vec<[u8; WIRE_LEN]> = messages.iter().map(|m| m.encode()).collect::<Result<_, _>>()?;

    let rx = receiver_socket(config.port)?;
    let addr = rx.local_addr()?;
    rx.set_read_timeout(Some(Duration::from_millis(50)))?;
    let tx = UdpSocket::bind((Ipv4Addr::LOCALHOST, 0))?;
    tx.connect(addr)?;

    // the sender reports how many datagrams it put on the wire
    let (done_tx, done_rx) = mpsc::channel::<usize>();
    let receiver = thread::spawn(move || -> Result<Vec<(StateMessage, Instant)>, VveError> {
        let mut got = Vec::new();
        let mut buf = [0u8; 2048];
        let mut expected: Option<usize> = None;
        let mut idle_since: Option<Instant> = None;
        loop {
            match rx.recv(&mut buf) {
                Ok(n) => {
                    let at = Instant::now();
                    // foreign or malformed datagrams are ignored
                    if let Ok(m) = StateMessage::decode(&buf[..n]) {
                        got.push((m, at));
                    }
                    idle_since = None;
                }
                Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
                Err(e) => return Err(e.into()),
            }
            if expected.is_none() {
                expected = done_rx.try_recv().ok();
            }
            if let Some(n) = expected {
                if got.len() >= n {
                    break;
                }
                let since = *idle_since.get_or_insert_with(Instant::now);
                if since.elapsed() > Duration::from_secs(1) {
                    break;
                }
            }
        }
        Ok(got)
    });

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let delay = Duration::from_secs_f64(config.latency);
    let period = Duration::from_secs_f64(config.period.max(0.0));
    let mut queue: VecDeque<(Instant, usize)> = VecDeque::new();
    let mut offered_at: Vec<Option<Instant>> = vec![None; messages.len()];
    let mut dropped = Vec::new();
    let mut sent = 0usize;
    let flush = |queue: &mut VecDeque<(Instant, usize)>, wait: bool| -> Result<usize, VveError> {
        let mut n = 0;
        while let Some(&(due, k)) = queue.front() {
            let now = Instant::now();
            if due > now {
                if !wait {
                    break;
                }
                thread::sleep(due - now);
            }
            tx.send(&encoded[k])?;
            queue.pop_front();
            n += 1;
            // keep a burst from overrunning the receive buffer
            if n % 256 == 0 {
                thread::sleep(Duration::from_micros(200));
            }
        }
        Ok(n)
    };
    for (k, m) in messages.iter().enumerate() {
        if rng.gen::<f64>() < config.loss {
            dropped.push(m.seq);
        } else {
            let now = Instant::now();
            offered_at[k] = Some(now);
            queue.push_back((now + delay, k));
        }
        sent += flush(&mut queue, false)?;
        if !period.is_zero() {
            thread::sleep(period);
        }
    }
    sent += flush(&mut queue, true)?;
    let _ = done_tx.send(sent);
    let got = receiver.join().map_err(|_| VveError::Config("receiver thread panicked".into()))??;

    // seq -> index of the original message
    let index: std::collections::HashMap<u32, usize> = messages.iter().enumerate().map(|(k, m)| (m.seq, k)).collect();
    let mut received = Vec::with_capacity(got.len());
    let mut max_seq: Option<u32> = None;
    let mut reorder = 0;
    let (mut lat_sum, mut lat_max) = (0.0, 0.0f64);
    for (m, at) in got {
        if max_seq.is_some_and(|s| m.seq < s) {
            reorder += 1;
        }
        max_seq = Some(max_seq.map_or(m.seq, |s| s.max(m.seq)));
        let latency = index
            .get(&m.seq)
            .and_then(|&k| offered_at[k])
            .map(|s0| at.saturating_duration_since(s0).as_secs_f64())
            .unwrap_or(f64::NAN);
        lat_sum += latency;
        lat_max = lat_max.max(latency);
        received.push(Received { msg: m, pose: config.anchor.transform(Pose { x: m.x, y: m.y, psi: m.psi }), latency });
    }
    let delivered = received.len();
    let seen: std::collections::HashSet<u32> = received.iter().map(|r| r.msg.seq).collect();
    let stats = LinkStats {
        offered: messages.len(),
        injected_drops: dropped.len(),
        delivered,
        delivered_ratio: if messages.is_empty() { 1.0 } else { delivered as f64 / messages.len() as f64 },
        reorder_count: reorder,
        seq_gaps: messages.iter().filter(|m| !seen.contains(&m.seq)).count(),
        mean_latency: if delivered == 0 { 0.0 } else { lat_sum / delivered as f64 },
        max_latency: lat_max,
    };
    Ok(LoopbackReport { received, dropped, stats })
}
