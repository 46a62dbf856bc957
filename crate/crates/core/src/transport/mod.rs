//! Framed wire protocol, parameter serialization, loopback and TCP
//! channels, and byte-level accounting.

mod backend;
mod channel;
mod frame;
mod loopback;
mod message;
mod params;
mod stats;
mod tcp;

pub use backend::{backend_registry, Loopback, SessionEnds, TcpLocal, TransportBackend};
pub use channel::{ByteStream, Channel, FramedChannel};
pub use frame::{decode_header, read_frame, write_frame, Frame, MessageType, FRAME_MAGIC, HEADER_LEN, MAX_PAYLOAD, PROTOCOL_VERSION};
pub use loopback::{loopback_channel_pair, loopback_stream_pair, LoopbackStream};
pub use message::{Message, TrafficModel, UpdatePayload, UPDATE_PREFIX_LEN};
pub use params::{deserialize_params, serialize_params, serialized_len};
pub use stats::{CommSnapshot, CommStats};
pub use tcp::{accept_clients, connect, tcp_channel};

#[cfg(test)]
mod tests {
    use std::sync::Arc;
    use std::thread;

    use super::*;
    use crate::error::Error;

    #[test]
    fn loopback_delivers_and_counts() {
        let (sa, sb) = (Arc::new(CommStats::new()), Arc::new(CommStats::new()));
        let (mut a, mut b) = loopback_channel_pair(Arc::clone(&sa), Arc::clone(&sb));
        let f = Frame::new(MessageType::GlobalModel, vec![7; 100]);
        a.send_frame(&f).unwrap();
        assert_eq!(b.recv_frame().unwrap(), f);
        assert_eq!(sa.snapshot().bytes_sent, 110);
        assert_eq!(sb.snapshot().bytes_received, 110);
        assert_eq!(sb.snapshot().received_of(MessageType::GlobalModel), 1);
    }

    #[test]
    fn loopback_lifecycle() {
        let (mut a, mut b) = loopback_channel_pair(Arc::new(CommStats::new()), Arc::new(CommStats::new()));
        a.close();
        assert!(matches!(a.send_frame(&Frame::new(MessageType::Done, vec![])), Err(Error::ChannelClosed)));
        assert!(matches!(a.recv_frame(), Err(Error::ChannelClosed)));
        assert!(matches!(b.recv_frame(), Err(Error::ChannelClosed)));
        drop(b);
    }

    #[test]
    fn loopback_timeout() {
        let (_a, mut b) = loopback_channel_pair(Arc::new(CommStats::new()), Arc::new(CommStats::new()));
        b.set_timeout(Some(std::time::Duration::from_millis(20))).unwrap();
        assert!(matches!(b.recv_frame(), Err(Error::Timeout)));
    }

    fn exchange(backend: &dyn TransportBackend) -> (CommSnapshot, CommSnapshot) {
        let server_stats = Arc::new(CommStats::new());
        let client_stats = vec![Arc::new(CommStats::new())];
        let (mut server, mut clients) = backend.connect_local(&server_stats, &client_stats).unwrap();
        let mut client = clients.pop().unwrap();
        let peer = thread::spawn(move || {
            client.send_message(&Message::Register { client_id: "c".into() }).unwrap();
            while let Message::GlobalModel { params } = client.recv_message().unwrap() {
                let u = UpdatePayload { round: 0, sample_count: 1, mean_loss: 0.0, accuracy: 1.0, params };
                client.send_message(&Message::LocalUpdate(u)).unwrap();
            }
        });
        let s = &mut server[0];
        assert!(matches!(s.recv_message().unwrap(), Message::Register { .. }));
        let params = crate::nn::init_params(&crate::nn::ModelSpec::default(), 1).unwrap();
        for _ in 0..2 {
            s.send_message(&Message::GlobalModel { params: params.clone() }).unwrap();
            assert!(matches!(s.recv_message().unwrap(), Message::LocalUpdate(_)));
        }
        s.send_message(&Message::Done).unwrap();
        peer.join().unwrap();
        (server_stats.snapshot(), client_stats[0].snapshot())
    }

    #[test]
    fn tcp_and_loopback_count_identically() {
        let reg = backend_registry();
        let lo = exchange(reg.get("loopback").unwrap());
        let tcp = exchange(reg.get("tcp").unwrap());
        assert_eq!(lo, tcp);
        let params = crate::nn::init_params(&crate::nn::ModelSpec::default(), 1).unwrap();
        let t = TrafficModel::new(1, &params);
        let (sent, recv) = t.server_totals(1, 2);
        assert_eq!(lo.0.bytes_sent, sent + t.done);
        assert_eq!(lo.0.bytes_received, recv);
        assert_eq!(lo.1.total_bytes(), lo.0.total_bytes());
    }
}
