use super::frame::{Frame, MessageType};
use super::params::{deserialize_params, serialize_params, serialized_len};
use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::nn::ModelParams;

/// Fixed prefix of a LOCAL_UPDATE payload before the parameters.
pub const UPDATE_PREFIX_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct UpdatePayload {
    pub round: u32,
    pub sample_count: u32,
    pub mean_loss: f32,
    pub accuracy: f32,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Register { client_id: String },
    GlobalModel { params: ModelParams },
    LocalUpdate(UpdatePayload),
    Done,
}

impl Message {
    pub fn msg_type(&self) -> MessageType {
        match self {
            Message::Register { .. } => MessageType::Register,
            Message::GlobalModel { .. } => MessageType::GlobalModel,
            Message::LocalUpdate(_) => MessageType::LocalUpdate,
            Message::Done => MessageType::Done,
        }
    }

    pub fn to_frame(&self) -> Result<Frame> {
        let payload = match self {
            Message::Register { client_id } => {
                let len = u8::try_from(client_id.len())
                    .map_err(|_| Error::Serialize(format!("client id of {} bytes exceeds 255", client_id.len())))?;
                let mut p = vec![len];
                p.extend_from_slice(client_id.as_bytes());
                p
            }
            Message::GlobalModel { params } => serialize_params(params)?,
            Message::LocalUpdate(u) => {
                let mut p = Vec::with_capacity(UPDATE_PREFIX_LEN + serialized_len(&u.params));
                p.extend_from_slice(&u.round.to_le_bytes());
                p.extend_from_slice(&u.sample_count.to_le_bytes());
                p.extend_from_slice(&u.mean_loss.to_le_bytes());
                p.extend_from_slice(&u.accuracy.to_le_bytes());
                p.extend(serialize_params(&u.params)?);
                p
            }
            Message::Done => Vec::new(),
        };
        Ok(Frame::new(self.msg_type(), payload))
    }

    /// Decoding failures of any kind surface as protocol errors.
    pub fn from_frame(frame: &Frame) -> Result<Message> {
        let bad = |e: Error| Error::Protocol(format!("malformed {:?} payload: {e}", frame.msg_type));
        let p = &frame.payload;
        match frame.msg_type {
            MessageType::Register => {
                let mut r = Reader::new(p);
                let len = usize::from(r.u8().map_err(bad)?);
                let id = r.take(len).map_err(bad)?.to_vec();
                r.finish().map_err(bad)?;
                let client_id = String::from_utf8(id).map_err(|_| Error::Protocol("client id is not UTF-8".into()))?;
                Ok(Message::Register { client_id })
            }
            MessageType::GlobalModel => Ok(Message::GlobalModel { params: deserialize_params(p).map_err(bad)? }),
            MessageType::LocalUpdate => {
                let mut r = Reader::new(p);
                let round = r.u32().map_err(bad)?;
                let sample_count = r.u32().map_err(bad)?;
                let mean_loss = r.f32().map_err(bad)?;
                let accuracy = r.f32().map_err(bad)?;
                let params = deserialize_params(&p[UPDATE_PREFIX_LEN..]).map_err(bad)?;
                Ok(Message::LocalUpdate(UpdatePayload { round, sample_count, mean_loss, accuracy, params }))
            }
            MessageType::Done if p.is_empty() => Ok(Message::Done),
            MessageType::Done => Err(Error::Protocol("DONE carries a payload".into())),
        }
    }
}

/// Wire bytes per message kind for one client, used for exact accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrafficModel {
    pub register: u64,
    pub global_model: u64,
    pub local_update: u64,
    pub done: u64,
}

impl TrafficModel {
    pub fn new(client_id_len: usize, params: &ModelParams) -> Self {
        let header = super::frame::HEADER_LEN as u64;
        let theta = serialized_len(params) as u64;
        Self {
            register: header + 1 + client_id_len as u64,
            global_model: header + theta,
            local_update: header + UPDATE_PREFIX_LEN as u64 + theta,
            done: header,
        }
    }

    /// (server sent, server received) after `rounds` full rounds, registration
    /// included and the closing DONE excluded.
    pub fn server_totals(&self, clients: u64, rounds: u64) -> (u64, u64) {
        (clients * rounds * self.global_model, clients * (self.register + rounds * self.local_update))
    }
}
