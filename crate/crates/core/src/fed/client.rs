use super::local::{local_update, LocalHyper};
use crate::error::{Error, Result};
use crate::gaf::GafImage;
use crate::nn::ModelSpec;
use crate::transport::{Channel, Message, UpdatePayload};

fn lost(e: Error) -> Error {
    match e {
        Error::ChannelClosed | Error::Timeout | Error::Io(_) => Error::ClientAbort(format!("connection lost: {e}")),
        other => other,
    }
}

/// Registers as `client_id`, then answers every GLOBAL_MODEL with one
/// LOCAL_UPDATE until DONE. Returns the number of updates sent.
pub fn run_client(
    channel: &mut dyn Channel,
    client_id: &str,
    spec: &ModelSpec,
    hyper: &LocalHyper,
    shard: &[GafImage],
) -> Result<u32> {
    channel.send_message(&Message::Register { client_id: client_id.to_string() }).map_err(lost)?;
    let mut round = 0;
    loop {
        match channel.recv_message().map_err(lost)? {
            Message::GlobalModel { params } => {
                round += 1;
                spec.check_params(&params)
                    .map_err(|_| Error::Protocol("received model does not match the configured model spec".into()))?;
                let u = local_update(&params, spec, shard, hyper, client_id, round)?;
                log::info!("{client_id}: round {round} loss {:.4} acc {:.4}", u.mean_loss, u.accuracy);
                let payload = UpdatePayload {
                    round,
                    sample_count: u.sample_count,
                    mean_loss: u.mean_loss,
                    accuracy: u.accuracy,
                    params: u.params,
                };
                channel.send_message(&Message::LocalUpdate(payload)).map_err(lost)?;
            }
            Message::Done => return Ok(round),
            other => return Err(Error::Protocol(format!("client received {:?}", other.msg_type()))),
        }
    }
}
