use super::register::CommRegister;
use super::replay::{ReplayBuffer, ReplayEntry};
use crate::error::{Error, Result};
use crate::faults::{Entity, LinkState};
use crate::nn::{mse_loss, Matrix, Mlp, OptimizerConfig, OptimizerState};

/// An aggregating party: one register per guest, a replay buffer, and an
/// autoencoder over the concatenated guest activations.
#[derive(Debug, Clone)]
pub struct Host {
    pub id: usize,
    pub encoder: Mlp,
    pub decoder: Mlp,
    enc_opt: OptimizerState,
    dec_opt: OptimizerState,
    registers: Vec<CommRegister>,
    replay: ReplayBuffer,
    appended_this_round: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ingest {
    Appended,
    /// Some register has never been written.
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HostRound {
    Trained {
        loss: f64,
    },
    /// The host was down; `dropped` says whether this round's input was
    /// removed from the replay buffer.
    Down {
        dropped: bool,
    },
}

impl Host {
    pub fn new(
        id: usize,
        guests: usize,
        encoder: Mlp,
        decoder: Mlp,
        opt: &OptimizerConfig,
    ) -> Result<Self> {
        if decoder.output_dim() != encoder.input_dim()
            || decoder.input_dim() != encoder.output_dim()
        {
            return Err(Error::dim(
                "Host::new decoder",
                format!("{:?} reversed", encoder.shape()),
                format!("{:?}", decoder.shape()),
            ));
        }
        opt.validate()?;
        Ok(Self {
            id,
            encoder,
            decoder,
            enc_opt: opt.build(),
            dec_opt: opt.build(),
            registers: (0..guests).map(|g| CommRegister::new(g, id)).collect(),
            replay: ReplayBuffer::new(),
            appended_this_round: false,
        })
    }

    pub fn register(&self, guest: usize) -> Result<&CommRegister> {
        self.registers
            .get(guest)
            .ok_or_else(|| Error::UnknownEntity(format!("guest {guest} on host {}", self.id)))
    }

    pub fn register_mut(&mut self, guest: usize) -> Result<&mut CommRegister> {
        let id = self.id;
        self.registers
            .get_mut(guest)
            .ok_or_else(|| Error::UnknownEntity(format!("guest {guest} on host {id}")))
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        self.encoder.predict(x)
    }

    pub fn fit_batch(&mut self, x: &Matrix) -> Result<f64> {
        let h = self.encoder.forward(x)?;
        let recon = self.decoder.forward(&h)?;
        let (loss, g) = mse_loss(&recon, x)?;
        let (gh, dec_grads) = self.decoder.backward(&g)?;
        let enc_grads = self.encoder.backward_params(&gh)?;
        self.dec_opt.step(&mut self.decoder, &dec_grads)?;
        self.enc_opt.step(&mut self.encoder, &enc_grads)?;
        Ok(loss)
    }
}

/// Snapshots every register, stale or fresh, into a new replay entry.
pub fn host_ingest(h: &mut Host) -> Result<Ingest> {
    h.appended_this_round = false;
    let slices: Option<Vec<_>> = h.registers.iter().map(|r| r.read().cloned()).collect();
    let Some(slices) = slices else {
        return Ok(Ingest::Cold);
    };
    let entry = ReplayEntry::new(slices)?;
    if entry.width() != h.encoder.input_dim() {
        return Err(Error::dim(
            "host_ingest",
            h.encoder.input_dim(),
            entry.width(),
        ));
    }
    h.replay.push(entry);
    h.appended_this_round = true;
    Ok(Ingest::Appended)
}

/// One host iteration. The host is polled once; a down host does not
/// update, and in a communication round it also loses the input it just
/// appended.
pub fn host_train_round(
    h: &mut Host,
    link: &mut LinkState,
    communication_round: bool,
) -> Result<HostRound> {
    let alive = link.poll(Entity::Host(h.id))?;
    if !alive {
        let dropped =
            communication_round && h.appended_this_round && h.replay.drop_last().is_some();
        h.appended_this_round = false;
        return Ok(HostRound::Down { dropped });
    }
    h.appended_this_round = false;
    let x = h.replay.next_entry()?.to_matrix();
    let loss = h.fit_batch(&x)?;
    Ok(HostRound::Trained { loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::register::Message;
    use crate::faults::{FaultConfig, Rates};
    use crate::nn::{init_mlp, ActivationKind};
    use crate::rng::{stream, Domain};

    fn host(guests: usize, width: usize) -> Host {
        let mut r = stream(0, Domain::HostModel, 0);
        let acts = [ActivationKind::LEAKY];
        let enc = init_mlp(&[width, 2], &acts, &mut r).unwrap();
        let dec = init_mlp(&[2, width], &acts, &mut r).unwrap();
        Host::new(0, guests, enc, dec, &OptimizerConfig::adam(1e-2, 0.0)).unwrap()
    }

    fn write(h: &mut Host, g: usize, v: f64) {
        h.register_mut(g)
            .unwrap()
            .write(g, Message::encode(&Matrix::filled(2, 1, v)))
            .unwrap();
    }

    #[test]
    fn cold_register_skips_ingest() {
        let mut h = host(2, 2);
        write(&mut h, 0, 1.0);
        assert_eq!(host_ingest(&mut h).unwrap(), Ingest::Cold);
        assert!(h.replay().is_empty());
    }

    #[test]
    fn stale_slice_is_reused() {
        let mut h = host(2, 2);
        write(&mut h, 0, 0.25);
        write(&mut h, 1, 0.5);
        host_ingest(&mut h).unwrap();
        write(&mut h, 0, 0.75);
        host_ingest(&mut h).unwrap();
        let mut b = h.replay().clone();
        b.next_entry().unwrap();
        let second = b.next_entry().unwrap().to_matrix();
        assert_eq!(second.row(0), &[0.75, 0.5]);
    }

    #[test]
    fn dead_host_keeps_params_and_drops_the_new_entry() {
        let mut h = host(1, 1);
        let cfg = FaultConfig {
            host: Rates::new(1.0, 0.0),
            ..Default::default()
        };
        let mut link = LinkState::new(cfg, 1, 1, 0).unwrap();
        write(&mut h, 0, 0.5);
        host_ingest(&mut h).unwrap();
        let before = h.encoder.checksum();
        let r = host_train_round(&mut h, &mut link, true).unwrap();
        assert_eq!(r, HostRound::Down { dropped: true });
        assert_eq!(h.encoder.checksum(), before);
        assert!(h.replay().is_empty());
    }

    #[test]
    fn repeated_steps_on_a_fixed_input_reduce_loss() {
        let mut h = host(1, 1);
        let mut link = LinkState::new(FaultConfig::none(), 1, 1, 0).unwrap();
        write(&mut h, 0, 0.8);
        host_ingest(&mut h).unwrap();
        let losses: Vec<f64> = (0..200)
            .map(
                |_| match host_train_round(&mut h, &mut link, false).unwrap() {
                    HostRound::Trained { loss } => loss,
                    other => panic!("{other:?}"),
                },
            )
            .collect();
        let head: f64 = losses[..20].iter().sum();
        let tail: f64 = losses[180..].iter().sum();
        assert!(tail < head, "{head} -> {tail}");
    }
}
