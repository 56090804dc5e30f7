use super::host::Host;
use super::register::Message;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::faults::{Entity, LinkState};
use crate::nn::{mse_loss, Matrix, Mlp, OptimizerConfig, OptimizerState};

/// A feature-owning party: an autoencoder over its vertical slice.
#[derive(Debug, Clone)]
pub struct Guest {
    pub id: usize,
    pub encoder: Mlp,
    pub decoder: Mlp,
    enc_opt: OptimizerState,
    dec_opt: OptimizerState,
    data: Dataset,
}

/// Outcome of one guest iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GuestRound {
    /// Reconstruction loss, or `None` if the guest was down.
    pub loss: Option<f64>,
    pub attempted_bits: u64,
    pub delivered_bits: u64,
    pub writes: usize,
}

impl Guest {
    pub fn new(
        id: usize,
        encoder: Mlp,
        decoder: Mlp,
        opt: &OptimizerConfig,
        data: Dataset,
    ) -> Result<Self> {
        if decoder.output_dim() != encoder.input_dim()
            || decoder.input_dim() != encoder.output_dim()
        {
            return Err(Error::dim(
                "Guest::new decoder",
                format!("{:?} reversed", encoder.shape()),
                format!("{:?}", decoder.shape()),
            ));
        }
        if data.dim() != encoder.input_dim() {
            return Err(Error::dim(
                "Guest::new data",
                encoder.input_dim(),
                data.dim(),
            ));
        }
        opt.validate()?;
        Ok(Self {
            id,
            encoder,
            decoder,
            enc_opt: opt.build(),
            dec_opt: opt.build(),
            data,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn output_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    /// Frozen encoding for inference.
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        self.encoder.predict(x)
    }

    /// Forward, backward, and update on one batch without any fault logic.
    pub fn fit_batch(&mut self, x: &Matrix) -> Result<(f64, Matrix)> {
        let h = self.encoder.forward(x)?;
        let recon = self.decoder.forward(&h)?;
        let (loss, g) = mse_loss(&recon, x)?;
        let (gh, dec_grads) = self.decoder.backward(&g)?;
        let enc_grads = self.encoder.backward_params(&gh)?;
        self.dec_opt.step(&mut self.decoder, &dec_grads)?;
        self.enc_opt.step(&mut self.encoder, &enc_grads)?;
        Ok((loss, h))
    }
}

/// One guest training iteration on the dataset rows `rows`.
///
/// The guest is polled once. A down guest neither trains nor writes. In a
/// communication round every (guest, host) connection is polled and the
/// activation is written wherever the link is usable; host state never
/// affects the guest's own update.
pub fn guest_train_round(
    g: &mut Guest,
    rows: &[usize],
    communicate: bool,
    hosts: &mut [Host],
    link: &mut LinkState,
) -> Result<GuestRound> {
    let alive = link.poll(Entity::Guest(g.id))?;
    let msg_bits = (rows.len() * g.output_dim() * 32) as u64;
    let mut out = GuestRound::default();
    let mut activation = None;
    if alive {
        let x = g.data.gather_rows(rows)?;
        let (loss, h) = g.fit_batch(&x)?;
        out.loss = Some(loss);
        activation = Some(h);
    }
    if communicate {
        let msg = activation.as_ref().map(Message::encode);
        for host in hosts.iter_mut() {
            out.attempted_bits += msg_bits;
            let usable = link.connection_usable(g.id, host.id)?;
            if let (true, Some(m)) = (usable, &msg) {
                host.register_mut(g.id)?.write(g.id, m.clone())?;
                out.delivered_bits += msg_bits;
                out.writes += 1;
            }
        }
    }
    Ok(out)
}
