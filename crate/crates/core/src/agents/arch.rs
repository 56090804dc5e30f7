//! Layer shapes for every network in a run, derived from the two global
//! widths `W_g` (concatenated guest output) and `W_h` (one host's output).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{init_mlp, ActivationKind, Mlp};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    /// `W_g`, split evenly across guests.
    pub guest_width: usize,
    /// `W_h`.
    pub host_width: usize,
    /// Hidden width of each guest encoder; `400 / |G|` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guest_hidden: Option<usize>,
    /// Hidden width of the owner head after its first squeeze.
    #[serde(default = "default_owner_hidden")]
    pub owner_hidden: usize,
    #[serde(default = "default_guest_activation")]
    pub guest_activation: ActivationKind,
    #[serde(default = "default_host_activation")]
    pub host_activation: ActivationKind,
    #[serde(default = "default_host_activation")]
    pub owner_activation: ActivationKind,
    #[serde(default = "default_guest_output")]
    pub guest_decoder_output: ActivationKind,
    #[serde(default = "default_host_output")]
    pub host_decoder_output: ActivationKind,
}

fn default_owner_hidden() -> usize {
    40
}
fn default_guest_activation() -> ActivationKind {
    ActivationKind::Relu
}
fn default_host_activation() -> ActivationKind {
    ActivationKind::LEAKY
}
fn default_guest_output() -> ActivationKind {
    ActivationKind::Sigmoid
}
fn default_host_output() -> ActivationKind {
    ActivationKind::Relu
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            guest_width: 320,
            host_width: 160,
            guest_hidden: None,
            owner_hidden: default_owner_hidden(),
            guest_activation: default_guest_activation(),
            host_activation: default_host_activation(),
            owner_activation: default_host_activation(),
            guest_decoder_output: default_guest_output(),
            host_decoder_output: default_host_output(),
        }
    }
}

impl ArchConfig {
    pub fn validate(&self, guests: usize) -> Result<()> {
        if guests == 0 || self.guest_width == 0 || self.host_width == 0 || self.owner_hidden == 0 {
            return Err(Error::Config(
                "widths and guest count must be positive".into(),
            ));
        }
        if !self.guest_width.is_multiple_of(guests) {
            return Err(Error::Config(format!(
                "guest_width {} is not divisible by {guests} guests",
                self.guest_width
            )));
        }
        if self.guest_hidden == Some(0) || (self.guest_hidden.is_none() && 400 / guests == 0) {
            return Err(Error::Config("guest hidden width must be positive".into()));
        }
        for a in [
            self.guest_activation,
            self.host_activation,
            self.owner_activation,
            self.guest_decoder_output,
            self.host_decoder_output,
        ] {
            a.validate()?;
        }
        Ok(())
    }

    pub fn guest_output(&self, guests: usize) -> usize {
        self.guest_width / guests
    }

    pub fn guest_hidden(&self, guests: usize) -> usize {
        self.guest_hidden.unwrap_or(400 / guests)
    }

    pub fn host_hidden(&self) -> usize {
        (self.guest_width + 3 * self.host_width) / 4
    }

    pub fn guest_encoder_shape(&self, input: usize, guests: usize) -> Vec<usize> {
        vec![input, self.guest_hidden(guests), self.guest_output(guests)]
    }

    pub fn host_encoder_shape(&self) -> Vec<usize> {
        vec![self.guest_width, self.host_hidden(), self.host_width]
    }

    pub fn owner_shape(&self, hosts: usize, classes: usize) -> Vec<usize> {
        vec![
            self.host_width * hosts,
            self.host_width,
            self.owner_hidden,
            classes,
        ]
    }

    pub fn guest_encoder(&self, input: usize, guests: usize, rng: &mut SimRng) -> Result<Mlp> {
        let a = self.guest_activation;
        init_mlp(&self.guest_encoder_shape(input, guests), &[a, a], rng)
    }

    /// Mirror of the encoder, ending in the guest reconstruction activation.
    pub fn guest_decoder(&self, input: usize, guests: usize, rng: &mut SimRng) -> Result<Mlp> {
        let mut shape = self.guest_encoder_shape(input, guests);
        shape.reverse();
        init_mlp(
            &shape,
            &[self.guest_activation, self.guest_decoder_output],
            rng,
        )
    }

    pub fn host_encoder(&self, rng: &mut SimRng) -> Result<Mlp> {
        let a = self.host_activation;
        init_mlp(&self.host_encoder_shape(), &[a, a], rng)
    }

    pub fn host_decoder(&self, rng: &mut SimRng) -> Result<Mlp> {
        let mut shape = self.host_encoder_shape();
        shape.reverse();
        init_mlp(
            &shape,
            &[self.host_activation, self.host_decoder_output],
            rng,
        )
    }

    /// Transfer head: two leaky squeezes, then linear logits.
    pub fn owner(&self, hosts: usize, classes: usize, rng: &mut SimRng) -> Result<Mlp> {
        let a = self.owner_activation;
        init_mlp(
            &self.owner_shape(hosts, classes),
            &[a, a, ActivationKind::Identity],
            rng,
        )
    }

    /// The SplitNN host: host encoder followed by a single-host owner head.
    pub fn splitnn_host(&self, classes: usize, rng: &mut SimRng) -> Result<Mlp> {
        self.host_encoder(rng)?
            .stacked(self.owner(1, classes, rng)?)
    }

    /// Every (name, shape, activations) triple a run may build.
    pub fn all_shapes(
        &self,
        guest_inputs: &[usize],
        hosts: usize,
        classes: usize,
    ) -> Vec<(String, Vec<usize>, Vec<ActivationKind>)> {
        let g = guest_inputs.len();
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for &d in guest_inputs {
            if !seen.insert(d) {
                continue;
            }
            let enc = self.guest_encoder_shape(d, g);
            let mut dec = enc.clone();
            dec.reverse();
            out.push((
                format!("guest encoder d={d}"),
                enc,
                vec![self.guest_activation; 2],
            ));
            out.push((
                format!("guest decoder d={d}"),
                dec,
                vec![self.guest_activation, self.guest_decoder_output],
            ));
        }
        let enc = self.host_encoder_shape();
        let mut dec = enc.clone();
        dec.reverse();
        out.push((
            "host encoder".into(),
            enc.clone(),
            vec![self.host_activation; 2],
        ));
        out.push((
            "host decoder".into(),
            dec,
            vec![self.host_activation, self.host_decoder_output],
        ));
        let owner_acts = vec![
            self.owner_activation,
            self.owner_activation,
            ActivationKind::Identity,
        ];
        out.push((
            format!("owner |H|={hosts}"),
            self.owner_shape(hosts, classes),
            owner_acts.clone(),
        ));
        let mut split = enc;
        split.extend_from_slice(&self.owner_shape(1, classes)[1..]);
        let mut split_acts = vec![self.host_activation; 2];
        split_acts.extend(owner_acts);
        out.push(("splitnn host".into(), split, split_acts));
        out
    }
}
