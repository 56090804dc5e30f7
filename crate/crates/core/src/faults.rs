//! Crash faults as two-state Markov chains, one per connection, guest, and
//! host. Every poll consumes exactly one uniform draw from the entity's own
//! stream, applies the transition, then reports the new state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Domain, SimRng};

/// Per-call probabilities: an alive entity dies with `down`, a dead one
/// rejoins with `up`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    #[serde(default)]
    pub down: f64,
    #[serde(default = "one")]
    pub up: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Rates {
    fn default() -> Self {
        Self { down: 0.0, up: 1.0 }
    }
}

impl Rates {
    pub fn new(down: f64, up: f64) -> Self {
        Self { down, up }
    }

    /// Long-run fraction of polls that find the entity alive.
    pub fn stationary_alive(&self) -> f64 {
        if self.down == 0.0 {
            1.0
        } else {
            self.up / (self.up + self.down)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    #[serde(default)]
    pub connection: Rates,
    #[serde(default)]
    pub guest: Rates,
    #[serde(default)]
    pub host: Rates,
}

impl FaultConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("connection", self.connection),
            ("guest", self.guest),
            ("host", self.host),
        ] {
            for (which, v) in [("down", r.down), ("up", r.up)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Config(format!(
                        "faults.{name}.{which} = {v} is outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_fault_free(&self) -> bool {
        self.connection.down == 0.0 && self.guest.down == 0.0 && self.host.down == 0.0
    }
}

/// One Markov step. The draw is consumed whatever the outcome.
pub fn sample_transition(alive: bool, down: f64, up: f64, rng: &mut impl Rng) -> bool {
    let u: f64 = rng.gen();
    if alive {
        u >= down
    } else {
        u < up
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entity {
    Connection { guest: usize, host: usize },
    Guest(usize),
    Host(usize),
}

/// Polls and unavailable outcomes, per entity kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultCounts {
    pub connection_polls: u64,
    pub connection_faults: u64,
    pub guest_polls: u64,
    pub guest_faults: u64,
    pub host_polls: u64,
    pub host_faults: u64,
}

impl FaultCounts {
    pub fn total_faults(&self) -> u64 {
        self.connection_faults + self.guest_faults + self.host_faults
    }
}

struct Chain {
    alive: bool,
    rng: SimRng,
}

impl Chain {
    fn new(seed: u64, domain: Domain, index: u64) -> Self {
        Self {
            alive: true,
            rng: stream(seed, domain, index),
        }
    }

    fn step(&mut self, r: Rates) -> bool {
        self.alive = sample_transition(self.alive, r.down, r.up, &mut self.rng);
        self.alive
    }
}

/// Alive flags and their random streams for every entity in a run.
pub struct LinkState {
    config: FaultConfig,
    guests: Vec<Chain>,
    hosts: Vec<Chain>,
    /// Indexed `guest * hosts + host`.
    connections: Vec<Chain>,
    counts: FaultCounts,
}

impl std::fmt::Debug for LinkState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinkState")
            .field("config", &self.config)
            .field(
                "guests",
                &self.guests.iter().map(|c| c.alive).collect::<Vec<_>>(),
            )
            .field(
                "hosts",
                &self.hosts.iter().map(|c| c.alive).collect::<Vec<_>>(),
            )
            .field("counts", &self.counts)
            .finish()
    }
}

impl LinkState {
    pub fn new(config: FaultConfig, guests: usize, hosts: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            guests: (0..guests)
                .map(|g| Chain::new(seed, Domain::FaultGuest, g as u64))
                .collect(),
            hosts: (0..hosts)
                .map(|h| Chain::new(seed, Domain::FaultHost, h as u64))
                .collect(),
            connections: (0..guests * hosts)
                .map(|i| Chain::new(seed, Domain::FaultConnection, i as u64))
                .collect(),
            counts: FaultCounts::default(),
        })
    }

    pub fn config(&self) -> &FaultConfig {
        &self.config
    }

    pub fn counts(&self) -> FaultCounts {
        self.counts
    }

    fn chain(&mut self, e: Entity) -> Result<(&mut Chain, Rates)> {
        let h = self.hosts.len();
        let unknown = || Error::UnknownEntity(format!("{e:?}"));
        match e {
            Entity::Guest(g) => Ok((
                self.guests.get_mut(g).ok_or_else(unknown)?,
                self.config.guest,
            )),
            Entity::Host(i) => Ok((self.hosts.get_mut(i).ok_or_else(unknown)?, self.config.host)),
            Entity::Connection { guest, host } => {
                if host >= h {
                    return Err(unknown());
                }
                let c = self
                    .connections
                    .get_mut(guest * h + host)
                    .ok_or_else(unknown)?;
                Ok((c, self.config.connection))
            }
        }
    }

    /// Advances the entity's chain one step and reports availability for
    /// this call.
    pub fn poll(&mut self, e: Entity) -> Result<bool> {
        let (chain, rates) = self.chain(e)?;
        let alive = chain.step(rates);
        let (polls, faults) = match e {
            Entity::Connection { .. } => (
                &mut self.counts.connection_polls,
                &mut self.counts.connection_faults,
            ),
            Entity::Guest(_) => (&mut self.counts.guest_polls, &mut self.counts.guest_faults),
            Entity::Host(_) => (&mut self.counts.host_polls, &mut self.counts.host_faults),
        };
        *polls += 1;
        *faults += u64::from(!alive);
        Ok(alive)
    }

    /// Current flag, without drawing.
    pub fn peek(&self, e: Entity) -> Result<bool> {
        let unknown = || Error::UnknownEntity(format!("{e:?}"));
        match e {
            Entity::Guest(g) => self.guests.get(g).map(|c| c.alive).ok_or_else(unknown),
            Entity::Host(i) => self.hosts.get(i).map(|c| c.alive).ok_or_else(unknown),
            Entity::Connection { guest, host } => {
                let h = self.hosts.len();
                if host >= h {
                    return Err(unknown());
                }
                self.connections
                    .get(guest * h + host)
                    .map(|c| c.alive)
                    .ok_or_else(unknown)
            }
        }
    }

    /// Polls the connection; usable only if the guest and host flags are
    /// also alive. Those two are read as they stand, not advanced.
    pub fn connection_usable(&mut self, guest: usize, host: usize) -> Result<bool> {
        let link = self.poll(Entity::Connection { guest, host })?;
        Ok(link && self.peek(Entity::Guest(guest))? && self.peek(Entity::Host(host))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_down_rate_never_dies() {
        let mut rng = SimRng::seed_from_u64(1);
        assert!((0..10_000).all(|_| sample_transition(true, 0.0, 0.0, &mut rng)));
    }

    #[test]
    fn forced_rates_alternate() {
        let mut rng = SimRng::seed_from_u64(1);
        let mut alive = true;
        let trace: Vec<bool> = (0..6)
            .map(|_| {
                alive = sample_transition(alive, 1.0, 1.0, &mut rng);
                alive
            })
            .collect();
        assert_eq!(trace, [false, true, false, true, false, true]);
    }

    #[test]
    fn absorbing_guest_death() {
        let cfg = FaultConfig {
            guest: Rates::new(1.0, 0.0),
            ..Default::default()
        };
        let mut link = LinkState::new(cfg, 2, 1, 0).unwrap();
        assert!((0..50).all(|_| !link.poll(Entity::Guest(0)).unwrap()));
        assert!(!link.connection_usable(0, 0).unwrap());
        assert!(link.connection_usable(1, 0).unwrap());
    }

    #[test]
    fn unknown_entities_are_errors() {
        let mut link = LinkState::new(FaultConfig::none(), 2, 2, 0).unwrap();
        assert!(link.poll(Entity::Guest(2)).is_err());
        assert!(link.poll(Entity::Connection { guest: 0, host: 2 }).is_err());
        assert!(link.peek(Entity::Host(5)).is_err());
    }

    #[test]
    fn out_of_range_rate_names_the_key() {
        let cfg = FaultConfig {
            host: Rates::new(1.3, 1.0),
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("faults.host.down"), "{err}");
    }

    #[test]
    fn traces_are_reproducible() {
        let cfg = FaultConfig {
            connection: Rates::new(0.3, 0.5),
            ..Default::default()
        };
        let trace = |seed| {
            let mut l = LinkState::new(cfg, 3, 2, seed).unwrap();
            (0..200)
                .map(|i| l.connection_usable(i % 3, i % 2).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(trace(4), trace(4));
        assert_ne!(trace(4), trace(5));
    }
}
