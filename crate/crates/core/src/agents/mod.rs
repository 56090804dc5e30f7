//! DVFL participants: guests, hosts, and the label owner.

pub mod arch;
pub mod guest;
pub mod host;
pub mod owner;
pub mod register;
pub mod replay;

pub use arch::ArchConfig;
pub use guest::{guest_train_round, Guest, GuestRound};
pub use host::{host_ingest, host_train_round, Host, HostRound, Ingest};
pub use owner::{encode_entity, owner_loss, owner_train_epoch, predict, Owner};
pub use register::{CommRegister, Message};
pub use replay::{ReplayBuffer, ReplayEntry};
