//! Communication volume of the guest-to-host schedule.

use super::config::ExperimentConfig;

/// Communication epochs among `guest_epochs`: the first epoch of every
/// complete window of `period` epochs.
pub fn communication_epochs(guest_epochs: usize, period: usize) -> usize {
    guest_epochs.checked_div(period).unwrap_or(0)
}

pub fn is_communication_epoch(epoch: usize, guest_epochs: usize, period: usize) -> bool {
    period > 0
        && epoch.is_multiple_of(period)
        && epoch / period < communication_epochs(guest_epochs, period)
}

/// Bits one guest sends: every sample's activation, to every host, once per
/// communication epoch, as 32-bit floats.
pub fn comm_bits(
    hosts: usize,
    guest_epochs: usize,
    period: usize,
    samples: usize,
    activation_dim: usize,
) -> u64 {
    hosts as u64
        * communication_epochs(guest_epochs, period) as u64
        * samples as u64
        * activation_dim as u64
        * 32
}

/// `comm_bits` for a configuration whose guests each train on `samples`
/// entities.
pub fn comm_cost(cfg: &ExperimentConfig, samples: usize) -> u64 {
    comm_bits(
        cfg.hosts,
        cfg.epochs.guest,
        cfg.comm_period,
        samples,
        cfg.arch.guest_output(cfg.guests),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_matches_window_count() {
        for n in 0..30 {
            for k in 1..25 {
                let counted = (0..n).filter(|&e| is_communication_epoch(e, n, k)).count();
                assert_eq!(counted, communication_epochs(n, k));
            }
        }
    }

    #[test]
    fn period_longer_than_training_sends_nothing() {
        assert_eq!(comm_bits(4, 20, 21, 60_000, 80), 0);
        assert!(!is_communication_epoch(0, 20, 21));
    }

    #[test]
    fn windows_open_with_a_communication_epoch() {
        let on: Vec<usize> = (0..20)
            .filter(|&e| is_communication_epoch(e, 20, 5))
            .collect();
        assert_eq!(on, [0, 5, 10, 15]);
        // 15 does not fit twice in 20
        let on: Vec<usize> = (0..20)
            .filter(|&e| is_communication_epoch(e, 20, 15))
            .collect();
        assert_eq!(on, [0]);
    }
}
