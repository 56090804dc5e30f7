//! Markov crash-fault chains: a short availability trace per entity kind and
//! the long-run alive fraction against `up / (up + down)`.

use dvfl::faults::{Entity, FaultConfig, LinkState, Rates};

fn trace(link: &mut LinkState, e: Entity, n: usize) -> String {
    (0..n)
        .map(|_| if link.poll(e).unwrap() { '#' } else { '.' })
        .collect()
}

fn main() -> dvfl::Result<()> {
    for (down, up) in [(0.3, 1.0), (0.3, 0.5), (0.3, 0.1), (0.6, 0.5)] {
        let cfg = FaultConfig {
            connection: Rates::new(down, up),
            guest: Rates::new(down, up),
            host: Rates::new(down, up),
        };
        let mut link = LinkState::new(cfg, 2, 2, 7)?;
        println!("down {down} up {up}");
        println!("  guest 0     {}", trace(&mut link, Entity::Guest(0), 64));
        println!("  host 1      {}", trace(&mut link, Entity::Host(1), 64));
        println!(
            "  conn (0,1)  {}",
            trace(&mut link, Entity::Connection { guest: 0, host: 1 }, 64)
        );

        let polls = 100_000;
        let alive = (0..polls)
            .filter(|_| link.poll(Entity::Guest(1)).unwrap())
            .count();
        println!(
            "  alive fraction over {polls} polls: {:.4} (stationary {:.4})",
            alive as f64 / polls as f64,
            Rates::new(down, up).stationary_alive()
        );
    }
    Ok(())
}
