// Nonvanishing of H^1(R, O([p])) from Riemann–Roch, for several genera.

use obstruction::surface::{check_h1_chain, euler_char, riemann_roch_steps, Status};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for g in 0..=5 {
        let chi = euler_char(g, 1);
        match check_h1_chain(g) {
            Ok(excess) => println!("g = {g}: chi = {chi:>2}, h^1 >= h^0 + {excess} >= 1"),
            Err(e) => println!("g = {g}: chi = {chi:>2}, {e}"),
        }
    }
    let steps = riemann_roch_steps(2);
    assert!(steps.iter().all(|s| s.status != Status::Failed));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
