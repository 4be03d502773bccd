// Chart changes of the fibre coordinate and the bundle transitions as jets.

use obstruction::grauert::build_model;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = build_model(3, 2, 1, 4)?;
    let (j, k) = (1, 2);

    let forward = model.theta_transition(j, k)?;
    let backward = model.theta_inverse(j, k)?;
    println!("theta_{j}(theta_{k}) = {forward}");
    println!("theta_{k}(theta_{j}) = {backward}");
    println!("round trip          = {}", forward.compose(&backward)?);

    let series_inverse = forward.invert_series(j)?;
    assert_eq!(series_inverse, backward);

    for bundle in [
        model.bundle_pullback_f()?,
        model.bundle_divisor_y()?,
        model.bundle_l()?,
    ] {
        println!("{:<4} g_{j}{k} = {}", bundle.name, bundle.transition(j, k)?);
        for (a, b, c) in model.nerve.ordered_triples() {
            assert!(bundle.cocycle_residual(a, b, c)?.is_zero());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
