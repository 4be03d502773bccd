// Extract the first obstruction class of L along Y and reduce it to the
// class of the affine bundle.

use obstruction::cech::{cocycle_residual, extract_u1, reduce_to_base_class, to_f_frame};
use obstruction::grauert::build_model;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = build_model(4, 2, 1, 3)?;
    let l = model.bundle_l()?;

    let flat = l.restrict_to_y();
    println!("L|_Y trivial: {}", flat.is_trivial());

    let u1 = extract_u1(&l)?;
    print!("u1 =\n{u1}");
    for t in model.nerve.triples() {
        assert!(cocycle_residual(&u1, t)?.is_zero());
    }
    print!("in the frames of F:\n{}", to_f_frame(&u1));

    let report = reduce_to_base_class(&model, &u1)?;
    println!("coboundary system:");
    for eq in &report.equations {
        println!("  ({},{}): {} = 0", eq.pair.0, eq.pair.1, eq.expected);
    }
    println!("{}", report.conclusion);
    assert!(report.equivalence_verified);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
