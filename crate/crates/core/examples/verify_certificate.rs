// Build the full certificate, then break one transition and watch the
// certificate fail at the first affected step.

use obstruction::expr::{Expr, Gen};
use obstruction::grauert::build_model;
use obstruction::surface::{render_markdown, run_verification, Bundles, OracleSetup, VerifyParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = VerifyParams::default();
    let cert = run_verification(&params, None, Some(&OracleSetup::constants(3, 0)));
    println!("{}", render_markdown(&cert));
    assert!(cert.is_success());

    let model = build_model(params.charts, params.genus, params.deg_f, params.order)?;
    let mut bundles = Bundles::from_model(&model)?;
    let doubled = Expr::int(2) * Expr::gen(Gen::A(1));
    bundles.divisor_y = bundles
        .divisor_y
        .perturb(1, 2, |c| c.substitute(Gen::A(1), &doubled))?;
    let broken = run_verification(&params, Some(bundles), None);
    println!("perturbed [Y]: {}", broken.verdict);
    assert!(!broken.is_success());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
