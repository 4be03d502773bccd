// Cross-check the symbolic results numerically, first on constant
// transition data and then on data depending on the base coordinate.

use obstruction::grauert::build_model;
use obstruction::oracle::{constants_instance, instantiate, run_all, OracleConfig, TRUNCATION_TOL};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = build_model(3, 2, 1, 3)?;

    let nm = instantiate(&model, &constants_instance(3), 10, 7)?;
    let report = run_all(&nm, TRUNCATION_TOL)?;
    println!("constants:  {}", serde_json::to_string(&report)?);
    assert!(report.pass());

    let config = OracleConfig::from_json(
        r#"{
            "generators": {
                "a(1,2)": "2 + x",
                "a(2,3)": "3 - x^2",
                "xi(1,2)": "1/2 + x",
                "xi(2,3)": "-1/3"
            },
            "samples": 20,
            "seed": 1
        }"#,
    )?;
    let gens = config.assignment(3)?;
    let nm = instantiate(&model, &gens, config.samples, config.seed)?;
    let report = run_all(&nm, config.tolerance)?;
    println!("x-varying: {}", serde_json::to_string(&report)?);
    assert!(report.pass());

    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
