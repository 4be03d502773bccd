// Parse expressions over the chart nerve and print their normal forms.

use obstruction::expr::{parse_expr, xi};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 3;
    for text in [
        "a(1,3)",
        "a(3,1)",
        "xi(1,3)",
        "xi(2,1)",
        "a(1,2)*a(2,3) - a(1,3)",
        "xi(1,2) + a(1,2)*xi(2,3) - xi(1,3)",
        "(1 + x)^2 / 2",
    ] {
        let e = parse_expr(text, n)?;
        println!("{text:<40} => {e}");
    }

    let reversed = parse_expr("xi(3,1)", n)?;
    let expected = -(parse_expr("a(1,3)^-1", n)? * xi(1, 3));
    assert_eq!(reversed, expected);

    match parse_expr("a(1,4)", n) {
        Err(e) => println!("a(1,4) on 3 charts: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
