// Intersection numbers on the ruled surface for a few degrees of F.

use obstruction::surface::{class_l, intersect, NSClass};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (y, f) = (NSClass::section(), NSClass::fiber());
    println!(
        "{:>3} {:>5} {:>5} {:>5} {:>5}",
        "d", "Y.Y", "L.Y", "L.f", "L.L"
    );
    for d in 1..=4 {
        let l = class_l(d);
        println!(
            "{d:>3} {:>5} {:>5} {:>5} {:>5}",
            intersect(y, y, d),
            intersect(l, y, d),
            intersect(l, f, d),
            intersect(l, l, d)
        );
        assert_eq!(intersect(l, y, d), 0);
        assert_eq!(intersect(l, l, d), d);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
