// Evaluate arithmetic with exact integers and real division.

use codegen::arith::evaluate_expression;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for expr in ["2 + 3 * (4**2) - 8 / 2", "7 // 2", "-7 % 3", "2 ** 100", "(1 + 2) * 3.5"] {
        let value = evaluate_expression(expr)?;
        println!("{expr:<24} = {value}");
    }
    assert_eq!(evaluate_expression("2 + 3 * (4**2) - 8 / 2")?.to_string(), "46.0");

    // Errors are values with a stable kind.
    let err = evaluate_expression("1 / (3 - 3)").unwrap_err();
    println!("1 / (3 - 3)              -> {}", err.kind());
    assert_eq!(err.kind(), "DivisionByZero");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
